use std::fs;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use submeasure_lab::algebra::covering_multiplicity;
use submeasure_lab::conclab::{
    alpha_exact, alpha_sampled, berry_esseen_bound, claim_msds_check, covering_concentration_probe, mc_tail, AlphaResult,
    FiniteSpace, ProbeOptions, ALPHA_EXACT_POINT_LIMIT,
};
use submeasure_lab::covnum::{
    classify_with, convergence_diagnostic, covering_number, default_xi_grid, h_phi_with, pathology_index, HPhiOptions,
    HPhiResult,
};
use submeasure_lab::entropy::{ent_product, herbst_chain_check, ledoux_check, shearer_check, tail_bound_from_norm, InequalityCheck};
use submeasure_lab::json::{
    build_partition, AlphaModeSpec, AlphaSpec, BuiltMetric, ConcentrateDoc, DistDoc, EntropyDoc, ExampleEasyDoc, FamilyDoc,
    PathologicalDoc, ProbeDoc, SubmeasureDoc,
};
use submeasure_lab::metric::{normalized_hamming, DiffCost};
use submeasure_lab::submeasure::{berry_esseen_params, example_easy, example_easy_check};
use submeasure_lab::{Exact, GroundSet, Submeasure};

use crate::config::{Command, RunConfig};
use crate::output::{fmt_exact, fmt_f64, fmt_opt, fmt_set, Report, Table};
use crate::CliError;

/// Grid length when neither the document nor `--xi-grid` gives one.
const DEFAULT_GRID_STEPS: usize = 10;

pub fn dispatch(config: &RunConfig) -> Result<Report, CliError> {
    match config.command {
        Command::Covnum => covnum(config),
        Command::Hphi => hphi(config),
        Command::Classify => classify(config),
        Command::Pathology => pathology(config),
        Command::Dist => dist(config),
        Command::EntropyCheck => entropy_check(config),
        Command::Concentrate => concentrate(config),
        Command::Probe => probe(config),
        Command::ExampleEasy => example_easy_cmd(config),
        Command::ExamplePathological => example_pathological(config),
    }
}

fn parse_doc<T: DeserializeOwned>(name: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let msg = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m);
        let what = if e.is_data() { "invalid document" } else { "malformed JSON" };
        CliError::Validation(format!("{what} in {name} at line {}, column {}: {msg}", e.line(), e.column()))
    })
}

fn read_doc<T: DeserializeOwned>(config: &RunConfig) -> Result<T, CliError> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("{} needs --input", config.command.name())))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    parse_doc(&path.display().to_string(), &text)
}

fn read_optional_doc<T: DeserializeOwned + Default>(config: &RunConfig) -> Result<T, CliError> {
    match config.input {
        Some(_) => read_doc(config),
        None => Ok(T::default()),
    }
}

fn check_atoms(config: &RunConfig, n: usize) -> Result<(), CliError> {
    if n > config.limits.max_atoms {
        return Err(CliError::Limit(format!("{n} atoms exceed the cap of {} (--max-atoms)", config.limits.max_atoms)));
    }
    Ok(())
}

fn check_trials(config: &RunConfig, what: &str, n: u64) -> Result<(), CliError> {
    if n > config.limits.max_trials {
        return Err(CliError::Limit(format!("{n} {what} exceed the cap of {} (--max-trials)", config.limits.max_trials)));
    }
    Ok(())
}

fn hphi_options(config: &RunConfig) -> HPhiOptions {
    HPhiOptions { sweep_limit: config.limits.max_sweep, ..HPhiOptions::default() }
}

fn xi_grid(config: &RunConfig, doc_grid: Option<Vec<Exact>>, phi: &Submeasure) -> Vec<Exact> {
    config.xi_grid.clone().or(doc_grid).unwrap_or_else(|| default_xi_grid(phi, DEFAULT_GRID_STEPS))
}

fn load_submeasure(config: &RunConfig) -> Result<(Submeasure, Option<Vec<Exact>>), CliError> {
    let doc: SubmeasureDoc = read_doc(config)?;
    let phi = doc.submeasure.build()?;
    check_atoms(config, phi.ground().n_atoms())?;
    Ok((phi, doc.xi_grid))
}

fn covnum(config: &RunConfig) -> Result<Report, CliError> {
    let doc: FamilyDoc = read_doc(config)?;
    check_atoms(config, doc.n_atoms)?;
    let cert = covering_number(GroundSet::new(doc.n_atoms)?, &doc.family)?;
    let mut table = Table::new(&["term", "set", "multiplicity"]);
    for (i, t) in cert.primal.iter().enumerate() {
        table.push(vec![i.to_string(), fmt_set(t.set), t.multiplicity.to_string()]);
    }
    Report::new(config.command, json!({ "n_atoms": doc.n_atoms, "certificate": cert }), table)
}

fn hphi_table(points: &[HPhiResult]) -> Table {
    let mut table = Table::new(&[
        "xi", "xi_f64", "h", "h_f64", "xi_h", "xi_h_f64", "length", "multiplicity", "method", "lower_bound",
    ]);
    for p in points {
        let method = serde_json::to_value(p.method).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        table.push(vec![
            fmt_exact(&p.xi),
            fmt_f64(p.xi.to_f64()),
            fmt_exact(&p.h),
            fmt_f64(p.h.to_f64()),
            fmt_exact(&p.xi_h),
            fmt_f64(p.xi_h.to_f64()),
            p.covering.length.to_string(),
            p.covering.multiplicity.to_string(),
            method,
            p.lower_bound.to_string(),
        ]);
    }
    table
}

#[derive(Serialize)]
struct ChristensenRow<'a> {
    xi: &'a Exact,
    xi_h: &'a Exact,
    one_minus_xi: Exact,
    satisfied: bool,
}

fn hphi(config: &RunConfig) -> Result<Report, CliError> {
    let (phi, doc_grid) = load_submeasure(config)?;
    let grid = xi_grid(config, doc_grid, &phi);
    if grid.is_empty() {
        return Err(CliError::Validation("empty xi grid".into()));
    }
    let opts = hphi_options(config);
    let points: Vec<HPhiResult> = grid
        .par_iter()
        .map(|xi| h_phi_with(&phi, xi, &opts))
        .collect::<Result<_, _>>()?;
    let one = Exact::integer(1);
    let christensen: Vec<ChristensenRow> = points
        .iter()
        .filter(|p| p.xi < one)
        .map(|p| {
            let one_minus_xi = &one - &p.xi;
            ChristensenRow { xi: &p.xi, xi_h: &p.xi_h, satisfied: p.xi_h >= one_minus_xi, one_minus_xi }
        })
        .collect();
    let convergence = if points.len() >= 3 {
        let samples: Vec<(Exact, Exact)> = points.iter().map(|p| (p.xi.clone(), p.xi_h.clone())).collect();
        Some(convergence_diagnostic(&samples)?)
    } else {
        None
    };
    let result = json!({
        "total": phi.total(),
        "points": points,
        "christensen": christensen,
        "convergence": convergence,
    });
    Report::new(config.command, result, hphi_table(&points))
}

fn classify(config: &RunConfig) -> Result<Report, CliError> {
    let (phi, doc_grid) = load_submeasure(config)?;
    let grid = xi_grid(config, doc_grid, &phi);
    let report = classify_with(&phi, &grid, &hphi_options(config))?;
    let table = hphi_table(&report.points);
    Report::new(config.command, report, table)
}

fn pathology(config: &RunConfig) -> Result<Report, CliError> {
    let (phi, _) = load_submeasure(config)?;
    let p = pathology_index(&phi)?;
    let mut table = Table::new(&["atom", "weight", "weight_f64"]);
    for (a, w) in p.witness.weights().iter().enumerate() {
        table.push(vec![a.to_string(), fmt_exact(w), fmt_f64(w.to_f64())]);
    }
    let result = json!({
        "total": phi.total(),
        "mass": p.mass,
        "witness": p.witness,
        "rows_used": p.rows_used,
    });
    Report::new(config.command, result, table)
}

#[derive(Serialize)]
struct DistRow {
    x: Vec<u32>,
    y: Vec<u32>,
    distance: Exact,
    /// Cover entries realizing the distance, for cover metrics.
    witness: Option<Vec<usize>>,
}

fn dist(config: &RunConfig) -> Result<Report, CliError> {
    let doc: DistDoc = read_doc(config)?;
    let metric = doc.metric.build()?;
    let (kind, n_coords) = match &metric {
        BuiltMetric::Cover(m) => ("cover", m.n_coords()),
        BuiltMetric::Blocks(m) => ("blocks", m.n_coords()),
        BuiltMetric::Hamming(n) => ("hamming", *n),
    };
    check_atoms(config, n_coords)?;
    let rows: Vec<DistRow> = doc
        .pairs
        .iter()
        .map(|(x, y)| {
            let (distance, witness) = match &metric {
                BuiltMetric::Cover(m) => {
                    m.dist(x, y)?;
                    let (d, chosen) = m.witness(x.difference(y)?)?;
                    (d, Some(chosen))
                }
                BuiltMetric::Blocks(m) => (m.dist(x, y)?, None),
                BuiltMetric::Hamming(n) => {
                    if x.len() != *n {
                        return Err(CliError::Validation(format!("point has {} coordinates, metric expects {n}", x.len())));
                    }
                    (normalized_hamming(x, y)?, None)
                }
            };
            Ok(DistRow { x: x.coords().to_vec(), y: y.coords().to_vec(), distance, witness })
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new(&["pair", "x", "y", "distance", "distance_f64", "witness"]);
    let join = |v: &[u32]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    for (i, r) in rows.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            join(&r.x),
            join(&r.y),
            fmt_exact(&r.distance),
            fmt_f64(r.distance.to_f64()),
            r.witness.as_ref().map(|w| w.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")).unwrap_or_default(),
        ]);
    }
    Report::new(config.command, json!({ "metric": kind, "n_coords": n_coords, "pairs": rows }), table)
}

#[derive(Serialize)]
struct CheckRow {
    #[serde(flatten)]
    check: InequalityCheck,
    holds: bool,
}

impl From<InequalityCheck> for CheckRow {
    fn from(check: InequalityCheck) -> Self {
        CheckRow { holds: check.holds(), check }
    }
}

#[derive(Serialize)]
struct ShearerRow {
    cover: usize,
    k: usize,
    #[serde(flatten)]
    check: CheckRow,
}

fn entropy_check(config: &RunConfig) -> Result<Report, CliError> {
    let doc: EntropyDoc = read_doc(config)?;
    let product = doc.product()?;
    check_atoms(config, product.n_coords())?;
    let covers = doc.covers.iter().map(|c| c.build()).collect::<Result<Vec<_>, _>>()?;
    let joint = product.joint();
    let mut table = Table::new(&["function", "check", "cover", "param", "lhs", "rhs", "slack", "holds", "hypothesis"]);
    let mut functions = Vec::new();
    let mut all_hold = true;
    for (fi, f) in doc.functions.iter().enumerate() {
        let ledoux = CheckRow::from(ledoux_check(f, &joint)?);
        all_hold &= ledoux.holds;
        table.push(vec![
            fi.to_string(),
            "ledoux".into(),
            String::new(),
            String::new(),
            fmt_f64(ledoux.check.lhs),
            fmt_f64(ledoux.check.rhs),
            fmt_f64(ledoux.check.slack),
            ledoux.holds.to_string(),
            String::new(),
        ]);
        let mut shearer = Vec::new();
        for (ci, cover) in covers.iter().enumerate() {
            let k = covering_multiplicity(cover);
            let row = CheckRow::from(shearer_check(f, &product, cover, k)?);
            all_hold &= row.holds;
            table.push(vec![
                fi.to_string(),
                "shearer".into(),
                ci.to_string(),
                k.to_string(),
                fmt_f64(row.check.lhs),
                fmt_f64(row.check.rhs),
                fmt_f64(row.check.slack),
                row.holds.to_string(),
                String::new(),
            ]);
            shearer.push(ShearerRow { cover: ci, k, check: row });
        }
        let herbst = match &doc.herbst {
            Some(h) => {
                let r = herbst_chain_check(f, &product, h.d, &h.lambda_grid, &h.r_grid)?;
                all_hold &= r.violations == 0;
                for l in &r.lambdas {
                    table.push(vec![
                        fi.to_string(),
                        "herbst_mgf".into(),
                        String::new(),
                        fmt_f64(l.lambda),
                        fmt_f64(l.mgf),
                        fmt_f64(l.mgf_bound),
                        fmt_f64(l.mgf_bound - l.mgf),
                        l.conclusion.to_string(),
                        l.hypothesis_all.to_string(),
                    ]);
                }
                for t in &r.tails {
                    table.push(vec![
                        fi.to_string(),
                        "herbst_tail".into(),
                        String::new(),
                        fmt_f64(t.r),
                        fmt_f64(t.tail),
                        fmt_f64(t.bound),
                        fmt_f64(t.bound - t.tail),
                        t.holds.to_string(),
                        t.hypothesis_all.to_string(),
                    ]);
                }
                Some(r)
            }
            None => None,
        };
        let entropy = if f.iter().all(|&v| v >= 0.0) { Some(ent_product(f, &product)?) } else { None };
        functions.push(json!({
            "index": fi,
            "entropy": entropy,
            "ledoux": ledoux,
            "shearer": shearer,
            "herbst": herbst,
        }));
    }
    let result = json!({
        "n_coords": product.n_coords(),
        "n_points": product.n_points(),
        "functions": functions,
        "all_hold": all_hold,
    });
    Report::new(config.command, result, table)
}

#[derive(Serialize)]
struct AlphaRow {
    #[serde(flatten)]
    alpha: AlphaResult,
    /// `exp(−k ε² / (8‖w‖²))`.
    bound: f64,
}

fn concentrate(config: &RunConfig) -> Result<Report, CliError> {
    let mut doc: ConcentrateDoc = read_doc(config)?;
    if let Some(t) = config.trials {
        doc.trials = t;
    }
    if let Some(s) = config.seed {
        doc.seed = s;
    }
    if let Some(eps) = &config.epsilon {
        match &mut doc.alpha {
            Some(a) => a.epsilons = eps.clone(),
            None => doc.alpha = Some(AlphaSpec { epsilons: eps.clone(), mode: AlphaModeSpec::Auto, family_budget: 2000 }),
        }
    }
    check_trials(config, "trials", doc.trials)?;
    check_atoms(config, doc.dists.len())?;
    let scenario = doc.scenario()?;
    let tail = mc_tail(&scenario)?;

    let alpha = match &doc.alpha {
        None => None,
        Some(spec) => {
            check_trials(config, "sampled sets", spec.family_budget as u64)?;
            let space = FiniteSpace::product(scenario.dists(), &scenario.metric())?;
            let exhaustive = match spec.mode {
                AlphaModeSpec::Auto => space.n_points() <= ALPHA_EXACT_POINT_LIMIT,
                AlphaModeSpec::Exhaustive => true,
                AlphaModeSpec::Sampled => false,
            };
            let results = if exhaustive {
                alpha_exact(&space, &spec.epsilons)?
            } else {
                let levels = [scenario.function_table()?];
                spec.epsilons
                    .iter()
                    .map(|e| alpha_sampled(&space, e, spec.family_budget, doc.seed, &levels))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let rows = results
                .into_iter()
                .map(|a| {
                    let bound = tail_bound_from_norm(tail.k, tail.weight_norm_sq, a.epsilon.to_f64())?.concentration;
                    Ok(AlphaRow { alpha: a, bound })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Some(rows)
        }
    };

    let mut table = Table::new(&["r", "successes", "empirical", "ci_lo", "ci_hi", "ci_half_width", "bound", "consistent"]);
    for row in &tail.rows {
        table.push(vec![
            fmt_f64(row.r),
            row.successes.to_string(),
            fmt_f64(row.empirical),
            fmt_f64(row.ci_lo),
            fmt_f64(row.ci_hi),
            fmt_f64(row.ci_half_width),
            row.bound.map(fmt_f64).unwrap_or_default(),
            fmt_opt(row.consistent),
        ]);
    }
    Report::new(config.command, json!({ "tail": tail, "alpha": alpha }), table)
}

fn probe(config: &RunConfig) -> Result<Report, CliError> {
    let mut doc: ProbeDoc = read_doc(config)?;
    if let Some(eps) = &config.epsilon {
        doc.epsilons = eps.clone();
    }
    if let Some(s) = config.seed {
        doc.seed = s;
    }
    check_trials(config, "sampled sets", doc.family_budget as u64)?;
    let phi = doc.submeasure.build()?;
    check_atoms(config, phi.ground().n_atoms())?;
    let chain = doc
        .chain
        .iter()
        .map(|blocks| build_partition(phi.ground(), blocks))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = ProbeOptions { family_budget: doc.family_budget, seed: doc.seed, ..ProbeOptions::default() };
    let report = covering_concentration_probe(&phi, &chain, &doc.epsilons, &opts)?;
    let mut table = Table::new(&["partition", "blocks", "epsilon", "epsilon_f64", "alpha", "lower_bound", "bound"]);
    for row in &report.rows {
        table.push(vec![
            row.partition.to_string(),
            row.blocks.to_string(),
            fmt_exact(&row.alpha.epsilon),
            fmt_f64(row.alpha.epsilon.to_f64()),
            fmt_f64(row.alpha.alpha),
            row.alpha.lower_bound.to_string(),
            fmt_f64(row.bound),
        ]);
    }
    Report::new(config.command, report, table)
}

fn example_easy_cmd(config: &RunConfig) -> Result<Report, CliError> {
    let mut doc: ExampleEasyDoc = read_optional_doc(config)?;
    if let Some(d) = config.depth {
        doc.depth = d;
    }
    if let Some(t) = config.trials {
        doc.samples = Some(t);
    }
    if let Some(s) = config.seed {
        doc.seed = s;
    }
    if let Some(samples) = doc.samples {
        check_trials(config, "sampled sets", samples)?;
    }
    let ex = example_easy(doc.depth, &doc.rule)?;
    check_atoms(config, ex.ground().n_atoms())?;
    let check = example_easy_check(&ex, doc.samples.map(|s| (s, doc.seed)))?;
    let mut table = Table::new(&["level", "m", "xi", "xi_f64", "mu_mass", "mu_mass_f64", "hypothesis_hits"]);
    for n in 1..=check.depth {
        let mass = &check.mu_mass[n - 1];
        table.push(vec![
            n.to_string(),
            check.m[n - 1].to_string(),
            fmt_exact(&check.xi[n]),
            fmt_f64(check.xi[n].to_f64()),
            fmt_exact(mass),
            fmt_f64(mass.to_f64()),
            check.hypothesis_hits[n - 1].to_string(),
        ]);
    }
    let result = json!({
        "rule": doc.rule,
        "seed": doc.samples.map(|_| doc.seed),
        "check": check,
    });
    Report::new(config.command, result, table)
}

fn example_pathological(config: &RunConfig) -> Result<Report, CliError> {
    let mut doc: PathologicalDoc = read_optional_doc(config)?;
    if let Some(d) = config.depth {
        doc.i_max = d;
    }
    let theta = doc.theta.build()?;
    let params = berry_esseen_params(&theta, doc.i_max, doc.k_const)?;
    let claims = doc
        .trees
        .iter()
        .map(|t| {
            let spec = t.build()?;
            let report = claim_msds_check(&spec)?;
            Ok(json!({ "m": t.m, "d": t.d, "report": report }))
        })
        .collect::<Result<Vec<Value>, CliError>>()?;
    let claims_hold = claims.iter().all(|c| {
        c["report"]["size_bound_holds"] == Value::Bool(true) && c["report"]["inclusion_holds"] != Value::Bool(false)
    });
    let bounds = doc
        .bounds
        .iter()
        .map(|b| berry_esseen_bound(b.a, b.delta, b.n, doc.k_const))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&["i", "w", "ln_w", "m", "ln_m", "eps", "ln_eps"]);
    for i in 0..=params.i_max {
        let level = i.checked_sub(1).and_then(|j| params.levels.get(j));
        table.push(vec![
            i.to_string(),
            level.map(|l| fmt_f64(l.w)).unwrap_or_default(),
            level.map(|l| fmt_f64(l.ln_w)).unwrap_or_default(),
            level.and_then(|l| l.m).map(|m| m.to_string()).unwrap_or_default(),
            level.map(|l| fmt_f64(l.ln_m)).unwrap_or_default(),
            fmt_f64(params.eps[i]),
            fmt_f64(params.ln_eps[i]),
        ]);
    }
    let result = json!({
        "checks_hold": params.checks.all(),
        "claims_hold": claims_hold,
        "params": params,
        "claims": claims,
        "bounds": bounds,
    });
    Report::new(config.command, result, table)
}
