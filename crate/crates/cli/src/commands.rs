use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use soa_core::fairness::{check, Attribution, Constraint, Verdict};
use soa_core::game::{shapley_owen, Coalition};
use soa_core::model::Model;
use soa_core::pce::{build_sparse, Pce, QNorm, SparseConfig};
use soa_core::scalar::{format_rational, parse_rational, rational_to_f64};
use soa_core::spectral::{self, spectral_shapley_owen, ElementaryTable};
use soa_core::transform::{DistributionSpec, Family, Marginal};

use crate::output::{emit, read, read_text, sha256_hex, sorted_json, write_atomic, CliError, CliResult};
use crate::{Globals, PceOpts};

/// Wall-clock stage timings, recorded only with `--timing`.
struct Timer {
    enabled: bool,
    start: Instant,
    stages: BTreeMap<String, f64>,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            start: Instant::now(),
            stages: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        if self.enabled {
            let now = Instant::now();
            self.stages
                .insert(format!("{stage}_ms"), (now - self.start).as_secs_f64() * 1e3);
            self.start = now;
        }
    }

    fn report(&self) -> Option<&BTreeMap<String, f64>> {
        self.enabled.then_some(&self.stages)
    }

    fn print(&self) {
        for (k, v) in self.report().into_iter().flatten() {
            eprintln!("timing {k}: {v:.1}");
        }
    }
}

fn bin_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".bin");
    PathBuf::from(s)
}

pub fn table(g: &Globals, d: usize, max_order: Option<usize>, out: &Path, force: bool) -> CliResult<()> {
    let mut timer = Timer::new(g.timing);
    let max_order = max_order.unwrap_or(d.min(6));
    let fresh = ElementaryTable::precompute(d, max_order)?;
    timer.lap("precompute");
    let json = fresh.to_json();
    let bytes = fresh.to_bytes()?;
    let companion = bin_path(out);
    if out.exists() && !force {
        let existing = read_text(out)?;
        let loaded = ElementaryTable::from_json(&existing)?;
        // an on-disk table may carry appended supports; the precomputed part must agree
        let agrees = loaded.dim() == d && loaded.max_order() == max_order && covers_fresh(&loaded, &fresh)?;
        if !agrees {
            return Err(CliError::Usage(format!(
                "{} exists and does not match a fresh table for d = {d}, max_order = {max_order} (use --force)",
                out.display()
            )));
        }
        let loaded_bytes = loaded.to_bytes()?;
        if !companion.exists() || read(&companion)? != loaded_bytes {
            write_atomic(&companion, &loaded_bytes)?;
        }
        eprintln!("verified {} ({} entries)", out.display(), loaded.len());
    } else {
        write_atomic(out, json.as_bytes())?;
        write_atomic(&companion, &bytes)?;
        eprintln!("wrote {} ({} entries)", out.display(), fresh.len());
    }
    timer.lap("write");
    timer.print();
    Ok(())
}

fn covers_fresh(loaded: &ElementaryTable, fresh: &ElementaryTable) -> CliResult<bool> {
    let full = Coalition::full(fresh.dim())?;
    for s in full.subsets().filter(|s| !s.is_empty() && s.len() <= fresh.max_order()) {
        for u in s.subsets().filter(|u| !u.is_empty()) {
            if loaded.get(s, u)? != fresh.get(s, u)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True when every input is uniform, so polynomials stay polynomials under the transform.
fn all_uniform(dist: &DistributionSpec) -> bool {
    matches!(dist.family(), Family::Independent(m) if m.iter().all(|m| matches!(m, Marginal::Uniform { .. })))
}

fn sparse_config(g: &Globals, opts: &PceOpts, model: Option<&Model>) -> CliResult<SparseConfig> {
    let q = QNorm::from_rational(&parse_rational(&opts.q).map_err(|_| CliError::Usage(format!("--q: '{}' is not a number", opts.q)))?)?;
    let degree = model
        .filter(|m| all_uniform(m.distribution()))
        .and_then(|m| m.expr().polynomial_degree());
    let (degree_hint, exact_degree) = match (opts.degree_hint, degree) {
        (Some(h), _) => (h, false),
        (None, Some(deg)) => (deg, true),
        (None, None) => (10, false),
    };
    Ok(SparseConfig {
        q,
        epsilon: opts.eps,
        kappa_coeff: opts.kappa,
        p_max: opts.p_max,
        use_chebyshev: opts.chebyshev,
        chebyshev_t: opts.chebyshev_t,
        degree_hint,
        exact_degree,
        seed: g.seed,
        mc_samples: opts.mc_samples,
    })
}

fn load_model(path: &Path) -> CliResult<(Model, String)> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Usage(format!("{}: not UTF-8 text", path.display())))?;
    Ok((Model::from_json(&text)?, sha256_hex(&bytes)))
}

fn model_fn(model: &Model) -> impl Fn(&[f64]) -> soa_core::Result<f64> + Sync + '_ {
    move |x: &[f64]| model.eval(x)
}

fn not_converged(what: &str, pce: &Pce) -> CliError {
    CliError::NotConverged(format!(
        "{what}: expansion did not reach eps = {:e} (epsilon_l = {:e})",
        pce.epsilon(),
        pce.epsilon_l()
    ))
}

pub fn pce(g: &Globals, model_path: &Path, opts: &PceOpts, out: &Path) -> CliResult<()> {
    let mut timer = Timer::new(g.timing);
    let (model, _) = load_model(model_path)?;
    let cfg = sparse_config(g, opts, Some(&model))?;
    let pce = build_sparse(&model_fn(&model), model.distribution(), &cfg)?;
    timer.lap("build");
    write_atomic(out, pce.to_json().as_bytes())?;
    eprintln!(
        "wrote {} ({} terms, epsilon_l = {:e}, converged = {})",
        out.display(),
        pce.len(),
        pce.epsilon_l(),
        pce.converged()
    );
    timer.print();
    if g.strict && !pce.converged() {
        return Err(not_converged(&model_path.display().to_string(), &pce));
    }
    Ok(())
}

pub fn game(model_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let (model, _) = load_model(model_path)?;
    let r = model.exact_game()?;
    let mut text = r.game.to_json();
    text.push('\n');
    emit(out, &text)
}

pub struct AnalyzeArgs {
    pub model: Option<PathBuf>,
    pub pce: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub extend_table: bool,
    pub subsets: String,
    pub constraints: Option<PathBuf>,
    pub opts: PceOpts,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct AttributionRow {
    subset: Coalition,
    value: f64,
    error_bound: f64,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
}

#[derive(Serialize)]
struct PceSummary {
    terms: usize,
    epsilon: f64,
    epsilon_l: f64,
    converged: bool,
    sigma2_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2_method: Option<Value>,
    ordering: Vec<usize>,
}

impl PceSummary {
    fn of(p: &Pce) -> Self {
        Self {
            terms: p.len(),
            epsilon: p.epsilon(),
            epsilon_l: p.epsilon_l(),
            converged: p.converged(),
            sigma2_estimate: p.sigma2_estimate(),
            sigma2_method: p.sigma2_method().map(|m| serde_json::to_value(m).expect("serializable")),
            ordering: p.distribution().ordering(),
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    input_sha256: String,
    input_kind: &'static str,
    distribution: &'a DistributionSpec,
    ordering: Vec<usize>,
    route: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    expansions: Vec<PceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance: Option<String>,
    attributions: Vec<AttributionRow>,
    verdicts: Vec<Verdict>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree_hint: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<&'a BTreeMap<String, f64>>,
}

fn parse_subsets(d: usize, text: &str) -> CliResult<Vec<Coalition>> {
    let subsets: Vec<Coalition> = text
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Coalition::parse(d, s))
        .collect::<soa_core::Result<_>>()?;
    if subsets.is_empty() {
        return Err(CliError::Usage("--subsets names no subset".into()));
    }
    Ok(subsets)
}

fn load_table(path: Option<&Path>, d: usize) -> CliResult<ElementaryTable> {
    let path = path.ok_or_else(|| CliError::Usage("continuous inputs need --table".into()))?;
    let table = ElementaryTable::from_json(&read_text(path)?)?;
    if table.dim() != d {
        return Err(soa_core::Error::DimensionMismatch {
            expected: d,
            found: table.dim(),
        }
        .into());
    }
    Ok(table)
}

fn save_table(path: &Path, table: &ElementaryTable) -> CliResult<()> {
    write_atomic(path, table.to_json().as_bytes())?;
    write_atomic(&bin_path(path), &table.to_bytes()?)
}

pub fn analyze(g: &Globals, a: &AnalyzeArgs) -> CliResult<()> {
    let mut timer = Timer::new(g.timing);
    let constraints = match &a.constraints {
        Some(p) => Constraint::list_from_json(&read_text(p)?)?,
        None => Vec::new(),
    };
    let mut expansions: Vec<Pce> = Vec::new();
    let mut mean = None;
    let mut variance = None;
    let mut degree_hint = None;
    let hash;
    let input_kind;
    let distribution: DistributionSpec;
    let route: Value;
    let rows: Vec<AttributionRow>;

    if let Some(path) = &a.model {
        let (model, h) = load_model(path)?;
        hash = h;
        input_kind = "model";
        distribution = model.distribution().clone();
        let subsets = parse_subsets(model.dim(), &a.subsets)?;
        if distribution.is_discrete() {
            let r = model.exact_game()?;
            timer.lap("enumerate");
            mean = Some(format_rational(&r.mean));
            variance = Some(format_rational(&r.variance));
            route = serde_json::json!({ "route": "exact_enumeration" });
            rows = subsets
                .iter()
                .map(|&u| {
                    let v = shapley_owen(&r.game, u)?;
                    Ok(AttributionRow {
                        subset: u,
                        value: rational_to_f64(&v),
                        error_bound: 0.0,
                        method: "exact-enumeration",
                        exact: Some(format_rational(&v)),
                        kappa: None,
                    })
                })
                .collect::<soa_core::Result<_>>()?;
        } else {
            let cfg = sparse_config(g, &a.opts, Some(&model))?;
            degree_hint = Some(cfg.degree_hint);
            let mut table = load_table(a.table.as_deref(), model.dim())?;
            let f = model_fn(&model);
            if distribution.is_independent() {
                let pce = build_sparse(&f, &distribution, &cfg)?;
                timer.lap("build");
                if a.extend_table {
                    let supports = pce.coefficients().keys().map(|k| k.support());
                    if table.extend(supports)? > 0 {
                        save_table(a.table.as_deref().expect("checked"), &table)?;
                    }
                }
                rows = spectral_rows(&pce, &subsets, &table)?;
                route = serde_json::json!({ "route": "single_expansion" });
                expansions.push(pce);
            } else {
                let analysis = spectral::analyze(&f, &distribution, &cfg, &subsets, &mut table)?;
                timer.lap("build");
                rows = analysis
                    .results
                    .iter()
                    .map(|r| AttributionRow {
                        subset: r.subset,
                        value: r.estimate,
                        error_bound: r.error_bound,
                        method: "spectral",
                        exact: None,
                        kappa: Some(r.kappa),
                    })
                    .collect();
                route = serde_json::to_value(&analysis.route).expect("serializable");
                expansions = analysis.expansions;
            }
        }
    } else {
        let path = a.pce.as_deref().expect("clap requires --model or --pce");
        let bytes = read(path)?;
        hash = sha256_hex(&bytes);
        input_kind = "pce";
        let text = String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{}: not UTF-8 text", path.display())))?;
        let pce = Pce::from_json(&text)?;
        distribution = pce.distribution().clone();
        let subsets = parse_subsets(pce.dim(), &a.subsets)?;
        let mut table = load_table(a.table.as_deref(), pce.dim())?;
        if a.extend_table && table.extend(pce.coefficients().keys().map(|k| k.support()))? > 0 {
            save_table(a.table.as_deref().expect("checked"), &table)?;
        }
        rows = spectral_rows(&pce, &subsets, &table)?;
        route = serde_json::json!({ "route": "single_expansion" });
        expansions.push(pce);
    }
    timer.lap("attribute");

    let attributions: Vec<Attribution> = rows
        .iter()
        .map(|r| Attribution {
            subset: r.subset,
            value: r.value,
            error_bound: r.error_bound,
        })
        .collect();
    let verdicts = constraints
        .iter()
        .map(|c| check(c, &attributions))
        .collect::<soa_core::Result<Vec<_>>>()?;
    timer.lap("verdicts");

    let report = Report {
        input_sha256: hash,
        input_kind,
        ordering: distribution.ordering(),
        distribution: &distribution,
        route,
        expansions: expansions.iter().map(PceSummary::of).collect(),
        mean,
        variance,
        attributions: rows,
        verdicts,
        seed: g.seed,
        degree_hint,
        timing: timer.report(),
    };
    emit(a.out.as_deref(), &sorted_json(&report))?;
    if g.strict {
        if let Some(p) = expansions.iter().find(|p| !p.converged()) {
            return Err(not_converged("analyze", p));
        }
    }
    Ok(())
}

fn spectral_rows(pce: &Pce, subsets: &[Coalition], table: &ElementaryTable) -> CliResult<Vec<AttributionRow>> {
    subsets
        .iter()
        .map(|&u| {
            let r = spectral_shapley_owen(pce, u, table)?;
            Ok(AttributionRow {
                subset: u,
                value: r.estimate,
                error_bound: r.error_bound,
                method: "spectral",
                exact: None,
                kappa: Some(r.kappa),
            })
        })
        .collect()
}
