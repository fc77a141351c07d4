use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use qmsep::balance::balance_report;
use qmsep::entropy::{entropy_production, ep_limit_estimate};
use qmsep::gksl::{invariant_states, DensityMatrix, GkslGenerator};
use qmsep::matops::{identity, subspace_tol};
use qmsep::models::{
    cycle_model, generic_model, generic_stationary_state, two_level_model, CycleSpec, GenericSpec,
};
use qmsep::support::{fbs_check, hs_span_condition, phi_support_check, FbsMethod, SpanCondition, G_CONDITION_TOL};
use qmsep::Error;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::model_file::{read_state, read_text, ModelFile};
use crate::report::{digest, ep_value, matrix, num, Report};

/// Input shared by the analysis commands.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub model: PathBuf,
    pub rho: Option<PathBuf>,
    pub tol: f64,
}

struct Loaded {
    model: ModelFile,
    gen: GkslGenerator,
    bytes: Vec<Vec<u8>>,
}

fn load(inputs: &Inputs) -> CliResult<Loaded> {
    let bytes = read_text(&inputs.model)?;
    let model = ModelFile::parse(&bytes, &inputs.model.display().to_string())?;
    let gen = model.generator()?;
    Ok(Loaded { model, gen, bytes: vec![bytes] })
}

fn describe_candidates(states: &[DensityMatrix]) -> String {
    let mut out = String::new();
    for (k, s) in states.iter().enumerate() {
        let _ = write!(
            out,
            "\n  candidate {k}: rank {}, faithful {}, min eigenvalue {:e}, rho {}",
            s.rank(),
            s.is_faithful(),
            s.min_eigenvalue(),
            matrix(s.matrix())
        );
    }
    out
}

/// `--rho`, then the model's own `rho`, then the unique faithful invariant state.
fn resolve_state(inputs: &Inputs, loaded: &mut Loaded, report_source: &mut &'static str) -> CliResult<DensityMatrix> {
    if let Some(path) = &inputs.rho {
        let (rho, bytes) = read_state(path, loaded.gen.dim(), inputs.tol)?;
        loaded.bytes.push(bytes);
        *report_source = "--rho";
        return Ok(rho);
    }
    if let Some(rho) = loaded.model.state(inputs.tol)? {
        *report_source = "model";
        return Ok(rho);
    }
    let inv = invariant_states(&loaded.gen, inputs.tol)?;
    match inv.unique_faithful() {
        Some(rho) if inv.kernel_dim == 1 => {
            *report_source = "invariant";
            Ok(rho.clone())
        }
        _ => Err(CliError::Invalid(format!(
            "no state given and the invariant states do not determine one (kernel dimension {}); \
             pass --rho to choose{}",
            inv.kernel_dim,
            describe_candidates(&inv.states)
        ))),
    }
}

/// Puts the generator in special form for `rho` (leaving `ℒ` unchanged) and
/// checks invariance.
fn prepare(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64, report: &mut Report) -> CliResult<GkslGenerator> {
    gen.ensure_invariant(rho.matrix(), tol).map_err(|e| CliError::from(e).context("rho"))?;
    match gen.ensure_special_state(rho, tol) {
        Ok(()) => Ok(gen.clone()),
        Err(Error::NotSpecial { reason }) => {
            report.warn(format!("jumps rewritten in special form for rho ({reason}); the generator is unchanged"));
            Ok(gen.make_special(rho, tol)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn start(command: &str, inputs: &Inputs) -> CliResult<(Loaded, DensityMatrix, Report, GkslGenerator)> {
    let mut loaded = load(inputs)?;
    let mut source = "";
    let rho = resolve_state(inputs, &mut loaded, &mut source)?;
    let parts: Vec<&[u8]> = loaded.bytes.iter().map(Vec::as_slice).collect();
    let mut report = Report::new(command, digest(&parts), inputs.tol);
    report.value("state_source", json!(source));
    let gen = prepare(&loaded.gen, &rho, inputs.tol, &mut report)?;
    Ok((loaded, rho, report, gen))
}

fn special_residual(gen: &GkslGenerator, rho: &DensityMatrix) -> f64 {
    gen.jumps()
        .iter()
        .map(|l| (rho.matrix() * l).trace().norm() / l.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn cmd_validate(inputs: &Inputs) -> CliResult<Report> {
    let bytes = read_text(&inputs.model)?;
    let model = ModelFile::parse(&bytes, &inputs.model.display().to_string())?;
    let h = model.hamiltonian()?;
    let jumps = model.jumps()?;
    let mut parts = vec![bytes.clone()];
    let rho = match &inputs.rho {
        Some(p) => {
            let (rho, b) = read_state(p, model.dim, inputs.tol)?;
            parts.push(b);
            Some(rho)
        }
        None => model.state(inputs.tol)?,
    };
    let views: Vec<&[u8]> = parts.iter().map(Vec::as_slice).collect();
    let mut report = Report::new("validate", digest(&views), inputs.tol);
    let herm = (&h - h.adjoint()).norm();
    let herm_tol = inputs.tol * h.norm().max(1.0);
    report.verdict("hermitian_h", herm <= herm_tol, herm, herm_tol);
    let gen = model.generator()?;
    report.value("dim", json!(model.dim));
    report.value("jump_count", json!(jumps.len()));
    let unital = gen.apply_heisenberg(&identity(model.dim))?.norm();
    report.verdict("unital", unital <= inputs.tol * gen.scale().max(1.0), unital, inputs.tol * gen.scale().max(1.0));

    let (rho, source) = match rho {
        Some(r) => (Some(r), if inputs.rho.is_some() { "--rho" } else { "model" }),
        None => {
            let inv = invariant_states(&gen, inputs.tol)?;
            match inv.unique_faithful() {
                Some(r) if inv.kernel_dim == 1 => (Some(r.clone()), "invariant"),
                _ => {
                    report.warn(format!(
                        "special form undetermined: invariant kernel dimension {}, no unique faithful state",
                        inv.kernel_dim
                    ));
                    (None, "none")
                }
            }
        }
    };
    report.value("state_source", json!(source));
    if let Some(rho) = rho {
        report.value("faithful", json!(rho.is_faithful()));
        report.value("min_eigenvalue", num(rho.min_eigenvalue()));
        let inv_res = gen.invariance_residual(rho.matrix())?;
        let inv_tol = inputs.tol * gen.scale().max(1.0);
        report.verdict("invariant", inv_res <= inv_tol, inv_res, inv_tol);
        let special = match gen.ensure_special_state(&rho, inputs.tol) {
            Ok(()) => true,
            Err(Error::NotSpecial { reason }) => {
                report.warn(format!("not in special form: {reason}"));
                false
            }
            Err(Error::NotFaithful { .. }) => {
                report.warn("special form requires a faithful state");
                false
            }
            Err(e) => return Err(e.into()),
        };
        report.verdict("special_form", special, special_residual(&gen, &rho), inputs.tol);
    }
    Ok(report)
}

pub fn cmd_invariant(inputs: &Inputs) -> CliResult<Report> {
    let loaded = load(inputs)?;
    let mut report = Report::new("invariant", digest(&[&loaded.bytes[0]]), inputs.tol);
    let inv = invariant_states(&loaded.gen, inputs.tol)?;
    report.value("kernel_dim", json!(inv.kernel_dim));
    report.value("multiplicity_warning", json!(inv.multiplicity_warning()));
    let states: Vec<Value> = inv
        .states
        .iter()
        .map(|s| {
            json!({
                "faithful": s.is_faithful(),
                "rank": s.rank(),
                "min_eigenvalue": num(s.min_eigenvalue()),
                "rho": matrix(s.matrix()),
            })
        })
        .collect();
    report.value("states", Value::Array(states));
    if inv.multiplicity_warning() {
        report.warn("more than one invariant operator; analysis commands need --rho");
    }
    Ok(report)
}

fn span_json(s: &SpanCondition) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("forward_dim".into(), json!(s.forward_dim));
    m.insert("backward_dim".into(), json!(s.backward_dim));
    m
}

#[derive(Debug, Clone, Default)]
pub struct LimitOptions {
    pub times: Option<Vec<f64>>,
    pub csv: Option<PathBuf>,
}

pub fn cmd_ep(inputs: &Inputs, limit: &LimitOptions) -> CliResult<Report> {
    let (_, rho, mut report, gen) = start("ep", inputs)?;
    let ep = entropy_production(&gen, &rho, inputs.tol)?;
    report.value("entropy_production", ep_value(ep.value));
    report.value("infinite_from_supports", json!(ep.infinite_from_supports));
    report.value("phi_difference", num(ep.phi_difference));
    report.value(
        "formula_terms",
        Value::Array(ep.formula_terms.iter().map(|(a, b)| json!([num(*a), num(*b)])).collect()),
    );
    let mut extra = span_json(&ep.support.span_condition);
    extra.insert("span_condition_holds".into(), json!(ep.support.span_condition.holds));
    extra.insert("span_distance".into(), num(ep.support.span_condition.distance));
    report.verdict_with("phi_support", ep.support.holds, ep.support.distance, ep.support.tol, extra);

    if let Some(times) = &limit.times {
        let samples = ep_limit_estimate(&gen, &rho, times, inputs.tol)?;
        let rows: Vec<Value> =
            samples.iter().map(|s| json!([num(s.t), ep_value(s.s), ep_value(s.s_over_t)])).collect();
        report.value("limit_check", json!({ "columns": ["t", "S", "S_over_t"], "rows": rows }));
        if let Some(path) = &limit.csv {
            let mut csv = String::from("t,S,S_over_t\n");
            for s in &samples {
                let _ = writeln!(csv, "{:e},{},{}", s.t, s.s, s.s_over_t);
            }
            write_file(path, csv.as_bytes())?;
        }
    } else if limit.csv.is_some() {
        return Err(CliError::Invalid("--csv needs --limit-check".into()));
    }
    Ok(report)
}

pub fn cmd_balance(inputs: &Inputs) -> CliResult<Report> {
    let (_, rho, mut report, gen) = start("balance", inputs)?;
    let b = balance_report(&gen, &rho, inputs.tol)?;
    for (name, c) in [("sqdb", &b.sqdb), ("sqdb_theta", &b.sqdb_theta)] {
        let mut extra = Map::new();
        extra.insert("u".into(), matrix(&c.u));
        extra.insert("residual_jump".into(), num(c.residual_jump));
        extra.insert("residual_unitary".into(), num(c.residual_unitary));
        extra.insert("residual_symmetry".into(), num(c.residual_symmetry));
        if let Some(g) = c.g_condition_residual {
            extra.insert("g_condition_residual".into(), num(g));
        }
        let worst = c
            .residual_jump
            .max(c.residual_unitary)
            .max(c.residual_symmetry)
            .max(c.g_condition_residual.unwrap_or(0.0));
        report.verdict_with(name, c.holds, worst, c.tol, extra);
    }
    report.value(
        "derivation_gap",
        json!({
            "K": matrix(&b.gap.k),
            "residual": num(b.gap.residual),
            "k_rho_commutator": num(b.gap.k_rho_commutator),
        }),
    );
    Ok(report)
}

pub fn cmd_support(inputs: &Inputs) -> CliResult<Report> {
    let (_, rho, mut report, gen) = start("support", inputs)?;
    let span = hs_span_condition(&gen, &rho, inputs.tol)?;
    report.verdict_with("hs_span_condition", span.holds, span.distance, span.tol, span_json(&span));
    let phi = phi_support_check(&gen, &rho, inputs.tol)?;
    let mut extra = Map::new();
    extra.insert("forward_dim".into(), json!(phi.forward_dim));
    extra.insert("backward_dim".into(), json!(phi.backward_dim));
    report.verdict_with("phi_support", phi.holds, phi.distance, phi.tol, extra);
    let fbs = fbs_check(&gen, &rho, inputs.tol)?;
    let mut extra = Map::new();
    extra.insert("method".into(), json!(fbs.method.as_str()));
    extra.insert("g_condition_tol".into(), num(G_CONDITION_TOL));
    if let Some(d) = fbs.details.forward_dim {
        extra.insert("forward_dim".into(), json!(d));
    }
    if let Some(d) = fbs.details.backward_dim {
        extra.insert("backward_dim".into(), json!(d));
    }
    if !fbs.details.samples.is_empty() {
        let samples: Vec<Value> = fbs
            .details
            .samples
            .iter()
            .map(|s| {
                json!({
                    "t": num(s.t),
                    "equal": s.equal,
                    "forward_dim": s.forward_dim,
                    "backward_dim": s.backward_dim,
                    "distance": num(s.distance),
                })
            })
            .collect();
        extra.insert("samples".into(), Value::Array(samples));
    }
    extra.insert("g_condition_residual".into(), num(fbs.details.g_condition_residual));
    let sub_tol = subspace_tol(inputs.tol);
    let (residual, judged) = match fbs.method {
        FbsMethod::Theorem => {
            let span = fbs.details.span_condition.as_ref().expect("theorem method records the span condition");
            (span.distance, span.tol)
        }
        // decided by the numerical rank of both reachable spaces
        FbsMethod::FullSpace => (0.0, inputs.tol),
        FbsMethod::ConstantSupport => (if fbs.holds { 0.0 } else { 1.0 }, sub_tol),
        FbsMethod::Sampled => (fbs.details.samples.iter().map(|s| s.distance).fold(0.0, f64::max), sub_tol),
    };
    report.verdict_with("fbs", fbs.holds, residual, judged, extra);
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum GenKind {
    Cycle { n: usize, lambda: f64, mu: f64, h: Option<Vec<f64>> },
    Generic { rates: Vec<Vec<f64>>, h: Option<Vec<f64>> },
    TwoLevel { kappa: f64 },
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn build_model(kind: &GenKind) -> CliResult<ModelFile> {
    let mut meta = BTreeMap::new();
    let (gen, rho) = match kind {
        GenKind::Cycle { n, lambda, mu, h } => {
            let mut spec = CycleSpec::new(*n, *lambda, *mu);
            if let Some(h) = h {
                spec.h_diag = h.clone();
            }
            meta.insert("model".into(), "cycle".into());
            meta.insert("n".into(), n.to_string());
            meta.insert("lambda".into(), lambda.to_string());
            meta.insert("mu".into(), mu.to_string());
            meta.insert("h_diag".into(), fmt_list(&spec.h_diag));
            cycle_model(&spec)?
        }
        GenKind::Generic { rates, h } => {
            let n = rates.len();
            if let Some(k) = rates.iter().position(|row| row.len() != n) {
                return Err(CliError::Invalid(format!("rates row {k}: expected {n} entries, found {}", rates[k].len())));
            }
            let gamma = DMatrix::from_fn(n, n, |i, j| rates[i][j]);
            let mut spec = GenericSpec::new(gamma);
            if let Some(h) = h {
                spec.h_diag = h.clone();
            }
            meta.insert("model".into(), "generic".into());
            meta.insert(
                "rates".into(),
                rates.iter().map(|r| fmt_list(r)).collect::<Vec<_>>().join(";"),
            );
            meta.insert("h_diag".into(), fmt_list(&spec.h_diag));
            let gen = generic_model(&spec)?;
            let rho = generic_stationary_state(&spec)?;
            (gen, rho)
        }
        GenKind::TwoLevel { kappa } => {
            meta.insert("model".into(), "twolevel".into());
            meta.insert("kappa".into(), kappa.to_string());
            two_level_model(*kappa)?
        }
    };
    Ok(ModelFile::from_generator(&gen, Some(rho.matrix()), meta))
}

pub fn cmd_gen(kind: &GenKind, out: &Path, tol: f64) -> CliResult<Report> {
    let model = build_model(kind)?;
    let text = model.to_json();
    write_file(out, text.as_bytes())?;
    let mut report = Report::new("gen", digest(&[text.as_bytes()]), tol);
    report.value("dim", json!(model.dim));
    report.value("jump_count", json!(model.l.len()));
    report.value("model", json!(model.metadata.get("model")));
    Ok(report)
}

/// Parses `a,b,c` into numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect()
}

/// Parses `a,b;c,d` into rows.
pub fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';').map(parse_list).collect()
}
