use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use bcjacobi::continuous_time::{
    connecting_dynamic, connecting_spectral, recover_matrix_continuous, response_function, string_pairings, Quadrature,
    StringSpec, TestFunction, TimeGrid,
};
use bcjacobi::dd::Dd;
use bcjacobi::discrete_wave::{
    required_block_size, response_vector, solve_finite_dirichlet, solve_semi_infinite, Boundary, Control,
    ResponseVector,
};
use bcjacobi::graph_wave::{energy_log, simulate, GraphSpec};
use bcjacobi::heat::{heat_response, invert_heat, solve_heat, solve_heat_dirichlet};
use bcjacobi::inverse_bc::{
    characterize, invert_factorization, invert_factorization_dd, roundtrip_report_complex, roundtrip_report_with,
    InversionReport, Precision, Verdict,
};
use bcjacobi::moments::{
    indeterminacy_sequences, solvability, truncated_moment_naive_dd, truncated_moment_spectral_dd, MomentProblem,
};
use bcjacobi::random::random_real_spec;
use bcjacobi::toda::{toda_ode_oracle, toda_solve};
use bcjacobi::verify::{self, VerifyOptions, DEFAULT_SEED};
use bcjacobi::weyl_debranges::{weyl_evaluate, weyl_series};
use bcjacobi::{AnySpec, Complex64, JacobiSpec, Mode, MomentSequence, Scalar};

use crate::{num, Artifacts, Command, ScenarioConfig};

pub(crate) fn dispatch(cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<()> {
    let seed = cfg.seed.unwrap_or(0);
    match cfg.command {
        Command::Forward => forward(payload(cfg)?, seed, art),
        Command::Response => response(payload(cfg)?, seed, art),
        Command::Invert => invert(payload(cfg)?, art),
        Command::Roundtrip => roundtrip(payload(cfg)?, seed, art),
        Command::Moments => moments(payload(cfg)?, art),
        Command::Toda => toda(payload(cfg)?, seed, art),
        Command::Weyl => weyl(payload(cfg)?, seed, art),
        Command::String => string(payload(cfg)?, art),
        Command::Contjacobi => contjacobi(payload(cfg)?, seed, art),
        Command::Heat => heat(payload(cfg)?, seed, art),
        Command::Graph => graph(payload(cfg)?, art),
        Command::Verify => run_verify(payload(cfg)?, cfg, art),
    }
}

fn payload<T: DeserializeOwned>(cfg: &ScenarioConfig) -> Result<T> {
    serde_json::from_value(Value::Object(cfg.payload.clone()))
        .with_context(|| format!("invalid `{}` config", cfg.command))
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Num {
    Real(f64),
    Complex([f64; 2]),
}

impl Num {
    fn c64(self) -> Complex64 {
        match self {
            Num::Real(x) => Complex64::new(x, 0.0),
            Num::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn convert<S: Scalar>(v: &[Num]) -> Result<Vec<S>> {
    v.iter()
        .map(|x| S::from_c64(x.c64()).ok_or_else(|| anyhow!("complex entry where real data is required")))
        .collect()
}

fn lift(v: &[f64]) -> Vec<Dd> {
    v.iter().map(|&x| Dd::from(x)).collect()
}

/// `spec` is an explicit spec object, `"free"`, `"random"`, or absent (random).
fn resolve_spec(spec: Option<&Value>, n: Option<usize>, default_n: Option<usize>, seed: u64) -> Result<AnySpec> {
    let size = || {
        n.or(default_n)
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow!("`N` is required to generate a spec"))
    };
    match spec {
        None => Ok(AnySpec::Real(random_real_spec(size()?, seed))),
        Some(Value::String(s)) => match s.as_str() {
            "free" => Ok(AnySpec::Real(JacobiSpec::free(size()?))),
            "random" => Ok(AnySpec::Real(random_real_spec(size()?, seed))),
            other => bail!("unknown spec preset `{other}` (expected \"free\" or \"random\")"),
        },
        Some(v) => {
            let s: AnySpec = serde_json::from_value(v.clone()).context("invalid spec")?;
            if let Some(n) = n.filter(|&n| n != s.n()) {
                bail!("`N` = {n} but the spec has size {}", s.n());
            }
            Ok(s)
        }
    }
}

fn real_spec(spec: AnySpec) -> Result<JacobiSpec<f64>> {
    match spec {
        AnySpec::Real(s) => Ok(s),
        AnySpec::Complex(_) => bail!("this command needs a real spec"),
    }
}

fn value_columns<S: Scalar>(base: &str) -> Vec<String> {
    if S::COMPLEX {
        vec![format!("{base}_re"), format!("{base}_im")]
    } else {
        vec![base.to_string()]
    }
}

fn cells<S: Scalar>(x: S) -> Vec<String> {
    let c = x.to_c64();
    if S::COMPLEX {
        vec![num(c.re), num(c.im)]
    } else {
        vec![num(c.re)]
    }
}

fn blank<S: Scalar>() -> Vec<String> {
    vec![String::new(); if S::COMPLEX { 2 } else { 1 }]
}

fn header(fixed: &[&str], values: &[Vec<String>]) -> Vec<String> {
    fixed
        .iter()
        .map(|s| s.to_string())
        .chain(values.iter().flatten().cloned())
        .collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Row `k`: `a_k` (blank at `k = N`) and `b_k` (blank at `k = 0`).
fn coefficient_rows<S: Scalar>(specs: &[&JacobiSpec<S>]) -> Vec<Vec<String>> {
    let n = specs[0].n();
    (0..=n)
        .map(|k| {
            let mut row = vec![k.to_string()];
            for s in specs {
                row.extend(if k < n { cells(s.a_at(k)) } else { blank::<S>() });
            }
            for s in specs {
                row.extend(if k > 0 { cells(s.b_at(k)) } else { blank::<S>() });
            }
            row
        })
        .collect()
}

fn coefficient_header<S: Scalar>(names: &[&str]) -> Vec<String> {
    let a: Vec<Vec<String>> = names.iter().map(|n| value_columns::<S>(&format!("a_{n}"))).collect();
    let b: Vec<Vec<String>> = names.iter().map(|n| value_columns::<S>(&format!("b_{n}"))).collect();
    header(&["k"], &[a.concat(), b.concat()])
}

fn write_coefficients<S: Scalar>(
    art: &mut Artifacts,
    name: &str,
    specs: &[&JacobiSpec<S>],
    names: &[&str],
) -> Result<()> {
    let cols = if names.len() == 1 {
        header(&["k"], &[value_columns::<S>("a"), value_columns::<S>("b")])
    } else {
        coefficient_header::<S>(names)
    };
    art.csv(name, &refs(&cols), &coefficient_rows(specs))
}

fn default_bc() -> Boundary {
    Boundary::SemiInfinite
}

fn bc_name(bc: Boundary) -> &'static str {
    match bc {
        Boundary::SemiInfinite => "semi_infinite",
        Boundary::Dirichlet => "dirichlet",
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ForwardCfg {
    spec: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "T")]
    t: usize,
    control: Option<Vec<Num>>,
    #[serde(default = "default_bc")]
    bc: Boundary,
}

fn forward(c: ForwardCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    match resolve_spec(c.spec.as_ref(), c.n, Some(c.t), seed)? {
        AnySpec::Real(s) => forward_field(&s, &c, art),
        AnySpec::Complex(s) => forward_field(&s, &c, art),
    }
}

fn forward_field<S: Scalar>(spec: &JacobiSpec<S>, c: &ForwardCfg, art: &mut Artifacts) -> Result<()> {
    let f = match &c.control {
        None => Control::delta(c.t),
        Some(v) => Control::new(convert(v)?)?,
    };
    let field = match c.bc {
        Boundary::SemiInfinite => solve_semi_infinite(spec, &f, c.t)?,
        Boundary::Dirichlet => solve_finite_dirichlet(spec, &f, c.t)?,
    };
    let mut rows = Vec::new();
    for n in 0..=field.n_space() {
        for t in 0..=field.horizon() {
            let mut row = vec![n.to_string(), t.to_string()];
            row.extend(cells(field.get(n, t)));
            rows.push(row);
        }
    }
    art.csv(
        "field",
        &refs(&header(&["n", "t"], &[value_columns::<S>("value")])),
        &rows,
    )?;
    art.scalar("N", spec.n());
    art.scalar("T", c.t);
    art.scalar("bc", bc_name(c.bc));
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseCfg {
    spec: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "T")]
    t: usize,
    #[serde(default = "default_bc")]
    bc: Boundary,
}

fn response(c: ResponseCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    let default_n = match c.bc {
        Boundary::SemiInfinite => required_block_size(c.t),
        Boundary::Dirichlet => c.t,
    };
    match resolve_spec(c.spec.as_ref(), c.n, Some(default_n), seed)? {
        AnySpec::Real(s) => write_response(&s, &c, art),
        AnySpec::Complex(s) => write_response(&s, &c, art),
    }
}

fn write_response<S: Scalar>(spec: &JacobiSpec<S>, c: &ResponseCfg, art: &mut Artifacts) -> Result<()> {
    let r = response_vector(spec, c.t, c.bc)?;
    let rows: Vec<Vec<String>> = r
        .as_slice()
        .iter()
        .enumerate()
        .map(|(t, &x)| [vec![t.to_string()], cells(x)].concat())
        .collect();
    art.csv("response", &refs(&header(&["t"], &[value_columns::<S>("r")])), &rows)?;
    art.scalar("N", spec.n());
    art.scalar("T", c.t);
    art.scalar("bc", bc_name(c.bc));
    Ok(())
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvertCfg {
    r: Vec<Num>,
    #[serde(rename = "T")]
    t: usize,
    mode: Option<Mode>,
    #[serde(default = "default_tol")]
    tol: f64,
}

#[derive(Serialize)]
struct InversionOutput<S: Scalar> {
    verdict: Verdict,
    #[serde(bound(serialize = "S: Scalar"))]
    report: Option<InversionReport<S>>,
}

fn invert(c: InvertCfg, art: &mut Artifacts) -> Result<()> {
    let all_real = c.r.iter().all(|x| x.c64().im == 0.0);
    let mode = c.mode.unwrap_or(if all_real { Mode::Real } else { Mode::Complex });
    match mode {
        Mode::Real => {
            let r = ResponseVector::new(convert::<f64>(&c.r)?)?;
            let verdict = characterize(&r, c.t, Mode::Real);
            let report = match verdict.admissible {
                true => Some(invert_factorization_dd(&lift(r.as_slice()), c.t)?),
                false => None,
            };
            finish_inversion(InversionOutput { verdict, report }, c.tol, art)
        }
        Mode::Complex => {
            let r = ResponseVector::new(convert::<Complex64>(&c.r)?)?;
            let verdict = characterize(&r, c.t, Mode::Complex);
            let report = match verdict.admissible {
                true => Some(invert_factorization(&r, c.t)?),
                false => None,
            };
            finish_inversion(InversionOutput { verdict, report }, c.tol, art)
        }
    }
}

fn finish_inversion<S: Scalar>(out: InversionOutput<S>, tol: f64, art: &mut Artifacts) -> Result<()> {
    art.json("inversion", &out)?;
    let ok = out.verdict.admissible;
    art.check("admissible", if ok { 1.0 } else { 0.0 }, 1.0, ok);
    art.scalar("detail", out.verdict.detail.clone());
    if let Some(rep) = &out.report {
        write_coefficients(art, "coefficients", &[&rep.recovered], &["recovered"])?;
        art.scalar("residual", rep.residual);
        art.scalar("b_last_from_data", rep.b_last_from_data);
        art.check_le("residual", rep.residual, tol);
    }
    Ok(())
}

fn default_precision() -> Precision {
    Precision::DoubleDouble
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundtripCfg {
    spec: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "T")]
    t: Option<usize>,
    #[serde(default = "default_precision")]
    precision: Precision,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn roundtrip(c: RoundtripCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    let spec = resolve_spec(c.spec.as_ref(), c.n, None, seed)?;
    let t = c.t.unwrap_or(spec.n());
    let (residual, err) = match &spec {
        AnySpec::Real(s) => {
            let rep = roundtrip_report_with(s, t, c.precision)?;
            write_coefficients(
                art,
                "coefficients",
                &[&s.truncated(t)?, &rep.inversion.recovered],
                &["true", "recovered"],
            )?;
            art.json("roundtrip", &rep)?;
            (rep.inversion.residual, rep.coefficient_error)
        }
        AnySpec::Complex(s) => {
            let rep = roundtrip_report_complex(s, t)?;
            write_coefficients(
                art,
                "coefficients",
                &[&s.truncated(t)?, &rep.inversion.recovered],
                &["true", "recovered"],
            )?;
            art.json("roundtrip", &rep)?;
            (rep.inversion.residual, rep.coefficient_error)
        }
    };
    art.scalar("N", spec.n());
    art.scalar("T", t);
    art.scalar("residual", residual);
    art.scalar("coefficient_error", err);
    art.check_le("residual", residual, c.tol);
    art.check_le("coefficient_error", err, c.tol);
    Ok(())
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum MomentTask {
    Truncated,
    Solvability,
    Indeterminacy,
}

fn hamburger() -> MomentProblem {
    MomentProblem::Hamburger
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentsCfg {
    s: Vec<f64>,
    task: MomentTask,
    #[serde(rename = "N")]
    n: usize,
    #[serde(default = "hamburger")]
    kind: MomentProblem,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(Value::String(s)) => s,
        Ok(Value::Null) | Err(_) => String::new(),
        Ok(v) => v.to_string(),
    }
}

fn moments(c: MomentsCfg, art: &mut Artifacts) -> Result<()> {
    let s = MomentSequence::new(c.s.clone())?;
    match c.task {
        MomentTask::Truncated => {
            let sd = lift(&c.s);
            let sp = truncated_moment_spectral_dd(&sd, c.n)?;
            let (spec, nv) = truncated_moment_naive_dd(&sd, c.n)?;
            let mut rows = Vec::new();
            for (route, m) in [("eigenproblem", &sp.measure), ("factorization", &nv)] {
                for (k, &(l, w)) in m.atoms().iter().enumerate() {
                    rows.push(vec![route.to_string(), (k + 1).to_string(), num(l), num(w)]);
                }
            }
            art.csv("atoms", &["route", "k", "lambda", "weight"], &rows)?;
            write_coefficients(art, "coefficients", &[&spec], &["recovered"])?;
            let diff = sp
                .measure
                .atoms()
                .iter()
                .zip(nv.atoms())
                .map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs()))
                .fold(0.0, f64::max);
            art.json(
                "truncated",
                &serde_json::json!({ "eigenproblem": sp, "factorization": nv, "recovered": spec }),
            )?;
            art.scalar("route_difference", diff);
            art.scalar("clustered", sp.clustered.len());
            art.check_le("route_difference", diff, c.tol);
        }
        MomentTask::Solvability => {
            let rep = solvability(&s, c.kind, c.n)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        label(&r.s0),
                        label(&r.s1),
                        label(&r.s0_minus_s1),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            art.csv("solvability", &["n", "s0", "s1", "s0_minus_s1", "pass"], &rows)?;
            art.json("solvability", &rep)?;
            art.scalar("kind", label(&c.kind));
            art.check("solvable", if rep.pass { 1.0 } else { 0.0 }, 1.0, rep.pass);
        }
        MomentTask::Indeterminacy => {
            let tab = indeterminacy_sequences(&s, c.n)?;
            let rows: Vec<Vec<String>> = tab
                .rows
                .iter()
                .map(|r| vec![r.n.to_string(), num(r.gamma_form), num(r.delta_form), opt(r.l_n)])
                .collect();
            art.csv("indeterminacy", &["n", "gamma_form", "delta_form", "l_n"], &rows)?;
            art.json("indeterminacy", &tab)?;
            art.scalar("gamma_trend", label(&tab.gamma_trend));
            art.scalar("delta_trend", label(&tab.delta_trend));
            art.scalar("l_trend", label(&tab.l_trend));
            if let Some(k) = tab.stopped_at {
                art.scalar("stopped_at", k);
            }
        }
    }
    Ok(())
}

fn default_dt() -> f64 {
    1e-3
}

fn default_oracle_tol() -> f64 {
    1e-6
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TodaCfg {
    spec: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    times: Vec<f64>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "yes")]
    oracle: bool,
    #[serde(default = "default_oracle_tol")]
    tol: f64,
}

fn toda(c: TodaCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    let spec = real_spec(resolve_spec(c.spec.as_ref(), c.n, None, seed)?)?;
    let n = spec.n();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &t in &c.times {
        let st = toda_solve(&spec, t)?;
        let oracle = match c.oracle {
            true => Some(toda_ode_oracle(&spec, t, c.dt)?),
            false => None,
        };
        for k in 1..=n {
            let a = (k < n).then(|| st.spec.a_at(k));
            let b = st.spec.b_at(k);
            let da = oracle.as_ref().and_then(|o| a.map(|a| (a - o.a_at(k)).abs()));
            let db = oracle.as_ref().map(|o| (b - o.b_at(k)).abs());
            worst = worst.max(da.unwrap_or(0.0)).max(db.unwrap_or(0.0));
            rows.push(vec![num(t), k.to_string(), opt(a), num(b), opt(da), opt(db)]);
        }
    }
    art.csv(
        "toda",
        &["t", "k", "a_k", "b_k", "a_oracle_delta", "b_oracle_delta"],
        &rows,
    )?;
    art.scalar("N", n);
    if c.oracle {
        art.scalar("max_oracle_delta", worst);
        art.check_le("oracle_agreement", worst, c.tol);
    }
    Ok(())
}

fn default_series_tol() -> f64 {
    1e-12
}

fn default_agreement() -> f64 {
    1e-7
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeylCfg {
    spec: Option<Value>,
    r: Option<Vec<f64>>,
    #[serde(rename = "N")]
    n: Option<usize>,
    lambda: [f64; 2],
    #[serde(default = "default_series_tol")]
    tol: f64,
    #[serde(default = "default_agreement")]
    agreement_tol: f64,
}

fn weyl(c: WeylCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    let lambda = Complex64::new(c.lambda[0], c.lambda[1]);
    let ev = match (&c.r, &c.spec) {
        (Some(_), Some(_)) => bail!("give either `spec` or `r`, not both"),
        (Some(r), None) => weyl_series(&ResponseVector::new(r.clone())?, lambda, c.tol)?,
        (None, s) => weyl_evaluate(&real_spec(resolve_spec(s.as_ref(), c.n, None, seed)?)?, lambda, c.tol)?,
    };
    art.json("weyl", &ev)?;
    art.scalar("m_series_re", ev.m_series.re);
    art.scalar("m_series_im", ev.m_series.im);
    art.scalar("truncation", ev.truncation);
    if let Some(m) = ev.m_resolvent {
        let d = (m - ev.m_series).norm();
        art.scalar("series_resolvent_difference", d);
        if ev.in_domain_d == Some(true) {
            art.check_le("series_vs_resolvent", d, c.agreement_tol);
        }
    }
    Ok(())
}

fn default_ladder() -> Vec<usize> {
    vec![25, 50, 100, 200]
}

fn default_psi() -> TestFunction {
    TestFunction::Gauss { sigma: 1.0 }
}

fn default_t_star() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StringCfg {
    #[serde(rename = "N", default = "default_ladder")]
    n: Vec<usize>,
    #[serde(default = "default_psi")]
    psi: TestFunction,
    #[serde(default = "default_t_star")]
    t_star: f64,
}

fn string(c: StringCfg, art: &mut Artifacts) -> Result<()> {
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for &n in &c.n {
        let p = string_pairings(&StringSpec::uniform(n)?, c.psi, c.t_star).with_context(|| format!("N = {n}"))?;
        rows.push(vec![
            n.to_string(),
            num(p.response_pairing),
            num(p.response_error),
            num(p.corrected_pairing),
            num(p.corrected_error),
            num(p.field_pairing),
            num(p.field_error),
        ]);
        errs.push([p.response_error, p.corrected_error, p.field_error]);
    }
    art.csv(
        "pairings",
        &[
            "N",
            "response_pairing",
            "response_error",
            "corrected_pairing",
            "corrected_error",
            "field_pairing",
            "field_error",
        ],
        &rows,
    )?;
    art.scalar("t_star", c.t_star);
    if errs.len() > 1 {
        for (i, name) in [
            "response_error_decreases",
            "corrected_error_decreases",
            "field_error_decreases",
        ]
        .into_iter()
        .enumerate()
        {
            let ok = errs.windows(2).all(|w| w[1][i] < w[0][i]);
            art.check(name, if ok { 1.0 } else { 0.0 }, 1.0, ok);
        }
    }
    Ok(())
}

fn default_horizon() -> f64 {
    8.0
}

fn default_grid_ladder() -> Vec<usize> {
    vec![200, 400, 800]
}

fn trapezoid() -> Quadrature {
    Quadrature::Trapezoid
}

fn default_recovery_tol() -> f64 {
    1e-3
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContCfg {
    spec: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "T", default = "default_horizon")]
    t: f64,
    #[serde(rename = "M", default = "default_grid_ladder")]
    m: Vec<usize>,
    #[serde(default = "trapezoid")]
    quadrature: Quadrature,
    #[serde(default = "yes")]
    recover: bool,
    #[serde(default = "default_recovery_tol")]
    tol: f64,
}

fn contjacobi(c: ContCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    let spec = real_spec(resolve_spec(c.spec.as_ref(), c.n, None, seed)?)?;
    if c.m.is_empty() {
        bail!("`M` must list at least one grid size");
    }
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for &m in &c.m {
        let grid = TimeGrid::new(c.t, m)?;
        let r = response_function(&spec, &grid)?;
        let err = (connecting_dynamic(&r, &grid, c.quadrature)? - connecting_spectral(&spec, &grid)?).amax();
        rows.push(vec![
            m.to_string(),
            num(grid.step()),
            num(err),
            opt(prev.map(|p| p / err)),
        ]);
        prev = Some(err);
    }
    art.csv("kernels", &["M", "h", "kernel_error", "ratio"], &rows)?;
    art.scalar("N", spec.n());
    if let Some(e) = prev {
        art.scalar("kernel_error", e);
    }
    if c.recover {
        let grid = TimeGrid::new(c.t, *c.m.last().expect("non-empty"))?;
        let r = response_function(&spec, &grid)?;
        let rec = recover_matrix_continuous(&r, spec.n(), &grid)?;
        let mut err = (rec.spec.a0() - spec.a0()).abs();
        for k in 1..spec.n() {
            err = err.max((rec.spec.a_at(k) - spec.a_at(k)).abs());
        }
        for k in 1..=spec.n() {
            err = err.max((rec.spec.b_at(k) - spec.b_at(k)).abs());
        }
        write_coefficients(art, "recovery", &[&spec, &rec.spec], &["true", "recovered"])?;
        art.scalar("recovery_error", err);
        art.scalar("rank", rec.rank);
        art.check_le("recovery_error", err, c.tol);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HeatCfg {
    spec: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "T")]
    t: Option<usize>,
    control: Option<Vec<f64>>,
    #[serde(default = "default_bc")]
    bc: Boundary,
    s: Option<Vec<f64>>,
}

fn heat(c: HeatCfg, seed: u64, art: &mut Artifacts) -> Result<()> {
    if let Some(s) = &c.s {
        if c.spec.is_some() || c.control.is_some() {
            bail!("`s` selects inversion; `spec` and `control` do not apply");
        }
        let n = c.n.ok_or_else(|| anyhow!("`N` is required for inversion"))?;
        let spec = invert_heat(&MomentSequence::new(s.clone())?, n)?;
        write_coefficients(art, "coefficients", &[&spec], &["recovered"])?;
        art.json("heat_inversion", &spec)?;
        art.scalar("N", n);
        return Ok(());
    }
    let t = c.t.ok_or_else(|| anyhow!("`T` is required for a forward run"))?;
    let spec = real_spec(resolve_spec(c.spec.as_ref(), c.n, Some(t), seed)?)?;
    let f = match &c.control {
        None => Control::delta(t),
        Some(v) => Control::new(v.clone())?,
    };
    let field = match c.bc {
        Boundary::SemiInfinite => solve_heat(&spec, &f, t)?,
        Boundary::Dirichlet => solve_heat_dirichlet(&spec, &f, t)?,
    };
    let mut rows = Vec::new();
    for n in 0..=field.n_space() {
        for s in 0..=field.horizon() {
            rows.push(vec![n.to_string(), s.to_string(), num(field.get(n, s))]);
        }
    }
    art.csv("field", &["n", "t", "value"], &rows)?;
    let s = heat_response(&spec, t, c.bc)?;
    let rows: Vec<Vec<String>> = s
        .iter()
        .enumerate()
        .map(|(k, &x)| vec![k.to_string(), num(x)])
        .collect();
    art.csv("response", &["t", "s"], &rows)?;
    art.scalar("N", spec.n());
    art.scalar("T", t);
    art.scalar("bc", bc_name(c.bc));
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphCfg {
    graph: Value,
    /// Shorter controls are padded with zeros up to `T`.
    #[serde(default)]
    controls: BTreeMap<String, Vec<f64>>,
    #[serde(rename = "T")]
    t: usize,
}

/// `{"path": n}`, `{"star": [k, n]}`, or a full graph object.
fn resolve_graph(v: &Value) -> Result<GraphSpec> {
    if let Some(n) = v.get("path") {
        return Ok(GraphSpec::path(
            serde_json::from_value(n.clone()).context("`path` takes an edge length")?,
        ));
    }
    if let Some(kn) = v.get("star") {
        let [k, n]: [usize; 2] = serde_json::from_value(kn.clone()).context("`star` takes [leaves, edge length]")?;
        return Ok(GraphSpec::star(k, n));
    }
    Ok(GraphSpec::from_json(&v.to_string())?)
}

fn graph(c: GraphCfg, art: &mut Artifacts) -> Result<()> {
    let g = resolve_graph(&c.graph)?;
    g.validate()?;
    let last_control = c
        .controls
        .values()
        .filter_map(|f| f.iter().rposition(|&x| x != 0.0))
        .max();
    let mut controls = c.controls;
    for f in controls.values_mut() {
        if f.len() < c.t {
            f.resize(c.t, 0.0);
        }
    }
    let field = simulate(&g, controls, c.t)?;
    let mut rows = Vec::new();
    for (i, e) in g.edges.iter().enumerate() {
        for t in 0..=c.t {
            for (j, x) in field.edge_samples(&g, i, t as i64)?.into_iter().enumerate() {
                rows.push(vec![
                    i.to_string(),
                    e.from.clone(),
                    e.to.clone(),
                    j.to_string(),
                    t.to_string(),
                    num(x),
                ]);
            }
        }
    }
    art.csv("field", &["edge", "from", "to", "j", "t", "value"], &rows)?;
    let log = energy_log(&g, &field)?;
    let rows: Vec<Vec<String>> = log
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                num(r.kinetic),
                num(r.potential),
                num(r.total),
                num(r.conserved),
            ]
        })
        .collect();
    art.csv("energy", &["t", "kinetic", "potential", "total", "conserved"], &rows)?;
    // control value f_k enters at graph time k + 1; the cross term sees it one step later
    let start = last_control.map_or(0, |k| k + 3);
    if log.len() > start + 1 {
        let post = &log[start..];
        let spread = |f: fn(&bcjacobi::graph_wave::EnergyRecord) -> f64| {
            let (lo, hi) = post
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            hi - lo
        };
        let scale = post[0].conserved.abs().max(1.0);
        art.scalar("post_control_from", start);
        art.scalar("total_energy_spread", spread(|r| r.total));
        art.scalar("conserved_energy", post[0].conserved);
        art.check_le("conserved_energy_spread", spread(|r| r.conserved), 1e-12 * scale);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyCfg {
    perturbation: Option<f64>,
}

fn run_verify(c: VerifyCfg, cfg: &ScenarioConfig, art: &mut Artifacts) -> Result<()> {
    let opts = VerifyOptions {
        filter: cfg.filter.clone(),
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        perturbation: c.perturbation,
    };
    let report = verify::run(&opts);
    if report.criteria.is_empty() {
        bail!("no criterion matches the filter");
    }
    let mut rows = Vec::new();
    for rep in &report.criteria {
        eprintln!("{rep}");
        let failed = rep.checks.iter().filter(|k| !k.informational && !k.passed).count();
        rows.push(vec![
            rep.id.to_string(),
            rep.module.to_string(),
            rep.title.to_string(),
            rep.passed.to_string(),
            failed.to_string(),
        ]);
        art.check(
            &format!("criterion {} ({})", rep.id, rep.module),
            failed as f64,
            0.0,
            rep.passed,
        );
    }
    art.csv("verify", &["id", "module", "title", "passed", "failed_checks"], &rows)?;
    art.json("verify", &report)?;
    art.scalar("seed", opts.seed);
    art.scalar("criteria", report.criteria.len());
    Ok(())
}
