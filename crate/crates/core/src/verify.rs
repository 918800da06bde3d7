//! Acceptance suites. Each criterion runs a batch of checks and reports
//! measured values against fixed tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::continuous_time::{
    connecting_dynamic, connecting_spectral, recover_matrix_continuous, response_function, string_pairings, Quadrature,
    StringSpec, TestFunction, TimeGrid,
};
use crate::dd::Dd;
use crate::discrete_wave::{
    connecting_from_response, control_matrix_natural, response_vector, solve_finite_dirichlet, Boundary, Control,
    ResponseVector,
};
use crate::error::{Error, Result};
use crate::graph_wave::{energy_log, simulate, GraphSpec};
use crate::heat::{heat_connecting, heat_control_matrix, heat_response};
use crate::inverse_bc::{characterize, invert_factorization_dd, roundtrip_report, roundtrip_report_with, Precision};
use crate::jacobi::{chebyshev_table, phi_eval, JacobiSpec, Mode};
use crate::moments::{
    connecting_from_moments, hankel_pair, lambda_matrix, lambda_tilde, moments_to_response, response_to_moments,
    truncated_moment_naive, truncated_moment_naive_dd, truncated_moment_spectral, truncated_moment_spectral_dd,
    HankelOrdering,
};
use crate::random::{random_real_spec, random_real_spec_in, rng};
use crate::scalar::Complex64;
use crate::spectral::{moments_of_measure, moments_of_measure_dd, spectral_measure};
use crate::toda::{toda_ode_oracle, toda_solve};
use crate::tridiag::tridiagonal_eigenvalues;
use crate::weyl_debranges::{
    debranges_inner, debranges_kernel, in_domain_d, weyl_evaluate, weyl_resolvent, weyl_series, ConnectingMatrix,
    DeBrangesElement, WeylKind,
};

pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    /// Module name, criterion number, or substring of the criterion title.
    pub filter: Option<String>,
    pub seed: u64,
    /// Relative perturbation injected into response data before inversion.
    pub perturbation: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            filter: None,
            seed: DEFAULT_SEED,
            perturbation: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Reported but not part of the verdict.
    pub informational: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub module: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub elapsed_s: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub filter: Option<String>,
    pub perturbation: Option<f64>,
    pub all_passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub struct Criterion {
    pub id: u32,
    pub module: &'static str,
    pub title: &'static str,
    run: fn(&VerifyOptions, &mut Recorder),
}

pub const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        module: "discrete_wave",
        title: "free-system identity",
        run: c01_free,
    },
    Criterion {
        id: 2,
        module: "inverse_bc",
        title: "discrete round trip",
        run: c02_roundtrip,
    },
    Criterion {
        id: 3,
        module: "heat",
        title: "Gram identities",
        run: c03_gram,
    },
    Criterion {
        id: 4,
        module: "discrete_wave",
        title: "spectral representations",
        run: c04_spectral,
    },
    Criterion {
        id: 5,
        module: "moments",
        title: "moment bridge",
        run: c05_moments,
    },
    Criterion {
        id: 6,
        module: "inverse_bc",
        title: "complex counterexample",
        run: c06_complex,
    },
    Criterion {
        id: 7,
        module: "toda",
        title: "Toda flow",
        run: c07_toda,
    },
    Criterion {
        id: 8,
        module: "weyl",
        title: "Weyl function",
        run: c08_weyl,
    },
    Criterion {
        id: 9,
        module: "debranges",
        title: "de Branges reproducing kernel",
        run: c09_debranges,
    },
    Criterion {
        id: 10,
        module: "continuous_time",
        title: "continuous-time kernels and recovery",
        run: c10_continuous,
    },
    Criterion {
        id: 11,
        module: "string",
        title: "string convergence trends",
        run: c11_string,
    },
    Criterion {
        id: 12,
        module: "graph_wave",
        title: "graph wave",
        run: c12_graph,
    },
];

impl Criterion {
    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.to_ascii_lowercase();
        f == self.id.to_string() || self.module.contains(&f) || self.title.to_ascii_lowercase().contains(&f)
    }
}

#[derive(Default)]
struct Recorder {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Recorder {
    fn le(&mut self, label: impl Into<String>, value: f64, tolerance: f64) {
        self.checks.push(Check {
            label: label.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            informational: false,
        });
    }

    fn flag(&mut self, label: impl Into<String>, ok: bool) {
        self.checks.push(Check {
            label: label.into(),
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
            informational: false,
        });
    }

    fn info(&mut self, label: impl Into<String>, value: f64, tolerance: f64) {
        self.checks.push(Check {
            label: label.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            informational: true,
        });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn error(&mut self, context: &str, e: Error) {
        self.flag(format!("{context}: {e}"), false);
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} [{:>2}] {}: {} ({:.2} s)",
            self.id, self.module, self.title, self.elapsed_s
        )?;
        for c in &self.checks {
            let tag = match (c.informational, c.passed) {
                (true, _) => "info",
                (false, true) => "ok",
                (false, false) => "FAILED",
            };
            write!(
                f,
                "\n    {tag:<6} {} = {:.3e} (limit {:.1e})",
                c.label, c.value, c.tolerance
            )?;
        }
        for n in &self.notes {
            write!(f, "\n    note   {n}")?;
        }
        Ok(())
    }
}

pub fn run_criterion(c: &Criterion, opts: &VerifyOptions) -> CriterionReport {
    let mut rec = Recorder::default();
    let start = Instant::now();
    (c.run)(opts, &mut rec);
    let elapsed_s = start.elapsed().as_secs_f64();
    let passed = rec.checks.iter().all(|k| k.informational || k.passed);
    CriterionReport {
        id: c.id,
        module: c.module,
        title: c.title,
        passed,
        elapsed_s,
        checks: rec.checks,
        notes: rec.notes,
    }
}

pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let criteria: Vec<CriterionReport> = CRITERIA
        .iter()
        .filter(|c| opts.filter.as_deref().is_none_or(|f| c.matches(f)))
        .map(|c| run_criterion(c, opts))
        .collect();
    VerifyReport {
        seed: opts.seed,
        filter: opts.filter.clone(),
        perturbation: opts.perturbation,
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

fn budget(rec: &mut Recorder, start: Instant, seconds: f64) {
    rec.info("wall time [s]", start.elapsed().as_secs_f64(), seconds);
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

fn c01_free(_: &VerifyOptions, rec: &mut Recorder) {
    let start = Instant::now();
    let (mut resp, mut conn) = (0.0f64, 0.0f64);
    for n in 1..=50 {
        let spec = JacobiSpec::<f64>::free(n);
        let r = match response_vector(&spec, 2 * n - 1, Boundary::SemiInfinite) {
            Ok(r) => r,
            Err(e) => return rec.error("response", e),
        };
        for (t, &x) in r.as_slice().iter().enumerate() {
            resp = resp.max((x - if t == 0 { 1.0 } else { 0.0 }).abs());
        }
        match connecting_from_response(&r, n) {
            Ok(c) => conn = conn.max(max_abs(&(c - DMatrix::identity(n, n)))),
            Err(e) => return rec.error("connecting", e),
        }
    }
    rec.le("max |r − e₀|, N ≤ 50", resp, 1e-12);
    rec.le("max |C^N − I|, N ≤ 50", conn, 1e-12);
    budget(rec, start, 1.0);
}

fn c02_roundtrip(opts: &VerifyOptions, rec: &mut Recorder) {
    let start = Instant::now();
    let mut g = rng(opts.seed);
    let (mut worst, mut worst_f64) = (0.0f64, 0.0f64);
    let mut refused = 0usize;
    let mut inadmissible = 0usize;
    for k in 0..100 {
        let n = 1 + k % 20;
        let spec = random_real_spec(n, g.gen());
        match opts.perturbation {
            None => {
                match roundtrip_report(&spec, n) {
                    Ok(rep) => worst = worst.max(rep.coefficient_error),
                    Err(e) => return rec.error("round trip", e),
                }
                if let Ok(rep) = roundtrip_report_with(&spec, n, Precision::Double) {
                    worst_f64 = worst_f64.max(rep.coefficient_error);
                }
            }
            Some(eps) => {
                let r = match response_vector(&spec, 2 * n, Boundary::SemiInfinite) {
                    Ok(r) => r,
                    Err(e) => return rec.error("response", e),
                };
                let noisy: Vec<f64> = r
                    .as_slice()
                    .iter()
                    .map(|&x| x + eps * g.gen_range(-1.0..1.0) * x.abs().max(1.0))
                    .collect();
                let noisy = ResponseVector::new(noisy).expect("finite");
                if !characterize(&noisy, n, Mode::Real).admissible {
                    inadmissible += 1;
                }
                let dd: Vec<Dd> = noisy.as_slice().iter().map(|&x| Dd::from(x)).collect();
                match invert_factorization_dd(&dd, n) {
                    Ok(inv) => {
                        let err = coefficient_error(&spec, &inv.recovered);
                        worst = worst.max(err);
                    }
                    Err(_) => refused += 1,
                }
            }
        }
    }
    if let Some(eps) = opts.perturbation {
        rec.note(format!("responses perturbed by relative {eps:e}"));
        rec.le("characterization failures", inadmissible as f64, 0.0);
        rec.le("inversions refused", refused as f64, 0.0);
    }
    rec.le("max relative coefficient error (double-double)", worst, 1e-8);
    if opts.perturbation.is_none() {
        rec.info("max relative coefficient error (f64)", worst_f64, 1e-8);
    }
    budget(rec, start, 10.0);
}

fn coefficient_error(spec: &JacobiSpec<f64>, got: &JacobiSpec<f64>) -> f64 {
    let mut err = 0.0f64;
    for (x, y) in spec.a().iter().zip(got.a()) {
        err = err.max((x - y).abs() / x.abs());
    }
    for (x, y) in spec.b().iter().zip(got.b()) {
        err = err.max((x - y).abs() / x.abs().max(1.0));
    }
    err
}

fn c03_gram(opts: &VerifyOptions, rec: &mut Recorder) {
    let mut g = rng(opts.seed ^ 3);
    let (mut wave, mut heat) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let n = 1 + k % 20;
        let spec = random_real_spec(n, g.gen());
        let step = || -> Result<(f64, f64)> {
            let r = response_vector(&spec, 2 * n - 1, Boundary::SemiInfinite)?;
            let c = connecting_from_response(&r, n)?;
            let w = control_matrix_natural(&spec, n)?;
            let dw = max_abs(&(&c - w.transpose() * &w)) / c.amax().max(1.0);
            let s = heat_response(&spec, 2 * n - 1, Boundary::SemiInfinite)?;
            let h = heat_connecting(&s, n)?;
            let v = heat_control_matrix(&spec, n)?;
            let dh = max_abs(&(&h - v.transpose() * &v)) / h.amax().max(1.0);
            Ok((dw, dh))
        };
        match step() {
            Ok((dw, dh)) => {
                wave = wave.max(dw);
                heat = heat.max(dh);
            }
            Err(e) => return rec.error("Gram", e),
        }
    }
    rec.le("max |C^T − W*W| / max|C^T|", wave, 1e-10);
    rec.le("max |S^T − V*V| / max|S^T|", heat, 1e-10);
}

fn c04_spectral(opts: &VerifyOptions, rec: &mut Recorder) {
    let mut g = rng(opts.seed ^ 4);
    let (mut resp, mut conn) = (0.0f64, 0.0f64);
    for n in 1..=15 {
        for _ in 0..4 {
            let spec = random_real_spec(n, g.gen());
            let step = || -> Result<(f64, f64)> {
                let mu = spectral_measure(&spec)?;
                let len = 2 * n + 6;
                let r = response_vector(&spec, len, Boundary::Dirichlet)?;
                let tables: Vec<Vec<f64>> = mu.eigenvalues().iter().map(|&l| chebyshev_table(len, l)).collect();
                let w = mu.weights();
                let mut dr = 0.0f64;
                for t in 1..=len {
                    let sum: f64 = w.iter().zip(&tables).map(|(wk, u)| wk * u[t]).sum();
                    let scale: f64 = w.iter().zip(&tables).map(|(wk, u)| (wk * u[t]).abs()).sum();
                    dr = dr.max((r.as_slice()[t - 1] - sum).abs() / scale.max(1.0));
                }
                let c = connecting_from_response(&r, n)?;
                let mut dc = 0.0f64;
                for l in 0..n {
                    for m in 0..n {
                        let sum: f64 = w.iter().zip(&tables).map(|(wk, u)| wk * u[n - l] * u[n - m]).sum();
                        dc = dc.max((c[(l, m)] - sum).abs());
                    }
                }
                Ok((dr, dc / c.amax().max(1.0)))
            };
            match step() {
                Ok((dr, dc)) => {
                    resp = resp.max(dr);
                    conn = conn.max(dc);
                }
                Err(e) => return rec.error("spectral", e),
            }
        }
    }
    rec.le("max |r_{t−1} − Σ wₖ𝒯_t(λₖ)| / scale, N ≤ 15", resp, 1e-10);
    rec.le("max |C^T − Σ wₖ𝒯𝒯| / max|C^T|, N ≤ 15", conn, 1e-10);
}

fn c05_moments(opts: &VerifyOptions, rec: &mut Recorder) {
    let mut g = rng(opts.seed ^ 5);
    let mut worst = [0.0f64; 6];
    for n in 1..=15 {
        for _ in 0..3 {
            let spec = random_real_spec(n, g.gen());
            let step = || -> Result<[f64; 6]> {
                let mu = spectral_measure(&spec)?;
                let s = moments_of_measure(&mu, 2 * n - 1);
                let r = moments_to_response(&s);
                let back = response_to_moments(&r);
                let lam = lambda_matrix(s.len()).to_dmatrix();
                let inv = lam.clone().try_inverse().ok_or(Error::Singular("Λ".into()))?;
                let sv = nalgebra::DVector::from_column_slice(s.as_slice());
                let bound = inv.abs() * (lam.abs() * sv.abs());
                let mut rt = 0.0f64;
                for t in 0..s.len() {
                    let scale = (f64::EPSILON * bound[t]).max(f64::MIN_POSITIVE);
                    rt = rt.max((back.as_slice()[t] - s.as_slice()[t]).abs() / scale);
                }
                let lt = lambda_tilde(n);
                let h = hankel_pair(&s, n, HankelOrdering::Reversed)?;
                let c = connecting_from_moments(r.as_slice(), n);
                let via = &lt * &h.s0 * lt.transpose();
                let scale = (&lt.abs() * h.s0.abs() * lt.transpose().abs()).amax();
                let br = (&c - via).amax() / scale.max(1.0);
                let atom_err = |got: &[(f64, f64)]| {
                    got.iter()
                        .zip(mu.atoms())
                        .map(|(x, z)| (x.0 - z.0).abs().max((x.1 - z.1).abs()))
                        .fold(0.0, f64::max)
                };
                let sd = moments_of_measure_dd(&mu, 2 * n - 1);
                let sp = truncated_moment_spectral_dd(&sd, n)?;
                let (_, nv) = truncated_moment_naive_dd(&sd, n)?;
                let sp64 = truncated_moment_spectral(&s, n).map_or(f64::INFINITY, |m| atom_err(m.measure.atoms()));
                let nv64 = truncated_moment_naive(&s, n, &[]).map_or(f64::INFINITY, |m| atom_err(m.1.atoms()));
                Ok([rt, br, atom_err(sp.measure.atoms()), atom_err(nv.atoms()), sp64, nv64])
            };
            match step() {
                Ok(v) => {
                    for (w, x) in worst.iter_mut().zip(v) {
                        *w = w.max(x);
                    }
                }
                Err(e) => return rec.error(&format!("moments N = {n}"), e),
            }
        }
    }
    rec.le("Λ round trip / (ε·|Λ⁻¹||Λ||s|)", worst[0], 8.0);
    rec.le("|C^N − Λ̃S₀Λ̃*| / scale", worst[1], 1e-9);
    rec.le("atoms/weights, generalized eigenproblem route", worst[2], 1e-8);
    rec.le("atoms/weights, factorization route", worst[3], 1e-8);
    rec.info(
        "atoms/weights from f64 moments, generalized eigenproblem route",
        worst[4],
        1e-8,
    );
    rec.info("atoms/weights from f64 moments, factorization route", worst[5], 1e-8);
    rec.note("truncated problems take moments accumulated in double-double; f64 moment data is shown for reference");
}

fn c06_complex(_: &VerifyOptions, rec: &mut Recorder) {
    let r = ResponseVector::new(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ])
    .expect("finite");
    let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    match connecting_from_response(&r, 3) {
        Ok(c) => {
            let d = c
                .iter()
                .zip(expected.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            rec.le("|C_T − [[0,1,0],[1,1,1],[0,1,1]]|", d, 0.0);
            let det = c.determinant();
            rec.flag(
                "C_T invertible (det = −1)",
                (det - Complex64::new(-1.0, 0.0)).norm() < 1e-15,
            );
            let sub = c.view((1, 1), (2, 2)).determinant();
            rec.flag("trailing 2×2 block singular", sub.norm() == 0.0);
        }
        Err(e) => rec.error("connecting", e),
    }
    let verdict = characterize(&r, 3, Mode::Complex);
    rec.flag(
        "characterization refuses (failing order 2)",
        !verdict.admissible && verdict.failing_order == Some(2),
    );
    let refused = matches!(
        crate::inverse_bc::invert_factorization(&r, 3),
        Err(Error::SingularMinor { order: 2, .. })
    );
    rec.flag("inversion refuses with singular minor of order 2", refused);
}

fn c07_toda(opts: &VerifyOptions, rec: &mut Recorder) {
    let start = Instant::now();
    let two = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).expect("valid");
    let mut closed = 0.0f64;
    for k in 0..=40 {
        let t = -2.0 + 0.1 * k as f64;
        match toda_solve(&two, t) {
            Ok(st) => {
                let th = (2.0 * t).tanh();
                closed = closed
                    .max((st.spec.a()[0] - 1.0 / (2.0 * t).cosh()).abs())
                    .max((st.spec.b()[0] - th).abs())
                    .max((st.spec.b()[1] + th).abs());
            }
            Err(e) => return rec.error("closed form", e),
        }
    }
    rec.le("N = 2 closed form, t ∈ [−2, 2]", closed, 1e-10);
    let mut g = rng(opts.seed ^ 7);
    let (mut oracle, mut eig, mut trace) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..40 {
        let n = 1 + k % 8;
        let spec = random_real_spec(n, g.gen());
        let t = g.gen_range(-2.0..=2.0);
        let step = || -> Result<(f64, f64, f64)> {
            let st = toda_solve(&spec, t)?;
            let or = toda_ode_oracle(&spec, t, 1e-3)?;
            let d = st
                .spec
                .a()
                .iter()
                .zip(or.a())
                .chain(st.spec.b().iter().zip(or.b()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let e0 = tridiagonal_eigenvalues(spec.b(), spec.a())?;
            let e1 = tridiagonal_eigenvalues(st.spec.b(), st.spec.a())?;
            let de = e0.iter().zip(&e1).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let tr0: f64 = spec.b().iter().sum();
            let dt = (st.spec.b().iter().sum::<f64>() - tr0).abs();
            Ok((d, de, dt))
        };
        match step() {
            Ok((d, de, dt)) => {
                oracle = oracle.max(d);
                eig = eig.max(de);
                trace = trace.max(dt);
            }
            Err(e) => return rec.error("Toda", e),
        }
    }
    rec.le("random N ≤ 8 vs RK4 (dt = 1e−3), |t| ≤ 2", oracle, 1e-6);
    rec.le("eigenvalue drift", eig, 1e-8);
    rec.le("trace drift", trace, 1e-8);
    budget(rec, start, 30.0);
}

fn c08_weyl(opts: &VerifyOptions, rec: &mut Recorder) {
    let l = Complex64::new(2.5, 0.0);
    match weyl_resolvent(&JacobiSpec::free(1), l, WeylKind::Free) {
        Ok(m) => rec.le("|m₀(5/2) + 1/2| (closed form)", (m + 0.5).norm(), 0.0),
        Err(e) => rec.error("free m", e),
    }
    let free = ResponseVector::new(vec![1.0; 1].into_iter().chain(vec![0.0; 7]).collect()).expect("finite");
    match weyl_series(&free, l, 1e-2) {
        Ok(ev) => rec.le("|series m₀(5/2) + 1/2|", (ev.m_series + 0.5).norm(), 0.0),
        Err(e) => rec.error("free series", e),
    }
    let mut g = rng(opts.seed ^ 8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = g.gen_range(1..=8);
        let spec = random_real_spec_in(n, (0.5, 2.0), (-2.0, 2.0), &mut g);
        let b = spec.coefficient_bound();
        let rr = 3.0 * b + 1.0;
        let lam = Complex64::new(
            g.gen_range(-1.0..1.0) * (rr + 1.0 / rr) * 1.5,
            (rr - 1.0 / rr) * g.gen_range(1.2..2.2),
        );
        if !in_domain_d(lam, b) {
            rec.flag(format!("sample {lam} outside D"), false);
            continue;
        }
        match weyl_evaluate(&spec, lam, 1e-9) {
            Ok(ev) => worst = worst.max((ev.m_series - ev.m_resolvent.unwrap_or(ev.m_series)).norm()),
            Err(e) => return rec.error("Weyl", e),
        }
    }
    rec.le("max |series − resolvent| at 20 λ ∈ D, B ≤ 2", worst, 1e-7);
}

fn c09_debranges(opts: &VerifyOptions, rec: &mut Recorder) {
    let mut g = rng(opts.seed ^ 9);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (mut repro_rel, mut repro_abs, mut kernel) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..100 {
        let t = 1 + k % 15;
        let spec = random_real_spec(t, g.gen());
        let z = c(g.gen_range(-2.5..2.5), g.gen_range(-1.0..1.0));
        let f = DeBrangesElement::new(
            (0..t)
                .map(|_| c(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0)))
                .collect(),
        );
        let l = c(g.gen_range(-2.0..2.0), g.gen_range(-0.5..0.5));
        let step = || -> Result<(f64, f64, f64)> {
            let ct = ConnectingMatrix::from_spec(&spec, t)?;
            let j = debranges_kernel(&ct, z)?;
            let fz = f.eval(z);
            let d = (debranges_inner(&ct, &j, &f)? - fz).norm();
            let cs = spec.to_complex();
            let pz = phi_eval(&cs, z, t)?;
            let pl = phi_eval(&cs, l, t)?;
            let sum: Complex64 = pz.iter().zip(&pl).map(|(a, b)| a.conj() * b).sum();
            let dk = (j.eval(l) - sum).norm() / (1.0 + sum.norm());
            Ok((d / (1.0 + fz.norm()), d, dk))
        };
        match step() {
            Ok((rel, abs, dk)) => {
                repro_rel = repro_rel.max(rel);
                repro_abs = repro_abs.max(abs);
                kernel = kernel.max(dk);
            }
            Err(e) => return rec.error("de Branges", e),
        }
    }
    rec.le("max |[J_z,F] − F(z)| / (1 + |F(z)|), T ≤ 15", repro_rel, 1e-10);
    rec.info("max |[J_z,F] − F(z)| (absolute)", repro_abs, 1e-10);
    rec.le("max |J_z(λ) − Σφ̄ₙ(z)φₙ(λ)| / (1 + |Σ|)", kernel, 1e-9);
}

fn c10_continuous(opts: &VerifyOptions, rec: &mut Recorder) {
    let mut g = rng(opts.seed ^ 10);
    let spec = random_real_spec_in(3, (0.5, 1.0), (1.5, 4.0), &mut g);
    let err = |m: usize| -> Result<f64> {
        let grid = TimeGrid::new(2.0, m)?;
        let r = response_function(&spec, &grid)?;
        let kd = connecting_dynamic(&r, &grid, Quadrature::Trapezoid)?;
        Ok((kd - connecting_spectral(&spec, &grid)?).amax())
    };
    match (err(40), err(80)) {
        (Ok(e1), Ok(e2)) => {
            rec.info("kernel error, M = 40", e1, f64::INFINITY);
            rec.info("kernel error, M = 80", e2, f64::INFINITY);
            rec.le("|error ratio − 4|", (e1 / e2 - 4.0).abs(), 0.5);
        }
        (Err(e), _) | (_, Err(e)) => return rec.error("kernels", e),
    }
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let spec = random_real_spec_in(n, (0.5, 1.0), (1.5, 4.0), &mut g);
        let step = || -> Result<f64> {
            let grid = TimeGrid::new(8.0, 800)?;
            let r = response_function(&spec, &grid)?;
            let rc = recover_matrix_continuous(&r, n, &grid)?;
            Ok(spec
                .a()
                .iter()
                .zip(rc.spec.a())
                .chain(spec.b().iter().zip(rc.spec.b()))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max))
        };
        match step() {
            Ok(e) => worst = worst.max(e),
            Err(e) => return rec.error(&format!("recovery N = {n}"), e),
        }
    }
    rec.le("recovery error, N ≤ 6, M = 800", worst, 1e-3);
    rec.note("recovery family aₖ ∈ [0.5, 1], bₖ ∈ [1.5, 4], T = 8");
}

fn c11_string(_: &VerifyOptions, rec: &mut Recorder) {
    let start = Instant::now();
    let psi = TestFunction::Gauss { sigma: 1.0 };
    let mut rows = Vec::new();
    for n in [25, 50, 100, 200] {
        match StringSpec::uniform(n).and_then(|s| string_pairings(&s, psi, 0.5)) {
            Ok(p) => rows.push(p),
            Err(e) => return rec.error(&format!("string N = {n}"), e),
        }
    }
    let decreasing = |f: &dyn Fn(usize) -> f64| rows.windows(2).enumerate().all(|(k, _)| f(k + 1) < f(k));
    for p in &rows {
        rec.info(
            format!("N = {}: |⟨r_N,ψ⟩ − ψ(0)|", p.n),
            p.response_error,
            f64::INFINITY,
        );
        rec.info(
            format!("N = {}: corrected pairing error", p.n),
            p.corrected_error,
            f64::INFINITY,
        );
        rec.info(
            format!("N = {}: field pairing error", p.n),
            p.field_error,
            f64::INFINITY,
        );
    }
    rec.flag(
        "response pairing error decreases",
        decreasing(&|k| rows[k].response_error),
    );
    rec.flag(
        "corrected pairing error decreases",
        decreasing(&|k| rows[k].corrected_error),
    );
    rec.flag("field pairing error decreases", decreasing(&|k| rows[k].field_error));
    budget(rec, start, 60.0);
}

fn c12_graph(opts: &VerifyOptions, rec: &mut Recorder) {
    let mut g = rng(opts.seed ^ 12);
    let (len, horizon) = (9, 30);
    let path = GraphSpec::path(len);
    let ctrl: Vec<f64> = (0..horizon).map(|_| g.gen_range(-1.0..1.0)).collect();
    let step = || -> Result<f64> {
        let field = simulate(&path, BTreeMap::from([("l".to_string(), ctrl.clone())]), horizon)?;
        let w = solve_finite_dirichlet(&JacobiSpec::free(len - 1), &Control::new(ctrl.clone())?, horizon)?;
        let mut d = 0.0f64;
        for t in 0..horizon {
            for n in 0..=len {
                d = d.max((field.sample(&path, 0, n, t as i64 + 1)? - if n == len { 0.0 } else { w.get(n, t) }).abs());
            }
        }
        Ok(d)
    };
    match step() {
        Ok(d) => rec.le("path graph vs free Jacobi field", d, 0.0),
        Err(e) => return rec.error("path", e),
    }
    let n = 6;
    let horizon = 40;
    let star = GraphSpec::star(3, n);
    let mut f = vec![0.0; horizon];
    f[0] = 1.0;
    let field = match simulate(&star, BTreeMap::from([("0".to_string(), f)]), horizon) {
        Ok(x) => x,
        Err(e) => return rec.error("star", e),
    };
    let t = (n + 4) as i64;
    let (Ok(incoming), Ok(out1), Ok(out2)) = (
        field.edge_samples(&star, 0, t),
        field.edge_samples(&star, 1, t),
        field.edge_samples(&star, 2, t),
    ) else {
        return rec.flag("edge samples", false);
    };
    rec.le("|reflected + 1/3|", (incoming[n - 3] + 1.0 / 3.0).abs(), 1e-15);
    rec.le(
        "|transmitted − 2/3|",
        (out1[n - 3] - 2.0 / 3.0).abs().max((out2[n - 3] - 2.0 / 3.0).abs()),
        1e-15,
    );
    let log = match energy_log(&star, &field) {
        Ok(l) => l,
        Err(e) => return rec.error("energy", e),
    };
    let post = &log[3..];
    let spread = |f: &dyn Fn(usize) -> f64| {
        let (lo, hi) = (0..post.len())
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        hi - lo
    };
    rec.le(
        "3-star: spread of T_D + U_D after control",
        spread(&|k| post[k].total),
        1e-12,
    );
    rec.info(
        "3-star: spread of leapfrog energy (vertex mass p/2)",
        spread(&|k| post[k].conserved),
        1e-12,
    );
    let quiet: Vec<f64> = post
        .iter()
        .filter(|r| {
            let s = r.t as i64;
            field
                .state(s)
                .vertices
                .iter()
                .chain(&field.state(s - 1).vertices)
                .all(|&v| v == 0.0)
        })
        .map(|r| r.total)
        .collect();
    let qs =
        quiet.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - quiet.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    rec.info("3-star: spread of T_D + U_D while no pulse is at a vertex", qs, 1e-12);
    rec.note("T_D + U_D with unit vertex mass changes while a pulse sits on a vertex; see the leapfrog energy for the conserved quantity");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_modules_and_ids() {
        let pick = |f: &str| {
            CRITERIA
                .iter()
                .filter(|c| c.matches(f))
                .map(|c| c.id)
                .collect::<Vec<_>>()
        };
        assert_eq!(pick("toda"), vec![7]);
        assert_eq!(pick("12"), vec![12]);
        assert_eq!(pick("gram"), vec![3]);
        assert!(pick("nothing-here").is_empty());
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 6] {
            let c = CRITERIA.iter().find(|c| c.id == id).unwrap();
            let rep = run_criterion(c, &VerifyOptions::default());
            assert!(rep.passed, "{rep}");
        }
    }

    #[test]
    fn perturbation_is_detected() {
        let opts = VerifyOptions {
            filter: Some("2".into()),
            perturbation: Some(1e-2),
            ..VerifyOptions::default()
        };
        let rep = run(&opts);
        assert_eq!(rep.criteria.len(), 1);
        assert!(!rep.all_passed);
    }
}
