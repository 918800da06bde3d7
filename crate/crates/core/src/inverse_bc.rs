//! Recovery of Jacobi coefficients from a response vector, the Krein-type
//! equation for special controls, and admissibility checks on the data.

use nalgebra::{ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::discrete_wave::{connecting_rows, response_vector, response_vector_dd, Boundary, ResponseVector};
use crate::error::{Error, Result};
use crate::jacobi::{JacobiSpec, Mode};
use crate::linalg::{ldlt, Ldlt, Rows};
use crate::scalar::{Complex64, Field, Scalar};

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct InversionReport<S> {
    /// Recovered block of size `T`. In complex mode `a` holds principal square roots of `a_squared`.
    pub recovered: JacobiSpec<S>,
    /// `a₁², …, a_{T−1}²`.
    pub a_squared: Vec<S>,
    /// `det C_1, …, det C_T` of the normalized `C_T`.
    pub determinants: Vec<S>,
    /// Whether `b_T` was determined by the data (needs `2T` entries); otherwise it is set to 0.
    pub b_last_from_data: bool,
    /// Relative pivot threshold used for the singularity test.
    pub pivot_rtol: f64,
    /// Max deviation of the re-simulated response relative to `max |rₜ|`.
    pub residual: f64,
}

pub(crate) struct FactorCore<F> {
    pub a_sq: Vec<F>,
    pub b: Vec<F>,
    pub minors: Vec<F>,
    pub b_last_from_data: bool,
}

fn reversed<F: Field>(c: &Rows<F>) -> Rows<F> {
    let t = c.len();
    (0..t)
        .map(|i| (0..t).map(|j| c[t - 1 - i][t - 1 - j]).collect())
        .collect()
}

/// LDLᵀ of `C_T = J C^T J`. Its leading minors are the trailing blocks `C^m` of `C^T`.
fn factor_reversed<F: Field>(r: &[F], t: usize) -> Result<Ldlt<F>> {
    let c = reversed(&connecting_rows(r, t));
    ldlt(&c, F::singular_rtol()).map_err(|e| Error::SingularMinor {
        order: e.order,
        pivot: e.pivot,
        tol: e.tol,
    })
}

fn check_len(len: usize, t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Invalid("T must be positive".into()));
    }
    if len < 2 * t - 1 {
        return Err(Error::TooShort {
            what: "response vector",
            needed: 2 * t - 1,
            got: len,
        });
    }
    Ok(())
}

/// Coefficients from the LDLᵀ factorization of `C_T` built from `r / r₀`.
///
/// `aₖ² = dₖ/d_{k−1}` (pivot ratios) and `bₖ = yₖ − y_{k−1}` where `yₖ = L_{k+1,k}`
/// is the Cramer quotient `det C_{k+1,k}/det C_k`.
pub(crate) fn factor_core<F: Field>(r: &[F], t: usize) -> Result<FactorCore<F>> {
    check_len(r.len(), t)?;
    let r0 = r[0];
    if r0.mag() == 0.0 {
        return Err(Error::SingularMinor {
            order: 1,
            pivot: 0.0,
            tol: 0.0,
        });
    }
    let rn: Vec<F> = r.iter().map(|&x| x / r0).collect();
    let fac = factor_reversed(&rn, t)?;
    let a_sq = (1..t).map(|k| fac.d[k] / fac.d[k - 1]).collect();
    let mut y = vec![F::zero(); t + 1];
    for k in 1..t {
        y[k] = fac.l[k][k - 1];
    }
    let mut b: Vec<F> = (1..t).map(|k| y[k] - y[k - 1]).collect();
    let b_last_from_data = rn.len() >= 2 * t;
    let b_last = if b_last_from_data {
        // Replacement column of C_{T+1,T}: first column of C^{T+1}, reversed.
        let m: Vec<F> = (1..=t)
            .map(|i| {
                let p = t + 2 - i;
                (0..=(t + 1 - p)).fold(F::zero(), |acc, k| acc + rn[p - 1 + 2 * k])
            })
            .collect();
        y[t] = *fac.solve(&m).last().unwrap();
        y[t] - y[t - 1]
    } else {
        F::zero()
    };
    b.push(b_last);
    Ok(FactorCore {
        a_sq,
        b,
        minors: fac.leading_minors(),
        b_last_from_data,
    })
}

fn relative_residual<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    let scale = a.iter().map(|x| x.mag()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (*x - *y).mag()).fold(0.0, f64::max) / scale
}

/// Square roots of `aₖ²`: positive roots in real mode, principal roots in complex mode.
fn assemble<S: Scalar>(a0: S, a_sq: &[S], b: Vec<S>) -> Result<JacobiSpec<S>> {
    let mut a = Vec::with_capacity(a_sq.len());
    for (k, &sq) in a_sq.iter().enumerate() {
        if !S::COMPLEX && sq.real_part() <= 0.0 {
            return Err(Error::NotRealizable(format!(
                "a_{}² = {:e} is not positive",
                k + 1,
                sq.real_part()
            )));
        }
        a.push(ComplexField::sqrt(sq));
    }
    JacobiSpec::new(a0, a, b)
}

pub fn invert_factorization<S: Scalar>(r: &ResponseVector<S>, t: usize) -> Result<InversionReport<S>> {
    let core = factor_core(r.as_slice(), t)?;
    let recovered = assemble(r.a0(), &core.a_sq, core.b)?;
    let len = r.len().min(2 * t);
    let resim = response_vector(&recovered, len, Boundary::SemiInfinite)?;
    let residual = relative_residual(&r.as_slice()[..len], resim.as_slice());
    Ok(InversionReport {
        recovered,
        a_squared: core.a_sq,
        determinants: core.minors,
        b_last_from_data: core.b_last_from_data,
        pivot_rtol: S::singular_rtol(),
        residual,
    })
}

/// Factorization in double-double arithmetic for data given to that precision.
pub fn invert_factorization_dd(r: &[Dd], t: usize) -> Result<InversionReport<f64>> {
    let core = factor_core(r, t)?;
    let a_sq: Vec<f64> = core.a_sq.iter().map(|&x| x.to_f64()).collect();
    let b: Vec<f64> = core.b.iter().map(|&x| x.to_f64()).collect();
    let recovered = assemble(r[0].to_f64(), &a_sq, b)?;
    let len = r.len().min(2 * t);
    let resim = response_vector_dd(&recovered, len, Boundary::SemiInfinite)?;
    let data: Vec<f64> = r[..len].iter().map(|&x| x.to_f64()).collect();
    let resim: Vec<f64> = resim.iter().map(|&x| x.to_f64()).collect();
    Ok(InversionReport {
        recovered,
        a_squared: a_sq,
        determinants: core.minors.iter().map(|&x| x.to_f64()).collect(),
        b_last_from_data: core.b_last_from_data,
        pivot_rtol: Dd::singular_rtol(),
        residual: relative_residual(&data, &resim),
    })
}

/// `κ₀ … κ_{T−1}` from `κ_T = 0`, `κ_{T−1} = 1`, `κ_{t−1} = λκₜ − κ_{t+1}`.
pub fn kappa<S: Scalar>(lambda: S, t: usize) -> Vec<S> {
    assert!(t >= 1);
    let mut k = vec![S::zero(); t + 1];
    k[t - 1] = S::one();
    for s in (1..t).rev() {
        k[s - 1] = lambda * k[s] - k[s + 1];
    }
    k.truncate(t);
    k
}

/// Special control solving `C^T f = β κ − α Rᵀ κ`, where `R` is the response
/// convolution on `(f₀ … f_{T−1})` shifted by one step.
///
/// Transposes are plain, matching `C^T = WᵀW`, so the control reaches `y(λ)`
/// itself (see [`krein_target`]); for real data and real `λ, α, β` this is `ȳ`.
pub fn solve_krein<S: Scalar>(
    c: &DMatrix<S>,
    r: &ResponseVector<S>,
    lambda: S,
    alpha: S,
    beta: S,
    t: usize,
) -> Result<Vec<S>> {
    if c.nrows() != t || c.ncols() != t {
        return Err(Error::Dimension(format!(
            "C is {}×{}, expected {t}×{t}",
            c.nrows(),
            c.ncols()
        )));
    }
    if r.len() < t {
        return Err(Error::TooShort {
            what: "response vector",
            needed: t,
            got: r.len(),
        });
    }
    let kp = kappa(lambda, t);
    let rs = r.as_slice();
    let rhs: Vec<S> = (0..t)
        .map(|j| {
            // (Rᵀκ)_j = Σ_{i>j} r_{i−1−j} κ_i
            let conv = (j + 1..t).fold(S::zero(), |acc, i| acc + rs[i - 1 - j] * kp[i]);
            beta * kp[j] - alpha * conv
        })
        .collect();
    // Solve in reversed order, whose leading minors are the blocks C^m.
    let rev: Rows<S> = (0..t)
        .map(|i| (0..t).map(|j| c[(t - 1 - i, t - 1 - j)]).collect())
        .collect();
    let fac = ldlt(&rev, S::singular_rtol())
        .map_err(|e| Error::Singular(format!("C^T: block of order {} is not invertible", e.order)))?;
    let rhs_rev: Vec<S> = rhs.into_iter().rev().collect();
    Ok(fac.solve(&rhs_rev).into_iter().rev().collect())
}

/// `(y₁ … y_T)` for the solution of `a_k y_{k+1} + a_{k−1} y_{k−1} + b_k y_k = λ y_k`,
/// `y₀ = α`, `y₁ = β`: the state reached by the Krein control.
pub fn krein_target<S: Scalar>(spec: &JacobiSpec<S>, lambda: S, alpha: S, beta: S, t: usize) -> Result<Vec<S>> {
    if spec.n() < t {
        return Err(Error::TooShort {
            what: "spec",
            needed: t,
            got: spec.n(),
        });
    }
    let mut y = vec![S::zero(); t + 1];
    y[0] = alpha;
    if t >= 1 {
        y[1] = beta;
    }
    for k in 1..t {
        y[k + 1] = ((lambda - spec.b_at(k)) * y[k] - spec.a_at(k - 1) * y[k - 1]) / spec.a_at(k);
    }
    Ok(y[1..].to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub admissible: bool,
    pub mode: Mode,
    /// Order of the first failing block `C^m`, if any.
    pub failing_order: Option<usize>,
    pub pivot_rtol: f64,
    pub detail: String,
}

/// Real mode: `C^T` positive definite. Complex mode: every trailing block `C^{T−k}` invertible.
///
/// Both are read off the unpivoted LDLᵀ of `C_T`, whose leading minors are the
/// blocks `C^m`, with the same pivot test as the inversion.
pub fn characterize<S: Scalar>(r: &ResponseVector<S>, t: usize, mode: Mode) -> Verdict {
    let rtol = S::singular_rtol();
    let verdict = |admissible: bool, order: Option<usize>, detail: String| Verdict {
        admissible,
        mode,
        failing_order: order,
        pivot_rtol: rtol,
        detail,
    };
    if t == 0 || r.len() < 2 * t - 1 {
        return verdict(
            false,
            None,
            format!("need {} entries, got {}", 2 * t.max(1) - 1, r.len()),
        );
    }
    if mode == Mode::Real && r.as_slice().iter().any(|x| x.to_c64().im != 0.0) {
        return verdict(false, None, "data is not real".into());
    }
    match factor_reversed(r.as_slice(), t) {
        Err(Error::SingularMinor { order, .. }) => verdict(false, Some(order), format!("C^{order} is singular")),
        Err(e) => verdict(false, None, e.to_string()),
        Ok(f) => match mode {
            Mode::Complex => verdict(true, None, "all blocks invertible".into()),
            Mode::Real => match f.d.iter().position(|p| p.real_part() <= 0.0) {
                None => verdict(true, None, "C^T positive definite".into()),
                Some(k) => verdict(false, Some(k + 1), format!("C^{} has a negative pivot", k + 1)),
            },
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchrodingerReport {
    pub pass: bool,
    pub positive_definite: bool,
    /// `det C^l`, `l = 1…T`.
    pub minors: Vec<f64>,
    /// Even entries `r₀, r₂, …, r_{2T−2}` forced by `det C^l = 1` and the odd entries.
    pub implied_even: Vec<f64>,
    /// Max deviation between the data's even entries and the implied ones.
    pub even_deviation: f64,
}

pub const SCHRODINGER_TOL: f64 = 1e-8;

fn det_real(c: &Rows<f64>, off: usize) -> f64 {
    let m = c.len() - off;
    DMatrix::from_fn(m, m, |i, j| c[off + i][off + j]).determinant()
}

pub fn schrodinger_check(r: &ResponseVector<f64>, t: usize) -> Result<SchrodingerReport> {
    if t == 0 || r.len() < 2 * t - 1 {
        return Err(Error::TooShort {
            what: "response vector",
            needed: 2 * t.max(1) - 1,
            got: r.len(),
        });
    }
    let rs = r.as_slice();
    let c = connecting_rows(rs, t);
    let minors: Vec<f64> = (1..=t).map(|l| det_real(&c, t - l)).collect();
    let positive_definite = characterize(r, t, Mode::Real).admissible;
    let pass = positive_definite && minors.iter().all(|d| (d - 1.0).abs() <= SCHRODINGER_TOL);

    // r_{2m} enters C^{m+1} only through its (1,1) entry, with cofactor det C^m.
    let mut rt: Vec<f64> = rs[..2 * t - 1].to_vec();
    rt[0] = 1.0;
    let mut implied = vec![1.0];
    let mut prev_det = 1.0;
    for m in 1..t {
        rt[2 * m] = 0.0;
        let cm = connecting_rows(&rt[..2 * m + 1], m + 1);
        let d0 = det_real(&cm, 0);
        let v = (1.0 - d0) / prev_det;
        rt[2 * m] = v;
        implied.push(v);
        prev_det = det_real(&connecting_rows(&rt[..2 * m + 1], m + 1), 0);
    }
    let even_deviation = implied
        .iter()
        .enumerate()
        .map(|(m, v)| (v - rs[2 * m]).abs())
        .fold(0.0, f64::max);
    Ok(SchrodingerReport {
        pass,
        positive_definite,
        minors,
        implied_even: implied,
        even_deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    /// Simulation and factorization in `f64`.
    Double,
    /// Simulation and factorization in double-double; inputs and outputs stay `f64`.
    DoubleDouble,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct RoundtripReport<S> {
    pub inversion: InversionReport<S>,
    /// Max over `|Δa₀|/|a₀|`, `|Δaₖ|/|aₖ|` (complex mode: on `aₖ²`) and `|Δbₖ|/max(1, |bₖ|)`.
    pub coefficient_error: f64,
}

fn check_spec_size(n: usize, t: usize) -> Result<()> {
    if n < t || t == 0 {
        return Err(Error::TooShort {
            what: "spec",
            needed: t.max(1),
            got: n,
        });
    }
    Ok(())
}

fn coefficient_error<S: Scalar>(spec: &JacobiSpec<S>, inv: &InversionReport<S>, t: usize) -> f64 {
    let rel = |x: S, y: S| (x - y).mag() / x.mag();
    let mut err = rel(spec.a0(), inv.recovered.a0());
    for k in 1..t {
        let e = if S::COMPLEX {
            let ak = spec.a_at(k);
            rel(ak * ak, inv.a_squared[k - 1])
        } else {
            rel(spec.a_at(k), inv.recovered.a_at(k))
        };
        err = err.max(e);
    }
    for n in 1..=t {
        let (x, y) = (spec.b_at(n), inv.recovered.b_at(n));
        err = err.max((x - y).mag() / x.mag().max(1.0));
    }
    err
}

/// Simulates `2T` response entries, inverts, and compares with the truncated spec.
/// Uses double-double arithmetic; see [`roundtrip_report_with`].
pub fn roundtrip_report(spec: &JacobiSpec<f64>, t: usize) -> Result<RoundtripReport<f64>> {
    roundtrip_report_with(spec, t, Precision::DoubleDouble)
}

pub fn roundtrip_report_with(spec: &JacobiSpec<f64>, t: usize, precision: Precision) -> Result<RoundtripReport<f64>> {
    check_spec_size(spec.n(), t)?;
    let inv = match precision {
        Precision::Double => invert_factorization(&response_vector(spec, 2 * t, Boundary::SemiInfinite)?, t)?,
        Precision::DoubleDouble => {
            invert_factorization_dd(&response_vector_dd(spec, 2 * t, Boundary::SemiInfinite)?, t)?
        }
    };
    Ok(RoundtripReport {
        coefficient_error: coefficient_error(spec, &inv, t),
        inversion: inv,
    })
}

/// Complex-mode round trip in `f64`; compares `aₖ²`, since the sign of `aₖ` is not determined.
pub fn roundtrip_report_complex(spec: &JacobiSpec<Complex64>, t: usize) -> Result<RoundtripReport<Complex64>> {
    check_spec_size(spec.n(), t)?;
    let inv = invert_factorization(&response_vector(spec, 2 * t, Boundary::SemiInfinite)?, t)?;
    Ok(RoundtripReport {
        coefficient_error: coefficient_error(spec, &inv, t),
        inversion: inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_wave::{connecting_from_response, control_matrix, control_matrix_natural};
    use crate::random::{random_complex_spec, random_real_spec};
    use proptest::prelude::*;

    fn rv(r: &[f64]) -> ResponseVector<f64> {
        ResponseVector::new(r.to_vec()).unwrap()
    }

    #[test]
    fn free_response_inverts_to_free_block() {
        let rep = invert_factorization(&rv(&[1.0, 0.0, 0.0, 0.0, 0.0]), 3).unwrap();
        assert_eq!(rep.recovered.a(), &[1.0, 1.0]);
        assert_eq!(rep.recovered.b(), &[0.0, 0.0, 0.0]);
        assert!(!rep.b_last_from_data);
        assert_eq!(rep.determinants.len(), 3);
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn two_site_block_round_trip() {
        let spec = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap();
        let r = response_vector(&spec, 4, Boundary::Dirichlet).unwrap();
        let rep = invert_factorization(&r, 2).unwrap();
        assert_eq!(rep.recovered.a(), &[1.0]);
        assert_eq!(rep.recovered.b(), &[0.0, 0.0]);
        assert!(rep.b_last_from_data);
    }

    #[test]
    fn singular_minor_is_reported() {
        let err = invert_factorization(&rv(&[1.0, 1.0, 0.0, 0.0, -1.0]), 3).unwrap_err();
        assert!(matches!(err, Error::SingularMinor { order: 2, .. }), "{err:?}");
    }

    #[test]
    fn single_site_recovers_b() {
        let c = 0.7;
        let spec = JacobiSpec::new(1.3, vec![], vec![c]).unwrap();
        let r = response_vector(&spec, 2, Boundary::Dirichlet).unwrap();
        let rep = invert_factorization(&r, 1).unwrap();
        assert!((rep.recovered.b()[0] - c).abs() < 1e-15);
        assert_eq!(rep.recovered.a0(), 1.3);
    }

    #[test]
    fn a0_scaling_is_removed() {
        let spec = random_real_spec(6, 2).with_a0(3.0).unwrap();
        let rep = roundtrip_report(&spec, 6).unwrap();
        assert!(rep.coefficient_error < 1e-10);
        assert!(rep.inversion.residual < 1e-12);
    }

    #[test]
    fn krein_examples() {
        let r = rv(&[1.0, 0.0, 0.0]);
        let c = connecting_from_response(&r, 2).unwrap();
        assert_eq!(kappa(0.0, 2), vec![0.0, 1.0]);
        let f = solve_krein(&c, &r, 0.0, 0.0, 1.0, 2).unwrap();
        assert_eq!(f, vec![0.0, 1.0]);
        let f = solve_krein(&c, &r, 0.7, 0.0, 0.0, 2).unwrap();
        assert_eq!(f, vec![0.0, 0.0]);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(solve_krein(&singular, &r, 0.0, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn krein_control_hits_target_in_complex_mode() {
        for seed in 0..8 {
            let spec = random_complex_spec(7, seed);
            let t = 7;
            let r = response_vector(&spec, 2 * t - 1, Boundary::SemiInfinite).unwrap();
            let c = connecting_from_response(&r, t).unwrap();
            let lam = Complex64::new(0.3, 0.8);
            let (al, be) = (Complex64::new(0.5, -0.2), Complex64::new(-1.0, 0.4));
            let f = solve_krein(&c, &r, lam, al, be, t).unwrap();
            let w = control_matrix_natural(&spec, t).unwrap();
            let wf = w * nalgebra::DVector::from_vec(f);
            let y = krein_target(&spec, lam, al, be, t).unwrap();
            let scale = y.iter().map(|x| x.norm()).fold(1.0, f64::max);
            for (a, b) in wf.iter().zip(&y) {
                assert!((a - b).norm() <= 1e-8 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn characterize_examples() {
        let free = rv(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(characterize(&free, 3, Mode::Real).admissible);
        assert!(characterize(&free, 3, Mode::Complex).admissible);
        let bad = rv(&[1.0, 1.0, 0.0, 0.0, -1.0]);
        let v = characterize(&bad, 3, Mode::Complex);
        assert!(!v.admissible);
        assert_eq!(v.failing_order, Some(2));
        assert!(!characterize(&rv(&[1.0, 10.0, 0.0]), 2, Mode::Real).admissible);
    }

    #[test]
    fn schrodinger_examples() {
        let free = schrodinger_check(&rv(&[1.0, 0.0, 0.0, 0.0, 0.0]), 3).unwrap();
        assert!(free.pass);
        assert_eq!(free.minors, vec![1.0, 1.0, 1.0]);
        let spec = JacobiSpec::new(1.0, vec![1.0, 1.0, 1.0], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = response_vector(&spec, 7, Boundary::SemiInfinite).unwrap();
        assert_eq!(&r.as_slice()[..2], &[1.0, 1.0]);
        let rep = schrodinger_check(&r, 4).unwrap();
        assert_eq!(rep.minors[0], 1.0);
        assert!(rep.pass);
        assert!(rep.even_deviation < 1e-12);
        let r = response_vector(&random_real_spec(5, 4), 9, Boundary::SemiInfinite).unwrap();
        assert!(!schrodinger_check(&r, 5).unwrap().pass);
    }

    #[test]
    fn inverse_control_diagonal_identity() {
        let spec = random_real_spec(6, 31);
        let w = control_matrix(&spec, 6).unwrap();
        let q = w.clone().try_inverse().unwrap();
        let mut prod = 1.0;
        for k in 0..6 {
            prod *= spec.a_at(k);
            assert!((q[(k, k)] * prod - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_roundtrip_recovers_squares() {
        let spec = random_complex_spec(8, 11);
        let rep = roundtrip_report_complex(&spec, 8).unwrap();
        assert!(rep.coefficient_error < 1e-8, "{}", rep.coefficient_error);
        for (k, a) in rep.inversion.recovered.a().iter().enumerate() {
            let want = spec.a()[k];
            assert!((a - want).norm() < 1e-8 || (a + want).norm() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn real_roundtrip(seed in any::<u64>(), n in 1usize..=20) {
            let spec = random_real_spec(n, seed);
            let rep = roundtrip_report(&spec, n).unwrap();
            prop_assert!(rep.coefficient_error <= 1e-8, "error {}", rep.coefficient_error);
            prop_assert!(rep.inversion.residual >= 0.0 && rep.inversion.residual < 1e-12);
            if n <= 8 {
                let rep = roundtrip_report_with(&spec, n, Precision::Double).unwrap();
                prop_assert!(rep.coefficient_error <= 1e-8, "f64 error {}", rep.coefficient_error);
            }
        }

        #[test]
        fn krein_control_hits_target(seed in any::<u64>(), n in 1usize..=10, li in 0usize..5) {
            let lam = li as f64 - 2.0;
            let spec = random_real_spec(n, seed);
            let r = response_vector(&spec, 2 * n - 1, Boundary::SemiInfinite).unwrap();
            let c = connecting_from_response(&r, n).unwrap();
            let f = solve_krein(&c, &r, lam, 0.4, -1.1, n).unwrap();
            let wf = control_matrix_natural(&spec, n).unwrap() * nalgebra::DVector::from_vec(f);
            let y = krein_target(&spec, lam, 0.4, -1.1, n).unwrap();
            let scale = y.iter().map(|x| x.abs()).fold(1.0, f64::max);
            for (a, b) in wf.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-8 * scale);
            }
        }

        #[test]
        fn simulated_responses_are_admissible(seed in any::<u64>(), n in 1usize..=12) {
            let spec = random_real_spec(n, seed);
            let r = response_vector(&spec, 2 * n - 1, Boundary::SemiInfinite).unwrap();
            prop_assert!(characterize(&r, n, Mode::Real).admissible);
            let cspec = random_complex_spec(n, seed);
            let r = response_vector(&cspec, 2 * n - 1, Boundary::SemiInfinite).unwrap();
            prop_assert!(characterize(&r, n, Mode::Complex).admissible);
        }

        #[test]
        fn inadmissible_data_fails_inversion(
            r in prop::collection::vec(-2.0f64..2.0, 7),
        ) {
            let mut r = r;
            r[0] = 1.0;
            let r = rv(&r);
            if !characterize(&r, 4, Mode::Real).admissible {
                prop_assert!(invert_factorization(&r, 4).is_err());
            }
        }
    }
}
