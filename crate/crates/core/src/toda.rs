//! Finite Toda lattice: Moser evolution of spectral weights, the moment flow,
//! reconstruction of the Jacobi block at time `t`, and a Runge–Kutta oracle.

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::inverse_bc::invert_factorization_dd;
use crate::jacobi::JacobiSpec;
use crate::moments::moments_to_response_dd;
use crate::spectral::{moments_of_measure, spectral_measure, MomentSequence, SpectralMeasure};

/// Weights below this after normalization are reported as a conditioning failure.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Serialize)]
pub struct TodaState {
    pub spec: JacobiSpec<f64>,
    pub measure: SpectralMeasure,
    pub t: f64,
}

fn log_weights(mu0: &SpectralMeasure, t: f64) -> Vec<f64> {
    mu0.atoms().iter().map(|&(l, w)| w.ln() + 2.0 * l * t).collect()
}

fn log_sum_exp(x: &[f64]) -> (f64, f64) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (m, x.iter().map(|v| (v - m).exp()).sum())
}

/// `wₖ(t) = wₖ(0)e^{2λₖt} / Σⱼ wⱼ(0)e^{2λⱼt}`. Weights may underflow to zero for large `|t|`.
pub fn moser_evolve(mu0: &SpectralMeasure, t: f64) -> SpectralMeasure {
    let lw = log_weights(mu0, t);
    let (m, z) = log_sum_exp(&lw);
    let atoms = mu0
        .atoms()
        .iter()
        .zip(&lw)
        .map(|(&(l, _), &v)| (l, (v - m).exp() / z))
        .collect();
    SpectralMeasure::from_sorted_unchecked(atoms)
}

/// `s₀(t) … s_K(t)`.
pub fn toda_moments(mu0: &SpectralMeasure, t: f64, k: usize) -> MomentSequence {
    moments_of_measure(&moser_evolve(mu0, t), k)
}

/// `ln ‖Θ(t)‖² = ln Σⱼ wⱼ(0)e^{2λⱼt}`.
pub fn log_theta_norm_sq(mu0: &SpectralMeasure, t: f64) -> f64 {
    let (m, z) = log_sum_exp(&log_weights(mu0, t));
    m + z.ln()
}

/// `max_{k≤K} |ṡₖ + (ln‖Θ‖²)′sₖ − 2s_{k+1}|` with central differences of step `h`.
pub fn recursion_residual(mu0: &SpectralMeasure, t: f64, k: usize, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Invalid("step h must be positive".into()));
    }
    let plus = toda_moments(mu0, t + h, k);
    let minus = toda_moments(mu0, t - h, k);
    let now = toda_moments(mu0, t, k + 1);
    let dlog = (log_theta_norm_sq(mu0, t + h) - log_theta_norm_sq(mu0, t - h)) / (2.0 * h);
    let s = now.as_slice();
    Ok((0..=k)
        .map(|j| {
            let ds = (plus.as_slice()[j] - minus.as_slice()[j]) / (2.0 * h);
            (ds + dlog * s[j] - 2.0 * s[j + 1]).abs()
        })
        .fold(0.0, f64::max))
}

/// Jacobi block at time `t` from its evolved moments.
///
/// Moments `s₀ … s_{2N−1}` and `r = a₀Λs` are formed in double-double arithmetic
/// and factorized at that precision, so that `b_N` is fixed by the data.
pub fn toda_solve(spec0: &JacobiSpec<f64>, t: f64) -> Result<TodaState> {
    let n = spec0.n();
    let mu0 = spectral_measure(spec0)?;
    let mu = moser_evolve(&mu0, t);
    if let Some(&(l, w)) = mu.atoms().iter().find(|a| !(a.1 >= WEIGHT_FLOOR)) {
        return Err(Error::Conditioning(format!(
            "weight of eigenvalue {l} collapsed to {w:e} at t = {t}"
        )));
    }
    let mut s = vec![Dd::ZERO; 2 * n];
    for &(l, w) in mu.atoms() {
        let mut p = Dd::from(w);
        for sk in s.iter_mut() {
            *sk += p;
            p *= Dd::from(l);
        }
    }
    let a0 = Dd::from(spec0.a0());
    let r: Vec<Dd> = moments_to_response_dd(&s).into_iter().map(|x| x * a0).collect();
    let report = invert_factorization_dd(&r, n)?;
    Ok(TodaState {
        spec: report.recovered,
        measure: mu,
        t,
    })
}

fn toda_rhs(a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) {
    let n = b.len();
    for k in 0..n - 1 {
        da[k] = a[k] * (b[k + 1] - b[k]);
    }
    for k in 0..n {
        let up = if k < n - 1 { a[k] * a[k] } else { 0.0 };
        let down = if k > 0 { a[k - 1] * a[k - 1] } else { 0.0 };
        db[k] = 2.0 * (up - down);
    }
}

/// Classical RK4 for `ȧₙ = aₙ(b_{n+1} − bₙ)`, `ḃₙ = 2(aₙ² − a_{n−1}²)` with `a₀ = a_N = 0`.
///
/// The step is shrunk so that a whole number of steps reaches `t`; negative `t` integrates backwards.
pub fn toda_ode_oracle(spec0: &JacobiSpec<f64>, t: f64, dt: f64) -> Result<JacobiSpec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    let n = spec0.n();
    let steps = (t.abs() / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut a = spec0.a().to_vec();
    let mut b = spec0.b().to_vec();
    let m = n.saturating_sub(1);
    let mut ka = vec![vec![0.0; m]; 4];
    let mut kb = vec![vec![0.0; n]; 4];
    for _ in 0..steps {
        for stage in 0..4 {
            let c = [0.0, 0.5 * h, 0.5 * h, h][stage];
            let prev = stage.saturating_sub(1);
            let ta: Vec<f64> = (0..m).map(|i| a[i] + c * ka[prev][i]).collect();
            let tb: Vec<f64> = (0..n).map(|i| b[i] + c * kb[prev][i]).collect();
            toda_rhs(&ta, &tb, &mut ka[stage], &mut kb[stage]);
        }
        for i in 0..m {
            a[i] += h / 6.0 * (ka[0][i] + 2.0 * ka[1][i] + 2.0 * ka[2][i] + ka[3][i]);
        }
        for i in 0..n {
            b[i] += h / 6.0 * (kb[0][i] + 2.0 * kb[1][i] + 2.0 * kb[2][i] + kb[3][i]);
        }
    }
    JacobiSpec::new(spec0.a0(), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_real_spec;
    use crate::tridiag::tridiagonal_eigenvalues;
    use proptest::prelude::*;

    fn two_atom() -> SpectralMeasure {
        SpectralMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    fn two_site() -> JacobiSpec<f64> {
        JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap()
    }

    fn max_diff(x: &JacobiSpec<f64>, y: &JacobiSpec<f64>) -> f64 {
        x.a()
            .iter()
            .zip(y.a())
            .chain(x.b().iter().zip(y.b()))
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn moser_at_zero_is_identity() {
        let mu = SpectralMeasure::new(vec![(-0.3, 0.2), (0.4, 0.5), (2.0, 0.3)]).unwrap();
        let e = moser_evolve(&mu, 0.0);
        for (x, y) in e.atoms().iter().zip(mu.atoms()) {
            assert!((x.1 - y.1).abs() < 1e-15);
        }
    }

    #[test]
    fn moser_two_atoms() {
        for &t in &[-1.3, 0.2, 0.7, 3.0] {
            let w = moser_evolve(&two_atom(), t).weights();
            let th = (2.0f64 * t).tanh();
            assert!((w[0] - (1.0 - th) / 2.0).abs() < 1e-15);
            assert!((w[1] - (1.0 + th) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn moser_concentrates_and_survives_large_exponents() {
        let mu = SpectralMeasure::new(vec![(-2.0, 0.3), (1.0, 0.3), (3.0, 0.4)]).unwrap();
        let w = moser_evolve(&mu, 400.0).weights();
        assert_eq!(w[2], 1.0);
        assert!(w.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn two_atom_moments() {
        for &t in &[0.0, 0.3, -0.8] {
            let s = toda_moments(&two_atom(), t, 3);
            let s = s.as_slice();
            assert!((s[0] - 1.0).abs() < 1e-15);
            assert!((s[1] - (2.0 * t).tanh()).abs() < 1e-15);
            assert!((s[2] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_small_and_second_order() {
        let r1 = recursion_residual(&two_atom(), 0.3, 4, 1e-4).unwrap();
        assert!(r1 <= 1e-6, "{r1}");
        let mu = SpectralMeasure::new(vec![(-0.5, 0.2), (0.3, 0.5), (1.2, 0.3)]).unwrap();
        let e1 = recursion_residual(&mu, 0.2, 5, 1e-2).unwrap();
        let e2 = recursion_residual(&mu, 0.2, 5, 5e-3).unwrap();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn single_atom_residual_vanishes() {
        let mu = SpectralMeasure::new(vec![(0.7, 1.0)]).unwrap();
        assert!(recursion_residual(&mu, 0.5, 4, 1e-3).unwrap() < 1e-12);
    }

    #[test]
    fn two_site_closed_form() {
        for &t in &[-2.0, -0.4, 0.0, 0.25, 1.0, 2.0] {
            let st = toda_solve(&two_site(), t).unwrap();
            let th = (2.0f64 * t).tanh();
            assert!((st.spec.a()[0] - 1.0 / (2.0f64 * t).cosh()).abs() < 1e-10);
            assert!((st.spec.b()[0] - th).abs() < 1e-10);
            assert!((st.spec.b()[1] + th).abs() < 1e-10);
        }
    }

    #[test]
    fn solve_at_zero_returns_initial() {
        let spec = random_real_spec(6, 5);
        let st = toda_solve(&spec, 0.0).unwrap();
        assert!(max_diff(&st.spec, &spec) < 1e-10);
    }

    #[test]
    fn oracle_single_site_constant() {
        let spec = JacobiSpec::new(1.0, vec![], vec![0.7]).unwrap();
        let out = toda_ode_oracle(&spec, 1.5, 1e-2).unwrap();
        assert_eq!(out.b(), &[0.7]);
    }

    #[test]
    fn oracle_two_site_closed_form() {
        let out = toda_ode_oracle(&two_site(), 1.0, 1e-3).unwrap();
        assert!((out.a()[0] - 1.0 / 2.0f64.cosh()).abs() < 1e-8);
        assert!((out.b()[0] - 2.0f64.tanh()).abs() < 1e-8);
        assert!((out.b()[1] + 2.0f64.tanh()).abs() < 1e-8);
    }

    #[test]
    fn oracle_conserves_trace() {
        let spec = random_real_spec(7, 2);
        let tr0: f64 = spec.b().iter().sum();
        let out = toda_ode_oracle(&spec, 1.7, 1e-3).unwrap();
        assert!((out.b().iter().sum::<f64>() - tr0).abs() < 1e-9);
    }

    #[test]
    fn collapse_is_a_conditioning_error() {
        let spec = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(toda_solve(&spec, 400.0), Err(Error::Conditioning(_))));
    }

    #[test]
    fn random_spec_matches_oracle() {
        let spec = random_real_spec(4, 9);
        let st = toda_solve(&spec, 0.5).unwrap();
        let or = toda_ode_oracle(&spec, 0.5, 1e-3).unwrap();
        assert!(max_diff(&st.spec, &or) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn flow_is_isospectral_and_matches_oracle(n in 1usize..=8, seed in 0u64..10_000, t in -2.0f64..2.0) {
            let spec = random_real_spec(n, seed);
            let st = toda_solve(&spec, t).unwrap();
            let or = toda_ode_oracle(&spec, t, 1e-3).unwrap();
            prop_assert!(max_diff(&st.spec, &or) <= 1e-6, "diff {}", max_diff(&st.spec, &or));
            let e0 = tridiagonal_eigenvalues(spec.b(), spec.a()).unwrap();
            let e1 = tridiagonal_eigenvalues(st.spec.b(), st.spec.a()).unwrap();
            for (x, y) in e0.iter().zip(&e1) {
                prop_assert!((x - y).abs() <= 1e-8);
            }
            let tr0: f64 = spec.b().iter().sum();
            prop_assert!((st.spec.b().iter().sum::<f64>() - tr0).abs() <= 1e-8);
            prop_assert!((or.b().iter().sum::<f64>() - tr0).abs() <= 1e-8);
            prop_assert!((st.measure.total_mass() - 1.0).abs() <= 1e-12);
        }
    }
}
