//! Spectral data of a finite real Jacobi block: eigenvalues, φ-normalized
//! eigenvectors, spectral measures and their power moments.

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::jacobi::JacobiSpec;
use crate::tridiag::tridiagonal_eigen;

/// Eigenvalues with eigenvectors `φᵏ` normalized by `φᵏ₁ = 1`, and `ωₖ = ‖φᵏ‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub phi_vectors: Vec<Vec<f64>>,
    pub omegas: Vec<f64>,
}

/// Finite atomic measure `Σ wₖ δ_{λₖ}` with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("measure needs at least one atom".into()));
        }
        if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Invalid("atoms must be strictly increasing".into()));
        }
        if atoms
            .iter()
            .any(|&(l, w)| !(w > 0.0) || !l.is_finite() || !w.is_finite())
        {
            return Err(Error::Invalid("weights must be positive and finite".into()));
        }
        Ok(Self { atoms })
    }

    /// Builds a measure whose weights may have underflowed to zero.
    pub(crate) fn from_sorted_unchecked(atoms: Vec<(f64, f64)>) -> Self {
        Self { atoms }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.1).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `∫ g dμ` by atom summation.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(l, w)| w * g(l)).sum()
    }
}

/// Power moments `s₀ … s_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentSequence(pub Vec<f64>);

impl MomentSequence {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Invalid("moment sequence is empty".into()));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite moment".into()));
        }
        Ok(Self(s))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn eig_spectral_data(spec: &JacobiSpec<f64>) -> Result<SpectralData> {
    let (values, vectors) = tridiagonal_eigen(spec.b(), spec.a())?;
    let mut phi_vectors = Vec::with_capacity(values.len());
    let mut omegas = Vec::with_capacity(values.len());
    for v in vectors {
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v[0].abs() < 1e-13 * nrm {
            return Err(Error::Numerical("eigenvector has a vanishing first component".into()));
        }
        let first = v[0];
        let mut phi: Vec<f64> = v.iter().map(|x| x / first).collect();
        phi[0] = 1.0;
        omegas.push(phi.iter().map(|x| x * x).sum());
        phi_vectors.push(phi);
    }
    Ok(SpectralData {
        eigenvalues: values,
        phi_vectors,
        omegas,
    })
}

/// Atoms `(λₖ, 1/ωₖ)`.
///
/// Weights are taken as squared first components of the unit eigenvectors,
/// which equals `1/ωₖ` and keeps full relative accuracy.
pub fn spectral_measure(spec: &JacobiSpec<f64>) -> Result<SpectralMeasure> {
    let (values, vectors) = tridiagonal_eigen(spec.b(), spec.a())?;
    let atoms: Vec<(f64, f64)> = values.into_iter().zip(vectors).map(|(l, v)| (l, v[0] * v[0])).collect();
    if atoms.iter().any(|a| a.1 == 0.0) {
        return Err(Error::Numerical("eigenvector has a vanishing first component".into()));
    }
    if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Numerical("eigenvalues not numerically distinct".into()));
    }
    Ok(SpectralMeasure { atoms })
}

pub fn moments_of_measure(mu: &SpectralMeasure, k: usize) -> MomentSequence {
    let mut s = vec![0.0; k + 1];
    for &(l, w) in mu.atoms() {
        let mut p = w;
        for sk in s.iter_mut() {
            *sk += p;
            p *= l;
        }
    }
    MomentSequence(s)
}

/// `s₀ … s_K` accumulated in double-double from the `f64` atoms.
pub fn moments_of_measure_dd(mu: &SpectralMeasure, k: usize) -> Vec<Dd> {
    let mut s = vec![Dd::ZERO; k + 1];
    for &(l, w) in mu.atoms() {
        let mut p = Dd::from(w);
        for sk in s.iter_mut() {
            *sk += p;
            p *= Dd::from(l);
        }
    }
    s
}

/// Partial quotients `−qₙ(0)/pₙ(0)` for `n = 2…N`, where `pₙ = φₙ` and `qₙ`
/// solves the same recurrence with `q₁ = 0`, `q₂ = 1/a₁`. Entries with `pₙ(0) = 0`
/// are reported as `None`. Finite data only; no limit is implied.
pub fn alpha_partial_quotients(spec: &JacobiSpec<f64>) -> Vec<Option<f64>> {
    let n = spec.n();
    let mut p = vec![0.0, 1.0];
    let mut q = vec![0.0, 0.0];
    let mut out = Vec::new();
    for k in 1..n {
        let ak = spec.a_at(k);
        let akm1 = if k == 1 { 0.0 } else { spec.a_at(k - 1) };
        let bk = spec.b_at(k);
        let pn = (-bk * p[k] - akm1 * p[k - 1]) / ak;
        let qn = if k == 1 {
            1.0 / ak
        } else {
            (-bk * q[k] - akm1 * q[k - 1]) / ak
        };
        p.push(pn);
        q.push(qn);
        out.push((pn != 0.0).then(|| -qn / pn));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{chebyshev_u, phi_eval};
    use crate::moments::lambda_matrix;
    use crate::random::random_real_spec;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_site_example() {
        let spec = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap();
        let sd = eig_spectral_data(&spec).unwrap();
        assert!(close(sd.eigenvalues[0], -1.0, 1e-14) && close(sd.eigenvalues[1], 1.0, 1e-14));
        assert!(close(sd.phi_vectors[0][1], -1.0, 1e-14));
        assert!(close(sd.phi_vectors[1][1], 1.0, 1e-14));
        assert!(close(sd.omegas[0], 2.0, 1e-13) && close(sd.omegas[1], 2.0, 1e-13));
        let mu = spectral_measure(&spec).unwrap();
        assert!(close(mu.atoms()[0].1, 0.5, 1e-14) && close(mu.atoms()[1].1, 0.5, 1e-14));
    }

    #[test]
    fn one_site() {
        let spec = JacobiSpec::new(1.0, vec![], vec![0.7]).unwrap();
        let sd = eig_spectral_data(&spec).unwrap();
        assert_eq!(sd.eigenvalues, vec![0.7]);
        assert_eq!(sd.phi_vectors, vec![vec![1.0]]);
        assert_eq!(sd.omegas, vec![1.0]);
    }

    #[test]
    fn free_three_sites() {
        let mu = spectral_measure(&JacobiSpec::free(3)).unwrap();
        let r2 = 2f64.sqrt();
        let expect = [(-r2, 0.25), (0.0, 0.5), (r2, 0.25)];
        for (got, want) in mu.atoms().iter().zip(expect) {
            assert!(close(got.0, want.0, 1e-14) && close(got.1, want.1, 1e-14));
        }
    }

    #[test]
    fn moments_examples() {
        let mu = SpectralMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(moments_of_measure(&mu, 3).0, vec![1.0, 0.0, 1.0, 0.0]);
        let mu = SpectralMeasure::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(moments_of_measure(&mu, 2).0, vec![1.0, 0.0, 0.0]);
        let mu = SpectralMeasure::new(vec![(2.0, 1.0)]).unwrap();
        assert_eq!(moments_of_measure(&mu, 3).0, vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn measure_validation() {
        assert!(SpectralMeasure::new(vec![]).is_err());
        assert!(SpectralMeasure::new(vec![(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(SpectralMeasure::new(vec![(0.0, 0.0)]).is_err());
        let mu = SpectralMeasure::new(vec![(0.0, 0.25), (1.0, 0.75)]).unwrap();
        let json = serde_json::to_string(&mu).unwrap();
        assert_eq!(json, r#"{"atoms":[[0.0,0.25],[1.0,0.75]]}"#);
    }

    #[test]
    fn partial_quotients_free() {
        // Free system: p_n(0) = 𝒯_n(0), q_n solves the same recurrence shifted by one.
        let pq = alpha_partial_quotients(&JacobiSpec::free(6));
        assert_eq!(pq.len(), 5);
        assert!(pq.iter().any(|x| x.is_none()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eigen_residual_and_weights(seed in any::<u64>(), n in 1usize..=50) {
            let spec = random_real_spec(n, seed);
            let m = spec.matrix();
            let sd = match eig_spectral_data(&spec) {
                Ok(sd) => sd,
                Err(_) => {
                    // Strongly localized eigenvectors: confirm the first component really is negligible.
                    let e = nalgebra::SymmetricEigen::new(m.clone());
                    let min_first = e.eigenvectors.row(0).iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
                    prop_assert!(min_first < 1e-12);
                    return Ok(());
                }
            };
            for (lam, phi) in sd.eigenvalues.iter().zip(&sd.phi_vectors) {
                prop_assert_eq!(phi[0], 1.0);
                let v = nalgebra::DVector::from_column_slice(phi);
                let res = (&m * &v - &v * *lam).amax();
                prop_assert!(res <= 1e-10 * (1.0 + lam.abs()) * v.amax());
            }
            let mu = spectral_measure(&spec).unwrap();
            prop_assert!((mu.total_mass() - 1.0).abs() <= 1e-12);
            for (w, om) in mu.weights().iter().zip(&sd.omegas) {
                prop_assert!((w * om - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn eigenvectors_satisfy_three_term_relation(seed in any::<u64>(), n in 2usize..=20) {
            let spec = random_real_spec(n, seed);
            let sd = eig_spectral_data(&spec).unwrap();
            for (lam, phi) in sd.eigenvalues.iter().zip(&sd.phi_vectors) {
                let scale = phi.iter().fold(0.0f64, |m, x| m.max(x.abs())) * (1.0 + lam.abs());
                for k in 1..n {
                    let prev = if k == 1 { 0.0 } else { spec.a_at(k - 1) * phi[k - 2] };
                    let res = spec.a_at(k) * phi[k] - ((lam - spec.b_at(k)) * phi[k - 1] - prev);
                    prop_assert!(res.abs() <= 1e-10 * scale);
                }
            }
        }

        #[test]
        fn eigenvectors_match_phi_recurrence(seed in any::<u64>(), n in 1usize..=20) {
            // Near-free coefficients keep the forward recurrence well conditioned at every eigenvalue.
            let mut g = crate::random::rng(seed);
            let spec = crate::random::random_real_spec_in(n, (0.9, 1.1), (-0.1, 0.1), &mut g);
            let sd = eig_spectral_data(&spec).unwrap();
            for (lam, phi) in sd.eigenvalues.iter().zip(&sd.phi_vectors) {
                let rec = phi_eval(&spec, *lam, n).unwrap();
                let scale = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for (x, y) in phi.iter().zip(&rec) {
                    prop_assert!((x - y).abs() <= 1e-9 * scale);
                }
            }
        }

        #[test]
        fn chebyshev_moment_bridge(seed in any::<u64>(), n in 1usize..=12) {
            let spec = random_real_spec(n, seed);
            let mu = spectral_measure(&spec).unwrap();
            let s = moments_of_measure(&mu, 20);
            let lam = lambda_matrix(20);
            for t in 1..=20usize {
                let direct = mu.integrate(|l| chebyshev_u(t, l));
                let via: f64 = (0..t).map(|j| lam.get(t - 1, j) as f64 * s.0[j]).sum();
                // Natural magnitude of the monomial expansion; cancellation is measured against it.
                let scale: f64 = (0..t).map(|j| (lam.get(t - 1, j) as f64 * s.0[j]).abs()).sum();
                prop_assert!((direct - via).abs() <= 1e-10 * scale.max(1.0));
            }
        }
    }
}
