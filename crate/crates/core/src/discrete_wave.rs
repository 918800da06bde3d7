//! Forward solvers for the discrete-time wave system
//! `u_{n,t+1} + u_{n,t−1} − aₙu_{n+1,t} − a_{n−1}u_{n−1,t} − bₙu_{n,t} = 0`, `u_{0,t} = f_t`,
//! and the response, control and connecting matrices built from them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::jacobi::JacobiSpec;
use crate::linalg::{reverse_both, Rows};
use crate::scalar::{Field, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    SemiInfinite,
    Dirichlet,
}

/// Boundary control `f₀ … f_{T−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Control<S> {
    f: Vec<S>,
}

impl<S: Scalar> Control<S> {
    pub fn new(f: Vec<S>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Invalid("control must have length at least 1".into()));
        }
        Ok(Self { f })
    }

    /// Unit impulse at time 0.
    pub fn delta(t: usize) -> Self {
        Self::shifted_delta(0, t)
    }

    /// Unit impulse at time `s`.
    pub fn shifted_delta(s: usize, t: usize) -> Self {
        assert!(s < t && t >= 1);
        let mut f = vec![S::zero(); t];
        f[s] = S::one();
        Self { f }
    }

    pub fn zeros(t: usize) -> Self {
        assert!(t >= 1);
        Self { f: vec![S::zero(); t] }
    }

    pub fn values(&self) -> &[S] {
        &self.f
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Space-time field `u[n][t]`, `n = 0…n_space`, `t = 0…T`; row 0 carries the control.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveField<S> {
    u: Vec<Vec<S>>,
    control: Control<S>,
}

impl<S: Scalar> WaveField<S> {
    pub fn get(&self, n: usize, t: usize) -> S {
        self.u[n][t]
    }

    pub fn n_space(&self) -> usize {
        self.u.len() - 1
    }

    pub fn horizon(&self) -> usize {
        self.u[0].len() - 1
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.u
    }

    pub fn control(&self) -> &Control<S> {
        &self.control
    }

    /// State `(u_{1,t}, …, u_{m,t})`.
    pub fn state(&self, t: usize, m: usize) -> Vec<S> {
        (1..=m).map(|n| self.u[n][t]).collect()
    }
}

/// Inverse data: `r_{t−1} = u^δ_{1,t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseVector<S> {
    r: Vec<S>,
}

impl<S: Scalar> ResponseVector<S> {
    pub fn new(r: Vec<S>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::Invalid("response vector is empty".into()));
        }
        if r.iter().any(|x| !x.mag().is_finite()) {
            return Err(Error::Invalid("non-finite response entry".into()));
        }
        Ok(Self { r })
    }

    pub fn as_slice(&self) -> &[S] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn a0(&self) -> S {
        self.r[0]
    }

    pub fn into_vec(self) -> Vec<S> {
        self.r
    }
}

/// Explicit time stepping on sites `1…n_sites` with a hard zero at `n_sites + 1`.
fn step_generic<F: Field>(
    a: impl Fn(usize) -> F,
    b: impl Fn(usize) -> F,
    n_sites: usize,
    f: &[F],
    t_max: usize,
) -> Vec<Vec<F>> {
    let mut u = vec![vec![F::zero(); t_max + 1]; n_sites + 2];
    for (t, &ft) in f.iter().enumerate().take(t_max + 1) {
        u[0][t] = ft;
    }
    for t in 0..t_max {
        for n in 1..=n_sites {
            let prev = if t == 0 { F::zero() } else { u[n][t - 1] };
            u[n][t + 1] = a(n) * u[n + 1][t] + a(n - 1) * u[n - 1][t] + b(n) * u[n][t] - prev;
        }
    }
    u.truncate(n_sites + 1);
    u
}

/// Coefficients beyond the spec are padded with `a = 1`, `b = 0`; callers only
/// rely on padding where finite speed makes it invisible.
fn step_lattice<S: Scalar>(spec: &JacobiSpec<S>, n_sites: usize, f: &[S], t_max: usize) -> Vec<Vec<S>> {
    let nn = spec.n();
    let a = |k: usize| if k < nn { spec.a_at(k) } else { S::one() };
    let b = |n: usize| if n <= nn { spec.b_at(n) } else { S::zero() };
    step_generic(a, b, n_sites, f, t_max)
}

fn check_control<S: Scalar>(f: &Control<S>, t: usize) -> Result<()> {
    if f.len() != t {
        return Err(Error::Dimension(format!(
            "control length {} does not match T = {t}",
            f.len()
        )));
    }
    Ok(())
}

/// Semi-infinite system up to time `T`, computed exactly on the lattice truncated at `T + 1`.
///
/// Requires `N ≥ T`: the field at sites `n ≤ T`, times `t ≤ T` involves `a₀…a_{T−1}`, `b₁…b_{T−1}` only.
pub fn solve_semi_infinite<S: Scalar>(spec: &JacobiSpec<S>, f: &Control<S>, t: usize) -> Result<WaveField<S>> {
    check_control(f, t)?;
    if spec.n() < t {
        return Err(Error::TooShort {
            what: "spec",
            needed: t,
            got: spec.n(),
        });
    }
    Ok(WaveField {
        u: step_lattice(spec, t, f.values(), t),
        control: f.clone(),
    })
}

/// Finite block with `v_{N+1,t} = 0`.
pub fn solve_finite_dirichlet<S: Scalar>(spec: &JacobiSpec<S>, f: &Control<S>, t: usize) -> Result<WaveField<S>> {
    check_control(f, t)?;
    Ok(WaveField {
        u: step_lattice(spec, spec.n(), f.values(), t),
        control: f.clone(),
    })
}

/// Smallest block size that determines `r₀ … r_{T−1}` of the semi-infinite system.
pub fn required_block_size(t: usize) -> usize {
    t.div_ceil(2)
}

pub fn response_vector<S: Scalar>(spec: &JacobiSpec<S>, t: usize, bc: Boundary) -> Result<ResponseVector<S>> {
    if t == 0 {
        return Err(Error::Invalid("T must be positive".into()));
    }
    let f = Control::delta(t);
    let u = match bc {
        Boundary::SemiInfinite => {
            let need = required_block_size(t);
            if spec.n() < need {
                return Err(Error::TooShort {
                    what: "spec",
                    needed: need,
                    got: spec.n(),
                });
            }
            step_lattice(spec, t, f.values(), t)
        }
        Boundary::Dirichlet => step_lattice(spec, spec.n(), f.values(), t),
    };
    ResponseVector::new((1..=t).map(|s| u[1][s]).collect())
}

/// Response of a real block computed in double-double arithmetic.
///
/// The inverse problem amplifies relative perturbations of `r` by roughly
/// `‖C_T‖/min pivot`, which for moderately sized blocks exceeds `1/ε` of `f64`;
/// this routine supplies data accurate enough to invert at those sizes.
pub fn response_vector_dd(spec: &JacobiSpec<f64>, t: usize, bc: Boundary) -> Result<Vec<Dd>> {
    if t == 0 {
        return Err(Error::Invalid("T must be positive".into()));
    }
    let nn = spec.n();
    let n_sites = match bc {
        Boundary::SemiInfinite => {
            let need = required_block_size(t);
            if nn < need {
                return Err(Error::TooShort {
                    what: "spec",
                    needed: need,
                    got: nn,
                });
            }
            t
        }
        Boundary::Dirichlet => nn,
    };
    let a = |k: usize| Dd::from(if k < nn { spec.a_at(k) } else { 1.0 });
    let b = |n: usize| Dd::from(if n <= nn { spec.b_at(n) } else { 0.0 });
    let mut f = vec![Dd::from(0.0); t];
    f[0] = Dd::from(1.0);
    let u = step_generic(a, b, n_sites, &f, t);
    Ok((1..=t).map(|s| u[1][s]).collect())
}

/// `W^T` in the ordering that acts on `(f_{T−1}, …, f₀)`: entry `(n−1, k)` is
/// `u^δ_{n,k+1}`. Upper triangular with diagonal `Π_{j<n} aⱼ`.
pub fn control_matrix<S: Scalar>(spec: &JacobiSpec<S>, t: usize) -> Result<DMatrix<S>> {
    let field = solve_semi_infinite(spec, &Control::delta(t), t)?;
    Ok(DMatrix::from_fn(t, t, |i, k| field.get(i + 1, k + 1)))
}

/// `W^T` acting on controls in natural order `(f₀, …, f_{T−1})`.
pub fn control_matrix_natural<S: Scalar>(spec: &JacobiSpec<S>, t: usize) -> Result<DMatrix<S>> {
    let w = control_matrix(spec, t)?;
    Ok(DMatrix::from_fn(t, t, |i, k| w[(i, t - 1 - k)]))
}

/// `C^T_{ij} = a₀ Σ_{k=0}^{T−max(i,j)} r_{|i−j|+2k}` (1-based), with `a₀ = r₀`.
pub(crate) fn connecting_rows<F: Field>(r: &[F], t: usize) -> Rows<F> {
    let a0 = r[0];
    let mut c = vec![vec![F::zero(); t]; t];
    for i in 1..=t {
        for j in i..=t {
            let d = j - i;
            let mut s = F::zero();
            for k in 0..=(t - j) {
                s = s + r[d + 2 * k];
            }
            c[i - 1][j - 1] = a0 * s;
            c[j - 1][i - 1] = a0 * s;
        }
    }
    c
}

pub fn connecting_from_response<S: Scalar>(r: &ResponseVector<S>, t: usize) -> Result<DMatrix<S>> {
    if t == 0 {
        return Err(Error::Invalid("T must be positive".into()));
    }
    if r.len() < 2 * t - 1 {
        return Err(Error::TooShort {
            what: "response vector",
            needed: 2 * t - 1,
            got: r.len(),
        });
    }
    let rows = connecting_rows(r.as_slice(), t);
    Ok(DMatrix::from_fn(t, t, |i, j| rows[i][j]))
}

/// `C_T = J C^T J`.
pub fn reverse_order<S: nalgebra::Scalar + Copy>(c: &DMatrix<S>) -> Result<DMatrix<S>> {
    if !c.is_square() {
        return Err(Error::Dimension("matrix must be square".into()));
    }
    Ok(reverse_both(c))
}

/// Response operator on `(f₀, …, f_{T−1})`: `(R f)_t = Σ_s r_s f_{t−1−s}`, `t = 1…T`.
pub fn response_operator_matrix<S: Scalar>(r: &[S], t: usize) -> DMatrix<S> {
    DMatrix::from_fn(t, t, |i, j| if j <= i { r[i - j] } else { S::zero() })
}

/// Goursat kernel `w_{n,s}` for `s ≥ n`, read off the δ-field behind the front.
/// Row `n − 1` holds `w_{n,n}, …, w_{n,T−1}`.
pub fn goursat_kernel<S: Scalar>(spec: &JacobiSpec<S>, t: usize) -> Result<Vec<Vec<S>>> {
    let field = solve_semi_infinite(spec, &Control::delta(t), t)?;
    Ok((1..=t).map(|n| (n..t).map(|s| field.get(n, s + 1)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::chebyshev_u;
    use crate::linalg::max_abs_diff;
    use crate::random::{random_complex_spec, random_real_spec};
    use crate::scalar::Complex64;
    use crate::spectral::spectral_measure;
    use proptest::prelude::*;

    fn two_site() -> JacobiSpec<f64> {
        JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn free_delta_field_is_a_unit_front() {
        let t = 4;
        let field = solve_semi_infinite(&JacobiSpec::<f64>::free(4), &Control::delta(t), t).unwrap();
        for n in 1..=t {
            for s in 0..=t {
                let want = if n == s { 1.0 } else { 0.0 };
                assert_eq!(field.get(n, s), want);
            }
        }
    }

    #[test]
    fn zero_control_zero_field() {
        let spec = random_real_spec(6, 1);
        let field = solve_semi_infinite(&spec, &Control::zeros(6), 6).unwrap();
        assert!(field.rows().iter().flatten().all(|&x| x == 0.0));
        let field = solve_finite_dirichlet(&spec, &Control::zeros(9), 9).unwrap();
        assert!(field.rows().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn three_steps_on_two_site_block() {
        let f = solve_semi_infinite(&two_site(), &Control::delta(2), 2).unwrap();
        assert_eq!((f.get(1, 1), f.get(1, 2)), (1.0, 0.0));
        let f = solve_finite_dirichlet(&two_site(), &Control::delta(4), 4).unwrap();
        let v: Vec<f64> = (1..=4).map(|t| f.get(1, t)).collect();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.get(1, 3), 0.0);
    }

    #[test]
    fn semi_infinite_requires_long_enough_spec() {
        let err = solve_semi_infinite(&two_site(), &Control::delta(3), 3).unwrap_err();
        assert!(matches!(err, Error::TooShort { .. }));
        assert!(response_vector(&two_site(), 5, Boundary::SemiInfinite).is_err());
        assert!(response_vector(&two_site(), 4, Boundary::SemiInfinite).is_ok());
    }

    #[test]
    fn response_examples() {
        let r = response_vector(&JacobiSpec::<f64>::free(3), 5, Boundary::SemiInfinite).unwrap();
        assert_eq!(r.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        let r = response_vector(&two_site(), 4, Boundary::Dirichlet).unwrap();
        assert_eq!(r.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let spec = two_site().with_a0(2.0).unwrap();
        assert_eq!(response_vector(&spec, 3, Boundary::Dirichlet).unwrap().a0(), 2.0);
    }

    #[test]
    fn control_matrix_examples() {
        let w = control_matrix(&JacobiSpec::<f64>::free(3), 3).unwrap();
        assert_eq!(w, DMatrix::identity(3, 3));
        let spec = JacobiSpec::new(1.5, vec![], vec![0.3]).unwrap();
        let w = control_matrix(&spec, 1).unwrap();
        assert_eq!(w[(0, 0)], 1.5);
        let spec = random_real_spec(8, 5);
        let w = control_matrix(&spec, 8).unwrap();
        let mut prod = 1.0;
        for k in 0..8 {
            prod *= spec.a_at(k);
            assert!((w[(k, k)] - prod).abs() <= 1e-14 * prod);
            for i in k + 1..8 {
                assert_eq!(w[(i, k)], 0.0);
            }
        }
    }

    #[test]
    fn connecting_examples() {
        let r = ResponseVector::new(vec![1.0; 1].into_iter().chain(vec![0.0; 8]).collect()).unwrap();
        assert_eq!(connecting_from_response(&r, 5).unwrap(), DMatrix::identity(5, 5));
        let r = ResponseVector::new(vec![1.0, 1.0, 0.0, 0.0, -1.0]).unwrap();
        let c = connecting_from_response(&r, 3).unwrap();
        let printed = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 1., 1., 0., 1., 1.]);
        assert_eq!(c, printed);
        let rev = reverse_order(&c).unwrap();
        assert_eq!(
            rev,
            DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 1., 1., 0., 1., 0.])
        );
        assert!(connecting_from_response(&r, 4).is_err());
    }

    #[test]
    fn reverse_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(
            reverse_order(&m).unwrap(),
            DMatrix::from_row_slice(2, 2, &[3.0, 2.0, 2.0, 1.0])
        );
        let i = DMatrix::<f64>::identity(4, 4);
        assert_eq!(reverse_order(&i).unwrap(), i);
    }

    #[test]
    fn goursat_kernel_vanishes_for_free_system() {
        let w = goursat_kernel(&JacobiSpec::<f64>::free(6), 6).unwrap();
        assert!(w.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn complex_gram_identity() {
        for seed in 0..10 {
            let spec = random_complex_spec(6, seed);
            let t = 6;
            let r = response_vector(&spec, 2 * t - 1, Boundary::SemiInfinite).unwrap();
            let c = connecting_from_response(&r, t).unwrap();
            let w = control_matrix_natural(&spec, t).unwrap();
            let w_sharp = w.map(|z| z.conj());
            let gram = w_sharp.adjoint() * &w;
            assert!(max_abs_diff(&c, &gram) < 1e-10 * c.camax());
            assert!(max_abs_diff(&c, &c.transpose()) == 0.0);
        }
    }

    #[test]
    fn complex_response_is_even_in_off_diagonals() {
        let spec = random_complex_spec(5, 21);
        let r = response_vector(&spec, 9, Boundary::SemiInfinite).unwrap();
        for k in 1..5 {
            let mut a = spec.a().to_vec();
            a[k - 1] = -a[k - 1];
            let flipped = JacobiSpec::new(spec.a0(), a, spec.b().to_vec()).unwrap();
            let r2 = response_vector(&flipped, 9, Boundary::SemiInfinite).unwrap();
            for (x, y) in r.as_slice().iter().zip(r2.as_slice()) {
                assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
            }
        }
        let _ = Complex64::new(0.0, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gram_identity_real(seed in any::<u64>(), n in 1usize..=20) {
            let spec = random_real_spec(n, seed);
            let t = n;
            let r = response_vector(&spec, 2 * t - 1, Boundary::SemiInfinite).unwrap();
            let c = connecting_from_response(&r, t).unwrap();
            let w = control_matrix_natural(&spec, t).unwrap();
            let gram = w.transpose() * &w;
            prop_assert!(max_abs_diff(&c, &gram) <= 1e-10 * c.amax().max(1.0));
            let wr = control_matrix(&spec, t).unwrap();
            let gram_rev = wr.transpose() * &wr;
            prop_assert!(max_abs_diff(&reverse_order(&c).unwrap(), &gram_rev) <= 1e-10 * c.amax().max(1.0));
        }

        #[test]
        fn spectral_representations(seed in any::<u64>(), n in 1usize..=15) {
            let spec = random_real_spec(n, seed);
            let mu = spectral_measure(&spec).unwrap();
            let t = n;
            let r = response_vector(&spec, 2 * t, Boundary::Dirichlet).unwrap();
            for (k, rk) in r.as_slice().iter().enumerate() {
                let via = mu.integrate(|l| chebyshev_u(k + 1, l));
                let scale = mu.integrate(|l| chebyshev_u(k + 1, l).abs()).max(1.0);
                prop_assert!((rk - via).abs() <= 1e-10 * scale);
            }
            let c = connecting_from_response(&r, t).unwrap();
            for l in 0..t {
                for m in 0..t {
                    let via = mu.integrate(|x| chebyshev_u(t - l, x) * chebyshev_u(t - m, x));
                    prop_assert!((c[(l, m)] - via).abs() <= 1e-10 * c.amax());
                }
            }
        }

        #[test]
        fn finite_speed_and_front(seed in any::<u64>(), n in 1usize..=15) {
            let spec = random_real_spec(n, seed);
            let field = solve_semi_infinite(&spec, &Control::delta(n), n).unwrap();
            let mut front = 1.0;
            for site in 1..=n {
                front *= spec.a_at(site - 1);
                for t in 0..site {
                    prop_assert_eq!(field.get(site, t), 0.0);
                }
                prop_assert_eq!(field.get(site, site), front);
            }
        }

        #[test]
        fn semi_infinite_and_dirichlet_agree(seed in any::<u64>(), n in 1usize..=12) {
            let spec = random_real_spec(n, seed);
            let semi = response_vector(&spec, 2 * n, Boundary::SemiInfinite).unwrap();
            let dir = response_vector(&spec, 2 * n, Boundary::Dirichlet).unwrap();
            prop_assert_eq!(semi.as_slice(), dir.as_slice());
            let df = solve_finite_dirichlet(&spec, &Control::delta(n), n).unwrap();
            let sf = solve_semi_infinite(&spec, &Control::delta(n), n).unwrap();
            for site in 1..=n {
                for t in site..=n {
                    prop_assert_eq!(df.get(site, t), sf.get(site, t));
                }
            }
        }
    }
}
