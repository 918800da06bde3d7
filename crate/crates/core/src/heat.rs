//! First-order-in-time system
//! `v_{n,t+1} = aₙv_{n+1,t} + a_{n−1}v_{n−1,t} + bₙv_{n,t}`, `v_{n,0} = 0`, `v_{0,t} = f_t`.
//!
//! With `a₀ = 1` the δ-response is the moment sequence of the spectral measure,
//! so inversion goes through the moment machinery.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dd::Dd;
use crate::discrete_wave::{required_block_size, Boundary, Control};
use crate::error::{Error, Result};
use crate::inverse_bc::invert_factorization_dd;
use crate::jacobi::JacobiSpec;
use crate::moments::moments_to_response_dd;
use crate::scalar::{Field, Scalar};
use crate::spectral::MomentSequence;

/// `v[n][t]` for `n = 0…n_space`, `t = 0…T`; row 0 carries the control.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatField<S> {
    v: Vec<Vec<S>>,
    control: Control<S>,
}

impl<S: Scalar> HeatField<S> {
    pub fn get(&self, n: usize, t: usize) -> S {
        self.v[n][t]
    }

    pub fn n_space(&self) -> usize {
        self.v.len() - 1
    }

    pub fn horizon(&self) -> usize {
        self.v[0].len() - 1
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.v
    }

    pub fn control(&self) -> &Control<S> {
        &self.control
    }
}

fn step_heat<F: Field>(
    a: impl Fn(usize) -> F,
    b: impl Fn(usize) -> F,
    n_sites: usize,
    f: &[F],
    t_max: usize,
) -> Vec<Vec<F>> {
    let mut v = vec![vec![F::zero(); t_max + 1]; n_sites + 2];
    for (t, &ft) in f.iter().enumerate().take(t_max + 1) {
        v[0][t] = ft;
    }
    for t in 0..t_max {
        for n in 1..=n_sites {
            v[n][t + 1] = a(n) * v[n + 1][t] + a(n - 1) * v[n - 1][t] + b(n) * v[n][t];
        }
    }
    v.truncate(n_sites + 1);
    v
}

fn lattice<S: Scalar>(spec: &JacobiSpec<S>, n_sites: usize, f: &[S], t_max: usize) -> Vec<Vec<S>> {
    let nn = spec.n();
    let a = |k: usize| if k < nn { spec.a_at(k) } else { S::one() };
    let b = |n: usize| if n <= nn { spec.b_at(n) } else { S::zero() };
    step_heat(a, b, n_sites, f, t_max)
}

/// Semi-infinite solve up to time `T` on sites `0…T`; needs `N ≥ T`.
pub fn solve_heat<S: Scalar>(spec: &JacobiSpec<S>, f: &Control<S>, t: usize) -> Result<HeatField<S>> {
    if f.len() != t {
        return Err(Error::Dimension(format!(
            "control length {} does not match T = {t}",
            f.len()
        )));
    }
    if spec.n() < t {
        return Err(Error::TooShort {
            what: "spec",
            needed: t,
            got: spec.n(),
        });
    }
    Ok(HeatField {
        v: lattice(spec, t, f.values(), t),
        control: f.clone(),
    })
}

/// Finite block with `v_{N+1,t} = 0`.
pub fn solve_heat_dirichlet<S: Scalar>(spec: &JacobiSpec<S>, f: &Control<S>, t: usize) -> Result<HeatField<S>> {
    if f.len() != t {
        return Err(Error::Dimension(format!(
            "control length {} does not match T = {t}",
            f.len()
        )));
    }
    Ok(HeatField {
        v: lattice(spec, spec.n(), f.values(), t),
        control: f.clone(),
    })
}

/// `s_{t−1} = v^δ_{1,t}`, `t = 1…len`.
///
/// `SemiInfinite` needs `N ≥ ⌈len/2⌉`; `Dirichlet` closes the block with
/// `v_{N+1,t} = 0` and gives the power moments of the block's spectral measure when `a₀ = 1`.
pub fn heat_response<S: Scalar>(spec: &JacobiSpec<S>, len: usize, bc: Boundary) -> Result<Vec<S>> {
    if len == 0 {
        return Err(Error::Invalid("response length must be positive".into()));
    }
    let n_sites = match bc {
        Boundary::SemiInfinite => {
            let need = required_block_size(len);
            if spec.n() < need {
                return Err(Error::TooShort {
                    what: "spec",
                    needed: need,
                    got: spec.n(),
                });
            }
            need + 1
        }
        Boundary::Dirichlet => spec.n(),
    };
    let mut f = vec![S::zero(); len];
    f[0] = S::one();
    let v = lattice(spec, n_sites, &f, len);
    Ok((1..=len).map(|t| v[1][t]).collect())
}

/// `S^T_{ij} = s_{2T−(i+j)}` (1-based).
pub fn heat_connecting(s: &[f64], t: usize) -> Result<DMatrix<f64>> {
    if t == 0 {
        return Err(Error::Invalid("T must be positive".into()));
    }
    if s.len() < 2 * t - 1 {
        return Err(Error::TooShort {
            what: "heat response",
            needed: 2 * t - 1,
            got: s.len(),
        });
    }
    Ok(DMatrix::from_fn(t, t, |i, j| s[2 * t - 2 - i - j]))
}

/// `V^T` on controls `(f₀, …, f_{T−1})`: column `k` is `v^δ_{·,T−k}` on sites `1…T`.
pub fn heat_control_matrix<S: Scalar>(spec: &JacobiSpec<S>, t: usize) -> Result<DMatrix<S>> {
    let field = solve_heat(spec, &Control::delta(t), t)?;
    Ok(DMatrix::from_fn(t, t, |n, k| field.get(n + 1, t - k)))
}

/// Block of size `n` from `s₀ … s_{2n−2}` (or `s_{2n−1}` to fix `b_N`).
pub fn invert_heat(s: &MomentSequence, n: usize) -> Result<JacobiSpec<f64>> {
    let sd: Vec<Dd> = s.as_slice().iter().map(|&x| Dd::from(x)).collect();
    let r = moments_to_response_dd(&sd);
    Ok(invert_factorization_dd(&r, n)?.recovered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::random::random_real_spec;
    use crate::spectral::{moments_of_measure, spectral_measure};
    use proptest::prelude::*;

    #[test]
    fn two_steps_by_hand() {
        let spec = JacobiSpec::<f64>::free(4);
        let f = solve_heat(&spec, &Control::delta(4), 4).unwrap();
        assert_eq!(f.get(1, 1), 1.0);
        assert_eq!(f.get(1, 2), 0.0);
        assert_eq!(f.get(2, 2), 1.0);
        assert_eq!(f.get(1, 3), 1.0);
    }

    #[test]
    fn zero_control_zero_field() {
        let spec = random_real_spec(5, 3);
        let f = solve_heat(&spec, &Control::zeros(5), 5).unwrap();
        assert!(f.rows().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn errors() {
        let spec = JacobiSpec::<f64>::free(3);
        assert!(matches!(
            solve_heat(&spec, &Control::delta(5), 5),
            Err(Error::TooShort { .. })
        ));
        assert!(matches!(
            solve_heat(&spec, &Control::delta(2), 3),
            Err(Error::Dimension(_))
        ));
        assert!(heat_connecting(&[1.0, 0.0], 2).is_err());
        assert!(heat_response(&spec, 8, Boundary::SemiInfinite).is_err());
    }

    #[test]
    fn two_point_block_moments() {
        let spec = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap();
        let s = heat_response(&spec, 8, Boundary::Dirichlet).unwrap();
        assert_eq!(s, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let c = heat_connecting(&s, 2).unwrap();
        assert_eq!(c, DMatrix::identity(2, 2));
        let back = invert_heat(&MomentSequence::new(s).unwrap(), 2).unwrap();
        assert!((back.a()[0] - 1.0).abs() < 1e-14);
        assert!(back.b().iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn scalar_block_powers() {
        let c = 0.7;
        let spec = JacobiSpec::new(1.0, vec![], vec![c]).unwrap();
        let s = heat_response(&spec, 6, Boundary::Dirichlet).unwrap();
        for (k, x) in s.iter().enumerate() {
            assert!((x - c.powi(k as i32)).abs() < 1e-15);
        }
        let back = invert_heat(&MomentSequence::new(s[..2].to_vec()).unwrap(), 1).unwrap();
        assert!((back.b()[0] - c).abs() < 1e-15);
    }

    #[test]
    fn hankel_is_symmetric() {
        let s: Vec<f64> = (0..9).map(|k| (k * k) as f64 - 1.5).collect();
        let c = heat_connecting(&s, 5).unwrap();
        assert_eq!(c, c.transpose());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c[(i + 1, j)], c[(i, j + 1)]);
            }
        }
    }

    #[test]
    fn dirichlet_field_carries_moments() {
        let spec = random_real_spec(3, 11);
        let f = solve_heat_dirichlet(&spec, &Control::delta(9), 9).unwrap();
        let s = heat_response(&spec, 9, Boundary::Dirichlet).unwrap();
        assert_eq!(f.n_space(), 3);
        for t in 1..=9 {
            assert_eq!(f.get(1, t), s[t - 1]);
        }
        assert!(solve_heat_dirichlet(&spec, &Control::delta(2), 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn front_is_product_of_a(seed in any::<u64>(), n in 1usize..12) {
            let spec = random_real_spec(n, seed).with_a0(0.8).unwrap();
            let f = solve_heat(&spec, &Control::delta(n), n).unwrap();
            let mut prod = 1.0;
            for k in 1..=n {
                prod *= spec.a_at(k - 1);
                prop_assert!((f.get(k, k) - prod).abs() <= 1e-14 * prod);
                for t in 0..k {
                    prop_assert_eq!(f.get(k, t), 0.0);
                }
            }
        }

        #[test]
        fn response_is_moments(seed in any::<u64>(), n in 1usize..=20) {
            let spec = random_real_spec(n, seed);
            let len = 2 * n + 3;
            let s = heat_response(&spec, len, Boundary::Dirichlet).unwrap();
            let m = moments_of_measure(&spectral_measure(&spec).unwrap(), len - 1);
            for (x, y) in s.iter().zip(m.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
            }
        }

        #[test]
        fn semi_infinite_agrees_with_field(seed in any::<u64>(), n in 1usize..=10) {
            let spec = random_real_spec(n, seed);
            let len = 2 * n;
            let s = heat_response(&spec, len, Boundary::SemiInfinite).unwrap();
            let mut padded_a = spec.a().to_vec();
            padded_a.extend(std::iter::repeat_n(1.0, len - n));
            let mut padded_b = spec.b().to_vec();
            padded_b.extend(std::iter::repeat_n(0.0, len - n));
            let long = JacobiSpec::new(1.0, padded_a, padded_b).unwrap();
            let f = solve_heat(&long, &Control::delta(len), len).unwrap();
            for t in 1..=len {
                prop_assert_eq!(s[t - 1], f.get(1, t));
            }
        }

        #[test]
        fn gram_identity(seed in any::<u64>(), n in 1usize..=20) {
            let spec = random_real_spec(n, seed);
            let s = heat_response(&spec, 2 * n - 1, Boundary::SemiInfinite).unwrap();
            let c = heat_connecting(&s, n).unwrap();
            let v = heat_control_matrix(&spec, n).unwrap();
            let gram = v.transpose() * &v;
            prop_assert!(max_abs_diff(&c, &gram) <= 1e-10 * c.amax().max(1.0));
        }

        #[test]
        fn inversion_round_trip(seed in any::<u64>(), n in 1usize..=10) {
            let spec = random_real_spec(n, seed);
            let s = heat_response(&spec, 2 * n, Boundary::Dirichlet).unwrap();
            let back = invert_heat(&MomentSequence::new(s).unwrap(), n).unwrap();
            for (x, y) in back.a().iter().zip(spec.a()) {
                prop_assert!((x - y).abs() <= 1e-8 * y.abs());
            }
            for (x, y) in back.b().iter().zip(spec.b()) {
                prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0));
            }
        }
    }
}
