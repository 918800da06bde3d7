//! Seeded generators for test and experiment data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jacobi::JacobiSpec;
use crate::scalar::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real spec with `aₖ ∈ [a_lo, a_hi]`, `bₖ ∈ [b_lo, b_hi]` and `a₀ = 1`.
pub fn random_real_spec_in(n: usize, a_range: (f64, f64), b_range: (f64, f64), rng: &mut impl Rng) -> JacobiSpec<f64> {
    let a = (1..n).map(|_| rng.gen_range(a_range.0..=a_range.1)).collect();
    let b = (0..n).map(|_| rng.gen_range(b_range.0..=b_range.1)).collect();
    JacobiSpec::new(1.0, a, b).expect("ranges produce admissible coefficients")
}

/// The default random family: `aₖ ∈ [0.5, 2]`, `bₖ ∈ [−1, 1]`.
pub fn random_real_spec(n: usize, seed: u64) -> JacobiSpec<f64> {
    random_real_spec_in(n, (0.5, 2.0), (-1.0, 1.0), &mut rng(seed))
}

/// Complex spec with entries drawn from a disc around the real family.
pub fn random_complex_spec(n: usize, seed: u64) -> JacobiSpec<Complex64> {
    let mut r = rng(seed);
    let mut draw = |lo: f64, hi: f64| Complex64::new(r.gen_range(lo..=hi), r.gen_range(-0.5..=0.5));
    let a = (1..n).map(|_| draw(0.5, 2.0)).collect();
    let b = (0..n).map(|_| draw(-1.0, 1.0)).collect();
    JacobiSpec::new(Complex64::new(1.0, 0.0), a, b).expect("nonzero off-diagonals")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_specs_are_reproducible() {
        assert_eq!(random_real_spec(7, 3), random_real_spec(7, 3));
        assert_ne!(random_real_spec(7, 3), random_real_spec(7, 4));
        let s = random_real_spec(9, 11);
        assert!(s.a().iter().all(|a| (0.5..=2.0).contains(a)));
        assert!(s.b().iter().all(|b| (-1.0..=1.0).contains(b)));
    }
}
