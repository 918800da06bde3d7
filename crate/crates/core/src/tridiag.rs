//! Symmetric tridiagonal eigensolver: implicit-shift QL for eigenvalues,
//! inverse iteration for eigenvectors.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e.len() == d.len() − 1`), ascending.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 || e.len() + 1 != n {
        return Err(Error::Dimension(format!("diagonal {} / off-diagonal {}", n, e.len())));
    }
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::Numerical("QL iteration did not converge".into()));
            }
            // Wilkinson shift from the leading 2×2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// Solves `(T − μI)x = rhs` by Gaussian elimination with partial pivoting on
/// the tridiagonal band; zero pivots are replaced by `tiny`.
fn shifted_solve(d: &[f64], e: &[f64], mu: f64, rhs: &[f64], tiny: f64) -> Vec<f64> {
    let n = d.len();
    // Rows stored as (sub, diag, sup, sup2) after pivoting.
    let mut diag: Vec<f64> = d.iter().map(|x| x - mu).collect();
    let mut sup: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
    let mut sup2 = vec![0.0; n];
    let mut sub: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        // Candidate pivot rows: i (diag[i], sup[i], sup2[i]) and i+1 (sub[i], diag[i+1], sup[i+1]).
        if sub[i].abs() > diag[i].abs() {
            let (r0, r1, r2) = (diag[i], sup[i], sup2[i]);
            diag[i] = sub[i];
            sup[i] = diag[i + 1];
            sup2[i] = sup[i + 1];
            sub[i] = r0;
            diag[i + 1] = r1;
            sup[i + 1] = r2;
            b.swap(i, i + 1);
        }
        if diag[i] == 0.0 {
            diag[i] = tiny;
        }
        let m = sub[i] / diag[i];
        diag[i + 1] -= m * sup[i];
        sup[i + 1] -= m * sup2[i];
        b[i + 1] -= m * b[i];
        sub[i] = 0.0;
    }
    if diag[n - 1] == 0.0 {
        diag[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= sup[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= sup2[i] * x[i + 2];
        }
        x[i] = v / diag[i];
    }
    x
}

fn normalize(v: &mut [f64]) {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
}

/// Eigenpairs (ascending eigenvalues, unit eigenvectors) of a symmetric tridiagonal matrix.
pub fn tridiagonal_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let values = tridiagonal_eigenvalues(d, e)?;
    let n = d.len();
    let norm = d
        .iter()
        .map(|x| x.abs())
        .chain(e.iter().map(|x| 2.0 * x.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let cluster = 1e-3 * norm;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut cluster_start = 0;
    for (k, &lam) in values.iter().enumerate() {
        if k > 0 && (lam - values[k - 1]).abs() > cluster {
            cluster_start = k;
        }
        // Deterministic start vector, varied per index to avoid orthogonal starts.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (((i * 7 + k * 13) % 17) as f64 / 17.0))
            .collect();
        normalize(&mut v);
        for _ in 0..3 {
            v = shifted_solve(d, e, lam, &v, tiny);
            for prev in &vectors[cluster_start..k] {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            normalize(&mut v);
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(d: &[f64], e: &[f64], lam: f64, v: &[f64]) -> f64 {
        let n = d.len();
        (0..n)
            .map(|i| {
                let mut av = d[i] * v[i];
                if i > 0 {
                    av += e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    av += e[i] * v[i + 1];
                }
                (av - lam * v[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn two_by_two() {
        let (vals, vecs) = tridiagonal_eigen(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
        assert!((vecs[0][0] + vecs[0][1]).abs() < 1e-14);
    }

    #[test]
    fn free_spectrum_matches_cosines() {
        let n = 40;
        let vals = tridiagonal_eigenvalues(&vec![0.0; n], &vec![1.0; n - 1]).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = -2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn single_entry() {
        let (vals, vecs) = tridiagonal_eigen(&[3.5], &[]).unwrap();
        assert_eq!(vals, vec![3.5]);
        assert_eq!(vecs, vec![vec![1.0]]);
    }

    #[test]
    fn nearly_degenerate_pair_stays_orthogonal() {
        // Wilkinson-type matrix: pairs of eigenvalues agreeing to many digits.
        let n = 21;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 - 10.0).abs()).collect();
        let e = vec![1.0; n - 1];
        let (vals, vecs) = tridiagonal_eigen(&d, &e).unwrap();
        for i in 0..n {
            assert!(residual(&d, &e, vals[i], &vecs[i]) < 1e-12);
            for j in 0..i {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-10, "({i},{j}) dot {dot}");
            }
        }
    }

    proptest! {
        #[test]
        fn eigenpairs_are_accurate(
            n in 1usize..50,
            seed in prop::collection::vec(-1.0f64..1.0, 100),
        ) {
            let d: Vec<f64> = seed[..n].to_vec();
            let e: Vec<f64> = seed[50..50 + n - 1].iter().map(|x| 1.25 + 0.75 * x).collect();
            let (vals, vecs) = tridiagonal_eigen(&d, &e).unwrap();
            let trace: f64 = d.iter().sum();
            prop_assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-10 * n as f64);
            for w in vals.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for (lam, v) in vals.iter().zip(&vecs) {
                prop_assert!(residual(&d, &e, *lam, v) <= 1e-12 * (1.0 + lam.abs()));
            }
        }
    }
}
