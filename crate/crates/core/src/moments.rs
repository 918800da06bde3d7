//! Moment-problem machinery: the linear map between moments and response
//! entries, Hankel matrices, truncated moment problems and solvability checks.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::discrete_wave::{connecting_rows, ResponseVector};
use crate::error::{Error, Result};
use crate::inverse_bc::{invert_factorization, invert_factorization_dd};
use crate::jacobi::{chebyshev_derivative_table, chebyshev_table, JacobiSpec};
use crate::linalg::{dot2, ldlt, split_i64, to_dmatrix, Rows};
use crate::scalar::Field;
use crate::spectral::{spectral_measure, MomentSequence, SpectralMeasure};

/// Largest order for which every entry of `Λₙ` fits in `i64`.
pub const LAMBDA_MAX_ORDER: usize = 64;

/// Lower-triangular integer matrix with `r = Λ s`; row `t` holds the monomial
/// coefficients of `𝒯_{t+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LambdaMatrix {
    rows: Vec<Vec<i64>>,
}

impl LambdaMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Entry `(i, j)`, 0-based; zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> i64 {
        if j > i {
            0
        } else {
            self.rows[i][j]
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j) as f64)
    }
}

fn check_order(n: usize) {
    assert!(
        (1..=LAMBDA_MAX_ORDER).contains(&n),
        "Λ order must lie in 1..={LAMBDA_MAX_ORDER}"
    );
}

/// Rows from `𝒯_{t+1} = λ𝒯_t − 𝒯_{t−1}`.
///
/// # Panics
/// If `n` is 0 or exceeds [`LAMBDA_MAX_ORDER`].
pub fn lambda_matrix(n: usize) -> LambdaMatrix {
    check_order(n);
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n);
    rows.push(vec![1]);
    if n > 1 {
        rows.push(vec![0, 1]);
    }
    for t in 2..n {
        let mut row = vec![0i64; t + 1];
        for (j, &c) in rows[t - 1].iter().enumerate() {
            row[j + 1] += c;
        }
        for (j, &c) in rows[t - 2].iter().enumerate() {
            row[j] -= c;
        }
        rows.push(row);
    }
    LambdaMatrix { rows }
}

fn binomial(n: u64, k: u64) -> i64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as i64
}

/// Closed form `Λᵢⱼ = C((i+j)/2, j)·(−1)^{(i+j)/2 + j}` for `j ≤ i`, `i + j` even (0-based).
pub fn lambda_matrix_formula(n: usize) -> LambdaMatrix {
    check_order(n);
    let rows = (0..n)
        .map(|i| {
            (0..=i)
                .map(|j| {
                    if (i + j) % 2 == 1 {
                        return 0;
                    }
                    let h = (i + j) / 2;
                    let sign = if (h + j) % 2 == 0 { 1 } else { -1 };
                    sign * binomial(h as u64, j as u64)
                })
                .collect()
        })
        .collect();
    LambdaMatrix { rows }
}

/// `Σⱼ Λₜⱼ xⱼ` with each integer split into two exact doubles and a compensated dot product.
fn lambda_row_dot(lam: &LambdaMatrix, t: usize, x: &[f64]) -> f64 {
    let mut coef = Vec::with_capacity(2 * (t + 1));
    let mut vals = Vec::with_capacity(2 * (t + 1));
    for (j, &xj) in x.iter().enumerate().take(t + 1) {
        let c = lam.get(t, j);
        if c != 0 {
            let (hi, lo) = split_i64(c);
            coef.extend([hi, lo]);
            vals.extend([xj, xj]);
        }
    }
    dot2(&coef, &vals)
}

/// `r = Λ s`.
pub fn moments_to_response(s: &MomentSequence) -> ResponseVector<f64> {
    let lam = lambda_matrix(s.len());
    let r = (0..s.len()).map(|t| lambda_row_dot(&lam, t, s.as_slice())).collect();
    ResponseVector::new(r).expect("finite moments give finite response")
}

/// `s = Λ⁻¹ r` by forward substitution (Λ has unit diagonal).
pub fn response_to_moments(r: &ResponseVector<f64>) -> MomentSequence {
    let n = r.len();
    let lam = lambda_matrix(n);
    let mut s = vec![0.0; n];
    for t in 0..n {
        let partial = lambda_row_dot(&lam, t, &s[..t]);
        s[t] = r.as_slice()[t] - partial;
    }
    MomentSequence::new(s).expect("finite response gives finite moments")
}

/// `r = Λ s` in double-double arithmetic.
pub(crate) fn moments_to_response_dd(s: &[Dd]) -> Vec<Dd> {
    let lam = lambda_matrix(s.len());
    (0..s.len())
        .map(|t| {
            (0..=t).fold(Dd::from(0.0), |acc, j| {
                let c = lam.get(t, j);
                if c == 0 {
                    acc
                } else {
                    acc + Dd::from(c) * s[j]
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HankelOrdering {
    /// `(S_N)ᵢⱼ = s_{i+j−2}`.
    Classical,
    /// `S^N = J S_N J`, `(S^N)ᵢⱼ = s_{2N−i−j}`.
    Reversed,
}

/// `S₀` and the shifted `S₁` (`s_{i+j−1}` classically) in one stated ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HankelPair {
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub s0: DMatrix<f64>,
    /// Absent when only `2N − 1` moments are available.
    #[serde(serialize_with = "crate::linalg::serialize_opt_rows")]
    pub s1: Option<DMatrix<f64>>,
    pub ordering: HankelOrdering,
}

pub fn hankel_pair(s: &MomentSequence, n: usize, ordering: HankelOrdering) -> Result<HankelPair> {
    if n == 0 || s.len() < 2 * n - 1 {
        return Err(Error::TooShort {
            what: "moment sequence",
            needed: 2 * n.max(1) - 1,
            got: s.len(),
        });
    }
    let sv = s.as_slice();
    let idx = |i: usize, j: usize| match ordering {
        HankelOrdering::Classical => i + j,
        HankelOrdering::Reversed => 2 * n - 2 - i - j,
    };
    let s0 = DMatrix::from_fn(n, n, |i, j| sv[idx(i, j)]);
    let s1 = (s.len() >= 2 * n).then(|| DMatrix::from_fn(n, n, |i, j| sv[idx(i, j) + 1]));
    Ok(HankelPair { s0, s1, ordering })
}

impl HankelPair {
    pub fn reordered(&self) -> HankelPair {
        let flip = |m: &DMatrix<f64>| crate::linalg::reverse_both(m);
        HankelPair {
            s0: flip(&self.s0),
            s1: self.s1.as_ref().map(flip),
            ordering: match self.ordering {
                HankelOrdering::Classical => HankelOrdering::Reversed,
                HankelOrdering::Reversed => HankelOrdering::Classical,
            },
        }
    }
}

/// `C^N` of a moment sequence, without the `a₀` prefactor: `C^N = Λ̃ S^N Λ̃ᵀ`, `Λ̃ = JΛJ`.
pub fn connecting_from_moments(r: &[f64], n: usize) -> DMatrix<f64> {
    let r0 = r[0];
    to_dmatrix(&connecting_rows(r, n)) / r0
}

/// Entry `(i, j)` (1-based) of `C^T` without prefactor.
fn c_entry<F: Field>(r: &[F], t: usize, i: usize, j: usize) -> F {
    let d = i.abs_diff(j);
    (0..=(t - i.max(j))).fold(F::zero(), |acc, k| acc + r[d + 2 * k])
}

/// `B^N_{lm} = C^{N+1}_{l+1,m} + C^N_{l,m+1}` (0-based, out-of-range terms zero).
/// Uses `r₀ … r_{2N−1}`.
pub fn build_b(r: &ResponseVector<f64>, n: usize) -> Result<DMatrix<f64>> {
    let rs = r.as_slice();
    if n == 0 || rs.len() < 2 * n {
        return Err(Error::TooShort {
            what: "response vector",
            needed: 2 * n.max(1),
            got: rs.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |l, m| {
        let first = c_entry(rs, n + 1, l + 2, m + 1);
        let second = if m + 1 < n { c_entry(rs, n, l + 1, m + 2) } else { 0.0 };
        first + second
    }))
}

/// `E*(V^{N+1})* C^{N+1} E + C^N V^N`, assembled from the operators themselves
/// (connecting matrices without prefactor, as in [`build_b`]).
pub fn build_b_literal(r: &ResponseVector<f64>, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || r.len() < 2 * n {
        return Err(Error::TooShort {
            what: "response vector",
            needed: 2 * n.max(1),
            got: r.len(),
        });
    }
    // r_{2N} only enters the (1,1) entry of C^{N+1}, which E* V* discards.
    let mut rs = r.as_slice()[..2 * n].to_vec();
    rs.push(0.0);
    let shift = |k: usize| DMatrix::from_fn(k, k, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
    let e = DMatrix::from_fn(n + 1, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let c1 = to_dmatrix(&connecting_rows(&rs, n + 1));
    let c0 = to_dmatrix(&connecting_rows(&rs, n));
    Ok((e.transpose() * shift(n + 1).transpose() * c1 * &e + c0 * shift(n)) / rs[0])
}

fn check_moment_count(len: usize, n: usize) -> Result<()> {
    if n == 0 || len < 2 * n - 1 {
        return Err(Error::TooShort {
            what: "moment sequence",
            needed: 2 * n.max(1) - 1,
            got: len,
        });
    }
    Ok(())
}

/// Response entries `r₀ … r_{2N−1}` for order `N`. With only `2N − 1` moments,
/// `r_{2N−1}` is chosen so that the recovered `b_N` equals `b_last`.
fn response_for_order(s: &MomentSequence, n: usize, b_last: f64) -> Result<Vec<f64>> {
    check_moment_count(s.len(), n)?;
    if s.as_slice()[0] <= 0.0 {
        return Err(Error::NotRealizable("s₀ must be positive".into()));
    }
    let take = s.len().min(2 * n);
    let s_used = MomentSequence::new(s.as_slice()[..take].to_vec())?;
    complete_response(moments_to_response(&s_used).into_vec(), n, b_last)
}

fn response_for_order_dd(s: &[Dd], n: usize, b_last: f64) -> Result<Vec<Dd>> {
    check_moment_count(s.len(), n)?;
    if s[0].hi() <= 0.0 {
        return Err(Error::NotRealizable("s₀ must be positive".into()));
    }
    let take = s.len().min(2 * n);
    complete_response(moments_to_response_dd(&s[..take]), n, Dd::from(b_last))
}

fn complete_response<F: Field>(mut r: Vec<F>, n: usize, b_last: F) -> Result<Vec<F>> {
    if r.len() == 2 * n {
        return Ok(r);
    }
    // Normalized C_N (reversed order) and its LDLᵀ.
    let r0 = r[0];
    let rn: Vec<F> = r.iter().map(|&x| x / r0).collect();
    let rows = connecting_rows(&rn, n);
    let c: Rows<F> = (0..n)
        .map(|i| (0..n).map(|j| rows[n - 1 - i][n - 1 - j]).collect())
        .collect();
    let fac = ldlt(&c, F::singular_rtol())
        .map_err(|e| Error::NotRealizable(format!("leading minor {} of C_N vanishes", e.order)))?;
    let y_prev = if n >= 2 { fac.l[n - 1][n - 2] } else { F::zero() };
    // Replacement column with the unknown r_{2N−1} set to zero; it enters the last entry only.
    let m: Vec<F> = (1..=n)
        .map(|i| {
            let p = n + 2 - i;
            (0..=(n + 1 - p))
                .map(|k| p - 1 + 2 * k)
                .filter(|&idx| idx < 2 * n - 1)
                .fold(F::zero(), |acc, idx| acc + rn[idx])
        })
        .collect();
    let y0 = *fac.solve(&m).last().unwrap();
    let mut e = vec![F::zero(); n];
    e[n - 1] = F::one();
    let g = *fac.solve(&e).last().unwrap();
    let rn_last = (b_last + y_prev - y0) / g;
    r.push(rn_last * r0);
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedMeasure {
    pub measure: SpectralMeasure,
    /// Indices `k` with `λ_{k+1} − λ_k` below `1e−8` times the spectral diameter.
    pub clustered: Vec<usize>,
}

pub const CLUSTER_RTOL: f64 = 1e-8;

fn cluster_flags(eigs: &[f64]) -> Vec<usize> {
    if eigs.len() < 2 {
        return Vec::new();
    }
    let diam = eigs[eigs.len() - 1] - eigs[0];
    eigs.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] < CLUSTER_RTOL * diam)
        .map(|(k, _)| k)
        .collect()
}

/// Generalized problem `B^N f = λ C^N f` with `(C^N f, f) = 1` and weights `(R f)_N²`.
pub fn truncated_moment_spectral(s: &MomentSequence, n: usize) -> Result<TruncatedMeasure> {
    truncated_moment_spectral_with(s, n, 0.0)
}

/// As [`truncated_moment_spectral`], with the convention `b_N = b_last` when `r_{2N−1}` is missing.
pub fn truncated_moment_spectral_with(s: &MomentSequence, n: usize, b_last: f64) -> Result<TruncatedMeasure> {
    let r = response_for_order(s, n, b_last)?;
    let c = connecting_from_moments(&r, n);
    let b = build_b(&ResponseVector::new(r.clone())?, n)?;
    let chol = Cholesky::new(c).ok_or_else(|| Error::NotRealizable("C^N is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotRealizable("C^N is singular".into()))?;
    let mut m = &linv * b * linv.transpose();
    m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut atoms: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let y = eig.eigenvectors.column(k).into_owned();
            let f = linv.transpose() * y;
            let alpha: f64 = (0..n).map(|s| r[s] * f[n - 1 - s]).sum();
            (eig.eigenvalues[k], alpha * alpha)
        })
        .collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let eigs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let clustered = cluster_flags(&eigs);
    let measure = if clustered.is_empty() {
        SpectralMeasure::new(atoms)?
    } else {
        SpectralMeasure::from_sorted_unchecked(atoms)
    };
    Ok(TruncatedMeasure { measure, clustered })
}

/// [`truncated_moment_spectral`] for moments given in double-double.
///
/// `C^N`, `B^N`, the Cholesky factor `L` of `C^N`, `L⁻¹B^N L⁻ᵀ` and `L⁻¹J r`
/// are formed in double-double; the eigensolve of the (well-conditioned) reduced
/// matrix runs in `f64`.
pub fn truncated_moment_spectral_dd(s: &[Dd], n: usize) -> Result<TruncatedMeasure> {
    let r = response_for_order_dd(s, n, 0.0)?;
    let c: Vec<Vec<Dd>> = (1..=n)
        .map(|i| (1..=n).map(|j| c_entry(&r, n, i, j)).collect())
        .collect();
    let b: Vec<Vec<Dd>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|m| {
                    let first = c_entry(&r, n + 1, l + 2, m + 1);
                    let second = if m + 1 < n {
                        c_entry(&r, n, l + 1, m + 2)
                    } else {
                        Dd::ZERO
                    };
                    first + second
                })
                .collect()
        })
        .collect();
    let l = cholesky_dd(&c)?;
    let x: Vec<Vec<Dd>> = (0..n)
        .map(|col| forward_dd(&l, &(0..n).map(|row| b[row][col]).collect::<Vec<_>>()))
        .collect();
    let m_cols: Vec<Vec<Dd>> = (0..n)
        .map(|j| forward_dd(&l, &(0..n).map(|c| x[c][j]).collect::<Vec<_>>()))
        .collect();
    let mut m = DMatrix::from_fn(n, n, |i, j| m_cols[j][i].to_f64());
    m = (&m + m.transpose()) * 0.5;
    let jr: Vec<Dd> = (0..n).map(|i| r[n - 1 - i]).collect();
    let g: Vec<f64> = forward_dd(&l, &jr).iter().map(|x| x.to_f64()).collect();
    let eig = SymmetricEigen::new(m);
    let mut atoms: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let alpha: f64 = (0..n).map(|i| g[i] * eig.eigenvectors[(i, k)]).sum();
            (eig.eigenvalues[k], alpha * alpha)
        })
        .collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let eigs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let clustered = cluster_flags(&eigs);
    let measure = if clustered.is_empty() {
        SpectralMeasure::new(atoms)?
    } else {
        SpectralMeasure::from_sorted_unchecked(atoms)
    };
    Ok(TruncatedMeasure { measure, clustered })
}

fn cholesky_dd(a: &[Vec<Dd>]) -> Result<Vec<Vec<Dd>>> {
    let n = a.len();
    let mut l = vec![vec![Dd::ZERO; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d.hi() <= 0.0 {
            return Err(Error::NotRealizable("C^N is not positive definite".into()));
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / djj;
        }
    }
    Ok(l)
}

/// Solves `L x = y` for lower-triangular `L`.
fn forward_dd(l: &[Vec<Dd>], y: &[Dd]) -> Vec<Dd> {
    let mut x = vec![Dd::ZERO; y.len()];
    for i in 0..y.len() {
        let mut v = y[i];
        for k in 0..i {
            v -= l[i][k] * x[k];
        }
        x[i] = v / l[i][i];
    }
    x
}

/// [`truncated_moment_naive`] for moments given in double-double.
pub fn truncated_moment_naive_dd(s: &[Dd], n: usize) -> Result<(JacobiSpec<f64>, SpectralMeasure)> {
    let r = response_for_order_dd(s, n, 0.0)?;
    let mass = r[0].to_f64();
    let spec = invert_factorization_dd(&r, n)?.recovered.with_a0(1.0)?;
    let mu = spectral_measure(&spec)?;
    let scaled = mu.atoms().iter().map(|&(l, w)| (l, w * mass)).collect();
    Ok((spec, SpectralMeasure::new(scaled)?))
}

/// Moments → response → factorization → eigensolve. `padding` appends
/// user-chosen `(aₖ, bₖ)` pairs to the recovered block before the eigensolve.
pub fn truncated_moment_naive(
    s: &MomentSequence,
    n: usize,
    padding: &[(f64, f64)],
) -> Result<(JacobiSpec<f64>, SpectralMeasure)> {
    let r = response_for_order(s, n, 0.0)?;
    let mass = r[0];
    let inv = invert_factorization(&ResponseVector::new(r)?, n)?;
    let mut spec = inv.recovered.with_a0(1.0)?;
    if !padding.is_empty() {
        let mut a = spec.a().to_vec();
        let mut b = spec.b().to_vec();
        for &(ak, bk) in padding {
            a.push(ak);
            b.push(bk);
        }
        spec = JacobiSpec::new(1.0, a, b)?;
    }
    let mu = spectral_measure(&spec)?;
    let scaled = mu.atoms().iter().map(|&(l, w)| (l, w * mass)).collect();
    Ok((spec, SpectralMeasure::new(scaled)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentProblem {
    Hamburger,
    Stieltjes,
    Hausdorff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    SingularPsd,
    Indefinite,
}

pub const DEFINITENESS_RTOL: f64 = 1e-10;

/// Classifies a symmetric matrix by its extreme eigenvalues, relative to its largest magnitude.
pub fn definiteness(m: &DMatrix<f64>) -> Definiteness {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues;
    let scale = eig.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tol = DEFINITENESS_RTOL * scale.max(f64::MIN_POSITIVE);
    let min = eig.min();
    if min > tol {
        Definiteness::PositiveDefinite
    } else if min >= -tol {
        Definiteness::SingularPsd
    } else {
        Definiteness::Indefinite
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolvabilityRow {
    pub n: usize,
    pub s0: Definiteness,
    pub s1: Option<Definiteness>,
    /// `S₀ − S₁` (Hausdorff only).
    pub s0_minus_s1: Option<Definiteness>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolvabilityReport {
    pub kind: MomentProblem,
    pub rows: Vec<SolvabilityRow>,
    /// No matrix in any row is indefinite.
    pub pass: bool,
}

pub fn solvability(s: &MomentSequence, kind: MomentProblem, n_max: usize) -> Result<SolvabilityReport> {
    let needed = match kind {
        MomentProblem::Hamburger => 2 * n_max - 1,
        _ => 2 * n_max,
    };
    if n_max == 0 || s.len() < needed {
        return Err(Error::TooShort {
            what: "moment sequence",
            needed: needed.max(1),
            got: s.len(),
        });
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let h = hankel_pair(s, n, HankelOrdering::Classical)?;
        let s0 = definiteness(&h.s0);
        let (s1, diff) = match kind {
            MomentProblem::Hamburger => (None, None),
            MomentProblem::Stieltjes => (h.s1.as_ref().map(definiteness), None),
            MomentProblem::Hausdorff => {
                let s1m = h.s1.as_ref().expect("length checked");
                (Some(definiteness(s1m)), Some(definiteness(&(&h.s0 - s1m))))
            }
        };
        let pass = [Some(s0), s1, diff]
            .iter()
            .flatten()
            .all(|d| *d != Definiteness::Indefinite);
        rows.push(SolvabilityRow {
            n,
            s0,
            s1,
            s0_minus_s1: diff,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(SolvabilityReport { kind, rows, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    BoundedLooking,
    Growing,
}

pub const TREND_RTOL: f64 = 1e-3;
pub const TREND_WINDOW: usize = 5;

/// Heuristic label from the last few finite values.
pub fn trend(values: &[f64]) -> Trend {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return Trend::Growing;
    }
    let w = &finite[finite.len().saturating_sub(TREND_WINDOW)..];
    let last = w[w.len() - 1];
    let spread = w.iter().map(|v| (v - last).abs()).fold(0.0, f64::max);
    if spread < TREND_RTOL * last.abs() {
        Trend::BoundedLooking
    } else {
        Trend::Growing
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndeterminacyRow {
    pub n: usize,
    /// `((C^N)⁻¹Γ_N, Γ_N)`, also `M_N`.
    pub gamma_form: f64,
    pub delta_form: f64,
    /// `((C^N)⁻¹(R^N)*Γ_N, e₁) / ((C^N)⁻¹Γ_N, e₁)`; absent when the denominator vanishes.
    pub l_n: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndeterminacyTable {
    pub rows: Vec<IndeterminacyRow>,
    /// Order at which `C^N` stopped being positive definite, if any.
    pub stopped_at: Option<usize>,
    pub gamma_trend: Trend,
    pub delta_trend: Trend,
    pub l_trend: Trend,
}

pub fn indeterminacy_sequences(s: &MomentSequence, n_max: usize) -> Result<IndeterminacyTable> {
    if n_max == 0 || s.len() < 2 * n_max - 1 {
        return Err(Error::TooShort {
            what: "moment sequence",
            needed: 2 * n_max.max(1) - 1,
            got: s.len(),
        });
    }
    let r = moments_to_response(&MomentSequence::new(s.as_slice()[..2 * n_max - 1].to_vec())?).into_vec();
    let u0 = chebyshev_table(n_max, 0.0);
    let du0 = chebyshev_derivative_table(n_max, 0.0);
    let mut rows = Vec::new();
    let mut stopped_at = None;
    for n in 1..=n_max {
        let c = connecting_from_moments(&r, n);
        let rows_c = crate::linalg::from_dmatrix(&c);
        let fac = match ldlt(&rows_c, f64::singular_rtol()) {
            Ok(f) if f.d.iter().all(|&p| p > 0.0) => f,
            _ => {
                if n == 1 {
                    return Err(Error::Singular("C^1 is singular".into()));
                }
                stopped_at = Some(n);
                break;
            }
        };
        let gamma: Vec<f64> = (0..n).map(|i| u0[n - i]).collect();
        let delta: Vec<f64> = (0..n).map(|i| du0[n - i]).collect();
        let cg = fac.solve(&gamma);
        let cd = fac.solve(&delta);
        let gamma_form: f64 = cg.iter().zip(&gamma).map(|(x, y)| x * y).sum();
        let delta_form: f64 = cd.iter().zip(&delta).map(|(x, y)| x * y).sum();
        // (R^N)ᵀΓ with R[t−1][j] = r_{t−1−j}.
        let rt_gamma: Vec<f64> = (0..n).map(|j| (j..n).map(|i| r[i - j] * gamma[i]).sum()).collect();
        let num = fac.solve(&rt_gamma)[0];
        let den = cg[0];
        let l_n = (den.abs() > 1e-300).then(|| num / den);
        rows.push(IndeterminacyRow {
            n,
            gamma_form,
            delta_form,
            l_n,
        });
    }
    let col = |f: fn(&IndeterminacyRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (gamma_trend, delta_trend, l_trend) = if stopped_at.is_some() {
        (Trend::Growing, Trend::Growing, Trend::Growing)
    } else {
        (
            trend(&col(|r| r.gamma_form)),
            trend(&col(|r| r.delta_form)),
            trend(&col(|r| r.l_n.unwrap_or(f64::NAN))),
        )
    };
    Ok(IndeterminacyTable {
        rows,
        stopped_at,
        gamma_trend,
        delta_trend,
        l_trend,
    })
}

/// `Λ̃ = JΛJ`.
pub fn lambda_tilde(n: usize) -> DMatrix<f64> {
    crate::linalg::reverse_both(&lambda_matrix(n).to_dmatrix())
}

/// Solves `S₁ g = λ S₀ g` (reversed ordering) directly; eigenvalues ascending.
pub fn hankel_generalized_eigenvalues(s: &MomentSequence, n: usize) -> Result<Vec<f64>> {
    let h = hankel_pair(s, n, HankelOrdering::Reversed)?;
    let s1 = h.s1.ok_or(Error::TooShort {
        what: "moment sequence",
        needed: 2 * n,
        got: s.len(),
    })?;
    let chol = Cholesky::new(h.s0).ok_or_else(|| Error::NotRealizable("S₀ is not positive definite".into()))?;
    let linv = chol.l().try_inverse().ok_or_else(|| Error::Singular("S₀".into()))?;
    let m = &linv * s1 * linv.transpose();
    let mut e: Vec<f64> = SymmetricEigen::new((&m + m.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}
