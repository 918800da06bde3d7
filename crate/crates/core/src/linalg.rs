//! Small dense kernels shared across modules: compensated dot products and an
//! unpivoted symmetric LDLᵀ over any [`Field`].

use nalgebra::{DMatrix, Scalar as NaScalar};

use crate::scalar::Field;

/// Dense row-major square matrix used by the field-generic kernels.
pub type Rows<F> = Vec<Vec<F>>;

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Dot product evaluated as if in twice the working precision.
pub fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (p, pe) = two_prod(x, y);
        let (t, te) = two_sum(s, p);
        s = t;
        c += pe + te;
    }
    s + c
}

/// Splits an integer into two doubles whose exact sum is the integer.
pub fn split_i64(x: i64) -> (f64, f64) {
    let hi = x as f64;
    let lo = (x as i128 - hi as i128) as f64;
    (hi, lo)
}

/// Failure of an unpivoted factorization: the leading minor of `order` vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularLeading {
    pub order: usize,
    pub pivot: f64,
    /// Threshold the pivot was compared against.
    pub tol: f64,
}

/// `A = L D Lᵀ` with unit lower-triangular `L` (plain transpose, also in complex mode).
#[derive(Debug, Clone)]
pub struct Ldlt<F> {
    pub l: Rows<F>,
    pub d: Vec<F>,
}

pub fn inf_norm<F: Field>(a: &Rows<F>) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|x| x.mag()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Unpivoted LDLᵀ. Pivot `k` equals `det A_{k+1} / det A_k`.
///
/// A pivot is reported as a singular leading minor when its magnitude is at most
/// `rtol` times the magnitude of the terms it was formed from,
/// `|a_kk| + Σⱼ |l_kj|²|d_j|`, i.e. when it is indistinguishable from cancellation.
pub fn ldlt<F: Field>(a: &Rows<F>, rtol: f64) -> Result<Ldlt<F>, SingularLeading> {
    let n = a.len();
    let mut l = vec![vec![F::zero(); n]; n];
    let mut d = vec![F::zero(); n];
    for k in 0..n {
        let mut dk = a[k][k];
        let mut scale = a[k][k].mag();
        for j in 0..k {
            let t = l[k][j] * l[k][j] * d[j];
            scale += t.mag();
            dk = dk - t;
        }
        let tol = rtol * scale;
        if dk.mag() <= tol || !dk.mag().is_finite() {
            return Err(SingularLeading {
                order: k + 1,
                pivot: dk.mag(),
                tol,
            });
        }
        d[k] = dk;
        l[k][k] = F::one();
        for i in k + 1..n {
            let mut v = a[i][k];
            for j in 0..k {
                v = v - l[i][j] * l[k][j] * d[j];
            }
            l[i][k] = v / dk;
        }
    }
    Ok(Ldlt { l, d })
}

impl<F: Field> Ldlt<F> {
    pub fn solve(&self, b: &[F]) -> Vec<F> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.l[i][j] * x[j];
            }
        }
        for i in 0..n {
            x[i] = x[i] / self.d[i];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.l[j][i] * x[j];
            }
        }
        x
    }

    /// Leading minors `det A_1, …, det A_n` as running pivot products.
    pub fn leading_minors(&self) -> Vec<F> {
        let mut acc = F::one();
        self.d
            .iter()
            .map(|&p| {
                acc = acc * p;
                acc
            })
            .collect()
    }
}

pub fn to_dmatrix<F: NaScalar + Copy>(a: &Rows<F>) -> DMatrix<F> {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| a[i][j])
}

pub fn from_dmatrix<F: NaScalar + Copy>(a: &DMatrix<F>) -> Rows<F> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

/// `J A J`: reverses both indices.
/// Serializes a matrix as a list of rows.
pub fn serialize_rows<T, Ser>(m: &DMatrix<T>, ser: Ser) -> Result<Ser::Ok, Ser::Error>
where
    T: NaScalar + Copy + serde::Serialize,
    Ser: serde::Serializer,
{
    serde::Serialize::serialize(&from_dmatrix(m), ser)
}

pub fn serialize_opt_rows<T, Ser>(m: &Option<DMatrix<T>>, ser: Ser) -> Result<Ser::Ok, Ser::Error>
where
    T: NaScalar + Copy + serde::Serialize,
    Ser: serde::Serializer,
{
    serde::Serialize::serialize(&m.as_ref().map(from_dmatrix), ser)
}

pub fn reverse_both<T: NaScalar + Copy>(a: &DMatrix<T>) -> DMatrix<T> {
    let (n, m) = a.shape();
    DMatrix::from_fn(n, m, |i, j| a[(n - 1 - i, m - 1 - j)])
}

pub fn max_abs_diff<T: nalgebra::ComplexField<RealField = f64>>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x.clone() - y.clone()).modulus())
        .fold(0.0, f64::max)
}
