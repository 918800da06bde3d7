//! Jacobi coefficient data, Chebyshev polynomials of the second kind and the
//! orthogonal polynomials φₙ of a Jacobi block.

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Complex64, Field, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Real,
    Complex,
}

/// Coefficients `(a₀, a₁…a_{N−1}, b₁…b_N)` of an N×N Jacobi block.
///
/// `a0` couples the first site to the boundary control and is not part of the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSpec<S = f64> {
    a0: S,
    a: Vec<S>,
    b: Vec<S>,
}

impl<S: Scalar> JacobiSpec<S> {
    pub fn new(a0: S, a: Vec<S>, b: Vec<S>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::InvalidSpec("block size must be at least 1".into()));
        }
        if a.len() + 1 != b.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} off-diagonal entries for {} diagonal entries, got {}",
                b.len() - 1,
                b.len(),
                a.len()
            )));
        }
        let finite = |x: &S| x.to_c64().re.is_finite() && x.to_c64().im.is_finite();
        if !finite(&a0) || !a.iter().all(finite) || !b.iter().all(finite) {
            return Err(Error::InvalidSpec("non-finite coefficient".into()));
        }
        let admissible = |x: &S| {
            if S::COMPLEX {
                x.mag() > 0.0
            } else {
                x.real_part() > 0.0
            }
        };
        if !admissible(&a0) {
            return Err(Error::InvalidSpec(if S::COMPLEX {
                "a0 must be nonzero".into()
            } else {
                "a0 must be positive".into()
            }));
        }
        if let Some(k) = a.iter().position(|x| !admissible(x)) {
            return Err(Error::InvalidSpec(format!(
                "a_{} must be {}",
                k + 1,
                if S::COMPLEX { "nonzero" } else { "positive" }
            )));
        }
        Ok(Self { a0, a, b })
    }

    /// Free block of size `n`: `a₀ = aₖ = 1`, `bₖ = 0`.
    pub fn free(n: usize) -> Self {
        assert!(n >= 1, "block size must be at least 1");
        Self {
            a0: S::one(),
            a: vec![S::one(); n - 1],
            b: vec![S::zero(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn a0(&self) -> S {
        self.a0
    }

    /// `a₁ … a_{N−1}`.
    pub fn a(&self) -> &[S] {
        &self.a
    }

    /// `b₁ … b_N`.
    pub fn b(&self) -> &[S] {
        &self.b
    }

    /// `a_k` for `k = 0…N−1` (index 0 is `a₀`).
    pub fn a_at(&self, k: usize) -> S {
        if k == 0 {
            self.a0
        } else {
            self.a[k - 1]
        }
    }

    /// `b_n`, 1-based.
    pub fn b_at(&self, n: usize) -> S {
        self.b[n - 1]
    }

    pub fn mode(&self) -> Mode {
        if S::COMPLEX {
            Mode::Complex
        } else {
            Mode::Real
        }
    }

    pub fn with_a0(mut self, a0: S) -> Result<Self> {
        self.a0 = a0;
        Self::new(self.a0, self.a, self.b)
    }

    /// Leading `n×n` sub-block with the same `a₀`.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::Invalid(format!(
                "cannot truncate block of size {} to {n}",
                self.n()
            )));
        }
        Ok(Self {
            a0: self.a0,
            a: self.a[..n - 1].to_vec(),
            b: self.b[..n].to_vec(),
        })
    }

    /// The N×N symmetric tridiagonal matrix.
    pub fn matrix(&self) -> DMatrix<S> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.b[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.a[i];
                m[(i + 1, i)] = self.a[i];
            }
        }
        m
    }

    /// Largest coefficient magnitude `sup{|aₖ|, |bₖ|}` over the block, `a₀` excluded.
    pub fn coefficient_bound(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).map(|x| x.mag()).fold(0.0, f64::max)
    }
}

impl JacobiSpec<f64> {
    pub fn to_complex(&self) -> JacobiSpec<Complex64> {
        let c = |x: &f64| Complex64::new(*x, 0.0);
        JacobiSpec {
            a0: c(&self.a0),
            a: self.a.iter().map(c).collect(),
            b: self.b.iter().map(c).collect(),
        }
    }
}

/// `𝒯_t(λ)` from `𝒯_{t+1} + 𝒯_{t−1} = λ𝒯_t`, `𝒯₀ = 0`, `𝒯₁ = 1`.
pub fn chebyshev_u<F: Field>(t: usize, lambda: F) -> F {
    let (mut prev, mut cur) = (F::zero(), F::one());
    if t == 0 {
        return prev;
    }
    for _ in 1..t {
        let next = lambda * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `𝒯₀(λ) … 𝒯_t(λ)`.
pub fn chebyshev_table<F: Field>(t: usize, lambda: F) -> Vec<F> {
    let mut out = Vec::with_capacity(t + 1);
    out.push(F::zero());
    if t == 0 {
        return out;
    }
    out.push(F::one());
    for k in 1..t {
        let next = lambda * out[k] - out[k - 1];
        out.push(next);
    }
    out
}

/// `𝒯′₀(λ) … 𝒯′_t(λ)` by the differentiated recurrence.
pub fn chebyshev_derivative_table(t: usize, lambda: f64) -> Vec<f64> {
    let u = chebyshev_table(t, lambda);
    let mut d = vec![0.0; t + 1];
    for k in 1..t {
        d[k + 1] = lambda * d[k] + u[k] - d[k - 1];
    }
    d
}

/// `φ₁(λ) … φ_{n_max}(λ)` from `aₙφ_{n+1} = (λ − bₙ)φₙ − a_{n−1}φ_{n−1}`, `φ₀ = 0`, `φ₁ = 1`.
///
/// `φ_{N+1}` is formed with `a_N = 1`, so its zeros are the eigenvalues of the block.
pub fn phi_eval<S: Scalar>(spec: &JacobiSpec<S>, lambda: S, n_max: usize) -> Result<Vec<S>> {
    let n = spec.n();
    if n_max == 0 || n_max > n + 1 {
        return Err(Error::Invalid(format!("n_max = {n_max} outside 1..={}", n + 1)));
    }
    let mut phi = Vec::with_capacity(n_max);
    phi.push(S::one());
    let mut prev = S::zero();
    for k in 1..n_max {
        let an = if k < n { spec.a_at(k) } else { S::one() };
        let am1 = if k == 1 { S::zero() } else { spec.a_at(k - 1) };
        let cur = phi[k - 1];
        let next = ((lambda - spec.b_at(k)) * cur - am1 * prev) / an;
        prev = cur;
        phi.push(next);
    }
    Ok(phi)
}

impl<S: Scalar> Serialize for JacobiSpec<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let mut st = serializer.serialize_struct("JacobiSpec", 4)?;
        st.serialize_field("a0", &self.a0)?;
        st.serialize_field("a", &self.a)?;
        st.serialize_field("b", &self.b)?;
        st.serialize_field("mode", &self.mode())?;
        st.end()
    }
}

impl<'de, S: Scalar> Deserialize<'de> for JacobiSpec<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(deserializer)?;
        let conv =
            |x: &Num| S::from_c64(x.to_c64()).ok_or_else(|| D::Error::custom("complex entry in a real-mode spec"));
        let a0 = conv(&raw.a0)?;
        let a = raw.a.iter().map(conv).collect::<std::result::Result<_, _>>()?;
        let b = raw.b.iter().map(conv).collect::<std::result::Result<_, _>>()?;
        JacobiSpec::new(a0, a, b).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    Real(f64),
    Complex([f64; 2]),
}

impl Num {
    fn to_c64(self) -> Complex64 {
        match self {
            Num::Real(x) => Complex64::new(x, 0.0),
            Num::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawSpec {
    a0: Num,
    #[serde(default)]
    a: Vec<Num>,
    b: Vec<Num>,
    #[serde(default)]
    mode: Mode,
}

/// A spec in either mode, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnySpec {
    Real(JacobiSpec<f64>),
    Complex(JacobiSpec<Complex64>),
}

impl AnySpec {
    pub fn mode(&self) -> Mode {
        match self {
            AnySpec::Real(_) => Mode::Real,
            AnySpec::Complex(_) => Mode::Complex,
        }
    }

    pub fn as_real(&self) -> Result<&JacobiSpec<f64>> {
        match self {
            AnySpec::Real(s) => Ok(s),
            AnySpec::Complex(_) => Err(Error::RequiresRealMode),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnySpec::Real(s) => s.n(),
            AnySpec::Complex(s) => s.n(),
        }
    }
}

impl<'de> Deserialize<'de> for AnySpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(deserializer)?;
        match raw.mode {
            Mode::Real => {
                let conv = |x: &Num| match x {
                    Num::Real(v) => Ok(*v),
                    Num::Complex(_) => Err(D::Error::custom("complex entry in a real-mode spec")),
                };
                let a0 = conv(&raw.a0)?;
                let a = raw.a.iter().map(conv).collect::<std::result::Result<_, _>>()?;
                let b = raw.b.iter().map(conv).collect::<std::result::Result<_, _>>()?;
                JacobiSpec::new(a0, a, b).map(AnySpec::Real).map_err(D::Error::custom)
            }
            Mode::Complex => {
                let a0 = raw.a0.to_c64();
                let a = raw.a.iter().map(|x| x.to_c64()).collect();
                let b = raw.b.iter().map(|x| x.to_c64()).collect();
                JacobiSpec::new(a0, a, b)
                    .map(AnySpec::Complex)
                    .map_err(D::Error::custom)
            }
        }
    }
}
