//! Weyl functions by resolvent and by power series of the response in the
//! Joukowsky variable; finite de Branges spaces with their reproducing kernels.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dd::Dd;
use crate::discrete_wave::{
    connecting_from_response, connecting_rows, response_vector, response_vector_dd, Boundary, ResponseVector,
};
use crate::error::{Error, Result};
use crate::jacobi::JacobiSpec;
use crate::linalg::{ldlt, Rows};
use crate::moments::{hankel_pair, HankelOrdering};
use crate::scalar::{Complex64, Field};
use crate::spectral::{spectral_measure, MomentSequence};

/// Trailing window of `|rₜ|` used as the empirical coefficient bound.
pub const SERIES_WINDOW: usize = 8;
const MAX_SERIES_LEN: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylKind {
    Finite,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylEvaluation {
    pub lambda: Complex64,
    pub z: Complex64,
    pub m_resolvent: Option<Complex64>,
    pub m_series: Complex64,
    /// Number of series terms summed.
    pub truncation: usize,
    /// `None` when no coefficient bound is known.
    pub in_domain_d: Option<bool>,
}

/// Complex double-double, used where `C_T` is too ill-conditioned for `f64`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn new(z: Complex64) -> Self {
        Self {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    fn scale(self, x: Dd) -> Self {
        Self {
            re: self.re * x,
            im: self.im * x,
        }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// `𝒯₁(λ) … 𝒯_T(λ)` in double-double.
fn chebyshev_dd(t: usize, lambda: Complex64) -> Vec<Cdd> {
    let l = Cdd::new(lambda);
    let mut out = Vec::with_capacity(t);
    let (mut prev, mut cur) = (Cdd::default(), Cdd::new(Complex64::new(1.0, 0.0)));
    for _ in 0..t {
        out.push(cur);
        let next = l * cur - prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Function `F(λ) = Σₖ fₖ𝒯ₖ(λ)` given by its coefficients `f₁ … f_T`.
///
/// Coefficients are held in double-double; kernel coefficients are typically
/// large and cancel on evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeBrangesElement {
    coeffs: Vec<Cdd>,
}

impl DeBrangesElement {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self {
            coeffs: coeffs.into_iter().map(Cdd::new).collect(),
        }
    }

    /// Coefficients rounded to `f64`.
    pub fn coeffs(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.to_c64()).collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let u = chebyshev_dd(self.coeffs.len(), lambda);
        self.coeffs
            .iter()
            .zip(&u)
            .fold(Cdd::default(), |acc, (f, t)| acc + *f * *t)
            .to_c64()
    }
}

impl Serialize for DeBrangesElement {
    fn serialize<Z: Serializer>(&self, ser: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let mut st = ser.serialize_struct("DeBrangesElement", 1)?;
        st.serialize_field("coeffs", &self.coeffs())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for DeBrangesElement {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            coeffs: Vec<Complex64>,
        }
        Ok(Self::new(Raw::deserialize(de)?.coeffs))
    }
}

/// Root of `z + 1/z = λ` with `|z| ≤ 1`; on the cut `[−2, 2]` the root with `Im z ≤ 0`.
pub fn joukowsky_z(lambda: Complex64) -> Complex64 {
    let s = (lambda * lambda - 4.0).sqrt();
    let (p, q) = ((lambda + s) / 2.0, (lambda - s) / 2.0);
    // The larger root is free of cancellation; the other is its reciprocal.
    let big = if p.norm() >= q.norm() { p } else { q };
    if big.norm() == 0.0 {
        return Complex64::new(0.0, -1.0);
    }
    let z = 1.0 / big;
    if (big.norm() - 1.0).abs() <= 1e-15 && z.im > 0.0 {
        return big;
    }
    z
}

/// Membership in `D`: `Im λ > 0` and `λ` outside the half-ellipse traced by
/// `(R + 1/R)cos φ + i(R − 1/R)|sin φ|`, `R = 3B + 1`; equivalently `|z| < 1/R`.
pub fn in_domain_d(lambda: Complex64, bound: f64) -> bool {
    let r = 3.0 * bound + 1.0;
    lambda.im > 0.0 && joukowsky_z(lambda).norm() < 1.0 / r
}

/// `m(λ) = ((A − λ)⁻¹e₁, e₁)`.
pub fn weyl_resolvent(spec: &JacobiSpec<f64>, lambda: Complex64, kind: WeylKind) -> Result<Complex64> {
    match kind {
        WeylKind::Free => Ok(-joukowsky_z(lambda)),
        WeylKind::Finite => {
            let mu = spectral_measure(spec)?;
            let scale = spec.coefficient_bound().max(1.0);
            let mut m = Complex64::new(0.0, 0.0);
            for &(l, w) in mu.atoms() {
                let d = Complex64::new(l, 0.0) - lambda;
                if d.norm() <= 1e-14 * scale {
                    return Err(Error::Pole(l));
                }
                m += w / d;
            }
            Ok(m)
        }
    }
}

/// Partial sums `−Σ z^{t+1} rₜ / r₀`, stopped once `|z|^{t+1}` times the trailing
/// maximum of `|rₜ|` falls below `tol`.
pub fn weyl_series(r: &ResponseVector<f64>, lambda: Complex64, tol: f64) -> Result<WeylEvaluation> {
    let z = joukowsky_z(lambda);
    if z.norm() >= 1.0 {
        return Err(Error::NotConvergent(z.norm()));
    }
    let r = r.as_slice();
    let r0 = r[0];
    let mut m = Complex64::new(0.0, 0.0);
    let mut zp = z;
    for (t, &rt) in r.iter().enumerate() {
        m -= zp * (rt / r0);
        let lo = (t + 1).saturating_sub(SERIES_WINDOW);
        let recent = r[lo..=t].iter().map(|x| (x / r0).abs()).fold(0.0, f64::max);
        zp *= z;
        if zp.norm() * recent.max(1.0) < tol && t + 1 >= SERIES_WINDOW.min(r.len()) {
            return Ok(WeylEvaluation {
                lambda,
                z,
                m_resolvent: None,
                m_series: m,
                truncation: t + 1,
                in_domain_d: None,
            });
        }
    }
    Err(Error::TooShort {
        what: "response vector for the requested tolerance",
        needed: r.len() + 1,
        got: r.len(),
    })
}

/// Series from the Dirichlet response of a finite block, extended until the
/// tolerance is met, together with the resolvent value and the domain flag.
pub fn weyl_evaluate(spec: &JacobiSpec<f64>, lambda: Complex64, tol: f64) -> Result<WeylEvaluation> {
    let z = joukowsky_z(lambda);
    if z.norm() >= 1.0 {
        return Err(Error::NotConvergent(z.norm()));
    }
    let mut len = 64;
    let mut ev = loop {
        let r = response_vector(spec, len, Boundary::Dirichlet)?;
        match weyl_series(&r, lambda, tol) {
            Ok(ev) => break ev,
            Err(Error::TooShort { .. }) if len < MAX_SERIES_LEN => len *= 2,
            Err(e) => return Err(e),
        }
    };
    ev.m_resolvent = Some(weyl_resolvent(spec, lambda, WeylKind::Finite)?);
    ev.in_domain_d = Some(in_domain_d(lambda, spec.coefficient_bound()));
    Ok(ev)
}

/// `C_T = J C^T J` held in double-double.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectingMatrix {
    rows: Rows<Dd>,
}

impl ConnectingMatrix {
    pub fn from_matrix(c_t: &DMatrix<f64>) -> Result<Self> {
        if c_t.nrows() == 0 || !c_t.is_square() {
            return Err(Error::Dimension("C_T must be square and nonempty".into()));
        }
        let rows = (0..c_t.nrows())
            .map(|i| (0..c_t.ncols()).map(|j| Dd::from(c_t[(i, j)])).collect())
            .collect();
        Ok(Self { rows })
    }

    pub fn from_response(r: &ResponseVector<f64>, t: usize) -> Result<Self> {
        let rd: Vec<Dd> = r.as_slice().iter().map(|&x| Dd::from(x)).collect();
        Self::from_response_dd(&rd, t)
    }

    pub fn from_response_dd(r: &[Dd], t: usize) -> Result<Self> {
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
        let c = connecting_rows(r, t);
        let rows = (0..t)
            .map(|i| (0..t).map(|j| c[t - 1 - i][t - 1 - j]).collect())
            .collect();
        Ok(Self { rows })
    }

    /// From a response simulated in double-double.
    pub fn from_spec(spec: &JacobiSpec<f64>, t: usize) -> Result<Self> {
        let r = response_vector_dd(spec, 2 * t - 1, Boundary::SemiInfinite)?;
        Self::from_response_dd(&r, t)
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let t = self.order();
        DMatrix::from_fn(t, t, |i, j| self.rows[i][j].to_f64())
    }

    fn apply(&self, f: &[Cdd]) -> Vec<Cdd> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(f).fold(Cdd::default(), |acc, (c, x)| acc + x.scale(*c)))
            .collect()
    }
}

/// `j_T^z` from `C_T j = (𝒯₁(z), …, 𝒯_T(z))*`.
pub fn debranges_kernel(c_t: &ConnectingMatrix, z: Complex64) -> Result<DeBrangesElement> {
    let t = c_t.order();
    let fac = ldlt(&c_t.rows, Dd::singular_rtol())
        .map_err(|e| Error::Singular(format!("C_T: leading minor of order {} vanishes", e.order)))?;
    let rhs: Vec<Cdd> = chebyshev_dd(t, z).into_iter().map(Cdd::conj).collect();
    let re = fac.solve(&rhs.iter().map(|c| c.re).collect::<Vec<_>>());
    let im = fac.solve(&rhs.iter().map(|c| c.im).collect::<Vec<_>>());
    Ok(DeBrangesElement {
        coeffs: re.into_iter().zip(im).map(|(re, im)| Cdd { re, im }).collect(),
    })
}

/// `[F, G] = (C_T f, g)`, conjugate-linear in the first slot.
pub fn debranges_inner(c_t: &ConnectingMatrix, f: &DeBrangesElement, g: &DeBrangesElement) -> Result<Complex64> {
    let t = c_t.order();
    if f.len() != t || g.len() != t {
        return Err(Error::Dimension(format!(
            "C_T has order {t}, elements have {} and {} coefficients",
            f.len(),
            g.len()
        )));
    }
    Ok(c_t
        .apply(&f.coeffs)
        .iter()
        .zip(&g.coeffs)
        .fold(Cdd::default(), |acc, (a, b)| acc + a.conj() * *b)
        .to_c64())
}

/// Kernel coefficients in the monomial basis from `S_T f = (1, z, …, z^{T−1})*`.
pub fn debranges_kernel_hankel(s: &MomentSequence, z: Complex64, t: usize) -> Result<Vec<Complex64>> {
    let s_t = hankel_pair(s, t, HankelOrdering::Classical)?.s0;
    let mut p = Complex64::new(1.0, 0.0);
    let rhs = DVector::from_fn(t, |_, _| {
        let v = p.conj();
        p *= z;
        v
    });
    let sol = s_t
        .map(|x| Complex64::new(x, 0.0))
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("S_T is not invertible".into()))?;
    Ok(sol.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaSequences {
    /// Smallest eigenvalue of `C_N`, `N = 1 … N_max`.
    pub beta_lower: Vec<f64>,
    /// Largest eigenvalue of `C_N`.
    pub beta_upper: Vec<f64>,
}

/// Extreme eigenvalues of `C_N = {Σ_{k<max(i,j)} r_{|i−j|+2k}}`.
pub fn beta_sequences(r: &ResponseVector<f64>, n_max: usize) -> Result<BetaSequences> {
    if n_max == 0 {
        return Err(Error::Invalid("N_max must be positive".into()));
    }
    let r0 = r.a0();
    let mut out = BetaSequences {
        beta_lower: Vec::with_capacity(n_max),
        beta_upper: Vec::with_capacity(n_max),
    };
    for n in 1..=n_max {
        let c = connecting_from_response(r, n)? / r0;
        let eig = c.symmetric_eigenvalues();
        out.beta_lower.push(eig.min());
        out.beta_upper.push(eig.max());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{chebyshev_table, phi_eval};
    use crate::moments::moments_to_response;
    use crate::random::{random_real_spec, random_real_spec_in, rng};
    use crate::spectral::moments_of_measure;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_spec_bounded(n: usize, seed: u64) -> JacobiSpec<f64> {
        random_real_spec_in(n, (0.5, 2.0), (-2.0, 2.0), &mut rng(seed))
    }

    #[test]
    fn joukowsky_examples() {
        assert!((joukowsky_z(c(2.5, 0.0)) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((joukowsky_z(c(2.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-7);
        let z = joukowsky_z(c(0.0, 3.0));
        assert!(z.norm() < 1.0 && z.im < 0.0);
        let z = joukowsky_z(c(0.7, 0.0));
        assert!((z.norm() - 1.0).abs() < 1e-14 && z.im < 0.0);
    }

    #[test]
    fn free_weyl_at_five_halves() {
        let m = weyl_resolvent(&JacobiSpec::free(1), c(2.5, 0.0), WeylKind::Free).unwrap();
        assert_eq!(m, c(-0.5, 0.0));
        let r = ResponseVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let ev = weyl_series(&r, c(2.5, 0.0), 1e-2).unwrap();
        assert_eq!(ev.m_series, c(-0.5, 0.0));
    }

    #[test]
    fn resolvent_small_blocks() {
        let two = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap();
        for &l in &[c(0.3, 0.4), c(3.0, 0.0), c(-1.5, 2.0)] {
            let m = weyl_resolvent(&two, l, WeylKind::Finite).unwrap();
            assert!((m - (-l / (l * l - 1.0))).norm() < 1e-14);
        }
        let one = JacobiSpec::new(1.0, vec![], vec![0.4]).unwrap();
        let l = c(1.0, 1.0);
        let m = weyl_resolvent(&one, l, WeylKind::Finite).unwrap();
        assert!((m - 1.0 / (0.4 - l)).norm() < 1e-15);
        assert_eq!(
            weyl_resolvent(&one, c(0.4, 0.0), WeylKind::Finite),
            Err(Error::Pole(0.4))
        );
    }

    #[test]
    fn series_matches_resolvent_off_domain_point() {
        let two = JacobiSpec::new(1.0, vec![1.0], vec![0.0, 0.0]).unwrap();
        let ev = weyl_evaluate(&two, c(0.0, 4.0), 1e-12).unwrap();
        assert!((ev.m_series - ev.m_resolvent.unwrap()).norm() < 1e-8);
    }

    #[test]
    fn series_rejects_cut() {
        let r = ResponseVector::new(vec![1.0; 4]).unwrap();
        assert!(matches!(
            weyl_series(&r, c(1.0, 0.0), 1e-8),
            Err(Error::NotConvergent(_))
        ));
    }

    #[test]
    fn series_independent_of_a0() {
        let spec = random_real_spec(5, 4).with_a0(2.5).unwrap();
        let ev = weyl_evaluate(&spec, c(1.0, 12.0), 1e-13).unwrap();
        assert!((ev.m_series - ev.m_resolvent.unwrap()).norm() < 1e-10);
    }

    #[test]
    fn domain_flag() {
        assert!(in_domain_d(c(0.0, 10.0), 1.0));
        assert!(!in_domain_d(c(0.0, 1.0), 1.0));
        assert!(!in_domain_d(c(10.0, -1.0), 1.0));
        // Boundary point of the ellipse at φ = 3π/2.
        let r = 4.0;
        let top = c(0.0, r - 1.0 / r);
        assert!(!in_domain_d(top * (1.0 - 1e-9), 1.0));
        assert!(in_domain_d(top * (1.0 + 1e-9), 1.0));
    }

    fn kernel_data(spec: &JacobiSpec<f64>) -> ConnectingMatrix {
        ConnectingMatrix::from_spec(spec, spec.n()).unwrap()
    }

    #[test]
    fn free_kernel_is_chebyshev_sum() {
        let spec = JacobiSpec::free(5);
        let ct = kernel_data(&spec);
        assert!((ct.to_dmatrix() - DMatrix::identity(5, 5)).amax() < 1e-14);
        let z = c(0.8, 0.0);
        let j = debranges_kernel(&ct, z).unwrap();
        let uz = chebyshev_table(5, z);
        for (k, jk) in j.coeffs().iter().enumerate() {
            assert!((jk - uz[k + 1]).norm() < 1e-14);
        }
        let one = DeBrangesElement::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((debranges_inner(&ct, &one, &one).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn scalar_kernel() {
        let ct = ConnectingMatrix::from_matrix(&DMatrix::from_element(1, 1, 1.7)).unwrap();
        let z = c(0.3, 0.2);
        let j = debranges_kernel(&ct, z).unwrap();
        assert!((j.eval(c(5.0, 1.0)) - 1.0 / 1.7).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let ct = ConnectingMatrix::from_matrix(&DMatrix::identity(3, 3)).unwrap();
        let f = DeBrangesElement::new(vec![c(1.0, 0.0); 2]);
        assert!(matches!(debranges_inner(&ct, &f, &f), Err(Error::Dimension(_))));
    }

    #[test]
    fn hankel_kernel_agrees() {
        let spec = random_real_spec(6, 8);
        let mu = spectral_measure(&spec).unwrap();
        let s = moments_of_measure(&mu, 10);
        let r = moments_to_response(&s);
        let ct = ConnectingMatrix::from_response(&r, 6).unwrap();
        let z = c(0.4, -0.9);
        let j = debranges_kernel(&ct, z).unwrap();
        let f = debranges_kernel_hankel(&s, z, 6).unwrap();
        for &l in &[c(0.2, 0.0), c(-1.0, 0.5), c(1.3, -0.2)] {
            let mono: Complex64 = f.iter().enumerate().map(|(k, fk)| fk * l.powu(k as u32)).sum();
            assert!((mono - j.eval(l)).norm() < 1e-8 * (1.0 + mono.norm()));
        }
    }

    #[test]
    fn beta_examples() {
        let free = response_vector(&JacobiSpec::free(20), 39, Boundary::SemiInfinite).unwrap();
        let b = beta_sequences(&free, 20).unwrap();
        assert!(b
            .beta_lower
            .iter()
            .chain(&b.beta_upper)
            .all(|x| (x - 1.0).abs() < 1e-12));
        let r = ResponseVector::new(vec![0.7]).unwrap();
        let b = beta_sequences(&r, 1).unwrap();
        assert_eq!((b.beta_lower[0], b.beta_upper[0]), (0.7, 0.7));
    }

    #[test]
    fn beta_sequences_interlace() {
        let spec = random_real_spec(12, 6);
        let r = response_vector(&spec, 23, Boundary::SemiInfinite).unwrap();
        let b = beta_sequences(&r, 12).unwrap();
        for n in 1..12 {
            let tol = 1e-13 * b.beta_upper[n];
            assert!(b.beta_upper[n] >= b.beta_upper[n - 1] - tol);
            assert!(b.beta_lower[n] <= b.beta_lower[n - 1] + tol);
        }
    }

    #[test]
    fn beta_upper_bounded_when_spectrum_in_cut() {
        // aₖ ≤ 1 and bₖ = 0 keep the spectrum inside [−2, 2].
        let spec = random_real_spec_in(40, (0.5, 1.0), (0.0, 0.0), &mut rng(1));
        let r = response_vector(&spec, 79, Boundary::SemiInfinite).unwrap();
        let b = beta_sequences(&r, 40).unwrap();
        assert!(b.beta_upper.iter().all(|&x| x < 10.0));
    }

    proptest! {
        #[test]
        fn joukowsky_inverse(re in -10.0f64..10.0, im in 1e-3f64..10.0) {
            let l = c(re, im);
            let z = joukowsky_z(l);
            prop_assert!(z.norm() < 1.0 && z.im < 0.0);
            prop_assert!((z + 1.0 / z - l).norm() <= 1e-12 * (1.0 + l.norm()));
        }

        #[test]
        fn series_agrees_in_domain(n in 1usize..=8, seed in 0u64..1000, x in -1.0f64..1.0, y in 0.0f64..1.0) {
            let spec = real_spec_bounded(n, seed);
            let b = spec.coefficient_bound();
            let rr = 3.0 * b + 1.0;
            let l = c(x * (rr + 1.0 / rr) * 1.5, (rr - 1.0 / rr) * (1.2 + y));
            prop_assert!(in_domain_d(l, b));
            let tol = 1e-9;
            let ev = weyl_evaluate(&spec, l, tol).unwrap();
            prop_assert!((ev.m_series - ev.m_resolvent.unwrap()).norm() <= 10.0 * tol);
        }

        #[test]
        fn reproducing_property(t in 1usize..=15, seed in 0u64..10_000) {
            let spec = random_real_spec(t, seed);
            let ct = kernel_data(&spec);
            let mut g = rng(seed ^ 0xdead);
            let z = c(g.gen_range(-2.5..2.5), g.gen_range(-1.0..1.0));
            let f = DeBrangesElement::new((0..t).map(|_| c(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))).collect());
            let j = debranges_kernel(&ct, z).unwrap();
            let lhs = debranges_inner(&ct, &j, &f).unwrap();
            prop_assert!((lhs - f.eval(z)).norm() <= 1e-10 * (1.0 + f.eval(z).norm()));
        }

        #[test]
        fn kernel_is_phi_sum_and_symmetric(t in 1usize..=15, seed in 0u64..10_000) {
            let spec = random_real_spec(t, seed);
            let ct = kernel_data(&spec);
            let mut g = rng(seed ^ 0xbeef);
            let z = c(g.gen_range(-2.0..2.0), g.gen_range(-0.5..0.5));
            let l = c(g.gen_range(-2.0..2.0), g.gen_range(-0.5..0.5));
            let jz = debranges_kernel(&ct, z).unwrap().eval(l);
            let cs = spec.to_complex();
            let pz = phi_eval(&cs, z, t).unwrap();
            let pl = phi_eval(&cs, l, t).unwrap();
            let sum: Complex64 = pz.iter().zip(&pl).map(|(a, b)| a.conj() * b).sum();
            let scale = 1.0 + sum.norm();
            prop_assert!((jz - sum).norm() <= 1e-9 * scale, "{} vs {}", jz, sum);
            let jl = debranges_kernel(&ct, l).unwrap().eval(z);
            prop_assert!((jz - jl.conj()).norm() <= 1e-10 * scale);
        }

        #[test]
        fn inner_product_is_measure_quadrature(t in 1usize..=12, seed in 0u64..10_000) {
            let spec = random_real_spec(t, seed);
            let ct = kernel_data(&spec);
            let mu = spectral_measure(&spec).unwrap();
            let mut g = rng(seed);
            let mut draw = || DeBrangesElement::new((0..t).map(|_| c(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))).collect());
            let (f, h) = (draw(), draw());
            let lhs = debranges_inner(&ct, &f, &h).unwrap();
            let rhs: Complex64 = mu.atoms().iter()
                .map(|&(l, w)| w * f.eval(c(l, 0.0)).conj() * h.eval(c(l, 0.0)))
                .sum();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()), "{} vs {}", lhs, rhs);
        }
    }
}
