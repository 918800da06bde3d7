//! Continuous-time systems `ü = −Au + f e₁`: spectral solution, response
//! function, the two representations of the connecting operator, coefficient
//! recovery from the response, and Krein–Stieltjes string experiments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::JacobiSpec;
use crate::spectral::{eig_spectral_data, spectral_measure};
use crate::tridiag::tridiagonal_eigen;

/// Relative eigenvalue threshold for the numerical rank of the connecting operator.
pub const RANK_RTOL: f64 = 1e-8;

/// Uniform nodes `tⱼ = jT/M`, `j = 0 … M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Invalid("T must be positive".into()));
        }
        if intervals == 0 {
            return Err(Error::Invalid("M must be positive".into()));
        }
        Ok(Self { horizon, intervals })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|j| self.node(j)).collect()
    }
}

/// `S(t, λ)`: `sin(√λ t)/√λ`, `t`, or `sinh(√−λ t)/√−λ`.
pub fn kernel_s(lambda: f64, t: f64) -> f64 {
    if lambda > 0.0 {
        let s = lambda.sqrt();
        (s * t).sin() / s
    } else if lambda < 0.0 {
        let s = (-lambda).sqrt();
        (s * t).sinh() / s
    } else {
        t
    }
}

/// `∂ₜS(t, λ)`.
pub fn kernel_s_dt(lambda: f64, t: f64) -> f64 {
    if lambda > 0.0 {
        (lambda.sqrt() * t).cos()
    } else if lambda < 0.0 {
        ((-lambda).sqrt() * t).cosh()
    } else {
        1.0
    }
}

/// Composite Simpson weights on `m` intervals of width `h`; a 3/8 panel closes odd counts.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    match m {
        0 => {}
        1 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
        }
        _ => {
            let even = if m % 2 == 0 { m } else { m - 3 };
            for p in (0..even).step_by(2) {
                w[p] += h / 3.0;
                w[p + 1] += 4.0 * h / 3.0;
                w[p + 2] += h / 3.0;
            }
            if even < m {
                for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[even + k] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `u(tⱼ) ∈ ℝᴺ`.
    pub u: Vec<Vec<f64>>,
    /// `u̇(tⱼ)`.
    pub v: Vec<Vec<f64>>,
}

/// `u(t) = Σₖ hₖ(t)φᵏ`, `hₖ(t) = (1/ωₖ)∫₀ᵗ f(τ)S(t − τ, λₖ)dτ`, with the control
/// sampled on the grid and the convolution done by composite Simpson.
pub fn solve_second_order(spec: &JacobiSpec<f64>, f: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
    let m = grid.intervals();
    if f.len() != m + 1 {
        return Err(Error::Dimension(format!(
            "control has {} samples, grid has {}",
            f.len(),
            m + 1
        )));
    }
    let sd = eig_spectral_data(spec)?;
    let n = spec.n();
    let h = grid.step();
    let mut u = Vec::with_capacity(m + 1);
    let mut v = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let w = simpson_weights(j, h);
        let mut uj = vec![0.0; n];
        let mut vj = vec![0.0; n];
        for (k, &lam) in sd.eigenvalues.iter().enumerate() {
            let (mut hk, mut dk) = (0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                let tau = grid.node(j - i);
                hk += wi * f[i] * kernel_s(lam, tau);
                dk += wi * f[i] * kernel_s_dt(lam, tau);
            }
            let inv = 1.0 / sd.omegas[k];
            for (p, phi) in sd.phi_vectors[k].iter().enumerate() {
                uj[p] += inv * hk * phi;
                vj[p] += inv * dk * phi;
            }
        }
        u.push(uj);
        v.push(vj);
    }
    Ok(Trajectory {
        times: grid.nodes(),
        u,
        v,
    })
}

/// `‖u̇‖² + (Au, u)`.
pub fn energy(spec: &JacobiSpec<f64>, u: &[f64], v: &[f64]) -> f64 {
    let a = spec.matrix();
    let uv = DVector::from_column_slice(u);
    v.iter().map(|x| x * x).sum::<f64>() + uv.dot(&(&a * &uv))
}

/// Samples of `r(t) = Σ(1/ωₖ)S(t, λₖ)` at `jh`, `j = 0 … 2M`, covering `[0, 2T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseFunctionSamples {
    pub step: f64,
    pub values: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn response_function(spec: &JacobiSpec<f64>, grid: &TimeGrid) -> Result<ResponseFunctionSamples> {
    let mu = spectral_measure(spec)?;
    let h = grid.step();
    let values = (0..=2 * grid.intervals())
        .map(|j| mu.integrate(|l| kernel_s(l, j as f64 * h)))
        .collect();
    Ok(ResponseFunctionSamples {
        step: h,
        values,
        eigenvalues: mu.eigenvalues(),
        weights: mu.weights(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Second order; used for the convergence study.
    Trapezoid,
    /// Sixth order, one 6-point Lagrange panel per interval.
    Lagrange6,
}

fn small_solve(v: DMatrix<f64>, rhs: DVector<f64>) -> Vec<f64> {
    v.lu()
        .solve(&rhs)
        .expect("Vandermonde on distinct integer nodes is invertible")
        .iter()
        .copied()
        .collect()
}

/// Weights of `∫_a^{a+1} p(x)dx` for the interpolant through nodes `0 … 5`.
fn lagrange6_panel(a: usize) -> Vec<f64> {
    let a = a as f64;
    let v = DMatrix::from_fn(6, 6, |p, j| (j as f64).powi(p as i32));
    let mom = DVector::from_fn(6, |p, _| {
        let q = (p + 1) as f64;
        ((a + 1.0).powf(q) - a.powf(q)) / q
    });
    small_solve(v, mom)
}

/// `Y(tⱼ) = ∫₀^{tⱼ} y`.
pub fn cumulative_integral(y: &[f64], h: f64, q: Quadrature) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n < 6 || q == Quadrature::Trapezoid {
        for m in 1..n {
            out[m] = out[m - 1] + 0.5 * h * (y[m - 1] + y[m]);
        }
        return out;
    }
    let panels: Vec<Vec<f64>> = (0..5).map(lagrange6_panel).collect();
    for m in 0..n - 1 {
        let j0 = m.saturating_sub(2).min(n - 6);
        let w = &panels[m - j0];
        let s: f64 = w.iter().zip(&y[j0..j0 + 6]).map(|(a, b)| a * b).sum();
        out[m + 1] = out[m] + h * s;
    }
    out
}

/// First derivative by 7-point stencils, one-sided near the ends.
pub fn derivative7(y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 7 {
        return Err(Error::TooShort {
            what: "samples for differentiation",
            needed: 7,
            got: n,
        });
    }
    let stencil = |shift: i64| -> Vec<f64> {
        let v = DMatrix::from_fn(7, 7, |p, j| ((j as i64 + shift) as f64).powi(p as i32));
        let mut e = DVector::zeros(7);
        e[1] = 1.0;
        small_solve(v, e)
    };
    let stencils: Vec<Vec<f64>> = (0..7).map(|k| stencil(-(k as i64))).collect();
    Ok((0..n)
        .map(|i| {
            let j0 = i.saturating_sub(3).min(n - 7);
            let c = &stencils[i - j0];
            c.iter().zip(&y[j0..j0 + 7]).map(|(a, b)| a * b).sum::<f64>() / h
        })
        .collect())
}

fn check_horizon(r: &ResponseFunctionSamples, grid: &TimeGrid) -> Result<()> {
    let need = 2 * grid.intervals() + 1;
    if r.values.len() < need {
        return Err(Error::TooShort {
            what: "response samples on [0, 2T]",
            needed: need,
            got: r.values.len(),
        });
    }
    if (r.step - grid.step()).abs() > 1e-12 * grid.step() {
        return Err(Error::Dimension("response step differs from the grid step".into()));
    }
    Ok(())
}

/// `K(t, s) = ½∫_{|t−s|}^{2T−s−t} r(τ)dτ` at the grid nodes.
pub fn connecting_dynamic(r: &ResponseFunctionSamples, grid: &TimeGrid, q: Quadrature) -> Result<DMatrix<f64>> {
    check_horizon(r, grid)?;
    let m = grid.intervals();
    let big = cumulative_integral(&r.values[..=2 * m], grid.step(), q);
    Ok(DMatrix::from_fn(m + 1, m + 1, |i, j| {
        0.5 * (big[2 * m - i - j] - big[i.abs_diff(j)])
    }))
}

/// `K(t, s) = Σ(1/ωₖ)S(T − t, λₖ)S(T − s, λₖ)`.
pub fn connecting_spectral(spec: &JacobiSpec<f64>, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let mu = spectral_measure(spec)?;
    let m = grid.intervals();
    let t = grid.horizon();
    let s: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|&(l, _)| (0..=m).map(|j| kernel_s(l, t - grid.node(j))).collect())
        .collect();
    Ok(DMatrix::from_fn(m + 1, m + 1, |i, j| {
        mu.atoms().iter().zip(&s).map(|(&(_, w), sk)| w * sk[i] * sk[j]).sum()
    }))
}

/// Eigenvalues of the Simpson-weighted symmetric form of a kernel, by decreasing magnitude,
/// and the numerical rank at [`RANK_RTOL`].
pub fn numerical_rank(k: &DMatrix<f64>, grid: &TimeGrid) -> Result<(usize, Vec<f64>)> {
    let (_, _, ev) = weighted_eigen(k, grid)?;
    let rank = ev.iter().filter(|e| e.abs() > RANK_RTOL * ev[0].abs()).count();
    Ok((rank, ev))
}

fn weighted_eigen(k: &DMatrix<f64>, grid: &TimeGrid) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>)> {
    let m = grid.intervals();
    if m % 2 != 0 {
        return Err(Error::Invalid("M must be even for Simpson weights".into()));
    }
    if k.nrows() != m + 1 || !k.is_square() {
        return Err(Error::Dimension("kernel does not match the grid".into()));
    }
    let w = simpson_weights(m, grid.step());
    let d: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let ks = DMatrix::from_fn(m + 1, m + 1, |i, j| d[i] * k[(i, j)] * d[j]);
    let eig = ks.symmetric_eigen();
    let mut order: Vec<usize> = (0..=m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let ev: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = DMatrix::from_fn(m + 1, m + 1, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((w, u, ev))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuousRecovery {
    pub spec: JacobiSpec<f64>,
    /// `f₁ … f_N` sampled on the grid.
    pub controls: Vec<Vec<f64>>,
    pub rank: usize,
    /// Leading eigenvalues of the weighted connecting operator.
    pub eigenvalues: Vec<f64>,
    /// `max |(C fᵢ, fⱼ) − δᵢⱼ|`.
    pub orthonormality_error: f64,
}

/// Coefficients of an `N × N` block from its response function on `[0, 2T]`.
///
/// `C f₁ = r(T − ·)` on the range of `C` (truncated eigen-decomposition at rank `N`),
/// then `bₙ = −((Cfₙ)″, fₙ)`, `aₙf_{n+1} = C⁻¹(−(Cfₙ)″ − bₙCfₙ − a_{n−1}Cf_{n−1})`
/// normalized by `(C aₙf_{n+1}, aₙf_{n+1}) = aₙ²`. `(Cf)″` uses the kernel
/// `½(r′(2T − t − s) − r′(|t − s|))` with `r′` from 7-point differences of the samples.
pub fn recover_matrix_continuous(r: &ResponseFunctionSamples, n: usize, grid: &TimeGrid) -> Result<ContinuousRecovery> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    check_horizon(r, grid)?;
    let m = grid.intervals();
    let k = connecting_dynamic(r, grid, Quadrature::Lagrange6)?;
    let (w, u, ev) = weighted_eigen(&k, grid)?;
    let rank = ev.iter().filter(|e| e.abs() > RANK_RTOL * ev[0].abs()).count();
    if rank != n {
        return Err(Error::RankMismatch {
            expected: n,
            detected: rank,
        });
    }
    let rp = derivative7(&r.values[..=2 * m], grid.step())?;
    let qk = DMatrix::from_fn(m + 1, m + 1, |i, j| 0.5 * (rp[2 * m - i - j] - rp[i.abs_diff(j)]));
    let d: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let ur = u.columns(0, n).into_owned();
    let c_inv = |g: &DVector<f64>| -> DVector<f64> {
        let y = DVector::from_fn(m + 1, |i, _| d[i] * g[i]);
        let mut c = ur.transpose() * y;
        for (i, ci) in c.iter_mut().enumerate() {
            *ci /= ev[i];
        }
        let x = &ur * c;
        DVector::from_fn(m + 1, |i, _| x[i] / d[i])
    };
    let weighted = |f: &DVector<f64>| DVector::from_fn(m + 1, |i, _| w[i] * f[i]);
    let apply_c = |f: &DVector<f64>| &k * weighted(f);
    let apply_q = |f: &DVector<f64>| &qk * weighted(f);
    let inner = |f: &DVector<f64>, g: &DVector<f64>| weighted(f).dot(g);

    let target = DVector::from_fn(m + 1, |i, _| r.values[m - i]);
    let mut fs = vec![c_inv(&target)];
    let (mut a, mut b) = (Vec::with_capacity(n - 1), Vec::with_capacity(n));
    for step in 0..n {
        let fnow = &fs[step];
        let cf = apply_c(fnow);
        let cfpp = apply_q(fnow);
        let bn = -inner(&cfpp, fnow);
        b.push(bn);
        if step + 1 == n {
            break;
        }
        let mut g = -cfpp - cf * bn;
        if step > 0 {
            g -= apply_c(&fs[step - 1]) * a[step - 1];
        }
        let hv = c_inv(&g);
        let a_sq = inner(&apply_c(&hv), &hv);
        if !(a_sq > 0.0) {
            return Err(Error::Conditioning(format!(
                "a_{}² = {a_sq:e} is not positive",
                step + 1
            )));
        }
        let an = a_sq.sqrt();
        a.push(an);
        fs.push(hv / an);
    }
    let mut orth = 0.0f64;
    for i in 0..n {
        let cfi = apply_c(&fs[i]);
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((inner(&cfi, &fs[j]) - target).abs());
        }
    }
    Ok(ContinuousRecovery {
        spec: JacobiSpec::new(1.0, a, b)?,
        controls: fs.iter().map(|f| f.iter().copied().collect()).collect(),
        rank,
        eigenvalues: ev.into_iter().take(n + 1).collect(),
        orthonormality_error: orth,
    })
}

/// Point masses `m₁ … m_{N−1}` joined by weightless segments `l₁ … l_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringSpec {
    pub masses: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl StringSpec {
    pub fn new(masses: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || lengths.len() != masses.len() + 1 {
            return Err(Error::InvalidSpec(
                "a string needs N − 1 ≥ 1 masses and N lengths".into(),
            ));
        }
        if masses.iter().chain(&lengths).any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidSpec("masses and lengths must be positive".into()));
        }
        Ok(Self { masses, lengths })
    }

    /// `lᵢ = mᵢ = 1/N`.
    pub fn uniform(n: usize) -> Result<Self> {
        let h = 1.0 / n as f64;
        Self::new(vec![h; n.saturating_sub(1)], vec![h; n])
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Positions of the masses.
    pub fn positions(&self) -> Vec<f64> {
        self.lengths[..self.masses.len()]
            .iter()
            .scan(0.0, |x, l| {
                *x += l;
                Some(*x)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StringSystem {
    /// Diagonal of `M`.
    pub mass: Vec<f64>,
    /// `A` with `aᵢ = 1/l_{i+1}` off the diagonal and `bᵢ = −(lᵢ + l_{i+1})/(lᵢl_{i+1})` on it.
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub stiffness: DMatrix<f64>,
    /// `M^{−1/2}(−A)M^{−1/2}` with off-diagonal signs made positive by a diagonal ±1 similarity.
    pub symmetrized: JacobiSpec<f64>,
    /// `u₁ = gain · Σ (1/ωₖ) S(·, λₖ) ∗ f` for the symmetrized measure: `1/(l₁m₁)`.
    pub gain: f64,
}

pub fn string_system(s: &StringSpec) -> Result<StringSystem> {
    let n1 = s.masses.len();
    let l = &s.lengths;
    let off: Vec<f64> = (1..n1).map(|i| 1.0 / l[i]).collect();
    let diag: Vec<f64> = (0..n1).map(|i| -(l[i] + l[i + 1]) / (l[i] * l[i + 1])).collect();
    let stiffness = DMatrix::from_fn(n1, n1, |i, j| {
        if i == j {
            diag[i]
        } else if i.abs_diff(j) == 1 {
            off[i.min(j)]
        } else {
            0.0
        }
    });
    let m = &s.masses;
    let a = (0..n1 - 1).map(|i| off[i] / (m[i] * m[i + 1]).sqrt()).collect();
    let b = (0..n1).map(|i| -diag[i] / m[i]).collect();
    Ok(StringSystem {
        mass: m.clone(),
        stiffness,
        symmetrized: JacobiSpec::new(1.0, a, b)?,
        gain: 1.0 / (l[0] * m[0]),
    })
}

/// Test functions for the distributional pairings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `exp(−t²/(2σ²))`.
    Gauss { sigma: f64 },
    /// `(1 − (t/w)²)³` on `|t| < w`.
    PolyBump { width: f64 },
}

impl TestFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TestFunction::Gauss { sigma } => (-t * t / (2.0 * sigma * sigma)).exp(),
            TestFunction::PolyBump { width } => {
                let x = t / width;
                if x.abs() < 1.0 {
                    (1.0 - x * x).powi(3)
                } else {
                    0.0
                }
            }
        }
    }

    /// `ψ′(0)`; both families are even.
    pub fn derivative_at_zero(&self) -> f64 {
        0.0
    }
}

/// Pairings are taken over `[0, STRING_HORIZON·l]`, before the echo from the far end returns at `2l`.
pub const STRING_HORIZON: f64 = 1.9;
/// The window `χ` is 1 below this fraction of the total length.
pub const WINDOW_START: f64 = 1.0;
const PAIRING_NODES: usize = 400_000;

fn flat(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff equal to 1 on `[0, a]` and 0 beyond `b`.
pub fn window(t: f64, a: f64, b: f64) -> f64 {
    let (p, q) = (flat(b - t), flat(t - a));
    if p + q == 0.0 {
        0.0
    } else {
        p / (p + q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringPairing {
    pub n: usize,
    /// `⟨r_N, ψ⟩`.
    pub response_pairing: f64,
    /// `|⟨r_N, ψ⟩ − ψ(0)|`.
    pub response_error: f64,
    /// `⟨r̃_N, ψ⟩ = (⟨r_N, ψ⟩ − ψ(0))/l₁`.
    pub corrected_pairing: f64,
    /// `|⟨r̃_N, ψ⟩ − ψ′(0)|`.
    pub corrected_error: f64,
    pub t_star: f64,
    /// `∫ u^N(x, t*)ψ(x)dx` with `u` linear between masses.
    pub field_pairing: f64,
    /// `|∫ u^N(x, t*)ψ(x)dx − ψ(t*)|`.
    pub field_error: f64,
}

/// Pairings of the impulse response of a string against `ψ`.
///
/// The control is an exact unit impulse at `t = 0`, so `u₀ = δ` and
/// `r_N = u₁ = gain · Σ(1/ωₖ)S(·, λₖ)` is smooth for `t > 0`.
pub fn string_pairings(s: &StringSpec, psi: TestFunction, t_star: f64) -> Result<StringPairing> {
    let l = s.total_length();
    if !(t_star > 0.0 && t_star < l) {
        return Err(Error::Invalid("t* must lie in (0, l)".into()));
    }
    let sys = string_system(s)?;
    let spec = &sys.symmetrized;
    let (lams, vecs) = tridiagonal_eigen(spec.b(), spec.a())?;
    let horizon = STRING_HORIZON * l;
    let h = horizon / PAIRING_NODES as f64;
    let wq = simpson_weights(PAIRING_NODES, h);
    let g: Vec<f64> = (0..=PAIRING_NODES)
        .map(|j| {
            let t = j as f64 * h;
            wq[j] * psi.eval(t) * window(t, WINDOW_START * l, horizon)
        })
        .collect();
    let mut pairing = 0.0;
    for (lam, v) in lams.iter().zip(&vecs) {
        let w = v[0] * v[0];
        let integral: f64 = g
            .iter()
            .enumerate()
            .map(|(j, gj)| gj * kernel_s(*lam, j as f64 * h))
            .sum();
        pairing += w * integral;
    }
    let response_pairing = sys.gain * pairing;
    let corrected_pairing = (response_pairing - psi.eval(0.0)) / s.lengths[0];

    // Field at t*: u = M^{−1/2} v with v driven through channel 1 with gain 1/(l₁√m₁).
    let m = &s.masses;
    let drive = 1.0 / (s.lengths[0] * m[0].sqrt());
    let sign: Vec<f64> = (0..m.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut field = vec![0.0; m.len()];
    for (lam, v) in lams.iter().zip(&vecs) {
        let amp = drive * v[0] * kernel_s(*lam, t_star);
        for i in 0..m.len() {
            // Undo the ±1 similarity that made the off-diagonals positive.
            field[i] += amp * sign[i] * v[i] / m[i].sqrt();
        }
    }
    let mut xs = vec![0.0];
    xs.extend(s.positions());
    xs.push(l);
    let mut us = vec![0.0];
    us.extend(&field);
    us.push(0.0);
    let mut field_pairing = 0.0;
    const SUB: usize = 16;
    for seg in 0..xs.len() - 1 {
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let hs = (x1 - x0) / SUB as f64;
        let ws = simpson_weights(SUB, hs);
        for (k, wk) in ws.iter().enumerate() {
            let theta = k as f64 / SUB as f64;
            let x = x0 + theta * (x1 - x0);
            let ux = us[seg] * (1.0 - theta) + us[seg + 1] * theta;
            field_pairing += wk * ux * psi.eval(x);
        }
    }
    Ok(StringPairing {
        n: s.lengths.len(),
        response_pairing,
        response_error: (response_pairing - psi.eval(0.0)).abs(),
        corrected_pairing,
        corrected_error: (corrected_pairing - psi.derivative_at_zero()).abs(),
        t_star,
        field_pairing,
        field_error: (field_pairing - psi.eval(t_star)).abs(),
    })
}

/// Samples of `r_N(t)` and `r̃_N(t) = (u₁ − u₀)/l₁` at the grid nodes with `t > 0`,
/// where the impulse `u₀ = δ` vanishes.
pub fn corrected_response(s: &StringSpec, grid: &TimeGrid) -> Result<Vec<(f64, f64, f64)>> {
    let sys = string_system(s)?;
    let mu = spectral_measure(&sys.symmetrized)?;
    Ok((1..=grid.intervals())
        .map(|j| {
            let t = grid.node(j);
            let r = sys.gain * mu.integrate(|l| kernel_s(l, t));
            (t, r, r / s.lengths[0])
        })
        .collect())
}
