//! Periodic pseudospectral fields on a torus.
//!
//! Spectra are normalized so that `û_k = (1/n) Σ_j u_j e^{-i k x_j}`; with this
//! convention `‖u‖²_{L²} = L Σ_k |û_k|²` where `L` is the torus length.
//! Array slot `j` holds the integer mode `j` for `j < n/2` and `j - n` otherwise,
//! so the Nyquist slot carries mode `-n/2`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.1.get(&(n, inverse)) {
            return f.clone();
        }
        let f = if inverse { p.0.plan_fft_inverse(n) } else { p.0.plan_fft_forward(n) };
        p.1.insert((n, inverse), f.clone());
        f
    })
}

/// In-place forward transform with the `1/n` normalization.
pub fn fft_forward(data: &mut [C64]) {
    let n = data.len();
    plan(n, false).process(data);
    let s = 1.0 / n as f64;
    for v in data.iter_mut() {
        *v *= s;
    }
}

/// In-place inverse transform (no normalization).
pub fn fft_inverse(data: &mut [C64]) {
    plan(data.len(), true).process(data);
}

pub fn forward_real(u: &[f64]) -> Vec<C64> {
    let mut buf: Vec<C64> = u.iter().map(|&x| C64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    buf
}

pub fn inverse_real(uh: &[C64]) -> Vec<f64> {
    let mut buf = uh.to_vec();
    fft_inverse(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Integer mode carried by slot `j` of an `n`-point spectrum.
#[inline]
pub fn mode_of(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Uniform periodic grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_length(n, 2.0 * PI, 2.0 / 3.0)
    }

    pub fn with_length(n: usize, length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("grid size {n} must be a power of two >= 16")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Domain(format!("torus length {length} must be positive")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::Domain(format!("dealias fraction {dealias_fraction} outside (0, 1]")));
        }
        Ok(GridSpec { n, length, dealias_fraction })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber unit `2π/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn mode(&self, j: usize) -> i64 {
        mode_of(j, self.n)
    }

    /// Frequency of slot `j`.
    pub fn xi(&self, j: usize) -> f64 {
        self.mode(j) as f64 * self.k0()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.xi(j)).collect()
    }

    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * self.k0()
    }

    pub fn slot(&self, mode: i64) -> Option<usize> {
        let h = (self.n / 2) as i64;
        if mode >= h || mode < -h {
            return None;
        }
        Some(if mode >= 0 { mode as usize } else { (mode + self.n as i64) as usize })
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n || (self.length - other.length).abs() > 1e-12 * self.length {
            return Err(Error::GridMismatch(format!(
                "n = {} / {}, L = {} / {}",
                self.n, other.n, self.length, other.length
            )));
        }
        Ok(())
    }

    /// Smallest grid of the same length with at least `n` points.
    pub fn refined(&self, n: usize) -> GridSpec {
        GridSpec { n: n.next_power_of_two().max(16), ..*self }
    }
}

/// Common interface of real and complex grid functions.
pub trait Field: Clone + Send + Sync {
    fn grid(&self) -> &GridSpec;
    fn spectrum(&self) -> &[C64];
    /// Builds a field from a spectrum. Real fields keep the real part.
    fn from_spectrum(grid: GridSpec, spectrum: Vec<C64>) -> Self;
    fn abs_samples(&self) -> Vec<f64>;
    fn zero_like(&self) -> Self {
        Self::from_spectrum(*self.grid(), vec![C64::new(0.0, 0.0); self.grid().n])
    }
    fn map_spectrum(&self, f: impl Fn(usize, C64) -> C64) -> Self {
        let s: Vec<C64> = self.spectrum().iter().enumerate().map(|(j, &c)| f(j, c)).collect();
        Self::from_spectrum(*self.grid(), s)
    }
}

/// Real periodic grid function with a lazily cached spectrum.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: GridSpec,
    samples: Vec<f64>,
    spectrum: OnceLock<Vec<C64>>,
}

impl RealField {
    pub fn new(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} samples for n = {}", samples.len(), grid.n)));
        }
        Ok(RealField { grid, samples, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        RealField { grid, samples: vec![0.0; grid.n], spectrum: OnceLock::new() }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        RealField { grid, samples: grid.xs().into_iter().map(f).collect(), spectrum: OnceLock::new() }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::new(self.grid, self.samples.iter().map(|&x| C64::new(x, 0.0)).collect())
            .expect("same length")
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.grid.n as f64
    }

    pub fn scale(&self, s: f64) -> RealField {
        RealField::new(self.grid, self.samples.iter().map(|x| x * s).collect()).unwrap()
    }

    pub fn add(&self, o: &RealField) -> Result<RealField> {
        self.grid.check_same(&o.grid)?;
        Ok(RealField::new(self.grid, self.samples.iter().zip(&o.samples).map(|(a, b)| a + b).collect())?)
    }

    pub fn sub(&self, o: &RealField) -> Result<RealField> {
        self.grid.check_same(&o.grid)?;
        Ok(RealField::new(self.grid, self.samples.iter().zip(&o.samples).map(|(a, b)| a - b).collect())?)
    }

    /// Pointwise product on the grid, without projection.
    pub fn mul(&self, o: &RealField) -> Result<RealField> {
        self.grid.check_same(&o.grid)?;
        Ok(RealField::new(self.grid, self.samples.iter().zip(&o.samples).map(|(a, b)| a * b).collect())?)
    }

    /// `∂_x^order u`, spectral. Odd orders drop the Nyquist mode.
    pub fn deriv(&self, order: u32) -> RealField {
        let g = self.grid;
        self.map_spectrum(|j, c| {
            if order % 2 == 1 && j == g.n / 2 {
                return C64::new(0.0, 0.0);
            }
            c * (I * g.xi(j)).powu(order)
        })
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|x| x * x).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Shift by `s`: `u(x - s)`, exact for trigonometric polynomials.
    pub fn translate(&self, s: f64) -> RealField {
        let g = self.grid;
        self.map_spectrum(|j, c| {
            if j == g.n / 2 {
                c * (g.xi(j) * s).cos()
            } else {
                c * (-I * g.xi(j) * s).exp()
            }
        })
    }

    /// Spectral interpolation onto a finer grid of the same length.
    pub fn resample(&self, n: usize) -> RealField {
        let g2 = GridSpec { n, ..self.grid };
        RealField::from_spectrum(g2, resample_spectrum(self.spectrum(), n))
    }
}

impl Field for RealField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn spectrum(&self) -> &[C64] {
        self.spectrum.get_or_init(|| forward_real(&self.samples))
    }

    fn from_spectrum(grid: GridSpec, spectrum: Vec<C64>) -> Self {
        let n = grid.n;
        let sym: Vec<C64> = (0..n).map(|j| 0.5 * (spectrum[j] + spectrum[(n - j) % n].conj())).collect();
        let samples = inverse_real(&sym);
        let cell = OnceLock::new();
        let _ = cell.set(sym);
        RealField { grid, samples, spectrum: cell }
    }

    fn abs_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.abs()).collect()
    }
}

/// Complex periodic grid function with a lazily cached spectrum.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: GridSpec,
    samples: Vec<C64>,
    spectrum: OnceLock<Vec<C64>>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} samples for n = {}", samples.len(), grid.n)));
        }
        Ok(ComplexField { grid, samples, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ComplexField { grid, samples: vec![C64::new(0.0, 0.0); grid.n], spectrum: OnceLock::new() }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Self {
        ComplexField { grid, samples: grid.xs().into_iter().map(f).collect(), spectrum: OnceLock::new() }
    }

    /// Single Fourier mode `e^{i m x}` (integer mode index).
    pub fn mode(grid: GridSpec, m: i64) -> Self {
        let k = m as f64 * grid.k0();
        Self::from_fn(grid, |x| (I * k * x).exp())
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn re(&self) -> RealField {
        RealField::new(self.grid, self.samples.iter().map(|z| z.re).collect()).unwrap()
    }

    pub fn im(&self) -> RealField {
        RealField::new(self.grid, self.samples.iter().map(|z| z.im).collect()).unwrap()
    }

    pub fn scale(&self, s: C64) -> ComplexField {
        ComplexField::new(self.grid, self.samples.iter().map(|x| x * s).collect()).unwrap()
    }

    pub fn add(&self, o: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&o.grid)?;
        ComplexField::new(self.grid, self.samples.iter().zip(&o.samples).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&o.grid)?;
        ComplexField::new(self.grid, self.samples.iter().zip(&o.samples).map(|(a, b)| a - b).collect())
    }

    pub fn deriv(&self, order: u32) -> ComplexField {
        let g = self.grid;
        self.map_spectrum(|j, c| c * (I * g.xi(j)).powu(order))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn resample(&self, n: usize) -> ComplexField {
        let g2 = GridSpec { n, ..self.grid };
        ComplexField::from_spectrum(g2, resample_spectrum(self.spectrum(), n))
    }
}

impl Field for ComplexField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn spectrum(&self) -> &[C64] {
        self.spectrum.get_or_init(|| {
            let mut b = self.samples.clone();
            fft_forward(&mut b);
            b
        })
    }

    fn from_spectrum(grid: GridSpec, spectrum: Vec<C64>) -> Self {
        let mut samples = spectrum.clone();
        fft_inverse(&mut samples);
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        ComplexField { grid, samples, spectrum: cell }
    }

    fn abs_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }
}

/// Zero-pads or truncates a spectrum to `m` slots, splitting or folding the
/// Nyquist mode so that real signals stay real.
pub fn resample_spectrum(s: &[C64], m: usize) -> Vec<C64> {
    let n = s.len();
    let mut out = vec![C64::new(0.0, 0.0); m];
    if m >= n {
        for j in 0..n {
            let k = mode_of(j, n);
            if j == n / 2 && m > n {
                let half = s[j] * 0.5;
                out[(n / 2) as usize] += half;
                out[m - n / 2] += half;
                continue;
            }
            let slot = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            out[slot] += s[j];
        }
    } else {
        for j in 0..n {
            let k = mode_of(j, n);
            let h = (m / 2) as i64;
            if k.abs() < h {
                let slot = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
                out[slot] += s[j];
            } else if k.abs() == h {
                out[m / 2] += s[j];
            }
        }
    }
    out
}

/// Applies the multiplier `m(ξ)` to the spectrum of `u`.
///
/// On real fields the Nyquist slot uses `Re ½(m(ξ_N) + m(-ξ_N))` and the result
/// keeps the real part, which is exact when `m(-ξ) = conj m(ξ)`.
pub fn fourier_multiplier<F: Field>(u: &F, m: impl Fn(f64) -> C64) -> Result<F> {
    let g = *u.grid();
    let mut out = Vec::with_capacity(g.n);
    for (j, &c) in u.spectrum().iter().enumerate() {
        let xi = g.xi(j);
        let v = if j == g.n / 2 {
            let a = m(xi);
            let b = m(-xi);
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::NonFinite { xi });
            }
            if !(b.re.is_finite() && b.im.is_finite()) {
                return Err(Error::NonFinite { xi: -xi });
            }
            C64::new(0.5 * (a.re + b.re), 0.5 * (a.im - b.im))
        } else {
            let a = m(xi);
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::NonFinite { xi });
            }
            a
        };
        out.push(v * c);
    }
    Ok(F::from_spectrum(g, out))
}

/// Real-valued even multiplier; the common case for `|D|`, `⟨D⟩^σ`, LP cutoffs.
pub fn real_multiplier<F: Field>(u: &F, m: impl Fn(f64) -> f64) -> F {
    let g = *u.grid();
    u.map_spectrum(|j, c| {
        let xi = g.xi(j);
        if j == g.n / 2 {
            c * 0.5 * (m(xi) + m(-xi))
        } else {
            c * m(xi)
        }
    })
}

// ---------------------------------------------------------------------------
// Littlewood–Paley ladder

fn bump_edge(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `|r| ≤ 1`, 0 on `|r| ≥ 2`.
pub fn phi(r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = bump_edge(2.0 - r);
        let b = bump_edge(r - 1.0);
        a / (a + b)
    }
}

/// Dyadic block symbol `ψ_κ(ξ) = φ(ξ/κ) − φ(2ξ/κ)`, supported in `κ/2 ≤ |ξ| ≤ 2κ`.
pub fn psi_block(xi: f64, kappa: f64) -> f64 {
    phi(xi / kappa) - phi(2.0 * xi / kappa)
}

/// `S_{≤κ}` symbol; `κ = 0` gives the base block `φ(2ξ)`.
pub fn low_symbol(xi: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        phi(2.0 * xi)
    } else {
        phi(xi / kappa)
    }
}

/// Widened block, equal to 1 on `κ/2 ≤ |ξ| ≤ 2κ`.
pub fn widened_symbol(xi: f64, kappa: f64) -> f64 {
    phi(xi / (2.0 * kappa)) - phi(4.0 * xi / kappa)
}

/// `S_{≥κ}` symbol: `1 − φ(2ξ/κ)`, equal to 1 on `|ξ| ≥ κ`.
pub fn high_symbol(xi: f64, kappa: f64) -> f64 {
    1.0 - phi(2.0 * xi / kappa)
}

pub fn is_dyadic(kappa: f64) -> bool {
    kappa == 0.0 || (kappa >= 1.0 && kappa.log2().fract() == 0.0)
}

fn check_block(g: &GridSpec, kappa: f64) -> Result<()> {
    if !is_dyadic(kappa) {
        return Err(Error::Domain(format!("block index {kappa} is not dyadic")));
    }
    if kappa > g.k_max() {
        return Err(Error::Domain(format!("block {kappa} above Nyquist {}", g.k_max())));
    }
    Ok(())
}

/// Dyadic blocks `1, 2, 4, …` up to the Nyquist frequency, tabulated on a grid.
#[derive(Clone, Debug)]
pub struct LpLadder {
    pub grid: GridSpec,
    pub kappas: Vec<f64>,
    pub base: Vec<f64>,
    pub blocks: Vec<Vec<f64>>,
}

impl LpLadder {
    pub fn new(grid: GridSpec) -> Self {
        let mut kappas = Vec::new();
        let mut k = 1.0;
        while k <= grid.k_max() {
            kappas.push(k);
            k *= 2.0;
        }
        let xis = grid.xis();
        let base = xis.iter().map(|&x| low_symbol(x, 0.0)).collect();
        let blocks = kappas.iter().map(|&kap| xis.iter().map(|&x| psi_block(x, kap)).collect()).collect();
        LpLadder { grid, kappas, base, blocks }
    }

    /// `(κ, S_κ u)` for every block, starting with the base block `κ = 0`.
    pub fn decompose<F: Field>(&self, u: &F) -> Vec<(f64, F)> {
        let mut out = vec![(0.0, u.map_spectrum(|j, c| c * self.base[j]))];
        for (kap, b) in self.kappas.iter().zip(&self.blocks) {
            out.push((*kap, u.map_spectrum(|j, c| c * b[j])));
        }
        out
    }
}

pub fn lp_project<F: Field>(u: &F, kappa: f64) -> Result<F> {
    check_block(u.grid(), kappa)?;
    if kappa == 0.0 {
        return Ok(real_multiplier(u, |x| low_symbol(x, 0.0)));
    }
    Ok(real_multiplier(u, |x| psi_block(x, kappa)))
}

pub fn lp_low<F: Field>(u: &F, kappa: f64) -> Result<F> {
    if kappa < 0.0 {
        return Err(Error::Domain(format!("negative cutoff {kappa}")));
    }
    Ok(real_multiplier(u, |x| low_symbol(x, kappa)))
}

pub fn lp_widened<F: Field>(u: &F, kappa: f64) -> Result<F> {
    check_block(u.grid(), kappa)?;
    Ok(real_multiplier(u, |x| widened_symbol(x, kappa)))
}

/// Zeroes modes with `|k| > dealias_fraction · n/2`.
pub fn dealias<F: Field>(u: &F) -> F {
    let g = *u.grid();
    let cut = g.dealias_fraction * g.k_max();
    u.map_spectrum(|j, c| if g.xi(j).abs() > cut { C64::new(0.0, 0.0) } else { c })
}

/// Product of two trigonometric polynomials projected exactly onto the
/// representable modes (2n zero padding, no aliasing).
pub fn product<F: Field>(a: &RealField, u: &F) -> Result<F> {
    a.grid().check_same(u.grid())?;
    let g = *u.grid();
    let m = 2 * g.n;
    let mut pa = resample_spectrum(a.spectrum(), m);
    let mut pu = resample_spectrum(u.spectrum(), m);
    fft_inverse(&mut pa);
    fft_inverse(&mut pu);
    for (x, y) in pu.iter_mut().zip(&pa) {
        *x *= y.re;
    }
    fft_forward(&mut pu);
    Ok(F::from_spectrum(g, resample_spectrum(&pu, g.n)))
}

// ---------------------------------------------------------------------------
// Norms

pub fn l2_from_spectrum(g: &GridSpec, s: &[C64]) -> f64 {
    (g.length * s.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

/// `‖⟨D⟩^σ u‖_{L²}` with the unnormalized integral over one period.
pub fn sobolev_norm<F: Field>(u: &F, sigma: f64) -> f64 {
    let g = u.grid();
    let s: f64 = u
        .spectrum()
        .iter()
        .enumerate()
        .map(|(j, c)| (1.0 + g.xi(j).powi(2)).powf(sigma) * c.norm_sqr())
        .sum();
    (g.length * s).sqrt()
}

pub fn sup_norm<F: Field>(u: &F) -> f64 {
    u.abs_samples().into_iter().fold(0.0, f64::max)
}

/// Zygmund norm `max(‖S_0 u‖_∞, sup_κ κ^s ‖S_κ u‖_∞)`.
pub fn zygmund_norm<F: Field>(u: &F, s: f64) -> f64 {
    let lad = LpLadder::new(*u.grid());
    lad.decompose(u)
        .into_iter()
        .map(|(k, b)| if k == 0.0 { sup_norm(&b) } else { k.powf(s) * sup_norm(&b) })
        .fold(0.0, f64::max)
}

/// `W^{r,∞}` norm: sum of derivative sup norms for integer `r`, Zygmund otherwise.
pub fn wkinf_norm(u: &RealField, r: f64) -> f64 {
    if r.fract() == 0.0 && r >= 0.0 {
        (0..=r as u32).map(|k| u.deriv(k).sup_norm()).sum()
    } else {
        zygmund_norm(u, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::new(8).is_err());
        assert!(GridSpec::new(48).is_err());
        assert!(GridSpec::with_length(64, -1.0, 0.5).is_err());
    }

    #[test]
    fn multiplier_single_mode() {
        let u = ComplexField::mode(g(64), 3);
        let v = fourier_multiplier(&u, |x| C64::new(x.abs(), 0.0)).unwrap();
        for (a, b) in v.samples().iter().zip(u.samples()) {
            assert!((a - b * 3.0).norm() < 1e-12);
        }
        let u = ComplexField::mode(g(64), 4);
        let v = fourier_multiplier(&u, |x| C64::new(1.0 + x * x, 0.0)).unwrap();
        for (a, b) in v.samples().iter().zip(u.samples()) {
            assert!((a - b * 17.0).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplier_identity_is_exact() {
        let u = ComplexField::from_fn(g(32), |x| C64::new(x.sin(), (3.0 * x).cos()));
        let v = fourier_multiplier(&u, |_| C64::new(1.0, 0.0)).unwrap();
        let w = ComplexField::from_spectrum(*u.grid(), u.spectrum().to_vec());
        for (a, b) in v.samples().iter().zip(w.samples()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn multiplier_reports_nonfinite() {
        let u = ComplexField::mode(g(32), 1);
        match fourier_multiplier(&u, |x| C64::new(1.0 / x, 0.0)) {
            Err(Error::NonFinite { xi }) => assert_eq!(xi, 0.0),
            _ => panic!("expected error"),
        }
    }

    #[test]
    fn block_of_single_mode() {
        let u = ComplexField::mode(g(64), 8);
        let v = lp_project(&u, 8.0).unwrap();
        assert!(v.sub(&u).unwrap().l2_norm() < 1e-13);
        assert!(lp_project(&u, 64.0).is_err());
        assert!(lp_project(&u, 3.0).is_err());
    }

    #[test]
    fn widened_block_fixes_block() {
        let u = RealField::from_fn(g(256), |x| (0..60).map(|k| (k as f64 * x + 0.3 * k as f64).sin() / (1.0 + k as f64)).sum());
        for kap in [2.0, 8.0, 32.0] {
            let s = lp_project(&u, kap).unwrap();
            let t = lp_widened(&s, kap).unwrap();
            assert!(t.sub(&s).unwrap().l2_norm() < 1e-13 * (1.0 + s.l2_norm()));
        }
    }

    #[test]
    fn zygmund_mode() {
        let u = ComplexField::mode(g(128), 16);
        assert!((zygmund_norm(&u, 0.5) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_norms() {
        let u = RealField::zeros(g(32));
        assert_eq!(sobolev_norm(&u, 2.0), 0.0);
        assert_eq!(zygmund_norm(&u, 0.5), 0.0);
        assert_eq!(wkinf_norm(&u, 2.0), 0.0);
    }

    #[test]
    fn sobolev_mode() {
        let u = ComplexField::mode(g(64), 8);
        let want = 65.0 * (2.0 * PI).sqrt();
        assert!((sobolev_norm(&u, 2.0) - want).abs() < 1e-11 * want);
    }

    #[test]
    fn exact_product_matches_trig_identity() {
        let gr = g(32);
        let a = RealField::from_fn(gr, |x| (10.0 * x).cos());
        let u = RealField::from_fn(gr, |x| (9.0 * x).cos());
        let p = product(&a, &u).unwrap();
        // cos10 cos9 = (cos19 + cos1)/2; mode 19 is not representable.
        let want = RealField::from_fn(gr, |x| 0.5 * x.cos());
        assert!(p.sub(&want).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn resample_roundtrip() {
        let u = RealField::from_fn(g(32), |x| (5.0 * x).sin() + (16.0 * x).cos());
        let v = u.resample(128).resample(32);
        assert!(v.sub(&u).unwrap().sup_norm() < 1e-13);
    }
}
