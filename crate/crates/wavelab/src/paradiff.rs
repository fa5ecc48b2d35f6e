//! Bony paraproducts, paradifferential quantization, symbol seminorms and the
//! local-smoothing weights and seminorms.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{
    fft_forward, fft_inverse, high_symbol, low_symbol, phi, psi_block, real_multiplier, resample_spectrum,
    sobolev_norm, wkinf_norm, zygmund_norm, ComplexField, Field, GridSpec, RealField, C64,
};

/// Exact product of two spectra, projected onto the representable modes.
pub fn mul_spectra(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let m = 2 * n;
    let mut pa = resample_spectrum(a, m);
    let mut pb = resample_spectrum(b, m);
    fft_inverse(&mut pa);
    fft_inverse(&mut pb);
    for (x, y) in pb.iter_mut().zip(&pa) {
        *x *= y;
    }
    fft_forward(&mut pb);
    resample_spectrum(&pb, n)
}

fn filtered(s: &[C64], g: &GridSpec, m: impl Fn(f64) -> f64) -> Vec<C64> {
    s.iter()
        .enumerate()
        .map(|(j, &c)| {
            let xi = g.xi(j);
            if j == g.n / 2 {
                c * 0.5 * (m(xi) + m(-xi))
            } else {
                c * m(xi)
            }
        })
        .collect()
}

/// Dyadic blocks entering the paraproduct: `κ = 8, 16, …` up to Nyquist.
fn para_blocks(g: &GridSpec) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 8.0;
    while k <= g.k_max() {
        out.push(k);
        k *= 2.0;
    }
    out
}

fn paraproduct_spectra(g: &GridSpec, a: &[C64], u: &[C64]) -> Vec<C64> {
    let mut acc = vec![C64::new(0.0, 0.0); g.n];
    for kap in para_blocks(g) {
        let lo = filtered(a, g, |x| low_symbol(x, kap / 8.0));
        let hi = filtered(u, g, |x| psi_block(x, kap));
        for (s, v) in acc.iter_mut().zip(mul_spectra(&lo, &hi)) {
            *s += v;
        }
    }
    acc
}

/// `T_a u = Σ_{κ≥8} (S_{≤κ/8} a)(S_κ u)`.
pub fn paraproduct<F: Field>(a: &RealField, u: &F) -> Result<F> {
    a.grid().check_same(u.grid())?;
    let g = *u.grid();
    Ok(F::from_spectrum(g, paraproduct_spectra(&g, a.spectrum(), u.spectrum())))
}

/// `R(a, u) = au − T_a u − T_u a`.
pub fn remainder<F: Field>(a: &RealField, u: &F) -> Result<F> {
    a.grid().check_same(u.grid())?;
    let g = *u.grid();
    let full = mul_spectra(a.spectrum(), u.spectrum());
    let tau = paraproduct_spectra(&g, a.spectrum(), u.spectrum());
    let tua = paraproduct_spectra(&g, u.spectrum(), a.spectrum());
    let r = full.iter().zip(&tau).zip(&tua).map(|((f, x), y)| f - x - y).collect();
    Ok(F::from_spectrum(g, r))
}

/// The pair `χ(θ, η)`, `ψ(η)` used by the paradifferential quantization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleCutoff {
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for AdmissibleCutoff {
    fn default() -> Self {
        AdmissibleCutoff { eps1: 0.1, eps2: 0.125 }
    }
}

impl AdmissibleCutoff {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        if !(eps1 > 0.0 && eps1 < eps2 && eps2 < 1.0) {
            return Err(Error::Domain(format!("need 0 < eps1 < eps2 < 1, got {eps1}, {eps2}")));
        }
        Ok(AdmissibleCutoff { eps1, eps2 })
    }

    pub fn chi(&self, theta: f64, eta: f64) -> f64 {
        let a = theta.abs();
        let b = eta.abs();
        if a <= self.eps1 * b {
            return 1.0;
        }
        if a >= self.eps2 * b {
            return 0.0;
        }
        let t = (a / b - self.eps1) / (self.eps2 - self.eps1);
        let e = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
        e(1.0 - t) / (e(1.0 - t) + e(t))
    }

    pub fn psi(&self, eta: f64) -> f64 {
        1.0 - phi(eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    General,
    XIndependent,
    XiIndependent,
}

type SymbolFn = dyn Fn(usize, f64) -> C64 + Send + Sync;

/// Symbol `a(x, ξ)` sampled on the x-grid and callable at any `ξ`.
#[derive(Clone)]
pub struct SymbolGrid {
    pub grid: GridSpec,
    pub order: f64,
    pub rho: f64,
    pub kind: SymbolKind,
    eval: Arc<SymbolFn>,
}

impl std::fmt::Debug for SymbolGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolGrid")
            .field("n", &self.grid.n)
            .field("order", &self.order)
            .field("rho", &self.rho)
            .field("kind", &self.kind)
            .finish()
    }
}

impl SymbolGrid {
    /// General symbol; `f(j, ξ)` is `a(x_j, ξ)`.
    pub fn new(grid: GridSpec, order: f64, rho: f64, f: impl Fn(usize, f64) -> C64 + Send + Sync + 'static) -> Self {
        SymbolGrid { grid, order, rho, kind: SymbolKind::General, eval: Arc::new(f) }
    }

    pub fn x_independent(grid: GridSpec, order: f64, f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        SymbolGrid { grid, order, rho: 0.0, kind: SymbolKind::XIndependent, eval: Arc::new(move |_, xi| f(xi)) }
    }

    /// Order-zero symbol `a(x)`.
    pub fn xi_independent(a: &RealField, rho: f64) -> Self {
        let s: Vec<f64> = a.samples().to_vec();
        SymbolGrid {
            grid: *a.grid(),
            order: 0.0,
            rho,
            kind: SymbolKind::XiIndependent,
            eval: Arc::new(move |j, _| C64::new(s[j], 0.0)),
        }
    }

    pub fn at(&self, j: usize, xi: f64) -> C64 {
        (self.eval)(j, xi)
    }

    /// x-samples of `a(·, ξ)`.
    pub fn column(&self, xi: f64) -> Vec<C64> {
        (0..self.grid.n).map(|j| self.at(j, xi)).collect()
    }
}

/// Paradifferential operator `T_a u`: spectrum
/// `Σ_η χ(ξ−η, η) â(ξ−η, η) ψ(η) û(η)`, summed directly in O(n²).
pub fn paradiff_op<F: Field>(a: &SymbolGrid, u: &F, cut: &AdmissibleCutoff) -> Result<F> {
    a.grid.check_same(u.grid())?;
    let g = *u.grid();
    let n = g.n;
    let us = u.spectrum();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for je in 0..n {
        let eta = g.xi(je);
        let w = cut.psi(eta);
        if w == 0.0 || us[je] == C64::new(0.0, 0.0) {
            continue;
        }
        let me = g.mode(je);
        if a.kind == SymbolKind::XIndependent {
            let v = a.at(0, eta);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { xi: eta });
            }
            out[je] += v * w * us[je];
            continue;
        }
        let mut col = a.column(eta);
        if col.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { xi: eta });
        }
        fft_forward(&mut col);
        for (jt, &ah) in col.iter().enumerate() {
            let mt = g.mode(jt);
            let theta = g.xi(jt);
            let c = cut.chi(theta, eta);
            if c == 0.0 {
                continue;
            }
            if let Some(slot) = g.slot(me + mt) {
                out[slot] += ah * c * w * us[je];
            }
        }
    }
    Ok(F::from_spectrum(g, out))
}

fn fd_derivative(f: &dyn Fn(f64) -> Vec<C64>, xi: f64, order: usize) -> Option<Vec<C64>> {
    let (offs, w, den): (&[f64], &[f64], f64) = match order {
        0 => (&[0.0], &[1.0], 1.0),
        1 => (&[-2.0, -1.0, 1.0, 2.0], &[1.0, -8.0, 8.0, -1.0], 12.0),
        2 => (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0], &[1.0, -8.0, 13.0, -13.0, 8.0, -1.0], 8.0),
        _ => return None,
    };
    for o in offs {
        let p = xi + o;
        if p.abs() < 0.5 || p.signum() != xi.signum() {
            return None;
        }
    }
    let mut acc: Option<Vec<C64>> = None;
    for (o, c) in offs.iter().zip(w) {
        let col = f(xi + o);
        match acc.as_mut() {
            None => acc = Some(col.into_iter().map(|v| v * (*c / den)).collect()),
            Some(a) => {
                for (s, v) in a.iter_mut().zip(col) {
                    *s += v * (*c / den);
                }
            }
        }
    }
    acc
}

fn complex_wkinf(g: GridSpec, col: &[C64], rho: f64) -> f64 {
    let re = RealField::new(g, col.iter().map(|c| c.re).collect()).unwrap();
    let im = RealField::new(g, col.iter().map(|c| c.im).collect()).unwrap();
    if rho == 0.0 {
        return col.iter().fold(0.0, |m, c| m.max(c.norm()));
    }
    wkinf_norm(&re, rho) + wkinf_norm(&im, rho)
}

/// `M_ρ^m(a) = sup_{α ≤ max_order} sup_ξ (1+|ξ|)^{α−m} ‖∂_ξ^α a(·, ξ)‖_{W^{ρ,∞}}`.
///
/// The ξ-list is every nonzero grid frequency; derivatives use fourth-order
/// centered differences with unit step, restricted to stencils that stay in
/// `|ξ| ≥ 1/2` on one side of the origin.
pub fn symbol_seminorm(a: &SymbolGrid, rho: f64, m: f64, max_order: usize) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::Domain("negative regularity symbol classes are not supported".into()));
    }
    if rho > 1.5 {
        return Err(Error::Domain(format!("regularity {rho} above 3/2")));
    }
    if max_order > 3 {
        return Err(Error::Domain(format!("derivative order {max_order} above 3")));
    }
    let g = a.grid;
    let col = |xi: f64| a.column(xi);
    let mut best = 0.0f64;
    for j in 0..g.n {
        let xi = g.xi(j);
        if xi.abs() < 0.5 {
            continue;
        }
        for order in 0..=max_order {
            if let Some(d) = fd_derivative(&col, xi, order) {
                let v = (1.0 + xi.abs()).powf(order as f64 - m) * complex_wkinf(g, &d, rho);
                if !v.is_finite() {
                    return Err(Error::NonFinite { xi });
                }
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Local-smoothing weights

/// Spectrum of the unscaled weight profile: a Gaussian truncated smoothly to `|ζ| ≤ 1`.
pub fn weight_profile_hat(zeta: f64) -> f64 {
    (-8.0 * zeta * zeta).exp() * phi(2.0 * zeta)
}

/// `w(u) = (1/2π) ∫ ĝ(ζ) e^{iuζ} dζ` before rescaling, by Simpson quadrature.
fn raw_weight(u: f64) -> f64 {
    let m = 2000;
    let h = 2.0 / m as f64;
    let mut s = 0.0;
    for i in 0..=m {
        let z = -1.0 + i as f64 * h;
        let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += c * weight_profile_hat(z) * (u * z).cos();
    }
    s * h / 3.0 / (2.0 * PI)
}

fn weight_scale() -> f64 {
    static S: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *S.get_or_init(|| 1.0 / raw_weight(1.0))
}

/// Value of the weight `w` on the real line; `w ≥ 1` on `[−1, 1]`.
pub fn weight_value(u: f64) -> f64 {
    weight_scale() * raw_weight(u)
}

/// Compact bump supported on `[−1, 1]`, equal to 1 on `[−1/2, 1/2]`.
pub fn chi_bump(u: f64) -> f64 {
    phi(2.0 * u)
}

/// Compact bump supported on `[−2, 2]`, equal to 1 on `[−1, 1]`.
pub fn chi_tilde(u: f64) -> f64 {
    phi(u)
}

/// Periodized weight `w_{x₀,κ}(x) = w(κ^{3/4}(x − x₀))`, band-limited to `|ξ| ≤ κ^{3/4}`.
#[derive(Clone, Debug)]
pub struct LocalWeight {
    pub x0: f64,
    pub kappa: f64,
    pub field: RealField,
}

impl LocalWeight {
    pub fn scale(&self) -> f64 {
        self.kappa.powf(0.75)
    }

    /// Compact bump `χ_{x₀,κ}` sampled on the grid (periodized).
    pub fn chi(&self) -> RealField {
        let s = self.scale();
        let (x0, l) = (self.x0, self.field.grid().length);
        RealField::from_fn(*self.field.grid(), |x| chi_bump(s * wrap(x - x0, l)))
    }

    pub fn chi_tilde(&self) -> RealField {
        let s = self.scale();
        let (x0, l) = (self.x0, self.field.grid().length);
        RealField::from_fn(*self.field.grid(), |x| chi_tilde(s * wrap(x - x0, l)))
    }
}

/// Wraps a displacement into `[−L/2, L/2)`.
pub fn wrap(d: f64, l: f64) -> f64 {
    (d + 0.5 * l).rem_euclid(l) - 0.5 * l
}

pub fn ls_weight(grid: GridSpec, x0: f64, kappa: f64) -> Result<LocalWeight> {
    if !(kappa >= 1.0) {
        return Err(Error::Domain(format!("weight frequency {kappa} below 1")));
    }
    let s = kappa.powf(0.75);
    let sc = weight_scale() / (grid.length * s);
    let spec: Vec<C64> = (0..grid.n)
        .map(|j| {
            let xi = grid.xi(j);
            let h = weight_profile_hat(xi / s);
            if h == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if j == grid.n / 2 {
                return C64::new(h * sc * (xi * x0).cos(), 0.0);
            }
            C64::from_polar(h * sc, -xi * x0)
        })
        .collect();
    Ok(LocalWeight { x0, kappa, field: RealField::from_spectrum(grid, spec) })
}

/// Symbol of the gap projection `S_{ξ₀,λ,μ} = p(D − ξ₀) + p(ξ₀ − D)`.
pub fn gap_symbol(xi: f64, xi0: f64, lambda: f64, mu: f64, c: f64) -> f64 {
    let p = |s: f64| {
        if s + lambda < 0.0 {
            0.0
        } else {
            psi_block(s + lambda, lambda) * (1.0 - chi_bump(s / (c * mu)))
        }
    };
    p(xi - xi0) + p(xi0 - xi)
}

/// Gap projection; requires `λ^{3/4} < μ ≤ λ` so the gap sits inside the band.
pub fn gap_projection<F: Field>(u: &F, xi0: f64, lambda: f64, mu: f64, c: f64) -> Result<F> {
    if !(mu > lambda.powf(0.75) && mu <= lambda) {
        return Err(Error::Domain(format!("gap width mu = {mu} outside (lambda^(3/4), lambda] for lambda = {lambda}")));
    }
    Ok(real_multiplier(u, |x| gap_symbol(x, xi0, lambda, mu, c)))
}

fn weighted_hsigma<F: Field>(w: &RealField, f: &F, sigma: f64) -> Result<f64> {
    let wf = F::from_spectrum(*f.grid(), mul_spectra(w.spectrum(), f.spectrum()));
    Ok(sobolev_norm(&wf, sigma))
}

fn dyadics_between(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1.0;
    while k <= hi {
        if k >= lo {
            out.push(k);
        }
        k *= 2.0;
    }
    out
}

/// `LS^σ_{x₀,λ}(f) = Σ_{1 ≤ κ ≤ cλ} ‖w_{x₀,κ} S_κ f‖_{H^σ}`.
pub fn ls_seminorm<F: Field>(f: &F, x0: f64, lambda: f64, sigma: f64, c: f64) -> Result<f64> {
    let g = *f.grid();
    let mut s = 0.0;
    for kap in dyadics_between(1.0, (c * lambda).min(g.k_max())) {
        let w = ls_weight(g, x0, kap)?;
        let b = real_multiplier(f, |x| psi_block(x, kap));
        s += weighted_hsigma(&w.field, &b, sigma)?;
    }
    Ok(s)
}

/// Three-row seminorm collecting low, high and balanced frequencies.
pub fn ls_seminorm_full<F: Field>(f: &F, x0: f64, xi0: f64, lambda: f64, mu: f64, sigma: f64, c: f64) -> Result<f64> {
    if !(mu > lambda.powf(0.75) && mu <= c * lambda) {
        return Err(Error::Domain(format!("mu = {mu} outside (lambda^(3/4), c lambda] for lambda = {lambda}")));
    }
    let g = *f.grid();
    let mut s = 0.0;
    for kap in dyadics_between(c * mu, (c * lambda).min(g.k_max())) {
        let b = real_multiplier(f, |x| psi_block(x, kap));
        let w = ls_weight(g, x0, kap)?;
        s += kap.powf(0.75) / mu * sobolev_norm(&b, sigma) + weighted_hsigma(&w.field, &b, sigma)?;
    }
    let hi = real_multiplier(f, |x| high_symbol(x, c * lambda));
    s += lambda.powf(0.75) / mu * sobolev_norm(&hi, sigma);
    let wl = ls_weight(g, x0, lambda)?;
    for kap in dyadics_between(lambda / c, g.k_max()) {
        let b = real_multiplier(f, |x| psi_block(x, kap));
        s += weighted_hsigma(&wl.field, &b, sigma)?;
    }
    let gp = gap_projection(f, xi0, lambda, mu, c)?;
    s += weighted_hsigma(&wl.field, &gp, sigma)?;
    Ok(s)
}

/// `‖R(a,u)‖_{H^{α+β}} / (‖a‖_{C_*^α} ‖u‖_{H^β})`.
pub fn bony_ratio(a: &RealField, u: &RealField, alpha: f64, beta: f64) -> Result<f64> {
    let r = remainder(a, u)?;
    Ok(sobolev_norm(&r, alpha + beta) / (zygmund_norm(a, alpha) * sobolev_norm(u, beta)))
}

/// `‖T_a u‖_{H^{μ−m}} / (M_0^m(a) ‖u‖_{H^μ})`.
pub fn order_ratio(a: &SymbolGrid, u: &ComplexField, mu: f64, cut: &AdmissibleCutoff) -> Result<f64> {
    let t = paradiff_op(a, u, cut)?;
    let m0 = symbol_seminorm(a, 0.0, a.order, 3)?;
    Ok(sobolev_norm(&t, mu - a.order) / (m0 * sobolev_norm(u, mu)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn constant_symbol_paraproduct() {
        let gr = g(128);
        let u = RealField::from_fn(gr, |x| (0..50).map(|k| ((k as f64) * x + k as f64).cos() / (1.0 + k as f64)).sum());
        let c = RealField::from_fn(gr, |_| 2.5);
        let t = paraproduct(&c, &u).unwrap();
        let low = real_multiplier(&u, |x| low_symbol(x, 4.0));
        let want = u.sub(&low).unwrap().scale(2.5);
        assert!(t.sub(&want).unwrap().sup_norm() < 1e-12);
        let r = remainder(&RealField::from_fn(gr, |_| 1.0), &u).unwrap();
        assert!(r.sub(&low).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn balanced_pair_lands_in_remainder() {
        let gr = g(128);
        let a = ComplexField::mode(gr, 32).re();
        let u = ComplexField::mode(gr, -32);
        let r = remainder(&a, &u).unwrap();
        assert!(r.spectrum()[0].norm() > 0.1);
        let t = paraproduct(&a, &u).unwrap();
        assert!(t.l2_norm() < 1e-13);
    }

    #[test]
    fn modulus_symbol_is_filtered_multiplier() {
        let gr = g(64);
        let u = ComplexField::from_fn(gr, |x| C64::new((3.0 * x).cos(), (x).sin() + (20.0 * x).sin()));
        let a = SymbolGrid::x_independent(gr, 1.0, |xi| C64::new(xi.abs(), 0.0));
        let cut = AdmissibleCutoff::default();
        let t = paradiff_op(&a, &u, &cut).unwrap();
        let want = real_multiplier(&u, |xi| xi.abs() * (1.0 - phi(xi)));
        assert!(t.sub(&want).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn seminorm_of_modulus_is_one() {
        for n in [64, 256] {
            let a = SymbolGrid::x_independent(g(n), 1.0, |xi| C64::new(xi.abs(), 0.0));
            let m = symbol_seminorm(&a, 0.0, 1.0, 3).unwrap();
            assert!((m - 1.0).abs() < 1e-12, "{m}");
        }
        let z = SymbolGrid::x_independent(g(64), 1.0, |_| C64::new(0.0, 0.0));
        assert_eq!(symbol_seminorm(&z, 0.0, 1.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn gap_kills_center() {
        let gr = g(1024);
        let u = ComplexField::mode(gr, 256);
        let v = gap_projection(&u, 256.0, 256.0, 100.0, 0.25).unwrap();
        assert!(v.l2_norm() < 1e-13 * u.l2_norm());
        assert!(gap_projection(&u, 256.0, 256.0, 10.0, 0.25).is_err());
    }

    #[test]
    fn weight_bounds() {
        for u in [-1.0, -0.5, 0.0, 0.3, 1.0] {
            assert!(weight_value(u) >= 1.0 - 1e-12);
        }
        assert!((weight_value(1.0) - 1.0).abs() < 1e-12);
        let w = ls_weight(g(512), 1.0, 64.0).unwrap();
        let s = w.kappa.powf(0.75);
        for (j, c) in w.field.spectrum().iter().enumerate() {
            if w.field.grid().xi(j).abs() > s {
                assert_eq!(c.norm(), 0.0);
            }
        }
        // Near its center the periodized weight matches the line profile up to the
        // tail of the periodization.
        for (j, x) in w.field.grid().xs().into_iter().enumerate() {
            let d = wrap(x - 1.0, 2.0 * PI);
            if d.abs() < 0.5 {
                let e = (w.field.samples()[j] - weight_value(s * d)).abs();
                assert!(e < 1e-6, "{e}");
            }
        }
    }
}
