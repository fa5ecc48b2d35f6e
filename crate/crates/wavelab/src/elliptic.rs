//! Elliptic problems on the flattened strip `𝕋 × [−1, 0]`.
//!
//! The surface `y = η(x)` is flattened by
//! `ρ(x,z) = (1+z) e^{δz⟨D⟩}η − z (e^{−(1+z)δ⟨D⟩}η − h)`, which sends `z = 0` to the
//! surface and `z = −1` to `y = η − h`. The Laplacian pulls back to
//! `α⁻¹(∂_z² + α∂_x² + β∂_x∂_z − γ∂_z)`.
//!
//! Discretization: Fourier in `x`, Chebyshev collocation in `z`. The Dirichlet
//! data are lifted with the flat-strip harmonic extension, evaluated in closed form,
//! and the correction is found with flat-preconditioned GMRES.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{fft_forward, fft_inverse, Field, GridSpec, RealField, C64};

/// Chebyshev points in `z ∈ [−1, 0]`, ordered from the surface down.
#[derive(Clone, Debug)]
pub struct StripGrid {
    pub x: GridSpec,
    pub nz: usize,
    pub z: Vec<f64>,
    /// `d/dz`, row major `nz × nz`.
    pub dz: Vec<f64>,
    /// `d²/dz²`.
    pub dzz: Vec<f64>,
}

impl StripGrid {
    pub fn new(x: GridSpec, nz: usize) -> Result<Self> {
        if nz < 16 {
            return Err(Error::Domain(format!("need n_z >= 16, got {nz}")));
        }
        let np = nz - 1;
        let t: Vec<f64> = (0..nz).map(|j| (std::f64::consts::PI * j as f64 / np as f64).cos()).collect();
        let c = |j: usize| if j == 0 || j == np { 2.0 } else { 1.0 };
        let mut d = vec![0.0; nz * nz];
        for i in 0..nz {
            let mut s = 0.0;
            for j in 0..nz {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let v = c(i) / c(j) * sign / (t[i] - t[j]);
                    d[i * nz + j] = 2.0 * v;
                    s += 2.0 * v;
                }
            }
            d[i * nz + i] = -s;
        }
        let mut dzz = vec![0.0; nz * nz];
        for i in 0..nz {
            for k in 0..nz {
                let a = d[i * nz + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..nz {
                    dzz[i * nz + j] += a * d[k * nz + j];
                }
            }
        }
        let z = t.iter().map(|&v| 0.5 * (v - 1.0)).collect();
        Ok(StripGrid { x, nz, z, dz: d, dzz })
    }

    pub fn len(&self) -> usize {
        self.nz * self.x.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out_i = Σ_j M_ij v_j` applied level-wise (each level is an x-row).
    fn apply_z(&self, m: &[f64], v: &[f64]) -> Vec<f64> {
        let (nz, n) = (self.nz, self.x.n);
        let mut out = vec![0.0; nz * n];
        for i in 0..nz {
            let row = &mut out[i * n..(i + 1) * n];
            for j in 0..nz {
                let a = m[i * nz + j];
                if a == 0.0 {
                    continue;
                }
                let src = &v[j * n..(j + 1) * n];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += a * s;
                }
            }
        }
        out
    }
}

/// Values on the strip, level-major: `values[iz * n + ix]`, `iz = 0` at the surface.
#[derive(Clone, Debug, Serialize)]
pub struct StripValues {
    pub n: usize,
    pub nz: usize,
    pub values: Vec<f64>,
}

impl StripValues {
    pub fn level(&self, iz: usize) -> &[f64] {
        &self.values[iz * self.n..(iz + 1) * self.n]
    }

    pub fn top(&self) -> &[f64] {
        self.level(0)
    }

    pub fn bottom(&self) -> &[f64] {
        self.level(self.nz - 1)
    }
}

fn spec_rows(v: &[f64], n: usize) -> Vec<C64> {
    let mut out: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    for row in out.chunks_mut(n) {
        fft_forward(row);
    }
    out
}

fn real_rows(s: &[C64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len());
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for row in s.chunks(n) {
        for j in 0..n {
            buf[j] = 0.5 * (row[j] + row[(n - j) % n].conj());
        }
        fft_inverse(&mut buf);
        out.extend(buf.iter().map(|z| z.re));
    }
    out
}

/// `ρ` and its derivatives on the strip grid.
#[derive(Clone, Debug)]
pub struct FlatteningMap {
    pub strip: Arc<StripGrid>,
    pub h: f64,
    pub delta: f64,
    pub rho: Vec<f64>,
    pub rho_z: Vec<f64>,
    pub rho_x: Vec<f64>,
    pub rho_xx: Vec<f64>,
    pub rho_xz: Vec<f64>,
    pub rho_zz: Vec<f64>,
    pub min_rho_z: f64,
}

impl FlatteningMap {
    /// Whether `∂_zρ ≥ min(h/2, 1)` holds everywhere.
    pub fn lower_bound_holds(&self) -> bool {
        self.min_rho_z >= (0.5 * self.h).min(1.0)
    }
}

pub fn build_flattening(strip: &Arc<StripGrid>, eta: &RealField, h: f64, delta: f64) -> Result<FlatteningMap> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("depth h = {h} must be positive")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("smoothing delta = {delta} outside (0, 1]")));
    }
    eta.grid().check_same(&strip.x)?;
    let g = strip.x;
    let n = g.n;
    let nz = strip.nz;
    let eh = eta.spectrum();
    let mut s_rho = vec![C64::new(0.0, 0.0); nz * n];
    let mut s_z = s_rho.clone();
    let mut s_zz = s_rho.clone();
    for iz in 0..nz {
        let z = strip.z[iz];
        for j in 0..n {
            let xi = g.xi(j);
            let a = delta * (1.0 + xi * xi).sqrt();
            let e1 = (z * a).exp();
            let e2 = (-(1.0 + z) * a).exp();
            let c = eh[j];
            let mut r = c * ((1.0 + z) * e1 - z * e2);
            let mut rz = c * (e1 + (1.0 + z) * a * e1 - e2 + z * a * e2);
            let rzz = c * (2.0 * a * e1 + (1.0 + z) * a * a * e1 + 2.0 * a * e2 - z * a * a * e2);
            if j == 0 {
                r += h * z;
                rz += h;
            }
            s_rho[iz * n + j] = r;
            s_z[iz * n + j] = rz;
            s_zz[iz * n + j] = rzz;
        }
    }
    let dx_of = |s: &[C64], order: u32| -> Vec<C64> {
        s.iter().enumerate().map(|(q, &c)| c * (crate::spectral::I * g.xi(q % n)).powu(order)).collect()
    };
    let rho = real_rows(&s_rho, n);
    let rho_z = real_rows(&s_z, n);
    let rho_zz = real_rows(&s_zz, n);
    let rho_x = real_rows(&dx_of(&s_rho, 1), n);
    let rho_xx = real_rows(&dx_of(&s_rho, 2), n);
    let rho_xz = real_rows(&dx_of(&s_z, 1), n);
    let (mut worst, mut at) = (f64::INFINITY, 0);
    for (q, &v) in rho_z.iter().enumerate() {
        if v < worst {
            worst = v;
            at = q;
        }
    }
    if !(worst > 0.0) {
        return Err(Error::Degenerate { x: g.x(at % n), z: strip.z[at / n], value: worst });
    }
    Ok(FlatteningMap { strip: strip.clone(), h, delta, rho, rho_z, rho_x, rho_xx, rho_xz, rho_zz, min_rho_z: worst })
}

/// `α, β, γ` of the flattened operator `∂_z² + α∂_x² + β∂_x∂_z − γ∂_z`.
#[derive(Clone, Debug)]
pub struct EllipticCoeffs {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn coefficients(map: &FlatteningMap) -> EllipticCoeffs {
    let len = map.rho.len();
    let mut alpha = Vec::with_capacity(len);
    let mut beta = Vec::with_capacity(len);
    let mut gamma = Vec::with_capacity(len);
    for q in 0..len {
        let (rz, rx) = (map.rho_z[q], map.rho_x[q]);
        let d = 1.0 + rx * rx;
        let a = rz * rz / d;
        let b = -2.0 * rz * rx / d;
        alpha.push(a);
        beta.push(b);
        gamma.push((map.rho_zz[q] + a * map.rho_xx[q] + b * map.rho_xz[q]) / rz);
    }
    EllipticCoeffs { alpha, beta, gamma }
}

/// Bottom condition at `z = −1`.
#[derive(Clone, Debug)]
pub enum BottomBc {
    /// Conormal derivative `(1+ρ_x²)θ_z − ρ_zρ_xθ_x = 0`: no flux through `y = η − h`.
    Conormal,
    /// Prescribed `∂_zθ` (one value per x node).
    Neumann(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, restart: 40, max_iter: 400 }
    }
}

/// Per-mode LU factors of the flat operator `∂_z² − h²ξ²` with a Dirichlet
/// top and Neumann bottom, on the unknown levels `1..nz`.
pub struct FlatPreconditioner {
    strip: Arc<StripGrid>,
    lus: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl FlatPreconditioner {
    pub fn new(strip: &Arc<StripGrid>, h: f64) -> Self {
        let nz = strip.nz;
        let m = nz - 1;
        let g = strip.x;
        let lus = (0..=g.n / 2)
            .map(|j| {
                let xi = g.xi(j);
                let mut a = DMatrix::<f64>::zeros(m, m);
                for r in 0..m {
                    let i = r + 1;
                    for c in 0..m {
                        let jz = c + 1;
                        a[(r, c)] = if i == nz - 1 { strip.dz[i * nz + jz] } else { strip.dzz[i * nz + jz] };
                    }
                    if i != nz - 1 {
                        a[(r, r)] -= h * h * xi * xi;
                    }
                }
                a.lu()
            })
            .collect();
        FlatPreconditioner { strip: strip.clone(), lus }
    }

    /// Applies the inverse to level-major data on levels `1..nz`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.strip.x.n;
        let m = self.strip.nz - 1;
        let s = spec_rows(v, n);
        let mut out = vec![C64::new(0.0, 0.0); m * n];
        for j in 0..n {
            let k = (crate::spectral::mode_of(j, n)).unsigned_abs() as usize;
            let lu = &self.lus[k.min(n / 2)];
            let re = DVector::from_iterator(m, (0..m).map(|r| s[r * n + j].re));
            let im = DVector::from_iterator(m, (0..m).map(|r| s[r * n + j].im));
            let xr = lu.solve(&re).unwrap_or_else(|| DVector::zeros(m));
            let xi = lu.solve(&im).unwrap_or_else(|| DVector::zeros(m));
            for r in 0..m {
                out[r * n + j] = C64::new(xr[r], xi[r]);
            }
        }
        real_rows(&out, n)
    }
}

/// Closed-form flat harmonic extension `Σ f̂_k cosh(h|k|(z+1))/cosh(h|k|) e^{ikx}`.
fn lift_factors(q: f64, z: f64) -> (f64, f64) {
    if q == 0.0 {
        return (1.0, 0.0);
    }
    let e1 = (q * z).exp();
    let e2 = (-q * (z + 2.0)).exp();
    let d = 1.0 + (-2.0 * q).exp();
    ((e1 + e2) / d, (e1 - e2) / d)
}

/// All first and second derivatives of a strip function, level-major.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub xx: Vec<f64>,
    pub xz: Vec<f64>,
    pub zz: Vec<f64>,
}

/// Solution of a strip problem: flat lifting of the surface data plus a
/// collocated correction vanishing at the surface.
#[derive(Clone, Debug)]
pub struct StripField {
    pub strip: Arc<StripGrid>,
    pub h: f64,
    pub lift: Vec<C64>,
    pub correction: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl StripField {
    fn lift_derivs(&self) -> Derivatives {
        let g = self.strip.x;
        let (n, nz) = (g.n, self.strip.nz);
        let mut parts: [Vec<C64>; 6] = Default::default();
        for p in parts.iter_mut() {
            *p = vec![C64::new(0.0, 0.0); nz * n];
        }
        for iz in 0..nz {
            let z = self.strip.z[iz];
            for j in 0..n {
                let c = self.lift[j];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let xi = g.xi(j);
                let q = self.h * xi.abs();
                let (ch, sh) = lift_factors(q, z);
                let ik = crate::spectral::I * xi;
                let q_ = iz * n + j;
                parts[0][q_] = c * ch;
                parts[1][q_] = c * ch * ik;
                parts[2][q_] = c * sh * q;
                parts[3][q_] = -c * ch * xi * xi;
                parts[4][q_] = c * sh * q * ik;
                parts[5][q_] = c * ch * q * q;
            }
        }
        let [a, b, c, d, e, f] = parts;
        Derivatives {
            v: real_rows(&a, n),
            x: real_rows(&b, n),
            z: real_rows(&c, n),
            xx: real_rows(&d, n),
            xz: real_rows(&e, n),
            zz: real_rows(&f, n),
        }
    }

    /// Derivatives of the full solution.
    pub fn derivatives(&self) -> Derivatives {
        let mut d = self.lift_derivs();
        let w = correction_derivs(&self.strip, &self.correction);
        for (a, b) in [
            (&mut d.v, &w.v),
            (&mut d.x, &w.x),
            (&mut d.z, &w.z),
            (&mut d.xx, &w.xx),
            (&mut d.xz, &w.xz),
            (&mut d.zz, &w.zz),
        ] {
            for (p, q) in a.iter_mut().zip(b) {
                *p += q;
            }
        }
        d
    }

    pub fn values(&self) -> StripValues {
        let d = self.lift_derivs();
        let v = d.v.iter().zip(&self.correction).map(|(a, b)| a + b).collect();
        StripValues { n: self.strip.x.n, nz: self.strip.nz, values: v }
    }

    /// `(θ_x, θ_z)` at the surface.
    pub fn top_gradient(&self) -> (Vec<f64>, Vec<f64>) {
        let g = self.strip.x;
        let n = g.n;
        let nz = self.strip.nz;
        let mut sx = vec![C64::new(0.0, 0.0); n];
        let mut sz = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let xi = g.xi(j);
            let q = self.h * xi.abs();
            let t = if q == 0.0 { 0.0 } else { q * lift_factors(q, 0.0).1 };
            sx[j] = self.lift[j] * crate::spectral::I * xi;
            sz[j] = self.lift[j] * t;
        }
        let tx = real_rows(&sx, n);
        let mut tz = real_rows(&sz, n);
        // the correction vanishes on the surface, so only its z-derivative enters
        for jz in 0..nz {
            let a = self.strip.dz[jz];
            if a == 0.0 {
                continue;
            }
            for i in 0..n {
                tz[i] += a * self.correction[jz * n + i];
            }
        }
        (tx, tz)
    }
}

fn correction_derivs(strip: &StripGrid, w: &[f64]) -> Derivatives {
    let g = strip.x;
    let n = g.n;
    let wz = strip.apply_z(&strip.dz, w);
    let wzz = strip.apply_z(&strip.dzz, w);
    let sw = spec_rows(w, n);
    let swz = spec_rows(&wz, n);
    let ik = |s: &[C64], order: u32| -> Vec<C64> {
        s.iter().enumerate().map(|(q, &c)| c * (crate::spectral::I * g.xi(q % n)).powu(order)).collect()
    };
    Derivatives {
        v: w.to_vec(),
        x: real_rows(&ik(&sw, 1), n),
        xx: real_rows(&ik(&sw, 2), n),
        xz: real_rows(&ik(&swz, 1), n),
        z: wz,
        zz: wzz,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned restarted GMRES. Returns `(x, iterations, relative residual)`.
pub fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize, f64)> {
    let len = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; len];
    if bn == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut iters = 0;
    let mut r = b.to_vec();
    let mut rn = bn;
    while iters < opts.max_iter {
        let m = opts.restart;
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|t| t / rn).collect());
        let mut hmat = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut e = vec![0.0; m + 1];
        e[0] = rn;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                hmat[i][k] = hik;
                for (a, b) in w.iter_mut().zip(&v[i]) {
                    *a -= hik * b;
                }
            }
            let wn = norm(&w);
            hmat[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hmat[i][k] + sn[i] * hmat[i + 1][k];
                hmat[i + 1][k] = -sn[i] * hmat[i][k] + cs[i] * hmat[i + 1][k];
                hmat[i][k] = t;
            }
            let den = (hmat[k][k].powi(2) + hmat[k + 1][k].powi(2)).sqrt();
            cs[k] = hmat[k][k] / den;
            sn[k] = hmat[k + 1][k] / den;
            hmat[k][k] = den;
            hmat[k + 1][k] = 0.0;
            e[k + 1] = -sn[k] * e[k];
            e[k] *= cs[k];
            iters += 1;
            k_used = k + 1;
            if wn > 0.0 {
                v.push(w.iter().map(|t| t / wn).collect());
            }
            if e[k + 1].abs() <= opts.tol * bn || wn == 0.0 || iters >= opts.max_iter {
                break;
            }
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = e[i];
            for j in i + 1..k_used {
                s -= hmat[i][j] * y[j];
            }
            y[i] = s / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (a, b) in x.iter_mut().zip(&z[j]) {
                *a += yj * b;
            }
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        rn = norm(&r);
        if rn <= opts.tol * bn {
            return Ok((x, iters, rn / bn));
        }
    }
    Err(Error::NoConvergence { iterations: iters, residual: rn / bn })
}

/// Reusable solver context for one grid, depth and smoothing parameter.
pub struct EllipticSolver {
    pub strip: Arc<StripGrid>,
    pub h: f64,
    pub delta: f64,
    pub opts: SolverOptions,
    precond: FlatPreconditioner,
}

impl EllipticSolver {
    pub fn new(x: GridSpec, nz: usize, h: f64, delta: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("depth h = {h} must be positive")));
        }
        let strip = Arc::new(StripGrid::new(x, nz)?);
        let precond = FlatPreconditioner::new(&strip, h);
        Ok(EllipticSolver { strip, h, delta, opts: SolverOptions::default(), precond })
    }

    pub fn flatten(&self, eta: &RealField) -> Result<FlatteningMap> {
        build_flattening(&self.strip, eta, self.h, self.delta)
    }

    /// Solves `(∂_z² + α∂_x² + β∂_x∂_z − γ∂_z)θ = F₀`, `θ(·,0) = f`, with the
    /// given bottom condition.
    pub fn solve_strip(
        &self,
        map: &FlatteningMap,
        coeffs: &EllipticCoeffs,
        f: &RealField,
        source: Option<&[f64]>,
        bottom: &BottomBc,
    ) -> Result<StripField> {
        let strip = &self.strip;
        let n = strip.x.n;
        let nz = strip.nz;
        let h = self.h;
        let mut sol = StripField {
            strip: strip.clone(),
            h,
            lift: f.spectrum().to_vec(),
            correction: vec![0.0; nz * n],
            iterations: 0,
            residual: 0.0,
        };
        let ld = sol.lift_derivs();
        let mut b = vec![0.0; (nz - 1) * n];
        for iz in 1..nz - 1 {
            for i in 0..n {
                let q = iz * n + i;
                let l = (coeffs.alpha[q] - h * h) * ld.xx[q] + coeffs.beta[q] * ld.xz[q] - coeffs.gamma[q] * ld.z[q];
                let s = source.map(|s| s[q]).unwrap_or(0.0);
                b[(iz - 1) * n + i] = s - l;
            }
        }
        let ib = nz - 1;
        for i in 0..n {
            let q = ib * n + i;
            b[(ib - 1) * n + i] = match bottom {
                BottomBc::Conormal => {
                    let rx = map.rho_x[q];
                    -((1.0 + rx * rx) * ld.z[q] - map.rho_z[q] * rx * ld.x[q])
                }
                BottomBc::Neumann(gv) => gv[i] - ld.z[q],
            };
        }
        let apply = |w: &[f64]| -> Vec<f64> {
            let mut full = vec![0.0; nz * n];
            full[n..].copy_from_slice(w);
            let d = correction_derivs(strip, &full);
            let mut out = vec![0.0; (nz - 1) * n];
            for iz in 1..nz - 1 {
                for i in 0..n {
                    let q = iz * n + i;
                    out[(iz - 1) * n + i] = d.zz[q] + coeffs.alpha[q] * d.xx[q] + coeffs.beta[q] * d.xz[q]
                        - coeffs.gamma[q] * d.z[q];
                }
            }
            for i in 0..n {
                let q = ib * n + i;
                out[(ib - 1) * n + i] = match bottom {
                    BottomBc::Conormal => {
                        let rx = map.rho_x[q];
                        (1.0 + rx * rx) * d.z[q] - map.rho_z[q] * rx * d.x[q]
                    }
                    BottomBc::Neumann(_) => d.z[q],
                };
            }
            out
        };
        let pre = |v: &[f64]| self.precond.apply(v);
        let (w, it, res) = gmres(&apply, &pre, &b, &self.opts)?;
        sol.correction[n..].copy_from_slice(&w);
        sol.iterations = it;
        sol.residual = res;
        Ok(sol)
    }

    /// Harmonic extension of `f` with a no-flux bottom.
    pub fn extend(&self, eta: &RealField, f: &RealField) -> Result<(FlatteningMap, StripField)> {
        let map = self.flatten(eta)?;
        let co = coefficients(&map);
        let sol = self.solve_strip(&map, &co, f, None, &BottomBc::Conormal)?;
        Ok((map, sol))
    }

    /// Dirichlet-to-Neumann map `G(η)f`.
    pub fn dtn(&self, eta: &RealField, f: &RealField) -> Result<RealField> {
        let (map, sol) = self.extend(eta, f)?;
        Ok(dtn_from(&map, &sol))
    }

    /// Pressure `P̃` solving `(flattened operator)P̃ = αF` with `P̃(·,0) = 0`,
    /// `∂_zP̃(·,−1) = −g∂_zρ(·,−1)`, and the Taylor coefficient `a = −∂_zP̃/∂_zρ` at the surface.
    pub fn pressure(&self, map: &FlatteningMap, phi: &StripField, g: f64) -> Result<(StripField, RealField)> {
        let co = coefficients(map);
        let n = self.strip.x.n;
        let nz = self.strip.nz;
        let f = pressure_source(map, phi);
        let src: Vec<f64> = f.iter().zip(&co.alpha).map(|(a, b)| a * b).collect();
        let bot: Vec<f64> = (0..n).map(|i| -g * map.rho_z[(nz - 1) * n + i]).collect();
        let zero = RealField::zeros(self.strip.x);
        let p = self.solve_strip(map, &co, &zero, Some(&src), &BottomBc::Neumann(bot))?;
        let (_, pz) = p.top_gradient();
        let a: Vec<f64> = (0..n).map(|i| -pz[i] / map.rho_z[i]).collect();
        Ok((p, RealField::new(self.strip.x, a)?))
    }

    /// Taylor coefficient for the state `(η, ψ)`.
    pub fn taylor_coefficient(&self, eta: &RealField, psi: &RealField, g: f64) -> Result<RealField> {
        let (map, phi) = self.extend(eta, psi)?;
        Ok(self.pressure(&map, &phi, g)?.1)
    }
}

/// `G(η)f = [(1+ρ_x²)/ρ_z θ_z − ρ_x θ_x]` at the surface.
pub fn dtn_from(map: &FlatteningMap, sol: &StripField) -> RealField {
    let n = map.strip.x.n;
    let (tx, tz) = sol.top_gradient();
    let v = (0..n)
        .map(|i| {
            let rx = map.rho_x[i];
            (1.0 + rx * rx) / map.rho_z[i] * tz[i] - rx * tx[i]
        })
        .collect();
    RealField::new(map.strip.x, v).unwrap()
}

/// Physical second derivatives `(φ_xx, φ_xy, φ_yy)` of the extension, level-major.
pub fn physical_hessian(map: &FlatteningMap, phi: &StripField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = phi.derivatives();
    let len = d.v.len();
    let (mut pxx, mut pxy, mut pyy) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for q in 0..len {
        let (rz, rx, rxx, rxz, rzz) = (map.rho_z[q], map.rho_x[q], map.rho_xx[q], map.rho_xz[q], map.rho_zz[q]);
        let r = rx / rz;
        let r_x = (rxx * rz - rx * rxz) / (rz * rz);
        let r_z = (rxz * rz - rx * rzz) / (rz * rz);
        // ∂_z of φ_x = θ_x − rθ_z
        let dz_phx = d.xz[q] - r_z * d.z[q] - r * d.zz[q];
        let dx_phx = d.xx[q] - r_x * d.z[q] - r * d.xz[q];
        pxx[q] = dx_phx - r * dz_phx;
        pxy[q] = dz_phx / rz;
        pyy[q] = (d.zz[q] / rz - d.z[q] * rzz / (rz * rz)) / rz;
    }
    (pxx, pxy, pyy)
}

/// `F = −(φ_xx² + 2φ_xy² + φ_yy²)` on the strip.
pub fn pressure_source(map: &FlatteningMap, phi: &StripField) -> Vec<f64> {
    let (a, b, c) = physical_hessian(map, phi);
    a.iter().zip(&b).zip(&c).map(|((x, y), z)| -(x * x + 2.0 * y * y + z * z)).collect()
}

/// The same source using harmonicity, `−2(φ_xx² + φ_xy²)`.
pub fn pressure_source_harmonic(map: &FlatteningMap, phi: &StripField) -> Vec<f64> {
    let (a, b, _) = physical_hessian(map, phi);
    a.iter().zip(&b).map(|(x, y)| -2.0 * (x * x + y * y)).collect()
}

/// `G(η)f − T_Λ f` with `T_Λ = |D|ψ(D)`.
pub fn paralin_residual(solver: &EllipticSolver, eta: &RealField, f: &RealField) -> Result<RealField> {
    let gf = solver.dtn(eta, f)?;
    let cut = crate::paradiff::AdmissibleCutoff::default();
    let t = crate::spectral::real_multiplier(f, |x| x.abs() * cut.psi(x));
    gf.sub(&t)
}
