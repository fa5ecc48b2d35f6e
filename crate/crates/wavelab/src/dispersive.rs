//! The frequency-truncated dispersive equation
//! `(∂_t + V_λ∂_x + i√(a_λ|D|))u = f`, its exact constant-coefficient
//! evolution, and the Strichartz, local-smoothing and overlap measurements.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, Fit};
use crate::hamiltonian::{flow_integrate, FlowOptions, FlowState, TruncatedCoeffs};
use crate::packets::{sharp_band, Lattice};
use crate::paradiff::{gap_projection, ls_weight, wrap};
use crate::spectral::{fourier_multiplier, psi_block, real_multiplier, resample_spectrum, ComplexField, Field, GridSpec, RealField, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Quantization {
    /// `√a·|D|^{1/2}`
    Left,
    /// `½(√a|D|^{1/2} + |D|^{1/2}√a)` and `V∂_x + ½V_x`
    Symmetric,
}

fn times_real(s: &RealField, u: &ComplexField) -> ComplexField {
    let v: Vec<C64> = u.samples().iter().zip(s.samples()).map(|(z, r)| z * r).collect();
    ComplexField::new(*u.grid(), v).expect("same grid")
}

pub fn half_derivative(u: &ComplexField) -> ComplexField {
    real_multiplier(u, |x| x.abs().sqrt())
}

/// `√a|D|^{1/2}u` in the chosen quantization.
pub fn dispersive_term(s: &RealField, u: &ComplexField, q: Quantization) -> Result<ComplexField> {
    s.grid().check_same(u.grid())?;
    let left = times_real(s, &half_derivative(u));
    Ok(match q {
        Quantization::Left => left,
        Quantization::Symmetric => left.add(&half_derivative(&times_real(s, u)))?.scale(C64::new(0.5, 0.0)),
    })
}

/// `iH u = V∂_xu + i√a|D|^{1/2}u`, so that solutions satisfy `∂_tu = −iHu + f`.
pub fn apply_h(v: &RealField, s: &RealField, u: &ComplexField, q: Quantization) -> Result<ComplexField> {
    v.grid().check_same(u.grid())?;
    let mut tr = times_real(v, &u.deriv(1));
    if q == Quantization::Symmetric {
        tr = tr.add(&times_real(&v.deriv(1).scale(0.5), u))?;
    }
    tr.add(&dispersive_term(s, u, q)?.scale(I))
}

/// `e^{−it(V₀D + √(a₀|D|))}u₀`.
pub fn exact_evolve(u0: &ComplexField, v0: f64, a0: f64, t: f64) -> ComplexField {
    fourier_multiplier(u0, |x| C64::from_polar(1.0, -t * (v0 * x + (a0 * x.abs()).sqrt()))).expect("finite multiplier")
}

/// `S_κδ_{x₀}`: the Littlewood–Paley block of a point mass, normalized in L².
pub fn lp_delta(grid: GridSpec, kappa: f64, x0: f64) -> ComplexField {
    let spec: Vec<C64> = (0..grid.n)
        .map(|j| {
            let xi = grid.xi(j);
            C64::from_polar(psi_block(xi.abs(), kappa), -xi * x0)
        })
        .collect();
    let u = ComplexField::from_spectrum(grid, spec);
    let s = u.l2_norm();
    u.scale(C64::new(1.0 / s, 0.0))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunSpec {
    pub lambda: f64,
    /// `u` is re-projected onto `band.0 ≤ |ξ| ≤ band.1` every step.
    pub band: (f64, f64),
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub quantization: Quantization,
    pub cfl: f64,
}

impl RunSpec {
    pub fn new(lambda: f64, t0: f64, t_end: f64) -> Self {
        RunSpec {
            lambda,
            band: (lambda / 4.0, 4.0 * lambda),
            t0,
            t_end,
            dt: 1e-3,
            stride: 1,
            quantization: Quantization::Symmetric,
            cfl: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DispersiveRun {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub u: Vec<ComplexField>,
    /// `‖f‖_{L¹L²}`
    pub source_norm: f64,
    /// Largest relative mass removed by one band re-projection.
    pub leakage: f64,
}

pub type Source<'a> = &'a dyn Fn(f64) -> ComplexField;

/// RK4 for `∂_tu = −P(iHu) + Pf`, `P` the band projection.
pub fn evolve_dispersive(c: &TruncatedCoeffs, u0: &ComplexField, f: Option<Source>, spec: &RunSpec) -> Result<DispersiveRun> {
    let grid = *u0.grid();
    let (lo, hi) = spec.band;
    let fixed = if c.is_static() { Some(c.fields_at(spec.t0, grid)?) } else { None };
    let fields = |t: f64| -> Result<(RealField, RealField)> {
        match &fixed {
            Some(p) => Ok(p.clone()),
            None => c.fields_at(t, grid),
        }
    };
    let (v0, s0) = fields(spec.t0)?;
    let speed = hi * v0.sup_norm() + (hi).sqrt() * s0.sup_norm();
    let span = spec.t_end - spec.t0;
    let dt_max = spec.dt.min(if speed > 0.0 { spec.cfl / speed } else { spec.dt });
    let steps = (span / dt_max).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let rhs = |t: f64, u: &ComplexField| -> Result<ComplexField> {
        let (v, s) = fields(t)?;
        let mut r = apply_h(&v, &s, u, spec.quantization)?.scale(C64::new(-1.0, 0.0));
        if let Some(f) = f {
            r = r.add(&f(t))?;
        }
        Ok(sharp_band(&r, lo, hi))
    };
    let mut u = sharp_band(u0, lo, hi);
    let mut run = DispersiveRun { lambda: spec.lambda, times: vec![spec.t0], u: vec![u.clone()], source_norm: 0.0, leakage: 0.0 };
    let mut fprev = f.map(|f| f(spec.t0).l2_norm());
    for k in 0..steps {
        let t = spec.t0 + k as f64 * dt;
        let h = C64::new(dt, 0.0);
        let k1 = rhs(t, &u)?;
        let k2 = rhs(t + 0.5 * dt, &u.add(&k1.scale(h * 0.5))?)?;
        let k3 = rhs(t + 0.5 * dt, &u.add(&k2.scale(h * 0.5))?)?;
        let k4 = rhs(t + dt, &u.add(&k3.scale(h))?)?;
        let inc = k1.add(&k2.scale(C64::new(2.0, 0.0)))?.add(&k3.scale(C64::new(2.0, 0.0)))?.add(&k4)?;
        let next = u.add(&inc.scale(h / 6.0))?;
        let proj = sharp_band(&next, lo, hi);
        let nn = next.l2_norm();
        if !nn.is_finite() {
            return Err(Error::NumericalAbort { t: t + dt, reason: "non-finite dispersive state".into() });
        }
        if nn > 0.0 {
            run.leakage = run.leakage.max(next.sub(&proj)?.l2_norm() / nn);
        }
        u = proj;
        if let (Some(f), Some(p)) = (f, fprev) {
            let q = f(t + dt).l2_norm();
            run.source_norm += 0.5 * dt * (p + q);
            fprev = Some(q);
        }
        if (k + 1) % spec.stride == 0 || k + 1 == steps {
            run.times.push(t + dt);
            run.u.push(u.clone());
        }
    }
    Ok(run)
}

/// Exact multiplier run at the given times.
pub fn exact_run(u0: &ComplexField, lambda: f64, v0: f64, a0: f64, times: &[f64]) -> DispersiveRun {
    DispersiveRun {
        lambda,
        times: times.to_vec(),
        u: times.iter().map(|&t| exact_evolve(u0, v0, a0, t)).collect(),
        source_norm: 0.0,
        leakage: 0.0,
    }
}

/// `‖u‖_∞` by spectral interpolation onto a grid `factor` times finer.
pub fn sup_oversampled(u: &ComplexField, factor: usize) -> f64 {
    let n = u.grid().n * factor;
    let g = u.grid().refined(n);
    let f = ComplexField::from_spectrum(g, resample_spectrum(u.spectrum(), n));
    f.sup_norm()
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

impl DispersiveRun {
    pub fn linf_l2(&self) -> f64 {
        self.u.iter().map(|u| u.l2_norm()).fold(0.0, f64::max)
    }

    /// `‖u‖_{L²(I;L∞)}` with 8× oversampling.
    pub fn l2_linf(&self) -> f64 {
        let s: Vec<f64> = self.u.iter().map(|u| sup_oversampled(u, 8).powi(2)).collect();
        trapezoid(&self.times, &s).sqrt()
    }

    /// Relative L² drift over the run.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.u[0].l2_norm();
        self.u.iter().map(|u| (u.l2_norm() / m0 - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// `Q = ‖u‖_{L²L∞}/(‖f‖_{L¹L²} + ‖u‖_{L∞L²})`; absent for `u ≡ 0`.
pub fn strichartz_quotient(run: &DispersiveRun) -> Option<f64> {
    let den = run.source_norm + run.linf_l2();
    if den == 0.0 {
        None
    } else {
        Some(run.l2_linf() / den)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    /// `(scan variable, measured value)`
    pub points: Vec<(f64, f64)>,
    pub fit: Fit,
}

impl ScanReport {
    pub fn from_points(points: Vec<(f64, f64)>, min_points: usize) -> Result<Self> {
        if points.len() < min_points {
            return Err(Error::Domain(format!("{} scan points, need {min_points} for a fit", points.len())));
        }
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        Ok(ScanReport { fit: loglog_fit(&x, &y)?, points })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StrichartzSetup {
    pub v0: f64,
    pub a0: f64,
    pub t_end: f64,
    /// Time samples per unit `λ^{−1/2}`.
    pub samples_per_scale: f64,
}

/// Exact-multiplier runs of `S_λδ` data; the grid holds `|ξ| ≤ 4λ`.
pub fn strichartz_scan(lambdas: &[f64], setup: &StrichartzSetup) -> Result<ScanReport> {
    let mut pts = Vec::new();
    for &lam in lambdas {
        let n = (8.0 * lam).max(256.0) as usize;
        let grid = GridSpec::new(n.next_power_of_two())?;
        let u0 = lp_delta(grid, lam, std::f64::consts::PI);
        let count = (setup.samples_per_scale * setup.t_end * lam.sqrt()).ceil().max(16.0) as usize;
        let times: Vec<f64> = (0..=count).map(|k| setup.t_end * k as f64 / count as f64).collect();
        let run = exact_run(&u0, lam, setup.v0, setup.a0, &times);
        let q = strichartz_quotient(&run).ok_or_else(|| Error::Domain("zero data".into()))?;
        pts.push((lam, q));
    }
    ScanReport::from_points(pts, 4)
}

// ---------------------------------------------------------------------------
// Local smoothing

/// `‖w_{xᵗ,κ}S_κu‖_{L²(I;L²)}/(‖u‖_{L∞L²} + ‖f‖_{L¹L²})` along a ray sampled at the run times.
pub fn local_smoothing_measure(run: &DispersiveRun, ray: &FlowState, kappa: f64) -> Result<f64> {
    if ray.times.len() != run.times.len() || ray.times.iter().zip(&run.times).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Domain("ray and run are sampled at different times".into()));
    }
    let grid = *run.u[0].grid();
    let mut sq = Vec::with_capacity(run.u.len());
    for (it, u) in run.u.iter().enumerate() {
        let w = ls_weight(grid, ray.rays[it][0].x, kappa)?;
        let b = real_multiplier(u, |x| psi_block(x.abs(), kappa));
        sq.push(times_real(&w.field, &b).l2_norm().powi(2));
    }
    Ok(trapezoid(&run.times, &sq).sqrt() / (run.linf_l2() + run.source_norm))
}

/// Gap-projection form: `‖w_{xᵗ,λ}S_{ξ₀,λ,μ}u‖_{L²L²}/‖u‖_{L∞L²}`.
pub fn gap_smoothing_measure(run: &DispersiveRun, ray: &FlowState, xi0: f64, lambda: f64, mu: f64, c: f64) -> Result<f64> {
    let grid = *run.u[0].grid();
    let mut sq = Vec::with_capacity(run.u.len());
    for (it, u) in run.u.iter().enumerate() {
        let w = ls_weight(grid, ray.rays[it][0].x, lambda)?;
        let g = gap_projection(u, xi0, lambda, mu, c)?;
        sq.push(times_real(&w.field, &g).l2_norm().powi(2));
    }
    Ok(trapezoid(&run.times, &sq).sqrt() / (run.linf_l2() + run.source_norm))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmoothingSetup {
    pub lambda: f64,
    pub v0: f64,
    pub a0: f64,
    pub t_end: f64,
    pub samples: usize,
    pub x0: f64,
}

fn ray_for(setup: &SmoothingSetup, grid: GridSpec, times: &[f64]) -> Result<FlowState> {
    let c = TruncatedCoeffs::constant(grid, setup.v0, setup.a0)?;
    flow_integrate(&c, &[(setup.x0, setup.lambda)], 0.0, times, &FlowOptions { max_dt: 1e-2, band: None })
}

/// κ-scan of the low-frequency form with `S_κδ` data launched at the ray start.
pub fn local_smoothing_scan(kappas: &[f64], setup: &SmoothingSetup) -> Result<ScanReport> {
    let kmax = kappas.iter().cloned().fold(0.0, f64::max);
    let grid = GridSpec::new(((16.0 * kmax).max(1024.0) as usize).next_power_of_two())?;
    let times: Vec<f64> = (0..=setup.samples).map(|k| setup.t_end * k as f64 / setup.samples as f64).collect();
    let ray = ray_for(setup, grid, &times)?;
    let mut pts = Vec::new();
    for &k in kappas {
        let u0 = lp_delta(grid, k, setup.x0);
        let run = exact_run(&u0, setup.lambda, setup.v0, setup.a0, &times);
        pts.push((k, local_smoothing_measure(&run, &ray, k)?));
    }
    ScanReport::from_points(pts, 3)
}

/// Gap-projection ratios `r(μ)` for `S_λδ` data at the ray start.
pub fn gap_smoothing_scan(mus: &[f64], c: f64, setup: &SmoothingSetup) -> Result<Vec<(f64, f64)>> {
    let grid = GridSpec::new(((8.0 * setup.lambda) as usize).next_power_of_two())?;
    let times: Vec<f64> = (0..=setup.samples).map(|k| setup.t_end * k as f64 / setup.samples as f64).collect();
    let ray = ray_for(setup, grid, &times)?;
    let u0 = lp_delta(grid, setup.lambda, setup.x0);
    let run = exact_run(&u0, setup.lambda, setup.v0, setup.a0, &times);
    mus.iter().map(|&mu| Ok((mu, gap_smoothing_measure(&run, &ray, setup.lambda, setup.lambda, mu, c)?))).collect()
}

// ---------------------------------------------------------------------------
// Overlap counting

/// Straight packet tubes `xᵗ = x_m + H_ξ(ξ_j)(t − s₀)` for constant coefficients.
#[derive(Clone, Debug, Serialize)]
pub struct StraightTubes {
    pub lattice: Lattice,
    pub rows: Vec<usize>,
    pub velocity: Vec<f64>,
    pub s0: f64,
}

impl StraightTubes {
    pub fn new(lat: &Lattice, rows: Vec<usize>, v0: f64, a0: f64, s0: f64) -> Self {
        let velocity = rows
            .iter()
            .map(|&j| {
                let xi = lat.xi(j);
                v0 + 0.5 * (a0 / xi.abs()).sqrt() * xi.signum()
            })
            .collect();
        StraightTubes { lattice: *lat, rows, velocity, s0 }
    }

    fn hits(&self, r: usize, t: f64, y: f64) -> Vec<usize> {
        let l = &self.lattice;
        let c = y - self.velocity[r] * (t - self.s0);
        let lo = ((c - l.dx) / l.dx).floor() as i64;
        let mut out = Vec::new();
        for k in lo..=lo + 3 {
            let d = wrap(c - k as f64 * l.dx, l.grid.length);
            // strict, with a guard against rounding at exactly Δx
            if d.abs() < l.dx * (1.0 - 1e-9) {
                out.push(k.rem_euclid(l.m as i64) as usize);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Tubes with `|y − xᵗ| < Δx`.
    pub fn overlap_count(&self, t: f64, y: f64) -> usize {
        (0..self.rows.len()).map(|r| self.hits(r, t, y).len()).sum()
    }

    /// Tubes containing both `(t, y)` and `(s, z)`.
    pub fn two_point_overlap(&self, (t, y): (f64, f64), (s, z): (f64, f64)) -> usize {
        (0..self.rows.len())
            .map(|r| {
                let a = self.hits(r, t, y);
                let b = self.hits(r, s, z);
                a.iter().filter(|m| b.contains(m)).count()
            })
            .sum()
    }

    /// Largest single-point count over a `samples × samples` grid of `(t, y)`.
    pub fn max_count(&self, t_end: f64, samples: usize) -> usize {
        let mut best = 0;
        for a in 0..samples {
            let t = self.s0 + t_end * a as f64 / samples as f64;
            for b in 0..samples {
                let y = self.lattice.grid.length * b as f64 / samples as f64;
                best = best.max(self.overlap_count(t, y));
            }
        }
        best
    }

    /// Largest two-point count with `|t − s| = gap`, maximizing over `z` for a
    /// sweep of base points `y` at time `s₀`.
    pub fn max_two_point(&self, gap: f64, samples: usize) -> usize {
        let l = self.lattice.grid.length;
        let mut best = 0;
        for b in 0..samples {
            let y = self.lattice.dx * b as f64 / samples as f64;
            for c in 0..samples * self.lattice.m {
                let z = l * c as f64 / (samples * self.lattice.m) as f64;
                best = best.max(self.two_point_overlap((self.s0, y), (self.s0 + gap, z)));
            }
        }
        best
    }
}

/// Single-point maxima across λ on the rows `λ/2 ≤ |ξ| ≤ 2λ`.
pub fn overlap_scan(lambdas: &[f64], a0: f64, t_end: f64) -> Result<ScanReport> {
    let mut pts = Vec::new();
    for &lam in lambdas {
        let grid = GridSpec::new(((16.0 * lam) as usize).next_power_of_two())?;
        let lat = Lattice::new(grid, lam)?;
        let tubes = StraightTubes::new(&lat, lat.rows(lam / 2.0, 2.0 * lam), 0.0, a0, 0.0);
        pts.push((lam, tubes.max_count(t_end, 64) as f64));
    }
    ScanReport::from_points(pts, 3)
}

/// Two-point maxima across `|t − s|` at fixed λ.
pub fn two_point_scan(lambda: f64, gaps: &[f64], a0: f64) -> Result<ScanReport> {
    let grid = GridSpec::new(((16.0 * lambda) as usize).next_power_of_two())?;
    let lat = Lattice::new(grid, lambda)?;
    let tubes = StraightTubes::new(&lat, lat.rows(lambda / 2.0, 2.0 * lambda), 0.0, a0, 0.0);
    let pts = gaps.iter().map(|&g| (g, tubes.max_two_point(g, 8) as f64)).collect();
    ScanReport::from_points(pts, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plane_wave_generator() {
        let g = GridSpec::new(256).unwrap();
        let u = ComplexField::mode(g, 40);
        let v = RealField::from_fn(g, |_| 0.3);
        let s = RealField::from_fn(g, |_| 2.0);
        let hu = apply_h(&v, &s, &u, Quantization::Left).unwrap();
        let expect = u.scale(I * (0.3 * 40.0 + 2.0 * 40f64.sqrt()));
        assert!(hu.sub(&expect).unwrap().l2_norm() < 1e-10);
    }

    #[test]
    fn generator_is_linear() {
        let g = GridSpec::new(128).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let v = RealField::from_fn(g, |x| 0.1 * x.sin());
        let s = RealField::from_fn(g, |x| 3.0 + 0.2 * x.cos());
        for _ in 0..10 {
            let q: f64 = r.gen();
            let a = ComplexField::from_fn(g, |x| C64::new((3.0 * x).sin(), q * x.cos()));
            let b = ComplexField::from_fn(g, |x| C64::new((5.0 * x).cos(), 0.0));
            let c = C64::new(r.gen(), r.gen());
            for q in [Quantization::Left, Quantization::Symmetric] {
                let lhs = apply_h(&v, &s, &a.add(&b.scale(c)).unwrap(), q).unwrap();
                let rhs = apply_h(&v, &s, &a, q).unwrap().add(&apply_h(&v, &s, &b, q).unwrap().scale(c)).unwrap();
                assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-12 * (1.0 + lhs.l2_norm()));
            }
        }
    }

    #[test]
    fn quantizations_differ_by_lower_order() {
        let g = GridSpec::new(1024).unwrap();
        let s = RealField::from_fn(g, |x| 3.0 + 0.3 * x.cos());
        let sx = s.deriv(1).sup_norm();
        for k in [16i64, 64, 256] {
            let u = ComplexField::mode(g, k);
            let d = dispersive_term(&s, &u, Quantization::Left)
                .unwrap()
                .sub(&dispersive_term(&s, &u, Quantization::Symmetric).unwrap())
                .unwrap();
            let hm = u.l2_norm() / (k as f64).sqrt();
            assert!(d.l2_norm() <= sx * hm, "{k}: {} vs {}", d.l2_norm(), sx * hm);
        }
    }

    #[test]
    fn rk4_matches_exact_multiplier() {
        let g = GridSpec::new(512).unwrap();
        let c = TruncatedCoeffs::constant(g, 0.2, 9.81).unwrap();
        let u0 = lp_delta(g, 64.0, 1.0);
        let mut spec = RunSpec::new(64.0, 0.0, 0.1);
        spec.band = (0.0, 256.0);
        spec.dt = 2e-4;
        let run = evolve_dispersive(&c, &u0, None, &spec).unwrap();
        let exact = exact_evolve(&u0, 0.2, 9.81, 0.1);
        assert!(run.u.last().unwrap().sub(&exact).unwrap().l2_norm() < 1e-8);
    }

    #[test]
    fn symmetric_generator_conserves_mass() {
        let g = GridSpec::new(512).unwrap();
        let v = RealField::from_fn(g, |x| 0.05 * x.sin());
        let a = RealField::from_fn(g, |x| 9.81 + 0.5 * (2.0 * x).cos());
        let c = TruncatedCoeffs::build(&[0.0], vec![v], vec![a], 256).unwrap();
        let u0 = lp_delta(g, 64.0, 2.0);
        let mut spec = RunSpec::new(64.0, 0.0, 0.25);
        spec.band = (0.0, 256.0);
        let run = evolve_dispersive(&c, &u0, None, &spec).unwrap();
        assert!(run.mass_drift() < 1e-6, "{}", run.mass_drift());
    }

    #[test]
    fn weight_far_from_data_sees_little() {
        let g = GridSpec::new(2048).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| 0.01 * k as f64).collect();
        let u0 = lp_delta(g, 64.0, 0.0);
        let run = exact_run(&u0, 256.0, 0.0, 9.81, &times);
        let setup = SmoothingSetup { lambda: 256.0, v0: 0.0, a0: 9.81, t_end: 0.2, samples: 20, x0: std::f64::consts::PI };
        let ray = ray_for(&setup, g, &times).unwrap();
        assert!(local_smoothing_measure(&run, &ray, 64.0).unwrap() < 1e-3);
        let bad = ray_for(&setup, g, &times[..5]).unwrap();
        assert!(local_smoothing_measure(&run, &bad, 64.0).is_err());
    }

    #[test]
    fn zero_data_has_no_quotient() {
        let g = GridSpec::new(64).unwrap();
        let run = exact_run(&ComplexField::zeros(g), 8.0, 0.0, 9.81, &[0.0, 0.1]);
        assert!(strichartz_quotient(&run).is_none());
    }

    #[test]
    fn tubes_cover_their_centers() {
        let g = GridSpec::new(4096).unwrap();
        let lat = Lattice::new(g, 256.0).unwrap();
        let t = StraightTubes::new(&lat, lat.rows(128.0, 512.0), 0.0, 9.81, 0.0);
        let v = t.velocity[0];
        assert!(t.overlap_count(0.3, lat.x(5) + 0.3 * v) >= 1);
        assert!(t.two_point_overlap((0.0, lat.x(5)), (0.3, lat.x(5) + 0.3 * v)) >= 1);
    }
}
