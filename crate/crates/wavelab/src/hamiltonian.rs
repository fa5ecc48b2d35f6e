//! Hamilton flow of `H = V_λ ξ + √(a_λ|ξ|)`, its linearization, the eikonal
//! phase, and the flow-integration residual for `∂²V_λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paradiff::{paradiff_op, AdmissibleCutoff, SymbolGrid};
use crate::spectral::{lp_low, resample_spectrum, Field, GridSpec, RealField, C64};
use crate::zakharov::{Trajectory, WaveState};

/// `λ` with the low-frequency ratios `c₁ ≪ c ≪ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyConstants {
    pub lambda: f64,
    pub c: f64,
    pub c1: f64,
}

impl FrequencyConstants {
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with(lambda, 0.25, 1.0 / 32.0)
    }

    pub fn with(lambda: f64, c: f64, c1: f64) -> Result<Self> {
        if !(0.0 < c1 && c1 < c && c < 1.0) {
            return Err(Error::Domain(format!("need 0 < c1 < c < 1, got c = {c}, c1 = {c1}")));
        }
        if c1 * lambda < 1.0 {
            return Err(Error::Domain(format!("c1·λ = {} below 1", c1 * lambda)));
        }
        Ok(FrequencyConstants { lambda, c, c1 })
    }

    /// Truncation frequency `c₁λ`.
    pub fn low(&self) -> f64 {
        self.c1 * self.lambda
    }

    /// `(λ^{3/4}, cλ]`.
    pub fn mu_range(&self) -> (f64, f64) {
        (self.lambda.powf(0.75), self.c * self.lambda)
    }
}

/// Pointwise coefficient values and the derivatives the flow needs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Coef {
    pub v: f64,
    pub vx: f64,
    pub vxx: f64,
    /// `√a_λ`
    pub s: f64,
    pub sx: f64,
    pub sxx: f64,
}

#[derive(Clone, Debug)]
struct Table {
    v: [Vec<f64>; 4],
    s: [Vec<f64>; 4],
}

/// Time-tagged truncated coefficients `V_λ`, `a_λ`: fine-grid tables of values and
/// x-derivatives (cubic Hermite in x), linear interpolation in t.
#[derive(Clone, Debug)]
pub struct TruncatedCoeffs {
    pub times: Vec<f64>,
    pub length: f64,
    pub a_min: f64,
    nf: usize,
    tables: Vec<Table>,
    v_fields: Vec<RealField>,
    a_fields: Vec<RealField>,
}

fn derivs4(u: &RealField) -> [Vec<f64>; 4] {
    [u.samples().to_vec(), u.deriv(1).into_samples(), u.deriv(2).into_samples(), u.deriv(3).into_samples()]
}

fn hermite(f: &[f64], d: &[f64], h: f64, x: f64) -> f64 {
    let n = f.len();
    let u = x / h;
    let fl = u.floor();
    let tau = u - fl;
    let i = (fl as i64).rem_euclid(n as i64) as usize;
    let j = (i + 1) % n;
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f[i]
        + (t3 - 2.0 * t2 + tau) * h * d[i]
        + (-2.0 * t3 + 3.0 * t2) * f[j]
        + (t3 - t2) * h * d[j]
}

impl TruncatedCoeffs {
    /// Tables from untruncated `V`, `a` snapshots; applies `S_{≤c₁λ}`.
    pub fn from_fields(times: &[f64], v: &[RealField], a: &[RealField], k: &FrequencyConstants) -> Result<Self> {
        let low = k.low();
        let vl: Vec<RealField> = v.iter().map(|f| lp_low(f, low)).collect::<Result<_>>()?;
        let al: Vec<RealField> = a.iter().map(|f| lp_low(f, low)).collect::<Result<_>>()?;
        let nf = (64.0 * low).max(256.0).max(v[0].grid().n as f64) as usize;
        Self::build(times, vl, al, nf.next_power_of_two())
    }

    /// Tables from already truncated fields.
    pub fn build(times: &[f64], v: Vec<RealField>, a: Vec<RealField>, nf: usize) -> Result<Self> {
        if times.is_empty() || times.len() != v.len() || v.len() != a.len() {
            return Err(Error::Domain("coefficient snapshots and times differ in number".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("coefficient times must increase".into()));
        }
        let length = v[0].grid().length;
        let mut a_min = f64::INFINITY;
        let mut tables = Vec::with_capacity(v.len());
        for (vf, af) in v.iter().zip(&a) {
            let af_fine = af.resample(nf);
            let m = af_fine.samples().iter().cloned().fold(f64::INFINITY, f64::min);
            a_min = a_min.min(m);
            if !(m > 0.0) {
                return Err(Error::Domain(format!("truncated Taylor coefficient reaches {m:.3e} <= 0")));
            }
            let s = RealField::new(*af_fine.grid(), af_fine.samples().iter().map(|x| x.sqrt()).collect())?;
            tables.push(Table { v: derivs4(&vf.resample(nf)), s: derivs4(&s) });
        }
        Ok(TruncatedCoeffs { times: times.to_vec(), length, a_min, nf, tables, v_fields: v, a_fields: a })
    }

    /// Constant `V₀`, `a₀` on a grid.
    pub fn constant(grid: GridSpec, v0: f64, a0: f64) -> Result<Self> {
        Self::build(&[0.0], vec![RealField::from_fn(grid, |_| v0)], vec![RealField::from_fn(grid, |_| a0)], 16)
    }

    /// Truncated traces of a stored Zakharov trajectory.
    pub fn from_trajectory(traj: &Trajectory, k: &FrequencyConstants) -> Result<Self> {
        let mut t = Vec::new();
        let mut v = Vec::new();
        let mut a = Vec::new();
        for s in &traj.snapshots {
            let tr = s.traces.as_ref().ok_or_else(|| Error::Domain("trajectory snapshots carry no traces".into()))?;
            t.push(s.state.t);
            v.push(tr.v.clone());
            a.push(tr.a.clone());
        }
        Self::from_fields(&t, &v, &a, k)
    }

    /// The snapshot nearest to `t`, held constant in time.
    pub fn frozen(&self, t: f64) -> Result<Self> {
        let i = self.nearest(t);
        Self::build(&[self.times[i]], vec![self.v_fields[i].clone()], vec![self.a_fields[i].clone()], self.nf)
    }

    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn is_static(&self) -> bool {
        self.times.len() == 1
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn weights(&self, t: f64) -> (usize, usize, f64) {
        let k = self.times.len();
        if k == 1 || t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= self.times[k - 1] {
            return (k - 1, k - 1, 0.0);
        }
        let j = self.times.partition_point(|&s| s <= t).max(1);
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        (j - 1, j, (t - t0) / (t1 - t0))
    }

    fn eval_table(&self, tb: &Table, x: f64) -> Coef {
        let h = self.length / self.nf as f64;
        Coef {
            v: hermite(&tb.v[0], &tb.v[1], h, x),
            vx: hermite(&tb.v[1], &tb.v[2], h, x),
            vxx: hermite(&tb.v[2], &tb.v[3], h, x),
            s: hermite(&tb.s[0], &tb.s[1], h, x),
            sx: hermite(&tb.s[1], &tb.s[2], h, x),
            sxx: hermite(&tb.s[2], &tb.s[3], h, x),
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Coef {
        let (i, j, w) = self.weights(t);
        let a = self.eval_table(&self.tables[i], x);
        if w == 0.0 {
            return a;
        }
        let b = self.eval_table(&self.tables[j], x);
        let l = |p: f64, q: f64| (1.0 - w) * p + w * q;
        Coef {
            v: l(a.v, b.v),
            vx: l(a.vx, b.vx),
            vxx: l(a.vxx, b.vxx),
            s: l(a.s, b.s),
            sx: l(a.sx, b.sx),
            sxx: l(a.sxx, b.sxx),
        }
    }

    /// `V_λ(t)` and `√a_λ(t)` on an arbitrary grid of the same length.
    pub fn fields_at(&self, t: f64, grid: GridSpec) -> Result<(RealField, RealField)> {
        let (i, j, w) = self.weights(t);
        let mix = |f: &[RealField]| -> RealField {
            let a = resample_spectrum(f[i].spectrum(), grid.n);
            let b = resample_spectrum(f[j].spectrum(), grid.n);
            let s: Vec<C64> = a.iter().zip(&b).map(|(p, q)| *p * (1.0 - w) + *q * w).collect();
            RealField::from_spectrum(grid, s)
        };
        let v = mix(&self.v_fields);
        let a = mix(&self.a_fields);
        let s = RealField::new(grid, a.samples().iter().map(|x| x.max(0.0).sqrt()).collect())?;
        Ok((v, s))
    }

    /// Spatial mean of `√a_λ` averaged over the snapshots.
    pub fn mean_sqrt_a(&self) -> f64 {
        let tot: f64 = self.tables.iter().map(|t| t.s[0].iter().sum::<f64>() / t.s[0].len() as f64).sum();
        tot / self.tables.len() as f64
    }
}

/// `H` and its first and second partials at one phase-space point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianValue {
    pub h: f64,
    pub h_xi: f64,
    pub h_x: f64,
    pub h_xixi: f64,
    pub h_xix: f64,
    pub h_xx: f64,
}

pub fn hamiltonian_eval(c: &Coef, xi: f64) -> Result<HamiltonianValue> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::Domain(format!("Hamiltonian is singular at xi = {xi}")));
    }
    let a = xi.abs();
    let r = a.sqrt();
    let sg = xi.signum();
    Ok(HamiltonianValue {
        h: c.v * xi + c.s * r,
        h_xi: c.v + 0.5 * c.s * sg / r,
        h_x: c.vx * xi + c.sx * r,
        h_xixi: -0.25 * c.s / (a * r),
        h_xix: c.vx + 0.5 * c.sx * sg / r,
        h_xx: c.vxx * xi + c.sxx * r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub max_dt: f64,
    /// Abort when `|ξᵗ|` leaves `[lo, hi]`.
    pub band: Option<(f64, f64)>,
}

impl FlowOptions {
    pub fn for_lambda(lambda: f64) -> Self {
        FlowOptions { max_dt: 1e-3, band: Some((lambda / 4.0, 4.0 * lambda)) }
    }
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { max_dt: 1e-3, band: None }
    }
}

/// Ray state: position, frequency, Legendre phase and the Jacobian
/// `[∂_x xᵗ, ∂_ξ xᵗ, ∂_x ξᵗ, ∂_ξ ξᵗ]` with respect to the data at `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RayPoint {
    pub x: f64,
    pub xi: f64,
    pub phase: f64,
    pub jac: [f64; 4],
}

fn ray_rhs(c: &TruncatedCoeffs, t: f64, y: &[f64; 7]) -> Result<[f64; 7]> {
    let h = hamiltonian_eval(&c.eval(t, y[0]), y[1])?;
    let [a, b, cc, d] = [y[3], y[4], y[5], y[6]];
    Ok([
        h.h_xi,
        -h.h_x,
        y[1] * h.h_xi - h.h,
        h.h_xix * a + h.h_xixi * cc,
        h.h_xix * b + h.h_xixi * d,
        -h.h_xx * a - h.h_xix * cc,
        -h.h_xx * b - h.h_xix * d,
    ])
}

fn rk4_segment(c: &TruncatedCoeffs, y: &mut [f64; 7], t0: f64, t1: f64, max_dt: f64, band: Option<(f64, f64)>) -> Result<()> {
    if t1 == t0 {
        return Ok(());
    }
    let steps = ((t1 - t0).abs() / max_dt).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let add = |y: &[f64; 7], k: &[f64; 7], s: f64| -> [f64; 7] {
        let mut o = *y;
        for i in 0..7 {
            o[i] += s * k[i];
        }
        o
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = ray_rhs(c, t, y)?;
        let k2 = ray_rhs(c, t + 0.5 * h, &add(y, &k1, 0.5 * h))?;
        let k3 = ray_rhs(c, t + 0.5 * h, &add(y, &k2, 0.5 * h))?;
        let k4 = ray_rhs(c, t + h, &add(y, &k3, h))?;
        for j in 0..7 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalAbort { t: t + h, reason: "non-finite ray state".into() });
        }
        if let Some((lo, hi)) = band {
            let a = y[1].abs();
            if a < lo || a > hi {
                return Err(Error::BandExit { t: t + h, xi: y[1] });
            }
        }
    }
    Ok(())
}

/// Rays started at time `s`, sampled at `times`.
#[derive(Clone, Debug, Serialize)]
pub struct FlowState {
    pub s: f64,
    pub times: Vec<f64>,
    pub init: Vec<(f64, f64)>,
    /// `rays[it][ray]`
    pub rays: Vec<Vec<RayPoint>>,
}

fn breakpoints(c: &TruncatedCoeffs, a: f64, b: f64) -> Vec<f64> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut v: Vec<f64> = c.times.iter().cloned().filter(|&t| t > lo && t < hi).collect();
    if a > b {
        v.reverse();
    }
    v.push(b);
    v
}

fn integrate_one(c: &TruncatedCoeffs, x: f64, xi: f64, s: f64, order: &[usize], times: &[f64], opts: &FlowOptions) -> Result<Vec<RayPoint>> {
    let mut out = vec![RayPoint { x, xi, phase: 0.0, jac: [1.0, 0.0, 0.0, 1.0] }; times.len()];
    // forward and backward passes from s
    for forward in [true, false] {
        let mut y = [x, xi, 0.0, 1.0, 0.0, 0.0, 1.0];
        let mut t = s;
        let idx: Vec<usize> = if forward {
            order.iter().cloned().filter(|&i| times[i] >= s).collect()
        } else {
            order.iter().rev().cloned().filter(|&i| times[i] < s).collect()
        };
        for i in idx {
            for b in breakpoints(c, t, times[i]) {
                rk4_segment(c, &mut y, t, b, opts.max_dt, opts.band)?;
                t = b;
            }
            out[i] = RayPoint { x: y[0], xi: y[1], phase: y[2], jac: [y[3], y[4], y[5], y[6]] };
        }
    }
    Ok(out)
}

/// Integrates the Hamilton equations and their linearization with RK4.
/// Steps are at most `opts.max_dt` and land on every coefficient snapshot.
pub fn flow_integrate(c: &TruncatedCoeffs, init: &[(f64, f64)], s: f64, times: &[f64], opts: &FlowOptions) -> Result<FlowState> {
    if !c.is_static() {
        let (lo, hi) = c.span();
        let eps = 1e-12 * (1.0 + hi.abs());
        for &t in times.iter().chain(std::iter::once(&s)) {
            if t < lo - eps || t > hi + eps {
                return Err(Error::Domain(format!("time {t} outside the coefficient span [{lo}, {hi}]")));
            }
        }
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap());
    let per_ray: Vec<Vec<RayPoint>> =
        init.iter().map(|&(x, xi)| integrate_one(c, x, xi, s, &order, times, opts)).collect::<Result<_>>()?;
    let rays = (0..times.len()).map(|it| per_ray.iter().map(|r| r[it]).collect()).collect();
    Ok(FlowState { s, times: times.to_vec(), init: init.to_vec(), rays })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SpreadingReport {
    /// Per time: `(t − s, min ratio, max ratio)` over rays.
    pub ratios: Vec<(f64, f64, f64)>,
    /// Smallest R² of the per-ray linear fit of `−∂_ξxᵗ` against `t − s`.
    pub min_r2: f64,
    /// Whether `∂_ξxᵗ` has the sign of `s − t` at every stored time.
    pub sign_ok: bool,
}

impl FlowState {
    /// `sup |∂_x xᵗ − 1|`, the scaled bilipschitz defect.
    pub fn bilipschitz_defect(&self) -> f64 {
        self.rays.iter().flatten().fold(0.0, |m, r| m.max((r.jac[0] - 1.0).abs()))
    }

    /// Band preservation `max ||ξᵗ|/|ξ| − 1|`.
    pub fn band_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for row in &self.rays {
            for (r, &(_, xi)) in row.iter().zip(&self.init) {
                m = m.max((r.xi.abs() / xi.abs() - 1.0).abs());
            }
        }
        m
    }

    /// Compares `−∂_ξxᵗ` with `(t−s)·¼·mean(√a_λ)·λ^{−3/2}`.
    pub fn spreading_check(&self, lambda: f64, mean_sqrt_a: f64) -> Result<SpreadingReport> {
        let scale = 0.25 * mean_sqrt_a * lambda.powf(-1.5);
        let mut rep = SpreadingReport { min_r2: 1.0, sign_ok: true, ..Default::default() };
        for (it, &t) in self.times.iter().enumerate() {
            let dt = t - self.s;
            if dt == 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in &self.rays[it] {
                let q = -r.jac[1] / (dt * scale);
                lo = lo.min(q);
                hi = hi.max(q);
                if (-r.jac[1]) * dt <= 0.0 {
                    rep.sign_ok = false;
                }
            }
            rep.ratios.push((dt, lo, hi));
        }
        let ts: Vec<f64> = self.times.iter().map(|t| t - self.s).collect();
        for k in 0..self.init.len() {
            let ys: Vec<f64> = self.rays.iter().map(|row| -row[k].jac[1]).collect();
            let f = crate::fit::linear_fit(&ts, &ys)?;
            rep.min_r2 = rep.min_r2.min(f.r2);
        }
        Ok(rep)
    }

    /// Measured constants of the two-point ray geometry:
    /// `C₁ = max |ξ₁ − ξ₂||t−s|/λ^{3/4}` over pairs within `λ^{−3/4}` at both times, and
    /// `C₂ = max |Δxᵗ|/(|Δxˢ| + λ^{−1/2}|t−s|)` over all pairs.
    pub fn two_point_geometry(&self, lambda: f64, length: f64) -> (f64, f64) {
        let w = lambda.powf(-0.75);
        let d = |a: f64, b: f64| crate::paradiff::wrap(a - b, length).abs();
        let (mut c1, mut c2) = (0.0f64, 0.0f64);
        let nt = self.times.len();
        let nr = self.init.len();
        for i in 0..nr {
            for j in i + 1..nr {
                let dxi = (self.init[i].1 - self.init[j].1).abs();
                for a in 0..nt {
                    let da = d(self.rays[a][i].x, self.rays[a][j].x);
                    for b in a + 1..nt {
                        let db = d(self.rays[b][i].x, self.rays[b][j].x);
                        let gap = (self.times[a] - self.times[b]).abs();
                        if da <= w && db <= w {
                            c1 = c1.max(dxi * gap / lambda.powf(0.75));
                        }
                        c2 = c2.max(db / (da + lambda.powf(-0.5) * gap)).max(da / (db + lambda.powf(-0.5) * gap));
                    }
                }
            }
        }
        (c1, c2)
    }
}

// ---------------------------------------------------------------------------
// Eikonal phase

/// Phase `ψ(t, y)` of one frequency row, carried by a fan of rays launched at
/// `s₀` from `z_j` with data `ψ(s₀, y) = ξ₀(y − x₀)`.
#[derive(Clone, Debug)]
pub struct EikonalPhase {
    pub xi0: f64,
    pub x0: f64,
    pub s0: f64,
    pub z: Vec<f64>,
    pub periodic: bool,
    pub length: f64,
    pub flow: FlowState,
}

/// Launches the fan and checks that rays stay ordered at every stored time.
pub fn eikonal_solve(
    c: &TruncatedCoeffs,
    x0: f64,
    xi0: f64,
    s0: f64,
    z: Vec<f64>,
    periodic: bool,
    times: &[f64],
    opts: &FlowOptions,
) -> Result<EikonalPhase> {
    let init: Vec<(f64, f64)> = z.iter().map(|&zz| (zz, xi0)).collect();
    let flow = flow_integrate(c, &init, s0, times, opts)?;
    let length = c.length;
    for (it, row) in flow.rays.iter().enumerate() {
        if row.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(Error::Caustic { t: flow.times[it] });
        }
        if periodic && row.last().unwrap().x >= row[0].x + length {
            return Err(Error::Caustic { t: flow.times[it] });
        }
    }
    Ok(EikonalPhase { xi0, x0, s0, z, periodic, length, flow })
}

/// Tube fan: `2·half_rays + 1` rays spread evenly over `x₀ ± half_width`.
pub fn eikonal_tube(
    c: &TruncatedCoeffs,
    x0: f64,
    xi0: f64,
    s0: f64,
    half_width: f64,
    half_rays: usize,
    times: &[f64],
    opts: &FlowOptions,
) -> Result<EikonalPhase> {
    let h = half_width / half_rays as f64;
    let z = (0..=2 * half_rays).map(|j| x0 + (j as f64 - half_rays as f64) * h).collect();
    eikonal_solve(c, x0, xi0, s0, z, false, times, opts)
}

impl EikonalPhase {
    fn node(&self, it: usize, j: usize, wraps: i64) -> (f64, f64, f64) {
        let r = &self.flow.rays[it][j];
        let l = wraps as f64 * self.length;
        (r.x + l, self.xi0 * (self.z[j] + l - self.x0) + r.phase, r.xi)
    }

    /// `(ψ, ∂_yψ)` at stored time index `it`; `y` is a real (unwrapped) position.
    pub fn eval(&self, it: usize, y: f64) -> Result<(f64, f64)> {
        let row = &self.flow.rays[it];
        let n = row.len();
        let (j, wraps) = if self.periodic {
            let base = row[0].x;
            let k = ((y - base) / self.length).floor();
            let yy = y - k * self.length;
            let j = row.partition_point(|r| r.x <= yy).saturating_sub(1);
            (j, k as i64)
        } else {
            if y < row[0].x || y > row[n - 1].x {
                return Err(Error::Domain(format!("y = {y} outside the phase tube at t = {}", self.flow.times[it])));
            }
            (row.partition_point(|r| r.x <= y).saturating_sub(1).min(n - 2), 0)
        };
        let (xa, pa, da) = self.node(it, j, wraps);
        let (xb, pb, db) = if j + 1 < n { self.node(it, j + 1, wraps) } else { self.node(it, 0, wraps + 1) };
        let h = xb - xa;
        let tau = (y - xa) / h;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * pa + (t3 - 2.0 * t2 + tau) * h * da + (-2.0 * t3 + 3.0 * t2) * pb + (t3 - t2) * h * db;
        let der = ((6.0 * t2 - 6.0 * tau) * pa + (3.0 * t2 - 4.0 * tau + 1.0) * h * da + (-6.0 * t2 + 6.0 * tau) * pb
            + (3.0 * t2 - 2.0 * tau) * h * db)
            / h;
        Ok((val, der))
    }

    /// Index of the ray launched closest to `x`.
    pub fn ray_index(&self, x: f64) -> usize {
        let mut best = 0;
        for (j, &z) in self.z.iter().enumerate() {
            if (z - x).abs() < (self.z[best] - x).abs() {
                best = j;
            }
        }
        best
    }

    /// `sup |∂_yψ − ξᵗ|` over the tube `|y − xᵗ| ≤ width`, with `ξᵗ` on the central ray.
    pub fn drift(&self, width: f64, samples: usize) -> Result<f64> {
        let c = self.ray_index(self.x0);
        let mut m: f64 = 0.0;
        for it in 0..self.flow.times.len() {
            let r = self.flow.rays[it][c];
            for k in 0..=samples {
                let y = r.x - width + 2.0 * width * k as f64 / samples as f64;
                if let Ok((_, d)) = self.eval(it, y) {
                    m = m.max((d - r.xi).abs());
                }
            }
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// Flow-integration residual

/// `F₁ = T_{q⁻¹}∂³ₓη_λ` with `q = |ξ| − iη_xξ`.
pub fn compute_f1(eta: &RealField, k: &FrequencyConstants) -> Result<RealField> {
    let eta_l = lp_low(eta, k.low())?;
    let ex: Vec<f64> = eta.deriv(1).into_samples();
    if ex.iter().any(|e| e.abs() >= 1.0) {
        return Err(Error::Domain("slope |η_x| >= 1; q⁻¹ guard |q| >= |ξ|/2 not asserted".into()));
    }
    let sym = SymbolGrid::new(*eta.grid(), -1.0, 0.0, move |j, xi| C64::new(1.0, 0.0) / C64::new(xi.abs(), -ex[j] * xi));
    paradiff_op(&sym, &eta_l.deriv(3), &AdmissibleCutoff::default())
}

#[derive(Clone, Debug, Serialize)]
pub struct F1Row {
    pub t: f64,
    pub gv_sup: f64,
    pub d2v_sup: f64,
}

/// `G_V = ∂²ₓV_λ − (∂_t + V_λ∂_x)F₁` at the interior snapshots (centered in t).
pub fn integration_residual(traj: &Trajectory, k: &FrequencyConstants) -> Result<Vec<F1Row>> {
    let sn = &traj.snapshots;
    if sn.len() < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, got: sn.len() });
    }
    let f1: Vec<RealField> = sn.iter().map(|s| compute_f1(&s.state.eta, k)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for i in 1..sn.len() - 1 {
        let tr = sn[i].traces.as_ref().ok_or_else(|| Error::Domain("trajectory snapshots carry no traces".into()))?;
        let vl = lp_low(&tr.v, k.low())?;
        let d2v = vl.deriv(2);
        let ht = sn[i + 1].state.t - sn[i - 1].state.t;
        let fx = f1[i].deriv(1);
        let n = vl.samples().len();
        let gv: Vec<f64> = (0..n)
            .map(|j| {
                let lf = (f1[i + 1].samples()[j] - f1[i - 1].samples()[j]) / ht + vl.samples()[j] * fx.samples()[j];
                d2v.samples()[j] - lf
            })
            .collect();
        rows.push(F1Row {
            t: sn[i].state.t,
            gv_sup: gv.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            d2v_sup: d2v.sup_norm(),
        });
    }
    Ok(rows)
}

/// `s₀` minimizing `λ^{−1/2}‖F₁(s)‖_∞` over snapshots; ties go to the earliest.
pub fn select_s0(states: &[WaveState], k: &FrequencyConstants) -> Result<(usize, f64)> {
    if states.is_empty() {
        return Err(Error::InsufficientSnapshots { needed: 1, got: 0 });
    }
    let mut best = (0, f64::INFINITY);
    for (i, s) in states.iter().enumerate() {
        let v = k.lambda.powf(-0.5) * compute_f1(&s.eta, k)?.sup_norm();
        if v < best.1 {
            best = (i, v);
        }
    }
    Ok((best.0, states[best.0].t))
}
