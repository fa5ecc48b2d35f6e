//! Wave-packet lattice, the tight frame built on it, data matching, and packets
//! `λ^{3/8}χ_T e^{iψ_T}` riding the Hamilton flow.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dispersive::{apply_h, dispersive_term, Quantization};
use crate::error::{Error, Result};
use crate::hamiltonian::{eikonal_solve, eikonal_tube, hamiltonian_eval, EikonalPhase, FlowOptions, TruncatedCoeffs};
use crate::spectral::{mode_of, real_multiplier, ComplexField, Field, GridSpec, C64};

/// Unnormalized smooth bump on `(−1, 1)`.
pub fn chi_raw(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Frame profile `χ = χ̃/√(Σ_m χ̃(·−m)²)`, so that `Σ_m χ(s−m)² = 1`.
pub fn chi(s: f64) -> f64 {
    let c = chi_raw(s);
    if c == 0.0 {
        return 0.0;
    }
    let f = s.floor();
    let mut q = 0.0;
    for m in -1..=2 {
        q += chi_raw(s - f + 1.0 - m as f64).powi(2);
    }
    c / q.sqrt()
}

/// Phase-space lattice: positions `mΔx` and frequency classes `jΔξ` (mod `n`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lattice {
    pub lambda: f64,
    pub grid: GridSpec,
    /// position count `M`
    pub m: usize,
    pub dx: f64,
    /// frequency class count `J = n k₀/Δξ`
    pub j: usize,
    pub dxi: f64,
}

impl Lattice {
    /// `Δξ = 2^{⌊¾log₂λ + ½⌋}`, `M = round(Lλ^{3/4})`.
    pub fn new(grid: GridSpec, lambda: f64) -> Result<Self> {
        let dxi = 2f64.powi((0.75 * lambda.log2() + 0.5).floor() as i32);
        let q = dxi / grid.k0();
        if (q - q.round()).abs() > 1e-9 || grid.n % (q.round() as usize) != 0 {
            return Err(Error::Domain(format!("frequency spacing {dxi} incompatible with the grid")));
        }
        let j = grid.n / q.round() as usize;
        let m = (grid.length * lambda.powf(0.75)).round() as usize;
        if m <= 2 * dxi as usize * (grid.length / (2.0 * PI)).round().max(1.0) as usize {
            return Err(Error::Domain("window too wide for the frequency spacing".into()));
        }
        if 4.0 * lambda >= grid.k_max() {
            return Err(Error::Domain(format!("grid k_max {} cannot hold 4λ = {}", grid.k_max(), 4.0 * lambda)));
        }
        Ok(Lattice { lambda, grid, m, dx: grid.length / m as f64, j, dxi })
    }

    pub fn x(&self, m: usize) -> f64 {
        m as f64 * self.dx
    }

    pub fn xi(&self, j: usize) -> f64 {
        mode_of(j, self.j) as f64 * self.dxi
    }

    /// Classes with `|ξ| ∈ [lo, hi]`.
    pub fn rows(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.j).filter(|&j| (lo..=hi).contains(&self.xi(j).abs())).collect()
    }

    /// The widened packet rows `|ξ| ∈ [λ/4, 4λ]`.
    pub fn packet_rows(&self) -> Vec<usize> {
        self.rows(self.lambda / 4.0, 4.0 * self.lambda)
    }

    pub fn amplitude(&self) -> f64 {
        self.lambda.powf(0.375)
    }

    /// `λ^{3/4}·2π/Δξ`, the frame constant in exact arithmetic.
    pub fn frame_constant_analytic(&self) -> f64 {
        self.lambda.powf(0.75) * 2.0 * PI / self.dxi
    }

    /// Grid window `(first unwrapped index, count)` meeting `|y − c| < Δx`.
    fn window(&self, c: f64) -> (i64, usize) {
        let h = self.grid.dx();
        let lo = ((c - self.dx) / h).ceil() as i64;
        let hi = ((c + self.dx) / h).floor() as i64;
        (lo, (hi - lo + 1).max(0) as usize)
    }
}

/// Frame coefficients on the full lattice, `data[m·J + j]`.
#[derive(Clone, Debug)]
pub struct FrameCoeffs {
    pub lattice: Lattice,
    pub data: Vec<C64>,
}

impl FrameCoeffs {
    pub fn zeros(lattice: Lattice) -> Self {
        FrameCoeffs { lattice, data: vec![C64::new(0.0, 0.0); lattice.m * lattice.j] }
    }

    pub fn get(&self, m: usize, j: usize) -> C64 {
        self.data[m * self.lattice.j + j]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Keeps only the listed rows.
    pub fn restrict(&mut self, rows: &[usize]) {
        let mut keep = vec![false; self.lattice.j];
        for &r in rows {
            keep[r] = true;
        }
        for (i, c) in self.data.iter_mut().enumerate() {
            if !keep[i % self.lattice.j] {
                *c = C64::new(0.0, 0.0);
            }
        }
    }

    pub fn axpy(&mut self, s: f64, o: &FrameCoeffs) {
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += *b * s;
        }
    }

    /// Nonzero entries as `(x, ξ, c)`.
    pub fn entries(&self) -> Vec<(f64, f64, C64)> {
        let l = &self.lattice;
        let mut out = Vec::new();
        for m in 0..l.m {
            for j in 0..l.j {
                let c = self.get(m, j);
                if c.norm_sqr() > 0.0 {
                    out.push((l.x(m), l.xi(j), c));
                }
            }
        }
        out
    }
}

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(j: usize) -> Plans {
    let mut p = FftPlanner::new();
    Plans { fwd: p.plan_fft_forward(j), inv: p.plan_fft_inverse(j) }
}

/// `c_T = ∫ u v̄_T` with `v_T = λ^{3/8}χ((y−x_m)/Δx)e^{iξ_j(y−x_m)}`.
pub fn frame_decompose(u: &ComplexField, lat: &Lattice) -> Result<FrameCoeffs> {
    lat.grid.check_same(u.grid())?;
    let n = lat.grid.n as i64;
    let h = lat.grid.dx();
    let p = plans(lat.j);
    let amp = lat.amplitude() * h;
    let mut out = FrameCoeffs::zeros(*lat);
    let mut buf = vec![C64::new(0.0, 0.0); lat.j];
    let us = u.samples();
    for m in 0..lat.m {
        let xm = lat.x(m);
        buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
        let (lo, cnt) = lat.window(xm);
        for k in 0..cnt as i64 {
            let i = lo + k;
            let w = chi((i as f64 * h - xm) / lat.dx);
            buf[i.rem_euclid(lat.j as i64) as usize] += us[i.rem_euclid(n) as usize] * w;
        }
        p.fwd.process(&mut buf);
        for j in 0..lat.j {
            out.data[m * lat.j + j] = buf[j] * C64::from_polar(amp, lat.xi(j) * xm);
        }
    }
    Ok(out)
}

/// `Σ_T c_T v_T`, without the frame constant.
pub fn frame_synthesize(c: &FrameCoeffs) -> ComplexField {
    let lat = &c.lattice;
    let n = lat.grid.n as i64;
    let h = lat.grid.dx();
    let p = plans(lat.j);
    let amp = lat.amplitude();
    let mut out = vec![C64::new(0.0, 0.0); lat.grid.n];
    let mut buf = vec![C64::new(0.0, 0.0); lat.j];
    for m in 0..lat.m {
        let row = &c.data[m * lat.j..(m + 1) * lat.j];
        if row.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let xm = lat.x(m);
        for j in 0..lat.j {
            buf[j] = row[j] * C64::from_polar(1.0, -lat.xi(j) * xm);
        }
        p.inv.process(&mut buf);
        let (lo, cnt) = lat.window(xm);
        for k in 0..cnt as i64 {
            let i = lo + k;
            let w = amp * chi((i as f64 * h - xm) / lat.dx);
            out[i.rem_euclid(n) as usize] += buf[i.rem_euclid(lat.j as i64) as usize] * w;
        }
    }
    ComplexField::new(lat.grid, out).expect("grid sized")
}

/// Frame constant measured by applying the frame operator to `e^{iλx}`.
pub fn measure_frame_constant(lat: &Lattice) -> Result<f64> {
    let mode = (lat.lambda / lat.grid.k0()).round() as i64;
    let e = ComplexField::mode(lat.grid, mode);
    let s = frame_synthesize(&frame_decompose(&e, lat)?);
    let num: C64 = s.samples().iter().zip(e.samples()).map(|(a, b)| a * b.conj()).sum();
    let den: f64 = e.samples().iter().map(|b| b.norm_sqr()).sum();
    Ok(num.re / den)
}

/// `reconstruct(c) = Σ c_T v_T / C`.
pub fn frame_reconstruct(c: &FrameCoeffs, constant: f64) -> ComplexField {
    frame_synthesize(c).scale(C64::new(1.0 / constant, 0.0))
}

/// Relative spectral mass of `u` outside `lo ≤ |ξ| ≤ hi`.
pub fn band_leakage<F: Field>(u: &F, lo: f64, hi: f64) -> f64 {
    let g = u.grid();
    let (mut inside, mut outside) = (0.0, 0.0);
    for (j, z) in u.spectrum().iter().enumerate() {
        let a = g.xi(j).abs();
        if a >= lo && a <= hi {
            inside += z.norm_sqr();
        } else {
            outside += z.norm_sqr();
        }
    }
    if inside + outside == 0.0 {
        0.0
    } else {
        (outside / (inside + outside)).sqrt()
    }
}

/// Sharp projection onto `lo ≤ |ξ| ≤ hi`.
pub fn sharp_band<F: Field>(u: &F, lo: f64, hi: f64) -> F {
    real_multiplier(u, |x| if x.abs() >= lo && x.abs() <= hi { 1.0 } else { 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchReport {
    pub iterations: usize,
    pub residual: f64,
    /// Largest ratio of consecutive residuals.
    pub contraction: f64,
    pub history: Vec<f64>,
    pub frame_constant: f64,
}

/// Iterates `a ← a + decompose(r)/C` on the packet rows, with
/// `r = u₀ − S_λ Σ a_T v_T` and `S_λ` the sharp projection onto `[λ/2, 2λ]`.
pub fn match_data(u0: &ComplexField, lat: &Lattice, tol: f64, max_iter: usize) -> Result<(FrameCoeffs, MatchReport)> {
    let cst = measure_frame_constant(lat)?;
    let rows = lat.packet_rows();
    let norm0 = u0.l2_norm();
    let mut a = FrameCoeffs::zeros(*lat);
    let mut rep = MatchReport { iterations: 0, residual: 0.0, contraction: 0.0, history: vec![1.0], frame_constant: cst };
    if norm0 == 0.0 {
        return Ok((a, rep));
    }
    let mut r = u0.clone();
    let mut prev = 1.0;
    for it in 1..=max_iter {
        let mut d = frame_decompose(&r, lat)?;
        d.restrict(&rows);
        a.axpy(1.0 / cst, &d);
        let s = sharp_band(&frame_synthesize(&a), lat.lambda / 2.0, 2.0 * lat.lambda);
        r = u0.sub(&s)?;
        let rel = r.l2_norm() / norm0;
        rep.iterations = it;
        rep.residual = rel;
        rep.history.push(rel);
        rep.contraction = rep.contraction.max(rel / prev);
        if rep.contraction >= 0.9 {
            return Err(Error::NonContraction { factor: rep.contraction });
        }
        if rel <= tol {
            break;
        }
        prev = rel;
    }
    Ok((a, rep))
}

// ---------------------------------------------------------------------------
// Packets

fn paint(
    lat: &Lattice,
    out: &mut [C64],
    center: f64,
    coef: C64,
    phase: impl Fn(f64) -> Result<f64>,
) -> Result<()> {
    let n = lat.grid.n as i64;
    let h = lat.grid.dx();
    let (lo, cnt) = lat.window(center);
    let amp = lat.amplitude();
    for k in 0..cnt as i64 {
        let i = lo + k;
        let y = i as f64 * h;
        let w = chi((y - center) / lat.dx);
        if w == 0.0 {
            continue;
        }
        out[i.rem_euclid(n) as usize] += coef * C64::from_polar(amp * w, phase(y)?);
    }
    Ok(())
}

/// One packet with its own eikonal tube of `65` rays over `x ± 4Δx`.
#[derive(Clone, Debug)]
pub struct Packet {
    pub lattice: Lattice,
    pub m: usize,
    pub j: usize,
    pub phase: EikonalPhase,
    center: usize,
}

impl Packet {
    pub fn launch(lat: &Lattice, c: &TruncatedCoeffs, s0: f64, m: usize, j: usize, times: &[f64], opts: &FlowOptions) -> Result<Self> {
        let (x, xi) = (lat.x(m), lat.xi(j));
        let phase = eikonal_tube(c, x, xi, s0, 4.0 * lat.dx, 32, times, opts)?;
        let center = phase.ray_index(x);
        Ok(Packet { lattice: *lat, m, j, phase, center })
    }

    pub fn center(&self, it: usize) -> f64 {
        self.phase.flow.rays[it][self.center].x
    }

    pub fn xi_t(&self, it: usize) -> f64 {
        self.phase.flow.rays[it][self.center].xi
    }

    pub fn sample(&self, it: usize) -> Result<ComplexField> {
        let mut out = vec![C64::new(0.0, 0.0); self.lattice.grid.n];
        paint(&self.lattice, &mut out, self.center(it), C64::new(1.0, 0.0), |y| Ok(self.phase.eval(it, y)?.0))?;
        ComplexField::new(self.lattice.grid, out)
    }
}

/// Control packet with the coefficients frozen at `(s₀, x)`: linear phase
/// `ξ(y−x) − ω(t−s₀)` carried at the frozen group velocity.
#[derive(Clone, Copy, Debug)]
pub struct FrozenPacket {
    pub lattice: Lattice,
    pub x: f64,
    pub xi: f64,
    pub s0: f64,
    pub velocity: f64,
    pub omega: f64,
}

impl FrozenPacket {
    pub fn new(lat: &Lattice, c: &TruncatedCoeffs, s0: f64, m: usize, j: usize) -> Result<Self> {
        let (x, xi) = (lat.x(m), lat.xi(j));
        let h = hamiltonian_eval(&c.eval(s0, x), xi)?;
        Ok(FrozenPacket { lattice: *lat, x, xi, s0, velocity: h.h_xi, omega: h.h })
    }

    pub fn sample(&self, t: f64) -> Result<ComplexField> {
        let mut out = vec![C64::new(0.0, 0.0); self.lattice.grid.n];
        let d = t - self.s0;
        let c = self.x + self.velocity * d;
        paint(&self.lattice, &mut out, c, C64::new(1.0, 0.0), |y| Ok(self.xi * (y - self.x) - self.omega * d))?;
        ComplexField::new(self.lattice.grid, out)
    }
}

/// Packets of whole frequency rows, each row carried by one periodic ray fan
/// with `rays_per_cell` rays per lattice cell.
#[derive(Clone, Debug)]
pub struct PacketFamily {
    pub lattice: Lattice,
    pub s0: f64,
    pub times: Vec<f64>,
    pub rows: Vec<(usize, EikonalPhase)>,
    pub rays_per_cell: usize,
}

impl PacketFamily {
    pub fn launch(
        lat: &Lattice,
        c: &TruncatedCoeffs,
        s0: f64,
        rows: &[usize],
        times: &[f64],
        rays_per_cell: usize,
        opts: &FlowOptions,
    ) -> Result<Self> {
        let h = lat.dx / rays_per_cell as f64;
        let z: Vec<f64> = (0..lat.m * rays_per_cell).map(|i| i as f64 * h).collect();
        let rows = rows
            .iter()
            .map(|&j| Ok((j, eikonal_solve(c, 0.0, lat.xi(j), s0, z.clone(), true, times, opts)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PacketFamily { lattice: *lat, s0, times: times.to_vec(), rows, rays_per_cell })
    }

    /// Center `xᵗ` of packet `(m, row)` at stored time `it`.
    pub fn center(&self, it: usize, row: usize, m: usize) -> f64 {
        self.rows[row].1.flow.rays[it][m * self.rays_per_cell].x
    }

    /// `Σ_T c_T u_T(t)` at stored time `it`.
    pub fn superpose(&self, c: &FrameCoeffs, it: usize) -> Result<ComplexField> {
        let lat = &self.lattice;
        let mut out = vec![C64::new(0.0, 0.0); lat.grid.n];
        for (r, (j, ph)) in self.rows.iter().enumerate() {
            let xi = lat.xi(*j);
            for m in 0..lat.m {
                let a = c.get(m, *j);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let shift = xi * lat.x(m);
                paint(lat, &mut out, self.center(it, r, m), a, |y| Ok(ph.eval(it, y)?.0 - shift))?;
            }
        }
        ComplexField::new(lat.grid, out)
    }

    /// Random unit-ℓ² coefficients on the family's rows.
    pub fn random_coeffs<R: Rng>(&self, rng: &mut R) -> FrameCoeffs {
        let mut c = FrameCoeffs::zeros(self.lattice);
        for &(j, _) in &self.rows {
            for m in 0..self.lattice.m {
                let (a, b): (f64, f64) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                c.data[m * self.lattice.j + j] = C64::new(a, b);
            }
        }
        let s = c.norm_sq().sqrt();
        c.data.iter_mut().for_each(|z| *z /= s);
        c
    }
}

// ---------------------------------------------------------------------------
// Residual and orthogonality

/// Time samples `t_k` with centered neighbours `t_k ± δ`, flattened as
/// `[t₀−δ, t₀, t₀+δ, t₁−δ, …]`.
#[derive(Clone, Debug)]
pub struct ResidualTimes {
    pub span: (f64, f64),
    pub centers: Vec<f64>,
    pub delta: f64,
}

impl ResidualTimes {
    pub fn new(span: (f64, f64), count: usize, delta: f64) -> Self {
        let w = span.1 - span.0 - 2.0 * delta;
        let centers = (0..count).map(|k| span.0 + delta + w * (k as f64 + 0.5) / count as f64).collect();
        ResidualTimes { span, centers, delta }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.centers.iter().flat_map(|&t| [t - self.delta, t, t + self.delta]).collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualReport {
    pub residual: f64,
    pub dispersive: f64,
    pub ratio: f64,
}

/// `‖(∂_t + iH)S_λu‖_{L²L²}` against `‖√(a_λ|D|)u‖_{L²L²}`, with `sample(3k+i)`
/// the packet at `flat()[3k+i]` and `iH` the left quantization.
pub fn packet_residual(
    sample: impl Fn(usize) -> Result<ComplexField>,
    rt: &ResidualTimes,
    c: &TruncatedCoeffs,
    lambda: f64,
) -> Result<ResidualReport> {
    let (lo, hi) = (lambda / 2.0, 2.0 * lambda);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &t) in rt.centers.iter().enumerate() {
        let um = sharp_band(&sample(3 * k)?, lo, hi);
        let u0 = sample(3 * k + 1)?;
        let up = sharp_band(&sample(3 * k + 2)?, lo, hi);
        let grid = *u0.grid();
        let (v, s) = c.fields_at(t, grid)?;
        let dt = up.sub(&um)?.scale(C64::new(0.5 / rt.delta, 0.0));
        let hu = apply_h(&v, &s, &sharp_band(&u0, lo, hi), Quantization::Left)?;
        num += dt.add(&hu)?.l2_norm().powi(2);
        den += dispersive_term(&s, &u0, Quantization::Left)?.l2_norm().powi(2);
    }
    let w = (rt.span.1 - rt.span.0) / rt.centers.len() as f64;
    let (num, den) = ((num * w).sqrt(), (den * w).sqrt());
    Ok(ResidualReport { residual: num, dispersive: den, ratio: if den > 0.0 { num / den } else { 0.0 } })
}

/// `‖Σ c_T u_T(t)‖² / Σ|c_T|²` for `trials` random unit coefficient sets; returns the max.
pub fn superposition_ratio<R: Rng>(fam: &PacketFamily, it: usize, trials: usize, rng: &mut R) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let c = fam.random_coeffs(rng);
        let u = fam.superpose(&c, it)?;
        worst = worst.max(u.l2_norm().powi(2) / c.norm_sq());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Duhamel matching

/// Packet coefficients for each source time, with trapezoid weights.
#[derive(Clone, Debug)]
pub struct SourceFamily {
    pub slices: Vec<(f64, f64, FrameCoeffs)>,
}

/// Matches each nonzero source slice `f(s_k)` on the frame; zero slices are dropped.
pub fn match_source(times: &[f64], f: &[ComplexField], lat: &Lattice, tol: f64) -> Result<SourceFamily> {
    if times.len() != f.len() {
        return Err(Error::Domain("source slices and times differ in number".into()));
    }
    let mut slices = Vec::new();
    for (k, (&s, fk)) in times.iter().zip(f).enumerate() {
        if fk.l2_norm() == 0.0 {
            continue;
        }
        let left = if k > 0 { s - times[k - 1] } else { 0.0 };
        let right = if k + 1 < times.len() { times[k + 1] - s } else { 0.0 };
        let (a, _) = match_data(fk, lat, tol, 20)?;
        slices.push((s, 0.5 * (left + right), a));
    }
    Ok(SourceFamily { slices })
}

impl SourceFamily {
    /// `Σ_{s_k ≤ t} w_k Σ_T a_{T,k} u_{T,s_k}(t)`, launching packets from every slice.
    pub fn evaluate(&self, c: &TruncatedCoeffs, t: f64, rays_per_cell: usize, opts: &FlowOptions) -> Result<Option<ComplexField>> {
        let mut acc: Option<ComplexField> = None;
        for (s, w, a) in &self.slices {
            if *s > t {
                continue;
            }
            let lat = a.lattice;
            let rows: Vec<usize> =
                lat.packet_rows().into_iter().filter(|&j| (0..lat.m).any(|m| a.get(m, j).norm_sqr() > 0.0)).collect();
            let fam = PacketFamily::launch(&lat, c, *s, &rows, &[t], rays_per_cell, opts)?;
            let u = fam.superpose(a, 0)?.scale(C64::new(*w, 0.0));
            acc = Some(match acc {
                None => u,
                Some(v) => v.add(&u)?,
            });
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat(lambda: f64, n: usize) -> Lattice {
        Lattice::new(GridSpec::new(n).unwrap(), lambda).unwrap()
    }

    #[test]
    fn partition_of_squares() {
        for k in 0..1000 {
            let s = -3.0 + 6.0 * k as f64 / 999.0;
            let sum: f64 = (-5..=5).map(|m| chi(s - m as f64).powi(2)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        assert_eq!(chi(1.0), 0.0);
    }

    #[test]
    fn lattice_sizes() {
        let l = lat(256.0, 4096);
        assert_eq!(l.dxi, 64.0);
        assert_eq!(l.m, 402);
        assert_eq!(l.j, 64);
        assert!(Lattice::new(GridSpec::new(2048).unwrap(), 256.0).is_err());
        assert_eq!(l.packet_rows().len(), 2 * 16);
    }

    #[test]
    fn frame_reconstructs_plane_wave() {
        let l = lat(256.0, 4096);
        let c = measure_frame_constant(&l).unwrap();
        assert!((c / l.frame_constant_analytic() - 1.0).abs() < 1e-10);
        let e = ComplexField::mode(l.grid, 300);
        let back = frame_reconstruct(&frame_decompose(&e, &l).unwrap(), c);
        assert!(back.sub(&e).unwrap().l2_norm() / e.l2_norm() < 1e-10);
        let z = frame_decompose(&ComplexField::zeros(l.grid), &l).unwrap();
        assert_eq!(z.norm_sq(), 0.0);
    }

    #[test]
    fn constant_coefficient_packet_is_closed_form() {
        let l = lat(64.0, 8192);
        let c = TruncatedCoeffs::constant(l.grid, 0.2, 9.81).unwrap();
        let times = [0.0, 0.1];
        let j = l.rows(64.0, 64.0)[0];
        let p = Packet::launch(&l, &c, 0.0, 10, j, &times, &FlowOptions::default()).unwrap();
        let f = FrozenPacket::new(&l, &c, 0.0, 10, j).unwrap();
        for (it, &t) in times.iter().enumerate() {
            let d = p.sample(it).unwrap().sub(&f.sample(t).unwrap()).unwrap();
            assert!(d.l2_norm() < 1e-8, "{}", d.l2_norm());
        }
        let m0 = p.sample(0).unwrap().l2_norm();
        assert!((p.sample(1).unwrap().l2_norm() / m0 - 1.0).abs() < 1e-6, "{} {}", m0, p.sample(1).unwrap().l2_norm());
    }

    #[test]
    fn match_data_contracts_for_band_data() {
        let l = lat(128.0, 2048);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u0 = ComplexField::from_spectrum(
            l.grid,
            (0..l.grid.n)
                .map(|j| {
                    let x = l.grid.xi(j).abs();
                    if (64.0..=256.0).contains(&x) {
                        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect(),
        );
        let (a, rep) = match_data(&u0, &l, 1e-6, 20).unwrap();
        assert!(rep.residual <= 1e-6, "{:?}", rep);
        assert!(rep.contraction < 0.5);
        assert!(a.norm_sq() > 0.0);
        let (z, _) = match_data(&ComplexField::zeros(l.grid), &l, 1e-6, 20).unwrap();
        assert_eq!(z.norm_sq(), 0.0);
    }

    #[test]
    fn family_superposition_matches_single_packets() {
        let l = lat(64.0, 1024);
        let c = TruncatedCoeffs::constant(l.grid, 0.0, 9.81).unwrap();
        let j = l.rows(64.0, 64.0)[0];
        let fam = PacketFamily::launch(&l, &c, 0.0, &[j], &[0.05], 2, &FlowOptions::default()).unwrap();
        let mut co = FrameCoeffs::zeros(l);
        co.data[7 * l.j + j] = C64::new(1.0, 0.0);
        let u = fam.superpose(&co, 0).unwrap();
        let p = Packet::launch(&l, &c, 0.0, 7, j, &[0.05], &FlowOptions::default()).unwrap();
        assert!(u.sub(&p.sample(0).unwrap()).unwrap().l2_norm() < 1e-8);
    }
}
