//! Zakharov–Craig–Sulem evolution of `(η, ψ)` and the transport identities
//! satisfied by the surface traces.

use serde::{Deserialize, Serialize};

use crate::elliptic::{dtn_from, EllipticSolver};
use crate::error::{Error, Result};
use crate::spectral::{dealias, Field, GridSpec, RealField, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub g: f64,
    pub h: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { g: 9.81, h: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct WaveState {
    pub eta: RealField,
    pub psi: RealField,
    pub t: f64,
}

impl WaveState {
    pub fn rest(grid: GridSpec) -> Self {
        WaveState { eta: RealField::zeros(grid), psi: RealField::zeros(grid), t: 0.0 }
    }

    /// Linear travelling wave `η = ε cos(kx)`, `ψ = (gε/ω) sin(kx)`.
    pub fn linear_wave(grid: GridSpec, phys: Physics, k: f64, eps: f64) -> Self {
        let omega = (phys.g * k * (k * phys.h).tanh()).sqrt();
        WaveState {
            eta: RealField::from_fn(grid, |x| eps * (k * x).cos()),
            psi: RealField::from_fn(grid, |x| phys.g * eps / omega * (k * x).sin()),
            t: 0.0,
        }
    }

    /// Superposed right-moving linear waves `Σ_{1≤k≤k_max} ε k^{−p} cos(kx)` with
    /// matching potential; rough data for the coefficient scans.
    pub fn power_law(grid: GridSpec, phys: Physics, eps: f64, power: f64, k_max: usize) -> Self {
        let mut eta = vec![0.0; grid.n];
        let mut psi = vec![0.0; grid.n];
        for k in 1..=k_max {
            let kf = k as f64 * grid.k0();
            let amp = eps * (k as f64).powf(-power);
            let omega = (phys.g * kf * (kf * phys.h).tanh()).sqrt();
            for (j, x) in grid.xs().into_iter().enumerate() {
                eta[j] += amp * (kf * x).cos();
                psi[j] += phys.g * amp / omega * (kf * x).sin();
            }
        }
        WaveState {
            eta: RealField::new(grid, eta).expect("grid sized"),
            psi: RealField::new(grid, psi).expect("grid sized"),
            t: 0.0,
        }
    }
}

/// Surface traces: `B`, `V` and the Taylor coefficient `a`, plus `G(η)ψ`.
#[derive(Clone, Debug)]
pub struct TraceSet {
    pub b: RealField,
    pub v: RealField,
    pub a: RealField,
    pub g_psi: RealField,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub state: WaveState,
    pub traces: Option<TraceSet>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub dt: f64,
    pub stride: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionOptions {
    /// Filter `exp(−strength (|k|/k_max)^order)`.
    pub filter_strength: f64,
    pub filter_order: i32,
    pub cfl: f64,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        EvolutionOptions { filter_strength: 36.0, filter_order: 36, cfl: 0.5 }
    }
}

pub struct Zakharov {
    pub solver: EllipticSolver,
    pub phys: Physics,
    pub opts: EvolutionOptions,
}

impl Zakharov {
    pub fn new(grid: GridSpec, nz: usize, phys: Physics, delta: f64) -> Result<Self> {
        if !(phys.g > 0.0) {
            return Err(Error::Domain(format!("gravity g = {} must be positive", phys.g)));
        }
        let solver = EllipticSolver::new(grid, nz, phys.h, delta)?;
        Ok(Zakharov { solver, phys, opts: EvolutionOptions::default() })
    }

    pub fn grid(&self) -> GridSpec {
        self.solver.strip.x
    }

    fn rhs_parts(&self, eta: &RealField, psi: &RealField) -> Result<(RealField, RealField)> {
        let gp = self.solver.dtn(eta, psi)?;
        let ex = eta.deriv(1);
        let px = psi.deriv(1);
        let g = self.phys.g;
        let dpsi: Vec<f64> = (0..eta.samples().len())
            .map(|i| {
                let (e, p, gv) = (ex.samples()[i], px.samples()[i], gp.samples()[i]);
                let num = e * p + gv;
                -g * eta.samples()[i] - 0.5 * p * p + 0.5 * num * num / (1.0 + e * e)
            })
            .collect();
        let deta = dealias(&gp);
        let dpsi = dealias(&RealField::new(self.grid(), dpsi)?);
        Ok((deta, dpsi))
    }

    /// `(∂_tη, ∂_tψ)`.
    pub fn rhs(&self, s: &WaveState) -> Result<(RealField, RealField)> {
        self.rhs_parts(&s.eta, &s.psi)
    }

    /// CFL bound `cfl / (max|V| k_max + √(g k_max))`.
    pub fn max_dt(&self, s: &WaveState) -> Result<f64> {
        let gp = self.solver.dtn(&s.eta, &s.psi)?;
        let (_, v) = bv(&s.eta, &s.psi, &gp);
        let km = self.grid().k_max();
        Ok(self.opts.cfl / (v.sup_norm() * km + (self.phys.g * km).sqrt()))
    }

    fn filter(&self, u: &RealField) -> RealField {
        let g = self.grid();
        let km = g.k_max();
        let (a, p) = (self.opts.filter_strength, self.opts.filter_order);
        u.map_spectrum(|j, c| c * (-a * (g.xi(j).abs() / km).powi(p)).exp())
    }

    /// One classical RK4 step followed by the spectral filter.
    pub fn step(&self, s: &WaveState, dt: f64) -> Result<WaveState> {
        let axpy = |u: &RealField, a: f64, d: &RealField| u.add(&d.scale(a));
        let (k1e, k1p) = self.rhs_parts(&s.eta, &s.psi)?;
        let (k2e, k2p) = self.rhs_parts(&axpy(&s.eta, 0.5 * dt, &k1e)?, &axpy(&s.psi, 0.5 * dt, &k1p)?)?;
        let (k3e, k3p) = self.rhs_parts(&axpy(&s.eta, 0.5 * dt, &k2e)?, &axpy(&s.psi, 0.5 * dt, &k2p)?)?;
        let (k4e, k4p) = self.rhs_parts(&axpy(&s.eta, dt, &k3e)?, &axpy(&s.psi, dt, &k3p)?)?;
        let comb = |u: &RealField, a: &RealField, b: &RealField, c: &RealField, d: &RealField| -> Vec<f64> {
            (0..u.samples().len())
                .map(|i| {
                    u.samples()[i]
                        + dt / 6.0 * (a.samples()[i] + 2.0 * b.samples()[i] + 2.0 * c.samples()[i] + d.samples()[i])
                })
                .collect()
        };
        let eta = RealField::new(self.grid(), comb(&s.eta, &k1e, &k2e, &k3e, &k4e))?;
        let psi = RealField::new(self.grid(), comb(&s.psi, &k1p, &k2p, &k3p, &k4p))?;
        if eta.samples().iter().chain(psi.samples()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalAbort { t: s.t + dt, reason: "non-finite state after RK4 step".into() });
        }
        Ok(WaveState { eta: self.filter(&eta), psi: self.filter(&psi), t: s.t + dt })
    }

    /// Evolves to `t_end`, storing every `stride`-th state (and the first).
    pub fn evolve(&self, s0: &WaveState, t_end: f64, dt: f64, stride: usize, with_traces: bool) -> Result<Trajectory> {
        if !(dt > 0.0) || stride == 0 {
            return Err(Error::Domain("dt must be positive and stride nonzero".into()));
        }
        let bound = self.max_dt(s0)?;
        if dt > bound {
            return Err(Error::Domain(format!("dt = {dt} violates the CFL bound {bound:.3e}")));
        }
        let steps = ((t_end - s0.t) / dt).round() as usize;
        let mut snaps = Vec::with_capacity(steps / stride + 1);
        let mut s = s0.clone();
        let t0 = s0.t;
        let snap = |st: &WaveState| -> Result<Snapshot> {
            let traces = if with_traces { Some(self.traces(st)?) } else { None };
            Ok(Snapshot { state: st.clone(), traces })
        };
        snaps.push(snap(&s)?);
        for i in 1..=steps {
            s = self.step(&s, dt)?;
            s.t = t0 + i as f64 * dt;
            if i % stride == 0 {
                snaps.push(snap(&s)?);
            }
        }
        Ok(Trajectory { snapshots: snaps, dt, stride })
    }

    /// `½∫ψG(η)ψ + ½g∫η²`.
    pub fn energy(&self, s: &WaveState) -> Result<f64> {
        let gp = self.solver.dtn(&s.eta, &s.psi)?;
        let dx = self.grid().dx();
        let kin: f64 = s.psi.samples().iter().zip(gp.samples()).map(|(a, b)| a * b).sum();
        let pot: f64 = s.eta.samples().iter().map(|a| a * a).sum();
        Ok(0.5 * dx * kin + 0.5 * self.phys.g * dx * pot)
    }

    pub fn traces(&self, s: &WaveState) -> Result<TraceSet> {
        let (map, phi) = self.solver.extend(&s.eta, &s.psi)?;
        let gp = dtn_from(&map, &phi);
        let (_, a) = self.solver.pressure(&map, &phi, self.phys.g)?;
        let (b, v) = bv(&s.eta, &s.psi, &gp);
        Ok(TraceSet { b, v, a, g_psi: gp })
    }

    /// Relative residuals of the transport identities along a stored trajectory.
    pub fn identity_residuals(&self, traj: &Trajectory) -> Result<IdentityReport> {
        let sn = &traj.snapshots;
        if sn.len() < 3 {
            return Err(Error::InsufficientSnapshots { needed: 3, got: sn.len() });
        }
        let tr: Vec<&TraceSet> = sn
            .iter()
            .map(|s| s.traces.as_ref().ok_or_else(|| Error::Domain("snapshots carry no traces".into())))
            .collect::<Result<_>>()?;
        let g = self.phys.g;
        let grid = self.grid();
        let mut rep = IdentityReport::default();
        let rel = |l: &RealField, r: &RealField| -> f64 {
            let d = l.sub(r).unwrap().l2_norm();
            let n = r.l2_norm();
            if n == 0.0 {
                d
            } else {
                d / n
            }
        };
        for i in 1..sn.len() - 1 {
            let ht = sn[i + 1].state.t - sn[i - 1].state.t;
            let v = &tr[i].v;
            let vs = v.samples();
            let ldt = |m: &RealField, p: &RealField, f: &RealField| -> RealField {
                let fx = f.deriv(1);
                let out = (0..grid.n).map(|j| (p.samples()[j] - m.samples()[j]) / ht + vs[j] * fx.samples()[j]).collect();
                RealField::new(grid, out).unwrap()
            };
            let eta = &sn[i].state.eta;
            let ex = eta.deriv(1);
            let l_eta = ldt(&sn[i - 1].state.eta, &sn[i + 1].state.eta, eta);
            let l_b = ldt(&tr[i - 1].b, &tr[i + 1].b, &tr[i].b);
            let l_v = ldt(&tr[i - 1].v, &tr[i + 1].v, v);
            let l_ex = ldt(&sn[i - 1].state.eta.deriv(1), &sn[i + 1].state.eta.deriv(1), &ex);
            let a_g = RealField::new(grid, tr[i].a.samples().iter().map(|a| a - g).collect())?;
            let a_ex = tr[i].a.mul(&ex)?.scale(-1.0);
            let vx = v.deriv(1);
            let gb = self.solver.dtn(eta, &tr[i].b)?;
            let gv = self.solver.dtn(eta, v)?;
            let vstruct = gv.sub(&ex.mul(&vx)?)?;
            rep.rows.push(IdentityRow {
                t: sn[i].state.t,
                l_eta_b: rel(&l_eta, &tr[i].b),
                l_b_a: rel(&l_b, &a_g),
                l_v_a: rel(&l_v, &a_ex),
                structure: rel(&gb, &vx.scale(-1.0)),
                vstructure: rel(&l_ex, &vstruct),
            });
        }
        Ok(rep)
    }
}

/// `B = (η_xψ_x + G(η)ψ)/(1+η_x²)`, `V = ψ_x − Bη_x`.
pub fn bv(eta: &RealField, psi: &RealField, g_psi: &RealField) -> (RealField, RealField) {
    let ex = eta.deriv(1);
    let px = psi.deriv(1);
    let n = eta.samples().len();
    let mut b = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let (e, p) = (ex.samples()[i], px.samples()[i]);
        let bi = (e * p + g_psi.samples()[i]) / (1.0 + e * e);
        b.push(bi);
        v.push(p - bi * e);
    }
    let g = *eta.grid();
    (RealField::new(g, b).unwrap(), RealField::new(g, v).unwrap())
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentityRow {
    pub t: f64,
    /// `Lη = B`
    pub l_eta_b: f64,
    /// `LB = a − g`
    pub l_b_a: f64,
    /// `LV = −aη_x`
    pub l_v_a: f64,
    /// `G(η)B = −V_x` (the defect is the bottom contribution)
    pub structure: f64,
    /// `Lη_x = G(η)V − η_xV_x`
    pub vstructure: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentityReport {
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    /// Largest residual of each identity over the stored interior times.
    pub fn max(&self) -> IdentityRow {
        self.rows.iter().fold(IdentityRow::default(), |m, r| IdentityRow {
            t: m.t.max(r.t),
            l_eta_b: m.l_eta_b.max(r.l_eta_b),
            l_b_a: m.l_b_a.max(r.l_b_a),
            l_v_a: m.l_v_a.max(r.l_v_a),
            structure: m.structure.max(r.structure),
            vstructure: m.vstructure.max(r.vstructure),
        })
    }
}

/// Amplitude of mode `k` of `η` (used for dispersion checks).
pub fn mode_amplitude(u: &RealField, k: i64) -> C64 {
    let g = *u.grid();
    g.slot(k).map(|j| u.spectrum()[j]).unwrap_or(C64::new(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_state_is_stationary() {
        let g = GridSpec::new(32).unwrap();
        let z = Zakharov::new(g, 16, Physics::default(), 0.1).unwrap();
        let s = WaveState::rest(g);
        let (a, b) = z.rhs(&s).unwrap();
        assert_eq!(a.sup_norm(), 0.0);
        assert_eq!(b.sup_norm(), 0.0);
        assert_eq!(z.energy(&s).unwrap(), 0.0);
        let tr = z.traces(&s).unwrap();
        assert!(tr.a.samples().iter().all(|a| (a - 9.81).abs() < 1e-10));
    }

    #[test]
    fn linear_rhs_matches_flat_dtn() {
        let g = GridSpec::new(64).unwrap();
        let z = Zakharov::new(g, 20, Physics::default(), 0.1).unwrap();
        let eps = 1e-6;
        let s = WaveState { eta: RealField::zeros(g), psi: RealField::from_fn(g, |x| eps * (3.0 * x).cos()), t: 0.0 };
        let (de, _) = z.rhs(&s).unwrap();
        let want = RealField::from_fn(g, |x| eps * 3.0 * 3f64.tanh() * (3.0 * x).cos());
        assert!(de.sub(&want).unwrap().sup_norm() < 1e-10 * eps + 1e-16);
        assert!(de.mean().abs() < 1e-10);
    }

    #[test]
    fn linear_dispersion_frequency() {
        let g = GridSpec::new(32).unwrap();
        let phys = Physics::default();
        let z = Zakharov::new(g, 16, phys, 0.1).unwrap();
        let s0 = WaveState::linear_wave(g, phys, 4.0, 1e-4);
        let omega = (phys.g * 4.0 * 4f64.tanh()).sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        let dt = period / 200.0;
        let tr = z.evolve(&s0, period, dt, 1, false).unwrap();
        // travelling wave: the k = 4 coefficient rotates at rate ω
        let ph: Vec<f64> = tr.snapshots.iter().map(|s| mode_amplitude(&s.state.eta, 4).arg()).collect();
        let mut unwrapped = vec![ph[0]];
        for w in ph.windows(2) {
            let mut d = w[1] - w[0];
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            unwrapped.push(unwrapped.last().unwrap() + d);
        }
        let rate = -(unwrapped.last().unwrap() - unwrapped[0]) / (tr.snapshots.last().unwrap().state.t);
        assert!((rate / omega - 1.0).abs() < 5e-3, "rate {rate} omega {omega}");
    }

    #[test]
    fn traces_recombine_to_gradient() {
        let g = GridSpec::new(64).unwrap();
        let z = Zakharov::new(g, 20, Physics::default(), 0.1).unwrap();
        let s = WaveState {
            eta: RealField::from_fn(g, |x| 0.01 * (2.0 * x).cos()),
            psi: RealField::from_fn(g, |x| 0.02 * x.sin() + 0.01 * (3.0 * x).cos()),
            t: 0.0,
        };
        let tr = z.traces(&s).unwrap();
        let ex = s.eta.deriv(1);
        let px = s.psi.deriv(1);
        for i in 0..64 {
            let r = px.samples()[i] - tr.v.samples()[i] - tr.b.samples()[i] * ex.samples()[i];
            assert!(r.abs() < 1e-12);
        }
        assert!(tr.a.samples().iter().all(|&a| a > 9.81 / 2.0));
    }

    #[test]
    fn rhs_commutes_with_translation() {
        let g = GridSpec::new(64).unwrap();
        let z = Zakharov::new(g, 20, Physics::default(), 0.1).unwrap();
        let s = WaveState {
            eta: RealField::from_fn(g, |x| 0.01 * (2.0 * x).cos() + 0.003 * (5.0 * x).sin()),
            psi: RealField::from_fn(g, |x| 0.02 * x.sin()),
            t: 0.0,
        };
        let shift = 8.0 * g.dx();
        let st = WaveState { eta: s.eta.translate(shift), psi: s.psi.translate(shift), t: 0.0 };
        let (a, b) = z.rhs(&s).unwrap();
        let (at, bt) = z.rhs(&st).unwrap();
        assert!(a.translate(shift).sub(&at).unwrap().sup_norm() < 1e-12);
        assert!(b.translate(shift).sub(&bt).unwrap().sup_norm() < 1e-12);
    }
}
