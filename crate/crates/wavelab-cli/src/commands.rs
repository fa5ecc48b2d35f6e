//! The subcommands. Each one writes a self-describing artifact directory and
//! returns the checks it evaluated.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use wavelab::dispersive::{
    gap_smoothing_scan, local_smoothing_scan, overlap_scan, strichartz_scan, two_point_scan, ScanReport, SmoothingSetup,
    StrichartzSetup,
};
use wavelab::elliptic::paralin_residual;
use wavelab::fit::{loglog_fit, Fit};
use wavelab::hamiltonian::{
    flow_integrate, integration_residual, select_s0, FlowOptions, FrequencyConstants, TruncatedCoeffs,
};
use wavelab::io::{self, ArtifactDir, BinHeader, Check, Conventions, FrameConstant, Manifest};
use wavelab::packets::{
    frame_decompose, frame_reconstruct, match_data, measure_frame_constant, packet_residual, superposition_ratio,
    FrozenPacket, Lattice, Packet, PacketFamily, ResidualTimes,
};
use wavelab::spectral::{ComplexField, Field, GridSpec, RealField, C64};
use wavelab::zakharov::{Physics, Snapshot, TraceSet, Trajectory, WaveState, Zakharov};

use crate::config::{InitialKind, RunConfig};

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or a missing upstream artifact.
    Config(String),
    /// Solver breakdown or I/O trouble while running.
    Abort(String),
}

impl From<wavelab::Error> for Failure {
    fn from(e: wavelab::Error) -> Self {
        match e {
            wavelab::Error::Config(m) => Failure::Config(m),
            other => Failure::Abort(other.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    dir: ArtifactDir,
    checks: Vec<Check>,
    frames: Vec<FrameConstant>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig, out: &Path) -> Res<Self> {
        Ok(Run { cfg, dir: ArtifactDir::create(out)?, checks: Vec::new(), frames: Vec::new() })
    }

    fn table(&mut self, name: &str, headers: &[&str], rows: &[Vec<f64>]) -> Res<()> {
        let p = self.dir.file(name);
        Ok(io::write_table(&p, headers, rows)?)
    }

    /// Scan table `(x, value, fit residual)` plus its JSON fit.
    fn scan(&mut self, stem: &str, abscissa: &str, r: &ScanReport) -> Res<()> {
        let rows: Vec<Vec<f64>> = r
            .points
            .iter()
            .map(|&(x, y)| vec![x, y, y.log2() - (r.fit.slope * x.log2() + r.fit.intercept)])
            .collect();
        self.table(&format!("{stem}.csv"), &[abscissa, "value", "fit_residual"], &rows)?;
        self.fit(stem, &r.fit)
    }

    fn fit(&mut self, stem: &str, f: &Fit) -> Res<()> {
        let p = self.dir.file(&format!("{stem}_fit.json"));
        Ok(io::write_fit_json(&p, f)?)
    }

    fn finish(self, command: &str) -> Res<Outcome> {
        let manifest = Manifest {
            command: command.into(),
            version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            config: serde_json::to_value(self.cfg).map_err(|e| Failure::Abort(e.to_string()))?,
            conventions: Conventions::default(),
            frame_constants: self.frames,
            checks: self.checks.clone(),
            files: vec![],
        };
        let dir = self.dir.finish(manifest)?;
        Ok(Outcome { dir, checks: self.checks })
    }
}

fn grid(cfg: &RunConfig) -> Res<GridSpec> {
    Ok(GridSpec::with_length(cfg.grid.n, cfg.grid.length, 2.0 / 3.0)?)
}

fn physics(cfg: &RunConfig) -> Physics {
    Physics { g: cfg.physics.g, h: cfg.physics.h }
}

fn zakharov(cfg: &RunConfig) -> Res<Zakharov> {
    let mut z = Zakharov::new(grid(cfg)?, cfg.physics.nz, physics(cfg), cfg.physics.delta)?;
    z.solver.opts.tol = cfg.physics.solver_tol;
    z.opts.filter_strength = cfg.evolution.filter_strength;
    z.opts.filter_order = cfg.evolution.filter_order;
    Ok(z)
}

fn initial(cfg: &RunConfig) -> Res<WaveState> {
    let (g, p, i) = (grid(cfg)?, physics(cfg), &cfg.initial);
    Ok(match i.kind {
        InitialKind::PowerLaw => WaveState::power_law(g, p, i.eps, i.power, i.k_max),
        InitialKind::LinearWave => WaveState::linear_wave(g, p, i.k, i.eps),
    })
}

fn constants(cfg: &RunConfig, lambda: f64) -> Res<FrequencyConstants> {
    FrequencyConstants::with(lambda, cfg.frequency.c, cfg.frequency.c1)
        .map_err(|e| Failure::Config(format!("frequency constants at lambda = {lambda}: {e}")))
}

// ---------------------------------------------------------------------------
// simulate

pub fn simulate(cfg: &RunConfig, out: &Path) -> Res<Outcome> {
    let mut run = Run::new(cfg, out)?;
    let z = zakharov(cfg)?;
    let s0 = initial(cfg)?;
    let traj = z.evolve(&s0, cfg.evolution.t_end, cfg.evolution.dt, cfg.evolution.stride, true)?;

    let e0 = z.energy(&s0)?;
    let mut energy = Vec::new();
    let mut index = Vec::new();
    for (i, s) in traj.snapshots.iter().enumerate() {
        let e = z.energy(&s.state)?;
        energy.push(vec![s.state.t, e, if e0 != 0.0 { (e - e0) / e0 } else { e - e0 }]);
        index.push(vec![i as f64, s.state.t]);
        let tr = s.traces.as_ref().expect("evolved with traces");
        let p = run.dir.file(&format!("snap_{i:04}.bin"));
        write_snapshot(&p, &s.state, tr)?;
    }
    run.table("energy.csv", &["t", "energy", "relative_drift"], &energy)?;
    run.table("snapshots.csv", &["index", "t"], &index)?;

    let rep = z.identity_residuals(&traj)?;
    let rows: Vec<Vec<f64>> =
        rep.rows.iter().map(|r| vec![r.t, r.l_eta_b, r.l_b_a, r.l_v_a, r.structure, r.vstructure]).collect();
    run.table("identity_residuals.csv", &["t", "l_eta_b", "l_b_a", "l_v_a", "structure", "vstructure"], &rows)?;
    let m = rep.max();
    // G(η)B = −V_x carries a bottom term of size e^{−2h|k|}, so it is only tabulated
    let tol = cfg.tolerances.identity;
    for (name, v) in [
        ("identity L eta = B", m.l_eta_b),
        ("identity L B = a - g", m.l_b_a),
        ("identity L V = -a eta_x", m.l_v_a),
        ("identity L eta_x", m.vstructure),
    ] {
        run.checks.push(Check::at_most(name, v, tol));
    }

    let last = &traj.snapshots.last().expect("at least the initial state").state;
    let p = run.dir.file("eta_final.csv");
    io::write_real_csv(&p, &last.eta)?;
    if cfg.dump_strip {
        let (_, phi) = z.solver.extend(&last.eta, &last.psi)?;
        let p = run.dir.file("strip_potential.bin");
        io::write_strip_bin(&p, "potential", &z.solver.strip, &phi.values())?;
    }
    run.finish("simulate")
}

const SNAP_COLUMNS: [&str; 6] = ["eta", "psi", "b", "v", "a", "g_psi"];

fn write_snapshot(path: &Path, s: &WaveState, tr: &TraceSet) -> Res<()> {
    let g = *s.eta.grid();
    let h = BinHeader {
        name: format!("t={:e}", s.t),
        n: g.n,
        length: g.length,
        nz: None,
        columns: SNAP_COLUMNS.iter().map(|c| c.to_string()).collect(),
    };
    let cols = [&s.eta, &s.psi, &tr.b, &tr.v, &tr.a, &tr.g_psi].map(|f| f.samples());
    Ok(io::write_bin(path, &h, &cols)?)
}

/// Rebuilds the stored trajectory of a simulate artifact.
pub fn load_trajectory(dir: &Path) -> Res<(Trajectory, RunConfig)> {
    let missing = |e: wavelab::Error| Failure::Config(format!("{} is not a simulate artifact: {e}", dir.display()));
    let m: Manifest = io::read_json(&dir.join("manifest.json")).map_err(missing)?;
    if m.command != "simulate" {
        return Err(Failure::Config(format!("{} holds a {} artifact, expected simulate", dir.display(), m.command)));
    }
    let cfg: RunConfig = serde_json::from_value(m.config).map_err(|e| Failure::Config(e.to_string()))?;
    let (_, index) = io::read_table(&dir.join("snapshots.csv")).map_err(missing)?;
    let g = grid(&cfg)?;
    let mut snaps = Vec::new();
    for row in index {
        let (h, cols) = io::read_bin(&dir.join(format!("snap_{:04}.bin", row[0] as usize)))?;
        if h.n != g.n || h.columns != SNAP_COLUMNS {
            return Err(Failure::Config(format!("snapshot {} does not match the recorded grid", row[0])));
        }
        let f = |k: usize| RealField::new(g, cols[k].clone());
        let state = WaveState { eta: f(0)?, psi: f(1)?, t: row[1] };
        let traces = TraceSet { b: f(2)?, v: f(3)?, a: f(4)?, g_psi: f(5)? };
        snaps.push(Snapshot { state, traces: Some(traces) });
    }
    Ok((Trajectory { snapshots: snaps, dt: cfg.evolution.dt, stride: cfg.evolution.stride }, cfg))
}

// ---------------------------------------------------------------------------
// dtn-test

pub fn dtn_test(cfg: &RunConfig, out: &Path) -> Res<Outcome> {
    let mut run = Run::new(cfg, out)?;
    let z = zakharov(cfg)?;
    let g = z.grid();
    let h = cfg.physics.h;
    let zero = RealField::zeros(g);
    let kmax = g.n / 4;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    // one solve carrying every mode; the flat map is diagonal
    let f = RealField::from_fn(g, |x| (1..=kmax).map(|k| (k as f64 * x * g.k0() + 0.1 * k as f64).cos()).sum());
    let gf = z.solver.dtn(&zero, &f)?;
    for k in 1..=kmax as i64 {
        let j = g.slot(k).expect("mode below Nyquist");
        let xi = g.xi(j).abs();
        let exact = xi * (h * xi).tanh();
        let got = gf.spectrum()[j] / f.spectrum()[j];
        let rel = (got - C64::new(exact, 0.0)).norm() / exact;
        worst = worst.max(rel);
        rows.push(vec![xi, got.re, exact, rel]);
    }
    run.table("dtn_flat.csv", &["k", "computed", "exact", "relative_error"], &rows)?;
    run.checks.push(Check::at_most("flat DtN multiplier", worst, cfg.tolerances.dtn_flat));

    // curved surface: symmetry and positivity, then the paralinearization residual
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eta = RealField::from_fn(g, |x| 0.05 * x.cos() + 0.02 * (3.0 * x + 0.3).sin());
    let f1 = smooth_random(g, &mut rng);
    let f2 = smooth_random(g, &mut rng);
    let (g1, g2) = (z.solver.dtn(&eta, &f1)?, z.solver.dtn(&eta, &f2)?);
    let ip = |a: &RealField, b: &RealField| a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum::<f64>() * g.dx();
    let (a, b) = (ip(&g1, &f2), ip(&f1, &g2));
    let asym = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    run.table("dtn_symmetry.csv", &["pairing_12", "pairing_21", "relative_asymmetry", "energy_11"], &[vec![a, b, asym, ip(&g1, &f1)]])?;
    run.checks.push(Check::at_most("DtN symmetry", asym, 1e-8));
    run.checks.push(Check::at_least("DtN positivity", ip(&g1, &f1), 0.0));

    // the flat residual is the finite-depth offset tanh(h|D|) - 1; the rest is the surface part
    let r0 = paralin_residual(&z.solver, &zero, &f1)?;
    let mut scan = Vec::new();
    for e in [0.0025, 0.005, 0.01, 0.02, 0.04] {
        let eta = eta.scale(e / 0.05);
        let r = paralin_residual(&z.solver, &eta, &f1)?;
        scan.push(vec![e, r.l2_norm(), r.sub(&r0)?.l2_norm() / f1.l2_norm()]);
    }
    run.table("paralin_residual.csv", &["amplitude", "residual", "surface_part_relative"], &scan)?;
    run.finish("dtn-test")
}

fn smooth_random(g: GridSpec, rng: &mut ChaCha8Rng) -> RealField {
    let c: Vec<(f64, f64)> = (1..=16).map(|_| (rng.gen::<f64>() - 0.5, rng.gen::<f64>() * 2.0 * PI)).collect();
    RealField::from_fn(g, |x| c.iter().enumerate().map(|(k, (a, p))| a / (k + 1) as f64 * ((k + 1) as f64 * x + p).cos()).sum())
}

// ---------------------------------------------------------------------------
// coefficient sources for flow and parametrix

enum Coefficients {
    Evolved(Trajectory),
    Constant(GridSpec, f64, f64),
}

impl Coefficients {
    fn resolve(cfg: &RunConfig, input: Option<&Path>) -> Res<Self> {
        match (input, cfg.coefficients) {
            (Some(dir), _) => Ok(Coefficients::Evolved(load_trajectory(dir)?.0)),
            (None, Some(c)) => Ok(Coefficients::Constant(grid(cfg)?, c.v0, c.a0)),
            (None, None) => Err(Failure::Config(
                "missing dependency: pass --input <simulate artifact> or set `coefficients` in the config".into(),
            )),
        }
    }

    /// Truncated coefficients at λ and the launch time `s₀`.
    fn at(&self, cfg: &RunConfig, k: &FrequencyConstants) -> Res<(TruncatedCoeffs, f64)> {
        let (c, s0) = match self {
            Coefficients::Evolved(t) => {
                let states: Vec<WaveState> = t.snapshots.iter().map(|s| s.state.clone()).collect();
                (TruncatedCoeffs::from_trajectory(t, k)?, select_s0(&states, k)?.1)
            }
            Coefficients::Constant(g, v0, a0) => (TruncatedCoeffs::constant(*g, *v0, *a0)?, 0.0),
        };
        Ok(if cfg.frozen_coeffs { (c.frozen(s0)?, s0) } else { (c, s0) })
    }

    fn times(&self, cfg: &RunConfig) -> Vec<f64> {
        match self {
            Coefficients::Evolved(t) => t.times(),
            Coefficients::Constant(..) => (0..=10).map(|k| cfg.evolution.t_end * k as f64 / 10.0).collect(),
        }
    }

    fn span(&self, cfg: &RunConfig) -> (f64, f64) {
        let t = self.times(cfg);
        (t[0], *t.last().unwrap())
    }
}

// ---------------------------------------------------------------------------
// flow

pub fn flow(cfg: &RunConfig, input: Option<&Path>, out: &Path) -> Res<Outcome> {
    let src = Coefficients::resolve(cfg, input)?;
    let mut run = Run::new(cfg, out)?;
    let times = src.times(cfg);
    let length = cfg.grid.length;
    let mut rows = Vec::new();
    let mut s0_rows = Vec::new();
    for &lam in &cfg.frequency.lambdas {
        let k = constants(cfg, lam)?;
        let (c, s0) = src.at(cfg, &k)?;
        s0_rows.push(vec![lam, s0]);
        let opts = FlowOptions::for_lambda(lam);
        let init: Vec<(f64, f64)> = (0..64).map(|i| (i as f64 * length / 64.0, lam)).collect();
        let fl = flow_integrate(&c, &init, s0, &times, &opts)?;
        let spread = fl.spreading_check(lam, c.mean_sqrt_a())?;
        // nearby rays with nearby frequencies for the two-point geometry
        let w = lam.powf(-0.75);
        let pair: Vec<(f64, f64)> = (0..16).map(|i| (1.0 + i as f64 * w / 4.0, lam * (1.0 + (i as f64 - 8.0) / 128.0))).collect();
        let (c1, c2) = flow_integrate(&c, &pair, s0, &times, &opts)?.two_point_geometry(lam, length);
        let bl = fl.bilipschitz_defect();
        rows.push(vec![lam, s0, bl, fl.band_defect(), spread.min_r2, c1, c2]);
        run.checks.push(Check::at_most(&format!("bilipschitz defect at {lam}"), bl, cfg.tolerances.bilipschitz));
        run.checks.push(Check::at_least(&format!("spreading R^2 at {lam}"), spread.min_r2, cfg.tolerances.spreading_r2));
        let fan: Vec<Vec<f64>> = fl
            .rays
            .iter()
            .zip(&fl.times)
            .flat_map(|(row, &t)| row.iter().enumerate().map(move |(i, r)| vec![t, i as f64, r.x, r.xi]))
            .collect();
        run.table(&format!("rays_{lam}.csv"), &["t", "ray", "x", "xi"], &fan)?;
    }
    run.table("flow.csv", &["lambda", "s0", "bilipschitz", "band_defect", "spreading_r2", "c1", "c2"], &rows)?;
    run.table("s0.csv", &["lambda", "s0"], &s0_rows)?;

    if let Coefficients::Evolved(traj) = &src {
        f1_scan(&mut run, traj)?;
    }
    run.finish("flow")
}

/// `‖G_V‖_∞` and `‖∂²V_λ‖_∞` against λ on the scales the grid resolves.
fn f1_scan(run: &mut Run, traj: &Trajectory) -> Res<()> {
    if traj.snapshots.len() < 3 {
        return Ok(());
    }
    let kmax = traj.snapshots[0].state.eta.grid().k_max();
    let (mut l, mut gv, mut d2, mut rows) = (vec![], vec![], vec![], vec![]);
    for &lam in &run.cfg.frequency.lambdas {
        if 2.0 * lam > kmax {
            continue;
        }
        let k = constants(run.cfg, lam)?;
        let r = integration_residual(traj, &k)?;
        for row in &r {
            rows.push(vec![lam, row.t, row.gv_sup, row.d2v_sup]);
        }
        l.push(lam);
        gv.push(r.iter().map(|x| x.gv_sup).fold(0.0, f64::max));
        d2.push(r.iter().map(|x| x.d2v_sup).fold(0.0, f64::max));
    }
    run.table("f1.csv", &["lambda", "t", "gv_sup", "d2v_sup"], &rows)?;
    if l.len() >= 2 {
        let (a, b) = (loglog_fit(&l, &gv)?, loglog_fit(&l, &d2)?);
        run.fit("f1_gv", &a)?;
        run.fit("f1_d2v", &b)?;
        run.checks.push(Check::at_least("F1 exponent gap", b.slope - a.slope, run.cfg.tolerances.f1_gap));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// parametrix

pub fn parametrix(cfg: &RunConfig, input: Option<&Path>, out: &Path) -> Res<Outcome> {
    let src = Coefficients::resolve(cfg, input)?;
    let mut run = Run::new(cfg, out)?;
    let tol = &cfg.tolerances;
    let pk = &cfg.packets;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut matches, mut resid, mut ortho) = (vec![], vec![], vec![]);
    let mut worst_c: f64 = 0.0;
    for &lam in &cfg.frequency.lambdas {
        let grid = GridSpec::new(((16.0 * lam) as usize).max(1024).next_power_of_two())?;
        let lat = Lattice::new(grid, lam)?;
        let cst = measure_frame_constant(&lat)?;
        run.frames.push(FrameConstant { lambda: lam, measured: cst, analytic: lat.frame_constant_analytic() });

        let e = ComplexField::mode(grid, (1.17 * lam / grid.k0()).round() as i64);
        let rec = frame_reconstruct(&frame_decompose(&e, &lat)?, cst).sub(&e)?.l2_norm() / e.l2_norm();
        run.checks.push(Check::at_most(&format!("frame reconstruction at {lam}"), rec, tol.frame));

        let u0 = band_data(grid, lam, &mut rng);
        let (coeffs, rep) = match_data(&u0, &lat, pk.match_tol, pk.match_max_iter)?;
        matches.push(vec![lam, rep.iterations as f64, rep.residual, rep.contraction, cst]);
        run.checks.push(Check::at_most(&format!("matching contraction at {lam}"), rep.contraction, tol.contraction));
        run.checks.push(Check::at_most(&format!("matching residual at {lam}"), rep.residual, pk.match_tol));
        let p = run.dir.file(&format!("coeffs_{lam}.csv"));
        io::write_coeffs_csv(&p, &coeffs)?;

        let k = constants(cfg, lam)?;
        let (c, s0) = src.at(cfg, &k)?;
        let span = src.span(cfg);
        let rt = ResidualTimes::new(span, pk.residual_samples, pk.residual_delta);
        let flat = rt.flat();
        let j = lat.rows(lam, lam)[0];
        let m = lat.m / 3;
        let pkt = Packet::launch(&lat, &c, s0, m, j, &flat, &FlowOptions::default())?;
        let r = packet_residual(|i| pkt.sample(i), &rt, &c, lam)?;
        let fz = FrozenPacket::new(&lat, &c, s0, m, j)?;
        let rf = packet_residual(|i| fz.sample(flat[i]), &rt, &c, lam)?;
        resid.push(vec![lam, r.ratio, rf.ratio, r.residual, r.dispersive]);

        let opts = FlowOptions { max_dt: 5e-3, band: None };
        let fam = PacketFamily::launch(&lat, &c, s0, &lat.packet_rows(), &[span.0, span.1], pk.rays_per_cell, &opts)?;
        let q = superposition_ratio(&fam, 0, pk.trials, &mut rng)?.max(superposition_ratio(&fam, 1, pk.trials, &mut rng)?);
        let cc = q / lam.log2();
        worst_c = worst_c.max(cc);
        ortho.push(vec![lam, q, cc]);
    }
    run.table("match.csv", &["lambda", "iterations", "residual", "contraction", "frame_constant"], &matches)?;
    run.table("packet_residual.csv", &["lambda", "eikonal", "frozen", "residual", "dispersive"], &resid)?;
    run.table("orthogonality.csv", &["lambda", "ratio", "constant"], &ortho)?;
    run.checks.push(Check::at_most("orthogonality constant", worst_c, tol.orthogonality));
    if resid.len() >= 2 {
        let l: Vec<f64> = resid.iter().map(|r| r[0]).collect();
        let e: Vec<f64> = resid.iter().map(|r| r[1]).collect();
        let fit = loglog_fit(&l, &e)?;
        run.fit("packet_residual", &fit)?;
        run.checks.push(Check::at_most("packet residual exponent", fit.slope, tol.packet_exponent));
    }
    if let Some(last) = resid.last() {
        run.checks.push(Check::at_least("eikonal gain over frozen phase", last[2] / last[1], tol.eikonal_gain));
    }
    run.finish("parametrix")
}

/// Random spectrum on `λ/2 ≤ |ξ| ≤ 2λ`.
fn band_data(grid: GridSpec, lam: f64, rng: &mut ChaCha8Rng) -> ComplexField {
    let spec = (0..grid.n)
        .map(|j| {
            let x = grid.xi(j).abs();
            if (lam / 2.0..=2.0 * lam).contains(&x) {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    ComplexField::from_spectrum(grid, spec)
}

// ---------------------------------------------------------------------------
// strichartz

pub fn strichartz(cfg: &RunConfig, out: &Path) -> Res<Outcome> {
    let d = &cfg.dispersive;
    let a0 = cfg.physics.g;
    let lams = cfg.frequency.lambdas.clone();
    let sm = SmoothingSetup {
        lambda: d.smoothing_lambda,
        v0: 0.0,
        a0,
        t_end: d.smoothing_t_end,
        samples: (d.samples_per_unit_time * d.smoothing_t_end).ceil() as usize,
        x0: 1.0,
    };
    let mus: Vec<f64> = cfg.frequency.mu_exponents.iter().map(|e| d.smoothing_lambda.powf(*e)).collect();
    // the three scans are independent
    let (disp, smooth, overlap) = std::thread::scope(|s| {
        let a = s.spawn(|| -> wavelab::Result<_> {
            let st = StrichartzSetup { v0: 0.0, a0, t_end: d.strichartz_t_end, samples_per_scale: d.samples_per_scale };
            let tr = StrichartzSetup { v0: 1.0, a0: 0.0, ..st };
            Ok((strichartz_scan(&lams, &st)?, strichartz_scan(&lams, &tr)?))
        });
        let b = s.spawn(|| -> wavelab::Result<_> {
            let gap_setup = SmoothingSetup { samples: (sm.samples / 5).max(16), ..sm };
            Ok((local_smoothing_scan(&d.kappas, &sm)?, gap_smoothing_scan(&mus, cfg.frequency.c, &gap_setup)?))
        });
        let c = s.spawn(|| -> wavelab::Result<_> {
            Ok((overlap_scan(&lams, a0, d.overlap_t_end)?, two_point_scan(d.two_point_lambda, &d.two_point_gaps, a0)?))
        });
        (a.join().expect("scan thread"), b.join().expect("scan thread"), c.join().expect("scan thread"))
    });
    let (st, tr) = disp?;
    let (ls, gap) = smooth?;
    let (ov, tp) = overlap?;

    let tol = &cfg.tolerances;
    let mut run = Run::new(cfg, out)?;
    run.scan("strichartz", "lambda", &st)?;
    run.scan("transport", "lambda", &tr)?;
    run.scan("local_smoothing", "kappa", &ls)?;
    run.scan("overlap", "lambda", &ov)?;
    run.scan("two_point", "gap", &tp)?;
    run.checks.push(Check::at_most("Strichartz exponent", st.fit.slope, tol.strichartz_exponent));
    run.checks.push(Check::at_least("transport control exponent", tr.fit.slope, tol.transport_exponent));
    run.checks.push(Check::at_most("local smoothing exponent", ls.fit.slope, tol.smoothing_exponent));
    run.checks.push(Check::at_most("single-point overlap exponent", ov.fit.slope, tol.overlap_exponent));
    run.checks.push(Check::within(
        "two-point overlap exponent",
        tp.fit.slope,
        tol.two_point_exponent - tol.two_point_slack,
        tol.two_point_exponent + tol.two_point_slack,
    ));
    // only the μ dependence differs between the gap values
    let rows: Vec<Vec<f64>> = gap.iter().map(|&(mu, v)| vec![mu, v, v * mu.sqrt()]).collect();
    run.table("gap_smoothing.csv", &["mu", "value", "value_times_sqrt_mu"], &rows)?;
    if gap.len() >= 2 {
        let q = rows.iter().map(|r| r[2]).fold(f64::NEG_INFINITY, f64::max) / rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
        run.checks.push(Check::at_most("gap smoothing spread", q, tol.gap_factor));
    }
    run.finish("strichartz")
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Serialize)]
pub struct ReportEntry {
    pub dir: String,
    pub command: String,
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub artifacts: Vec<ReportEntry>,
    pub failures: Vec<String>,
    pub all_pass: bool,
}

pub fn report(dirs: &[PathBuf]) -> Res<Report> {
    let mut artifacts = Vec::new();
    let mut failures = Vec::new();
    for d in dirs {
        let m: Manifest = io::read_json(&d.join("manifest.json"))
            .map_err(|e| Failure::Config(format!("{} has no readable manifest: {e}", d.display())))?;
        for c in m.checks.iter().filter(|c| !c.pass) {
            failures.push(format!("{}: {} = {} (target {})", m.command, c.name, c.value, c.target));
        }
        artifacts.push(ReportEntry { dir: d.display().to_string(), command: m.command, checks: m.checks });
    }
    Ok(Report { all_pass: failures.is_empty(), artifacts, failures })
}
