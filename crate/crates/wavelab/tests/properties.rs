use proptest::prelude::*;

use wavelab::dispersive::{apply_h, exact_evolve, Quantization};
use wavelab::elliptic::EllipticSolver;
use wavelab::fit::loglog_fit;
use wavelab::hamiltonian::{flow_integrate, FlowOptions, TruncatedCoeffs};
use wavelab::packets::{chi, frame_decompose, frame_reconstruct, measure_frame_constant, Lattice};
use wavelab::paradiff::{paraproduct, remainder, wrap};
use wavelab::spectral::{low_symbol, psi_block, ComplexField, GridSpec, LpLadder, RealField, C64};

/// Real field from a few random Fourier coefficients.
fn field(g: GridSpec, c: &[(f64, f64)], stride: usize) -> RealField {
    RealField::from_fn(g, |x| c.iter().enumerate().map(|(k, (a, b))| {
        let m = ((k + 1) * stride) as f64;
        a * (m * x).cos() + b * (m * x).sin()
    }).sum())
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn ip(a: &RealField, b: &RealField) -> f64 {
    a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blocks_sum_to_one(xi in -5000.0..5000.0f64) {
        let mut s = low_symbol(xi, 0.0);
        let mut k = 1.0;
        while k <= 8192.0 {
            s += psi_block(xi, k);
            k *= 2.0;
        }
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_reassembles_field(c in coeffs(40)) {
        let g = GridSpec::new(128).unwrap();
        let u = field(g, &c, 1);
        let mut acc = RealField::zeros(g);
        for (_, b) in LpLadder::new(g).decompose(&u) {
            acc = acc.add(&b).unwrap();
        }
        prop_assert!(acc.sub(&u).unwrap().sup_norm() <= 1e-12 * u.sup_norm().max(1.0));
    }

    #[test]
    fn bony_split_recovers_product(a in coeffs(20), u in coeffs(20)) {
        let g = GridSpec::new(128).unwrap();
        let (a, u) = (field(g, &a, 1), field(g, &u, 2));
        let au = a.resample(256).mul(&u.resample(256)).unwrap().resample(128);
        let s = paraproduct(&a, &u).unwrap().add(&paraproduct(&u, &a).unwrap()).unwrap().add(&remainder(&a, &u).unwrap()).unwrap();
        prop_assert!(s.sub(&au).unwrap().sup_norm() <= 1e-12 * au.sup_norm().max(1.0));
    }

    #[test]
    fn paraproduct_is_bilinear(a in coeffs(10), u in coeffs(10), w in coeffs(10), t in -3.0..3.0f64) {
        let g = GridSpec::new(64).unwrap();
        let (a, u, w) = (field(g, &a, 1), field(g, &u, 2), field(g, &w, 3));
        let lhs = paraproduct(&a, &u.scale(t).add(&w).unwrap()).unwrap();
        let rhs = paraproduct(&a, &u).unwrap().scale(t).add(&paraproduct(&a, &w).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * (1.0 + lhs.sup_norm()));
    }

    #[test]
    fn packet_windows_partition_squares(s in -50.0..50.0f64) {
        let base = s.floor() as i64;
        let sum: f64 = (base - 3..=base + 3).map(|m| chi(s - m as f64).powi(2)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_lands_in_half_period(d in -1e3..1e3f64, l in 0.1..20.0f64) {
        let w = wrap(d, l);
        prop_assert!(w >= -0.5 * l - 1e-9 && w < 0.5 * l + 1e-9);
        prop_assert!(((d - w) / l - ((d - w) / l).round()).abs() < 1e-9);
    }

    #[test]
    fn exact_evolution_is_a_unitary_group(c in coeffs(12), t in -1.0..1.0f64, s in -1.0..1.0f64) {
        let g = GridSpec::new(64).unwrap();
        let u = field(g, &c, 1).to_complex();
        let a = exact_evolve(&exact_evolve(&u, 0.3, 9.81, t), 0.3, 9.81, s);
        let b = exact_evolve(&u, 0.3, 9.81, t + s);
        prop_assert!(a.sub(&b).unwrap().l2_norm() <= 1e-12 * (1.0 + u.l2_norm()));
        prop_assert!((b.l2_norm() - u.l2_norm()).abs() <= 1e-12 * (1.0 + u.l2_norm()));
    }

    #[test]
    fn loglog_fit_recovers_power(p in -2.0..2.0f64, c in 0.1..10.0f64) {
        let x = [64.0, 128.0, 256.0, 512.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| c * v.powf(p)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-10);
        prop_assert!(f.r2 > 1.0 - 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn frame_round_trip(re in coeffs(24), im in coeffs(24)) {
        let lat = Lattice::new(GridSpec::new(1024).unwrap(), 64.0).unwrap();
        let cst = measure_frame_constant(&lat).unwrap();
        let u = ComplexField::from_fn(lat.grid, |x| {
            re.iter().zip(&im).enumerate().map(|(k, ((a, b), (c, d)))| {
                let m = (8 * k + 5) as f64;
                C64::new(*a, *b) * C64::from_polar(1.0, m * x) + C64::new(*c, *d) * C64::from_polar(1.0, -m * x)
            }).sum()
        });
        let back = frame_reconstruct(&frame_decompose(&u, &lat).unwrap(), cst);
        prop_assert!(back.sub(&u).unwrap().l2_norm() <= 1e-10 * u.l2_norm());
    }

    #[test]
    fn dtn_is_symmetric_and_nonnegative(e in coeffs(3), f1 in coeffs(6), f2 in coeffs(6)) {
        let g = GridSpec::new(32).unwrap();
        let solver = EllipticSolver::new(g, 16, 1.0, 0.1).unwrap();
        let eta = field(g, &e, 1).scale(0.03);
        let (f1, f2) = (field(g, &f1, 1), field(g, &f2, 1));
        let (g1, g2) = (solver.dtn(&eta, &f1).unwrap(), solver.dtn(&eta, &f2).unwrap());
        let (a, b) = (ip(&g1, &f2), ip(&f1, &g2));
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
        prop_assert!(ip(&g1, &f1) >= -1e-10);
        // constants lie in the kernel
        let one = RealField::from_fn(g, |_| 1.0);
        prop_assert!(solver.dtn(&eta, &one).unwrap().sup_norm() < 1e-8);
    }

    #[test]
    fn symmetric_generator_is_skew(c in coeffs(16), v in coeffs(2), s in coeffs(2)) {
        // low-mode coefficients times band-limited data: products are resolved exactly
        let g = GridSpec::new(128).unwrap();
        let v = field(g, &v, 1).scale(0.2);
        let s = field(g, &s, 1).scale(0.2).add(&RealField::from_fn(g, |_| 3.0)).unwrap();
        let u = ComplexField::from_fn(g, |x| c.iter().enumerate().map(|(k, (a, b))| {
            C64::new(*a, *b) * C64::from_polar(1.0, (k + 1) as f64 * x)
        }).sum());
        let hu = apply_h(&v, &s, &u, Quantization::Symmetric).unwrap();
        let re: f64 = hu.samples().iter().zip(u.samples()).map(|(a, b)| (a * b.conj()).re).sum();
        prop_assert!(re.abs() <= 1e-9 * (1.0 + hu.l2_norm() * u.l2_norm()));
    }

    #[test]
    fn rays_retrace_backwards(x in 0.0..6.28f64, xi in 200.0..300.0f64, t in 0.01..0.3f64) {
        let g = GridSpec::new(64).unwrap();
        let k = wavelab::hamiltonian::FrequencyConstants::new(256.0).unwrap();
        let c = TruncatedCoeffs::from_fields(
            &[0.0],
            &[RealField::from_fn(g, |y| 0.01 * y.sin())],
            &[RealField::from_fn(g, |y| 9.81 + 0.05 * (2.0 * y).cos())],
            &k,
        ).unwrap();
        let o = FlowOptions::default();
        let fwd = flow_integrate(&c, &[(x, xi)], 0.0, &[t], &o).unwrap().rays[0][0];
        let back = flow_integrate(&c, &[(fwd.x, fwd.xi)], t, &[0.0], &o).unwrap().rays[0][0];
        prop_assert!((back.x - x).abs() < 1e-6);
        prop_assert!((back.xi - xi).abs() < 1e-4);
        // the Jacobian of a Hamiltonian flow has unit determinant
        let det = fwd.jac[0] * fwd.jac[3] - fwd.jac[1] * fwd.jac[2];
        prop_assert!((det - 1.0).abs() < 1e-6);
    }
}
