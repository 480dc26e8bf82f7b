#![allow(clippy::needless_range_loop)]

use membrane_core::integrator::NewmarkParams;
use membrane_core::material::{reference_composite, ElasticMatrix, MaterialParams};
use membrane_core::mesh::{Mesh, StructuredSpec};
use membrane_core::scenarios::{
    body_forces, build_case, default_timestep, distributed_b, oblique_angle, Border, CaseParams, Excitation, LoadKind,
    LoadSpec, LoadTarget, Scenario, ScenarioError, Simulation, StrikeSpec,
};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

const H: f64 = 1e-3;
const RHO: f64 = 1500.0;

fn iso() -> MaterialParams<f64> {
    MaterialParams::new(RHO, H, ElasticMatrix::isotropic(70e9, 0.3).unwrap()).unwrap()
}

fn grid(n: usize) -> Mesh<f64> {
    Mesh::structured(StructuredSpec::new(1.0, 1.0, n, n).unwrap()).unwrap()
}

fn params(border: Border) -> CaseParams<f64> {
    CaseParams {
        b0: 1e6,
        speed: 1.0,
        load_start: 0.0,
        load_end: 2e-5,
        support: None,
        border,
    }
}

fn simulation(n: usize, material: MaterialParams<f64>, scenario: &Scenario<f64>) -> Simulation<f64> {
    let mesh = grid(n);
    let tau = default_timestep(&mesh, &material);
    Simulation::new(mesh, material, scenario, NewmarkParams::average_acceleration(tau).unwrap()).unwrap()
}

/// max |vmag(i, j) − vmag(j, i)| over the square grid, relative to max vmag.
fn diagonal_asymmetry(n: usize, vmag: &[f64]) -> f64 {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let peak = vmag.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut worst = 0.0f64;
    for j in 0..=n {
        for i in 0..=n {
            worst = worst.max((vmag[id(i, j)] - vmag[id(j, i)]).abs());
        }
    }
    worst / peak
}

fn max_component(v: &[f64], comps: &[usize]) -> f64 {
    v.chunks_exact(3)
        .flat_map(|c| comps.iter().map(move |&k| c[k].abs()))
        .fold(0.0, f64::max)
}

fn point_load(direction: [f64; 3]) -> Scenario<f64> {
    Scenario::new(
        vec![Excitation::Load(LoadSpec {
            kind: LoadKind::ElementUniform(LoadTarget::CentralPair),
            direction,
            b0: 1e6,
            start: 0.0,
            end: 1e-5,
        })],
        Border::Free,
    )
}

fn strike(angle: f64) -> Scenario<f64> {
    Scenario::new(
        vec![Excitation::Strike(StrikeSpec {
            point: None,
            speed: 1.0,
            angle_to_normal: angle,
        })],
        Border::Free,
    )
}

#[test]
fn case1_is_symmetric_about_the_split_diagonal() {
    let n = 16;
    let scenario = build_case(1, &params(Border::Free)).unwrap();
    let mut sim = simulation(n, iso(), &scenario);
    for _ in 0..20 {
        sim.advance(10).unwrap();
        let asym = diagonal_asymmetry(n, &sim.velocity_magnitude());
        assert!(asym <= 1e-10, "step {}: asymmetry {asym:e}", sim.state().step);
    }
}

/// Largest |vmag| difference over node pairs related by `map`, without normalisation.
fn pair_difference(n: usize, vmag: &[f64], map: impl Fn(usize, usize) -> (usize, usize)) -> f64 {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut worst = 0.0f64;
    for j in 0..=n {
        for i in 0..=n {
            let (a, b) = map(i, j);
            worst = worst.max((vmag[id(i, j)] - vmag[id(a, b)]).abs());
        }
    }
    worst
}

#[test]
fn centred_cases_are_symmetric_about_the_split_diagonal() {
    let n = 16;
    for case in [3, 5] {
        let mut p = params(Border::Free);
        p.support = Some(FRAC_PI_2);
        let scenario = build_case(case, &p).unwrap();
        let mut sim = simulation(n, iso(), &scenario);
        for _ in 0..10 {
            sim.advance(20).unwrap();
            let asym = diagonal_asymmetry(n, &sim.velocity_magnitude());
            assert!(asym <= 1e-10, "case {case} step {}: {asym:e}", sim.state().step);
        }
    }
}

#[test]
fn tilted_load_is_markedly_asymmetric() {
    let n = 16;
    let indicator = |case| {
        let scenario = build_case(case, &params(Border::Free)).unwrap();
        let mut sim = simulation(n, iso(), &scenario);
        sim.advance(100).unwrap();
        let vmag = sim.velocity_magnitude();
        let peak = vmag.iter().fold(0.0f64, |m, &v| m.max(v));
        (pair_difference(n, &vmag, |i, j| (j, i)), peak)
    };
    let ((one, _), (two, peak)) = (indicator(1), indicator(2));
    assert!(two > 10.0 * one && two > 0.01 * peak, "case 1 {one:e}, case 2 {two:e} (peak {peak:e})");
}

#[test]
fn anisotropic_runs_keep_the_half_turn_symmetry() {
    // the composite shares no mirror line with the diagonal-split grid, but any
    // elasticity tensor and this grid are both invariant under a half turn
    let n = 16;
    let material = MaterialParams::new(RHO, H, reference_composite()).unwrap();
    for case in [3, 5] {
        let mut p = params(Border::Free);
        p.support = Some(FRAC_PI_2);
        let scenario = build_case(case, &p).unwrap();
        let mut sim = simulation(n, material, &scenario);
        sim.advance(150).unwrap();
        let vmag = sim.velocity_magnitude();
        let peak = vmag.iter().fold(0.0f64, |m, &v| m.max(v));
        let turn = pair_difference(n, &vmag, |i, j| (n - i, n - j)) / peak;
        assert!(turn <= 1e-10, "case {case}: {turn:e}");
        assert!(diagonal_asymmetry(n, &vmag) > 0.05);
    }
}

#[test]
fn anisotropy_breaks_the_diagonal_symmetry() {
    let n = 16;
    let scenario = build_case(1, &params(Border::Free)).unwrap();
    let material = MaterialParams::new(RHO, H, reference_composite()).unwrap();
    let mut sim = simulation(n, material, &scenario);
    sim.advance(100).unwrap();
    let asym = diagonal_asymmetry(n, &sim.velocity_magnitude());
    assert!(asym > 0.05, "asymmetry {asym}");
}

#[test]
fn tilted_load_carries_the_expected_momentum() {
    // with a free border the total momentum only changes through the load,
    // so after the window P = F · duration along the load direction
    for (case, angle) in [(1, 0.0), (2, oblique_angle::<f64>())] {
        let mut p = params(Border::Free);
        p.load_end = 1e-5;
        let scenario = build_case(case, &p).unwrap();
        let mut sim = simulation(12, iso(), &scenario);
        let force = sim.mesh().triangle_area(0) * 2.0 * H * p.b0;
        let tau = sim.params().tau;
        let active = (0..=200).filter(|&k| k as f64 * tau <= p.load_end).count();
        sim.advance(200).unwrap();
        let m = &sim.unconstrained().m;
        let adot = &sim.state().adot;
        let momentum: Vec<f64> = (0..3)
            .map(|c| {
                let e: Vec<f64> = (0..adot.len()).map(|i| if i % 3 == c { 1.0 } else { 0.0 }).collect();
                m.mul_vec(adot).iter().zip(&e).map(|(a, b)| a * b).sum()
            })
            .collect();
        // trapezoidal impulse of a window sampled at the step times
        let impulse = force * tau * (active as f64 - 0.5);
        let expect = [impulse * angle.sin(), 0.0, impulse * angle.cos()];
        for c in 0..3 {
            assert!(
                (momentum[c] - expect[c]).abs() <= 1e-9 * impulse,
                "case {case} component {c}: {} vs {}",
                momentum[c],
                expect[c]
            );
        }
    }
}

#[test]
fn case2_is_oblique_and_case1_is_not() {
    let run = |case| {
        let scenario = build_case(case, &params(Border::Free)).unwrap();
        let mut sim = simulation(12, iso(), &scenario);
        sim.advance(100).unwrap();
        let adot = sim.state().adot.clone();
        (max_component(&adot, &[0, 1]), max_component(&adot, &[2]))
    };
    let (in1, out1) = run(1);
    let (in2, out2) = run(2);
    assert!(out1 > 0.0 && out2 > 0.0);
    assert!(in1 <= 1e-12 * out1);
    assert!(in2 > 10.0 * (in1 + 1e-30) && in2 > 0.01 * out2);
}

#[test]
fn strikes_prescribe_the_centre_node() {
    for (case, angle) in [(3, 0.0), (4, oblique_angle::<f64>())] {
        let scenario = build_case(case, &params(Border::Free)).unwrap();
        let mut sim = simulation(8, iso(), &scenario);
        let node = sim.mesh().nearest_node(0.5, 0.5);
        assert_eq!(node, 4 * 9 + 4);
        let expect = [angle.sin(), 0.0, angle.cos()];
        for _ in 0..1000 {
            sim.step().unwrap();
        }
        let s = sim.state();
        for k in 0..3 {
            assert_eq!(s.adot[3 * node + k], expect[k]);
            assert!((s.a[3 * node + k] - expect[k] * s.t).abs() <= 1e-12 * s.t);
        }
    }
}

#[test]
fn fixed_border_stays_put() {
    let scenario = build_case(5, &params(Border::Fixed)).unwrap();
    let mut sim = simulation(10, iso(), &scenario);
    let border = sim.mesh().boundary_nodes();
    assert_eq!(sim.system().constraints().len(), border.len());
    sim.advance(300).unwrap();
    let interior = max_component(&sim.state().a, &[2]);
    assert!(interior > 0.0);
    for node in border {
        for k in 0..3 {
            assert!(sim.state().a[3 * node + k].abs() <= 1e-12);
        }
    }
}

#[test]
fn distributed_force_matches_quadrature() {
    for support in [None, Some(FRAC_PI_2)] {
        let mesh = grid(64);
        let load = LoadSpec {
            kind: LoadKind::DistributedCos2 {
                size: None,
                center: None,
                support,
            },
            direction: [0.0, 0.0, 1.0],
            b0: 1.0,
            start: 0.0,
            end: 1.0,
        };
        let b = body_forces(&mesh, &load).unwrap();
        let discrete: f64 = (0..mesh.n_triangles()).map(|t| mesh.triangle_area(t) * b[t][2]).sum();
        let cut = support.unwrap_or(1.0);
        let m = 2000;
        let mut exact = 0.0;
        for j in 0..m {
            for i in 0..m {
                let (x, y) = ((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
                exact += distributed_b(x, y, 1.0, 1.0, [0.5, 0.5], cut);
            }
        }
        exact /= (m * m) as f64;
        assert!((discrete - exact).abs() <= 0.02 * exact, "{discrete} vs {exact}");
    }
}

#[test]
fn distributed_profile_values() {
    let f = |x, y| distributed_b(x, y, 2.0, 1.0, [0.5, 0.5], FRAC_PI_2);
    assert_eq!(f(0.5, 0.5), 2.0);
    // r = π/2 · 0.5 = π/4 → cos² = ½
    assert!((f(1.0, 0.5) - 1.0).abs() < 1e-15);
    assert!((f(0.5, 0.0) - 1.0).abs() < 1e-15);
    assert_eq!(distributed_b(0.5, 0.5 + 0.7, 2.0, 1.0, [0.5, 0.5], 1.0), 0.0);
}

#[test]
fn scenario_errors() {
    assert!(matches!(build_case(6, &params(Border::Free)), Err(ScenarioError::UnknownCase(6))));
    let mut bad = point_load([0.0, 0.0, 2.0]);
    assert!(bad.validate().is_err());
    bad = point_load([0.0, 0.0, 1.0]);
    if let Excitation::Load(l) = &mut bad.excitations[0] {
        l.start = 1.0;
        l.end = 0.5;
    }
    assert!(bad.validate().is_err());
    let mesh: Mesh<f64> = grid(4);
    let empty = LoadSpec {
        kind: LoadKind::ElementUniform(LoadTarget::Box([2.0, 3.0, 2.0, 3.0])),
        direction: [0.0, 0.0, 1.0],
        b0: 1.0,
        start: 0.0,
        end: 1.0,
    };
    assert!(body_forces(&mesh, &empty).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn isotropic_motion_decouples(n in 2usize..6, theta in 0.0f64..(2.0 * PI), use_strike: bool, steps in 1usize..200) {
        let n = 2 * n;
        let (normal, in_plane) = if use_strike {
            (strike(0.0), strike(FRAC_PI_2))
        } else {
            (point_load([0.0, 0.0, 1.0]), point_load([theta.cos(), theta.sin(), 0.0]))
        };
        let mut a = simulation(n, iso(), &normal);
        a.advance(steps).unwrap();
        let s = a.state();
        prop_assert!(max_component(&s.a, &[0, 1]) <= 1e-12);
        prop_assert!(max_component(&s.adot, &[0, 1]) <= 1e-12);
        prop_assert!(max_component(&s.adot, &[2]) > 0.0);

        let mut b = simulation(n, iso(), &in_plane);
        b.advance(steps).unwrap();
        let s = b.state();
        prop_assert!(max_component(&s.a, &[2]) <= 1e-12);
        prop_assert!(max_component(&s.adot, &[2]) <= 1e-12);
        prop_assert!(max_component(&s.adot, &[0, 1]) > 0.0);
    }
}
