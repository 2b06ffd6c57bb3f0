use std::sync::Arc;

use corridor_dynamics::algebra::PhysicsParams;
use corridor_dynamics::evolution::{Evolver, GaussianPacket, Grid, Scenario};
use corridor_dynamics::kernels::{GaugeModel, MeasurementModel, ObservableSpec};
use corridor_dynamics::oracles::{cn_propagate, free_gaussian, free_gaussian_amplitude, free_kernel_quadrature};
use corridor_dynamics::paths::Corridor;

#[test]
fn crank_nicolson_spreads_a_free_packet() {
    let params = PhysicsParams::new(1.0, 1.0).unwrap();
    let packet = GaussianPacket { center: 0.5, width: 1.0, momentum: 0.5 };
    let s = Scenario {
        grid: Grid::new(-20.0, 20.0, 2048).unwrap(),
        params,
        gauge: GaugeModel::none(),
        model: MeasurementModel::unmeasured(),
        dt: 1e-3,
        n_steps: 1000,
        psi0: packet,
    };
    let (psi, _) = cn_propagate(&s.initial_state().unwrap(), &Corridor::zeros(s.dt, s.n_steps).unwrap(), &s, 1000).unwrap();
    let (center, width, _) = free_gaussian(1.0, packet.center, packet.width, packet.momentum, &params).unwrap();
    let expected = center * center + width * width;
    assert!((psi.mean_x2() - expected).abs() < 1e-4 * expected, "{} vs {expected}", psi.mean_x2());
}

#[test]
fn kernel_quadrature_reproduces_closed_form_amplitude() {
    let params = PhysicsParams::new(2.0, 0.5).unwrap();
    let packet = GaussianPacket { center: -0.5, width: 0.8, momentum: 0.4 };
    let grid = Grid::new(-12.0, 12.0, 512).unwrap();
    let psi0 = corridor_dynamics::evolution::WaveFunction::gaussian(grid, &packet, &params).unwrap();
    let psi = free_kernel_quadrature(&psi0, 0.7, &params).unwrap();
    let scale = psi.amp.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    for (j, z) in psi.amp.iter().enumerate() {
        let exact = free_gaussian_amplitude(grid.x(j), 0.7, packet.center, packet.width, packet.momentum, &params);
        assert!((z - exact).norm() < 1e-8 * scale, "x {}", grid.x(j));
    }
}

#[test]
fn engine_tracks_crank_nicolson_with_dissipation() {
    let params = PhysicsParams::natural();
    let model = MeasurementModel::new(
        ObservableSpec::x(),
        0.2,
        Some(ObservableSpec::position("x", |x| x)),
        Some(ObservableSpec::position("0.1 x^2", |x| 0.1 * x * x)),
        0.5,
    )
    .unwrap();
    let s = Scenario {
        grid: Grid::new(-8.0, 8.0, 512).unwrap(),
        params,
        gauge: GaugeModel::from_physical(Some(Arc::new(|x: f64, t: f64| 0.5 * x * x + 0.1 * t * x)), None, &params),
        model,
        dt: 1.0 / 512.0,
        n_steps: 512,
        psi0: GaussianPacket { center: 0.8, width: 0.7, momentum: 0.3 },
    };
    let c = Corridor::new(s.dt, (0..s.n_steps).map(|k| 0.5 * (k as f64 * s.dt * 3.0).sin()).collect()).unwrap();
    let psi0 = s.initial_state().unwrap();
    let (_, engine) = Evolver::new(&s).unwrap().run_recording(&psi0, &c, 0, 64).unwrap();
    let (_, oracle) = cn_propagate(&psi0, &c, &s, 64).unwrap();
    assert_eq!(engine.len(), oracle.len());
    for (e, o) in engine.iter().zip(&oracle) {
        assert!((e.t - o.t).abs() < 1e-12);
        assert!((e.norm - o.norm).abs() < 1e-4 * o.norm, "norm {} vs {}", e.norm, o.norm);
        assert!((e.mean_x - o.mean_x).abs() < 1e-3, "mean_x {} vs {}", e.mean_x, o.mean_x);
        assert!((e.mean_x2 - o.mean_x2).abs() < 1e-3 * o.mean_x2, "mean_x2 {} vs {}", e.mean_x2, o.mean_x2);
    }
}
