use num_complex::Complex64;
use proptest::prelude::*;

use corridor_dynamics::algebra::{multiplicator, GalileiElement, PhysicsParams, SpacetimePoint};
use corridor_dynamics::kernels::{
    action_phase, covariance_phase, decoherence_weight, free_kernel, free_kernel_via_boost_integral, gauge_weight,
    GaugeModel, MeasurementModel, MomentumPath, ObservableSpec, Trajectory,
};
use corridor_dynamics::oracles::regularized_boost_integral;
use corridor_dynamics::paths::{Corridor, Path};
use corridor_dynamics::Error;

const DT: f64 = 0.02;

fn params() -> impl Strategy<Value = PhysicsParams> {
    (0.3..3.0f64, 0.3..3.0f64).prop_map(|(m, hbar)| PhysicsParams::new(m, hbar).unwrap())
}

fn scalars(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #[test]
    fn kernel_is_galilei_covariant(dx in -3.0..3.0f64, v in -3.0..3.0f64, tau in 0.05..3.0f64, p in params()) {
        let boosted = free_kernel(dx + v * tau, tau, &p).unwrap();
        let base = free_kernel(dx, tau, &p).unwrap();
        let phase = covariance_phase(dx, v, tau, &p);
        prop_assert!((boosted - phase * base).norm() / base.norm() < 1e-12);
        let g = GalileiElement::boost([v, 0.0, 0.0]);
        let h = GalileiElement::translation(SpacetimePoint::new(tau, [dx, 0.0, 0.0]));
        prop_assert!((phase - multiplicator(&g, &h, &p)).norm() < 1e-12);
    }

    #[test]
    fn kernel_modulus_depends_only_on_time(dx in -5.0..5.0f64, tau in 0.05..3.0f64, p in params()) {
        let k = free_kernel(dx, tau, &p).unwrap();
        let expected = (p.m / (2.0 * std::f64::consts::PI * p.hbar * tau)).sqrt();
        prop_assert!((k.norm() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn decoherence_weight_is_bounded(
        u in scalars(15), a in scalars(15), x0 in -2.0..2.0f64, kappa in 0.0..5.0f64, eta in -2.0..2.0f64,
    ) {
        let model = MeasurementModel::new(
            ObservableSpec::x(),
            kappa,
            Some(ObservableSpec::position("x^3", |x: f64| x * x * x)),
            Some(ObservableSpec::position("sin", f64::sin)),
            eta,
        )
        .unwrap();
        let p = Path::from_scalars(DT, u).unwrap();
        let c = Corridor::new(DT, a).unwrap();
        let w = decoherence_weight(Trajectory::Position(&p), x0, &c, &model, &PhysicsParams::natural()).unwrap();
        prop_assert!(w.norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn momentum_weights_split(p1 in scalars(7), p2 in scalars(9), a in scalars(16), kappa in 0.0..3.0f64) {
        let model = MeasurementModel::new(
            ObservableSpec::momentum("p", |p| p),
            kappa,
            None,
            Some(ObservableSpec::momentum("p^2", |p| p * p)),
            0.0,
        )
        .unwrap();
        let params = PhysicsParams::natural();
        let (m1, m2) = (MomentumPath::new(DT, p1).unwrap(), MomentumPath::new(DT, p2).unwrap());
        let whole = m1.concat(&m2).unwrap();
        let c = Corridor::new(DT, a).unwrap();
        let (c1, c2) = c.split_at(7);
        let lhs = decoherence_weight(Trajectory::Momentum(&whole), 0.0, &c, &model, &params).unwrap();
        let rhs = decoherence_weight(Trajectory::Momentum(&m1), 0.0, &c1, &model, &params).unwrap()
            * decoherence_weight(Trajectory::Momentum(&m2), 0.0, &c2, &model, &params).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn constant_gauge_field_depends_only_on_endpoints(u in scalars(30), x0 in -3.0..3.0f64, c in -2.0..2.0f64) {
        let g = GaugeModel::new(None::<fn(f64, f64) -> f64>, Some(move |_: f64, _: f64| c));
        let p = Path::from_scalars(DT, u).unwrap();
        let dx = p.endpoint_1d(x0).unwrap() - x0;
        let w = gauge_weight(&p, x0, 0.3, &g).unwrap();
        prop_assert!((w - Complex64::from_polar(1.0, c * dx)).norm() < 1e-12);
    }

    #[test]
    fn action_phase_has_unit_modulus(p in scalars(10), u in scalars(10), params in params()) {
        let w = action_phase(&MomentumPath::new(DT, p).unwrap(), &Path::from_scalars(DT, u).unwrap(), &params).unwrap();
        prop_assert!((w.norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn measuring_the_exact_readout_costs_nothing() {
    let model = MeasurementModel::decoherence(ObservableSpec::x(), 2.0).unwrap();
    let p = Path::from_scalars(0.1, vec![0.0; 5]).unwrap();
    let c = Corridor::new(0.1, vec![1.5; 5]).unwrap();
    let w = decoherence_weight(Trajectory::Position(&p), 1.5, &c, &model, &PhysicsParams::natural()).unwrap();
    assert_eq!(w, Complex64::new(1.0, 0.0));
}

#[test]
fn decoherence_weight_matches_hand_computation() {
    // one slice from 0 to 0.2: midpoint 0.1, readout 0.5, κ = 2, dt = 0.1
    let model = MeasurementModel::decoherence(ObservableSpec::x(), 2.0).unwrap();
    let p = Path::from_scalars(0.1, vec![2.0]).unwrap();
    let c = Corridor::new(0.1, vec![0.5]).unwrap();
    let w = decoherence_weight(Trajectory::Position(&p), 0.0, &c, &model, &PhysicsParams::natural()).unwrap();
    let expected = (-2.0f64 * 0.16 * 0.1).exp();
    assert!((w.re - expected).abs() < 1e-15 && w.im == 0.0);
}

#[test]
fn mixed_bases_are_rejected() {
    let model = MeasurementModel::decoherence(ObservableSpec::momentum("p", |p| p), 1.0).unwrap();
    let p = Path::from_scalars(0.1, vec![0.0; 3]).unwrap();
    let c = Corridor::zeros(0.1, 3).unwrap();
    let r = decoherence_weight(Trajectory::Position(&p), 0.0, &c, &model, &PhysicsParams::natural());
    assert!(matches!(r, Err(Error::Unsupported(_))));
}

#[test]
fn length_and_grid_mismatches_are_rejected() {
    let model = MeasurementModel::decoherence(ObservableSpec::x(), 1.0).unwrap();
    let params = PhysicsParams::natural();
    let p = Path::from_scalars(0.1, vec![0.0; 3]).unwrap();
    let short = Corridor::zeros(0.1, 2).unwrap();
    let other = Corridor::zeros(0.2, 3).unwrap();
    assert!(decoherence_weight(Trajectory::Position(&p), 0.0, &short, &model, &params).is_err());
    assert!(decoherence_weight(Trajectory::Position(&p), 0.0, &other, &model, &params).is_err());
    assert!(action_phase(&MomentumPath::new(0.1, vec![0.0; 2]).unwrap(), &p, &params).is_err());
}

#[test]
fn boost_quadrature_matches_regularized_closed_form() {
    let params = PhysicsParams::new(1.5, 0.7).unwrap();
    for (dx, tau, eps) in [(0.0, 1.0, 1e-2), (1.2, 0.5, 1e-3), (-0.7, 2.0, 1e-4)] {
        let quad = free_kernel_via_boost_integral(dx, tau, eps, &params).unwrap();
        let closed = regularized_boost_integral(dx, tau, eps, &params);
        assert!((quad - closed).norm() / closed.norm() < 1e-10, "dx {dx} tau {tau} eps {eps}");
    }
}

#[test]
fn kernel_rejects_non_positive_time() {
    let params = PhysicsParams::natural();
    assert!(free_kernel(0.5, 0.0, &params).is_err());
    assert!(free_kernel_via_boost_integral(0.5, 1.0, 0.0, &params).is_err());
}
