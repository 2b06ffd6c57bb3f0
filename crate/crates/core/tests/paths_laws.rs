use proptest::prelude::*;

use corridor_dynamics::algebra::{PhysicsParams, Rotation};
use corridor_dynamics::paths::{
    boost, concat, concat_corridor, displacement, extension_multiplicator, rotate, Corridor, Path, VelocityRecord,
};
use corridor_dynamics::Error;

const DT: f64 = 0.05;

fn samples(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    (0usize..12).prop_flat_map(move |n| prop::collection::vec(-3.0..3.0f64, n * dim))
}

fn path(dim: usize) -> impl Strategy<Value = Path> {
    samples(dim).prop_map(move |u| Path::new(DT, dim, u).unwrap())
}

fn matched(dim: usize) -> impl Strategy<Value = (Path, VelocityRecord)> {
    (1usize..12).prop_flat_map(move |n| {
        (prop::collection::vec(-3.0..3.0f64, n * dim), prop::collection::vec(-3.0..3.0f64, n * dim)).prop_map(
            move |(u, v)| (Path::new(DT, dim, u).unwrap(), VelocityRecord::new(DT, dim, v).unwrap()),
        )
    })
}

proptest! {
    #[test]
    fn concatenation_is_associative(p in path(3), q in path(3), r in path(3)) {
        let lhs = concat(&concat(&p, &q).unwrap(), &r).unwrap();
        let rhs = concat(&p, &concat(&q, &r).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn empty_path_is_neutral(p in path(1)) {
        let e = Path::empty(DT, 1).unwrap();
        prop_assert_eq!(&concat(&p, &e).unwrap(), &p);
        prop_assert_eq!(&concat(&e, &p).unwrap(), &p);
    }

    #[test]
    fn durations_and_displacements_add(p in path(3), q in path(3)) {
        let pq = concat(&p, &q).unwrap();
        prop_assert!((pq.duration() - p.duration() - q.duration()).abs() < 1e-12);
        let (dp, dq, dpq) = (displacement(&p), displacement(&q), displacement(&pq));
        for c in 0..3 {
            prop_assert!((dpq[c] - dp[c] - dq[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_follows_displacement(p in path(1), x0 in -5.0..5.0f64) {
        let end = p.endpoint_1d(x0).unwrap();
        prop_assert!((end - x0 - displacement(&p)[0]).abs() < 1e-12);
        let xs = p.positions_1d(x0).unwrap();
        prop_assert_eq!(xs.len(), p.len() + 1);
        prop_assert_eq!(xs[0], x0);
    }

    #[test]
    fn boost_distributes_over_concatenation(a in matched(3), b in matched(3)) {
        let ((p, v), (q, w)) = (a, b);
        let lhs = boost(&concat(&p, &q).unwrap(), &v.concat(&w).unwrap()).unwrap();
        let rhs = concat(&boost(&p, &v).unwrap(), &boost(&q, &w).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn boost_by_inverse_returns_the_path((p, v) in matched(1)) {
        let back = boost(&boost(&p, &v).unwrap(), &v.inverse()).unwrap();
        for (x, y) in back.raw().iter().zip(p.raw()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplicator_splits_at_concatenation(a in matched(3), b in matched(3), m in 0.3..3.0f64, hbar in 0.3..3.0f64) {
        let params = PhysicsParams::new(m, hbar).unwrap();
        let ((p, v), (q, w)) = (a, b);
        let whole = extension_multiplicator(&concat(&p, &q).unwrap(), &v.concat(&w).unwrap(), &params).unwrap();
        let split = extension_multiplicator(&p, &v, &params).unwrap() * extension_multiplicator(&q, &w, &params).unwrap();
        prop_assert!((whole - split).norm() < 1e-12);
    }

    #[test]
    fn rotation_preserves_displacement_length(p in path(3), axis in prop::array::uniform3(-1.0..1.0f64), angle in -3.0..3.0f64) {
        prop_assume!(axis.iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let r = Rotation::from_axis_angle(axis, angle);
        let len = |d: Vec<f64>| d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rp = rotate(&p, &r).unwrap();
        prop_assert!((len(displacement(&rp)) - len(displacement(&p))).abs() < 1e-10);
    }

    #[test]
    fn corridor_split_and_concat_round_trip(a in prop::collection::vec(-2.0..2.0f64, 0..20), k in 0usize..20) {
        let c = Corridor::new(DT, a).unwrap();
        let k = k.min(c.len());
        let (c1, c2) = c.split_at(k);
        prop_assert_eq!(c1.len(), k);
        prop_assert_eq!(concat_corridor(&c1, &c2).unwrap(), c);
    }
}

#[test]
fn mismatched_slice_widths_are_rejected() {
    let p = Path::from_scalars(0.1, vec![1.0]).unwrap();
    let q = Path::from_scalars(0.2, vec![1.0]).unwrap();
    assert!(matches!(concat(&p, &q), Err(Error::GridMismatch { .. })));
    let w = VelocityRecord::new(0.1, 1, vec![1.0, 2.0]).unwrap();
    assert!(boost(&p, &w).is_err());
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let p = Path::from_scalars(0.1, vec![1.0]).unwrap();
    let q = Path::from_vectors(0.1, &[[1.0, 2.0, 3.0]]).unwrap();
    assert!(matches!(concat(&p, &q), Err(Error::Dimension { .. })));
    assert!(rotate(&p, &Rotation::default()).is_err());
    assert!(Path::new(0.1, 2, vec![1.0, 2.0]).is_err());
}

#[test]
fn invalid_samples_are_rejected() {
    assert!(Path::from_scalars(0.0, vec![1.0]).is_err());
    assert!(Path::from_scalars(0.1, vec![f64::NAN]).is_err());
    assert!(Corridor::new(-0.1, vec![1.0]).is_err());
}

#[test]
fn corridor_reads_csv() {
    let c = Corridor::from_csv(0.25, "0.5\n-1\n 2.0 \n".as_bytes()).unwrap();
    assert_eq!(c.samples(), &[0.5, -1.0, 2.0]);
    assert!(Corridor::from_csv(0.25, "0.5\nabc\n".as_bytes()).is_err());
}
