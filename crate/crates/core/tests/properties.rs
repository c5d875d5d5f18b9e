use std::f64::consts::PI;

use homentropy::groups::{haar_sample, tangent_sample, Component, GroupKind, GroupSpec, HomSpace, SubgroupSpec};
use homentropy::matcore::{expm_skew, logm_unitary, matrix_norm, CMatrix, NormSpec};
use homentropy::metrics::{extrinsic_dist, intrinsic_dist, quotient_dist_exact, CosetPoint};
use proptest::prelude::*;

fn norms() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::Operator),
        Just(NormSpec::Schatten(1.0)),
        Just(NormSpec::Schatten(2.0)),
        (1.5f64..6.0).prop_map(NormSpec::Schatten),
    ]
}

fn kinds() -> impl Strategy<Value = GroupKind> {
    prop_oneof![Just(GroupKind::U), Just(GroupKind::SO)]
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn intrinsic_distance_is_bi_invariant(n in 1usize..5, seed in any::<u64>(), norm in norms()) {
        let g = GroupSpec::new(GroupKind::U, n).unwrap();
        let (u, v, w) = (haar_sample(&g, seed), haar_sample(&g, seed ^ 1), haar_sample(&g, seed ^ 2));
        // stay off the branch so every norm is defined
        prop_assume!(intrinsic_dist(&u, &v, &NormSpec::Operator).unwrap() < PI - 1e-6);
        let d = intrinsic_dist(&u, &v, &norm).unwrap();
        let left = intrinsic_dist(&w.mul(&u).unwrap(), &w.mul(&v).unwrap(), &norm).unwrap();
        let right = intrinsic_dist(&u.mul(&w).unwrap(), &v.mul(&w).unwrap(), &norm).unwrap();
        prop_assert!((d - left).abs() < 1e-8 && (d - right).abs() < 1e-8, "{d} {left} {right}");
    }

    #[test]
    fn exp_log_round_trip(n in 1usize..5, kind in kinds(), seed in any::<u64>(), radius in 0.01f64..(PI - 0.1)) {
        prop_assume!(kind == GroupKind::U || n >= 2);
        let space = HomSpace::whole_group(GroupSpec::new(kind, n).unwrap(), NormSpec::Operator).unwrap();
        let x = tangent_sample(&space, Component::Full, radius, seed).unwrap();
        let back = logm_unitary(&expm_skew(&x)).unwrap();
        prop_assert!(max_diff(x.matrix().as_matrix(), back.matrix().as_matrix()) < 1e-9);
    }

    #[test]
    fn schatten_norms_are_ordered(n in 1usize..5, seed in any::<u64>(), p in 1.0f64..8.0) {
        let space = HomSpace::whole_group(GroupSpec::new(GroupKind::U, n).unwrap(), NormSpec::Operator).unwrap();
        let x = tangent_sample(&space, Component::Full, 2.0, seed).unwrap();
        let m = x.matrix().as_matrix();
        let op = matrix_norm(m, &NormSpec::Operator).unwrap();
        let sp = matrix_norm(m, &NormSpec::Schatten(p)).unwrap();
        let sq = matrix_norm(m, &NormSpec::Schatten(p + 1.0)).unwrap();
        prop_assert!(op <= sq * (1.0 + 1e-12) && sq <= sp * (1.0 + 1e-12));
        prop_assert!(sp <= (n as f64).powf(1.0 / p) * op * (1.0 + 1e-12));
    }

    #[test]
    fn extrinsic_below_intrinsic(n in 1usize..5, seed in any::<u64>(), norm in norms()) {
        let g = GroupSpec::new(GroupKind::U, n).unwrap();
        let (u, v) = (haar_sample(&g, seed), haar_sample(&g, seed ^ 7));
        prop_assume!(intrinsic_dist(&u, &v, &NormSpec::Operator).unwrap() < PI - 1e-6);
        let e = extrinsic_dist(&u, &v, &norm).unwrap();
        let i = intrinsic_dist(&u, &v, &norm).unwrap();
        prop_assert!(e <= i + 1e-12);
        // |1 - e^{i phi}| >= (2/pi) |phi| on [-pi, pi]
        prop_assert!(e >= 2.0 / PI * i - 1e-12);
    }

    #[test]
    fn intrinsic_metric_axioms(n in 1usize..4, kind in kinds(), seed in any::<u64>()) {
        prop_assume!(kind == GroupKind::U || n >= 2);
        let g = GroupSpec::new(kind, n).unwrap();
        let (u, v, w) = (haar_sample(&g, seed), haar_sample(&g, seed ^ 3), haar_sample(&g, seed ^ 5));
        let d = |a, b| intrinsic_dist(a, b, &NormSpec::Operator).unwrap();
        prop_assert!(d(&u, &u) < 1e-12);
        prop_assert!((d(&u, &v) - d(&v, &u)).abs() < 1e-12);
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-10);
        prop_assert!(d(&u, &v) <= PI + 1e-12);
    }

    #[test]
    fn grassmann_quotient_is_a_metric(n in 2usize..5, k in 1usize..4, seed in any::<u64>()) {
        prop_assume!(k < n);
        let space = HomSpace::new(
            GroupSpec::new(GroupKind::U, n).unwrap(),
            SubgroupSpec::Grassmann { k },
            NormSpec::Operator,
        )
        .unwrap();
        let pt = |s| CosetPoint::new(haar_sample(space.group(), s), &space).unwrap();
        let (a, b, c) = (pt(seed), pt(seed ^ 9), pt(seed ^ 11));
        let d = |p: &CosetPoint, q: &CosetPoint| quotient_dist_exact(p, q).unwrap().unwrap();
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-10);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        prop_assert!(d(&a, &b) <= PI / 2.0 + 1e-10);
    }

    #[test]
    fn quotient_distance_ignores_representative(seed in any::<u64>(), hseed in any::<u64>()) {
        let space = HomSpace::new(
            GroupSpec::new(GroupKind::U, 4).unwrap(),
            SubgroupSpec::Grassmann { k: 2 },
            NormSpec::Operator,
        )
        .unwrap();
        let u = haar_sample(space.group(), seed);
        let v = haar_sample(space.group(), seed ^ 13);
        let h = expm_skew(&tangent_sample(&space, Component::H, 3.0, hseed).unwrap());
        let p = CosetPoint::new(u.clone(), &space).unwrap();
        let q = CosetPoint::new(v.clone(), &space).unwrap();
        let q2 = CosetPoint::new(v.mul(&h).unwrap(), &space).unwrap();
        let d1 = quotient_dist_exact(&p, &q).unwrap().unwrap();
        let d2 = quotient_dist_exact(&p, &q2).unwrap().unwrap();
        prop_assert!((d1 - d2).abs() < 1e-9);
    }
}

/// Kolmogorov-Smirnov distance of a sample against a continuous CDF.
fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

// 1% critical value of the one-sample KS statistic
fn ks_critical(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[test]
fn haar_unitary_entry_modulus() {
    // |u_11|^2 ~ Beta(1, n - 1) for Haar U(n)
    let n = 3;
    let g = GroupSpec::new(GroupKind::U, n).unwrap();
    let xs: Vec<f64> = (0..2000).map(|s| haar_sample(&g, s).matrix().as_matrix()[(0, 0)].norm_sqr()).collect();
    let d = ks_distance(xs, |x| 1.0 - (1.0 - x).powi(n as i32 - 1));
    assert!(d < ks_critical(2000), "KS {d}");
}

#[test]
fn haar_unitary_eigenphase_uniform() {
    // a single eigenphase of Haar U(1) is uniform on (-pi, pi]
    let g = GroupSpec::new(GroupKind::U, 1).unwrap();
    let xs: Vec<f64> = (0..2000).map(|s| haar_sample(&g, s).matrix().as_matrix()[(0, 0)].arg()).collect();
    let d = ks_distance(xs, |x| (x + PI) / (2.0 * PI));
    assert!(d < ks_critical(2000), "KS {d}");
}

#[test]
fn haar_rotation_entry() {
    // u_11 is uniform on [-1, 1] for Haar SO(3)
    let g = GroupSpec::new(GroupKind::SO, 3).unwrap();
    let xs: Vec<f64> = (0..2000).map(|s| haar_sample(&g, s).matrix().as_matrix()[(0, 0)].re).collect();
    let d = ks_distance(xs, |x| (x + 1.0) / 2.0);
    assert!(d < ks_critical(2000), "KS {d}");
}

#[test]
fn haar_rotation_determinant() {
    let g = GroupSpec::new(GroupKind::SO, 4).unwrap();
    for s in 0..200 {
        let det = haar_sample(&g, s).matrix().as_matrix().determinant();
        assert!((det.re - 1.0).abs() < 1e-10 && det.im.abs() < 1e-10);
    }
}
