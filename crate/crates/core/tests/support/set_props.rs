//! Set-algebra properties shared by the proptest suite and the acceptance
//! runner. Support functions are evaluated independently of the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonotube::sets::{random_unit, IntervalBox, VPolytope, Zonotope};

pub const CASES: u32 = 10_000;
const TOL: f64 = 1e-12;

type Check = std::result::Result<(), TestCaseError>;

pub fn zonotope(n: usize, max_gens: usize) -> impl Strategy<Value = Zonotope> {
    (
        prop::collection::vec(-2.0..2.0f64, n),
        (0..=max_gens).prop_flat_map(move |p| prop::collection::vec(-1.0..1.0f64, n * p)),
    )
        .prop_map(move |(c, g)| {
            let p = g.len() / n;
            Zonotope::new(DVector::from_vec(c), DMatrix::from_vec(n, p, g)).unwrap()
        })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.5..1.5f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// `dᵀc + Σ|dᵀ R_j|` written out independently of the library.
pub fn support(z: &Zonotope, d: &DVector<f64>) -> f64 {
    let c = z.center().dot(d);
    c + z.generators().column_iter().map(|g| g.dot(d).abs()).sum::<f64>()
}

fn directions(n: usize, seed: u64, count: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<DVector<f64>> = (0..n)
        .flat_map(|i| {
            let e = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            [e.clone(), -e]
        })
        .collect();
    out.extend((0..count).map(|_| random_unit(n, &mut rng)));
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

pub fn minkowski_input() -> impl Strategy<Value = ((Zonotope, Zonotope, Zonotope), u64)> {
    ((1usize..=5).prop_flat_map(|n| (zonotope(n, 6), zonotope(n, 6), zonotope(n, 6))), any::<u64>())
}

pub fn minkowski_sum_is_commutative_and_associative(((a, b, c), seed): ((Zonotope, Zonotope, Zonotope), u64)) -> Check {
    let ab = a.minkowski_sum(&b).unwrap();
    let ba = b.minkowski_sum(&a).unwrap();
    let ab_c = ab.minkowski_sum(&c).unwrap();
    let a_bc = a.minkowski_sum(&b.minkowski_sum(&c).unwrap()).unwrap();
    prop_assert_eq!(ab.num_generators(), a.num_generators() + b.num_generators());
    for d in directions(a.dim(), seed, 8) {
        prop_assert!(close(support(&ab, &d), support(&ba, &d)));
        prop_assert!(close(support(&ab_c, &d), support(&a_bc, &d)));
        prop_assert!(close(support(&ab, &d), support(&a, &d) + support(&b, &d)));
    }
    Ok(())
}

pub fn image_input() -> impl Strategy<Value = ((Zonotope, DMatrix<f64>, DMatrix<f64>), u64)> {
    (
        (1usize..=5, 1usize..=5, 1usize..=5).prop_flat_map(|(n, k, m)| (zonotope(n, 6), matrix(k, n), matrix(m, k))),
        any::<u64>(),
    )
}

pub fn linear_images_compose(((z, m1, m2), seed): ((Zonotope, DMatrix<f64>, DMatrix<f64>), u64)) -> Check {
    let two_step = z.linear_image(&m1).unwrap().linear_image(&m2).unwrap();
    let one_step = z.linear_image(&(&m2 * &m1)).unwrap();
    for d in directions(m2.nrows(), seed, 8) {
        prop_assert!(close(support(&two_step, &d), support(&one_step, &d)));
    }
    Ok(())
}

pub fn vertex_input() -> impl Strategy<Value = (Zonotope, u64)> {
    ((1usize..=3).prop_flat_map(|n| zonotope(n, 8)), any::<u64>())
}

pub fn library_support_matches_brute_force_vertices((z, seed): (Zonotope, u64)) -> Check {
    let pts = z.sign_points().unwrap();
    for d in directions(z.dim(), seed, 4) {
        let brute = pts.iter().map(|p| p.dot(&d)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(close(z.support(&d).unwrap(), brute));
    }
    Ok(())
}

pub fn erosion_tight_input() -> impl Strategy<Value = (Zonotope, Vec<f64>, Vec<f64>)> {
    (1usize..=5).prop_flat_map(|n| {
        (zonotope(n, 6), prop::collection::vec(-5.0..0.0f64, n), prop::collection::vec(0.0..10.0f64, n))
    })
}

pub fn erosion_is_tight_on_every_axis((z, lo, width): (Zonotope, Vec<f64>, Vec<f64>)) -> Check {
    let n = z.dim();
    let x = IntervalBox::new(
        DVector::from_vec(lo.clone()),
        DVector::from_iterator(n, lo.iter().zip(&width).map(|(l, w)| l + w)),
    )
    .unwrap();
    let e = x.erode(&z).unwrap();
    for i in 0..n {
        let ei = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
        prop_assert!(close(e.upper()[i] + support(&z, &ei), x.upper()[i]));
        prop_assert!(close(e.lower()[i] - support(&z, &-&ei), x.lower()[i]));
    }
    Ok(())
}

pub fn erosion_sound_input() -> impl Strategy<Value = ((Zonotope, Vec<f64>), u64)> {
    ((1usize..=4).prop_flat_map(|n| (zonotope(n, 5), prop::collection::vec(0.0..3.0f64, n))), any::<u64>())
}

pub fn erosion_is_sound(((z, margin), seed): ((Zonotope, Vec<f64>), u64)) -> Check {
    let n = z.dim();
    // wide enough that the erosion is non-empty
    let r = z.axis_radius();
    let half: Vec<f64> = (0..n).map(|i| z.center()[i].abs() + r[i] + margin[i]).collect();
    let x = IntervalBox::symmetric(&half).unwrap();
    let e = x.erode(&z).unwrap();
    prop_assert!(!e.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let xt = DVector::from_fn(n, |i, _| rng.gen_range(e.lower()[i]..=e.upper()[i]));
        let xi = DVector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
        prop_assert!(x.contains(&(xt + z.point_at(&xi)), 1e-12));
    }
    Ok(())
}

pub fn reduction_input() -> impl Strategy<Value = (Zonotope, usize, u64)> {
    ((1usize..=5).prop_flat_map(|n| zonotope(n, 30)), 0usize..10, any::<u64>())
}

pub fn reduction_never_shrinks_support((z, extra, seed): (Zonotope, usize, u64)) -> Check {
    let n = z.dim();
    let p_max = n + extra;
    let r = z.reduce_generators(p_max).unwrap();
    prop_assert!(r.num_generators() <= p_max);
    prop_assert_eq!(r.center(), z.center());
    for d in directions(n, seed, 16) {
        prop_assert!(support(&r, &d) >= support(&z, &d) - TOL * (1.0 + support(&z, &d).abs()));
    }
    Ok(())
}

pub fn union_input() -> impl Strategy<Value = (Vec<Zonotope>, u64)> {
    ((1usize..=4, 1usize..=8).prop_flat_map(|(n, k)| prop::collection::vec(zonotope(n, 4), k)), any::<u64>())
}

pub fn union_enclosure_contains_members((members, seed): (Vec<Zonotope>, u64)) -> Check {
    let hull = Zonotope::enclose_union(&members).unwrap();
    for d in directions(hull.dim(), seed, 8) {
        let h = support(&hull, &d);
        for m in &members {
            let s = support(m, &d);
            prop_assert!(s <= h + TOL * (1.0 + s.abs()));
        }
    }
    Ok(())
}

pub fn hull_input() -> impl Strategy<Value = (Zonotope, u64)> {
    ((1usize..=5).prop_flat_map(|n| zonotope(n, 6)), any::<u64>())
}

pub fn interval_hull_is_tight_and_contains_points((z, seed): (Zonotope, u64)) -> Check {
    let h = z.interval_hull();
    let n = z.dim();
    for i in 0..n {
        let ei = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
        prop_assert!(close(h.upper()[i], support(&z, &ei)));
        prop_assert!(close(h.lower()[i], -support(&z, &-&ei)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi = DVector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
    prop_assert!(h.contains(&z.point_at(&xi), 1e-12));
    Ok(())
}

pub fn box_input() -> impl Strategy<Value = Vec<(i32, i32)>> {
    prop::collection::vec((-4096i32..4096, 0i32..4096), 1..=6)
}

pub fn box_round_trip_is_bitwise(bounds: Vec<(i32, i32)>) -> Check {
    // dyadic bounds, so midpoint and half-width are exact
    let b: Vec<(f64, f64)> = bounds
        .iter()
        .map(|&(l, w)| (f64::from(l) / 1024.0, f64::from(l + w) / 1024.0))
        .collect();
    let x = IntervalBox::from_bounds(&b).unwrap();
    let back = x.to_zonotope().unwrap().interval_hull();
    prop_assert_eq!(back.lower(), x.lower());
    prop_assert_eq!(back.upper(), x.upper());
    Ok(())
}

pub fn polytope_input() -> impl Strategy<Value = ((Zonotope, Zonotope), u64)> {
    ((2usize..=3).prop_flat_map(|n| (zonotope(n, 3), zonotope(n, 3))), any::<u64>())
}

pub fn polytope_sum_matches_zonotope_sum(((a, b), seed): ((Zonotope, Zonotope), u64)) -> Check {
    let pa = VPolytope::from_zonotope(&a).unwrap();
    let pb = VPolytope::from_zonotope(&b).unwrap();
    let sum = pa.minkowski_sum(&pb).unwrap();
    let zs = a.minkowski_sum(&b).unwrap();
    for d in directions(a.dim(), seed, 8) {
        prop_assert!((sum.support(&d).unwrap() - support(&zs, &d)).abs() <= 1e-9);
    }
    Ok(())
}

fn run<S: Strategy>(name: &str, cases: u32, s: S, f: impl Fn(S::Value) -> Check) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&s, f).map_err(|e| format!("{name}: {e}"))
}

/// Every property above with `cases` cases each; the first failure is
/// returned.
pub fn run_all(cases: u32) -> Result<(), String> {
    run("minkowski sum", cases, minkowski_input(), minkowski_sum_is_commutative_and_associative)?;
    run("linear image", cases, image_input(), linear_images_compose)?;
    run("support vs vertices", cases, vertex_input(), library_support_matches_brute_force_vertices)?;
    run("erosion tight", cases, erosion_tight_input(), erosion_is_tight_on_every_axis)?;
    run("erosion sound", cases, erosion_sound_input(), erosion_is_sound)?;
    run("reduction", cases, reduction_input(), reduction_never_shrinks_support)?;
    run("union enclosure", cases, union_input(), union_enclosure_contains_members)?;
    run("interval hull", cases, hull_input(), interval_hull_is_tight_and_contains_points)?;
    run("box round trip", cases, box_input(), box_round_trip_is_bitwise)?;
    run("polytope sum", cases, polytope_input(), polytope_sum_matches_zonotope_sum)
}
