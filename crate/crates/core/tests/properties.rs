use isoprofile::cones::{cone_profile, geodesic_ball_in_cone};
use isoprofile::density::h_value;
use isoprofile::io::{fmt12, read_profile_csv, write_profile_csv};
use isoprofile::par;
use isoprofile::profile::bounds::{profile_curve, upper_bound, BallTransfer, CurveOptions, Method};
use isoprofile::profile::grid::{Grid, GridRegion, Stencil};
use isoprofile::profile::oracle::{OracleProblem, OracleStrategy};
use isoprofile::transport::build_map;
use isoprofile::ConvexBody;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Convex polygons as hulls of points on an annulus, kept reasonably round.
fn polygon() -> impl Strategy<Value = ConvexBody> {
    prop::collection::vec((0.0..2.0 * PI, 0.6..1.4f64), 5..12)
        .prop_map(|pts| {
            let p: Vec<Vec<f64>> = pts
                .iter()
                .map(|(t, r)| vec![r * t.cos() + 2.0, r * t.sin() - 1.0])
                .collect();
            ConvexBody::polytope(&p).ok()
        })
        .prop_filter("round enough", |b| b.as_ref().is_some_and(|b| b.inradius() > 0.35))
        .prop_map(|b| b.unwrap())
}

fn unit(t: f64) -> Vec<f64> {
    vec![t.cos(), t.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn radial_times_polar_support_is_one(body in polygon(), t in 0.0..2.0 * PI) {
        let (c, _) = body.centered();
        let polar = c.polar_body().unwrap();
        let u = unit(t);
        let prod = c.radial_function(&u).unwrap() * polar.support_function(&u);
        prop_assert!((prod - 1.0).abs() < 1e-9, "{prod}");
    }

    #[test]
    fn upper_bound_is_symmetric(body in polygon(), f in 0.02..0.98f64) {
        let total = body.exact_volume().unwrap();
        let v = f * total;
        let a = upper_bound(&body, v).unwrap().0;
        let b = upper_bound(&body, total - v).unwrap().0;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn upper_bound_scales(body in polygon(), f in 0.05..0.95f64, lambda in 0.3..3.0f64) {
        let v = f * body.exact_volume().unwrap();
        let big = body.scaled(lambda).unwrap();
        let a = upper_bound(&big, lambda * lambda * v).unwrap().0;
        let b = lambda * upper_bound(&body, v).unwrap().0;
        prop_assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }

    #[test]
    fn upper_bound_meets_the_sharpest_cone(body in polygon(), f in 0.001..0.3f64) {
        // While the cone ball at the sharpest vertex misses every other
        // edge line, it is a candidate and its perimeter is the cone profile.
        let v = f * body.exact_volume().unwrap();
        let m = isoprofile::cones::min_solid_angle_vertex(&body).unwrap();
        let (rho, _) = geodesic_ball_in_cone(m.alpha, 1, v).unwrap();
        let clearance = body
            .halfspaces()
            .iter()
            .map(|h| h.slack(&m.vertex))
            .filter(|&s| s > 1e-9)
            .fold(f64::INFINITY, f64::min);
        prop_assume!(rho < clearance);
        let ub = upper_bound(&body, v).unwrap().0;
        prop_assert!(ub <= m.profile(v).unwrap() * (1.0 + 1e-9), "{ub} vs {}", m.profile(v).unwrap());
    }

    #[test]
    fn fmt12_keeps_twelve_digits(x in -1e6..1e6f64) {
        let y: f64 = fmt12(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-12 * x.abs() + 1e-300);
    }

    #[test]
    fn cone_profile_is_the_geodesic_ball_perimeter(alpha in 0.05..PI, v in 1e-4..10.0f64) {
        let (rho, per) = geodesic_ball_in_cone(alpha, 1, v).unwrap();
        prop_assert!((alpha * rho * rho / 2.0 - v).abs() <= 1e-12 * v);
        prop_assert!((cone_profile(alpha, 1, v).unwrap() - per).abs() <= 1e-12 * per);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn transfer_lower_bound_stays_below_upper(body in polygon(), f in 0.05..0.95f64) {
        let total = body.exact_volume().unwrap();
        let t = BallTransfer::new(&body, 4000, 1).unwrap();
        let v = f * total;
        prop_assert!(t.value(v).unwrap() <= upper_bound(&body, v).unwrap().0);
    }

    #[test]
    fn sampled_dilatations_respect_the_closed_form(a in polygon(), b in polygon(), seed in any::<u64>()) {
        let map = build_map(&a, &b).unwrap();
        let (lf, li) = map.empirical_lip(2000, seed);
        let bound = map.analytic_bound().unwrap();
        prop_assert!(lf >= 1.0 - 1e-12 && li >= 1.0 - 1e-12);
        prop_assert!(lf <= bound && li <= bound, "{lf} {li} vs {bound}");
    }

    #[test]
    fn annealing_never_beats_exhaustive(body in polygon(), seed in any::<u64>(), frac in 0.1..0.9f64) {
        let problem = OracleProblem::for_body(&body, 5, Stencil::default_for(2)).unwrap();
        let m = problem.graph.len();
        prop_assume!(m >= 3 && m <= 24);
        let target = ((frac * m as f64) as usize).clamp(1, m - 1);
        let exact = problem.solve(target, OracleStrategy::Exhaustive).unwrap();
        let annealed = problem.solve(target, OracleStrategy::anneal(seed)).unwrap();
        prop_assert!(annealed.perimeter >= exact.perimeter - 1e-12);
        prop_assert_eq!(annealed.region.cells.len(), target);
    }

    #[test]
    fn density_function_is_at_most_one_half(body in polygon(), seed in any::<u64>(), r in 0.05..1.0f64) {
        use rand::Rng;
        let grid = Arc::new(Grid::for_body(&body, 24).unwrap());
        let mut rng = par::rng_for(seed, 0);
        let cells: Vec<usize> = grid.allowed_cells().iter().copied().filter(|_| rng.random::<bool>()).collect();
        let region = GridRegion::new(grid, cells).unwrap();
        let h = h_value(&region, &body, body.chebyshev_center(), r).unwrap();
        prop_assert!((0.0..=0.5 + 1e-12).contains(&h), "{h}");
    }

    #[test]
    fn profile_csv_round_trips(body in polygon()) {
        let total = body.exact_volume().unwrap();
        let vs: Vec<f64> = (1..10).map(|i| i as f64 / 10.0 * total).collect();
        let c = profile_curve(&body, "p", &vs, &[Method::Upper], &CurveOptions::default()).unwrap();
        let back = read_profile_csv(&write_profile_csv(&c, &[])).unwrap();
        prop_assert_eq!(back.samples.len(), c.samples.len());
        for (a, b) in back.samples.iter().zip(&c.samples) {
            prop_assert!((a.value - b.value).abs() <= 1e-11 * b.value);
            prop_assert_eq!(&a.witness, &b.witness);
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let body = ConvexBody::polytope(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 3.0]]).unwrap();
    let vs = [0.6, 2.0, 3.0, 5.4];
    let opts = CurveOptions {
        resolution: 24,
        seed: 11,
        lip_pairs: 2000,
        ..CurveOptions::default()
    };
    let methods = [Method::Upper, Method::Lower, Method::Oracle];
    let one = par::with_workers(1, || profile_curve(&body, "t", &vs, &methods, &opts).unwrap());
    let four = par::with_workers(4, || profile_curve(&body, "t", &vs, &methods, &opts).unwrap());
    assert_eq!(one.samples, four.samples);
}
