//! One PASS/FAIL line per acceptance criterion, with the measured numbers.
//! Failing criteria are reported, not hidden; the process exits 0 so the
//! rest of the test suite still runs. Set `ACCEPTANCE_STRICT=1` to turn any
//! failure into a nonzero exit.

use isoprofile::cones::{cone_profile, geodesic_ball_in_cone, Cone};
use isoprofile::converge::{inscribed_polygon_sequence, profile_convergence_experiment, small_volume_experiment};
use isoprofile::density::{
    c2_constant, connectedness_check, density_audit, dichotomy_check, dilute_lattice_region, f1, DensityOptions,
    GridTol, Verdict,
};
use isoprofile::par;
use isoprofile::profile::bounds::{profile_curve, upper_bound, CurveOptions, Method, UpperBoundOptions};
use isoprofile::profile::grid::{GridRegion, Stencil};
use isoprofile::profile::oracle::{OracleProblem, OracleStrategy};
use isoprofile::profile::{concavity_audit, curvature_audit, scaling_audit, ProfileCurve, Provenance, Sample};
use isoprofile::transport::{analytic_lip_bound, build_map};
use isoprofile::ConvexBody;
use rand::Rng;
use std::f64::consts::PI;
use std::time::Instant;

const SEED: u64 = 20240611;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, pass: bool, detail: String, start: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {detail} ({:.1}s)", start.elapsed().as_secs_f64());
        if !pass {
            self.failures.push(id.to_string());
        }
    }
}

fn square() -> ConvexBody {
    ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

fn disk() -> ConvexBody {
    ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap()
}

fn triangle() -> ConvexBody {
    ConvexBody::polytope(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 3.0]]).unwrap()
}

fn square_profile(v: f64) -> f64 {
    (PI * v).sqrt().min(1.0).min((PI * (1.0 - v)).sqrt())
}

fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

fn random_polygon(seed: u64, stream: u64) -> ConvexBody {
    let mut rng = par::rng_for(seed, stream);
    loop {
        let k = rng.random_range(4..10);
        let pts: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let t = rng.random::<f64>() * 2.0 * PI;
                let r = 0.5 + rng.random::<f64>();
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        if let Ok(b) = ConvexBody::polytope(&pts) {
            if b.inradius() > 0.2 {
                return b;
            }
        }
    }
}

fn cone_criterion(rep: &mut Report) {
    let t = Instant::now();
    let v = 0.05;
    let mut formula_err: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut parts = Vec::new();
    for alpha in [PI / 6.0, PI / 2.0, PI] {
        let f = cone_profile(alpha, 1, v).unwrap();
        let closed = alpha.powf(0.5) * 2f64.sqrt() * v.sqrt();
        let (rho, per) = geodesic_ball_in_cone(alpha, 1, v).unwrap();
        formula_err = formula_err.max((f - per).abs()).max((f - closed).abs());

        let cone = Cone::planar_sector(alpha).unwrap();
        let w = 1.6 * rho;
        let half = if alpha < PI { w * (alpha / 2.0).sin() } else { w };
        let problem = OracleProblem::over_window(
            &cone,
            &[0.0, -half],
            &[w, half],
            96,
            Stencil::default_for(2),
            vec![vec![0.0, 0.0]],
        )
        .unwrap();
        let res = problem.solve_volume(v, OracleStrategy::anneal(SEED)).unwrap();
        let rel = (res.perimeter - f).abs() / f;
        worst_rel = worst_rel.max(rel);
        parts.push(format!("α={alpha:.4}: oracle {:.5} vs {f:.5}", res.perimeter));
    }
    rep.line(
        "C1",
        "cone profile formula",
        formula_err <= 1e-12 && worst_rel <= 0.05,
        format!(
            "formula vs geodesic ball max |Δ| = {formula_err:.2e} (≤ 1e-12); oracle worst rel err {:.2}% (≤ 5%); {}",
            100.0 * worst_rel,
            parts.join(", ")
        ),
        t,
    );
}

fn square_criterion(rep: &mut Report) {
    let t = Instant::now();
    let sq = square();
    let vs = grid(0.02, 0.98, 0.02);
    let max_dev = par::map_slice(&vs, |&v| (upper_bound(&sq, v).unwrap().0 - square_profile(v)).abs())
        .into_iter()
        .fold(0.0, f64::max);
    let problem = OracleProblem::for_body(&sq, 64, Stencil::default_for(2)).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for v in [0.1, 0.3, 0.5] {
        let p = problem.solve_volume(v, OracleStrategy::anneal(SEED)).unwrap().perimeter;
        let rel = (p - square_profile(v)).abs() / square_profile(v);
        worst = worst.max(rel);
        parts.push(format!("v={v}: {p:.4}"));
    }
    rep.line(
        "C2",
        "square profile",
        max_dev <= 1e-6 && worst <= 0.05,
        format!(
            "upper bound max |Δ| = {max_dev:.2e} (≤ 1e-6); oracle worst rel err {:.2}% (≤ 5%); {}",
            100.0 * worst,
            parts.join(", ")
        ),
        t,
    );
}

fn upper_curve(body: &ConvexBody, id: &str, vs: &[f64]) -> ProfileCurve {
    profile_curve(body, id, vs, &[Method::Upper], &CurveOptions::default()).unwrap()
}

fn concavity_criterion(rep: &mut Report) {
    let t = Instant::now();
    let fracs = grid(0.02, 0.98, 0.02);
    let mut worst_exact: f64 = f64::NEG_INFINITY;
    let mut all = true;
    let mut analytic = ProfileCurve::new("square", 1.0, 1).unwrap();
    for &v in &fracs {
        analytic
            .push(Sample {
                v,
                value: square_profile(v),
                provenance: Provenance::Analytic,
                uncertainty: 0.0,
                witness: String::new(),
            })
            .unwrap();
    }
    let a = concavity_audit(&analytic, Provenance::Analytic, 1e-9).unwrap();
    worst_exact = worst_exact.max(a.max_second_difference);
    all &= a.pass;
    for (id, body) in [("square", square()), ("disk", disk()), ("triangle", triangle())] {
        let total = body.exact_volume().unwrap();
        let vs: Vec<f64> = fracs.iter().map(|f| f * total).collect();
        let r = concavity_audit(&upper_curve(&body, id, &vs), Provenance::UpperBound, 1e-9).unwrap();
        worst_exact = worst_exact.max(r.max_second_difference);
        all &= r.pass;
    }
    let sq = square();
    let oracle_vs = grid(0.1, 0.9, 0.1);
    let opts = CurveOptions {
        resolution: 48,
        seed: SEED,
        ..CurveOptions::default()
    };
    let oc = profile_curve(&sq, "square", &oracle_vs, &[Method::Oracle], &opts).unwrap();
    let o = concavity_audit(&oc, Provenance::Oracle, 0.0).unwrap();
    all &= o.pass;

    let mut corrupted = analytic.clone();
    for s in corrupted.samples.iter_mut() {
        if (s.v - 0.5).abs() < 1e-12 {
            s.value *= 1.1;
        }
    }
    let neg = concavity_audit(&corrupted, Provenance::Analytic, 1e-9).unwrap();
    rep.line(
        "C3",
        "concavity of y",
        all && !neg.pass,
        format!(
            "max second difference {worst_exact:.2e} on analytic/upper curves (≤ 1e-9); oracle excess over 3σ {:.2e} (≤ 0); corrupted curve {}",
            o.max_excess,
            if neg.pass { "passed (should fail)" } else { "fails" }
        ),
        t,
    );
}

fn scaling_criterion(rep: &mut Report) {
    let t = Instant::now();
    let mut eq: f64 = 0.0;
    let mut one: f64 = f64::INFINITY;
    let mut all = true;
    for body in [square(), disk(), triangle()] {
        let total = body.exact_volume().unwrap();
        let vs: Vec<f64> = grid(0.05, 0.95, 0.05).iter().map(|f| f * total).collect();
        for lambda in [0.5, 2.0, 3.0] {
            let r = scaling_audit(&body, lambda, &vs, 1e-9, &UpperBoundOptions::default()).unwrap();
            eq = eq.max(r.equality_defect);
            one = one.min(r.one_sided_defect);
            all &= r.pass;
        }
    }
    rep.line(
        "C4",
        "scaling laws",
        all && eq <= 1e-9 && one >= -1e-9,
        format!("equality defect {eq:.2e} (≤ 1e-9); one-sided defect {one:.2e} (≥ -1e-9)"),
        t,
    );
}

fn lipschitz_criterion(rep: &mut Report) {
    let t = Instant::now();
    let eleven = analytic_lip_bound(1.0, 2.0).unwrap();
    let pairs = par::map_range(20, |i| {
        let a = random_polygon(SEED, 2 * i as u64);
        let b = random_polygon(SEED, 2 * i as u64 + 1);
        let map = build_map(&a, &b).unwrap();
        let (lf, li) = map.empirical_lip(20_000, par::derive_seed(SEED, i as u64));
        (lf.max(li), map.analytic_bound().unwrap())
    });
    let within = pairs.iter().all(|(e, b)| e <= b);
    let worst_ratio = pairs.iter().map(|(e, b)| e / b).fold(0.0, f64::max);
    let p64 = &inscribed_polygon_sequence(1.0, &[64]).unwrap()[0];
    let map = build_map(p64, &disk()).unwrap();
    let (lf, li) = map.empirical_lip(100_000, SEED);
    let k64 = lf.max(li);
    rep.line(
        "C5",
        "Lipschitz bound",
        eleven == 11.0 && within && k64 <= 1.01,
        format!(
            "bound(1,2) = {eleven}; 20 random pairs within bound: {within} (max empirical/bound {worst_ratio:.3}); 64-gon→disk dilatations ({lf:.4}, {li:.4}) (≤ 1.01)"
        ),
        t,
    );
}

fn convergence_criterion(rep: &mut Report) {
    let t = Instant::now();
    let ks = [16, 32, 64];
    let seq: Vec<(usize, ConvexBody)> = ks
        .iter()
        .copied()
        .zip(inscribed_polygon_sequence(1.0, &ks).unwrap())
        .collect();
    let lambdas = grid(0.1, 0.9, 0.1);
    let r = profile_convergence_experiment(&seq, &disk(), &lambdas, 0.05, Some((64, SEED))).unwrap();
    let sups: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("k={}: {:.4}", row.k, row.sup_deviation))
        .collect();
    let (half, _) = r.oracle_half.unwrap();
    let half_ok = (half - 2.0).abs() <= 0.1;
    rep.line(
        "C6",
        "profile convergence",
        r.pass && half_ok,
        format!(
            "sup deviations {} (nonincreasing: {}, final ≤ 0.05); oracle J(1/2) on the 64-gon {half:.4} (within 5% of 2)",
            sups.join(", "),
            r.monotone
        ),
        t,
    );
}

fn c2_criterion(rep: &mut Report) {
    let t = Instant::now();
    let c = c2_constant(1);
    let dev = (1..=3).map(|n| (f1(n, c2_constant(n)) + 0.5).abs()).fold(0.0, f64::max);
    rep.line(
        "C7",
        "c2 constant",
        (c - 16.0 / 25.0).abs() <= 1e-10 && dev <= 1e-9,
        format!("c2(1) = {c:.12} (16/25 to 1e-10); max |f1(c2) + 1/2| over n=1..3 = {dev:.2e} (≤ 1e-9)"),
        t,
    );
}

struct Minimizer {
    label: String,
    body: ConvexBody,
    region: GridRegion,
}

fn minimizers() -> Vec<Minimizer> {
    let bodies = [("square", square()), ("disk", disk()), ("triangle", triangle())];
    let jobs: Vec<(usize, f64)> = (0..3).flat_map(|b| [0.1, 0.3, 0.5].map(|l| (b, l))).collect();
    par::map_slice(&jobs, |&(b, lambda)| {
        let (id, body) = &bodies[b];
        let total = body.exact_volume().unwrap();
        let problem = OracleProblem::for_body(body, 64, Stencil::default_for(2)).unwrap();
        let res = problem
            .solve_volume(lambda * total, OracleStrategy::anneal(SEED))
            .unwrap();
        Minimizer {
            label: format!("{id}@{lambda}"),
            body: body.clone(),
            region: res.region,
        }
    })
}

fn density_criteria(rep: &mut Report, mins: &[Minimizer]) {
    let t = Instant::now();
    let opts = DensityOptions {
        probes: 512,
        seed: SEED,
        ..DensityOptions::default()
    };
    let reports = par::map_slice(mins, |m| {
        density_audit(&m.region, &m.body, &m.label, "oracle", &opts).unwrap()
    });
    let fails: usize = reports.iter().map(|r| r.fail).sum();
    let decided: usize = reports.iter().map(|r| r.pass + r.fail).sum();
    let lower_fails: usize = reports
        .iter()
        .map(|r| r.lower_density.iter().filter(|p| p.verdict == Verdict::Fail).count())
        .sum();

    // Negative control: isolated cells spaced so that every ball holds
    // less than half of ε of them, yet half-radius balls still hit one.
    let sq_half = reports
        .iter()
        .zip(mins)
        .find(|(_, m)| m.label == "square@0.5")
        .map(|(r, m)| (r.epsilon, m.region.grid.clone()))
        .unwrap();
    let period = (2.0 / sq_half.0).sqrt().ceil() as usize;
    let lattice = dilute_lattice_region(sq_half.1, period).unwrap();
    let probes = dichotomy_check(&lattice, &square(), sq_half.0, 512, SEED, GridTol::ExcludeBoundaryLayer).unwrap();
    let control_fails = probes.iter().filter(|p| p.verdict == Verdict::Fail).count();
    rep.line(
        "C8",
        "density dichotomy",
        fails == 0 && control_fails >= 1,
        format!(
            "{fails} Fail verdicts over 9 minimizers × 512 probes ({decided} non-vacuous; lower-density fails {lower_fails}); lattice control (period {period}, ε = {:.2e}) has {control_fails} Fail",
            sq_half.0
        ),
        t,
    );
}

fn connectedness_criterion(rep: &mut Report, mins: &[Minimizer]) {
    let t = Instant::now();
    let bad: Vec<String> = mins
        .iter()
        .filter(|m| connectedness_check(&m.region) != (true, true))
        .map(|m| m.label.clone())
        .collect();
    rep.line(
        "C9",
        "connectedness",
        bad.is_empty(),
        format!("{} of 9 minimizers have a disconnected side {:?}", bad.len(), bad),
        t,
    );
}

fn small_volume_criterion(rep: &mut Report) {
    let t = Instant::now();
    let sq = square();
    let ratio_dev = grid(0.01, 1.0 / PI, 0.01)
        .iter()
        .map(|&v| (upper_bound(&sq, v).unwrap().0 / cone_profile(PI / 2.0, 1, v).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let tri = triangle();
    let total = tri.exact_volume().unwrap();
    let r = small_volume_experiment(&tri, &[0.01 * total], 96, SEED, (0.95, 1.10)).unwrap();
    let row = &r.rows[0];
    let ratio_ok = (0.95..=1.10).contains(&row.oracle_ratio);
    let pass = ratio_dev <= 1e-9 && row.at_min_vertex && row.rescaled_hausdorff <= row.rescaled_tolerance && ratio_ok;
    rep.line(
        "C10",
        "small-volume asymptotics",
        pass,
        format!(
            "square upper/cone ratio max |Δ| = {ratio_dev:.2e} (≤ 1e-9); triangle witness at vertex {} (α_min vertex: {}), rescaled Hausdorff {:.3} (≤ 4h → {:.3}); oracle ratio {:.4} (in [0.95, 1.10])",
            row.nearest_vertex, row.at_min_vertex, row.rescaled_hausdorff, row.rescaled_tolerance, row.oracle_ratio
        ),
        t,
    );
}

fn curvature_criterion(rep: &mut Report) {
    let t = Instant::now();
    let sq = square();
    let curve = upper_curve(&sq, "square", &grid(0.02, 0.98, 0.02));
    let r = curvature_audit(&curve, &sq, 0.1, &UpperBoundOptions::default()).unwrap();
    rep.line(
        "C11",
        "curvature relation",
        r.mismatch <= 1e-3,
        format!(
            "I'(0.1) = {:.6} vs 1/ρ = {:.6}, |Δ| = {:.2e} (≤ 1e-3); scale-free bound holds: {}",
            r.slope_central, r.curvature, r.mismatch, r.bound_holds
        ),
        t,
    );
}

fn oracle_equivalence_criterion(rep: &mut Report) {
    let t = Instant::now();
    let results = par::map_range(10, |i| {
        let body = random_polygon(SEED ^ 0xE0, i as u64);
        let mut res = 6;
        let problem = loop {
            let p = OracleProblem::for_body(&body, res, Stencil::default_for(2)).unwrap();
            if p.graph.len() <= 24 {
                break p;
            }
            res -= 1;
        };
        let m = problem.graph.len();
        let mut rng = par::rng_for(SEED, 1000 + i as u64);
        let target = rng.random_range(1..m);
        let exact = problem.solve(target, OracleStrategy::Exhaustive).unwrap().perimeter;
        let annealed = problem
            .solve(target, OracleStrategy::anneal(par::derive_seed(SEED, i as u64)))
            .unwrap()
            .perimeter;
        (m, target, exact, annealed)
    });
    let mismatches: Vec<String> = results
        .iter()
        .filter(|r| r.2 != r.3)
        .map(|r| format!("{} cells/target {}: {} vs {}", r.0, r.1, r.2, r.3))
        .collect();
    let sizes: Vec<String> = results.iter().map(|r| format!("{}/{}", r.1, r.0)).collect();
    rep.line(
        "C12",
        "exhaustive vs anneal",
        mismatches.is_empty(),
        format!(
            "instances (target/cells) {}; mismatches: {}",
            sizes.join(" "),
            if mismatches.is_empty() {
                "none".into()
            } else {
                mismatches.join("; ")
            }
        ),
        t,
    );
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; only run on a
    // plain invocation or an explicit filter naming this target.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let mut rep = Report { failures: Vec::new() };
    cone_criterion(&mut rep);
    square_criterion(&mut rep);
    concavity_criterion(&mut rep);
    scaling_criterion(&mut rep);
    lipschitz_criterion(&mut rep);
    convergence_criterion(&mut rep);
    c2_criterion(&mut rep);
    let mins = minimizers();
    density_criteria(&mut rep, &mins);
    connectedness_criterion(&mut rep, &mins);
    small_volume_criterion(&mut rep);
    curvature_criterion(&mut rep);
    oracle_equivalence_criterion(&mut rep);
    println!(
        "acceptance: {} of 12 criteria pass{} ({:.1}s)",
        12 - rep.failures.len(),
        if rep.failures.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", rep.failures.join(", "))
        },
        start.elapsed().as_secs_f64()
    );
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") && !rep.failures.is_empty() {
        std::process::exit(1);
    }
}
