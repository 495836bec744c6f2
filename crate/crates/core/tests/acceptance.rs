use std::process::Command;
use std::time::{Duration, Instant};

use qclab::bootstrap::{bootstrap_verify, moved, standard_domain, BootstrapConfig, BootstrapReport};
use qclab::charts::{c2_diagnostic, chart_pairs, chart_product_bound, ellipsoid_atlas, normalize_at, GraphChart, Surface};
use qclab::extension::{oracle_harmonics, BoundaryData, HarmonicField};
use qclab::kernels::kernel_bound_certificate;
use qclab::qc::{self, distortion, distortion_grid, mori_check, mori_exponent, Ellipsoid, JacobianSource, MoriSampler};
use qclab::regularity::{bounded_gradient_check, decay_profile, radial_holder_from_gradient, small_radius_bound, RadialGrid};
use qclab::sampling::{rng, spread_points, uniform_ball, uniform_sphere};
use qclab::sphere::{dist, norm, BallPoint, SpherePoint};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: u64) -> bool {
    elapsed <= Duration::from_secs(limit)
}

fn oracle_points(n: usize) -> Vec<BallPoint> {
    let mut r = rng(11);
    let mut pts: Vec<BallPoint> = (0..40).map(|_| uniform_ball(&mut r, n, 0.9)).collect();
    pts.extend(spread_points(n, 12).iter().map(|d| BallPoint::on_ray(d, 0.9).unwrap()));
    pts.push(BallPoint::origin(n));
    pts
}

fn criterion_1() -> Verdict {
    let (mut ev, mut eg, mut count) = (0.0f64, 0.0f64, 0);
    for n in [2, 3] {
        let pts = oracle_points(n);
        for d in 0..=4 {
            for h in oracle_harmonics(n, d).unwrap() {
                let field = HarmonicField::new(h.data()).unwrap();
                for x in &pts {
                    ev = ev.max((field.extend(x).unwrap().value[0] - h.value(x.coords())).abs());
                    let g = field.gradient(x, None).unwrap();
                    let exact = h.gradient(x.coords());
                    eg = eg.max((0..n).map(|k| (g.jacobian[(0, k)] - exact[k]).abs()).fold(0.0, f64::max));
                }
                count += 1;
            }
        }
    }
    verdict(ev < 1e-8 && eg < 1e-6, format!("{count} harmonics, max value error {ev:.2e}, max gradient error {eg:.2e}"))
}

fn criterion_2() -> Verdict {
    let mut r = rng(21);
    let (mut ep, mut eq) = (0.0f64, 0.0f64);
    for n in [2, 3] {
        let one = HarmonicField::new(BoundaryData::constant(n, vec![1.0]).unwrap()).unwrap();
        let mut pts: Vec<BallPoint> = (0..90).map(|_| uniform_ball(&mut r, n, 0.9)).collect();
        pts.extend(spread_points(n, 10).iter().map(|d| BallPoint::on_ray(d, 0.9).unwrap()));
        for x in &pts {
            ep = ep.max((one.extend(x).unwrap().value[0] - 1.0).abs());
            eq = eq.max(one.gradient(x, None).unwrap().row_norm(0));
        }
    }
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..100_000 {
        let n = 2 + i % 2;
        let x = if i % 4 < 2 {
            uniform_ball(&mut r, n, 1.0 - 1e-12)
        } else {
            let d = uniform_sphere(&mut r, n);
            BallPoint::at_gap(&d, 10f64.powf(-12.0 * rand_fraction(i))).unwrap()
        };
        let xi = uniform_sphere(&mut r, n);
        let (lhs, rhs) = kernel_bound_certificate(&x, &xi).unwrap();
        worst = worst.max(lhs / rhs);
        if lhs > rhs {
            violations += 1;
        }
    }
    verdict(
        ep < 1e-8 && eq < 1e-7 && violations == 0,
        format!("|P[1] - 1| <= {ep:.2e}, |int Q| <= {eq:.2e}, kernel bound violations {violations} (max ratio {worst:.4})"),
    )
}

fn rand_fraction(i: usize) -> f64 {
    ((i as f64) * 0.618_033_988_749_895).fract()
}

fn criterion_3() -> Verdict {
    let mut worst_change = 0.0f64;
    let mut small_violations = 0;
    let mut notes = Vec::new();
    for n in [2, 3] {
        let eta = spread_points(n, 3)[1].clone();
        for mu in [0.3, 0.5, 0.7] {
            let field = HarmonicField::new(BoundaryData::anchored_power(&eta, mu).unwrap()).unwrap();
            let coarse = decay_profile(&field, &eta, mu, &RadialGrid::dyadic(10)).unwrap();
            let fine = decay_profile(&field, &eta, mu, &RadialGrid::dyadic_refined(10, 2)).unwrap();
            let change = (fine.empirical_c - coarse.empirical_c).abs() / coarse.empirical_c;
            worst_change = worst_change.max(change);
            let inner = decay_profile(&field, &eta, mu, &RadialGrid::linear(0.49, 25).unwrap()).unwrap();
            let bound = small_radius_bound(n, mu, 1.0);
            small_violations += inner.rows.iter().filter(|r| r.r < 0.5 && r.normalized > bound).count();
            if !coarse.empirical_c.is_finite() {
                notes.push(format!("n={n} mu={mu}: sup not finite"));
            }
        }
    }
    verdict(
        worst_change < 0.05 && small_violations == 0 && notes.is_empty(),
        format!("max sup change under grid doubling {:.3}%, r < 1/2 violations {small_violations}", 100.0 * worst_change),
    )
}

fn criterion_4() -> Verdict {
    let mut worst = 0.0f64;
    let mut sups = Vec::new();
    for n in [2, 3] {
        let eta = SpherePoint::axis(n, 0);
        let field = HarmonicField::new(BoundaryData::anchored_power(&eta, 1.5).unwrap()).unwrap();
        let b = bounded_gradient_check(&field, &eta, 1.5, &RadialGrid::dyadic(12)).unwrap();
        worst = worst.max(b.tail_ratio);
        sups.push(b.sup_gradient);
    }
    verdict(worst < 10.0 && sups.iter().all(|s| s.is_finite()), format!("sup |grad u| {sups:.4?}, max tail ratio {worst:.4}"))
}

fn criterion_5() -> Verdict {
    let eta = SpherePoint::new(vec![0.6, 0.0, 0.8]).unwrap();
    let field = HarmonicField::new(BoundaryData::anchored_power(&eta, 0.5).unwrap()).unwrap();
    let p = decay_profile(&field, &eta, 0.5, &RadialGrid::dyadic(12)).unwrap();
    let rh = radial_holder_from_gradient(&field, &p, p.empirical_c, 0.5).unwrap();
    let rh = rh.rebound(rh.measured_c());
    let agree = rh.max_disagreement();
    verdict(
        agree < 1e-5 && rh.violations() == 0 && rh.hypothesis_holds,
        format!("C = {:.4}, max |path - endpoint| {agree:.2e}, bound violations {}", rh.c, rh.violations()),
    )
}

fn criterion_6() -> Verdict {
    let pts = distortion_grid(2, 400, 0.999, 6);
    let (mut ea, mut ef, mut eb, mut violations) = (0.0f64, 0.0f64, 0.0f64, 0);
    for c in [0.1, 0.3, 0.5] {
        let m = qc::z_plus_c_conj(c).unwrap();
        let k = (1.0 + c) / (1.0 - c);
        let ka = distortion(&m, &pts, JacobianSource::Analytic).unwrap().k_global;
        let kf = distortion(&m, &pts, JacobianSource::FiniteDifference).unwrap().k_global;
        ea = ea.max((ka - k).abs());
        ef = ef.max((kf - k).abs());
        let beta = mori_exponent(ka, 2).unwrap();
        eb = eb.max((beta - (1.0 - c) / (1.0 + c)).abs() / f64::EPSILON);
        let g = qc::linear("normalized", nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.0, (1.0 - c) / (1.0 + c)]))).unwrap();
        let cap = 2f64.powf(1.0 - beta);
        let chk = mori_check(&g, beta, &MoriSampler { pairs: 100_000, seed: 6, near_levels: 20 }, Some(cap)).unwrap();
        violations += chk.violations;
    }
    verdict(
        ea < 1e-6 && ef < 1e-4 && eb <= 4.0 && violations == 0,
        format!("K error analytic {ea:.2e}, finite-difference {ef:.2e}; beta error {eb} ulp; Mori violations {violations}"),
    )
}

fn chart_check(chart: &GraphChart, seed: u64) -> (usize, usize) {
    let pairs = chart_pairs(chart, 10_000, seed);
    let (mut hyp, mut bound) = (0, 0);
    for (z, w) in &pairs {
        let h = dist(z, w);
        let (gz, gw) = (chart.grad_phi(z).unwrap(), chart.grad_phi(w).unwrap());
        let rounding = 4.0 * f64::EPSILON * (norm(&gz) + norm(&gw));
        if h > 0.0 && dist(&gz, &gw) > chart.c2() * h.powf(chart.alpha()) * (1.0 + 1e-12) + rounding {
            hyp += 1;
        }
        let (l, r) = chart_product_bound(chart, z, w).unwrap();
        if l > r * (1.0 + 1e-12) + 1e-15 {
            bound += 1;
        }
    }
    (hyp, bound)
}

fn criterion_7() -> Verdict {
    let sphere = Surface::sphere(3);
    let s = GraphChart::on_surface(&sphere, &[0.0, 0.0, 1.0], None, 1.0, 0.0, 0.5).unwrap();
    let s = s.clone().with_c2(1.05 * c2_diagnostic(&s, 4000, 70).unwrap());
    let para = GraphChart::paraboloid(normalize_at(&[0.2, -0.1, 0.4], &[0.0, 0.6, 0.8]).unwrap(), 0.7, 0.8).unwrap();
    let e = Ellipsoid::axes(&[1.3, 0.7]);
    let atlas = ellipsoid_atlas(&e, &[vec![1.3, 0.0], vec![0.0, 0.7], vec![1.3 * 0.6, 0.7 * 0.8]], 1.0, 0.5, 0.15, 0.5).unwrap();
    let mut parts = Vec::new();
    let mut total = 0;
    for (name, c) in [("sphere", &s), ("paraboloid", &para), ("ellipse", &atlas.charts[0]), ("ellipse", &atlas.charts[1]), ("ellipse", &atlas.charts[2])] {
        let (h, b) = chart_check(c, 71);
        total += h + b;
        parts.push(format!("{name}: {h}/{b}"));
    }
    verdict(total == 0, format!("hypothesis/product-bound violations over 10^4 pairs each: {}", parts.join(", ")))
}

fn run_bootstrap(map: &qc::BallMap) -> BootstrapReport {
    let d = standard_domain(map).unwrap();
    bootstrap_verify(map, &d, None, &BootstrapConfig::default()).unwrap()
}

fn criterion_8() -> Verdict {
    let id = run_bootstrap(&qc::identity(2).unwrap());
    let ell_map = qc::z_plus_c_conj(0.3).unwrap();
    let ell = run_bootstrap(&ell_map);
    let pert_map = qc::perturbed_identity(0.05).unwrap();
    let pert = run_bootstrap(&pert_map);
    let target = qc::perturbed_identity_lipschitz(0.05);
    let ok_id = (id.lipschitz_estimate - 1.0).abs() <= 0.02;
    let ok_ell = (1.3..=1.365).contains(&ell.lipschitz_estimate);
    let ok_pert = (pert.lipschitz_estimate - target).abs() <= 0.05 * target;
    let mut inv = 0.0f64;
    for (map, base, rot, b) in [
        (&ell_map, &ell, qc::rotation2(0.7), vec![0.4, -1.1]),
        (&pert_map, &pert, qc::rotation3(0.4, -1.2, 2.1), vec![1.5, 0.3, -0.8]),
    ] {
        let d = standard_domain(map).unwrap();
        let (m2, d2) = moved(map, &d, &rot, &b).unwrap();
        let r = bootstrap_verify(&m2, &d2, None, &BootstrapConfig::default()).unwrap();
        inv = inv.max((r.lipschitz_estimate - base.lipschitz_estimate).abs() / base.lipschitz_estimate);
    }
    let stages = [&id, &ell, &pert].iter().all(|r| r.passed);
    verdict(
        ok_id && ok_ell && ok_pert && inv <= 0.01 && stages,
        format!(
            "identity {:.6}, z+0.3conj(z) {:.6}, perturbed {:.6} (target {target:.6}), isometry change {:.3}%, all stages passed {stages}",
            id.lipschitz_estimate,
            ell.lipschitz_estimate,
            pert.lipschitz_estimate,
            100.0 * inv
        ),
    )
}

fn cli_run(args: &[&str], out: &std::path::Path) -> (i32, Vec<(String, Vec<u8>)>) {
    let status = Command::new(env!("CARGO_BIN_EXE_qclab")).args(args).arg("--out").arg(out).status().expect("binary runs");
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map(|d| d.map(|e| e.unwrap()).map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())).collect())
        .unwrap_or_default();
    files.sort();
    (status.code().unwrap_or(-1), files)
}

fn criterion_9() -> Verdict {
    let runs: [&[&str]; 4] = [
        &["extend", "--set", "seed=9", "--set", "n=3", "--set", "samples=50", "--set", "data=harmonic:3:1"],
        &["decay", "--set", "seed=9", "--set", "mu=0.3", "--format", "json"],
        &["mori", "--set", "seed=9", "--set", "map=zcz:0.3", "--set", "pairs=5000"],
        &["bootstrap", "--set", "seed=9", "--set", "map=zcz:0.3"],
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut same = true;
    let mut codes = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let (c1, a) = cli_run(args, &dir.path().join(format!("{i}a")));
        let (c2, b) = cli_run(args, &dir.path().join(format!("{i}b")));
        same &= !a.is_empty() && a == b;
        codes.push(c1.max(c2));
    }
    verdict(same && codes.iter().all(|c| *c == 0), format!("byte-identical outputs {same}, exit codes {codes:?}"))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(u32, &str, fn() -> Verdict, u64); 9] = [
        (1, "oracle harmonics", criterion_1, 30),
        (2, "kernel properties", criterion_2, 60),
        (3, "gradient decay for Hölder data", criterion_3, 300),
        (4, "bounded gradient for mu > 1", criterion_4, 120),
        (5, "radial integration", criterion_5, 600),
        (6, "distortion and Mori", criterion_6, 600),
        (7, "chart inequalities", criterion_7, 600),
        (8, "bootstrap end to end", criterion_8, 600),
        (9, "CLI determinism", criterion_9, 600),
    ];
    let mut failed = 0;
    for (k, name, f, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| *s == k.to_string()) {
            continue;
        }
        let t = Instant::now();
        let v = f();
        let el = t.elapsed();
        let pass = v.pass && within(el, limit);
        if !pass {
            failed += 1;
        }
        println!("criterion {k} ({name}): {} | {} | {:.1}s (limit {limit}s)", if pass { "PASS" } else { "FAIL" }, v.detail, el.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
