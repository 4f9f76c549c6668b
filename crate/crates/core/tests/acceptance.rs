//! Acceptance criteria, one line per criterion. Exits non-zero if any fails.

mod oracle;

use std::process::ExitCode;
use std::time::Instant;

use leafdim::covers::n_orbit_thinner;
use leafdim::descriptor::parse_set;
use leafdim::hdim::{h_unstable_h, h_unstable_of_compact};
use leafdim::leaf::{iterate_segment, Interval, LeafPart};
use leafdim::umetric::{metric_entropy_jacobian, smb_convergence_report};
use leafdim::utop::{entropy_of_compact, unstable_topological_entropy};
use leafdim::{AmbientSet, EstimatorParams, GridCover, LeafSegment, LeafSubset, PartiallyHyperbolic, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

/// Largest root of `t^3 - 6t^2 + 5t - 1` and the roots below it, by bisection.
fn paper3_roots() -> [f64; 3] {
    let p = |t: f64| ((t - 6.0) * t + 5.0) * t - 1.0;
    let root = |mut a: f64, mut b: f64| {
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if (p(a) < 0.0) == (p(c) < 0.0) {
                a = c;
            } else {
                b = c;
            }
        }
        0.5 * (a + b)
    };
    // sign changes at 0, 0.5, 1, 6
    [root(0.0, 0.5), root(0.5, 1.0), root(1.0, 6.0)]
}

fn cat2_rate() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

fn paper3() -> PartiallyHyperbolic {
    PartiallyHyperbolic::paper3(5).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn estimator_params() -> EstimatorParams {
    EstimatorParams::default()
}

/// Cheaper settings for criteria that run many estimates.
fn light_params() -> EstimatorParams {
    EstimatorParams {
        deltas: vec![0.1],
        meshes: vec![8, 16, 32],
        samples: 2,
        n_max: 16,
        ..EstimatorParams::default()
    }
}

struct Ambient {
    cat2_utop: f64,
    paper3_utop: f64,
}

fn criterion_1(ambient: &mut Ambient) -> Outcome {
    let truth = cat2_rate();
    let params = estimator_params();
    let start = Instant::now();
    let e = unstable_topological_entropy(&PartiallyHyperbolic::cat2(), &params).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ambient.cat2_utop = e.value;
    let max_mesh = params.sorted_meshes().last().copied().unwrap_or(0);
    let ok = rel(e.value, truth) <= 0.03 && secs <= 60.0 && max_mesh <= 64 && params.n_max <= 20;
    Ok((
        ok,
        format!(
            "cat2 utop {:.5} vs {truth:.5} (rel {:.2}%, tol 3%), meshes up to {max_mesh}, n <= {}, {secs:.1} s (limit 60 s)",
            e.value,
            100.0 * rel(e.value, truth),
            params.n_max
        ),
    ))
}

fn criterion_2(ambient: &mut Ambient) -> Outcome {
    let truth = paper3_roots()[2].ln();
    let f = paper3();
    let params = estimator_params();
    let u = unstable_topological_entropy(&f, &params).map_err(err)?;
    let h = h_unstable_h(&f, &AmbientSet::Torus, &params).map_err(err)?;
    ambient.paper3_utop = u.value;
    let ok = rel(u.value, truth) <= 0.05 && rel(h.value, truth) <= 0.05;
    Ok((
        ok,
        format!(
            "paper3(5) utop {:.5} (rel {:.2}%), hdim {:.5} (rel {:.2}%) vs {truth:.5}, tol 5%",
            u.value,
            100.0 * rel(u.value, truth),
            h.value,
            100.0 * rel(h.value, truth)
        ),
    ))
}

fn criterion_3(ambient: &Ambient) -> Outcome {
    let [ls, lc, _] = paper3_roots();
    let truth = -ls.ln();
    let inv = paper3().inverse().map_err(err)?;
    let e = unstable_topological_entropy(&inv, &estimator_params()).map_err(err)?;
    let forward = ambient.paper3_utop;
    let gap = (e.value - (forward + lc.ln())).abs();
    let ok = rel(e.value, truth) <= 0.05 && e.value < forward && gap <= 0.08;
    Ok((
        ok,
        format!(
            "utop(f^-1) {:.5} vs {truth:.5} (rel {:.2}%, tol 5%); utop(f) {forward:.5}; |est(f^-1) - est(f) - log lc| = {gap:.4} (tol 0.08)",
            e.value,
            100.0 * rel(e.value, truth)
        ),
    ))
}

fn criterion_4(ambient: &Ambient) -> Outcome {
    let params = estimator_params();
    let cat = h_unstable_h(&PartiallyHyperbolic::cat2(), &AmbientSet::Torus, &params).map_err(err)?;
    let p3 = h_unstable_h(&paper3(), &AmbientSet::Torus, &params).map_err(err)?;
    let (rc, rp) = (rel(cat.value, ambient.cat2_utop), rel(p3.value, ambient.paper3_utop));
    Ok((
        rc <= 0.05 && rp <= 0.05,
        format!(
            "cat2 hdim {:.5} utop {:.5} (rel {:.2}%); paper3(5) hdim {:.5} utop {:.5} (rel {:.2}%); tol 5%",
            cat.value,
            ambient.cat2_utop,
            100.0 * rc,
            p3.value,
            ambient.paper3_utop,
            100.0 * rp
        ),
    ))
}

/// A random compact subset of one leaf: a segment, several sub-segments,
/// finitely many points, or a mixture.
fn random_compact(system: &PartiallyHyperbolic, rng: &mut ChaCha8Rng) -> LeafSubset {
    let half = rng.gen_range(0.02..0.1);
    let carrier = LeafSegment::on_leaf(system, TorusPoint::random(system.dim(), rng), -half, half).unwrap();
    let mut intervals = Vec::new();
    match rng.gen_range(0..4) {
        0 => intervals.push(Interval::new(-half, half)),
        1 => {
            for _ in 0..rng.gen_range(2..4) {
                let a = rng.gen_range(-half..half);
                intervals.push(Interval::new(a, (a + rng.gen_range(0.0..half)).min(half)));
            }
        }
        2 => {
            for _ in 0..rng.gen_range(1..6) {
                intervals.push(Interval::point(rng.gen_range(-half..half)));
            }
        }
        _ => {
            let a = rng.gen_range(-half..0.0);
            intervals.push(Interval::new(a, a + rng.gen_range(0.0..half)));
            intervals.push(Interval::point(rng.gen_range(0.0..half)));
        }
    }
    LeafSubset {
        parts: vec![LeafPart::new(carrier, intervals)],
        resolution: None,
    }
}

fn criterion_5() -> Outcome {
    let f = paper3();
    let systems = [PartiallyHyperbolic::cat2(), f.inverse().map_err(err)?, f];
    let params = light_params();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for i in 0..20 {
        let system = &systems[i % 3];
        let k = random_compact(system, &mut rng);
        let h = h_unstable_of_compact(system, &k, &params).map_err(err)?.value;
        let u = entropy_of_compact(system, &k, &params).map_err(err)?.value;
        worst = worst.max(h - u);
        if h > u + 0.05 {
            failures.push(format!("#{i} {:?}: hdim {h:.4} utop {u:.4}", k.kind()));
        }
    }
    Ok((
        failures.is_empty(),
        format!("20 subsets, max hdim - utop = {worst:.4} (tol 0.05){}", list(&failures)),
    ))
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!("; {}", items.join("; "))
    }
}

fn criterion_6() -> Outcome {
    let params = light_params();
    let mut ok = true;
    let mut parts = Vec::new();
    for (system, ball) in [
        (PartiallyHyperbolic::cat2(), "ball:c=(0.5,0.5),r=0.25"),
        (paper3(), "ball:c=(0.5,0.5,0.5),r=0.25"),
    ] {
        let y = parse_set(ball, Some(system.dim())).map_err(err)?;
        let h = h_unstable_h(&system, &y, &params).map_err(err)?.value;
        let j = metric_entropy_jacobian(&system);
        ok &= j <= h + 0.05;
        parts.push(format!("{} jacobian {j:.5} hdim(ball r=0.25) {h:.5}", system.name()));
    }
    Ok((ok, format!("{} (tol 0.05)", parts.join("; "))))
}

#[derive(Default)]
struct Identities {
    segments: usize,
    shift_checked: usize,
    shift_failures: usize,
    floor_failures: usize,
    ceil_failures: usize,
    power_checked: usize,
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (idx, system) in [PartiallyHyperbolic::cat2(), paper3()].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + idx as u64);
        let mut t = Identities::default();
        let mut example = None;
        for _ in 0..1000 {
            let mesh = [4u32, 8, 16][rng.gen_range(0..3)];
            let cover = GridCover::with_mesh(mesh, system.dim()).map_err(err)?;
            let len = 10f64.powf(rng.gen_range(-7.0..-1.3));
            let base = TorusPoint::random(system.dim(), &mut rng);
            let s = LeafSegment::on_leaf(&system, base, -len / 2.0, len / 2.0).map_err(err)?;
            t.segments += 1;
            let n = n_orbit_thinner(&system, &s, &cover, 60);
            if n.capped {
                continue;
            }
            if n.n >= 1 {
                t.shift_checked += 1;
                let shifted = n_orbit_thinner(&system, &iterate_segment(&system, &s, 1), &cover, 60);
                if shifted.n + 1 != n.n {
                    t.shift_failures += 1;
                }
            }
            for m in [2u32, 3] {
                let nm = n_orbit_thinner(&system.power(m), &s, &cover, 60).n;
                t.power_checked += 1;
                if nm != n.n / m {
                    t.floor_failures += 1;
                    example.get_or_insert(format!("n_f = {}, m = {m}, n_f^m = {nm}", n.n));
                }
                if nm != n.n.div_ceil(m) {
                    t.ceil_failures += 1;
                }
            }
        }
        ok &= t.shift_failures == 0 && t.floor_failures == 0;
        parts.push(format!(
            "{}: {} segments, shift {}/{} failures, floor {}/{} failures (ceil {}){}",
            system.name(),
            t.segments,
            t.shift_failures,
            t.shift_checked,
            t.floor_failures,
            t.power_checked,
            t.ceil_failures,
            example.map_or(String::new(), |e| format!(", e.g. {e}"))
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_8() -> Outcome {
    let params = light_params();
    let mut ok = true;
    let mut parts = Vec::new();
    for (system, union) in [
        (PartiallyHyperbolic::cat2(), "ball:c=(0.3,0.6),r=0.1+orbit:p=(1/5,2/5),period-detect"),
        (paper3(), "ball:c=(0.3,0.6,0.2),r=0.1+orbit:p=(1/5,2/5,3/5),period-detect"),
    ] {
        let y = parse_set(union, Some(system.dim())).map_err(err)?;
        let AmbientSet::Union { sets: components } = &y else {
            return Err(format!("{union} is not a union"));
        };
        let whole = h_unstable_h(&system, &y, &params).map_err(err)?.value;
        let mut max = 0.0f64;
        for c in components {
            max = max.max(h_unstable_h(&system, c, &params).map_err(err)?.value);
        }
        ok &= (whole - max).abs() <= 0.05;
        let single = unstable_topological_entropy(&system, &params).map_err(err)?.value;
        let square = unstable_topological_entropy(&system.power(2), &params).map_err(err)?.value;
        let dev = (square - 2.0 * single).abs();
        ok &= dev <= 0.05 * 2.0 * single;
        parts.push(format!(
            "{} union {whole:.4} max {max:.4}; est(f^2) {square:.4} 2 est(f) {:.4} (dev {:.2}%)",
            system.name(),
            2.0 * single,
            100.0 * dev / (2.0 * single)
        ));
    }
    Ok((ok, format!("{} (tol 0.05 abs, 5%)", parts.join("; "))))
}

fn criterion_9(ambient: &Ambient) -> Outcome {
    let params = light_params();
    let mut ok = true;
    let mut parts = Vec::new();
    for (system, orbit, whole) in [
        (PartiallyHyperbolic::cat2(), "orbit:p=(1/5,2/5),period-detect", ambient.cat2_utop),
        (paper3(), "orbit:p=(1/7,2/7,3/7),period-detect", ambient.paper3_utop),
    ] {
        let y = parse_set(orbit, Some(system.dim())).map_err(err)?;
        let h = h_unstable_h(&system, &y, &params).map_err(err)?.value;
        ok &= h <= 0.05 && whole > 0.5;
        parts.push(format!("{} orbit hdim {h:.4} (ambient {whole:.4})", system.name()));
    }
    Ok((ok, format!("{} (tol 0.05)", parts.join("; "))))
}

fn criterion_10() -> Outcome {
    let params = estimator_params();
    let mut ok = true;
    let mut parts = Vec::new();
    for (system, truth) in [
        (PartiallyHyperbolic::cat2(), cat2_rate()),
        (paper3(), paper3_roots()[2].ln()),
    ] {
        let r = smb_convergence_report(&system, 20, &[25], 16, &params).map_err(err)?;
        let row = &r.rows[0];
        ok &= row.samples >= 10 && rel(row.mean, truth) <= 0.02;
        parts.push(format!(
            "{} mean I_25/25 {:.5} vs {truth:.5} (rel {:.2}%, {} samples)",
            system.name(),
            row.mean,
            100.0 * rel(row.mean, truth),
            row.samples
        ));
    }
    Ok((ok, format!("{}; mesh 16, tol 2%", parts.join("; "))))
}

fn criterion_11() -> Outcome {
    let greedy = oracle::greedy_vs_exhaustive(120, 11)?;
    let cylinders = oracle::cylinders_vs_sampling(24, 5)?;
    Ok((
        greedy.checked >= 50 && cylinders == 24,
        format!(
            "greedy = exhaustive on {} instances with n <= 6 (largest cover {}, {} unresolved); {cylinders} cylinders with n <= 8 match sampling",
            greedy.checked, greedy.largest, greedy.unresolved
        ),
    ))
}

fn main() -> ExitCode {
    let mut ambient = Ambient {
        cat2_utop: f64::NAN,
        paper3_utop: f64::NAN,
    };
    let mut failed = 0;
    let mut report = |id: u32, outcome: Outcome, secs: f64| {
        let (ok, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {id}: {} [{secs:.1} s] {detail}", if ok { "PASS" } else { "FAIL" });
    };
    macro_rules! run {
        ($id:expr, $call:expr) => {{
            let start = Instant::now();
            let outcome = $call;
            report($id, outcome, start.elapsed().as_secs_f64());
        }};
    }
    run!(1, criterion_1(&mut ambient));
    run!(2, criterion_2(&mut ambient));
    run!(3, criterion_3(&ambient));
    run!(4, criterion_4(&ambient));
    run!(5, criterion_5());
    run!(6, criterion_6());
    run!(7, criterion_7());
    run!(8, criterion_8());
    run!(9, criterion_9(&ambient));
    run!(10, criterion_10());
    run!(11, criterion_11());
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
