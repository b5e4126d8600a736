//! Acceptance checks. Prints one PASS/FAIL line per criterion; with
//! `ACCEPTANCE_STRICT` set, exits non-zero if any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use ptannulus::eigen::{conjugation_defect, eigvals, operator_eigvals};
use ptannulus::field::{gain_loss_weights, modes, pi_rotation_defect};
use ptannulus::operator::{build, PotentialSpec, TermKey};
use ptannulus::phasemap::{
    axis_scale, curve_asymmetry, refine_boundary_peak, scan, symmetry_check, threshold_curve, Axis, AxisId, PhaseMap,
    Symmetry, PHASE_EPSILON,
};
use ptannulus::radial::{bessel_j, bessel_jy, bessel_y, disc_zeros};
use ptannulus::threshold::{
    analytic_2x2, analytic_3x3, delta_n, find_threshold, flow, log_slope, Ray, ThresholdOptions, DEFAULT_EPSILON,
};
use ptannulus::CMatrix;
use rand::{rngs::StdRng, Rng, SeedableRng};

const MAP_CUTOFF: usize = 60;
const MAP_COUNT: usize = 101;
const HERMITIAN_CUTOFF: usize = 30;
const HERMITIAN_LAMBDA_COUNT: usize = 41;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

// ---------------------------------------------------------------- thresholds

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let r = find_threshold(&Ray::gain_loss(1), 100, &ThresholdOptions::default()).unwrap();
    let el = t.elapsed();
    outcome(
        (0.7340..=0.7360).contains(&r.beta_c) && within(el, 60),
        format!("beta_1c = {:.6} (M=100) in {:.1?}", r.beta_c, el),
    )
}

fn criterion_2() -> Outcome {
    let exact = [1u32, 3, 5, 7, 9].iter().all(|&n| analytic_2x2(n).unwrap() == n as f64);
    let three = analytic_3x3(1).unwrap();
    outcome(
        exact && (three - 0.707_106_78).abs() <= 1e-8,
        format!("2x2 exact for n=1..9: {exact}; 3x3 = {three:.10}"),
    )
}

fn criteria_3_4(cache: &mut Vec<(u32, f64)>) -> (Outcome, Outcome) {
    let t = Instant::now();
    *cache = delta_n(&[3, 5, 7, 9], 100, &ThresholdOptions::default()).unwrap();
    let el = t.elapsed();
    let near: Vec<String> = cache.iter().filter(|d| d.0 >= 5).map(|d| format!("n={}: {:.4}", d.0, d.1)).collect();
    let c3 = cache.iter().filter(|d| d.0 >= 5).all(|d| d.1 < 0.05);
    let slope = log_slope(cache);
    (
        outcome(c3, format!("|beta_nc - n|: {}", near.join(", "))),
        outcome(
            slope < 0.0 && within(el, 300),
            format!("slope of ln(Delta_n) over n=3..9: {slope:.4} ({:.1?})", el),
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, want) in [(3u32, [1.0, 4.0]), (5, [4.0, 9.0])] {
        let r = find_threshold(&Ray::gain_loss(n), 100, &ThresholdOptions::default()).unwrap();
        let lv = r.participating_levels.unwrap_or([f64::NAN; 2]);
        ok &= lv.iter().zip(want).all(|(a, b)| (a - b).abs() < 0.1);
        parts.push(format!(
            "n={n}: levels {:?}, merge at Re {:.3}",
            lv,
            r.merge_value.map_or(f64::NAN, |m| m[0])
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let f = flow(&Ray::gain_loss(1), 4.0, 801, 4, 100).unwrap();
    let merges = f.merges(DEFAULT_EPSILON);
    let init = f.initial();
    let levels = |m: &ptannulus::threshold::Merge| (init[m.level], m.partner.map(|p| init[p]));
    let first = merges.first().map(|m| (m.beta, levels(m)));
    let second = merges.get(1).map(|m| (m.beta, levels(m)));
    let ok1 = matches!(first, Some((b, (0.0, Some(1.0)))) if (b - 0.735).abs() <= 0.01);
    let ok2 = matches!(second, Some((b, (1.0, Some(4.0)))) if (3.2..=3.8).contains(&b));
    outcome(ok1 && ok2, format!("merges {first:?}, {second:?}"))
}

// ---------------------------------------------------------------- maps

struct Maps {
    b1b3: PhaseMap,
    b3b5: PhaseMap,
    b1b5: PhaseMap,
    elapsed: Duration,
}

fn normalized_map(t1: TermKey, t2: TermKey) -> PhaseMap {
    let a1 = Axis::centered(t1, 2.0, MAP_COUNT).unwrap().scaled(axis_scale(t1, MAP_CUTOFF).unwrap()).unwrap();
    let a2 = Axis::centered(t2, 2.0, MAP_COUNT).unwrap().scaled(axis_scale(t2, MAP_CUTOFF).unwrap()).unwrap();
    scan(&PotentialSpec::default(), a1, a2, MAP_CUTOFF, None).unwrap()
}

fn gain_loss_maps() -> Maps {
    let t = Instant::now();
    let b1b3 = normalized_map(TermKey::GainLoss(1), TermKey::GainLoss(3));
    let b3b5 = normalized_map(TermKey::GainLoss(3), TermKey::GainLoss(5));
    let b1b5 = normalized_map(TermKey::GainLoss(1), TermKey::GainLoss(5));
    Maps {
        b1b3,
        b3b5,
        b1b5,
        elapsed: t.elapsed(),
    }
}

fn criterion_7(maps: &Maps) -> Outcome {
    let t = Instant::now();
    // symmetric window in β_1 on the rows near β_3 = 0.7 β_3c
    let curve = threshold_curve(&maps.b1b3, AxisId::One, true);
    let near: Vec<(f64, f64)> = curve
        .iter()
        .filter(|c| (c.fixed - 0.7).abs() <= 0.05 + 1e-9)
        .map(|c| (c.fixed, c.crossing.unwrap_or(f64::INFINITY)))
        .collect();
    let window = near.iter().map(|c| c.1).fold(0.0, f64::max);
    let peak = refine_boundary_peak(&maps.b3b5, AxisId::One, 9, 3, &ThresholdOptions::default()).unwrap();
    let el = maps.elapsed + t.elapsed();
    let rows: Vec<String> = near.iter().map(|(f, c)| format!("{f:.2}:{c:.3}")).collect();
    outcome(
        window >= 1.8 && (1.3..=1.5).contains(&peak.crossing) && within(el, 900),
        format!(
            "beta_1 window near beta_3=0.7: max {window:.3} (rows {}); (beta_3,beta_5) boundary peak {:.3} at beta_5 = {:.3}; maps {:.1?}",
            rows.join(" "),
            peak.crossing,
            peak.fixed,
            el
        ),
    )
}

fn criterion_8(maps: &Maps) -> Outcome {
    let m = &maps.b1b5;
    let mut inner_broken = 0;
    let mut outer_symmetric = 0;
    for (i, x) in m.axis1.values.iter().enumerate() {
        for (j, y) in m.axis2.values.iter().enumerate() {
            let v = m.values[i][j];
            // corner region: outside the inscribed unit circle
            if x.abs() <= 0.95 && y.abs() <= 0.95 && x * x + y * y <= 1.0 && !(v <= PHASE_EPSILON) {
                inner_broken += 1;
            }
            if x.abs().min(y.abs()) > 1.05 && v <= PHASE_EPSILON {
                outer_symmetric += 1;
            }
        }
    }
    outcome(
        inner_broken == 0 && outer_symmetric == 0,
        format!("broken cells inside square (non-corner): {inner_broken}; symmetric cells beyond 1.05: {outer_symmetric}"),
    )
}

fn lambda_map(p: u32, n: u32) -> PhaseMap {
    let a1 = Axis::centered(TermKey::Hermitian(p), n as f64, HERMITIAN_LAMBDA_COUNT).unwrap();
    let a2 = Axis::centered(TermKey::GainLoss(n), 2.0 * n as f64, MAP_COUNT).unwrap();
    scan(&PotentialSpec::default(), a1, a2, HERMITIAN_CUTOFF, None).unwrap()
}

fn criterion_9(maps: &Maps, lambda_maps: &[(u32, u32, PhaseMap)]) -> Outcome {
    let mut point = 0.0f64;
    for m in [&maps.b1b3, &maps.b3b5, &maps.b1b5] {
        point = point.max(symmetry_check(m, Symmetry::PointReflection).unwrap().max_asymmetry);
    }
    let mut beta_flip = 0.0f64;
    let mut mismatches = Vec::new();
    let mut table = Vec::new();
    for (p, n, m) in lambda_maps {
        beta_flip = beta_flip.max(symmetry_check(m, Symmetry::Axis2SignFlip).unwrap().max_asymmetry);
        let cell = m.axis2.values[1] - m.axis2.values[0];
        let asym = curve_asymmetry(&threshold_curve(m, AxisId::Two, true));
        let symmetric = asym <= cell;
        let expected_symmetric = n % (p / 2) != 0;
        table.push(format!("p{p}n{n}:{}", if symmetric { "S" } else { "A" }));
        if symmetric != expected_symmetric {
            mismatches.push(format!("(p={p}, n={n}: boundary asymmetry {asym:.3}, cell {cell:.3})"));
        }
    }
    outcome(
        point <= 1e-6 && beta_flip <= 1e-6 && mismatches.is_empty(),
        format!(
            "point reflection {point:.1e}; beta flip {beta_flip:.1e}; lambda-flip pattern [{}]; mismatches: {}",
            table.join(" "),
            if mismatches.is_empty() { "none".into() } else { mismatches.join(" ") }
        ),
    )
}

fn criterion_10(lambda_maps: &[(u32, u32, PhaseMap)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (_, n, m) in lambda_maps.iter().filter(|(p, _, _)| *p == 4) {
        let cell = m.axis2.values[1] - m.axis2.values[0];
        let curve = threshold_curve(m, AxisId::Two, true);
        let c: Vec<f64> = curve.iter().map(|c| c.crossing.unwrap_or(f64::INFINITY)).collect();
        let even = curve_asymmetry(&curve);
        let at_zero = c[m.axis1.origin()];
        let max = c.iter().copied().fold(0.0, f64::max);
        let this = even <= cell && max <= at_zero + cell && max <= *n as f64 + 0.05;
        ok &= this;
        parts.push(format!("n={n}: asym {even:.3} max {max:.3} at0 {at_zero:.3}"));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------- radial / field / oracles

fn criterion_11() -> Outcome {
    let z = disc_zeros(0.0, 1).unwrap()[0];
    let mut rng = StdRng::seed_from_u64(11);
    let mut wr = 0.0f64;
    for _ in 0..50 {
        let alpha: f64 = rng.gen_range(0.0..10.0);
        let x: f64 = rng.gen_range(0.5..60.0);
        let h = 1e-3 * x.min(1.0);
        let j = |t: f64| bessel_j(alpha, t).unwrap();
        let y = |t: f64| bessel_y(alpha, t).unwrap();
        let w = j(x) * oracles::central_diff5(y, x, h) - oracles::central_diff5(j, x, h) * y(x);
        let want = 2.0 / (std::f64::consts::PI * x);
        wr = wr.max((w - want).abs() / want.max(1.0));
    }
    let mut half = 0.0f64;
    for x in [0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
        let a = bessel_jy(0.5, x).unwrap();
        let b = bessel_jy(1.5, x).unwrap();
        half = half
            .max((a.j - oracles::j_half(x)).abs())
            .max((a.y - oracles::y_half(x)).abs())
            .max((b.j - oracles::j_three_halves(x)).abs())
            .max((b.y - oracles::y_three_halves(x)).abs());
    }
    outcome(
        (z - 2.4048).abs() <= 1e-4 && wr <= 1e-8 && half <= 1e-9,
        format!("j_0,1 = {z:.6}; Wronskian error {wr:.1e}; half-integer error {half:.1e}"),
    )
}

fn criterion_12() -> Outcome {
    let bc = find_threshold(&Ray::gain_loss(1), 100, &ThresholdOptions::default()).unwrap().beta_c;
    let sym = modes(&build(&PotentialSpec::gain_loss(1, 0.75 * bc).unwrap(), 100).unwrap()).unwrap();
    let worst = sym
        .iter()
        .filter(|m| m.alpha_sq.im.abs() <= 1e-9)
        .map(|m| pi_rotation_defect(m, 512))
        .fold(0.0, f64::max);
    let broken = modes(&build(&PotentialSpec::gain_loss(1, 1.05 * bc).unwrap(), 100).unwrap()).unwrap();
    let up = broken.iter().max_by(|a, b| a.alpha_sq.im.total_cmp(&b.alpha_sq.im)).unwrap();
    let (g, l) = gain_loss_weights(up, 1).unwrap();
    outcome(
        worst <= 1e-6 && g > l && up.alpha_sq.im > 0.0,
        format!("pi-rotation defect {worst:.1e}; positive-Im mode w_gain {g:.4} vs w_loss {l:.4}"),
    )
}

fn criterion_13() -> Outcome {
    let mut rng = StdRng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let a = oracles::random_matrix(&mut rng, n);
        let roots = oracles::poly_roots(&oracles::char_poly(&a));
        let got = eigvals(&CMatrix::from_rows(&a).unwrap()).unwrap().eigenvalues;
        worst = worst.max(oracles::match_distance(&got, &roots));
    }
    let mut conj = 0.0f64;
    let mut trace = 0.0f64;
    let m = 20usize;
    let want = (m * (m + 1) * (2 * m + 1) / 3) as f64;
    for _ in 0..200 {
        let spec = oracles::random_spec(&mut rng);
        let s = operator_eigvals(&build(&spec, m).unwrap()).unwrap();
        let scale = 1.0 + s.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        conj = conj.max(conjugation_defect(&s.eigenvalues) / scale);
        let sum: Complex64 = s.eigenvalues.iter().sum();
        trace = trace.max((sum - want).norm() / want);
    }
    outcome(
        worst <= 1e-8 && conj <= 1e-8 && trace <= 1e-10,
        format!("oracle mismatch {worst:.1e}; conjugation {conj:.1e}; trace {trace:.1e}"),
    )
}

// ---------------------------------------------------------------- determinism

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn criterion_14() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ptannulus");
    let root = std::env::temp_dir().join(format!("ptannulus-acceptance-{}", std::process::id()));
    let runs: [&[&str]; 6] = [
        &["spectrum", "--n", "3", "--beta", "2", "--p", "2", "--lambda", "0.5", "--M", "20", "--vectors"],
        &["threshold", "--n", "3", "--M", "30"],
        &["flow", "--n", "1", "--M", "20", "--steps", "201"],
        &["phasemap", "--axis1", "v:1", "--axis2", "v:3", "--grid", "21", "--M", "16", "--normalized"],
        &["density", "--n", "1", "--beta-rel", "0.75", "--M", "20", "--rho-points", "32", "--phi-points", "32"],
        &["radial", "--alpha", "0,1,2", "--q", "3"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let mut outputs = Vec::new();
        for workers in ["1", "4"] {
            let dir: PathBuf = root.join(format!("{}-{workers}", args[0]));
            let out = Command::new(bin)
                .args(args)
                .args(["--workers", workers, "--out"])
                .arg(&dir)
                .output()
                .unwrap();
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
            outputs.push((out.stdout, files(&dir)));
        }
        if outputs[0] != outputs[1] {
            differing.push(args[0]);
        }
    }
    let _ = fs::remove_dir_all(&root);
    outcome(
        differing.is_empty(),
        format!("1 vs 4 workers over 6 subcommands; differing: {differing:?}"),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        println!("criterion {k:>2}: {} — {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    let mut deltas = Vec::new();
    let (c3, c4) = criteria_3_4(&mut deltas);
    report(3, c3);
    report(4, c4);
    report(5, criterion_5());
    report(6, criterion_6());
    let maps = gain_loss_maps();
    report(7, criterion_7(&maps));
    report(8, criterion_8(&maps));
    let lambda_maps: Vec<(u32, u32, PhaseMap)> = [2u32, 4, 6]
        .iter()
        .flat_map(|&p| [1u32, 3, 5, 7, 9].map(move |n| (p, n)))
        .map(|(p, n)| (p, n, lambda_map(p, n)))
        .collect();
    report(9, criterion_9(&maps, &lambda_maps));
    report(10, criterion_10(&lambda_maps));
    report(11, criterion_11());
    report(12, criterion_12());
    report(13, criterion_13());
    report(14, criterion_14());
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
