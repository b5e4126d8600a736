use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use ptannulus::eigen::{self, cmp_complex};
use ptannulus::field::{self, AngularMode};
use ptannulus::operator::{build, PotentialSpec, TermKey};
use ptannulus::phasemap::{self, Axis};
use ptannulus::radial::{self, Geometry};
use ptannulus::threshold::{self, Ray, ThresholdOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{config_hash, Common, Resolved, RunDescription};
use crate::CliError;

/// Spectrum comparison tolerance for `--check-convergence` (lowest ten levels).
const SPECTRUM_TOLERANCE: f64 = 1e-6;
/// Threshold comparison tolerance for `--check-convergence`.
const THRESHOLD_TOLERANCE: f64 = 1e-3;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_with<F>(dir: &Path, name: &str, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(dir, name)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::Io(format!("{name}: {e}")))
}

fn write_header(dir: &Path, name: &str, run: Value, body: Value) -> Result<(), CliError> {
    let mut header = json!({ "config_hash": config_hash(&run), "run": run });
    if let (Value::Object(h), Value::Object(b)) = (&mut header, body) {
        h.extend(b);
    }
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    write_with(dir, name, |w| writeln!(w, "{text}"))
}

fn describe<P: Serialize>(command: &str, cfg: &Resolved, params: P) -> Value {
    serde_json::to_value(RunDescription {
        command,
        spec: &cfg.spec,
        cutoff: cfg.cutoff,
        params,
    })
    .expect("run description serializes")
}

fn convergence_block(discrepancy: f64, tolerance: f64, cutoff: usize) -> (Value, bool) {
    let passed = discrepancy <= tolerance;
    (
        json!({ "cutoff_M": 2 * cutoff, "discrepancy": discrepancy, "tolerance": tolerance, "passed": passed }),
        passed,
    )
}

fn fail_unconverged(passed: bool, what: &str) -> Result<(), CliError> {
    if passed {
        Ok(())
    } else {
        Err(CliError::Unconverged(format!("{what} changed beyond tolerance when the cutoff was doubled")))
    }
}

fn reject_convergence_flag(cfg: &Resolved, command: &str) -> Result<(), CliError> {
    if cfg.check_convergence {
        return Err(CliError::Usage(format!("--check-convergence is not available for `{command}`")));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write eigenvectors in the |m⟩ basis.
    #[arg(long)]
    pub vectors: bool,
}

pub fn spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let cfg = args.common.resolve()?;
    let op = build(&cfg.spec, cfg.cutoff)?;
    let spectrum = if args.vectors {
        eigen::operator_eigpairs(&op)?.0
    } else {
        eigen::operator_eigvals(&op)?
    };
    let max_imag = spectrum.max_imag();
    let mut body = json!({
        "dimension": op.dimension(),
        "max_imag": max_imag,
        "conjugation_defect": eigen::conjugation_defect(&spectrum.eigenvalues),
    });
    let mut passed = true;
    if cfg.check_convergence {
        let fine = eigen::operator_eigvals(&build(&cfg.spec, 2 * cfg.cutoff)?)?;
        let low = |v: &[Complex64]| {
            let mut v = v.to_vec();
            v.sort_by(cmp_complex);
            v.truncate(10);
            v
        };
        let d = low(&spectrum.eigenvalues)
            .iter()
            .zip(low(&fine.eigenvalues))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let (block, ok) = convergence_block(d, SPECTRUM_TOLERANCE, cfg.cutoff);
        body["convergence"] = block;
        passed = ok;
    }
    write_with(&cfg.out, "spectrum.csv", |w| spectrum.write_csv(w))?;
    if args.vectors {
        write_with(&cfg.out, "vectors.csv", |w| spectrum.write_vectors_csv(w))?;
    }
    let run = describe("spectrum", &cfg, json!({ "vectors": args.vectors }));
    write_header(&cfg.out, "spectrum.json", run, body)?;
    println!("max_imag {max_imag:e}");
    fail_unconverged(passed, "spectrum")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Method {
    Scan,
    #[value(name = "2x2")]
    #[serde(rename = "2x2")]
    TwoLevel,
    #[value(name = "3x3")]
    #[serde(rename = "3x3")]
    ThreeLevel,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "scan")]
    pub method: Method,
    /// Term whose strength is increased (default: v:<n>).
    #[arg(long)]
    pub along: Option<TermKey>,
    /// Scan ceiling along the ray.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Bisection resolution.
    #[arg(long)]
    pub resolution: Option<f64>,
}

fn ray_key(common: &Common, along: Option<TermKey>) -> Result<TermKey, CliError> {
    along
        .or(common.n.map(TermKey::GainLoss))
        .ok_or_else(|| CliError::Usage("choose the varied term with --n or --along".into()))
}

pub fn threshold(args: &ThresholdArgs) -> Result<(), CliError> {
    let cfg = args.common.resolve()?;
    let resolution = args.resolution.unwrap_or(cfg.resolution);
    let key = ray_key(&args.common, args.along)?;
    let order = key.order();
    let result = match args.method {
        Method::TwoLevel | Method::ThreeLevel if !key.is_gain_loss() => {
            return Err(CliError::Usage("closed forms need a gain-loss term".into()))
        }
        Method::TwoLevel => threshold::analytic_2x2_result(order)?,
        Method::ThreeLevel => threshold::analytic_3x3_result(order)?,
        Method::Scan => {
            let opts = ThresholdOptions {
                resolution,
                ceiling: args.beta_max,
                ..Default::default()
            };
            threshold::find_threshold(&Ray::along(cfg.spec.clone(), key, 1.0), cfg.cutoff, &opts)?
        }
    };
    let mut body = serde_json::to_value(&result).expect("result serializes");
    let mut passed = true;
    if cfg.check_convergence {
        if args.method != Method::Scan {
            return Err(CliError::Usage("--check-convergence applies to --method scan".into()));
        }
        let opts = ThresholdOptions {
            resolution,
            ceiling: args.beta_max,
            ..Default::default()
        };
        let fine = threshold::find_threshold(&Ray::along(cfg.spec.clone(), key, 1.0), 2 * cfg.cutoff, &opts)?;
        let (block, ok) = convergence_block((fine.beta_c - result.beta_c).abs(), THRESHOLD_TOLERANCE, cfg.cutoff);
        body["convergence"] = block;
        passed = ok;
    }
    let run = describe(
        "threshold",
        &cfg,
        json!({ "method": args.method, "along": key, "beta_max": args.beta_max, "resolution": resolution }),
    );
    write_header(&cfg.out, "threshold.json", run, body)?;
    println!("beta_c {}", result.beta_c);
    fail_unconverged(passed, "threshold")
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub along: Option<TermKey>,
    #[arg(long, default_value_t = 4.0)]
    pub beta_max: f64,
    /// Number of lowest levels to follow.
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Grid points in [0, beta_max].
    #[arg(long, default_value_t = 801)]
    pub steps: usize,
}

pub fn flow(args: &FlowArgs) -> Result<(), CliError> {
    let cfg = args.common.resolve()?;
    reject_convergence_flag(&cfg, "flow")?;
    let key = ray_key(&args.common, args.along)?;
    let trace = threshold::flow(&Ray::along(cfg.spec.clone(), key, 1.0), args.beta_max, args.steps, args.levels, cfg.cutoff)?;
    let merges: Vec<Value> = trace
        .merges(threshold::DEFAULT_EPSILON)
        .iter()
        .map(|m| {
            json!({
                "beta": m.beta,
                "level": m.level,
                "partner": m.partner,
                "levels_at_zero": [trace.initial()[m.level], m.partner.map(|p| trace.initial()[p])],
            })
        })
        .collect();
    write_with(&cfg.out, "flow.csv", |w| trace.write_csv(w))?;
    let run = describe(
        "flow",
        &cfg,
        json!({ "along": key, "beta_max": args.beta_max, "levels": args.levels, "steps": args.steps }),
    );
    let body = json!({
        "initial": trace.initial(),
        "sectors": trace.sectors,
        "merges": merges,
        "ambiguous_steps": trace.ambiguous_steps,
    });
    write_header(&cfg.out, "flow.json", run, body)?;
    for m in trace.merges(threshold::DEFAULT_EPSILON) {
        println!("merge beta {} levels {:?}", m.beta, (m.level, m.partner));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct PhasemapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub axis1: TermKey,
    #[arg(long)]
    pub axis2: TermKey,
    /// Half-width of axis 1 (default 2 in threshold units when normalized, else 2n for v:n and 2 for u:p).
    #[arg(long)]
    pub range1: Option<f64>,
    #[arg(long)]
    pub range2: Option<f64>,
    /// Points per axis (odd); overrides the config grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Measure gain-loss axes in units of their single-term thresholds.
    #[arg(long)]
    pub normalized: bool,
}

pub fn phasemap(args: &PhasemapArgs) -> Result<(), CliError> {
    let mut cfg = args.common.resolve()?;
    reject_convergence_flag(&cfg, "phasemap")?;
    if args.common.cutoff.is_none() && cfg.cutoff == ptannulus::operator::DEFAULT_CUTOFF {
        let from_file = args
            .common
            .config
            .as_ref()
            .map(|p| crate::config::FileConfig::load(p))
            .transpose()?
            .and_then(|f| f.cutoff);
        cfg.cutoff = from_file.unwrap_or(phasemap::DEFAULT_MAP_CUTOFF);
    }
    let [n1, n2] = match args.grid {
        Some(g) => [g, g],
        None => cfg.grid.unwrap_or([phasemap::DEFAULT_COUNT; 2]),
    };
    let axis = |key: TermKey, range: Option<f64>, count: usize| -> Result<Axis, CliError> {
        let scaled = args.normalized && key.is_gain_loss();
        let extent = range.unwrap_or(match key {
            _ if scaled => 2.0,
            TermKey::GainLoss(n) => 2.0 * n as f64,
            TermKey::Hermitian(_) => 2.0,
        });
        if !(extent > 0.0) {
            return Err(CliError::Usage(format!("axis {key} has an empty range")));
        }
        let a = Axis::centered(key, extent, count)?;
        Ok(if scaled { a.scaled(phasemap::axis_scale(key, cfg.cutoff)?)? } else { a })
    };
    let a1 = axis(args.axis1, args.range1, n1)?;
    let a2 = axis(args.axis2, args.range2, n2)?;
    let map = phasemap::scan(&cfg.spec, a1, a2, cfg.cutoff, None)?;
    write_with(&cfg.out, "phasemap.csv", |w| map.write_csv(w))?;
    write_with(&cfg.out, "phasemap.dat", |w| map.write_gnuplot(w))?;
    let run = describe(
        "phasemap",
        &cfg,
        json!({ "axis1": args.axis1, "axis2": args.axis2, "range1": args.range1, "range2": args.range2,
                "grid": [n1, n2], "normalized": args.normalized }),
    );
    let body: Value = serde_json::from_str(&map.header_json()).expect("header is JSON");
    write_header(&cfg.out, "phasemap.json", run, body)?;
    println!("symmetric_fraction {}", map.symmetric_fraction());
    if !map.failures.is_empty() {
        eprintln!("{} cells failed; see phasemap.json", map.failures.len());
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Set β of V_n to this multiple of its threshold.
    #[arg(long)]
    pub beta_rel: Option<f64>,
    /// Mode index in ascending order of Re α² (0 = ground state).
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// Radial quantum number.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Inner/outer radius ratio (0 = disc).
    #[arg(long)]
    pub a_ratio: Option<f64>,
    #[arg(long, default_value_t = field::DEFAULT_RADIAL_POINTS)]
    pub rho_points: usize,
    #[arg(long, default_value_t = field::DEFAULT_ANGULAR_POINTS)]
    pub phi_points: usize,
}

pub fn density(args: &DensityArgs) -> Result<(), CliError> {
    let mut cfg = args.common.resolve()?;
    reject_convergence_flag(&cfg, "density")?;
    let mut beta_c = None;
    if let Some(rel) = args.beta_rel {
        let n = args.common.n.ok_or_else(|| CliError::Usage("--beta-rel needs --n".into()))?;
        let key = TermKey::GainLoss(n);
        let base = cfg.spec.with_strength(key, 0.0);
        let bc = threshold::find_threshold(&Ray::along(base, key, 1.0), cfg.cutoff, &ThresholdOptions::default())?.beta_c;
        cfg.spec = cfg.spec.with_strength(key, rel * bc);
        beta_c = Some(bc);
    }
    let a_ratio = args.a_ratio.unwrap_or(cfg.a_ratio);
    let geometry = if a_ratio == 0.0 { Geometry::disc(1.0) } else { Geometry::annulus(a_ratio, 1.0) };
    geometry.validate()?;
    let op = build(&cfg.spec, cfg.cutoff)?;
    let modes = field::modes(&op)?;
    let mode: &AngularMode = modes
        .get(args.level)
        .ok_or_else(|| CliError::Usage(format!("level {} out of range", args.level)))?;
    let weights: serde_json::Map<String, Value> = cfg
        .spec
        .gain_loss
        .iter()
        .map(|t| {
            let (g, l) = field::gain_loss_weights(mode, t.order).expect("orders are odd");
            (TermKey::GainLoss(t.order).to_string(), json!({ "gain": g, "loss": l }))
        })
        .collect();
    let run = describe(
        "density",
        &cfg,
        json!({ "beta_rel": args.beta_rel, "level": args.level, "q": args.q, "a_ratio": a_ratio,
                "rho_points": args.rho_points, "phi_points": args.phi_points }),
    );
    let mut body = json!({
        "alpha_sq": [mode.alpha_sq.re, mode.alpha_sq.im],
        "beta_c": beta_c,
        "weights": weights,
        "pi_rotation_defect": field::pi_rotation_defect(mode, 1024),
    });
    match radial::alpha_from_sq(mode.alpha_sq, 1e-9) {
        Ok(_) => {
            let (density, header) = field::density(mode, args.q, &geometry, args.rho_points, args.phi_points)?;
            body["density"] = serde_json::to_value(header).expect("header serializes");
            body["broken_phase_angular_only"] = json!(false);
            write_with(&cfg.out, "density.csv", |w| density.write_csv(w))?;
            println!("normalization {}", density.integral());
        }
        Err(_) => {
            // complex α²: only the angular profile is defined here
            let phi = field::uniform_phi(args.phi_points);
            let profile = field::angular_profile(mode, &phi);
            body["broken_phase_angular_only"] = json!(true);
            write_with(&cfg.out, "density_angular.csv", |w| {
                writeln!(w, "phi,abs2")?;
                for (p, z) in phi.iter().zip(&profile) {
                    writeln!(w, "{p},{}", z.norm_sqr())?;
                }
                Ok(())
            })?;
            println!("broken phase: angular profile only (alpha_sq = {})", mode.alpha_sq);
        }
    }
    write_header(&cfg.out, "density.json", run, body)
}

#[derive(Debug, Clone, Args)]
pub struct RadialArgs {
    #[command(flatten)]
    pub common: Common,
    /// Bessel orders; comma-separated or repeated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    /// Radial quantum numbers per order.
    #[arg(long, default_value_t = 3)]
    pub q: usize,
    #[arg(long)]
    pub a_ratio: Option<f64>,
}

pub fn radial(args: &RadialArgs) -> Result<(), CliError> {
    let cfg = args.common.resolve()?;
    reject_convergence_flag(&cfg, "radial")?;
    let a_ratio = args.a_ratio.unwrap_or(cfg.a_ratio);
    let geometry = if a_ratio == 0.0 { Geometry::disc(1.0) } else { Geometry::annulus(a_ratio, 1.0) };
    let modes = radial::energies(&args.alpha, args.q, &geometry)?;
    write_with(&cfg.out, "radial.csv", |w| radial::write_modes_csv(&modes, w))?;
    let run = describe(
        "radial",
        &Resolved {
            spec: PotentialSpec::default(),
            ..cfg.clone()
        },
        json!({ "alpha": args.alpha, "q": args.q, "a_ratio": a_ratio }),
    );
    write_header(&cfg.out, "radial.json", run, json!({ "geometry": geometry, "modes": modes.len() }))?;
    for m in &modes {
        println!("alpha {} q {} kappa {}", m.alpha, m.q, m.kappa);
    }
    Ok(())
}
