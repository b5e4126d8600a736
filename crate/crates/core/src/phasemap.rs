//! `max|Im α²|` over a grid of two potential strengths, mirror-symmetry checks
//! and phase-boundary curves.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};
use crate::operator::{build, PotentialSpec, TermKey};
use crate::threshold::{find_threshold, with_workers, Ray, ThresholdOptions};

pub const DEFAULT_MAP_CUTOFF: usize = 60;
pub const DEFAULT_COUNT: usize = 101;
/// Cells with `max|Im α²|` at or below this are PT-symmetric.
pub const PHASE_EPSILON: f64 = 1e-6;

/// One scanned strength. Coordinates are in units of `scale` (1 unless normalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub term: TermKey,
    pub values: Vec<f64>,
    pub scale: f64,
}

impl Axis {
    pub fn linspace(term: TermKey, min: f64, max: f64, count: usize) -> Result<Self> {
        term.validate()?;
        if count < 2 {
            return Err(Error::Invalid(format!("axis {term} needs at least 2 points")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Invalid(format!("axis {term} range [{min}, {max}] is empty or not finite")));
        }
        let values = (0..count)
            .map(|k| {
                // symmetric construction keeps centred grids exactly mirror-symmetric
                let t = k as f64 / (count - 1) as f64;
                let v = min * (1.0 - t) + max * t;
                if 2 * k + 1 == count && min == -max {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        Ok(Self { term, values, scale: 1.0 })
    }

    /// `[-extent, extent]` with an odd number of points.
    pub fn centered(term: TermKey, extent: f64, count: usize) -> Result<Self> {
        if count % 2 == 0 {
            return Err(Error::Invalid("centred axes need an odd point count".into()));
        }
        let mut axis = Self::linspace(term, -extent, extent, count)?;
        let n = axis.values.len();
        for k in 0..n / 2 {
            axis.values[n - 1 - k] = -axis.values[k];
        }
        Ok(axis)
    }

    /// Measures coordinates in units of `scale`.
    pub fn scaled(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Invalid(format!("axis scale {scale} must be positive")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn strength(&self, k: usize) -> f64 {
        self.values[k] * self.scale
    }

    /// Index of the coordinate closest to zero.
    pub fn origin(&self) -> usize {
        (0..self.len())
            .min_by(|&a, &b| self.values[a].abs().total_cmp(&self.values[b].abs()))
            .expect("non-empty axis")
    }

    fn is_centered(&self) -> bool {
        let n = self.len();
        let tol = 1e-12 * self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        n % 2 == 1 && (0..n).all(|k| (self.values[k] + self.values[n - 1 - k]).abs() <= tol)
    }
}

/// Threshold of `term` alone, used to normalize an axis.
pub fn axis_scale(term: TermKey, cutoff: usize) -> Result<f64> {
    Ok(find_threshold(&Ray::single(term), cutoff, &ThresholdOptions::default())?.beta_c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub base: PotentialSpec,
    pub axis1: Axis,
    pub axis2: Axis,
    /// `values[i][j]` at `(axis1[i], axis2[j])`; NaN where the solve failed.
    pub values: Vec<Vec<f64>>,
    pub cutoff: usize,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Serialize)]
struct AxisHeader<'a> {
    term: TermKey,
    min: f64,
    max: f64,
    count: usize,
    scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<&'a [f64]>,
}

#[derive(Debug, Serialize)]
struct MapHeader<'a> {
    base: &'a PotentialSpec,
    axis1: AxisHeader<'a>,
    axis2: AxisHeader<'a>,
    #[serde(rename = "cutoff_M")]
    cutoff: usize,
    epsilon: f64,
    failures: &'a [CellFailure],
}

fn axis_header(a: &Axis) -> AxisHeader<'_> {
    AxisHeader {
        term: a.term,
        min: a.values[0],
        max: a.values[a.len() - 1],
        count: a.len(),
        scale: a.scale,
        values: None,
    }
}

impl PhaseMap {
    pub fn spec_at(&self, i: usize, j: usize) -> PotentialSpec {
        spec_at(&self.base, &self.axis1, &self.axis2, i, j)
    }

    pub fn is_symmetric(&self, i: usize, j: usize) -> bool {
        self.values[i][j] <= PHASE_EPSILON
    }

    /// Fraction of finite cells classified PT-symmetric.
    pub fn symmetric_fraction(&self) -> f64 {
        let finite: Vec<f64> = self.values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
        finite.iter().filter(|&&v| v <= PHASE_EPSILON).count() as f64 / finite.len().max(1) as f64
    }

    pub fn origin_value(&self) -> f64 {
        self.values[self.axis1.origin()][self.axis2.origin()]
    }

    pub fn header_json(&self) -> String {
        serde_json::to_string_pretty(&MapHeader {
            base: &self.base,
            axis1: axis_header(&self.axis1),
            axis2: axis_header(&self.axis2),
            cutoff: self.cutoff,
            epsilon: PHASE_EPSILON,
            failures: &self.failures,
        })
        .expect("header is serializable")
    }

    /// Writes `s1,s2,max_imag` in axis coordinates.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s1,s2,max_imag")?;
        for (s1, row) in self.axis1.values.iter().zip(&self.values) {
            for (s2, v) in self.axis2.values.iter().zip(row) {
                writeln!(w, "{s1},{s2},{v}")?;
            }
        }
        Ok(())
    }

    /// Gnuplot nonuniform matrix: first row `N s1…`, then `s2 v(·, s2)…`.
    pub fn write_gnuplot<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "{}", self.axis1.len())?;
        for s1 in &self.axis1.values {
            write!(w, " {s1}")?;
        }
        writeln!(w)?;
        for (j, s2) in self.axis2.values.iter().enumerate() {
            write!(w, "{s2}")?;
            for row in &self.values {
                write!(w, " {}", row[j])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn spec_at(base: &PotentialSpec, a1: &Axis, a2: &Axis, i: usize, j: usize) -> PotentialSpec {
    base.with_strength(a1.term, a1.strength(i)).with_strength(a2.term, a2.strength(j))
}

/// Evaluates every cell at one cutoff. Cell failures become NaN plus a log entry.
pub fn scan(base: &PotentialSpec, axis1: Axis, axis2: Axis, cutoff: usize, workers: Option<usize>) -> Result<PhaseMap> {
    base.validate()?;
    if axis1.term == axis2.term {
        return Err(Error::Invalid(format!("both axes scan {}", axis1.term)));
    }
    for a in [&axis1, &axis2] {
        if a.len() < 2 || a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("axis {} needs ≥ 2 finite points", a.term)));
        }
    }
    build(&spec_at(base, &axis1, &axis2, 0, 0), cutoff)?;
    let (n1, n2) = (axis1.len(), axis2.len());
    let cells: Vec<std::result::Result<f64, String>> = with_workers(workers, || {
        (0..n1 * n2)
            .into_par_iter()
            .map(|c| {
                let spec = spec_at(base, &axis1, &axis2, c / n2, c % n2);
                build(&spec, cutoff)
                    .and_then(|op| eigen::operator_eigvals(&op))
                    .map(|s| s.max_imag())
                    .map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut values = vec![vec![0.0; n2]; n1];
    let mut failures = Vec::new();
    for (c, cell) in cells.into_iter().enumerate() {
        let (i, j) = (c / n2, c % n2);
        values[i][j] = match cell {
            Ok(v) => v,
            Err(message) => {
                failures.push(CellFailure { i, j, message });
                f64::NAN
            }
        };
    }
    Ok(PhaseMap {
        base: base.clone(),
        axis1,
        axis2,
        values,
        cutoff,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// `(s1, s2) → (−s1, −s2)`
    PointReflection,
    /// `s1 → −s1`
    Axis1SignFlip,
    /// `s2 → −s2`
    Axis2SignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub kind: Symmetry,
    /// Largest `|v(cell) − v(mirror)|` over cells where both are finite.
    pub max_asymmetry: f64,
}

impl SymmetryReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_asymmetry <= tolerance
    }
}

pub fn symmetry_check(map: &PhaseMap, kind: Symmetry) -> Result<SymmetryReport> {
    let flip1 = matches!(kind, Symmetry::PointReflection | Symmetry::Axis1SignFlip);
    let flip2 = matches!(kind, Symmetry::PointReflection | Symmetry::Axis2SignFlip);
    for (flip, axis) in [(flip1, &map.axis1), (flip2, &map.axis2)] {
        if flip && !axis.is_centered() {
            return Err(Error::AsymmetricGrid(format!("axis {} is not centred on zero", axis.term)));
        }
    }
    let (n1, n2) = (map.axis1.len(), map.axis2.len());
    let mut worst = 0.0f64;
    for i in 0..n1 {
        for j in 0..n2 {
            let mi = if flip1 { n1 - 1 - i } else { i };
            let mj = if flip2 { n2 - 1 - j } else { j };
            let (a, b) = (map.values[i][j], map.values[mi][mj]);
            if a.is_finite() && b.is_finite() {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(SymmetryReport {
        kind,
        max_asymmetry: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisId {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Coordinate on the held axis.
    pub fixed: f64,
    /// First crossing of `ε` scanning outward from zero along the other axis;
    /// `None` when the scan leaves the grid still symmetric.
    pub crossing: Option<f64>,
}

/// Phase-boundary curve: for every coordinate of the held axis, the first
/// crossing along `along`, scanning from its zero cell towards `+` (or `−`).
pub fn threshold_curve(map: &PhaseMap, along: AxisId, positive: bool) -> Vec<CurvePoint> {
    let (scan_axis, held_axis) = match along {
        AxisId::One => (&map.axis1, &map.axis2),
        AxisId::Two => (&map.axis2, &map.axis1),
    };
    let value = |held: usize, k: usize| match along {
        AxisId::One => map.values[k][held],
        AxisId::Two => map.values[held][k],
    };
    let start = scan_axis.origin();
    let path: Vec<usize> = if positive {
        (start..scan_axis.len()).collect()
    } else {
        (0..=start).rev().collect()
    };
    (0..held_axis.len())
        .map(|h| {
            let mut crossing = None;
            if value(h, start) > PHASE_EPSILON {
                crossing = Some(scan_axis.values[start]);
            } else {
                for w in path.windows(2) {
                    let (v0, v1) = (value(h, w[0]), value(h, w[1]));
                    if v1 > PHASE_EPSILON || v1.is_nan() {
                        let (s0, s1) = (scan_axis.values[w[0]], scan_axis.values[w[1]]);
                        let t = if v1.is_finite() { (PHASE_EPSILON - v0) / (v1 - v0) } else { 0.5 };
                        crossing = Some(s0 + t * (s1 - s0));
                        break;
                    }
                }
            }
            CurvePoint {
                fixed: held_axis.values[h],
                crossing,
            }
        })
        .collect()
}

/// Largest `|c(f) − c(−f)|` between mirrored points of a boundary curve whose
/// held axis is centred; an open end against a closed one counts as infinite.
pub fn curve_asymmetry(curve: &[CurvePoint]) -> f64 {
    let n = curve.len();
    (0..n)
        .map(|k| match (curve[k].crossing, curve[n - 1 - k].crossing) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Boundary point found by [`refine_boundary_peak`], in axis coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPeak {
    pub fixed: f64,
    pub crossing: f64,
}

/// Locates the maximum of the boundary curve more finely than the map grid:
/// starting from the best held coordinate ± one cell, the crossing along
/// `along` is recomputed by [`find_threshold`] on `rounds` successively
/// narrower sub-grids of `points` held coordinates.
pub fn refine_boundary_peak(
    map: &PhaseMap,
    along: AxisId,
    points: usize,
    rounds: usize,
    opts: &ThresholdOptions,
) -> Result<BoundaryPeak> {
    let curve = threshold_curve(map, along, true);
    let (scan_axis, held_axis) = match along {
        AxisId::One => (&map.axis1, &map.axis2),
        AxisId::Two => (&map.axis2, &map.axis1),
    };
    let best = (0..curve.len())
        .filter(|&k| curve[k].crossing.is_some())
        .max_by(|&a, &b| curve[a].crossing.unwrap().total_cmp(&curve[b].crossing.unwrap()))
        .ok_or(Error::NoCrossing {
            ceiling: scan_axis.values[scan_axis.len() - 1],
        })?;
    let step = if held_axis.len() > 1 {
        (held_axis.values[1] - held_axis.values[0]).abs()
    } else {
        0.0
    };
    let ceiling = scan_axis.values[scan_axis.len() - 1];
    let mut opts = *opts;
    opts.ceiling = Some(ceiling);
    let crossing_at = |fixed: f64| -> Result<f64> {
        let base = map.base.with_strength(held_axis.term, fixed * held_axis.scale);
        let ray = Ray::along(base, scan_axis.term, scan_axis.scale);
        find_threshold(&ray, map.cutoff, &opts).map(|r| r.beta_c)
    };
    let mut center = held_axis.values[best];
    let mut half = step;
    let mut peak = BoundaryPeak {
        fixed: center,
        crossing: curve[best].crossing.unwrap_or(0.0),
    };
    let points = points.max(3);
    for _ in 0..rounds.max(1) {
        let grid: Vec<f64> = (0..points)
            .map(|k| center - half + 2.0 * half * k as f64 / (points - 1) as f64)
            .collect();
        let crossings: Vec<Result<f64>> = grid.iter().map(|&f| crossing_at(f)).collect();
        for (f, c) in grid.iter().zip(crossings) {
            if let Ok(c) = c {
                if c > peak.crossing {
                    peak = BoundaryPeak { fixed: *f, crossing: c };
                }
            }
        }
        center = peak.fixed;
        half = 2.0 * half / (points - 1) as f64;
    }
    Ok(peak)
}
