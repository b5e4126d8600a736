//! PT-breaking thresholds along a one-parameter ray of potentials, the
//! two- and three-level closed forms, and eigenvalue flows `α²(β)`.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, cmp_complex};
use crate::error::{Error, Result};
use crate::operator::{build, reduced_block, PotentialSpec, Sector, TermKey};

/// Imaginary-part detection floor on the `α²` scale.
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_RESOLUTION: f64 = 1e-4;

/// Potentials `base + s·direction`, `s ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub base: PotentialSpec,
    pub direction: Vec<(TermKey, f64)>,
}

impl Ray {
    /// A single term switched on from zero.
    pub fn single(key: TermKey) -> Self {
        Self::along(PotentialSpec::default(), key, 1.0)
    }

    /// `V_n` alone with `β = s`.
    pub fn gain_loss(order: u32) -> Self {
        Self::single(TermKey::GainLoss(order))
    }

    /// Varies `key` with slope `weight`; the base value of `key` is discarded.
    pub fn along(base: PotentialSpec, key: TermKey, weight: f64) -> Self {
        Self {
            base: base.with_strength(key, 0.0),
            direction: vec![(key, weight)],
        }
    }

    pub fn spec_at(&self, s: f64) -> PotentialSpec {
        self.direction.iter().fold(self.base.clone(), |spec, &(key, w)| {
            let value = spec.strength(key) + s * w;
            spec.with_strength(key, value)
        })
    }

    /// Natural scale: `n/|w|` for a single gain-loss direction, else the largest order.
    fn scale(&self) -> f64 {
        match self.direction.as_slice() {
            [(TermKey::GainLoss(n), w)] if *w != 0.0 => *n as f64 / w.abs(),
            _ => self
                .direction
                .iter()
                .map(|(k, _)| k.order())
                .chain(std::iter::once(self.base.max_order()))
                .max()
                .unwrap_or(1) as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.direction.is_empty() || self.direction.iter().all(|&(_, w)| w == 0.0) {
            return Err(Error::Invalid("ray direction is zero".into()));
        }
        for &(key, w) in &self.direction {
            key.validate()?;
            if !w.is_finite() {
                return Err(Error::Invalid(format!("non-finite weight for {key}")));
            }
        }
        Ok(())
    }

    fn max_order(&self) -> u32 {
        self.spec_at(1.0).max_order()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    pub resolution: f64,
    pub epsilon: f64,
    /// Coarse scan stride; defaults to 5% of the ray scale (single `V_n`) or of the ceiling.
    pub stride: Option<f64>,
    /// Scan limit; defaults to four times the ray scale.
    pub ceiling: Option<f64>,
    /// Worker cap for the coarse scan; `None` uses the ambient pool.
    pub workers: Option<usize>,
    /// Continuation steps used to trace the merging pair back to `s = 0`.
    pub track_steps: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            epsilon: DEFAULT_EPSILON,
            stride: None,
            ceiling: None,
            workers: None,
            track_steps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    ScanBisect,
    #[serde(rename = "analytic_2x2")]
    Analytic2x2,
    #[serde(rename = "analytic_3x3")]
    Analytic3x3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub beta_c: f64,
    /// `max|Im α²| ≤ ε` at the lower end, `> ε` at the upper end.
    pub bracket: (f64, f64),
    pub method: ThresholdMethod,
    /// Unperturbed (`s = 0`) values of the two levels that coalesce, ascending.
    pub participating_levels: Option<[f64; 2]>,
    /// One member of the coalesced pair at the upper bracket end, as `[re, im]`.
    pub merge_value: Option<[f64; 2]>,
    #[serde(rename = "cutoff_M")]
    pub cutoff: Option<usize>,
}

impl ThresholdResult {
    fn analytic(value: f64, method: ThresholdMethod, levels: [f64; 2]) -> Self {
        Self {
            beta_c: value,
            bracket: (value, value),
            method,
            participating_levels: Some(levels),
            merge_value: None,
            cutoff: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold result is serializable")
    }
}

/// Degeneracy point of the two-level block `m = (n−1)/2`, `m' = −(n+1)/2`: exactly `n`.
pub fn analytic_2x2(order: u32) -> Result<f64> {
    let block = reduced_block(order, 2, 1.0)?;
    let gap = (block.matrix[(1, 1)] - block.matrix[(0, 0)]).re.abs();
    let coupling = block.matrix[(0, 1)].norm();
    Ok(gap / (2.0 * coupling))
}

/// Degeneracy point of the `m ∈ {−1, 0, 1}` block for `V_1`: `1/√2`.
///
/// The combination `|1⟩ − |−1⟩` decouples; `|0⟩` couples to `(|1⟩ + |−1⟩)/√2`
/// with strength `√2·β/2`, and that two-level problem coalesces at `1/√2`.
pub fn analytic_3x3(order: u32) -> Result<f64> {
    let block = reduced_block(order, 3, 1.0)?;
    let gap = (block.matrix[(0, 0)] - block.matrix[(1, 1)]).re.abs();
    let coupling = std::f64::consts::SQRT_2 * block.matrix[(0, 1)].norm();
    Ok(gap / (2.0 * coupling))
}

pub fn analytic_2x2_result(order: u32) -> Result<ThresholdResult> {
    let n = order as f64;
    Ok(ThresholdResult::analytic(
        analytic_2x2(order)?,
        ThresholdMethod::Analytic2x2,
        [(n - 1.0).powi(2) / 4.0, (n + 1.0).powi(2) / 4.0],
    ))
}

pub fn analytic_3x3_result(order: u32) -> Result<ThresholdResult> {
    Ok(ThresholdResult::analytic(analytic_3x3(order)?, ThresholdMethod::Analytic3x3, [0.0, 1.0]))
}

fn max_imag_at(ray: &Ray, s: f64, cutoff: usize) -> Result<f64> {
    let op = build(&ray.spec_at(s), cutoff)?;
    Ok(eigen::operator_eigvals(&op)?.max_imag())
}

pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .unwrap_or_else(|e| panic!("failed to build worker pool: {e}")),
        None => f(),
    }
}

/// First PT-breaking point along `ray`: a coarse forward scan from `s = 0`
/// followed by bisection of the first bracket.
pub fn find_threshold(ray: &Ray, cutoff: usize, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    ray.validate()?;
    if !(opts.resolution > 0.0 && opts.epsilon > 0.0) {
        return Err(Error::Invalid("resolution and epsilon must be positive".into()));
    }
    build(&ray.spec_at(0.0), cutoff)?;
    let scale = ray.scale();
    let ceiling = opts.ceiling.unwrap_or(4.0 * scale);
    let stride = opts.stride.unwrap_or(if matches!(ray.direction.as_slice(), [(TermKey::GainLoss(_), _)]) {
        0.05 * scale
    } else {
        0.05 * ceiling
    });
    if !(stride > 0.0 && ceiling > 0.0) {
        return Err(Error::Invalid("stride and ceiling must be positive".into()));
    }

    if max_imag_at(ray, 0.0, cutoff)? > opts.epsilon {
        // already broken at the origin of the ray
        return Ok(ThresholdResult {
            beta_c: 0.0,
            bracket: (0.0, 0.0),
            method: ThresholdMethod::ScanBisect,
            participating_levels: None,
            merge_value: None,
            cutoff: Some(cutoff),
        });
    }

    let count = (ceiling / stride).ceil() as usize;
    let chunk = 8 * opts.workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let mut bracket = None;
    let mut start = 1;
    while start <= count && bracket.is_none() {
        let end = (start + chunk).min(count + 1);
        let values: Vec<Result<f64>> = with_workers(opts.workers, || {
            (start..end)
                .into_par_iter()
                .map(|k| max_imag_at(ray, (k as f64 * stride).min(ceiling), cutoff))
                .collect()
        });
        for (offset, v) in values.into_iter().enumerate() {
            let v = v?;
            if v > opts.epsilon {
                let k = start + offset;
                bracket = Some((((k - 1) as f64 * stride).min(ceiling), (k as f64 * stride).min(ceiling), v));
                break;
            }
        }
        start = end;
    }
    let (mut lo, mut hi, mut hi_value) = bracket.ok_or(Error::NoCrossing { ceiling })?;

    while hi - lo > opts.resolution {
        let mid = 0.5 * (lo + hi);
        let v = max_imag_at(ray, mid, cutoff)?;
        if v > opts.epsilon {
            if v > hi_value * (1.0 + 1e-9) + opts.epsilon {
                return Err(Error::NonMonotone { lo, hi });
            }
            hi = mid;
            hi_value = v;
        } else {
            lo = mid;
        }
    }

    let (levels, merge) = match participating_pair(ray, hi, cutoff, opts) {
        Ok((levels, merge)) => (Some(levels), Some([merge.re, merge.im])),
        Err(_) => (None, None),
    };
    Ok(ThresholdResult {
        beta_c: 0.5 * (lo + hi),
        bracket: (lo, hi),
        method: ThresholdMethod::ScanBisect,
        participating_levels: levels,
        merge_value: merge,
        cutoff: Some(cutoff),
    })
}

/// Closest complex-conjugate pair at `s`, traced back to its `s = 0` origins.
fn participating_pair(ray: &Ray, s: f64, cutoff: usize, opts: &ThresholdOptions) -> Result<([f64; 2], Complex64)> {
    let op = build(&ray.spec_at(s), cutoff)?;
    let mut best: Option<(f64, Sector, usize, usize)> = None;
    for sector in eigen::operator_sectors(&op, false)? {
        let z = &sector.spectrum.eigenvalues;
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                if z[i].im.abs() <= opts.epsilon || z[j].im.abs() <= opts.epsilon || z[i].im * z[j].im >= 0.0 {
                    continue;
                }
                let d = (z[i] - z[j]).norm();
                if best.map_or(true, |b| d < b.0) {
                    best = Some((d, sector.sector, i, j));
                }
            }
        }
    }
    let (_, sector, i, j) = best.ok_or_else(|| Error::Invalid("no conjugate pair at upper bracket".into()))?;

    let steps = opts.track_steps.max(2);
    let grid: Vec<f64> = (0..=steps).map(|k| s * k as f64 / steps as f64).collect();
    let tracks = track_sector(ray, sector, &grid, cutoff)?;
    // tracks are aligned with the sorted sector spectrum at the final grid point
    let last = grid.len() - 1;
    let end = eigen::operator_sectors(&op, false)?
        .into_iter()
        .find(|x| x.sector == sector)
        .expect("sector present")
        .spectrum
        .eigenvalues;
    let find = |target: Complex64| {
        tracks
            .iter()
            .min_by(|a, b| (a[last] - target).norm().total_cmp(&(b[last] - target).norm()))
            .map(|t| t[0].re)
            .expect("non-empty")
    };
    let mut levels = [find(end[i]), find(end[j])];
    if levels[0] == levels[1] {
        // both ends matched one track; fall back to distinct origins by rank
        let mut origins: Vec<f64> = tracks.iter().map(|t| t[0].re).collect();
        origins.sort_by(f64::total_cmp);
        let pos = origins.iter().position(|&o| o == levels[0]).unwrap_or(0);
        levels[1] = origins[(pos + 1).min(origins.len() - 1)];
    }
    levels.sort_by(f64::total_cmp);
    Ok((levels, end[i]))
}

/// Greedy minimal-distance assignment of `next` onto `prev`; returns `perm`
/// with `next[perm[k]]` continuing `prev[k]`, and whether any choice was close to a tie.
fn match_levels(prev: &[Complex64], next: &[Complex64]) -> (Vec<usize>, bool) {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (a, p) in prev.iter().enumerate() {
        for (b, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; next.len()];
    let mut assigned = 0;
    for &(_, a, b) in &pairs {
        if perm[a] == usize::MAX && !used[b] {
            perm[a] = b;
            used[b] = true;
            assigned += 1;
            if assigned == n {
                break;
            }
        }
    }
    let mut ambiguous = false;
    for a in 0..n {
        let d = (prev[a] - next[perm[a]]).norm();
        for b in 0..next.len() {
            if b != perm[a] && (next[b] - next[perm[a]]).norm() < 1e-6 * (1.0 + d) && d > 0.0 {
                ambiguous = true;
            }
        }
    }
    (perm, ambiguous)
}

/// Continuation of every eigenvalue of one parity sector across `grid`;
/// `tracks[k][step]`, ordered by the value at `grid[0]`.
pub fn track_sector(ray: &Ray, sector: Sector, grid: &[f64], cutoff: usize) -> Result<Vec<Vec<Complex64>>> {
    Ok(track_sector_flagged(ray, sector, grid, cutoff)?.0)
}

fn track_sector_flagged(
    ray: &Ray,
    sector: Sector,
    grid: &[f64],
    cutoff: usize,
) -> Result<(Vec<Vec<Complex64>>, Vec<usize>)> {
    let spectra: Vec<Vec<Complex64>> = grid
        .par_iter()
        .map(|&s| {
            let op = build(&ray.spec_at(s), cutoff)?;
            let block = op.parity_blocks();
            Ok(eigen::eigvals(block.block(sector))?.eigenvalues)
        })
        .collect::<Result<_>>()?;
    let n = spectra[0].len();
    let mut tracks: Vec<Vec<Complex64>> = spectra[0].iter().map(|&z| vec![z]).collect();
    let mut ambiguous = Vec::new();
    let mut current = spectra[0].clone();
    for (step, next) in spectra.iter().enumerate().skip(1) {
        let (perm, tie) = match_levels(&current, next);
        if tie {
            ambiguous.push(step);
        }
        for k in 0..n {
            current[k] = next[perm[k]];
            tracks[k].push(current[k]);
        }
    }
    Ok((tracks, ambiguous))
}

/// Continuity-matched flow of the lowest `α²` levels along a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub beta_grid: Vec<f64>,
    /// `levels[step][k]`.
    pub levels: Vec<Vec<Complex64>>,
    /// Parity sector of each level.
    pub sectors: Vec<Sector>,
    /// Grid steps where the assignment was ambiguous (typically at a coalescence).
    pub ambiguous_steps: Vec<usize>,
}

/// First coalescence of a level into a complex-conjugate pair along a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// First grid value with `|Im| > ε`.
    pub beta: f64,
    pub level: usize,
    /// Partner level, when it is part of the trace.
    pub partner: Option<usize>,
}

impl FlowTrace {
    pub fn level_count(&self) -> usize {
        self.sectors.len()
    }

    /// Values of the traced levels at the first grid point.
    pub fn initial(&self) -> Vec<f64> {
        self.levels[0].iter().map(|z| z.re).collect()
    }

    /// Coalescences among the traced levels, ordered by `beta`; each pair once.
    pub fn merges(&self, epsilon: f64) -> Vec<Merge> {
        let k = self.level_count();
        let mut seen = vec![false; k];
        let mut out = Vec::new();
        for step in 0..self.beta_grid.len() {
            let row = &self.levels[step];
            for i in 0..k {
                if seen[i] || row[i].im.abs() <= epsilon {
                    continue;
                }
                seen[i] = true;
                let partner = (0..k)
                    .filter(|&j| j != i && self.sectors[j] == self.sectors[i] && row[j].im * row[i].im < 0.0)
                    .min_by(|&a, &b| {
                        (row[a] - row[i].conj()).norm().total_cmp(&(row[b] - row[i].conj()).norm())
                    })
                    .filter(|&j| (row[j] - row[i].conj()).norm() < 1e-6 * (1.0 + row[i].norm()));
                if let Some(j) = partner {
                    seen[j] = true;
                }
                out.push(Merge {
                    beta: self.beta_grid[step],
                    level: i,
                    partner,
                });
            }
        }
        out
    }

    /// Writes `beta,level_index,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "beta,level_index,re,im")?;
        for (beta, row) in self.beta_grid.iter().zip(&self.levels) {
            for (k, z) in row.iter().enumerate() {
                writeln!(w, "{beta},{k},{},{}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Tracks the `k` lowest levels at `s = 0` over `steps` evenly spaced points in `[0, beta_max]`.
///
/// Each parity sector is continued separately. Degenerate levels at `s = 0`
/// (one per sector) are assigned to the sector with fewer levels chosen so far.
pub fn flow(ray: &Ray, beta_max: f64, steps: usize, k_levels: usize, cutoff: usize) -> Result<FlowTrace> {
    ray.validate()?;
    if steps < 2 || k_levels < 2 {
        return Err(Error::Invalid("flow needs at least 2 steps and 2 levels".into()));
    }
    if !(beta_max > 0.0 && beta_max.is_finite()) {
        return Err(Error::Invalid("beta_max must be positive".into()));
    }
    if k_levels > 2 * cutoff + 1 {
        return Err(Error::Invalid(format!("cannot trace {k_levels} levels at cutoff {cutoff}")));
    }
    if 2 * cutoff < ray.max_order() as usize {
        build(&ray.spec_at(0.0), cutoff)?;
    }
    let grid: Vec<f64> = (0..steps).map(|k| beta_max * k as f64 / (steps - 1) as f64).collect();
    let (even, even_amb) = track_sector_flagged(ray, Sector::Even, &grid, cutoff)?;
    let (odd, odd_amb) = track_sector_flagged(ray, Sector::Odd, &grid, cutoff)?;

    let mut candidates: Vec<(Complex64, Sector, usize)> = even
        .iter()
        .enumerate()
        .map(|(i, t)| (t[0], Sector::Even, i))
        .chain(odd.iter().enumerate().map(|(i, t)| (t[0], Sector::Odd, i)))
        .collect();
    candidates.sort_by(|a, b| cmp_complex(&a.0, &b.0));

    let mut chosen: Vec<(Sector, usize)> = Vec::with_capacity(k_levels);
    let mut pos = 0;
    while chosen.len() < k_levels && pos < candidates.len() {
        let value = candidates[pos].0;
        let mut group: Vec<(Sector, usize)> = candidates[pos..]
            .iter()
            .take_while(|c| (c.0 - value).norm() <= 1e-9 * (1.0 + value.norm()))
            .map(|c| (c.1, c.2))
            .collect();
        pos += group.len();
        while !group.is_empty() && chosen.len() < k_levels {
            let count = |s: Sector| chosen.iter().filter(|c| c.0 == s).count();
            group.sort_by_key(|g| (count(g.0), g.0));
            chosen.push(group.remove(0));
        }
    }

    let levels = (0..grid.len())
        .map(|step| {
            chosen
                .iter()
                .map(|&(sector, i)| match sector {
                    Sector::Even => even[i][step],
                    Sector::Odd => odd[i][step],
                })
                .collect()
        })
        .collect();
    let mut ambiguous_steps: Vec<usize> = even_amb.into_iter().chain(odd_amb).collect();
    ambiguous_steps.sort_unstable();
    ambiguous_steps.dedup();
    Ok(FlowTrace {
        beta_grid: grid,
        levels,
        sectors: chosen.iter().map(|c| c.0).collect(),
        ambiguous_steps,
    })
}

/// `Δ_n = |β_nc − n|` for each order.
pub fn delta_n(orders: &[u32], cutoff: usize, opts: &ThresholdOptions) -> Result<Vec<(u32, f64)>> {
    orders
        .iter()
        .map(|&n| {
            let r = find_threshold(&Ray::gain_loss(n), cutoff, opts)?;
            Ok((n, (r.beta_c - n as f64).abs()))
        })
        .collect()
}

/// Least-squares slope of `ln Δ` against `n`.
pub fn log_slope(points: &[(u32, f64)]) -> f64 {
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
