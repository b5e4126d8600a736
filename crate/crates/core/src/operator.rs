//! Angular-momentum representation of the polar equation.
//!
//! Row/column index `i ∈ [0, 2M]` maps to angular momentum `m = i − M`; every
//! module in the crate uses this convention. Strengths are dimensionless
//! (ħ²/2μ = 1): a gain-loss term `−iβ cos(nφ)/ρ²` couples `m ↔ m ± n` with
//! `−iβ/2`, a Hermitian term `−λ cos(pφ)/ρ²` couples `m ↔ m ± p` with `−λ/2`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// Default angular-momentum cutoff.
pub const DEFAULT_CUTOFF: usize = 100;

/// Purely imaginary potential `V_n = −iβ cos(nφ)/ρ²`, `n` odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainLossTerm {
    #[serde(rename = "n")]
    pub order: u32,
    pub beta: f64,
}

/// Real potential `U_p = −λ cos(pφ)/ρ²`, `p` even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianTerm {
    #[serde(rename = "p")]
    pub order: u32,
    pub lambda: f64,
}

impl GainLossTerm {
    pub fn new(order: u32, beta: f64) -> Result<Self> {
        let t = Self { order, beta };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.order % 2 != 1 {
            return Err(Error::InvalidSpec(format!(
                "gain-loss order must be a positive odd integer, got {}",
                self.order
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidSpec(format!("beta for n={} is not finite", self.order)));
        }
        Ok(())
    }
}

impl HermitianTerm {
    pub fn new(order: u32, lambda: f64) -> Result<Self> {
        let t = Self { order, lambda };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order % 2 != 0 {
            return Err(Error::InvalidSpec(format!(
                "hermitian order must be a positive even integer, got {}",
                self.order
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidSpec(format!("lambda for p={} is not finite", self.order)));
        }
        Ok(())
    }
}

/// Identifies a single term of a [`PotentialSpec`]: `v:<n>` or `u:<p>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKey {
    GainLoss(u32),
    Hermitian(u32),
}

impl TermKey {
    pub fn order(self) -> u32 {
        match self {
            TermKey::GainLoss(n) | TermKey::Hermitian(n) => n,
        }
    }

    pub fn is_gain_loss(self) -> bool {
        matches!(self, TermKey::GainLoss(_))
    }

    pub fn validate(self) -> Result<()> {
        match self {
            TermKey::GainLoss(n) => GainLossTerm::new(n, 0.0).map(|_| ()),
            TermKey::Hermitian(p) => HermitianTerm::new(p, 0.0).map(|_| ()),
        }
    }
}

impl fmt::Display for TermKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermKey::GainLoss(n) => write!(f, "v:{n}"),
            TermKey::Hermitian(p) => write!(f, "u:{p}"),
        }
    }
}

impl FromStr for TermKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, order) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("term `{s}` is not of the form v:<n> or u:<p>")))?;
        let order: u32 = order
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad term order in `{s}`")))?;
        let key = match kind.trim() {
            "v" | "V" => TermKey::GainLoss(order),
            "u" | "U" => TermKey::Hermitian(order),
            _ => return Err(Error::InvalidSpec(format!("unknown term kind in `{s}`"))),
        };
        key.validate()?;
        Ok(key)
    }
}

impl Serialize for TermKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TermKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sum of gain-loss and Hermitian terms. At most one term per order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub gain_loss: Vec<GainLossTerm>,
    #[serde(default)]
    pub hermitian: Vec<HermitianTerm>,
}

impl PotentialSpec {
    /// Validates the terms and merges duplicate orders by summing strengths.
    pub fn new(gain_loss: Vec<GainLossTerm>, hermitian: Vec<HermitianTerm>) -> Result<Self> {
        Self { gain_loss, hermitian }.normalized()
    }

    pub fn gain_loss(order: u32, beta: f64) -> Result<Self> {
        Self::new(vec![GainLossTerm::new(order, beta)?], vec![])
    }

    pub fn validate(&self) -> Result<()> {
        self.gain_loss.iter().try_for_each(GainLossTerm::validate)?;
        self.hermitian.iter().try_for_each(HermitianTerm::validate)
    }

    /// Validated copy with duplicate orders merged and terms sorted by order.
    pub fn normalized(&self) -> Result<Self> {
        self.validate()?;
        let mut v: BTreeMap<u32, f64> = BTreeMap::new();
        for t in &self.gain_loss {
            *v.entry(t.order).or_default() += t.beta;
        }
        let mut u: BTreeMap<u32, f64> = BTreeMap::new();
        for t in &self.hermitian {
            *u.entry(t.order).or_default() += t.lambda;
        }
        Ok(Self {
            gain_loss: v.into_iter().map(|(order, beta)| GainLossTerm { order, beta }).collect(),
            hermitian: u.into_iter().map(|(order, lambda)| HermitianTerm { order, lambda }).collect(),
        })
    }

    pub fn max_order(&self) -> u32 {
        self.gain_loss
            .iter()
            .map(|t| t.order)
            .chain(self.hermitian.iter().map(|t| t.order))
            .max()
            .unwrap_or(0)
    }

    /// Strength of a term, zero when absent.
    pub fn strength(&self, key: TermKey) -> f64 {
        match key {
            TermKey::GainLoss(n) => self.gain_loss.iter().filter(|t| t.order == n).map(|t| t.beta).sum(),
            TermKey::Hermitian(p) => self.hermitian.iter().filter(|t| t.order == p).map(|t| t.lambda).sum(),
        }
    }

    /// Copy with the strength of `key` replaced (the term is added if absent).
    pub fn with_strength(&self, key: TermKey, value: f64) -> Self {
        let mut out = self.clone();
        match key {
            TermKey::GainLoss(n) => {
                out.gain_loss.retain(|t| t.order != n);
                out.gain_loss.push(GainLossTerm { order: n, beta: value });
                out.gain_loss.sort_by_key(|t| t.order);
            }
            TermKey::Hermitian(p) => {
                out.hermitian.retain(|t| t.order != p);
                out.hermitian.push(HermitianTerm { order: p, lambda: value });
                out.hermitian.sort_by_key(|t| t.order);
            }
        }
        out
    }

    /// All gain-loss strengths negated (exchanges gain and loss regions).
    pub fn flip_gain_loss(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.gain_loss {
            t.beta = -t.beta;
        }
        out
    }

    pub fn is_hermitian(&self) -> bool {
        self.gain_loss.iter().all(|t| t.beta == 0.0)
    }
}

/// On-disk form of a potential: the spec plus an optional cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDocument {
    #[serde(flatten)]
    pub spec: PotentialSpec,
    #[serde(rename = "cutoff_M", default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

impl SpecDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("spec JSON: {e}")))?;
        Ok(Self {
            spec: doc.spec.normalized()?,
            cutoff: doc.cutoff,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec is always serializable")
    }
}

/// Truncated `(2M+1)×(2M+1)` angular operator `A` (or `A'` with Hermitian terms).
#[derive(Debug, Clone, PartialEq)]
pub struct AngularOperator {
    cutoff: usize,
    bandwidth: usize,
    matrix: CMatrix,
}

impl AngularOperator {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dimension(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn index_of(&self, m: i64) -> usize {
        let i = m + self.cutoff as i64;
        assert!(i >= 0 && (i as usize) < self.dimension(), "m = {m} outside cutoff");
        i as usize
    }

    pub fn momentum(&self, index: usize) -> i64 {
        index as i64 - self.cutoff as i64
    }

    /// Entry `A_{m m'}`.
    pub fn entry(&self, m: i64, m2: i64) -> Complex64 {
        self.matrix[(self.index_of(m), self.index_of(m2))]
    }

    /// Splits `A` into its `m ↔ −m` even (cos) and odd (sin) invariant blocks.
    ///
    /// Every term is a cosine, so `A_{m,m'} = A_{−m,−m'}` and the spectrum of `A`
    /// is the union of the two block spectra. The even block acts on
    /// `{|0⟩, (|m⟩+|−m⟩)/√2}`, the odd block on `{(|m⟩−|−m⟩)/√2}`, `m = 1..M`.
    pub fn parity_blocks(&self) -> ParityBlocks {
        let m_max = self.cutoff;
        let a = |m: usize, k: i64| self.matrix[(m + m_max, (k + m_max as i64) as usize)];
        let sqrt2 = std::f64::consts::SQRT_2;
        let even = CMatrix::from_fn(m_max + 1, m_max + 1, |i, j| match (i, j) {
            (0, 0) => a(0, 0),
            (0, j) => a(0, j as i64) * sqrt2,
            (i, 0) => a(i, 0) * sqrt2,
            (i, j) => a(i, j as i64) + a(i, -(j as i64)),
        });
        let odd = CMatrix::from_fn(m_max, m_max, |i, j| {
            let (i, j) = (i + 1, j as i64 + 1);
            a(i, j) - a(i, -j)
        });
        ParityBlocks { cutoff: m_max, even, odd }
    }
}

/// Parity sector under `m → −m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Even,
    Odd,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Even => "even",
            Sector::Odd => "odd",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ParityBlocks {
    cutoff: usize,
    pub even: CMatrix,
    pub odd: CMatrix,
}

impl ParityBlocks {
    pub fn block(&self, sector: Sector) -> &CMatrix {
        match sector {
            Sector::Even => &self.even,
            Sector::Odd => &self.odd,
        }
    }

    /// Maps a block vector back to the full `|m⟩` basis.
    pub fn lift(&self, sector: Sector, v: &[Complex64]) -> Vec<Complex64> {
        let m_max = self.cutoff;
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match sector {
            Sector::Even => {
                assert_eq!(v.len(), m_max + 1);
                out[m_max] = v[0];
                for m in 1..=m_max {
                    out[m_max + m] = v[m] * h;
                    out[m_max - m] = v[m] * h;
                }
            }
            Sector::Odd => {
                assert_eq!(v.len(), m_max);
                for m in 1..=m_max {
                    out[m_max + m] = v[m - 1] * h;
                    out[m_max - m] = -v[m - 1] * h;
                }
            }
        }
        out
    }
}

/// Assembles the truncated angular operator for `spec`.
pub fn build(spec: &PotentialSpec, cutoff: usize) -> Result<AngularOperator> {
    let spec = spec.normalized()?;
    let max_order = spec.max_order() as usize;
    // the coupling band |m − m'| = order must fit inside the truncated basis
    if cutoff == 0 || 2 * cutoff < max_order {
        return Err(Error::CutoffTooSmall {
            cutoff,
            order: max_order.max(1),
        });
    }
    let dim = 2 * cutoff + 1;
    let mut a = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let m = i as f64 - cutoff as f64;
        a[(i, i)] = Complex64::new(m * m, 0.0);
    }
    let mut couple = |order: usize, value: Complex64| {
        for i in 0..dim - order {
            a[(i, i + order)] += value;
            a[(i + order, i)] += value;
        }
    };
    for t in &spec.gain_loss {
        couple(t.order as usize, Complex64::new(0.0, -0.5 * t.beta));
    }
    for t in &spec.hermitian {
        couple(t.order as usize, Complex64::new(-0.5 * t.lambda, 0.0));
    }
    Ok(AngularOperator {
        cutoff,
        bandwidth: max_order,
        matrix: a,
    })
}

/// Restriction of `A` for a single `V_n` to the levels that drive its PT breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBlock {
    /// Angular momenta spanning the block, in row order.
    pub momenta: Vec<i64>,
    pub matrix: CMatrix,
}

/// `size = 2`: levels `m = (n−1)/2`, `m' = −(n+1)/2` (the mirror pair is identical);
/// `size = 3`: `m ∈ {−1, 0, 1}`, only for `n = 1`.
pub fn reduced_block(order: u32, size: usize, beta: f64) -> Result<ReducedBlock> {
    GainLossTerm::new(order, beta)?;
    let momenta: Vec<i64> = match size {
        2 => {
            let n = order as i64;
            vec![(n - 1) / 2, -(n + 1) / 2]
        }
        3 if order == 1 => vec![-1, 0, 1],
        3 => {
            return Err(Error::InvalidSpec(format!(
                "3x3 reduction is only defined for n = 1, got n = {order}"
            )))
        }
        _ => return Err(Error::InvalidSpec(format!("reduced block size must be 2 or 3, got {size}"))),
    };
    let coupling = Complex64::new(0.0, -0.5 * beta);
    let matrix = CMatrix::from_fn(momenta.len(), momenta.len(), |i, j| {
        let (m, k) = (momenta[i], momenta[j]);
        if i == j {
            Complex64::new((m * m) as f64, 0.0)
        } else if (m - k).unsigned_abs() == order as u64 {
            coupling
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(ReducedBlock { momenta, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_strength_is_diagonal() {
        let op = build(&PotentialSpec::gain_loss(1, 0.0).unwrap(), 2).unwrap();
        let a = op.matrix();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { ((i as f64) - 2.0).powi(2) } else { 0.0 };
                assert_eq!(a[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn v3_coupling_positions() {
        let op = build(&PotentialSpec::gain_loss(3, 2.0).unwrap(), 2).unwrap();
        for &(m, k) in &[(-2, 1), (1, -2), (-1, 2), (2, -1)] {
            assert_eq!(op.entry(m, k), c(0.0, -1.0));
        }
        let nonzero = op.matrix().as_slice().iter().filter(|z| z.norm() > 0.0).count();
        // four diagonal entries (m = 0 is zero) plus four couplings
        assert_eq!(nonzero, 8);
    }

    #[test]
    fn hermitian_term_adds_real_band() {
        let spec = PotentialSpec::new(
            vec![GainLossTerm::new(1, 1.0).unwrap()],
            vec![HermitianTerm::new(2, 1.0).unwrap()],
        )
        .unwrap();
        let op = build(&spec, 2).unwrap();
        let v1 = build(&PotentialSpec::gain_loss(1, 1.0).unwrap(), 2).unwrap();
        for m in -2i64..=2 {
            for k in -2i64..=2 {
                let extra = if (m - k).abs() == 2 { c(-0.5, 0.0) } else { c(0.0, 0.0) };
                assert_eq!(op.entry(m, k), v1.entry(m, k) + extra);
            }
        }
    }

    #[test]
    fn duplicate_orders_merge() {
        let spec = PotentialSpec::new(
            vec![GainLossTerm::new(3, 1.0).unwrap(), GainLossTerm::new(3, 0.5).unwrap()],
            vec![],
        )
        .unwrap();
        assert_eq!(spec.gain_loss.len(), 1);
        assert_eq!(spec.strength(TermKey::GainLoss(3)), 1.5);
    }

    #[test]
    fn invalid_orders_rejected() {
        assert!(GainLossTerm::new(2, 1.0).is_err());
        assert!(GainLossTerm::new(0, 1.0).is_err());
        assert!(HermitianTerm::new(3, 1.0).is_err());
        assert!(HermitianTerm::new(0, 1.0).is_err());
        assert!(GainLossTerm::new(1, f64::NAN).is_err());
        let bad = PotentialSpec {
            gain_loss: vec![GainLossTerm { order: 4, beta: 1.0 }],
            hermitian: vec![],
        };
        assert!(build(&bad, 10).is_err());
    }

    #[test]
    fn cutoff_too_small() {
        let spec = PotentialSpec::gain_loss(5, 1.0).unwrap();
        assert_eq!(build(&spec, 2), Err(Error::CutoffTooSmall { cutoff: 2, order: 5 }));
        assert!(build(&spec, 3).is_ok());
        assert!(build(&PotentialSpec::default(), 0).is_err());
    }

    #[test]
    fn term_key_round_trip() {
        assert_eq!("v:3".parse::<TermKey>().unwrap(), TermKey::GainLoss(3));
        assert_eq!("u:2".parse::<TermKey>().unwrap(), TermKey::Hermitian(2));
        assert_eq!(TermKey::Hermitian(6).to_string(), "u:6");
        assert!("v:2".parse::<TermKey>().is_err());
        assert!("w:1".parse::<TermKey>().is_err());
        assert!("v1".parse::<TermKey>().is_err());
    }

    #[test]
    fn json_schema_field_names() {
        let text = r#"{"gain_loss":[{"n":1,"beta":0.5}], "hermitian":[{"p":2,"lambda":1.0}], "cutoff_M":100}"#;
        let doc = SpecDocument::from_json(text).unwrap();
        assert_eq!(doc.cutoff, Some(100));
        assert_eq!(doc.spec.strength(TermKey::GainLoss(1)), 0.5);
        assert_eq!(doc.spec.strength(TermKey::Hermitian(2)), 1.0);
        let back: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(back["gain_loss"][0]["n"], 1);
        assert_eq!(back["hermitian"][0]["lambda"], 1.0);
        assert_eq!(back["cutoff_M"], 100);
        assert!(SpecDocument::from_json(r#"{"gain_loss":[{"n":2,"beta":0.5}]}"#).is_err());
    }

    #[test]
    fn reduced_blocks() {
        let b = reduced_block(3, 2, 3.0).unwrap();
        assert_eq!(b.momenta, vec![1, -2]);
        assert_eq!(b.matrix[(0, 0)], c(1.0, 0.0));
        assert_eq!(b.matrix[(1, 1)], c(4.0, 0.0));
        assert_eq!(b.matrix[(0, 1)], c(0.0, -1.5));
        let b = reduced_block(1, 3, 0.0).unwrap();
        assert_eq!(b.momenta, vec![-1, 0, 1]);
        assert!(reduced_block(3, 3, 1.0).is_err());
        assert!(reduced_block(3, 4, 1.0).is_err());
    }

    #[test]
    fn parity_blocks_lift_to_eigen_relation() {
        // A·lift(v) == lift(B·v) for any block vector v.
        let spec = PotentialSpec::new(
            vec![GainLossTerm::new(1, 0.4).unwrap(), GainLossTerm::new(3, -1.1).unwrap()],
            vec![HermitianTerm::new(2, 0.7).unwrap()],
        )
        .unwrap();
        let op = build(&spec, 6).unwrap();
        let blocks = op.parity_blocks();
        for sector in [Sector::Even, Sector::Odd] {
            let b = blocks.block(sector);
            let v: Vec<Complex64> = (0..b.rows()).map(|k| c(k as f64 + 1.0, 0.5 - k as f64)).collect();
            let lhs = op.matrix().mul_vec(&blocks.lift(sector, &v));
            let rhs = blocks.lift(sector, &b.mul_vec(&v));
            for (x, y) in lhs.iter().zip(&rhs) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
