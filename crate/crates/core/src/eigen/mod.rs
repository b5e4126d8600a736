//! Dense non-Hermitian eigensolver with PT-aware post-processing.

mod qr;

use std::cmp::Ordering;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::operator::{AngularOperator, Sector};

/// Eigenvector overlap above which two eigenpairs are treated as coalescing.
pub const EP_OVERLAP: f64 = 1.0 - 1e-4;

/// Absolute tolerance for pairing eigenvalues with their complex conjugates.
pub const PAIRING_TOL: f64 = 1e-9;

/// Eigenvalues `α²` sorted by real then imaginary part, optionally with
/// unit-norm right eigenvectors aligned with them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    /// Index pairs whose eigenvectors are numerically parallel.
    pub near_exceptional: Vec<(usize, usize)>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_imag(&self) -> f64 {
        max_imag(&self.eigenvalues)
    }

    /// Set when some eigenvalue shows fewer independent eigenvectors than its multiplicity.
    pub fn is_defective(&self) -> bool {
        !self.near_exceptional.is_empty()
    }

    /// Writes `index,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,re,im")?;
        for (k, z) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{k},{},{}", z.re, z.im)?;
        }
        Ok(())
    }

    /// Writes `index,m,c_re,c_im`; `m` runs over `−M..=M`.
    pub fn write_vectors_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,m,c_re,c_im")?;
        if let Some(vectors) = &self.eigenvectors {
            for (k, v) in vectors.iter().enumerate() {
                let cutoff = (v.len() / 2) as i64;
                for (i, c) in v.iter().enumerate() {
                    writeln!(w, "{k},{},{},{}", i as i64 - cutoff, c.re, c.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Largest `|Im α²|`, zero for an empty slice.
pub fn max_imag(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_input(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() == 0 {
        return Err(Error::Empty);
    }
    if let Some((row, col)) = a.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    Ok(())
}

/// All eigenvalues of a square complex matrix.
pub fn eigvals(a: &CMatrix) -> Result<Spectrum> {
    check_input(a)?;
    let mut h = a.clone();
    qr::balance(&mut h);
    qr::hessenberg(&mut h, None);
    qr::hessenberg_qr(&mut h, None, false)?;
    let mut eigenvalues: Vec<Complex64> = (0..h.rows()).map(|i| h[(i, i)]).collect();
    eigenvalues.sort_by(cmp_complex);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: None,
        near_exceptional: Vec::new(),
    })
}

/// Eigenvalues with unit-norm right eigenvectors.
///
/// At (or near) an exceptional point the returned vectors for the coalescing
/// pair are numerically parallel; such pairs are listed in `near_exceptional`.
pub fn eigpairs(a: &CMatrix) -> Result<Spectrum> {
    check_input(a)?;
    let n = a.rows();
    let mut t = a.clone();
    let scale = qr::balance(&mut t);
    let mut z = CMatrix::identity(n);
    qr::hessenberg(&mut t, Some(&mut z));
    qr::hessenberg_qr(&mut t, Some(&mut z), true)?;

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = qr::triangular_eigenvectors(&t)
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            let mut v: Vec<Complex64> = (0..n)
                .map(|r| x.iter().enumerate().map(|(l, xl)| z[(r, l)] * xl).sum::<Complex64>() * scale[r])
                .collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|c| *c /= norm);
            }
            (t[(k, k)], v)
        })
        .collect();
    pairs.sort_by(|x, y| cmp_complex(&x.0, &y.0));
    let (eigenvalues, vectors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let near_exceptional = coalescing_pairs(&eigenvalues, &vectors);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
        near_exceptional,
    })
}

fn coalescing_pairs(values: &[Complex64], vectors: &[Vec<Complex64>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            // sorted by real part; only nearby values can coalesce
            if values[j].re - values[i].re > 1e-2 * (1.0 + values[i].norm()) {
                break;
            }
            if (values[j] - values[i]).norm() > 1e-2 * (1.0 + values[i].norm()) {
                continue;
            }
            if overlap(&vectors[i], &vectors[j]) > EP_OVERLAP {
                out.push((i, j));
            }
        }
    }
    out
}

/// `|⟨u, v⟩|` for unit vectors.
pub fn overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm()
}

/// Spectrum of one parity block of an angular operator.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub sector: Sector,
    pub spectrum: Spectrum,
}

/// Eigenvalues of an angular operator, solved block by block.
pub fn operator_eigvals(op: &AngularOperator) -> Result<Spectrum> {
    let blocks = op.parity_blocks();
    let mut eigenvalues = eigvals(&blocks.even)?.eigenvalues;
    if blocks.odd.rows() > 0 {
        eigenvalues.extend(eigvals(&blocks.odd)?.eigenvalues);
    }
    eigenvalues.sort_by(cmp_complex);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: None,
        near_exceptional: Vec::new(),
    })
}

/// Per-sector eigenvalues of an angular operator, optionally with eigenvectors
/// lifted back to the full `|m⟩` basis.
pub fn operator_sectors(op: &AngularOperator, vectors: bool) -> Result<Vec<SectorSpectrum>> {
    let blocks = op.parity_blocks();
    let mut out = Vec::with_capacity(2);
    for sector in [Sector::Even, Sector::Odd] {
        let block = blocks.block(sector);
        if block.rows() == 0 {
            continue;
        }
        let mut spectrum = if vectors { eigpairs(block)? } else { eigvals(block)? };
        if let Some(vs) = spectrum.eigenvectors.as_mut() {
            for v in vs.iter_mut() {
                *v = blocks.lift(sector, v);
            }
        }
        out.push(SectorSpectrum { sector, spectrum });
    }
    Ok(out)
}

/// Eigenpairs of an angular operator in the `|m⟩` basis, merged over sectors.
pub fn operator_eigpairs(op: &AngularOperator) -> Result<(Spectrum, Vec<Sector>)> {
    let mut rows: Vec<(Complex64, Vec<Complex64>, Sector)> = Vec::with_capacity(op.dimension());
    for s in operator_sectors(op, true)? {
        let vectors = s.spectrum.eigenvectors.expect("requested vectors");
        for (z, v) in s.spectrum.eigenvalues.into_iter().zip(vectors) {
            rows.push((z, v, s.sector));
        }
    }
    rows.sort_by(|x, y| cmp_complex(&x.0, &y.0).then(x.2.cmp(&y.2)));
    let mut eigenvalues = Vec::with_capacity(rows.len());
    let mut vectors = Vec::with_capacity(rows.len());
    let mut sectors = Vec::with_capacity(rows.len());
    for (z, v, s) in rows {
        eigenvalues.push(z);
        vectors.push(v);
        sectors.push(s);
    }
    let near_exceptional = coalescing_pairs(&eigenvalues, &vectors);
    Ok((
        Spectrum {
            eigenvalues,
            eigenvectors: Some(vectors),
            near_exceptional,
        },
        sectors,
    ))
}

/// Largest distance between each eigenvalue and the nearest conjugate of another
/// (or itself); zero for a conjugation-symmetric multiset.
pub fn conjugation_defect(values: &[Complex64]) -> f64 {
    values
        .iter()
        .map(|z| values.iter().map(|w| (z - w.conj()).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}
