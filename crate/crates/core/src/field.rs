//! Eigenfunctions `Ψ(ρ, φ) = R(ρ) Φ(φ)` on a polar grid and the gain/loss
//! weights of angular modes.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen;
use crate::error::{Error, Result};
use crate::operator::AngularOperator;
use crate::radial::{self, Geometry};

pub const DEFAULT_RADIAL_POINTS: usize = 256;
pub const DEFAULT_ANGULAR_POINTS: usize = 512;

/// `Φ(φ) = Σ_{|m| ≤ M} c_m e^{imφ}` with unit coefficient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMode {
    coefficients: Vec<Complex64>,
    pub alpha_sq: Complex64,
}

impl AngularMode {
    /// Normalizes `coefficients` (odd length `2M+1`, index `i ↔ m = i − M`).
    pub fn new(coefficients: Vec<Complex64>, alpha_sq: Complex64) -> Result<Self> {
        if coefficients.len() % 2 == 0 {
            return Err(Error::Invalid("coefficient vector must have odd length 2M+1".into()));
        }
        let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Invalid("coefficient vector has zero or non-finite norm".into()));
        }
        Ok(Self {
            coefficients: coefficients.into_iter().map(|c| c / norm).collect(),
            alpha_sq,
        })
    }

    /// `e^{imφ}` at eigenvalue `m²`.
    pub fn plane_wave(m: i64, cutoff: usize) -> Result<Self> {
        if m.unsigned_abs() as usize > cutoff {
            return Err(Error::Invalid(format!("|m| = {} exceeds cutoff {cutoff}", m.abs())));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1];
        c[(m + cutoff as i64) as usize] = Complex64::new(1.0, 0.0);
        Self::new(c, Complex64::new((m * m) as f64, 0.0))
    }

    pub fn cutoff(&self) -> usize {
        self.coefficients.len() / 2
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, m: i64) -> Complex64 {
        let i = m + self.cutoff() as i64;
        if i < 0 || i as usize >= self.coefficients.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coefficients[i as usize]
        }
    }

    pub fn value(&self, phi: f64) -> Complex64 {
        let m0 = self.cutoff() as f64;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, (i as f64 - m0) * phi))
            .sum()
    }

    /// Fourier coefficient `C(k) = Σ_m c_m c̄_{m−k}` of `|Φ|²`.
    pub fn density_coefficient(&self, k: i64) -> Complex64 {
        let m = self.cutoff() as i64;
        (-m..=m).map(|j| self.coefficient(j) * self.coefficient(j - k).conj()).sum()
    }
}

/// All eigenmodes of an angular operator, ordered as its eigenvalues.
pub fn modes(op: &AngularOperator) -> Result<Vec<AngularMode>> {
    let (spectrum, _) = eigen::operator_eigpairs(op)?;
    let vectors = spectrum.eigenvectors.expect("eigenpairs carry vectors");
    spectrum
        .eigenvalues
        .into_iter()
        .zip(vectors)
        .map(|(z, v)| AngularMode::new(v, z))
        .collect()
}

/// `Φ(φ)` on the given angles.
pub fn angular_profile(mode: &AngularMode, phi_grid: &[f64]) -> Vec<Complex64> {
    phi_grid.iter().map(|&phi| mode.value(phi)).collect()
}

/// `N` uniform angles `2πj/N`.
pub fn uniform_phi(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// `max_φ | |Φ(φ)|² − |Φ(φ+π)|² |` on an `N`-point grid.
pub fn pi_rotation_defect(mode: &AngularMode, n: usize) -> f64 {
    uniform_phi(n)
        .iter()
        .map(|&phi| (mode.value(phi).norm_sqr() - mode.value(phi + PI).norm_sqr()).abs())
        .fold(0.0, f64::max)
}

/// `(w_gain, w_loss)`: the shares of `∫|Φ|² dφ/2π` on `cos nφ < 0` and `cos nφ > 0`.
///
/// Exact for a band-limited `Φ`: the indicator of `cos nφ < 0` is
/// `1/2 − (2/π) Σ_j (−1)^j cos((2j+1)nφ)/(2j+1)`, and only harmonics up to
/// `2M` survive the integral.
pub fn gain_loss_weights(mode: &AngularMode, order: u32) -> Result<(f64, f64)> {
    if order == 0 || order % 2 == 0 {
        return Err(Error::Invalid(format!("gain-loss order must be odd, got {order}")));
    }
    let total = mode.density_coefficient(0).re;
    let reach = 2 * mode.cutoff() as i64;
    let mut odd_part = 0.0;
    let mut j = 0i64;
    loop {
        let k = (2 * j + 1) * order as i64;
        if k > reach {
            break;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        odd_part += sign * mode.density_coefficient(k).re / (2 * j + 1) as f64;
        j += 1;
    }
    let gain = 0.5 * total - 2.0 / PI * odd_part;
    Ok((gain, total - gain))
}

/// Normalized `|Ψ|²` on a polar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub rho_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    /// `values[i][j]` at `(rho_grid[i], phi_grid[j])`.
    pub values: Vec<Vec<f64>>,
    pub alpha: f64,
    pub kappa: f64,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityHeader {
    pub geometry: Geometry,
    pub alpha_sq: [f64; 2],
    pub alpha: f64,
    pub q: usize,
    pub kappa: f64,
    pub radial_points: usize,
    pub angular_points: usize,
    pub normalization: f64,
}

impl DensityField {
    /// Trapezoid in `ρ` with weight `ρ`, uniform periodic rule in `φ`.
    pub fn integral(&self) -> f64 {
        polar_integral(&self.rho_grid, self.phi_grid.len(), &self.values)
    }

    /// Largest density on the boundary rows.
    pub fn boundary_max(&self) -> f64 {
        let first = if self.geometry.is_disc() { None } else { self.values.first() };
        first
            .into_iter()
            .chain(self.values.last())
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Writes `rho,phi,density`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "rho,phi,density")?;
        for (rho, row) in self.rho_grid.iter().zip(&self.values) {
            for (phi, v) in self.phi_grid.iter().zip(row) {
                writeln!(w, "{rho},{phi},{v}")?;
            }
        }
        Ok(())
    }
}

fn polar_integral(rho: &[f64], n_phi: usize, values: &[Vec<f64>]) -> f64 {
    let dphi = TAU / n_phi as f64;
    let ring: Vec<f64> = values
        .iter()
        .zip(rho)
        .map(|(row, r)| r * row.iter().sum::<f64>() * dphi)
        .collect();
    ring.windows(2)
        .zip(rho.windows(2))
        .map(|(f, r)| 0.5 * (f[0] + f[1]) * (r[1] - r[0]))
        .sum()
}

/// `|R(ρ)Φ(φ)|²` with `R` the `q`-th Dirichlet radial solution of order `α = √α²`
/// (`J_α(κρ)` on the disc, the cross-product combination on the annulus).
/// Radii are in units of the outer radius.
pub fn density(
    mode: &AngularMode,
    q: usize,
    geometry: &Geometry,
    radial_points: usize,
    angular_points: usize,
) -> Result<(DensityField, DensityHeader)> {
    geometry.validate()?;
    if radial_points < 2 || angular_points < 1 || q == 0 {
        return Err(Error::Invalid("density needs ≥ 2 radial points, ≥ 1 angle and q ≥ 1".into()));
    }
    let alpha = radial::alpha_from_sq(mode.alpha_sq, 1e-9)?;
    let kappa = *radial::zeros(alpha, geometry, q)?.last().expect("q ≥ 1");
    let r0 = geometry.ratio();
    let rho_grid: Vec<f64> = (0..radial_points)
        .map(|i| r0 + (1.0 - r0) * i as f64 / (radial_points - 1) as f64)
        .collect();
    let phi_grid = uniform_phi(angular_points);
    let angular: Vec<f64> = angular_profile(mode, &phi_grid).iter().map(|z| z.norm_sqr()).collect();

    let outer = if geometry.is_disc() { None } else { Some(radial::bessel_jy(alpha, kappa * r0)?) };
    let radial_factor = |rho: f64| -> Result<f64> {
        let x = kappa * rho;
        match outer {
            None => radial::bessel_j(alpha, x),
            Some(inner) => {
                if x == 0.0 {
                    return Ok(0.0);
                }
                let here = radial::bessel_jy(alpha, x)?;
                Ok(here.j * inner.y - inner.j * here.y)
            }
        }
    };
    let radial_values: Vec<f64> = rho_grid.par_iter().map(|&r| radial_factor(r)).collect::<Result<_>>()?;
    let mut values: Vec<Vec<f64>> = radial_values
        .iter()
        .map(|r| angular.iter().map(|a| r * r * a).collect())
        .collect();
    let raw = polar_integral(&rho_grid, angular_points, &values);
    if !(raw > 0.0) {
        return Err(Error::Invalid("density integrates to zero".into()));
    }
    for row in values.iter_mut() {
        for v in row.iter_mut() {
            *v /= raw;
        }
    }
    let field = DensityField {
        rho_grid,
        phi_grid,
        values,
        alpha,
        kappa,
        geometry: *geometry,
    };
    let header = DensityHeader {
        geometry: *geometry,
        alpha_sq: [mode.alpha_sq.re, mode.alpha_sq.im],
        alpha,
        q,
        kappa,
        radial_points,
        angular_points,
        normalization: field.integral(),
    };
    Ok((field, header))
}
