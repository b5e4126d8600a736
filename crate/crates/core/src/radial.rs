//! Radial sector: Bessel functions of real order, their zeros, and the
//! disc/annulus quantization `E(α, q) = κ_q²`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported argument.
pub const MAX_ARG: f64 = 200.0;
/// Largest supported order.
pub const MAX_ORDER: f64 = 500.0;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;

/// Taylor coefficients of `1/Γ(z) = Σ c_k z^k`, `k = 1..`.
const RGAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// `(Γ₁, Γ₂, 1/Γ(1+μ), 1/Γ(1−μ))` for `|μ| ≤ 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // c_k enters Γ₁ as −c_k μ^{k−2} (k even) and Γ₂ as c_k μ^{k−1} (k odd)
    let mu2 = mu * mu;
    let gam1 = -RGAMMA.iter().skip(1).step_by(2).rev().fold(0.0, |acc, &c| acc * mu2 + c);
    let gam2 = RGAMMA.iter().step_by(2).rev().fold(0.0, |acc, &c| acc * mu2 + c);
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    (gam1, gam2, gampl, gammi)
}

/// `J_ν(x)`, `Y_ν(x)` and their derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselJY {
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

fn check(alpha: f64, x: f64) -> Result<()> {
    if !(alpha.is_finite() && (0.0..=MAX_ORDER).contains(&alpha)) {
        return Err(Error::Domain(format!("order {alpha} outside [0, {MAX_ORDER}]")));
    }
    if !(x.is_finite() && (0.0..=MAX_ARG).contains(&x)) {
        return Err(Error::Domain(format!("argument {x} outside [0, {MAX_ARG}]")));
    }
    Ok(())
}

/// Bessel functions of both kinds for `x > 0`: Temme's series for `x < 2`,
/// Steed's continued fractions otherwise, with recurrence in the order.
pub fn bessel_jy(nu: f64, x: f64) -> Result<BesselJY> {
    check(nu, x)?;
    if x <= 0.0 {
        return Err(Error::Domain("Y diverges at x = 0".into()));
    }
    let nl = if x < 2.0 {
        (nu + 0.5) as usize
    } else {
        (nu - x + 1.5).max(0.0) as usize
    };
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: J'_ν/J_ν
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() <= EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: MAXIT });
    }

    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let t = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * t - rjl;
        rjl = t;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    let (rjmu, mut rymu, mut ry1);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = 2.0 / PI * fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let e = e.exp();
        let mut p = e / (gampl * PI);
        let mut q = 1.0 / (e * PI * gammi);
        let pimu2 = 0.5 * pimu;
        let fact3 = if pimu2.abs() < EPS { 1.0 } else { pimu2.sin() / pimu2 };
        let r = PI * pimu2 * fact3 * fact3;
        let mut c = 1.0;
        let d = -x2 * x2;
        let mut sum = ff + r * q;
        let mut sum1 = p;
        let mut done = false;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * (ff + r * q);
            sum += del;
            sum1 += c * p - fi * del;
            if del.abs() < (1.0 + sum.abs()) * EPS {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::NoConvergence { iterations: MAXIT });
        }
        rymu = -sum;
        ry1 = -sum1 * xi2;
        let rymup = xmu * xi * rymu - ry1;
        rjmu = w / (rymup - f * rymu);
    } else {
        // CF2: p + iq
        let mut a = 0.25 - xmu2;
        let mut p = -0.5 * xi;
        let mut q = 1.0;
        let br = 2.0 * x;
        let mut bi = 2.0;
        let mut fact = a * xi / (p * p + q * q);
        let mut cr = br + q * fact;
        let mut ci = bi + p * fact;
        let mut den = br * br + bi * bi;
        let mut dr = br / den;
        let mut di = -bi / den;
        let mut dlr = cr * dr - ci * di;
        let mut dli = cr * di + ci * dr;
        let t = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = t;
        let mut done = false;
        for i in 1..MAXIT {
            a += 2.0 * i as f64;
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if dr.abs() + di.abs() < FPMIN {
                dr = FPMIN;
            }
            fact = a / (cr * cr + ci * ci);
            cr = br + cr * fact;
            ci = bi - ci * fact;
            if cr.abs() + ci.abs() < FPMIN {
                cr = FPMIN;
            }
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            let t = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = t;
            if (dlr - 1.0).abs() + dli.abs() <= EPS {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::NoConvergence { iterations: MAXIT });
        }
        let gam = (p - f) / q;
        rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
        rymu = rjmu * gam;
        let rymup = rymu * (p + q / gam);
        ry1 = xmu * xi * rymu - rymup;
    }

    let scale = rjmu / rjl;
    let j = rjl1 * scale;
    let jp = rjp1 * scale;
    for i in 1..=nl {
        let t = (xmu + i as f64) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = t;
    }
    Ok(BesselJY {
        j,
        y: rymu,
        jp,
        yp: nu * xi * rymu - ry1,
    })
}

/// `J_α(x)` for `0 ≤ x ≤ 200`.
pub fn bessel_j(alpha: f64, x: f64) -> Result<f64> {
    check(alpha, x)?;
    if x == 0.0 {
        return Ok(if alpha == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(bessel_jy(alpha, x)?.j)
}

/// `Y_α(x)` for `0 < x ≤ 200`.
pub fn bessel_y(alpha: f64, x: f64) -> Result<f64> {
    Ok(bessel_jy(alpha, x)?.y)
}

/// Inner and outer radius; `inner = 0` is the disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub inner: f64,
    pub outer: f64,
}

impl Geometry {
    pub fn disc(outer: f64) -> Self {
        Self { inner: 0.0, outer }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Self { inner, outer }
    }

    pub fn ratio(&self) -> f64 {
        self.inner / self.outer
    }

    pub fn is_disc(&self) -> bool {
        self.inner == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer > 0.0 && self.outer.is_finite() && self.inner >= 0.0 && self.inner < self.outer) {
            return Err(Error::Invalid(format!(
                "geometry needs 0 ≤ inner < outer, got ({}, {})",
                self.inner, self.outer
            )));
        }
        Ok(())
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Self::disc(1.0)
    }
}

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First `count` sign changes of `f` on `(start, MAX_ARG]` at stride `π/2`, bisected.
fn scan_roots(f: &dyn Fn(f64) -> Result<f64>, start: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Invalid("count must be at least 1".into()));
    }
    let mut roots = Vec::with_capacity(count);
    let mut x = start;
    let mut fx = f(x)?;
    while roots.len() < count {
        if x >= MAX_ARG {
            return Err(Error::Domain(format!(
                "only {} of {count} zeros below the argument ceiling {MAX_ARG}",
                roots.len()
            )));
        }
        let next = (x + FRAC_PI_2).min(MAX_ARG);
        let fn_ = f(next)?;
        if fn_ == 0.0 {
            roots.push(next);
        } else if (fx < 0.0) != (fn_ < 0.0) {
            roots.push(bisect(f, x, next, fx)?);
        }
        x = next;
        fx = fn_;
    }
    Ok(roots)
}

fn check_order(alpha: f64) -> Result<()> {
    check(alpha, 1.0)
}

/// First `count` positive zeros of `J_α`.
pub fn disc_zeros(alpha: f64, count: usize) -> Result<Vec<f64>> {
    check_order(alpha)?;
    // J_α is positive on (0, j_{α,1}) and j_{α,1} > α
    let start = alpha.max(1e-3);
    scan_roots(&|x| bessel_j(alpha, x), start, count)
}

/// First `count` positive roots `κ` (units of `1/a_>`) of
/// `J_α(κ r) Y_α(κ) − J_α(κ) Y_α(κ r)`, `r = a_</a_>`.
pub fn annulus_zeros(alpha: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    check_order(alpha)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!("annulus ratio {ratio} outside (0, 1)")));
    }
    let cross = |k: f64| -> Result<f64> {
        let inner = bessel_jy(alpha, k * ratio)?;
        let outer = bessel_jy(alpha, k)?;
        Ok(inner.j * outer.y - outer.j * inner.y)
    };
    // the annulus roots lie above the disc roots of the same order
    scan_roots(&cross, alpha.max(1e-3), count)
}

/// Zeros for either geometry, in units of `1/a_>`.
pub fn zeros(alpha: f64, geometry: &Geometry, count: usize) -> Result<Vec<f64>> {
    geometry.validate()?;
    if geometry.is_disc() {
        disc_zeros(alpha, count)
    } else {
        annulus_zeros(alpha, geometry.ratio(), count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMode {
    pub alpha: f64,
    pub q: usize,
    pub kappa: f64,
    pub energy: f64,
    pub geometry: Geometry,
}

/// Real Bessel order `α = √α²` of an angular eigenvalue; complex or negative `α²` is rejected.
pub fn alpha_from_sq(alpha_sq: Complex64, tolerance: f64) -> Result<f64> {
    if alpha_sq.im.abs() > tolerance * (1.0 + alpha_sq.re.abs()) {
        return Err(Error::Domain(format!(
            "complex α² = {} + {}i: broken-phase radial quantization is not supported",
            alpha_sq.re, alpha_sq.im
        )));
    }
    if alpha_sq.re < -tolerance {
        return Err(Error::Domain(format!("α² = {} < 0 gives an imaginary order", alpha_sq.re)));
    }
    Ok(alpha_sq.re.max(0.0).sqrt())
}

/// `E = κ²` with `κ = (zero)/a_>` for every order and `q ≤ q_max`, ascending in energy.
pub fn energies(alphas: &[f64], q_max: usize, geometry: &Geometry) -> Result<Vec<RadialMode>> {
    geometry.validate()?;
    let mut out = Vec::with_capacity(alphas.len() * q_max);
    for &alpha in alphas {
        for (i, z) in zeros(alpha, geometry, q_max)?.into_iter().enumerate() {
            let kappa = z / geometry.outer;
            out.push(RadialMode {
                alpha,
                q: i + 1,
                kappa,
                energy: kappa * kappa,
                geometry: *geometry,
            });
        }
    }
    out.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.q.cmp(&b.q))
    });
    Ok(out)
}

/// Writes `alpha,q,kappa,energy`.
pub fn write_modes_csv<W: Write>(modes: &[RadialMode], mut w: W) -> io::Result<()> {
    writeln!(w, "alpha,q,kappa,energy")?;
    for m in modes {
        writeln!(w, "{},{},{},{}", m.alpha, m.q, m.kappa, m.energy)?;
    }
    Ok(())
}
