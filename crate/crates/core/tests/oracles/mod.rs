//! Independent reference computations used by the test suites.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

use ptannulus::operator::{GainLossTerm, HermitianTerm, PotentialSpec};

pub type C = Complex64;

// ---------------------------------------------------------------- polynomials

/// Coefficients, lowest degree first.
pub type Poly = Vec<C>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &mut Poly, b: &Poly, sign: f64) {
    if a.len() < b.len() {
        a.resize(b.len(), C::new(0.0, 0.0));
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y * sign;
    }
}

/// Determinant of a matrix of polynomials by cofactor expansion along row 0.
fn poly_det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc: Poly = vec![C::new(0.0, 0.0)];
    for col in 0..n {
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(c, _)| c != col).map(|(_, p)| p.clone()).collect())
            .collect();
        let term = poly_mul(&m[0][col], &poly_det(&minor));
        poly_add(&mut acc, &term, if col % 2 == 0 { 1.0 } else { -1.0 });
    }
    acc
}

/// `det(zI − A)`.
pub fn char_poly(a: &[Vec<C>]) -> Poly {
    let n = a.len();
    let m: Vec<Vec<Poly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { vec![-a[i][j], C::new(1.0, 0.0)] } else { vec![-a[i][j]] })
                .collect()
        })
        .collect();
    poly_det(&m)
}

fn horner(p: &Poly, z: C) -> C {
    p.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn derivative(p: &Poly) -> Poly {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// Roots of a polynomial: Durand–Kerner iteration, then Newton polishing.
pub fn poly_roots(p: &Poly) -> Vec<C> {
    let deg = p.len() - 1;
    let lead = p[deg];
    let monic: Poly = p.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C> = (0..deg)
        .map(|k| C::from_polar(radius * 0.9, 0.4 + std::f64::consts::TAU * k as f64 / deg as f64))
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let denom: C = (0..deg).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            let step = horner(&monic, z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    let dp = derivative(&monic);
    for r in z.iter_mut() {
        for _ in 0..3 {
            let d = horner(&dp, *r);
            if d.norm() > 0.0 {
                *r -= horner(&monic, *r) / d;
            }
        }
    }
    z
}

/// Largest distance in a greedy nearest matching of two equal-size multisets.
pub fn match_distance(a: &[C], b: &[C]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal sizes");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<C>> {
    (0..n)
        .map(|_| (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect()
}

// ---------------------------------------------------------------- Bessel

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos approximation, `z > 0`.
pub fn gamma(z: f64) -> f64 {
    if z < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * z).sin() * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut x = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * x
}

/// Ascending series `Σ (−1)^k (x/2)^{2k+α} / (k! Γ(k+α+1))`; use for moderate `x`.
pub fn bessel_j_series(alpha: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powf(alpha) / gamma(alpha + 1.0);
    let mut sum = term;
    for k in 0..500 {
        let k1 = (k + 1) as f64;
        term *= -h * h / (k1 * (k1 + alpha));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

pub fn j_half(x: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin()
}

pub fn y_half(x: f64) -> f64 {
    -(2.0 / (std::f64::consts::PI * x)).sqrt() * x.cos()
}

pub fn j_three_halves(x: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (x.sin() / x - x.cos())
}

pub fn y_three_halves(x: f64) -> f64 {
    -(2.0 / (std::f64::consts::PI * x)).sqrt() * (x.cos() / x + x.sin())
}

/// Central difference with step `h`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Five-point central difference.
pub fn central_diff5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Sign-change scan at `step` followed by bisection.
pub fn dense_roots(f: impl Fn(f64) -> f64, from: f64, to: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = from;
    let mut fx = f(x);
    while x < to {
        let nx = x + step;
        let fn_ = f(nx);
        if fx * fn_ < 0.0 {
            let (mut lo, mut hi, mut flo) = (x, nx, fx);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm * flo > 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        x = nx;
        fx = fn_;
    }
    out
}

// ---------------------------------------------------------------- angular

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `(w_gain, w_loss)` by Gauss–Legendre quadrature of `|Φ|²` over each arc
/// between consecutive zeros of `cos nφ`.
pub fn weights_by_arcs(coefficients: &[C], order: u32, nodes: usize) -> (f64, f64) {
    let m0 = (coefficients.len() / 2) as f64;
    let density = |phi: f64| -> f64 {
        coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * C::from_polar(1.0, (i as f64 - m0) * phi))
            .sum::<C>()
            .norm_sqr()
    };
    let rule = gauss_legendre(nodes);
    let n = order as f64;
    let arc = std::f64::consts::PI / n;
    let (mut gain, mut loss) = (0.0, 0.0);
    // arcs start at the zeros φ = (k + 1/2)π/n
    for k in 0..(2 * order) {
        let a = (k as f64 + 0.5) * arc;
        let mid = a + 0.5 * arc;
        let integral: f64 = rule.iter().map(|(x, w)| w * density(mid + 0.5 * arc * x)).sum::<f64>() * 0.5 * arc;
        if (n * mid).cos() < 0.0 {
            gain += integral;
        } else {
            loss += integral;
        }
    }
    let norm = std::f64::consts::TAU;
    (gain / norm, loss / norm)
}

/// A random mix of up to two gain-loss and two Hermitian terms.
pub fn random_spec<R: Rng>(rng: &mut R) -> PotentialSpec {
    let odd = [1u32, 3, 5, 7, 9];
    let even = [2u32, 4, 6];
    let gain_loss = (0..rng.gen_range(0..=2))
        .map(|_| GainLossTerm::new(odd[rng.gen_range(0..odd.len())], rng.gen_range(-6.0..6.0)).unwrap())
        .collect();
    let hermitian = (0..rng.gen_range(0..=2))
        .map(|_| HermitianTerm::new(even[rng.gen_range(0..even.len())], rng.gen_range(-4.0..4.0)).unwrap())
        .collect();
    PotentialSpec::new(gain_loss, hermitian).unwrap()
}
