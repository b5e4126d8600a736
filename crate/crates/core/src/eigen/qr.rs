//! Balancing, Householder Hessenberg reduction and complex single-shift QR.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Diagonal similarity `A ← D⁻¹AD` with powers of two, returning `D`.
pub(crate) fn balance(a: &mut CMatrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut d = vec![1.0; n];
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += cabs1(a[(j, i)]);
                    r += cabs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// Reduces `a` to upper Hessenberg form in place; accumulates the unitary factor into `q`.
pub(crate) fn hessenberg(a: &mut CMatrix, mut q: Option<&mut CMatrix>) {
    let n = a.rows();
    let mut v = vec![ZERO; n];
    let mut s = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let norm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let tail = (k + 2..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>();
        if norm == 0.0 || tail == 0.0 {
            continue;
        }
        let alpha = a[(k + 1, k)];
        let phase = if alpha.norm() > 0.0 { alpha / alpha.norm() } else { Complex64::new(1.0, 0.0) };
        let beta = -phase * norm;
        for i in 0..len {
            v[i] = a[(k + 1 + i, k)];
        }
        v[0] -= beta;
        let vnorm2: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // left: rows k+1.., columns k+1..
        for x in s[k + 1..n].iter_mut() {
            *x = ZERO;
        }
        for i in 0..len {
            let vi = v[i].conj();
            let row = a.row(k + 1 + i);
            for j in k + 1..n {
                s[j] += vi * row[j];
            }
        }
        for i in 0..len {
            let vi = v[i] * tau;
            for j in k + 1..n {
                a[(k + 1 + i, j)] -= vi * s[j];
            }
        }
        a[(k + 1, k)] = beta;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }

        // right: all rows, columns k+1..
        apply_right(a, &v[..len], tau, k + 1);
        if let Some(q) = q.as_deref_mut() {
            apply_right(q, &v[..len], tau, k + 1);
        }
    }
}

/// `M ← M (I − τ v vᴴ)` acting on columns `offset..offset+v.len()`.
fn apply_right(m: &mut CMatrix, v: &[Complex64], tau: f64, offset: usize) {
    for r in 0..m.rows() {
        let dot: Complex64 = v.iter().enumerate().map(|(l, vl)| m[(r, offset + l)] * vl).sum();
        let dot = dot * tau;
        for (l, vl) in v.iter().enumerate() {
            m[(r, offset + l)] -= dot * vl.conj();
        }
    }
}

/// Unitary rotation `G = [[c, s], [−s̄, c]]` with `G·[a, b]ᵀ = [r, 0]ᵀ`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO, a);
    }
    let an = a.norm();
    let bn = b.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn, Complex64::new(bn, 0.0));
    }
    let r = an.hypot(bn);
    let phase = a / an;
    (an / r, phase * b.conj() / r, phase * r)
}

/// Complex Schur decomposition of an upper Hessenberg matrix by single-shift QR.
///
/// With `want_t` the full triangular factor is formed; otherwise only the
/// active window is updated, which is enough for eigenvalues. Returns the
/// number of QR sweeps.
pub(crate) fn hessenberg_qr(h: &mut CMatrix, mut z: Option<&mut CMatrix>, want_t: bool) -> Result<usize> {
    let n = h.rows();
    if n == 0 {
        return Ok(0);
    }
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = 30 * n.max(10);
    let mut sweeps = 0;

    let mut i = n - 1;
    loop {
        let mut l = 0;
        let mut deflated = false;
        for its in 0..=itmax {
            // look for a negligible subdiagonal entry
            let mut k = i;
            while k > 0 {
                let sub = h[(k, k - 1)];
                if cabs1(sub) <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[(k - 1, k - 1)]) + cabs1(h[(k, k)]);
                if tst == 0.0 {
                    if k >= 2 {
                        tst += cabs1(h[(k - 1, k - 2)]);
                    }
                    if k + 1 < n {
                        tst += cabs1(h[(k + 1, k)]);
                    }
                }
                if cabs1(sub) <= ulp * tst {
                    let ab = cabs1(sub).max(cabs1(h[(k - 1, k)]));
                    let ba = cabs1(sub).min(cabs1(h[(k - 1, k)]));
                    let diff = h[(k - 1, k - 1)] - h[(k, k)];
                    let aa = cabs1(h[(k, k)]).max(cabs1(diff));
                    let bb = cabs1(h[(k, k)]).min(cabs1(diff));
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = ZERO;
            }
            if l >= i {
                deflated = true;
                break;
            }

            let shift = if its == 10 {
                Complex64::new(0.75 * cabs1(h[(l + 1, l)]), 0.0) + h[(l, l)]
            } else if its == 20 {
                Complex64::new(0.75 * cabs1(h[(i, i - 1)]), 0.0) + h[(i, i)]
            } else {
                wilkinson_shift(h[(i - 1, i - 1)], h[(i - 1, i)], h[(i, i - 1)], h[(i, i)])
            };

            let (i1, i2) = if want_t { (0, n - 1) } else { (l, i) };
            for k in l..i {
                let (a, b) = if k == l {
                    (h[(l, l)] - shift, h[(l + 1, l)])
                } else {
                    (h[(k, k - 1)], h[(k + 1, k - 1)])
                };
                let (c, s, r) = givens(a, b);
                if k > l {
                    h[(k, k - 1)] = r;
                    h[(k + 1, k - 1)] = ZERO;
                }
                let sc = s.conj();
                for j in k..=i2 {
                    let x = h[(k, j)];
                    let y = h[(k + 1, j)];
                    h[(k, j)] = x * c + s * y;
                    h[(k + 1, j)] = y * c - sc * x;
                }
                for r in i1..=(k + 2).min(i) {
                    let x = h[(r, k)];
                    let y = h[(r, k + 1)];
                    h[(r, k)] = x * c + y * sc;
                    h[(r, k + 1)] = y * c - x * s;
                }
                if let Some(z) = z.as_deref_mut() {
                    for r in 0..n {
                        let x = z[(r, k)];
                        let y = z[(r, k + 1)];
                        z[(r, k)] = x * c + y * sc;
                        z[(r, k + 1)] = y * c - x * s;
                    }
                }
            }
            sweeps += 1;
        }
        if !deflated {
            return Err(Error::NoConvergence { iterations: sweeps });
        }
        if l == 0 {
            break;
        }
        i = l - 1;
    }
    Ok(sweeps)
}

/// Eigenvalue of the trailing 2×2 block closer to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let mut t = d;
    let u = b.sqrt() * c.sqrt();
    let mut s = cabs1(u);
    if s != 0.0 {
        let x = (a - d) * 0.5;
        let sx = cabs1(x);
        s = s.max(sx);
        let xs = x / s;
        let us = u / s;
        let mut y = (xs * xs + us * us).sqrt() * s;
        if sx > 0.0 && (x.re / sx) * y.re + (x.im / sx) * y.im < 0.0 {
            y = -y;
        }
        t -= u * (u / (x + y));
    }
    t
}

/// Right eigenvectors of an upper triangular matrix, `x_k` with `x_k[k] = 1`.
pub(crate) fn triangular_eigenvectors(t: &CMatrix) -> Vec<Vec<Complex64>> {
    let n = t.rows();
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let smin = (ulp * cabs1(lambda)).max(smlnum);
            let mut x = vec![ZERO; k + 1];
            x[k] = Complex64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let row = t.row(j);
                let sum: Complex64 = (j + 1..=k).map(|l| row[l] * x[l]).sum();
                let mut d = row[j] - lambda;
                if cabs1(d) < smin {
                    d = Complex64::new(smin, 0.0);
                }
                x[j] = -sum / d;
                let big = x[j].norm();
                if big > 1e100 {
                    for v in x.iter_mut() {
                        *v /= big;
                    }
                }
            }
            x
        })
        .collect()
}
