//! Real root isolation for dense polynomials on a bounded interval.
//!
//! Roots of `p` are isolated by splitting the interval at the roots of `p'`
//! (found recursively); on each piece `p` is monotone, so a sign change
//! brackets exactly one root which is then refined by bisection.

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Magnitude of the terms summed when evaluating at `x`; used to decide
/// whether a value is indistinguishable from zero.
fn term_scale(coeffs: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
}

fn trimmed(coeffs: &[f64]) -> &[f64] {
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1] == 0.0 {
        len -= 1;
    }
    &coeffs[..len]
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = horner(coeffs, lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = horner(coeffs, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const ZERO_REL: f64 = 1e-12;

fn near_zero(coeffs: &[f64], x: f64) -> bool {
    horner(coeffs, x).abs() <= ZERO_REL * term_scale(coeffs, x)
}

/// All real roots of `coeffs` in the half-open interval `(lo, hi]`, sorted,
/// each refined to absolute tolerance `tol`; roots closer than `tol` are
/// merged. Tangential (even-multiplicity) roots are reported once.
///
/// The zero polynomial has no isolated roots and yields an empty list.
pub(crate) fn real_roots(coeffs: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let coeffs = trimmed(coeffs);
    let mut roots = match coeffs.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -coeffs[0] / coeffs[1];
            if r > lo && r <= hi {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let critical = real_roots(&derivative(coeffs), lo, hi, tol);
            let mut out = Vec::new();
            let mut points = Vec::with_capacity(critical.len() + 2);
            points.push(lo);
            points.extend(critical.iter().copied().filter(|&c| c > lo && c < hi));
            points.push(hi);
            for w in points.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let fa = horner(coeffs, a);
                let fb = horner(coeffs, b);
                if fa == 0.0 && a > lo {
                    out.push(a);
                }
                if fb == 0.0 {
                    out.push(b);
                } else if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
                    out.push(bisect(coeffs, a, b, tol));
                }
            }
            // A local extremum that touches zero without crossing it.
            for &c in &critical {
                if c > lo && c <= hi && near_zero(coeffs, c) {
                    out.push(c);
                }
            }
            out
        }
    };
    roots.sort_by(f64::total_cmp);
    coalesce(&mut roots, tol);
    roots
}

fn coalesce(roots: &mut Vec<f64>, tol: f64) {
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for &r in roots.iter() {
        match merged.last() {
            Some(&last) if r - last <= tol => {}
            _ => merged.push(r),
        }
    }
    *roots = merged;
}
