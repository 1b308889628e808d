//! Real polynomials stored as coefficient vectors in descending powers of `s`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eigen;
use crate::error::Result;

/// Drop leading exact zeros. An all-zero polynomial collapses to `[0.0]`.
pub fn strip(p: &[f64]) -> Vec<f64> {
    match p.iter().position(|c| *c != 0.0) {
        Some(i) => p[i..].to_vec(),
        None => vec![0.0],
    }
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|c| *c == 0.0)
}

/// Degree after stripping; the zero polynomial reports degree 0.
pub fn degree(p: &[f64]) -> usize {
    strip(p).len() - 1
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (k, x) in a.iter().rev().enumerate() {
        out[n - 1 - k] += x;
    }
    for (k, y) in b.iter().rev().enumerate() {
        out[n - 1 - k] += y;
    }
    out
}

pub fn scale(p: &[f64], k: f64) -> Vec<f64> {
    p.iter().map(|c| c * k).collect()
}

pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, c| acc * x + c)
}

pub fn eval_complex(p: &[f64], z: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + Complex64::new(*c, 0.0))
}

fn derivative(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    if n <= 1 {
        return vec![0.0];
    }
    p[..n - 1].iter().enumerate().map(|(i, c)| c * (n - 1 - i) as f64).collect()
}

/// Monic polynomial with the given roots. Conjugate pairs produce real
/// coefficients up to rounding, so imaginary residue is discarded.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    acc.into_iter().map(|c| c.re).collect()
}

/// Roots via the companion matrix, followed by guarded Newton polishing.
/// Result sorted by (Re, Im).
pub fn roots(p: &[f64]) -> Result<Vec<Complex64>> {
    let p = strip(p);
    if p.len() <= 1 {
        return Ok(Vec::new());
    }
    // Trailing zeros are exact roots at the origin.
    let zeros_at_origin = p.iter().rev().take_while(|c| **c == 0.0).count();
    let core = &p[..p.len() - zeros_at_origin];
    let mut out = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    let n = core.len() - 1;
    if n > 0 {
        let lead = core[0];
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -core[j + 1] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        let raw = eigen::eigenvalues(&comp)?;
        let dp = derivative(core);
        for z in raw {
            out.push(polish(core, &dp, z));
        }
    }
    eigen::sort_complex(&mut out);
    Ok(out)
}

fn polish(p: &[f64], dp: &[f64], mut z: Complex64) -> Complex64 {
    let was_real = z.im == 0.0;
    let mut fz = eval_complex(p, z).norm();
    for _ in 0..8 {
        let d = eval_complex(dp, z);
        if d.norm() == 0.0 {
            break;
        }
        let mut cand = z - eval_complex(p, z) / d;
        if was_real {
            cand.im = 0.0;
        }
        let fc = eval_complex(p, cand).norm();
        if !(fc < fz) {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_and_degree() {
        assert_eq!(strip(&[0.0, 0.0, 1.0, 3.0]), vec![1.0, 3.0]);
        assert_eq!(strip(&[0.0, 0.0]), vec![0.0]);
        assert_eq!(degree(&[0.0, 2.0, 1.0, 0.0]), 2);
    }

    #[test]
    fn arithmetic() {
        assert_eq!(mul(&[1.0, 1.0], &[1.0, 2.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(add(&[1.0, 0.0, 0.0], &[2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(eval(&[1.0, -2.0, -3.0], 3.0), 0.0);
    }

    #[test]
    fn roots_of_factored_quadratic() {
        let r = roots(&[1.0, -2.0, -3.0]).unwrap();
        assert!((r[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_at_origin_are_exact() {
        let r = roots(&[1.0, 2.0, 0.0]).unwrap();
        assert_eq!(r[1], Complex64::new(0.0, 0.0));
        assert!((r[0] + 2.0).norm() < 1e-12);
    }

    #[test]
    fn from_roots_inverts_roots() {
        let p = [2.0, 3.0, 4.0, 20.0, 5.0];
        let r = roots(&p).unwrap();
        let q = scale(&from_roots(&r), p[0]);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-9, "{p:?} vs {q:?}");
        }
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(roots(&[5.0]).unwrap().is_empty());
        assert!(roots(&[0.0, 0.0, 5.0]).unwrap().is_empty());
    }
}
