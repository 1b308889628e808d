//! Poles, zeros, stability, DC gain and controllability.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{ControlError, Result};
use crate::poly;
use crate::system::{LinearSystem, TransferFunction};

/// Real-part band treated as the imaginary axis.
pub const EPS_AXIS: f64 = 1e-9;

pub fn poles(sys: &LinearSystem) -> Result<Vec<Complex64>> {
    match sys {
        LinearSystem::Tf(tf) => poly::roots(tf.den()),
        LinearSystem::Ss(ss) => eigen::eigenvalues(&ss.a),
    }
}

/// Transmission zeros of a SISO model: numerator roots.
pub fn zeros(sys: &LinearSystem) -> Result<Vec<Complex64>> {
    let tf = siso_tf(sys)?;
    if poly::is_zero(tf.num()) {
        return Ok(Vec::new());
    }
    poly::roots(tf.num())
}

fn siso_tf(sys: &LinearSystem) -> Result<TransferFunction> {
    match sys {
        LinearSystem::Tf(tf) => Ok(tf.clone()),
        LinearSystem::Ss(ss) if ss.is_siso() => crate::system::ss_to_tf(ss),
        LinearSystem::Ss(ss) => Err(ControlError::UnsupportedShape(format!(
            "expected a SISO model, got {} outputs x {} inputs",
            ss.outputs(),
            ss.inputs()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub is_stable: bool,
    pub rhp_pole_count: usize,
    /// A pole sits on the imaginary axis (within [`EPS_AXIS`]).
    pub marginal: bool,
    pub poles: Vec<Complex64>,
    /// Right-half-plane root count from the Routh array, for TF inputs.
    pub routh_rhp_count: Option<usize>,
}

pub fn is_stable(sys: &LinearSystem) -> Result<StabilityReport> {
    let poles = poles(sys)?;
    let rhp_pole_count = poles.iter().filter(|p| p.re > EPS_AXIS).count();
    let marginal = poles.iter().any(|p| p.re.abs() <= EPS_AXIS);
    let routh_rhp_count = match sys {
        LinearSystem::Tf(tf) => Some(routh_rhp_count(tf.den())),
        LinearSystem::Ss(_) => None,
    };
    Ok(StabilityReport {
        is_stable: rhp_pole_count == 0 && !marginal,
        rhp_pole_count,
        marginal,
        poles,
        routh_rhp_count,
    })
}

/// Number of first-column sign changes in the Routh array of `p`.
///
/// A zero pivot is replaced by a small positive epsilon; an all-zero row is
/// replaced by the derivative of the auxiliary polynomial above it.
pub fn routh_rhp_count(p: &[f64]) -> usize {
    let p = poly::strip(p);
    let n = p.len() - 1;
    if n == 0 {
        return 0;
    }
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-9 * scale.max(1.0);
    let width = n / 2 + 1;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut r0 = vec![0.0; width];
    let mut r1 = vec![0.0; width];
    for (i, c) in p.iter().enumerate() {
        if i % 2 == 0 {
            r0[i / 2] = *c;
        } else {
            r1[i / 2] = *c;
        }
    }
    rows.push(r0);
    rows.push(r1);
    for k in 2..=n {
        let prev = &rows[k - 1];
        if prev.iter().all(|v| v.abs() <= eps * 1e-3) {
            // auxiliary polynomial from row k-2, power n-(k-2)
            let above = &rows[k - 2];
            let power = n - (k - 2);
            let mut deriv = vec![0.0; width];
            for (j, c) in above.iter().enumerate() {
                let pw = power as i64 - 2 * j as i64;
                if pw > 0 {
                    deriv[j] = c * pw as f64;
                }
            }
            rows[k - 1] = deriv;
        }
        if rows[k - 1][0].abs() <= eps * 1e-3 {
            rows[k - 1][0] = eps;
        }
        let (a, b) = (&rows[k - 2], &rows[k - 1]);
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (b[0] * a[j + 1] - a[0] * b[j + 1]) / b[0];
        }
        rows.push(next);
    }
    if rows[n][0].abs() <= eps * 1e-3 {
        rows[n][0] = eps;
    }
    rows.iter().map(|r| r[0]).collect::<Vec<_>>().windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DcGain {
    Finite(f64),
    /// Pole at the origin.
    Infinite,
}

impl DcGain {
    pub fn value(self) -> Option<f64> {
        match self {
            DcGain::Finite(v) => Some(v),
            DcGain::Infinite => None,
        }
    }
}

/// G(0) = num(0)/den(0).
pub fn dc_gain(sys: &LinearSystem) -> Result<DcGain> {
    let tf = siso_tf(sys)?;
    let den0 = *tf.den().last().expect("nonempty denominator");
    let num0 = *tf.num().last().expect("nonempty numerator");
    let scale = tf.den().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if den0.abs() <= 1e-12 * scale {
        return Ok(DcGain::Infinite);
    }
    Ok(DcGain::Finite(num0 / den0))
}

/// `[B, AB, ..., A^{n-1}B]` and its numerical rank.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(ControlError::Shape(format!(
            "controllability needs A n x n and B n x m, got A {}x{} and B {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let m = b.ncols();
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        ctrb.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    let rank = numerical_rank(&ctrb);
    Ok((ctrb, rank))
}

/// Singular values above `max(rows, cols) * eps * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |a, b| a.max(*b));
    if smax == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|s| **s > tol).count()
}
