//! State-feedback design (Ackermann, LQR) and block-diagram algebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{controllability_matrix, numerical_rank, EPS_AXIS};
use crate::eigen;
use crate::error::{ControlError, Result};
use crate::poly;
use crate::system::{StateSpace, TransferFunction, MAX_ORDER};

const NK_MAX_ITER: usize = 100;

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(ControlError::Shape(format!("A must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    if b.nrows() != n {
        return Err(ControlError::Shape(format!("B must have {} rows to match A, got {}x{}", n, b.nrows(), b.ncols())));
    }
    if n == 0 {
        return Err(ControlError::Shape("A is empty".into()));
    }
    if n > MAX_ORDER {
        return Err(ControlError::OrderTooLarge { order: n, max: MAX_ORDER });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(ControlError::NonFinite("A or B"));
    }
    Ok(n)
}

/// Complex entries must come in conjugate pairs so the gain is real.
fn check_conjugate_pairs(poles: &[Complex64]) -> Result<()> {
    let scale = poles.iter().fold(1.0f64, |m, p| m.max(p.norm()));
    let tol = 1e-9 * scale;
    let mut used = vec![false; poles.len()];
    for i in 0..poles.len() {
        if used[i] || poles[i].im.abs() <= tol {
            continue;
        }
        used[i] = true;
        let partner = (0..poles.len()).find(|&j| !used[j] && (poles[j] - poles[i].conj()).norm() <= tol);
        match partner {
            Some(j) => used[j] = true,
            None => {
                return Err(ControlError::BadPoleSet(format!(
                    "complex pole {} has no conjugate partner",
                    crate::format::fmt_complex(poles[i])
                )))
            }
        }
    }
    Ok(())
}

/// Ackermann's formula `K = e_n^T Ctrb^{-1} phi(A)` for single-input pairs.
pub fn acker(a: &DMatrix<f64>, b: &DMatrix<f64>, poles: &[Complex64]) -> Result<DMatrix<f64>> {
    let n = check_pair(a, b)?;
    if b.ncols() != 1 {
        return Err(ControlError::UnsupportedShape(format!(
            "Ackermann's formula needs a single input, B has {} columns",
            b.ncols()
        )));
    }
    if poles.len() != n {
        return Err(ControlError::BadPoleSet(format!("expected {n} poles, got {}", poles.len())));
    }
    if poles.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(ControlError::NonFinite("desired poles"));
    }
    check_conjugate_pairs(poles)?;
    let (ctrb, rank) = controllability_matrix(a, b)?;
    if rank < n {
        return Err(ControlError::Uncontrollable { rank, order: n });
    }
    // phi(A) by Horner over the monic characteristic polynomial.
    let coeffs = poly::from_roots(poles);
    let mut phi = DMatrix::<f64>::zeros(n, n);
    for c in &coeffs {
        phi = &phi * a + DMatrix::<f64>::identity(n, n) * *c;
    }
    let mut e_n = DVector::<f64>::zeros(n);
    e_n[n - 1] = 1.0;
    let row = ctrb.transpose().lu().solve(&e_n).ok_or(ControlError::SingularMatrix("controllability matrix"))?;
    let k = row.transpose() * phi;
    Ok(DMatrix::from_iterator(1, n, k.iter().copied()))
}

/// Pole placement. Single-input pairs use Ackermann's formula.
pub fn place(a: &DMatrix<f64>, b: &DMatrix<f64>, poles: &[Complex64]) -> Result<DMatrix<f64>> {
    check_pair(a, b)?;
    if b.ncols() != 1 {
        return Err(ControlError::UnsupportedShape(format!(
            "multi-input pole placement is not supported (B has {} columns)",
            b.ncols()
        )));
    }
    acker(a, b, poles)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrSolution {
    pub k: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// Closed-loop eigenvalues of `A - B K`, sorted.
    pub e: Vec<Complex64>,
    pub iterations: usize,
}

/// Solve the Lyapunov equation `F^T X + X F = -W` by Kronecker vectorization.
fn lyapunov(f: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let ft = f.transpose();
    let big = eye.kronecker(&ft) + ft.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, w.iter().map(|v| -v));
    let x = big.lu().solve(&rhs).ok_or(ControlError::SingularMatrix("Lyapunov operator"))?;
    Ok(DMatrix::from_iterator(n, n, x.iter().copied()))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn check_weights(n: usize, m: usize, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<()> {
    if q.shape() != (n, n) {
        return Err(ControlError::Shape(format!("Q must be {n}x{n}, got {}x{}", q.nrows(), q.ncols())));
    }
    if r.shape() != (m, m) {
        return Err(ControlError::Shape(format!("R must be {m}x{m}, got {}x{}", r.nrows(), r.ncols())));
    }
    if q.iter().chain(r.iter()).any(|v| !v.is_finite()) {
        return Err(ControlError::NonFinite("Q or R"));
    }
    let qs = q.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if (q - q.transpose()).amax() > 1e-9 * qs {
        return Err(ControlError::InvalidWeight("Q is not symmetric".into()));
    }
    let qe = SymmetricEigen::new(symmetrize(q)).eigenvalues;
    if qe.iter().any(|l| *l < -1e-10 * qs) {
        return Err(ControlError::InvalidWeight("Q is not positive semidefinite".into()));
    }
    let rs = r.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if (r - r.transpose()).amax() > 1e-9 * rs {
        return Err(ControlError::SingularWeight);
    }
    let re = SymmetricEigen::new(symmetrize(r)).eigenvalues;
    if re.iter().any(|l| *l <= 1e-12 * rs) {
        return Err(ControlError::SingularWeight);
    }
    Ok(())
}

/// PBH test: every eigenvalue with `Re >= 0` must satisfy
/// `rank [lambda I - A, B] = n`. The complex rank is read off a real
/// 2n x 2(n+m) embedding.
pub fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    let n = check_pair(a, b)?;
    let m = b.ncols();
    for lam in eigen::eigenvalues(a)? {
        if lam.re < -EPS_AXIS {
            continue;
        }
        let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * (n + m));
        for i in 0..n {
            for j in 0..n {
                let re = if i == j { lam.re } else { 0.0 } - a[(i, j)];
                let im = if i == j { lam.im } else { 0.0 };
                emb[(i, j)] = re;
                emb[(i, n + m + j)] = -im;
                emb[(n + i, j)] = im;
                emb[(n + i, n + m + j)] = re;
            }
            for j in 0..m {
                emb[(i, n + j)] = b[(i, j)];
                emb[(n + i, n + m + n + j)] = b[(i, j)];
            }
        }
        if numerical_rank(&emb) < 2 * n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bass's construction on a controllable pair: with `F = A + beta I`,
/// `F P + P F^T = 2 B B^T` and `K = B^T P^{-1}` gives `A - B K` Hurwitz.
fn bass_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let beta = 1.0 + eigen::eigenvalues(a)?.iter().fold(0.0f64, |m, l| m.max(l.re.abs()));
    let f = a + DMatrix::<f64>::identity(n, n) * beta;
    // with G = -F^T: G^T P + P G = -2BB^T
    let p = lyapunov(&(-f.transpose()), &(b * b.transpose() * 2.0))?;
    let p_inv = symmetrize(&p).try_inverse().ok_or(ControlError::SingularMatrix("Bass Gramian"))?;
    Ok(b.transpose() * p_inv)
}

/// Stabilizing initial gain for Newton–Kleinman.
fn initial_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    if eigen::eigenvalues(a)?.iter().all(|l| l.re < -EPS_AXIS) {
        return Ok(DMatrix::zeros(m, n));
    }
    if !is_stabilizable(a, b)? {
        return Err(ControlError::Unstabilizable);
    }
    let (ctrb, rank) = controllability_matrix(a, b)?;
    if rank == n {
        if m == 1 {
            let targets: Vec<Complex64> = (1..=n).map(|k| Complex64::new(-(k as f64), 0.0)).collect();
            return acker(a, b, &targets);
        }
        return bass_gain(a, b);
    }
    // Stabilizable but not controllable: stabilize the controllable block of
    // an orthogonal Kalman decomposition; the rest is already stable.
    let svd = ctrb.svd(true, false);
    let u = svd.u.ok_or(ControlError::SingularMatrix("controllability SVD"))?;
    let mut order: Vec<usize> = (0..u.ncols()).collect();
    let sv = &svd.singular_values;
    order.sort_by(|i, j| sv[*j].partial_cmp(&sv[*i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut basis = DMatrix::<f64>::zeros(n, n);
    for (k, idx) in order.iter().take(n).enumerate() {
        basis.set_column(k, &u.column(*idx));
    }
    let at = basis.transpose() * a * &basis;
    let bt = basis.transpose() * b;
    let a11 = at.view((0, 0), (rank, rank)).into_owned();
    let b1 = bt.view((0, 0), (rank, m)).into_owned();
    let k1 = if rank == 0 { DMatrix::zeros(m, 0) } else { bass_gain(&a11, &b1)? };
    let mut kt = DMatrix::<f64>::zeros(m, n);
    kt.view_mut((0, 0), (m, rank)).copy_from(&k1);
    Ok(kt * basis.transpose())
}

/// Frobenius norm of `A^T S + S A - S B R^{-1} B^T S + Q`.
pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    let r_inv = r.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(r.nrows(), r.ncols(), f64::NAN));
    (a.transpose() * s + s * a - s * b * r_inv * b.transpose() * s + q).norm()
}

/// Continuous-time LQR by Newton–Kleinman iteration.
pub fn lqr(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqrSolution> {
    let n = check_pair(a, b)?;
    let m = b.ncols();
    if m == 0 {
        return Err(ControlError::Shape("B has no columns".into()));
    }
    check_weights(n, m, q, r)?;
    let r_inv = r.clone().try_inverse().ok_or(ControlError::SingularWeight)?;
    let mut k = initial_gain(a, b)?;
    let mut s_prev: Option<DMatrix<f64>> = None;
    // Rounding floors the residual on badly scaled problems; once the
    // quadratic phase is over, keep the best iterate and stop on stagnation.
    let mut best: Option<(f64, DMatrix<f64>, usize)> = None;
    let mut since_best = 0;
    for it in 1..=NK_MAX_ITER {
        let acl = a - b * &k;
        let w = q + k.transpose() * r * &k;
        let s = symmetrize(&lyapunov(&acl, &w)?);
        let res = care_residual(a, b, q, r, &s);
        let settled = match &s_prev {
            Some(p) => (&s - p).norm() <= 1e-13 * s.norm().max(1.0),
            None => false,
        };
        if best.as_ref().is_none_or(|(r0, _, _)| res < *r0) {
            best = Some((res, s.clone(), it));
            since_best = 0;
        } else {
            since_best += 1;
        }
        k = &r_inv * b.transpose() * &s;
        if settled || since_best >= 5 {
            let (_, s, it) = best.take().expect("best iterate recorded");
            return finish_lqr(a, b, &r_inv, s, it);
        }
        s_prev = Some(s);
    }
    Err(ControlError::NoConvergence(format!("Newton-Kleinman did not settle in {NK_MAX_ITER} iterations")))
}

fn finish_lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    s: DMatrix<f64>,
    iterations: usize,
) -> Result<LqrSolution> {
    let k = r_inv * b.transpose() * &s;
    let e = eigen::eigenvalues(&(a - b * &k))?;
    if e.iter().any(|l| l.re >= 0.0) {
        return Err(ControlError::Unstabilizable);
    }
    Ok(LqrSolution { k, s, e, iterations })
}

/// `(A - B K, B, C, D)`.
pub fn closed_loop_state_feedback(sys: &StateSpace, k: &DMatrix<f64>) -> Result<StateSpace> {
    let (n, m) = (sys.order(), sys.inputs());
    if k.shape() != (m, n) {
        return Err(ControlError::Shape(format!("K must be {m}x{n} for this system, got {}x{}", k.nrows(), k.ncols())));
    }
    StateSpace::new(&sys.a - &sys.b * k, sys.b.clone(), sys.c.clone(), sys.d.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interconnect {
    Series,
    Parallel,
    /// Negative feedback `g1 / (1 + g1 g2)`.
    Feedback,
}

/// Block-diagram algebra on SISO transfer functions. A missing `g2` is the
/// unity system. Common factors are not cancelled.
pub fn interconnect(
    kind: Interconnect,
    g1: &TransferFunction,
    g2: Option<&TransferFunction>,
) -> Result<TransferFunction> {
    let unity = TransferFunction::new(&[1.0], &[1.0])?;
    let g2 = g2.unwrap_or(&unity);
    let (n1, d1, n2, d2) = (g1.num(), g1.den(), g2.num(), g2.den());
    let (num, den) = match kind {
        Interconnect::Series => (poly::mul(n1, n2), poly::mul(d1, d2)),
        Interconnect::Parallel => (poly::add(&poly::mul(n1, d2), &poly::mul(n2, d1)), poly::mul(d1, d2)),
        Interconnect::Feedback => (poly::mul(n1, d2), poly::add(&poly::mul(d1, d2), &poly::mul(n1, n2))),
    };
    let out = TransferFunction::new(&num, &den)?;
    if out.order() > MAX_ORDER {
        return Err(ControlError::OrderTooLarge { order: out.order(), max: MAX_ORDER });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::make_tf;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
    }

    #[test]
    fn acker_examples() {
        let b = m(2, 1, &[0.0, 1.0]);
        let k = acker(&m(2, 2, &[0.0, 1.0, -2.0, -3.0]), &b, &real(&[-3.0, -4.0])).unwrap();
        assert!((k[(0, 0)] - 10.0).abs() < 1e-9 && (k[(0, 1)] - 4.0).abs() < 1e-9);
        let k = acker(&m(2, 2, &[0.0, 1.0, -12.0, -7.0]), &b, &real(&[-3.0, -4.0])).unwrap();
        assert!(k.amax() < 1e-9);
        let k = place(&m(2, 2, &[0.0, 1.0, 0.0, 0.0]), &b, &real(&[-1.0, -1.0])).unwrap();
        assert!((k[(0, 0)] - 1.0).abs() < 1e-9 && (k[(0, 1)] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn acker_errors() {
        let a = m(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let err = acker(&a, &m(2, 1, &[1.0, 1.0]), &real(&[-1.0, -2.0])).unwrap_err();
        assert_eq!(err, ControlError::Uncontrollable { rank: 1, order: 2 });
        let b = m(2, 1, &[0.0, 1.0]);
        let a = m(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let lone = [Complex64::new(-1.0, 1.0), Complex64::new(-2.0, 0.0)];
        assert!(matches!(acker(&a, &b, &lone), Err(ControlError::BadPoleSet(_))));
        let pair = [Complex64::new(-1.0, 1.0), Complex64::new(-1.0, -1.0)];
        let k = acker(&a, &b, &pair).unwrap();
        let mut e = eigen::eigenvalues(&(&a - &b * k)).unwrap();
        eigen::sort_complex(&mut e);
        assert!((e[0] - pair[1]).norm() < 1e-9);
        assert!(matches!(
            place(&a, &DMatrix::identity(2, 2), &real(&[-1.0, -2.0])),
            Err(ControlError::UnsupportedShape(_))
        ));
    }

    #[test]
    fn lqr_scalar() {
        let one = m(1, 1, &[1.0]);
        let sol = lqr(&m(1, 1, &[0.0]), &one, &one, &one).unwrap();
        assert!((sol.s[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.k[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.e[0] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn lqr_weight_errors() {
        let a = m(2, 2, &[2.0, 3.0, 1.0, 0.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let q = DMatrix::identity(2, 2);
        assert_eq!(lqr(&a, &b, &q, &m(1, 1, &[0.0])).unwrap_err(), ControlError::SingularWeight);
        assert!(matches!(
            lqr(&a, &b, &m(2, 2, &[1.0, 0.0, 0.0, -1.0]), &m(1, 1, &[1.0])),
            Err(ControlError::InvalidWeight(_))
        ));
    }

    #[test]
    fn lqr_unstabilizable() {
        let a = m(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let err = lqr(&a, &b, &DMatrix::identity(2, 2), &m(1, 1, &[1.0])).unwrap_err();
        assert_eq!(err, ControlError::Unstabilizable);
    }

    #[test]
    fn lqr_stabilizable_but_uncontrollable() {
        let a = m(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let sol = lqr(&a, &b, &DMatrix::identity(2, 2), &m(1, 1, &[1.0])).unwrap();
        assert!(sol.e.iter().all(|l| l.re < 0.0));
        let res = care_residual(&a, &b, &DMatrix::identity(2, 2), &m(1, 1, &[1.0]), &sol.s);
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn lqr_multi_input() {
        let a = m(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let b = DMatrix::identity(2, 2);
        let q = DMatrix::identity(2, 2);
        let sol = lqr(&a, &b, &q, &DMatrix::identity(2, 2)).unwrap();
        assert!(care_residual(&a, &b, &q, &DMatrix::identity(2, 2), &sol.s) < 1e-8);
    }

    #[test]
    fn interconnect_examples() {
        let g1 = make_tf(&[1.0], &[1.0, 1.0]).unwrap();
        let g2 = make_tf(&[1.0], &[1.0, 2.0]).unwrap();
        let s = interconnect(Interconnect::Series, &g1, Some(&g2)).unwrap();
        assert_eq!(s.den(), &[1.0, 3.0, 2.0]);
        assert_eq!(s.num(), &[1.0]);
        let k = 5.0;
        let f = interconnect(Interconnect::Feedback, &make_tf(&[k], &[1.0, 0.0]).unwrap(), None).unwrap();
        assert_eq!(f.num(), &[k]);
        assert_eq!(f.den(), &[1.0, k]);
        assert_eq!(interconnect(Interconnect::Series, &g1, None).unwrap(), g1);
        let p = interconnect(Interconnect::Parallel, &g1, Some(&g2)).unwrap();
        assert_eq!(p.num(), &[2.0, 3.0]);
    }

    #[test]
    fn closed_loop_shape_check() {
        let ss = StateSpace::from_rows(
            &[vec![2.0, 3.0], vec![1.0, 0.0]],
            &[vec![1.0], vec![0.0]],
            &[vec![1.0, 3.0]],
            &[vec![0.0]],
        )
        .unwrap();
        let cl = closed_loop_state_feedback(&ss, &m(1, 2, &[6.16, 6.16])).unwrap();
        assert!((cl.a[(0, 0)] + 4.16).abs() < 1e-12);
        assert!((cl.a[(0, 1)] + 3.16).abs() < 1e-12);
        assert!(matches!(closed_loop_state_feedback(&ss, &m(1, 3, &[0.0; 3])), Err(ControlError::Shape(_))));
    }
}
