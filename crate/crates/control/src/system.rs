//! Transfer-function and state-space representations and the conversions
//! between them.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ControlError, Result};
use crate::format::{fmt_num, fmt_poly};
use crate::poly;

/// Desk-scale bound on state order. Kronecker Lyapunov solves are n² × n².
pub const MAX_ORDER: usize = 8;

/// SISO rational transfer function, coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunction {
    /// Build a proper transfer function. Leading zeros are stripped from both
    /// polynomials; coefficients are otherwise kept as given.
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(ControlError::NonFinite("transfer function coefficients"));
        }
        if den.is_empty() || poly::is_zero(den) {
            return Err(ControlError::DegenerateSystem);
        }
        let num = if num.is_empty() { vec![0.0] } else { poly::strip(num) };
        let den = poly::strip(den);
        let (nd, dd) = (num.len() - 1, den.len() - 1);
        if !poly::is_zero(&num) && nd > dd {
            return Err(ControlError::ImproperSystem { num_degree: nd, den_degree: dd });
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// Same rational function with a monic denominator.
    pub fn normalized(&self) -> Self {
        let lead = self.den[0];
        Self { num: poly::scale(&self.num, 1.0 / lead), den: poly::scale(&self.den, 1.0 / lead) }
    }

    /// Numerator padded with leading zeros to the denominator length.
    pub fn padded_num(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.den.len() - self.num.len().min(self.den.len())];
        out.extend_from_slice(&self.num);
        out
    }

    pub fn eval(&self, s: num_complex::Complex64) -> num_complex::Complex64 {
        poly::eval_complex(&self.num, s) / poly::eval_complex(&self.den, s)
    }
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = fmt_poly(&self.num);
        let d = fmt_poly(&self.den);
        let width = n.len().max(d.len());
        writeln!(f, "{n:^width$}")?;
        writeln!(f, "{}", "-".repeat(width))?;
        write!(f, "{d:^width$}")
    }
}

/// Continuous-time state-space model `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    /// Validate dimensions and store the matrices verbatim.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ControlError::Shape(format!("A must be square, got {}x{}", n, a.ncols())));
        }
        if n > MAX_ORDER {
            return Err(ControlError::OrderTooLarge { order: n, max: MAX_ORDER });
        }
        let m = d.ncols();
        let p = d.nrows();
        if b.nrows() != n {
            return Err(ControlError::Shape(format!(
                "B must have {n} rows to match A, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.ncols() != n {
            return Err(ControlError::Shape(format!(
                "C must have {n} columns to match A, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        if n > 0 && (b.ncols() != m || c.nrows() != p) {
            return Err(ControlError::Shape(format!(
                "D must be {}x{} (outputs x inputs), got {}x{}",
                c.nrows(),
                b.ncols(),
                p,
                m
            )));
        }
        if p == 0 || m == 0 {
            return Err(ControlError::Shape("D must have at least one row and column".into()));
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(ControlError::NonFinite(match name {
                    "A" => "A",
                    "B" => "B",
                    "C" => "C",
                    _ => "D",
                }));
            }
        }
        // Zero-state models carry empty B/C with the right inner dimensions.
        let b = if n == 0 { DMatrix::zeros(0, m) } else { b };
        let c = if n == 0 { DMatrix::zeros(p, 0) } else { c };
        Ok(Self { a, b, c, d })
    }

    /// Build from row-major nested vectors, the shape tool arguments arrive in.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>], c: &[Vec<f64>], d: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            matrix_from_rows("A", a)?,
            matrix_from_rows("B", b)?,
            matrix_from_rows("C", c)?,
            matrix_from_rows("D", d)?,
        )
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.d.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "A = {}", fmt_matrix(&self.a))?;
        writeln!(f, "B = {}", fmt_matrix(&self.b))?;
        writeln!(f, "C = {}", fmt_matrix(&self.c))?;
        write!(f, "D = {}", fmt_matrix(&self.d))
    }
}

/// Matrix literal in the nested-list form the action-input grammar accepts.
pub fn fmt_matrix(m: &DMatrix<f64>) -> String {
    if m.nrows() == 0 || m.ncols() == 0 {
        return "[]".into();
    }
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cells: Vec<String> = (0..m.ncols()).map(|j| fmt_num(m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Row-major nested vectors to a matrix. An empty outer list is a 0x0 matrix.
pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() || rows.iter().all(|r| r.is_empty()) {
        return Ok(DMatrix::zeros(0, 0));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ControlError::Shape(format!("{name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// A plant in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearSystem {
    Tf(TransferFunction),
    Ss(StateSpace),
}

impl LinearSystem {
    pub fn order(&self) -> usize {
        match self {
            LinearSystem::Tf(tf) => tf.order(),
            LinearSystem::Ss(ss) => ss.order(),
        }
    }

    pub fn to_tf(&self) -> Result<TransferFunction> {
        match self {
            LinearSystem::Tf(tf) => Ok(tf.clone()),
            LinearSystem::Ss(ss) => ss_to_tf(ss),
        }
    }

    pub fn to_ss(&self) -> Result<StateSpace> {
        match self {
            LinearSystem::Tf(tf) => tf_to_ss(tf),
            LinearSystem::Ss(ss) => Ok(ss.clone()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LinearSystem::Tf(_) => "TF",
            LinearSystem::Ss(_) => "SS",
        }
    }
}

impl From<TransferFunction> for LinearSystem {
    fn from(tf: TransferFunction) -> Self {
        LinearSystem::Tf(tf)
    }
}

impl From<StateSpace> for LinearSystem {
    fn from(ss: StateSpace) -> Self {
        LinearSystem::Ss(ss)
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearSystem::Tf(tf) => tf.fmt(f),
            LinearSystem::Ss(ss) => ss.fmt(f),
        }
    }
}

pub fn make_tf(num: &[f64], den: &[f64]) -> Result<TransferFunction> {
    TransferFunction::new(num, den)
}

pub fn make_ss(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<StateSpace> {
    StateSpace::new(a, b, c, d)
}

/// Controllable-canonical realization: first row of A carries the negated
/// monic denominator coefficients, B = e1, C the strictly proper numerator.
pub fn tf_to_ss(tf: &TransferFunction) -> Result<StateSpace> {
    let n = tf.order();
    if n > MAX_ORDER {
        return Err(ControlError::OrderTooLarge { order: n, max: MAX_ORDER });
    }
    let norm = tf.normalized();
    let den = norm.den();
    let num = norm.padded_num();
    let d0 = num[0];
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 1);
    let mut c = DMatrix::zeros(1, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
        c[(0, j)] = num[j + 1] - d0 * den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    if n > 0 {
        b[(0, 0)] = 1.0;
    }
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d0))
}

/// `C (sI - A)^-1 B + D` by Faddeev–LeVerrier: the characteristic polynomial
/// and the adjugate coefficients come out of the same recursion.
pub fn ss_to_tf(ss: &StateSpace) -> Result<TransferFunction> {
    if !ss.is_siso() {
        return Err(ControlError::UnsupportedShape(format!(
            "ss_to_tf needs a SISO model, got {} outputs x {} inputs",
            ss.outputs(),
            ss.inputs()
        )));
    }
    let n = ss.order();
    let d = ss.d[(0, 0)];
    if n == 0 {
        return TransferFunction::new(&[d], &[1.0]);
    }
    let a = &ss.a;
    let mut charpoly = vec![1.0; n + 1];
    let mut adj_terms = Vec::with_capacity(n);
    let mut nk = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        adj_terms.push((&ss.c * &nk * &ss.b)[(0, 0)]);
        let an = a * &nk;
        let ck = -an.trace() / k as f64;
        charpoly[k] = ck;
        nk = an + DMatrix::identity(n, n) * ck;
    }
    let mut num = vec![0.0];
    num.extend(adj_terms);
    let num = poly::add(&num, &poly::scale(&charpoly, d));
    TransferFunction::new(&num, &charpoly)
}
