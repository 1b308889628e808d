//! Time-domain simulation, frequency response and root-locus sweeps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, EPS_AXIS};
use crate::eigen;
use crate::error::{ControlError, Result};
use crate::poly;
use crate::system::{LinearSystem, StateSpace};

pub const DEFAULT_TIME_POINTS: usize = 500;
pub const DEFAULT_FREQ_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeResponseKind {
    Step,
    Impulse,
    Forced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeResponseData {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub kind: TimeResponseKind,
}

impl TimeResponseData {
    pub fn final_value(&self) -> f64 {
        *self.y.last().expect("at least two samples")
    }
}

/// Optional overrides for [`time_response`].
#[derive(Debug, Clone, Default)]
pub struct TimeGrid {
    pub horizon: Option<f64>,
    pub n_points: Option<usize>,
    /// Input samples on the grid, required for forced responses.
    pub u: Option<Vec<f64>>,
}

/// Default horizon: eight time constants of the slowest stable pole, clamped
/// to [1, 100]. Unstable or marginal systems use 5.
pub fn default_horizon(sys: &LinearSystem) -> Result<f64> {
    let poles = analysis::poles(sys)?;
    if poles.is_empty() {
        return Ok(1.0);
    }
    if poles.iter().any(|p| p.re >= -EPS_AXIS) {
        return Ok(5.0);
    }
    let slowest = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    Ok((8.0 / slowest.abs()).clamp(1.0, 100.0))
}

/// Simulate on a uniform grid with an exact zero-order-hold discretization:
/// `exp([[A, B], [0, 0]] dt)` yields the state and input transition blocks.
/// Impulse responses start from `x0 = B` with zero input; a direct
/// feedthrough impulse is not represented.
pub fn time_response(sys: &LinearSystem, kind: TimeResponseKind, grid: &TimeGrid) -> Result<TimeResponseData> {
    let ss = sys.to_ss()?;
    if !ss.is_siso() {
        return Err(ControlError::UnsupportedShape("time responses need a SISO model".into()));
    }
    let n_points = match (&grid.u, grid.n_points) {
        (Some(u), _) if kind == TimeResponseKind::Forced => u.len(),
        (_, Some(n)) => n,
        _ => DEFAULT_TIME_POINTS,
    };
    if n_points < 2 {
        return Err(ControlError::BadGrid(format!("need at least 2 grid points, got {n_points}")));
    }
    let horizon = match grid.horizon {
        Some(h) => h,
        None => default_horizon(sys)?,
    };
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(ControlError::BadGrid(format!("horizon must be positive, got {horizon}")));
    }
    let dt = horizon / (n_points - 1) as f64;
    let t: Vec<f64> = (0..n_points).map(|k| k as f64 * dt).collect();
    let u: Vec<f64> = match kind {
        TimeResponseKind::Step => vec![1.0; n_points],
        TimeResponseKind::Impulse => vec![0.0; n_points],
        TimeResponseKind::Forced => {
            let u =
                grid.u.clone().ok_or_else(|| ControlError::BadGrid("forced response needs input samples".into()))?;
            if u.iter().any(|v| !v.is_finite()) {
                return Err(ControlError::NonFinite("input samples"));
            }
            u
        }
    };
    let y = simulate_zoh(&ss, kind, dt, &u);
    Ok(TimeResponseData { t, y, u, kind })
}

fn simulate_zoh(ss: &StateSpace, kind: TimeResponseKind, dt: f64, u: &[f64]) -> Vec<f64> {
    let n = ss.order();
    let d = ss.d[(0, 0)];
    if n == 0 {
        return u.iter().map(|v| d * v).collect();
    }
    let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * dt));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&ss.b * dt));
    let e = aug.exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let gamma: DVector<f64> = e.view((0, n), (n, 1)).column(0).into_owned();
    let c = ss.c.row(0).transpose();
    let mut x: DVector<f64> = match kind {
        TimeResponseKind::Impulse => ss.b.column(0).into_owned(),
        _ => DVector::zeros(n),
    };
    let mut y = Vec::with_capacity(u.len());
    for (k, uk) in u.iter().enumerate() {
        let feed = if kind == TimeResponseKind::Impulse { 0.0 } else { d * uk };
        y.push(c.dot(&x) + feed);
        if k + 1 < u.len() {
            x = &phi * &x + &gamma * *uk;
        }
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyResponseKind {
    Bode,
    Nyquist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponseData {
    pub omega: Vec<f64>,
    pub response: Vec<Complex64>,
    pub kind: FrequencyResponseKind,
    /// Grid indices where the response is not finite (pole on the jω axis).
    pub nonfinite: Vec<usize>,
}

impl FrequencyResponseData {
    pub fn magnitude_db(&self) -> Vec<f64> {
        self.response.iter().map(|g| 20.0 * g.norm().log10()).collect()
    }

    /// Phase in degrees, unwrapped along the grid.
    pub fn phase_deg(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.response.len());
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for g in &self.response {
            let raw = g.arg().to_degrees();
            if let Some(p) = prev {
                let mut cur = raw + offset;
                while cur - p > 180.0 {
                    offset -= 360.0;
                    cur -= 360.0;
                }
                while cur - p < -180.0 {
                    offset += 360.0;
                    cur += 360.0;
                }
                out.push(cur);
                prev = Some(cur);
            } else {
                out.push(raw);
                prev = Some(raw);
            }
        }
        out
    }
}

/// `n` log-spaced points from `10^lo` to `10^hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect()
}

/// Default grid: 200 points over [1e-2, 1e2] scaled by the largest pole or
/// zero magnitude (or 1).
pub fn default_frequency_grid(sys: &LinearSystem, n_points: usize) -> Result<Vec<f64>> {
    let mut mags: Vec<f64> = analysis::poles(sys)?.iter().map(|p| p.norm()).collect();
    if let Ok(z) = analysis::zeros(sys) {
        mags.extend(z.iter().map(|p| p.norm()));
    }
    let largest = mags.into_iter().fold(0.0f64, f64::max);
    let scale = if largest > 0.0 { largest } else { 1.0 };
    let l = scale.log10();
    Ok(logspace(-2.0 + l, 2.0 + l, n_points))
}

/// Evaluate G(jω). TF models use direct rational evaluation; SS models solve
/// `(jωI - A) x = B`.
pub fn frequency_response(
    sys: &LinearSystem,
    kind: FrequencyResponseKind,
    omega: Option<Vec<f64>>,
) -> Result<FrequencyResponseData> {
    let omega = match omega {
        Some(w) => w,
        None => default_frequency_grid(sys, DEFAULT_FREQ_POINTS)?,
    };
    if omega.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(ControlError::BadGrid("frequencies must be positive and finite".into()));
    }
    if omega.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ControlError::BadGrid("frequencies must be strictly increasing".into()));
    }
    let response: Vec<Complex64> = match sys {
        LinearSystem::Tf(tf) => omega.iter().map(|w| tf.eval(Complex64::new(0.0, *w))).collect(),
        LinearSystem::Ss(ss) => {
            if !ss.is_siso() {
                return Err(ControlError::UnsupportedShape("frequency response needs a SISO model".into()));
            }
            omega.iter().map(|w| ss_eval(ss, Complex64::new(0.0, *w))).collect()
        }
    };
    let nonfinite =
        response.iter().enumerate().filter(|(_, g)| !g.re.is_finite() || !g.im.is_finite()).map(|(i, _)| i).collect();
    Ok(FrequencyResponseData { omega, response, kind, nonfinite })
}

/// `C (sI - A)^-1 B + D` for a SISO model at complex `s`.
pub fn ss_eval(ss: &StateSpace, s: Complex64) -> Complex64 {
    let n = ss.order();
    let d = Complex64::new(ss.d[(0, 0)], 0.0);
    if n == 0 {
        return d;
    }
    let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(ss.a[(i, j)], 0.0)
    });
    let b = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(ss.b[(i, 0)], 0.0));
    match m.lu().solve(&b) {
        Some(x) => (0..n).map(|j| Complex64::new(ss.c[(0, j)], 0.0) * x[j]).sum::<Complex64>() + d,
        None => Complex64::new(f64::INFINITY, f64::NAN),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootLocusData {
    pub gains: Vec<f64>,
    /// `branches[i]` holds the closed-loop poles at `gains[i]`; entry `j` of
    /// consecutive sets follows the same branch.
    pub branches: Vec<Vec<Complex64>>,
}

/// Default gain grid: 0 followed by 100 log-spaced gains in [1e-3, 1e3].
pub fn default_gains() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(logspace(-3.0, 3.0, 100));
    g
}

/// Closed-loop poles of `den + k num` for each gain. Branches are tracked by
/// nearest-neighbour matching between consecutive gains. If the leading
/// coefficient cancels at some gain, the missing branches are reported at
/// infinity so every set keeps the system order.
pub fn root_locus_data(sys: &LinearSystem, gains: Option<Vec<f64>>) -> Result<RootLocusData> {
    let tf = match sys {
        LinearSystem::Tf(tf) => tf.clone(),
        LinearSystem::Ss(ss) => crate::system::ss_to_tf(ss)?,
    };
    let gains = gains.unwrap_or_else(default_gains);
    if gains.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
        return Err(ControlError::BadGrid("root locus gains must be nonnegative".into()));
    }
    let order = tf.order();
    let num = tf.num().to_vec();
    let den = tf.den().to_vec();
    let mut branches: Vec<Vec<Complex64>> = Vec::with_capacity(gains.len());
    for k in &gains {
        let char_poly = poly::add(&den, &poly::scale(&num, *k));
        let mut roots = poly::roots(&char_poly)?;
        while roots.len() < order {
            roots.push(Complex64::new(f64::INFINITY, 0.0));
        }
        if let Some(prev) = branches.last() {
            roots = match_branches(prev, roots);
        }
        branches.push(roots);
    }
    Ok(RootLocusData { gains, branches })
}

fn match_branches(prev: &[Complex64], mut next: Vec<Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(prev.len());
    for p in prev {
        let (idx, _) = next
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let d = (z - p).norm();
                (i, if d.is_nan() { f64::INFINITY } else { d })
            })
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        out.push(next.swap_remove(idx));
    }
    out
}

/// Eigenvalue-sorted copy, handy when comparing pole sets.
pub fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    eigen::sort_complex(&mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::make_tf;

    fn lag() -> LinearSystem {
        make_tf(&[1.0], &[1.0, 1.0]).unwrap().into()
    }

    #[test]
    fn impulse_of_first_order_lag() {
        let grid = TimeGrid { horizon: Some(8.0), n_points: Some(801), u: None };
        let r = time_response(&lag(), TimeResponseKind::Impulse, &grid).unwrap();
        assert!((r.y[0] - 1.0).abs() < 1e-12);
        assert!((r.t[100] - 1.0).abs() < 1e-12);
        assert!((r.y[100] - (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn grid_validation() {
        let bad = TimeGrid { horizon: Some(0.0), ..Default::default() };
        assert!(matches!(time_response(&lag(), TimeResponseKind::Step, &bad), Err(ControlError::BadGrid(_))));
        let forced = time_response(&lag(), TimeResponseKind::Forced, &TimeGrid::default());
        assert!(matches!(forced, Err(ControlError::BadGrid(_))));
    }

    #[test]
    fn forced_with_constant_input_matches_step() {
        let u = vec![1.0; 300];
        let forced = time_response(
            &lag(),
            TimeResponseKind::Forced,
            &TimeGrid { horizon: Some(6.0), n_points: None, u: Some(u) },
        )
        .unwrap();
        let step = time_response(
            &lag(),
            TimeResponseKind::Step,
            &TimeGrid { horizon: Some(6.0), n_points: Some(300), u: None },
        )
        .unwrap();
        for (a, b) in forced.y.iter().zip(&step.y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn default_horizons() {
        assert_eq!(default_horizon(&lag()).unwrap(), 8.0);
        let unstable: LinearSystem = make_tf(&[1.0, 3.0], &[1.0, -2.0, -3.0]).unwrap().into();
        assert_eq!(default_horizon(&unstable).unwrap(), 5.0);
        let fast: LinearSystem = make_tf(&[1.0], &[1.0, 100.0]).unwrap().into();
        assert_eq!(default_horizon(&fast).unwrap(), 1.0);
    }

    #[test]
    fn lag_at_unit_frequency() {
        let r = frequency_response(&lag(), FrequencyResponseKind::Bode, Some(vec![1e-6, 1.0])).unwrap();
        assert!((r.response[1] - Complex64::new(0.5, -0.5)).norm() < 1e-12);
        assert!((r.magnitude_db()[1] + 3.010299956639812).abs() < 1e-9);
        assert!((r.phase_deg()[1] + 45.0).abs() < 1e-9);
        assert!((r.response[0] - Complex64::new(1.0, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn pole_on_grid_is_flagged() {
        let osc: LinearSystem = make_tf(&[1.0], &[1.0, 0.0, 1.0]).unwrap().into();
        let r = frequency_response(&osc, FrequencyResponseKind::Bode, Some(vec![0.5, 1.0, 2.0])).unwrap();
        assert_eq!(r.nonfinite, vec![1]);
    }

    #[test]
    fn default_frequency_grid_shape() {
        let r = frequency_response(&lag(), FrequencyResponseKind::Nyquist, None).unwrap();
        assert_eq!(r.omega.len(), 200);
        assert!((r.omega[0] - 1e-2).abs() < 1e-15);
        assert!((r.omega[199] - 1e2).abs() < 1e-9);
    }

    #[test]
    fn root_locus_breakaway() {
        let g: LinearSystem = make_tf(&[1.0], &[1.0, 2.0, 0.0]).unwrap().into();
        let rl = root_locus_data(&g, Some(vec![0.0, 1.0, 2.0])).unwrap();
        let at0 = sorted(rl.branches[0].clone());
        assert!((at0[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-9);
        assert!(at0[1].norm() < 1e-9);
        for z in &rl.branches[1] {
            assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-6, "{z}");
        }
        assert!(rl.branches.iter().all(|b| b.len() == 2));
    }

    #[test]
    fn default_gain_grid() {
        let g = default_gains();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-3).abs() < 1e-18);
        assert!((g[100] - 1e3).abs() < 1e-9);
    }
}
