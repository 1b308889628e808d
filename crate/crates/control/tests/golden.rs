use agentctl_control::format::{fmt_complex_vec, fmt_num};
use agentctl_control::*;

fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(r, c, v)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[test]
fn tf_to_ss_on_unstable_plant() {
    let g = make_tf(&[1.0, 3.0], &[1.0, -2.0, -3.0]).unwrap();
    assert_eq!(g.to_string().lines().next().unwrap().trim(), "s + 3");
    let ss = tf_to_ss(&g).unwrap();
    assert_eq!(ss.a, m(2, 2, &[2.0, 3.0, 1.0, 0.0]));
    assert_eq!(ss.b, m(2, 1, &[1.0, 0.0]));
    assert_eq!(ss.c, m(1, 2, &[1.0, 3.0]));
    assert_eq!(ss.d, m(1, 1, &[0.0]));
    let back = ss_to_tf(&ss).unwrap();
    assert_eq!(back.num(), &[1.0, 3.0]);
    assert_eq!(back.den(), &[1.0, -2.0, -3.0]);
}

#[test]
fn leading_zero_numerator_is_same_function() {
    let a = make_tf(&[1.0, 3.0], &[1.0, -2.0, -3.0]).unwrap();
    let b = make_tf(&[0.0, 1.0, 3.0], &[1.0, -2.0, -3.0]).unwrap();
    for s in [0.3, -1.7, 2.2, 5.0, -0.4] {
        let z = Complex64::new(s, 0.5 * s);
        assert!((a.eval(z) - b.eval(z)).norm() < 1e-12);
    }
}

#[test]
fn make_tf_errors() {
    assert_eq!(make_tf(&[1.0], &[0.0, 0.0]).unwrap_err(), ControlError::DegenerateSystem);
    assert!(matches!(make_tf(&[1.0, 0.0, 0.0], &[1.0, 1.0]), Err(ControlError::ImproperSystem { .. })));
}

#[test]
fn ackermann_golden_gain() {
    let start = std::time::Instant::now();
    let k = acker(
        &m(2, 2, &[0.0, 1.0, -2.0, -3.0]),
        &m(2, 1, &[0.0, 1.0]),
        &[Complex64::new(-3.0, 0.0), Complex64::new(-4.0, 0.0)],
    )
    .unwrap();
    assert!(start.elapsed().as_millis() < 1);
    assert!((k[(0, 0)] - 10.0).abs() < 1e-9);
    assert!((k[(0, 1)] - 4.0).abs() < 1e-9);
}

#[test]
fn lqr_golden_solution() {
    let a = m(2, 2, &[2.0, 3.0, 1.0, 0.0]);
    let b = m(2, 1, &[1.0, 0.0]);
    let q = DMatrix::identity(2, 2);
    let r = m(1, 1, &[1.0]);
    let sol = lqr(&a, &b, &q, &r).unwrap();
    let k: Vec<f64> = sol.k.iter().map(|v| round2(*v)).collect();
    assert_eq!(k, vec![6.16, 6.16]);
    assert_eq!(round2(sol.s[(0, 0)]), 6.16);
    assert_eq!(round2(sol.s[(0, 1)]), 6.16);
    assert_eq!(round2(sol.s[(1, 0)]), 6.16);
    assert_eq!(round2(sol.s[(1, 1)]), 7.16);
    assert_eq!(fmt_complex_vec(&sol.e), "[-3.16, -1]");
    assert!(care_residual(&a, &b, &q, &r, &sol.s) <= 1e-8);
    // closed loop from the reported gain
    let ss = StateSpace::new(a, b, m(1, 2, &[1.0, 3.0]), m(1, 1, &[0.0])).unwrap();
    let cl = closed_loop_state_feedback(&ss, &sol.k).unwrap();
    assert_eq!(fmt_num(cl.a[(0, 0)]), "-4.16");
    assert_eq!(fmt_num(cl.a[(0, 1)]), "-3.16");
    let e = eigenvalues(&cl.a).unwrap();
    for (x, y) in e.iter().zip(&sol.e) {
        assert!((x - y).norm() < 1e-9);
    }
    let closed = ss_to_tf(&cl).unwrap();
    assert_eq!(fmt_num(closed.den()[1]), "4.16");
    assert_eq!(fmt_num(closed.den()[2]), "3.16");
}

#[test]
fn unstable_plant_stability_report() {
    let g: LinearSystem = make_tf(&[1.0, 3.0], &[1.0, -2.0, -3.0]).unwrap().into();
    let rep = is_stable(&g).unwrap();
    assert!(!rep.is_stable);
    assert_eq!(rep.rhp_pole_count, 1);
    assert_eq!(rep.routh_rhp_count, Some(1));
    assert_eq!(fmt_complex_vec(&rep.poles), "[-1, 3]");
    assert_eq!(fmt_complex_vec(&zeros(&g).unwrap()), "[-3]");
}

#[test]
fn step_of_lqr_closed_loop_settles_at_dc_gain() {
    let g = make_tf(&[1.0, 3.0], &[1.0, 4.16, 3.16]).unwrap();
    let sys: LinearSystem = g.into();
    let r = time_response(&sys, TimeResponseKind::Step, &TimeGrid::default()).unwrap();
    let dc = dc_gain(&sys).unwrap().value().unwrap();
    assert!((r.final_value() - dc).abs() <= 0.01 * dc.abs());
    assert_eq!(r.t.len(), 500);
}
