//! Kernel tour on the unstable plant (s + 3) / (s^2 - 2s - 3): realization,
//! stability, state feedback by pole placement and LQR, and the closed-loop
//! step response.
//!
//! ```text
//! cargo run -p agentctl-control --example design_walkthrough
//! ```

use agentctl_control::format::{fmt_complex_vec, fmt_num};
use agentctl_control::*;

fn main() -> Result<()> {
    let g = make_tf(&[1.0, 3.0], &[1.0, -2.0, -3.0])?;
    println!("G(s) =\n{g}\n");

    let ss = tf_to_ss(&g)?;
    println!("controllable canonical realization\n{ss}\n");

    let rep = is_stable(&g.clone().into())?;
    println!(
        "stable: {}, right-half-plane poles: {} (Routh: {:?}), poles {}",
        rep.is_stable,
        rep.rhp_pole_count,
        rep.routh_rhp_count,
        fmt_complex_vec(&rep.poles)
    );

    let target = [Complex64::new(-3.0, 0.0), Complex64::new(-4.0, 0.0)];
    let k_acker = acker(&ss.a, &ss.b, &target)?;
    println!("acker gain for poles at -3, -4: {}", fmt_matrix(&k_acker));

    let q = DMatrix::identity(2, 2);
    let r = DMatrix::from_element(1, 1, 1.0);
    let sol = lqr(&ss.a, &ss.b, &q, &r)?;
    println!(
        "LQR: K = {}, closed-loop eigenvalues {}, CARE residual {:.1e} after {} iterations",
        fmt_matrix(&sol.k),
        fmt_complex_vec(&sol.e),
        care_residual(&ss.a, &ss.b, &q, &r, &sol.s),
        sol.iterations
    );

    let cl = closed_loop_state_feedback(&ss, &sol.k)?;
    let cl_tf = ss_to_tf(&cl)?;
    println!("\nclosed loop under LQR:\n{cl_tf}\n");
    let sys: LinearSystem = cl_tf.into();
    let y = time_response(&sys, TimeResponseKind::Step, &TimeGrid::default())?;
    let dc = dc_gain(&sys)?.value().unwrap_or(f64::NAN);
    println!(
        "step response: {} samples to t = {} s, final value {} (DC gain {})",
        y.t.len(),
        fmt_num(*y.t.last().unwrap()),
        fmt_num(y.final_value()),
        fmt_num(dc)
    );

    let bode = frequency_response(&sys, FrequencyResponseKind::Bode, None)?;
    let mag = bode.magnitude_db();
    println!("Bode: |G| from {:.1} dB to {:.1} dB over {} points", mag[0], mag[mag.len() - 1], mag.len());
    Ok(())
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    agentctl_control::system::fmt_matrix(m)
}
