//! Prose formatting for values surfaced to agents: two decimals, trailing
//! zeros trimmed. Full precision stays in the numeric types.

use num_complex::Complex64;

pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{:.2}", x);
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    if fmt_num(z.im) == "0" {
        return fmt_num(z.re);
    }
    let re = fmt_num(z.re);
    let im = fmt_num(z.im.abs());
    let sign = if z.im < 0.0 { '-' } else { '+' };
    if re == "0" {
        format!("{}{}j", if z.im < 0.0 { "-" } else { "" }, im)
    } else {
        format!("{re}{sign}{im}j")
    }
}

pub fn fmt_vec(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", cells.join(", "))
}

pub fn fmt_complex_vec(v: &[Complex64]) -> String {
    let cells: Vec<String> = v.iter().map(|z| fmt_complex(*z)).collect();
    format!("[{}]", cells.join(", "))
}

/// Polynomial in `s`, e.g. `s^2 - 2 s - 3`.
pub fn fmt_poly(p: &[f64]) -> String {
    let deg = p.len().saturating_sub(1);
    let mut out = String::new();
    for (i, c) in p.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let power = deg - i;
        let mag = c.abs();
        let coef = if power > 0 && fmt_num(mag) == "1" { String::new() } else { fmt_num(mag) };
        let var = match power {
            0 => String::new(),
            1 => "s".to_string(),
            k => format!("s^{k}"),
        };
        let term = match (coef.is_empty(), var.is_empty()) {
            (true, _) => var,
            (false, true) => coef,
            (false, false) => format!("{coef} {var}"),
        };
        if out.is_empty() {
            if *c < 0.0 {
                out.push('-');
            }
            out.push_str(&term);
        } else {
            out.push_str(if *c < 0.0 { " - " } else { " + " });
            out.push_str(&term);
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_to_two_decimals() {
        assert_eq!(fmt_num(6.16227766), "6.16");
        assert_eq!(fmt_num(10.0), "10");
        assert_eq!(fmt_num(-1.0000000001), "-1");
        assert_eq!(fmt_num(-0.001), "0");
        assert_eq!(fmt_num(0.5), "0.5");
    }

    #[test]
    fn polynomials() {
        assert_eq!(fmt_poly(&[1.0, -2.0, -3.0]), "s^2 - 2 s - 3");
        assert_eq!(fmt_poly(&[1.0, 4.16, 3.16]), "s^2 + 4.16 s + 3.16");
        assert_eq!(fmt_poly(&[1.0, 3.0]), "s + 3");
        assert_eq!(fmt_poly(&[0.0]), "0");
        assert_eq!(fmt_poly(&[-2.0, 0.0, 1.0]), "-2 s^2 + 1");
    }

    #[test]
    fn complex_values() {
        assert_eq!(fmt_complex(Complex64::new(-1.0, 2.0)), "-1+2j");
        assert_eq!(fmt_complex(Complex64::new(-1.0, -2.0)), "-1-2j");
        assert_eq!(fmt_complex(Complex64::new(0.0, -2.0)), "-2j");
        assert_eq!(fmt_complex(Complex64::new(3.0, 1e-9)), "3");
    }
}
