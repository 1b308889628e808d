//! Rule table mapping error classes to remedies.

use serde::{Deserialize, Serialize};

use crate::tools::CONTROL_TOOLS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub error_class: String,
    pub text: String,
    /// Whether a specific rule covered the error class.
    pub known: bool,
}

/// Error class token at the start of `error`, e.g. `ShapeError` in
/// `"ShapeError: B has 3 rows"`.
pub fn error_class(error: &str) -> String {
    let head = error.trim().split([':', '\n']).next().unwrap_or("").trim();
    if !head.is_empty() && head.chars().all(|c| c.is_ascii_alphanumeric()) {
        head.to_string()
    } else {
        "Unknown".into()
    }
}

/// Required arguments of a controller tool, for argument advice.
pub fn tool_signature(tool: &str) -> Option<&'static str> {
    Some(match tool {
        "tf" => "num = [...], den = [...]",
        "ss" => "A = [[...]], B = [[...]], C = [[...]], D = [[...]]",
        "acker" | "place" => "A = [[...]], B = [[...]], poles = [...]",
        "lqr" => "A = [[...]], B = [[...]], Q = [[...]], R = [[...]]",
        "ctrb" => "A = [[...]], B = [[...]]",
        "closed_loop" => "sys = sys [k], K = [[...]]",
        "forced_response" => "sys = sys [k], u = [...]",
        "feedback" => "sys = sys [k] (sys2 = sys [j] optional)",
        "series" | "parallel" => "sys = sys [k], sys2 = sys [j]",
        t if CONTROL_TOOLS.contains(&t) => "sys = sys [k] (or num/den, or A, B, C, D)",
        _ => return None,
    })
}

pub fn debug_advise(error: &str, tool: Option<&str>) -> Advice {
    let class = error_class(error);
    let sig = tool.and_then(|t| tool_signature(t).map(|s| format!(" {t} expects {s}.")));
    let (text, known) = match class.as_str() {
        "ArgParseError" => {
            let mut t = "Restate the Action Input as name = value pairs separated by commas, with lists as [1, 2] and matrices as [[1, 2], [3, 4]]; refer to stored systems as sys = sys [k].".to_string();
            if let Some(s) = &sig {
                t.push_str(s);
            }
            if tool == Some("ss") && error.contains("missing argument") {
                t.push_str(" When only A and B are known, call place, acker or lqr directly with A and B.");
            }
            (t, true)
        }
        "ShapeError" | "UnsupportedShape" => (
            format!(
                "Check the dimensions: A must be n x n, B n x m, C p x n, D p x m, Q n x n, R m x m, K m x n, and the pole list must have n entries.{}",
                sig.unwrap_or_default()
            ),
            true,
        ),
        "UnknownTool" => (format!("Use only the registered tools: {}.", CONTROL_TOOLS.join(", ")), true),
        "ParseFailure" => (
            "Reply in the required format. Either\nThought: ...\nAction: the action to take\nAction Input: the input to the action\nor\nThought: I now know the final answer\nFinal Answer: the final answer to the original input question.".into(),
            true,
        ),
        "DegenerateSystem" => ("The denominator is zero; take the coefficients from the problem statement again.".into(), true),
        "ImproperSystem" => ("The numerator degree exceeds the denominator degree; check that num and den are not swapped.".into(), true),
        "Uncontrollable" => ("The pair (A, B) is not controllable, so poles cannot be placed arbitrarily; verify A and B with ctrb.".into(), true),
        "Unstabilizable" => ("An unstable mode is unreachable from the input, so no LQR gain exists; verify A and B.".into(), true),
        "BadPoleSet" => ("Give exactly n desired poles, with complex poles in conjugate pairs.".into(), true),
        "SingularWeight" | "InvalidWeight" => ("Q must be symmetric positive semidefinite and R symmetric positive definite.".into(), true),
        "NoConvergence" => ("The numerical solver did not converge; check the scaling of the matrices.".into(), true),
        _ => ("Re-read the error message, correct the offending input and retry the step.".into(), false),
    };
    Advice { error_class: class, text, known }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_advice_lists_dimensions() {
        let a = debug_advise("ShapeError: B has 3 rows, expected 2", Some("lqr"));
        assert!(a.known);
        assert!(a.text.contains("n x n") && a.text.contains("n x m"));
    }

    #[test]
    fn parse_failure_restates_format() {
        let a = debug_advise("ParseFailure: completion has neither an action nor a final answer", None);
        assert!(a.text.contains("Action Input: the input to the action"));
    }

    #[test]
    fn unknown_class_is_generic() {
        let a = debug_advise("something odd happened", None);
        assert!(!a.known);
        assert_eq!(a.error_class, "Unknown");
    }

    #[test]
    fn missing_state_space_argument() {
        let a = debug_advise("ArgParseError: missing argument C (at 0..0)", Some("ss"));
        assert!(a.text.contains("call place"));
    }
}
