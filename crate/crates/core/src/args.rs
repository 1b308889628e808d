//! Action-input grammar: `name = value (, name = value)*` where a value is a
//! number, complex literal, `[list]`, `[[matrix]]`, LaTeX `bmatrix`, quoted
//! string, or bare text.

use agentctl_control::{Complex64, DMatrix};

use crate::error::{AgentError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Complex(Complex64),
    List(Vec<Value>),
    Str(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Complex(z) if z.im == 0.0 => Some(z.re),
            Value::List(v) if v.len() == 1 => v[0].as_f64(),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            Value::Num(x) => Some(Complex64::new(*x, 0.0)),
            Value::Complex(z) => Some(*z),
            Value::List(v) if v.len() == 1 => v[0].as_complex(),
            _ => None,
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self, Value::Num(_) | Value::Complex(_))
    }
}

/// Parsed named arguments in source order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Args {
    pairs: Vec<(String, Value)>,
}

impl Args {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(k, _)| k.as_str())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// First key present, trying each alias in order.
    pub fn get_any<'k>(&self, keys: &[&'k str]) -> Option<(&'k str, &Value)> {
        keys.iter().find_map(|k| self.get(k).map(|v| (*k, v)))
    }

    pub fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn require(&self, key: &str) -> Result<&Value> {
        self.get(key).ok_or_else(|| AgentError::arg(format!("missing argument {key}"), 0, 0))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.require(key)?.as_f64().ok_or_else(|| AgentError::arg(format!("{key} must be a number"), 0, 0))
    }

    pub fn str(&self, key: &str) -> Result<String> {
        match self.require(key)? {
            Value::Str(s) => Ok(s.clone()),
            Value::Num(x) => Ok(x.to_string()),
            _ => Err(AgentError::arg(format!("{key} must be text"), 0, 0)),
        }
    }

    /// Flat real vector; a single-row or single-column matrix is flattened.
    pub fn vector(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.require(key)?;
        let bad = || AgentError::arg(format!("{key} must be a list of real numbers"), 0, 0);
        match v {
            Value::Num(x) => Ok(vec![*x]),
            Value::List(items) => {
                if items.iter().all(Value::is_scalar) {
                    return items.iter().map(|i| i.as_f64().ok_or_else(bad)).collect();
                }
                let m = to_matrix(key, v)?;
                if m.nrows() == 1 || m.ncols() == 1 {
                    Ok(m.iter().copied().collect())
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }

    pub fn complex_vec(&self, key: &str) -> Result<Vec<Complex64>> {
        let bad = || AgentError::arg(format!("{key} must be a list of numbers"), 0, 0);
        match self.require(key)? {
            Value::List(items) => {
                let flat: Vec<&Value> = items
                    .iter()
                    .flat_map(|i| match i {
                        Value::List(inner) => inner.iter().collect::<Vec<_>>(),
                        other => vec![other],
                    })
                    .collect();
                flat.into_iter().map(|i| i.as_complex().ok_or_else(bad)).collect()
            }
            v => v.as_complex().map(|z| vec![z]).ok_or_else(bad),
        }
    }

    /// Matrix from nested lists; a scalar is 1x1 and a flat list one row.
    pub fn matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        to_matrix(key, self.require(key)?)
    }

    /// Like [`Args::matrix`], but a flat list becomes a column.
    pub fn column_matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        let v = self.require(key)?;
        match v {
            Value::List(items) if items.iter().all(Value::is_scalar) => {
                let m = to_matrix(key, v)?;
                Ok(m.transpose())
            }
            _ => to_matrix(key, v),
        }
    }
}

fn to_matrix(key: &str, v: &Value) -> Result<DMatrix<f64>> {
    let bad = |what: &str| AgentError::arg(format!("{key} {what}"), 0, 0);
    match v {
        Value::Num(x) => Ok(DMatrix::from_element(1, 1, *x)),
        Value::List(items) if items.is_empty() => Ok(DMatrix::zeros(0, 0)),
        Value::List(items) if items.iter().all(Value::is_scalar) => {
            let row: Vec<f64> =
                items.iter().map(|i| i.as_f64().ok_or_else(|| bad("must be real"))).collect::<Result<_>>()?;
            Ok(DMatrix::from_row_slice(1, row.len(), &row))
        }
        Value::List(rows) => {
            let mut data = Vec::new();
            let mut cols = None;
            for r in rows {
                let cells: Vec<f64> = match r {
                    Value::List(c) => c
                        .iter()
                        .map(|i| i.as_f64().ok_or_else(|| bad("must be a real matrix")))
                        .collect::<Result<_>>()?,
                    s if s.is_scalar() => vec![s.as_f64().ok_or_else(|| bad("must be real"))?],
                    _ => return Err(bad("must be a real matrix")),
                };
                match cols {
                    None => cols = Some(cells.len()),
                    Some(c) if c != cells.len() => return Err(bad("has ragged rows")),
                    _ => {}
                }
                data.extend(cells);
            }
            let c = cols.unwrap_or(0);
            Ok(DMatrix::from_row_slice(rows.len(), c, &data))
        }
        _ => Err(bad("must be a matrix")),
    }
}

pub fn parse_action_input(raw: &str) -> Result<Args> {
    let mut p = Parser { src: raw, pos: 0 };
    let mut args = Args::default();
    p.skip_ws();
    if p.at_end() {
        return Ok(args);
    }
    loop {
        p.skip_ws();
        let start = p.pos;
        let key = p.ident().ok_or_else(|| AgentError::arg("expected an argument name", start, p.next_boundary()))?;
        p.skip_ws();
        if !p.eat('=') {
            return Err(AgentError::arg(format!("expected '=' after {key}"), p.pos, p.next_boundary()));
        }
        p.skip_ws();
        let value = p.value()?;
        if args.has(&key) {
            return Err(AgentError::arg(format!("duplicate argument {key}"), start, p.pos));
        }
        args.pairs.push((key, value));
        let newline = p.rest().trim_start_matches([' ', '\t', '$']).starts_with('\n');
        p.skip_ws();
        if p.at_end() || p.rest().trim() == "." {
            break;
        }
        if !(p.eat(',') || p.eat(';') || newline) {
            return Err(AgentError::arg("expected ',' between arguments", p.pos, p.next_boundary()));
        }
    }
    Ok(args)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '$' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn skip_inline_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' || c == '$' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_boundary(&self) -> usize {
        self.rest().find([',', ';', '\n']).map(|i| self.pos + i).unwrap_or(self.src.len())
    }

    fn ident(&mut self) -> Option<String> {
        let rest = self.rest();
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let ok = if i == 0 { c.is_ascii_alphabetic() || c == '_' } else { c.is_ascii_alphanumeric() || c == '_' };
            if !ok {
                break;
            }
            end = i + c.len_utf8();
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some(rest[..end].to_string())
    }

    fn value(&mut self) -> Result<Value> {
        let start = self.pos;
        match self.peek() {
            None => Err(AgentError::arg("missing value", start, start)),
            Some('[') => self.list(),
            Some('\\') => self.latex(),
            Some('"') | Some('\'') => self.quoted(),
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let save = self.pos;
                if let Some(v) = self.scalar() {
                    self.skip_inline_ws();
                    if self.value_ends_here() {
                        return Ok(v);
                    }
                }
                self.pos = save;
                self.bare()
            }
            Some(_) => self.bare(),
        }
    }

    /// True at a separator, a newline, or the end of input.
    fn value_ends_here(&self) -> bool {
        let r = self.rest();
        r.is_empty()
            || r.trim() == "."
            || r.starts_with([',', ';', '\n', ']', '&'])
            || r.starts_with("\\\\")
            || r.starts_with("\\end")
    }

    fn number(&mut self) -> Option<f64> {
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut i = 0;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i == digits_start || (i == digits_start + 1 && bytes[digits_start] == b'.') {
            return None;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                j += 1;
            }
            let exp_start = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_start {
                i = j;
            }
        }
        let x: f64 = rest[..i].parse().ok()?;
        self.pos += i;
        Some(x)
    }

    /// Real or complex scalar: `3`, `-1.5e2`, `2j`, `-1+2j`, `-1 - 2.5i`.
    fn scalar(&mut self) -> Option<Value> {
        let save = self.pos;
        let re = self.number()?;
        if self.eat('j') || self.eat('i') {
            return Some(Value::Complex(Complex64::new(0.0, re)));
        }
        let after_re = self.pos;
        self.skip_inline_ws();
        if let Some(sign) = self.peek().filter(|c| *c == '+' || *c == '-') {
            self.bump();
            self.skip_inline_ws();
            let unsigned = self.rest().starts_with(|c: char| c.is_ascii_digit() || c == '.');
            if unsigned {
                if let Some(im) = self.number() {
                    if self.eat('j') || self.eat('i') {
                        let im = if sign == '-' { -im } else { im };
                        return Some(Value::Complex(Complex64::new(re, im)));
                    }
                }
            }
        }
        self.pos = after_re;
        if self.pos == save {
            return None;
        }
        Some(Value::Num(re))
    }

    fn list(&mut self) -> Result<Value> {
        let start = self.pos;
        self.bump();
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(']') {
                break;
            }
            let item = match self.peek() {
                Some('[') => self.list()?,
                Some('\\') => self.latex()?,
                Some(_) => self
                    .scalar()
                    .ok_or_else(|| AgentError::arg("expected a number in list", self.pos, self.next_boundary()))?,
                None => return Err(AgentError::arg("unclosed '['", start, self.src.len())),
            };
            items.push(item);
            self.skip_ws();
            // numpy-style rows `[[2. 3.] [1. 0.]]` have no commas
            self.eat(',');
        }
        Ok(Value::List(items))
    }

    /// `\begin{bmatrix} a & b \\ c & d \end{bmatrix}`
    fn latex(&mut self) -> Result<Value> {
        let start = self.pos;
        let env = ["bmatrix", "pmatrix", "matrix", "vmatrix"]
            .into_iter()
            .find(|e| self.rest().starts_with(&format!("\\begin{{{e}}}")))
            .ok_or_else(|| AgentError::arg("unsupported LaTeX value", start, self.next_boundary()))?;
        self.eat_str(&format!("\\begin{{{env}}}"));
        let close = format!("\\end{{{env}}}");
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            self.skip_ws();
            if self.eat_str(&close) {
                if !row.is_empty() {
                    rows.push(Value::List(std::mem::take(&mut row)));
                }
                break;
            }
            if self.eat_str("\\\\") {
                rows.push(Value::List(std::mem::take(&mut row)));
                continue;
            }
            if self.eat('&') {
                continue;
            }
            if self.at_end() {
                return Err(AgentError::arg(format!("unclosed \\begin{{{env}}}"), start, self.src.len()));
            }
            let v = self
                .scalar()
                .ok_or_else(|| AgentError::arg("expected a number in matrix", self.pos, self.next_boundary()))?;
            row.push(v);
        }
        Ok(Value::List(rows))
    }

    fn quoted(&mut self) -> Result<Value> {
        let start = self.pos;
        let q = self.bump().unwrap_or('"');
        let body_start = self.pos;
        match self.rest().find(q) {
            Some(i) => {
                let s = self.src[body_start..body_start + i].to_string();
                self.pos = body_start + i + q.len_utf8();
                Ok(Value::Str(s))
            }
            None => Err(AgentError::arg("unterminated string", start, self.src.len())),
        }
    }

    /// Bare text up to the next `, name =` or the end. `sys [7]` stays whole.
    fn bare(&mut self) -> Result<Value> {
        let start = self.pos;
        let rest = self.rest();
        let mut end = rest.len();
        for (i, c) in rest.char_indices() {
            if c == ',' || c == ';' || c == '\n' {
                let tail = rest[i + 1..].trim_start();
                let mut probe = Parser { src: tail, pos: 0 };
                if probe.ident().is_some() {
                    probe.skip_ws();
                    if probe.peek() == Some('=') {
                        end = i;
                        break;
                    }
                }
            }
        }
        let text = rest[..end].trim().trim_end_matches('.').trim_end_matches('$').trim();
        if text.is_empty() {
            return Err(AgentError::arg("missing value", start, start + end));
        }
        self.pos = start + end;
        Ok(Value::Str(text.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lqr_input() {
        let a = parse_action_input("A = [[2, 3], [1, 0]], B = [[1], [0]], Q = [[1, 0], [0, 1]], R = [[1]]").unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a.matrix("A").unwrap(), DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 1.0, 0.0]));
        assert_eq!(a.matrix("B").unwrap().shape(), (2, 1));
        assert_eq!(a.matrix("R").unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn handle_reference() {
        let a = parse_action_input("sys=sys7").unwrap();
        assert_eq!(a.get("sys"), Some(&Value::Str("sys7".into())));
        let a = parse_action_input("sys = sys [24]").unwrap();
        assert_eq!(a.get("sys"), Some(&Value::Str("sys [24]".into())));
    }

    #[test]
    fn empty_input() {
        assert!(parse_action_input("").unwrap().is_empty());
        assert!(parse_action_input("   \n").unwrap().is_empty());
    }

    #[test]
    fn latex_matrices() {
        let a = parse_action_input(
            r"A = $\begin{bmatrix} 0 & 1 \\ -2 & -3 \end{bmatrix}$, B = $\begin{bmatrix} 0 \\ 1 \end{bmatrix}$, poles = [-3, -4]",
        )
        .unwrap();
        assert_eq!(a.matrix("A").unwrap(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]));
        assert_eq!(a.matrix("B").unwrap().shape(), (2, 1));
        assert_eq!(a.vector("poles").unwrap(), vec![-3.0, -4.0]);
    }

    #[test]
    fn complex_poles() {
        let a = parse_action_input("poles = [-1+2j, -1 - 2j, -3]").unwrap();
        let p = a.complex_vec("poles").unwrap();
        assert_eq!(p[0], Complex64::new(-1.0, 2.0));
        assert_eq!(p[1], Complex64::new(-1.0, -2.0));
        assert_eq!(p[2], Complex64::new(-3.0, 0.0));
    }

    #[test]
    fn numpy_rows_without_commas() {
        let a = parse_action_input("A = [[2. 3.] [1. 0.]]").unwrap();
        assert_eq!(a.matrix("A").unwrap(), DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 1.0, 0.0]));
    }

    #[test]
    fn bare_text_with_commas() {
        let a = parse_action_input("query = poles, zeros and gain, sys = sys [3]").unwrap();
        assert_eq!(a.str("query").unwrap(), "poles, zeros and gain");
        assert_eq!(a.str("sys").unwrap(), "sys [3]");
    }

    #[test]
    fn errors_carry_spans() {
        match parse_action_input("A = [[1, 2], [3").unwrap_err() {
            AgentError::ArgParse { start, end, .. } => assert!(start <= end),
            e => panic!("{e}"),
        }
        assert!(parse_action_input("num [1, 3]").is_err());
        assert!(parse_action_input("= 3").is_err());
        assert!(parse_action_input("a = 1, a = 2").is_err());
    }

    #[test]
    fn flat_list_as_column() {
        let a = parse_action_input("B = [0, 1]").unwrap();
        assert_eq!(a.column_matrix("B").unwrap().shape(), (2, 1));
        assert_eq!(a.matrix("B").unwrap().shape(), (1, 2));
    }

    #[test]
    fn trailing_period() {
        let a = parse_action_input("num = [1, 3], den = [1, -2, -3].").unwrap();
        assert_eq!(a.vector("den").unwrap(), vec![1.0, -2.0, -3.0]);
    }
}
