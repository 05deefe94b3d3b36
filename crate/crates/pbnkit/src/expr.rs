//! Boolean expression trees: evaluation, parsing, printing, and synthesis
//! from truth tables.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A Boolean expression over named network nodes.
///
/// The concrete syntax accepted by [`parse_expr`] (and produced by the
/// [`Display`](fmt::Display) impl) is:
///
/// ```text
/// expr   := term (('|' | '^') term)*
/// term   := factor ('&' factor)*
/// factor := '!' factor | '(' expr ')' | '0' | '1' | ident
/// ```
///
/// `&` binds tighter than `|` and `^`; `|` and `^` share a precedence level
/// and associate to the left. Whitespace is insignificant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Const(bool),
    Var(String),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
}

/// A variable was referenced that the assignment (or node set) does not bind.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unbound variable `{0}`")]
pub struct UnboundVariable(pub String);

/// Syntax error with a 1-based character position into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct ExprParseError {
    pub position: usize,
    pub message: String,
}

/// Truth-table synthesis rejected its input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("truth table has {got} rows, expected {expected} for {inputs} inputs")]
    LengthMismatch {
        inputs: usize,
        expected: usize,
        got: usize,
    },
}

impl BoolExpr {
    pub fn var(name: impl Into<String>) -> Self {
        BoolExpr::Var(name.into())
    }

    pub fn not(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn xor(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Xor(Box::new(a), Box::new(b))
    }

    /// Evaluates under `lookup`, which maps a variable name to its truth
    /// value. Returns the first unbound variable encountered, if any.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<bool, UnboundVariable>
    where
        F: Fn(&str) -> Option<bool>,
    {
        match self {
            BoolExpr::Const(v) => Ok(*v),
            BoolExpr::Var(name) => {
                lookup(name).ok_or_else(|| UnboundVariable(name.clone()))
            }
            BoolExpr::Not(e) => Ok(!e.eval_with(lookup)?),
            BoolExpr::And(a, b) => Ok(a.eval_with(lookup)? & b.eval_with(lookup)?),
            BoolExpr::Or(a, b) => Ok(a.eval_with(lookup)? | b.eval_with(lookup)?),
            BoolExpr::Xor(a, b) => Ok(a.eval_with(lookup)? ^ b.eval_with(lookup)?),
        }
    }

    /// Evaluates against an explicit assignment.
    pub fn eval<S: std::hash::BuildHasher>(
        &self,
        assignment: &std::collections::HashMap<String, bool, S>,
    ) -> Result<bool, UnboundVariable> {
        self.eval_with(&|name| assignment.get(name).copied())
    }

    /// The set of variable names syntactically occurring in the expression.
    pub fn support(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_support(&mut out);
        out
    }

    fn collect_support(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Var(name) => {
                out.insert(name.clone());
            }
            BoolExpr::Not(e) => e.collect_support(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) | BoolExpr::Xor(a, b) => {
                a.collect_support(out);
                b.collect_support(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            BoolExpr::Or(..) | BoolExpr::Xor(..) => 1,
            BoolExpr::And(..) => 2,
            BoolExpr::Not(_) => 3,
            BoolExpr::Const(_) | BoolExpr::Var(_) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            BoolExpr::Const(false) => write!(f, "0")?,
            BoolExpr::Const(true) => write!(f, "1")?,
            BoolExpr::Var(name) => write!(f, "{name}")?,
            BoolExpr::Not(e) => {
                write!(f, "!")?;
                e.fmt_prec(f, 3)?;
            }
            BoolExpr::And(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                // strict: And is left-associative
                b.fmt_prec(f, 3)?;
            }
            BoolExpr::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 2)?;
            }
            BoolExpr::Xor(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " ^ ")?;
                b.fmt_prec(f, 2)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parses the predictor expression grammar. Positions in errors are 1-based
/// character offsets.
pub fn parse_expr(text: &str) -> Result<BoolExpr, ExprParseError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected character `{c}`")));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize, // 0-based index into chars
}

impl Parser {
    fn new(text: &str) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: impl Into<String>) -> ExprParseError {
        ExprParseError {
            position: self.pos + 1,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<BoolExpr, ExprParseError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('|') => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = BoolExpr::or(lhs, rhs);
                }
                Some('^') => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = BoolExpr::xor(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<BoolExpr, ExprParseError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            if self.peek() == Some('&') {
                self.bump();
                let rhs = self.factor()?;
                lhs = BoolExpr::and(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<BoolExpr, ExprParseError> {
        self.skip_ws();
        match self.peek() {
            Some('!') => {
                self.bump();
                Ok(BoolExpr::not(self.factor()?))
            }
            Some('(') => {
                self.bump();
                let e = self.expr()?;
                self.skip_ws();
                if self.peek() == Some(')') {
                    self.bump();
                    Ok(e)
                } else {
                    Err(self.error("expected `)`"))
                }
            }
            Some('0') => {
                self.bump();
                Ok(BoolExpr::Const(false))
            }
            Some('1') => {
                self.bump();
                Ok(BoolExpr::Const(true))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(c) = self.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        name.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(BoolExpr::Var(name))
            }
            Some(c) => Err(self.error(format!("unexpected character `{c}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Builds the canonical minterm disjunction reproducing a truth table.
///
/// `outputs[r]` is the value for the assignment whose bits are the binary
/// digits of `r`, most significant digit first — so `inputs[0]` is the
/// most significant input. An all-false table yields `Const(false)`; an
/// empty input list yields the constant `outputs[0]`.
pub fn synthesize_from_truth_table(
    inputs: &[impl AsRef<str>],
    outputs: &[bool],
) -> Result<BoolExpr, SynthesisError> {
    let k = inputs.len();
    let expected = 1usize
        .checked_shl(k as u32)
        .filter(|_| k < usize::BITS as usize)
        .unwrap_or(usize::MAX);
    if outputs.len() != expected {
        return Err(SynthesisError::LengthMismatch {
            inputs: k,
            expected,
            got: outputs.len(),
        });
    }

    let mut result: Option<BoolExpr> = None;
    for (row, &value) in outputs.iter().enumerate() {
        if !value {
            continue;
        }
        let mut minterm: Option<BoolExpr> = None;
        for (j, name) in inputs.iter().enumerate() {
            let bit = (row >> (k - 1 - j)) & 1 == 1;
            let lit = if bit {
                BoolExpr::var(name.as_ref())
            } else {
                BoolExpr::not(BoolExpr::var(name.as_ref()))
            };
            minterm = Some(match minterm {
                None => lit,
                Some(m) => BoolExpr::and(m, lit),
            });
        }
        // k == 0: the single row's minterm is the empty conjunction
        let minterm = minterm.unwrap_or(BoolExpr::Const(true));
        result = Some(match result {
            None => minterm,
            Some(r) => BoolExpr::or(r, minterm),
        });
    }
    Ok(result.unwrap_or(BoolExpr::Const(false)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn assignment(pairs: &[(&str, bool)]) -> HashMap<String, bool> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn parse_and_of_vars() {
        let e = parse_expr("x1 & x2").unwrap();
        assert_eq!(e, BoolExpr::and(BoolExpr::var("x1"), BoolExpr::var("x2")));
    }

    #[test]
    fn parse_const_zero() {
        assert_eq!(parse_expr("0").unwrap(), BoolExpr::Const(false));
    }

    #[test]
    fn parse_negated_group() {
        let e = parse_expr("!(x1 | x3)").unwrap();
        assert_eq!(
            e,
            BoolExpr::not(BoolExpr::or(BoolExpr::var("x1"), BoolExpr::var("x3")))
        );
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let e = parse_expr("a | b & c").unwrap();
        assert_eq!(
            e,
            BoolExpr::or(
                BoolExpr::var("a"),
                BoolExpr::and(BoolExpr::var("b"), BoolExpr::var("c"))
            )
        );
    }

    #[test]
    fn or_and_xor_associate_left() {
        let e = parse_expr("a | b ^ c").unwrap();
        assert_eq!(
            e,
            BoolExpr::xor(
                BoolExpr::or(BoolExpr::var("a"), BoolExpr::var("b")),
                BoolExpr::var("c")
            )
        );
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_expr("   ").unwrap_err();
        assert_eq!(err.position, 4);
    }

    #[test]
    fn error_position_is_one_based() {
        let err = parse_expr("x1 & %").unwrap_err();
        assert_eq!(err.position, 6);
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse_expr("x1 )").is_err());
        assert!(parse_expr("(x1").is_err());
        assert!(parse_expr("x1 &").is_err());
    }

    #[test]
    fn eval_basic_tables() {
        let and = parse_expr("x1 & x2").unwrap();
        assert!(!and.eval(&assignment(&[("x1", false), ("x2", false)])).unwrap());

        // full table for the OR form
        let or = parse_expr("x1 | x2").unwrap();
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let got = or.eval(&assignment(&[("x1", a), ("x2", b)])).unwrap();
            assert_eq!(got, a | b);
        }

        let xor = parse_expr("x1 ^ x1").unwrap();
        for v in [false, true] {
            assert!(!xor.eval(&assignment(&[("x1", v)])).unwrap());
        }
    }

    #[test]
    fn eval_reports_unbound_variable() {
        let e = parse_expr("x1 & missing").unwrap();
        let err = e.eval(&assignment(&[("x1", true)])).unwrap_err();
        assert_eq!(err, UnboundVariable("missing".into()));
    }

    #[test]
    fn support_is_syntactic() {
        assert_eq!(
            parse_expr("x1 & x2").unwrap().support(),
            ["x1", "x2"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(
            parse_expr("x1 | x1 & x3").unwrap().support(),
            ["x1", "x3"].iter().map(|s| s.to_string()).collect()
        );
        assert!(BoolExpr::Const(false).support().is_empty());
    }

    fn table_of(e: &BoolExpr, inputs: &[&str]) -> Vec<bool> {
        let k = inputs.len();
        (0..1usize << k)
            .map(|row| {
                e.eval_with(&|name| {
                    inputs
                        .iter()
                        .position(|n| *n == name)
                        .map(|j| (row >> (k - 1 - j)) & 1 == 1)
                })
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn synthesis_reproduces_and_table() {
        let e = synthesize_from_truth_table(&["x1", "x2"], &[false, false, false, true]).unwrap();
        assert_eq!(table_of(&e, &["x1", "x2"]), vec![false, false, false, true]);
    }

    #[test]
    fn synthesis_of_all_false_is_const() {
        let e = synthesize_from_truth_table(&["x1", "x2"], &[false; 4]).unwrap();
        assert_eq!(e, BoolExpr::Const(false));
    }

    #[test]
    fn synthesis_reproduces_or_table() {
        let e = synthesize_from_truth_table(&["x1", "x2"], &[false, true, true, true]).unwrap();
        assert_eq!(table_of(&e, &["x1", "x2"]), vec![false, true, true, true]);
    }

    #[test]
    fn synthesis_rejects_length_mismatch() {
        let err = synthesize_from_truth_table(&["x1", "x2"], &[false; 3]).unwrap_err();
        assert_eq!(
            err,
            SynthesisError::LengthMismatch {
                inputs: 2,
                expected: 4,
                got: 3
            }
        );
    }

    #[test]
    fn synthesis_with_no_inputs_is_constant() {
        assert_eq!(
            synthesize_from_truth_table::<&str>(&[], &[true]).unwrap(),
            BoolExpr::Const(true)
        );
    }

    #[test]
    fn display_round_trips_structurally() {
        for text in [
            "x1 & x2",
            "!(x1 | x3)",
            "a | b ^ c",
            "a ^ (b | c)",
            "!a & !b & !c",
            "0",
            "1",
            "a & (b | c) ^ !d",
        ] {
            let e = parse_expr(text).unwrap();
            let printed = e.to_string();
            let reparsed = parse_expr(&printed).unwrap();
            assert_eq!(e, reparsed, "round trip of `{text}` via `{printed}`");
        }
    }
}
