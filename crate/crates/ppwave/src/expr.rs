//! Symbolic expressions for profile functions.
//!
//! The profile `H(u, x1..xn)` of a metric in Brinkmann coordinates is entered
//! as text in a small grammar and kept as an expression tree. Differentiation
//! is exact on the tree; this is what lets the plane-wave test decide whether
//! third derivatives vanish structurally instead of guessing from samples.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' unary)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := exp | log | sin | cos | sinh | cosh | sqrt
//! ident  := u | x1..xn | bound constant names
//! ```
//!
//! Bound constants are substituted at parse time, so a parsed tree contains
//! only literals, `u`, and `x1..xn`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Built-in scalar functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Differentiation targets: the distinguished coordinate `u` (that is, x⁺)
/// or a transverse variable `x<k>` with 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    U,
    X(usize),
}

/// Expression tree over real literals, `u`, `x1..xn`, arithmetic, and the
/// built-in functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    U,
    X(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Fun(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// True when the tree is the literal zero. Derivatives fold constants, so
    /// a vanishing derivative of a polynomial collapses to this form.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Largest transverse variable index referenced, or 0 if none.
    pub fn max_var_index(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::U => 0,
            Expr::X(k) => *k,
            Expr::Neg(e) | Expr::Fun(_, e) => e.max_var_index(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_var_index().max(b.max_var_index()),
        }
    }

    /// Recursive evaluation. Domain violations are reported, never folded
    /// into silent NaNs.
    pub fn eval(&self, u: f64, x: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::U => u,
            Expr::X(k) => *x
                .get(*k - 1)
                .ok_or_else(|| Error::Domain(format!("x{k} evaluated with {}-vector", x.len())))?,
            Expr::Neg(e) => -e.eval(u, x)?,
            Expr::Add(a, b) => a.eval(u, x)? + b.eval(u, x)?,
            Expr::Sub(a, b) => a.eval(u, x)? - b.eval(u, x)?,
            Expr::Mul(a, b) => a.eval(u, x)? * b.eval(u, x)?,
            Expr::Div(a, b) => {
                let d = b.eval(u, x)?;
                if d == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a.eval(u, x)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval(u, x)?;
                let ex = b.eval(u, x)?;
                if base < 0.0 && ex.fract() != 0.0 {
                    return Err(Error::Domain(format!("({base})^{ex} is not real")));
                }
                if base == 0.0 && ex < 0.0 {
                    return Err(Error::Domain("zero raised to a negative power".into()));
                }
                base.powf(ex)
            }
            Expr::Fun(f, e) => {
                let v = e.eval(u, x)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(Error::Domain(format!("log({v}) is not real")));
                        }
                        v.ln()
                    }
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(Error::Domain(format!("sqrt({v}) is not real")));
                        }
                        v.sqrt()
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(Error::Domain(
                "evaluation overflowed the double range".into(),
            ));
        }
        Ok(v)
    }

    /// Exact partial derivative with respect to `var`. Trees produced here use
    /// the folding constructors below, so derivatives of polynomials collapse
    /// to literal zeros; no general simplification is attempted.
    pub fn derive(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) => Expr::num(0.0),
            Expr::U => Expr::num(if var == Var::U { 1.0 } else { 0.0 }),
            Expr::X(k) => Expr::num(if var == Var::X(*k) { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derive(var)),
            Expr::Add(a, b) => add(a.derive(var), b.derive(var)),
            Expr::Sub(a, b) => sub(a.derive(var), b.derive(var)),
            Expr::Mul(a, b) => add(
                mul(a.derive(var), (**b).clone()),
                mul((**a).clone(), b.derive(var)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2
                let da = a.derive(var);
                let db = b.derive(var);
                sub(
                    div(da, (**b).clone()),
                    div(mul((**a).clone(), db), mul((**b).clone(), (**b).clone())),
                )
            }
            Expr::Pow(a, b) => {
                let da = a.derive(var);
                if let Expr::Num(c) = **b {
                    // c constant: (a^c)' = c a^(c-1) a'
                    if c == 0.0 {
                        return Expr::num(0.0);
                    }
                    return mul(
                        mul(Expr::num(c), pow((**a).clone(), Expr::num(c - 1.0))),
                        da,
                    );
                }
                // general: a^b = e^{b log a}
                let db = b.derive(var);
                mul(
                    pow((**a).clone(), (**b).clone()),
                    add(
                        mul(db, Expr::Fun(Func::Log, a.clone())),
                        div(mul((**b).clone(), da), (**a).clone()),
                    ),
                )
            }
            Expr::Fun(f, e) => {
                let de = e.derive(var);
                let outer = match f {
                    Func::Exp => Expr::Fun(Func::Exp, e.clone()),
                    Func::Log => div(Expr::num(1.0), (**e).clone()),
                    Func::Sin => Expr::Fun(Func::Cos, e.clone()),
                    Func::Cos => neg(Expr::Fun(Func::Sin, e.clone())),
                    Func::Sinh => Expr::Fun(Func::Cosh, e.clone()),
                    Func::Cosh => Expr::Fun(Func::Sinh, e.clone()),
                    Func::Sqrt => div(Expr::num(0.5), Expr::Fun(Func::Sqrt, e.clone())),
                };
                match f {
                    Func::Log | Func::Sqrt => mul(outer, de),
                    _ => mul(outer, de),
                }
            }
        }
    }
}

// Folding constructors: collapse additive/multiplicative identities and fold
// literal arithmetic so that structurally-zero derivatives become Num(0).

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::num(x + y),
        (a, b) if a.is_zero() => b,
        (a, b) if b.is_zero() => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::num(x - y),
        (a, b) if b.is_zero() => a,
        (a, b) if a.is_zero() => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

#[allow(clippy::redundant_guards)] // float literals in patterns read worse
fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::num(x * y),
        (a, _) if a.is_zero() => Expr::num(0.0),
        (_, b) if b.is_zero() => Expr::num(0.0),
        (Expr::Num(v), b) if v == 1.0 => b,
        (a, Expr::Num(v)) if v == 1.0 => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

#[allow(clippy::redundant_guards)]
fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if a.is_zero() => Expr::num(0.0),
        (a, Expr::Num(v)) if v == 1.0 => a,
        (Expr::Num(x), Expr::Num(y)) if y != 0.0 => Expr::num(x / y),
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(v)) if *v == 0.0 => Expr::num(1.0),
        (_, Expr::Num(v)) if *v == 1.0 => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

// Printing with minimal parentheses; `print(parse(t))` re-parses to the
// identical tree.

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn fmt_child(e: &Expr, parent: u8, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(e);
    // Right operands of -, /, ^ need parens at equal precedence.
    let need = p < parent || (p == parent && right);
    if need {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    // keep negative literals re-parseable as unary minus
                    write!(f, "-{}", format_double(-*v))
                } else {
                    write!(f, "{}", format_double(*v))
                }
            }
            Expr::U => write!(f, "u"),
            Expr::X(k) => write!(f, "x{k}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                fmt_child(e, 3, true, f)
            }
            Expr::Add(a, b) => {
                fmt_child(a, 1, false, f)?;
                write!(f, " + ")?;
                fmt_child(b, 1, true, f)
            }
            Expr::Sub(a, b) => {
                fmt_child(a, 1, false, f)?;
                write!(f, " - ")?;
                fmt_child(b, 1, true, f)
            }
            Expr::Mul(a, b) => {
                fmt_child(a, 2, false, f)?;
                write!(f, "*")?;
                fmt_child(b, 2, true, f)
            }
            Expr::Div(a, b) => {
                fmt_child(a, 2, false, f)?;
                write!(f, "/")?;
                fmt_child(b, 2, true, f)
            }
            Expr::Pow(a, b) => {
                fmt_child(a, 4, true, f)?;
                write!(f, "^")?;
                fmt_child(b, 4, false, f)
            }
            Expr::Fun(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

fn format_double(v: f64) -> String {
    // shortest representation that round-trips
    let s = format!("{v}");
    s
}

// Tokenizer and recursive-descent parser.

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting byte offset; `None` at end of input.
    fn next(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < self.src.len()
                    && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E')
                {
                    let mut look = self.pos + 1;
                    if look < self.src.len() && (self.src[look] == b'+' || self.src[look] == b'-') {
                        look += 1;
                    }
                    if look < self.src.len() && self.src[look].is_ascii_digit() {
                        self.pos = look;
                        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                Tok::Num(v)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(
                    std::str::from_utf8(&self.src[start..self.pos])
                        .unwrap()
                        .to_string(),
                )
            }
            other => {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((tok, start)))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end: usize,
    n: usize,
    constants: &'a HashMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(v) => Expr::num(-v),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let offset = self.here();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Expr::num(v)),
            Some((Tok::LParen, _)) => {
                let e = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(e),
                    _ => Err(Error::Syntax {
                        offset: self.here(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((Tok::Ident(name), off)) => self.ident(name, off),
            Some((tok, off)) => Err(Error::Syntax {
                offset: off,
                message: format!("expected a value, found `{tok:?}`"),
            }),
            None => Err(Error::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<Expr> {
        if let Some(func) = Func::from_name(&name) {
            match self.bump() {
                Some((Tok::LParen, _)) => {}
                _ => {
                    return Err(Error::Syntax {
                        offset: self.here(),
                        message: format!("expected `(` after `{name}`"),
                    })
                }
            }
            let arg = self.expr()?;
            match self.bump() {
                Some((Tok::RParen, _)) => {}
                _ => {
                    return Err(Error::Syntax {
                        offset: self.here(),
                        message: "expected `)`".into(),
                    })
                }
            }
            return Ok(Expr::Fun(func, Box::new(arg)));
        }
        if name == "u" {
            return Ok(Expr::U);
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = rest.parse().map_err(|_| Error::Syntax {
                    offset,
                    message: format!("bad variable index in `{name}`"),
                })?;
                if index == 0 || index > self.n {
                    return Err(Error::VarOutOfRange {
                        index,
                        n: self.n,
                        offset,
                    });
                }
                return Ok(Expr::X(index));
            }
        }
        match self.constants.get(&name) {
            Some(v) => Ok(Expr::num(*v)),
            None => Err(Error::UnknownIdent { name, offset }),
        }
    }
}

/// Parse `text` into an expression over `u`, `x1..xn`, binding any other
/// identifiers through `constants`.
pub fn parse_expr(text: &str, n: usize, constants: &HashMap<String, f64>) -> Result<Expr> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        end: text.len(),
        n,
        constants,
    };
    let e = parser.expr()?;
    if let Some((tok, offset)) = parser.peek() {
        return Err(Error::Syntax {
            offset: *offset,
            message: format!("unexpected trailing token `{tok:?}`"),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str, n: usize) -> Expr {
        parse_expr(text, n, &HashMap::new()).unwrap()
    }

    #[test]
    fn parses_direct_grammar_case() {
        let e = p("exp(2*x1)", 1);
        assert_eq!(
            e,
            Expr::Fun(
                Func::Exp,
                Box::new(Expr::Mul(Box::new(Expr::num(2.0)), Box::new(Expr::X(1))))
            )
        );
    }

    #[test]
    fn parses_with_bound_constants() {
        let mut consts = HashMap::new();
        consts.insert("c".to_string(), 1.0);
        consts.insert("a1".to_string(), 1.0);
        consts.insert("a2".to_string(), 1.0);
        let e = parse_expr("c*exp(a1*x1 - a2*x2)", 2, &consts).unwrap();
        assert!((e.eval(0.0, &[0.3, 0.1]).unwrap() - (0.3f64 - 0.1).exp()).abs() < 1e-15);
    }

    #[test]
    fn syntax_error_carries_offset() {
        let err = parse_expr("x1^3 +", 1, &HashMap::new()).unwrap_err();
        match err {
            Error::Syntax { offset, .. } => assert_eq!(offset, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let err = parse_expr("x2 + 1", 1, &HashMap::new()).unwrap_err();
        match err {
            Error::VarOutOfRange { index, n, .. } => {
                assert_eq!((index, n), (2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unbound_identifier() {
        let err = parse_expr("q*x1", 1, &HashMap::new()).unwrap_err();
        assert!(matches!(err, Error::UnknownIdent { .. }));
    }

    #[test]
    fn eval_examples() {
        let e = p("exp(2*x1)", 1);
        assert_eq!(e.eval(0.0, &[0.0]).unwrap(), 1.0);
        assert!((e.eval(0.0, &[0.5]).unwrap() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_are_reported() {
        let e = p("log(x1)", 1);
        assert!(matches!(e.eval(0.0, &[-1.0]), Err(Error::Domain(_))));
        let s = p("sqrt(x1)", 1);
        assert!(matches!(s.eval(0.0, &[-0.5]), Err(Error::Domain(_))));
        let d = p("1/x1", 1);
        assert!(matches!(d.eval(0.0, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn second_derivative_of_exp() {
        let e = p("exp(2*x1)", 1);
        let dd = e.derive(Var::X(1)).derive(Var::X(1));
        assert!((dd.eval(0.0, &[0.0]).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_third_derivative_is_structurally_zero() {
        let e = p("(x1^2 - x2^2)/2", 2);
        let d3 = e.derive(Var::X(1)).derive(Var::X(1)).derive(Var::X(1));
        assert!(d3.is_zero());
        let laplace = Expr::Add(
            Box::new(e.derive(Var::X(1)).derive(Var::X(1))),
            Box::new(e.derive(Var::X(2)).derive(Var::X(2))),
        );
        assert_eq!(laplace.eval(0.7, &[0.1, -0.4]).unwrap(), 0.0);
    }

    #[test]
    fn power_rule_general_exponent() {
        // d/dx x^u at x=2, u=3 is 3*2^2 = 12
        let e = p("x1^u", 1);
        let d = e.derive(Var::X(1));
        assert!((d.eval(3.0, &[2.0]).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn print_parse_round_trip_is_identity() {
        for text in [
            "exp(2*x1)",
            "x1^3 + u*x1 - 4",
            "sin(x1)*cos(x2)/(1 + x1^2)",
            "-x1 + -2*u",
            "sqrt(1 + x1^2)",
            "x1^-2",
            "2*x1^2^3",
            "(x1 + u)*(x1 - u)",
        ] {
            let once = p(text, 2);
            let printed = once.to_string();
            let twice = p(&printed, 2);
            assert_eq!(once, twice, "round trip failed for `{text}` -> `{printed}`");
        }
    }
}
