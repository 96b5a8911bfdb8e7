//! Line-oriented parser for the identity corpus language.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::ast::{Base, Constant, Expr, Func, IdentityRecord, Monomial, PointSpec, RecordKind};
use crate::qseries::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{col}: duplicate id {id}")]
    DuplicateId { line: usize, col: usize, id: String },
    #[error("{line}:{col}: unknown function {name}")]
    UnknownFunction { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {message}")]
    Invalid {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::DuplicateId { line, col, .. }
            | ParseError::UnknownFunction { line, col, .. }
            | ParseError::Invalid { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Dec(Rational),
    Str(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Dec(r) => format!("number {r}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::End => "end of line".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(line_no: usize, text: &str, col0: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fs..i].iter().collect();
                let digits = format!("{int_part}{frac}");
                let num: BigInt = digits.parse().unwrap_or_default();
                let den = num_traits::pow(BigInt::from(10), frac.len());
                out.push(Token {
                    tok: Tok::Dec(Rational::new(num, den)),
                    col,
                });
            } else {
                out.push(Token {
                    tok: Tok::Int(int_part.parse().expect("digits")),
                    col,
                });
            }
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ParseError::Syntax {
                            line: line_no,
                            col,
                            expected: "closing '\"'".into(),
                            found: "end of line".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                        s.push(chars[i + 1]);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), col });
        } else if "+-*/^(),=:".contains(c) {
            out.push(Token { tok: Tok::Sym(c), col });
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                line: line_no,
                col,
                expected: "a token".into(),
                found: format!("'{c}'"),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        col: col0 + chars.len(),
    });
    Ok(out)
}

/// What names an expression may use, and which constructs are allowed.
#[derive(Debug, Clone)]
struct Scope {
    names: HashSet<String>,
    series: bool,
    in_int: bool,
    q_bound: bool,
    alpha_beta: bool,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
}

const RESERVED: &[&str] = &[
    "q", "t", "alpha", "beta", "pi", "gamma34", "phi", "psi", "f", "chi", "V", "sqrt", "cbrt", "root", "exp", "diff",
    "at", "int", "let", "lhs", "rhs", "note", "identity", "ref",
];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn col(&self) -> usize {
        self.toks[self.pos].col
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn invalid(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError::Invalid {
            line: self.line,
            col,
            message: message.into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("'{c}'")))
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), ParseError> {
        if *self.peek() == Tok::Ident(word.into()) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("'{word}'")))
        }
    }

    fn expect_int(&mut self) -> Result<BigInt, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.err("an integer")),
        }
    }

    fn small_int(&mut self, what: &str) -> Result<u32, ParseError> {
        let col = self.col();
        let n = self.expect_int()?;
        n.to_u32().ok_or_else(|| self.invalid(col, format!("{what} out of range")))
    }

    fn at_end(&self) -> bool {
        *self.peek() == Tok::End
    }

    // expr := ['-'] term (('+'|'-') term)*
    fn expr(&mut self, scope: &Scope) -> Result<Expr, ParseError> {
        let mut lhs = if *self.peek() == Tok::Sym('-') {
            self.bump();
            let literal = matches!(self.peek(), Tok::Int(_) | Tok::Dec(_));
            match self.term(scope)? {
                Expr::Num(r) if literal => Expr::Num(-r),
                t => Expr::Neg(Box::new(t)),
            }
        } else {
            self.term(scope)?
        };
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term(scope)?));
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term(scope)?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self, scope: &Scope) -> Result<Expr, ParseError> {
        let mut lhs = self.power(scope)?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power(scope)?));
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.power(scope)?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self, scope: &Scope) -> Result<Expr, ParseError> {
        let base = self.atom(scope)?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let e = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    // exponent := INT | '(' ['-'] INT ['/' INT] ')'
    fn exponent(&mut self) -> Result<Ratio<i64>, ParseError> {
        let col = self.col();
        let (neg, num, den) = if *self.peek() == Tok::Sym('(') {
            self.bump();
            let neg = if *self.peek() == Tok::Sym('-') {
                self.bump();
                true
            } else {
                false
            };
            let num = self.expect_int()?;
            let den = if *self.peek() == Tok::Sym('/') {
                self.bump();
                self.expect_int()?
            } else {
                BigInt::one()
            };
            self.expect_sym(')')?;
            (neg, num, den)
        } else {
            (false, self.expect_int()?, BigInt::one())
        };
        let (n, d) = match (num.to_i64(), den.to_i64()) {
            (Some(n), Some(d)) if d != 0 && n.abs() <= 1 << 20 && d <= 1 << 20 => (n, d),
            _ => return Err(self.invalid(col, "exponent out of range")),
        };
        Ok(Ratio::new(if neg { -n } else { n }, d))
    }

    // ARG := ['-'] ('q'|'t') ['^' exponent]
    fn monomial(&mut self, scope: &Scope) -> Result<Monomial, ParseError> {
        let sign = if *self.peek() == Tok::Sym('-') {
            self.bump();
            -1
        } else {
            1
        };
        let col = self.col();
        let base = match self.peek() {
            Tok::Ident(s) if s == "q" => Base::Q,
            Tok::Ident(s) if s == "t" => Base::T,
            _ => return Err(self.err("'q' or 't' in a function argument")),
        };
        if base == Base::T && !scope.in_int {
            return Err(self.invalid(col, "'t' is only bound inside int(...)"));
        }
        if base == Base::Q && !scope.q_bound {
            return Err(self.invalid(col, "'q' is not bound here"));
        }
        self.bump();
        let exp = if *self.peek() == Tok::Sym('^') {
            self.bump();
            self.exponent()?
        } else {
            Ratio::one()
        };
        if exp <= Ratio::zero() {
            return Err(self.invalid(col, "argument exponent must be positive"));
        }
        Ok(Monomial { base, sign, exp })
    }

    fn atom(&mut self, scope: &Scope) -> Result<Expr, ParseError> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Num(Rational::from_integer(n)))
            }
            Tok::Dec(r) => {
                self.bump();
                Ok(Expr::Num(r))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr(scope)?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::Sym('(') {
                    self.bump();
                    let e = self.call(&name, col, scope)?;
                    self.expect_sym(')')?;
                    Ok(e)
                } else {
                    self.name(&name, col, scope)
                }
            }
            _ => Err(self.err("an expression")),
        }
    }

    fn name(&mut self, name: &str, col: usize, scope: &Scope) -> Result<Expr, ParseError> {
        let restrict = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(self.invalid(col, msg)) };
        match name {
            "pi" | "gamma34" => {
                restrict(!scope.series, "constants are not allowed in series records")?;
                Ok(Expr::Const(if name == "pi" { Constant::Pi } else { Constant::Gamma34 }))
            }
            "q" => {
                restrict(scope.q_bound, "'q' is not bound here")?;
                Ok(Expr::Var(name.into()))
            }
            "t" => {
                restrict(scope.in_int, "'t' is only bound inside int(...)")?;
                Ok(Expr::Var(name.into()))
            }
            "alpha" | "beta" => {
                restrict(scope.alpha_beta, "alpha and beta are only bound at alpha/beta points")?;
                Ok(Expr::Var(name.into()))
            }
            _ if scope.names.contains(name) => Ok(Expr::Var(name.into())),
            _ => Err(self.invalid(col, format!("unknown name {name}"))),
        }
    }

    fn call(&mut self, name: &str, col: usize, scope: &Scope) -> Result<Expr, ParseError> {
        if let Some(func) = Func::from_name(name) {
            let m = self.monomial(scope)?;
            return Ok(Expr::Call(func, m));
        }
        let numeric_only = |p: &Self| {
            if scope.series {
                Err(p.invalid(col, format!("{name}(...) is not allowed in series records")))
            } else {
                Ok(())
            }
        };
        match name {
            "sqrt" | "cbrt" => {
                let e = self.expr(scope)?;
                Ok(Expr::Root(if name == "sqrt" { 2 } else { 3 }, Box::new(e)))
            }
            "root" => {
                let n = self.small_int("root index")?;
                if n < 2 {
                    return Err(self.invalid(col, "root index must be at least 2"));
                }
                self.expect_sym(',')?;
                Ok(Expr::Root(n, Box::new(self.expr(scope)?)))
            }
            "exp" => {
                numeric_only(self)?;
                Ok(Expr::Exp(Box::new(self.expr(scope)?)))
            }
            "diff" => {
                if !scope.series {
                    return Err(self.invalid(col, "diff(...) is only allowed in series records"));
                }
                Ok(Expr::Diff(Box::new(self.expr(scope)?)))
            }
            "at" => {
                numeric_only(self)?;
                let inner = Scope {
                    q_bound: true,
                    ..scope.clone()
                };
                let body = self.expr(&inner)?;
                self.expect_sym(',')?;
                self.expect_ident("q")?;
                self.expect_sym('=')?;
                let value = self.expr(scope)?;
                Ok(Expr::At(Box::new(body), Box::new(value)))
            }
            "int" => {
                numeric_only(self)?;
                let inner = Scope {
                    in_int: true,
                    ..scope.clone()
                };
                let body = self.expr(&inner)?;
                self.expect_sym(',')?;
                let lo = self.expr(scope)?;
                self.expect_sym(',')?;
                let hi = self.expr(scope)?;
                Ok(Expr::Int(Box::new(body), Box::new(lo), Box::new(hi)))
            }
            _ => Err(ParseError::UnknownFunction {
                line: self.line,
                col,
                name: name.into(),
            }),
        }
    }
}

fn kind_scope(kind: &RecordKind, names: &HashSet<String>) -> Scope {
    match kind {
        RecordKind::Series { .. } => Scope {
            names: names.clone(),
            series: true,
            in_int: false,
            q_bound: true,
            alpha_beta: false,
        },
        RecordKind::Numeric { points, .. } => {
            let ab = points.iter().any(|p| matches!(p, PointSpec::AlphaBeta(..)));
            Scope {
                names: names.clone(),
                series: false,
                in_int: false,
                q_bound: !ab,
                alpha_beta: ab,
            }
        }
    }
}

/// Parse a whole expression from `text`; `q` is bound, numeric constructs allowed.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(1, text, 1)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        line: 1,
    };
    let scope = Scope {
        names: HashSet::new(),
        series: false,
        in_int: false,
        q_bound: true,
        alpha_beta: false,
    };
    let e = p.expr(&scope)?;
    if !p.at_end() {
        return Err(p.err("end of expression"));
    }
    Ok(e)
}

/// `EXPR [at q=VALUE]`, the form accepted on the command line. Without a
/// point, `EXPR` must be a closed form.
pub fn parse_eval_input(text: &str) -> Result<(Expr, Option<Expr>), ParseError> {
    let toks = lex(1, text, 1)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        line: 1,
    };
    let scope = Scope {
        names: HashSet::new(),
        series: false,
        in_int: false,
        q_bound: true,
        alpha_beta: false,
    };
    let e = p.expr(&scope)?;
    if p.at_end() {
        return Ok((e, None));
    }
    p.expect_ident("at")?;
    p.expect_ident("q")?;
    p.expect_sym('=')?;
    let closed = Scope { q_bound: false, ..scope };
    let v = p.expr(&closed)?;
    if !p.at_end() {
        return Err(p.err("end of input"));
    }
    Ok((e, Some(v)))
}

fn parse_header(line_no: usize, rest: &str, col0: usize) -> Result<(String, usize, RecordKind, String), ParseError> {
    // ID is the first whitespace-free run after "identity"
    let trimmed = rest.trim_start();
    let id_col = col0 + (rest.len() - trimmed.len());
    let id_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
    let id = trimmed[..id_len].to_string();
    if id.is_empty() {
        return Err(ParseError::Syntax {
            line: line_no,
            col: id_col,
            expected: "an identity id".into(),
            found: "end of line".into(),
        });
    }
    let toks = lex(line_no, &trimmed[id_len..], id_col + id_len)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        line: line_no,
    };
    let kind = match p.peek().clone() {
        Tok::Ident(k) if k == "series" => {
            p.bump();
            p.expect_ident("order")?;
            p.expect_sym('=')?;
            let order = p.small_int("order")?;
            let lattice = if *p.peek() == Tok::Ident("lattice".into()) {
                p.bump();
                p.expect_sym('=')?;
                let col = p.col();
                let l = p.small_int("lattice")?;
                if l == 0 || l > crate::qseries::DEFAULT_LATTICE_BOUND {
                    return Err(p.invalid(col, "lattice must be in 1..=24"));
                }
                l
            } else {
                1
            };
            RecordKind::Series { order, lattice }
        }
        Tok::Ident(k) if k == "numeric" => {
            p.bump();
            p.expect_ident("digits")?;
            p.expect_sym('=')?;
            let digits = p.small_int("digits")?;
            p.expect_ident("at")?;
            let mut points = Vec::new();
            let closed = Scope {
                names: HashSet::new(),
                series: false,
                in_int: false,
                q_bound: false,
                alpha_beta: false,
            };
            loop {
                match p.peek().clone() {
                    Tok::Ident(w) if w == "q" => {
                        p.bump();
                        p.expect_sym('=')?;
                        points.push(PointSpec::Q(p.expr(&closed)?));
                    }
                    Tok::Ident(w) if w == "alpha" => {
                        p.bump();
                        p.expect_sym('=')?;
                        let a = p.expr(&closed)?;
                        p.expect_ident("beta")?;
                        p.expect_sym('=')?;
                        let with_alpha = Scope {
                            alpha_beta: true,
                            ..closed.clone()
                        };
                        // beta may refer to alpha
                        let b = p.expr(&with_alpha)?;
                        if b.any(&|e| matches!(e, Expr::Var(v) if v == "beta")) {
                            return Err(p.invalid(p.col(), "beta may not refer to itself"));
                        }
                        points.push(PointSpec::AlphaBeta(a, b));
                    }
                    _ => return Err(p.err("'q=' or 'alpha='")),
                }
                if *p.peek() == Tok::Sym(',') {
                    p.bump();
                } else {
                    break;
                }
            }
            let mixed = points.iter().any(|x| matches!(x, PointSpec::Q(_)))
                && points.iter().any(|x| matches!(x, PointSpec::AlphaBeta(..)));
            if mixed {
                return Err(p.invalid(p.col(), "points must be all q= or all alpha=/beta="));
            }
            RecordKind::Numeric { digits, points }
        }
        _ => return Err(p.err("'series' or 'numeric'")),
    };
    p.expect_ident("ref")?;
    let reference = match p.peek().clone() {
        Tok::Str(s) => {
            p.bump();
            s
        }
        _ => return Err(p.err("a quoted reference")),
    };
    if !p.at_end() {
        return Err(p.err("end of header"));
    }
    Ok((id, id_col, kind, reference))
}

/// Split off the content of `line` after `prefix`, returning it with its
/// starting column.
fn after<'l>(line: &'l str, prefix: &str) -> Option<(&'l str, usize)> {
    let t = line.trim_start();
    let lead = line.len() - t.len();
    t.strip_prefix(prefix).map(|rest| (rest, lead + prefix.len() + 1))
}

fn is_blank(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#')
}

/// Parse a corpus document. Either every record parses or the first
/// problem is reported with its position.
pub fn parse_corpus(text: &str) -> Result<Vec<IdentityRecord>, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut i = 0;
    while i < lines.len() {
        if is_blank(lines[i]) {
            i += 1;
            continue;
        }
        let line_no = i + 1;
        let (rest, col) = after(lines[i], "identity ").ok_or_else(|| ParseError::Syntax {
            line: line_no,
            col: 1 + lines[i].len() - lines[i].trim_start().len(),
            expected: "'identity'".into(),
            found: format!("'{}'", lines[i].split_whitespace().next().unwrap_or("")),
        })?;
        let (id, id_col, kind, reference) = parse_header(line_no, rest, col)?;
        if !seen.insert(id.clone()) {
            return Err(ParseError::DuplicateId {
                line: line_no,
                col: id_col,
                id,
            });
        }
        i += 1;
        let mut names: HashSet<String> = HashSet::new();
        let mut lets = Vec::new();
        let mut lhs = None;
        let mut rhs = None;
        let mut note = None;
        while i < lines.len() {
            let line = lines[i];
            let line_no = i + 1;
            if is_blank(line) {
                i += 1;
                if line.trim().is_empty() && rhs.is_some() {
                    break;
                }
                continue;
            }
            if after(line, "identity ").is_some() {
                break;
            }
            let scope = kind_scope(&kind, &names);
            if let Some((rest, col)) = after(line, "let ") {
                if lhs.is_some() {
                    return Err(ParseError::Invalid {
                        line: line_no,
                        col: 1,
                        message: "let must come before lhs".into(),
                    });
                }
                let toks = lex(line_no, rest, col)?;
                let mut p = Parser {
                    toks: &toks,
                    pos: 0,
                    line: line_no,
                };
                let ncol = p.col();
                let name = match p.bump() {
                    Tok::Ident(n) => n,
                    _ => {
                        p.pos = 0;
                        return Err(p.err("a name"));
                    }
                };
                if RESERVED.contains(&name.as_str()) || names.contains(&name) {
                    return Err(p.invalid(ncol, format!("name {name} is reserved or already bound")));
                }
                p.expect_sym('=')?;
                let e = p.expr(&scope)?;
                if !p.at_end() {
                    return Err(p.err("end of line"));
                }
                names.insert(name.clone());
                lets.push((name, e));
            } else if let Some((rest, col)) = after(line, "lhs:").or_else(|| after(line, "rhs:")) {
                let is_lhs = line.trim_start().starts_with("lhs:");
                if (is_lhs && lhs.is_some()) || (!is_lhs && (lhs.is_none() || rhs.is_some())) {
                    return Err(ParseError::Invalid {
                        line: line_no,
                        col: 1,
                        message: "each record needs one lhs followed by one rhs".into(),
                    });
                }
                let toks = lex(line_no, rest, col)?;
                let mut p = Parser {
                    toks: &toks,
                    pos: 0,
                    line: line_no,
                };
                let e = p.expr(&scope)?;
                if !p.at_end() {
                    return Err(p.err("end of line"));
                }
                if is_lhs {
                    lhs = Some(e);
                } else {
                    rhs = Some(e);
                }
            } else if let Some((rest, _)) = after(line, "note:") {
                if rhs.is_none() {
                    return Err(ParseError::Invalid {
                        line: line_no,
                        col: 1,
                        message: "note must follow rhs".into(),
                    });
                }
                note = Some(rest.trim().to_string());
                i += 1;
                break;
            } else {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col: 1 + line.len() - line.trim_start().len(),
                    expected: "'let', 'lhs:', 'rhs:' or 'note:'".into(),
                    found: format!("'{}'", line.split_whitespace().next().unwrap_or("")),
                });
            }
            i += 1;
        }
        let (Some(lhs), Some(rhs)) = (lhs, rhs) else {
            return Err(ParseError::Invalid {
                line: line_no,
                col: 1,
                message: format!("record {id} is missing lhs or rhs"),
            });
        };
        records.push(IdentityRecord {
            id,
            kind,
            reference,
            lets,
            lhs,
            rhs,
            note,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        assert_eq!(parse_corpus("").unwrap(), vec![]);
        assert_eq!(parse_corpus("# only a comment\n\n").unwrap(), vec![]);
    }

    #[test]
    fn unknown_function() {
        let doc = "identity X series order=10 ref \"r\"\nlhs: rho(q)\nrhs: 1\n";
        match parse_corpus(doc) {
            Err(ParseError::UnknownFunction { line, col, name }) => {
                assert_eq!((line, col, name.as_str()), (2, 6, "rho"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_id() {
        let doc = "identity A series order=10 ref \"r\"\nlhs: 1\nrhs: 1\n\nidentity A series order=10 ref \"r\"\nlhs: 1\nrhs: 1\n";
        assert!(matches!(parse_corpus(doc), Err(ParseError::DuplicateId { line: 5, .. })));
    }

    #[test]
    fn syntax_error_position() {
        let doc = "identity A series order=10 ref \"r\"\nlhs: phi(q) +\nrhs: 1\n";
        match parse_corpus(doc) {
            Err(ParseError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 14)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kind_restrictions() {
        let series_pi = "identity A series order=10 ref \"r\"\nlhs: pi\nrhs: 1\n";
        assert!(matches!(parse_corpus(series_pi), Err(ParseError::Invalid { .. })));
        let numeric_diff = "identity A numeric digits=20 at q=0.1 ref \"r\"\nlhs: diff(phi(q))\nrhs: 1\n";
        assert!(matches!(parse_corpus(numeric_diff), Err(ParseError::Invalid { .. })));
        let free_t = "identity A numeric digits=20 at q=0.1 ref \"r\"\nlhs: phi(t)\nrhs: 1\n";
        assert!(matches!(parse_corpus(free_t), Err(ParseError::Invalid { .. })));
        let alpha_in_q = "identity A numeric digits=20 at q=0.1 ref \"r\"\nlhs: alpha\nrhs: 1\n";
        assert!(matches!(parse_corpus(alpha_in_q), Err(ParseError::Invalid { .. })));
    }

    #[test]
    fn full_record() {
        let doc = r#"
# a comment
identity N-x numeric digits=40 at alpha=2 beta=pi/alpha, alpha=1/2 beta=pi/alpha ref "theta inversion"
let g = 1
lhs: sqrt(alpha)*at(phi(q), q=exp(-alpha^2))*g
rhs: sqrt(beta)*at(phi(q), q=exp(-beta^2))
note: checked at two points
"#;
        let recs = parse_corpus(doc).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.id, "N-x");
        assert_eq!(r.lets.len(), 1);
        assert_eq!(r.note.as_deref(), Some("checked at two points"));
        match &r.kind {
            RecordKind::Numeric { digits, points } => {
                assert_eq!(*digits, 40);
                assert_eq!(points.len(), 2);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn monomial_arguments() {
        let e = parse_expr("phi(-q^3)*psi(q^(1/4))").unwrap();
        assert_eq!(e.to_string(), "phi(-q^3)*psi(q^(1/4))");
        assert!(parse_expr("phi(2*q)").is_err());
        assert!(parse_expr("phi(q^(-1))").is_err());
    }

    #[test]
    fn unary_minus_binds_below_products() {
        assert_eq!(parse_expr("-q*2").unwrap(), Expr::Neg(Box::new(parse_expr("q*2").unwrap())));
        assert_eq!(parse_expr("-3").unwrap(), Expr::num(-3));
        assert!(parse_expr("2*-3").is_err());
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(
            parse_expr("0.05").unwrap(),
            Expr::Num(Rational::new(BigInt::from(1), BigInt::from(20)))
        );
        assert_eq!(parse_expr("0.05").unwrap().to_string(), "0.05");
    }

    #[test]
    fn eval_input() {
        let (e, v) = parse_eval_input("phi(q) at q=0").unwrap();
        assert_eq!(e.to_string(), "phi(q)");
        assert_eq!(v, Some(Expr::num(0)));
        let (_, v) = parse_eval_input("(1-sqrt(3))/2").unwrap();
        assert!(v.is_none());
        assert!(parse_eval_input("phi(q) at q=q").is_err());
    }

    #[test]
    fn quoted_escapes() {
        let doc = "identity A series order=10 ref \"say \\\"hi\\\"\"\nlhs: 1\nrhs: 1\n";
        let r = parse_corpus(doc).unwrap();
        assert_eq!(r[0].reference, "say \"hi\"");
        let again = parse_corpus(&r[0].to_string()).unwrap();
        assert_eq!(again, r);
    }

    mod round_trip {
        use super::*;
        use crate::registry::ast::{Base, Func, Monomial};
        use proptest::prelude::*;

        fn leaf() -> impl Strategy<Value = Expr> {
            let func = prop_oneof![
                Just(Func::Phi),
                Just(Func::Psi),
                Just(Func::F),
                Just(Func::Chi),
                Just(Func::V)
            ];
            prop_oneof![
                (0i64..50).prop_map(Expr::num),
                (1i64..200).prop_map(|n| Expr::Num(Rational::new(BigInt::from(n), BigInt::from(8)))),
                Just(Expr::Var("q".into())),
                (func, prop::bool::ANY, 1i64..10, 1i64..5).prop_map(|(f, neg, n, d)| Expr::Call(
                    f,
                    Monomial {
                        base: Base::Q,
                        sign: if neg { -1 } else { 1 },
                        exp: Ratio::new(n, d),
                    }
                )),
            ]
        }

        fn expr() -> impl Strategy<Value = Expr> {
            leaf().prop_recursive(5, 40, 2, |inner| {
                let b = |e: Expr| Box::new(e);
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
                    (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Div(b(x), b(y))),
                    (inner.clone(), -4i64..5, 1i64..4).prop_map(move |(x, n, d)| Expr::Pow(b(x), Ratio::new(n, d))),
                    (inner.clone(), 2u32..5).prop_map(move |(x, n)| Expr::Root(n, b(x))),
                    inner.clone().prop_map(move |x| Expr::Neg(b(x))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_then_parse_is_identity(e in expr()) {
                let text = e.to_string();
                let back = parse_expr(&text).unwrap();
                prop_assert_eq!(back.to_string(), text.clone());
                prop_assert_eq!(back, e, "{}", text);
            }
        }
    }
}
