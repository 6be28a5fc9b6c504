//! Module-description documents: lexer, parser and canonical printer.
//!
//! ```text
//! p = 5;
//! vars = x, t;
//! pi = dwork;
//! grid = 12;
//! dwork(1/1 * x^-2 * t^-1) (+) dual(dwork(1/1 * x^-1 * t^-2));
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use swanlab_core::rational::is_prime;
use swanlab_core::surface::Ambient;
use swanlab_core::{fmt_q, parse_q, Frac, LaurentElement, NablaModule, Normalization, PadicScalar, Q};

use crate::error::CliError;

const RESERVED: &[&str] = &["dwork", "dual", "explicit", "pi", "p", "vars"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

// ---- lexer ----

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(String),
    Ident(String),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Str(s) => write!(f, "string \"{s}\""),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let digit_at = |k: usize| chars.get(k).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || (c == '-' && digit_at(i + 1)) {
            let start = i;
            let mut j = i + 1;
            while digit_at(j) {
                j += 1;
            }
            if chars.get(j) == Some(&'/') && digit_at(j + 1) {
                j += 1;
                while digit_at(j) {
                    j += 1;
                }
            }
            out.push(Token { tok: Tok::Num(chars[start..j].iter().collect()), line: l0, col: c0 });
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while chars.get(j).is_some_and(|d| d.is_ascii_alphanumeric() || *d == '_') {
                j += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..j].iter().collect()), line: l0, col: c0 });
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if chars.get(j) != Some(&'"') {
                return Err(err(l0, c0, "unterminated string".into()));
            }
            out.push(Token { tok: Tok::Str(chars[i + 1..j].iter().collect()), line: l0, col: c0 });
            advance(j + 1 - i, &mut i, &mut col);
            continue;
        }
        // `(x)` right after a closing parenthesis is the tensor operator, not an argument
        let after_close = matches!(out.last(), Some(Token { tok: Tok::Sym(")"), .. }));
        let op = match chars.get(i + 1) {
            Some('+') => true,
            Some('x') => after_close,
            _ => false,
        };
        if c == '(' && chars.get(i + 2) == Some(&')') && op {
            let sym = if chars[i + 1] == '+' { "(+)" } else { "(x)" };
            out.push(Token { tok: Tok::Sym(sym), line: l0, col: c0 });
            advance(3, &mut i, &mut col);
            continue;
        }
        let sym = match c {
            '=' => "=",
            ';' => ";",
            ',' => ",",
            '(' => "(",
            ')' => ")",
            '*' => "*",
            '^' => "^",
            '+' => "+",
            '/' => "/",
            '[' => "[",
            ']' => "]",
            ':' => ":",
            _ => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
        };
        out.push(Token { tok: Tok::Sym(sym), line: l0, col: c0 });
        advance(1, &mut i, &mut col);
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

// ---- document ----

/// How `pi` is fixed; only the Dwork choice `pi^(p-1) = -p` is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PiConvention {
    #[default]
    Dwork,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Dwork(LaurentElement),
    Sum(Box<Expr>, Box<Expr>),
    Tensor(Box<Expr>, Box<Expr>),
    Dual(Box<Expr>),
    /// Path of a matrix file, relative to the document.
    Explicit(String),
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Sum(..) => 1,
            Expr::Tensor(..) => 2,
            _ => 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params {
    pub grid: Option<u32>,
    pub weights: Option<Vec<Q>>,
    pub normalize: Option<Normalization>,
    pub ambient: Option<Ambient>,
    pub divisor: Option<String>,
    pub boundary: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleSpecDoc {
    pub prime: u32,
    pub vars: Vec<String>,
    pub pi: PiConvention,
    pub params: Params,
    pub expr: Expr,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    prime: u32,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, msg: impl Into<String>) -> ParseError {
        ParseError { line: t.line, col: t.col, msg: msg.into() }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        Self::error_at(self.peek(), msg)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.peek().tok)))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> Result<(), ParseError> {
        if self.is_ident(k) {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected `{k}`, found {}", self.peek().tok)))
        }
    }

    fn ident(&mut self) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(Self::error_at(&t, format!("expected identifier, found {other}"))),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Str(s) => Ok(s.clone()),
            other => Err(Self::error_at(&t, format!("expected string, found {other}"))),
        }
    }

    fn rational(&mut self) -> Result<Q, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(s) => parse_q(s).ok_or_else(|| Self::error_at(&t, format!("bad rational `{s}`"))),
            other => Err(Self::error_at(&t, format!("expected number, found {other}"))),
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(s) if !s.contains('/') => s.parse().map_err(|_| Self::error_at(&t, format!("integer `{s}` out of range"))),
            other => Err(Self::error_at(&t, format!("expected integer, found {other}"))),
        }
    }

    fn laurent(&mut self) -> Result<LaurentElement, ParseError> {
        let start = self.peek().clone();
        let mut terms = vec![self.term()?];
        while self.is_sym("+") {
            self.next();
            terms.push(self.term()?);
        }
        LaurentElement::from_terms(self.prime, self.vars.len(), terms).map_err(|e| Self::error_at(&start, e.to_string()))
    }

    /// `factor ("*" factor)*` with factors a rational, `pi^k`, or `var^e`.
    fn term(&mut self) -> Result<(Vec<i64>, PadicScalar), ParseError> {
        let p = self.prime;
        let mut exps = vec![0i64; self.vars.len()];
        let mut coeff = PadicScalar::one(p);
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Num(_) => {
                    let c = self.rational()?;
                    coeff = coeff.scale(&c);
                }
                Tok::Ident(s) if s == "pi" => {
                    self.next();
                    let k = if self.is_sym("^") {
                        self.next();
                        self.integer()?
                    } else {
                        1
                    };
                    if k < 0 {
                        return Err(Self::error_at(&t, "negative power of pi"));
                    }
                    coeff = &coeff * &PadicScalar::pi(p).pow(k as u32);
                }
                Tok::Ident(s) => {
                    let i = self
                        .vars
                        .iter()
                        .position(|v| v == s)
                        .ok_or_else(|| Self::error_at(&t, format!("unknown identifier `{s}`")))?;
                    self.next();
                    let e = if self.is_sym("^") {
                        self.next();
                        self.integer()?
                    } else {
                        1
                    };
                    exps[i] += e;
                }
                other => return Err(Self::error_at(&t, format!("expected a term, found {other}"))),
            }
            if self.is_sym("*") {
                self.next();
            } else {
                return Ok((exps, coeff));
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.tensor()?;
        while self.is_sym("(+)") {
            self.next();
            lhs = Expr::Sum(Box::new(lhs), Box::new(self.tensor()?));
        }
        Ok(lhs)
    }

    fn tensor(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while self.is_sym("(x)") {
            self.next();
            lhs = Expr::Tensor(Box::new(lhs), Box::new(self.atom()?));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Sym("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(k) if k == "dwork" => {
                self.next();
                self.expect_sym("(")?;
                let f = self.laurent()?;
                self.expect_sym(")")?;
                Ok(Expr::Dwork(f))
            }
            Tok::Ident(k) if k == "dual" => {
                self.next();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Dual(Box::new(e)))
            }
            Tok::Ident(k) if k == "explicit" => {
                self.next();
                self.expect_sym("(")?;
                let path = self.string()?;
                self.expect_sym(")")?;
                Ok(Expr::Explicit(path))
            }
            other => Err(Self::error_at(&t, format!("expected a module expression, found {other}"))),
        }
    }

    fn normalization(&mut self) -> Result<Normalization, ParseError> {
        let (k, t) = self.ident()?;
        match k.as_str() {
            "simplex" => Ok(Normalization::Simplex),
            "natural" => Ok(Normalization::Natural),
            "var" => {
                self.expect_sym("(")?;
                let (v, vt) = self.ident()?;
                self.expect_sym(")")?;
                let i = self.vars.iter().position(|x| *x == v).ok_or_else(|| Self::error_at(&vt, format!("unknown identifier `{v}`")))?;
                Ok(Normalization::ByVariable(i))
            }
            "monomial" => {
                self.expect_sym("(")?;
                let mut j = vec![self.integer()?];
                while self.is_sym(",") {
                    self.next();
                    j.push(self.integer()?);
                }
                self.expect_sym(")")?;
                if j.len() != self.vars.len() {
                    return Err(Self::error_at(&t, format!("monomial needs {} exponents", self.vars.len())));
                }
                Ok(Normalization::ByMonomial(j))
            }
            other => Err(Self::error_at(&t, format!("unknown normalization `{other}`"))),
        }
    }

    fn param(&mut self, params: &mut Params, pi_seen: &mut bool) -> Result<(), ParseError> {
        let (key, kt) = self.ident()?;
        self.expect_sym("=")?;
        let dup = || Self::error_at(&kt, format!("duplicate setting `{key}`"));
        match key.as_str() {
            "pi" => {
                let (v, vt) = self.ident()?;
                if v != "dwork" {
                    return Err(Self::error_at(&vt, format!("unsupported pi convention `{v}`")));
                }
                if std::mem::replace(pi_seen, true) {
                    return Err(dup());
                }
            }
            "grid" => {
                let t = self.peek().clone();
                let n = self.integer()?;
                if !(2..=u32::MAX as i64).contains(&n) {
                    return Err(Self::error_at(&t, "grid must be at least 2"));
                }
                if params.grid.replace(n as u32).is_some() {
                    return Err(dup());
                }
            }
            "weights" => {
                let t = self.peek().clone();
                let mut w = vec![self.rational()?];
                while self.is_sym(",") {
                    self.next();
                    w.push(self.rational()?);
                }
                if w.len() != self.vars.len() {
                    return Err(Self::error_at(&t, format!("expected {} weights, found {}", self.vars.len(), w.len())));
                }
                if w.iter().any(|x| *x < Q::from_integer(0.into())) {
                    return Err(Self::error_at(&t, "weights must be nonnegative"));
                }
                if params.weights.replace(w).is_some() {
                    return Err(dup());
                }
            }
            "normalize" => {
                let n = self.normalization()?;
                if params.normalize.replace(n).is_some() {
                    return Err(dup());
                }
            }
            "ambient" => {
                let (v, vt) = self.ident()?;
                let a = parse_ambient(&v).ok_or_else(|| Self::error_at(&vt, format!("unknown ambient `{v}`")))?;
                if params.ambient.replace(a).is_some() {
                    return Err(dup());
                }
            }
            "divisor" => {
                let s = self.string()?;
                if params.divisor.replace(s).is_some() {
                    return Err(dup());
                }
            }
            "boundary" => {
                let mut b = vec![self.string()?];
                while self.is_sym(",") {
                    self.next();
                    b.push(self.string()?);
                }
                if params.boundary.replace(b).is_some() {
                    return Err(dup());
                }
            }
            _ => return Err(Self::error_at(&kt, format!("unknown setting `{key}`"))),
        }
        Ok(())
    }
}

pub fn parse_ambient(s: &str) -> Option<Ambient> {
    match s {
        "P1xP1" | "p1xp1" => Some(Ambient::P1xP1),
        "P2" | "p2" => Some(Ambient::P2),
        _ => None,
    }
}

fn header(toks: Vec<Token>) -> Result<(u32, Vec<String>, Vec<Token>), ParseError> {
    let empty: [String; 0] = [];
    let mut ps = Parser { toks, pos: 0, prime: 2, vars: &empty };
    ps.expect_keyword("p")?;
    ps.expect_sym("=")?;
    let pt = ps.peek().clone();
    let p = ps.integer()?;
    if p < 2 || p > u32::MAX as i64 || !is_prime(p as u64) {
        return Err(Parser::error_at(&pt, format!("{p} is not prime")));
    }
    ps.expect_sym(";")?;
    ps.expect_keyword("vars")?;
    ps.expect_sym("=")?;
    let mut vars: Vec<String> = Vec::new();
    loop {
        let (v, vt) = ps.ident()?;
        if RESERVED.contains(&v.as_str()) {
            return Err(Parser::error_at(&vt, format!("`{v}` is reserved")));
        }
        if vars.contains(&v) {
            return Err(Parser::error_at(&vt, format!("duplicate variable `{v}`")));
        }
        vars.push(v);
        if ps.is_sym(",") {
            ps.next();
        } else {
            break;
        }
    }
    ps.expect_sym(";")?;
    let rest = ps.toks.split_off(ps.pos);
    Ok((p as u32, vars, rest))
}

pub fn parse_spec(text: &str) -> Result<ModuleSpecDoc, ParseError> {
    let (prime, vars, toks) = header(lex(text)?)?;
    let mut ps = Parser { toks, pos: 0, prime, vars: &vars };
    let mut params = Params::default();
    let mut pi_seen = false;
    let mut expr: Option<Expr> = None;
    while ps.peek().tok != Tok::Eof {
        let is_param = matches!(ps.peek().tok, Tok::Ident(_)) && *ps.peek_at(1) == Tok::Sym("=");
        if is_param {
            ps.param(&mut params, &mut pi_seen)?;
        } else {
            let t = ps.peek().clone();
            let e = ps.expr()?;
            if expr.replace(e).is_some() {
                return Err(Parser::error_at(&t, "more than one module expression"));
            }
        }
        if ps.peek().tok == Tok::Eof {
            break;
        }
        ps.expect_sym(";")?;
    }
    let expr = expr.ok_or_else(|| ps.error("missing module expression"))?;
    Ok(ModuleSpecDoc { prime, vars, pi: PiConvention::Dwork, params, expr })
}

// ---- printing ----

fn print_expr(e: &Expr, vars: &[String], out: &mut String) {
    let child = |c: &Expr, min: u8, out: &mut String| {
        if c.precedence() < min {
            out.push('(');
            print_expr(c, vars, out);
            out.push(')');
        } else {
            print_expr(c, vars, out);
        }
    };
    match e {
        Expr::Dwork(f) => {
            out.push_str("dwork(");
            out.push_str(&f.display_with(vars));
            out.push(')');
        }
        Expr::Dual(a) => {
            out.push_str("dual(");
            print_expr(a, vars, out);
            out.push(')');
        }
        Expr::Explicit(path) => {
            out.push_str(&format!("explicit(\"{path}\")"));
        }
        Expr::Sum(a, b) | Expr::Tensor(a, b) => {
            let prec = e.precedence();
            child(a, prec, out);
            out.push_str(if prec == 1 { " (+) " } else { " (x) " });
            child(b, prec + 1, out);
        }
    }
}

pub fn normalization_text(n: &Normalization, vars: &[String]) -> String {
    match n {
        Normalization::Simplex => "simplex".into(),
        Normalization::Natural => "natural".into(),
        Normalization::ByVariable(i) => format!("var({})", vars[*i]),
        Normalization::ByMonomial(j) => {
            let s: Vec<String> = j.iter().map(i64::to_string).collect();
            format!("monomial({})", s.join(", "))
        }
    }
}

impl fmt::Display for ModuleSpecDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p = {};", self.prime)?;
        writeln!(f, "vars = {};", self.vars.join(", "))?;
        writeln!(f, "pi = dwork;")?;
        let pr = &self.params;
        if let Some(n) = pr.grid {
            writeln!(f, "grid = {n};")?;
        }
        if let Some(w) = &pr.weights {
            let s: Vec<String> = w.iter().map(fmt_q).collect();
            writeln!(f, "weights = {};", s.join(", "))?;
        }
        if let Some(n) = &pr.normalize {
            writeln!(f, "normalize = {};", normalization_text(n, &self.vars))?;
        }
        if let Some(a) = pr.ambient {
            writeln!(f, "ambient = {a};")?;
        }
        if let Some(d) = &pr.divisor {
            writeln!(f, "divisor = \"{d}\";")?;
        }
        if let Some(b) = &pr.boundary {
            let s: Vec<String> = b.iter().map(|x| format!("\"{x}\"")).collect();
            writeln!(f, "boundary = {};", s.join(", "))?;
        }
        let mut e = String::new();
        print_expr(&self.expr, &self.vars, &mut e);
        writeln!(f, "{e};")
    }
}

// ---- building ----

impl ModuleSpecDoc {
    /// Evaluates the expression; explicit matrix paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<NablaModule, CliError> {
        self.build_expr(&self.expr, base)
    }

    fn build_expr(&self, e: &Expr, base: Option<&Path>) -> Result<NablaModule, CliError> {
        Ok(match e {
            Expr::Dwork(f) => NablaModule::dwork(f.clone())?,
            Expr::Sum(a, b) => NablaModule::direct_sum(&self.build_expr(a, base)?, &self.build_expr(b, base)?)?,
            Expr::Tensor(a, b) => NablaModule::tensor(&self.build_expr(a, base)?, &self.build_expr(b, base)?)?,
            Expr::Dual(a) => NablaModule::dual(&self.build_expr(a, base)?),
            Expr::Explicit(path) => {
                let full: PathBuf = base.map_or_else(|| PathBuf::from(path), |b| b.join(path));
                let text = std::fs::read_to_string(&full).map_err(|e| CliError::Io(format!("{}: {e}", full.display())))?;
                let ms = parse_matrix_file(&text, self.prime, &self.vars)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", full.display())))?;
                NablaModule::explicit(ms)?
            }
        })
    }
}

/// Connection matrices, one `matrix <var>:` section per variable, rows in
/// brackets; entries are Laurent polynomials or `(num) / (den)`.
pub fn parse_matrix_file(text: &str, prime: u32, vars: &[String]) -> Result<Vec<Vec<Vec<Frac>>>, ParseError> {
    let mut ps = Parser { toks: lex(text)?, pos: 0, prime, vars };
    let n = vars.len();
    let mut sections: Vec<Option<Vec<Vec<Frac>>>> = vec![None; n];
    let mut rank: Option<usize> = None;
    while ps.peek().tok != Tok::Eof {
        ps.expect_keyword("matrix")?;
        let (v, vt) = ps.ident()?;
        let i = vars.iter().position(|x| *x == v).ok_or_else(|| Parser::error_at(&vt, format!("unknown identifier `{v}`")))?;
        if sections[i].is_some() {
            return Err(Parser::error_at(&vt, format!("duplicate matrix for `{v}`")));
        }
        ps.expect_sym(":")?;
        let mut rows = Vec::new();
        while ps.is_sym("[") {
            let rt = ps.next();
            let mut row = vec![matrix_entry(&mut ps)?];
            while ps.is_sym(",") {
                ps.next();
                row.push(matrix_entry(&mut ps)?);
            }
            ps.expect_sym("]")?;
            if let Some(first) = rows.first() {
                if Vec::len(first) != row.len() {
                    return Err(Parser::error_at(&rt, "rows of different lengths"));
                }
            }
            rows.push(row);
        }
        let d = rows.len();
        if d == 0 || rows[0].len() != d {
            return Err(Parser::error_at(&vt, format!("matrix for `{v}` is not square")));
        }
        if *rank.get_or_insert(d) != d {
            return Err(Parser::error_at(&vt, "matrices of different sizes"));
        }
        sections[i] = Some(rows);
    }
    sections
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| ps.error(format!("missing matrix for `{}`", vars[i]))))
        .collect()
}

fn matrix_entry(ps: &mut Parser<'_>) -> Result<Frac, ParseError> {
    let t = ps.peek().clone();
    if ps.is_sym("(") {
        ps.next();
        let num = ps.laurent()?;
        ps.expect_sym(")")?;
        ps.expect_sym("/")?;
        ps.expect_sym("(")?;
        let den = ps.laurent()?;
        ps.expect_sym(")")?;
        return Frac::new(num, den).map_err(|e| Parser::error_at(&t, e.to_string()));
    }
    Ok(Frac::from_laurent(ps.laurent()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_leaf() {
        let d = parse_spec("p = 3; vars = x, t; dwork(1 * x^1 * t^-3)").unwrap();
        assert_eq!(d.prime, 3);
        match &d.expr {
            Expr::Dwork(f) => assert_eq!(f, &swanlab_core::mono(3, &[1, -3])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sum_binds_looser_than_tensor() {
        let d = parse_spec("p = 5; vars = x; dwork(x^-1) (+) dwork(x^-2) (x) dual(dwork(x^-3))").unwrap();
        match &d.expr {
            Expr::Sum(_, b) => assert!(matches!(**b, Expr::Tensor(_, _))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bare_variable_argument_is_not_an_operator() {
        let d = parse_spec("p = 5; vars = x; dwork(x) (x) dwork(x)").unwrap();
        assert!(matches!(d.expr, Expr::Tensor(_, _)));
    }

    #[test]
    fn rejects_composite_prime() {
        let e = parse_spec("p = 4; vars = x; dwork(x^-1)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 5));
        assert!(e.msg.contains("not prime"));
    }

    #[test]
    fn unknown_identifier_has_position() {
        let e = parse_spec("p = 5;\nvars = x, t;\ndwork(x^-1 * y^2)").unwrap_err();
        assert_eq!((e.line, e.col), (3, 14));
        assert!(e.msg.contains("unknown identifier `y`"));
    }

    #[test]
    fn lexical_error_has_position() {
        let e = parse_spec("p = 5; vars = x;\n  dwork(x^-1 $ 2)").unwrap_err();
        assert_eq!((e.line, e.col), (2, 14));
    }

    #[test]
    fn pi_coefficients_round_trip() {
        let text = "p = 5; vars = x, t; grid = 6; weights = 1/2, 1/2; normalize = var(t); ambient = P1xP1; divisor = \"t=0\";\n\
                    dwork(3/2*pi^2 * x^1 * t^-1 + 1 * t^-2) (+) (dwork(x^-1) (+) dwork(t^-1))";
        let d = parse_spec(text).unwrap();
        let printed = d.to_string();
        assert_eq!(parse_spec(&printed).unwrap(), d);
        assert!(printed.contains("(+) (dwork"));
    }

    #[test]
    fn matrix_file_round_trips_through_module() {
        let vars = vec!["x".to_string(), "t".to_string()];
        let text = "matrix x:\n[ 1/1*pi^1 * t^-1 ]\nmatrix t:\n[ (-1/1*pi^1 * x^1) / (t^2) ]\n";
        let ms = parse_matrix_file(text, 5, &vars).unwrap();
        assert_eq!(ms.len(), 2);
        assert!(NablaModule::explicit(ms).is_ok());
        assert!(parse_matrix_file("matrix x:\n[ 1 ]\n", 5, &vars).unwrap_err().msg.contains("missing matrix for `t`"));
    }
}
