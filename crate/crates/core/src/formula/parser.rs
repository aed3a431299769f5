use std::fmt;

use super::{
    AffinePredicate, Body, HyperFormula, Interval, NamedPredicate, Predicate, Quantifier,
    QuantifierPrefix, TraceVar,
};

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64, bool),
    Dot,
    Comma,
    Semi,
    Colon,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Ge,
    Le,
    Gt,
    Lt,
    Plus,
    Minus,
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(v, _) => return write!(f, "number {v}"),
            Tok::Dot => ".",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::Ge => ">=",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Lt => "<",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &[
    "exists", "forall", "true", "false", "F", "G", "U", "x", "inbox", "eq",
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let err = |m: String| ParseError {
            line: l0,
            col: c0,
            message: m,
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            "->" => (Tok::Arrow, 2),
            ">=" => (Tok::Ge, 2),
            "<=" => (Tok::Le, 2),
            _ => match c {
                '.' => (Tok::Dot, 1),
                ',' => (Tok::Comma, 1),
                ';' => (Tok::Semi, 1),
                ':' => (Tok::Colon, 1),
                '[' => (Tok::LBrack, 1),
                ']' => (Tok::RBrack, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '!' => (Tok::Bang, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Pipe, 1),
                '>' => (Tok::Gt, 1),
                '<' => (Tok::Lt, 1),
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '*' => (Tok::Star, 1),
                c if c.is_ascii_digit() => {
                    let mut j = i;
                    let mut integral = true;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                        integral = false;
                        j += 1;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                    if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                        let mut k = j + 1;
                        if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                            k += 1;
                        }
                        if k < chars.len() && chars[k].is_ascii_digit() {
                            integral = false;
                            j = k;
                            while j < chars.len() && chars[j].is_ascii_digit() {
                                j += 1;
                            }
                        }
                    }
                    let text: String = chars[i..j].iter().collect();
                    let v: f64 = text
                        .parse()
                        .map_err(|_| err(format!("bad number `{text}`")))?;
                    (Tok::Num(v, integral), j - i)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    (Tok::Ident(chars[i..j].iter().collect()), j - i)
                }
                other => return Err(err(format!("unexpected character `{other}`"))),
            },
        };
        out.push(Spanned {
            tok,
            line: l0,
            col: c0,
        });
        i += len;
        col += len;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    bound: Option<Vec<TraceVar>>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn trace_var(&mut self) -> PResult<TraceVar> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                if let Some(bound) = &self.bound {
                    if !bound.iter().any(|b| b.0 == s) {
                        return self.error(format!("unbound trace variable `{s}`"));
                    }
                }
                self.bump();
                Ok(TraceVar(s))
            }
            t => self.error(format!("expected trace variable, found {t}")),
        }
    }

    fn integer(&mut self) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Num(v, true) if v >= 0.0 && v <= u32::MAX as f64 => {
                self.bump();
                Ok(v as usize)
            }
            Tok::Minus => self.error("interval bounds and indices must be non-negative"),
            t => self.error(format!("expected non-negative integer, found {t}")),
        }
    }

    fn signed_number(&mut self) -> PResult<f64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            t => self.error(format!("expected number, found {t}")),
        }
    }

    fn formula(&mut self) -> PResult<HyperFormula> {
        let mut prefix: Vec<(Quantifier, TraceVar)> = Vec::new();
        loop {
            let q = if self.is_kw("exists") {
                Quantifier::Exists
            } else if self.is_kw("forall") {
                Quantifier::Forall
            } else {
                break;
            };
            self.bump();
            let at = self.pos;
            let v = self.trace_var()?;
            if prefix.iter().any(|(_, w)| *w == v) {
                self.pos = at;
                return self.error(format!("duplicate quantifier variable `{v}`"));
            }
            prefix.push((q, v));
            self.expect(Tok::Dot)?;
        }
        self.bound = Some(prefix.iter().map(|(_, v)| v.clone()).collect());
        let body = self.body()?;
        if *self.peek() != Tok::Eof {
            return self.error(format!("unexpected {} after formula", self.peek()));
        }
        Ok(HyperFormula {
            prefix: QuantifierPrefix(prefix),
            body,
        })
    }

    fn body(&mut self) -> PResult<Body> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.body()?;
            return Ok(Body::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Body> {
        let mut parts = vec![self.conjunction()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Body::Or(parts)
        })
    }

    fn conjunction(&mut self) -> PResult<Body> {
        let mut parts = vec![self.until()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.until()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Body::And(parts)
        })
    }

    fn until(&mut self) -> PResult<Body> {
        let mut lhs = self.unary()?;
        while self.is_kw("U") {
            self.bump();
            let i = self.interval()?;
            let rhs = self.unary()?;
            lhs = Body::Until(i, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn interval(&mut self) -> PResult<Interval> {
        let at = self.pos;
        self.expect(Tok::LBrack)?;
        let lo = self.integer()?;
        self.expect(Tok::Comma)?;
        let hi = self.integer()?;
        self.expect(Tok::RBrack)?;
        if lo > hi {
            self.pos = at;
            return self.error(format!("inverted interval [{lo},{hi}]"));
        }
        Ok(Interval { lo, hi })
    }

    fn unary(&mut self) -> PResult<Body> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Body::not(self.unary()?))
            }
            Tok::Ident(s) if s == "F" || s == "G" => {
                self.bump();
                let i = self.interval()?;
                let inner = Box::new(self.unary()?);
                Ok(if s == "F" {
                    Body::Eventually(i, inner)
                } else {
                    Body::Always(i, inner)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Body> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let b = self.body()?;
                self.expect(Tok::RParen)?;
                Ok(b)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Body::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Body::falsum())
            }
            Tok::Ident(s) if s == "inbox" => self.inbox(),
            Tok::Ident(s) if s == "eq" => self.state_eq(),
            _ => self.comparison(),
        }
    }

    fn inbox(&mut self) -> PResult<Body> {
        self.bump();
        self.expect(Tok::LParen)?;
        let var = self.trace_var()?;
        self.expect(Tok::Semi)?;
        let (mut dims, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
        loop {
            let d = self.integer()?;
            self.expect(Tok::Colon)?;
            self.expect(Tok::LBrack)?;
            let a = self.signed_number()?;
            self.expect(Tok::Comma)?;
            let b = self.signed_number()?;
            self.expect(Tok::RBrack)?;
            dims.push(d);
            lo.push(a);
            hi.push(b);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(Body::Pred(Predicate::Named(NamedPredicate::InBox {
            var,
            dims,
            lo,
            hi,
        })))
    }

    fn state_eq(&mut self) -> PResult<Body> {
        self.bump();
        self.expect(Tok::LParen)?;
        let a = self.trace_var()?;
        self.expect(Tok::Comma)?;
        let b = self.trace_var()?;
        self.expect(Tok::Semi)?;
        let mut dims = vec![self.integer()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            dims.push(self.integer()?);
        }
        self.expect(Tok::Semi)?;
        let tol = self.signed_number()?;
        self.expect(Tok::RParen)?;
        Ok(Body::Pred(Predicate::Named(NamedPredicate::StateEq {
            a,
            b,
            dims,
            tol,
        })))
    }

    fn comparison(&mut self) -> PResult<Body> {
        let lhs = self.affine()?;
        let flip = match self.peek() {
            Tok::Ge | Tok::Gt => false,
            Tok::Le | Tok::Lt => true,
            t => return self.error(format!("expected comparison operator, found {t}")),
        };
        self.bump();
        let rhs = self.affine()?;
        let (pos, neg) = if flip { (rhs, lhs) } else { (lhs, rhs) };
        let mut out = pos;
        for t in neg.terms {
            out.add_term(t.var, t.dim, -t.coef);
        }
        out.constant -= neg.constant;
        Ok(Body::Pred(Predicate::Affine(out)))
    }

    fn affine(&mut self) -> PResult<AffinePredicate> {
        let mut acc = AffinePredicate::new(0.0);
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        loop {
            self.term(sign, &mut acc)?;
            match self.peek() {
                Tok::Plus => sign = 1.0,
                Tok::Minus => sign = -1.0,
                _ => break,
            }
            self.bump();
        }
        Ok(acc)
    }

    fn term(&mut self, sign: f64, acc: &mut AffinePredicate) -> PResult<()> {
        let mut coef = sign;
        let mut state: Option<(TraceVar, usize)> = None;
        loop {
            match self.peek().clone() {
                Tok::Minus => {
                    self.bump();
                    coef = -coef;
                    continue;
                }
                Tok::Num(v, _) => {
                    self.bump();
                    coef *= v;
                }
                Tok::Ident(s) if s == "x" => {
                    if state.is_some() {
                        return self.error("product of two state components is not affine");
                    }
                    self.bump();
                    self.expect(Tok::LBrack)?;
                    let v = self.trace_var()?;
                    self.expect(Tok::RBrack)?;
                    self.expect(Tok::LBrack)?;
                    let d = self.integer()?;
                    self.expect(Tok::RBrack)?;
                    state = Some((v, d));
                }
                t => return self.error(format!("expected number or state `x[..][..]`, found {t}")),
            }
            if *self.peek() == Tok::Star {
                self.bump();
            } else {
                break;
            }
        }
        match state {
            Some((v, d)) => acc.add_term(v, d, coef),
            None => acc.constant += coef,
        }
        Ok(())
    }
}

/// Parses a quantified formula such as `exists p1. G[0,5](x[p1][0] - 1 >= 0)`.
pub fn parse(src: &str) -> Result<HyperFormula, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        bound: None,
    };
    p.formula()
}

/// Parses a quantifier-free body. Trace variables are not checked for binding.
pub fn parse_body(src: &str) -> Result<Body, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        bound: None,
    };
    let b = p.body()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after formula", p.peek()));
    }
    Ok(b)
}
