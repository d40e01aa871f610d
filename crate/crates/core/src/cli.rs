//! Expression language, printer and command front-end.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exp)?
//! exp    := INT | '-' INT | '(' '-'? INT ('/' INT)? ')'
//! atom   := INT | 'x' | NAME '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value as Json};

use crate::closure::{il_closure, is_il_closed, is_til_closed, is_truncation_closed, ClosureReport, GenSet};
use crate::diffop::solve_linear;
use crate::monomial::{Mono, TransMonomial};
use crate::series::{render_expansion, Rest};
use crate::transseries::{frak_e, mono_text, Ctx, TExp, TransElem};
use crate::{Error, Result, Q};

// ---------------------------------------------------------------------------
// syntax

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Q),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Q),
    Call(String, Vec<Expr>),
}

/// Fully parenthesized; parses back to the same tree.
impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::Num(c) if c.is_integer() && !c.is_negative() => write!(f, "{c}"),
            Expr::Num(c) if c.is_integer() => write!(f, "(-{})", -c),
            Expr::Num(c) => write!(f, "({}/{})", c.numer(), c.denom()),
            Expr::X => f.write_str("x"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, e) if e.is_integer() => write!(f, "{a}^{e}"),
            Expr::Pow(a, e) => write!(f, "{a}^({}/{})", e.numer(), e.denom()),
            Expr::Call(name, args) => {
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "{name}({})", args.join(", "))
            }
        }
    }
}

/// name, arity
const CALLS: &[(&str, usize)] = &[
    ("exp", 1),
    ("log", 1),
    ("d", 1),
    ("int", 1),
    ("up", 1),
    ("down", 1),
    ("trunc", 2),
    ("solve", 2),
    ("suppexp", 1),
    ("terms", 2),
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Sym(char),
    End,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, first_line: usize) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    let (mut line, mut col) = (first_line, 1);
    let mut it = src.chars().peekable();
    while let Some(&c) = it.peek() {
        let (l0, c0) = (line, col);
        if c == '\n' {
            it.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            it.next();
            col += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = it.peek().filter(|d| d.is_ascii_digit()) {
                s.push(d);
                it.next();
                col += 1;
            }
            Tok::Int(s.parse().unwrap())
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = it.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                s.push(d);
                it.next();
                col += 1;
            }
            Tok::Name(s)
        } else if "+-*/^(),".contains(c) {
            it.next();
            col += 1;
            Tok::Sym(c)
        } else {
            return Err(Error::Syntax { line: l0, column: c0, expected: vec!["expression".into()] });
        };
        out.push(Lexed { tok, line: l0, col: c0 });
    }
    out.push(Lexed { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

const AFTER_OPERAND: &[&str] = &["'+'", "'-'", "'*'", "'/'", "'^'"];
const OPERAND: &[&str] = &["integer", "'x'", "function name", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        let l = &self.toks[self.pos];
        Err(Error::Syntax { line: l.line, column: l.col, expected: expected.iter().map(|s| s.to_string()).collect() })
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char, also: &[&str]) -> Result<()> {
        if self.eat(c) {
            return Ok(());
        }
        let want = format!("'{c}'");
        let mut exp: Vec<&str> = also.to_vec();
        exp.push(&want);
        self.fail(&exp)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), self.exponent()?));
        }
        Ok(base)
    }

    fn int(&mut self) -> Result<BigInt> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn exponent(&mut self) -> Result<Q> {
        match self.peek() {
            Tok::Int(_) => Ok(Q::from_integer(self.int()?)),
            Tok::Sym('-') => {
                self.bump();
                Ok(-Q::from_integer(self.int()?))
            }
            Tok::Sym('(') => {
                self.bump();
                let neg = self.eat('-');
                let n = self.int()?;
                let d = if self.eat('/') { self.int()? } else { BigInt::one() };
                if d.is_zero() {
                    return Err(Error::ZeroDivision);
                }
                self.expect(')', &["'/'"])?;
                let r = Q::new(n, d);
                Ok(if neg { -r } else { r })
            }
            _ => self.fail(&["integer", "'-'", "'('"]),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Expr::Num(Q::from_integer(self.int()?))),
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')', AFTER_OPERAND)?;
                Ok(e)
            }
            Tok::Name(s) if s == "x" => {
                self.bump();
                Ok(Expr::X)
            }
            Tok::Name(s) => {
                let Some(&(_, arity)) = CALLS.iter().find(|c| c.0 == s) else {
                    return self.fail(&["'x'", "function name"]);
                };
                self.bump();
                self.expect('(', &[])?;
                let mut args = vec![self.expr()?];
                while args.len() < arity {
                    self.expect(',', AFTER_OPERAND)?;
                    args.push(self.expr()?);
                }
                self.expect(')', AFTER_OPERAND)?;
                Ok(Expr::Call(s, args))
            }
            _ => self.fail(OPERAND),
        }
    }
}

pub fn parse(input: &str) -> Result<Expr> {
    parse_at(input, 1)
}

/// Parse with line numbers starting at `line`.
pub fn parse_at(input: &str, line: usize) -> Result<Expr> {
    let mut p = Parser { toks: lex(input, line)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(AFTER_OPERAND);
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// evaluation

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    /// Terms printed.
    pub depth: usize,
    pub height: usize,
    pub budget: usize,
    pub output: OutputFormat,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { depth: 8, height: 4, budget: 64, output: OutputFormat::Text }
    }
}

impl SessionConfig {
    pub fn ctx(&self) -> Ctx {
        Ctx { budget: self.budget, height: self.height }
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    /// An element, optionally with its own number of printed terms.
    Elem(TransElem, Option<usize>),
    /// Exponential parts of the support, written at `depth`.
    Monos(Vec<TransMonomial>, usize),
}

fn elem(v: Value) -> Result<TransElem> {
    match v {
        Value::Elem(e, _) => Ok(e),
        Value::Monos(..) => Err(Error::domain("a monomial set cannot be used as an operand")),
    }
}

/// `c·m` for a single-term element.
fn single_term(e: &TransElem, ctx: &Ctx) -> Result<(Q, TransMonomial)> {
    let ex = e.expansion(2, ctx)?;
    match (ex.terms.as_slice(), &ex.rest) {
        ([t], Rest::Done) => Ok(t.clone()),
        _ => Err(Error::domain("expected a single term")),
    }
}

fn small_count(e: &TransElem, ctx: &Ctx) -> Result<usize> {
    let (c, m) = single_term(e, ctx)?;
    if !m.is_one() || !c.is_integer() {
        return Err(Error::domain("expected a non-negative integer"));
    }
    c.to_integer().to_usize().ok_or_else(|| Error::domain("expected a non-negative integer"))
}

pub fn eval(e: &Expr, cfg: &SessionConfig) -> Result<Value> {
    let ctx = cfg.ctx();
    let ev = |e: &Expr| eval(e, cfg).and_then(elem);
    let v = match e {
        Expr::Num(q) => TransElem::constant(q.clone()),
        Expr::X => TransElem::x(),
        Expr::Neg(a) => ev(a)?.neg(),
        Expr::Add(a, b) => ev(a)?.add(&ev(b)?),
        Expr::Sub(a, b) => ev(a)?.sub(&ev(b)?),
        Expr::Mul(a, b) => ev(a)?.mul(&ev(b)?),
        Expr::Div(a, b) => ev(a)?.div(&ev(b)?, &ctx)?,
        Expr::Pow(a, q) => ev(a)?.pow(q, &ctx)?,
        Expr::Call(f, args) => match (f.as_str(), args.as_slice()) {
            ("exp", [a]) => ev(a)?.exp(&ctx)?,
            ("log", [a]) => ev(a)?.log(&ctx)?,
            ("d", [a]) => ev(a)?.derive()?,
            ("int", [a]) => ev(a)?.integrate(&ctx)?,
            ("up", [a]) => ev(a)?.upshift(),
            ("down", [a]) => ev(a)?.downshift(),
            ("trunc", [a, m]) => {
                let (f, m) = (ev(a)?, ev(m)?);
                let n = f.depth.max(m.depth);
                let (_, cut) = single_term(&m.at_depth(n), &ctx)?;
                f.at_depth(n).truncate(&cut, &ctx)
            }
            ("solve", [a, f]) => {
                let (a, f) = (ev(a)?, ev(f)?);
                let n = a.depth.max(f.depth);
                let a = a.at_depth(n).repr.mul_term(&Q::one(), &frak_e(n).inv());
                let y = solve_linear(&a, &f.at_depth(n).repr, &TExp::default(), ctx.budget)?;
                TransElem::new(y, n)
            }
            ("suppexp", [a]) => {
                let f = ev(a)?;
                return Ok(Value::Monos(f.supp_exp(&ctx)?, f.depth));
            }
            ("terms", [a, n]) => return Ok(Value::Elem(ev(a)?, Some(small_count(&ev(n)?, &ctx)?))),
            _ => return Err(Error::domain(format!("unknown call {f}/{}", args.len()))),
        },
    };
    Ok(Value::Elem(v.normalize(), None))
}

pub fn eval_str(input: &str, cfg: &SessionConfig) -> Result<Value> {
    eval(&parse(input)?, cfg)
}

// ---------------------------------------------------------------------------
// printing

/// First `n` terms, decreasing, with `+ O(m)` when more follow.
pub fn print_terms(f: &TransElem, n: usize, ctx: &Ctx) -> Result<String> {
    let ex = f.expansion(n, ctx)?;
    let depth = f.depth;
    Ok(render_expansion(&ex, &|m| mono_text(m, depth)))
}

fn mono_str(m: &TransMonomial, depth: usize) -> String {
    if m.is_one() {
        "1".into()
    } else {
        mono_text(m, depth)
    }
}

pub fn terms_json(f: &TransElem, n: usize, ctx: &Ctx) -> Result<Json> {
    let ex = f.expansion(n, ctx)?;
    let terms: Vec<Json> =
        ex.terms.iter().map(|(c, m)| json!({"coeff": c.to_string(), "monomial": mono_str(m, f.depth)})).collect();
    Ok(json!({"terms": terms, "truncated": !matches!(ex.rest, Rest::Done)}))
}

fn render_value(v: &Value, cfg: &SessionConfig) -> Result<String> {
    let ctx = cfg.ctx();
    Ok(match (v, cfg.output) {
        (Value::Elem(e, n), OutputFormat::Text) => print_terms(e, n.unwrap_or(cfg.depth), &ctx)?,
        (Value::Elem(e, n), OutputFormat::Json) => terms_json(e, n.unwrap_or(cfg.depth), &ctx)?.to_string(),
        (Value::Monos(ms, d), OutputFormat::Text) => {
            format!("{{{}}}", ms.iter().map(|m| mono_str(m, *d)).collect::<Vec<_>>().join(", "))
        }
        (Value::Monos(ms, d), OutputFormat::Json) => {
            json!({"monomials": ms.iter().map(|m| mono_str(m, *d)).collect::<Vec<_>>()}).to_string()
        }
    })
}

// ---------------------------------------------------------------------------
// commands

#[derive(Clone, Debug)]
pub enum Command {
    Eval(String),
    CheckTc(PathBuf),
    CheckIl(PathBuf),
    CheckTil(PathBuf),
    IlClose(PathBuf),
}

/// What a command writes and how it exits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// One expression per line; blank lines and `#` comments are skipped.
pub fn parse_set(text: &str, label: &str, cfg: &SessionConfig) -> Result<GenSet> {
    let mut elements = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        elements.push(elem(eval(&parse_at(line, i + 1)?, cfg)?)?);
    }
    Ok(GenSet::new(label, elements))
}

fn read_set(path: &PathBuf, cfg: &SessionConfig) -> Result<GenSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::domain(format!("cannot read {}: {e}", path.display())))?;
    parse_set(&text, &path.display().to_string(), cfg)
}

fn render_report(r: &ClosureReport, cfg: &SessionConfig) -> Result<String> {
    let ctx = cfg.ctx();
    let show = |e: &TransElem| print_terms(e, ctx.budget, &ctx);
    if cfg.output == OutputFormat::Json {
        let mut ws = Vec::new();
        for w in &r.witnesses {
            ws.push(json!({"element": show(&w.element)?, "missing": show(&w.missing)?, "rule": w.rule.name()}));
        }
        return Ok(json!({"verdict": r.verdict, "witnesses": ws}).to_string());
    }
    let mut s = format!("verdict: {}", r.verdict);
    for w in &r.witnesses {
        s.push_str(&format!("\nwitness: {} | missing: {} | rule: {}", show(&w.element)?, show(&w.missing)?, w.rule.name()));
    }
    Ok(s)
}

fn execute(cmd: &Command, cfg: &SessionConfig) -> Result<String> {
    let ctx = cfg.ctx();
    match cmd {
        Command::Eval(src) => render_value(&eval_str(src, cfg)?, cfg),
        Command::CheckTc(p) => render_report(&is_truncation_closed(&read_set(p, cfg)?, &ctx)?, cfg),
        Command::CheckIl(p) => render_report(&is_il_closed(&read_set(p, cfg)?, &ctx)?, cfg),
        Command::CheckTil(p) => render_report(&is_til_closed(&read_set(p, cfg)?, &ctx)?, cfg),
        Command::IlClose(p) => {
            let s = il_closure(&read_set(p, cfg)?, &ctx)?;
            let lines: Vec<String> = s.elements().iter().map(|e| print_terms(e, ctx.budget, &ctx)).collect::<Result<_>>()?;
            Ok(match cfg.output {
                OutputFormat::Text => lines.join("\n"),
                OutputFormat::Json => json!({"elements": lines}).to_string(),
            })
        }
    }
}

pub fn error_json(e: &Error) -> Json {
    let mut err = json!({"kind": e.kind(), "message": e.to_string()});
    if let Error::Syntax { line, column, expected } = e {
        err["line"] = json!(line);
        err["column"] = json!(column);
        err["expected"] = json!(expected);
    }
    json!({ "error": err })
}

pub fn run(cmd: &Command, cfg: &SessionConfig) -> Outcome {
    match execute(cmd, cfg) {
        Ok(s) => Outcome { stdout: s + "\n", stderr: String::new(), code: 0 },
        Err(e) => match cfg.output {
            OutputFormat::Json => Outcome { stdout: error_json(&e).to_string() + "\n", stderr: String::new(), code: e.exit_code() },
            OutputFormat::Text => Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: e.exit_code() },
        },
    }
}
