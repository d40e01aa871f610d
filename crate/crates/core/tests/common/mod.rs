//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use hahn::diffop::DerivationSpec;
use hahn::monomial::{Mono, Monomial, MonomialGroup, TransMonomial};
use hahn::series::Series;
use hahn::transseries::{TSeries, TransElem};
use hahn::Q;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

pub const B: usize = 64;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Deterministic samples of a strategy.
pub fn samples<S: Strategy>(s: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n).map(|_| s.new_tree(&mut runner).unwrap().current()).collect()
}

pub fn coeff() -> impl Strategy<Value = Q> {
    (prop_oneof![-4i64..=-1, 1i64..=4], 1i64..=2).prop_map(|(n, d)| qr(n, d))
}

// -- one generator x, ∂ = x·d/dx ------------------------------------------

pub fn x_group() -> MonomialGroup {
    MonomialGroup::new(&[("x", 0)]).unwrap()
}

pub fn euler(g: &MonomialGroup) -> DerivationSpec {
    DerivationSpec::new().with(g.generator("x").unwrap(), Series::one())
}

pub fn xm(g: &MonomialGroup, e: Q) -> Monomial {
    g.mono(&[("x", e)]).unwrap()
}

/// Finite series over x with the given exponent list.
pub fn x_series(g: &MonomialGroup, terms: &[(Q, Q)]) -> Series<Monomial> {
    Series::from_terms(terms.iter().map(|(c, e)| (c.clone(), xm(g, e.clone()))))
}

/// Coefficient with support in the grid x^{-1/3}ℕ · x^{-1/2}ℕ minus 1,
/// hence leading monomial ≼ x^{-1/3}.
pub fn small_coeff() -> impl Strategy<Value = Vec<(Q, Q)>> {
    prop::collection::vec((coeff(), 0i64..3, 0i64..3), 1..=3).prop_map(|ts| {
        ts.into_iter()
            .map(|(c, i, j)| {
                let (i, j) = if i == 0 && j == 0 { (0, 1) } else { (i, j) };
                (c, -qr(i, 2) - qr(j, 3))
            })
            .collect()
    })
}

/// Right-hand sides on the grid x^{k/6}·⟨x^{-1/2}, x^{-1/3}⟩ with
/// |k| ≤ 6; the first entry is the grid base.
pub fn grid_rhs() -> impl Strategy<Value = (Q, Vec<(Q, Q)>)> {
    (-6i64..=6, coeff(), prop::collection::vec((coeff(), 0i64..3, 0i64..3), 0..=2)).prop_map(|(k, c0, ts)| {
        let b = qr(k, 6);
        let mut terms = vec![(c0, b.clone())];
        terms.extend(ts.into_iter().map(|(c, i, j)| (c, &b - qr(i, 2) - qr(j, 3))));
        (b, terms)
    })
}

/// Right-hand sides with exponents in (1/6)ℤ ∩ [-1, 1].
pub fn rhs() -> impl Strategy<Value = Vec<(Q, Q)>> {
    prop::collection::vec((coeff(), -6i64..=6), 1..=3).prop_map(|ts| ts.into_iter().map(|(c, k)| (c, qr(k, 6))).collect())
}

// -- two levels x ≺ e --------------------------------------------------------

pub fn xe_group() -> MonomialGroup {
    MonomialGroup::new(&[("x", 0), ("e", 1)]).unwrap()
}

pub fn xe(g: &MonomialGroup, i: i64, j: i64) -> Monomial {
    g.mono(&[("x", q(i)), ("e", q(j))]).unwrap()
}

/// Random 2-level series: a finite part, optionally times 1/(1 − x⁻¹).
pub fn two_level() -> impl Strategy<Value = (Vec<(Q, i64, i64)>, bool)> {
    (prop::collection::vec((coeff(), -2i64..=2, -1i64..=1), 1..=5), any::<bool>())
}

pub fn build_two_level(g: &MonomialGroup, spec: &(Vec<(Q, i64, i64)>, bool)) -> Series<Monomial> {
    let f = Series::from_terms(spec.0.iter().map(|(c, i, j)| (c.clone(), xe(g, *i, *j))));
    if spec.1 {
        let one_minus = Series::from_terms([(q(1), Monomial::one()), (q(-1), xe(g, -1, 0))]);
        f.mul(&one_minus.invert(B).unwrap())
    } else {
        f
    }
}

// -- transseries ---------------------------------------------------------------

fn tx(r: Q) -> TransMonomial {
    TransMonomial::x_pow(r)
}

/// exp(x)
pub fn e1() -> TransMonomial {
    TransMonomial::exp_of(vec![(q(1), tx(q(1)))]).unwrap()
}

/// Monomials of height ≤ 2.
pub fn trans_mono() -> impl Strategy<Value = TransMonomial> {
    let r = prop_oneof![Just(q(0)), Just(q(1)), Just(q(-1)), Just(q(2)), Just(q(-2)), Just(qr(1, 2)), Just(qr(-1, 2))];
    let arg = prop_oneof![
        3 => Just(Vec::new()),
        2 => (prop_oneof![Just(q(1)), Just(q(-1)), Just(q(2))], prop_oneof![Just(q(1)), Just(qr(1, 2))])
            .prop_map(|(c, s)| vec![(c, tx(s))]),
        1 => prop_oneof![Just(q(1)), Just(q(-1))].prop_map(|c| vec![(c, e1())]),
        1 => Just(vec![(q(-1), e1()), (q(1), tx(q(1)))]),
    ];
    (r, arg).prop_map(|(r, a)| TransMonomial::new(r, a).unwrap())
}

pub fn trans_terms() -> impl Strategy<Value = Vec<(Q, TransMonomial)>> {
    prop::collection::vec((coeff(), trans_mono()), 1..=3)
}

pub fn trans_elem(ts: &[(Q, TransMonomial)], depth: usize) -> TransElem {
    TransElem::new(TSeries::from_terms(ts.to_vec()), depth)
}

// -- oracles ---------------------------------------------------------------------

/// Ordered tuples of ratios of length ≤ `max_len` with product `t`,
/// by exhaustive enumeration.
pub fn brute_factorizations<M: Mono>(t: &M, ratios: &[M], max_len: usize) -> u64 {
    fn go<M: Mono>(acc: &M, t: &M, ratios: &[M], left: usize) -> u64 {
        let mut n = (acc == t) as u64;
        if left > 0 {
            for r in ratios {
                n += go(&acc.mul(r), t, ratios, left - 1);
            }
        }
        n
    }
    go(&M::one(), t, ratios, max_len)
}

/// (a∂)ⁿ f by repeated application; exact inputs stay flat term lists.
pub fn iterate_a_d<M: Mono>(
    a: &Series<M>,
    f: &Series<M>,
    n: usize,
    d: &dyn hahn::diffop::Derivation<M>,
) -> Series<M> {
    (0..n).fold(f.clone(), |y, _| {
        let next = a.mul(&y.derive(d).unwrap());
        if next.is_exact() {
            Series::from_terms(next.terms(B).unwrap())
        } else {
            next
        }
    })
}

// -- golden files ------------------------------------------------------------------

/// A golden case: command-line arguments, expected stdout and exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Golden {
    pub name: String,
    pub args: Vec<String>,
    pub stdout: String,
    pub code: i32,
}

/// Blocks of
/// ```text
/// == name
/// arg
/// arg
/// -- stdout
/// ...
/// -- exit N
/// ```
pub fn parse_golden(text: &str) -> Vec<Golden> {
    let mut out = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(l) = lines.next() {
        let Some(name) = l.strip_prefix("== ") else { continue };
        let mut args = Vec::new();
        for l in lines.by_ref() {
            if l == "-- stdout" {
                break;
            }
            args.push(l.to_string());
        }
        let mut stdout = String::new();
        let mut code = 0;
        for l in lines.by_ref() {
            if let Some(c) = l.strip_prefix("-- exit ") {
                code = c.parse().unwrap();
                break;
            }
            stdout.push_str(l);
            stdout.push('\n');
        }
        out.push(Golden { name: name.to_string(), args, stdout, code });
    }
    out
}

pub fn render_golden(cases: &[Golden]) -> String {
    let mut s = String::new();
    for c in cases {
        s.push_str(&format!("== {}\n", c.name));
        for a in &c.args {
            s.push_str(a);
            s.push('\n');
        }
        s.push_str("-- stdout\n");
        s.push_str(&c.stdout);
        s.push_str(&format!("-- exit {}\n\n", c.code));
    }
    s
}

pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Run the built binary from the golden directory (set files are relative).
pub fn run_hahn(args: &[String]) -> (String, i32) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_hahn"))
        .args(args)
        .current_dir(golden_dir())
        .env_remove("HF_DEPTH")
        .env_remove("HF_HEIGHT")
        .env_remove("HF_BUDGET")
        .env_remove("HF_OUTPUT")
        .output()
        .expect("run hahn");
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap_or(-1))
}
