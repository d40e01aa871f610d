//! The seven acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion does.

mod common;

use common::*;
use hahn::cli::{eval, parse, parse_set, print_terms, run, Command, SessionConfig, Value};
use hahn::closure::{
    il_closure, in_support_monoid, is_il_closed, is_til_closed, is_truncation_closed, ring_stage, til_closure, GenSet,
};
use hahn::diffop::{decompose_pq, expand_gnm, gnm, solve_linear, supported_by, DiffPoly, Op};
use hahn::monomial::{count_factorizations, grid_points, GridWitness, Mono, Monomial, TransMonomial};
use hahn::series::Series;
use hahn::transseries::{Ctx, TSeries, TransElem};
use hahn::{Error, Q};
use proptest::prelude::*;

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

// -- 1. operator identities ------------------------------------------------------

fn criterion_1() -> Check {
    let g = x_group();
    let d = euler(&g);
    let cut = xm(&g, qr(-1, 2));
    let ratios = [xm(&g, qr(-1, 2)), xm(&g, qr(-1, 3))];
    for (i, (a, (b, f))) in samples((small_coeff(), grid_rhs()), 50).into_iter().enumerate() {
        let a = x_series(&g, &a);
        let f = x_series(&g, &f);
        // the first 8 points of the grid x^b·⟨x^{-1/2}, x^{-1/3}⟩ holding y
        let pts = grid_points(&xm(&g, b), &ratios, 9);
        let agree = |u: &Series<Monomial>, v: &Series<Monomial>| ok(u.sub(v).terms_above(&pts[8], B), "terms").map(|t| t.is_empty());
        let y = ok(solve_linear(&a, &f, &d, B), "solve_linear")?;
        let y_gnm = ok(expand_gnm(&a, &f, 6, &d, B), "expand_gnm")?;
        let y_pq = ok(decompose_pq(&a, &cut, &f, 6, &d, B), "decompose_pq")?;
        // independent oracle: Σ_{n≤8} (a∂)ⁿ f
        let y_naive = (0..=8).fold(Series::zero(), |acc, n| acc.add(&iterate_a_d(&a, &f, n, &d)));
        let residual = y.sub(&a.mul(&ok(y.derive(&d), "derive")?));
        ensure!(agree(&y_gnm, &y)?, "pair {i}: expand_gnm disagrees (a = {a}, f = {f})");
        ensure!(agree(&y_pq, &y)?, "pair {i}: decompose_pq disagrees (a = {a}, f = {f})");
        ensure!(agree(&y_naive, &y)?, "pair {i}: truncated Neumann sum disagrees (a = {a}, f = {f})");
        ensure!(agree(&residual, &f)?, "pair {i}: (I - a∂)y ≠ f (a = {a}, f = {f})");
    }
    Ok(())
}

// -- 2. G^n_m ----------------------------------------------------------------------

fn criterion_2() -> Check {
    for n in 1..=6 {
        ensure!(ok(gnm(n, 0), "gnm")?.is_zero(), "G^{n}_0 ≠ 0");
        let xn = (1..n).fold(DiffPoly::var(0), |p, _| p.mul(&DiffPoly::var(0)));
        ensure!(ok(gnm(n, n), "gnm")? == xn, "G^{n}_{n} = {} ≠ X^{n}", gnm(n, n).unwrap());
    }
    let g = x_group();
    let d = euler(&g);
    for (i, (a, f)) in samples((rhs(), rhs()), 20).into_iter().enumerate() {
        let a = x_series(&g, &a);
        let f = x_series(&g, &f);
        let da = ok(hahn::diffop::derivatives(&a, 4, &d), "derivatives")?;
        let df = ok(hahn::diffop::derivatives(&f, 4, &d), "derivatives")?;
        for n in 1..=4 {
            let lhs = iterate_a_d(&a, &f, n, &d);
            let rhs = (1..=n).fold(Series::zero(), |acc, m| acc.add(&gnm(n, m).unwrap().eval(&da).mul(&df[m])));
            ensure!(ok(lhs.eq_to_depth(&rhs, 8, B), "compare")?, "input {i}, n = {n}: (a∂)ⁿf ≠ Σ G^n_m(a)∂^m f");
        }
    }
    Ok(())
}

// -- 3. Neumann witnesses and factorization counts -----------------------------------

fn criterion_3() -> Check {
    let g = x_group();
    let d = euler(&g);
    for (i, (a, f)) in samples((small_coeff(), rhs()), 30).into_iter().enumerate() {
        let a = x_series(&g, &a);
        let f = x_series(&g, &f);
        let y = ok(solve_linear(&a, &f, &d, B), "solve_linear")?;
        let w = ok(Op::NeumannInv(Box::new(Op::MulDerive(a.clone()))).witness(&f, &d, B), "witness")?;
        let f_supp: Vec<Monomial> = ok(f.terms(B), "terms")?.into_iter().map(|(_, m)| m).collect();
        let emitted = ok(y.expansion(16, B), "expansion")?.terms;
        ensure!(supported_by(&emitted, &w, &f_supp, 16), "pair {i}: a term of y lies outside W*·supp f");
    }

    let h = xe_group();
    let candidates = [xe(&h, -1, 0), xe(&h, -2, 0), xm(&h, qr(-3, 2)), xe(&h, 0, -1), xe(&h, -1, -1), xe(&h, 0, -2)];
    let grid = (prop::sample::subsequence(candidates.to_vec(), 1..=3), prop::collection::vec(0usize..3, 0..=3), -1i64..=1);
    for (i, (ratios, picks, b)) in samples(grid, 30).into_iter().enumerate() {
        let base = xe(&h, b, 0);
        let target = picks.iter().fold(base.clone(), |m, &k| m.mul(&ratios[k % ratios.len()]));
        let w = ok(GridWitness::new(base.clone(), ratios.clone()), "grid")?;
        let fast = ok(count_factorizations(&target, &w, 6), "count_factorizations")?;
        let brute = brute_factorizations(&target.div(&base), &ratios, 6);
        ensure!(fast == brute, "grid {i}: count_factorizations = {fast}, enumeration = {brute}");
    }
    Ok(())
}

// -- 4. truncation algebra ------------------------------------------------------------

fn criterion_4() -> Check {
    let g = xe_group();
    let d = hahn::diffop::DerivationSpec::new()
        .with(g.generator("x").unwrap(), Series::one())
        .with(g.generator("e").unwrap(), Series::constant(q(2)));
    let cases = samples((two_level(), two_level(), -2i64..=2, -2i64..=2), 50);
    for (k, (fs, gs, i, j)) in cases.into_iter().enumerate() {
        let f = build_two_level(&g, &fs);
        let h = build_two_level(&g, &gs);
        let cut = xe(&g, i, j);
        let tr = |s: &Series<Monomial>| s.truncate(&cut, B);
        let same = |a: &Series<Monomial>, b: &Series<Monomial>| ok(a.eq_to_depth(b, 8, B), "compare");
        ensure!(same(&tr(&f.add(&h)), &tr(&f).add(&tr(&h)))?, "series {k}: truncation not additive");
        ensure!(same(&tr(&tr(&f)), &tr(&f))?, "series {k}: truncation not idempotent");
        let df = ok(f.derive(&d), "derive")?;
        ensure!(same(&ok(tr(&f).derive(&d), "derive")?, &tr(&df))?, "series {k}: ∂ does not commute with truncation");

        let coeff_at = |gamma: &Monomial| ok(f.level_coefficient(1, gamma, B), "level_coefficient");
        // trtr1: the inner truncation at γ is the outer truncation at the
        // largest support point of class γ above γ, or at γ itself
        for l in -2..=2 {
            let gamma = xe(&g, 0, l);
            let inner = f.truncate_at_level(1, &gamma);
            let p = match ok(coeff_at(&gamma)?.leading(B), "leading")? {
                Some((_, m)) if m.is_infinite() => gamma.mul(&m),
                _ => gamma.clone(),
            };
            ensure!(same(&inner, &f.truncate(&p, B))?, "series {k}: inner truncation at {gamma} is not outer at {p}");
        }
        // trtr2: outer truncation at γ·δ = inner truncation at γ + φ·γ with φ = f_γ|_δ
        let (gamma, delta) = (xe(&g, 0, j), xe(&g, i, 0));
        let inner = f.truncate_at_level(1, &gamma);
        let s = coeff_at(&gamma)?.truncate(&delta, B).mul_term(&q(1), &gamma);
        ensure!(same(&tr(&f), &inner.add(&s))?, "series {k}: outer truncation at {cut} ≠ inner + φ·γ");
    }
    Ok(())
}

// -- 5. transseries ----------------------------------------------------------------------

fn without_constant(ts: &[(Q, TransMonomial)]) -> Vec<(Q, TransMonomial)> {
    let f = TSeries::from_terms(ts.to_vec());
    f.terms(B).unwrap().into_iter().filter(|(_, m)| !m.is_one()).collect()
}

fn criterion_5() -> Check {
    let ctx = Ctx::default();
    let same = |a: &TransElem, b: &TransElem, what: &str| ok(a.eq_to_depth(b, 8, &ctx), what);
    for (i, (fs, gs)) in samples((trans_terms(), trans_terms()), 30).into_iter().enumerate() {
        let f = trans_elem(&without_constant(&fs), 0);
        let g = trans_elem(&without_constant(&gs), 0);
        let ef = ok(f.exp(&ctx), "exp")?;
        ensure!(same(&ok(ef.log(&ctx), "log")?, &f, "log∘exp")?, "input {i}: log(exp(f)) ≠ f for f = {}", f.render(4, B));
        let eg = ok(g.exp(&ctx), "exp")?;
        let efg = ok(f.add(&g).exp(&ctx), "exp")?;
        ensure!(same(&efg, &ef.mul(&eg), "exp morphism")?, "input {i}: exp(f + g) ≠ exp(f)·exp(g)");
        // positive with leading coefficient 1
        if let Some((c, _)) = ok(TSeries::from_terms(fs.clone()).leading(B), "leading")? {
            let h = trans_elem(&fs, 0).scale(&(Q::from_integer(1.into()) / c));
            let back = ok(ok(h.log(&ctx), "log")?.exp(&ctx), "exp")?;
            ensure!(same(&back, &h, "exp∘log")?, "input {i}: exp(log(h)) ≠ h for h = {}", h.render(4, B));
        }
    }

    let dl = ok(TransElem::log_iter(1).derive(), "derive")?;
    ensure!(same(&dl, &TransElem::constant(q(1)), "∂ℓ₁")?, "∂ℓ₁ = {}", dl.render(4, B));

    for (i, (fs, depth)) in samples((trans_terms(), 0usize..=2), 20).into_iter().enumerate() {
        let f = trans_elem(&fs, depth);
        let f0 = trans_elem(&without_constant(&fs), depth);
        let id = ok(ok(f.derive(), "derive")?.integrate(&ctx), "integrate")?;
        ensure!(same(&id, &f0, "∫∂")?, "input {i}: ∫∂f ≠ f − f₀ for f = {}", f.render(4, B));
        let di = ok(ok(f.integrate(&ctx), "integrate")?.derive(), "derive")?;
        ensure!(same(&di, &f, "∂∫")?, "input {i}: ∂∫f ≠ f for f = {}", f.render(4, B));
    }

    let ex = TransElem::monomial(q(1), e1());
    let ei = ok(ex.integrate(&ctx), "integrate")?;
    let want: Vec<(Q, TransMonomial)> =
        [(1, -1), (1, -2), (2, -3), (6, -4)].iter().map(|&(c, r)| (q(c), e1().mul(&TransMonomial::x_pow(q(r))))).collect();
    let got = ok(ei.expansion(4, &ctx), "expansion")?.terms;
    ensure!(got == want, "∫exp(x) starts {:?}", got);
    ensure!(same(&ok(ei.derive(), "derive")?, &ex, "∂∫exp")?, "∂∫exp(x) ≠ exp(x)");
    Ok(())
}

// -- 6. closure -------------------------------------------------------------------------

fn set(lines: &[&str]) -> GenSet {
    parse_set(&lines.join("\n"), "test", &SessionConfig::default()).unwrap()
}

fn show(e: &TransElem) -> String {
    e.render(8, B)
}

fn criterion_6() -> Check {
    let ctx = Ctx::default();
    // (set, truncation closed, IL-closed, first witness as (element, missing, rule))
    let hand: [(&[&str], bool, bool, Option<(&str, &str, &str)>); 6] = [
        (&["x + 1"], false, true, Some(("x + 1", "x", "truncation"))),
        (&["x + 1", "x", "0"], true, true, None),
        (&[], true, true, None),
        (&["exp(x + x^(1/2))"], false, false, None),
        (&["exp(x + x^(1/2))", "x + x^(1/2)"], false, true, None),
        (&["x^2 + 1"], false, true, None),
    ];
    for (lines, tc, il, witness) in hand {
        let s = set(lines);
        let rtc = ok(is_truncation_closed(&s, &ctx), "is_truncation_closed")?;
        let ril = ok(is_il_closed(&s, &ctx), "is_il_closed")?;
        let rtil = ok(is_til_closed(&s, &ctx), "is_til_closed")?;
        ensure!(rtc.verdict == tc, "{lines:?}: truncation closed = {}", rtc.verdict);
        ensure!(ril.verdict == il, "{lines:?}: IL-closed = {}", ril.verdict);
        ensure!(rtil.verdict == (tc && il), "{lines:?}: TIL-closed = {}", rtil.verdict);
        if let Some((e, m, r)) = witness {
            let w = &rtc.witnesses[0];
            ensure!((show(&w.element).as_str(), show(&w.missing).as_str(), w.rule.name()) == (e, m, r), "{lines:?}: witness {w:?}");
        }
    }
    let open = ok(is_il_closed(&set(&["exp(x + x^(1/2))"]), &ctx), "is_il_closed")?;
    ensure!(
        open.witnesses.iter().any(|w| show(&w.missing) == "x + x^(1/2)"),
        "exp(x + x^(1/2)) should miss x + x^(1/2)"
    );
    let closed = ok(il_closure(&set(&["exp(x + x^(1/2))"]), &ctx), "il_closure")?;
    let names: Vec<String> = closed.elements().iter().map(show).collect();
    ensure!(names == ["exp(x + x^(1/2))", "x + x^(1/2)"], "il_closure gave {names:?}");

    let gen = prop::collection::vec(prop::collection::vec((coeff(), trans_mono()), 1..=2), 1..=2);
    for (i, raw) in samples(gen, 20).into_iter().enumerate() {
        let raw = GenSet::new("random", raw.iter().map(|ts| trans_elem(ts, 0)).collect());
        let once = ok(il_closure(&raw, &ctx), "il_closure")?;
        let twice = ok(il_closure(&once, &ctx), "il_closure")?;
        ensure!(same_elements(&once, &twice, &ctx)?, "set {i}: il_closure is not idempotent");

        let s = ok(til_closure(&raw, &ctx), "til_closure")?;
        ensure!(ok(is_til_closed(&s, &ctx), "is_til_closed")?.verdict, "set {i}: til_closure is not TIL-closed");
        // supp(S′) ⊆ supp(S)*
        for f in s.elements() {
            for (_, m) in ok(ok(f.derive(), "derive")?.repr.terms(B), "terms")? {
                ensure!(ok(in_support_monoid(&s, &m, 4, &ctx), "support")?, "set {i}: ∂ of {} leaves supp(S)*", show(f));
            }
        }
        for k in 1..=2 {
            let stage = ok(ring_stage(&s, k, &ctx), "ring_stage")?;
            let r = ok(is_il_closed(&stage, &ctx), "is_il_closed")?;
            ensure!(r.verdict, "set {i}: stage {k} is not IL-closed: S = {:?}, witness {} / {} / {}", s.elements().iter().map(show).collect::<Vec<_>>(), show(&r.witnesses[0].element), show(&r.witnesses[0].missing), r.witnesses[0].rule.name());
        }
    }
    Ok(())
}

fn same_elements(a: &GenSet, b: &GenSet, ctx: &Ctx) -> Result<bool, String> {
    if a.len() != b.len() {
        return Ok(false);
    }
    for e in a.elements() {
        let mut found = false;
        for f in b.elements() {
            if ok(e.eq_to_depth(f, 8, ctx), "compare")? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

// -- 7. command line ----------------------------------------------------------------

fn corpus() -> Vec<String> {
    let text = std::fs::read_to_string(golden_dir().join("corpus.txt")).unwrap();
    text.lines().filter(|l| !l.is_empty()).map(String::from).collect()
}

fn criterion_7() -> Check {
    let cfg = SessionConfig::default();
    let ctx = cfg.ctx();
    for src in corpus() {
        let e = ok(parse(&src), &src)?;
        ensure!(ok(parse(&e.to_string()), "reparse")? == e, "{src}: AST does not survive printing as {e}");
        let Value::Elem(v, n) = ok(eval(&e, &cfg), &src)? else { continue };
        let n = n.unwrap_or(cfg.depth);
        let printed = ok(print_terms(&v, n, &ctx), "print")?;
        let finite = printed.split(" + O(").next().unwrap();
        let Value::Elem(back, _) = ok(eval(&ok(parse(finite), finite)?, &cfg), finite)? else {
            return Err(format!("{finite} evaluated to a monomial set"));
        };
        let again = ok(print_terms(&back, n, &ctx), "print")?;
        ensure!(again == finite, "{src}: printed {printed}, reparsed value prints {again}");
    }

    for file in ["eval.golden", "json.golden", "sets.golden", "errors.golden"] {
        let cases = parse_golden(&std::fs::read_to_string(golden_dir().join(file)).unwrap());
        for c in &cases {
            let (stdout, code) = run_hahn(&c.args);
            ensure!(stdout == c.stdout && code == c.code, "{file}: {} gave exit {code} and {stdout:?}", c.name);
        }
    }

    let exits = [
        ("exp(x", 1),
        ("log(-x)", 2),
        ("solve(x, x)", 2),
        ("exp(exp(exp(exp(exp(x)))))", 3),
        ("exp(1)", 4),
        ("1/0", 5),
        ("x + 1", 0),
    ];
    for (src, want) in exits {
        let out = run(&Command::Eval(src.into()), &cfg);
        ensure!(out.code == want, "{src}: exit {} (want {want}), stderr {}", out.code, out.stderr);
        let (_, code) = run_hahn(&["eval".into(), src.into()]);
        ensure!(code == want, "hahn eval {src}: exit {code} (want {want})");
    }
    ensure!(Error::NotSummable("family".into()).exit_code() == 2, "not-summable exit code");
    let (_, code) = run_hahn(&["--depth".into(), "x".into(), "eval".into(), "x".into()]);
    ensure!(code == 1, "usage error exit {code}");
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("operator identities", criterion_1),
        ("G^n_m", criterion_2),
        ("Neumann witnesses and factorizations", criterion_3),
        ("truncation algebra", criterion_4),
        ("transseries", criterion_5),
        ("closure", criterion_6),
        ("command line", criterion_7),
    ];
    let mut failed = Vec::new();
    for (n, (name, check)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        match std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into())) {
            Ok(()) => println!("criterion {} ({name}): PASS [{:.1?}]", n + 1, t.elapsed()),
            Err(e) => {
                println!("criterion {} ({name}): FAIL: {e}", n + 1);
                failed.push(n + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
