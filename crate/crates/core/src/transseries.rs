//! The exp–log tower. An element is `(repr, n)` standing for `repr(ℓₙ)`,
//! with `repr` a series over transmonomials and ℓₙ the n-fold logarithm;
//! `(repr, n)` and `(repr↑, n+1)` denote the same transseries.
//!
//! The derivation is ∂ = x·d/dx throughout.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};

use crate::diffop::{neumann_apply, Derivation};
use crate::monomial::{Mono, TransMonomial};
use crate::series::{Expansion, PowerSeriesN, Rest, Series, DEFAULT_BUDGET};
use crate::{Error, Result, Q};

pub type TSeries = Series<TransMonomial>;

/// Resource limits shared by every tower operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ctx {
    /// Maximum expansion degree explored when certifying terms.
    pub budget: usize,
    /// Maximum exponential height of any monomial created by `exp`.
    pub height: usize,
}

impl Default for Ctx {
    fn default() -> Self {
        Ctx { budget: DEFAULT_BUDGET, height: 4 }
    }
}

/// ∂ = x·d/dx: c(x^r·exp(a)) = r + ∂a.
#[derive(Default)]
pub struct TExp {
    cache: RefCell<HashMap<TransMonomial, TSeries>>,
}

impl Derivation<TransMonomial> for TExp {
    fn c(&self, m: &TransMonomial) -> Result<TSeries> {
        if let Some(s) = self.cache.borrow().get(m) {
            return Ok(s.clone());
        }
        let mut out = TSeries::constant(m.r().clone());
        for (c, mi) in m.exp_terms() {
            out = out.add(&self.c(mi)?.mul_term(c, mi));
        }
        self.cache.borrow_mut().insert(m.clone(), out.clone());
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// x ↦ exp(x) on monomials

/// x^r·exp(a) ↦ exp(r·x + a↑)
pub fn up_mono(m: &TransMonomial) -> TransMonomial {
    let mut terms = Vec::new();
    if !m.r().is_zero() {
        terms.push((m.r().clone(), TransMonomial::x()));
    }
    for (c, mi) in m.exp_terms() {
        terms.push((c.clone(), up_mono(mi)));
    }
    TransMonomial::exp_of(terms).expect("upshift preserves infinite arguments")
}

/// Inverse of [`up_mono`] where defined.
pub fn down_mono(m: &TransMonomial) -> Option<TransMonomial> {
    if !m.r().is_zero() {
        return None;
    }
    let mut r = Q::zero();
    let mut terms = Vec::new();
    for (c, mi) in m.exp_terms() {
        if mi.is_pure_power() {
            if !mi.r().is_one() {
                return None;
            }
            r = c.clone();
        } else {
            terms.push((c.clone(), down_mono(mi)?));
        }
    }
    TransMonomial::new(r, terms).ok()
}

pub fn up_series(s: &TSeries) -> TSeries {
    s.map_monos(up_mono)
}

fn down_series(s: &TSeries) -> Option<TSeries> {
    let base = down_mono(s.base())?;
    let ratios: Option<Vec<_>> = s.ratios().iter().map(down_mono).collect();
    let ratios = ratios?;
    Some(s.map_monos(|m| {
        if m == s.base() {
            base.clone()
        } else {
            let i = s.ratios().iter().position(|r| r == m).unwrap();
            ratios[i].clone()
        }
    }))
}

/// e₀ = x, e_{k+1} = exp(e_k)
pub fn e_mono(k: usize) -> TransMonomial {
    let mut m = TransMonomial::x();
    for _ in 0..k {
        m = TransMonomial::exp_of(vec![(Q::one(), m)]).unwrap();
    }
    m
}

/// 𝔢ₙ = e₀·e₁⋯e_{n−1}
pub fn frak_e(n: usize) -> TransMonomial {
    (0..n).fold(TransMonomial::one(), |a, k| a.mul(&e_mono(k)))
}

fn var_name(depth: usize) -> String {
    (0..depth).fold("x".to_string(), |s, _| format!("log({s})"))
}

/// Text for `m(ℓ_depth)`, written at the lowest depth that represents it.
pub fn mono_text(m: &TransMonomial, depth: usize) -> String {
    if depth > 0 {
        if let Some(d) = down_mono(m) {
            return mono_text(&d, depth - 1);
        }
    }
    m.fmt_with_arg(&var_name(depth), &|mu| mono_text(mu, depth))
}

// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct TransElem {
    pub repr: TSeries,
    pub depth: usize,
}

impl std::fmt::Debug for TransElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render(8, DEFAULT_BUDGET))
    }
}

impl std::fmt::Display for TransElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render(8, DEFAULT_BUDGET))
    }
}

impl TransElem {
    pub fn new(repr: TSeries, depth: usize) -> Self {
        TransElem { repr, depth }
    }

    pub fn zero() -> Self {
        Self::new(TSeries::zero(), 0)
    }

    pub fn constant(c: Q) -> Self {
        Self::new(TSeries::constant(c), 0)
    }

    pub fn x() -> Self {
        Self::new(TSeries::monomial(Q::one(), TransMonomial::x()), 0)
    }

    /// ℓₙ
    pub fn log_iter(n: usize) -> Self {
        Self::new(TSeries::monomial(Q::one(), TransMonomial::x()), n)
    }

    pub fn monomial(c: Q, m: TransMonomial) -> Self {
        Self::new(TSeries::monomial(c, m), 0)
    }

    pub fn is_known_zero(&self) -> bool {
        self.repr.is_known_zero()
    }

    /// Same element, represented `k` levels deeper.
    pub fn lift(&self, k: usize) -> Self {
        let mut r = self.repr.clone();
        for _ in 0..k {
            r = up_series(&r);
        }
        Self::new(r, self.depth + k)
    }

    pub fn at_depth(&self, n: usize) -> Self {
        assert!(n >= self.depth);
        self.lift(n - self.depth)
    }

    /// Shallowest representation.
    pub fn normalize(&self) -> Self {
        let mut cur = self.clone();
        while cur.depth > 0 {
            if cur.repr.is_known_zero() {
                return Self::zero();
            }
            match down_series(&cur.repr) {
                Some(r) => cur = Self::new(r, cur.depth - 1),
                None => break,
            }
        }
        cur
    }

    fn pair(&self, o: &Self) -> (Self, Self) {
        let n = self.depth.max(o.depth);
        (self.at_depth(n), o.at_depth(n))
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b) = self.pair(o);
        Self::new(a.repr.add(&b.repr), a.depth)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let (a, b) = self.pair(o);
        Self::new(a.repr.sub(&b.repr), a.depth)
    }

    pub fn neg(&self) -> Self {
        Self::new(self.repr.neg(), self.depth)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.repr.scale(c), self.depth)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = self.pair(o);
        Self::new(a.repr.mul(&b.repr), a.depth)
    }

    pub fn invert(&self, ctx: &Ctx) -> Result<Self> {
        Ok(Self::new(self.repr.invert(ctx.budget)?, self.depth))
    }

    pub fn div(&self, o: &Self, ctx: &Ctx) -> Result<Self> {
        Ok(self.mul(&o.invert(ctx)?))
    }

    /// Integer or rational power of a monomial-led element c·𝔪·(1+ε), c > 0
    /// when the exponent is not an integer.
    pub fn pow(&self, e: &Q, ctx: &Ctx) -> Result<Self> {
        if e.is_integer() {
            let n = e.to_integer();
            let k: u32 = n.abs().try_into().map_err(|_| Error::domain("exponent too large"))?;
            let p = Self::new(self.repr.pow(k), self.depth);
            return if n.is_negative() { p.invert(ctx) } else { Ok(p) };
        }
        let (c, m) = self.repr.leading(ctx.budget)?.ok_or(Error::ZeroDivision)?;
        if !c.is_one() {
            return Err(Error::NonRationalConstant(format!("({c})^({e})")));
        }
        let eps = self.repr.mul_term(&Q::one(), &m.inv()).sub(&TSeries::one());
        let binom = {
            let e = e.clone();
            PowerSeriesN::new(1, move |j| {
                let mut acc = Q::one();
                for i in 0..j[0] {
                    acc = acc * (&e - Q::from_integer(i.into())) / Q::from_integer((i + 1).into());
                }
                acc
            })
        };
        let s = TSeries::eval_ps(&binom, &[eps], ctx.budget)?;
        Ok(Self::new(s.mul_term(&Q::one(), &m.pow(e)), self.depth))
    }

    pub fn upshift(&self) -> Self {
        if self.depth > 0 {
            Self::new(self.repr.clone(), self.depth - 1)
        } else {
            Self::new(up_series(&self.repr), 0)
        }
    }

    pub fn downshift(&self) -> Self {
        Self::new(self.repr.clone(), self.depth + 1)
    }

    pub fn derive(&self) -> Result<Self> {
        let d = self.repr.derive(&TExp::default())?;
        Ok(Self::new(d.mul_term(&Q::one(), &frak_e(self.depth).inv()), self.depth))
    }

    pub fn exp(&self, ctx: &Ctx) -> Result<Self> {
        let (inf, c, small) = self.repr.decompose(ctx.budget)?;
        if !c.is_zero() {
            return Err(Error::NonRationalConstant(format!("exp({c})")));
        }
        let terms = inf.terms(ctx.budget)?;
        let m = TransMonomial::exp_of(terms.into_iter().collect())?;
        if m.height() > ctx.height {
            return Err(Error::budget(format!("exponential height {} exceeds {}", m.height(), ctx.height)));
        }
        let e = TSeries::eval_ps(&PowerSeriesN::exp(), &[small], ctx.budget)?;
        Ok(Self::new(e.mul_term(&Q::one(), &m), self.depth))
    }

    pub fn log(&self, ctx: &Ctx) -> Result<Self> {
        let (c, m) = self.repr.leading(ctx.budget)?.ok_or_else(|| Error::domain("log of zero"))?;
        if !c.is_positive() {
            return Err(Error::domain(format!("log of a negative element (leading coefficient {c})")));
        }
        if !c.is_one() {
            return Err(Error::NonRationalConstant(format!("log({c})")));
        }
        let eps = self.repr.mul_term(&Q::one(), &m.inv()).sub(&TSeries::one());
        let l = TSeries::eval_ps(&PowerSeriesN::log1p(), &[eps], ctx.budget)?;
        let a = TSeries::from_terms(m.exp_terms().iter().cloned());
        let body = a.add(&l);
        let out = if m.r().is_zero() {
            Self::new(body, self.depth)
        } else {
            let rx = TSeries::monomial(m.r().clone(), TransMonomial::x());
            Self::new(up_series(&body).add(&rx), self.depth + 1)
        };
        Ok(out.normalize())
    }

    /// An antiderivative with integration constant 0.
    pub fn integrate(&self, ctx: &Ctx) -> Result<Self> {
        self.integrate_with(&Q::zero(), ctx)
    }

    /// An antiderivative plus the constant `r`.
    pub fn integrate_with(&self, r: &Q, ctx: &Ctx) -> Result<Self> {
        let h = self.repr.mul_term(&Q::one(), &frak_e(self.depth));
        let (g, b) = integrate_series(&h, ctx)?;
        let out = if b.is_zero() {
            Self::new(g, self.depth)
        } else {
            let bx = TSeries::monomial(b, TransMonomial::x());
            Self::new(up_series(&g).add(&bx), self.depth + 1)
        };
        Ok(out.add(&Self::constant(r.clone())).normalize())
    }

    /// {E(a) : x^r·E(a) ∈ supp f}, over the first `ctx.budget` terms.
    pub fn supp_exp(&self, ctx: &Ctx) -> Result<Vec<TransMonomial>> {
        let e = self.repr.expansion(ctx.budget, ctx.budget)?;
        let set: BTreeSet<TransMonomial> = e.terms.iter().map(|(_, m)| m.exp_part()).collect();
        Ok(set.into_iter().rev().collect())
    }

    pub fn eq_to_depth(&self, o: &Self, d: usize, ctx: &Ctx) -> Result<bool> {
        let (a, b) = self.pair(o);
        a.repr.eq_to_depth(&b.repr, d, ctx.budget)
    }

    pub fn expansion(&self, n: usize, ctx: &Ctx) -> Result<Expansion<TransMonomial>> {
        self.repr.expansion(n, ctx.budget)
    }

    pub fn mono_text(&self, m: &TransMonomial) -> String {
        mono_text(m, self.depth)
    }

    pub fn render(&self, n: usize, budget: usize) -> String {
        let depth = self.depth;
        self.repr.render(n, budget, &|m| mono_text(m, depth))
    }

    /// Terms ≻ `cut` (cut given at this element's depth).
    pub fn truncate(&self, cut: &TransMonomial, ctx: &Ctx) -> Self {
        Self::new(self.repr.truncate(cut, ctx.budget), self.depth)
    }

    /// First `n` terms as an exact element.
    pub fn first_terms(&self, n: usize, ctx: &Ctx) -> Result<Self> {
        let e = self.repr.expansion(n, ctx.budget)?;
        if let Rest::Bound(_) = e.rest {
            if e.terms.len() < n {
                return Err(Error::budget("could not certify the requested terms"));
            }
        }
        Ok(Self::new(TSeries::from_terms(e.terms), self.depth))
    }
}

/// Highest level of any monomial in the grid of `s`.
fn top_level(ms: impl Iterator<Item = TransMonomial>) -> u32 {
    ms.flat_map(|m| m.levels().into_iter().map(|(l, _)| l)).max().unwrap_or(0)
}

fn level_component(m: &TransMonomial, n: u32) -> TransMonomial {
    m.levels().into_iter().find(|(l, _)| *l == n).map(|(_, c)| c).unwrap_or_else(TransMonomial::one)
}

/// G and b with ∂G = h − b.
pub fn integrate_series(h: &TSeries, ctx: &Ctx) -> Result<(TSeries, Q)> {
    if h.is_known_zero() {
        return Ok((TSeries::zero(), Q::zero()));
    }
    let grid = std::iter::once(h.base().clone()).chain(h.ratios().iter().cloned());
    let n = top_level(grid);
    if n == 0 {
        let b = h.coefficient(&TransMonomial::one(), ctx.budget)?;
        let g = h.map_terms(|m, c| (!m.r().is_zero()).then(|| c / m.r()));
        return Ok((g, b));
    }
    let groups: Vec<(TransMonomial, TSeries)> = if h.is_exact() {
        let mut by: Vec<(TransMonomial, Vec<(Q, TransMonomial)>)> = Vec::new();
        for (c, m) in h.terms(ctx.budget)? {
            let key = level_component(&m, n);
            let rest = m.div(&key);
            match by.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push((c, rest)),
                None => by.push((key, vec![(c, rest)])),
            }
        }
        by.into_iter().map(|(k, ts)| (k, TSeries::from_terms(ts))).collect()
    } else {
        if h.ratios().iter().any(|r| !level_component(r, n).is_one()) {
            return Err(Error::domain("integration needs finitely many exponential components"));
        }
        let key = level_component(h.base(), n);
        vec![(key.clone(), h.mul_term(&Q::one(), &key.inv()))]
    };
    let d = TExp::default();
    let mut g = TSeries::zero();
    let mut b = Q::zero();
    for (key, part) in groups {
        if key.is_one() {
            let (gi, bi) = integrate_series(&part, ctx)?;
            g = g.add(&gi);
            b += bi;
            continue;
        }
        // g_a' + c_a·g_a = h_a  ⇔  g_a = (I + ∂/c_a)⁻¹(h_a/c_a)
        let ca = d.c(&key)?;
        let inv = ca.invert(ctx.budget)?;
        let ga = neumann_apply(&[(inv.neg(), 1)], &part.mul(&inv), &d, ctx.budget)?;
        g = g.add(&ga.mul_term(&Q::one(), &key));
    }
    Ok((g, b))
}

/// Transerial condition on the level components of the given monomials:
/// c(E(aᵢ)) = ∂aᵢ has leading monomial ≻ 1 at level i.
pub fn is_transerial_on(ms: &[TransMonomial], ctx: &Ctx) -> Result<bool> {
    let d = TExp::default();
    for m in ms {
        for (lvl, comp) in m.levels() {
            if lvl == 0 {
                continue;
            }
            let Some((_, lead)) = d.c(&comp)?.leading(ctx.budget)? else { return Ok(false) };
            if level_component(&lead, lvl - 1) <= TransMonomial::one() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
