//! Grid-based Hahn series `base·P(r₁,…,rₖ)` with lazily expanded `P`.
//!
//! Only terms that are *certified* are ever reported: with ρ the largest
//! ratio, components of degree ≤ D determine every coefficient at monomials
//! ≻ base·ρ^{D+1}. Budgets bound D.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_traits::{One, Signed, Zero};

use crate::diffop::Derivation;
use crate::monomial::{fmt_sum, grid_points, GridWitness, Mono, Monomial};
use crate::ps::{deg, vectors_of_degree, CoeffFn, Comp, Idx, Ps, RebasePlan};
use crate::{Error, Result, Q};

pub const DEFAULT_BUDGET: usize = 64;

pub struct Series<M: Mono> {
    base: M,
    ratios: Rc<Vec<M>>,
    ps: Ps,
    cache: Rc<Cache<M>>,
}

struct Cache<M> {
    monos: RefCell<HashMap<Idx, M>>,
    /// (degrees scanned, accumulated coefficients by monomial)
    acc: RefCell<(usize, HashMap<M, Q>)>,
    /// `bounds[d]` is the best bound known for degrees > d
    bounds: RefCell<Vec<Option<M>>>,
}

impl<M: Mono> Clone for Series<M> {
    fn clone(&self) -> Self {
        Series { base: self.base.clone(), ratios: self.ratios.clone(), ps: self.ps.clone(), cache: self.cache.clone() }
    }
}

impl<M: Mono> std::fmt::Debug for Series<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render(8, DEFAULT_BUDGET, &|m: &M| m.to_string()))
    }
}

/// First terms of a series and what is known beyond them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion<M> {
    pub terms: Vec<(Q, M)>,
    pub rest: Rest<M>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rest<M> {
    /// Nothing follows.
    Done,
    /// The next nonzero term sits at this monomial.
    Next(M),
    /// Remaining terms are ≼ this monomial; none were certified within budget.
    Bound(M),
}

/// A multivariate power series given by its coefficient oracle.
#[derive(Clone)]
pub struct PowerSeriesN {
    pub arity: usize,
    coeff: CoeffFn,
}

impl PowerSeriesN {
    pub fn new(arity: usize, coeff: impl Fn(&[u32]) -> Q + 'static) -> Self {
        PowerSeriesN { arity, coeff: Rc::new(coeff) }
    }

    pub fn coeff(&self, j: &[u32]) -> Q {
        (self.coeff)(j)
    }

    /// exp X
    pub fn exp() -> Self {
        Self::new(1, |j| Q::new(1.into(), factorial(j[0])))
    }

    /// (1+X)⁻¹
    pub fn geometric() -> Self {
        Self::new(1, |j| if j[0] % 2 == 0 { Q::one() } else { -Q::one() })
    }

    /// log(1+X)
    pub fn log1p() -> Self {
        Self::new(1, |j| match j[0] {
            0 => Q::zero(),
            n => Q::new(if n % 2 == 1 { 1.into() } else { (-1).into() }, n.into()),
        })
    }

    /// ∂F/∂Xᵢ
    pub fn partial(&self, i: usize) -> Self {
        let f = self.coeff.clone();
        Self::new(self.arity, move |j| {
            let mut k = j.to_vec();
            k[i] += 1;
            f(&k) * Q::from_integer(k[i].into())
        })
    }
}

pub(crate) fn factorial(n: u32) -> num_bigint::BigInt {
    (1..=n).fold(num_bigint::BigInt::one(), |a, k| a * k)
}

/// Summable family descriptors.
pub enum Family<M: Mono> {
    Finite(Vec<Series<M>>),
    /// Σ hₙ·εⁿ
    Geometric { coeffs: Rc<dyn Fn(u32) -> Q>, eps: Series<M> },
    /// Σ_k coeff(k)·base·ratios^k
    Grid { base: M, ratios: Vec<M>, coeff: CoeffFn },
}

/// Merge ratio lists; returns the union (starting with `a`) and where each
/// element of `b` landed.
fn merge_ratios<M: Mono>(a: &[M], b: &[M]) -> (Vec<M>, Vec<usize>) {
    let mut u = a.to_vec();
    let map = b
        .iter()
        .map(|r| match u.iter().position(|x| x == r) {
            Some(i) => i,
            None => {
                u.push(r.clone());
                u.len() - 1
            }
        })
        .collect();
    (u, map)
}

fn unit(n: usize, i: usize) -> Idx {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

impl<M: Mono> Series<M> {
    fn from_parts(base: M, ratios: Vec<M>, ps: Ps) -> Self {
        debug_assert_eq!(ratios.len(), ps.nvars());
        debug_assert!(ratios.iter().all(|r| r.is_infinitesimal()));
        Series {
            base,
            ratios: Rc::new(ratios),
            ps,
            cache: Rc::new(Cache { monos: RefCell::new(HashMap::new()), acc: RefCell::new((0, HashMap::new())), bounds: RefCell::new(Vec::new()) }),
        }
    }

    fn with_ps(&self, ps: Ps) -> Self {
        Series::from_parts(self.base.clone(), (*self.ratios).clone(), ps)
    }

    pub fn zero() -> Self {
        Series::from_parts(M::one(), Vec::new(), Ps::zero(0))
    }

    pub fn constant(c: Q) -> Self {
        Series::from_parts(M::one(), Vec::new(), Ps::constant(0, c))
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn monomial(c: Q, m: M) -> Self {
        Series::from_parts(m, Vec::new(), Ps::constant(0, c))
    }

    /// A finite series; repeated monomials are summed.
    pub fn from_terms(terms: impl IntoIterator<Item = (Q, M)>) -> Self {
        let mut acc: BTreeMap<M, Q> = BTreeMap::new();
        for (c, m) in terms {
            *acc.entry(m).or_insert_with(Q::zero) += c;
        }
        acc.retain(|_, c| !c.is_zero());
        let Some((base, base_c)) = acc.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) else {
            return Self::zero();
        };
        let others: Vec<(M, Q)> = acc.into_iter().rev().skip(1).collect();
        let n = others.len();
        let ratios: Vec<M> = others.iter().map(|(m, _)| m.div(&base)).collect();
        let mut entries = Vec::with_capacity(n + 1);
        entries.push((vec![0; n], base_c));
        for (i, (_, c)) in others.iter().enumerate() {
            entries.push((unit(n, i), c.clone()));
        }
        Series::from_parts(base, ratios, Ps::poly(n, entries))
    }

    /// Σ_k coeff(k)·base·ratios^k.
    pub fn from_grid(base: M, ratios: Vec<M>, coeff: impl Fn(&[u32]) -> Q + 'static) -> Result<Self> {
        GridWitness::new(base.clone(), ratios.clone())?;
        let n = ratios.len();
        let ps = Ps::rec(
            n,
            None,
            Box::new(move |d, _| {
                let mut c = Comp::new();
                for k in vectors_of_degree(n, d) {
                    let v = coeff(&k);
                    if !v.is_zero() {
                        c.insert(k, v);
                    }
                }
                c
            }),
        );
        Ok(Series::from_parts(base, ratios, ps))
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn ratios(&self) -> &[M] {
        &self.ratios
    }

    pub fn witness(&self) -> GridWitness<M> {
        GridWitness { base: self.base.clone(), ratios: (*self.ratios).clone() }
    }

    pub fn is_exact(&self) -> bool {
        self.ps.is_exact()
    }

    pub fn is_known_zero(&self) -> bool {
        self.ps.is_known_zero()
    }

    pub(crate) fn ps(&self) -> &Ps {
        &self.ps
    }

    pub(crate) fn from_ps(base: M, ratios: Vec<M>, ps: Ps) -> Self {
        Self::from_parts(base, ratios, ps)
    }

    fn rho(&self) -> Option<&M> {
        self.ratios.iter().max()
    }

    pub(crate) fn mono_of(&self, k: &[u32]) -> M {
        if let Some(m) = self.cache.monos.borrow().get(k) {
            return m.clone();
        }
        let m = match k.iter().position(|&e| e > 0) {
            None => self.base.clone(),
            Some(i) => {
                let mut p = k.to_vec();
                p[i] -= 1;
                self.mono_of(&p).mul(&self.ratios[i])
            }
        };
        self.cache.monos.borrow_mut().insert(k.to_vec(), m.clone());
        m
    }

    /// Every term outside the first `d+1` components is ≼ this; `None` when
    /// there are no such terms.
    fn bound(&self, d: usize) -> Option<M> {
        if self.ps.max_deg().is_some_and(|m| d >= m) {
            return None;
        }
        // a bound for degrees > d' also holds for degrees > d ≥ d'
        loop {
            let next = {
                let bounds = self.cache.bounds.borrow();
                if let Some(b) = bounds.get(d) {
                    return b.clone();
                }
                bounds.len()
            };
            let raw = self.raw_bound(next);
            let prev = if next == 0 { None } else { self.cache.bounds.borrow()[next - 1].clone() };
            let b = match (raw, prev) {
                (Some(r), Some(p)) => Some(r.min(p)),
                (None, _) => None,
                (r, None) => r,
            };
            self.cache.bounds.borrow_mut().push(b);
        }
    }

    fn raw_bound(&self, d: usize) -> Option<M> {
        if self.ps.max_deg().is_some_and(|m| d >= m) {
            return None;
        }
        match self.ps.tail(d) {
            Some(vs) => vs.iter().map(|v| self.mono_of(v)).max(),
            None => self.rho().map(|r| self.base.mul(&r.pow(&Q::from_integer((d + 1).into())))),
        }
    }

    fn complete_at(&self, d: usize) -> bool {
        self.bound(d).is_none()
    }

    fn scan(&self, d: usize) {
        let start = self.cache.acc.borrow().0;
        for j in start..=d {
            let comp = self.ps.comp(j);
            let monos: Vec<(M, Q)> = comp.iter().map(|(k, v)| (self.mono_of(k), v.clone())).collect();
            let mut acc = self.cache.acc.borrow_mut();
            for (m, v) in monos {
                let e = acc.1.entry(m.clone()).or_insert_with(Q::zero);
                *e += v;
                if e.is_zero() {
                    acc.1.remove(&m);
                }
            }
            acc.0 = j + 1;
        }
    }

    /// Terms determined by components of degree ≤ d, decreasing.
    fn certified(&self, d: usize) -> Vec<(Q, M)> {
        self.scan(d);
        let bound = if self.complete_at(d) { None } else { self.bound(d) };
        let acc = self.cache.acc.borrow();
        let mut out: Vec<(Q, M)> = acc
            .1
            .iter()
            .filter(|(m, _)| bound.as_ref().is_none_or(|b| *m > b))
            .map(|(m, c)| (c.clone(), m.clone()))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1));
        out
    }

    /// All terms with monomial ≻ `cut`, decreasing.
    pub fn terms_above(&self, cut: &M, budget: usize) -> Result<Vec<(Q, M)>> {
        for d in 0..=budget {
            if self.complete_at(d) || self.bound(d).is_some_and(|b| b <= *cut) {
                return Ok(self.certified(d).into_iter().filter(|(_, m)| m > cut).collect());
            }
        }
        Err(Error::budget(format!("cannot certify the terms above {cut}")))
    }

    /// All terms of an exact series.
    pub fn terms(&self, budget: usize) -> Result<Vec<(Q, M)>> {
        match self.ps.max_deg() {
            Some(d) if d <= budget => Ok(self.certified(d)),
            _ => Err(Error::budget("series is not known to be finite")),
        }
    }

    pub fn coefficient(&self, m: &M, budget: usize) -> Result<Q> {
        for d in 0..=budget {
            if self.complete_at(d) || self.bound(d).is_some_and(|b| b < *m) {
                self.scan(d);
                return Ok(self.cache.acc.borrow().1.get(m).cloned().unwrap_or_else(Q::zero));
            }
        }
        Err(Error::budget(format!("cannot certify the coefficient of {m}")))
    }

    pub fn expansion(&self, n: usize, budget: usize) -> Result<Expansion<M>> {
        let mut last = Vec::new();
        for d in 0..=budget {
            let mut cert = self.certified(d);
            if self.complete_at(d) || cert.len() > n {
                let rest = if cert.len() > n { Rest::Next(cert[n].1.clone()) } else { Rest::Done };
                cert.truncate(n);
                return Ok(Expansion { terms: cert, rest });
            }
            last = cert;
        }
        let bound = self.bound(budget).expect("incomplete series has a tail");
        Ok(Expansion { terms: last, rest: Rest::Bound(bound) })
    }

    /// Leading term, or `None` for zero.
    pub fn leading(&self, budget: usize) -> Result<Option<(Q, M)>> {
        if self.is_known_zero() {
            return Ok(None);
        }
        for d in 0..=budget {
            let cert = self.certified(d);
            if let Some(t) = cert.into_iter().next() {
                return Ok(Some(t));
            }
            if self.complete_at(d) {
                return Ok(None);
            }
        }
        Err(Error::budget("no leading term within budget"))
    }

    /// Sign of the leading coefficient (0 for zero).
    pub fn sign(&self, budget: usize) -> Result<i8> {
        Ok(match self.leading(budget)? {
            None => 0,
            Some((c, _)) if c.is_positive() => 1,
            Some(_) => -1,
        })
    }

    pub fn leading_mono(&self, budget: usize) -> Result<Option<M>> {
        Ok(self.leading(budget)?.map(|t| t.1))
    }

    /// Agreement at the first `d` points of the ambient grid of `self − other`.
    pub fn eq_to_depth(&self, other: &Self, d: usize, budget: usize) -> Result<bool> {
        let h = self.sub(other);
        if h.is_known_zero() {
            return Ok(true);
        }
        let pts = grid_points(&h.base, &h.ratios, d + 1);
        let budget = budget.max(d + 1);
        if pts.len() <= d {
            return Ok(h.leading(budget)?.is_none());
        }
        Ok(h.terms_above(&pts[d], budget)?.is_empty())
    }

    // -- arithmetic -------------------------------------------------------

    pub fn add(&self, other: &Self) -> Self {
        if self.is_known_zero() {
            return other.clone();
        }
        if other.is_known_zero() {
            return self.clone();
        }
        let (hi, lo) = if self.base >= other.base { (self, other) } else { (other, self) };
        let mut lo_r = (*lo.ratios).clone();
        let shifted = lo.base != hi.base;
        if shifted {
            lo_r.push(lo.base.div(&hi.base));
        }
        let (u, map) = merge_ratios(&hi.ratios, &lo_r);
        let n = u.len();
        let hp = hi.ps.embed(n, (0..hi.ratios.len()).collect(), Vec::new());
        let shift = if shifted { unit(n, map[lo.ratios.len()]) } else { Vec::new() };
        let lp = lo.ps.embed(n, map[..lo.ratios.len()].to_vec(), shift);
        Series::from_parts(hi.base.clone(), u, Ps::lin(n, vec![(Q::one(), hp), (Q::one(), lp)]))
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        self.with_ps(Ps::lin(self.ps.nvars(), vec![(c.clone(), self.ps.clone())]))
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_known_zero() || other.is_known_zero() {
            return Self::zero();
        }
        let (u, map) = merge_ratios(&self.ratios, &other.ratios);
        let n = u.len();
        let a = self.ps.embed(n, (0..self.ratios.len()).collect(), Vec::new());
        let b = other.ps.embed(n, map, Vec::new());
        Series::from_parts(self.base.mul(&other.base), u, a.mul(&b))
    }

    /// `c·m·self`
    pub fn mul_term(&self, c: &Q, m: &M) -> Self {
        if self.is_known_zero() || c.is_zero() {
            return Self::zero();
        }
        let s = self.scale(c);
        Series::from_parts(s.base.mul(m), (*s.ratios).clone(), s.ps)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |a, _| a.mul(self))
    }

    pub fn sum_family(fam: Family<M>, budget: usize) -> Result<Self> {
        match fam {
            Family::Finite(fs) => Ok(fs.iter().fold(Self::zero(), |a, f| a.add(f))),
            Family::Geometric { coeffs, eps } => {
                match eps.leading(budget)? {
                    Some((_, m)) if !m.is_infinitesimal() => {
                        return Err(Error::NotSummable(format!("ratio {m} is not infinitesimal")))
                    }
                    _ => {}
                }
                let f = PowerSeriesN::new(1, move |j| coeffs(j[0]));
                Self::eval_ps(&f, &[eps], budget)
            }
            Family::Grid { base, ratios, coeff } => {
                Self::from_grid(base, ratios, move |k| coeff(k)).map_err(|e| Error::NotSummable(e.to_string()))
            }
        }
    }

    // -- re-expansion -------------------------------------------------------

    /// Re-expand around `target`, which must be ≼ base with every term of
    /// `self` ≼ `target`.
    pub(crate) fn rebase(&self, target: &M, budget: usize) -> Result<Self> {
        if *target == self.base || self.is_known_zero() {
            return Ok(Series::from_parts(target.clone(), (*self.ratios).clone(), self.ps.clone()));
        }
        let Some(rho) = self.rho().cloned() else {
            return Err(Error::domain(format!("{target} is not a point of the grid")));
        };
        let nvars = self.ratios.len();
        // some d whose tail (entries of degree > d) lies entirely ≼ target
        let mut found = None;
        for d in 0..=budget {
            if let Some(vs) = self.ps.tail(d) {
                if vs.iter().all(|v| self.mono_of(v) <= *target) {
                    found = Some((d, vs));
                    break;
                }
            }
            if self.base.mul(&rho.pow(&Q::from_integer((d + 1).into()))) <= *target {
                found = Some((d, vectors_of_degree(nvars, d + 1)));
                break;
            }
        }
        let (reach, cover) = found.ok_or_else(|| {
            Error::budget(format!("{target} lies below every power of the largest ratio {rho}"))
        })?;
        let mut cands: Vec<Idx> = (0..=reach).flat_map(|d| vectors_of_degree(nvars, d)).collect();
        cands.extend(cover);
        cands.sort_by_key(|k| deg(k));
        let mut kappas: Vec<Idx> = Vec::new();
        for k in cands {
            if kappas.iter().any(|kp| kp.iter().zip(&k).all(|(a, b)| a <= b)) {
                continue;
            }
            if self.mono_of(&k) <= *target {
                kappas.push(k);
            }
        }
        let gens: Vec<M> = kappas.iter().map(|k| self.mono_of(k).div(target)).collect();
        let fresh: Vec<M> = gens.iter().filter(|g| !g.is_one()).cloned().collect();
        let (u, map) = merge_ratios(&self.ratios, &fresh);
        let mut it = map.into_iter();
        let plan = RebasePlan {
            kappas: kappas.into_iter().zip(&gens).map(|(k, g)| (k, if g.is_one() { None } else { it.next() })).collect(),
            nvars: u.len(),
        };
        let ps = self.ps.rebase(Rc::new(plan));
        Ok(Series::from_parts(target.clone(), u, ps))
    }

    /// `(ratios, P)` with `self = P(ratios)`, `P(0) = 0`; needs `self ≺ 1`.
    pub(crate) fn small_arg(&self, budget: usize) -> Result<(Vec<M>, Ps)> {
        let Some((_, m)) = self.leading(budget)? else {
            return Ok((Vec::new(), Ps::zero(0)));
        };
        if !m.is_infinitesimal() {
            return Err(Error::domain(format!("argument with leading monomial {m} is not infinitesimal")));
        }
        let r = self.rebase(&m, budget)?;
        let (u, map) = merge_ratios(&r.ratios, std::slice::from_ref(&m));
        let n = u.len();
        let ps = r.ps.embed(n, (0..r.ratios.len()).collect(), unit(n, map[0]));
        Ok((u, ps))
    }

    /// F(args) for infinitesimal arguments.
    pub fn eval_ps(f: &PowerSeriesN, args: &[Self], budget: usize) -> Result<Self> {
        if args.len() != f.arity {
            return Err(Error::domain(format!("power series of arity {} given {} arguments", f.arity, args.len())));
        }
        let mut u: Vec<M> = Vec::new();
        let mut parts = Vec::new();
        for a in args {
            let (r, p) = a.small_arg(budget)?;
            let (nu, map) = merge_ratios(&u, &r);
            u = nu;
            parts.push((p, map));
        }
        let n = u.len();
        let ps_args = parts.into_iter().map(|(p, map)| p.embed(n, map, Vec::new())).collect();
        Ok(Series::from_parts(M::one(), u, Ps::compose(n, f.coeff.clone(), ps_args)))
    }

    pub fn invert(&self, budget: usize) -> Result<Self> {
        let (c, m) = self.leading(budget)?.ok_or(Error::ZeroDivision)?;
        let r = self.rebase(&m, budget)?;
        let g = r.ps.without_constant();
        let ci = Q::one() / &c;
        let neg = -&ci;
        let coeff: CoeffFn = Rc::new(move |j| &ci * num_traits::pow(neg.clone(), j[0] as usize));
        let n = r.ratios.len();
        Ok(Series::from_parts(m.inv(), (*r.ratios).clone(), Ps::compose(n, coeff, vec![g])))
    }

    pub fn div(&self, other: &Self, budget: usize) -> Result<Self> {
        Ok(self.mul(&other.invert(budget)?))
    }

    // -- structure-preserving maps ---------------------------------------

    /// Apply a strictly increasing group morphism to every monomial.
    pub fn map_monos<N: Mono>(&self, f: impl Fn(&M) -> N) -> Series<N> {
        Series::from_parts(f(&self.base), self.ratios.iter().map(&f).collect(), self.ps.clone())
    }

    /// Lazily transform coefficients by monomial; `None` drops the term.
    /// `f` sees one entry of the underlying expansion at a time, so it must
    /// be linear in the coefficient.
    pub fn map_terms(&self, f: impl Fn(&M, &Q) -> Option<Q> + 'static) -> Self {
        let me = self.clone();
        let ps = self.ps.map(Rc::new(move |k, c| f(&me.mono_of(k), c)));
        self.with_ps(ps)
    }

    /// f|_cut: the terms ≻ cut. Finite when certifiable within budget.
    pub fn truncate(&self, cut: &M, budget: usize) -> Self {
        match self.terms_above(cut, budget) {
            Ok(ts) => Series::from_terms(ts),
            Err(_) => {
                let cut = cut.clone();
                self.map_terms(move |m, c| (*m > cut).then(|| c.clone()))
            }
        }
    }

    /// (f_≻, f_≍, f_≺)
    pub fn decompose(&self, budget: usize) -> Result<(Self, Q, Self)> {
        let one = M::one();
        let inf = Series::from_terms(self.terms_above(&one, budget)?);
        let c = self.coefficient(&one, budget)?;
        let small = self.sub(&inf).sub(&Series::constant(c.clone()));
        Ok((inf, c, small))
    }

    /// ∂f from the c-map of `d`.
    pub fn derive(&self, d: &dyn Derivation<M>) -> Result<Self> {
        if self.is_known_zero() {
            return Ok(Self::zero());
        }
        let mut out = d.c(&self.base)?.mul(self);
        for (i, r) in self.ratios.iter().enumerate() {
            let ci = d.c(r)?;
            if ci.is_known_zero() {
                continue;
            }
            out = out.add(&ci.mul(&self.with_ps(self.ps.euler(i))));
        }
        Ok(out)
    }

    /// Render the first `n` terms, with `+ O(m)` when more follow.
    pub fn render(&self, n: usize, budget: usize, mono: &dyn Fn(&M) -> String) -> String {
        match self.expansion(n, budget) {
            Ok(e) => render_expansion(&e, mono),
            Err(err) => format!("<{err}>"),
        }
    }
}

pub fn render_expansion<M: Mono>(e: &Expansion<M>, mono: &dyn Fn(&M) -> String) -> String {
    let text = |m: &M| if m.is_one() { "1".to_string() } else { mono(m) };
    let mut s = fmt_sum(e.terms.iter().map(|(c, m)| (c, text(m))));
    match &e.rest {
        Rest::Done => {}
        Rest::Next(m) | Rest::Bound(m) => {
            let o = format!("O({})", text(m));
            if e.terms.is_empty() {
                s = o;
            } else {
                s.push_str(" + ");
                s.push_str(&o);
            }
        }
    }
    s
}

impl<M: Mono> std::fmt::Display for Series<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render(8, DEFAULT_BUDGET, &|m: &M| m.to_string()))
    }
}

// ---------------------------------------------------------------------------
// nested-field views over level-graded monomials

impl Series<Monomial> {
    /// Group an exact series by its level-≥n component.
    pub fn split_level(&self, n: u32, budget: usize) -> Result<Vec<(Monomial, Series<Monomial>)>> {
        if !self.is_exact() && self.ratios.iter().any(|r| !r.split_at_level(n).1.is_one()) {
            return Err(Error::domain("infinitely many level components"));
        }
        let mut groups: BTreeMap<Monomial, Vec<(Q, Monomial)>> = BTreeMap::new();
        if self.is_exact() {
            for (c, m) in self.terms(budget)? {
                let (lo, hi) = m.split_at_level(n);
                groups.entry(hi).or_default().push((c, lo));
            }
            return Ok(groups.into_iter().rev().map(|(k, ts)| (k, Series::from_terms(ts))).collect());
        }
        let (lo, hi) = self.base.split_at_level(n);
        let coeff = Series::from_parts(lo, (*self.ratios).clone(), self.ps.clone());
        Ok(vec![(hi, coeff)])
    }

    /// The coefficient of the level-≥n component `hi`: the series `c` over
    /// levels < n such that `hi·c` collects the terms of `self` whose
    /// level-≥n component is `hi`.
    pub fn level_coefficient(&self, n: u32, hi: &Monomial, budget: usize) -> Result<Self> {
        let (lo_base, hi_base) = self.base.split_at_level(n);
        let (fixed, free): (Vec<usize>, Vec<usize>) =
            (0..self.ratios.len()).partition(|&i| !self.ratios[i].split_at_level(n).1.is_one());
        let hi_ratios: Vec<Monomial> = fixed.iter().map(|&i| self.ratios[i].split_at_level(n).1).collect();
        let free_ratios: Vec<Monomial> = free.iter().map(|&i| self.ratios[i].clone()).collect();
        let mut out = Series::zero();
        let caps: Vec<Option<u32>> = fixed.iter().map(|&i| self.ps.coord_max(i)).collect();
        for s in exponent_solutions(&hi.div(&hi_base), &hi_ratios, budget)? {
            if s.iter().zip(&caps).any(|(e, c)| c.is_some_and(|c| *e > c)) {
                continue;
            }
            let mut base = lo_base.clone();
            for (&i, &e) in fixed.iter().zip(&s) {
                base = base.mul(&self.ratios[i].split_at_level(n).0.pow(&Q::from_integer(e.into())));
            }
            let ps = self.ps.slice(fixed.iter().copied().zip(s).collect());
            out = out.add(&Series::from_parts(base, free_ratios.clone(), ps));
        }
        Ok(out)
    }

    /// Keep the terms whose level-≥n component is ≻ `cut`.
    pub fn truncate_at_level(&self, n: u32, cut: &Monomial) -> Self {
        let cut = cut.clone();
        self.map_terms(move |m, c| (m.split_at_level(n).1 > cut).then(|| c.clone()))
    }
}

/// Whether some coordinate of `t` has a sign no product of `ratios` has.
fn unreachable(t: &Monomial, ratios: &[Monomial]) -> bool {
    t.coordinates().into_iter().any(|(k, e)| {
        let has = |pos: bool| {
            ratios.iter().any(|r| r.coordinates().iter().any(|(j, f)| *j == k && f.is_positive() == pos && !f.is_zero()))
        };
        (e.is_positive() && !has(true)) || (e.is_negative() && !has(false))
    })
}

/// Exponent vectors `s` with `∏ ratiosᵢ^{sᵢ} = t`; every ratio is ≺ 1.
fn exponent_solutions(t: &Monomial, ratios: &[Monomial], budget: usize) -> Result<Vec<Vec<u32>>> {
    fn go(rem: &Monomial, ratios: &[Monomial], start: usize, s: &mut Vec<u32>, left: usize, out: &mut Vec<Vec<u32>>) -> Result<()> {
        if rem.is_one() {
            out.push(s.clone());
            return Ok(());
        }
        if rem.is_infinite() || unreachable(rem, &ratios[start..]) {
            return Ok(());
        }
        if left == 0 {
            return Err(Error::budget("too many ratio factors in a level component"));
        }
        for i in start..ratios.len() {
            s[i] += 1;
            go(&rem.div(&ratios[i]), ratios, i, s, left - 1, out)?;
            s[i] -= 1;
        }
        Ok(())
    }
    let mut out = Vec::new();
    go(t, ratios, 0, &mut vec![0; ratios.len()], budget, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monomial::TransMonomial;
    use crate::{q, qr};

    type S = Series<TransMonomial>;

    fn xp(r: i64) -> TransMonomial {
        TransMonomial::x_pow(q(r))
    }

    fn s(terms: &[(i64, i64)]) -> S {
        S::from_terms(terms.iter().map(|&(c, r)| (q(c), xp(r))))
    }

    const B: usize = 64;

    #[test]
    fn add_and_cancel() {
        let f = s(&[(1, 1), (1, 0)]).add(&s(&[(-1, 0)]));
        assert_eq!(f.terms(B).unwrap(), vec![(q(1), xp(1))]);
        let g = s(&[(1, 0), (1, -1)]).add(&s(&[(1, 0), (-1, -1)]));
        assert_eq!(g.terms(B).unwrap(), vec![(q(2), xp(0))]);
        let z = s(&[(1, 1), (1, 0)]).sub(&s(&[(1, 1)])).sub(&s(&[(1, 0)]));
        assert_eq!(z.leading(B).unwrap(), None);
    }

    #[test]
    fn products() {
        let p = s(&[(1, 0), (1, -1)]).mul(&s(&[(1, 0), (-1, -1)]));
        assert_eq!(p.terms(B).unwrap(), vec![(q(1), xp(0)), (q(-1), xp(-2))]);
        let sq = s(&[(1, 1), (1, 0)]).pow(2);
        assert_eq!(sq.terms(B).unwrap(), vec![(q(1), xp(2)), (q(2), xp(1)), (q(1), xp(0))]);
    }

    #[test]
    fn truncation() {
        let f = s(&[(1, 1), (1, 0), (1, -1)]);
        assert_eq!(f.truncate(&xp(0), B).terms(B).unwrap(), vec![(q(1), xp(1))]);
        assert!(f.truncate(&xp(1), B).terms(B).unwrap().is_empty());
        assert_eq!(f.truncate(&xp(-1), B).terms(B).unwrap().len(), 2);
    }

    #[test]
    fn inverse_of_x_minus_one() {
        let f = s(&[(1, 1), (-1, 0)]);
        let g = f.invert(B).unwrap();
        let e = g.expansion(4, B).unwrap();
        assert_eq!(e.terms, (1..=4).map(|k| (q(1), xp(-k))).collect::<Vec<_>>());
        assert!(f.mul(&g).eq_to_depth(&S::one(), 5, B).unwrap());
        assert_eq!(s(&[(2, 1)]).invert(B).unwrap().terms(B).unwrap(), vec![(qr(1, 2), xp(-1))]);
        assert_eq!(S::zero().invert(B).unwrap_err(), Error::ZeroDivision);
    }

    #[test]
    fn exp_series() {
        let e = S::eval_ps(&PowerSeriesN::exp(), &[s(&[(1, -1)])], B).unwrap();
        let ex = e.expansion(3, B).unwrap();
        assert_eq!(render_expansion(&ex, &|m| m.to_string()), "1 + x^-1 + 1/2*x^-2 + O(x^-3)");
        assert!(matches!(S::eval_ps(&PowerSeriesN::exp(), &[s(&[(1, 0)])], B), Err(Error::Domain(_))));
    }

    #[test]
    fn geometric_family() {
        let fam = Family::Geometric { coeffs: Rc::new(|_| q(1)), eps: s(&[(1, -1)]) };
        let g = S::sum_family(fam, B).unwrap();
        let inv = s(&[(1, 0), (-1, -1)]).invert(B).unwrap();
        assert!(g.eq_to_depth(&inv, 6, B).unwrap());
        let bad = Family::Geometric { coeffs: Rc::new(|_| q(1)), eps: s(&[(1, 1)]) };
        assert!(matches!(S::sum_family(bad, B), Err(Error::NotSummable(_))));
    }

    #[test]
    fn invert_after_cancellation_of_base() {
        // (1 + x⁻¹) − 1 has base 1 but leading term x⁻¹.
        let f = s(&[(1, 0), (1, -1), (1, -2)]).sub(&S::one());
        let g = f.invert(B).unwrap();
        assert!(f.mul(&g).eq_to_depth(&S::one(), 6, B).unwrap());
    }

    #[test]
    fn level_coefficients() {
        use crate::monomial::MonomialGroup;
        let g = MonomialGroup::new(&[("x", 0), ("e", 1)]).unwrap();
        let m = |i: i64, j: i64| g.mono(&[("x", q(i)), ("e", q(j))]).unwrap();
        let geo = Series::from_terms([(q(1), m(0, 0)), (q(-1), m(-1, 0))]).invert(B).unwrap();
        // (e + 1)/(1 − x⁻¹)
        let f = Series::from_terms([(q(1), m(0, 1)), (q(1), m(0, 0))]).mul(&geo);
        for j in [1, 0] {
            let c = f.level_coefficient(1, &m(0, j), B).unwrap();
            assert_eq!(c.leading(B).unwrap(), Some((q(1), m(0, 0))));
            assert!(c.eq_to_depth(&geo, 8, B).unwrap());
        }
        assert_eq!(f.level_coefficient(1, &m(0, -1), B).unwrap().leading(B).unwrap(), None);
    }
}
