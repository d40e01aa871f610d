//! Derivations from additive c-maps, the differential polynomials G^n_m,
//! small operators and the Neumann inverse of I − P.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::monomial::{monoid_contains, GeneratorId, Mono, Monomial};
use crate::ps::{Comp, Idx, Ps};
use crate::series::Series;
use crate::{Error, Result, Q};

/// An additive c-map: ∂(𝔪) = c(𝔪)·𝔪.
pub trait Derivation<M: Mono> {
    fn c(&self, m: &M) -> Result<Series<M>>;
}

/// c-map on level-graded monomials, given on generators.
#[derive(Clone, Default)]
pub struct DerivationSpec {
    cmap: BTreeMap<GeneratorId, Series<Monomial>>,
    cache: RefCell<HashMap<Monomial, Series<Monomial>>>,
}

impl DerivationSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, g: &GeneratorId, c: Series<Monomial>) -> Self {
        self.cmap.insert(g.clone(), c);
        self.cache.borrow_mut().clear();
        self
    }

    pub fn cmap(&self) -> impl Iterator<Item = (&GeneratorId, &Series<Monomial>)> {
        self.cmap.iter()
    }

    /// Every c-value is a constant, so supp ∂f ⊆ supp f.
    pub fn is_constant(&self, budget: usize) -> bool {
        self.cmap.values().all(|s| s.terms(budget).is_ok_and(|t| t.iter().all(|(_, m)| m.is_one())))
    }

    /// cₙ(g) ≻ 1 relative to level n−1, for every generator of level n ≥ 1.
    pub fn is_transerial(&self, budget: usize) -> Result<bool> {
        for (g, c) in &self.cmap {
            if g.level == 0 {
                continue;
            }
            let Some((_, m)) = c.leading(budget)? else { return Ok(false) };
            if m.max_level().is_some_and(|l| l >= g.level) {
                return Ok(false);
            }
            if m.level_part(g.level - 1) <= Monomial::one() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Derivation<Monomial> for DerivationSpec {
    fn c(&self, m: &Monomial) -> Result<Series<Monomial>> {
        if let Some(s) = self.cache.borrow().get(m) {
            return Ok(s.clone());
        }
        let mut out = Series::zero();
        for (g, e) in m.exponents() {
            let c = self.cmap.get(g).ok_or_else(|| Error::domain(format!("no c-value for generator {}", g.name)))?;
            out = out.add(&c.scale(e));
        }
        self.cache.borrow_mut().insert(m.clone(), out.clone());
        Ok(out)
    }
}

pub fn log_derivative<M: Mono>(f: &Series<M>, d: &dyn Derivation<M>, budget: usize) -> Result<Series<M>> {
    Ok(f.derive(d)?.mul(&f.invert(budget)?))
}

/// `∂^k f` for k = 0..=n.
pub fn derivatives<M: Mono>(f: &Series<M>, n: usize, d: &dyn Derivation<M>) -> Result<Vec<Series<M>>> {
    let mut out = vec![f.clone()];
    for _ in 0..n {
        let next = out.last().unwrap().derive(d)?;
        out.push(next);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// differential polynomials

/// Integer polynomial in X, X′, X″, …; a key lists the exponent of each
/// derivative order.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct DiffPoly {
    terms: BTreeMap<Vec<u32>, BigInt>,
}

fn trim(mut k: Vec<u32>) -> Vec<u32> {
    while k.last() == Some(&0) {
        k.pop();
    }
    k
}

impl DiffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// X^(order)
    pub fn var(order: usize) -> Self {
        let mut k = vec![0; order + 1];
        k[order] = 1;
        DiffPoly { terms: BTreeMap::from([(k, BigInt::one())]) }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    fn push(&mut self, k: Vec<u32>, c: BigInt) {
        let k = trim(k);
        let e = self.terms.entry(k.clone()).or_insert_with(BigInt::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.push(k.clone(), c.clone());
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                let n = a.len().max(b.len());
                let k = (0..n).map(|i| a.get(i).unwrap_or(&0) + b.get(i).unwrap_or(&0)).collect();
                out.push(k, ca * cb);
            }
        }
        out
    }

    /// Formal derivative: X^(i) ↦ X^(i+1).
    pub fn derive(&self) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            for (i, &e) in k.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut t = k.clone();
                t[i] -= 1;
                if t.len() <= i + 1 {
                    t.resize(i + 2, 0);
                }
                t[i + 1] += 1;
                out.push(t, c * BigInt::from(e));
            }
        }
        out
    }

    /// Total degree when homogeneous.
    pub fn degree(&self) -> Option<u32> {
        let mut ds = self.terms.keys().map(|k| k.iter().sum::<u32>());
        let d = ds.next()?;
        ds.all(|e| e == d).then_some(d)
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|k| k.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Substitute X^(i) ↦ derivs[i].
    pub fn eval<M: Mono>(&self, derivs: &[Series<M>]) -> Series<M> {
        let mut out = Series::zero();
        for (k, c) in &self.terms {
            let mut t = Series::constant(Q::from_integer(c.clone()));
            for (i, &e) in k.iter().enumerate() {
                t = t.mul(&derivs[i].pow(e));
            }
            out = out.add(&t);
        }
        out
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        for (k, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            for (i, &e) in k.iter().enumerate() {
                if e > 0 {
                    let name = format!("X{}", "'".repeat(i));
                    factors.push(if e == 1 { name } else { format!("{name}^{e}") });
                }
            }
            let body = factors.join("*");
            parts.push(match (c.is_one(), body.is_empty()) {
                (_, true) => c.to_string(),
                (true, false) => body,
                (false, false) => format!("{c}*{body}"),
            });
        }
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// G^n_m: G^n_0 = 0, G^n_n = X^n, G^{n+1}_m = X·(∂G^n_m + G^n_{m−1}).
pub fn gnm(n: usize, m: usize) -> Result<DiffPoly> {
    if n == 0 || m > n {
        return Err(Error::domain(format!("G^{n}_{m} needs 0 ≤ m ≤ n, n ≥ 1")));
    }
    let x = DiffPoly::var(0);
    // row[m] = G^k_m
    let mut row = vec![DiffPoly::zero(), x.clone()];
    for k in 1..n {
        let mut next = vec![DiffPoly::zero(); k + 2];
        for j in 1..=k + 1 {
            let mut inner = row.get(j).map(|g| g.derive()).unwrap_or_default();
            inner = inner.add(&row[j - 1]);
            next[j] = x.mul(&inner);
        }
        row = next;
    }
    Ok(row[m].clone())
}

// ---------------------------------------------------------------------------
// operators

/// Operator descriptors, closed under sums, composition and (I − P)⁻¹.
#[derive(Clone)]
pub enum Op<M: Mono> {
    Zero,
    Identity,
    Scalar(Q),
    MulBy(Series<M>),
    /// f ↦ a·∂f
    MulDerive(Series<M>),
    /// Σ bₘ∂^m
    Diff(Vec<(Series<M>, usize)>),
    Sum(Vec<Op<M>>),
    /// ops[0] ∘ ops[1] ∘ …
    Compose(Vec<Op<M>>),
    /// (I − P)⁻¹
    NeumannInv(Box<Op<M>>),
}

pub fn op_add<M: Mono>(p: Op<M>, q: Op<M>) -> Op<M> {
    Op::Sum(vec![p, q])
}

pub fn op_compose<M: Mono>(p: Op<M>, q: Op<M>) -> Op<M> {
    Op::Compose(vec![p, q])
}

/// (I − P)⁻¹; P must have a finite-order normal form Σ bₘ∂^m.
pub fn neumann_inverse<M: Mono>(p: Op<M>, d: &dyn Derivation<M>) -> Result<Op<M>> {
    p.normal_form(d)?;
    Ok(Op::NeumannInv(Box::new(p)))
}

type Normal<M> = BTreeMap<usize, Series<M>>;

fn binom(n: usize, k: usize) -> Q {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Q::from_integer(r)
}

impl<M: Mono> Op<M> {
    pub fn apply(&self, f: &Series<M>, d: &dyn Derivation<M>, budget: usize) -> Result<Series<M>> {
        Ok(match self {
            Op::Zero => Series::zero(),
            Op::Identity => f.clone(),
            Op::Scalar(c) => f.scale(c),
            Op::MulBy(a) => a.mul(f),
            Op::MulDerive(a) => a.mul(&f.derive(d)?),
            Op::Diff(ts) => {
                let top = ts.iter().map(|t| t.1).max().unwrap_or(0);
                let ds = derivatives(f, top, d)?;
                ts.iter().fold(Series::zero(), |acc, (b, m)| acc.add(&b.mul(&ds[*m])))
            }
            Op::Sum(ops) => {
                let mut acc = Series::zero();
                for o in ops {
                    acc = acc.add(&o.apply(f, d, budget)?);
                }
                acc
            }
            Op::Compose(ops) => {
                let mut v = f.clone();
                for o in ops.iter().rev() {
                    v = o.apply(&v, d, budget)?;
                }
                v
            }
            Op::NeumannInv(p) => {
                let nf = p.normal_form(d)?;
                let terms: Vec<(Series<M>, usize)> = nf.into_iter().map(|(m, b)| (b, m)).collect();
                neumann_apply(&terms, f, d, budget)?
            }
        })
    }

    /// Σ bₘ∂^m; Neumann inverses have none.
    pub fn normal_form(&self, d: &dyn Derivation<M>) -> Result<Normal<M>> {
        let mut out: Normal<M> = BTreeMap::new();
        let put = |out: &mut Normal<M>, m: usize, b: Series<M>| {
            let e = out.remove(&m).unwrap_or_else(Series::zero).add(&b);
            out.insert(m, e);
        };
        match self {
            Op::Zero => {}
            Op::Identity => put(&mut out, 0, Series::one()),
            Op::Scalar(c) => put(&mut out, 0, Series::constant(c.clone())),
            Op::MulBy(a) => put(&mut out, 0, a.clone()),
            Op::MulDerive(a) => put(&mut out, 1, a.clone()),
            Op::Diff(ts) => {
                for (b, m) in ts {
                    put(&mut out, *m, b.clone());
                }
            }
            Op::Sum(ops) => {
                for o in ops {
                    for (m, b) in o.normal_form(d)? {
                        put(&mut out, m, b);
                    }
                }
            }
            Op::Compose(ops) => {
                let mut acc: Normal<M> = BTreeMap::from([(0, Series::one())]);
                for o in ops.iter().rev() {
                    let left = o.normal_form(d)?;
                    let mut next: Normal<M> = BTreeMap::new();
                    // b∂^m ∘ c∂^k = b Σ_j C(m,j) ∂^j(c) ∂^{m−j+k}
                    for (m, b) in &left {
                        for (k, c) in &acc {
                            let dc = derivatives(c, *m, d)?;
                            for (j, dcj) in dc.iter().enumerate() {
                                put(&mut next, m - j + k, b.mul(dcj).scale(&binom(*m, j)));
                            }
                        }
                    }
                    acc = next;
                }
                out = acc;
            }
            Op::NeumannInv(_) => return Err(Error::domain("a Neumann inverse has no finite-order normal form")),
        }
        Ok(out)
    }

    /// Generators W of a witness for input `f`: supp P(f) ⊆ W⁺·supp f
    /// (for Neumann inverses: supp Q(f) ⊆ W*·supp f).
    pub fn witness(&self, f: &Series<M>, d: &dyn Derivation<M>, budget: usize) -> Result<Vec<M>> {
        let mut w: Vec<M> = Vec::new();
        let push = |w: &mut Vec<M>, m: M| -> Result<()> {
            if !m.is_infinitesimal() {
                return Err(Error::NotSmall(format!("witness monomial {m} is not infinitesimal")));
            }
            if !w.contains(&m) {
                w.push(m);
            }
            Ok(())
        };
        let coeff_grid = |w: &mut Vec<M>, b: &Series<M>, m: usize| -> Result<()> {
            if m == 0 {
                push(w, b.base().clone())?;
                for r in b.ratios() {
                    push(w, r.clone())?;
                }
                return Ok(());
            }
            // c-values of f's generators multiply b
            let mut cs = vec![d.c(f.base())?];
            for r in f.ratios() {
                cs.push(d.c(r)?);
            }
            for c in cs.iter().filter(|c| !c.is_known_zero()) {
                push(w, b.base().mul(&c.base().pow(&Q::from_integer(m.into()))))?;
                for r in c.ratios() {
                    push(w, r.clone())?;
                }
            }
            for r in b.ratios() {
                push(w, r.clone())?;
            }
            Ok(())
        };
        match self {
            Op::NeumannInv(p) => return p.witness(f, d, budget),
            Op::Sum(ops) | Op::Compose(ops) => {
                for o in ops {
                    for m in o.witness(f, d, budget)? {
                        push(&mut w, m)?;
                    }
                }
            }
            Op::Zero => {}
            _ => {
                for (m, b) in self.normal_form(d)? {
                    if b.is_known_zero() {
                        continue;
                    }
                    coeff_grid(&mut w, &b, m)?;
                }
            }
        }
        Ok(w)
    }
}

/// Whether every listed term monomial lies in `W*·supp(f)`.
pub fn supported_by<M: Mono>(terms: &[(Q, M)], w: &[M], f_supp: &[M], max_len: usize) -> bool {
    terms.iter().all(|(_, m)| f_supp.iter().any(|s| *m <= *s && monoid_contains(&m.div(s), w, max_len)))
}

const CLOSURE_ROUNDS: usize = 8;

/// Solve y = f + Σ bₘ∂^m y.
///
/// With f = b_f·F(z) over ratios T, ∂^m(b_f z^k) = b_f z^k πₘ(k) where πₘ is
/// a polynomial in k with series coefficients. Grouping by powers k^α gives
/// y = f + Σ_α K_α·(k^α ⊙ y); each K_α must be ≺ 1. T is enlarged until it
/// contains every ratio needed to write the K_α.
pub fn neumann_apply<M: Mono>(
    terms: &[(Series<M>, usize)],
    f: &Series<M>,
    d: &dyn Derivation<M>,
    budget: usize,
) -> Result<Series<M>> {
    if f.is_known_zero() {
        return Ok(Series::zero());
    }
    let terms: Vec<&(Series<M>, usize)> = terms.iter().filter(|(b, _)| !b.is_known_zero()).collect();
    if terms.is_empty() {
        return Ok(f.clone());
    }
    let top = terms.iter().map(|t| t.1).max().unwrap();
    let bf = f.base().clone();
    let mut t_set: Vec<M> = f.ratios().to_vec();
    for _ in 0..CLOSURE_ROUNDS {
        let n = t_set.len();
        // πₘ as α ↦ coefficient
        let mut lin: BTreeMap<Idx, Series<M>> = BTreeMap::new();
        lin.insert(vec![0; n], d.c(&bf)?);
        for (i, t) in t_set.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            lin.insert(e, d.c(t)?);
        }
        let mut pis: Vec<BTreeMap<Idx, Series<M>>> = vec![BTreeMap::from([(vec![0; n], Series::one())])];
        for _ in 0..top {
            let p = pis.last().unwrap();
            let mut next: BTreeMap<Idx, Series<M>> = BTreeMap::new();
            for (a, s) in p {
                let ds = s.derive(d)?;
                let e = next.remove(a).unwrap_or_else(Series::zero).add(&ds);
                next.insert(a.clone(), e);
                for (l, c) in &lin {
                    if c.is_known_zero() {
                        continue;
                    }
                    let k: Idx = a.iter().zip(l).map(|(x, y)| x + y).collect();
                    let e = next.remove(&k).unwrap_or_else(Series::zero).add(&s.mul(c));
                    next.insert(k, e);
                }
            }
            pis.push(next);
        }
        let mut ks: BTreeMap<Idx, Series<M>> = BTreeMap::new();
        for (b, m) in &terms {
            for (a, s) in &pis[*m] {
                let e = ks.remove(a).unwrap_or_else(Series::zero).add(&b.mul(s));
                ks.insert(a.clone(), e);
            }
        }
        let mut pieces = Vec::new();
        let mut missing: Vec<M> = Vec::new();
        for (a, k) in ks {
            let Some((_, lead)) = k.leading(budget)? else { continue };
            if !lead.is_infinitesimal() {
                return Err(Error::NotSmall(format!("operator coefficient has leading monomial {lead}")));
            }
            let r = k.rebase(&lead, budget)?;
            for m in r.ratios().iter().chain(std::iter::once(&lead)) {
                if !t_set.contains(m) && !missing.contains(m) {
                    missing.push(m.clone());
                }
            }
            pieces.push((a, lead, r));
        }
        if !missing.is_empty() {
            t_set.extend(missing);
            continue;
        }
        let pos = |m: &M| t_set.iter().position(|x| x == m).unwrap();
        let fps = f.ps().embed(n, (0..f.ratios().len()).collect(), Vec::new());
        let kps: Vec<(Idx, Ps)> = pieces
            .into_iter()
            .map(|(a, lead, r)| {
                let map = r.ratios().iter().map(pos).collect();
                let mut shift = vec![0; n];
                shift[pos(&lead)] = 1;
                (a, r.ps().embed(n, map, shift))
            })
            .collect();
        let y = Ps::rec(
            n,
            None,
            Box::new(move |deg, lower| {
                let mut out: Comp = (*fps.comp(deg)).clone();
                for (alpha, kp) in &kps {
                    for e in 1..=deg {
                        let kc = kp.comp(e);
                        if kc.is_empty() {
                            continue;
                        }
                        let yc = lower(deg - e);
                        for (ky, vy) in yc.iter() {
                            let mut w = vy.clone();
                            for (x, p) in ky.iter().zip(alpha) {
                                if *p > 0 {
                                    w *= Q::from_integer(BigInt::from(*x).pow(*p));
                                }
                            }
                            if w.is_zero() {
                                continue;
                            }
                            for (kk, vk) in kc.iter() {
                                let idx: Idx = ky.iter().zip(kk).map(|(a, b)| a + b).collect();
                                let v = &w * vk;
                                let slot = out.entry(idx).or_insert_with(Q::zero);
                                *slot += v;
                            }
                        }
                    }
                }
                out.retain(|_, v| !v.is_zero());
                out
            }),
        );
        return Ok(Series::from_ps(bf, t_set, y));
    }
    Err(Error::budget("ratio set of the Neumann solution did not close"))
}

/// y − a·∂y = f
pub fn solve_linear<M: Mono>(a: &Series<M>, f: &Series<M>, d: &dyn Derivation<M>, budget: usize) -> Result<Series<M>> {
    if let Some((_, m)) = a.leading(budget)? {
        if !m.is_infinitesimal() {
            return Err(Error::NotSmall(format!("coefficient {m} is not infinitesimal")));
        }
    }
    neumann_apply(&[(a.clone(), 1)], f, d, budget)
}

/// f + Σ_{n≤N} Σ_{m=1}^n G^n_m(a)·∂^m f
pub fn expand_gnm<M: Mono>(a: &Series<M>, f: &Series<M>, big_n: usize, d: &dyn Derivation<M>, budget: usize) -> Result<Series<M>> {
    if let Some((_, m)) = a.leading(budget)? {
        if !m.is_infinitesimal() {
            return Err(Error::NotSmall(format!("coefficient {m} is not infinitesimal")));
        }
    }
    let da = derivatives(a, big_n, d)?;
    let df = derivatives(f, big_n, d)?;
    let mut out = f.clone();
    for n in 1..=big_n {
        for m in 1..=n {
            let g = gnm(n, m)?;
            if g.is_zero() {
                continue;
            }
            out = out.add(&g.eval(&da).mul(&df[m]));
        }
    }
    Ok(out)
}

/// Σ_{m≤M} (I−P)⁻¹(Q(I−P)⁻¹)^m f with P = a|_cut·∂, Q = (a − a|_cut)·∂.
pub fn decompose_pq<M: Mono>(
    a: &Series<M>,
    cut: &M,
    f: &Series<M>,
    big_m: usize,
    d: &dyn Derivation<M>,
    budget: usize,
) -> Result<Series<M>> {
    if let Some((_, m)) = a.leading(budget)? {
        if !m.is_infinitesimal() {
            return Err(Error::NotSmall(format!("coefficient {m} is not infinitesimal")));
        }
    }
    let a1 = a.truncate(cut, budget);
    let a2 = a.sub(&a1);
    let r = |g: &Series<M>| neumann_apply(&[(a1.clone(), 1)], g, d, budget);
    let mut v = r(f)?;
    let mut acc = v.clone();
    for _ in 0..big_m {
        v = r(&a2.mul(&v.derive(d)?))?;
        acc = acc.add(&v);
    }
    Ok(acc)
}
