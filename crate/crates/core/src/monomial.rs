//! Ordered monomial groups.
//!
//! Two concrete groups implement [`Mono`]: the level-graded [`Monomial`]
//! (finitely many named generators per level, all ≻ 1) and the recursive
//! [`TransMonomial`] `x^r·exp(a)`. `Ord` is the asymptotic order: `a < b`
//! means `a ≺ b`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::rc::Rc;

use num_traits::{One, Signed, Zero};

use crate::{Error, Result, Q};

pub trait Mono: Clone + Eq + Hash + Ord + fmt::Debug + fmt::Display + 'static {
    fn one() -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn inv(&self) -> Self;
    fn pow(&self, e: &Q) -> Self;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }
    fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }
    fn is_infinitesimal(&self) -> bool {
        *self < Self::one()
    }
    fn is_infinite(&self) -> bool {
        *self > Self::one()
    }
    /// Coordinates of the exponent vector, keyed by basis element. Only
    /// used to prune searches; the default knows nothing.
    fn coordinates(&self) -> Vec<(String, Q)> {
        Vec::new()
    }
}

// ---------------------------------------------------------------------------
// text helpers shared by every printer

/// `name`, `name^3`, `name^-1`, `name^(2/3)`, `name^(-2/3)`.
pub(crate) fn fmt_pow(name: &str, e: &Q) -> String {
    if e.is_one() {
        name.to_string()
    } else if e.is_integer() {
        format!("{name}^{e}")
    } else {
        format!("{name}^({e})")
    }
}

/// Joins `(coeff, monomial text)` pairs; `"1"` as text marks the unit.
pub(crate) fn fmt_sum<'a>(terms: impl IntoIterator<Item = (&'a Q, String)>) -> String {
    let mut out = String::new();
    for (i, (c, m)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if m == "1" {
            out.push_str(&a.to_string());
        } else if a.is_one() {
            out.push_str(&m);
        } else {
            out.push_str(&format!("{a}*{m}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

// ---------------------------------------------------------------------------
// level-graded generic monomials

/// A generator of 𝔐_level. Within a level, higher `rank` dominates.
/// Every generator is ≻ 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneratorId {
    pub level: u32,
    pub rank: u32,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: BTreeMap<GeneratorId, Q>,
}

impl Monomial {
    pub fn gen(g: &GeneratorId, e: Q) -> Self {
        let mut exps = BTreeMap::new();
        if !e.is_zero() {
            exps.insert(g.clone(), e);
        }
        Monomial { exps }
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&GeneratorId, &Q)> {
        self.exps.iter()
    }

    pub fn exponent(&self, g: &GeneratorId) -> Q {
        self.exps.get(g).cloned().unwrap_or_else(Q::zero)
    }

    pub fn max_level(&self) -> Option<u32> {
        self.exps.keys().next_back().map(|g| g.level)
    }

    /// Canonical factorization 𝔪 = 𝔪₀⋯𝔪ₙ, omitting trivial components.
    pub fn levels(&self) -> Vec<(u32, Monomial)> {
        let mut out: Vec<(u32, Monomial)> = Vec::new();
        for (g, e) in &self.exps {
            match out.last_mut() {
                Some((l, m)) if *l == g.level => {
                    m.exps.insert(g.clone(), e.clone());
                }
                _ => out.push((g.level, Monomial::gen(g, e.clone()))),
            }
        }
        out
    }

    /// Component at exactly level `n` (possibly 1).
    pub fn level_part(&self, n: u32) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .filter(|(g, _)| g.level == n)
                .map(|(g, e)| (g.clone(), e.clone()))
                .collect(),
        }
    }

    /// Split into (levels < n, levels ≥ n).
    pub fn split_at_level(&self, n: u32) -> (Monomial, Monomial) {
        let (lo, hi): (BTreeMap<_, _>, BTreeMap<_, _>) = self
            .exps
            .iter()
            .map(|(g, e)| (g.clone(), e.clone()))
            .partition(|(g, _)| g.level < n);
        (Monomial { exps: lo }, Monomial { exps: hi })
    }
}

impl Mono for Monomial {
    fn one() -> Self {
        Monomial::default()
    }
    fn is_one(&self) -> bool {
        self.exps.is_empty()
    }
    fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (g, e) in &other.exps {
            let s = exps.get(g).cloned().unwrap_or_else(Q::zero) + e;
            if s.is_zero() {
                exps.remove(g);
            } else {
                exps.insert(g.clone(), s);
            }
        }
        Monomial { exps }
    }
    fn inv(&self) -> Self {
        Monomial {
            exps: self.exps.iter().map(|(g, e)| (g.clone(), -e)).collect(),
        }
    }
    fn coordinates(&self) -> Vec<(String, Q)> {
        self.exps.iter().map(|(g, e)| (g.name.clone(), e.clone())).collect()
    }
    fn pow(&self, e: &Q) -> Self {
        if e.is_zero() {
            return Monomial::one();
        }
        Monomial {
            exps: self.exps.iter().map(|(g, x)| (g.clone(), x * e)).collect(),
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // The highest generator on which the exponents differ decides.
        let mut a = self.exps.iter().rev().peekable();
        let mut b = other.exps.iter().rev().peekable();
        let zero = Q::zero();
        loop {
            let (ga, gb) = (a.peek().map(|p| p.0), b.peek().map(|p| p.0));
            let (ea, eb) = match (ga, gb) {
                (None, None) => return std::cmp::Ordering::Equal,
                (Some(x), Some(y)) if x == y => (a.next().unwrap().1, b.next().unwrap().1),
                (Some(x), Some(y)) if x > y => (a.next().unwrap().1, &zero),
                (Some(_), None) => (a.next().unwrap().1, &zero),
                _ => (&zero, b.next().unwrap().1),
            };
            match ea.cmp(eb) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.exps.iter().map(|(g, e)| fmt_pow(&g.name, e)).collect();
        f.write_str(&parts.join("*"))
    }
}

/// A declared set of generators; rejects monomials built from others.
#[derive(Clone, Debug, Default)]
pub struct MonomialGroup {
    gens: Vec<GeneratorId>,
}

impl MonomialGroup {
    /// `decl` lists `(name, level)`; order within a level is increasing rank.
    pub fn new(decl: &[(&str, u32)]) -> Result<Self> {
        let mut gens: Vec<GeneratorId> = Vec::new();
        for (name, level) in decl {
            if gens.iter().any(|g| g.name == *name) {
                return Err(Error::domain(format!("generator {name} declared twice")));
            }
            let rank = gens.iter().filter(|g| g.level == *level).count() as u32;
            gens.push(GeneratorId { level: *level, rank, name: name.to_string() });
        }
        Ok(MonomialGroup { gens })
    }

    pub fn generator(&self, name: &str) -> Result<&GeneratorId> {
        self.gens
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| Error::domain(format!("undeclared generator {name}")))
    }

    pub fn generators(&self) -> &[GeneratorId] {
        &self.gens
    }

    pub fn mono(&self, powers: &[(&str, Q)]) -> Result<Monomial> {
        let mut m = Monomial::one();
        for (name, e) in powers {
            m = m.mul(&Monomial::gen(self.generator(name)?, e.clone()));
        }
        Ok(m)
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        m.exps.keys().all(|g| self.gens.contains(g))
    }

    /// Comparison restricted to members of this group.
    pub fn compare(&self, a: &Monomial, b: &Monomial) -> Result<std::cmp::Ordering> {
        for m in [a, b] {
            if !self.contains(m) {
                return Err(Error::domain(format!("{m} is not in the declared group")));
            }
        }
        Ok(a.cmp(b))
    }
}

// ---------------------------------------------------------------------------
// transmonomials x^r·exp(a)

/// `x^r·exp(a)` with `a` a finite, purely infinite, canonically ordered sum.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TransMonomial {
    r: Q,
    exp: Rc<Vec<(Q, TransMonomial)>>,
}

impl TransMonomial {
    pub fn x_pow(r: Q) -> Self {
        TransMonomial { r, exp: Rc::new(Vec::new()) }
    }

    pub fn x() -> Self {
        Self::x_pow(Q::one())
    }

    /// `x^r·exp(Σ cᵢ·mᵢ)`; every `mᵢ` must be ≻ 1.
    pub fn new(r: Q, terms: Vec<(Q, TransMonomial)>) -> Result<Self> {
        let mut acc: BTreeMap<TransMonomial, Q> = BTreeMap::new();
        for (c, m) in terms {
            if !m.is_infinite() {
                return Err(Error::domain(format!("exp argument term {m} is not infinite")));
            }
            *acc.entry(m).or_insert_with(Q::zero) += c;
        }
        let exp = acc.into_iter().rev().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (c, m)).collect();
        Ok(TransMonomial { r, exp: Rc::new(exp) })
    }

    pub fn exp_of(terms: Vec<(Q, TransMonomial)>) -> Result<Self> {
        Self::new(Q::zero(), terms)
    }

    pub fn r(&self) -> &Q {
        &self.r
    }

    /// Terms of the exponent, strictly decreasing.
    pub fn exp_terms(&self) -> &[(Q, TransMonomial)] {
        &self.exp
    }

    /// `exp(a)` with the power of x removed.
    pub fn exp_part(&self) -> TransMonomial {
        TransMonomial { r: Q::zero(), exp: self.exp.clone() }
    }

    pub fn height(&self) -> usize {
        self.exp.iter().map(|(_, m)| 1 + m.height()).max().unwrap_or(0)
    }

    /// Level components: 0 ↦ x^r, i+1 ↦ exp(aᵢ) where aᵢ collects the terms
    /// of the exponent of monomial height i. Trivial components are omitted.
    pub fn levels(&self) -> Vec<(u32, TransMonomial)> {
        let mut out = Vec::new();
        if !self.r.is_zero() {
            out.push((0, Self::x_pow(self.r.clone())));
        }
        let mut by_height: BTreeMap<usize, Vec<(Q, TransMonomial)>> = BTreeMap::new();
        for (c, m) in self.exp.iter() {
            by_height.entry(m.height()).or_default().push((c.clone(), m.clone()));
        }
        for (h, ts) in by_height {
            out.push((h as u32 + 1, TransMonomial { r: Q::zero(), exp: Rc::new(ts) }));
        }
        out
    }

    pub fn is_pure_power(&self) -> bool {
        self.exp.is_empty()
    }
}

fn merge_exp(a: &[(Q, TransMonomial)], b: &[(Q, TransMonomial)], sb: &Q) -> Vec<(Q, TransMonomial)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.1.cmp(&y.1),
            (Some(_), None) => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Less,
        };
        match ord {
            std::cmp::Ordering::Greater => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Less => {
                out.push((&b[j].0 * sb, b[j].1.clone()));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let c = &a[i].0 + &b[j].0 * sb;
                if !c.is_zero() {
                    out.push((c, a[i].1.clone()));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl Mono for TransMonomial {
    fn one() -> Self {
        Self::x_pow(Q::zero())
    }
    fn is_one(&self) -> bool {
        self.r.is_zero() && self.exp.is_empty()
    }
    fn mul(&self, other: &Self) -> Self {
        let exp = if other.exp.is_empty() {
            self.exp.clone()
        } else if self.exp.is_empty() {
            other.exp.clone()
        } else {
            Rc::new(merge_exp(&self.exp, &other.exp, &Q::one()))
        };
        TransMonomial { r: &self.r + &other.r, exp }
    }
    fn inv(&self) -> Self {
        TransMonomial {
            r: -&self.r,
            exp: Rc::new(self.exp.iter().map(|(c, m)| (-c, m.clone())).collect()),
        }
    }
    fn coordinates(&self) -> Vec<(String, Q)> {
        let mut v = vec![("x".to_string(), self.r.clone())];
        v.extend(self.exp.iter().map(|(c, m)| (format!("exp:{m:?}"), c.clone())));
        v
    }
    fn pow(&self, e: &Q) -> Self {
        if e.is_zero() {
            return Self::one();
        }
        TransMonomial {
            r: &self.r * e,
            exp: Rc::new(self.exp.iter().map(|(c, m)| (c * e, m.clone())).collect()),
        }
    }
}

impl Ord for TransMonomial {
    /// `x^r·e^a ≻ x^s·e^b` iff `a − b > 0`, or `a = b` and `r > s`:
    /// any nonzero purely infinite difference outgrows log x.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        let (a, b) = (&self.exp, &other.exp);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.1.cmp(&y.1),
                (Some(_), None) => Greater,
                _ => Less,
            };
            match ord {
                Greater => return if a[i].0.is_positive() { Greater } else { Less },
                Less => return if b[j].0.is_positive() { Less } else { Greater },
                Equal => {
                    if a[i].0 != b[j].0 {
                        return a[i].0.cmp(&b[j].0);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        self.r.cmp(&other.r)
    }
}

impl PartialOrd for TransMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl TransMonomial {
    /// Text form with `var` standing for x (used for ℓₙ printing).
    pub fn fmt_with(&self, var: &str) -> String {
        self.fmt_with_arg(var, &|m| m.fmt_with(var))
    }

    /// Like [`fmt_with`](Self::fmt_with) but exponent-argument monomials are
    /// rendered by `inner`.
    pub fn fmt_with_arg(&self, var: &str, inner: &dyn Fn(&TransMonomial) -> String) -> String {
        let mut parts = Vec::new();
        if !self.r.is_zero() {
            parts.push(fmt_pow(var, &self.r));
        }
        if !self.exp.is_empty() {
            let arg = fmt_sum(self.exp.iter().map(|(c, m)| (c, if m.is_one() { "1".into() } else { inner(m) })));
            parts.push(format!("exp({arg})"));
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl fmt::Display for TransMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with("x"))
    }
}

impl fmt::Debug for TransMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// ---------------------------------------------------------------------------
// grids

/// `base·ratios*`, every ratio ≺ 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridWitness<M> {
    pub base: M,
    pub ratios: Vec<M>,
}

impl<M: Mono> GridWitness<M> {
    pub fn new(base: M, ratios: Vec<M>) -> Result<Self> {
        if let Some(r) = ratios.iter().find(|r| !r.is_infinitesimal()) {
            return Err(Error::NotSmall(format!("ratio {r} is not infinitesimal")));
        }
        Ok(GridWitness { base, ratios })
    }

    /// The first `n` grid points in decreasing order.
    pub fn points(&self, n: usize) -> Vec<M> {
        grid_points(&self.base, &self.ratios, n)
    }

    /// Whether `m` lies in the grid (bounded by the number of ratio factors).
    pub fn contains(&self, m: &M, max_len: usize) -> bool {
        monoid_contains(&m.div(&self.base), &self.ratios, max_len)
    }
}

/// Decreasing enumeration of `base·ratios*`.
pub fn grid_points<M: Mono>(base: &M, ratios: &[M], n: usize) -> Vec<M> {
    use std::collections::{BinaryHeap, HashSet};
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    heap.push(base.clone());
    seen.insert(base.clone());
    while out.len() < n {
        let Some(m) = heap.pop() else { break };
        for r in ratios {
            let c = m.mul(r);
            if seen.insert(c.clone()) {
                heap.push(c);
            }
        }
        out.push(m);
    }
    out
}

/// Ordered tuples `(g₁,…,gₖ)` of ratios, `k ≤ max_len`, with
/// `g₁⋯gₖ = m·base⁻¹`.
pub fn count_factorizations<M: Mono>(m: &M, g: &GridWitness<M>, max_len: usize) -> Result<u64> {
    if let Some(r) = g.ratios.iter().find(|r| !r.is_infinitesimal()) {
        return Err(Error::NotSmall(format!("ratio {r} is not infinitesimal")));
    }
    // signs each coordinate can take in a product of ratios
    let mut signs: HashMap<String, (bool, bool)> = HashMap::new();
    for r in &g.ratios {
        for (k, e) in r.coordinates() {
            let s = signs.entry(k).or_default();
            s.0 |= e.is_positive();
            s.1 |= e.is_negative();
        }
    }
    let mut memo = HashMap::new();
    count_rec(&m.div(&g.base), &g.ratios, &signs, max_len, &mut memo)
}

fn count_rec<M: Mono>(
    t: &M,
    ratios: &[M],
    signs: &HashMap<String, (bool, bool)>,
    left: usize,
    memo: &mut HashMap<(M, usize), u64>,
) -> Result<u64> {
    if t.is_one() {
        // Appending ratios only shrinks the product.
        return Ok(1);
    }
    if t.is_infinite() {
        return Ok(0);
    }
    let unreachable = t.coordinates().into_iter().any(|(k, e)| {
        let (pos, neg) = signs.get(&k).copied().unwrap_or_default();
        (e.is_positive() && !pos) || (e.is_negative() && !neg)
    });
    if unreachable {
        return Ok(0);
    }
    if let Some(&n) = memo.get(&(t.clone(), left)) {
        return Ok(n);
    }
    let live: Vec<&M> = ratios.iter().filter(|r| *r >= t).collect();
    if live.is_empty() {
        return Ok(0);
    }
    if left == 0 {
        return Err(Error::budget(format!("factorizations of {t} need tuples longer than max_len")));
    }
    let mut n = 0;
    for r in live {
        n += count_rec(&t.div(r), ratios, signs, left - 1, memo)?;
    }
    memo.insert((t.clone(), left), n);
    Ok(n)
}

/// Whether `t` is a product of at most `max_len` elements of `gens`;
/// the empty product `1` is always contained.
pub fn monoid_contains<M: Mono>(t: &M, gens: &[M], max_len: usize) -> bool {
    use std::collections::HashSet;
    let mut frontier: HashSet<M> = HashSet::from([M::one()]);
    let mut seen = frontier.clone();
    if t.is_one() {
        return true;
    }
    for _ in 0..max_len {
        let mut next = HashSet::new();
        for m in &frontier {
            for g in gens {
                let c = m.mul(g);
                if &c == t {
                    return true;
                }
                if seen.insert(c.clone()) {
                    next.insert(c);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{q, qr};

    fn grp() -> MonomialGroup {
        MonomialGroup::new(&[("x", 0), ("e", 1)]).unwrap()
    }

    #[test]
    fn generic_order() {
        let g = grp();
        let a = g.mono(&[("x", q(2))]).unwrap();
        let b = g.mono(&[("x", qr(1, 2))]).unwrap();
        assert!(a > b);
        let e_inv = g.mono(&[("e", q(-1))]).unwrap();
        let x100 = g.mono(&[("x", q(-100))]).unwrap();
        assert!(e_inv < x100);
        assert_eq!(g.compare(&a, &a).unwrap(), std::cmp::Ordering::Equal);
    }

    #[test]
    fn undeclared_generator_is_rejected() {
        let g = grp();
        let other = MonomialGroup::new(&[("y", 0)]).unwrap();
        let y = other.mono(&[("y", q(1))]).unwrap();
        assert!(matches!(g.compare(&y, &Monomial::one()), Err(Error::Domain(_))));
        assert!(g.mono(&[("z", q(1))]).is_err());
    }

    #[test]
    fn generic_mul_and_levels() {
        let g = grp();
        let x2 = g.mono(&[("x", q(2))]).unwrap();
        assert!(x2.mul(&x2.inv()).is_one());
        let xe = g.mono(&[("x", q(1)), ("e", q(1))]).unwrap();
        let x = g.mono(&[("x", q(1))]).unwrap();
        let e = g.mono(&[("e", q(1))]).unwrap();
        assert_eq!(xe.mul(&e.inv()), x);
        assert_eq!(x.mul(&g.mono(&[("x", qr(1, 2))]).unwrap()).to_string(), "x^(3/2)");
        let x2e = x2.mul(&e);
        assert_eq!(x2e.levels(), vec![(0, x2.clone()), (1, e.clone())]);
        assert!(Monomial::one().levels().is_empty());
        let e3 = e.pow(&q(3));
        assert_eq!(e3.levels(), vec![(1, e3.clone())]);
    }

    #[test]
    fn factorization_counts() {
        let g = grp();
        let xm = |k: i64| g.mono(&[("x", q(k))]).unwrap();
        let w = GridWitness::new(Monomial::one(), vec![xm(-1)]).unwrap();
        assert_eq!(count_factorizations(&Monomial::one(), &w, 4).unwrap(), 1);
        assert_eq!(count_factorizations(&xm(-2), &w, 4).unwrap(), 1);
        let w2 = GridWitness::new(Monomial::one(), vec![xm(-1), xm(-2)]).unwrap();
        assert_eq!(count_factorizations(&xm(-2), &w2, 3).unwrap(), 2);
        assert!(matches!(count_factorizations(&xm(-5), &w, 3), Err(Error::BudgetExhausted(_))));
    }

    #[test]
    fn transmonomial_order() {
        let x = TransMonomial::x();
        let ex = TransMonomial::exp_of(vec![(q(1), x.clone())]).unwrap();
        let x100 = TransMonomial::x_pow(q(100));
        assert!(ex > x100);
        assert!(ex.inv() < TransMonomial::x_pow(q(-100)));
        assert_eq!(ex.height(), 1);
        let eex = TransMonomial::exp_of(vec![(q(1), ex.clone())]).unwrap();
        assert_eq!(eex.height(), 2);
        assert!(eex > ex.pow(&q(1000)));
        assert!(TransMonomial::exp_of(vec![(q(1), x.inv())]).is_err());
        assert_eq!(ex.mul(&x).to_string(), "x*exp(x)");
        let lv = x.mul(&eex).mul(&ex).levels();
        assert_eq!(lv.len(), 3);
        assert_eq!(lv[2].1, eex);
    }
}
