//! Truncation closedness, IL/TIL predicates and bounded closure engines.
//!
//! Sets are finite lists of [`TransElem`]s. Everything is compared at the
//! common depth of the set, i.e. after upshifting into the purely
//! exponential tower, where an element is just a list of terms.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use crate::monomial::{monoid_contains, Mono, Monomial, TransMonomial};
use crate::transseries::{Ctx, TSeries, TransElem};
use crate::{Error, Result, Q};

type Terms = Vec<(Q, TransMonomial)>;

/// Scanned form of an element: its terms (a prefix when `complete` is false).
#[derive(Clone, Debug, PartialEq, Eq)]
struct Fin {
    terms: Terms,
    complete: bool,
}

impl Fin {
    fn of(e: &TransElem, depth: usize, ctx: &Ctx) -> Result<Fin> {
        let e = e.at_depth(depth);
        if e.repr.is_exact() {
            if let Ok(terms) = e.repr.terms(ctx.budget) {
                return Ok(Fin { terms, complete: true });
            }
        }
        let ex = e.expansion(ctx.budget, ctx)?;
        Ok(Fin { terms: ex.terms, complete: false })
    }

    fn exact(terms: Terms) -> Fin {
        Fin { terms, complete: true }
    }

    fn mono(m: TransMonomial) -> Fin {
        Fin::exact(vec![(Q::one(), m)])
    }

    fn truncate(&self, m: &TransMonomial) -> Fin {
        Fin::exact(self.terms.iter().filter(|(_, n)| n > m).cloned().collect())
    }

    fn elem(&self, depth: usize) -> TransElem {
        TransElem::new(TSeries::from_terms(self.terms.clone()), depth).normalize()
    }
}

#[derive(Clone)]
pub struct GenSet {
    pub label: String,
    elements: Vec<TransElem>,
}

impl fmt::Debug for GenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenSet").field("label", &self.label).field("elements", &self.elements).finish()
    }
}

impl GenSet {
    pub fn new(label: impl Into<String>, elements: Vec<TransElem>) -> Self {
        GenSet { label: label.into(), elements }
    }

    pub fn elements(&self) -> &[TransElem] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Depth of the set: the largest depth among normalized members.
    pub fn depth(&self) -> usize {
        self.elements.iter().map(|e| e.normalize().depth).max().unwrap_or(0)
    }

    fn fins(&self, n: usize, ctx: &Ctx) -> Result<Vec<Fin>> {
        self.elements.iter().map(|e| Fin::of(e, n, ctx)).collect()
    }

    /// supp(S) over the scanned prefixes, decreasing.
    pub fn support(&self, ctx: &Ctx) -> Result<Vec<TransMonomial>> {
        let n = self.depth();
        let mut all: Vec<TransMonomial> = self.fins(n, ctx)?.into_iter().flat_map(|f| f.terms).map(|t| t.1).collect();
        all.sort_by(|a, b| b.cmp(a));
        all.dedup();
        Ok(all)
    }
}

/// Anything that can answer "is f a member?".
pub trait Membership {
    fn depth(&self) -> usize;
    /// Elements whose supports are subject to the IL rules.
    fn scan_elements(&self, ctx: &Ctx) -> Result<Vec<TransElem>>;
    fn contains(&self, f: &TransElem, ctx: &Ctx) -> Result<bool>;
}

impl Membership for GenSet {
    fn depth(&self) -> usize {
        GenSet::depth(self)
    }

    fn scan_elements(&self, _: &Ctx) -> Result<Vec<TransElem>> {
        Ok(self.elements.clone())
    }

    fn contains(&self, f: &TransElem, ctx: &Ctx) -> Result<bool> {
        let n = self.depth();
        let f = f.normalize();
        if f.depth > n {
            return Ok(false);
        }
        let target = Fin::of(&f, n, ctx)?;
        Ok(self.fins(n, ctx)?.contains(&target))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Truncation,
    /// E(aᵢ)
    ExpComponent,
    /// aᵢ
    ExpArgument,
    /// Σᵢ aᵢ
    ArgumentSum,
    /// E(Σᵢ aᵢ)
    ExpOfSum,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Truncation => "truncation",
            Rule::ExpComponent => "exp-component",
            Rule::ExpArgument => "exp-argument",
            Rule::ArgumentSum => "argument-sum",
            Rule::ExpOfSum => "exp-of-sum",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub element: TransElem,
    pub missing: TransElem,
    pub rule: Rule,
}

#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub verdict: bool,
    pub witnesses: Vec<Witness>,
}

impl ClosureReport {
    fn from(witnesses: Vec<Witness>) -> Self {
        ClosureReport { verdict: witnesses.is_empty(), witnesses }
    }

    pub fn and(mut self, o: ClosureReport) -> Self {
        self.witnesses.extend(o.witnesses);
        Self::from(self.witnesses)
    }
}

pub fn is_truncation_closed(s: &GenSet, ctx: &Ctx) -> Result<ClosureReport> {
    let n = s.depth();
    let fins = s.fins(n, ctx)?;
    let mut seen: Vec<Fin> = Vec::new();
    let mut out = Vec::new();
    for f in &fins {
        for (_, m) in f.terms.iter().rev() {
            let t = f.truncate(m);
            if !fins.contains(&t) && !seen.contains(&t) {
                out.push(Witness { element: f.elem(n), missing: t.elem(n), rule: Rule::Truncation });
                seen.push(t);
            }
        }
    }
    Ok(ClosureReport::from(out))
}

/// The IL requirements of one monomial x^r·E(a): with a = a₀ + ⋯ split by
/// monomial height, E(aᵢ), aᵢ, Σaᵢ and E(Σaᵢ).
fn requirements(m: &TransMonomial) -> Vec<(Fin, Rule)> {
    let e = m.exp_part();
    if e.is_one() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut sum: Terms = Vec::new();
    for (_, comp) in e.levels() {
        out.push((Fin::mono(comp.clone()), Rule::ExpComponent));
        out.push((Fin::exact(comp.exp_terms().to_vec()), Rule::ExpArgument));
        sum.extend(comp.exp_terms().iter().cloned());
    }
    sum.sort_by(|a, b| b.1.cmp(&a.1));
    out.push((Fin::exact(sum), Rule::ArgumentSum));
    out.push((Fin::mono(e), Rule::ExpOfSum));
    out
}

pub fn is_il_closed<S: Membership + ?Sized>(s: &S, ctx: &Ctx) -> Result<ClosureReport> {
    let n = s.depth();
    let mut checked: HashMap<Terms, bool> = HashMap::new();
    let mut out = Vec::new();
    for el in s.scan_elements(ctx)? {
        let f = Fin::of(&el, n, ctx)?;
        for (_, m) in &f.terms {
            for (req, rule) in requirements(m) {
                if checked.contains_key(&req.terms) {
                    continue;
                }
                let b = s.contains(&req.elem(n), ctx)?;
                if !b {
                    out.push(Witness { element: f.elem(n), missing: req.elem(n), rule });
                }
                checked.insert(req.terms, b);
            }
        }
    }
    Ok(ClosureReport::from(out))
}

pub fn is_til_closed(s: &GenSet, ctx: &Ctx) -> Result<ClosureReport> {
    Ok(is_truncation_closed(s, ctx)?.and(is_il_closed(s, ctx)?))
}

/// Levelled monomials, for the neatness test.
pub trait Leveled: Mono {
    fn level_parts(&self) -> Vec<Self>;
}

impl Leveled for Monomial {
    fn level_parts(&self) -> Vec<Self> {
        self.levels().into_iter().map(|l| l.1).collect()
    }
}

impl Leveled for TransMonomial {
    fn level_parts(&self) -> Vec<Self> {
        self.levels().into_iter().map(|l| l.1).collect()
    }
}

/// Every level component of every member is a member.
pub fn is_neat<M: Leveled>(set: &[M]) -> bool {
    set.iter().all(|m| m.level_parts().iter().all(|c| set.contains(c)))
}

pub fn close_truncations(s: &GenSet, ctx: &Ctx) -> Result<GenSet> {
    let n = s.depth();
    let mut fins: Vec<Fin> = Vec::new();
    for f in s.fins(n, ctx)? {
        if !f.complete {
            return Err(Error::domain("truncation closure needs finite elements"));
        }
        if !fins.contains(&f) {
            fins.push(f);
        }
    }
    let mut i = 0;
    while i < fins.len() {
        let f = fins[i].clone();
        for (_, m) in f.terms.iter().rev() {
            let t = f.truncate(m);
            if !fins.contains(&t) {
                fins.push(t);
            }
        }
        i += 1;
    }
    Ok(GenSet::new(s.label.clone(), fins.iter().map(|f| f.elem(n)).collect()))
}

/// Least IL-closed superset, by saturating the requirement rules.
pub fn il_closure(s: &GenSet, ctx: &Ctx) -> Result<GenSet> {
    let n = s.depth();
    let mut fins: Vec<Fin> = Vec::new();
    for f in s.fins(n, ctx)? {
        if !f.complete {
            return Err(Error::domain("IL closure needs finite elements"));
        }
        if !fins.contains(&f) {
            fins.push(f);
        }
    }
    let mut i = 0;
    while i < fins.len() {
        let f = fins[i].clone();
        for (_, m) in &f.terms {
            if m.height() > ctx.height {
                return Err(Error::budget(format!("monomial {m} exceeds height {}", ctx.height)));
            }
            for (req, _) in requirements(m) {
                if !fins.contains(&req) {
                    fins.push(req);
                }
            }
        }
        i += 1;
        if fins.len() > ctx.budget * ctx.budget {
            return Err(Error::budget("IL closure grew beyond budget"));
        }
    }
    Ok(GenSet::new(s.label.clone(), fins.iter().map(|f| f.elem(n)).collect()))
}

/// Truncation closure of the IL closure; TIL-closed.
pub fn til_closure(s: &GenSet, ctx: &Ctx) -> Result<GenSet> {
    close_truncations(&il_closure(s, ctx)?, ctx)
}

// ---------------------------------------------------------------------------
// generated rings

/// Row-echelon basis keyed by leading monomial.
#[derive(Default)]
struct Span {
    rows: HashMap<TransMonomial, BTreeMap<TransMonomial, Q>>,
}

impl Span {
    fn reduce(&self, mut v: BTreeMap<TransMonomial, Q>) -> BTreeMap<TransMonomial, Q> {
        let mut done: BTreeMap<TransMonomial, Q> = BTreeMap::new();
        while let Some((lead, c)) = v.pop_last() {
            match self.rows.get(&lead) {
                Some(row) => {
                    let k = &c / &row[&lead];
                    for (m, a) in row.iter().filter(|(m, _)| **m != lead) {
                        let e = v.entry(m.clone()).or_insert_with(Q::zero);
                        *e -= &k * a;
                        if e.is_zero() {
                            v.remove(m);
                        }
                    }
                }
                None => {
                    done.insert(lead, c);
                }
            }
        }
        done
    }

    fn insert(&mut self, v: BTreeMap<TransMonomial, Q>) {
        // Reduced fully so every row's lead is the lead of a nonzero remainder.
        let r = self.reduce(v);
        if let Some((lead, _)) = r.last_key_value() {
            let lead = lead.clone();
            self.rows.insert(lead, r);
        }
    }

    fn contains(&self, v: BTreeMap<TransMonomial, Q>) -> bool {
        self.reduce(v).is_empty()
    }
}

fn to_map(t: &Terms) -> BTreeMap<TransMonomial, Q> {
    t.iter().map(|(c, m)| (m.clone(), c.clone())).collect()
}

/// Stage `k` of the differential ring ℚ{S}: the ring generated by ∂ʲs for
/// s ∈ S, j ≤ k.
///
/// Membership uses the monomial-basis description: f is a member when every
/// monomial of f is a product of at most `max_len` support monomials of the
/// generators. For finite generators this is exactly the generated ring
/// whenever the stage is truncation closed; [`RingStage::contains_exact`]
/// decides membership in the span of generator products instead.
pub struct RingStage {
    depth: usize,
    gens: Vec<TransElem>,
    basis: Vec<TransMonomial>,
    max_len: usize,
    spans: RefCell<HashMap<usize, (Span, Vec<TransElem>)>>,
}

pub const DEFAULT_MAX_LEN: usize = 8;

pub fn ring_stage(s: &GenSet, k: usize, ctx: &Ctx) -> Result<RingStage> {
    let n = s.depth();
    let mut gens: Vec<TransElem> = Vec::new();
    let mut fins: Vec<Fin> = Vec::new();
    for e in s.elements() {
        let mut cur = e.at_depth(n);
        for j in 0..=k {
            if j > 0 {
                cur = cur.derive()?;
            }
            let f = Fin::of(&cur, n, ctx)?;
            if !f.complete {
                return Err(Error::domain("ring stages need finite generators"));
            }
            if !f.terms.is_empty() && !fins.contains(&f) {
                fins.push(f.clone());
                gens.push(TransElem::new(TSeries::from_terms(f.terms), n));
            }
        }
    }
    let mut basis: Vec<TransMonomial> = fins.iter().flat_map(|f| f.terms.iter().map(|t| t.1.clone())).collect();
    basis.sort_by(|a, b| b.cmp(a));
    basis.dedup();
    basis.retain(|m| !m.is_one());
    if basis.len() > ctx.budget {
        return Err(Error::budget("ring stage has too many basis monomials"));
    }
    Ok(RingStage { depth: n, gens, basis, max_len: DEFAULT_MAX_LEN, spans: RefCell::new(HashMap::new()) })
}

impl RingStage {
    pub fn gens(&self) -> &[TransElem] {
        &self.gens
    }

    /// Support monomials of the generators.
    pub fn basis(&self) -> &[TransMonomial] {
        &self.basis
    }

    pub fn with_max_len(mut self, n: usize) -> Self {
        self.max_len = n;
        self
    }

    pub fn contains_monomial(&self, m: &TransMonomial) -> bool {
        monoid_contains(m, &self.basis, self.max_len)
    }

    /// Products of generators with total degree ≤ `degree`, starting with 1.
    pub fn products(&self, degree: usize, ctx: &Ctx) -> Result<Vec<TransElem>> {
        self.build(degree, ctx)?;
        Ok(self.spans.borrow()[&degree].1.clone())
    }

    fn build(&self, degree: usize, ctx: &Ctx) -> Result<()> {
        if self.spans.borrow().contains_key(&degree) {
            return Ok(());
        }
        let one = TransElem::new(TSeries::one(), self.depth);
        let mut layer = vec![(0usize, one.clone())];
        let mut all = vec![one];
        for _ in 0..degree {
            let mut next = Vec::new();
            for (start, p) in &layer {
                for (i, g) in self.gens.iter().enumerate().skip(*start) {
                    next.push((i, p.mul(g)));
                }
            }
            all.extend(next.iter().map(|t| t.1.clone()));
            if all.len() > ctx.budget * ctx.budget {
                return Err(Error::budget("too many generator products"));
            }
            layer = next;
        }
        let mut span = Span::default();
        for p in &all {
            span.insert(to_map(&p.repr.terms(ctx.budget)?));
        }
        self.spans.borrow_mut().insert(degree, (span, all));
        Ok(())
    }

    /// f is a ℚ-combination of generator products of degree ≤ `degree`.
    pub fn contains_exact(&self, f: &TransElem, degree: usize, ctx: &Ctx) -> Result<bool> {
        let f = f.normalize();
        if f.depth > self.depth {
            return Ok(false);
        }
        let t = Fin::of(&f, self.depth, ctx)?;
        if !t.complete {
            return Ok(false);
        }
        self.build(degree, ctx)?;
        Ok(self.spans.borrow()[&degree].0.contains(to_map(&t.terms)))
    }
}

impl Membership for RingStage {
    fn depth(&self) -> usize {
        self.depth
    }

    /// Generators and their pairwise products.
    fn scan_elements(&self, ctx: &Ctx) -> Result<Vec<TransElem>> {
        self.products(2, ctx)
    }

    fn contains(&self, f: &TransElem, ctx: &Ctx) -> Result<bool> {
        let f = f.normalize();
        if f.depth > self.depth {
            return Ok(false);
        }
        let t = Fin::of(&f, self.depth, ctx)?;
        Ok(t.complete && t.terms.iter().all(|(_, m)| self.contains_monomial(m)))
    }
}

/// m ∈ supp(S)* (products of at most `max_len` support monomials).
pub fn in_support_monoid(s: &GenSet, m: &TransMonomial, max_len: usize, ctx: &Ctx) -> Result<bool> {
    Ok(monoid_contains(m, &s.support(ctx)?, max_len))
}
