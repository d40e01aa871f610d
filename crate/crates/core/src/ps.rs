//! Lazy multivariate power series over ℚ, stored as memoized homogeneous
//! components. A [`crate::series::Series`] is `base · P(ratios)` for one of
//! these `P`.
//!
//! Components are computed in increasing degree, so a recursive definition
//! may read every strictly lower component of itself.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use num_traits::{One, Zero};

use crate::Q;

pub(crate) type Idx = Vec<u32>;
pub(crate) type Comp = HashMap<Idx, Q>;
pub(crate) type CoeffFn = Rc<dyn Fn(&[u32]) -> Q>;
pub(crate) type EntryFn = Rc<dyn Fn(&[u32], &Q) -> Option<Q>>;
pub(crate) type RecFn = Box<dyn Fn(usize, &dyn Fn(usize) -> Rc<Comp>) -> Comp>;

#[derive(Clone)]
pub(crate) struct Ps(Rc<Node>);

struct Node {
    nvars: usize,
    /// Every component above this degree is zero.
    max_deg: Option<usize>,
    kind: Kind,
    memo: RefCell<Vec<Rc<Comp>>>,
}

enum Kind {
    Poly(Vec<Rc<Comp>>),
    Lin(Vec<(Q, Ps)>),
    Mul(Ps, Ps),
    Embed { src: Ps, map: Vec<usize>, shift: Idx, shift_deg: usize },
    Map { src: Ps, f: EntryFn },
    /// Entries whose coordinates `fixed` take the given values, as a series
    /// in the remaining coordinates `free`.
    Slice { src: Ps, free: Vec<usize>, fixed: Vec<(usize, u32)>, fixed_deg: usize },
    Compose { coeff: CoeffFn, args: Vec<Ps>, pows: RefCell<HashMap<Idx, Ps>> },
    Rebase { src: Ps, plan: Rc<RebasePlan> },
    Rec(RecFn),
}

/// Re-expansion of `b·P(r)` around a lower point `t`: entry `k` is sent to
/// `(k − κ) + e_gen` for the first `κ ≤ k`, where `gen = b·r^κ/t`.
pub(crate) struct RebasePlan {
    pub kappas: Vec<(Idx, Option<usize>)>,
    pub nvars: usize,
}

pub(crate) fn deg(k: &[u32]) -> usize {
    k.iter().map(|&e| e as usize).sum()
}

fn add_to(c: &mut Comp, k: Idx, v: Q) {
    if v.is_zero() {
        return;
    }
    match c.entry(k) {
        std::collections::hash_map::Entry::Occupied(mut o) => {
            *o.get_mut() += v;
            if o.get().is_zero() {
                o.remove();
            }
        }
        std::collections::hash_map::Entry::Vacant(e) => {
            e.insert(v);
        }
    }
}

/// All vectors `v ≤ bound` componentwise.
fn vectors_below(bound: &[u32]) -> Vec<Idx> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        out = out.into_iter().flat_map(|v: Idx| (0..=b).map(move |e| [v.clone(), vec![e]].concat())).collect();
    }
    out
}

fn is_injective(map: &[usize]) -> bool {
    map.iter().enumerate().all(|(i, t)| !map[..i].contains(t))
}

/// All exponent vectors of total degree `d` in `n` variables.
pub(crate) fn vectors_of_degree(n: usize, d: usize) -> Vec<Idx> {
    fn go(n: usize, d: usize, cur: &mut Idx, out: &mut Vec<Idx>) {
        if cur.len() + 1 == n {
            cur.push(d as u32);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=d).rev() {
            cur.push(e as u32);
            go(n, d - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

impl Ps {
    fn node(nvars: usize, max_deg: Option<usize>, kind: Kind) -> Ps {
        let max_deg = if nvars == 0 { Some(0) } else { max_deg };
        Ps(Rc::new(Node { nvars, max_deg, kind, memo: RefCell::new(Vec::new()) }))
    }

    pub fn nvars(&self) -> usize {
        self.0.nvars
    }

    pub fn max_deg(&self) -> Option<usize> {
        self.0.max_deg
    }

    pub fn is_exact(&self) -> bool {
        self.0.max_deg.is_some()
    }

    pub fn zero(nvars: usize) -> Ps {
        Ps::node(nvars, Some(0), Kind::Poly(Vec::new()))
    }

    pub fn constant(nvars: usize, c: Q) -> Ps {
        let mut comp = Comp::new();
        add_to(&mut comp, vec![0; nvars], c);
        Ps::node(nvars, Some(0), Kind::Poly(vec![Rc::new(comp)]))
    }

    pub fn one(nvars: usize) -> Ps {
        Ps::constant(nvars, Q::one())
    }

    /// A polynomial from `(index, coeff)` entries.
    pub fn poly(nvars: usize, entries: impl IntoIterator<Item = (Idx, Q)>) -> Ps {
        let mut comps: Vec<Comp> = Vec::new();
        for (k, v) in entries {
            let d = deg(&k);
            if comps.len() <= d {
                comps.resize_with(d + 1, Comp::new);
            }
            add_to(&mut comps[d], k, v);
        }
        while comps.last().is_some_and(|c| c.is_empty()) {
            comps.pop();
        }
        let md = comps.len().saturating_sub(1);
        Ps::node(nvars, Some(md), Kind::Poly(comps.into_iter().map(Rc::new).collect()))
    }

    /// Statically known to vanish.
    pub fn is_known_zero(&self) -> bool {
        match &self.0.kind {
            Kind::Poly(cs) => cs.iter().all(|c| c.is_empty()),
            _ => false,
        }
    }

    pub fn lin(nvars: usize, parts: Vec<(Q, Ps)>) -> Ps {
        let parts: Vec<(Q, Ps)> = parts.into_iter().filter(|(c, p)| !c.is_zero() && !p.is_known_zero()).collect();
        if parts.is_empty() {
            return Ps::zero(nvars);
        }
        let md = parts.iter().map(|(_, p)| p.max_deg()).try_fold(0, |a, d| d.map(|d| a.max(d)));
        Ps::node(nvars, md, Kind::Lin(parts))
    }

    pub fn mul(&self, other: &Ps) -> Ps {
        let n = self.nvars();
        if self.is_known_zero() || other.is_known_zero() {
            return Ps::zero(n);
        }
        let md = match (self.max_deg(), other.max_deg()) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Ps::node(n, md, Kind::Mul(self.clone(), other.clone()))
    }

    /// Rename variable `j` to `map[j]` in an `nvars`-variable ring and
    /// multiply by `z^shift`.
    pub fn embed(&self, nvars: usize, map: Vec<usize>, shift: Idx) -> Ps {
        debug_assert_eq!(map.len(), self.nvars());
        let identity = nvars == self.nvars() && map.iter().enumerate().all(|(i, &j)| i == j);
        let shift_deg = deg(&shift);
        if identity && shift_deg == 0 {
            return self.clone();
        }
        if self.is_known_zero() {
            return Ps::zero(nvars);
        }
        let shift = if shift.is_empty() { vec![0; nvars] } else { shift };
        let md = self.max_deg().map(|d| d + shift_deg);
        Ps::node(nvars, md, Kind::Embed { src: self.clone(), map, shift, shift_deg })
    }

    /// Entry-wise transform keeping the degree; `None` drops the entry.
    pub fn map(&self, f: EntryFn) -> Ps {
        if self.is_known_zero() {
            return self.clone();
        }
        Ps::node(self.nvars(), self.max_deg(), Kind::Map { src: self.clone(), f })
    }

    /// The slice of `self` where coordinate `i` equals `e` for every
    /// `(i, e)` in `fixed`, indexed by the remaining coordinates. Slicing
    /// is pushed through exact parts, sums, products and embeddings so that
    /// empty slices are recognized.
    pub fn slice(&self, fixed: Vec<(usize, u32)>) -> Ps {
        let free: Vec<usize> = (0..self.nvars()).filter(|i| fixed.iter().all(|(j, _)| j != i)).collect();
        let fixed_deg: usize = fixed.iter().map(|(_, e)| *e as usize).sum();
        let n = free.len();
        if fixed.is_empty() {
            return self.clone();
        }
        if self.is_known_zero() || self.max_deg().is_some_and(|m| m < fixed_deg) {
            return Ps::zero(n);
        }
        let keep = |k: &Idx| fixed.iter().all(|&(i, e)| k[i] == e);
        let project = |k: &Idx| free.iter().map(|&i| k[i]).collect::<Idx>();
        if let Some(m) = self.max_deg() {
            let entries: Vec<(Idx, Q)> = (fixed_deg..=m)
                .flat_map(|d| self.comp(d).iter().filter(|(k, _)| keep(k)).map(|(k, v)| (project(k), v.clone())).collect::<Vec<_>>())
                .collect();
            return Ps::poly(n, entries);
        }
        match &self.0.kind {
            Kind::Lin(parts) => {
                return Ps::lin(n, parts.iter().map(|(c, p)| (c.clone(), p.slice(fixed.clone()))).collect());
            }
            Kind::Mul(a, b) => {
                let mut parts = Vec::new();
                for split in vectors_below(&fixed.iter().map(|(_, e)| *e).collect::<Vec<_>>()) {
                    let fa: Vec<(usize, u32)> = fixed.iter().zip(&split).map(|(&(i, _), &e)| (i, e)).collect();
                    let fb: Vec<(usize, u32)> = fixed.iter().zip(&split).map(|(&(i, e), &s)| (i, e - s)).collect();
                    let (pa, pb) = (a.slice(fa), b.slice(fb));
                    if !pa.is_known_zero() && !pb.is_known_zero() {
                        parts.push((Q::one(), pa.mul(&pb)));
                    }
                }
                return Ps::lin(n, parts);
            }
            Kind::Embed { src, map, shift, .. } if is_injective(map) => {
                let mut src_fixed = Vec::new();
                for &(j, e) in &fixed {
                    if e < shift[j] {
                        return Ps::zero(n);
                    }
                    match map.iter().position(|&t| t == j) {
                        Some(i) => src_fixed.push((i, e - shift[j])),
                        None if e == shift[j] => {}
                        None => return Ps::zero(n),
                    }
                }
                let inner = src.slice(src_fixed.clone());
                let src_free: Vec<usize> = (0..src.nvars()).filter(|i| src_fixed.iter().all(|(j, _)| j != i)).collect();
                let new_map: Vec<usize> = src_free.iter().map(|&i| free.iter().position(|&f| f == map[i]).unwrap()).collect();
                return inner.embed(n, new_map, project(shift));
            }
            _ => {}
        }
        Ps::node(n, None, Kind::Slice { src: self.clone(), free, fixed, fixed_deg })
    }

    /// Multiply entry `k` by `k[i]` (the Euler operator zᵢ∂/∂zᵢ).
    pub fn euler(&self, i: usize) -> Ps {
        self.map(Rc::new(move |k, c| if k[i] == 0 { None } else { Some(c * Q::from_integer(k[i].into())) }))
    }

    /// Drop the constant term.
    pub fn without_constant(&self) -> Ps {
        self.map(Rc::new(|k, c| if deg(k) == 0 { None } else { Some(c.clone()) }))
    }

    /// `Σ_j coeff(j)·∏ argsᵢ^{jᵢ}`; every argument must have zero constant term.
    pub fn compose(nvars: usize, coeff: CoeffFn, args: Vec<Ps>) -> Ps {
        if args.iter().all(|a| a.is_known_zero()) {
            return Ps::constant(nvars, coeff(&vec![0; args.len()]));
        }
        Ps::node(nvars, None, Kind::Compose { coeff, args, pows: RefCell::new(HashMap::new()) })
    }

    pub fn rebase(&self, plan: Rc<RebasePlan>) -> Ps {
        let n = plan.nvars;
        if self.is_known_zero() {
            return Ps::zero(n);
        }
        Ps::node(n, self.max_deg(), Kind::Rebase { src: self.clone(), plan })
    }

    /// Components defined by `f(d, lower)`, where `lower(j)` (j < d) reads
    /// already-computed components of the result itself.
    pub fn rec(nvars: usize, max_deg: Option<usize>, f: RecFn) -> Ps {
        Ps::node(nvars, max_deg, Kind::Rec(f))
    }

    /// Index vectors `v` such that every entry of degree > `d` is ≥ some `v`
    /// componentwise; `None` when no better cover than "all of degree d+1"
    /// is known.
    pub fn tail(&self, d: usize) -> Option<Vec<Idx>> {
        const CAP: usize = 64;
        if self.0.max_deg.is_some_and(|m| d >= m) {
            return Some(Vec::new());
        }
        let out = match &self.0.kind {
            Kind::Lin(parts) => {
                let mut vs: Vec<Idx> = Vec::new();
                for (_, p) in parts {
                    for v in p.tail(d)? {
                        if !vs.contains(&v) {
                            vs.push(v);
                        }
                    }
                }
                vs
            }
            Kind::Map { src, .. } => src.tail(d)?,
            // every entry of positive degree dominates an argument entry a
            Kind::Compose { args, .. } => {
                let mut floor: Vec<Idx> = Vec::new();
                for a in args {
                    for v in a.tail_or_enumerate(0, CAP)? {
                        if !floor.contains(&v) {
                            floor.push(v);
                        }
                    }
                }
                let mut vs: Vec<Idx> = Vec::new();
                for a in floor {
                    let k = (d + 1).saturating_sub(deg(&a));
                    if k > 0 && !binom_le(self.nvars() + k - 1, k, CAP) {
                        return None;
                    }
                    for w in vectors_of_degree(self.nvars(), k) {
                        let v: Idx = a.iter().zip(&w).map(|(x, y)| x + y).collect();
                        if !vs.contains(&v) {
                            vs.push(v);
                        }
                    }
                    if vs.len() > CAP {
                        return None;
                    }
                }
                vs
            }
            Kind::Slice { src, free, fixed, fixed_deg } => src
                .tail_or_enumerate(d + fixed_deg, CAP)?
                .into_iter()
                .filter(|c| fixed.iter().all(|&(i, e)| c[i] <= e))
                .map(|c| free.iter().map(|&i| c[i]).collect::<Idx>())
                .fold(Vec::new(), |mut vs, v| {
                    if !vs.contains(&v) {
                        vs.push(v);
                    }
                    vs
                }),
            // deg(u + v) > d forces deg u > d₁ or deg v > d − d₁
            Kind::Mul(a, b) => {
                let d1 = match (a.0.max_deg, b.0.max_deg) {
                    (Some(m), _) => m.min(d),
                    (None, Some(m)) => d - m.min(d),
                    (None, None) => return None,
                };
                let mut vs = a.tail_or_enumerate(d1, CAP)?;
                for v in b.tail_or_enumerate(d - d1, CAP)? {
                    if !vs.contains(&v) {
                        vs.push(v);
                    }
                }
                vs
            }
            Kind::Embed { src, map, shift, shift_deg } => {
                if d < *shift_deg {
                    return Some(vec![shift.clone()]);
                }
                let inner = d - shift_deg;
                let vs = match src.tail(inner) {
                    Some(vs) => vs,
                    None if binom_le(src.nvars() + inner, inner + 1, CAP) => vectors_of_degree(src.nvars(), inner + 1),
                    None => return None,
                };
                vs.into_iter()
                    .map(|k| {
                        let mut t = shift.clone();
                        for (j, &e) in k.iter().enumerate() {
                            t[map[j]] += e;
                        }
                        t
                    })
                    .collect()
            }
            _ => return None,
        };
        (out.len() <= CAP).then_some(out)
    }

    /// An upper bound on coordinate `i` over the support, when known.
    pub fn coord_max(&self, i: usize) -> Option<u32> {
        if self.is_known_zero() {
            return Some(0);
        }
        match &self.0.kind {
            Kind::Poly(cs) => cs.iter().flat_map(|c| c.keys().map(|k| k[i])).max().or(Some(0)),
            Kind::Lin(parts) => parts.iter().map(|(_, p)| p.coord_max(i)).try_fold(0, |m, c| c.map(|c| m.max(c))),
            Kind::Mul(a, b) => Some(a.coord_max(i)? + b.coord_max(i)?),
            Kind::Embed { src, map, shift, .. } => {
                let mut m = shift[i];
                for (j, _) in map.iter().enumerate().filter(|(_, &t)| t == i) {
                    m += src.coord_max(j)?;
                }
                Some(m)
            }
            Kind::Map { src, .. } => src.coord_max(i),
            Kind::Slice { src, free, .. } => src.coord_max(free[i]),
            _ => self.max_deg().map(|d| d as u32),
        }
    }

    fn tail_or_enumerate(&self, d: usize, cap: usize) -> Option<Vec<Idx>> {
        self.tail(d).or_else(|| binom_le(self.nvars() + d, d + 1, cap).then(|| vectors_of_degree(self.nvars(), d + 1)))
    }

    pub fn comp(&self, d: usize) -> Rc<Comp> {
        if self.0.max_deg.is_some_and(|m| d > m) {
            return Rc::new(Comp::new());
        }
        loop {
            {
                let memo = self.0.memo.borrow();
                if memo.len() > d {
                    return memo[d].clone();
                }
            }
            let next = self.0.memo.borrow().len();
            let c = Rc::new(self.compute(next));
            self.0.memo.borrow_mut().push(c);
        }
    }

    fn compute(&self, d: usize) -> Comp {
        let n = self.0.nvars;
        let mut out = Comp::new();
        match &self.0.kind {
            Kind::Poly(cs) => {
                if let Some(c) = cs.get(d) {
                    return (**c).clone();
                }
            }
            Kind::Lin(parts) => {
                for (s, p) in parts {
                    for (k, v) in p.comp(d).iter() {
                        add_to(&mut out, k.clone(), s * v);
                    }
                }
            }
            Kind::Mul(a, b) => {
                for i in 0..=d {
                    let ca = a.comp(i);
                    if ca.is_empty() {
                        continue;
                    }
                    let cb = b.comp(d - i);
                    for (ka, va) in ca.iter() {
                        for (kb, vb) in cb.iter() {
                            let k: Idx = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
                            add_to(&mut out, k, va * vb);
                        }
                    }
                }
            }
            Kind::Embed { src, map, shift, shift_deg } => {
                if d >= *shift_deg {
                    for (k, v) in src.comp(d - shift_deg).iter() {
                        let mut t = shift.clone();
                        for (j, &e) in k.iter().enumerate() {
                            t[map[j]] += e;
                        }
                        add_to(&mut out, t, v.clone());
                    }
                }
            }
            Kind::Map { src, f } => {
                for (k, v) in src.comp(d).iter() {
                    if let Some(w) = f(k, v) {
                        add_to(&mut out, k.clone(), w);
                    }
                }
            }
            Kind::Slice { src, free, fixed, fixed_deg } => {
                for (k, v) in src.comp(d + fixed_deg).iter() {
                    if fixed.iter().all(|&(i, e)| k[i] == e) {
                        add_to(&mut out, free.iter().map(|&i| k[i]).collect(), v.clone());
                    }
                }
            }
            Kind::Compose { coeff, args, pows } => {
                for t in 0..=d {
                    for j in vectors_of_degree(args.len(), t) {
                        let c = coeff(&j);
                        if c.is_zero() {
                            continue;
                        }
                        let p = power(&j, args, pows, n);
                        for (k, v) in p.comp(d).iter() {
                            add_to(&mut out, k.clone(), &c * v);
                        }
                    }
                }
            }
            Kind::Rebase { src, plan } => {
                for (j, (kappa, gen)) in plan.kappas.iter().enumerate() {
                    let g = gen.is_some() as usize;
                    let kd = deg(kappa);
                    if d + kd < g {
                        continue;
                    }
                    for (k, v) in src.comp(d + kd - g).iter() {
                        let first = plan.kappas.iter().position(|(kp, _)| kp.iter().zip(k).all(|(a, b)| a <= b));
                        if first != Some(j) {
                            continue;
                        }
                        let mut t = vec![0; plan.nvars];
                        for (i, (&a, &b)) in k.iter().zip(kappa).enumerate() {
                            t[i] = a - b;
                        }
                        if let Some(gi) = gen {
                            t[*gi] += 1;
                        }
                        add_to(&mut out, t, v.clone());
                    }
                }
            }
            Kind::Rec(f) => {
                let me = self.clone();
                let lower = move |j: usize| {
                    assert!(j < d, "recursive component reads ahead");
                    me.comp(j)
                };
                out = f(d, &lower);
            }
        }
        out
    }
}

/// C(n, k) ≤ cap
fn binom_le(n: usize, k: usize, cap: usize) -> bool {
    if k > n {
        return true;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap as u128 {
            return false;
        }
    }
    true
}

fn power(j: &[u32], args: &[Ps], pows: &RefCell<HashMap<Idx, Ps>>, n: usize) -> Ps {
    if let Some(p) = pows.borrow().get(j) {
        return p.clone();
    }
    let p = match j.iter().rposition(|&e| e > 0) {
        None => Ps::one(n),
        Some(i) => {
            let mut prev = j.to_vec();
            prev[i] -= 1;
            power(&prev, args, pows, n).mul(&args[i])
        }
    };
    pows.borrow_mut().insert(j.to_vec(), p.clone());
    p
}
