//! Constructible compact open subsets of the boundary and the category of
//! tuples of compact open bisections built from them.
//!
//! Boundary points of a product of graphs without sources are k-tuples of
//! infinite paths, so every set handled here is decided by finite prefixes.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::category::{
    common_prefix_len, compose_unchecked, degree_join, degree_le, degrees_up_to, join, left_divides,
    left_quotient_unchecked, Category, CategoryError, Degree, Morphism, ObjectId,
};
use crate::garside::GarsideFamily;
use crate::zappa_szep::{GroupWord, ZsCategory};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BisectionError {
    #[error("empty set: {0}")]
    Empty(String),
    #[error("cannot compose tuples: {0}")]
    Composition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("norm bound violated: {0}")]
    NormBound(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
}

/// `X(a; 𝔢)`: boundary points extending `a` and none of `𝔢`.
///
/// Exclusions are kept canonical: the minimal prefixes whose cylinders lie
/// in the excluded region.  The empty set is stored with `𝔢 = {a}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicOpen {
    root: Morphism,
    exclusions: Vec<Morphism>,
}

/// Whether every boundary point below `t` extends some element of `excl`.
pub fn covered(cat: &Category, t: &Morphism, excl: &[Morphism]) -> bool {
    let rel: Vec<Morphism> = excl.iter().filter_map(|e| join(t, e)).collect();
    if rel.is_empty() {
        return false;
    }
    if rel.iter().any(|e| e == t) {
        return true;
    }
    let e = &rel[0];
    let j = (0..cat.rank()).find(|&j| e.path(j).len() > t.path(j).len()).expect("strictly longer");
    let g = cat.factor(j);
    g.out[t.source()[j] as usize].iter().all(|&x| {
        let edge = cat.edge_at(t.source(), j, x).expect("edge from source");
        covered(cat, &compose_unchecked(t, &edge), &rel)
    })
}

/// Disjoint full cylinders whose union is `X(t; excl)`.
pub fn cylinder_cover(cat: &Category, t: &Morphism, excl: &[Morphism]) -> Vec<Morphism> {
    let rel: Vec<Morphism> = excl.iter().filter_map(|e| join(t, e)).collect();
    if rel.is_empty() {
        return vec![t.clone()];
    }
    if rel.iter().any(|e| e == t) {
        return Vec::new();
    }
    let e = &rel[0];
    let j = (0..cat.rank()).find(|&j| e.path(j).len() > t.path(j).len()).expect("strictly longer");
    let mut out = Vec::new();
    for &x in &cat.factor(j).out[t.source()[j] as usize] {
        let edge = cat.edge_at(t.source(), j, x).expect("edge from source");
        out.extend(cylinder_cover(cat, &compose_unchecked(t, &edge), &rel));
    }
    out
}

fn parent_along(cat: &Category, t: &Morphism, j: usize) -> Morphism {
    let mut d = t.degree();
    d[j] -= 1;
    cat.split_at_degree(t, &d).0
}

impl BasicOpen {
    pub fn new(cat: &Category, root: Morphism, excl: impl IntoIterator<Item = Morphism>) -> BasicOpen {
        let rel: Vec<Morphism> = excl.into_iter().filter_map(|e| join(&root, &e)).collect();
        if rel.is_empty() {
            return BasicOpen { root, exclusions: Vec::new() };
        }
        if rel.iter().any(|e| *e == root) {
            return BasicOpen { exclusions: vec![root.clone()], root };
        }
        let top = rel.iter().fold(root.degree(), |acc, e| degree_join(&acc, &e.degree()));
        let base = root.degree();
        let mut memo: HashMap<Morphism, bool> = HashMap::new();
        let mut is_covered = |t: &Morphism| -> bool {
            if let Some(&c) = memo.get(t) {
                return c;
            }
            let c = covered(cat, t, &rel);
            memo.insert(t.clone(), c);
            c
        };
        if is_covered(&root) {
            return BasicOpen { exclusions: vec![root.clone()], root };
        }
        let span: Degree = top.iter().zip(&base).map(|(x, y)| x - y).collect();
        let mut out = BTreeSet::new();
        for d in degrees_up_to(&span) {
            let d: Degree = d.iter().zip(&base).map(|(x, y)| x + y).collect();
            for t in cat.extensions_of_degree(&root, &d) {
                if !rel.iter().any(|e| join(&t, e).is_some()) || !is_covered(&t) {
                    continue;
                }
                let minimal = (0..cat.rank())
                    .filter(|&j| t.path(j).len() > root.path(j).len())
                    .all(|j| !is_covered(&parent_along(cat, &t, j)));
                if minimal {
                    out.insert(t);
                }
            }
        }
        BasicOpen { root, exclusions: out.into_iter().collect() }
    }

    pub fn full(root: Morphism) -> BasicOpen {
        BasicOpen { root, exclusions: Vec::new() }
    }

    /// `X(v; 𝔢)` with `𝔢` given relative to the vertex `v`.
    pub fn at_vertex(cat: &Category, v: &ObjectId, excl: impl IntoIterator<Item = Morphism>) -> BasicOpen {
        BasicOpen::new(cat, cat.identity(v), excl)
    }

    pub fn root(&self) -> &Morphism {
        &self.root
    }

    pub fn exclusions(&self) -> &[Morphism] {
        &self.exclusions
    }

    pub fn is_empty(&self) -> bool {
        self.exclusions.len() == 1 && self.exclusions[0] == self.root
    }

    /// Exclusions as morphisms starting at `𝔡(root)`.
    pub fn relative_exclusions(&self) -> Vec<Morphism> {
        self.exclusions.iter().map(|e| left_quotient_unchecked(&self.root, e)).collect()
    }

    /// Degree deciding membership: the join of all stored degrees.
    pub fn decisive_degree(&self) -> Degree {
        self.exclusions.iter().fold(self.root.degree(), |acc, e| degree_join(&acc, &e.degree()))
    }

    /// Whether the cylinder of `c` lies inside; `c` must have degree at
    /// least [`BasicOpen::decisive_degree`].
    pub fn contains_cylinder(&self, c: &Morphism) -> bool {
        left_divides(&self.root, c) && !self.exclusions.iter().any(|e| left_divides(e, c))
    }

    pub fn intersect(&self, cat: &Category, other: &BasicOpen) -> BasicOpen {
        match join(&self.root, &other.root) {
            Some(c) => BasicOpen::new(cat, c, self.exclusions.iter().chain(&other.exclusions).cloned()),
            None => BasicOpen { exclusions: vec![self.root.clone()], root: self.root.clone() },
        }
    }

    pub fn disjoint(&self, cat: &Category, other: &BasicOpen) -> bool {
        self.intersect(cat, other).is_empty()
    }

    /// `self ∖ other` as disjoint basic opens.
    pub fn subtract(&self, cat: &Category, other: &BasicOpen) -> Vec<BasicOpen> {
        if self.is_empty() {
            return Vec::new();
        }
        let Some(c) = join(&self.root, &other.root) else { return vec![self.clone()] };
        let mut out = Vec::new();
        let outside = BasicOpen::new(cat, self.root.clone(), self.exclusions.iter().cloned().chain([c.clone()]));
        if !outside.is_empty() {
            out.push(outside);
        }
        let mut earlier: Vec<Morphism> = Vec::new();
        for f in &other.exclusions {
            if let Some(cf) = join(&c, f) {
                let piece =
                    BasicOpen::new(cat, cf.clone(), self.exclusions.iter().cloned().chain(earlier.iter().cloned()));
                if !piece.is_empty() {
                    out.push(piece);
                }
                earlier.push(cf);
            }
        }
        out
    }

    pub fn is_subset(&self, cat: &Category, other: &BasicOpen) -> bool {
        self.subtract(cat, other).is_empty()
    }

    pub fn same_set(&self, cat: &Category, other: &BasicOpen) -> bool {
        self.is_subset(cat, other) && other.is_subset(cat, self)
    }

    pub fn format(&self, cat: &Category) -> String {
        let root =
            if self.root.is_identity() { cat.object_name(self.root.target()) } else { cat.format(&self.root) };
        if self.exclusions.is_empty() {
            return format!("X({root})");
        }
        let ex: Vec<String> = self.exclusions.iter().map(|e| cat.format(e)).collect();
        format!("X({root}; {{{}}})", ex.join(", "))
    }
}

/// A finite union of pairwise disjoint basic opens, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompactOpen {
    pub parts: Vec<BasicOpen>,
}

impl CompactOpen {
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Degree-`d` cylinders from `v` contained in the union.
    pub fn cylinders(&self, cat: &Category, v: &ObjectId, d: &[u32]) -> Vec<Morphism> {
        cat.morphisms_of_degree(v, d)
            .unwrap_or_default()
            .into_iter()
            .filter(|c| self.parts.iter().any(|p| p.contains_cylinder(c)))
            .collect()
    }
}

pub fn decompose_disjoint(cat: &Category, sets: &[BasicOpen]) -> CompactOpen {
    let mut parts: Vec<BasicOpen> = Vec::new();
    for s in sets {
        let mut pieces = vec![s.clone()];
        for p in &parts {
            pieces = pieces.iter().flat_map(|x| x.subtract(cat, p)).collect();
        }
        parts.extend(pieces.into_iter().filter(|x| !x.is_empty()));
    }
    parts.sort();
    CompactOpen { parts }
}

/// Splits `X(a; 𝔢)` into parts `X(b; b𝔣)` with every `𝔣` inside `𝔡(b)𝔖`.
pub fn push_to_fs_form(cat: &Category, u: &BasicOpen) -> CompactOpen {
    fn go(cat: &Category, u: &BasicOpen, out: &mut Vec<BasicOpen>) {
        if u.is_empty() {
            return;
        }
        let ones = vec![1; cat.rank()];
        let deep: Vec<Morphism> =
            u.relative_exclusions().into_iter().filter(|f| !degree_le(&f.degree(), &ones)).collect();
        if deep.is_empty() {
            out.push(u.clone());
            return;
        }
        let heads: BTreeSet<Morphism> =
            deep.iter().map(|f| compose_unchecked(&u.root, &cat.prefix_min(f, &ones))).collect();
        let rest = BasicOpen::new(cat, u.root.clone(), u.exclusions.iter().cloned().chain(heads.iter().cloned()));
        go(cat, &rest, out);
        let mut earlier: Vec<Morphism> = Vec::new();
        for h in &heads {
            let piece = BasicOpen::new(cat, h.clone(), u.exclusions.iter().cloned().chain(earlier.iter().cloned()));
            go(cat, &piece, out);
            earlier.push(h.clone());
        }
    }
    let mut out = Vec::new();
    go(cat, u, &mut out);
    out.sort();
    CompactOpen { parts: out }
}

/// Data for `γ(𝔢, 𝔰)`: a vertex, exclusions at it, and an mcm-closed family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSpec {
    pub vertex: ObjectId,
    pub exclusions: Vec<Morphism>,
    pub family: Vec<Morphism>,
}

impl GammaSpec {
    pub fn new(vertex: ObjectId, exclusions: Vec<Morphism>, mut family: Vec<Morphism>) -> GammaSpec {
        family.sort();
        family.dedup();
        GammaSpec { vertex, exclusions, family }
    }

    fn check(&self) -> Result<(), BisectionError> {
        for s in &self.family {
            if s.target() != &self.vertex || s.is_identity() {
                return Err(BisectionError::Domain("family elements must be non-identities at the vertex".into()));
            }
        }
        for s in &self.family {
            for t in &self.family {
                if let Some(m) = join(s, t) {
                    if self.family.binary_search(&m).is_err() {
                        return Err(BisectionError::Domain("family is not closed under mcms".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The elements of `v𝔖_L`: morphisms at `v` of norm exactly `L`.
pub fn s_exactly(cat: &Category, v: &ObjectId, l: u32) -> Vec<Morphism> {
    cat.morphisms_up_to_degree(v, &vec![l; cat.rank()]).into_iter().filter(|m| m.max_degree() == l).collect()
}

fn minimal_elements(mut cands: Vec<Morphism>) -> Vec<Morphism> {
    cands.sort();
    cands.dedup();
    let keep: Vec<Morphism> = cands
        .iter()
        .filter(|f| !cands.iter().any(|g| g != *f && left_divides(g, f)))
        .cloned()
        .collect();
    keep
}

/// `𝔣_s`: minimal `f` with `s f ∈ 𝔰` or `s f ∈ mcm(s, 𝔢)`.  When `s`
/// already extends an exclusion the result is `{𝔡(s)}`, which makes the
/// piece `X(𝔡(s); 𝔣_s)` empty.
pub fn f_s(cat: &Category, spec: &GammaSpec, s: &Morphism) -> Result<Vec<Morphism>, BisectionError> {
    let is_vertex = s.is_identity() && s.target() == &spec.vertex;
    let below_family = s.target() == &spec.vertex && spec.family.iter().any(|t| left_divides(s, t));
    if !is_vertex && !below_family {
        return Err(BisectionError::Domain(format!("{} is not the vertex or below the family", cat.format(s))));
    }
    let mut cands = Vec::new();
    for t in &spec.family {
        if left_divides(s, t) && t != s {
            cands.push(left_quotient_unchecked(s, t));
        }
    }
    for e in &spec.exclusions {
        if let Some(m) = join(s, e) {
            cands.push(left_quotient_unchecked(s, &m));
        }
    }
    Ok(minimal_elements(cands))
}

/// `𝔣_s` by the degree formula, valid when the family is all morphisms at
/// the vertex with degree in `degrees`.
pub fn f_s_saturated(
    cat: &Category,
    degrees: &BTreeSet<Degree>,
    exclusions: &[Morphism],
    s: &Morphism,
) -> Vec<Morphism> {
    let ds = s.degree();
    let steps: Vec<Degree> = degrees
        .iter()
        .filter(|d| *d != &ds && degree_le(&ds, d))
        .map(|d| d.iter().zip(&ds).map(|(x, y)| x - y).collect())
        .collect();
    let min_steps: Vec<&Degree> =
        steps.iter().filter(|t| !steps.iter().any(|u| u != *t && degree_le(u, t))).collect();
    let mut cands = Vec::new();
    for t in min_steps {
        cands.extend(cat.morphisms_of_degree(s.source(), t).unwrap_or_default());
    }
    for e in exclusions {
        if let Some(m) = join(s, e) {
            cands.push(left_quotient_unchecked(s, &m));
        }
    }
    minimal_elements(cands)
}

/// One entry of a tuple morphism: the bisection `arrow·twist` on `domain`,
/// landing in target entry `base`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Piece {
    pub base: usize,
    pub arrow: Morphism,
    pub domain: BasicOpen,
    pub twist: GroupWord,
}

/// A morphism of tuples of compact open sets; `source()` lists the piece
/// domains in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleMorphism {
    pub target: Vec<BasicOpen>,
    pub pieces: Vec<Piece>,
}

impl TupleMorphism {
    pub fn identity(cat: &Category, x: &[BasicOpen]) -> TupleMorphism {
        TupleMorphism {
            target: x.to_vec(),
            pieces: x
                .iter()
                .enumerate()
                .map(|(j, u)| Piece {
                    base: j,
                    arrow: cat.identity(u.root().source()),
                    domain: u.clone(),
                    twist: GroupWord::identity(),
                })
                .collect(),
        }
    }

    pub fn source(&self) -> Vec<BasicOpen> {
        self.pieces.iter().map(|p| p.domain.clone()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.pieces.len() == self.target.len()
            && self.pieces.iter().enumerate().all(|(i, p)| {
                p.base == i && p.arrow.is_identity() && p.twist.is_empty() && p.domain == self.target[i]
            })
    }

    /// Bijective on entries with identity arrows.
    pub fn is_unit(&self) -> bool {
        let mut seen = vec![false; self.target.len()];
        self.pieces.len() == self.target.len()
            && self.pieces.iter().all(|p| {
                p.arrow.is_identity() && !std::mem::replace(&mut seen[p.base], true)
            })
    }
}

pub fn range(zc: &ZsCategory, p: &Piece) -> BasicOpen {
    let cat = zc.ground();
    let excl = p.domain.relative_exclusions().into_iter().map(|f| compose_unchecked(&p.arrow, &zc.act(&p.twist, &f)));
    BasicOpen::new(cat, p.arrow.clone(), excl.collect::<Vec<_>>())
}

/// `γ(𝔢, 𝔰)`; pieces with empty domain are dropped.
pub fn gamma(cat: &Category, spec: &GammaSpec) -> Result<TupleMorphism, BisectionError> {
    spec.check()?;
    let target = BasicOpen::at_vertex(cat, &spec.vertex, spec.exclusions.clone());
    if target.is_empty() {
        return Err(BisectionError::Empty(format!("{} is empty", target.format(cat))));
    }
    let mut pieces = Vec::new();
    let v = cat.identity(&spec.vertex);
    for s in std::iter::once(&v).chain(&spec.family) {
        let f = f_s(cat, spec, s)?;
        let domain = BasicOpen::at_vertex(cat, s.source(), f);
        if !domain.is_empty() {
            pieces.push(Piece { base: 0, arrow: s.clone(), domain, twist: GroupWord::identity() });
        }
    }
    Ok(TupleMorphism { target: vec![target], pieces })
}

/// `γ(𝔢, 𝔖_L)` at `v`.
pub fn gamma_l(cat: &Category, v: &ObjectId, exclusions: &[Morphism], l: u32) -> Result<TupleMorphism, BisectionError> {
    gamma(cat, &GammaSpec::new(v.clone(), exclusions.to_vec(), s_exactly(cat, v, l)))
}

pub fn amalg(a: &TupleMorphism, b: &TupleMorphism) -> TupleMorphism {
    let shift = a.target.len();
    let mut pieces = a.pieces.clone();
    pieces.extend(b.pieces.iter().map(|p| Piece { base: p.base + shift, ..p.clone() }));
    let mut target = a.target.clone();
    target.extend(b.target.iter().cloned());
    TupleMorphism { target, pieces }
}

fn entry_vertex(cat: &Category, u: &BasicOpen) -> Result<ObjectId, BisectionError> {
    if !u.root().is_identity() {
        return Err(BisectionError::Domain(format!("{} is not of the form X(v; 𝔢)", u.format(cat))));
    }
    Ok(u.root().target().clone())
}

/// `Δ(x) = ∐ᵢ γ(𝔢ᵢ, 𝔖)`.
pub fn delta(cat: &Category, x: &[BasicOpen]) -> Result<TupleMorphism, BisectionError> {
    let mut out = TupleMorphism { target: Vec::new(), pieces: Vec::new() };
    for u in x {
        let v = entry_vertex(cat, u)?;
        let fam = GarsideFamily::standard().elements_at(cat, &v);
        out = amalg(&out, &gamma(cat, &GammaSpec::new(v, u.exclusions().to_vec(), fam))?);
    }
    Ok(out)
}

/// The category product `b a`, defined when `source(b) = target(a)`.
pub fn compose_tuple(zc: &ZsCategory, b: &TupleMorphism, a: &TupleMorphism) -> Result<TupleMorphism, BisectionError> {
    if b.pieces.len() != a.target.len() || b.pieces.iter().zip(&a.target).any(|(p, u)| p.domain != *u) {
        return Err(BisectionError::Composition("source of the left factor differs from target of the right".into()));
    }
    let pieces = a
        .pieces
        .iter()
        .map(|p| {
            let q = &b.pieces[p.base];
            let (moved, phi) = zc.act_and_cocycle(&q.twist, &p.arrow);
            Piece {
                base: q.base,
                arrow: compose_unchecked(&q.arrow, &moved),
                domain: p.domain.clone(),
                twist: zc.simplify(&phi.then(&p.twist)),
            }
        })
        .collect();
    Ok(TupleMorphism { target: b.target.clone(), pieces })
}

/// The piece `(g⁻¹.t, φ(g⁻¹, t))` on `domain`, which composed after a piece
/// with twist `g` yields the arrow `t` with trivial twist.
fn untwisted_quotient(zc: &ZsCategory, g: &GroupWord, t: &Morphism, domain: BasicOpen, base: usize) -> Piece {
    let (arrow, twist) = zc.act_and_cocycle(&g.inverse(), t);
    Piece { base, arrow, domain, twist }
}

/// `(a', b')` with `a a' = b b' = lcm(a, b)`.
pub fn lcm_tuple(
    zc: &ZsCategory,
    a: &TupleMorphism,
    b: &TupleMorphism,
) -> Result<(TupleMorphism, TupleMorphism), BisectionError> {
    if a.target != b.target {
        return Err(BisectionError::Domain("lcm of tuples with different targets".into()));
    }
    let cat = zc.ground();
    let ra: Vec<BasicOpen> = a.pieces.iter().map(|p| range(zc, p)).collect();
    let rb: Vec<BasicOpen> = b.pieces.iter().map(|p| range(zc, p)).collect();
    let mut cells = Vec::new();
    for (i, p) in a.pieces.iter().enumerate() {
        for (j, q) in b.pieces.iter().enumerate() {
            if p.base != q.base {
                continue;
            }
            let r = ra[i].intersect(cat, &rb[j]);
            if r.is_empty() {
                continue;
            }
            let c = r.root().clone();
            let w = BasicOpen::at_vertex(cat, c.source(), r.relative_exclusions());
            cells.push((p.base, c, w, i, j));
        }
    }
    cells.sort();
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    for (_, c, w, i, j) in cells {
        let p = &a.pieces[i];
        let q = &b.pieces[j];
        pa.push(untwisted_quotient(zc, &p.twist, &left_quotient_unchecked(&p.arrow, &c), w.clone(), i));
        pb.push(untwisted_quotient(zc, &q.twist, &left_quotient_unchecked(&q.arrow, &c), w, j));
    }
    Ok((
        TupleMorphism { target: a.source(), pieces: pa },
        TupleMorphism { target: b.source(), pieces: pb },
    ))
}

/// Ranges with base `j` are pairwise disjoint and cover entry `j`.
pub fn check_partition(zc: &ZsCategory, m: &TupleMorphism) -> Result<(), String> {
    let cat = zc.ground();
    let ranges: Vec<BasicOpen> = m.pieces.iter().map(|p| range(zc, p)).collect();
    for (j, u) in m.target.iter().enumerate() {
        let idx: Vec<usize> = (0..m.pieces.len()).filter(|&i| m.pieces[i].base == j).collect();
        for (x, &i) in idx.iter().enumerate() {
            if ranges[i].is_empty() {
                return Err(format!("piece {i} has empty range"));
            }
            if !ranges[i].is_subset(cat, u) {
                return Err(format!("range of piece {i} leaves entry {j}"));
            }
            for &k in &idx[x + 1..] {
                if !ranges[i].disjoint(cat, &ranges[k]) {
                    return Err(format!("ranges of pieces {i} and {k} overlap"));
                }
            }
        }
        let mut rest = vec![u.clone()];
        for &i in &idx {
            rest = rest.iter().flat_map(|x| x.subtract(cat, &ranges[i])).collect();
        }
        if !rest.is_empty() {
            return Err(format!("entry {j} is not covered: {} remains", rest[0].format(cat)));
        }
    }
    Ok(())
}

/// The same check by counting degree-`d` cylinders, independent of the set
/// algebra; `d` must dominate every degree in sight.
pub fn check_partition_sampled(zc: &ZsCategory, m: &TupleMorphism, d: &[u32]) -> Result<(), String> {
    let cat = zc.ground();
    let ranges: Vec<BasicOpen> = m.pieces.iter().map(|p| range(zc, p)).collect();
    for (j, u) in m.target.iter().enumerate() {
        for c in cat.morphisms_of_degree(u.root().target(), d).map_err(|e| e.to_string())? {
            let hits = (0..m.pieces.len()).filter(|&i| m.pieces[i].base == j && ranges[i].contains_cylinder(&c)).count();
            let want = usize::from(u.contains_cylinder(&c));
            if hits != want {
                return Err(format!("cylinder {} of entry {j} is hit {hits} times", cat.format(&c)));
            }
        }
    }
    Ok(())
}

/// Membership in 𝐒: arrows in 𝔖^♯ and `‖a f‖ ≤ 1` for each exclusion `f`.
pub fn in_s(m: &TupleMorphism) -> bool {
    m.pieces.iter().all(|p| {
        let d = p.arrow.degree();
        d.iter().all(|&x| x <= 1)
            && p.domain.relative_exclusions().iter().all(|f| f.degree().iter().zip(&d).all(|(x, y)| x + y <= 1))
    })
}

/// `(h, r)` with `h r = a` and `h` the largest common left divisor of `a`
/// and `Δ(target(a))`.  Pieces of `h` are sorted, so `h` is the canonical
/// representative of its class under right multiplication by units.
pub fn delta_gcd(zc: &ZsCategory, a: &TupleMorphism) -> Result<(TupleMorphism, TupleMorphism), BisectionError> {
    let cat = zc.ground();
    let ones = vec![1; cat.rank()];
    let ranges: Vec<BasicOpen> = a.pieces.iter().map(|p| range(zc, p)).collect();
    let mut heads: Vec<(usize, Morphism, BasicOpen, Vec<usize>)> = Vec::new();
    for (j, u) in a.target.iter().enumerate() {
        let v = entry_vertex(cat, u)?;
        let atoms: Vec<BasicOpen> = cat
            .morphisms_of_degree(&v, &ones)?
            .into_iter()
            .map(|s| BasicOpen::new(cat, s, u.exclusions().to_vec()))
            .filter(|s| !s.is_empty())
            .collect();
        let idx: Vec<usize> = (0..a.pieces.len()).filter(|&i| a.pieces[i].base == j).collect();
        let n = idx.len();
        let mut parent: Vec<usize> = (0..n + atoms.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (x, &i) in idx.iter().enumerate() {
            for (y, s) in atoms.iter().enumerate() {
                if !ranges[i].disjoint(cat, s) {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, n + y));
                    parent[rx] = ry;
                }
            }
        }
        let mut comps: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for node in 0..n + atoms.len() {
            let r = find(&mut parent, node);
            let c = *slot.entry(r).or_insert_with(|| {
                comps.push((Vec::new(), Vec::new()));
                comps.len() - 1
            });
            if node < n {
                comps[c].0.push(idx[node]);
            } else {
                comps[c].1.push(node - n);
            }
        }
        for (members, comp_atoms) in comps {
            if members.is_empty() {
                return Err(BisectionError::Internal("an atom meets no piece".into()));
            }
            let mut arrows: Vec<&Morphism> = members.iter().map(|&i| &a.pieces[i].arrow).collect();
            arrows.extend(comp_atoms.iter().map(|&y| atoms[y].root()));
            let mut lcp = arrows[0].degree();
            for m in &arrows[1..] {
                let c = common_prefix_len(arrows[0], m);
                lcp = lcp.iter().zip(&c).map(|(x, y)| *x.min(y)).collect();
            }
            let h = cat.split_at_degree(arrows[0], &lcp).0;
            let inside: BTreeSet<&Morphism> = comp_atoms.iter().map(|&y| atoms[y].root()).collect();
            let rest: Degree = ones.iter().zip(h.degree()).map(|(x, y)| x - y).collect();
            let excl: Vec<Morphism> = cat
                .morphisms_of_degree(h.source(), &rest)?
                .into_iter()
                .filter(|t| !inside.contains(&compose_unchecked(&h, t)))
                .collect();
            let domain = BasicOpen::at_vertex(cat, h.source(), excl);
            heads.push((j, h, domain, members));
        }
    }
    heads.sort();
    let mut hp = Vec::new();
    let mut rp: Vec<Option<Piece>> = vec![None; a.pieces.len()];
    for (k, (j, h, domain, members)) in heads.into_iter().enumerate() {
        for i in members {
            let p = &a.pieces[i];
            rp[i] = Some(Piece {
                base: k,
                arrow: left_quotient_unchecked(&h, &p.arrow),
                domain: p.domain.clone(),
                twist: p.twist.clone(),
            });
        }
        hp.push(Piece { base: j, arrow: h, domain, twist: GroupWord::identity() });
    }
    let head = TupleMorphism { target: a.target.clone(), pieces: hp };
    let rest = TupleMorphism {
        target: head.source(),
        pieces: rp.into_iter().map(|p| p.expect("every piece lies in a component")).collect(),
    };
    Ok((head, rest))
}

/// The unit `u` with `s u = t` when `s =* t`.
pub fn star_map_tuple(zc: &ZsCategory, s: &TupleMorphism, t: &TupleMorphism) -> Option<TupleMorphism> {
    if s.target != t.target || s.pieces.len() != t.pieces.len() {
        return None;
    }
    let cat = zc.ground();
    let rs: Vec<BasicOpen> = s.pieces.iter().map(|p| range(zc, p)).collect();
    let mut pieces = Vec::new();
    let mut used = vec![false; s.pieces.len()];
    for q in &t.pieces {
        let rq = range(zc, q);
        let k = (0..s.pieces.len())
            .find(|&k| !used[k] && s.pieces[k].base == q.base && s.pieces[k].arrow == q.arrow && rs[k] == rq)?;
        used[k] = true;
        let w = zc.simplify(&s.pieces[k].twist.inverse().then(&q.twist));
        pieces.push(Piece { base: k, arrow: cat.identity(q.arrow.source()), domain: q.domain.clone(), twist: w });
    }
    Some(TupleMorphism { target: s.source(), pieces })
}

/// Whether `x ↦ g.x` and `x ↦ h.x` agree on `u`.
pub fn twists_agree_on(zc: &ZsCategory, g: &GroupWord, h: &GroupWord, u: &BasicOpen) -> bool {
    if g == h {
        return true;
    }
    let w = zc.simplify(&h.inverse().then(g));
    if zc.is_trivial(&w) {
        return true;
    }
    let cat = zc.ground();
    cylinder_cover(cat, u.root(), u.exclusions()).iter().all(|c| {
        let x = left_quotient_unchecked(u.root(), c);
        let (wx, phi) = zc.act_and_cocycle(&w, &x);
        wx == x && zc.is_trivial(&phi)
    })
}

/// Equality in the category of tuples: same objects, same base map, same
/// arrows, and twists that agree as germs on each domain.
pub fn tuples_equal(zc: &ZsCategory, a: &TupleMorphism, b: &TupleMorphism) -> bool {
    a.target == b.target
        && a.pieces.len() == b.pieces.len()
        && a.pieces.iter().zip(&b.pieces).all(|(p, q)| {
            p.base == q.base
                && p.arrow == q.arrow
                && p.domain == q.domain
                && twists_agree_on(zc, &p.twist, &q.twist, &p.domain)
        })
}

/// `b` with `a b = ∐ⱼ γ(𝔢ⱼ, 𝔖_L)`, built by the four normalisation steps:
/// raise every arrow to norm `L`, remove twists, widen each domain to its
/// canonical one, then reorder to match the target.
pub fn complete_to_gamma(zc: &ZsCategory, a: &TupleMorphism, l: u32) -> Result<TupleMorphism, BisectionError> {
    let cat = zc.ground();
    for p in &a.pieces {
        let d = p.arrow.degree();
        let ok = p.arrow.max_degree() <= l
            && p.domain.relative_exclusions().iter().all(|f| f.degree().iter().zip(&d).all(|(x, y)| x + y <= l));
        if !ok {
            return Err(BisectionError::NormBound(format!("piece {} exceeds norm {l}", cat.format(&p.arrow))));
        }
    }
    let mut prod = a.clone();
    let mut b = TupleMorphism::identity(cat, &a.source());
    let step = |prod: &mut TupleMorphism, b: &mut TupleMorphism, m: TupleMorphism| -> Result<(), BisectionError> {
        *prod = compose_tuple(zc, prod, &m)?;
        *b = compose_tuple(zc, b, &m)?;
        Ok(())
    };

    // Twists are units; cancel them first.
    if prod.pieces.iter().any(|p| !p.twist.is_empty()) {
        let pieces = prod
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let moved = p.domain.relative_exclusions().into_iter().map(|f| zc.act(&p.twist, &f)).collect::<Vec<_>>();
                Piece {
                    base: i,
                    arrow: cat.identity(p.arrow.source()),
                    domain: BasicOpen::at_vertex(cat, p.arrow.source(), moved),
                    twist: p.twist.inverse(),
                }
            })
            .collect();
        let src = prod.source();
        step(&mut prod, &mut b, TupleMorphism { target: src, pieces })?;
    }

    // (i) raise norms.
    while prod.pieces.iter().any(|p| p.arrow.max_degree() < l) {
        let mut m = TupleMorphism { target: Vec::new(), pieces: Vec::new() };
        for p in &prod.pieces {
            let part = if p.arrow.max_degree() < l {
                let v = p.arrow.source().clone();
                let fam = GarsideFamily::standard().elements_at(cat, &v);
                gamma(cat, &GammaSpec::new(v, p.domain.relative_exclusions(), fam))?
            } else {
                TupleMorphism::identity(cat, std::slice::from_ref(&p.domain))
            };
            m = amalg(&m, &part);
        }
        step(&mut prod, &mut b, m)?;
    }

    // (iii) canonical domains.
    let specs: Vec<GammaSpec> = prod
        .target
        .iter()
        .map(|u| Ok(GammaSpec::new(entry_vertex(cat, u)?, u.exclusions().to_vec(), s_exactly(cat, u.root().target(), l))))
        .collect::<Result<_, BisectionError>>()?;
    loop {
        let mut changed = false;
        let mut m = TupleMorphism { target: Vec::new(), pieces: Vec::new() };
        for p in &prod.pieces {
            let want = BasicOpen::at_vertex(cat, p.arrow.source(), f_s(cat, &specs[p.base], &p.arrow)?);
            let part = if want != p.domain {
                changed = true;
                let v = p.arrow.source().clone();
                let fam: Vec<Morphism> = GarsideFamily::standard()
                    .elements_at(cat, &v)
                    .into_iter()
                    .filter(|s| compose_unchecked(&p.arrow, s).max_degree() == l)
                    .collect();
                gamma(cat, &GammaSpec::new(v, p.domain.relative_exclusions(), fam))?
            } else {
                TupleMorphism::identity(cat, std::slice::from_ref(&p.domain))
            };
            m = amalg(&m, &part);
        }
        if !changed {
            break;
        }
        step(&mut prod, &mut b, m)?;
    }

    // (iv) reorder.
    let mut target = TupleMorphism { target: Vec::new(), pieces: Vec::new() };
    for u in &prod.target {
        target = amalg(&target, &gamma_l(cat, &entry_vertex(cat, u)?, u.exclusions(), l)?);
    }
    let mut pieces = Vec::new();
    for q in &target.pieces {
        let k = prod
            .pieces
            .iter()
            .position(|p| p.base == q.base && p.arrow == q.arrow && p.domain == q.domain)
            .ok_or_else(|| BisectionError::Internal(format!("no piece for {}", cat.format(&q.arrow))))?;
        pieces.push(Piece { base: k, arrow: cat.identity(q.arrow.source()), domain: q.domain.clone(), twist: GroupWord::identity() });
    }
    let src = prod.source();
    step(&mut prod, &mut b, TupleMorphism { target: src, pieces })?;
    if !tuples_equal(zc, &prod, &target) {
        return Err(BisectionError::Internal("completion does not reach γ(𝔢, 𝔖_L)".into()));
    }
    Ok(b)
}

/// The same `b` read off directly: each piece `s` of the target γ sits
/// below a unique piece `aᵢ`, giving the piece `aᵢ⁻¹ s`.
pub fn complete_to_gamma_direct(zc: &ZsCategory, a: &TupleMorphism, l: u32) -> Result<TupleMorphism, BisectionError> {
    let cat = zc.ground();
    let mut target = TupleMorphism { target: Vec::new(), pieces: Vec::new() };
    for u in &a.target {
        target = amalg(&target, &gamma_l(cat, &entry_vertex(cat, u)?, u.exclusions(), l)?);
    }
    let ranges: Vec<BasicOpen> = a.pieces.iter().map(|p| range(zc, p)).collect();
    let mut pieces = Vec::new();
    for q in &target.pieces {
        let rq = range(zc, q);
        let i = (0..a.pieces.len())
            .find(|&i| a.pieces[i].base == q.base && left_divides(&a.pieces[i].arrow, &q.arrow) && rq.is_subset(cat, &ranges[i]))
            .ok_or_else(|| BisectionError::NormBound(format!("{} is not below a single piece", cat.format(&q.arrow))))?;
        let p = &a.pieces[i];
        pieces.push(untwisted_quotient(zc, &p.twist, &left_quotient_unchecked(&p.arrow, &q.arrow), q.domain.clone(), i));
    }
    Ok(TupleMorphism { target: a.source(), pieces })
}

/// A tuple morphism from an object of 𝔛_𝔖 onto the given compact opens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub target: Vec<CompactOpen>,
    pub pieces: Vec<Piece>,
}

pub fn reduce_to_xs(cat: &Category, u: &[CompactOpen]) -> Result<Reduction, BisectionError> {
    let mut pieces = Vec::new();
    for (j, entry) in u.iter().enumerate() {
        if entry.is_empty() {
            return Err(BisectionError::Empty(format!("entry {j}")));
        }
        for part in &entry.parts {
            for q in push_to_fs_form(cat, part).parts {
                let domain = BasicOpen::at_vertex(cat, q.root().source(), q.relative_exclusions());
                pieces.push(Piece { base: j, arrow: q.root().clone(), domain, twist: GroupWord::identity() });
            }
        }
    }
    Ok(Reduction { target: u.to_vec(), pieces })
}

/// Debug printer: one `(arrow, exclusions, base)` triple per piece.
pub fn format_tuple(zc: &ZsCategory, m: &TupleMorphism) -> String {
    let cat = zc.ground();
    let mut s = String::from("[");
    for (i, p) in m.pieces.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let ex: Vec<String> = p.domain.relative_exclusions().iter().map(|e| cat.format(e)).collect();
        let _ = write!(s, "({}", cat.format(&p.arrow));
        if !p.twist.is_empty() {
            let _ = write!(s, "*{}", zc.format_word(&p.twist));
        }
        let _ = write!(s, ", {{{}}}, {})", ex.join(","), p.base);
    }
    s.push(']');
    s
}
