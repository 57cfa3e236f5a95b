//! Ground categories: finite products of path categories of finite graphs.
//!
//! A morphism is a k-tuple of edge paths, one per factor ("colour").  A path
//! `e0 e1` walks `e0` first, so `e0 e1` is composable when `dst(e0) = src(e1)`.
//! The target 𝔱 of a path is its starting vertex and the domain 𝔡 its end
//! vertex; `a b` is defined when `𝔡(a) = 𝔱(b)`.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Degree = Vec<u32>;
pub type ObjectId = Vec<u32>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("cannot compose: domain {left} of the left factor differs from target {right} of the right factor")]
    Composition { left: String, right: String },
    #[error("{0} is not a left divisor of {1}")]
    NotDivisor(String, String),
    #[error("degree {0:?} is not below {1:?}")]
    Degree(Degree, Degree),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot parse morphism: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub factors: Vec<GraphSpec>,
}

impl CategorySpec {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }
}

/// A compiled graph factor.
#[derive(Debug, Clone)]
pub struct Graph {
    pub vertex_names: Vec<String>,
    pub edge_names: Vec<String>,
    pub src: Vec<u32>,
    pub dst: Vec<u32>,
    /// Outgoing edges per vertex, in declaration order.
    pub out: Vec<Vec<u32>>,
    vertex_index: HashMap<String, u32>,
    edge_index: HashMap<String, u32>,
}

impl Graph {
    pub fn from_spec(spec: &GraphSpec) -> Result<Graph, CategoryError> {
        if spec.vertices.is_empty() {
            return Err(CategoryError::InvalidGraph("vertex list is empty".into()));
        }
        let mut vertex_index = HashMap::new();
        for (i, v) in spec.vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i as u32).is_some() {
                return Err(CategoryError::InvalidGraph(format!("duplicate vertex {v}")));
            }
        }
        let mut edge_index = HashMap::new();
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut out = vec![Vec::new(); spec.vertices.len()];
        for (i, e) in spec.edges.iter().enumerate() {
            if e.id.is_empty() {
                return Err(CategoryError::InvalidGraph("empty edge id".into()));
            }
            if edge_index.insert(e.id.clone(), i as u32).is_some() {
                return Err(CategoryError::InvalidGraph(format!("duplicate edge id {}", e.id)));
            }
            let s = *vertex_index.get(&e.src).ok_or_else(|| {
                CategoryError::InvalidGraph(format!("edge {} starts at undeclared vertex {}", e.id, e.src))
            })?;
            let d = *vertex_index.get(&e.dst).ok_or_else(|| {
                CategoryError::InvalidGraph(format!("edge {} ends at undeclared vertex {}", e.id, e.dst))
            })?;
            src.push(s);
            dst.push(d);
            out[s as usize].push(i as u32);
        }
        Ok(Graph {
            vertex_names: spec.vertices.clone(),
            edge_names: spec.edges.iter().map(|e| e.id.clone()).collect(),
            src,
            dst,
            out,
            vertex_index,
            edge_index,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_names.len()
    }

    pub fn vertex(&self, name: &str) -> Option<u32> {
        self.vertex_index.get(name).copied()
    }

    pub fn edge(&self, name: &str) -> Option<u32> {
        self.edge_index.get(name).copied()
    }

    /// All paths of length `n` starting at `v`, lexicographic in edge order.
    pub fn paths_from(&self, v: u32, n: u32) -> Vec<Vec<u32>> {
        let mut acc = vec![(Vec::new(), v)];
        for _ in 0..n {
            let mut next = Vec::new();
            for (p, end) in acc {
                for &e in &self.out[end as usize] {
                    let mut q = p.clone();
                    q.push(e);
                    next.push((q, self.dst[e as usize]));
                }
            }
            acc = next;
        }
        acc.into_iter().map(|(p, _)| p).collect()
    }
}

/// An arrow of the ground category: one edge path per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morphism {
    target: ObjectId,
    source: ObjectId,
    paths: Vec<Vec<u32>>,
}

impl Morphism {
    pub fn target(&self) -> &ObjectId {
        &self.target
    }

    pub fn source(&self) -> &ObjectId {
        &self.source
    }

    pub fn paths(&self) -> &[Vec<u32>] {
        &self.paths
    }

    pub fn path(&self, colour: usize) -> &[u32] {
        &self.paths[colour]
    }

    pub fn rank(&self) -> usize {
        self.paths.len()
    }

    pub fn degree(&self) -> Degree {
        self.paths.iter().map(|p| p.len() as u32).collect()
    }

    /// Largest coordinate of the degree.
    pub fn max_degree(&self) -> u32 {
        self.paths.iter().map(|p| p.len() as u32).max().unwrap_or(0)
    }

    pub fn is_identity(&self) -> bool {
        self.paths.iter().all(|p| p.is_empty())
    }
}

impl Ord for Morphism {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.paths.cmp(&other.paths))
            .then_with(|| self.target.cmp(&other.target))
    }
}

impl PartialOrd for Morphism {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-vertex, per-colour counts reported by [`Category::check_degree_hypotheses`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexColourCount {
    pub colour: usize,
    pub vertex: String,
    pub loops: usize,
    pub outgoing: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisReport {
    pub rows: Vec<VertexColourCount>,
}

impl HypothesisReport {
    /// Every vertex carries at least two loops of every colour.
    pub fn loops_ok(&self) -> bool {
        self.rows.iter().all(|r| r.loops >= 2)
    }

    /// Every vertex has an outgoing edge of every colour, so every finite
    /// path extends to an infinite one.
    pub fn no_sources_ok(&self) -> bool {
        self.rows.iter().all(|r| r.outgoing >= 1)
    }

    pub fn passed(&self) -> bool {
        self.loops_ok() && self.no_sources_ok()
    }
}

/// A product of path categories of finite graphs.
#[derive(Debug, Clone)]
pub struct Category {
    factors: Vec<Graph>,
}

impl Category {
    pub fn from_spec(spec: &CategorySpec) -> Result<Category, CategoryError> {
        if spec.factors.is_empty() {
            return Err(CategoryError::InvalidGraph("at least one factor is required".into()));
        }
        let factors = spec.factors.iter().map(Graph::from_spec).collect::<Result<Vec<_>, _>>()?;
        Ok(Category { factors })
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, colour: usize) -> &Graph {
        &self.factors[colour]
    }

    pub fn factors(&self) -> &[Graph] {
        &self.factors
    }

    /// All objects, lexicographic in vertex order.
    pub fn objects(&self) -> Vec<ObjectId> {
        let mut acc: Vec<ObjectId> = vec![Vec::new()];
        for g in &self.factors {
            let mut next = Vec::new();
            for o in &acc {
                for v in 0..g.vertex_count() as u32 {
                    let mut p = o.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            acc = next;
        }
        acc
    }

    pub fn is_object(&self, v: &ObjectId) -> bool {
        v.len() == self.rank()
            && v.iter().zip(&self.factors).all(|(&x, g)| (x as usize) < g.vertex_count())
    }

    pub fn identity(&self, v: &ObjectId) -> Morphism {
        Morphism { target: v.clone(), source: v.clone(), paths: vec![Vec::new(); self.rank()] }
    }

    /// Validates per-factor paths starting at `target`.
    pub fn from_paths(&self, target: &ObjectId, paths: Vec<Vec<u32>>) -> Result<Morphism, CategoryError> {
        if !self.is_object(target) {
            return Err(CategoryError::Domain(format!("unknown object {target:?}")));
        }
        if paths.len() != self.rank() {
            return Err(CategoryError::Domain(format!(
                "expected {} factor paths, got {}",
                self.rank(),
                paths.len()
            )));
        }
        let mut source = target.clone();
        for (j, p) in paths.iter().enumerate() {
            let g = &self.factors[j];
            for &e in p {
                if e as usize >= g.edge_count() {
                    return Err(CategoryError::Domain(format!("unknown edge {e} in colour {j}")));
                }
                if g.src[e as usize] != source[j] {
                    return Err(CategoryError::Composition {
                        left: g.vertex_names[source[j] as usize].clone(),
                        right: g.edge_names[e as usize].clone(),
                    });
                }
                source[j] = g.dst[e as usize];
            }
        }
        Ok(Morphism { target: target.clone(), source, paths })
    }

    /// The single-edge morphism of colour `colour` at object `v`.
    pub fn edge_at(&self, v: &ObjectId, colour: usize, edge: u32) -> Result<Morphism, CategoryError> {
        let mut paths = vec![Vec::new(); self.rank()];
        paths[colour].push(edge);
        self.from_paths(v, paths)
    }

    pub fn compose(&self, a: &Morphism, b: &Morphism) -> Result<Morphism, CategoryError> {
        if a.source != b.target {
            return Err(CategoryError::Composition {
                left: self.object_name(&a.source),
                right: self.object_name(&b.target),
            });
        }
        Ok(compose_unchecked(a, b))
    }

    pub fn left_divides(&self, a: &Morphism, b: &Morphism) -> bool {
        left_divides(a, b)
    }

    /// The unique `x` with `a x = b`.
    pub fn left_quotient(&self, a: &Morphism, b: &Morphism) -> Result<Morphism, CategoryError> {
        if !left_divides(a, b) {
            return Err(CategoryError::NotDivisor(self.format(a), self.format(b)));
        }
        Ok(left_quotient_unchecked(a, b))
    }

    /// `c = a b` with `𝕕(a) = p`; `a` is the componentwise prefix.
    pub fn factorize_at_degree(&self, c: &Morphism, p: &[u32]) -> Result<(Morphism, Morphism), CategoryError> {
        let d = c.degree();
        if p.len() != d.len() || p.iter().zip(&d).any(|(x, y)| x > y) {
            return Err(CategoryError::Degree(p.to_vec(), d));
        }
        Ok(self.split_at_degree(c, p))
    }

    /// Assumes `p ≤ 𝕕(c)`.
    pub(crate) fn split_at_degree(&self, c: &Morphism, p: &[u32]) -> (Morphism, Morphism) {
        let mut mid = Vec::with_capacity(p.len());
        let mut head = Vec::with_capacity(p.len());
        let mut tail = Vec::with_capacity(p.len());
        for (j, (q, &n)) in c.paths.iter().zip(p).enumerate() {
            let n = n as usize;
            mid.push(if n == 0 { c.target[j] } else { self.factors[j].dst[q[n - 1] as usize] });
            head.push(q[..n].to_vec());
            tail.push(q[n..].to_vec());
        }
        (
            Morphism { target: c.target.clone(), source: mid.clone(), paths: head },
            Morphism { target: mid, source: c.source.clone(), paths: tail },
        )
    }

    /// The componentwise prefix of `c` of degree `𝕕(c) ∧ p`.
    pub fn prefix_min(&self, c: &Morphism, p: &[u32]) -> Morphism {
        let q: Degree = c.degree().iter().zip(p).map(|(x, y)| *x.min(y)).collect();
        self.split_at_degree(c, &q).0
    }

    /// Minimal common right multiples.  In a product of path categories the
    /// answer is empty or the single componentwise longer path.
    pub fn mcm(&self, a: &Morphism, b: &Morphism) -> Result<Vec<Morphism>, CategoryError> {
        if a.target != b.target {
            return Err(CategoryError::Domain(format!(
                "mcm of morphisms with targets {} and {}",
                self.object_name(&a.target),
                self.object_name(&b.target)
            )));
        }
        Ok(join(a, b).into_iter().collect())
    }

    /// All morphisms with target `v` and degree `p`, in canonical order.
    pub fn morphisms_of_degree(&self, v: &ObjectId, p: &[u32]) -> Result<Vec<Morphism>, CategoryError> {
        if !self.is_object(v) {
            return Err(CategoryError::Domain(format!("unknown object {v:?}")));
        }
        if p.len() != self.rank() {
            return Err(CategoryError::Degree(p.to_vec(), vec![0; self.rank()]));
        }
        Ok(self.extensions_of_degree(&self.identity(v), p))
    }

    /// All `c` with `a ≼ c` and `𝕕(c) = p`; empty unless `𝕕(a) ≤ p`.
    pub fn extensions_of_degree(&self, a: &Morphism, p: &[u32]) -> Vec<Morphism> {
        let d = a.degree();
        if d.iter().zip(p).any(|(x, y)| x > y) {
            return Vec::new();
        }
        let per_factor: Vec<Vec<Vec<u32>>> = (0..self.rank())
            .map(|j| {
                self.factors[j]
                    .paths_from(a.source[j], p[j] - d[j])
                    .into_iter()
                    .map(|tail| {
                        let mut q = a.paths[j].clone();
                        q.extend(tail);
                        q
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.rank()];
        if per_factor.iter().any(|f| f.is_empty()) {
            return out;
        }
        loop {
            let paths: Vec<Vec<u32>> = idx.iter().enumerate().map(|(j, &i)| per_factor[j][i].clone()).collect();
            let source = paths
                .iter()
                .enumerate()
                .map(|(j, q)| match q.last() {
                    Some(&e) => self.factors[j].dst[e as usize],
                    None => a.target[j],
                })
                .collect();
            out.push(Morphism { target: a.target.clone(), source, paths });
            let mut j = self.rank();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < per_factor[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    /// All morphisms with target `v` whose degree is at most `p` componentwise.
    pub fn morphisms_up_to_degree(&self, v: &ObjectId, p: &[u32]) -> Vec<Morphism> {
        let mut out = Vec::new();
        for d in degrees_up_to(p) {
            out.extend(self.extensions_of_degree(&self.identity(v), &d));
        }
        out.sort();
        out
    }

    pub fn check_degree_hypotheses(&self) -> HypothesisReport {
        let mut rows = Vec::new();
        for (j, g) in self.factors.iter().enumerate() {
            for v in 0..g.vertex_count() {
                let outgoing = g.out[v].len();
                let loops = g.out[v].iter().filter(|&&e| g.dst[e as usize] as usize == v).count();
                rows.push(VertexColourCount { colour: j, vertex: g.vertex_names[v].clone(), loops, outgoing });
            }
        }
        HypothesisReport { rows }
    }

    pub fn object_name(&self, v: &ObjectId) -> String {
        v.iter()
            .zip(&self.factors)
            .map(|(&x, g)| g.vertex_names.get(x as usize).cloned().unwrap_or_else(|| format!("#{x}")))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Serialises as per-factor edge-id strings joined by `|`; empty paths
    /// print as `ε`.
    pub fn format(&self, a: &Morphism) -> String {
        a.paths
            .iter()
            .enumerate()
            .map(|(j, p)| {
                if p.is_empty() {
                    "ε".to_string()
                } else {
                    p.iter().map(|&e| self.factors[j].edge_names[e as usize].as_str()).collect()
                }
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Parses the `|`-separated form.  Empty factors may be written as `ε`
    /// or left blank; `@name` pins the vertex of an empty factor (needed
    /// only when a factor has several vertices).
    pub fn parse(&self, s: &str) -> Result<Morphism, CategoryError> {
        let parts: Vec<&str> = if self.rank() == 1 { vec![s] } else { s.split('|').collect() };
        if parts.len() != self.rank() {
            return Err(CategoryError::Parse(format!(
                "expected {} `|`-separated factors in {s:?}",
                self.rank()
            )));
        }
        let mut target = Vec::new();
        let mut paths = Vec::new();
        for (j, part) in parts.iter().enumerate() {
            let g = &self.factors[j];
            let part = part.trim();
            if let Some(name) = part.strip_prefix('@') {
                let v = g.vertex(name).ok_or_else(|| CategoryError::Parse(format!("unknown vertex {name}")))?;
                target.push(v);
                paths.push(Vec::new());
                continue;
            }
            let text: String = part.chars().filter(|c| !c.is_whitespace() && *c != '.').collect();
            if text.is_empty() || text == "ε" {
                if g.vertex_count() != 1 {
                    return Err(CategoryError::Parse(format!(
                        "empty path in colour {j} needs an explicit vertex (@name)"
                    )));
                }
                target.push(0);
                paths.push(Vec::new());
                continue;
            }
            let path = tokenize_path(g, &text)
                .ok_or_else(|| CategoryError::Parse(format!("{text:?} is not a path in colour {j}")))?;
            target.push(g.src[path[0] as usize]);
            paths.push(path);
        }
        self.from_paths(&target, paths)
    }
}

/// Splits `text` into declared edge ids forming a path; backtracks so that
/// ids which are prefixes of other ids are handled.
fn tokenize_path(g: &Graph, text: &str) -> Option<Vec<u32>> {
    fn go(g: &Graph, rest: &str, at: Option<u32>, acc: &mut Vec<u32>) -> bool {
        if rest.is_empty() {
            return true;
        }
        let mut cands: Vec<(usize, u32)> = g
            .edge_names
            .iter()
            .enumerate()
            .filter(|(_, n)| rest.starts_with(n.as_str()))
            .map(|(i, n)| (n.len(), i as u32))
            .collect();
        cands.sort_by(|x, y| y.0.cmp(&x.0));
        for (len, e) in cands {
            if let Some(v) = at {
                if g.src[e as usize] != v {
                    continue;
                }
            }
            acc.push(e);
            if go(g, &rest[len..], Some(g.dst[e as usize]), acc) {
                return true;
            }
            acc.pop();
        }
        false
    }
    let mut acc = Vec::new();
    if go(g, text, None, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

pub(crate) fn compose_unchecked(a: &Morphism, b: &Morphism) -> Morphism {
    let paths = a
        .paths
        .iter()
        .zip(&b.paths)
        .map(|(p, q)| {
            let mut r = Vec::with_capacity(p.len() + q.len());
            r.extend_from_slice(p);
            r.extend_from_slice(q);
            r
        })
        .collect();
    Morphism { target: a.target.clone(), source: b.source.clone(), paths }
}

pub fn left_divides(a: &Morphism, b: &Morphism) -> bool {
    a.target == b.target && a.paths.iter().zip(&b.paths).all(|(p, q)| q.starts_with(p))
}

/// Assumes `a ≼ b`.
pub(crate) fn left_quotient_unchecked(a: &Morphism, b: &Morphism) -> Morphism {
    let paths = a.paths.iter().zip(&b.paths).map(|(p, q)| q[p.len()..].to_vec()).collect();
    Morphism { target: a.source.clone(), source: b.source.clone(), paths }
}

/// The componentwise longer of two compatible morphisms, if they are compatible.
pub fn join(a: &Morphism, b: &Morphism) -> Option<Morphism> {
    if a.target != b.target {
        return None;
    }
    let mut paths = Vec::with_capacity(a.paths.len());
    let mut source = Vec::with_capacity(a.paths.len());
    for j in 0..a.paths.len() {
        let (p, q) = (&a.paths[j], &b.paths[j]);
        if p.len() >= q.len() {
            if !p.starts_with(q) {
                return None;
            }
            paths.push(p.clone());
            source.push(a.source[j]);
        } else {
            if !q.starts_with(p) {
                return None;
            }
            paths.push(q.clone());
            source.push(b.source[j]);
        }
    }
    Some(Morphism { target: a.target.clone(), source, paths })
}

/// Longest common prefix, componentwise.
pub fn common_prefix_len(a: &Morphism, b: &Morphism) -> Degree {
    a.paths
        .iter()
        .zip(&b.paths)
        .map(|(p, q)| p.iter().zip(q).take_while(|(x, y)| x == y).count() as u32)
        .collect()
}

pub fn degree_le(p: &[u32], q: &[u32]) -> bool {
    p.iter().zip(q).all(|(x, y)| x <= y)
}

pub fn degree_join(p: &[u32], q: &[u32]) -> Degree {
    p.iter().zip(q).map(|(x, y)| *x.max(y)).collect()
}

/// All degrees `d ≤ p`, lexicographic.
pub fn degrees_up_to(p: &[u32]) -> Vec<Degree> {
    let mut acc: Vec<Degree> = vec![Vec::new()];
    for &n in p {
        let mut next = Vec::new();
        for d in &acc {
            for i in 0..=n {
                let mut e = d.clone();
                e.push(i);
                next.push(e);
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{cat, from_json};

    fn m(c: &Category, s: &str) -> Morphism {
        c.parse(s).unwrap()
    }

    fn names(c: &Category, ms: &[Morphism]) -> Vec<String> {
        ms.iter().map(|x| c.format(x)).collect()
    }

    #[test]
    fn words_of_length_two() {
        let c = cat("o2");
        let v = c.objects()[0].clone();
        let got = c.morphisms_of_degree(&v, &[2]).unwrap();
        assert_eq!(names(&c, &got), ["e0e0", "e0e1", "e1e0", "e1e1"]);
    }

    #[test]
    fn factorize_splits_at_degree() {
        let c = cat("o2");
        let (a, b) = c.factorize_at_degree(&m(&c, "e0e1e0"), &[1]).unwrap();
        assert_eq!((c.format(&a), c.format(&b)), ("e0".into(), "e1e0".into()));
        assert!(c.factorize_at_degree(&m(&c, "e0"), &[2]).is_err());

        let c2 = cat("o2xo2");
        let (a, b) = c2.factorize_at_degree(&m(&c2, "e0e1|f1"), &[1, 0]).unwrap();
        assert_eq!((c2.format(&a), c2.format(&b)), ("e0|ε".into(), "e1|f1".into()));
    }

    #[test]
    fn mcm_is_join_or_empty() {
        let c = cat("o2");
        assert_eq!(names(&c, &c.mcm(&m(&c, "e0"), &m(&c, "e0e1")).unwrap()), ["e0e1"]);
        assert!(c.mcm(&m(&c, "e0"), &m(&c, "e1")).unwrap().is_empty());
        let c2 = cat("o2xo2");
        assert_eq!(names(&c2, &c2.mcm(&m(&c2, "e0|"), &m(&c2, "|f1")).unwrap()), ["e0|f1"]);
        assert!(c2.mcm(&m(&c2, "e0|f0"), &m(&c2, "e1|")).unwrap().is_empty());
    }

    #[test]
    fn single_loop_fails_loop_count() {
        let c = from_json(r#"{"factors":[{"vertices":["v"],"edges":[{"id":"a","src":"v","dst":"v"}]}]}"#);
        let r = c.check_degree_hypotheses();
        assert!(!r.loops_ok());
        assert!(r.no_sources_ok());
        assert!(cat("o2xo2").check_degree_hypotheses().passed());
    }

    #[test]
    fn parse_format_round_trip() {
        let c = cat("o2xo2");
        for v in c.objects() {
            for a in c.morphisms_up_to_degree(&v, &[2, 2]) {
                assert_eq!(c.parse(&c.format(&a)).unwrap(), a);
            }
        }
        assert!(c.parse("e0e2|").is_err());
        assert!(c.parse("e0").is_err());
    }

    #[test]
    fn unique_factorization_by_brute_force() {
        let c = cat("o2xo2");
        let v = c.objects()[0].clone();
        let all = c.morphisms_up_to_degree(&v, &[2, 2]);
        for x in &all {
            for p in degrees_up_to(&x.degree()) {
                let count = all
                    .iter()
                    .filter(|a| a.degree() == p)
                    .flat_map(|a| all.iter().map(move |b| (a, b)))
                    .filter(|(a, b)| c.compose(a, b).ok().as_ref() == Some(x))
                    .count();
                assert_eq!(count, 1, "{} at {p:?}", c.format(x));
            }
        }
    }

    #[test]
    fn cancellation_and_associativity() {
        let c = cat("o2xo2");
        let v = c.objects()[0].clone();
        let all = c.morphisms_up_to_degree(&v, &[1, 1]);
        for a in &all {
            for b in &all {
                for d in &all {
                    let ab_d = c.compose(&c.compose(a, b).unwrap(), d).unwrap();
                    let a_bd = c.compose(a, &c.compose(b, d).unwrap()).unwrap();
                    assert_eq!(ab_d, a_bd);
                    if b != d {
                        assert_ne!(c.compose(a, b).unwrap(), c.compose(a, d).unwrap());
                        assert_ne!(c.compose(b, a).unwrap(), c.compose(d, a).unwrap());
                    }
                }
                let ab = c.compose(a, b).unwrap();
                assert_eq!(&c.left_quotient(a, &ab).unwrap(), b);
            }
        }
    }

    #[test]
    fn prefix_min_truncates_each_colour() {
        let c = cat("o2xo2");
        assert_eq!(c.format(&c.prefix_min(&m(&c, "e0e1|f1"), &[1, 1])), "e0|f1");
        assert_eq!(c.format(&c.prefix_min(&m(&c, "|f1f0"), &[1, 1])), "ε|f1");
    }
}
