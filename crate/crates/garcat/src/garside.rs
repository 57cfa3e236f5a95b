//! The degree Garside family 𝔖 = 𝕕⁻¹({0,1}^k ∖ {0}), its powers, greedy
//! normal forms, and a bounded-degree checker for the Garside axioms.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::category::{degrees_up_to, left_divides, Category, Degree, Morphism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GarsideError {
    #[error("identity morphisms have no head")]
    UnitHead,
    #[error("the norm bound must be at least 1, got {0}")]
    Parameter(u32),
}

/// Membership predicate for a candidate family.
pub trait Family {
    fn contains(&self, m: &Morphism) -> bool;
}

impl<F: Fn(&Morphism) -> bool> Family for F {
    fn contains(&self, m: &Morphism) -> bool {
        self(m)
    }
}

/// 𝔖^{≤L}: non-identity morphisms whose degree has all coordinates ≤ L.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GarsideFamily {
    bound: u32,
}

impl GarsideFamily {
    /// The family 𝔖 itself.
    pub fn standard() -> GarsideFamily {
        GarsideFamily { bound: 1 }
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    /// Membership in 𝔖^♯ = 𝔖 ∪ 𝔠*.
    pub fn contains_sharp(&self, m: &Morphism) -> bool {
        m.max_degree() <= self.bound
    }

    /// The elements with target `v`, in canonical order.
    pub fn elements_at(&self, cat: &Category, v: &Vec<u32>) -> Vec<Morphism> {
        let top = vec![self.bound; cat.rank()];
        let mut out = Vec::new();
        for d in degrees_up_to(&top) {
            if d.iter().all(|&x| x == 0) {
                continue;
            }
            out.extend(cat.extensions_of_degree(&cat.identity(v), &d));
        }
        out.sort();
        out
    }
}

impl Family for GarsideFamily {
    fn contains(&self, m: &Morphism) -> bool {
        !m.is_identity() && m.max_degree() <= self.bound
    }
}

pub fn s_leq_l(l: u32) -> Result<GarsideFamily, GarsideError> {
    if l < 1 {
        return Err(GarsideError::Parameter(l));
    }
    Ok(GarsideFamily { bound: l })
}

/// The largest element of 𝔖^♯ dividing `a`: its prefix of degree `𝕕(a) ∧ 1`.
pub fn head(cat: &Category, a: &Morphism) -> Result<Morphism, GarsideError> {
    if a.is_identity() {
        return Err(GarsideError::UnitHead);
    }
    Ok(cat.prefix_min(a, &vec![1; cat.rank()]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub factors: Vec<Morphism>,
}

impl NormalForm {
    pub fn norm(&self) -> usize {
        self.factors.len()
    }
}

/// Greedy decomposition by iterated heads.
pub fn normal_form(cat: &Category, a: &Morphism) -> NormalForm {
    let mut factors = Vec::new();
    let mut rest = a.clone();
    while !rest.is_identity() {
        let h = cat.prefix_min(&rest, &vec![1; cat.rank()]);
        let d = h.degree();
        let (_, tail) = cat.split_at_degree(&rest, &d);
        factors.push(h);
        rest = tail;
    }
    NormalForm { factors }
}

/// ‖a‖, read off the normal form.
pub fn norm(cat: &Category, a: &Morphism) -> usize {
    normal_form(cat, a).norm()
}

/// Greedy condition for `s t`, checked against every `r ∈ 𝔖` at the target.
pub fn is_greedy_pair(cat: &Category, s: &Morphism, t: &Morphism) -> bool {
    let st = match cat.compose(s, t) {
        Ok(m) => m,
        Err(_) => return false,
    };
    GarsideFamily::standard()
        .elements_at(cat, s.target())
        .iter()
        .filter(|r| left_divides(r, &st))
        .all(|r| left_divides(r, s))
}

/// The =*-map at ground level: units are trivial, so `s =* t` iff `s = t`.
pub fn star_map(cat: &Category, s: &Morphism, t: &Morphism) -> Option<Morphism> {
    if s == t {
        Some(cat.identity(s.source()))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub max_degree: Degree,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

struct FactorCounter<'a, F: Family + ?Sized> {
    cat: &'a Category,
    family: &'a F,
    memo: HashMap<Morphism, Option<u32>>,
}

impl<'a, F: Family + ?Sized> FactorCounter<'a, F> {
    /// Fewest family factors whose product is `m`; `None` if not generated.
    fn count(&mut self, m: &Morphism) -> Option<u32> {
        if m.is_identity() {
            return Some(0);
        }
        if let Some(&c) = self.memo.get(m) {
            return c;
        }
        let mut best: Option<u32> = None;
        for p in degrees_up_to(&m.degree()) {
            if p.iter().all(|&x| x == 0) {
                continue;
            }
            let (s, rest) = self.cat.split_at_degree(m, &p);
            if !self.family.contains(&s) {
                continue;
            }
            if let Some(c) = self.count(&rest) {
                best = Some(best.map_or(c + 1, |b: u32| b.min(c + 1)));
            }
        }
        self.memo.insert(m.clone(), best);
        best
    }
}

/// Exhaustive check, over all morphisms of degree ≤ `max_degree`, that
/// `family` generates, that its ♯-closure is closed under right divisors,
/// that it is closed under right comultiples, and that (𝔖^{≤L})^♯ is closed
/// under left divisors for every `L` up to the largest coordinate.
pub fn verify_garside_axioms<F: Family + ?Sized>(cat: &Category, family: &F, max_degree: &[u32]) -> AxiomReport {
    let mut all = Vec::new();
    for v in cat.objects() {
        all.extend(cat.morphisms_up_to_degree(&v, max_degree));
    }
    let mut counter = FactorCounter { cat, family, memo: HashMap::new() };
    let sharp = |m: &Morphism| m.is_identity() || family.contains(m);
    let fmt = |m: &Morphism| cat.format(m);

    let mut checks = Vec::new();

    let bad = all.iter().find(|m| counter.count(m).is_none());
    checks.push(AxiomCheck {
        name: "generating".into(),
        passed: bad.is_none(),
        counterexample: bad.map(|m| format!("not generating: {} is not a product of family elements", fmt(m))),
    });

    let mut bad = None;
    'outer: for s in all.iter().filter(|m| sharp(m)) {
        for p in degrees_up_to(&s.degree()) {
            let (_, y) = cat.split_at_degree(s, &p);
            if !sharp(&y) {
                bad = Some(format!("right divisor {} of {} is outside the family", fmt(&y), fmt(s)));
                break 'outer;
            }
        }
    }
    checks.push(AxiomCheck { name: "right-divisor closure".into(), passed: bad.is_none(), counterexample: bad });

    let mut bad = None;
    'outer2: for a in &all {
        let prefixes: Vec<Morphism> =
            degrees_up_to(&a.degree()).iter().map(|p| cat.split_at_degree(a, p).0).collect();
        let members: Vec<&Morphism> = prefixes.iter().filter(|m| family.contains(m)).collect();
        for r in &members {
            for s in &members {
                let ok = members.iter().any(|t| left_divides(r, t) && left_divides(s, t));
                if !ok {
                    bad = Some(format!("{} and {} have no common multiple in the family below {}", fmt(r), fmt(s), fmt(a)));
                    break 'outer2;
                }
            }
        }
    }
    checks.push(AxiomCheck { name: "right-comultiple closure".into(), passed: bad.is_none(), counterexample: bad });

    let top = max_degree.iter().copied().max().unwrap_or(0);
    for l in 1..=top {
        let mut bad = None;
        'outer3: for m in &all {
            if counter.count(m).map_or(true, |c| c > l) {
                continue;
            }
            for p in degrees_up_to(&m.degree()) {
                let (x, _) = cat.split_at_degree(m, &p);
                if counter.count(&x).map_or(true, |c| c > l) {
                    bad = Some(format!("left divisor {} of {} has norm above {l}", fmt(&x), fmt(m)));
                    break 'outer3;
                }
            }
        }
        checks.push(AxiomCheck {
            name: format!("left-divisor closure of S^<={l}"),
            passed: bad.is_none(),
            counterexample: bad,
        });
    }

    AxiomReport { max_degree: max_degree.to_vec(), checks }
}
