//! Self-similar actions by finite automata and the Zappa–Szép product
//! `𝔠 ⋈ 𝔊` over a single-colour ground category.
//!
//! Group elements are carried as words in the automaton states and never
//! normalised; equality questions go through [`Automaton::is_trivial`].

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{Category, CategoryError, Morphism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZsError {
    #[error("invalid automaton: {0}")]
    Automaton(String),
    #[error("action error: {0}")]
    Action(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
}

/// JSON form: `perm[state][edge]` is the image edge and `trans[state][edge]`
/// the section state, with `"id"` for the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonSpec {
    pub states: Vec<String>,
    pub perm: BTreeMap<String, BTreeMap<String, String>>,
    pub trans: BTreeMap<String, BTreeMap<String, String>>,
}

pub const IDENTITY_STATE: &str = "id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub state: u32,
    pub inverse: bool,
}

/// A word in the states and their inverses; the empty word is the identity.
/// `s₁ s₂ … sₙ` acts as `s₁ ∘ s₂ ∘ … ∘ sₙ`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord(pub Vec<Letter>);

impl GroupWord {
    pub fn identity() -> GroupWord {
        GroupWord(Vec::new())
    }

    pub fn state(s: u32) -> GroupWord {
        GroupWord(vec![Letter { state: s, inverse: false }])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord(self.0.iter().rev().map(|l| Letter { state: l.state, inverse: !l.inverse }).collect())
    }

    /// `self · other`.
    pub fn then(&self, other: &GroupWord) -> GroupWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        GroupWord(v)
    }
}

#[derive(Debug, Clone)]
pub struct Automaton {
    names: Vec<String>,
    perm: Vec<Vec<u32>>,
    inv_perm: Vec<Vec<u32>>,
    trans: Vec<Vec<Option<u32>>>,
    involution: Vec<bool>,
    /// `s t` equals the state `u` (or the identity when `None`).
    products: HashMap<(u32, u32), Option<u32>>,
}

impl Automaton {
    /// Builds the automaton over the edges of a single-colour category.
    pub fn from_spec(spec: &AutomatonSpec, cat: &Category) -> Result<Automaton, ZsError> {
        if cat.rank() != 1 {
            return Err(ZsError::Automaton(format!("automata need a single-colour category, got rank {}", cat.rank())));
        }
        let g = cat.factor(0);
        let n = g.edge_count();
        let index: HashMap<&str, u32> = spec.states.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        if index.len() != spec.states.len() {
            return Err(ZsError::Automaton("duplicate state names".into()));
        }
        if index.contains_key(IDENTITY_STATE) {
            return Err(ZsError::Automaton(format!("{IDENTITY_STATE:?} is reserved for the identity")));
        }
        let edge = |name: &str| g.edge(name).ok_or_else(|| ZsError::Automaton(format!("unknown edge {name}")));
        let mut perm = Vec::new();
        let mut trans = Vec::new();
        for s in &spec.states {
            let p = spec.perm.get(s).ok_or_else(|| ZsError::Automaton(format!("no perm for state {s}")))?;
            let t = spec.trans.get(s).ok_or_else(|| ZsError::Automaton(format!("no trans for state {s}")))?;
            let mut row = vec![u32::MAX; n];
            let mut sec = vec![None; n];
            for (a, b) in p {
                row[edge(a)? as usize] = edge(b)?;
            }
            for (a, b) in t {
                let e = edge(a)? as usize;
                sec[e] = if b == IDENTITY_STATE {
                    None
                } else {
                    Some(*index.get(b.as_str()).ok_or_else(|| ZsError::Automaton(format!("unknown state {b}")))?)
                };
            }
            if row.contains(&u32::MAX) || t.len() != n {
                return Err(ZsError::Automaton(format!("state {s} is not total on the edges")));
            }
            perm.push(row);
            trans.push(sec);
        }
        Automaton::new(spec.states.clone(), perm, trans)
    }

    pub fn new(names: Vec<String>, perm: Vec<Vec<u32>>, trans: Vec<Vec<Option<u32>>>) -> Result<Automaton, ZsError> {
        let mut inv_perm = Vec::new();
        for (s, row) in perm.iter().enumerate() {
            let mut inv = vec![u32::MAX; row.len()];
            for (e, &f) in row.iter().enumerate() {
                if f as usize >= row.len() || inv[f as usize] != u32::MAX {
                    return Err(ZsError::Automaton(format!("state {} does not permute the edges", names[s])));
                }
                inv[f as usize] = e as u32;
            }
            inv_perm.push(inv);
        }
        let k = names.len();
        let mut aut = Automaton {
            names,
            perm,
            inv_perm,
            trans,
            involution: vec![false; k],
            products: HashMap::new(),
        };
        let involution: Vec<bool> =
            (0..k as u32).map(|s| aut.is_trivial(&GroupWord(vec![Letter { state: s, inverse: false }; 2]))).collect();
        aut.involution = involution;
        let mut products = HashMap::new();
        for s in 0..k as u32 {
            for t in 0..k as u32 {
                if !(aut.involution[s as usize] && aut.involution[t as usize]) {
                    continue;
                }
                let st = GroupWord(vec![Letter { state: s, inverse: false }, Letter { state: t, inverse: false }]);
                if aut.is_trivial(&st) {
                    products.insert((s, t), None);
                    continue;
                }
                for u in 0..k as u32 {
                    if aut.is_trivial(&st.then(&GroupWord(vec![Letter { state: u, inverse: true }]))) {
                        products.insert((s, t), Some(u));
                        break;
                    }
                }
            }
        }
        aut.products = products;
        Ok(aut)
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, s: u32) -> &str {
        &self.names[s as usize]
    }

    pub fn state_index(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn edge_count(&self) -> usize {
        self.perm.first().map_or(0, |r| r.len())
    }

    /// Image edge under a single state.
    pub fn perm(&self, s: u32) -> &[u32] {
        &self.perm[s as usize]
    }

    pub fn section(&self, s: u32, e: u32) -> Option<u32> {
        self.trans[s as usize][e as usize]
    }

    pub fn is_involution(&self, s: u32) -> bool {
        self.involution[s as usize]
    }

    fn act_letter(&self, l: Letter, e: u32) -> (u32, Option<Letter>) {
        if l.inverse {
            let f = self.inv_perm[l.state as usize][e as usize];
            (f, self.trans[l.state as usize][f as usize].map(|s| Letter { state: s, inverse: true }))
        } else {
            (
                self.perm[l.state as usize][e as usize],
                self.trans[l.state as usize][e as usize].map(|s| Letter { state: s, inverse: false }),
            )
        }
    }

    /// `(g.e, φ(g,e))` for a single edge.
    pub fn act_edge(&self, g: &GroupWord, e: u32) -> (u32, GroupWord) {
        let mut cur = e;
        let mut sec = Vec::with_capacity(g.len());
        for &l in g.0.iter().rev() {
            let (f, s) = self.act_letter(l, cur);
            cur = f;
            if let Some(s) = s {
                sec.push(s);
            }
        }
        sec.reverse();
        (cur, self.simplify(&GroupWord(sec)))
    }

    /// `(g.p, φ(g,p))` for an edge path.
    pub fn act_path(&self, g: &GroupWord, p: &[u32]) -> (Vec<u32>, GroupWord) {
        let mut g = g.clone();
        let mut out = Vec::with_capacity(p.len());
        for &e in p {
            if g.is_empty() {
                out.push(e);
                continue;
            }
            let (f, h) = self.act_edge(&g, e);
            out.push(f);
            g = h;
        }
        (out, g)
    }

    /// Cheap rewriting that preserves the group element: inverse involutions
    /// become plain letters, cancelling pairs vanish, and known products of
    /// two involutions collapse to a single state.
    pub fn simplify(&self, g: &GroupWord) -> GroupWord {
        let mut out: Vec<Letter> = Vec::with_capacity(g.len());
        for &l in &g.0 {
            let mut l = l;
            if l.inverse && self.involution[l.state as usize] {
                l.inverse = false;
            }
            let mut pending = Some(l);
            while let Some(x) = pending.take() {
                match out.last().copied() {
                    Some(y) if y.state == x.state && (y.inverse != x.inverse || !x.inverse && self.involution[x.state as usize]) => {
                        out.pop();
                    }
                    Some(y) if !y.inverse && !x.inverse => match self.products.get(&(y.state, x.state)) {
                        Some(None) => {
                            out.pop();
                        }
                        Some(Some(u)) => {
                            out.pop();
                            pending = Some(Letter { state: *u, inverse: false });
                        }
                        None => out.push(x),
                    },
                    _ => out.push(x),
                }
            }
        }
        GroupWord(out)
    }

    /// Decides whether `g` acts trivially on every path, by exploring the
    /// finite set of sections reachable from `g` and checking each acts
    /// trivially on the first level.
    pub fn is_trivial(&self, g: &GroupWord) -> bool {
        let start = self.simplify(g);
        let mut seen: HashSet<GroupWord> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some(w) = queue.pop_front() {
            if w.is_empty() {
                continue;
            }
            for e in 0..self.edge_count() as u32 {
                let (f, h) = self.act_edge(&w, e);
                if f != e {
                    return false;
                }
                if seen.insert(h.clone()) {
                    queue.push_back(h);
                }
            }
        }
        true
    }

    pub fn format_word(&self, g: &GroupWord) -> String {
        if g.is_empty() {
            return "1".into();
        }
        g.0.iter()
            .map(|l| if l.inverse { format!("{}^-1", self.names[l.state as usize]) } else { self.names[l.state as usize].clone() })
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Parses `a.b^-1.c`; `1` or the empty string is the identity.
    pub fn parse_word(&self, s: &str) -> Result<GroupWord, ZsError> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(GroupWord::identity());
        }
        let mut out = Vec::new();
        for tok in s.split('.') {
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let state = self.state_index(name).ok_or_else(|| ZsError::Action(format!("unknown state {name}")))?;
            out.push(Letter { state, inverse });
        }
        Ok(GroupWord(out))
    }
}

/// An element `(a, g)` of `𝔠 ⋈ 𝔊`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZsMorphism {
    pub arrow: Morphism,
    pub twist: GroupWord,
}

impl ZsMorphism {
    pub fn lift(a: Morphism) -> ZsMorphism {
        ZsMorphism { arrow: a, twist: GroupWord::identity() }
    }
}

/// A ground category together with an optional self-similar action.
#[derive(Debug, Clone)]
pub struct ZsCategory {
    cat: Category,
    automaton: Option<Automaton>,
}

impl ZsCategory {
    pub fn new(cat: Category, automaton: Option<Automaton>) -> ZsCategory {
        ZsCategory { cat, automaton }
    }

    pub fn ground(&self) -> &Category {
        &self.cat
    }

    pub fn automaton(&self) -> Option<&Automaton> {
        self.automaton.as_ref()
    }

    pub fn act(&self, g: &GroupWord, a: &Morphism) -> Morphism {
        self.act_and_cocycle(g, a).0
    }

    pub fn cocycle(&self, g: &GroupWord, a: &Morphism) -> GroupWord {
        self.act_and_cocycle(g, a).1
    }

    pub fn act_and_cocycle(&self, g: &GroupWord, a: &Morphism) -> (Morphism, GroupWord) {
        match &self.automaton {
            Some(aut) if !g.is_empty() => {
                let (p, h) = aut.act_path(g, a.path(0));
                let m = self.cat.from_paths(a.target(), vec![p]).expect("states fix vertices");
                (m, h)
            }
            _ => (a.clone(), g.clone()),
        }
    }

    pub fn simplify(&self, g: &GroupWord) -> GroupWord {
        match &self.automaton {
            Some(aut) => aut.simplify(g),
            None => GroupWord::identity(),
        }
    }

    pub fn is_trivial(&self, g: &GroupWord) -> bool {
        match &self.automaton {
            Some(aut) => aut.is_trivial(g),
            None => true,
        }
    }

    pub fn format_word(&self, g: &GroupWord) -> String {
        match &self.automaton {
            Some(aut) => aut.format_word(g),
            None => "1".into(),
        }
    }

    /// `(a,g)(b,h) = (a (g.b), φ(g,b) h)`.
    pub fn compose_zs(&self, x: &ZsMorphism, y: &ZsMorphism) -> Result<ZsMorphism, ZsError> {
        let (gb, phi) = self.act_and_cocycle(&x.twist, &y.arrow);
        let arrow = self.cat.compose(&x.arrow, &gb)?;
        Ok(ZsMorphism { arrow, twist: self.simplify(&phi.then(&y.twist)) })
    }

    /// Twists are units, so `(a,g) 𝔇 = (a,1) 𝔇` and mcms come from the ground.
    pub fn mcm_zs(&self, x: &ZsMorphism, y: &ZsMorphism) -> Result<Vec<ZsMorphism>, ZsError> {
        Ok(self.cat.mcm(&x.arrow, &y.arrow)?.into_iter().map(ZsMorphism::lift).collect())
    }

    /// The unit `u` with `s u = t`, when `s =* t`.
    pub fn star_map_zs(&self, s: &ZsMorphism, t: &ZsMorphism) -> Option<ZsMorphism> {
        if s.arrow != t.arrow {
            return None;
        }
        let mut w = self.simplify(&s.twist.inverse().then(&t.twist));
        if self.is_trivial(&w) {
            w = GroupWord::identity();
        }
        Some(ZsMorphism { arrow: self.cat.identity(s.arrow.source()), twist: w })
    }

    /// Checks the hypotheses needed to lift 𝔖: every state fixes vertices
    /// and permutes the edges at each vertex (so 𝔊.𝔖 ⊆ 𝔖 and carets are
    /// permuted among themselves), plus a bounded-depth probe of condition (F).
    pub fn lift_garside(&self, depth: u32) -> LiftReport {
        let mut report = LiftReport { checks: Vec::new() };
        let Some(aut) = &self.automaton else {
            report.checks.push(("trivial action".into(), true, None));
            return report;
        };
        let g = self.cat.factor(0);
        let mut bad = None;
        'outer: for s in 0..aut.state_count() as u32 {
            for e in 0..g.edge_count() as u32 {
                let f = aut.perm(s)[e as usize];
                if g.src[e as usize] != g.src[f as usize] || g.dst[e as usize] != g.dst[f as usize] {
                    bad = Some(format!(
                        "state {} maps edge {} to {} across vertices",
                        aut.state_name(s),
                        g.edge_names[e as usize],
                        g.edge_names[f as usize]
                    ));
                    break 'outer;
                }
            }
        }
        report.checks.push(("degree and vertex preservation".into(), bad.is_none(), bad.clone()));
        report.checks.push(("family stable under the action".into(), bad.is_none(), bad));

        // Condition (F): a twist trivial on a cylinder should be trivial.
        let mut witness = None;
        'f: for v in self.cat.objects() {
            for d in 1..=depth {
                for x in self.cat.morphisms_of_degree(&v, &[d]).unwrap_or_default() {
                    for s in 0..aut.state_count() as u32 {
                        let w = GroupWord::state(s);
                        let (gx, phi) = self.act_and_cocycle(&w, &x);
                        if gx == x && aut.is_trivial(&phi) && !aut.is_trivial(&w) {
                            witness = Some(format!(
                                "state {} acts trivially below {} but not globally",
                                aut.state_name(s),
                                self.cat.format(&x)
                            ));
                            break 'f;
                        }
                    }
                }
            }
        }
        report.checks.push(("condition (F) at bounded depth (advisory)".into(), witness.is_none(), witness));
        report
    }

    /// Right cancellation up to units on arrows of length ≤ `depth`:
    /// `x z = y z` forces `x =* y`.
    pub fn check_right_cancellative(&self, depth: u32) -> bool {
        let Some(aut) = &self.automaton else { return true };
        let mut twists = vec![GroupWord::identity()];
        twists.extend((0..aut.state_count() as u32).map(GroupWord::state));
        for v in self.cat.objects() {
            let arrows = self.cat.morphisms_up_to_degree(&v, &[depth]);
            let mut elems = Vec::new();
            for a in &arrows {
                for t in &twists {
                    elems.push(ZsMorphism { arrow: a.clone(), twist: t.clone() });
                }
            }
            for x in &elems {
                for y in &elems {
                    if x.arrow.source() != y.arrow.source() || x.arrow == y.arrow {
                        continue;
                    }
                    for z in self.cat.morphisms_up_to_degree(x.arrow.source(), &[1]) {
                        let z = ZsMorphism::lift(z);
                        let (Ok(xz), Ok(yz)) = (self.compose_zs(x, &z), self.compose_zs(y, &z)) else { continue };
                        if xz.arrow == yz.arrow {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn format_zs(&self, x: &ZsMorphism) -> String {
        if x.twist.is_empty() {
            self.cat.format(&x.arrow)
        } else {
            format!("{}*{}", self.cat.format(&x.arrow), self.format_word(&x.twist))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftReport {
    pub checks: Vec<(String, bool, Option<String>)>,
}

impl LiftReport {
    /// Condition (F) is reported but not required.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| !c.0.contains("advisory")).all(|c| c.1)
    }
}

impl fmt::Display for LiftReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ok, why) in &self.checks {
            write!(f, "{:<44} {}", name, if *ok { "pass" } else { "fail" })?;
            if let Some(w) = why {
                write!(f, "  ({w})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
