//! The topological full group at the base object: a generator catalogue,
//! words, the prefix-exchange table oracle, and the fraction-based solver.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bisections::{
    cylinder_cover, delta_gcd, format_tuple, gamma, lcm_tuple, compose_tuple, tuples_equal, BasicOpen,
    BisectionError, GammaSpec, Piece, TupleMorphism, amalg,
};
use crate::category::{compose_unchecked, join, left_divides, left_quotient_unchecked, Morphism};
use crate::garside::GarsideFamily;
use crate::zappa_szep::{GroupWord, ZsCategory};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
pub const STEP_BUDGET_VAR: &str = "GARCAT_STEP_BUDGET";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FullGroupError {
    #[error("word error: {0}")]
    Word(String),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("rewriting exceeded the step budget of {0}")]
    Budget(u64),
    #[error("table error: {0}")]
    Table(String),
    #[error("catalogue error: {0}")]
    Catalogue(String),
    #[error(transparent)]
    Bisection(#[from] BisectionError),
}

/// The rewriting budget, from `GARCAT_STEP_BUDGET` when set.
pub fn step_budget_from_env() -> u64 {
    std::env::var(STEP_BUDGET_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_STEP_BUDGET)
}

/// The inverse of a unit tuple.
pub fn unit_inverse(zc: &ZsCategory, u: &TupleMorphism) -> Result<TupleMorphism, FullGroupError> {
    if !u.is_unit() {
        return Err(FullGroupError::Word("inverse of a non-unit".into()));
    }
    let mut pieces: Vec<Option<Piece>> = vec![None; u.target.len()];
    for (i, p) in u.pieces.iter().enumerate() {
        pieces[p.base] = Some(Piece {
            base: i,
            arrow: p.arrow.clone(),
            domain: u.target[p.base].clone(),
            twist: zc.simplify(&p.twist.inverse()),
        });
    }
    Ok(TupleMorphism { target: u.source(), pieces: pieces.into_iter().map(|p| p.expect("bijective")).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenKind {
    Caret,
    Swap,
    Twist,
}

impl GenKind {
    fn prefix(self) -> &'static str {
        match self {
            GenKind::Caret => "caret",
            GenKind::Swap => "swap",
            GenKind::Twist => "twist",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub name: String,
    pub kind: GenKind,
    pub description: String,
    pub morphism: TupleMorphism,
    pub target: usize,
    pub source: usize,
}

/// Generators at the objects reachable from the base by at most `depth`
/// carets, with the objects they connect.
#[derive(Debug, Clone)]
pub struct Catalogue {
    pub objects: Vec<Vec<BasicOpen>>,
    pub generators: Vec<Generator>,
    distance: Vec<usize>,
}

fn stable_name(kind: GenKind, canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    let hex: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}", kind.prefix())
}

fn describe_object(zc: &ZsCategory, x: &[BasicOpen]) -> String {
    let parts: Vec<String> = x.iter().map(|u| u.format(zc.ground())).collect();
    format!("({})", parts.join(", "))
}

/// Replaces entry `i` of the identity on `x` by `m`.
fn at_entry(zc: &ZsCategory, x: &[BasicOpen], i: usize, m: &TupleMorphism) -> TupleMorphism {
    let cat = zc.ground();
    let left = TupleMorphism::identity(cat, &x[..i]);
    let right = TupleMorphism::identity(cat, &x[i + 1..]);
    amalg(&amalg(&left, m), &right)
}

pub fn generators(zc: &ZsCategory, base: &[BasicOpen], depth: u32) -> Result<Catalogue, FullGroupError> {
    if base.is_empty() || base.iter().any(|u| u.is_empty()) {
        return Err(FullGroupError::Catalogue("the base object needs nonempty entries".into()));
    }
    if depth < 1 {
        return Err(FullGroupError::Catalogue("depth must be at least 1".into()));
    }
    let cat = zc.ground();
    let mut objects: Vec<Vec<BasicOpen>> = vec![base.to_vec()];
    let mut distance = vec![0usize];
    let mut index: HashMap<Vec<BasicOpen>, usize> = HashMap::from([(base.to_vec(), 0)]);
    let mut raw: Vec<(GenKind, TupleMorphism, String)> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(o) = queue.pop_front() {
        if distance[o] as u32 >= depth {
            continue;
        }
        let x = objects[o].clone();
        for (i, u) in x.iter().enumerate() {
            let v = u.root().target().clone();
            let mut local = vec![(GarsideFamily::standard().elements_at(cat, &v), "Δ".to_string())];
            if cat.rank() > 1 {
                for c in 0..cat.rank() {
                    let mut d = vec![0; cat.rank()];
                    d[c] = 1;
                    local.push((cat.morphisms_of_degree(&v, &d).map_err(BisectionError::from)?, format!("colour {c}")));
                }
            }
            for (fam, label) in local {
                let g = gamma(cat, &GammaSpec::new(v.clone(), u.exclusions().to_vec(), fam))?;
                let m = at_entry(zc, &x, i, &g);
                let src = m.source();
                if !index.contains_key(&src) {
                    index.insert(src.clone(), objects.len());
                    objects.push(src);
                    distance.push(distance[o] + 1);
                    queue.push_back(objects.len() - 1);
                }
                raw.push((GenKind::Caret, m, format!("{label} caret at entry {i} of {}", describe_object(zc, &x))));
            }
        }
    }
    for x in objects.clone() {
        for i in 0..x.len().saturating_sub(1) {
            if x[i] != x[i + 1] {
                continue;
            }
            let mut m = TupleMorphism::identity(cat, &x);
            m.pieces[i].base = i + 1;
            m.pieces[i + 1].base = i;
            raw.push((GenKind::Swap, m, format!("swap of entries {i},{} of {}", i + 1, describe_object(zc, &x))));
        }
        if let Some(aut) = zc.automaton() {
            for i in 0..x.len() {
                for s in 0..aut.state_count() as u32 {
                    let w = GroupWord::state(s);
                    let moved: Vec<Morphism> = x[i].relative_exclusions().iter().map(|f| zc.act(&w, f)).collect();
                    if BasicOpen::at_vertex(cat, x[i].root().target(), moved) != x[i] {
                        continue;
                    }
                    let mut m = TupleMorphism::identity(cat, &x);
                    m.pieces[i].twist = w;
                    raw.push((
                        GenKind::Twist,
                        m,
                        format!("state {} at entry {i} of {}", aut.state_name(s), describe_object(zc, &x)),
                    ));
                }
            }
        }
    }
    let mut generators = Vec::new();
    for (kind, m, description) in raw {
        let canonical = format!("{}|{}|{}", kind.prefix(), describe_object(zc, &m.target), format_tuple(zc, &m));
        generators.push(Generator {
            name: stable_name(kind, &canonical),
            kind,
            description,
            target: index[&m.target],
            source: index[&m.source()],
            morphism: m,
        });
    }
    Ok(Catalogue { objects, generators, distance })
}

impl Catalogue {
    pub fn base(&self) -> &[BasicOpen] {
        &self.objects[0]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    /// Letters `(generator, inverse)` whose target is object `o`.
    fn letters_from(&self, o: usize) -> Vec<WordLetter> {
        let mut out = Vec::new();
        for (k, g) in self.generators.iter().enumerate() {
            if g.target == o {
                out.push(WordLetter { gen: k, inverse: false });
            }
            if g.source == o {
                out.push(WordLetter { gen: k, inverse: true });
            }
        }
        out
    }

    fn letter_ends(&self, l: WordLetter) -> (usize, usize) {
        let g = &self.generators[l.gen];
        if l.inverse {
            (g.source, g.target)
        } else {
            (g.target, g.source)
        }
    }

    pub fn parse_word(&self, line: &str) -> Result<Word, FullGroupError> {
        let mut letters = Vec::new();
        for tok in line.split_whitespace() {
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let gen = self.find(name).ok_or_else(|| FullGroupError::UnknownGenerator(name.to_string()))?;
            letters.push(WordLetter { gen, inverse });
        }
        let w = Word(letters);
        self.check_word(&w)?;
        Ok(w)
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.0.iter()
            .map(|l| {
                let n = &self.generators[l.gen].name;
                if l.inverse {
                    format!("{n}^-1")
                } else {
                    n.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The word is a closed path at the base object.
    pub fn check_word(&self, w: &Word) -> Result<(), FullGroupError> {
        let mut cur = 0;
        for (k, &l) in w.0.iter().enumerate() {
            let (t, s) = self.letter_ends(l);
            if t != cur {
                return Err(FullGroupError::Word(format!("letter {} is not composable", k + 1)));
            }
            cur = s;
        }
        if cur != 0 {
            return Err(FullGroupError::Word("word does not return to the base object".into()));
        }
        Ok(())
    }

    /// Every closed word of length at most `max_len`.
    pub fn all_words(&self, max_len: usize) -> Vec<Word> {
        let mut out = vec![Word(Vec::new())];
        let mut frontier: Vec<(Vec<WordLetter>, usize)> = vec![(Vec::new(), 0)];
        for step in 0..max_len {
            let left = max_len - step - 1;
            let mut next = Vec::new();
            for (w, cur) in &frontier {
                for l in self.letters_from(*cur) {
                    let (_, s) = self.letter_ends(l);
                    if self.distance[s] > left {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.push(l);
                    if s == 0 {
                        out.push(Word(w2.clone()));
                    }
                    next.push((w2, s));
                }
            }
            frontier = next;
        }
        out
    }

    /// A seeded closed walk at the base with length at most `max_len`.
    pub fn random_word<R: Rng>(&self, rng: &mut R, max_len: usize) -> Word {
        let n = rng.gen_range(0..=max_len);
        let mut cur = 0;
        let mut letters = Vec::new();
        for step in 0..n {
            let left = n - step - 1;
            let cands: Vec<WordLetter> = self
                .letters_from(cur)
                .into_iter()
                .filter(|&l| self.distance[self.letter_ends(l).1] <= left)
                .collect();
            if cands.is_empty() {
                break;
            }
            // Avoid undoing the previous letter when there is a choice.
            let back = letters.last().map(|p: &WordLetter| WordLetter { gen: p.gen, inverse: !p.inverse });
            let fresh: Vec<WordLetter> = cands.iter().copied().filter(|&l| Some(l) != back).collect();
            let cands = if fresh.is_empty() { cands } else { fresh };
            let l = cands[rng.gen_range(0..cands.len())];
            cur = self.letter_ends(l).1;
            letters.push(l);
        }
        debug_assert_eq!(cur, 0);
        Word(letters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WordLetter {
    pub gen: usize,
    pub inverse: bool,
}

/// `l₁ l₂ ⋯ lₙ` with `lₙ` applied first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<WordLetter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| WordLetter { gen: l.gen, inverse: !l.inverse }).collect())
    }

    pub fn then(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(&other.0).copied().collect())
    }
}

/// `d·ζ ↦ c·(twist.ζ)` from entry `dom` of the source to entry `img` of the target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Row {
    pub dom: usize,
    pub d: Morphism,
    pub img: usize,
    pub c: Morphism,
    pub twist: GroupWord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub source: Vec<BasicOpen>,
    pub target: Vec<BasicOpen>,
    pub rows: Vec<Row>,
}

pub fn identity_table(zc: &ZsCategory, x: &[BasicOpen]) -> Table {
    let cat = zc.ground();
    let mut rows = Vec::new();
    for (j, u) in x.iter().enumerate() {
        for c in cylinder_cover(cat, u.root(), u.exclusions()) {
            rows.push(Row { dom: j, d: c.clone(), img: j, c, twist: GroupWord::identity() });
        }
    }
    Table { source: x.to_vec(), target: x.to_vec(), rows }
}

/// The prefix-exchange table of a tuple morphism.
pub fn tuple_table(zc: &ZsCategory, m: &TupleMorphism) -> Table {
    let cat = zc.ground();
    let mut rows = Vec::new();
    for (i, p) in m.pieces.iter().enumerate() {
        for x in cylinder_cover(cat, p.domain.root(), p.domain.exclusions()) {
            let (gx, phi) = zc.act_and_cocycle(&p.twist, &x);
            rows.push(Row { dom: i, d: x, img: p.base, c: compose_unchecked(&p.arrow, &gx), twist: phi });
        }
    }
    Table { source: m.source(), target: m.target.clone(), rows }
}

pub fn table_inverse(zc: &ZsCategory, t: &Table) -> Table {
    Table {
        source: t.target.clone(),
        target: t.source.clone(),
        rows: t
            .rows
            .iter()
            .map(|r| Row { dom: r.img, d: r.c.clone(), img: r.dom, c: r.d.clone(), twist: zc.simplify(&r.twist.inverse()) })
            .collect(),
    }
}

/// Splits a row by every edge of colour `j` after its domain prefix.
fn split_row(zc: &ZsCategory, r: &Row, j: usize) -> Vec<Row> {
    let cat = zc.ground();
    let v = r.d.source();
    cat.factor(j).out[v[j] as usize]
        .iter()
        .map(|&e| {
            let f = cat.edge_at(v, j, e).expect("edge from source");
            let (tf, phi) = zc.act_and_cocycle(&r.twist, &f);
            Row { dom: r.dom, d: compose_unchecked(&r.d, &f), img: r.img, c: compose_unchecked(&r.c, &tf), twist: phi }
        })
        .collect()
}

/// `g ∘ h`, refining `h` until every image prefix sits below a row of `g`.
pub fn table_multiply(zc: &ZsCategory, g: &Table, h: &Table) -> Result<Table, FullGroupError> {
    if h.target != g.source {
        return Err(FullGroupError::Table("tables over different sets".into()));
    }
    let mut by_entry: Vec<Vec<&Row>> = vec![Vec::new(); g.source.len()];
    for q in &g.rows {
        by_entry[q.dom].push(q);
    }
    let mut work: Vec<Row> = h.rows.iter().rev().cloned().collect();
    let mut rows = Vec::new();
    while let Some(r) = work.pop() {
        let mut handled = false;
        for q in &by_entry[r.img] {
            if left_divides(&q.d, &r.c) {
                let x = left_quotient_unchecked(&q.d, &r.c);
                let (tx, phi) = zc.act_and_cocycle(&q.twist, &x);
                rows.push(Row {
                    dom: r.dom,
                    d: r.d.clone(),
                    img: q.img,
                    c: compose_unchecked(&q.c, &tx),
                    twist: zc.simplify(&phi.then(&r.twist)),
                });
                handled = true;
                break;
            }
            if join(&q.d, &r.c).is_some() {
                let j = (0..q.d.rank()).find(|&j| q.d.path(j).len() > r.c.path(j).len()).expect("longer");
                let mut kids = split_row(zc, &r, j);
                kids.reverse();
                work.extend(kids);
                handled = true;
                break;
            }
        }
        if !handled {
            return Err(FullGroupError::Table(format!("image {} is not covered", zc.ground().format(&r.c))));
        }
    }
    Ok(Table { source: h.source.clone(), target: g.target.clone(), rows })
}

pub fn table_is_identity(zc: &ZsCategory, t: &Table) -> bool {
    t.source == t.target && t.rows.iter().all(|r| r.dom == r.img && r.d == r.c && zc.is_trivial(&r.twist))
}

pub fn word_to_table(zc: &ZsCategory, cat: &Catalogue, w: &Word) -> Result<Table, FullGroupError> {
    cat.check_word(w)?;
    let mut acc = identity_table(zc, cat.base());
    for l in &w.0 {
        let t = tuple_table(zc, &cat.generators[l.gen].morphism);
        let t = if l.inverse { table_inverse(zc, &t) } else { t };
        acc = table_multiply(zc, &acc, &t)?;
    }
    Ok(acc)
}

/// `α β⁻¹` with `α = pos₁ ⋯ posₘ` and `β⁻¹ = neg₁⁻¹ ⋯ negₙ⁻¹`.
#[derive(Debug, Clone)]
pub struct Fraction {
    pub pos: Vec<TupleMorphism>,
    pub neg: Vec<TupleMorphism>,
    pub steps: u64,
}

/// Moves every inverse letter to the right by rewriting `x⁻¹ y` as
/// `x' y'⁻¹` with `x x' = y y'` the lcm, and `x⁻¹ u` as `(u⁻¹ x)⁻¹` for a
/// unit `u`.  Each rewrite costs one step.
pub fn fraction_normalize(
    zc: &ZsCategory,
    letters: Vec<(TupleMorphism, bool)>,
    budget: u64,
) -> Result<Fraction, FullGroupError> {
    let mut w = letters;
    let mut steps = 0u64;
    loop {
        let mut tidy = Vec::with_capacity(w.len());
        for (m, neg) in w {
            if m.is_identity() {
                continue;
            }
            if neg && m.is_unit() {
                tidy.push((unit_inverse(zc, &m)?, false));
            } else {
                tidy.push((m, neg));
            }
        }
        w = tidy;
        let Some(i) = (0..w.len().saturating_sub(1)).find(|&i| w[i].1 && !w[i + 1].1) else { break };
        steps += 1;
        if steps > budget {
            return Err(FullGroupError::Budget(budget));
        }
        let x = &w[i].0;
        let y = &w[i + 1].0;
        if x.target != y.target {
            return Err(FullGroupError::Word("letters are not composable".into()));
        }
        let repl = if y.is_unit() {
            vec![(compose_tuple(zc, &unit_inverse(zc, y)?, x)?, true)]
        } else {
            let (xp, yp) = lcm_tuple(zc, x, y)?;
            vec![(xp, false), (yp, true)]
        };
        w.splice(i..i + 2, repl);
    }
    let (pos, neg): (Vec<_>, Vec<_>) = w.into_iter().partition(|(_, n)| !n);
    Ok(Fraction { pos: pos.into_iter().map(|p| p.0).collect(), neg: neg.into_iter().map(|p| p.0).collect(), steps })
}

impl Fraction {
    /// `(α, β)`, both from the common source to the base.
    pub fn sides(&self, zc: &ZsCategory, base: &[BasicOpen]) -> Result<(TupleMorphism, TupleMorphism), FullGroupError> {
        let cat = zc.ground();
        let mut alpha = TupleMorphism::identity(cat, base);
        for p in &self.pos {
            alpha = compose_tuple(zc, &alpha, p)?;
        }
        let mut beta = TupleMorphism::identity(cat, base);
        for n in self.neg.iter().rev() {
            beta = compose_tuple(zc, &beta, n)?;
        }
        Ok((alpha, beta))
    }
}

/// Greedy decomposition `h₁ ⋯ hₘ u` with canonical Δ-divisor heads and a
/// trailing unit.
#[derive(Debug, Clone)]
pub struct TupleNormalForm {
    pub factors: Vec<TupleMorphism>,
    pub unit: TupleMorphism,
}

/// `(σ, τ)` with `σ τ = α β` and `σ` the largest Δ-divisor of `α β`.
pub fn box_witness(
    zc: &ZsCategory,
    alpha: &TupleMorphism,
    beta: &TupleMorphism,
) -> Result<(TupleMorphism, TupleMorphism), FullGroupError> {
    Ok(delta_gcd(zc, &compose_tuple(zc, alpha, beta)?)?)
}

pub fn tuple_normal_form(zc: &ZsCategory, a: &TupleMorphism) -> Result<TupleNormalForm, FullGroupError> {
    let cat = zc.ground();
    let mut factors = Vec::new();
    let mut rest = a.clone();
    loop {
        let (h, r) = box_witness(zc, &rest, &TupleMorphism::identity(cat, &rest.source()))?;
        if h.is_identity() {
            if !r.is_unit() {
                return Err(FullGroupError::Bisection(BisectionError::Internal("trivial head on a non-unit".into())));
            }
            return Ok(TupleNormalForm { factors, unit: r });
        }
        factors.push(h);
        rest = r;
    }
}

impl TupleNormalForm {
    pub fn same_as(&self, zc: &ZsCategory, other: &TupleNormalForm) -> bool {
        self.factors == other.factors && tuples_equal(zc, &self.unit, &other.unit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Trivial,
    Nontrivial,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Trivial => "TRIVIAL",
            Verdict::Nontrivial => "NONTRIVIAL",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub verdict: Verdict,
    pub steps: u64,
    pub alpha: TupleNormalForm,
    pub beta: TupleNormalForm,
}

pub fn word_letters(cat: &Catalogue, w: &Word) -> Vec<(TupleMorphism, bool)> {
    w.0.iter().map(|l| (cat.generators[l.gen].morphism.clone(), l.inverse)).collect()
}

pub fn solve_word(zc: &ZsCategory, cat: &Catalogue, w: &Word, budget: u64) -> Result<Solution, FullGroupError> {
    cat.check_word(w)?;
    let frac = fraction_normalize(zc, word_letters(cat, w), budget)?;
    let (alpha, beta) = frac.sides(zc, cat.base())?;
    let alpha = tuple_normal_form(zc, &alpha)?;
    let beta = tuple_normal_form(zc, &beta)?;
    let verdict = if alpha.same_as(zc, &beta) { Verdict::Trivial } else { Verdict::Nontrivial };
    Ok(Solution { verdict, steps: frac.steps, alpha, beta })
}

pub fn oracle_verdict(zc: &ZsCategory, cat: &Catalogue, w: &Word) -> Result<Verdict, FullGroupError> {
    let t = word_to_table(zc, cat, w)?;
    Ok(if table_is_identity(zc, &t) { Verdict::Trivial } else { Verdict::Nontrivial })
}

pub fn format_normal_form(zc: &ZsCategory, nf: &TupleNormalForm) -> String {
    let mut parts: Vec<String> = nf.factors.iter().map(|f| format_tuple(zc, f)).collect();
    parts.push(format_tuple(zc, &nf.unit));
    parts.join(" · ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::loaded;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fx {
        zc: ZsCategory,
        cat: Catalogue,
    }

    fn fx(name: &str, depth: u32) -> Fx {
        let l = loaded(name);
        let cat = generators(&l.zc, &l.base, depth).unwrap();
        Fx { zc: l.zc, cat }
    }

    impl Fx {
        fn gen(&self, description: &str) -> usize {
            self.cat
                .generators
                .iter()
                .position(|g| g.description.starts_with(description))
                .unwrap_or_else(|| panic!("no generator {description}"))
        }

        fn word(&self, letters: &[(&str, bool)]) -> Word {
            let w = Word(letters.iter().map(|&(d, inverse)| WordLetter { gen: self.gen(d), inverse }).collect());
            self.cat.check_word(&w).unwrap();
            w
        }

        fn solve(&self, w: &Word) -> Verdict {
            solve_word(&self.zc, &self.cat, w, DEFAULT_STEP_BUDGET).unwrap().verdict
        }

        fn oracle(&self, w: &Word) -> Verdict {
            oracle_verdict(&self.zc, &self.cat, w).unwrap()
        }
    }

    const CARET1: &str = "Δ caret at entry 0 of (X(v))";
    const CARET2_0: &str = "Δ caret at entry 0 of (X(v), X(v))";
    const CARET2_1: &str = "Δ caret at entry 1 of (X(v), X(v))";
    const SWAP2: &str = "swap of entries 0,1 of (X(v), X(v))";

    #[test]
    fn depth_one_catalogue_for_two_loops() {
        let f = fx("o2", 1);
        assert_eq!(f.cat.objects.len(), 2);
        let names: Vec<&str> = f.cat.generators.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["caret-f798df15", "swap-2cf39584"]);
        assert_eq!(fx("o2", 2).cat.generators.len(), 6);
        let g = fx("grigorchuk", 1);
        assert_eq!(g.cat.generators.iter().filter(|x| x.kind == GenKind::Twist).count(), 4 + 8);
    }

    #[test]
    fn table_group_laws() {
        let f = fx("o2", 2);
        let z = &f.zc;
        let tables: Vec<Table> = f.cat.generators.iter().map(|g| tuple_table(z, &g.morphism)).collect();
        for t in &tables {
            let inv = table_inverse(z, t);
            assert!(table_is_identity(z, &table_multiply(z, t, &inv).unwrap()));
            assert!(table_is_identity(z, &table_multiply(z, &inv, t).unwrap()));
        }
        for a in &tables {
            for b in &tables {
                for c in &tables {
                    let (Ok(ab), Ok(bc)) = (table_multiply(z, a, b), table_multiply(z, b, c)) else { continue };
                    let (Ok(l), Ok(r)) = (table_multiply(z, &ab, c), table_multiply(z, a, &bc)) else { continue };
                    let diff = table_multiply(z, &table_inverse(z, &l), &r).unwrap();
                    assert!(table_is_identity(z, &diff));
                }
            }
        }
    }

    #[test]
    fn swap_relations_in_v() {
        let f = fx("o2", 2);
        let sigma = f.word(&[(CARET1, false), (SWAP2, false), (CARET1, true)]);
        assert_eq!(f.solve(&sigma), Verdict::Nontrivial);
        assert_eq!(f.oracle(&sigma), Verdict::Nontrivial);
        let sq = sigma.then(&sigma);
        assert_eq!(f.solve(&sq), Verdict::Trivial);
        assert_eq!(f.oracle(&sq), Verdict::Trivial);
        let t = f.word(&[(CARET1, false), (SWAP2, false), (SWAP2, false), (CARET1, true)]);
        assert!(table_is_identity(&f.zc, &word_to_table(&f.zc, &f.cat, &t).unwrap()));
    }

    #[test]
    fn disjoint_carets_commute() {
        let f = fx("o2", 3);
        let w = f.word(&[
            (CARET1, false),
            (CARET2_0, false),
            ("Δ caret at entry 2 of (X(v), X(v), X(v))", false),
            ("Δ caret at entry 0 of (X(v), X(v), X(v))", true),
            (CARET2_1, true),
            (CARET1, true),
        ]);
        assert_eq!(f.solve(&w), Verdict::Trivial);
        assert_eq!(f.oracle(&w), Verdict::Trivial);
        let bad = f.word(&[
            (CARET1, false),
            (CARET2_0, false),
            ("Δ caret at entry 1 of (X(v), X(v), X(v))", false),
            ("Δ caret at entry 0 of (X(v), X(v), X(v))", true),
            (CARET2_1, true),
            (CARET1, true),
        ]);
        assert_eq!(f.solve(&bad), Verdict::Nontrivial);
        assert_eq!(f.oracle(&bad), Verdict::Nontrivial);
    }

    #[test]
    fn fraction_examples() {
        let f = fx("o2", 2);
        let caret = &f.cat.generators[f.gen(CARET1)].morphism;
        let fr = fraction_normalize(&f.zc, vec![(caret.clone(), true), (caret.clone(), false)], 100).unwrap();
        assert!(fr.pos.is_empty() && fr.neg.is_empty());

        let c0 = &f.cat.generators[f.gen(CARET2_0)].morphism;
        let swap = &f.cat.generators[f.gen(SWAP2)].morphism;
        let fr = fraction_normalize(&f.zc, vec![(c0.clone(), true), (swap.clone(), false), (c0.clone(), false)], 100).unwrap();
        assert!(fr.pos.len() <= 1 && fr.neg.len() <= 1, "{} {}", fr.pos.len(), fr.neg.len());

        let long = f.word(&[(CARET1, false), (CARET2_0, false), (CARET2_1, true), (CARET2_0, false), (CARET2_0, true), (CARET1, true)]);
        assert!(matches!(
            fraction_normalize(&f.zc, word_letters(&f.cat, &long), 0),
            Err(FullGroupError::Budget(0))
        ));
    }

    #[test]
    fn fraction_matches_word_as_tables() {
        let f = fx("o2xo2", 2);
        let z = &f.zc;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let w = f.cat.random_word(&mut rng, 6);
            let fr = fraction_normalize(z, word_letters(&f.cat, &w), DEFAULT_STEP_BUDGET).unwrap();
            let (alpha, beta) = fr.sides(z, f.cat.base()).unwrap();
            let t = table_multiply(z, &tuple_table(z, &alpha), &table_inverse(z, &tuple_table(z, &beta))).unwrap();
            let back = table_multiply(z, &table_inverse(z, &word_to_table(z, &f.cat, &w).unwrap()), &t).unwrap();
            assert!(table_is_identity(z, &back), "{}", f.cat.format_word(&w));
        }
    }

    #[test]
    fn box_witness_properties() {
        let f = fx("o2", 2);
        let z = &f.zc;
        let caret = f.cat.generators[f.gen(CARET1)].morphism.clone();
        let c0 = f.cat.generators[f.gen(CARET2_0)].morphism.clone();
        let (s, t) = box_witness(z, &caret, &c0).unwrap();
        assert_eq!(s, caret);
        assert_eq!(t, c0);
        let (s2, t2) = box_witness(z, &s, &t).unwrap();
        assert_eq!((s2, t2), (s, t));

        let id = TupleMorphism::identity(z.ground(), &c0.source());
        let half = c0.clone();
        let (s, _) = box_witness(z, &half, &id).unwrap();
        assert_eq!(s, half);
    }

    #[test]
    fn twist_words_give_twisted_tables() {
        let f = fx("grigorchuk", 1);
        let z = &f.zc;
        let w = f.word(&[("state b at entry 0 of (X(v))", false)]);
        let t = word_to_table(z, &f.cat, &w).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].d, t.rows[0].c);
        assert_eq!(z.format_word(&t.rows[0].twist), "b");
        assert_eq!(f.solve(&w), Verdict::Nontrivial);
        let bcd = f.word(&[
            ("state b at entry 0 of (X(v))", false),
            ("state c at entry 0 of (X(v))", false),
            ("state d at entry 0 of (X(v))", false),
        ]);
        assert_eq!(f.solve(&bcd), Verdict::Trivial);
        assert_eq!(f.oracle(&bcd), Verdict::Trivial);
        // d = (1, b): the twist equals b on the right leaf of a caret.
        let split = f.word(&[
            ("state d at entry 0 of (X(v))", false),
            (CARET1, false),
            ("state b at entry 1 of (X(v), X(v))", true),
            (CARET1, true),
        ]);
        assert_eq!(f.solve(&split), Verdict::Trivial);
        assert_eq!(f.oracle(&split), Verdict::Trivial);
        let moved = f.word(&[(CARET1, false), ("state d at entry 0 of (X(v), X(v))", false), (CARET1, true)]);
        assert_eq!(f.solve(&moved), Verdict::Nontrivial);
        assert_eq!(f.oracle(&moved), Verdict::Nontrivial);
    }

    #[test]
    fn closed_words() {
        let f = fx("o2", 1);
        let all = f.cat.all_words(4);
        assert!(all.iter().all(|w| f.cat.check_word(w).is_ok()));
        assert!(all.iter().any(|w| w.len() == 4));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w = f.cat.random_word(&mut rng, 9);
            assert!(w.len() <= 9);
            f.cat.check_word(&w).unwrap();
            let ww = w.then(&w.inverse());
            assert_eq!(f.solve(&ww), Verdict::Trivial);
        }
        assert!(matches!(f.cat.parse_word("nope"), Err(FullGroupError::UnknownGenerator(_))));
        assert!(f.cat.parse_word("swap-2cf39584").is_err());
    }
}
