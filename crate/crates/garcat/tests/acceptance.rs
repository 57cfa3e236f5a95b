//! Acceptance criteria 1–8.  Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) and then asserts.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use garcat::bisections::{
    check_partition, check_partition_sampled, complete_to_gamma, compose_tuple, delta, gamma, in_s, lcm_tuple, range,
    s_exactly, BasicOpen, GammaSpec, Piece, TupleMorphism,
};
use garcat::category::{degrees_up_to, left_divides, Category, Morphism, ObjectId};
use garcat::cli::{bundled_spec, load_spec, Loaded, BUNDLED};
use garcat::fullgroup::{
    fraction_normalize, generators, oracle_verdict, solve_word, word_letters, Catalogue, Word, DEFAULT_STEP_BUDGET,
};
use garcat::garside::{is_greedy_pair, normal_form, verify_garside_axioms, GarsideFamily};
use garcat::zappa_szep::ZsCategory;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, ok: bool, detail: &str) {
    let line = format!("criterion {n}: {}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn load(name: &str) -> Loaded {
    load_spec(bundled_spec(name).unwrap()).unwrap()
}

struct Tally {
    words: usize,
    disagreements: Vec<String>,
    max_steps: u64,
    errors: Vec<String>,
}

fn compare(zc: &ZsCategory, cat: &Catalogue, words: &[Word]) -> Tally {
    let mut t = Tally { words: 0, disagreements: Vec::new(), max_steps: 0, errors: Vec::new() };
    for w in words {
        t.words += 1;
        let sol = match solve_word(zc, cat, w, DEFAULT_STEP_BUDGET) {
            Ok(s) => s,
            Err(e) => {
                t.errors.push(format!("{}: {e}", cat.format_word(w)));
                continue;
            }
        };
        t.max_steps = t.max_steps.max(sol.steps);
        match oracle_verdict(zc, cat, w) {
            Ok(v) if v == sol.verdict => {}
            Ok(v) => t.disagreements.push(format!("{}: solver {} oracle {v}", cat.format_word(w), sol.verdict)),
            Err(e) => t.errors.push(format!("{}: oracle {e}", cat.format_word(w))),
        }
    }
    t
}

fn random_words(cat: &Catalogue, seed: u64, n: usize, max_len: usize) -> Vec<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| cat.random_word(&mut rng, max_len)).collect()
}

fn summary(t: &Tally) -> (bool, String) {
    let ok = t.disagreements.is_empty() && t.errors.is_empty();
    let mut s = format!("{} words, {} disagreements, {} errors", t.words, t.disagreements.len(), t.errors.len());
    if let Some(d) = t.disagreements.first().or(t.errors.first()) {
        s.push_str(&format!("; first: {d}"));
    }
    (ok, s)
}

#[test]
fn criterion_1_two_loop_graph() {
    let start = Instant::now();
    let l = load("o2");
    let mut tallies = Vec::new();
    for depth in [1, 2] {
        let cat = generators(&l.zc, &l.base, depth).unwrap();
        tallies.push(compare(&l.zc, &cat, &cat.all_words(4)));
    }
    let cat = generators(&l.zc, &l.base, 3).unwrap();
    tallies.push(compare(&l.zc, &cat, &random_words(&cat, 1, 10_000, 10)));
    let secs = start.elapsed().as_secs_f64();
    let exhaustive: usize = tallies[..2].iter().map(|t| t.words).sum();
    let mut ok = secs <= 300.0;
    let mut detail = format!("exhaustive {exhaustive} words (depth 1 and depth 2 catalogues, length ≤ 4)");
    for t in &tallies {
        let (k, s) = summary(t);
        ok &= k;
        detail.push_str(&format!("; {s}"));
    }
    detail.push_str(&format!("; {secs:.1}s"));
    report(1, ok, &detail);
}

#[test]
fn criterion_2_product_of_two_loop_graphs() {
    let l = load("o2xo2");
    let cat = generators(&l.zc, &l.base, 2).unwrap();
    let t = compare(&l.zc, &cat, &random_words(&cat, 2, 10_000, 8));
    let (ok, s) = summary(&t);
    report(2, ok, &s);
}

#[test]
fn criterion_3_automaton_configuration() {
    let l = load("grigorchuk");
    let aut = l.zc.automaton().unwrap();
    let rels = ["a.a", "b.b", "c.c", "d.d", "b.c.d"];
    let trivial: Vec<bool> = rels.iter().map(|r| aut.is_trivial(&aut.parse_word(r).unwrap())).collect();
    let cat = generators(&l.zc, &l.base, 2).unwrap();
    let t = compare(&l.zc, &cat, &random_words(&cat, 3, 1_000, 6));
    let (ok, s) = summary(&t);
    let rel_ok = trivial.iter().all(|&b| b);
    report(3, ok && rel_ok, &format!("relations a², b², c², d², bcd trivial: {rel_ok}; {s}"));
}

#[test]
fn criterion_4_garside_axioms() {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in BUNDLED {
        let l = load(name);
        let c = l.zc.ground();
        let r = verify_garside_axioms(c, &GarsideFamily::standard(), &vec![3; c.rank()]);
        ok &= r.passed() && r.checks.len() == 6;
        parts.push(match r.first_failure() {
            None => format!("{name}: {} checks pass", r.checks.len()),
            Some(f) => format!("{name}: {} fails ({:?})", f.name, f.counterexample),
        });
    }
    report(4, ok, &parts.join("; "));
}

/// Every sequence of family elements with product `a` whose consecutive
/// pairs are greedy.
fn brute_normal_decompositions(c: &Category, a: &Morphism) -> Vec<Vec<Morphism>> {
    if a.is_identity() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let fam = GarsideFamily::standard().elements_at(c, a.target());
    for s in fam.iter().filter(|s| left_divides(s, a)) {
        let rest = c.left_quotient(s, a).unwrap();
        for mut tail in brute_normal_decompositions(c, &rest) {
            if tail.first().map_or(true, |t| is_greedy_pair(c, s, t)) {
                tail.insert(0, s.clone());
                out.push(tail);
            }
        }
    }
    out
}

#[test]
fn criterion_5_normal_forms() {
    let mut checked = 0usize;
    let mut bad: Vec<String> = Vec::new();
    for name in BUNDLED {
        let l = load(name);
        let c = l.zc.ground();
        for v in c.objects() {
            for a in c.morphisms_up_to_degree(&v, &vec![4; c.rank()]) {
                checked += 1;
                let nf = normal_form(c, &a);
                let mut prod = c.identity(&v);
                for f in &nf.factors {
                    prod = c.compose(&prod, f).unwrap();
                }
                let greedy = nf.factors.windows(2).all(|w| is_greedy_pair(c, &w[0], &w[1]));
                let all = brute_normal_decompositions(c, &a);
                if prod != a || !greedy || all != vec![nf.factors.clone()] {
                    bad.push(format!("{name}: {}", c.format(&a)));
                }
            }
        }
    }
    report(5, bad.is_empty(), &format!("{checked} morphisms checked, {} failures {:?}", bad.len(), bad.first()));
}

fn subsets_up_to_two(items: &[Morphism]) -> Vec<Vec<Morphism>> {
    let mut out = vec![Vec::new()];
    for (i, a) in items.iter().enumerate() {
        out.push(vec![a.clone()]);
        for b in &items[i + 1..] {
            out.push(vec![a.clone(), b.clone()]);
        }
    }
    out
}

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    // Restricted growth strings.
    let mut out = Vec::new();
    fn go(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            if i == 0 && b > 0 {
                break;
            }
            cur.push(b);
            go(i + 1, n, cur, if i == 0 { 0 } else { max.max(b) }, out);
            cur.pop();
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    go(0, n, &mut Vec::new(), 0, &mut out);
    out.sort();
    out.dedup();
    out
}

fn lcp(c: &Category, ms: &[&Morphism]) -> Morphism {
    let mut d = ms[0].degree();
    for m in &ms[1..] {
        let p = garcat::category::common_prefix_len(ms[0], m);
        d = d.iter().zip(&p).map(|(x, y)| *x.min(y)).collect();
    }
    c.factorize_at_degree(ms[0], &d).unwrap().0
}

/// The piece whose range is exactly the union of the given cylinders of
/// common degree `top`, below their longest common prefix.
fn block_piece(c: &Category, block: &[&Morphism], top: &[u32], base: usize) -> Piece {
    let h = lcp(c, block);
    let rest: Vec<u32> = top.iter().zip(h.degree()).map(|(x, y)| x - y).collect();
    let inside: BTreeSet<&Morphism> = block.iter().copied().collect();
    let excl: Vec<Morphism> = c
        .morphisms_of_degree(h.source(), &rest)
        .unwrap()
        .into_iter()
        .filter(|t| !inside.contains(&c.compose(&h, t).unwrap()))
        .collect();
    Piece {
        base,
        domain: BasicOpen::at_vertex(c, h.source(), excl),
        arrow: h,
        twist: Default::default(),
    }
}

#[test]
fn criterion_6_gamma_partitions_and_delta_divisors() {
    let mut gammas = 0usize;
    let mut divisors = 0usize;
    let mut bad: Vec<String> = Vec::new();
    for name in BUNDLED {
        let l = load(name);
        let zc = &l.zc;
        let c = zc.ground();
        let v: ObjectId = c.objects()[0].clone();
        let ones = vec![1; c.rank()];
        let shallow: Vec<Morphism> =
            c.morphisms_up_to_degree(&v, &vec![2; c.rank()]).into_iter().filter(|m| !m.is_identity()).collect();
        for excl in subsets_up_to_two(&shallow) {
            let target = BasicOpen::at_vertex(c, &v, excl.clone());
            if target.is_empty() {
                continue;
            }
            for fam in [GarsideFamily::standard().elements_at(c, &v), s_exactly(c, &v, 2)] {
                let g = match gamma(c, &GammaSpec::new(v.clone(), excl.clone(), fam)) {
                    Ok(g) => g,
                    Err(e) => {
                        bad.push(format!("{name}: γ failed: {e}"));
                        continue;
                    }
                };
                gammas += 1;
                if let Err(e) = check_partition(zc, &g).and_then(|_| check_partition_sampled(zc, &g, &vec![4; c.rank()])) {
                    bad.push(format!("{name} {}: {e}", target.format(c)));
                }
            }
        }

        // Right divisors of Δ(x) divide Δ at their own source, for every
        // left divisor given by grouping the atoms of x.
        let atoms = c.morphisms_of_degree(&v, &ones).unwrap();
        let small: Vec<Vec<Morphism>> = subsets_up_to_two(&GarsideFamily::standard().elements_at(c, &v));
        for excl in small {
            let x = vec![BasicOpen::at_vertex(c, &v, excl.clone())];
            if x[0].is_empty() {
                continue;
            }
            let live: Vec<&Morphism> = atoms.iter().filter(|a| x[0].contains_cylinder(a)).collect();
            let d_x = delta(c, &x).unwrap();
            for blocks in set_partitions(live.len()) {
                let nb = blocks.iter().max().map_or(0, |m| m + 1);
                let mut pieces = Vec::new();
                for b in 0..nb {
                    let members: Vec<&Morphism> = live.iter().zip(&blocks).filter(|(_, &k)| k == b).map(|(a, _)| *a).collect();
                    pieces.push(block_piece(c, &members, &ones, 0));
                }
                let d = TupleMorphism { target: x.clone(), pieces };
                let src = d.source();
                let mut cp = Vec::new();
                for (a, &k) in live.iter().zip(&blocks) {
                    let h = &d.pieces[k].arrow;
                    cp.push(Piece {
                        base: k,
                        arrow: c.left_quotient(h, a).unwrap(),
                        domain: BasicOpen::at_vertex(c, a.source(), Vec::<Morphism>::new()),
                        twist: Default::default(),
                    });
                }
                let rdiv = TupleMorphism { target: src.clone(), pieces: cp };
                divisors += 1;
                let ok_split = in_s(&d)
                    && check_partition(zc, &d).is_ok()
                    && compose_tuple(zc, &d, &rdiv).map(|p| p.pieces.len() == d_x.pieces.len()).unwrap_or(false);
                let back = compose_tuple(zc, &d, &rdiv).ok();
                let sorted_eq = back.map(|p| {
                    let mut a: Vec<_> = p.pieces.iter().map(|q| (q.arrow.clone(), q.domain.clone())).collect();
                    let mut b: Vec<_> = d_x.pieces.iter().map(|q| (q.arrow.clone(), q.domain.clone())).collect();
                    a.sort();
                    b.sort();
                    a == b
                });
                let divides = match complete_to_gamma(zc, &rdiv, 1) {
                    Ok(w) => compose_tuple(zc, &rdiv, &w).ok() == Some(delta(c, &src).unwrap()),
                    Err(_) => false,
                };
                if !ok_split || sorted_eq != Some(true) || !divides {
                    bad.push(format!("{name}: divisor grouping {blocks:?} of {}", x[0].format(c)));
                }
            }
        }
    }
    report(
        6,
        bad.is_empty(),
        &format!("{gammas} γ partitions, {divisors} Δ divisors, {} failures {:?}", bad.len(), bad.first()),
    );
}

/// A random element of 𝐒 at `n` full copies of the vertex: each entry is
/// cut along a random grouping of its atoms, then entries are permuted.
fn random_s(c: &Category, v: &ObjectId, n: usize, rng: &mut ChaCha8Rng) -> TupleMorphism {
    let ones = vec![1; c.rank()];
    let atoms = c.morphisms_of_degree(v, &ones).unwrap();
    let parts = set_partitions(atoms.len());
    let x: Vec<BasicOpen> = (0..n).map(|_| BasicOpen::full(c.identity(v))).collect();
    let mut pieces = Vec::new();
    for j in 0..n {
        let blocks = parts.choose(rng).unwrap();
        let nb = blocks.iter().max().unwrap() + 1;
        for b in 0..nb {
            let members: Vec<&Morphism> = atoms.iter().zip(blocks).filter(|(_, &k)| k == b).map(|(a, _)| a).collect();
            pieces.push(block_piece(c, &members, &ones, j));
        }
    }
    pieces.shuffle(rng);
    TupleMorphism { target: x, pieces }
}

/// Left divisibility restricted to target entry `j`, for twist-free tuples.
fn divides_on(zc: &ZsCategory, l: &TupleMorphism, m: &TupleMorphism, j: usize) -> bool {
    let c = zc.ground();
    let rl: Vec<BasicOpen> = l.pieces.iter().map(|p| range(zc, p)).collect();
    m.pieces.iter().filter(|p| p.base == j).all(|p| {
        let rp = range(zc, p);
        l.pieces.iter().zip(&rl).any(|(q, rq)| q.base == j && left_divides(&q.arrow, &p.arrow) && rp.is_subset(c, rq))
    })
}

/// All groupings of the degree-`top` cylinders of one entry into pieces.
fn entry_multiples(c: &Category, v: &ObjectId, top: &[u32], j: usize, n: usize) -> Vec<TupleMorphism> {
    let cyl = c.morphisms_of_degree(v, top).unwrap();
    let x: Vec<BasicOpen> = (0..n).map(|_| BasicOpen::full(c.identity(v))).collect();
    set_partitions(cyl.len())
        .into_iter()
        .map(|blocks| {
            let nb = blocks.iter().max().unwrap() + 1;
            let pieces = (0..nb)
                .map(|b| {
                    let members: Vec<&Morphism> = cyl.iter().zip(&blocks).filter(|(_, &k)| k == b).map(|(a, _)| a).collect();
                    block_piece(c, &members, top, j)
                })
                .collect();
            TupleMorphism { target: x.clone(), pieces }
        })
        .collect()
}

/// Random groupings of the degree-`top` cylinders, built by splitting
/// prefixes at random and then merging random neighbours.
fn sampled_multiples(c: &Category, v: &ObjectId, top: &[u32], j: usize, n: usize, rng: &mut ChaCha8Rng, count: usize) -> Vec<TupleMorphism> {
    let x: Vec<BasicOpen> = (0..n).map(|_| BasicOpen::full(c.identity(v))).collect();
    let cyl = c.morphisms_of_degree(v, top).unwrap();
    let mut out = Vec::new();
    for _ in 0..count {
        let mut leaves = vec![c.identity(v)];
        loop {
            let splittable: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i].degree() != top).collect();
            if splittable.is_empty() || rng.gen_bool(0.15) {
                break;
            }
            let i = *splittable.choose(rng).unwrap();
            let leaf = leaves.remove(i);
            let cols: Vec<usize> = (0..c.rank()).filter(|&k| leaf.degree()[k] < top[k]).collect();
            let k = *cols.choose(rng).unwrap();
            let mut d = vec![0; c.rank()];
            d[k] = 1;
            leaves.extend(c.extensions_of_degree(&leaf, &leaf.degree().iter().zip(&d).map(|(a, b)| a + b).collect::<Vec<_>>()));
        }
        let mut label: Vec<usize> = cyl.iter().map(|z| leaves.iter().position(|l| left_divides(l, z)).unwrap()).collect();
        for _ in 0..rng.gen_range(0..3) {
            let a = rng.gen_range(0..leaves.len());
            let b = rng.gen_range(0..leaves.len());
            for l in label.iter_mut() {
                if *l == b {
                    *l = a;
                }
            }
        }
        let ids: BTreeSet<usize> = label.iter().copied().collect();
        let pieces = ids
            .into_iter()
            .map(|b| {
                let members: Vec<&Morphism> = cyl.iter().zip(&label).filter(|(_, &k)| k == b).map(|(a, _)| a).collect();
                block_piece(c, &members, top, j)
            })
            .collect();
        out.push(TupleMorphism { target: x.clone(), pieces });
    }
    out
}

#[test]
fn criterion_7_lcm_universal_property() {
    let mut pairs = 0usize;
    let mut multiples = 0usize;
    let mut bad: Vec<String> = Vec::new();
    for (name, exhaustive) in [("o2", true), ("o2xo2", false)] {
        let l = load(name);
        let zc = &l.zc;
        let c = zc.ground();
        let v = c.objects()[0].clone();
        let top = vec![3; c.rank()];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exhaustive_lists: Vec<Vec<TupleMorphism>> =
            if exhaustive { (0..2).map(|j| entry_multiples(c, &v, &top, j, 2)).collect() } else { Vec::new() };
        for _ in 0..100 {
            let n = rng.gen_range(1..=2);
            let a = random_s(c, &v, n, &mut rng);
            let b = random_s(c, &v, n, &mut rng);
            pairs += 1;
            let (ap, bp) = match lcm_tuple(zc, &a, &b) {
                Ok(x) => x,
                Err(e) => {
                    bad.push(format!("{name}: lcm failed: {e}"));
                    continue;
                }
            };
            let lab = compose_tuple(zc, &a, &ap).unwrap();
            if lab != compose_tuple(zc, &b, &bp).unwrap() || !in_s(&ap) || !in_s(&bp) {
                bad.push(format!("{name}: completions are not in S or do not agree"));
                continue;
            }
            // Divisibility is decided entry by entry, so common multiples
            // are checked one target entry at a time.
            for j in 0..n {
                let cands: Vec<TupleMorphism> = if exhaustive {
                    exhaustive_lists[j].iter().map(|m| TupleMorphism { target: a.target.clone(), pieces: m.pieces.clone() }).collect()
                } else {
                    sampled_multiples(c, &v, &top, j, n, &mut rng, 400)
                };
                for m in &cands {
                    if divides_on(zc, &a, m, j) && divides_on(zc, &b, m, j) {
                        multiples += 1;
                        if !divides_on(zc, &lab, m, j) {
                            bad.push(format!("{name}: a common multiple avoids the lcm"));
                        }
                    }
                }
            }
        }
    }
    report(
        7,
        bad.is_empty(),
        &format!(
            "{pairs} pairs, {multiples} common multiples checked (exhaustive on o2, sampled on o2xo2), {} failures {:?}",
            bad.len(),
            bad.first()
        ),
    );
}

#[test]
fn criterion_8_termination_accounting() {
    let mut max_o2 = 0u64;
    let mut max_all = 0u64;
    let mut errors = Vec::new();
    let corpora: [(&str, u32, u64, usize, usize); 3] =
        [("o2", 3, 1, 10_000, 10), ("o2xo2", 2, 2, 10_000, 8), ("grigorchuk", 2, 3, 1_000, 6)];
    for (name, depth, seed, n, len) in corpora {
        let l = load(name);
        let cat = generators(&l.zc, &l.base, depth).unwrap();
        let mut words = random_words(&cat, seed, n, len);
        if name == "o2" {
            for d in [1, 2] {
                let small = generators(&l.zc, &l.base, d).unwrap();
                for w in small.all_words(4) {
                    match fraction_normalize(&l.zc, word_letters(&small, &w), DEFAULT_STEP_BUDGET) {
                        Ok(f) => max_o2 = max_o2.max(f.steps),
                        Err(e) => errors.push(format!("{name}: {e}")),
                    }
                }
            }
        }
        for w in words.drain(..) {
            match fraction_normalize(&l.zc, word_letters(&cat, &w), DEFAULT_STEP_BUDGET) {
                Ok(f) => {
                    max_all = max_all.max(f.steps);
                    if name == "o2" {
                        max_o2 = max_o2.max(f.steps);
                    }
                }
                Err(e) => errors.push(format!("{name}: {e}")),
            }
        }
    }
    let ok = errors.is_empty() && max_o2 < 100_000;
    report(
        8,
        ok,
        &format!(
            "max steps on o2 (length ≤ 10): {max_o2}; max over all corpora: {max_all}; budget {DEFAULT_STEP_BUDGET}; {} budget errors",
            errors.len()
        ),
    );
}

#[test]
fn degree_helper_is_lexicographic() {
    assert_eq!(degrees_up_to(&[1, 1]), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
}
