//! Complement search, tiling corpora, a bounded tiles-Z decision and
//! harnesses that scan corpora for counterexamples to open conjectures.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::cyclotomic;
use crate::error::{Error, Result};
use crate::fibers;
use crate::multiset::Multiset;
use crate::reductions::{self, Side};
use crate::saturation;
use crate::tiling::{self, TilingPair};
use crate::zmod::Modulus;

fn proper_div_table(a: &Multiset) -> Result<Vec<bool>> {
    let m = a.modulus();
    let d = tiling::div(a)?;
    let mut t: Vec<bool> = (0..m.num_divisors()).map(|k| d.contains_index(k)).collect();
    // the divisor M itself is always present and never excludes anything
    t[m.index_of_divisor(m.value())?] = false;
    Ok(t)
}

fn check_tile_candidate(a: &Multiset) -> Result<u64> {
    let m = a.modulus();
    if !a.is_set() {
        return Err(Error::InvalidArgument("A must be a set".into()));
    }
    let k = a.support_size() as u64;
    if k == 0 || m.value() % k != 0 {
        return Err(Error::InvalidArgument(format!("|A| = {k} does not divide {}", m.value())));
    }
    Ok(m.value() / k)
}

struct Cover<'a> {
    m: &'a Modulus,
    a: Vec<u64>,
    excluded: Vec<bool>,
    need: usize,
    nodes: &'a AtomicU64,
    budget: u64,
    limit: Option<usize>,
}

impl Cover<'_> {
    fn fits(&self, covered: &[bool], chosen: &[u64], b: u64) -> bool {
        let m = self.m;
        self.a.iter().all(|&x| !covered[m.add(x, b) as usize])
            && chosen.iter().all(|&c| !self.excluded[m.gcd_index(m.sub(b, c))])
    }

    fn candidates(&self, covered: &[bool], chosen: &[u64], from: usize) -> (usize, Vec<u64>) {
        let m = self.m;
        let u = (from..covered.len()).find(|&z| !covered[z]).expect("cover is incomplete");
        let mut c: Vec<u64> =
            self.a.iter().map(|&x| m.sub(u as u64, x)).filter(|&b| self.fits(covered, chosen, b)).collect();
        c.sort_unstable();
        (u, c)
    }

    fn place(&self, covered: &mut [bool], b: u64, on: bool) {
        for &x in &self.a {
            covered[self.m.add(x, b) as usize] = on;
        }
    }

    fn run(&self, covered: &mut [bool], chosen: &mut Vec<u64>, from: usize, out: &mut Vec<Vec<u64>>) -> Result<()> {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(Error::BudgetExceeded(self.budget));
        }
        if chosen.len() == self.need {
            let mut b = chosen.clone();
            b.sort_unstable();
            out.push(b);
            return Ok(());
        }
        let (u, cands) = self.candidates(covered, chosen, from);
        for b in cands {
            if self.limit.is_some_and(|l| out.len() >= l) {
                return Ok(());
            }
            self.place(covered, b, true);
            chosen.push(b);
            self.run(covered, chosen, u + 1, out)?;
            chosen.pop();
            self.place(covered, b, false);
        }
        Ok(())
    }
}

/// All `B` with `0 in B` and `A ⊕ B = Z_M`, sorted. The search always covers
/// the smallest uncovered residue next and rejects any `b` with
/// `(b - b', M) in Div(A) \ {M}`. The first branching is split across
/// threads; more than `budget` search nodes gives [`Error::BudgetExceeded`].
pub fn enumerate_complements(a: &Multiset, budget: u64) -> Result<Vec<Vec<u64>>> {
    complements(a, budget, None, true)
}

/// Like [`enumerate_complements`] but single-threaded and stopping after
/// `limit` complements (when given).
pub fn complements(a: &Multiset, budget: u64, limit: Option<usize>, parallel: bool) -> Result<Vec<Vec<u64>>> {
    let need = check_tile_candidate(a)? as usize;
    let m = a.modulus();
    let nodes = AtomicU64::new(0);
    let cover = Cover { m, a: a.support(), excluded: proper_div_table(a)?, need, nodes: &nodes, budget, limit };
    let mut covered = vec![false; m.size()];
    cover.place(&mut covered, 0, true);
    if need == 1 {
        return Ok(vec![vec![0]]);
    }
    let (u, first) = cover.candidates(&covered, &[0], 0);
    let branch = |b: u64| -> Result<Vec<Vec<u64>>> {
        let mut cov = covered.clone();
        cover.place(&mut cov, b, true);
        let mut chosen = vec![0, b];
        let mut out = Vec::new();
        cover.run(&mut cov, &mut chosen, u + 1, &mut out)?;
        Ok(out)
    };
    let parts: Vec<Vec<Vec<u64>>> = if parallel && limit.is_none() {
        first.par_iter().map(|&b| branch(b)).collect::<Result<_>>()?
    } else {
        let mut parts = Vec::new();
        let mut found = 0;
        for &b in &first {
            if limit.is_some_and(|l| found >= l) {
                break;
            }
            let part = branch(b)?;
            found += part.len();
            parts.push(part);
        }
        parts
    };
    let mut all: Vec<Vec<u64>> = parts.into_iter().flatten().collect();
    all.sort();
    if let Some(l) = limit {
        all.truncate(l);
    }
    Ok(all)
}

/// Every `B` with `0 in B`, `|B| = size` and `Div(A) ∩ Div(B) = {M}`, sorted.
/// Found by clique search, independently of any covering argument.
pub fn div_disjoint_partners(a: &Multiset, size: usize, budget: u64) -> Result<Vec<Vec<u64>>> {
    let m = a.modulus();
    let excluded = proper_div_table(a)?;
    let ok = |x: u64, y: u64| x != y && !excluded[m.gcd_index(m.sub(x, y))];
    let cands: Vec<u64> = (1..m.value()).filter(|&v| ok(v, 0)).collect();
    let mut out = Vec::new();
    let mut nodes = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        ok: &dyn Fn(u64, u64) -> bool,
        chosen: &mut Vec<u64>,
        cands: &[u64],
        size: usize,
        out: &mut Vec<Vec<u64>>,
        nodes: &mut u64,
        budget: u64,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        if chosen.len() == size {
            out.push(chosen.clone());
            return Ok(());
        }
        let missing = size - chosen.len();
        for (k, &v) in cands.iter().enumerate() {
            if cands.len() - k < missing {
                break;
            }
            let next: Vec<u64> = cands[k + 1..].iter().copied().filter(|&w| ok(v, w)).collect();
            if next.len() + 1 < missing {
                continue;
            }
            chosen.push(v);
            rec(ok, chosen, &next, size, out, nodes, budget)?;
            chosen.pop();
        }
        Ok(())
    }
    if size == 0 {
        return Ok(out);
    }
    let mut chosen = vec![0];
    rec(&ok, &mut chosen, &cands, size, &mut out, &mut nodes, budget)?;
    Ok(out)
}

/// One tiling, stored with both factors in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairRecord {
    pub modulus: u64,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl PairRecord {
    pub fn from_pair(pair: &TilingPair) -> PairRecord {
        PairRecord {
            modulus: pair.modulus().value(),
            a: pair.a().canonical().0.support(),
            b: pair.b().canonical().0.support(),
        }
    }

    /// Re-verifies the record.
    pub fn to_pair(&self) -> Result<TilingPair> {
        TilingPair::from_sets(self.modulus, &self.a, &self.b)
    }

    pub fn swapped(&self) -> PairRecord {
        PairRecord { modulus: self.modulus, a: self.b.clone(), b: self.a.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Every tiling of the modulus, up to translating each factor.
    Exhaustive,
    /// Seeded structural constructions, each re-verified.
    Generated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub modulus: u64,
    pub origin: Origin,
    pub pairs: Vec<PairRecord>,
}

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub moduli: Vec<u64>,
    /// Largest number of candidate small factors for which a modulus is
    /// enumerated exhaustively.
    pub exhaustive_limit: u64,
    /// Cap on generated pairs per modulus.
    pub generated_cap: usize,
    pub seed: u64,
    pub budget: u64,
}

pub const DEFAULT_MODULI: [u64; 13] = [12, 16, 18, 24, 36, 40, 48, 60, 72, 90, 108, 120, 144];
pub const STRETCH_MODULI: [u64; 2] = [180, 216];

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            moduli: DEFAULT_MODULI.to_vec(),
            exhaustive_limit: 5_000,
            generated_cap: 400,
            seed: 0x5eed,
            budget: 50_000_000,
        }
    }
}

impl CorpusConfig {
    pub fn with_stretch(mut self) -> Self {
        self.moduli.extend_from_slice(&STRETCH_MODULI);
        self
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for j in 0..k {
        r = r * (n - j) as u128 / (j + 1) as u128;
        if r > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    r as u64
}

fn small_sizes(m: u64) -> Vec<u64> {
    arith::divisors(m).into_iter().filter(|&k| k * k <= m).collect()
}

/// Number of subsets containing 0 that the exhaustive enumeration visits.
pub fn exhaustive_cost(m: u64) -> u64 {
    small_sizes(m).iter().map(|&k| binomial(m - 1, k - 1)).fold(0u64, |a, c| a.saturating_add(c))
}

/// Calls `f` on each `k`-subset of `{1..m-1}` (as a sorted set with 0 prepended).
fn for_each_subset_with_zero(m: u64, k: usize, f: &mut dyn FnMut(&[u64])) {
    let mut cur = vec![0u64];
    fn rec(m: u64, k: usize, start: u64, cur: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let missing = (k - cur.len()) as u64;
        for v in start..=(m - missing) {
            cur.push(v);
            rec(m, k, v + 1, cur, f);
            cur.pop();
        }
    }
    if k == 0 {
        return;
    }
    rec(m, k, 1, &mut cur, f);
}

fn is_canonical(m: u64, s: &[u64]) -> bool {
    s.iter().all(|&a| {
        let mut v: Vec<u64> = s.iter().map(|&x| (x + m - a) % m).collect();
        v.sort_unstable();
        v.as_slice() >= s
    })
}

/// Canonical subsets with 0 of each size `k | M`, `k <= sqrt(M)`.
fn small_canonical_sets(m: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for k in small_sizes(m) {
        for_each_subset_with_zero(m, k as usize, &mut |s| {
            if is_canonical(m, s) {
                out.push(s.to_vec());
            }
        });
    }
    out
}

/// Every tiling of `Z_M` up to translation of each factor, both
/// orientations, sorted.
pub fn exhaustive_pairs(m: u64, budget: u64) -> Result<Vec<PairRecord>> {
    let zm = Modulus::new(m)?;
    let sets = small_canonical_sets(m);
    let found: Vec<Vec<PairRecord>> = sets
        .par_iter()
        .map(|s| -> Result<Vec<PairRecord>> {
            let a = Multiset::from_set(&zm, s)?;
            let bs = complements(&a, budget, None, false)?;
            let mut out = Vec::new();
            for b in bs {
                let bm = Multiset::from_set(&zm, &b)?;
                let rec = PairRecord { modulus: m, a: s.clone(), b: bm.canonical().0.support() };
                out.push(rec.clone());
                out.push(rec.swapped());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let set: BTreeSet<PairRecord> = found.into_iter().flatten().collect();
    Ok(set.into_iter().collect())
}

fn record(pair: &TilingPair) -> [PairRecord; 2] {
    let r = PairRecord::from_pair(pair);
    let s = r.swapped();
    [r, s]
}

/// Seeded structural constructions for `Z_M`:
/// standard pairs, subgroup compositions `A = pA'`, `B = ∪ (r + p B_r)` from
/// tilings of `Z_{M/p}`, Tijdeman dilations and fiber shifts. Every pair is
/// re-verified; output is sorted and capped deterministically.
fn generated_pairs(m: u64, cfg: &CorpusConfig, memo: &mut BTreeMap<u64, Vec<PairRecord>>) -> Result<Vec<PairRecord>> {
    let zm = Modulus::new(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ m.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut pool: BTreeSet<PairRecord> = BTreeSet::new();

    // standard pairs: split every exponent set between the two factors
    let total: u32 = zm.exponents().iter().sum();
    for mask in 0u64..(1 << total) {
        let mut ea = vec![Vec::new(); zm.k()];
        let mut eb = vec![Vec::new(); zm.k()];
        let mut bit = 0;
        for i in 0..zm.k() {
            for alpha in 1..=zm.exponent(i) {
                if mask >> bit & 1 == 1 {
                    ea[i].push(alpha);
                } else {
                    eb[i].push(alpha);
                }
                bit += 1;
            }
        }
        let pair = TilingPair::new(&tiling::standard_set(&zm, &ea)?, &tiling::standard_set(&zm, &eb)?)?;
        pool.extend(record(&pair));
    }

    // subgroup compositions from each quotient
    for &p in zm.primes() {
        let q = m / p;
        if q < 2 {
            continue;
        }
        let sub = corpus_for(q, cfg, memo)?;
        let mut by_a: BTreeMap<Vec<u64>, Vec<Vec<u64>>> = BTreeMap::new();
        for r in &sub {
            by_a.entry(r.a.clone()).or_default().push(r.b.clone());
        }
        let keys: Vec<&Vec<u64>> = by_a.keys().collect();
        let zq = Modulus::new(q)?;
        let rounds = (cfg.generated_cap / zm.k()).max(8);
        for _ in 0..rounds {
            let a1 = keys[rng.random_range(0..keys.len())];
            let opts = &by_a[a1];
            let a: Vec<u64> = a1.iter().map(|&x| x * p).collect();
            let mut b = Vec::new();
            for r in 0..p {
                let b1 = &opts[rng.random_range(0..opts.len())];
                let t = rng.random_range(0..q);
                b.extend(b1.iter().map(|&x| r + p * zq.add(x, t)));
            }
            b.sort_unstable();
            let pair = TilingPair::from_sets(m, &a, &b)?;
            pool.extend(record(&pair));
        }
    }

    // Tijdeman dilations and fiber shifts of what we have so far
    let base: Vec<PairRecord> = pool.iter().cloned().collect();
    let extra = (cfg.generated_cap / 2).max(8);
    for _ in 0..extra {
        let r = &base[rng.random_range(0..base.len())];
        let pair = r.to_pair()?;
        let size = r.a.len() as u64;
        let t = rng.random_range(2..m.max(3));
        if arith::gcd(t, size) == 1 {
            pool.extend(record(&tiling::tijdeman_scale(&pair, t)?));
        }
        let i = rng.random_range(0..zm.k());
        let n = zm.exponent(i);
        if n >= 2 {
            let gamma = rng.random_range(2..=n);
            if let Some(s) = fibers::find_cofibered(&pair, i, gamma)? {
                let chain = &s.cofibers[rng.random_range(0..s.cofibers.len())];
                let beta = s.pset_b[rng.random_range(0..s.pset_b.len())];
                let k = rng.random_range(1..zm.prime(i));
                match fibers::fiber_shift(pair.a(), pair.b(), chain, &s.pset_b, beta, k) {
                    Ok(out) => pool.extend(record(&out.pair)),
                    Err(Error::HypothesisViolated(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let mut all: Vec<PairRecord> = pool.into_iter().collect();
    if all.len() > cfg.generated_cap {
        all.shuffle(&mut rng);
        all.truncate(cfg.generated_cap);
        all.sort();
    }
    Ok(all)
}

fn corpus_for(m: u64, cfg: &CorpusConfig, memo: &mut BTreeMap<u64, Vec<PairRecord>>) -> Result<Vec<PairRecord>> {
    if let Some(v) = memo.get(&m) {
        return Ok(v.clone());
    }
    let v = if exhaustive_cost(m) <= cfg.exhaustive_limit {
        exhaustive_pairs(m, cfg.budget)?
    } else {
        generated_pairs(m, cfg, memo)?
    };
    memo.insert(m, v.clone());
    Ok(v)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn records(&self) -> impl Iterator<Item = &PairRecord> {
        self.entries.iter().flat_map(|e| e.pairs.iter())
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| e.pairs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All pairs, re-verified.
    pub fn pairs(&self) -> Result<Vec<TilingPair>> {
        let recs: Vec<&PairRecord> = self.records().collect();
        recs.par_iter().map(|r| r.to_pair()).collect()
    }

    /// One JSON record per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads records, grouping by modulus in order of first appearance.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Corpus> {
        let mut entries: Vec<CorpusEntry> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PairRecord = serde_json::from_str(&line)?;
            match entries.iter_mut().find(|e| e.modulus == rec.modulus) {
                Some(e) => e.pairs.push(rec),
                None => entries.push(CorpusEntry { modulus: rec.modulus, origin: Origin::Generated, pairs: vec![rec] }),
            }
        }
        Ok(Corpus { entries })
    }
}

/// Builds the corpus for the configured moduli. Identical configurations
/// give identical corpora.
pub fn build_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    let mut memo = BTreeMap::new();
    let mut entries = Vec::new();
    for &m in &cfg.moduli {
        Modulus::new(m)?;
        let origin = if exhaustive_cost(m) <= cfg.exhaustive_limit { Origin::Exhaustive } else { Origin::Generated };
        let pairs = corpus_for(m, cfg, &mut memo)?;
        entries.push(CorpusEntry { modulus: m, origin, pairs });
    }
    Ok(Corpus { entries })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TilesVerdict {
    /// (T1) fails, which rules out tiling.
    NotATile,
    /// (T1) and (T2) hold; the standard complement is given when it
    /// verifies at the period `lcm(S_A)`.
    TilesByT1T2 { modulus: Option<u64>, b: Option<Vec<u64>> },
    /// A complement found by search.
    Tiles { modulus: u64, b: Vec<u64> },
    NotTilesWithinBound { bound: u64 },
}

/// Decides whether a finite `A ⊂ Z_{>=0}` tiles the integers, searching
/// periods `M <= bound` built from the primes of `|A|` when (T2) fails.
pub fn tiles_z_bounded(a: &[u64], bound: u64, budget: u64) -> Result<TilesVerdict> {
    let mut set: Vec<u64> = a.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return Err(Error::InvalidArgument("A is empty".into()));
    }
    if set.len() != a.len() {
        return Err(Error::DuplicateElement(set.windows(2).find(|w| w[0] == w[1]).map_or(0, |w| w[0])));
    }
    let lo = set[0];
    let set: Vec<u64> = set.iter().map(|x| x - lo).collect();
    let deg = *set.last().unwrap() as usize;
    let mut coeffs = vec![0i64; deg + 1];
    for &x in &set {
        coeffs[x as usize] = 1;
    }
    let prof = cyclotomic::integer_profile(&coeffs)?;
    if !prof.t1 {
        return Ok(TilesVerdict::NotATile);
    }
    let size = set.len() as u64;
    if prof.t2.holds {
        let period = prof.prime_powers.iter().fold(1u64, |acc, &s| arith::lcm(acc, s));
        let witness = if period < 2 {
            None
        } else {
            let zm = Modulus::new(period)?;
            let am = Multiset::from_residues(&zm, set.iter().map(|&x| x as i128))?;
            if am.is_set() {
                let own = tiling::standard_exponents(&am)?;
                let rest: Vec<Vec<u32>> = (0..zm.k())
                    .map(|i| (1..=zm.exponent(i)).filter(|e| !own[i].contains(e)).collect())
                    .collect();
                let b = tiling::standard_set(&zm, &rest)?;
                tiling::verify(&am, &b)?.tiles().then(|| (period, b.support()))
            } else {
                None
            }
        };
        if size == 1 {
            return Ok(TilesVerdict::TilesByT1T2 { modulus: Some(1), b: Some(vec![0]) });
        }
        return Ok(TilesVerdict::TilesByT1T2 {
            modulus: witness.as_ref().map(|w| w.0),
            b: witness.map(|w| w.1),
        });
    }
    let primes: Vec<u64> = arith::factorize(size).into_iter().map(|f| f.0).collect();
    let mut periods = Vec::new();
    let mut frontier = vec![size];
    while let Some(mm) = frontier.pop() {
        if mm > bound || periods.contains(&mm) {
            continue;
        }
        periods.push(mm);
        for &p in &primes {
            if let Some(n) = mm.checked_mul(p) {
                frontier.push(n);
            }
        }
    }
    periods.sort_unstable();
    for mm in periods {
        if mm < 2 || mm < size {
            continue;
        }
        let zm = Modulus::new(mm)?;
        let am = Multiset::from_residues(&zm, set.iter().map(|&x| x as i128))?;
        if !am.is_set() {
            continue;
        }
        if let Some(b) = complements(&am, budget, Some(1), false)?.into_iter().next() {
            return Ok(TilesVerdict::Tiles { modulus: mm, b });
        }
    }
    Ok(TilesVerdict::NotTilesWithinBound { bound })
}

pub const CONJECTURE_IDS: [&str; 6] = ["one-divisor", "line-bound", "fibering", "slab-strong", "slab-weak", "split-planes"];

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub id: String,
    pub pairs: usize,
    pub checked: usize,
    pub not_applicable: usize,
    pub violations: usize,
    pub witnesses: Vec<serde_json::Value>,
}

impl ConjectureReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

enum Outcome {
    NotApplicable,
    Pass,
    Fail(serde_json::Value),
}

fn line_bound(pair: &TilingPair) -> Result<Outcome> {
    let a = pair.a();
    let m = a.modulus();
    let size = a.support_size() as u64;
    let mut applicable = false;
    for i in 0..m.k() {
        let p = m.prime(i);
        if arith::valuation(size, p) >= m.exponent(i) {
            continue;
        }
        applicable = true;
        let step = m.cofactor(i);
        // lines in direction i are the cosets of step Z_M, i.e. residues mod step
        let counts = a.reduce_mod(step)?;
        for x in 0..step {
            if counts.weight(x) as u64 >= m.prime_power(i) {
                return Ok(Outcome::Fail(serde_json::json!({ "direction": i, "x": x, "count": counts.weight(x) })));
            }
        }
    }
    Ok(if applicable { Outcome::Pass } else { Outcome::NotApplicable })
}

fn fibering(pair: &TilingPair) -> Result<Outcome> {
    let m = pair.modulus();
    let mut applicable = false;
    for i in 0..m.k() {
        let p = m.prime(i);
        let n = m.exponent(i);
        if n < 2 {
            continue;
        }
        applicable = true;
        let mut found = false;
        for alpha in 1..n {
            let scale = m.value() / p.pow(alpha);
            if fibers::is_fibered(pair.a(), i, scale)? || fibers::is_fibered(pair.b(), i, scale)? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(Outcome::Fail(serde_json::json!({ "direction": i })));
        }
    }
    Ok(if applicable { Outcome::Pass } else { Outcome::NotApplicable })
}

fn split_planes(pair: &TilingPair) -> Result<Outcome> {
    let (a, m) = (pair.a(), pair.modulus());
    let mut applicable = false;
    for x in 0..m.value() {
        if a.contains(x) {
            continue;
        }
        for i in 0..m.k() {
            let step = m.value() / m.prime(i);
            for j in 1..m.prime(i) {
                let a0 = m.add(x, j * step);
                if !a.contains(a0) {
                    continue;
                }
                applicable = true;
                let r = saturation::split_planes(pair, x, a0, i)?;
                if !r.uniform() {
                    return Ok(Outcome::Fail(serde_json::to_value(&r)?));
                }
            }
        }
    }
    Ok(if applicable { Outcome::Pass } else { Outcome::NotApplicable })
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::A => "A",
        Side::B => "B",
    }
}

fn evaluate(id: &str, pair: &TilingPair) -> Result<Outcome> {
    match id {
        "one-divisor" => {
            let v = reductions::one_divisor_violations(pair)?;
            Ok(match v.first() {
                None => Outcome::Pass,
                Some(&(i, s)) => Outcome::Fail(serde_json::json!({ "direction": i, "side": side_name(s) })),
            })
        }
        "line-bound" => line_bound(pair),
        "fibering" => fibering(pair),
        "slab-strong" | "slab-weak" => {
            let q = reductions::slab_question(pair)?;
            if q.applicable.is_empty() {
                return Ok(Outcome::NotApplicable);
            }
            let fails = if id == "slab-strong" { !q.strong_failures.is_empty() } else { !q.weak_holds };
            Ok(if fails {
                Outcome::Fail(serde_json::json!({
                    "failures": q.strong_failures.iter().map(|&(i, s)| (i, side_name(s))).collect::<Vec<_>>()
                }))
            } else {
                Outcome::Pass
            })
        }
        "split-planes" => split_planes(pair),
        _ => Err(Error::InvalidArgument(format!("unknown conjecture id {id:?}"))),
    }
}

/// Scans every pair for a counterexample to the named conjecture.
/// Violations are collected, never raised.
pub fn conjecture_harness(pairs: &[TilingPair], id: &str) -> Result<ConjectureReport> {
    if !CONJECTURE_IDS.contains(&id) {
        return Err(Error::InvalidArgument(format!(
            "unknown conjecture id {id:?}; known: {}",
            CONJECTURE_IDS.join(", ")
        )));
    }
    let outcomes: Vec<Outcome> = pairs.par_iter().map(|p| evaluate(id, p)).collect::<Result<_>>()?;
    let mut report =
        ConjectureReport { id: id.to_string(), pairs: pairs.len(), checked: 0, not_applicable: 0, violations: 0, witnesses: vec![] };
    for (pair, o) in pairs.iter().zip(outcomes) {
        match o {
            Outcome::NotApplicable => report.not_applicable += 1,
            Outcome::Pass => report.checked += 1,
            Outcome::Fail(detail) => {
                report.checked += 1;
                report.violations += 1;
                report.witnesses.push(serde_json::json!({ "pair": PairRecord::from_pair(pair), "detail": detail }));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(m: u64, s: &[u64]) -> Multiset {
        Multiset::from_set(&Modulus::new(m).unwrap(), s).unwrap()
    }

    #[test]
    fn complements_small() {
        assert_eq!(enumerate_complements(&ms(12, &[0, 1, 2, 3]), 1000).unwrap(), vec![vec![0, 4, 8]]);
        assert_eq!(enumerate_complements(&ms(4, &[0, 2]), 1000).unwrap(), vec![vec![0, 1], vec![0, 3]]);
        let all: Vec<u64> = (0..6).collect();
        assert_eq!(enumerate_complements(&ms(6, &all), 10).unwrap(), vec![vec![0]]);
        assert!(enumerate_complements(&ms(12, &[0, 1, 3, 7, 8]), 10).is_err());
        assert!(matches!(
            enumerate_complements(&ms(64, &[0, 1]), 3),
            Err(Error::BudgetExceeded(3))
        ));
    }

    #[test]
    fn partners_match_complements() {
        let a = ms(12, &[0, 1, 6, 7]);
        assert_eq!(div_disjoint_partners(&a, 3, 10_000).unwrap(), enumerate_complements(&a, 10_000).unwrap());
    }

    #[test]
    fn tiny_corpus() {
        let cfg = CorpusConfig { moduli: vec![2], ..Default::default() };
        let c = build_corpus(&cfg).unwrap();
        let recs: Vec<&PairRecord> = c.records().collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0], &PairRecord { modulus: 2, a: vec![0], b: vec![0, 1] });
        assert_eq!(recs[1], &PairRecord { modulus: 2, a: vec![0, 1], b: vec![0] });
    }

    #[test]
    fn tiles_z_examples() {
        assert!(matches!(tiles_z_bounded(&[0, 1, 2, 3, 4], 100, 1000).unwrap(), TilesVerdict::TilesByT1T2 { modulus: Some(5), .. }));
        assert_eq!(tiles_z_bounded(&[0, 1, 3], 100, 1000).unwrap(), TilesVerdict::NotATile);
        assert_eq!(
            tiles_z_bounded(&[0, 1, 4, 5], 100, 1000).unwrap(),
            TilesVerdict::TilesByT1T2 { modulus: Some(8), b: Some(vec![0, 2]) }
        );
        assert!(tiles_z_bounded(&[], 10, 10).is_err());
    }

    #[test]
    fn unknown_conjecture() {
        assert!(conjecture_harness(&[], "nope").is_err());
        let r = conjecture_harness(&[], "one-divisor").unwrap();
        assert!(r.passed() && r.pairs == 0);
    }
}
