//! Fibers, fiber chains and cofibered pairs.
//!
//! An N-fiber in the `p_i` direction is a set whose image mod N is a coset of
//! the subgroup of order `p_i` in Z_N. A set is N-fibered when it is a
//! disjoint union of such fibers; equivalently its image mod N is constant on
//! every coset of that subgroup, which is what [`is_fibered`] tests.

use serde::Serialize;

use crate::arith;
use crate::cyclotomic;
use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::tiling::{self, TilingPair};
use crate::zmod::Modulus;

/// `Psi_{N/p_i^delta}(X) = Phi_{p_i}(X^{N/p_i^delta})` as a set in Z_N.
pub fn standard_fiber(zn: &Modulus, i: usize, delta: u32) -> Result<Multiset> {
    zn.check_direction(i)?;
    let p = zn.prime(i);
    if delta == 0 || delta > zn.exponent(i) {
        return Err(Error::InvalidArgument(format!("delta = {delta} out of range")));
    }
    let step = zn.value() / p.pow(delta);
    Multiset::from_set(zn, &(0..p).map(|k| k * step).collect::<Vec<_>>())
}

/// Divisors `s > 1` of N with `Phi_s | Psi_{N/p_i^delta}`, i.e. those with
/// `p_i^{nu - delta + 1} || s` where `p_i^nu || N`.
pub fn psi_divisors(zn: &Modulus, i: usize, delta: u32) -> Vec<u64> {
    let p = zn.prime(i);
    let nu = zn.exponent(i);
    zn.divisors_sorted()
        .into_iter()
        .filter(|&s| s > 1 && arith::valuation(s, p) == nu + 1 - delta)
        .collect()
}

fn check_scale(m: &Modulus, i: usize, n: u64) -> Result<u64> {
    m.check_direction(i)?;
    if !m.is_divisor(n) || n % m.prime(i) != 0 {
        return Err(Error::InvalidArgument(format!(
            "scale {n} must divide {} and be divisible by {}",
            m.value(),
            m.prime(i)
        )));
    }
    Ok(n / m.prime(i))
}

/// Whether `A` is N-fibered in the `p_i` direction.
pub fn is_fibered(a: &Multiset, i: usize, n: u64) -> Result<bool> {
    let step = check_scale(a.modulus(), i, n)?;
    let an = a.reduce_mod(n)?;
    let p = a.modulus().prime(i);
    Ok((0..step).all(|r| {
        let c = an.weight(r);
        (1..p).all(|j| an.weight(r + j * step) == c)
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberDecomposition {
    pub direction: usize,
    pub scale: u64,
    /// Fibers are built with multiplicity one; the largest admissible common
    /// multiplicity is the gcd of the coset counts.
    pub multiplicity: u64,
    pub max_multiplicity: u64,
    pub roots: Vec<u64>,
    pub fibers: Vec<Vec<u64>>,
}

/// Splits `A` into N-fibers in the `p_i` direction. Within each coset the
/// `t`-th smallest lift of every point forms the `t`-th fiber, so the
/// decomposition returned has the lexicographically least roots.
pub fn detect_fibered(a: &Multiset, i: usize, n: u64) -> Result<Option<FiberDecomposition>> {
    if !is_fibered(a, i, n)? {
        return Ok(None);
    }
    let m = a.modulus();
    let p = m.prime(i);
    let step = n / p;
    let mut classes: Vec<Vec<u64>> = vec![Vec::new(); n as usize];
    for x in a.support() {
        classes[(x % n) as usize].push(x);
    }
    let mut fibers = Vec::new();
    let mut g = 0u64;
    for r in 0..step {
        let count = classes[r as usize].len();
        g = arith::gcd(g, count as u64);
        for t in 0..count {
            let mut f: Vec<u64> = (0..p).map(|j| classes[(r + j * step) as usize][t]).collect();
            f.sort_unstable();
            fibers.push(f);
        }
    }
    fibers.sort();
    let roots = fibers.iter().map(|f| f[0]).collect();
    Ok(Some(FiberDecomposition {
        direction: i,
        scale: n,
        multiplicity: 1,
        max_multiplicity: g.max(1),
        roots,
        fibers,
    }))
}

/// A set `F` of size `p^{|P|}` that is `M/p^{alpha-1}`-fibered in the `p_i`
/// direction for every `alpha` in `P`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberChain {
    pub direction: usize,
    pub pset: Vec<u32>,
    pub elements: Vec<u64>,
}

impl FiberChain {
    pub fn root(&self) -> u64 {
        self.elements[0]
    }

    pub fn as_multiset(&self, m: &Modulus) -> Result<Multiset> {
        Multiset::from_set(m, &self.elements)
    }
}

fn check_pset(m: &Modulus, i: usize, pset: &[u32]) -> Result<Vec<u32>> {
    m.check_direction(i)?;
    let mut v = pset.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.iter().any(|&a| a == 0 || a > m.exponent(i)) || v.len() != pset.len() {
        return Err(Error::InvalidArgument(format!("bad exponent set {pset:?} for p = {}", m.prime(i))));
    }
    Ok(v)
}

pub fn is_chain(f: &Multiset, i: usize, pset: &[u32]) -> Result<bool> {
    let m = f.modulus();
    let pset = check_pset(m, i, pset)?;
    let p = m.prime(i);
    if !f.is_set() || f.total()? as u64 != p.pow(pset.len() as u32) {
        return Ok(false);
    }
    for &alpha in &pset {
        if !is_fibered(f, i, m.value() / p.pow(alpha - 1))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Elements of a chain with `gamma = max P` lie in one coset of the subgroup
/// of order `p^gamma`. Writing `x = r + t M/p^gamma`, the chain condition
/// says: at base-`p` digit `d` of `t` with `gamma - d` in `P` every node of
/// the digit trie branches into all `p` children evenly, and at every other
/// digit it has a single child.
struct ChainTrie {
    p: u64,
    gamma: u32,
    uniform: Vec<bool>,
}

impl ChainTrie {
    fn new(p: u64, pset: &[u32]) -> Self {
        let gamma = *pset.iter().max().unwrap();
        let uniform = (0..gamma).map(|d| pset.contains(&(gamma - d))).collect();
        ChainTrie { p, gamma, uniform }
    }

    fn split(&self, ts: &[u64], d: u32) -> Vec<Vec<u64>> {
        let mut ch = vec![Vec::new(); self.p as usize];
        let base = self.p.pow(d);
        for &t in ts {
            ch[((t / base) % self.p) as usize].push(t);
        }
        ch
    }

    /// A partition of `ts` into partial chains over digits `d..gamma`.
    fn partition(&self, ts: &[u64], d: u32) -> Option<Vec<Vec<u64>>> {
        if ts.is_empty() {
            return Some(Vec::new());
        }
        if d == self.gamma {
            return Some(ts.iter().map(|&t| vec![t]).collect());
        }
        let ch = self.split(ts, d);
        if self.uniform[d as usize] {
            if ch.iter().any(|c| c.len() != ch[0].len()) {
                return None;
            }
            let parts: Vec<Vec<Vec<u64>>> =
                ch.iter().map(|c| self.partition(c, d + 1)).collect::<Option<_>>()?;
            let count = parts[0].len();
            Some(
                (0..count)
                    .map(|k| parts.iter().flat_map(|p| p[k].iter().copied()).collect())
                    .collect(),
            )
        } else {
            let mut out = Vec::new();
            for c in &ch {
                out.extend(self.partition(c, d + 1)?);
            }
            Some(out)
        }
    }

    /// Every partial chain contained in `ts`, up to `cap` of them.
    fn all(&self, ts: &[u64], d: u32, cap: usize) -> Vec<Vec<u64>> {
        if ts.is_empty() {
            return Vec::new();
        }
        if d == self.gamma {
            return ts.iter().take(cap).map(|&t| vec![t]).collect();
        }
        let ch = self.split(ts, d);
        if self.uniform[d as usize] {
            let mut acc: Vec<Vec<u64>> = vec![Vec::new()];
            for c in &ch {
                let sub = self.all(c, d + 1, cap);
                if sub.is_empty() {
                    return Vec::new();
                }
                let mut next = Vec::new();
                'outer: for prefix in &acc {
                    for s in &sub {
                        if next.len() >= cap {
                            break 'outer;
                        }
                        let mut v = prefix.clone();
                        v.extend_from_slice(s);
                        next.push(v);
                    }
                }
                acc = next;
            }
            acc
        } else {
            let mut out = Vec::new();
            for c in &ch {
                out.extend(self.all(c, d + 1, cap - out.len()));
                if out.len() >= cap {
                    break;
                }
            }
            out
        }
    }
}

fn cosets(a: &Multiset, step: u64) -> Vec<(u64, Vec<u64>)> {
    let mut groups: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
    for x in a.support() {
        groups.entry(x % step).or_default().push(x / step);
    }
    groups.into_iter().collect()
}

fn to_chain(i: usize, pset: &[u32], r: u64, step: u64, ts: &[u64]) -> FiberChain {
    let mut elements: Vec<u64> = ts.iter().map(|&t| r + t * step).collect();
    elements.sort_unstable();
    FiberChain { direction: i, pset: pset.to_vec(), elements }
}

/// Partition of `A` into `P`-fiber chains in the `p_i` direction, if one
/// exists. For `P` empty the chains are single points.
pub fn decompose_pset(a: &Multiset, i: usize, pset: &[u32]) -> Result<Option<Vec<FiberChain>>> {
    let m = a.modulus();
    let pset = check_pset(m, i, pset)?;
    if pset.is_empty() {
        return Ok(Some(
            a.support().into_iter().map(|x| FiberChain { direction: i, pset: vec![], elements: vec![x] }).collect(),
        ));
    }
    let trie = ChainTrie::new(m.prime(i), &pset);
    let step = m.value() / m.prime(i).pow(trie.gamma);
    let mut out = Vec::new();
    for (r, ts) in cosets(a, step) {
        match trie.partition(&ts, 0) {
            Some(parts) => out.extend(parts.iter().map(|t| to_chain(i, &pset, r, step, t))),
            None => return Ok(None),
        }
    }
    out.sort_by(|x, y| x.elements.cmp(&y.elements));
    Ok(Some(out))
}

/// All `P`-fiber chains contained in `A`, at most `cap`.
pub fn enumerate_chains(a: &Multiset, i: usize, pset: &[u32], cap: usize) -> Result<Vec<FiberChain>> {
    let m = a.modulus();
    let pset = check_pset(m, i, pset)?;
    if pset.is_empty() {
        return Ok(a
            .support()
            .into_iter()
            .take(cap)
            .map(|x| FiberChain { direction: i, pset: vec![], elements: vec![x] })
            .collect());
    }
    let trie = ChainTrie::new(m.prime(i), &pset);
    let step = m.value() / m.prime(i).pow(trie.gamma);
    let mut out = Vec::new();
    for (r, ts) in cosets(a, step) {
        if out.len() >= cap {
            break;
        }
        for t in trie.all(&ts, 0, cap - out.len()) {
            out.push(to_chain(i, &pset, r, step, &t));
        }
    }
    Ok(out)
}

/// The four structural properties of a chain `F` with exponent set `P`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    /// `prod_{alpha in P} Psi_{M/p^alpha} | F`.
    pub psi_product_divides: bool,
    /// `|F| = p^{|P|}`.
    pub size: bool,
    /// `M/p^alpha in Div(F)` for `alpha in P`.
    pub divisors: bool,
    /// `F - min F` tiles `(M/p^gamma) Z_M` with `prod_{tau < gamma, tau not in P} Psi_{M/p^tau}`.
    pub tiles_subgroup: bool,
}

impl ChainReport {
    pub fn all(&self) -> bool {
        self.psi_product_divides && self.size && self.divisors && self.tiles_subgroup
    }
}

pub fn chain_properties(chain: &FiberChain, m: &Modulus) -> Result<ChainReport> {
    let i = chain.direction;
    let pset = check_pset(m, i, &chain.pset)?;
    let p = m.prime(i);
    let f = chain.as_multiset(m)?;
    let size = f.total()? as u64 == p.pow(pset.len() as u32);

    let mut prod: Vec<i64> = vec![1];
    for &alpha in &pset {
        let step = (m.value() / p.pow(alpha)) as usize;
        let mut next = vec![0i64; prod.len() + (p as usize - 1) * step];
        for (k, &c) in prod.iter().enumerate() {
            for j in 0..p as usize {
                next[k + j * step] += c;
            }
        }
        prod = next;
    }
    let coeffs: Vec<i128> = f.weights().iter().map(|&w| w as i128).collect();
    let psi_product_divides = cyclotomic::poly_rem(&coeffs, &prod)?.iter().all(|&c| c == 0);

    let div = tiling::div(&f)?;
    let divisors = pset.iter().all(|&a| div.contains(m.value() / p.pow(a)));

    let tiles_subgroup = match pset.last() {
        None => f.total()? == 1,
        Some(&gamma) => {
            let shifted = f.normalized();
            let mut g = Multiset::from_set(m, &[0])?;
            for tau in 1..gamma {
                if !pset.contains(&tau) {
                    let step = m.value() / p.pow(tau);
                    g = g.convolve(&Multiset::from_set(m, &(0..p).map(|k| k * step).collect::<Vec<_>>())?)?;
                }
            }
            let sub = m.value() / p.pow(gamma);
            let cover = shifted.convolve(&g)?;
            cover.weights().iter().enumerate().all(|(x, &w)| w == if x as u64 % sub == 0 { 1 } else { 0 })
        }
    };
    Ok(ChainReport { psi_product_divides, size, divisors, tiles_subgroup })
}

/// Depth-`gamma` cofibered structure in direction `i`: `P_A ⊔ P_B = {1..gamma}`,
/// `B` is `P_B`-fibered and `A` contains the listed `P_A`-chains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CofiberedStructure {
    pub direction: usize,
    pub depth: u32,
    pub pset_a: Vec<u32>,
    pub pset_b: Vec<u32>,
    pub cofibers: Vec<FiberChain>,
}

/// Every cofibered structure of depth `gamma` in direction `i` with
/// nonempty `P_B`, listing at most `cap` cofibers each.
pub fn cofibered_structures(pair: &TilingPair, i: usize, gamma: u32, cap: usize) -> Result<Vec<CofiberedStructure>> {
    let m = pair.modulus();
    m.check_direction(i)?;
    if gamma < 1 || gamma > m.exponent(i) {
        return Err(Error::InvalidArgument(format!("depth {gamma} out of range")));
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << gamma) {
        let pset_b: Vec<u32> = (1..=gamma).filter(|&t| mask >> (t - 1) & 1 == 1).collect();
        let pset_a: Vec<u32> = (1..=gamma).filter(|&t| mask >> (t - 1) & 1 == 0).collect();
        if decompose_pset(pair.b(), i, &pset_b)?.is_none() {
            continue;
        }
        let cofibers = enumerate_chains(pair.a(), i, &pset_a, cap)?;
        if !cofibers.is_empty() {
            out.push(CofiberedStructure { direction: i, depth: gamma, pset_a, pset_b, cofibers });
        }
    }
    Ok(out)
}

/// First cofibered structure of depth `gamma` in direction `i`, searching
/// partitions in increasing order of the bitmask of `P_B`.
pub fn find_cofibered(pair: &TilingPair, i: usize, gamma: u32) -> Result<Option<CofiberedStructure>> {
    Ok(cofibered_structures(pair, i, gamma, 64)?.into_iter().next())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftOutcome {
    /// `A'` before normalization, so that the shift can be undone exactly.
    #[serde(skip)]
    pub shifted_a: Multiset,
    pub shifted_chain: Vec<u64>,
    #[serde(skip)]
    pub pair: TilingPair,
    pub t2_before: bool,
    pub t2_after: bool,
}

impl ShiftOutcome {
    pub fn t2_preserved(&self) -> bool {
        self.t2_before == self.t2_after
    }
}

/// `A' = A + (X^{k M/p_i^beta} - 1) F` for a `P_A`-chain `F` of `A`,
/// `beta in P_B` and `(k, p_i) = 1`, with `B` required to be `P_B`-fibered.
/// `A'` is re-verified from scratch.
pub fn fiber_shift(
    a: &Multiset,
    b: &Multiset,
    chain: &FiberChain,
    pset_b: &[u32],
    beta: u32,
    k: u64,
) -> Result<ShiftOutcome> {
    let m = a.modulus();
    let i = chain.direction;
    let p = m.prime(i);
    let pset_b = check_pset(m, i, pset_b)?;
    if !pset_b.contains(&beta) {
        return Err(Error::HypothesisViolated(format!("beta = {beta} is not in P_B = {pset_b:?}")));
    }
    if k % p == 0 {
        return Err(Error::HypothesisViolated(format!("k = {k} is divisible by p = {p}")));
    }
    if chain.pset.iter().any(|t| pset_b.contains(t)) {
        return Err(Error::HypothesisViolated("P_A and P_B overlap".into()));
    }
    if !chain.elements.iter().all(|&x| a.contains(x)) {
        return Err(Error::HypothesisViolated("chain is not contained in A".into()));
    }
    if !is_chain(&chain.as_multiset(m)?, i, &chain.pset)? {
        return Err(Error::HypothesisViolated("F is not a fiber chain".into()));
    }
    if decompose_pset(b, i, &pset_b)?.is_none() {
        return Err(Error::HypothesisViolated(format!("B is not {pset_b:?}-fibered")));
    }
    let delta = m.mul(k, m.value() / p.pow(beta));
    let mut w = a.weights().to_vec();
    for &x in &chain.elements {
        w[x as usize] -= 1;
    }
    let mut shifted_chain = Vec::with_capacity(chain.elements.len());
    for &x in &chain.elements {
        let y = m.add(x, delta);
        w[y as usize] += 1;
        shifted_chain.push(y);
    }
    if let Some(x) = w.iter().position(|&v| v > 1) {
        return Err(Error::HypothesisViolated(format!("shifted chain collides with A at {x}")));
    }
    shifted_chain.sort_unstable();
    let shifted_a = Multiset::from_weights(m, w)?;
    let pair = TilingPair::new(&shifted_a, b)?;
    let t2_before = cyclotomic::t2_check(a)?.holds;
    let t2_after = cyclotomic::t2_check(&shifted_a)?.holds;
    Ok(ShiftOutcome { shifted_a, shifted_chain, pair, t2_before, t2_after })
}

/// All ways to partition `points` (a subset of a `D(M)`-grid) into M-fibers,
/// as one direction per point. Stops with [`Error::BudgetExceeded`] after
/// `cap` search nodes.
pub fn fiber_assignments(m: &Modulus, points: &[u64], cap: u64) -> Result<Vec<Vec<usize>>> {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    let index = |x: u64| sorted.binary_search(&x).ok();
    let mut assign: Vec<Option<usize>> = vec![None; sorted.len()];
    let mut out = Vec::new();
    let mut nodes = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        m: &Modulus,
        sorted: &[u64],
        index: &dyn Fn(u64) -> Option<usize>,
        assign: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<usize>>,
        nodes: &mut u64,
        cap: u64,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > cap {
            return Err(Error::BudgetExceeded(cap));
        }
        let Some(pos) = assign.iter().position(|a| a.is_none()) else {
            out.push(assign.iter().map(|a| a.unwrap()).collect());
            return Ok(());
        };
        let x = sorted[pos];
        for i in 0..m.k() {
            let step = m.value() / m.prime(i);
            let members: Option<Vec<usize>> =
                (0..m.prime(i)).map(|j| index(m.add(x, j * step))).collect();
            let Some(members) = members else { continue };
            if members.iter().any(|&j| assign[j].is_some()) {
                continue;
            }
            for &j in &members {
                assign[j] = Some(i);
            }
            rec(m, sorted, index, assign, out, nodes, cap)?;
            for &j in &members {
                assign[j] = None;
            }
        }
        Ok(())
    }
    rec(m, &sorted, &index, &mut assign, &mut out, &mut nodes, cap)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SzaboReport {
    pub modulus: u64,
    pub primes: Vec<u64>,
    /// Root of the shifted M-fiber for each direction.
    pub shifted_roots: Vec<u64>,
    pub size_a: usize,
    pub size_b: usize,
    pub t2_a: bool,
    pub t2_b: bool,
    /// Primes `q | M` for which `A` or `B` lies in `q Z_M`.
    pub a_in_subgroup: Vec<u64>,
    pub b_in_subgroup: Vec<u64>,
}

/// Starting from the standard pair with `Phi_{p_i^2} | A` and `Phi_{p_i} | B`
/// at `M = (p_1 p_2 p_3)^2`, shifts one M-fiber of `A` in each direction by
/// `M/p_i^2`. The shifted fibers are chosen in coordinate order among those
/// avoiding 0 and each other.
pub fn szabo_construct(primes: &[u64]) -> Result<(TilingPair, SzaboReport)> {
    if primes.len() != 3 || primes.iter().any(|&p| !arith::is_prime(p)) {
        return Err(Error::InvalidArgument("need exactly three primes".into()));
    }
    let mut ps = primes.to_vec();
    ps.sort_unstable();
    ps.dedup();
    if ps.len() != 3 {
        return Err(Error::InvalidArgument("primes must be distinct".into()));
    }
    let root: u64 = ps.iter().product();
    let m = Modulus::new(root * root)?;
    let a = tiling::standard_set(&m, &[vec![2], vec![2], vec![2]])?;
    let b = tiling::standard_set(&m, &[vec![1], vec![1], vec![1]])?;

    // pick one fiber per direction, pairwise disjoint and avoiding 0
    fn choose(m: &Modulus, a: &Multiset, i: usize, taken: &mut Vec<Vec<u64>>) -> Result<bool> {
        if i == m.k() {
            return Ok(true);
        }
        for x in a.support() {
            let f = m.fiber(x, i)?;
            if f[0] != x || f.contains(&0) || taken.iter().any(|g| g.iter().any(|y| f.contains(y))) {
                continue;
            }
            taken.push(f);
            if choose(m, a, i + 1, taken)? {
                return Ok(true);
            }
            taken.pop();
        }
        Ok(false)
    }
    let mut fibers = Vec::new();
    if !choose(&m, &a, 0, &mut fibers)? {
        return Err(Error::Inconsistent("no disjoint fibers found".into()));
    }
    let mut cur = a;
    for (i, f) in fibers.iter().enumerate() {
        let chain = FiberChain { direction: i, pset: vec![1], elements: f.clone() };
        cur = fiber_shift(&cur, &b, &chain, &[2], 2, 1)?.shifted_a;
    }
    let pair = TilingPair::new(&cur, &b)?;
    let in_sub = |s: &Multiset| -> Vec<u64> {
        ps.iter().copied().filter(|&q| s.support().iter().all(|&x| x % q == 0)).collect()
    };
    let report = SzaboReport {
        modulus: m.value(),
        primes: ps.clone(),
        shifted_roots: fibers.iter().map(|f| f[0]).collect(),
        size_a: pair.a().support_size(),
        size_b: pair.b().support_size(),
        t2_a: cyclotomic::t2_check(pair.a())?.holds,
        t2_b: cyclotomic::t2_check(pair.b())?.holds,
        a_in_subgroup: in_sub(pair.a()),
        b_in_subgroup: in_sub(pair.b()),
    };
    Ok((pair, report))
}
