//! Passing from a tiling of `Z_M` to tilings of `Z_{M/p}`: the subgroup
//! reduction (one factor inside `p Z_M`) and the slab reduction (a slab of
//! `A` one layer thick in the `p_i` direction tiles periodically).

use std::collections::BTreeSet;

use serde::Serialize;

use crate::cyclotomic::{self, divides};
use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::tiling::{self, TilingPair};
use crate::zmod::Modulus;

fn quotient(m: &Modulus, p: u64) -> Result<Modulus> {
    if m.value() == p {
        return Err(Error::NotApplicable(format!("Z_{} has no proper quotient by {p}", m.value())));
    }
    m.divisor_modulus(m.value() / p)
}

/// `tau(s) = s` if `p ∤ s`, `p s` otherwise.
pub fn tau(s: u64, p: u64) -> u64 {
    if s % p == 0 {
        s * p
    } else {
        s
    }
}

/// `F(X^p)` on `Z_M` for `F` on `Z_{M/p}`.
pub fn lift(f: &Multiset, m: &Modulus, p: u64) -> Result<Multiset> {
    if f.modulus().value() * p != m.value() {
        return Err(Error::ModulusMismatch { left: f.modulus().value() * p, right: m.value() });
    }
    let entries: Vec<(u64, i64)> = f.sparse().into_iter().map(|(x, w)| (x * p, w)).collect();
    Multiset::from_sparse(m, &entries)
}

/// `Phi_{tau(s)} | F(X^p)` iff `Phi_s | F` for every `s | M/p`, `s > 1`.
pub fn tau_transfer_holds(f: &Multiset, m: &Modulus, p: u64) -> Result<bool> {
    let lifted = lift(f, m, p)?;
    for &s in f.modulus().divisors() {
        if s > 1 && divides(&lifted, tau(s, p))? != divides(f, s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SubgroupReduction {
    pub prime: u64,
    /// `A'` with `A(X) = A'(X^p)`.
    pub a_reduced: Vec<u64>,
    /// `B_r = {(b - r)/p : b in B, b = r mod p}` for each residue `r`.
    pub classes: Vec<(u64, Vec<u64>)>,
    #[serde(skip)]
    pub pairs: Vec<TilingPair>,
    pub tau_transfer: bool,
}

/// Splits `A ⊕ B = Z_M` with `A ⊂ p Z_M` into `A' ⊕ B_r = Z_{M/p}` for
/// each residue class `r mod p`. Each reduced pair is verified and the
/// cyclotomic transfer `tau` is checked for `A'` and every `B_r`.
pub fn subgroup_reduce(pair: &TilingPair, p: u64) -> Result<SubgroupReduction> {
    let m = pair.modulus();
    if m.direction_of(p).is_none() {
        return Err(Error::InvalidArgument(format!("{p} is not a prime factor of {}", m.value())));
    }
    let a = pair.a().support();
    if a.iter().any(|&x| x % p != 0) {
        return Err(Error::HypothesisViolated(format!("A is not contained in {p} Z_M")));
    }
    let zq = quotient(m, p)?;
    let a_reduced: Vec<u64> = a.iter().map(|&x| x / p).collect();
    let a_red = Multiset::from_set(&zq, &a_reduced)?;
    let mut tau_transfer = tau_transfer_holds(&a_red, m, p)?;
    let mut classes = Vec::new();
    let mut pairs = Vec::new();
    for r in 0..p {
        let mut bs: Vec<u64> = pair.b().support().into_iter().filter(|&b| b % p == r).map(|b| (b - r) / p).collect();
        bs.sort_unstable();
        let b_red = Multiset::from_set(&zq, &bs)?;
        tau_transfer &= tau_transfer_holds(&b_red, m, p)?;
        pairs.push(TilingPair::new(&a_red, &b_red)?);
        classes.push((r, bs));
    }
    Ok(SubgroupReduction { prime: p, a_reduced, classes, pairs, tau_transfer })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlabData {
    pub direction: usize,
    /// `A_{p_i} = {a : 0 <= pi_i(a) < p_i^{n_i - 1}}`.
    pub slab: Vec<u64>,
    /// `S = A_{p_i} * F_i`.
    pub extension: Vec<u64>,
    /// `A_nu = {a : nu p^{n-1} <= pi_i(a) < (nu + 1) p^{n-1}}`.
    pub layers: Vec<Vec<u64>>,
}

pub fn slab(a: &Multiset, i: usize) -> Result<SlabData> {
    let m = a.modulus();
    m.check_direction(i)?;
    let p = m.prime(i);
    let h = m.prime_power(i) / p;
    let mut layers = vec![Vec::new(); p as usize];
    for x in a.support() {
        layers[(m.coord(x, i) / h) as usize].push(x);
    }
    let slab = layers[0].clone();
    let step = m.value() / p;
    let mut extension: Vec<u64> = slab.iter().flat_map(|&x| (0..p).map(move |j| (x + j * step) % m.value())).collect();
    extension.sort_unstable();
    Ok(SlabData { direction: i, slab, extension, layers })
}

/// `pi_i`-unit vector: coordinates zero except `pi_i = 1`.
fn unit(m: &Modulus, i: usize) -> Result<u64> {
    let mut c = vec![0; m.k()];
    c[i] = 1;
    m.from_coords(&c)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlabConditions {
    pub direction: usize,
    /// Every translate's slab tiles `Z_{M/p_i}` with `B`.
    pub cond_i: bool,
    /// For `p_i^{n_i} | d | M`: `Phi_d | A` or `Phi_{d/p_i^k} | B` for all `k`.
    pub cond_ii: bool,
    /// For `p_i^{n_i} | m | M`: `m in Div(A)` excludes `m/p_i in Div(B)`.
    pub cond_iii: bool,
    /// First `pi_i`-shift whose slab fails to tile.
    pub failing_shift: Option<u64>,
}

impl SlabConditions {
    pub fn agree(&self) -> bool {
        self.cond_i == self.cond_ii && self.cond_ii == self.cond_iii
    }

    pub fn all(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_iii
    }
}

fn slab_tiles(a: &Multiset, b: &Multiset, i: usize, zq: &Modulus) -> Result<bool> {
    let s = slab(a, i)?;
    let sr = match Multiset::from_residues(zq, s.slab.iter().map(|&x| x as i128)) {
        Ok(v) => v,
        Err(_) => return Ok(false),
    };
    let br = b.reduce_mod(zq.value())?;
    if !sr.is_set() || !br.is_set() {
        return Ok(false);
    }
    Ok(tiling::verify(&sr, &br)?.tiles())
}

/// The three slab conditions, each computed on its own. Requires
/// `Phi_{p_i^{n_i}} | A`.
pub fn slab_conditions(pair: &TilingPair, i: usize) -> Result<SlabConditions> {
    let (a, b) = (pair.a(), pair.b());
    let m = pair.modulus();
    m.check_direction(i)?;
    let p = m.prime(i);
    let q = m.prime_power(i);
    if !divides(a, q)? {
        return Err(Error::NotApplicable(format!("Phi_{q} does not divide A")));
    }
    let zq = quotient(m, p)?;
    let e = unit(m, i)?;
    let mut failing_shift = None;
    for c in 0..q {
        let shifted = a.translate(m.mul(c, e));
        if !slab_tiles(&shifted, b, i, &zq)? {
            failing_shift = Some(c);
            break;
        }
    }
    let tops: Vec<u64> = m.divisors_sorted().into_iter().filter(|d| d % q == 0).collect();
    let mut cond_ii = true;
    for &d in &tops {
        if divides(a, d)? {
            continue;
        }
        let mut all_b = true;
        for k in 1..=m.exponent(i) {
            let s = d / p.pow(k);
            if s > 1 && !divides(b, s)? {
                all_b = false;
                break;
            }
        }
        if !all_b {
            cond_ii = false;
            break;
        }
    }
    let div_a = tiling::div(a)?;
    let div_b = tiling::div(b)?;
    let cond_iii = tops.iter().all(|&d| !(div_a.contains(d) && div_b.contains(d / p)));
    Ok(SlabConditions { direction: i, cond_i: failing_shift.is_none(), cond_ii, cond_iii, failing_shift })
}

#[derive(Clone, Debug, Serialize)]
pub struct SlabReduction {
    pub direction: usize,
    #[serde(skip)]
    pub pair: TilingPair,
    pub t2_a: bool,
    pub t2_b: bool,
    pub t2_reduced_a: bool,
    pub t2_reduced_b: bool,
}

impl SlabReduction {
    /// Reduced T2 on both sides forces T2 on both sides of the original.
    pub fn t2_transfer_ok(&self) -> bool {
        !(self.t2_reduced_a && self.t2_reduced_b) || (self.t2_a && self.t2_b)
    }
}

/// `A_{p_i} ⊕ B = Z_{M/p_i}` once all three slab conditions hold.
pub fn slab_reduce(pair: &TilingPair, i: usize) -> Result<SlabReduction> {
    let c = slab_conditions(pair, i)?;
    if !c.all() {
        return Err(Error::HypothesisViolated(format!("slab conditions fail in direction {i}: {c:?}")));
    }
    let m = pair.modulus();
    let zq = quotient(m, m.prime(i))?;
    let s = slab(pair.a(), i)?;
    let sr = Multiset::from_residues(&zq, s.slab.iter().map(|&x| x as i128))?;
    let reduced = TilingPair::new(&sr, &pair.b().reduce_mod(zq.value())?)?;
    Ok(SlabReduction {
        direction: i,
        t2_a: cyclotomic::t2_check(pair.a())?.holds,
        t2_b: cyclotomic::t2_check(pair.b())?.holds,
        t2_reduced_a: cyclotomic::t2_check(reduced.a())?.holds,
        t2_reduced_b: cyclotomic::t2_check(reduced.b())?.holds,
        pair: reduced,
    })
}

/// Which factor a reduction step acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    /// At most two primes divide both `|A|` and `|B|`; T2 holds outright.
    Base { common_primes: Vec<u64> },
    /// `A -> pA` for `p ∤ |A|`, followed by the subgroup reduction.
    Tijdeman { prime: u64, side: Side },
    Subgroup { prime: u64, side: Side },
    Slab { prime: u64, side: Side },
    /// No reduction applies, or the node budget ran out.
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceNode {
    pub modulus: u64,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub step: Step,
    pub children: Vec<TraceNode>,
}

impl TraceNode {
    pub fn stuck(&self) -> bool {
        self.step == Step::Stuck || self.children.iter().any(|c| c.stuck())
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DriverReport {
    pub trace: TraceNode,
    /// T2 established through the reduction tree.
    pub proved: bool,
    /// Direct `t2_check` on both factors.
    pub t2_direct: bool,
    /// `proved` implies `t2_direct`, and a finished tree proves T2.
    pub consistent: bool,
}

/// Strategy for a single reduction request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Subgroup(usize),
    Slab(usize),
}

pub const DRIVER_NODE_CAP: usize = 10_000;

fn common_primes(pair: &TilingPair) -> Result<Vec<u64>> {
    let m = pair.modulus();
    let (sa, sb) = (pair.a().total()? as u64, pair.b().total()? as u64);
    Ok(m.primes().iter().copied().filter(|&p| sa % p == 0 && sb % p == 0).collect())
}

fn orient(pair: &TilingPair, side: Side) -> TilingPair {
    match side {
        Side::A => pair.clone(),
        Side::B => pair.swapped(),
    }
}

fn unorient(pair: TilingPair, side: Side) -> TilingPair {
    match side {
        Side::A => pair,
        Side::B => pair.swapped(),
    }
}

fn dedup(pairs: Vec<TilingPair>) -> Vec<TilingPair> {
    let mut seen = BTreeSet::new();
    pairs
        .into_iter()
        .filter(|p| seen.insert((p.a().canonical().0.support(), p.b().canonical().0.support())))
        .collect()
}

/// Children of one reduction step, or `None` if it does not apply.
fn apply(pair: &TilingPair, step: &Step) -> Result<Option<Vec<TilingPair>>> {
    let m = pair.modulus();
    match *step {
        Step::Tijdeman { prime, side } => {
            let o = orient(pair, side);
            let size = o.a().total()? as u64;
            if size % prime == 0 || m.value() == prime || o.a().support().iter().all(|x| x % prime == 0) {
                return Ok(None);
            }
            let scaled = tiling::tijdeman_scale(&o, prime)?;
            let r = subgroup_reduce(&scaled, prime)?;
            Ok(Some(r.pairs.into_iter().map(|q| unorient(q, side)).collect()))
        }
        Step::Subgroup { prime, side } => {
            let o = orient(pair, side);
            if m.value() == prime || o.a().support().iter().any(|x| x % prime != 0) {
                return Ok(None);
            }
            let r = subgroup_reduce(&o, prime)?;
            Ok(Some(r.pairs.into_iter().map(|q| unorient(q, side)).collect()))
        }
        Step::Slab { prime, side } => {
            let o = orient(pair, side);
            let i = m.direction_of(prime).expect("prime of M");
            if m.value() == prime || !divides(o.a(), m.prime_power(i))? || !slab_conditions(&o, i)?.all() {
                return Ok(None);
            }
            let zq = quotient(m, prime)?;
            let e = unit(m, i)?;
            let br = o.b().reduce_mod(zq.value())?;
            let mut out = Vec::new();
            for c in 0..m.prime_power(i) {
                let s = slab(&o.a().translate(m.mul(c, e)), i)?;
                let sr = Multiset::from_residues(&zq, s.slab.iter().map(|&x| x as i128))?;
                out.push(unorient(TilingPair::new(&sr, &br)?, side));
            }
            Ok(Some(out))
        }
        Step::Base { .. } | Step::Stuck => Ok(None),
    }
}

fn candidates(m: &Modulus, strategy: Strategy) -> Vec<Step> {
    let mut primes = m.primes().to_vec();
    primes.sort_unstable();
    match strategy {
        Strategy::Auto => {
            let mut v = Vec::new();
            for side in [Side::A, Side::B] {
                v.extend(primes.iter().map(|&prime| Step::Tijdeman { prime, side }));
            }
            for side in [Side::A, Side::B] {
                v.extend(primes.iter().map(|&prime| Step::Subgroup { prime, side }));
            }
            for side in [Side::A, Side::B] {
                v.extend(primes.iter().map(|&prime| Step::Slab { prime, side }));
            }
            v
        }
        Strategy::Subgroup(i) => {
            let prime = m.prime(i);
            vec![Step::Subgroup { prime, side: Side::A }, Step::Subgroup { prime, side: Side::B }]
        }
        Strategy::Slab(i) => {
            let prime = m.prime(i);
            vec![Step::Slab { prime, side: Side::A }, Step::Slab { prime, side: Side::B }]
        }
    }
}

fn drive(pair: &TilingPair, strategy: Strategy, budget: &mut usize) -> Result<TraceNode> {
    let node = |step, children| TraceNode {
        modulus: pair.modulus().value(),
        a: pair.a().support(),
        b: pair.b().support(),
        step,
        children,
    };
    if *budget == 0 {
        return Ok(node(Step::Stuck, Vec::new()));
    }
    *budget -= 1;
    let common = common_primes(pair)?;
    if strategy == Strategy::Auto && common.len() <= 2 {
        return Ok(node(Step::Base { common_primes: common }, Vec::new()));
    }
    for step in candidates(pair.modulus(), strategy) {
        if let Some(children) = apply(pair, &step)? {
            let mut traced = Vec::new();
            for c in dedup(children) {
                traced.push(drive(&c, Strategy::Auto, budget)?);
            }
            return Ok(node(step, traced));
        }
    }
    Ok(node(Step::Stuck, Vec::new()))
}

/// Applies Tijdeman, subgroup and slab reductions in that order (primes
/// ascending, `A` before `B`) until every leaf has at most two primes
/// dividing both factor sizes. The verdict is compared with a direct T2 test.
pub fn t2_induction_driver(pair: &TilingPair, strategy: Strategy, cap: usize) -> Result<DriverReport> {
    if let Strategy::Subgroup(i) | Strategy::Slab(i) = strategy {
        pair.modulus().check_direction(i)?;
    }
    let mut budget = cap;
    let trace = drive(pair, strategy, &mut budget)?;
    let proved = !trace.stuck();
    let t2_direct = cyclotomic::t2_check(pair.a())?.holds && cyclotomic::t2_check(pair.b())?.holds;
    Ok(DriverReport { trace, proved, t2_direct, consistent: !proved || t2_direct })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlabQuestion {
    /// Directions `(i, side)` with `Phi_{p_i^{n_i}}` dividing that side.
    pub applicable: Vec<(usize, Side)>,
    /// Those among them where some translate's slab fails to tile.
    pub strong_failures: Vec<(usize, Side)>,
    /// Some direction and side where every slab tiles.
    pub weak_holds: bool,
}

/// Evidence for the two slab questions: the strong form asks that every
/// applicable direction reduce, the weak form that at least one does.
pub fn slab_question(pair: &TilingPair) -> Result<SlabQuestion> {
    let m = pair.modulus();
    let mut applicable = Vec::new();
    let mut strong_failures = Vec::new();
    let mut weak_holds = false;
    for side in [Side::A, Side::B] {
        let o = orient(pair, side);
        for i in 0..m.k() {
            if m.value() == m.prime(i) || !divides(o.a(), m.prime_power(i))? {
                continue;
            }
            applicable.push((i, side));
            let c = slab_conditions(&o, i)?;
            if !c.agree() {
                return Err(Error::Inconsistent(format!("slab conditions disagree: {c:?}")));
            }
            if c.cond_i {
                weak_holds = true;
            } else {
                strong_failures.push((i, side));
            }
        }
    }
    Ok(SlabQuestion { applicable, strong_failures, weak_holds })
}

/// `Phi_{p_i^{n_i}} | A` implies `M/p_i ∉ Div(B)`, both ways round.
/// Returns the violating `(i, side)` pairs.
pub fn one_divisor_violations(pair: &TilingPair) -> Result<Vec<(usize, Side)>> {
    let m = pair.modulus();
    let mut out = Vec::new();
    for side in [Side::A, Side::B] {
        let o = orient(pair, side);
        let div_b = tiling::div(o.b())?;
        for i in 0..m.k() {
            if divides(o.a(), m.prime_power(i))? && div_b.contains(m.value() / m.prime(i)) {
                out.push((i, side));
            }
        }
    }
    Ok(out)
}
