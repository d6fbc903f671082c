//! Tiling pairs `A ⊕ B = Z_M`: three independent tests that must agree,
//! divisor sets, the standard complement `A^flat`, Tijdeman dilations and
//! the plane-count bound.

use serde::Serialize;

use crate::arith;
use crate::cyclotomic::{self, CyclotomicProfile};
use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::zmod::Modulus;

/// `Div_N(A) = {(a - a', N) : a, a' in A}` as a subset of the divisors of N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorSet {
    modulus: Modulus,
    present: Vec<bool>,
}

impl DivisorSet {
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn contains(&self, d: u64) -> bool {
        match self.modulus.index_of_divisor(d) {
            Ok(idx) => self.present[idx],
            Err(_) => false,
        }
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        self.present[idx]
    }

    /// Members, ascending.
    pub fn values(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| self.modulus.divisors()[i])
            .collect();
        v.sort_unstable();
        v
    }

    /// Smallest common member other than N itself.
    pub fn shared_proper(&self, other: &DivisorSet) -> Option<u64> {
        let top = self.modulus.value();
        self.values().into_iter().find(|&d| d != top && other.contains(d))
    }
}

/// `Div_N(A)` for `N | M`, taken over the support of `A`.
pub fn divisor_set(a: &Multiset, n: u64) -> Result<DivisorSet> {
    let zn = a.modulus().divisor_modulus(n)?;
    let mut present = vec![false; zn.num_divisors()];
    let supp = a.support();
    if !supp.is_empty() {
        present[zn.num_divisors() - 1] = true;
    }
    for (k, &x) in supp.iter().enumerate() {
        for &y in &supp[k + 1..] {
            present[zn.gcd_index((y - x) % n)] = true;
        }
    }
    Ok(DivisorSet { modulus: zn, present })
}

pub fn div(a: &Multiset) -> Result<DivisorSet> {
    divisor_set(a, a.modulus().value())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    NotASet { which: char },
    CardinalityMismatch { a: i64, b: i64, modulus: u64 },
    Uncovered { x: u64 },
    MultiplyCovered { x: u64, count: i64 },
    SharedDivisor { m: u64 },
    CyclotomicUndivided { s: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CriterionResult {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl CriterionResult {
    fn pass() -> Self {
        CriterionResult { holds: true, witness: None }
    }
    fn fail(w: Witness) -> Self {
        CriterionResult { holds: false, witness: Some(w) }
    }
}

/// Outcome of all three tiling tests. None of them short-circuits another.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub modulus: u64,
    pub direct: CriterionResult,
    pub divisor_exclusion: CriterionResult,
    pub cyclotomic: CriterionResult,
    pub consistent: bool,
}

impl VerifyReport {
    pub fn tiles(&self) -> bool {
        self.consistent && self.direct.holds
    }

    pub fn first_failure(&self) -> Option<&Witness> {
        [&self.direct, &self.divisor_exclusion, &self.cyclotomic]
            .into_iter()
            .find_map(|c| c.witness.as_ref())
    }

    pub fn summary(&self) -> String {
        match (self.consistent, self.first_failure()) {
            (false, _) => format!(
                "criteria disagree (direct {}, divisor {}, cyclotomic {})",
                self.direct.holds, self.divisor_exclusion.holds, self.cyclotomic.holds
            ),
            (true, None) => "tiles".into(),
            (true, Some(w)) => format!("{w:?}"),
        }
    }
}

fn cardinalities(a: &Multiset, b: &Multiset) -> Result<Option<Witness>> {
    let (ka, kb) = (a.total()?, b.total()?);
    let m = a.modulus().value();
    if ka as i128 * kb as i128 != m as i128 {
        return Ok(Some(Witness::CardinalityMismatch { a: ka, b: kb, modulus: m }));
    }
    Ok(None)
}

fn direct_criterion(a: &Multiset, b: &Multiset) -> Result<CriterionResult> {
    let c = a.convolve(b)?;
    for (x, &w) in c.weights().iter().enumerate() {
        if w == 0 {
            return Ok(CriterionResult::fail(Witness::Uncovered { x: x as u64 }));
        }
        if w != 1 {
            return Ok(CriterionResult::fail(Witness::MultiplyCovered { x: x as u64, count: w }));
        }
    }
    Ok(CriterionResult::pass())
}

fn divisor_criterion(a: &Multiset, b: &Multiset) -> Result<CriterionResult> {
    if let Some(w) = cardinalities(a, b)? {
        return Ok(CriterionResult::fail(w));
    }
    match div(a)?.shared_proper(&div(b)?) {
        Some(m) => Ok(CriterionResult::fail(Witness::SharedDivisor { m })),
        None => Ok(CriterionResult::pass()),
    }
}

fn cyclotomic_criterion(a: &Multiset, b: &Multiset) -> Result<CriterionResult> {
    if let Some(w) = cardinalities(a, b)? {
        return Ok(CriterionResult::fail(w));
    }
    for s in a.modulus().divisors_sorted() {
        if s == 1 {
            continue;
        }
        if !cyclotomic::divides(a, s)? && !cyclotomic::divides(b, s)? {
            return Ok(CriterionResult::fail(Witness::CyclotomicUndivided { s }));
        }
    }
    Ok(CriterionResult::pass())
}

/// Runs the direct cover test, the divisor-exclusion test and the
/// cyclotomic test on `(A, B)`.
pub fn verify(a: &Multiset, b: &Multiset) -> Result<VerifyReport> {
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch { left: a.modulus().value(), right: b.modulus().value() });
    }
    let m = a.modulus().value();
    for (which, s) in [('A', a), ('B', b)] {
        if !s.is_set() {
            let f = CriterionResult::fail(Witness::NotASet { which });
            return Ok(VerifyReport {
                modulus: m,
                direct: f.clone(),
                divisor_exclusion: f.clone(),
                cyclotomic: f,
                consistent: true,
            });
        }
    }
    let direct = direct_criterion(a, b)?;
    let divisor_exclusion = divisor_criterion(a, b)?;
    let cyclotomic = cyclotomic_criterion(a, b)?;
    let consistent = direct.holds == divisor_exclusion.holds && direct.holds == cyclotomic.holds;
    Ok(VerifyReport { modulus: m, direct, divisor_exclusion, cyclotomic, consistent })
}

/// A verified tiling. Both factors are stored translated so that their
/// smallest element is 0; the raw inputs are `a + a_shift`, `b + b_shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingPair {
    a: Multiset,
    b: Multiset,
    a_shift: u64,
    b_shift: u64,
}

impl TilingPair {
    /// Verifies `A ⊕ B = Z_M` and normalizes. Fails with
    /// [`Error::NotATiling`] carrying the full report, or with
    /// [`Error::Inconsistent`] if the three tests disagree.
    pub fn new(a: &Multiset, b: &Multiset) -> Result<TilingPair> {
        let report = verify(a, b)?;
        if !report.consistent {
            return Err(Error::Inconsistent(report.summary()));
        }
        if !report.direct.holds {
            return Err(Error::NotATiling(Box::new(report)));
        }
        let a_shift = a.support()[0];
        let b_shift = b.support()[0];
        Ok(TilingPair { a: a.normalized(), b: b.normalized(), a_shift, b_shift })
    }

    pub fn from_sets(m: u64, a: &[u64], b: &[u64]) -> Result<TilingPair> {
        let z = Modulus::new(m)?;
        TilingPair::new(&Multiset::from_set(&z, a)?, &Multiset::from_set(&z, b)?)
    }

    pub fn modulus(&self) -> &Modulus {
        self.a.modulus()
    }

    pub fn a(&self) -> &Multiset {
        &self.a
    }

    pub fn b(&self) -> &Multiset {
        &self.b
    }

    pub fn raw_a(&self) -> Multiset {
        self.a.translate(self.a_shift)
    }

    pub fn raw_b(&self) -> Multiset {
        self.b.translate(self.b_shift)
    }

    pub fn shifts(&self) -> (u64, u64) {
        (self.a_shift, self.b_shift)
    }

    /// `(B, A)`, which tiles as well.
    pub fn swapped(&self) -> TilingPair {
        TilingPair { a: self.b.clone(), b: self.a.clone(), a_shift: self.b_shift, b_shift: self.a_shift }
    }
}

/// `frak A_i(A) = {alpha : Phi_{p_i^alpha} | A}` for every direction.
pub fn standard_exponents(a: &Multiset) -> Result<Vec<Vec<u32>>> {
    let prof = cyclotomic::profile(a)?;
    Ok(standard_exponents_from(&prof, a.modulus()))
}

fn standard_exponents_from(prof: &CyclotomicProfile, m: &Modulus) -> Vec<Vec<u32>> {
    (0..m.k()).map(|i| prof.exponents_for(m.prime(i))).collect()
}

/// The standard set with the given prime-power exponents:
/// `prod_i prod_{alpha in E_i} Phi_{p_i}(X^{M_i p_i^{alpha-1}})`.
pub fn standard_set(m: &Modulus, exps: &[Vec<u32>]) -> Result<Multiset> {
    let mut acc = Multiset::from_set(m, &[0])?;
    for (i, list) in exps.iter().enumerate() {
        let p = m.prime(i);
        for &alpha in list {
            if alpha == 0 || alpha > m.exponent(i) {
                return Err(Error::InvalidArgument(format!("exponent {alpha} out of range for p = {p}")));
            }
            let step = m.cofactor(i) * p.pow(alpha - 1);
            let factor: Vec<u64> = (0..p).map(|k| k * step).collect();
            acc = acc.convolve(&Multiset::from_set(m, &factor)?)?;
        }
    }
    Ok(acc)
}

/// `A^flat`, the standard set carrying the same prime-power cyclotomic
/// divisors as `A`.
pub fn standard_complement(a: &Multiset) -> Result<Multiset> {
    standard_set(a.modulus(), &standard_exponents(a)?)
}

/// Closed form of `Div(A^flat)`: all `prod_i p_i^{alpha_i - 1}` with
/// `alpha_i in frak A_i(A) ∪ {n_i + 1}`, ascending.
pub fn standard_divisors(m: &Modulus, exps: &[Vec<u32>]) -> Vec<u64> {
    let mut out = vec![1u64];
    for i in 0..m.k() {
        let p = m.prime(i);
        let mut choices: Vec<u64> = exps[i].iter().map(|&a| p.pow(a - 1)).collect();
        choices.push(p.pow(m.exponent(i)));
        out = out.iter().flat_map(|&d| choices.iter().map(move |&c| d * c)).collect();
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The three conditions of the replacement criterion for a tiling
/// `A ⊕ B`, which should all hold or all fail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplacementReport {
    pub div_disjoint: bool,
    pub flat_tiles: bool,
    pub b_t2: bool,
}

impl ReplacementReport {
    pub fn agree(&self) -> bool {
        self.div_disjoint == self.flat_tiles && self.flat_tiles == self.b_t2
    }
}

pub fn replacement_check(pair: &TilingPair) -> Result<ReplacementReport> {
    let flat = standard_complement(pair.a())?;
    let div_disjoint = div(&flat)?.shared_proper(&div(pair.b())?).is_none();
    let flat_tiles = verify(&flat, pair.b())?.direct.holds;
    let b_t2 = cyclotomic::t2_check(pair.b())?.holds;
    Ok(ReplacementReport { div_disjoint, flat_tiles, b_t2 })
}

/// `rA mod M` with `(r, |A|) = 1`, re-verified against the same `B`.
pub fn tijdeman_scale(pair: &TilingPair, r: u64) -> Result<TilingPair> {
    let size = pair.a().total()? as u64;
    if arith::gcd(r, size) != 1 {
        return Err(Error::InvalidArgument(format!("r = {r} is not coprime to |A| = {size}")));
    }
    let scaled = pair.a().dilate(r)?;
    TilingPair::new(&scaled, pair.b())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlaneBoundViolation {
    pub x: u64,
    pub direction: usize,
    pub alpha: u32,
    pub count: i64,
    pub bound: u64,
}

/// Checks `|A ∩ Pi(x, p_i^{n_i - alpha})| <= p_i^alpha prod_{nu != i} p_nu^{beta_nu}`
/// for every plane, where `|A| = prod p_nu^{beta_nu}`. `A` must have
/// cardinality dividing M.
pub fn plane_bound_scan(a: &Multiset) -> Result<Vec<PlaneBoundViolation>> {
    let m = a.modulus();
    let size = a.total()? as u64;
    if size == 0 || m.value() % size != 0 {
        return Err(Error::InvalidArgument(format!("|A| = {size} does not divide {}", m.value())));
    }
    let mut out = Vec::new();
    for i in 0..m.k() {
        let p = m.prime(i);
        let n = m.exponent(i);
        let beta = arith::valuation(size, p);
        let rest = size / p.pow(beta);
        for alpha in 0..=n {
            let q = p.pow(n - alpha);
            let counts = a.reduce_mod(q)?;
            let bound = p.pow(alpha) * rest;
            for x in 0..q {
                let c = counts.weight(x);
                if c > bound as i64 {
                    out.push(PlaneBoundViolation { x, direction: i, alpha, count: c, bound });
                }
            }
        }
    }
    Ok(out)
}
