//! Restricted boxes, saturating sets and Span/Bispan geometry.
//!
//! For a tiling `A ⊕ B = Z_M` and `x in Z_M`, the saturating set
//! `A_x = {a in A : (x - a, M) in Div(B)}` is the smallest subset of `A` whose
//! restricted M-box still has product 1 against every `B^M[b]`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::arith::euler_phi;
use crate::boxes::{box_product, nbox, NBox, Rational};
use crate::error::{Error, Result};
use crate::fibers::{self, FiberChain};
use crate::multiset::Multiset;
use crate::tiling::{self, TilingPair};
use crate::zmod::Modulus;

/// `A^N[x | X]`: only elements of `A` lying in `X` are counted.
pub fn restricted_nbox(a: &Multiset, n: u64, x: u64, subset: &[u64]) -> Result<NBox> {
    let m = a.modulus();
    m.check_element(x)?;
    let mut keep = vec![false; m.size()];
    for &z in subset {
        m.check_element(z)?;
        keep[z as usize] = true;
    }
    nbox(&a.restrict(|z| keep[z as usize]), n, x)
}

/// Divisor indices `(y - b, M)` for `b in B`, as a membership table.
fn gcd_table(m: &Modulus, y: u64, b: &[u64]) -> Vec<bool> {
    let mut t = vec![false; m.num_divisors()];
    for &z in b {
        t[m.gcd_index(m.sub(y, z))] = true;
    }
    t
}

fn div_table(m: &Modulus, b: &[u64]) -> Vec<bool> {
    let mut t = vec![false; m.num_divisors()];
    for &z in b {
        for &w in b {
            t[m.gcd_index(m.sub(z, w))] = true;
        }
    }
    t
}

fn sets_of(a: &Multiset, b: &Multiset) -> Result<()> {
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch { left: a.modulus().value(), right: b.modulus().value() });
    }
    if !a.is_set() || !b.is_set() {
        return Err(Error::InvalidArgument("saturating sets need 0/1 weights".into()));
    }
    Ok(())
}

/// `A_{x,y} = {a in A : (x - a, M) = (y - b, M) for some b in B}`.
pub fn a_xy(a: &Multiset, b: &Multiset, x: u64, y: u64) -> Result<Vec<u64>> {
    sets_of(a, b)?;
    let m = a.modulus();
    m.check_element(x)?;
    m.check_element(y)?;
    let t = gcd_table(m, y, &b.support());
    Ok(a.support().into_iter().filter(|&z| t[m.gcd_index(m.sub(x, z))]).collect())
}

/// `A_x` straight from the divisor set of `B`.
pub fn a_x(a: &Multiset, b: &Multiset, x: u64) -> Result<Vec<u64>> {
    sets_of(a, b)?;
    let m = a.modulus();
    m.check_element(x)?;
    let t = div_table(m, &b.support());
    Ok(a.support().into_iter().filter(|&z| t[m.gcd_index(m.sub(x, z))]).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Saturated {
    pub b: u64,
    /// `A_{x,b}`.
    pub elements: Vec<u64>,
    /// Divisors `m` with `A_m[x] B_m[b] > 0`.
    pub divisors: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SaturatingSet {
    pub x: u64,
    pub per_b: Vec<Saturated>,
    /// `A_x`.
    pub union: Vec<u64>,
}

/// `A_x` for the normalized pair, computed from divisor membership and then
/// re-derived from restricted box products. Any disagreement between the two
/// routes is reported as [`Error::Inconsistent`].
pub fn saturating_set(pair: &TilingPair, x: u64) -> Result<SaturatingSet> {
    let (a, b) = (pair.a(), pair.b());
    let m = a.modulus();
    m.check_element(x)?;
    let union = a_x(a, b, x)?;
    let bs = b.support();
    let a_box = nbox(a, m.value(), x)?;
    let mut per_b = Vec::with_capacity(bs.len());
    let mut seen = BTreeSet::new();
    for &y in &bs {
        let elements = a_xy(a, b, x, y)?;
        let b_box = nbox(b, m.value(), y)?;
        let restricted = restricted_nbox(a, m.value(), x, &elements)?;
        let product = box_product(&restricted, &b_box)?;
        if product != Rational::from_integer(1) {
            return Err(Error::Inconsistent(format!(
                "restricted product over A_({x},{y}) is {product}, expected 1"
            )));
        }
        for &z in &elements {
            let d = m.gcd_value(m.sub(x, z));
            let drop = Rational::new(b_box.entry(d) as i128, euler_phi(m.value() / d) as i128);
            if product - drop == Rational::from_integer(1) {
                return Err(Error::Inconsistent(format!("A_({x},{y}) is not minimal at {z}")));
            }
        }
        let divisors = a_box
            .by_divisor()
            .into_iter()
            .filter(|&(d, v)| v > 0 && b_box.entry(d) > 0)
            .map(|(d, _)| d)
            .collect();
        seen.extend(elements.iter().copied());
        per_b.push(Saturated { b: y, elements, divisors });
    }
    let from_boxes: Vec<u64> = seen.into_iter().collect();
    if from_boxes != union {
        return Err(Error::Inconsistent(format!("A_{x} differs between the two definitions")));
    }
    if union.is_empty() {
        return Err(Error::Inconsistent(format!("A_{x} is empty")));
    }
    Ok(SaturatingSet { x, per_b, union })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanSet {
    pub x: u64,
    pub x_prime: u64,
    pub elements: Vec<u64>,
}

/// `z in Span(x, x')`. Empty when `x = x'`.
pub fn span_contains(m: &Modulus, x: u64, xp: u64, z: u64) -> bool {
    let g = m.gcd_div(m.sub(x, xp));
    let h = m.gcd_div(m.sub(z, x));
    (0..m.k()).any(|i| {
        let alpha = g.exponent(i);
        alpha < m.exponent(i) && h.exponent(i) > alpha
    })
}

pub fn bispan_contains(m: &Modulus, x: u64, xp: u64, z: u64) -> bool {
    span_contains(m, x, xp, z) || span_contains(m, xp, x, z)
}

fn distinct(m: &Modulus, x: u64, xp: u64) -> Result<()> {
    m.check_element(x)?;
    m.check_element(xp)?;
    if x == xp {
        return Err(Error::InvalidArgument(format!("Span({x}, {xp}) needs distinct points")));
    }
    Ok(())
}

/// `Span(x, x') = union over i with alpha_i < n_i of Pi(x, p_i^{alpha_i + 1})`.
pub fn span(m: &Modulus, x: u64, xp: u64) -> Result<SpanSet> {
    distinct(m, x, xp)?;
    let elements = (0..m.value()).filter(|&z| span_contains(m, x, xp, z)).collect();
    Ok(SpanSet { x, x_prime: xp, elements })
}

pub fn bispan(m: &Modulus, x: u64, xp: u64) -> Result<SpanSet> {
    distinct(m, x, xp)?;
    let elements = (0..m.value()).filter(|&z| bispan_contains(m, x, xp, z)).collect();
    Ok(SpanSet { x, x_prime: xp, elements })
}

/// `A_x ⊂ Bispan(x, a)` for every `a in A` other than `x` itself.
pub fn bispan_bound_check(pair: &TilingPair, x: u64) -> Result<bool> {
    let m = pair.modulus();
    let ax = a_x(pair.a(), pair.b(), x)?;
    let a = pair.a().support();
    Ok(ax.iter().all(|&z| a.iter().filter(|&&w| w != x).all(|&w| bispan_contains(m, x, w, z))))
}

/// `A_{x',y} ⊂ A_{x,y} ∪ Bispan(x, x')`, valid for arbitrary sets.
pub fn setplusspan_check(a: &Multiset, b: &Multiset, x: u64, xp: u64, y: u64) -> Result<bool> {
    let m = a.modulus();
    let lhs = a_xy(a, b, xp, y)?;
    let rhs: BTreeSet<u64> = a_xy(a, b, x, y)?.into_iter().collect();
    Ok(lhs.iter().all(|z| rhs.contains(z) || bispan_contains(m, x, xp, *z)))
}

/// Whether `(m, m')` meets the exponent hypothesis of enhanced exclusion:
/// not both equal to M, and at each prime the exponents differ or are both full.
pub fn exclusion_pair_allowed(m: &Modulus, d: u64, dp: u64) -> Result<bool> {
    let e = m.divisor_idx(d)?;
    let ep = m.divisor_idx(dp)?;
    if d == m.value() && dp == m.value() {
        return Ok(false);
    }
    Ok((0..m.k()).all(|i| e.exponent(i) != ep.exponent(i) || e.exponent(i) == m.exponent(i)))
}

/// `A_m[x] A_{m'}[x] B_m[y] B_{m'}[y] = 0`.
pub fn enhanced_exclusion_check(pair: &TilingPair, x: u64, y: u64, d: u64, dp: u64) -> Result<bool> {
    let m = pair.modulus();
    if !exclusion_pair_allowed(m, d, dp)? {
        return Err(Error::HypothesisViolated(format!("({d}, {dp}) does not meet the exponent condition")));
    }
    let ab = nbox(pair.a(), m.value(), x)?;
    let bb = nbox(pair.b(), m.value(), y)?;
    let prod = ab.entry(d) as i128 * ab.entry(dp) as i128 * bb.entry(d) as i128 * bb.entry(dp) as i128;
    Ok(prod == 0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExclusionViolation {
    pub x: u64,
    pub y: u64,
    pub m: u64,
    pub m_prime: u64,
}

fn occupied(m: &Modulus, x: u64, s: &[u64]) -> Vec<usize> {
    let mut v: Vec<usize> = s.iter().map(|&z| m.gcd_index(m.sub(x, z))).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Enhanced exclusion over every `(x, y, m, m')`. Returns at most `limit`
/// violations.
pub fn enhanced_exclusion_scan(pair: &TilingPair, limit: usize) -> Result<Vec<ExclusionViolation>> {
    let m = pair.modulus();
    let nd = m.num_divisors();
    let mut allowed = vec![false; nd * nd];
    for u in 0..nd {
        for v in 0..nd {
            let (du, dv) = (m.divisors()[u], m.divisors()[v]);
            allowed[u * nd + v] = exclusion_pair_allowed(m, du, dv)?;
        }
    }
    let (a, b) = (pair.a().support(), pair.b().support());
    let a_occ: Vec<Vec<usize>> = (0..m.value()).map(|x| occupied(m, x, &a)).collect();
    let b_occ: Vec<Vec<usize>> = (0..m.value()).map(|y| occupied(m, y, &b)).collect();
    let mut out = Vec::new();
    for (x, ao) in a_occ.iter().enumerate() {
        for (y, bo) in b_occ.iter().enumerate() {
            let common: Vec<usize> = ao.iter().copied().filter(|u| bo.binary_search(u).is_ok()).collect();
            for (k, &u) in common.iter().enumerate() {
                for &v in &common[k..] {
                    if allowed[u * nd + v] {
                        out.push(ExclusionViolation {
                            x: x as u64,
                            y: y as u64,
                            m: m.divisors()[u],
                            m_prime: m.divisors()[v],
                        });
                        if out.len() >= limit {
                            return Ok(out);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Whether `{m : D(M) | m | M, m != M}` avoids `Div(B)`.
pub fn no_top_divisors(b: &Multiset) -> Result<bool> {
    let m = b.modulus();
    let dm = m.top_grid_step(m.value())?;
    let div_b = tiling::div(b)?;
    Ok(div_b.values().iter().all(|&d| d == m.value() || d % dm != 0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MissingJoint {
    pub x: u64,
    /// `a_i` with `(x - a_i, M) = M/p_i`, one per prime.
    pub joints: Vec<u64>,
}

/// Points `x ∉ A` having some `a_i in A` with `(x - a_i, M) = M/p_i` for
/// every `i`. Needs `{m : D(M) | m | M, m != M} ∩ Div(B) = ∅`, otherwise
/// [`Error::NotApplicable`]. On a tiling the result is empty; `A` and `B`
/// need not tile, so that defects can be located.
pub fn missing_joint_scan(a: &Multiset, b: &Multiset) -> Result<Vec<MissingJoint>> {
    sets_of(a, b)?;
    if !no_top_divisors(b)? {
        return Err(Error::NotApplicable("Div(B) meets the top divisors {D(M) | m | M, m != M}".into()));
    }
    let m = a.modulus();
    let mut out = Vec::new();
    for x in 0..m.value() {
        if a.contains(x) {
            continue;
        }
        let joints: Option<Vec<u64>> = (0..m.k())
            .map(|i| {
                let step = m.value() / m.prime(i);
                (1..m.prime(i)).map(|j| m.add(x, j * step)).find(|&z| a.contains(z))
            })
            .collect();
        if let Some(joints) = joints {
            out.push(MissingJoint { x, joints });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoDirectionsReport {
    pub grid_root: u64,
    pub points: usize,
    pub assignments: usize,
    /// Largest number of distinct directions used by one assignment.
    pub max_directions: usize,
}

impl TwoDirectionsReport {
    pub fn holds(&self) -> bool {
        self.max_directions <= 2
    }
}

pub const ASSIGNMENT_CAP: u64 = 1_000_000;

/// Every way of splitting `A ∩ Λ` into disjoint M-fibers uses at most two
/// directions, for `Λ = Λ(root, D(M))` and `K = 3`.
pub fn two_directions_check(a: &Multiset, root: u64) -> Result<TwoDirectionsReport> {
    let m = a.modulus();
    if m.k() != 3 {
        return Err(Error::NotApplicable(format!("needs three primes, M = {} has {}", m.value(), m.k())));
    }
    m.check_element(root)?;
    let step = m.top_grid_step(m.value())?;
    let points: Vec<u64> = a.support().into_iter().filter(|&z| m.in_grid(root, z, step)).collect();
    if points.is_empty() {
        return Err(Error::NotApplicable("A misses the grid".into()));
    }
    let ks = fibers::fiber_assignments(m, &points, ASSIGNMENT_CAP)?;
    if ks.is_empty() {
        return Err(Error::NotApplicable("A on the grid is not a union of disjoint M-fibers".into()));
    }
    let max_directions = ks
        .iter()
        .map(|k| k.iter().collect::<BTreeSet<_>>().len())
        .max()
        .unwrap_or(0);
    Ok(TwoDirectionsReport {
        grid_root: root % step,
        points: points.len(),
        assignments: ks.len(),
        max_directions,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OneDimStructure {
    pub direction: usize,
    pub gamma: u32,
    pub pset_a: Vec<u32>,
    pub pset_b: Vec<u32>,
    pub a0: Vec<u64>,
    pub b0: Vec<u64>,
    pub a_chains: Vec<FiberChain>,
    pub b_chains: Vec<FiberChain>,
    /// Structural claims that failed; empty on every tiling.
    pub failures: Vec<String>,
}

impl OneDimStructure {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Roots (one per class of `t mod p`, where `z = origin + t M/p^gamma`) and
/// the groups hanging below them.
fn one_dim_groups(m: &Modulus, i: usize, gamma: u32, origin: u64, s: &[u64]) -> Vec<(u64, Vec<u64>)> {
    let p = m.prime(i);
    let step = m.value() / p.pow(gamma);
    let mut groups: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
    for &z in s {
        let t = m.sub(z, origin) / step;
        groups.entry(t % p).or_default().push(z);
    }
    groups.into_values().map(|g| (*g.iter().min().unwrap(), g)).collect()
}

fn pset_of(m: &Modulus, i: usize, gamma: u32, s: &[u64]) -> Vec<u32> {
    let p = m.prime(i);
    (1..gamma)
        .filter(|&l| {
            let d = m.value() / p.pow(l);
            s.iter().any(|&z| s.iter().any(|&w| m.gcd_value(m.sub(z, w)) == d))
        })
        .collect()
}

/// Structure of a one-dimensional saturating space. Requires `x ∉ A` and
/// `A_{M/p_i^gamma}[x] B_{M/p_i^gamma}[y] = phi(p_i^gamma)`; otherwise
/// [`Error::HypothesisViolated`].
pub fn one_dim_structure(pair: &TilingPair, x: u64, y: u64, i: usize, gamma: u32) -> Result<OneDimStructure> {
    let (a, b) = (pair.a(), pair.b());
    let m = pair.modulus();
    m.check_direction(i)?;
    m.check_element(x)?;
    m.check_element(y)?;
    let p = m.prime(i);
    if gamma == 0 || gamma > m.exponent(i) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} out of range")));
    }
    if a.contains(x) {
        return Err(Error::HypothesisViolated(format!("{x} lies in A")));
    }
    let d = m.value() / p.pow(gamma);
    let prod = nbox(a, m.value(), x)?.entry(d) * nbox(b, m.value(), y)?.entry(d);
    let phi = euler_phi(p.pow(gamma)) as i64;
    if prod != phi {
        return Err(Error::HypothesisViolated(format!(
            "A_{d}[{x}] B_{d}[{y}] = {prod}, expected {phi}"
        )));
    }
    let axy = a_xy(a, b, x, y)?;
    let byx = a_xy(b, a, y, x)?;
    let pset_a = pset_of(m, i, gamma, &axy);
    let pset_b = pset_of(m, i, gamma, &byx);
    let mut failures = Vec::new();
    if pset_a.iter().any(|l| pset_b.contains(l)) || pset_a.len() + pset_b.len() != (gamma - 1) as usize {
        failures.push(format!("P_A = {pset_a:?} and P_B = {pset_b:?} do not partition 1..{gamma}"));
    }
    let ga = one_dim_groups(m, i, gamma, x, &axy);
    let gb = one_dim_groups(m, i, gamma, y, &byx);
    let mut sizes = [ga.len() as u64, gb.len() as u64];
    sizes.sort_unstable();
    if sizes != [1, p - 1] {
        failures.push(format!("|A_0|, |B_0| = {}, {}; expected 1 and {}", ga.len(), gb.len(), p - 1));
    }
    let mut chains = |groups: &[(u64, Vec<u64>)], pset: &[u32]| -> Result<Vec<FiberChain>> {
        let mut out = Vec::new();
        for (root, g) in groups {
            let f = Multiset::from_set(m, g)?;
            if !fibers::is_chain(&f, i, pset)? {
                failures.push(format!("F({root}) = {g:?} is not a {pset:?}-chain"));
            }
            let mut elements = g.clone();
            elements.sort_unstable();
            out.push(FiberChain { direction: i, pset: pset.to_vec(), elements });
        }
        Ok(out)
    };
    let a_chains = chains(&ga, &pset_a)?;
    let b_chains = chains(&gb, &pset_b)?;
    Ok(OneDimStructure {
        direction: i,
        gamma,
        pset_a,
        pset_b,
        a0: ga.iter().map(|g| g.0).collect(),
        b0: gb.iter().map(|g| g.0).collect(),
        a_chains,
        b_chains,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineSaturation {
    /// Whether `A_x ⊂ ell_i(x)`.
    pub on_line: bool,
    /// The single `alpha` with `A_{M/p^alpha}[x] B_{M/p^alpha}[b] = phi(p^alpha)`
    /// for all `b in B`, when the set lies on the line.
    pub alpha: Option<u32>,
}

impl LineSaturation {
    pub fn holds(&self) -> bool {
        !self.on_line || self.alpha.is_some()
    }
}

/// When `A_x` lies on the line `ell_i(x)`, a single divisor `M/p_i^alpha`
/// saturates every product `<A[x], B[b]>`.
pub fn line_saturation(pair: &TilingPair, x: u64, i: usize) -> Result<LineSaturation> {
    let m = pair.modulus();
    m.check_direction(i)?;
    let ax = a_x(pair.a(), pair.b(), x)?;
    let on_line = ax.iter().all(|&z| m.sub(z, x) % m.cofactor(i) == 0);
    if !on_line {
        return Ok(LineSaturation { on_line, alpha: None });
    }
    let p = m.prime(i);
    let a_box = nbox(pair.a(), m.value(), x)?;
    let b_boxes: Vec<NBox> = pair
        .b()
        .support()
        .into_iter()
        .map(|y| nbox(pair.b(), m.value(), y))
        .collect::<Result<_>>()?;
    let alpha = (0..=m.exponent(i)).find(|&al| {
        let d = m.value() / p.pow(al);
        let phi = euler_phi(p.pow(al)) as i64;
        b_boxes.iter().all(|bb| a_box.entry(d) * bb.entry(d) == phi)
    });
    Ok(LineSaturation { on_line, alpha })
}

/// In the configuration `x ∉ A`, `y ∉ B`, `(x - a, M) = (y - b, M) = M/p_i`
/// for some `a, b`, checks `A_{x,y} ⊂ Pi(x, p_i^{n_i - 1})`. `None` when the
/// configuration does not occur for this `(x, y, i)`.
pub fn sat_layers_check(pair: &TilingPair, x: u64, y: u64, i: usize) -> Result<Option<bool>> {
    let (a, b) = (pair.a(), pair.b());
    let m = pair.modulus();
    m.check_direction(i)?;
    if a.contains(x) || b.contains(y) {
        return Ok(None);
    }
    let d = m.value() / m.prime(i);
    let hit = |s: &Multiset, z: u64| s.support().iter().any(|&w| m.gcd_value(m.sub(z, w)) == d);
    if !hit(a, x) || !hit(b, y) {
        return Ok(None);
    }
    let q = m.prime(i).pow(m.exponent(i) - 1);
    Ok(Some(a_xy(a, b, x, y)?.iter().all(|&z| m.sub(z, x) % q == 0)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum PlaneSide {
    /// `A_x ⊂ Pi(x, p_i^{n_i})`.
    Near,
    /// `A_x ⊂ Pi(a, p_i^{n_i})`.
    Far,
    /// Meets both planes.
    Split,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitPlaneRecord {
    pub x: u64,
    pub a: u64,
    pub direction: usize,
    pub side: PlaneSide,
    /// Per `b in B`: `(m, delta_m)` for each `m` with `p_i^{n_i} | m` that
    /// receives a contribution, `delta_m = 1` when it comes from `A_m[x]`
    /// and `0` when it comes from level `m/p_i`.
    pub deltas: Vec<(u64, Vec<(u64, u8)>)>,
}

impl SplitPlaneRecord {
    /// `A_x` in a single plane and `delta_m` constant for each `b`.
    pub fn uniform(&self) -> bool {
        self.side != PlaneSide::Split
            && self.deltas.iter().all(|(_, ds)| ds.windows(2).all(|w| w[0].1 == w[1].1))
    }
}

/// Records the plane pattern of `A_x` for `x ∉ A` with `(x - a, M) = M/p_i`.
pub fn split_planes(pair: &TilingPair, x: u64, a0: u64, i: usize) -> Result<SplitPlaneRecord> {
    let (a, b) = (pair.a(), pair.b());
    let m = pair.modulus();
    m.check_direction(i)?;
    if a.contains(x) || !a.contains(a0) || m.gcd_value(m.sub(x, a0)) != m.value() / m.prime(i) {
        return Err(Error::HypothesisViolated(format!(
            "need x ∉ A, a in A with (x - a, M) = M/p_{i}"
        )));
    }
    let pn = m.prime_power(i);
    let near = |z: u64| m.sub(z, x) % pn == 0;
    let ax = a_x(a, b, x)?;
    let n_near = ax.iter().filter(|&&z| near(z)).count();
    let side = match (n_near, ax.len() - n_near) {
        (_, 0) => PlaneSide::Near,
        (0, _) => PlaneSide::Far,
        _ => PlaneSide::Split,
    };
    let mut deltas = Vec::new();
    for y in b.support() {
        let mut ds: std::collections::BTreeMap<u64, u8> = Default::default();
        for z in a_xy(a, b, x, y)? {
            let g = m.gcd_value(m.sub(z, x));
            if g % pn == 0 {
                ds.insert(g, 1);
            } else {
                ds.insert(g * m.prime(i), 0);
            }
        }
        deltas.push((y, ds.into_iter().collect()));
    }
    Ok(SplitPlaneRecord { x, a: a0, direction: i, side, deltas })
}
