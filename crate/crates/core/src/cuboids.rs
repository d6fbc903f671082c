//! Cuboids and multiscale cuboids.
//!
//! A cuboid of type `(N, delta, T)` is `X^c prod_{j in J}(1 - X^{d_j})` with
//! `J = {j : delta_j > 0}` and `(d_j, N) = N / p_j^{delta_j}`. Its value on
//! `A` is `sum_eps (-1)^{|eps|} sum_t w_T(t) w^N_A(c + eps.d + t)`, and `A`
//! is null for the type when every cuboid evaluates to zero.

use serde::Serialize;

use crate::arith;
use crate::cyclotomic;
use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::zmod::Modulus;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CuboidType {
    /// The scale N, a divisor of M.
    pub scale: u64,
    /// `delta_j` for every prime of M; zero for primes not dividing N.
    pub delta: Vec<u32>,
    /// Template `T` on Z_N as `(t, w_T(t))` pairs.
    pub template: Vec<(u64, i64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cuboid {
    pub base: u64,
    /// `(j, d_j)` for every `j` with `delta_j > 0`, residues mod N.
    pub offsets: Vec<(usize, u64)>,
}

fn validate(m: &Modulus, t: &CuboidType) -> Result<Modulus> {
    let zn = m.divisor_modulus(t.scale)?;
    if t.delta.len() != m.k() {
        return Err(Error::InvalidArgument(format!("delta has {} entries, M has {} primes", t.delta.len(), m.k())));
    }
    for (j, &d) in t.delta.iter().enumerate() {
        if d > arith::valuation(t.scale, m.prime(j)).min(m.exponent(j)) {
            return Err(Error::InvalidArgument(format!("delta_{j} = {d} exceeds the exponent of p_{j} in N")));
        }
    }
    for &(x, _) in &t.template {
        zn.check_element(x)?;
    }
    Ok(zn)
}

/// `g(z) = sum_t w_T(t) w^N_A(z + t)` on Z_N.
fn template_profile(an: &[i64], template: &[(u64, i64)]) -> Result<Vec<i64>> {
    let n = an.len();
    let mut g = vec![0i64; n];
    for (z, slot) in g.iter_mut().enumerate() {
        let mut acc = 0i64;
        for &(t, w) in template {
            let v = an[(z + t as usize) % n].checked_mul(w).ok_or(Error::Overflow("cuboid"))?;
            acc = acc.checked_add(v).ok_or(Error::Overflow("cuboid"))?;
        }
        *slot = acc;
    }
    Ok(g)
}

/// Value of one cuboid on `A`.
pub fn evaluate(a: &Multiset, t: &CuboidType, cuboid: &Cuboid) -> Result<i64> {
    let m = a.modulus();
    let zn = validate(m, t)?;
    let n = zn.value();
    let active: Vec<usize> = (0..m.k()).filter(|&j| t.delta[j] > 0).collect();
    let given: Vec<usize> = cuboid.offsets.iter().map(|o| o.0).collect();
    if given != active {
        return Err(Error::InvalidArgument(format!("offsets given for {given:?}, type needs {active:?}")));
    }
    for &(j, d) in &cuboid.offsets {
        let want = n / m.prime(j).pow(t.delta[j]);
        if arith::gcd(d % n, n) != want {
            return Err(Error::InvalidArgument(format!("(d_{j}, N) must equal {want}")));
        }
    }
    let an = a.reduce_mod(n)?;
    let g = template_profile(an.weights(), &t.template)?;
    let k = cuboid.offsets.len();
    let mut total = 0i64;
    for eps in 0u32..(1 << k) {
        let mut z = cuboid.base % n;
        for (b, &(_, d)) in cuboid.offsets.iter().enumerate() {
            if eps >> b & 1 == 1 {
                z = (z + d) % n;
            }
        }
        let v = g[z as usize];
        total = if eps.count_ones() % 2 == 0 { total.checked_add(v) } else { total.checked_sub(v) }
            .ok_or(Error::Overflow("cuboid"))?;
    }
    Ok(total)
}

/// Offsets `d_j = u N / p_j^{delta_j}` with `u` a unit mod `p_j^{delta_j}`.
/// `u` and `-u` give cuboids that agree up to sign and base point, so only
/// `u <= p^delta / 2` is kept.
fn offset_choices(m: &Modulus, t: &CuboidType) -> Vec<(usize, Vec<u64>)> {
    (0..m.k())
        .filter(|&j| t.delta[j] > 0)
        .map(|j| {
            let p = m.prime(j);
            let q = p.pow(t.delta[j]);
            let unit = t.scale / q;
            let us: Vec<u64> = (1..q).filter(|u| u % p != 0 && *u <= q - u).map(|u| u * unit).collect();
            let us = if us.is_empty() { vec![unit] } else { us };
            (j, us)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NullReport {
    pub null: bool,
    /// A cuboid with nonzero value, when one exists.
    pub witness: Option<(Cuboid, i64)>,
    pub offset_families: usize,
}

/// Evaluates every cuboid of the type on `A`. For each choice of offsets the
/// values at all base points come from applying the difference operators
/// `h(z) - h(z + d_j)` in turn.
pub fn is_null(a: &Multiset, t: &CuboidType) -> Result<NullReport> {
    let m = a.modulus();
    let zn = validate(m, t)?;
    let an = a.reduce_mod(zn.value())?;
    null_scan(an.weights(), m, t)
}

/// Same as [`is_null`] for weights already reduced to Z_N; used by
/// exhaustive scans that avoid building a multiset per input.
pub fn null_scan(an: &[i64], m: &Modulus, t: &CuboidType) -> Result<NullReport> {
    let n = an.len();
    let g = template_profile(an, &t.template)?;
    let choices = offset_choices(m, t);
    let mut idx = vec![0usize; choices.len()];
    let mut families = 0usize;
    let mut h = vec![0i64; n];
    let mut tmp = vec![0i64; n];
    loop {
        families += 1;
        h.copy_from_slice(&g);
        for (c, (_, us)) in choices.iter().enumerate() {
            let d = us[idx[c]] as usize;
            for z in 0..n {
                tmp[z] = h[z].checked_sub(h[(z + d) % n]).ok_or(Error::Overflow("cuboid"))?;
            }
            std::mem::swap(&mut h, &mut tmp);
        }
        if let Some(z) = h.iter().position(|&v| v != 0) {
            let offsets = choices.iter().enumerate().map(|(c, (j, us))| (*j, us[idx[c]])).collect();
            return Ok(NullReport {
                null: false,
                witness: Some((Cuboid { base: z as u64, offsets }, h[z])),
                offset_families: families,
            });
        }
        // next offset choice, odometer style
        let mut c = 0;
        loop {
            if c == choices.len() {
                return Ok(NullReport { null: true, witness: None, offset_families: families });
            }
            idx[c] += 1;
            if idx[c] < choices[c].1.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

/// Classic N-cuboids: `delta_j = 1` for every `p_j | N`, `T = 1`.
pub fn classic_type(m: &Modulus, n: u64) -> Result<CuboidType> {
    m.divisor_modulus(n)?;
    let delta = (0..m.k()).map(|j| u32::from(n % m.prime(j) == 0)).collect();
    Ok(CuboidType { scale: n, delta, template: vec![(0, 1)] })
}

/// `T^M_N = (X^M - 1)/(X^N - 1)` assembled as the product of the fibers
/// `Psi_{M/p_i^nu}` for `1 <= nu <= n_i - v_{p_i}(N)`.
pub fn folding_template(m: &Modulus, n: u64) -> Result<Multiset> {
    m.divisor_modulus(n)?;
    let mut acc = Multiset::from_set(m, &[0])?;
    for i in 0..m.k() {
        let p = m.prime(i);
        let alpha = m.exponent(i) - arith::valuation(n, p).min(m.exponent(i));
        for nu in 1..=alpha {
            let step = m.value() / p.pow(nu);
            acc = acc.convolve(&Multiset::from_set(m, &(0..p).map(|k| k * step).collect::<Vec<_>>())?)?;
        }
    }
    Ok(acc)
}

/// The type `(M, delta^M_N, T^M_N)` whose nullity is equivalent to
/// `Phi_N | A`: with `alpha_i = n_i - v_{p_i}(N)`, `delta_i = alpha_i + 1`
/// when `alpha_i < n_i` and `0` otherwise.
pub fn lifted_type(m: &Modulus, n: u64) -> Result<CuboidType> {
    let t = folding_template(m, n)?;
    let delta = (0..m.k())
        .map(|i| {
            let alpha = m.exponent(i) - arith::valuation(n, m.prime(i)).min(m.exponent(i));
            if alpha < m.exponent(i) {
                alpha + 1
            } else {
                0
            }
        })
        .collect();
    Ok(CuboidType { scale: m.value(), delta, template: t.sparse() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CuboidVerdict {
    pub scale: u64,
    pub divides: bool,
    pub lifted_null: bool,
    pub reduced_null: bool,
}

impl CuboidVerdict {
    pub fn agree(&self) -> bool {
        self.divides == self.lifted_null && self.divides == self.reduced_null
    }
}

/// `Phi_N | A` three ways: exact division, nullity for the lifted type at
/// scale M, and N-nullity of `A mod N`.
pub fn cyclotomic_via_cuboids(a: &Multiset, n: u64) -> Result<CuboidVerdict> {
    let m = a.modulus();
    Ok(CuboidVerdict {
        scale: n,
        divides: cyclotomic::divides(a, n)?,
        lifted_null: is_null(a, &lifted_type(m, n)?)?.null,
        reduced_null: is_null(a, &classic_type(m, n)?)?.null,
    })
}

/// `Phi_N | A ∩ Lambda(x, D(N))` for every `x`.
pub fn grid_restricted_divides(a: &Multiset, n: u64) -> Result<bool> {
    let m = a.modulus();
    let d = m.top_grid_step(n)?;
    for x in 0..d {
        let part = a.restrict(|y| y % d == x);
        if !cyclotomic::divides(&part, n)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A named multiscale cuboid type with the cyclotomic divisors it detects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Preset {
    pub name: String,
    pub ty: CuboidType,
    /// `s` with `Phi_s` tied to nullity.
    pub divisors: Vec<u64>,
    /// Whether nullity is equivalent to divisibility or only implied by it.
    pub equivalence: bool,
}

/// Presets in direction `i`:
/// `ex1` (`delta_i = 2`, `T = 1`, detects `Phi_M Phi_{M/p_i}`),
/// `ex1-folded` (same with `T = T^M_{M/p_i}`, detects `Phi_{M/p_i}`),
/// `ex2:alpha` (`delta_i = alpha + 1`, or 0 when `alpha = n_i`, detects
/// `Phi_M ... Phi_{M/p_i^alpha}`) and `ex3` (`delta_i = 3` or 0 when
/// `n_i = 2`, `T = Psi_{M/p_i^2}`, implied by `Phi_M Phi_{M/p_i^2}`).
pub fn multiscale_preset(m: &Modulus, name: &str, i: usize) -> Result<Preset> {
    m.check_direction(i)?;
    let p = m.prime(i);
    let n_i = m.exponent(i);
    let mv = m.value();
    let base_delta = |di: u32| -> Vec<u32> { (0..m.k()).map(|j| if j == i { di } else { 1 }).collect() };
    let need = |k: u32| -> Result<()> {
        if n_i < k {
            Err(Error::InvalidArgument(format!("preset {name} needs p_i^{k} | M")))
        } else {
            Ok(())
        }
    };
    let (delta, template, divisors, equivalence) = if name == "ex1" {
        need(2)?;
        (base_delta(2), vec![(0, 1)], vec![mv, mv / p], true)
    } else if name == "ex1-folded" {
        need(2)?;
        let t = folding_template(m, mv / p)?;
        (base_delta(2), t.sparse(), vec![mv / p], true)
    } else if let Some(rest) = name.strip_prefix("ex2:") {
        let alpha: u32 = rest.parse().map_err(|_| Error::InvalidArgument(format!("bad preset {name}")))?;
        if alpha == 0 || alpha > n_i {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} out of range")));
        }
        let di = if alpha < n_i { alpha + 1 } else { 0 };
        (base_delta(di), vec![(0, 1)], (0..=alpha).map(|k| mv / p.pow(k)).collect(), true)
    } else if name == "ex3" {
        need(2)?;
        let di = if n_i >= 3 { 3 } else { 0 };
        let step = mv / (p * p);
        (base_delta(di), (0..p).map(|k| (k * step, 1)).collect(), vec![mv, mv / (p * p)], false)
    } else {
        return Err(Error::InvalidArgument(format!("unknown preset {name}")));
    };
    Ok(Preset {
        name: name.to_string(),
        ty: CuboidType { scale: mv, delta, template },
        divisors,
        equivalence,
    })
}

/// Whether `A` respects the relation between divisibility and nullity that
/// the preset asserts.
pub fn preset_relation_holds(a: &Multiset, preset: &Preset) -> Result<bool> {
    let mut divides = true;
    for &s in &preset.divisors {
        divides &= cyclotomic::divides(a, s)?;
    }
    let null = is_null(a, &preset.ty)?.null;
    Ok(if preset.equivalence { divides == null } else { !divides || null })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_template_is_subgroup() {
        for mv in [12u64, 36, 60, 72] {
            let m = Modulus::new(mv).unwrap();
            for n in arith::divisors(mv) {
                let t = folding_template(&m, n).unwrap();
                let expect: Vec<u64> = (0..mv / n).map(|k| k * n).collect();
                assert_eq!(t.support(), expect);
                assert!(t.is_set());
            }
        }
    }

    #[test]
    fn folding_identity() {
        let m = Modulus::new(36).unwrap();
        let a = Multiset::from_sparse(&m, &[(1, 2), (5, -1), (14, 3), (30, 1)]).unwrap();
        for n in arith::divisors(36) {
            let t = folding_template(&m, n).unwrap();
            let an = a.reduce_mod(n).unwrap();
            for x in 0..36 {
                let rhs: i64 = t.support().iter().map(|&s| a.weight((x + s) % 36)).sum();
                assert_eq!(an.weight(x % n), rhs);
            }
        }
    }

    #[test]
    fn single_cuboid_value() {
        let m = Modulus::new(6).unwrap();
        let a = Multiset::from_set(&m, &[0]).unwrap();
        let t = classic_type(&m, 6).unwrap();
        let c = Cuboid { base: 0, offsets: vec![(0, 3), (1, 2)] };
        assert_eq!(evaluate(&a, &t, &c).unwrap(), 1);
        let bad = Cuboid { base: 0, offsets: vec![(0, 2), (1, 2)] };
        assert!(evaluate(&a, &t, &bad).is_err());
    }

    #[test]
    fn classic_null_iff_divisible_small() {
        let m = Modulus::new(12).unwrap();
        let t = classic_type(&m, 12).unwrap();
        for mask in 0u32..(1 << 12) {
            let w: Vec<i64> = (0..12).map(|b| (mask >> b & 1) as i64).collect();
            let a = Multiset::from_weights(&m, w).unwrap();
            assert_eq!(is_null(&a, &t).unwrap().null, cyclotomic::divides(&a, 12).unwrap());
        }
    }
}
