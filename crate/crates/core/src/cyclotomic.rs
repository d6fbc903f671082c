//! Cyclotomic polynomials and exact divisibility of mask polynomials.
//!
//! `Phi_s` is built by exact division and cached. Divisibility `Phi_s | A`
//! for `s | M` is decided by an exact remainder computation; the power part
//! of `s` is split off first using `Phi_s(X) = Phi_r(X^{s/r})`, `r = rad(s)`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::multiset::Multiset;

fn cache() -> &'static RwLock<HashMap<u64, Arc<Vec<i64>>>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn radical(s: u64) -> u64 {
    arith::factorize(s).iter().map(|f| f.0).product()
}

/// Coefficients of `Phi_s`, lowest degree first.
pub fn cyclotomic(s: u64) -> Arc<Vec<i64>> {
    assert!(s >= 1, "Phi_0 is undefined");
    if let Some(p) = cache().read().unwrap().get(&s) {
        return p.clone();
    }
    let r = radical(s);
    let poly = if r != s {
        let base = cyclotomic(r);
        let q = (s / r) as usize;
        let mut out = vec![0i64; (base.len() - 1) * q + 1];
        for (k, &c) in base.iter().enumerate() {
            out[k * q] = c;
        }
        out
    } else {
        // X^s - 1 divided by Phi_d for every proper divisor d
        let mut num = vec![0i128; s as usize + 1];
        num[0] = -1;
        num[s as usize] = 1;
        for d in arith::divisors(s) {
            if d == s {
                continue;
            }
            let phi_d = cyclotomic(d);
            num = div_exact(&num, &phi_d).expect("Phi_d divides X^s - 1");
        }
        num.into_iter().map(|c| c as i64).collect()
    };
    let poly = Arc::new(poly);
    cache().write().unwrap().insert(s, poly.clone());
    poly
}

/// `Phi_s(1)`: `p` when `s = p^a`, `1` for other `s > 1`, `0` for `s = 1`.
pub fn cyclotomic_at_one(s: u64) -> u64 {
    if s == 1 {
        return 0;
    }
    let f = arith::factorize(s);
    if f.len() == 1 {
        f[0].0
    } else {
        1
    }
}

/// Long division by a monic polynomial. Returns `(quotient, remainder)`.
fn div_rem(a: &[i128], b: &[i64]) -> Result<(Vec<i128>, Vec<i128>)> {
    let db = b.len() - 1;
    debug_assert_eq!(b[db], 1);
    let mut rem = a.to_vec();
    if rem.len() <= db {
        return Ok((vec![], rem));
    }
    let mut quot = vec![0i128; rem.len() - db];
    for i in (db..rem.len()).rev() {
        let c = rem[i];
        if c == 0 {
            continue;
        }
        quot[i - db] = c;
        for (k, &bk) in b.iter().enumerate() {
            let t = c.checked_mul(bk as i128).ok_or(Error::Overflow("polynomial division"))?;
            let slot = &mut rem[i - db + k];
            *slot = slot.checked_sub(t).ok_or(Error::Overflow("polynomial division"))?;
        }
    }
    rem.truncate(db);
    Ok((quot, rem))
}

/// Remainder of `a` modulo the monic polynomial `b`.
pub fn poly_rem(a: &[i128], b: &[i64]) -> Result<Vec<i128>> {
    Ok(div_rem(a, b)?.1)
}

fn div_exact(a: &[i128], b: &[i64]) -> Option<Vec<i128>> {
    let (q, r) = div_rem(a, b).ok()?;
    r.iter().all(|&c| c == 0).then_some(q)
}

/// Whether `Phi_s` divides the polynomial `sum_k c_k X^k`.
pub fn poly_divisible(coeffs: &[i64], s: u64) -> Result<bool> {
    if s == 0 {
        return Err(Error::InvalidArgument("Phi_0 is undefined".into()));
    }
    let mut fold = vec![0i128; s as usize];
    for (k, &c) in coeffs.iter().enumerate() {
        fold[k % s as usize] += c as i128;
    }
    folded_divisible(&fold, s)
}

/// `fold` is a polynomial reduced mod `X^s - 1`.
fn folded_divisible(fold: &[i128], s: u64) -> Result<bool> {
    let r = radical(s);
    let q = (s / r) as usize;
    let phi_r = cyclotomic(r);
    let mut part = vec![0i128; r as usize];
    for j in 0..q {
        let mut nonzero = false;
        for (t, slot) in part.iter_mut().enumerate() {
            *slot = fold[j + t * q];
            nonzero |= *slot != 0;
        }
        if !nonzero {
            continue;
        }
        let (_, rem) = div_rem(&part, &phi_r)?;
        if rem.iter().any(|&c| c != 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Phi_s | A(X)` in `Z[X] / (X^M - 1)`, for `s | M`.
pub fn divides(a: &Multiset, s: u64) -> Result<bool> {
    let m = a.modulus().value();
    if s == 0 || m % s != 0 {
        return Err(Error::NotADivisor { d: s, m });
    }
    let mut fold = vec![0i128; s as usize];
    for (x, &w) in a.weights().iter().enumerate() {
        if w != 0 {
            fold[x % s as usize] += w as i128;
        }
    }
    folded_divisible(&fold, s)
}

/// Independent test of `Phi_{p_i^alpha} | A` through plane counts: every
/// plane `Pi(x, p_i^{alpha-1})` splits evenly into its `p_i` sub-planes
/// `Pi(x', p_i^alpha)`.
pub fn divides_prime_power_by_planes(a: &Multiset, i: usize, alpha: u32) -> Result<bool> {
    let m = a.modulus();
    m.check_direction(i)?;
    if alpha == 0 || alpha > m.exponent(i) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} out of range")));
    }
    let p = m.prime(i);
    let q = p.pow(alpha);
    let counts = a.reduce_mod(q)?;
    let lower = q / p;
    for r in 0..lower {
        let first = counts.weight(r);
        if (1..p).any(|j| counts.weight(r + j * lower) != first) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every `s | M`, `s > 1`, with `Phi_s | A`, together with the prime-power
/// part `S_A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CyclotomicProfile {
    pub modulus: u64,
    pub divisors: Vec<u64>,
    pub prime_powers: Vec<u64>,
}

impl CyclotomicProfile {
    pub fn contains(&self, s: u64) -> bool {
        self.divisors.binary_search(&s).is_ok()
    }

    /// `{alpha : Phi_{p^alpha} | A}` for the prime `p`.
    pub fn exponents_for(&self, p: u64) -> Vec<u32> {
        self.prime_powers
            .iter()
            .filter(|&&s| s % p == 0 && arith::factorize(s).len() == 1)
            .map(|&s| arith::valuation(s, p))
            .collect()
    }
}

pub fn profile(a: &Multiset) -> Result<CyclotomicProfile> {
    let m = a.modulus();
    let mut divisors = Vec::new();
    for s in m.divisors_sorted() {
        if s > 1 && divides(a, s)? {
            divisors.push(s);
        }
    }
    let prime_powers = divisors.iter().copied().filter(|&s| arith::factorize(s).len() == 1).collect();
    Ok(CyclotomicProfile { modulus: m.value(), divisors, prime_powers })
}

/// `S_A`: prime powers `s | M` with `Phi_s | A`.
pub fn s_a(a: &Multiset) -> Result<Vec<u64>> {
    Ok(profile(a)?.prime_powers)
}

/// T1: `A(1) = prod_{s in S_A} Phi_s(1)`.
pub fn t1_check(a: &Multiset) -> Result<bool> {
    let sa = s_a(a)?;
    let rhs: u128 = sa.iter().map(|&s| cyclotomic_at_one(s) as u128).product();
    Ok(a.total()? as i128 == rhs as i128)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct T2Report {
    pub holds: bool,
    /// Prime powers with distinct primes whose product `s` has `Phi_s` not
    /// dividing `A`.
    pub witness: Option<Vec<u64>>,
}

/// Every product of at least two elements of `prime_powers` with distinct
/// primes, listed with its factors.
fn t2_products(prime_powers: &[u64]) -> Vec<Vec<u64>> {
    let mut by_prime: Vec<(u64, Vec<u64>)> = Vec::new();
    for &s in prime_powers {
        let p = arith::factorize(s)[0].0;
        match by_prime.iter_mut().find(|e| e.0 == p) {
            Some(e) => e.1.push(s),
            None => by_prime.push((p, vec![s])),
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<u64> = Vec::new();
    fn rec(k: usize, groups: &[(u64, Vec<u64>)], stack: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if k == groups.len() {
            if stack.len() >= 2 {
                out.push(stack.clone());
            }
            return;
        }
        rec(k + 1, groups, stack, out);
        for &s in &groups[k].1 {
            stack.push(s);
            rec(k + 1, groups, stack, out);
            stack.pop();
        }
    }
    rec(0, &by_prime, &mut stack, &mut out);
    out
}

/// T2: for prime powers `s_1, ..., s_k` in `S_A` of distinct primes,
/// `Phi_{s_1 ... s_k} | A`.
pub fn t2_check(a: &Multiset) -> Result<T2Report> {
    let prof = profile(a)?;
    for sel in t2_products(&prof.prime_powers) {
        let s: u64 = sel.iter().product();
        if !prof.contains(s) {
            return Ok(T2Report { holds: false, witness: Some(sel) });
        }
    }
    Ok(T2Report { holds: true, witness: None })
}

/// `S_A` and T1/T2 for a finite set of integers, with cyclotomic
/// divisibility taken in `Z[X]` rather than modulo `X^M - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerProfile {
    pub prime_powers: Vec<u64>,
    pub t1: bool,
    pub t2: T2Report,
}

pub fn integer_profile(coeffs: &[i64]) -> Result<IntegerProfile> {
    let deg = coeffs.iter().rposition(|&c| c != 0).unwrap_or(0) as u64;
    let total: i64 = coeffs.iter().sum();
    let mut prime_powers = Vec::new();
    // a prime power s has phi(s) >= s / 2, and Phi_s | A forces phi(s) <= deg A
    let bound = 2 * deg.max(1);
    for s in 2..=bound {
        let f = arith::factorize(s);
        if f.len() == 1 && arith::euler_phi(s) <= deg && poly_divisible(coeffs, s)? {
            prime_powers.push(s);
        }
    }
    let rhs: i64 = prime_powers.iter().map(|&s| cyclotomic_at_one(s) as i64).product();
    let mut t2 = T2Report { holds: true, witness: None };
    for sel in t2_products(&prime_powers) {
        let s: u64 = sel.iter().product();
        if !poly_divisible(coeffs, s)? {
            t2 = T2Report { holds: false, witness: Some(sel) };
            break;
        }
    }
    Ok(IntegerProfile { prime_powers, t1: total == rhs, t2 })
}
