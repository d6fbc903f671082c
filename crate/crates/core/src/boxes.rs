//! N-boxes and their exact inner product.
//!
//! For `N | M` and `x in Z_M`, the N-box of `A` at `x` has one entry per
//! divisor `m | N`: `A^N_m[x] = sum_{a in Z_N, (x - a, N) = m} w^N_A(a)`.
//! The box product `<A, B> = sum_m A_m B_m / phi(N/m)` is an exact rational.

use num_rational::Ratio;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{self, euler_phi, mobius};
use crate::error::{Error, Result};
use crate::multiset::Multiset;
use crate::tiling::TilingPair;
use crate::zmod::Modulus;

pub type Rational = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NBox {
    scale: Modulus,
    entries: Vec<i64>,
}

impl NBox {
    pub fn zero(scale: &Modulus) -> Self {
        NBox { scale: scale.clone(), entries: vec![0; scale.num_divisors()] }
    }

    pub fn scale(&self) -> &Modulus {
        &self.scale
    }

    /// Entries in the divisor order of the scale modulus.
    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// `A_m` for the divisor `m` of N.
    pub fn entry(&self, m: u64) -> i64 {
        match self.scale.index_of_divisor(m) {
            Ok(i) => self.entries[i],
            Err(_) => 0,
        }
    }

    pub fn total(&self) -> i64 {
        self.entries.iter().sum()
    }

    /// Entries as `(m, A_m)` with `m` ascending.
    pub fn by_divisor(&self) -> Vec<(u64, i64)> {
        let mut v: Vec<(u64, i64)> =
            self.scale.divisors().iter().copied().zip(self.entries.iter().copied()).collect();
        v.sort_unstable();
        v
    }

    pub fn add_scaled(&mut self, other: &NBox, c: i64) -> Result<()> {
        if self.scale != other.scale {
            return Err(Error::ModulusMismatch { left: self.scale.value(), right: other.scale.value() });
        }
        for (s, o) in self.entries.iter_mut().zip(&other.entries) {
            let t = o.checked_mul(c).ok_or(Error::Overflow("box combination"))?;
            *s = s.checked_add(t).ok_or(Error::Overflow("box combination"))?;
        }
        Ok(())
    }
}

/// `A^N[x]`.
pub fn nbox(a: &Multiset, n: u64, x: u64) -> Result<NBox> {
    let an = a.reduce_mod(n)?;
    Ok(nbox_reduced(&an, x))
}

/// Box of a multiset already living on Z_N.
pub fn nbox_reduced(an: &Multiset, x: u64) -> NBox {
    let zn = an.modulus();
    let mut out = NBox::zero(zn);
    for (z, w) in an.sparse() {
        out.entries[zn.gcd_index(zn.sub(x % zn.value(), z))] += w;
    }
    out
}

/// `A^N[C] = sum_c w_C(c) A^N[c]`.
pub fn nbox_of(a: &Multiset, n: u64, c: &Multiset) -> Result<NBox> {
    let an = a.reduce_mod(n)?;
    let cn = c.reduce_mod(n)?;
    let mut out = NBox::zero(an.modulus());
    for (x, w) in cn.sparse() {
        out.add_scaled(&nbox_reduced(&an, x), w)?;
    }
    Ok(out)
}

fn phi_weights(scale: &Modulus) -> (i128, Vec<i128>) {
    let n = scale.value();
    let phis: Vec<u64> = scale.divisors().iter().map(|&m| euler_phi(n / m)).collect();
    let l = phis.iter().fold(1u64, |acc, &p| arith::lcm(acc, p));
    (l as i128, phis.iter().map(|&p| (l / p) as i128).collect())
}

/// `<A, B> = sum_{m | N} A_m B_m / phi(N/m)`.
pub fn box_product(a: &NBox, b: &NBox) -> Result<Rational> {
    if a.scale != b.scale {
        return Err(Error::ModulusMismatch { left: a.scale.value(), right: b.scale.value() });
    }
    let (l, w) = phi_weights(&a.scale);
    let mut num: i128 = 0;
    for ((&x, &y), &c) in a.entries.iter().zip(&b.entries).zip(&w) {
        let t = (x as i128)
            .checked_mul(y as i128)
            .and_then(|t| t.checked_mul(c))
            .ok_or(Error::Overflow("box product"))?;
        num = num.checked_add(t).ok_or(Error::Overflow("box product"))?;
    }
    Ok(Rational::new(num, l))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrthoFailure {
    pub x: u64,
    pub y: u64,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrthoReport {
    pub scale: u64,
    pub expected: u64,
    pub checked: usize,
    pub failures: Vec<OrthoFailure>,
}

/// Checks `<A^N[x], B^N[y]> = M / N`. With `sample = Some((count, seed))`
/// only `count` seeded random pairs are examined, otherwise every pair
/// `(x, y)` in `Z_N x Z_N` (boxes depend on `x mod N` only).
pub fn ortho_scan(pair: &TilingPair, n: u64, sample: Option<(usize, u64)>) -> Result<OrthoReport> {
    let an = pair.a().reduce_mod(n)?;
    let bn = pair.b().reduce_mod(n)?;
    let zn = an.modulus().clone();
    let (l, w) = phi_weights(&zn);
    let boxes_a: Vec<NBox> = (0..n).map(|x| nbox_reduced(&an, x)).collect();
    let boxes_b: Vec<NBox> = (0..n).map(|y| nbox_reduced(&bn, y)).collect();
    let expected = pair.modulus().value() / n;
    let target = expected as i128 * l;
    let mut failures = Vec::new();
    let mut check = |x: u64, y: u64| {
        let bx = &boxes_a[x as usize];
        let by = &boxes_b[y as usize];
        let num: i128 = bx
            .entries
            .iter()
            .zip(&by.entries)
            .zip(&w)
            .map(|((&p, &q), &c)| p as i128 * q as i128 * c)
            .sum();
        if num != target {
            failures.push(OrthoFailure { x, y, value: Rational::new(num, l).to_string() });
        }
    };
    let checked = match sample {
        None => {
            for x in 0..n {
                for y in 0..n {
                    check(x, y);
                }
            }
            (n * n) as usize
        }
        Some((count, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = pair.modulus().value();
            for _ in 0..count {
                let x = rng.random_range(0..m);
                let y = rng.random_range(0..m);
                check(x % n, y % n);
            }
            count
        }
    };
    Ok(OrthoReport { scale: n, expected, checked, failures })
}

/// `|A||B| = M` and `<A^M[a], B^M[b]> = 1` for all `a in A`, `b in B`,
/// which together imply `A ⊕ B = Z_M`.
pub fn converse_check(a: &Multiset, b: &Multiset) -> Result<bool> {
    let m = a.modulus().value();
    if a.total()? as i128 * b.total()? as i128 != m as i128 {
        return Ok(false);
    }
    let bb: Vec<NBox> = b.support().into_iter().map(|y| nbox_reduced(b, y)).collect();
    let one = Rational::from_integer(1);
    for x in a.support() {
        let ba = nbox_reduced(a, x);
        for by in &bb {
            if box_product(&ba, by)? != one {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Ramanujan sum `c_d(k)`, the sum of `zeta^k` over primitive `d`-th roots
/// of unity, via `mu(d/g) phi(d) / phi(d/g)` with `g = (k, d)`.
pub fn ramanujan_sum(d: u64, k: i64) -> i64 {
    let g = arith::gcd(k.unsigned_abs() % d, d);
    let g = if g == 0 { d } else { g };
    mobius(d / g) * (euler_phi(d) / euler_phi(d / g)) as i64
}

fn fold(a: &Multiset, d: u64) -> Vec<i128> {
    let mut f = vec![0i128; d as usize];
    for (x, w) in a.sparse() {
        f[(x % d) as usize] += w as i128;
    }
    f
}

/// `sum_{zeta primitive d-th} A(zeta) conj(C(zeta))`, an integer, computed
/// as `sum_{a, c} w_A(a) w_C(c) c_d(a - c)`.
pub fn cross_energy(a: &Multiset, c: &Multiset, d: u64) -> Result<i128> {
    let m = a.modulus().value();
    if m % d != 0 {
        return Err(Error::NotADivisor { d, m });
    }
    let fa = fold(a, d);
    let fc = fold(c, d);
    let cd: Vec<i128> = (0..d).map(|t| ramanujan_sum(d, t as i64) as i128).collect();
    let mut corr = vec![0i128; d as usize];
    for (u, &x) in fa.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (v, &y) in fc.iter().enumerate() {
            if y != 0 {
                let t = (u + d as usize - v) % d as usize;
                corr[t] = corr[t]
                    .checked_add(x.checked_mul(y).ok_or(Error::Overflow("energy"))?)
                    .ok_or(Error::Overflow("energy"))?;
            }
        }
    }
    corr.iter()
        .zip(&cd)
        .try_fold(0i128, |acc, (&r, &c)| acc.checked_add(r.checked_mul(c)?))
        .ok_or(Error::Overflow("energy"))
}

/// `E_d(A) = sum_{zeta primitive d-th} |A(zeta)|^2`; zero exactly when
/// `Phi_d | A`.
pub fn energy(a: &Multiset, d: u64) -> Result<i128> {
    cross_energy(a, a, d)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

/// Compares `<A^N[C], B^N[D]>` with
/// `sum_{d | N} (N phi(d))^{-1} [sum_zeta A(zeta) conj C(zeta)] [sum_zeta B(zeta) conj D(zeta)]`.
pub fn identity_check(a: &Multiset, b: &Multiset, c: &Multiset, d: &Multiset, n: u64) -> Result<IdentityReport> {
    let lhs = box_product(&nbox_of(a, n, c)?, &nbox_of(b, n, d)?)?;
    let mut rhs = Rational::from_integer(0);
    for e in arith::divisors(n) {
        let s1 = cross_energy(a, c, e)?;
        let s2 = cross_energy(b, d, e)?;
        let num = s1.checked_mul(s2).ok_or(Error::Overflow("identity"))?;
        rhs += Rational::new(num, n as i128 * euler_phi(e) as i128);
    }
    Ok(IdentityReport { lhs: lhs.to_string(), rhs: rhs.to_string(), holds: lhs == rhs })
}

/// Box product of rational combinations `sum c_x A^N[x]` and
/// `sum d_y B^N[y]`, returned with `Sigma(A) Sigma(B) / N`. Denominators are
/// cleared before forming integer boxes.
pub fn linear_span_check(
    pair: &TilingPair,
    n: u64,
    cx: &[(u64, Ratio<i64>)],
    dy: &[(u64, Ratio<i64>)],
) -> Result<(Rational, Rational)> {
    fn combine(s: &Multiset, n: u64, coeffs: &[(u64, Ratio<i64>)]) -> Result<(NBox, i64)> {
        let den = coeffs.iter().fold(1i64, |acc, (_, c)| arith::lcm(acc, *c.denom()));
        let sn = s.reduce_mod(n)?;
        let mut out = NBox::zero(sn.modulus());
        for &(x, c) in coeffs {
            let k = c.numer() * (den / c.denom());
            out.add_scaled(&nbox_reduced(&sn, x), k)?;
        }
        Ok((out, den))
    }
    let (ba, da) = combine(pair.a(), n, cx)?;
    let (bb, db) = combine(pair.b(), n, dy)?;
    let lhs = box_product(&ba, &bb)? / Rational::from_integer(da as i128 * db as i128);
    let rhs = Rational::new(ba.total() as i128 * bb.total() as i128, n as i128 * da as i128 * db as i128);
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagonalReport {
    /// `sum_m A_m[A] B_m[B] / phi(M/m)`, expected to equal M.
    pub total: String,
    /// Divisors `m != M` with `A_m[A] B_m[B] != 0`.
    pub off_diagonal: Vec<u64>,
    pub holds: bool,
}

/// For a tiling, `<A^M[A], B^M[B]> = M` and every term with `m != M`
/// vanishes.
pub fn diagonal_check(pair: &TilingPair) -> Result<DiagonalReport> {
    let m = pair.modulus().value();
    let ba = nbox_of(pair.a(), m, pair.a())?;
    let bb = nbox_of(pair.b(), m, pair.b())?;
    let total = box_product(&ba, &bb)?;
    let off_diagonal: Vec<u64> = ba
        .by_divisor()
        .into_iter()
        .zip(bb.by_divisor())
        .filter(|((d, x), (_, y))| *d != m && x * y != 0)
        .map(|((d, _), _)| d)
        .collect();
    let holds = total == Rational::from_integer(m as i128) && off_diagonal.is_empty();
    Ok(DiagonalReport { total: total.to_string(), off_diagonal, holds })
}
