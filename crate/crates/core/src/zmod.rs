//! The cyclic group Z_M together with its prime factorization, the
//! array coordinates of its elements and the divisor lattice of M.
//!
//! For `M = p_1^{n_1} ... p_K^{n_K}` every `x` is written as
//! `x = sum_i pi_i(x) M_i mod M` with `M_i = M / p_i^{n_i}` and
//! `pi_i(x) in Z_{p_i^{n_i}}`. The base-`p_i` digits of `pi_i(x)` locate
//! `x` inside nested planes, and `(x, M)` can be read off those digits.

use std::fmt;
use std::sync::Arc;

use crate::arith::{self, mod_inverse};
use crate::error::{Error, Result};

/// Product of the first nine primes is below 2^32 and the first ten exceed
/// it, so nine directions always suffice.
pub const MAX_PRIMES: usize = 9;
pub const MAX_MODULUS: u64 = 1 << 32;

/// A divisor of M stored as its exponent vector `(gamma_1, ..., gamma_K)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DivisorIdx {
    exps: [u8; MAX_PRIMES],
    len: u8,
}

impl DivisorIdx {
    pub fn from_exponents(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_PRIMES);
        let mut out = DivisorIdx { exps: [0; MAX_PRIMES], len: exps.len() as u8 };
        for (slot, &e) in out.exps.iter_mut().zip(exps) {
            *slot = e as u8;
        }
        out
    }

    pub fn exponents(&self) -> &[u8] {
        &self.exps[..self.len as usize]
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.exps[i] as u32
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl fmt::Debug for DivisorIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exponents())
    }
}

struct Inner {
    value: u64,
    primes: Vec<u64>,
    exps: Vec<u32>,
    prime_powers: Vec<u64>,
    cofactors: Vec<u64>,
    cofactor_inv: Vec<u64>,
    strides: Vec<usize>,
    divisors: Vec<u64>,
}

/// A factored modulus. Cloning is cheap.
#[derive(Clone)]
pub struct Modulus(Arc<Inner>);

impl PartialEq for Modulus {
    fn eq(&self, other: &Self) -> bool {
        self.0.value == other.0.value
    }
}
impl Eq for Modulus {}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_{}", self.0.value)
    }
}

/// Factor `m` by trial division. Rejects `m < 2` and `m > 2^32`.
pub fn factor(m: u64) -> Result<Vec<(u64, u32)>> {
    if !(2..=MAX_MODULUS).contains(&m) {
        return Err(Error::InvalidModulus(m));
    }
    Ok(arith::factorize(m))
}

impl Modulus {
    pub fn new(m: u64) -> Result<Self> {
        factor(m)?;
        Ok(Self::build(m))
    }

    /// Builds Z_n for a divisor `n` of M; unlike [`Modulus::new`] this accepts
    /// the trivial group `n = 1`, which shows up at the bottom of divisor scans.
    pub fn divisor_modulus(&self, n: u64) -> Result<Modulus> {
        if n == 0 || self.value() % n != 0 {
            return Err(Error::NotADivisor { d: n, m: self.value() });
        }
        if n == self.value() {
            return Ok(self.clone());
        }
        Ok(Self::build(n))
    }

    fn build(m: u64) -> Self {
        let fac = arith::factorize(m);
        let primes: Vec<u64> = fac.iter().map(|f| f.0).collect();
        let exps: Vec<u32> = fac.iter().map(|f| f.1).collect();
        let prime_powers: Vec<u64> = fac.iter().map(|&(p, e)| p.pow(e)).collect();
        let cofactors: Vec<u64> = prime_powers.iter().map(|q| m / q).collect();
        let cofactor_inv = cofactors
            .iter()
            .zip(&prime_powers)
            .map(|(&c, &q)| mod_inverse(c % q, q).expect("cofactor is a unit"))
            .collect();
        let mut strides = Vec::with_capacity(exps.len());
        let mut s = 1usize;
        for &e in &exps {
            strides.push(s);
            s *= e as usize + 1;
        }
        let mut divisors = vec![0u64; s];
        for (idx, slot) in divisors.iter_mut().enumerate() {
            let mut d = 1u64;
            for i in 0..exps.len() {
                let e = (idx / strides[i]) % (exps[i] as usize + 1);
                d *= primes[i].pow(e as u32);
            }
            *slot = d;
        }
        Modulus(Arc::new(Inner {
            value: m,
            primes,
            exps,
            prime_powers,
            cofactors,
            cofactor_inv,
            strides,
            divisors,
        }))
    }

    pub fn value(&self) -> u64 {
        self.0.value
    }

    pub fn size(&self) -> usize {
        self.0.value as usize
    }

    /// Number of distinct primes K.
    pub fn k(&self) -> usize {
        self.0.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.0.primes
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0.exps
    }

    pub fn prime(&self, i: usize) -> u64 {
        self.0.primes[i]
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.0.exps[i]
    }

    /// `p_i^{n_i}`.
    pub fn prime_power(&self, i: usize) -> u64 {
        self.0.prime_powers[i]
    }

    /// `M_i = M / p_i^{n_i}`.
    pub fn cofactor(&self, i: usize) -> u64 {
        self.0.cofactors[i]
    }

    pub fn direction_of(&self, p: u64) -> Option<usize> {
        self.0.primes.iter().position(|&q| q == p)
    }

    pub fn check_direction(&self, i: usize) -> Result<()> {
        if i < self.k() {
            Ok(())
        } else {
            Err(Error::BadDirection { i, k: self.k() })
        }
    }

    pub fn check_element(&self, x: u64) -> Result<()> {
        if x < self.value() {
            Ok(())
        } else {
            Err(Error::OutOfRange { x, m: self.value() })
        }
    }

    /// Canonical representative of `x mod M`.
    pub fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.value() as i128) as u64
    }

    pub fn add(&self, x: u64, y: u64) -> u64 {
        ((x as u128 + y as u128) % self.value() as u128) as u64
    }

    pub fn sub(&self, x: u64, y: u64) -> u64 {
        let m = self.value();
        (x % m + m - y % m) % m
    }

    pub fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.value() as u128) as u64
    }

    /// The coordinate `pi_i(x) = x M_i^{-1} mod p_i^{n_i}`.
    pub fn coord(&self, x: u64, i: usize) -> u64 {
        let q = self.0.prime_powers[i];
        ((x % q) as u128 * self.0.cofactor_inv[i] as u128 % q as u128) as u64
    }

    pub fn to_coords(&self, x: u64) -> Vec<u64> {
        (0..self.k()).map(|i| self.coord(x, i)).collect()
    }

    pub fn from_coords(&self, coords: &[u64]) -> Result<u64> {
        if coords.len() != self.k() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.k(),
                coords.len()
            )));
        }
        let mut x = 0u64;
        for (i, &c) in coords.iter().enumerate() {
            if c >= self.prime_power(i) {
                return Err(Error::OutOfRange { x: c, m: self.prime_power(i) });
            }
            x = self.add(x, self.mul(c, self.cofactor(i)));
        }
        Ok(x)
    }

    /// Base-`p_i` digits `pi_{i,0}, ..., pi_{i,n_i-1}` of `pi_i(x)`.
    pub fn digits(&self, x: u64, i: usize) -> Vec<u64> {
        let p = self.prime(i);
        let mut c = self.coord(x, i);
        (0..self.exponent(i))
            .map(|_| {
                let d = c % p;
                c /= p;
                d
            })
            .collect()
    }

    pub fn num_divisors(&self) -> usize {
        self.0.divisors.len()
    }

    /// Divisors of M in linear-index order (mixed radix over the exponents).
    pub fn divisors(&self) -> &[u64] {
        &self.0.divisors
    }

    pub fn divisors_sorted(&self) -> Vec<u64> {
        let mut d = self.0.divisors.clone();
        d.sort_unstable();
        d
    }

    pub fn is_divisor(&self, d: u64) -> bool {
        d != 0 && self.value() % d == 0
    }

    pub fn divisor_at(&self, index: usize) -> DivisorIdx {
        let e: Vec<u32> = (0..self.k())
            .map(|i| ((index / self.0.strides[i]) % (self.0.exps[i] as usize + 1)) as u32)
            .collect();
        DivisorIdx::from_exponents(&e)
    }

    pub fn divisor_index(&self, d: &DivisorIdx) -> usize {
        (0..self.k()).map(|i| d.exponent(i) as usize * self.0.strides[i]).sum()
    }

    pub fn divisor_value(&self, d: &DivisorIdx) -> u64 {
        self.0.divisors[self.divisor_index(d)]
    }

    pub fn divisor_idx(&self, d: u64) -> Result<DivisorIdx> {
        if !self.is_divisor(d) {
            return Err(Error::NotADivisor { d, m: self.value() });
        }
        let e: Vec<u32> = self.0.primes.iter().map(|&p| arith::valuation(d, p)).collect();
        Ok(DivisorIdx::from_exponents(&e))
    }

    pub fn index_of_divisor(&self, d: u64) -> Result<usize> {
        Ok(self.divisor_index(&self.divisor_idx(d)?))
    }

    /// Linear index of `(x, M)`; `x` is taken mod M and `(0, M) = M`.
    pub fn gcd_index(&self, x: u64) -> usize {
        let x = x % self.value();
        let mut idx = 0;
        for i in 0..self.k() {
            let n = self.0.exps[i];
            let v = if x == 0 { n } else { arith::valuation(x, self.0.primes[i]).min(n) };
            idx += v as usize * self.0.strides[i];
        }
        idx
    }

    pub fn gcd_value(&self, x: u64) -> u64 {
        self.0.divisors[self.gcd_index(x)]
    }

    pub fn gcd_div(&self, x: u64) -> DivisorIdx {
        self.divisor_at(self.gcd_index(x))
    }

    /// `(x - y, M)` computed from array coordinates: `gamma_i` is the first
    /// digit position where `pi_i(x)` and `pi_i(y)` differ, or `n_i` if they
    /// agree.
    pub fn gcd_div_digits(&self, x: u64, y: u64) -> DivisorIdx {
        let e: Vec<u32> = (0..self.k())
            .map(|i| {
                let dx = self.digits(x, i);
                let dy = self.digits(y, i);
                dx.iter().zip(&dy).position(|(a, b)| a != b).unwrap_or(dx.len()) as u32
            })
            .collect();
        DivisorIdx::from_exponents(&e)
    }

    /// The grid `Lambda(x, D) = x + D Z_M`, ascending.
    pub fn grid(&self, x: u64, d: u64) -> Result<Vec<u64>> {
        if !self.is_divisor(d) {
            return Err(Error::NotADivisor { d, m: self.value() });
        }
        self.check_element(x)?;
        let mut v: Vec<u64> = (0..self.value() / d).map(|k| (x + k * d) % self.value()).collect();
        v.sort_unstable();
        Ok(v)
    }

    pub fn in_grid(&self, x: u64, y: u64, d: u64) -> bool {
        self.sub(y, x) % d == 0
    }

    /// `Pi(x, p_i^alpha)`.
    pub fn plane(&self, x: u64, i: usize, alpha: u32) -> Result<Vec<u64>> {
        self.check_direction(i)?;
        if alpha > self.exponent(i) {
            return Err(Error::NotADivisor { d: self.prime(i).pow(alpha), m: self.value() });
        }
        self.grid(x, self.prime(i).pow(alpha))
    }

    /// The line `ell_i(x) = Lambda(x, M_i)` with `p_i^{n_i}` points.
    pub fn line(&self, x: u64, i: usize) -> Result<Vec<u64>> {
        self.check_direction(i)?;
        self.grid(x, self.cofactor(i))
    }

    /// The M-fiber `x * F_i = Lambda(x, M / p_i)`.
    pub fn fiber(&self, x: u64, i: usize) -> Result<Vec<u64>> {
        self.check_direction(i)?;
        self.grid(x, self.value() / self.prime(i))
    }

    /// `D(N) = prod p_i^{max(0, alpha_i - 1)}` for `N = prod p_i^{alpha_i}`.
    pub fn top_grid_step(&self, n: u64) -> Result<u64> {
        let d = self.divisor_idx(n)?;
        Ok((0..self.k())
            .map(|i| self.prime(i).pow(d.exponent(i).saturating_sub(1)))
            .product())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_moduli() {
        assert!(Modulus::new(0).is_err());
        assert!(Modulus::new(1).is_err());
        assert!(Modulus::new((1 << 32) + 1).is_err());
        assert!(Modulus::new(1 << 32).is_ok());
    }

    #[test]
    fn coordinates_of_z12() {
        let m = Modulus::new(12).unwrap();
        assert_eq!(m.primes(), &[2, 3]);
        assert_eq!(m.cofactor(0), 3);
        assert_eq!(m.cofactor(1), 4);
        // 7 = pi_1 * 3 + pi_2 * 4 mod 12 with pi_1 in Z_4, pi_2 in Z_3
        let c = m.to_coords(7);
        assert_eq!((c[0] * 3 + c[1] * 4) % 12, 7);
        assert_eq!(c, vec![1, 1]);
        for x in 0..12 {
            assert_eq!(m.from_coords(&m.to_coords(x)).unwrap(), x);
        }
    }

    #[test]
    fn gcd_of_zero_is_m() {
        let m = Modulus::new(18).unwrap();
        assert_eq!(m.gcd_value(0), 18);
        assert_eq!(m.gcd_value(12), 6);
        assert_eq!(m.gcd_value(7), 1);
    }

    #[test]
    fn gcd_from_digits_matches_integer_gcd() {
        for mv in [12u64, 18, 72, 225, 360] {
            let m = Modulus::new(mv).unwrap();
            for x in 0..mv {
                for y in (0..mv).step_by(7) {
                    let g = arith::gcd(m.sub(x, y), mv);
                    let g = if g == 0 { mv } else { g };
                    assert_eq!(m.divisor_value(&m.gcd_div_digits(x, y)), g);
                }
            }
        }
    }

    #[test]
    fn grids_lines_and_fibers() {
        let m = Modulus::new(12).unwrap();
        assert_eq!(m.fiber(1, 0).unwrap(), vec![1, 7]);
        assert_eq!(m.fiber(1, 1).unwrap(), vec![1, 5, 9]);
        assert_eq!(m.line(0, 0).unwrap(), vec![0, 3, 6, 9]);
        assert_eq!(m.plane(2, 1, 1).unwrap(), vec![2, 5, 8, 11]);
        assert_eq!(m.top_grid_step(12).unwrap(), 2);
        assert!(m.grid(0, 5).is_err());
    }

    #[test]
    fn divisor_index_roundtrip() {
        let m = Modulus::new(360).unwrap();
        assert_eq!(m.num_divisors(), 24);
        for (idx, &d) in m.divisors().iter().enumerate() {
            assert_eq!(m.index_of_divisor(d).unwrap(), idx);
            assert_eq!(m.divisor_value(&m.divisor_at(idx)), d);
        }
    }
}
