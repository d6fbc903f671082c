//! Integer-weighted multisets on Z_M, read interchangeably as mask
//! polynomials `A(X) = sum_a w_A(a) X^a mod (X^M - 1)`.
//!
//! All arithmetic is checked; an overflow surfaces as [`Error::Overflow`]
//! rather than wrapping.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zmod::Modulus;

#[derive(Clone, PartialEq, Eq)]
pub struct Multiset {
    modulus: Modulus,
    weights: Vec<i64>,
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_set() {
            write!(f, "{:?}{:?}", self.modulus, self.support())
        } else {
            let nz: Vec<(u64, i64)> = self.sparse();
            write!(f, "{:?}{:?}", self.modulus, nz)
        }
    }
}

/// Serialized form. Sets use `elements`, general multisets use `weights`
/// keyed by the decimal element.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MultisetJson {
    pub modulus: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, i64>>,
}

fn same_modulus(a: &Multiset, b: &Multiset) -> Result<()> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch { left: a.modulus.value(), right: b.modulus.value() });
    }
    Ok(())
}

impl Multiset {
    pub fn zero(modulus: &Modulus) -> Self {
        Multiset { modulus: modulus.clone(), weights: vec![0; modulus.size()] }
    }

    /// The indicator of a set. Elements must be distinct and in range.
    pub fn from_set(modulus: &Modulus, elements: &[u64]) -> Result<Self> {
        let mut out = Self::zero(modulus);
        for &x in elements {
            modulus.check_element(x)?;
            if out.weights[x as usize] != 0 {
                return Err(Error::DuplicateElement(x));
            }
            out.weights[x as usize] = 1;
        }
        Ok(out)
    }

    /// Counts each residue of the given integers mod M.
    pub fn from_residues<I: IntoIterator<Item = i128>>(modulus: &Modulus, xs: I) -> Result<Self> {
        let mut out = Self::zero(modulus);
        for x in xs {
            let r = modulus.reduce(x) as usize;
            out.weights[r] = out.weights[r].checked_add(1).ok_or(Error::Overflow("from_residues"))?;
        }
        Ok(out)
    }

    pub fn from_weights(modulus: &Modulus, weights: Vec<i64>) -> Result<Self> {
        if weights.len() != modulus.size() {
            return Err(Error::WrongLength { got: weights.len(), expected: modulus.size() });
        }
        Ok(Multiset { modulus: modulus.clone(), weights })
    }

    pub fn from_sparse(modulus: &Modulus, entries: &[(u64, i64)]) -> Result<Self> {
        let mut out = Self::zero(modulus);
        for &(x, w) in entries {
            modulus.check_element(x)?;
            let slot = &mut out.weights[x as usize];
            *slot = slot.checked_add(w).ok_or(Error::Overflow("from_sparse"))?;
        }
        Ok(out)
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn weight(&self, x: u64) -> i64 {
        self.weights[(x % self.modulus.value()) as usize]
    }

    pub fn is_set(&self) -> bool {
        self.weights.iter().all(|&w| w == 0 || w == 1)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0)
    }

    pub fn contains(&self, x: u64) -> bool {
        self.weight(x) != 0
    }

    /// Elements with nonzero weight, ascending.
    pub fn support(&self) -> Vec<u64> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0)
            .map(|(x, _)| x as u64)
            .collect()
    }

    pub fn sparse(&self) -> Vec<(u64, i64)> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0)
            .map(|(x, &w)| (x as u64, w))
            .collect()
    }

    /// Number of points with nonzero weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0).count()
    }

    /// `A(1)`, the total weight.
    pub fn total(&self) -> Result<i64> {
        self.weights
            .iter()
            .try_fold(0i64, |acc, &w| acc.checked_add(w))
            .ok_or(Error::Overflow("total"))
    }

    /// The image in Z_N: `w^N(x) = sum_{x' = x mod N} w(x')`.
    pub fn reduce_mod(&self, n: u64) -> Result<Multiset> {
        let target = self.modulus.divisor_modulus(n)?;
        let mut weights = vec![0i64; n as usize];
        for (x, &w) in self.weights.iter().enumerate() {
            if w != 0 {
                let slot = &mut weights[x % n as usize];
                *slot = slot.checked_add(w).ok_or(Error::Overflow("reduce_mod"))?;
            }
        }
        Ok(Multiset { modulus: target, weights })
    }

    /// Lifts a multiset on Z_N (N | M) to Z_M along the inclusion
    /// `x -> x` of representatives `0..N`; used for slabs and reductions.
    pub fn embed(&self, target: &Modulus) -> Result<Multiset> {
        if target.value() % self.modulus.value() != 0 {
            return Err(Error::NotADivisor { d: self.modulus.value(), m: target.value() });
        }
        let mut out = Multiset::zero(target);
        out.weights[..self.weights.len()].copy_from_slice(&self.weights);
        Ok(out)
    }

    /// Product of mask polynomials mod `X^M - 1`. Sparse in both operands.
    pub fn convolve(&self, other: &Multiset) -> Result<Multiset> {
        same_modulus(self, other)?;
        let m = self.modulus.size();
        let mut out = vec![0i64; m];
        let rhs = other.sparse();
        for (x, &w) in self.weights.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for &(y, v) in &rhs {
                let z = (x + y as usize) % m;
                let prod = w.checked_mul(v).ok_or(Error::Overflow("convolve"))?;
                out[z] = out[z].checked_add(prod).ok_or(Error::Overflow("convolve"))?;
            }
        }
        Ok(Multiset { modulus: self.modulus.clone(), weights: out })
    }

    pub fn add(&self, other: &Multiset) -> Result<Multiset> {
        same_modulus(self, other)?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("add")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Multiset { modulus: self.modulus.clone(), weights })
    }

    pub fn sub(&self, other: &Multiset) -> Result<Multiset> {
        self.add(&other.scale(-1)?)
    }

    pub fn scale(&self, c: i64) -> Result<Multiset> {
        let weights = self
            .weights
            .iter()
            .map(|w| w.checked_mul(c).ok_or(Error::Overflow("scale")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Multiset { modulus: self.modulus.clone(), weights })
    }

    /// `X^t A(X)`, i.e. `A + t`.
    pub fn translate(&self, t: u64) -> Multiset {
        let m = self.modulus.size();
        let t = (t % m as u64) as usize;
        let mut weights = vec![0i64; m];
        for (x, &w) in self.weights.iter().enumerate() {
            weights[(x + t) % m] = w;
        }
        Multiset { modulus: self.modulus.clone(), weights }
    }

    /// `A(X^r)`, the image of `A` under `x -> r x`.
    pub fn dilate(&self, r: u64) -> Result<Multiset> {
        let mut out = Multiset::zero(&self.modulus);
        for (x, &w) in self.weights.iter().enumerate() {
            if w != 0 {
                let z = self.modulus.mul(x as u64, r) as usize;
                out.weights[z] = out.weights[z].checked_add(w).ok_or(Error::Overflow("dilate"))?;
            }
        }
        Ok(out)
    }

    /// `A(X^{-1})`.
    pub fn reflect(&self) -> Multiset {
        let m = self.modulus.size();
        let mut weights = vec![0i64; m];
        for (x, &w) in self.weights.iter().enumerate() {
            weights[(m - x) % m] = w;
        }
        Multiset { modulus: self.modulus.clone(), weights }
    }

    /// Keeps the weights on points accepted by `keep`.
    pub fn restrict<F: Fn(u64) -> bool>(&self, keep: F) -> Multiset {
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(x, &w)| if keep(x as u64) { w } else { 0 })
            .collect();
        Multiset { modulus: self.modulus.clone(), weights }
    }

    /// Translate of a set whose smallest element is 0.
    pub fn normalized(&self) -> Multiset {
        match self.support().first() {
            Some(&a) => self.translate(self.modulus.value() - a),
            None => self.clone(),
        }
    }

    /// The lexicographically least translate that contains 0, together with
    /// the shift `t` such that the result is `A - t`.
    pub fn canonical(&self) -> (Multiset, u64) {
        let m = self.modulus.value();
        let supp = self.support();
        let mut best: Option<(Vec<u64>, u64)> = None;
        for &a in &supp {
            let mut v: Vec<u64> = supp.iter().map(|&x| (x + m - a) % m).collect();
            v.sort_unstable();
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, a));
            }
        }
        match best {
            Some((_, a)) => (self.translate(m - a), a),
            None => (self.clone(), 0),
        }
    }

    pub fn to_json(&self) -> MultisetJson {
        if self.is_set() {
            MultisetJson { modulus: self.modulus.value(), elements: Some(self.support()), weights: None }
        } else {
            let w = self.sparse().into_iter().map(|(x, w)| (x.to_string(), w)).collect();
            MultisetJson { modulus: self.modulus.value(), elements: None, weights: Some(w) }
        }
    }

    pub fn from_json(j: &MultisetJson) -> Result<Multiset> {
        let modulus = Modulus::new(j.modulus)?;
        match (&j.elements, &j.weights) {
            (Some(e), None) => Multiset::from_set(&modulus, e),
            (None, Some(w)) => {
                let mut entries = Vec::with_capacity(w.len());
                for (k, &v) in w {
                    let x: u64 = k
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad element key {k:?}")))?;
                    entries.push((x, v));
                }
                Multiset::from_sparse(&modulus, &entries)
            }
            _ => Err(Error::InvalidArgument(
                "exactly one of \"elements\" or \"weights\" must be given".into(),
            )),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("plain data serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Multiset> {
        Multiset::from_json(&serde_json::from_str(s)?)
    }
}
