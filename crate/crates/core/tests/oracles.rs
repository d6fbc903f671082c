//! Brute-force oracles checked against the library on small moduli.

use std::collections::BTreeSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tilekit::search::{self, PairRecord};
use tilekit::{boxes, cyclotomic, tiling, Modulus, Multiset};

fn rotl(mask: u64, t: u64, m: u64) -> u64 {
    let full = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    if t == 0 {
        mask
    } else {
        ((mask << t) | (mask >> (m - t))) & full
    }
}

/// `A ⊕ B = Z_M` for sets given as bitmasks.
fn tiles_mask(a: u64, b: u64, m: u64) -> bool {
    let mut cover = 0u64;
    let mut t = a;
    while t != 0 {
        let s = t.trailing_zeros() as u64;
        t &= t - 1;
        let r = rotl(b, s, m);
        if cover & r != 0 {
            return false;
        }
        cover |= r;
    }
    cover.count_ones() as u64 == m
}

fn elems(mask: u64) -> Vec<u64> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

fn lex_least_translate(set: &[u64], m: u64) -> Vec<u64> {
    set.iter()
        .map(|&a| {
            let mut v: Vec<u64> = set.iter().map(|&x| (x + m - a) % m).collect();
            v.sort_unstable();
            v
        })
        .min()
        .unwrap()
}

/// Masks over Z_m containing 0 with `k` elements.
fn masks_with_zero(m: u64, k: u32) -> Vec<u64> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let r = k - 1;
    if r == 0 {
        return vec![1];
    }
    // Gosper's hack over bits 1..m
    let mut v: u64 = (1u64 << r) - 1;
    while v < 1u64 << (m - 1) {
        out.push((v << 1) | 1);
        let c = v & v.wrapping_neg();
        let s = v + c;
        v = (((v ^ s) >> 2) / c) | s;
    }
    out
}

fn naive_complements(a: &[u64], m: u64) -> Vec<Vec<u64>> {
    let am: u64 = a.iter().map(|&x| 1u64 << x).sum();
    let k = (m / a.len() as u64) as u32;
    let mut out: Vec<Vec<u64>> =
        masks_with_zero(m, k).into_iter().filter(|&b| tiles_mask(am, b, m)).map(elems).collect();
    out.sort();
    out
}

fn naive_corpus(m: u64) -> BTreeSet<PairRecord> {
    let mut out = BTreeSet::new();
    for k in tilekit::arith::divisors(m).into_iter().filter(|&k| k * k <= m) {
        let bs = masks_with_zero(m, (m / k) as u32);
        for a in masks_with_zero(m, k as u32) {
            for &b in &bs {
                if tiles_mask(a, b, m) {
                    let r = PairRecord {
                        modulus: m,
                        a: lex_least_translate(&elems(a), m),
                        b: lex_least_translate(&elems(b), m),
                    };
                    out.insert(r.swapped());
                    out.insert(r);
                }
            }
        }
    }
    out
}

#[test]
fn complements_match_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for m in 2..=24u64 {
        let zm = Modulus::new(m).unwrap();
        let mut candidates: Vec<Vec<u64>> = Vec::new();
        if m <= 12 {
            for k in tilekit::arith::divisors(m) {
                candidates.extend(masks_with_zero(m, k as u32).into_iter().map(elems));
            }
        } else {
            for rec in search::exhaustive_pairs(m, u64::MAX).unwrap().into_iter().step_by(7).take(25) {
                candidates.push(rec.a);
            }
            let sizes: Vec<u64> = tilekit::arith::divisors(m).into_iter().filter(|&k| k > 1 && k < m).collect();
            for _ in 0..if sizes.is_empty() { 0 } else { 25 } {
                let k = sizes[rng.random_range(0..sizes.len())];
                let mut set = BTreeSet::from([0u64]);
                while (set.len() as u64) < k {
                    set.insert(rng.random_range(0..m));
                }
                candidates.push(set.into_iter().collect());
            }
        }
        for a in candidates {
            let ms = Multiset::from_set(&zm, &a).unwrap();
            let got = search::enumerate_complements(&ms, u64::MAX).unwrap();
            assert_eq!(got, naive_complements(&a, m), "M = {m}, A = {a:?}");
            let single = search::complements(&ms, u64::MAX, None, false).unwrap();
            assert_eq!(single, got);
        }
    }
}

#[test]
fn exhaustive_corpus_matches_brute_force() {
    // frozen counts of (canonical A, canonical B) records, both orientations
    for (m, count) in [(12u64, 52usize), (16, 98), (18, 192), (24, 1622)] {
        let naive = naive_corpus(m);
        assert_eq!(naive.len(), count, "M = {m}");
        let got: BTreeSet<PairRecord> = search::exhaustive_pairs(m, u64::MAX).unwrap().into_iter().collect();
        assert_eq!(got, naive, "M = {m}");
    }
}

#[test]
fn verify_matches_sumset_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in search::DEFAULT_MODULI {
        let zm = Modulus::new(m).unwrap();
        let divs = tilekit::arith::divisors(m);
        let corpus_pairs = search::exhaustive_pairs(m.min(24), u64::MAX).unwrap();
        for trial in 0..10_000 {
            let (a, b): (Vec<u64>, Vec<u64>) = if m <= 24 && trial % 4 == 0 {
                let r = &corpus_pairs[rng.random_range(0..corpus_pairs.len())];
                let mut b = r.b.clone();
                // perturb one element half of the time
                if trial % 8 == 0 {
                    let i = rng.random_range(0..b.len());
                    b[i] = rng.random_range(0..m);
                    b.sort_unstable();
                    b.dedup();
                }
                (r.a.clone(), b)
            } else {
                let k = divs[rng.random_range(0..divs.len())];
                let draw = |n: u64, rng: &mut ChaCha8Rng| {
                    let mut s = BTreeSet::new();
                    while (s.len() as u64) < n {
                        s.insert(rng.random_range(0..m));
                    }
                    s.into_iter().collect::<Vec<u64>>()
                };
                (draw(k, &mut rng), draw(m / k, &mut rng))
            };
            let ma = Multiset::from_set(&zm, &a).unwrap();
            let mb = Multiset::from_set(&zm, &b).unwrap();
            let rep = tiling::verify(&ma, &mb).unwrap();
            let mut hits = vec![0u32; m as usize];
            for &x in &a {
                for &y in &b {
                    hits[((x + y) % m) as usize] += 1;
                }
            }
            let naive = hits.iter().all(|&h| h == 1);
            assert!(rep.consistent, "M = {m}, A = {a:?}, B = {b:?}: {rep:?}");
            assert_eq!(rep.tiles(), naive, "M = {m}, A = {a:?}, B = {b:?}");
        }
    }
}

/// Cyclotomic polynomial by repeated exact division of `X^s - 1`.
fn naive_cyclotomic(s: u64) -> Vec<i64> {
    let mut num = vec![0i64; s as usize + 1];
    num[0] = -1;
    num[s as usize] = 1;
    for d in 1..s {
        if s % d == 0 {
            let den = naive_cyclotomic(d);
            num = long_div(&num, &den).0;
        }
    }
    num
}

/// Quotient and remainder for a monic divisor.
fn long_div(num: &[i64], den: &[i64]) -> (Vec<i64>, Vec<i64>) {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    if r.len() <= dd {
        return (vec![0], r);
    }
    let mut q = vec![0i64; r.len() - dd];
    for k in (0..q.len()).rev() {
        let c = r[k + dd];
        q[k] = c;
        for (j, &dj) in den.iter().enumerate() {
            r[k + j] -= c * dj;
        }
    }
    r.truncate(dd);
    (q, r)
}

#[test]
fn cyclotomic_divisibility_matches_long_division() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in [12u64, 18, 30, 36, 60] {
        let zm = Modulus::new(m).unwrap();
        for trial in 0..300 {
            let w: Vec<i64> = if trial % 3 == 0 {
                // sums of standard cosets are divisible by many Phi_s
                let step = tilekit::arith::divisors(m)[rng.random_range(0..tilekit::arith::divisors(m).len())];
                let mut w = vec![0i64; m as usize];
                let shift = rng.random_range(0..m);
                for t in (0..m).step_by(step as usize) {
                    w[((t + shift) % m) as usize] += 1;
                }
                w
            } else {
                (0..m).map(|_| rng.random_range(-1..=1)).collect()
            };
            let a = Multiset::from_weights(&zm, w.clone()).unwrap();
            for s in tilekit::arith::divisors(m).into_iter().filter(|&s| s > 1) {
                let phi = naive_cyclotomic(s);
                assert_eq!(&phi[..], &cyclotomic::cyclotomic(s)[..], "Phi_{s}");
                // Phi_s | X^M - 1, so divisibility mod X^M - 1 is divisibility in Z[X]
                let rem = long_div(&w, &phi).1;
                let naive = rem.iter().all(|&c| c == 0);
                assert_eq!(cyclotomic::divides(&a, s).unwrap(), naive, "M = {m}, s = {s}, w = {w:?}");
                assert_eq!(boxes::energy(&a, s).unwrap() == 0, naive);
            }
        }
    }
}

#[test]
fn box_product_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in [12u64, 36, 60] {
        let zm = Modulus::new(m).unwrap();
        for _ in 0..40 {
            let wa: Vec<i64> = (0..m).map(|_| rng.random_range(-2..=2)).collect();
            let wb: Vec<i64> = (0..m).map(|_| rng.random_range(-2..=2)).collect();
            let a = Multiset::from_weights(&zm, wa.clone()).unwrap();
            let b = Multiset::from_weights(&zm, wb.clone()).unwrap();
            for n in tilekit::arith::divisors(m) {
                let x = rng.random_range(0..m);
                let y = rng.random_range(0..m);
                let entries = |w: &[i64], z: u64| {
                    let mut e = std::collections::BTreeMap::new();
                    for (t, &c) in w.iter().enumerate() {
                        let g = num_integer::gcd((z + m - t as u64) % n, n);
                        let g = if g == 0 { n } else { g };
                        *e.entry(g).or_insert(0i64) += c;
                    }
                    e
                };
                let ea = entries(&wa, x);
                let eb = entries(&wb, y);
                let mut value = num_rational::Ratio::<i128>::from_integer(0);
                for (d, &u) in &ea {
                    let v = eb.get(d).copied().unwrap_or(0);
                    value += num_rational::Ratio::new(u as i128 * v as i128, tilekit::arith::euler_phi(n / d) as i128);
                }
                let bx = boxes::nbox(&a, n, x).unwrap();
                let by = boxes::nbox(&b, n, y).unwrap();
                assert_eq!(boxes::box_product(&bx, &by).unwrap(), value, "M = {m}, N = {n}");
            }
        }
    }
}
