//! Acceptance run. Every criterion is checked exactly and reported on one
//! line; any failure makes the process exit nonzero.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tilekit::fibers::{self, FiberChain};
use tilekit::search::{self, CorpusConfig};
use tilekit::{arith, boxes, cuboids, cyclotomic, reductions, saturation, tiling, Error, Modulus, Multiset, TilingPair};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn(&Ctx) -> Outcome);

const BUDGET: u64 = 200_000_000;

struct Ctx {
    pairs: Vec<TilingPair>,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: tilekit::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Subsets of Z_m containing 0 with `k` elements, as sorted lists.
fn subsets_with_zero(m: u64, k: usize, mut f: impl FnMut(&[u64])) {
    fn rec(m: u64, k: usize, next: u64, cur: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let missing = (k - cur.len()) as u64;
        let mut v = next;
        while v + missing <= m {
            cur.push(v);
            rec(m, k, v + 1, cur, f);
            cur.pop();
            v += 1;
        }
    }
    let mut cur = vec![0];
    if k == 0 {
        return;
    }
    rec(m, k, 1, &mut cur, &mut f);
}

fn is_lex_least_translate(set: &[u64], m: u64) -> bool {
    set.iter().all(|&a| {
        let mut v: Vec<u64> = set.iter().map(|&x| (x + m - a) % m).collect();
        v.sort_unstable();
        v.as_slice() >= set
    })
}

/// Every pair with `|A||B| = M` has a factor of size at most `sqrt(M)`, and
/// both conditions are symmetric and translation invariant. So it suffices
/// to take canonical `A` with `|A| <= sqrt(M)` and compare all `B ∋ 0` that
/// tile with all `B ∋ 0` that avoid `Div(A) \ {M}`.
fn divisor_exclusion(_: &Ctx) -> Outcome {
    let mut factors = 0usize;
    let mut tilings = 0usize;
    for m in 2..=40u64 {
        let zm = Modulus::new(m).unwrap();
        for k in arith::divisors(m).into_iter().filter(|&k| k * k <= m) {
            let mut err: Option<String> = None;
            subsets_with_zero(m, k as usize, |set| {
                if err.is_some() || !is_lex_least_translate(set, m) {
                    return;
                }
                factors += 1;
                let run = || -> std::result::Result<usize, String> {
                    let a = lib(Multiset::from_set(&zm, set))?;
                    let tiles = lib(search::complements(&a, BUDGET, None, false))?;
                    let disjoint = lib(search::div_disjoint_partners(&a, (m / k) as usize, BUDGET))?;
                    ensure(tiles == disjoint, || {
                        format!("M = {m}, A = {set:?}: {} complements, {} Div-disjoint partners", tiles.len(), disjoint.len())
                    })?;
                    for b in &disjoint {
                        let b = lib(Multiset::from_set(&zm, b))?;
                        let rep = lib(tiling::verify(&a, &b))?;
                        ensure(rep.consistent && rep.direct.holds && rep.divisor_exclusion.holds, || {
                            format!("M = {m}, A = {set:?}, B = {:?}: {}", b.support(), rep.summary())
                        })?;
                    }
                    Ok(tiles.len())
                };
                match run() {
                    Ok(t) => tilings += t,
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(format!("{factors} canonical small factors, {tilings} tilings, 0 mismatches for M <= 40"))
}

fn box_products(ctx: &Ctx) -> Outcome {
    let mut checked = 0usize;
    for (idx, pair) in ctx.pairs.iter().enumerate() {
        let m = pair.modulus().value();
        for n in arith::divisors(m) {
            let sample = if m > 60 { Some((1000, idx as u64 * 7919 + n)) } else { None };
            let rep = lib(boxes::ortho_scan(pair, n, sample))?;
            ensure(rep.failures.is_empty(), || {
                format!("M = {m}, N = {n}, A = {:?}: {:?}", pair.a().support(), rep.failures.first())
            })?;
            checked += rep.checked;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let (mut decoys, mut flagged, mut tiles) = (0usize, 0usize, 0usize);
    while decoys < 10_000 {
        let pair = &ctx.pairs[rng.random_range(0..ctx.pairs.len())];
        let zm = pair.modulus().clone();
        let m = zm.value();
        let (a, b) = if decoys % 2 == 0 {
            // move one element of B
            let mut b = pair.b().support();
            let i = rng.random_range(0..b.len());
            b[i] = rng.random_range(0..m);
            b.sort_unstable();
            b.dedup();
            (pair.a().support(), b)
        } else {
            let divs = arith::divisors(m);
            let k = divs[rng.random_range(0..divs.len())];
            let mut draw = |n: u64| {
                let mut s = BTreeSet::new();
                while (s.len() as u64) < n {
                    s.insert(rng.random_range(0..m));
                }
                s.into_iter().collect::<Vec<u64>>()
            };
            (draw(k), draw(m / k))
        };
        let a = lib(Multiset::from_set(&zm, &a))?;
        let b = lib(Multiset::from_set(&zm, &b))?;
        let truth = lib(tiling::verify(&a, &b))?.direct.holds;
        let conv = lib(boxes::converse_check(&a, &b))?;
        ensure(conv == truth, || format!("converse disagrees on M = {m}, A = {:?}, B = {:?}", a.support(), b.support()))?;
        decoys += 1;
        if truth {
            tiles += 1;
        } else {
            flagged += 1;
        }
    }
    Ok(format!(
        "{checked} box products equal M/N over {} pairs; converse flagged {flagged}/{flagged} non-tilings among {decoys} decoys ({tiles} tiled)",
        ctx.pairs.len()
    ))
}

fn identity(_: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut total = 0;
    for n in [12u64, 36, 60, 90, 120] {
        for t in 0..500 {
            // half dense on Z_N, half sparse on Z_360
            let m = if t % 2 == 0 { n } else { 360 };
            let zm = Modulus::new(m).unwrap();
            let draw = |rng: &mut ChaCha8Rng| -> tilekit::Result<Multiset> {
                if m == n {
                    Multiset::from_weights(&zm, (0..m).map(|_| rng.random_range(-3..=3)).collect())
                } else {
                    let entries: Vec<(u64, i64)> =
                        (0..12).map(|_| (rng.random_range(0..m), rng.random_range(-3..=3))).collect();
                    Multiset::from_sparse(&zm, &entries)
                }
            };
            let (a, b, c, d) = (lib(draw(&mut rng))?, lib(draw(&mut rng))?, lib(draw(&mut rng))?, lib(draw(&mut rng))?);
            let rep = lib(boxes::identity_check(&a, &b, &c, &d, n))?;
            ensure(rep.holds, || format!("N = {n}, M = {m}: {} != {}", rep.lhs, rep.rhs))?;
            total += 1;
        }
    }
    Ok(format!("{total} quadruples, both sides equal as rationals"))
}

fn cuboid_criterion(_: &Ctx) -> Outcome {
    let mut subsets = 0u64;
    let mut divisible = 0u64;
    for n in [12u64, 18, 20] {
        let zn = Modulus::new(n).unwrap();
        let t = lib(cuboids::classic_type(&zn, n))?;
        for mask in 0u64..1 << n {
            let w: Vec<i64> = (0..n).map(|i| (mask >> i & 1) as i64).collect();
            let null = lib(cuboids::null_scan(&w, &zn, &t))?.null;
            let a = lib(Multiset::from_weights(&zn, w))?;
            let div = lib(cyclotomic::divides(&a, n))?;
            ensure(null == div, || format!("N = {n}, A = {:?}: null {null}, Phi_N | A {div}", a.support()))?;
            subsets += 1;
            divisible += div as u64;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let mut random = 0;
    let mut random_div = 0;
    for n in [30u64, 60, 72, 84, 90, 105, 120, 144, 180, 210, 240] {
        let zn = Modulus::new(n).unwrap();
        let primes: Vec<u64> = arith::factorize(n).into_iter().map(|(p, _)| p).collect();
        for t in 0..40 {
            let mut w = vec![0i64; n as usize];
            if t % 2 == 0 {
                // signed sums of cosets of the subgroups of prime order, all divisible by Phi_N
                for _ in 0..rng.random_range(1..6) {
                    let p = primes[rng.random_range(0..primes.len())];
                    let c = rng.random_range(0..n);
                    let s = rng.random_range(-2..=2);
                    for j in 0..p {
                        w[((c + j * (n / p)) % n) as usize] += s;
                    }
                }
                if t % 4 == 0 {
                    w[rng.random_range(0..n) as usize] += 1;
                }
            } else {
                for x in w.iter_mut() {
                    *x = rng.random_range(-1..=1);
                }
            }
            let a = lib(Multiset::from_weights(&zn, w))?;
            let v = lib(cuboids::cyclotomic_via_cuboids(&a, n))?;
            ensure(v.agree(), || format!("N = {n}: {v:?}"))?;
            random += 1;
            random_div += v.divides as usize;
        }
    }
    Ok(format!(
        "{subsets} subsets of Z_12, Z_18, Z_20 ({divisible} divisible by Phi_N); {random} multisets with N <= 240 ({random_div} divisible)"
    ))
}

fn worked_example(_: &Ctx) -> Outcome {
    let (p, q) = (3u64, 2u64);
    let zm = Modulus::new(p * p * q).unwrap();
    let ip = zm.direction_of(p).unwrap();
    let iq = zm.direction_of(q).unwrap();
    let at = |u: u64, v: u64| {
        let mut c = vec![0; 2];
        c[ip] = u;
        c[iq] = v;
        zm.from_coords(&c).unwrap()
    };
    let mut a = Vec::new();
    let mut flat = Vec::new();
    for i in 0..q {
        for j in 0..p {
            a.push(at(i + j * p, i));
            flat.push(at(j * p, i));
        }
    }
    let b: Vec<u64> = (0..p).map(|j| at(j, 0)).collect();
    let ma = lib(Multiset::from_set(&zm, &a))?;
    let mb = lib(Multiset::from_set(&zm, &b))?;
    let rep = lib(tiling::verify(&ma, &mb))?;
    ensure(rep.tiles(), || rep.summary())?;
    for (name, s) in [("A", &ma), ("B", &mb)] {
        ensure(lib(cyclotomic::t1_check(s))?, || format!("T1 fails for {name}"))?;
        ensure(lib(cyclotomic::t2_check(s))?.holds, || format!("T2 fails for {name}"))?;
    }
    ensure(lib(cyclotomic::divides(&ma, p * p))? && lib(cyclotomic::divides(&ma, q))?, || {
        "Phi_{p^2} Phi_q does not divide A".into()
    })?;
    let std_a = lib(tiling::standard_complement(&ma))?;
    let mut flat_sorted = flat.clone();
    flat_sorted.sort_unstable();
    ensure(std_a.support() == flat_sorted, || format!("A-flat is {:?}, expected {flat_sorted:?}", std_a.support()))?;
    let div_flat = lib(tiling::div(&std_a))?;
    let div_a = lib(tiling::div(&ma))?;
    let div_b = lib(tiling::div(&mb))?;
    ensure(div_flat.contains(p), || "p not in Div(A-flat)".into())?;
    ensure(!div_a.contains(p), || "p in Div(A)".into())?;
    ensure(!div_b.contains(p), || "p in Div(B)".into())?;
    ensure(div_a.values() == vec![1, p * q, p * p * q], || format!("Div(A) = {:?}", div_a.values()))?;
    Ok(format!("M = 18, A = {:?}, B = {:?}, Div(A) = {:?}", ma.support(), mb.support(), div_a.values()))
}

fn standard_complements(ctx: &Ctx) -> Outcome {
    let mut replaceable = 0;
    for pair in &ctx.pairs {
        let flat = lib(tiling::standard_complement(pair.a()))?;
        ensure(lib(cyclotomic::t2_check(&flat))?.holds, || format!("A-flat fails T2 for A = {:?}", pair.a().support()))?;
        ensure(lib(cyclotomic::s_a(&flat))? == lib(cyclotomic::s_a(pair.a()))?, || {
            format!("S_A differs from S_(A-flat) for A = {:?}", pair.a().support())
        })?;
        let r = lib(tiling::replacement_check(pair))?;
        ensure(r.agree(), || format!("M = {}, A = {:?}: {r:?}", pair.modulus().value(), pair.a().support()))?;
        replaceable += r.flat_tiles as usize;
    }
    Ok(format!("{} pairs, A-flat replaces A in {replaceable}", ctx.pairs.len()))
}

fn szabo(_: &Ctx) -> Outcome {
    let (pair, report) = lib(fibers::szabo_construct(&[3, 5, 7]))?;
    let m = pair.modulus();
    ensure(m.value() == 11025, || format!("M = {}", m.value()))?;
    let rep = lib(tiling::verify(pair.a(), pair.b()))?;
    ensure(rep.tiles(), || rep.summary())?;
    ensure(pair.a().support_size() == 105 && pair.b().support_size() == 105, || "sizes differ from 105".into())?;
    for q in [3u64, 5, 7] {
        for s in [pair.a(), pair.b()] {
            ensure(s.support().iter().any(|&x| x % q != 0), || format!("a factor lies in {q}Z_M"))?;
        }
    }
    ensure(report.a_in_subgroup.is_empty() && report.b_in_subgroup.is_empty(), || format!("{report:?}"))?;
    ensure(lib(cyclotomic::t2_check(pair.a()))?.holds && lib(cyclotomic::t2_check(pair.b()))?.holds, || {
        "T2 fails".into()
    })?;
    for i in 0..3 {
        let c = lib(reductions::slab_conditions(&pair, i))?;
        ensure(c.all() && c.agree(), || format!("direction {i}: {c:?}"))?;
        let r = lib(reductions::slab_reduce(&pair, i))?;
        ensure(r.t2_reduced_a && r.t2_reduced_b && r.t2_transfer_ok(), || format!("slab reduction in direction {i}"))?;
    }
    Ok("M = 11025, |A| = |B| = 105, slab conditions hold and agree in all 3 directions".into())
}

const COFIBER_CAP: usize = 16;

fn fiber_shifts(ctx: &Ctx) -> Outcome {
    let mut instances = 0usize;
    let mut shifts = 0usize;
    for pair in &ctx.pairs {
        let m = pair.modulus();
        let mut found = false;
        for i in 0..m.k() {
            let p = m.prime(i);
            for gamma in 1..=m.exponent(i) {
                for s in lib(fibers::cofibered_structures(pair, i, gamma, COFIBER_CAP))? {
                    found = true;
                    for chain in &s.cofibers {
                        for &beta in &s.pset_b {
                            let pb = p.pow(beta);
                            for k in (1..pb).filter(|k| k % p != 0) {
                                let ctxs = || format!("M = {}, A = {:?}, chain {:?}, beta {beta}, k {k}", m.value(), pair.a().support(), chain.elements);
                                let out = match fibers::fiber_shift(pair.a(), pair.b(), chain, &s.pset_b, beta, k) {
                                    Ok(o) => o,
                                    Err(e) => return Err(format!("{}: {e}", ctxs())),
                                };
                                ensure(out.t2_preserved(), || format!("{}: T2 changes", ctxs()))?;
                                let back_chain = FiberChain { direction: i, pset: chain.pset.clone(), elements: out.shifted_chain.clone() };
                                let back = lib(fibers::fiber_shift(&out.shifted_a, pair.b(), &back_chain, &s.pset_b, beta, pb - k))
                                    .map_err(|e| format!("{}: inverse: {e}", ctxs()))?;
                                ensure(&back.shifted_a == pair.a(), || format!("{}: inverse does not restore A", ctxs()))?;
                                shifts += 1;
                            }
                        }
                    }
                }
            }
        }
        instances += found as usize;
    }
    Ok(format!("{instances} pairs with cofibered structures, {shifts} shifts and inverses, tiling and T2 preserved"))
}

fn t1_t2(ctx: &Ctx) -> Outcome {
    let mut tiles = 0;
    let mut covered = 0;
    for pair in &ctx.pairs {
        let (na, nb) = (pair.a().total().unwrap() as u64, pair.b().total().unwrap() as u64);
        let common = arith::factorize(pair.modulus().value())
            .into_iter()
            .filter(|&(p, _)| na % p == 0 && nb % p == 0)
            .count();
        for s in [pair.a(), pair.b()] {
            ensure(lib(cyclotomic::t1_check(s))?, || format!("T1 fails for {:?} mod {}", s.support(), pair.modulus().value()))?;
            let t2 = lib(cyclotomic::t2_check(s))?;
            ensure(t2.holds, || format!("T2 fails for {:?} mod {}: {:?}", s.support(), pair.modulus().value(), t2.witness))?;
            tiles += 1;
        }
        covered += (common <= 2) as usize;
    }
    ensure(covered == ctx.pairs.len(), || format!("only {covered} of {} pairs have <= 2 shared primes", ctx.pairs.len()))?;
    Ok(format!("{tiles} tiles satisfy T1 and T2; all {covered} pairs have at most two primes dividing both sizes"))
}

fn conjectures(ctx: &Ctx) -> Outcome {
    let mut parts = Vec::new();
    for id in ["one-divisor", "line-bound", "slab-strong"] {
        let rep = lib(search::conjecture_harness(&ctx.pairs, id))?;
        ensure(rep.passed(), || {
            format!("{id}: {} violations, first {}", rep.violations, rep.witnesses.first().map(|w| w.to_string()).unwrap_or_default())
        })?;
        parts.push(format!("{id} {} checked / {} n.a.", rep.checked, rep.not_applicable));
    }
    Ok(format!("0 violations ({})", parts.join(", ")))
}

fn joints_and_exclusion(ctx: &Ctx) -> Outcome {
    let mut applicable = 0;
    for pair in &ctx.pairs {
        match saturation::missing_joint_scan(pair.a(), pair.b()) {
            Ok(j) => {
                ensure(j.is_empty(), || format!("M = {}, A = {:?}: {:?}", pair.modulus().value(), pair.a().support(), j[0]))?;
                applicable += 1;
            }
            Err(Error::NotApplicable(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
        ensure(pair.modulus().value() <= 144, || "corpus modulus above 144".into())?;
        let v = lib(saturation::enhanced_exclusion_scan(pair, 1))?;
        ensure(v.is_empty(), || format!("M = {}, A = {:?}: {:?}", pair.modulus().value(), pair.a().support(), v[0]))?;
    }
    Ok(format!("no missing joints in {applicable} applicable pairs; enhanced exclusion holds on all {} pairs", ctx.pairs.len()))
}

fn plane_bound(ctx: &Ctx) -> Outcome {
    for pair in &ctx.pairs {
        for s in [pair.a(), pair.b()] {
            let v = lib(tiling::plane_bound_scan(s))?;
            ensure(v.is_empty(), || format!("M = {}, {:?}: {:?}", pair.modulus().value(), s.support(), v[0]))?;
        }
    }
    Ok(format!("{} sets, every plane within the bound", 2 * ctx.pairs.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let corpus = search::build_corpus(&CorpusConfig::default()).expect("default corpus builds");
    let pairs = corpus.pairs().expect("corpus pairs verify");
    println!("corpus: {} pairs over {} moduli ({:.1?})", pairs.len(), corpus.entries.len(), start.elapsed());
    let ctx = Ctx { pairs };
    let criteria: [Criterion; 12] = [
        ("divisor-exclusion equivalence", divisor_exclusion),
        ("box-product characterization", box_products),
        ("box-product identity", identity),
        ("cuboid criterion", cuboid_criterion),
        ("worked example M = 18", worked_example),
        ("standard complements", standard_complements),
        ("Szabo construction", szabo),
        ("fiber shifting", fiber_shifts),
        ("T1/T2 on the corpus", t1_t2),
        ("conjecture harnesses", conjectures),
        ("missing joints and enhanced exclusion", joints_and_exclusion),
        ("plane bound", plane_bound),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&ctx))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", n + 1);
            }
        }
    }
    println!("{} of 12 criteria passed in {:.1?}", 12 - failed, start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
