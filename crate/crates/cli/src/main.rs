use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use tilekit::boxes::{self, nbox_reduced};
use tilekit::cuboids::{self, CuboidType};
use tilekit::reductions::{self, Strategy};
use tilekit::search::{self, Corpus, CorpusConfig, PairRecord};
use tilekit::tiling::{self, TilingPair};
use tilekit::{cyclotomic, fibers, saturation, Error, Multiset};

#[derive(Parser, Debug)]
#[command(name = "tilekit", version, about = "Exact tools for tilings A ⊕ B = Z_M")]
struct Cli {
    /// Emit the report as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for search and corpus scans.
    #[arg(long, global = true, env = "TILEKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check whether A ⊕ B = Z_M with all three criteria.
    Verify {
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["a", "b"])]
        pair: Option<PathBuf>,
    },
    /// Cyclotomic profile, T1/T2 and Div(A) of a set.
    Analyze {
        #[arg(long)]
        set: PathBuf,
    },
    /// Standard tiling complement and the replacement conditions.
    Standard {
        #[arg(long, required_unless_present = "pair")]
        set: Option<PathBuf>,
        #[arg(long, conflicts_with = "set")]
        pair: Option<PathBuf>,
    },
    /// Table of box products <A^N[x], B^N[y]> over Z_N x Z_N.
    Boxes {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        scale: u64,
    },
    /// Saturating set A_x with its divisors and the Bispan bound.
    Saturate {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        x: u64,
    },
    /// Cuboid nullity: classic:N, lifted:N or preset:<name>.
    Cuboid {
        #[arg(long)]
        set: PathBuf,
        #[arg(long = "type")]
        ty: String,
        /// Direction for presets.
        #[arg(long, default_value_t = 0)]
        dir: usize,
    },
    /// Fiber structure of a tiling in one direction.
    Fibers {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        dir: usize,
        /// Depth of the cofibered structures; defaults to n_i.
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Shift one fiber chain of A by k M / p_i^beta.
    Shift {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        dir: usize,
        #[arg(long)]
        beta: u32,
        #[arg(long, default_value_t = 1)]
        k: u64,
        /// Which cofiber to move, in enumeration order.
        #[arg(long, default_value_t = 0)]
        chain: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The three-prime fiber-shift construction.
    Szabo {
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        primes: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduction trace towards T2.
    Reduce {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value = "auto")]
        strategy: String,
    },
    /// Complements of a set in Z_M, or a bounded tiling search in Z.
    Search {
        #[arg(long, required_unless_present = "integers")]
        set: Option<PathBuf>,
        /// A finite set of nonnegative integers, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "set")]
        integers: Option<Vec<u64>>,
        /// Largest period tried for --integers.
        #[arg(long, default_value_t = 240)]
        bound: u64,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Build the tiling corpus as line-delimited JSON.
    Corpus {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        moduli: Option<Vec<u64>>,
        #[arg(long)]
        stretch: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        exhaustive_limit: Option<u64>,
    },
    /// Run a conjecture harness over a corpus.
    Conjecture {
        #[arg(long)]
        id: String,
        /// Corpus file; the default corpus is built when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

/// What every verb returns. Text and JSON output are both rendered from it.
#[derive(Serialize)]
struct Report {
    command: Vec<String>,
    ok: bool,
    elapsed_ms: f64,
    exit_code: u8,
    result: Value,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<(bool, Value), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn read_set(path: &Path) -> std::result::Result<Multiset, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Multiset::from_json_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_record(path: &Path) -> std::result::Result<PairRecord, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_pair(path: &Path) -> std::result::Result<TilingPair, Failure> {
    Ok(read_record(path)?.to_pair()?)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> std::result::Result<(), Failure> {
    let mut text = serde_json::to_string(v).expect("plain data serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn modulus_echo(m: u64) -> Value {
    let factored: Vec<Value> = tilekit::arith::factorize(m).into_iter().map(|(p, e)| json!([p, e])).collect();
    json!({ "value": m, "factored": factored })
}

fn verify(a: Option<PathBuf>, b: Option<PathBuf>, pair: Option<PathBuf>) -> Outcome {
    let (a, b) = match (a, b, pair) {
        (_, _, Some(p)) => {
            let r = read_record(&p)?;
            let m = tilekit::Modulus::new(r.modulus)?;
            (Multiset::from_set(&m, &r.a)?, Multiset::from_set(&m, &r.b)?)
        }
        (Some(a), Some(b), None) => (read_set(&a)?, read_set(&b)?),
        _ => return Err(usage("verify needs --a and --b, or --pair")),
    };
    if a.modulus() != b.modulus() {
        return Err(usage(format!(
            "modulus mismatch: A lives in Z_{} and B in Z_{}",
            a.modulus().value(),
            b.modulus().value()
        )));
    }
    let report = tiling::verify(&a, &b)?;
    let mut out = json!({
        "modulus": modulus_echo(a.modulus().value()),
        "report": to_value(&report),
        "raw": { "a": a.support(), "b": b.support() },
    });
    if report.tiles() {
        let pair = TilingPair::new(&a, &b)?;
        out["normalized"] = json!({ "a": pair.a().support(), "b": pair.b().support(), "shifts": pair.shifts() });
    }
    Ok((report.tiles(), out))
}

fn analyze(set: &Path) -> Outcome {
    let a = read_set(set)?;
    let prof = cyclotomic::profile(&a)?;
    let mut out = json!({
        "modulus": modulus_echo(a.modulus().value()),
        "set": to_value(&a.to_json()),
        "profile": to_value(&prof),
        "t1": cyclotomic::t1_check(&a)?,
        "t2": to_value(&cyclotomic::t2_check(&a)?),
    });
    if a.is_set() {
        out["div"] = json!(tiling::div(&a)?.values());
    }
    Ok((true, out))
}

fn standard(set: Option<PathBuf>, pair: Option<PathBuf>) -> Outcome {
    let (a, pair) = match (set, pair) {
        (_, Some(p)) => {
            let pair = read_pair(&p)?;
            (pair.a().clone(), Some(pair))
        }
        (Some(s), None) => (read_set(&s)?, None),
        _ => return Err(usage("standard needs --set or --pair")),
    };
    let exps = tiling::standard_exponents(&a)?;
    let flat = tiling::standard_complement(&a)?;
    let mut out = json!({
        "modulus": modulus_echo(a.modulus().value()),
        "exponents": exps,
        "standard": flat.support(),
        "standard_divisors": tiling::standard_divisors(a.modulus(), &exps),
        "t2": cyclotomic::t2_check(&flat)?.holds,
    });
    let mut ok = true;
    if let Some(pair) = pair {
        let rep = tiling::replacement_check(&pair)?;
        ok = rep.agree();
        out["replacement"] = to_value(&rep);
        out["agree"] = json!(ok);
    }
    Ok((ok, out))
}

fn box_table(pair_path: &Path, n: u64) -> Outcome {
    let pair = read_pair(pair_path)?;
    let m = pair.modulus().value();
    if n == 0 || m % n != 0 {
        return Err(usage(format!("scale {n} does not divide {m}")));
    }
    let an = pair.a().reduce_mod(n)?;
    let bn = pair.b().reduce_mod(n)?;
    let ba: Vec<_> = (0..n).map(|x| nbox_reduced(&an, x)).collect();
    let bb: Vec<_> = (0..n).map(|y| nbox_reduced(&bn, y)).collect();
    let mut table = Vec::with_capacity(n as usize);
    for x in &ba {
        let row: std::result::Result<Vec<String>, Error> =
            bb.iter().map(|y| boxes::box_product(x, y).map(|v| v.to_string())).collect();
        table.push(row?);
    }
    let rep = boxes::ortho_scan(&pair, n, None)?;
    let ok = rep.failures.is_empty();
    Ok((ok, json!({ "scale": n, "expected": rep.expected, "table": table, "failures": to_value(&rep.failures) })))
}

fn saturate(pair_path: &Path, x: u64) -> Outcome {
    let pair = read_pair(pair_path)?;
    let sat = saturation::saturating_set(&pair, x)?;
    let m = pair.modulus();
    let others: Vec<u64> = pair.a().support().into_iter().filter(|&a| a != x).collect();
    let bispans: Vec<Value> = others
        .iter()
        .map(|&w| {
            let inside = sat.union.iter().all(|&z| saturation::bispan_contains(m, x, w, z));
            json!({ "x_prime": w, "a_x_in_bispan": inside })
        })
        .collect();
    let bound = saturation::bispan_bound_check(&pair, x)?;
    Ok((bound, json!({
        "a": pair.a().support(),
        "b": pair.b().support(),
        "saturating": to_value(&sat),
        "bispan": bispans,
        "bispan_bound": bound,
    })))
}

fn cuboid(set: &Path, ty: &str, dir: usize) -> Outcome {
    let a = read_set(set)?;
    let m = a.modulus().clone();
    let parse_scale = |s: &str| s.parse::<u64>().map_err(|_| usage(format!("bad scale {s:?}")));
    if let Some(name) = ty.strip_prefix("preset:") {
        let preset = cuboids::multiscale_preset(&m, name, dir)?;
        let rep = cuboids::is_null(&a, &preset.ty)?;
        let holds = cuboids::preset_relation_holds(&a, &preset)?;
        return Ok((holds, json!({ "preset": to_value(&preset), "null": to_value(&rep), "relation_holds": holds })));
    }
    let (kind, n) = ty
        .split_once(':')
        .ok_or_else(|| usage(format!("type must be classic:N, lifted:N or preset:<name>, got {ty:?}")))?;
    let n = parse_scale(n)?;
    let t: CuboidType = match kind {
        "classic" => cuboids::classic_type(&m, n)?,
        "lifted" => cuboids::lifted_type(&m, n)?,
        _ => return Err(usage(format!("unknown cuboid type {kind:?}"))),
    };
    let rep = cuboids::is_null(&a, &t)?;
    let divides = cyclotomic::divides(&a, n)?;
    let agree = rep.null == divides;
    Ok((agree, json!({ "type": to_value(&t), "null": to_value(&rep), "phi_divides": divides, "agree": agree })))
}

fn fiber_info(pair_path: &Path, dir: usize, depth: Option<u32>) -> Outcome {
    let pair = read_pair(pair_path)?;
    let m = pair.modulus();
    m.check_direction(dir)?;
    let depth = depth.unwrap_or(m.exponent(dir));
    let mv = m.value();
    let structures = fibers::cofibered_structures(&pair, dir, depth, 64)?;
    Ok((true, json!({
        "direction": dir,
        "prime": m.prime(dir),
        "a_fibered": fibers::is_fibered(pair.a(), dir, mv)?,
        "b_fibered": fibers::is_fibered(pair.b(), dir, mv)?,
        "a_decomposition": to_value(&fibers::detect_fibered(pair.a(), dir, mv)?),
        "b_decomposition": to_value(&fibers::detect_fibered(pair.b(), dir, mv)?),
        "cofibered": to_value(&structures),
    })))
}

fn shift(pair_path: &Path, dir: usize, beta: u32, k: u64, chain: usize, out: Option<PathBuf>) -> Outcome {
    let pair = read_pair(pair_path)?;
    let m = pair.modulus();
    m.check_direction(dir)?;
    let mut found = None;
    for depth in beta.max(1)..=m.exponent(dir) {
        for s in fibers::cofibered_structures(&pair, dir, depth, chain + 1)? {
            if s.pset_b.contains(&beta) && s.cofibers.len() > chain {
                found = Some(s);
                break;
            }
        }
        if found.is_some() {
            break;
        }
    }
    let s = found.ok_or_else(|| {
        Failure::Lib(Error::NotApplicable(format!("no cofibered structure with {beta} in P_B in direction {dir}")))
    })?;
    let f = &s.cofibers[chain];
    let outcome = match fibers::fiber_shift(pair.a(), pair.b(), f, &s.pset_b, beta, k) {
        Ok(o) => o,
        Err(Error::NotATiling(rep)) => {
            return Ok((false, json!({ "structure": to_value(&s), "chain": to_value(f), "verify": to_value(&*rep) })))
        }
        Err(e) => return Err(e.into()),
    };
    let record = PairRecord::from_pair(&outcome.pair);
    if let Some(path) = out {
        write_json(&path, &record)?;
    }
    let ok = outcome.t2_preserved();
    Ok((ok, json!({
        "structure": to_value(&s),
        "chain": to_value(f),
        "shifted": to_value(&outcome),
        "a_shifted": outcome.shifted_a.support(),
        "pair": to_value(&record),
    })))
}

fn szabo(primes: &[u64], out: Option<PathBuf>) -> Outcome {
    let (pair, rep) = fibers::szabo_construct(primes)?;
    let record = PairRecord::from_pair(&pair);
    if let Some(path) = out {
        write_json(&path, &record)?;
    }
    let ok = rep.t2_a && rep.t2_b && rep.a_in_subgroup.is_empty() && rep.b_in_subgroup.is_empty();
    Ok((ok, json!({ "report": to_value(&rep), "pair": to_value(&record) })))
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, Failure> {
    let bad = || usage(format!("strategy must be auto, subgroup:i or slab:i, got {s:?}"));
    if s == "auto" {
        return Ok(Strategy::Auto);
    }
    let (kind, i) = s.split_once(':').ok_or_else(bad)?;
    let i: usize = i.parse().map_err(|_| bad())?;
    match kind {
        "subgroup" => Ok(Strategy::Subgroup(i)),
        "slab" => Ok(Strategy::Slab(i)),
        _ => Err(bad()),
    }
}

fn reduce(pair_path: &Path, strategy: &str) -> Outcome {
    let strategy = parse_strategy(strategy)?;
    let pair = read_pair(pair_path)?;
    let rep = reductions::t2_induction_driver(&pair, strategy, reductions::DRIVER_NODE_CAP)?;
    Ok((rep.consistent, to_value(&rep)))
}

fn search_verb(set: Option<PathBuf>, integers: Option<Vec<u64>>, bound: u64, limit: Option<usize>, budget: u64) -> Outcome {
    if let Some(ints) = integers {
        let verdict = search::tiles_z_bounded(&ints, bound, budget)?;
        let ok = !matches!(verdict, search::TilesVerdict::NotATile | search::TilesVerdict::NotTilesWithinBound { .. });
        return Ok((ok, json!({ "integers": ints, "verdict": to_value(&verdict) })));
    }
    let a = read_set(&set.ok_or_else(|| usage("search needs --set or --integers"))?)?;
    let found = match limit {
        Some(_) => search::complements(&a, budget, limit, false)?,
        None => search::enumerate_complements(&a, budget)?,
    };
    Ok((!found.is_empty(), json!({
        "modulus": modulus_echo(a.modulus().value()),
        "a": a.support(),
        "count": found.len(),
        "complements": found,
    })))
}

fn corpus_verb(
    out: Option<PathBuf>,
    moduli: Option<Vec<u64>>,
    stretch: bool,
    seed: Option<u64>,
    limit: Option<u64>,
) -> Outcome {
    let mut cfg = CorpusConfig::default();
    if let Some(ms) = moduli {
        cfg.moduli = ms;
    }
    if stretch {
        cfg = cfg.with_stretch();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(l) = limit {
        cfg.exhaustive_limit = l;
    }
    let corpus = search::build_corpus(&cfg)?;
    if let Some(path) = &out {
        let f = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(f);
        corpus.write_jsonl(&mut w)?;
        w.flush().map_err(Error::from)?;
    }
    let summary: Vec<Value> = corpus
        .entries
        .iter()
        .map(|e| json!({ "modulus": e.modulus, "origin": to_value(&e.origin), "pairs": e.pairs.len() }))
        .collect();
    Ok((true, json!({ "total": corpus.len(), "moduli": summary, "out": out })))
}

fn conjecture(id: &str, corpus: Option<PathBuf>) -> Outcome {
    if !search::CONJECTURE_IDS.contains(&id) {
        return Err(usage(format!("unknown conjecture {id:?}; known: {}", search::CONJECTURE_IDS.join(", "))));
    }
    let corpus = match corpus {
        Some(path) => {
            let f = File::open(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Corpus::read_jsonl(BufReader::new(f)).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => search::build_corpus(&CorpusConfig::default())?,
    };
    let pairs = corpus.pairs()?;
    let rep = search::conjecture_harness(&pairs, id)?;
    Ok((rep.passed(), to_value(&rep)))
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Verify { a, b, pair } => verify(a, b, pair),
        Command::Analyze { set } => analyze(&set),
        Command::Standard { set, pair } => standard(set, pair),
        Command::Boxes { pair, scale } => box_table(&pair, scale),
        Command::Saturate { pair, x } => saturate(&pair, x),
        Command::Cuboid { set, ty, dir } => cuboid(&set, &ty, dir),
        Command::Fibers { pair, dir, depth } => fiber_info(&pair, dir, depth),
        Command::Shift { pair, dir, beta, k, chain, out } => shift(&pair, dir, beta, k, chain, out),
        Command::Szabo { primes, out } => szabo(&primes, out),
        Command::Reduce { pair, strategy } => reduce(&pair, &strategy),
        Command::Search { set, integers, bound, limit, budget } => search_verb(set, integers, bound, limit, budget),
        Command::Corpus { out, moduli, stretch, seed, exhaustive_limit } => {
            corpus_verb(out, moduli, stretch, seed, exhaustive_limit)
        }
        Command::Conjecture { id, corpus } => conjecture(&id, corpus),
    }
}

fn render_text(r: &Report) -> String {
    let mut s = format!("{} ({:.1} ms)\n", if r.ok { "ok" } else { "VIOLATION" }, r.elapsed_ms);
    match &r.result {
        Value::Object(map) => {
            for (k, v) in map {
                s.push_str(&format!("{k}: {v}\n"));
            }
        }
        v => s.push_str(&format!("{v}\n")),
    }
    s
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("tilekit: {e}");
            return ExitCode::from(2);
        }
    }
    let json_out = cli.json;
    let start = Instant::now();
    let (ok, result) = match run(cli.command) {
        Ok(r) => r,
        Err(f) => {
            let msg = match f {
                Failure::Usage(m) => m,
                Failure::Lib(e) => e.to_string(),
            };
            if json_out {
                println!("{}", json!({ "command": argv[1..], "error": msg, "exit_code": 2 }));
            }
            eprintln!("tilekit: {msg}");
            return ExitCode::from(2);
        }
    };
    let exit_code = if ok { 0 } else { 1 };
    let report = Report {
        command: argv[1..].to_vec(),
        ok,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        exit_code,
        result,
    };
    if json_out {
        println!("{}", serde_json::to_string(&report).expect("plain data serializes"));
    } else {
        print!("{}", render_text(&report));
    }
    ExitCode::from(exit_code)
}
