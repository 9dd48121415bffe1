//! Subcommands. Each validates its arguments, calls into the library and
//! hands a [`Report`] to the emitter.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use psseq::block_stats::{normality_deviation, scan_blocks, Block};
use psseq::certified_eval::{torus_point, ExponentSpec, PrecisionPolicy, Residue};
use psseq::missing_blocks::{
    first_saturated, missing_block_search, saturation_sweep, BlockVariant, ForbiddenBlockSpec,
};
use psseq::multiplicative::{correlation, katai_pair_sum, liouville_sieve, mobius_sieve};
use psseq::sources::{PsSequence, ResidueSource, StoredSequence};
use psseq::spectral::{
    consecutive_exp_sum, discrepancy_1d_exact, discrepancy_md_brute, etks_bound, star_discrepancy_1d,
    unit, FrequencyVector, PointSet,
};
use psseq::subword_complexity::{parse_decimal, ps_complexity_experiment, three_gap_analysis, QuadraticNumber};

use crate::emit::{num, Report};
use crate::{Common, Failure, Format};

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Precondition(msg.into())
}

fn policy(common: &Common) -> Result<PrecisionPolicy, Failure> {
    Ok(PrecisionPolicy::new(96.min(common.max_bits), common.max_bits, 2)?)
}

fn exponent(c: &str) -> Result<ExponentSpec, Failure> {
    Ok(ExponentSpec::parse(c)?)
}

fn ps_source(c: &str, m: u64, common: &Common) -> Result<PsSequence, Failure> {
    Ok(PsSequence::new(exponent(c)?, m, policy(common)?)?)
}

/// A rational given as `a/b`, an integer, or a finite decimal.
fn rational(s: &str) -> Result<BigRational, Failure> {
    BigRational::from_str(s.trim())
        .ok()
        .or_else(|| parse_decimal(s.trim()).ok())
        .ok_or_else(|| bad(format!("cannot parse {s:?} as a rational")))
}

fn quadratic(s: &str) -> Result<QuadraticNumber, Failure> {
    Ok(s.parse::<QuadraticNumber>()?)
}

/// Residues separated by commas or whitespace; `#` lines are skipped.
fn read_residues(path: &Path) -> Result<Vec<Residue>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|ch: char| ch == ',' || ch.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Residue>().map_err(|_| bad(format!("{}: bad residue {t:?}", path.display()))))
        .collect()
}

/// One point per line, coordinates separated by commas or whitespace.
fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|l| {
            l.split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| bad(format!("{}: bad coordinate {t:?}", path.display()))))
                .collect()
        })
        .collect()
}

/// `u_1, …, u_N` from a file or from `⌊n^c⌋ mod m`.
fn sequence_source(
    from_file: &Option<PathBuf>,
    c: &str,
    m: u64,
    n: Option<u64>,
    common: &Common,
) -> Result<(Box<dyn ResidueSource>, usize), Failure> {
    match from_file {
        Some(path) => {
            let values = read_residues(path)?;
            let len = match n {
                Some(n) if n as usize > values.len() => {
                    return Err(bad(format!("N = {n} exceeds the {} residues in the file", values.len())))
                }
                Some(n) => n as usize,
                None => values.len(),
            };
            Ok((Box::new(StoredSequence::new(m, values)?), len))
        }
        None => {
            let n = n.ok_or_else(|| bad("--N is required unless --from-file is given"))?;
            let n = usize::try_from(n).map_err(|_| bad("N is too large"))?;
            Ok((Box::new(ps_source(c, m, common)?), n))
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 2)]
    m: u64,
    #[arg(long, default_value_t = 1)]
    start: u64,
    #[arg(long)]
    count: usize,
}

pub fn gen(a: &GenArgs, common: &Common) -> Result<(), Failure> {
    if common.plot_data {
        return Err(bad("gen has no plot data"));
    }
    let seq = if a.count == 0 {
        Vec::new()
    } else {
        ps_source(&a.c, a.m, common)?.residues(a.start, a.count)?
    };
    let mut text = match common.format {
        Format::Csv => seq.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
        Format::Json => serde_json::to_string_pretty(&json!({"command": "gen", "config": a, "residues": seq}))
            .map_err(anyhow::Error::from)?,
    };
    if !text.is_empty() {
        text.push('\n');
    }
    match &common.output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize)]
pub struct BlockfreqArgs {
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 2)]
    m: u64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Prefix length.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: Option<u64>,
    /// Read residues from a file (as written by `gen`) instead of computing them.
    #[arg(long)]
    from_file: Option<PathBuf>,
}

/// Blocks listed individually, absent ones included, up to this many.
const LIST_ALL_BLOCKS: u64 = 1 << 16;

pub fn blockfreq(a: &BlockfreqArgs, common: &Common) -> Result<(), Failure> {
    let (src, n) = sequence_source(&a.from_file, &a.c, a.m, a.n, common)?;
    let seq = src.residues(1, n)?;
    let h = scan_blocks(&seq, a.k, a.m)?;
    let dev = normality_deviation(&h)?;
    let space = h.block_space();
    let mut r = Report::new("blockfreq", a, &["k", "block", "count", "frequency", "deviation"]);
    r.note("total", h.total());
    r.note("distinct", h.distinct());
    r.note("block_space", space.to_string());
    r.note("max_deviation", num(dev));
    let expected = BigRational::new(BigInt::one(), BigInt::from(space.clone()));
    let total = BigInt::from(h.total());
    let mut push = |block: &Block, count: u64| {
        let f = BigRational::new(BigInt::from(count), total.clone());
        let d = (&f - &expected).abs();
        let label: Vec<String> = block.symbols().iter().map(u32::to_string).collect();
        r.row(vec![
            json!(a.k),
            json!(label.join("-")),
            json!(count),
            num(f.to_f64().unwrap_or(f64::NAN)),
            num(d.to_f64().unwrap_or(f64::NAN)),
        ]);
    };
    if space <= LIST_ALL_BLOCKS.into() {
        let mut block = vec![0 as Residue; a.k];
        loop {
            push(&Block(block.clone()), h.count(&block));
            // Next block in lexicographic order.
            let Some(i) = block.iter().rposition(|&s| u64::from(s) + 1 < a.m) else { break };
            block[i] += 1;
            block[i + 1..].fill(0);
        }
    } else {
        for (b, count) in h.iter() {
            push(b, count);
        }
    }
    r.write(common)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize)]
pub struct ComplexityArgs {
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 2)]
    m: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: Option<u64>,
    #[arg(long, default_value_t = 30)]
    k_max: usize,
    #[arg(long)]
    from_file: Option<PathBuf>,
}

pub fn complexity(a: &ComplexityArgs, common: &Common) -> Result<(), Failure> {
    let (src, n) = sequence_source(&a.from_file, &a.c, a.m, a.n, common)?;
    let e = ps_complexity_experiment(src.as_ref(), n, a.k_max)?;
    let mut r = Report::new("complexity", a, &["k", "L_k", "m^k", "ratio_k3", "ratio_kr"]);
    r.note("fit_range", e.fit_range);
    r.note("slope", e.slope.map(num));
    r.note("upper_exponent", e.upper_exponent.map(num));
    r.note("deficient_from", e.deficient_from);
    if let Some(w) = &e.warning {
        r.note("warning", w);
    }
    for (k, l, space, k3, kr) in e.rows() {
        r.row(vec![json!(k), json!(l), num(space), num(k3), kr.map_or(Value::Null, num)]);
    }
    r.plot(e.profile.entries.iter().map(|&(k, l)| ((k as f64).ln(), (l as f64).ln())).collect());
    r.write(common)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Variant {
    A,
    B,
}

#[derive(Args, Debug, Serialize)]
pub struct MissingArgs {
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 3)]
    m: u64,
    /// Prefix length scanned.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    /// Scan block saturation for k = 1..=k_max instead of searching for a block.
    #[arg(long)]
    saturation: bool,
    #[arg(long, default_value_t = 25)]
    k_max: usize,
    /// Prefix lengths for the saturation scan (default N/2 and N).
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = Variant::A)]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    d: u64,
    /// Stand-in for the factorial M!.
    #[arg(long, default_value_t = 2)]
    m_factorial: u64,
    /// Length of the constructed block.
    #[arg(long)]
    block_len: Option<usize>,
}

pub fn missing(a: &MissingArgs, common: &Common) -> Result<(), Failure> {
    let src = ps_source(&a.c, a.m, common)?;
    if a.saturation {
        let schedule = a.schedule.clone().unwrap_or_else(|| vec![a.n / 2, a.n]);
        let ks: Vec<usize> = (1..=a.k_max).collect();
        let reports = saturation_sweep(&src, &ks, &schedule)?;
        let mut r = Report::new("missing", a, &["k", "N", "count", "block_space", "saturated"]);
        r.note("first_saturated_k", first_saturated(&reports).map(|s| s.k));
        for s in &reports {
            for row in &s.rows {
                r.row(vec![json!(s.k), json!(row.n), json!(row.count), json!(s.block_space.to_string()), json!(s.saturated)]);
            }
        }
        return r.write(common);
    }
    let variant = match a.variant {
        Variant::A => BlockVariant::ThreeSymbol,
        Variant::B => BlockVariant::TwoSymbol,
    };
    let block_len = match (a.block_len, variant) {
        (Some(l), _) => l,
        (None, BlockVariant::ThreeSymbol) => (2 * a.m_factorial) as usize,
        (None, BlockVariant::TwoSymbol) => (4 * a.d * a.m_factorial) as usize,
    };
    let spec = ForbiddenBlockSpec::new(a.m, a.d, a.m_factorial, block_len, variant)?;
    let rep = missing_block_search(&spec, &src, a.n)?;
    let fields = ["variant", "m", "d", "M_factorial", "N_block", "scanned_N", "first_occurrence"];
    let v = serde_json::to_value(&rep).map_err(anyhow::Error::from)?;
    let mut r = Report::new("missing", a, &fields);
    r.row(fields.iter().map(|f| v[f].clone()).collect());
    r.write(common)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize)]
pub struct ExpsumArgs {
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 2)]
    m: u64,
    /// Frequencies h_0, …, h_{L-1} with L = ⌊c⌋ + 1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,-1")]
    h: Vec<i64>,
    /// Values of N; each sum runs over N ≤ n < 2N.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    #[serde(rename = "N")]
    n: Vec<u64>,
}

pub fn expsum(a: &ExpsumArgs, common: &Common) -> Result<(), Failure> {
    let c = exponent(&a.c)?;
    let p = policy(common)?;
    let h = FrequencyVector(a.h.clone());
    let label: Vec<String> = a.h.iter().map(i64::to_string).collect();
    let mut r = Report::new("expsum", a, &["N", "h", "real", "imag", "normalized", "decay_benchmark"]);
    let mut pts = Vec::new();
    for &n in &a.n {
        let s = consecutive_exp_sum(&c, a.m, &h, n, &p)?;
        r.row(vec![
            json!(n),
            json!(label.join("-")),
            num(s.sum.value.re),
            num(s.sum.value.im),
            num(s.sum.normalized),
            num(s.decay_benchmark),
        ]);
        pts.push(((n as f64).ln(), s.sum.normalized.ln()));
    }
    r.plot(pts);
    r.write(common)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize)]
pub struct DiscrepancyArgs {
    /// Points, one per line.
    #[arg(long)]
    from_file: Option<PathBuf>,
    /// Use this many uniformly random points.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of random points, or the number of consecutive terms per point.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Without a file or --random: the points ({n^c/m}, …) for n = 1..=N.
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 2)]
    m: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: Option<u64>,
    /// Frequency cutoff of the Erdős–Turán–Koksma bound.
    #[arg(long = "H", default_value_t = 8)]
    #[serde(rename = "H")]
    big_h: u32,
}

pub fn discrepancy(a: &DiscrepancyArgs, common: &Common) -> Result<(), Failure> {
    if a.dim == 0 {
        return Err(bad("dim must be at least 1"));
    }
    let points: Vec<Vec<f64>> = if let Some(path) = &a.from_file {
        read_points(path)?
    } else if let Some(count) = a.random {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        (0..count).map(|_| (0..a.dim).map(|_| rng.gen::<f64>()).collect()).collect()
    } else {
        let n = a.n.ok_or_else(|| bad("one of --from-file, --random or --N is required"))?;
        let (c, p) = (exponent(&a.c)?, policy(common)?);
        let xs = (1..n + a.dim as u64)
            .map(|i| Ok(torus_point(i, &c, a.m, &p)?.value()))
            .collect::<Result<Vec<f64>, Failure>>()?;
        xs.windows(a.dim).take(n as usize).map(<[f64]>::to_vec).collect()
    };
    let set = PointSet::from_points(&points)?;
    let (d, star) = if set.dim() == 1 {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        (discrepancy_1d_exact(&xs)?, Some(star_discrepancy_1d(&xs)?))
    } else {
        (discrepancy_md_brute(&set)?, None)
    };
    let etks = etks_bound(&set, a.big_h)?;
    let mut r = Report::new("discrepancy", a, &["N", "dim", "discrepancy", "star_discrepancy", "H", "etks_bound"]);
    r.row(vec![json!(set.len()), json!(set.dim()), num(d), star.map_or(Value::Null, num), json!(a.big_h), num(etks)]);
    r.write(common)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Function {
    Mobius,
    Liouville,
}

#[derive(Args, Debug, Serialize)]
pub struct MobiusArgs {
    #[arg(long, default_value = "1.5")]
    c: String,
    #[arg(long, default_value_t = 2)]
    m: u64,
    /// Checkpoints N, increasing.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    #[serde(rename = "N")]
    n: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Function::Mobius)]
    f: Function,
    /// G(b) = e(j b / m).
    #[arg(long, default_value_t = 1)]
    g_freq: i64,
    /// Distinct primes p,q: report the pair sums Σ e(α(⌊(pn)^c⌋ − ⌊(qn)^c⌋)) instead.
    #[arg(long, value_delimiter = ',')]
    pair: Option<Vec<u64>>,
    /// α for the pair sums, as a/b.
    #[arg(long, default_value = "1/2")]
    alpha: String,
}

pub fn mobius(a: &MobiusArgs, common: &Common) -> Result<(), Failure> {
    let c = exponent(&a.c)?;
    let p = policy(common)?;
    let mut pts = Vec::new();
    let mut r;
    if let Some(pq) = &a.pair {
        if pq.len() != 2 {
            return Err(bad("--pair takes two primes p,q"));
        }
        let alpha = rational(&a.alpha)?;
        r = Report::new("mobius", a, &["N", "real", "imag", "normalized"]);
        for &n in &a.n {
            let s = katai_pair_sum(pq[0], pq[1], &alpha, &c, n, &p)?;
            r.row(vec![json!(n), num(s.value.re), num(s.value.im), num(s.normalized)]);
            pts.push(((n as f64).ln(), s.normalized.ln()));
        }
    } else {
        let last = *a.n.last().expect("clap requires N");
        let table = match a.f {
            Function::Mobius => mobius_sieve(last)?,
            Function::Liouville => liouville_sieve(last)?,
        };
        // e(j b / m) with the phase reduced exactly mod m.
        let g: Vec<Complex64> = (0..a.m as i64)
            .map(|b| unit((a.g_freq * b).rem_euclid(a.m as i64) as f64 / a.m as f64))
            .collect();
        let series = correlation(&table, &g, &c, a.m, &a.n, &p)?;
        r = Report::new("mobius", a, &["N", "re", "im", "abs", "mean_f"]);
        for pt in &series.checkpoints {
            r.row(vec![json!(pt.n), num(pt.correlation.re), num(pt.correlation.im), num(pt.abs), num(pt.mean_f.re)]);
            pts.push(((pt.n as f64).ln(), pt.abs.ln()));
        }
    }
    r.plot(pts);
    r.write(common)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug, Serialize)]
pub struct GapsArgs {
    /// An irrational p + q·sqrt(d), e.g. "(sqrt(5)-1)/2". Omit for a random sweep.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, default_value = "0")]
    beta: String,
    /// Interval length ε, as a decimal or a/b.
    #[arg(long, default_value = "0.1")]
    eps: String,
    #[arg(long = "N", default_value_t = 10_000)]
    #[serde(rename = "N")]
    n: u64,
    /// Number of random (α, β, ε, N) trials when --alpha is omitted.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn gaps(a: &GapsArgs, common: &Common) -> Result<(), Failure> {
    if let Some(alpha) = &a.alpha {
        let g = three_gap_analysis(&quadratic(alpha)?, &quadratic(&a.beta)?, &rational(&a.eps)?, a.n)?;
        let mut r = Report::new("gaps", a, &["gap", "multiplicity"]);
        r.note("hits", g.hits);
        r.note("first_hit", g.first_hit);
        r.note("three_gap_holds", g.three_gap_holds());
        for (gap, mult) in g.distinct_gaps.iter().zip(&g.multiplicities) {
            r.row(vec![json!(gap), json!(mult)]);
        }
        return r.write(common);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut r = Report::new("gaps", a, &["trial", "alpha", "beta", "eps", "N", "gaps", "holds"]);
    let mut failures = 0;
    for trial in 0..a.trials {
        let d = [2u64, 3, 5, 6, 7, 10, 11, 13][rng.gen_range(0..8)];
        let q = BigRational::new(rng.gen_range(1..20).into(), rng.gen_range(1..20).into());
        let alpha = QuadraticNumber::new(BigRational::from_integer(0.into()), q, d);
        let beta = QuadraticNumber::rational(BigRational::new(rng.gen_range(0..1000).into(), 1000.into()));
        let eps = BigRational::new(rng.gen_range(10..990).into(), 1000.into());
        let n = rng.gen_range(1000..=a.n.max(1000));
        let g = three_gap_analysis(&alpha, &beta, &eps, n)?;
        let label: Vec<String> = g.distinct_gaps.iter().map(u64::to_string).collect();
        failures += usize::from(!g.three_gap_holds());
        r.row(vec![
            json!(trial),
            json!(alpha.to_string()),
            json!(beta.to_string()),
            json!(eps.to_string()),
            json!(n),
            json!(label.join("-")),
            json!(g.three_gap_holds()),
        ]);
    }
    r.note("violations", failures);
    r.write(common)
}
