//! Command-line front end: `bench`, `verify` and `attack`.
//!
//! Exit codes: 0 when everything passed, 1 when a property or protocol
//! check failed, 2 for usage errors.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::attack::{run_attack, AttackConfig, AttackResult, Strategy, Target};
use crate::dealer::{plan_matmul_trunc, Dealer, Request};
use crate::error::{Error, Result};
use crate::metrics::{
    emit_report, formula_trunc_tag, CostReport, CostRow, Format, Mode, Protocol,
};
use crate::protocol::{Scheduler, Session, SessionConfig};
use crate::ring::{RElem, RingParams};
use crate::shapes::{builtin_model_with, training_expansion, ModelSpec};
use crate::sharing::AuthMatrixShare;
use crate::transport::AdversarySpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Largest T1*T2*T3 that `bench --mode instrumented` will execute.
pub const MAX_INSTRUMENTED_CUBE: u64 = 1 << 22;

#[derive(Parser, Debug)]
#[command(name = "compacttag", version, about = "Authenticated MPC matrix products with compact MAC tags")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cost report (multiplication counts, broadcast traffic) for a model or shapes.
    Bench(BenchArgs),
    /// Run the correctness properties and report PASS/FAIL per property.
    Verify(VerifyArgs),
    /// Forgery trials against the tag checks, compared with the soundness bound.
    Attack(AttackArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RingArgs {
    /// Plaintext ring bits.
    #[arg(long)]
    pub k: Option<u32>,
    /// Security parameter (MAC key bits).
    #[arg(long)]
    pub s: Option<u32>,
    /// Fixed-point fractional bits (must not exceed s).
    #[arg(long)]
    pub f: Option<u32>,
}

impl RingArgs {
    fn resolve(&self, default: RingParams) -> Result<RingParams> {
        RingParams::new(self.k.unwrap_or(default.k), self.s.unwrap_or(default.s), self.f.unwrap_or(default.f))
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Baseline,
    Compacttag,
    Both,
}

impl ProtocolArg {
    fn list(self) -> Vec<Protocol> {
        match self {
            ProtocolArg::Baseline => vec![Protocol::Baseline],
            ProtocolArg::Compacttag => vec![Protocol::CompactTag],
            ProtocolArg::Both => vec![Protocol::Baseline, Protocol::CompactTag],
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Formula,
    Instrumented,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    /// Number of parties.
    #[arg(long, default_value_t = 2)]
    pub parties: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub protocol: ProtocolArg,
    /// Built-in model: vgg16, resnet50 or transformer.
    #[arg(long, conflicts_with = "model_file")]
    pub model: Option<String>,
    /// Model description file (JSON layer list).
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Explicit product shape T1xT2xT3; may be repeated.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Vec<(usize, usize, usize)>,
    /// Append backward-pass products.
    #[arg(long)]
    pub training: bool,
    /// Transformer sequence length.
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long, value_enum, default_value = "formula")]
    pub mode: ModeArg,
    /// Instrumented runs per shape; wall time is averaged.
    #[arg(long, default_value_t = 1)]
    pub iterations: u32,
    /// Report wall time as 0 so reports are byte-identical across runs.
    #[arg(long)]
    pub no_timing: bool,
    /// Run parties on scoped threads.
    #[arg(long)]
    pub threaded: bool,
    /// Adversary description (JSON) applied in instrumented runs.
    #[arg(long)]
    pub adversary: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    /// Number of parties; both 2 and 3 when omitted.
    #[arg(long)]
    pub parties: Option<usize>,
    /// Seeded trials of the correctness property.
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Product shape for the correctness trials.
    #[arg(long, value_parser = parse_shape, default_value = "8x8x8")]
    pub shape: (usize, usize, usize),
    /// Flip one MAC bit of an input before running (the run must then fail).
    #[arg(long)]
    pub inject_fault: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    #[arg(long, default_value_t = 2)]
    pub parties: usize,
    /// compact-d, batchrec or fixed-y.
    #[arg(long, default_value = "compact-d")]
    pub target: String,
    /// random-e, all-y-zero, single-entry, top-bit, zero, or all.
    #[arg(long, default_value = "random-e")]
    pub strategy: String,
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    #[arg(long, value_parser = parse_shape, default_value = "4x4x4")]
    pub shape: (usize, usize, usize),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_shape(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.len() != 3 {
        return Err(format!("expected T1xT2xT3, got `{s}`"));
    }
    let mut d = [0usize; 3];
    for (slot, p) in d.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|_| format!("bad dimension `{p}` in `{s}`"))?;
        if *slot == 0 {
            return Err(format!("zero dimension in `{s}`"));
        }
    }
    Ok((d[0], d[1], d[2]))
}

/// Magnitude bits for random test inputs: below 2^(k-2-2f), and small
/// enough that a length-t2 dot product stays inside k signed bits.
pub fn input_bits(p: &RingParams, t2: usize) -> u32 {
    let log_t2 = usize::BITS - (t2.max(1) - 1).leading_zeros();
    let cap = (p.k.saturating_sub(1 + log_t2)) / 2;
    let bound = p.k.saturating_sub(2 + 2 * p.f);
    bound.min(cap).max(1)
}

/// Random signed entries with |v| < 2^bits.
pub fn random_entries(rng: &mut ChaCha20Rng, n: usize, bits: u32) -> Vec<i128> {
    let b = 1i128 << bits;
    (0..n).map(|_| rng.gen_range(-b + 1..b)).collect()
}

/// Options for [`run_pipeline`].
#[derive(Clone, Debug, Default)]
pub struct PipelineOptions {
    pub adversary: AdversarySpec,
    pub threaded: bool,
    /// Flip the lowest MAC bit of party 1's first input entry.
    pub inject_fault: bool,
}

/// One executed multiply-then-truncate.
pub struct PipelineRun {
    pub x: Vec<i128>,
    pub y: Vec<i128>,
    pub x_shares: Vec<AuthMatrixShare>,
    pub out: Vec<AuthMatrixShare>,
    pub session: Session,
    pub dealer: Dealer,
    pub wall_ms: f64,
}

/// Provisions material and inputs from `seed`, runs the chosen pipeline and
/// flushes the deferred checks. The same seed gives both protocols the same
/// material and inputs.
pub fn run_pipeline(
    params: RingParams,
    parties: usize,
    protocol: Protocol,
    (t1, t2, t3): (usize, usize, usize),
    seed: u64,
    opts: &PipelineOptions,
) -> Result<PipelineRun> {
    let mut dealer = Dealer::from_seed_u64(params, parties, seed)?;
    let material = dealer.provision(&plan_matmul_trunc(t1, t2, t3))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let bits = input_bits(&params, t2);
    let x = random_entries(&mut rng, t1 * t2, bits);
    let y = random_entries(&mut rng, t2 * t3, bits);
    let mut xs = dealer.share_signed(t1, t2, &x)?;
    let ys = dealer.share_signed(t2, t3, &y)?;
    if opts.inject_fault {
        let m = xs[0].macs.get(0, 0);
        let flipped = m + RElem::one(m.width());
        xs[0].macs.set(0, 0, flipped);
    }
    let config = SessionConfig {
        scheduler: if opts.threaded { Scheduler::Threaded } else { Scheduler::Lockstep },
        adversary: opts.adversary.clone(),
        seed,
        ..Default::default()
    };
    let mut session = Session::new(material, config)?;
    let start = Instant::now();
    let out = session.matmul_trunc(&xs, &ys, protocol)?;
    session.flush()?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(PipelineRun { x, y, x_shares: xs, out, session, dealer, wall_ms })
}

/// Broadcast steps that belong to the operation itself (not to checks,
/// coin tossing or output opening).
pub fn op_scope(label: &str) -> bool {
    ["matmul.", "truncate.", "compact.", "optmac.", "optmac_trunc."].iter().any(|p| label.starts_with(p))
}

/// Cost row measured from an executed run (party 1's counters and traffic).
pub fn instrumented_row(label: &str, protocol: Protocol, shape: (usize, usize, usize), run: &PipelineRun) -> CostRow {
    let (t1, t2, t3) = shape;
    let c = run.session.counter(0);
    let (tag, trunc, value) = match protocol {
        Protocol::Baseline => {
            let m = c.get("matmul");
            let t = c.get("truncate");
            (m.tag, t.tag, m.value + t.value)
        }
        Protocol::CompactTag => {
            let m = c.get("compact");
            (m.tag, 0, m.value)
        }
    };
    let traffic = run.session.comm_log().party_total(1, op_scope);
    let mut row = CostRow::formula(label, run.session.params(), protocol, t1 as u64, t2 as u64, t3 as u64);
    row.mode = Mode::Instrumented;
    row.tag_mults = tag;
    row.trunc_tag_mults = trunc;
    row.value_mults = value;
    row.broadcast_elements = traffic.elements;
    row.broadcast_bytes = traffic.bytes;
    row.wall_ms = run.wall_ms;
    row.fill_derived();
    row
}

fn workloads(args: &BenchArgs) -> Result<Vec<(String, (usize, usize, usize), usize)>> {
    let model: Option<ModelSpec> = match (&args.model, &args.model_file) {
        (Some(name), _) => Some(builtin_model_with(name, args.seq_len)?),
        (None, Some(path)) => Some(ModelSpec::from_file(path)?),
        (None, None) => None,
    };
    let mut out = Vec::new();
    if let Some(m) = model {
        let m = if args.training { training_expansion(&m) } else { m };
        for l in &m.layers {
            out.push((format!("{}/{}", m.name, l.name), l.dims(), l.batch));
        }
    }
    for &(a, b, c) in &args.shape {
        out.push((format!("{a}x{b}x{c}"), (a, b, c), 1));
    }
    if out.is_empty() {
        return Err(Error::InvalidParams("give --model, --model-file or at least one --shape".into()));
    }
    Ok(out)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<CostReport> {
    let params = args.ring.resolve(RingParams::k64())?;
    if args.parties < 2 {
        return Err(Error::TooFewParties(args.parties));
    }
    let work = workloads(args)?;
    let adversary = match &args.adversary {
        Some(p) if args.mode == ModeArg::Instrumented => AdversarySpec::from_file(p)?,
        Some(_) => return Err(Error::InvalidParams("--adversary needs --mode instrumented".into())),
        None => AdversarySpec::honest(),
    };
    adversary.validate(args.parties)?;
    let note = match args.mode {
        ModeArg::Formula => "formula mode: closed-form counts per party, nothing executed",
        ModeArg::Instrumented => "instrumented mode: counters and traffic of party 1 from an executed run",
    };
    let mut report = CostReport { params: Some(params), parties: args.parties, note: note.into(), ..Default::default() };
    let start = Instant::now();
    for protocol in args.protocol.list() {
        for (label, (t1, t2, t3), batch) in &work {
            let row = match args.mode {
                ModeArg::Formula => CostRow::formula(label, &params, protocol, *t1 as u64, *t2 as u64, *t3 as u64),
                ModeArg::Instrumented => {
                    let cube = (*t1 as u64) * (*t2 as u64) * (*t3 as u64);
                    if cube > MAX_INSTRUMENTED_CUBE {
                        return Err(Error::InvalidParams(format!(
                            "{label} has T1*T2*T3 = {cube}, above the instrumented limit {MAX_INSTRUMENTED_CUBE}; use --mode formula"
                        )));
                    }
                    let opts = PipelineOptions { adversary: adversary.clone(), threaded: args.threaded, inject_fault: false };
                    let mut total_ms = 0.0;
                    let mut row = None;
                    for it in 0..args.iterations.max(1) {
                        let run = run_pipeline(params, args.parties, protocol, (*t1, *t2, *t3), args.seed + it as u64, &opts)?;
                        total_ms += run.wall_ms;
                        row.get_or_insert_with(|| instrumented_row(label, protocol, (*t1, *t2, *t3), &run));
                    }
                    let mut row = row.expect("at least one iteration");
                    row.wall_ms = total_ms / args.iterations.max(1) as f64;
                    row
                }
            };
            let mut row = row.with_batch(*batch as u64);
            if args.no_timing {
                row.wall_ms = 0.0;
            }
            report.rows.push(row);
        }
        if work.len() > 1 {
            if let Some(mut agg) = report.aggregate("total", protocol) {
                if args.no_timing {
                    agg.wall_ms = 0.0;
                }
                report.rows.push(agg);
            }
        }
    }
    report.wall_ms = if args.no_timing { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
    Ok(report)
}

/// Outcome of one verified property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl PropertyResult {
    fn new(name: &str, r: std::result::Result<String, String>) -> Self {
        match r {
            Ok(detail) => PropertyResult { name: name.into(), pass: true, detail },
            Err(detail) => PropertyResult { name: name.into(), pass: false, detail },
        }
    }
}

#[cfg(feature = "oracle")]
mod checks {
    use super::*;
    use crate::metrics::{formula_baseline_tag, formula_compact_tag};
    use crate::oracle::{check_mac_invariant, reconstruct_all, reconstruct_raw};

    pub fn plain_matmul(x: &[i128], y: &[i128], (t1, t2, t3): (usize, usize, usize)) -> Vec<i128> {
        let mut out = vec![0i128; t1 * t3];
        for i in 0..t1 {
            for j in 0..t3 {
                out[i * t3 + j] = (0..t2).map(|t| x[i * t2 + t] * y[t * t3 + j]).sum();
            }
        }
        out
    }

    /// Compact output within 1 of floor(XY / 2^f) and equal to the
    /// baseline output mod 2^k, for `trials` seeds.
    pub fn honest_correctness(
        params: RingParams,
        parties: &[usize],
        shape: (usize, usize, usize),
        trials: u64,
        seed: u64,
        fault: bool,
    ) -> std::result::Result<String, String> {
        let opts = PipelineOptions { inject_fault: fault, ..Default::default() };
        let mut worst = 0i128;
        for &n in parties {
            for t in 0..trials {
                let s = seed.wrapping_add(t).wrapping_add((n as u64) << 32);
                let fail = |what: &str, e: &dyn std::fmt::Display| format!("n={n} trial {t}: {what}: {e}");
                let base = run_pipeline(params, n, Protocol::Baseline, shape, s, &opts).map_err(|e| fail("baseline", &e))?;
                check_mac_invariant(&base.x_shares, base.dealer.keys()).map_err(|e| fail("mac invariant (input)", &e))?;
                let compact =
                    run_pipeline(params, n, Protocol::CompactTag, shape, s, &opts).map_err(|e| fail("compact", &e))?;
                for (name, r) in [("baseline", &base), ("compact", &compact)] {
                    check_mac_invariant(&r.out, r.dealer.keys()).map_err(|e| fail(&format!("mac invariant ({name} output)"), &e))?;
                }
                let k = params.k;
                let b = reconstruct_raw(&base.out).map_err(|e| fail("reconstruct", &e))?.resize(k);
                let c = reconstruct_raw(&compact.out).map_err(|e| fail("reconstruct", &e))?.resize(k);
                if b != c {
                    return Err(fail("bitwise equality", &"compact and baseline outputs differ mod 2^k"));
                }
                let got = reconstruct_all(&compact.out, &params).map_err(|e| fail("reconstruct", &e))?.values;
                let want = plain_matmul(&compact.x, &compact.y, shape);
                for (g, w) in got.iter().zip(want) {
                    let diff = (g - (w >> params.f)).abs();
                    worst = worst.max(diff);
                    if diff > 1 {
                        return Err(fail("truncation error", &format!("got {g}, want {} +- 1", w >> params.f)));
                    }
                }
            }
        }
        Ok(format!("{} trials x n in {parties:?}, max |error| = {worst}, compact == baseline mod 2^k", trials))
    }

    pub fn formula_agreement(params: RingParams, shapes: &[(usize, usize, usize)], seed: u64) -> std::result::Result<String, String> {
        for &(t1, t2, t3) in shapes {
            for protocol in [Protocol::Baseline, Protocol::CompactTag] {
                let run = run_pipeline(params, 2, protocol, (t1, t2, t3), seed, &PipelineOptions::default())
                    .map_err(|e| e.to_string())?;
                let (a, b, c) = (t1 as u64, t2 as u64, t3 as u64);
                for i in 0..2 {
                    let ctr = run.session.counter(i);
                    let (label, want) = match protocol {
                        Protocol::Baseline => ("matmul", formula_baseline_tag(a, b, c)),
                        Protocol::CompactTag => ("compact", formula_compact_tag(a, b, c)),
                    };
                    let got = ctr.get(label).tag;
                    if got != want {
                        return Err(format!("{t1}x{t2}x{t3} {} party {}: {got} != {want}", protocol.name(), i + 1));
                    }
                    if protocol == Protocol::Baseline && ctr.get("truncate").tag != formula_trunc_tag(protocol, a, c) {
                        return Err(format!("{t1}x{t2}x{t3} truncate count off"));
                    }
                }
            }
        }
        Ok(format!("{} shapes, both protocols, every party", shapes.len()))
    }

    pub fn parity(params: RingParams, shapes: &[(usize, usize, usize)], seed: u64) -> (std::result::Result<String, String>, std::result::Result<String, String>) {
        let mut comm = Ok(format!("{} shapes", shapes.len()));
        let mut offline = Ok(format!("{} shapes", shapes.len()));
        for &shape in shapes {
            let runs: Vec<_> = [Protocol::Baseline, Protocol::CompactTag]
                .into_iter()
                .map(|p| run_pipeline(params, 2, p, shape, seed, &PipelineOptions::default()))
                .collect();
            let (b, c) = match (&runs[0], &runs[1]) {
                (Ok(b), Ok(c)) => (b, c),
                (Err(e), _) | (_, Err(e)) => {
                    let msg = Err(e.to_string());
                    return (msg.clone(), msg);
                }
            };
            for party in 1..=2 {
                let eb = b.session.comm_log().party_total(party, op_scope).elements;
                let ec = c.session.comm_log().party_total(party, op_scope).elements;
                if eb != ec && comm.is_ok() {
                    comm = Err(format!("{shape:?} party {party}: baseline {eb} vs compact {ec} elements"));
                }
            }
            let mut lb: Vec<Request> = b.session.consumption_log().to_vec();
            let mut lc: Vec<Request> = c.session.consumption_log().to_vec();
            lb.sort();
            lc.sort();
            if lb != lc && offline.is_ok() {
                offline = Err(format!("{shape:?}: {lb:?} vs {lc:?}"));
            }
        }
        (comm, offline)
    }
}

#[cfg(feature = "oracle")]
pub use checks::{formula_agreement, honest_correctness, parity, plain_matmul};

#[cfg(feature = "oracle")]
pub fn cmd_verify(args: &VerifyArgs) -> Result<Vec<PropertyResult>> {
    let params = args.ring.resolve(RingParams::k64())?;
    let parties = match args.parties {
        Some(n) if n < 2 => return Err(Error::TooFewParties(n)),
        Some(n) => vec![n],
        None => vec![2, 3],
    };
    let mut out = vec![PropertyResult::new(
        "honest-correctness",
        honest_correctness(params, &parties, args.shape, args.trials, args.seed, args.inject_fault),
    )];
    if !args.inject_fault {
        let shapes = [(1, 1, 1), (4, 4, 4), (16, 12, 8)];
        out.push(PropertyResult::new("formula-agreement", formula_agreement(params, &shapes, args.seed)));
        let (comm, offline) = parity(params, &[(1, 1, 1), (3, 5, 2), (6, 2, 7), args.shape], args.seed);
        out.push(PropertyResult::new("comm-parity", comm));
        out.push(PropertyResult::new("offline-parity", offline));
    }
    Ok(out)
}

#[cfg(not(feature = "oracle"))]
pub fn cmd_verify(_args: &VerifyArgs) -> Result<Vec<PropertyResult>> {
    Err(Error::InvalidParams("verify needs the `oracle` feature".into()))
}

pub fn cmd_attack(args: &AttackArgs) -> Result<Vec<AttackResult>> {
    let params = args.ring.resolve(RingParams::new(16, 8, 4)?)?;
    if args.parties < 2 {
        return Err(Error::TooFewParties(args.parties));
    }
    let target: Target = args.target.parse()?;
    let strategies: Vec<Strategy> = if args.strategy == "all" {
        Strategy::ALL.to_vec()
    } else {
        vec![args.strategy.parse()?]
    };
    strategies
        .into_iter()
        .map(|strategy| {
            run_attack(&AttackConfig {
                params,
                parties: args.parties,
                shape: args.shape,
                trials: args.trials,
                seed: args.seed,
                strategy,
                target,
            })
        })
        .collect()
}

fn write_out(out: &OutputArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render<T: Serialize>(rows: &[T], header: &[&str], line: impl Fn(&T) -> Vec<String>, fmt: FormatArg) -> Result<String> {
    match fmt {
        FormatArg::Json => serde_json::to_string_pretty(rows).map(|s| s + "\n").map_err(|e| Error::Format(e.to_string())),
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
            for r in rows {
                w.write_record(line(r)).map_err(|e| Error::Format(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
        }
    }
}

fn usage_or_fail(e: &Error) -> i32 {
    match e {
        Error::Abort { .. } => EXIT_FAIL,
        Error::Io(_) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Bench(a) => match cmd_bench(&a) {
            Ok(rep) => match emit_report(&rep, a.output.format.into(), a.output.out.as_deref()) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_FAIL
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                usage_or_fail(&e)
            }
        },
        Command::Verify(a) => match cmd_verify(&a) {
            Ok(props) => {
                let text = match a.output.format {
                    FormatArg::Csv => props
                        .iter()
                        .map(|p| format!("{} {}: {}\n", if p.pass { "PASS" } else { "FAIL" }, p.name, p.detail))
                        .collect(),
                    FormatArg::Json => render(&props, &[], |_| vec![], FormatArg::Json).unwrap_or_default(),
                };
                if let Err(e) = write_out(&a.output, &text) {
                    eprintln!("error: {e}");
                    return EXIT_FAIL;
                }
                if props.iter().all(|p| p.pass) {
                    EXIT_OK
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                usage_or_fail(&e)
            }
        },
        Command::Attack(a) => match cmd_attack(&a) {
            Ok(results) => {
                let header = ["target", "strategy", "trials", "accepted", "rate", "bound", "sigma", "std_dev", "pass"];
                let text = render(
                    &results,
                    &header,
                    |r| {
                        vec![
                            r.target.name().into(),
                            r.strategy.name().into(),
                            r.trials.to_string(),
                            r.accepted.to_string(),
                            format!("{:.6}", r.rate),
                            format!("{:.6}", r.bound),
                            format!("{:.4}", r.sigma),
                            format!("{:.6}", r.std_dev),
                            r.pass.to_string(),
                        ]
                    },
                    a.output.format,
                );
                match text.and_then(|t| write_out(&a.output, &t)) {
                    Ok(()) if results.iter().all(|r| r.pass) => EXIT_OK,
                    Ok(()) => EXIT_FAIL,
                    Err(e) => {
                        eprintln!("error: {e}");
                        EXIT_FAIL
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                usage_or_fail(&e)
            }
        },
    }
}
