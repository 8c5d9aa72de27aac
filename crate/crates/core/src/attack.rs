//! Forgery trials: inject additive errors into broadcasts and measure how
//! often the tag checks still pass.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dealer::{plan_matmul_trunc, Dealer, Request};
use crate::error::{Error, Result};
use crate::protocol::{Session, SessionConfig};
use crate::ring::{RElem, RMatrix, RingParams};
use crate::transport::{AdversarySpec, ErrorSpec, Network, TamperRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Uniform nonzero error on every entry.
    RandomE,
    /// One entry off by 2^(k-1); every other compressed coordinate is zero.
    AllYZero,
    /// One random nonzero entry.
    SingleEntry,
    /// Every entry off by 2^(k-1).
    TopBit,
    /// No error at all (control: always accepted).
    Zero,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::RandomE, Strategy::AllYZero, Strategy::SingleEntry, Strategy::TopBit, Strategy::Zero];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::RandomE => "random-e",
            Strategy::AllYZero => "all-y-zero",
            Strategy::SingleEntry => "single-entry",
            Strategy::TopBit => "top-bit",
            Strategy::Zero => "zero",
        }
    }

    pub fn error_spec(&self) -> ErrorSpec {
        match self {
            Strategy::RandomE => ErrorSpec::RandomNonzero,
            Strategy::AllYZero => ErrorSpec::SingleTopBit,
            Strategy::SingleEntry => ErrorSpec::RandomSingleEntry,
            Strategy::TopBit => ErrorSpec::TopBit,
            Strategy::Zero => ErrorSpec::Zero,
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Adversary(format!("unknown strategy `{s}`")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// The optimistic D opening of the compact product.
    CompactD,
    /// The E and U openings of a SPDZ2k product, caught by BatchRec.
    BatchRec,
    /// A fixed vector y with y_1 = 2^(k+s-1) against fresh combiners.
    FixedY,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::CompactD, Target::BatchRec, Target::FixedY];

    pub fn name(&self) -> &'static str {
        match self {
            Target::CompactD => "compact-d",
            Target::BatchRec => "batchrec",
            Target::FixedY => "fixed-y",
        }
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Adversary(format!("unknown attack target `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub params: RingParams,
    pub parties: usize,
    pub shape: (usize, usize, usize),
    pub trials: u64,
    pub seed: u64,
    pub strategy: Strategy,
    pub target: Target,
}

impl AttackConfig {
    /// s = 8, k = 16, f = 4 on a 4x4x4 product with two parties.
    pub fn small(target: Target, strategy: Strategy, trials: u64, seed: u64) -> Self {
        AttackConfig {
            params: RingParams::new(16, 8, 4).expect("valid"),
            parties: 2,
            shape: (4, 4, 4),
            trials,
            seed,
            strategy,
            target,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub target: Target,
    pub strategy: Strategy,
    pub trials: u64,
    pub accepted: u64,
    pub rate: f64,
    /// Acceptance bound tested against.
    pub bound: f64,
    /// Statistical security in bits, s - log2(s+1).
    pub sigma: f64,
    /// Binomial standard deviation at the bound.
    pub std_dev: f64,
    pub pass: bool,
}

impl AttackResult {
    fn new(cfg: &AttackConfig, accepted: u64) -> Self {
        let s = cfg.params.s;
        let bound = match cfg.target {
            Target::FixedY => 2f64.powi(-(s as i32)),
            _ => cfg.params.soundness_bound(),
        };
        let n = cfg.trials as f64;
        let rate = accepted as f64 / n;
        let std_dev = (bound * (1.0 - bound) / n).sqrt();
        let pass = match cfg.strategy {
            Strategy::Zero => accepted == cfg.trials,
            _ => rate <= bound + 3.0 * std_dev,
        };
        AttackResult {
            target: cfg.target,
            strategy: cfg.strategy,
            trials: cfg.trials,
            accepted,
            rate,
            bound,
            sigma: cfg.params.sigma(),
            std_dev,
            pass,
        }
    }
}

/// Independent per-trial seed (splitmix64 of base and index).
fn trial_seed(base: u64, i: u64) -> u64 {
    let mut z = base ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_inputs(rng: &mut ChaCha20Rng, n: usize, bits: u32) -> Vec<i128> {
    let half = 1i128 << (bits - 1);
    (0..n).map(|_| rng.gen_range(-half..half)).collect()
}

/// One trial; Ok(true) when the run finished without an abort.
fn trial(cfg: &AttackConfig, i: u64) -> Result<bool> {
    let seed = trial_seed(cfg.seed, i);
    let (t1, t2, t3) = cfg.shape;
    let p = cfg.params;
    let corrupt = cfg.parties;
    let err = cfg.strategy.error_spec();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    if cfg.target == Target::FixedY {
        return fixed_y_trial(cfg, seed);
    }
    let (plan, rules) = match cfg.target {
        Target::CompactD => (plan_matmul_trunc(t1, t2, t3), vec![("compact.D", err)]),
        _ => (
            vec![
                Request::Triple { t1, t2, t3 },
                Request::ZeroMask { rows: t1, cols: t2 },
                Request::ZeroMask { rows: t2, cols: t3 },
            ],
            vec![("matmul.E", err.clone()), ("matmul.U", err)],
        ),
    };
    let adversary = AdversarySpec {
        corrupt: vec![corrupt],
        rules: rules
            .into_iter()
            .map(|(step, error)| TamperRule { step: step.to_string(), party: corrupt, error })
            .collect(),
    };
    let mut dealer = Dealer::from_seed_u64(p, cfg.parties, seed)?;
    let material = dealer.provision(&plan)?;
    let bits = p.k / 4;
    let x = dealer.share_signed(t1, t2, &random_inputs(&mut rng, t1 * t2, bits))?;
    let y = dealer.share_signed(t2, t3, &random_inputs(&mut rng, t2 * t3, bits))?;
    let mut s = Session::new(material, SessionConfig { adversary, seed, ..Default::default() })?;
    let run = match cfg.target {
        Target::CompactD => s.compact_matmul(&x, &y).map(|_| ()),
        _ => s.matmul_spdz2k(&x, &y).map(|_| ()),
    }
    .and_then(|_| s.flush());
    match run {
        Ok(()) => Ok(true),
        Err(e) if e.is_abort() => Ok(false),
        Err(e) => Err(e),
    }
}

fn fixed_y_trial(cfg: &AttackConfig, seed: u64) -> Result<bool> {
    let p = cfg.params;
    let w = p.w_k2s();
    let len = cfg.shape.0.max(1);
    let mut y = RMatrix::zeros(len, 1, w);
    y.set(0, 0, RElem::pow2(p.k + p.s - 1, w));
    let mut net = Network::new(cfg.parties, p.k, AdversarySpec::honest(), seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let contrib = (0..cfg.parties)
        .map(|_| {
            let mut a = [0u8; 32];
            let mut b = [0u8; 16];
            rng.fill_bytes(&mut a);
            rng.fill_bytes(&mut b);
            (a, b)
        })
        .collect();
    let chi = net.coin_toss("coin.fixed_y", contrib, len, 1, p.s)?.resize(w);
    let acc = chi.transpose().matmul(&y, &mut 0)?.get(0, 0);
    Ok(acc.is_zero())
}

/// Runs all trials (in parallel) and compares the acceptance rate with the bound.
pub fn run_attack(cfg: &AttackConfig) -> Result<AttackResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParams("at least one trial is needed".into()));
    }
    if cfg.params.s > 16 {
        return Err(Error::InvalidParams(format!(
            "s = {} makes forgeries unobservable; use s <= 16",
            cfg.params.s
        )));
    }
    let accepted = (0..cfg.trials)
        .into_par_iter()
        .map(|i| trial(cfg, i).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(AttackResult::new(cfg, accepted))
}
