//! In-process broadcast fabric with commitments, coin tossing, byte
//! accounting and tamper hooks for corrupt parties.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AbortKind, Error, Result};
use crate::ring::{RElem, RMatrix};

/// Parties are numbered 1..=n.
pub type PartyId = usize;

/// 256-bit hash used for commitments and coin expansion.
pub trait CommitHash: Send + Sync {
    fn digest(&self, parts: &[&[u8]]) -> [u8; 32];
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sha256Hash;

impl CommitHash for Sha256Hash {
    fn digest(&self, parts: &[&[u8]]) -> [u8; 32] {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p);
        }
        h.finalize().into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub digest: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub payload: Vec<u8>,
    pub randomness: [u8; 16],
}

pub fn commit<R: RngCore + ?Sized>(payload: &[u8], rng: &mut R) -> (Commitment, Opening) {
    let mut randomness = [0u8; 16];
    rng.fill_bytes(&mut randomness);
    let digest = Sha256Hash.digest(&[payload, &randomness]);
    (Commitment { digest }, Opening { payload: payload.to_vec(), randomness })
}

pub fn verify(c: &Commitment, o: &Opening) -> bool {
    Sha256Hash.digest(&[&o.payload, &o.randomness]) == c.digest
}

/// Additive error pattern applied to a corrupt party's payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorSpec {
    /// No change (control).
    Zero,
    /// Every entry uniform mod 2^k, not all zero.
    RandomNonzero,
    /// One random entry set to a random nonzero value mod 2^k.
    RandomSingleEntry,
    /// Every entry 2^(k-1).
    TopBit,
    /// One random entry set to 2^(k-1): a single row, largest 2-adic valuation.
    SingleTopBit,
    /// Fixed matrix of decimal integers.
    Entries { entries: Vec<Vec<String>> },
    /// Open a commitment to a different payload.
    Equivocate,
    /// Use a fixed coin-toss seed (every byte set to `byte`).
    FixSeed { byte: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamperRule {
    pub step: String,
    pub party: PartyId,
    pub error: ErrorSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub corrupt: Vec<PartyId>,
    #[serde(default)]
    pub rules: Vec<TamperRule>,
}

/// Broadcast and commitment labels the protocol emits. Coin tosses use
/// `coin.<purpose>`.
pub const KNOWN_STEPS: &[&str] = &[
    "open.w",
    "open.cs",
    "output.W",
    "matmul.E",
    "matmul.U",
    "truncate.D",
    "optmac.D",
    "optmac_trunc.D",
    "compact.E",
    "compact.U",
    "compact.D",
    "batch_check.cs",
    "compact_check.cs",
];

impl AdversarySpec {
    pub fn honest() -> Self {
        Self::default()
    }

    /// Single corrupt party with one rule.
    pub fn single(party: PartyId, step: &str, error: ErrorSpec) -> Self {
        AdversarySpec {
            corrupt: vec![party],
            rules: vec![TamperRule { step: step.to_string(), party, error }],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let set: BTreeSet<_> = self.corrupt.iter().copied().collect();
        if set.iter().any(|&p| p == 0 || p > n) {
            return Err(Error::Adversary(format!("corrupt party out of range 1..={n}")));
        }
        if set.len() >= n {
            return Err(Error::Adversary("at least one party must stay honest".into()));
        }
        for r in &self.rules {
            if !set.contains(&r.party) {
                return Err(Error::Adversary(format!("rule for honest party {}", r.party)));
            }
            if !KNOWN_STEPS.contains(&r.step.as_str()) && !r.step.starts_with("coin.") {
                return Err(Error::Adversary(format!("unknown step label `{}`", r.step)));
            }
        }
        Ok(())
    }

    pub fn is_corrupt(&self, p: PartyId) -> bool {
        self.corrupt.contains(&p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Adversary(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    fn rules_for<'a>(&'a self, step: &'a str, p: PartyId) -> impl Iterator<Item = &'a ErrorSpec> + 'a {
        self.rules
            .iter()
            .filter(move |r| r.party == p && r.step == step && self.is_corrupt(p))
            .map(|r| &r.error)
    }
}

/// Error matrix for `pattern` at the given shape; entries live in `width`.
pub fn error_matrix<R: RngCore + ?Sized>(
    pattern: &ErrorSpec,
    rows: usize,
    cols: usize,
    width: u32,
    k: u32,
    rng: &mut R,
) -> Result<RMatrix> {
    let nonzero_k = |rng: &mut R| loop {
        let e = RElem::random(rng, k);
        if !e.is_zero() {
            return e.resize(width);
        }
    };
    let top = RElem::pow2(k - 1, width);
    Ok(match pattern {
        ErrorSpec::Zero | ErrorSpec::Equivocate | ErrorSpec::FixSeed { .. } => RMatrix::zeros(rows, cols, width),
        ErrorSpec::RandomNonzero => loop {
            let m = RMatrix::random(rng, rows, cols, k).resize(width);
            if !m.is_zero() {
                break m;
            }
        },
        ErrorSpec::RandomSingleEntry => {
            let mut m = RMatrix::zeros(rows, cols, width);
            let at = (rng.next_u64() % (rows * cols) as u64) as usize;
            m.set(at / cols, at % cols, nonzero_k(rng));
            m
        }
        ErrorSpec::TopBit => RMatrix::from_fn(rows, cols, width, |_, _| top),
        ErrorSpec::SingleTopBit => {
            let mut m = RMatrix::zeros(rows, cols, width);
            let at = (rng.next_u64() % (rows * cols) as u64) as usize;
            m.set(at / cols, at % cols, top);
            m
        }
        ErrorSpec::Entries { entries } => {
            if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
                return Err(Error::Adversary(format!("error matrix shape does not match {rows}x{cols}")));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for row in entries {
                for e in row {
                    data.push(RElem::from_dec_str(e, width)?);
                }
            }
            RMatrix::new(rows, cols, data)?
        }
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommEntry {
    pub elements: u64,
    pub bytes: u64,
}

/// Per-party broadcast counters keyed by step label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommLog {
    entries: BTreeMap<(String, PartyId), CommEntry>,
}

impl CommLog {
    pub fn record(&mut self, step: &str, party: PartyId, elements: u64, bytes: u64) {
        let e = self.entries.entry((step.to_string(), party)).or_default();
        e.elements += elements;
        e.bytes += bytes;
    }

    pub fn get(&self, step: &str, party: PartyId) -> CommEntry {
        self.entries.get(&(step.to_string(), party)).copied().unwrap_or_default()
    }

    /// Totals for one party over labels accepted by `keep`.
    pub fn party_total(&self, party: PartyId, keep: impl Fn(&str) -> bool) -> CommEntry {
        self.entries
            .iter()
            .filter(|((s, p), _)| *p == party && keep(s))
            .fold(CommEntry::default(), |a, (_, e)| CommEntry {
                elements: a.elements + e.elements,
                bytes: a.bytes + e.bytes,
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, PartyId, CommEntry)> {
        self.entries.iter().map(|((s, p), e)| (s.as_str(), *p, *e))
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// CSV with columns step_label, party, elements, bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step_label", "party", "elements", "bytes"])
            .map_err(|e| Error::Format(e.to_string()))?;
        for (s, p, e) in self.iter() {
            w.write_record([s.to_string(), p.to_string(), e.elements.to_string(), e.bytes.to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Lockstep broadcast channel shared by all simulated parties.
pub struct Network {
    n: usize,
    k: u32,
    adversary: AdversarySpec,
    adv_rng: ChaCha20Rng,
    log: CommLog,
    round: u64,
    pending: Option<(String, Vec<Commitment>)>,
    transcript: Sha256,
}

impl Network {
    pub fn new(n: usize, k: u32, adversary: AdversarySpec, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewParties(n));
        }
        adversary.validate(n)?;
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        s[8..11].copy_from_slice(b"adv");
        Ok(Network {
            n,
            k,
            adversary,
            adv_rng: ChaCha20Rng::from_seed(s),
            log: CommLog::default(),
            round: 0,
            pending: None,
            transcript: Sha256::new(),
        })
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn log(&self) -> &CommLog {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut CommLog {
        &mut self.log
    }

    pub fn adversary(&self) -> &AdversarySpec {
        &self.adversary
    }

    /// Hash of every message delivered so far.
    pub fn transcript_digest(&self) -> [u8; 32] {
        self.transcript.clone().finalize().into()
    }

    fn ensure_no_pending(&self, step: &str) -> Result<()> {
        if let Some((p, _)) = &self.pending {
            return Err(Error::Desync(format!("`{step}` started while commitments for `{p}` are unopened")));
        }
        Ok(())
    }

    /// Applies the corrupt party's additive rules for `step` to `m`.
    pub fn tamper(&mut self, step: &str, party: PartyId, m: RMatrix) -> Result<RMatrix> {
        let patterns: Vec<ErrorSpec> = self.adversary.rules_for(step, party).cloned().collect();
        let mut out = m;
        for pattern in patterns {
            let e = error_matrix(&pattern, out.rows(), out.cols(), out.width(), self.k, &mut self.adv_rng)?;
            out = out.add(&e)?;
        }
        Ok(out)
    }

    /// Every party sends one matrix; everyone receives all of them.
    /// `sent[i]` belongs to party i+1.
    pub fn broadcast_shares(&mut self, step: &str, sent: Vec<RMatrix>) -> Result<Vec<RMatrix>> {
        self.ensure_no_pending(step)?;
        if sent.len() != self.n {
            return Err(Error::Desync(format!("`{step}`: {} of {} parties sent", sent.len(), self.n)));
        }
        let mut out = Vec::with_capacity(self.n);
        for (i, m) in sent.into_iter().enumerate() {
            let p = i + 1;
            let elems = (m.rows() * m.cols()) as u64;
            self.log.record(step, p, elems, elems * m.width().div_ceil(8) as u64);
            let m = if self.adversary.is_corrupt(p) { self.tamper(step, p, m)? } else { m };
            self.transcript.update(step.as_bytes());
            for e in m.data() {
                self.transcript.update(e.to_le_bytes());
            }
            out.push(m);
        }
        self.round += 1;
        Ok(out)
    }

    pub fn commit_round(&mut self, step: &str, commitments: Vec<Commitment>) -> Result<()> {
        self.ensure_no_pending(step)?;
        if commitments.len() != self.n {
            return Err(Error::Desync(format!("`{step}`: {} of {} commitments", commitments.len(), self.n)));
        }
        for (i, c) in commitments.iter().enumerate() {
            self.log.record(step, i + 1, 0, 32);
            self.transcript.update(c.digest);
        }
        self.pending = Some((step.to_string(), commitments));
        self.round += 1;
        Ok(())
    }

    /// Opens the pending commitments. `elements` is how many ring elements
    /// each payload carries (for the log).
    pub fn open_round(&mut self, step: &str, mut openings: Vec<Opening>, elements: u64) -> Result<Vec<Vec<u8>>> {
        let (label, commits) = match self.pending.take() {
            Some(p) => p,
            None => return Err(Error::Ordering(format!("`{step}` opened before any commitment"))),
        };
        if label != step {
            let msg = format!("opening `{step}` but `{label}` is pending");
            self.pending = Some((label, commits));
            return Err(Error::Ordering(msg));
        }
        if openings.len() != self.n {
            return Err(Error::Desync(format!("`{step}`: {} of {} openings", openings.len(), self.n)));
        }
        for (i, o) in openings.iter_mut().enumerate() {
            let p = i + 1;
            let equivocate = self.adversary.rules_for(step, p).any(|e| *e == ErrorSpec::Equivocate);
            if equivocate {
                match o.payload.first_mut() {
                    Some(b) => *b ^= 1,
                    None => o.payload.push(1),
                }
            }
            self.log.record(step, p, elements, (o.payload.len() + 16) as u64);
        }
        self.round += 1;
        for (i, (c, o)) in commits.iter().zip(&openings).enumerate() {
            if !verify(c, o) {
                return Err(Error::Abort { kind: AbortKind::Equivocation, step: step.to_string(), culprit: Some(i + 1) });
            }
            self.transcript.update(&o.payload);
        }
        Ok(openings.into_iter().map(|o| o.payload).collect())
    }

    /// Commit-reveal of per-party 32-byte seeds, XOR-combined and expanded
    /// into a public matrix. `contrib[i]` is party i+1's seed and the
    /// randomness it commits with.
    pub fn coin_toss(
        &mut self,
        step: &str,
        contrib: Vec<([u8; 32], [u8; 16])>,
        rows: usize,
        cols: usize,
        width: u32,
    ) -> Result<RMatrix> {
        let mut commits = Vec::with_capacity(self.n);
        let mut opens = Vec::with_capacity(self.n);
        for (i, (seed, r)) in contrib.into_iter().enumerate() {
            let p = i + 1;
            let mut seed = seed;
            for e in self.adversary.rules_for(step, p) {
                if let ErrorSpec::FixSeed { byte } = e {
                    seed = [*byte; 32];
                }
            }
            commits.push(Commitment { digest: Sha256Hash.digest(&[&seed, &r]) });
            opens.push(Opening { payload: seed.to_vec(), randomness: r });
        }
        self.commit_round(step, commits)?;
        let seeds = self.open_round(step, opens, 0)?;
        let mut x = [0u8; 32];
        for s in &seeds {
            for (a, b) in x.iter_mut().zip(s) {
                *a ^= b;
            }
        }
        let key = Sha256Hash.digest(&[&x, step.as_bytes()]);
        let mut rng = ChaCha20Rng::from_seed(key);
        Ok(RMatrix::random(&mut rng, rows, cols, width))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    fn seeds(n: usize, base: u8) -> Vec<([u8; 32], [u8; 16])> {
        (0..n).map(|i| ([base.wrapping_add(i as u8); 32], [i as u8; 16])).collect()
    }

    #[test]
    fn honest_broadcast_passes_through() {
        let mut net = Network::new(2, 16, AdversarySpec::honest(), 0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = RMatrix::random(&mut rng, 2, 3, 32);
        let b = RMatrix::random(&mut rng, 2, 3, 32);
        let got = net.broadcast_shares("matmul.E", vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(got, vec![a, b]);
        assert_eq!(net.log().get("matmul.E", 1).elements, 6);
        assert_eq!(net.log().get("matmul.E", 2).bytes, 24);
        assert_eq!(net.round(), 1);
    }

    #[test]
    fn tamper_shifts_sum_by_error() {
        let e = vec![vec!["5".to_string(), "0".to_string()]];
        let adv = AdversarySpec::single(2, "compact.D", ErrorSpec::Entries { entries: e });
        let mut net = Network::new(3, 16, adv, 0).unwrap();
        let zero = RMatrix::zeros(1, 2, 32);
        let got = net.broadcast_shares("compact.D", vec![zero.clone(), zero.clone(), zero.clone()]).unwrap();
        let sum = got[0].add(&got[1]).unwrap().add(&got[2]).unwrap();
        assert_eq!(sum.get(0, 0).low_u64(), 5);
        assert!(sum.get(0, 1).is_zero());
        // other labels are untouched
        let got = net.broadcast_shares("compact.E", vec![zero.clone(), zero.clone(), zero]).unwrap();
        assert!(got.iter().all(|m| m.is_zero()));
    }

    #[test]
    fn spec_validation() {
        assert!(AdversarySpec { corrupt: vec![1, 2], rules: vec![] }.validate(2).is_err());
        assert!(AdversarySpec { corrupt: vec![3], rules: vec![] }.validate(2).is_err());
        assert!(AdversarySpec::single(1, "no.such", ErrorSpec::Zero).validate(2).is_err());
        let honest_rule = AdversarySpec {
            corrupt: vec![1],
            rules: vec![TamperRule { step: "compact.D".into(), party: 2, error: ErrorSpec::Zero }],
        };
        assert!(honest_rule.validate(3).is_err());
        assert!(AdversarySpec::single(1, "coin.chi", ErrorSpec::FixSeed { byte: 0 }).validate(2).is_ok());
    }

    #[test]
    fn spec_json() {
        let s = r#"{"corrupt":[2],"rules":[{"step":"compact.D","party":2,"error":{"kind":"random_nonzero"}}]}"#;
        let a = AdversarySpec::from_json(s).unwrap();
        assert_eq!(a.rules[0].error, ErrorSpec::RandomNonzero);
        let back = AdversarySpec::from_json(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn commit_then_open_ordering() {
        let mut net = Network::new(2, 16, AdversarySpec::honest(), 0).unwrap();
        let err = net.open_round("open.cs", vec![], 1).unwrap_err();
        assert!(matches!(err, Error::Ordering(_)));
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (c1, o1) = commit(b"a", &mut rng);
        let (c2, o2) = commit(b"b", &mut rng);
        net.commit_round("open.cs", vec![c1, c2]).unwrap();
        assert!(matches!(net.broadcast_shares("open.w", vec![]), Err(Error::Desync(_))));
        let got = net.open_round("open.cs", vec![o1, o2], 1).unwrap();
        assert_eq!(got, vec![b"a".to_vec(), b"b".to_vec()]);
    }

    #[test]
    fn equivocation_is_caught() {
        let adv = AdversarySpec::single(2, "batch_check.cs", ErrorSpec::Equivocate);
        let mut net = Network::new(2, 16, adv, 0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (c1, o1) = commit(b"x", &mut rng);
        let (c2, o2) = commit(b"y", &mut rng);
        net.commit_round("batch_check.cs", vec![c1, c2]).unwrap();
        let err = net.open_round("batch_check.cs", vec![o1, o2], 1).unwrap_err();
        assert_eq!(
            err,
            Error::Abort { kind: AbortKind::Equivocation, step: "batch_check.cs".into(), culprit: Some(2) }
        );
    }

    #[test]
    fn coin_labels_give_independent_streams() {
        let mut net = Network::new(3, 16, AdversarySpec::honest(), 0).unwrap();
        let a = net.coin_toss("coin.a", seeds(3, 1), 4, 4, 64).unwrap();
        let b = net.coin_toss("coin.b", seeds(3, 1), 4, 4, 64).unwrap();
        let a2 = net.coin_toss("coin.a", seeds(3, 1), 4, 4, 64).unwrap();
        assert_eq!(a, a2);
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x != y));
    }

    #[test]
    fn coin_fixed_seed_stays_uniform() {
        // party 2 pins its seed; the honest party's seed still drives the output
        let adv = AdversarySpec::single(2, "coin.chi", ErrorSpec::FixSeed { byte: 0 });
        let mut net = Network::new(2, 16, adv, 0).unwrap();
        let mut counts = [0f64; 16];
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..1600 {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            let contrib = vec![(s, [0u8; 16]), ([7u8; 32], [1u8; 16])];
            let m = net.coin_toss("coin.chi", contrib, 1, 1, 8).unwrap();
            counts[(m.get(0, 0).low_u64() & 15) as usize] += 1.0;
        }
        let chi2: f64 = counts.iter().map(|c| (c - 100.0).powi(2) / 100.0).sum();
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    #[test]
    fn transcript_is_deterministic() {
        let run = || {
            let adv = AdversarySpec::single(1, "compact.D", ErrorSpec::RandomNonzero);
            let mut net = Network::new(2, 16, adv, 42).unwrap();
            let z = RMatrix::zeros(2, 2, 32);
            net.broadcast_shares("compact.D", vec![z.clone(), z]).unwrap();
            net.coin_toss("coin.x", seeds(2, 9), 2, 1, 8).unwrap();
            net.transcript_digest()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn error_patterns() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let m = error_matrix(&ErrorSpec::RandomNonzero, 3, 3, 32, 16, &mut rng).unwrap();
        assert!(!m.resize(16).is_zero());
        assert_eq!(m.resize(16).resize(32), m);
        let t = error_matrix(&ErrorSpec::SingleTopBit, 3, 3, 32, 16, &mut rng).unwrap();
        assert_eq!(t.data().iter().filter(|e| !e.is_zero()).count(), 1);
        assert_eq!(t.sum().trailing_zeros(), 15);
        let s = error_matrix(&ErrorSpec::RandomSingleEntry, 3, 3, 32, 16, &mut rng).unwrap();
        assert_eq!(s.data().iter().filter(|e| !e.is_zero()).count(), 1);
        assert!(error_matrix(&ErrorSpec::Zero, 2, 2, 32, 16, &mut rng).unwrap().is_zero());
        let bad = ErrorSpec::Entries { entries: vec![vec!["1".into()]] };
        assert!(error_matrix(&bad, 2, 2, 32, 16, &mut rng).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn commitment_binding(payload in proptest::collection::vec(any::<u8>(), 1..64),
                              flip in any::<usize>(), bit in 0u8..8, seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (c, o) = commit(&payload, &mut rng);
            prop_assert!(verify(&c, &o));
            let mut bad = o.clone();
            let i = flip % bad.payload.len();
            bad.payload[i] ^= 1 << bit;
            prop_assert!(!verify(&c, &bad));
            let mut bad_r = o.clone();
            bad_r.randomness[flip % 16] ^= 1 << bit;
            prop_assert!(!verify(&c, &bad_r));
        }

        #[test]
        fn coin_toss_agreement(n in 2usize..6, base in any::<u8>(), rows in 1usize..5) {
            let mut net = Network::new(n, 16, AdversarySpec::honest(), 0).unwrap();
            let a = net.coin_toss("coin.t", seeds(n, base), rows, 1, 16).unwrap();
            // every party derives the same matrix from the same openings
            let mut net2 = Network::new(n, 16, AdversarySpec::honest(), 1).unwrap();
            let b = net2.coin_toss("coin.t", seeds(n, base), rows, 1, 16).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
