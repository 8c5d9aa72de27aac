//! Online phase: openings and their checks, SPDZ2k matrix products,
//! truncation, optimistic tags and the compact matrix product.
//!
//! A [`Session`] simulates all n parties. Each party's local work only reads
//! its own shares, key and material; everything else arrives through the
//! [`Network`]. Operations take and return one share per party, indexed by
//! party (0-based here; party ids in logs are 1-based).

mod compact;
mod conv;
mod matmul;
mod open;

pub use compact::{compress, OptMacOutput, OptMacTruncOutput};
pub use conv::{conv_dims, conv_out_hw, im2col, ConvParams};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dealer::{DealerMaterial, PartyStore, Request};
use crate::error::{Error, Result};
use crate::metrics::{MulCounter, MulPath};
use crate::ring::{RMatrix, RingParams};
use crate::sharing::{AuthMatrixShare, MacKeyShare};
use crate::transport::{AdversarySpec, CommLog, Network, PartyId};

/// How per-party local work is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheduler {
    /// One party after another on the calling thread.
    #[default]
    Lockstep,
    /// One scoped thread per party for each local phase; rounds act as barriers.
    Threaded,
}

/// When deferred tag checks run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlushPolicy {
    /// Once, on [`Session::flush`] or before an output is revealed.
    #[default]
    Deferred,
    /// After every matrix operation (handy when debugging).
    PerOp,
}

#[derive(Clone, Debug, Default)]
pub struct SessionConfig {
    pub scheduler: Scheduler,
    pub flush: FlushPolicy,
    pub adversary: AdversarySpec,
    /// Seeds party-local randomness (coin-toss seeds, commitment randomness)
    /// and the adversary's error stream.
    pub seed: u64,
}

/// A public matrix produced by an opening.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenedMatrix {
    /// Share sum mod 2^k.
    pub value: RMatrix,
    /// Share sum in the opening ring: mod 2^(k+s) for BatchRec openings,
    /// mod 2^(k+2s) for optimistic ones.
    pub lifted: RMatrix,
}

pub struct Party {
    index: usize,
    key: MacKeyShare,
    store: PartyStore,
    rng: ChaCha20Rng,
    counter: MulCounter,
}

impl Party {
    pub fn id(&self) -> PartyId {
        self.index + 1
    }

    pub fn key(&self) -> &MacKeyShare {
        &self.key
    }

    pub fn counter(&self) -> &MulCounter {
        &self.counter
    }

    pub(crate) fn count(&mut self, step: &str, path: MulPath, n: u64) {
        self.counter.add(step, path, n);
    }
}

pub(crate) struct BatchItem {
    pub step: String,
    /// W mod 2^(k+s).
    pub opened: RMatrix,
    /// Per-party MAC shares of W (share ring).
    pub macs: Vec<RMatrix>,
    pub round: u64,
}

pub(crate) struct CompactItem {
    pub step: String,
    /// Compressed opened D (column, share ring).
    pub d_prime: RMatrix,
    /// Per-party compressed MAC shares of D.
    pub mac_d_prime: Vec<RMatrix>,
    pub d_round: u64,
    pub chi_round: u64,
}

/// Tag-check obligations accumulated until the next flush.
#[derive(Default)]
pub struct DeferredCheck {
    pub(crate) batch: Vec<BatchItem>,
    pub(crate) compact: Vec<CompactItem>,
}

impl DeferredCheck {
    pub fn pending_batch(&self) -> usize {
        self.batch.len()
    }

    pub fn pending_compact(&self) -> usize {
        self.compact.len()
    }

    /// Step labels still awaiting a check, BatchRec items first.
    pub fn pending_steps(&self) -> Vec<&str> {
        self.batch.iter().map(|b| b.step.as_str()).chain(self.compact.iter().map(|c| c.step.as_str())).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.batch.is_empty() && self.compact.is_empty()
    }
}

/// Record of one combiner sampling: the newest broadcast round it covers
/// and the round in which the combiners became public.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Freshness {
    pub purpose: String,
    pub covered_round: u64,
    pub coin_round: u64,
}

pub struct Session {
    params: RingParams,
    parties: Vec<Party>,
    net: Network,
    deferred: DeferredCheck,
    consumed: Vec<Request>,
    freshness: Vec<Freshness>,
    scheduler: Scheduler,
    flush_policy: FlushPolicy,
    aborted: Option<Error>,
}

impl Session {
    pub fn new(material: DealerMaterial, config: SessionConfig) -> Result<Self> {
        let params = material.params;
        let n = material.parties();
        let net = Network::new(n, params.k, config.adversary.clone(), config.seed)?;
        let parties = material
            .distribute()
            .into_iter()
            .enumerate()
            .map(|(i, store)| {
                let mut seed = [0u8; 32];
                seed[..8].copy_from_slice(&config.seed.to_le_bytes());
                seed[8..16].copy_from_slice(&(i as u64).to_le_bytes());
                seed[16..21].copy_from_slice(b"party");
                Party {
                    index: i,
                    key: store.key,
                    store,
                    rng: ChaCha20Rng::from_seed(seed),
                    counter: MulCounter::default(),
                }
            })
            .collect();
        Ok(Session {
            params,
            parties,
            net,
            deferred: DeferredCheck::default(),
            consumed: Vec::new(),
            freshness: Vec::new(),
            scheduler: config.scheduler,
            flush_policy: config.flush,
            aborted: None,
        })
    }

    pub fn params(&self) -> &RingParams {
        &self.params
    }

    pub fn parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party(&self, i: usize) -> &Party {
        &self.parties[i]
    }

    pub fn counter(&self, i: usize) -> &MulCounter {
        &self.parties[i].counter
    }

    pub fn reset_counters(&mut self) {
        for p in &mut self.parties {
            p.counter.reset();
        }
    }

    pub fn comm_log(&self) -> &CommLog {
        self.net.log()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn deferred(&self) -> &DeferredCheck {
        &self.deferred
    }

    /// Material kinds consumed so far, in order.
    pub fn consumption_log(&self) -> &[Request] {
        &self.consumed
    }

    pub fn freshness_log(&self) -> &[Freshness] {
        &self.freshness
    }

    /// Adds more preprocessed material (must come from the same keys).
    pub fn add_material(&mut self, material: DealerMaterial) -> Result<()> {
        if material.parties() != self.parties.len() {
            return Err(Error::MissingMaterial("party count differs".into()));
        }
        for (p, store) in self.parties.iter_mut().zip(material.distribute()) {
            if store.key != p.key {
                return Err(Error::MissingMaterial("material produced under different keys".into()));
            }
            let mut store = store;
            while let Some((req, parts)) = store.pop_front() {
                p.store.push(req, parts);
            }
        }
        Ok(())
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }

    fn live(&self) -> Result<()> {
        match &self.aborted {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    /// Records an abort so later calls fail the same way.
    fn guard<T>(&mut self, r: Result<T>) -> Result<T> {
        if let Err(e) = &r {
            if e.is_abort() {
                self.aborted = Some(e.clone());
            }
        }
        r
    }

    fn share_width(&self) -> u32 {
        self.params.w_k2s()
    }

    /// Runs `f` once per party, in order or on scoped threads.
    fn local<T, F>(&mut self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut Party) -> Result<T> + Sync,
    {
        match self.scheduler {
            Scheduler::Lockstep => self.parties.iter_mut().map(&f).collect(),
            Scheduler::Threaded => std::thread::scope(|s| {
                let handles: Vec<_> = self.parties.iter_mut().map(|p| s.spawn(|| f(p))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("party thread panicked"))
                    .collect()
            }),
        }
    }

    /// Each party takes its part of one material item.
    fn take(&mut self, req: Request) -> Result<Vec<Vec<AuthMatrixShare>>> {
        let parts = self
            .parties
            .iter_mut()
            .map(|p| p.store.take(req))
            .collect::<Result<Vec<_>>>()?;
        self.consumed.push(req);
        Ok(parts)
    }

    fn check_parties<T>(&self, xs: &[T], what: &str) -> Result<()> {
        if xs.len() != self.parties.len() {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {} shares for {} parties",
                xs.len(),
                self.parties.len()
            )));
        }
        Ok(())
    }

    fn check_shape(xs: &[AuthMatrixShare], shape: (usize, usize), what: &str) -> Result<()> {
        if let Some(x) = xs.iter().find(|x| x.shape() != shape) {
            return Err(Error::ShapeMismatch(format!("{what}: {:?} vs expected {:?}", x.shape(), shape)));
        }
        Ok(())
    }

    /// Public matrix of s-bit combiners, sampled by commit-reveal coin tossing.
    /// Returns it with the round in which it became known.
    fn coin(&mut self, purpose: &str, rows: usize, cols: usize) -> Result<(RMatrix, u64)> {
        let contrib: Vec<([u8; 32], [u8; 16])> = self
            .parties
            .iter_mut()
            .map(|p| {
                let mut seed = [0u8; 32];
                let mut r = [0u8; 16];
                p.rng.fill_bytes(&mut seed);
                p.rng.fill_bytes(&mut r);
                (seed, r)
            })
            .collect();
        let m = self.net.coin_toss(&format!("coin.{purpose}"), contrib, rows, cols, self.params.s)?;
        Ok((m, self.net.round()))
    }

    fn note_freshness(&mut self, purpose: &str, covered_round: u64, coin_round: u64) -> Result<()> {
        if coin_round <= covered_round {
            return Err(Error::Ordering(format!(
                "combiners for {purpose} fixed in round {coin_round}, before round {covered_round} they must cover"
            )));
        }
        self.freshness.push(Freshness { purpose: purpose.to_string(), covered_round, coin_round });
        Ok(())
    }

    fn after_op(&mut self) -> Result<()> {
        if self.flush_policy == FlushPolicy::PerOp {
            self.flush()?;
        }
        Ok(())
    }

    /// Runs every deferred check: BatchRec items first, then compact items.
    pub fn flush(&mut self) -> Result<()> {
        self.live()?;
        let r = self.batch_tag_check().and_then(|_| self.compact_tag_check());
        self.guard(r)
    }
}
