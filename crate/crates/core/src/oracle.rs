//! Full-reconstruction helpers. These aggregate every party's shares, which
//! no real party can do; they exist for tests and the `verify` subcommand.

use crate::error::{Error, Result};
use crate::ring::{RElem, RMatrix, RingParams};
use crate::sharing::{AuthMatrixShare, MacKeyShare};

/// Plaintext recovered from all shares: signed values mod 2^k, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainView {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<i128>,
}

impl PlainView {
    pub fn get(&self, r: usize, c: usize) -> i128 {
        self.values[r * self.cols + c]
    }
}

/// Sum of value shares in the share ring.
pub fn reconstruct_raw(shares: &[AuthMatrixShare]) -> Result<RMatrix> {
    let first = shares.first().ok_or(Error::MissingParty(1))?;
    let mut acc = first.vals.clone();
    for s in &shares[1..] {
        acc = acc.add(&s.vals)?;
    }
    Ok(acc)
}

pub fn reconstruct_all(shares: &[AuthMatrixShare], params: &RingParams) -> Result<PlainView> {
    if shares.len() < 2 {
        return Err(Error::MissingParty(shares.len() + 1));
    }
    let raw = reconstruct_raw(shares)?;
    Ok(PlainView {
        rows: raw.rows(),
        cols: raw.cols(),
        values: raw.data().iter().map(|e| e.resize(params.k).to_i128()).collect(),
    })
}

/// The global key as an integer: the plain sum of the key shares, embedded in `width`.
pub fn global_delta(keys: &[MacKeyShare], width: u32) -> RElem {
    keys.iter().fold(RElem::zero(width), |a, k| a + k.delta_i.resize(width))
}

/// Checks sum(mac) = delta * sum(val) elementwise in the share ring.
pub fn check_mac_invariant(shares: &[AuthMatrixShare], keys: &[MacKeyShare]) -> Result<()> {
    if shares.len() != keys.len() {
        return Err(Error::MissingParty(shares.len().min(keys.len()) + 1));
    }
    let w = shares[0].width();
    let delta = global_delta(keys, w);
    let vals = reconstruct_raw(shares)?;
    let mut macs = shares[0].macs.clone();
    for s in &shares[1..] {
        macs = macs.add(&s.macs)?;
    }
    for (i, (v, m)) in vals.data().iter().zip(macs.data()).enumerate() {
        if delta * *v != *m {
            return Err(Error::Abort {
                kind: crate::error::AbortKind::TagMismatch,
                step: format!("mac invariant at entry {i}"),
                culprit: None,
            });
        }
    }
    Ok(())
}
