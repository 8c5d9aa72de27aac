//! Single openings, batched openings and the BatchRec tag check.

use super::{BatchItem, OpenedMatrix, Session};
use crate::dealer::Request;
use crate::error::{Error, Result};
use crate::metrics::MulPath;
use crate::ring::{RElem, RMatrix};
use crate::sharing::{AuthMatrixShare, AuthShare};
use crate::transport::commit;

impl Session {
    /// Commit to one value per party, open, and return the sum in `width`.
    pub(crate) fn commit_reveal_sum(&mut self, step: &str, values: Vec<RElem>, width: u32) -> Result<RElem> {
        let mut tampered = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            let m = RMatrix::new(1, 1, vec![v])?;
            tampered.push(self.net.tamper(step, i + 1, m)?.get(0, 0));
        }
        let (commits, opens): (Vec<_>, Vec<_>) = self
            .parties
            .iter_mut()
            .zip(&tampered)
            .map(|(p, v)| commit(&v.to_le_bytes(), &mut p.rng))
            .unzip();
        self.net.commit_round(step, commits)?;
        let payloads = self.net.open_round(step, opens, 1)?;
        let mut sum = RElem::zero(width);
        for (i, b) in payloads.iter().enumerate() {
            let v = RElem::from_le_bytes(b, width).map_err(|_| Error::Abort {
                kind: crate::error::AbortKind::Equivocation,
                step: step.to_string(),
                culprit: Some(i + 1),
            })?;
            sum += v;
        }
        Ok(sum)
    }

    /// Opens one authenticated value and checks its MAC immediately.
    /// The upper bits are hidden by adding 2^k * r for a dealer-shared r.
    pub fn open_single(&mut self, x: &[AuthShare]) -> Result<RElem> {
        self.live()?;
        let r = self.open_single_inner(x);
        self.guard(r)
    }

    fn open_single_inner(&mut self, x: &[AuthShare]) -> Result<RElem> {
        self.check_parties(x, "open_single")?;
        let k = self.params.k;
        let ks = self.params.w_ks();
        let masks = self.take(Request::OpenMask)?;
        let w: Vec<AuthShare> = x
            .iter()
            .zip(&masks)
            .map(|(xi, m)| {
                let r = m[0].shift_up(k).get(0, 0);
                AuthShare { val: xi.val + r.val, mac: xi.mac + r.mac }
            })
            .collect();
        let sent = w.iter().map(|s| RMatrix::new(1, 1, vec![s.val.resize(ks)])).collect::<Result<Vec<_>>>()?;
        let recv = self.net.broadcast_shares("open.w", sent)?;
        let opened = recv.iter().fold(RElem::zero(ks), |a, m| a + m.get(0, 0));
        let cs = self.local(|p| {
            p.count("open", MulPath::Tag, 1);
            let wi = w[p.index];
            Ok(wi.mac.resize(ks) - RElem::mul_key(&p.key.delta_i, &opened)?)
        })?;
        let total = self.commit_reveal_sum("open.cs", cs, ks)?;
        if !total.is_zero() {
            return Err(Error::tag_mismatch("open.cs"));
        }
        Ok(opened.resize(k))
    }

    /// Opens a shared matrix, masked with a dealer zero mask; the tag check
    /// is deferred.
    pub fn batch_open(&mut self, step: &str, m: &[AuthMatrixShare]) -> Result<OpenedMatrix> {
        self.live()?;
        let r = self.open_deferred(step, m, true);
        self.guard(r)
    }

    pub(crate) fn open_deferred(&mut self, step: &str, m: &[AuthMatrixShare], masked: bool) -> Result<OpenedMatrix> {
        self.check_parties(m, step)?;
        let (rows, cols) = m[0].shape();
        Self::check_shape(m, (rows, cols), step)?;
        let ks = self.params.w_ks();
        let w: Vec<AuthMatrixShare> = if masked {
            let masks = self.take(Request::ZeroMask { rows, cols })?;
            m.iter().zip(&masks).map(|(x, z)| x.add(&z[0])).collect::<Result<_>>()?
        } else {
            m.to_vec()
        };
        let sent = w.iter().map(|s| s.vals.resize(ks)).collect();
        let recv = self.net.broadcast_shares(step, sent)?;
        let mut lifted = recv[0].clone();
        for r in &recv[1..] {
            lifted = lifted.add(r)?;
        }
        self.deferred.batch.push(BatchItem {
            step: step.to_string(),
            opened: lifted.clone(),
            macs: w.into_iter().map(|s| s.macs).collect(),
            round: self.net.round(),
        });
        Ok(OpenedMatrix { value: lifted.resize(self.params.k), lifted })
    }

    /// Checks every pending BatchRec opening with one random linear
    /// combination mod 2^(k+s).
    pub fn batch_tag_check(&mut self) -> Result<()> {
        self.live()?;
        let r = self.batch_tag_check_inner();
        self.guard(r)
    }

    fn batch_tag_check_inner(&mut self) -> Result<()> {
        if self.deferred.batch.is_empty() {
            return Ok(());
        }
        let items = std::mem::take(&mut self.deferred.batch);
        let total: usize = items.iter().map(|i| i.opened.data().len()).sum();
        let newest = items.iter().map(|i| i.round).max().unwrap_or(0);
        let (chi, coin_round) = self.coin("batch_check", total, 1)?;
        self.note_freshness("batch_check", newest, coin_round)?;
        let ks = self.params.w_ks();
        let chi = chi.resize(ks);
        let items = &items;
        let chi = &chi;
        let cs = self.local(|p| {
            let mut acc = RElem::zero(ks);
            let mut at = 0;
            let mut muls = 0u64;
            for item in items {
                let macs = &item.macs[p.index];
                for (w, mac) in item.opened.data().iter().zip(macs.data()) {
                    let t = mac.resize(ks) - RElem::mul_key(&p.key.delta_i, w)?;
                    acc += chi.data()[at] * t;
                    muls += 2;
                    at += 1;
                }
            }
            p.count("batch_check", MulPath::Tag, muls);
            Ok(acc)
        })?;
        let sum = self.commit_reveal_sum("batch_check.cs", cs, ks)?;
        if !sum.is_zero() {
            return Err(Error::tag_mismatch("batch_check.cs"));
        }
        Ok(())
    }

    /// Runs all deferred checks, then opens `m` (checked) and returns it mod 2^k.
    pub fn reveal(&mut self, m: &[AuthMatrixShare]) -> Result<RMatrix> {
        self.flush()?;
        let r = self.open_deferred("output.W", m, false).and_then(|o| {
            self.batch_tag_check_inner()?;
            Ok(o.value)
        });
        self.guard(r)
    }
}

#[cfg(all(test, feature = "oracle"))]
mod tests {
    use crate::dealer::{Dealer, Request};
    use crate::error::{AbortKind, Error};
    use crate::protocol::{Session, SessionConfig};
    use crate::ring::{RElem, RingParams};
    use crate::transport::{AdversarySpec, ErrorSpec};

    fn session(p: RingParams, n: usize, seed: u64, plan: &[Request], adv: AdversarySpec) -> (Dealer, Session) {
        let mut d = Dealer::from_seed_u64(p, n, seed).unwrap();
        let m = d.provision(plan).unwrap();
        let s = Session::new(m, SessionConfig { adversary: adv, seed, ..Default::default() }).unwrap();
        (d, s)
    }

    #[test]
    fn open_single_honest() {
        let p = RingParams::k64();
        let (mut d, mut s) = session(p, 3, 1, &[Request::OpenMask], AdversarySpec::honest());
        let x = d.auth_value(RElem::from_u64(42, 64));
        assert_eq!(s.open_single(&x).unwrap().low_u64(), 42);
        assert!(s.open_single(&x).is_err(), "mask consumed");
    }

    #[test]
    fn open_single_tampered_mostly_aborts() {
        let p = RingParams::new(16, 8, 4).unwrap();
        let mut caught = 0;
        let trials = 5000;
        for t in 0..trials {
            let adv = AdversarySpec::single(2, "open.w", ErrorSpec::RandomNonzero);
            let (mut d, mut s) = session(p, 2, t, &[Request::OpenMask], adv);
            let x = d.auth_value(RElem::from_u64(5, 32));
            match s.open_single(&x) {
                Err(Error::Abort { kind: AbortKind::TagMismatch, .. }) => caught += 1,
                Ok(_) => {}
                Err(e) => panic!("{e}"),
            }
        }
        let rate = 1.0 - caught as f64 / trials as f64;
        let bound = 2f64.powi(-8);
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(rate <= bound + 3.0 * sigma, "acceptance {rate}");
    }

    #[test]
    fn batch_open_value_and_mask() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let (mut d, mut s) = session(p, 2, 4, &[Request::ZeroMask { rows: 2, cols: 2 }], AdversarySpec::honest());
        let x = d.share_signed(2, 2, &[1, -1, 300, 7]).unwrap();
        let o = s.batch_open("matmul.E", &x).unwrap();
        let vals: Vec<i128> = o.value.data().iter().map(|e| e.to_i128()).collect();
        assert_eq!(vals, vec![1, -1, 300, 7]);
        assert_eq!(o.lifted.resize(p.k), o.value);
        assert_eq!(s.comm_log().get("matmul.E", 1).elements, 4);
        assert_eq!(s.deferred().pending_batch(), 1);
        s.batch_tag_check().unwrap();
        assert_eq!(s.deferred().pending_batch(), 0);
    }

    #[test]
    fn batch_check_catches_cs_equivocation() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let adv = AdversarySpec::single(1, "batch_check.cs", ErrorSpec::Equivocate);
        let (mut d, mut s) = session(p, 3, 5, &[Request::ZeroMask { rows: 1, cols: 3 }], adv);
        let x = d.share_signed(1, 3, &[1, 2, 3]).unwrap();
        s.batch_open("matmul.E", &x).unwrap();
        let err = s.batch_tag_check().unwrap_err();
        assert!(matches!(err, Error::Abort { kind: AbortKind::Equivocation, culprit: Some(1), .. }));
        assert!(s.is_aborted());
        assert!(s.flush().is_err());
    }

    #[test]
    fn batch_check_catches_shifted_cs() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let adv = AdversarySpec::single(2, "batch_check.cs", ErrorSpec::RandomNonzero);
        let (mut d, mut s) = session(p, 2, 6, &[Request::ZeroMask { rows: 1, cols: 1 }], adv);
        let x = d.share_signed(1, 1, &[9]).unwrap();
        s.batch_open("matmul.E", &x).unwrap();
        assert!(matches!(s.batch_tag_check(), Err(Error::Abort { kind: AbortKind::TagMismatch, .. })));
    }

    #[test]
    fn reveal_flushes_first() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let (mut d, mut s) = session(p, 2, 7, &[Request::ZeroMask { rows: 1, cols: 2 }], AdversarySpec::honest());
        let x = d.share_signed(1, 2, &[4, -5]).unwrap();
        s.batch_open("matmul.E", &x).unwrap();
        let out = s.reveal(&x).unwrap();
        assert_eq!(out.get(0, 1).to_i128(), -5);
        assert!(s.deferred().is_empty());
        let f = s.freshness_log();
        assert!(f.iter().all(|r| r.coin_round > r.covered_round));
    }
}
