//! Optimistic tags, truncation with optimistic tags, and the compact matrix
//! product whose tag work scales with the matrix sides instead of the cube.

use super::{CompactItem, OpenedMatrix, Session};
use crate::dealer::Request;
use crate::error::{Error, Result};
use crate::metrics::MulPath;
use crate::ring::{RElem, RMatrix};
use crate::sharing::AuthMatrixShare;

/// M * chi in `width`: a T1 x T3 matrix folded into a T1 x 1 column.
pub fn compress(m: &RMatrix, chi: &RMatrix, width: u32, muls: &mut u64) -> Result<RMatrix> {
    m.resize(width).matvec(&chi.resize(width), muls)
}

/// Result of [`Session::opt_mac`].
#[derive(Clone, Debug)]
pub struct OptMacOutput {
    /// Value shares of Z with MAC shares mac(R) + delta_i * D.
    pub m: Vec<AuthMatrixShare>,
    /// D = Z - R, opened at full share width.
    pub d: OpenedMatrix,
}

/// Result of [`Session::opt_mac_trunc`].
#[derive(Clone, Debug)]
pub struct OptMacTruncOutput {
    /// R^f + D / 2^f, authenticated through mac(R^f) + delta_i * D / 2^f.
    pub zf: Vec<AuthMatrixShare>,
    pub d: OpenedMatrix,
}

impl Session {
    /// Opens D = Z - R for unauthenticated shares Z and a random
    /// authenticated R, at full share width, with no check.
    fn open_optimistic(&mut self, step: &str, z: &[RMatrix], r: &[&AuthMatrixShare]) -> Result<OpenedMatrix> {
        self.check_parties(z, step)?;
        let shape = r[0].shape();
        if let Some(bad) = z.iter().find(|m| m.shape() != shape) {
            return Err(Error::ShapeMismatch(format!("{step}: {:?} vs {:?}", bad.shape(), shape)));
        }
        let sent = z.iter().zip(r).map(|(zi, ri)| zi.sub(&ri.vals)).collect::<Result<Vec<_>>>()?;
        let recv = self.net.broadcast_shares(step, sent)?;
        let mut d = recv[0].clone();
        for m in &recv[1..] {
            d = d.add(m)?;
        }
        Ok(OpenedMatrix { value: d.resize(self.params.k), lifted: d })
    }

    /// Authenticates additively shared Z by opening Z - R. The value shares
    /// stay those of Z, so a wrong D is caught when the output is opened;
    /// nothing is checked here.
    pub fn opt_mac(&mut self, z: &[RMatrix]) -> Result<OptMacOutput> {
        self.live()?;
        let r = self.opt_mac_inner(z);
        self.guard(r)
    }

    fn opt_mac_inner(&mut self, z: &[RMatrix]) -> Result<OptMacOutput> {
        self.check_parties(z, "optmac")?;
        let (rows, cols) = z[0].shape();
        let rand = self.take(Request::RandomAuth { rows, cols })?;
        let r: Vec<&AuthMatrixShare> = rand.iter().map(|p| &p[0]).collect();
        let d = self.open_optimistic("optmac.D", z, &r)?;
        let (dl, r) = (&d.lifted, &r);
        let m = self.local(|p| {
            let mut tag = 0;
            let macs = r[p.index].macs.add(&dl.scale(&p.key.delta_i, &mut tag)?)?;
            p.count("optmac", MulPath::Tag, tag);
            AuthMatrixShare::new(z[p.index].resize(dl.width()), macs)
        })?;
        Ok(OptMacOutput { m, d })
    }

    /// Truncates additively shared Z by 2^f and authenticates the result
    /// in one optimistic opening of D = Z - R. Unchecked on its own;
    /// [`Session::compact_matmul`] adds the compressed check.
    pub fn opt_mac_trunc(&mut self, z: &[RMatrix]) -> Result<OptMacTruncOutput> {
        self.live()?;
        let r = self.check_parties(z, "optmac_trunc").and_then(|_| {
            let (rows, cols) = z[0].shape();
            let pair = self.take(Request::TruncPair { rows, cols })?;
            self.opt_mac_trunc_with("optmac_trunc", z, &pair)
        });
        self.guard(r)
    }

    /// `pair[party] = [R, R^f]`. Counts under `label`, broadcasts as `label.D`.
    pub(crate) fn opt_mac_trunc_with(
        &mut self,
        label: &str,
        z: &[RMatrix],
        pair: &[Vec<AuthMatrixShare>],
    ) -> Result<OptMacTruncOutput> {
        let r: Vec<&AuthMatrixShare> = pair.iter().map(|p| &p[0]).collect();
        let d = self.open_optimistic(&format!("{label}.D"), z, &r)?;
        let df = d.lifted.shift_down(self.params.f);
        let df = &df;
        let zf = self.local(|p| {
            let mut tag = 0;
            let rf = &pair[p.index][1];
            let vals = if p.index == 0 { rf.vals.add(df)? } else { rf.vals.clone() };
            let macs = rf.macs.add(&df.scale(&p.key.delta_i, &mut tag)?)?;
            p.count(label, MulPath::Tag, tag);
            AuthMatrixShare::new(vals, macs)
        })?;
        Ok(OptMacTruncOutput { zf, d })
    }

    /// Multiply then truncate. E and U go through BatchRec; the product gets
    /// its tags from one optimistic opening, checked later through a
    /// compressed checksum over the share ring.
    pub fn compact_matmul(&mut self, x: &[AuthMatrixShare], y: &[AuthMatrixShare]) -> Result<Vec<AuthMatrixShare>> {
        self.live()?;
        let r = self.compact_inner(x, y).and_then(|z| {
            self.after_op()?;
            Ok(z)
        });
        self.guard(r)
    }

    fn compact_inner(&mut self, x: &[AuthMatrixShare], y: &[AuthMatrixShare]) -> Result<Vec<AuthMatrixShare>> {
        let b = self.beaver_open("compact", x, y)?;
        let (t1, t3) = (x[0].rows(), y[0].cols());
        let pair = self.take(Request::TruncPair { rows: t1, cols: t3 })?;
        let (parts, e, u) = (&b.parts, &b.e, &b.u);
        let z = self.local(|p| {
            let [a, bb, c] = &parts[p.index][..] else { unreachable!("triple has three parts") };
            let mut val = 0;
            let mut z = c.vals.add(&e.matmul(&bb.vals, &mut val)?)?.add(&a.vals.matmul(u, &mut val)?)?;
            if p.index == 0 {
                z = z.add(&e.matmul(u, &mut val)?)?;
            }
            p.count("compact", MulPath::Value, val);
            Ok(z)
        })?;
        let out = self.opt_mac_trunc_with("compact", &z, &pair)?;
        let d_round = self.net.round();
        let (chi, chi_round) = self.coin("compact", t3, 1)?;
        self.note_freshness("compact", d_round, chi_round)?;

        let w = self.share_width();
        let (chi, dl, pair) = (&chi, &out.d.lifted, &pair);
        let folded = self.local(|p| {
            let [a, bb, c] = &parts[p.index][..] else { unreachable!("triple has three parts") };
            let mut tag = 0;
            let mac_c = compress(&c.macs, chi, w, &mut tag)?;
            let mac_r = compress(&pair[p.index][0].macs, chi, w, &mut tag)?;
            let d_prime = compress(dl, chi, w, &mut tag)?;
            let mac_b = compress(&bb.macs, chi, w, &mut tag)?;
            let u_prime = compress(u, chi, w, &mut tag)?;
            let eu = e.matvec(&u_prime, &mut tag)?;
            let mac_z = mac_c
                .add(&e.matvec(&mac_b, &mut tag)?)?
                .add(&a.macs.matvec(&u_prime, &mut tag)?)?
                .add(&eu.scale(&p.key.delta_i, &mut tag)?)?;
            p.count("compact", MulPath::Tag, tag);
            Ok((d_prime, mac_z.sub(&mac_r)?))
        })?;
        let d_prime = folded[0].0.clone();
        self.deferred.compact.push(CompactItem {
            step: "compact.D".to_string(),
            d_prime,
            mac_d_prime: folded.into_iter().map(|(_, m)| m).collect(),
            d_round,
            chi_round,
        });
        Ok(out.zf)
    }

    /// Checks every pending compact item: with fresh combiners c,
    /// sum_j c_j (delta_i * D'_j - mac(D')_ij) must vanish mod 2^(k+2s).
    pub fn compact_tag_check(&mut self) -> Result<()> {
        self.live()?;
        let r = self.compact_check_inner();
        self.guard(r)
    }

    fn compact_check_inner(&mut self) -> Result<()> {
        if self.deferred.compact.is_empty() {
            return Ok(());
        }
        let items = std::mem::take(&mut self.deferred.compact);
        let total: usize = items.iter().map(|i| i.d_prime.rows()).sum();
        let newest = items.iter().map(|i| i.chi_round.max(i.d_round)).max().unwrap_or(0);
        let (chi, coin_round) = self.coin("compact_check", total, 1)?;
        self.note_freshness("compact_check", newest, coin_round)?;
        let w = self.share_width();
        let chi = chi.resize(w);
        let (items, chi) = (&items, &chi);
        let cs = self.local(|p| {
            let mut acc = RElem::zero(w);
            let mut at = 0;
            let mut muls = 0u64;
            for item in items {
                let mac = &item.mac_d_prime[p.index];
                for (d, m) in item.d_prime.data().iter().zip(mac.data()) {
                    let t = RElem::mul_key(&p.key.delta_i, d)?.wrapping_sub(m);
                    acc = acc.wrapping_add(&chi.data()[at].wrapping_mul(&t));
                    muls += 2;
                    at += 1;
                }
            }
            p.count("compact_check", MulPath::Tag, muls);
            Ok(acc)
        })?;
        let sum = self.commit_reveal_sum("compact_check.cs", cs, w)?;
        if !sum.is_zero() {
            return Err(Error::tag_mismatch("compact_check.cs"));
        }
        Ok(())
    }
}

#[cfg(all(test, feature = "oracle"))]
mod tests {
    use crate::dealer::{plan_matmul_trunc, Dealer, Request};
    use crate::error::{AbortKind, Error};
    use crate::metrics::{formula_compact_tag, Protocol};
    use crate::oracle::{check_mac_invariant, reconstruct_all, reconstruct_raw};
    use crate::protocol::{Session, SessionConfig};
    use crate::ring::RingParams;
    use crate::transport::{AdversarySpec, ErrorSpec};

    fn setup(p: RingParams, n: usize, seed: u64, adv: AdversarySpec) -> (Dealer, Session) {
        let mut d = Dealer::from_seed_u64(p, n, seed).unwrap();
        let m = d.provision(&plan_matmul_trunc(3, 4, 2)).unwrap();
        let s = Session::new(m, SessionConfig { adversary: adv, seed, ..Default::default() }).unwrap();
        (d, s)
    }

    #[test]
    fn compact_equals_baseline_bitwise() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let a: Vec<i128> = (0..12).map(|i| (i * 37 - 200) as i128).collect();
        let b: Vec<i128> = (0..8).map(|i| (500 - i * 91) as i128).collect();
        let mut outs = Vec::new();
        for proto in [Protocol::Baseline, Protocol::CompactTag] {
            let (mut d, mut s) = setup(p, 3, 9, AdversarySpec::honest());
            let x = d.share_signed(3, 4, &a).unwrap();
            let y = d.share_signed(4, 2, &b).unwrap();
            let z = s.matmul_trunc(&x, &y, proto).unwrap();
            check_mac_invariant(&z, d.keys()).unwrap();
            s.flush().unwrap();
            assert_eq!(s.consumption_log(), &plan_matmul_trunc(3, 4, 2)[..]);
            outs.push(reconstruct_all(&z, &p).unwrap().values);
        }
        assert_eq!(outs[0], outs[1]);
    }

    #[test]
    fn compact_counts_match_formula() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let (mut d, mut s) = setup(p, 2, 3, AdversarySpec::honest());
        let x = d.share_signed(3, 4, &[1; 12]).unwrap();
        let y = d.share_signed(4, 2, &[1; 8]).unwrap();
        s.compact_matmul(&x, &y).unwrap();
        for i in 0..2 {
            assert_eq!(s.counter(i).get("compact").tag, formula_compact_tag(3, 4, 2));
        }
        assert_eq!(s.counter(0).get("compact").value, 3 * 24);
        assert_eq!(s.counter(1).get("compact").value, 2 * 24);
        assert_eq!(s.deferred().pending_compact(), 1);
        s.flush().unwrap();
        assert_eq!(s.counter(0).get("compact_check").tag, 2 * 3);
    }

    #[test]
    fn tampered_d_is_caught() {
        let p = RingParams::new(32, 16, 8).unwrap();
        for seed in 0..20 {
            let adv = AdversarySpec::single(2, "compact.D", ErrorSpec::RandomSingleEntry);
            let (mut d, mut s) = setup(p, 2, seed, adv);
            let x = d.share_signed(3, 4, &[3; 12]).unwrap();
            let y = d.share_signed(4, 2, &[-2; 8]).unwrap();
            s.compact_matmul(&x, &y).unwrap();
            match s.flush() {
                Err(Error::Abort { kind: AbortKind::TagMismatch, step, .. }) => assert_eq!(step, "compact_check.cs"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn opt_mac_caught_at_reveal() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let adv = AdversarySpec::single(1, "optmac.D", ErrorSpec::TopBit);
        let mut d = Dealer::from_seed_u64(p, 2, 1).unwrap();
        let m = d.provision(&[Request::RandomAuth { rows: 2, cols: 2 }]).unwrap();
        let mut s = Session::new(m, SessionConfig { adversary: adv, ..Default::default() }).unwrap();
        let x = d.share_signed(2, 2, &[1, 2, 3, 4]).unwrap();
        let z: Vec<_> = x.iter().map(|s| s.vals.clone()).collect();
        let out = s.opt_mac(&z).unwrap();
        assert_eq!(reconstruct_raw(&out.m).unwrap().resize(p.k), reconstruct_raw(&x).unwrap().resize(p.k));
        assert!(s.reveal(&out.m).is_err());
    }

    #[test]
    fn opt_mac_honest_authenticates() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let mut d = Dealer::from_seed_u64(p, 3, 2).unwrap();
        let m = d
            .provision(&[Request::RandomAuth { rows: 1, cols: 3 }, Request::TruncPair { rows: 1, cols: 3 }])
            .unwrap();
        let mut s = Session::new(m, SessionConfig::default()).unwrap();
        let x = d.share_signed(1, 3, &[1000, -1000, 5]).unwrap();
        let z: Vec<_> = x.iter().map(|s| s.vals.clone()).collect();
        let out = s.opt_mac(&z).unwrap();
        check_mac_invariant(&out.m, d.keys()).unwrap();
        let t = s.opt_mac_trunc(&z).unwrap();
        check_mac_invariant(&t.zf, d.keys()).unwrap();
        let v = reconstruct_all(&t.zf, &p).unwrap().values;
        for (g, w) in v.iter().zip([1000i128, -1000, 5]) {
            assert!((g - w.div_euclid(256)).abs() <= 1);
        }
        assert_eq!(s.counter(0).get("optmac").tag, 3);
    }
}
