//! SPDZ2k matrix product with Beaver triples, and probabilistic truncation.

use super::Session;
use crate::dealer::Request;
use crate::error::Result;
use crate::metrics::{MulPath, Protocol};
use crate::sharing::{add_public, AuthMatrixShare};

/// Material and openings of one Beaver product, as seen by every party.
pub(crate) struct BeaverOpen {
    /// parts[party] = [A, B, C]
    pub parts: Vec<Vec<AuthMatrixShare>>,
    /// X - A and Y - B, mod 2^(k+s), resized to the share ring.
    pub e: crate::ring::RMatrix,
    pub u: crate::ring::RMatrix,
}

impl Session {
    /// Takes a triple and opens E = X - A and U = Y - B through BatchRec.
    pub(crate) fn beaver_open(&mut self, label: &str, x: &[AuthMatrixShare], y: &[AuthMatrixShare]) -> Result<BeaverOpen> {
        self.check_parties(x, label)?;
        self.check_parties(y, label)?;
        let (t1, t2) = x[0].shape();
        let t3 = y[0].cols();
        Self::check_shape(x, (t1, t2), label)?;
        Self::check_shape(y, (t2, t3), label)?;
        let parts = self.take(Request::Triple { t1, t2, t3 })?;
        let xa = x.iter().zip(&parts).map(|(xi, p)| xi.sub(&p[0])).collect::<Result<Vec<_>>>()?;
        let yb = y.iter().zip(&parts).map(|(yi, p)| yi.sub(&p[1])).collect::<Result<Vec<_>>>()?;
        let w = self.share_width();
        let e = self.open_deferred(&format!("{label}.E"), &xa, true)?.lifted.resize(w);
        let u = self.open_deferred(&format!("{label}.U"), &yb, true)?.lifted.resize(w);
        Ok(BeaverOpen { parts, e, u })
    }

    /// Authenticated product Z = X * Y (mod 2^(k+s) on values, exact MACs).
    pub fn matmul_spdz2k(&mut self, x: &[AuthMatrixShare], y: &[AuthMatrixShare]) -> Result<Vec<AuthMatrixShare>> {
        self.live()?;
        let r = self.matmul_inner(x, y).and_then(|z| {
            self.after_op()?;
            Ok(z)
        });
        self.guard(r)
    }

    fn matmul_inner(&mut self, x: &[AuthMatrixShare], y: &[AuthMatrixShare]) -> Result<Vec<AuthMatrixShare>> {
        let b = self.beaver_open("matmul", x, y)?;
        let (parts, e, u) = (&b.parts, &b.e, &b.u);
        self.local(|p| {
            let [a, bb, c] = &parts[p.index][..] else { unreachable!("triple has three parts") };
            let (mut tag, mut val) = (0u64, 0u64);
            let vals = c.vals.add(&e.matmul(&bb.vals, &mut val)?)?.add(&a.vals.matmul(u, &mut val)?)?;
            let eu = e.matmul(u, &mut tag)?;
            let macs = c.macs.add(&e.matmul(&bb.macs, &mut tag)?)?.add(&a.macs.matmul(u, &mut tag)?)?;
            let z = AuthMatrixShare::new(vals, macs)?;
            let z = add_public(&z, &eu, &p.key, p.index, &mut tag)?;
            p.count("matmul", MulPath::Tag, tag);
            p.count("matmul", MulPath::Value, val);
            Ok(z)
        })
    }

    /// Truncation by 2^f with a dealer pair (R, R^f). D = M - R is opened
    /// through BatchRec (R already masks it) and R^f + D/2^f is returned.
    pub fn truncate(&mut self, m: &[AuthMatrixShare]) -> Result<Vec<AuthMatrixShare>> {
        self.live()?;
        let r = self.truncate_inner(m).and_then(|z| {
            self.after_op()?;
            Ok(z)
        });
        self.guard(r)
    }

    fn truncate_inner(&mut self, m: &[AuthMatrixShare]) -> Result<Vec<AuthMatrixShare>> {
        self.check_parties(m, "truncate")?;
        let (rows, cols) = m[0].shape();
        Self::check_shape(m, (rows, cols), "truncate")?;
        let pair = self.take(Request::TruncPair { rows, cols })?;
        let d = m.iter().zip(&pair).map(|(mi, p)| mi.sub(&p[0])).collect::<Result<Vec<_>>>()?;
        let opened = self.open_deferred("truncate.D", &d, false)?;
        let df = opened.lifted.shift_down(self.params.f).resize(self.share_width());
        let (pair, df) = (&pair, &df);
        self.local(|p| {
            let mut tag = 0;
            let z = add_public(&pair[p.index][1], df, &p.key, p.index, &mut tag)?;
            p.count("truncate", MulPath::Tag, tag);
            Ok(z)
        })
    }

    /// Product followed by truncation, with either protocol. Both consume the
    /// material in [`crate::dealer::plan_matmul_trunc`].
    pub fn matmul_trunc(
        &mut self,
        x: &[AuthMatrixShare],
        y: &[AuthMatrixShare],
        protocol: Protocol,
    ) -> Result<Vec<AuthMatrixShare>> {
        match protocol {
            Protocol::Baseline => {
                let z = self.matmul_spdz2k(x, y)?;
                self.truncate(&z)
            }
            Protocol::CompactTag => self.compact_matmul(x, y),
        }
    }
}

#[cfg(all(test, feature = "oracle"))]
mod tests {
    use crate::dealer::{plan_matmul_trunc, Dealer, Request};
    use crate::metrics::{formula_baseline_tag, Protocol};
    use crate::oracle::{check_mac_invariant, reconstruct_all};
    use crate::protocol::{Session, SessionConfig};
    use crate::ring::RingParams;

    fn plain_matmul(a: &[i128], b: &[i128], t1: usize, t2: usize, t3: usize) -> Vec<i128> {
        let mut out = vec![0i128; t1 * t3];
        for i in 0..t1 {
            for j in 0..t3 {
                out[i * t3 + j] = (0..t2).map(|t| a[i * t2 + t] * b[t * t3 + j]).sum();
            }
        }
        out
    }

    #[test]
    fn product_matches_plaintext() {
        let p = RingParams::new(32, 16, 8).unwrap();
        let mut d = Dealer::from_seed_u64(p, 3, 11).unwrap();
        let m = d.provision(&[Request::Triple { t1: 2, t2: 3, t3: 2 }, Request::ZeroMask { rows: 2, cols: 3 }, Request::ZeroMask { rows: 3, cols: 2 }]).unwrap();
        let a = [1, -2, 3, 4, 5, -6];
        let b = [7, 8, -9, 10, 11, 12];
        let x = d.share_signed(2, 3, &a).unwrap();
        let y = d.share_signed(3, 2, &b).unwrap();
        let mut s = Session::new(m, SessionConfig::default()).unwrap();
        let z = s.matmul_spdz2k(&x, &y).unwrap();
        check_mac_invariant(&z, d.keys()).unwrap();
        assert_eq!(reconstruct_all(&z, &p).unwrap().values, plain_matmul(&a, &b, 2, 3, 2));
        s.flush().unwrap();
        let tally = s.counter(0).get("matmul");
        assert_eq!(tally.tag, formula_baseline_tag(2, 3, 2));
        assert_eq!(tally.value, 2 * 12);
    }

    #[test]
    fn truncation_within_one() {
        let p = RingParams::new(64, 16, 8).unwrap();
        for seed in 0..20 {
            let mut d = Dealer::from_seed_u64(p, 2, seed).unwrap();
            let m = d.provision(&plan_matmul_trunc(2, 2, 2)).unwrap();
            let a = [300, -200, 1000, 7];
            let b = [-5000, 42, 9, -256];
            let x = d.share_signed(2, 2, &a).unwrap();
            let y = d.share_signed(2, 2, &b).unwrap();
            let mut s = Session::new(m, SessionConfig { seed, ..Default::default() }).unwrap();
            let z = s.matmul_trunc(&x, &y, Protocol::Baseline).unwrap();
            check_mac_invariant(&z, d.keys()).unwrap();
            let got = reconstruct_all(&z, &p).unwrap().values;
            for (g, w) in got.iter().zip(plain_matmul(&a, &b, 2, 2, 2)) {
                let want = w.div_euclid(256);
                assert!((g - want).abs() <= 1, "{g} vs {want}");
            }
            s.flush().unwrap();
            assert_eq!(s.consumption_log(), &plan_matmul_trunc(2, 2, 2)[..]);
        }
    }
}
