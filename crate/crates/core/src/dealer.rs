//! Trusted dealer standing in for the offline phase.
//!
//! All authenticated material lives in the share ring Z_{2^(k+2s)}. The
//! global key is the plain integer sum of the s-bit key shares, so public
//! terms scaled by each delta_i add up exactly.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::{RElem, RMatrix, RingParams};
use crate::sharing::{AuthMatrixShare, AuthShare, MacKeyShare};

/// Deterministic stream expanded from a 64-byte seed.
pub struct DealerRng(ChaCha20Rng);

impl DealerRng {
    pub fn from_seed(seed: &[u8; 64]) -> Self {
        let digest: [u8; 32] = Sha256::digest(seed).into();
        DealerRng(ChaCha20Rng::from_seed(digest))
    }

    pub fn from_u64(seed: u64) -> Self {
        let mut s = [0u8; 64];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        s[8..16].copy_from_slice(b"dealer00");
        Self::from_seed(&s)
    }
}

impl RngCore for DealerRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Kinds of preprocessed material, with shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Request {
    Triple { t1: usize, t2: usize, t3: usize },
    TruncPair { rows: usize, cols: usize },
    ZeroMask { rows: usize, cols: usize },
    OpenMask,
    RandomAuth { rows: usize, cols: usize },
}

impl Request {
    fn tag(&self) -> u8 {
        match self {
            Request::Triple { .. } => 1,
            Request::TruncPair { .. } => 2,
            Request::ZeroMask { .. } => 3,
            Request::OpenMask => 4,
            Request::RandomAuth { .. } => 5,
        }
    }

    fn dims(&self) -> [usize; 3] {
        match *self {
            Request::Triple { t1, t2, t3 } => [t1, t2, t3],
            Request::TruncPair { rows, cols } | Request::ZeroMask { rows, cols } | Request::RandomAuth { rows, cols } => {
                [rows, cols, 0]
            }
            Request::OpenMask => [0, 0, 0],
        }
    }

    fn from_tag(tag: u8, d: [usize; 3]) -> Result<Request> {
        Ok(match tag {
            1 => Request::Triple { t1: d[0], t2: d[1], t3: d[2] },
            2 => Request::TruncPair { rows: d[0], cols: d[1] },
            3 => Request::ZeroMask { rows: d[0], cols: d[1] },
            4 => Request::OpenMask,
            5 => Request::RandomAuth { rows: d[0], cols: d[1] },
            t => return Err(Error::Format(format!("unknown material tag {t}"))),
        })
    }
}

/// Material for one multiply-then-truncate of shape (t1, t2, t3). The
/// baseline pipeline and the compact one consume exactly this list.
pub fn plan_matmul_trunc(t1: usize, t2: usize, t3: usize) -> Vec<Request> {
    vec![
        Request::Triple { t1, t2, t3 },
        Request::ZeroMask { rows: t1, cols: t2 },
        Request::ZeroMask { rows: t2, cols: t3 },
        Request::TruncPair { rows: t1, cols: t3 },
    ]
}

/// One preprocessed item: `parts[party]` holds that party's matrices
/// (A, B, C for a triple; R, R^f for a pair; a single matrix otherwise).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaterialItem {
    pub request: Request,
    pub parts: Vec<Vec<AuthMatrixShare>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DealerMaterial {
    pub params: RingParams,
    pub key_shares: Vec<MacKeyShare>,
    pub items: Vec<MaterialItem>,
}

/// What one party holds after distribution.
#[derive(Clone, Debug)]
pub struct PartyStore {
    pub party: usize,
    pub key: MacKeyShare,
    items: VecDeque<(Request, Vec<AuthMatrixShare>)>,
}

impl PartyStore {
    /// Removes the first item matching `req`.
    pub fn take(&mut self, req: Request) -> Result<Vec<AuthMatrixShare>> {
        let pos = self
            .items
            .iter()
            .position(|(r, _)| *r == req)
            .ok_or_else(|| Error::MissingMaterial(format!("{req:?} for party {}", self.party + 1)))?;
        Ok(self.items.remove(pos).expect("position is valid").1)
    }

    pub fn remaining(&self) -> usize {
        self.items.len()
    }

    pub fn push(&mut self, req: Request, parts: Vec<AuthMatrixShare>) {
        self.items.push_back((req, parts));
    }

    pub fn pop_front(&mut self) -> Option<(Request, Vec<AuthMatrixShare>)> {
        self.items.pop_front()
    }
}

pub struct Dealer {
    params: RingParams,
    n: usize,
    rng: DealerRng,
    keys: Vec<MacKeyShare>,
    /// Integer sum of the key shares, in the share ring.
    delta: RElem,
}

const MAGIC: &[u8; 4] = b"CTDM";
const FORMAT_VERSION: u32 = 1;

impl Dealer {
    pub fn new(params: RingParams, n: usize, seed: &[u8; 64]) -> Result<Self> {
        Self::with_rng(params, n, DealerRng::from_seed(seed))
    }

    pub fn from_seed_u64(params: RingParams, n: usize, seed: u64) -> Result<Self> {
        Self::with_rng(params, n, DealerRng::from_u64(seed))
    }

    fn with_rng(params: RingParams, n: usize, rng: DealerRng) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewParties(n));
        }
        let mut d = Dealer { params, n, rng, keys: Vec::new(), delta: RElem::zero(params.w_k2s()) };
        d.init_keys();
        Ok(d)
    }

    /// Fresh uniform key shares in Z_{2^s}.
    pub fn init_keys(&mut self) -> Vec<MacKeyShare> {
        let s = self.params.s;
        self.keys = (0..self.n)
            .map(|_| MacKeyShare { delta_i: RElem::random(&mut self.rng, s) })
            .collect();
        self.delta = self
            .keys
            .iter()
            .fold(RElem::zero(self.params.w_k2s()), |a, k| a + k.delta_i.resize(self.params.w_k2s()));
        self.keys.clone()
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    pub fn keys(&self) -> &[MacKeyShare] {
        &self.keys
    }

    /// Global key as used by the MAC relation (integer sum of shares).
    pub fn delta(&self) -> RElem {
        self.delta
    }

    /// Global key reduced mod 2^s.
    pub fn delta_mod_s(&self) -> RElem {
        self.delta.resize(self.params.s)
    }

    fn w(&self) -> u32 {
        self.params.w_k2s()
    }

    fn split(&mut self, v: RElem) -> Vec<RElem> {
        let mut out: Vec<RElem> = (0..self.n - 1).map(|_| RElem::random(&mut self.rng, v.width())).collect();
        let partial = out.iter().fold(RElem::zero(v.width()), |a, x| a + *x);
        out.push(v - partial);
        out
    }

    /// Shares of v (any width up to the share ring) with fresh MAC shares.
    pub fn auth_value(&mut self, v: RElem) -> Vec<AuthShare> {
        let v = v.resize(self.w());
        let vals = self.split(v);
        let macs = self.split(self.delta * v);
        vals.into_iter().zip(macs).map(|(val, mac)| AuthShare { val, mac }).collect()
    }

    /// Authenticates the value whose shares are given.
    pub fn auth_shares(&mut self, shares: &[RElem]) -> Result<Vec<AuthShare>> {
        if shares.len() != self.n {
            return Err(Error::MissingParty(shares.len() + 1));
        }
        let w = self.w();
        let v = shares.iter().fold(RElem::zero(w), |a, x| a + x.resize(w));
        let macs = self.split(self.delta * v);
        Ok(shares.iter().zip(macs).map(|(val, mac)| AuthShare { val: val.resize(w), mac }).collect())
    }

    /// Authenticated sharing of a whole matrix (entries resized to the share ring).
    pub fn auth_matrix(&mut self, m: &RMatrix) -> Vec<AuthMatrixShare> {
        let (rows, cols) = m.shape();
        let mut vals = vec![Vec::with_capacity(rows * cols); self.n];
        let mut macs = vec![Vec::with_capacity(rows * cols); self.n];
        for e in m.data() {
            for (p, s) in self.auth_value(*e).into_iter().enumerate() {
                vals[p].push(s.val);
                macs[p].push(s.mac);
            }
        }
        vals.into_iter()
            .zip(macs)
            .map(|(v, m)| AuthMatrixShare {
                vals: RMatrix::new(rows, cols, v).expect("shape"),
                macs: RMatrix::new(rows, cols, m).expect("shape"),
            })
            .collect()
    }

    /// Input sharing of signed integers; the value is sign-extended into the share ring.
    pub fn share_signed(&mut self, rows: usize, cols: usize, vals: &[i128]) -> Result<Vec<AuthMatrixShare>> {
        let m = RMatrix::from_i128(rows, cols, self.w(), vals)?;
        Ok(self.auth_matrix(&m))
    }

    /// Input sharing of reals in fixed point.
    pub fn share_fixed(&mut self, rows: usize, cols: usize, vals: &[f64]) -> Result<Vec<AuthMatrixShare>> {
        let enc: Vec<i128> = vals
            .iter()
            .map(|x| self.params.encode(*x).map(|e| e.to_i128()))
            .collect::<Result<_>>()?;
        self.share_signed(rows, cols, &enc)
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!("zero dimension in {dims:?}")));
        }
        Ok(())
    }

    /// (A, B, C) with C = A * B in the share ring.
    pub fn beaver_triple(&mut self, t1: usize, t2: usize, t3: usize) -> Result<[Vec<AuthMatrixShare>; 3]> {
        Self::check_dims(&[t1, t2, t3])?;
        let w = self.w();
        let a = RMatrix::random(&mut self.rng, t1, t2, w);
        let b = RMatrix::random(&mut self.rng, t2, t3, w);
        let c = a.matmul(&b, &mut 0)?;
        Ok([self.auth_matrix(&a), self.auth_matrix(&b), self.auth_matrix(&c)])
    }

    /// (R, R^f) with R^f = floor(R / 2^f) on the share-ring representative.
    pub fn trunc_pair(&mut self, rows: usize, cols: usize) -> Result<[Vec<AuthMatrixShare>; 2]> {
        Self::check_dims(&[rows, cols])?;
        let w = self.w();
        let r = RMatrix::random(&mut self.rng, rows, cols, w);
        let rf = r.shift_down(self.params.f);
        Ok([self.auth_matrix(&r), self.auth_matrix(&rf)])
    }

    /// Sharing whose sum is 0 mod 2^(k+s) with uniform bits above k+s.
    pub fn zero_mask(&mut self, rows: usize, cols: usize) -> Result<Vec<AuthMatrixShare>> {
        Self::check_dims(&[rows, cols])?;
        let ks = self.params.w_ks();
        let w = self.w();
        let top = RMatrix::random(&mut self.rng, rows, cols, w).map(|e| e.shift_up(ks));
        Ok(self.auth_matrix(&top))
    }

    /// Uniform r of 2s bits; opening adds 2^k * r to hide the upper bits.
    pub fn open_mask(&mut self) -> Vec<AuthMatrixShare> {
        let w = self.w();
        let r = RElem::random(&mut self.rng, w - self.params.k).resize(w);
        self.auth_matrix(&RMatrix::new(1, 1, vec![r]).expect("1x1"))
    }

    pub fn random_auth(&mut self, rows: usize, cols: usize) -> Result<Vec<AuthMatrixShare>> {
        Self::check_dims(&[rows, cols])?;
        let w = self.w();
        let r = RMatrix::random(&mut self.rng, rows, cols, w);
        Ok(self.auth_matrix(&r))
    }

    pub fn generate(&mut self, req: Request) -> Result<MaterialItem> {
        let per_matrix: Vec<Vec<AuthMatrixShare>> = match req {
            Request::Triple { t1, t2, t3 } => self.beaver_triple(t1, t2, t3)?.into(),
            Request::TruncPair { rows, cols } => self.trunc_pair(rows, cols)?.into(),
            Request::ZeroMask { rows, cols } => vec![self.zero_mask(rows, cols)?],
            Request::OpenMask => vec![self.open_mask()],
            Request::RandomAuth { rows, cols } => vec![self.random_auth(rows, cols)?],
        };
        let mut parts = vec![Vec::new(); self.n];
        for m in per_matrix {
            for (p, s) in m.into_iter().enumerate() {
                parts[p].push(s);
            }
        }
        Ok(MaterialItem { request: req, parts })
    }

    /// Generates everything in `plan`, in order.
    pub fn provision(&mut self, plan: &[Request]) -> Result<DealerMaterial> {
        let items = plan.iter().map(|r| self.generate(*r)).collect::<Result<Vec<_>>>()?;
        Ok(DealerMaterial { params: self.params, key_shares: self.keys.clone(), items })
    }
}

impl DealerMaterial {
    pub fn parties(&self) -> usize {
        self.key_shares.len()
    }

    /// Appends more items (same keys).
    pub fn extend(&mut self, other: DealerMaterial) -> Result<()> {
        if other.key_shares != self.key_shares {
            return Err(Error::MissingMaterial("material produced under different keys".into()));
        }
        self.items.extend(other.items);
        Ok(())
    }

    /// Hands each party its own slice of the material.
    pub fn distribute(self) -> Vec<PartyStore> {
        let mut stores: Vec<PartyStore> = self
            .key_shares
            .iter()
            .enumerate()
            .map(|(p, k)| PartyStore { party: p, key: *k, items: VecDeque::new() })
            .collect();
        for item in self.items {
            for (p, parts) in item.parts.into_iter().enumerate() {
                stores[p].push(item.request, parts);
            }
        }
        stores
    }

    /// Flat binary form: magic, version, then length-prefixed sections of
    /// little-endian fields.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let mut hdr = Vec::new();
        for v in [self.params.k, self.params.s, self.params.f, self.parties() as u32] {
            hdr.extend_from_slice(&v.to_le_bytes());
        }
        for k in &self.key_shares {
            hdr.extend_from_slice(&k.delta_i.to_le_bytes());
        }
        section(&mut out, &hdr);
        let mut body = Vec::new();
        body.extend_from_slice(&(self.items.len() as u64).to_le_bytes());
        for item in &self.items {
            body.push(item.request.tag());
            for d in item.request.dims() {
                body.extend_from_slice(&(d as u64).to_le_bytes());
            }
            body.extend_from_slice(&(item.parts[0].len() as u32).to_le_bytes());
            for party in &item.parts {
                for m in party {
                    put_matrix(&mut body, &m.vals);
                    put_matrix(&mut body, &m.macs);
                }
            }
        }
        section(&mut out, &body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<DealerMaterial> {
        let mut cur = Cursor { b: bytes, at: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let hdr_len = cur.u64()? as usize;
        let mut hdr = Cursor { b: cur.take(hdr_len)?, at: 0 };
        let params = RingParams::new(hdr.u32()?, hdr.u32()?, hdr.u32()?)?;
        let n = hdr.u32()? as usize;
        let key_shares = (0..n)
            .map(|_| {
                let b = hdr.take(params.s.div_ceil(8) as usize)?;
                Ok(MacKeyShare { delta_i: RElem::from_le_bytes(b, params.s)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let body_len = cur.u64()? as usize;
        let mut body = Cursor { b: cur.take(body_len)?, at: 0 };
        let count = body.u64()? as usize;
        let mut items = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let tag = body.take(1)?[0];
            let dims = [body.u64()? as usize, body.u64()? as usize, body.u64()? as usize];
            let request = Request::from_tag(tag, dims)?;
            let per = body.u32()? as usize;
            let mut parts = Vec::with_capacity(n);
            for _ in 0..n {
                let mut mats = Vec::with_capacity(per);
                for _ in 0..per {
                    let vals = get_matrix(&mut body)?;
                    let macs = get_matrix(&mut body)?;
                    mats.push(AuthMatrixShare::new(vals, macs)?);
                }
                parts.push(mats);
            }
            items.push(MaterialItem { request, parts });
        }
        Ok(DealerMaterial { params, key_shares, items })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<DealerMaterial> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

fn section(out: &mut Vec<u8>, body: &[u8]) {
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(body);
}

fn put_matrix(out: &mut Vec<u8>, m: &RMatrix) {
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.extend_from_slice(&m.width().to_le_bytes());
    for e in m.data() {
        out.extend_from_slice(&e.to_le_bytes());
    }
}

fn get_matrix(c: &mut Cursor<'_>) -> Result<RMatrix> {
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let width = c.u32()?;
    if width == 0 || width > crate::ring::MAX_WIDTH {
        return Err(Error::Format(format!("bad width {width}")));
    }
    let nb = width.div_ceil(8) as usize;
    let data = (0..rows * cols)
        .map(|_| RElem::from_le_bytes(c.take(nb)?, width))
        .collect::<Result<Vec<_>>>()?;
    RMatrix::new(rows, cols, data)
}

struct Cursor<'a> {
    b: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.b.len() {
            return Err(Error::Format("truncated material file".into()));
        }
        let s = &self.b[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
