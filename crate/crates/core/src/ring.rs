//! Arithmetic in Z_{2^m} for m up to 192, with fixed-point helpers.
//!
//! Every element carries its modulus width. Mixing widths is an error unless
//! the caller lifts or reduces first.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus width the protocol ever needs (k + 2s with k, s <= 64).
pub const MAX_WIDTH: u32 = 192;

const LIMBS: usize = 4;

/// Ring sizes for one run: message ring k, MAC width s, fraction bits f.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingParams {
    pub k: u32,
    pub s: u32,
    pub f: u32,
}

impl RingParams {
    pub fn new(k: u32, s: u32, f: u32) -> Result<Self> {
        if !(8..=64).contains(&k) {
            return Err(Error::InvalidParams(format!("k={k} must be in 8..=64")));
        }
        if !(1..=64).contains(&s) {
            return Err(Error::InvalidParams(format!("s={s} must be in 1..=64")));
        }
        if f == 0 || f >= k {
            return Err(Error::InvalidParams(format!("f={f} must satisfy 0 < f < k={k}")));
        }
        // Truncation is exact mod 2^k only when the fraction bits fit in the
        // s-bit headroom above the message ring.
        if f > s {
            return Err(Error::InvalidParams(format!("f={f} must not exceed s={s}")));
        }
        Ok(RingParams { k, s, f })
    }

    /// k=32, s=32, f=12.
    pub fn k32() -> Self {
        RingParams { k: 32, s: 32, f: 12 }
    }

    /// k=64, s=64, f=16.
    pub fn k64() -> Self {
        RingParams { k: 64, s: 64, f: 16 }
    }

    /// Width of the ring in which BatchRec openings and checks happen.
    pub fn w_ks(&self) -> u32 {
        self.k + self.s
    }

    /// Width of the verification ring; authenticated shares are held here too.
    pub fn w_k2s(&self) -> u32 {
        self.k + 2 * self.s
    }

    /// s - log2(s+1).
    pub fn sigma(&self) -> f64 {
        self.s as f64 - ((self.s + 1) as f64).log2()
    }

    /// Forgery acceptance bound (s+1)/2^s.
    pub fn soundness_bound(&self) -> f64 {
        (self.s as f64 + 1.0) / 2f64.powi(self.s as i32)
    }

    pub fn encode(&self, x: f64) -> Result<RElem> {
        RElem::encode_fixed(x, self.k, self.f)
    }

    pub fn decode(&self, v: &RElem) -> f64 {
        v.decode_fixed(self.k, self.f)
    }
}

impl fmt::Display for RingParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} s={} f={}", self.k, self.s, self.f)
    }
}

/// A residue mod 2^width, always kept reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RElem {
    width: u32,
    limbs: [u64; LIMBS],
}

#[inline]
fn nlimbs(width: u32) -> usize {
    width.div_ceil(64) as usize
}

#[inline]
fn mask_limbs(l: &mut [u64; LIMBS], width: u32) {
    for (i, limb) in l.iter_mut().enumerate() {
        let lo = 64 * i as u32;
        if width <= lo {
            *limb = 0;
        } else if width < lo + 64 {
            *limb &= (1u64 << (width - lo)) - 1;
        }
    }
}

#[inline]
pub(crate) fn add_raw(a: &[u64; LIMBS], b: &[u64; LIMBS], n: usize) -> [u64; LIMBS] {
    let mut r = [0u64; LIMBS];
    let mut carry = false;
    for i in 0..n {
        let (s1, c1) = a[i].overflowing_add(b[i]);
        let (s2, c2) = s1.overflowing_add(carry as u64);
        r[i] = s2;
        carry = c1 || c2;
    }
    r
}

#[inline]
pub(crate) fn sub_raw(a: &[u64; LIMBS], b: &[u64; LIMBS], n: usize) -> [u64; LIMBS] {
    let mut r = [0u64; LIMBS];
    let mut borrow = false;
    for i in 0..n {
        let (d1, b1) = a[i].overflowing_sub(b[i]);
        let (d2, b2) = d1.overflowing_sub(borrow as u64);
        r[i] = d2;
        borrow = b1 || b2;
    }
    r
}

/// Low n limbs of a*b.
#[inline]
pub(crate) fn mul_raw(a: &[u64; LIMBS], b: &[u64; LIMBS], n: usize) -> [u64; LIMBS] {
    let mut r = [0u64; LIMBS];
    for i in 0..n {
        if a[i] == 0 {
            continue;
        }
        let mut carry: u128 = 0;
        for j in 0..(n - i) {
            let t = a[i] as u128 * b[j] as u128 + r[i + j] as u128 + carry;
            r[i + j] = t as u64;
            carry = t >> 64;
        }
    }
    r
}

impl RElem {
    pub fn zero(width: u32) -> Self {
        debug_assert!(width <= 256);
        RElem { width, limbs: [0; LIMBS] }
    }

    pub fn one(width: u32) -> Self {
        Self::from_u64(1, width)
    }

    pub fn from_u64(v: u64, width: u32) -> Self {
        Self::from_limbs([v, 0, 0, 0], width)
    }

    pub fn from_u128(v: u128, width: u32) -> Self {
        Self::from_limbs([v as u64, (v >> 64) as u64, 0, 0], width)
    }

    /// Two's-complement embedding: negative values wrap modulo 2^width.
    pub fn from_i128(v: i128, width: u32) -> Self {
        let fill = if v < 0 { u64::MAX } else { 0 };
        let u = v as u128;
        Self::from_limbs([u as u64, (u >> 64) as u64, fill, fill], width)
    }

    pub fn from_limbs(mut limbs: [u64; LIMBS], width: u32) -> Self {
        mask_limbs(&mut limbs, width);
        RElem { width, limbs }
    }

    /// 2^e mod 2^width.
    pub fn pow2(e: u32, width: u32) -> Self {
        let mut l = [0u64; LIMBS];
        if e < 256 {
            l[(e / 64) as usize] = 1u64 << (e % 64);
        }
        Self::from_limbs(l, width)
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R, width: u32) -> Self {
        let mut l = [0u64; LIMBS];
        for limb in l.iter_mut().take(nlimbs(width)) {
            *limb = rng.next_u64();
        }
        Self::from_limbs(l, width)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn limbs(&self) -> &[u64; LIMBS] {
        &self.limbs
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    pub fn low_u64(&self) -> u64 {
        self.limbs[0]
    }

    pub fn low_u128(&self) -> u128 {
        self.limbs[0] as u128 | ((self.limbs[1] as u128) << 64)
    }

    /// 2-adic valuation; `width` for zero.
    pub fn trailing_zeros(&self) -> u32 {
        for (i, &l) in self.limbs.iter().enumerate() {
            if l != 0 {
                return (64 * i as u32 + l.trailing_zeros()).min(self.width);
            }
        }
        self.width
    }

    fn same_width(&self, o: &RElem) -> Result<()> {
        if self.width != o.width {
            Err(Error::WidthMismatch(self.width, o.width))
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, o: &RElem) -> Result<RElem> {
        self.same_width(o)?;
        Ok(self.wrapping_add(o))
    }

    pub fn checked_sub(&self, o: &RElem) -> Result<RElem> {
        self.same_width(o)?;
        Ok(self.wrapping_sub(o))
    }

    pub fn neg(&self) -> RElem {
        RElem::zero(self.width).wrapping_sub(self)
    }

    /// Product of equal-width elements.
    pub fn checked_mul(&self, o: &RElem) -> Result<RElem> {
        self.same_width(o)?;
        Ok(self.wrapping_mul(o))
    }

    /// Key-times-share product: a narrower key lifted into the share's ring.
    pub fn mul_key(key: &RElem, x: &RElem) -> Result<RElem> {
        if key.width > x.width {
            return Err(Error::IllegalWidthPairing(key.width, x.width));
        }
        Ok(RElem { width: x.width, limbs: key.limbs }.wrapping_mul(x))
    }

    #[inline]
    pub(crate) fn wrapping_add(&self, o: &RElem) -> RElem {
        debug_assert_eq!(self.width, o.width);
        RElem::from_limbs(add_raw(&self.limbs, &o.limbs, nlimbs(self.width)), self.width)
    }

    #[inline]
    pub(crate) fn wrapping_sub(&self, o: &RElem) -> RElem {
        debug_assert_eq!(self.width, o.width);
        RElem::from_limbs(sub_raw(&self.limbs, &o.limbs, nlimbs(self.width)), self.width)
    }

    #[inline]
    pub(crate) fn wrapping_mul(&self, o: &RElem) -> RElem {
        debug_assert_eq!(self.width, o.width);
        RElem::from_limbs(mul_raw(&self.limbs, &o.limbs, nlimbs(self.width)), self.width)
    }

    /// Same representative in a wider ring.
    pub fn lift(&self, to: u32) -> Result<RElem> {
        if to < self.width {
            return Err(Error::Narrowing { from: self.width, to });
        }
        Ok(RElem { width: to, limbs: self.limbs })
    }

    /// Reduction into a narrower ring.
    pub fn reduce(&self, to: u32) -> Result<RElem> {
        if to > self.width {
            return Err(Error::Widening { from: self.width, to });
        }
        Ok(RElem::from_limbs(self.limbs, to))
    }

    /// Reinterpret in any width: reduce if narrower, zero-extend if wider.
    pub fn resize(&self, to: u32) -> RElem {
        RElem::from_limbs(self.limbs, to)
    }

    /// floor(representative / 2^f), same width.
    pub fn shift_down(&self, f: u32) -> RElem {
        if f >= 256 {
            return RElem::zero(self.width);
        }
        let q = (f / 64) as usize;
        let r = f % 64;
        let mut l = [0u64; LIMBS];
        for i in 0..LIMBS - q {
            let lo = self.limbs[i + q] >> r;
            let hi = if r > 0 && i + q + 1 < LIMBS {
                self.limbs[i + q + 1] << (64 - r)
            } else {
                0
            };
            l[i] = lo | hi;
        }
        RElem::from_limbs(l, self.width)
    }

    /// (representative * 2^e) mod 2^width.
    pub fn shift_up(&self, e: u32) -> RElem {
        if e >= 256 {
            return RElem::zero(self.width);
        }
        let q = (e / 64) as usize;
        let r = e % 64;
        let mut l = [0u64; LIMBS];
        for i in q..LIMBS {
            let lo = self.limbs[i - q] << r;
            let hi = if r > 0 && i > q { self.limbs[i - q - 1] >> (64 - r) } else { 0 };
            l[i] = lo | hi;
        }
        RElem::from_limbs(l, self.width)
    }

    /// Signed reading of the representative; requires width <= 127.
    pub fn to_i128(&self) -> i128 {
        assert!(self.width <= 127, "signed reading needs width <= 127");
        let u = self.low_u128();
        if self.width > 0 && (u >> (self.width - 1)) & 1 == 1 {
            (u as i128) - (1i128 << self.width)
        } else {
            u as i128
        }
    }

    /// round(x * 2^f) in Z_{2^k}.
    pub fn encode_fixed(x: f64, k: u32, f: u32) -> Result<RElem> {
        let limit = 2f64.powi(k as i32 - 1 - f as i32);
        if !x.is_finite() || x.abs() >= limit {
            return Err(Error::FixedOverflow(x.to_string()));
        }
        let v = (x * 2f64.powi(f as i32)).round() as i128;
        Ok(RElem::from_i128(v, k))
    }

    pub fn decode_fixed(&self, k: u32, f: u32) -> f64 {
        let v = self.resize(k).to_i128();
        v as f64 / 2f64.powi(f as i32)
    }

    /// ceil(width/8) little-endian bytes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let nb = self.width.div_ceil(8) as usize;
        let mut out = Vec::with_capacity(nb);
        for l in self.limbs.iter() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.truncate(nb);
        out
    }

    pub fn from_le_bytes(bytes: &[u8], width: u32) -> Result<RElem> {
        if bytes.len() != width.div_ceil(8) as usize {
            return Err(Error::Format(format!(
                "expected {} bytes for width {width}, got {}",
                width.div_ceil(8),
                bytes.len()
            )));
        }
        let mut buf = [0u8; 32];
        buf[..bytes.len()].copy_from_slice(bytes);
        let mut l = [0u64; LIMBS];
        for (i, limb) in l.iter_mut().enumerate() {
            *limb = u64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().unwrap());
        }
        Ok(RElem::from_limbs(l, width))
    }

    /// Parses a decimal integer (optionally negative) and reduces it.
    pub fn from_dec_str(s: &str, width: u32) -> Result<RElem> {
        let t = s.trim();
        let (neg, digits) = match t.strip_prefix('-') {
            Some(d) => (true, d),
            None => (false, t),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Format(format!("not a decimal integer: `{s}`")));
        }
        let ten = RElem::from_u64(10, 256);
        let mut acc = RElem::zero(256);
        for b in digits.bytes() {
            acc = acc.wrapping_mul(&ten).wrapping_add(&RElem::from_u64((b - b'0') as u64, 256));
        }
        let v = acc.resize(width);
        Ok(if neg { v.neg() } else { v })
    }

    fn divrem_small(&self, d: u64) -> (RElem, u64) {
        let mut q = [0u64; LIMBS];
        let mut rem: u128 = 0;
        for i in (0..LIMBS).rev() {
            let cur = (rem << 64) | self.limbs[i] as u128;
            q[i] = (cur / d as u128) as u64;
            rem = cur % d as u128;
        }
        (RElem { width: self.width, limbs: q }, rem as u64)
    }
}

impl fmt::Display for RElem {
    /// Decimal representative.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        const CHUNK: u64 = 10_000_000_000_000_000_000;
        let mut parts = Vec::new();
        let mut cur = *self;
        while !cur.is_zero() {
            let (q, r) = cur.divrem_small(CHUNK);
            parts.push(r);
            cur = q;
        }
        let mut s = parts.pop().unwrap().to_string();
        while let Some(p) = parts.pop() {
            s.push_str(&format!("{p:019}"));
        }
        f.write_str(&s)
    }
}

impl fmt::Debug for RElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_w{}", self, self.width)
    }
}

impl Add for RElem {
    type Output = RElem;
    fn add(self, o: RElem) -> RElem {
        assert_eq!(self.width, o.width, "width mismatch");
        self.wrapping_add(&o)
    }
}

impl Sub for RElem {
    type Output = RElem;
    fn sub(self, o: RElem) -> RElem {
        assert_eq!(self.width, o.width, "width mismatch");
        self.wrapping_sub(&o)
    }
}

impl Mul for RElem {
    type Output = RElem;
    fn mul(self, o: RElem) -> RElem {
        assert_eq!(self.width, o.width, "width mismatch");
        self.wrapping_mul(&o)
    }
}

impl Neg for RElem {
    type Output = RElem;
    fn neg(self) -> RElem {
        RElem::neg(&self)
    }
}

impl AddAssign for RElem {
    fn add_assign(&mut self, o: RElem) {
        *self = *self + o;
    }
}

impl SubAssign for RElem {
    fn sub_assign(&mut self, o: RElem) {
        *self = *self - o;
    }
}

/// Dense row-major matrix of same-width ring elements.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    width: u32,
    data: Vec<RElem>,
}

impl RMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<RElem>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let width = data[0].width();
        if let Some(e) = data.iter().find(|e| e.width() != width) {
            return Err(Error::WidthMismatch(width, e.width()));
        }
        Ok(RMatrix { rows, cols, width, data })
    }

    pub fn zeros(rows: usize, cols: usize, width: u32) -> Self {
        RMatrix { rows, cols, width, data: vec![RElem::zero(width); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, width: u32, mut f: impl FnMut(usize, usize) -> RElem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let e = f(r, c).resize(width);
                data.push(e);
            }
        }
        RMatrix { rows, cols, width, data }
    }

    pub fn from_i128(rows: usize, cols: usize, width: u32, vals: &[i128]) -> Result<Self> {
        if vals.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} values for {rows}x{cols}", vals.len())));
        }
        Ok(Self::from_fn(rows, cols, width, |r, c| RElem::from_i128(vals[r * cols + c], width)))
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize, width: u32) -> Self {
        let data = (0..rows * cols).map(|_| RElem::random(rng, width)).collect();
        RMatrix { rows, cols, width, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn data(&self) -> &[RElem] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> RElem {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: RElem) {
        assert_eq!(v.width(), self.width, "width mismatch");
        self.data[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    fn check_same(&self, o: &RMatrix) -> Result<()> {
        if self.shape() != o.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        if self.width != o.width {
            return Err(Error::WidthMismatch(self.width, o.width));
        }
        Ok(())
    }

    fn zip(&self, o: &RMatrix, f: impl Fn(&RElem, &RElem) -> RElem) -> Result<RMatrix> {
        self.check_same(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect();
        Ok(RMatrix { rows: self.rows, cols: self.cols, width: self.width, data })
    }

    pub fn add(&self, o: &RMatrix) -> Result<RMatrix> {
        self.zip(o, |a, b| a.wrapping_add(b))
    }

    pub fn sub(&self, o: &RMatrix) -> Result<RMatrix> {
        self.zip(o, |a, b| a.wrapping_sub(b))
    }

    pub fn neg(&self) -> RMatrix {
        self.map(|e| e.neg())
    }

    pub fn map(&self, f: impl Fn(&RElem) -> RElem) -> RMatrix {
        let data: Vec<RElem> = self.data.iter().map(f).collect();
        let width = data.first().map(|e| e.width()).unwrap_or(self.width);
        RMatrix { rows: self.rows, cols: self.cols, width, data }
    }

    pub fn lift(&self, to: u32) -> Result<RMatrix> {
        if to < self.width {
            return Err(Error::Narrowing { from: self.width, to });
        }
        Ok(self.map(|e| e.resize(to)))
    }

    pub fn reduce(&self, to: u32) -> Result<RMatrix> {
        if to > self.width {
            return Err(Error::Widening { from: self.width, to });
        }
        Ok(self.map(|e| e.resize(to)))
    }

    pub fn resize(&self, to: u32) -> RMatrix {
        let data = self.data.iter().map(|e| e.resize(to)).collect();
        RMatrix { rows: self.rows, cols: self.cols, width: to, data }
    }

    pub fn shift_down(&self, f: u32) -> RMatrix {
        self.map(|e| e.shift_down(f))
    }

    pub fn transpose(&self) -> RMatrix {
        RMatrix::from_fn(self.cols, self.rows, self.width, |r, c| self.get(c, r))
    }

    /// c * M elementwise; `c` may be narrower (key or combiner). Adds rows*cols to `muls`.
    pub fn scale(&self, c: &RElem, muls: &mut u64) -> Result<RMatrix> {
        if c.width() > self.width {
            return Err(Error::IllegalWidthPairing(c.width(), self.width));
        }
        let c = c.resize(self.width);
        *muls += self.data.len() as u64;
        Ok(self.map(|e| c.wrapping_mul(e)))
    }

    /// Matrix product. Adds rows*inner*cols to `muls`.
    pub fn matmul(&self, o: &RMatrix, muls: &mut u64) -> Result<RMatrix> {
        if self.cols != o.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        if self.width != o.width {
            return Err(Error::WidthMismatch(self.width, o.width));
        }
        let n = nlimbs(self.width);
        let mut out = vec![[0u64; LIMBS]; self.rows * o.cols];
        for r in 0..self.rows {
            let acc = &mut out[r * o.cols..(r + 1) * o.cols];
            for t in 0..self.cols {
                let a = self.data[r * self.cols + t].limbs;
                if a.iter().all(|&x| x == 0) {
                    continue;
                }
                let brow = &o.data[t * o.cols..(t + 1) * o.cols];
                for (slot, b) in acc.iter_mut().zip(brow) {
                    *slot = add_raw(slot, &mul_raw(&a, &b.limbs, n), n);
                }
            }
        }
        *muls += (self.rows * self.cols * o.cols) as u64;
        let width = self.width;
        let data = out.into_iter().map(|l| RElem::from_limbs(l, width)).collect();
        Ok(RMatrix { rows: self.rows, cols: o.cols, width, data })
    }

    /// M * v for a column vector v (given as a cols x 1 matrix). Adds rows*cols to `muls`.
    pub fn matvec(&self, v: &RMatrix, muls: &mut u64) -> Result<RMatrix> {
        if v.cols != 1 {
            return Err(Error::ShapeMismatch(format!("expected a column, got {}x{}", v.rows, v.cols)));
        }
        self.matmul(v, muls)
    }

    /// Sum of all entries.
    pub fn sum(&self) -> RElem {
        let mut acc = RElem::zero(self.width);
        for e in &self.data {
            acc = acc.wrapping_add(e);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn big(e: &RElem) -> BigUint {
        let mut b = BigUint::from(0u32);
        for (i, l) in e.limbs().iter().enumerate() {
            b += BigUint::from(*l) << (64 * i);
        }
        b
    }

    fn modulus(w: u32) -> BigUint {
        BigUint::from(1u32) << w
    }

    #[test]
    fn width8_examples() {
        let a = RElem::from_u64(200, 8);
        let b = RElem::from_u64(100, 8);
        assert_eq!(a.checked_add(&b).unwrap().low_u64(), 44);
        assert_eq!(RElem::zero(8).checked_add(&a).unwrap(), a);
        let x = RElem::from_u64(16, 8);
        assert!(x.checked_mul(&x).unwrap().is_zero());
        assert_eq!(RElem::one(8).checked_mul(&a).unwrap(), a);
    }

    #[test]
    fn mismatched_widths_rejected() {
        let a = RElem::from_u64(1, 8);
        let b = RElem::from_u64(1, 16);
        assert_eq!(a.checked_add(&b), Err(Error::WidthMismatch(8, 16)));
        assert!(a.checked_mul(&b).is_err());
        assert!(RElem::mul_key(&b, &a).is_err());
        assert!(RElem::mul_key(&a, &b).is_ok());
    }

    #[test]
    fn lift_round_trip() {
        let a = RElem::from_u64(200, 8);
        let l = a.lift(24).unwrap();
        assert_eq!(l.width(), 24);
        assert_eq!(l.low_u64(), 200);
        assert_eq!(l.reduce(8).unwrap(), a);
        assert!(l.lift(8).is_err());
        assert!(a.reduce(24).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let p = RingParams::new(32, 32, 16).unwrap();
        assert_eq!(p.encode(1.5).unwrap().low_u64(), 98304);
        assert_eq!(p.encode(-1.0).unwrap().low_u64(), (1u64 << 32) - 65536);
        assert!(p.encode(2f64.powi(15)).is_err());
        assert_eq!(p.decode(&p.encode(-3.25).unwrap()), -3.25);
    }

    #[test]
    fn fixed_point_round_trip_random() {
        let p = RingParams::k32();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let lim = 2f64.powi((p.k - 1 - p.f) as i32);
        for _ in 0..1000 {
            let u = (rng.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0;
            let x = u * lim * 0.999;
            let back = p.decode(&p.encode(x).unwrap());
            assert!((back - x).abs() <= 2f64.powi(-(p.f as i32) - 1) + 1e-9, "{x} -> {back}");
        }
    }

    #[test]
    fn shift_down_examples() {
        assert_eq!(RElem::from_u64(98304, 32).shift_down(15).low_u64(), 3);
        assert!(RElem::zero(64).shift_down(5).is_zero());
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = RElem::random(&mut rng, 192);
            let f = rng.next_u32() % 130;
            let q = big(&a.shift_down(f));
            let lo = &q << f;
            assert!(lo <= big(&a));
            assert!(big(&a) < lo + (BigUint::from(1u32) << f));
        }
    }

    #[test]
    fn decimal_round_trip() {
        let a = RElem::from_dec_str("123456789012345678901234567890", 128).unwrap();
        assert_eq!(a.to_string(), "123456789012345678901234567890");
        let m = RElem::from_dec_str("-1", 16).unwrap();
        assert_eq!(m.low_u64(), 0xffff);
        assert!(RElem::from_dec_str("12a", 16).is_err());
    }

    #[test]
    fn bytes_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for w in [8, 20, 64, 96, 130, 192] {
            let a = RElem::random(&mut rng, w);
            let b = a.to_le_bytes();
            assert_eq!(b.len(), w.div_ceil(8) as usize);
            assert_eq!(RElem::from_le_bytes(&b, w).unwrap(), a);
        }
    }

    #[test]
    fn matmul_counts_and_matches_naive() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = RMatrix::random(&mut rng, 3, 4, 96);
        let b = RMatrix::random(&mut rng, 4, 2, 96);
        let mut muls = 0;
        let c = a.matmul(&b, &mut muls).unwrap();
        assert_eq!(muls, 24);
        for r in 0..3 {
            for col in 0..2 {
                let mut acc = BigUint::from(0u32);
                for t in 0..4 {
                    acc += big(&a.get(r, t)) * big(&b.get(t, col));
                }
                assert_eq!(big(&c.get(r, col)), acc % modulus(96));
            }
        }
    }

    fn arb_elem(w: u32) -> impl Strategy<Value = RElem> {
        any::<[u64; 4]>().prop_map(move |l| RElem::from_limbs(l, w))
    }

    proptest! {
        #[test]
        fn ops_match_bigint(w in prop::sample::select(vec![8u32, 16, 32, 64, 96, 128, 160, 192]),
                            seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = RElem::random(&mut rng, w);
            let b = RElem::random(&mut rng, w);
            let m = modulus(w);
            prop_assert_eq!(big(&(a + b)), (big(&a) + big(&b)) % &m);
            prop_assert_eq!(big(&(a - b)), (big(&a) + &m - big(&b)) % &m);
            prop_assert_eq!(big(&(a * b)), (big(&a) * big(&b)) % &m);
            prop_assert_eq!(big(&(-a)), (&m - big(&a)) % &m);
        }

        #[test]
        fn ring_axioms(a in arb_elem(192), b in arb_elem(192), c in arb_elem(192)) {
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
        }

        #[test]
        fn lift_is_homomorphic(a in arb_elem(80), b in arb_elem(80)) {
            let (la, lb) = (a.lift(176).unwrap(), b.lift(176).unwrap());
            prop_assert_eq!((la * lb).reduce(80).unwrap(), a * b);
            prop_assert_eq!((la + lb).reduce(80).unwrap(), a + b);
            prop_assert_eq!(big(&(la * lb)), (big(&a) * big(&b)) % modulus(176));
        }

        #[test]
        fn key_product(key in arb_elem(64), x in arb_elem(192)) {
            let p = RElem::mul_key(&key, &x).unwrap();
            prop_assert_eq!(big(&p), (big(&key) * big(&x)) % modulus(192));
        }
    }
}
