//! Authenticated additive shares: per-party value share, MAC share, key share.
//!
//! Value and MAC shares are held mod 2^(k+2s). Openings and BatchRec checks
//! reduce to k+s bits; the compact checksum uses the full width.

use crate::error::{Error, Result};
use crate::ring::{RElem, RMatrix};

/// One party's additive share of the global MAC key (s bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacKeyShare {
    pub delta_i: RElem,
}

/// One party's share of a single authenticated value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuthShare {
    pub val: RElem,
    pub mac: RElem,
}

impl AuthShare {
    pub fn as_matrix(&self) -> AuthMatrixShare {
        AuthMatrixShare {
            vals: RMatrix::new(1, 1, vec![self.val]).expect("1x1"),
            macs: RMatrix::new(1, 1, vec![self.mac]).expect("1x1"),
        }
    }
}

/// One party's share of an authenticated matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuthMatrixShare {
    pub vals: RMatrix,
    pub macs: RMatrix,
}

impl AuthMatrixShare {
    pub fn new(vals: RMatrix, macs: RMatrix) -> Result<Self> {
        if vals.shape() != macs.shape() {
            return Err(Error::ShapeMismatch(format!(
                "values {:?} vs macs {:?}",
                vals.shape(),
                macs.shape()
            )));
        }
        if vals.width() != macs.width() {
            return Err(Error::WidthMismatch(vals.width(), macs.width()));
        }
        Ok(AuthMatrixShare { vals, macs })
    }

    pub fn zeros(rows: usize, cols: usize, width: u32) -> Self {
        AuthMatrixShare {
            vals: RMatrix::zeros(rows, cols, width),
            macs: RMatrix::zeros(rows, cols, width),
        }
    }

    pub fn rows(&self) -> usize {
        self.vals.rows()
    }

    pub fn cols(&self) -> usize {
        self.vals.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.vals.shape()
    }

    pub fn width(&self) -> u32 {
        self.vals.width()
    }

    pub fn get(&self, r: usize, c: usize) -> AuthShare {
        AuthShare { val: self.vals.get(r, c), mac: self.macs.get(r, c) }
    }

    pub fn add(&self, o: &AuthMatrixShare) -> Result<AuthMatrixShare> {
        Ok(AuthMatrixShare { vals: self.vals.add(&o.vals)?, macs: self.macs.add(&o.macs)? })
    }

    pub fn sub(&self, o: &AuthMatrixShare) -> Result<AuthMatrixShare> {
        Ok(AuthMatrixShare { vals: self.vals.sub(&o.vals)?, macs: self.macs.sub(&o.macs)? })
    }

    /// Multiply value and MAC by 2^e (a public power of two).
    pub fn shift_up(&self, e: u32) -> AuthMatrixShare {
        AuthMatrixShare {
            vals: self.vals.map(|x| x.shift_up(e)),
            macs: self.macs.map(|x| x.shift_up(e)),
        }
    }

    /// Same entries rearranged; `f` maps output (r, c) to an input position,
    /// or None for a public zero.
    pub fn gather(&self, rows: usize, cols: usize, f: impl Fn(usize, usize) -> Option<(usize, usize)>) -> AuthMatrixShare {
        let w = self.width();
        let pick = |m: &RMatrix| {
            RMatrix::from_fn(rows, cols, w, |r, c| match f(r, c) {
                Some((i, j)) => m.get(i, j),
                None => RElem::zero(w),
            })
        };
        AuthMatrixShare { vals: pick(&self.vals), macs: pick(&self.macs) }
    }
}

/// Sum of c_j * inputs_j on both components. Coefficients may be narrower
/// than the shares. Adds 2 * rows * cols per coefficient to `muls`.
pub fn lin_combine(coeffs: &[RElem], inputs: &[&AuthMatrixShare], muls: &mut u64) -> Result<AuthMatrixShare> {
    if coeffs.len() != inputs.len() || inputs.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients for {} inputs",
            coeffs.len(),
            inputs.len()
        )));
    }
    let (rows, cols) = inputs[0].shape();
    let w = inputs[0].width();
    let mut acc = AuthMatrixShare::zeros(rows, cols, w);
    for (c, x) in coeffs.iter().zip(inputs) {
        if x.shape() != (rows, cols) {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", x.shape(), (rows, cols))));
        }
        acc.vals = acc.vals.add(&x.vals.scale(c, muls)?)?;
        acc.macs = acc.macs.add(&x.macs.scale(c, muls)?)?;
    }
    Ok(acc)
}

/// Adds a public matrix C. Party 0 adds C to its value share; every party
/// adds delta_i * C to its MAC share, so that sum(mac) = delta * (v + C).
/// Adds rows * cols key products to `muls`.
pub fn add_public(
    x: &AuthMatrixShare,
    c: &RMatrix,
    key: &MacKeyShare,
    party: usize,
    muls: &mut u64,
) -> Result<AuthMatrixShare> {
    if x.shape() != c.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs public {:?}", x.shape(), c.shape())));
    }
    if c.width() > x.width() {
        return Err(Error::IllegalWidthPairing(c.width(), x.width()));
    }
    let c = c.resize(x.width());
    let vals = if party == 0 { x.vals.add(&c)? } else { x.vals.clone() };
    let macs = x.macs.add(&c.scale(&key.delta_i, muls)?)?;
    Ok(AuthMatrixShare { vals, macs })
}
