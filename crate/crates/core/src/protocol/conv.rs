//! Convolution lowered to one matrix product (im2col).

use serde::{Deserialize, Serialize};

use super::Session;
use crate::error::{Error, Result};
use crate::metrics::Protocol;
use crate::sharing::AuthMatrixShare;

/// A 2-D convolution layer: input w x h with i channels, o filters of
/// size fk x fk, padding p, stride st.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvParams {
    pub w: usize,
    pub h: usize,
    pub i: usize,
    pub o: usize,
    pub fk: usize,
    pub p: usize,
    pub st: usize,
}

impl ConvParams {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.i == 0 || self.o == 0 || self.fk == 0 || self.st == 0 {
            return Err(Error::InvalidLayer(format!("zero dimension in {self:?}")));
        }
        if self.fk > self.w + 2 * self.p || self.fk > self.h + 2 * self.p {
            return Err(Error::InvalidLayer(format!("kernel larger than padded input in {self:?}")));
        }
        Ok(())
    }
}

/// Output height and width.
pub fn conv_out_hw(c: &ConvParams) -> (usize, usize) {
    ((c.h + 2 * c.p - c.fk) / c.st + 1, (c.w + 2 * c.p - c.fk) / c.st + 1)
}

/// (T1, T2, T3) of the lowered product: output pixels, patch length, filters.
pub fn conv_dims(c: &ConvParams) -> (usize, usize, usize) {
    let (oh, ow) = conv_out_hw(c);
    (oh * ow, c.i * c.fk * c.fk, c.o)
}

/// Rearranges a (h*w) x i input (row y*w + x, column channel) into the
/// T1 x T2 patch matrix. Patch column (ch*fk + ky)*fk + kx; padding is a
/// public zero.
pub fn im2col(input: &AuthMatrixShare, c: &ConvParams) -> Result<AuthMatrixShare> {
    c.validate()?;
    if input.shape() != (c.h * c.w, c.i) {
        return Err(Error::ShapeMismatch(format!("input {:?}, layer wants {:?}", input.shape(), (c.h * c.w, c.i))));
    }
    let (t1, t2, _) = conv_dims(c);
    let (_, ow) = conv_out_hw(c);
    let fk = c.fk;
    Ok(input.gather(t1, t2, |r, col| {
        let (oy, ox) = (r / ow, r % ow);
        let (ch, ky, kx) = (col / (fk * fk), (col / fk) % fk, col % fk);
        let iy = (oy * c.st + ky).checked_sub(c.p)?;
        let ix = (ox * c.st + kx).checked_sub(c.p)?;
        (iy < c.h && ix < c.w).then_some((iy * c.w + ix, ch))
    }))
}

impl Session {
    /// Convolution as im2col then multiply-and-truncate. `kernel` is T2 x o.
    pub fn conv_via_matmul(
        &mut self,
        input: &[AuthMatrixShare],
        kernel: &[AuthMatrixShare],
        conv: &ConvParams,
        protocol: Protocol,
    ) -> Result<Vec<AuthMatrixShare>> {
        let cols = input.iter().map(|x| im2col(x, conv)).collect::<Result<Vec<_>>>()?;
        self.matmul_trunc(&cols, kernel, protocol)
    }
}
