use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to the cache-size formulas. Widths are in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeInputs {
    pub k: u64,
    pub l: u64,
    pub d: u64,
    pub alpha: f64,
    pub s_sigma: u64,
    pub s_rgb: u64,
    pub s_uvw: u64,
    pub s_beta: u64,
}

impl SizeInputs {
    /// Half-precision accounting: 16-bit σ and β, 24-bit RGB, 48-bit
    /// `(u, v, w)`.
    pub fn half_precision(k: u64, l: u64, d: u64, alpha: f64) -> Self {
        SizeInputs {
            k,
            l,
            d,
            alpha,
            s_sigma: 16,
            s_rgb: 24,
            s_uvw: 48,
            s_beta: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheSizeReport {
    #[serde(flatten)]
    pub inputs: SizeInputs,
    /// `α (s_σ + s_rgb) k³ l²` bits, in bytes.
    pub m_nerf_bytes: u64,
    /// `α (D s_uvw + s_σ) k³ + D s_β l²` bits, in bytes.
    pub m_fastnerf_bytes: u64,
    pub fastnerf_position_bytes: u64,
    pub fastnerf_direction_bytes: u64,
}

/// Exact value `n / 2^shift`.
#[derive(Clone, Copy)]
struct Dyadic {
    n: u128,
    shift: u32,
}

fn overflow() -> Error {
    Error::InvalidArgument("cache size inputs too large for exact evaluation".into())
}

impl Dyadic {
    fn int(n: u128) -> Self {
        Dyadic { n, shift: 0 }
    }

    /// `alpha · x` for finite `alpha ≥ 0`.
    fn scaled(alpha: f64, x: u128) -> Result<Self> {
        if alpha == 0.0 || x == 0 {
            return Ok(Dyadic::int(0));
        }
        let bits = alpha.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut m, mut e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | 1 << 52, exp - 1075)
        };
        let tz = m.trailing_zeros();
        m >>= tz;
        e += tz as i32;
        let n = (m as u128).checked_mul(x).ok_or_else(overflow)?;
        if e >= 0 {
            let n = n.checked_shl(e as u32).filter(|v| v >> e == n).ok_or_else(overflow)?;
            Ok(Dyadic::int(n))
        } else {
            Ok(Dyadic { n, shift: (-e) as u32 })
        }
    }

    fn add(self, other: Dyadic) -> Result<Self> {
        let shift = self.shift.max(other.shift);
        let lift = |d: Dyadic| -> Result<u128> {
            let s = shift - d.shift;
            if s >= 128 || (s > 0 && d.n >> (128 - s) != 0) {
                return Err(overflow());
            }
            Ok(d.n << s)
        };
        Ok(Dyadic {
            n: lift(self)?.checked_add(lift(other)?).ok_or_else(overflow)?,
            shift,
        })
    }

    /// `⌈self / 8⌉`.
    fn bytes(self) -> Result<u64> {
        let s = self.shift + 3;
        if s >= 128 {
            return Ok(u64::from(self.n != 0));
        }
        let div = 1u128 << s;
        let q = self.n / div + u128::from(!self.n.is_multiple_of(div));
        u64::try_from(q).map_err(|_| overflow())
    }
}

fn product(values: &[u64]) -> Result<u128> {
    values
        .iter()
        .try_fold(1u128, |acc, v| acc.checked_mul(*v as u128))
        .ok_or_else(overflow)
}

/// Byte counts of the unfactorized and factorized caches, evaluated exactly
/// in integer arithmetic and rounded up to whole bytes at the end.
pub fn estimate_sizes(inputs: &SizeInputs) -> Result<CacheSizeReport> {
    let a = inputs.alpha;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidSparsity(a));
    }
    let i = inputs;
    if [i.k, i.l, i.d, i.s_sigma, i.s_rgb, i.s_uvw, i.s_beta].contains(&0) {
        return Err(Error::InvalidArgument("sizes and bit widths must be positive".into()));
    }
    let k3 = product(&[i.k, i.k, i.k])?;
    let l2 = product(&[i.l, i.l])?;
    let nerf_bits = (i.s_sigma as u128 + i.s_rgb as u128)
        .checked_mul(k3)
        .and_then(|v| v.checked_mul(l2))
        .ok_or_else(overflow)?;
    let pos_bits = (i.d as u128)
        .checked_mul(i.s_uvw as u128)
        .and_then(|v| v.checked_add(i.s_sigma as u128))
        .and_then(|v| v.checked_mul(k3))
        .ok_or_else(overflow)?;
    let dir_bits = product(&[i.d, i.s_beta])?.checked_mul(l2).ok_or_else(overflow)?;

    let nerf = Dyadic::scaled(a, nerf_bits)?;
    let pos = Dyadic::scaled(a, pos_bits)?;
    let dir = Dyadic::int(dir_bits);
    Ok(CacheSizeReport {
        inputs: *inputs,
        m_nerf_bytes: nerf.bytes()?,
        m_fastnerf_bytes: pos.add(dir)?.bytes()?,
        fastnerf_position_bytes: pos.bytes()?,
        fastnerf_direction_bytes: dir.bytes()?,
    })
}
