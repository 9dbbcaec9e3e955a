//! Transport block size determination for PDSCH (TS 38.214, 5.1.3.2).
//!
//! Everything is done in integers: `N_info` is carried scaled by 2048 so that
//! half-integer code rates such as 682.5/1024 stay exact.

use crate::error::{Error, Result};

use super::{small_tbs_table, McsEntry};

/// Largest `N_info` quantized through the small-TBS lookup table.
pub const SMALL_TBS_MAX_NINFO: u64 = 3824;

/// Resource elements per PRB are capped at this value before scaling.
const MAX_RE_PER_PRB: u64 = 156;

const RATE_SHIFT: u32 = 11; // 2048 = 2^11

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbsInput {
    pub n_prb: u32,
    /// OFDM symbols carrying PDSCH data in the slot.
    pub n_symbols_data: u32,
    /// DMRS resource elements per PRB.
    pub n_dmrs_re_per_prb: u32,
    /// Higher-layer `xOverhead`: 0, 6, 12 or 18.
    pub x_overhead: u32,
    pub n_layers: u32,
    pub mcs: McsEntry,
}

impl TbsInput {
    /// `12 * symbols - dmrs - overhead`, before the 156 cap.
    pub fn re_per_prb(&self) -> i64 {
        12 * i64::from(self.n_symbols_data)
            - i64::from(self.n_dmrs_re_per_prb)
            - i64::from(self.x_overhead)
    }

    fn validate(&self) -> Result<()> {
        if self.mcs.reserved {
            return Err(Error::ReservedMcs {
                table: self.mcs.table,
                index: self.mcs.index,
            });
        }
        if self.n_prb == 0 {
            return Err(Error::InvalidTbsInput("n_prb must be >= 1".into()));
        }
        if !(1..=14).contains(&self.n_symbols_data) {
            return Err(Error::InvalidTbsInput(format!(
                "n_symbols_data {} not in 1..=14",
                self.n_symbols_data
            )));
        }
        if !matches!(self.x_overhead, 0 | 6 | 12 | 18) {
            return Err(Error::InvalidTbsInput(format!(
                "x_overhead {} not in {{0,6,12,18}}",
                self.x_overhead
            )));
        }
        if !(1..=4).contains(&self.n_layers) {
            return Err(Error::InvalidTbsInput(format!(
                "n_layers {} not in 1..=4",
                self.n_layers
            )));
        }
        if self.re_per_prb() <= 0 {
            return Err(Error::NoUsableResources(format!(
                "12*{} - {} - {} <= 0",
                self.n_symbols_data, self.n_dmrs_re_per_prb, self.x_overhead
            )));
        }
        Ok(())
    }
}

fn floor_log2(x: u64) -> u32 {
    debug_assert!(x > 0);
    63 - x.leading_zeros()
}

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Transport block size in bits.
pub fn compute_tbs(input: &TbsInput) -> Result<u32> {
    input.validate()?;

    let re_per_prb = (input.re_per_prb() as u64).min(MAX_RE_PER_PRB);
    let n_re = re_per_prb * u64::from(input.n_prb);

    // N_info * 2048
    let ninfo_scaled = n_re
        * u64::from(input.mcs.code_rate_x2048())
        * u64::from(input.mcs.qm)
        * u64::from(input.n_layers);
    if ninfo_scaled == 0 {
        return Err(Error::NoUsableResources("N_info is zero".into()));
    }

    if ninfo_scaled <= SMALL_TBS_MAX_NINFO << RATE_SHIFT {
        let n = (floor_log2(ninfo_scaled) as i64 - RATE_SHIFT as i64 - 6).max(3) as u32;
        let quantized = ((ninfo_scaled >> (n + RATE_SHIFT)) << n).max(24);
        let tbs = small_tbs_table()
            .iter()
            .copied()
            .find(|&t| u64::from(t) >= quantized)
            .expect("quantized N_info <= 3824 always has a table entry");
        return Ok(tbs);
    }

    // (N_info - 24) * 2048
    let reduced = ninfo_scaled - (24 << RATE_SHIFT);
    let n = floor_log2(reduced) - RATE_SHIFT - 5;
    let shift = n + RATE_SHIFT;
    let rounded = (reduced + (1 << (shift - 1))) >> shift;
    let quantized = (rounded << n).max(3840);

    let tbs = if u64::from(input.mcs.code_rate_x2048()) * 4 <= 2048 {
        let c = div_ceil(quantized + 24, 3816);
        8 * c * div_ceil(quantized + 24, 8 * c) - 24
    } else if quantized > 8424 {
        let c = div_ceil(quantized + 24, 8424);
        8 * c * div_ceil(quantized + 24, 8 * c) - 24
    } else {
        8 * div_ceil(quantized + 24, 8) - 24
    };
    Ok(tbs as u32)
}
