//! SINR to block-error abstraction.
//!
//! BLER is a logistic waterfall in dB centred `shannon_gap_db` above the
//! Shannon-limit SNR of the MCS spectral efficiency. HARQ chase combining is
//! modelled as a fixed SINR gain per prior transmission.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nr_tables::{cqi_table, CqiTableId, McsEntry};

/// BLER target that defines a CQI report.
pub const CQI_BLER_TARGET: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerModel {
    pub shannon_gap_db: f64,
    pub waterfall_slope_per_db: f64,
    pub harq_combining_gain_db: f64,
}

impl Default for BlerModel {
    fn default() -> Self {
        Self {
            shannon_gap_db: 1.5,
            waterfall_slope_per_db: 2.0,
            harq_combining_gain_db: 3.0,
        }
    }
}

impl BlerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.waterfall_slope_per_db > 0.0) {
            return Err(Error::InvalidConfig("bler.slope must be > 0".into()));
        }
        if !(self.harq_combining_gain_db >= 0.0) {
            return Err(Error::InvalidConfig(
                "bler.harq_gain_db must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// SINR above the 50% point at which the waterfall reaches `target`.
    pub fn margin_for_bler(&self, target: f64) -> f64 {
        ((1.0 - target) / target).ln() / self.waterfall_slope_per_db
    }

    fn bler_at(&self, sinr_db: f64, se: f64, tx_count: u32) -> f64 {
        let effective =
            sinr_db + f64::from(tx_count.saturating_sub(1)) * self.harq_combining_gain_db;
        let x = self.waterfall_slope_per_db * (effective - snr_at_bler50(se, self));
        // 1 / (1 + e^x), written to stay inside (0, 1) for large |x|
        if x >= 0.0 {
            let e = (-x).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + x.exp())
        }
    }
}

/// SNR (dB) at which a code of spectral efficiency `se` sees 50% BLER.
pub fn snr_at_bler50(se: f64, model: &BlerModel) -> f64 {
    10.0 * (se.exp2() - 1.0).log10() + model.shannon_gap_db
}

/// Block error probability of one transmission attempt.
pub fn bler(sinr_db: f64, mcs: &McsEntry, tx_count: u32, model: &BlerModel) -> Result<f64> {
    if mcs.reserved {
        return Err(Error::ReservedMcs {
            table: mcs.table,
            index: mcs.index,
        });
    }
    Ok(model.bler_at(sinr_db, mcs.spectral_efficiency, tx_count.max(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feedback {
    Ack,
    Nack,
}

impl Feedback {
    pub fn is_ack(self) -> bool {
        self == Feedback::Ack
    }
}

/// NACK with probability `bler_value`.
pub fn draw_crc<R: Rng + ?Sized>(bler_value: f64, rng: &mut R) -> Feedback {
    let u: f64 = rng.random();
    if u < bler_value {
        Feedback::Nack
    } else {
        Feedback::Ack
    }
}

/// Highest CQI whose first-transmission BLER at `sinr_db` is at most 10%.
pub fn select_cqi(sinr_db: f64, table: CqiTableId, model: &BlerModel) -> u8 {
    cqi_table(table)
        .iter()
        .rev()
        .filter(|e| !e.out_of_range)
        .find(|e| model.bler_at(sinr_db, e.spectral_efficiency, 1) <= CQI_BLER_TARGET)
        .map_or(0, |e| e.cqi)
}
