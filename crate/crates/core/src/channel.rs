//! Per-slot received signal quality: UMi line-of-sight path loss, spatially
//! correlated log-normal shadowing and Doppler-correlated Rician fast fading.
//!
//! Path loss follows the TR 38.901 UMi street-canyon LOS formula. Shadowing is
//! a first-order Gauss-Markov process in distance (decorrelation distance
//! `decorr_m`). The diffuse part of the fast fading is a complex Gauss-Markov
//! process in time whose one-step correlation is `J0(2*pi*f_d*dt)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_MPS: f64 = 3.0e8;
/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
/// Validity floor of the UMi formula; shorter distances are clamped to it.
pub const MIN_UMI_DISTANCE_M: f64 = 10.0;
/// Effective environment height for the breakpoint distance.
const ENVIRONMENT_HEIGHT_M: f64 = 1.0;

// ---------------------------------------------------------------------------
// Link budget
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Effective radiated power towards the UE, dBm.
    pub eirp_dbm: f64,
    pub ue_rx_gain_db: f64,
    pub noise_figure_db: f64,
    pub n_prb: u32,
    pub scs_hz: f64,
    pub carrier_freq_ghz: f64,
    pub h_bs_m: f64,
    pub h_ut_m: f64,
    /// Transmitter impairment cap on SINR.
    pub sinr_ceiling_db: Option<f64>,
    /// gNB receive gain. Uplink only; kept for completeness, unused here.
    pub gnb_rx_gain_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            eirp_dbm: 67.0,
            ue_rx_gain_db: 1.0,
            noise_figure_db: 10.0,
            n_prb: 66,
            scs_hz: 120e3,
            carrier_freq_ghz: 24.8,
            h_bs_m: 10.0,
            h_ut_m: 1.5,
            sinr_ceiling_db: None,
            gnb_rx_gain_db: 29.5,
        }
    }
}

impl LinkBudget {
    pub fn n_subcarriers(&self) -> u32 {
        self.n_prb * 12
    }

    pub fn occupied_bandwidth_hz(&self) -> f64 {
        f64::from(self.n_subcarriers()) * self.scs_hz
    }

    pub fn noise_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ
            + 10.0 * self.occupied_bandwidth_hz().log10()
            + self.noise_figure_db
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_MPS / (self.carrier_freq_ghz * 1e9)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_prb == 0 || !(self.scs_hz > 0.0) {
            return Err(Error::InvalidConfig(
                "occupied bandwidth must be > 0".into(),
            ));
        }
        if !(0.5..=100.0).contains(&self.carrier_freq_ghz) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency {} GHz outside 0.5..=100",
                self.carrier_freq_ghz
            )));
        }
        if !(self.h_ut_m >= 1.0 && self.h_bs_m > self.h_ut_m) {
            return Err(Error::InvalidConfig(format!(
                "heights must satisfy h_bs > h_ut >= 1 (got {} / {})",
                self.h_bs_m, self.h_ut_m
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Path loss
// ---------------------------------------------------------------------------

/// Breakpoint distance `d'BP = 4 h'_BS h'_UT f_c / c` with `h' = h - 1 m`.
pub fn breakpoint_distance(budget: &LinkBudget) -> f64 {
    let h_bs = budget.h_bs_m - ENVIRONMENT_HEIGHT_M;
    let h_ut = budget.h_ut_m - ENVIRONMENT_HEIGHT_M;
    4.0 * h_bs * h_ut * budget.carrier_freq_ghz * 1e9 / SPEED_OF_LIGHT_MPS
}

/// UMi street-canyon LOS path loss in dB at 2D distance `d2d_m`.
pub fn umi_los_path_loss(d2d_m: f64, budget: &LinkBudget) -> f64 {
    let d2d = d2d_m.max(MIN_UMI_DISTANCE_M);
    let dh = budget.h_bs_m - budget.h_ut_m;
    let d3d = (d2d * d2d + dh * dh).sqrt();
    let fc = budget.carrier_freq_ghz;
    let d_bp = breakpoint_distance(budget);
    if d2d <= d_bp {
        32.4 + 21.0 * d3d.log10() + 20.0 * fc.log10()
    } else {
        32.4 + 40.0 * d3d.log10() + 20.0 * fc.log10() - 9.5 * (d_bp * d_bp + dh * dh).log10()
    }
}

// ---------------------------------------------------------------------------
// Small-scale statistics
// ---------------------------------------------------------------------------

/// Bessel function of the first kind, order zero (Abramowitz & Stegun 9.4.1/9.4.3).
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 3.0 {
        let y = (ax / 3.0).powi(2);
        1.0 + y
            * (-2.249_999_7
                + y * (1.265_620_8
                    + y * (-0.316_386_6
                        + y * (0.044_447_9 + y * (-0.003_944_4 + y * 0.000_210_0)))))
    } else {
        let y = 3.0 / ax;
        let f0 = 0.797_884_56
            + y * (-0.000_000_77
                + y * (-0.005_527_40
                    + y * (-0.000_095_12
                        + y * (0.001_372_37 + y * (-0.000_728_05 + y * 0.000_144_76)))));
        let theta = ax - std::f64::consts::FRAC_PI_4
            + y * (-0.041_663_97
                + y * (-0.000_039_54
                    + y * (0.002_625_73
                        + y * (-0.000_541_25 + y * (-0.000_293_33 + y * 0.000_135_58)))));
        f0 * theta.cos() / ax.sqrt()
    }
}

pub fn doppler_hz(speed_mps: f64, budget: &LinkBudget) -> f64 {
    speed_mps / budget.wavelength_m()
}

/// Shadowing and fast-fading model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub k_factor_db: f64,
    pub shadow_sigma_db: f64,
    pub shadow_decorr_m: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self {
            k_factor_db: 10.0,
            shadow_sigma_db: 4.0,
            shadow_decorr_m: 10.0,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shadow_decorr_m > 0.0) {
            return Err(Error::InvalidConfig(
                "shadow decorrelation distance must be > 0".into(),
            ));
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return Err(Error::InvalidConfig("shadow sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Evolving large- and small-scale state of one link.
#[derive(Debug, Clone)]
pub struct ChannelState {
    pub shadow_db: f64,
    /// Diffuse component, unit mean power (`E|h_d|^2 = 1`).
    pub diffuse: (f64, f64),
    /// Most recent fast-fading power gain, dB.
    pub fading_gain_db: f64,
    pub last_position_m: f64,
    shadow_rng: ChaCha8Rng,
    fading_rng: ChaCha8Rng,
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (
        re * std::f64::consts::FRAC_1_SQRT_2,
        im * std::f64::consts::FRAC_1_SQRT_2,
    )
}

fn rician_gain_db(diffuse: (f64, f64), k_factor_db: f64) -> f64 {
    let k = 10f64.powf(k_factor_db / 10.0);
    let los = (k / (k + 1.0)).sqrt();
    let scatter = (1.0 / (k + 1.0)).sqrt();
    let re = los + scatter * diffuse.0;
    let im = scatter * diffuse.1;
    10.0 * (re * re + im * im).log10()
}

impl ChannelState {
    /// Draws the initial shadow value and diffuse component.
    pub fn new(
        position_m: f64,
        params: &FadingParams,
        mut shadow_rng: ChaCha8Rng,
        mut fading_rng: ChaCha8Rng,
    ) -> Self {
        let z: f64 = shadow_rng.sample(StandardNormal);
        let diffuse = complex_gaussian(&mut fading_rng);
        Self {
            shadow_db: params.shadow_sigma_db * z,
            diffuse,
            fading_gain_db: rician_gain_db(diffuse, params.k_factor_db),
            last_position_m: position_m,
            shadow_rng,
            fading_rng,
        }
    }

    /// Moves the shadowing process to `new_position_m`.
    ///
    /// `shadow' = rho * shadow + sqrt(1 - rho^2) * N(0, sigma^2)` with
    /// `rho = exp(-|dd| / decorr_m)`.
    pub fn advance_shadow(&mut self, new_position_m: f64, sigma_sf_db: f64, decorr_m: f64) {
        let dd = (new_position_m - self.last_position_m).abs();
        self.last_position_m = new_position_m;
        if dd == 0.0 {
            return;
        }
        let rho = (-dd / decorr_m).exp();
        let z: f64 = self.shadow_rng.sample(StandardNormal);
        self.shadow_db = rho * self.shadow_db + (1.0 - rho * rho).sqrt() * sigma_sf_db * z;
    }

    /// Advances the fast fading by `dt_s` and returns the power gain in dB.
    ///
    /// With zero Doppler (or zero elapsed time) the gain is left untouched.
    pub fn advance_fading(
        &mut self,
        dt_s: f64,
        speed_mps: f64,
        budget: &LinkBudget,
        k_factor_db: f64,
    ) -> f64 {
        let f_d = doppler_hz(speed_mps, budget);
        if f_d > 0.0 && dt_s > 0.0 {
            let rho = bessel_j0(2.0 * std::f64::consts::PI * f_d * dt_s).clamp(-1.0, 1.0);
            let innovation = (1.0 - rho * rho).max(0.0).sqrt();
            let w = complex_gaussian(&mut self.fading_rng);
            self.diffuse = (
                rho * self.diffuse.0 + innovation * w.0,
                rho * self.diffuse.1 + innovation * w.1,
            );
        }
        self.fading_gain_db = rician_gain_db(self.diffuse, k_factor_db);
        self.fading_gain_db
    }
}

// ---------------------------------------------------------------------------
// Link sample
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub sinr_db: f64,
    /// Per-resource-element received power, dBm.
    pub rsrp_dbm: f64,
    pub path_loss_db: f64,
}

/// Composes path loss, shadowing and the current fading gain into SINR and RSRP.
pub fn sample_link(d2d_m: f64, state: &ChannelState, budget: &LinkBudget) -> LinkSample {
    link_from_terms(d2d_m, state.shadow_db, state.fading_gain_db, budget)
}

pub fn link_from_terms(
    d2d_m: f64,
    shadow_db: f64,
    fading_db: f64,
    budget: &LinkBudget,
) -> LinkSample {
    let path_loss_db = umi_los_path_loss(d2d_m, budget);
    let rx_total_dbm =
        budget.eirp_dbm - path_loss_db - shadow_db + fading_db + budget.ue_rx_gain_db;
    let mut sinr_db = rx_total_dbm - budget.noise_dbm();
    if let Some(ceiling) = budget.sinr_ceiling_db {
        sinr_db = sinr_db.min(ceiling);
    }
    LinkSample {
        sinr_db,
        rsrp_dbm: rx_total_dbm - 10.0 * f64::from(budget.n_subcarriers()).log10(),
        path_loss_db,
    }
}
