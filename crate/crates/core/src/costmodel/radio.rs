use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uplink radio parameters shared by all agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    /// Total bandwidth `B` in Hz.
    pub bandwidth_hz: f64,
    /// Transmit power in W.
    pub tx_power_w: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_density_dbm_hz: f64,
    /// Path-loss constant `h0` in dB.
    pub pathloss_const_db: f64,
    /// Reference distance `D0` in m.
    pub ref_distance_m: f64,
    /// Path-loss exponent `n`.
    pub pathloss_exp: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20e6,
            tx_power_w: 1.0,
            noise_density_dbm_hz: -174.0,
            pathloss_const_db: -40.0,
            ref_distance_m: 1.0,
            pathloss_exp: 4.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.ref_distance_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference distance must be positive, got {}",
                self.ref_distance_m
            )));
        }
        if !(self.pathloss_exp >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent must be at least 2, got {}",
                self.pathloss_exp
            )));
        }
        if !(self.tx_power_w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transmit power must be positive, got {}",
                self.tx_power_w
            )));
        }
        Ok(())
    }
}

/// Power gain `10^(h0/10) (D0/D)^n`.
pub fn channel_gain(radio: &RadioParams, distance: f64) -> Result<f64> {
    if !(distance >= radio.ref_distance_m) {
        return Err(Error::DistanceBelowReference {
            distance,
            reference: radio.ref_distance_m,
        });
    }
    Ok(10f64.powf(radio.pathloss_const_db / 10.0) * (radio.ref_distance_m / distance).powf(radio.pathloss_exp))
}

/// Noise power in W over the full band.
pub fn noise_power(radio: &RadioParams) -> f64 {
    10f64.powf((radio.noise_density_dbm_hz + 10.0 * radio.bandwidth_hz.log10() - 30.0) / 10.0)
}

/// `log2(1 + SNR)` in bit/s/Hz. The SNR does not depend on the share.
pub fn spectral_efficiency(radio: &RadioParams, gain: f64) -> f64 {
    (gain * radio.tx_power_w / noise_power(radio)).ln_1p() / std::f64::consts::LN_2
}

/// Shannon-rate upload time of `d_bits` over `share * B`.
pub fn comm_delay(d_bits: f64, share: f64, radio: &RadioParams, gain: f64) -> Result<f64> {
    if !(share > 0.0) {
        return Err(Error::InvalidParameter(format!("share must be positive, got {share}")));
    }
    Ok(d_bits / (share * radio.bandwidth_hz * spectral_efficiency(radio, gain)))
}
