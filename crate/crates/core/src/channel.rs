//! Shallow-water acoustic link budget.
//!
//! SNR comes from a passive-sonar style budget: source level minus
//! spreading and Thorp absorption loss minus the ambient noise level in the
//! receiver band, plus a slowly varying AR(1) shadowing term. SNR is turned
//! into a frame success probability through the uncoded M-PSK bit error
//! rate in AWGN and an independent-bit-error frame model.
//!
//! Frequencies are in kHz, distances in meters, levels in dB re 1 µPa.

use serde::{Deserialize, Serialize};

use crate::bandit::{Modulation, PowerLevel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("{name} must be {constraint}, got {value}")]
    OutOfRange {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
}

fn check(
    ok: bool,
    name: &'static str,
    constraint: &'static str,
    value: f64,
) -> Result<(), ChannelError> {
    if ok {
        Ok(())
    } else {
        Err(ChannelError::OutOfRange {
            name,
            constraint,
            value,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub frequency_khz: f64,
    pub bandwidth_hz: f64,
    pub wind_kmh: f64,
    /// Shipping activity factor in [0, 1].
    pub shipping: f64,
    /// Geometric spreading exponent: 1 cylindrical, 2 spherical.
    pub spreading: f64,
    pub sound_speed_mps: f64,
    pub shadowing_sigma_db: f64,
    /// AR(1) coefficient of the shadowing process, one step per slot.
    pub shadowing_corr: f64,
    /// Forces every bit error rate to zero.
    pub lossless: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            frequency_khz: 10.5,
            bandwidth_hz: 4200.0,
            wind_kmh: 50.0,
            shipping: 0.5,
            spreading: 1.75,
            sound_speed_mps: 1500.0,
            shadowing_sigma_db: 2.0,
            shadowing_corr: 0.9,
            lossless: false,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let f = self.frequency_khz;
        check(f.is_finite() && f > 0.0, "channel.frequency_khz", "> 0", f)?;
        let b = self.bandwidth_hz;
        check(b.is_finite() && b > 0.0, "channel.bandwidth_hz", "> 0", b)?;
        let w = self.wind_kmh;
        check(w.is_finite() && w >= 0.0, "channel.wind_kmh", ">= 0", w)?;
        let z = self.shipping;
        check((0.0..=1.0).contains(&z), "channel.shipping", "in [0, 1]", z)?;
        let s = self.spreading;
        check(
            (1.0..=2.0).contains(&s),
            "channel.spreading",
            "in [1, 2]",
            s,
        )?;
        let c = self.sound_speed_mps;
        check(
            c.is_finite() && c > 0.0,
            "channel.sound_speed_mps",
            "> 0",
            c,
        )?;
        let sd = self.shadowing_sigma_db;
        check(
            sd.is_finite() && sd >= 0.0,
            "channel.shadowing_sigma_db",
            ">= 0",
            sd,
        )?;
        let r = self.shadowing_corr;
        check(
            (0.0..1.0).contains(&r),
            "channel.shadowing_corr",
            "in [0, 1)",
            r,
        )?;
        Ok(())
    }
}

/// Transmit power per class and its conversion to a source level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerMap {
    pub low_w: f64,
    pub medium_w: f64,
    pub high_w: f64,
    /// Source level of a 1 W projector, dB re 1 µPa @ 1 m.
    pub source_level_ref_db: f64,
}

impl Default for PowerMap {
    fn default() -> Self {
        Self {
            low_w: 1.0,
            medium_w: 3.0,
            high_w: 8.0,
            source_level_ref_db: 170.8,
        }
    }
}

impl PowerMap {
    pub fn validate(&self) -> Result<(), ChannelError> {
        check(self.low_w > 0.0, "power.low_w", "> 0", self.low_w)?;
        check(
            self.medium_w > self.low_w,
            "power.medium_w",
            "> power.low_w",
            self.medium_w,
        )?;
        check(
            self.high_w > self.medium_w && self.high_w.is_finite(),
            "power.high_w",
            "> power.medium_w",
            self.high_w,
        )?;
        check(
            self.source_level_ref_db.is_finite(),
            "power.source_level_ref_db",
            "finite",
            self.source_level_ref_db,
        )
    }

    pub fn watts(&self, level: PowerLevel) -> f64 {
        match level {
            PowerLevel::Low => self.low_w,
            PowerLevel::Medium => self.medium_w,
            PowerLevel::High => self.high_w,
        }
    }

    pub fn source_level_db(&self, level: PowerLevel) -> f64 {
        self.source_level_ref_db + 10.0 * self.watts(level).log10()
    }

    /// dB offset between two power classes.
    pub fn gain_db(&self, from: PowerLevel, to: PowerLevel) -> f64 {
        10.0 * (self.watts(to) / self.watts(from)).log10()
    }
}

/// State of one acoustic link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub distance_m: f64,
    pub shadow_db: f64,
}

impl LinkState {
    pub fn new(distance_m: f64) -> Self {
        Self {
            distance_m,
            shadow_db: 0.0,
        }
    }

    pub fn propagation_delay_s(&self, params: &ChannelParams) -> f64 {
        self.distance_m / params.sound_speed_mps
    }
}

/// Thorp absorption coefficient in dB/km.
pub fn thorp_absorption(frequency_khz: f64) -> Result<f64, ChannelError> {
    check(
        frequency_khz.is_finite() && frequency_khz > 0.0,
        "frequency_khz",
        "> 0",
        frequency_khz,
    )?;
    let f2 = frequency_khz * frequency_khz;
    Ok(0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003)
}

/// Spreading plus absorption loss in dB over `distance_m`.
pub fn transmission_loss(distance_m: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    check(
        distance_m.is_finite() && distance_m > 0.0,
        "distance_m",
        "> 0",
        distance_m,
    )?;
    let alpha = thorp_absorption(params.frequency_khz)?;
    Ok(params.spreading * 10.0 * distance_m.log10() + distance_m / 1000.0 * alpha)
}

/// The four ambient-noise components at the carrier, in dB re µPa²/Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseComponents {
    pub turbulence: f64,
    pub shipping: f64,
    pub wind: f64,
    pub thermal: f64,
}

impl NoiseComponents {
    pub fn at(params: &ChannelParams) -> Self {
        let f = params.frequency_khz;
        let lf = f.log10();
        let w_mps = params.wind_kmh / 3.6;
        Self {
            turbulence: 17.0 - 30.0 * lf,
            shipping: 40.0 + 20.0 * (params.shipping - 0.5) + 26.0 * lf - 60.0 * (f + 0.03).log10(),
            wind: 50.0 + 7.5 * w_mps.sqrt() + 20.0 * lf - 40.0 * (f + 0.4).log10(),
            thermal: -15.0 + 20.0 * lf,
        }
    }

    /// Power sum of the components, in dB.
    pub fn total_db(&self) -> f64 {
        let lin: f64 = [self.turbulence, self.shipping, self.wind, self.thermal]
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .sum();
        10.0 * lin.log10()
    }
}

/// Ambient noise power spectral density at the carrier.
pub fn noise_psd(params: &ChannelParams) -> Result<f64, ChannelError> {
    params.validate()?;
    Ok(NoiseComponents::at(params).total_db())
}

/// Average SNR of `link` at `power`, in dB. Includes the link's current
/// shadowing offset.
pub fn mean_snr(
    link: &LinkState,
    power: PowerLevel,
    params: &ChannelParams,
    pmap: &PowerMap,
) -> Result<f64, ChannelError> {
    let tl = transmission_loss(link.distance_m, params)?;
    let noise = noise_psd(params)? + 10.0 * params.bandwidth_hz.log10();
    Ok(pmap.source_level_db(power) - tl - noise + link.shadow_db)
}

/// Precomputed terms of [`mean_snr`] for a fixed parameter set.
///
/// `snr_db(d, p, shadow)` equals `mean_snr` bit for bit; it only avoids
/// recomputing the noise level on every frame.
#[derive(Clone, Debug)]
pub struct LinkBudget {
    params: ChannelParams,
    pmap: PowerMap,
    noise_band_db: f64,
}

impl LinkBudget {
    pub fn new(params: &ChannelParams, pmap: &PowerMap) -> Result<Self, ChannelError> {
        params.validate()?;
        pmap.validate()?;
        Ok(Self {
            params: params.clone(),
            pmap: pmap.clone(),
            noise_band_db: noise_psd(params)? + 10.0 * params.bandwidth_hz.log10(),
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn power_map(&self) -> &PowerMap {
        &self.pmap
    }

    pub fn snr_db(&self, link: &LinkState, power: PowerLevel) -> f64 {
        let tl = transmission_loss(link.distance_m, &self.params)
            .expect("link distances are validated at topology construction");
        self.pmap.source_level_db(power) - tl - self.noise_band_db + link.shadow_db
    }
}

/// One AR(1) step of the shadowing process driven by a standard normal
/// `draw`. The stationary law is Normal(0, sigma²).
pub fn evolve_shadowing(link: &LinkState, params: &ChannelParams, draw: f64) -> LinkState {
    let rho = params.shadowing_corr;
    LinkState {
        distance_m: link.distance_m,
        shadow_db: rho * link.shadow_db
            + params.shadowing_sigma_db * (1.0 - rho * rho).sqrt() * draw,
    }
}

/// Gaussian tail probability Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Bit error rate of uncoded, Gray-mapped M-PSK in AWGN, clamped to [0, 0.5].
pub fn ber(snr_db: f64, modulation: Modulation, params: &ChannelParams, bitrate: f64) -> f64 {
    if params.lossless {
        return 0.0;
    }
    if snr_db.is_nan() {
        return 0.5;
    }
    let ebn0 = 10f64.powf(snr_db / 10.0) * params.bandwidth_hz / bitrate;
    let p = match modulation {
        Modulation::Bpsk => q_function((2.0 * ebn0).sqrt()),
        m => {
            let k = f64::from(m.bits_per_symbol());
            let arg = (2.0 * k * ebn0).sqrt() * (std::f64::consts::PI / f64::from(m.order())).sin();
            2.0 / k * q_function(arg)
        }
    };
    p.clamp(0.0, 0.5)
}

/// Probability that a frame of `frame_bits` bits has no bit error.
pub fn frame_success(ber: f64, frame_bits: u64) -> f64 {
    // ln_1p keeps precision for tiny BERs
    (frame_bits as f64 * (-ber).ln_1p()).exp()
}

/// Raw data rate in bit/s: one symbol per Hz of bandwidth.
pub fn bitrate(modulation: Modulation, params: &ChannelParams) -> f64 {
    params.bandwidth_hz * f64::from(modulation.bits_per_symbol())
}
