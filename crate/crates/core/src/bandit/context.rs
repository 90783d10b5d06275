//! Context and action spaces of the inner bandit.
//!
//! The context is the pair (quantized SNR report, quantized age of that
//! report). The action is a (modulation, power class) pair. Both spaces are
//! small and fixed, so they are indexed densely: `index = major * 3 + minor`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BanditError;

/// Channel quality class of an SNR report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrClass {
    /// [10, 18] dB, and everything below 10 dB.
    Low,
    /// (18, 30] dB.
    Medium,
    /// (30, 40] dB, and everything above 40 dB.
    High,
}

impl SnrClass {
    pub const ALL: [SnrClass; 3] = [SnrClass::Low, SnrClass::Medium, SnrClass::High];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Nominal dB range of the class, ignoring the clamped tails.
    pub fn range_db(self) -> (f64, f64) {
        match self {
            SnrClass::Low => (10.0, 18.0),
            SnrClass::Medium => (18.0, 30.0),
            SnrClass::High => (30.0, 40.0),
        }
    }
}

/// Maps an SNR in dB to its quality class.
///
/// Bounds are closed on the right: 18 dB is `Low`, 30 dB is `Medium`.
/// Values outside [10, 40] clamp to the nearest class.
pub fn quantize_snr(snr_db: f64) -> Result<SnrClass, BanditError> {
    if !snr_db.is_finite() {
        return Err(BanditError::NonFiniteSnr(snr_db));
    }
    Ok(if snr_db <= 18.0 {
        SnrClass::Low
    } else if snr_db <= 30.0 {
        SnrClass::Medium
    } else {
        SnrClass::High
    })
}

/// Staleness class of the transmitter's channel knowledge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AoiClass {
    /// Age 0..=4 slots.
    Fresh,
    /// Age 5..=7 slots.
    Stale,
    /// Age 8 slots or more.
    VeryStale,
}

impl AoiClass {
    pub const ALL: [AoiClass; 3] = [AoiClass::Fresh, AoiClass::Stale, AoiClass::VeryStale];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Bins an age in slots. The bin edges line up with the {4, 7, 10} minute
/// interval menu.
pub fn quantize_aoi(age_slots: u64) -> AoiClass {
    match age_slots {
        0..=4 => AoiClass::Fresh,
        5..=7 => AoiClass::Stale,
        _ => AoiClass::VeryStale,
    }
}

/// Key of the inner bandit's arm table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    pub snr: SnrClass,
    pub aoi: AoiClass,
}

impl Context {
    pub const COUNT: usize = 9;

    pub fn new(snr: SnrClass, aoi: AoiClass) -> Self {
        Self { snr, aoi }
    }

    /// Builds the context from a raw SNR report and its age.
    pub fn observe(snr_db: f64, age_slots: u64) -> Result<Self, BanditError> {
        Ok(Self::new(quantize_snr(snr_db)?, quantize_aoi(age_slots)))
    }

    pub fn index(self) -> usize {
        self.snr.index() * 3 + self.aoi.index()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::COUNT).then(|| Self::new(SnrClass::ALL[index / 3], AoiClass::ALL[index % 3]))
    }

    pub fn all() -> impl Iterator<Item = Context> {
        (0..Self::COUNT).filter_map(Self::from_index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Psk8,
    Psk16,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Bpsk, Modulation::Psk8, Modulation::Psk16];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Constellation size M.
    pub fn order(self) -> u32 {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Psk8 => 8,
            Modulation::Psk16 => 16,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        self.order().trailing_zeros()
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Psk8 => "psk8",
            Modulation::Psk16 => "psk16",
        }
    }
}

/// Discrete transmit power class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerLevel {
    Low,
    Medium,
    High,
}

impl PowerLevel {
    pub const ALL: [PowerLevel; 3] = [PowerLevel::Low, PowerLevel::Medium, PowerLevel::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PowerLevel::Low => "low",
            PowerLevel::Medium => "medium",
            PowerLevel::High => "high",
        }
    }
}

/// A (modulation, power) pair chosen once per slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub modulation: Modulation,
    pub power: PowerLevel,
}

impl Action {
    pub const COUNT: usize = 9;

    pub fn new(modulation: Modulation, power: PowerLevel) -> Self {
        Self { modulation, power }
    }

    /// Dense index, modulation-major: `a0 = (BPSK, low)`, `a8 = (16-PSK, high)`.
    pub fn index(self) -> usize {
        self.modulation.index() * 3 + self.power.index()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::COUNT)
            .then(|| Self::new(Modulation::ALL[index / 3], PowerLevel::ALL[index % 3]))
    }

    pub fn all() -> Vec<Action> {
        (0..Self::COUNT).filter_map(Self::from_index).collect()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.modulation.name(), self.power.name())
    }
}

impl FromStr for Action {
    type Err = BanditError;

    /// Parses `"<modulation>:<power>"`, e.g. `"psk16:low"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BanditError::BadAction(s.to_string());
        let (m, p) = s.split_once(':').ok_or_else(bad)?;
        let modulation = Modulation::ALL
            .into_iter()
            .find(|x| x.name() == m.trim())
            .ok_or_else(bad)?;
        let power = PowerLevel::ALL
            .into_iter()
            .find(|x| x.name() == p.trim())
            .ok_or_else(bad)?;
        Ok(Action::new(modulation, power))
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_class_boundaries() {
        assert_eq!(quantize_snr(18.0).unwrap(), SnrClass::Low);
        assert_eq!(quantize_snr(25.0).unwrap(), SnrClass::Medium);
        assert_eq!(quantize_snr(7.5).unwrap(), SnrClass::Low);
        assert_eq!(quantize_snr(10.0).unwrap(), SnrClass::Low);
        assert_eq!(quantize_snr(18.000001).unwrap(), SnrClass::Medium);
        assert_eq!(quantize_snr(30.0).unwrap(), SnrClass::Medium);
        assert_eq!(quantize_snr(30.5).unwrap(), SnrClass::High);
        assert_eq!(quantize_snr(55.0).unwrap(), SnrClass::High);
    }

    #[test]
    fn snr_rejects_non_finite() {
        assert!(quantize_snr(f64::NAN).is_err());
        assert!(quantize_snr(f64::INFINITY).is_err());
        assert!(quantize_snr(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn aoi_bins() {
        assert_eq!(quantize_aoi(0), AoiClass::Fresh);
        assert_eq!(quantize_aoi(4), AoiClass::Fresh);
        assert_eq!(quantize_aoi(5), AoiClass::Stale);
        assert_eq!(quantize_aoi(7), AoiClass::Stale);
        assert_eq!(quantize_aoi(8), AoiClass::VeryStale);
        assert_eq!(quantize_aoi(12), AoiClass::VeryStale);
    }

    #[test]
    fn spaces_have_nine_elements() {
        assert_eq!(Context::all().count(), 9);
        assert_eq!(Action::all().len(), 9);
        for (i, a) in Action::all().into_iter().enumerate() {
            assert_eq!(a.index(), i);
        }
        for (i, c) in Context::all().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn action_text_form() {
        let a: Action = "psk16:low".parse().unwrap();
        assert_eq!(a, Action::new(Modulation::Psk16, PowerLevel::Low));
        assert_eq!(a.to_string(), "psk16:low");
        assert!("qam:low".parse::<Action>().is_err());
        assert!("bpsk".parse::<Action>().is_err());
    }

    #[test]
    fn bits_per_symbol() {
        assert_eq!(Modulation::Bpsk.bits_per_symbol(), 1);
        assert_eq!(Modulation::Psk8.bits_per_symbol(), 3);
        assert_eq!(Modulation::Psk16.bits_per_symbol(), 4);
    }
}
