//! Scenario files.
//!
//! A scenario is a TOML document whose physical quantities are strings with
//! a unit suffix:
//!
//! | kind   | accepted units                | bare number means |
//! |--------|-------------------------------|-------------------|
//! | length | `m`, `km`                     | metres            |
//! | angle  | `deg`, `rad`                  | (rejected)        |
//! | power  | `W`, `mW`, `dBm`, `dBW`       | watts             |
//! | ratio  | `dB`                          | linear            |
//!
//! Unknown keys are rejected. Written files use SI units (`m`, `rad`, `W`,
//! linear ratios) so that a save/load round trip is exact.

use std::fmt;
use std::marker::PhantomData;
use std::path::Path;

use num_complex::Complex64;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{IsacError, Result};
use crate::fim::SensingGeometry;
use crate::geometry::{ArrayConfig, UserGeometry, DEFAULT_SPACING_RATIO};
use crate::scenario::{db_to_linear, dbm_to_watts, Scenario};
use crate::schemes::AlgorithmConfig;

pub trait Dimension {
    const NAME: &'static str;
    /// Converts `value unit` to SI; `unit` is empty for a bare number.
    fn to_si(value: f64, unit: &str) -> Option<f64>;
    fn write(si: f64) -> QuantityRepr;
}

pub enum QuantityRepr {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy)]
pub struct Length;
#[derive(Debug, Clone, Copy)]
pub struct Angle;
#[derive(Debug, Clone, Copy)]
pub struct Power;
#[derive(Debug, Clone, Copy)]
pub struct Ratio;

impl Dimension for Length {
    const NAME: &'static str = "length (m, km)";
    fn to_si(v: f64, unit: &str) -> Option<f64> {
        match unit {
            "" | "m" => Some(v),
            "km" => Some(v * 1e3),
            _ => None,
        }
    }
    fn write(si: f64) -> QuantityRepr {
        QuantityRepr::Text(format!("{si:?} m"))
    }
}

impl Dimension for Angle {
    const NAME: &'static str = "angle (deg, rad)";
    fn to_si(v: f64, unit: &str) -> Option<f64> {
        match unit {
            "deg" | "°" => Some(v.to_radians()),
            "rad" => Some(v),
            _ => None,
        }
    }
    fn write(si: f64) -> QuantityRepr {
        QuantityRepr::Text(format!("{si:?} rad"))
    }
}

impl Dimension for Power {
    const NAME: &'static str = "power (W, mW, dBm, dBW)";
    fn to_si(v: f64, unit: &str) -> Option<f64> {
        match unit {
            "" | "W" => Some(v),
            "mW" => Some(v * 1e-3),
            "dBm" => Some(dbm_to_watts(v)),
            "dBW" => Some(dbm_to_watts(v + 30.0)),
            _ => None,
        }
    }
    fn write(si: f64) -> QuantityRepr {
        QuantityRepr::Text(format!("{si:?} W"))
    }
}

impl Dimension for Ratio {
    const NAME: &'static str = "ratio (dB or linear)";
    fn to_si(v: f64, unit: &str) -> Option<f64> {
        match unit {
            "" => Some(v),
            "dB" => Some(db_to_linear(v)),
            _ => None,
        }
    }
    fn write(si: f64) -> QuantityRepr {
        QuantityRepr::Number(si)
    }
}

/// A physical quantity stored in SI units.
pub struct Quantity<D>(pub f64, PhantomData<D>);

impl<D> Quantity<D> {
    pub fn new(si: f64) -> Self {
        Self(si, PhantomData)
    }
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<D> Copy for Quantity<D> {}

impl<D> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Parses `"<number> <unit>"` (the space is optional).
pub fn parse_quantity<D: Dimension>(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, ch)| {
            !(ch.is_ascii_digit() || ch == '.' || ch == '+' || ch == '-'
                || ((ch == 'e' || ch == 'E') && i > 0 && t[i + 1..].starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("'{text}' is not a number with a unit"))?;
    D::to_si(value, unit.trim())
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("'{text}': expected {}", D::NAME))
}

impl<D: Dimension> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match D::write(self.0) {
            QuantityRepr::Number(v) => s.serialize_f64(v),
            QuantityRepr::Text(t) => s.serialize_str(&t),
        }
    }
}

struct QuantityVisitor<D>(PhantomData<D>);

impl<D: Dimension> Visitor<'_> for QuantityVisitor<D> {
    type Value = Quantity<D>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a {} such as a number or a string with a unit", D::NAME)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
        D::to_si(v, "")
            .map(Quantity::new)
            .ok_or_else(|| E::custom(format!("{v}: a {} needs a unit", D::NAME)))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
        self.visit_f64(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
        parse_quantity::<D>(v).map(Quantity::new).map_err(E::custom)
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        d.deserialize_any(QuantityVisitor(PhantomData))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default = "default_seed")]
    seed: u64,
    array: ArrayFile,
    noise: NoiseFile,
    sensing: SensingFile,
    #[serde(default)]
    algorithm: AlgorithmFile,
    users: Vec<NodeFile>,
    #[serde(default)]
    eavesdroppers: Vec<NodeFile>,
}

fn default_seed() -> u64 {
    1
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING_RATIO
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayFile {
    n_tx: usize,
    n_rx: usize,
    /// element spacing over wavelength
    #[serde(default = "default_spacing")]
    spacing_ratio: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    user: Quantity<Power>,
    eavesdropper: Quantity<Power>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFile {
    distance: Quantity<Length>,
    azimuth: Quantity<Angle>,
    rician_factor: Quantity<Ratio>,
    pathloss_exponent: f64,
    /// path gain at the 1 m reference distance
    ref_gain: Quantity<Ratio>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensingFile {
    targets: Vec<Quantity<Angle>>,
    /// `[re, im]` per target; unit amplitudes when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<[f64; 2]>>,
    snapshots: usize,
    noise: Quantity<Power>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AlgorithmFile {
    p_max: Quantity<Power>,
    qos_threshold: f64,
    secrecy_threshold: f64,
    crb_threshold: Quantity<Ratio>,
    penalty_weight: f64,
    penalty_ramp: bool,
    tau: f64,
    j_max: usize,
    security_margin: f64,
}

impl Default for AlgorithmFile {
    fn default() -> Self {
        AlgorithmFile::from(&AlgorithmConfig::default())
    }
}

impl From<&AlgorithmConfig> for AlgorithmFile {
    fn from(c: &AlgorithmConfig) -> Self {
        Self {
            p_max: Quantity::new(c.p_max),
            qos_threshold: c.qos_threshold,
            secrecy_threshold: c.secrecy_threshold,
            crb_threshold: Quantity::new(c.crb_threshold),
            penalty_weight: c.penalty_weight,
            penalty_ramp: c.penalty_ramp,
            tau: c.tau,
            j_max: c.j_max,
            security_margin: c.security_margin,
        }
    }
}

impl NodeFile {
    fn into_geometry(self) -> UserGeometry {
        UserGeometry {
            distance: self.distance.0,
            azimuth: self.azimuth.0,
            rician_factor: self.rician_factor.0,
            pathloss_exponent: self.pathloss_exponent,
            ref_gain: self.ref_gain.0,
        }
    }

    fn from_geometry(g: &UserGeometry) -> Self {
        Self {
            distance: Quantity::new(g.distance),
            azimuth: Quantity::new(g.azimuth),
            rician_factor: Quantity::new(g.rician_factor),
            pathloss_exponent: g.pathloss_exponent,
            ref_gain: Quantity::new(g.ref_gain),
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let n_targets = self.sensing.targets.len();
        let amplitudes = match self.sensing.amplitudes {
            Some(a) if a.len() != n_targets => {
                return Err(IsacError::Config(format!(
                    "sensing.amplitudes has {} entries for {n_targets} targets",
                    a.len()
                )))
            }
            Some(a) => a.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            None => vec![Complex64::new(1.0, 0.0); n_targets],
        };
        let a = self.algorithm;
        Ok(Scenario {
            array: ArrayConfig {
                n_tx: self.array.n_tx,
                n_rx: self.array.n_rx,
                spacing_ratio: self.array.spacing_ratio,
            },
            users: self.users.into_iter().map(NodeFile::into_geometry).collect(),
            eavesdroppers: self.eavesdroppers.into_iter().map(NodeFile::into_geometry).collect(),
            sensing: SensingGeometry {
                target_azimuths: self.sensing.targets.iter().map(|q| q.0).collect(),
                amplitudes,
                snapshots: self.sensing.snapshots,
                noise_power: self.sensing.noise.0,
            },
            user_noise: self.noise.user.0,
            eaves_noise: self.noise.eavesdropper.0,
            algorithm: AlgorithmConfig {
                p_max: a.p_max.0,
                qos_threshold: a.qos_threshold,
                secrecy_threshold: a.secrecy_threshold,
                crb_threshold: a.crb_threshold.0,
                penalty_weight: a.penalty_weight,
                penalty_ramp: a.penalty_ramp,
                tau: a.tau,
                j_max: a.j_max,
                security_margin: a.security_margin,
            },
            seed: self.seed,
        })
    }

    fn from_scenario(s: &Scenario) -> Self {
        Self {
            seed: s.seed,
            array: ArrayFile {
                n_tx: s.array.n_tx,
                n_rx: s.array.n_rx,
                spacing_ratio: s.array.spacing_ratio,
            },
            noise: NoiseFile {
                user: Quantity::new(s.user_noise),
                eavesdropper: Quantity::new(s.eaves_noise),
            },
            sensing: SensingFile {
                targets: s.sensing.target_azimuths.iter().map(|&t| Quantity::new(t)).collect(),
                amplitudes: Some(s.sensing.amplitudes.iter().map(|a| [a.re, a.im]).collect()),
                snapshots: s.sensing.snapshots,
                noise: Quantity::new(s.sensing.noise_power),
            },
            algorithm: AlgorithmFile::from(&s.algorithm),
            users: s.users.iter().map(NodeFile::from_geometry).collect(),
            eavesdroppers: s.eavesdroppers.iter().map(NodeFile::from_geometry).collect(),
        }
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| IsacError::Config(e.to_string()))?;
    let scenario = file.into_scenario()?;
    scenario.validate().map_err(|e| match e {
        IsacError::Config(m) => IsacError::Config(m),
        other => IsacError::Config(other.to_string()),
    })?;
    Ok(scenario)
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IsacError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| IsacError::Config(format!("{}: {}", path.display(), strip_prefix(e))))
}

fn strip_prefix(e: IsacError) -> String {
    match e {
        IsacError::Config(m) => m,
        other => other.to_string(),
    }
}

/// Scenario as TOML text in SI units.
pub fn scenario_to_toml(scenario: &Scenario) -> Result<String> {
    toml::to_string_pretty(&ScenarioFile::from_scenario(scenario))
        .map_err(|e| IsacError::Config(format!("cannot serialize scenario: {e}")))
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_toml(scenario)?).map_err(|source| IsacError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_with_units() {
        assert_eq!(parse_quantity::<Length>("60 m").unwrap(), 60.0);
        assert_eq!(parse_quantity::<Length>("1.5km").unwrap(), 1500.0);
        assert_eq!(parse_quantity::<Angle>("-60 deg").unwrap(), (-60f64).to_radians());
        assert_eq!(parse_quantity::<Power>("30 dBm").unwrap(), 1.0);
        assert_eq!(parse_quantity::<Power>("2.5e-3 W").unwrap(), 2.5e-3);
        assert_eq!(parse_quantity::<Ratio>("-30 dB").unwrap(), 1e-3);
        assert!(parse_quantity::<Angle>("30").is_err());
        assert!(parse_quantity::<Power>("30 dB").is_err());
        assert!(parse_quantity::<Length>("m").is_err());
    }

    #[test]
    fn empty_user_list_is_rejected() {
        let mut text = scenario_to_toml(&Scenario::reference()).unwrap();
        let start = text.find("[[users]]").unwrap();
        let end = text.find("[[eavesdroppers]]").unwrap();
        text.replace_range(start..end, "");
        let text = format!("users = []\n{text}");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("at least one user"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = scenario_to_toml(&Scenario::reference()).unwrap().replacen("[array]", "[array]\ncolour = 3", 1);
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn round_trip_is_exact() {
        let s = Scenario::reference();
        assert_eq!(parse_scenario(&scenario_to_toml(&s).unwrap()).unwrap(), s);
    }
}
