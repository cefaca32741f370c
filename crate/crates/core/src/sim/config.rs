use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("{field} must be finite and positive, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("d_min_bps ({min}) must be below d_max_bps ({max})")]
    RateAnchors { min: f64, max: f64 },
    #[error("invalid velocity range [{0}, {1}]")]
    VelocityRange(f64, f64),
    #[error("bs_positions has {got} entries but num_bs is {expected}")]
    BsCount { expected: usize, got: usize },
    #[error("base station {index} at ({x}, {y}) lies outside the {width}x{height} m area")]
    BsOutOfArea {
        index: usize,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("carrier frequency {0} MHz outside the Hata validity range [150, 1500]")]
    CarrierOutOfRange(f64),
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("malformed scenario file: {0}")]
    Json(String),
}

/// Scenario parameters for one network environment.
///
/// Serialized field-for-field as a scenario file. Missing keys take the
/// defaults below; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub num_ues: usize,
    pub num_bs: usize,
    pub area_width: f64,
    pub area_height: f64,
    /// Explicit BS layout. `None` places the stations on a uniform grid.
    pub bs_positions: Option<Vec<Point>>,
    /// `[min, max]` UE speed in m/s.
    pub ue_velocity_range: [f64; 2],
    pub episode_len: usize,
    pub step_duration: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub carrier_freq_mhz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub noise_dbm_per_hz: f64,
    /// Linear SINR gate for a connection.
    pub sinr_min: f64,
    pub d_min_bps: f64,
    pub d_max_bps: f64,
    pub seed: u64,
    /// Count the other base stations as co-channel interferers.
    pub interference: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_ues: 5,
            num_bs: 3,
            area_width: 1000.0,
            area_height: 1000.0,
            bs_positions: None,
            ue_velocity_range: [1.0, 10.0],
            episode_len: 100,
            step_duration: 1.0,
            tx_power_dbm: 40.0,
            bandwidth_hz: 9e6,
            carrier_freq_mhz: 900.0,
            bs_height_m: 50.0,
            ue_height_m: 1.5,
            noise_dbm_per_hz: -174.0,
            sinr_min: 1.0,
            d_min_bps: 1e5,
            d_max_bps: 1e8,
            seed: 0,
            interference: false,
        }
    }
}

impl EnvConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: EnvConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_ues == 0 {
            return Err(ConfigError::ZeroCount("num_ues"));
        }
        if self.num_bs == 0 {
            return Err(ConfigError::ZeroCount("num_bs"));
        }
        if self.episode_len == 0 {
            return Err(ConfigError::ZeroCount("episode_len"));
        }
        for (field, value) in [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("step_duration", self.step_duration),
            ("bandwidth_hz", self.bandwidth_hz),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
            ("sinr_min", self.sinr_min),
            ("d_min_bps", self.d_min_bps),
            ("d_max_bps", self.d_max_bps),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NotPositive { field, value });
            }
        }
        for (field, value) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_dbm_per_hz", self.noise_dbm_per_hz),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NotFinite { field, value });
            }
        }
        if self.d_min_bps >= self.d_max_bps {
            return Err(ConfigError::RateAnchors {
                min: self.d_min_bps,
                max: self.d_max_bps,
            });
        }
        let [vmin, vmax] = self.ue_velocity_range;
        if !(vmin.is_finite() && vmax.is_finite() && vmin >= 0.0 && vmin <= vmax) {
            return Err(ConfigError::VelocityRange(vmin, vmax));
        }
        if !(150.0..=1500.0).contains(&self.carrier_freq_mhz) {
            return Err(ConfigError::CarrierOutOfRange(self.carrier_freq_mhz));
        }
        if let Some(positions) = &self.bs_positions {
            if positions.len() != self.num_bs {
                return Err(ConfigError::BsCount {
                    expected: self.num_bs,
                    got: positions.len(),
                });
            }
            for (index, p) in positions.iter().enumerate() {
                if !self.contains(p) {
                    return Err(ConfigError::BsOutOfArea {
                        index,
                        x: p.x,
                        y: p.y,
                        width: self.area_width,
                        height: self.area_height,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x.is_finite()
            && p.y.is_finite()
            && (0.0..=self.area_width).contains(&p.x)
            && (0.0..=self.area_height).contains(&p.y)
    }

    /// The explicit BS layout, or cell centers of a near-square grid.
    pub fn resolved_bs_positions(&self) -> Vec<Point> {
        if let Some(positions) = &self.bs_positions {
            return positions.clone();
        }
        let n = self.num_bs;
        let cols = (n as f64).sqrt().ceil() as usize;
        let rows = n.div_ceil(cols);
        (0..n)
            .map(|k| {
                let (r, c) = (k / cols, k % cols);
                Point::new(
                    (c as f64 + 0.5) * self.area_width / cols as f64,
                    (r as f64 + 0.5) * self.area_height / rows as f64,
                )
            })
            .collect()
    }

    /// Noise power over the full channel bandwidth, in dBm.
    pub fn noise_dbm(&self) -> f64 {
        self.noise_dbm_per_hz + 10.0 * self.bandwidth_hz.log10()
    }
}
