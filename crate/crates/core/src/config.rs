//! Run configuration, read from a TOML key-value file.
//!
//! Every key is optional; see `data/sample_config.toml` for the full set.

use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{FilterId, SigmaPointParams};
use crate::ssm::{ContractSpec, GarchParams, ModelSpec, NoiseSpec, RiskTransition};
use crate::switching::{EstimationConfig, SwitchMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Step length in years.
    pub dt: f64,
    pub v0: f64,
    pub r0: f64,
    /// Diagonal of the initial covariance.
    pub p0: [f64; 2],
    #[serde(rename = "risk-transition")]
    pub risk_transition: RiskTransition,
    pub garch: GarchSection,
    pub noise: NoiseSection,
    pub filters: FilterSection,
    pub pcrlb: PcrlbSection,
    pub switch: SwitchSection,
    pub simulation: SimulationSection,
    pub data: DataSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: 1.0 / 252.0,
            v0: 1e-4,
            r0: 0.02,
            p0: [1e-9, 1e-4],
            risk_transition: RiskTransition::RandomWalk,
            garch: GarchSection::default(),
            noise: NoiseSection::default(),
            filters: FilterSection::default(),
            pcrlb: PcrlbSection::default(),
            switch: SwitchSection::default(),
            simulation: SimulationSection::default(),
            data: DataSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GarchSection {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Fit (ω, α, β) on the training-period underlying returns before a backtest.
    pub calibrate: bool,
    pub demean: bool,
}

impl Default for GarchSection {
    fn default() -> Self {
        Self { omega: 2e-6, alpha: 0.08, beta: 0.9, calibrate: false, demean: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub q11: f64,
    pub q22: f64,
    pub q12: f64,
    /// Measurement variance; defaults to `(0.01·K)²`.
    pub r: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { q11: 1e-10, q22: 1e-8, q12: 0.0, r: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub n_particles: usize,
    pub ess_threshold: Option<f64>,
    pub ukf: SigmaPointParams,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { n_particles: 2000, ess_threshold: None, ukf: SigmaPointParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcrlbSection {
    pub n_particles: usize,
}

impl Default for PcrlbSection {
    fn default() -> Self {
        Self { n_particles: 1000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchSection {
    #[serde(rename = "independent-chains")]
    pub independent_chains: bool,
}

/// Parameters for `simulate` and the synthetic experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub s0: f64,
    pub strikes: Vec<f64>,
    /// Expiry, in trading days after the first quote.
    pub expiry_step: usize,
    #[serde(with = "toml_date")]
    pub start_date: chrono::NaiveDate,
    pub steps: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            s0: 2800.0,
            strikes: vec![2000.0, 2500.0, 3000.0],
            expiry_step: 200,
            start_date: chrono::NaiveDate::from_ymd_opt(2019, 6, 3).expect("valid date"),
            steps: 150,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceField {
    /// Mid of bid/ask when both are present, else last trade.
    #[default]
    Mid,
    Last,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub price: PriceField,
    pub columns: ColumnMap,
}

/// Header names for each logical column of an option-chain file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub quote_date: String,
    pub expiry_date: String,
    pub strike: String,
    pub side: String,
    pub bid: String,
    pub ask: String,
    pub last: String,
    pub volume: String,
    pub underlying_close: String,
    pub implied_vol: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            quote_date: "quote_date".into(),
            expiry_date: "expiry_date".into(),
            strike: "strike".into(),
            side: "side".into(),
            bid: "bid".into(),
            ask: "ask".into(),
            last: "last".into(),
            volume: "volume".into(),
            underlying_close: "underlying_close".into(),
            implied_vol: "implied_vol".into(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.v0 >= 0.0) || !self.r0.is_finite() {
            return Err(Error::Config("v0 must be >= 0 and r0 finite".into()));
        }
        if self.p0.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config("p0 entries must be positive".into()));
        }
        self.garch_params()?;
        if self.filters.n_particles < 2 || self.pcrlb.n_particles < 2 {
            return Err(Error::Config("particle counts must be at least 2".into()));
        }
        if let Some(r) = self.noise.r {
            if !(r > 0.0) {
                return Err(Error::Config(format!("noise.r must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub fn garch_params(&self) -> Result<GarchParams> {
        GarchParams::new(self.garch.omega, self.garch.alpha, self.garch.beta)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn noise_spec(&self, strike: f64) -> Result<NoiseSpec> {
        let q = Matrix2::new(self.noise.q11, self.noise.q12, self.noise.q12, self.noise.q22);
        let r = self.noise.r.unwrap_or(NoiseSpec::defaults_for_strike(strike).r_meas);
        NoiseSpec::new(q, r).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_spec(&self, contract: ContractSpec) -> Result<ModelSpec> {
        Ok(ModelSpec::new(self.garch_params()?, contract, self.noise_spec(contract.strike)?, self.dt)?
            .with_risk_transition(self.risk_transition))
    }

    pub fn estimation_config(&self, filters: Vec<FilterId>, mode: SwitchMode) -> EstimationConfig {
        EstimationConfig {
            filters,
            mode,
            x0: Vector2::new(self.v0, self.r0),
            p0: Matrix2::new(self.p0[0], 0.0, 0.0, self.p0[1]),
            n_particles: self.filters.n_particles,
            ess_threshold: self.filters.ess_threshold,
            sigma_points: self.filters.ukf,
            pcrlb_particles: self.pcrlb.n_particles,
            independent_chains: self.switch.independent_chains,
            seed: self.seed,
        }
    }
}

/// Dates as either a bare TOML date or an ISO-8601 string.
mod toml_date {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Native(toml::value::Datetime),
        Text(String),
    }

    pub fn serialize<S: Serializer>(d: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        let dt: toml::value::Datetime = d.to_string().parse().map_err(serde::ser::Error::custom)?;
        serde::Serialize::serialize(&dt, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let text = match Raw::deserialize(d)? {
            Raw::Native(dt) => dt.to_string(),
            Raw::Text(s) => s,
        };
        NaiveDate::parse_from_str(&text, "%Y-%m-%d").map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dates_bare_or_quoted() {
        let a = Config::from_toml_str("[simulation]\nstart_date = 2020-01-02\n").unwrap();
        let b = Config::from_toml_str("[simulation]\nstart_date = \"2020-01-02\"\n").unwrap();
        assert_eq!(a.simulation.start_date, b.simulation.start_date);
        assert_eq!(Config::from_toml_str(&a.to_toml_string().unwrap()).unwrap(), a);
    }

    #[test]
    fn dotted_keys_parse() {
        let cfg = Config::from_toml_str(
            r#"
            seed = 7
            risk-transition = "literal"
            garch.omega = 1e-6
            garch.alpha = 0.05
            garch.beta = 0.9
            noise.r = 4.0
            filters.ukf.alpha = 0.5
            switch.independent-chains = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.risk_transition, RiskTransition::Literal);
        assert_eq!(cfg.garch.alpha, 0.05);
        assert_eq!(cfg.noise.r, Some(4.0));
        assert_eq!(cfg.filters.ukf.alpha, 0.5);
        assert!(cfg.switch.independent_chains);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::from_toml_str("garch.gamma = 1.0"), Err(Error::Config(_))));
    }

    #[test]
    fn non_stationary_garch_is_rejected() {
        assert!(Config::from_toml_str("garch.alpha = 0.5\ngarch.beta = 0.6").is_err());
    }

    #[test]
    fn default_measurement_noise_scales_with_strike() {
        let cfg = Config::default();
        assert_eq!(cfg.noise_spec(2500.0).unwrap().r_meas, 625.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = Config::default();
        let back = Config::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
