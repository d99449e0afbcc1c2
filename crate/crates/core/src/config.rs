//! Experiment configuration file (TOML, keys named after the model symbols).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmarks::DEFAULT_DFT_CAP;
use crate::codebook::AoConfig;
use crate::error::{Error, Result};
use crate::eval::{LinkBudget, MobilityConfig, PatternGrid};
use crate::geometry::{build_geometry, max_deployable_elements, RadomeConfig, RadomeGeometry, IRS_COUNT};
use crate::sdp::SdpOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Experiment run by `eval` when none is given on the command line.
    pub experiment: Option<String>,
    pub radome: RadomeConfig,
    /// Elements per IRS; the deployable maximum when absent.
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub elements: Option<[usize; IRS_COUNT]>,
    pub ao: AoConfig,
    pub sdp: SdpConfig,
    pub design: DesignConfig,
    pub channel: ChannelConfig,
    pub link: LinkConfig,
    pub sweep: SweepConfig,
    pub mobility: MobilitySettings,
    pub multiuser: MultiUserConfig,
    pub patterns: PatternGrid,
    pub benchmarks: BenchmarkConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100,
            experiment: None,
            radome: RadomeConfig::standard(),
            elements: None,
            ao: AoConfig::default(),
            sdp: SdpConfig::default(),
            design: DesignConfig::default(),
            channel: ChannelConfig::default(),
            link: LinkConfig::default(),
            sweep: SweepConfig::default(),
            mobility: MobilitySettings::default(),
            multiuser: MultiUserConfig::default(),
            patterns: PatternGrid::default(),
            benchmarks: BenchmarkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdpConfig {
    pub tolerance: f64,
    pub acceptable_gap: f64,
    pub max_iterations: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        let o = SdpOptions::default();
        Self {
            tolerance: o.tolerance,
            acceptable_gap: o.acceptable_gap,
            max_iterations: o.max_iterations,
        }
    }
}

impl SdpConfig {
    pub fn options(&self) -> SdpOptions {
        SdpOptions {
            tolerance: self.tolerance,
            acceptable_gap: self.acceptable_gap,
            max_iterations: self.max_iterations,
        }
    }
}

/// What `design` produces: one single-user codebook, or a union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    #[serde(rename = "D")]
    pub sectors: usize,
    /// Sector counts of a multi-user union; overrides `D` when present.
    #[serde(rename = "D_list", skip_serializing_if = "Option::is_none")]
    pub sector_list: Option<Vec<usize>>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            sectors: 4,
            sector_list: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Rician factor in dB; `inf` gives LoS-only channels.
    pub kappa_db: f64,
    /// Paths per channel, LoS included.
    #[serde(rename = "Psi")]
    pub paths: usize,
    /// Axis of the Rician-factor sweep (dB).
    pub kappa_sweep_db: Vec<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            kappa_db: 10.0,
            paths: 5,
            kappa_sweep_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    if db == f64::INFINITY {
        f64::INFINITY
    } else {
        10f64.powf(db / 10.0)
    }
}

impl ChannelConfig {
    pub fn kappa(&self) -> f64 {
        db_to_linear(self.kappa_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Total transmit power; calibrated to 0 dB no-IRS edge SNR when absent.
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(rename = "sigma2")]
    pub noise: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { power: None, noise: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Sector-count axis.
    #[serde(rename = "D")]
    pub sectors: Vec<usize>,
    /// Coherence times for the overhead study (symbols).
    #[serde(rename = "T_u")]
    pub coherence: Vec<f64>,
    /// Sector count for the Rician-factor sweep.
    #[serde(rename = "kappa_D")]
    pub kappa_sectors: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sectors: vec![1, 2, 4, 8],
            coherence: vec![10.0, 20.0, 100.0],
            kappa_sectors: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySettings {
    #[serde(rename = "D")]
    pub sectors: usize,
    /// Slow-adaptation hold times `T` (s).
    #[serde(rename = "T")]
    pub holds: Vec<f64>,
    pub v: f64,
    pub f_c: f64,
    /// Trajectory azimuth rate (degrees per second).
    pub angular_rate_deg: f64,
    /// Trajectory azimuth at time zero (degrees).
    pub start_azimuth_deg: f64,
    pub instants: usize,
    pub blocks_per_instant: usize,
}

impl Default for MobilitySettings {
    fn default() -> Self {
        let m = MobilityConfig::default();
        Self {
            sectors: 8,
            holds: vec![3.0, 6.0],
            v: m.v,
            f_c: m.f_c,
            angular_rate_deg: m.angular_rate.to_degrees(),
            start_azimuth_deg: 2.0,
            instants: m.instants,
            blocks_per_instant: m.blocks_per_instant,
        }
    }
}

impl MobilitySettings {
    pub fn scenario(&self) -> MobilityConfig {
        MobilityConfig {
            v: self.v,
            f_c: self.f_c,
            angular_rate: self.angular_rate_deg * PI / 180.0,
            start_azimuth: self.start_azimuth_deg * PI / 180.0,
            instants: self.instants,
            blocks_per_instant: self.blocks_per_instant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiUserConfig {
    #[serde(rename = "K")]
    pub users: usize,
    /// Sector-count lists whose unions form the `X` axis.
    #[serde(rename = "D_lists")]
    pub unions: Vec<Vec<usize>>,
    /// Union used by the optimal-sector-count histogram.
    #[serde(rename = "histogram_D_list")]
    pub histogram_union: Vec<usize>,
}

impl Default for MultiUserConfig {
    fn default() -> Self {
        Self {
            users: 4,
            unions: vec![vec![1], vec![1, 2], vec![1, 2, 4], vec![1, 2, 4, 8]],
            histogram_union: vec![1, 2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    /// Largest joint DFT search space accepted.
    pub dft_cap: u128,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { dft_cap: DEFAULT_DFT_CAP }
    }
}

fn positive_list<T: PartialOrd + Default + Copy>(field: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(field, "must not be empty"));
    }
    if values.iter().any(|v| !(*v > T::default())) {
        return Err(Error::config(field, "entries must be positive"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<file>".into());
            Error::config(field, e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        self.radome.validate()?;
        self.geometry()?;
        self.ao.validate()?;
        if !(self.sdp.tolerance > 0.0 && self.sdp.acceptable_gap >= self.sdp.tolerance) {
            return Err(Error::config("sdp.tolerance", "need 0 < tolerance <= acceptable_gap"));
        }
        if self.sdp.max_iterations == 0 {
            return Err(Error::config("sdp.max_iterations", "must be at least 1"));
        }
        if self.design.sectors == 0 {
            return Err(Error::config("design.D", "must be at least 1"));
        }
        if let Some(list) = &self.design.sector_list {
            positive_list("design.D_list", list)?;
        }
        if !(self.channel.kappa_db > f64::NEG_INFINITY) || self.channel.kappa_db.is_nan() {
            return Err(Error::config("channel.kappa_db", "must be a number or inf"));
        }
        if self.channel.paths == 0 || (self.channel.kappa_db.is_finite() && self.channel.paths < 2) {
            return Err(Error::config("channel.Psi", "finite Rician factors need at least 2 paths"));
        }
        if self.channel.kappa_sweep_db.is_empty() || self.channel.kappa_sweep_db.iter().any(|k| k.is_nan()) {
            return Err(Error::config("channel.kappa_sweep_db", "must be a non-empty list of numbers"));
        }
        if let Some(p) = self.link.power {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::config("link.P", "must be positive"));
            }
        }
        if !(self.link.noise > 0.0 && self.link.noise.is_finite()) {
            return Err(Error::config("link.sigma2", "must be positive"));
        }
        positive_list("sweep.D", &self.sweep.sectors)?;
        positive_list("sweep.T_u", &self.sweep.coherence)?;
        if self.sweep.kappa_sectors == 0 {
            return Err(Error::config("sweep.kappa_D", "must be at least 1"));
        }
        if self.mobility.sectors == 0 {
            return Err(Error::config("mobility.D", "must be at least 1"));
        }
        positive_list("mobility.T", &self.mobility.holds)?;
        self.mobility.scenario().validate()?;
        if self.multiuser.users == 0 {
            return Err(Error::config("multiuser.K", "must be at least 1"));
        }
        if self.multiuser.unions.is_empty() {
            return Err(Error::config("multiuser.D_lists", "must not be empty"));
        }
        for list in &self.multiuser.unions {
            positive_list("multiuser.D_lists", list)?;
        }
        positive_list("multiuser.histogram_D_list", &self.multiuser.histogram_union)?;
        if self.patterns.elevation_points < 2 || self.patterns.azimuth_samples == 0 {
            return Err(Error::config("patterns", "need at least 2 elevation points and 1 azimuth sample"));
        }
        Ok(())
    }

    pub fn element_counts(&self) -> [usize; IRS_COUNT] {
        self.elements
            .unwrap_or_else(|| max_deployable_elements(&self.radome).map(|l| l.total()))
    }

    pub fn geometry(&self) -> Result<RadomeGeometry> {
        build_geometry(&self.radome, self.element_counts())
    }

    /// Link budget for `users` users.
    pub fn budget(&self, users: usize) -> Result<LinkBudget> {
        match self.link.power {
            Some(p) => LinkBudget::new(p, self.link.noise, users),
            None => LinkBudget::calibrated(&self.radome, self.link.noise, users),
        }
    }

    /// Hash of the full configuration, recorded next to every output.
    pub fn content_hash(&self) -> String {
        crate::geometry::hash_json(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.element_counts(), [10; 4]);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.channel.kappa_db = f64::INFINITY;
        cfg.design.sector_list = Some(vec![1, 2]);
        let text = cfg.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn symbol_keys_parse() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            seed = 9
            trials = 3
            N = [10, 10, 10, 0]
            [radome]
            H_AR = 4.0
            M_x = 1
            [ao]
            L = 8
            Gamma = 5
            aggregation = "power-of-average"
            [channel]
            kappa_db = inf
            Psi = 1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.radome.mount_height, 4.0);
        assert_eq!(cfg.radome.antennas_x, 1);
        assert_eq!(cfg.ao.samples, 8);
        assert!(cfg.channel.kappa().is_infinite());
        assert_eq!(cfg.geometry().unwrap().element_counts(), [10, 10, 10, 0]);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("trials = 0", "trials"),
            ("[radome]\ntheta_max = 2.0", "theta_max"),
            ("[ao]\nL = 0", "ao.L"),
            ("N = [11, 10, 10, 10]", "N[1]"),
            ("[radome]\nbogus = 1", "bogus"),
            ("[channel]\nPsi = 1", "channel.Psi"),
            ("[link]\nsigma2 = -1.0", "link.sigma2"),
        ];
        for (text, field) in cases {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            match &err {
                Error::Config { field: f, .. } => assert!(f.contains(field), "{text}: {err}"),
                other => panic!("{text}: unexpected {other}"),
            }
        }
    }
}
