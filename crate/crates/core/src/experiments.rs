//! Registered Monte-Carlo experiments and their CSV / sidecar output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::benchmarks::{random_codebook, Candidates, DftCodebook};
use crate::channel::{draw_rician_channel, norm_sqr, ChannelFootprint, Direction, ReflectionCouplings, Responder};
use crate::codebook::{build_single_user_codebook, Codebook, CodebookKind, SectorSamples, SectorSpec};
use crate::config::{db_to_linear, ExperimentConfig};
use crate::error::{Error, Result};
use crate::eval::{effective_rate_with_overhead, run_mobility, sector_mismatch, sum_rate, LinkBudget, PowerPatterns};
use crate::geometry::RadomeGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    CoverageVsD,
    RateVsD,
    RateVsKappa,
    Overhead,
    Mobility,
    MultiUserVsX,
    SectorCountHistogram,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::CoverageVsD,
        ExperimentKind::RateVsD,
        ExperimentKind::RateVsKappa,
        ExperimentKind::Overhead,
        ExperimentKind::Mobility,
        ExperimentKind::MultiUserVsX,
        ExperimentKind::SectorCountHistogram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CoverageVsD => "coverage-vs-D",
            ExperimentKind::RateVsD => "rate-vs-D",
            ExperimentKind::RateVsKappa => "rate-vs-kappa",
            ExperimentKind::Overhead => "overhead",
            ExperimentKind::Mobility => "mobility",
            ExperimentKind::MultiUserVsX => "multiuser-vs-X",
            ExperimentKind::SectorCountHistogram => "sector-count-histogram",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// Scheme columns shared by the comparison experiments.
pub const SCHEMES: [&str; 5] = ["proposed", "random", "dft", "unity", "no-irs"];

/// Per-scheme means over trials along one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub metric: String,
    pub unit: String,
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentResult {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.axis_name.clone();
        for (name, _) in &self.series {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, x) in self.axis.iter().enumerate() {
            write!(out, "{x}").unwrap();
            for (_, values) in &self.series {
                write!(out, ",{}", values[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn sidecar(&self, config_hash: &str) -> String {
        let meta = serde_json::json!({
            "experiment": self.experiment,
            "metric": self.metric,
            "unit": self.unit,
            "axis": self.axis_name,
            "columns": self.series.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
            "trials": self.trials,
            "seed": self.seed,
            "config_hash": config_hash,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        text.push('\n');
        text
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path, config_hash: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(format!("{}.csv", self.experiment));
        let meta = dir.join(format!("{}.json", self.experiment));
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&meta, self.sidecar(config_hash)).map_err(|e| Error::io(&meta, e))?;
        Ok((csv, meta))
    }
}

/// Elevation and azimuth tables as two CSV documents.
pub fn pattern_tables_csv(patterns: &PowerPatterns) -> (String, String) {
    let table = |axis: &str, rows: &[crate::eval::PatternRow]| {
        let mut out = format!("{axis},effective,reflection,direct\n");
        for r in rows {
            writeln!(out, "{},{},{},{}", r.angle, r.effective, r.reflection, r.direct).unwrap();
        }
        out
    };
    (table("theta", &patterns.elevation), table("phi", &patterns.azimuth))
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Generator of trial `trial`: the base seed on its own ChaCha stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `trial` for every trial index in parallel and averages the
/// returned rows element-wise in trial order.
fn average_trials<F>(trials: usize, seed: u64, trial: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut trial_rng(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; rows[0].len()];
    for row in &rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= trials as f64);
    Ok(mean)
}

/// Designed codebook with its precomputed responders.
#[derive(Debug)]
pub struct ProposedCodebook {
    pub codebook: Codebook,
    pub responders: Vec<Responder>,
}

/// Geometry, couplings and the single-user codebooks an experiment needs.
///
/// Codebooks come from files when supplied and are designed on demand
/// otherwise, from the configuration seed.
pub struct ExperimentContext {
    pub config: ExperimentConfig,
    pub geometry: RadomeGeometry,
    pub couplings: ReflectionCouplings,
    books: BTreeMap<usize, ProposedCodebook>,
    dft: OnceLock<Candidates>,
}

impl ExperimentContext {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let geometry = config.geometry()?;
        let couplings = ReflectionCouplings::new(&geometry);
        Ok(Self {
            config,
            geometry,
            couplings,
            books: BTreeMap::new(),
            dft: OnceLock::new(),
        })
    }

    pub fn geometry_hash(&self) -> &str {
        self.couplings.geometry_hash()
    }

    /// Registers a loaded codebook; unions are split by sector count.
    pub fn add_codebook(&mut self, codebook: Codebook) -> Result<()> {
        if codebook.geometry_hash != self.geometry_hash() {
            return Err(Error::HashMismatch {
                expected: self.geometry_hash().to_string(),
                found: codebook.geometry_hash,
            });
        }
        let mut parts: BTreeMap<usize, Vec<_>> = BTreeMap::new();
        for e in &codebook.entries {
            parts.entry(e.sector.sectors).or_default().push(e.clone());
        }
        for (d, mut entries) in parts {
            entries.sort_by_key(|e| e.sector.index);
            entries.dedup_by_key(|e| e.sector.index);
            if entries.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "codebook has {} of the {d} codewords of the D = {d} design",
                    entries.len()
                )));
            }
            let book = Codebook {
                kind: CodebookKind::SingleUser,
                entries,
                ..codebook.clone()
            };
            self.insert(d, book)?;
        }
        Ok(())
    }

    fn insert(&mut self, sectors: usize, codebook: Codebook) -> Result<()> {
        let responders = codebook
            .entries
            .iter()
            .map(|e| Responder::with_pattern(&self.couplings, &e.pattern))
            .collect::<Result<Vec<_>>>()?;
        self.books.insert(sectors, ProposedCodebook { codebook, responders });
        Ok(())
    }

    /// Makes sure the `sectors`-sector codebook exists, designing it if needed.
    pub fn ensure_codebook(&mut self, sectors: usize) -> Result<()> {
        if !self.books.contains_key(&sectors) {
            let (codebook, _) = build_single_user_codebook(
                sectors,
                &self.couplings,
                &self.config.ao,
                &self.config.sdp.options(),
                self.config.seed,
            )?;
            self.insert(sectors, codebook)?;
        }
        Ok(())
    }

    pub fn codebook(&self, sectors: usize) -> Option<&ProposedCodebook> {
        self.books.get(&sectors)
    }

    fn book(&self, sectors: usize) -> &ProposedCodebook {
        self.books.get(&sectors).expect("codebook prepared before use")
    }

    fn dft(&self) -> Result<&Candidates> {
        if let Some(c) = self.dft.get() {
            return Ok(c);
        }
        let patterns = DftCodebook::new(&self.geometry).joint_patterns(self.config.benchmarks.dft_cap)?;
        let candidates = Candidates::from_patterns(&self.couplings, patterns)?;
        Ok(self.dft.get_or_init(|| candidates))
    }

    fn unity(&self) -> Result<Responder> {
        Responder::with_pattern(&self.couplings, &crate::channel::ReflectionPattern::unity(self.couplings.counts()))
    }

    pub fn run(&mut self, kind: ExperimentKind) -> Result<ExperimentResult> {
        let needed: Vec<usize> = match kind {
            ExperimentKind::CoverageVsD | ExperimentKind::RateVsD | ExperimentKind::Overhead => {
                self.config.sweep.sectors.clone()
            }
            ExperimentKind::RateVsKappa => vec![self.config.sweep.kappa_sectors],
            ExperimentKind::Mobility => vec![self.config.mobility.sectors],
            ExperimentKind::MultiUserVsX => self.config.multiuser.unions.iter().flatten().copied().collect(),
            ExperimentKind::SectorCountHistogram => self.config.multiuser.histogram_union.clone(),
        };
        for d in needed {
            self.ensure_codebook(d)?;
        }
        match kind {
            ExperimentKind::CoverageVsD => self.coverage_vs_d(),
            ExperimentKind::RateVsD => self.rate_vs_d(),
            ExperimentKind::RateVsKappa => self.rate_vs_kappa(),
            ExperimentKind::Overhead => self.overhead(),
            ExperimentKind::Mobility => self.mobility(),
            ExperimentKind::MultiUserVsX => self.multiuser_vs_x(),
            ExperimentKind::SectorCountHistogram => self.sector_count_histogram(),
        }
    }

    fn result(&self, kind: ExperimentKind, metric: &str, unit: &str, axis_name: &str, axis: Vec<f64>, names: &[String], flat: Vec<f64>) -> ExperimentResult {
        // `flat` is row-major: axis value, then scheme
        let width = names.len();
        let series = names
            .iter()
            .enumerate()
            .map(|(s, n)| (n.clone(), (0..axis.len()).map(|i| flat[i * width + s]).collect()))
            .collect();
        ExperimentResult {
            experiment: kind.name().to_string(),
            metric: metric.to_string(),
            unit: unit.to_string(),
            axis_name: axis_name.to_string(),
            axis,
            series,
            trials: self.config.trials,
            seed: self.config.seed,
        }
    }

    /// Sector-average LoS power at `theta_max`, averaged over sectors.
    fn coverage_vs_d(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let sweep = &cfg.sweep.sectors;
        let samples: Vec<Vec<SectorSamples>> = sweep
            .iter()
            .map(|&d| {
                SectorSpec::all(d)?
                    .into_iter()
                    .map(|s| SectorSamples::new(&self.couplings, s, cfg.ao.samples))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let dft = self.dft()?;
        let unity = self.unity()?;
        let mean_over = |secs: &[SectorSamples], f: &dyn Fn(&SectorSamples) -> f64| {
            secs.iter().map(f).sum::<f64>() / secs.len() as f64
        };
        // deterministic schemes
        let fixed: Vec<[f64; 4]> = sweep
            .iter()
            .zip(&samples)
            .map(|(&d, secs)| {
                let book = self.book(d);
                [
                    mean_over(secs, &|s| s.average_power(&book.responders[s.spec.index - 1])),
                    mean_over(secs, &|s| dft.select(|r| s.average_power(r)).value),
                    mean_over(secs, &|s| s.average_power(&unity)),
                    mean_over(secs, &|s| s.average_power(&Responder::DirectOnly)),
                ]
            })
            .collect();
        let counts = self.couplings.counts();
        let random = average_trials(cfg.trials, cfg.seed, |rng| {
            sweep
                .iter()
                .zip(&samples)
                .map(|(&d, secs)| {
                    let cands = Candidates::from_patterns(&self.couplings, random_codebook(d, counts, rng)?)?;
                    Ok(mean_over(secs, &|s| cands.select(|r| s.average_power(r)).value))
                })
                .collect()
        })?;
        let mut flat = Vec::new();
        for (f, r) in fixed.iter().zip(&random) {
            flat.extend([db(f[0]), db(*r), db(f[1]), db(f[2]), db(f[3])]);
        }
        let names: Vec<String> = SCHEMES.iter().map(|s| s.to_string()).collect();
        Ok(self.result(
            ExperimentKind::CoverageVsD,
            "average SMAECP",
            "dB",
            "D",
            sweep.iter().map(|&d| d as f64).collect(),
            &names,
            flat,
        ))
    }

    /// Cell-edge user: θ = θ_max, φ uniform.
    fn edge_user<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Direction> {
        Direction::new(self.couplings.config().max_elevation, rng.random_range(0.0..2.0 * PI))
    }

    /// User uniform over the coverage disk.
    fn disk_user<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Direction> {
        let cfg = self.couplings.config();
        let radius = cfg.mount_height * cfg.max_elevation.tan();
        let r = radius * rng.random::<f64>().sqrt();
        let theta = (r / cfg.mount_height).atan().min(cfg.max_elevation);
        Direction::new(theta, rng.random_range(0.0..2.0 * PI))
    }

    /// Best achievable single-user rate of every scheme on one channel.
    /// `book_sizes` lists the proposed codebooks (and random sizes) to score.
    fn single_user_rates<R: Rng + ?Sized>(
        &self,
        footprint: &ChannelFootprint,
        book_sizes: &[usize],
        budget: &LinkBudget,
        rng: &mut R,
    ) -> Result<Vec<[f64; 5]>> {
        let gain = |r: &Responder| norm_sqr(&r.effective(footprint));
        let rate = |g: f64| single_user_rate_from_gain(g, budget);
        let dft = rate(self.dft()?.select(gain).value);
        let unity = rate(gain(&self.unity()?));
        let bare = rate(gain(&Responder::DirectOnly));
        book_sizes
            .iter()
            .map(|&d| {
                let proposed = rate(crate::benchmarks::select_best(&self.book(d).responders, gain).value);
                let random = Candidates::from_patterns(&self.couplings, random_codebook(d, self.couplings.counts(), rng)?)?;
                Ok([proposed, rate(random.select(gain).value), dft, unity, bare])
            })
            .collect()
    }

    fn rate_vs_d_rows(&self) -> Result<Vec<f64>> {
        let cfg = &self.config;
        let budget = cfg.budget(1)?;
        let kappa = cfg.channel.kappa();
        average_trials(cfg.trials, cfg.seed, |rng| {
            let user = self.edge_user(rng)?;
            let channel = draw_rician_channel(&user, kappa, cfg.channel.paths, self.couplings.config(), rng)?;
            let fp = channel.footprint(&self.couplings);
            Ok(self
                .single_user_rates(&fp, &cfg.sweep.sectors, &budget, rng)?
                .into_iter()
                .flatten()
                .collect())
        })
    }

    fn rate_vs_d(&self) -> Result<ExperimentResult> {
        let flat = self.rate_vs_d_rows()?;
        let names: Vec<String> = SCHEMES.iter().map(|s| s.to_string()).collect();
        Ok(self.result(
            ExperimentKind::RateVsD,
            "achievable rate",
            "bit/s/Hz",
            "D",
            self.config.sweep.sectors.iter().map(|&d| d as f64).collect(),
            &names,
            flat,
        ))
    }

    fn rate_vs_kappa(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let budget = cfg.budget(1)?;
        let d = cfg.sweep.kappa_sectors;
        let kappas = &cfg.channel.kappa_sweep_db;
        let flat = average_trials(cfg.trials, cfg.seed, |rng| {
            let user = self.edge_user(rng)?;
            let mut row = Vec::with_capacity(kappas.len() * 5);
            for &k in kappas {
                let channel = draw_rician_channel(&user, db_to_linear(k), cfg.channel.paths, self.couplings.config(), rng)?;
                let fp = channel.footprint(&self.couplings);
                row.extend(self.single_user_rates(&fp, &[d], &budget, rng)?[0]);
            }
            Ok(row)
        })?;
        let names: Vec<String> = SCHEMES.iter().map(|s| s.to_string()).collect();
        Ok(self.result(
            ExperimentKind::RateVsKappa,
            "achievable rate",
            "bit/s/Hz",
            "kappa_dB",
            kappas.clone(),
            &names,
            flat,
        ))
    }

    /// Rate after training `D` codewords, one symbol each, per coherence time.
    fn overhead(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let rates = self.rate_vs_d_rows()?;
        let mut names = Vec::new();
        for scheme in ["proposed", "random"] {
            for t in &cfg.sweep.coherence {
                names.push(format!("{scheme}_Tu{t}"));
            }
        }
        let mut flat = Vec::new();
        for (i, &d) in cfg.sweep.sectors.iter().enumerate() {
            for s in 0..2 {
                for &t in &cfg.sweep.coherence {
                    flat.push(effective_rate_with_overhead(rates[i * 5 + s], d as f64, t)?);
                }
            }
        }
        Ok(self.result(
            ExperimentKind::Overhead,
            "effective rate",
            "bit/s/Hz",
            "D",
            cfg.sweep.sectors.iter().map(|&d| d as f64).collect(),
            &names,
            flat,
        ))
    }

    fn mobility(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let m = &cfg.mobility;
        let scenario = m.scenario();
        let budget = cfg.budget(1)?;
        let book = self.book(m.sectors);
        let mean = average_trials(cfg.trials, cfg.seed, |rng| {
            let series = run_mobility(
                &book.responders,
                &self.couplings,
                &scenario,
                &m.holds,
                &budget,
                cfg.channel.kappa(),
                cfg.channel.paths,
                rng,
            )?;
            let mut row = Vec::new();
            for t in 0..scenario.instants {
                row.push(series.fast[t]);
                row.extend(series.slow.iter().map(|s| s[t]));
            }
            Ok(row)
        })?;
        let mismatch = m
            .holds
            .iter()
            .map(|&h| sector_mismatch(&scenario, m.sectors, h))
            .collect::<Result<Vec<_>>>()?;
        let mut names = vec!["fast".to_string()];
        names.extend(m.holds.iter().map(|h| format!("slow_T{h}")));
        names.extend(m.holds.iter().map(|h| format!("mismatch_T{h}")));
        let width = 1 + m.holds.len();
        let mut flat = Vec::new();
        for t in 0..scenario.instants {
            flat.extend_from_slice(&mean[t * width..(t + 1) * width]);
            flat.extend(mismatch.iter().map(|mm| if mm[t] { 1.0 } else { 0.0 }));
        }
        Ok(self.result(
            ExperimentKind::Mobility,
            "average rate per instant",
            "bit/s/Hz",
            "instant",
            (1..=scenario.instants).map(|t| t as f64).collect(),
            &names,
            flat,
        ))
    }

    fn user_footprints<R: Rng + ?Sized>(&self, users: usize, kappa: f64, rng: &mut R) -> Result<Vec<ChannelFootprint>> {
        (0..users)
            .map(|_| {
                let user = self.disk_user(rng)?;
                let channel = draw_rician_channel(&user, kappa, self.config.channel.paths, self.couplings.config(), rng)?;
                Ok(channel.footprint(&self.couplings))
            })
            .collect()
    }

    fn sum_rate_of(responder: &Responder, footprints: &[ChannelFootprint], budget: &LinkBudget) -> f64 {
        let channels: Vec<_> = footprints.iter().map(|f| responder.effective(f)).collect();
        sum_rate(&channels, budget).unwrap_or(0.0)
    }

    fn union_responders(&self, list: &[usize]) -> Vec<Responder> {
        list.iter().flat_map(|&d| self.book(d).responders.iter().cloned()).collect()
    }

    fn multiuser_vs_x(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let users = cfg.multiuser.users;
        let budget = cfg.budget(users)?;
        let unions: Vec<Vec<Responder>> = cfg.multiuser.unions.iter().map(|l| self.union_responders(l)).collect();
        let dft = self.dft()?;
        let unity = self.unity()?;
        let kappa = cfg.channel.kappa();
        let flat = average_trials(cfg.trials, cfg.seed, |rng| {
            let fps = self.user_footprints(users, kappa, rng)?;
            let metric = |r: &Responder| Self::sum_rate_of(r, &fps, &budget);
            let fixed = [dft.select(metric).value, metric(&unity), metric(&Responder::DirectOnly)];
            let mut row = Vec::new();
            for union in &unions {
                let proposed = crate::benchmarks::select_best(union, metric).value;
                let random = Candidates::from_patterns(&self.couplings, random_codebook(union.len(), self.couplings.counts(), rng)?)?;
                row.extend([proposed, random.select(metric).value]);
                row.extend(fixed);
            }
            Ok(row)
        })?;
        let names: Vec<String> = SCHEMES.iter().map(|s| s.to_string()).collect();
        Ok(self.result(
            ExperimentKind::MultiUserVsX,
            "sum rate",
            "bit/s/Hz",
            "X",
            unions.iter().map(|u| u.len() as f64).collect(),
            &names,
            flat,
        ))
    }

    /// Share of trials in which each `D` gives the best rate, LoS only.
    fn sector_count_histogram(&self) -> Result<ExperimentResult> {
        let cfg = &self.config;
        let list = &cfg.multiuser.histogram_union;
        let users = cfg.multiuser.users;
        let single = cfg.budget(1)?;
        let multi = cfg.budget(users)?;
        let n = list.len();
        let flat = average_trials(cfg.trials, cfg.seed, |rng| {
            let user = self.edge_user(rng)?;
            let fp = draw_rician_channel(&user, f64::INFINITY, 1, self.couplings.config(), rng)?.footprint(&self.couplings);
            let best_single: Vec<f64> = list
                .iter()
                .map(|&d| {
                    let gain = |r: &Responder| norm_sqr(&r.effective(&fp));
                    single_user_rate_from_gain(crate::benchmarks::select_best(&self.book(d).responders, gain).value, &single)
                })
                .collect();
            let fps = self.user_footprints(users, f64::INFINITY, rng)?;
            let best_multi: Vec<f64> = list
                .iter()
                .map(|&d| {
                    crate::benchmarks::select_best(&self.book(d).responders, |r| Self::sum_rate_of(r, &fps, &multi)).value
                })
                .collect();
            let (a, b) = (crate::eval::argmax(&best_single), crate::eval::argmax(&best_multi));
            let mut row = vec![0.0; 2 * n];
            row[2 * a] = 1.0;
            row[2 * b + 1] = 1.0;
            Ok(row)
        })?;
        let names = vec!["single-user".to_string(), format!("multi-user-K{users}")];
        Ok(self.result(
            ExperimentKind::SectorCountHistogram,
            "fraction of trials with the best rate",
            "fraction",
            "D",
            list.iter().map(|&d| d as f64).collect(),
            &names,
            flat,
        ))
    }
}

fn single_user_rate_from_gain(gain: f64, budget: &LinkBudget) -> f64 {
    (budget.power * gain / budget.noise).ln_1p() / std::f64::consts::LN_2
}

/// Runs `kind` with codebooks designed from the configuration.
pub fn run_experiment(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentResult> {
    ExperimentContext::new(config.clone())?.run(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 2;
        cfg.elements = Some([5, 5, 0, 0]);
        cfg.ao.samples = 4;
        cfg.ao.initial_candidates = 4;
        cfg.ao.max_sweeps = 3;
        cfg.ao.randomizations = 20;
        cfg.sweep.sectors = vec![1, 2];
        cfg.mobility.sectors = 2;
        cfg.mobility.instants = 3;
        cfg.mobility.blocks_per_instant = 8;
        cfg.mobility.holds = vec![0.01];
        cfg.multiuser.unions = vec![vec![1], vec![1, 2]];
        cfg.multiuser.histogram_union = vec![1, 2];
        cfg.sweep.kappa_sectors = 2;
        cfg
    }

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!(matches!("fig-12".parse::<ExperimentKind>(), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn every_experiment_runs_and_is_reproducible() {
        let cfg = small();
        let mut ctx = ExperimentContext::new(cfg.clone()).unwrap();
        let mut again = ExperimentContext::new(cfg).unwrap();
        for k in ExperimentKind::ALL {
            let r = ctx.run(k).unwrap();
            assert!(r.series.iter().all(|(_, v)| v.len() == r.axis.len()), "{}", k.name());
            assert!(r.series.iter().flat_map(|(_, v)| v).all(|x| x.is_finite()), "{}", k.name());
            assert_eq!(r.to_csv(), again.run(k).unwrap().to_csv(), "{}", k.name());
        }
    }

    #[test]
    fn csv_layout() {
        let r = ExperimentResult {
            experiment: "x".into(),
            metric: "m".into(),
            unit: "u".into(),
            axis_name: "D".into(),
            axis: vec![1.0, 2.0],
            series: vec![("a".into(), vec![0.1, 1.0 / 3.0]), ("b".into(), vec![-1.5, 2.0])],
            trials: 1,
            seed: 0,
        };
        assert_eq!(r.to_csv(), "D,a,b\n1,0.1,-1.5\n2,0.3333333333333333,2\n");
        let meta: serde_json::Value = serde_json::from_str(&r.sidecar("h")).unwrap();
        assert_eq!(meta["config_hash"], "h");
        assert_eq!(meta["trials"], 1);
    }

    #[test]
    fn histogram_rows_are_distributions() {
        let cfg = small();
        let r = run_experiment(&cfg, ExperimentKind::SectorCountHistogram).unwrap();
        for (_, v) in &r.series {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loaded_codebook_with_wrong_geometry_is_rejected() {
        let mut ctx = ExperimentContext::new(small()).unwrap();
        ctx.ensure_codebook(2).unwrap();
        let mut book = ctx.codebook(2).unwrap().codebook.clone();
        book.geometry_hash = "0".into();
        assert!(matches!(ctx.add_codebook(book), Err(Error::HashMismatch { .. })));
    }
}
