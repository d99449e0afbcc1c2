//! Azimuth sectors, the sector-average channel power objective and the
//! alternating-optimisation codeword designer.

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{los_coefficient, norm_sqr, Direction, ReflectionCouplings, ReflectionPattern, Responder, C64};
use crate::error::{Error, Result};
use crate::geometry::IRS_COUNT;
use crate::sdp::{gaussian_randomization, lift, solve_sdp, SdpOptions};

/// Sector `index` (1-based) of `sectors` equal azimuth slices at `theta_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorSpec {
    pub sectors: usize,
    pub index: usize,
}

impl SectorSpec {
    pub fn new(sectors: usize, index: usize) -> Result<Self> {
        if sectors == 0 || index == 0 || index > sectors {
            return Err(Error::InvalidArgument(format!(
                "sector {index} of {sectors} does not exist"
            )));
        }
        Ok(Self { sectors, index })
    }

    pub fn all(sectors: usize) -> Result<Vec<Self>> {
        (1..=sectors).map(|d| Self::new(sectors, d)).collect()
    }

    pub fn width(&self) -> f64 {
        2.0 * PI / self.sectors as f64
    }

    /// Half-open azimuth interval `[start, end)`.
    pub fn bounds(&self) -> (f64, f64) {
        let w = self.width();
        ((self.index - 1) as f64 * w, self.index as f64 * w)
    }

    pub fn contains(&self, azimuth: f64) -> bool {
        let (lo, hi) = self.bounds();
        (lo..hi).contains(&azimuth)
    }

    /// Sector containing `azimuth` (wrapped into `[0, 2π)`).
    pub fn containing(sectors: usize, azimuth: f64) -> Result<Self> {
        let phi = crate::channel::wrap_azimuth(azimuth);
        let d = ((phi / (2.0 * PI / sectors as f64)).floor() as usize).min(sectors - 1) + 1;
        Self::new(sectors, d)
    }

    /// Midpoints of `samples` equal sub-intervals of the sector.
    pub fn sample_azimuths(&self, samples: usize) -> Vec<f64> {
        let (lo, _) = self.bounds();
        let step = self.width() / samples as f64;
        (1..=samples).map(|l| lo + (l as f64 - 0.5) * step).collect()
    }
}

/// How per-sample subproblems are combined into one lifted matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Average of the lifted per-sample matrices: the exact sector objective.
    #[default]
    AveragePower,
    /// Lift of the averaged `B` and `c`.
    PowerOfAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AoConfig {
    /// Azimuth samples per sector.
    #[serde(rename = "L")]
    pub samples: usize,
    /// Random initial patterns.
    #[serde(rename = "Gamma")]
    pub initial_candidates: usize,
    /// Relative objective increase below which sweeps stop.
    pub epsilon: f64,
    #[serde(rename = "I_max")]
    pub max_sweeps: usize,
    #[serde(rename = "Gamma_r")]
    pub randomizations: usize,
    pub aggregation: Aggregation,
    /// Keep the previous coefficients when an update lowers the objective.
    pub guard: bool,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            samples: 40,
            initial_candidates: 100,
            epsilon: 1e-5,
            max_sweeps: 100,
            randomizations: 1000,
            aggregation: Aggregation::AveragePower,
            guard: true,
        }
    }
}

impl AoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("ao.L", "must be at least 1"));
        }
        if self.initial_candidates == 0 {
            return Err(Error::config("ao.Gamma", "must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("ao.epsilon", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::config("ao.I_max", "must be at least 1"));
        }
        if self.randomizations == 0 {
            return Err(Error::config("ao.Gamma_r", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-sample quantities of one sector: LoS gain, direct responses and
/// element incidence factors at `(theta_max, φ_l)`.
#[derive(Debug, Clone)]
pub struct SectorSamples {
    pub spec: SectorSpec,
    pub directions: Vec<Direction>,
    /// `a_1(theta_max)`.
    pub los: C64,
    direct: Vec<Vec<C64>>,
    incidence: Vec<Vec<C64>>,
}

impl SectorSamples {
    pub fn new(couplings: &ReflectionCouplings, spec: SectorSpec, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("at least one azimuth sample is required".into()));
        }
        let theta = couplings.config().max_elevation;
        let directions = spec
            .sample_azimuths(samples)
            .into_iter()
            .map(|phi| Direction::new(theta, phi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            los: los_coefficient(theta, couplings.config())?,
            direct: directions.iter().map(|d| couplings.direct(d)).collect(),
            incidence: directions.iter().map(|d| couplings.incidence(d)).collect(),
            directions,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Sector-average LoS channel power of `responder`.
    pub fn average_power(&self, responder: &Responder) -> f64 {
        let total: f64 = self
            .direct
            .iter()
            .zip(&self.incidence)
            .map(|(hd, s)| {
                let mut h = hd.clone();
                if let Responder::Pattern(p) = responder {
                    for (e, se) in s.iter().enumerate() {
                        if *se == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (acc, w) in h.iter_mut().zip(p.weighted(e)) {
                            *acc += se * w;
                        }
                    }
                }
                norm_sqr(&h)
            })
            .sum();
        self.los.norm_sqr() * total / self.len() as f64
    }

    pub fn smaecp(&self, couplings: &ReflectionCouplings, pattern: &ReflectionPattern) -> Result<f64> {
        Ok(self.average_power(&Responder::with_pattern(couplings, pattern)?))
    }
}

/// Sector-average LoS channel power of `pattern` over `samples` azimuths.
pub fn smaecp(
    pattern: &ReflectionPattern,
    spec: SectorSpec,
    couplings: &ReflectionCouplings,
    samples: usize,
) -> Result<f64> {
    SectorSamples::new(couplings, spec, samples)?.smaecp(couplings, pattern)
}

/// Per-sample `B_j` (columns per element of IRS `j`) and `c_j`.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub irs: usize,
    pub b: Vec<DMatrix<C64>>,
    pub c: Vec<Vec<C64>>,
}

impl Subproblem {
    /// Lifted matrix and the constant that turns its quadratic form into
    /// the aggregated objective.
    pub fn lifted(&self, aggregation: Aggregation) -> Result<(DMatrix<C64>, f64)> {
        let l = self.b.len() as f64;
        match aggregation {
            Aggregation::AveragePower => {
                let mut acc: Option<DMatrix<C64>> = None;
                let mut constant = 0.0;
                for (b, c) in self.b.iter().zip(&self.c) {
                    let lifted = lift(b, c)?;
                    acc = Some(match acc {
                        Some(a) => a + lifted,
                        None => lifted,
                    });
                    constant += norm_sqr(c);
                }
                let acc = acc.ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
                Ok((acc / C64::new(l, 0.0), constant / l))
            }
            Aggregation::PowerOfAverage => {
                let mut b = self.b[0].clone();
                let mut c = self.c[0].clone();
                for (bi, ci) in self.b.iter().zip(&self.c).skip(1) {
                    b += bi;
                    for (a, v) in c.iter_mut().zip(ci) {
                        *a += v;
                    }
                }
                b /= C64::new(l, 0.0);
                c.iter_mut().for_each(|v| *v /= l);
                let constant = norm_sqr(&c);
                Ok((lift(&b, &c)?, constant))
            }
        }
    }
}

/// Builds the subproblem for IRS `j` with every other IRS fixed.
pub fn assemble_subproblem(
    j: usize,
    pattern: &ReflectionPattern,
    samples: &SectorSamples,
    couplings: &ReflectionCouplings,
) -> Result<Subproblem> {
    if j >= IRS_COUNT {
        return Err(Error::InvalidArgument(format!("IRS index {j} out of range")));
    }
    if pattern.counts() != couplings.counts() {
        return Err(Error::Dimension("pattern does not match the geometry".into()));
    }
    let theta = pattern.coefficients();
    let n = theta.len();
    let m = couplings.antennas();
    let own: Vec<usize> = (0..n).filter(|&e| couplings.irs_of(e) == j).collect();
    let others: Vec<usize> = (0..n).filter(|&e| couplings.irs_of(e) != j).collect();

    // F_e + Σ_{e' not on j} G_{e,e'} ϑ_e', shared by every sample.
    let partial: Vec<Vec<C64>> = (0..n)
        .map(|e| {
            let mut w = couplings.single(e).to_vec();
            for &e2 in &others {
                for (acc, g) in w.iter_mut().zip(couplings.double(e, e2)) {
                    *acc += g * theta[e2];
                }
            }
            w
        })
        .collect();

    let a1 = samples.los;
    let mut bs = Vec::with_capacity(samples.len());
    let mut cs = Vec::with_capacity(samples.len());
    for (hd, s) in samples.direct.iter().zip(&samples.incidence) {
        let mut b = DMatrix::zeros(m, own.len());
        for (col, &e) in own.iter().enumerate() {
            let mut v: Vec<C64> = partial[e].iter().map(|w| s[e] * w).collect();
            for &e2 in &others {
                let weight = s[e2] * theta[e2];
                if weight == C64::new(0.0, 0.0) {
                    continue;
                }
                for (acc, g) in v.iter_mut().zip(couplings.double(e2, e)) {
                    *acc += weight * g;
                }
            }
            for (row, value) in v.into_iter().enumerate() {
                b[(row, col)] = a1 * value;
            }
        }
        let mut c = hd.clone();
        for &e in &others {
            let weight = s[e] * theta[e];
            if weight == C64::new(0.0, 0.0) {
                continue;
            }
            for (acc, w) in c.iter_mut().zip(&partial[e]) {
                *acc += weight * w;
            }
        }
        c.iter_mut().for_each(|v| *v *= a1);
        bs.push(b);
        cs.push(c);
    }
    Ok(Subproblem { irs: j, b: bs, c: cs })
}

/// Designed codeword with its objective history.
#[derive(Debug, Clone)]
pub struct CodewordDesign {
    pub spec: SectorSpec,
    pub pattern: ReflectionPattern,
    /// Objective of the starting pattern followed by the value after each sweep.
    pub trace: Vec<f64>,
    pub objective: f64,
    pub subproblems: Vec<SubproblemRecord>,
}

/// Outcome of one per-IRS relaxation inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemRecord {
    pub sweep: usize,
    pub irs: usize,
    /// Dual bound of the relaxation (≥ its optimum).
    pub relaxed: f64,
    pub primal: f64,
    /// Lifted objective of the rounded unit-modulus point.
    pub rounded: f64,
    pub relative_gap: f64,
    pub rank_one: bool,
}

fn with_sector(spec: SectorSpec) -> impl Fn(Error) -> Error {
    move |e| Error::Sector {
        sectors: spec.sectors,
        sector: spec.index,
        source: Box::new(e),
    }
}

/// Alternating optimisation of one sector's codeword.
///
/// The best of `Gamma` random patterns starts the sweeps; each sweep
/// re-solves every IRS's coefficients with the others held fixed.
pub fn design_codeword<R: Rng + ?Sized>(
    spec: SectorSpec,
    couplings: &ReflectionCouplings,
    ao: &AoConfig,
    sdp: &SdpOptions,
    rng: &mut R,
) -> Result<CodewordDesign> {
    ao.validate()?;
    let samples = SectorSamples::new(couplings, spec, ao.samples)?;
    design_with_samples(&samples, couplings, ao, sdp, rng).map_err(with_sector(spec))
}

fn design_with_samples<R: Rng + ?Sized>(
    samples: &SectorSamples,
    couplings: &ReflectionCouplings,
    ao: &AoConfig,
    sdp: &SdpOptions,
    rng: &mut R,
) -> Result<CodewordDesign> {
    let counts = couplings.counts();
    let mut best: Option<(ReflectionPattern, f64)> = None;
    for _ in 0..ao.initial_candidates {
        let candidate = ReflectionPattern::random(counts, rng);
        let value = samples.smaecp(couplings, &candidate)?;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((candidate, value));
        }
    }
    let (mut pattern, mut objective) = best.expect("at least one candidate");
    let mut trace = vec![objective];
    let mut subproblems = Vec::new();

    for sweep in 1..=ao.max_sweeps {
        let before = objective;
        for j in (0..IRS_COUNT).filter(|&j| counts[j] > 0) {
            let sub = assemble_subproblem(j, &pattern, samples, couplings)?;
            let (b_lift, _) = sub.lifted(ao.aggregation)?;
            let solution = solve_sdp(&b_lift, sdp)?;
            let rounded = gaussian_randomization(&solution.x, &b_lift, ao.randomizations, rng)?;
            debug_assert!(
                rounded.value <= solution.dual_bound + 1e-9 * solution.dual_bound.abs().max(1e-300),
                "rounded point exceeds the relaxation bound"
            );
            subproblems.push(SubproblemRecord {
                sweep,
                irs: j,
                relaxed: solution.dual_bound,
                primal: solution.primal,
                rounded: rounded.value,
                relative_gap: solution.relative_gap,
                rank_one: rounded.rank_one,
            });
            let mut candidate = pattern.clone();
            candidate.set_irs(j, &rounded.theta)?;
            let value = samples.smaecp(couplings, &candidate)?;
            if !ao.guard || value >= objective {
                pattern = candidate;
                objective = value;
            }
        }
        trace.push(objective);
        let increase = if before > 0.0 {
            (objective - before) / before
        } else {
            0.0
        };
        if increase < ao.epsilon {
            break;
        }
    }
    Ok(CodewordDesign {
        spec: samples.spec,
        pattern,
        trace,
        objective,
        subproblems,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookKind {
    SingleUser,
    MultiUser,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub sector: SectorSpec,
    pub pattern: ReflectionPattern,
    /// Sector-average power when designed; `NaN` when not recorded.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub kind: CodebookKind,
    pub geometry_hash: String,
    pub aggregation: Aggregation,
    pub seed: u64,
    pub entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn patterns(&self) -> Vec<ReflectionPattern> {
        self.entries.iter().map(|e| e.pattern.clone()).collect()
    }

    /// Codeword designed for the sector containing `azimuth` in a
    /// `sectors`-sector single-user codebook.
    pub fn for_azimuth(&self, sectors: usize, azimuth: f64) -> Option<&CodebookEntry> {
        let spec = SectorSpec::containing(sectors, azimuth).ok()?;
        self.entries.iter().find(|e| e.sector == spec)
    }
}

/// Per-sector generator: the base seed offset by the sector index.
pub fn sector_rng(base_seed: u64, spec: SectorSpec) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(spec.index as u64))
}

/// Designs all `sectors` codewords; sectors run in parallel.
pub fn build_single_user_codebook(
    sectors: usize,
    couplings: &ReflectionCouplings,
    ao: &AoConfig,
    sdp: &SdpOptions,
    base_seed: u64,
) -> Result<(Codebook, Vec<CodewordDesign>)> {
    ao.validate()?;
    let specs = SectorSpec::all(sectors)?;
    let designs = specs
        .par_iter()
        .map(|&spec| design_codeword(spec, couplings, ao, sdp, &mut sector_rng(base_seed, spec)))
        .collect::<Result<Vec<_>>>()?;
    let codebook = Codebook {
        kind: CodebookKind::SingleUser,
        geometry_hash: couplings.geometry_hash().to_string(),
        aggregation: ao.aggregation,
        seed: base_seed,
        entries: designs
            .iter()
            .map(|d| CodebookEntry {
                sector: d.spec,
                pattern: d.pattern.clone(),
                objective: d.objective,
            })
            .collect(),
    };
    Ok((codebook, designs))
}

fn check_sector_list(sector_counts: &[usize]) -> Result<()> {
    if sector_counts.is_empty() {
        return Err(Error::InvalidArgument("sector count list is empty".into()));
    }
    let mut seen = HashSet::new();
    for &d in sector_counts {
        if d == 0 {
            return Err(Error::InvalidArgument("sector counts must be positive".into()));
        }
        if !seen.insert(d) {
            return Err(Error::InvalidArgument(format!("sector count {d} listed twice")));
        }
    }
    Ok(())
}

/// Concatenates single-user codebooks in list order.
pub fn union_codebooks(parts: &[Codebook]) -> Result<Codebook> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("no codebooks to combine".into()))?;
    let sizes: Vec<usize> = parts
        .iter()
        .map(|p| p.entries.first().map_or(0, |e| e.sector.sectors))
        .collect();
    check_sector_list(&sizes)?;
    if parts.iter().any(|p| p.geometry_hash != first.geometry_hash) {
        return Err(Error::InvalidArgument("codebooks were designed for different geometries".into()));
    }
    Ok(Codebook {
        kind: CodebookKind::MultiUser,
        geometry_hash: first.geometry_hash.clone(),
        aggregation: first.aggregation,
        seed: first.seed,
        entries: parts.iter().flat_map(|p| p.entries.iter().cloned()).collect(),
    })
}

/// Union of single-user codebooks for each entry of `sector_counts`.
pub fn build_multi_user_codebook(
    sector_counts: &[usize],
    couplings: &ReflectionCouplings,
    ao: &AoConfig,
    sdp: &SdpOptions,
    base_seed: u64,
) -> Result<Codebook> {
    check_sector_list(sector_counts)?;
    let parts = sector_counts
        .iter()
        .map(|&d| build_single_user_codebook(d, couplings, ao, sdp, base_seed).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    union_codebooks(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::earv;
    use crate::channel::ArrayResponse;
    use crate::geometry::{build_geometry, RadomeConfig, RadomeGeometry};

    fn default_couplings() -> ReflectionCouplings {
        ReflectionCouplings::new(&RadomeGeometry::full(&RadomeConfig::standard()).unwrap())
    }

    fn quick_ao() -> AoConfig {
        AoConfig {
            samples: 8,
            initial_candidates: 10,
            max_sweeps: 5,
            randomizations: 100,
            ..AoConfig::default()
        }
    }

    #[test]
    fn sample_azimuth_examples() {
        let s = SectorSpec::new(4, 1).unwrap().sample_azimuths(2);
        assert!((s[0] - PI / 8.0).abs() < 1e-15 && (s[1] - 3.0 * PI / 8.0).abs() < 1e-15);
        assert_eq!(SectorSpec::new(1, 1).unwrap().sample_azimuths(1), vec![PI]);
    }

    #[test]
    fn sector_bounds_and_lookup() {
        let specs = SectorSpec::all(4).unwrap();
        let bounds: Vec<_> = specs.iter().map(|s| s.bounds()).collect();
        assert_eq!(bounds[1], (PI / 2.0, PI));
        assert!(specs[1].contains(PI / 2.0) && !specs[0].contains(PI / 2.0));
        assert_eq!(SectorSpec::containing(4, PI / 2.0).unwrap().index, 2);
        assert_eq!(SectorSpec::containing(4, -0.1).unwrap().index, 4);
        assert!(SectorSpec::new(4, 5).is_err());
        assert!(SectorSpec::new(4, 0).is_err());
    }

    #[test]
    fn no_irs_smaecp_closed_form() {
        let cfg = RadomeConfig::standard();
        let couplings = ReflectionCouplings::new(&build_geometry(&cfg, [0; 4]).unwrap());
        let value = smaecp(&ReflectionPattern::unity([0; 4]), SectorSpec::new(1, 1).unwrap(), &couplings, 40).unwrap();
        let a1 = los_coefficient(cfg.max_elevation, &cfg).unwrap().norm_sqr();
        assert!((value - a1 * 8.0).abs() < 1e-12 * value);
        assert!((value - 1.527e-7).abs() < 1e-9, "{value}");
    }

    #[test]
    fn smaecp_matches_path_by_path_evaluation() {
        let cfg = RadomeConfig::standard();
        let couplings = default_couplings();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pattern = ReflectionPattern::random(couplings.counts(), &mut rng);
        let spec = SectorSpec::new(4, 3).unwrap();
        let a1 = los_coefficient(cfg.max_elevation, &cfg).unwrap().norm_sqr();
        let expected: f64 = spec
            .sample_azimuths(12)
            .iter()
            .map(|&phi| {
                let dir = Direction::new(cfg.max_elevation, phi).unwrap();
                a1 * norm_sqr(&earv(&pattern, &ArrayResponse::evaluate(&dir, &couplings)).unwrap())
            })
            .sum::<f64>()
            / 12.0;
        let value = smaecp(&pattern, spec, &couplings, 12).unwrap();
        assert!((value - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn lifted_subproblem_reproduces_objective() {
        let couplings = default_couplings();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = SectorSpec::new(2, 1).unwrap();
        let samples = SectorSamples::new(&couplings, spec, 10).unwrap();
        let pattern = ReflectionPattern::random(couplings.counts(), &mut rng);
        for j in 0..IRS_COUNT {
            let sub = assemble_subproblem(j, &pattern, &samples, &couplings).unwrap();
            let (b_lift, constant) = sub.lifted(Aggregation::AveragePower).unwrap();
            for _ in 0..3 {
                let mut candidate = pattern.clone();
                let phases: Vec<C64> = (0..10).map(|_| C64::cis(rng.random_range(0.0..2.0 * PI))).collect();
                candidate.set_irs(j, &phases).unwrap();
                let expected = samples.smaecp(&couplings, &candidate).unwrap();
                let value = crate::sdp::lifted_objective(&b_lift, &phases) + constant;
                assert!((value - expected).abs() <= 1e-10 * expected, "{value} vs {expected}");
            }
        }
    }

    #[test]
    fn single_irs_subproblem_has_no_cross_terms() {
        let cfg = RadomeConfig::standard();
        let couplings = ReflectionCouplings::new(&build_geometry(&cfg, [10, 0, 0, 0]).unwrap());
        let spec = SectorSpec::new(1, 1).unwrap();
        let samples = SectorSamples::new(&couplings, spec, 3).unwrap();
        let sub = assemble_subproblem(0, &ReflectionPattern::unity(couplings.counts()), &samples, &couplings).unwrap();
        for (l, dir) in samples.directions.iter().enumerate() {
            let resp = ArrayResponse::evaluate(dir, &couplings);
            for (m, v) in resp.direct().iter().enumerate() {
                assert_eq!(sub.c[l][m], samples.los * v);
            }
            for e in 0..10 {
                for m in 0..4 {
                    assert!((sub.b[l][(m, e)] - samples.los * resp.f(e)[m]).norm() < 1e-20);
                }
            }
        }
    }

    #[test]
    fn single_element_matches_scalar_closed_form() {
        let cfg = RadomeConfig::standard();
        let couplings = ReflectionCouplings::new(&build_geometry(&cfg, [1, 0, 0, 0]).unwrap());
        let spec = SectorSpec::new(1, 1).unwrap();
        let ao = quick_ao();
        let design = design_codeword(spec, &couplings, &ao, &SdpOptions::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let samples = SectorSamples::new(&couplings, spec, ao.samples).unwrap();
        let sub = assemble_subproblem(0, &design.pattern, &samples, &couplings).unwrap();
        let mut cross = C64::new(0.0, 0.0);
        for (b, c) in sub.b.iter().zip(&sub.c) {
            for m in 0..b.nrows() {
                cross += b[(m, 0)].conj() * c[m];
            }
        }
        let got = design.pattern.coefficients()[0].arg();
        let diff = (got - cross.arg() + PI).rem_euclid(2.0 * PI) - PI;
        assert!(diff.abs() < 1e-3, "phase error {diff}");
    }

    #[test]
    fn design_trace_is_monotone_and_unit_modulus() {
        let couplings = default_couplings();
        let spec = SectorSpec::new(4, 2).unwrap();
        let design = design_codeword(spec, &couplings, &quick_ao(), &SdpOptions::default(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(design.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*design.trace.last().unwrap(), design.objective);
        assert!(design.pattern.coefficients().iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
        let unity = smaecp(&ReflectionPattern::unity(couplings.counts()), spec, &couplings, 8).unwrap();
        assert!(design.objective >= unity);
    }

    #[test]
    fn design_is_reproducible() {
        let couplings = default_couplings();
        let ao = quick_ao();
        let (a, _) = build_single_user_codebook(2, &couplings, &ao, &SdpOptions::default(), 4).unwrap();
        let (b, _) = build_single_user_codebook(2, &couplings, &ao, &SdpOptions::default(), 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a.entries[1].sector, SectorSpec::new(2, 2).unwrap());
    }

    #[test]
    fn multi_user_union_sizes() {
        let couplings = default_couplings();
        let ao = AoConfig {
            max_sweeps: 1,
            ..quick_ao()
        };
        let book = build_multi_user_codebook(&[1, 2], &couplings, &ao, &SdpOptions::default(), 0).unwrap();
        assert_eq!(book.len(), 3);
        assert_eq!(book.kind, CodebookKind::MultiUser);
        assert!(build_multi_user_codebook(&[2, 2], &couplings, &ao, &SdpOptions::default(), 0).is_err());
        assert!(build_multi_user_codebook(&[], &couplings, &ao, &SdpOptions::default(), 0).is_err());
    }

    #[test]
    fn ao_config_validation() {
        let mut ao = AoConfig::default();
        ao.samples = 0;
        assert!(ao.validate().unwrap_err().to_string().contains("ao.L"));
        let mut ao = AoConfig::default();
        ao.epsilon = 0.0;
        assert!(ao.validate().is_err());
    }
}
