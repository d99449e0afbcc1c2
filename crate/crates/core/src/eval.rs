//! Link-level metrics: power patterns, rates, overhead discount, sum rate
//! and the moving-user adaptation scenario.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    draw_rician_channel, los_coefficient, norm_sqr, Direction, ReflectionCouplings, ReflectionPattern, Responder,
    C64,
};
use crate::codebook::SectorSpec;
use crate::error::{Error, Result};
use crate::geometry::{RadomeConfig, SPEED_OF_LIGHT};

/// Transmit power, noise power and user count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub power: f64,
    pub noise: f64,
    pub users: usize,
}

impl LinkBudget {
    pub fn new(power: f64, noise: f64, users: usize) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::config("link.P", "transmit power must be positive"));
        }
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::config("link.sigma2", "noise power must be positive"));
        }
        if users == 0 {
            return Err(Error::config("link.K", "at least one user is required"));
        }
        Ok(Self { power, noise, users })
    }

    /// Power at which a cell-edge user without reflections sees 0 dB SNR.
    pub fn calibrated(cfg: &RadomeConfig, noise: f64, users: usize) -> Result<Self> {
        let a1 = los_coefficient(cfg.max_elevation, cfg)?.norm_sqr();
        let gain = a1 * cfg.antenna_count() as f64 * cfg.antenna_gain;
        Self::new(noise / gain, noise, users)
    }

    pub fn per_user_power(&self) -> f64 {
        self.power / self.users as f64
    }
}

/// `log2(1 + P‖h‖²/σ²)`.
pub fn single_user_rate(h: &[C64], budget: &LinkBudget) -> f64 {
    (budget.power * norm_sqr(h) / budget.noise).ln_1p() / std::f64::consts::LN_2
}

/// Rate left after spending `overhead` of `coherence` symbols on training.
pub fn effective_rate_with_overhead(rate: f64, overhead: f64, coherence: f64) -> Result<f64> {
    if !(overhead >= 0.0) || !(coherence > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "overhead {overhead} and coherence time {coherence} must be non-negative and positive"
        )));
    }
    Ok((1.0 - overhead / coherence).max(0.0) * rate)
}

/// `log2 det(I + Σ (p_k/σ²) h_k h_kᴴ)` through a Cholesky factor.
pub fn sum_rate_mmse_sic(channels: &[Vec<C64>], powers: &[f64], noise: f64) -> Result<f64> {
    let m = channels
        .first()
        .ok_or_else(|| Error::InvalidArgument("no users".into()))?
        .len();
    if powers.len() != channels.len() || channels.iter().any(|h| h.len() != m) {
        return Err(Error::Dimension("channels and powers disagree in size".into()));
    }
    let mut gram = DMatrix::<C64>::identity(m, m);
    for (h, p) in channels.iter().zip(powers) {
        let w = p / noise;
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] += h[i] * h[j].conj() * w;
            }
        }
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("sum-rate Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    Ok(2.0 * (0..m).map(|i| l[(i, i)].re.log2()).sum::<f64>())
}

/// Sum rate with equal power split over the budget's users.
pub fn sum_rate(channels: &[Vec<C64>], budget: &LinkBudget) -> Result<f64> {
    let p = vec![budget.power / channels.len() as f64; channels.len()];
    sum_rate_mmse_sic(channels, &p, budget.noise)
}

/// Sample counts for the power-pattern tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternGrid {
    /// Elevation points over `[0, theta_max]`, endpoints included.
    pub elevation_points: usize,
    /// Midpoint-rule samples for azimuth averages and the azimuth table.
    pub azimuth_samples: usize,
}

impl Default for PatternGrid {
    fn default() -> Self {
        Self {
            elevation_points: 81,
            azimuth_samples: 180,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternRow {
    pub angle: f64,
    /// `|a_1|²‖h‖²`.
    pub effective: f64,
    /// `|a_1|²‖h − h_d‖²`.
    pub reflection: f64,
    /// `|a_1|²‖h_d‖²`.
    pub direct: f64,
}

#[derive(Debug, Clone)]
pub struct PowerPatterns {
    /// Averages over `φ ∈ [0, π/2]` per elevation.
    pub elevation: Vec<PatternRow>,
    /// Values at `theta_max` per azimuth in `[0, 2π)`.
    pub azimuth: Vec<PatternRow>,
}

fn pattern_point(responder: &Responder, couplings: &ReflectionCouplings, dir: &Direction, a1: f64) -> (f64, f64, f64) {
    let hd = couplings.direct(dir);
    let h = responder.earv(couplings, dir);
    let refl: f64 = h.iter().zip(&hd).map(|(a, b)| (a - b).norm_sqr()).sum();
    (a1 * norm_sqr(&h), a1 * refl, a1 * norm_sqr(&hd))
}

/// Elevation and azimuth power tables of `pattern` (`None` = surfaces absent).
pub fn power_patterns(
    pattern: Option<&ReflectionPattern>,
    couplings: &ReflectionCouplings,
    grid: &PatternGrid,
) -> Result<PowerPatterns> {
    if grid.elevation_points < 2 || grid.azimuth_samples == 0 {
        return Err(Error::config("patterns", "need at least 2 elevation points and 1 azimuth sample"));
    }
    let cfg = couplings.config();
    let responder = match pattern {
        Some(p) => Responder::with_pattern(couplings, p)?,
        None => Responder::DirectOnly,
    };
    let n = grid.azimuth_samples;
    let mut elevation = Vec::with_capacity(grid.elevation_points);
    for i in 0..grid.elevation_points {
        let theta = cfg.max_elevation * i as f64 / (grid.elevation_points - 1) as f64;
        let a1 = los_coefficient(theta, cfg)?.norm_sqr();
        let mut acc = (0.0, 0.0, 0.0);
        for k in 0..n {
            let phi = (k as f64 + 0.5) * FRAC_PI_2 / n as f64;
            let (e, r, d) = pattern_point(&responder, couplings, &Direction::new(theta, phi)?, a1);
            acc = (acc.0 + e, acc.1 + r, acc.2 + d);
        }
        elevation.push(PatternRow {
            angle: theta,
            effective: acc.0 / n as f64,
            reflection: acc.1 / n as f64,
            direct: acc.2 / n as f64,
        });
    }
    let a1 = los_coefficient(cfg.max_elevation, cfg)?.norm_sqr();
    let azimuth = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            let (effective, reflection, direct) =
                pattern_point(&responder, couplings, &Direction::new(cfg.max_elevation, phi)?, a1);
            Ok(PatternRow {
                angle: phi,
                effective,
                reflection,
                direct,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerPatterns { elevation, azimuth })
}

/// Moving-user scenario at the coverage edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    /// User speed (m/s).
    pub v: f64,
    /// Carrier frequency (Hz).
    pub f_c: f64,
    /// Azimuth rate of the trajectory (rad/s).
    pub angular_rate: f64,
    /// Azimuth at time zero (rad). Two degrees keeps the first training
    /// block off the sector boundary at zero.
    pub start_azimuth: f64,
    /// Number of one-instant averaging windows.
    pub instants: usize,
    pub blocks_per_instant: usize,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            v: 2.0,
            f_c: 6.0e9,
            angular_rate: PI / 36.0,
            start_azimuth: 2.0 * PI / 180.0,
            instants: 18,
            blocks_per_instant: 400,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::config("mobility.v", "speed must be positive"));
        }
        if !(self.f_c > 0.0 && self.f_c.is_finite()) {
            return Err(Error::config("mobility.f_c", "carrier frequency must be positive"));
        }
        if !self.angular_rate.is_finite() || !self.start_azimuth.is_finite() {
            return Err(Error::config("mobility.angular_rate", "trajectory must be finite"));
        }
        if self.instants == 0 || self.blocks_per_instant == 0 {
            return Err(Error::config("mobility.instants", "instants and blocks must be positive"));
        }
        Ok(())
    }

    /// `f_max = v f_c / c`.
    pub fn max_doppler(&self) -> f64 {
        self.v * self.f_c / SPEED_OF_LIGHT
    }

    /// Fading block length `1 / (10 f_max)`.
    pub fn block_duration(&self) -> f64 {
        1.0 / (10.0 * self.max_doppler())
    }

    pub fn instant_duration(&self) -> f64 {
        self.block_duration() * self.blocks_per_instant as f64
    }

    pub fn azimuth_at(&self, time: f64) -> f64 {
        crate::channel::wrap_azimuth(self.start_azimuth + self.angular_rate * time)
    }

    fn blocks_per_hold(&self, hold: f64) -> Result<usize> {
        let blocks = hold / self.block_duration();
        let rounded = blocks.round();
        if !(rounded >= 1.0) || (blocks - rounded).abs() > 1e-6 * rounded {
            return Err(Error::InvalidArgument(format!(
                "hold time {hold} s is not a whole number of {} s blocks",
                self.block_duration()
            )));
        }
        Ok(rounded as usize)
    }
}

/// Per-instant mean rates of fast adaptation and of each slow hold time,
/// all computed on the same channel draws.
#[derive(Debug, Clone)]
pub struct MobilitySeries {
    pub fast: Vec<f64>,
    pub holds: Vec<f64>,
    pub slow: Vec<Vec<f64>>,
}

/// Runs the moving-user scenario for one trajectory draw.
///
/// Every block draws a fresh Rician channel along the trajectory. Fast
/// adaptation picks the best codeword each block; slow adaptation picks at
/// the first block of every hold period and keeps it.
#[allow(clippy::too_many_arguments)]
pub fn run_mobility<R: Rng + ?Sized>(
    codewords: &[Responder],
    couplings: &ReflectionCouplings,
    mobility: &MobilityConfig,
    holds: &[f64],
    budget: &LinkBudget,
    kappa: f64,
    paths: usize,
    rng: &mut R,
) -> Result<MobilitySeries> {
    mobility.validate()?;
    if codewords.is_empty() {
        return Err(Error::InvalidArgument("mobility needs at least one codeword".into()));
    }
    let hold_blocks = holds
        .iter()
        .map(|&h| mobility.blocks_per_hold(h))
        .collect::<Result<Vec<_>>>()?;
    let cfg = couplings.config();
    let dt = mobility.block_duration();
    let per = mobility.blocks_per_instant;
    let mut fast = vec![0.0; mobility.instants];
    let mut slow = vec![vec![0.0; mobility.instants]; holds.len()];
    let mut held = vec![0usize; holds.len()];
    let mut rates = vec![0.0; codewords.len()];

    for block in 0..mobility.instants * per {
        let time = (block as f64 + 0.5) * dt;
        let user = Direction::new(cfg.max_elevation, mobility.azimuth_at(time))?;
        let channel = draw_rician_channel(&user, kappa, paths, cfg, rng)?;
        let footprint = channel.footprint(couplings);
        for (r, cw) in rates.iter_mut().zip(codewords) {
            *r = single_user_rate(&cw.effective(&footprint), budget);
        }
        let best = argmax(&rates);
        let instant = block / per;
        fast[instant] += rates[best];
        for (k, &blocks) in hold_blocks.iter().enumerate() {
            if block % blocks == 0 {
                held[k] = best;
            }
            slow[k][instant] += rates[held[k]];
        }
    }
    let scale = 1.0 / per as f64;
    fast.iter_mut().for_each(|v| *v *= scale);
    slow.iter_mut().flatten().for_each(|v| *v *= scale);
    Ok(MobilitySeries {
        fast,
        holds: holds.to_vec(),
        slow,
    })
}

/// Instants (1-based order) where the sector the held codeword was chosen
/// for differs from the user's sector at the instant's midpoint.
pub fn sector_mismatch(mobility: &MobilityConfig, sectors: usize, hold: f64) -> Result<Vec<bool>> {
    let blocks = mobility.blocks_per_hold(hold)?;
    let dt = mobility.block_duration();
    (0..mobility.instants)
        .map(|t| {
            let mid = (t as f64 + 0.5) * mobility.instant_duration();
            let mid_block = (mid / dt).floor() as usize;
            let update_block = mid_block / blocks * blocks;
            let chosen = SectorSpec::containing(sectors, mobility.azimuth_at((update_block as f64 + 0.5) * dt))?;
            let user = SectorSpec::containing(sectors, mobility.azimuth_at(mid))?;
            Ok(chosen != user)
        })
        .collect()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, RadomeGeometry};
    use nalgebra::SymmetricEigen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn budget(power: f64) -> LinkBudget {
        LinkBudget::new(power, 1.0, 1).unwrap()
    }

    #[test]
    fn rate_examples() {
        let h = vec![C64::new(1.0, 0.0)];
        assert!((single_user_rate(&h, &budget(1.0)) - 1.0).abs() < 1e-15);
        assert!((single_user_rate(&h, &budget(3.0)) - 2.0).abs() < 1e-15);
        assert_eq!(single_user_rate(&[C64::new(0.0, 0.0)], &budget(3.0)), 0.0);
    }

    #[test]
    fn overhead_examples() {
        assert_eq!(effective_rate_with_overhead(3.0, 20.0, 20.0).unwrap(), 0.0);
        assert_eq!(effective_rate_with_overhead(3.0, 0.0, 20.0).unwrap(), 3.0);
        assert_eq!(effective_rate_with_overhead(3.0, 30.0, 20.0).unwrap(), 0.0);
        assert!(effective_rate_with_overhead(3.0, -1.0, 20.0).is_err());
    }

    #[test]
    fn sum_rate_single_user_and_orthogonal() {
        let h = vec![C64::new(0.3, 0.4), C64::new(-0.2, 0.1)];
        let single = single_user_rate(&h, &budget(2.0));
        let sum = sum_rate_mmse_sic(std::slice::from_ref(&h), &[2.0], 1.0).unwrap();
        assert!((single - sum).abs() < 1e-12);

        let a = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let b = vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0)];
        let sum = sum_rate_mmse_sic(&[a.clone(), b.clone()], &[1.0, 1.0], 1.0).unwrap();
        let separate = single_user_rate(&a, &budget(1.0)) + single_user_rate(&b, &budget(1.0));
        assert!((sum - separate).abs() < 1e-12);
    }

    #[test]
    fn sum_rate_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hs: Vec<Vec<C64>> = (0..4)
            .map(|_| (0..4).map(|_| crate::channel::complex_normal(&mut rng)).collect())
            .collect();
        let p = [0.5, 1.0, 2.0, 0.25];
        let mut gram = DMatrix::<C64>::zeros(4, 4);
        for (h, pk) in hs.iter().zip(p) {
            let v = nalgebra::DVector::from_column_slice(h);
            gram += &v * v.adjoint() * C64::new(pk / 0.7, 0.0);
        }
        let eig = SymmetricEigen::new(gram);
        let spectral: f64 = eig.eigenvalues.iter().map(|l| (1.0 + l).log2()).sum();
        let got = sum_rate_mmse_sic(&hs, &p, 0.7).unwrap();
        assert!((got - spectral).abs() < 1e-9);
    }

    #[test]
    fn calibrated_budget_gives_unit_edge_snr() {
        let cfg = RadomeConfig::standard();
        let b = LinkBudget::calibrated(&cfg, 1.0, 1).unwrap();
        let a1 = los_coefficient(cfg.max_elevation, &cfg).unwrap();
        let h: Vec<C64> = crate::channel::direct_arv(&Direction::new(cfg.max_elevation, 0.3).unwrap(), &cfg)
            .into_iter()
            .map(|v| v * a1)
            .collect();
        assert!((single_user_rate(&h, &b) - 1.0).abs() < 1e-12);
        assert!(LinkBudget::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn power_pattern_identities() {
        let cfg = RadomeConfig::standard();
        let geom = RadomeGeometry::full(&cfg).unwrap();
        let couplings = ReflectionCouplings::new(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pattern = ReflectionPattern::random(geom.element_counts(), &mut rng);
        let grid = PatternGrid {
            elevation_points: 5,
            azimuth_samples: 36,
        };
        let pp = power_patterns(Some(&pattern), &couplings, &grid).unwrap();
        assert_eq!(pp.elevation.first().unwrap().angle, 0.0);
        assert_eq!(pp.elevation.last().unwrap().angle, cfg.max_elevation);
        let d0 = pp.azimuth[0].direct;
        assert!(pp.azimuth.iter().all(|r| (r.direct - d0).abs() < 1e-12 * d0));

        let bare = ReflectionCouplings::new(&build_geometry(&cfg, [0; 4]).unwrap());
        let pp = power_patterns(Some(&ReflectionPattern::unity([0; 4])), &bare, &grid).unwrap();
        assert!(pp.azimuth.iter().all(|r| r.effective == r.direct && r.reflection == 0.0));
    }

    #[test]
    fn mobility_timing() {
        let m = MobilityConfig::default();
        assert!((m.max_doppler() - 40.0).abs() < 1e-9);
        assert!((m.block_duration() - 0.0025).abs() < 1e-15);
        assert!((m.instant_duration() - 1.0).abs() < 1e-12);
        assert_eq!(m.blocks_per_hold(3.0).unwrap(), 1200);
        assert!(m.blocks_per_hold(0.001).is_err());
    }

    #[test]
    fn mismatch_for_default_trajectory() {
        let m = MobilityConfig::default();
        let six = sector_mismatch(&m, 8, 6.0).unwrap();
        let flagged: Vec<usize> = six.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i + 1).collect();
        assert_eq!(flagged, vec![10, 11, 12]);
        assert!(sector_mismatch(&m, 8, 3.0).unwrap().iter().all(|b| !b));
        assert!(sector_mismatch(&m, 4, 6.0).unwrap().iter().all(|b| !b));
    }

    #[test]
    fn fast_dominates_slow_and_single_codeword_agrees() {
        let cfg = RadomeConfig::standard();
        let geom = RadomeGeometry::full(&cfg).unwrap();
        let couplings = ReflectionCouplings::new(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MobilityConfig {
            instants: 3,
            blocks_per_instant: 40,
            ..MobilityConfig::default()
        };
        let b = LinkBudget::calibrated(&cfg, 1.0, 1).unwrap();
        let cws: Vec<Responder> = (0..4)
            .map(|_| Responder::with_pattern(&couplings, &ReflectionPattern::random(geom.element_counts(), &mut rng)).unwrap())
            .collect();
        let s = run_mobility(&cws, &couplings, &m, &[0.05, 0.1], &b, 10.0, 5, &mut rng).unwrap();
        for series in &s.slow {
            for (f, v) in s.fast.iter().zip(series) {
                assert!(f >= v);
            }
        }
        let s = run_mobility(&cws[..1], &couplings, &m, &[0.3], &b, 10.0, 5, &mut rng).unwrap();
        assert_eq!(s.fast, s.slow[0]);
    }
}
