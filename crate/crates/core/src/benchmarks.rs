//! Comparison schemes: random codebooks, the joint 2D-DFT codebook, unity
//! reflection and the bare antenna array.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ReflectionCouplings, ReflectionPattern, Responder, C64};
use crate::error::{Error, Result};
use crate::geometry::{RadomeGeometry, IRS_COUNT};

/// Default ceiling on the joint DFT search space.
pub const DEFAULT_DFT_CAP: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "scheme")]
pub enum BenchmarkScheme {
    RandomCodebook { size: usize },
    DftCodebook,
    Unity,
    NoIrs,
}

impl BenchmarkScheme {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkScheme::RandomCodebook { .. } => "random",
            BenchmarkScheme::DftCodebook => "dft",
            BenchmarkScheme::Unity => "unity",
            BenchmarkScheme::NoIrs => "no-irs",
        }
    }
}

/// `size` patterns with i.i.d. uniform phases.
pub fn random_codebook<R: Rng + ?Sized>(
    size: usize,
    counts: [usize; IRS_COUNT],
    rng: &mut R,
) -> Result<Vec<ReflectionPattern>> {
    if size == 0 {
        return Err(Error::InvalidArgument("random codebook size must be at least 1".into()));
    }
    Ok((0..size).map(|_| ReflectionPattern::random(counts, rng)).collect())
}

/// Columns of the `n`-point DFT matrix, entry `(a, b) = exp(-i2πab/n)`.
pub fn dft_columns(n: usize) -> Vec<Vec<C64>> {
    (0..n)
        .map(|b| {
            (0..n)
                .map(|a| C64::cis(-2.0 * PI * ((a * b) % n) as f64 / n as f64))
                .collect()
        })
        .collect()
}

/// Per-IRS DFT codewords `w_{j,1} ⊗ w_{j,2}` over the face grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DftCodebook {
    counts: [usize; IRS_COUNT],
    pub per_irs: [Vec<Vec<C64>>; IRS_COUNT],
}

impl DftCodebook {
    pub fn new(geom: &RadomeGeometry) -> Self {
        let per_irs = [0, 1, 2, 3].map(|j| {
            let layout = &geom.irs[j];
            if layout.is_empty() {
                return vec![Vec::new()];
            }
            let horizontal = dft_columns(layout.columns);
            let vertical = dft_columns(layout.rows);
            let mut set = Vec::with_capacity(layout.columns * layout.rows);
            for w1 in &horizontal {
                for w2 in &vertical {
                    set.push(w1.iter().flat_map(|a| w2.iter().map(move |b| a * b)).collect());
                }
            }
            set
        });
        Self {
            counts: geom.element_counts(),
            per_irs,
        }
    }

    /// Size of the joint search space across all surfaces.
    pub fn joint_size(&self) -> u128 {
        self.per_irs.iter().map(|s| s.len() as u128).product()
    }

    /// Joint codeword with mixed-radix index (IRS 1 varies slowest).
    pub fn joint_pattern(&self, mut index: usize) -> ReflectionPattern {
        let mut picks = [0usize; IRS_COUNT];
        for j in (0..IRS_COUNT).rev() {
            let len = self.per_irs[j].len();
            picks[j] = index % len;
            index /= len;
        }
        let coefficients = (0..IRS_COUNT)
            .flat_map(|j| self.per_irs[j][picks[j]].iter().copied())
            .collect();
        ReflectionPattern::new(self.counts, coefficients).expect("DFT entries are unit modulus")
    }

    /// All joint codewords, refusing spaces larger than `cap`.
    pub fn joint_patterns(&self, cap: u128) -> Result<Vec<ReflectionPattern>> {
        let size = self.joint_size();
        if size > cap {
            return Err(Error::CapExceeded {
                what: "joint DFT codebook search".into(),
                size,
                cap,
            });
        }
        Ok((0..size as usize).map(|i| self.joint_pattern(i)).collect())
    }
}

/// Candidate set of one scheme, ready for repeated metric evaluation.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub patterns: Vec<ReflectionPattern>,
    pub responders: Vec<Responder>,
}

/// Winning candidate of an exhaustive selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub value: f64,
}

impl Candidates {
    pub fn from_patterns(couplings: &ReflectionCouplings, patterns: Vec<ReflectionPattern>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::InvalidArgument("empty candidate set".into()));
        }
        let responders = patterns
            .par_iter()
            .map(|p| Responder::with_pattern(couplings, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { patterns, responders })
    }

    /// The bare antenna array: one candidate with no reflections.
    pub fn direct_only() -> Self {
        Self {
            patterns: Vec::new(),
            responders: vec![Responder::DirectOnly],
        }
    }

    pub fn for_scheme<R: Rng + ?Sized>(
        scheme: BenchmarkScheme,
        couplings: &ReflectionCouplings,
        geom: &RadomeGeometry,
        dft_cap: u128,
        rng: &mut R,
    ) -> Result<Self> {
        let counts = couplings.counts();
        match scheme {
            BenchmarkScheme::RandomCodebook { size } => {
                Self::from_patterns(couplings, random_codebook(size, counts, rng)?)
            }
            BenchmarkScheme::DftCodebook => {
                Self::from_patterns(couplings, DftCodebook::new(geom).joint_patterns(dft_cap)?)
            }
            BenchmarkScheme::Unity => Self::from_patterns(couplings, vec![ReflectionPattern::unity(counts)]),
            BenchmarkScheme::NoIrs => Ok(Self::direct_only()),
        }
    }

    pub fn len(&self) -> usize {
        self.responders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responders.is_empty()
    }

    /// Pattern of candidate `index`; `None` for the bare array.
    pub fn pattern(&self, index: usize) -> Option<&ReflectionPattern> {
        self.patterns.get(index)
    }

    /// Exhaustive argmax of `metric`; the first maximiser wins ties.
    pub fn select<F>(&self, metric: F) -> Selection
    where
        F: Fn(&Responder) -> f64 + Sync,
    {
        select_best(&self.responders, metric)
    }
}

pub fn select_best<F>(responders: &[Responder], metric: F) -> Selection
where
    F: Fn(&Responder) -> f64 + Sync,
{
    let values: Vec<f64> = if responders.len() > 256 {
        responders.par_iter().map(&metric).collect()
    } else {
        responders.iter().map(&metric).collect()
    };
    let mut best = Selection {
        index: 0,
        value: values[0],
    };
    for (index, &value) in values.iter().enumerate().skip(1) {
        if value > best.value {
            best = Selection { index, value };
        }
    }
    best
}

/// Builds the candidate set of `scheme` and picks the best one by `metric`.
pub fn evaluate_scheme<R, F>(
    scheme: BenchmarkScheme,
    couplings: &ReflectionCouplings,
    geom: &RadomeGeometry,
    dft_cap: u128,
    rng: &mut R,
    metric: F,
) -> Result<(Option<ReflectionPattern>, f64)>
where
    R: Rng + ?Sized,
    F: Fn(&Responder) -> f64 + Sync,
{
    let candidates = Candidates::for_scheme(scheme, couplings, geom, dft_cap, rng)?;
    let sel = candidates.select(metric);
    Ok((candidates.pattern(sel.index).cloned(), sel.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{los_coefficient, norm_sqr, Direction};
    use crate::geometry::{build_geometry, RadomeConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_codebook_shape_and_determinism() {
        let counts = [10; 4];
        let a = random_codebook(8, counts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = random_codebook(8, counts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a, b);
        assert!(a.iter().flat_map(|p| p.coefficients()).all(|c| (c.norm() - 1.0).abs() < 1e-12));
        assert!(random_codebook(0, counts, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn dft_columns_small() {
        assert_eq!(dft_columns(1), vec![vec![C64::new(1.0, 0.0)]]);
        let d = dft_columns(4);
        assert!((d[1][1] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((d[2][1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn default_dft_space() {
        let geom = RadomeGeometry::full(&RadomeConfig::standard()).unwrap();
        let dft = DftCodebook::new(&geom);
        assert!(dft.per_irs.iter().all(|s| s.len() == 10));
        assert_eq!(dft.joint_size(), 10_000);
        let all = dft.joint_patterns(DEFAULT_DFT_CAP).unwrap();
        assert_eq!(all.len(), 10_000);
        assert!(all.iter().flat_map(|p| p.coefficients()).all(|c| (c.norm() - 1.0).abs() < 1e-12));
        assert_eq!(all[0], ReflectionPattern::unity(geom.element_counts()));
        assert!(matches!(dft.joint_patterns(9_999), Err(Error::CapExceeded { size: 10_000, .. })));
        // last IRS varies fastest
        assert_eq!(all[1].irs(3), dft.per_irs[3][1].as_slice());
        assert_eq!(all[1].irs(0), dft.per_irs[0][0].as_slice());
    }

    #[test]
    fn kronecker_codeword_matches_element_order() {
        let lam = 0.05;
        let cfg = RadomeConfig {
            length: 10.0 * lam,
            width: 5.0 * lam,
            thickness: lam,
            max_elevation: PI / 4.0,
            ..RadomeConfig::standard()
        };
        let geom = build_geometry(&cfg, [4, 0, 0, 0]).unwrap();
        let dft = DftCodebook::new(&geom);
        assert_eq!(dft.per_irs[0].len(), 4);
        // column 1 of the 2-point DFT along the face, column 1 vertically
        let w = &dft.per_irs[0][3];
        let expected = [1.0, -1.0, -1.0, 1.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - C64::new(b, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn unity_and_no_irs_schemes() {
        let cfg = RadomeConfig::standard();
        let geom = RadomeGeometry::full(&cfg).unwrap();
        let couplings = ReflectionCouplings::new(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (p, _) = evaluate_scheme(BenchmarkScheme::Unity, &couplings, &geom, DEFAULT_DFT_CAP, &mut rng, |_| 0.0).unwrap();
        assert_eq!(p.unwrap(), ReflectionPattern::unity(geom.element_counts()));

        let a1 = los_coefficient(cfg.max_elevation, &cfg).unwrap();
        for phi in [0.0, 1.0, 4.0] {
            let dir = Direction::new(cfg.max_elevation, phi).unwrap();
            let (p, v) = evaluate_scheme(BenchmarkScheme::NoIrs, &couplings, &geom, DEFAULT_DFT_CAP, &mut rng, |r| {
                a1.norm_sqr() * norm_sqr(&r.earv(&couplings, &dir))
            })
            .unwrap();
            assert!(p.is_none());
            assert!((v - 8.0 * a1.norm_sqr()).abs() < 1e-12 * v);
        }
    }

    #[test]
    fn selection_is_idempotent() {
        let cfg = RadomeConfig::standard();
        let geom = RadomeGeometry::full(&cfg).unwrap();
        let couplings = ReflectionCouplings::new(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dir = Direction::new(cfg.max_elevation, 0.7).unwrap();
        let metric = |r: &Responder| norm_sqr(&r.earv(&couplings, &dir));
        let cands = Candidates::for_scheme(BenchmarkScheme::RandomCodebook { size: 20 }, &couplings, &geom, DEFAULT_DFT_CAP, &mut rng).unwrap();
        let sel = cands.select(metric);
        let again = Responder::with_pattern(&couplings, cands.pattern(sel.index).unwrap()).unwrap();
        assert_eq!(metric(&again), sel.value);
        assert!(cands.responders.iter().all(|r| metric(r) <= sel.value));

        let single = Candidates::for_scheme(BenchmarkScheme::RandomCodebook { size: 1 }, &couplings, &geom, DEFAULT_DFT_CAP, &mut rng).unwrap();
        assert_eq!(single.select(|_| -1.0).index, 0);
    }
}
