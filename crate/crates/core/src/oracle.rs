//! Brute-force references for small instances.
//!
//! The response terms here are rebuilt straight from element positions,
//! one term at a time, without the coupling tensors used by the optimiser.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{Direction, ReflectionPattern, C64};
use crate::error::{Error, Result};
use crate::geometry::{Point3, RadomeGeometry, IRS_COUNT};

/// Default ceiling on the number of enumerated phase assignments.
pub const DEFAULT_ORACLE_CAP: u128 = 1 << 20;

fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Every response term of one arrival direction, element by element.
#[derive(Debug, Clone)]
pub struct ResponseTerms {
    pub direct: Vec<C64>,
    /// `single[e]` for flattened element `e`.
    pub single: Vec<Vec<C64>>,
    /// `double[e][e2]`: reflected by `e` first, then `e2`.
    pub double: Vec<Vec<Vec<C64>>>,
    /// Number of terms enumerated, zero-valued ones included.
    pub enumerated: usize,
}

pub fn response_terms(dir: &Direction, geom: &RadomeGeometry) -> ResponseTerms {
    let cfg = &geom.config;
    let k = 2.0 * PI / cfg.wavelength;
    let (st, ct) = dir.elevation.sin_cos();
    let (sp, cp) = dir.azimuth.sin_cos();
    let u = [st * cp, st * sp, -ct];
    let q0 = geom.antennas[0];
    let root_gain = cfg.antenna_gain.sqrt();
    let aperture = (cfg.element_spacing * cfg.element_spacing / (4.0 * PI)).sqrt();
    let hop = |p: &Point3, q: &Point3| {
        let d = distance(p, q);
        C64::from_polar(aperture / d, -k * d)
    };

    let direct: Vec<C64> = geom
        .antennas
        .iter()
        .map(|q| C64::from_polar(root_gain, k * dot(&u, &[q[0] - q0[0], q[1] - q0[1], q[2] - q0[2]])))
        .collect();

    let mut elements = Vec::new();
    for j in 0..IRS_COUNT {
        for p in &geom.irs[j].elements {
            elements.push((j, *p));
        }
    }
    let lit: Vec<bool> = (0..IRS_COUNT).map(|j| -dot(&u, &geom.irs[j].normal) < 0.0).collect();
    let mut enumerated = 1;

    let mut single = Vec::with_capacity(elements.len());
    for (j, p) in &elements {
        enumerated += 1;
        let incidence = if lit[*j] {
            C64::cis(k * dot(&u, &[p[0] - q0[0], p[1] - q0[1], p[2] - q0[2]]))
        } else {
            C64::new(0.0, 0.0)
        };
        single.push(geom.antennas.iter().map(|q| incidence * root_gain * hop(p, q)).collect());
    }

    let mut double = vec![vec![vec![C64::new(0.0, 0.0); geom.antennas.len()]; elements.len()]; elements.len()];
    for (a, (j, pa)) in elements.iter().enumerate() {
        for (b, (q, pb)) in elements.iter().enumerate() {
            if j == q {
                continue;
            }
            enumerated += 1;
            let na = geom.irs[*j].normal;
            let nb = geom.irs[*q].normal;
            let ab = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let visible = dot(&ab, &na) > 0.0 && -dot(&ab, &nb) > 0.0;
            if !lit[*j] || !visible {
                continue;
            }
            let incidence = C64::cis(k * dot(&u, &[pa[0] - q0[0], pa[1] - q0[1], pa[2] - q0[2]]));
            let inter = hop(pa, pb);
            for (m, q) in geom.antennas.iter().enumerate() {
                double[a][b][m] = incidence * inter * root_gain * hop(pb, q);
            }
        }
    }
    ResponseTerms {
        direct,
        single,
        double,
        enumerated,
    }
}

/// `1 + Σ N_j + Σ_{j≠q} N_j N_q`.
pub fn term_count(geom: &RadomeGeometry) -> usize {
    let n = geom.element_counts();
    let mut count = 1 + n.iter().sum::<usize>();
    for j in 0..IRS_COUNT {
        for q in 0..IRS_COUNT {
            if j != q {
                count += n[j] * n[q];
            }
        }
    }
    count
}

/// EARV summed term by term.
pub fn term_enumeration_earv(dir: &Direction, pattern: &ReflectionPattern, geom: &RadomeGeometry) -> Result<Vec<C64>> {
    if pattern.counts() != geom.element_counts() {
        return Err(Error::Dimension("pattern does not match the geometry".into()));
    }
    let terms = response_terms(dir, geom);
    let theta = pattern.coefficients();
    let mut h = terms.direct.clone();
    for (e, f) in terms.single.iter().enumerate() {
        for (acc, v) in h.iter_mut().zip(f) {
            *acc += v * theta[e];
        }
    }
    for (a, row) in terms.double.iter().enumerate() {
        for (b, g) in row.iter().enumerate() {
            for (acc, v) in h.iter_mut().zip(g) {
                *acc += v * theta[a] * theta[b];
            }
        }
    }
    Ok(h)
}

/// Largest entry-wise gap between the term enumeration and the fast
/// coupling path over `cases` random directions and patterns.
pub fn earv_agreement(geom: &RadomeGeometry, cases: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let couplings = crate::channel::ReflectionCouplings::new(geom);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let theta_max = geom.config.max_elevation;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let dir = Direction::new(rng.random_range(0.0..=theta_max), rng.random_range(0.0..2.0 * PI))?;
        let pattern = ReflectionPattern::random(geom.element_counts(), &mut rng);
        let reference = term_enumeration_earv(&dir, &pattern, geom)?;
        let fast = crate::channel::Responder::with_pattern(&couplings, &pattern)?.earv(&couplings, &dir);
        for (a, b) in reference.iter().zip(&fast) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// Objective maximised by the exhaustive search.
#[derive(Debug, Clone)]
pub enum OracleTarget {
    /// `[ϑ; 1]ᴴ B̃ [ϑ; 1]`.
    Quadratic(DMatrix<C64>),
    /// `(|a|²/L) Σ_l ‖h_l(ϑ)‖²` with per-sample response terms.
    AveragePower { los_power: f64, samples: Vec<ResponseTerms> },
}

impl OracleTarget {
    /// Sector-average power over the given arrival directions.
    pub fn average_power(geom: &RadomeGeometry, directions: &[Direction], los_power: f64) -> Self {
        OracleTarget::AveragePower {
            los_power,
            samples: directions.iter().map(|d| response_terms(d, geom)).collect(),
        }
    }

    pub fn variables(&self) -> usize {
        match self {
            OracleTarget::Quadratic(b) => b.nrows().saturating_sub(1),
            OracleTarget::AveragePower { samples, .. } => samples.first().map_or(0, |s| s.single.len()),
        }
    }

    /// Objective at arbitrary coefficients.
    pub fn evaluate(&self, theta: &[C64]) -> f64 {
        match self {
            OracleTarget::Quadratic(b) => {
                let mut ext = theta.to_vec();
                ext.push(C64::new(1.0, 0.0));
                let mut acc = 0.0;
                for i in 0..ext.len() {
                    for j in 0..ext.len() {
                        acc += (ext[i].conj() * b[(i, j)] * ext[j]).re;
                    }
                }
                acc
            }
            OracleTarget::AveragePower { los_power, samples } => {
                let mut acc = 0.0;
                for s in samples {
                    let mut h = s.direct.clone();
                    for (e, f) in s.single.iter().enumerate() {
                        for (a, v) in h.iter_mut().zip(f) {
                            *a += v * theta[e];
                        }
                    }
                    for (a_idx, row) in s.double.iter().enumerate() {
                        for (b_idx, g) in row.iter().enumerate() {
                            for (a, v) in h.iter_mut().zip(g) {
                                *a += v * theta[a_idx] * theta[b_idx];
                            }
                        }
                    }
                    acc += h.iter().map(|c| c.norm_sqr()).sum::<f64>();
                }
                los_power * acc / samples.len() as f64
            }
        }
    }
}

/// Best Q-ary phase assignment `exp(i2πk/Q)`.
#[derive(Debug, Clone)]
pub struct QuantizedOptimum {
    pub levels: Vec<usize>,
    pub theta: Vec<C64>,
    pub value: f64,
}

/// Exhaustive maximisation of `target` over `levels`-ary phases.
pub fn exhaustive_quantized_optimum(target: &OracleTarget, levels: usize, cap: u128) -> Result<QuantizedOptimum> {
    if levels < 2 {
        return Err(Error::InvalidArgument("need at least two phase levels".into()));
    }
    let n = target.variables();
    if n == 0 {
        return Err(Error::InvalidArgument("nothing to search".into()));
    }
    let size = (levels as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::CapExceeded {
            what: "quantized phase search".into(),
            size,
            cap,
        });
    }
    let alphabet: Vec<C64> = (0..levels).map(|k| C64::cis(2.0 * PI * k as f64 / levels as f64)).collect();
    let search = Search::new(target, &alphabet);
    // Parallel over the first element's level; ties resolve to the lowest index.
    let best = (0..levels)
        .into_par_iter()
        .map(|first| search.run(first))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(Vec<usize>, f64)>, |acc, cand| match acc {
            Some((_, v)) if v >= cand.1 => acc,
            _ => Some(cand),
        })
        .expect("at least one level");
    Ok(QuantizedOptimum {
        theta: best.0.iter().map(|&k| alphabet[k]).collect(),
        levels: best.0,
        value: best.1,
    })
}

/// Depth-first enumeration with per-depth partial sums.
struct Search<'a> {
    target: &'a OracleTarget,
    alphabet: &'a [C64],
    n: usize,
}

impl<'a> Search<'a> {
    fn new(target: &'a OracleTarget, alphabet: &'a [C64]) -> Self {
        Self {
            target,
            alphabet,
            n: target.variables(),
        }
    }

    fn run(&self, first: usize) -> (Vec<usize>, f64) {
        let mut picks = vec![0usize; self.n];
        picks[0] = first;
        let mut best = (picks.clone(), f64::NEG_INFINITY);
        match self.target {
            OracleTarget::Quadratic(b) => {
                let last = self.n;
                let mut partial = vec![0.0; self.n + 1];
                partial[0] = b[(last, last)].re;
                self.quadratic(b, 0, &mut picks, &mut partial, &mut best, Some(first));
            }
            OracleTarget::AveragePower { los_power, samples } => {
                let mut stack: Vec<Vec<Vec<C64>>> = vec![samples.iter().map(|s| s.direct.clone()).collect(); self.n + 1];
                self.power(samples, *los_power, 0, &mut picks, &mut stack, &mut best, Some(first));
            }
        }
        best
    }

    fn choices(&self, fixed: Option<usize>) -> std::ops::Range<usize> {
        match fixed {
            Some(k) => k..k + 1,
            None => 0..self.alphabet.len(),
        }
    }

    fn quadratic(
        &self,
        b: &DMatrix<C64>,
        depth: usize,
        picks: &mut [usize],
        partial: &mut [f64],
        best: &mut (Vec<usize>, f64),
        fixed: Option<usize>,
    ) {
        let last = self.n;
        for k in self.choices(fixed) {
            let t = self.alphabet[k];
            let mut cross = b[(depth, last)];
            for i in 0..depth {
                cross += b[(depth, i)] * self.alphabet[picks[i]];
            }
            let value = partial[depth] + b[(depth, depth)].re + 2.0 * (t.conj() * cross).re;
            picks[depth] = k;
            if depth + 1 == self.n {
                if value > best.1 {
                    *best = (picks.to_vec(), value);
                }
            } else {
                partial[depth + 1] = value;
                self.quadratic(b, depth + 1, picks, partial, best, None);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn power(
        &self,
        samples: &[ResponseTerms],
        los_power: f64,
        depth: usize,
        picks: &mut [usize],
        stack: &mut [Vec<Vec<C64>>],
        best: &mut (Vec<usize>, f64),
        fixed: Option<usize>,
    ) {
        for k in self.choices(fixed) {
            let t = self.alphabet[k];
            picks[depth] = k;
            let (done, rest) = stack.split_at_mut(depth + 1);
            let next = &mut rest[0];
            for (l, s) in samples.iter().enumerate() {
                let h = &mut next[l];
                h.copy_from_slice(&done[depth][l]);
                for (a, v) in h.iter_mut().zip(&s.single[depth]) {
                    *a += v * t;
                }
                for i in 0..depth {
                    let pair = t * self.alphabet[picks[i]];
                    for (a, (x, y)) in h.iter_mut().zip(s.double[i][depth].iter().zip(&s.double[depth][i])) {
                        *a += (x + y) * pair;
                    }
                }
            }
            if depth + 1 == self.n {
                let value = los_power
                    * next.iter().map(|h| h.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum::<f64>()
                    / samples.len() as f64;
                if value > best.1 {
                    *best = (picks.to_vec(), value);
                }
            } else {
                self.power(samples, los_power, depth + 1, picks, stack, best, None);
            }
        }
    }
}
