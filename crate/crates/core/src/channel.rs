//! Direct, single-reflection and double-reflection array responses.
//!
//! The reflected responses use an element-wise near-field model:
//!
//! * a plane wave from direction `u = [sinθ cosφ, sinθ sinφ, -cosθ]`
//!   reaches element `p` with phase `exp(i k u·(p - q_ref))`, where `q_ref`
//!   is antenna `(1, 1)`, the phase reference of the direct response;
//! * IRS `j` is illuminated only when the wave travels against its inward
//!   normal (`u·n_j > 0`); grazing incidence counts as dark;
//! * element-to-antenna and element-to-element hops use the spherical-wave
//!   coefficient `rho(p, q) = sqrt(A / 4π) exp(-i k |p - q|) / |p - q|`;
//! * an inter-element hop needs each element in front of the other;
//! * reflected arrivals see the boresight antenna gain.
//!
//! Everything except the incidence phase and the illumination indicator is
//! independent of the arrival direction, so [`ReflectionCouplings`] holds
//! the static part once per geometry.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, RadomeConfig, RadomeGeometry, IRS_COUNT};

pub type C64 = Complex64;

/// Arrival direction of a signal path, relative to the antenna array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// Elevation from the downward boresight, in `[0, π/2]`.
    pub elevation: f64,
    /// Azimuth in `[0, 2π)`.
    pub azimuth: f64,
}

impl Direction {
    /// Builds a direction, wrapping the azimuth into `[0, 2π)`.
    pub fn new(elevation: f64, azimuth: f64) -> Result<Self> {
        if !(elevation.is_finite() && (0.0..=FRAC_PI_2).contains(&elevation)) {
            return Err(Error::InvalidArgument(format!(
                "elevation {elevation} outside [0, pi/2]"
            )));
        }
        if !azimuth.is_finite() {
            return Err(Error::InvalidArgument("azimuth must be finite".into()));
        }
        Ok(Self {
            elevation,
            azimuth: wrap_azimuth(azimuth),
        })
    }

    /// Unit vector from the array toward the source.
    pub fn toward_source(&self) -> Point3 {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [st * cp, st * sp, -ct]
    }
}

pub fn wrap_azimuth(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// `[1, e^{iπa}, …, e^{iπa(n-1)}]`.
pub fn steering_vector(angle: f64, size: usize) -> Vec<C64> {
    (0..size).map(|k| C64::cis(PI * angle * k as f64)).collect()
}

pub fn antenna_gain(cfg: &RadomeConfig, dir: &Direction) -> f64 {
    if dir.elevation <= FRAC_PI_2 {
        cfg.antenna_gain
    } else {
        0.0
    }
}

/// Direct array response of the uniform planar array.
pub fn direct_arv(dir: &Direction, cfg: &RadomeConfig) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); cfg.antenna_count()];
    direct_arv_into(dir, cfg, &mut out);
    out
}

fn direct_arv_into(dir: &Direction, cfg: &RadomeConfig, out: &mut [C64]) {
    let amp = antenna_gain(cfg, dir).sqrt();
    let scale = 2.0 * cfg.antenna_spacing / cfg.wavelength * dir.elevation.sin();
    let ex = steering_vector(scale * dir.azimuth.cos(), cfg.antennas_x);
    let ey = steering_vector(scale * dir.azimuth.sin(), cfg.antennas_y);
    let my = cfg.antennas_y;
    for (ix, a) in ex.iter().enumerate() {
        for (iy, b) in ey.iter().enumerate() {
            out[ix * my + iy] = a * b * amp;
        }
    }
}

/// LoS path coefficient for a ground user seen at elevation `theta`.
pub fn los_coefficient(theta: f64, cfg: &RadomeConfig) -> Result<C64> {
    if !(theta.is_finite() && (0.0..FRAC_PI_2).contains(&theta)) {
        return Err(Error::InvalidArgument(format!(
            "LoS elevation {theta} must lie in [0, pi/2)"
        )));
    }
    let distance = cfg.mount_height / theta.cos();
    Ok(C64::from_polar(
        cfg.wavelength / (4.0 * PI * distance),
        -cfg.wavenumber() * distance,
    ))
}

/// Unit-modulus reflection coefficients for every element of every IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPattern {
    counts: [usize; IRS_COUNT],
    coefficients: Vec<C64>,
}

const UNIT_MODULUS_TOL: f64 = 1e-12;

impl ReflectionPattern {
    pub fn new(counts: [usize; IRS_COUNT], coefficients: Vec<C64>) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if coefficients.len() != total {
            return Err(Error::Dimension(format!(
                "pattern has {} coefficients, geometry has {total} elements",
                coefficients.len()
            )));
        }
        if let Some(bad) = coefficients
            .iter()
            .position(|c| (c.norm() - 1.0).abs() > UNIT_MODULUS_TOL)
        {
            return Err(Error::InvalidArgument(format!(
                "coefficient {bad} has modulus {}",
                coefficients[bad].norm()
            )));
        }
        Ok(Self {
            counts,
            coefficients,
        })
    }

    pub fn from_phases(counts: [usize; IRS_COUNT], phases: &[f64]) -> Result<Self> {
        Self::new(counts, phases.iter().map(|&p| C64::cis(p)).collect())
    }

    pub fn unity(counts: [usize; IRS_COUNT]) -> Self {
        let total = counts.iter().sum();
        Self {
            counts,
            coefficients: vec![C64::new(1.0, 0.0); total],
        }
    }

    /// I.i.d. phases uniform on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(counts: [usize; IRS_COUNT], rng: &mut R) -> Self {
        let total = counts.iter().sum();
        let coefficients = (0..total)
            .map(|_| C64::cis(rng.random_range(0.0..2.0 * PI)))
            .collect();
        Self {
            counts,
            coefficients,
        }
    }

    pub fn counts(&self) -> [usize; IRS_COUNT] {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    fn offset(&self, j: usize) -> usize {
        self.counts[..j].iter().sum()
    }

    pub fn irs(&self, j: usize) -> &[C64] {
        let start = self.offset(j);
        &self.coefficients[start..start + self.counts[j]]
    }

    /// Replaces the coefficients of IRS `j`.
    pub fn set_irs(&mut self, j: usize, values: &[C64]) -> Result<()> {
        if values.len() != self.counts[j] {
            return Err(Error::Dimension(format!(
                "IRS {} has {} elements, got {}",
                j + 1,
                self.counts[j],
                values.len()
            )));
        }
        if values.iter().any(|c| (c.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
            return Err(Error::InvalidArgument("coefficients must be unit modulus".into()));
        }
        let start = self.offset(j);
        self.coefficients[start..start + values.len()].copy_from_slice(values);
        Ok(())
    }

    /// Phases wrapped into `(-π, π]`.
    pub fn phases(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| {
                let a = c.arg();
                if a <= -PI {
                    PI
                } else {
                    a
                }
            })
            .collect()
    }

    /// Multiplies every coefficient by the same unit-modulus scalar.
    pub fn rotated(&self, phase: f64) -> Self {
        let r = C64::cis(phase);
        Self {
            counts: self.counts,
            coefficients: self.coefficients.iter().map(|c| c * r).collect(),
        }
    }
}

fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

/// Spherical-wave hop coefficient between two points.
pub fn spherical_coefficient(cfg: &RadomeConfig, p: &Point3, q: &Point3) -> C64 {
    let d = norm(&sub(p, q));
    assert!(d > 0.0, "coincident points in the propagation model");
    let amp = (cfg.element_aperture() / (4.0 * PI)).sqrt() / d;
    C64::from_polar(amp, -cfg.wavenumber() * d)
}

/// Whether element `a` (normal `na`) can reflect toward element `b` (normal `nb`).
pub fn mutually_visible(pa: &Point3, na: &Point3, pb: &Point3, nb: &Point3) -> bool {
    dot(&sub(pb, pa), na) > 0.0 && dot(&sub(pa, pb), nb) > 0.0
}

/// Illumination indicator of each IRS for a plane wave from `dir`.
pub fn illumination(geom: &RadomeGeometry, dir: &Direction) -> [bool; IRS_COUNT] {
    let u = dir.toward_source();
    [0, 1, 2, 3].map(|j| dot(&u, &geom.irs[j].normal) > 0.0)
}

/// Direction-independent coupling tensors of a geometry.
#[derive(Debug, Clone)]
pub struct ReflectionCouplings {
    config: RadomeConfig,
    geometry_hash: String,
    antennas: usize,
    counts: [usize; IRS_COUNT],
    irs_of: Vec<usize>,
    normals: [Point3; IRS_COUNT],
    /// `p_e - q_ref` for each element.
    incidence_offsets: Vec<Point3>,
    /// `sqrt(G_A) rho(p_e, q_m)`, `N x M`.
    single: Vec<C64>,
    /// `nu(e -> e') rho(p_e, p_e') sqrt(G_A) rho(p_e', q_m)`, `N x N x M`.
    double: Vec<C64>,
}

impl ReflectionCouplings {
    pub fn new(geom: &RadomeGeometry) -> Self {
        let cfg = &geom.config;
        let m = geom.antenna_count();
        let elements: Vec<(usize, Point3)> = geom
            .irs
            .iter()
            .enumerate()
            .flat_map(|(j, layout)| layout.elements.iter().map(move |p| (j, *p)))
            .collect();
        let n = elements.len();
        let gain = cfg.antenna_gain.sqrt();
        let reference = geom.antennas[0];

        let mut single = vec![C64::new(0.0, 0.0); n * m];
        for (e, (_, p)) in elements.iter().enumerate() {
            for (ant, q) in geom.antennas.iter().enumerate() {
                single[e * m + ant] = spherical_coefficient(cfg, p, q) * gain;
            }
        }

        let mut double = vec![C64::new(0.0, 0.0); n * n * m];
        for (e, (j, pa)) in elements.iter().enumerate() {
            for (e2, (q, pb)) in elements.iter().enumerate() {
                if j == q || !mutually_visible(pa, &geom.irs[*j].normal, pb, &geom.irs[*q].normal) {
                    continue;
                }
                let hop = spherical_coefficient(cfg, pa, pb);
                let base = (e * n + e2) * m;
                for ant in 0..m {
                    double[base + ant] = hop * single[e2 * m + ant];
                }
            }
        }

        Self {
            config: cfg.clone(),
            geometry_hash: geom.content_hash(),
            antennas: m,
            counts: geom.element_counts(),
            irs_of: elements.iter().map(|(j, _)| *j).collect(),
            normals: [0, 1, 2, 3].map(|j| geom.irs[j].normal),
            incidence_offsets: elements.iter().map(|(_, p)| sub(p, &reference)).collect(),
            single,
            double,
        }
    }

    pub fn config(&self) -> &RadomeConfig {
        &self.config
    }

    pub fn geometry_hash(&self) -> &str {
        &self.geometry_hash
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn elements(&self) -> usize {
        self.irs_of.len()
    }

    pub fn counts(&self) -> [usize; IRS_COUNT] {
        self.counts
    }

    pub fn irs_of(&self, element: usize) -> usize {
        self.irs_of[element]
    }

    pub fn single(&self, e: usize) -> &[C64] {
        &self.single[e * self.antennas..(e + 1) * self.antennas]
    }

    pub fn double(&self, e: usize, e2: usize) -> &[C64] {
        let base = (e * self.elements() + e2) * self.antennas;
        &self.double[base..base + self.antennas]
    }

    /// `chi_j(e) exp(i k u·(p_e - q_ref))` for each element.
    pub fn incidence(&self, dir: &Direction) -> Vec<C64> {
        let u = dir.toward_source();
        let lit = self.normals.map(|n| dot(&u, &n) > 0.0);
        let k = self.config.wavenumber();
        self.incidence_offsets
            .iter()
            .zip(&self.irs_of)
            .map(|(p, &j)| {
                if lit[j] {
                    C64::cis(k * dot(&u, p))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    pub fn direct(&self, dir: &Direction) -> Vec<C64> {
        direct_arv(dir, &self.config)
    }

    fn check_pattern(&self, pattern: &ReflectionPattern) -> Result<()> {
        if pattern.counts() != self.counts {
            return Err(Error::Dimension(format!(
                "pattern element counts {:?} do not match geometry {:?}",
                pattern.counts(),
                self.counts
            )));
        }
        Ok(())
    }
}

/// Direct, single- and double-reflection responses for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayResponse {
    pub direction: Direction,
    antennas: usize,
    counts: [usize; IRS_COUNT],
    direct: Vec<C64>,
    single: Vec<C64>,
    double: Vec<C64>,
}

impl ArrayResponse {
    pub fn evaluate(dir: &Direction, couplings: &ReflectionCouplings) -> Self {
        let m = couplings.antennas;
        let n = couplings.elements();
        let incidence = couplings.incidence(dir);
        let mut single = vec![C64::new(0.0, 0.0); n * m];
        let mut double = vec![C64::new(0.0, 0.0); n * n * m];
        for e in 0..n {
            let s = incidence[e];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for (dst, src) in single[e * m..(e + 1) * m].iter_mut().zip(couplings.single(e)) {
                *dst = s * src;
            }
            let base = e * n * m;
            for (dst, src) in double[base..base + n * m]
                .iter_mut()
                .zip(&couplings.double[base..base + n * m])
            {
                *dst = s * src;
            }
        }
        Self {
            direction: *dir,
            antennas: m,
            counts: couplings.counts,
            direct: couplings.direct(dir),
            single,
            double,
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn elements(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> [usize; IRS_COUNT] {
        self.counts
    }

    pub fn direct(&self) -> &[C64] {
        &self.direct
    }

    /// Single-reflection vector via flattened element `e`.
    pub fn f(&self, e: usize) -> &[C64] {
        &self.single[e * self.antennas..(e + 1) * self.antennas]
    }

    /// Double-reflection vector via element `e` then element `e2`.
    pub fn g(&self, e: usize, e2: usize) -> &[C64] {
        let base = (e * self.elements() + e2) * self.antennas;
        &self.double[base..base + self.antennas]
    }
}

/// Single- and double-reflection responses for one direction.
pub fn reflection_arvs(dir: &Direction, geom: &RadomeGeometry) -> ArrayResponse {
    ArrayResponse::evaluate(dir, &ReflectionCouplings::new(geom))
}

/// Responses precomputed over a list of directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayResponseSet {
    pub geometry_hash: String,
    pub responses: Vec<ArrayResponse>,
}

impl ArrayResponseSet {
    pub fn build(couplings: &ReflectionCouplings, directions: &[Direction]) -> Self {
        Self {
            geometry_hash: couplings.geometry_hash.clone(),
            responses: directions
                .iter()
                .map(|d| ArrayResponse::evaluate(d, couplings))
                .collect(),
        }
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.responses.iter().map(|r| r.direction).collect()
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// Effective array response `h_d + Σ f ϑ + Σ g ϑ ϑ`.
pub fn earv(pattern: &ReflectionPattern, resp: &ArrayResponse) -> Result<Vec<C64>> {
    if pattern.counts() != resp.counts {
        return Err(Error::Dimension(format!(
            "pattern element counts {:?} do not match responses {:?}",
            pattern.counts(),
            resp.counts
        )));
    }
    let theta = pattern.coefficients();
    let m = resp.antennas;
    let n = theta.len();
    let mut h = resp.direct.clone();
    for e in 0..n {
        // f_e + Σ_e' g_{e,e'} ϑ_e'
        let mut w: Vec<C64> = resp.f(e).to_vec();
        let row = &resp.double[e * n * m..(e + 1) * n * m];
        for (e2, t2) in theta.iter().enumerate() {
            for (acc, g) in w.iter_mut().zip(&row[e2 * m..(e2 + 1) * m]) {
                *acc += g * t2;
            }
        }
        for (acc, v) in h.iter_mut().zip(&w) {
            *acc += v * theta[e];
        }
    }
    Ok(h)
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Pattern-dependent, direction-independent weights `ϑ_e (F_e + Σ G_{e,e'} ϑ_e')`.
///
/// With these, the EARV for any direction costs one pass over the elements.
#[derive(Debug, Clone)]
pub struct PatternResponse {
    antennas: usize,
    weighted: Vec<C64>,
}

impl PatternResponse {
    pub fn new(couplings: &ReflectionCouplings, pattern: &ReflectionPattern) -> Result<Self> {
        couplings.check_pattern(pattern)?;
        let m = couplings.antennas;
        let theta = pattern.coefficients();
        let n = theta.len();
        let mut weighted = vec![C64::new(0.0, 0.0); n * m];
        for e in 0..n {
            let w = &mut weighted[e * m..(e + 1) * m];
            w.copy_from_slice(couplings.single(e));
            let row = &couplings.double[e * n * m..(e + 1) * n * m];
            for (e2, t2) in theta.iter().enumerate() {
                for (acc, g) in w.iter_mut().zip(&row[e2 * m..(e2 + 1) * m]) {
                    *acc += g * t2;
                }
            }
            for acc in w.iter_mut() {
                *acc *= theta[e];
            }
        }
        Ok(Self { antennas: m, weighted })
    }

    pub fn weighted(&self, e: usize) -> &[C64] {
        &self.weighted[e * self.antennas..(e + 1) * self.antennas]
    }
}

/// How the array responds to arrivals: with a reflection pattern applied,
/// or with the surfaces absent.
#[derive(Debug, Clone)]
pub enum Responder {
    DirectOnly,
    Pattern(PatternResponse),
}

impl Responder {
    pub fn with_pattern(couplings: &ReflectionCouplings, pattern: &ReflectionPattern) -> Result<Self> {
        Ok(Responder::Pattern(PatternResponse::new(couplings, pattern)?))
    }

    /// EARV for `dir`.
    pub fn earv(&self, couplings: &ReflectionCouplings, dir: &Direction) -> Vec<C64> {
        let mut h = couplings.direct(dir);
        if let Responder::Pattern(p) = self {
            let s = couplings.incidence(dir);
            accumulate_reflections(&mut h, &s, p);
        }
        h
    }

    /// Effective channel for a precomputed multipath footprint.
    pub fn effective(&self, footprint: &ChannelFootprint) -> Vec<C64> {
        let mut h = footprint.direct.clone();
        if let Responder::Pattern(p) = self {
            accumulate_reflections(&mut h, &footprint.elements, p);
        }
        h
    }
}

fn accumulate_reflections(h: &mut [C64], weights: &[C64], p: &PatternResponse) {
    let m = p.antennas;
    for (e, s) in weights.iter().enumerate() {
        if *s == C64::new(0.0, 0.0) {
            continue;
        }
        for (acc, w) in h.iter_mut().zip(&p.weighted[e * m..(e + 1) * m]) {
            *acc += s * w;
        }
    }
}

/// One propagation path: complex gain and arrival direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub coefficient: C64,
    pub direction: Direction,
}

/// Multipath parameters of one user. Path 0 is the LoS path.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Linear Rician factor; infinity means LoS only.
    pub kappa: f64,
    pub paths: Vec<PathComponent>,
}

/// Pattern-independent summary of a realization: `Σ a_ψ h_d(ψ)` and, per
/// element, `Σ a_ψ chi exp(i k u_ψ·p_e)`.
#[derive(Debug, Clone)]
pub struct ChannelFootprint {
    pub direct: Vec<C64>,
    pub elements: Vec<C64>,
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws a Rician multipath channel for a user seen along `user_dir`.
///
/// NLoS paths get `|a_1| / sqrt(κ(Ψ-1))` times a standard complex Gaussian
/// and uniform arrival angles over the coverage area.
pub fn draw_rician_channel<R: Rng + ?Sized>(
    user_dir: &Direction,
    kappa: f64,
    path_count: usize,
    cfg: &RadomeConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("Rician factor must be positive, got {kappa}")));
    }
    if path_count == 0 {
        return Err(Error::InvalidArgument("at least one path is required".into()));
    }
    let a1 = los_coefficient(user_dir.elevation, cfg)?;
    let mut paths = vec![PathComponent {
        coefficient: a1,
        direction: *user_dir,
    }];
    if kappa.is_infinite() {
        return Ok(ChannelRealization { kappa, paths });
    }
    if path_count < 2 {
        return Err(Error::InvalidArgument(
            "a finite Rician factor needs at least two paths".into(),
        ));
    }
    let scale = a1.norm() / (kappa * (path_count - 1) as f64).sqrt();
    for _ in 1..path_count {
        let coefficient = complex_normal(rng) * scale;
        let direction = Direction::new(
            rng.random_range(0.0..=cfg.max_elevation),
            rng.random_range(0.0..2.0 * PI),
        )?;
        paths.push(PathComponent {
            coefficient,
            direction,
        });
    }
    Ok(ChannelRealization { kappa, paths })
}

impl ChannelRealization {
    pub fn footprint(&self, couplings: &ReflectionCouplings) -> ChannelFootprint {
        let mut direct = vec![C64::new(0.0, 0.0); couplings.antennas()];
        let mut elements = vec![C64::new(0.0, 0.0); couplings.elements()];
        for path in &self.paths {
            for (acc, v) in direct.iter_mut().zip(couplings.direct(&path.direction)) {
                *acc += path.coefficient * v;
            }
            for (acc, v) in elements.iter_mut().zip(couplings.incidence(&path.direction)) {
                *acc += path.coefficient * v;
            }
        }
        ChannelFootprint { direct, elements }
    }

    /// `Σ_ψ a_ψ h(θ_ψ, φ_ψ, Θ)` evaluated path by path.
    pub fn effective_channel(
        &self,
        couplings: &ReflectionCouplings,
        pattern: &ReflectionPattern,
    ) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); couplings.antennas()];
        for path in &self.paths {
            let h = earv(pattern, &ArrayResponse::evaluate(&path.direction, couplings))?;
            for (acc, v) in out.iter_mut().zip(h) {
                *acc += path.coefficient * v;
            }
        }
        Ok(out)
    }

    /// `Σ_{ψ≥2} |a_ψ|² / |a_1|²`.
    pub fn nlos_to_los_ratio(&self) -> f64 {
        let los = self.paths[0].coefficient.norm_sqr();
        self.paths[1..].iter().map(|p| p.coefficient.norm_sqr()).sum::<f64>() / los
    }
}
