//! Radome coordinate system and element placement.
//!
//! The origin sits at the centre of the antenna array, which lies in the
//! `z = 0` plane facing the ground (negative `z`). The four reflecting
//! surfaces occupy the side faces of the cuboid radome:
//!
//! | IRS | face           | inward normal | horizontal axis |
//! |-----|----------------|---------------|-----------------|
//! | 1   | `x = -d_l / 2` | `+x`          | `y` (width)     |
//! | 2   | `x = +d_l / 2` | `-x`          | `y` (width)     |
//! | 3   | `y = -d_w / 2` | `+y`          | `x` (length)    |
//! | 4   | `y = +d_w / 2` | `-y`          | `x` (length)    |
//!
//! Elements sit at face-cell centres. Rows fill from the top of the face
//! (`z = -d_I / 2`) downward and columns are centred on the face.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of reflecting surfaces in the radome.
pub const IRS_COUNT: usize = 4;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Floors tolerate this much round-off, so `0.25 / 0.025` counts as 10.
const FLOOR_SLACK: f64 = 1e-9;

pub type Point3 = [f64; 3];

/// Physical parameters of the radome. Keys follow the usual symbol names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadomeConfig {
    /// Carrier wavelength (m).
    #[serde(rename = "lambda")]
    pub wavelength: f64,
    #[serde(rename = "d_l")]
    pub length: f64,
    #[serde(rename = "d_w")]
    pub width: f64,
    #[serde(rename = "d_t")]
    pub thickness: f64,
    #[serde(rename = "M_x")]
    pub antennas_x: usize,
    #[serde(rename = "M_y")]
    pub antennas_y: usize,
    #[serde(rename = "d_A")]
    pub antenna_spacing: f64,
    #[serde(rename = "d_I")]
    pub element_spacing: f64,
    /// Side of the square element aperture. Must equal `d_I` when given.
    #[serde(rename = "sqrt_A", default, skip_serializing_if = "Option::is_none")]
    pub element_aperture_side: Option<f64>,
    #[serde(rename = "theta_max")]
    pub max_elevation: f64,
    #[serde(rename = "H_AR")]
    pub mount_height: f64,
    /// Boresight antenna power gain (2 for a half-isotropic pattern).
    #[serde(rename = "G_A")]
    pub antenna_gain: f64,
}

impl Default for RadomeConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl RadomeConfig {
    /// The 6 GHz ceiling-mount setup used as the default.
    pub fn standard() -> Self {
        let wavelength = SPEED_OF_LIGHT / 6.0e9;
        Self {
            wavelength,
            length: 5.0 * wavelength,
            width: 5.0 * wavelength,
            thickness: wavelength / 2.0,
            antennas_x: 2,
            antennas_y: 2,
            antenna_spacing: wavelength / 2.0,
            element_spacing: wavelength / 2.0,
            element_aperture_side: None,
            max_elevation: 4.0 * std::f64::consts::PI / 9.0,
            mount_height: 5.0,
            antenna_gain: 2.0,
        }
    }

    pub fn antenna_count(&self) -> usize {
        self.antennas_x * self.antennas_y
    }

    /// Element aperture area `A = d_I^2`.
    pub fn element_aperture(&self) -> f64 {
        self.element_spacing * self.element_spacing
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.wavelength),
            ("d_l", self.length),
            ("d_w", self.width),
            ("d_t", self.thickness),
            ("d_A", self.antenna_spacing),
            ("d_I", self.element_spacing),
            ("H_AR", self.mount_height),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(field, format!("must be a positive length, got {value}")));
            }
        }
        if self.antennas_x == 0 {
            return Err(Error::config("M_x", "must be at least 1"));
        }
        if self.antennas_y == 0 {
            return Err(Error::config("M_y", "must be at least 1"));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.max_elevation) {
            return Err(Error::config(
                "theta_max",
                format!("must lie in [0, pi/2], got {}", self.max_elevation),
            ));
        }
        if !(self.antenna_gain.is_finite() && self.antenna_gain >= 0.0) {
            return Err(Error::config("G_A", "must be a non-negative power gain"));
        }
        if let Some(side) = self.element_aperture_side {
            if (side - self.element_spacing).abs() > 1e-12 * self.element_spacing {
                return Err(Error::config(
                    "sqrt_A",
                    format!("element aperture side must equal d_I = {}", self.element_spacing),
                ));
            }
        }
        Ok(())
    }

    /// Stable content hash of the configuration (hex SHA-256).
    pub fn content_hash(&self) -> String {
        hash_json(self)
    }
}

pub(crate) fn hash_json<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("plain data serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Per-IRS element limits `(N_{j,1,max}, N_{j,2,max})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeployLimits {
    /// Along the horizontal axis of the face.
    pub horizontal: usize,
    /// Along `z`.
    pub vertical: usize,
}

impl DeployLimits {
    pub fn total(&self) -> usize {
        self.horizontal * self.vertical
    }
}

fn slack_floor(x: f64) -> usize {
    if x.is_infinite() {
        return usize::MAX;
    }
    (x + FLOOR_SLACK).floor().max(0.0) as usize
}

/// Largest element grid each face can hold without the opposite face
/// obstructing arrivals at `theta_max`.
pub fn max_deployable_elements(cfg: &RadomeConfig) -> [DeployLimits; IRS_COUNT] {
    let di = cfg.element_spacing;
    let across_width = slack_floor(cfg.width / di);
    let across_length = slack_floor(cfg.length / di);

    let tan = cfg.max_elevation.tan();
    let mut vertical = cfg.thickness / di;
    // theta_max = 0 leaves the obstruction terms unbounded.
    if tan > 0.0 {
        vertical = vertical
            .min(cfg.length / (di * tan))
            .min(cfg.width / (di * tan));
    }
    let vertical = slack_floor(vertical);

    [
        DeployLimits { horizontal: across_width, vertical },
        DeployLimits { horizontal: across_width, vertical },
        DeployLimits { horizontal: across_length, vertical },
        DeployLimits { horizontal: across_length, vertical },
    ]
}

/// Layout of one reflecting surface.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsLayout {
    /// Inward unit normal.
    pub normal: Point3,
    /// Columns along the horizontal axis (`N_{j,1}`).
    pub columns: usize,
    /// Rows along `z` (`N_{j,2}`).
    pub rows: usize,
    /// Element centres, indexed `column * rows + row`.
    pub elements: Vec<Point3>,
}

impl IrsLayout {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Antenna and element positions derived from a [`RadomeConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadomeGeometry {
    pub config: RadomeConfig,
    /// Antenna `(m_x, m_y)` is stored at index `m_x * M_y + m_y`, matching
    /// the Kronecker ordering of the direct response.
    pub antennas: Vec<Point3>,
    pub irs: [IrsLayout; IRS_COUNT],
}

const FACE_NORMALS: [Point3; IRS_COUNT] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
];

/// Places antennas and reflecting elements.
///
/// `requested[j]` elements go on IRS `j`; zero removes that surface. Each
/// non-empty surface uses the full deployable row count and splits the
/// rest into columns.
pub fn build_geometry(cfg: &RadomeConfig, requested: [usize; IRS_COUNT]) -> Result<RadomeGeometry> {
    cfg.validate()?;
    let limits = max_deployable_elements(cfg);

    let (mx, my) = (cfg.antennas_x, cfg.antennas_y);
    let da = cfg.antenna_spacing;
    let mut antennas = Vec::with_capacity(mx * my);
    for ix in 0..mx {
        for iy in 0..my {
            antennas.push([
                (ix as f64 - (mx as f64 - 1.0) / 2.0) * da,
                (iy as f64 - (my as f64 - 1.0) / 2.0) * da,
                0.0,
            ]);
        }
    }

    let di = cfg.element_spacing;
    let half_l = cfg.length / 2.0;
    let half_w = cfg.width / 2.0;
    let mut layouts = Vec::with_capacity(IRS_COUNT);
    for (j, (&count, lim)) in requested.iter().zip(limits.iter()).enumerate() {
        let field = format!("N[{}]", j + 1);
        if count == 0 {
            layouts.push(IrsLayout {
                normal: FACE_NORMALS[j],
                columns: 0,
                rows: 0,
                elements: Vec::new(),
            });
            continue;
        }
        if lim.vertical == 0 || lim.horizontal == 0 {
            return Err(Error::config(field, "the radome has no room for elements on this face"));
        }
        if count > lim.total() {
            return Err(Error::config(
                field,
                format!(
                    "{count} elements exceed the deployable maximum {} x {}",
                    lim.horizontal, lim.vertical
                ),
            ));
        }
        if count % lim.vertical != 0 {
            return Err(Error::config(
                field,
                format!("{count} elements do not fill whole columns of {} rows", lim.vertical),
            ));
        }
        let rows = lim.vertical;
        let columns = count / rows;
        let mut elements = Vec::with_capacity(count);
        for col in 0..columns {
            let along = (col as f64 - (columns as f64 - 1.0) / 2.0) * di;
            for row in 0..rows {
                let z = -di / 2.0 - row as f64 * di;
                let p = match j {
                    0 => [-half_l, along, z],
                    1 => [half_l, along, z],
                    2 => [along, -half_w, z],
                    _ => [along, half_w, z],
                };
                elements.push(p);
            }
        }
        layouts.push(IrsLayout {
            normal: FACE_NORMALS[j],
            columns,
            rows,
            elements,
        });
    }

    let irs: [IrsLayout; IRS_COUNT] = layouts.try_into().expect("four layouts");
    Ok(RadomeGeometry {
        config: cfg.clone(),
        antennas,
        irs,
    })
}

impl RadomeGeometry {
    /// Geometry with the deployable maximum on every face.
    pub fn full(cfg: &RadomeConfig) -> Result<Self> {
        let limits = max_deployable_elements(cfg);
        build_geometry(cfg, limits.map(|l| l.total()))
    }

    pub fn element_counts(&self) -> [usize; IRS_COUNT] {
        [0, 1, 2, 3].map(|j| self.irs[j].len())
    }

    pub fn total_elements(&self) -> usize {
        self.irs.iter().map(IrsLayout::len).sum()
    }

    pub fn antenna_count(&self) -> usize {
        self.antennas.len()
    }

    /// Offsets of each IRS in a flattened element list; entry 4 is the total.
    pub fn offsets(&self) -> [usize; IRS_COUNT + 1] {
        let mut out = [0; IRS_COUNT + 1];
        for j in 0..IRS_COUNT {
            out[j + 1] = out[j] + self.irs[j].len();
        }
        out
    }

    /// Same radome with some surfaces emptied.
    pub fn without_irs(&self, removed: &[usize]) -> Self {
        let mut out = self.clone();
        for &j in removed {
            out.irs[j].elements.clear();
            out.irs[j].columns = 0;
            out.irs[j].rows = 0;
        }
        out
    }

    /// Hash identifying the configuration together with the element counts.
    pub fn content_hash(&self) -> String {
        hash_json(&(&self.config, self.element_counts()))
    }
}
