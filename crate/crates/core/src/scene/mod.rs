//! Site-specific scene description and deterministic channel synthesis.
//!
//! A 2D image-method tracer provides the BS→user, BS→port and port→user
//! field responses; an induced-EMF model supplies the port impedance matrix.
//! Externally computed channels can be ingested through the channel file
//! format instead (see [`crate::channel::ChannelComponents`]).

pub mod geometry;
pub mod impedance;
pub mod trace;

use std::path::Path as FsPath;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use geometry::{Point, Wall};
pub use impedance::{half_wave_mutual_impedance, synthesize_mutual_impedance};
pub use trace::{path_gain, trace_paths, Path, PathList};

use crate::channel::ChannelComponents;
use crate::error::{Error, Result};
use crate::{CMatrix, SPEED_OF_LIGHT};

/// Carrier frequency of the default experiment.
pub const DEFAULT_FREQUENCY_HZ: f64 = 5.8e9;

fn default_max_order() -> usize {
    2
}

fn default_direction() -> Point {
    Point::new(0.0, 1.0)
}

fn default_unloaded_reflection() -> Complex64 {
    Complex64::from_polar(0.6, std::f64::consts::PI)
}

fn default_backing_reflection() -> Complex64 {
    Complex64::new(-0.5, 0.0)
}

fn default_self_impedance() -> Complex64 {
    Complex64::new(73.1, 42.5)
}

fn default_port_coupling() -> f64 {
    DEFAULT_PORT_COUPLING_OHMS
}

/// Scale (ohms) applied to the port→user responses so that the loaded
/// scattering term `G·Z⁻¹·H_0` is dimensionless. Each port stands for a
/// whole column of elements, so the value sits well above a single dipole's
/// mutual impedance while keeping the unloaded (C → 0) leakage below 1e-6.
pub const DEFAULT_PORT_COUPLING_OHMS: f64 = 700.0;

/// A linear RIS panel: `n_ports` load ports spaced uniformly along `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisPanel {
    pub origin: Point,
    pub n_ports: usize,
    /// Port pitch in meters.
    pub spacing: f64,
    #[serde(default = "default_direction")]
    pub direction: Point,
    /// Specular coefficient of the unloaded panel, used inside `H_u`.
    #[serde(default = "default_unloaded_reflection", with = "crate::complex_pair")]
    pub unloaded_reflection: Complex64,
    /// Coefficient of the bare wall that replaces the panel in the no-RIS baseline.
    #[serde(default = "default_backing_reflection", with = "crate::complex_pair")]
    pub backing_reflection: Complex64,
    #[serde(default = "default_self_impedance", with = "crate::complex_pair")]
    pub self_impedance_ohms: Complex64,
    #[serde(default = "default_port_coupling")]
    pub port_coupling_ohms: f64,
}

impl RisPanel {
    fn unit_direction(&self) -> Point {
        self.direction * (1.0 / self.direction.norm())
    }

    /// Port positions, centered on `origin`.
    pub fn ports(&self) -> Vec<Point> {
        let d = self.unit_direction();
        let mid = (self.n_ports as f64 - 1.0) / 2.0;
        (0..self.n_ports)
            .map(|i| self.origin + d * ((i as f64 - mid) * self.spacing))
            .collect()
    }

    /// The panel as a reflecting segment with coefficient `reflection`.
    pub fn segment(&self, reflection: Complex64) -> Wall {
        let half = self.unit_direction() * (self.n_ports as f64 * self.spacing / 2.0);
        Wall::new(self.origin - half, self.origin + half, reflection)
    }
}

/// Rectangular grid of observation points for gain maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationGrid {
    pub origin: Point,
    /// `[dx, dy]` in meters.
    pub spacing: [f64; 2],
    /// `[nx, ny]`.
    pub counts: [usize; 2],
}

impl ObservationGrid {
    /// Points in row-major order (x fastest).
    pub fn points(&self) -> Vec<Point> {
        let [nx, ny] = self.counts;
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                out.push(Point::new(
                    self.origin.x + ix as f64 * self.spacing[0],
                    self.origin.y + iy as f64 * self.spacing[1],
                ));
            }
        }
        out
    }
}

/// Geometry and material description of a site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub walls: Vec<Wall>,
    #[serde(rename = "bs")]
    pub bs_elements: Vec<Point>,
    pub ris: RisPanel,
    #[serde(rename = "users")]
    pub user_positions: Vec<Point>,
    #[serde(default)]
    pub grid: Option<ObservationGrid>,
    #[serde(rename = "frequency_hz")]
    pub frequency: f64,
    #[serde(rename = "max_order", default = "default_max_order")]
    pub max_reflection_order: usize,
}

impl SceneDescription {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn ris_ports(&self) -> Vec<Point> {
        self.ris.ports()
    }

    /// Checks the scene invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0) || !self.frequency.is_finite() {
            return Err(Error::InvalidInput(format!(
                "frequency must be positive, got {}",
                self.frequency
            )));
        }
        if self.bs_elements.is_empty() {
            return Err(Error::InvalidInput("scene needs at least one BS element".into()));
        }
        if self.user_positions.is_empty() {
            return Err(Error::InvalidInput("scene needs at least one user".into()));
        }
        if self.ris.n_ports == 0 {
            return Err(Error::InvalidInput("RIS needs at least one port".into()));
        }
        if !(self.ris.spacing > 0.0) || !self.ris.spacing.is_finite() {
            return Err(Error::InvalidInput("RIS spacing must be positive".into()));
        }
        if !self.ris.direction.is_finite() || self.ris.direction.norm() == 0.0 || !self.ris.origin.is_finite() {
            return Err(Error::InvalidInput(
                "RIS origin/direction must be finite and nonzero".into(),
            ));
        }
        if self.max_reflection_order > trace::MAX_SUPPORTED_ORDER {
            return Err(Error::InvalidInput(format!(
                "max_order {} exceeds {}",
                self.max_reflection_order,
                trace::MAX_SUPPORTED_ORDER
            )));
        }
        let all_points = self.bs_elements.iter().chain(&self.user_positions);
        for p in all_points {
            if !p.is_finite() {
                return Err(Error::InvalidInput("non-finite position".into()));
            }
        }
        for (i, w) in self.walls.iter().enumerate() {
            if !w.start.is_finite() || !w.end.is_finite() || w.length() <= geometry::GEOMETRY_EPS {
                return Err(Error::Geometry(format!("wall {i} is degenerate")));
            }
            if !(w.reflection.norm() <= 1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "wall {i} reflection magnitude {} exceeds 1",
                    w.reflection.norm()
                )));
            }
        }
        for c in [self.ris.unloaded_reflection, self.ris.backing_reflection] {
            if !(c.norm() <= 1.0 + 1e-12) {
                return Err(Error::InvalidInput("RIS reflection magnitude exceeds 1".into()));
            }
        }
        if let Some(g) = &self.grid {
            if g.spacing.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || !g.origin.is_finite() {
                return Err(Error::InvalidInput("invalid observation grid".into()));
            }
        }
        Ok(())
    }

    /// The same scene with users moved to `users`.
    pub fn with_users(&self, users: Vec<Point>) -> SceneDescription {
        SceneDescription {
            user_positions: users,
            ..self.clone()
        }
    }

    fn walls_with(&self, extra: Option<Wall>) -> Vec<Wall> {
        let mut walls = self.walls.clone();
        walls.extend(extra);
        walls
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: SceneDescription = serde_json::from_str(&text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        crate::io::write_atomic(path.as_ref(), text.as_bytes())
    }

    /// The corridor scene of the reference experiment.
    ///
    /// Three λ/2-spaced BS elements around (6, −3) m in a horizontal corridor,
    /// three users in the perpendicular stem of a T junction, and a 20-port
    /// panel centered at the origin on the stem's left wall. Users are out of
    /// the BS's line of sight; the panel sees both.
    pub fn default_experiment() -> SceneDescription {
        let frequency = DEFAULT_FREQUENCY_HZ;
        let lambda = SPEED_OF_LIGHT / frequency;
        let n_ports = 20;
        let spacing = lambda / 2.0;
        let wall = Complex64::new(-0.5, 0.0);
        let half_panel = n_ports as f64 * spacing / 2.0;
        let seg = |a: [f64; 2], b: [f64; 2]| Wall::new(a.into(), b.into(), wall);
        let walls = vec![
            // horizontal corridor
            seg([-3.0, -4.5], [10.0, -4.5]),
            seg([-3.0, -1.5], [0.0, -1.5]),
            seg([3.5, -1.5], [10.0, -1.5]),
            seg([-3.0, -4.5], [-3.0, -1.5]),
            seg([10.0, -4.5], [10.0, -1.5]),
            // stem, left wall split around the panel
            seg([0.0, -1.5], [0.0, -half_panel]),
            seg([0.0, half_panel], [0.0, 6.0]),
            seg([3.5, -1.5], [3.5, 6.0]),
            seg([0.0, 6.0], [3.5, 6.0]),
        ];
        let bs_center = Point::new(6.0, -3.0);
        let bs_elements = (0..3)
            .map(|i| bs_center + Point::new((i as f64 - 1.0) * spacing, 0.0))
            .collect();
        SceneDescription {
            walls,
            bs_elements,
            ris: RisPanel {
                origin: Point::new(0.0, 0.0),
                n_ports,
                spacing,
                direction: default_direction(),
                unloaded_reflection: default_unloaded_reflection(),
                backing_reflection: default_backing_reflection(),
                self_impedance_ohms: default_self_impedance(),
                port_coupling_ohms: DEFAULT_PORT_COUPLING_OHMS,
            },
            user_positions: vec![Point::new(1.3, 3.13), Point::new(1.8, 2.38), Point::new(2.3, 1.63)],
            grid: Some(ObservationGrid {
                origin: Point::new(0.5, 0.5),
                spacing: [0.05, 0.05],
                counts: [51, 61],
            }),
            frequency,
            max_reflection_order: default_max_order(),
        }
    }
}

/// Coherent field sum for every (row point, column point) pair.
fn link_matrix(
    walls: &[Wall],
    rows: &[Point],
    cols: &[Point],
    order: usize,
    freq: f64,
    scale: f64,
) -> Result<(CMatrix, usize)> {
    let entries: Vec<Result<(Complex64, bool)>> = rows
        .par_iter()
        .flat_map_iter(|&r| {
            cols.iter().map(move |&c| {
                let paths = trace_paths(walls, c, r, order)?;
                Ok((paths.coherent_gain(freq) * scale, paths.is_empty()))
            })
        })
        .collect();
    let mut empty = 0;
    let mut data = Vec::with_capacity(entries.len());
    for e in entries {
        let (g, was_empty) = e?;
        empty += was_empty as usize;
        data.push(g);
    }
    Ok((DMatrix::from_row_slice(rows.len(), cols.len(), &data), empty))
}

/// BS→point channel with the unloaded panel acting as a specular reflector.
pub fn direct_channel(scene: &SceneDescription, points: &[Point]) -> Result<CMatrix> {
    let walls = scene.walls_with(Some(scene.ris.segment(scene.ris.unloaded_reflection)));
    let (m, _) = link_matrix(
        &walls,
        points,
        &scene.bs_elements,
        scene.max_reflection_order,
        scene.frequency,
        1.0,
    )?;
    Ok(m)
}

/// BS→point channel with the panel replaced by a plain wall (no RIS deployed).
pub fn baseline_channel(scene: &SceneDescription) -> Result<CMatrix> {
    scene.validate()?;
    let walls = scene.walls_with(Some(scene.ris.segment(scene.ris.backing_reflection)));
    let (m, _) = link_matrix(
        &walls,
        &scene.user_positions,
        &scene.bs_elements,
        scene.max_reflection_order,
        scene.frequency,
        1.0,
    )?;
    Ok(m)
}

/// Port→point responses, scaled by the port coupling.
pub fn port_channel(scene: &SceneDescription, points: &[Point]) -> Result<CMatrix> {
    let (m, _) = link_matrix(
        &scene.walls,
        points,
        &scene.ris_ports(),
        scene.max_reflection_order,
        scene.frequency,
        scene.ris.port_coupling_ohms,
    )?;
    Ok(m)
}

/// Builds `H_u`, `H_0`, `G_l` and `Z_ll` for the scene.
///
/// `H_u` includes specular scattering off the unloaded panel; the port links
/// `H_0` and `G_l` are traced against the walls alone.
pub fn synthesize_components(scene: &SceneDescription) -> Result<ChannelComponents> {
    scene.validate()?;
    let ports = scene.ris_ports();
    let order = scene.max_reflection_order;
    let f = scene.frequency;
    let hu_walls = scene.walls_with(Some(scene.ris.segment(scene.ris.unloaded_reflection)));
    let (h_u, e_u) = link_matrix(&hu_walls, &scene.user_positions, &scene.bs_elements, order, f, 1.0)?;
    let (h_0, e_0) = link_matrix(&scene.walls, &ports, &scene.bs_elements, order, f, 1.0)?;
    let (g_l, e_g) = link_matrix(
        &scene.walls,
        &scene.user_positions,
        &ports,
        order,
        f,
        scene.ris.port_coupling_ohms,
    )?;
    let total = h_u.len() + h_0.len() + g_l.len();
    if e_u + e_0 + e_g == total {
        log::warn!("scene produced no propagation paths at all; channel components are zero");
    }
    let z_ll = synthesize_mutual_impedance(ports.len(), scene.ris.spacing, f, scene.ris.self_impedance_ohms)?;
    ChannelComponents::new(h_u, h_0, g_l, z_ll, f)
}
