//! Image-method specular ray tracing in the plane.
//!
//! Every sequence of walls up to the requested reflection order produces one
//! candidate image source. A candidate becomes a path only if the unfolded
//! ray actually hits each wall inside its segment, in order, and no other
//! wall blocks any of the legs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{Point, Wall, GEOMETRY_EPS};
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Hard cap on the reflection order accepted by [`trace_paths`].
pub const MAX_SUPPORTED_ORDER: usize = 5;

/// One specular propagation path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Unfolded length in meters.
    pub length: f64,
    /// Product of wall reflection coefficients along the path.
    #[serde(with = "crate::complex_pair")]
    pub product: Complex64,
    pub order: usize,
    /// Indices into the wall list, in bounce order.
    pub walls: Vec<usize>,
}

/// All paths between one source and one destination, sorted by `(order, length)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathList {
    pub paths: Vec<Path>,
}

impl PathList {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    /// Coherent sum of all path gains at `frequency`.
    pub fn coherent_gain(&self, frequency: f64) -> Complex64 {
        self.paths
            .iter()
            .map(|p| gain_unchecked(p.length, p.product, frequency))
            .sum()
    }
}

fn wavenumber(frequency: f64) -> f64 {
    2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT
}

fn gain_unchecked(length: f64, product: Complex64, frequency: f64) -> Complex64 {
    let k = wavenumber(frequency);
    // free-space amplitude λ/(4πd) = 1/(2kd)
    product * Complex64::from_polar(1.0 / (2.0 * k * length), -k * length)
}

/// Field contribution `product · λ/(4πd) · e^{-jkd}` of a single path.
pub fn path_gain(path: &Path, frequency: f64) -> Result<Complex64> {
    if !(path.length > 0.0) || !path.length.is_finite() {
        return Err(Error::InvalidInput(format!(
            "path length must be positive, got {}",
            path.length
        )));
    }
    Ok(gain_unchecked(path.length, path.product, frequency))
}

/// Enumerates all specular paths from `src` to `dst` with at most `max_order` bounces.
pub fn trace_paths(walls: &[Wall], src: Point, dst: Point, max_order: usize) -> Result<PathList> {
    if max_order > MAX_SUPPORTED_ORDER {
        return Err(Error::InvalidInput(format!(
            "max reflection order {max_order} exceeds {MAX_SUPPORTED_ORDER}"
        )));
    }
    if !src.is_finite() || !dst.is_finite() {
        return Err(Error::InvalidInput("non-finite endpoint".into()));
    }
    if src.distance(dst) <= GEOMETRY_EPS {
        return Err(Error::Geometry("source and destination coincide".into()));
    }
    for (i, w) in walls.iter().enumerate() {
        for (name, p) in [("source", src), ("destination", dst)] {
            if w.distance_to(p) <= GEOMETRY_EPS {
                return Err(Error::Geometry(format!("{name} ({}, {}) lies on wall {i}", p.x, p.y)));
            }
        }
    }

    let tracer = Tracer { walls, src, dst };
    let mut paths = Vec::new();
    if tracer.leg_clear(src, dst, None, None) {
        paths.push(Path {
            length: src.distance(dst),
            product: Complex64::new(1.0, 0.0),
            order: 0,
            walls: Vec::new(),
        });
    }
    let mut images = vec![src];
    let mut seq = Vec::with_capacity(max_order);
    tracer.extend(&mut images, &mut seq, max_order, &mut paths);

    paths.sort_by(|a, b| {
        a.order
            .cmp(&b.order)
            .then(a.length.total_cmp(&b.length))
            .then_with(|| a.walls.cmp(&b.walls))
    });
    Ok(PathList { paths })
}

struct Tracer<'a> {
    walls: &'a [Wall],
    src: Point,
    dst: Point,
}

impl Tracer<'_> {
    fn extend(&self, images: &mut Vec<Point>, seq: &mut Vec<usize>, max_order: usize, out: &mut Vec<Path>) {
        if seq.len() == max_order {
            return;
        }
        let last_image = *images.last().expect("image stack starts with source");
        for (wi, wall) in self.walls.iter().enumerate() {
            if seq.last() == Some(&wi) {
                continue;
            }
            // An image on the wall's own line has no well-defined reflection.
            if wall.signed_distance(last_image).abs() <= GEOMETRY_EPS {
                continue;
            }
            images.push(wall.mirror(last_image));
            seq.push(wi);
            if let Some(path) = self.validate(images, seq) {
                out.push(path);
            }
            self.extend(images, seq, max_order, out);
            seq.pop();
            images.pop();
        }
    }

    /// Unfolds the candidate backwards from the destination.
    fn validate(&self, images: &[Point], seq: &[usize]) -> Option<Path> {
        let order = seq.len();
        let mut target = self.dst;
        let mut hits = vec![Point::new(0.0, 0.0); order];
        for r in (0..order).rev() {
            let wall = &self.walls[seq[r]];
            let image = images[r + 1];
            let (t, hit) = wall.intersect(image, target)?;
            // Reflection point strictly between image and target.
            let leg = image.distance(target);
            if t * leg <= GEOMETRY_EPS || (1.0 - t) * leg <= GEOMETRY_EPS {
                return None;
            }
            hits[r] = hit;
            target = hit;
        }
        // Source → first hit, then hit → hit, then last hit → destination.
        let mut prev = self.src;
        let mut prev_wall = None;
        let mut product = Complex64::new(1.0, 0.0);
        for r in 0..order {
            if !self.leg_clear(prev, hits[r], prev_wall, Some(seq[r])) {
                return None;
            }
            product *= self.walls[seq[r]].reflection;
            prev = hits[r];
            prev_wall = Some(seq[r]);
        }
        if !self.leg_clear(prev, self.dst, prev_wall, None) {
            return None;
        }
        Some(Path {
            length: images[order].distance(self.dst),
            product,
            order,
            walls: seq.to_vec(),
        })
    }

    /// True if no wall other than the leg's own endpoint walls cuts the open segment.
    fn leg_clear(&self, a: Point, b: Point, wall_a: Option<usize>, wall_b: Option<usize>) -> bool {
        let len = a.distance(b);
        self.walls.iter().enumerate().all(|(i, w)| {
            if Some(i) == wall_a || Some(i) == wall_b {
                return true;
            }
            match w.intersect(a, b) {
                Some((t, _)) => t * len <= GEOMETRY_EPS || (1.0 - t) * len <= GEOMETRY_EPS,
                None => true,
            }
        })
    }
}
