//! Deterministic placement of base stations and receivers in a circular
//! region.
//!
//! Picocells and receivers are laid out on a sunflower-head spiral: location
//! `i` of `n` sits at polar radius `r_i = sqrt(i/n)·R` and angle `θ_i = i·δ`,
//! with `δ = (√5−1)²·π/2` the golden angle. The three macrocells share the
//! region center, each serving one fixed 120° sector. A subsequent rotation
//! of the spiral makes every sector hold the same number of points.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of macrocells; one per 120° sector.
pub const N_MACRO: usize = 3;

/// Sector boundaries in degrees. Sector 0 is the upper right `[-30°, 90°)`,
/// sector 1 the upper left `[90°, 210°)`, sector 2 the bottom `[210°, 330°)`.
/// Intervals are half-open with a boundary angle belonging to the
/// higher-indexed sector (330° wraps into sector 0).
pub const SECTOR_BOUNDS_DEG: [f64; 3] = [90.0, 210.0, 330.0];

/// Step used when scanning for a sector-balancing rotation, in degrees.
const ROTATION_STEP_DEG: f64 = 0.01;

/// The golden (Fibonacci) angle `(√5−1)²·π/2 ≈ 137.5078°`, in radians.
#[inline]
pub fn golden_angle_rad() -> f64 {
    (5f64.sqrt() - 1.0).powi(2) * PI / 2.0
}

/// A point in the plane, Cartesian kilometers. Polar form is derived on
/// demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x_km: f64,
    pub y_km: f64,
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x_km: v[0], y_km: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x_km, p.y_km]
    }
}

impl Point {
    pub fn new(x_km: f64, y_km: f64) -> Self {
        Point { x_km, y_km }
    }

    pub fn origin() -> Self {
        Point { x_km: 0.0, y_km: 0.0 }
    }

    pub fn radius_km(&self) -> f64 {
        self.x_km.hypot(self.y_km)
    }

    /// Polar angle in degrees, normalized to `[-30°, 330°)` so that sector
    /// membership is a plain interval test.
    pub fn angle_deg(&self) -> Result<f64> {
        if self.x_km == 0.0 && self.y_km == 0.0 {
            return Err(Error::UndefinedAngle);
        }
        let mut a = self.y_km.atan2(self.x_km).to_degrees();
        while a < -30.0 {
            a += 360.0;
        }
        while a >= 330.0 {
            a -= 360.0;
        }
        Ok(a)
    }

    pub fn distance_km(&self, other: &Point) -> f64 {
        (self.x_km - other.x_km).hypot(self.y_km - other.y_km)
    }

    /// Rotation about the origin by `angle_deg` counterclockwise.
    pub fn rotated_deg(&self, angle_deg: f64) -> Point {
        let (sin, cos) = angle_deg.to_radians().sin_cos();
        Point {
            x_km: self.x_km * cos - self.y_km * sin,
            y_km: self.x_km * sin + self.y_km * cos,
        }
    }
}

/// Index of the sector containing `point`, per [`SECTOR_BOUNDS_DEG`].
pub fn sector_of(point: &Point) -> Result<usize> {
    let a = point.angle_deg()?;
    Ok(if a < SECTOR_BOUNDS_DEG[0] {
        0
    } else if a < SECTOR_BOUNDS_DEG[1] {
        1
    } else {
        2
    })
}

/// Sunflower-head spiral positions `i = 1..=n_loc`; the last point sits
/// exactly on the region boundary.
pub fn sunflower_positions(n_loc: usize, region_radius_km: f64) -> Result<Vec<Point>> {
    if n_loc == 0 {
        return Err(Error::InvalidArgument("sunflower placement needs n_loc >= 1".into()));
    }
    if region_radius_km <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "region radius must be positive, got {region_radius_km}"
        )));
    }
    let delta = golden_angle_rad();
    Ok((1..=n_loc)
        .map(|i| {
            let r = (i as f64 / n_loc as f64).sqrt() * region_radius_km;
            let theta = i as f64 * delta;
            Point::new(r * theta.cos(), r * theta.sin())
        })
        .collect())
}

/// Smallest rotation (scanned in 0.01° steps from 0° upward) after which each
/// sector contains exactly a third of the points. Returns the rotated points
/// and the rotation angle in degrees.
pub fn rotate_for_equal_sectors(points: &[Point]) -> Result<(Vec<Point>, f64)> {
    if points.len() % 3 != 0 {
        return Err(Error::InvalidArgument(format!(
            "sector balancing needs a multiple of 3 points, got {}",
            points.len()
        )));
    }
    if points.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    let steps = (360.0 / ROTATION_STEP_DEG) as usize;
    for step in 0..steps {
        let angle = step as f64 * ROTATION_STEP_DEG;
        let rotated: Vec<Point> = points.iter().map(|p| p.rotated_deg(angle)).collect();
        if sectors_balanced(&rotated)? {
            return Ok((rotated, angle));
        }
    }
    Err(Error::BalancingFailed { count: points.len() })
}

fn sectors_balanced(points: &[Point]) -> Result<bool> {
    let mut counts = [0usize; 3];
    for p in points {
        counts[sector_of(p)?] += 1;
    }
    let third = points.len() / 3;
    Ok(counts.iter().all(|&c| c == third))
}

/// Placement request: a circular region of radius `R`, three macrocells at
/// its center, `n_pico` picocells and `n_receivers` receivers on balanced
/// sunflower spirals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSpec {
    pub region_radius_km: f64,
    pub n_pico: usize,
    pub n_receivers: usize,
}

impl Default for PlacementSpec {
    /// The reference layout: 3 macrocells, 12 picocells and 51 receivers in
    /// a 0.3 km disc.
    fn default() -> Self {
        PlacementSpec { region_radius_km: 0.3, n_pico: 12, n_receivers: 51 }
    }
}

impl PlacementSpec {
    pub fn validate(&self) -> Result<()> {
        if self.region_radius_km <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "region radius must be positive, got {}",
                self.region_radius_km
            )));
        }
        if self.n_receivers == 0 {
            return Err(Error::InvalidArgument("at least one receiver is required".into()));
        }
        if self.n_pico % 3 != 0 || self.n_receivers % 3 != 0 {
            return Err(Error::InvalidArgument(format!(
                "sector balancing needs picocell and receiver counts divisible by 3, got {} and {}",
                self.n_pico, self.n_receivers
            )));
        }
        Ok(())
    }
}

/// A concrete placement. Macrocells are implicit: all three sit at the
/// origin, macrocell `i` serving sector `i`. Picocells and receivers are
/// each balanced by their own rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub region_radius_km: f64,
    pub pico_positions: Vec<Point>,
    pub receiver_positions: Vec<Point>,
    pub pico_rotation_deg: f64,
    pub receiver_rotation_deg: f64,
}

impl Layout {
    /// Position shared by the three macrocells.
    pub fn macro_position(&self) -> Point {
        Point::origin()
    }

    pub fn n_stations(&self) -> usize {
        N_MACRO + self.pico_positions.len()
    }

    /// Checks disc containment and per-sector balance.
    pub fn validate(&self) -> Result<()> {
        let r = self.region_radius_km * (1.0 + 1e-12);
        for p in self.pico_positions.iter().chain(&self.receiver_positions) {
            if p.radius_km() > r {
                return Err(Error::InvalidArgument(format!(
                    "point ({}, {}) lies outside the {} km disc",
                    p.x_km, p.y_km, self.region_radius_km
                )));
            }
        }
        if !sectors_balanced(&self.pico_positions)? {
            return Err(Error::InvalidArgument("picocell sectors are unbalanced".into()));
        }
        if !sectors_balanced(&self.receiver_positions)? {
            return Err(Error::InvalidArgument("receiver sectors are unbalanced".into()));
        }
        Ok(())
    }

    /// Plot-ready rows `kind,x_km,y_km,sector`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "x_km", "y_km", "sector"])?;
        for sector in 0..N_MACRO {
            w.write_record(["macro", "0", "0", &sector.to_string()])?;
        }
        for p in &self.pico_positions {
            let sector = sector_of(p).map_err(std::io::Error::other)?;
            w.write_record([
                "pico",
                &p.x_km.to_string(),
                &p.y_km.to_string(),
                &sector.to_string(),
            ])?;
        }
        for p in &self.receiver_positions {
            let sector = sector_of(p).map_err(std::io::Error::other)?;
            w.write_record([
                "receiver",
                &p.x_km.to_string(),
                &p.y_km.to_string(),
                &sector.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Builds the full layout for `spec`: balanced picocell and receiver
/// spirals, rotated independently of each other.
pub fn build_layout(spec: &PlacementSpec) -> Result<Layout> {
    spec.validate()?;
    let (pico_positions, pico_rotation_deg) = if spec.n_pico == 0 {
        (Vec::new(), 0.0)
    } else {
        let raw = sunflower_positions(spec.n_pico, spec.region_radius_km)?;
        rotate_for_equal_sectors(&raw)?
    };
    let raw = sunflower_positions(spec.n_receivers, spec.region_radius_km)?;
    let (receiver_positions, receiver_rotation_deg) = rotate_for_equal_sectors(&raw)?;
    Ok(Layout {
        region_radius_km: spec.region_radius_km,
        pico_positions,
        receiver_positions,
        pico_rotation_deg,
        receiver_rotation_deg,
    })
}
