use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A point on the fiber facet or the sample plane, in meters.
pub type Point = [f64; 2];

/// Golden angle `π(3 − √5)` used by the Vogel model of the Fermat spiral.
pub fn golden_angle() -> f64 {
    PI * (3.0 - 5f64.sqrt())
}

/// Optical constants shared by every layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optics {
    /// Laser wavelength λ (m).
    pub wavelength: f64,
    /// Distance z from the distal facet to the sample plane (m).
    pub distance: f64,
}

impl Default for Optics {
    fn default() -> Self {
        Self {
            wavelength: 532e-9,
            distance: 1.0,
        }
    }
}

impl Optics {
    pub fn new(wavelength: f64, distance: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(invalid(format!(
                "propagation distance must be positive, got {distance}"
            )));
        }
        Ok(Self {
            wavelength,
            distance,
        })
    }

    /// `λz`, the length scale tying core separations to sample-plane fringes.
    pub fn lambda_z(&self) -> f64 {
        self.wavelength * self.distance
    }

    /// Factor `2π/(λz)` converting a core separation into an angular frequency.
    pub fn frequency_scale(&self) -> f64 {
        2.0 * PI / self.lambda_z()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutKind {
    FermatSpiral,
    IntegerGrid,
    Explicit,
}

/// Positions of the `Q` fiber cores on the distal facet.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreLayout {
    positions: Vec<Point>,
    fiber_diameter: f64,
    optics: Optics,
    kind: LayoutKind,
    /// Lattice spacing, for integer-grid layouts only.
    pitch: Option<f64>,
}

impl CoreLayout {
    /// Builds a layout from explicit positions, validating the invariants:
    /// at least one core, finite and pairwise distinct positions, all inside a
    /// disk of diameter `fiber_diameter` (centered at the origin or at the
    /// bounding-box center).
    ///
    /// When `fiber_diameter` is `None` it is inferred as the diameter of the
    /// smallest disk around the bounding-box center holding every core.
    pub fn explicit(
        positions: Vec<Point>,
        fiber_diameter: Option<f64>,
        optics: Optics,
    ) -> Result<Self> {
        let diameter = match fiber_diameter {
            Some(d) => d,
            None => {
                let c = bbox_center(&positions);
                let r = positions.iter().map(|p| dist(*p, c)).fold(0.0, f64::max);
                if r == 0.0 {
                    return Err(invalid(
                        "cannot infer a fiber diameter from a single centered core; pass it explicitly",
                    ));
                }
                2.0 * r
            }
        };
        Self::build(positions, diameter, optics, LayoutKind::Explicit, None)
    }

    fn build(
        positions: Vec<Point>,
        fiber_diameter: f64,
        optics: Optics,
        kind: LayoutKind,
        pitch: Option<f64>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("a layout needs at least one core"));
        }
        if !(fiber_diameter > 0.0 && fiber_diameter.is_finite()) {
            return Err(invalid(format!(
                "fiber diameter must be positive, got {fiber_diameter}"
            )));
        }
        Optics::new(optics.wavelength, optics.distance)?;
        if positions
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(invalid("core positions must be finite"));
        }

        let mut sorted = positions.clone();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!(
                "duplicate core position ({}, {})",
                w[0][0], w[0][1]
            )));
        }

        let radius = 0.5 * fiber_diameter * (1.0 + 1e-9);
        let fits = |c: Point| positions.iter().all(|p| dist(*p, c) <= radius);
        if !fits([0.0, 0.0]) && !fits(bbox_center(&positions)) {
            return Err(invalid(format!(
                "cores do not fit inside a fiber of diameter {fiber_diameter}"
            )));
        }

        Ok(Self {
            positions,
            fiber_diameter,
            optics,
            kind,
            pitch,
        })
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn core_count(&self) -> usize {
        self.positions.len()
    }

    pub fn fiber_diameter(&self) -> f64 {
        self.fiber_diameter
    }

    pub fn optics(&self) -> Optics {
        self.optics
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    /// Lattice spacing of an integer-grid layout.
    pub fn pitch(&self) -> Option<f64> {
        self.pitch
    }

    /// `z / (D²/λ)`; the far-field model needs this to be large.
    pub fn far_field_ratio(&self) -> f64 {
        self.optics.distance * self.optics.wavelength / (self.fiber_diameter * self.fiber_diameter)
    }

    /// True when `z ≥ 10·D²/λ`.
    pub fn is_far_field(&self) -> bool {
        self.far_field_ratio() >= 10.0
    }

    /// The same cores shifted by `offset`. Core differences, and hence every
    /// visibility, are unchanged.
    pub fn translated(&self, offset: Point) -> Result<Self> {
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] + offset[0], p[1] + offset[1]])
            .collect();
        Self::build(
            positions,
            self.fiber_diameter,
            self.optics,
            self.kind,
            self.pitch,
        )
    }

    /// Largest per-axis core separation `max_{j,k} ‖p_j − p_k‖_∞`.
    pub fn max_axis_separation(&self) -> f64 {
        let (lo, hi) = self.positions.iter().fold(
            ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
            |(lo, hi), p| {
                (
                    [lo[0].min(p[0]), lo[1].min(p[1])],
                    [hi[0].max(p[0]), hi[1].max(p[1])],
                )
            },
        );
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn bbox_center(points: &[Point]) -> Point {
    let (lo, hi) = points.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1])],
                [hi[0].max(p[0]), hi[1].max(p[1])],
            )
        },
    );
    [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]
}

/// Vogel model of a Fermat golden spiral with `core_count` cores:
/// `p_q = c·√q·(cos qθ_g, sin qθ_g)` for `q = 1..Q`, scaled so the outermost
/// core sits on the fiber edge (radius `D/2`).
pub fn fermat_spiral_layout(
    core_count: usize,
    fiber_diameter: f64,
    optics: Optics,
) -> Result<CoreLayout> {
    if core_count == 0 {
        return Err(invalid("core count must be at least 1"));
    }
    if !(fiber_diameter > 0.0 && fiber_diameter.is_finite()) {
        return Err(invalid(format!(
            "fiber diameter must be positive, got {fiber_diameter}"
        )));
    }
    let theta = golden_angle();
    let scale = 0.5 * fiber_diameter / (core_count as f64).sqrt();
    let positions = (1..=core_count)
        .map(|q| {
            let r = scale * (q as f64).sqrt();
            let a = q as f64 * theta;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    CoreLayout::build(
        positions,
        fiber_diameter,
        optics,
        LayoutKind::FermatSpiral,
        None,
    )
}

/// `side²` cores on the lattice `{(a·pitch, b·pitch) : 0 ≤ a, b < side}`,
/// ordered with `a` major (core index `a·side + b`).
pub fn integer_grid_layout(side: usize, pitch: f64, optics: Optics) -> Result<CoreLayout> {
    if side == 0 {
        return Err(invalid("grid side must be at least 1"));
    }
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(invalid(format!("grid pitch must be positive, got {pitch}")));
    }
    let positions = (0..side)
        .flat_map(|a| (0..side).map(move |b| [a as f64 * pitch, b as f64 * pitch]))
        .collect();
    let diameter = if side == 1 {
        pitch
    } else {
        (side - 1) as f64 * pitch * std::f64::consts::SQRT_2
    };
    CoreLayout::build(
        positions,
        diameter,
        optics,
        LayoutKind::IntegerGrid,
        Some(pitch),
    )
}
