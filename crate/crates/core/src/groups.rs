//! Concrete locally compact groups in a single global coordinate chart.
//!
//! Every group here is presented by coordinates in at most three real axes:
//! the `d`-torus as `[0,1)^d`, Euclidean space `R^d`, the `ax+b` group as
//! `(a, b)` with `a > 0`, and the Heisenberg group as the upper-triangular
//! entries `(a, b, c)` of a unitriangular 3x3 matrix.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest chart dimension used by any implemented group.
pub const MAX_DIM: usize = 3;

/// A point of a group chart. Coordinates past `dim` are always zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupPoint {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl GroupPoint {
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "group points have 1..={MAX_DIM} coordinates"
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len(),
        }
    }

    pub fn scalar(t: f64) -> Self {
        Self::new(&[t])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, axis: usize) -> f64 {
        self.coords()[axis]
    }
}

impl fmt::Display for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Torus(usize),
    Euclidean(usize),
    AxB,
    Heisenberg,
}

/// An axis-aligned hyperplane `{y : y[axis] = value}` in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisCut {
    pub axis: usize,
    pub value: f64,
}

/// A group together with its global chart, left Haar density and gauge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupChart {
    kind: GroupKind,
}

impl GroupChart {
    pub fn new(kind: GroupKind) -> Result<Self> {
        match kind {
            GroupKind::Torus(d) | GroupKind::Euclidean(d) if d == 0 || d > MAX_DIM => Err(
                Error::Config(format!("chart dimension {d} outside 1..={MAX_DIM}")),
            ),
            _ => Ok(Self { kind }),
        }
    }

    pub fn torus(d: usize) -> Self {
        Self::new(GroupKind::Torus(d)).expect("valid torus dimension")
    }

    pub fn euclidean(d: usize) -> Self {
        Self::new(GroupKind::Euclidean(d)).expect("valid euclidean dimension")
    }

    pub fn axb() -> Self {
        Self {
            kind: GroupKind::AxB,
        }
    }

    pub fn heisenberg() -> Self {
        Self {
            kind: GroupKind::Heisenberg,
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            GroupKind::Torus(d) | GroupKind::Euclidean(d) => d,
            GroupKind::AxB => 2,
            GroupKind::Heisenberg => 3,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, GroupKind::Torus(_))
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self.kind, GroupKind::Torus(_) | GroupKind::Euclidean(_))
    }

    pub fn identity(&self) -> GroupPoint {
        match self.kind {
            GroupKind::AxB => GroupPoint::new(&[1.0, 0.0]),
            _ => GroupPoint::new(&vec![0.0; self.dimension()]),
        }
    }

    /// Checks that `x` lies in the chart domain and returns it in canonical form
    /// (torus coordinates reduced to `[0,1)`).
    pub fn point(&self, coords: &[f64]) -> Result<GroupPoint> {
        if coords.len() != self.dimension() {
            return Err(Error::InvalidPoint(format!(
                "{} expects {} coordinates, got {}",
                self,
                self.dimension(),
                coords.len()
            )));
        }
        let p = GroupPoint::new(coords);
        self.validate(&p)?;
        Ok(self.canonical(p))
    }

    pub fn validate(&self, x: &GroupPoint) -> Result<()> {
        if x.dim() != self.dimension() {
            return Err(Error::InvalidPoint(format!(
                "point {x} has dimension {}, {} needs {}",
                x.dim(),
                self,
                self.dimension()
            )));
        }
        if x.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate in {x}")));
        }
        if self.kind == GroupKind::AxB && x.get(0) <= 0.0 {
            return Err(Error::InvalidPoint(format!(
                "ax+b requires a > 0, got a = {}",
                x.get(0)
            )));
        }
        Ok(())
    }

    fn canonical(&self, mut x: GroupPoint) -> GroupPoint {
        if self.is_torus() {
            for c in &mut x.coords[..x.dim] {
                *c = reduce_mod1(*c);
            }
        }
        x
    }

    /// Group product `x * y`.
    pub fn mul(&self, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.mul_unchecked(x, y))
    }

    pub(crate) fn mul_unchecked(&self, x: &GroupPoint, y: &GroupPoint) -> GroupPoint {
        let (p, q) = (x.coords, y.coords);
        let coords = match self.kind {
            GroupKind::Torus(d) => {
                let mut c = [0.0; MAX_DIM];
                for i in 0..d {
                    c[i] = reduce_mod1(p[i] + q[i]);
                }
                c
            }
            GroupKind::Euclidean(_) => [p[0] + q[0], p[1] + q[1], p[2] + q[2]],
            // (a1, b1)(a2, b2): t -> a1 (a2 t + b2) + b1
            GroupKind::AxB => [p[0] * q[0], p[0] * q[1] + p[1], 0.0],
            GroupKind::Heisenberg => [p[0] + q[0], p[1] + q[1] + p[0] * q[2], p[2] + q[2]],
        };
        GroupPoint {
            coords,
            dim: x.dim,
        }
    }

    pub fn inv(&self, x: &GroupPoint) -> Result<GroupPoint> {
        self.validate(x)?;
        Ok(self.inv_unchecked(x))
    }

    pub(crate) fn inv_unchecked(&self, x: &GroupPoint) -> GroupPoint {
        let p = x.coords;
        let coords = match self.kind {
            GroupKind::Torus(d) => {
                let mut c = [0.0; MAX_DIM];
                for i in 0..d {
                    c[i] = reduce_mod1(-p[i]);
                }
                c
            }
            GroupKind::Euclidean(_) => [-p[0], -p[1], -p[2]],
            GroupKind::AxB => [1.0 / p[0], -p[1] / p[0], 0.0],
            GroupKind::Heisenberg => [-p[0], p[0] * p[2] - p[1], -p[2]],
        };
        GroupPoint {
            coords,
            dim: x.dim,
        }
    }

    /// `y^{-1} x`, the argument the target sees inside a convolution.
    pub(crate) fn left_divide(&self, y: &GroupPoint, x: &GroupPoint) -> GroupPoint {
        self.mul_unchecked(&self.inv_unchecked(y), x)
    }

    /// Density of the left Haar measure with respect to Lebesgue measure in
    /// chart coordinates.
    pub fn haar_density(&self, y: &GroupPoint) -> Result<f64> {
        self.validate(y)?;
        Ok(self.haar_density_unchecked(y))
    }

    pub(crate) fn haar_density_unchecked(&self, y: &GroupPoint) -> f64 {
        match self.kind {
            GroupKind::AxB => {
                let a = y.get(0);
                1.0 / (a * a)
            }
            _ => 1.0,
        }
    }

    /// Max-norm style distance of `y` from the identity.
    pub fn gauge_radius(&self, y: &GroupPoint) -> f64 {
        let c = y.coords();
        match self.kind {
            GroupKind::Torus(_) => c
                .iter()
                .map(|t| {
                    let r = t.rem_euclid(1.0);
                    r.min(1.0 - r)
                })
                .fold(0.0, f64::max),
            GroupKind::Euclidean(_) | GroupKind::Heisenberg => {
                c.iter().map(|t| t.abs()).fold(0.0, f64::max)
            }
            GroupKind::AxB => (c[0] - 1.0).abs().max(c[1].abs()),
        }
    }

    /// Coordinate box `{gauge_radius < r}` written per axis as a union of
    /// half-open intervals. Only the torus needs two pieces per axis.
    pub(crate) fn gauge_ball_edges(&self, r: f64) -> Vec<Vec<f64>> {
        let id = self.identity();
        (0..self.dimension())
            .map(|axis| {
                if self.is_torus() {
                    if r >= 0.5 {
                        vec![]
                    } else {
                        vec![r, 1.0 - r]
                    }
                } else {
                    let c = id.get(axis);
                    vec![c - r, c + r]
                }
            })
            .collect()
    }

    /// Preimage of the hyperplane `{w[axis] = value}` under `y -> y^{-1} x`,
    /// when that preimage is itself an axis-aligned hyperplane in `y`.
    pub fn pullback_cut(&self, x: &GroupPoint, axis: usize, value: f64) -> Option<AxisCut> {
        let c = x.coords();
        match self.kind {
            GroupKind::Torus(_) => Some(AxisCut {
                axis,
                value: reduce_mod1(c[axis] - value),
            }),
            GroupKind::Euclidean(_) => Some(AxisCut {
                axis,
                value: c[axis] - value,
            }),
            // y^{-1} x = (x_a / a, (x_b - b) / a)
            GroupKind::AxB => match axis {
                0 if value > 0.0 => Some(AxisCut {
                    axis: 0,
                    value: c[0] / value,
                }),
                0 => None,
                _ if value == 0.0 => Some(AxisCut {
                    axis: 1,
                    value: c[1],
                }),
                _ => None,
            },
            // y^{-1} x = (x_a - a, x_b - b + a c - a x_c, x_c - c)
            GroupKind::Heisenberg => match axis {
                0 => Some(AxisCut {
                    axis: 0,
                    value: c[0] - value,
                }),
                2 => Some(AxisCut {
                    axis: 2,
                    value: c[2] - value,
                }),
                _ => None,
            },
        }
    }

    /// Distance between two points that respects torus wraparound.
    pub fn coord_distance(&self, x: &GroupPoint, y: &GroupPoint) -> f64 {
        x.coords()
            .iter()
            .zip(y.coords())
            .map(|(p, q)| {
                let d = (p - q).abs();
                if self.is_torus() {
                    let d = d.rem_euclid(1.0);
                    d.min(1.0 - d)
                } else {
                    d
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn token(&self) -> &'static str {
        match self.kind {
            GroupKind::Torus(1) => "torus1",
            GroupKind::Torus(2) => "torus2",
            GroupKind::Torus(_) => "torus3",
            GroupKind::Euclidean(1) => "r1",
            GroupKind::Euclidean(2) => "r2",
            GroupKind::Euclidean(_) => "r3",
            GroupKind::AxB => "axb",
            GroupKind::Heisenberg => "heis",
        }
    }
}

impl fmt::Display for GroupChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for GroupChart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "torus1" => GroupKind::Torus(1),
            "torus2" => GroupKind::Torus(2),
            "torus3" => GroupKind::Torus(3),
            "r1" => GroupKind::Euclidean(1),
            "r2" => GroupKind::Euclidean(2),
            "r3" => GroupKind::Euclidean(3),
            "axb" => GroupKind::AxB,
            "heis" => GroupKind::Heisenberg,
            other => return Err(Error::Parse(format!("unknown group token `{other}`"))),
        };
        GroupChart::new(kind)
    }
}

/// Reduces a torus coordinate to `[0,1)`. Values that round up to `1.0` snap
/// to the largest representable value below one.
pub fn reduce_mod1(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    if r >= 1.0 {
        1.0_f64.next_down()
    } else {
        r
    }
}
