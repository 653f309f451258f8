//! Group convolution `F * f(x) = int F(y) f(y^{-1} x) dmu(y)` and the
//! quantities it is compared against: directional limits of the target
//! along partition cells and the mass-weighted predicted limit.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::groups::{reduce_mod1, AxisCut, GroupChart, GroupPoint};
use crate::kernels::{Kernel, KernelFamily, KernelParam};
use crate::partitions::{AxisSide, Cell, LocalPartition, PartitionMasses};
use crate::quadrature::{refine_until, tensor_sum, Estimate, QuadratureSpec, WeightedRule};

pub use crate::quadrature::integrate_box;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    PiecewiseWithJumps,
    /// No one-sided limits at some point (oscillatory singularity).
    Singular,
}

/// A function on a group chart, evaluated at `w = y^{-1} x` inside a
/// convolution.
pub trait TargetFunction: Sync {
    fn eval(&self, w: &GroupPoint) -> f64;

    /// Jump hyperplanes in the argument `w`.
    fn jumps(&self) -> Vec<AxisCut> {
        Vec::new()
    }

    /// Discontinuity hyperplanes of `y -> f(y^{-1} x)`, in `y` coordinates.
    /// Interfaces whose pull-back is not axis-aligned are dropped.
    fn pulled_back_cuts(&self, group: &GroupChart, x: &GroupPoint) -> Vec<AxisCut> {
        self.jumps()
            .into_iter()
            .filter_map(|c| group.pullback_cut(x, c.axis, c.value))
            .collect()
    }

    fn smoothness(&self) -> Smoothness {
        if self.jumps().is_empty() {
            Smoothness::Smooth
        } else {
            Smoothness::PiecewiseWithJumps
        }
    }

    /// Claimed directional limits `f(x, A_j)` keyed by cell label.
    fn declared_limits(&self) -> Option<&BTreeMap<String, f64>> {
        None
    }

    fn describe(&self) -> String;
}

/// A smooth target given by a closure.
pub struct FnTarget<F> {
    f: F,
    name: String,
}

impl<F: Fn(&GroupPoint) -> f64 + Sync> FnTarget<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            f,
            name: name.into(),
        }
    }
}

impl<F: Fn(&GroupPoint) -> f64 + Sync> TargetFunction for FnTarget<F> {
    fn eval(&self, w: &GroupPoint) -> f64 {
        (self.f)(w)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Wraps a target with declared directional limits.
pub struct Declared<T> {
    pub inner: T,
    pub limits: BTreeMap<String, f64>,
}

impl<T: TargetFunction> TargetFunction for Declared<T> {
    fn eval(&self, w: &GroupPoint) -> f64 {
        self.inner.eval(w)
    }
    fn jumps(&self) -> Vec<AxisCut> {
        self.inner.jumps()
    }
    fn pulled_back_cuts(&self, group: &GroupChart, x: &GroupPoint) -> Vec<AxisCut> {
        self.inner.pulled_back_cuts(group, x)
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
    fn declared_limits(&self) -> Option<&BTreeMap<String, f64>> {
        Some(&self.limits)
    }
    fn describe(&self) -> String {
        self.inner.describe()
    }
}

/// Built-in targets selectable by token.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Const(f64),
    /// Indicator of the at-or-above side of the identity on every axis;
    /// on the torus, of `[0, 1/2)` per axis.
    Step { group: GroupChart },
    /// `value` times the indicator of `[lo, hi)` (or `(lo, hi)`) on axis 0.
    Interval {
        lo: f64,
        hi: f64,
        value: f64,
        open: bool,
        torus: bool,
    },
    /// `sum_j values[j] * 1_{C_j}(x w^{-1})`: partition cells carried to the
    /// anchor `x` so that `f(y^{-1} x)` is the cell indicator in `y`.
    CellValues {
        partition: LocalPartition,
        values: Vec<f64>,
        anchor: GroupPoint,
    },
    /// `prod_i cos(2 pi j w_i)`.
    Harmonic(i64),
    /// `sin(1/(w_0 - e_0))`, zero at the identity coordinate.
    SinOscillation { origin: f64 },
    /// `exp(-|w - e|^2)`; on tori the periodic `exp(sum_i cos(2 pi w_i) - d)`.
    Gaussian { group: GroupChart },
}

impl Target {
    /// Indicator of one cell carried to `anchor`.
    pub fn cell_indicator(partition: &LocalPartition, label: &str, anchor: GroupPoint) -> Result<Self> {
        let idx = partition
            .labels()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Config(format!("no cell labelled `{label}`")))?;
        let mut values = vec![0.0; partition.cells().len()];
        values[idx] = 1.0;
        Ok(Target::CellValues {
            partition: partition.clone(),
            values,
            anchor,
        })
    }

    /// Parses a target token. Cell-based targets use `partition` and are
    /// anchored at `x`.
    pub fn from_token(
        token: &str,
        group: &GroupChart,
        partition: &LocalPartition,
        x: &GroupPoint,
    ) -> Result<Self> {
        let token = token.trim();
        let (head, arg) = match token.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (token, None),
        };
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number `{s}` in `{token}`: {e}")))
        };
        let one_dim = || -> Result<()> {
            if group.dimension() == 1 {
                Ok(())
            } else {
                Err(Error::Config(format!("`{head}` is only defined on 1-D groups")))
            }
        };
        match head {
            "const" => Ok(Target::Const(arg.map(num).transpose()?.unwrap_or(1.0))),
            "step" => Ok(Target::Step { group: *group }),
            "interval" | "open-interval" => {
                one_dim()?;
                let parts: Vec<&str> = arg.unwrap_or("").split(':').collect();
                if !(2..=3).contains(&parts.len()) {
                    return Err(Error::Parse(format!(
                        "`{head}` expects `{head}:<lo>:<hi>[:<value>]`"
                    )));
                }
                let (lo, hi) = (num(parts[0])?, num(parts[1])?);
                let value = parts.get(2).map(|s| num(s)).transpose()?.unwrap_or(1.0);
                if !(lo < hi) {
                    return Err(Error::Config(format!("empty interval [{lo}, {hi})")));
                }
                Ok(Target::Interval {
                    lo,
                    hi,
                    value,
                    open: head == "open-interval",
                    torus: group.is_torus(),
                })
            }
            "quadrant-step" => {
                let label = arg.ok_or_else(|| Error::Parse("quadrant-step needs `:<cell-label>`".into()))?;
                Target::cell_indicator(partition, label, *x)
            }
            "cell-values" => {
                let values = arg
                    .ok_or_else(|| Error::Parse("cell-values needs `:<v1>,<v2>,...`".into()))?
                    .split(',')
                    .map(num)
                    .collect::<Result<Vec<_>>>()?;
                if values.len() != partition.cells().len() {
                    return Err(Error::Config(format!(
                        "cell-values has {} values for {} cells",
                        values.len(),
                        partition.cells().len()
                    )));
                }
                Ok(Target::CellValues {
                    partition: partition.clone(),
                    values,
                    anchor: *x,
                })
            }
            "harmonic" => {
                let j = arg
                    .ok_or_else(|| Error::Parse("harmonic needs `:<j>`".into()))?
                    .trim()
                    .parse::<i64>()
                    .map_err(|e| Error::Parse(format!("bad harmonic index: {e}")))?;
                Ok(Target::Harmonic(j))
            }
            "sin-oscillation" => Ok(Target::SinOscillation {
                origin: group.identity().get(0),
            }),
            "gauss" => Ok(Target::Gaussian { group: *group }),
            other => Err(Error::Parse(format!("unknown target `{other}`"))),
        }
    }
}

impl TargetFunction for Target {
    fn eval(&self, w: &GroupPoint) -> f64 {
        match self {
            Target::Const(v) => *v,
            Target::Step { group } => {
                let id = group.identity();
                let inside = w.coords().iter().enumerate().all(|(i, &t)| {
                    if group.is_torus() {
                        reduce_mod1(t) < 0.5
                    } else {
                        t >= id.get(i)
                    }
                });
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Target::Interval {
                lo,
                hi,
                value,
                open,
                torus,
            } => {
                let t = if *torus { reduce_mod1(w.get(0)) } else { w.get(0) };
                let inside = if *open {
                    t > *lo && t < *hi
                } else {
                    t >= *lo && t < *hi
                };
                if inside {
                    *value
                } else {
                    0.0
                }
            }
            Target::CellValues {
                partition,
                values,
                anchor,
            } => {
                let g = partition.group();
                let y = g.mul_unchecked(anchor, &g.inv_unchecked(w));
                partition
                    .cells()
                    .iter()
                    .zip(values)
                    .find(|(c, _)| c.contains(g, &y))
                    .map_or(0.0, |(_, v)| *v)
            }
            Target::Harmonic(j) => w
                .coords()
                .iter()
                .map(|t| (2.0 * PI * *j as f64 * t).cos())
                .product(),
            Target::SinOscillation { origin } => {
                let s = w.get(0) - origin;
                if s == 0.0 {
                    0.0
                } else {
                    (1.0 / s).sin()
                }
            }
            Target::Gaussian { group } => {
                let id = group.identity();
                let r2: f64 = w
                    .coords()
                    .iter()
                    .zip(id.coords())
                    .map(|(a, b)| {
                        if group.is_torus() {
                            1.0 - (2.0 * PI * (a - b)).cos()
                        } else {
                            (a - b) * (a - b)
                        }
                    })
                    .sum();
                (-r2).exp()
            }
        }
    }

    fn jumps(&self) -> Vec<AxisCut> {
        match self {
            Target::Step { group } => (0..group.dimension())
                .flat_map(|axis| {
                    if group.is_torus() {
                        vec![AxisCut { axis, value: 0.0 }, AxisCut { axis, value: 0.5 }]
                    } else {
                        vec![AxisCut {
                            axis,
                            value: group.identity().get(axis),
                        }]
                    }
                })
                .collect(),
            Target::Interval { lo, hi, .. } => vec![
                AxisCut { axis: 0, value: *lo },
                AxisCut { axis: 0, value: *hi },
            ],
            // cell boundaries seen from w = x - y on abelian charts
            Target::CellValues {
                partition, anchor, ..
            } if partition.group().is_abelian() => {
                let g = partition.group();
                let mut cuts = Vec::new();
                for cell in partition.cells() {
                    for (axis, a) in cell.axes.iter().enumerate() {
                        if a.side == AxisSide::Full {
                            continue;
                        }
                        let mut vals = vec![anchor.get(axis) - a.split];
                        if g.is_torus() {
                            vals.push(anchor.get(axis));
                        }
                        for v in vals {
                            let value = if g.is_torus() { reduce_mod1(v) } else { v };
                            let cut = AxisCut { axis, value };
                            if !cuts.contains(&cut) {
                                cuts.push(cut);
                            }
                        }
                    }
                }
                cuts
            }
            _ => Vec::new(),
        }
    }

    fn pulled_back_cuts(&self, group: &GroupChart, x: &GroupPoint) -> Vec<AxisCut> {
        match self {
            Target::CellValues {
                partition, anchor, ..
            } => {
                // f(y^{-1} x) = sum_j v_j 1_{C_j}(anchor x^{-1} y)
                let shift = if group.coord_distance(anchor, x) == 0.0 {
                    Some(vec![0.0; group.dimension()])
                } else if group.is_abelian() {
                    Some(
                        x.coords()
                            .iter()
                            .zip(anchor.coords())
                            .map(|(a, b)| a - b)
                            .collect(),
                    )
                } else {
                    None
                };
                let Some(shift) = shift else {
                    return Vec::new();
                };
                let mut cuts = Vec::new();
                for cell in partition.cells() {
                    for (axis, a) in cell.axes.iter().enumerate() {
                        if a.side == AxisSide::Full {
                            continue;
                        }
                        let mut vals = vec![a.split + shift[axis]];
                        if group.is_torus() {
                            vals.push(shift[axis]);
                        }
                        for v in vals {
                            let value = if group.is_torus() { reduce_mod1(v) } else { v };
                            let cut = AxisCut { axis, value };
                            if !cuts.contains(&cut) {
                                cuts.push(cut);
                            }
                        }
                    }
                }
                cuts
            }
            _ => self
                .jumps()
                .into_iter()
                .filter_map(|c| group.pullback_cut(x, c.axis, c.value))
                .collect(),
        }
    }

    fn smoothness(&self) -> Smoothness {
        match self {
            Target::SinOscillation { .. } => Smoothness::Singular,
            Target::CellValues { .. } | Target::Step { .. } | Target::Interval { .. } => {
                Smoothness::PiecewiseWithJumps
            }
            _ => Smoothness::Smooth,
        }
    }

    fn describe(&self) -> String {
        match self {
            Target::Const(v) => format!("const:{v}"),
            Target::Step { .. } => "step".into(),
            Target::Interval {
                lo, hi, value, open, ..
            } => {
                let head = if *open { "open-interval" } else { "interval" };
                format!("{head}:{lo}:{hi}:{value}")
            }
            Target::CellValues { values, .. } => {
                let v: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                format!("cell-values:{}", v.join(","))
            }
            Target::Harmonic(j) => format!("harmonic:{j}"),
            Target::SinOscillation { .. } => "sin-oscillation".into(),
            Target::Gaussian { .. } => "gauss".into(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Everything needed to evaluate one `F_theta * f(x)`.
pub struct ConvolutionProblem<'a> {
    pub family: KernelFamily,
    pub param: KernelParam,
    pub target: &'a dyn TargetFunction,
    pub point: GroupPoint,
    pub spec: QuadratureSpec,
}

impl ConvolutionProblem<'_> {
    pub fn solve(&self) -> Result<Estimate> {
        convolve(&self.family.at(self.param)?, self.target, &self.point, &self.spec)
    }
}

struct Prepared {
    x: GroupPoint,
    spans: Vec<crate::quadrature::AxisSpan>,
}

fn prepare(kernel: &Kernel, target: &dyn TargetFunction, x: &GroupPoint, spec: &QuadratureSpec) -> Result<Prepared> {
    spec.validate()?;
    let g = kernel.group();
    let x = g.point(x.coords())?;
    let cuts = target.pulled_back_cuts(&g, &x);
    let spans = kernel
        .factors()
        .iter()
        .enumerate()
        .map(|(axis, f)| {
            f.span(spec)
                .with_breakpoints(cuts.iter().filter(|c| c.axis == axis).map(|c| c.value))
        })
        .collect();
    Ok(Prepared { x, spans })
}

fn sum_at_level(kernel: &Kernel, target: &dyn TargetFunction, p: &Prepared, spec: &QuadratureSpec, level: usize) -> f64 {
    let g = kernel.group();
    let rules: Vec<WeightedRule> = kernel
        .factors()
        .iter()
        .zip(&p.spans)
        .map(|(f, s)| f.weighted_rule(s, level, spec.nodes_per_panel))
        .collect();
    tensor_sum(&rules, |y| target.eval(&g.left_divide(&GroupPoint::new(y), &p.x)))
}

/// `int F(y) f(y^{-1} x) dmu(y)` over the kernel support (Cauchy axes
/// truncated), with panels split along the target's pulled-back jumps.
pub fn convolve(
    kernel: &Kernel,
    target: &dyn TargetFunction,
    x: &GroupPoint,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let p = prepare(kernel, target, x, spec)?;
    let context = format!(
        "{} at {} of {} at {}",
        kernel.family().token(),
        kernel.param(),
        target.describe(),
        p.x
    );
    refine_until(spec, &context, |level| sum_at_level(kernel, target, &p, spec, level))
}

/// The convolution rule at one fixed refinement level (panels halved
/// `level` times), without an error estimate.
pub fn convolve_at_level(
    kernel: &Kernel,
    target: &dyn TargetFunction,
    x: &GroupPoint,
    spec: &QuadratureSpec,
    level: usize,
) -> Result<f64> {
    let p = prepare(kernel, target, x, spec)?;
    Ok(sum_at_level(kernel, target, &p, spec, level))
}

/// `sum_j lambda_j f(x, A_j)`.
pub fn predicted_limit(masses: &PartitionMasses, limits: &BTreeMap<String, f64>) -> Result<f64> {
    masses
        .labels
        .iter()
        .zip(&masses.weights)
        .map(|(label, w)| {
            limits
                .get(label)
                .map(|v| w * v)
                .ok_or_else(|| Error::Config(format!("no directional limit for cell {label}")))
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalLimit {
    pub value: f64,
    pub stable: bool,
    /// `(r_k, f(probe_k^{-1} x))` along the probe path.
    pub trail: Vec<(f64, f64)>,
}

/// Estimates `lim f(y^{-1} x)` as `y -> e` inside `cell`, along the probe
/// path `r_k = 2^{-k} 10^{-2}`, `k = 0..=20`.
pub fn directional_limit(
    group: &GroupChart,
    f: &dyn TargetFunction,
    x: &GroupPoint,
    cell: &Cell,
) -> Result<DirectionalLimit> {
    let x = group.point(x.coords())?;
    let trail: Vec<(f64, f64)> = (0..=20)
        .map(|k| {
            let r = 1e-2 * 0.5f64.powi(k);
            let y = cell.probe_point(group, r);
            (r, f.eval(&group.left_divide(&y, &x)))
        })
        .collect();
    let tail = &trail[trail.len() - 4..];
    let stable = tail
        .iter()
        .all(|a| tail.iter().all(|b| (a.1 - b.1).abs() < 1e-9));
    Ok(DirectionalLimit {
        value: trail.last().expect("non-empty").1,
        stable,
        trail,
    })
}

/// Directional limits for every cell of `partition`.
pub fn directional_limits(
    partition: &LocalPartition,
    f: &dyn TargetFunction,
    x: &GroupPoint,
) -> Result<BTreeMap<String, DirectionalLimit>> {
    partition
        .cells()
        .iter()
        .map(|c| Ok((c.label.clone(), directional_limit(partition.group(), f, x, c)?)))
        .collect()
}

/// `f_z(w) = f(z^{-1} w)`.
pub fn left_translate<'a>(g: GroupChart, f: &'a dyn TargetFunction, z: GroupPoint) -> impl TargetFunction + 'a {
    FnTarget::new(format!("{} left-translated by {z}", f.describe()), move |w| {
        f.eval(&g.mul_unchecked(&g.inv_unchecked(&z), w))
    })
}

/// `f_z(w) = f(w z^{-1})`. Convolution commutes with it:
/// `F * f_z (x z) = F * f (x)`.
pub fn right_translate<'a>(g: GroupChart, f: &'a dyn TargetFunction, z: GroupPoint) -> impl TargetFunction + 'a {
    FnTarget::new(format!("{} right-translated by {z}", f.describe()), move |w| {
        f.eval(&g.mul_unchecked(w, &g.inv_unchecked(&z)))
    })
}
