//! Approximate-identity kernel families.
//!
//! Every implemented family has the property that the kernel measure
//! `F(y) dmu(y)` factors into a product of one-dimensional probability
//! measures along the chart axes ([`AxisFactor`]). Masses of coordinate
//! boxes are therefore products of closed-form CDFs, and convolution
//! quadrature can fold the kernel into per-axis weights.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groups::{GroupChart, GroupPoint};
use crate::quadrature::{
    integrate_box, AxisMap, AxisNodes, AxisSpan, QuadratureSpec, WeightedRule,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind {
    Fejer,
    SquareFejer(usize),
    Poisson,
    PoissonProduct(usize),
    Semicircle,
    ShiftedSemicircle(f64),
    ShiftedSemicircleProduct(usize, f64),
    AxBPhi,
    HeisenbergW3,
}

/// Net index of a kernel family: the order `n` of a Fejer kernel or the
/// scale `theta` of every other family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelParam {
    Order(u64),
    Scale(f64),
}

impl KernelParam {
    pub fn value(&self) -> f64 {
        match *self {
            KernelParam::Order(n) => n as f64,
            KernelParam::Scale(t) => t,
        }
    }

    /// Length scale of the kernel: `1/(n+1)` or `theta`.
    pub fn effective_scale(&self) -> f64 {
        match *self {
            KernelParam::Order(n) => 1.0 / (n as f64 + 1.0),
            KernelParam::Scale(t) => t,
        }
    }
}

impl fmt::Display for KernelParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelParam::Order(n) => write!(f, "n={n}"),
            KernelParam::Scale(t) => write!(f, "theta={t}"),
        }
    }
}

/// One-dimensional probability measure along a chart axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisFactor {
    /// Fejer kernel of order `n` on `[0,1)`.
    Fejer { n: u64 },
    /// Cauchy density `P_s` on the line.
    Cauchy { scale: f64 },
    /// Semicircle of radius `radius` centred at `center`.
    Semicircle { radius: f64, center: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl AxisFactor {
    pub fn density(&self, t: f64) -> f64 {
        match *self {
            AxisFactor::Fejer { n } => fejer(n, t),
            AxisFactor::Cauchy { scale } => poisson(scale, t),
            AxisFactor::Semicircle { radius, center } => semicircle(radius, t - center),
            AxisFactor::Uniform { lo, hi } => {
                if t > lo && t < hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    /// Mass of `(-inf, t]`; for the Fejer factor, of `[0, t]` with `t` in `[0,1]`.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            AxisFactor::Fejer { n } => fejer_cdf(n, t.clamp(0.0, 1.0)),
            AxisFactor::Cauchy { scale } => {
                if t == f64::INFINITY {
                    1.0
                } else if t == f64::NEG_INFINITY {
                    0.0
                } else {
                    0.5 + (t / scale).atan() / PI
                }
            }
            AxisFactor::Semicircle { radius, center } => semicircle_cdf(t - center, radius),
            AxisFactor::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            0.0
        } else {
            self.cdf(hi) - self.cdf(lo)
        }
    }

    /// Integration span covering the support (or its truncation).
    pub fn span(&self, spec: &QuadratureSpec) -> AxisSpan {
        match *self {
            AxisFactor::Fejer { n } => AxisSpan::linear(0.0, 1.0)
                .with_max_width(1.0 / (spec.panels_per_oscillation as f64 * (n as f64 + 1.0))),
            AxisFactor::Cauchy { scale } => {
                let t = cauchy_truncation(scale, spec.truncation_eps);
                AxisSpan::mapped(-t, t, AxisMap::Tangent { center: 0.0, scale })
            }
            AxisFactor::Semicircle { radius, center } => AxisSpan::mapped(
                center - radius,
                center + radius,
                AxisMap::Sine { center, radius },
            ),
            AxisFactor::Uniform { lo, hi } => AxisSpan::linear(lo, hi),
        }
    }

    /// Per-node measure weights: Gauss weight times density times `dt/du`,
    /// using the closed form of the product for mapped axes.
    pub fn weighted_rule(&self, span: &AxisSpan, level: usize, nodes_per_panel: usize) -> WeightedRule {
        let nodes = AxisNodes::build(span, level, nodes_per_panel);
        let weights = match (*self, span.map) {
            (AxisFactor::Semicircle { radius, .. }, AxisMap::Sine { .. }) => nodes
                .jac_weight
                .iter()
                .zip(&nodes.u)
                .map(|(w, u)| w * 2.0 * u.cos() / (PI * radius))
                .collect(),
            (AxisFactor::Cauchy { scale }, AxisMap::Tangent { .. }) => nodes
                .jac_weight
                .iter()
                .zip(&nodes.u)
                .map(|(w, u)| {
                    let c = u.cos();
                    w * c * c / (PI * scale)
                })
                .collect(),
            _ => nodes
                .jac_weight
                .iter()
                .zip(&nodes.t)
                .map(|(w, t)| w * self.density(*t))
                .collect(),
        };
        WeightedRule {
            nodes: nodes.t,
            weights,
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            AxisFactor::Fejer { n } => n as f64 + 1.0,
            AxisFactor::Cauchy { scale } => 1.0 / (PI * scale),
            AxisFactor::Semicircle { radius, .. } => 2.0 / (PI * radius),
            AxisFactor::Uniform { lo, hi } => 1.0 / (hi - lo),
        }
    }
}

/// Half-width `T` with `P_s` mass outside `[-T, T]` equal to `eps`.
pub fn cauchy_truncation(scale: f64, eps: f64) -> f64 {
    scale * (FRAC_PI_2 * (1.0 - eps)).tan()
}

/// Per-axis support description of a kernel at a fixed parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisSupport {
    FullCircle,
    Interval { lo: f64, hi: f64 },
    /// Infinite support truncated to `[-truncation, truncation]` for quadrature.
    HeavyTail { scale: f64, truncation: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportBox {
    pub axes: Vec<AxisSupport>,
}

impl SupportBox {
    pub fn is_compact(&self) -> bool {
        self.axes
            .iter()
            .all(|a| matches!(a, AxisSupport::Interval { .. }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelFamily {
    kind: KernelKind,
}

impl KernelFamily {
    pub fn new(kind: KernelKind) -> Result<Self> {
        let dim_ok = |d: usize| (1..=3).contains(&d);
        let lambda_ok = |l: f64| l > 0.0 && l < 1.0;
        let ok = match kind {
            KernelKind::SquareFejer(d) | KernelKind::PoissonProduct(d) => dim_ok(d),
            KernelKind::ShiftedSemicircle(l) => lambda_ok(l),
            KernelKind::ShiftedSemicircleProduct(d, l) => dim_ok(d) && lambda_ok(l),
            _ => true,
        };
        if ok {
            Ok(Self { kind })
        } else {
            Err(Error::InvalidParam(format!(
                "{kind:?}: dimension must be 1..=3 and lambda in (0,1)"
            )))
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn group(&self) -> GroupChart {
        match self.kind {
            KernelKind::Fejer => GroupChart::torus(1),
            KernelKind::SquareFejer(d) => GroupChart::torus(d),
            KernelKind::Poisson | KernelKind::Semicircle | KernelKind::ShiftedSemicircle(_) => {
                GroupChart::euclidean(1)
            }
            KernelKind::PoissonProduct(d) | KernelKind::ShiftedSemicircleProduct(d, _) => {
                GroupChart::euclidean(d)
            }
            KernelKind::AxBPhi => GroupChart::axb(),
            KernelKind::HeisenbergW3 => GroupChart::heisenberg(),
        }
    }

    pub fn is_fejer(&self) -> bool {
        matches!(self.kind, KernelKind::Fejer | KernelKind::SquareFejer(_))
    }

    pub fn validate_param(&self, p: KernelParam) -> Result<()> {
        match (self.is_fejer(), p) {
            (true, KernelParam::Order(_)) => Ok(()),
            (false, KernelParam::Scale(t)) if !(t > 0.0 && t.is_finite()) => Err(
                Error::InvalidParam(format!("theta must be positive and finite, got {t}")),
            ),
            (false, KernelParam::Scale(t)) if self.kind == KernelKind::AxBPhi && t >= 1.0 => Err(
                Error::InvalidParam(format!("ax+b kernel needs 0 < theta < 1, got {t}")),
            ),
            (false, KernelParam::Scale(_)) => Ok(()),
            (true, p) => Err(Error::InvalidParam(format!(
                "Fejer families take an integer order, got {p}"
            ))),
            (false, p) => Err(Error::InvalidParam(format!(
                "this family takes a scale theta, got {p}"
            ))),
        }
    }

    /// Binds a parameter, precomputing the per-axis factors.
    pub fn at(&self, p: KernelParam) -> Result<Kernel> {
        self.validate_param(p)?;
        let theta = p.value();
        let dims = self.group().dimension();
        let factors = match self.kind {
            KernelKind::Fejer | KernelKind::SquareFejer(_) => {
                let KernelParam::Order(n) = p else { unreachable!() };
                vec![AxisFactor::Fejer { n }; dims]
            }
            KernelKind::Poisson | KernelKind::PoissonProduct(_) => {
                vec![AxisFactor::Cauchy { scale: theta }; dims]
            }
            KernelKind::Semicircle | KernelKind::HeisenbergW3 => vec![
                AxisFactor::Semicircle {
                    radius: theta,
                    center: 0.0
                };
                dims
            ],
            KernelKind::ShiftedSemicircle(l) | KernelKind::ShiftedSemicircleProduct(_, l) => {
                let center = semicircle_shift(theta, l)?;
                vec![
                    AxisFactor::Semicircle {
                        radius: theta,
                        center
                    };
                    dims
                ]
            }
            KernelKind::AxBPhi => vec![
                AxisFactor::Uniform {
                    lo: 1.0 - theta,
                    hi: 1.0 + theta,
                },
                AxisFactor::Semicircle {
                    radius: theta,
                    center: 0.0,
                },
            ],
        };
        Ok(Kernel {
            family: *self,
            param: p,
            factors,
        })
    }

    pub fn eval(&self, p: KernelParam, y: &GroupPoint) -> Result<f64> {
        self.at(p)?.eval(y)
    }

    pub fn closed_form_mass(&self, p: KernelParam, boxed: &[(f64, f64)]) -> Option<f64> {
        self.at(p).ok()?.closed_form_mass(boxed)
    }

    pub fn tail_sup(&self, p: KernelParam, r: f64) -> Result<f64> {
        Ok(self.at(p)?.tail_sup(r))
    }

    pub fn token(&self) -> String {
        match self.kind {
            KernelKind::Fejer => "fejer".into(),
            KernelKind::SquareFejer(_) => "sqfejer".into(),
            KernelKind::Poisson => "poisson".into(),
            KernelKind::PoissonProduct(_) => "poissond".into(),
            KernelKind::Semicircle => "semicircle".into(),
            KernelKind::ShiftedSemicircle(l) => format!("semicircle:{l}"),
            KernelKind::ShiftedSemicircleProduct(_, l) => format!("semicircled:{l}"),
            KernelKind::AxBPhi => "axbphi".into(),
            KernelKind::HeisenbergW3 => "heisw3".into(),
        }
    }

    /// Parses a family token. Product families take their dimension from `group`.
    pub fn from_token(token: &str, group: &GroupChart) -> Result<Self> {
        let (head, arg) = match token.trim().split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (token.trim(), None),
        };
        let lambda = || -> Result<f64> {
            arg.ok_or_else(|| Error::Parse(format!("`{head}` needs `:LAMBDA`")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad lambda in `{token}`: {e}")))
        };
        let d = group.dimension();
        let kind = match head {
            "fejer" => KernelKind::Fejer,
            "sqfejer" => KernelKind::SquareFejer(d),
            "poisson" => KernelKind::Poisson,
            "poissond" => KernelKind::PoissonProduct(d),
            "semicircle" if arg.is_none() => KernelKind::Semicircle,
            "semicircle" => KernelKind::ShiftedSemicircle(lambda()?),
            "semicircled" => KernelKind::ShiftedSemicircleProduct(d, lambda()?),
            "axbphi" => KernelKind::AxBPhi,
            "heisw3" => KernelKind::HeisenbergW3,
            other => return Err(Error::Parse(format!("unknown kernel family `{other}`"))),
        };
        let family = KernelFamily::new(kind)?;
        if family.group() != *group {
            return Err(Error::Config(format!(
                "family `{token}` lives on {}, not on {group}",
                family.group()
            )));
        }
        Ok(family)
    }
}

/// A kernel family bound to one parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    param: KernelParam,
    factors: Vec<AxisFactor>,
}

impl Kernel {
    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn param(&self) -> KernelParam {
        self.param
    }

    pub fn group(&self) -> GroupChart {
        self.family.group()
    }

    /// Axis factors of the measure `F dmu`.
    pub fn factors(&self) -> &[AxisFactor] {
        &self.factors
    }

    /// Kernel value with respect to the Haar measure.
    pub fn eval(&self, y: &GroupPoint) -> Result<f64> {
        let g = self.group();
        g.validate(y)?;
        let v = match self.family.kind {
            KernelKind::AxBPhi => {
                let theta = self.param.value();
                let (a, b) = (y.get(0), y.get(1));
                if a > 1.0 - theta && a < 1.0 + theta && b.abs() <= theta {
                    a * a / (PI * theta.powi(3)) * (theta * theta - b * b).sqrt()
                } else {
                    0.0
                }
            }
            _ => self
                .factors
                .iter()
                .zip(y.coords())
                .map(|(f, t)| f.density(*t))
                .product(),
        };
        Ok(v)
    }

    pub fn support_box(&self, spec: &QuadratureSpec) -> SupportBox {
        let axes = self
            .factors
            .iter()
            .map(|f| match *f {
                AxisFactor::Fejer { .. } => AxisSupport::FullCircle,
                AxisFactor::Cauchy { scale } => AxisSupport::HeavyTail {
                    scale,
                    truncation: cauchy_truncation(scale, spec.truncation_eps),
                },
                AxisFactor::Semicircle { radius, center } => AxisSupport::Interval {
                    lo: center - radius,
                    hi: center + radius,
                },
                AxisFactor::Uniform { lo, hi } => AxisSupport::Interval { lo, hi },
            })
            .collect();
        SupportBox { axes }
    }

    /// Analytic mass of an axis-aligned coordinate box. `None` when the box
    /// does not have one interval per chart axis.
    pub fn closed_form_mass(&self, boxed: &[(f64, f64)]) -> Option<f64> {
        if boxed.len() != self.factors.len() {
            return None;
        }
        Some(
            self.factors
                .iter()
                .zip(boxed)
                .map(|(f, &(lo, hi))| f.mass(lo, hi))
                .product(),
        )
    }

    /// Upper bound for `sup |F|` outside the gauge ball of radius `r`.
    pub fn tail_sup(&self, r: f64) -> f64 {
        let dims = self.factors.len() as i32;
        match self.family.kind {
            KernelKind::Fejer | KernelKind::SquareFejer(_) => {
                if r > 0.5 {
                    return 0.0;
                }
                let n1 = self.param.value() + 1.0;
                let s = (PI * r).sin();
                n1.powi(dims - 1) / (n1 * s * s)
            }
            KernelKind::Poisson | KernelKind::PoissonProduct(_) => {
                let t = self.param.value();
                (1.0 / (PI * t)).powi(dims - 1) * t / (PI * (t * t + r * r))
            }
            KernelKind::AxBPhi => {
                let t = self.param.value();
                if t <= r {
                    0.0
                } else {
                    (1.0 + t).powi(2) / (PI * t * t)
                }
            }
            _ => {
                let inside = self.factors.iter().all(|f| match *f {
                    AxisFactor::Semicircle { radius, center } => center.abs() + radius <= r,
                    _ => false,
                });
                if inside {
                    0.0
                } else {
                    self.factors.iter().map(AxisFactor::peak).product()
                }
            }
        }
    }

    /// Spans covering the kernel support, for quadrature through `eval`.
    pub fn support_spans(&self, spec: &QuadratureSpec) -> Vec<AxisSpan> {
        self.factors.iter().map(|f| f.span(spec)).collect()
    }
}

/// Fejer kernel `sin^2((n+1) pi t) / ((n+1) sin^2(pi t))`, equal to `n+1`
/// on the integers.
pub fn fejer(n: u64, t: f64) -> f64 {
    let n1 = n as f64 + 1.0;
    let s = t - t.round();
    let z = PI * s;
    if (n1 * z).abs() < 1e-4 {
        return n1 * (1.0 - (n1 * n1 - 1.0) * z * z / 3.0);
    }
    let num = (n1 * z).sin();
    let den = z.sin();
    num * num / (n1 * den * den)
}

/// Trigonometric sum `sum_{|j|<=n} (1 - |j|/(n+1)) e(jt)`, real part.
pub fn fejer_sum_form(n: u64, t: f64) -> f64 {
    let n1 = n as f64 + 1.0;
    let n = n as i64;
    (-n..=n)
        .map(|j| {
            let c = 1.0 - (j.abs() as f64) / n1;
            Complex64::from_polar(c, 2.0 * PI * j as f64 * t)
        })
        .sum::<Complex64>()
        .re
}

/// `int_0^t K_n`, for `t` in `[0,1]`.
pub fn fejer_cdf(n: u64, t: f64) -> f64 {
    let n1 = n as f64 + 1.0;
    let mut acc = t;
    for j in 1..=n {
        let jf = j as f64;
        acc += (1.0 - jf / n1) * (2.0 * PI * jf * t).sin() / (PI * jf);
    }
    acc
}

pub fn poisson(theta: f64, t: f64) -> f64 {
    1.0 / (PI * theta * (1.0 + (t / theta).powi(2)))
}

pub fn semicircle(theta: f64, t: f64) -> f64 {
    if t.abs() <= theta {
        2.0 / (PI * theta * theta) * (theta * theta - t * t).sqrt()
    } else {
        0.0
    }
}

/// Mass of the centred semicircle of radius `theta` on `(-inf, x]`.
pub fn semicircle_cdf(x: f64, theta: f64) -> f64 {
    let xi = x / theta;
    if xi <= -1.0 {
        0.0
    } else if xi >= 1.0 {
        1.0
    } else {
        0.5 + (xi * (1.0 - xi * xi).sqrt() + xi.asin()) / PI
    }
}

/// Shift `c` such that `W_theta(t - c)` has mass `lambda` on `(-inf, 0)`.
///
/// Bisection on the unit semicircle CDF, then scaled by `theta`, so that
/// `c(theta, lambda) = theta * c(1, lambda)`.
pub fn semicircle_shift(theta: f64, lambda: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParam(format!("theta must be positive, got {theta}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParam(format!("lambda must lie in (0,1), got {lambda}")));
    }
    // solve F(x) = lambda for x = -c / theta in [-1, 1]
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if semicircle_cdf(mid, 1.0) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(-x * theta)
}

/// Per-parameter row of an approximate-identity check.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomRow {
    pub param: KernelParam,
    pub mass: f64,
    pub l1_norm: f64,
    /// `(radius, mass of |F| outside the gauge ball)`
    pub tails: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub family: KernelFamily,
    pub bound: f64,
    pub rows: Vec<AxiomRow>,
    pub violations: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Numerically checks the three approximate-identity conditions along a
/// sweep ordered toward the limit: bounded L1 norm, unit mass, and tail
/// masses shrinking outside every listed gauge radius.
pub fn verify_approximate_identity(
    family: &KernelFamily,
    sweep: &[KernelParam],
    radii: &[f64],
    bound: f64,
    spec: &QuadratureSpec,
) -> Result<AxiomReport> {
    let group = family.group();
    let mut rows = Vec::with_capacity(sweep.len());
    for &p in sweep {
        let k = family.at(p)?;
        let spans = k.support_spans(spec);
        let eval = |y: &GroupPoint| k.eval(y).unwrap_or(f64::NAN);
        let mass = integrate_box(&group, eval, &spans, spec)?.value;
        let l1_norm = integrate_box(&group, |y| eval(y).abs(), &spans, spec)?.value;
        let mut tails = Vec::with_capacity(radii.len());
        for &r in radii {
            let edges = group.gauge_ball_edges(r);
            let cut_spans: Vec<AxisSpan> = spans
                .iter()
                .zip(edges)
                .map(|(s, e)| s.clone().with_breakpoints(e))
                .collect();
            let tail = integrate_box(
                &group,
                |y| {
                    if group.gauge_radius(y) >= r {
                        eval(y).abs()
                    } else {
                        0.0
                    }
                },
                &cut_spans,
                spec,
            )?
            .value;
            tails.push((r, tail));
        }
        rows.push(AxiomRow {
            param: p,
            mass,
            l1_norm,
            tails,
        });
    }

    let mut violations = Vec::new();
    for row in &rows {
        if (row.mass - 1.0).abs() > 1e-8 {
            violations.push(format!("{}: total mass {} differs from 1", row.param, row.mass));
        }
        if row.l1_norm > bound + 1e-8 {
            violations.push(format!(
                "{}: L1 norm {} exceeds bound {bound}",
                row.param, row.l1_norm
            ));
        }
    }
    for (i, &r) in radii.iter().enumerate() {
        let tails: Vec<f64> = rows.iter().map(|row| row.tails[i].1).collect();
        if tails.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            violations.push(format!("tail mass outside r={r} increases along the sweep: {tails:?}"));
        }
        if let (Some(first), Some(last)) = (tails.first(), tails.last()) {
            if tails.len() > 1 && *first > 1e-12 && last >= first {
                violations.push(format!("tail mass outside r={r} does not decrease: {tails:?}"));
            }
        }
    }
    Ok(AxiomReport {
        family: *family,
        bound,
        rows,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fam(kind: KernelKind) -> KernelFamily {
        KernelFamily::new(kind).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = fam(KernelKind::Fejer);
        assert_abs_diff_eq!(
            f.eval(KernelParam::Order(1), &GroupPoint::scalar(0.0)).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        let p = fam(KernelKind::Poisson);
        assert_abs_diff_eq!(
            p.eval(KernelParam::Scale(0.1), &GroupPoint::scalar(0.0)).unwrap(),
            10.0 / PI,
            epsilon = 1e-12
        );
        let w = fam(KernelKind::Semicircle);
        assert_eq!(w.eval(KernelParam::Scale(1.0), &GroupPoint::scalar(2.0)).unwrap(), 0.0);
        let phi = fam(KernelKind::AxBPhi);
        assert_abs_diff_eq!(
            phi.eval(KernelParam::Scale(0.5), &GroupPoint::new(&[1.0, 0.0])).unwrap(),
            4.0 / PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn eval_matches_factor_product_with_haar() {
        let phi = fam(KernelKind::AxBPhi).at(KernelParam::Scale(0.3)).unwrap();
        let g = GroupChart::axb();
        for &(a, b) in &[(0.8, 0.1), (1.2, -0.25), (1.0, 0.0), (0.71, 0.29)] {
            let y = GroupPoint::new(&[a, b]);
            let prod: f64 = phi
                .factors()
                .iter()
                .zip(y.coords())
                .map(|(f, t)| f.density(*t))
                .product();
            let lhs = phi.eval(&y).unwrap() * g.haar_density(&y).unwrap();
            assert_abs_diff_eq!(lhs, prod, epsilon = 1e-12);
        }
    }

    #[test]
    fn fejer_sum_form_examples() {
        assert_abs_diff_eq!(fejer_sum_form(0, 0.377), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fejer_sum_form(1, 0.25), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fejer_sum_form(5, 0.37), fejer(5, 0.37), epsilon = 1e-12);
    }

    #[test]
    fn fejer_near_integers_is_continuous() {
        for n in [0_u64, 3, 64, 1000] {
            for t in [1e-12, 1e-7, 0.999_999_999, 1.0 - 1e-15, 2.0] {
                assert_abs_diff_eq!(fejer(n, t), fejer_sum_form(n, t), epsilon = 1e-9 * (n as f64 + 1.0));
            }
        }
    }

    #[test]
    fn shift_examples() {
        assert_abs_diff_eq!(semicircle_shift(1.0, 0.5).unwrap(), 0.0, epsilon = 1e-13);
        let c1 = semicircle_shift(1.0, 0.25).unwrap();
        assert_eq!(semicircle_shift(2.0, 0.25).unwrap(), 2.0 * c1);
        // independent check: quadrature of W_1(t - c) over (-inf, 0)
        let g = GroupChart::euclidean(1);
        let span = AxisSpan::linear(c1 - 1.0, 0.0);
        let mass = integrate_box(
            &g,
            |y| semicircle(1.0, y.get(0) - c1),
            &[AxisSpan {
                map: AxisMap::Sine { center: c1, radius: 1.0 },
                min_panels: 4,
                ..span
            }],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(mass.value, 0.25, epsilon = 1e-10);
        assert!(semicircle_shift(1.0, 1.0).is_err());
        assert!(semicircle_shift(0.0, 0.5).is_err());
    }

    #[test]
    fn closed_form_mass_examples() {
        let p = fam(KernelKind::Poisson);
        assert_eq!(
            p.closed_form_mass(KernelParam::Scale(0.3), &[(f64::NEG_INFINITY, 0.0)]),
            Some(0.5)
        );
        let f = fam(KernelKind::Fejer);
        assert_abs_diff_eq!(
            f.closed_form_mass(KernelParam::Order(7), &[(0.0, 0.5)]).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        let phi = fam(KernelKind::AxBPhi);
        assert_abs_diff_eq!(
            phi.closed_form_mass(KernelParam::Scale(0.5), &[(0.0, 1.0), (f64::NEG_INFINITY, 0.0)])
                .unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert_eq!(phi.closed_form_mass(KernelParam::Scale(0.5), &[(0.0, 1.0)]), None);
    }

    #[test]
    fn tail_sup_examples() {
        let f = fam(KernelKind::Fejer);
        assert_abs_diff_eq!(
            f.tail_sup(KernelParam::Order(9), 0.25).unwrap(),
            0.2,
            epsilon = 1e-14
        );
        let s = fam(KernelKind::ShiftedSemicircle(0.3));
        assert_eq!(s.tail_sup(KernelParam::Scale(0.01), 0.1).unwrap(), 0.0);
        let p = fam(KernelKind::Poisson);
        assert_abs_diff_eq!(
            p.tail_sup(KernelParam::Scale(0.01), 0.1).unwrap(),
            0.01 / (PI * (0.0001 + 0.01)),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(p.tail_sup(KernelParam::Scale(0.01), 0.1).unwrap(), 0.315158, epsilon = 1e-6);
    }

    #[test]
    fn param_validation() {
        let phi = fam(KernelKind::AxBPhi);
        assert!(phi.at(KernelParam::Scale(1.0)).is_err());
        assert!(phi.at(KernelParam::Order(3)).is_err());
        assert!(fam(KernelKind::Fejer).at(KernelParam::Scale(0.1)).is_err());
        assert!(fam(KernelKind::Poisson).at(KernelParam::Scale(-1.0)).is_err());
        assert!(KernelFamily::new(KernelKind::ShiftedSemicircle(1.0)).is_err());
    }

    #[test]
    fn tokens() {
        let r2 = GroupChart::euclidean(2);
        let k = KernelFamily::from_token("semicircled:0.3", &r2).unwrap();
        assert_eq!(k.kind(), KernelKind::ShiftedSemicircleProduct(2, 0.3));
        assert!(KernelFamily::from_token("fejer", &r2).is_err());
        assert!(KernelFamily::from_token("semicircled", &r2).is_err());
        let t1 = GroupChart::torus(1);
        assert_eq!(KernelFamily::from_token("fejer", &t1).unwrap().token(), "fejer");
    }

    #[test]
    fn verify_examples() {
        let spec = QuadratureSpec::default();
        let sweep: Vec<_> = [1, 4, 16, 64].map(KernelParam::Order).to_vec();
        let rep =
            verify_approximate_identity(&fam(KernelKind::Fejer), &sweep, &[0.1], 1.0, &spec).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
        let tails: Vec<f64> = rep.rows.iter().map(|r| r.tails[0].1).collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]));

        let sweep: Vec<_> = [0.5, 0.25, 0.1].map(KernelParam::Scale).to_vec();
        let rep =
            verify_approximate_identity(&fam(KernelKind::AxBPhi), &sweep, &[0.2], 1.0, &spec).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
        assert!(rep.rows[2].tails[0].1.abs() < 1e-14);

        let sweep: Vec<_> = [1.0, 0.1, 0.01].map(KernelParam::Scale).to_vec();
        let rep = verify_approximate_identity(
            &fam(KernelKind::PoissonProduct(2)),
            &sweep,
            &[0.1],
            1.0,
            &spec,
        )
        .unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
    }

    #[test]
    fn verify_flags_bad_bound() {
        let spec = QuadratureSpec::default();
        let rep = verify_approximate_identity(
            &fam(KernelKind::Fejer),
            &[KernelParam::Order(2), KernelParam::Order(4), KernelParam::Order(8)],
            &[0.1],
            0.5,
            &spec,
        )
        .unwrap();
        assert!(!rep.passed());
    }
}
