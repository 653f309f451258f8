//! Composite Gauss-Legendre panel quadrature on coordinate boxes.
//!
//! Each axis is integrated in a mapped variable `u` with `t = map(u)`:
//! the identity map, a sine map `t = c + r sin u` that removes square-root
//! endpoint singularities of semicircle factors, or a tangent map
//! `t = c + s tan u` that compresses heavy Cauchy tails onto a bounded
//! interval. Panels are split at user breakpoints (jump interfaces of the
//! integrand) so every panel sees a smooth integrand. Error estimates come
//! from comparing a rule with the same rule after halving every panel.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::groups::{GroupChart, GroupPoint};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Panels per unit `1/(n+1)` of a Fejer axis.
    pub panels_per_oscillation: usize,
    pub nodes_per_panel: usize,
    /// Cauchy tail mass discarded per axis.
    pub truncation_eps: f64,
    /// Absolute tolerance on the refinement error estimate.
    pub tolerance: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels_per_oscillation: 2,
            nodes_per_panel: 8,
            truncation_eps: 1e-10,
            tolerance: 1e-10,
            max_refinements: 3,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(Error::Config("nodes_per_panel must be at least 2".into()));
        }
        if self.panels_per_oscillation == 0 {
            return Err(Error::Config("panels_per_oscillation must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("quadrature tolerance must be positive".into()));
        }
        if !(self.truncation_eps > 0.0 && self.truncation_eps < 1.0) {
            return Err(Error::Config("truncation eps must lie in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisMap {
    Linear,
    Sine { center: f64, radius: f64 },
    Tangent { center: f64, scale: f64 },
}

impl AxisMap {
    pub fn to_t(&self, u: f64) -> f64 {
        match *self {
            AxisMap::Linear => u,
            AxisMap::Sine { center, radius } => center + radius * u.sin(),
            AxisMap::Tangent { center, scale } => center + scale * u.tan(),
        }
    }

    pub fn to_u(&self, t: f64) -> f64 {
        match *self {
            AxisMap::Linear => t,
            AxisMap::Sine { center, radius } => ((t - center) / radius).clamp(-1.0, 1.0).asin(),
            AxisMap::Tangent { center, scale } => ((t - center) / scale).atan(),
        }
    }

    /// `dt/du`
    pub fn jacobian(&self, u: f64) -> f64 {
        match *self {
            AxisMap::Linear => 1.0,
            AxisMap::Sine { radius, .. } => radius * u.cos(),
            AxisMap::Tangent { scale, .. } => {
                let c = u.cos();
                scale / (c * c)
            }
        }
    }
}

/// One axis of an integration box.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisSpan {
    pub lo: f64,
    pub hi: f64,
    pub map: AxisMap,
    /// Interior points (in `t`) where the integrand may jump.
    pub breakpoints: Vec<f64>,
    /// Upper bound on panel width in the mapped variable.
    pub max_width: Option<f64>,
    pub min_panels: usize,
}

impl AxisSpan {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            map: AxisMap::Linear,
            breakpoints: Vec::new(),
            max_width: None,
            min_panels: 2,
        }
    }

    pub fn mapped(lo: f64, hi: f64, map: AxisMap) -> Self {
        Self {
            map,
            min_panels: 4,
            ..Self::linear(lo, hi)
        }
    }

    pub fn with_breakpoints(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(pts);
        self
    }

    pub fn with_max_width(mut self, w: f64) -> Self {
        self.max_width = Some(self.max_width.map_or(w, |m| m.min(w)));
        self
    }

    pub fn with_min_panels(mut self, n: usize) -> Self {
        self.min_panels = self.min_panels.max(n);
        self
    }

    /// Panel edges in the mapped variable at refinement level 0.
    pub fn panel_edges(&self) -> Vec<f64> {
        let u_lo = self.map.to_u(self.lo);
        let u_hi = self.map.to_u(self.hi);
        if !(u_hi > u_lo) {
            return vec![];
        }
        let mut edges = vec![u_lo, u_hi];
        for &b in &self.breakpoints {
            if b > self.lo && b < self.hi {
                edges.push(self.map.to_u(b));
            }
        }
        if let AxisMap::Tangent { .. } = self.map {
            // geometric grading toward the heavy tails
            let mut k = 0.125_f64;
            while k < 1e18 {
                edges.push(k.atan());
                edges.push(-k.atan());
                k *= 2.0;
            }
        }
        edges.retain(|u| *u >= u_lo && *u <= u_hi);
        edges.sort_by(f64::total_cmp);
        let span = u_hi - u_lo;
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * span.max(1.0));
        if let Some(last) = edges.last_mut() {
            *last = u_hi;
        }
        if edges.len() < 2 {
            return vec![u_lo, u_hi];
        }
        let cap = self
            .max_width
            .unwrap_or(f64::INFINITY)
            .min(span / self.min_panels.max(1) as f64);
        let mut out = Vec::with_capacity(edges.len());
        for w in edges.windows(2) {
            let len = w[1] - w[0];
            let pieces = (len / cap).ceil().max(1.0) as usize;
            for i in 0..pieces {
                out.push(w[0] + len * i as f64 / pieces as f64);
            }
        }
        out.push(u_hi);
        out
    }
}

/// Quadrature nodes along one axis: chart coordinate `t`, mapped variable
/// `u`, and Gauss weight times `dt/du`.
#[derive(Clone, Debug, Default)]
pub struct AxisNodes {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub jac_weight: Vec<f64>,
}

impl AxisNodes {
    pub fn build(span: &AxisSpan, level: usize, nodes_per_panel: usize) -> Self {
        let rule = gauss_legendre(nodes_per_panel);
        let edges = span.panel_edges();
        let split = 1usize << level;
        let mut out = AxisNodes::default();
        for w in edges.windows(2) {
            let len = (w[1] - w[0]) / split as f64;
            for p in 0..split {
                let a = w[0] + len * p as f64;
                let half = 0.5 * len;
                let mid = a + half;
                for &(x, wt) in &rule {
                    let u = mid + half * x;
                    out.t.push(span.map.to_t(u));
                    out.u.push(u);
                    out.jac_weight.push(wt * half * span.map.jacobian(u));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Final per-axis rule: nodes and weights ready for a tensor sum.
#[derive(Clone, Debug, Default)]
pub struct WeightedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl From<AxisNodes> for WeightedRule {
    fn from(n: AxisNodes) -> Self {
        Self {
            nodes: n.t,
            weights: n.jac_weight,
        }
    }
}

fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut pairs = GaussLegendre::new(NonZeroUsize::new(m).expect("m >= 1"))
        .as_node_weight_pairs()
        .to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Sum using recursive halving; order depends only on the slice length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Tensor-product sum over the given axes. The outermost axis may be
/// evaluated in parallel; partial sums are combined in a fixed order so the
/// result does not depend on the thread count.
pub fn tensor_sum<F>(rules: &[WeightedRule], f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(!rules.is_empty() && rules.len() <= 3);
    let outer = &rules[0];
    let inner = |i: usize| -> f64 {
        let mut y = [0.0; 3];
        y[0] = outer.nodes[i];
        let w0 = outer.weights[i];
        let coords_len = rules.len();
        match coords_len {
            1 => w0 * f(&y[..1]),
            2 => {
                let r1 = &rules[1];
                let mut acc = 0.0;
                for (t1, w1) in r1.nodes.iter().zip(&r1.weights) {
                    y[1] = *t1;
                    acc += w1 * f(&y[..2]);
                }
                w0 * acc
            }
            _ => {
                let (r1, r2) = (&rules[1], &rules[2]);
                let mut acc = 0.0;
                for (t1, w1) in r1.nodes.iter().zip(&r1.weights) {
                    y[1] = *t1;
                    let mut acc2 = 0.0;
                    for (t2, w2) in r2.nodes.iter().zip(&r2.weights) {
                        y[2] = *t2;
                        acc2 += w2 * f(&y[..3]);
                    }
                    acc += w1 * acc2;
                }
                w0 * acc
            }
        }
    };
    let partials: Vec<f64> = outer_map(outer.nodes.len(), inner);
    pairwise_sum(&partials)
}

#[cfg(feature = "parallel")]
fn outer_map<G: Fn(usize) -> f64 + Sync>(n: usize, g: G) -> Vec<f64> {
    use rayon::prelude::*;
    // small outer loops are not worth the pool round-trip
    if n < 64 {
        (0..n).map(g).collect()
    } else {
        (0..n).into_par_iter().map(&g).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn outer_map<G: Fn(usize) -> f64 + Sync>(n: usize, g: G) -> Vec<f64> {
    (0..n).map(g).collect()
}

/// A quadrature result with its a-posteriori error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Refinement level that produced `value`.
    pub level: usize,
}

/// Evaluates `integral(level)` at successive refinement levels until two
/// consecutive levels agree to `spec.tolerance`.
pub fn refine_until<I>(spec: &QuadratureSpec, context: &str, mut integral: I) -> Result<Estimate>
where
    I: FnMut(usize) -> f64,
{
    spec.validate()?;
    let mut prev = integral(0);
    let mut estimate = f64::INFINITY;
    let mut value = prev;
    for level in 1..=spec.max_refinements.max(1) {
        value = integral(level);
        estimate = (value - prev).abs();
        if estimate <= spec.tolerance {
            return Ok(Estimate {
                value,
                error: estimate,
                level,
            });
        }
        prev = value;
    }
    Err(Error::Numerical {
        value,
        estimate,
        tolerance: spec.tolerance,
        refinements: spec.max_refinements.max(1),
        context: context.to_string(),
    })
}

/// Integrates `integrand * haar_density` over a coordinate box of `group`.
pub fn integrate_box<F>(
    group: &GroupChart,
    integrand: F,
    axes: &[AxisSpan],
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(&GroupPoint) -> f64 + Sync,
{
    if axes.len() != group.dimension() {
        return Err(Error::Config(format!(
            "box has {} axes, {group} has dimension {}",
            axes.len(),
            group.dimension()
        )));
    }
    refine_until(spec, &format!("integrate_box on {group}"), |level| {
        let rules: Vec<WeightedRule> = axes
            .iter()
            .map(|a| AxisNodes::build(a, level, spec.nodes_per_panel).into())
            .collect();
        tensor_sum(&rules, |y| {
            let p = GroupPoint::new(y);
            integrand(&p) * group.haar_density_unchecked(&p)
        })
    })
}
