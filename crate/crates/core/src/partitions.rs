//! Local partitions at the identity.
//!
//! Cells are coordinate boxes described per axis by a side of a split
//! point. The side that owns the split point itself follows the half-open
//! conventions of the standard partitions: `[0,1/2)`/`[1/2,1)` on the
//! torus, `(-inf,0)`/`[0,inf)` on Euclidean and Heisenberg axes, and
//! `(0,1]`/`(1,inf)`, `(-inf,0]`/`(0,inf)` on the `ax+b` group.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::groups::{reduce_mod1, GroupChart, GroupKind, GroupPoint};
use crate::kernels::{KernelFamily, KernelParam};
use crate::quadrature::{refine_until, tensor_sum, QuadratureSpec, WeightedRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisSide {
    Below,
    Above,
    Full,
}

/// Which side of an axis split contains the split point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitOwner {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisCell {
    pub side: AxisSide,
    pub split: f64,
    pub owner: SplitOwner,
}

impl AxisCell {
    fn contains(&self, t: f64) -> bool {
        match (self.side, self.owner) {
            (AxisSide::Full, _) => true,
            (AxisSide::Below, SplitOwner::Upper) => t < self.split,
            (AxisSide::Below, SplitOwner::Lower) => t <= self.split,
            (AxisSide::Above, SplitOwner::Upper) => t >= self.split,
            (AxisSide::Above, SplitOwner::Lower) => t > self.split,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub label: String,
    pub axes: Vec<AxisCell>,
}

impl Cell {
    pub fn contains(&self, group: &GroupChart, y: &GroupPoint) -> bool {
        let torus = group.is_torus();
        self.axes.iter().zip(y.coords()).all(|(a, &t)| {
            let t = if torus { reduce_mod1(t) } else { t };
            a.contains(t)
        })
    }

    /// The cell as a coordinate box, one interval per axis.
    pub fn coord_box(&self, group: &GroupChart) -> Vec<(f64, f64)> {
        self.axes
            .iter()
            .enumerate()
            .map(|(axis, a)| {
                let (lo, hi) = domain(group, axis);
                match a.side {
                    AxisSide::Full => (lo, hi),
                    AxisSide::Below => (lo, a.split),
                    AxisSide::Above => (a.split, hi),
                }
            })
            .collect()
    }

    /// Deterministic point of the cell at gauge distance `r/2` from the
    /// identity, approaching it from the cell's side of every axis.
    pub fn probe_point(&self, group: &GroupChart, r: f64) -> GroupPoint {
        let h = 0.5 * r;
        let coords: Vec<f64> = self
            .axes
            .iter()
            .map(|a| {
                if group.is_torus() {
                    match a.side {
                        AxisSide::Below | AxisSide::Full => h,
                        AxisSide::Above => 1.0 - h,
                    }
                } else {
                    match a.side {
                        AxisSide::Below => a.split - h,
                        AxisSide::Above => a.split + h,
                        AxisSide::Full => a.split + h,
                    }
                }
            })
            .collect();
        GroupPoint::new(&coords)
    }
}

fn domain(group: &GroupChart, axis: usize) -> (f64, f64) {
    match group.kind() {
        GroupKind::Torus(_) => (0.0, 1.0),
        GroupKind::AxB if axis == 0 => (0.0, f64::INFINITY),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn default_split(group: &GroupChart, axis: usize) -> (f64, SplitOwner) {
    match group.kind() {
        GroupKind::Torus(_) => (0.5, SplitOwner::Upper),
        GroupKind::AxB if axis == 0 => (1.0, SplitOwner::Lower),
        GroupKind::AxB => (0.0, SplitOwner::Lower),
        _ => (0.0, SplitOwner::Upper),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalPartition {
    group: GroupChart,
    cells: Vec<Cell>,
}

impl LocalPartition {
    pub fn new(group: GroupChart, cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Config("a partition needs at least one cell".into()));
        }
        for c in &cells {
            if c.axes.len() != group.dimension() {
                return Err(Error::Config(format!(
                    "cell {} has {} axes, {group} needs {}",
                    c.label,
                    c.axes.len(),
                    group.dimension()
                )));
            }
        }
        let mut labels: Vec<&str> = cells.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate cell labels".into()));
        }
        Ok(Self { group, cells })
    }

    /// Orthant-style partition of the chart: `2^d` cells for tori, Euclidean
    /// spaces and the Heisenberg group, four quadrants for `ax+b`.
    pub fn standard(group: &GroupChart) -> Self {
        let d = group.dimension();
        let prefix = match group.kind() {
            GroupKind::Torus(_) => "I",
            _ => "J",
        };
        let cells = (0..1usize << d)
            .map(|bits| {
                let sides: Vec<usize> = (0..d).map(|i| (bits >> (d - 1 - i)) & 1).collect();
                let axes = sides
                    .iter()
                    .enumerate()
                    .map(|(axis, &s)| {
                        let (split, owner) = default_split(group, axis);
                        AxisCell {
                            side: if s == 0 { AxisSide::Below } else { AxisSide::Above },
                            split,
                            owner,
                        }
                    })
                    .collect();
                let label = if group.kind() == GroupKind::AxB {
                    format!("A{}", bits + 1)
                } else {
                    let digits: String = sides.iter().map(|s| s.to_string()).collect();
                    format!("{prefix}{digits}")
                };
                Cell { label, axes }
            })
            .collect();
        Self {
            group: *group,
            cells,
        }
    }

    /// Parses a partition token: `halves`, `orthants`, `axb4`, `heis8`.
    /// `custom` reads cells from `config`.
    pub fn from_token(token: &str, group: &GroupChart, config: Option<&Config>) -> Result<Self> {
        let ok = match (token.trim(), group.kind()) {
            ("halves", GroupKind::Torus(1) | GroupKind::Euclidean(1)) => true,
            ("orthants", GroupKind::Torus(_) | GroupKind::Euclidean(_)) => true,
            ("axb4", GroupKind::AxB) => true,
            ("heis8", GroupKind::Heisenberg) => true,
            ("custom", _) => {
                let cfg = config.ok_or_else(|| {
                    Error::Config("custom partition needs cell lines in a config file".into())
                })?;
                return Self::from_config(group, cfg);
            }
            _ => false,
        };
        if ok {
            Ok(Self::standard(group))
        } else {
            Err(Error::Config(format!(
                "partition `{token}` does not apply to {group}"
            )))
        }
    }

    /// Custom partition from `cell.<label>.axis<i> = below|above|full` lines
    /// with optional `split.axis<i> = <real>` and `owner.axis<i> = lower|upper`.
    pub fn from_config(group: &GroupChart, config: &Config) -> Result<Self> {
        let d = group.dimension();
        let mut splits: Vec<(f64, SplitOwner)> = (0..d).map(|i| default_split(group, i)).collect();
        let mut cells: Vec<(String, Vec<Option<AxisSide>>)> = Vec::new();
        let axis_index = |s: &str| -> Result<usize> {
            let i = s
                .strip_prefix("axis")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse(format!("expected `axis<i>`, got `{s}`")))?;
            if i >= d {
                return Err(Error::Config(format!("axis{i} out of range for {group}")));
            }
            Ok(i)
        };
        for (key, value) in config.entries() {
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["split", ax] => {
                    let i = axis_index(ax)?;
                    splits[i].0 = value
                        .parse()
                        .map_err(|e| Error::Parse(format!("{key}: {e}")))?;
                }
                ["owner", ax] => {
                    let i = axis_index(ax)?;
                    splits[i].1 = match value {
                        "lower" => SplitOwner::Lower,
                        "upper" => SplitOwner::Upper,
                        v => return Err(Error::Parse(format!("{key}: expected lower|upper, got {v}"))),
                    };
                }
                ["cell", label, ax] => {
                    let i = axis_index(ax)?;
                    let side = match value {
                        "below" => AxisSide::Below,
                        "above" => AxisSide::Above,
                        "full" => AxisSide::Full,
                        v => {
                            return Err(Error::Parse(format!(
                                "{key}: expected below|above|full, got {v}"
                            )))
                        }
                    };
                    let pos = match cells.iter().position(|(l, _)| l == label) {
                        Some(p) => p,
                        None => {
                            cells.push((label.to_string(), vec![None; d]));
                            cells.len() - 1
                        }
                    };
                    cells[pos].1[i] = Some(side);
                }
                _ => {}
            }
        }
        let cells = cells
            .into_iter()
            .map(|(label, sides)| Cell {
                axes: sides
                    .into_iter()
                    .zip(&splits)
                    .map(|(s, &(split, owner))| AxisCell {
                        side: s.unwrap_or(AxisSide::Full),
                        split,
                        owner,
                    })
                    .collect(),
                label,
            })
            .collect();
        let p = Self::new(*group, cells)?;
        p.validate(2_000, 0x5eed)?;
        Ok(p)
    }

    pub fn group(&self) -> &GroupChart {
        &self.group
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn labels(&self) -> Vec<String> {
        self.cells.iter().map(|c| c.label.clone()).collect()
    }

    pub fn cell(&self, label: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.label == label)
    }

    /// Label of the unique cell containing `y`.
    pub fn cell_of(&self, y: &GroupPoint) -> Result<&str> {
        self.group.validate(y)?;
        let mut hits = self.cells.iter().filter(|c| c.contains(&self.group, y));
        match (hits.next(), hits.next()) {
            (Some(c), None) => Ok(&c.label),
            (None, _) => Err(Error::Config(format!("no cell contains {y}"))),
            (Some(a), Some(b)) => Err(Error::Config(format!(
                "{y} lies in both {} and {}",
                a.label, b.label
            ))),
        }
    }

    /// Structural check by sampling: every sample lies in exactly one cell
    /// and every cell meets gauge balls down to radius `1e-9`.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<()> {
        let g = &self.group;
        let d = g.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let splits: Vec<f64> = (0..d)
            .map(|i| self.cells[0].axes[i].split)
            .collect();
        for _ in 0..samples {
            let coords: Vec<f64> = (0..d)
                .map(|i| {
                    // a fraction of samples sit exactly on the split point
                    if rng.gen_bool(0.1) {
                        return splits[i];
                    }
                    match (g.kind(), i) {
                        (GroupKind::Torus(_), _) => rng.gen_range(0.0..1.0),
                        (GroupKind::AxB, 0) => rng.gen_range(1e-3..4.0),
                        _ => rng.gen_range(-3.0..3.0),
                    }
                })
                .collect();
            let y = g.point(&coords)?;
            self.cell_of(&y)?;
        }
        for cell in &self.cells {
            for k in 1..=9 {
                let r = 10f64.powi(-k);
                let p = cell.probe_point(g, r);
                let gauge = g.gauge_radius(&p);
                if !(gauge > 0.0 && gauge < r) || !cell.contains(g, &p) {
                    return Err(Error::Config(format!(
                        "cell {} is not local at the identity (probe {p} at r={r:e})",
                        cell.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_family(&self, family: &KernelFamily) -> Result<()> {
        if family.group() != self.group {
            return Err(Error::Config(format!(
                "kernel `{}` lives on {}, partition on {}",
                family.token(),
                family.group(),
                self.group
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Numerical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionMasses {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

impl PartitionMasses {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.weights[i])
    }
}

/// Kernel mass of every cell, from closed-form axis CDFs.
pub fn partition_masses(
    partition: &LocalPartition,
    family: &KernelFamily,
    param: KernelParam,
) -> Result<PartitionMasses> {
    partition.check_family(family)?;
    let k = family.at(param)?;
    let g = partition.group();
    let weights = partition
        .cells()
        .iter()
        .map(|c| {
            k.closed_form_mass(&c.coord_box(g))
                .ok_or_else(|| Error::Config(format!("cell {} is not a coordinate box", c.label)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionMasses {
        labels: partition.labels(),
        weights,
        provenance: Provenance::Analytic,
    })
}

/// Kernel mass of every cell by quadrature of the cell indicator.
pub fn partition_masses_numerical(
    partition: &LocalPartition,
    family: &KernelFamily,
    param: KernelParam,
    spec: &QuadratureSpec,
) -> Result<PartitionMasses> {
    partition.check_family(family)?;
    let k = family.at(param)?;
    let g = *partition.group();
    let mut weights = Vec::with_capacity(partition.cells().len());
    for cell in partition.cells() {
        let spans: Vec<_> = k
            .factors()
            .iter()
            .zip(&cell.axes)
            .map(|(f, a)| {
                let s = f.span(spec);
                match a.side {
                    AxisSide::Full => s,
                    _ => s.with_breakpoints([a.split]),
                }
            })
            .collect();
        let est = refine_until(spec, &format!("mass of cell {}", cell.label), |level| {
            let rules: Vec<WeightedRule> = k
                .factors()
                .iter()
                .zip(&spans)
                .map(|(f, s)| f.weighted_rule(s, level, spec.nodes_per_panel))
                .collect();
            tensor_sum(&rules, |y| {
                if cell.contains(&g, &GroupPoint::new(y)) {
                    1.0
                } else {
                    0.0
                }
            })
        })?;
        weights.push(est.value);
    }
    Ok(PartitionMasses {
        labels: partition.labels(),
        weights,
        provenance: Provenance::Numerical,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassConvergence {
    pub sequence: Vec<(KernelParam, PartitionMasses)>,
    pub limit: PartitionMasses,
    /// Largest change of any cell mass between successive sweep steps.
    pub max_step_change: f64,
    pub stable: bool,
}

/// Tracks partition masses along a sweep ordered toward the limit.
pub fn masses_converge(
    partition: &LocalPartition,
    family: &KernelFamily,
    sweep: &[KernelParam],
) -> Result<MassConvergence> {
    if sweep.is_empty() {
        return Err(Error::InsufficientData("empty sweep".into()));
    }
    let sequence = sweep
        .iter()
        .map(|&p| Ok((p, partition_masses(partition, family, p)?)))
        .collect::<Result<Vec<_>>>()?;
    let max_step_change = sequence
        .windows(2)
        .flat_map(|w| {
            w[0].1
                .weights
                .iter()
                .zip(&w[1].1.weights)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    let limit = sequence.last().expect("non-empty").1.clone();
    Ok(MassConvergence {
        sequence,
        limit,
        max_step_change,
        stable: max_step_change < 1e-9,
    })
}
