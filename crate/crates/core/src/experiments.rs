//! Convergence sweeps: convolve along a parameter sequence, compare with the
//! mass-weighted limit, fit an observed order and write CSV reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::convolution::{convolve, directional_limits, predicted_limit, TargetFunction};
use crate::error::{Error, Result};
use crate::groups::GroupPoint;
use crate::kernels::{KernelFamily, KernelParam};
use crate::partitions::{masses_converge, LocalPartition};
use crate::quadrature::{refine_until, tensor_sum, AxisNodes, AxisSpan, QuadratureSpec};

/// Default tolerance for targets that jump at the evaluation point.
pub const JUMP_TOLERANCE: f64 = 5e-3;
/// Default tolerance for compactly supported kernels on locally constant
/// targets.
pub const LOCAL_TOLERANCE: f64 = 1e-6;

pub const CSV_HEADER: [&str; 5] = ["param", "conv", "quad_err", "abs_err", "runtime_ms"];

#[derive(Clone, Debug, PartialEq)]
pub enum SweepMode {
    /// `n = n0 * 2^k`
    IntGeometric { start: u64 },
    /// `theta = theta0 * rho^k`
    RealGeometric { start: f64, ratio: f64 },
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub count: usize,
}

impl SweepSpec {
    pub fn int(start: u64, count: usize) -> Result<Self> {
        let s = Self {
            mode: SweepMode::IntGeometric { start },
            count,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn real(start: f64, ratio: f64, count: usize) -> Result<Self> {
        let s = Self {
            mode: SweepMode::RealGeometric { start, ratio },
            count,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 3 {
            return Err(Error::Config(format!("a sweep needs at least 3 steps, got {}", self.count)));
        }
        match &self.mode {
            SweepMode::IntGeometric { start } => {
                if *start == 0 {
                    return Err(Error::Config("integer sweep must start at n >= 1".into()));
                }
                if start.checked_mul(1u64.checked_shl(self.count as u32 - 1).unwrap_or(0)).is_none()
                    || self.count > 63
                {
                    return Err(Error::Config("integer sweep overflows".into()));
                }
            }
            SweepMode::RealGeometric { start, ratio } => {
                if !(start.is_finite() && *start > 0.0) {
                    return Err(Error::Config(format!("sweep start {start} must be positive")));
                }
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::Config(format!("sweep ratio {ratio} must lie in (0, 1)")));
                }
            }
            SweepMode::List(v) => {
                if v.len() != self.count {
                    return Err(Error::Config("list sweep count mismatch".into()));
                }
                let inc = v.windows(2).all(|w| w[1] > w[0]);
                let dec = v.windows(2).all(|w| w[1] < w[0]);
                if !(inc || dec) {
                    return Err(Error::Config(format!("list sweep {v:?} is not strictly monotone")));
                }
            }
        }
        Ok(())
    }

    /// Kernel parameters ordered toward the limit.
    pub fn params(&self, family: &KernelFamily) -> Result<Vec<KernelParam>> {
        self.validate()?;
        let params: Vec<KernelParam> = match (&self.mode, family.is_fejer()) {
            (SweepMode::IntGeometric { start }, true) => (0..self.count)
                .map(|k| KernelParam::Order(start << k))
                .collect(),
            (SweepMode::RealGeometric { start, ratio }, false) => (0..self.count)
                .map(|k| KernelParam::Scale(start * ratio.powi(k as i32)))
                .collect(),
            (SweepMode::List(v), true) => {
                if !v.windows(2).all(|w| w[1] > w[0]) {
                    return Err(Error::Config("order sweep must increase".into()));
                }
                v.iter()
                    .map(|&x| {
                        if x >= 0.0 && x.fract() == 0.0 {
                            Ok(KernelParam::Order(x as u64))
                        } else {
                            Err(Error::Config(format!("order {x} is not a nonnegative integer")))
                        }
                    })
                    .collect::<Result<_>>()?
            }
            (SweepMode::List(v), false) => {
                if !v.windows(2).all(|w| w[1] < w[0]) {
                    return Err(Error::Config("scale sweep must decrease".into()));
                }
                v.iter().map(|&x| KernelParam::Scale(x)).collect()
            }
            (_, true) => {
                return Err(Error::Config(format!(
                    "{} is indexed by an integer order; use an int: sweep",
                    family.token()
                )))
            }
            (_, false) => {
                return Err(Error::Config(format!(
                    "{} is indexed by a real scale; use a real: sweep",
                    family.token()
                )))
            }
        };
        for p in &params {
            family.validate_param(*p)?;
        }
        Ok(params)
    }
}

impl FromStr for SweepSpec {
    type Err = Error;

    /// `int:<n0>:<count>`, `real:<theta0>:<ratio>:<count>` or
    /// `list:<v1>,<v2>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Parse(format!("bad sweep `{s}`"));
        let f = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let u = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let spec = match parts.as_slice() {
            ["int", n0, count] => Self {
                mode: SweepMode::IntGeometric { start: u(n0)? },
                count: u(count)? as usize,
            },
            ["real", t0, ratio, count] => Self {
                mode: SweepMode::RealGeometric {
                    start: f(t0)?,
                    ratio: f(ratio)?,
                },
                count: u(count)? as usize,
            },
            ["list", values] => {
                let v = values.split(',').map(f).collect::<Result<Vec<_>>>()?;
                Self {
                    count: v.len(),
                    mode: SweepMode::List(v),
                }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Refused,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Refused => "refused",
        })
    }
}

impl FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            "refused" => Ok(Verdict::Refused),
            _ => Err(Error::Parse(format!("unknown verdict `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FittedOrder {
    Order(f64),
    /// Fewer than three errors rise above the quadrature noise.
    BelowNoise,
    NotFitted,
}

impl fmt::Display for FittedOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FittedOrder::Order(p) => write!(f, "{}", fmt_f64(*p)),
            FittedOrder::BelowNoise => f.write_str("below-noise"),
            FittedOrder::NotFitted => f.write_str("none"),
        }
    }
}

impl FromStr for FittedOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below-noise" => Ok(FittedOrder::BelowNoise),
            "none" => Ok(FittedOrder::NotFitted),
            _ => parse_f64(s).map(FittedOrder::Order),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: KernelParam,
    pub conv: f64,
    pub quad_err: f64,
    pub abs_err: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<SweepRow>,
    pub predicted: Option<f64>,
    pub tolerance: f64,
    pub fitted_order: FittedOrder,
    pub verdict: Verdict,
    /// Why the run failed or was refused; empty on a pass.
    pub reason: String,
}

impl ConvergenceReport {
    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.abs_err)
    }

    fn refused(tolerance: f64, reason: String) -> Self {
        Self {
            rows: Vec::new(),
            predicted: None,
            tolerance,
            fitted_order: FittedOrder::NotFitted,
            verdict: Verdict::Refused,
            reason,
        }
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// Convolves `target` at `x` along `sweep` and compares with
/// `sum_j lambda_j f(x, A_j)`. Unstable cell masses or directional limits
/// give a `Refused` report.
pub fn run_convergence(
    partition: &LocalPartition,
    family: &KernelFamily,
    target: &dyn TargetFunction,
    x: &GroupPoint,
    sweep: &[KernelParam],
    tolerance: f64,
    spec: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    if sweep.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a sweep needs at least 3 steps, got {}",
            sweep.len()
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance {tolerance} must be positive")));
    }
    partition.check_family(family)?;
    let group = *partition.group();
    let x = group.point(x.coords())?;

    let masses = masses_converge(partition, family, sweep)?;
    if !masses.stable {
        return Ok(ConvergenceReport::refused(
            tolerance,
            format!(
                "cell masses change by {:.3e} along the sweep",
                masses.max_step_change
            ),
        ));
    }

    let limits: BTreeMap<String, f64> = match target.declared_limits() {
        Some(declared) => declared.clone(),
        None => {
            let measured = directional_limits(partition, target, &x)?;
            if let Some((label, d)) = measured.iter().find(|(_, d)| !d.stable) {
                let tail: Vec<String> = d.trail[d.trail.len() - 4..]
                    .iter()
                    .map(|(r, v)| format!("{r:.3e}->{v:.6}"))
                    .collect();
                return Ok(ConvergenceReport::refused(
                    tolerance,
                    format!(
                        "directional limit in cell {label} does not stabilize: {}",
                        tail.join(" ")
                    ),
                ));
            }
            measured.into_iter().map(|(k, d)| (k, d.value)).collect()
        }
    };
    let predicted = predicted_limit(&masses.limit, &limits)?;

    let mut rows = Vec::with_capacity(sweep.len());
    let mut reason = String::new();
    for &p in sweep {
        let kernel = family.at(p)?;
        let (est, runtime_ms) = timed(|| convolve(&kernel, target, &x, spec));
        let (conv, quad_err) = match est {
            Ok(e) => (e.value, e.error),
            Err(Error::Numerical {
                value, estimate, ..
            }) => {
                if reason.is_empty() {
                    reason = format!("quadrature did not reach tolerance at {p}: estimate {estimate:.3e}");
                }
                (value, estimate)
            }
            Err(e) => return Err(e),
        };
        rows.push(SweepRow {
            param: p,
            conv,
            quad_err,
            abs_err: (conv - predicted).abs(),
            runtime_ms,
        });
    }

    let noise = rows.iter().map(|r| r.quad_err).fold(0.0, f64::max) + 1e-14;
    let errors: Vec<(KernelParam, f64)> = rows.iter().map(|r| (r.param, r.abs_err)).collect();
    let fitted_order = fit_order(&errors, noise)?;

    let last = rows.last().expect("non-empty");
    let monotone = rows[rows.len() - 3..]
        .windows(2)
        .all(|w| w[1].abs_err <= w[0].abs_err + w[0].quad_err + w[1].quad_err + 1e-12);
    let verdict = if reason.is_empty() && last.abs_err < tolerance && monotone {
        Verdict::Pass
    } else {
        if reason.is_empty() {
            reason = if last.abs_err >= tolerance {
                format!("final error {:.3e} exceeds tolerance {tolerance:.3e}", last.abs_err)
            } else {
                "errors increase over the last three steps".into()
            };
        }
        Verdict::Fail
    };
    Ok(ConvergenceReport {
        rows,
        predicted: Some(predicted),
        tolerance,
        fitted_order,
        verdict,
        reason,
    })
}

/// Least-squares slope of `log error` against `log effective_scale`.
/// Errors at or below `noise` are ignored.
pub fn fit_order(errors: &[(KernelParam, f64)], noise: f64) -> Result<FittedOrder> {
    if errors.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "order fit needs at least 3 errors, got {}",
            errors.len()
        )));
    }
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter(|(_, e)| *e > noise && *e > 0.0)
        .map(|(p, e)| (p.effective_scale().ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Ok(FittedOrder::BelowNoise);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Ok(FittedOrder::NotFitted);
    }
    Ok(FittedOrder::Order(sxy / sxx))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LebesgueReport {
    /// `(r, (1/2r) int_{x-r}^{x+r} |f(y) - f(x)| dy)`
    pub rows: Vec<(f64, f64)>,
    pub limit: f64,
    pub is_lebesgue_point: bool,
}

/// Averaged deviation of `f` from `f(x)` over shrinking intervals on the
/// line.
pub fn lebesgue_point_check(
    f: &dyn TargetFunction,
    x: f64,
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<LebesgueReport> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParam("radii must be positive and non-empty".into()));
    }
    let fx = f.eval(&GroupPoint::scalar(x));
    let jumps: Vec<f64> = f
        .jumps()
        .into_iter()
        .filter(|c| c.axis == 0)
        .map(|c| c.value)
        .collect();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let span = AxisSpan::linear(x - r, x + r).with_breakpoints(jumps.iter().copied());
        let est = refine_until(spec, &format!("deviation average at r={r}"), |level| {
            let rule = AxisNodes::build(&span, level, spec.nodes_per_panel).into();
            tensor_sum(&[rule], |y| (f.eval(&GroupPoint::scalar(y[0])) - fx).abs())
        })?;
        rows.push((r, est.value / (2.0 * r)));
    }
    let limit = rows.last().expect("non-empty").1;
    Ok(LebesgueReport {
        rows,
        limit,
        is_lebesgue_point: limit < 1e-6,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
}

fn fmt_param(p: KernelParam) -> String {
    match p {
        KernelParam::Order(n) => n.to_string(),
        KernelParam::Scale(t) => fmt_f64(t),
    }
}

fn parse_param(s: &str) -> Result<KernelParam> {
    if s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse::<u64>()
            .map(KernelParam::Order)
            .map_err(|e| Error::Parse(e.to_string()))
    } else {
        parse_f64(s).map(KernelParam::Scale)
    }
}

/// Writes the report as CSV followed by one `#` summary line.
pub fn write_report<W: Write>(r: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &r.rows {
        w.write_record([
            fmt_param(row.param),
            fmt_f64(row.conv),
            fmt_f64(row.quad_err),
            fmt_f64(row.abs_err),
            fmt_f64(row.runtime_ms),
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let predicted = r.predicted.map_or("none".to_string(), fmt_f64);
    let reason = r.reason.replace(['\n', '\r'], " ");
    writeln!(
        out,
        "# predicted={predicted} fitted_order={} verdict={} tolerance={} reason={reason}",
        r.fitted_order,
        r.verdict,
        fmt_f64(r.tolerance)
    )?;
    Ok(())
}

pub fn emit_report(r: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_report(r, &mut buf)?;
    buf.flush()?;
    Ok(())
}

pub fn report_to_string(r: &ConvergenceReport) -> Result<String> {
    let mut buf = Vec::new();
    write_report(r, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_report<R: BufRead>(input: R) -> Result<ConvergenceReport> {
    let mut body = String::new();
    let mut summary = None;
    for line in input.lines() {
        let line = line?;
        if let Some(s) = line.strip_prefix("# ") {
            summary = Some(s.to_string());
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let summary = summary.ok_or_else(|| Error::Parse("report has no summary line".into()))?;

    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Parse("unexpected report header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!("row has {} fields", rec.len())));
        }
        rows.push(SweepRow {
            param: parse_param(&rec[0])?,
            conv: parse_f64(&rec[1])?,
            quad_err: parse_f64(&rec[2])?,
            abs_err: parse_f64(&rec[3])?,
            runtime_ms: parse_f64(&rec[4])?,
        });
    }

    let (head, reason) = summary
        .split_once(" reason=")
        .ok_or_else(|| Error::Parse("summary line has no reason field".into()))?;
    let mut fields = BTreeMap::new();
    for kv in head.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad summary field `{kv}`")))?;
        fields.insert(k, v);
    }
    let field = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::Parse(format!("summary line lacks `{k}`")))
    };
    let predicted = match field("predicted")? {
        "none" => None,
        v => Some(parse_f64(v)?),
    };
    Ok(ConvergenceReport {
        rows,
        predicted,
        tolerance: parse_f64(field("tolerance")?)?,
        fitted_order: field("fitted_order")?.parse()?,
        verdict: field("verdict")?.parse()?,
        reason: reason.to_string(),
    })
}

pub fn parse_report(path: impl AsRef<Path>) -> Result<ConvergenceReport> {
    read_report(std::io::BufReader::new(std::fs::File::open(path)?))
}
