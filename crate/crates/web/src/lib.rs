//! Browser bindings for fejerlab: kernel profiles, cell masses and
//! convergence sweeps, each returned as a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fejerlab::experiments::SweepSpec;
use fejerlab::partitions::partition_masses;
use fejerlab::{
    run_convergence, GroupChart, GroupKind, KernelFamily, KernelParam, LocalPartition,
    QuadratureSpec, Target,
};

#[derive(Serialize, Debug)]
pub struct Profile {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Serialize, Debug)]
pub struct Masses {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Serialize, Debug)]
pub struct Row {
    pub param: f64,
    pub conv: f64,
    pub quad_err: f64,
    pub abs_err: f64,
}

#[derive(Serialize, Debug)]
pub struct Sweep {
    pub predicted: Option<f64>,
    pub verdict: String,
    pub fitted_order: String,
    pub reason: String,
    pub rows: Vec<Row>,
}

fn param_for(family: &KernelFamily, value: f64) -> Result<KernelParam, String> {
    let p = if family.is_fejer() {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(format!("Fejer order must be a non-negative integer, got {value}"));
        }
        KernelParam::Order(value as u64)
    } else {
        KernelParam::Scale(value)
    };
    family.validate_param(p).map_err(|e| e.to_string())?;
    Ok(p)
}

fn default_partition(group: &GroupChart) -> Result<LocalPartition, String> {
    let token = match group.kind() {
        GroupKind::AxB => "axb4",
        GroupKind::Heisenberg => "heis8",
        _ if group.dimension() == 1 => "halves",
        _ => "orthants",
    };
    LocalPartition::from_token(token, group, None).map_err(|e| e.to_string())
}

fn parse_coords(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{t}`: {e}")))
        .collect()
}

/// Kernel values along the first coordinate axis through the identity,
/// on `samples` points of `[-radius, radius]`.
pub fn profile(
    group: &str,
    family: &str,
    param: f64,
    radius: f64,
    samples: usize,
) -> Result<Profile, String> {
    let group: GroupChart = group.parse().map_err(|e: fejerlab::Error| e.to_string())?;
    let family = KernelFamily::from_token(family, &group).map_err(|e| e.to_string())?;
    let kernel = family.at(param_for(&family, param)?).map_err(|e| e.to_string())?;
    if samples < 2 || !(radius > 0.0) {
        return Err("need at least 2 samples and a positive radius".into());
    }
    let e = group.identity();
    let mut t = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = -radius + 2.0 * radius * i as f64 / (samples - 1) as f64;
        let mut c = e.coords().to_vec();
        c[0] += s;
        let v = group
            .point(&c)
            .and_then(|y| kernel.eval(&y))
            .unwrap_or(f64::NAN);
        t.push(s);
        values.push(v);
    }
    Ok(Profile { t, values })
}

/// Kernel mass of each cell of the default partition of `group`.
pub fn masses(group: &str, family: &str, param: f64) -> Result<Masses, String> {
    let group: GroupChart = group.parse().map_err(|e: fejerlab::Error| e.to_string())?;
    let family = KernelFamily::from_token(family, &group).map_err(|e| e.to_string())?;
    let partition = default_partition(&group)?;
    let m = partition_masses(&partition, &family, param_for(&family, param)?)
        .map_err(|e| e.to_string())?;
    Ok(Masses {
        labels: m.labels,
        weights: m.weights,
    })
}

/// Convergence sweep of `function` at `point` on the default partition.
pub fn sweep(
    group: &str,
    family: &str,
    function: &str,
    point: &str,
    sweep: &str,
    tolerance: f64,
) -> Result<Sweep, String> {
    let group: GroupChart = group.parse().map_err(|e: fejerlab::Error| e.to_string())?;
    let family = KernelFamily::from_token(family, &group).map_err(|e| e.to_string())?;
    let partition = default_partition(&group)?;
    let x = group.point(&parse_coords(point)?).map_err(|e| e.to_string())?;
    let target = Target::from_token(function, &group, &partition, &x).map_err(|e| e.to_string())?;
    let params = sweep
        .parse::<SweepSpec>()
        .and_then(|s| s.params(&family))
        .map_err(|e| e.to_string())?;
    let r = run_convergence(
        &partition,
        &family,
        &target,
        &x,
        &params,
        tolerance,
        &QuadratureSpec::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(Sweep {
        predicted: r.predicted,
        verdict: r.verdict.to_string(),
        fitted_order: r.fitted_order.to_string(),
        reason: r.reason,
        rows: r
            .rows
            .iter()
            .map(|row| Row {
                param: row.param.value(),
                conv: row.conv,
                quad_err: row.quad_err,
                abs_err: row.abs_err,
            })
            .collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn kernel_profile(
    group: &str,
    family: &str,
    param: f64,
    radius: f64,
    samples: usize,
) -> Result<String, JsValue> {
    to_js(profile(group, family, param, radius, samples))
}

#[wasm_bindgen]
pub fn cell_masses(group: &str, family: &str, param: f64) -> Result<String, JsValue> {
    to_js(masses(group, family, param))
}

#[wasm_bindgen]
pub fn convergence_sweep(
    group: &str,
    family: &str,
    function: &str,
    point: &str,
    sweep_spec: &str,
    tolerance: f64,
) -> Result<String, JsValue> {
    to_js(sweep(group, family, function, point, sweep_spec, tolerance))
}
