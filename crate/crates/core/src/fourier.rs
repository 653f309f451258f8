//! Fourier coefficients on the circle and square torus, partial sums and
//! Cesaro means. Serves as an independent check on Fejer convolution.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::convolution::TargetFunction;
use crate::error::{Error, Result};
use crate::groups::{reduce_mod1, GroupPoint};
use crate::quadrature::{refine_until, tensor_sum, AxisNodes, AxisSpan, QuadratureSpec, WeightedRule};

const IMAG_RESIDUE: f64 = 1e-10;

/// `e(t) = exp(2 pi i t)`.
pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

fn axis_span(f: &dyn TargetFunction, axis: usize, freq: i64, spec: &QuadratureSpec) -> AxisSpan {
    let jumps = f
        .jumps()
        .into_iter()
        .filter(|c| c.axis == axis)
        .map(|c| reduce_mod1(c.value));
    AxisSpan::linear(0.0, 1.0)
        .with_breakpoints(jumps)
        .with_max_width(1.0 / (spec.panels_per_oscillation as f64 * freq.unsigned_abs().max(1) as f64))
}

fn rule(span: &AxisSpan, level: usize, spec: &QuadratureSpec) -> WeightedRule {
    AxisNodes::build(span, level, spec.nodes_per_panel).into()
}

/// `int_0^1 f(x) e(-n x) dx` by composite Gauss-Legendre with panels split at
/// the jumps of `f` and at least `panels_per_oscillation * |n|` panels.
pub fn fourier_coeff(f: &dyn TargetFunction, n: i64, spec: &QuadratureSpec) -> Result<Complex64> {
    let span = axis_span(f, 0, n, spec);
    let part = |phase: f64| {
        refine_until(spec, &format!("coefficient {n} of {}", f.describe()), |level| {
            let r = rule(&span, level, spec);
            tensor_sum(&[r], |t| {
                f.eval(&GroupPoint::scalar(t[0])) * (2.0 * PI * (n as f64 * t[0]) + phase).cos()
            })
        })
    };
    // e(-n x) = cos(2 pi n x) - i sin(2 pi n x) = cos(2 pi n x) + i cos(2 pi n x + pi/2)
    let re = part(0.0)?;
    let im = part(PI / 2.0)?;
    Ok(Complex64::new(re.value, im.value))
}

fn fourier_coeff2(f: &dyn TargetFunction, n: [i64; 2], spec: &QuadratureSpec) -> Result<Complex64> {
    let spans = [axis_span(f, 0, n[0], spec), axis_span(f, 1, n[1], spec)];
    let part = |phase: f64| {
        refine_until(spec, &format!("coefficient {n:?} of {}", f.describe()), |level| {
            let rules = [rule(&spans[0], level, spec), rule(&spans[1], level, spec)];
            tensor_sum(&rules, |t| {
                let arg = 2.0 * PI * (n[0] as f64 * t[0] + n[1] as f64 * t[1]);
                f.eval(&GroupPoint::new(t)) * (arg + phase).cos()
            })
        })
    };
    Ok(Complex64::new(part(0.0)?.value, part(PI / 2.0)?.value))
}

/// Coefficients `hat f(n)` for `|n_i| <= N`, on the circle (`dim = 1`) or
/// the square torus (`dim = 2`).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficients {
    pub n_max: usize,
    pub dim: usize,
    /// Row-major over `(-N..=N)^dim`.
    pub values: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn compute(f: &dyn TargetFunction, n_max: usize, spec: &QuadratureSpec) -> Result<Self> {
        let n = n_max as i64;
        let values = (-n..=n)
            .map(|k| fourier_coeff(f, k, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_max,
            dim: 1,
            values,
        })
    }

    pub fn compute_square(f: &dyn TargetFunction, n_max: usize, spec: &QuadratureSpec) -> Result<Self> {
        let n = n_max as i64;
        let mut values = Vec::with_capacity((2 * n_max + 1).pow(2));
        for k0 in -n..=n {
            for k1 in -n..=n {
                values.push(fourier_coeff2(f, [k0, k1], spec)?);
            }
        }
        Ok(Self {
            n_max,
            dim: 2,
            values,
        })
    }

    fn index(&self, k: &[i64]) -> Option<usize> {
        let n = self.n_max as i64;
        if k.len() != self.dim || k.iter().any(|k| k.abs() > n) {
            return None;
        }
        let side = 2 * self.n_max + 1;
        Some(k.iter().fold(0, |acc, &ki| acc * side + (ki + n) as usize))
    }

    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        self.index(k).map(|i| self.values[i])
    }

    /// Largest `|hat f(-n) - conj(hat f(n))|`; zero for real targets.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.n_max as i64;
        let mut worst = 0.0f64;
        let mut k = vec![0i64; self.dim];
        let side = 2 * self.n_max + 1;
        for flat in 0..self.values.len() {
            let mut rest = flat;
            for slot in k.iter_mut().rev() {
                *slot = (rest % side) as i64 - n;
                rest /= side;
            }
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            let d = self.values[flat] - self.get(&neg).expect("in range").conj();
            worst = worst.max(d.norm());
        }
        worst
    }

    /// `sum_{|n| <= N} w(n) hat f(n) e(n . x)` with per-axis multiplier `w`.
    fn weighted_sum(&self, m: usize, x: &[f64], weight: impl Fn(i64) -> f64) -> Result<f64> {
        if m > self.n_max {
            return Err(Error::InvalidParam(format!(
                "order {m} exceeds the {} computed coefficients",
                self.n_max
            )));
        }
        if x.len() != self.dim {
            return Err(Error::InvalidPoint(format!(
                "point has {} coordinates, coefficients are {}-dimensional",
                x.len(),
                self.dim
            )));
        }
        let m = m as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        match self.dim {
            1 => {
                for k in -m..=m {
                    acc += weight(k) * self.get(&[k]).expect("in range") * e(k as f64 * x[0]);
                }
            }
            _ => {
                for k0 in -m..=m {
                    for k1 in -m..=m {
                        let w = weight(k0) * weight(k1);
                        let phase = k0 as f64 * x[0] + k1 as f64 * x[1];
                        acc += w * self.get(&[k0, k1]).expect("in range") * e(phase);
                    }
                }
            }
        }
        if acc.im.abs() > IMAG_RESIDUE {
            return Err(Error::Numerical {
                value: acc.re,
                estimate: acc.im.abs(),
                tolerance: IMAG_RESIDUE,
                refinements: 0,
                context: "imaginary residue of a real trigonometric sum".into(),
            });
        }
        Ok(acc.re)
    }

    /// `S_m(f)(x)`.
    pub fn partial_sum(&self, m: usize, x: &[f64]) -> Result<f64> {
        self.weighted_sum(m, x, |_| 1.0)
    }

    /// `sigma_m(f)(x)`, with the product triangular multiplier on the square.
    pub fn cesaro_mean(&self, m: usize, x: &[f64]) -> Result<f64> {
        let m1 = (m + 1) as f64;
        self.weighted_sum(m, x, |k| 1.0 - k.unsigned_abs() as f64 / m1)
    }
}

pub fn partial_sum(f: &dyn TargetFunction, n: usize, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    FourierCoefficients::compute(f, n, spec)?.partial_sum(n, &[x])
}

pub fn cesaro_mean(f: &dyn TargetFunction, n: usize, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    FourierCoefficients::compute(f, n, spec)?.cesaro_mean(n, &[x])
}

/// Square Cesaro mean on the 2-torus.
pub fn square_cesaro_mean(
    f: &dyn TargetFunction,
    n: usize,
    x: [f64; 2],
    spec: &QuadratureSpec,
) -> Result<f64> {
    FourierCoefficients::compute_square(f, n, spec)?.cesaro_mean(n, &x)
}
