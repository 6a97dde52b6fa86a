//! Deterministic evaluation of the integral representations of the BTBS and
//! KS-sheet fields, plus their temporal boundary formulas.
//!
//! Both families integrate an inner closed-form expectation against the product
//! of Brownian densities `prod_i K^BM_{t_i; 0, s_i}`, after the axis scaling
//! `s_i = sqrt(t_i) z_i`:
//!
//! * BTBS fields live on the half-orthant. The representation carries the
//!   explicit `2^n` factor and each axis uses a truncated Gauss-Legendre rule on
//!   `[0, truncation]` in scaled units (the integrand is smooth up to `z_i = 0`).
//! * KS fields live on all of `R^n` and the integrand is entire, so each axis
//!   uses a probabilists' Gauss-Hermite rule directly.
//!
//! The moment weights `(prod_{i != j} s_i)^p` are part of the integrand, never
//! of the rule, so a single node set serves `u` and every weighted field.

pub mod rules;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    heat_mean, product_except, schrodinger_mean, ComplexScalar, FieldConfig, InitialData, MultiTime, SpacePoint,
};
use crate::verify::{fd_bilaplacian, ResidualReport, StencilSpec};
use rules::{gauss_hermite, gauss_legendre_on, ComplexCompensatedSum, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One tensor evaluation at the resolved order, checked against half the order.
    GaussHermiteTensor,
    /// Doubles the order until the refinement estimate meets the tolerance.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Per-axis order; `None` picks one from the data and the time point.
    pub order: Option<usize>,
    /// Half-width of the integration window in units of `sqrt(t_i)`.
    pub truncation: f64,
    pub refinement_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { scheme: Scheme::Adaptive, order: None, truncation: 10.0, refinement_tol: 1e-9 }
    }
}

impl QuadratureSpec {
    pub fn fixed(order: usize) -> Self {
        Self { scheme: Scheme::GaussHermiteTensor, order: Some(order), ..Self::default() }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.refinement_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if let Some(order) = self.order {
            if order < 2 {
                return Err(Error::invalid("quadrature order must be at least 2"));
            }
        }
        if !(self.truncation > 0.0 && self.refinement_tol > 0.0) {
            return Err(Error::invalid("truncation and refinement tolerance must be positive"));
        }
        Ok(())
    }
}

/// Lowest order picked automatically.
pub const ORDER_FLOOR: usize = 40;

/// Largest per-axis order for an `n`-parameter tensor rule (cost grows as
/// `order^n`; n > 4 is not supported).
pub fn max_order(n: usize) -> usize {
    match n {
        1 => 2048,
        2 => 512,
        3 => 112,
        _ => 48,
    }
}

/// Per-axis order that keeps oscillatory resolution uniform: linear in
/// `sqrt(max t_i) * (1 + |theta|^2 prod sqrt(t_i))`, floored at 40.
pub fn auto_order(f: &InitialData, t: &MultiTime) -> usize {
    let t_max = t.as_slice().iter().cloned().fold(0.0, f64::max);
    let root_prod: f64 = t.as_slice().iter().map(|v| v.sqrt()).product();
    let scale = t_max.sqrt() * (1.0 + f.frequency_scale() * root_prod);
    ((12.0 * scale).ceil() as usize).clamp(ORDER_FLOOR, max_order(t.n()))
}

/// A quadrature value with its refinement error estimate
/// `|value(order) - value(ceil(order / 2))|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadValue<V> {
    pub value: V,
    pub error: f64,
    pub order: usize,
}

/// Which member of a field family to evaluate; `j` is the 0-based axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    /// `u`, weight 1.
    Plain,
    /// `double-struck U^(j)`, weight `prod_{i != j} s_i` (KS family only).
    Linear(usize),
    /// `script U^(j)`, weight `(prod_{i != j} s_i)^2`.
    Quadratic(usize),
}

impl Moment {
    /// From the `(p, j)` convention with a 0-based `j`.
    pub fn from_power(p: u8, j: Option<usize>) -> Result<Self> {
        match (p, j) {
            (0, _) => Ok(Moment::Plain),
            (1, Some(j)) => Ok(Moment::Linear(j)),
            (2, Some(j)) => Ok(Moment::Quadratic(j)),
            (1 | 2, None) => Err(Error::invalid(format!("moment p = {p} needs an axis index j"))),
            _ => Err(Error::invalid(format!("moment power must be 0, 1 or 2, got {p}"))),
        }
    }

    pub fn power(&self) -> u8 {
        match self {
            Moment::Plain => 0,
            Moment::Linear(_) => 1,
            Moment::Quadratic(_) => 2,
        }
    }

    pub fn axis(&self) -> Option<usize> {
        match self {
            Moment::Plain => None,
            Moment::Linear(j) | Moment::Quadratic(j) => Some(*j),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.axis() {
            Some(j) if j >= n => Err(Error::invalid(format!("axis {j} out of range for n = {n}"))),
            _ => Ok(()),
        }
    }

    /// The weight at a Brownian-time vector `s`.
    pub fn weight(&self, s: &[f64]) -> f64 {
        match *self {
            Moment::Plain => 1.0,
            Moment::Linear(j) => product_except(s, j),
            Moment::Quadratic(j) => {
                let p = product_except(s, j);
                p * p
            }
        }
    }
}

fn std_normal_density(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Scaled half-line rule for one BTBS axis: nodes in `s`, weights include the
/// standard-normal density of `z = s / sqrt(t)`.
fn half_line_axis(order: usize, t: f64, truncation: f64) -> Rule {
    let base = gauss_legendre_on(order, 0.0, truncation);
    let scale = t.sqrt();
    Rule {
        nodes: base.nodes.iter().map(|z| scale * z).collect(),
        weights: base.nodes.iter().zip(&base.weights).map(|(z, w)| w * std_normal_density(*z)).collect(),
    }
}

fn full_line_axis(order: usize, t: f64) -> Rule {
    let base = gauss_hermite(order);
    let scale = t.sqrt();
    Rule { nodes: base.nodes.iter().map(|z| scale * z).collect(), weights: base.weights.to_vec() }
}

/// Row-major tensor sum `sum_k prod_i w_{i,k_i} g(s_k)` with a fixed
/// summation order.
pub(crate) fn tensor_sum(axes: &[Rule], mut integrand: impl FnMut(&[f64]) -> Complex64) -> Complex64 {
    let n = axes.len();
    if axes.iter().any(|a| a.is_empty()) {
        return Complex64::new(0.0, 0.0);
    }
    let mut idx = vec![0usize; n];
    let mut s: Vec<f64> = axes.iter().map(|a| a.nodes[0]).collect();
    let mut acc = ComplexCompensatedSum::default();
    loop {
        let w: f64 = (0..n).map(|i| axes[i].weights[idx[i]]).product();
        if w != 0.0 {
            acc.add(integrand(&s) * w);
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return acc.total();
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < axes[axis].len() {
                s[axis] = axes[axis].nodes[idx[axis]];
                break;
            }
            idx[axis] = 0;
            s[axis] = axes[axis].nodes[0];
        }
    }
}

/// Runs a tensor rule at the requested order and at half that order, refining
/// per the scheme.
pub(crate) fn refine(
    spec: &QuadratureSpec,
    base_order: usize,
    cap: usize,
    mut eval: impl FnMut(usize) -> Complex64,
) -> Result<QuadValue<Complex64>> {
    let mut order = base_order.max(2);
    let mut coarse_order = order.div_ceil(2);
    let mut coarse = eval(coarse_order);
    loop {
        let fine = eval(order);
        let error = (fine - coarse).norm();
        if error <= spec.refinement_tol {
            return Ok(QuadValue { value: fine, error, order });
        }
        let exhausted = spec.scheme == Scheme::GaussHermiteTensor || order * 2 > cap;
        if exhausted {
            return Err(Error::Accuracy { coarse_order, coarse, fine_order: order, fine, tol: spec.refinement_tol });
        }
        coarse_order = order;
        coarse = fine;
        order *= 2;
    }
}

fn validate_common(cfg: &FieldConfig, f: &InitialData, moment: &Moment, t: &MultiTime, x: &SpacePoint) -> Result<()> {
    cfg.check_time(t)?;
    cfg.check_space(x)?;
    f.check_dim(cfg.d)?;
    moment.check(cfg.n)
}

/// BTBS field `u` (`Moment::Plain`) or `script U^(j)` (`Moment::Quadratic`) at an
/// interior `t`.
pub fn quad_btbs_moment(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
    q: &QuadratureSpec,
) -> Result<QuadValue<f64>> {
    quad_btbs_laplacian_power(cfg, f, moment, t, x, q, 0)
}

/// `Laplacian^k` of a BTBS field, computed by moving the operator under the
/// integral onto the closed-form inner expectation.
pub fn quad_btbs_laplacian_power(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
    q: &QuadratureSpec,
    k: u32,
) -> Result<QuadValue<f64>> {
    validate_common(cfg, f, &moment, t, x)?;
    if matches!(moment, Moment::Linear(_)) {
        return Err(Error::invalid("the BTBS family has no first-power moment"));
    }
    t.require_interior()?;
    q.validate()?;
    let base = q.order.unwrap_or_else(|| auto_order(f, t));
    if let InitialData::Constant { c } = f {
        // E[(prod_{i != j} |B_i(t_i)|)^2] = prod_{i != j} t_i; Laplacians vanish.
        let value = match (k, moment) {
            (0, Moment::Quadratic(j)) => c * t.product_except(j),
            (0, _) => *c,
            _ => 0.0,
        };
        return Ok(QuadValue { value, error: 0.0, order: base });
    }
    let n = cfg.n;
    let xs = x.as_slice();
    let fold = 2f64.powi(n as i32);
    let res = refine(q, base, max_order(n), |order| {
        let axes: Vec<Rule> = t.as_slice().iter().map(|&ti| half_line_axis(order, ti, q.truncation)).collect();
        let v = tensor_sum(&axes, |s| {
            let variance: f64 = s.iter().product();
            Complex64::new(moment.weight(s) * heat_mean(f, variance, k, xs), 0.0)
        });
        v * fold
    })?;
    Ok(QuadValue { value: res.value.re, error: res.error, order: res.order })
}

/// Temporal boundary values of the BTBS fields:
/// `u = f(x)`; `script U^(j) = 0` when some `t_i = 0` with `i != j`;
/// `script U^(j) = (prod_{i != j} t_i) f(x)` when `t_j = 0`.
pub fn btbs_boundary_values(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
) -> Result<f64> {
    validate_common(cfg, f, &moment, t, x)?;
    if t.is_interior() {
        return Err(Error::NotOnBoundary(t.as_slice().to_vec()));
    }
    let fx = heat_mean(f, 0.0, 0, x.as_slice());
    match moment {
        Moment::Plain => Ok(fx),
        Moment::Quadratic(j) => {
            let others_touch = t.zero_axes().iter().any(|&i| i != j);
            if others_touch {
                Ok(0.0)
            } else {
                Ok(t.product_except(j) * fx)
            }
        }
        Moment::Linear(_) => Err(Error::invalid("the BTBS family has no first-power moment")),
    }
}

/// KS-sheet field `u`, `double-struck U^(j)` or `script U^(j)` at an interior `t`.
pub fn quad_ks_moment(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
    q: &QuadratureSpec,
) -> Result<QuadValue<ComplexScalar>> {
    quad_ks_laplacian_power(cfg, f, moment, t, x, q, 0)
}

/// `Laplacian^k` of a KS-sheet field via the operator under the integral.
pub fn quad_ks_laplacian_power(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
    q: &QuadratureSpec,
    k: u32,
) -> Result<QuadValue<ComplexScalar>> {
    validate_common(cfg, f, &moment, t, x)?;
    t.require_interior()?;
    q.validate()?;
    let base = q.order.unwrap_or_else(|| auto_order(f, t));
    let xs = x.as_slice();
    refine(q, base, max_order(cfg.n), |order| {
        let axes: Vec<Rule> = t.as_slice().iter().map(|&ti| full_line_axis(order, ti)).collect();
        tensor_sum(&axes, |s| schrodinger_mean(f, s, k, xs) * moment.weight(s))
    })
}

/// Temporal boundary definitions of the KS-sheet fields on the face where the
/// axes in `zero_set` vanish. Components of `t` listed in `zero_set` are ignored.
///
/// For the weighted fields only `zero_set = {j}` and nonempty subsets of the
/// complement of `{j}` are defined.
pub fn ks_boundary_values(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    zero_set: &[usize],
    t: &MultiTime,
    x: &SpacePoint,
) -> Result<ComplexScalar> {
    validate_common(cfg, f, &moment, t, x)?;
    if zero_set.is_empty() {
        return Err(Error::invalid("the zero set of a boundary face must be nonempty"));
    }
    if let Some(&bad) = zero_set.iter().find(|&&i| i >= cfg.n) {
        return Err(Error::invalid(format!("axis {bad} out of range for n = {}", cfg.n)));
    }
    let fx = heat_mean(f, 0.0, 0, x.as_slice());
    let ts = t.as_slice();
    let in_set = |k: usize| zero_set.contains(&k);
    match moment {
        Moment::Plain => {
            let sum: f64 = (0..cfg.n).filter(|&k| !in_set(k)).map(|k| ts[k]).sum();
            Ok(Complex64::new(fx * (-0.5 * sum).exp(), 0.0))
        }
        Moment::Linear(j) | Moment::Quadratic(j) => {
            let only_j = zero_set.iter().all(|&k| k == j);
            let avoids_j = !in_set(j);
            if avoids_j {
                return Ok(Complex64::new(0.0, 0.0));
            }
            if !only_j {
                return Err(Error::invalid(format!(
                    "boundary face {zero_set:?} is not covered by the boundary definitions for axis {j}"
                )));
            }
            let others = (0..cfg.n).filter(|&k| k != j);
            let sum: f64 = others.clone().map(|k| ts[k]).sum();
            let factor = others.fold(Complex64::new(1.0, 0.0), |acc, k| {
                let tk = ts[k];
                acc * match moment {
                    Moment::Linear(_) => Complex64::new(0.0, tk),
                    _ => Complex64::new(tk - tk * tk, 0.0),
                }
            });
            Ok(factor * (fx * (-0.5 * sum).exp()))
        }
    }
}

/// Compares the finite-difference bilaplacian of a quadrature field value with
/// the quadrature of the analytically bilaplaced integrand.
pub fn commutation_check(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
    q: &QuadratureSpec,
    h: f64,
) -> Result<ResidualReport> {
    if !(h > 0.0) {
        return Err(Error::invalid("spatial step must be positive"));
    }
    let (lhs, rhs) = match cfg.family {
        crate::model::Family::Ks => {
            let field = |xp: &[f64]| -> Result<Complex64> {
                let p = SpacePoint::new(xp.to_vec())?;
                Ok(quad_ks_moment(cfg, f, moment, t, &p, q)?.value)
            };
            let lhs = fd_bilaplacian(&field, x.as_slice(), h)?;
            let rhs = quad_ks_laplacian_power(cfg, f, moment, t, x, q, 2)?.value;
            (lhs, rhs)
        }
        _ => {
            let field = |xp: &[f64]| -> Result<f64> {
                let p = SpacePoint::new(xp.to_vec())?;
                Ok(quad_btbs_moment(cfg, f, moment, t, &p, q)?.value)
            };
            let lhs = fd_bilaplacian(&field, x.as_slice(), h)?;
            let rhs = quad_btbs_laplacian_power(cfg, f, moment, t, x, q, 2)?.value;
            (Complex64::new(lhs, 0.0), Complex64::new(rhs, 0.0))
        }
    };
    let stencil = StencilSpec { h_time: 0.0, h_space: h };
    Ok(ResidualReport::new(lhs, rhs, t.as_slice(), x.as_slice(), moment.axis(), Some(stencil))
        .with_note("lhs: FD bilaplacian of quadrature; rhs: quadrature of bilaplaced integrand"))
}
