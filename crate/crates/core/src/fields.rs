//! Field evaluators: anything that maps `(t, x)` to a real or complex value,
//! optionally with analytic spatial or temporal derivatives.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    heat_mean, heat_mean_variance_derivative, product_except, FieldConfig, InitialData, MultiTime, SpacePoint,
};
use crate::quadrature::{
    btbs_boundary_values, ks_boundary_values, quad_btbs_laplacian_power, quad_ks_laplacian_power, Moment,
    QuadratureSpec,
};

/// Scalars a field can take: `f64` or `Complex64`.
pub trait FieldValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync + std::fmt::Debug + 'static
{
    fn zero() -> Self;
    fn to_complex(self) -> Complex64;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl FieldValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

pub trait Field: Sync {
    type Value: FieldValue;

    fn value(&self, t: &[f64], x: &[f64]) -> Result<Self::Value>;

    /// `Laplacian^k` in closed form (or by an independent deterministic route),
    /// when available.
    fn laplacian_power(&self, _k: u32, _t: &[f64], _x: &[f64]) -> Option<Result<Self::Value>> {
        None
    }

    /// `d/dt_j` in closed form, when available.
    fn time_partial(&self, _j: usize, _t: &[f64], _x: &[f64]) -> Option<Result<Self::Value>> {
        None
    }
}

/// Adapts a closure `(t, x) -> value` to [`Field`].
pub struct FnField<F>(pub F);

impl<V: FieldValue, F: Fn(&[f64], &[f64]) -> Result<V> + Sync> Field for FnField<F> {
    type Value = V;

    fn value(&self, t: &[f64], x: &[f64]) -> Result<V> {
        (self.0)(t, x)
    }
}

fn points(cfg: &FieldConfig, t: &[f64], x: &[f64]) -> Result<(MultiTime, SpacePoint)> {
    let t = MultiTime::new(t.to_vec())?;
    let x = SpacePoint::new(x.to_vec())?;
    cfg.check_time(&t)?;
    cfg.check_space(&x)?;
    Ok((t, x))
}

/// The Brownian-sheet field `u(t, x) = E f(W^x(t))`, defined on the closed orthant.
pub struct HeatField {
    pub cfg: FieldConfig,
    pub f: InitialData,
}

impl HeatField {
    pub fn new(cfg: FieldConfig, f: InitialData) -> Result<Self> {
        f.check_dim(cfg.d)?;
        Ok(Self { cfg, f })
    }
}

impl Field for HeatField {
    type Value = f64;

    fn value(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        let (t, x) = points(&self.cfg, t, x)?;
        Ok(heat_mean(&self.f, t.product(), 0, x.as_slice()))
    }

    fn laplacian_power(&self, k: u32, t: &[f64], x: &[f64]) -> Option<Result<f64>> {
        Some(points(&self.cfg, t, x).map(|(t, x)| heat_mean(&self.f, t.product(), k, x.as_slice())))
    }

    fn time_partial(&self, j: usize, t: &[f64], x: &[f64]) -> Option<Result<f64>> {
        Some(points(&self.cfg, t, x).and_then(|(t, x)| {
            t.require_axis(j)?;
            let dv = heat_mean_variance_derivative(&self.f, t.product(), x.as_slice());
            Ok(dv * product_except(t.as_slice(), j))
        }))
    }
}

/// BTBS field `u` or `script U^(j)` by quadrature; boundary points use the
/// boundary formulas.
pub struct BtbsField {
    pub cfg: FieldConfig,
    pub f: InitialData,
    pub moment: Moment,
    pub quad: QuadratureSpec,
}

impl BtbsField {
    pub fn new(cfg: FieldConfig, f: InitialData, moment: Moment, quad: QuadratureSpec) -> Result<Self> {
        f.check_dim(cfg.d)?;
        if matches!(moment, Moment::Linear(_)) {
            return Err(Error::invalid("the BTBS family has no first-power moment"));
        }
        Ok(Self { cfg, f, moment, quad })
    }
}

impl Field for BtbsField {
    type Value = f64;

    fn value(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        let (t, x) = points(&self.cfg, t, x)?;
        if t.is_boundary() {
            return btbs_boundary_values(&self.cfg, &self.f, self.moment, &t, &x);
        }
        Ok(quad_btbs_laplacian_power(&self.cfg, &self.f, self.moment, &t, &x, &self.quad, 0)?.value)
    }

    fn laplacian_power(&self, k: u32, t: &[f64], x: &[f64]) -> Option<Result<f64>> {
        Some(points(&self.cfg, t, x).and_then(|(t, x)| {
            Ok(quad_btbs_laplacian_power(&self.cfg, &self.f, self.moment, &t, &x, &self.quad, k)?.value)
        }))
    }
}

/// KS-sheet field `u`, `double-struck U^(j)` or `script U^(j)` by quadrature;
/// boundary points use the boundary definitions on the face of vanishing axes.
pub struct KsField {
    pub cfg: FieldConfig,
    pub f: InitialData,
    pub moment: Moment,
    pub quad: QuadratureSpec,
}

impl KsField {
    pub fn new(cfg: FieldConfig, f: InitialData, moment: Moment, quad: QuadratureSpec) -> Result<Self> {
        f.check_dim(cfg.d)?;
        Ok(Self { cfg, f, moment, quad })
    }
}

impl Field for KsField {
    type Value = Complex64;

    fn value(&self, t: &[f64], x: &[f64]) -> Result<Complex64> {
        let (t, x) = points(&self.cfg, t, x)?;
        if t.is_boundary() {
            return ks_boundary_values(&self.cfg, &self.f, self.moment, &t.zero_axes(), &t, &x);
        }
        Ok(quad_ks_laplacian_power(&self.cfg, &self.f, self.moment, &t, &x, &self.quad, 0)?.value)
    }

    fn laplacian_power(&self, k: u32, t: &[f64], x: &[f64]) -> Option<Result<Complex64>> {
        Some(points(&self.cfg, t, x).and_then(|(t, x)| {
            Ok(quad_ks_laplacian_power(&self.cfg, &self.f, self.moment, &t, &x, &self.quad, k)?.value)
        }))
    }
}
