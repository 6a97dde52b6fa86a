//! Brownian, Brownian-sheet, Schrödinger-propagator and KS-sheet kernels.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{product_except, FieldConfig, MultiTime, SpacePoint};
use crate::quadrature::rules::{graded_legendre, ComplexCompensatedSum};
use crate::quadrature::{refine, QuadValue, QuadratureSpec};
use crate::verify::{ResidualReport, StencilSpec};

/// Gaussian transition density `(2 pi t)^{-1/2} exp(-(b - a)^2 / (2t))`.
pub fn bm_kernel(t: f64, a: f64, b: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("kernel time must be positive, got {t}")));
    }
    Ok((-(b - a) * (b - a) / (2.0 * t)).exp() / (2.0 * PI * t).sqrt())
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_pair(cfg: &FieldConfig, x: &SpacePoint, y: &SpacePoint) -> Result<()> {
    cfg.check_space(x)?;
    cfg.check_space(y)
}

fn gaussian_density(variance: f64, r2: f64, d: usize) -> f64 {
    (2.0 * PI * variance).powf(-0.5 * d as f64) * (-r2 / (2.0 * variance)).exp()
}

/// Brownian-sheet transition density with per-coordinate variance `prod t_i`.
pub fn bs_kernel(cfg: &FieldConfig, t: &MultiTime, x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    cfg.check_time(t)?;
    check_pair(cfg, x, y)?;
    t.require_interior()?;
    Ok(gaussian_density(t.product(), sq_dist(x.as_slice(), y.as_slice()), cfg.d))
}

/// `Laplacian_x` of the Gaussian density: `K (r^2 / v^2 - d / v)`.
fn gaussian_density_laplacian(variance: f64, r2: f64, d: usize) -> f64 {
    gaussian_density(variance, r2, d) * (r2 / (variance * variance) - d as f64 / variance)
}

/// Centered difference in `t_j` of the sheet density against
/// `(1/2) (prod_{i != j} t_i) Laplacian_x K`.
pub fn bs_kernel_time_derivative_identity(
    cfg: &FieldConfig,
    t: &MultiTime,
    x: &SpacePoint,
    y: &SpacePoint,
    j: usize,
    h: f64,
) -> Result<ResidualReport> {
    cfg.check_time(t)?;
    check_pair(cfg, x, y)?;
    t.require_interior()?;
    t.require_axis(j)?;
    let ts = t.as_slice();
    if !(h > 0.0) || ts[j] - h <= 0.0 {
        return Err(Error::FootprintOutsideDomain(format!("time step {h} at t_{} = {}", j + 1, ts[j])));
    }
    let r2 = sq_dist(x.as_slice(), y.as_slice());
    let at = |dt: f64| {
        let mut tp = ts.to_vec();
        tp[j] += dt;
        gaussian_density(tp.iter().product(), r2, cfg.d)
    };
    let lhs = (at(h) - at(-h)) / (2.0 * h);
    let rhs = 0.5 * product_except(ts, j) * gaussian_density_laplacian(t.product(), r2, cfg.d);
    let stencil = StencilSpec { h_time: h, h_space: 0.0 };
    Ok(ResidualReport::new(lhs.into(), rhs.into(), ts, x.as_slice(), Some(j), Some(stencil)))
}

/// Heat equation `dK/dt = (1/2) d^2K/db^2` for the Brownian density, with the
/// time derivative by centered difference and the space derivative exact.
pub fn bm_heat_residual(t: f64, a: f64, b: f64, h: f64) -> Result<ResidualReport> {
    if !(h > 0.0) || t - h <= 0.0 {
        return Err(Error::FootprintOutsideDomain(format!("time step {h} at t = {t}")));
    }
    let lhs = (bm_kernel(t + h, a, b)? - bm_kernel(t - h, a, b)?) / (2.0 * h);
    let rhs = 0.5 * gaussian_density_laplacian(t, (b - a) * (b - a), 1);
    let stencil = StencilSpec { h_time: h, h_space: 0.0 };
    Ok(ResidualReport::new(lhs.into(), rhs.into(), &[t], &[b], None, Some(stencil)).with_note(format!("a = {a}")))
}

/// `(2 pi z)^{-d/2} exp(-r^2 / (2 z))` with `z = i prod s` on the principal branch.
fn complex_gaussian(z: Complex64, r2: f64, d: usize) -> Complex64 {
    let pref = (-(0.5 * d as f64) * (z * 2.0 * PI).ln()).exp();
    pref * (-r2 / (z * 2.0)).exp()
}

/// Schrödinger propagator `p_{i s}(x, y)` with effective time `i prod s_i`.
pub fn propagator(cfg: &FieldConfig, s: &[f64], x: &SpacePoint, y: &SpacePoint) -> Result<Complex64> {
    if s.len() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: s.len() });
    }
    check_pair(cfg, x, y)?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("time parameters must be finite"));
    }
    let p: f64 = s.iter().product();
    if p == 0.0 {
        return Err(Error::SingularPropagator);
    }
    Ok(complex_gaussian(Complex64::new(0.0, p), sq_dist(x.as_slice(), y.as_slice()), cfg.d))
}

/// Rotation angle of the integration rays, shared across axes.
const KSS_ROTATION: f64 = 0.45;
/// Minimal half-width, in units of `sqrt(t_i)`, of each ray.
const KSS_MIN_TRUNCATION: f64 = 12.0;
const KSS_PANELS: usize = 6;
const KSS_GRADING: f64 = 0.35;
const KSS_BASE_ORDER: usize = 32;

/// KS-sheet kernel `int exp(i sum s) p_{i s}(x, y) prod K^BM_{t_i; 0, s_i} ds`
/// for `d = 1`.
///
/// Each orthant `sigma in {+-1}^n` is mapped by `s_i = sigma_i z_i^2 e^{i phi}`,
/// `phi = -(prod sigma) alpha / n`. The square removes the `|prod s|^{-1/2}`
/// singularity and the rotation turns the propagator's oscillation at small
/// `|prod s|` into decay; the Brownian densities continue analytically and
/// still decay along the rotated rays. `q.order` sets the nodes per panel of a
/// graded composite Gauss-Legendre rule.
pub fn kss_kernel(
    cfg: &FieldConfig,
    t: &MultiTime,
    x: &SpacePoint,
    y: &SpacePoint,
    q: &QuadratureSpec,
) -> Result<QuadValue<Complex64>> {
    if cfg.d != 1 {
        return Err(Error::UnsupportedDimension(cfg.d));
    }
    cfg.check_time(t)?;
    check_pair(cfg, x, y)?;
    t.require_interior()?;
    let n = cfg.n;
    if n > 4 {
        return Err(Error::Unsupported(format!("tensor rules are limited to n <= 4, got {n}")));
    }
    let r2 = sq_dist(x.as_slice(), y.as_slice());
    let truncation = q.truncation.max(KSS_MIN_TRUNCATION);
    let ts = t.as_slice().to_vec();
    let base = q.order.unwrap_or(KSS_BASE_ORDER);
    let cap = match n {
        1 => 1024,
        2 => 128,
        _ => 32,
    }
    .max(base);
    refine(q, base, cap, |order| {
        let rays: Vec<_> = ts
            .iter()
            .map(|ti| graded_legendre(order, (truncation * ti.sqrt()).sqrt(), KSS_PANELS, KSS_GRADING))
            .collect();
        let mut total = ComplexCompensatedSum::default();
        for mask in 0u32..(1 << n) {
            let sigma: Vec<f64> = (0..n).map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 }).collect();
            let sign: f64 = sigma.iter().product();
            let rot = Complex64::from_polar(1.0, -sign * KSS_ROTATION / n as f64);
            total.add(orthant_sum(&rays, &sigma, rot, &ts, r2));
        }
        total.total()
    })
}

fn orthant_sum(
    rays: &[crate::quadrature::rules::Rule],
    sigma: &[f64],
    rot: Complex64,
    t: &[f64],
    r2: f64,
) -> Complex64 {
    let n = rays.len();
    let mut idx = vec![0usize; n];
    let mut acc = ComplexCompensatedSum::default();
    let norm: f64 = t.iter().map(|ti| (2.0 * PI * ti).sqrt()).product();
    loop {
        let mut s_sum = Complex64::new(0.0, 0.0);
        let mut s_prod = Complex64::new(1.0, 0.0);
        let mut gauss_exp = Complex64::new(0.0, 0.0);
        let mut weight = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let z = rays[i].nodes[idx[i]];
            let s = rot * (sigma[i] * z * z);
            s_sum += s;
            s_prod *= s;
            gauss_exp -= s * s / (2.0 * t[i]);
            weight *= rot * (2.0 * z * rays[i].weights[idx[i]]);
        }
        let phase = (Complex64::i() * s_sum + gauss_exp).exp();
        let prop = complex_gaussian(Complex64::i() * s_prod, r2, 1);
        acc.add(phase * prop * weight / norm);
        let mut axis = n;
        loop {
            if axis == 0 {
                return acc.total();
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < rays[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;

    #[test]
    fn bm_kernel_values() {
        assert!((bm_kernel(1.0, 0.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!(bm_kernel(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn bs_kernel_reduces_to_bm() {
        let cfg = FieldConfig::new(2, 1, Family::Bs).unwrap();
        let t = MultiTime::new(vec![2.0, 2.0]).unwrap();
        let x = SpacePoint::new(vec![0.3]).unwrap();
        let y = SpacePoint::new(vec![-0.2]).unwrap();
        let k = bs_kernel(&cfg, &t, &x, &x).unwrap();
        assert!((k - (8.0 * PI).powf(-0.5)).abs() < 1e-15);
        let k = bs_kernel(&cfg, &t, &x, &y).unwrap();
        assert!((k - bm_kernel(4.0, 0.3, -0.2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn propagator_principal_branch() {
        let cfg = FieldConfig::new(1, 1, Family::Ks).unwrap();
        let x = SpacePoint::new(vec![0.0]).unwrap();
        let p = propagator(&cfg, &[1.0], &x, &x).unwrap();
        let c = (2.0 * PI).powf(-0.5) / 2f64.sqrt();
        assert!((p - Complex64::new(c, -c)).norm() < 1e-15);
        let q = propagator(&cfg, &[-1.0], &x, &x).unwrap();
        assert!((q - p.conj()).norm() < 1e-15);
        assert!(matches!(propagator(&cfg, &[0.0], &x, &x), Err(Error::SingularPropagator)));
    }

    #[test]
    fn kss_rejects_higher_dimension() {
        let cfg = FieldConfig::new(1, 2, Family::Ks).unwrap();
        let t = MultiTime::new(vec![1.0]).unwrap();
        let x = SpacePoint::zeros(2);
        assert!(matches!(
            kss_kernel(&cfg, &t, &x, &x, &QuadratureSpec::default()),
            Err(Error::UnsupportedDimension(2))
        ));
    }
}
