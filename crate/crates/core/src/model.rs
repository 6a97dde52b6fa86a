//! Shared domain types, the built-in initial data family, and the closed-form
//! Gaussian and complex-Gaussian expectations used as oracles elsewhere.
//!
//! Every built-in initial datum is smooth with bounded, Hölder continuous second
//! partials. The Hölder exponent is a hypothesis on the data, never a numerical
//! parameter, so it does not appear in any signature here.
//!
//! Axis indices (`j`) are 0-based throughout the library; the CLI and the
//! exported tables use the 1-based convention `j = 1..n`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex value of a KS-family field.
pub type ComplexScalar = Complex64;

/// A point `t` of the closed orthant `[0, inf)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTime(Vec<f64>);

impl MultiTime {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::invalid("a multi-time needs at least one component"));
        }
        if let Some(bad) = t.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("time components must be finite and nonnegative, got {bad}")));
        }
        Ok(Self(t))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    pub fn is_boundary(&self) -> bool {
        !self.is_interior()
    }

    /// Indices of the components equal to zero.
    pub fn zero_axes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.0[i] == 0.0).collect()
    }

    pub fn product(&self) -> f64 {
        self.0.iter().product()
    }

    /// `prod_{i != j} t_i`; equals 1 when `n = 1`.
    pub fn product_except(&self, j: usize) -> f64 {
        product_except(&self.0, j)
    }

    pub fn require_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::NotInterior(self.0.clone()))
        }
    }

    pub fn require_axis(&self, j: usize) -> Result<()> {
        if j < self.n() {
            Ok(())
        } else {
            Err(Error::invalid(format!("axis {j} out of range for n = {}", self.n())))
        }
    }
}

pub(crate) fn product_except(values: &[f64], j: usize) -> f64 {
    values.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| v).product()
}

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacePoint(Vec<f64>);

impl SpacePoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("a space point needs at least one coordinate"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("space coordinates must be finite"));
        }
        Ok(Self(x))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Brownian-time Brownian sheet fields `u`, `script U^(j)`.
    Btbs,
    /// Kuramoto-Sivashinsky sheet fields `u`, `double-struck U^(j)`, `script U^(j)`.
    Ks,
    /// Plain Brownian sheet field `u(t, x) = E f(W^x(t))`.
    Bs,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "btbs" => Ok(Family::Btbs),
            "ks" => Ok(Family::Ks),
            "bs" => Ok(Family::Bs),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub n: usize,
    pub d: usize,
    pub family: Family,
}

impl FieldConfig {
    pub fn new(n: usize, d: usize, family: Family) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("n and d must both be at least 1"));
        }
        Ok(Self { n, d, family })
    }

    pub fn check_time(&self, t: &MultiTime) -> Result<()> {
        if t.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: t.n() });
        }
        Ok(())
    }

    pub fn check_space(&self, x: &SpacePoint) -> Result<()> {
        if x.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.d() });
        }
        Ok(())
    }
}

/// Which analytic value of the initial datum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    Laplacian,
    Bilaplacian,
}

impl Derivative {
    pub fn laplacian_power(self) -> u32 {
        match self {
            Derivative::Value => 0,
            Derivative::Laplacian => 1,
            Derivative::Bilaplacian => 2,
        }
    }
}

/// Built-in initial data.
///
/// `Cosine` is `prod_k cos(theta_k x_k)`; `GaussianBump` is
/// `exp(-|x - center|^2 / (2 width^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Cosine { theta: Vec<f64> },
    GaussianBump { center: Vec<f64>, width: f64 },
    Constant { c: f64 },
}

impl InitialData {
    pub fn cosine(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cosine frequencies must be finite and nonempty"));
        }
        Ok(InitialData::Cosine { theta })
    }

    pub fn gaussian(center: Vec<f64>, width: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gaussian center must be finite and nonempty"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid("gaussian width must be positive"));
        }
        Ok(InitialData::GaussianBump { center, width })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("constant must be finite"));
        }
        Ok(InitialData::Constant { c })
    }

    /// The space dimension the datum is tied to; constants work in any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            InitialData::Cosine { theta } => Some(theta.len()),
            InitialData::GaussianBump { center, .. } => Some(center.len()),
            InitialData::Constant { .. } => None,
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(expected) if expected != d => Err(Error::DimensionMismatch { expected, got: d }),
            _ => Ok(()),
        }
    }

    /// `|theta|^2` for cosine data, `0` for constants; `None` for data that are
    /// not Laplacian eigenfunctions.
    pub fn laplacian_eigenvalue(&self) -> Option<f64> {
        match self {
            InitialData::Cosine { theta } => Some(theta.iter().map(|v| v * v).sum()),
            InitialData::Constant { .. } => Some(0.0),
            InitialData::GaussianBump { .. } => None,
        }
    }

    /// Spatial frequency scale used for choosing quadrature orders.
    pub(crate) fn frequency_scale(&self) -> f64 {
        match self {
            InitialData::Cosine { theta } => theta.iter().map(|v| v * v).sum(),
            InitialData::GaussianBump { width, .. } => 1.0 / (width * width),
            InitialData::Constant { .. } => 0.0,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(match self {
            InitialData::Cosine { theta } => (0..x.len())
                .map(|k| {
                    let rest: f64 = (0..x.len()).filter(|&l| l != k).map(|l| (theta[l] * x[l]).cos()).product();
                    -theta[k] * (theta[k] * x[k]).sin() * rest
                })
                .collect(),
            InitialData::GaussianBump { center, width } => {
                let g = self.value_unchecked(x);
                let w2 = width * width;
                x.iter().zip(center).map(|(xi, ci)| -(xi - ci) / w2 * g).collect()
            }
            InitialData::Constant { .. } => vec![0.0; x.len()],
        })
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        heat_mean(self, 0.0, 0, x)
    }
}

/// Analytic `f`, `Laplacian f` or `bilaplacian f` at `x`.
pub fn eval_initial(f: &InitialData, which: Derivative, x: &SpacePoint) -> Result<f64> {
    f.check_dim(x.d())?;
    Ok(heat_mean(f, 0.0, which.laplacian_power(), x.as_slice()))
}

/// `E[f(W^x(s))]` for a Brownian sheet started at `x`, i.e. the Gaussian mean of
/// `f` with per-coordinate variance `prod s_i`.
pub fn heat_expectation(f: &InitialData, s: &MultiTime, x: &SpacePoint) -> Result<f64> {
    s.require_interior()?;
    f.check_dim(x.d())?;
    Ok(heat_mean(f, s.product(), 0, x.as_slice()))
}

/// `v(s, x) = exp(i sum s_i) * integral f(y) p_{i s}(x, y) dy` in closed form.
pub fn schrodinger_value(f: &InitialData, s: &[f64], x: &SpacePoint) -> Result<ComplexScalar> {
    if s.is_empty() || s.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("time parameters must be finite and nonempty"));
    }
    if s.iter().product::<f64>() == 0.0 {
        return Err(Error::SingularPropagator);
    }
    f.check_dim(x.d())?;
    Ok(schrodinger_mean(f, s, 0, x.as_slice()))
}

/// `Laplacian^k` of the Gaussian mean of `f` with per-coordinate variance
/// `variance >= 0`. At `variance = 0` this is `Laplacian^k f` itself.
///
/// No dimension checks; callers validate.
pub fn heat_mean(f: &InitialData, variance: f64, k: u32, x: &[f64]) -> f64 {
    match f {
        InitialData::Cosine { theta } => {
            let lam: f64 = theta.iter().map(|v| v * v).sum();
            cosine_pattern(theta, x) * (-lam).powi(k as i32) * (-0.5 * lam * variance).exp()
        }
        InitialData::GaussianBump { center, width } => {
            let w = Complex64::new(width * width + variance, 0.0);
            let amp = (width * width / w.re).powf(0.5 * x.len() as f64);
            gaussian_laplacian_power(Complex64::new(amp, 0.0), w, radius_sq(x, center), x.len(), k).re
        }
        InitialData::Constant { c } => {
            if k == 0 {
                *c
            } else {
                0.0
            }
        }
    }
}

/// `d/d(variance)` of [`heat_mean`] with `k = 0`, differentiated directly from the
/// closed forms.
pub fn heat_mean_variance_derivative(f: &InitialData, variance: f64, x: &[f64]) -> f64 {
    match f {
        InitialData::Cosine { theta } => {
            let lam: f64 = theta.iter().map(|v| v * v).sum();
            -0.5 * lam * heat_mean(f, variance, 0, x)
        }
        InitialData::GaussianBump { center, width } => {
            let w = width * width + variance;
            let u = radius_sq(x, center);
            let d = x.len() as f64;
            (-0.5 * d / w + 0.5 * u / (w * w)) * heat_mean(f, variance, 0, x)
        }
        InitialData::Constant { .. } => 0.0,
    }
}

/// `Laplacian^k` of `v(s, x)`; continuous through `prod s_i = 0`, where it
/// reduces to `exp(i sum s_i) Laplacian^k f(x)`.
pub fn schrodinger_mean(f: &InitialData, s: &[f64], k: u32, x: &[f64]) -> Complex64 {
    let phase_sum: f64 = s.iter().sum();
    let prod: f64 = s.iter().product();
    match f {
        InitialData::Cosine { theta } => {
            let lam: f64 = theta.iter().map(|v| v * v).sum();
            let phase = Complex64::new(0.0, phase_sum - 0.5 * lam * prod).exp();
            phase * (cosine_pattern(theta, x) * (-lam).powi(k as i32))
        }
        InitialData::GaussianBump { center, width } => {
            let w2 = width * width;
            let w = Complex64::new(w2, prod);
            // (w^2 / W)^{d/2}; Re W > 0 keeps the principal branch continuous in s.
            let amp = (Complex64::new(w2, 0.0) / w).powf(0.5 * x.len() as f64);
            let g = gaussian_laplacian_power(amp, w, radius_sq(x, center), x.len(), k);
            Complex64::new(0.0, phase_sum).exp() * g
        }
        InitialData::Constant { c } => {
            if k == 0 {
                Complex64::new(0.0, phase_sum).exp() * *c
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
    }
}

fn cosine_pattern(theta: &[f64], x: &[f64]) -> f64 {
    theta.iter().zip(x).map(|(th, xi)| (th * xi).cos()).product()
}

fn radius_sq(x: &[f64], center: &[f64]) -> f64 {
    x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `Laplacian^k [amp * exp(-u / (2 w))]` in `R^d` at `u = |x - c|^2`, with a
/// possibly complex variance parameter `w`.
///
/// Writes `Laplacian^k` as `P_k(u) exp(-u/(2w))` and iterates
/// `Laplacian(P E) = [4u (P'' - P'/w + P/(4w^2)) + 2d (P' - P/(2w))] E`.
fn gaussian_laplacian_power(amp: Complex64, w: Complex64, u: f64, d: usize, k: u32) -> Complex64 {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..k {
        poly = laplacian_of_gaussian_poly(&poly, w, d as f64);
    }
    let p_at_u = poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
    amp * p_at_u * (-u / (2.0 * w)).exp()
}

fn poly_derivative(p: &[Complex64]) -> Vec<Complex64> {
    p.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

fn laplacian_of_gaussian_poly(p: &[Complex64], w: Complex64, d: f64) -> Vec<Complex64> {
    let p1 = poly_derivative(p);
    let p2 = poly_derivative(&p1);
    let coeff = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let mut out = vec![Complex64::new(0.0, 0.0); p.len() + 1];
    for i in 0..p.len() {
        // 4u * (P'' - P'/w + P/(4w^2)) contributes to degree i + 1.
        let a = coeff(&p2, i) - coeff(&p1, i) / w + coeff(p, i) / (4.0 * w * w);
        out[i + 1] += 4.0 * a;
        // 2d * (P' - P/(2w)) contributes to degree i.
        out[i] += 2.0 * d * (coeff(&p1, i) - coeff(p, i) / (2.0 * w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(v: &[f64]) -> SpacePoint {
        SpacePoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cosine_derivatives_at_origin() {
        let f = InitialData::cosine(vec![1.0]).unwrap();
        assert_eq!(eval_initial(&f, Derivative::Laplacian, &sp(&[0.0])).unwrap(), -1.0);
        assert_eq!(eval_initial(&f, Derivative::Bilaplacian, &sp(&[0.0])).unwrap(), 1.0);
    }

    #[test]
    fn constant_laplacian_vanishes() {
        let f = InitialData::constant(2.0).unwrap();
        assert_eq!(eval_initial(&f, Derivative::Laplacian, &sp(&[0.3, -1.0])).unwrap(), 0.0);
        assert_eq!(eval_initial(&f, Derivative::Value, &sp(&[7.0])).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = InitialData::cosine(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            eval_initial(&f, Derivative::Value, &sp(&[0.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn heat_expectation_cosine_matches_characteristic_function() {
        let f = InitialData::cosine(vec![1.0]).unwrap();
        let s = MultiTime::new(vec![2.0]).unwrap();
        let v = heat_expectation(&f, &s, &sp(&[0.0])).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn heat_expectation_of_constant() {
        let f = InitialData::constant(3.0).unwrap();
        let s = MultiTime::new(vec![0.7, 1.9]).unwrap();
        assert_eq!(heat_expectation(&f, &s, &sp(&[4.0, -2.0])).unwrap(), 3.0);
    }

    #[test]
    fn heat_expectation_requires_interior() {
        let f = InitialData::constant(3.0).unwrap();
        let s = MultiTime::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(heat_expectation(&f, &s, &sp(&[0.0])), Err(Error::NotInterior(_))));
    }

    #[test]
    fn schrodinger_cosine_quarter_turn() {
        let f = InitialData::cosine(vec![1.0]).unwrap();
        let v = schrodinger_value(&f, &[std::f64::consts::PI], &sp(&[0.0])).unwrap();
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn schrodinger_constant_is_pure_phase() {
        let f = InitialData::constant(1.0).unwrap();
        let v = schrodinger_value(&f, &[1.0, 1.0], &sp(&[0.4])).unwrap();
        assert!((v - Complex64::new(0.0, 2.0).exp()).norm() < 1e-15);
    }

    #[test]
    fn schrodinger_rejects_zero_product() {
        let f = InitialData::constant(1.0).unwrap();
        assert!(matches!(schrodinger_value(&f, &[1.0, 0.0], &sp(&[0.0])), Err(Error::SingularPropagator)));
    }

    #[test]
    fn gaussian_bilaplacian_in_one_dimension() {
        // f = exp(-y^2/2): f'''' = (y^4 - 6 y^2 + 3) f
        let f = InitialData::gaussian(vec![0.0], 1.0).unwrap();
        for y in [0.0f64, 0.5, 1.3, -2.0] {
            let expected = (y.powi(4) - 6.0 * y * y + 3.0) * (-0.5 * y * y).exp();
            let got = eval_initial(&f, Derivative::Bilaplacian, &sp(&[y])).unwrap();
            assert!((got - expected).abs() < 1e-13, "{y}: {got} vs {expected}");
        }
    }

    #[test]
    fn gaussian_gradient_points_to_center() {
        let f = InitialData::gaussian(vec![1.0, -1.0], 0.5).unwrap();
        let g = f.gradient(&[2.0, -1.0]).unwrap();
        assert!(g[0] < 0.0);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn multitime_predicates() {
        let t = MultiTime::new(vec![0.0, 5.0]).unwrap();
        assert!(t.is_boundary());
        assert!(!t.is_interior());
        assert_eq!(t.zero_axes(), vec![0]);
        assert_eq!(MultiTime::new(vec![2.0]).unwrap().product_except(0), 1.0);
        assert!(MultiTime::new(vec![-1.0]).is_err());
    }
}
