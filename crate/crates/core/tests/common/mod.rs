//! Independent oracles for integration tests: adaptive Gauss-Kronrod
//! integration, closed forms, and a two-sample Kolmogorov-Smirnov statistic.
#![allow(dead_code)]

use num_complex::Complex64;
use statrs::function::erf::erfc;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<V>(f: &impl Fn(f64) -> V, a: f64, b: f64) -> (V, f64)
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Sub<Output = V> + std::ops::Mul<f64, Output = V> + Norm,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x), f(c + x));
        kron = kron + (f1 + f2) * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[i / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

pub trait Norm {
    fn norm(self) -> f64;
}
impl Norm for f64 {
    fn norm(self) -> f64 {
        self.abs()
    }
}
impl Norm for Complex64 {
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

/// Adaptive 15-point Gauss-Kronrod integration on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<V>(f: impl Fn(f64) -> V, a: f64, b: f64, tol: f64) -> V
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Sub<Output = V> + std::ops::Mul<f64, Output = V> + Norm,
{
    fn rec<V, F: Fn(f64) -> V>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> V
    where
        V: Copy + std::ops::Add<Output = V> + std::ops::Sub<Output = V> + std::ops::Mul<f64, Output = V> + Norm,
    {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(&f, a, b, tol, 0)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_density(t: f64, s: f64) -> f64 {
    (-s * s / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}

/// `2 e^{a^2 t / 2} Phi(-a sqrt t)`: `2 int_0^inf K_t(s) e^{-a s} ds`.
pub fn half_line_laplace(a: f64, t: f64) -> f64 {
    2.0 * (a * a * t / 2.0).exp() * normal_cdf(-a * t.sqrt())
}

/// Single-parameter BTBS field for cosine data `cos(theta x)`.
pub fn btbs_n1(t: f64, theta: f64, x: f64) -> f64 {
    half_line_laplace(theta * theta / 2.0, t) * (theta * x).cos()
}

/// Two-parameter BTBS field for `cos(theta x)`, inner integral in closed form.
pub fn btbs_n2(t1: f64, t2: f64, theta: f64, x: f64) -> f64 {
    let a = theta * theta / 2.0;
    let outer =
        integrate(|s1| 2.0 * normal_density(t1, s1) * half_line_laplace(a * s1, t2), 0.0, 14.0 * t1.sqrt(), 1e-14);
    outer * (theta * x).cos()
}

/// Two-parameter BTBS `script U^(j)` for `cos(theta x)`: nested adaptive integration.
pub fn btbs_n2_quadratic(t: [f64; 2], j: usize, theta: f64, x: f64) -> f64 {
    let lam = theta * theta;
    let v = integrate(
        |s1| {
            integrate(
                |s2| {
                    let w = if j == 0 { s2 * s2 } else { s1 * s1 };
                    4.0 * normal_density(t[0], s1) * normal_density(t[1], s2) * w * (-0.5 * lam * s1 * s2).exp()
                },
                0.0,
                14.0 * t[1].sqrt(),
                1e-13,
            )
        },
        0.0,
        14.0 * t[0].sqrt(),
        1e-12,
    );
    v * (theta * x).cos()
}

/// Single-parameter KS field for `cos(theta x)`.
pub fn ks_n1(t: f64, theta: f64, x: f64) -> f64 {
    let q = 1.0 - theta * theta / 2.0;
    (theta * x).cos() * (-t * q * q / 2.0).exp()
}

/// Two-parameter KS field for `cos(theta x)` (`|theta|^2 = lam`).
pub fn ks_n2(t1: f64, t2: f64, theta: f64, x: f64) -> Complex64 {
    let c = theta * theta / 2.0;
    let a = 1.0 / t1 + t2 * c * c;
    let b = Complex64::new(t2 * c, 1.0);
    (b * b / (2.0 * a) - t2 / 2.0).exp() / (t1 * a).sqrt() * (theta * x).cos()
}

/// Single-parameter KS kernel via its spatial Fourier transform.
pub fn kss_n1_fourier(t: f64, r: f64) -> f64 {
    let k_max = 2.0 * (2.0 + 12.0 / t.sqrt()).sqrt();
    integrate(
        |k| {
            let q = 1.0 - k * k / 2.0;
            (k * r).cos() * (-t * q * q / 2.0).exp()
        },
        0.0,
        k_max,
        1e-14,
    ) / std::f64::consts::PI
}

/// Two-sample Kolmogorov-Smirnov statistic `D`.
pub fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample statistic at level 0.01.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
