//! Gauss-Hermite and Gauss-Legendre node/weight tables.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Hermite,
    Legendre,
}

type RuleCache = Mutex<HashMap<(Kind, usize), Arc<Rule>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(kind: Kind, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
    map.entry((kind, n)).or_insert_with(|| Arc::new(build(n))).clone()
}

/// Probabilists' Gauss-Hermite rule: `sum w_k g(z_k) ~ E[g(Z)]`, `Z ~ N(0, 1)`.
/// Weights sum to one.
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    cached(Kind::Hermite, n, build_hermite)
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    cached(Kind::Legendre, n, build_legendre)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Rule {
    let base = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    Rule {
        nodes: base.nodes.iter().map(|z| mid + half * z).collect(),
        weights: base.weights.iter().map(|w| w * half).collect(),
    }
}

/// Composite Gauss-Legendre rule on `[0, b]` with panels graded geometrically
/// toward zero: `[0, b q^(m-1)], ..., [b q, b]`.
pub fn graded_legendre(n: usize, b: f64, panels: usize, ratio: f64) -> Rule {
    let mut edges = vec![0.0];
    for k in (1..panels).rev() {
        edges.push(b * ratio.powi(k as i32));
    }
    edges.push(b);
    let mut nodes = Vec::with_capacity(n * panels);
    let mut weights = Vec::with_capacity(n * panels);
    for pair in edges.windows(2) {
        let r = gauss_legendre_on(n, pair[0], pair[1]);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    Rule { nodes, weights }
}

const NEWTON_EPS: f64 = 3.0e-14;
const MAX_NEWTON: usize = 100;

fn build_hermite(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Hermite order must be positive");
    // Physicists' rule for weight exp(-x^2): roots bracketed by Sturm bisection
    // on the Jacobi matrix, polished by Newton on the orthonormal recurrence
    // (rescaled on the fly), then mapped to the standard normal.
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut log_w = vec![f64::NEG_INFINITY; n];
    for i in 0..n.div_ceil(2) {
        let mut z = jacobi_eigenvalue(n, n - 1 - i);
        let mut lw = f64::NEG_INFINITY;
        for _ in 0..MAX_NEWTON {
            let (p_n, p_nm1, log_scale) = hermite_pair(n, z);
            let step = p_n / ((2.0 * nf).sqrt() * p_nm1);
            lw = -(nf.ln() + 2.0 * (p_nm1.abs().ln() + log_scale));
            z -= step;
            if step.abs() <= NEWTON_EPS * z.abs().max(1.0) {
                break;
            }
        }
        x[n - 1 - i] = z;
        x[i] = -z;
        log_w[i] = lw;
        log_w[n - 1 - i] = lw;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let log_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
    let nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let weights: Vec<f64> = log_w.iter().map(|v| (v - log_sqrt_pi).exp()).collect();
    Rule { nodes, weights }
}

/// The `k`-th smallest eigenvalue of the Hermite Jacobi matrix (zero diagonal,
/// off-diagonal `sqrt(m / 2)`), by Sturm-count bisection.
fn jacobi_eigenvalue(n: usize, k: usize) -> f64 {
    let count_below = |lam: f64| {
        let mut count = 0;
        let mut q = -lam;
        for m in 0..n {
            if m > 0 {
                let q_prev = if q == 0.0 { f64::EPSILON } else { q };
                q = -lam - 0.5 * m as f64 / q_prev;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bound = 2.0 * (0.5 * n as f64).sqrt() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > 1e-9 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Orthonormal Hermite values `(p_n(z), p_{n-1}(z))` divided by `exp(log_scale)`.
fn hermite_pair(n: usize, z: f64) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
            log_scale += BIG.ln();
        }
    }
    (p1, p2, log_scale)
}

fn build_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..MAX_NEWTON {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// Neumaier-compensated accumulator; summation order is fixed by the caller.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexCompensatedSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexCompensatedSum {
    pub fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}
