//! Finite-difference operators, PDE residuals, and the coefficient algebra of
//! the `2n`-th order Brownian-sheet operator.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Field, FieldValue};
use crate::model::{heat_mean, product_except, FieldConfig, InitialData, MultiTime, SpacePoint};

/// Centered second-order stencil steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilSpec {
    pub h_time: f64,
    pub h_space: f64,
}

impl StencilSpec {
    /// Accuracy order of every stencil in this module.
    pub const ORDER: u32 = 2;

    pub fn new(h_time: f64, h_space: f64) -> Result<Self> {
        if !(h_time > 0.0 && h_space > 0.0 && h_time.is_finite() && h_space.is_finite()) {
            return Err(Error::invalid("stencil steps must be positive and finite"));
        }
        Ok(Self { h_time, h_space })
    }

    /// `h_time = 1e-3 * min_j t_j`, `h_space = 1e-2`.
    pub fn default_for(t: &[f64]) -> Self {
        let tmin = t.iter().cloned().fold(f64::INFINITY, f64::min);
        let h_time = if tmin.is_finite() && tmin > 0.0 { 1e-3 * tmin } else { 1e-3 };
        Self { h_time, h_space: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_residual: f64,
    /// `abs_residual / max(1, |lhs|, |rhs|)`.
    pub rel_residual: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// 0-based axis, when the equation is indexed by one.
    pub j: Option<usize>,
    pub stencil: Option<StencilSpec>,
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn new(
        lhs: Complex64,
        rhs: Complex64,
        t: &[f64],
        x: &[f64],
        j: Option<usize>,
        stencil: Option<StencilSpec>,
    ) -> Self {
        let abs_residual = (lhs - rhs).norm();
        let scale = 1f64.max(lhs.norm()).max(rhs.norm());
        Self {
            lhs,
            rhs,
            abs_residual,
            rel_residual: abs_residual / scale,
            t: t.to_vec(),
            x: x.to_vec(),
            j,
            stencil,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes.extend(notes);
        self
    }
}

/// Evaluates residual probes in parallel; output order matches `probes`.
pub fn sweep<P: Sync>(
    probes: &[P],
    eval: impl Fn(&P) -> Result<ResidualReport> + Sync + Send,
) -> Vec<Result<ResidualReport>> {
    probes.par_iter().map(eval).collect()
}

// ---------------------------------------------------------------------------
// Stencils

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdKind {
    /// `d/dt_j`, 0-based axis.
    DtJ(usize),
    Laplacian,
    Bilaplacian,
    /// `d^n / dt_1 ... dt_n`.
    MixedDtAll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdValue<V> {
    pub value: V,
    /// Set when a forward difference replaced the centered one near `t_j = 0`.
    pub one_sided: bool,
}

/// Weights of `Laplacian_h^k` on the integer lattice, before the `h^{-2k}` scale.
fn laplacian_stencil(d: usize, k: u32) -> BTreeMap<Vec<i32>, f64> {
    let mut current = BTreeMap::new();
    current.insert(vec![0; d], 1.0);
    for _ in 0..k {
        let mut next: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        for (offset, w) in &current {
            *next.entry(offset.clone()).or_insert(0.0) += -2.0 * d as f64 * w;
            for axis in 0..d {
                for step in [-1, 1] {
                    let mut o = offset.clone();
                    o[axis] += step;
                    *next.entry(o).or_insert(0.0) += w;
                }
            }
        }
        next.retain(|_, w| *w != 0.0);
        current = next;
    }
    current
}

/// `Laplacian_h^k g(x)`: the centered discrete Laplacian composed `k` times.
pub fn fd_laplacian_power<V: FieldValue>(g: &dyn Fn(&[f64]) -> Result<V>, x: &[f64], h: f64, k: u32) -> Result<V> {
    let stencil = laplacian_stencil(x.len(), k);
    let mut acc = V::zero();
    let mut point = x.to_vec();
    for (offset, w) in &stencil {
        for ((p, x0), o) in point.iter_mut().zip(x).zip(offset) {
            *p = x0 + h * *o as f64;
        }
        acc = acc + g(&point)? * *w;
    }
    Ok(acc * h.powi(-2 * k as i32))
}

pub fn fd_laplacian<V: FieldValue>(g: &dyn Fn(&[f64]) -> Result<V>, x: &[f64], h: f64) -> Result<V> {
    fd_laplacian_power(g, x, h, 1)
}

pub fn fd_bilaplacian<V: FieldValue>(g: &dyn Fn(&[f64]) -> Result<V>, x: &[f64], h: f64) -> Result<V> {
    fd_laplacian_power(g, x, h, 2)
}

fn fd_dt<V: FieldValue>(field: &dyn Field<Value = V>, j: usize, t: &[f64], x: &[f64], h: f64) -> Result<FdValue<V>> {
    if j >= t.len() {
        return Err(Error::invalid(format!("axis {j} out of range for n = {}", t.len())));
    }
    let at = |dt: f64| -> Result<V> {
        let mut tp = t.to_vec();
        tp[j] += dt;
        field.value(&tp, x)
    };
    if t[j] - h < 0.0 {
        let value = (at(0.0)? * -3.0 + at(h)? * 4.0 - at(2.0 * h)?) * (0.5 / h);
        return Ok(FdValue { value, one_sided: true });
    }
    let value = (at(h)? - at(-h)?) * (0.5 / h);
    Ok(FdValue { value, one_sided: false })
}

fn fd_mixed<V: FieldValue>(field: &dyn Field<Value = V>, t: &[f64], x: &[f64], h: f64) -> Result<V> {
    if let Some(i) = t.iter().position(|ti| ti - h < 0.0) {
        return Err(Error::FootprintOutsideDomain(format!(
            "mixed time stencil needs t_{} >= {h}, got {}",
            i + 1,
            t[i]
        )));
    }
    let n = t.len();
    let mut acc = V::zero();
    let mut tp = t.to_vec();
    for mask in 0u32..(1 << n) {
        let mut sign = 1.0;
        for (i, v) in tp.iter_mut().enumerate() {
            if mask & (1 << i) != 0 {
                *v = t[i] + h;
            } else {
                *v = t[i] - h;
                sign = -sign;
            }
        }
        acc = acc + field.value(&tp, x)? * sign;
    }
    Ok(acc * (2.0 * h).powi(-(n as i32)))
}

/// Applies a centered second-order difference operator to a field at `(t, x)`.
pub fn fd_apply<V: FieldValue>(
    field: &dyn Field<Value = V>,
    kind: FdKind,
    t: &[f64],
    x: &[f64],
    s: &StencilSpec,
) -> Result<FdValue<V>> {
    let centered = |value| Ok(FdValue { value, one_sided: false });
    match kind {
        FdKind::DtJ(j) => fd_dt(field, j, t, x, s.h_time),
        FdKind::Laplacian => centered(fd_laplacian(&|y: &[f64]| field.value(t, y), x, s.h_space)?),
        FdKind::Bilaplacian => centered(fd_bilaplacian(&|y: &[f64]| field.value(t, y), x, s.h_space)?),
        FdKind::MixedDtAll => centered(fd_mixed(field, t, x, s.h_time)?),
    }
}

// ---------------------------------------------------------------------------
// Derivative routes

/// How a residual obtains the derivatives it needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Closed-form or operator-under-the-integral derivatives supplied by the
    /// field; time derivatives fall back to differences if the field has none.
    Analytic,
    /// For Laplacian eigenfunction data, `Laplacian -> -|theta|^2`; time by differences.
    EigenReduced,
    /// Every derivative by finite differences.
    FiniteDifference,
}

struct Ctx<'a> {
    f: &'a InitialData,
    t: &'a [f64],
    x: &'a [f64],
    route: Route,
    stencil: StencilSpec,
    notes: Vec<String>,
}

impl Ctx<'_> {
    fn dt<V: FieldValue>(&mut self, field: &dyn Field<Value = V>, j: usize) -> Result<V> {
        if self.route == Route::Analytic {
            if let Some(v) = field.time_partial(j, self.t, self.x) {
                return v;
            }
        }
        let r = fd_dt(field, j, self.t, self.x, self.stencil.h_time)?;
        if r.one_sided {
            self.notes.push(format!("forward difference in t_{} near the boundary", j + 1));
        }
        Ok(r.value)
    }

    fn lap_power<V: FieldValue>(&self, field: &dyn Field<Value = V>, k: u32) -> Result<V> {
        if k == 0 {
            return field.value(self.t, self.x);
        }
        match self.route {
            Route::Analytic => field
                .laplacian_power(k, self.t, self.x)
                .unwrap_or_else(|| Err(Error::Unsupported("field has no analytic Laplacian".into()))),
            Route::EigenReduced => {
                let lam = self.f.laplacian_eigenvalue().ok_or_else(|| {
                    Error::Unsupported("eigenfunction reduction needs cosine or constant data".into())
                })?;
                Ok(field.value(self.t, self.x)? * (-lam).powi(k as i32))
            }
            Route::FiniteDifference => {
                fd_laplacian_power(&|y: &[f64]| field.value(self.t, y), self.x, self.stencil.h_space, k)
            }
        }
    }

    fn report(self, lhs: Complex64, rhs: Complex64, j: Option<usize>) -> ResidualReport {
        let route = format!("route: {:?}", self.route);
        ResidualReport::new(lhs, rhs, self.t, self.x, j, Some(self.stencil)).with_note(route).with_notes(self.notes)
    }
}

fn validated<'a>(
    cfg: &FieldConfig,
    f: &'a InitialData,
    t: &'a [f64],
    x: &'a [f64],
    route: Route,
    stencil: StencilSpec,
) -> Result<Ctx<'a>> {
    let tt = MultiTime::new(t.to_vec())?;
    cfg.check_time(&tt)?;
    cfg.check_space(&SpacePoint::new(x.to_vec())?)?;
    f.check_dim(cfg.d)?;
    tt.require_interior()?;
    Ok(Ctx { f, t, x, route, stencil, notes: Vec::new() })
}

fn check_axis(cfg: &FieldConfig, j: usize) -> Result<()> {
    if j >= cfg.n {
        return Err(Error::invalid(format!("axis {j} out of range for n = {}", cfg.n)));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// BTBS system

/// All `k in {1,2}^n` with `n < sum k < 2n`, in lexicographic order.
pub fn enumerate_sn(n: usize) -> Result<Vec<Vec<u8>>> {
    if n < 2 {
        return Err(Error::invalid("S_n is defined for n >= 2; use the empty set for n = 1"));
    }
    if n > 20 {
        return Err(Error::invalid("S_n enumeration is limited to n <= 20"));
    }
    let mut out = Vec::with_capacity((1usize << n) - 2);
    for mask in 0u32..(1 << n) {
        if mask == 0 || mask == (1 << n) - 1 {
            continue;
        }
        out.push((0..n).rev().map(|i| if mask & (1 << i) != 0 { 2 } else { 1 }).collect());
    }
    out.sort();
    Ok(out)
}

/// Coefficient of `Laplacian f` in `T_{1,j}`:
/// `sqrt(prod_{i != j} t_i / (2^{4-n} pi^n t_j))`.
pub fn cross_term_coefficient(t: &[f64], j: usize) -> Result<f64> {
    if j >= t.len() {
        return Err(Error::invalid(format!("axis {j} out of range for n = {}", t.len())));
    }
    if t[j] <= 0.0 {
        return Err(Error::NotInterior(t.to_vec()));
    }
    let n = t.len() as i32;
    let denom = 2f64.powi(4 - n) * std::f64::consts::PI.powi(n) * t[j];
    Ok((product_except(t, j) / denom).sqrt())
}

/// `T_{1,j} = coefficient * Laplacian f(x)` or `T_{2,j} = (1/8) Laplacian^2 script U^(j)`.
#[allow(clippy::too_many_arguments)]
pub fn cross_term_t(
    cfg: &FieldConfig,
    f: &InitialData,
    k: u8,
    j: usize,
    t: &[f64],
    x: &[f64],
    script_u: Option<&dyn Field<Value = f64>>,
    route: Route,
    stencil: &StencilSpec,
) -> Result<f64> {
    check_axis(cfg, j)?;
    let ctx = validated(cfg, f, t, x, route, *stencil)?;
    match k {
        1 => Ok(cross_term_coefficient(t, j)? * heat_mean(f, 0.0, 1, x)),
        2 => {
            let su = script_u.ok_or_else(|| Error::invalid("T_{2,j} needs the script U^(j) field"))?;
            Ok(0.125 * ctx.lap_power(su, 2)?)
        }
        _ => Err(Error::invalid(format!("cross-term index must be 1 or 2, got {k}"))),
    }
}

/// `d u / d t_j = T_{1,j} + (1/8) Laplacian^2 script U^(j)`.
#[allow(clippy::too_many_arguments)]
pub fn residual_btbs_system(
    cfg: &FieldConfig,
    f: &InitialData,
    j: usize,
    t: &[f64],
    x: &[f64],
    u: &dyn Field<Value = f64>,
    script_u: &dyn Field<Value = f64>,
    route: Route,
    stencil: &StencilSpec,
) -> Result<ResidualReport> {
    check_axis(cfg, j)?;
    let mut ctx = validated(cfg, f, t, x, route, *stencil)?;
    let lhs = ctx.dt(u, j)?;
    let t1 = cross_term_coefficient(t, j)? * heat_mean(f, 0.0, 1, x);
    let t2 = 0.125 * ctx.lap_power(script_u, 2)?;
    Ok(ctx.report(lhs.to_complex(), (t1 + t2).to_complex(), Some(j)))
}

/// `prod_j T_{1,j} + prod_j T_{2,j} + sum_{k in S_n} prod_j T_{k_j, j}`.
pub fn nonlinear_rhs(t1: &[f64], t2: &[f64]) -> Result<f64> {
    if t1.len() != t2.len() || t1.is_empty() {
        return Err(Error::invalid("cross-term vectors must be nonempty and of equal length"));
    }
    let n = t1.len();
    let mut rhs = t1.iter().product::<f64>() + t2.iter().product::<f64>();
    if n >= 2 {
        for k in enumerate_sn(n)? {
            rhs += k.iter().enumerate().map(|(j, &kj)| if kj == 1 { t1[j] } else { t2[j] }).product::<f64>();
        }
    }
    Ok(rhs)
}

/// Leading coefficient `sqrt(P^{n-2} / (2^{4n - n^2} pi^{n^2}))`, `P = prod t_i`.
pub fn nonlinear_leading_coefficient(t: &[f64]) -> f64 {
    let n = t.len() as i32;
    let p: f64 = t.iter().product();
    (p.powi(n - 2) / (2f64.powi(4 * n - n * n) * std::f64::consts::PI.powi(n * n))).sqrt()
}

/// `prod_j d u/d t_j` against the three right-hand-side groups of the
/// nonlinear BTBS equation. `script_u[j]` is the `script U^(j)` field.
#[allow(clippy::too_many_arguments)]
pub fn residual_btbs_nonlinear(
    cfg: &FieldConfig,
    f: &InitialData,
    t: &[f64],
    x: &[f64],
    u: &dyn Field<Value = f64>,
    script_u: &[&dyn Field<Value = f64>],
    route: Route,
    stencil: &StencilSpec,
) -> Result<ResidualReport> {
    if script_u.len() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: script_u.len() });
    }
    let mut ctx = validated(cfg, f, t, x, route, *stencil)?;
    let n = cfg.n;
    let mut lhs = 1.0;
    for j in 0..n {
        lhs *= ctx.dt(u, j)?;
    }
    let lap_f = heat_mean(f, 0.0, 1, x);
    let t1: Vec<f64> = (0..n).map(|j| cross_term_coefficient(t, j).map(|c| c * lap_f)).collect::<Result<_>>()?;
    let t2: Vec<f64> = script_u.iter().map(|su| ctx.lap_power(*su, 2).map(|v| 0.125 * v)).collect::<Result<_>>()?;
    let mut rhs = nonlinear_leading_coefficient(t) * lap_f.powi(n as i32) + t2.iter().product::<f64>();
    if n >= 2 {
        for k in enumerate_sn(n)? {
            rhs += k.iter().enumerate().map(|(j, &kj)| if kj == 1 { t1[j] } else { t2[j] }).product::<f64>();
        }
    }
    Ok(ctx.report(lhs.to_complex(), rhs.to_complex(), None))
}

// ---------------------------------------------------------------------------
// Brownian-sheet system

/// `d u / d t_j = (1/2) (prod_{i != j} t_i) Laplacian u`.
#[allow(clippy::too_many_arguments)]
pub fn residual_bs_system(
    cfg: &FieldConfig,
    f: &InitialData,
    j: usize,
    t: &[f64],
    x: &[f64],
    u: &dyn Field<Value = f64>,
    route: Route,
    stencil: &StencilSpec,
) -> Result<ResidualReport> {
    check_axis(cfg, j)?;
    let mut ctx = validated(cfg, f, t, x, route, *stencil)?;
    let lhs = ctx.dt(u, j)?;
    let rhs = 0.5 * product_except(t, j) * ctx.lap_power(u, 1)?;
    Ok(ctx.report(lhs.to_complex(), rhs.to_complex(), Some(j)))
}

/// `prod_j d u/d t_j = (P^{n-1} / 2^n) (Laplacian u)^n`.
pub fn residual_bs_nonlinear(
    cfg: &FieldConfig,
    f: &InitialData,
    t: &[f64],
    x: &[f64],
    u: &dyn Field<Value = f64>,
    route: Route,
    stencil: &StencilSpec,
) -> Result<ResidualReport> {
    let mut ctx = validated(cfg, f, t, x, route, *stencil)?;
    let n = cfg.n as i32;
    let mut lhs = 1.0;
    for j in 0..cfg.n {
        lhs *= ctx.dt(u, j)?;
    }
    let p: f64 = t.iter().product();
    let rhs = p.powi(n - 1) / 2f64.powi(n) * ctx.lap_power(u, 1)?.powi(n);
    Ok(ctx.report(lhs.to_complex(), rhs.to_complex(), None))
}

/// Polynomial in `t_1..t_n` with rational coefficients, keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    pub terms: BTreeMap<Vec<u32>, Ratio<i64>>,
}

impl Polynomial {
    fn monomial(exponents: Vec<u32>, c: Ratio<i64>) -> Self {
        let mut terms = BTreeMap::new();
        if c != Ratio::from_integer(0) {
            terms.insert(exponents, c);
        }
        Self { terms }
    }

    fn add_term(&mut self, exponents: Vec<u32>, c: Ratio<i64>) {
        let e = self.terms.entry(exponents.clone()).or_insert_with(|| Ratio::from_integer(0));
        *e += c;
        if *e == Ratio::from_integer(0) {
            self.terms.remove(&exponents);
        }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let c = *c.numer() as f64 / *c.denom() as f64;
                c * e.iter().zip(t).map(|(&k, &ti)| ti.powi(k as i32)).product::<f64>()
            })
            .sum()
    }

    fn derivative(&self, var: usize) -> Self {
        let mut out = Self::default();
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut e2 = e.clone();
                e2[var] -= 1;
                out.add_term(e2, c * e[var] as i64);
            }
        }
        out
    }

    /// Multiplies by `(1/2) prod_{i != j} t_i`.
    fn times_half_product_except(&self, j: usize) -> Self {
        let mut out = Self::default();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            for (i, k) in e2.iter_mut().enumerate() {
                if i != j {
                    *k += 1;
                }
            }
            out.add_term(e2, c * Ratio::new(1, 2));
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(out, " + ")?;
            }
            write!(out, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(out, " t{}", i + 1)?,
                    _ => write!(out, " t{}^{k}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffSource {
    /// The operator rows `L_1..L_4` as printed in the literature.
    PrintedTable,
    /// Derived by differentiating in `t_1, ..., t_n` using the sheet system.
    Recursion,
}

/// `d^n u / dt_1 ... dt_n = sum_k c_k(t) Laplacian^k u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LnOperator {
    pub n: usize,
    /// `k -> c_k(t)`.
    pub coefficients: BTreeMap<u32, Polynomial>,
}

impl LnOperator {
    pub fn eval(&self, t: &[f64]) -> Vec<(u32, f64)> {
        self.coefficients.iter().map(|(k, c)| (*k, c.eval(t))).collect()
    }
}

impl fmt::Display for LnOperator {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "L_{} =", self.n)?;
        for (idx, (k, c)) in self.coefficients.iter().enumerate() {
            let sep = if idx == 0 { " " } else { " + " };
            write!(out, "{sep}({c}) Lap^{k}")?;
        }
        Ok(())
    }
}

pub fn ln_operator(n: usize, source: CoeffSource) -> Result<LnOperator> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    match source {
        CoeffSource::Recursion => {
            if n > 8 {
                return Err(Error::invalid("the recursion is limited to n <= 8"));
            }
            let mut coeffs: BTreeMap<u32, Polynomial> = BTreeMap::new();
            coeffs.insert(0, Polynomial::monomial(vec![0; n], Ratio::from_integer(1)));
            for m in 0..n {
                let mut next: BTreeMap<u32, Polynomial> = BTreeMap::new();
                for (k, c) in &coeffs {
                    for (e, v) in c.derivative(m).terms {
                        next.entry(*k).or_default().add_term(e, v);
                    }
                    for (e, v) in c.times_half_product_except(m).terms {
                        next.entry(k + 1).or_default().add_term(e, v);
                    }
                }
                next.retain(|_, p| !p.terms.is_empty());
                coeffs = next;
            }
            Ok(LnOperator { n, coefficients: coeffs })
        }
        CoeffSource::PrintedTable => {
            // (k, coefficient, exponent of t_1 t_2 t_3 restricted to the printed variables)
            let rows: &[(u32, (i64, i64), &[u32])] = match n {
                1 => &[(1, (1, 2), &[0])],
                2 => &[(1, (1, 2), &[0, 0]), (2, (1, 4), &[1, 1])],
                3 => &[(1, (1, 2), &[0, 0, 0]), (2, (3, 4), &[1, 1, 1]), (3, (1, 8), &[2, 2, 2])],
                4 => &[
                    (1, (1, 2), &[0, 0, 0, 0]),
                    (2, (8, 4), &[1, 1, 1, 0]),
                    (3, (5, 8), &[2, 2, 2, 0]),
                    (4, (1, 16), &[3, 3, 3, 0]),
                ],
                _ => return Err(Error::invalid("the printed table covers n = 1..4 only")),
            };
            let coefficients =
                rows.iter().map(|(k, (p, q), e)| (*k, Polynomial::monomial(e.to_vec(), Ratio::new(*p, *q)))).collect();
            Ok(LnOperator { n, coefficients })
        }
    }
}

/// `d^n u / dt_1...dt_n` by differences against `sum_k c_k(t) Laplacian^k u`.
#[allow(clippy::too_many_arguments)]
pub fn residual_bs_2n(
    cfg: &FieldConfig,
    f: &InitialData,
    t: &[f64],
    x: &[f64],
    u: &dyn Field<Value = f64>,
    source: CoeffSource,
    route: Route,
    stencil: &StencilSpec,
) -> Result<ResidualReport> {
    let ctx = validated(cfg, f, t, x, route, *stencil)?;
    let op = ln_operator(cfg.n, source)?;
    let lhs = fd_mixed(u, t, x, stencil.h_time)?;
    let mut rhs = 0.0;
    for (k, c) in op.eval(t) {
        rhs += c * ctx.lap_power(u, k)?;
    }
    let note = format!("coefficients: {source:?}");
    Ok(ctx.report(lhs.to_complex(), rhs.to_complex(), None).with_note(note))
}

// ---------------------------------------------------------------------------
// KS system

/// `d u/d t_j = -(1/8) Laplacian^2 script U^(j) - (1/2) Laplacian U^(j) - (1/2) u`.
#[allow(clippy::too_many_arguments)]
pub fn residual_ks_system(
    cfg: &FieldConfig,
    f: &InitialData,
    j: usize,
    t: &[f64],
    x: &[f64],
    u: &dyn Field<Value = Complex64>,
    linear_u: &dyn Field<Value = Complex64>,
    script_u: &dyn Field<Value = Complex64>,
    route: Route,
    stencil: &StencilSpec,
) -> Result<ResidualReport> {
    check_axis(cfg, j)?;
    let mut ctx = validated(cfg, f, t, x, route, *stencil)?;
    let lhs = ctx.dt(u, j)?;
    let rhs = ctx.lap_power(script_u, 2)? * -0.125 - ctx.lap_power(linear_u, 1)? * 0.5 - u.value(t, x)? * 0.5;
    Ok(ctx.report(lhs, rhs, Some(j)))
}
