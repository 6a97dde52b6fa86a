//! Reproducible sampling of Brownian times, BTBS points and Brownian-sheet grids,
//! and Monte Carlo estimators built on them.
//!
//! Randomness comes from ChaCha8 keyed by `(seed, stream_id)`. Sample `i`
//! belongs to block `i / BLOCK_SIZE`, and each block reads its own ChaCha
//! stream, so any block can be generated without the others. Block statistics
//! are merged in block order, making every estimator independent of the worker
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::model::{heat_mean, product_except, FieldConfig, InitialData, MultiTime, SpacePoint};
use crate::quadrature::Moment;

/// Samples per counter block.
pub const BLOCK_SIZE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Sibling stream with a shifted id.
    pub fn substream(&self, offset: u64) -> Self {
        Self { seed: self.seed, stream_id: self.stream_id.wrapping_add(offset) }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut state = splitmix(self.seed) ^ splitmix(self.stream_id.rotate_left(32) ^ 0xA076_1D64_78BD_642F);
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    /// Generator for counter block `block`.
    pub fn block(&self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(block);
        rng
    }

    /// Generator for sequential use (block 0).
    pub fn rng(&self) -> ChaCha8Rng {
        self.block(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub stream_id: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.n as f64 / n as f64);
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64);
        Moments { n, mean, m2 }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Mean of `sample(rng)` over `n` draws, split into counter blocks and reduced
/// in block order.
fn block_estimate(
    n: u64,
    stream: &RngStream,
    workers: usize,
    sample: impl Fn(&mut ChaCha8Rng) -> f64 + Sync,
) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::invalid("at least two samples are needed"));
    }
    let blocks = n.div_ceil(BLOCK_SIZE as u64);
    let per_block = |b: u64| {
        let mut rng = stream.block(b);
        let count = (n - b * BLOCK_SIZE as u64).min(BLOCK_SIZE as u64);
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(sample(&mut rng));
        }
        m
    };
    let parts: Vec<Moments> = pool(workers)?.install(|| (0..blocks).into_par_iter().map(per_block).collect());
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.n - 1) as f64;
    Ok(Estimate {
        value: total.mean,
        stderr: (variance.max(0.0) / total.n as f64).sqrt(),
        n_samples: total.n,
        seed: stream.seed,
        stream_id: stream.stream_id,
    })
}

/// `(|B^(1)(t_1)|, ..., |B^(n)(t_n)|)`; component `i` is exactly 0 when `t_i = 0`.
pub fn sample_brownian_times<R: Rng + ?Sized>(t: &MultiTime, rng: &mut R) -> Vec<f64> {
    t.as_slice()
        .iter()
        .map(|ti| {
            let z: f64 = rng.sample(StandardNormal);
            z.abs() * ti.sqrt()
        })
        .collect()
}

/// One draw `(s, w)` of the BTBS started at `x`: Brownian times `s` and
/// `w ~ N(x, (prod s_i) I_d)`.
pub fn sample_btbs_point<R: Rng + ?Sized>(
    cfg: &FieldConfig,
    t: &MultiTime,
    x: &SpacePoint,
    rng: &mut R,
) -> Result<(Vec<f64>, SpacePoint)> {
    cfg.check_time(t)?;
    cfg.check_space(x)?;
    let s = sample_brownian_times(t, rng);
    let mut w = Vec::with_capacity(cfg.d);
    fill_sheet_point(&s, x.as_slice(), rng, &mut w);
    Ok((s, SpacePoint::new(w)?))
}

fn fill_sheet_point<R: Rng + ?Sized>(s: &[f64], x: &[f64], rng: &mut R, out: &mut Vec<f64>) {
    let sd = s.iter().product::<f64>().sqrt();
    out.clear();
    for xi in x {
        let z: f64 = rng.sample(StandardNormal);
        out.push(if sd == 0.0 { *xi } else { xi + sd * z });
    }
}

/// Monte Carlo estimate of the BTBS field `u` (`Moment::Plain`) or
/// `script U^(j)` (`Moment::Quadratic`).
#[allow(clippy::too_many_arguments)]
pub fn mc_btbs_moment(
    cfg: &FieldConfig,
    f: &InitialData,
    moment: Moment,
    t: &MultiTime,
    x: &SpacePoint,
    n_samples: u64,
    stream: &RngStream,
    workers: usize,
) -> Result<Estimate> {
    cfg.check_time(t)?;
    cfg.check_space(x)?;
    f.check_dim(cfg.d)?;
    match moment {
        Moment::Plain => {}
        Moment::Quadratic(j) => t.require_axis(j)?,
        Moment::Linear(_) => return Err(Error::invalid("BTBS moments use p = 0 or p = 2")),
    }
    let xs = x.as_slice();
    block_estimate(n_samples, stream, workers, |rng| {
        let s = sample_brownian_times(t, rng);
        let mut w = Vec::with_capacity(xs.len());
        fill_sheet_point(&s, xs, rng, &mut w);
        moment.weight(&s) * heat_mean(f, 0.0, 0, &w)
    })
}

/// Monte Carlo estimate of the Brownian-sheet field `E f(W^x(t))`, drawing
/// `W^x(t) ~ N(x, (prod t_i) I_d)` directly.
pub fn mc_bs_mean(
    cfg: &FieldConfig,
    f: &InitialData,
    t: &MultiTime,
    x: &SpacePoint,
    n_samples: u64,
    stream: &RngStream,
    workers: usize,
) -> Result<Estimate> {
    cfg.check_time(t)?;
    cfg.check_space(x)?;
    f.check_dim(cfg.d)?;
    let xs = x.as_slice();
    let s = t.as_slice();
    block_estimate(n_samples, stream, workers, |rng| {
        let mut w = Vec::with_capacity(xs.len());
        fill_sheet_point(s, xs, rng, &mut w);
        heat_mean(f, 0.0, 0, &w)
    })
}

/// One Brownian-sheet realization on a tensor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetSample {
    pub knots: Vec<Vec<f64>>,
    pub d: usize,
    /// Row-major over the knot grid (last axis fastest), `d` values per point.
    pub values: Vec<f64>,
}

impl SheetSample {
    pub fn shape(&self) -> Vec<usize> {
        self.knots.iter().map(Vec::len).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.knots).fold(0, |acc, (i, k)| acc * k.len() + i)
    }

    pub fn at(&self, idx: &[usize]) -> &[f64] {
        let p = self.flat_index(idx) * self.d;
        &self.values[p..p + self.d]
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.d.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multi-index of flat position `flat`.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.knots.len()];
        for (i, k) in self.knots.iter().enumerate().rev() {
            idx[i] = flat % k.len();
            flat /= k.len();
        }
        idx
    }
}

/// Exact joint sample of the `n`-parameter, `R^d`-valued sheet (started at 0)
/// on the grid `knots[0] x ... x knots[n-1]`, from independent rectangle
/// increments and an `n`-fold cumulative sum.
pub fn sample_sheet_grid<R: Rng + ?Sized>(cfg: &FieldConfig, knots: &[Vec<f64>], rng: &mut R) -> Result<SheetSample> {
    if knots.len() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: knots.len() });
    }
    for (i, k) in knots.iter().enumerate() {
        if k.first() != Some(&0.0) {
            return Err(Error::invalid(format!("knots on axis {} must start at 0", i + 1)));
        }
        if k.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid(format!("knots on axis {} must be strictly increasing", i + 1)));
        }
    }
    let d = cfg.d;
    let mut sample = SheetSample { knots: knots.to_vec(), d, values: Vec::new() };
    let total: usize = knots.iter().map(Vec::len).product();
    sample.values = vec![0.0; total * d];
    for flat in 0..total {
        let idx = sample.multi_index(flat);
        if idx.contains(&0) {
            continue;
        }
        let area: f64 = idx.iter().zip(knots).map(|(&i, k)| k[i] - k[i - 1]).product();
        let sd = area.sqrt();
        for c in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            sample.values[flat * d + c] = sd * z;
        }
    }
    let shape = sample.shape();
    let mut stride = d;
    for axis in (0..cfg.n).rev() {
        let len = shape[axis];
        for flat in 0..total {
            let idx_axis = (flat / (stride / d)) % len;
            if idx_axis == 0 {
                continue;
            }
            let prev = (flat - stride / d) * d;
            for c in 0..d {
                sample.values[flat * d + c] += sample.values[prev + c];
            }
        }
        stride *= len;
    }
    Ok(sample)
}

/// Monte Carlo means of `M(s_j) = u(t with t_j -> t_j - s_j, W(s_j))`, where
/// `W(s_j)` is the sheet started at `x` evaluated at `t` with `t_j -> s_j`.
/// All probes share one stream (common random numbers); `s_j = 0` is exact.
#[allow(clippy::too_many_arguments)]
pub fn martingale_probe(
    cfg: &FieldConfig,
    u: &dyn Field<Value = f64>,
    j: usize,
    t: &MultiTime,
    x: &SpacePoint,
    probes: &[f64],
    n_samples: u64,
    stream: &RngStream,
    workers: usize,
) -> Result<Vec<Estimate>> {
    cfg.check_time(t)?;
    cfg.check_space(x)?;
    t.require_axis(j)?;
    let ts = t.as_slice();
    if let Some(bad) = probes.iter().find(|&&s| !(s >= 0.0 && s < ts[j])) {
        return Err(Error::invalid(format!("probe {bad} is outside [0, t_{}) = [0, {})", j + 1, ts[j])));
    }
    let others = product_except(ts, j);
    probes
        .iter()
        .map(|&sj| {
            let mut tp = ts.to_vec();
            tp[j] = ts[j] - sj;
            let sd = (sj * others).sqrt();
            let xs = x.as_slice();
            let est = block_estimate(n_samples, stream, workers, |rng| {
                let w: Vec<f64> = xs
                    .iter()
                    .map(|xi| {
                        let z: f64 = rng.sample(StandardNormal);
                        if sd == 0.0 {
                            *xi
                        } else {
                            xi + sd * z
                        }
                    })
                    .collect();
                u.value(&tp, &w).unwrap_or(f64::NAN)
            })?;
            if !est.value.is_finite() {
                return Err(Error::invalid("field evaluation failed inside the martingale probe"));
            }
            Ok(est)
        })
        .collect()
}
