//! C ABI over the `btbs` library.
//!
//! A `BtbsLab` handle owns a field configuration and initial datum. Every
//! entry point returns a `BtbsStatus`; on failure the message is available
//! from `btbs_last_error` on the same thread. Panics never cross the boundary.
//! Axis indices are 0-based; pass a negative `j` when no axis applies.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use btbs::fields::{BtbsField, Field, HeatField, KsField};
use btbs::model::{Family, FieldConfig, InitialData, MultiTime, SpacePoint};
use btbs::quadrature::{quad_btbs_moment, quad_ks_moment, Moment, QuadratureSpec, Scheme};
use btbs::sampler::{mc_btbs_moment, RngStream};
use btbs::verify::{
    residual_bs_nonlinear, residual_bs_system, residual_btbs_nonlinear, residual_btbs_system, residual_ks_system,
    ResidualReport, Route, StencilSpec,
};
use btbs::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtbsStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    /// Quadrature refinement did not reach its tolerance.
    Accuracy = 3,
    /// Input outside the domain of the requested quantity.
    Domain = 4,
    Internal = 5,
}

pub const BTBS_FAMILY_BTBS: u32 = 0;
pub const BTBS_FAMILY_KS: u32 = 1;
pub const BTBS_FAMILY_BS: u32 = 2;

/// Parameters: `theta[0..d]`.
pub const BTBS_DATA_COSINE: u32 = 0;
/// Parameters: `center[0..d]`, then `width`.
pub const BTBS_DATA_GAUSSIAN: u32 = 1;
/// Parameters: `c`.
pub const BTBS_DATA_CONSTANT: u32 = 2;

pub const BTBS_SYSTEM_BTBS_LIN: u32 = 0;
pub const BTBS_SYSTEM_BTBS_NONLIN: u32 = 1;
pub const BTBS_SYSTEM_BS_LIN: u32 = 2;
pub const BTBS_SYSTEM_BS_NONLIN: u32 = 3;
pub const BTBS_SYSTEM_KS: u32 = 4;

pub const BTBS_ROUTE_ANALYTIC: u32 = 0;
pub const BTBS_ROUTE_EIGEN: u32 = 1;
pub const BTBS_ROUTE_FD: u32 = 2;

/// Opaque handle.
pub struct BtbsLab {
    cfg: FieldConfig,
    f: InitialData,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(BtbsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Accuracy { .. } => BtbsStatus::Accuracy,
            Error::NotInterior(_)
            | Error::NotOnBoundary(_)
            | Error::SingularPropagator
            | Error::UnsupportedDimension(_)
            | Error::FootprintOutsideDomain(_)
            | Error::Unsupported(_) => BtbsStatus::Domain,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => BtbsStatus::Internal,
            _ => BtbsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(BtbsStatus::InvalidArgument, msg.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> BtbsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            BtbsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BtbsStatus::Internal
        }
    }
}

unsafe fn lab_ref<'a>(lab: *const BtbsLab) -> Result<&'a BtbsLab, Failure> {
    lab.as_ref().ok_or(Failure(BtbsStatus::NullPointer, "null lab handle".into()))
}

unsafe fn read<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure(BtbsStatus::NullPointer, format!("null {what} pointer")));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn write<T>(ptr: *mut T, value: T) {
    if !ptr.is_null() {
        *ptr = value;
    }
}

fn moment(p: u32, j: i32) -> Result<Moment, Failure> {
    let axis = if j < 0 { None } else { Some(j as usize) };
    Ok(Moment::from_power(u8::try_from(p).map_err(|_| invalid("p out of range"))?, axis)?)
}

fn points(lab: &BtbsLab, t: &[f64], x: &[f64]) -> Result<(MultiTime, SpacePoint), Failure> {
    let t = MultiTime::new(t.to_vec())?;
    let x = SpacePoint::new(x.to_vec())?;
    lab.cfg.check_time(&t)?;
    lab.cfg.check_space(&x)?;
    Ok((t, x))
}

/// Creates a lab; returns null on invalid input (see `btbs_last_error`).
///
/// # Safety
/// `params` must point to `n_params` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn btbs_lab_new(
    family: u32,
    n: usize,
    d: usize,
    data_kind: u32,
    params: *const f64,
    n_params: usize,
) -> *mut BtbsLab {
    let mut out: *mut BtbsLab = std::ptr::null_mut();
    let status = guard(|| {
        let family = match family {
            BTBS_FAMILY_BTBS => Family::Btbs,
            BTBS_FAMILY_KS => Family::Ks,
            BTBS_FAMILY_BS => Family::Bs,
            _ => return Err(invalid("unknown family")),
        };
        let cfg = FieldConfig::new(n, d, family)?;
        let p = read(params, n_params, "params")?;
        let f = match data_kind {
            BTBS_DATA_COSINE => InitialData::cosine(p.to_vec())?,
            BTBS_DATA_GAUSSIAN => {
                let (w, c) = p.split_last().ok_or_else(|| invalid("gaussian needs center and width"))?;
                InitialData::gaussian(c.to_vec(), *w)?
            }
            BTBS_DATA_CONSTANT if p.len() == 1 => InitialData::constant(p[0])?,
            BTBS_DATA_CONSTANT => return Err(invalid("constant data takes one parameter")),
            _ => return Err(invalid("unknown data kind")),
        };
        f.check_dim(d)?;
        out = Box::into_raw(Box::new(BtbsLab { cfg, f }));
        Ok(())
    });
    if status == BtbsStatus::Ok {
        out
    } else {
        std::ptr::null_mut()
    }
}

/// # Safety
/// `lab` must come from `btbs_lab_new` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn btbs_lab_free(lab: *mut BtbsLab) {
    if !lab.is_null() {
        drop(Box::from_raw(lab));
    }
}

/// Quadrature value of a field moment at an interior `t`. `order = 0` selects
/// the adaptive scheme; otherwise a fixed order checked against half of it.
///
/// # Safety
/// `t` and `x` must hold `n` and `d` doubles; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn btbs_quad_moment(
    lab: *const BtbsLab,
    p: u32,
    j: i32,
    t: *const f64,
    x: *const f64,
    order: u32,
    out_re: *mut f64,
    out_im: *mut f64,
    out_err: *mut f64,
) -> BtbsStatus {
    guard(|| {
        let lab = lab_ref(lab)?;
        let (t, x) = points(lab, read(t, lab.cfg.n, "t")?, read(x, lab.cfg.d, "x")?)?;
        let m = moment(p, j)?;
        let q = if order == 0 {
            QuadratureSpec::default()
        } else {
            QuadratureSpec { scheme: Scheme::GaussHermiteTensor, order: Some(order as usize), ..Default::default() }
        };
        let (re, im, err) = match lab.cfg.family {
            Family::Ks => {
                let v = quad_ks_moment(&lab.cfg, &lab.f, m, &t, &x, &q)?;
                (v.value.re, v.value.im, v.error)
            }
            Family::Btbs => {
                let v = quad_btbs_moment(&lab.cfg, &lab.f, m, &t, &x, &q)?;
                (v.value, 0.0, v.error)
            }
            Family::Bs => {
                let u = HeatField::new(lab.cfg, lab.f.clone())?;
                (u.value(t.as_slice(), x.as_slice())?, 0.0, 0.0)
            }
        };
        write(out_re, re);
        write(out_im, im);
        write(out_err, err);
        Ok(())
    })
}

/// Monte Carlo estimate of a BTBS field moment (`p` in {0, 2}).
///
/// # Safety
/// `t` and `x` must hold `n` and `d` doubles; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn btbs_mc_moment(
    lab: *const BtbsLab,
    p: u32,
    j: i32,
    t: *const f64,
    x: *const f64,
    n_samples: u64,
    seed: u64,
    stream_id: u64,
    workers: u32,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> BtbsStatus {
    guard(|| {
        let lab = lab_ref(lab)?;
        if lab.cfg.family != Family::Btbs {
            return Err(invalid("Monte Carlo moments are available for the BTBS family"));
        }
        let (t, x) = points(lab, read(t, lab.cfg.n, "t")?, read(x, lab.cfg.d, "x")?)?;
        let est = mc_btbs_moment(
            &lab.cfg,
            &lab.f,
            moment(p, j)?,
            &t,
            &x,
            n_samples,
            &RngStream::new(seed, stream_id),
            workers as usize,
        )?;
        write(out_value, est.value);
        write(out_stderr, est.stderr);
        Ok(())
    })
}

/// Residual of one PDE at `(t, x)` with the default stencil. `j` is required by
/// the indexed systems (linear BTBS, linear BS, KS).
///
/// # Safety
/// `t` and `x` must hold `n` and `d` doubles; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn btbs_residual(
    lab: *const BtbsLab,
    system: u32,
    j: i32,
    t: *const f64,
    x: *const f64,
    route: u32,
    out_rel: *mut f64,
    out_abs: *mut f64,
) -> BtbsStatus {
    guard(|| {
        let lab = lab_ref(lab)?;
        let ts = read(t, lab.cfg.n, "t")?;
        let xs = read(x, lab.cfg.d, "x")?;
        let route = match route {
            BTBS_ROUTE_ANALYTIC => Route::Analytic,
            BTBS_ROUTE_EIGEN => Route::EigenReduced,
            BTBS_ROUTE_FD => Route::FiniteDifference,
            _ => return Err(invalid("unknown route")),
        };
        let axis = || usize::try_from(j).map_err(|_| invalid("this system needs an axis j >= 0"));
        let s = StencilSpec::default_for(ts);
        let q = QuadratureSpec::default();
        let (cfg, f) = (lab.cfg, &lab.f);
        let with = |family| FieldConfig::new(cfg.n, cfg.d, family);
        let report: ResidualReport = match system {
            BTBS_SYSTEM_BS_LIN => {
                let c = with(Family::Bs)?;
                residual_bs_system(&c, f, axis()?, ts, xs, &HeatField::new(c, f.clone())?, route, &s)?
            }
            BTBS_SYSTEM_BS_NONLIN => {
                let c = with(Family::Bs)?;
                residual_bs_nonlinear(&c, f, ts, xs, &HeatField::new(c, f.clone())?, route, &s)?
            }
            BTBS_SYSTEM_BTBS_LIN => {
                let c = with(Family::Btbs)?;
                let j = axis()?;
                let u = BtbsField::new(c, f.clone(), Moment::Plain, q)?;
                let su = BtbsField::new(c, f.clone(), Moment::Quadratic(j), q)?;
                residual_btbs_system(&c, f, j, ts, xs, &u, &su, route, &s)?
            }
            BTBS_SYSTEM_BTBS_NONLIN => {
                let c = with(Family::Btbs)?;
                let u = BtbsField::new(c, f.clone(), Moment::Plain, q)?;
                let su: Vec<BtbsField> = (0..c.n)
                    .map(|k| BtbsField::new(c, f.clone(), Moment::Quadratic(k), q))
                    .collect::<Result<_, _>>()?;
                let refs: Vec<&dyn Field<Value = f64>> = su.iter().map(|b| b as &dyn Field<Value = f64>).collect();
                residual_btbs_nonlinear(&c, f, ts, xs, &u, &refs, route, &s)?
            }
            BTBS_SYSTEM_KS => {
                let c = with(Family::Ks)?;
                let j = axis()?;
                let u = KsField::new(c, f.clone(), Moment::Plain, q)?;
                let l = KsField::new(c, f.clone(), Moment::Linear(j), q)?;
                let sq = KsField::new(c, f.clone(), Moment::Quadratic(j), q)?;
                residual_ks_system(&c, f, j, ts, xs, &u, &l, &sq, route, &s)?
            }
            _ => return Err(invalid("unknown system")),
        };
        write(out_rel, report.rel_residual);
        write(out_abs, report.abs_residual);
        Ok(())
    })
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn btbs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn btbs_version() -> *const c_char {
    VERSION.as_ptr() as *const c_char
}
