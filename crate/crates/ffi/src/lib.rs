//! C ABI over `lbcs`: opaque state and density handles, integer status codes and a
//! thread-local last-error message.

use lbcs::bicoherent::{build_bicoherent, BicoherentFamily, BicoherentSpec, Side};
use lbcs::coherent::{build_coherent, Branch, CoherentSpec, Family};
use lbcs::density::{density, export, DensityField, Format, GridSpec};
use lbcs::fock::FockCutoff;
use lbcs::pt::{alpha, eigenvalue_e, PotentialParams};
use lbcs::spinor::Units;
use lbcs::state::SpinorState;
use lbcs::{Error, C64};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbStatus {
    Ok = 0,
    Cutoff = 1,
    ExceptionalPoint = 2,
    RegimeBoundary = 3,
    Contract = 4,
    BasisMismatch = 5,
    Usage = 6,
    Io = 7,
    NullPointer = 8,
    InvalidArgument = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbFamily {
    CoherentA = 0,
    CoherentB = 1,
    Phi = 2,
    Psi = 3,
    Eta = 4,
    Xi = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbBranch {
    Plus = 0,
    Minus = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbComponent {
    Total = 0,
    Upper = 1,
    Lower = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbFormat {
    Json = 0,
    Csv = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LbComplex {
    pub re: f64,
    pub im: f64,
}

impl From<LbComplex> for C64 {
    fn from(z: LbComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

impl From<C64> for LbComplex {
    fn from(z: C64) -> Self {
        LbComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LbStateSpec {
    pub family: LbFamily,
    pub branch: LbBranch,
    pub z1: LbComplex,
    pub z2: LbComplex,
    /// Potential strength; must be 0 for the coherent families.
    pub v: f64,
    pub v_f: f64,
    pub xi: f64,
    pub nmax1: usize,
    pub nmax2: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LbGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

/// Opaque constructed state.
pub struct LbState {
    spec: LbStateSpec,
    state: SpinorState,
}

/// Opaque density grid.
pub struct LbDensity {
    field: DensityField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LbStatus {
    match e {
        Error::Cutoff(_) => LbStatus::Cutoff,
        Error::ExceptionalPoint { .. } => LbStatus::ExceptionalPoint,
        Error::RegimeBoundary(_) => LbStatus::RegimeBoundary,
        Error::Contract(_) => LbStatus::Contract,
        Error::BasisMismatch(_) => LbStatus::BasisMismatch,
        Error::Usage(_) => LbStatus::Usage,
        Error::Io(_) | Error::Json(_) => LbStatus::Io,
    }
}

struct Fail(LbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LbStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("panic inside lbcs".into());
            LbStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(LbStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(LbStatus::NullPointer, format!("{what} is null")))
}

fn branch(b: LbBranch) -> Branch {
    match b {
        LbBranch::Plus => Branch::Plus,
        LbBranch::Minus => Branch::Minus,
    }
}

fn build(spec: &LbStateSpec) -> Result<SpinorState, Fail> {
    let cutoff = FockCutoff::new(spec.nmax1, spec.nmax2)?;
    let units = Units::new(spec.v_f, spec.xi)?;
    let (z1, z2) = (spec.z1.into(), spec.z2.into());
    let br = branch(spec.branch);
    let (family, side) = match spec.family {
        LbFamily::CoherentA | LbFamily::CoherentB => {
            if spec.v != 0.0 {
                return Err(Fail(LbStatus::InvalidArgument, "coherent families require v = 0".into()));
            }
            let family = if spec.family == LbFamily::CoherentA { Family::A } else { Family::B };
            return Ok(build_coherent(&CoherentSpec { z1, z2, family, branch: br, cutoff })?);
        }
        LbFamily::Phi => (BicoherentFamily::Standard, Side::Ket),
        LbFamily::Psi => (BicoherentFamily::Standard, Side::Bra),
        LbFamily::Eta => (BicoherentFamily::Theta, Side::Ket),
        LbFamily::Xi => (BicoherentFamily::Theta, Side::Bra),
    };
    let params = PotentialParams::new(spec.v, units)?;
    Ok(build_bicoherent(&BicoherentSpec { z1, z2, family, side, branch: br, params, cutoff })?)
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn lb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `spec` must point to a valid spec and `out_state` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn lb_state_build(spec: *const LbStateSpec, out_state: *mut *mut LbState) -> LbStatus {
    guard(|| {
        let spec = *deref(spec, "spec")?;
        let slot = out(out_state, "out_state")?;
        *slot = std::ptr::null_mut();
        let state = build(&spec)?;
        *slot = Box::into_raw(Box::new(LbState { spec, state }));
        Ok(())
    })
}

/// # Safety
/// `state` must come from `lb_state_build` and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lb_state_free(state: *mut LbState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_state_dims(state: *const LbState, nmax1: *mut usize, nmax2: *mut usize) -> LbStatus {
    guard(|| {
        let s = deref(state, "state")?;
        *out(nmax1, "nmax1")? = s.state.cutoff.nmax1;
        *out(nmax2, "nmax2")? = s.state.cutoff.nmax2;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_state_norm(state: *const LbState, norm: *mut f64) -> LbStatus {
    guard(|| {
        *out(norm, "norm")? = deref(state, "state")?.state.norm();
        Ok(())
    })
}

/// Squared norms of the two spinor components.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_state_component_masses(state: *const LbState, upper: *mut f64, lower: *mut f64) -> LbStatus {
    guard(|| {
        let (u, l) = deref(state, "state")?.state.component_masses();
        *out(upper, "upper")? = u;
        *out(lower, "lower")? = l;
        Ok(())
    })
}

/// Coefficients of `e_{n1} (x) e_{n2}` in the upper and lower components.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_state_coefficient(
    state: *const LbState,
    n1: usize,
    n2: usize,
    upper: *mut LbComplex,
    lower: *mut LbComplex,
) -> LbStatus {
    guard(|| {
        let s = &deref(state, "state")?.state;
        if n1 > s.cutoff.nmax1 || n2 > s.cutoff.nmax2 {
            return Err(Fail(LbStatus::InvalidArgument, format!("({n1}, {n2}) outside the cutoff")));
        }
        let i = s.idx(n1, n2);
        *out(upper, "upper")? = s.upper[i].into();
        *out(lower, "lower")? = s.lower[i].into();
        Ok(())
    })
}

/// `<a, b>`, antilinear in `a`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_state_dot(a: *const LbState, b: *const LbState, result: *mut LbComplex) -> LbStatus {
    guard(|| {
        let x = deref(a, "a")?.state.dot(&deref(b, "b")?.state)?;
        *out(result, "result")? = x.into();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid; `out_density` receives a handle freed by `lb_density_free`.
#[no_mangle]
pub unsafe extern "C" fn lb_density_compute(
    state: *const LbState,
    grid: *const LbGridSpec,
    out_density: *mut *mut LbDensity,
) -> LbStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let g = deref(grid, "grid")?;
        let slot = out(out_density, "out_density")?;
        *slot = std::ptr::null_mut();
        let grid = GridSpec { x_min: g.x_min, x_max: g.x_max, nx: g.nx, y_min: g.y_min, y_max: g.y_max, ny: g.ny };
        let sp = &s.spec;
        let meta = serde_json::json!({
            "family": format!("{:?}", sp.family),
            "branch": format!("{:?}", sp.branch),
            "z1": [sp.z1.re, sp.z1.im],
            "z2": [sp.z2.re, sp.z2.im],
            "V": sp.v,
            "units": { "v_f": sp.v_f, "xi": sp.xi, "epsilon0": 2.0 * sp.v_f / sp.xi },
        });
        let field = density(&s.state, &grid, meta)?;
        *slot = Box::into_raw(Box::new(LbDensity { field }));
        Ok(())
    })
}

/// # Safety
/// `density` must come from `lb_density_compute`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lb_density_free(density: *mut LbDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Borrowed row-major grid (`x` fastest), valid while the handle lives.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_density_data(
    density: *const LbDensity,
    component: LbComponent,
    data: *mut *const f64,
    nx: *mut usize,
    ny: *mut usize,
) -> LbStatus {
    guard(|| {
        let f = &deref(density, "density")?.field;
        let v = match component {
            LbComponent::Total => &f.total,
            LbComponent::Upper => &f.upper,
            LbComponent::Lower => &f.lower,
        };
        *out(data, "data")? = v.as_ptr();
        *out(nx, "nx")? = f.grid.nx;
        *out(ny, "ny")? = f.grid.ny;
        Ok(())
    })
}

/// Grid-integrated total density and the mass-capture warning flag.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_density_mass(density: *const LbDensity, mass: *mut f64, warning: *mut bool) -> LbStatus {
    guard(|| {
        let f = &deref(density, "density")?.field;
        *out(mass, "mass")? = f.meta.grid_mass;
        *out(warning, "warning")? = f.meta.mass_warning;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn lb_density_export(density: *const LbDensity, format: LbFormat, path: *const c_char) -> LbStatus {
    guard(|| {
        let f = &deref(density, "density")?.field;
        let p = CStr::from_ptr(deref(path, "path")?)
            .to_str()
            .map_err(|_| Fail(LbStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let fmt = match format {
            LbFormat::Json => Format::Json,
            LbFormat::Csv => Format::Csv,
        };
        export(f, fmt, std::path::Path::new(p))?;
        Ok(())
    })
}

/// Eigenvalue `E_p` of the PT-symmetric Hamiltonian.
///
/// # Safety
/// `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_eigenvalue(p: i64, v: f64, v_f: f64, xi: f64, result: *mut LbComplex) -> LbStatus {
    guard(|| {
        let units = Units::new(v_f, xi)?;
        *out(result, "result")? = eigenvalue_e(p, v, units).into();
        Ok(())
    })
}

/// # Safety
/// `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lb_alpha(p: u64, v: f64, b: LbBranch, result: *mut LbComplex) -> LbStatus {
    guard(|| {
        *out(result, "result")? = alpha(p, v, branch(b))?.into();
        Ok(())
    })
}
