//! C ABI for the `mvtsp` library.
//!
//! Instances and solutions are opaque handles created and destroyed through
//! this interface. Every fallible function returns an [`MvtspStatus`]; on
//! failure a description is kept per thread and can be fetched with
//! [`mvtsp_last_error_message`]. Strings handed out by the library must be
//! released with [`mvtsp_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mvtsp::approx::{self, ApproxError};
use mvtsp::formats::{FormatError, Instance, Solution};
use mvtsp::gpoly::{GpolyError, IntVector};
use mvtsp::instances::{gen_bdgpe, gen_metric_mvtsp, GeneratorConfig};
use mvtsp::mvtsp::{check_feasible, tour_cost};
use mvtsp::oracles::{self, OracleBudget, OracleError};
use mvtsp::rational::{format_rational, Rational};
use mvtsp::rounding::{self, Regime, RoundingError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvtspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Infeasible = 4,
    BudgetExceeded = 5,
    Failed = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvtspAlgorithm {
    Apx15 = 0,
    Apx25 = 1,
    Exact = 2,
    /// Iterative rounding on a degree-bounded instance.
    Bdgpe = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvtspRegime {
    Both = 0,
    Lower = 1,
    Upper = 2,
}

impl From<MvtspRegime> for Regime {
    fn from(r: MvtspRegime) -> Self {
        match r {
            MvtspRegime::Both => Regime::Both,
            MvtspRegime::Lower => Regime::LowerOnly,
            MvtspRegime::Upper => Regime::UpperOnly,
        }
    }
}

/// Opaque instance handle (either a tour or a degree-bounded instance).
pub struct MvtspInstance {
    inner: Instance,
    digest: String,
}

/// Opaque solution handle tied to the digest of its instance.
pub struct MvtspSolution {
    inner: Solution,
    cost: Rational,
    ground: Option<mvtsp::gpoly::GroundSet>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

struct Error(MvtspStatus, String);

impl Error {
    fn new(status: MvtspStatus, msg: impl Into<String>) -> Self {
        Error(status, msg.into())
    }
}

impl From<FormatError> for Error {
    fn from(e: FormatError) -> Self {
        Error::new(MvtspStatus::Parse, e.to_string())
    }
}

impl From<GpolyError> for Error {
    fn from(e: GpolyError) -> Self {
        let status = match e {
            GpolyError::GroundSetTooLarge { .. } => MvtspStatus::BudgetExceeded,
            _ => MvtspStatus::InvalidArgument,
        };
        Error::new(status, e.to_string())
    }
}

impl From<RoundingError> for Error {
    fn from(e: RoundingError) -> Self {
        let status = match &e {
            RoundingError::Infeasible => MvtspStatus::Infeasible,
            RoundingError::Gpoly(GpolyError::GroundSetTooLarge { .. }) => MvtspStatus::BudgetExceeded,
            RoundingError::InvalidInstance(_) | RoundingError::Unbounded => MvtspStatus::InvalidArgument,
            _ => MvtspStatus::Failed,
        };
        Error::new(status, e.to_string())
    }
}

impl From<ApproxError> for Error {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Rounding(r) => r.into(),
            ApproxError::TooManyEdges { .. } | ApproxError::SubsetTooLarge { .. } => {
                Error::new(MvtspStatus::BudgetExceeded, e.to_string())
            }
            other => Error::new(MvtspStatus::Failed, other.to_string()),
        }
    }
}

impl From<OracleError> for Error {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded(_) | OracleError::UnboundedCoordinate(_) => {
                Error::new(MvtspStatus::BudgetExceeded, e.to_string())
            }
            OracleError::Gpoly(g) => g.into(),
            OracleError::Rounding(r) => r.into(),
        }
    }
}

fn set_error(msg: Option<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, records any error or panic and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> MvtspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            MvtspStatus::Ok
        }
        Ok(Err(Error(status, msg))) => {
            set_error(Some(msg));
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(Some(format!("internal panic: {msg}")));
            MvtspStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Error> {
    if p.is_null() {
        Err(Error::new(MvtspStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Error> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::new(MvtspStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Error> {
    non_null(out, "out")?;
    let c = CString::new(s).map_err(|_| Error::new(MvtspStatus::Failed, "string contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn new_instance(inner: Instance) -> Result<Box<MvtspInstance>, Error> {
    let digest = inner.digest()?;
    Ok(Box::new(MvtspInstance { inner, digest }))
}

/// Copy of the calling thread's last error message, or NULL when the last
/// call succeeded. Free the result with `mvtsp_string_free`.
#[no_mangle]
pub extern "C" fn mvtsp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(m) => CString::new(m.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mvtsp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an instance file (either kind).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_instance_from_json(json: *const c_char, out: *mut *mut MvtspInstance) -> MvtspStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(json, "json")?;
        *out = Box::into_raw(new_instance(Instance::from_json(text)?)?);
        Ok(())
    })
}

/// Seeded random metric instance on `n` vertices with requests in `1..=r_max`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_instance_generate(seed: u64, n: u32, r_max: i64, out: *mut *mut MvtspInstance) -> MvtspStatus {
    guard(|| {
        non_null(out, "out")?;
        let inst = gen_metric_mvtsp(&GeneratorConfig::new(seed, n as usize, r_max))
            .map_err(|e| Error::new(MvtspStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(new_instance(Instance::Mvtsp(inst))?);
        Ok(())
    })
}

/// Seeded random degree-bounded instance on `size` (1 to 6) elements.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_bdgpe_generate(seed: u64, size: u32, regime: MvtspRegime, out: *mut *mut MvtspInstance) -> MvtspStatus {
    guard(|| {
        non_null(out, "out")?;
        if !(1..=6).contains(&size) {
            return Err(Error::new(MvtspStatus::InvalidArgument, format!("size must be between 1 and 6, got {size}")));
        }
        *out = Box::into_raw(new_instance(Instance::Bdgpe(gen_bdgpe(seed, size as usize, regime.into())))?);
        Ok(())
    })
}

/// Releases an instance. NULL is ignored.
///
/// # Safety
/// `inst` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_instance_free(inst: *mut MvtspInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Canonical JSON of the instance.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_instance_to_json(inst: *const MvtspInstance, out: *mut *mut c_char) -> MvtspStatus {
    guard(|| {
        non_null(inst, "inst")?;
        write_string(out, (*inst).inner.to_canonical_json()?)
    })
}

/// Hex SHA-256 digest of the canonical JSON.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_instance_digest(inst: *const MvtspInstance, out: *mut *mut c_char) -> MvtspStatus {
    guard(|| {
        non_null(inst, "inst")?;
        write_string(out, (*inst).digest.clone())
    })
}

/// Runs `alg` on the instance. Tour algorithms need a tour instance,
/// `MVTSP_ALGORITHM_BDGPE` a degree-bounded one; `MVTSP_ALGORITHM_EXACT`
/// accepts both and uses the default oracle budget.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solve(inst: *const MvtspInstance, alg: MvtspAlgorithm, out: *mut *mut MvtspSolution) -> MvtspStatus {
    guard(|| {
        non_null(inst, "inst")?;
        non_null(out, "out")?;
        let inst = &*inst;
        let budget = OracleBudget::default();
        let sol = match (&inst.inner, alg) {
            (Instance::Mvtsp(m), MvtspAlgorithm::Apx15 | MvtspAlgorithm::Apx25 | MvtspAlgorithm::Exact) => {
                let edges = match alg {
                    MvtspAlgorithm::Apx15 => approx::apx15(m)?,
                    MvtspAlgorithm::Apx25 => approx::apx25(m)?,
                    _ => oracles::exact_mvtsp(m, &budget)?,
                };
                MvtspSolution {
                    cost: tour_cost(m, &edges),
                    inner: Solution::Tour { instance_digest: inst.digest.clone(), edges },
                    ground: None,
                }
            }
            (Instance::Bdgpe(b), MvtspAlgorithm::Bdgpe | MvtspAlgorithm::Exact) => {
                let (z, cost) = if alg == MvtspAlgorithm::Bdgpe {
                    let res = rounding::solve_bdgpe(b)?;
                    (res.z, res.cost)
                } else {
                    oracles::exact_bdgpe(b, &budget)?
                        .ok_or_else(|| Error::new(MvtspStatus::Infeasible, "no integer point meets every bound"))?
                };
                MvtspSolution {
                    cost,
                    inner: Solution::Element { instance_digest: inst.digest.clone(), z },
                    ground: Some(b.pair.ground().clone()),
                }
            }
            _ => return Err(Error::new(MvtspStatus::InvalidArgument, "algorithm does not apply to this instance kind")),
        };
        *out = Box::into_raw(Box::new(sol));
        Ok(())
    })
}

/// Releases a solution. NULL is ignored.
///
/// # Safety
/// `sol` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solution_free(sol: *mut MvtspSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Exact cost as a `"p/q"` string.
///
/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solution_cost(sol: *const MvtspSolution, out: *mut *mut c_char) -> MvtspStatus {
    guard(|| {
        non_null(sol, "sol")?;
        write_string(out, format_rational(&(*sol).cost))
    })
}

/// Solution file JSON.
///
/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solution_to_json(sol: *const MvtspSolution, out: *mut *mut c_char) -> MvtspStatus {
    guard(|| {
        non_null(sol, "sol")?;
        let sol = &*sol;
        write_string(out, sol.inner.to_value(sol.ground.as_ref()).to_string())
    })
}

/// Multiplicity of edge `{u, v}` in a tour solution (0 for absent edges).
///
/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solution_edge(sol: *const MvtspSolution, u: u32, v: u32, out: *mut i64) -> MvtspStatus {
    guard(|| {
        non_null(sol, "sol")?;
        non_null(out, "out")?;
        match &(*sol).inner {
            Solution::Tour { edges, .. } => {
                *out = edges.get(u as usize, v as usize);
                Ok(())
            }
            Solution::Element { .. } => Err(Error::new(MvtspStatus::InvalidArgument, "not a tour solution")),
        }
    })
}

/// Checks a solution against an instance: degrees and connectivity for a
/// tour, polyhedron membership and the regime's violation bound for an
/// element. A digest mismatch is an error, an unmet bound sets `*ok = false`.
///
/// # Safety
/// Both handles must be live; `ok` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solution_check(inst: *const MvtspInstance, sol: *const MvtspSolution, ok: *mut bool) -> MvtspStatus {
    guard(|| {
        non_null(inst, "inst")?;
        non_null(sol, "sol")?;
        non_null(ok, "ok")?;
        let (inst, sol) = (&*inst, &*sol);
        if sol.inner.instance_digest() != inst.digest {
            return Err(Error::new(MvtspStatus::InvalidArgument, "solution belongs to a different instance"));
        }
        *ok = match (&inst.inner, &sol.inner) {
            (Instance::Mvtsp(m), Solution::Tour { edges, .. }) => check_feasible(m, edges),
            (Instance::Bdgpe(b), Solution::Element { z, .. }) => element_ok(b, z)?,
            _ => return Err(Error::new(MvtspStatus::InvalidArgument, "solution kind does not match the instance")),
        };
        Ok(())
    })
}

fn element_ok(b: &rounding::BdgpeInstance, z: &IntVector) -> Result<bool, Error> {
    let delta = rounding::delta(&b.constraints, b.pair.len());
    let report = rounding::violation_report(b, z);
    Ok(b.pair.contains(z)? && rounding::within_guarantee(b.regime, delta, &report))
}

/// Parses a solution file for `inst`.
///
/// # Safety
/// `inst` must be a live handle, `json` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvtsp_solution_from_json(
    inst: *const MvtspInstance,
    json: *const c_char,
    out: *mut *mut MvtspSolution,
) -> MvtspStatus {
    guard(|| {
        non_null(inst, "inst")?;
        non_null(out, "out")?;
        let inst = &*inst;
        let text = read_str(json, "json")?;
        let ground = match &inst.inner {
            Instance::Bdgpe(b) => Some(b.pair.ground().clone()),
            Instance::Mvtsp(_) => None,
        };
        let inner = Solution::from_json(text, ground.as_ref())?;
        let cost = match (&inst.inner, &inner) {
            (Instance::Mvtsp(m), Solution::Tour { edges, .. }) => tour_cost(m, edges),
            (Instance::Bdgpe(b), Solution::Element { z, .. }) => rounding::cost_of(&b.costs, z),
            _ => return Err(Error::new(MvtspStatus::InvalidArgument, "solution kind does not match the instance")),
        };
        *out = Box::into_raw(Box::new(MvtspSolution { inner, cost, ground }));
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_are_contained() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, MvtspStatus::Panic);
        let msg = mvtsp_last_error_message();
        let text = unsafe { CStr::from_ptr(msg) }.to_str().unwrap().to_string();
        unsafe { mvtsp_string_free(msg) };
        assert!(text.contains("boom"));
    }

    #[test]
    fn success_clears_error() {
        let _ = guard(|| Err(Error::new(MvtspStatus::Failed, "x")));
        let _ = guard(|| Ok(()));
        assert!(mvtsp_last_error_message().is_null());
    }
}
