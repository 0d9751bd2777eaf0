//! C ABI over `grushin-core`.
//!
//! Every entry point returns a [`GrushinStatus`]; results go through out
//! pointers. Objects are opaque heap handles released with the matching
//! `*_free` function. After a non-`OK` status, [`grushin_last_error`] returns
//! a message describing the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use grushin_core::embedding::{Mesh, RevolutionProfile};
use grushin_core::geodesics::{self, PhasePoint};
use grushin_core::spectral::{EndpointKind, FiberOperator, Quantization, Side};
use grushin_core::{GrushinError, GrushinModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrushinStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    Numerical = 3,
    Unclassified = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrushinQuantization {
    Intrinsic = 0,
    Extrinsic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrushinSide {
    Left = 0,
    Right = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrushinEndpointKind {
    LimitPoint = 0,
    LimitCircle = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GrushinCurvature {
    pub gaussian: f64,
    pub mean: f64,
    pub effective_potential: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GrushinPhasePoint {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrushinEndpointClass {
    /// Endpoint position; `±INFINITY` for infinite ends.
    pub endpoint: f64,
    pub kind: GrushinEndpointKind,
    pub borderline: bool,
}

/// Opaque model handle.
pub struct GrushinModelHandle {
    model: GrushinModel,
    profile: RevolutionProfile,
}

/// Opaque mode-`k` fiber operator.
pub struct GrushinFiber(FiberOperator);

/// Opaque triangulated surface.
pub struct GrushinMesh(Mesh);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &GrushinError) -> GrushinStatus {
    match err {
        GrushinError::InvalidArgument(_) => GrushinStatus::InvalidArgument,
        GrushinError::Domain(_) => GrushinStatus::Domain,
        GrushinError::Numerical { .. } => GrushinStatus::Numerical,
        GrushinError::Unclassified(_) => GrushinStatus::Unclassified,
        GrushinError::Io(_) => GrushinStatus::Io,
    }
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GrushinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GrushinStatus::Ok
        }
        Ok(Err(Failure::Core(err))) => {
            set_error(err.to_string());
            status_of(&err)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GrushinStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            GrushinStatus::Panic
        }
    }
}

enum Failure {
    Core(GrushinError),
    Null(&'static str),
}

impl From<GrushinError> for Failure {
    fn from(e: GrushinError) -> Self {
        Failure::Core(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    unsafe { p.write(value) };
    Ok(())
}

fn to_phase(p: GrushinPhasePoint) -> PhasePoint {
    PhasePoint::new(p.x, p.y, p.px, p.py)
}

fn from_phase(p: PhasePoint) -> GrushinPhasePoint {
    GrushinPhasePoint {
        x: p.x,
        y: p.y,
        px: p.px,
        py: p.py,
    }
}

fn new_model(model: GrushinModel, out: *mut *mut GrushinModelHandle) -> Result<(), Failure> {
    let handle = Box::new(GrushinModelHandle {
        model,
        profile: RevolutionProfile::new(model),
    });
    unsafe { write(out, Box::into_raw(handle), "out") }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn grushin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// success. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn grushin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates the α-Grushin model `dx² + |x|^{−2α}dy²`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn grushin_model_alpha(alpha: f64, out: *mut *mut GrushinModelHandle) -> GrushinStatus {
    guard(|| new_model(GrushinModel::alpha(alpha)?, out))
}

/// Creates the Grushin metric with the `n²`-winded bell embedding.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn grushin_model_winded(n: u32, out: *mut *mut GrushinModelHandle) -> GrushinStatus {
    guard(|| new_model(GrushinModel::winded(n)?, out))
}

/// # Safety
/// `model` must be NULL or a handle from `grushin_model_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn grushin_model_free(model: *mut GrushinModelHandle) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// `K`, `H` and `−K + H²` at `x`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_curvature(
    model: *const GrushinModelHandle,
    x: f64,
    out: *mut GrushinCurvature,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let s = m.model.curvature_sample(x)?;
        unsafe {
            write(
                out,
                GrushinCurvature {
                    gaussian: s.gaussian,
                    mean: s.mean,
                    effective_potential: s.effective_potential,
                },
                "out",
            )
        }
    })
}

/// Point of the isometric surface of revolution, written to `out[0..3]`.
///
/// # Safety
/// `model` must be a live handle and `out` must point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn grushin_embed_point(
    model: *const GrushinModelHandle,
    x: f64,
    y: f64,
    out: *mut f64,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let p = m.profile.embed_point(x, y)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        unsafe { ptr::copy_nonoverlapping(p.as_ptr(), out, 3) };
        Ok(())
    })
}

/// Tessellates `[x_min, x_max] × [0, span)` into an opaque mesh.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_mesh_generate(
    model: *const GrushinModelHandle,
    x_min: f64,
    x_max: f64,
    nx: usize,
    ny: usize,
    full_winding: bool,
    out: *mut *mut GrushinMesh,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let mesh = m.profile.generate_mesh((x_min, x_max), nx, ny, full_winding)?;
        unsafe { write(out, Box::into_raw(Box::new(GrushinMesh(mesh))), "out") }
    })
}

/// # Safety
/// `mesh` must be a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn grushin_mesh_vertex_count(mesh: *const GrushinMesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.0.vertices.len())
}

/// # Safety
/// `mesh` must be a live mesh handle.
#[no_mangle]
pub unsafe extern "C" fn grushin_mesh_face_count(mesh: *const GrushinMesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.0.faces.len())
}

/// Copies vertices as `xyz` triples into `out`, which holds `capacity` doubles.
///
/// # Safety
/// `mesh` must be a live mesh handle and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn grushin_mesh_vertices(
    mesh: *const GrushinMesh,
    out: *mut f64,
    capacity: usize,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(mesh, "mesh") }?;
        let flat: Vec<f64> = m.0.vertices.iter().flatten().copied().collect();
        copy_out(&flat, out, capacity)
    })
}

/// Copies zero-based triangle indices into `out`, which holds `capacity` entries.
///
/// # Safety
/// `mesh` must be a live mesh handle and `out` must hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn grushin_mesh_faces(
    mesh: *const GrushinMesh,
    out: *mut usize,
    capacity: usize,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(mesh, "mesh") }?;
        let flat: Vec<usize> = m.0.faces.iter().flatten().copied().collect();
        copy_out(&flat, out, capacity)
    })
}

fn copy_out<T: Copy>(src: &[T], out: *mut T, capacity: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    if capacity < src.len() {
        return Err(GrushinError::InvalidArgument(format!(
            "buffer holds {capacity} entries, {} needed",
            src.len()
        ))
        .into());
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

/// # Safety
/// `mesh` must be NULL or a mesh handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn grushin_mesh_free(mesh: *mut GrushinMesh) {
    if !mesh.is_null() {
        drop(unsafe { Box::from_raw(mesh) });
    }
}

/// State at time `t` of the geodesic flow after `steps` implicit-midpoint steps.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_geodesic_endpoint(
    model: *const GrushinModelHandle,
    start: GrushinPhasePoint,
    t: f64,
    steps: usize,
    out: *mut GrushinPhasePoint,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let end = geodesics::flow_endpoint(m.model, to_phase(start), t, steps)?;
        unsafe { write(out, from_phase(end), "out") }
    })
}

/// First conjugate time in `(0, t_max]`; `*found` is false when there is none.
///
/// # Safety
/// `model` must be a live handle; `out` and `found` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_conjugate_time(
    model: *const GrushinModelHandle,
    start: GrushinPhasePoint,
    t_max: f64,
    steps: usize,
    out: *mut f64,
    found: *mut bool,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let t = geodesics::conjugate_time(m.model, to_phase(start), t_max, steps)?;
        unsafe {
            write(found, t.is_some(), "found")?;
            write(out, t.unwrap_or(f64::NAN), "out")
        }
    })
}

/// Mode-`k` fiber of the intrinsic (`Δ − cK`) or extrinsic (`Δ − K + H²`)
/// Laplacian. `c` is ignored for the extrinsic quantization.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_fiber_new(
    model: *const GrushinModelHandle,
    quantization: GrushinQuantization,
    c: f64,
    k: i64,
    out: *mut *mut GrushinFiber,
) -> GrushinStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let q = match quantization {
            GrushinQuantization::Intrinsic => Quantization::Intrinsic { c },
            GrushinQuantization::Extrinsic => Quantization::Extrinsic,
        };
        let op = FiberOperator::new(m.model, q, k)?;
        unsafe { write(out, Box::into_raw(Box::new(GrushinFiber(op))), "out") }
    })
}

/// # Safety
/// `fiber` must be NULL or a fiber handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn grushin_fiber_free(fiber: *mut GrushinFiber) {
    if !fiber.is_null() {
        drop(unsafe { Box::from_raw(fiber) });
    }
}

/// Open interval on which the fiber acts; ends may be infinite.
///
/// # Safety
/// `fiber` must be a live handle; `left` and `right` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_fiber_interval(
    fiber: *const GrushinFiber,
    left: *mut f64,
    right: *mut f64,
) -> GrushinStatus {
    guard(|| {
        let f = unsafe { deref(fiber, "fiber") }?;
        let (a, b) = f.0.interval();
        unsafe {
            write(left, a, "left")?;
            write(right, b, "right")
        }
    })
}

/// Potential `V_k(x)` of the fiber after the unitary map to `L²(dx)`.
///
/// # Safety
/// `fiber` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_fiber_potential(
    fiber: *const GrushinFiber,
    x: f64,
    out: *mut f64,
) -> GrushinStatus {
    guard(|| {
        let f = unsafe { deref(fiber, "fiber") }?;
        let v = f.0.potential(x)?;
        unsafe { write(out, v, "out") }
    })
}

/// Limit-point / limit-circle class of one fiber endpoint.
///
/// # Safety
/// `fiber` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn grushin_fiber_classify(
    fiber: *const GrushinFiber,
    side: GrushinSide,
    out: *mut GrushinEndpointClass,
) -> GrushinStatus {
    guard(|| {
        let f = unsafe { deref(fiber, "fiber") }?;
        let side = match side {
            GrushinSide::Left => Side::Left,
            GrushinSide::Right => Side::Right,
        };
        let class = f.0.classify_endpoint(side)?;
        let kind = match class.kind {
            EndpointKind::LimitPoint => GrushinEndpointKind::LimitPoint,
            EndpointKind::LimitCircle => GrushinEndpointKind::LimitCircle,
        };
        unsafe {
            write(
                out,
                GrushinEndpointClass {
                    endpoint: class.endpoint,
                    kind,
                    borderline: class.borderline,
                },
                "out",
            )
        }
    })
}
