//! C ABI for assembling port-Hamiltonian plate systems and running
//! manufactured-solution studies.
//!
//! Every fallible function returns a [`PhplateStatus`]. On failure the
//! message of the most recent error on the calling thread is available
//! through [`phplate_last_error_message`]. Systems are opaque handles owned
//! by the caller and released with [`phplate_system_free`].

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use phplate::assembly::{FieldKind, MaterialParams, PhSystem, Scheme};
use phplate::linalg::CsrMatrix;
use phplate::study::{build_system, run_manufactured, StudyConfig};
use phplate::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhplateStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    StructureViolation = 4,
    SolverFailure = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhplateScheme {
    Bjt = 0,
    Afw = 1,
    Hhj = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhplateField {
    Velocity = 0,
    AngularVelocity = 1,
    Moment = 2,
    Shear = 3,
    Multiplier = 4,
}

/// Selects the mass matrix `M` or the structure matrix `J`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhplateMatrix {
    Mass = 0,
    Structure = 1,
}

/// Material data in SI units.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhplateMaterial {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    pub thickness: f64,
    pub shear_correction: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhplateStructureReport {
    /// Relative defect `|M - M^T| / |M|`.
    pub mass_symmetry: f64,
    /// Relative defect `|J + J^T| / |J|`.
    pub structure_skewness: f64,
    pub positive_pivots: usize,
    pub negative_pivots: usize,
    pub zero_pivots: usize,
    /// Number of retained multiplier dofs, which should equal the negative
    /// pivot count.
    pub multiplier_dofs: usize,
    /// Nonzero when both defects are within tolerance and the inertia
    /// matches the multiplier count.
    pub holds: u8,
}

/// Summary of a manufactured-solution run on an `n x n` mesh.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhplateRunSummary {
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_solve_residual: f64,
    pub relative_power_residual: f64,
    pub relative_energy_drift: f64,
}

/// Opaque handle to an assembled system with boundary conditions applied.
pub struct PhplateSystem {
    inner: PhSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> PhplateStatus {
    match err {
        Error::InvalidMesh(_)
        | Error::UnsupportedElement(_)
        | Error::IncompatibleMesh { .. }
        | Error::InvalidMaterial(_)
        | Error::Config(_)
        | Error::InvalidConvergenceData(_)
        | Error::DimensionMismatch { .. } => PhplateStatus::InvalidArgument,
        Error::Structure(_) => PhplateStatus::StructureViolation,
        Error::Singular { .. } | Error::SolveResidual { .. } => PhplateStatus::SolverFailure,
        _ => PhplateStatus::Internal,
    }
}

/// Runs `body`, records its error message and converts panics into
/// [`PhplateStatus::Internal`].
fn guarded(body: impl FnOnce() -> Result<(), (PhplateStatus, String)>) -> PhplateStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            PhplateStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside phplate".into());
            PhplateStatus::Internal
        }
    }
}

fn lift(err: Error) -> (PhplateStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (PhplateStatus, String) {
    (PhplateStatus::NullPointer, format!("`{name}` is null"))
}

fn scheme_of(s: PhplateScheme) -> Scheme {
    match s {
        PhplateScheme::Bjt => Scheme::Bjt,
        PhplateScheme::Afw => Scheme::Afw,
        PhplateScheme::Hhj => Scheme::Hhj,
    }
}

fn field_of(f: PhplateField) -> FieldKind {
    match f {
        PhplateField::Velocity => FieldKind::Velocity,
        PhplateField::AngularVelocity => FieldKind::AngularVelocity,
        PhplateField::Moment => FieldKind::Moment,
        PhplateField::Shear => FieldKind::Shear,
        PhplateField::Multiplier => FieldKind::Multiplier,
    }
}

fn field_code(f: FieldKind) -> PhplateField {
    match f {
        FieldKind::Velocity => PhplateField::Velocity,
        FieldKind::AngularVelocity => PhplateField::AngularVelocity,
        FieldKind::Moment => PhplateField::Moment,
        FieldKind::Shear => PhplateField::Shear,
        FieldKind::Multiplier => PhplateField::Multiplier,
    }
}

fn config_for(scheme: PhplateScheme, degree: usize, material: *const PhplateMaterial) -> StudyConfig {
    let mut config = StudyConfig::new(scheme_of(scheme), degree);
    // SAFETY: the caller passes either null or a valid material pointer.
    if let Some(m) = unsafe { material.as_ref() } {
        config.params = MaterialParams {
            young: m.young,
            poisson: m.poisson,
            density: m.density,
            thickness: m.thickness,
            shear_correction: m.shear_correction,
        };
    }
    config
}

fn system_ref<'a>(system: *const PhplateSystem) -> Result<&'a PhSystem, (PhplateStatus, String)> {
    // SAFETY: non-null handles come from `phplate_system_new` and stay valid
    // until `phplate_system_free`.
    unsafe { system.as_ref() }.map(|s| &s.inner).ok_or_else(|| null("system"))
}

fn matrix_of(system: &PhSystem, which: PhplateMatrix) -> &CsrMatrix {
    match which {
        PhplateMatrix::Mass => system.mass(),
        PhplateMatrix::Structure => system.structure(),
    }
}

/// Default material of a scheme: the thick plate for the Mindlin schemes and
/// the thin plate for the Kirchhoff scheme.
#[no_mangle]
pub extern "C" fn phplate_default_material(scheme: PhplateScheme) -> PhplateMaterial {
    let p = scheme_of(scheme).default_params();
    PhplateMaterial {
        young: p.young,
        poisson: p.poisson,
        density: p.density,
        thickness: p.thickness,
        shear_correction: p.shear_correction,
    }
}

/// Assembles the system of `scheme` with polynomial degree `degree` on the
/// unit square split into `n x n` cells. `material` may be null to use the
/// scheme's default material. On success `*out` receives a new handle.
///
/// # Safety
/// `out` must be valid for writes; `material` must be null or valid for reads.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_new(
    scheme: PhplateScheme,
    n: usize,
    degree: usize,
    material: *const PhplateMaterial,
    out: *mut *mut PhplateSystem,
) -> PhplateStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = config_for(scheme, degree, material);
        let inner = build_system(&config, n).map_err(lift)?;
        let handle = Box::into_raw(Box::new(PhplateSystem { inner }));
        // SAFETY: checked non-null above.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Releases a handle. Passing null is a no-op.
///
/// # Safety
/// `system` must be null or a handle from `phplate_system_new` that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_free(system: *mut PhplateSystem) {
    if !system.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(system) });
    }
}

/// Number of retained unknowns.
///
/// # Safety
/// `system` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_dim(system: *const PhplateSystem, out: *mut usize) -> PhplateStatus {
    guarded(|| {
        let s = system_ref(system)?;
        // SAFETY: the caller guarantees `out` is writable when non-null.
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = s.dim();
        Ok(())
    })
}

/// Number of fields of the scheme; fields are indexed in global dof order.
///
/// # Safety
/// `system` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_field_count(system: *const PhplateSystem, out: *mut usize) -> PhplateStatus {
    guarded(|| {
        let s = system_ref(system)?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = s.fields().len();
        Ok(())
    })
}

/// Retained dofs of one field. Fields absent from the scheme report
/// `InvalidArgument`.
///
/// # Safety
/// `system` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_field_dofs(
    system: *const PhplateSystem,
    field: PhplateField,
    out: *mut usize,
) -> PhplateStatus {
    guarded(|| {
        let s = system_ref(system)?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let kind = field_of(field);
        if s.field(kind).is_none() {
            return Err((
                PhplateStatus::InvalidArgument,
                format!("scheme {} has no field {kind}", s.scheme()),
            ));
        }
        *out = s.free_count(kind);
        Ok(())
    })
}

/// Checks symmetry of `M`, skew-symmetry of `J` and the inertia of `M`.
///
/// # Safety
/// `system` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_check_structure(
    system: *const PhplateSystem,
    out: *mut PhplateStructureReport,
) -> PhplateStatus {
    guarded(|| {
        let s = system_ref(system)?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let report = s.structure_report();
        let inertia = s.mass_inertia().map_err(lift)?;
        let multiplier_dofs = s.free_count(FieldKind::Multiplier);
        let holds = report.holds() && inertia.zero == 0 && inertia.negative == multiplier_dofs;
        *out = PhplateStructureReport {
            mass_symmetry: report.mass_symmetry,
            structure_skewness: report.structure_skewness,
            positive_pivots: inertia.positive,
            negative_pivots: inertia.negative,
            zero_pivots: inertia.zero,
            multiplier_dofs,
            holds: u8::from(holds),
        };
        Ok(())
    })
}

/// Number of stored entries of `M` or `J`.
///
/// # Safety
/// `system` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_matrix_nnz(
    system: *const PhplateSystem,
    which: PhplateMatrix,
    out: *mut usize,
) -> PhplateStatus {
    guarded(|| {
        let s = system_ref(system)?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = matrix_of(s, which).nnz();
        Ok(())
    })
}

/// Copies `M` or `J` in coordinate form, row-major, into caller buffers of
/// length `capacity`. Query the required length with
/// `phplate_system_matrix_nnz`; shorter buffers report `BufferTooSmall`.
///
/// # Safety
/// `system` must be a live handle; `rows`, `cols` and `values` must each be
/// valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_system_matrix_coo(
    system: *const PhplateSystem,
    which: PhplateMatrix,
    rows: *mut usize,
    cols: *mut usize,
    values: *mut f64,
    capacity: usize,
) -> PhplateStatus {
    guarded(|| {
        let s = system_ref(system)?;
        let a = matrix_of(s, which);
        if a.nnz() > capacity {
            return Err((
                PhplateStatus::BufferTooSmall,
                format!("matrix has {} entries, buffers hold {capacity}", a.nnz()),
            ));
        }
        if rows.is_null() || cols.is_null() || values.is_null() {
            return Err(null("rows, cols or values"));
        }
        // SAFETY: each buffer holds at least `capacity >= nnz` elements.
        let (rows, cols, values) = unsafe {
            (
                std::slice::from_raw_parts_mut(rows, a.nnz()),
                std::slice::from_raw_parts_mut(cols, a.nnz()),
                std::slice::from_raw_parts_mut(values, a.nnz()),
            )
        };
        let mut k = 0;
        for i in 0..a.nrows() {
            for (j, v) in a.row(i) {
                rows[k] = i;
                cols[k] = j;
                values[k] = v;
                k += 1;
            }
        }
        Ok(())
    })
}

/// Integrates the manufactured solution of `scheme` on an `n x n` mesh with
/// the default time step and final time, and reports the maximum-in-time
/// error of every field. `fields` and `errors` receive one entry per field
/// of the scheme in global dof order and must hold `capacity` entries;
/// `*count` receives the number of fields. `material` may be null.
///
/// # Safety
/// `summary` and `count` must be valid for writes; `fields` and `errors`
/// must be valid for `capacity` writes; `material` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn phplate_run_manufactured(
    scheme: PhplateScheme,
    n: usize,
    degree: usize,
    material: *const PhplateMaterial,
    summary: *mut PhplateRunSummary,
    fields: *mut PhplateField,
    errors: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> PhplateStatus {
    guarded(|| {
        let summary = unsafe { summary.as_mut() }.ok_or_else(|| null("summary"))?;
        let count = unsafe { count.as_mut() }.ok_or_else(|| null("count"))?;
        let config = config_for(scheme, degree, material);
        let fields_needed = config.scheme.fields().len();
        *count = fields_needed;
        if capacity < fields_needed {
            return Err((
                PhplateStatus::BufferTooSmall,
                format!("scheme has {fields_needed} fields, buffers hold {capacity}"),
            ));
        }
        if fields.is_null() || errors.is_null() {
            return Err(null("fields or errors"));
        }
        let outcome = run_manufactured(&config, n).map_err(lift)?;
        *summary = PhplateRunSummary {
            h: outcome.h,
            dt: outcome.dt,
            steps: outcome.steps,
            max_solve_residual: outcome.max_solve_residual,
            relative_power_residual: outcome.relative_power_residual,
            relative_energy_drift: outcome.relative_energy_drift,
        };
        // SAFETY: both buffers hold at least `capacity >= fields_needed` slots.
        let (fields, errors) = unsafe {
            (
                std::slice::from_raw_parts_mut(fields, fields_needed),
                std::slice::from_raw_parts_mut(errors, fields_needed),
            )
        };
        for (i, e) in outcome.errors.iter().enumerate() {
            fields[i] = field_code(e.field);
            errors[i] = e.error;
        }
        Ok(())
    })
}

/// Copies the last error message of the calling thread as a NUL-terminated
/// string into `buffer`, truncating to `len - 1` bytes. Returns the full
/// message length excluding the terminator, so a return value `>= len`
/// signals truncation. `buffer` may be null to query the length.
///
/// # Safety
/// `buffer` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn phplate_last_error_message(buffer: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && len > 0 {
            let copied = bytes.len().min(len - 1);
            // SAFETY: `buffer` holds `len > copied` bytes.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, copied);
                *buffer.add(copied) = 0;
            }
        }
        bytes.len()
    })
}

/// Version string of the library, NUL-terminated and statically allocated.
#[no_mangle]
pub extern "C" fn phplate_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_groups_errors() {
        assert_eq!(status_of(&Error::Config("x".into())), PhplateStatus::InvalidArgument);
        assert_eq!(
            status_of(&Error::Singular {
                column: 0,
                magnitude: 0.0
            }),
            PhplateStatus::SolverFailure
        );
        assert_eq!(status_of(&Error::Structure("x".into())), PhplateStatus::StructureViolation);
    }

    #[test]
    fn panics_become_internal_errors() {
        let status = guarded(|| panic!("boom"));
        assert_eq!(status, PhplateStatus::Internal);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { phplate_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
    }

    #[test]
    fn field_codes_round_trip() {
        for kind in [
            FieldKind::Velocity,
            FieldKind::AngularVelocity,
            FieldKind::Moment,
            FieldKind::Shear,
            FieldKind::Multiplier,
        ] {
            assert_eq!(field_of(field_code(kind)), kind);
        }
    }
}
