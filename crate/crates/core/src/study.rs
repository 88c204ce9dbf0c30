//! Manufactured-solution runs and convergence sweeps.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{apply_essential_bcs, assemble_load, assemble_system, FieldKind, MaterialParams, PhSystem, Scheme};
use crate::error::{Error, Result};
use crate::manufactured::{
    convergence_rates, kirchhoff_exact, mindlin_exact, ConvergenceRates, ErrorTracker, ExactSolution, FieldError,
};
use crate::mesh::{build_rect_grid, build_tri_grid, CellKind, Diagonal, Mesh};
use crate::timeint::{integrate, Forcing, IntegrationOptions, SeparableForcing, Trajectory, Unforced};

/// Settings shared by every run of a study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyConfig {
    pub scheme: Scheme,
    pub degree: usize,
    pub params: MaterialParams,
    /// Time step as a multiple of the mesh size.
    pub dt_factor: f64,
    pub final_time: f64,
    /// Diagonal pattern of triangular meshes.
    #[serde(serialize_with = "serialize_diagonal")]
    pub diagonal: Diagonal,
    /// Drive the plate with the manufactured force and torque.
    pub forced: bool,
}

fn serialize_diagonal<S: serde::Serializer>(d: &Diagonal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match d {
        Diagonal::Right => "right",
        Diagonal::Left => "left",
        Diagonal::Crossed => "crossed",
    })
}

impl StudyConfig {
    pub fn new(scheme: Scheme, degree: usize) -> Self {
        Self {
            scheme,
            degree,
            params: scheme.default_params(),
            dt_factor: 0.1,
            final_time: 1.0,
            diagonal: Diagonal::Right,
            forced: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(1..=3).contains(&self.degree) {
            return Err(Error::Config(format!("degree must be 1, 2 or 3 (got {})", self.degree)));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return Err(Error::Config(format!("dt factor must be positive (got {})", self.dt_factor)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!("final time must be positive (got {})", self.final_time)));
        }
        Ok(())
    }

    pub fn mesh(&self, n: usize) -> Result<Arc<Mesh>> {
        let mesh = match self.scheme.cell_kind() {
            CellKind::Square => build_rect_grid(n)?,
            CellKind::Triangle => build_tri_grid(n, self.diagonal)?,
        };
        Ok(Arc::new(mesh))
    }

    /// Time step on a mesh of size `h`, adjusted so that it divides the
    /// final time exactly.
    pub fn time_step(&self, h: f64) -> f64 {
        let steps = (self.final_time / (self.dt_factor * h)).round().max(1.0);
        self.final_time / steps
    }

    pub fn exact_solution(&self) -> Result<ExactSolution> {
        if self.scheme.is_mindlin() {
            mindlin_exact(&self.params)
        } else {
            kirchhoff_exact(&self.params)
        }
    }
}

/// Assembled system with boundary conditions applied.
pub fn build_system(config: &StudyConfig, n: usize) -> Result<PhSystem> {
    config.validate()?;
    let mesh = config.mesh(n)?;
    Ok(apply_essential_bcs(assemble_system(config.scheme, mesh, config.degree, &config.params)?))
}

/// Load of the manufactured solution on the retained dofs; the force and
/// torque share the time factor `sin t`.
pub fn manufactured_forcing(system: &PhSystem, exact: &ExactSolution) -> Result<SeparableForcing> {
    let spatial = assemble_load(
        system,
        &|x, _| exact.force_profile(x),
        &|x, _| exact.torque_profile(x),
        0.0,
    )?;
    Ok(SeparableForcing {
        spatial,
        profile: f64::sin,
    })
}

/// Degrees of freedom of one field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldDofs {
    pub field: FieldKind,
    pub dofs: usize,
}

/// Outcome of a single run.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub dofs: Vec<FieldDofs>,
    pub errors: Vec<FieldError>,
    pub max_solve_residual: f64,
    pub relative_power_residual: f64,
    pub relative_energy_drift: f64,
    /// Wall-clock time; left out of serialized reports so they are reproducible.
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Integrates from the projected exact initial state and tracks the error
/// of every field at every step.
pub fn run_manufactured(config: &StudyConfig, n: usize) -> Result<RunOutcome> {
    let start = Instant::now();
    let system = build_system(config, n)?;
    let exact = config.exact_solution()?;
    let h = system.mesh().h();
    let dt = config.time_step(h);
    let initial = system.project_fields(&|kind, x| exact.field(kind, x, 0.0))?;
    let forcing: Box<dyn Forcing> = if config.forced {
        Box::new(manufactured_forcing(&system, &exact)?)
    } else {
        Box::new(Unforced { dim: system.dim() })
    };
    let mut tracker = ErrorTracker::new(&system, &exact)?;
    let options = IntegrationOptions {
        dt,
        final_time: config.final_time,
        store_states: false,
    };
    let trajectory = integrate(&system, initial, forcing.as_ref(), &options, &mut |_, t, state| {
        tracker.observe(&system, state, t)
    })?;
    Ok(RunOutcome {
        n,
        h,
        dt,
        steps: trajectory.steps(),
        dofs: system
            .fields()
            .iter()
            .map(|b| FieldDofs {
                field: b.kind,
                dofs: system.free_count(b.kind),
            })
            .collect(),
        errors: tracker.max_errors(),
        max_solve_residual: trajectory.max_solve_residual,
        relative_power_residual: trajectory.relative_power_residual(),
        relative_energy_drift: trajectory.relative_energy_drift(),
        seconds: start.elapsed().as_secs_f64(),
        trajectory,
    })
}

/// Error history and rates of one field over the mesh levels.
#[derive(Clone, Debug, Serialize)]
pub struct FieldConvergence {
    pub field: FieldKind,
    pub norm: &'static str,
    /// `(h, error)` sorted by decreasing `h`.
    pub levels: Vec<(f64, f64)>,
    pub rates: Option<ConvergenceRates>,
    /// Least-squares slope over the three finest levels.
    pub fine_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub runs: Vec<RunOutcome>,
    pub fields: Vec<FieldConvergence>,
}

/// Runs every mesh level and computes per-field rates.
pub fn convergence_study(config: &StudyConfig, levels: &[usize]) -> Result<ConvergenceStudy> {
    if levels.len() < 2 {
        return Err(Error::InvalidConvergenceData(format!(
            "need at least two mesh levels, got {}",
            levels.len()
        )));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut runs = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        runs.push(run_manufactured(config, n)?);
    }
    let fields = summarize(&runs);
    Ok(ConvergenceStudy {
        config: config.clone(),
        runs,
        fields,
    })
}

fn summarize(runs: &[RunOutcome]) -> Vec<FieldConvergence> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .errors
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let levels: Vec<(f64, f64)> = runs.iter().map(|r| (r.h, r.errors[i].error)).collect();
            let rates = convergence_rates(&levels).ok();
            let tail = &levels[levels.len().saturating_sub(3)..];
            let fine_slope = convergence_rates(tail).ok().map(|r| r.fitted);
            FieldConvergence {
                field: e.field,
                norm: e.norm,
                levels,
                rates,
                fine_slope,
            }
        })
        .collect()
}

impl ConvergenceStudy {
    pub fn field(&self, kind: FieldKind) -> Option<&FieldConvergence> {
        self.fields.iter().find(|f| f.field == kind)
    }

    pub fn max_relative_power_residual(&self) -> f64 {
        self.runs.iter().map(|r| r.relative_power_residual).fold(0.0, f64::max)
    }

    pub fn max_solve_residual(&self) -> f64 {
        self.runs.iter().map(|r| r.max_solve_residual).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_step_divides_final_time() {
        let c = StudyConfig::new(Scheme::Hhj, 1);
        for n in [1, 3, 8, 32] {
            let dt = c.time_step(1.0 / n as f64);
            let steps = (1.0 / dt).round();
            assert!((steps * dt - 1.0).abs() < 1e-14);
            assert_eq!(steps as usize, 10 * n);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = StudyConfig::new(Scheme::Bjt, 4);
        assert!(c.validate().is_err());
        c.degree = 1;
        c.dt_factor = 0.0;
        assert!(c.validate().is_err());
        assert!(convergence_study(&StudyConfig::new(Scheme::Bjt, 1), &[2]).is_err());
    }

    #[test]
    fn small_hhj_run_is_consistent() {
        let c = StudyConfig::new(Scheme::Hhj, 1);
        let out = run_manufactured(&c, 2).unwrap();
        assert_eq!(out.steps, 20);
        assert_eq!(out.trajectory.times.len(), 21);
        assert!(out.errors.iter().all(|e| e.error.is_finite()));
        assert!(out.relative_power_residual < 1e-10);
    }

    #[test]
    fn unforced_run_conserves_energy() {
        let mut c = StudyConfig::new(Scheme::Afw, 1);
        c.forced = false;
        let out = run_manufactured(&c, 2).unwrap();
        assert!(out.relative_energy_drift < 1e-9);
    }

    #[test]
    fn errors_decrease_under_refinement() {
        let c = StudyConfig::new(Scheme::Bjt, 1);
        let study = convergence_study(&c, &[4, 2]).unwrap();
        assert_eq!(study.runs[0].n, 2);
        for f in &study.fields {
            assert!(f.levels[1].1 < f.levels[0].1, "{:?}", f);
        }
    }
}
