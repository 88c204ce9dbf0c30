//! Crank-Nicolson integration of `M de/dt = J e + F(t)`.
//!
//! The step matrix `M - dt/2 J` is factored once and reused. Loads are
//! averaged between the step endpoints. With a skew `J` the update
//! conserves `H = e^T M e / 2` exactly up to the linear solve, and the
//! energy change over a step equals the averaged supplied power.

use std::io::Write;

use serde::Serialize;

use crate::assembly::PhSystem;
use crate::error::{Error, Result};
use crate::linalg::{dot, lu_factor_with, ColumnOrdering, CsrMatrix, LuFactorization, LuOptions, PivotMode};

/// Bound on the relative residual of every time-stepping solve.
pub const SOLVE_TOLERANCE: f64 = 1e-9;

/// Source of the load vector `F(t)` on the retained dofs.
pub trait Forcing {
    fn load(&self, t: f64) -> Result<Vec<f64>>;
}

/// `F = 0`.
#[derive(Clone, Copy, Debug)]
pub struct Unforced {
    pub dim: usize,
}

impl Forcing for Unforced {
    fn load(&self, _t: f64) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim])
    }
}

/// `F(t) = profile(t) * spatial`.
#[derive(Clone, Debug)]
pub struct SeparableForcing {
    pub spatial: Vec<f64>,
    pub profile: fn(f64) -> f64,
}

impl Forcing for SeparableForcing {
    fn load(&self, t: f64) -> Result<Vec<f64>> {
        let s = (self.profile)(t);
        Ok(self.spatial.iter().map(|v| v * s).collect())
    }
}

impl<F: Fn(f64) -> Result<Vec<f64>>> Forcing for F {
    fn load(&self, t: f64) -> Result<Vec<f64>> {
        self(t)
    }
}

/// Factored Crank-Nicolson step for a fixed `dt` (which may be negative).
#[derive(Debug)]
pub struct CnStepper {
    dt: f64,
    lhs: CsrMatrix,
    rhs: CsrMatrix,
    factor: LuFactorization,
}

impl CnStepper {
    pub fn new(mass: &CsrMatrix, structure: &CsrMatrix, dt: f64) -> Result<Self> {
        Self::with_options(mass, structure, dt, &LuOptions::default())
    }

    pub fn with_options(mass: &CsrMatrix, structure: &CsrMatrix, dt: f64, options: &LuOptions) -> Result<Self> {
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::Config(format!("time step must be finite and nonzero (got {dt})")));
        }
        let lhs = mass.add_scaled(1.0, structure, -0.5 * dt)?;
        let rhs = mass.add_scaled(1.0, structure, 0.5 * dt)?;
        let factor = lu_factor_with(&lhs, options)?;
        Ok(Self { dt, lhs, rhs, factor })
    }

    /// Stepper for an assembled system. The symmetric part of the step
    /// matrix is `M`, so diagonal pivots in a fill-reducing order are
    /// tried first; threshold pivoting is the fallback when a pivot
    /// vanishes.
    pub fn for_system(system: &PhSystem, dt: f64) -> Result<Self> {
        let (m, j) = (system.mass(), system.structure());
        let pattern = m.add_scaled(1.0, j, 1.0)?;
        let options = LuOptions {
            pivot: PivotMode::DiagonalOnly,
            ordering: ColumnOrdering::Given(system.elimination_order(&pattern)),
        };
        match Self::with_options(m, j, dt, &options) {
            Err(Error::Singular { .. }) => Self::new(m, j, dt),
            other => other,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn factorization(&self) -> &LuFactorization {
        &self.factor
    }

    /// One step; returns the new state and the relative solve residual.
    pub fn step(&self, state: &[f64], load_now: &[f64], load_next: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.lhs.nrows();
        for len in [state.len(), load_now.len(), load_next.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        let mut b = self.rhs.mul_vec(state)?;
        let half = 0.5 * self.dt;
        for ((bi, a), c) in b.iter_mut().zip(load_now).zip(load_next) {
            *bi += half * (a + c);
        }
        self.factor.solve_checked(&self.lhs, &b, SOLVE_TOLERANCE)
    }
}

/// One Crank-Nicolson step with a prepared stepper.
pub fn cn_step(stepper: &CnStepper, state: &[f64], load_now: &[f64], load_next: &[f64]) -> Result<Vec<f64>> {
    stepper.step(state, load_now, load_next).map(|(x, _)| x)
}

pub fn energy(mass: &CsrMatrix, state: &[f64]) -> Result<f64> {
    Ok(0.5 * dot(state, &mass.mul_vec(state)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub dt: f64,
    pub final_time: f64,
    /// Keep every state in the trajectory.
    pub store_states: bool,
}

/// Time grid, energy and power-balance traces of a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `H^{n+1} - H^n - dt (e^n + e^{n+1})/2 . (F^n + F^{n+1})/2`; zero at `t_0`.
    pub power_residual: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
    pub max_solve_residual: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn max_energy(&self) -> f64 {
        self.energy.iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    /// `max |power residual| / max |H|` (absolute when the energy is zero).
    pub fn relative_power_residual(&self) -> f64 {
        let worst = self.power_residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let scale = self.max_energy();
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    /// `|H(t_f) - H(0)| / H(0)`.
    pub fn relative_energy_drift(&self) -> f64 {
        match (self.energy.first(), self.energy.last()) {
            (Some(&h0), Some(&h1)) if h0 != 0.0 => ((h1 - h0) / h0).abs(),
            (Some(_), Some(&h1)) => h1.abs(),
            _ => 0.0,
        }
    }

    pub fn write_energy_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,H,power_residual")?;
        for ((t, h), r) in self.times.iter().zip(&self.energy).zip(&self.power_residual) {
            writeln!(w, "{t:.12e},{h:.17e},{r:.17e}")?;
        }
        Ok(())
    }
}

/// Number of steps of size `dt` covering `[0, final_time]`.
pub fn step_count(dt: f64, final_time: f64) -> Result<usize> {
    if !(dt > 0.0 && final_time > 0.0 && dt.is_finite() && final_time.is_finite()) {
        return Err(Error::Config(format!(
            "time step and final time must be positive (got dt = {dt}, t_f = {final_time})"
        )));
    }
    let n = (final_time / dt).round();
    if n < 1.0 || ((n * dt - final_time) / final_time).abs() > 1e-9 {
        return Err(Error::Config(format!("time step {dt} does not divide final time {final_time}")));
    }
    Ok(n as usize)
}

/// Integrates from `t = 0` and calls `observer(step, t, state)` at every
/// time instant, including the initial one.
pub fn integrate(
    system: &PhSystem,
    initial: Vec<f64>,
    forcing: &dyn Forcing,
    options: &IntegrationOptions,
    observer: &mut dyn FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<Trajectory> {
    let stepper = CnStepper::for_system(system, options.dt)?;
    integrate_with(&stepper, system.mass(), initial, forcing, options, observer)
}

pub fn integrate_matrices(
    mass: &CsrMatrix,
    structure: &CsrMatrix,
    initial: Vec<f64>,
    forcing: &dyn Forcing,
    options: &IntegrationOptions,
    observer: &mut dyn FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<Trajectory> {
    let stepper = CnStepper::new(mass, structure, options.dt)?;
    integrate_with(&stepper, mass, initial, forcing, options, observer)
}

fn integrate_with(
    stepper: &CnStepper,
    mass: &CsrMatrix,
    initial: Vec<f64>,
    forcing: &dyn Forcing,
    options: &IntegrationOptions,
    observer: &mut dyn FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<Trajectory> {
    if initial.len() != mass.nrows() {
        return Err(Error::DimensionMismatch {
            expected: mass.nrows(),
            actual: initial.len(),
        });
    }
    let steps = step_count(options.dt, options.final_time)?;
    let dt = options.dt;
    let mut traj = Trajectory::default();
    let mut state = initial;
    let mut load = forcing.load(0.0)?;
    let mut h = energy(mass, &state)?;
    traj.times.push(0.0);
    traj.energy.push(h);
    traj.power_residual.push(0.0);
    observer(0, 0.0, &state)?;
    if options.store_states {
        traj.states.push(state.clone());
    }
    for n in 0..steps {
        let t_next = (n + 1) as f64 * dt;
        let load_next = forcing.load(t_next)?;
        let (next, residual) = stepper.step(&state, &load, &load_next)?;
        traj.max_solve_residual = traj.max_solve_residual.max(residual);
        let h_next = energy(mass, &next)?;
        let supplied: f64 = state
            .iter()
            .zip(&next)
            .zip(load.iter().zip(&load_next))
            .map(|((a, b), (f, g))| 0.25 * (a + b) * (f + g))
            .sum();
        traj.times.push(t_next);
        traj.energy.push(h_next);
        traj.power_residual.push(h_next - h - dt * supplied);
        observer(n + 1, t_next, &next)?;
        if options.store_states {
            traj.states.push(next.clone());
        }
        state = next;
        load = load_next;
        h = h_next;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;

    fn skew_system(n: usize) -> (CsrMatrix, CsrMatrix) {
        let mut m = TripletBuilder::new(n, n);
        let mut j = TripletBuilder::new(n, n);
        for i in 0..n {
            m.push(i, i, 1.0 + i as f64 * 0.1);
            if i + 1 < n {
                m.push(i, i + 1, 0.2);
                m.push(i + 1, i, 0.2);
                let v = 1.0 + (i % 3) as f64;
                j.push(i, i + 1, v);
                j.push(i + 1, i, -v);
            }
        }
        (m.build(), j.build())
    }

    fn opts(dt: f64, tf: f64) -> IntegrationOptions {
        IntegrationOptions {
            dt,
            final_time: tf,
            store_states: true,
        }
    }

    #[test]
    fn zero_structure_and_load_is_stationary() {
        let m = CsrMatrix::identity(3);
        let j = CsrMatrix::zeros(3, 3);
        let s = CnStepper::new(&m, &j, 0.1).unwrap();
        let e = vec![1.0, 2.0, 3.0];
        assert_eq!(cn_step(&s, &e, &[0.0; 3], &[0.0; 3]).unwrap(), e);
    }

    #[test]
    fn constant_load_integrates_exactly() {
        let m = CsrMatrix::identity(1);
        let j = CsrMatrix::zeros(1, 1);
        let s = CnStepper::new(&m, &j, 0.25).unwrap();
        let next = cn_step(&s, &[2.0], &[1.0], &[1.0]).unwrap();
        assert!((next[0] - 2.25).abs() < 1e-15);
    }

    #[test]
    fn unforced_energy_is_conserved() {
        let (m, j) = skew_system(30);
        let e0: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let traj = integrate_matrices(&m, &j, e0, &Unforced { dim: 30 }, &opts(0.01, 1.0), &mut |_, _, _| Ok(())).unwrap();
        assert_eq!(traj.steps(), 100);
        assert!(traj.relative_energy_drift() < 1e-11);
    }

    #[test]
    fn forced_power_balance() {
        let (m, j) = skew_system(20);
        let spatial: Vec<f64> = (0..20).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let forcing = SeparableForcing {
            spatial,
            profile: f64::sin,
        };
        let traj =
            integrate_matrices(&m, &j, vec![0.0; 20], &forcing, &opts(0.05, 2.0), &mut |_, _, _| Ok(())).unwrap();
        assert!(traj.max_energy() > 0.0);
        assert!(traj.relative_power_residual() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let (m, j) = skew_system(5);
        let traj = integrate_matrices(&m, &j, vec![0.0; 5], &Unforced { dim: 5 }, &opts(0.1, 1.0), &mut |_, _, _| Ok(()))
            .unwrap();
        assert!(traj.states.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let (m, j) = skew_system(15);
        let e0: Vec<f64> = (0..15).map(|i| (i as f64).cos()).collect();
        let fwd = CnStepper::new(&m, &j, 0.02).unwrap();
        let bwd = CnStepper::new(&m, &j, -0.02).unwrap();
        let zero = vec![0.0; 15];
        let mut e = e0.clone();
        for _ in 0..50 {
            e = cn_step(&fwd, &e, &zero, &zero).unwrap();
        }
        for _ in 0..50 {
            e = cn_step(&bwd, &e, &zero, &zero).unwrap();
        }
        let err: f64 = e.iter().zip(&e0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(0.1, 1.0).unwrap(), 10);
        assert_eq!(step_count(1.0 / 320.0, 1.0).unwrap(), 320);
        assert!(step_count(0.3, 1.0).is_err());
        assert!(step_count(-0.1, 1.0).is_err());
    }

    #[test]
    fn energy_csv_layout() {
        let (m, j) = skew_system(4);
        let traj = integrate_matrices(&m, &j, vec![1.0; 4], &Unforced { dim: 4 }, &opts(0.25, 1.0), &mut |_, _, _| Ok(()))
            .unwrap();
        let mut out = Vec::new();
        traj.write_energy_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,H,power_residual");
        assert_eq!(lines.len(), 1 + 5);
    }
}
