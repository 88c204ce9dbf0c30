//! Closed-form solutions of the two benchmark problems, their forcing
//! terms and space-time error norms.
//!
//! Every field is a spatial profile multiplied by `cos t` (velocities) or
//! `sin t` (stresses, displacement and loads). Error norms exploit that
//! split: each profile is projected once, and the per-step error follows
//! from the projection without re-integrating the exact field.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::assembly::{
    constitutive_bending_inverse, gram_matrix, moment_vector, solve_on_subspace, FieldKind, FieldSample,
    FunctionSpace, MaterialParams, PhSystem, DATA_EXACTNESS_MARGIN,
};
use crate::elements::CellContext;
use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};
use crate::poly::Poly2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlateModel {
    Mindlin,
    Kirchhoff,
}

/// Polynomial vector or tensor field with its partial derivatives.
#[derive(Clone, Debug)]
struct PolyField {
    comps: Vec<Poly2>,
    grads: Vec<[Poly2; 2]>,
}

impl PolyField {
    fn new(comps: Vec<Poly2>) -> Self {
        let grads = comps.iter().map(|p| [p.dx(), p.dy()]).collect();
        Self { comps, grads }
    }

    fn sample(&self, x: [f64; 2]) -> FieldSample {
        let mut s = FieldSample::default();
        for (c, (p, g)) in self.comps.iter().zip(&self.grads).enumerate() {
            s.value[c] = p.eval(x[0], x[1]);
            s.grad[c] = [g[0].eval(x[0], x[1]), g[1].eval(x[0], x[1])];
        }
        s
    }
}

#[derive(Clone, Debug)]
struct MindlinProfiles {
    displacement: PolyField,
    rotation: PolyField,
    moment: PolyField,
    shear: PolyField,
    force: Poly2,
    torque: [Poly2; 2],
}

#[derive(Clone, Debug)]
enum Profiles {
    Mindlin(Box<MindlinProfiles>),
    Kirchhoff,
}

/// Exact solution with its forcing, for one set of material parameters.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    params: MaterialParams,
    profiles: Profiles,
}

/// `x^3 (x-1)^3` in one variable, ascending coefficients.
const CUBE_BUMP: [f64; 7] = [0.0, 0.0, 0.0, -1.0, 3.0, -3.0, 1.0];
/// `x (x-1) (5x^2 - 5x + 1)`.
const CURVATURE_BUMP: [f64; 5] = [0.0, -1.0, 6.0, -10.0, 5.0];
/// `x^2 (x-1)^2 (2x-1)`.
const SLOPE_BUMP: [f64; 6] = [0.0, 0.0, -1.0, 4.0, -5.0, 2.0];

/// Manufactured Mindlin solution: `w = w_s sin t`, `theta = theta_s sin t`
/// with polynomial profiles clamped on the unit square, and the force and
/// torque that make it exact.
pub fn mindlin_exact(params: &MaterialParams) -> Result<ExactSolution> {
    params.validate()?;
    let p = params;
    let (cx, cy) = (Poly2::in_x(&CUBE_BUMP), Poly2::in_y(&CUBE_BUMP));
    let (kx, ky) = (Poly2::in_x(&CURVATURE_BUMP), Poly2::in_y(&CURVATURE_BUMP));
    let (sx, sy) = (Poly2::in_x(&SLOPE_BUMP), Poly2::in_y(&SLOPE_BUMP));

    let correction = 2.0 * p.thickness * p.thickness / (5.0 * (1.0 - p.poisson));
    let mut w = (&cx * &cy).scale(1.0 / 3.0);
    w.add_scaled(-correction, &(&(&cy * &kx) + &(&cx * &ky)));
    let theta = [&cy * &sx, &cx * &sy];

    // Curvature Grad(theta), row-wise: [d1 t1, d2 t1, d1 t2, d2 t2].
    let curvature = [theta[0].dx(), theta[0].dy(), theta[1].dx(), theta[1].dy()];
    let trace = &curvature[0] + &curvature[3];
    let d0 = p.bending_stiffness();
    let moment: Vec<Poly2> = (0..4)
        .map(|i| {
            let mut m = curvature[i].scale(d0 * (1.0 - p.poisson));
            if i == 0 || i == 3 {
                m.add_scaled(d0 * p.poisson, &trace);
            }
            m
        })
        .collect();
    let c = p.shear_stiffness();
    let shear = [(&w.dx() - &theta[0]).scale(c), (&w.dy() - &theta[1]).scale(c)];

    // With w_d = w_s sin t the accelerations are -w_s sin t and -theta_s sin t.
    let div_shear = &shear[0].dx() + &shear[1].dy();
    let force = -&(&w.scale(p.areal_density()) + &div_shear);
    let div_moment = [&moment[0].dx() + &moment[1].dy(), &moment[2].dx() + &moment[3].dy()];
    let torque = [0, 1].map(|i| {
        let mut t = theta[i].scale(-p.rotary_inertia());
        t.add_scaled(-1.0, &shear[i]);
        t.add_scaled(-1.0, &div_moment[i]);
        t
    });

    Ok(ExactSolution {
        params: *p,
        profiles: Profiles::Mindlin(Box::new(MindlinProfiles {
            displacement: PolyField::new(vec![w]),
            rotation: PolyField::new(theta.to_vec()),
            moment: PolyField::new(moment),
            shear: PolyField::new(shear.to_vec()),
            force,
            torque,
        })),
    })
}

/// Simply supported Kirchhoff solution `w = sin(pi x) sin(pi y) sin t`.
pub fn kirchhoff_exact(params: &MaterialParams) -> Result<ExactSolution> {
    params.validate()?;
    Ok(ExactSolution {
        params: *params,
        profiles: Profiles::Kirchhoff,
    })
}

/// Static load of the Mindlin benchmark in its closed form, which carries
/// the bending stiffness without the `b^3` factor. Multiplied by `b^3` it
/// equals `-div q_s`.
pub fn closed_form_static_load(params: &MaterialParams, x: [f64; 2]) -> f64 {
    let (x, y) = (x[0], x[1]);
    let kx = 5.0 * x * x - 5.0 * x + 1.0;
    let ky = 5.0 * y * y - 5.0 * y + 1.0;
    let sq = |s: f64| s * s;
    let scale = params.young / (12.0 * (1.0 - params.poisson * params.poisson));
    scale
        * (12.0 * y * (y - 1.0) * kx * (2.0 * sq(y) * sq(y - 1.0) + x * (x - 1.0) * ky)
            + 12.0 * x * (x - 1.0) * ky * (2.0 * sq(x) * sq(x - 1.0) + y * (y - 1.0) * kx))
}

impl ExactSolution {
    pub fn model(&self) -> PlateModel {
        match self.profiles {
            Profiles::Mindlin(_) => PlateModel::Mindlin,
            Profiles::Kirchhoff => PlateModel::Kirchhoff,
        }
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    /// Fields carried by this solution.
    pub fn fields(&self) -> &'static [FieldKind] {
        use FieldKind::*;
        match self.profiles {
            Profiles::Mindlin(_) => &[Velocity, AngularVelocity, Moment, Shear, Multiplier],
            Profiles::Kirchhoff => &[Velocity, Moment],
        }
    }

    /// Time factor multiplying the spatial profile of a field.
    pub fn time_factor(kind: FieldKind, t: f64) -> f64 {
        match kind {
            FieldKind::Velocity | FieldKind::AngularVelocity => t.cos(),
            FieldKind::Moment | FieldKind::Shear | FieldKind::Multiplier => t.sin(),
        }
    }

    /// Spatial profile (value and gradient) of a co-energy field.
    pub fn profile(&self, kind: FieldKind, x: [f64; 2]) -> FieldSample {
        match &self.profiles {
            Profiles::Mindlin(m) => match kind {
                FieldKind::Velocity => m.displacement.sample(x),
                FieldKind::AngularVelocity => m.rotation.sample(x),
                FieldKind::Moment => m.moment.sample(x),
                FieldKind::Shear => m.shear.sample(x),
                FieldKind::Multiplier => FieldSample::default(),
            },
            Profiles::Kirchhoff => kirchhoff_profile(&self.params, kind, x),
        }
    }

    /// Co-energy field at `(x, t)`.
    pub fn field(&self, kind: FieldKind, x: [f64; 2], t: f64) -> [f64; 4] {
        let s = Self::time_factor(kind, t);
        self.profile(kind, x).value.map(|v| v * s)
    }

    /// Vertical displacement `w(x, t)`.
    pub fn displacement(&self, x: [f64; 2], t: f64) -> f64 {
        let spatial = match &self.profiles {
            Profiles::Mindlin(m) => m.displacement.comps[0].eval(x[0], x[1]),
            Profiles::Kirchhoff => (PI * x[0]).sin() * (PI * x[1]).sin(),
        };
        spatial * t.sin()
    }

    /// Rotation `theta(x, t)`; zero for the Kirchhoff model.
    pub fn rotation(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        match &self.profiles {
            Profiles::Mindlin(m) => [0, 1].map(|i| m.rotation.comps[i].eval(x[0], x[1]) * t.sin()),
            Profiles::Kirchhoff => [0.0; 2],
        }
    }

    /// Distributed force `f(x, t)`.
    pub fn force(&self, x: [f64; 2], t: f64) -> f64 {
        self.force_profile(x) * t.sin()
    }

    /// Distributed torque `tau(x, t)`.
    pub fn torque(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self.torque_profile(x).map(|v| v * t.sin())
    }

    pub fn force_profile(&self, x: [f64; 2]) -> f64 {
        match &self.profiles {
            Profiles::Mindlin(m) => m.force.eval(x[0], x[1]),
            Profiles::Kirchhoff => {
                let p = &self.params;
                (4.0 * p.bending_stiffness() * PI.powi(4) - p.areal_density()) * (PI * x[0]).sin() * (PI * x[1]).sin()
            }
        }
    }

    pub fn torque_profile(&self, x: [f64; 2]) -> [f64; 2] {
        match &self.profiles {
            Profiles::Mindlin(m) => [0, 1].map(|i| m.torque[i].eval(x[0], x[1])),
            Profiles::Kirchhoff => [0.0; 2],
        }
    }
}

fn kirchhoff_profile(p: &MaterialParams, kind: FieldKind, x: [f64; 2]) -> FieldSample {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    match kind {
        FieldKind::Velocity => {
            let mut s = FieldSample::from_value([sx * sy, 0.0, 0.0, 0.0]);
            s.grad[0] = [PI * cx * sy, PI * sx * cy];
            s
        }
        FieldKind::Moment => {
            let pi2 = PI * PI;
            let (wxx, wxy, wyy) = (-pi2 * sx * sy, pi2 * cx * cy, -pi2 * sx * sy);
            let d0 = p.bending_stiffness();
            let tr = wxx + wyy;
            FieldSample::from_value([
                d0 * ((1.0 - p.poisson) * wxx + p.poisson * tr),
                d0 * (1.0 - p.poisson) * wxy,
                d0 * (1.0 - p.poisson) * wxy,
                d0 * ((1.0 - p.poisson) * wyy + p.poisson * tr),
            ])
        }
        _ => FieldSample::default(),
    }
}

// ---------------------------------------------------------------------------
// Strong-form residuals by finite differences.

/// Eighth-order central difference weights for offsets 1..=4.
const CENTRAL_WEIGHTS: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Eighth-order central approximation of `f'(s)` with step `h`.
pub fn central_derivative(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    CENTRAL_WEIGHTS
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let d = (i + 1) as f64 * h;
            w * (f(s + d) - f(s - d))
        })
        .sum::<f64>()
        / h
}

/// One governing equation evaluated at a sample point: the residual and
/// the largest magnitude among its terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationResidual {
    pub equation: &'static str,
    pub residual: f64,
    pub scale: f64,
}

/// Step sizes of the difference quotients.
#[derive(Clone, Copy, Debug)]
pub struct DifferenceSteps {
    pub space: f64,
    pub time: f64,
}

impl Default for DifferenceSteps {
    fn default() -> Self {
        Self {
            space: 2e-2,
            time: 1e-2,
        }
    }
}

fn residual(equation: &'static str, terms: &[f64]) -> EquationResidual {
    EquationResidual {
        equation,
        residual: terms.iter().sum(),
        scale: terms.iter().fold(0.0, |m, t| m.max(t.abs())),
    }
}

fn dx_of(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], axis: usize, h: f64) -> f64 {
    central_derivative(
        &|s| {
            let mut p = x;
            p[axis] = s;
            f(p)
        },
        x[axis],
        h,
    )
}

impl ExactSolution {
    /// Residuals of the first-order port-Hamiltonian equations and of the
    /// classical displacement equations at `(x, t)`. Derivatives are
    /// difference quotients of the field evaluators only, so they check
    /// every closed-form derivative used elsewhere.
    pub fn strong_residuals(&self, x: [f64; 2], t: f64, steps: DifferenceSteps) -> Vec<EquationResidual> {
        let (hs, ht) = (steps.space, steps.time);
        let p = self.params;
        let dt = |kind: FieldKind, c: usize| central_derivative(&|s| self.field(kind, x, s)[c], t, ht);
        let dfield = |kind: FieldKind, c: usize, axis: usize| dx_of(&|y| self.field(kind, y, t)[c], x, axis, hs);
        let mut out = Vec::new();
        match self.model() {
            PlateModel::Mindlin => {
                let div_shear = dfield(FieldKind::Shear, 0, 0) + dfield(FieldKind::Shear, 1, 1);
                out.push(residual(
                    "velocity balance",
                    &[p.areal_density() * dt(FieldKind::Velocity, 0), -div_shear, -self.force(x, t)],
                ));
                let shear = self.field(FieldKind::Shear, x, t);
                let torque = self.torque(x, t);
                for i in 0..2 {
                    let div_m = dfield(FieldKind::Moment, 2 * i, 0) + dfield(FieldKind::Moment, 2 * i + 1, 1);
                    out.push(residual(
                        "angular velocity balance",
                        &[p.rotary_inertia() * dt(FieldKind::AngularVelocity, i), -shear[i], -div_m, -torque[i]],
                    ));
                }
                let rate = Matrix2::from_fn(|i, j| dt(FieldKind::Moment, 2 * i + j));
                let strain_rate = constitutive_bending_inverse(&rate, &p);
                for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                    let sym_grad = 0.5
                        * (dfield(FieldKind::AngularVelocity, i, j) + dfield(FieldKind::AngularVelocity, j, i));
                    out.push(residual("bending compliance", &[strain_rate[(i, j)], -sym_grad]));
                }
                let rot_vel = self.field(FieldKind::AngularVelocity, x, t);
                for i in 0..2 {
                    out.push(residual(
                        "shear compliance",
                        &[
                            dt(FieldKind::Shear, i) / p.shear_stiffness(),
                            -dfield(FieldKind::Velocity, 0, i),
                            rot_vel[i],
                        ],
                    ));
                }
                out.extend(self.classical_mindlin_residuals(x, t, steps));
            }
            PlateModel::Kirchhoff => {
                let moment = |y: [f64; 2], c: usize| self.field(FieldKind::Moment, y, t)[c];
                // div Div M = d11 M11 + d12 (M12 + M21) + d22 M22.
                let second = |c: usize, a: usize, b: usize| {
                    dx_of(&|y| dx_of(&|z| moment(z, c), y, a, hs), x, b, hs)
                };
                let div_div = second(0, 0, 0) + second(1, 0, 1) + second(2, 1, 0) + second(3, 1, 1);
                out.push(residual(
                    "velocity balance",
                    &[p.areal_density() * dt(FieldKind::Velocity, 0), div_div, -self.force(x, t)],
                ));
                let rate = Matrix2::from_fn(|i, j| dt(FieldKind::Moment, 2 * i + j));
                let strain_rate = constitutive_bending_inverse(&rate, &p);
                let vel = |y: [f64; 2]| self.field(FieldKind::Velocity, y, t)[0];
                for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                    let hess = dx_of(&|y| dx_of(&vel, y, i, hs), x, j, hs);
                    out.push(residual("bending compliance", &[strain_rate[(i, j)], -hess]));
                }
                out.push(self.classical_kirchhoff_residual(x, t, steps));
            }
        }
        out
    }

    fn classical_mindlin_residuals(&self, x: [f64; 2], t: f64, steps: DifferenceSteps) -> Vec<EquationResidual> {
        let (hs, ht) = (steps.space, steps.time);
        let p = self.params;
        let c = p.shear_stiffness();
        let w = |y: [f64; 2]| self.displacement(y, t);
        let theta = |y: [f64; 2], i: usize| self.rotation(y, t)[i];
        let shear = |y: [f64; 2], i: usize| c * (dx_of(&w, y, i, hs) - theta(y, i));
        let moment = |y: [f64; 2]| {
            let grad = Matrix2::from_fn(|i, j| dx_of(&|z| theta(z, i), y, j, hs));
            crate::assembly::constitutive_bending(&grad, &p)
        };
        let w_tt = central_derivative(&|s| central_derivative(&|r| self.displacement(x, r), s, ht), t, ht);
        let div_shear = dx_of(&|y| shear(y, 0), x, 0, hs) + dx_of(&|y| shear(y, 1), x, 1, hs);
        let mut out = vec![residual(
            "transverse momentum",
            &[p.areal_density() * w_tt, -div_shear, -self.force(x, t)],
        )];
        let torque = self.torque(x, t);
        for i in 0..2 {
            let theta_tt = central_derivative(&|s| central_derivative(&|r| self.rotation(x, r)[i], s, ht), t, ht);
            let div_m = dx_of(&|y| moment(y)[(i, 0)], x, 0, hs) + dx_of(&|y| moment(y)[(i, 1)], x, 1, hs);
            out.push(residual(
                "angular momentum",
                &[p.rotary_inertia() * theta_tt, -shear(x, i), -div_m, -torque[i]],
            ));
        }
        out
    }

    fn classical_kirchhoff_residual(&self, x: [f64; 2], t: f64, steps: DifferenceSteps) -> EquationResidual {
        let (hs, ht) = (steps.space, steps.time);
        let p = self.params;
        let w = |y: [f64; 2]| self.displacement(y, t);
        let d2 = |f: &dyn Fn([f64; 2]) -> f64, y: [f64; 2], a: usize, b: usize| {
            dx_of(&|z| dx_of(f, z, a, hs), y, b, hs)
        };
        let moment = |y: [f64; 2]| {
            let hess = Matrix2::from_fn(|i, j| d2(&w, y, i, j));
            crate::assembly::constitutive_bending(&hess, &p)
        };
        let div_div = d2(&|y| moment(y)[(0, 0)], x, 0, 0)
            + d2(&|y| moment(y)[(0, 1)], x, 0, 1)
            + d2(&|y| moment(y)[(1, 0)], x, 1, 0)
            + d2(&|y| moment(y)[(1, 1)], x, 1, 1);
        let w_tt = central_derivative(&|s| central_derivative(&|r| self.displacement(x, r), s, ht), t, ht);
        residual("transverse momentum", &[p.areal_density() * w_tt, div_div, -self.force(x, t)])
    }
}

// ---------------------------------------------------------------------------
// Error norms.

/// Per-field projection data for the error of one field.
#[derive(Clone, Debug)]
struct FieldTracker {
    kind: FieldKind,
    offset: usize,
    gram: CsrMatrix,
    /// Gram projection of the spatial profile.
    projection: Vec<f64>,
    /// Squared norm of the profile minus its projection.
    defect_sq: f64,
    gradient: bool,
    max_error: f64,
}

/// Largest error over the sampled times for one field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldError {
    pub field: FieldKind,
    /// `"L2"` or `"H1"`.
    pub norm: &'static str,
    pub error: f64,
}

/// Accumulates `max_t ||e_h(t) - e(t)||` per field while a run streams
/// states through [`ErrorTracker::observe`].
#[derive(Clone, Debug)]
pub struct ErrorTracker {
    fields: Vec<FieldTracker>,
}

/// Norm used for a field: the velocity of the Kirchhoff model is measured
/// in `H^1`, everything else in `L^2`.
pub fn uses_gradient_norm(model: PlateModel, kind: FieldKind) -> bool {
    model == PlateModel::Kirchhoff && kind == FieldKind::Velocity
}

fn squared_defect(
    space: &FunctionSpace,
    coeffs: &[f64],
    exactness: usize,
    gradient: bool,
    field: &dyn Fn([f64; 2]) -> FieldSample,
) -> Result<f64> {
    let mesh = space.mesh();
    let ncomp = space.components();
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let quad = CellContext::from_mesh(mesh, c).quadrature(exactness)?;
        let points: Vec<[f64; 2]> = quad.iter().map(|(x, _)| *x).collect();
        let tab = space.cell_basis(c).tabulate(&points, usize::from(gradient))?;
        let dofs = space.cell_dofs(c);
        for (q, (x, w)) in quad.iter().enumerate() {
            let exact = field(*x);
            for comp in 0..ncomp {
                let (mut v, mut g) = (0.0, [0.0; 2]);
                for (i, gi) in dofs.iter().enumerate() {
                    if let Some(gi) = gi {
                        let jet = tab.jet(q, i, comp);
                        v += coeffs[*gi] * jet.value;
                        g[0] += coeffs[*gi] * jet.grad[0];
                        g[1] += coeffs[*gi] * jet.grad[1];
                    }
                }
                let mut s = (v - exact.value[comp]).powi(2);
                if gradient {
                    s += (g[0] - exact.grad[comp][0]).powi(2) + (g[1] - exact.grad[comp][1]).powi(2);
                }
                total += w * s;
            }
        }
    }
    Ok(total)
}

/// `||u_h - u||` for a single field given by its coefficients on `space`.
pub fn field_error(
    space: &FunctionSpace,
    coeffs: &[f64],
    gradient: bool,
    field: &dyn Fn([f64; 2]) -> FieldSample,
) -> Result<f64> {
    if coeffs.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: space.num_dofs(),
            actual: coeffs.len(),
        });
    }
    let e = 2 * space.degree() + DATA_EXACTNESS_MARGIN;
    Ok(squared_defect(space, coeffs, e, gradient, field)?.sqrt())
}

impl ErrorTracker {
    pub fn new(system: &PhSystem, exact: &ExactSolution) -> Result<Self> {
        let mut fields = Vec::new();
        for block in system.fields() {
            if !exact.fields().contains(&block.kind) {
                return Err(Error::Config(format!(
                    "the {:?} solution has no {} field",
                    exact.model(),
                    block.kind.label()
                )));
            }
            let gradient = uses_gradient_norm(exact.model(), block.kind);
            let e = 2 * block.space.degree() + DATA_EXACTNESS_MARGIN;
            let gram = gram_matrix(&block.space, e, gradient)?;
            let profile = |x: [f64; 2]| exact.profile(block.kind, x);
            let rhs = moment_vector(&block.space, e, gradient, &profile)?;
            let projection = solve_on_subspace(&gram, &rhs, &[])?;
            let defect_sq = squared_defect(&block.space, &projection, e, gradient, &profile)?;
            fields.push(FieldTracker {
                kind: block.kind,
                offset: block.offset,
                gram,
                projection,
                defect_sq,
                gradient,
                max_error: 0.0,
            });
        }
        Ok(Self { fields })
    }

    /// Errors of a full (unreduced) state at time `t`, per field.
    pub fn errors_at(&self, full_state: &[f64], t: f64) -> Result<Vec<f64>> {
        self.fields
            .iter()
            .map(|f| {
                let n = f.projection.len();
                let coeffs = full_state.get(f.offset..f.offset + n).ok_or(Error::DimensionMismatch {
                    expected: f.offset + n,
                    actual: full_state.len(),
                })?;
                let s = ExactSolution::time_factor(f.kind, t);
                let diff: Vec<f64> = coeffs.iter().zip(&f.projection).map(|(u, p)| u - s * p).collect();
                let discrete = dot(&diff, &f.gram.mul_vec(&diff)?).max(0.0);
                Ok((discrete + s * s * f.defect_sq).sqrt())
            })
            .collect()
    }

    /// Records the errors of a reduced state of `system` at time `t`.
    pub fn observe(&mut self, system: &PhSystem, reduced: &[f64], t: f64) -> Result<()> {
        let full = system.expand(reduced)?;
        let errors = self.errors_at(&full, t)?;
        for (f, e) in self.fields.iter_mut().zip(errors) {
            f.max_error = f.max_error.max(e);
        }
        Ok(())
    }

    pub fn max_errors(&self) -> Vec<FieldError> {
        self.fields
            .iter()
            .map(|f| FieldError {
                field: f.kind,
                norm: if f.gradient { "H1" } else { "L2" },
                error: f.max_error,
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Convergence rates.

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRates {
    /// `log2(e(h) / e(h/2))` between consecutive levels (generally
    /// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`).
    pub successive: Vec<f64>,
    /// Least-squares slope of `log e` against `log h`.
    pub fitted: f64,
}

pub fn convergence_rates(data: &[(f64, f64)]) -> Result<ConvergenceRates> {
    if data.len() < 2 {
        return Err(Error::InvalidConvergenceData(format!(
            "need at least two mesh levels, got {}",
            data.len()
        )));
    }
    if let Some((h, e)) = data.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::InvalidConvergenceData(format!(
            "mesh sizes and errors must be positive and finite (h = {h}, error = {e})"
        )));
    }
    let successive = data
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    let logs: Vec<(f64, f64)> = data.iter().map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|l| l.0).sum::<f64>() / n;
    let my = logs.iter().map(|l| l.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|l| (l.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|l| (l.0 - mx) * (l.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConvergenceData("all mesh sizes are equal".into()));
    }
    Ok(ConvergenceRates {
        successive,
        fitted: sxy / sxx,
    })
}
