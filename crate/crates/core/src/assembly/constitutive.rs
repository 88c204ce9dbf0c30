//! Material parameters and the bending and shear constitutive laws.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Young modulus (Pa).
    pub young: f64,
    /// Poisson ratio.
    pub poisson: f64,
    /// Density (kg/m^3).
    pub density: f64,
    /// Plate thickness (m).
    pub thickness: f64,
    /// Shear correction factor.
    pub shear_correction: f64,
}

impl MaterialParams {
    /// Unit-scaled thick plate used for the Mindlin benchmark.
    pub fn thick_plate() -> Self {
        Self {
            young: 1.0,
            poisson: 0.3,
            density: 1.0,
            thickness: 0.1,
            shear_correction: 5.0 / 6.0,
        }
    }

    /// Thin steel-like plate used for the Kirchhoff benchmark.
    pub fn thin_plate() -> Self {
        Self {
            young: 136e9,
            poisson: 0.3,
            density: 5600.0,
            thickness: 0.001,
            shear_correction: 5.0 / 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.young > 0.0, "Young modulus must be positive"),
            (self.density > 0.0, "density must be positive"),
            (self.thickness > 0.0, "thickness must be positive"),
            (self.shear_correction > 0.0, "shear correction factor must be positive"),
            (
                self.poisson > -1.0 && self.poisson < 0.5,
                "Poisson ratio must lie in (-1, 1/2)",
            ),
        ];
        for (ok, msg) in checks {
            if !ok || ![self.young, self.poisson, self.density, self.thickness, self.shear_correction]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidMaterial(msg.into()));
            }
        }
        Ok(())
    }

    /// Bending stiffness `E b^3 / (12 (1 - nu^2))`.
    pub fn bending_stiffness(&self) -> f64 {
        self.young * self.thickness.powi(3) / (12.0 * (1.0 - self.poisson * self.poisson))
    }

    /// Shear stiffness `E b k / (2 (1 + nu))`.
    pub fn shear_stiffness(&self) -> f64 {
        self.young * self.thickness * self.shear_correction / (2.0 * (1.0 + self.poisson))
    }

    /// Mass per unit area `rho b`.
    pub fn areal_density(&self) -> f64 {
        self.density * self.thickness
    }

    /// Rotary inertia `rho b^3 / 12`.
    pub fn rotary_inertia(&self) -> f64 {
        self.density * self.thickness.powi(3) / 12.0
    }

    /// Coefficients `(a, c)` with `V : D^{-1} E = a V:E - c tr(V) tr(E)`.
    pub fn bending_compliance(&self) -> (f64, f64) {
        let a = 1.0 / (self.bending_stiffness() * (1.0 - self.poisson));
        (a, a * self.poisson / (1.0 + self.poisson))
    }
}

/// Bending moment from curvature: `D0 [(1 - nu) K + nu tr(K) I]`.
pub fn constitutive_bending(k: &Matrix2<f64>, p: &MaterialParams) -> Matrix2<f64> {
    let d0 = p.bending_stiffness();
    (k * (1.0 - p.poisson) + Matrix2::identity() * (p.poisson * k.trace())) * d0
}

/// Curvature from bending moment; inverse of [`constitutive_bending`].
pub fn constitutive_bending_inverse(m: &Matrix2<f64>, p: &MaterialParams) -> Matrix2<f64> {
    let (a, c) = p.bending_compliance();
    m * a - Matrix2::identity() * (c * m.trace())
}

/// Shear strain from shear force.
pub fn constitutive_shear_inverse(q: &Vector2<f64>, p: &MaterialParams) -> Vector2<f64> {
    q / p.shear_stiffness()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bending_of_zero_and_identity() {
        let p = MaterialParams::thick_plate();
        assert_eq!(constitutive_bending(&Matrix2::zeros(), &p), Matrix2::zeros());
        let m = constitutive_bending(&Matrix2::identity(), &p);
        let d0 = p.bending_stiffness();
        assert!((m - Matrix2::identity() * (1.3 * d0)).amax() < 1e-16);
    }

    #[test]
    fn thin_plate_stiffness() {
        let d0 = MaterialParams::thin_plate().bending_stiffness();
        assert!((d0 - 136e9 * 1e-9 / (12.0 * 0.91)).abs() < 1e-12);
        assert!((d0 - 12.454).abs() < 1e-3);
    }

    #[test]
    fn thick_plate_shear_coefficient() {
        let c = MaterialParams::thick_plate().shear_stiffness();
        assert!((c - 0.1 * (5.0 / 6.0) / 2.6).abs() < 1e-15);
        assert!((c - 0.032051).abs() < 1e-6);
    }

    #[test]
    fn inverse_round_trips() {
        let p = MaterialParams::thin_plate();
        let back = constitutive_bending_inverse(&constitutive_bending(&Matrix2::identity(), &p), &p);
        assert!((back - Matrix2::identity()).amax() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (a, b, c) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let m = Matrix2::new(a, b, b, c);
            let round = constitutive_bending(&constitutive_bending_inverse(&m, &p), &p);
            assert!((round - m).amax() < 1e-13);
        }
    }

    #[test]
    fn trace_free_inverse() {
        let p = MaterialParams::thick_plate();
        let m = Matrix2::new(1.0, 0.4, 0.4, -1.0);
        let k = constitutive_bending_inverse(&m, &p);
        let expected = m / (p.bending_stiffness() * (1.0 - p.poisson));
        assert!((k - expected).amax() < 1e-12 * expected.amax());
    }

    #[test]
    fn shear_inverse_round_trip() {
        let p = MaterialParams::thick_plate();
        assert_eq!(constitutive_shear_inverse(&Vector2::zeros(), &p), Vector2::zeros());
        let q = Vector2::new(0.3, -2.0);
        let back = constitutive_shear_inverse(&q, &p) * p.shear_stiffness();
        assert!((back - q).amax() < 1e-15);
    }

    #[test]
    fn rejects_invalid_parameters() {
        let mut p = MaterialParams::thick_plate();
        p.poisson = 0.5;
        assert!(p.validate().is_err());
        p.poisson = 0.3;
        p.thickness = 0.0;
        assert!(p.validate().is_err());
        p.thickness = f64::NAN;
        assert!(p.validate().is_err());
        assert!(MaterialParams::thin_plate().validate().is_ok());
    }
}
