//! Physical parameters of the gas environment and the dimensionless scalings
//! consumed by every other module.
//!
//! Engine-internal arithmetic works with the scaled variables
//!
//! ```text
//!   U  = P / (M v_β)      test-particle momentum
//!   K  = Q / (m* v_β)     momentum transfer
//!   W⊥ = k⊥ / (m v_β)     gas momentum in the plane ⊥ K
//!   S  = X / Λ_th         position
//! ```
//!
//! with `v_β = sqrt(2 kT / m)` the most probable gas speed. Physical units
//! appear only at input/output boundaries.

use nalgebra::Vector3;

use crate::{Error, Result};

/// Immutable description of the background gas and the test particle.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq)]
pub struct GasEnvironment {
    /// Gas-particle mass.
    pub m: f64,
    /// Test-particle mass.
    pub M: f64,
    /// Temperature energy k_B T.
    pub kt: f64,
    /// Gas number density.
    pub n_gas: f64,
    /// Action scale; 1 in the preset unit systems.
    pub hbar: f64,
    /// Reduced mass m M / (m + M).
    pub m_star: f64,
    /// Most probable gas speed sqrt(2 kT / m).
    pub v_beta: f64,
    /// Most probable gas momentum sqrt(2 m kT) = m v_β.
    pub p_beta: f64,
    /// Thermal de Broglie wavelength of the test particle, sqrt(2π ħ² β / M).
    pub lambda_th: f64,
}

#[allow(non_snake_case)]
impl GasEnvironment {
    /// Build an environment from physical parameters; all must be positive.
    pub fn new(m: f64, M: f64, kt: f64, n_gas: f64, hbar: f64) -> Result<Self> {
        let check = |name: &'static str, value: f64| -> Result<()> {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter { name, requirement: "strictly positive and finite", value })
            }
        };
        check("m", m)?;
        check("M", M)?;
        check("kT", kt)?;
        check("n_gas", n_gas)?;
        check("hbar", hbar)?;
        let beta = 1.0 / kt;
        Ok(Self {
            m,
            M,
            kt,
            n_gas,
            hbar,
            m_star: m * M / (m + M),
            v_beta: (2.0 * kt / m).sqrt(),
            p_beta: (2.0 * m * kt).sqrt(),
            lambda_th: (2.0 * std::f64::consts::PI * hbar * hbar * beta / M).sqrt(),
        })
    }

    /// Unit system of the s-wave hard-sphere runs: ħ = M = 1, kT = 1,
    /// n_gas = 1; the gas mass follows from the mass ratio M/m.
    pub fn hard_sphere_units(mass_ratio_m_over_gas: f64) -> Result<Self> {
        Self::new(1.0 / mass_ratio_m_over_gas, 1.0, 1.0, 1.0, 1.0)
    }

    /// Unit system of the Gaussian-potential runs: ħ = m = 1, kT = 1,
    /// n_gas = 1; the test mass follows from the mass ratio M/m.
    pub fn gaussian_units(mass_ratio_m_over_gas: f64) -> Result<Self> {
        Self::new(1.0, mass_ratio_m_over_gas, 1.0, 1.0, 1.0)
    }

    /// Inverse temperature β = 1/kT.
    pub fn beta(&self) -> f64 {
        1.0 / self.kt
    }

    /// Scaled test-particle momentum U = P / (M v_β).
    pub fn momentum_to_u(&self, p: Vector3<f64>) -> Vector3<f64> {
        p / (self.M * self.v_beta)
    }

    pub fn u_to_momentum(&self, u: Vector3<f64>) -> Vector3<f64> {
        u * (self.M * self.v_beta)
    }

    /// Scaled momentum transfer K = Q / (m* v_β).
    pub fn transfer_to_k(&self, q: Vector3<f64>) -> Vector3<f64> {
        q / (self.m_star * self.v_beta)
    }

    pub fn k_to_transfer(&self, k: Vector3<f64>) -> Vector3<f64> {
        k * (self.m_star * self.v_beta)
    }

    /// Scaled gas momentum W = k / (m v_β).
    pub fn gas_momentum_to_w(&self, k: Vector3<f64>) -> Vector3<f64> {
        k / (self.m * self.v_beta)
    }

    pub fn w_to_gas_momentum(&self, w: Vector3<f64>) -> Vector3<f64> {
        w * (self.m * self.v_beta)
    }

    /// Scaled position S = X / Λ_th.
    pub fn position_to_s(&self, x: Vector3<f64>) -> Vector3<f64> {
        x / self.lambda_th
    }

    pub fn s_to_position(&self, s: Vector3<f64>) -> Vector3<f64> {
        s * self.lambda_th
    }

    /// Phase factor scale in the position reconstruction,
    /// M v_β Λ_th / ħ (multiplies S·U in the Fourier sum).
    pub fn position_phase_scale(&self) -> f64 {
        self.M * self.v_beta * self.lambda_th / self.hbar
    }

    /// Maxwell-Boltzmann momentum density μ(p) = (2π m kT)^{-3/2} e^{-p²/2mkT}.
    pub fn maxwell_boltzmann(&self, p: Vector3<f64>) -> f64 {
        let s2 = self.m * self.kt;
        (2.0 * std::f64::consts::PI * s2).powf(-1.5) * (-p.norm_squared() / (2.0 * s2)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn derived_scales_match_formulas() {
        let env = GasEnvironment::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(env.m_star, 0.5);
        assert_relative_eq!(env.v_beta, 2.0_f64.sqrt());
        assert_relative_eq!(env.lambda_th, (2.0 * std::f64::consts::PI).sqrt());

        let heavy = GasEnvironment::new(1.0, 100.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(heavy.m_star, 100.0 / 101.0);
    }

    #[test]
    fn non_positive_inputs_name_the_field() {
        let err = GasEnvironment::new(-1.0, 1.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("`m`"));
        let err = GasEnvironment::new(1.0, 1.0, 0.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("`kT`"));
    }

    #[test]
    fn scaling_examples() {
        let env = GasEnvironment::hard_sphere_units(1.0).unwrap();
        let u = env.momentum_to_u(Vector3::new(env.M * env.v_beta, 0.0, 0.0));
        assert_relative_eq!(u.x, 1.0);
        assert_eq!(env.momentum_to_u(Vector3::zeros()), Vector3::zeros());
        let s = env.position_to_s(Vector3::new(env.lambda_th, 0.0, 0.0));
        assert_relative_eq!(s.x, 1.0);
    }

    proptest! {
        #[test]
        fn derived_identities_hold(
            m in 1e-3..1e3f64,
            mm in 1e-3..1e3f64,
            kt in 1e-3..1e3f64,
            n in 1e-3..1e3f64,
            hbar in 1e-2..1e2f64,
        ) {
            let env = GasEnvironment::new(m, mm, kt, n, hbar).unwrap();
            prop_assert!(env.m_star < m.min(mm));
            // Λ_th² M kT = 2π ħ² exactly.
            let lhs = env.lambda_th * env.lambda_th * mm * kt;
            let rhs = 2.0 * std::f64::consts::PI * hbar * hbar;
            prop_assert!((lhs / rhs - 1.0).abs() < 1e-12);
            prop_assert!((env.p_beta / (m * env.v_beta) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn scaling_round_trips(
            px in -1e3..1e3f64, py in -1e3..1e3f64, pz in -1e3..1e3f64,
            m in 1e-2..1e2f64, mm in 1e-2..1e2f64,
        ) {
            let env = GasEnvironment::new(m, mm, 1.0, 1.0, 1.0).unwrap();
            let p = Vector3::new(px, py, pz);
            let back = env.u_to_momentum(env.momentum_to_u(p));
            prop_assert!((back - p).norm() <= 1e-12 * p.norm().max(1e-12));
            let back = env.k_to_transfer(env.transfer_to_k(p));
            prop_assert!((back - p).norm() <= 1e-12 * p.norm().max(1e-12));
            let back = env.s_to_position(env.position_to_s(p));
            prop_assert!((back - p).norm() <= 1e-12 * p.norm().max(1e-12));
        }
    }
}
