//! Elastic scattering amplitudes f(p_f, p_i) for the interaction models.
//!
//! The jump operators contain the full amplitude, so everything the collision
//! physics knows about the interaction enters through this module: an s-wave
//! hard sphere (|f|² = R²), the exact partial-wave amplitude of an isotropic
//! potential, or the Gaussian-well Born approximation.

mod phase_table;
pub mod radial;

use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::units::GasEnvironment;
use crate::{Error, Result};

pub use phase_table::{geometric_grid, PhaseShiftTable};
pub use radial::{phase_shifts, RadialSolverOptions};

/// Tagged union of amplitude providers.
#[derive(Debug, Clone)]
pub enum ScatteringModel {
    /// Constant amplitude f = −R: angle- and energy-independent, |f|² = R².
    HardSphereSWave { radius: f64 },
    /// Exact amplitude from tabulated phase shifts of an isotropic potential.
    PartialWave { table: Arc<PhaseShiftTable> },
    /// First Born approximation of the attractive Gaussian well; depends only
    /// on the momentum transfer. Positive for attractive potentials.
    BornGaussian { v0: f64, d: f64, m_star: f64, hbar: f64 },
}

impl ScatteringModel {
    pub fn hard_sphere(radius: f64) -> Self {
        Self::HardSphereSWave { radius }
    }

    /// Exact Gaussian-well model: solves the radial problem on `p_grid` with
    /// the environment's reduced mass.
    pub fn gaussian_exact(
        v0: f64,
        d: f64,
        env: &GasEnvironment,
        l_max: usize,
        p_grid: Vec<f64>,
        opts: &RadialSolverOptions,
    ) -> Result<Self> {
        let table =
            PhaseShiftTable::gaussian_well(v0, d, env.m_star, env.hbar, l_max, p_grid, opts)?;
        Ok(Self::PartialWave { table: Arc::new(table) })
    }

    pub fn gaussian_born(v0: f64, d: f64, env: &GasEnvironment) -> Self {
        Self::BornGaussian { v0, d, m_star: env.m_star, hbar: env.hbar }
    }

    /// Elastic amplitude for incoming momentum `p_in` and outgoing `p_out`.
    ///
    /// The partial-wave branch requires |p_in| = |p_out| within 1e-9 relative;
    /// hard-sphere and Born amplitudes accept any pair (Born depends only on
    /// the transfer).
    pub fn amplitude(&self, p_in: Vector3<f64>, p_out: Vector3<f64>) -> Result<Complex64> {
        match self {
            Self::HardSphereSWave { radius } => Ok(Complex64::new(-radius, 0.0)),
            Self::BornGaussian { v0, d, m_star, hbar } => {
                let q = (p_out - p_in).norm();
                Ok(Complex64::new(born_amplitude_transfer(*v0, *d, *m_star, q, *hbar), 0.0))
            }
            Self::PartialWave { table } => {
                let pi = p_in.norm();
                let po = p_out.norm();
                let scale = pi.max(po);
                if (pi - po).abs() > 1e-9 * scale.max(1e-300) {
                    return Err(Error::Contract(format!(
                        "partial-wave amplitude needs elastic momenta: |p_in| = {pi}, |p_out| = {po}"
                    )));
                }
                if scale == 0.0 {
                    // Zero-momentum limit: only the s wave survives, f → −a_0.
                    return Ok(Complex64::new(-table.scattering_length(), 0.0));
                }
                let cos_theta = (p_in.dot(&p_out) / (pi * po)).clamp(-1.0, 1.0);
                Ok(partial_wave_amplitude(table, pi, cos_theta))
            }
        }
    }

    /// Total elastic cross section σ(p) = ∫ |f|² dΩ.
    pub fn total_cross_section(&self, p: f64) -> f64 {
        match self {
            Self::HardSphereSWave { radius } => {
                4.0 * std::f64::consts::PI * radius * radius
            }
            Self::BornGaussian { v0, d, m_star, hbar } => {
                let a = born_amplitude_transfer(*v0, *d, *m_star, 0.0, *hbar);
                let b = 2.0 * d * d * p * p / (hbar * hbar);
                if b < 1e-12 {
                    4.0 * std::f64::consts::PI * a * a
                } else {
                    2.0 * std::f64::consts::PI * a * a * (1.0 - (-2.0 * b).exp()) / b
                }
            }
            Self::PartialWave { table } => {
                if p == 0.0 {
                    let a = table.scattering_length();
                    return 4.0 * std::f64::consts::PI * a * a;
                }
                let k = p / table.hbar;
                let mut sum = 0.0;
                for l in 0..=table.l_max {
                    let d = table.phase(l, p);
                    sum += (2.0 * l as f64 + 1.0) * d.sin() * d.sin();
                }
                4.0 * std::f64::consts::PI / (k * k) * sum
            }
        }
    }
}

/// Partial-wave sum f(p, cosθ) = Σ_l (2l+1) f_l P_l(cosθ) with
/// f_l = (ħ/p) e^{iδ_l} sin δ_l, truncated at the table's l_max.
pub fn partial_wave_amplitude(table: &PhaseShiftTable, p: f64, cos_theta: f64) -> Complex64 {
    debug_assert!((-1.0..=1.0).contains(&cos_theta));
    let k = p / table.hbar;
    let mut f = Complex64::new(0.0, 0.0);
    // Legendre recurrence P_{l+1} = ((2l+1) x P_l - l P_{l-1}) / (l+1).
    let mut p_prev = 1.0_f64;
    let mut p_cur = cos_theta;
    for l in 0..=table.l_max {
        let p_l = if l == 0 { 1.0 } else { p_cur };
        let delta = table.phase(l, p);
        let (s, c) = delta.sin_cos();
        f += (2.0 * l as f64 + 1.0) * p_l * Complex64::new(c * s, s * s);
        if l >= 1 {
            let lf = l as f64;
            let p_next = ((2.0 * lf + 1.0) * cos_theta * p_cur - lf * p_prev) / (lf + 1.0);
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
    f / k
}

/// Born amplitude of the attractive Gaussian well as a function of the
/// momentum transfer q = |p_f − p_i|:
///
///   f_B(q) = √(π/2) (2 m* V0 d³/ħ²) exp(−d² q² / 2ħ²),
///
/// positive for attractive wells (V0 > 0 here means depth).
pub fn born_amplitude_transfer(v0: f64, d: f64, m_star: f64, q: f64, hbar: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * 2.0 * m_star * v0 * d.powi(3) / (hbar * hbar)
        * (-d * d * q * q / (2.0 * hbar * hbar)).exp()
}

/// Born amplitude in the elastic (p, cosθ) parameterization used for plots:
/// q² = 2p²(1 − cosθ).
pub fn born_amplitude_gaussian(
    v0: f64,
    d: f64,
    m_star: f64,
    p: f64,
    cos_theta: f64,
    hbar: f64,
) -> f64 {
    let q2 = 2.0 * p * p * (1.0 - cos_theta);
    born_amplitude_transfer(v0, d, m_star, q2.max(0.0).sqrt(), hbar)
}
