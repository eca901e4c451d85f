//! Initial-state constructors: eigenstates, Gaussian packets represented as
//! finite Fourier sums over a momentum grid, and the branch ladder used by
//! the scaling harness.

use nalgebra::Vector3;
use num_complex::Complex64;
use qlbe_core::observables::position_amplitude;
use qlbe_core::units::GasEnvironment;
use qlbe_core::TrajectoryState;

use crate::config::{ConfigError, InitialConfig, ModelConfig};

fn invalid(field: &'static str, problem: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, problem: problem.into() }
}

/// Specification of one Gaussian packet in scaled coordinates.
#[derive(Debug, Clone, Copy)]
struct Packet {
    /// Center position in Λ_th units.
    center_s: f64,
    /// Center momentum (x component of U).
    center_u: f64,
}

/// Build the template state for a run. All trajectories start from the same
/// normalized state; stochasticity enters only through the dynamics.
pub fn build_initial_state(
    initial: &InitialConfig,
    model: &ModelConfig,
    env: &GasEnvironment,
    t_final: f64,
) -> Result<TrajectoryState, ConfigError> {
    match initial.kind.as_str() {
        "eigenstate" => {
            let u = initial.u0.ok_or_else(|| invalid("initial.u0", "required"))?;
            Ok(TrajectoryState::new(
                vec![Complex64::new(1.0, 0.0)],
                vec![Vector3::new(u[0], u[1], u[2])],
            )
            .expect("valid single branch"))
        }
        "two_eigenstate" => {
            let u = initial.u0.ok_or_else(|| invalid("initial.u0", "required"))?;
            let u = Vector3::new(u[0], u[1], u[2]);
            let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            Ok(TrajectoryState::new(vec![amp, amp], vec![u, -u]).expect("valid two branches"))
        }
        "ladder" => {
            let n = initial.n.unwrap();
            let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
            Ok(TrajectoryState::new(
                vec![amp; n],
                (1..=n).map(|i| Vector3::new(0.0, 0.0, i as f64)).collect(),
            )
            .expect("valid ladder"))
        }
        "explicit" => {
            let alphas: Vec<Complex64> =
                initial.branches.iter().map(|b| Complex64::new(b.re, b.im)).collect();
            let norm: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-6 {
                eprintln!(
                    "warning: explicit amplitudes have norm² = {norm:.8}; renormalizing"
                );
            }
            let momenta =
                initial.branches.iter().map(|b| Vector3::new(b.u[0], b.u[1], b.u[2])).collect();
            TrajectoryState::new(alphas, momenta)
                .map_err(|e| invalid("initial.branches", e.to_string()))
        }
        "gaussian_packet" => {
            let sigma_s = initial.sigma_s.unwrap();
            let center = Packet {
                center_s: initial.center_s.unwrap_or(0.0),
                center_u: initial.u_center.unwrap_or(0.0),
            };
            packet_superposition(&[center], sigma_s, initial.n.unwrap(), env, t_final)
        }
        "double_gaussian" => {
            let sigma_s = initial.sigma_s.unwrap();
            let s0 = initial.center_s.ok_or_else(|| invalid("initial.center_s", "required"))?;
            let packets = [
                Packet { center_s: s0, center_u: 0.0 },
                Packet { center_s: -s0, center_u: 0.0 },
            ];
            packet_superposition(&packets, sigma_s, initial.n.unwrap(), env, t_final)
        }
        "counter_propagating" => {
            let ratio = initial.lambda_db_over_lambda_th.unwrap();
            let s_db = initial.s_db.unwrap();
            let u_db = initial.u_db.unwrap();
            let sig_ratio = initial.sigma_over_lambda_db.unwrap();
            // λ_dB in physical units; scaled positions and widths follow.
            let lambda_db = ratio * env.lambda_th;
            let s0 = s_db * ratio;
            let sigma_s = sig_ratio * ratio;
            // ⟨U_dB⟩ = P/(M λ_dB Γ0): velocity u_db λ_dB Γ0, so U = v / v_β.
            let gamma0 = 4.0 * std::f64::consts::PI * env.n_gas * env.v_beta * model.radius
                * model.radius;
            let u0 = u_db * lambda_db * gamma0 / env.v_beta;
            let packets = [
                Packet { center_s: -s0, center_u: u0 },
                Packet { center_s: s0, center_u: -u0 },
            ];
            packet_superposition(&packets, sigma_s, initial.n.unwrap(), env, t_final)
        }
        other => Err(invalid("initial.kind", format!("unknown constructor `{other}`"))),
    }
}

/// Coherent superposition of minimum-uncertainty packets sampled on a shared
/// symmetric momentum grid.
///
/// The grid step is fixed by the periodicity of the finite Fourier sum: the
/// position period 2π/(c ΔU) must cover the state (all packet centers, ±6σ
/// tails, and the drift over the run), and the span must cover every packet's
/// momentum center ±5σ_U. A reconstruction check rejects grids whose position
/// width is off by more than 2%.
fn packet_superposition(
    packets: &[Packet],
    sigma_s: f64,
    n: usize,
    env: &GasEnvironment,
    t_final: f64,
) -> Result<TrajectoryState, ConfigError> {
    let c = env.position_phase_scale();
    let sigma_u = 1.0 / (2.0 * sigma_s * c);
    let max_center_s = packets.iter().map(|p| p.center_s.abs()).fold(0.0_f64, f64::max);
    let max_center_u = packets.iter().map(|p| p.center_u.abs()).fold(0.0_f64, f64::max);
    // Free spreading of the packet over the run, in Λ_th units.
    let drift = (max_center_u + sigma_u) * env.v_beta * t_final / env.lambda_th;
    let extent_half = max_center_s + 6.0 * sigma_s + drift;
    let period_target = 2.6 * extent_half.max(8.0 * sigma_s);
    let du = 2.0 * std::f64::consts::PI / (c * period_target);
    let span_needed = 2.0 * (max_center_u + 5.0 * sigma_u);
    let n_needed = (span_needed / du).ceil() as usize + 1;
    if n < n_needed {
        return Err(invalid(
            "initial.n",
            format!(
                "{n} momentum eigenstates cannot hold the packet: need at least {n_needed} \
                 (step {du:.4} from the position period, span ±{:.3})",
                span_needed / 2.0
            ),
        ));
    }
    let mut alphas = Vec::with_capacity(n);
    let mut momenta = Vec::with_capacity(n);
    let half = (n - 1) as f64 / 2.0;
    for j in 0..n {
        let u = (j as f64 - half) * du;
        let mut a = Complex64::new(0.0, 0.0);
        for p in packets {
            let envelope = (-(u - p.center_u).powi(2) / (4.0 * sigma_u * sigma_u)).exp();
            // Momentum-space wavefunction of a minimum-uncertainty packet at
            // scaled position center_s: envelope × e^{−i c S₀ U}.
            a += envelope * Complex64::from_polar(1.0, -c * p.center_s * u);
        }
        alphas.push(a);
        momenta.push(Vector3::new(u, 0.0, 0.0));
    }
    let state = TrajectoryState::new(alphas, momenta)
        .map_err(|e| invalid("initial", e.to_string()))?;

    // Aliasing check: the reconstructed position variance must match the
    // packet algebra (var = σ_S² + mean-square of the centers).
    let n_check = 1024;
    let s_grid: Vec<f64> = (0..n_check)
        .map(|i| -extent_half + 2.0 * extent_half * i as f64 / (n_check - 1) as f64)
        .collect();
    let amp = position_amplitude(&state, &s_grid, env);
    let dens: Vec<f64> = amp.iter().map(|a| a.norm_sqr()).collect();
    let mass: f64 = dens.iter().sum();
    let mean: f64 = s_grid.iter().zip(&dens).map(|(s, d)| s * d).sum::<f64>() / mass;
    let var: f64 =
        s_grid.iter().zip(&dens).map(|(s, d)| (s - mean) * (s - mean) * d).sum::<f64>() / mass;
    let center_ms: f64 =
        packets.iter().map(|p| p.center_s * p.center_s).sum::<f64>() / packets.len() as f64;
    let center_mean: f64 =
        packets.iter().map(|p| p.center_s).sum::<f64>() / packets.len() as f64;
    let expected = sigma_s * sigma_s + center_ms - center_mean * center_mean;
    let width_err = ((var / expected).sqrt() - 1.0).abs();
    if width_err > 0.02 {
        return Err(invalid(
            "initial.n",
            format!(
                "grid too coarse to represent the packet: reconstructed width off by {:.1}%",
                width_err * 100.0
            ),
        ));
    }
    Ok(state)
}
