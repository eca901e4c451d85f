//! Piecewise-deterministic trajectory evolution.
//!
//! Between jumps the non-Hermitian drift only reweights the amplitudes,
//!
//!   α_i(t+τ) = 𝒩⁻¹ exp(−(i/2ħ) M v_β² U_i² τ) exp(−τ Γ(U_i)/2) α_i(t),
//!
//! so a trajectory stays a superposition of exactly N momentum eigenstates.
//! Jumps shift every momentum by the same (m*/M) K and multiply each weight by
//!
//!   x_i ∝ f(m*v_β[W⊥−U_{i⊥K}−K/2], m*v_β[W⊥−U_{i⊥K}+K/2])
//!         · exp(−½ [K/2 + U_{i∥K}]²),
//!
//! which is why one Metropolis-Hastings draw of (K, W⊥) serves all branches at
//! once. Waiting times invert η = Σ |α_i|² exp(−τ Γ(U_i)) numerically.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;


use crate::numerics::bracketed_root;
use crate::rates::{plane_basis, relative_momenta, RateTable, K_MIN};
use crate::scattering::ScatteringModel;
use crate::units::GasEnvironment;
use crate::{Error, Result};

/// Pure state of one trajectory: N complex amplitudes over N dimensionless
/// momenta, with the jump rates of the branches cached alongside.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub alphas: Vec<Complex64>,
    pub momenta: Vec<Vector3<f64>>,
    pub t: f64,
    pub rates: Vec<f64>,
}

impl TrajectoryState {
    /// Normalizes the amplitudes; the rate cache starts empty until
    /// [`Self::refresh_rates`] is called with a table.
    pub fn new(alphas: Vec<Complex64>, momenta: Vec<Vector3<f64>>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != momenta.len() {
            return Err(Error::Contract(format!(
                "state needs matching non-empty amplitude/momentum lists, got {}/{}",
                alphas.len(),
                momenta.len()
            )));
        }
        let norm = alphas.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Contract("state has zero norm".into()));
        }
        let alphas = alphas.into_iter().map(|a| a / norm).collect();
        let rates = vec![0.0; momenta.len()];
        Ok(Self { alphas, momenta, t: 0.0, rates })
    }

    pub fn branch_count(&self) -> usize {
        self.alphas.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Σ |α_i|² U_i², the scaled kinetic-energy expectation of this state.
    pub fn mean_square_momentum(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.momenta)
            .map(|(a, u)| a.norm_sqr() * u.norm_squared())
            .sum()
    }

    pub fn refresh_rates(&mut self, table: &RateTable) {
        for (r, u) in self.rates.iter_mut().zip(&self.momenta) {
            *r = table.value(u.norm());
        }
    }
}

/// Momentum parameters of one jump.
#[derive(Debug, Clone)]
pub struct JumpParams {
    /// Dimensionless momentum transfer K = Q/(m* v_β).
    pub k: Vector3<f64>,
    /// Gas momentum component in the plane K⊥ (dimensionless, W⊥·K = 0).
    pub w_perp: Vector3<f64>,
    /// Branch whose conditional density seeded the sampler.
    pub branch: usize,
    /// Set when the chain acceptance rate left [0.1, 0.7] after adaptation.
    pub mh_warning: bool,
}

/// Metropolis-Hastings controls for the (K, W⊥) sampler.
///
/// The chain proposes independence draws from the constant-amplitude
/// conditional (the exact Gaussian geometry of the target), so the acceptance
/// ratio reduces to |f(proposed)|²/|f(current)|² and no step-size tuning is
/// involved; `burn_in + thinning` proposals are consumed per delivered
/// sample.
#[derive(Debug, Clone)]
pub struct MhSettings {
    pub burn_in: usize,
    /// Proposals between the end of burn-in and the delivered sample.
    pub thinning: usize,
    /// An acceptance rate below this raises the diagnostic warning.
    pub min_acceptance: f64,
}

impl Default for MhSettings {
    fn default() -> Self {
        Self { burn_in: 200, thinning: 50, min_acceptance: 0.1 }
    }
}

/// Apply the deterministic drift for a duration tau: kinetic phases, rate
/// decay, renormalization. Momenta are untouched.
pub fn deterministic_step(state: &mut TrajectoryState, tau: f64, env: &GasEnvironment) {
    debug_assert!(tau >= 0.0);
    if tau == 0.0 {
        return;
    }
    let phase_scale = env.M * env.v_beta * env.v_beta / (2.0 * env.hbar);
    for ((a, u), g) in state.alphas.iter_mut().zip(&state.momenta).zip(&state.rates) {
        let phase = -phase_scale * u.norm_squared() * tau;
        let decay = (-0.5 * g * tau).exp();
        *a *= Complex64::from_polar(decay, phase);
    }
    let norm = state.norm_sqr().sqrt();
    for a in &mut state.alphas {
        *a /= norm;
    }
    state.t += tau;
}

/// Outcome of the waiting-time inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaitingTime {
    Jump(f64),
    /// All surviving weight sits on zero-rate branches: no jump ever occurs.
    Never,
}

/// Invert η = Σ |α_i|² exp(−τ Γ(U_i)) for the waiting time τ.
///
/// The left side decreases strictly from 1 toward the zero-rate weight, so
/// the root is unique; it is bracketed by geometric growth and polished to
/// 1e-10 relative.
pub fn sample_waiting_time(state: &TrajectoryState, eta: f64, _env: &GasEnvironment) -> Result<WaitingTime> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Parameter { name: "eta", requirement: "inside (0, 1)", value: eta });
    }
    let survival = |tau: f64| -> f64 {
        state
            .alphas
            .iter()
            .zip(&state.rates)
            .map(|(a, g)| a.norm_sqr() * (-tau * g).exp())
            .sum()
    };
    // Weight that never decays.
    let frozen: f64 = state
        .alphas
        .iter()
        .zip(&state.rates)
        .filter(|(_, g)| **g == 0.0)
        .map(|(a, _)| a.norm_sqr())
        .sum();
    if frozen >= eta {
        return Ok(WaitingTime::Never);
    }
    let mean_rate: f64 = state
        .alphas
        .iter()
        .zip(&state.rates)
        .map(|(a, g)| a.norm_sqr() * g)
        .sum();
    let mut hi = -eta.ln() / mean_rate;
    let mut lo = 0.0;
    for _ in 0..400 {
        if survival(hi) < eta {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let tau = bracketed_root(|tau| survival(tau) - eta, lo, hi, 1e-10);
    Ok(WaitingTime::Jump(tau))
}

/// Draw the branch index with probability p_i ∝ |α_i|² Γ(U_i).
pub fn select_jump_branch(state: &TrajectoryState, rng: &mut impl Rng) -> Result<usize> {
    let weights: Vec<f64> = state
        .alphas
        .iter()
        .zip(&state.rates)
        .map(|(a, g)| a.norm_sqr() * g)
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Contract("jump attempted with all branch rates zero".into()));
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        x -= w;
        if x <= 0.0 {
            return Ok(i);
        }
    }
    Ok(weights.len() - 1)
}

/// ln |f|² at the relative momenta defined by the chain state (K, u, v);
/// −∞ marks zero density (amplitude nodes, the excluded set K = 0).
fn log_f2(
    k: &Vector3<f64>,
    w_coords: [f64; 2],
    u_branch: &Vector3<f64>,
    env: &GasEnvironment,
    model: &ScatteringModel,
) -> f64 {
    if k.norm() < K_MIN {
        return f64::NEG_INFINITY;
    }
    let (e1, e2) = plane_basis(k);
    let w_perp = e1 * w_coords[0] + e2 * w_coords[1];
    let (p_out, p_in) = relative_momenta(env, &w_perp, u_branch, k);
    let f2 = match model.amplitude(p_out, p_in) {
        Ok(f) => f.norm_sqr(),
        Err(_) => return f64::NEG_INFINITY,
    };
    if f2 > 0.0 {
        f2.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Sample (K, W⊥) from the conditional jump density of branch `U_i` with an
/// independence Metropolis-Hastings chain.
///
/// Proposals are exact draws of the constant-amplitude conditional, so the
/// Gaussian factors of target and proposal cancel and the acceptance
/// probability is min(1, |f(proposed)|²/|f(current)|²). For a constant
/// amplitude every proposal is accepted and the delivered sample is an exact
/// draw. A chain whose acceptance rate stays below `min_acceptance` records a
/// warning; the sample is still returned.
pub fn sample_jump_momenta(
    u_branch: &Vector3<f64>,
    env: &GasEnvironment,
    model: &ScatteringModel,
    mh: &MhSettings,
    rng: &mut impl Rng,
) -> Result<JumpParams> {
    let mut k = Vector3::zeros();
    let mut w = [0.0_f64; 2];
    let mut logp = f64::NEG_INFINITY;
    for _ in 0..1000 {
        (k, w) = crate::rates::sample_conditional_geometry(u_branch, rng);
        logp = log_f2(&k, w, u_branch, env, model);
        if logp.is_finite() {
            break;
        }
    }
    if !logp.is_finite() {
        return Err(Error::Numerical {
            what: "jump-momentum sampler",
            diagnostics: "could not find a point of positive target density".into(),
        });
    }
    let total_steps = mh.burn_in + mh.thinning;
    let mut accepted = 0usize;
    for _ in 0..total_steps {
        let (kp, wp) = crate::rates::sample_conditional_geometry(u_branch, rng);
        let logp_new = log_f2(&kp, wp, u_branch, env, model);
        if logp_new.is_finite() && rng.gen::<f64>().ln() < logp_new - logp {
            k = kp;
            w = wp;
            logp = logp_new;
            accepted += 1;
        }
    }
    let rate = accepted as f64 / total_steps.max(1) as f64;
    let (e1, e2) = plane_basis(&k);
    Ok(JumpParams {
        k,
        w_perp: e1 * w[0] + e2 * w[1],
        branch: 0,
        mh_warning: total_steps > 0 && rate < mh.min_acceptance,
    })
}

/// Apply one jump: shift every momentum by (m*/M) K, multiply each weight by
/// its complex x_i, renormalize, and refresh the rate cache.
pub fn apply_jump(
    state: &mut TrajectoryState,
    jp: &JumpParams,
    env: &GasEnvironment,
    model: &ScatteringModel,
    table: &RateTable,
) -> Result<()> {
    let k_norm = jp.k.norm();
    if k_norm < K_MIN {
        return Err(Error::Domain("jump with K = 0".into()));
    }
    let khat = jp.k / k_norm;
    for (a, u) in state.alphas.iter_mut().zip(&state.momenta) {
        let (p_out, p_in) = relative_momenta(env, &jp.w_perp, u, &jp.k);
        let f = model.amplitude(p_out, p_in)?;
        let shifted = u.dot(&khat) + 0.5 * k_norm;
        // x_i keeps the complex phase of f; only the magnitude is normalized
        // away below.
        *a *= f * (-0.5 * shifted * shifted).exp();
    }
    let norm = state.norm_sqr().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Numerical {
            what: "jump application",
            diagnostics: "all redistributed weights vanished".into(),
        });
    }
    for a in &mut state.alphas {
        *a /= norm;
    }
    let shift = jp.k * (env.m_star / env.M);
    for u in &mut state.momenta {
        *u += shift;
    }
    state.refresh_rates(table);
    Ok(())
}

/// One recorded jump, for the optional event log.
#[derive(Debug, Clone, Copy)]
pub struct JumpEvent {
    pub t: f64,
    pub k_magnitude: f64,
    pub branch: usize,
}

/// Counters and diagnostics of one trajectory run.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryStats {
    pub jumps: usize,
    pub mh_warnings: usize,
    pub events: Option<Vec<JumpEvent>>,
}

/// Evolve one trajectory to `t_final`, storing a snapshot of the state at
/// every requested time (sorted, within [0, t_final]).
///
/// The drift is applied piecewise so each snapshot time is hit exactly; the
/// trajectory is a pure function of the initial state, the tables, and the
/// RNG stream.
#[allow(clippy::too_many_arguments)]
pub fn evolve_trajectory(
    initial: &TrajectoryState,
    t_final: f64,
    snapshot_times: &[f64],
    env: &GasEnvironment,
    model: &ScatteringModel,
    table: &RateTable,
    mh: &MhSettings,
    rng: &mut impl Rng,
    log_events: bool,
) -> Result<(Vec<TrajectoryState>, TrajectoryStats)> {
    if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Contract("snapshot times must be sorted".into()));
    }
    if snapshot_times.iter().any(|&t| t < 0.0 || t > t_final) {
        return Err(Error::Contract("snapshot times must lie within [0, t_final]".into()));
    }
    let mut state = initial.clone();
    state.refresh_rates(table);
    let mut stats = TrajectoryStats { events: log_events.then(Vec::new), ..Default::default() };
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut next_snap = 0usize;

    // Advance the drift up to `target`, emitting snapshots along the way.
    fn advance_to(
        state: &mut TrajectoryState,
        target: f64,
        env: &GasEnvironment,
        snapshot_times: &[f64],
        next_snap: &mut usize,
        snapshots: &mut Vec<TrajectoryState>,
    ) {
        while *next_snap < snapshot_times.len() && snapshot_times[*next_snap] <= target {
            let ts = snapshot_times[*next_snap];
            deterministic_step(state, (ts - state.t).max(0.0), env);
            state.t = ts;
            snapshots.push(state.clone());
            *next_snap += 1;
        }
        deterministic_step(state, (target - state.t).max(0.0), env);
        state.t = target;
    }

    loop {
        let eta = loop {
            let x = rng.gen::<f64>();
            if x > 0.0 && x < 1.0 {
                break x;
            }
        };
        match sample_waiting_time(&state, eta, env)? {
            WaitingTime::Never => {
                advance_to(&mut state, t_final, env, snapshot_times, &mut next_snap, &mut snapshots);
                break;
            }
            WaitingTime::Jump(tau) => {
                let t_jump = state.t + tau;
                if t_jump >= t_final {
                    advance_to(&mut state, t_final, env, snapshot_times, &mut next_snap, &mut snapshots);
                    break;
                }
                advance_to(&mut state, t_jump, env, snapshot_times, &mut next_snap, &mut snapshots);
                let branch = select_jump_branch(&state, rng)?;
                let mut jp = sample_jump_momenta(&state.momenta[branch], env, model, mh, rng)?;
                jp.branch = branch;
                apply_jump(&mut state, &jp, env, model, table)?;
                stats.jumps += 1;
                if jp.mh_warning {
                    stats.mh_warnings += 1;
                }
                if let Some(events) = stats.events.as_mut() {
                    events.push(JumpEvent { t: state.t, k_magnitude: jp.k.norm(), branch });
                }
            }
        }
    }
    Ok((snapshots, stats))
}
