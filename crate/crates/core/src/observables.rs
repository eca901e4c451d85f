//! Ensemble estimators over trajectory snapshots.
//!
//! Every estimator operates on stored snapshots (one state per trajectory,
//! all at the same time) and returns a value with a standard error, so a
//! single ensemble serves many analyses. The position-space estimators use
//! the factorized structure |U_j, V, W⟩: the x components carry the
//! superposition while y and z stay sharp, and the amplitude at scaled
//! position S is the finite Fourier sum A(S) = Σ_j α_j exp(i c S U_jx) with
//! c = M v_β Λ_th / ħ.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::engine::TrajectoryState;
use crate::numerics::{linear_fit, mean_stderr};
use crate::units::GasEnvironment;
use crate::{Error, Result};

/// What an [`ObservableSeries`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    Coherence,
    Energy,
    Variance,
    DensitySlice,
    Visibility,
}

impl ObservableKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Coherence => "coherence",
            Self::Energy => "energy",
            Self::Variance => "variance",
            Self::DensitySlice => "density_slice",
            Self::Visibility => "visibility",
        }
    }
}

/// Time-stamped ensemble estimates with standard errors.
#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub kind: ObservableKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Free-form descriptor lines (grids, separations, windows).
    pub meta: Vec<String>,
}

impl ObservableSeries {
    pub fn new(kind: ObservableKind) -> Self {
        Self { kind, times: Vec::new(), values: Vec::new(), stderr: Vec::new(), meta: Vec::new() }
    }

    pub fn push(&mut self, t: f64, value: f64, stderr: f64) {
        self.times.push(t);
        self.values.push(value);
        self.stderr.push(stderr);
    }

    /// Columnar text: metadata header, then `time,value,stderr` rows.
    pub fn to_text(&self) -> String {
        let mut s = format!("# observable {}\n", self.kind.label());
        for m in &self.meta {
            s.push_str(&format!("# {m}\n"));
        }
        s.push_str("# columns: time,value,stderr\n");
        for i in 0..self.times.len() {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e}\n",
                self.times[i], self.values[i], self.stderr[i]
            ));
        }
        s
    }
}

/// Momentum coherence C = 2 E[|α₁ α₂*|] of a two-branch ensemble at one time.
pub fn momentum_coherence(states: &[TrajectoryState]) -> Result<(f64, f64)> {
    if states.iter().any(|s| s.branch_count() != 2) {
        return Err(Error::Contract("momentum coherence needs two-branch trajectories".into()));
    }
    let values: Vec<f64> =
        states.iter().map(|s| 2.0 * (s.alphas[0] * s.alphas[1].conj()).norm()).collect();
    Ok(mean_stderr(&values))
}

/// Position amplitude of one trajectory on a scaled-position grid (restricted
/// to the x components).
pub fn position_amplitude(
    state: &TrajectoryState,
    s_grid: &[f64],
    env: &GasEnvironment,
) -> Vec<Complex64> {
    let c = env.position_phase_scale();
    s_grid
        .iter()
        .map(|&s| {
            state
                .alphas
                .iter()
                .zip(&state.momenta)
                .map(|(a, u)| a * Complex64::from_polar(1.0, c * s * u.x))
                .sum()
        })
        .collect()
}

fn check_factorized(states: &[TrajectoryState]) -> Result<()> {
    for state in states {
        let (vy, vz) = (state.momenta[0].y, state.momenta[0].z);
        for u in &state.momenta {
            let scale = 1.0 + u.norm();
            if (u.y - vy).abs() > 1e-9 * scale || (u.z - vz).abs() > 1e-9 * scale {
                return Err(Error::Contract(
                    "ensemble is not factorized: y/z momenta differ across branches".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Position density matrix ρ(S, S') reconstructed from a factorized ensemble,
/// normalized so the diagonal integrates to one on the grid.
pub fn position_density_matrix(
    states: &[TrajectoryState],
    s_grid: &[f64],
    sp_grid: &[f64],
    env: &GasEnvironment,
) -> Result<DMatrix<Complex64>> {
    check_factorized(states)?;
    let n = states.len() as f64;
    let mut rho = DMatrix::<Complex64>::zeros(s_grid.len(), sp_grid.len());
    let mut diag_norm = 0.0;
    for state in states {
        let a = position_amplitude(state, s_grid, env);
        let b = if std::ptr::eq(s_grid, sp_grid) {
            a.clone()
        } else {
            position_amplitude(state, sp_grid, env)
        };
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                rho[(i, j)] += ai * bj.conj() / n;
            }
        }
    }
    // Normalize the trace on the S grid (uniform spacing assumed).
    if s_grid.len() >= 2 && std::ptr::eq(s_grid, sp_grid) {
        let ds = s_grid[1] - s_grid[0];
        for i in 0..s_grid.len() {
            diag_norm += rho[(i, i)].re * ds;
        }
        if diag_norm > 0.0 {
            rho /= Complex64::new(diag_norm, 0.0);
        }
    }
    Ok(rho)
}

/// One off-diagonal element ρ(S₁, S₂) (unnormalized Fourier sum) with the
/// standard errors of its real and imaginary parts combined in quadrature.
pub fn off_diagonal_element(
    states: &[TrajectoryState],
    s1: f64,
    s2: f64,
    env: &GasEnvironment,
) -> (Complex64, f64) {
    let contributions: Vec<Complex64> = states
        .iter()
        .map(|state| {
            let a = position_amplitude(state, &[s1, s2], env);
            a[0] * a[1].conj()
        })
        .collect();
    let re: Vec<f64> = contributions.iter().map(|c| c.re).collect();
    let im: Vec<f64> = contributions.iter().map(|c| c.im).collect();
    let (mre, sre) = mean_stderr(&re);
    let (mim, sim) = mean_stderr(&im);
    (Complex64::new(mre, mim), (sre * sre + sim * sim).sqrt())
}

/// Ensemble-averaged position density on a grid (normalized to unit mass on
/// the grid) with per-point standard errors.
pub fn density_diagonal(
    states: &[TrajectoryState],
    s_grid: &[f64],
    env: &GasEnvironment,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_factorized(states)?;
    let n = states.len();
    let mut mean = vec![0.0; s_grid.len()];
    let mut m2 = vec![0.0; s_grid.len()];
    for (t_idx, state) in states.iter().enumerate() {
        let a = position_amplitude(state, s_grid, env);
        for (i, ai) in a.iter().enumerate() {
            let v = ai.norm_sqr();
            let delta = v - mean[i];
            mean[i] += delta / (t_idx as f64 + 1.0);
            m2[i] += delta * (v - mean[i]);
        }
    }
    let stderr: Vec<f64> = m2
        .iter()
        .map(|&s| if n > 1 { (s / (n as f64 - 1.0) / n as f64).sqrt() } else { 0.0 })
        .collect();
    let ds = if s_grid.len() >= 2 { s_grid[1] - s_grid[0] } else { 1.0 };
    let mass: f64 = mean.iter().sum::<f64>() * ds;
    if !(mass > 0.0) {
        return Err(Error::Grid("density has no mass on the grid".into()));
    }
    Ok((
        mean.iter().map(|v| v / mass).collect(),
        stderr.iter().map(|v| v / mass).collect(),
    ))
}

/// Result of the log-linear localization fit.
#[derive(Debug, Clone)]
pub struct LocalizationFit {
    pub rate: f64,
    pub rate_stderr: f64,
    pub r_squared: f64,
    /// Set when the residual is visibly non-exponential (R² < 0.9).
    pub non_exponential: bool,
}

/// Least-squares slope of −log |ρ(x₁, x₂, t)| over the fit window.
pub fn extract_localization_rate(
    times: &[f64],
    magnitudes: &[f64],
    window: (f64, f64),
) -> Result<LocalizationFit> {
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (&t, &m) in times.iter().zip(magnitudes) {
        if t >= window.0 && t <= window.1 {
            if !(m > 0.0) {
                return Err(Error::Contract(format!(
                    "off-diagonal magnitude must be positive in the fit window, got {m} at t = {t}"
                )));
            }
            ts.push(t);
            logs.push(m.ln());
        }
    }
    if ts.len() < 3 {
        return Err(Error::Contract("fit window contains fewer than 3 samples".into()));
    }
    let (_, slope, stderr, r2) = linear_fit(&ts, &logs);
    Ok(LocalizationFit {
        rate: -slope,
        rate_stderr: stderr,
        r_squared: r2,
        non_exponential: r2 < 0.9,
    })
}

/// ⟨U²⟩ = E[Σ |α_i|² U_i²] with standard error.
pub fn mean_square_momentum(states: &[TrajectoryState]) -> (f64, f64) {
    let values: Vec<f64> = states.iter().map(|s| s.mean_square_momentum()).collect();
    mean_stderr(&values)
}

/// Spatial variance of the x marginal in Λ_th² units, from per-trajectory
/// normalized densities on the grid.
///
/// Fails when more than 1e-3 of the probability mass sits in the outermost
/// 5% strips of the grid (the window no longer contains the state).
pub fn spatial_variance(
    states: &[TrajectoryState],
    s_grid: &[f64],
    env: &GasEnvironment,
) -> Result<(f64, f64)> {
    check_factorized(states)?;
    if s_grid.len() < 8 {
        return Err(Error::Grid("variance grid needs at least 8 points".into()));
    }
    let mut m1 = Vec::with_capacity(states.len());
    let mut m2 = Vec::with_capacity(states.len());
    let edge = (s_grid.len() / 20).max(1);
    let mut edge_mass_total = 0.0;
    for state in states {
        let a = position_amplitude(state, s_grid, env);
        let dens: Vec<f64> = a.iter().map(|c| c.norm_sqr()).collect();
        let mass: f64 = dens.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::Grid("empty density".into()));
        }
        let edge_mass: f64 = dens[..edge].iter().sum::<f64>()
            + dens[dens.len() - edge..].iter().sum::<f64>();
        edge_mass_total += edge_mass / mass;
        let mean: f64 = s_grid.iter().zip(&dens).map(|(s, d)| s * d).sum::<f64>() / mass;
        let var: f64 =
            s_grid.iter().zip(&dens).map(|(s, d)| (s - mean) * (s - mean) * d).sum::<f64>() / mass;
        m1.push(mean);
        m2.push(var + mean * mean);
    }
    edge_mass_total /= states.len() as f64;
    if edge_mass_total > 1e-3 {
        return Err(Error::Grid(format!(
            "probability mass {edge_mass_total:.2e} in the outer grid strips exceeds 1e-3; enlarge the grid"
        )));
    }
    let (mm1, se1) = mean_stderr(&m1);
    let (mm2, se2) = mean_stderr(&m2);
    let var = mm2 - mm1 * mm1;
    let se = (se2 * se2 + (2.0 * mm1 * se1) * (2.0 * mm1 * se1)).sqrt();
    Ok((var, se))
}

/// Outcome of the fringe-visibility extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Visibility {
    Defined { value: f64, maximum: f64, minimum: f64 },
    /// No interference structure: no local minimum flanks the central lobe.
    Undefined,
}

impl Visibility {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Defined { value, .. } => Some(*value),
            Self::Undefined => None,
        }
    }
}

/// Fringe visibility (ρ_max − ρ_min)/(ρ_max + ρ_min) from the central maximum
/// of the density diagonal and the deeper of its two neighboring local minima.
pub fn fringe_visibility(diagonal: &[f64]) -> Visibility {
    if diagonal.len() < 5 {
        return Visibility::Undefined;
    }
    let imax = diagonal
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let maximum = diagonal[imax];
    if !(maximum > 0.0) {
        return Visibility::Undefined;
    }
    // Walk downhill from the peak on each side; the first strict turning
    // point is the neighboring minimum.
    let mut minima = Vec::new();
    for dir in [-1i64, 1i64] {
        let mut i = imax as i64;
        let mut best = maximum;
        let mut moved = false;
        loop {
            let next = i + dir;
            if next < 0 || next as usize >= diagonal.len() {
                break;
            }
            let v = diagonal[next as usize];
            if v <= best {
                best = v;
                i = next;
                moved = true;
            } else {
                if moved && best < maximum * (1.0 - 1e-9) {
                    minima.push(best);
                }
                break;
            }
        }
    }
    match minima.iter().copied().min_by(|a, b| a.total_cmp(b)) {
        Some(minimum) => Visibility::Defined {
            value: (maximum - minimum) / (maximum + minimum),
            maximum,
            minimum,
        },
        None => Visibility::Undefined,
    }
}
