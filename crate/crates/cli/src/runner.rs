//! Ensemble execution: builds models and tables (with file caching), runs
//! trajectories in parallel with counter-seeded RNG streams, and reduces
//! observables deterministically.
//!
//! Reductions are organized in fixed-size trajectory blocks folded in index
//! order, so the output bytes depend only on (config, seed) — never on the
//! thread count or scheduling.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use qlbe_core::engine::{evolve_trajectory, JumpEvent, MhSettings};
use qlbe_core::observables::{fringe_visibility, position_amplitude, Visibility};
use qlbe_core::rates::{build_rate_table, fingerprint_for, rate_grid, RateTable};
use qlbe_core::scattering::{geometric_grid, PhaseShiftTable, RadialSolverOptions, ScatteringModel};
use qlbe_core::units::GasEnvironment;
use qlbe_core::{ObservableKind, ObservableSeries, TrajectoryState};

use crate::config::{ObservableConfig, RunConfig};
use crate::initial_state::build_initial_state;

/// Everything a finished run hands back to callers (the CLI writes files from
/// this; tests read it directly).
#[derive(Debug)]
pub struct RunOutput {
    pub results: Vec<ObsResult>,
    pub total_jumps: usize,
    pub mh_warnings: usize,
    pub wall_seconds: f64,
    pub rate_fingerprint: String,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug)]
pub enum ObsResult {
    /// Scalar time series (coherence, energy, variance, off-diagonal
    /// magnitude, visibility).
    Series { config: ObservableConfig, series: ObservableSeries },
    /// Per-snapshot densities on a position grid.
    GridSeries {
        config: ObservableConfig,
        times: Vec<f64>,
        s_grid: Vec<f64>,
        values: Vec<Vec<f64>>,
        stderr: Vec<Vec<f64>>,
    },
    /// Per-snapshot complex density matrices on a position grid.
    MatrixSeries {
        config: ObservableConfig,
        times: Vec<f64>,
        s_grid: Vec<f64>,
        matrices: Vec<Vec<Complex64>>,
    },
}

/// Build the environment described by the config.
pub fn build_environment(cfg: &RunConfig) -> anyhow::Result<GasEnvironment> {
    let e = &cfg.environment;
    let env = match e.preset.as_deref() {
        Some("hard_sphere") => GasEnvironment::hard_sphere_units(
            e.mass_ratio.ok_or_else(|| anyhow::anyhow!("environment.mass_ratio required"))?,
        )?,
        Some("gaussian") => GasEnvironment::gaussian_units(
            e.mass_ratio.ok_or_else(|| anyhow::anyhow!("environment.mass_ratio required"))?,
        )?,
        Some(other) => anyhow::bail!("unknown environment preset `{other}`"),
        None => GasEnvironment::new(
            e.m.ok_or_else(|| anyhow::anyhow!("environment.m required"))?,
            e.m_test.ok_or_else(|| anyhow::anyhow!("environment.M required"))?,
            e.kt.unwrap_or(1.0),
            e.n_gas.unwrap_or(1.0),
            e.hbar.unwrap_or(1.0),
        )?,
    };
    Ok(env)
}

fn phase_fingerprint(cfg: &RunConfig, env: &GasEnvironment) -> String {
    let m = &cfg.model;
    let mut h = Sha256::new();
    for x in [m.v0, m.d, env.m_star, env.hbar, m.p_min, m.p_max] {
        h.update(x.to_bits().to_le_bytes());
    }
    h.update(m.l_max.to_le_bytes());
    h.update(m.n_p.to_le_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Build (or load from cache) the scattering model.
pub fn build_model(
    cfg: &RunConfig,
    env: &GasEnvironment,
    cache_dir: Option<&Path>,
) -> anyhow::Result<ScatteringModel> {
    match cfg.model.kind.as_str() {
        "hard_sphere" => Ok(ScatteringModel::hard_sphere(cfg.model.radius)),
        "gaussian_born" => Ok(ScatteringModel::gaussian_born(cfg.model.v0, cfg.model.d, env)),
        "gaussian_exact" => {
            let fp = phase_fingerprint(cfg, env);
            let cache_path = cache_dir.map(|d| d.join(format!("phase_{fp}.csv")));
            if let Some(path) = &cache_path {
                if let Ok(text) = std::fs::read_to_string(path) {
                    if let Ok(table) = PhaseShiftTable::from_text(&text) {
                        if table.l_max == cfg.model.l_max {
                            return Ok(ScatteringModel::PartialWave {
                                table: std::sync::Arc::new(table),
                            });
                        }
                    }
                    eprintln!("warning: stale phase cache at {}; rebuilding", path.display());
                }
            }
            let grid = geometric_grid(cfg.model.p_min, cfg.model.p_max, cfg.model.n_p);
            let model = ScatteringModel::gaussian_exact(
                cfg.model.v0,
                cfg.model.d,
                env,
                cfg.model.l_max,
                grid,
                &RadialSolverOptions::default(),
            )?;
            if let (Some(path), ScatteringModel::PartialWave { table }) = (&cache_path, &model) {
                std::fs::create_dir_all(path.parent().unwrap())?;
                std::fs::write(path, table.to_text())?;
            }
            Ok(model)
        }
        other => anyhow::bail!("unknown model kind `{other}`"),
    }
}

/// Build (or load from cache) the rate table.
///
/// The table's RNG stream is derived from its own content fingerprint, so a
/// cached table and a cold rebuild are bit-identical and the run output stays
/// a pure function of (config, seed).
pub fn build_table(
    cfg: &RunConfig,
    env: &GasEnvironment,
    model: &ScatteringModel,
    cache_dir: Option<&Path>,
) -> anyhow::Result<RateTable> {
    let grid = rate_grid(cfg.rates.u_max, cfg.rates.n_grid);
    let fp = fingerprint_for(env, model, &grid, cfg.rates.n_samples);
    let cache_path = cache_dir.map(|d| d.join(format!("rate_{fp}.csv")));
    if let Some(path) = &cache_path {
        if let Ok(text) = std::fs::read_to_string(path) {
            match RateTable::from_text(&text, env, model) {
                Ok(table) => return Ok(table),
                Err(e) => eprintln!("warning: rejecting cached rate table: {e}"),
            }
        }
    }
    let table_seed = u64::from_str_radix(&fp[..16.min(fp.len())], 16).unwrap_or(0);
    let table = build_rate_table(
        env,
        model,
        cfg.rates.u_max,
        cfg.rates.n_grid,
        cfg.rates.n_samples,
        table_seed,
    )?;
    if let Some(path) = &cache_path {
        std::fs::create_dir_all(path.parent().unwrap())?;
        std::fs::write(path, table.to_text())?;
    }
    Ok(table)
}

fn grid_from(obs: &ObservableConfig) -> Vec<f64> {
    let n = obs.n_points.unwrap();
    let (lo, hi) = (obs.s_min.unwrap(), obs.s_max.unwrap());
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Per-observable accumulator over one block of trajectories.
enum Acc {
    Scalar { sum: Vec<f64>, sumsq: Vec<f64> },
    Grid { grid: Vec<f64>, sum: Vec<Vec<f64>>, sumsq: Vec<Vec<f64>> },
    Matrix { grid: Vec<f64>, sum: Vec<Vec<Complex64>> },
    ComplexScalar { re: Vec<f64>, im: Vec<f64>, resq: Vec<f64>, imsq: Vec<f64> },
    Moments { m1: Vec<f64>, m1sq: Vec<f64>, m2: Vec<f64>, m2sq: Vec<f64>, edge: Vec<f64> },
}

impl Acc {
    fn new(obs: &ObservableConfig, n_snap: usize) -> Self {
        match obs.kind.as_str() {
            "coherence" | "mean_square_momentum" => {
                Acc::Scalar { sum: vec![0.0; n_snap], sumsq: vec![0.0; n_snap] }
            }
            "density_diagonal" | "visibility" => {
                let grid = grid_from(obs);
                Acc::Grid {
                    sum: vec![vec![0.0; grid.len()]; n_snap],
                    sumsq: vec![vec![0.0; grid.len()]; n_snap],
                    grid,
                }
            }
            "density_matrix" => {
                let grid = grid_from(obs);
                Acc::Matrix {
                    sum: vec![vec![Complex64::new(0.0, 0.0); grid.len() * grid.len()]; n_snap],
                    grid,
                }
            }
            "off_diagonal" => Acc::ComplexScalar {
                re: vec![0.0; n_snap],
                im: vec![0.0; n_snap],
                resq: vec![0.0; n_snap],
                imsq: vec![0.0; n_snap],
            },
            "spatial_variance" => Acc::Moments {
                m1: vec![0.0; n_snap],
                m1sq: vec![0.0; n_snap],
                m2: vec![0.0; n_snap],
                m2sq: vec![0.0; n_snap],
                edge: vec![0.0; n_snap],
            },
            _ => unreachable!("validated"),
        }
    }

    fn add_snapshot(
        &mut self,
        k: usize,
        state: &TrajectoryState,
        obs: &ObservableConfig,
        env: &GasEnvironment,
    ) {
        match self {
            Acc::Scalar { sum, sumsq } => {
                let v = match obs.kind.as_str() {
                    "coherence" => 2.0 * (state.alphas[0] * state.alphas[1].conj()).norm(),
                    _ => state.mean_square_momentum(),
                };
                sum[k] += v;
                sumsq[k] += v * v;
            }
            Acc::Grid { grid, sum, sumsq } => {
                let amp = position_amplitude(state, grid, env);
                for (i, a) in amp.iter().enumerate() {
                    let v = a.norm_sqr();
                    sum[k][i] += v;
                    sumsq[k][i] += v * v;
                }
            }
            Acc::Matrix { grid, sum } => {
                let amp = position_amplitude(state, grid, env);
                let n = grid.len();
                for i in 0..n {
                    for j in 0..n {
                        sum[k][i * n + j] += amp[i] * amp[j].conj();
                    }
                }
            }
            Acc::ComplexScalar { re, im, resq, imsq } => {
                let pts = [obs.s1.unwrap(), obs.s2.unwrap()];
                let amp = position_amplitude(state, &pts, env);
                let v = amp[0] * amp[1].conj();
                re[k] += v.re;
                im[k] += v.im;
                resq[k] += v.re * v.re;
                imsq[k] += v.im * v.im;
            }
            Acc::Moments { m1, m1sq, m2, m2sq, edge } => {
                let grid = grid_from(obs);
                let amp = position_amplitude(state, &grid, env);
                let dens: Vec<f64> = amp.iter().map(|a| a.norm_sqr()).collect();
                let mass: f64 = dens.iter().sum();
                let ne = (grid.len() / 20).max(1);
                let edge_mass: f64 = dens[..ne].iter().sum::<f64>()
                    + dens[dens.len() - ne..].iter().sum::<f64>();
                let mean: f64 = grid.iter().zip(&dens).map(|(s, d)| s * d).sum::<f64>() / mass;
                let msq: f64 = grid.iter().zip(&dens).map(|(s, d)| s * s * d).sum::<f64>() / mass;
                m1[k] += mean;
                m1sq[k] += mean * mean;
                m2[k] += msq;
                m2sq[k] += msq * msq;
                edge[k] += edge_mass / mass;
            }
        }
    }

    fn merge(&mut self, other: Acc) {
        match (self, other) {
            (Acc::Scalar { sum, sumsq }, Acc::Scalar { sum: s2, sumsq: q2 }) => {
                for (a, b) in sum.iter_mut().zip(s2) {
                    *a += b;
                }
                for (a, b) in sumsq.iter_mut().zip(q2) {
                    *a += b;
                }
            }
            (Acc::Grid { sum, sumsq, .. }, Acc::Grid { sum: s2, sumsq: q2, .. }) => {
                for (row, r2) in sum.iter_mut().zip(s2) {
                    for (a, b) in row.iter_mut().zip(r2) {
                        *a += b;
                    }
                }
                for (row, r2) in sumsq.iter_mut().zip(q2) {
                    for (a, b) in row.iter_mut().zip(r2) {
                        *a += b;
                    }
                }
            }
            (Acc::Matrix { sum, .. }, Acc::Matrix { sum: s2, .. }) => {
                for (row, r2) in sum.iter_mut().zip(s2) {
                    for (a, b) in row.iter_mut().zip(r2) {
                        *a += b;
                    }
                }
            }
            (
                Acc::ComplexScalar { re, im, resq, imsq },
                Acc::ComplexScalar { re: r2, im: i2, resq: rq2, imsq: iq2 },
            ) => {
                for (a, b) in re.iter_mut().zip(r2) {
                    *a += b;
                }
                for (a, b) in im.iter_mut().zip(i2) {
                    *a += b;
                }
                for (a, b) in resq.iter_mut().zip(rq2) {
                    *a += b;
                }
                for (a, b) in imsq.iter_mut().zip(iq2) {
                    *a += b;
                }
            }
            (
                Acc::Moments { m1, m1sq, m2, m2sq, edge },
                Acc::Moments { m1: a1, m1sq: a2, m2: a3, m2sq: a4, edge: a5 },
            ) => {
                for (a, b) in m1.iter_mut().zip(a1) {
                    *a += b;
                }
                for (a, b) in m1sq.iter_mut().zip(a2) {
                    *a += b;
                }
                for (a, b) in m2.iter_mut().zip(a3) {
                    *a += b;
                }
                for (a, b) in m2sq.iter_mut().zip(a4) {
                    *a += b;
                }
                for (a, b) in edge.iter_mut().zip(a5) {
                    *a += b;
                }
            }
            _ => unreachable!("accumulator kinds are fixed per observable"),
        }
    }
}

struct BlockResult {
    accs: Vec<Acc>,
    jumps: usize,
    warnings: usize,
    events: Vec<(usize, Vec<JumpEvent>)>,
}

fn mean_se(sum: f64, sumsq: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Execute a validated configuration and return all requested estimates.
pub fn run(cfg: &RunConfig) -> anyhow::Result<RunOutput> {
    let started = Instant::now();
    cfg.validate()?;
    let env = build_environment(cfg)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    let cache_dir = cfg
        .output
        .cache_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| out_dir.join("cache"));
    let model = build_model(cfg, &env, Some(&cache_dir))?;
    let table = build_table(cfg, &env, &model, Some(&cache_dir))?;
    let initial = build_initial_state(&cfg.initial, &cfg.model, &env, cfg.run.t_final)?;
    if cfg.observables.iter().any(|o| o.kind == "coherence") && initial.branch_count() != 2 {
        anyhow::bail!("coherence observable needs a two-branch initial state");
    }
    let snapshot_times = cfg.snapshot_times();
    let mh = MhSettings {
        burn_in: cfg.mh.burn_in,
        thinning: cfg.mh.thinning,
        ..MhSettings::default()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(if cfg.run.threads == 0 { 0 } else { cfg.run.threads })
        .build()?;

    const BLOCK: usize = 64;
    let n_traj = cfg.run.trajectories;
    let n_blocks = n_traj.div_ceil(BLOCK);
    let blocks: Vec<anyhow::Result<BlockResult>> = pool.install(|| {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let lo = b * BLOCK;
                let hi = ((b + 1) * BLOCK).min(n_traj);
                let mut accs: Vec<Acc> = cfg
                    .observables
                    .iter()
                    .map(|o| Acc::new(o, snapshot_times.len()))
                    .collect();
                let mut jumps = 0;
                let mut warnings = 0;
                let mut events = Vec::new();
                for idx in lo..hi {
                    let mut rng = ChaCha12Rng::seed_from_u64(cfg.run.seed);
                    rng.set_stream(idx as u64 + 1);
                    let (snaps, stats) = evolve_trajectory(
                        &initial,
                        cfg.run.t_final,
                        &snapshot_times,
                        &env,
                        &model,
                        &table,
                        &mh,
                        &mut rng,
                        cfg.output.event_log,
                    )?;
                    for (k, state) in snaps.iter().enumerate() {
                        for (acc, obs) in accs.iter_mut().zip(&cfg.observables) {
                            acc.add_snapshot(k, state, obs, &env);
                        }
                    }
                    jumps += stats.jumps;
                    warnings += stats.mh_warnings;
                    if let Some(ev) = stats.events {
                        events.push((idx, ev));
                    }
                }
                Ok(BlockResult { accs, jumps, warnings, events })
            })
            .collect()
    });

    let mut merged: Option<Vec<Acc>> = None;
    let mut total_jumps = 0;
    let mut mh_warnings = 0;
    let mut all_events = Vec::new();
    for block in blocks {
        let block = block?;
        total_jumps += block.jumps;
        mh_warnings += block.warnings;
        all_events.extend(block.events);
        match &mut merged {
            None => merged = Some(block.accs),
            Some(m) => {
                for (a, b) in m.iter_mut().zip(block.accs) {
                    a.merge(b);
                }
            }
        }
    }
    let merged = merged.expect("at least one trajectory");
    let n = n_traj as f64;

    let mut results = Vec::new();
    for (acc, obs) in merged.into_iter().zip(cfg.observables.iter()) {
        let result = match acc {
            Acc::Scalar { sum, sumsq } => {
                let kind = if obs.kind == "coherence" {
                    ObservableKind::Coherence
                } else {
                    ObservableKind::Energy
                };
                let mut series = ObservableSeries::new(kind);
                for (k, &t) in snapshot_times.iter().enumerate() {
                    let (m, se) = mean_se(sum[k], sumsq[k], n);
                    series.push(t, m, se);
                }
                ObsResult::Series { config: obs.clone(), series }
            }
            Acc::Grid { grid, sum, sumsq } => {
                // Normalized per snapshot to unit mass on the grid.
                let ds = grid[1] - grid[0];
                let mut values = Vec::new();
                let mut stderr = Vec::new();
                for k in 0..snapshot_times.len() {
                    let mut v = Vec::with_capacity(grid.len());
                    let mut se = Vec::with_capacity(grid.len());
                    let mass: f64 = sum[k].iter().sum::<f64>() / n * ds;
                    for i in 0..grid.len() {
                        let (m, s) = mean_se(sum[k][i], sumsq[k][i], n);
                        v.push(m / mass);
                        se.push(s / mass);
                    }
                    values.push(v);
                    stderr.push(se);
                }
                if obs.kind == "visibility" {
                    let mut series = ObservableSeries::new(ObservableKind::Visibility);
                    series.meta.push(format!(
                        "grid s_min={} s_max={} n={}",
                        grid[0],
                        grid.last().unwrap(),
                        grid.len()
                    ));
                    for (k, &t) in snapshot_times.iter().enumerate() {
                        match fringe_visibility(&values[k]) {
                            Visibility::Defined { value, maximum, minimum } => {
                                // Propagate the density errors at the two
                                // extremal points.
                                let se_max = stderr[k]
                                    .iter()
                                    .zip(&values[k])
                                    .filter(|(_, v)| **v == maximum)
                                    .map(|(s, _)| *s)
                                    .next()
                                    .unwrap_or(0.0);
                                let se_min = stderr[k]
                                    .iter()
                                    .zip(&values[k])
                                    .filter(|(_, v)| **v == minimum)
                                    .map(|(s, _)| *s)
                                    .next()
                                    .unwrap_or(0.0);
                                let denom = (maximum + minimum) * (maximum + minimum);
                                let se = ((2.0 * minimum * se_max).powi(2)
                                    + (2.0 * maximum * se_min).powi(2))
                                .sqrt()
                                    / denom;
                                series.push(t, value, se);
                            }
                            Visibility::Undefined => {
                                series.push(t, f64::NAN, f64::NAN);
                            }
                        }
                    }
                    ObsResult::Series { config: obs.clone(), series }
                } else {
                    ObsResult::GridSeries {
                        config: obs.clone(),
                        times: snapshot_times.clone(),
                        s_grid: grid,
                        values,
                        stderr,
                    }
                }
            }
            Acc::Matrix { grid, sum } => {
                let ds = grid[1] - grid[0];
                let npts = grid.len();
                let matrices: Vec<Vec<Complex64>> = sum
                    .into_iter()
                    .map(|mut m| {
                        let trace: f64 =
                            (0..npts).map(|i| m[i * npts + i].re).sum::<f64>() / n * ds;
                        for v in &mut m {
                            *v /= Complex64::new(n * trace, 0.0);
                        }
                        m
                    })
                    .collect();
                ObsResult::MatrixSeries {
                    config: obs.clone(),
                    times: snapshot_times.clone(),
                    s_grid: grid,
                    matrices,
                }
            }
            Acc::ComplexScalar { re, im, resq, imsq } => {
                let mut series = ObservableSeries::new(ObservableKind::DensitySlice);
                series.meta.push(format!(
                    "off-diagonal rho(s1, s2) magnitude at s1={} s2={}",
                    obs.s1.unwrap(),
                    obs.s2.unwrap()
                ));
                for (k, &t) in snapshot_times.iter().enumerate() {
                    let (mre, sre) = mean_se(re[k], resq[k], n);
                    let (mim, sim) = mean_se(im[k], imsq[k], n);
                    let mag = (mre * mre + mim * mim).sqrt();
                    let se = (sre * sre + sim * sim).sqrt();
                    series.push(t, mag, se);
                }
                ObsResult::Series { config: obs.clone(), series }
            }
            Acc::Moments { m1, m1sq, m2, m2sq, edge } => {
                let mut series = ObservableSeries::new(ObservableKind::Variance);
                for (k, &t) in snapshot_times.iter().enumerate() {
                    let edge_mean = edge[k] / n;
                    if edge_mean > 1e-3 {
                        anyhow::bail!(
                            "probability mass {edge_mean:.2e} in the outer grid strips at t = {t}; enlarge the variance grid"
                        );
                    }
                    let (mm1, se1) = mean_se(m1[k], m1sq[k], n);
                    let (mm2, se2) = mean_se(m2[k], m2sq[k], n);
                    let var = mm2 - mm1 * mm1;
                    let se = (se2 * se2 + (2.0 * mm1 * se1) * (2.0 * mm1 * se1)).sqrt();
                    series.push(t, var, se);
                }
                ObsResult::Series { config: obs.clone(), series }
            }
        };
        results.push(result);
    }

    // Event log, ordered by trajectory index.
    if cfg.output.event_log {
        all_events.sort_by_key(|(idx, _)| *idx);
        let mut text = String::from("# columns: trajectory,t,k_magnitude,branch\n");
        for (idx, events) in &all_events {
            for e in events {
                text.push_str(&format!(
                    "{idx},{:.12e},{:.12e},{}\n",
                    e.t, e.k_magnitude, e.branch
                ));
            }
        }
        std::fs::create_dir_all(&out_dir)?;
        std::fs::write(out_dir.join("events.csv"), text)?;
    }

    Ok(RunOutput {
        results,
        total_jumps,
        mh_warnings,
        wall_seconds: started.elapsed().as_secs_f64(),
        rate_fingerprint: table.env_fingerprint.clone(),
        snapshot_times,
    })
}

/// Run and persist all outputs plus the manifest; returns the output.
pub fn run_to_files(cfg: &RunConfig) -> anyhow::Result<RunOutput> {
    let out = run(cfg)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)?;
    for (i, result) in out.results.iter().enumerate() {
        match result {
            ObsResult::Series { config, series } => {
                let name = format!("{}_{i:02}.csv", config.kind);
                std::fs::write(out_dir.join(name), series.to_text())?;
            }
            ObsResult::GridSeries { config, times, s_grid, values, stderr } => {
                for (k, t) in times.iter().enumerate() {
                    let mut text = format!(
                        "# observable {}\n# time {:.12e}\n# columns: s,value,stderr\n",
                        config.kind, t
                    );
                    for (j, s) in s_grid.iter().enumerate() {
                        text.push_str(&format!(
                            "{:.12e},{:.12e},{:.12e}\n",
                            s, values[k][j], stderr[k][j]
                        ));
                    }
                    std::fs::write(out_dir.join(format!("{}_{i:02}_t{k:02}.csv", config.kind)), text)?;
                }
            }
            ObsResult::MatrixSeries { config, times, s_grid, matrices } => {
                for (k, t) in times.iter().enumerate() {
                    let npts = s_grid.len();
                    let mut text = format!(
                        "# observable {}\n# time {:.12e}\n# grid {:.12e} {:.12e} {}\n# dense matrix: Re and Im blocks\n",
                        config.kind,
                        t,
                        s_grid[0],
                        s_grid[npts - 1],
                        npts
                    );
                    for part in 0..2 {
                        for i_row in 0..npts {
                            let row: Vec<String> = (0..npts)
                                .map(|j| {
                                    let v = matrices[k][i_row * npts + j];
                                    format!("{:.9e}", if part == 0 { v.re } else { v.im })
                                })
                                .collect();
                            text.push_str(&row.join(","));
                            text.push('\n');
                        }
                    }
                    std::fs::write(
                        out_dir.join(format!("{}_{i:02}_t{k:02}.csv", config.kind)),
                        text,
                    )?;
                }
            }
        }
    }
    let manifest = format!(
        "[run]\nseed = {}\ntrajectories = {}\nthreads = {}\nwall_time_seconds = {:.3}\n\n\
         [stats]\ntotal_jumps = {}\nmean_jumps_per_trajectory = {:.4}\nmh_warnings = {}\n\n\
         [fingerprints]\nrate_table = \"{}\"\n\n[config_echo]\ntoml = '''\n{}'''\n",
        cfg.run.seed,
        cfg.run.trajectories,
        cfg.run.threads,
        out.wall_seconds,
        out.total_jumps,
        out.total_jumps as f64 / cfg.run.trajectories as f64,
        out.mh_warnings,
        out.rate_fingerprint,
        cfg.to_toml(),
    );
    std::fs::write(out_dir.join("manifest.toml"), manifest)?;
    Ok(out)
}

/// Convenience: the hard-sphere low-energy rate Γ₀ = 4π n v_β R².
pub fn gamma0(env: &GasEnvironment, radius: f64) -> f64 {
    4.0 * std::f64::consts::PI * env.n_gas * env.v_beta * radius * radius
}

/// Dump reference-module curves for the configured scenario.
pub fn write_oracle_curves(cfg: &RunConfig) -> anyhow::Result<()> {
    use qlbe_core::reference as refr;
    let env = build_environment(cfg)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)?;
    let cache_dir = cfg
        .output
        .cache_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| out_dir.join("cache"));
    let model = build_model(cfg, &env, Some(&cache_dir))?;
    let quad = refr::LocalizationQuadrature::default();
    let lam_gas = refr::gas_thermal_wavelength(&env);

    // Localization rate F(x) over a few thermal wavelengths.
    let mut text = String::from("# localization rate: columns x_over_gas_lambda,F\n");
    for i in 0..=60 {
        let x = lam_gas * 3.0 * i as f64 / 60.0;
        let f = refr::localization_rate_analytic(x, &env, &model, &quad)?;
        text.push_str(&format!("{:.9e},{:.9e}\n", x / lam_gas, f));
    }
    let geff = refr::effective_rate_quadrature(&env, &model, &quad);
    text.push_str(&format!("# gamma_eff {geff:.9e}\n"));
    std::fs::write(out_dir.join("oracle_localization.csv"), text)?;

    // Relaxation rate and the Caldeira-Leggett curve for the configured run.
    let gamma = qlbe_core::rates::relaxation_rate(
        &env,
        &model,
        &qlbe_core::rates::RelaxationQuadrature::default(),
    )?;
    let u0sq = cfg
        .initial
        .u0
        .map(|u| u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
        .unwrap_or(0.0);
    let mut text = String::from("# Caldeira-Leggett energy relaxation: columns t,u_sq\n");
    text.push_str(&format!("# gamma {gamma:.9e}\n"));
    for i in 0..=100 {
        let t = cfg.run.t_final * i as f64 / 100.0;
        text.push_str(&format!(
            "{:.9e},{:.9e}\n",
            t,
            refr::cl_energy_relaxation(t, u0sq, &env, gamma)
        ));
    }
    std::fs::write(out_dir.join("oracle_relaxation.csv"), text)?;
    Ok(())
}

/// The ladder state and wall-time measurement used by the scaling harness:
/// runs `trajectories` ladder-state trajectories at branch count `n` and
/// returns the elapsed seconds.
pub fn scaling_sample(
    n: usize,
    trajectories: usize,
    env: &GasEnvironment,
    model: &ScatteringModel,
    table: &RateTable,
    t_final: f64,
    seed: u64,
) -> anyhow::Result<f64> {
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let initial = TrajectoryState::new(
        vec![amp; n],
        (1..=n).map(|i| Vector3::new(0.0, 0.0, i as f64)).collect(),
    )?;
    let mh = MhSettings::default();
    let start = Instant::now();
    let mut sink = 0usize;
    for idx in 0..trajectories {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64 + 1);
        let (snaps, stats) =
            evolve_trajectory(&initial, t_final, &[t_final], env, model, table, &mh, &mut rng, false)?;
        sink += stats.jumps + snaps.len();
    }
    std::hint::black_box(sink);
    Ok(start.elapsed().as_secs_f64())
}
