//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured numbers before asserting.
//!
//! Tests share a persistent table cache and run serially (a few are
//! timing-sensitive); `cargo test --release -p qlbe-cli --test acceptance`
//! runs the whole gate in minutes.

use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qlbe_cli::config::RunConfig;
use qlbe_cli::runner::{self, ObsResult};
use qlbe_core::engine::{
    deterministic_step, evolve_trajectory, sample_jump_momenta, sample_waiting_time, MhSettings,
    TrajectoryState, WaitingTime,
};
use qlbe_core::numerics::{
    gauss_legendre_on, ks_test_cdf, ks_test_two_sample, linear_fit, mean_stderr,
};
use qlbe_core::rates::{
    build_rate_table, jump_rate, relaxation_rate, RelaxationQuadrature,
};
use qlbe_core::reference as refr;
use qlbe_core::scattering::{
    geometric_grid, partial_wave_amplitude, PhaseShiftTable, RadialSolverOptions, ScatteringModel,
};
use qlbe_core::units::GasEnvironment;

fn lock() -> MutexGuard<'static, ()> {
    static GATE: OnceLock<Mutex<()>> = OnceLock::new();
    GATE.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
}

fn cache_dir() -> PathBuf {
    let dir = std::env::temp_dir().join("qlbe_acceptance_cache");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn out_dir(name: &str) -> String {
    let dir = std::env::temp_dir().join("qlbe_acceptance_out").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir.to_str().unwrap().to_string()
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Log-linear decay-rate fit of a coherence-like series over values ≥ floor.
fn fit_log_slope(times: &[f64], values: &[f64], floor: f64) -> f64 {
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if v > floor {
            ts.push(t);
            logs.push(v.ln());
        }
    }
    assert!(ts.len() >= 4, "too few points above the fit floor");
    let (_, slope, _, _) = linear_fit(&ts, &logs);
    -slope
}

/// Decay rate of the coherence series of `cfg`, averaged over independent
/// batches (one run per seed); the error comes from the batch scatter, which
/// honestly reflects the trajectory-correlated fit noise.
fn batched_coherence_rate(cfg: &RunConfig, seeds: &[u64], floor: f64) -> (f64, f64) {
    let mut rates = Vec::new();
    for &seed in seeds {
        let mut c = cfg.clone();
        c.run.seed = seed;
        let out = runner::run(&c).unwrap();
        let ObsResult::Series { series, .. } = &out.results[0] else { panic!() };
        rates.push(fit_log_slope(&series.times, &series.values, floor));
    }
    mean_stderr(&rates)
}

#[test]
fn criterion_01_levinson_integers() {
    let _g = lock();
    let table = PhaseShiftTable::gaussian_well(
        20.0,
        1.0,
        0.5,
        1.0,
        3,
        geometric_grid(0.05, 25.0, 80),
        &RadialSolverOptions::default(),
    )
    .unwrap();
    let got: Vec<i64> = (0..=3).map(|l| table.levinson_integer(l)).collect();
    let ok = got == vec![2, 2, 1, 0];
    println!("criterion 01 (Levinson integers): {} — δ_l(p_min)/π = {:?}, expected [2, 2, 1, 0]", status(ok), got);
    assert!(ok);
}

#[test]
fn criterion_02_optical_theorem() {
    let _g = lock();
    let env = GasEnvironment::gaussian_units(1.0).unwrap();
    let mut worst: f64 = 0.0;
    for v0 in [1.0, 20.0] {
        let model = ScatteringModel::gaussian_exact(
            v0,
            1.0,
            &env,
            30,
            geometric_grid(0.05, 25.0, 120),
            &RadialSolverOptions::default(),
        )
        .unwrap();
        let ScatteringModel::PartialWave { table } = &model else { unreachable!() };
        let rule = gauss_legendre_on(2 * (table.l_max + 1), -1.0, 1.0);
        for &p in &geometric_grid(0.06, 24.0, 20) {
            let sigma: f64 = rule
                .iter()
                .map(|&(c, w)| {
                    w * partial_wave_amplitude(table, p, c).norm_sqr() * 2.0 * std::f64::consts::PI
                })
                .sum();
            let im_f0 = partial_wave_amplitude(table, p, 1.0).im;
            let residual = (im_f0 - p * sigma / (4.0 * std::f64::consts::PI)).abs() / im_f0.abs();
            worst = worst.max(residual);
        }
    }
    let ok = worst < 1e-6;
    println!(
        "criterion 02 (optical theorem): {} — worst relative residual {worst:.2e} over V0 ∈ {{1, 20}}, 20-point p grid (tolerance 1e-6)",
        status(ok)
    );
    assert!(ok);
}

#[test]
fn criterion_03_rate_saturation() {
    let _g = lock();
    let env = GasEnvironment::hard_sphere_units(1.0).unwrap();
    let model = ScatteringModel::hard_sphere(1.0);
    let mut rng = ChaCha12Rng::seed_from_u64(314);
    let (est, se) = jump_rate(&Vector3::zeros(), &env, &model, 10_000, &mut rng).unwrap();
    let gamma0 = 4.0 * std::f64::consts::PI * env.n_gas * env.v_beta;
    let gamma_eff = 2.0 / std::f64::consts::PI.sqrt() * gamma0;
    let dev = (est - gamma0).abs();
    let ok = dev <= 3.0 * se;
    println!(
        "criterion 03 (Γ(U→0) saturation at Γ0): {} — Γ(0) = {est:.3} ± {se:.3} vs Γ0 = {gamma0:.3} ({:.1}σ away); \
         the exact saturation value is the thermally averaged rate Γ_eff = (2/√π)Γ0 = {gamma_eff:.3} ({:.1}σ away)",
        status(ok),
        dev / se,
        (est - gamma_eff).abs() / se
    );
    assert!(
        ok,
        "Γ(U→0) = {est:.4} ± {se:.4} is {:.1}σ from Γ0 = {gamma0:.4}; the analytic J saturation value is Γ_eff = (2/√π)Γ0 = {gamma_eff:.4}",
        dev / se
    );
}

#[test]
fn criterion_04_momentum_decoherence_rate() {
    let _g = lock();
    // Two-eigenstate superposition, hard sphere. U0 is free as long as Γ(U0)
    // is tabulated; at supra-thermal U0 every collision resolves the branches
    // and the trajectory-coherence estimator decays at Γ(U0). Four
    // independent 2e3-trajectory batches control the fit noise.
    let u0 = 16.0;
    let toml = format!(
        r#"
[environment]
preset = "hard_sphere"
mass_ratio = 1.0
[model]
kind = "hard_sphere"
radius = 1.0
[initial]
kind = "two_eigenstate"
u0 = [{u0}, 0.0, 0.0]
[run]
trajectories = 2000
t_final = 0.0076
n_snapshots = 15
seed = 46
threads = 0
[rates]
u_max = 20.0
n_grid = 28
n_samples = 40000
[[observables]]
kind = "coherence"
[output]
dir = "{}"
cache_dir = "{}"
"#,
        out_dir("crit04"),
        cache_dir().display()
    );
    let cfg = RunConfig::from_toml(&toml).unwrap();
    let env = runner::build_environment(&cfg).unwrap();
    let model = runner::build_model(&cfg, &env, Some(&cache_dir())).unwrap();
    let table = runner::build_table(&cfg, &env, &model, Some(&cache_dir())).unwrap();
    let gamma_u0 = table.value(u0);
    let (rate, se) = batched_coherence_rate(&cfg, &[46, 47, 48, 49], 0.15);
    let dev = (rate - gamma_u0).abs() / gamma_u0;
    let ok = dev < 0.05;
    println!(
        "criterion 04 (momentum decoherence rate): {} — fitted {rate:.2} ± {se:.2} vs tabulated Γ({u0}) = {gamma_u0:.2}, deviation {:.2}% (tolerance 5%)",
        status(ok),
        dev * 100.0
    );
    assert!(ok);
}

#[test]
fn criterion_05_exact_vs_born_divergence() {
    let _g = lock();
    let run_one = |v0: f64, kind: &str| -> (f64, f64) {
        let toml = format!(
            r#"
[environment]
preset = "gaussian"
mass_ratio = 1.0
[model]
kind = "{kind}"
v0 = {v0}
d = 1.0
l_max = 30
[initial]
kind = "two_eigenstate"
u0 = [2.449489742783178, 0.0, 0.0]
[run]
trajectories = 2000
t_final = 0.1
n_snapshots = 15
seed = 52
threads = 0
[rates]
u_max = 8.0
n_grid = 24
n_samples = 40000
[[observables]]
kind = "coherence"
[output]
dir = "{}"
cache_dir = "{}"
"#,
            out_dir("crit05"),
            cache_dir().display()
        );
        let mut cfg = RunConfig::from_toml(&toml).unwrap();
        let env = runner::build_environment(&cfg).unwrap();
        let model = runner::build_model(&cfg, &env, Some(&cache_dir())).unwrap();
        let table = runner::build_table(&cfg, &env, &model, Some(&cache_dir())).unwrap();
        cfg.run.t_final = 2.0 / table.value(2.449489742783178);
        batched_coherence_rate(&cfg, &[52, 53, 54, 55], 0.15)
    };
    let (weak_exact, se_we) = run_one(1.0, "gaussian_exact");
    let (weak_born, se_wb) = run_one(1.0, "gaussian_born");
    let (strong_exact, se_se) = run_one(20.0, "gaussian_exact");
    let (strong_born, se_sb) = run_one(20.0, "gaussian_born");
    let weak_gap = (weak_exact - weak_born).abs();
    let weak_comb = (se_we * se_we + se_wb * se_wb).sqrt();
    let strong_gap = (strong_exact - strong_born).abs();
    let strong_comb = (se_se * se_se + se_sb * se_sb).sqrt();
    let ok_weak = weak_gap <= 3.0 * weak_comb;
    let ok_strong = strong_gap > 3.0 * strong_comb;
    println!(
        "criterion 05 (exact vs Born decoherence): {} — V0=1: exact {weak_exact:.2} ± {se_we:.2} vs Born {weak_born:.2} ± {se_wb:.2} ({:.1}σ apart, must agree within 3σ); \
         V0=20: exact {strong_exact:.1} ± {se_se:.1} vs Born {strong_born:.1} ± {se_sb:.1} ({:.0}σ apart, must differ by >3σ)",
        status(ok_weak && ok_strong),
        weak_gap / weak_comb,
        strong_gap / strong_comb
    );
    assert!(ok_strong, "V0=20 rates must differ by more than 3 combined errors");
    assert!(ok_weak, "V0=1 rates must agree within 3 combined errors");
}

#[test]
fn criterion_06_localization_rate() {
    let _g = lock();
    let quad = refr::LocalizationQuadrature::default();
    let base = format!(
        r#"
[environment]
preset = "gaussian"
mass_ratio = 100.0
[model]
kind = "gaussian_exact"
v0 = 1.0
d = 1.0
l_max = 30
[initial]
kind = "double_gaussian"
n = 55
center_s = 1.0
sigma_s = 2.0
[run]
trajectories = 10000
t_final = 0.0757
n_snapshots = 13
seed = 48
threads = 0
[rates]
u_max = 4.0
n_grid = 24
n_samples = 40000
[[observables]]
kind = "off_diagonal"
s1 = 1.0
s2 = -1.0
[output]
dir = "{}"
cache_dir = "{}"
"#,
        out_dir("crit06"),
        cache_dir().display()
    );
    let probe = RunConfig::from_toml(&base).unwrap();
    let env = runner::build_environment(&probe).unwrap();
    let model = runner::build_model(&probe, &env, Some(&cache_dir())).unwrap();
    let lam_gas = refr::gas_thermal_wavelength(&env);
    let geff = refr::effective_rate_quadrature(&env, &model, &quad);
    let window = (0.1 / geff, 1.0 / geff);
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut f_last = 0.0;
    let separations = [0.4, 0.8, 1.2, 1.8, 2.5]; // units of the gas thermal wavelength
    for &x_gas in &separations {
        let center = 5.0 * x_gas; // packet centers ±x/2 in test-particle Λ_th units
        let mut cfg = RunConfig::from_toml(&base).unwrap();
        cfg.initial.center_s = Some(center);
        cfg.observables[0].s1 = Some(center);
        cfg.observables[0].s2 = Some(-center);
        let out = runner::run(&cfg).unwrap();
        let ObsResult::Series { series, .. } = &out.results[0] else { panic!() };
        let fit = qlbe_core::observables::extract_localization_rate(
            &series.times,
            &series.values,
            window,
        )
        .unwrap();
        let oracle = refr::localization_rate_analytic(x_gas * lam_gas, &env, &model, &quad).unwrap();
        let dev = (fit.rate / oracle - 1.0).abs();
        all_ok &= dev <= 0.10;
        f_last = fit.rate;
        lines.push(format!("x = {x_gas:.1}: F_sim = {:.2}, F_oracle = {oracle:.2} ({:+.1}%)", fit.rate, (fit.rate / oracle - 1.0) * 100.0));
    }
    let sat_dev = (f_last / geff - 1.0).abs();
    let ok = all_ok && sat_dev <= 0.10;
    println!(
        "criterion 06 (localization rate vs pure-decoherence oracle): {} — {}; saturation F(2.5Λ_gas) = {f_last:.2} vs Γ_eff = {geff:.2} ({:+.1}%), tolerance 10%",
        status(ok),
        lines.join("; "),
        sat_dev * 100.0
    );
    assert!(ok);
}

#[test]
fn criterion_07_interference_visibility() {
    let _g = lock();
    let mut cfg = RunConfig::from_toml(qlbe_cli::presets::preset("fig6_interference").unwrap()).unwrap();
    cfg.output.dir = out_dir("crit07");
    cfg.output.cache_dir = Some(cache_dir().display().to_string());
    let env = runner::build_environment(&cfg).unwrap();
    let gamma0 = runner::gamma0(&env, 1.0);
    let out = runner::run(&cfg).unwrap();
    let mut v_sim = f64::NAN;
    for r in &out.results {
        if let ObsResult::Series { config, series } = r {
            if config.kind == "visibility" {
                v_sim = *series.values.last().unwrap();
            }
        }
    }
    // Reference prediction with the recorded (dimensionally consistent)
    // integrand variant: the plain time integral of the instantaneous rate.
    let model = runner::build_model(&cfg, &env, Some(&cache_dir())).unwrap();
    let lam_db = 0.025 * env.lambda_th;
    let kin = refr::PacketKinematics {
        separation0: 30.0 * lam_db,
        closing_speed: 1.8 * lam_db * gamma0,
    };
    let quad = refr::LocalizationQuadrature::default();
    let rate = |x: f64| refr::localization_rate_analytic(x, &env, &model, &quad).unwrap();
    let t2 = cfg.run.t_final;
    let v_plain = refr::predicted_visibility(t2, &kin, &rate, refr::VisibilityIntegrand::Plain);
    let v_weighted = refr::predicted_visibility(t2, &kin, &rate, refr::VisibilityIntegrand::TimeWeighted { time_unit: 1.0 / gamma0 });
    let ok_sim = (v_sim - 0.55).abs() <= 0.05;
    let ok_ref = (v_plain - 0.56).abs() <= 0.02;
    println!(
        "criterion 07 (fringe visibility at Γ0t = 18): {} — simulated V = {v_sim:.3} (target 0.55 ± 0.05); \
         reference prediction (plain integrand, recorded variant) = {v_plain:.3} (target 0.56 ± 0.02); \
         time-weighted variant = {v_weighted:.3}; neither variant reproduces ≈0.56 for these presets",
        status(ok_sim && ok_ref)
    );
    assert!(ok_sim, "simulated visibility {v_sim:.3} outside 0.55 ± 0.05");
    assert!(ok_ref, "reference visibility {v_plain:.3} outside 0.56 ± 0.02");
}


#[test]
fn criterion_08_thermalization() {
    let _g = lock();
    // (a) m = M: equilibrium 3/2.
    let toml_equal = format!(
        r#"
[environment]
preset = "gaussian"
mass_ratio = 1.0
[model]
kind = "gaussian_exact"
v0 = 1.0
d = 1.0
l_max = 30
[initial]
kind = "eigenstate"
u0 = [0.0, 0.0, 2.449489742783178]
[run]
trajectories = 2000
t_final = 2.0
n_snapshots = 9
seed = 60
threads = 0
[rates]
u_max = 8.0
n_grid = 24
n_samples = 40000
[[observables]]
kind = "mean_square_momentum"
[output]
dir = "{}"
cache_dir = "{}"
"#,
        out_dir("crit08a"),
        cache_dir().display()
    );
    let cfg = RunConfig::from_toml(&toml_equal).unwrap();
    let env = runner::build_environment(&cfg).unwrap();
    let model = runner::build_model(&cfg, &env, Some(&cache_dir())).unwrap();
    let gamma_equal = relaxation_rate(&env, &model, &RelaxationQuadrature::default()).unwrap();
    let mut cfg = cfg;
    cfg.run.t_final = 5.0 / (4.0 * gamma_equal);
    let out = runner::run(&cfg).unwrap();
    let ObsResult::Series { series, .. } = &out.results[0] else { panic!() };
    let (u2_end, se_end) = (*series.values.last().unwrap(), *series.stderr.last().unwrap());
    let ok_equal = (u2_end - 1.5).abs() <= 3.0 * se_end;

    // (b) M/m = 10: equilibrium 3/20 and the Caldeira-Leggett transient.
    let toml_heavy = format!(
        r#"
[environment]
preset = "gaussian"
mass_ratio = 10.0
[model]
kind = "gaussian_exact"
v0 = 1.0
d = 1.0
l_max = 30
[initial]
kind = "eigenstate"
u0 = [0.0, 0.0, 0.7745966692414834]
[run]
trajectories = 2000
t_final = 15.0
n_snapshots = 13
seed = 61
threads = 0
[rates]
u_max = 6.0
n_grid = 24
n_samples = 40000
[[observables]]
kind = "mean_square_momentum"
[output]
dir = "{}"
cache_dir = "{}"
"#,
        out_dir("crit08b"),
        cache_dir().display()
    );
    let cfg = RunConfig::from_toml(&toml_heavy).unwrap();
    let env = runner::build_environment(&cfg).unwrap();
    let model = runner::build_model(&cfg, &env, Some(&cache_dir())).unwrap();
    let gamma = relaxation_rate(&env, &model, &RelaxationQuadrature::default()).unwrap();
    let out = runner::run(&cfg).unwrap();
    let ObsResult::Series { series, .. } = &out.results[0] else { panic!() };
    let mut worst_sigma: f64 = 0.0;
    for i in 0..series.times.len() {
        let cl = refr::cl_energy_relaxation(series.times[i], 0.6, &env, gamma);
        let dev = (series.values[i] - cl).abs() / series.stderr[i].max(1e-12);
        worst_sigma = worst_sigma.max(dev);
    }
    let (u2_heavy, se_heavy) = (*series.values.last().unwrap(), *series.stderr.last().unwrap());
    let ok_heavy_eq = (u2_heavy - 0.15).abs() <= 3.0 * se_heavy;
    let ok_transient = worst_sigma <= 3.0;
    let ok = ok_equal && ok_heavy_eq && ok_transient;
    println!(
        "criterion 08 (thermalization): {} — m=M: ⟨U²⟩(t≫1/γ) = {u2_end:.3} ± {se_end:.3} vs 3/2; \
         M/m=10: ⟨U²⟩ = {u2_heavy:.4} ± {se_heavy:.4} vs 3/20; transient vs Caldeira-Leggett (γ = {gamma:.4}): worst deviation {worst_sigma:.1}σ (3σ bands)",
        status(ok)
    );
    assert!(ok_equal, "equal-mass equilibrium missed: {u2_end} ± {se_end}");
    assert!(ok_heavy_eq, "M/m=10 equilibrium missed: {u2_heavy} ± {se_heavy}");
    assert!(ok_transient, "transient leaves the 3σ band: {worst_sigma:.1}σ");
}

#[test]
fn criterion_09_relaxation_rate_formula() {
    let _g = lock();
    let env = GasEnvironment::hard_sphere_units(100.0).unwrap();
    let model = ScatteringModel::hard_sphere(1.0);
    let gamma = relaxation_rate(&env, &model, &RelaxationQuadrature::default()).unwrap();
    let gamma0 = 4.0 * std::f64::consts::PI * env.n_gas * env.v_beta;
    let exact = 4.0 / (3.0 * std::f64::consts::PI.sqrt()) * (env.m / env.M) * gamma0;
    let dev = (gamma / exact - 1.0).abs();
    let ok = dev < 0.005;
    println!(
        "criterion 09 (relaxation-rate formula): {} — quadrature γ = {gamma:.8} vs (4/3√π)(m/M)Γ0 = {exact:.8}, deviation {:.2e} (tolerance 0.5%)",
        status(ok),
        dev
    );
    assert!(ok);
}

#[test]
fn criterion_10_diffusion() {
    let _g = lock();
    let mut cfg = RunConfig::from_toml(qlbe_cli::presets::preset("fig8_diffusion").unwrap()).unwrap();
    cfg.output.dir = out_dir("crit10");
    cfg.output.cache_dir = Some(cache_dir().display().to_string());
    let env = runner::build_environment(&cfg).unwrap();
    let gamma0 = runner::gamma0(&env, 1.0);
    let gamma = 4.0 / (3.0 * std::f64::consts::PI.sqrt()) * (env.m / env.M) * gamma0;
    let out = runner::run(&cfg).unwrap();
    let ObsResult::Series { series, .. } = &out.results[0] else { panic!() };
    // Late-time window Γ0 t ∈ [400, 1000]; variance is in Λ_th² units, so
    // convert the fitted slope back to physical units.
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for i in 0..series.times.len() {
        let scaled = series.times[i] * gamma0;
        if (400.0..=1000.0).contains(&scaled) {
            ts.push(series.times[i]);
            vs.push(series.values[i]);
        }
    }
    let (_, slope_scaled, _, _) = linear_fit(&ts, &vs);
    let slope_phys = slope_scaled * env.lambda_th * env.lambda_th;
    let kramers = 1.0 / (env.beta() * env.M * gamma);
    let dev = (slope_phys / kramers - 1.0).abs();
    let ok_slope = dev <= 0.15;

    // Zero-gas control: parabolic dispersion within grid error.
    let mut free = cfg.clone();
    free.environment.preset = None;
    free.environment.m = Some(env.m);
    free.environment.m_test = Some(env.M);
    free.environment.kt = Some(env.kt);
    free.environment.n_gas = Some(1e-12);
    free.environment.hbar = Some(env.hbar);
    free.run.trajectories = 64;
    free.run.t_final = 2.0;
    free.run.n_snapshots = Some(8);
    free.run.snapshots = vec![];
    free.observables[0].s_min = Some(-4.5);
    free.observables[0].s_max = Some(4.5);
    free.output.dir = out_dir("crit10_free");
    let out_free = runner::run(&free).unwrap();
    let ObsResult::Series { series: fs, .. } = &out_free.results[0] else { panic!() };
    let sigma0_sq_phys = (0.4 * env.lambda_th).powi(2);
    let mut worst_free: f64 = 0.0;
    for i in 0..fs.times.len() {
        let expect =
            refr::free_dispersion_variance(fs.times[i], sigma0_sq_phys, env.M, env.hbar)
                / (env.lambda_th * env.lambda_th);
        worst_free = worst_free.max((fs.values[i] / expect - 1.0).abs());
    }
    let ok_free = worst_free <= 0.02;
    let ok = ok_slope && ok_free;
    println!(
        "criterion 10 (diffusion): {} — late-time variance slope {slope_phys:.4} vs Kramers (βMγ)⁻¹ = {kramers:.4} ({:+.1}%, tolerance 15%); \
         zero-gas dispersion control within {:.2}% of the parabolic law (tolerance 2%)",
        status(ok),
        (slope_phys / kramers - 1.0) * 100.0,
        worst_free * 100.0
    );
    assert!(ok_slope, "diffusion slope off by {:.1}%", dev * 100.0);
    assert!(ok_free, "free dispersion off by {:.1}%", worst_free * 100.0);
}

#[test]
fn criterion_11_scaling() {
    let _g = lock();
    let env = GasEnvironment::hard_sphere_units(1.0).unwrap();
    let model = ScatteringModel::hard_sphere(1.0);
    let table = build_rate_table(&env, &model, 1030.0, 40, 20_000, 2024).unwrap();
    let gamma0 = 4.0 * std::f64::consts::PI * env.n_gas * env.v_beta;
    let t_final = 3.0 / gamma0;
    let sizes = [8usize, 16, 32, 64, 128, 256, 512, 1024];
    // Warm up the allocator and caches.
    runner::scaling_sample(8, 20, &env, &model, &table, t_final, 9).unwrap();
    let mut logs_n = Vec::new();
    let mut logs_t = Vec::new();
    let mut report = Vec::new();
    for &n in &sizes {
        let secs = runner::scaling_sample(n, 100, &env, &model, &table, t_final, 9).unwrap();
        logs_n.push((n as f64).ln());
        logs_t.push(secs.ln());
        report.push(format!("N={n}: {:.3}s", secs));
    }
    let (_, slope, _, _) = linear_fit(&logs_n, &logs_t);
    let ok = slope <= 1.3;
    println!(
        "criterion 11 (CPU scaling with branch count): {} — log-log slope {slope:.3} over N = 8..1024 (must be ≤ 1.3); {}",
        status(ok),
        report.join(", ")
    );
    assert!(ok);
}

#[test]
fn criterion_12_determinism() {
    let _g = lock();
    let base = format!(
        r#"
[environment]
preset = "hard_sphere"
mass_ratio = 1.0
[model]
kind = "hard_sphere"
radius = 1.0
[initial]
kind = "two_eigenstate"
u0 = [2.0, 0.0, 0.0]
[run]
trajectories = 256
t_final = 0.02
n_snapshots = 7
seed = 77
threads = 1
[rates]
u_max = 6.0
n_grid = 12
n_samples = 4000
[[observables]]
kind = "coherence"
[[observables]]
kind = "mean_square_momentum"
[output]
dir = "DIR"
cache_dir = "{}"
"#,
        cache_dir().display()
    );
    let d1 = out_dir("crit12_t1");
    let d8 = out_dir("crit12_t8");
    let mut c1 = RunConfig::from_toml(&base.replace("DIR", &d1)).unwrap();
    let mut c8 = RunConfig::from_toml(&base.replace("DIR", &d8)).unwrap();
    c1.run.threads = 1;
    c8.run.threads = 8;
    runner::run_to_files(&c1).unwrap();
    runner::run_to_files(&c8).unwrap();
    let mut identical = true;
    for name in ["coherence_00.csv", "mean_square_momentum_01.csv"] {
        let a = std::fs::read(PathBuf::from(&d1).join(name)).unwrap();
        let b = std::fs::read(PathBuf::from(&d8).join(name)).unwrap();
        identical &= a == b;
    }
    // Manifests agree apart from the wall-time line.
    let strip = |p: &str| -> String {
        std::fs::read_to_string(PathBuf::from(p).join("manifest.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall_time_seconds") && !l.starts_with("threads"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    identical &= strip(&d1) == strip(&d8);
    println!(
        "criterion 12 (determinism across thread counts): {} — observable files byte-identical between threads=1 and threads=8",
        status(identical)
    );
    assert!(identical);
}

#[test]
fn criterion_13_engine_invariants() {
    let _g = lock();
    let env = GasEnvironment::hard_sphere_units(1.0).unwrap();
    let model = ScatteringModel::hard_sphere(1.0);
    let table = build_rate_table(&env, &model, 12.0, 24, 20_000, 4242).unwrap();
    let mh = MhSettings::default();

    // Normalization within 1e-10 after every step and jump; constant branch
    // count.
    let mut worst_norm: f64 = 0.0;
    let mut branch_ok = true;
    for i in 0..50 {
        let mut rng = ChaCha12Rng::seed_from_u64(900 + i);
        let s = TrajectoryState::new(
            vec![Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.6)],
            vec![Vector3::new(1.5, 0.0, 0.0), Vector3::new(-0.5, 1.0, 0.0)],
        )
        .unwrap();
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.002).collect();
        let (snaps, _) = evolve_trajectory(
            &s, 0.078, &times, &env, &model, &table, &mh, &mut rng, false,
        )
        .unwrap();
        for snap in &snaps {
            worst_norm = worst_norm.max((snap.norm_sqr() - 1.0).abs());
            branch_ok &= snap.branch_count() == 2;
        }
    }
    let ok_norm = worst_norm < 1e-10;

    // Exponential waiting times for N = 1 (KS p > 0.01 over 1e4 samples).
    let mut s1 = TrajectoryState::new(
        vec![Complex64::new(1.0, 0.0)],
        vec![Vector3::new(0.0, 0.0, 1.3)],
    )
    .unwrap();
    s1.refresh_rates(&table);
    let g = s1.rates[0];
    let mut rng = ChaCha12Rng::seed_from_u64(5150);
    let mut taus: Vec<f64> = (0..10_000)
        .map(|_| {
            let eta = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
            match sample_waiting_time(&s1, eta, &env).unwrap() {
                WaitingTime::Jump(tau) => tau,
                WaitingTime::Never => panic!(),
            }
        })
        .collect();
    let p_wait = ks_test_cdf(&mut taus, |t| 1.0 - (-g * t).exp());
    let ok_wait = p_wait > 0.01;

    // Jump-momentum marginal at U = 0 against a rejection-sampler oracle,
    // and again at doubled thinning (insensitivity check).
    let mut p_marginal = [0.0; 2];
    for (j, thinning) in [50usize, 100].into_iter().enumerate() {
        let mh_j = MhSettings { thinning, ..MhSettings::default() };
        let mut mh_samples: Vec<f64> = (0..2000)
            .map(|_| {
                sample_jump_momenta(&Vector3::zeros(), &env, &model, &mh_j, &mut rng)
                    .unwrap()
                    .k
                    .norm()
            })
            .collect();
        // Rejection sampler for the analytic marginal ∝ K exp(-K²/4):
        // envelope c λ e^{-λK} with λ = 0.5.
        let lambda = 0.5;
        let c_env = 2.2 * 1.0_f64.exp();
        let mut oracle = Vec::with_capacity(2000);
        while oracle.len() < 2000 {
            let x = -(1.0 - rng.gen::<f64>()).ln() / lambda;
            let target = x * (-x * x / 4.0).exp();
            if rng.gen::<f64>() * c_env * lambda * (-lambda * x).exp() <= target {
                oracle.push(x);
            }
        }
        p_marginal[j] = ks_test_two_sample(&mut mh_samples, &mut oracle);
    }
    let ok_marginal = p_marginal.iter().all(|&p| p > 0.01);

    // The drift is a semigroup: stepping in parts equals one step.
    let mut a = TrajectoryState::new(
        vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
        vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 2.0)],
    )
    .unwrap();
    a.refresh_rates(&table);
    let mut b = a.clone();
    deterministic_step(&mut a, 0.05, &env);
    for _ in 0..5 {
        deterministic_step(&mut b, 0.01, &env);
    }
    let split_dev = a
        .alphas
        .iter()
        .zip(&b.alphas)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0_f64, f64::max);
    let ok_split = split_dev < 1e-12;

    let ok = ok_norm && branch_ok && ok_wait && ok_marginal && ok_split;
    println!(
        "criterion 13 (engine invariants): {} — worst |norm²−1| = {worst_norm:.1e} (limit 1e-10); branch count constant: {branch_ok}; \
         N=1 waiting-time KS p = {p_wait:.3} (>0.01); jump-momentum marginal KS p = {:.3}/{:.3} at thinning 50/100 (>0.01); piecewise drift deviation {split_dev:.1e}",
        status(ok),
        p_marginal[0],
        p_marginal[1]
    );
    assert!(ok);
}
