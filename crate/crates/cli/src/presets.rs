//! Built-in run configurations reproducing the benchmark scenarios at desk
//! scale. Each preset records the original trajectory count alongside the
//! default one (`trajectories` vs `trajectories_paper`).

/// Look up a preset configuration by name.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "fig4_gauss_weak" => Some(FIG4_GAUSS_WEAK),
        "fig4_gauss_strong" => Some(FIG4_GAUSS_STRONG),
        "fig5_locrate" => Some(FIG5_LOCRATE),
        "fig6_interference" => Some(FIG6_INTERFERENCE),
        "fig7_relaxation" => Some(FIG7_RELAXATION),
        "fig8_diffusion" => Some(FIG8_DIFFUSION),
        _ => None,
    }
}

pub fn names() -> &'static [&'static str] {
    &[
        "fig4_gauss_weak",
        "fig4_gauss_strong",
        "fig5_locrate",
        "fig6_interference",
        "fig7_relaxation",
        "fig8_diffusion",
    ]
}

/// Momentum-coherence decay, weak Gaussian potential, exact amplitude,
/// equal masses, U0 = √6.
pub const FIG4_GAUSS_WEAK: &str = r#"
[environment]
preset = "gaussian"
mass_ratio = 1.0

[model]
kind = "gaussian_exact"
v0 = 1.0
d = 1.0
l_max = 30

[initial]
kind = "two_eigenstate"
u0 = [2.449489742783178, 0.0, 0.0]

[run]
trajectories = 2000
trajectories_paper = 5000
t_final = 0.27
n_snapshots = 13
seed = 46
threads = 0

[rates]
u_max = 8.0
n_grid = 24
n_samples = 40000

[[observables]]
kind = "coherence"

[output]
dir = "out/fig4_gauss_weak"
"#;

/// Same scenario with the strong potential V0 = 20.
pub const FIG4_GAUSS_STRONG: &str = r#"
[environment]
preset = "gaussian"
mass_ratio = 1.0

[model]
kind = "gaussian_exact"
v0 = 20.0
d = 1.0
l_max = 30

[initial]
kind = "two_eigenstate"
u0 = [2.449489742783178, 0.0, 0.0]

[run]
trajectories = 2000
trajectories_paper = 5000
t_final = 0.0097
n_snapshots = 13
seed = 47
threads = 0

[rates]
u_max = 8.0
n_grid = 24
n_samples = 40000

[[observables]]
kind = "coherence"

[output]
dir = "out/fig4_gauss_strong"
"#;

/// Localization-rate extraction: heavy test particle (M/m = 100), weak
/// Gaussian potential, resting packet pair. The separation doubles as the
/// probe points of the off-diagonal element.
pub const FIG5_LOCRATE: &str = r#"
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
center_s = 5.0
sigma_s = 2.0

[run]
trajectories = 10000
trajectories_paper = 50000
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
s1 = 5.0
s2 = -5.0

[output]
dir = "out/fig5_locrate"
"#;

/// Interference of counter-propagating packets under hard-sphere scattering,
/// M/m = 100; snapshots at Γ0 t = 0, 9, 18.
pub const FIG6_INTERFERENCE: &str = r#"
[environment]
preset = "hard_sphere"
mass_ratio = 100.0

[model]
kind = "hard_sphere"
radius = 1.0

[initial]
kind = "counter_propagating"
n = 64
lambda_db_over_lambda_th = 0.025
s_db = 15.0
u_db = 0.9
sigma_over_lambda_db = 4.0

[run]
trajectories = 5000
trajectories_paper = 25000
t_final = 0.1012770993188908
snapshots = [0.0, 0.0506385496594454, 0.1012770993188908]
seed = 49
threads = 0

[rates]
u_max = 4.0
n_grid = 24
n_samples = 40000

[[observables]]
kind = "density_diagonal"
s_min = -1.4
s_max = 1.4
n_points = 1024

[[observables]]
kind = "visibility"
s_min = -0.7
s_max = 0.7
n_points = 1024

[output]
dir = "out/fig6_interference"
"#;

/// Energy relaxation toward thermal equilibrium, M/m = 10, weak Gaussian
/// potential, initial eigenstate U0 = √0.6 (⟨U²⟩ → 3/20).
pub const FIG7_RELAXATION: &str = r#"
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
trajectories_paper = 5000
t_final = 15.0
n_snapshots = 13
seed = 50
threads = 0

[rates]
u_max = 6.0
n_grid = 24
n_samples = 40000

[[observables]]
kind = "mean_square_momentum"

[output]
dir = "out/fig7_relaxation"
"#;

/// Diffusion of a localized packet, hard sphere, M/m = 100: quantum
/// dispersion crossing over to normal diffusion. Initial width
/// σ²(0) = 1.6e-3 in gas-thermal-wavelength units (σ_S = 0.4 in test-particle
/// units); runs to Γ0 t = 1000.
pub const FIG8_DIFFUSION: &str = r#"
[environment]
preset = "hard_sphere"
mass_ratio = 100.0

[model]
kind = "hard_sphere"
radius = 1.0

[initial]
kind = "gaussian_packet"
n = 32
center_s = 0.0
sigma_s = 0.4

[run]
trajectories = 2000
trajectories_paper = 4000
t_final = 5.626505517716155
n_snapshots = 15
seed = 51
threads = 0

[rates]
u_max = 4.0
n_grid = 24
n_samples = 40000

[[observables]]
kind = "spatial_variance"
s_min = -7.0
s_max = 7.0
n_points = 280

[output]
dir = "out/fig8_diffusion"
"#;
