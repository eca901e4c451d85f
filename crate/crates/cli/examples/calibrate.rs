use qlbe_cli::config::RunConfig;
use qlbe_cli::runner::{self, ObsResult};

fn main() {
    let mut cfg = RunConfig::from_toml(qlbe_cli::presets::preset("fig6_interference").unwrap()).unwrap();
    cfg.run.trajectories = 8;
    cfg.output.cache_dir = Some("/tmp/qlbe_cache2".into());
    cfg.output.dir = "/tmp/cal_f6free".into();
    cfg.environment.preset = None;
    cfg.environment.m = Some(0.01);
    cfg.environment.m_test = Some(1.0);
    cfg.environment.kt = Some(1.0);
    cfg.environment.n_gas = Some(1e-12);
    cfg.environment.hbar = Some(1.0);
    cfg.initial.u_db = Some(0.9e12);
    let out = runner::run(&cfg).unwrap();
    for r in &out.results {
        if let ObsResult::GridSeries { config, s_grid, values, .. } = r {
            if config.kind == "density_diagonal" {
                let d = &values[2];
                let dmax = d.iter().cloned().fold(0.0, f64::max);
                let mut mins = vec![];
                for i in 1..d.len() - 1 {
                    if d[i] < d[i - 1] && d[i] < d[i + 1] && d[i] < 0.5 * dmax && s_grid[i].abs() < 0.3 {
                        mins.push(s_grid[i]);
                    }
                }
                let gaps: Vec<f64> = mins.windows(2).map(|w| w[1] - w[0]).collect();
                println!("free t2 minima: {mins:?}");
                println!("gaps: {gaps:?}");
            }
        }
    }
}
