//! Precomputed, branch-continuous phase shifts on a momentum grid.
//!
//! Principal values only determine δ_l modulo π. The table unwraps each l
//! along descending p, anchored at the high-momentum end where the true phase
//! tends to zero; the Levinson integers n_l = δ_l(p→0)/π then emerge at the
//! bottom of the grid instead of being assumed.

use rayon::prelude::*;

use crate::numerics::MonotoneCubic;
use crate::{Error, Result};

use super::radial::{phase_shifts, RadialSolverOptions};

#[derive(Debug, Clone)]
pub struct PhaseShiftTable {
    pub l_max: usize,
    /// Ascending, strictly positive momentum grid.
    pub p_grid: Vec<f64>,
    /// delta[l][ip], branch-continuous in p.
    pub delta: Vec<Vec<f64>>,
    pub hbar: f64,
    interpolants: Vec<MonotoneCubic>,
    /// Low-momentum limits δ_l(p→0) = n_l π (Levinson).
    levinson: Vec<i64>,
    /// Scattering lengths a_l from δ_l ≈ n_l π − a_l (p/ħ)^{2l+1} at p_min.
    scattering_lengths: Vec<f64>,
}

impl PhaseShiftTable {
    /// Solve the radial problem of the attractive Gaussian well
    /// V(r) = −v0 exp(−r²/2d²) on a momentum grid and unwrap the branches.
    pub fn gaussian_well(
        v0: f64,
        d: f64,
        m_star: f64,
        hbar: f64,
        l_max: usize,
        p_grid: Vec<f64>,
        opts: &RadialSolverOptions,
    ) -> Result<Self> {
        if p_grid.len() < 4 || p_grid.windows(2).any(|w| w[1] <= w[0]) || p_grid[0] <= 0.0 {
            return Err(Error::Parameter {
                name: "p_grid",
                requirement: "ascending, positive, at least 4 points",
                value: p_grid.first().copied().unwrap_or(f64::NAN),
            });
        }
        let principal: Vec<Vec<f64>> = p_grid
            .par_iter()
            .map(|&p| phase_shifts(v0, d, m_star, p, l_max, hbar, opts))
            .collect::<Result<_>>()?;
        // Transpose to delta[l][ip] and unwrap from the top of the grid.
        let mut delta = vec![vec![0.0; p_grid.len()]; l_max + 1];
        for l in 0..=l_max {
            let n = p_grid.len();
            delta[l][n - 1] = principal[n - 1][l];
            for ip in (0..n - 1).rev() {
                let prev = delta[l][ip + 1];
                let raw = principal[ip][l];
                let shift = ((prev - raw) / std::f64::consts::PI).round();
                delta[l][ip] = raw + shift * std::f64::consts::PI;
            }
        }
        Self::assemble(l_max, p_grid, delta, hbar)
    }

    /// Build the derived data (interpolants, Levinson integers, scattering
    /// lengths) and check branch continuity.
    fn assemble(l_max: usize, p_grid: Vec<f64>, delta: Vec<Vec<f64>>, hbar: f64) -> Result<Self> {
        for (l, dl) in delta.iter().enumerate() {
            for (ip, w) in dl.windows(2).enumerate() {
                if (w[1] - w[0]).abs() > std::f64::consts::FRAC_PI_2 {
                    return Err(Error::Numerical {
                        what: "phase-shift branch continuity",
                        diagnostics: format!(
                            "δ_{l} jumps by {:.3} rad between p = {} and p = {}; refine the p grid",
                            (w[1] - w[0]).abs(),
                            p_grid[ip],
                            p_grid[ip + 1]
                        ),
                    });
                }
            }
        }
        let interpolants: Vec<MonotoneCubic> =
            delta.iter().map(|dl| MonotoneCubic::new(&p_grid, dl)).collect();
        let levinson: Vec<i64> = delta
            .iter()
            .map(|dl| (dl[0] / std::f64::consts::PI).round() as i64)
            .collect();
        let k_min = p_grid[0] / hbar;
        let scattering_lengths: Vec<f64> = delta
            .iter()
            .enumerate()
            .map(|(l, dl)| {
                let n_pi = levinson[l] as f64 * std::f64::consts::PI;
                (n_pi - dl[0]) / k_min.powi(2 * l as i32 + 1)
            })
            .collect();
        Ok(Self { l_max, p_grid, delta, hbar, interpolants, levinson, scattering_lengths })
    }

    /// Number of bound states with angular momentum l, read off the
    /// low-momentum limit of the unwrapped phase.
    pub fn levinson_integer(&self, l: usize) -> i64 {
        self.levinson[l]
    }

    /// s-wave scattering length a_0 (length units: δ_0 ≈ n_0 π − a_0 p/ħ).
    pub fn scattering_length(&self) -> f64 {
        self.scattering_lengths[0]
    }

    /// Phase shift δ_l at momentum p: monotone-cubic interpolation inside the
    /// grid, the Levinson form n_l π − a_l (p/ħ)^{2l+1} below it, and the
    /// Born-like 1/p tail δ(p_max) p_max / p above it.
    pub fn phase(&self, l: usize, p: f64) -> f64 {
        let p_min = self.p_grid[0];
        let p_max = *self.p_grid.last().unwrap();
        if p < p_min {
            let n_pi = self.levinson[l] as f64 * std::f64::consts::PI;
            return n_pi - self.scattering_lengths[l] * (p / self.hbar).powi(2 * l as i32 + 1);
        }
        if p > p_max {
            return self.delta[l].last().unwrap() * p_max / p;
        }
        self.interpolants[l].eval(p)
    }

    /// All phases at momentum p.
    pub fn phases(&self, p: f64) -> Vec<f64> {
        (0..=self.l_max).map(|l| self.phase(l, p)).collect()
    }

    /// Serialize to columnar text: header with l_max and grid size, one row
    /// per momentum with δ_0..δ_lmax.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# phase-shift table\n");
        s.push_str(&format!("# l_max {}\n", self.l_max));
        s.push_str(&format!("# hbar {:.17e}\n", self.hbar));
        s.push_str(&format!("# rows {}\n", self.p_grid.len()));
        s.push_str("# columns: p delta_0..delta_lmax\n");
        for (ip, &p) in self.p_grid.iter().enumerate() {
            s.push_str(&format!("{:.17e}", p));
            for l in 0..=self.l_max {
                s.push_str(&format!(" {:.17e}", self.delta[l][ip]));
            }
            s.push('\n');
        }
        s
    }

    /// Parse the format written by [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut l_max = None;
        let mut hbar = 1.0;
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match it.next() {
                    Some("l_max") => {
                        l_max = it.next().and_then(|v| v.parse::<usize>().ok());
                    }
                    Some("hbar") => {
                        hbar = it
                            .next()
                            .and_then(|v| v.parse::<f64>().ok())
                            .ok_or_else(|| Error::Parse("bad hbar header".into()))?;
                    }
                    _ => {}
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{e}: `{v}`"))))
                .collect::<Result<_>>()?;
            rows.push(vals);
        }
        let l_max = l_max.ok_or_else(|| Error::Parse("missing l_max header".into()))?;
        let mut p_grid = Vec::with_capacity(rows.len());
        let mut delta = vec![Vec::with_capacity(rows.len()); l_max + 1];
        for row in rows {
            if row.len() != l_max + 2 {
                return Err(Error::Parse(format!(
                    "row has {} columns, expected {}",
                    row.len(),
                    l_max + 2
                )));
            }
            p_grid.push(row[0]);
            for l in 0..=l_max {
                delta[l].push(row[l + 1]);
            }
        }
        Self::assemble(l_max, p_grid, delta, hbar)
    }
}

/// Geometric momentum grid from p_min to p_max with n points, denser toward
/// the low end where the phases vary fastest.
pub fn geometric_grid(p_min: f64, p_max: f64, n: usize) -> Vec<f64> {
    assert!(p_min > 0.0 && p_max > p_min && n >= 2);
    let ratio = (p_max / p_min).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| p_min * ratio.powi(i as i32)).collect()
}
