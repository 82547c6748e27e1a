use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sim::{simulate_survival, SimConfig};
use crate::error::{invalid, Result};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub i: usize,
    pub j: usize,
    /// s
    pub t_on: f64,
    /// s
    pub t_off: f64,
    pub p: f64,
    pub stderr: f64,
}

/// Survival over a `(t_on, t_off)` grid, row-major in `t_on`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub t_on: Vec<f64>,
    pub t_off: Vec<f64>,
    pub cells: Vec<HeatmapCell>,
}

impl Heatmap {
    pub fn cell(&self, i: usize, j: usize) -> &HeatmapCell {
        &self.cells[i * self.t_off.len() + j]
    }

    /// CSV with columns `t_on_us,t_off_us,P,stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_on_us", "t_off_us", "P", "stderr"])?;
        for c in &self.cells {
            w.write_record([
                format!("{:.6}", c.t_on * 1e6),
                format!("{:.6}", c.t_off * 1e6),
                format!("{:.6}", c.p),
                format!("{:.6}", c.stderr),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs [`simulate_survival`] on every grid cell. Cell `(i, j)` is seeded
/// with `derive_seed(base.seed, [i, j])` and treated as a single-site
/// timing, so each cell can be reproduced on its own.
pub fn sweep_heatmap(base: &SimConfig, t_on_values: &[f64], t_off_values: &[f64]) -> Result<Heatmap> {
    if t_on_values.is_empty() || t_off_values.is_empty() {
        return Err(invalid("sweep ranges must not be empty"));
    }
    let cols = t_off_values.len();
    let cells = (0..t_on_values.len() * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cols, idx % cols);
            let cfg = cell_config(base, t_on_values[i], t_off_values[j], i, j);
            let r = simulate_survival(&cfg)?;
            Ok(HeatmapCell {
                i,
                j,
                t_on: t_on_values[i],
                t_off: t_off_values[j],
                p: r.p,
                stderr: r.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap {
        t_on: t_on_values.to_vec(),
        t_off: t_off_values.to_vec(),
        cells,
    })
}

/// Configuration used for grid cell `(i, j)`.
pub fn cell_config(base: &SimConfig, t_on: f64, t_off: f64, i: usize, j: usize) -> SimConfig {
    let mut cfg = base.clone();
    cfg.timing.t_on = t_on;
    cfg.timing.t_off = t_off;
    cfg.timing.n_slots = 1;
    cfg.seed = derive_seed(base.seed, &[i as u64, j as u64]);
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AtomSpec;
    use crate::dynamics::{BlinkTiming, TrapModel};
    use std::f64::consts::TAU;

    fn base() -> SimConfig {
        let mut c = SimConfig::new(
            TrapModel::harmonic_cutoff(TAU * 79e3, 0.9e-6).unwrap(),
            AtomSpec::rb87(15e-6).unwrap(),
            BlinkTiming::new(1e-6, 1e-6, 20, 1).unwrap(),
        );
        c.n_samples = 300;
        c.seed = 99;
        c
    }

    #[test]
    fn single_cell_equals_point_simulation() {
        let b = base();
        let h = sweep_heatmap(&b, &[1.3e-6], &[4e-6]).unwrap();
        let direct = simulate_survival(&cell_config(&b, 1.3e-6, 4e-6, 0, 0)).unwrap();
        assert_eq!(h.cells.len(), 1);
        assert_eq!(h.cell(0, 0).p, direct.p);
        assert_eq!(h.cell(0, 0).stderr, direct.stderr);
    }

    #[test]
    fn cells_are_independent_of_grid_shape() {
        let b = base();
        let big = sweep_heatmap(&b, &[0.5e-6, 1.3e-6, 3e-6], &[2e-6, 4e-6]).unwrap();
        let c = big.cell(1, 1);
        let alone = simulate_survival(&cell_config(&b, c.t_on, c.t_off, 1, 1)).unwrap();
        assert_eq!(c.p, alone.p);
        assert!(sweep_heatmap(&b, &[], &[1e-6]).is_err());
    }

    #[test]
    fn csv_layout() {
        let h = sweep_heatmap(&base(), &[1e-6, 2e-6], &[3e-6]).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_on_us,t_off_us,P,stderr");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1.000000,3.000000,"));
        assert!(!text.contains('\r'));
    }
}
