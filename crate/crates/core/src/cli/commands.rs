//! The four subcommands, each producing a [`Table`].

use rayon::prelude::*;

use crate::capacity::{
    capacity_opra, capacity_ora, cutoff_residual_quadrature, optimize_tifr_cutoff, AdaptiveScheme,
};
use crate::distribution::{MinSnrDistribution, RicianHop, SeriesControl};
use crate::montecarlo::{estimate_capacity, estimate_min_cdf, estimate_outage};
use crate::quadrature::QuadratureSpec;
use crate::{Error, Result};

use super::config::{HopConfig, RunConfig};
use super::table::{Cell, Table};

/// Largest tolerated |z| between analytic values and simulation.
pub const Z_LIMIT: f64 = 3.0;
/// Largest tolerated relative gap between the series and quadrature routes.
pub const BACKEND_TOLERANCE: f64 = 1e-6;
/// Largest tolerated quadrature residual of the OPRA cutoff equation.
pub const CUTOFF_RESIDUAL_TOLERANCE: f64 = 1e-8;

pub const DIST_COLUMNS: [&str; 5] = [
    "gamma",
    "cdf_analytic",
    "pdf_analytic",
    "cdf_mc",
    "mc_stderr",
];
pub const CAPACITY_COLUMNS: [&str; 11] = [
    "snr_db",
    "c_ora",
    "c_opra",
    "gamma0",
    "c_tifr_opt",
    "beta0_opt",
    "p_out",
    "c_mc",
    "c_mc_stderr",
    "ora_backend_gap",
    "status",
];
pub const CUTOFF_COLUMNS: [&str; 7] = [
    "snr_db",
    "gamma0",
    "cutoff_residual",
    "beta0_opt",
    "p_out",
    "c_tifr_opt",
    "status",
];
pub const VALIDATE_COLUMNS: [&str; 9] = [
    "snr_db",
    "quantity",
    "at",
    "analytic",
    "simulated",
    "mc_stderr",
    "z",
    "backend_gap",
    "status",
];

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// The distribution for a pair of hop settings.
pub fn distribution(
    x: &HopConfig,
    y: &HopConfig,
    control: SeriesControl,
) -> Result<MinSnrDistribution> {
    MinSnrDistribution::new(
        RicianHop::new(x.k_factor, x.mean_snr)?,
        RicianHop::new(y.k_factor, y.mean_snr)?,
        control,
    )
}

/// CDF and PDF of the end-to-end SNR over a γ grid.
pub fn cmd_dist(cfg: &RunConfig) -> Result<Table> {
    let dist = distribution(&cfg.hop_x, &cfg.hop_y, cfg.control)?;
    let grid: Vec<f64> = cfg
        .sweep
        .expect("dist always has a grid")
        .values()
        .into_iter()
        .map(|p| p.linear)
        .collect();
    let mut names = columns(&DIST_COLUMNS);
    let mut truncated = Vec::new();
    for &n in &cfg.compare_terms {
        names.push(format!("cdf_terms_{n}"));
        truncated.push(dist.with_control(SeriesControl {
            tolerance: f64::MIN_POSITIVE,
            max_terms: n,
        })?);
    }
    let mc = match cfg.mc_samples {
        Some(n) => Some(estimate_min_cdf(&dist, &grid, cfg.seed, n)?),
        None => None,
    };
    let rows: Result<Vec<Vec<Cell>>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut row = vec![
                Cell::Num(g),
                Cell::Num(dist.min_cdf(g)?),
                Cell::Num(dist.min_pdf(g)?),
                Cell::opt(mc.as_ref().map(|m| m[i].value)),
                Cell::opt(mc.as_ref().map(|m| m[i].standard_error)),
            ];
            for t in &truncated {
                row.push(Cell::Num(t.min_cdf(g)?));
            }
            Ok(row)
        })
        .collect();
    let mut table = Table::new("dist", names);
    table.rows = rows?;
    Ok(table)
}

fn status_cell(r: &Result<()>) -> Cell {
    match r {
        Ok(()) => Cell::Text("ok".into()),
        Err(e) => Cell::Text(format!("error: {e}")),
    }
}

fn capacity_row(cfg: &RunConfig, snr_db: f64, x: &HopConfig, y: &HopConfig) -> Vec<Cell> {
    let mut row = vec![Cell::Empty; CAPACITY_COLUMNS.len()];
    row[0] = Cell::Num(snr_db);
    let bw = cfg.bandwidth;
    let mut fill = || -> Result<()> {
        let dist = distribution(x, y, cfg.control)?;
        for scheme in &cfg.schemes {
            match scheme {
                AdaptiveScheme::Ora => {
                    let r = capacity_ora(&dist)?;
                    row[1] = Cell::Num(r.scaled(bw));
                    row[9] = Cell::Num(r.error_estimate);
                }
                AdaptiveScheme::Opra => {
                    let r = capacity_opra(&dist)?;
                    row[2] = Cell::Num(r.scaled(bw));
                    row[3] = Cell::opt(r.cutoff);
                }
                AdaptiveScheme::Tifr => {
                    let r = optimize_tifr_cutoff(&dist)?;
                    row[4] = Cell::Num(r.scaled(bw));
                    row[5] = Cell::opt(r.cutoff);
                    row[6] = Cell::opt(r.outage_probability);
                }
            }
        }
        if let Some(n) = cfg.mc_samples {
            let e = estimate_capacity(&dist, AdaptiveScheme::Ora, None, cfg.seed, n)?;
            row[7] = Cell::Num(e.value * bw);
            row[8] = Cell::Num(e.standard_error * bw);
        }
        Ok(())
    };
    let outcome = fill();
    if outcome.is_err() {
        for c in row.iter_mut().skip(1) {
            *c = Cell::Empty;
        }
    }
    row[10] = status_cell(&outcome);
    row
}

/// Capacities of the selected schemes per mean-SNR row. Rows that fail are
/// flagged in the status column and the sweep continues.
pub fn cmd_capacity(cfg: &RunConfig) -> Table {
    let rows = cfg.snr_rows();
    let mut table = Table::new("capacity", columns(&CAPACITY_COLUMNS));
    table.rows = rows
        .par_iter()
        .map(|(db, x, y)| capacity_row(cfg, *db, x, y))
        .collect();
    table
}

fn cutoff_row(cfg: &RunConfig, snr_db: f64, x: &HopConfig, y: &HopConfig) -> Vec<Cell> {
    let mut row = vec![Cell::Empty; CUTOFF_COLUMNS.len()];
    row[0] = Cell::Num(snr_db);
    let mut fill = || -> Result<()> {
        let dist = distribution(x, y, cfg.control)?;
        let gamma0 = crate::capacity::opra_cutoff(&dist)?;
        row[1] = Cell::Num(gamma0);
        row[2] = Cell::Num(cutoff_residual_quadrature(
            &dist,
            gamma0,
            &QuadratureSpec::default(),
        )?);
        let t = optimize_tifr_cutoff(&dist)?;
        row[3] = Cell::opt(t.cutoff);
        row[4] = Cell::opt(t.outage_probability);
        row[5] = Cell::Num(t.scaled(cfg.bandwidth));
        Ok(())
    };
    let outcome = fill();
    if outcome.is_err() {
        for c in row.iter_mut().skip(1) {
            *c = Cell::Empty;
        }
    }
    row[6] = status_cell(&outcome);
    row
}

/// OPRA and TIFR cutoffs per mean-SNR row.
pub fn cmd_cutoff(cfg: &RunConfig) -> Table {
    let rows = cfg.snr_rows();
    let mut table = Table::new("cutoff", columns(&CUTOFF_COLUMNS));
    table.rows = rows
        .par_iter()
        .map(|(db, x, y)| cutoff_row(cfg, *db, x, y))
        .collect();
    table
}

struct Check {
    quantity: &'static str,
    at: Option<f64>,
    analytic: f64,
    simulated: Option<(f64, f64)>,
    backend_gap: Option<f64>,
    residual: bool,
}

impl Check {
    fn z(&self) -> Option<f64> {
        self.simulated.map(|(v, se)| {
            let d = v - self.analytic;
            if se > 0.0 {
                d / se
            } else if d == 0.0 {
                0.0
            } else {
                d.signum() * f64::INFINITY
            }
        })
    }

    fn verdict(&self) -> String {
        let mut problems = Vec::new();
        if let Some(z) = self.z() {
            if !(z.abs() <= Z_LIMIT) {
                problems.push("simulation disagreement");
            }
        }
        if let Some(g) = self.backend_gap {
            let limit = if self.residual {
                CUTOFF_RESIDUAL_TOLERANCE
            } else {
                BACKEND_TOLERANCE
            };
            if !(g <= limit) {
                problems.push(if self.residual {
                    "cutoff residual"
                } else {
                    "backend disagreement"
                });
            }
        }
        if problems.is_empty() {
            "pass".into()
        } else {
            format!("FAIL: {}", problems.join("; "))
        }
    }

    fn row(&self, snr_db: f64) -> Vec<Cell> {
        vec![
            Cell::Num(snr_db),
            Cell::Text(self.quantity.into()),
            Cell::opt(self.at),
            Cell::Num(self.analytic),
            Cell::opt(self.simulated.map(|s| s.0)),
            Cell::opt(self.simulated.map(|s| s.1)),
            Cell::opt(self.z()),
            Cell::opt(self.backend_gap),
            Cell::Text(self.verdict()),
        ]
    }
}

fn validation_checks(
    cfg: &RunConfig,
    x: &HopConfig,
    y: &HopConfig,
    n: usize,
) -> Result<Vec<Check>> {
    let dist = distribution(x, y, cfg.control)?;
    let seed = cfg.seed;
    let mut checks = Vec::new();

    let scale = x.mean_snr.min(y.mean_snr);
    let grid: Vec<f64> = [0.25, 0.5, 1.0, 2.0].iter().map(|f| f * scale).collect();
    let mc = estimate_min_cdf(&dist, &grid, seed, n)?;
    for (g, e) in grid.iter().zip(&mc) {
        checks.push(Check {
            quantity: "min_cdf",
            at: Some(*g),
            analytic: dist.min_cdf(*g)?,
            simulated: Some((e.value, e.standard_error)),
            backend_gap: None,
            residual: false,
        });
    }

    for scheme in &cfg.schemes {
        match scheme {
            AdaptiveScheme::Ora => {
                let r = capacity_ora(&dist)?;
                let e = estimate_capacity(&dist, AdaptiveScheme::Ora, None, seed, n)?;
                checks.push(Check {
                    quantity: "c_ora",
                    at: None,
                    analytic: r.capacity,
                    simulated: Some((e.value, e.standard_error)),
                    backend_gap: Some(r.error_estimate),
                    residual: false,
                });
            }
            AdaptiveScheme::Opra => {
                let r = capacity_opra(&dist)?;
                let g0 = r
                    .cutoff
                    .ok_or_else(|| Error::InvalidParameter("missing cutoff".into()))?;
                let residual = cutoff_residual_quadrature(&dist, g0, &QuadratureSpec::default())?;
                checks.push(Check {
                    quantity: "gamma0_residual",
                    at: Some(g0),
                    analytic: residual,
                    simulated: None,
                    backend_gap: Some(residual.abs()),
                    residual: true,
                });
                let e = estimate_capacity(&dist, AdaptiveScheme::Opra, Some(g0), seed, n)?;
                checks.push(Check {
                    quantity: "c_opra",
                    at: Some(g0),
                    analytic: r.capacity,
                    simulated: Some((e.value, e.standard_error)),
                    backend_gap: Some(r.error_estimate),
                    residual: false,
                });
            }
            AdaptiveScheme::Tifr => {
                let r = optimize_tifr_cutoff(&dist)?;
                let b0 = r
                    .cutoff
                    .ok_or_else(|| Error::InvalidParameter("missing cutoff".into()))?;
                let o = estimate_outage(&dist, b0, seed, n)?;
                checks.push(Check {
                    quantity: "p_out",
                    at: Some(b0),
                    analytic: r.outage_probability.unwrap_or(f64::NAN),
                    simulated: Some((o.value, o.standard_error)),
                    backend_gap: None,
                    residual: false,
                });
                let e = estimate_capacity(&dist, AdaptiveScheme::Tifr, Some(b0), seed, n)?;
                checks.push(Check {
                    quantity: "c_tifr_opt",
                    at: Some(b0),
                    analytic: r.capacity,
                    simulated: Some((e.value, e.standard_error)),
                    backend_gap: Some(r.error_estimate),
                    residual: false,
                });
            }
        }
    }
    Ok(checks)
}

/// Analytic values against simulation and the quadrature backend.
///
/// Returns the report and whether every comparison passed.
pub fn cmd_validate(cfg: &RunConfig) -> (Table, bool) {
    let n = cfg
        .mc_samples
        .unwrap_or(super::config::DEFAULT_VALIDATE_SAMPLES);
    let mut table = Table::new("validate", columns(&VALIDATE_COLUMNS));
    let mut ok = true;
    let per_point: Vec<(f64, Result<Vec<Check>>)> = cfg
        .snr_rows()
        .par_iter()
        .map(|(db, x, y)| (*db, validation_checks(cfg, x, y, n)))
        .collect();
    for (db, checks) in per_point {
        match checks {
            Ok(checks) => {
                for c in checks {
                    let row = c.row(db);
                    if c.verdict() != "pass" {
                        ok = false;
                    }
                    table.rows.push(row);
                }
            }
            Err(e) => {
                ok = false;
                let mut row = vec![Cell::Empty; VALIDATE_COLUMNS.len()];
                row[0] = Cell::Num(db);
                row[1] = Cell::Text("all".into());
                row[8] = Cell::Text(format!("FAIL: error: {e}"));
                table.rows.push(row);
            }
        }
    }
    (table, ok)
}
