//! Machine-readable solve reports. The JSON layout is validated against
//! `schemas/solve_report.schema.json` in the repository root.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SolveResult;
use crate::fmm::SweepTimings;
use crate::geom::PanelSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportTimings {
    pub tree: f64,
    pub upward: f64,
    pub m2l: f64,
    pub p2p: f64,
    pub total: f64,
}

impl From<&SweepTimings> for ReportTimings {
    fn from(t: &SweepTimings) -> Self {
        ReportTimings {
            tree: t.tree.as_secs_f64(),
            upward: t.upward.as_secs_f64(),
            m2l: t.m2l.as_secs_f64(),
            p2p: t.p2p.as_secs_f64(),
            total: t.total.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub n_panels: usize,
    pub n_charges: usize,
    pub eps_in: f64,
    pub eps_out: f64,
    pub order_p: usize,
    pub f: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    #[serde(rename = "dG_internal")]
    pub dg_internal: f64,
    #[serde(rename = "dG_kcal_mol")]
    pub dg_kcal_mol: f64,
    pub timings: ReportTimings,
    pub converged: bool,
}

impl From<&SolveResult> for SolveReport {
    fn from(r: &SolveResult) -> Self {
        SolveReport {
            method: r.method.name().to_string(),
            n_panels: r.n_panels,
            n_charges: r.n_charges,
            eps_in: r.eps_in,
            eps_out: r.eps_out,
            order_p: r.order_p,
            f: r.f,
            iterations: r.iterations,
            residuals: r.residual_history.clone(),
            dg_internal: r.dg_internal,
            dg_kcal_mol: r.dg_kcal_mol,
            timings: ReportTimings::from(&r.timings),
            converged: r.converged,
        }
    }
}

/// Dump the induced charge as CSV rows
/// `panel_index, cx, cy, cz, area, sigma` for surface-coloring plots.
pub fn write_sigma_csv(
    result: &SolveResult,
    panels: &PanelSet,
    path: impl AsRef<Path>,
) -> std::io::Result<()> {
    let mut out = String::from("panel_index,cx,cy,cz,area,sigma\n");
    for (i, s) in result.sigma.sigma.iter().enumerate() {
        let c = panels.centroids[i];
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i, c.x, c.y, c.z, panels.areas[i], s
        ));
    }
    File::create(path)?.write_all(out.as_bytes())
}
