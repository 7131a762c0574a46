//! CSV writers and the run manifest.
//!
//! Floats are written with 17 significant digits so files round-trip and
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::TimeSeries;
use crate::error::Result;
use crate::experiments::{ContactSet, RunSummary};
use crate::spaces::PairDiagnostics;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SERIES_HEADER: &str = "t,diff_norm,control_norm,max_viol_y,max_viol_w";
pub const CONTACT_HEADER: &str = "t,node,state";
pub const RUNS_HEADER: &str = "name,preset,n_nodes,M,lambda,k_my,dt,T,initial_diff,final_diff,ratio,max_viol_y,max_viol_w,mu_hat,r_squared";
pub const DIAGNOSTICS_HEADER: &str = "M,alpha_hat,C_P,C_P_running_max,beta_Mplus,cond_G";

/// Writes `contents` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn series_csv(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(series.len() * 120);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for i in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(series.times[i]),
            fmt_f64(series.diff_norm[i]),
            fmt_f64(series.control_norm[i]),
            fmt_f64(series.max_viol_y[i]),
            fmt_f64(series.max_viol_w[i]),
        );
    }
    out
}

/// One line per violating node and state.
pub fn contact_csv(contact: &ContactSet) -> String {
    let mut out = String::new();
    out.push_str(CONTACT_HEADER);
    out.push('\n');
    for (k, &t) in contact.times.iter().enumerate() {
        for (state, mask) in [("y", &contact.mask_y[k]), ("w", &contact.mask_w[k])] {
            for (node, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                let _ = writeln!(out, "{},{node},{state}", fmt_f64(t));
            }
        }
    }
    out
}

pub const COMPONENTS_HEADER: &str = "t,components_y,components_w";

/// Number of connected violation components per frame.
pub fn components_csv(contact: &ContactSet) -> String {
    let mut out = String::new();
    out.push_str(COMPONENTS_HEADER);
    out.push('\n');
    for (k, &t) in contact.times.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(t),
            contact.components_y[k],
            contact.components_w[k]
        );
    }
    out
}

pub fn runs_csv(rows: &[RunSummary]) -> String {
    let mut out = String::new();
    out.push_str(RUNS_HEADER);
    out.push('\n');
    for r in rows {
        let preset = match r.preset {
            crate::experiments::Preset::Smooth => "smooth",
            crate::experiments::Preset::Nonsmooth => "nonsmooth",
        };
        let _ = writeln!(
            out,
            "{},{preset},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.name,
            r.n_nodes,
            r.m,
            fmt_f64(r.lambda),
            fmt_f64(r.k_my),
            fmt_f64(r.dt),
            fmt_f64(r.t_final),
            fmt_f64(r.initial_diff),
            fmt_f64(r.final_diff),
            fmt_f64(r.ratio),
            fmt_f64(r.max_viol_y),
            fmt_f64(r.max_viol_w),
            fmt_f64(r.mu_hat),
            fmt_f64(r.r_squared),
        );
    }
    out
}

pub fn diagnostics_csv(rows: &[PairDiagnostics]) -> String {
    let mut out = String::new();
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m,
            fmt_f64(r.alpha_hat),
            fmt_f64(r.c_p),
            fmt_f64(r.c_p_running_max),
            fmt_f64(r.beta_mplus),
            fmt_f64(r.cond),
        );
    }
    out
}

/// Record of one CLI invocation, written last.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub version: &'static str,
    pub config: C,
    pub wall_clock_seconds: f64,
    pub files: Vec<PathBuf>,
}

impl<C: Serialize> RunManifest<C> {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::Config(e.to_string()))?;
        write_atomic(&path, &json)?;
        Ok(path)
    }
}

/// Collects output files under one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, contents)?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.345_208_2e-7, -1e300, 0.0, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path().join("o")).unwrap();
        out.write("a.csv", "1\n").unwrap();
        let p = out.write("a.csv", "2\n").unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "2\n");
        assert!(!dir.path().join("o/a.tmp").exists());
    }
}
