//! Deterministic output artifacts: CSV tables plus a JSON manifest with
//! SHA-256 checksums of every file written.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{ChannelLadder, EnergySplit, ExtremaReport};
use crate::config::RunConfig;
use crate::detection::{DetectionFrame, PixelGrid};
use crate::error::{Error, Result};
use crate::fields::FieldSample;
use crate::trajectory::{NonCrossingReport, Swarm};

/// 17 significant digits: round-trips any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidParameter { name: "output", reason: format!("{}: {e}", path.display()) }
}

/// Collects written files so the manifest can checksum them at the end.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        f.write_all(contents.as_bytes()).map_err(|e| io_err(&path, e))?;
        self.files.push(path.clone());
        Ok(path)
    }

    /// Writes manifest.json last; it lists and checksums everything else.
    pub fn finish(mut self, config: &RunConfig) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Artifact {
            name: String,
            bytes: u64,
            sha256: String,
        }
        #[derive(Serialize)]
        struct Manifest<'a> {
            seed: u64,
            config: &'a RunConfig,
            artifacts: Vec<Artifact>,
        }

        self.files.sort();
        let mut artifacts = Vec::with_capacity(self.files.len());
        for path in &self.files {
            let data = fs::read(path).map_err(|e| io_err(path, e))?;
            let mut h = Sha256::new();
            h.update(&data);
            artifacts.push(Artifact {
                name: path.file_name().unwrap().to_string_lossy().into_owned(),
                bytes: data.len() as u64,
                sha256: format!("{:x}", h.finalize()),
            });
        }
        let manifest = Manifest { seed: config.seed, config, artifacts };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidParameter {
            name: "manifest",
            reason: e.to_string(),
        })?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

pub fn fields_csv(samples: &[FieldSample]) -> String {
    let mut s = String::from("x,t,rho,flux,velocity,quantum_potential,kinetic\n");
    for f in samples {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(f.x),
            fmt_f64(f.t),
            fmt_f64(f.rho),
            fmt_f64(f.flux),
            fmt_f64(f.velocity),
            fmt_f64(f.quantum_potential),
            fmt_f64(f.kinetic),
        ));
    }
    s
}

pub fn trajectories_csv(swarm: &Swarm) -> String {
    let mut s = String::from("traj_id,t,x\n");
    for (id, traj) in swarm.trajectories.iter().enumerate() {
        for (t, x) in traj.times.iter().zip(&traj.positions) {
            s.push_str(&format!("{id},{},{}\n", fmt_f64(*t), fmt_f64(*x)));
        }
    }
    s
}

pub fn non_crossing_csv(report: &NonCrossingReport) -> String {
    let mut s = String::from("ordered,first_violation_time,first_violation_index\n");
    match report.first_violation {
        Some((t, i)) => s.push_str(&format!("false,{},{i}\n", fmt_f64(t))),
        None => s.push_str("true,,\n"),
    }
    s
}

pub fn detection_csv(grid: &PixelGrid, frame: &DetectionFrame) -> String {
    let centers = grid.centers();
    let mut s = format!(
        "# events={} noise={} discarded={}\nindex,x_center,count\n",
        frame.n_events, frame.n_noise, frame.n_discarded
    );
    for (i, (&x, &c)) in centers.iter().zip(&frame.counts).enumerate() {
        s.push_str(&format!("{i},{},{c}\n", fmt_f64(x)));
    }
    s
}

pub fn extrema_csv(t: f64, report: &ExtremaReport) -> String {
    let mut s = String::from("t,kind,x\n");
    for &x in &report.minima {
        s.push_str(&format!("{},minimum,{}\n", fmt_f64(t), fmt_f64(x)));
    }
    for &x in &report.maxima {
        s.push_str(&format!("{},maximum,{}\n", fmt_f64(t), fmt_f64(x)));
    }
    s
}

pub fn ladder_csv(t: f64, ladder: &ChannelLadder) -> String {
    let mut s = String::from("t,nu,x_lo,x_hi,mean_velocity\n");
    for ch in &ladder.channels {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(t),
            ch.nu,
            fmt_f64(ch.x_lo),
            fmt_f64(ch.x_hi),
            fmt_f64(ch.mean_velocity),
        ));
    }
    s
}

pub fn energy_csv(rows: &[(f64, EnergySplit)]) -> String {
    let mut s = String::from("t,mean_kinetic,mean_quantum,total\n");
    for (t, e) in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(*t),
            fmt_f64(e.mean_kinetic),
            fmt_f64(e.mean_quantum),
            fmt_f64(e.total()),
        ));
    }
    s
}
