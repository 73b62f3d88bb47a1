//! JSON report types and deterministic file output.
//!
//! All floating-point payloads are rounded to 12 significant digits before
//! serialization so exact-mode outputs are bit-identical across runs; the
//! shortest-roundtrip JSON printer then reproduces those digits verbatim.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thermoleak_core::fmt::sig12;
use thermoleak_core::inequality::AlphaSweep;

pub const SCHEMA_VERSION: u32 = 1;

/// Exact-mode verdicts ignore float dust around zero; a genuine violation
/// in these scenarios is orders of magnitude larger.
pub const EXACT_DETECTION_TOL: f64 = 1e-10;

pub fn round12(x: f64) -> f64 {
    sig12(x).parse().expect("sig12 emits valid floats")
}

pub fn round12_vec(xs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    xs.into_iter().map(round12).collect()
}

/// Temp-file-then-rename so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.to_path_buf();
    let mut name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "missing file name"))?
        .to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report types serialize");
    body.push('\n');
    write_atomic(path, &body)
}

#[derive(Debug, Serialize)]
pub struct ScenarioEcho {
    pub variant: String,
    pub theta_c: f64,
    pub theta_h: f64,
    pub theta_e: f64,
    pub mode: String,
    pub noise_profile: String,
    pub shots: u64,
    pub executions: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SweepVerdict {
    pub detected: bool,
    pub detecting_alphas: Vec<f64>,
    pub min_value: f64,
}

impl SweepVerdict {
    /// Exact mode: a point detects when its value is genuinely negative.
    /// Sampled mode: when its whole 99% interval is below zero.
    pub fn from_sweep(sweep: &AlphaSweep, exact: bool) -> SweepVerdict {
        let detecting: Vec<f64> = sweep
            .points
            .iter()
            .filter(|p| {
                if exact {
                    p.value < -EXACT_DETECTION_TOL
                } else {
                    p.detects()
                }
            })
            .map(|p| round12(p.alpha))
            .collect();
        SweepVerdict {
            detected: !detecting.is_empty(),
            detecting_alphas: detecting,
            min_value: round12(sweep.min_value()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ScalarVerdict {
    pub value: f64,
    pub detected: bool,
}

#[derive(Debug, Serialize)]
pub struct SubsystemVerdict {
    pub subsystem: String,
    #[serde(flatten)]
    pub verdict: SweepVerdict,
}

#[derive(Debug, Serialize)]
pub struct FluctuationVerdict {
    pub value: f64,
    pub deviation: f64,
    pub detected: bool,
}

#[derive(Debug, Serialize)]
pub struct MajorizationVerdict {
    pub majorizes: bool,
    pub max_excess: f64,
    pub detected: bool,
}

#[derive(Debug, Serialize)]
pub struct DetectionReport {
    pub schema: u32,
    pub scenario: ScenarioEcho,
    pub second_law: ScalarVerdict,
    pub global_passivity: SweepVerdict,
    pub full_register: SweepVerdict,
    pub passivity_deformation: SweepVerdict,
    pub resource_theory: Vec<SubsystemVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fluctuation_theorem: Option<FluctuationVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub majorization: Option<MajorizationVerdict>,
    pub files: Vec<String>,
}

pub fn file_list(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use thermoleak_core::inequality::SweepPoint;

    #[test]
    fn rounding_is_idempotent_and_short() {
        let x = 0.055365376218510606;
        assert_eq!(round12(x), 0.0553653762185);
        assert_eq!(round12(round12(x)), round12(x));
        assert_eq!(serde_json::to_string(&round12(x)).unwrap(), "0.0553653762185");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join("thermoleak-report-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        write_atomic(&path, "a,b\n").unwrap();
        write_atomic(&path, "c,d\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "c,d\n");
        assert!(!dir.join("out.csv.tmp").exists());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn exact_verdicts_ignore_float_dust() {
        let sweep = AlphaSweep {
            points: vec![
                SweepPoint { alpha: -1.0, value: -1e-13, ci_halfwidth: 0.0 },
                SweepPoint { alpha: 1.0, value: 0.2, ci_halfwidth: 0.0 },
            ],
        };
        let verdict = SweepVerdict::from_sweep(&sweep, true);
        assert!(!verdict.detected);

        let sampled = AlphaSweep {
            points: vec![SweepPoint { alpha: -1.0, value: -0.05, ci_halfwidth: 0.01 }],
        };
        let verdict = SweepVerdict::from_sweep(&sampled, false);
        assert!(verdict.detected);
        assert_eq!(verdict.detecting_alphas, vec![-1.0]);
    }
}
