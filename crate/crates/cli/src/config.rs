//! Run configuration: built-in defaults, overridden by an optional TOML
//! file, overridden by command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crowd_clbp::descriptor::{ClbpParams, Mapping, Scheme};
use crowd_clbp::pipeline::{DescriptorKind, FeatureConfig, TrainConfig};
use crowd_clbp::svm::{GridConfig, KernelSpec, SmoParams};
use crowd_clbp::Error;

/// Settings shared by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML file with defaults for any of the options below
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Annotation manifest
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Model file to write (train) or read (predict, evaluate)
    #[arg(long, global = true, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Output directory (synth, sweep, evaluate)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Texture descriptor: clbp, lbp or glcm
    #[arg(long, global = true)]
    pub descriptor: Option<String>,
    /// Block side in pixels
    #[arg(long, global = true)]
    pub block_size: Option<u32>,
    /// Cell side in pixels
    #[arg(long, global = true)]
    pub cell_size: Option<u32>,
    /// Fraction of a cell shared with its neighbor, in [0, 1)
    #[arg(long, global = true)]
    pub overlap: Option<f64>,
    /// Sampling ring radius
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Samples on the ring
    #[arg(long, global = true)]
    pub points: Option<u32>,
    /// Pattern mapping: riu2 or full
    #[arg(long, global = true)]
    pub mapping: Option<String>,
    /// Histogram scheme: joint or concat
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// SVM kernel: rbf or linear
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    /// Soft-margin penalty (ignored when grid search is on)
    #[arg(long = "c", global = true)]
    pub c: Option<f64>,
    /// RBF width (ignored when grid search is on)
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Select C and gamma by cross-validation (the default)
    #[arg(long, global = true, overrides_with = "no_grid")]
    pub grid: bool,
    /// Use --c and --gamma as given
    #[arg(long, global = true)]
    pub no_grid: bool,
    /// Root seed for splits, solvers and synthetic data
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical CPUs)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    descriptor: DescriptorSection,
    #[serde(default)]
    blocks: BlockSection,
    #[serde(default)]
    svm: SvmSection,
    #[serde(default)]
    paths: PathSection,
    seed: Option<u64>,
    jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorSection {
    kind: Option<String>,
    radius: Option<f64>,
    points: Option<u32>,
    mapping: Option<String>,
    scheme: Option<String>,
    glcm_levels: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockSection {
    block_size: Option<u32>,
    cell_size: Option<u32>,
    overlap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvmSection {
    kernel: Option<String>,
    c: Option<f64>,
    gamma: Option<f64>,
    tol: Option<f64>,
    max_passes: Option<usize>,
    grid: Option<bool>,
    c_grid: Option<Vec<f64>>,
    gamma_grid: Option<Vec<f64>>,
    folds: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSection {
    manifest: Option<PathBuf>,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn parse_with<T>(what: &str, value: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, Error> {
    parse(value).ok_or_else(|| Error::Config(format!("unknown {what} '{value}'")))
}

impl Settings {
    pub fn resolve(flags: &Overrides) -> Result<Self, Error> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let d = FeatureConfig::default();
        let descriptor = match flags.descriptor.as_deref().or(file.descriptor.kind.as_deref()) {
            Some(v) => parse_with("descriptor", v, DescriptorKind::parse)?,
            None => d.descriptor,
        };
        let mapping = match flags.mapping.as_deref().or(file.descriptor.mapping.as_deref()) {
            Some(v) => parse_with("mapping", v, Mapping::parse)?,
            None => d.clbp.mapping,
        };
        let scheme = match flags.scheme.as_deref().or(file.descriptor.scheme.as_deref()) {
            Some(v) => parse_with("scheme", v, Scheme::parse)?,
            None => d.clbp.scheme,
        };
        let features = FeatureConfig {
            descriptor,
            clbp: ClbpParams {
                radius: flags.radius.or(file.descriptor.radius).unwrap_or(d.clbp.radius),
                points: flags.points.or(file.descriptor.points).unwrap_or(d.clbp.points),
                mapping,
                scheme,
            },
            glcm_levels: file.descriptor.glcm_levels.unwrap_or(d.glcm_levels),
            block_size: flags.block_size.or(file.blocks.block_size).unwrap_or(d.block_size),
            cell_size: flags.cell_size.or(file.blocks.cell_size).unwrap_or(d.cell_size),
            overlap: flags.overlap.or(file.blocks.overlap).unwrap_or(d.overlap),
        };
        features.validate()?;

        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let s = SmoParams::default();
        let gamma = flags.gamma.or(file.svm.gamma).unwrap_or(1.0);
        let kernel = match flags.kernel.as_deref().or(file.svm.kernel.as_deref()).unwrap_or("rbf") {
            "rbf" => KernelSpec::Rbf { gamma },
            "linear" => KernelSpec::Linear,
            other => return Err(Error::Config(format!("unknown kernel '{other}'"))),
        };
        let smo = SmoParams {
            c: flags.c.or(file.svm.c).unwrap_or(s.c),
            kernel,
            tol: file.svm.tol.unwrap_or(s.tol),
            max_passes: file.svm.max_passes.unwrap_or(s.max_passes),
            seed,
        };
        smo.validate()?;
        let grid_on = if flags.no_grid {
            false
        } else if flags.grid {
            true
        } else {
            file.svm.grid.unwrap_or(true)
        };
        if grid_on && kernel == KernelSpec::Linear {
            return Err(Error::Config("grid search tunes the rbf kernel; pass --no-grid with --kernel linear".into()));
        }
        let g = GridConfig::default();
        let grid = grid_on.then(|| GridConfig {
            c_grid: file.svm.c_grid.clone().unwrap_or(g.c_grid),
            gamma_grid: file.svm.gamma_grid.clone().unwrap_or(g.gamma_grid),
            folds: file.svm.folds.unwrap_or(g.folds),
        });
        Ok(Settings {
            features,
            train: TrainConfig { smo, grid },
            seed,
            jobs: flags.jobs.or(file.jobs),
            manifest: flags.manifest.clone().or(file.paths.manifest),
            model: flags.model.clone().or(file.paths.model),
            out: flags.out.clone().or(file.paths.out),
        })
    }

    pub fn require_manifest(&self) -> Result<&Path, Error> {
        self.manifest.as_deref().ok_or_else(|| Error::Config("--manifest is required".into()))
    }

    pub fn require_model(&self) -> Result<&Path, Error> {
        self.model.as_deref().ok_or_else(|| Error::Config("--model is required".into()))
    }

    pub fn require_out(&self) -> Result<&Path, Error> {
        self.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
    }

    /// One `key = value` line per setting.
    pub fn describe(&self) -> String {
        let f = &self.features;
        let t = &self.train;
        let mut out = String::new();
        let mut line = |k: &str, v: String| writeln!(out, "  {k} = {v}").unwrap();
        line("descriptor", f.descriptor.name().into());
        line("radius", f.clbp.radius.to_string());
        line("points", f.clbp.points.to_string());
        line("mapping", f.clbp.mapping.name().into());
        line("scheme", f.clbp.scheme.name().into());
        line("glcm_levels", f.glcm_levels.to_string());
        line("block_size", f.block_size.to_string());
        line("cell_size", f.cell_size.to_string());
        line("overlap", f.overlap.to_string());
        line("kernel", t.smo.kernel.name().into());
        match &t.grid {
            Some(g) => {
                line("grid", "on".into());
                line("c_grid", format!("{:?}", g.c_grid));
                line("gamma_grid", format!("{:?}", g.gamma_grid));
                line("folds", g.folds.to_string());
            }
            None => {
                line("grid", "off".into());
                line("c", t.smo.c.to_string());
                if let KernelSpec::Rbf { gamma } = t.smo.kernel {
                    line("gamma", gamma.to_string());
                }
            }
        }
        line("tol", t.smo.tol.to_string());
        line("max_passes", t.smo.max_passes.to_string());
        line("seed", self.seed.to_string());
        line("jobs", self.jobs.map_or_else(|| "auto".into(), |j| j.to_string()));
        for (k, v) in [("manifest", &self.manifest), ("model", &self.model), ("out", &self.out)] {
            if let Some(p) = v {
                line(k, p.display().to_string());
            }
        }
        out
    }
}
