use std::fs;
use std::path::Path;

use log::info;

use crowd_clbp::dataset::{load_manifest, write_synth_corpus, DatasetError};
use crowd_clbp::eval::{confusion, holdout, overlay_labels, sweep_block_sizes, ConfusionMatrix};
use crowd_clbp::imaging::load_grayscale;
use crowd_clbp::pipeline::{extract_labeled, predict_blocks, predict_frame, train_model, DescriptorKind, FeatureConfig};
use crowd_clbp::svm::{load_model, save_model};
use crowd_clbp::{Error, Result};

use crate::config::Settings;

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.display().to_string();
    move |source| DatasetError::Io { path, source }.into()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_error(parent))?;
    }
    fs::write(path, contents).map_err(io_error(path))
}

pub fn train(settings: &Settings) -> Result<()> {
    let manifest = load_manifest(settings.require_manifest()?)?;
    let model_path = settings.require_model()?;
    let blocks = extract_labeled(&manifest, &settings.features)?;
    let trained = train_model(&blocks, &settings.features, &settings.train)?;
    if let Some(grid) = &trained.grid {
        println!("grid_best_c {}", grid.best_c);
        println!("grid_best_gamma {}", grid.best_gamma);
    }
    let predicted = predict_blocks(&trained.model, &blocks.features)?;
    let cm = confusion(&predicted, &blocks.labels)?;
    save_model(&trained.model, model_path)?;
    info!("model written to {}", model_path.display());
    println!("train_blocks {}", blocks.len());
    println!("support_vectors {}", trained.model.support_vector_count());
    println!("converged {}", trained.model.converged());
    println!("train_accuracy {:.6}", cm.accuracy()?);
    Ok(())
}

pub fn predict(settings: &Settings, frame: &Path, overlay: Option<&Path>) -> Result<()> {
    let model = load_model(settings.require_model()?)?;
    let image = load_grayscale(frame)?;
    let (grid, predictions) = predict_frame(&model, &image).map_err(|e| match e {
        Error::Imaging(inner @ crowd_clbp::imaging::ImagingError::BlockTooLarge { .. }) => Error::Geometry(format!(
            "frame {}x{} does not fit the model's block configuration: {inner}",
            image.width(),
            image.height()
        )),
        other => other,
    })?;
    let mut csv = String::from("block_index,x,y,w,h,label");
    for c in &model.classes {
        csv.push_str(&format!(",votes_{}", c.code()));
    }
    csv.push('\n');
    for (i, p) in predictions.iter().enumerate() {
        let votes: Vec<String> = p.votes.iter().map(u32::to_string).collect();
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            p.block.x,
            p.block.y,
            p.block.w,
            p.block.h,
            p.label.code(),
            votes.join(",")
        ));
    }
    print!("{csv}");
    if let Some(path) = overlay {
        let labels: Vec<_> = predictions.iter().map(|p| p.label).collect();
        let rendered = overlay_labels(&image, &grid, &labels)?;
        rendered
            .save(path)
            .map_err(|e| Error::Config(format!("cannot write overlay {}: {e}", path.display())))?;
        info!("overlay written to {}", path.display());
    }
    Ok(())
}

fn report(cm: &ConfusionMatrix, settings: &Settings, note: &str) -> Result<()> {
    println!("confusion matrix (row %, truth down, prediction across){note}");
    print!("{}", cm.to_table());
    println!("accuracy {:.6}", cm.accuracy()?);
    println!("blocks {}", cm.total());
    if let Some(out) = &settings.out {
        write_file(&out.join("confusion.csv"), &cm.to_csv())?;
    }
    Ok(())
}

pub fn evaluate(settings: &Settings, test_fraction: f64, sanity: bool) -> Result<()> {
    let manifest = load_manifest(settings.require_manifest()?)?;
    match &settings.model {
        Some(path) => {
            let model = load_model(path)?;
            let blocks = extract_labeled(&manifest, &model.features)?;
            let predicted = predict_blocks(&model, &blocks.features)?;
            let cm = confusion(&predicted, &blocks.labels)?;
            let note = if sanity { " [sanity: scored on training data]" } else { "" };
            report(&cm, settings, note)
        }
        None => {
            if sanity {
                return Err(Error::Config("--sanity needs --model".into()));
            }
            let outcome = holdout(&manifest, &settings.features, &settings.train, test_fraction, settings.seed)?;
            println!("train_blocks {}", outcome.train_blocks);
            report(&outcome.confusion, settings, " [held-out split]")
        }
    }
}

/// Returns `false` when some size failed; each failure has already been
/// reported on its own `ERROR` line.
pub fn sweep(settings: &Settings, sizes: &[u32], descriptors: &[String], test_fraction: f64) -> Result<bool> {
    let manifest = load_manifest(settings.require_manifest()?)?;
    let kinds = descriptors
        .iter()
        .map(|d| DescriptorKind::parse(d).ok_or_else(|| Error::Config(format!("unknown descriptor '{d}'"))))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("descriptor,block_size,accuracy,seconds\n");
    print!("{csv}");
    let mut clean = true;
    for kind in kinds {
        let features = FeatureConfig {
            descriptor: kind,
            ..settings.features
        };
        let report = sweep_block_sizes(&manifest, sizes, &features, &settings.train, test_fraction, settings.seed);
        let rows = report.to_csv(false);
        print!("{rows}");
        csv.push_str(&rows);
        for failure in &report.failures {
            eprintln!(
                "ERROR {}: {} block size {}: {}",
                failure.error.code(),
                kind.name(),
                failure.block_size,
                failure.error
            );
        }
        clean &= report.failures.is_empty();
    }
    if let Some(out) = &settings.out {
        write_file(&out.join("sweep.csv"), &csv)?;
    }
    Ok(clean)
}

pub fn synth(settings: &Settings, per_class: usize, frame_size: u32) -> Result<()> {
    if frame_size < 64 {
        return Err(Error::Config(format!("--frame-size must be at least 64, got {frame_size}")));
    }
    if per_class == 0 {
        return Err(Error::Config("--per-class must be positive".into()));
    }
    let out = settings.require_out()?;
    let manifest = write_synth_corpus(out, per_class, frame_size, settings.seed)?;
    println!(
        "wrote {} frames and {}",
        manifest.entries.len(),
        out.join("manifest.txt").display()
    );
    Ok(())
}
