//! Line-oriented annotation manifests.
//!
//! ```text
//! # comment
//! @source PETS2009
//! @block_size 96
//! <frame_id> <x> <y> <w> <h> <count|-> <label>
//! ```
//!
//! `frame_id` is the frame's path relative to the manifest's directory and
//! contains no whitespace. `label` is one of `VeryLow`, `Low`, `Medium`,
//! `High` (or `VL`, `L`, `M`, `H`). Annotations of one frame may be spread
//! over the file; frames keep the order of their first appearance. The full
//! grammar is documented in `docs/manifest-format.md`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{label_from_count, DatasetError, DensityLabel, Result};
use crate::imaging::Rect;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAnnotation {
    pub frame_id: String,
    pub block: Rect,
    pub person_count: Option<u32>,
    pub label: DensityLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameEntry {
    pub frame_id: String,
    pub annotations: Vec<BlockAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub root: PathBuf,
    pub source: Option<String>,
    pub block_size: Option<u32>,
    pub entries: Vec<FrameEntry>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            ..Self::default()
        }
    }

    pub fn frame_path(&self, frame_id: &str) -> PathBuf {
        self.root.join(frame_id)
    }

    pub fn annotations(&self) -> impl Iterator<Item = &BlockAnnotation> {
        self.entries.iter().flat_map(|e| e.annotations.iter())
    }

    pub fn annotation_count(&self) -> usize {
        self.entries.iter().map(|e| e.annotations.len()).sum()
    }

    /// Labels present, in density order.
    pub fn labels(&self) -> Vec<DensityLabel> {
        let present: HashSet<DensityLabel> = self.annotations().map(|a| a.label).collect();
        DensityLabel::ALL.into_iter().filter(|l| present.contains(l)).collect()
    }

    /// Appends an annotation, checking count/label consistency and
    /// duplicates.
    pub fn push(&mut self, annotation: BlockAnnotation) -> Result<()> {
        self.push_at(annotation, 0)
    }

    fn push_at(&mut self, annotation: BlockAnnotation, line: usize) -> Result<()> {
        if let Some(count) = annotation.person_count {
            let expected = label_from_count(count);
            if expected != annotation.label {
                return Err(DatasetError::InconsistentLabel {
                    line,
                    count,
                    expected,
                    found: annotation.label,
                });
            }
        }
        let entry = match self.entries.iter().position(|e| e.frame_id == annotation.frame_id) {
            Some(i) => &mut self.entries[i],
            None => {
                self.entries.push(FrameEntry {
                    frame_id: annotation.frame_id.clone(),
                    annotations: Vec::new(),
                });
                self.entries.last_mut().expect("just pushed")
            }
        };
        if entry.annotations.iter().any(|a| a.block == annotation.block) {
            return Err(DatasetError::DuplicateAnnotation {
                line,
                frame: annotation.frame_id,
            });
        }
        entry.annotations.push(annotation);
        Ok(())
    }

    /// Parses manifest text. Frame files are not touched; see
    /// [`Manifest::validate_frames`].
    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut manifest = Manifest::new(root);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if let Some(directive) = fields[0].strip_prefix('@') {
                manifest.parse_directive(directive, &fields[1..], line)?;
                continue;
            }
            if fields.len() != 7 {
                return Err(DatasetError::Parse {
                    line,
                    field: "annotation",
                    detail: format!("expected 7 fields, found {}", fields.len()),
                });
            }
            let number = |idx: usize, field: &'static str| -> Result<u32> {
                fields[idx].parse::<u32>().map_err(|e| DatasetError::Parse {
                    line,
                    field,
                    detail: format!("{:?}: {e}", fields[idx]),
                })
            };
            let block = Rect::new(number(1, "x")?, number(2, "y")?, number(3, "w")?, number(4, "h")?);
            if block.w == 0 || block.h == 0 {
                return Err(DatasetError::Parse {
                    line,
                    field: "w/h",
                    detail: "block extent must be positive".into(),
                });
            }
            let person_count = match fields[5] {
                "-" => None,
                _ => Some(number(5, "count")?),
            };
            let label = fields[6].parse::<DensityLabel>().map_err(|detail| DatasetError::Parse {
                line,
                field: "label",
                detail,
            })?;
            manifest.push_at(
                BlockAnnotation {
                    frame_id: fields[0].to_string(),
                    block,
                    person_count,
                    label,
                },
                line,
            )?;
        }
        Ok(manifest)
    }

    fn parse_directive(&mut self, name: &str, args: &[&str], line: usize) -> Result<()> {
        match (name, args) {
            ("source", [tag]) => self.source = Some(tag.to_string()),
            ("block_size", [n]) => {
                let size = n.parse::<u32>().ok().filter(|&s| s > 0).ok_or_else(|| DatasetError::Parse {
                    line,
                    field: "block_size",
                    detail: format!("{n:?} is not a positive integer"),
                })?;
                self.block_size = Some(size);
            }
            _ => {
                return Err(DatasetError::Parse {
                    line,
                    field: "directive",
                    detail: format!("unknown or malformed @{name}"),
                })
            }
        }
        Ok(())
    }

    /// Checks that every frame exists and contains its annotated blocks.
    pub fn validate_frames(&self) -> Result<()> {
        for entry in &self.entries {
            let path = self.frame_path(&entry.frame_id);
            if !path.is_file() {
                return Err(DatasetError::MissingFrame(path.display().to_string()));
            }
            let (width, height) = image::image_dimensions(&path).map_err(|e| {
                DatasetError::Imaging(crate::imaging::ImagingError::CorruptImage(format!(
                    "{}: {e}",
                    path.display()
                )))
            })?;
            for a in &entry.annotations {
                if !a.block.fits_in(width, height) {
                    return Err(DatasetError::BlockOutsideFrame {
                        frame: entry.frame_id.clone(),
                        x: a.block.x,
                        y: a.block.y,
                        w: a.block.w,
                        h: a.block.h,
                        width,
                        height,
                    });
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal manifest.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(source) = &self.source {
            writeln!(out, "@source {source}").unwrap();
        }
        if let Some(size) = self.block_size {
            writeln!(out, "@block_size {size}").unwrap();
        }
        for a in self.annotations() {
            let count = a.person_count.map_or_else(|| "-".to_string(), |c| c.to_string());
            writeln!(
                out,
                "{} {} {} {} {} {} {}",
                a.frame_id, a.block.x, a.block.y, a.block.w, a.block.h, count, a.label
            )
            .unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// A manifest holding only the given frames, in this manifest's order.
    pub fn subset(&self, frame_ids: &HashSet<&str>) -> Manifest {
        Manifest {
            root: self.root.clone(),
            source: self.source.clone(),
            block_size: self.block_size,
            entries: self
                .entries
                .iter()
                .filter(|e| frame_ids.contains(e.frame_id.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Per-label annotation counts.
    pub fn label_histogram(&self) -> HashMap<DensityLabel, usize> {
        let mut counts = HashMap::new();
        for a in self.annotations() {
            *counts.entry(a.label).or_default() += 1;
        }
        counts
    }
}

/// Reads, parses and validates a manifest. Frame paths resolve relative to
/// the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = Manifest::parse(&text, root)?;
    manifest.validate_frames()?;
    Ok(manifest)
}
