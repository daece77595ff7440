//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "CLBPSVM" | u32 version
//! feature config: u8 descriptor | f64 radius | u32 points | u8 mapping
//!                 | u8 scheme | u32 glcm levels | u32 block | u32 cell | f64 overlap
//! training: f64 C | u8 kernel (0 linear, 1 rbf) | f64 gamma | f64 tol
//!           | u64 max passes | u64 seed
//! grid: u8 present [| u32 nC | f64 * nC | u32 ngamma | f64 * ngamma | u32 folds]
//! u32 dim | u32 nclasses | u8 * nclasses
//! u32 npairs, then per pair:
//!   u8 positive | u8 negative | f64 bias | u8 converged | u32 nsv
//!   | f64 * nsv coefficients | f64 * (nsv * dim) support vectors
//! u32 CRC-32 of everything above
//! ```

use std::fs;
use std::path::Path;

use super::grid::GridConfig;
use super::kernel::KernelSpec;
use super::multiclass::{MulticlassModel, PairModel};
use super::smo::{BinaryModel, SmoParams};
use super::{Result, SvmError};
use crate::dataset::DensityLabel;
use crate::descriptor::{ClbpParams, Mapping, Scheme};
use crate::pipeline::{DescriptorKind, FeatureConfig};

pub const MAGIC: &[u8; 7] = b"CLBPSVM";
pub const FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("model section exceeds u32 range"));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| SvmError::Format("unexpected end of model data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| SvmError::Format("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn label(&mut self) -> Result<DensityLabel> {
        let i = self.u8()?;
        DensityLabel::from_index(i as usize).ok_or_else(|| SvmError::Format(format!("unknown class index {i}")))
    }
}

fn descriptor_code(kind: DescriptorKind) -> u8 {
    match kind {
        DescriptorKind::Clbp => 0,
        DescriptorKind::Lbp => 1,
        DescriptorKind::Glcm => 2,
    }
}

/// Serializes a model into a byte buffer.
pub fn write_model(model: &MulticlassModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);

    let f = &model.features;
    w.u8(descriptor_code(f.descriptor));
    w.f64(f.clbp.radius);
    w.u32(f.clbp.points);
    w.u8(matches!(f.clbp.mapping, Mapping::Riu2) as u8);
    w.u8(matches!(f.clbp.scheme, Scheme::Joint) as u8);
    w.u32(f.glcm_levels);
    w.u32(f.block_size);
    w.u32(f.cell_size);
    w.f64(f.overlap);

    let p = &model.params;
    w.f64(p.c);
    match p.kernel {
        KernelSpec::Linear => {
            w.u8(0);
            w.f64(0.0);
        }
        KernelSpec::Rbf { gamma } => {
            w.u8(1);
            w.f64(gamma);
        }
    }
    w.f64(p.tol);
    w.u64(p.max_passes as u64);
    w.u64(p.seed);

    match &model.grid {
        None => w.u8(0),
        Some(g) => {
            w.u8(1);
            w.len(g.c_grid.len());
            g.c_grid.iter().for_each(|&v| w.f64(v));
            w.len(g.gamma_grid.len());
            g.gamma_grid.iter().for_each(|&v| w.f64(v));
            w.len(g.folds);
        }
    }

    w.len(model.dim);
    w.len(model.classes.len());
    for c in &model.classes {
        w.u8(c.index() as u8);
    }
    w.len(model.pairwise.len());
    for pair in &model.pairwise {
        w.u8(pair.positive.index() as u8);
        w.u8(pair.negative.index() as u8);
        w.f64(pair.model.bias);
        w.u8(pair.model.converged as u8);
        w.len(pair.model.coefs.len());
        pair.model.coefs.iter().for_each(|&v| w.f64(v));
        for sv in &pair.model.support_vectors {
            sv.iter().for_each(|&v| w.f64(v));
        }
    }
    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    w.0
}

/// Parses a model written by [`write_model`].
pub fn read_model(bytes: &[u8]) -> Result<MulticlassModel> {
    if bytes.len() < MAGIC.len() + 8 {
        return Err(SvmError::ChecksumMismatch);
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(SvmError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[MAGIC.len()..MAGIC.len() + 4].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(SvmError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(SvmError::ChecksumMismatch);
    }

    let mut r = Reader {
        buf: body,
        pos: MAGIC.len() + 4,
    };
    let descriptor = match r.u8()? {
        0 => DescriptorKind::Clbp,
        1 => DescriptorKind::Lbp,
        2 => DescriptorKind::Glcm,
        d => return Err(SvmError::Format(format!("unknown descriptor code {d}"))),
    };
    let radius = r.f64()?;
    let points = r.u32()?;
    let mapping = if r.u8()? == 1 { Mapping::Riu2 } else { Mapping::Full };
    let scheme = if r.u8()? == 1 { Scheme::Joint } else { Scheme::Concat };
    let features = FeatureConfig {
        descriptor,
        clbp: ClbpParams {
            radius,
            points,
            mapping,
            scheme,
        },
        glcm_levels: r.u32()?,
        block_size: r.u32()?,
        cell_size: r.u32()?,
        overlap: r.f64()?,
    };

    let c = r.f64()?;
    let kernel_code = r.u8()?;
    let gamma = r.f64()?;
    let kernel = match kernel_code {
        0 => KernelSpec::Linear,
        1 => KernelSpec::Rbf { gamma },
        k => return Err(SvmError::Format(format!("unknown kernel code {k}"))),
    };
    let params = SmoParams {
        c,
        kernel,
        tol: r.f64()?,
        max_passes: r.u64()? as usize,
        seed: r.u64()?,
    };

    let grid = match r.u8()? {
        0 => None,
        _ => {
            let nc = r.u32()? as usize;
            let c_grid = r.f64s(nc)?;
            let ng = r.u32()? as usize;
            let gamma_grid = r.f64s(ng)?;
            Some(GridConfig {
                c_grid,
                gamma_grid,
                folds: r.u32()? as usize,
            })
        }
    };

    let dim = r.u32()? as usize;
    let nclasses = r.u32()? as usize;
    let classes = (0..nclasses).map(|_| r.label()).collect::<Result<Vec<_>>>()?;
    let npairs = r.u32()? as usize;
    let mut pairwise = Vec::with_capacity(npairs.min(16));
    for _ in 0..npairs {
        let positive = r.label()?;
        let negative = r.label()?;
        let bias = r.f64()?;
        let converged = r.u8()? != 0;
        let nsv = r.u32()? as usize;
        let coefs = r.f64s(nsv)?;
        let support_vectors = (0..nsv).map(|_| r.f64s(dim)).collect::<Result<Vec<_>>>()?;
        pairwise.push(PairModel {
            positive,
            negative,
            model: BinaryModel {
                support_vectors,
                coefs,
                bias,
                kernel,
                converged,
            },
        });
    }
    if r.pos != body.len() {
        return Err(SvmError::Format(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(MulticlassModel {
        format_version: version,
        classes,
        pairwise,
        params,
        grid,
        features,
        dim,
    })
}

pub fn save_model(model: &MulticlassModel, path: &Path) -> Result<()> {
    fs::write(path, write_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MulticlassModel> {
    read_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{predict, train_multiclass};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> MulticlassModel {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for c in DensityLabel::ALL {
            for _ in 0..12 {
                xs.push((0..3).map(|d| c.index() as f64 * (d + 1) as f64 + rng.random_range(-0.8..0.8)).collect());
                ys.push(c);
            }
        }
        let params = SmoParams {
            c: 5.0,
            kernel: KernelSpec::Rbf { gamma: 0.3 },
            ..SmoParams::default()
        };
        let mut m = train_multiclass(&xs, &ys, &params).unwrap();
        m.grid = Some(GridConfig::default());
        m
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..10.0)).collect();
            assert_eq!(predict(&m, &x).unwrap(), predict(&back, &x).unwrap());
        }
        assert_eq!(write_model(&back), write_model(&m));
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = write_model(&model());
        for cut in [0, 5, 11, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(read_model(&bytes[..cut]), Err(SvmError::ChecksumMismatch)), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[40] ^= 0x10;
        assert!(matches!(read_model(&flipped), Err(SvmError::ChecksumMismatch)));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(read_model(&magic), Err(SvmError::BadMagic)));
    }

    #[test]
    fn future_version_is_named() {
        let mut bytes = write_model(&model());
        bytes[7..11].copy_from_slice(&7u32.to_le_bytes());
        let err = read_model(&bytes).unwrap_err();
        assert!(matches!(err, SvmError::VersionMismatch { found: 7, supported: 1 }));
        assert!(err.to_string().contains('7'));
    }
}
