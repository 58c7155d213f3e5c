//! Dataset container: labeled motion records plus the header (skeleton,
//! label vocabulary, per-feature normalization statistics) and a versioned
//! binary layout.
//!
//! Byte layout (version 1, little endian, all floats f64 bits):
//!   magic "KMDS", version u32
//!   fps f64
//!   skeleton: id u32, joint_count u32, parent u32 * J, offset f64 * 3J,
//!             keyjoint_indices u32 * 6, foot_indices u32 * 2
//!   labels: count u32, then length-prefixed utf8 strings
//!   stats: mean_c, std_c, mean_x, std_x as length-prefixed f64 arrays
//!   records: count u64, then per record:
//!     action_label u32, body_scale f64, n_frames u32, per frame:
//!     root_position f64 * 3, root_yaw f64, local_offsets f64 * 45

use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::motion::{
    encode_fullbody, extract_keyjoints, MotionSequence, PoseFrame, Skeleton, FULLBODY_DIM,
    KEYJOINT_DIM,
};

pub const DATASET_MAGIC: &[u8; 4] = b"KMDS";
pub const DATASET_VERSION: u32 = 1;

/// Features whose raw standard deviation falls below this floor keep a unit
/// divisor instead (standardization would otherwise explode).
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean_c: Vec<f64>,
    pub std_c: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub std_x: Vec<f64>,
}

impl NormalizationStats {
    /// Two-pass mean/std over the concatenated frame rows of all records.
    pub fn compute(skeleton: &Skeleton<f64>, records: &[MotionSequence<f64>]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut acc_c = FeatureAccumulator::new(KEYJOINT_DIM);
        let mut acc_x = FeatureAccumulator::new(FULLBODY_DIM);
        let mut mats = Vec::with_capacity(records.len());
        for seq in records {
            let c = extract_keyjoints(skeleton, seq)?;
            let x = encode_fullbody(skeleton, seq)?;
            acc_c.add_mean(&c.frames);
            acc_x.add_mean(&x.frames);
            mats.push((c.frames, x.frames));
        }
        let mean_c = acc_c.mean();
        let mean_x = acc_x.mean();
        for (c, x) in &mats {
            acc_c.add_var(c, &mean_c);
            acc_x.add_var(x, &mean_x);
        }
        Ok(NormalizationStats {
            std_c: acc_c.std(),
            std_x: acc_x.std(),
            mean_c,
            mean_x,
        })
    }

    pub fn standardize_c(&self, m: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
        standardize(m, &self.mean_c, &self.std_c)
    }

    pub fn destandardize_c(&self, m: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
        destandardize(m, &self.mean_c, &self.std_c)
    }

    pub fn standardize_x(&self, m: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
        standardize(m, &self.mean_x, &self.std_x)
    }

    pub fn destandardize_x(&self, m: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
        destandardize(m, &self.mean_x, &self.std_x)
    }
}

pub fn standardize(
    m: &ndarray::Array2<f64>,
    mean: &[f64],
    std: &[f64],
) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn(m.dim(), |(i, j)| (m[(i, j)] - mean[j]) / std[j])
}

pub fn destandardize(
    m: &ndarray::Array2<f64>,
    mean: &[f64],
    std: &[f64],
) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn(m.dim(), |(i, j)| m[(i, j)] * std[j] + mean[j])
}

struct FeatureAccumulator {
    sum: Vec<f64>,
    sq: Vec<f64>,
    count: f64,
    var_count: f64,
}

impl FeatureAccumulator {
    fn new(dim: usize) -> Self {
        FeatureAccumulator {
            sum: vec![0.0; dim],
            sq: vec![0.0; dim],
            count: 0.0,
            var_count: 0.0,
        }
    }
    fn add_mean(&mut self, m: &ndarray::Array2<f64>) {
        for row in m.rows() {
            for (j, v) in row.iter().enumerate() {
                self.sum[j] += v;
            }
            self.count += 1.0;
        }
    }
    fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.count).collect()
    }
    fn add_var(&mut self, m: &ndarray::Array2<f64>, mean: &[f64]) {
        for row in m.rows() {
            for (j, v) in row.iter().enumerate() {
                let d = v - mean[j];
                self.sq[j] += d * d;
            }
            self.var_count += 1.0;
        }
    }
    fn std(&self) -> Vec<f64> {
        self.sq
            .iter()
            .map(|s| {
                let v = (s / self.var_count).sqrt();
                if v < STD_FLOOR {
                    1.0
                } else {
                    v
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub version: u32,
    pub fps: f64,
    pub skeleton: Skeleton<f64>,
    pub labels: Vec<String>,
    pub stats: NormalizationStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub records: Vec<MotionSequence<f64>>,
}

/// Serialize records with freshly computed statistics.
pub fn encode_dataset(
    skeleton: &Skeleton<f64>,
    labels: &[String],
    records: &[MotionSequence<f64>],
) -> Result<Vec<u8>> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let stats = NormalizationStats::compute(skeleton, records)?;
    let mut w = Writer::new();
    w.bytes(DATASET_MAGIC);
    w.u32(DATASET_VERSION);
    w.f64(records[0].fps);
    w.u32(skeleton.id);
    w.u32(skeleton.joint_count() as u32);
    for &p in &skeleton.parent {
        w.u32(p as u32);
    }
    for o in &skeleton.offset {
        for &v in o {
            w.f64(v);
        }
    }
    for &k in &skeleton.keyjoint_indices {
        w.u32(k as u32);
    }
    for &f in &skeleton.foot_indices {
        w.u32(f as u32);
    }
    w.u32(labels.len() as u32);
    for l in labels {
        w.string(l);
    }
    w.f64_slice(&stats.mean_c);
    w.f64_slice(&stats.std_c);
    w.f64_slice(&stats.mean_x);
    w.f64_slice(&stats.std_x);
    w.u64(records.len() as u64);
    for seq in records {
        w.u32(seq.action_label);
        w.f64(seq.body_scale);
        w.u32(seq.len() as u32);
        for f in &seq.frames {
            for &v in &f.root_position {
                w.f64(v);
            }
            w.f64(f.root_yaw);
            for o in &f.local_offsets {
                for &v in o {
                    w.f64(v);
                }
            }
        }
    }
    Ok(w.into_bytes())
}

pub fn decode_dataset(bytes: &[u8]) -> Result<DatasetFile> {
    let mut r = Reader::new(bytes);
    let magic = r.bytes(4)?;
    if magic != DATASET_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let fps = r.f64()?;
    let skel_id = r.u32()?;
    let joint_count = r.u32()? as usize;
    let mut parent = Vec::with_capacity(joint_count);
    for _ in 0..joint_count {
        parent.push(r.u32()? as usize);
    }
    let mut offset = Vec::with_capacity(joint_count);
    for _ in 0..joint_count {
        offset.push([r.f64()?, r.f64()?, r.f64()?]);
    }
    let mut keyjoint_indices = [0usize; 6];
    for k in keyjoint_indices.iter_mut() {
        *k = r.u32()? as usize;
    }
    let mut foot_indices = [0usize; 2];
    for f in foot_indices.iter_mut() {
        *f = r.u32()? as usize;
    }
    let skeleton = Skeleton {
        id: skel_id,
        parent,
        offset,
        keyjoint_indices,
        foot_indices,
    };
    skeleton.validate()?;
    let n_labels = r.u32()? as usize;
    let mut labels = Vec::with_capacity(n_labels);
    for _ in 0..n_labels {
        labels.push(r.string()?);
    }
    let stats = NormalizationStats {
        mean_c: r.f64_vec()?,
        std_c: r.f64_vec()?,
        mean_x: r.f64_vec()?,
        std_x: r.f64_vec()?,
    };
    if stats.mean_c.len() != KEYJOINT_DIM
        || stats.std_c.len() != KEYJOINT_DIM
        || stats.mean_x.len() != FULLBODY_DIM
        || stats.std_x.len() != FULLBODY_DIM
    {
        return Err(Error::Format("statistics have wrong dimensions".into()));
    }
    let n_records = r.u64()? as usize;
    if n_records == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut records = Vec::with_capacity(n_records);
    for _ in 0..n_records {
        let action_label = r.u32()?;
        let body_scale = r.f64()?;
        let n = r.u32()? as usize;
        let mut frames = Vec::with_capacity(n);
        for _ in 0..n {
            let root_position = [r.f64()?, r.f64()?, r.f64()?];
            let root_yaw = r.f64()?;
            let mut local_offsets = Vec::with_capacity(joint_count - 1);
            for _ in 0..joint_count - 1 {
                local_offsets.push([r.f64()?, r.f64()?, r.f64()?]);
            }
            frames.push(PoseFrame {
                root_position,
                root_yaw,
                local_offsets,
            });
        }
        records.push(MotionSequence {
            skeleton_id: skel_id,
            fps,
            frames,
            action_label,
            body_scale,
        });
    }
    if !r.is_done() {
        return Err(Error::Format(format!(
            "{} trailing bytes after records",
            bytes.len() - r.offset()
        )));
    }
    // Stored statistics must match a recomputation over the stored records.
    let recomputed = NormalizationStats::compute(&skeleton, &records)?;
    if recomputed != stats {
        return Err(Error::StatsInconsistent(
            "stored normalization statistics do not match records".into(),
        ));
    }
    Ok(DatasetFile {
        header: DatasetHeader {
            version,
            fps,
            skeleton,
            labels,
            stats,
        },
        records,
    })
}

pub fn write_dataset<P: AsRef<Path>>(
    path: P,
    skeleton: &Skeleton<f64>,
    labels: &[String],
    records: &[MotionSequence<f64>],
) -> Result<()> {
    let bytes = encode_dataset(skeleton, labels, records)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_dataset<P: AsRef<Path>>(path: P) -> Result<DatasetFile> {
    let bytes = std::fs::read(path)?;
    decode_dataset(&bytes)
}
