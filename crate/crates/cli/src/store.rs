//! On-disk formats. Three artifact kinds share one shape: a small
//! human-readable manifest plus a flat little-endian binary blob named
//! `<manifest>.blob`, linked by a SHA-256 checksum. Feature blobs hold
//! 32-bit floats; descriptor and model blobs hold 64-bit floats so pooled
//! vectors round-trip bit-exactly. A plain-text tabular import is also
//! provided for features produced outside this toolchain.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use svmp_core::dataset::BagDataset;
use svmp_core::joint::ActionClassifierSet;
use svmp_core::pool::{FeatureBag, NegativeBag};
use svmp_core::svm::Hyperplane;

use crate::error::StoreError;

pub const DATASET_MAGIC: &str = "SVMPBAGS";
pub const DESCRIPTOR_MAGIC: &str = "SVMPDESC";
pub const MODEL_MAGIC: &str = "SVMPMODL";
pub const FORMAT_VERSION: u32 = 1;

type Result<T> = std::result::Result<T, StoreError>;

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the destination directory followed
/// by an atomic rename, so a crashed run never leaves a half-written
/// artifact under the target name.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| StoreError::IoFailure(e.error))?;
    Ok(())
}

/// Atomically replaces `path` with the given text (reports, mostly).
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn blob_path(manifest_path: &Path) -> PathBuf {
    let mut name = manifest_path.file_name().unwrap_or_default().to_os_string();
    name.push(".blob");
    manifest_path.with_file_name(name)
}

fn blob_name(manifest_path: &Path) -> String {
    blob_path(manifest_path).file_name().unwrap_or_default().to_string_lossy().into_owned()
}

fn encode_f32(values: impl Iterator<Item = f64>, out: &mut Vec<u8>) {
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn encode_f64(values: impl Iterator<Item = f64>, out: &mut Vec<u8>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn decode_f32(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect()
}

fn decode_f64(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect()
}

/// Line-oriented manifest reader: `key: value` headers followed by
/// repeated records.
struct Manifest {
    lines: Vec<String>,
    cursor: usize,
}

impl Manifest {
    fn parse(text: &str, magic: &str) -> Result<Self> {
        let lines: Vec<String> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        let mut m = Manifest { lines, cursor: 0 };
        let found = m.required("format")?;
        if found != magic {
            return Err(StoreError::FormatVersionMismatch(format!(
                "expected format {magic}, found {found}"
            )));
        }
        let version = m.required("version")?;
        if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(StoreError::FormatVersionMismatch(format!(
                "unsupported version {version}, this build reads version {FORMAT_VERSION}"
            )));
        }
        Ok(m)
    }

    /// Next header of the form `key: value`; the manifest's key order is
    /// fixed by the writer, so reads are sequential.
    fn required(&mut self, key: &str) -> Result<String> {
        let line = self
            .lines
            .get(self.cursor)
            .ok_or_else(|| StoreError::CorruptFile(format!("missing header '{key}'")))?;
        let value = line.strip_prefix(&format!("{key}:")).ok_or_else(|| {
            StoreError::CorruptFile(format!("expected header '{key}', found '{line}'"))
        })?;
        self.cursor += 1;
        Ok(value.trim().to_string())
    }

    fn required_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.required(key)?;
        raw.parse().map_err(|_| {
            StoreError::CorruptFile(format!("header '{key}' has unparseable value '{raw}'"))
        })
    }

    /// Remaining record lines with the given prefix.
    fn records(&mut self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(line) = self.lines.get(self.cursor) {
            match line.strip_prefix(&format!("{prefix}:")) {
                Some(rest) => {
                    out.push(rest.trim().to_string());
                    self.cursor += 1;
                }
                None => break,
            }
        }
        out
    }
}

/// Reads the blob next to the manifest and verifies it: checksum failures
/// (including truncation) are corruption; a checksum-clean blob whose
/// size disagrees with the manifest geometry means the manifest itself is
/// wrong for this blob.
fn read_blob(
    manifest_path: &Path,
    name: &str,
    sha: &str,
    expected_len: usize,
) -> Result<Vec<u8>> {
    let path = manifest_path.with_file_name(name);
    let bytes = fs::read(&path)?;
    if sha256_hex(&bytes) != sha {
        return Err(StoreError::CorruptFile(format!(
            "checksum mismatch for blob {name} (truncated or altered)"
        )));
    }
    if bytes.len() != expected_len {
        return Err(StoreError::FormatVersionMismatch(format!(
            "manifest geometry expects {expected_len} blob bytes, blob has {}",
            bytes.len()
        )));
    }
    Ok(bytes)
}

fn single_line(text: &str) -> String {
    text.replace(['\n', '\r'], "; ")
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

pub fn save_dataset(ds: &BagDataset, path: &Path) -> Result<()> {
    ds.validate().map_err(|e| StoreError::CorruptFile(format!("refusing to save: {e}")))?;
    let mut blob = Vec::new();
    for bag in &ds.sequences {
        for frame in &bag.frames {
            encode_f32(frame.iter().copied(), &mut blob);
        }
    }
    for frame in &ds.negative.frames {
        encode_f32(frame.iter().copied(), &mut blob);
    }

    let mut text = String::new();
    text.push_str(&format!("format: {DATASET_MAGIC}\n"));
    text.push_str(&format!("version: {FORMAT_VERSION}\n"));
    text.push_str(&format!("dimension: {}\n", ds.dimension));
    text.push_str(&format!("class_count: {}\n", ds.class_count));
    text.push_str(&format!("sequence_count: {}\n", ds.sequences.len()));
    text.push_str(&format!("provenance: {}\n", single_line(&ds.provenance)));
    text.push_str(&format!("negative_tag: {}\n", single_line(&ds.negative.source_tag)));
    text.push_str(&format!("blob: {}\n", blob_name(path)));
    text.push_str(&format!("blob_sha256: {}\n", sha256_hex(&blob)));
    let mut offset = 0usize;
    for bag in &ds.sequences {
        text.push_str(&format!(
            "sequence: {} {} {} {}\n",
            bag.sequence_id,
            bag.label,
            bag.frames.len(),
            offset
        ));
        offset += bag.frames.len();
    }
    text.push_str(&format!("negative: {} {}\n", ds.negative.frames.len(), offset));

    write_atomic(&blob_path(path), &blob)?;
    write_atomic(path, text.as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<BagDataset> {
    let text = fs::read_to_string(path)?;
    let mut m = Manifest::parse(&text, DATASET_MAGIC)?;
    let dimension: usize = m.required_parsed("dimension")?;
    let class_count: usize = m.required_parsed("class_count")?;
    let sequence_count: usize = m.required_parsed("sequence_count")?;
    let provenance = m.required("provenance")?;
    let neg_tag = m.required("negative_tag")?;
    let blob_name = m.required("blob")?;
    let sha = m.required("blob_sha256")?;

    struct Row {
        id: String,
        label: usize,
        count: usize,
        offset: usize,
    }
    let mut rows = Vec::new();
    for rec in m.records("sequence") {
        let parts: Vec<&str> = rec.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(StoreError::CorruptFile(format!("bad sequence record '{rec}'")));
        }
        rows.push(Row {
            id: parts[0].to_string(),
            label: parts[1]
                .parse()
                .map_err(|_| StoreError::CorruptFile(format!("bad label in '{rec}'")))?,
            count: parts[2]
                .parse()
                .map_err(|_| StoreError::CorruptFile(format!("bad count in '{rec}'")))?,
            offset: parts[3]
                .parse()
                .map_err(|_| StoreError::CorruptFile(format!("bad offset in '{rec}'")))?,
        });
    }
    if rows.len() != sequence_count {
        return Err(StoreError::CorruptFile(format!(
            "manifest lists {} sequences, header says {sequence_count}",
            rows.len()
        )));
    }
    let neg_records = m.records("negative");
    let neg = neg_records
        .first()
        .ok_or_else(|| StoreError::CorruptFile("missing negative record".into()))?;
    let parts: Vec<&str> = neg.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(StoreError::CorruptFile(format!("bad negative record '{neg}'")));
    }
    let neg_count: usize = parts[0]
        .parse()
        .map_err(|_| StoreError::CorruptFile("bad negative count".into()))?;
    let neg_offset: usize = parts[1]
        .parse()
        .map_err(|_| StoreError::CorruptFile("bad negative offset".into()))?;

    let total_frames = neg_offset + neg_count;
    let bytes = read_blob(path, &blob_name, &sha, total_frames * dimension * 4)?;
    let values = decode_f32(&bytes);

    let frame = |offset: usize, k: usize| -> Vec<f64> {
        values[(offset + k) * dimension..(offset + k + 1) * dimension].to_vec()
    };
    let mut sequences = Vec::with_capacity(rows.len());
    let mut expected_offset = 0usize;
    for row in &rows {
        if row.offset != expected_offset {
            return Err(StoreError::CorruptFile(format!(
                "sequence {} offset {} does not follow layout (expected {expected_offset})",
                row.id, row.offset
            )));
        }
        sequences.push(FeatureBag {
            sequence_id: row.id.clone(),
            label: row.label,
            frames: (0..row.count).map(|k| frame(row.offset, k)).collect(),
        });
        expected_offset += row.count;
    }
    if neg_offset != expected_offset {
        return Err(StoreError::CorruptFile("negative offset does not follow layout".into()));
    }

    let ds = BagDataset {
        dimension,
        class_count,
        sequences,
        negative: NegativeBag {
            frames: (0..neg_count).map(|k| frame(neg_offset, k)).collect(),
            source_tag: neg_tag,
        },
        provenance,
        split_assignments: None,
    };
    ds.validate().map_err(|e| StoreError::CorruptFile(e.to_string()))?;
    Ok(ds)
}

// ---------------------------------------------------------------------------
// Descriptor files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRecord {
    pub sequence_id: String,
    pub label: usize,
    /// Pooling metadata; absent for methods without a C-growth loop.
    pub satisfied: Option<bool>,
    pub final_c: Option<f64>,
    pub achieved_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub method: String,
    pub dimension: usize,
    pub class_count: usize,
    /// Resolved configuration echo, sufficient to reproduce the run.
    pub config_echo: String,
    pub records: Vec<DescriptorRecord>,
    pub vectors: Vec<Vec<f64>>,
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "-".to_string())
}

fn parse_opt_f64(s: &str) -> Result<Option<f64>> {
    if s == "-" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| StoreError::CorruptFile(format!("bad float field '{s}'")))
}

pub fn save_descriptors(set: &DescriptorSet, path: &Path) -> Result<()> {
    if set.records.len() != set.vectors.len() {
        return Err(StoreError::CorruptFile(format!(
            "{} records but {} vectors",
            set.records.len(),
            set.vectors.len()
        )));
    }
    let mut blob = Vec::new();
    for v in &set.vectors {
        if v.len() != set.dimension {
            return Err(StoreError::CorruptFile(format!(
                "vector of length {} in a set of dimension {}",
                v.len(),
                set.dimension
            )));
        }
        encode_f64(v.iter().copied(), &mut blob);
    }
    let mut text = String::new();
    text.push_str(&format!("format: {DESCRIPTOR_MAGIC}\n"));
    text.push_str(&format!("version: {FORMAT_VERSION}\n"));
    text.push_str(&format!("method: {}\n", set.method));
    text.push_str(&format!("dimension: {}\n", set.dimension));
    text.push_str(&format!("class_count: {}\n", set.class_count));
    text.push_str(&format!("count: {}\n", set.records.len()));
    text.push_str(&format!("config: {}\n", single_line(&set.config_echo)));
    text.push_str(&format!("blob: {}\n", blob_name(path)));
    text.push_str(&format!("blob_sha256: {}\n", sha256_hex(&blob)));
    for r in &set.records {
        let satisfied = match r.satisfied {
            Some(true) => "1",
            Some(false) => "0",
            None => "-",
        };
        text.push_str(&format!(
            "row: {} {} {} {} {}\n",
            r.sequence_id,
            r.label,
            satisfied,
            fmt_opt_f64(r.final_c),
            fmt_opt_f64(r.achieved_fraction)
        ));
    }
    write_atomic(&blob_path(path), &blob)?;
    write_atomic(path, text.as_bytes())
}

pub fn load_descriptors(path: &Path) -> Result<DescriptorSet> {
    let text = fs::read_to_string(path)?;
    let mut m = Manifest::parse(&text, DESCRIPTOR_MAGIC)?;
    let method = m.required("method")?;
    let dimension: usize = m.required_parsed("dimension")?;
    let class_count: usize = m.required_parsed("class_count")?;
    let count: usize = m.required_parsed("count")?;
    let config_echo = m.required("config")?;
    let blob_name = m.required("blob")?;
    let sha = m.required("blob_sha256")?;

    let mut records = Vec::with_capacity(count);
    for rec in m.records("row") {
        let parts: Vec<&str> = rec.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(StoreError::CorruptFile(format!("bad row record '{rec}'")));
        }
        records.push(DescriptorRecord {
            sequence_id: parts[0].to_string(),
            label: parts[1]
                .parse()
                .map_err(|_| StoreError::CorruptFile(format!("bad label in '{rec}'")))?,
            satisfied: match parts[2] {
                "1" => Some(true),
                "0" => Some(false),
                "-" => None,
                other => {
                    return Err(StoreError::CorruptFile(format!(
                        "bad satisfied flag '{other}'"
                    )))
                }
            },
            final_c: parse_opt_f64(parts[3])?,
            achieved_fraction: parse_opt_f64(parts[4])?,
        });
    }
    if records.len() != count {
        return Err(StoreError::CorruptFile(format!(
            "manifest lists {} rows, header says {count}",
            records.len()
        )));
    }
    let bytes = read_blob(path, &blob_name, &sha, count * dimension * 8)?;
    let values = decode_f64(&bytes);
    let vectors = (0..count)
        .map(|i| values[i * dimension..(i + 1) * dimension].to_vec())
        .collect();
    Ok(DescriptorSet { method, dimension, class_count, config_echo, records, vectors })
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

/// A trained model: per-class hyperplanes over descriptor space, the
/// training-split feature mean, and the pooling configuration needed to
/// describe new sequences the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub classifiers: ActionClassifierSet,
    pub feature_mean: Vec<f64>,
    pub pool_echo: String,
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    let desc_dim = model.classifiers.descriptor_dimension();
    let mut blob = Vec::new();
    encode_f64(model.feature_mean.iter().copied(), &mut blob);
    for h in &model.classifiers.classes {
        encode_f64(h.weights.iter().copied(), &mut blob);
        blob.extend_from_slice(&h.bias.to_le_bytes());
    }
    let ids: Vec<String> =
        model.classifiers.class_ids.iter().map(|i| i.to_string()).collect();
    let mut text = String::new();
    text.push_str(&format!("format: {MODEL_MAGIC}\n"));
    text.push_str(&format!("version: {FORMAT_VERSION}\n"));
    text.push_str(&format!("feature_dimension: {}\n", model.feature_mean.len()));
    text.push_str(&format!("descriptor_dimension: {desc_dim}\n"));
    text.push_str(&format!("class_count: {}\n", model.classifiers.classes.len()));
    text.push_str(&format!("class_ids: {}\n", ids.join(" ")));
    text.push_str(&format!("pool_config: {}\n", single_line(&model.pool_echo)));
    text.push_str(&format!("blob: {}\n", blob_name(path)));
    text.push_str(&format!("blob_sha256: {}\n", sha256_hex(&blob)));
    write_atomic(&blob_path(path), &blob)?;
    write_atomic(path, text.as_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path)?;
    let mut m = Manifest::parse(&text, MODEL_MAGIC)?;
    let feature_dimension: usize = m.required_parsed("feature_dimension")?;
    let descriptor_dimension: usize = m.required_parsed("descriptor_dimension")?;
    let class_count: usize = m.required_parsed("class_count")?;
    let ids_raw = m.required("class_ids")?;
    let pool_echo = m.required("pool_config")?;
    let blob_name = m.required("blob")?;
    let sha = m.required("blob_sha256")?;

    let class_ids: Vec<usize> = ids_raw
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| StoreError::CorruptFile("bad class id list".into()))?;
    if class_ids.len() != class_count {
        return Err(StoreError::CorruptFile("class id count disagrees with header".into()));
    }
    let expected = (feature_dimension + class_count * (descriptor_dimension + 1)) * 8;
    let bytes = read_blob(path, &blob_name, &sha, expected)?;
    let values = decode_f64(&bytes);
    let feature_mean = values[..feature_dimension].to_vec();
    let mut classes = Vec::with_capacity(class_count);
    let mut at = feature_dimension;
    for _ in 0..class_count {
        classes.push(Hyperplane {
            weights: values[at..at + descriptor_dimension].to_vec(),
            bias: values[at + descriptor_dimension],
        });
        at += descriptor_dimension + 1;
    }
    Ok(ModelFile {
        classifiers: ActionClassifierSet { classes, class_ids },
        feature_mean,
        pool_echo,
    })
}

// ---------------------------------------------------------------------------
// Tabular import
// ---------------------------------------------------------------------------

/// Plain-text interchange: one frame per row as
/// `<sequence_id> <label> <v1> <v2> ...`, whitespace-separated, `#`
/// comments allowed. Rows labeled `-1` form the shared negative bag.
/// Values are snapped to 32-bit float precision on import so a
/// subsequent save/load round trip is exact.
pub fn load_tabular(path: &Path) -> Result<BagDataset> {
    let text = fs::read_to_string(path)?;
    let mut order: Vec<String> = Vec::new();
    let mut bags: std::collections::HashMap<String, FeatureBag> =
        std::collections::HashMap::new();
    let mut negative: Vec<Vec<f64>> = Vec::new();
    let mut dimension = 0usize;
    let mut max_label = 0usize;

    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let id = parts
            .next()
            .ok_or_else(|| StoreError::CorruptFile(format!("line {}: empty", line_no + 1)))?
            .to_string();
        let label: i64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                StoreError::CorruptFile(format!("line {}: missing/bad label", line_no + 1))
            })?;
        let frame: Vec<f64> = parts
            .map(|s| s.parse::<f64>().map(|v| v as f32 as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                StoreError::CorruptFile(format!("line {}: bad feature value", line_no + 1))
            })?;
        if frame.is_empty() {
            return Err(StoreError::CorruptFile(format!(
                "line {}: no feature values",
                line_no + 1
            )));
        }
        if dimension == 0 {
            dimension = frame.len();
        } else if frame.len() != dimension {
            return Err(StoreError::CorruptFile(format!(
                "line {}: {} values, expected {dimension}",
                line_no + 1,
                frame.len()
            )));
        }
        if label < 0 {
            negative.push(frame);
            continue;
        }
        let label = label as usize;
        max_label = max_label.max(label);
        let bag = bags.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            FeatureBag { sequence_id: id, label, frames: Vec::new() }
        });
        if bag.label != label {
            return Err(StoreError::CorruptFile(format!(
                "line {}: sequence relabeled from {} to {label}",
                line_no + 1,
                bag.label
            )));
        }
        bag.frames.push(frame);
    }

    if negative.is_empty() {
        return Err(StoreError::CorruptFile(
            "no negative rows (label -1); a shared negative bag is required".into(),
        ));
    }
    let sequences: Vec<FeatureBag> =
        order.iter().map(|id| bags.remove(id).expect("bag recorded in order")).collect();
    let ds = BagDataset {
        dimension,
        class_count: max_label + 1,
        sequences,
        negative: NegativeBag { frames: negative, source_tag: "tabular".into() },
        provenance: format!("tabular import: {}", path.display()),
        split_assignments: None,
    };
    ds.validate().map_err(|e| StoreError::CorruptFile(e.to_string()))?;
    Ok(ds)
}

/// Loads feature data from either native manifests or plain tabular text,
/// deciding by the first line.
pub fn load_features_auto(path: &Path) -> Result<BagDataset> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_end() == format!("format: {DATASET_MAGIC}") {
        load_dataset(path)
    } else if first.starts_with("format:") {
        Err(StoreError::FormatVersionMismatch(format!(
            "file declares '{}', expected a {DATASET_MAGIC} manifest or tabular text",
            first.trim_end()
        )))
    } else {
        load_tabular(path)
    }
}
