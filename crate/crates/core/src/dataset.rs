//! Portable on-disk dataset format and its loader.
//!
//! A dataset directory holds one human-readable `manifest.json` plus one
//! small binary file per sample:
//!
//! ```text
//! manifest.json            name, payload kind, dims, classes, sample table
//! payloads/<id>.bin        one payload per sample
//! ```
//!
//! Each payload file is trivially parseable in any language:
//!
//! ```text
//! bytes 0..8    magic "RADRESN\0"
//! bytes 8..12   format version, little-endian u32 (currently 1)
//! bytes 12..16  content kind, little-endian u32 (1 = frame sequence, 2 = Doppler map)
//! then          dims as little-endian u32s
//!               kind 1: steps, antennas, range_bins, doppler_bins
//!               kind 2: steps, doppler_bins
//! then          row-major little-endian f32 values
//! ```
//!
//! The same 16-byte container header (magic, version, kind) fronts every
//! binary file this project writes — trained models use kind 3 — so one
//! sniffing reader can identify any of them.
//!
//! Values are stored in 32 bits and promoted to `f64` in memory. Loading
//! validates everything the manifest promises — unique ids, labels covered by
//! the class list, per-file headers consistent with the declared dims — and
//! reports failures with the offending sample id or path. Payload *values*
//! are only pulled off disk on demand through [`PayloadHandle`], so a
//! thousands-of-samples dataset never has to be resident at once.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{FeatureKind, FeatureMap, RdmSequence};

pub const CONTAINER_MAGIC: &[u8; 8] = b"RADRESN\0";
pub const CONTAINER_VERSION: u32 = 1;

/// What kind of payload every sample of a dataset carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    /// Range–Doppler frame sequences (steps × antennas × range × Doppler).
    Rdm,
    /// Precomputed micro-Doppler maps (steps × Doppler bins).
    Mdm,
}

impl PayloadKind {
    fn code(self) -> u32 {
        match self {
            PayloadKind::Rdm => 1,
            PayloadKind::Mdm => 2,
        }
    }

    fn from_code(code: u32) -> Option<PayloadKind> {
        match code {
            1 => Some(PayloadKind::Rdm),
            2 => Some(PayloadKind::Mdm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PayloadKind::Rdm => "rdm",
            PayloadKind::Mdm => "mdm",
        }
    }
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One sample's data.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Rdm(RdmSequence),
    Mdm(FeatureMap),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Rdm(_) => PayloadKind::Rdm,
            Payload::Mdm(_) => PayloadKind::Mdm,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            Payload::Rdm(r) => r.steps(),
            Payload::Mdm(m) => m.steps(),
        }
    }
}

/// Fixed per-dataset payload dimensions (the time axis varies per sample).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadDims {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antennas: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_bins: Option<u32>,
    pub doppler_bins: u32,
}

impl PayloadDims {
    pub fn rdm(antennas: u32, range_bins: u32, doppler_bins: u32) -> PayloadDims {
        PayloadDims { antennas: Some(antennas), range_bins: Some(range_bins), doppler_bins }
    }

    pub fn mdm(doppler_bins: u32) -> PayloadDims {
        PayloadDims { antennas: None, range_bins: None, doppler_bins }
    }

    pub fn validate(&self, kind: PayloadKind) -> Result<()> {
        match kind {
            PayloadKind::Rdm => {
                let (Some(a), Some(r)) = (self.antennas, self.range_bins) else {
                    return Err(Error::Dataset(
                        "frame-sequence datasets must declare antennas and range_bins".into(),
                    ));
                };
                if a == 0 || r == 0 || self.doppler_bins == 0 {
                    return Err(Error::Dataset("payload dims must all be ≥ 1".into()));
                }
            }
            PayloadKind::Mdm => {
                if self.antennas.is_some() || self.range_bins.is_some() {
                    return Err(Error::Dataset(
                        "Doppler-map datasets must not declare antennas or range_bins".into(),
                    ));
                }
                if self.doppler_bins == 0 {
                    return Err(Error::Dataset("doppler_bins must be ≥ 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Where a payload comes from when it is finally needed.
pub trait PayloadSource: Send + Sync + std::fmt::Debug {
    fn fetch(&self) -> Result<Payload>;
}

/// Cheap, clonable, lazily-evaluated reference to one sample's payload.
#[derive(Debug, Clone)]
pub struct PayloadHandle {
    source: Arc<dyn PayloadSource>,
}

impl PayloadHandle {
    pub fn new(source: Arc<dyn PayloadSource>) -> PayloadHandle {
        PayloadHandle { source }
    }

    /// Wrap an already-materialized payload.
    pub fn in_memory(payload: Payload) -> PayloadHandle {
        PayloadHandle { source: Arc::new(InMemorySource(payload)) }
    }

    /// Read lazily from a payload file, checking it against the declared
    /// kind and dims on every fetch.
    pub fn from_file(path: PathBuf, kind: PayloadKind, dims: PayloadDims) -> PayloadHandle {
        PayloadHandle { source: Arc::new(FileSource { path, kind, dims }) }
    }

    pub fn get(&self) -> Result<Payload> {
        self.source.fetch()
    }
}

#[derive(Debug)]
struct InMemorySource(Payload);

impl PayloadSource for InMemorySource {
    fn fetch(&self) -> Result<Payload> {
        Ok(self.0.clone())
    }
}

#[derive(Debug)]
struct FileSource {
    path: PathBuf,
    kind: PayloadKind,
    dims: PayloadDims,
}

impl PayloadSource for FileSource {
    fn fetch(&self) -> Result<Payload> {
        let payload = read_payload(&self.path)?;
        check_payload_dims(&payload, self.kind, &self.dims)
            .map_err(|e| format_err(&self.path, e.to_string()))?;
        Ok(payload)
    }
}

/// Verify a payload against a declared kind and dims (manifest declarations,
/// and trained models checking prediction inputs).
pub fn check_payload_dims(payload: &Payload, kind: PayloadKind, dims: &PayloadDims) -> Result<()> {
    if payload.kind() != kind {
        return Err(Error::Dataset(format!(
            "payload is {:?}, dataset declares {:?}",
            payload.kind(),
            kind
        )));
    }
    match payload {
        Payload::Rdm(r) => {
            let want = (
                dims.antennas.unwrap_or(0) as usize,
                dims.range_bins.unwrap_or(0) as usize,
                dims.doppler_bins as usize,
            );
            let got = (r.antennas(), r.range_bins(), r.doppler_bins());
            if want != got {
                return Err(Error::Dataset(format!(
                    "payload dims {got:?} differ from declared {want:?} (antennas, range, Doppler)"
                )));
            }
        }
        Payload::Mdm(m) => {
            if m.channels() != dims.doppler_bins as usize {
                return Err(Error::Dataset(format!(
                    "payload has {} Doppler bins, dataset declares {}",
                    m.channels(),
                    dims.doppler_bins
                )));
            }
        }
    }
    Ok(())
}

/// One labeled sample. The payload stays on disk (or wherever its source
/// keeps it) until [`PayloadHandle::get`] is called.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub id: String,
    pub label: String,
    /// Position of `label` in the dataset's class list.
    pub label_index: usize,
    pub subject: String,
    pub session: String,
    pub payload: PayloadHandle,
}

/// A fully-validated dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub payload_kind: PayloadKind,
    pub dims: PayloadDims,
    pub classes: Vec<String>,
    pub samples: Vec<SampleRecord>,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Samples per class, in class order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes.len()];
        for s in &self.samples {
            counts[s.label_index] += 1;
        }
        counts
    }

    pub fn subjects(&self) -> Vec<String> {
        let mut subjects: Vec<String> = Vec::new();
        for s in &self.samples {
            if !subjects.contains(&s.subject) {
                subjects.push(s.subject.clone());
            }
        }
        subjects.sort();
        subjects
    }
}

// --------------------------------------------------------------------------
// Manifest serialization
// --------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    name: String,
    payload: PayloadKind,
    dims: PayloadDims,
    classes: Vec<String>,
    samples: Vec<SampleEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleEntry {
    id: String,
    label: String,
    subject: String,
    session: String,
    path: String,
}

fn nonempty(value: &str, field: &str, id: &str) -> Result<()> {
    if value.trim().is_empty() {
        return Err(Error::Sample { id: id.to_string(), detail: format!("{field} is empty") });
    }
    Ok(())
}

impl Dataset {
    /// Load and validate a dataset from its manifest path (or the directory
    /// containing `manifest.json`).
    pub fn load(path: &Path) -> Result<Dataset> {
        let manifest_path =
            if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
        let manifest: ManifestFile = serde_json::from_str(&text)
            .map_err(|e| format_err(&manifest_path, e.to_string()))?;
        let base = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();

        if manifest.name.trim().is_empty() {
            return Err(Error::Dataset("dataset name is empty".into()));
        }
        if manifest.classes.is_empty() {
            return Err(Error::Dataset("class list is empty".into()));
        }
        let mut seen_classes = HashSet::new();
        for c in &manifest.classes {
            if c.trim().is_empty() {
                return Err(Error::Dataset("class list contains an empty name".into()));
            }
            if !seen_classes.insert(c.as_str()) {
                return Err(Error::Dataset(format!("class {c:?} appears twice in the class list")));
            }
        }
        manifest.dims.validate(manifest.payload)?;

        let mut seen_ids = HashSet::new();
        let mut samples = Vec::with_capacity(manifest.samples.len());
        for entry in &manifest.samples {
            if entry.id.trim().is_empty() {
                return Err(Error::Dataset("a sample has an empty id".into()));
            }
            if !seen_ids.insert(entry.id.as_str()) {
                return Err(Error::Dataset(format!("sample id {:?} appears twice", entry.id)));
            }
            nonempty(&entry.label, "label", &entry.id)?;
            nonempty(&entry.subject, "subject", &entry.id)?;
            nonempty(&entry.session, "session", &entry.id)?;
            let label_index = manifest.classes.iter().position(|c| *c == entry.label).ok_or_else(|| {
                Error::Sample {
                    id: entry.id.clone(),
                    detail: format!("label {:?} is not in the class list", entry.label),
                }
            })?;
            let payload_path = base.join(&entry.path);
            validate_payload_file(&payload_path, manifest.payload, &manifest.dims).map_err(|e| {
                Error::Sample { id: entry.id.clone(), detail: e.to_string() }
            })?;
            samples.push(SampleRecord {
                id: entry.id.clone(),
                label: entry.label.clone(),
                label_index,
                subject: entry.subject.clone(),
                session: entry.session.clone(),
                payload: PayloadHandle::from_file(payload_path, manifest.payload, manifest.dims),
            });
        }

        Ok(Dataset {
            name: manifest.name,
            payload_kind: manifest.payload,
            dims: manifest.dims,
            classes: manifest.classes,
            samples,
        })
    }

    /// Write the dataset to `dir` as `manifest.json` plus one payload file
    /// per sample under `payloads/`. Forces every payload through its handle,
    /// so a lazily-backed dataset is materialized one sample at a time.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut writer = DatasetWriter::create(
            dir,
            self.name.clone(),
            self.payload_kind,
            self.dims,
            self.classes.clone(),
        )?;
        for sample in &self.samples {
            let payload = sample
                .payload
                .get()
                .map_err(|e| Error::Sample { id: sample.id.clone(), detail: e.to_string() })?;
            writer.add(&sample.id, &sample.label, &sample.subject, &sample.session, &payload)?;
        }
        writer.finish()?;
        Ok(())
    }
}

/// Incremental dataset writer: each added sample's payload file streams to
/// disk immediately and only the manifest entries stay in memory, so corpora
/// far larger than memory can be converted. [`DatasetWriter::finish`] writes
/// the manifest (atomically) last — a directory without `manifest.json` is
/// recognizably incomplete.
#[derive(Debug)]
pub struct DatasetWriter {
    dir: PathBuf,
    name: String,
    payload_kind: PayloadKind,
    dims: PayloadDims,
    classes: Vec<String>,
    entries: Vec<SampleEntry>,
    seen: HashSet<String>,
}

impl DatasetWriter {
    pub fn create(
        dir: &Path,
        name: impl Into<String>,
        payload_kind: PayloadKind,
        dims: PayloadDims,
        classes: Vec<String>,
    ) -> Result<DatasetWriter> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Dataset("dataset name is empty".into()));
        }
        if classes.is_empty() {
            return Err(Error::Dataset("class list is empty".into()));
        }
        let mut unique = HashSet::new();
        for class in &classes {
            if class.trim().is_empty() {
                return Err(Error::Dataset("class names must be nonempty".into()));
            }
            if !unique.insert(class.as_str()) {
                return Err(Error::Dataset(format!("class {class:?} appears twice")));
            }
        }
        dims.validate(payload_kind)?;
        let payload_dir = dir.join("payloads");
        fs::create_dir_all(&payload_dir)
            .map_err(|e| Error::io(payload_dir.display().to_string(), e))?;
        Ok(DatasetWriter {
            dir: dir.to_path_buf(),
            name,
            payload_kind,
            dims,
            classes,
            entries: Vec::new(),
            seen: HashSet::new(),
        })
    }

    /// Validate one sample and write its payload file.
    pub fn add(
        &mut self,
        id: &str,
        label: &str,
        subject: &str,
        session: &str,
        payload: &Payload,
    ) -> Result<()> {
        let fail = |detail: String| Error::Sample { id: id.to_string(), detail };
        if id.is_empty() {
            return Err(fail("id is empty".into()));
        }
        if !id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) {
            return Err(fail(
                "id must contain only ASCII letters, digits, '-', '_', '.' to name its file"
                    .into(),
            ));
        }
        if !self.seen.insert(id.to_string()) {
            return Err(fail("duplicate id".into()));
        }
        if !self.classes.iter().any(|c| c == label) {
            return Err(fail(format!("label {label:?} is not in the class list")));
        }
        nonempty(subject, "subject", id)?;
        nonempty(session, "session", id)?;
        check_payload_dims(payload, self.payload_kind, &self.dims)
            .map_err(|e| fail(e.to_string()))?;
        let rel = format!("payloads/{id}.bin");
        write_payload(&self.dir.join(&rel), payload)?;
        self.entries.push(SampleEntry {
            id: id.to_string(),
            label: label.to_string(),
            subject: subject.to_string(),
            session: session.to_string(),
            path: rel,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write the manifest and return its path.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = ManifestFile {
            name: self.name,
            payload: self.payload_kind,
            dims: self.dims,
            classes: self.classes,
            samples: self.entries,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Dataset(format!("manifest serialization failed: {e}")))?;
        let path = self.dir.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

// --------------------------------------------------------------------------
// Binary payload files
// --------------------------------------------------------------------------

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), detail: detail.into() }
}

/// Serialize a payload into the binary container format.
pub fn payload_to_bytes(payload: &Payload) -> Vec<u8> {
    let (kind, dims, values): (u32, Vec<u32>, &[f64]) = match payload {
        Payload::Rdm(r) => (
            PayloadKind::Rdm.code(),
            vec![r.steps() as u32, r.antennas() as u32, r.range_bins() as u32, r.doppler_bins() as u32],
            r.data(),
        ),
        Payload::Mdm(m) => {
            (PayloadKind::Mdm.code(), vec![m.steps() as u32, m.channels() as u32], m.data())
        }
    };
    let mut buf = Vec::with_capacity(16 + 4 * dims.len() + 4 * values.len());
    buf.extend_from_slice(CONTAINER_MAGIC);
    buf.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    buf.extend_from_slice(&kind.to_le_bytes());
    for d in &dims {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in values {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    buf
}

/// Parse a payload from the binary container format.
pub fn payload_from_bytes(path: &Path, bytes: &[u8]) -> Result<Payload> {
    if bytes.len() < 16 {
        return Err(format_err(path, format!("file is {} bytes, header needs 16", bytes.len())));
    }
    if &bytes[0..8] != CONTAINER_MAGIC {
        return Err(format_err(path, "bad magic; not a payload file"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(8);
    if version != CONTAINER_VERSION {
        return Err(format_err(path, format!("unsupported format version {version}")));
    }
    let kind = PayloadKind::from_code(word(12))
        .ok_or_else(|| format_err(path, format!("unknown payload kind code {}", word(12))))?;
    let ndims = match kind {
        PayloadKind::Rdm => 4,
        PayloadKind::Mdm => 2,
    };
    let data_at = 16 + 4 * ndims;
    if bytes.len() < data_at {
        return Err(format_err(path, "file truncated inside the dims block"));
    }
    let dims: Vec<usize> = (0..ndims).map(|i| word(16 + 4 * i) as usize).collect();
    let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| {
        format_err(path, format!("dims {dims:?} overflow"))
    })?;
    let expect = data_at + 4 * count;
    if bytes.len() != expect {
        return Err(format_err(
            path,
            format!("file is {} bytes, dims {dims:?} require exactly {expect}", bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes[data_at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    match kind {
        PayloadKind::Rdm => RdmSequence::new(dims[0], dims[1], dims[2], dims[3], values)
            .map(Payload::Rdm)
            .map_err(|e| format_err(path, e.to_string())),
        PayloadKind::Mdm => {
            FeatureMap::new(FeatureKind::MicroDoppler, None, dims[0], dims[1], values)
                .map(Payload::Mdm)
                .map_err(|e| format_err(path, e.to_string()))
        }
    }
}

/// Write a payload file atomically (temp file in the same directory, then
/// rename), so a crash never leaves a half-written payload behind.
pub fn write_payload(path: &Path, payload: &Payload) -> Result<()> {
    write_atomic(path, &payload_to_bytes(payload))
}

/// Read and fully validate one payload file.
pub fn read_payload(path: &Path) -> Result<Payload> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    payload_from_bytes(path, &bytes)
}

/// Cheap structural check used at load time: header, dims against the
/// manifest, and exact file length — without parsing the values.
fn validate_payload_file(path: &Path, kind: PayloadKind, dims: &PayloadDims) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if bytes.len() < 16 {
        return Err(format_err(path, format!("file is {} bytes, header needs 16", bytes.len())));
    }
    if &bytes[0..8] != CONTAINER_MAGIC {
        return Err(format_err(path, "bad magic; not a payload file"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(8);
    if version != CONTAINER_VERSION {
        return Err(format_err(path, format!("unsupported format version {version}")));
    }
    let file_kind = PayloadKind::from_code(word(12))
        .ok_or_else(|| format_err(path, format!("unknown payload kind code {}", word(12))))?;
    if file_kind != kind {
        return Err(format_err(path, format!("payload is {file_kind:?}, dataset declares {kind:?}")));
    }
    match kind {
        PayloadKind::Rdm => {
            if bytes.len() < 32 {
                return Err(format_err(path, "file truncated inside the dims block"));
            }
            let (steps, a, r, d) =
                (word(16) as usize, word(20), word(24), word(28));
            if steps == 0 {
                return Err(format_err(path, "payload declares zero time steps"));
            }
            let want =
                (dims.antennas.unwrap_or(0), dims.range_bins.unwrap_or(0), dims.doppler_bins);
            if (a, r, d) != want {
                return Err(format_err(
                    path,
                    format!("payload dims ({a}, {r}, {d}) differ from declared {want:?} (antennas, range, Doppler)"),
                ));
            }
            let expect = 32 + 4usize * steps * (a as usize) * (r as usize) * (d as usize);
            if bytes.len() != expect {
                return Err(format_err(
                    path,
                    format!("file is {} bytes, dims require exactly {expect}", bytes.len()),
                ));
            }
        }
        PayloadKind::Mdm => {
            if bytes.len() < 24 {
                return Err(format_err(path, "file truncated inside the dims block"));
            }
            let (steps, d) = (word(16) as usize, word(20));
            if steps == 0 {
                return Err(format_err(path, "payload declares zero time steps"));
            }
            if d != dims.doppler_bins {
                return Err(format_err(
                    path,
                    format!("payload has {d} Doppler bins, dataset declares {}", dims.doppler_bins),
                ));
            }
            let expect = 24 + 4usize * steps * d as usize;
            if bytes.len() != expect {
                return Err(format_err(
                    path,
                    format!("file is {} bytes, dims require exactly {expect}", bytes.len()),
                ));
            }
        }
    }
    Ok(())
}

/// Write `bytes` to `path` through a same-directory temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| format_err(path, "path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!("{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn tiny_rdm(seed: u64, steps: usize) -> RdmSequence {
        let mut stream = RngStream::new(seed);
        let data = (0..steps * 1 * 3 * 4)
            .map(|_| (stream.uniform(0.0, 2.0) as f32) as f64) // f32-quantized at source
            .collect();
        RdmSequence::new(steps, 1, 3, 4, data).unwrap()
    }

    #[test]
    fn payload_bytes_round_trip_bit_exactly() {
        let payload = Payload::Rdm(tiny_rdm(1, 3));
        let bytes = payload_to_bytes(&payload);
        assert_eq!(&bytes[0..8], CONTAINER_MAGIC);
        let back = payload_from_bytes(Path::new("mem"), &bytes).unwrap();
        assert_eq!(back, payload);
    }

    #[test]
    fn mdm_payload_round_trips() {
        let map = FeatureMap::new(FeatureKind::MicroDoppler, None, 4, 6, vec![0.5; 24]).unwrap();
        let payload = Payload::Mdm(map);
        let back = payload_from_bytes(Path::new("mem"), &payload_to_bytes(&payload)).unwrap();
        assert_eq!(back, payload);
    }

    #[test]
    fn corrupt_payload_bytes_are_rejected_with_diagnostics() {
        let payload = Payload::Rdm(tiny_rdm(2, 2));
        let good = payload_to_bytes(&payload);
        let p = Path::new("mem");

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(payload_from_bytes(p, &bad_magic).unwrap_err().to_string().contains("magic"));

        let mut bad_version = good.clone();
        bad_version[8] = 9;
        assert!(payload_from_bytes(p, &bad_version).unwrap_err().to_string().contains("version"));

        let mut bad_kind = good.clone();
        bad_kind[12] = 7;
        assert!(payload_from_bytes(p, &bad_kind).unwrap_err().to_string().contains("kind"));

        let truncated = &good[..good.len() - 4];
        assert!(payload_from_bytes(p, truncated).unwrap_err().to_string().contains("bytes"));

        let mut negative = good.clone();
        let neg = (-1.0f32).to_le_bytes();
        negative[32..36].copy_from_slice(&neg);
        assert!(payload_from_bytes(p, &negative).is_err());

        assert!(payload_from_bytes(p, &good[..10]).is_err());
    }

    #[test]
    fn in_memory_handles_return_their_payload() {
        let payload = Payload::Rdm(tiny_rdm(3, 2));
        let handle = PayloadHandle::in_memory(payload.clone());
        assert_eq!(handle.get().unwrap(), payload);
        assert_eq!(handle.clone().get().unwrap(), payload);
    }

    fn tiny_dataset(dir: &Path) -> Dataset {
        let classes = vec!["wave".to_string(), "push".to_string()];
        let mut samples = Vec::new();
        for (i, (label, li)) in [("wave", 0usize), ("push", 1), ("wave", 0)].iter().enumerate() {
            samples.push(SampleRecord {
                id: format!("s{i:02}"),
                label: label.to_string(),
                label_index: *li,
                subject: format!("subj{}", i % 2),
                session: "a".into(),
                payload: PayloadHandle::in_memory(Payload::Rdm(tiny_rdm(10 + i as u64, 2 + i))),
            });
        }
        let ds = Dataset {
            name: "tiny".into(),
            payload_kind: PayloadKind::Rdm,
            dims: PayloadDims::rdm(1, 3, 4),
            classes,
            samples,
        };
        ds.save(dir).unwrap();
        ds
    }

    #[test]
    fn save_load_round_trip_preserves_payload_bits() {
        let dir = tempfile::tempdir().unwrap();
        let original = tiny_dataset(dir.path());
        let loaded = Dataset::load(dir.path()).unwrap();
        assert_eq!(loaded.name, "tiny");
        assert_eq!(loaded.classes, original.classes);
        assert_eq!(loaded.samples.len(), 3);
        for (a, b) in original.samples.iter().zip(&loaded.samples) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label_index, b.label_index);
            assert_eq!(a.payload.get().unwrap(), b.payload.get().unwrap());
        }
        assert_eq!(loaded.class_counts(), vec![2, 1]);
        assert_eq!(loaded.subjects(), vec!["subj0".to_string(), "subj1".to_string()]);
    }

    #[test]
    fn loading_by_manifest_path_or_directory_is_equivalent() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path());
        let by_dir = Dataset::load(dir.path()).unwrap();
        let by_file = Dataset::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(by_dir.samples.len(), by_file.samples.len());
    }

    #[test]
    fn saving_rejects_ids_that_cannot_name_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = tiny_dataset(dir.path());
        ds.samples[0].id = "../escape".into();
        assert!(ds.save(dir.path()).is_err());
    }
}
