//! Conversion of externally distributed gesture corpora into the portable
//! dataset format.
//!
//! Neither corpus is bundled with this repository; users supply their own
//! copy and point the `convert` subcommand at it. Conversion is best-effort
//! and fully isolated: nothing else in the crate depends on it, and any
//! structural surprise in the source produces a warning (and a skipped
//! sample) rather than an abort, so partial or re-packaged distributions
//! still convert as far as they can. The whole module sits behind the
//! `hdf5-convert` feature so the rest of the toolkit builds without libhdf5.
//!
//! ## Expected source layouts
//!
//! **Soli** (`ExternalKind::Soli`): a directory of HDF5 files named
//! `{gesture}_{subject}_{instance}.h5` (all three fields numeric), each
//! holding datasets `ch0`..`ch3` of shape `(T, 1024)` — one flattened
//! row-major 32×32 range-Doppler frame per time step per receive channel —
//! or equivalently `(T, 32, 32)`. Labels become `gesture-{g:02}`, subjects
//! `s{s:02}`. The release encodes no separate session axis, so the instance
//! index serves as the session identifier (`e{i:02}`).
//!
//! **Dop-NET** (`ExternalKind::Dopnet`): one or more HDF5-based `.mat` files
//! (MATLAB v7.3), one per person, with the person id somewhere in the file
//! name (`..._Person_A.mat`). Inside, any group named after a gesture
//! (`Wave`, `Pinch`, `Click`, `Swipe`, case-insensitive, at any depth)
//! contains one 2-D dataset per recording: 800 Doppler bins along one axis,
//! time steps along the other, real or complex (compound `real`/`imag`).
//! Complex spectrograms are reduced to magnitude. MATLAB cell arrays are
//! stored as opaque object references that plain HDF5 tooling cannot follow;
//! files using them are reported with a pointer to this layout so they can
//! be re-exported with one `save` call per gesture group.
//!
//! Negative or non-finite source values have no physical meaning for these
//! magnitude maps; they are clamped to zero and counted in the report.
//! All values are quantized to 32-bit floats at read time, so the converted
//! files reload bit-identically.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{DatasetWriter, Payload, PayloadDims, PayloadKind};
use crate::error::{Error, Result};
use crate::feature::{FeatureKind, FeatureMap, RdmSequence};

/// Soli frames are 32×32 range–Doppler maps from 4 receive channels.
const SOLI_ANTENNAS: usize = 4;
const SOLI_RANGE_BINS: usize = 32;
const SOLI_DOPPLER_BINS: usize = 32;
const SOLI_FRAME: usize = SOLI_RANGE_BINS * SOLI_DOPPLER_BINS;

/// Published Soli corpus shape: 11 gestures × 10 subjects × 25 instances.
const SOLI_EXPECTED_PER_CLASS: usize = 250;
const SOLI_EXPECTED_CLASSES: usize = 11;
const SOLI_EXPECTED_SUBJECTS: usize = 10;
const SOLI_EXPECTED_TOTAL: usize = 2750;

/// Dop-NET micro-Doppler maps are 800 Doppler bins wide.
const DOPNET_DOPPLER_BINS: usize = 800;
/// Published Dop-NET training-set shape.
const DOPNET_EXPECTED: [(&str, usize); 4] =
    [("click", 792), ("pinch", 696), ("swipe", 479), ("wave", 466)];
const DOPNET_EXPECTED_SUBJECTS: usize = 6;
const DOPNET_EXPECTED_TOTAL: usize = 2433;

const DOPNET_GESTURES: [&str; 4] = ["click", "pinch", "swipe", "wave"];

/// Which external corpus layout to expect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalKind {
    Soli,
    Dopnet,
}

impl ExternalKind {
    pub fn name(self) -> &'static str {
        match self {
            ExternalKind::Soli => "soli",
            ExternalKind::Dopnet => "dopnet",
        }
    }
}

impl fmt::Display for ExternalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExternalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ExternalKind> {
        match s {
            "soli" => Ok(ExternalKind::Soli),
            "dopnet" => Ok(ExternalKind::Dopnet),
            other => Err(Error::Parameter {
                name: "kind",
                detail: format!("unknown corpus {other:?}; expected soli or dopnet"),
            }),
        }
    }
}

/// What a conversion produced, including every deviation it noticed.
#[derive(Debug, Clone)]
pub struct ConversionReport {
    pub dataset_dir: PathBuf,
    pub samples: usize,
    pub classes: Vec<String>,
    pub subjects: Vec<String>,
    /// Source values clamped to zero (negative or non-finite).
    pub clamped_values: u64,
    /// Mismatches against the published corpus shape, skipped entries, and
    /// anything else worth a human glance. Empty for a pristine corpus.
    pub warnings: Vec<String>,
}

/// Convert a user-supplied corpus at `source` into a dataset under `out`.
pub fn convert_external(kind: ExternalKind, source: &Path, out: &Path) -> Result<ConversionReport> {
    if !source.is_dir() {
        return Err(Error::Convert(format!(
            "source directory {} does not exist or is not a directory",
            source.display()
        )));
    }
    match kind {
        ExternalKind::Soli => convert_soli(source, out),
        ExternalKind::Dopnet => convert_dopnet(source, out),
    }
}

fn convert_err(path: &Path, detail: impl fmt::Display) -> Error {
    Error::Convert(format!("{}: {detail}", path.display()))
}

/// Clamp a source value into the nonnegative range and quantize to f32, so
/// the in-memory dataset equals its on-disk form bit for bit.
fn sanitize(value: f64, clamped: &mut u64) -> f64 {
    let v = if value.is_finite() && value >= 0.0 {
        value
    } else {
        *clamped += 1;
        0.0
    };
    (v as f32) as f64
}

fn list_files(source: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(source)
        .map_err(|e| Error::io(source.display().to_string(), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(source.display().to_string(), e))?;
        let path = entry.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case(extension))
        {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

// ---------------------------------------------------------------------------
// Soli
// ---------------------------------------------------------------------------

/// `{gesture}_{subject}_{instance}` with all fields numeric.
fn parse_soli_stem(stem: &str) -> Option<(u32, u32, u32)> {
    let mut parts = stem.split('_');
    let gesture = parts.next()?.parse().ok()?;
    let subject = parts.next()?.parse().ok()?;
    let instance = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((gesture, subject, instance))
}

fn read_soli_payload(path: &Path, clamped: &mut u64) -> Result<Payload> {
    let file =
        hdf5::File::open(path).map_err(|e| convert_err(path, format!("cannot open: {e}")))?;
    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(SOLI_ANTENNAS);
    let mut steps: Option<usize> = None;
    for ch in 0..SOLI_ANTENNAS {
        let name = format!("ch{ch}");
        let ds = file
            .dataset(&name)
            .map_err(|e| convert_err(path, format!("missing dataset {name}: {e}")))?;
        let shape = ds.shape();
        let t = match shape.as_slice() {
            [t, n] if *n == SOLI_FRAME => *t,
            [t, r, d] if *r == SOLI_RANGE_BINS && *d == SOLI_DOPPLER_BINS => *t,
            other => {
                return Err(convert_err(
                    path,
                    format!(
                        "dataset {name} has shape {other:?}; expected (T, {SOLI_FRAME}) \
                         or (T, {SOLI_RANGE_BINS}, {SOLI_DOPPLER_BINS})"
                    ),
                ))
            }
        };
        match steps {
            None => steps = Some(t),
            Some(prev) if prev == t => {}
            Some(prev) => {
                return Err(convert_err(
                    path,
                    format!("receive channels disagree on step count: {prev} vs {t}"),
                ))
            }
        }
        let values = ds
            .read_raw::<f64>()
            .map_err(|e| convert_err(path, format!("cannot read {name} as floats: {e}")))?;
        channels.push(values);
    }
    let t = steps.expect("four channels read");
    if t == 0 {
        return Err(convert_err(path, "sequence has zero time steps"));
    }
    // Interleave per-channel (T, frame) blocks into (T, antenna, frame).
    let mut data = Vec::with_capacity(t * SOLI_ANTENNAS * SOLI_FRAME);
    for step in 0..t {
        for channel in &channels {
            for &v in &channel[step * SOLI_FRAME..(step + 1) * SOLI_FRAME] {
                data.push(sanitize(v, clamped));
            }
        }
    }
    let rdm = RdmSequence::new(t, SOLI_ANTENNAS, SOLI_RANGE_BINS, SOLI_DOPPLER_BINS, data)
        .map_err(|e| convert_err(path, e.to_string()))?;
    Ok(Payload::Rdm(rdm))
}

fn convert_soli(source: &Path, out: &Path) -> Result<ConversionReport> {
    let mut warnings = Vec::new();
    let files = list_files(source, "h5")?;
    if files.is_empty() {
        return Err(Error::Convert(format!(
            "no .h5 files under {}; expected files named {{gesture}}_{{subject}}_{{instance}}.h5",
            source.display()
        )));
    }

    // Pass 1: filenames only, to learn the class/subject structure.
    let mut parsed: Vec<(u32, u32, u32, PathBuf)> = Vec::new();
    for path in files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        match parse_soli_stem(stem) {
            Some((g, s, i)) => parsed.push((g, s, i, path)),
            None => warnings.push(format!(
                "skipped {}: name is not {{gesture}}_{{subject}}_{{instance}}.h5",
                path.display()
            )),
        }
    }
    if parsed.is_empty() {
        return Err(Error::Convert(format!(
            "no parseable sample files under {}",
            source.display()
        )));
    }
    parsed.sort();

    let mut gestures: Vec<u32> = parsed.iter().map(|(g, ..)| *g).collect();
    gestures.sort_unstable();
    gestures.dedup();
    let classes: Vec<String> = gestures.iter().map(|g| format!("gesture-{g:02}")).collect();

    let mut writer = DatasetWriter::create(
        out,
        "soli",
        PayloadKind::Rdm,
        PayloadDims::rdm(SOLI_ANTENNAS as u32, SOLI_RANGE_BINS as u32, SOLI_DOPPLER_BINS as u32),
        classes.clone(),
    )?;
    let mut clamped = 0u64;
    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    let mut subjects: Vec<String> = Vec::new();
    for (g, s, i, path) in parsed {
        let payload = read_soli_payload(&path, &mut clamped)?;
        let label = format!("gesture-{g:02}");
        let subject = format!("s{s:02}");
        writer.add(
            &format!("soli-g{g:02}-s{s:02}-i{i:02}"),
            &label,
            &subject,
            &format!("e{i:02}"),
            &payload,
        )?;
        *per_class.entry(label).or_insert(0) += 1;
        if !subjects.contains(&subject) {
            subjects.push(subject);
        }
    }
    let samples = writer.len();
    writer.finish()?;
    subjects.sort();

    if samples != SOLI_EXPECTED_TOTAL {
        warnings.push(format!(
            "the full Soli corpus holds {SOLI_EXPECTED_TOTAL} samples; found {samples}"
        ));
    }
    if classes.len() != SOLI_EXPECTED_CLASSES {
        warnings.push(format!(
            "the full Soli corpus spans {SOLI_EXPECTED_CLASSES} gesture classes; found {}",
            classes.len()
        ));
    }
    for (class, count) in &per_class {
        if *count != SOLI_EXPECTED_PER_CLASS {
            warnings.push(format!(
                "class {class} holds {count} samples; the full corpus has \
                 {SOLI_EXPECTED_PER_CLASS} per gesture"
            ));
        }
    }
    if subjects.len() != SOLI_EXPECTED_SUBJECTS {
        warnings.push(format!(
            "the full Soli corpus covers {SOLI_EXPECTED_SUBJECTS} subjects; found {}",
            subjects.len()
        ));
    }
    if clamped > 0 {
        warnings.push(format!("clamped {clamped} negative or non-finite source values to 0"));
    }
    Ok(ConversionReport {
        dataset_dir: out.to_path_buf(),
        samples,
        classes,
        subjects,
        clamped_values: clamped,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Dop-NET
// ---------------------------------------------------------------------------

/// MATLAB v7.3 stores complex values as a compound with these member names;
/// HDF5 converts narrower floats into this type member-wise on read.
#[derive(Clone, Copy)]
#[repr(C)]
pub struct MatComplex {
    pub real: f64,
    pub imag: f64,
}

// Hand-written rather than derived: the bundled derive macro computes field
// offsets by dereferencing a null pointer, which aborts under current
// compilers.
unsafe impl hdf5::types::H5Type for MatComplex {
    fn type_descriptor() -> hdf5::types::TypeDescriptor {
        use hdf5::types::{CompoundField, CompoundType, FloatSize, TypeDescriptor};
        let field = |name: &str, offset: usize, index: usize| CompoundField {
            name: name.to_owned(),
            ty: TypeDescriptor::Float(FloatSize::U8),
            offset,
            index,
        };
        TypeDescriptor::Compound(CompoundType {
            fields: vec![
                field("real", std::mem::offset_of!(MatComplex, real), 0),
                field("imag", std::mem::offset_of!(MatComplex, imag), 1),
            ],
            size: std::mem::size_of::<MatComplex>(),
        })
    }
}

/// Extract a person identifier like `Person_A` / `person-b` from a name.
fn person_in(name: &str) -> Option<String> {
    let lower = name.to_lowercase();
    let at = lower.find("person")?;
    let tail = &lower[at + "person".len()..];
    let id: String =
        tail.chars().skip_while(|c| !c.is_ascii_alphanumeric()).take_while(|c| c.is_ascii_alphanumeric()).collect();
    if id.is_empty() {
        None
    } else {
        Some(id)
    }
}

/// One 2-D dataset found under a gesture-named group.
struct DopnetEntry {
    dataset_path: String,
    subject: String,
    label: String,
}

fn scan_dopnet_group(
    group: &hdf5::Group,
    at: &str,
    label: Option<&str>,
    subject: &str,
    entries: &mut Vec<DopnetEntry>,
    skipped: &mut usize,
    refs_seen: &mut bool,
) -> Result<()> {
    let mut names = group
        .member_names()
        .map_err(|e| Error::Convert(format!("cannot list members of {at:?}: {e}")))?;
    names.sort();
    for name in names {
        if name == "#refs#" {
            // MATLAB's object-reference pool; cell-array layouts park their
            // data here behind references we cannot follow generically.
            *refs_seen = true;
            continue;
        }
        let child_at = format!("{at}/{name}");
        if let Ok(sub) = group.group(&name) {
            let lower = name.to_lowercase();
            let child_label =
                if DOPNET_GESTURES.contains(&lower.as_str()) { Some(lower) } else { None };
            let child_subject = person_in(&name).unwrap_or_else(|| subject.to_string());
            scan_dopnet_group(
                &sub,
                &child_at,
                child_label.as_deref().or(label),
                &child_subject,
                entries,
                skipped,
                refs_seen,
            )?;
        } else if group.dataset(&name).is_ok() {
            match label {
                Some(label) => entries.push(DopnetEntry {
                    dataset_path: child_at.clone(),
                    subject: subject.to_string(),
                    label: label.to_string(),
                }),
                None => *skipped += 1,
            }
        }
    }
    Ok(())
}

/// Read one spectrogram as (steps, doppler-bin) rows, reducing complex
/// values to magnitude. Returns `None` (with a warning) when the dataset
/// does not look like a micro-Doppler map.
fn read_dopnet_map(
    file: &hdf5::File,
    path: &Path,
    entry: &DopnetEntry,
    clamped: &mut u64,
    warnings: &mut Vec<String>,
) -> Result<Option<Vec<Vec<f64>>>> {
    let ds = file
        .dataset(&entry.dataset_path)
        .map_err(|e| convert_err(path, format!("{}: {e}", entry.dataset_path)))?;
    let shape = ds.shape();
    let (steps, transposed) = match shape.as_slice() {
        [t, d] if *d == DOPNET_DOPPLER_BINS => (*t, false),
        [d, t] if *d == DOPNET_DOPPLER_BINS => (*t, true),
        other => {
            warnings.push(format!(
                "skipped {}{}: shape {other:?} has no {DOPNET_DOPPLER_BINS}-bin Doppler axis",
                path.display(),
                entry.dataset_path
            ));
            return Ok(None);
        }
    };
    if steps == 0 {
        warnings.push(format!(
            "skipped {}{}: zero time steps",
            path.display(),
            entry.dataset_path
        ));
        return Ok(None);
    }
    let flat: Vec<f64> = match ds.read_raw::<f64>() {
        Ok(values) => values,
        Err(_) => match ds.read_raw::<MatComplex>() {
            Ok(values) => values.into_iter().map(|c| c.real.hypot(c.imag)).collect(),
            Err(e) => {
                warnings.push(format!(
                    "skipped {}{}: neither real nor complex floats ({e})",
                    path.display(),
                    entry.dataset_path
                ));
                return Ok(None);
            }
        },
    };
    let mut rows = Vec::with_capacity(steps);
    for s in 0..steps {
        let mut row = Vec::with_capacity(DOPNET_DOPPLER_BINS);
        for b in 0..DOPNET_DOPPLER_BINS {
            let v = if transposed { flat[b * steps + s] } else { flat[s * DOPNET_DOPPLER_BINS + b] };
            row.push(sanitize(v, clamped));
        }
        rows.push(row);
    }
    Ok(Some(rows))
}

fn convert_dopnet(source: &Path, out: &Path) -> Result<ConversionReport> {
    let mut warnings = Vec::new();
    let files = list_files(source, "mat")?;
    if files.is_empty() {
        return Err(Error::Convert(format!(
            "no .mat files under {}; expected one HDF5-based (v7.3) file per person",
            source.display()
        )));
    }

    // Pass 1: structure only.
    let mut by_file: Vec<(PathBuf, Vec<DopnetEntry>)> = Vec::new();
    let mut skipped = 0usize;
    let mut refs_seen = false;
    for path in files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let subject = person_in(stem).unwrap_or_else(|| stem.to_lowercase());
        let file = hdf5::File::open(&path)
            .map_err(|e| convert_err(&path, format!("cannot open as HDF5 (v7.3): {e}")))?;
        let mut entries = Vec::new();
        scan_dopnet_group(&file, "", None, &subject, &mut entries, &mut skipped, &mut refs_seen)?;
        by_file.push((path, entries));
    }
    if skipped > 0 {
        warnings.push(format!(
            "skipped {skipped} datasets that sit under no gesture-named group \
             (expected groups wave/pinch/click/swipe)"
        ));
    }
    if refs_seen {
        warnings.push(
            "found a MATLAB #refs# pool: cell-array variables cannot be followed; \
             re-export each gesture's recordings as plain arrays in a group named \
             after the gesture"
                .into(),
        );
    }
    if by_file.iter().all(|(_, entries)| entries.is_empty()) {
        return Err(Error::Convert(format!(
            "no convertible spectrograms under {}; see the conversion docs for the \
             expected file layout",
            source.display()
        )));
    }

    let mut classes: Vec<String> = by_file
        .iter()
        .flat_map(|(_, entries)| entries.iter().map(|e| e.label.clone()))
        .collect();
    classes.sort();
    classes.dedup();

    let mut writer = DatasetWriter::create(
        out,
        "dopnet",
        PayloadKind::Mdm,
        PayloadDims::mdm(DOPNET_DOPPLER_BINS as u32),
        classes.clone(),
    )?;
    let mut clamped = 0u64;
    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    let mut subjects: Vec<String> = Vec::new();
    let mut counters: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (path, entries) in by_file {
        if entries.is_empty() {
            continue;
        }
        let file = hdf5::File::open(&path)
            .map_err(|e| convert_err(&path, format!("cannot open as HDF5 (v7.3): {e}")))?;
        for entry in entries {
            let Some(rows) = read_dopnet_map(&file, &path, &entry, &mut clamped, &mut warnings)?
            else {
                continue;
            };
            let steps = rows.len();
            let map = FeatureMap::new(
                FeatureKind::MicroDoppler,
                None,
                steps,
                DOPNET_DOPPLER_BINS,
                rows.into_iter().flatten().collect(),
            )
            .map_err(|e| convert_err(&path, e.to_string()))?;
            let n = counters.entry((entry.subject.clone(), entry.label.clone())).or_insert(0);
            let id = format!("dopnet-{}-{}-r{:03}", entry.subject, entry.label, *n);
            *n += 1;
            // Dop-NET publishes no session identifiers; one nominal session.
            writer.add(&id, &entry.label, &entry.subject, "training", &Payload::Mdm(map))?;
            *per_class.entry(entry.label).or_insert(0) += 1;
            if !subjects.contains(&entry.subject) {
                subjects.push(entry.subject);
            }
        }
    }
    let samples = writer.len();
    if samples == 0 {
        return Err(Error::Convert(format!(
            "every candidate spectrogram under {} was skipped; see warnings",
            source.display()
        )));
    }
    writer.finish()?;
    subjects.sort();

    if samples != DOPNET_EXPECTED_TOTAL {
        warnings.push(format!(
            "the full Dop-NET training set holds {DOPNET_EXPECTED_TOTAL} samples; found {samples}"
        ));
    }
    for (class, expected) in DOPNET_EXPECTED {
        let found = per_class.get(class).copied().unwrap_or(0);
        if found != expected {
            warnings.push(format!(
                "class {class} holds {found} samples; the full training set has {expected}"
            ));
        }
    }
    if subjects.len() != DOPNET_EXPECTED_SUBJECTS {
        warnings.push(format!(
            "the full Dop-NET training set covers {DOPNET_EXPECTED_SUBJECTS} subjects; found {}",
            subjects.len()
        ));
    }
    if clamped > 0 {
        warnings.push(format!("clamped {clamped} negative or non-finite source values to 0"));
    }
    Ok(ConversionReport {
        dataset_dir: out.to_path_buf(),
        samples,
        classes,
        subjects,
        clamped_values: clamped,
        warnings,
    })
}
