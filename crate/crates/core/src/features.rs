//! Filtration banks, per-cloud featurization and the feature file format.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::cubical::image_persistence;
use crate::error::{Error, Result};
use crate::filtration::{self, height_directions, FiltrationSpec, RadialCenter};
use crate::pc_io::{self, PointCloud};
use crate::vectorize::{vectorize_diagram, SamplingConfig, BLOCK_LEN};
use crate::voxel::{self, BinaryImage3D};

pub const FEATURE_MAGIC: &str = "#tacofeat";
pub const FEATURE_VERSION: &str = "v1";

/// Ordered list of filtrations; the order fixes the feature layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationBank {
    pub name: String,
    pub specs: Vec<FiltrationSpec>,
}

impl FiltrationBank {
    fn with_radial(name: &str, radial: usize) -> Self {
        let mut specs: Vec<FiltrationSpec> = height_directions()
            .into_iter()
            .map(|direction| FiltrationSpec::Height { direction })
            .collect();
        specs.extend((0..radial).map(|i| FiltrationSpec::Radial {
            center: RadialCenter::Grid(i),
        }));
        specs.extend([
            FiltrationSpec::Density { radius: 1.0 },
            FiltrationSpec::Dilation,
            FiltrationSpec::Erosion,
            FiltrationSpec::SignedDistance,
        ]);
        Self {
            name: name.to_string(),
            specs,
        }
    }

    /// 26 heights, all 27 radial centers and the four distance-based
    /// filtrations: 57 images, 2052 features.
    pub fn full57() -> Self {
        Self::with_radial("FULL57", 27)
    }

    /// Like [`full57`](Self::full57) but with radial centers c1..c18 only:
    /// 48 images, 1728 features.
    pub fn mn40() -> Self {
        Self::with_radial("MN40", 18)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "FULL57" => Ok(Self::full57()),
            "MN40" => Ok(Self::mn40()),
            _ => Err(Error::Invalid(format!("unknown bank preset {name:?} (expected FULL57 or MN40)"))),
        }
    }

    pub fn custom(name: impl Into<String>, specs: Vec<FiltrationSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Invalid("filtration bank is empty".into()));
        }
        let name = name.into();
        if name.chars().any(char::is_whitespace) || name.is_empty() {
            return Err(Error::Invalid(format!("bank name {name:?} must be a single word")));
        }
        Ok(Self { name, specs })
    }

    pub fn feature_len(&self) -> usize {
        BLOCK_LEN * self.specs.len()
    }

    /// First 16 hex digits of SHA-256 over the filtration strings in order.
    pub fn hash(&self) -> String {
        let text: Vec<String> = self.specs.iter().map(|s| s.to_string()).collect();
        let digest = Sha256::digest(text.join(";").as_bytes());
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub bank_hash: String,
    pub source: String,
}

/// Concatenated feature blocks of every filtration in `bank`, in order.
pub fn featurize_image(
    img: &BinaryImage3D,
    bank: &FiltrationBank,
    sampling: &SamplingConfig,
    drop_essential: bool,
) -> Result<Vec<f64>> {
    if img.active_count() == 0 {
        return Err(Error::EmptyImage);
    }
    let mut out = Vec::with_capacity(bank.feature_len());
    for spec in &bank.specs {
        let gray = filtration::apply(img, spec)?;
        let mut diagram = image_persistence(&gray);
        if drop_essential {
            diagram = diagram.without_essential();
        }
        out.extend_from_slice(vectorize_diagram(&diagram, sampling).values());
    }
    Ok(out)
}

pub fn featurize_cloud(
    cloud: &PointCloud,
    voxel_size: f64,
    bank: &FiltrationBank,
    sampling: &SamplingConfig,
    drop_essential: bool,
) -> Result<FeatureVector> {
    let img = voxel::voxelize(cloud, voxel_size)?;
    Ok(FeatureVector {
        values: featurize_image(&img, bank, sampling, drop_essential)?,
        bank_hash: bank.hash(),
        source: cloud.label.clone().unwrap_or_default(),
    })
}

/// What a manifest entry points at, decided by file extension.
#[derive(Clone, Debug)]
pub enum Input {
    Cloud(PointCloud),
    Image(BinaryImage3D),
}

/// Loads a cloud (`.xyz`, `.txt`, `.pts`), a mesh to be surface-sampled
/// (`.off`) or a pre-voxelized volume (`.tbv`).
pub fn load_input(path: &Path, mesh_samples: usize, seed: u64) -> Result<Input> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "off" => {
            let mesh = pc_io::load_off(path)?;
            Ok(Input::Cloud(pc_io::sample_mesh(&mesh, mesh_samples, seed)?))
        }
        "tbv" => Ok(Input::Image(voxel::load_binary_image(path)?)),
        _ => Ok(Input::Cloud(pc_io::load_xyz(path)?)),
    }
}

pub fn featurize_input(input: &Input, cfg: &RunConfig, bank: &FiltrationBank) -> Result<Vec<f64>> {
    let img = match input {
        Input::Cloud(c) => voxel::voxelize(c, cfg.voxel_size)?,
        Input::Image(img) => img.clone(),
    };
    featurize_image(&img, bank, &cfg.sampling, cfg.drop_essential)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRow {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub preset: String,
    pub bank_hash: String,
    pub dim: usize,
    pub rows: Vec<LabeledRow>,
    /// JSON of the run configuration that produced the rows, if known.
    pub config: Option<String>,
}

impl LabeledDataset {
    pub fn new(bank: &FiltrationBank, rows: Vec<LabeledRow>) -> Result<Self> {
        let dim = bank.feature_len();
        if let Some(r) = rows.iter().find(|r| r.values.len() != dim) {
            return Err(Error::LengthMismatch {
                expected: dim,
                found: r.values.len(),
            });
        }
        Ok(Self {
            preset: bank.name.clone(),
            bank_hash: bank.hash(),
            dim,
            rows,
            config: None,
        })
    }

    /// Distinct labels in sorted order.
    pub fn catalog(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.rows.iter().map(|r| r.label.clone()).collect();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub index: usize,
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug)]
pub struct DatasetReport {
    pub dataset: LabeledDataset,
    pub failures: Vec<Failure>,
}

/// Featurizes every `(path, label)` entry on a pool of `cfg.workers`
/// threads. Rows keep input order; entries that fail are skipped and
/// listed in the report. Meshes are sampled with seed `cfg.seed + index`.
pub fn featurize_dataset(inputs: &[(PathBuf, String)], cfg: &RunConfig) -> Result<DatasetReport> {
    cfg.validate()?;
    let bank = cfg.bank.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<f64>>> = pool.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, (path, _))| {
                let input = load_input(path, cfg.mesh_samples, cfg.seed.wrapping_add(i as u64))?;
                featurize_input(&input, cfg, &bank)
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, (res, (path, label))) in results.into_iter().zip(inputs).enumerate() {
        match res {
            Ok(values) => rows.push(LabeledRow {
                label: label.clone(),
                values,
            }),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                failures.push(Failure {
                    index: i,
                    path: path.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    if rows.is_empty() && !inputs.is_empty() {
        return Err(Error::AllFailed(inputs.len()));
    }
    let mut dataset = LabeledDataset::new(&bank, rows)?;
    dataset.config = Some(cfg.to_json());
    Ok(DatasetReport { dataset, failures })
}

/// Reads a `path,label` manifest. Relative paths resolve against the
/// manifest's directory; a first line of `path,label` is treated as a header.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(PathBuf, String)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line == "path,label") {
            continue;
        }
        let (p, label) = line.rsplit_once(',').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected `path,label`".into(),
        })?;
        let p = Path::new(p.trim());
        out.push((
            if p.is_absolute() { p.to_path_buf() } else { base.join(p) },
            label.trim().to_string(),
        ));
    }
    Ok(out)
}

pub fn encode_features(ds: &LabeledDataset) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{FEATURE_MAGIC} {FEATURE_VERSION}");
    let _ = writeln!(out, "#bank {} {}", ds.preset, ds.bank_hash);
    let _ = writeln!(out, "#dim {}", ds.dim);
    if let Some(cfg) = &ds.config {
        if cfg.contains('\n') {
            return Err(Error::Invalid("config echo must be single-line JSON".into()));
        }
        let _ = writeln!(out, "#config {cfg}");
    }
    for row in &ds.rows {
        if row.label.is_empty() || row.label.contains([',', '\n', '\r']) || row.label.starts_with('#') {
            return Err(Error::Invalid(format!("label {:?} cannot be written", row.label)));
        }
        if row.values.len() != ds.dim {
            return Err(Error::LengthMismatch {
                expected: ds.dim,
                found: row.values.len(),
            });
        }
        out.push_str(&row.label);
        for v in &row.values {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_features(path: impl AsRef<Path>, ds: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_features(ds)?).map_err(|e| Error::io(path, e))
}

/// Parses a feature file. A version other than `v1` is logged and parsing
/// continues; a missing magic line or malformed row is an error.
pub fn decode_features(text: &str) -> Result<LabeledDataset> {
    let mut lines = text.lines().enumerate();
    let first = lines.next().map(|(_, l)| l).unwrap_or("");
    let version = first
        .strip_prefix(FEATURE_MAGIC)
        .ok_or(Error::BadMagic { expected: FEATURE_MAGIC })?
        .trim();
    if version != FEATURE_VERSION {
        log::warn!("feature file version {version:?}, expected {FEATURE_VERSION}");
    }

    let corrupt = |line: usize, msg: &str| Error::Corrupt(format!("line {}: {msg}", line + 1));
    let (mut preset, mut hash, mut dim, mut config) = (None, None, None, None);
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#bank ") {
            let mut it = rest.split_whitespace();
            preset = it.next().map(str::to_string);
            hash = it.next().map(str::to_string);
            continue;
        }
        if let Some(rest) = line.strip_prefix("#dim ") {
            dim = Some(rest.trim().parse::<usize>().map_err(|_| corrupt(i, "bad #dim"))?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("#config ") {
            config = Some(rest.to_string());
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let dim = dim.ok_or_else(|| corrupt(i, "row before #dim header"))?;
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("").to_string();
        let values = fields
            .map(|f| f.trim().parse::<f64>().map_err(|_| corrupt(i, "non-numeric value")))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(corrupt(i, &format!("{} values, header says {dim}", values.len())));
        }
        rows.push(LabeledRow { label, values });
    }
    Ok(LabeledDataset {
        preset: preset.ok_or_else(|| Error::Corrupt("missing #bank header".into()))?,
        bank_hash: hash.ok_or_else(|| Error::Corrupt("missing bank hash".into()))?,
        dim: dim.ok_or_else(|| Error::Corrupt("missing #dim header".into()))?,
        rows,
        config,
    })
}

pub fn read_features(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_features(&text)
}

/// Reads a feature file and compares its bank hash with `expected`.
/// A mismatch is returned as a warning alongside the data.
pub fn read_features_checked(path: impl AsRef<Path>, expected_hash: &str) -> Result<(LabeledDataset, Vec<String>)> {
    let ds = read_features(path)?;
    let mut warnings = Vec::new();
    if ds.bank_hash != expected_hash {
        let w = format!(
            "feature bank hash {} ({}) differs from expected {expected_hash}",
            ds.bank_hash, ds.preset
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok((ds, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_lengths() {
        assert_eq!(FiltrationBank::full57().specs.len(), 57);
        assert_eq!(FiltrationBank::full57().feature_len(), 2052);
        assert_eq!(FiltrationBank::mn40().specs.len(), 48);
        assert_eq!(FiltrationBank::mn40().feature_len(), 1728);
        assert_ne!(FiltrationBank::full57().hash(), FiltrationBank::mn40().hash());
        assert_eq!(FiltrationBank::mn40().hash().len(), 16);
        assert!(FiltrationBank::preset("nope").is_err());
    }

    #[test]
    fn bank_order() {
        let b = FiltrationBank::mn40();
        assert_eq!(b.specs[0].to_string(), "height:-1,-1,-1");
        assert_eq!(b.specs[26].to_string(), "radial:c1");
        assert_eq!(b.specs[43].to_string(), "radial:c18");
        let tail: Vec<String> = b.specs[44..].iter().map(|s| s.to_string()).collect();
        assert_eq!(tail, ["density:1", "dilation", "erosion", "signed-distance"]);
    }

    fn sample() -> LabeledDataset {
        let bank = FiltrationBank::custom("TINY", vec![FiltrationSpec::Dilation]).unwrap();
        let rows = vec![
            LabeledRow {
                label: "a".into(),
                values: (0..36).map(|i| i as f64 / 7.0).collect(),
            },
            LabeledRow {
                label: "b".into(),
                values: (0..36).map(|i| (i as f64).sqrt() * 1e-300).collect(),
            },
        ];
        LabeledDataset::new(&bank, rows).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let mut ds = sample();
        ds.config = Some("{\"seed\":1}".into());
        let text = encode_features(&ds).unwrap();
        assert!(text.starts_with("#tacofeat v1\n#bank TINY "));
        assert!(text.contains("\n#dim 36\n"));
        assert_eq!(decode_features(&text).unwrap(), ds);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(decode_features("hello\n"), Err(Error::BadMagic { .. })));
        let text = encode_features(&sample()).unwrap();
        let truncated = &text[..text.len() - 30];
        assert!(matches!(decode_features(truncated), Err(Error::Corrupt(_))));
        let garbled = text.replacen(",0.0", ",zero", 1);
        assert!(decode_features(&garbled).is_err());
    }

    #[test]
    fn label_with_comma_rejected() {
        let mut ds = sample();
        ds.rows[0].label = "a,b".into();
        assert!(encode_features(&ds).is_err());
    }

    #[test]
    fn empty_image_is_an_error() {
        let img = BinaryImage3D::new([2, 1, 1], vec![false, false]).unwrap();
        assert!(featurize_image(&img, &FiltrationBank::mn40(), &SamplingConfig::default(), false).is_err());
    }
}
