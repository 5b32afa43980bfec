//! On-disk formats for chains and models.
//!
//! A chain directory holds
//!
//! | file            | contents                                                  |
//! |-----------------|-----------------------------------------------------------|
//! | `meta.json`     | format version, space, prior config and its SHA-256, schedule, RNG spec, draw count |
//! | `t.csv`         | header `t`, one `0`/`1` per draw                          |
//! | `occupancy.csv` | header `occupied`, one count per draw                     |
//! | `pi_x.f64`      | little-endian `f64`, `draws × k`                          |
//! | `nu.f64`        | little-endian `f64`, `draws × k × H̄`                      |
//! | `profiles.f64`  | little-endian `f64`, `draws × H̄ × Σ d_j`                  |
//!
//! Component labels are not identified. The raw `nu` and `profiles` arrays
//! are only meaningful through label-invariant functionals.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gibbs::{ChainOutput, Schedule};
use crate::model::{CategorySpace, ComponentProfiles, GroupMixingWeights, JointModel, ProbabilityVector};
use crate::prior::PriorConfig;
use crate::rng::RngSpec;

pub const CHAIN_FORMAT_VERSION: u32 = 1;
pub const MODEL_FORMAT_VERSION: u32 = 1;

const LABEL_WARNING: &str =
    "component labels are not identified; use nu and profiles only through label-invariant summaries";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub format_version: u32,
    pub space: CategorySpace,
    pub config: PriorConfig,
    pub config_sha256: String,
    pub schedule: Schedule,
    pub rng: RngSpec,
    pub n_units: usize,
    pub n_draws: usize,
    /// Number of concatenated chains, each contributing `n_draws / chains` draws.
    pub chains: usize,
    /// Outcome column names, in variable order.
    #[serde(default)]
    pub variable_names: Vec<String>,
    pub note: String,
}

/// SHA-256 of the compact JSON encoding of `config`.
pub fn config_hash(config: &PriorConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config is always serializable");
    sha256_hex(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of a file's contents.
pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Writes a JSON document followed by a newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn write_f64s(path: &Path, values: &[f64]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for v in values {
        out.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_f64s(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::format(
            path,
            format!("expected {} bytes, found {}", expected * 8, bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn write_column<T: std::fmt::Display>(path: &Path, header: &str, values: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
    for v in values {
        writeln!(out, "{v}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_column(path: &Path, header: &str, expected: usize) -> Result<Vec<usize>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == header => {}
        Some(Err(e)) => return Err(Error::io(path, e)),
        _ => return Err(Error::format(path, format!("missing header `{header}`"))),
    }
    let mut out = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let v = line
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::format(path, format!("line {}: `{line}` is not a count", i + 2)))?;
        out.push(v);
    }
    if out.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} rows, found {}", out.len()),
        ));
    }
    Ok(out)
}

/// File names written by [`write_chain`], in a fixed order.
pub const CHAIN_FILES: [&str; 6] = [
    "meta.json",
    "t.csv",
    "occupancy.csv",
    "pi_x.f64",
    "nu.f64",
    "profiles.f64",
];

/// Writes `chain` into `dir`, creating it if needed. Returns the written paths.
pub fn write_chain(
    chain: &ChainOutput,
    variable_names: &[String],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = ChainMeta {
        format_version: CHAIN_FORMAT_VERSION,
        space: chain.space.clone(),
        config: chain.config.clone(),
        config_sha256: config_hash(&chain.config),
        schedule: chain.schedule,
        rng: chain.rng,
        n_units: chain.n_units,
        n_draws: chain.n_draws(),
        chains: chain.chains,
        variable_names: variable_names.to_vec(),
        note: LABEL_WARNING.to_string(),
    };
    let paths: Vec<PathBuf> = CHAIN_FILES.iter().map(|f| dir.join(f)).collect();
    write_json(&paths[0], &meta)?;
    let t: Vec<u8> = chain.t.iter().map(|&b| u8::from(b)).collect();
    write_column(&paths[1], "t", &t)?;
    write_column(&paths[2], "occupied", &chain.occupancy)?;
    write_f64s(&paths[3], &chain.pi_x)?;
    write_f64s(&paths[4], &chain.nu)?;
    write_f64s(&paths[5], &chain.profiles)?;
    Ok(paths)
}

/// Reads a chain directory, checking the version, the config hash and
/// every array size.
pub fn read_chain(dir: impl AsRef<Path>) -> Result<(ChainOutput, ChainMeta)> {
    let dir = dir.as_ref();
    let meta_path = dir.join(CHAIN_FILES[0]);
    let meta: ChainMeta = read_json(&meta_path)?;
    if meta.format_version != CHAIN_FORMAT_VERSION {
        return Err(Error::format(
            &meta_path,
            format!("unsupported format version {}", meta.format_version),
        ));
    }
    if config_hash(&meta.config) != meta.config_sha256 {
        return Err(Error::format(&meta_path, "config hash mismatch"));
    }
    meta.config
        .validate(&meta.space)
        .map_err(|e| Error::format(&meta_path, e.to_string()))?;
    let n = meta.n_draws;
    if meta.chains == 0 || !n.is_multiple_of(meta.chains) {
        return Err(Error::format(
            &meta_path,
            format!("{n} draws do not split into {} equal chains", meta.chains),
        ));
    }
    let space = &meta.space;
    let (k, hbar, width) = (space.groups(), space.components(), space.profile_width());
    let t = read_column(&dir.join(CHAIN_FILES[1]), "t", n)?;
    if let Some(bad) = t.iter().find(|&&v| v > 1) {
        return Err(Error::format(dir.join(CHAIN_FILES[1]), format!("indicator value {bad}")));
    }
    let occupancy = read_column(&dir.join(CHAIN_FILES[2]), "occupied", n)?;
    let chain = ChainOutput {
        space: meta.space.clone(),
        config: meta.config.clone(),
        schedule: meta.schedule,
        rng: meta.rng,
        n_units: meta.n_units,
        pi_x: read_f64s(&dir.join(CHAIN_FILES[3]), n * k)?,
        nu: read_f64s(&dir.join(CHAIN_FILES[4]), n * k * hbar)?,
        profiles: read_f64s(&dir.join(CHAIN_FILES[5]), n * hbar * width)?,
        t: t.into_iter().map(|v| v == 1).collect(),
        occupancy,
        chains: meta.chains,
    };
    Ok((chain, meta))
}

/// Serializable form of a [`JointModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub levels: Vec<usize>,
    pub groups: usize,
    pub pi_x: Vec<f64>,
    /// `profiles[h][j]` is the PMF of variable `j` in component `h`.
    pub profiles: Vec<Vec<Vec<f64>>>,
    pub upsilon: Vec<f64>,
    /// One row per group.
    pub nu: Vec<Vec<f64>>,
    pub alternative: bool,
}

impl ModelDocument {
    pub fn from_model(model: &JointModel) -> Self {
        let space = model.space();
        let profiles = (0..space.components())
            .map(|h| {
                (0..space.p())
                    .map(|j| model.profiles().kernel(space, h, j).to_vec())
                    .collect()
            })
            .collect();
        let w = model.weights();
        Self {
            format_version: MODEL_FORMAT_VERSION,
            levels: space.levels().to_vec(),
            groups: space.groups(),
            pi_x: model.pi_x().as_slice().to_vec(),
            profiles,
            upsilon: w.upsilon().to_vec(),
            nu: (0..space.groups()).map(|x| w.nu(x).to_vec()).collect(),
            alternative: w.alternative(),
        }
    }

    pub fn to_model(&self) -> Result<JointModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Argument(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        let space = CategorySpace::new(self.levels.clone(), self.groups, self.profiles.len())?;
        let kernels = self
            .profiles
            .iter()
            .map(|row| row.iter().map(|v| ProbabilityVector::new(v.clone())).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let profiles = ComponentProfiles::new(&space, kernels)?;
        let upsilon = ProbabilityVector::new(self.upsilon.clone())?;
        let weights = if self.alternative {
            let nu = self
                .nu
                .iter()
                .map(|v| ProbabilityVector::new(v.clone()))
                .collect::<Result<Vec<_>>>()?;
            GroupMixingWeights::group_specific(upsilon, nu)?
        } else {
            GroupMixingWeights::shared(upsilon, self.groups)
        };
        JointModel::new(space, ProbabilityVector::new(self.pi_x.clone())?, profiles, weights)
    }
}
