//! Binary snapshots with a TOML metadata sidecar.
//!
//! The data file holds raw little-endian `f64` arrays of `n` values each, in
//! the order `B_0, B_1, B_2, B_3, Ḃ_0, Ḃ_1, Ḃ_2, Ḃ_3`, followed by `φ, φ̇`
//! for full states. The sidecar lives next to it at `<path>.meta.toml`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{FieldArray, Grid1D};
use crate::scenario::ScenarioSpec;
use crate::state::{FullState, Params, ReducedState};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotKind {
    Full,
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotState {
    Full(FullState),
    Reduced(ReducedState),
}

impl SnapshotState {
    pub fn kind(&self) -> SnapshotKind {
        match self {
            Self::Full(_) => SnapshotKind::Full,
            Self::Reduced(_) => SnapshotKind::Reduced,
        }
    }

    pub fn em(&self) -> &ReducedState {
        match self {
            Self::Full(s) => &s.em,
            Self::Reduced(s) => s,
        }
    }

    fn arrays(&self) -> Vec<&FieldArray> {
        let mut out: Vec<&FieldArray> = self.em().arrays().collect();
        if let Self::Full(s) = self {
            out.push(&s.phi);
            out.push(&s.phidot);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub format_version: String,
    pub kind: SnapshotKind,
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

/// Write the data file and its sidecar.
pub fn write_snapshot(path: &Path, state: &SnapshotState, params: &Params, scenario: Option<&ScenarioSpec>) -> Result<()> {
    let em = state.em();
    let meta = SnapshotMeta {
        format_version: FORMAT_VERSION.to_string(),
        kind: state.kind(),
        n: em.grid.n(),
        length: em.grid.length(),
        t: em.t,
        params: *params,
        scenario: scenario.copied(),
    };
    let arrays = state.arrays();
    let mut bytes = Vec::with_capacity(arrays.len() * em.grid.n() * 8);
    for a in arrays {
        for v in a {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    let text = toml::to_string(&meta).map_err(|e| Error::Parse(format!("snapshot metadata: {e}")))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotState, SnapshotMeta)> {
    let text = fs::read_to_string(sidecar_path(path))?;
    let raw: toml::Value = toml::from_str(&text).map_err(|e| Error::Parse(format!("snapshot metadata: {e}")))?;
    match raw.get("format_version").and_then(toml::Value::as_str) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::FormatVersionMismatch(format!("snapshot format {v:?}, expected {FORMAT_VERSION:?}"))),
        None => return Err(Error::Parse("snapshot metadata lacks format_version".into())),
    }
    let meta: SnapshotMeta = raw.try_into().map_err(|e| Error::Parse(format!("snapshot metadata: {e}")))?;
    let grid = if meta.n <= 4 { Grid1D::tiny(meta.n, meta.length)? } else { Grid1D::new(meta.n, meta.length)? };

    let count = match meta.kind {
        SnapshotKind::Full => 10,
        SnapshotKind::Reduced => 8,
    };
    let bytes = fs::read(path)?;
    let expected = (count * meta.n * 8) as u64;
    if (bytes.len() as u64) < expected {
        return Err(Error::TruncatedFile { expected, found: bytes.len() as u64 });
    }
    if bytes.len() as u64 > expected {
        return Err(Error::Parse(format!("snapshot has {} bytes, expected {expected}", bytes.len())));
    }
    let mut arrays = bytes.chunks_exact(meta.n * 8).map(|chunk| {
        chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect::<Vec<f64>>()
    });
    let mut em = ReducedState::zeros(grid);
    em.t = meta.t;
    for mu in 0..4 {
        em.b[mu] = arrays.next().expect("array count checked");
    }
    for mu in 0..4 {
        em.bdot[mu] = arrays.next().expect("array count checked");
    }
    let state = match meta.kind {
        SnapshotKind::Reduced => SnapshotState::Reduced(em),
        SnapshotKind::Full => SnapshotState::Full(FullState {
            em,
            phi: arrays.next().expect("array count checked"),
            phidot: arrays.next().expect("array count checked"),
        }),
    };
    Ok((state, meta))
}
