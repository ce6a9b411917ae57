use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pptes_core::{json, Error, Mat3, Op9, ProductVector, Result};

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateFile(#[serde(with = "json::matrix")] pub Op9);

#[derive(Serialize, Deserialize)]
pub struct IloFile {
    #[serde(rename = "A", with = "json::matrix")]
    pub a: Mat3,
    #[serde(rename = "B", with = "json::matrix")]
    pub b: Mat3,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn read_state(path: &Path) -> Result<Op9> {
    Ok(read_json::<StateFile>(path)?.0)
}

pub fn read_tuple(path: &Path, len: usize) -> Result<Vec<ProductVector>> {
    let tuple: Vec<ProductVector> = read_json(path)?;
    if tuple.len() != len {
        return Err(Error::InvalidInput(format!(
            "{}: expected {len} product vectors, got {}",
            path.display(),
            tuple.len()
        )));
    }
    // re-apply the gauge so that hand-written files are accepted
    tuple.iter().map(|p| p.normalized()).collect()
}
