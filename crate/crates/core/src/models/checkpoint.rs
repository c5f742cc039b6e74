use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Network;
use super::spec::NetSpec;
use crate::data::digest;
use crate::error::{Error, Result};
use crate::numcore::{NetworkParams, Tensor};

pub const CHECKPOINT_FORMAT: &str = "tsgan-checkpoint/1";
pub const MANIFEST_FILE: &str = "checkpoint.json";
pub const BLOB_FILE: &str = "checkpoint.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in f64 elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub role: String,
    pub spec: NetSpec,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format: String,
    pub seed: u64,
    pub step: u64,
    pub networks: Vec<NetworkEntry>,
    pub blob_sha256: String,
    #[serde(default)]
    pub meta: serde_json::Value,
}

/// Loaded networks keyed by role plus the saved metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub step: u64,
    pub networks: Vec<(String, Network)>,
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn network(&self, role: &str) -> Result<&Network> {
        self.networks
            .iter()
            .find(|(r, _)| r == role)
            .map(|(_, n)| n)
            .ok_or_else(|| Error::data(format!("checkpoint has no {role} network")))
    }
}

/// Writes a JSON manifest and a little-endian f64 blob into `dir`.
pub fn save_checkpoint(
    dir: &Path,
    networks: &[(&str, &Network)],
    seed: u64,
    step: u64,
    meta: serde_json::Value,
) -> Result<CheckpointManifest> {
    fs::create_dir_all(dir)?;
    let mut blob = Vec::new();
    let mut offset = 0;
    let mut entries = Vec::with_capacity(networks.len());
    for (role, net) in networks {
        let mut tensors = Vec::new();
        for (name, t) in net.params.iter() {
            tensors.push(TensorEntry { name: name.to_string(), shape: t.shape().to_vec(), offset });
            for v in t.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            offset += t.len();
        }
        entries.push(NetworkEntry { role: role.to_string(), spec: net.spec.clone(), tensors });
    }
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        seed,
        step,
        networks: entries,
        blob_sha256: digest(&blob),
        meta,
    };
    fs::write(dir.join(BLOB_FILE), &blob)?;
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(Error::data(format!("unsupported checkpoint format {:?}", manifest.format)));
    }
    let blob = fs::read(dir.join(BLOB_FILE))?;
    if digest(&blob) != manifest.blob_sha256 {
        return Err(Error::data("checkpoint blob digest mismatch"));
    }
    if blob.len() % 8 != 0 {
        return Err(Error::data("checkpoint blob length is not a multiple of 8"));
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut networks = Vec::with_capacity(manifest.networks.len());
    for entry in manifest.networks {
        let mut params = NetworkParams::new();
        for t in entry.tensors {
            let n: usize = t.shape.iter().product();
            let data = values
                .get(t.offset..t.offset + n)
                .ok_or_else(|| Error::data(format!("tensor {} runs past the end of the blob", t.name)))?;
            params.insert(t.name, Tensor::new(t.shape, data.to_vec())?)?;
        }
        networks.push((entry.role, Network::from_parts(entry.spec, params)?));
    }
    Ok(Checkpoint { seed: manifest.seed, step: manifest.step, networks, meta: manifest.meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{forecaster_spec, CellKind};
    use crate::numcore::RngStream;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngStream::new(5);
        let net = Network::init(forecaster_spec(CellKind::Lstm, 2, 3, 4, 2, 5).unwrap(), &mut rng).unwrap();
        save_checkpoint(dir.path(), &[("forecaster", &net)], 5, 12, serde_json::json!({"k": 1})).unwrap();
        let ck = load_checkpoint(dir.path()).unwrap();
        assert_eq!(ck.step, 12);
        let back = ck.network("forecaster").unwrap();
        for ((_, a), (_, b)) in net.params.iter().zip(back.params.iter()) {
            let (ab, bb): (Vec<u64>, Vec<u64>) =
                (a.data().iter().map(|v| v.to_bits()).collect(), b.data().iter().map(|v| v.to_bits()).collect());
            assert_eq!(ab, bb);
        }
        assert_eq!(back.spec, net.spec);
    }

    #[test]
    fn corrupted_blob_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngStream::new(5);
        let net = Network::init(forecaster_spec(CellKind::Gru, 1, 2, 3, 1, 1).unwrap(), &mut rng).unwrap();
        save_checkpoint(dir.path(), &[("f", &net)], 5, 0, serde_json::Value::Null).unwrap();
        let mut blob = fs::read(dir.path().join(BLOB_FILE)).unwrap();
        blob[0] ^= 1;
        fs::write(dir.path().join(BLOB_FILE), blob).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::Data(_))));
    }
}
