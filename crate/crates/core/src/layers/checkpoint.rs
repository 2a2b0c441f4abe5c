//! JSON checkpoints: a config echo plus one base64 block of little-endian
//! `f64` values per parameter block. Round trips are bit-exact.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{ParamBlocks, SgnConfig, SgnParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "sgn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub data: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub config: SgnConfig,
    pub blocks: Vec<CheckpointBlock>,
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(text: &str, expected: usize, name: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::Format(format!("block {name}: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Format(format!(
            "block {name}: {} bytes for {expected} values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

impl Checkpoint {
    pub fn from_sgn(p: &SgnParams<f64>) -> Self {
        let blocks = p
            .blocks()
            .into_iter()
            .map(|b| CheckpointBlock {
                name: b.name.to_string(),
                rows: b.rows,
                cols: b.cols,
                dtype: "f64le".into(),
                data: encode(b.data),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kind: "sgn".into(),
            config: p.config.clone(),
            blocks,
        }
    }

    /// Rebuilds the block from its config echo, then overwrites every block.
    pub fn to_sgn(&self) -> Result<SgnParams<f64>> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.kind != "sgn" {
            return Err(Error::Format(format!("expected an sgn checkpoint, found {}", self.kind)));
        }
        let mut p = SgnParams::<f64>::from_config(&self.config)?;
        let expected: Vec<(&'static str, usize, usize)> =
            p.blocks().iter().map(|b| (b.name, b.rows, b.cols)).collect();
        if expected.len() != self.blocks.len() {
            return Err(Error::Format(format!(
                "{} blocks stored, {} expected",
                self.blocks.len(),
                expected.len()
            )));
        }
        for ((name, rows, cols), stored) in expected.iter().zip(&self.blocks) {
            if stored.name != *name || stored.rows != *rows || stored.cols != *cols {
                return Err(Error::Format(format!(
                    "block {} ({}x{}) does not match expected {name} ({rows}x{cols})",
                    stored.name, stored.rows, stored.cols
                )));
            }
            if stored.dtype != "f64le" {
                return Err(Error::Format(format!("block {name}: unsupported dtype {}", stored.dtype)));
            }
        }
        for ((_, dst), stored) in p.blocks_mut().into_iter().zip(&self.blocks) {
            let values = decode(&stored.data, dst.len(), &stored.name)?;
            dst.copy_from_slice(&values);
        }
        p.validate_shapes()?;
        Ok(p)
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, p: &SgnParams<f64>) -> Result<()> {
    let text = serde_json::to_string_pretty(&Checkpoint::from_sgn(p))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SgnParams<f64>> {
    let text = std::fs::read_to_string(path)?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    ck.to_sgn()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::BlockShape;
    use crate::numkit::Rng;

    fn sample() -> SgnParams<f64> {
        let mut cfg = SgnConfig::new(BlockShape::ffn(3, 5), 2);
        cfg.seed = 11;
        let mut p = SgnParams::from_config(&cfg).unwrap();
        let mut rng = Rng::new(5);
        for (_, b) in p.blocks_mut() {
            b.iter_mut().for_each(|v| *v += rng.gaussian(0.0, 1.0) * 1e-3);
        }
        p.b1[0] = f64::MIN_POSITIVE / 3.0;
        p.b2[1] = -0.0;
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = sample();
        let text = serde_json::to_string(&Checkpoint::from_sgn(&p)).unwrap();
        let q = serde_json::from_str::<Checkpoint>(&text).unwrap().to_sgn().unwrap();
        let a: Vec<u64> = p.to_flat().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = q.to_flat().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(p.config, q.config);
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("sgn-ck-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("block.json");
        let p = sample();
        save_checkpoint(&path, &p).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), p);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_mismatched_block() {
        let mut ck = Checkpoint::from_sgn(&sample());
        ck.blocks[0].rows += 1;
        assert!(matches!(ck.to_sgn(), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncated_data() {
        let mut ck = Checkpoint::from_sgn(&sample());
        ck.blocks[1].data = encode(&[1.0]);
        assert!(ck.to_sgn().is_err());
    }

    #[test]
    fn rejects_unknown_config_key() {
        let ck = Checkpoint::from_sgn(&sample());
        let mut v = serde_json::to_value(&ck).unwrap();
        v["config"]["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<Checkpoint>(v).is_err());
    }
}
