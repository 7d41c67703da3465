//! Parameter checkpoints: one line of JSON header, then the parameters as a flat
//! little-endian `f64` array. The header must carry `"len"`, the float count.

use serde_json::Value;

use crate::{Error, Result};

pub fn encode(header: &Value, values: &[f64]) -> Vec<u8> {
    let mut out = serde_json::to_vec(header).expect("header serializes");
    out.push(b'\n');
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(Value, Vec<f64>)> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
    let header: Value = serde_json::from_slice(&bytes[..newline])?;
    let len = header
        .get("len")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Checkpoint("header lacks len".into()))? as usize;
    let body = &bytes[newline + 1..];
    if body.len() != len * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {} payload bytes, found {}",
            len * 8,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = encode(&serde_json::json!({"len": 2}), &[1.0, 2.0]);
        bytes.pop();
        assert!(decode(&bytes).is_err());
        assert!(decode(b"no header").is_err());
    }

    #[test]
    fn layout_is_little_endian() {
        let bytes = encode(&serde_json::json!({"len": 1}), &[1.0]);
        assert_eq!(&bytes[bytes.len() - 8..], &1.0f64.to_le_bytes());
        assert_eq!(bytes[bytes.len() - 9], b'\n');
    }
}
