//! Content digests for analysis inputs and outputs.
//!
//! Digests are SHA-256 over the compact serialization of a JSON value.
//! `serde_json` maps are ordered by key, so the serialization is canonical.

use sha2::{Digest, Sha256};

pub fn digest_json(value: &serde_json::Value) -> String {
    digest_str(&value.to_string())
}

pub fn digest_str(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_across_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b":1,"a":2}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a":2,"b":1}"#).unwrap();
        assert_eq!(digest_json(&a), digest_json(&b));
    }
}
