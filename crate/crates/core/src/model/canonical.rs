//! Canonical text encoding shared by every document, log line and wire
//! message: compact JSON with object keys in sorted order.
//!
//! Two values are considered equal iff their canonical encodings are
//! byte-equal; digests are taken over the same bytes.

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
#[error("canonical encoding error: {0}")]
pub struct CanonicalError(#[from] serde_json::Error);

/// Encodes `value` canonically. Objects are routed through
/// `serde_json::Value`, whose map type keeps keys sorted.
pub fn encode<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

/// Like [`encode`] but for types whose serialization cannot fail (all the
/// model types in this crate).
pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> String {
    encode(value).expect("model types always serialize")
}

pub fn decode<T: DeserializeOwned>(text: &str) -> Result<T, CanonicalError> {
    Ok(serde_json::from_str(text)?)
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// FNV-1a digest of the canonical encoding, rendered as 16 lowercase hex
/// digits.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    format!("{:016x}", fnv1a64(to_canonical(value).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_are_sorted_and_compact() {
        let mut m = HashMap::new();
        m.insert("zeta", 1);
        m.insert("alpha", 2);
        m.insert("mid", 3);
        assert_eq!(to_canonical(&m), r#"{"alpha":2,"mid":3,"zeta":1}"#);
    }

    #[test]
    fn fnv_matches_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
