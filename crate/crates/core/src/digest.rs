use sha2::{Digest, Sha256};

/// Hex SHA-256 prefix over the given parts, separated by a unit separator.
pub fn stable_digest<S: AsRef<str>>(parts: &[S]) -> String {
    let mut h = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h.update([0x1f]);
        }
        h.update(p.as_ref().as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}
