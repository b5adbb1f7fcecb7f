use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Maps text to a unit vector. Vectors from different embedder ids are not
/// comparable.
pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding service failed: {0}")]
    Service(String),
}

pub const HASH_NGRAM_ID: &str = "hash-ngram";
pub const HASH_NGRAM_DIM: usize = 256;

/// Character 3-gram feature hashing.
///
/// Text is lowercased, every non-alphanumeric character becomes a space,
/// runs of spaces collapse, and one space pads each end. Each 3-character
/// window is hashed with 64-bit FNV-1a over its UTF-8 bytes into one of 256
/// buckets; bucket counts are L2-normalized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HashNgramEmbedder;

impl HashNgramEmbedder {
    pub fn normalize(text: &str) -> String {
        let mut out = String::from(" ");
        for c in text.chars().flat_map(char::to_lowercase) {
            let c = if c.is_alphanumeric() { c } else { ' ' };
            if c == ' ' && out.ends_with(' ') {
                continue;
            }
            out.push(c);
        }
        if !out.ends_with(' ') {
            out.push(' ');
        }
        out
    }

    /// Raw bucket counts before normalization.
    pub fn features(text: &str) -> Vec<u32> {
        let norm = Self::normalize(text);
        let chars: Vec<char> = norm.chars().collect();
        let mut counts = vec![0u32; HASH_NGRAM_DIM];
        let mut buf = [0u8; 12];
        for w in chars.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let bucket = (fnv1a64(&buf[..len]) % HASH_NGRAM_DIM as u64) as usize;
            counts[bucket] += 1;
        }
        counts
    }
}

impl Embedder for HashNgramEmbedder {
    fn id(&self) -> &str {
        HASH_NGRAM_ID
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let counts = Self::features(text);
        let norm = libm::sqrt(counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>());
        if norm == 0.0 {
            return Err(EmbedError::EmptyText);
        }
        Ok(counts.iter().map(|&c| c as f64 / norm).collect())
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Cosine of two equal-length vectors; 0 when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum::<f64>());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(
            HashNgramEmbedder::normalize("Light-Gray  FABRIC, sofa!"),
            " light gray fabric sofa "
        );
        assert_eq!(HashNgramEmbedder::normalize("!!"), " ");
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn deterministic_unit_vectors() {
        let e = HashNgramEmbedder;
        let a = e.embed("gray fabric sofa").unwrap();
        assert_eq!(a, e.embed("gray fabric sofa").unwrap());
        assert_eq!(a.len(), HASH_NGRAM_DIM);
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_text() {
        assert_eq!(HashNgramEmbedder.embed(""), Err(EmbedError::EmptyText));
        assert_eq!(HashNgramEmbedder.embed(" ?! "), Err(EmbedError::EmptyText));
        assert!(HashNgramEmbedder.embed("a").is_ok());
    }
}
