//! Deterministic text embeddings from hashed character trigrams.
//!
//! The input is lowercased, every window of three consecutive chars
//! (spaces included) is hashed with 64-bit FNV-1a over its UTF-8 bytes, and
//! the count lands in bucket `hash % DIM`. The result is L2-normalized.
//! Inputs shorter than three chars map to the zero vector.

pub const DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Clone, PartialEq)]
pub struct Embedding(Box<[f64; DIM]>);

impl std::fmt::Debug for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nonzero = self.0.iter().filter(|v| **v != 0.0).count();
        write!(f, "Embedding {{ nonzero: {nonzero}, norm: {:.6} }}", self.norm())
    }
}

impl Embedding {
    pub fn zero() -> Self {
        Embedding(Box::new([0.0; DIM]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0[..]
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Cosine similarity in `[-1, 1]`; 0 when either side is the zero vector.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return 0.0;
        }
        (self.dot(other) / denom).clamp(-1.0, 1.0)
    }
}

pub fn embed(text: &str) -> Embedding {
    let lowered: Vec<char> = text.to_lowercase().chars().collect();
    let mut v = Embedding::zero();
    if lowered.len() < 3 {
        return v;
    }
    let mut buf = [0u8; 12];
    for window in lowered.windows(3) {
        let mut n = 0;
        for c in window {
            n += c.encode_utf8(&mut buf[n..]).len();
        }
        let bucket = (fnv1a64(&buf[..n]) % DIM as u64) as usize;
        v.0[bucket] += 1.0;
    }
    let norm = v.norm();
    for x in v.0.iter_mut() {
        *x /= norm;
    }
    v
}

pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    a.cosine(b)
}

/// `max(0, cosine)`, the score every baseline component reports.
pub fn similarity(a: &Embedding, b: &Embedding) -> f64 {
    a.cosine(b).max(0.0)
}
