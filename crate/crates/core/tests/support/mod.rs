//! Independent reference implementations used only by tests.
#![allow(dead_code)]

pub mod metrics_oracle;
pub mod random_cases;

use std::collections::HashMap;

/// Trigram embedding computed sparsely: count trigram strings first, then
/// fold them into buckets. Shares no code with the library's dense path.
pub fn sparse_embed(text: &str) -> HashMap<u64, f64> {
    let lowered: String = text.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    let mut grams: HashMap<String, f64> = HashMap::new();
    for i in 0..chars.len().saturating_sub(2) {
        let g: String = chars[i..i + 3].iter().collect();
        *grams.entry(g).or_insert(0.0) += 1.0;
    }
    let mut buckets: HashMap<u64, f64> = HashMap::new();
    for (g, n) in grams {
        let mut h: u64 = 14695981039346656037;
        for b in g.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(1099511628211);
        }
        *buckets.entry(h % 256).or_insert(0.0) += n;
    }
    buckets
}

pub fn sparse_cosine(a: &str, b: &str) -> f64 {
    let (va, vb) = (sparse_embed(a), sparse_embed(b));
    let dot: f64 = va.iter().map(|(k, x)| x * vb.get(k).copied().unwrap_or(0.0)).sum();
    let na: f64 = va.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = vb.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
