//! Random small gold/pred instances over token-aligned, non-overlapping spans.

use rand::Rng;

pub type RawSpan = (usize, usize, String);

pub struct RawCase {
    pub text: String,
    pub gold: Vec<RawSpan>,
    pub pred: Vec<RawSpan>,
}

const WORDS: [&str; 8] = ["ab", "cde", "f", "ghij", "kl", "mno", "pq", "r"];
const CLASSES: [&str; 3] = ["A", "B", "C"];

fn spans<R: Rng>(rng: &mut R, toks: &[(usize, usize)], classes: usize) -> Vec<RawSpan> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if rng.gen_bool(0.45) {
            let len = rng.gen_range(1..=(toks.len() - i).min(3));
            let label = CLASSES[rng.gen_range(0..classes)].to_string();
            out.push((toks[i].0, toks[i + len - 1].1, label));
            i += len;
        } else {
            i += 1;
        }
    }
    out
}

/// One instance: 1 to 3 examples of at most 6 tokens over at most 3 classes.
pub fn random_instance<R: Rng>(rng: &mut R) -> Vec<RawCase> {
    let classes = rng.gen_range(1..=3);
    (0..rng.gen_range(1..=3))
        .map(|_| {
            let n = rng.gen_range(0..=6);
            let mut text = String::new();
            let mut toks = Vec::new();
            for k in 0..n {
                if k > 0 {
                    text.push_str(if rng.gen_bool(0.2) { ", " } else { " " });
                }
                let start = text.chars().count();
                text.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
                toks.push((start, text.chars().count()));
            }
            // prediction sometimes copies gold to make matches likely
            let gold = spans(rng, &toks, classes);
            let pred = if rng.gen_bool(0.3) {
                gold.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect()
            } else {
                spans(rng, &toks, classes)
            };
            RawCase { text, gold, pred }
        })
        .collect()
}
