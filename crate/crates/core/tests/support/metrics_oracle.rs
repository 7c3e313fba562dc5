//! Brute-force span metrics: nested loops over plain vectors, no sets and no
//! shared code with the library.

pub struct OracleSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

pub struct OracleCase {
    pub text: String,
    pub gold: Vec<OracleSpan>,
    pub pred: Vec<OracleSpan>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMetrics {
    pub p_micro: f64,
    pub r_micro: f64,
    pub f1_micro: f64,
    pub p_macro: f64,
    pub r_macro: f64,
    pub f1_macro: f64,
    pub accuracy: f64,
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn same(a: &OracleSpan, b: &OracleSpan) -> bool {
    a.start == b.start && a.end == b.end && a.label == b.label
}

fn dedup(spans: &[OracleSpan]) -> Vec<&OracleSpan> {
    let mut out: Vec<&OracleSpan> = Vec::new();
    for s in spans {
        if !out.iter().any(|o| same(o, s)) {
            out.push(s);
        }
    }
    out
}

/// Token boundaries as maximal alphanumeric runs, by char offset.
fn tokens(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphanumeric() {
            let s = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            out.push((s, i));
        } else {
            i += 1;
        }
    }
    out
}

/// Tag of token `t` is decided by looking at the span covering it and
/// whether the previous token is covered by the same span.
fn tag(spans: &[&OracleSpan], toks: &[(usize, usize)], t: usize) -> String {
    let covering = |k: usize| spans.iter().position(|s| s.start < toks[k].1 && toks[k].0 < s.end);
    match covering(t) {
        None => "O".into(),
        Some(i) => {
            if t > 0 && covering(t - 1) == Some(i) {
                format!("I-{}", spans[i].label)
            } else {
                format!("B-{}", spans[i].label)
            }
        }
    }
}

pub fn oracle(cases: &[OracleCase]) -> OracleMetrics {
    let mut labels: Vec<String> = Vec::new();
    for c in cases {
        for s in c.gold.iter().chain(&c.pred) {
            if !labels.contains(&s.label) {
                labels.push(s.label.clone());
            }
        }
    }
    let (mut tp, mut fp, mut fnn) = (0.0, 0.0, 0.0);
    let mut per: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); labels.len()];
    let (mut tok_same, mut tok_total) = (0.0, 0.0);
    for c in cases {
        let gold = dedup(&c.gold);
        let pred = dedup(&c.pred);
        for p in &pred {
            let li = labels.iter().position(|l| *l == p.label).unwrap();
            if gold.iter().any(|g| same(g, p)) {
                tp += 1.0;
                per[li].0 += 1.0;
            } else {
                fp += 1.0;
                per[li].1 += 1.0;
            }
        }
        for g in &gold {
            if !pred.iter().any(|p| same(g, p)) {
                let li = labels.iter().position(|l| *l == g.label).unwrap();
                fnn += 1.0;
                per[li].2 += 1.0;
            }
        }
        let toks = tokens(&c.text);
        for t in 0..toks.len() {
            tok_total += 1.0;
            if tag(&gold, &toks, t) == tag(&pred, &toks, t) {
                tok_same += 1.0;
            }
        }
    }
    let p_micro = div(tp, tp + fp);
    let r_micro = div(tp, tp + fnn);
    let n = labels.len() as f64;
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    for (ctp, cfp, cfn) in &per {
        let p = div(*ctp, ctp + cfp);
        let r = div(*ctp, ctp + cfn);
        sp += p;
        sr += r;
        sf += f1(p, r);
    }
    OracleMetrics {
        p_micro,
        r_micro,
        f1_micro: f1(p_micro, r_micro),
        p_macro: div(sp, n),
        r_macro: div(sr, n),
        f1_macro: div(sf, n),
        accuracy: div(tok_same, tok_total),
    }
}
