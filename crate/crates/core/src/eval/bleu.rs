use std::collections::HashMap;

use crate::error::{Error, Result};

/// Corpus BLEU-4 and its components.
#[derive(Clone, Debug, PartialEq)]
pub struct BleuScore {
    pub bleu: f64,
    /// Modified n-gram precisions for n = 1..4.
    pub precisions: [f64; 4],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

#[derive(Clone, Copy, Default)]
struct Counts {
    matched: [u64; 4],
    total: [u64; 4],
    hyp_len: usize,
    ref_len: usize,
}

fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut out = HashMap::new();
    for w in tokens.windows(n) {
        *out.entry(w.iter().map(AsRef::as_ref).collect())
            .or_insert(0) += 1;
    }
    out
}

fn sentence_counts<S: AsRef<str>>(hyp: &[S], refs: &[Vec<S>]) -> Counts {
    let mut c = Counts {
        hyp_len: hyp.len(),
        // closest reference length, ties to the shorter one
        ref_len: refs
            .iter()
            .map(Vec::len)
            .min_by_key(|&r| (r.abs_diff(hyp.len()), r))
            .expect("at least one reference"),
        ..Counts::default()
    };
    for n in 1..=4 {
        let hyp_grams = ngrams(hyp, n);
        let mut max_ref: HashMap<Vec<&str>, u64> = HashMap::new();
        for r in refs {
            for (g, k) in ngrams(r, n) {
                let slot = max_ref.entry(g).or_insert(0);
                *slot = (*slot).max(k);
            }
        }
        c.total[n - 1] = hyp_grams.values().sum();
        c.matched[n - 1] = hyp_grams
            .iter()
            .map(|(g, &k)| k.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
    }
    c
}

/// Corpus-level BLEU-4 with clipped counts and no smoothing. Each hypothesis
/// has one or more references; any zero precision gives a score of 0.
pub fn bleu4<S: AsRef<str>>(
    hypotheses: &[Vec<S>],
    references: &[Vec<Vec<S>>],
) -> Result<BleuScore> {
    if hypotheses.is_empty() {
        return Err(Error::Invalid("empty corpus".into()));
    }
    if hypotheses.len() != references.len() {
        return Err(Error::Invalid(format!(
            "{} hypotheses but {} reference sets",
            hypotheses.len(),
            references.len()
        )));
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(Error::Invalid(format!(
            "sentence {} has no reference",
            i + 1
        )));
    }
    let mut sum = Counts::default();
    for (h, r) in hypotheses.iter().zip(references) {
        let c = sentence_counts(h, r);
        for n in 0..4 {
            sum.matched[n] += c.matched[n];
            sum.total[n] += c.total[n];
        }
        sum.hyp_len += c.hyp_len;
        sum.ref_len += c.ref_len;
    }
    let precisions: [f64; 4] = std::array::from_fn(|n| {
        if sum.total[n] == 0 {
            0.0
        } else {
            sum.matched[n] as f64 / sum.total[n] as f64
        }
    });
    let (c, r) = (sum.hyp_len as f64, sum.ref_len as f64);
    let brevity_penalty = if sum.hyp_len == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r / c).exp()
    };
    let bleu = if precisions.contains(&0.0) {
        0.0
    } else {
        brevity_penalty * (precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0).exp()
    };
    Ok(BleuScore {
        bleu,
        precisions,
        brevity_penalty,
        hyp_len: sum.hyp_len,
        ref_len: sum.ref_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity_is_one() {
        let h = vec![toks("a b c d e"), toks("f g h i")];
        let r: Vec<_> = h.iter().map(|s| vec![s.clone()]).collect();
        assert_eq!(bleu4(&h, &r).unwrap().bleu, 1.0);
    }

    #[test]
    fn brevity_penalty_case() {
        let s = bleu4(&[toks("a b c d")], &[vec![toks("a b c d e")]]).unwrap();
        assert_eq!(s.precisions, [1.0; 4]);
        assert!((s.bleu - (-0.25f64).exp()).abs() < 1e-15);
        assert!((s.bleu - 0.778801).abs() < 1e-6);
    }

    #[test]
    fn clipping_and_closest_reference() {
        let s = bleu4(
            &[toks("the the the the")],
            &[vec![toks("the cat"), toks("the the x y z")]],
        )
        .unwrap();
        assert_eq!(s.precisions[0], 0.5);
        assert_eq!(s.bleu, 0.0);
        // lengths 3 and 5 are equally close to 4; the shorter wins
        let s = bleu4(
            &[toks("a b c d")],
            &[vec![toks("a b c d e"), toks("a b c")]],
        )
        .unwrap();
        assert_eq!(s.ref_len, 3);
        assert_eq!(s.brevity_penalty, 1.0);
    }

    #[test]
    fn bad_inputs() {
        let empty: Vec<Vec<&str>> = Vec::new();
        assert!(bleu4(&empty, &[]).is_err());
        assert!(bleu4(&[toks("a")], &[vec![]]).is_err());
        assert!(bleu4(&[toks("a")], &[]).is_err());
    }
}
