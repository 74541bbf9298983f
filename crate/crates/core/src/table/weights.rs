use std::collections::BTreeMap;
use std::io::BufRead;

use super::{Manifest, PhraseEntry, CORE_FEATURES};
use crate::error::{Error, Result};

/// Probability floor applied before taking logs.
pub const DEFAULT_FLOOR: f64 = 1e-9;

/// Per-feature log-linear weights, keyed by feature name.
///
/// The default value weighs every feature 1.0. Weights read from a config
/// file default only the four core features to 1.0; any extra feature a
/// table declares must be listed explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLinearWeights {
    weights: BTreeMap<String, f64>,
    fallback: Option<f64>,
}

impl Default for LogLinearWeights {
    fn default() -> Self {
        LogLinearWeights {
            weights: BTreeMap::new(),
            fallback: Some(1.0),
        }
    }
}

impl LogLinearWeights {
    /// Weights with no implicit defaults at all.
    pub fn strict() -> Self {
        LogLinearWeights {
            weights: BTreeMap::new(),
            fallback: None,
        }
    }

    pub fn set(&mut self, name: impl Into<String>, weight: f64) -> Result<()> {
        if !weight.is_finite() {
            return Err(Error::Invalid(format!("weight {weight} is not finite")));
        }
        self.weights.insert(name.into(), weight);
        Ok(())
    }

    pub fn with(mut self, name: &str, weight: f64) -> Self {
        self.set(name, weight).expect("finite weight");
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.weights.get(name).copied().or(self.fallback)
    }

    /// Reads `name = value` lines; `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut w = Self::strict();
        for name in CORE_FEATURES {
            w.weights.insert(name.to_string(), 1.0);
        }
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (name, value) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `name = value`"))?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::parse(i + 1, format!("bad feature name `{name}`")));
            }
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad weight `{}`", value.trim())))?;
            w.set(name, value)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(w)
    }

    /// Resolves one weight per manifest feature.
    pub fn resolve(&self, manifest: &Manifest) -> Result<WeightVector> {
        manifest
            .names()
            .map(|n| {
                self.get(n)
                    .ok_or_else(|| Error::MissingWeight(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()
            .map(WeightVector)
    }
}

/// Weights laid out in manifest order, ready for scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Σ weight × ln(max(score, floor)) over all features of `entry`.
    pub fn score(&self, entry: &PhraseEntry, floor: f64) -> f64 {
        self.0
            .iter()
            .zip(entry.scores.values())
            .map(|(w, s)| w * s.max(floor).ln())
            .sum()
    }
}

/// Log-linear score of `entry` under `weights`, used for ranking.
pub fn loglinear_score(
    entry: &PhraseEntry,
    manifest: &Manifest,
    weights: &LogLinearWeights,
    floor: f64,
) -> Result<f64> {
    if floor.is_nan() || floor <= 0.0 {
        return Err(Error::Invalid(format!(
            "probability floor must be positive, got {floor}"
        )));
    }
    Ok(weights.resolve(manifest)?.score(entry, floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Alignment, Phrase, ScoreSet};

    fn entry(core: [f64; 4]) -> PhraseEntry {
        PhraseEntry::new(
            Phrase::parse("a").unwrap(),
            Phrase::parse("x").unwrap(),
            ScoreSet::from_core(core),
            Alignment::new(),
        )
    }

    #[test]
    fn all_ones_scores_zero() {
        let s = loglinear_score(
            &entry([1.0; 4]),
            &Manifest::new(),
            &Default::default(),
            DEFAULT_FLOOR,
        );
        assert_eq!(s.unwrap(), 0.0);
    }

    #[test]
    fn halves_sum_to_four_ln_half() {
        let s = loglinear_score(
            &entry([0.5; 4]),
            &Manifest::new(),
            &Default::default(),
            DEFAULT_FLOOR,
        )
        .unwrap();
        assert!((s - (-2.772589)).abs() < 1e-6, "{s}");
    }

    #[test]
    fn zero_is_floored() {
        let s = loglinear_score(
            &entry([0.0, 1.0, 1.0, 1.0]),
            &Manifest::new(),
            &Default::default(),
            DEFAULT_FLOOR,
        )
        .unwrap();
        assert!(s.is_finite());
        assert!((s - 1e-9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn missing_extra_weight_is_an_error() {
        let w = LogLinearWeights::parse("phi_fwd = 0.5 # comment\n\n".as_bytes()).unwrap();
        assert_eq!(w.get("lex_bwd"), Some(1.0));
        let m = Manifest::with_extras(["conn_s"]).unwrap();
        assert!(matches!(w.resolve(&m), Err(Error::MissingWeight(n)) if n == "conn_s"));
    }

    #[test]
    fn weights_file_errors() {
        assert!(LogLinearWeights::parse("phi_fwd 0.5\n".as_bytes()).is_err());
        assert!(LogLinearWeights::parse("phi_fwd = x\n".as_bytes()).is_err());
        assert!(LogLinearWeights::parse("phi_fwd = inf\n".as_bytes()).is_err());
    }
}
