//! Morphological resources: per-word maximum-likelihood feature values,
//! hand-written value mappings between languages, and an induced translation
//! model between feature-combination tags.

mod fc;
mod lexicon;
mod rules;

use std::fmt;
use std::str::FromStr;

pub use fc::{train_fc_model, FcCounter, FcModel};
pub use lexicon::{LexiconBuilder, LexiconEntry, MorphLexicon};
pub use rules::RuleMapping;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MorphFeature {
    Pos,
    Gen,
    Num,
    Det,
}

impl MorphFeature {
    /// The default feature set: gender, number, determiner and POS.
    pub const DEFAULT_SET: [MorphFeature; 4] = [
        MorphFeature::Gen,
        MorphFeature::Num,
        MorphFeature::Det,
        MorphFeature::Pos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MorphFeature::Pos => "POS",
            MorphFeature::Gen => "GEN",
            MorphFeature::Num => "NUM",
            MorphFeature::Det => "DET",
        }
    }

    /// Parses a comma-separated list such as `gen,num,det`.
    pub fn parse_set(text: &str) -> Result<Vec<MorphFeature>> {
        let mut set: Vec<MorphFeature> = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let f: MorphFeature = part.parse()?;
            if !set.contains(&f) {
                set.push(f);
            }
        }
        if set.is_empty() {
            return Err(Error::Invalid("empty feature set".into()));
        }
        Ok(set)
    }
}

impl FromStr for MorphFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pos" => Ok(MorphFeature::Pos),
            "gen" => Ok(MorphFeature::Gen),
            "num" => Ok(MorphFeature::Num),
            "det" => Ok(MorphFeature::Det),
            _ => Err(Error::UnknownFeature(s.to_string())),
        }
    }
}

impl fmt::Display for MorphFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One word's value for each morphological feature.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MorphValues {
    pub pos: String,
    pub gen: String,
    pub num: String,
    pub det: String,
}

impl MorphValues {
    pub fn new(pos: &str, gen: &str, num: &str, det: &str) -> Self {
        MorphValues {
            pos: pos.into(),
            gen: gen.into(),
            num: num.into(),
            det: det.into(),
        }
    }

    pub fn get(&self, f: MorphFeature) -> &str {
        match f {
            MorphFeature::Pos => &self.pos,
            MorphFeature::Gen => &self.gen,
            MorphFeature::Num => &self.num,
            MorphFeature::Det => &self.det,
        }
    }
}

/// A sequence of bracketed feature-combination tokens such as
/// `[Fem+Dual+Det]` or `[Fem+Singular] [Fem+Dual]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FcTag(Vec<String>);

// Values that mean "feature not applicable" and are left out of tags.
const BLANK_VALUES: [&str; 4] = ["NA", "na", "-", "_"];

impl FcTag {
    pub const UNKNOWN: &'static str = "[UNK]";

    /// Renders `values` as a single token: Gen, Num, Det joined by `+`,
    /// optionally preceded by POS. Not-applicable values are skipped.
    pub fn from_values(values: &MorphValues, with_pos: bool) -> Self {
        let mut parts: Vec<&str> = Vec::with_capacity(4);
        if with_pos {
            parts.push(&values.pos);
        }
        parts.extend([
            values.gen.as_str(),
            values.num.as_str(),
            values.det.as_str(),
        ]);
        parts.retain(|p| !BLANK_VALUES.contains(p));
        if parts.is_empty() {
            return FcTag(vec!["[NA]".into()]);
        }
        FcTag(vec![format!("[{}]", parts.join("+"))])
    }

    pub fn unknown() -> Self {
        FcTag(vec![Self::UNKNOWN.into()])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let toks: Vec<String> = text.split_whitespace().map(String::from).collect();
        if toks.is_empty() {
            return Err(Error::Invalid("empty feature-combination tag".into()));
        }
        if let Some(t) = toks
            .iter()
            .find(|t| !(t.len() > 2 && t.starts_with('[') && t.ends_with(']')))
        {
            return Err(Error::Invalid(format!(
                "bad feature-combination token `{t}`"
            )));
        }
        Ok(FcTag(toks))
    }

    /// Joins single tags into one multi-token tag, in the given order.
    pub fn concat<'a>(tags: impl IntoIterator<Item = &'a FcTag>) -> Self {
        FcTag(tags.into_iter().flat_map(|t| t.0.iter().cloned()).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for FcTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Splits a tab-separated row, falling back to whitespace when the row has
/// no tabs.
pub(crate) fn split_row(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fc_tag_rendering() {
        let v = MorphValues::new("noun", "Fem", "Dual", "Det");
        assert_eq!(FcTag::from_values(&v, false).to_string(), "[Fem+Dual+Det]");
        assert_eq!(
            FcTag::from_values(&v, true).to_string(),
            "[noun+Fem+Dual+Det]"
        );
        let v = MorphValues::new("noun", "Fem", "Dual", "NA");
        assert_eq!(FcTag::from_values(&v, false).to_string(), "[Fem+Dual]");
        let v = MorphValues::new("punc", "NA", "NA", "NA");
        assert_eq!(FcTag::from_values(&v, false).to_string(), "[NA]");
    }

    #[test]
    fn fc_tag_parse_and_concat() {
        let t = FcTag::parse("[Fem+Singular] [Fem+Dual]").unwrap();
        assert_eq!(t.tokens().len(), 2);
        let a = FcTag::parse("[Fem+Singular]").unwrap();
        let b = FcTag::parse("[Fem+Dual]").unwrap();
        assert_eq!(FcTag::concat([&a, &b]), t);
        assert!(FcTag::parse("Fem").is_err());
        assert!(FcTag::parse("").is_err());
    }

    #[test]
    fn feature_names() {
        assert_eq!("Gen".parse::<MorphFeature>().unwrap(), MorphFeature::Gen);
        assert_eq!("DET".parse::<MorphFeature>().unwrap(), MorphFeature::Det);
        assert!("case".parse::<MorphFeature>().is_err());
        assert_eq!(
            MorphFeature::parse_set("gen, num,gen").unwrap(),
            vec![MorphFeature::Gen, MorphFeature::Num]
        );
    }
}
