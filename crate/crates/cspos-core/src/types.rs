//! Shared domain vocabulary: universal POS tags, language labels, tokens,
//! sentences, purity classes, and per-token tagger output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the domain-type constructors and by [`purity_of`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("token {index} carries no language label")]
    LabelMissing { index: usize },
    #[error("token text is empty")]
    EmptyTokenText,
    #[error("token text {0:?} contains whitespace")]
    WhitespaceInToken(String),
    #[error("unknown POS tag name {0:?}")]
    UnknownTag(String),
    #[error("unknown language label {0:?}")]
    UnknownLabel(String),
    #[error("sentence {0:?} has no tokens")]
    EmptySentence(String),
    #[error("tagger output has {tags} tags but {confidences} confidences")]
    OutputLengthMismatch { tags: usize, confidences: usize },
    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceRange(f64),
}

/// The 17-tag universal POS inventory.
///
/// The declaration order below is the fixed enumeration order used for all
/// deterministic tie-breaking throughout the crate.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum UPosTag {
    Noun,
    Propn,
    Verb,
    Aux,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Cconj,
    Sconj,
    Part,
    Intj,
    Punct,
    Sym,
    X,
}

impl UPosTag {
    /// Every tag, in the fixed enumeration order.
    pub const ALL: [UPosTag; 17] = [
        UPosTag::Noun,
        UPosTag::Propn,
        UPosTag::Verb,
        UPosTag::Aux,
        UPosTag::Adj,
        UPosTag::Adv,
        UPosTag::Pron,
        UPosTag::Det,
        UPosTag::Adp,
        UPosTag::Num,
        UPosTag::Cconj,
        UPosTag::Sconj,
        UPosTag::Part,
        UPosTag::Intj,
        UPosTag::Punct,
        UPosTag::Sym,
        UPosTag::X,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UPosTag::Noun => "NOUN",
            UPosTag::Propn => "PROPN",
            UPosTag::Verb => "VERB",
            UPosTag::Aux => "AUX",
            UPosTag::Adj => "ADJ",
            UPosTag::Adv => "ADV",
            UPosTag::Pron => "PRON",
            UPosTag::Det => "DET",
            UPosTag::Adp => "ADP",
            UPosTag::Num => "NUM",
            UPosTag::Cconj => "CCONJ",
            UPosTag::Sconj => "SCONJ",
            UPosTag::Part => "PART",
            UPosTag::Intj => "INTJ",
            UPosTag::Punct => "PUNCT",
            UPosTag::Sym => "SYM",
            UPosTag::X => "X",
        }
    }

    /// Position in the fixed enumeration order.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for UPosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UPosTag {
    type Err = CoreError;

    /// Parses the exact uppercase tag name. Unknown names are rejected,
    /// never coerced to `X`.
    fn from_str(s: &str) -> Result<Self, CoreError> {
        UPosTag::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| CoreError::UnknownTag(s.to_string()))
    }
}

/// Sub-kind of the `Other` language label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OtherKind {
    NamedEntity,
    Foreign,
    Unknown,
}

/// Per-token language label: one of the two pair languages, or an
/// out-of-pair label that never participates in purity voting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LangLabel {
    L1,
    L2,
    Other(OtherKind),
}

impl LangLabel {
    pub fn name(self) -> &'static str {
        match self {
            LangLabel::L1 => "L1",
            LangLabel::L2 => "L2",
            LangLabel::Other(OtherKind::NamedEntity) => "OTHER:NE",
            LangLabel::Other(OtherKind::Foreign) => "OTHER:FOREIGN",
            LangLabel::Other(OtherKind::Unknown) => "OTHER:UNK",
        }
    }

    pub fn is_other(self) -> bool {
        matches!(self, LangLabel::Other(_))
    }
}

impl fmt::Display for LangLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LangLabel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "L1" => Ok(LangLabel::L1),
            "L2" => Ok(LangLabel::L2),
            "OTHER:NE" => Ok(LangLabel::Other(OtherKind::NamedEntity)),
            "OTHER:FOREIGN" => Ok(LangLabel::Other(OtherKind::Foreign)),
            "OTHER:UNK" => Ok(LangLabel::Other(OtherKind::Unknown)),
            _ => Err(CoreError::UnknownLabel(s.to_string())),
        }
    }
}

impl Serialize for LangLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LangLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A surface token with optional gold language label and gold POS tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    text: String,
    gold_lang: Option<LangLabel>,
    gold_tag: Option<UPosTag>,
}

impl TaggedToken {
    /// Builds a token; the text must be non-empty and whitespace-free.
    pub fn new(text: impl Into<String>) -> Result<Self, CoreError> {
        let text = text.into();
        if text.is_empty() {
            return Err(CoreError::EmptyTokenText);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(CoreError::WhitespaceInToken(text));
        }
        Ok(TaggedToken {
            text,
            gold_lang: None,
            gold_tag: None,
        })
    }

    pub fn with_lang(mut self, lang: LangLabel) -> Self {
        self.gold_lang = Some(lang);
        self
    }

    pub fn with_tag(mut self, tag: UPosTag) -> Self {
        self.gold_tag = Some(tag);
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn gold_lang(&self) -> Option<LangLabel> {
        self.gold_lang
    }

    pub fn gold_tag(&self) -> Option<UPosTag> {
        self.gold_tag
    }

    pub fn set_gold_tag(&mut self, tag: Option<UPosTag>) {
        self.gold_tag = tag;
    }

    pub fn set_gold_lang(&mut self, lang: Option<LangLabel>) {
        self.gold_lang = lang;
    }
}

/// An identified, non-empty token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    id: String,
    tokens: Vec<TaggedToken>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<TaggedToken>) -> Result<Self, CoreError> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(CoreError::EmptySentence(id));
        }
        Ok(Sentence { id, tokens })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[TaggedToken] {
        &self.tokens
    }

    pub fn tokens_mut(&mut self) -> &mut [TaggedToken] {
        &mut self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token surface texts, in order.
    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text()).collect()
    }
}

/// Sentence-level language purity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PurityClass {
    PureL1,
    PureL2,
    CodeSwitched,
    Indeterminate,
}

impl fmt::Display for PurityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PurityClass::PureL1 => "pure-l1",
            PurityClass::PureL2 => "pure-l2",
            PurityClass::CodeSwitched => "code-switched",
            PurityClass::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// Classifies a label multiset. `Other` labels never vote: a sentence with
/// only `Other` tokens is `Indeterminate`.
pub fn purity_from_labels<I>(labels: I) -> PurityClass
where
    I: IntoIterator<Item = LangLabel>,
{
    let mut has_l1 = false;
    let mut has_l2 = false;
    for label in labels {
        match label {
            LangLabel::L1 => has_l1 = true,
            LangLabel::L2 => has_l2 = true,
            LangLabel::Other(_) => {}
        }
    }
    match (has_l1, has_l2) {
        (true, true) => PurityClass::CodeSwitched,
        (true, false) => PurityClass::PureL1,
        (false, true) => PurityClass::PureL2,
        (false, false) => PurityClass::Indeterminate,
    }
}

/// Purity of a sentence from its gold language labels.
///
/// Fails with [`CoreError::LabelMissing`] naming the first unlabeled token.
pub fn purity_of(sentence: &Sentence) -> Result<PurityClass, CoreError> {
    let mut labels = Vec::with_capacity(sentence.len());
    for (index, token) in sentence.tokens().iter().enumerate() {
        match token.gold_lang() {
            Some(label) => labels.push(label),
            None => return Err(CoreError::LabelMissing { index }),
        }
    }
    Ok(purity_from_labels(labels))
}

/// One tagger's decode of one sentence: a tag and a confidence per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerOutput {
    tags: Vec<UPosTag>,
    confidences: Vec<f64>,
}

impl TaggerOutput {
    pub fn new(tags: Vec<UPosTag>, confidences: Vec<f64>) -> Result<Self, CoreError> {
        if tags.len() != confidences.len() {
            return Err(CoreError::OutputLengthMismatch {
                tags: tags.len(),
                confidences: confidences.len(),
            });
        }
        if let Some(&c) = confidences
            .iter()
            .find(|c| !c.is_finite() || **c < 0.0 || **c > 1.0)
        {
            return Err(CoreError::ConfidenceRange(c));
        }
        Ok(TaggerOutput { tags, confidences })
    }

    pub fn tags(&self) -> &[UPosTag] {
        &self.tags
    }

    pub fn confidences(&self) -> &[f64] {
        &self.confidences
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}
