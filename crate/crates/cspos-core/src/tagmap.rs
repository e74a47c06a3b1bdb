//! Declarative source-tagset to universal-tagset mapping.
//!
//! A mapping table is an ordered list of `pattern<TAB>TARGET` rules where a
//! pattern is either an exact source tag or a prefix ending in `*`. The
//! first matching rule wins, so specific rules shadow broad prefixes. The
//! special pattern `*` sets the table default for otherwise unmatched tags.
//!
//! Two tables ship built in: `bw` for Buckwalter/PATB-style composite tags
//! and `bangor` for Bangor-autoglosser-style tags. Both are editable
//! defaults, not ground truth; load a custom file to override them.

use std::fs;
use std::io;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, RawCorpus};
use crate::types::{Sentence, TaggedToken, UPosTag};

#[derive(Debug, Error)]
pub enum TagmapError {
    #[error("{file}:{line}: {message} (line was {content:?})")]
    Parse {
        file: String,
        line: usize,
        message: String,
        content: String,
    },
    #[error("{file}:{line}: duplicate pattern {pattern:?}")]
    DuplicateRule {
        file: String,
        line: usize,
        pattern: String,
    },
    #[error("{file}:{line}: unknown target tag {target:?}")]
    BadTarget {
        file: String,
        line: usize,
        target: String,
    },
    #[error("no rule and no default for source tag {tag:?} (sentence {sentence_id:?}, token {token_index})")]
    UnmappedTag {
        tag: String,
        sentence_id: String,
        token_index: usize,
    },
    #[error("sentence {sentence_id:?}, token {token_index}: token has no source tag")]
    MissingSourceTag {
        sentence_id: String,
        token_index: usize,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pattern {
    Exact(String),
    Prefix(String),
}

impl Pattern {
    fn matches(&self, tag: &str) -> bool {
        match self {
            Pattern::Exact(p) => p == tag,
            Pattern::Prefix(p) => tag.starts_with(p.as_str()),
        }
    }

    fn as_source_text(&self) -> String {
        match self {
            Pattern::Exact(p) => p.clone(),
            Pattern::Prefix(p) => format!("{p}*"),
        }
    }
}

/// An ordered first-match-wins rule table with an optional default target.
#[derive(Debug, Clone)]
pub struct MappingTable {
    name: String,
    rules: Vec<(Pattern, UPosTag)>,
    default: Option<UPosTag>,
}

impl MappingTable {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn default_target(&self) -> Option<UPosTag> {
        self.default
    }

    /// Resolves a source tag through the rules, falling back to the
    /// table default.
    pub fn lookup(&self, tag: &str) -> Option<UPosTag> {
        self.rules
            .iter()
            .find(|(pattern, _)| pattern.matches(tag))
            .map(|&(_, target)| target)
            .or(self.default)
    }

    /// Renders the table back into the on-disk rule format.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        for (pattern, target) in &self.rules {
            out.push_str(&pattern.as_source_text());
            out.push('\t');
            out.push_str(target.name());
            out.push('\n');
        }
        if let Some(default) = self.default {
            out.push_str("*\t");
            out.push_str(default.name());
            out.push('\n');
        }
        out
    }
}

/// Parses mapping-table text; `file` labels error messages.
pub fn parse_mapping(
    text: &str,
    file: &str,
    name: impl Into<String>,
) -> Result<MappingTable, TagmapError> {
    let mut rules: Vec<(Pattern, UPosTag)> = Vec::new();
    let mut default = None;
    let mut seen: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((pattern_text, target_text)) = line.split_once('\t') else {
            return Err(TagmapError::Parse {
                file: file.to_string(),
                line: lineno,
                message: "expected pattern<TAB>TARGET".to_string(),
                content: line.to_string(),
            });
        };
        let pattern_text = pattern_text.trim();
        let target_text = target_text.trim();
        if pattern_text.is_empty() {
            return Err(TagmapError::Parse {
                file: file.to_string(),
                line: lineno,
                message: "empty pattern".to_string(),
                content: line.to_string(),
            });
        }
        if seen.iter().any(|p| p == pattern_text) {
            return Err(TagmapError::DuplicateRule {
                file: file.to_string(),
                line: lineno,
                pattern: pattern_text.to_string(),
            });
        }
        seen.push(pattern_text.to_string());
        let target: UPosTag = target_text.parse().map_err(|_| TagmapError::BadTarget {
            file: file.to_string(),
            line: lineno,
            target: target_text.to_string(),
        })?;
        if pattern_text == "*" {
            default = Some(target);
        } else if let Some(prefix) = pattern_text.strip_suffix('*') {
            rules.push((Pattern::Prefix(prefix.to_string()), target));
        } else {
            rules.push((Pattern::Exact(pattern_text.to_string()), target));
        }
    }
    Ok(MappingTable {
        name: name.into(),
        rules,
        default,
    })
}

/// Loads a mapping table from a rule file.
pub fn load_mapping(path: impl AsRef<Path>) -> Result<MappingTable, TagmapError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned());
    parse_mapping(&text, &path.to_string_lossy(), name)
}

const BW_TABLE_TEXT: &str = include_str!("../data/bw_to_universal.tsv");
const BANGOR_TABLE_TEXT: &str = include_str!("../data/bangor_to_universal.tsv");

/// Built-in table for Buckwalter/PATB-style source tags.
pub fn bw_to_universal() -> &'static MappingTable {
    static TABLE: OnceLock<MappingTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        parse_mapping(BW_TABLE_TEXT, "builtin:bw_to_universal", "bw_to_universal")
            .expect("built-in bw table must parse")
    })
}

/// Built-in table for Bangor-autoglosser-style source tags.
pub fn bangor_to_universal() -> &'static MappingTable {
    static TABLE: OnceLock<MappingTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        parse_mapping(
            BANGOR_TABLE_TEXT,
            "builtin:bangor_to_universal",
            "bangor_to_universal",
        )
        .expect("built-in bangor table must parse")
    })
}

/// Looks up a built-in table by short name.
pub fn builtin(name: &str) -> Option<&'static MappingTable> {
    match name {
        "bw" | "bw_to_universal" => Some(bw_to_universal()),
        "bangor" | "bangor_to_universal" => Some(bangor_to_universal()),
        _ => None,
    }
}

/// Maps every source tag in `raw` to a universal tag. Token count, order,
/// surface text, and language labels are preserved; only tags change.
pub fn map_corpus(raw: &RawCorpus, table: &MappingTable) -> Result<Corpus, TagmapError> {
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for raw_sentence in &raw.sentences {
        let mut tokens = Vec::with_capacity(raw_sentence.tokens.len());
        for (token_index, raw_token) in raw_sentence.tokens.iter().enumerate() {
            let source_tag =
                raw_token
                    .tag
                    .as_deref()
                    .ok_or_else(|| TagmapError::MissingSourceTag {
                        sentence_id: raw_sentence.id.clone(),
                        token_index,
                    })?;
            let target = table
                .lookup(source_tag)
                .ok_or_else(|| TagmapError::UnmappedTag {
                    tag: source_tag.to_string(),
                    sentence_id: raw_sentence.id.clone(),
                    token_index,
                })?;
            let mut token = TaggedToken::new(raw_token.text.clone())
                .map_err(|source| CorpusError::Label {
                    sentence_id: raw_sentence.id.clone(),
                    source,
                })?
                .with_tag(target);
            if let Some(lang) = raw_token.lang {
                token = token.with_lang(lang);
            }
            tokens.push(token);
        }
        let sentence = Sentence::new(raw_sentence.id.clone(), tokens)
            .map_err(|source| CorpusError::Label {
                sentence_id: raw_sentence.id.clone(),
                source,
            })?;
        sentences.push(sentence);
    }
    Ok(Corpus::new(raw.name.clone(), sentences)?)
}
