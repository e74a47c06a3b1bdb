//! Tab-separated corpus reader/writer, dataset statistics, and purity splits.
//!
//! File format: one token per line as `token<TAB>lang<TAB>tag`, sentences
//! separated by blank lines, `_` for an absent gold field. A line of the
//! form `# id = <id>` names the following sentence; sentences without one
//! get positional ids `s1`, `s2`, ... Any other line starting with `#` is a
//! comment and is dropped on write.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    purity_of, CoreError, LangLabel, PurityClass, Sentence, TaggedToken, UPosTag,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}:{line}: {message} (line was {content:?})")]
    Parse {
        file: String,
        line: usize,
        message: String,
        content: String,
    },
    #[error("duplicate sentence id {id:?}")]
    DuplicateId { id: String },
    #[error("sentence {sentence_id:?}: {source}")]
    Label {
        sentence_id: String,
        source: CoreError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A named, ordered collection of sentences with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    name: String,
    sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for sentence in &sentences {
            if !seen.insert(sentence.id().to_string()) {
                return Err(CorpusError::DuplicateId {
                    id: sentence.id().to_string(),
                });
            }
        }
        Ok(Corpus {
            name: name.into(),
            sentences,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Corpus {
            name: name.into(),
            sentences: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    /// Total token count.
    pub fn n_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Concatenates corpora in order; ids must stay unique across parts.
    pub fn concat(name: impl Into<String>, parts: &[&Corpus]) -> Result<Self, CorpusError> {
        let sentences = parts
            .iter()
            .flat_map(|c| c.sentences.iter().cloned())
            .collect();
        Corpus::new(name, sentences)
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} sentences)", self.name, self.sentences.len())
    }
}

/// A parsed token whose tag column is still raw text (used as input to
/// tagset mapping).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawToken {
    pub text: String,
    pub lang: Option<LangLabel>,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub id: String,
    pub tokens: Vec<RawToken>,
}

/// A corpus whose tag column has not been interpreted against the
/// universal tagset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCorpus {
    pub name: String,
    pub sentences: Vec<RawSentence>,
}

const ID_DIRECTIVE: &str = "# id = ";
const ABSENT: &str = "_";

fn parse_error(file: &str, line: usize, content: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
        content: content.to_string(),
    }
}

fn corpus_name_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Parses the corpus format leaving tag text uninterpreted.
pub fn parse_raw_corpus(path: impl AsRef<Path>) -> Result<RawCorpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_raw_str(&text, &path.to_string_lossy(), corpus_name_from_path(path))
}

/// Parses corpus text; `file` is used only in error messages.
pub fn parse_raw_str(
    text: &str,
    file: &str,
    name: impl Into<String>,
) -> Result<RawCorpus, CorpusError> {
    let mut sentences: Vec<RawSentence> = Vec::new();
    let mut seen_ids = BTreeSet::new();
    let mut pending_id: Option<(String, usize)> = None;
    let mut tokens: Vec<RawToken> = Vec::new();

    let flush = |tokens: &mut Vec<RawToken>,
                     pending_id: &mut Option<(String, usize)>,
                     sentences: &mut Vec<RawSentence>,
                     seen_ids: &mut BTreeSet<String>|
     -> Result<(), CorpusError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let id = match pending_id.take() {
            Some((id, _)) => id,
            None => format!("s{}", sentences.len() + 1),
        };
        if !seen_ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id });
        }
        sentences.push(RawSentence {
            id,
            tokens: std::mem::take(tokens),
        });
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut pending_id, &mut sentences, &mut seen_ids)?;
            continue;
        }
        if let Some(id) = line.strip_prefix(ID_DIRECTIVE) {
            let id = id.trim();
            if id.is_empty() {
                return Err(parse_error(file, lineno, line, "empty sentence id"));
            }
            if !tokens.is_empty() {
                return Err(parse_error(
                    file,
                    lineno,
                    line,
                    "id directive in the middle of a sentence",
                ));
            }
            pending_id = Some((id.to_string(), lineno));
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                file,
                lineno,
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let text_field = fields[0];
        if text_field.is_empty() {
            return Err(parse_error(file, lineno, line, "empty token text"));
        }
        if text_field.chars().any(char::is_whitespace) {
            return Err(parse_error(file, lineno, line, "whitespace in token text"));
        }
        let lang = match fields[1] {
            ABSENT => None,
            s => Some(s.parse::<LangLabel>().map_err(|e| {
                parse_error(file, lineno, line, e.to_string())
            })?),
        };
        let tag = match fields[2] {
            ABSENT => None,
            s => Some(s.to_string()),
        };
        tokens.push(RawToken {
            text: text_field.to_string(),
            lang,
            tag,
        });
    }
    flush(&mut tokens, &mut pending_id, &mut sentences, &mut seen_ids)?;
    if let Some((_, lineno)) = pending_id {
        return Err(parse_error(
            file,
            lineno,
            ID_DIRECTIVE,
            "id directive not followed by a sentence",
        ));
    }
    Ok(RawCorpus {
        name: name.into(),
        sentences,
    })
}

/// Interprets a raw corpus against the universal tagset.
pub fn typed_from_raw(raw: &RawCorpus) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for raw_sentence in &raw.sentences {
        let mut tokens = Vec::with_capacity(raw_sentence.tokens.len());
        for raw_token in &raw_sentence.tokens {
            let mut token =
                TaggedToken::new(raw_token.text.clone()).map_err(|source| CorpusError::Label {
                    sentence_id: raw_sentence.id.clone(),
                    source,
                })?;
            if let Some(lang) = raw_token.lang {
                token = token.with_lang(lang);
            }
            if let Some(tag) = &raw_token.tag {
                let tag: UPosTag = tag.parse().map_err(|source| CorpusError::Label {
                    sentence_id: raw_sentence.id.clone(),
                    source,
                })?;
                token = token.with_tag(tag);
            }
            tokens.push(token);
        }
        let sentence =
            Sentence::new(raw_sentence.id.clone(), tokens).map_err(|source| CorpusError::Label {
                sentence_id: raw_sentence.id.clone(),
                source,
            })?;
        sentences.push(sentence);
    }
    Corpus::new(raw.name.clone(), sentences)
}

/// Reads a corpus whose tag column holds universal tags (or `_`).
pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let raw = parse_raw_corpus(path)?;
    typed_from_raw(&raw)
}

/// Parses corpus text with universal tags; `file` labels error messages.
pub fn parse_corpus_str(
    text: &str,
    file: &str,
    name: impl Into<String>,
) -> Result<Corpus, CorpusError> {
    let raw = parse_raw_str(text, file, name)?;
    typed_from_raw(&raw)
}

/// Renders a corpus in the canonical on-disk form. Every sentence gets an
/// explicit `# id = ` line; input comments do not survive.
pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sentence in corpus.iter() {
        out.push_str(ID_DIRECTIVE);
        out.push_str(sentence.id());
        out.push('\n');
        for token in sentence.tokens() {
            out.push_str(token.text());
            out.push('\t');
            match token.gold_lang() {
                Some(lang) => out.push_str(lang.name()),
                None => out.push_str(ABSENT),
            }
            out.push('\t');
            match token.gold_tag() {
                Some(tag) => out.push_str(tag.name()),
                None => out.push_str(ABSENT),
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    fs::write(path, corpus_to_string(corpus))?;
    Ok(())
}

/// Sentence/token/type counts and the code-switched sentence percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub n_words: usize,
    pub n_types: usize,
    pub pct_cs: f64,
}

impl CorpusStats {
    pub fn to_tsv(&self) -> String {
        format!(
            "n_sentences\tn_words\tn_types\tpct_cs\n{}\t{}\t{}\t{:.2}\n",
            self.n_sentences, self.n_words, self.n_types, self.pct_cs
        )
    }
}

/// Computes corpus statistics. Type counting is case-sensitive exact
/// match; `pct_cs` is derived from gold-label purity.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    let mut n_words = 0usize;
    let mut n_cs = 0usize;
    let mut types = BTreeSet::new();
    for sentence in corpus.iter() {
        let purity = purity_of(sentence).map_err(|source| CorpusError::Label {
            sentence_id: sentence.id().to_string(),
            source,
        })?;
        if purity == PurityClass::CodeSwitched {
            n_cs += 1;
        }
        for token in sentence.tokens() {
            n_words += 1;
            types.insert(token.text().to_string());
        }
    }
    let pct_cs = if corpus.is_empty() {
        0.0
    } else {
        100.0 * n_cs as f64 / corpus.len() as f64
    };
    Ok(CorpusStats {
        n_sentences: corpus.len(),
        n_words,
        n_types: types.len(),
        pct_cs,
    })
}

/// The four purity partitions of a corpus fed through [`split_by_purity`].
#[derive(Debug, Clone)]
pub struct PuritySplit {
    pub pure_l1: Corpus,
    pub pure_l2: Corpus,
    pub code_switched: Corpus,
    pub indeterminate: Corpus,
}

/// Partitions sentences by gold-label purity, preserving order within
/// each part.
pub fn split_by_purity(corpus: &Corpus) -> Result<PuritySplit, CorpusError> {
    let mut parts: [Vec<Sentence>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for sentence in corpus.iter() {
        let purity = purity_of(sentence).map_err(|source| CorpusError::Label {
            sentence_id: sentence.id().to_string(),
            source,
        })?;
        let slot = match purity {
            PurityClass::PureL1 => 0,
            PurityClass::PureL2 => 1,
            PurityClass::CodeSwitched => 2,
            PurityClass::Indeterminate => 3,
        };
        parts[slot].push(sentence.clone());
    }
    let [l1, l2, cs, ind] = parts;
    let name = corpus.name();
    Ok(PuritySplit {
        pure_l1: Corpus::new(format!("{name}.pure-l1"), l1)?,
        pure_l2: Corpus::new(format!("{name}.pure-l2"), l2)?,
        code_switched: Corpus::new(format!("{name}.code-switched"), cs)?,
        indeterminate: Corpus::new(format!("{name}.indeterminate"), ind)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_token_sentence() {
        let corpus = parse_corpus_str("el\tL2\tDET\nperro\tL2\tNOUN\n\n", "<mem>", "t").unwrap();
        assert_eq!(corpus.len(), 1);
        let sentence = &corpus.sentences()[0];
        assert_eq!(sentence.id(), "s1");
        assert_eq!(sentence.len(), 2);
        assert_eq!(sentence.tokens()[0].text(), "el");
        assert_eq!(sentence.tokens()[0].gold_tag(), Some(UPosTag::Det));
        assert_eq!(sentence.tokens()[1].gold_lang(), Some(LangLabel::L2));
    }

    #[test]
    fn absent_field_marker() {
        let corpus = parse_corpus_str("dog\tL1\t_\n", "<mem>", "t").unwrap();
        let token = &corpus.sentences()[0].tokens()[0];
        assert_eq!(token.gold_lang(), Some(LangLabel::L1));
        assert_eq!(token.gold_tag(), None);
    }

    #[test]
    fn whitespace_in_token_is_parse_error() {
        let err = parse_corpus_str("a b\tL1\tNOUN\n", "bad.tsv", "t").unwrap_err();
        match err {
            CorpusError::Parse { file, line, .. } => {
                assert_eq!(file, "bad.tsv");
                assert_eq!(line, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_is_parse_error() {
        assert!(parse_corpus_str("a\tL1\n", "<mem>", "t").is_err());
        assert!(parse_corpus_str("a\tL1\tNOUN\tmore\n", "<mem>", "t").is_err());
    }

    #[test]
    fn unknown_tag_is_rejected() {
        assert!(parse_corpus_str("a\tL1\tZZZ\n", "<mem>", "t").is_err());
    }

    #[test]
    fn duplicate_explicit_id_rejected() {
        let text = "# id = x\na\tL1\tNOUN\n\n# id = x\nb\tL1\tNOUN\n\n";
        assert!(matches!(
            parse_corpus_str(text, "<mem>", "t"),
            Err(CorpusError::DuplicateId { .. })
        ));
    }

    #[test]
    fn comments_are_dropped_on_write() {
        let text = "# free-form comment\nel\tL2\tDET\n\n";
        let corpus = parse_corpus_str(text, "<mem>", "t").unwrap();
        let written = corpus_to_string(&corpus);
        assert!(!written.contains("free-form"));
        assert!(written.starts_with("# id = s1\n"));
    }

    #[test]
    fn round_trip_is_stable() {
        let text = "el\tL2\tDET\nperro\tL2\tNOUN\n\ndog\tL1\t_\nbarks\t_\tVERB\n\n";
        let corpus = parse_corpus_str(text, "<mem>", "t").unwrap();
        let once = corpus_to_string(&corpus);
        let reparsed = parse_corpus_str(&once, "<mem>", "t").unwrap();
        assert_eq!(reparsed.sentences(), corpus.sentences());
        // Tool-produced files round-trip byte-exactly.
        assert_eq!(corpus_to_string(&reparsed), once);
    }

    #[test]
    fn empty_corpus_writes_empty_file() {
        let corpus = Corpus::empty("nothing");
        assert_eq!(corpus_to_string(&corpus), "");
        let reparsed = parse_corpus_str("", "<mem>", "nothing").unwrap();
        assert!(reparsed.is_empty());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        let corpus =
            parse_corpus_str("el\tL2\tDET\nperro\tL2\tNOUN\n\n", "<mem>", "c").unwrap();
        write_corpus(&corpus, &path).unwrap();
        let loaded = parse_corpus(&path).unwrap();
        assert_eq!(loaded.sentences(), corpus.sentences());
        assert_eq!(loaded.name(), "c");
    }

    fn sentence(id: &str, labels: &[LangLabel]) -> Sentence {
        let tokens = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| TaggedToken::new(format!("w{i}")).unwrap().with_lang(l))
            .collect();
        Sentence::new(id, tokens).unwrap()
    }

    #[test]
    fn stats_definitional_cases() {
        let corpus = Corpus::new(
            "t",
            vec![
                sentence("a", &[LangLabel::L1, LangLabel::L1]),
                sentence("b", &[LangLabel::L1, LangLabel::L2]),
            ],
        )
        .unwrap();
        let stats = corpus_stats(&corpus).unwrap();
        assert_eq!(stats.n_sentences, 2);
        assert_eq!(stats.pct_cs, 50.0);
    }

    #[test]
    fn type_count_is_exact_match() {
        let tokens = ["a", "a", "b"]
            .iter()
            .map(|w| TaggedToken::new(*w).unwrap().with_lang(LangLabel::L1))
            .collect();
        let corpus =
            Corpus::new("t", vec![Sentence::new("s1", tokens).unwrap()]).unwrap();
        let stats = corpus_stats(&corpus).unwrap();
        assert_eq!(stats.n_words, 3);
        assert_eq!(stats.n_types, 2);
    }

    #[test]
    fn stats_json_keys() {
        let stats = CorpusStats {
            n_sentences: 1,
            n_words: 2,
            n_types: 2,
            pct_cs: 0.0,
        };
        let json = serde_json::to_value(&stats).unwrap();
        for key in ["n_sentences", "n_words", "n_types", "pct_cs"] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
    }

    #[test]
    fn split_partitions_by_purity() {
        let corpus = Corpus::new(
            "t",
            vec![
                sentence("a", &[LangLabel::L1]),
                sentence("b", &[LangLabel::L1, LangLabel::L2]),
                sentence("c", &[LangLabel::L1, LangLabel::L1]),
            ],
        )
        .unwrap();
        let split = split_by_purity(&corpus).unwrap();
        assert_eq!(
            (
                split.pure_l1.len(),
                split.pure_l2.len(),
                split.code_switched.len(),
                split.indeterminate.len()
            ),
            (2, 0, 1, 0)
        );
        assert_eq!(split.pure_l1.sentences()[0].id(), "a");
        assert_eq!(split.pure_l1.sentences()[1].id(), "c");
    }

    #[test]
    fn all_cs_corpus_goes_to_cs_split() {
        let corpus = Corpus::new(
            "t",
            vec![sentence("a", &[LangLabel::L1, LangLabel::L2])],
        )
        .unwrap();
        let split = split_by_purity(&corpus).unwrap();
        assert_eq!(split.code_switched.len(), 1);
        assert_eq!(split.pure_l1.len() + split.pure_l2.len(), 0);
    }

    #[test]
    fn pct_cs_matches_split_size() {
        let corpus = Corpus::new(
            "t",
            vec![
                sentence("a", &[LangLabel::L1]),
                sentence("b", &[LangLabel::L1, LangLabel::L2]),
                sentence("c", &[LangLabel::L2]),
                sentence("d", &[LangLabel::L2, LangLabel::L1]),
            ],
        )
        .unwrap();
        let stats = corpus_stats(&corpus).unwrap();
        let split = split_by_purity(&corpus).unwrap();
        assert_eq!(
            stats.pct_cs,
            100.0 * split.code_switched.len() as f64 / corpus.len() as f64
        );
    }
}
