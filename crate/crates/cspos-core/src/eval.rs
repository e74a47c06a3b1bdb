//! Token-level accuracy with a per-purity breakdown and report rendering.
//!
//! Accuracies are kept as exact correct/total counts internally;
//! percentages are rounded half-up to two decimals only when a report is
//! rendered, and the text table and JSON report carry identical numbers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::types::{purity_of, CoreError, PurityClass, TaggerOutput};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold corpus has {gold} sentences but predictions cover {pred}")]
    SentenceCountMismatch { gold: usize, pred: usize },
    #[error("sentence {sentence_id:?}: gold has {gold} tokens but the prediction has {pred}")]
    TokenCountMismatch {
        sentence_id: String,
        gold: usize,
        pred: usize,
    },
    #[error("sentence {sentence_id:?}, token {token_index}: missing gold tag")]
    MissingGoldTag {
        sentence_id: String,
        token_index: usize,
    },
    #[error("sentence {sentence_id:?}: {source}")]
    Label {
        sentence_id: String,
        source: CoreError,
    },
}

/// An exact accuracy cell: correct and total token counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub correct: u64,
    pub total: u64,
}

impl Cell {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += u64::from(correct);
    }

    fn merge(&mut self, other: Cell) {
        self.correct += other.correct;
        self.total += other.total;
    }

    pub fn is_populated(&self) -> bool {
        self.total > 0
    }

    /// Accuracy percentage in hundredths, rounded half-up; `None` when
    /// the cell is empty.
    pub fn pct_hundredths(&self) -> Option<u64> {
        if self.total == 0 {
            return None;
        }
        // floor((10000*correct + total/2) / total), exactly, in integers.
        Some(((20_000 * self.correct as u128 + self.total as u128) / (2 * self.total as u128)) as u64)
    }

    /// Accuracy percentage as an exact ratio (not rounded).
    pub fn pct_exact(&self) -> Option<f64> {
        if self.total == 0 {
            None
        } else {
            Some(100.0 * self.correct as f64 / self.total as f64)
        }
    }

    /// The rendered two-decimal percentage, or an em dash for empty cells.
    pub fn render(&self) -> String {
        match self.pct_hundredths() {
            Some(h) => format!("{}.{:02}", h / 100, h % 100),
            None => "—".to_string(),
        }
    }
}

/// One approach's accuracies: overall plus the purity breakdown.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRow {
    pub overall: Cell,
    pub cs: Cell,
    pub l1: Cell,
    pub l2: Cell,
    /// COMB3 exact-confidence tie count, when the approach reports one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ties: Option<u64>,
}

fn check_alignment(gold: &Corpus, preds: &[TaggerOutput]) -> Result<(), EvalError> {
    if gold.len() != preds.len() {
        return Err(EvalError::SentenceCountMismatch {
            gold: gold.len(),
            pred: preds.len(),
        });
    }
    for (sentence, pred) in gold.iter().zip(preds) {
        if sentence.len() != pred.len() {
            return Err(EvalError::TokenCountMismatch {
                sentence_id: sentence.id().to_string(),
                gold: sentence.len(),
                pred: pred.len(),
            });
        }
    }
    Ok(())
}

/// Token-level accuracy percentage of aligned predictions against gold
/// tags.
pub fn accuracy(gold: &Corpus, preds: &[TaggerOutput]) -> Result<f64, EvalError> {
    let row = count_overall(gold, preds)?;
    Ok(row.pct_exact().unwrap_or(0.0))
}

fn count_overall(gold: &Corpus, preds: &[TaggerOutput]) -> Result<Cell, EvalError> {
    check_alignment(gold, preds)?;
    let mut cell = Cell::default();
    for (sentence, pred) in gold.iter().zip(preds) {
        for (token_index, (token, &tag)) in
            sentence.tokens().iter().zip(pred.tags()).enumerate()
        {
            let gold_tag = token.gold_tag().ok_or_else(|| EvalError::MissingGoldTag {
                sentence_id: sentence.id().to_string(),
                token_index,
            })?;
            cell.add(gold_tag == tag);
        }
    }
    Ok(cell)
}

/// Token-level accuracy broken down by gold-label sentence purity.
/// `overall` covers every token including indeterminate sentences; the
/// per-language and CS cells cover their partitions only.
pub fn breakdown(gold: &Corpus, preds: &[TaggerOutput]) -> Result<EvalRow, EvalError> {
    check_alignment(gold, preds)?;
    let mut row = EvalRow::default();
    for (sentence, pred) in gold.iter().zip(preds) {
        let purity = purity_of(sentence).map_err(|source| EvalError::Label {
            sentence_id: sentence.id().to_string(),
            source,
        })?;
        let mut sentence_cell = Cell::default();
        for (token_index, (token, &tag)) in
            sentence.tokens().iter().zip(pred.tags()).enumerate()
        {
            let gold_tag = token.gold_tag().ok_or_else(|| EvalError::MissingGoldTag {
                sentence_id: sentence.id().to_string(),
                token_index,
            })?;
            sentence_cell.add(gold_tag == tag);
        }
        row.overall.merge(sentence_cell);
        match purity {
            PurityClass::PureL1 => row.l1.merge(sentence_cell),
            PurityClass::PureL2 => row.l2.merge(sentence_cell),
            PurityClass::CodeSwitched => row.cs.merge(sentence_cell),
            PurityClass::Indeterminate => {}
        }
    }
    Ok(row)
}

/// A rendered comparison: one row per approach, fixed column order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<(String, EvalRow)>,
}

impl EvalReport {
    pub fn push(&mut self, approach: impl Into<String>, row: EvalRow) {
        self.rows.push((approach.into(), row));
    }

    pub fn get(&self, approach: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|(name, _)| name == approach)
            .map(|(_, row)| row)
    }

    /// Text table with `Approach | Overall | CS | L1 | L2` columns and
    /// two-decimal percentages; empty cells render as an em dash.
    pub fn render_text(&self) -> String {
        let headers = ["Approach", "Overall", "CS", "L1", "L2"];
        let mut cells: Vec<[String; 5]> = Vec::with_capacity(self.rows.len());
        for (name, row) in &self.rows {
            cells.push([
                name.clone(),
                row.overall.render(),
                row.cs.render(),
                row.l1.render(),
                row.l2.render(),
            ]);
        }
        let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
        for row in &cells {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let pad = |s: &str, w: usize| {
            let mut out = s.to_string();
            out.extend(std::iter::repeat(' ').take(w - s.chars().count()));
            out
        };
        let mut out = String::new();
        let header_line: Vec<String> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| pad(h, widths[i]))
            .collect();
        out.push_str(header_line.join(" | ").trim_end());
        out.push('\n');
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| pad(c, widths[i]))
                .collect();
            out.push_str(line.join(" | ").trim_end());
            out.push('\n');
        }
        let total_ties: u64 = self.rows.iter().filter_map(|(_, r)| r.ties).sum();
        if self.rows.iter().any(|(_, r)| r.ties.is_some()) {
            out.push_str(&format!("confidence ties (to L1): {total_ties}\n"));
        }
        out
    }

    /// JSON form carrying the same rounded percentages as the text table
    /// plus the exact counts.
    pub fn to_json(&self) -> serde_json::Value {
        let cell_json = |cell: &Cell| {
            serde_json::json!({
                "correct": cell.correct,
                "total": cell.total,
                "pct": cell.pct_hundredths().map(|h| h as f64 / 100.0),
            })
        };
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|(name, row)| {
                let mut obj = serde_json::json!({
                    "approach": name,
                    "overall": cell_json(&row.overall),
                    "cs": cell_json(&row.cs),
                    "l1": cell_json(&row.l1),
                    "l2": cell_json(&row.l2),
                });
                if let Some(ties) = row.ties {
                    obj["ties"] = serde_json::json!(ties);
                }
                obj
            })
            .collect();
        serde_json::json!({ "rows": rows })
    }
}
