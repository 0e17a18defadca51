//! Fragment anchors: a quote plus surrounding context and an offset hint,
//! resolved back onto a possibly edited document.
//!
//! All offsets count Unicode scalar values, not bytes.
//!
//! Resolution runs three stages and stops at the first that decides:
//!
//! 1. the quote sits exactly at the hinted offset;
//! 2. the quote occurs elsewhere, and the occurrence whose surroundings agree
//!    best with the stored prefix and suffix wins (a tie is ambiguous);
//! 3. a window of the quote's length, give or take the slack, is slid over
//!    the document and the most similar window is accepted if it clears the
//!    similarity threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::redif::Handle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    pub context_chars: usize,
    pub min_similarity: f64,
    pub window_slack: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig {
            context_chars: 64,
            min_similarity: 0.8,
            window_slack: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextSource {
    Abstract,
    Fulltext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentAnchor {
    pub target: Handle,
    pub source: TextSource,
    pub exact: String,
    pub prefix: String,
    pub suffix: String,
    pub start_hint: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid span {start}..{end} over {len} chars")]
pub struct InvalidSpan {
    pub start: usize,
    pub end: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchStage {
    Hint,
    Context,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Resolution {
    Found { span: Span, stage: MatchStage },
    AmbiguousMatch,
    NotFound,
}

impl Resolution {
    pub fn span(&self) -> Option<Span> {
        match self {
            Resolution::Found { span, .. } => Some(*span),
            _ => None,
        }
    }
}

impl FragmentAnchor {
    /// Structural checks: non-empty quote, bounded context.
    pub fn validate(&self, cfg: &AnchorConfig) -> Result<(), String> {
        if self.exact.is_empty() {
            return Err("exact must not be empty".into());
        }
        if self.prefix.chars().count() > cfg.context_chars {
            return Err(format!("prefix longer than {} chars", cfg.context_chars));
        }
        if self.suffix.chars().count() > cfg.context_chars {
            return Err(format!("suffix longer than {} chars", cfg.context_chars));
        }
        Ok(())
    }
}

pub fn create_anchor(
    doc: &str,
    start: usize,
    end: usize,
    target: Handle,
    source: TextSource,
) -> Result<FragmentAnchor, InvalidSpan> {
    create_anchor_with(&AnchorConfig::default(), doc, start, end, target, source)
}

pub fn create_anchor_with(
    cfg: &AnchorConfig,
    doc: &str,
    start: usize,
    end: usize,
    target: Handle,
    source: TextSource,
) -> Result<FragmentAnchor, InvalidSpan> {
    let chars: Vec<char> = doc.chars().collect();
    let len = chars.len();
    if start >= end || end > len {
        return Err(InvalidSpan { start, end, len });
    }
    let pre_from = start.saturating_sub(cfg.context_chars);
    let suf_to = (end + cfg.context_chars).min(len);
    Ok(FragmentAnchor {
        target,
        source,
        exact: chars[start..end].iter().collect(),
        prefix: chars[pre_from..start].iter().collect(),
        suffix: chars[end..suf_to].iter().collect(),
        start_hint: start,
    })
}

pub fn resolve_anchor(doc: &str, anchor: &FragmentAnchor) -> Resolution {
    resolve_anchor_with(&AnchorConfig::default(), doc, anchor)
}

pub fn resolve_anchor_with(cfg: &AnchorConfig, doc: &str, anchor: &FragmentAnchor) -> Resolution {
    let doc: Vec<char> = doc.chars().collect();
    let exact: Vec<char> = anchor.exact.chars().collect();
    let prefix: Vec<char> = anchor.prefix.chars().collect();
    let suffix: Vec<char> = anchor.suffix.chars().collect();
    let n = doc.len();
    let len = exact.len();
    if len == 0 {
        return Resolution::NotFound;
    }

    let hint = anchor.start_hint;
    if hint + len <= n && doc[hint..hint + len] == exact[..] {
        return Resolution::Found {
            span: Span { start: hint, end: hint + len },
            stage: MatchStage::Hint,
        };
    }

    let occurrences: Vec<usize> = if len <= n {
        (0..=n - len).filter(|&s| doc[s..s + len] == exact[..]).collect()
    } else {
        Vec::new()
    };
    if !occurrences.is_empty() {
        let scored: Vec<(usize, usize)> = occurrences
            .iter()
            .map(|&s| (s, context_score(&doc, s, s + len, &prefix, &suffix)))
            .collect();
        let best = scored.iter().map(|&(_, sc)| sc).max().unwrap();
        let mut top = scored.iter().filter(|&&(_, sc)| sc == best);
        let (start, _) = *top.next().unwrap();
        if top.next().is_some() {
            return Resolution::AmbiguousMatch;
        }
        return Resolution::Found {
            span: Span { start, end: start + len },
            stage: MatchStage::Context,
        };
    }

    match select_window(&fuzzy_windows(cfg, &doc, &exact), cfg, hint, len) {
        WindowPick::Unique(w) => Resolution::Found {
            span: Span { start: w.start, end: w.start + w.len },
            stage: MatchStage::Fuzzy,
        },
        WindowPick::Ambiguous => Resolution::AmbiguousMatch,
        WindowPick::None => Resolution::NotFound,
    }
}

/// Number of context characters agreeing with the stored prefix (read
/// backwards from the occurrence) plus those agreeing with the stored suffix.
pub fn context_score(doc: &[char], start: usize, end: usize, prefix: &[char], suffix: &[char]) -> usize {
    let before = prefix
        .iter()
        .rev()
        .zip(doc[..start].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let after = suffix
        .iter()
        .zip(doc[end..].iter())
        .take_while(|(a, b)| a == b)
        .count();
    before + after
}

/// Admissible window lengths for a quote of `len` chars in a document of
/// `n` chars: `len` scaled by `1 ± slack`, clipped to `1..=n`.
pub fn window_lengths(cfg: &AnchorConfig, len: usize, n: usize) -> Option<(usize, usize)> {
    const EPS: f64 = 1e-9;
    let lo = ((len as f64) * (1.0 - cfg.window_slack) + EPS).floor().max(1.0) as usize;
    let hi = (((len as f64) * (1.0 + cfg.window_slack) - EPS).ceil() as usize).min(n);
    (lo <= hi).then_some((lo, hi))
}

pub fn similarity(distance: usize, window_len: usize, quote_len: usize) -> f64 {
    1.0 - distance as f64 / window_len.max(quote_len) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
    pub similarity: f64,
}

/// Every admissible window whose similarity to `exact` reaches the
/// configured threshold, in (start, len) order.
pub fn fuzzy_windows(cfg: &AnchorConfig, doc: &[char], exact: &[char]) -> Vec<Window> {
    let n = doc.len();
    let len = exact.len();
    let Some((lo, hi)) = window_lengths(cfg, len, n) else {
        return Vec::new();
    };
    // A window can only qualify if its distance is within this budget.
    let budget = (1.0 - cfg.min_similarity) * hi.max(len) as f64 + 1e-9;
    let mut out = Vec::new();
    let mut prev = vec![0usize; len + 1];
    let mut cur = vec![0usize; len + 1];
    for start in 0..n {
        let max_len = hi.min(n - start);
        if max_len < lo {
            break;
        }
        for (i, v) in prev.iter_mut().enumerate() {
            *v = i;
        }
        for j in 1..=max_len {
            let c = doc[start + j - 1];
            cur[0] = j;
            let mut col_min = cur[0];
            for i in 1..=len {
                let sub = prev[i - 1] + usize::from(exact[i - 1] != c);
                let v = sub.min(prev[i] + 1).min(cur[i - 1] + 1);
                cur[i] = v;
                col_min = col_min.min(v);
            }
            std::mem::swap(&mut prev, &mut cur);
            if j >= lo {
                let sim = similarity(prev[len], j, len);
                if sim >= cfg.min_similarity {
                    out.push(Window { start, len: j, similarity: sim });
                }
            }
            if col_min as f64 > budget {
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPick {
    Unique(Window),
    Ambiguous,
    None,
}

/// Picks among qualifying windows: highest similarity, then closest to the
/// hint, then length closest to the quote, then leftmost. If another
/// top-scoring window does not overlap the pick, the match is ambiguous.
pub fn select_window(windows: &[Window], cfg: &AnchorConfig, hint: usize, quote_len: usize) -> WindowPick {
    let qualifying = windows.iter().filter(|w| w.similarity >= cfg.min_similarity);
    let Some(best) = qualifying.clone().map(|w| w.similarity).reduce(f64::max) else {
        return WindowPick::None;
    };
    let top: Vec<&Window> = qualifying.filter(|w| w.similarity == best).collect();
    let pick = **top
        .iter()
        .min_by_key(|w| (w.start.abs_diff(hint), w.len.abs_diff(quote_len), w.start))
        .unwrap();
    let overlaps = |w: &Window| w.start < pick.start + pick.len && pick.start < w.start + w.len;
    if top.iter().all(|w| overlaps(w)) {
        WindowPick::Unique(pick)
    } else {
        WindowPick::Ambiguous
    }
}

/// Best similarity of any admissible window starting at each position;
/// positions where nothing qualifies get the best raw score anyway. Used to
/// plot how sharply a quote localizes in a document.
pub fn similarity_profile(cfg: &AnchorConfig, doc: &str, exact: &str) -> Vec<f64> {
    let doc: Vec<char> = doc.chars().collect();
    let exact: Vec<char> = exact.chars().collect();
    let n = doc.len();
    let len = exact.len();
    let Some((lo, hi)) = window_lengths(cfg, len, n) else {
        return vec![0.0; n];
    };
    let mut out = vec![0.0; n];
    let mut prev = vec![0usize; len + 1];
    let mut cur = vec![0usize; len + 1];
    for (start, slot) in out.iter_mut().enumerate() {
        let max_len = hi.min(n - start);
        if max_len < lo {
            break;
        }
        for (i, v) in prev.iter_mut().enumerate() {
            *v = i;
        }
        let mut best = 0.0f64;
        for j in 1..=max_len {
            let c = doc[start + j - 1];
            cur[0] = j;
            for i in 1..=len {
                let sub = prev[i - 1] + usize::from(exact[i - 1] != c);
                cur[i] = sub.min(prev[i] + 1).min(cur[i - 1] + 1);
            }
            std::mem::swap(&mut prev, &mut cur);
            if j >= lo {
                best = best.max(similarity(prev[len], j, len));
            }
        }
        *slot = best;
    }
    out
}
