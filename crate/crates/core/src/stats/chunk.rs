//! Shallow phrase chunking with a regular grammar over one-letter POS codes
//! (see [`PosTag::code`]).
//!
//! | chunk | pattern                         |
//! |-------|---------------------------------|
//! | NP    | `D?[JM]*N+` or `P` or `M+`      |
//! | PP    | `I` followed by an NP           |
//! | VP    | `T?R?V(R?V)*`                   |
//! | SBAR  | `S` followed by an NP or VP start |
//!
//! Chunks are found left to right, trying SBAR, PP, VP, NP at each
//! position. The NP inside a PP is counted as an NP as well, and the
//! NP or PP after a verb group is counted on its own, so a VP's optional
//! complement shows up in both columns.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::pos::PosTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phrase {
    NP,
    VP,
    PP,
    SBAR,
}

impl Phrase {
    pub const ALL: [Phrase; 4] = [Phrase::NP, Phrase::VP, Phrase::PP, Phrase::SBAR];

    pub fn as_str(self) -> &'static str {
        match self {
            Phrase::NP => "NP",
            Phrase::VP => "VP",
            Phrase::PP => "PP",
            Phrase::SBAR => "SBAR",
        }
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

static GRAMMAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"(?P<sbar>S)",
        r"|(?P<pp>I(?:D?[JM]*N+|P|M+))",
        r"|(?P<vp>T?R?V(?:R?V)*)",
        r"|(?P<np>D?[JM]*N+|P|M+)",
    ))
    .unwrap()
});

const CLAUSE_START: &[char] = &['D', 'J', 'N', 'P', 'M', 'V', 'R', 'T'];

/// Chunk counts for one tag sequence.
pub fn chunk_counts(tags: &[PosTag]) -> BTreeMap<Phrase, usize> {
    let codes: String = tags.iter().map(|t| t.code()).collect();
    let mut counts: BTreeMap<Phrase, usize> = Phrase::ALL.iter().map(|p| (*p, 0)).collect();
    let mut pos = 0;
    while pos < codes.len() {
        let Some(caps) = GRAMMAR.captures_at(&codes, pos) else {
            break;
        };
        let whole = caps.get(0).unwrap();
        if caps.name("sbar").is_some() {
            let next = codes[whole.end()..].chars().next();
            if next.is_some_and(|c| CLAUSE_START.contains(&c)) {
                *counts.get_mut(&Phrase::SBAR).unwrap() += 1;
            }
        } else if caps.name("pp").is_some() {
            *counts.get_mut(&Phrase::PP).unwrap() += 1;
            *counts.get_mut(&Phrase::NP).unwrap() += 1;
        } else if caps.name("vp").is_some() {
            *counts.get_mut(&Phrase::VP).unwrap() += 1;
        } else {
            *counts.get_mut(&Phrase::NP).unwrap() += 1;
        }
        pos = whole.end();
    }
    counts
}
