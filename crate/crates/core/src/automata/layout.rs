use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Interned letter: a mixed-radix index over the flattened product domain.
pub type Letter = u32;

/// A word over a layout, one interned letter per position.
pub type Word = Vec<Letter>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Track {
    pub name: String,
    pub syms: Vec<String>,
}

impl Track {
    pub fn new(name: impl Into<String>, syms: &[&str]) -> Self {
        Track {
            name: name.into(),
            syms: syms.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn bits(name: impl Into<String>) -> Self {
        Track::new(name, &["0", "1"])
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Track {
            name: name.into(),
            syms: self.syms.clone(),
        }
    }

    pub fn sym_index(&self, sym: &str) -> Option<u32> {
        self.syms.iter().position(|s| s == sym).map(|i| i as u32)
    }
}

/// Ordered list of named tracks. Track 0 is the most significant digit of a
/// letter, so numeric letter order is the lexicographic tuple order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    tracks: Vec<Track>,
    place: Vec<u32>,
    size: u32,
}

impl Layout {
    pub fn new(tracks: Vec<Track>) -> Result<Arc<Layout>> {
        for (i, t) in tracks.iter().enumerate() {
            if t.syms.is_empty() {
                return Err(Error::Layout(format!(
                    "track {} has an empty domain",
                    t.name
                )));
            }
            if tracks[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::Layout(format!("duplicate track name {}", t.name)));
            }
            for (j, s) in t.syms.iter().enumerate() {
                if t.syms[..j].contains(s) {
                    return Err(Error::Layout(format!(
                        "duplicate symbol {s} in track {}",
                        t.name
                    )));
                }
            }
        }
        let mut place = vec![1u32; tracks.len()];
        let mut size: u64 = 1;
        for i in (0..tracks.len()).rev() {
            place[i] = size as u32;
            size *= tracks[i].syms.len() as u64;
            if size > u32::MAX as u64 / 2 {
                return Err(Error::Capacity(format!(
                    "letter domain of {} tracks too large",
                    tracks.len()
                )));
            }
        }
        Ok(Arc::new(Layout {
            tracks,
            place,
            size: size as u32,
        }))
    }

    pub fn single(track: Track) -> Arc<Layout> {
        Layout::new(vec![track]).expect("single track layout")
    }

    pub fn arity(&self) -> usize {
        self.tracks.len()
    }

    /// Number of letters in the full product domain.
    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, i: usize) -> &Track {
        &self.tracks[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tracks.iter().position(|t| t.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::Layout(format!("no track named {name}")))
    }

    pub fn place(&self, i: usize) -> u32 {
        self.place[i]
    }

    pub fn digit(&self, letter: Letter, i: usize) -> u32 {
        (letter / self.place[i]) % self.tracks[i].syms.len() as u32
    }

    pub fn decode(&self, letter: Letter) -> Vec<u32> {
        (0..self.arity()).map(|i| self.digit(letter, i)).collect()
    }

    pub fn encode(&self, digits: &[u32]) -> Letter {
        digits.iter().zip(&self.place).map(|(d, p)| d * p).sum()
    }

    pub fn letter(&self, syms: &[&str]) -> Result<Letter> {
        if syms.len() != self.arity() {
            return Err(Error::Layout(format!(
                "letter has {} components, layout has {} tracks",
                syms.len(),
                self.arity()
            )));
        }
        let mut digits = Vec::with_capacity(syms.len());
        for (t, s) in self.tracks.iter().zip(syms) {
            digits.push(
                t.sym_index(s)
                    .ok_or_else(|| Error::Layout(format!("symbol {s} not in track {}", t.name)))?,
            );
        }
        Ok(self.encode(&digits))
    }

    pub fn letter_syms(&self, letter: Letter) -> Vec<&str> {
        (0..self.arity())
            .map(|i| self.tracks[i].syms[self.digit(letter, i) as usize].as_str())
            .collect()
    }

    pub fn format_letter(&self, letter: Letter) -> String {
        self.letter_syms(letter).join(",")
    }

    fn compact(&self) -> bool {
        self.tracks.iter().all(|t| {
            t.syms
                .iter()
                .all(|s| s.chars().count() == 1 && s != "|" && s != ",")
        })
    }

    /// Renders a word track by track, e.g. `ccm|001|ccc`. The empty word is `ε`.
    pub fn format_word(&self, word: &[Letter]) -> String {
        if word.is_empty() {
            return "ε".to_string();
        }
        let sep = if self.compact() { "" } else { "," };
        (0..self.arity())
            .map(|i| {
                word.iter()
                    .map(|&l| self.tracks[i].syms[self.digit(l, i) as usize].as_str())
                    .collect::<Vec<_>>()
                    .join(sep)
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Inverse of [`Layout::format_word`].
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "ε" || text == "eps" {
            return Ok(Vec::new());
        }
        let parts: Vec<&str> = text.split('|').collect();
        if parts.len() != self.arity() {
            return Err(Error::Layout(format!(
                "word {text} has {} tracks, layout has {}",
                parts.len(),
                self.arity()
            )));
        }
        let mut columns: Vec<Vec<u32>> = Vec::new();
        for (t, part) in self.tracks.iter().zip(&parts) {
            let syms: Vec<String> = if part.contains(',') || !self.compact() {
                part.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            } else {
                part.chars().map(|c| c.to_string()).collect()
            };
            let mut col = Vec::new();
            for s in syms {
                col.push(
                    t.sym_index(&s).ok_or_else(|| {
                        Error::Layout(format!("symbol {s} not in track {}", t.name))
                    })?,
                );
            }
            columns.push(col);
        }
        let len = columns[0].len();
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::Layout(format!("tracks of {text} differ in length")));
        }
        Ok((0..len)
            .map(|p| {
                let digits: Vec<u32> = columns.iter().map(|c| c[p]).collect();
                self.encode(&digits)
            })
            .collect())
    }

    /// Same tracks, possibly different names.
    pub fn same_domains(&self, other: &Layout) -> bool {
        self.arity() == other.arity()
            && self
                .tracks
                .iter()
                .zip(&other.tracks)
                .all(|(a, b)| a.syms == b.syms)
    }

    pub fn renamed(&self, names: &[&str]) -> Result<Arc<Layout>> {
        if names.len() != self.arity() {
            return Err(Error::Layout("rename arity mismatch".into()));
        }
        Layout::new(
            self.tracks
                .iter()
                .zip(names)
                .map(|(t, n)| t.renamed(*n))
                .collect(),
        )
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .tracks
            .iter()
            .map(|t| format!("{}:{}", t.name, t.syms.join(",")))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Checks two layouts are identical (names and domains).
pub(crate) fn same_layout(a: &Layout, b: &Layout) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Layout(format!("[{a}] vs [{b}]")))
    }
}
