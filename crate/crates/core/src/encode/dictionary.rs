use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use super::EncodeError;

pub const UNK: &str = "<UNK>";
pub const UNK_INDEX: u32 = 0;
const HEADER: &str = "# defx-features v1";

/// Feature string to dense index. Fitting counts features while unfrozen;
/// freezing keeps those seen at least `min_count` times, sorted
/// lexicographically after the reserved `<UNK>` at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDictionary {
    index: HashMap<String, u32>,
    names: Vec<String>,
    counts: HashMap<String, usize>,
    frozen: bool,
    min_count: usize,
}

impl FeatureDictionary {
    pub fn new(min_count: usize) -> Result<Self, EncodeError> {
        if min_count == 0 {
            return Err(EncodeError::Config("min_count must be at least 1".into()));
        }
        Ok(FeatureDictionary {
            index: HashMap::new(),
            names: Vec::new(),
            counts: HashMap::new(),
            frozen: false,
            min_count,
        })
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Number of indices, including `<UNK>`. Zero while unfrozen.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn observe(&mut self, feature: &str) -> Result<(), EncodeError> {
        if self.frozen {
            return Err(EncodeError::Frozen);
        }
        match self.counts.get_mut(feature) {
            Some(c) => *c += 1,
            None => {
                self.counts.insert(feature.to_string(), 1);
            }
        }
        Ok(())
    }

    pub fn freeze(&mut self) {
        if self.frozen {
            return;
        }
        let mut kept: Vec<String> = self
            .counts
            .drain()
            .filter(|(_, c)| *c >= self.min_count)
            .map(|(f, _)| f)
            .collect();
        kept.sort_unstable();
        self.names = std::iter::once(UNK.to_string()).chain(kept).collect();
        self.index = self
            .names
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        self.frozen = true;
    }

    /// Index of a feature, `<UNK>` when unseen.
    pub fn get(&self, feature: &str) -> u32 {
        self.index.get(feature).copied().unwrap_or(UNK_INDEX)
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.index.contains_key(feature)
    }

    pub fn name(&self, index: u32) -> Option<&str> {
        self.names.get(index as usize).map(String::as_str)
    }

    /// Plain-text form: a header, then `feature\tindex` lines sorted by index.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n# min_count={}\n", self.min_count);
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{}\t{i}", escape(name));
        }
        out
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        w.flush()
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, EncodeError> {
        let mut lines = reader.lines();
        let mut next = |what: &str| -> Result<String, EncodeError> {
            lines
                .next()
                .transpose()
                .map_err(|e| EncodeError::Format(e.to_string()))?
                .ok_or_else(|| EncodeError::Format(format!("missing {what}")))
        };
        if next("header")? != HEADER {
            return Err(EncodeError::Format(
                "not a feature dictionary (bad header)".into(),
            ));
        }
        let min_count = next("min_count")?
            .strip_prefix("# min_count=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| EncodeError::Format("bad min_count line".into()))?;
        let mut dict = FeatureDictionary::new(min_count)?;
        for (expected, line) in lines.enumerate() {
            let line = line.map_err(|e| EncodeError::Format(e.to_string()))?;
            let (name, idx) = line
                .rsplit_once('\t')
                .ok_or_else(|| EncodeError::Format(format!("bad entry {line:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| EncodeError::Format(format!("bad index in {line:?}")))?;
            if idx != expected {
                return Err(EncodeError::Format(format!(
                    "index {idx} out of order, expected {expected}"
                )));
            }
            dict.names.push(unescape(name));
        }
        if dict.names.first().map(String::as_str) != Some(UNK) {
            return Err(EncodeError::Format("index 0 must be <UNK>".into()));
        }
        dict.index = dict
            .names
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        dict.frozen = true;
        Ok(dict)
    }

    /// SHA-256 of the text form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(c) => out.push(c),
            None => out.push('\\'),
        }
    }
    out
}
