use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AnnotatedSentence, CorpusError};

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads one sentence per line, validating every invariant. Blank lines are
/// skipped; line numbers in errors are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Json {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sentence: AnnotatedSentence =
            serde_json::from_str(&line).map_err(|e| CorpusError::Json {
                line: i + 1,
                message: e.to_string(),
            })?;
        sentence.validate()?;
        out.push(sentence);
    }
    Ok(out)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_jsonl(BufReader::new(file))
}

pub fn write_jsonl<W: Write>(
    mut writer: W,
    sentences: &[AnnotatedSentence],
) -> std::io::Result<()> {
    for s in sentences {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_jsonl(
    path: impl AsRef<Path>,
    sentences: &[AnnotatedSentence],
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_jsonl(BufWriter::new(file), sentences).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;

    #[test]
    fn zero_symbol_sentence_loads() {
        let line = r#"{"id":"s1","paper_id":"p","text":"no math here","tokens":[{"text":"no","start":0,"end":2},{"text":"math","start":3,"end":7},{"text":"here","start":8,"end":12}],"symbols":[],"links":[]}"#;
        let got = read_jsonl(line.as_bytes()).unwrap();
        assert_eq!(got.len(), 1);
        assert!(got[0].symbols.is_empty() && got[0].links.is_empty());
    }

    #[test]
    fn missing_symbol_reported_by_id() {
        let line = r#"{"id":"s1","paper_id":"p","text":"x","tokens":[{"text":"x","start":0,"end":1}],"symbols":[{"id":"S1","tokens":[0]}],"links":[{"symbol_id":"S9","fragments":[[0,0]]}]}"#;
        let err = read_jsonl(line.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("S9"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "\n{\"id\": 3}\n";
        match read_jsonl(input.as_bytes()).unwrap_err() {
            CorpusError::Json { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let s = with_symbol(sentence("s1", "SYMBOL is a vector"), "S1", &[0]);
        let s = with_link(s, "S1", &[[3, 3]]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        save_jsonl(&path, std::slice::from_ref(&s)).unwrap();
        assert_eq!(load_jsonl(&path).unwrap(), vec![s]);
    }
}
