//! BRAT standoff ingestion.
//!
//! The `.txt` file holds one pre-split sentence per line. Offsets in the
//! `.ann` file are document-global character offsets. Entity types `Term` /
//! `Symbol` become symbol occurrences, `Definition` / `Def` become definition
//! spans, and `DEFINITION-OF` relations link them. Offsets that do not fall on
//! token boundaries under the supplied tokenizer are rejected, never snapped.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{
    AnnotatedSentence, CorpusError, DefinitionSpan, SymbolDefLink, SymbolOccurrence, Token,
    Tokenizer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EntityKind {
    Term,
    Definition,
}

#[derive(Debug)]
struct Entity {
    kind: EntityKind,
    sentence: usize,
    /// inclusive token ranges, sentence-local
    fragments: Vec<[usize; 2]>,
}

struct Line {
    char_start: usize,
    char_end: usize,
    tokens: Vec<Token>,
}

pub fn load_brat(
    text_path: impl AsRef<Path>,
    ann_path: impl AsRef<Path>,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let text_path = text_path.as_ref();
    let ann_path = ann_path.as_ref();
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| CorpusError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let text = read(text_path)?;
    let ann = read(ann_path)?;
    let doc_id = text_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_brat(
        &doc_id,
        &text,
        &ann,
        tokenizer,
        &ann_path.display().to_string(),
    )
}

/// Parses an in-memory text/annotation pair. `file` is used in error messages.
pub fn parse_brat(
    doc_id: &str,
    text: &str,
    ann: &str,
    tokenizer: &dyn Tokenizer,
    file: &str,
) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let mut lines = Vec::new();
    let mut offset = 0usize;
    for raw in text.split('\n') {
        let len = raw.chars().count();
        let body = raw.strip_suffix('\r').unwrap_or(raw);
        lines.push(Line {
            char_start: offset,
            char_end: offset + body.chars().count(),
            tokens: tokenizer.tokenize(body),
        });
        offset += len + 1;
    }

    let brat_err = |line: usize, message: String| CorpusError::Brat {
        file: file.to_string(),
        line,
        message,
    };

    let mut entities: HashMap<String, Entity> = HashMap::new();
    let mut relations: Vec<(usize, String, String)> = Vec::new();

    for (ln, raw) in ann.lines().enumerate() {
        let ln = ln + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.starts_with('T') {
            let mut cols = raw.splitn(3, '\t');
            let id = cols.next().unwrap_or_default().to_string();
            let spec = cols
                .next()
                .ok_or_else(|| brat_err(ln, "entity line has no type/offset column".into()))?;
            let (ty, offsets) = spec
                .split_once(' ')
                .ok_or_else(|| brat_err(ln, format!("entity {id} has no offsets")))?;
            let kind = match ty.to_ascii_lowercase().as_str() {
                "term" | "symbol" => EntityKind::Term,
                "definition" | "def" => EntityKind::Definition,
                other => return Err(brat_err(ln, format!("unknown entity type {other}"))),
            };
            let mut sentence = None;
            let mut fragments = Vec::new();
            for piece in offsets.split(';') {
                let (s, e) = piece
                    .trim()
                    .split_once(' ')
                    .and_then(|(s, e)| Some((s.parse::<usize>().ok()?, e.parse::<usize>().ok()?)))
                    .ok_or_else(|| brat_err(ln, format!("bad offset pair {piece:?}")))?;
                if s >= e {
                    return Err(brat_err(ln, format!("empty offset pair {s} {e}")));
                }
                let li = lines
                    .iter()
                    .position(|l| l.char_start <= s && e <= l.char_end)
                    .ok_or_else(|| brat_err(ln, format!("span {s}-{e} crosses a line break")))?;
                if sentence.is_some_and(|prev| prev != li) {
                    return Err(brat_err(ln, format!("entity {id} spans several sentences")));
                }
                sentence = Some(li);
                let line = &lines[li];
                let first = line
                    .tokens
                    .iter()
                    .position(|t| line.char_start + t.char_start == s)
                    .ok_or(CorpusError::Boundary {
                        file: file.to_string(),
                        offset: s,
                    })?;
                let last = line
                    .tokens
                    .iter()
                    .position(|t| line.char_start + t.char_end == e)
                    .ok_or(CorpusError::Boundary {
                        file: file.to_string(),
                        offset: e,
                    })?;
                fragments.push([first, last]);
            }
            if kind == EntityKind::Term && fragments.len() != 1 {
                return Err(brat_err(ln, format!("term {id} must be contiguous")));
            }
            entities.insert(
                id,
                Entity {
                    kind,
                    sentence: sentence.expect("at least one fragment"),
                    fragments,
                },
            );
        } else if raw.starts_with('R') {
            let mut cols = raw.split('\t');
            let _id = cols.next();
            let body = cols
                .next()
                .ok_or_else(|| brat_err(ln, "relation line has no body".into()))?;
            let mut parts = body.split_whitespace();
            let ty = parts.next().unwrap_or_default();
            if !ty.eq_ignore_ascii_case("DEFINITION-OF") {
                return Err(brat_err(ln, format!("unknown relation type {ty}")));
            }
            let mut arg = |name: &str| -> Result<String, CorpusError> {
                parts
                    .next()
                    .and_then(|a| a.split_once(':'))
                    .filter(|(k, _)| k.eq_ignore_ascii_case(name))
                    .map(|(_, v)| v.to_string())
                    .ok_or_else(|| brat_err(ln, format!("relation missing {name}")))
            };
            let a1 = arg("Arg1")?;
            let a2 = arg("Arg2")?;
            relations.push((ln, a1, a2));
        }
        // notes, attributes and normalizations carry nothing we model
    }

    // symbol id -> (sentence, fragments); BTreeMap keeps output deterministic
    let mut links: BTreeMap<String, (usize, Vec<[usize; 2]>)> = BTreeMap::new();
    for (ln, a1, a2) in relations {
        let lookup = |id: &str| {
            entities
                .get(id)
                .ok_or_else(|| brat_err(ln, format!("relation references unknown entity {id}")))
        };
        let (e1, e2) = (lookup(&a1)?, lookup(&a2)?);
        let (term_id, term, def) = match (e1.kind, e2.kind) {
            (EntityKind::Term, EntityKind::Definition) => (&a1, e1, e2),
            (EntityKind::Definition, EntityKind::Term) => (&a2, e2, e1),
            _ => {
                return Err(brat_err(
                    ln,
                    format!("relation {a1}-{a2} must join a term and a definition"),
                ))
            }
        };
        if term.sentence != def.sentence {
            return Err(brat_err(
                ln,
                format!("relation {a1}-{a2} crosses sentences"),
            ));
        }
        links
            .entry(term_id.clone())
            .or_insert_with(|| (term.sentence, Vec::new()))
            .1
            .extend(def.fragments.iter().copied());
    }

    let mut out = Vec::new();
    for (li, line) in lines.iter().enumerate() {
        if line.tokens.is_empty() {
            continue;
        }
        let body: String = text
            .chars()
            .skip(line.char_start)
            .take(line.char_end - line.char_start)
            .collect();
        let mut symbols: Vec<SymbolOccurrence> = entities
            .iter()
            .filter(|(_, e)| e.kind == EntityKind::Term && e.sentence == li)
            .map(|(id, e)| SymbolOccurrence {
                id: id.clone(),
                token_indices: (e.fragments[0][0]..=e.fragments[0][1]).collect(),
            })
            .collect();
        symbols.sort_by_key(|s| (s.first_token(), s.id.clone()));
        let sentence_links: Vec<SymbolDefLink> = symbols
            .iter()
            .filter_map(|s| {
                links.get(&s.id).map(|(_, frags)| SymbolDefLink {
                    symbol_id: s.id.clone(),
                    definition: DefinitionSpan::normalized(frags.clone()),
                })
            })
            .collect();
        let sentence = AnnotatedSentence {
            id: format!("{doc_id}-{li}"),
            paper_id: doc_id.to_string(),
            text: body,
            tokens: line.tokens.clone(),
            symbols,
            links: sentence_links,
            syntax: None,
        };
        sentence.validate()?;
        out.push(sentence);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PunctTokenizer, WhitespaceTokenizer};

    #[test]
    fn crossing_offset_is_rejected_with_offset() {
        let err = parse_brat(
            "d",
            "f is a function",
            "T1\tTerm 0 3\tf i",
            &WhitespaceTokenizer,
            "d.ann",
        )
        .unwrap_err();
        match err {
            CorpusError::Boundary { offset, .. } => assert_eq!(offset, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn discontinuous_definition_and_relation() {
        // 0         1         2         3
        // 0123456789012345678901234567890123456
        // function f computes accuracy scores
        let text = "function f computes accuracy scores";
        let ann = "T1\tTerm 9 10\tf\n\
                   T2\tDefinition 0 8;11 28\tfunction computes accuracy\n\
                   R1\tDEFINITION-OF Arg1:T1 Arg2:T2\n";
        let got = parse_brat("d", text, ann, &WhitespaceTokenizer, "d.ann").unwrap();
        assert_eq!(got.len(), 1);
        let s = &got[0];
        assert_eq!(s.symbols[0].token_indices, vec![1]);
        assert_eq!(s.links.len(), 1);
        assert_eq!(s.links[0].definition.fragments, vec![[0, 0], [2, 3]]);
    }

    #[test]
    fn spec_style_discontinuous_offsets() {
        // "T2 Definition 0 8;15 21" -> two fragments
        let text = "abcdefgh SYM is hidden state";
        let ann = "T1\tTerm 9 12\tSYM\nT2\tDefinition 0 8;16 22\tabcdefgh hidden\nR1\tDEFINITION-OF Arg1:T2 Arg2:T1";
        let got = parse_brat("d", text, ann, &WhitespaceTokenizer, "d.ann").unwrap();
        assert_eq!(got[0].links[0].definition.fragments.len(), 2);
    }

    #[test]
    fn offsets_are_document_global_across_lines() {
        let text = "first line here\nx is a vector.\n";
        // second line starts at char 16; "x" = 16..17, "vector" = 23..29
        let ann =
            "T1\tSymbol 16 17\tx\nT2\tDefinition 23 29\tvector\nR1\tDEFINITION-OF Arg1:T1 Arg2:T2";
        let got = parse_brat("doc", text, ann, &PunctTokenizer, "doc.ann").unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].id, "doc-1");
        assert_eq!(got[1].links[0].definition.fragments, vec![[3, 3]]);
        assert!(got[0].symbols.is_empty());
    }

    #[test]
    fn several_definitions_of_one_term_merge() {
        let text = "the output function f is a linear model";
        let ann = "T1\tTerm 20 21\tf\n\
                   T2\tDefinition 4 19\toutput function\n\
                   T3\tDefinition 27 39\tlinear model\n\
                   R1\tDEFINITION-OF Arg1:T1 Arg2:T2\n\
                   R2\tDEFINITION-OF Arg1:T1 Arg2:T3\n";
        let got = parse_brat("d", text, ann, &WhitespaceTokenizer, "d.ann").unwrap();
        assert_eq!(got[0].links[0].definition.fragments, vec![[1, 2], [6, 7]]);
    }

    #[test]
    fn term_to_term_relation_rejected() {
        let ann = "T1\tTerm 0 1\tf\nT2\tTerm 2 4\tis\nR1\tDEFINITION-OF Arg1:T1 Arg2:T2";
        assert!(parse_brat("d", "f is", ann, &WhitespaceTokenizer, "d").is_err());
    }
}
