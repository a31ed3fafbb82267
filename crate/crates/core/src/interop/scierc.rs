use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, DefinitionSpan, SymbolDefLink, SymbolOccurrence, Token};
use crate::targeting::mask_symbols;

use super::InteropError;

pub const RELATION: &str = "DEFINITION-OF";

/// `[term_start, term_end, def_start, def_end, "DEFINITION-OF"]`
pub type Relation = (usize, usize, usize, usize, String);

/// One document. Token indices are document-global: sentence `i` starts at
/// the total length of sentences `0..i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScircRecord {
    pub doc_key: String,
    pub sentences: Vec<Vec<String>>,
    pub ner: Vec<Vec<(usize, usize, String)>>,
    pub relations: Vec<Vec<Relation>>,
}

/// Symbols become single masked `TERM` tokens; every definition fragment
/// becomes a `DEF` entity with its own relation. One record per paper, in
/// order of first appearance.
pub fn to_scierc(corpus: &[AnnotatedSentence]) -> Vec<ScircRecord> {
    let mut order: Vec<&str> = Vec::new();
    let mut docs: BTreeMap<&str, ScircRecord> = BTreeMap::new();
    for s in corpus {
        let doc = docs.entry(s.paper_id.as_str()).or_insert_with(|| {
            order.push(s.paper_id.as_str());
            ScircRecord {
                doc_key: s.paper_id.clone(),
                sentences: vec![],
                ner: vec![],
                relations: vec![],
            }
        });
        let offset: usize = doc.sentences.iter().map(Vec::len).sum();
        let masked = mask_symbols(s);
        let at = |orig: usize| offset + masked.original_to_masked[orig];

        let mut ner: Vec<(usize, usize, String)> = Vec::new();
        let mut relations = Vec::new();
        for sym in s.symbols_in_order() {
            let t = at(sym.first_token());
            ner.push((t, t, "TERM".into()));
        }
        for sym in s.symbols_in_order() {
            let Some(link) = s.link_for(&sym.id) else {
                continue;
            };
            let t = at(sym.first_token());
            for &[a, b] in &link.definition.fragments {
                let (ds, de) = (at(a), at(b));
                ner.push((ds, de, "DEF".into()));
                relations.push((t, t, ds, de, RELATION.to_string()));
            }
        }
        ner.sort();
        ner.dedup();
        doc.sentences.push(masked.tokens);
        doc.ner.push(ner);
        doc.relations.push(relations);
    }
    order
        .into_iter()
        .map(|k| docs.remove(k).expect("document recorded"))
        .collect()
}

/// Rebuilds sentences from records. Each `TERM` entity becomes a symbol;
/// relations sharing a `TERM` are grouped into one (possibly discontinuous)
/// definition. `DEF` entities without a relation are dropped.
pub fn from_scierc(records: &[ScircRecord]) -> Result<Vec<AnnotatedSentence>, InteropError> {
    let mut out = Vec::new();
    for rec in records {
        if rec.ner.len() != rec.sentences.len() || rec.relations.len() != rec.sentences.len() {
            return Err(InteropError::Scierc {
                doc_key: rec.doc_key.clone(),
                sentence: 0,
                message: "ner/relations must have one list per sentence".into(),
            });
        }
        let mut offset = 0;
        for (i, words) in rec.sentences.iter().enumerate() {
            let fail = |message: String| InteropError::Scierc {
                doc_key: rec.doc_key.clone(),
                sentence: i,
                message,
            };
            let local = |g: usize| -> Result<usize, InteropError> {
                g.checked_sub(offset)
                    .filter(|&l| l < words.len())
                    .ok_or_else(|| fail(format!("index {g} outside the sentence")))
            };
            let mut tokens = Vec::with_capacity(words.len());
            let mut pos = 0;
            for w in words {
                let n = w.chars().count();
                tokens.push(Token::new(w.clone(), pos, pos + n));
                pos += n + 1;
            }
            let mut term_ids: BTreeMap<(usize, usize), String> = BTreeMap::new();
            let mut symbols = Vec::new();
            for (s, e, kind) in &rec.ner[i] {
                let (s, e) = (local(*s)?, local(*e)?);
                if kind == "TERM" {
                    let id = format!("T{}", symbols.len() + 1);
                    term_ids.insert((s, e), id.clone());
                    symbols.push(SymbolOccurrence {
                        id,
                        token_indices: (s..=e).collect(),
                    });
                }
            }
            let mut grouped: BTreeMap<String, Vec<[usize; 2]>> = BTreeMap::new();
            for (a, b, c, d, label) in &rec.relations[i] {
                if label != RELATION {
                    continue;
                }
                let (a, b, c, d) = (local(*a)?, local(*b)?, local(*c)?, local(*d)?);
                let (term, def) = match (term_ids.get(&(a, b)), term_ids.get(&(c, d))) {
                    (Some(t), _) => (t, [c, d]),
                    (None, Some(t)) => (t, [a, b]),
                    (None, None) => {
                        return Err(fail(format!(
                            "relation {a}-{b}/{c}-{d} has no TERM argument"
                        )))
                    }
                };
                grouped.entry(term.clone()).or_default().push(def);
            }
            let links = symbols
                .iter()
                .filter_map(|sym| {
                    grouped.remove(&sym.id).map(|frags| SymbolDefLink {
                        symbol_id: sym.id.clone(),
                        definition: DefinitionSpan::normalized(frags),
                    })
                })
                .collect();
            let sentence = AnnotatedSentence {
                id: format!("{}-{i}", rec.doc_key),
                paper_id: rec.doc_key.clone(),
                text: words.join(" "),
                tokens,
                symbols,
                links,
                syntax: None,
            };
            sentence.validate().map_err(|e| fail(e.to_string()))?;
            out.push(sentence);
            offset += words.len();
        }
    }
    Ok(out)
}

pub fn write_scierc<W: Write>(mut w: W, records: &[ScircRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_scierc<R: BufRead>(reader: R) -> Result<Vec<ScircRecord>, InteropError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| InteropError::Json {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{sentence, with_link, with_symbol};

    #[test]
    fn single_contiguous_definition() {
        let s = with_link(
            with_symbol(sentence("a", "x is a vector"), "T1", &[0]),
            "T1",
            &[[2, 3]],
        );
        let r = &to_scierc(&[s])[0];
        assert_eq!(r.ner[0].len(), 2);
        assert_eq!(r.relations[0], vec![(0, 0, 2, 3, RELATION.to_string())]);
    }

    #[test]
    fn global_offsets_and_masking() {
        let a = with_symbol(sentence("a", "let f ( x ) be given"), "T1", &[1, 2, 3, 4]);
        let b = with_link(
            with_symbol(sentence("b", "y is a map"), "T1", &[0]),
            "T1",
            &[[3, 3]],
        );
        let recs = to_scierc(&[a, b]);
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.sentences[0], ["let", "SYMBOL", "be", "given"]);
        assert_eq!(r.ner[1][0], (4, 4, "TERM".to_string()));
        assert_eq!(r.relations[1], vec![(4, 4, 7, 7, RELATION.to_string())]);
    }

    #[test]
    fn discontinuous_round_trip() {
        let s = sentence("a", "A and C are the left and right matrix");
        let s = with_symbol(with_symbol(s, "T1", &[0]), "T2", &[2]);
        let s = with_link(with_link(s, "T1", &[[5, 5], [8, 8]]), "T2", &[[7, 8]]);
        let recs = to_scierc(&[s]);
        assert_eq!(recs[0].relations[0].len(), 3);
        // the shared fragment [8, 8] is one DEF entity
        assert_eq!(recs[0].ner[0].len(), 5);
        let back = from_scierc(&recs).unwrap();
        assert_eq!(back[0].links.len(), 2);
        assert_eq!(back[0].links[0].definition.fragments, vec![[5, 5], [8, 8]]);
        assert_eq!(to_scierc(&back), recs);
        let mut buf = Vec::new();
        write_scierc(&mut buf, &recs).unwrap();
        assert_eq!(read_scierc(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn relation_without_term_rejected() {
        let rec = ScircRecord {
            doc_key: "d".into(),
            sentences: vec![vec!["a".into(), "b".into()]],
            ner: vec![vec![]],
            relations: vec![vec![(0, 0, 1, 1, RELATION.into())]],
        };
        assert!(from_scierc(&[rec]).is_err());
    }
}
