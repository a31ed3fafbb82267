use serde::{Deserialize, Serialize};

use super::AnnotatedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LintKind {
    OmitDeterminer,
    OmitDefinitionVerb,
    OperatorSymbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintWarning {
    pub sentence_id: String,
    pub symbol_id: String,
    pub kind: LintKind,
    /// fragment index within the definition, absent for symbol-level checks
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fragment: Option<usize>,
    pub message: String,
}

/// Word lists driving the heuristics. Matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintConfig {
    pub determiners: Vec<String>,
    pub definition_verbs: Vec<String>,
    /// Symbols whose full text equals one of these are flagged as operator
    /// uses. Empty by default: operator context is only reported when the
    /// caller marks it through this list.
    pub operator_names: Vec<String>,
}

impl Default for LintConfig {
    fn default() -> Self {
        let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect();
        LintConfig {
            determiners: words(&["the", "a", "an", "some"]),
            definition_verbs: words(&[
                "is",
                "are",
                "denotes",
                "denote",
                "means",
                "mean",
                "represents",
                "represent",
            ]),
            operator_names: Vec::new(),
        }
    }
}

fn listed(list: &[String], word: &str) -> bool {
    list.iter().any(|w| w.eq_ignore_ascii_case(word))
}

/// Heuristic span-boundary warnings. Never fails; clean input yields no
/// warnings.
pub fn lint_annotations(sentence: &AnnotatedSentence, config: &LintConfig) -> Vec<LintWarning> {
    let mut out = Vec::new();
    for link in &sentence.links {
        for (fi, &[start, _]) in link.definition.fragments.iter().enumerate() {
            let Some(first) = sentence.tokens.get(start) else {
                continue;
            };
            let word = first.text.as_str();
            let kind = if listed(&config.determiners, word) {
                LintKind::OmitDeterminer
            } else if listed(&config.definition_verbs, word) {
                LintKind::OmitDefinitionVerb
            } else {
                continue;
            };
            out.push(LintWarning {
                sentence_id: sentence.id.clone(),
                symbol_id: link.symbol_id.clone(),
                kind,
                fragment: Some(fi),
                message: format!("definition fragment starts with {word:?}"),
            });
        }
    }
    if !config.operator_names.is_empty() {
        for sym in &sentence.symbols {
            let text: String = sym
                .token_indices
                .iter()
                .map(|&i| sentence.tokens[i].text.as_str())
                .collect();
            let bare = text.trim_matches('$').trim_start_matches('\\');
            if listed(&config.operator_names, bare) {
                out.push(LintWarning {
                    sentence_id: sentence.id.clone(),
                    symbol_id: sym.id.clone(),
                    kind: LintKind::OperatorSymbol,
                    fragment: None,
                    message: format!("symbol {text:?} is a standard operator"),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;

    fn lint_fragment(text: &str, frag: [usize; 2]) -> Vec<LintKind> {
        let s = with_symbol(sentence("s", text), "S", &[0]);
        let s = with_link(s, "S", &[frag]);
        lint_annotations(&s, &LintConfig::default())
            .into_iter()
            .map(|w| w.kind)
            .collect()
    }

    #[test]
    fn determiner_flagged() {
        assert_eq!(
            lint_fragment("f the function", [1, 2]),
            [LintKind::OmitDeterminer]
        );
    }

    #[test]
    fn clean_fragment() {
        assert!(lint_fragment("f the function", [2, 2]).is_empty());
    }

    #[test]
    fn definition_verb_flagged() {
        assert_eq!(
            lint_fragment("V denotes the vocabulary size", [1, 4]),
            [LintKind::OmitDefinitionVerb]
        );
    }

    #[test]
    fn operator_only_when_configured() {
        let s = with_symbol(sentence("s", "\\log is applied"), "S", &[0]);
        assert!(lint_annotations(&s, &LintConfig::default()).is_empty());
        let cfg = LintConfig {
            operator_names: vec!["log".into()],
            ..LintConfig::default()
        };
        assert_eq!(lint_annotations(&s, &cfg)[0].kind, LintKind::OperatorSymbol);
    }
}
