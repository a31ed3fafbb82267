use crate::corpus::AnnotatedSentence;

use super::SYMBOL_TOKEN;

/// A sentence with each symbol occurrence collapsed to one `SYMBOL` token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSentence {
    pub tokens: Vec<String>,
    /// inclusive original token range behind each masked token
    pub origin: Vec<[usize; 2]>,
    /// masked positions of the symbols, in token order
    pub symbol_positions: Vec<usize>,
    /// symbol ids parallel to `symbol_positions`
    pub symbol_ids: Vec<String>,
    /// masked index of every original token
    pub original_to_masked: Vec<usize>,
}

pub fn mask_symbols(sentence: &AnnotatedSentence) -> MaskedSentence {
    let n = sentence.tokens.len();
    // symbol index starting at each original token, if any
    let mut starts: Vec<Option<usize>> = vec![None; n];
    for (k, s) in sentence.symbols.iter().enumerate() {
        starts[s.first_token()] = Some(k);
    }

    let mut out = MaskedSentence {
        tokens: Vec::with_capacity(n),
        origin: Vec::with_capacity(n),
        symbol_positions: Vec::new(),
        symbol_ids: Vec::new(),
        original_to_masked: vec![0; n],
    };
    let mut i = 0;
    while i < n {
        let m = out.tokens.len();
        match starts[i] {
            Some(k) => {
                let sym = &sentence.symbols[k];
                let last = sym.last_token();
                for j in i..=last {
                    out.original_to_masked[j] = m;
                }
                out.tokens.push(SYMBOL_TOKEN.to_string());
                out.origin.push([i, last]);
                out.symbol_positions.push(m);
                out.symbol_ids.push(sym.id.clone());
                i = last + 1;
            }
            None => {
                out.original_to_masked[i] = m;
                out.tokens.push(sentence.tokens[i].text.clone());
                out.origin.push([i, i]);
                i += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;

    #[test]
    fn single_token_symbol() {
        let s = with_symbol(sentence("s", "$w^t$ is a word"), "w", &[0]);
        let m = mask_symbols(&s);
        assert_eq!(m.tokens, ["SYMBOL", "is", "a", "word"]);
        assert_eq!(m.symbol_positions, [0]);
    }

    #[test]
    fn no_symbols_is_identity() {
        let s = sentence("s", "plain words only");
        let m = mask_symbols(&s);
        assert_eq!(m.tokens, ["plain", "words", "only"]);
        assert_eq!(m.origin, [[0, 0], [1, 1], [2, 2]]);
    }

    #[test]
    fn multi_token_symbol_collapses() {
        let s = with_symbol(sentence("s", "let f ( x ) be a map"), "f", &[1, 2, 3, 4]);
        let m = mask_symbols(&s);
        assert_eq!(m.tokens, ["let", "SYMBOL", "be", "a", "map"]);
        assert_eq!(m.origin[1], [1, 4]);
        assert_eq!(m.original_to_masked, [0, 1, 1, 1, 1, 2, 3, 4]);
    }
}
