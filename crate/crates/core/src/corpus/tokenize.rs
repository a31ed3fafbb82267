use super::Token;

/// Splits sentence text into tokens with character offsets.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Token>;
}

/// Splits on Unicode whitespace only.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut current = String::new();
        let mut start = 0;
        for (ci, ch) in text.chars().enumerate() {
            if ch.is_whitespace() {
                if !current.is_empty() {
                    out.push(Token::new(std::mem::take(&mut current), start, ci));
                }
            } else {
                if current.is_empty() {
                    start = ci;
                }
                current.push(ch);
            }
        }
        if !current.is_empty() {
            let end = start + current.chars().count();
            out.push(Token::new(current, start, end));
        }
        out
    }
}

/// Whitespace splitting plus sentence punctuation as standalone tokens.
/// Hyphens, apostrophes and math characters (`_ ^ $ \`) stay inside words.
#[derive(Debug, Clone, Copy, Default)]
pub struct PunctTokenizer;

fn is_split_punct(ch: char) -> bool {
    matches!(
        ch,
        ',' | '.' | ';' | ':' | '(' | ')' | '[' | ']' | '{' | '}' | '!' | '?' | '"'
    )
}

impl Tokenizer for PunctTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        for word in WhitespaceTokenizer.tokenize(text) {
            let chars: Vec<char> = word.text.chars().collect();
            let mut start = 0;
            for (k, &ch) in chars.iter().enumerate() {
                // a period between digits is a decimal point
                let decimal = ch == '.'
                    && k > 0
                    && k + 1 < chars.len()
                    && chars[k - 1].is_ascii_digit()
                    && chars[k + 1].is_ascii_digit();
                if is_split_punct(ch) && !decimal {
                    if start < k {
                        out.push(Token::new(
                            chars[start..k].iter().collect::<String>(),
                            word.char_start + start,
                            word.char_start + k,
                        ));
                    }
                    out.push(Token::new(
                        ch.to_string(),
                        word.char_start + k,
                        word.char_start + k + 1,
                    ));
                    start = k + 1;
                }
            }
            if start < chars.len() {
                out.push(Token::new(
                    chars[start..].iter().collect::<String>(),
                    word.char_start + start,
                    word.char_end,
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(toks: &[Token]) -> Vec<&str> {
        toks.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn whitespace_offsets_are_char_based() {
        let toks = WhitespaceTokenizer.tokenize("υ is  ü");
        assert_eq!(texts(&toks), ["υ", "is", "ü"]);
        assert_eq!((toks[0].char_start, toks[0].char_end), (0, 1));
        assert_eq!((toks[2].char_start, toks[2].char_end), (6, 7));
    }

    #[test]
    fn punctuation_split() {
        let toks = PunctTokenizer.tokenize("A, C and (x) denote within-layer 0.5.");
        assert_eq!(
            texts(&toks),
            [
                "A",
                ",",
                "C",
                "and",
                "(",
                "x",
                ")",
                "denote",
                "within-layer",
                "0.5",
                "."
            ]
        );
        let t = &toks[1];
        assert_eq!((t.char_start, t.char_end), (1, 2));
    }
}
