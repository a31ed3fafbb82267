use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinationCount {
    pub doc_id: String,
    pub respectively: usize,
    pub comma_and: usize,
}

impl CoordinationCount {
    pub fn total(&self) -> usize {
        self.respectively + self.comma_and
    }
}

/// Counts literal `respectively` and `, and` occurrences per document and
/// ranks documents by their sum, descending. Ties keep input order.
pub fn mine_coordination<S: AsRef<str>>(docs: &[(S, S)]) -> Vec<CoordinationCount> {
    let mut out: Vec<CoordinationCount> = docs
        .iter()
        .map(|(id, text)| {
            let text = text.as_ref();
            CoordinationCount {
                doc_id: id.as_ref().to_string(),
                respectively: text.matches("respectively").count(),
                comma_and: text.matches(", and").count(),
            }
        })
        .collect();
    // stable sort preserves document order among ties
    out.sort_by_key(|c| std::cmp::Reverse(c.total()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_counts() {
        let got = mine_coordination(&[("d", "a, and b, and c respectively")]);
        assert_eq!((got[0].respectively, got[0].comma_and), (1, 2));
        let got = mine_coordination(&[("d", "")]);
        assert_eq!((got[0].respectively, got[0].comma_and), (0, 0));
    }

    #[test]
    fn ties_keep_document_order() {
        let got = mine_coordination(&[("a", "x, and y"), ("b", "respectively"), ("c", "")]);
        let ids: Vec<_> = got.iter().map(|c| c.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }
}
