use serde::{Deserialize, Serialize};

/// One extracted topic: its id and ranked (term, weight) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: usize,
    pub terms: Vec<(String, f64)>,
}

impl Topic {
    pub fn words(&self) -> Vec<&str> {
        self.terms.iter().map(|(t, _)| t.as_str()).collect()
    }
}

/// Indices of the `top_n` largest `score`s, descending; ties go to the lower index.
pub(crate) fn rank_indices(scores: &[f64], top_n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(top_n);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_index_tiebreak() {
        assert_eq!(rank_indices(&[0.2, 0.5, 0.2, 0.9], 3), [3, 1, 0]);
        assert_eq!(rank_indices(&[1.0; 4], 2), [0, 1]);
        assert_eq!(rank_indices(&[1.0], 5), [0]);
    }
}
