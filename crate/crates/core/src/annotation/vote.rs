use serde::{Deserialize, Serialize};

use super::LabelMatrix;
use crate::emotion::{AnnotationChoice, EmotionCategory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub item_id: String,
    pub label: EmotionCategory,
    pub vote_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VoteOutcome {
    pub gold: Vec<GoldLabel>,
    pub excluded: Vec<String>,
}

/// Gold label per item by strict majority; "hard to tell" never wins.
pub fn majority_vote(matrix: &LabelMatrix) -> VoteOutcome {
    let n = matrix.n_raters();
    let mut out = VoteOutcome::default();
    for (item, row) in matrix.item_ids().iter().zip(matrix.rows()) {
        let mut counts = [0usize; 7];
        for choice in row {
            counts[choice.index()] += 1;
        }
        let winner = EmotionCategory::ALL
            .into_iter()
            .find(|c| 2 * counts[AnnotationChoice::Emotion(*c).index()] > n);
        match winner {
            Some(label) => out.gold.push(GoldLabel {
                item_id: item.clone(),
                label,
                vote_count: counts[label.index()],
            }),
            None => out.excluded.push(item.clone()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use AnnotationChoice::HardToTell;
    use EmotionCategory::*;

    fn one_item(choices: [AnnotationChoice; 3]) -> LabelMatrix {
        LabelMatrix::new(
            vec!["x".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![choices.to_vec()],
        )
        .unwrap()
    }

    #[test]
    fn two_of_three_wins() {
        let out = majority_vote(&one_item([
            OtherCondemning.into(),
            OtherCondemning.into(),
            Neutral.into(),
        ]));
        assert_eq!(
            out.gold,
            [GoldLabel {
                item_id: "x".into(),
                label: OtherCondemning,
                vote_count: 2
            }]
        );
        assert!(out.excluded.is_empty());
    }

    #[test]
    fn no_majority_is_excluded() {
        let out = majority_vote(&one_item([Neutral.into(), OtherPraising.into(), HardToTell]));
        assert!(out.gold.is_empty());
        assert_eq!(out.excluded, ["x"]);
    }

    #[test]
    fn hard_to_tell_majority_is_excluded() {
        let out = majority_vote(&one_item([HardToTell, HardToTell, Neutral.into()]));
        assert!(out.gold.is_empty());
        assert_eq!(out.excluded, ["x"]);
    }

    #[test]
    fn even_split_among_four_is_not_a_majority() {
        let m = LabelMatrix::new(
            vec!["x".into()],
            (0..4).map(|i| format!("r{i}")).collect(),
            vec![vec![Neutral.into(), Neutral.into(), NonMoral.into(), NonMoral.into()]],
        )
        .unwrap();
        assert_eq!(majority_vote(&m).excluded, ["x"]);
    }
}
