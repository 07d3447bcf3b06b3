use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::EmotionScores;
use crate::annotation::GoldLabel;
use crate::emotion::EmotionCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryEval {
    pub accuracy: f64,
    /// Mean F1 of the positive and negative classes.
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_category: BTreeMap<EmotionCategory, BinaryEval>,
    pub mean_accuracy: f64,
    pub mean_macro_f1: f64,
}

fn f1(tp: usize, fp: usize, fn_: usize, class: &str) -> f64 {
    if tp + fn_ == 0 {
        log::warn!("{class} class has no gold support; its F1 is taken as 0");
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Binary evaluation of one category: an item is positive iff its gold label
/// equals `category`.
pub fn evaluate(
    predicted: &HashMap<String, bool>,
    gold: &[GoldLabel],
    category: EmotionCategory,
) -> Result<BinaryEval> {
    if gold.is_empty() {
        return Err(Error::InsufficientData("empty gold set".into()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for g in gold {
        let pred = *predicted
            .get(&g.item_id)
            .ok_or_else(|| Error::MissingPrediction(g.item_id.clone()))?;
        match (g.label == category, pred) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / gold.len() as f64;
    // The negative class swaps the roles of false positives and negatives.
    let macro_f1 = (f1(tp, fp, fn_, "positive") + f1(tn, fn_, fp, "negative")) / 2.0;
    Ok(BinaryEval { accuracy, macro_f1 })
}

pub fn evaluate_all(
    predicted: &BTreeMap<EmotionCategory, HashMap<String, bool>>,
    gold: &[GoldLabel],
) -> Result<EvalReport> {
    let mut per_category = BTreeMap::new();
    for (&category, preds) in predicted {
        per_category.insert(category, evaluate(preds, gold, category)?);
    }
    if per_category.is_empty() {
        return Err(Error::InsufficientData("no categories to evaluate".into()));
    }
    let k = per_category.len() as f64;
    Ok(EvalReport {
        mean_accuracy: per_category.values().map(|e| e.accuracy).sum::<f64>() / k,
        mean_macro_f1: per_category.values().map(|e| e.macro_f1).sum::<f64>() / k,
        per_category,
    })
}

/// Binary decisions for one category at a probability threshold (inclusive).
pub fn predictions_from_scores(
    scores: &BTreeMap<String, EmotionScores>,
    category: EmotionCategory,
    threshold: f64,
) -> HashMap<String, bool> {
    scores
        .iter()
        .map(|(id, s)| (id.clone(), s.get(category) >= threshold))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionCategory::*;

    fn gold_set(n: usize, positives: usize) -> Vec<GoldLabel> {
        (0..n)
            .map(|i| GoldLabel {
                item_id: format!("g{i}"),
                label: if i < positives { OtherCondemning } else { Neutral },
                vote_count: 2,
            })
            .collect()
    }

    #[test]
    fn perfect_predictions() {
        let gold = gold_set(10, 3);
        let preds = gold
            .iter()
            .map(|g| (g.item_id.clone(), g.label == OtherCondemning))
            .collect();
        let e = evaluate(&preds, &gold, OtherCondemning).unwrap();
        assert_eq!((e.accuracy, e.macro_f1), (1.0, 1.0));
    }

    #[test]
    fn all_negative_on_twenty_percent_positive() {
        let gold = gold_set(100, 20);
        let preds = gold.iter().map(|g| (g.item_id.clone(), false)).collect();
        let e = evaluate(&preds, &gold, OtherCondemning).unwrap();
        assert_eq!(e.accuracy, 0.8);
        assert!((e.macro_f1 - (0.0 + 8.0 / 9.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn missing_prediction_names_item() {
        let gold = gold_set(3, 1);
        let preds: HashMap<String, bool> = [("g0".to_string(), true)].into();
        match evaluate(&preds, &gold, OtherCondemning) {
            Err(Error::MissingPrediction(id)) => assert_eq!(id, "g1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn absent_class_scores_zero_f1() {
        let gold = gold_set(4, 0);
        let preds = gold.iter().map(|g| (g.item_id.clone(), false)).collect();
        let e = evaluate(&preds, &gold, OtherCondemning).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.macro_f1, 0.5);
    }
}
