use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::sampling::allocate_quotas;
use super::GoldLabel;
use crate::emotion::EmotionCategory;
use crate::error::{Error, Result};
use crate::rng;

/// Train/test partition of a gold set, each side sorted by item id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<GoldLabel>,
    pub test: Vec<GoldLabel>,
}

/// Draws `train_n` items preserving the gold label mix; the rest is test.
///
/// Per-category train quotas come from the largest remainder method. Each
/// category's items are sorted by id and shuffled with one ChaCha8 stream
/// (seeded by `seed`) consumed in canonical category order.
pub fn stratified_split(gold: &[GoldLabel], train_n: usize, seed: u64) -> Result<Split> {
    if train_n >= gold.len() {
        return Err(Error::Invalid(format!(
            "train size {train_n} must be smaller than the gold set ({})",
            gold.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = gold.iter().find(|g| !seen.insert(g.item_id.as_str())) {
        return Err(Error::Invalid(format!("duplicate gold item `{}`", dup.item_id)));
    }

    let mut by_category: Vec<Vec<&GoldLabel>> = vec![Vec::new(); 6];
    for g in gold {
        by_category[g.label.index()].push(g);
    }
    let capacity: Vec<usize> = by_category.iter().map(Vec::len).collect();
    let weights: Vec<u64> = capacity.iter().map(|&c| c as u64).collect();
    let (quotas, capped) = allocate_quotas(&weights, &capacity, train_n)?;
    if capped {
        log::warn!("category quota exceeded its size; excess redistributed");
    }

    let mut rng = rng::seeded(seed);
    let mut train = Vec::with_capacity(train_n);
    let mut test = Vec::with_capacity(gold.len() - train_n);
    for category in EmotionCategory::ALL {
        let items = &mut by_category[category.index()];
        items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        items.shuffle(&mut rng);
        let quota = quotas[category.index()];
        train.extend(items[..quota].iter().map(|g| (*g).clone()));
        test.extend(items[quota..].iter().map(|g| (*g).clone()));
    }
    train.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    test.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    Ok(Split { train, test })
}
