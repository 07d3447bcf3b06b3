//! Stratified selection of items for human annotation.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::corpus::VideoRecord;
use crate::emotion::EmotionCategory;
use crate::error::{Error, Result};
use crate::rng;

/// Splits `total` across strata proportionally to `weights` by the largest
/// remainder method, never exceeding `capacity`.
///
/// Remainder ties go to the lower index. When a stratum's share exceeds its
/// capacity it is capped and the excess is redistributed over the remaining
/// strata by the same rule. The returned flag is set when any capping
/// happened.
pub fn allocate_quotas(weights: &[u64], capacity: &[usize], total: usize) -> Result<(Vec<usize>, bool)> {
    assert_eq!(weights.len(), capacity.len());
    let available: usize = capacity.iter().sum();
    if total > available {
        return Err(Error::Invalid(format!(
            "requested {total} items but only {available} are available"
        )));
    }
    let k = weights.len();
    let mut fixed: Vec<Option<usize>> = vec![None; k];
    let mut reassigned = false;
    loop {
        let open: Vec<usize> = (0..k).filter(|&i| fixed[i].is_none()).collect();
        let remaining = total - fixed.iter().flatten().sum::<usize>();
        let mut w: Vec<u128> = open.iter().map(|&i| weights[i] as u128).collect();
        if w.iter().all(|&x| x == 0) {
            // Only zero-weight strata remain; fall back to their capacities.
            w = open.iter().map(|&i| capacity[i] as u128).collect();
        }
        let wsum: u128 = w.iter().sum();
        let mut shares = vec![0usize; open.len()];
        if remaining > 0 && wsum > 0 {
            let mut rems = Vec::with_capacity(open.len());
            for (j, &wj) in w.iter().enumerate() {
                let exact = remaining as u128 * wj;
                shares[j] = (exact / wsum) as usize;
                rems.push((exact % wsum, j));
            }
            let leftover = remaining - shares.iter().sum::<usize>();
            rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, j) in rems.iter().take(leftover) {
                shares[j] += 1;
            }
        }
        let over: Vec<usize> = open
            .iter()
            .zip(&shares)
            .filter(|(&i, &s)| s > capacity[i])
            .map(|(&i, _)| i)
            .collect();
        if over.is_empty() {
            let mut quotas = vec![0; k];
            for i in 0..k {
                quotas[i] = fixed[i].unwrap_or(0);
            }
            for (&i, s) in open.iter().zip(shares) {
                quotas[i] = s;
            }
            return Ok((quotas, reassigned));
        }
        reassigned = true;
        for i in over {
            fixed[i] = Some(capacity[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleItem {
    pub video_id: String,
    pub category: EmotionCategory,
    pub cluster: String,
    pub channel_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePlan {
    pub quotas: BTreeMap<EmotionCategory, usize>,
    pub items: Vec<SampleItem>,
    pub warnings: Vec<String>,
}

/// Draws `n` pool items whose pilot-label mix follows the pool's own mix.
pub fn stratified_sample(
    pool: &[VideoRecord],
    pilot_labels: &HashMap<String, EmotionCategory>,
    clusters: &HashMap<String, String>,
    n: usize,
    seed: u64,
) -> Result<SamplePlan> {
    stratified_sample_with_targets(pool, pilot_labels, clusters, n, None, seed)
}

/// Like [`stratified_sample`] but with explicit target proportions per
/// category (canonical order). Categories that cannot fill their quota have
/// the shortfall reassigned proportionally.
///
/// Within a category, items are grouped into (cluster, channel) cells whose
/// visiting order is shuffled once. Each pick takes the next item from the
/// non-empty cell whose cluster has the fewest picks in this category, then
/// whose channel has the fewest picks overall, then earliest in the shuffled
/// order. Items missing from `clusters` form their own singleton cluster.
pub fn stratified_sample_with_targets(
    pool: &[VideoRecord],
    pilot_labels: &HashMap<String, EmotionCategory>,
    clusters: &HashMap<String, String>,
    n: usize,
    targets: Option<[f64; 6]>,
    seed: u64,
) -> Result<SamplePlan> {
    if n > pool.len() {
        return Err(Error::Invalid(format!(
            "requested {n} items from a pool of {}",
            pool.len()
        )));
    }
    let mut by_category: Vec<Vec<&VideoRecord>> = vec![Vec::new(); 6];
    for record in pool {
        let label = pilot_labels.get(&record.video_id).ok_or_else(|| {
            Error::Invalid(format!("no pilot label for `{}`", record.video_id))
        })?;
        by_category[label.index()].push(record);
    }
    for items in &mut by_category {
        items.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    }

    let capacity: Vec<usize> = by_category.iter().map(Vec::len).collect();
    let weights: Vec<u64> = match targets {
        None => capacity.iter().map(|&c| c as u64).collect(),
        Some(t) => {
            if t.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Invalid("target proportions must be non-negative".into()));
            }
            t.iter().map(|p| (p * 1e9).round() as u64).collect()
        }
    };
    let (quotas, reassigned) = allocate_quotas(&weights, &capacity, n)?;
    let mut warnings = Vec::new();
    if reassigned {
        let msg = "some categories had fewer pool items than their quota; shortfall reassigned"
            .to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut rng = rng::seeded(seed);
    let mut channel_picks: HashMap<&str, usize> = HashMap::new();
    let mut items = Vec::with_capacity(n);
    for category in EmotionCategory::ALL {
        let quota = quotas[category.index()];
        let mut cells: BTreeMap<(String, &str), Vec<&VideoRecord>> = BTreeMap::new();
        for &record in &by_category[category.index()] {
            let cluster = clusters
                .get(&record.video_id)
                .cloned()
                .unwrap_or_else(|| format!("singleton:{}", record.video_id));
            cells
                .entry((cluster, record.channel_id.as_str()))
                .or_default()
                .push(record);
        }
        let mut cells: Vec<((String, &str), Vec<&VideoRecord>)> = cells.into_iter().collect();
        cells.shuffle(&mut rng);
        for (_, members) in &mut cells {
            members.shuffle(&mut rng);
            // Picks pop from the back.
            members.reverse();
        }

        let mut cluster_picks: HashMap<String, usize> = HashMap::new();
        for _ in 0..quota {
            let (idx, _) = cells
                .iter()
                .enumerate()
                .filter(|(_, (_, members))| !members.is_empty())
                .min_by_key(|(rank, ((cluster, channel), _))| {
                    (
                        cluster_picks.get(cluster).copied().unwrap_or(0),
                        channel_picks.get(channel).copied().unwrap_or(0),
                        *rank,
                    )
                })
                .expect("quota never exceeds category size");
            let ((cluster, channel), members) = &mut cells[idx];
            let record = members.pop().expect("non-empty cell");
            *cluster_picks.entry(cluster.clone()).or_insert(0) += 1;
            *channel_picks.entry(channel).or_insert(0) += 1;
            items.push(SampleItem {
                video_id: record.video_id.clone(),
                category,
                cluster: cluster.clone(),
                channel_id: record.channel_id.clone(),
            });
        }
    }

    Ok(SamplePlan {
        quotas: EmotionCategory::ALL
            .into_iter()
            .map(|c| (c, quotas[c.index()]))
            .collect(),
        items,
        warnings,
    })
}
