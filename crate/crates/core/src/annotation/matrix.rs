use serde::{Deserialize, Serialize};

use crate::emotion::AnnotationChoice;
use crate::error::{Error, Result};

/// Complete items x raters grid of annotation choices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelMatrix {
    item_ids: Vec<String>,
    raters: Vec<String>,
    /// Row-major: `cells[item][rater]`.
    cells: Vec<Vec<AnnotationChoice>>,
}

impl LabelMatrix {
    pub fn new(
        item_ids: Vec<String>,
        raters: Vec<String>,
        cells: Vec<Vec<AnnotationChoice>>,
    ) -> Result<Self> {
        if raters.len() < 2 {
            return Err(Error::Invalid(format!(
                "label matrix needs at least 2 raters, got {}",
                raters.len()
            )));
        }
        if item_ids.is_empty() {
            return Err(Error::Invalid("label matrix has no items".into()));
        }
        if cells.len() != item_ids.len() {
            return Err(Error::Invalid(format!(
                "{} rows for {} items",
                cells.len(),
                item_ids.len()
            )));
        }
        if let Some((i, row)) = cells.iter().enumerate().find(|(_, r)| r.len() != raters.len()) {
            return Err(Error::Invalid(format!(
                "item `{}` has {} labels for {} raters",
                item_ids[i],
                row.len(),
                raters.len()
            )));
        }
        Ok(LabelMatrix {
            item_ids,
            raters,
            cells,
        })
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn rows(&self) -> &[Vec<AnnotationChoice>] {
        &self.cells
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_raters(&self) -> usize {
        self.raters.len()
    }

    pub fn column(&self, rater: usize) -> impl Iterator<Item = AnnotationChoice> + '_ {
        self.cells.iter().map(move |row| row[rater])
    }
}

impl<'de> Deserialize<'de> for LabelMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        LabelExport::deserialize(deserializer)?
            .into_matrix()
            .map_err(serde::de::Error::custom)
    }
}

/// Label grid as exported by the annotation service; cells may be missing
/// while a round is in progress.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelExport {
    pub item_ids: Vec<String>,
    pub raters: Vec<String>,
    pub cells: Vec<Vec<Option<AnnotationChoice>>>,
}

impl LabelExport {
    pub fn is_complete(&self) -> bool {
        self.cells.iter().flatten().all(Option::is_some)
    }

    /// Converts to a [`LabelMatrix`], rejecting incomplete grids.
    pub fn into_matrix(self) -> Result<LabelMatrix> {
        let mut cells = Vec::with_capacity(self.cells.len());
        for (i, row) in self.cells.into_iter().enumerate() {
            let row: Option<Vec<_>> = row.into_iter().collect();
            match row {
                Some(r) => cells.push(r),
                None => {
                    let item = self.item_ids.get(i).map(String::as_str).unwrap_or("?");
                    return Err(Error::Invalid(format!(
                        "item `{item}` is missing labels; incomplete grids are not accepted"
                    )));
                }
            }
        }
        LabelMatrix::new(self.item_ids, self.raters, cells)
    }
}

impl From<&LabelMatrix> for LabelExport {
    fn from(m: &LabelMatrix) -> Self {
        LabelExport {
            item_ids: m.item_ids.clone(),
            raters: m.raters.clone(),
            cells: m
                .cells
                .iter()
                .map(|row| row.iter().copied().map(Some).collect())
                .collect(),
        }
    }
}
