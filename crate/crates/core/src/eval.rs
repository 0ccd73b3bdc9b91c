//! Leave-one-out 1-NN and nearest-class-center evaluation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KshsError, Result};
use crate::frechet::{frechet_mean, FrechetConfig};
use crate::metric::{nuclear_distance, pairwise_distances, DistanceMatrix};
use crate::subspace::KernelSubspace;

/// Descriptors with ids and class labels. Classes are kept in sorted order.
#[derive(Debug, Clone)]
pub struct LabeledDescriptorSet {
    ids: Vec<String>,
    descriptors: Vec<KernelSubspace>,
    labels: Vec<String>,
    classes: Vec<String>,
    class_index: BTreeMap<String, Vec<usize>>,
}

impl LabeledDescriptorSet {
    pub fn new(ids: Vec<String>, descriptors: Vec<KernelSubspace>, labels: Vec<String>) -> Result<Self> {
        if ids.len() != descriptors.len() || labels.len() != descriptors.len() {
            return Err(KshsError::Dimension(format!(
                "{} ids, {} descriptors, {} labels",
                ids.len(),
                descriptors.len(),
                labels.len()
            )));
        }
        if let Some(first) = descriptors.first() {
            for d in &descriptors[1..] {
                first.check_compatible(d)?;
            }
        }
        let mut class_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            class_index.entry(label.clone()).or_default().push(i);
        }
        Ok(Self {
            ids,
            descriptors,
            labels,
            classes: class_index.keys().cloned().collect(),
            class_index,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn descriptors(&self) -> &[KernelSubspace] {
        &self.descriptors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_members(&self, label: &str) -> Option<&[usize]> {
        self.class_index.get(label).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    fn class_position(&self, label: &str) -> usize {
        self.classes.iter().position(|c| c == label).expect("label belongs to the set")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    #[serde(rename = "1nn")]
    OneNn,
    #[serde(rename = "ncc")]
    Ncc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub accuracy: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    pub classes: Vec<String>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    pub predictions: Vec<Prediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frechet: Option<FrechetConfig>,
}

impl EvalReport {
    fn from_predictions(
        set: &LabeledDescriptorSet,
        mode: EvalMode,
        predicted: &[usize],
        frechet: Option<FrechetConfig>,
    ) -> Self {
        let k = set.classes.len();
        let mut confusion = vec![vec![0u64; k]; k];
        let mut predictions = Vec::with_capacity(set.len());
        for (i, &p) in predicted.iter().enumerate() {
            confusion[set.class_position(&set.labels[i])][p] += 1;
            predictions.push(Prediction {
                id: set.ids[i].clone(),
                label: set.labels[i].clone(),
                predicted: set.classes[p].clone(),
            });
        }
        let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
        let total: u64 = confusion.iter().flatten().sum();
        let per_class_accuracy = set
            .classes
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let row: u64 = confusion[c].iter().sum();
                (name.clone(), confusion[c][c] as f64 / row as f64)
            })
            .collect();
        Self {
            mode,
            accuracy: correct as f64 / total as f64,
            per_class_accuracy,
            classes: set.classes.clone(),
            confusion,
            predictions,
            frechet,
        }
    }

    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "mode: {}\naccuracy: {:.4}\n",
            match self.mode {
                EvalMode::OneNn => "1nn",
                EvalMode::Ncc => "ncc",
            },
            self.accuracy
        );
        let width = self.classes.iter().map(String::len).max().unwrap_or(5).max(5);
        out.push_str(&format!("{:<width$}  {:>8}", "class", "accuracy"));
        for c in &self.classes {
            out.push_str(&format!("  {c:>width$}"));
        }
        out.push('\n');
        for (row, c) in self.confusion.iter().zip(&self.classes) {
            out.push_str(&format!("{c:<width$}  {:>8.4}", self.per_class_accuracy[c]));
            for v in row {
                out.push_str(&format!("  {v:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Leave-one-out 1-NN on a precomputed distance matrix; ties go to the
/// lower index.
pub fn one_nn_from_distances(set: &LabeledDescriptorSet, distances: &DistanceMatrix) -> Result<EvalReport> {
    if set.len() < 2 {
        return Err(KshsError::SingletonSet);
    }
    if distances.len() != set.len() {
        return Err(KshsError::Dimension("distance matrix does not match the set".into()));
    }
    let predicted: Vec<usize> = (0..set.len())
        .map(|i| {
            let nearest = (0..set.len())
                .filter(|&j| j != i)
                .fold((usize::MAX, f64::INFINITY), |best, j| {
                    let d = distances.get(i, j);
                    if d < best.1 {
                        (j, d)
                    } else {
                        best
                    }
                })
                .0;
            set.class_position(&set.labels[nearest])
        })
        .collect();
    Ok(EvalReport::from_predictions(set, EvalMode::OneNn, &predicted, None))
}

/// Leave-one-out 1-NN under the Nuclear distance.
pub fn one_nn_loo(set: &LabeledDescriptorSet) -> Result<EvalReport> {
    if set.len() < 2 {
        return Err(KshsError::SingletonSet);
    }
    let distances = pairwise_distances(&set.descriptors)?;
    one_nn_from_distances(set, &distances)
}

/// Member indices that form each class mean (in class order) when
/// `held_out` is the test item.
pub fn ncc_memberships(set: &LabeledDescriptorSet, held_out: usize) -> Vec<Vec<usize>> {
    set.classes
        .iter()
        .map(|c| {
            set.class_index[c]
                .iter()
                .copied()
                .filter(|&i| i != held_out)
                .collect()
        })
        .collect()
}

fn class_mean(set: &LabeledDescriptorSet, members: &[usize], config: &FrechetConfig) -> Result<KernelSubspace> {
    let group: Vec<KernelSubspace> = members.iter().map(|&i| set.descriptors[i].clone()).collect();
    Ok(frechet_mean(&group, config)?.mean)
}

/// Leave-one-out nearest-class-center classification with Fréchet means.
///
/// Only the held-out item's own class mean is recomputed; means of other
/// classes never contain the held-out item and are shared.
pub fn ncc_loo(set: &LabeledDescriptorSet, config: &FrechetConfig) -> Result<EvalReport> {
    if set.is_empty() {
        return Err(KshsError::SingletonSet);
    }
    for (label, members) in &set.class_index {
        if members.len() < 2 {
            return Err(KshsError::SingletonClass(label.clone()));
        }
    }
    let full_means = set
        .classes
        .par_iter()
        .map(|c| class_mean(set, &set.class_index[c], config))
        .collect::<Result<Vec<_>>>()?;

    let predicted = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let own = set.class_position(&set.labels[i]);
            let memberships = ncc_memberships(set, i);
            let own_mean = class_mean(set, &memberships[own], config)?;
            let mut best = (0usize, f64::INFINITY);
            for (c, full) in full_means.iter().enumerate() {
                let mean = if c == own { &own_mean } else { full };
                let d = nuclear_distance(&set.descriptors[i], mean)?;
                if d < best.1 {
                    best = (c, d);
                }
            }
            Ok(best.0)
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(EvalReport::from_predictions(set, EvalMode::Ncc, &predicted, Some(*config)))
}
