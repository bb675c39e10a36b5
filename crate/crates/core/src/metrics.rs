//! Classification metrics: confusion matrix, overall accuracy and mean
//! class accuracy.

use std::fmt::Write as _;

/// `counts[truth][predicted]` over a fixed class catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_indices(classes: Vec<String>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(classes);
        for (t, p) in pairs {
            m.counts[t][p] += 1;
        }
        m
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Fraction of all samples classified correctly.
    pub fn overall_accuracy(&self) -> f64 {
        let correct: usize = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        match self.total() {
            0 => 0.0,
            t => correct as f64 / t as f64,
        }
    }

    /// Recall of each class; `None` for classes with no samples.
    pub fn recalls(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }

    /// Unweighted mean of per-class recalls over classes present in the
    /// ground truth.
    pub fn mean_class_accuracy(&self) -> f64 {
        let r: Vec<f64> = self.recalls().into_iter().flatten().collect();
        if r.is_empty() {
            0.0
        } else {
            r.iter().sum::<f64>() / r.len() as f64
        }
    }

    /// Accuracy summary followed by the matrix (rows = truth).
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples: {}", self.total());
        let _ = writeln!(out, "OA: {:.2}%", 100.0 * self.overall_accuracy());
        let _ = writeln!(out, "mAcc: {:.2}%", 100.0 * self.mean_class_accuracy());
        let width = self
            .classes
            .iter()
            .map(|c| c.len())
            .chain(std::iter::once(6))
            .max()
            .unwrap_or(6);
        let _ = write!(out, "{:>width$}", "truth\\pred");
        for c in &self.classes {
            let _ = write!(out, " {c:>width$}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(out, "{c:>width$}");
            for v in row {
                let _ = write!(out, " {v:>width$}");
            }
            out.push('\n');
        }
        out
    }
}
