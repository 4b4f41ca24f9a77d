use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of `(gold, predicted)` pairs; rows are gold classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> usize {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// Row-normalized percentages; rows without support are all zero.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if s == 0 { 0.0 } else { 100.0 * c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }

    /// CSV with a `gold\pred` header row and one line per gold class.
    pub fn to_csv(&self, class_names: &[&str]) -> String {
        let rows: Vec<Vec<String>> = self.counts.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
        grid_csv(&rows, class_names)
    }

    /// Same layout as [`to_csv`](Self::to_csv) with row percentages.
    pub fn to_percent_csv(&self, class_names: &[&str]) -> String {
        let rows: Vec<Vec<String>> = self
            .row_percentages()
            .iter()
            .map(|r| r.iter().map(|p| format!("{p:.2}")).collect())
            .collect();
        grid_csv(&rows, class_names)
    }
}

fn grid_csv(rows: &[Vec<String>], class_names: &[&str]) -> String {
    let name = |i: usize| class_names.get(i).map(|s| s.to_string()).unwrap_or_else(|| i.to_string());
    let mut out = String::from("gold\\pred");
    for j in 0..rows.len() {
        out.push(',');
        out.push_str(&name(j));
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&name(i));
        for c in row {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Summary {
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassScores>,
}

fn check_labels(gold: &[usize], pred: &[usize], n_classes: usize) -> Result<()> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument("no labels to evaluate".into()));
    }
    if gold.len() != pred.len() {
        return Err(Error::shape("label sequences", gold.len(), pred.len()));
    }
    if let Some(bad) = gold.iter().chain(pred).find(|&&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} not below {n_classes} classes")));
    }
    Ok(())
}

pub fn confusion(gold: &[usize], pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    check_labels(gold, pred, n_classes)?;
    let mut counts = vec![vec![0; n_classes]; n_classes];
    for (&g, &p) in gold.iter().zip(pred) {
        counts[g][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Per-class precision/recall/F1 plus macro and support-weighted averages.
/// A class with `P + R = 0` scores F1 = 0.
pub fn f1_scores(gold: &[usize], pred: &[usize], n_classes: usize) -> Result<F1Summary> {
    let cm = confusion(gold, pred, n_classes)?;
    Ok(f1_from_confusion(&cm))
}

pub fn f1_from_confusion(cm: &ConfusionMatrix) -> F1Summary {
    let n = cm.n_classes();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per_class: Vec<ClassScores> = (0..n)
        .map(|c| {
            let tp = cm.counts[c][c];
            let precision = ratio(tp, cm.predicted(c));
            let recall = ratio(tp, cm.support(c));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                precision,
                recall,
                f1,
                support: cm.support(c),
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64;
    let total = cm.total() as f64;
    let weighted_f1 = per_class.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total;
    F1Summary {
        macro_f1,
        weighted_f1,
        per_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let g = [0, 1, 1, 2, 3];
        let s = f1_scores(&g, &g, 4).unwrap();
        assert_eq!(s.macro_f1, 1.0);
        assert_eq!(s.weighted_f1, 1.0);
        let cm = confusion(&g, &g, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(cm.counts[i][j] > 0, i == j && g.contains(&i));
            }
        }
    }

    #[test]
    fn hand_evaluated_binary_case() {
        let s = f1_scores(&[1, 1, 0, 0], &[1, 0, 0, 0], 2).unwrap();
        assert!((s.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.per_class[0].f1 - 0.8).abs() < 1e-15);
        assert!((s.macro_f1 - 11.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn direct_tally() {
        let cm = confusion(&[0, 0, 1], &[1, 0, 1], 2).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(cm.row_percentages()[0], vec![50.0, 50.0]);
        assert_eq!(cm.to_csv(&["No", "Yes"]), "gold\\pred,No,Yes\nNo,1,1\nYes,0,1\n");
        assert_eq!(cm.to_percent_csv(&["No", "Yes"]), "gold\\pred,No,Yes\nNo,50.00,50.00\nYes,0.00,100.00\n");
    }

    #[test]
    fn errors() {
        assert!(f1_scores(&[], &[], 2).is_err());
        assert!(f1_scores(&[0], &[0, 1], 2).is_err());
        assert!(confusion(&[2], &[0], 2).is_err());
    }
}
