use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART regression tree stored as an arena; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

impl TreeModel {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            TreeNode::Leaf { value, samples } => Some((value, samples)),
            TreeNode::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// number of sorted rows going left
    left_len: usize,
    cost: f64,
}

struct Builder<'a> {
    ds: &'a Dataset,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let mean = rows.iter().map(|&r| self.ds.targets[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(TreeNode::Leaf {
            value: mean,
            samples: rows.len(),
        });
        self.nodes.len() - 1
    }

    /// Minimum of `SSE(left) + SSE(right)` over all midpoints between
    /// consecutive distinct values; ties keep the lowest feature, then the
    /// lowest threshold.
    fn best_split(&self, rows: &[usize], parent_sse: f64, mean: f64) -> Option<Candidate> {
        let n = rows.len();
        let x = &self.ds.features;
        let y = &self.ds.targets;
        let mut best: Option<Candidate> = None;
        let mut order = rows.to_vec();
        for feature in 0..x.ncols() {
            order.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]).then(a.cmp(&b)));
            let total: f64 = order.iter().map(|&r| y[r] - mean).sum();
            let mut sum_l = 0.0;
            let mut sq_l = 0.0;
            let total_sq: f64 = order.iter().map(|&r| (y[r] - mean).powi(2)).sum();
            for k in 1..n {
                let v = y[order[k - 1]] - mean;
                sum_l += v;
                sq_l += v * v;
                if k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let lo = x[[order[k - 1], feature]];
                let hi = x[[order[k], feature]];
                if lo == hi {
                    continue;
                }
                let sum_r = total - sum_l;
                let sq_r = total_sq - sq_l;
                let cost = (sq_l - sum_l * sum_l / k as f64) + (sq_r - sum_r * sum_r / (n - k) as f64);
                let tol = 1e-12 * parent_sse.max(f64::MIN_POSITIVE);
                if best.is_none_or(|b| cost < b.cost - tol) {
                    best = Some(Candidate {
                        feature,
                        threshold: 0.5 * (lo + hi),
                        left_len: k,
                        cost,
                    });
                }
            }
        }
        best.filter(|b| b.cost < parent_sse - 1e-12 * parent_sse)
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let y = &self.ds.targets;
        let n = rows.len();
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
        let pure = rows.iter().all(|&r| y[r] == y[rows[0]]);
        if pure || depth >= self.max_depth || n < 2 * self.min_leaf {
            return self.leaf(rows);
        }
        let parent_sse: f64 = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum();
        let Some(split) = self.best_split(rows, parent_sse, mean) else {
            return self.leaf(rows);
        };

        let f = split.feature;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.ds.features[[r, f]] <= split.threshold);
        debug_assert_eq!(left_rows.len(), split.left_len);

        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: mean,
            samples: n,
        });
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature: f,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Greedy CART regression tree. `max_depth = 0` is a single leaf.
pub fn fit_tree(ds: &Dataset, max_depth: usize, min_leaf: usize) -> TreeModel {
    let mut builder = Builder {
        ds,
        max_depth,
        min_leaf: min_leaf.max(1),
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    builder.grow(&rows, 0);
    TreeModel {
        n_features: ds.n_features(),
        nodes: builder.nodes,
    }
}
