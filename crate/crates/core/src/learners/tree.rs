//! CART regression trees with exact split enumeration.

use crate::data::Features;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    All,
    Sqrt,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub feature_subset: FeatureSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A fitted regression tree; nodes are stored in an arena with the root at
/// index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Grows a tree on the given row subset. Splits minimize the summed
    /// child SSE, enumerated over every distinct value boundary of each
    /// candidate feature; candidates are a fresh seeded draw per node when
    /// the subset mode asks for it. Ties resolve to the first candidate in
    /// (feature, boundary) order, so growth is deterministic.
    pub fn fit(
        x: &Features,
        y: &[f64],
        rows: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut builder = Builder { x, y, params, rng, nodes: Vec::new() };
        let mut rows = rows.to_vec();
        builder.grow(&mut rows, 0);
        RegressionTree { nodes: builder.nodes }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

struct Builder<'a> {
    x: &'a Features,
    y: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });

        let depth_allows = self.params.max_depth.map_or(true, |d| depth < d);
        if !depth_allows || rows.len() < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        let first = self.y[rows[0]];
        if rows.iter().all(|&r| self.y[r] == first) {
            return id;
        }

        let candidates = self.candidate_features();
        let mut best: Option<BestSplit> = None;
        for &feature in &candidates {
            self.scan_feature(rows, feature, &mut best);
        }
        let Some(split) = best else { return id };

        let (mut left_rows, mut right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x.value(r, split.feature) <= split.threshold);
        let left = self.grow(&mut left_rows, depth + 1);
        let right = self.grow(&mut right_rows, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let m = self.x.n_cols();
        match self.params.feature_subset {
            FeatureSubset::All => (0..m).collect(),
            FeatureSubset::Sqrt => {
                let k = ((m as f64).sqrt().ceil() as usize).clamp(1, m);
                let mut picked = Vec::with_capacity(k);
                // Floyd's algorithm keeps the draw order-independent
                for j in m - k..m {
                    let t = self.rng.gen_range(0..=j);
                    if picked.contains(&t) {
                        picked.push(j);
                    } else {
                        picked.push(t);
                    }
                }
                picked.sort_unstable();
                picked
            }
        }
    }

    fn scan_feature(&self, rows: &[usize], feature: usize, best: &mut Option<BestSplit>) {
        let mut vals: Vec<(f64, f64)> = rows
            .iter()
            .map(|&r| (self.x.value(r, feature), self.y[r]))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let n = vals.len();
        let min_leaf = self.params.min_leaf.max(1);

        let total_sum: f64 = vals.iter().map(|v| v.1).sum();
        let total_ssq: f64 = vals.iter().map(|v| v.1 * v.1).sum();
        let mut left_sum = 0.0;
        let mut left_ssq = 0.0;
        for i in 1..n {
            left_sum += vals[i - 1].1;
            left_ssq += vals[i - 1].1 * vals[i - 1].1;
            if vals[i - 1].0 == vals[i].0 {
                continue;
            }
            if i < min_leaf || n - i < min_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let right_ssq = total_ssq - left_ssq;
            let score = (left_ssq - left_sum * left_sum / i as f64)
                + (right_ssq - right_sum * right_sum / (n - i) as f64);
            let improves = match best {
                None => true,
                Some(b) => score < b.score,
            };
            if improves {
                let low = vals[i - 1].0;
                let high = vals[i].0;
                let mut threshold = low + (high - low) / 2.0;
                if threshold >= high {
                    threshold = low; // adjacent floats: peg to the left value
                }
                *best = Some(BestSplit { feature, threshold, score });
            }
        }
    }
}
