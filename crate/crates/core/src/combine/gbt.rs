//! Second-order regression trees for gradient boosting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// L2 penalty on leaf values.
    pub reg_lambda: f64,
    pub min_child_hessian: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 3,
            reg_lambda: 1.0,
            min_child_hessian: 1e-6,
        }
    }
}

/// Nodes in pre-order; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn constant(v: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf(v)],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf(v) = n {
                *v *= factor;
            }
        }
    }

    /// Exact greedy fit to gradient/hessian statistics.
    pub fn fit(x: &[Vec<f64>], grad: &[f64], hess: &[f64], params: TreeParams) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        let idx: Vec<usize> = (0..x.len()).collect();
        tree.grow(x, grad, hess, &idx, 0, params);
        tree
    }

    fn grow(&mut self, x: &[Vec<f64>], g: &[f64], h: &[f64], idx: &[usize], depth: usize, p: TreeParams) -> usize {
        let me = self.nodes.len();
        let gs: f64 = idx.iter().map(|&i| g[i]).sum();
        let hs: f64 = idx.iter().map(|&i| h[i]).sum();
        self.nodes.push(Node::Leaf(-gs / (hs + p.reg_lambda)));
        if depth >= p.max_depth || idx.len() < 2 {
            return me;
        }
        let parent = gs * gs / (hs + p.reg_lambda);
        let n_features = x.first().map_or(0, Vec::len);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..n_features {
            order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in 0..order.len() - 1 {
                let i = order[w];
                gl += g[i];
                hl += h[i];
                let (lo, hi) = (x[i][f], x[order[w + 1]][f]);
                if lo == hi {
                    continue;
                }
                let (gr, hr) = (gs - gl, hs - hl);
                if hl < p.min_child_hessian || hr < p.min_child_hessian {
                    continue;
                }
                let gain = gl * gl / (hl + p.reg_lambda) + gr * gr / (hr + p.reg_lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        if let Some((_, feature, threshold)) = best {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
            let left = self.grow(x, g, h, &l, depth + 1, p);
            let right = self.grow(x, g, h, &r, depth + 1, p);
            self.nodes[me] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        me
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    /// One line per node: `L value` or `S feature threshold left right`.
    pub fn dump(&self) -> String {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf(v) => format!("L {v}"),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => format!("S {feature} {threshold} {left} {right}"),
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_informative_feature() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 3) as f64, i as f64]).collect();
        let g: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 } else { 1.0 }).collect();
        let h = vec![1.0; 20];
        let t = Tree::fit(&x, &g, &h, TreeParams::default());
        assert!(matches!(t.nodes[0], Node::Split { feature: 1, .. }));
        assert!(t.predict(&[0.0, 2.0]) > 0.0);
        assert!(t.predict(&[0.0, 15.0]) < 0.0);
        assert!(t.depth() <= 3);
    }

    #[test]
    fn zero_gradient_is_zero_leaf() {
        let x = vec![vec![1.0], vec![2.0]];
        let t = Tree::fit(&x, &[0.0, 0.0], &[1.0, 1.0], TreeParams::default());
        assert_eq!(t, Tree::constant(0.0));
    }
}
