// SPDX-License-Identifier: Apache-2.0

//! Random-forest binary classifier: bootstrap samples, CART trees grown to
//! purity on Gini impurity, and a majority vote whose ties go to class 0.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::{fmt_exact, ModelReader, ModelWriter};
use crate::seed::stream_seed;
use crate::{check_rows, LearnError};

#[derive(Clone, Debug, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` uses `round(sqrt(dim))`.
    pub mtry: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            mtry: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        counts: [u64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Bootstrap samples that reached this node.
        samples: u64,
    },
}

fn majority(counts: [u64; 2]) -> u8 {
    u8::from(counts[1] > counts[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    /// Root first.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(counts: [u64; 2]) -> Self {
        Tree {
            nodes: vec![Node::Leaf { counts }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { counts } => return majority(counts),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Samples at each split node, summed per feature.
    pub fn importance(&self, dim: usize) -> Vec<f64> {
        let mut imp = vec![0.0; dim];
        for n in &self.nodes {
            if let Node::Split {
                feature, samples, ..
            } = *n
            {
                imp[feature] += samples as f64;
            }
        }
        imp
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    dim: usize,
    mtry: usize,
    min_samples_split: usize,
    trees: Vec<Tree>,
    tree_seeds: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ForestFit {
    /// Out-of-bag accuracy over rows left out of at least one bootstrap.
    pub oob_accuracy: Option<f64>,
    pub single_class: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Importance {
    pub per_tree: Vec<Vec<f64>>,
    pub total: Vec<f64>,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    mtry: usize,
    min_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn gini(c: [u64; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c[0] as f64 / n, c[1] as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &i in idx {
            c[self.y[i] as usize] += 1;
        }
        c
    }

    /// Best `(impurity, feature, threshold)` over up to `mtry` non-constant
    /// features drawn in random order.
    fn best_split(&mut self, idx: &[usize], total: [u64; 2]) -> Option<(f64, usize, f64)> {
        let dim = self.x[0].len();
        let mut features: Vec<usize> = (0..dim).collect();
        features.shuffle(&mut self.rng);
        let n = idx.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut tried = 0;
        let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(idx.len());
        for f in features {
            if tried == self.mtry {
                break;
            }
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                continue;
            }
            tried += 1;
            let mut left = [0u64; 2];
            for k in 0..pairs.len() - 1 {
                left[pairs[k].1 as usize] += 1;
                let (v, next) = (pairs[k].0, pairs[k + 1].0);
                if v == next {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let nl = (k + 1) as f64;
                let score = (nl * gini(left) + (n - nl) * gini(right)) / n;
                if best.is_none_or(|b| score < b.0) {
                    let mid = v + (next - v) / 2.0;
                    let threshold = if mid < next { mid } else { v };
                    best = Some((score, f, threshold));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize]) -> usize {
        let at = self.nodes.len();
        let counts = self.counts(idx);
        self.nodes.push(Node::Leaf { counts });
        if counts[0] == 0 || counts[1] == 0 || idx.len() < self.min_split {
            return at;
        }
        let Some((_, feature, threshold)) = self.best_split(idx, counts) else {
            return at;
        };
        let x = self.x;
        idx.sort_by_key(|&i| x[i][feature] > threshold);
        let cut = idx.partition_point(|&i| x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
            samples: counts[0] + counts[1],
        };
        at
    }
}

impl RandomForest {
    pub fn from_trees(dim: usize, trees: Vec<Tree>) -> Self {
        RandomForest {
            dim,
            mtry: dim,
            min_samples_split: 2,
            tree_seeds: vec![0; trees.len()],
            trees,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn tree_seeds(&self) -> &[u64] {
        &self.tree_seeds
    }

    pub fn train(
        x: &[Vec<f64>],
        y: &[u8],
        config: &ForestConfig,
        seed: u64,
    ) -> Result<(RandomForest, ForestFit), LearnError> {
        let dim = x.first().map_or(0, Vec::len);
        check_rows(x, dim)?;
        if x.len() != y.len() {
            return Err(LearnError::Length {
                rows: x.len(),
                targets: y.len(),
            });
        }
        let y: Vec<u8> = y.iter().map(|&c| u8::from(c != 0)).collect();
        let single_class = y.iter().all(|&c| c == y[0]);
        if single_class {
            log::warn!(
                "meta training data has a single class ({}); forest is constant",
                y[0]
            );
        }
        let mtry = config
            .mtry
            .unwrap_or_else(|| (dim as f64).sqrt().round() as usize)
            .clamp(1, dim.max(1));
        let n = x.len();
        let mut forest = RandomForest {
            dim,
            mtry,
            min_samples_split: config.min_samples_split,
            trees: Vec::with_capacity(config.n_trees),
            tree_seeds: Vec::with_capacity(config.n_trees),
        };
        let mut oob_votes = vec![[0u32; 2]; n];
        for t in 0..config.n_trees {
            let tree_seed = stream_seed(seed, &format!("forest.tree{t}"));
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut in_bag = vec![false; n];
            for &i in &idx {
                in_bag[i] = true;
            }
            let mut g = Grower {
                x,
                y: &y,
                mtry,
                min_split: config.min_samples_split,
                rng,
                nodes: Vec::new(),
            };
            g.grow(&mut idx);
            let tree = Tree { nodes: g.nodes };
            for i in (0..n).filter(|&i| !in_bag[i]) {
                oob_votes[i][tree.predict(&x[i]) as usize] += 1;
            }
            forest.trees.push(tree);
            forest.tree_seeds.push(tree_seed);
        }
        let scored: Vec<(usize, &[u32; 2])> = oob_votes
            .iter()
            .enumerate()
            .filter(|(_, v)| v[0] + v[1] > 0)
            .collect();
        let oob_accuracy = (!scored.is_empty()).then(|| {
            let right = scored
                .iter()
                .filter(|(i, v)| u8::from(v[1] > v[0]) == y[*i])
                .count();
            right as f64 / scored.len() as f64
        });
        Ok((
            forest,
            ForestFit {
                oob_accuracy,
                single_class,
            },
        ))
    }

    /// Class votes `[class 0, class 1]`.
    pub fn votes(&self, x: &[f64]) -> Result<[usize; 2], LearnError> {
        if x.len() != self.dim {
            return Err(LearnError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut v = [0; 2];
        for t in &self.trees {
            v[t.predict(x) as usize] += 1;
        }
        Ok(v)
    }

    /// Majority vote; ties go to class 0.
    pub fn predict(&self, x: &[f64]) -> Result<u8, LearnError> {
        let v = self.votes(x)?;
        Ok(u8::from(v[1] > v[0]))
    }

    pub fn feature_importance(&self) -> Importance {
        let per_tree: Vec<Vec<f64>> = self.trees.iter().map(|t| t.importance(self.dim)).collect();
        let mut total = vec![0.0; self.dim];
        for t in &per_tree {
            for (a, b) in total.iter_mut().zip(t) {
                *a += b;
            }
        }
        Importance { per_tree, total }
    }

    pub fn to_text(&self) -> String {
        let mut w = ModelWriter::new("forest");
        w.field(
            "dims",
            &[self.dim.to_string(), self.trees.len().to_string()],
        );
        w.field("mtry", &[self.mtry.to_string()]);
        w.field("min_samples_split", &[self.min_samples_split.to_string()]);
        for (tree, seed) in self.trees.iter().zip(&self.tree_seeds) {
            w.field("tree", &[seed.to_string(), tree.nodes.len().to_string()]);
            for n in &tree.nodes {
                match *n {
                    Node::Leaf { counts } => {
                        w.field("leaf", &[counts[0].to_string(), counts[1].to_string()])
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        samples,
                    } => w.field(
                        "split",
                        &[
                            feature.to_string(),
                            fmt_exact(threshold),
                            left.to_string(),
                            right.to_string(),
                            samples.to_string(),
                        ],
                    ),
                }
            }
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let mut r = ModelReader::new(text, "forest")?;
        let dims = r.field_usizes("dims")?;
        let [dim, n_trees] = dims[..] else {
            return Err(r.error("`dims` takes two values"));
        };
        let mtry = r.field_one("mtry")?;
        let min_samples_split = r.field_one("min_samples_split")?;
        let mut trees = Vec::with_capacity(n_trees);
        let mut tree_seeds = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let head = r.field("tree")?;
            let [seed, count] = head[..] else {
                return Err(r.error("`tree` takes a seed and a node count"));
            };
            tree_seeds.push(r.parse(seed)?);
            let count: usize = r.parse(count)?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let t = r.next_line()?;
                let node = match t[..] {
                    ["leaf", c0, c1] => Node::Leaf {
                        counts: [r.parse(c0)?, r.parse(c1)?],
                    },
                    ["split", f, th, l, rt, s] => {
                        let feature: usize = r.parse(f)?;
                        let (left, right): (usize, usize) = (r.parse(l)?, r.parse(rt)?);
                        if feature >= dim || left >= count || right >= count {
                            return Err(r.error("split refers outside the tree"));
                        }
                        Node::Split {
                            feature,
                            threshold: r.parse(th)?,
                            left,
                            right,
                            samples: r.parse(s)?,
                        }
                    }
                    _ => return Err(r.error("expected `leaf` or `split`")),
                };
                nodes.push(node);
            }
            trees.push(Tree { nodes });
        }
        r.finish()?;
        Ok(RandomForest {
            dim,
            mtry,
            min_samples_split,
            trees,
            tree_seeds,
        })
    }
}
