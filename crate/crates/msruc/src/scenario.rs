//! Multistage scenario trees from bundles of fitted net-load days.
//!
//! The tree is grown stage by stage: every node's member bundle is split by
//! k-means on that hour's control-point vectors, with the per-stage node
//! budget apportioned to parents in proportion to bundle size. Each edge
//! carries the bundle centroid (continuity-repaired against its parent) and
//! the per-coefficient RMS deviation of its members, which later feeds the
//! reserve margin. Probabilities are empirical bundle frequencies, so they
//! nest along the tree by construction.

use crate::bernstein::{ControlPoly, Spline};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("k = {k} but only {points} points")]
    TooManyClusters { k: usize, points: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("no input scenarios")]
    Empty,
    #[error("scenario {index} has {got} hours / degree {got_degree}, expected {want} hours / degree {want_degree}")]
    ShapeMismatch { index: usize, got: usize, want: usize, got_degree: usize, want_degree: usize },
    #[error("stage counts must be non-decreasing with first entry >= 1, got {0:?}")]
    BadStageCounts(Vec<usize>),
    #[error("{scenarios} scenarios cannot fill a stage budget of {budget}")]
    BudgetExceedsScenarios { scenarios: usize, budget: usize },
    #[error("stage {h} out of range (horizon {horizon})")]
    StageOutOfRange { h: usize, horizon: usize },
    #[error("ancestor hop count {hops} exceeds stage {stage} of node {node}")]
    AncestorOutOfRange { node: usize, stage: usize, hops: usize },
    #[error("test spline has {got} hours / degree {got_degree}, tree has {want} / {want_degree}")]
    TestShapeMismatch { got: usize, want: usize, got_degree: usize, want_degree: usize },
    #[error("tree violates invariant: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One tree node. The root (id 0) has no parent and no incoming edge; every
/// other node describes the edge from its parent: `xi` is the centroid
/// polynomial of the bundle over that hour and `eps` the per-control-point
/// RMS deviation of the bundle members from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub stage: usize,
    pub prob: f64,
    #[serde(rename = "xi")]
    pub edge_xi: Option<ControlPoly>,
    #[serde(rename = "eps")]
    pub edge_eps: Option<Vec<f64>>,
    /// Training-scenario indices assigned to this node's bundle.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTree {
    pub nodes: Vec<TreeNode>,
    pub stage_counts: Vec<usize>,
    pub horizon: usize,
    pub degree: usize,
    pub continuity_depth: usize,
    pub scenario_count: usize,
}

/// A root-to-leaf path and its probability (the leaf's bundle frequency).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreePath {
    pub nodes: Vec<usize>,
    pub prob: f64,
}

impl TreePath {
    /// The edge-defining nodes, i.e. everything after the root.
    pub fn edge_nodes(&self) -> &[usize] {
        &self.nodes[1..]
    }
}

/// Seeded Lloyd iteration with k-means++ initialization.
///
/// Runs to a fixed point or 100 rounds. Empty clusters are repaired by
/// splitting the largest cluster at its farthest member. Deterministic for a
/// given seed: all ties break toward the lowest index.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<Vec<f64>>), ScenarioError> {
    if k == 0 {
        return Err(ScenarioError::ZeroClusters);
    }
    if k > points.len() {
        return Err(ScenarioError::TooManyClusters { k, points: points.len() });
    }
    let dim = points[0].len();
    assert!(points.iter().all(|p| p.len() == dim), "points must share a dimension");

    let mut centroids = seed_centroids(points, k, seed);
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..100 {
        let next = assign_points(points, &centroids);
        let mut counts = vec![0usize; k];
        for &a in &next {
            counts[a] += 1;
        }
        let next = repair_empty_clusters(points, next, &mut centroids, &mut counts);
        let changed = next != assign;
        assign = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            if counts[c] == 0 {
                continue;
            }
            centroid.iter_mut().for_each(|v| *v = 0.0);
            for (p, &a) in points.iter().zip(&assign) {
                if a == c {
                    for (cv, pv) in centroid.iter_mut().zip(p) {
                        *cv += pv;
                    }
                }
            }
            centroid.iter_mut().for_each(|v| *v /= counts[c] as f64);
        }
        if !changed {
            break;
        }
    }
    Ok((assign, centroids))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_centroids(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng as _;
    use rand::SeedableRng as _;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total <= 0.0 {
            // All remaining points coincide with a centroid.
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut idx = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        };
        centroids.push(points[chosen].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, centroids.last().unwrap()));
        }
    }
    centroids
}

fn assign_points(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn repair_empty_clusters(
    points: &[Vec<f64>],
    mut assign: Vec<usize>,
    centroids: &mut [Vec<f64>],
    counts: &mut [usize],
) -> Vec<usize> {
    loop {
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return assign;
        };
        let donor = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        // Farthest member of the donor becomes the empty cluster.
        let mut far = usize::MAX;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if assign[i] == donor {
                let d = sq_dist(p, &centroids[donor]);
                if d > far_d {
                    far_d = d;
                    far = i;
                }
            }
        }
        assign[far] = empty;
        centroids[empty] = points[far].clone();
        counts[empty] = 1;
        counts[donor] -= 1;
    }
}

/// splitmix64; derives independent k-means seeds per (stage, parent).
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Quota apportionment of `total` child slots over parents with the given
/// bundle sizes: every parent gets at least one slot and at most its bundle
/// size, remaining slots go to the largest shortfall against the
/// proportional share (ties toward the lower index).
fn apportion(sizes: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = sizes.iter().sum();
    debug_assert!(total >= sizes.len() && total <= sum);
    let mut out = vec![1usize; sizes.len()];
    let mut remaining = total - sizes.len();
    while remaining > 0 {
        let mut best = usize::MAX;
        let mut best_gap = f64::NEG_INFINITY;
        for (i, (&size, &got)) in sizes.iter().zip(&out).enumerate() {
            if got >= size {
                continue;
            }
            let share = total as f64 * size as f64 / sum as f64;
            let gap = share - got as f64;
            if gap > best_gap {
                best_gap = gap;
                best = i;
            }
        }
        out[best] += 1;
        remaining -= 1;
    }
    out
}

/// Reduce `L` fitted training days to a tree with the given per-stage node
/// budget. Stage-`h` bundles are split by k-means on the hour-`h` control
/// points; centroids are continuity-repaired against the parent edge up to
/// `depth` before the per-coefficient RMS error is measured.
pub fn build_tree(
    splines: &[Spline],
    stage_counts: &[usize],
    depth: usize,
    seed: u64,
) -> Result<ScenarioTree, ScenarioError> {
    if splines.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let horizon = stage_counts.len();
    let degree = splines[0].degree();
    for (i, s) in splines.iter().enumerate() {
        if s.len() != horizon || s.degree() != degree {
            return Err(ScenarioError::ShapeMismatch {
                index: i,
                got: s.len(),
                want: horizon,
                got_degree: s.degree(),
                want_degree: degree,
            });
        }
    }
    let ok_counts = !stage_counts.is_empty()
        && stage_counts[0] >= 1
        && stage_counts.windows(2).all(|w| w[0] <= w[1]);
    if !ok_counts {
        return Err(ScenarioError::BadStageCounts(stage_counts.to_vec()));
    }
    let max_budget = *stage_counts.iter().max().unwrap();
    if max_budget > splines.len() {
        return Err(ScenarioError::BudgetExceedsScenarios {
            scenarios: splines.len(),
            budget: max_budget,
        });
    }

    let total = splines.len() as f64;
    let mut nodes = vec![TreeNode {
        id: 0,
        parent: None,
        stage: 0,
        prob: 1.0,
        edge_xi: None,
        edge_eps: None,
        members: (0..splines.len()).collect(),
    }];

    let mut frontier: Vec<usize> = vec![0];
    for (h, &budget) in stage_counts.iter().enumerate() {
        let sizes: Vec<usize> = frontier.iter().map(|&p| nodes[p].members.len()).collect();
        let quotas = apportion(&sizes, budget);
        let mut next_frontier = Vec::with_capacity(budget);
        for (pi, &p) in frontier.iter().enumerate() {
            let members = nodes[p].members.clone();
            let points: Vec<Vec<f64>> = members
                .iter()
                .map(|&m| splines[m].hours[h].coeffs().to_vec())
                .collect();
            let sub_seed = mix(seed ^ mix(h as u64) ^ mix(0x5555 + pi as u64));
            let (assign, centroids) = kmeans(&points, quotas[pi], sub_seed)?;
            for (c, centroid) in centroids.into_iter().enumerate() {
                let bundle: Vec<usize> = members
                    .iter()
                    .zip(&assign)
                    .filter(|(_, &a)| a == c)
                    .map(|(&m, _)| m)
                    .collect();
                let mut xi = centroid;
                if let Some(parent_xi) = nodes[p].edge_xi.as_ref() {
                    repair_continuity(&mut xi, parent_xi.coeffs(), depth);
                }
                let eps: Vec<f64> = (0..=degree)
                    .map(|i| {
                        let ss: f64 = bundle
                            .iter()
                            .map(|&m| {
                                let d = splines[m].hours[h].coeffs()[i] - xi[i];
                                d * d
                            })
                            .sum();
                        (ss / bundle.len() as f64).sqrt()
                    })
                    .collect();
                let id = nodes.len();
                nodes.push(TreeNode {
                    id,
                    parent: Some(p),
                    stage: h + 1,
                    prob: bundle.len() as f64 / total,
                    edge_xi: Some(ControlPoly::new(xi)),
                    edge_eps: Some(eps),
                    members: bundle,
                });
                next_frontier.push(id);
            }
        }
        frontier = next_frontier;
    }

    Ok(ScenarioTree {
        nodes,
        stage_counts: stage_counts.to_vec(),
        horizon,
        degree,
        continuity_depth: depth,
        scenario_count: splines.len(),
    })
}

/// Overwrite the leading control points of `xi` so the edge joins its parent
/// with the requested number of matched endpoint conditions.
fn repair_continuity(xi: &mut [f64], parent: &[f64], depth: usize) {
    let n = parent.len() - 1;
    if depth >= 1 {
        xi[0] = parent[n];
    }
    if depth >= 2 {
        xi[1] = xi[0] + (parent[n] - parent[n - 1]);
    }
}

impl ScenarioTree {
    /// Node ids at stage `h`; stage 0 is the root alone.
    pub fn stage_nodes(&self, h: usize) -> Result<Vec<usize>, ScenarioError> {
        if h > self.horizon {
            return Err(ScenarioError::StageOutOfRange { h, horizon: self.horizon });
        }
        Ok(self.nodes.iter().filter(|n| n.stage == h).map(|n| n.id).collect())
    }

    /// `u`-fold parent: `ancestor(v, 0) = v`, `ancestor(v, 1) = parent(v)`.
    pub fn ancestor(&self, v: usize, u: usize) -> Result<usize, ScenarioError> {
        let stage = self.nodes[v].stage;
        if u > stage {
            return Err(ScenarioError::AncestorOutOfRange { node: v, stage, hops: u });
        }
        let mut cur = v;
        for _ in 0..u {
            cur = self.nodes[cur].parent.expect("non-root node has a parent");
        }
        Ok(cur)
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.parent == Some(v)).map(|n| n.id).collect()
    }

    /// Non-root nodes in id order; each one names the edge from its parent.
    pub fn edge_nodes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.parent.is_some()).map(|n| n.id).collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.stage == self.horizon).map(|n| n.id).collect()
    }

    fn path_to(&self, leaf: usize) -> TreePath {
        let mut nodes = vec![leaf];
        let mut cur = leaf;
        while let Some(p) = self.nodes[cur].parent {
            nodes.push(p);
            cur = p;
        }
        nodes.reverse();
        TreePath { nodes, prob: self.nodes[leaf].prob }
    }

    /// Greedy descent by child probability, ties toward the lower id.
    pub fn most_likely_path(&self) -> TreePath {
        let mut nodes = vec![0usize];
        let mut cur = 0usize;
        loop {
            let kids = self.children(cur);
            if kids.is_empty() {
                break;
            }
            let mut best = kids[0];
            for &k in &kids[1..] {
                if self.nodes[k].prob > self.nodes[best].prob {
                    best = k;
                }
            }
            nodes.push(best);
            cur = best;
        }
        let prob = self.nodes[cur].prob;
        TreePath { nodes, prob }
    }

    /// Exhaustive scan over root-to-leaf paths for the smallest summed
    /// squared coefficient deviation from the test day; ties toward the
    /// lower leaf id.
    pub fn nearest_path(&self, test: &Spline) -> Result<(TreePath, f64), ScenarioError> {
        if test.len() != self.horizon || test.degree() != self.degree {
            return Err(ScenarioError::TestShapeMismatch {
                got: test.len(),
                want: self.horizon,
                got_degree: test.degree(),
                want_degree: self.degree,
            });
        }
        let mut best: Option<(usize, f64)> = None;
        for leaf in self.leaves() {
            let path = self.path_to(leaf);
            let mut dist = 0.0;
            for (h, &v) in path.edge_nodes().iter().enumerate() {
                let xi = self.nodes[v].edge_xi.as_ref().expect("edge node has xi");
                dist += sq_dist(test.hours[h].coeffs(), xi.coeffs());
            }
            let better = match best {
                None => true,
                Some((_, d)) => dist < d,
            };
            if better {
                best = Some((leaf, dist));
            }
        }
        let (leaf, dist) = best.expect("tree has at least one leaf");
        Ok((self.path_to(leaf), dist))
    }

    /// Check the structural invariants; used after deserialization and in
    /// tests. Tolerance applies to probability sums.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: String| Err(ScenarioError::Invalid(m));
        if self.nodes.is_empty() || self.nodes[0].parent.is_some() {
            return fail("node 0 must be the root".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return fail(format!("node {i} stores id {}", n.id));
            }
            match n.parent {
                None if i != 0 => return fail(format!("non-root node {i} lacks a parent")),
                Some(p) => {
                    if self.nodes[p].stage + 1 != n.stage {
                        return fail(format!("node {i} skips a stage"));
                    }
                    if let (Some(xi), Some(pxi)) =
                        (n.edge_xi.as_ref(), self.nodes[p].edge_xi.as_ref())
                    {
                        let (c, pc) = (xi.coeffs(), pxi.coeffs());
                        let nn = pc.len() - 1;
                        if self.continuity_depth >= 1 && (c[0] - pc[nn]).abs() > 1e-9 {
                            return fail(format!("edge into node {i} breaks value continuity"));
                        }
                        if self.continuity_depth >= 2
                            && ((c[1] - c[0]) - (pc[nn] - pc[nn - 1])).abs() > 1e-9
                        {
                            return fail(format!("edge into node {i} breaks slope continuity"));
                        }
                    }
                    if let Some(eps) = n.edge_eps.as_ref() {
                        if eps.iter().any(|&e| e < 0.0) {
                            return fail(format!("node {i} has a negative error entry"));
                        }
                    }
                }
                None => {}
            }
        }
        for h in 0..=self.horizon {
            let ids = self.stage_nodes(h)?;
            if h == 0 && ids != vec![0] {
                return fail("stage 0 must contain exactly the root".into());
            }
            if h >= 1 && ids.len() > self.stage_counts[h - 1] {
                return fail(format!("stage {h} exceeds its budget"));
            }
            let total: f64 = ids.iter().map(|&v| self.nodes[v].prob).sum();
            if (total - 1.0).abs() > 1e-12 {
                return fail(format!("stage {h} probabilities sum to {total}"));
            }
            // Member sets partition the scenarios at every stage.
            let mut seen = vec![false; self.scenario_count];
            for &v in &ids {
                for &m in &self.nodes[v].members {
                    if seen[m] {
                        return fail(format!("scenario {m} appears twice at stage {h}"));
                    }
                    seen[m] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return fail(format!("stage {h} loses scenarios"));
            }
        }
        for n in &self.nodes {
            let kids = self.children(n.id);
            if !kids.is_empty() {
                let child_sum: f64 = kids.iter().map(|&k| self.nodes[k].prob).sum();
                if (child_sum - n.prob).abs() > 1e-12 {
                    return fail(format!("node {} prob != sum of children", n.id));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let file = std::fs::File::open(path)?;
        let tree: ScenarioTree = serde_json::from_reader(std::io::BufReader::new(file))?;
        tree.validate()?;
        Ok(tree)
    }
}
