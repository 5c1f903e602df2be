//! Exact kd-tree over the rows of a [`SampleSet`].
//!
//! Nodes split at the median of the widest coordinate; leaves hold at most
//! [`LEAF_SIZE`] points. Queries are exact: a subtree is skipped only when the
//! distance from the query to its splitting plane proves it cannot contain a
//! closer point.

use crate::types::{squared_distance, SampleSet};

pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    sample: &'a SampleSet,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn build(sample: &'a SampleSet) -> Self {
        let mut tree = KdTree {
            sample,
            order: (0..sample.n()).collect(),
            nodes: Vec::with_capacity(2 * sample.n() / LEAF_SIZE + 1),
        };
        tree.build_node(0, sample.n());
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let sample = self.sample;
        let (axis, spread) = widest_axis(sample, &self.order[start..end]);
        if spread == 0.0 {
            // All points coincide: nothing to split on.
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &mut self.order[start..end];
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            sample.point(a)[axis].total_cmp(&sample.point(b)[axis])
        });
        let value = sample.point(slice[mid])[axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Squared distance from row `query` to its nearest other row, or
    /// `f64::INFINITY` when the sample has a single row.
    pub fn nearest_excluding(&self, query: usize) -> f64 {
        let q = self.sample.point(query);
        let mut best = f64::INFINITY;
        self.search(0, q, query, &mut best);
        best
    }

    fn search(&self, node: usize, q: &[f64], skip: usize, best: &mut f64) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j == skip {
                        continue;
                    }
                    let d2 = squared_distance(q, self.sample.point(j));
                    if d2 < *best {
                        *best = d2;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, best);
                if diff * diff < *best {
                    self.search(far, q, skip, best);
                }
            }
        }
    }

    /// Calls `visit(j)` for every row `j != query` whose squared distance to
    /// row `query` is at most `radius2`.
    pub fn for_each_within(&self, query: usize, radius2: f64, mut visit: impl FnMut(usize)) {
        let q = self.sample.point(query);
        self.within(0, q, query, radius2, &mut visit);
    }

    fn within(&self, node: usize, q: &[f64], skip: usize, r2: f64, visit: &mut impl FnMut(usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j != skip && squared_distance(q, self.sample.point(j)) <= r2 {
                        visit(j);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.within(near, q, skip, r2, visit);
                if diff * diff <= r2 {
                    self.within(far, q, skip, r2, visit);
                }
            }
        }
    }
}

fn widest_spread(sample: &SampleSet, idx: &[usize], axis: usize) -> f64 {
    let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        let v = sample.point(i)[axis];
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

fn widest_axis(sample: &SampleSet, idx: &[usize]) -> (usize, f64) {
    (0..sample.dim())
        .map(|axis| (axis, widest_spread(sample, idx, axis)))
        .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
}
