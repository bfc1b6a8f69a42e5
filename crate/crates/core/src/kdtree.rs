//! Exact nearest-neighbor search over static point sets.
//!
//! Distance ties resolve to the lower insertion index, so results match a
//! linear scan that keeps the first minimum.

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

/// Neighbor as `(insertion index, euclidean distance)`.
pub type Neighbor = (usize, f64);

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl<const D: usize> KdTree<D> {
    pub fn new(points: &[[f64; D]]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build(points, &mut order, 0, &mut nodes);
        }
        KdTree { points: order.iter().map(|&i| points[i]).collect(), ids: order, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, q: &[f64; D]) -> Option<Neighbor> {
        if self.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_in(0, q, &mut best);
        Some((best.1, best.0.sqrt()))
    }

    fn nearest_in(&self, node: usize, q: &[f64; D], best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    let cand = (dist2(&self.points[i], q), self.ids[i]);
                    if better(cand, *best) {
                        *best = cand;
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.0 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// Up to `k` neighbors sorted by distance, then insertion index.
    pub fn k_nearest(&self, q: &[f64; D], k: usize) -> Vec<Neighbor> {
        let mut heap: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k > 0 && !self.is_empty() {
            self.k_nearest_in(0, q, k, &mut heap);
        }
        heap.into_iter().map(|(d2, id)| (id, d2.sqrt())).collect()
    }

    fn k_nearest_in(&self, node: usize, q: &[f64; D], k: usize, found: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    let cand = (dist2(&self.points[i], q), self.ids[i]);
                    if found.len() == k && !better(cand, found[k - 1]) {
                        continue;
                    }
                    let pos = found.partition_point(|e| better(*e, cand));
                    found.insert(pos, cand);
                    found.truncate(k);
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.k_nearest_in(near, q, k, found);
                if found.len() < k || diff * diff <= found[k - 1].0 {
                    self.k_nearest_in(far, q, k, found);
                }
            }
        }
    }
}

fn build<const D: usize>(
    points: &[[f64; D]],
    order: &mut [usize],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { start: offset, end: offset + order.len() });
        return id;
    }
    // split on the widest extent
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    for &i in order.iter() {
        for d in 0..D {
            lo[d] = lo[d].min(points[i][d]);
            hi[d] = hi[d].max(points[i][d]);
        }
    }
    let dim = (0..D)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[dim] - lo[dim] == 0.0 {
        nodes.push(Node::Leaf { start: offset, end: offset + order.len() });
        return id;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][dim].total_cmp(&points[b][dim]));
    let value = points[order[mid]][dim];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (l, r) = order.split_at_mut(mid);
    let left = build(points, l, offset, nodes);
    let right = build(points, r, offset + mid, nodes);
    nodes[id] = Node::Split { dim, value, left, right };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scan<const D: usize>(points: &[[f64; D]], q: &[f64; D], k: usize) -> Vec<Neighbor> {
        let mut all: Vec<(f64, usize)> =
            points.iter().enumerate().map(|(i, p)| (dist2(p, q), i)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    #[test]
    fn empty_tree() {
        let t = KdTree::<3>::new(&[]);
        assert!(t.nearest(&[0.0; 3]).is_none());
        assert!(t.k_nearest(&[0.0; 3], 3).is_empty());
    }

    #[test]
    fn single_point() {
        let t = KdTree::new(&[[1.0, 2.0, 3.0]]);
        assert_eq!(t.nearest(&[9.0, 9.0, 9.0]).unwrap().0, 0);
    }

    #[test]
    fn duplicates_resolve_to_first_index() {
        let pts = vec![[1.0, 1.0]; 40];
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest(&[1.0, 1.0]).unwrap(), (0, 0.0));
        let k: Vec<usize> = t.k_nearest(&[0.0, 0.0], 5).iter().map(|n| n.0).collect();
        assert_eq!(k, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn grid_ties_match_scan() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push([i as f64, j as f64]);
            }
        }
        let t = KdTree::new(&pts);
        for q in [[3.5, 4.5], [0.0, 0.0], [10.5, 10.0], [-1.0, 19.5]] {
            assert_eq!(t.k_nearest(&q, 7), scan(&pts, &q, 7));
            assert_eq!(t.nearest(&q).unwrap(), scan(&pts, &q, 1)[0]);
        }
    }

    #[test]
    fn random_queries_match_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<[f64; 3]> =
            (0..3000).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let t = KdTree::new(&pts);
        for _ in 0..200 {
            let q = [rng.random::<f64>() * 1.2 - 0.1, rng.random(), rng.random()];
            assert_eq!(t.k_nearest(&q, 10), scan(&pts, &q, 10));
        }
    }
}
