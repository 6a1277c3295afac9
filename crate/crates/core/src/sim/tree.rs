/// Complete binary sum tree over per-site weights.
///
/// Every update recomputes the parents from their children, so the root is
/// always the tree-ordered sum of the current leaves and no drift builds up.
#[derive(Debug, Clone)]
pub struct RateTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl RateTree {
    pub fn new(weights: &[f64]) -> Self {
        let leaves = weights.len().max(1).next_power_of_two();
        let mut tree = Self { leaves, nodes: vec![0.0; 2 * leaves] };
        tree.nodes[leaves..leaves + weights.len()].copy_from_slice(weights);
        tree.rebuild();
        tree
    }

    /// Recomputes every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for i in (1..self.leaves).rev() {
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let mut node = self.leaves + i;
        self.nodes[node] = w;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf `i` such that the cumulative weight before it is `<= target <` the one after.
    /// `target` is expected in `[0, total)`.
    pub fn find(&self, mut target: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.nodes[2 * node];
            if target < left {
                node *= 2;
            } else {
                target -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_respects_cumulative_weights() {
        let tree = RateTree::new(&[1.0, 0.0, 2.0, 3.0]);
        assert_eq!(tree.total(), 6.0);
        assert_eq!(tree.find(0.5), 0);
        assert_eq!(tree.find(1.0), 2);
        assert_eq!(tree.find(2.999), 2);
        assert_eq!(tree.find(3.0), 3);
        assert_eq!(tree.find(5.999), 3);
    }

    proptest! {
        #[test]
        fn updates_match_rebuild(
            init in prop::collection::vec(0.0f64..10.0, 1..40),
            updates in prop::collection::vec((0usize..40, 0.0f64..10.0), 0..200),
        ) {
            let mut tree = RateTree::new(&init);
            let mut weights = init.clone();
            for (i, w) in updates {
                let i = i % weights.len();
                tree.set(i, w);
                weights[i] = w;
            }
            let fresh = RateTree::new(&weights);
            prop_assert_eq!(tree.total(), fresh.total());
            let direct: f64 = weights.iter().sum();
            prop_assert!((tree.total() - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }
}
