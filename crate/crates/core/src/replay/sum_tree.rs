/// Binary tree of partial sums over a fixed number of non-negative leaves.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    /// 1-based heap layout; `nodes[1]` is the root, leaves start at `width`.
    nodes: Vec<f64>,
    width: usize,
}

impl SumTree {
    pub fn new(leaves: usize) -> Self {
        let width = leaves.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * width],
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.leaves
    }

    pub fn is_empty(&self) -> bool {
        self.leaves == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.width + i]
    }

    /// Sets leaf `i`, recomputing only the sums on its path to the root.
    pub fn set(&mut self, i: usize, value: f64) {
        assert!(i < self.leaves, "leaf {i} out of range");
        debug_assert!(value >= 0.0 && value.is_finite());
        let mut n = self.width + i;
        self.nodes[n] = value;
        while n > 1 {
            n /= 2;
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    /// Leaf whose cumulative range contains `mass` (clamped into `[0, total)`).
    pub fn find(&self, mut mass: f64) -> usize {
        let mut n = 1;
        while n < self.width {
            let left = self.nodes[2 * n];
            if mass < left || self.nodes[2 * n + 1] <= 0.0 {
                n *= 2;
            } else {
                mass -= left;
                n = 2 * n + 1;
            }
        }
        (n - self.width).min(self.leaves.saturating_sub(1))
    }

    /// Largest relative gap between an internal node and its children's sum.
    pub fn max_inconsistency(&self) -> f64 {
        (1..self.width)
            .map(|n| {
                let s = self.nodes[2 * n] + self.nodes[2 * n + 1];
                (self.nodes[n] - s).abs() / s.abs().max(1e-300)
            })
            .fold(0.0, f64::max)
    }

    pub fn leaf_sum(&self) -> f64 {
        self.nodes[self.width..self.width + self.leaves].iter().sum()
    }
}
