use serde::{Deserialize, Serialize};

/// Static routing tree toward the sink. Node 0 is always the sink.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    positions: Vec<[f64; 3]>,
    parent: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("topology needs a sink and at least one sensor node, got {0} nodes")]
    TooSmall(usize),
    #[error("positions ({positions}) and parents ({parents}) differ in length")]
    LengthMismatch { positions: usize, parents: usize },
    #[error("node 0 is the sink and must not have a parent")]
    SinkHasParent,
    #[error("node {0} has no parent")]
    Orphan(usize),
    #[error("node {node} names unknown parent {parent}")]
    UnknownParent { node: usize, parent: usize },
    #[error("node {0} does not reach the sink (cycle)")]
    Cycle(usize),
    #[error("link {child}->{parent} is {length_m:.1} m, above the {max_m} m limit")]
    LinkTooLong {
        child: usize,
        parent: usize,
        length_m: f64,
        max_m: f64,
    },
    #[error("node {0} has a non-finite coordinate")]
    BadPosition(usize),
}

/// Radius (m) of the disc sensor nodes are spread over by [`Topology::generated`].
const LAYOUT_RADIUS_M: f64 = 165.0;
/// Nodes closer than this to the sink attach to it directly.
const DIRECT_RANGE_M: f64 = 120.0;

impl Topology {
    pub fn new(
        positions: Vec<[f64; 3]>,
        parent: Vec<Option<usize>>,
        max_link_m: f64,
    ) -> Result<Self, TopologyError> {
        let n = positions.len();
        if n < 2 {
            return Err(TopologyError::TooSmall(n));
        }
        if parent.len() != n {
            return Err(TopologyError::LengthMismatch {
                positions: n,
                parents: parent.len(),
            });
        }
        if let Some(i) = positions
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(TopologyError::BadPosition(i));
        }
        if parent[0].is_some() {
            return Err(TopologyError::SinkHasParent);
        }
        let topo = Self { positions, parent };
        for node in 1..n {
            let p = topo.parent[node].ok_or(TopologyError::Orphan(node))?;
            if p >= n {
                return Err(TopologyError::UnknownParent { node, parent: p });
            }
            let length_m = topo.distance(node, p);
            if length_m > max_link_m {
                return Err(TopologyError::LinkTooLong {
                    child: node,
                    parent: p,
                    length_m,
                    max_m: max_link_m,
                });
            }
            let mut cur = node;
            let mut hops = 0;
            while let Some(up) = topo.parent[cur] {
                cur = up;
                hops += 1;
                if hops > n {
                    return Err(TopologyError::Cycle(node));
                }
            }
        }
        Ok(topo)
    }

    /// Deterministic layout of `sensors` nodes around a sink.
    ///
    /// Sensors sit on a golden-angle spiral within a 165 m radius at depths
    /// between 20 and 110 m, so every pair is less than 357 m apart. A node
    /// within 120 m of the sink links to it directly; every other node
    /// relays through its nearest neighbour that is closer to the sink.
    pub fn generated(sensors: usize, max_link_m: f64) -> Result<Self, TopologyError> {
        if sensors == 0 {
            return Err(TopologyError::TooSmall(1));
        }
        let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut positions = vec![[0.0, 0.0, 10.0]];
        for i in 0..sensors {
            let r = LAYOUT_RADIUS_M * ((i as f64 + 0.5) / sensors as f64).sqrt();
            let theta = i as f64 * golden_angle;
            let depth = 20.0 + 90.0 * ((i as f64 * 0.618_033_988_75) % 1.0);
            positions.push([r * theta.cos(), r * theta.sin(), depth]);
        }
        let dist = |a: usize, b: usize| euclid(&positions[a], &positions[b]);
        let mut parent = vec![None];
        for node in 1..=sensors {
            let own = dist(node, 0);
            let p = if own <= DIRECT_RANGE_M {
                0
            } else {
                (1..=sensors)
                    .filter(|&j| j != node && dist(j, 0) < own)
                    .min_by(|&a, &b| dist(node, a).total_cmp(&dist(node, b)))
                    .unwrap_or(0)
            };
            parent.push(Some(p));
        }
        Self::new(positions, parent, max_link_m)
    }

    /// Number of nodes including the sink.
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn sink(&self) -> usize {
        0
    }

    pub fn position(&self, node: usize) -> [f64; 3] {
        self.positions[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        euclid(&self.positions[a], &self.positions[b])
    }

    /// Uplinks as (child, parent), ordered by child id.
    pub fn links(&self) -> Vec<(usize, usize)> {
        (1..self.node_count())
            .filter_map(|n| self.parent[n].map(|p| (n, p)))
            .collect()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node != 0 && !self.parent.contains(&Some(node))
    }

    pub fn max_pairwise_distance(&self) -> f64 {
        let n = self.node_count();
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| self.distance(a, b))
            .fold(0.0, f64::max)
    }
}

fn euclid(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
