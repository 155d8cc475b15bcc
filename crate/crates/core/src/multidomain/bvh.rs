use crate::geometry::Aabb;
use crate::mesh::Mesh;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        bbox: Aabb,
        items: Vec<usize>,
    },
    Inner {
        bbox: Aabb,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned bounding box hierarchy over mesh elements.
///
/// Built top-down: split at the median center along the longest axis of
/// the node box (ties broken x, y, z), until at most four elements remain.
#[derive(Clone, Debug)]
pub struct BvhTree {
    nodes: Vec<Node>,
    boxes: Vec<Aabb>,
}

impl BvhTree {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        Self::from_boxes(
            (0..mesh.num_elements())
                .map(|e| mesh.element_bounding_box(e))
                .collect(),
        )
    }

    pub fn from_boxes(boxes: Vec<Aabb>) -> Self {
        let mut tree = BvhTree {
            nodes: Vec::new(),
            boxes,
        };
        let items: Vec<usize> = (0..tree.boxes.len()).collect();
        if !items.is_empty() {
            tree.build(items);
        }
        tree
    }

    fn build(&mut self, mut items: Vec<usize>) -> usize {
        let bbox = items
            .iter()
            .fold(Aabb::empty(), |b, &i| b.merge(&self.boxes[i]));
        if items.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bbox, items });
            return self.nodes.len() - 1;
        }
        let ext = bbox.extent();
        let mut axis = 0;
        for a in 1..3 {
            if ext[a] > ext[axis] {
                axis = a;
            }
        }
        let c = |i: &usize| self.boxes[*i].center()[axis];
        items.sort_by(|a, b| c(a).total_cmp(&c(b)).then(a.cmp(b)));
        let right_items = items.split_off(items.len() / 2);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            bbox,
            items: Vec::new(),
        });
        let left = self.build(items);
        let right = self.build(right_items);
        self.nodes[slot] = Node::Inner { bbox, left, right };
        slot
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn root_box(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| match n {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => *bbox,
        })
    }

    /// Elements whose boxes overlap `query`, sorted.
    pub fn query(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Leaf { bbox, items } => {
                    if bbox.intersects(query) {
                        out.extend(
                            items
                                .iter()
                                .copied()
                                .filter(|&i| self.boxes[i].intersects(query)),
                        );
                    }
                }
                Node::Inner { bbox, left, right } => {
                    if bbox.intersects(query) {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks the structural invariants: every element in exactly one leaf,
    /// leaves hold at most four, parents contain their children.
    pub fn check(&self) -> bool {
        let mut seen = vec![0usize; self.boxes.len()];
        for node in &self.nodes {
            match node {
                Node::Leaf { bbox, items } => {
                    if items.len() > LEAF_SIZE {
                        return false;
                    }
                    for &i in items {
                        seen[i] += 1;
                        if !bbox.contains(&self.boxes[i]) {
                            return false;
                        }
                    }
                }
                Node::Inner { bbox, left, right } => {
                    for c in [left, right] {
                        let cb = match &self.nodes[*c] {
                            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
                        };
                        if !bbox.contains(cb) {
                            return false;
                        }
                    }
                }
            }
        }
        seen.iter().all(|&c| c == 1)
    }
}
