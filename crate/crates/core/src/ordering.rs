//! Fill-reducing elimination orders for the global system.
//!
//! Recursive coordinate bisection with vertex separators: each region is
//! split at the median of its longer axis, the boundary layer between the two
//! halves becomes a separator, and separators are eliminated after both
//! halves. On planar triangulations this gives nested-dissection fill.

use crate::mesh::Mesh;
use crate::scalar::Scalar;

const LEAF_SIZE: usize = 16;

/// Node elimination order for `mesh`.
pub fn nested_dissection<T: Scalar>(mesh: &Mesh<T>) -> Vec<usize> {
    let coords: Vec<[f64; 2]> = mesh
        .nodes()
        .iter()
        .map(|n| [n.x0.to_f64_lossy(), n.y0.to_f64_lossy()])
        .collect();
    let adj = mesh.node_adjacency();
    let mut state = Dissection {
        coords: &coords,
        adj: &adj,
        stamp: vec![0; coords.len()],
        counter: 0,
        order: Vec::with_capacity(coords.len()),
    };
    state.split((0..coords.len()).collect());
    state.order
}

/// Expands a node order to DOF order with `dofs_per_node` consecutive DOFs.
pub fn expand_to_dofs(node_order: &[usize], dofs_per_node: usize) -> Vec<usize> {
    node_order
        .iter()
        .flat_map(|&n| (0..dofs_per_node).map(move |c| dofs_per_node * n + c))
        .collect()
}

struct Dissection<'a> {
    coords: &'a [[f64; 2]],
    adj: &'a [Vec<usize>],
    stamp: Vec<usize>,
    counter: usize,
    order: Vec<usize>,
}

impl Dissection<'_> {
    fn split(&mut self, mut nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend(nodes);
            return;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &n in &nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(self.coords[n][k]);
                hi[k] = hi[k].max(self.coords[n][k]);
            }
        }
        let axis = usize::from(hi[1] - lo[1] > hi[0] - lo[0]);
        let coords = self.coords;
        nodes.sort_by(|&a, &b| {
            coords[a][axis]
                .total_cmp(&coords[b][axis])
                .then(coords[a][1 - axis].total_cmp(&coords[b][1 - axis]))
                .then(a.cmp(&b))
        });
        let median = coords[nodes[nodes.len() / 2]][axis];
        let cut = nodes.partition_point(|&n| coords[n][axis] < median);
        if cut == 0 {
            self.order.extend(nodes);
            return;
        }
        let (left, right) = nodes.split_at(cut);
        self.counter += 1;
        let right_mark = self.counter;
        for &n in right {
            self.stamp[n] = right_mark;
        }
        let (separator, interior): (Vec<usize>, Vec<usize>) = left
            .iter()
            .partition(|&&n| self.adj[n].iter().any(|&m| self.stamp[m] == right_mark));
        let right = right.to_vec();
        self.split(interior);
        self.split(right);
        self.order.extend(separator);
    }
}
