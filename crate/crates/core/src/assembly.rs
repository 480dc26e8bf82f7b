//! Global assembly of `M ä + K a + f = 0` and nodal velocity constraints.
//!
//! Node `i` owns global DOFs `3i, 3i+1, 3i+2` for `(u, v, w)`.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::element::{element_load, ElementError, ElementMatrices};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::scalar::Scalar;
use crate::sparse::{CooMatrix, CsrMatrix};

pub const DOFS_PER_NODE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("expected {expected} {what}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("node {0} is constrained more than once")]
    DuplicateConstraint(usize),
    #[error("constraint on node {node}, but the mesh has {n_nodes} nodes")]
    UnknownNode { node: usize, n_nodes: usize },
}

/// Global DOF index of component `comp` (0 = u, 1 = v, 2 = w) of `node`.
#[inline]
pub fn dof(node: usize, comp: usize) -> usize {
    DOFS_PER_NODE * node + comp
}

/// Prescribed nodal velocity; `v_fix = 0` pins the node in place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint<T> {
    pub node: usize,
    pub v_fix: [T; 3],
}

/// Material assignment for assembly.
#[derive(Debug, Clone, Copy)]
pub enum Materials<'a, T> {
    Uniform(&'a MaterialParams<T>),
    PerElement(&'a [MaterialParams<T>]),
}

impl<'a, T> Materials<'a, T> {
    fn get(&self, t: usize) -> &'a MaterialParams<T> {
        match *self {
            Materials::Uniform(m) => m,
            Materials::PerElement(ms) => &ms[t],
        }
    }

    fn check(&self, n_triangles: usize) -> Result<(), AssemblyError> {
        match self {
            Materials::PerElement(ms) if ms.len() != n_triangles => Err(AssemblyError::Dimension {
                what: "element materials",
                expected: n_triangles,
                got: ms.len(),
            }),
            _ => Ok(()),
        }
    }
}

static REVISION: AtomicU64 = AtomicU64::new(1);

fn next_revision() -> u64 {
    REVISION.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone)]
pub struct GlobalSystem<T> {
    pub k: CsrMatrix<T>,
    pub m: CsrMatrix<T>,
    pub f: Vec<T>,
    constraints: Vec<Constraint<T>>,
    revision: u64,
}

impl<T: Scalar> GlobalSystem<T> {
    /// Scatters element stiffness, mass and load (body force per element) into
    /// global sparse matrices. Element kernels run in parallel; the scatter
    /// runs in element order, so results do not depend on the thread count.
    pub fn assemble(mesh: &Mesh<T>, materials: Materials<'_, T>, body_forces: &[[T; 3]]) -> Result<Self, AssemblyError> {
        let nt = mesh.n_triangles();
        materials.check(nt)?;
        if body_forces.len() != nt {
            return Err(AssemblyError::Dimension {
                what: "element body forces",
                expected: nt,
                got: body_forces.len(),
            });
        }
        let elements: Vec<ElementMatrices<T>> = (0..nt)
            .into_par_iter()
            .map(|t| ElementMatrices::new(&mesh.triangle_coords(t), materials.get(t), body_forces[t], t))
            .collect::<Result<_, _>>()?;
        let n = DOFS_PER_NODE * mesh.n_nodes();
        let mut k = CooMatrix::with_capacity(n, n, 81 * nt);
        let mut m = CooMatrix::with_capacity(n, n, 81 * nt);
        let mut f = vec![T::zero(); n];
        for (t, em) in elements.iter().enumerate() {
            let map = local_to_global(mesh, t);
            for (li, &gi) in map.iter().enumerate() {
                f[gi] += em.fe[li];
                for (lj, &gj) in map.iter().enumerate() {
                    k.push(gi, gj, em.ke[li][lj]);
                    m.push(gi, gj, em.me[li][lj]);
                }
            }
        }
        Ok(Self {
            k: k.to_csr(),
            m: m.to_csr(),
            f,
            constraints: Vec::new(),
            revision: next_revision(),
        })
    }

    /// Wraps already assembled matrices (e.g. small model problems).
    pub fn from_parts(k: CsrMatrix<T>, m: CsrMatrix<T>, f: Vec<T>) -> Result<Self, AssemblyError> {
        let n = f.len();
        for (what, got) in [("stiffness rows", k.nrows()), ("stiffness columns", k.ncols()), ("mass rows", m.nrows()), ("mass columns", m.ncols())] {
            if got != n {
                return Err(AssemblyError::Dimension { what, expected: n, got });
            }
        }
        Ok(Self {
            k,
            m,
            f,
            constraints: Vec::new(),
            revision: next_revision(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.f.len()
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    /// Identifies the matrices; changes whenever constraints are applied.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Global DOFs touched by constraints, ascending.
    pub fn constrained_dofs(&self) -> Vec<usize> {
        let mut dofs: Vec<usize> = self
            .constraints
            .iter()
            .flat_map(|c| (0..DOFS_PER_NODE).map(move |k| dof(c.node, k)))
            .collect();
        dofs.sort_unstable();
        dofs
    }

    /// For every constrained node `i`: block-row `i` of `K` becomes zero, block-row
    /// `i` of `M` becomes `[0 .. I₃ .. 0]` and `f_i = 0`, so the system states
    /// `ä_i = 0` and the node keeps its initial velocity. Columns are untouched,
    /// hence the result is generally nonsymmetric.
    pub fn apply_constraints(&self, constraints: &[Constraint<T>]) -> Result<Self, AssemblyError> {
        let n_nodes = self.n_dofs() / DOFS_PER_NODE;
        let mut all = self.constraints.clone();
        let mut seen = vec![false; n_nodes];
        for c in &all {
            seen[c.node] = true;
        }
        for c in constraints {
            if c.node >= n_nodes {
                return Err(AssemblyError::UnknownNode { node: c.node, n_nodes });
            }
            if seen[c.node] {
                return Err(AssemblyError::DuplicateConstraint(c.node));
            }
            seen[c.node] = true;
            all.push(*c);
        }
        let rows: Vec<usize> = constraints
            .iter()
            .flat_map(|c| (0..DOFS_PER_NODE).map(move |k| dof(c.node, k)))
            .collect();
        let k = self.k.replace_rows(&rows, |_| Vec::new());
        let m = self.m.replace_rows(&rows, |r| vec![(r, T::one())]);
        let mut f = self.f.clone();
        for &r in &rows {
            f[r] = T::zero();
        }
        Ok(Self {
            k,
            m,
            f,
            constraints: all,
            revision: next_revision(),
        })
    }

    /// Sets `f` to the load model at time `t`, re-zeroing constrained entries.
    pub fn update_load(&mut self, loads: &LoadModel<T>, t: T) {
        loads.eval_into(t, &mut self.f);
        for c in &self.constraints {
            for k in 0..DOFS_PER_NODE {
                self.f[dof(c.node, k)] = T::zero();
            }
        }
    }

    /// Zeroes the constrained entries of an externally built vector.
    pub fn zero_constrained(&self, v: &mut [T]) {
        for c in &self.constraints {
            for k in 0..DOFS_PER_NODE {
                v[dof(c.node, k)] = T::zero();
            }
        }
    }
}

fn local_to_global<T: Scalar>(mesh: &Mesh<T>, t: usize) -> [usize; 9] {
    let tri = mesh.triangles()[t].0;
    let mut map = [0; 9];
    for (i, &node) in tri.iter().enumerate() {
        for c in 0..DOFS_PER_NODE {
            map[3 * i + c] = dof(node, c);
        }
    }
    map
}

/// Global load vector `f` for element-uniform body forces (N/m³).
pub fn assemble_load<T: Scalar>(
    mesh: &Mesh<T>,
    materials: Materials<'_, T>,
    body_forces: &[[T; 3]],
) -> Result<Vec<T>, AssemblyError> {
    let nt = mesh.n_triangles();
    materials.check(nt)?;
    if body_forces.len() != nt {
        return Err(AssemblyError::Dimension {
            what: "element body forces",
            expected: nt,
            got: body_forces.len(),
        });
    }
    let mut f = vec![T::zero(); DOFS_PER_NODE * mesh.n_nodes()];
    for (t, b) in body_forces.iter().enumerate() {
        if b.iter().all(|&x| x == T::zero()) {
            continue;
        }
        let fe = element_load(*b, materials.get(t).thickness, mesh.triangle_area(t));
        for (li, gi) in local_to_global(mesh, t).into_iter().enumerate() {
            f[gi] += fe[li];
        }
    }
    Ok(f)
}

/// A load vector switched on over the closed window `[start, end]`.
#[derive(Debug, Clone)]
pub struct TimedLoad<T> {
    pub start: T,
    pub end: T,
    pub vector: Vec<T>,
}

impl<T: Scalar> TimedLoad<T> {
    pub fn is_active(&self, t: T) -> bool {
        let slack = T::lit(1e-12) * self.start.abs().max(self.end.abs());
        t >= self.start - slack && t <= self.end + slack
    }
}

/// Superposition of windowed load vectors.
#[derive(Debug, Clone)]
pub struct LoadModel<T> {
    n_dofs: usize,
    loads: Vec<TimedLoad<T>>,
}

impl<T: Scalar> LoadModel<T> {
    pub fn new(n_dofs: usize) -> Self {
        Self {
            n_dofs,
            loads: Vec::new(),
        }
    }

    pub fn push(&mut self, load: TimedLoad<T>) -> Result<(), AssemblyError> {
        if load.vector.len() != self.n_dofs {
            return Err(AssemblyError::Dimension {
                what: "load vector entries",
                expected: self.n_dofs,
                got: load.vector.len(),
            });
        }
        self.loads.push(load);
        Ok(())
    }

    pub fn loads(&self) -> &[TimedLoad<T>] {
        &self.loads
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        let mut f = vec![T::zero(); self.n_dofs];
        self.eval_into(t, &mut f);
        f
    }

    pub fn eval_into(&self, t: T, f: &mut [T]) {
        f.iter_mut().for_each(|v| *v = T::zero());
        for load in self.loads.iter().filter(|l| l.is_active(t)) {
            for (fi, &li) in f.iter_mut().zip(&load.vector) {
                *fi += li;
            }
        }
    }
}
