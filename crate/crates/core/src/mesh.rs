//! Triangulations of the membrane's reference (undeformed) plane.
//!
//! Nodes carry material coordinates `(x0, y0)`; the third reference coordinate
//! is identically zero. Triangles are stored counter-clockwise.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid structured grid: {0}")]
    InvalidSpec(String),
    #[error("triangle {triangle} references node {node}, but the mesh has {n_nodes} nodes")]
    NodeOutOfRange {
        triangle: usize,
        node: usize,
        n_nodes: usize,
    },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("triangle {0} is not counter-clockwise (signed area <= 0)")]
    NotCounterClockwise(usize),
    #[error("triangles {0} and {1} are duplicates")]
    DuplicateTriangle(usize, usize),
    #[error("node {0} has non-finite coordinates")]
    NonFinite(usize),
    #[error("mesh is not edge-connected")]
    Disconnected,
    #[error("node {0} belongs to no triangle")]
    IsolatedNode(usize),
    #[error("mesh has no triangles")]
    Empty,
    #[error("operation requires structured metadata")]
    NotStructured,
    #[error("msh line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported element type {0}")]
    UnsupportedElement(u32),
    #[error("binary msh files are not supported")]
    Binary,
    #[error("mesh is not planar: node {node} has z = {z}")]
    NonPlanar { node: usize, z: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub x0: T,
    pub y0: T,
}

/// Vertex ids `(m, n, p)` of a counter-clockwise triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triangle(pub [usize; 3]);

/// Regular rectangular grid: `nx × ny` rectangles, each split along its
/// lower-left to upper-right diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredSpec<T> {
    pub lx: T,
    pub ly: T,
    pub nx: usize,
    pub ny: usize,
}

impl<T: Scalar> StructuredSpec<T> {
    pub fn new(lx: T, ly: T, nx: usize, ny: usize) -> Result<Self, MeshError> {
        let spec = Self { lx, ly, nx, ny };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(MeshError::InvalidSpec(format!(
                "nx and ny must be >= 1 (got {} x {})",
                self.nx, self.ny
            )));
        }
        if !(self.lx.is_finite() && self.ly.is_finite() && self.lx > T::zero() && self.ly > T::zero()) {
            return Err(MeshError::InvalidSpec(format!(
                "side lengths must be positive (got {} x {})",
                self.lx, self.ly
            )));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_triangles(&self) -> usize {
        2 * self.nx * self.ny
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Grid spacing `(Lx/nx, Ly/ny)`.
    pub fn spacing(&self) -> (T, T) {
        (self.lx / T::from_count(self.nx), self.ly / T::from_count(self.ny))
    }

    /// Splits every rectangle into four.
    pub fn refine(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            ..*self
        }
    }

    pub fn refined(&self, times: usize) -> Self {
        (0..times).fold(*self, |s, _| s.refine())
    }

    /// Index `(i, j)` of the rectangle treated as the central square.
    pub fn central_rectangle(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }

    /// Axis-aligned bounds `[x_lo, x_hi] × [y_lo, y_hi]` of rectangle `(i, j)`.
    pub fn rectangle_bounds(&self, i: usize, j: usize) -> [T; 4] {
        let (xs, ys) = (self.coord_x(i), self.coord_y(j));
        [xs, self.coord_x(i + 1), ys, self.coord_y(j + 1)]
    }

    fn coord_x(&self, i: usize) -> T {
        T::from_count(i) * self.lx / T::from_count(self.nx)
    }

    fn coord_y(&self, j: usize) -> T {
        T::from_count(j) * self.ly / T::from_count(self.ny)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nodes: Vec<Node<T>>,
    triangles: Vec<Triangle>,
    structure: Option<StructuredSpec<T>>,
}

/// Twice the signed area of the triangle `(a, b, c)`.
pub fn doubled_signed_area<T: Scalar>(a: Node<T>, b: Node<T>, c: Node<T>) -> T {
    (b.x0 - a.x0) * (c.y0 - a.y0) - (c.x0 - a.x0) * (b.y0 - a.y0)
}

impl<T: Scalar> Mesh<T> {
    /// Builds and validates an unstructured mesh.
    pub fn new(nodes: Vec<Node<T>>, triangles: Vec<Triangle>) -> Result<Self, MeshError> {
        let mesh = Self {
            nodes,
            triangles,
            structure: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Regular grid over `[0, Lx] × [0, Ly]` with nodes at `(i·Lx/nx, j·Ly/ny)`.
    pub fn structured(spec: StructuredSpec<T>) -> Result<Self, MeshError> {
        spec.validate()?;
        let (nx, ny) = (spec.nx, spec.ny);
        let mut nodes = Vec::with_capacity(spec.n_nodes());
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(Node {
                    x0: spec.coord_x(i),
                    y0: spec.coord_y(j),
                });
            }
        }
        let mut triangles = Vec::with_capacity(spec.n_triangles());
        for j in 0..ny {
            for i in 0..nx {
                let p00 = spec.node_id(i, j);
                let p10 = spec.node_id(i + 1, j);
                let p01 = spec.node_id(i, j + 1);
                let p11 = spec.node_id(i + 1, j + 1);
                triangles.push(Triangle([p00, p10, p11]));
                triangles.push(Triangle([p00, p11, p01]));
            }
        }
        Ok(Self {
            nodes,
            triangles,
            structure: Some(spec),
        })
    }

    fn validate(&self) -> Result<(), MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (id, n) in self.nodes.iter().enumerate() {
            if !(n.x0.is_finite() && n.y0.is_finite()) {
                return Err(MeshError::NonFinite(id));
            }
        }
        let n_nodes = self.nodes.len();
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.0;
            for &v in &tri.0 {
                if v >= n_nodes {
                    return Err(MeshError::NodeOutOfRange {
                        triangle: t,
                        node: v,
                        n_nodes,
                    });
                }
            }
            if a == b || b == c || a == c {
                return Err(MeshError::RepeatedVertex(t));
            }
            if doubled_signed_area(self.nodes[a], self.nodes[b], self.nodes[c]) <= T::zero() {
                return Err(MeshError::NotCounterClockwise(t));
            }
            let mut key = tri.0;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateTriangle(first, t));
            }
            seen.insert(key, t);
        }
        let mut referenced = vec![false; n_nodes];
        self.triangles.iter().flat_map(|t| t.0).for_each(|v| referenced[v] = true);
        if let Some(id) = referenced.iter().position(|&r| !r) {
            return Err(MeshError::IsolatedNode(id));
        }
        if !self.is_edge_connected() {
            return Err(MeshError::Disconnected);
        }
        Ok(())
    }

    fn is_edge_connected(&self) -> bool {
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in edges_of(tri) {
                by_edge.entry(e).or_default().push(t);
            }
        }
        let mut visited = vec![false; self.triangles.len()];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        let mut count = 1;
        while let Some(t) = queue.pop_front() {
            for e in edges_of(&self.triangles[t]) {
                for &other in &by_edge[&e] {
                    if !visited[other] {
                        visited[other] = true;
                        count += 1;
                        queue.push_back(other);
                    }
                }
            }
        }
        count == self.triangles.len()
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn structure(&self) -> Option<&StructuredSpec<T>> {
        self.structure.as_ref()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Vertex coordinates of triangle `t`, in stored order.
    pub fn triangle_coords(&self, t: usize) -> [[T; 2]; 3] {
        let [a, b, c] = self.triangles[t].0;
        let p = |i: usize| [self.nodes[i].x0, self.nodes[i].y0];
        [p(a), p(b), p(c)]
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].0;
        doubled_signed_area(self.nodes[a], self.nodes[b], self.nodes[c]) * T::lit(0.5)
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let c = self.triangle_coords(t);
        let third = T::one() / T::lit(3.0);
        [
            (c[0][0] + c[1][0] + c[2][0]) * third,
            (c[0][1] + c[1][1] + c[2][1]) * third,
        ]
    }

    pub fn total_area(&self) -> T {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Shortest edge length over the mesh.
    pub fn min_edge(&self) -> T {
        self.edge_lengths().fold(T::infinity(), T::min)
    }

    pub fn max_edge(&self) -> T {
        self.edge_lengths().fold(T::zero(), T::max)
    }

    fn edge_lengths(&self) -> impl Iterator<Item = T> + '_ {
        self.triangles.iter().flat_map(move |tri| {
            edges_of(tri).into_iter().map(move |(a, b)| {
                let (pa, pb) = (self.nodes[a], self.nodes[b]);
                (pb.x0 - pa.x0).hypot(pb.y0 - pa.y0)
            })
        })
    }

    /// Bounding box `[x_min, x_max, y_min, y_max]`.
    pub fn bounds(&self) -> [T; 4] {
        let mut b = [T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity()];
        for n in &self.nodes {
            b[0] = b[0].min(n.x0);
            b[1] = b[1].max(n.x0);
            b[2] = b[2].min(n.y0);
            b[3] = b[3].max(n.y0);
        }
        b
    }

    /// Node closest to `(x, y)`; ties go to the smallest id.
    pub fn nearest_node(&self, x: T, y: T) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (id, n) in self.nodes.iter().enumerate() {
            let d = (n.x0 - x) * (n.x0 - x) + (n.y0 - y) * (n.y0 - y);
            if d < best_d {
                best_d = d;
                best = id;
            }
        }
        best
    }

    /// Node at `(x, y)` within `tol` (Euclidean), if any.
    pub fn find_node(&self, x: T, y: T, tol: T) -> Option<usize> {
        let id = self.nearest_node(x, y);
        let n = self.nodes[id];
        ((n.x0 - x).hypot(n.y0 - y) <= tol).then_some(id)
    }

    /// The two triangles of the central rectangle `(floor(nx/2), floor(ny/2))`.
    pub fn central_element_pair(&self) -> Result<(usize, usize), MeshError> {
        let spec = self.structure.ok_or(MeshError::NotStructured)?;
        let (i, j) = spec.central_rectangle();
        let r = j * spec.nx + i;
        Ok((2 * r, 2 * r + 1))
    }

    /// Triangles whose centroid lies in the closed box `[x_lo, x_hi] × [y_lo, y_hi]`.
    pub fn triangles_in_box(&self, bounds: [T; 4]) -> Vec<usize> {
        let [x_lo, x_hi, y_lo, y_hi] = bounds;
        (0..self.n_triangles())
            .filter(|&t| {
                let [cx, cy] = self.centroid(t);
                cx >= x_lo && cx <= x_hi && cy >= y_lo && cy <= y_hi
            })
            .collect()
    }

    /// Nodes on an edge that belongs to exactly one triangle, in increasing order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for e in edges_of(tri) {
                *count.entry(e).or_default() += 1;
            }
        }
        let set: HashSet<usize> = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .flat_map(|((a, b), _)| [a, b])
            .collect();
        let mut out: Vec<usize> = set.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Node adjacency (nodes sharing an edge), sorted per node.
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for tri in &self.triangles {
            for (a, b) in edges_of(tri) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Parses a gmsh MSH 2.2 ASCII file. Only 3-node triangles are imported;
    /// line and point elements are skipped. Nodes not referenced by any
    /// triangle are dropped and the remaining ids are renumbered densely in
    /// file order. Clockwise triangles are reoriented.
    pub fn read_msh(text: &str) -> Result<Self, MeshError> {
        let raw = parse_msh(text)?;
        let extent = raw
            .nodes
            .iter()
            .flat_map(|n| n.1.iter().map(|c| c.abs()))
            .fold(0.0f64, f64::max);
        let mut used = HashSet::new();
        for tri in &raw.triangles {
            used.extend(tri.iter().copied());
        }
        let mut remap = HashMap::new();
        let mut nodes = Vec::new();
        for (tag, [x, y, z]) in &raw.nodes {
            if !used.contains(tag) {
                continue;
            }
            if z.abs() >= 1e-9 * extent && *z != 0.0 {
                return Err(MeshError::NonPlanar { node: *tag, z: *z });
            }
            remap.insert(*tag, nodes.len());
            nodes.push(Node {
                x0: T::lit(*x),
                y0: T::lit(*y),
            });
        }
        let mut triangles = Vec::with_capacity(raw.triangles.len());
        for (t, tags) in raw.triangles.iter().enumerate() {
            let mut ids = [0usize; 3];
            for (k, tag) in tags.iter().enumerate() {
                ids[k] = *remap.get(tag).ok_or_else(|| MeshError::Parse {
                    line: raw.triangle_lines[t],
                    msg: format!("element references unknown node {tag}"),
                })?;
            }
            if doubled_signed_area(nodes[ids[0]], nodes[ids[1]], nodes[ids[2]]) < T::zero() {
                ids.swap(1, 2);
            }
            triangles.push(Triangle(ids));
        }
        Self::new(nodes, triangles)
    }
}

fn edges_of(tri: &Triangle) -> [(usize, usize); 3] {
    let [a, b, c] = tri.0;
    let key = |p: usize, q: usize| if p < q { (p, q) } else { (q, p) };
    [key(a, b), key(b, c), key(c, a)]
}

struct RawMsh {
    nodes: Vec<(usize, [f64; 3])>,
    triangles: Vec<[usize; 3]>,
    triangle_lines: Vec<usize>,
}

fn parse_msh(text: &str) -> Result<RawMsh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut raw = RawMsh {
        nodes: Vec::new(),
        triangles: Vec::new(),
        triangle_lines: Vec::new(),
    };
    let (mut saw_nodes, mut saw_elements) = (false, false);
    let err = |line: usize, msg: &str| MeshError::Parse {
        line,
        msg: msg.to_string(),
    };
    let next = next_line;

    while let Some((ln, line)) = lines.next() {
        match line {
            "" => continue,
            "$MeshFormat" => {
                let (fl, fmt) = next(&mut lines, "format line", ln)?;
                let parts: Vec<&str> = fmt.split_whitespace().collect();
                if parts.len() < 3 {
                    return Err(err(fl, "malformed $MeshFormat line"));
                }
                if !parts[0].starts_with("2.") {
                    return Err(err(fl, &format!("unsupported MSH version {}", parts[0])));
                }
                if parts[1] != "0" {
                    return Err(MeshError::Binary);
                }
                expect_end(&mut lines, "$EndMeshFormat", fl)?;
            }
            "$Nodes" => {
                let (cl, count) = next(&mut lines, "node count", ln)?;
                let n: usize = count.parse().map_err(|_| err(cl, "malformed node count"))?;
                for _ in 0..n {
                    let (l, row) = next(&mut lines, "node line", cl)?;
                    let f: Vec<&str> = row.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(err(l, "node line must have 4 fields"));
                    }
                    let tag: usize = f[0].parse().map_err(|_| err(l, "malformed node id"))?;
                    let mut xyz = [0.0; 3];
                    for k in 0..3 {
                        xyz[k] = f[k + 1].parse().map_err(|_| err(l, "malformed coordinate"))?;
                    }
                    raw.nodes.push((tag, xyz));
                }
                expect_end(&mut lines, "$EndNodes", cl + n)?;
                saw_nodes = true;
            }
            "$Elements" => {
                let (cl, count) = next(&mut lines, "element count", ln)?;
                let n: usize = count.parse().map_err(|_| err(cl, "malformed element count"))?;
                for _ in 0..n {
                    let (l, row) = next(&mut lines, "element line", cl)?;
                    let f: Vec<usize> = row
                        .split_whitespace()
                        .map(|s| s.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err(l, "malformed element line"))?;
                    if f.len() < 3 {
                        return Err(err(l, "element line too short"));
                    }
                    let (etype, ntags) = (f[1], f[2]);
                    let verts = &f[(3 + ntags).min(f.len())..];
                    let expected = match etype {
                        1 => 2,
                        15 => 1,
                        2 => 3,
                        other => return Err(MeshError::UnsupportedElement(other as u32)),
                    };
                    if verts.len() != expected {
                        return Err(err(l, "wrong number of element nodes"));
                    }
                    if etype == 2 {
                        raw.triangles.push([verts[0], verts[1], verts[2]]);
                        raw.triangle_lines.push(l);
                    }
                }
                expect_end(&mut lines, "$EndElements", cl + n)?;
                saw_elements = true;
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                // skip unknown sections such as $PhysicalNames
                let end = format!("$End{}", &s[1..]);
                loop {
                    match lines.next() {
                        Some((_, l)) if l == end => break,
                        Some(_) => {}
                        None => return Err(err(ln, &format!("section {s} is not terminated"))),
                    }
                }
            }
            _ => return Err(err(ln, &format!("unexpected line '{line}'"))),
        }
    }
    if !saw_nodes {
        return Err(err(0, "missing $Nodes section"));
    }
    if !saw_elements {
        return Err(err(0, "missing $Elements section"));
    }
    Ok(raw)
}

fn next_line<'a>(
    lines: &mut dyn Iterator<Item = (usize, &'a str)>,
    what: &str,
    after: usize,
) -> Result<(usize, &'a str), MeshError> {
    lines.next().ok_or_else(|| MeshError::Parse {
        line: after + 1,
        msg: format!("unexpected end of file, expected {what}"),
    })
}

fn expect_end(
    lines: &mut dyn Iterator<Item = (usize, &str)>,
    tag: &str,
    after: usize,
) -> Result<(), MeshError> {
    match lines.next() {
        Some((_, l)) if l == tag => Ok(()),
        Some((ln, l)) => Err(MeshError::Parse {
            line: ln,
            msg: format!("expected {tag}, found '{l}'"),
        }),
        None => Err(MeshError::Parse {
            line: after + 1,
            msg: format!("expected {tag}, found end of file"),
        }),
    }
}
