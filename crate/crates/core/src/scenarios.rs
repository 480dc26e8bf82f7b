//! Load cases and the time-stepping driver.
//!
//! A [`Scenario`] describes the excitation independently of any particular
//! mesh, so the same scenario can be replayed on a sequence of refined grids.
//! [`Simulation`] binds a scenario to a mesh and material, assembles and
//! constrains the global system, factors the Newmark matrix and steps.

use thiserror::Error;

use crate::assembly::{assemble_load, AssemblyError, Constraint, GlobalSystem, LoadModel, Materials, TimedLoad, DOFS_PER_NODE};
use crate::element::{ElementResponse, ShapeCoeffs};
use crate::integrator::{energy, init_state, IntegratorError, Newmark, NewmarkParams, State};
use crate::material::MaterialParams;
use crate::mesh::{Mesh, MeshError, StructuredSpec};
use crate::ordering::{expand_to_dofs, nested_dissection};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown test case {0} (expected 1 to 5)")]
    UnknownCase(usize),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("snapshot observer failed: {0}")]
    Observer(#[source] Box<dyn std::error::Error + Send + Sync>),
}

/// Elements carrying an element-uniform load.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadTarget<T> {
    /// The two triangles of the central rectangle of a structured mesh.
    CentralPair,
    /// Triangles whose centroid lies in `[xmin, xmax] × [ymin, ymax]`.
    Box([T; 4]),
    Elements(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadKind<T> {
    ElementUniform(LoadTarget<T>),
    /// `b0 cos²(r)` for `r ≤ support`, with
    /// `r = π/(2L) · |(x, y) − center|`. `None` fields are taken from the mesh
    /// bounding box: `L` is its larger side, `center` its midpoint, and the
    /// support defaults to the numeric value of `L`.
    DistributedCos2 {
        size: Option<T>,
        center: Option<[T; 2]>,
        support: Option<T>,
    },
}

/// Body force density `b0 · direction` (N/m³) switched on over `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec<T> {
    pub kind: LoadKind<T>,
    pub direction: [T; 3],
    pub b0: T,
    pub start: T,
    pub end: T,
}

/// Prescribed velocity `speed · (sin θ, 0, cos θ)` at the node nearest to
/// `point` (the mesh center if `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct StrikeSpec<T> {
    pub point: Option<[T; 2]>,
    pub speed: T,
    pub angle_to_normal: T,
}

impl<T: Scalar> StrikeSpec<T> {
    pub fn velocity(&self) -> [T; 3] {
        let (s, c) = self.angle_to_normal.sin_cos();
        [self.speed * s, T::zero(), self.speed * c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Border {
    #[default]
    Free,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Excitation<T> {
    Load(LoadSpec<T>),
    Strike(StrikeSpec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub excitations: Vec<Excitation<T>>,
    pub border: Border,
    /// Uniform initial velocity of every node (m/s).
    pub initial_velocity: [T; 3],
}

impl<T: Scalar> Scenario<T> {
    pub fn new(excitations: Vec<Excitation<T>>, border: Border) -> Self {
        Self {
            excitations,
            border,
            initial_velocity: [T::zero(); 3],
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::Invalid(msg));
        for ex in &self.excitations {
            match ex {
                Excitation::Load(l) => {
                    let norm = l.direction.iter().map(|&d| d * d).sum::<T>().sqrt();
                    if (norm - T::one()).abs() > T::lit(1e-9) {
                        return bad(format!("load direction must be a unit vector (norm {norm})"));
                    }
                    if !(l.b0.is_finite() && l.start.is_finite() && l.end.is_finite()) {
                        return bad("load magnitude and window must be finite".into());
                    }
                    if l.end < l.start {
                        return bad(format!("load window ends ({}) before it starts ({})", l.end, l.start));
                    }
                    if let LoadKind::DistributedCos2 { size: Some(s), .. } = l.kind {
                        if !(s > T::zero()) {
                            return bad(format!("membrane size must be positive (got {s})"));
                        }
                    }
                }
                Excitation::Strike(s) => {
                    if !(s.speed >= T::zero() && s.speed.is_finite() && s.angle_to_normal.is_finite()) {
                        return bad(format!("strike speed must be finite and non-negative (got {})", s.speed));
                    }
                }
            }
        }
        if !self.initial_velocity.iter().all(|v| v.is_finite()) {
            return bad("initial velocity must be finite".into());
        }
        Ok(())
    }

    /// Replaces mesh-relative targets by the physical region they cover on
    /// `base`, so that refined meshes load the same area.
    pub fn pinned_to(&self, base: &StructuredSpec<T>) -> Self {
        let mut out = self.clone();
        for ex in &mut out.excitations {
            if let Excitation::Load(LoadSpec {
                kind: LoadKind::ElementUniform(target @ LoadTarget::CentralPair),
                ..
            }) = ex
            {
                let (i, j) = base.central_rectangle();
                *target = LoadTarget::Box(base.rectangle_bounds(i, j));
            }
        }
        out
    }
}

/// Free parameters of the five reference test cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseParams<T> {
    /// Load magnitude for cases 1, 2 and 5 (N/m³).
    pub b0: T,
    /// Strike speed for cases 3 and 4 (m/s).
    pub speed: T,
    pub load_start: T,
    pub load_end: T,
    /// Support radius of the case 5 profile, in units of the scaled radius.
    pub support: Option<T>,
    pub border: Border,
}

/// Tilt of the oblique cases, measured from the membrane normal in the x–z plane.
pub fn oblique_angle<T: Scalar>() -> T {
    T::PI() / T::lit(6.0)
}

/// The reference test cases:
///
/// 1. normal load on the central element pair,
/// 2. the same load tilted by π/6,
/// 3. normal prescribed velocity at the center node,
/// 4. the same velocity tilted by π/6,
/// 5. normal cos² distributed load.
pub fn build_case<T: Scalar>(case: usize, p: &CaseParams<T>) -> Result<Scenario<T>, ScenarioError> {
    let tilted = |theta: T| [theta.sin(), T::zero(), theta.cos()];
    let load = |kind, direction| {
        Excitation::Load(LoadSpec {
            kind,
            direction,
            b0: p.b0,
            start: p.load_start,
            end: p.load_end,
        })
    };
    let strike = |angle_to_normal| {
        Excitation::Strike(StrikeSpec {
            point: None,
            speed: p.speed,
            angle_to_normal,
        })
    };
    let ex = match case {
        1 => load(LoadKind::ElementUniform(LoadTarget::CentralPair), tilted(T::zero())),
        2 => load(LoadKind::ElementUniform(LoadTarget::CentralPair), tilted(oblique_angle())),
        3 => strike(T::zero()),
        4 => strike(oblique_angle()),
        5 => load(
            LoadKind::DistributedCos2 {
                size: None,
                center: None,
                support: p.support,
            },
            tilted(T::zero()),
        ),
        n => return Err(ScenarioError::UnknownCase(n)),
    };
    let scenario = Scenario::new(vec![ex], p.border);
    scenario.validate()?;
    Ok(scenario)
}

/// `b0 cos²(r)` with `r = π/(2L) · |(x, y) − center|`, zero for `r > support`.
pub fn distributed_b<T: Scalar>(x: T, y: T, b0: T, size: T, center: [T; 2], support: T) -> T {
    let (dx, dy) = (x - center[0], y - center[1]);
    let r = T::FRAC_PI_2() / size * (dx * dx + dy * dy).sqrt();
    if r <= support {
        let c = r.cos();
        b0 * c * c
    } else {
        T::zero()
    }
}

/// Samples a scalar field at element centroids.
pub fn elementwise_load<T: Scalar>(mesh: &Mesh<T>, field: impl Fn(T, T) -> T) -> Vec<T> {
    (0..mesh.n_triangles())
        .map(|t| {
            let [x, y] = mesh.centroid(t);
            field(x, y)
        })
        .collect()
}

fn mesh_center<T: Scalar>(mesh: &Mesh<T>) -> [T; 2] {
    let [x0, x1, y0, y1] = mesh.bounds();
    let half = T::lit(0.5);
    [half * (x0 + x1), half * (y0 + y1)]
}

/// Per-element body force of one load on `mesh`.
pub fn body_forces<T: Scalar>(mesh: &Mesh<T>, load: &LoadSpec<T>) -> Result<Vec<[T; 3]>, ScenarioError> {
    let nt = mesh.n_triangles();
    let scaled = |m: T| load.direction.map(|d| m * d);
    let mut b = vec![[T::zero(); 3]; nt];
    match &load.kind {
        LoadKind::ElementUniform(target) => {
            let ids = match target {
                LoadTarget::CentralPair => {
                    let (a, c) = mesh.central_element_pair()?;
                    vec![a, c]
                }
                LoadTarget::Box(bounds) => mesh.triangles_in_box(*bounds),
                LoadTarget::Elements(ids) => ids.clone(),
            };
            if ids.is_empty() {
                return Err(ScenarioError::Invalid("load target selects no elements".into()));
            }
            for t in ids {
                if t >= nt {
                    return Err(ScenarioError::Invalid(format!("load target element {t} does not exist ({nt} elements)")));
                }
                b[t] = scaled(load.b0);
            }
        }
        LoadKind::DistributedCos2 { size, center, support } => {
            let [x0, x1, y0, y1] = mesh.bounds();
            let size = size.unwrap_or((x1 - x0).max(y1 - y0));
            let center = center.unwrap_or_else(|| mesh_center(mesh));
            let support = support.unwrap_or(size);
            let field = elementwise_load(mesh, |x, y| distributed_b(x, y, load.b0, size, center, support));
            for (bt, m) in b.iter_mut().zip(field) {
                *bt = scaled(m);
            }
        }
    }
    Ok(b)
}

/// Timestep rule `h_min / (10 c_max)`.
pub fn default_timestep<T: Scalar>(mesh: &Mesh<T>, material: &MaterialParams<T>) -> T {
    mesh.min_edge() / (T::lit(10.0) * material.max_wave_speed())
}

/// Splits `[0, t_end]` into whole steps no longer than `max_tau`. Ratios within
/// 1e-9 of an integer are rounded so that an exact divisor is kept.
pub fn fit_steps<T: Scalar>(t_end: T, max_tau: T) -> (usize, T) {
    let r = t_end / max_tau;
    let near = r.round();
    let n = if (r - near).abs() <= T::lit(1e-9) * near { near } else { r.ceil() };
    let n = n.to_usize().unwrap_or(1).max(1);
    (n, t_end / T::from_count(n))
}

/// Euclidean length of a 3-vector without intermediate overflow.
pub fn norm3<T: Scalar>(v: &[T]) -> T {
    v[0].hypot(v[1]).hypot(v[2])
}

/// Per-node velocity magnitude `|(u̇, v̇, ẇ)|`.
pub fn velocity_magnitude<T: Scalar>(adot: &[T]) -> Vec<T> {
    adot.chunks_exact(DOFS_PER_NODE).map(norm3).collect()
}

/// Stored copy of the state at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub step: u64,
    pub t: T,
    pub a: Vec<T>,
    pub adot: Vec<T>,
    pub vmag: Vec<T>,
}

/// One scenario bound to a mesh, with its factored Newmark operator.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    mesh: Mesh<T>,
    material: MaterialParams<T>,
    unconstrained: GlobalSystem<T>,
    system: GlobalSystem<T>,
    loads: LoadModel<T>,
    params: NewmarkParams<T>,
    newmark: Newmark<T>,
    state: State<T>,
}

impl<T: Scalar> Simulation<T> {
    pub fn new(
        mesh: Mesh<T>,
        material: MaterialParams<T>,
        scenario: &Scenario<T>,
        params: NewmarkParams<T>,
    ) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let nt = mesh.n_triangles();
        let unconstrained = GlobalSystem::assemble(&mesh, Materials::Uniform(&material), &vec![[T::zero(); 3]; nt])?;
        let n_dofs = unconstrained.n_dofs();

        let mut loads = LoadModel::new(n_dofs);
        let mut constraints = Vec::new();
        for ex in &scenario.excitations {
            match ex {
                Excitation::Load(l) => {
                    let b = body_forces(&mesh, l)?;
                    let vector = assemble_load(&mesh, Materials::Uniform(&material), &b)?;
                    loads.push(TimedLoad {
                        start: l.start,
                        end: l.end,
                        vector,
                    })?;
                }
                Excitation::Strike(s) => {
                    let [x, y] = s.point.unwrap_or_else(|| mesh_center(&mesh));
                    constraints.push(Constraint {
                        node: mesh.nearest_node(x, y),
                        v_fix: s.velocity(),
                    });
                }
            }
        }
        if scenario.border == Border::Fixed {
            for node in mesh.boundary_nodes() {
                constraints.push(Constraint {
                    node,
                    v_fix: [T::zero(); 3],
                });
            }
        }
        let mut system = unconstrained.apply_constraints(&constraints)?;

        let order = expand_to_dofs(&nested_dissection(&mesh), DOFS_PER_NODE);
        system.update_load(&loads, T::zero());
        let v0: Vec<T> = (0..n_dofs).map(|i| scenario.initial_velocity[i % DOFS_PER_NODE]).collect();
        let state = init_state(&system, vec![T::zero(); n_dofs], v0, Some(&order))?;
        let newmark = Newmark::factor(&system, params, Some(&order))?;
        Ok(Self {
            mesh,
            material,
            unconstrained,
            system,
            loads,
            params,
            newmark,
            state,
        })
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn material(&self) -> &MaterialParams<T> {
        &self.material
    }

    /// System with constraints applied and the load at the current time.
    pub fn system(&self) -> &GlobalSystem<T> {
        &self.system
    }

    /// Symmetric system before constraints (used for energies).
    pub fn unconstrained(&self) -> &GlobalSystem<T> {
        &self.unconstrained
    }

    pub fn loads(&self) -> &LoadModel<T> {
        &self.loads
    }

    pub fn params(&self) -> &NewmarkParams<T> {
        &self.params
    }

    pub fn state(&self) -> &State<T> {
        &self.state
    }

    pub fn step(&mut self) -> Result<(), ScenarioError> {
        let t_next = T::from_count(self.state.step as usize + 1) * self.params.tau;
        self.system.update_load(&self.loads, t_next);
        self.newmark.step(&mut self.state, &self.system, &self.params)?;
        if !self.state.is_finite() {
            return Err(IntegratorError::NonFinite(self.state.step).into());
        }
        Ok(())
    }

    pub fn advance(&mut self, steps: usize) -> Result<(), ScenarioError> {
        (0..steps).try_for_each(|_| self.step())
    }

    /// Takes `steps` steps, calling `observe` on the initial state and after
    /// every `every`-th step (and always after the last one).
    pub fn run<F>(&mut self, steps: usize, every: usize, mut observe: F) -> Result<(), ScenarioError>
    where
        F: FnMut(&Self) -> Result<(), Box<dyn std::error::Error + Send + Sync>>,
    {
        let every = every.max(1);
        observe(self).map_err(ScenarioError::Observer)?;
        for k in 1..=steps {
            self.step()?;
            if k % every == 0 || k == steps {
                observe(self).map_err(ScenarioError::Observer)?;
            }
        }
        Ok(())
    }

    /// Like [`run`](Self::run), collecting the observed states.
    pub fn run_collect(&mut self, steps: usize, every: usize) -> Result<Vec<Snapshot<T>>, ScenarioError> {
        let mut out = Vec::new();
        self.run(steps, every, |sim| {
            out.push(sim.snapshot());
            Ok(())
        })?;
        Ok(out)
    }

    pub fn snapshot(&self) -> Snapshot<T> {
        Snapshot {
            step: self.state.step,
            t: self.state.t,
            a: self.state.a.clone(),
            adot: self.state.adot.clone(),
            vmag: self.velocity_magnitude(),
        }
    }

    pub fn velocity_magnitude(&self) -> Vec<T> {
        velocity_magnitude(&self.state.adot)
    }

    /// `(kinetic, strain)` energy of the current state.
    pub fn energy(&self) -> (T, T) {
        energy(&self.state, &self.unconstrained)
    }

    /// Strain and stress of every element in the current state.
    pub fn element_responses(&self) -> Result<Vec<ElementResponse<T>>, ScenarioError> {
        (0..self.mesh.n_triangles())
            .map(|t| {
                let sc = ShapeCoeffs::new(&self.mesh.triangle_coords(t), t).map_err(AssemblyError::from)?;
                let mut ae = [T::zero(); 9];
                for (i, &node) in self.mesh.triangles()[t].0.iter().enumerate() {
                    ae[3 * i..3 * i + 3].copy_from_slice(&self.state.a[3 * node..3 * node + 3]);
                }
                Ok(ElementResponse::recover(&sc, &self.material.stiffness, &ae))
            })
            .collect()
    }
}
