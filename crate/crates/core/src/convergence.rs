//! Empirical convergence order by successive refinement.
//!
//! Level `k` solves the scenario on the base grid refined `k` times with the
//! base timestep divided by `2^k`. At the final time the displacements and
//! velocities at the base grid's node positions are extracted, consecutive
//! levels are differenced, and the slope of `log2 ‖d_k‖` against `k` gives the
//! observed order.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::integrator::NewmarkParams;
use crate::material::MaterialParams;
use crate::mesh::{Mesh, StructuredSpec};
use crate::scalar::Scalar;
use crate::scenarios::{default_timestep, fit_steps, Scenario, ScenarioError, Simulation};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("a convergence study needs at least 2 refinements (got k_max = {0})")]
    TooFewLevels(usize),
    #[error("final time must be positive and finite (got {0})")]
    FinalTime(f64),
    #[error("base node ({x}, {y}) has no coincident node on refinement level {level}")]
    MissingNode { level: usize, x: f64, y: f64 },
    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: ScenarioError,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L1, NormKind::L2, NormKind::Linf];

    pub fn label(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::Linf => "Linf",
        }
    }
}

/// Mean-normalized discrete norms: `(1/n)Σ|dᵢ|`, `sqrt((1/n)Σdᵢ²)`, `max|dᵢ|`.
pub fn norm<T: Scalar>(d: &[T], which: NormKind) -> T {
    if d.is_empty() {
        return T::zero();
    }
    let n = T::from_count(d.len());
    match which {
        NormKind::L1 => d.iter().map(|x| x.abs()).sum::<T>() / n,
        NormKind::L2 => (d.iter().map(|&x| x * x).sum::<T>() / n).sqrt(),
        NormKind::Linf => d.iter().fold(T::zero(), |m, x| m.max(x.abs())),
    }
}

/// All three norms of one vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub l1: T,
    pub l2: T,
    pub linf: T,
}

impl<T: Scalar> Norms<T> {
    pub fn of(d: &[T]) -> Self {
        Self {
            l1: norm(d, NormKind::L1),
            l2: norm(d, NormKind::L2),
            linf: norm(d, NormKind::Linf),
        }
    }

    pub fn get(&self, which: NormKind) -> T {
        match which {
            NormKind::L1 => self.l1,
            NormKind::L2 => self.l2,
            NormKind::Linf => self.linf,
        }
    }
}

/// Least-squares fit of `log2(norm_k)` against `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit<T> {
    /// Negated slope; `None` when fewer than two levels have a nonzero norm.
    pub rate: Option<T>,
    pub intercept: Option<T>,
    /// Levels left out because their norm is zero (log undefined).
    pub excluded: Vec<usize>,
}

pub fn fit_rate<T: Scalar>(norms: &[T]) -> RateFit<T> {
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (k, &v) in norms.iter().enumerate() {
        if v > T::zero() && v.is_finite() {
            pts.push((T::from_count(k), v.log2()));
        } else {
            excluded.push(k);
        }
    }
    if pts.len() < 2 {
        return RateFit {
            rate: None,
            intercept: None,
            excluded,
        };
    }
    let n = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: T = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    RateFit {
        rate: Some(-slope),
        intercept: Some(my - slope * mx),
        excluded,
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec<T> {
    pub scenario: Scenario<T>,
    pub material: MaterialParams<T>,
    pub base: StructuredSpec<T>,
    /// Number of refinements; levels `0..=k_max` are solved.
    pub k_max: usize,
    pub t_end: T,
    /// Base timestep; defaults to the stability-free accuracy rule on the base grid.
    pub tau0: Option<T>,
    pub beta1: T,
    pub beta2: T,
    /// Keep the base grid's central load region fixed on refined grids instead
    /// of loading the (shrinking) central element pair of every level.
    pub pin_load_region: bool,
}

/// Setup of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level<T> {
    pub level: usize,
    pub n_nodes: usize,
    pub tau: T,
    pub steps: usize,
}

/// Norms of `d_k = sol_{k+1} − sol_k`, reported with the finer level's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow<T> {
    pub k: usize,
    pub n_nodes: usize,
    pub tau: T,
    pub joint: Norms<T>,
    pub displacement: Norms<T>,
    pub velocity: Norms<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult<T> {
    pub levels: Vec<Level<T>>,
    pub rows: Vec<DiffRow<T>>,
    /// Fits for joint, displacement-only and velocity-only differences, each
    /// indexed like [`NormKind::ALL`].
    pub joint: [RateFit<T>; 3],
    pub displacement: [RateFit<T>; 3],
    pub velocity: [RateFit<T>; 3],
}

/// Displacement and velocity components at the baseline positions.
struct Sample<T> {
    disp: Vec<T>,
    vel: Vec<T>,
}

fn solve_level<T: Scalar>(spec: &StudySpec<T>, scenario: &Scenario<T>, baseline: &[[T; 2]], level: &Level<T>) -> Result<Sample<T>, StudyError> {
    let wrap = |source| StudyError::Level { level: level.level, source };
    let fine = spec.base.refined(level.level);
    let mesh = Mesh::structured(fine).map_err(|e| wrap(e.into()))?;
    let (hx, hy) = fine.spacing();
    let tol = T::lit(1e-12) * hx.min(hy);
    let ids = baseline
        .iter()
        .map(|&[x, y]| {
            mesh.find_node(x, y, tol).ok_or(StudyError::MissingNode {
                level: level.level,
                x: x.to_f64_lossy(),
                y: y.to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let params = NewmarkParams::new(spec.beta1, spec.beta2, level.tau).map_err(|e| wrap(e.into()))?;
    let mut sim = Simulation::new(mesh, spec.material, scenario, params).map_err(wrap)?;
    sim.advance(level.steps).map_err(wrap)?;
    let s = sim.state();
    let pick = |v: &[T]| ids.iter().flat_map(|&n| v[3 * n..3 * n + 3].to_vec()).collect();
    Ok(Sample {
        disp: pick(&s.a),
        vel: pick(&s.adot),
    })
}

/// The level schedule: `(nx, ny, τ₀, n₀)` doubled `k` times.
pub fn plan_levels<T: Scalar>(spec: &StudySpec<T>) -> Result<Vec<Level<T>>, StudyError> {
    if spec.k_max < 2 {
        return Err(StudyError::TooFewLevels(spec.k_max));
    }
    if !(spec.t_end > T::zero() && spec.t_end.is_finite()) {
        return Err(StudyError::FinalTime(spec.t_end.to_f64_lossy()));
    }
    let base_mesh = Mesh::structured(spec.base).map_err(ScenarioError::from)?;
    let rule = spec.tau0.unwrap_or_else(|| default_timestep(&base_mesh, &spec.material));
    let (n0, tau0) = fit_steps(spec.t_end, rule);
    Ok((0..=spec.k_max)
        .map(|k| {
            let scale = 1usize << k;
            Level {
                level: k,
                n_nodes: spec.base.refined(k).n_nodes(),
                tau: tau0 / T::from_count(scale),
                steps: n0 * scale,
            }
        })
        .collect())
}

/// Runs every level (concurrently) and fits rates.
pub fn run_study<T: Scalar>(spec: &StudySpec<T>) -> Result<StudyResult<T>, StudyError> {
    let levels = plan_levels(spec)?;
    spec.scenario.validate()?;
    let scenario = if spec.pin_load_region {
        spec.scenario.pinned_to(&spec.base)
    } else {
        spec.scenario.clone()
    };
    let base_mesh = Mesh::structured(spec.base).map_err(ScenarioError::from)?;
    let baseline: Vec<[T; 2]> = base_mesh.nodes().iter().map(|n| [n.x0, n.y0]).collect();

    let samples = levels
        .par_iter()
        .map(|lvl| solve_level(spec, &scenario, &baseline, lvl))
        .collect::<Result<Vec<_>, _>>()?;

    let diff = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x - y).collect::<Vec<T>>();
    let rows: Vec<DiffRow<T>> = samples
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let dd = diff(&w[1].disp, &w[0].disp);
            let dv = diff(&w[1].vel, &w[0].vel);
            let joint: Vec<T> = dd.iter().chain(&dv).copied().collect();
            DiffRow {
                k,
                n_nodes: levels[k + 1].n_nodes,
                tau: levels[k + 1].tau,
                joint: Norms::of(&joint),
                displacement: Norms::of(&dd),
                velocity: Norms::of(&dv),
            }
        })
        .collect();

    let fits = |pick: fn(&DiffRow<T>) -> Norms<T>| {
        NormKind::ALL.map(|kind| fit_rate(&rows.iter().map(|r| pick(r).get(kind)).collect::<Vec<_>>()))
    };
    Ok(StudyResult {
        joint: fits(|r| r.joint),
        displacement: fits(|r| r.displacement),
        velocity: fits(|r| r.velocity),
        levels,
        rows,
    })
}

fn fmt<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

fn log2_or_empty<T: Scalar>(x: T) -> String {
    if x > T::zero() {
        fmt(x.log2())
    } else {
        String::new()
    }
}

/// Study report: one row per difference level followed by a rate block.
pub fn study_csv<T: Scalar>(result: &StudyResult<T>) -> String {
    let mut out = String::from(
        "level,n_nodes,tau,L1,L2,Linf,log2_L1,log2_L2,log2_Linf,disp_L1,disp_L2,disp_Linf,vel_L1,vel_L2,vel_Linf\n",
    );
    for r in &result.rows {
        let j = r.joint;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.n_nodes,
            fmt(r.tau),
            fmt(j.l1),
            fmt(j.l2),
            fmt(j.linf),
            log2_or_empty(j.l1),
            log2_or_empty(j.l2),
            log2_or_empty(j.linf),
            fmt(r.displacement.l1),
            fmt(r.displacement.l2),
            fmt(r.displacement.linf),
            fmt(r.velocity.l1),
            fmt(r.velocity.l2),
            fmt(r.velocity.linf),
        );
    }
    out.push_str("\nrates,L1,L2,Linf\n");
    for (name, fits) in [
        ("joint", &result.joint),
        ("displacement", &result.displacement),
        ("velocity", &result.velocity),
    ] {
        let cells: Vec<String> = fits.iter().map(|f| f.rate.map(fmt).unwrap_or_default()).collect();
        let _ = writeln!(out, "{name},{}", cells.join(","));
    }
    out
}
