//! Linear triangle kernels with three displacement components per vertex.
//!
//! Local DOF order is `(u_m, v_m, w_m, u_n, v_n, w_n, u_p, v_p, w_p)`. All
//! fields are constant through the thickness, so every volume integral is
//! `thickness × area integral`.

use thiserror::Error;

use crate::material::{ElasticMatrix, MaterialParams};
use crate::scalar::Scalar;

pub type Vec9<T> = [T; 9];
pub type Mat9<T> = [[T; 9]; 9];

/// Relative area threshold below which a triangle counts as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("triangle {triangle} is degenerate (doubled area {doubled_area:e}, longest edge² {edge2:e})")]
    Degenerate {
        triangle: usize,
        doubled_area: f64,
        edge2: f64,
    },
}

/// Coefficients of the linear shape functions `N_i = α_i + β_i x + γ_i y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeCoeffs<T> {
    pub alpha: [T; 3],
    pub beta: [T; 3],
    pub gamma: [T; 3],
    /// Signed doubled area `det[[1, x_i, y_i], ...]`.
    pub se: T,
}

impl<T: Scalar> ShapeCoeffs<T> {
    /// `triangle` only labels the error.
    pub fn new(coords: &[[T; 2]; 3], triangle: usize) -> Result<Self, ElementError> {
        let [[x1, y1], [x2, y2], [x3, y3]] = *coords;
        let se = (x2 * y3 - x3 * y2) - (x1 * y3 - x3 * y1) + (x1 * y2 - x2 * y1);
        let edge2 = [(0, 1), (1, 2), (2, 0)]
            .iter()
            .map(|&(a, b)| {
                let dx = coords[b][0] - coords[a][0];
                let dy = coords[b][1] - coords[a][1];
                dx * dx + dy * dy
            })
            .fold(T::zero(), T::max);
        if !(se.abs() > T::lit(DEGENERATE_TOL) * edge2) {
            return Err(ElementError::Degenerate {
                triangle,
                doubled_area: se.to_f64_lossy(),
                edge2: edge2.to_f64_lossy(),
            });
        }
        let mut alpha = [T::zero(); 3];
        let mut beta = [T::zero(); 3];
        let mut gamma = [T::zero(); 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let [xj, yj] = coords[j];
            let [xk, yk] = coords[k];
            alpha[i] = (xj * yk - xk * yj) / se;
            beta[i] = -(yk - yj) / se;
            gamma[i] = (xk - xj) / se;
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            se,
        })
    }

    pub fn area(&self) -> T {
        self.se.abs() * T::lit(0.5)
    }

    /// Shape function values at `(x, y)`.
    pub fn eval(&self, x: T, y: T) -> [T; 3] {
        let mut n = [T::zero(); 3];
        for i in 0..3 {
            n[i] = self.alpha[i] + self.beta[i] * x + self.gamma[i] * y;
        }
        n
    }
}

/// 6×9 strain-displacement matrix, rows in Voigt order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BMatrix<T> {
    pub b: [[T; 9]; 6],
}

impl<T: Scalar> BMatrix<T> {
    /// Per vertex the upper block maps `(u, v, w)` to `(ε_xx, ε_yy, ε_zz)` and the
    /// lower block to `(γ_xy, γ_yz, γ_xz)`; the `ε_zz` row stays zero.
    pub fn new(sc: &ShapeCoeffs<T>) -> Self {
        let mut b = [[T::zero(); 9]; 6];
        for i in 0..3 {
            let (be, ga) = (sc.beta[i], sc.gamma[i]);
            let c = 3 * i;
            b[0][c] = be;
            b[1][c + 1] = ga;
            b[3][c] = ga;
            b[3][c + 1] = be;
            b[4][c + 2] = ga;
            b[5][c + 2] = be;
        }
        Self { b }
    }

    pub fn strain(&self, a: &Vec9<T>) -> [T; 6] {
        let mut e = [T::zero(); 6];
        for (r, row) in self.b.iter().enumerate() {
            e[r] = row.iter().zip(a).map(|(&x, &y)| x * y).sum();
        }
        e
    }
}

/// `K_e = h·A·Bᵀ D B`; exact for constant-strain triangles.
pub fn element_stiffness<T: Scalar>(b: &BMatrix<T>, d: &ElasticMatrix<T>, thickness: T, area: T) -> Mat9<T> {
    // DB first (6×9), then Bᵀ(DB)
    let mut db = [[T::zero(); 9]; 6];
    for r in 0..6 {
        for c in 0..9 {
            let mut s = T::zero();
            for k in 0..6 {
                s += d.get(r, k) * b.b[k][c];
            }
            db[r][c] = s;
        }
    }
    let scale = thickness * area;
    let mut ke = [[T::zero(); 9]; 9];
    for i in 0..9 {
        for j in i..9 {
            let mut s = T::zero();
            for k in 0..6 {
                s += b.b[k][i] * db[k][j];
            }
            ke[i][j] = s * scale;
            ke[j][i] = ke[i][j];
        }
    }
    ke
}

/// Consistent mass: vertex block `(i, j)` is `ρ h A / 12 · (1 + δ_ij) · I₃`.
pub fn element_mass<T: Scalar>(rho: T, thickness: T, area: T) -> Mat9<T> {
    let m = rho * thickness * area / T::lit(12.0);
    let mut me = [[T::zero(); 9]; 9];
    for i in 0..3 {
        for j in 0..3 {
            let f = if i == j { m + m } else { m };
            for c in 0..3 {
                me[3 * i + c][3 * j + c] = f;
            }
        }
    }
    me
}

/// `f_e = -(h A / 3) (b, b, b)` for a force density `b` (N/m³) uniform over the element.
pub fn element_load<T: Scalar>(b: [T; 3], thickness: T, area: T) -> Vec9<T> {
    let s = -thickness * area / T::lit(3.0);
    let mut fe = [T::zero(); 9];
    for i in 0..3 {
        for c in 0..3 {
            fe[3 * i + c] = s * b[c];
        }
    }
    fe
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrices<T> {
    pub ke: Mat9<T>,
    pub me: Mat9<T>,
    pub fe: Vec9<T>,
}

impl<T: Scalar> ElementMatrices<T> {
    pub fn new(
        coords: &[[T; 2]; 3],
        material: &MaterialParams<T>,
        body_force: [T; 3],
        triangle: usize,
    ) -> Result<Self, ElementError> {
        let sc = ShapeCoeffs::new(coords, triangle)?;
        let area = sc.area();
        let b = BMatrix::new(&sc);
        Ok(Self {
            ke: element_stiffness(&b, &material.stiffness, material.thickness, area),
            me: element_mass(material.rho, material.thickness, area),
            fe: element_load(body_force, material.thickness, area),
        })
    }

    /// Nodal forces `M_e ä + K_e a + f_e` that balance this element against its
    /// neighbours. They cancel on assembly for an interior equilibrium state.
    pub fn balancing_forces(&self, a: &Vec9<T>, addot: &Vec9<T>) -> Vec9<T> {
        let mut q = self.fe;
        for i in 0..9 {
            for j in 0..9 {
                q[i] += self.me[i][j] * addot[j] + self.ke[i][j] * a[j];
            }
        }
        q
    }
}

/// Constant strain and stress of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementResponse<T> {
    pub strain: [T; 6],
    pub stress: [T; 6],
}

impl<T: Scalar> ElementResponse<T> {
    pub fn recover(sc: &ShapeCoeffs<T>, d: &ElasticMatrix<T>, a: &Vec9<T>) -> Self {
        let strain = BMatrix::new(sc).strain(a);
        Self {
            strain,
            stress: d.apply(&strain),
        }
    }

    /// `true` when any strain component exceeds the threshold in magnitude.
    pub fn exceeds_strain(&self, threshold: Option<T>) -> bool {
        threshold.is_some_and(|t| self.strain.iter().any(|e| e.abs() > t))
    }

    pub fn exceeds_stress(&self, threshold: Option<T>) -> bool {
        threshold.is_some_and(|t| self.stress.iter().any(|s| s.abs() > t))
    }
}
