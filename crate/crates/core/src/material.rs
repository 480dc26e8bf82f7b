//! Elasticity matrices and per-element physical parameters.
//!
//! Voigt ordering throughout the crate is `(xx, yy, zz, xy, yz, xz)`: the
//! three shear components come in the order xy, yz, xz, which differs from
//! the more common `(yz, xz, xy)` convention. Engineering shear strains are
//! used, so `σ = D ε` with `D` the 6×6 *stiffness* matrix. (Some texts call
//! this matrix the compliance matrix; it is not the inverse-stiffness one.)

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("Young's modulus must be positive and finite (got {0})")]
    YoungModulus(f64),
    #[error("Poisson's ratio must lie in (-1, 0.5) (got {0})")]
    PoissonRatio(f64),
    #[error("elasticity matrix is not positive definite: eigenvalue {eigenvalue:e} vs largest {largest:e}")]
    NotPositiveDefinite { eigenvalue: f64, largest: f64 },
    #[error("elasticity matrix entry ({0}, {1}) is out of range; indices run 1..=6")]
    IndexOutOfRange(usize, usize),
    #[error("non-finite elastic modulus at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
}

/// Smallest admissible eigenvalue, relative to the largest one.
pub const PD_RELATIVE_TOL: f64 = 1e-9;

/// Symmetric positive definite 6×6 stiffness matrix in Voigt order
/// `(xx, yy, zz, xy, yz, xz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticMatrix<T> {
    d: [[T; 6]; 6],
}

impl<T: Scalar> ElasticMatrix<T> {
    /// Isotropic material from Young's modulus and Poisson's ratio.
    pub fn isotropic(young: T, poisson: T) -> Result<Self, MaterialError> {
        if !(young.is_finite() && young > T::zero()) {
            return Err(MaterialError::YoungModulus(young.to_f64_lossy()));
        }
        if !(poisson > -T::one() && poisson < T::lit(0.5)) {
            return Err(MaterialError::PoissonRatio(poisson.to_f64_lossy()));
        }
        let one = T::one();
        let two = T::lit(2.0);
        let scale = young / ((one + poisson) * (one - two * poisson));
        let mut d = [[T::zero(); 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                d[i][j] = scale * if i == j { one - poisson } else { poisson };
            }
            d[i + 3][i + 3] = scale * (one - two * poisson) / two;
        }
        Self::checked(d)
    }

    /// General anisotropic material from the 21 upper-triangle moduli,
    /// row-major: `c11..c16, c22..c26, ..., c66`.
    pub fn anisotropic(upper: [T; 21]) -> Result<Self, MaterialError> {
        let mut d = [[T::zero(); 6]; 6];
        let mut k = 0;
        for i in 0..6 {
            for j in i..6 {
                if !upper[k].is_finite() {
                    return Err(MaterialError::NonFinite(i + 1, j + 1));
                }
                d[i][j] = upper[k];
                d[j][i] = upper[k];
                k += 1;
            }
        }
        Self::checked(d)
    }

    /// Builds from sparse `(i, j, value)` entries with 1-based Voigt indices.
    /// Unlisted entries are zero; `(i, j)` and `(j, i)` name the same modulus.
    pub fn from_entries(entries: &[(usize, usize, T)]) -> Result<Self, MaterialError> {
        let mut upper = [T::zero(); 21];
        for &(i, j, v) in entries {
            if !(1..=6).contains(&i) || !(1..=6).contains(&j) {
                return Err(MaterialError::IndexOutOfRange(i, j));
            }
            let (r, c) = if i <= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
            upper[upper_index(r, c)] = v;
        }
        Self::anisotropic(upper)
    }

    fn checked(d: [[T; 6]; 6]) -> Result<Self, MaterialError> {
        let eig = symmetric_eigenvalues(d);
        let largest = eig.iter().copied().fold(T::neg_infinity(), T::max);
        let smallest = eig.iter().copied().fold(T::infinity(), T::min);
        if !(largest > T::zero()) || smallest <= T::lit(PD_RELATIVE_TOL) * largest {
            return Err(MaterialError::NotPositiveDefinite {
                eigenvalue: smallest.to_f64_lossy(),
                largest: largest.to_f64_lossy(),
            });
        }
        Ok(Self { d })
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.d[i][j]
    }

    pub fn as_array(&self) -> &[[T; 6]; 6] {
        &self.d
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut d = self.d;
        d.iter_mut().flatten().for_each(|v| *v *= s);
        Self { d }
    }

    pub fn apply(&self, strain: &[T; 6]) -> [T; 6] {
        let mut out = [T::zero(); 6];
        for (i, row) in self.d.iter().enumerate() {
            out[i] = row.iter().zip(strain).map(|(&a, &b)| a * b).sum();
        }
        out
    }

    pub fn eigenvalues(&self) -> [T; 6] {
        symmetric_eigenvalues(self.d)
    }

    pub fn max_diagonal(&self) -> T {
        (0..6).map(|i| self.d[i][i]).fold(T::zero(), T::max)
    }
}

fn upper_index(r: usize, c: usize) -> usize {
    // rows before r hold 6 + 5 + ... + (7 - r) entries
    r * 6 - r * r.saturating_sub(1) / 2 + (c - r)
}

/// Eigenvalues of a symmetric 6×6 matrix by cyclic Jacobi rotations, sorted ascending.
fn symmetric_eigenvalues<T: Scalar>(mut a: [[T; 6]; 6]) -> [T; 6] {
    const N: usize = 6;
    for _sweep in 0..100 {
        let off: T = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: T = (0..N).map(|i| a[i][i] * a[i][i]).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig = [T::zero(); N];
    for i in 0..N {
        eig[i] = a[i][i];
    }
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Density, thickness and stiffness of one element (or a whole homogeneous membrane).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams<T> {
    pub rho: T,
    pub thickness: T,
    pub stiffness: ElasticMatrix<T>,
    pub strain_threshold: Option<T>,
    pub stress_threshold: Option<T>,
}

impl<T: Scalar> MaterialParams<T> {
    pub fn new(rho: T, thickness: T, stiffness: ElasticMatrix<T>) -> Result<Self, MaterialError> {
        for (name, value) in [("density", rho), ("thickness", thickness)] {
            if !(value.is_finite() && value > T::zero()) {
                return Err(MaterialError::NonPositive {
                    name,
                    value: value.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            rho,
            thickness,
            stiffness,
            strain_threshold: None,
            stress_threshold: None,
        })
    }

    pub fn with_thresholds(mut self, strain: Option<T>, stress: Option<T>) -> Self {
        self.strain_threshold = strain;
        self.stress_threshold = stress;
        self
    }

    /// Fastest bulk wave speed estimate `sqrt(max diag(D) / ρ)`.
    pub fn max_wave_speed(&self) -> T {
        (self.stiffness.max_diagonal() / self.rho).sqrt()
    }

    /// Speed of out-of-plane waves along x: `sqrt(D_xz,xz / ρ)`.
    pub fn transverse_speed_x(&self) -> T {
        (self.stiffness.get(5, 5) / self.rho).sqrt()
    }

    /// Speed of out-of-plane waves along y: `sqrt(D_yz,yz / ρ)`.
    pub fn transverse_speed_y(&self) -> T {
        (self.stiffness.get(4, 4) / self.rho).sqrt()
    }
}

/// The nine non-zero moduli (GPa) of the reference orthotropic-like composite.
pub const REFERENCE_COMPOSITE_GPA: [(usize, usize, f64); 9] = [
    (1, 1, 150.0),
    (1, 2, 40.0),
    (1, 3, 10.0),
    (2, 2, 150.0),
    (2, 3, 80.0),
    (3, 3, 150.0),
    (4, 4, 80.0),
    (5, 5, 20.0),
    (6, 6, 30.0),
];

/// The reference composite converted to Pa.
pub fn reference_composite<T: Scalar>() -> ElasticMatrix<T> {
    let entries: Vec<(usize, usize, T)> = REFERENCE_COMPOSITE_GPA
        .iter()
        .map(|&(i, j, v)| (i, j, T::lit(v * 1e9)))
        .collect();
    ElasticMatrix::from_entries(&entries).expect("reference composite is positive definite")
}
