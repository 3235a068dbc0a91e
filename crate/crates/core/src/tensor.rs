//! Symmetric 2×2 tensor algebra: deviatoric/volumetric and signed spectral
//! splits used by the bulk energy densities.
//!
//! Everything is closed-form; no external linear algebra is involved. The
//! Frobenius inner product counts the off-diagonal entry twice, consistent
//! with storing only the upper triangle of a symmetric tensor.

/// Symmetric 2×2 tensor stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

/// Eigendecomposition of a [`SymTensor2`], ordered `values[0] >= values[1]`.
///
/// `vectors[i]` is the unit eigenvector for `values[i]`; the pair is
/// right-handed (`vectors[1]` is `vectors[0]` rotated by +90°).
#[derive(Debug, Clone, Copy)]
pub struct EigenPair2 {
    pub values: [f64; 2],
    pub vectors: [[f64; 2]; 2],
}

/// Result of the projection onto the positive-semidefinite cone.
///
/// `plus + minus == t` exactly (by construction `minus = t - plus`), `plus`
/// is PSD, `minus` is NSD, and the two are Frobenius-orthogonal.
#[derive(Debug, Clone, Copy)]
pub struct PsdSplit {
    pub plus: SymTensor2,
    pub minus: SymTensor2,
}

/// Relative spread below which eigenvalues are treated as repeated and the
/// eigenvectors snap to the coordinate axes. Keeps the decomposition
/// deterministic for near-spherical tensors.
pub const EIGEN_TIE_REL: f64 = 1e-14;

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymTensor2 { xx: a, yy: b, xy: 0.0 }
    }

    pub fn identity() -> Self {
        SymTensor2::diag(1.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Frobenius inner product; the off-diagonal entry counts twice.
    pub fn dot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    /// Squared Frobenius norm, `xx² + yy² + 2·xy²`.
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Trace-free part: `T - (tr T / 2)·I`.
    pub fn deviatoric(&self) -> SymTensor2 {
        let m = 0.5 * self.trace();
        SymTensor2 { xx: self.xx - m, yy: self.yy - m, xy: self.xy }
    }

    /// Splits the trace into positive and negative parts:
    /// returns `(d⁺, d⁻)` with `d⁺ - d⁻ = tr T`, both non-negative.
    pub fn trace_split(&self) -> (f64, f64) {
        let d = self.trace();
        (d.max(0.0), (-d).max(0.0))
    }

    pub fn scale(&self, s: f64) -> SymTensor2 {
        SymTensor2 { xx: s * self.xx, yy: s * self.yy, xy: s * self.xy }
    }

    pub fn add(&self, other: &SymTensor2) -> SymTensor2 {
        SymTensor2 {
            xx: self.xx + other.xx,
            yy: self.yy + other.yy,
            xy: self.xy + other.xy,
        }
    }

    pub fn sub(&self, other: &SymTensor2) -> SymTensor2 {
        SymTensor2 {
            xx: self.xx - other.xx,
            yy: self.yy - other.yy,
            xy: self.xy - other.xy,
        }
    }

    /// Closed-form eigendecomposition.
    ///
    /// For a near-repeated spectrum (`|λ₁-λ₂| < EIGEN_TIE_REL·‖T‖`) the
    /// eigenvectors are the coordinate axes.
    pub fn eigen(&self) -> EigenPair2 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = (half_diff * half_diff + self.xy * self.xy).sqrt();
        let values = [mean + radius, mean - radius];

        let spread = 2.0 * radius;
        let e1 = if spread < EIGEN_TIE_REL * self.norm() || spread == 0.0 {
            [1.0, 0.0]
        } else if self.xy.abs() > EIGEN_TIE_REL * self.norm() {
            // Eigenvector for λ₁ from whichever row of (T - λ₁I)v = 0 avoids
            // cancellation: λ₁ - yy = radius + half_diff and
            // λ₁ - xx = radius - half_diff, so keep the one whose difference
            // is a sum of non-negative terms.
            let v = if half_diff >= 0.0 {
                [radius + half_diff, self.xy]
            } else {
                [self.xy, radius - half_diff]
            };
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        } else if self.xx >= self.yy {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        EigenPair2 { values, vectors: [e1, [-e1[1], e1[0]]] }
    }

    /// Frobenius-nearest PSD tensor and its complement.
    ///
    /// Clamps the negative eigenvalues: `plus = Σ λᵢ⁺ eᵢ⊗eᵢ`, `minus = T - plus`.
    pub fn psd_project(&self) -> PsdSplit {
        let eig = self.eigen();
        let mut plus = SymTensor2::ZERO;
        for i in 0..2 {
            let lam = eig.values[i].max(0.0);
            if lam > 0.0 {
                let e = eig.vectors[i];
                plus.xx += lam * e[0] * e[0];
                plus.yy += lam * e[1] * e[1];
                plus.xy += lam * e[0] * e[1];
            }
        }
        PsdSplit { plus, minus: self.sub(&plus) }
    }
}

/// Symmetrized rank-one tensor `a ⊙ b = (a⊗b + b⊗a)/2`.
///
/// Its determinant is `-(a₀b₁ - a₁b₀)²/4 ≤ 0`, so a symmetrized rank-one
/// strain always has a non-positive determinant — the algebraic fact behind
/// jump-direction arguments on the crack set.
pub fn sym_rank_one(a: [f64; 2], b: [f64; 2]) -> SymTensor2 {
    SymTensor2 {
        xx: a[0] * b[0],
        yy: a[1] * b[1],
        xy: 0.5 * (a[0] * b[1] + a[1] * b[0]),
    }
}

impl std::ops::Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::add(&self, &rhs)
    }
}

impl std::ops::Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::sub(&self, &rhs)
    }
}

impl std::ops::Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, rhs: SymTensor2) -> SymTensor2 {
        rhs.scale(self)
    }
}
