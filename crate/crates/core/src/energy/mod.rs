//! Regularized fracture energies with unilateral crack-opening constraints.
//!
//! The total energy of a displacement `u` and phase field `v ∈ [0, 1]` is
//!
//! ```text
//! E(u, v) = ∫ bulk(E(u), v) dx + G_c ∫ ε|∇v|² + (1 - v)²/(4ε) dx
//! ```
//!
//! where the bulk density splits into a part degraded by `(η + v²)` and a
//! part that survives at `v = 0`. The surviving part is what enforces the
//! constraint on the crack opening as `ε → 0`:
//!
//! - [`Variant::NonInterpenetration`]: positive volumetric strain is degraded,
//!   negative volumetric strain is not — cracks may open but not overlap.
//!   A stiffness `k ∈ [0, K]` interpolates how much of the volumetric response
//!   is exposed to the split; `k = K` is the canonical model.
//! - [`Variant::ShearOnly`]: the full volumetric response is retained, only
//!   deviatoric strain is degraded — cracks slip without opening.
//! - [`Variant::Masonry`]: the positive-semidefinite part of the strain is
//!   degraded, the negative part is not — openings aligned with the normal.
//!
//! With `v ≡ 1` and `η = 0` every variant reduces exactly to the sharp
//! elastic density `½(2μ|dev E|² + K(tr E)²)`.

mod sharp;

pub use sharp::{
    sharp_energy, ConstraintReport, CrackPath, CrackSegment, SharpConfig, SharpDisplacement,
    SharpEnergy,
};

use crate::grid::{strain_at_qp, value_and_grad_at_qp, Field};
use crate::tensor::SymTensor2;
use crate::util::pairwise_sum_arrays;
use rayon::prelude::*;

/// Which unilateral constraint the regularized energy encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    NonInterpenetration,
    ShearOnly,
    Masonry,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::NonInterpenetration => "non_interpenetration",
            Variant::ShearOnly => "shear_only",
            Variant::Masonry => "masonry",
        }
    }
}

/// Material and regularization parameters.
///
/// `mu` is the shear modulus, `bulk_k` the plane bulk modulus
/// (`K = λ + μ` in 2-D, so `lambda() = bulk_k - mu`), `g_c` the fracture
/// toughness. `eps` is the regularization length and `eta` the residual
/// stiffness of fully broken material. `k_interp` is the volumetric split
/// stiffness of the non-interpenetration variant (defaults to `bulk_k`).
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub variant: Variant,
    pub mu: f64,
    pub bulk_k: f64,
    pub k_interp: f64,
    pub g_c: f64,
    pub eps: f64,
    pub eta: f64,
    /// Optional clamp on nodal displacement components applied after each
    /// displacement step. Disabled by default; it breaks the monotone-descent
    /// guarantee and exists for exploratory runs only.
    pub m_bound: Option<f64>,
}

impl Default for ModelParams {
    /// Normalized defaults: `μ = 1`, `K = 2`, `G_c = 1`.
    fn default() -> Self {
        ModelParams {
            variant: Variant::NonInterpenetration,
            mu: 1.0,
            bulk_k: 2.0,
            k_interp: 2.0,
            g_c: 1.0,
            eps: 0.05,
            eta: 1e-6,
            m_bound: None,
        }
    }
}

impl ModelParams {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_regularization(mut self, eps: f64, eta: f64) -> Self {
        self.eps = eps;
        self.eta = eta;
        self
    }

    pub fn with_toughness(mut self, g_c: f64) -> Self {
        self.g_c = g_c;
        self
    }

    pub fn with_k_interp(mut self, k: f64) -> Self {
        self.k_interp = k;
        self
    }

    /// First Lamé parameter in plane (2-D) normalization.
    pub fn lambda(&self) -> f64 {
        self.bulk_k - self.mu
    }

    /// Validates ranges; returns non-fatal warnings (e.g. `eta > eps`).
    pub fn validate(&self) -> crate::Result<Vec<String>> {
        if !(self.mu > 0.0) {
            return Err(crate::Error::InvalidParams(format!("mu = {} must be > 0", self.mu)));
        }
        if !(self.bulk_k > 0.0) {
            return Err(crate::Error::InvalidParams(format!(
                "bulk_k = {} must be > 0 (lambda > -mu)",
                self.bulk_k
            )));
        }
        if !(0.0..=self.bulk_k).contains(&self.k_interp) {
            return Err(crate::Error::InvalidParams(format!(
                "k_interp = {} must lie in [0, bulk_k = {}]",
                self.k_interp, self.bulk_k
            )));
        }
        if !(self.g_c > 0.0) {
            return Err(crate::Error::InvalidParams(format!("g_c = {} must be > 0", self.g_c)));
        }
        if !(self.eps > 0.0) {
            return Err(crate::Error::InvalidParams(format!("eps = {} must be > 0", self.eps)));
        }
        if self.eta < 0.0 {
            return Err(crate::Error::InvalidParams(format!("eta = {} must be >= 0", self.eta)));
        }
        let mut warnings = Vec::new();
        if self.eta > self.eps {
            warnings.push(format!(
                "eta = {} exceeds eps = {}: residual stiffness should vanish faster than the regularization length",
                self.eta, self.eps
            ));
        }
        if self.variant == Variant::Masonry && self.lambda() < 0.0 {
            warnings.push(format!(
                "masonry with lambda = {} < 0: the bulk density is no longer convex in the strain",
                self.lambda()
            ));
        }
        Ok(warnings)
    }
}

/// Bulk density split into degraded and surviving parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkDensity {
    /// Part multiplied by `(η + v²)`.
    pub modulated: f64,
    /// Part that persists at `v = 0`.
    pub unmodulated: f64,
}

impl BulkDensity {
    pub fn total(&self) -> f64 {
        self.modulated + self.unmodulated
    }
}

/// Driving coefficient `a(E)`: the factor of `½ v²` in the bulk density.
///
/// This is what the phase field "sees"; compressive states produce `a = 0`
/// for the non-interpenetration variant and the phase field stays at 1.
pub fn driving(params: &ModelParams, strain: &SymTensor2) -> f64 {
    match params.variant {
        Variant::NonInterpenetration => {
            let dev = strain.deviatoric();
            let (dp, _) = strain.trace_split();
            2.0 * params.mu * dev.norm_sq() + params.k_interp * dp * dp
        }
        Variant::ShearOnly => {
            let dev = strain.deviatoric();
            2.0 * params.mu * dev.norm_sq()
        }
        Variant::Masonry => {
            let split = strain.psd_project();
            let trp = split.plus.trace();
            2.0 * params.mu * split.plus.norm_sq() + params.lambda() * trp * trp
        }
    }
}

/// Bulk energy density at a point.
pub fn bulk_density(params: &ModelParams, strain: &SymTensor2, v: f64) -> BulkDensity {
    let mod_factor = params.eta + v * v;
    let a = driving(params, strain);
    let unmodulated = match params.variant {
        Variant::NonInterpenetration => {
            let d = strain.trace();
            let (_, dm) = strain.trace_split();
            0.5 * ((params.bulk_k - params.k_interp) * d * d + params.k_interp * dm * dm)
        }
        Variant::ShearOnly => {
            let d = strain.trace();
            0.5 * params.bulk_k * d * d
        }
        Variant::Masonry => {
            let split = strain.psd_project();
            let trm = split.minus.trace();
            0.5 * (2.0 * params.mu * split.minus.norm_sq() + params.lambda() * trm * trm)
        }
    };
    BulkDensity { modulated: 0.5 * mod_factor * a, unmodulated }
}

/// Elastic density of the intact sharp material (no damage, no residual
/// stiffness). For the non-interpenetration and shear variants this is the
/// isotropic `½(2μ|dev E|² + K (tr E)²)`; the masonry variant keeps its
/// tension/compression split even when intact, so its sharp density is the
/// `v = 1`, `η = 0` limit of [`bulk_density`].
pub fn sharp_elastic_density(params: &ModelParams, strain: &SymTensor2) -> f64 {
    match params.variant {
        Variant::NonInterpenetration | Variant::ShearOnly => {
            let dev = strain.deviatoric();
            let d = strain.trace();
            0.5 * (2.0 * params.mu * dev.norm_sq() + params.bulk_k * d * d)
        }
        Variant::Masonry => {
            let split = strain.psd_project();
            let (trp, trm) = (split.plus.trace(), split.minus.trace());
            0.5 * (2.0 * params.mu * (split.plus.norm_sq() + split.minus.norm_sq())
                + params.lambda() * (trp * trp + trm * trm))
        }
    }
}

/// Surface density split `(G_c·ε|∇v|², G_c·(1-v)²/(4ε))`.
pub fn surface_density(params: &ModelParams, v: f64, grad_v: [f64; 2]) -> (f64, f64) {
    let grad_sq = grad_v[0] * grad_v[0] + grad_v[1] * grad_v[1];
    let one_minus = 1.0 - v;
    (
        params.g_c * params.eps * grad_sq,
        params.g_c * one_minus * one_minus / (4.0 * params.eps),
    )
}

/// Stress `∂(bulk density)/∂E`. Continuous across the volumetric sign change
/// for the non-interpenetration and shear variants.
pub fn stress(params: &ModelParams, strain: &SymTensor2, v: f64) -> SymTensor2 {
    let m = params.eta + v * v;
    match params.variant {
        Variant::NonInterpenetration => {
            let dev = strain.deviatoric();
            let d = strain.trace();
            let (dp, dm) = strain.trace_split();
            // dm is the magnitude of the negative part, so its square's
            // derivative enters with a minus sign; at d < 0 the three terms
            // collapse to the full stiffness K·d.
            let iso = m * params.k_interp * dp
                + (params.bulk_k - params.k_interp) * d
                - params.k_interp * dm;
            SymTensor2 {
                xx: m * 2.0 * params.mu * dev.xx + iso,
                yy: m * 2.0 * params.mu * dev.yy + iso,
                xy: m * 2.0 * params.mu * dev.xy,
            }
        }
        Variant::ShearOnly => {
            let dev = strain.deviatoric();
            let iso = params.bulk_k * strain.trace();
            SymTensor2 {
                xx: m * 2.0 * params.mu * dev.xx + iso,
                yy: m * 2.0 * params.mu * dev.yy + iso,
                xy: m * 2.0 * params.mu * dev.xy,
            }
        }
        Variant::Masonry => {
            let split = strain.psd_project();
            let eig = strain.eigen();
            let lambda = params.lambda();
            let trp = split.plus.trace();
            let trm = split.minus.trace();
            let mut s = split.plus.scale(m * 2.0 * params.mu).add(&split.minus.scale(2.0 * params.mu));
            // Projectors onto the strictly positive / negative eigenspaces.
            for i in 0..2 {
                let e = eig.vectors[i];
                let proj = SymTensor2 {
                    xx: e[0] * e[0],
                    yy: e[1] * e[1],
                    xy: e[0] * e[1],
                };
                if eig.values[i] > 0.0 {
                    s = s.add(&proj.scale(m * lambda * trp));
                } else if eig.values[i] < 0.0 {
                    s = s.add(&proj.scale(lambda * trm));
                }
            }
            s
        }
    }
}

/// Generalized tangent of the stress, used as the Newton operator.
///
/// Branch selection at kinks is strict (`d > 0`, `d < 0`, eigenvalue `> 0`),
/// which keeps the operator positive semidefinite for `k ∈ [0, K]` and
/// `λ >= 0`; a backtracking line search guards the remaining nonsmoothness.
#[derive(Debug, Clone, Copy)]
pub enum Tangent {
    /// `Δ ↦ dev_factor·dev Δ + iso_factor·tr(Δ)·I`
    Isotropic { dev_factor: f64, iso_factor: f64 },
    /// Spectral form in the eigenframe of the reference strain.
    Spectral {
        /// cos/sin of the eigenframe angle (first eigenvector).
        frame: [f64; 2],
        /// Diagonal response (modulated+unmodulated) per eigendirection.
        diag: [f64; 2],
        /// Off-diagonal (shear) response within the frame.
        shear: f64,
        /// Rank-one volumetric coupling: coefficient and frame-diagonal mask.
        rank_one: [(f64, [f64; 2]); 2],
    },
}

/// Tangent of [`stress`] at the given state.
pub fn stress_tangent(params: &ModelParams, strain: &SymTensor2, v: f64) -> Tangent {
    let m = params.eta + v * v;
    match params.variant {
        Variant::NonInterpenetration => {
            let d = strain.trace();
            let mut iso = params.bulk_k - params.k_interp;
            if d > 0.0 {
                iso += m * params.k_interp;
            } else if d < 0.0 {
                iso += params.k_interp;
            }
            Tangent::Isotropic { dev_factor: m * 2.0 * params.mu, iso_factor: iso }
        }
        Variant::ShearOnly => Tangent::Isotropic {
            dev_factor: m * 2.0 * params.mu,
            iso_factor: params.bulk_k,
        },
        Variant::Masonry => {
            let eig = strain.eigen();
            let (l1, l2) = (eig.values[0], eig.values[1]);
            let hp = [if l1 > 0.0 { 1.0 } else { 0.0 }, if l2 > 0.0 { 1.0 } else { 0.0 }];
            let hm = [if l1 < 0.0 { 1.0 } else { 0.0 }, if l2 < 0.0 { 1.0 } else { 0.0 }];
            let theta_p = if l1 > l2 {
                (l1.max(0.0) - l2.max(0.0)) / (l1 - l2)
            } else {
                hp[0]
            };
            let theta_m = 1.0 - theta_p;
            let two_mu = 2.0 * params.mu;
            let lambda = params.lambda();
            Tangent::Spectral {
                frame: eig.vectors[0],
                diag: [
                    m * two_mu * hp[0] + two_mu * hm[0],
                    m * two_mu * hp[1] + two_mu * hm[1],
                ],
                shear: m * two_mu * theta_p + two_mu * theta_m,
                rank_one: [(m * lambda, hp), (lambda, hm)],
            }
        }
    }
}

impl Tangent {
    /// Apply the tangent to a strain increment.
    pub fn apply(&self, delta: &SymTensor2) -> SymTensor2 {
        match *self {
            Tangent::Isotropic { dev_factor, iso_factor } => {
                let dev = delta.deviatoric();
                let iso = iso_factor * delta.trace();
                SymTensor2 {
                    xx: dev_factor * dev.xx + iso,
                    yy: dev_factor * dev.yy + iso,
                    xy: dev_factor * dev.xy,
                }
            }
            Tangent::Spectral { frame, diag, shear, rank_one } => {
                let [c, s] = frame;
                // Rotate into the eigenframe.
                let d11 = c * c * delta.xx + 2.0 * c * s * delta.xy + s * s * delta.yy;
                let d22 = s * s * delta.xx - 2.0 * c * s * delta.xy + c * c * delta.yy;
                let d12 = (delta.yy - delta.xx) * c * s + delta.xy * (c * c - s * s);
                let mut y11 = diag[0] * d11;
                let mut y22 = diag[1] * d22;
                let y12 = shear * d12;
                for (coef, mask) in rank_one {
                    let tr = mask[0] * d11 + mask[1] * d22;
                    y11 += coef * tr * mask[0];
                    y22 += coef * tr * mask[1];
                }
                // Rotate back.
                SymTensor2 {
                    xx: c * c * y11 + s * s * y22 - 2.0 * c * s * y12,
                    yy: s * s * y11 + c * c * y22 + 2.0 * c * s * y12,
                    xy: c * s * (y11 - y22) + (c * c - s * s) * y12,
                }
            }
        }
    }
}

/// Energy split of a state: two bulk and two surface buckets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub bulk_modulated: f64,
    pub bulk_unmodulated: f64,
    pub surface_gradient: f64,
    pub surface_well: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.bulk_modulated + self.bulk_unmodulated + self.surface_gradient + self.surface_well
    }

    pub fn bulk(&self) -> f64 {
        self.bulk_modulated + self.bulk_unmodulated
    }

    pub fn surface(&self) -> f64 {
        self.surface_gradient + self.surface_well
    }
}

/// Total regularized energy of the pair `(u, v)` by element-wise 2×2 Gauss
/// quadrature.
///
/// The element contributions are computed in parallel into an indexed buffer
/// and folded with a deterministic pairwise sum, so the result is bit-stable
/// across runs and thread counts.
pub fn total_energy(params: &ModelParams, u: &Field, v: &Field) -> crate::Result<EnergyBreakdown> {
    if u.grid() != v.grid() {
        return Err(crate::Error::GridMismatch(
            format!("{:?}", u.grid()),
            format!("{:?}", v.grid()),
        ));
    }
    assert_eq!(u.components(), 2, "displacement must have two components");
    assert_eq!(v.components(), 1, "phase field must be scalar");
    let grid = u.grid();
    let basis = grid.qp_basis();
    let per_elem: Vec<[f64; 4]> = (0..grid.n_elems())
        .into_par_iter()
        .map(|e| {
            let nodes = grid.elem_nodes(e);
            let mut acc = [0.0; 4];
            for q in 0..4 {
                let strain = strain_at_qp(u, &basis, nodes, q);
                let (vv, gv) = value_and_grad_at_qp(v, &basis, nodes, q);
                let b = bulk_density(params, &strain, vv);
                let (sg, sw) = surface_density(params, vv, gv);
                acc[0] += basis.weight * b.modulated;
                acc[1] += basis.weight * b.unmodulated;
                acc[2] += basis.weight * sg;
                acc[3] += basis.weight * sw;
            }
            acc
        })
        .collect();
    let [bm, bu, sg, sw] = pairwise_sum_arrays(&per_elem);
    Ok(EnergyBreakdown {
        bulk_modulated: bm,
        bulk_unmodulated: bu,
        surface_gradient: sg,
        surface_well: sw,
    })
}
