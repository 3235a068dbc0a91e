//! Alternate minimization of the regularized fracture energy.
//!
//! The energy is separately convex in the displacement (for the volumetric
//! split stiffness in `[0, K]` and `λ >= 0`) and exactly quadratic in the
//! phase field, so the staggered scheme alternates two half-steps:
//!
//! - **displacement step** ([`minimize_u`]): semismooth Newton on the bulk
//!   energy (the surface part does not depend on `u`), each direction solved
//!   matrix-free by Jacobi-PCG, with Armijo backtracking. Kinks in the
//!   generalized tangent are handled by strict branch selection plus the
//!   line search; CG curvature breakdowns fall back to preconditioned
//!   steepest descent.
//! - **phase-field step** ([`minimize_v`]): the exact quadratic minimization,
//!   solved by Jacobi-PCG warm-started from the current phase field.
//!
//! Both half-steps are non-increasing in the total energy *by construction*:
//! the line search only accepts decreases, and CG decreases its quadratic —
//! which is assembled with the same 2×2 Gauss rule as
//! [`total_energy`](crate::energy::total_energy) — monotonically from the
//! warm start. [`SolveHistory::max_energy_increase`] lets callers audit this.
//!
//! Every floating-point reduction is deterministic: element loops write into
//! indexed buffers, nodal gathers visit adjacent elements in a fixed order,
//! and scalar reductions use pairwise summation. Results are bit-identical
//! across runs and thread counts.

mod cg;

use crate::energy::{
    bulk_density, driving, stress, stress_tangent, total_energy, EnergyBreakdown, ModelParams,
    Tangent,
};
use crate::grid::{
    strain_at_qp, value_and_grad_at_qp, BoundaryConditions, Field, Grid, QpBasis,
};
use crate::tensor::SymTensor2;
use crate::util::pairwise_sum;
use cg::{dot, pcg};
use rayon::prelude::*;

/// Tunable tolerances and iteration caps for the staggered solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Displacement step stops when `‖∇f‖∞ <= tol_grad·max(1, ‖∇f_entry‖∞)`.
    pub tol_grad: f64,
    /// Outer loop stops when the energy change per outer iteration drops
    /// below `tol_energy·(1 + |E|)`.
    pub tol_energy: f64,
    /// Outer loop alternative stop: `‖Δv‖∞` below this after a v-step.
    pub dv_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Relative residual target for both inner PCG solves.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Backtracking factor of the Armijo line search.
    pub ls_factor: f64,
    /// Armijo sufficient-decrease constant.
    pub ls_c1: f64,
    pub ls_max: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_grad: 1e-8,
            tol_energy: 1e-10,
            dv_tol: 1e-6,
            max_outer: 200,
            max_newton: 50,
            cg_tol: 1e-10,
            cg_max_iter: 20_000,
            ls_factor: 0.5,
            ls_c1: 1e-4,
            ls_max: 60,
        }
    }
}

/// Non-fatal solver events. The staggered scheme keeps the best iterate in
/// every case, so these flag reduced accuracy, not failure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveFlags {
    /// Inner CG hit non-positive curvature; a preconditioned steepest-descent
    /// direction was used instead.
    pub cg_fallback: bool,
    /// Inner CG ran out of iterations before reaching its residual target.
    pub cg_max_iter: bool,
    /// A displacement step used all Newton iterations without meeting the
    /// gradient tolerance.
    pub newton_stalled: bool,
    /// The Armijo search found no decrease; the displacement was left as-is.
    pub line_search_failed: bool,
    /// The outer loop hit `max_outer` without meeting a stopping rule.
    pub outer_max_reached: bool,
    /// The optional displacement bound clamped some nodal values (this
    /// voids the monotone-descent guarantee).
    pub clamped: bool,
}

impl SolveFlags {
    pub fn any(&self) -> bool {
        self.cg_fallback
            || self.cg_max_iter
            || self.newton_stalled
            || self.line_search_failed
            || self.outer_max_reached
            || self.clamped
    }

    pub fn merge(&mut self, other: SolveFlags) {
        self.cg_fallback |= other.cg_fallback;
        self.cg_max_iter |= other.cg_max_iter;
        self.newton_stalled |= other.newton_stalled;
        self.line_search_failed |= other.line_search_failed;
        self.outer_max_reached |= other.outer_max_reached;
        self.clamped |= other.clamped;
    }
}

/// Which half-step produced a history record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// State after boundary values and phase-field pins were applied, before
    /// any minimization.
    Init,
    UStep,
    VStep,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::UStep => "u_step",
            Stage::VStep => "v_step",
        }
    }
}

/// Energy snapshot after one half-step.
#[derive(Debug, Clone, Copy)]
pub struct HistoryRecord {
    pub outer: usize,
    pub stage: Stage,
    pub energy: EnergyBreakdown,
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// `‖Δv‖∞` of the step (phase-field steps only, else 0).
    pub max_dv: f64,
}

/// Full record of a staggered solve.
#[derive(Debug, Clone, Default)]
pub struct SolveHistory {
    pub records: Vec<HistoryRecord>,
    pub flags: SolveFlags,
    pub converged: bool,
    pub outer_iters: usize,
}

impl SolveHistory {
    pub fn final_energy(&self) -> EnergyBreakdown {
        self.records.last().map(|r| r.energy).unwrap_or_default()
    }

    /// Largest energy increase between consecutive half-steps. Should be
    /// bounded by round-off (`~1e-12·|E|`) unless a displacement clamp is
    /// active.
    pub fn max_energy_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].energy.total() - w[0].energy.total())
            .fold(0.0, f64::max)
    }
}

/// Report of a single half-step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub max_dv: f64,
    pub flags: SolveFlags,
}

// ---------------------------------------------------------------------------
// Deterministic element/node assembly helpers
// ---------------------------------------------------------------------------

/// Strain of a flat displacement vector (two interleaved components) at a
/// quadrature point.
fn strain_from_slice(p: &[f64], basis: &QpBasis, nodes: [usize; 4], q: usize) -> SymTensor2 {
    let mut xx = 0.0;
    let mut yy = 0.0;
    let mut xy = 0.0;
    for l in 0..4 {
        let px = p[2 * nodes[l]];
        let py = p[2 * nodes[l] + 1];
        xx += px * basis.dndx[q][l];
        yy += py * basis.dndy[q][l];
        xy += 0.5 * (px * basis.dndy[q][l] + py * basis.dndx[q][l]);
    }
    SymTensor2 { xx, yy, xy }
}

/// Phase 2 of the two-phase gather for two-component nodal vectors: sum the
/// per-element contributions adjacent to each node in ascending element
/// order, writing `fixed_value` at constrained dofs.
fn gather_vector(
    grid: &Grid,
    per_elem: &[[f64; 8]],
    bc: &BoundaryConditions,
    fixed_value: f64,
    out: &mut [f64],
) {
    out.par_chunks_mut(2).enumerate().for_each(|(node, chunk)| {
        let mut acc = [0.0; 2];
        for (e, l) in grid.node_elems(node) {
            acc[0] += per_elem[e][2 * l];
            acc[1] += per_elem[e][2 * l + 1];
        }
        for c in 0..2 {
            chunk[c] = if bc.is_fixed(2 * node + c) { fixed_value } else { acc[c] };
        }
    });
}

/// Scalar counterpart of [`gather_vector`] with a pinned-node mask.
fn gather_scalar(
    grid: &Grid,
    per_elem: &[[f64; 4]],
    pinned: &[bool],
    fixed_value: f64,
    out: &mut [f64],
) {
    out.par_iter_mut().enumerate().for_each(|(node, o)| {
        if pinned[node] {
            *o = fixed_value;
            return;
        }
        let mut acc = 0.0;
        for (e, l) in grid.node_elems(node) {
            acc += per_elem[e][l];
        }
        *o = acc;
    });
}

fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Displacement step
// ---------------------------------------------------------------------------

/// Bulk energy only (the part of the total that depends on `u`).
pub fn bulk_objective(params: &ModelParams, u_values: &[f64], v: &Field) -> f64 {
    let grid = v.grid();
    let basis = grid.qp_basis();
    let per_elem: Vec<f64> = (0..grid.n_elems())
        .into_par_iter()
        .map(|e| {
            let nodes = grid.elem_nodes(e);
            let mut acc = 0.0;
            for q in 0..4 {
                let strain = strain_from_slice(u_values, &basis, nodes, q);
                let (vv, _) = value_and_grad_at_qp(v, &basis, nodes, q);
                acc += basis.weight * bulk_density(params, &strain, vv).total();
            }
            acc
        })
        .collect();
    pairwise_sum(&per_elem)
}

/// Gradient of the bulk energy with respect to nodal displacements, zeroed
/// at constrained dofs.
pub fn bulk_gradient(
    params: &ModelParams,
    u_values: &[f64],
    v: &Field,
    bc: &BoundaryConditions,
    out: &mut [f64],
) {
    let grid = v.grid();
    let basis = grid.qp_basis();
    let per_elem: Vec<[f64; 8]> = (0..grid.n_elems())
        .into_par_iter()
        .map(|e| {
            let nodes = grid.elem_nodes(e);
            let mut local = [0.0; 8];
            for q in 0..4 {
                let strain = strain_from_slice(u_values, &basis, nodes, q);
                let (vv, _) = value_and_grad_at_qp(v, &basis, nodes, q);
                let s = stress(params, &strain, vv);
                for l in 0..4 {
                    local[2 * l] +=
                        basis.weight * (s.xx * basis.dndx[q][l] + s.xy * basis.dndy[q][l]);
                    local[2 * l + 1] +=
                        basis.weight * (s.xy * basis.dndx[q][l] + s.yy * basis.dndy[q][l]);
                }
            }
            local
        })
        .collect();
    gather_vector(&grid, &per_elem, bc, 0.0, out);
}

/// Matrix-free generalized-Hessian operator for the displacement step, with
/// tangents frozen at the current state.
struct UOperator<'a> {
    grid: Grid,
    basis: QpBasis,
    tangents: Vec<[Tangent; 4]>,
    bc: &'a BoundaryConditions,
    scratch: Vec<[f64; 8]>,
}

impl<'a> UOperator<'a> {
    fn new(params: &ModelParams, u_values: &[f64], v: &Field, bc: &'a BoundaryConditions) -> Self {
        let grid = v.grid();
        let basis = grid.qp_basis();
        let tangents: Vec<[Tangent; 4]> = (0..grid.n_elems())
            .into_par_iter()
            .map(|e| {
                let nodes = grid.elem_nodes(e);
                std::array::from_fn(|q| {
                    let strain = strain_from_slice(u_values, &basis, nodes, q);
                    let (vv, _) = value_and_grad_at_qp(v, &basis, nodes, q);
                    stress_tangent(params, &strain, vv)
                })
            })
            .collect();
        UOperator { grid, basis, tangents, bc, scratch: Vec::new() }
    }

    fn apply(&mut self, p: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let basis = &self.basis;
        let tangents = &self.tangents;
        (0..grid.n_elems())
            .into_par_iter()
            .map(|e| {
                let nodes = grid.elem_nodes(e);
                let mut local = [0.0; 8];
                for q in 0..4 {
                    let de = strain_from_slice(p, basis, nodes, q);
                    let ds = tangents[e][q].apply(&de);
                    for l in 0..4 {
                        local[2 * l] +=
                            basis.weight * (ds.xx * basis.dndx[q][l] + ds.xy * basis.dndy[q][l]);
                        local[2 * l + 1] +=
                            basis.weight * (ds.xy * basis.dndx[q][l] + ds.yy * basis.dndy[q][l]);
                    }
                }
                local
            })
            .collect_into_vec(&mut self.scratch);
        gather_vector(&grid, &self.scratch, self.bc, 0.0, out);
    }

    /// Operator diagonal for Jacobi preconditioning (1 at fixed dofs).
    fn diagonal(&self, out: &mut [f64]) {
        let grid = self.grid;
        let basis = &self.basis;
        let per_elem: Vec<[f64; 8]> = (0..grid.n_elems())
            .into_par_iter()
            .map(|e| {
                let mut local = [0.0; 8];
                for q in 0..4 {
                    let t = &self.tangents[e][q];
                    for l in 0..4 {
                        let bx = SymTensor2 {
                            xx: basis.dndx[q][l],
                            yy: 0.0,
                            xy: 0.5 * basis.dndy[q][l],
                        };
                        let by = SymTensor2 {
                            xx: 0.0,
                            yy: basis.dndy[q][l],
                            xy: 0.5 * basis.dndx[q][l],
                        };
                        local[2 * l] += basis.weight * t.apply(&bx).dot(&bx);
                        local[2 * l + 1] += basis.weight * t.apply(&by).dot(&by);
                    }
                }
                local
            })
            .collect();
        gather_vector(&grid, &per_elem, self.bc, 1.0, out);
    }
}

/// Minimizes the bulk energy over the displacement with the phase field
/// frozen. The iterate never moves uphill: Armijo accepts only decreases
/// (unless the optional nodal clamp is active, which is flagged).
pub fn minimize_u(
    params: &ModelParams,
    u: &mut Field,
    v: &Field,
    bc: &BoundaryConditions,
    opts: &SolveOptions,
) -> crate::Result<StepReport> {
    if u.grid() != v.grid() {
        return Err(crate::Error::GridMismatch(
            format!("{:?}", u.grid()),
            format!("{:?}", v.grid()),
        ));
    }
    let n_dofs = u.values().len();
    let mut report = StepReport::default();
    let mut g = vec![0.0; n_dofs];
    let mut p = vec![0.0; n_dofs];
    let mut diag = vec![0.0; n_dofs];
    let mut trial = vec![0.0; n_dofs];
    let mut dot_scratch = Vec::with_capacity(n_dofs);

    bulk_gradient(params, u.values(), v, bc, &mut g);
    let tol_eff = opts.tol_grad * linf(&g).max(1.0);
    let mut f_cur = bulk_objective(params, u.values(), v);

    for _ in 0..opts.max_newton {
        if linf(&g) <= tol_eff {
            return Ok(report);
        }
        report.newton_iters += 1;

        let mut op = UOperator::new(params, u.values(), v, bc);
        op.diagonal(&mut diag);
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        p.iter_mut().for_each(|x| *x = 0.0);
        let outcome = pcg(
            &mut |x, y| op.apply(x, y),
            &rhs,
            &mut p,
            &diag,
            opts.cg_tol,
            opts.cg_max_iter,
        );
        report.cg_iters += outcome.iters;
        report.flags.cg_max_iter |= !outcome.converged && !outcome.breakdown;

        let mut slope = dot(&g, &p, &mut dot_scratch);
        if outcome.breakdown || slope >= 0.0 {
            // Preconditioned steepest descent: guaranteed downhill.
            report.flags.cg_fallback = true;
            for i in 0..n_dofs {
                p[i] = if diag[i] > 0.0 { -g[i] / diag[i] } else { -g[i] };
            }
            slope = dot(&g, &p, &mut dot_scratch);
            if slope >= 0.0 {
                break;
            }
        }

        // Armijo backtracking on the bulk objective.
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..opts.ls_max {
            for i in 0..n_dofs {
                trial[i] = u.values()[i] + alpha * p[i];
            }
            let f_trial = bulk_objective(params, &trial, v);
            if f_trial <= f_cur + opts.ls_c1 * alpha * slope {
                accepted = Some(f_trial);
                break;
            }
            alpha *= opts.ls_factor;
        }
        let Some(f_new) = accepted else {
            report.flags.line_search_failed = true;
            return Ok(report);
        };
        u.values_mut().copy_from_slice(&trial);
        f_cur = f_new;

        if let Some(m) = params.m_bound {
            let mut clamped = false;
            for (i, val) in u.values_mut().iter_mut().enumerate() {
                if !bc.is_fixed(i) && val.abs() > m {
                    *val = val.clamp(-m, m);
                    clamped = true;
                }
            }
            if clamped {
                report.flags.clamped = true;
                f_cur = bulk_objective(params, u.values(), v);
            }
        }

        bulk_gradient(params, u.values(), v, bc, &mut g);
    }
    if linf(&g) > tol_eff {
        report.flags.newton_stalled = true;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Phase-field step
// ---------------------------------------------------------------------------

/// Matrix-free operator of the phase-field normal equations:
/// mass weighted by `a + G_c/(2ε)` plus `2·G_c·ε` times the stiffness.
struct VOperator<'a> {
    grid: Grid,
    basis: QpBasis,
    /// Per element and quadrature point: `driving + G_c/(2ε)`.
    mass_coeff: Vec<[f64; 4]>,
    kappa: f64,
    pinned: &'a [bool],
    scratch: Vec<[f64; 4]>,
}

impl<'a> VOperator<'a> {
    fn new(params: &ModelParams, u: &Field, pinned: &'a [bool]) -> Self {
        let grid = u.grid();
        let basis = grid.qp_basis();
        let shift = params.g_c / (2.0 * params.eps);
        let mass_coeff: Vec<[f64; 4]> = (0..grid.n_elems())
            .into_par_iter()
            .map(|e| {
                let nodes = grid.elem_nodes(e);
                std::array::from_fn(|q| {
                    let strain = strain_at_qp(u, &basis, nodes, q);
                    driving(params, &strain) + shift
                })
            })
            .collect();
        VOperator {
            grid,
            basis,
            mass_coeff,
            kappa: 2.0 * params.g_c * params.eps,
            pinned,
            scratch: Vec::new(),
        }
    }

    fn apply(&mut self, p: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let basis = &self.basis;
        let mass_coeff = &self.mass_coeff;
        let kappa = self.kappa;
        (0..grid.n_elems())
            .into_par_iter()
            .map(|e| {
                let nodes = grid.elem_nodes(e);
                let mut local = [0.0; 4];
                for q in 0..4 {
                    let mut vq = 0.0;
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for l in 0..4 {
                        let val = p[nodes[l]];
                        vq += val * basis.n[q][l];
                        gx += val * basis.dndx[q][l];
                        gy += val * basis.dndy[q][l];
                    }
                    for l in 0..4 {
                        local[l] += basis.weight
                            * (mass_coeff[e][q] * vq * basis.n[q][l]
                                + kappa * (gx * basis.dndx[q][l] + gy * basis.dndy[q][l]));
                    }
                }
                local
            })
            .collect_into_vec(&mut self.scratch);
        gather_scalar(&grid, &self.scratch, self.pinned, 0.0, out);
    }

    fn rhs(&self, params: &ModelParams, out: &mut [f64]) {
        let grid = self.grid;
        let basis = &self.basis;
        let shift = params.g_c / (2.0 * params.eps);
        let per_elem: Vec<[f64; 4]> = (0..grid.n_elems())
            .into_par_iter()
            .map(|_| {
                let mut local = [0.0; 4];
                for q in 0..4 {
                    for l in 0..4 {
                        local[l] += basis.weight * shift * basis.n[q][l];
                    }
                }
                local
            })
            .collect();
        gather_scalar(&grid, &per_elem, self.pinned, 0.0, out);
    }

    fn diagonal(&self, out: &mut [f64]) {
        let grid = self.grid;
        let basis = &self.basis;
        let kappa = self.kappa;
        let per_elem: Vec<[f64; 4]> = (0..grid.n_elems())
            .into_par_iter()
            .map(|e| {
                let mut local = [0.0; 4];
                for q in 0..4 {
                    for l in 0..4 {
                        local[l] += basis.weight
                            * (self.mass_coeff[e][q] * basis.n[q][l] * basis.n[q][l]
                                + kappa
                                    * (basis.dndx[q][l] * basis.dndx[q][l]
                                        + basis.dndy[q][l] * basis.dndy[q][l]));
                    }
                }
                local
            })
            .collect();
        gather_scalar(&grid, &per_elem, self.pinned, 1.0, out);
    }
}

/// Exact phase-field minimization with the displacement frozen. Nodes in
/// `pinned` stay at 0 (pre-existing cracks). Returns the usual report with
/// `max_dv = ‖Δv‖∞`.
pub fn minimize_v(
    params: &ModelParams,
    u: &Field,
    v: &mut Field,
    pinned: &[bool],
    opts: &SolveOptions,
) -> crate::Result<StepReport> {
    if u.grid() != v.grid() {
        return Err(crate::Error::GridMismatch(
            format!("{:?}", u.grid()),
            format!("{:?}", v.grid()),
        ));
    }
    assert_eq!(pinned.len(), v.values().len());
    let mut report = StepReport::default();
    for (node, &pin) in pinned.iter().enumerate() {
        if pin {
            v.values_mut()[node] = 0.0;
        }
    }
    let mut op = VOperator::new(params, u, pinned);
    let n = v.values().len();
    let mut rhs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    op.rhs(params, &mut rhs);
    op.diagonal(&mut diag);
    let old = v.values().to_vec();
    let outcome = pcg(
        &mut |x, y| op.apply(x, y),
        &rhs,
        v.values_mut(),
        &diag,
        opts.cg_tol,
        opts.cg_max_iter,
    );
    report.cg_iters = outcome.iters;
    report.flags.cg_max_iter |= !outcome.converged;
    report.max_dv = old
        .iter()
        .zip(v.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(report)
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

/// Staggered minimization of the total energy.
///
/// `bc` holds the (already resolved) displacement boundary conditions;
/// `v_pins` lists node indices where the phase field is held at 0 to model a
/// pre-existing crack. `u` and `v` are taken as warm starts and updated in
/// place. The history records the energy after every half-step, starting
/// with an `Init` record of the entry state.
pub fn alternate_minimize(
    params: &ModelParams,
    u: &mut Field,
    v: &mut Field,
    bc: &BoundaryConditions,
    v_pins: &[usize],
    opts: &SolveOptions,
) -> crate::Result<SolveHistory> {
    params.validate()?;
    if u.grid() != v.grid() {
        return Err(crate::Error::GridMismatch(
            format!("{:?}", u.grid()),
            format!("{:?}", v.grid()),
        ));
    }
    let grid = u.grid();
    let mut pinned = vec![false; grid.n_nodes()];
    for &node in v_pins {
        assert!(node < grid.n_nodes(), "phase-field pin out of range");
        pinned[node] = true;
        v.values_mut()[node] = 0.0;
    }
    bc.apply_to(u);

    let mut history = SolveHistory::default();
    let init = total_energy(params, u, v)?;
    history.records.push(HistoryRecord {
        outer: 0,
        stage: Stage::Init,
        energy: init,
        newton_iters: 0,
        cg_iters: 0,
        max_dv: 0.0,
    });
    let mut e_prev = init.total();

    for outer in 1..=opts.max_outer {
        history.outer_iters = outer;

        let u_rep = minimize_u(params, u, v, bc, opts)?;
        history.flags.merge(u_rep.flags);
        history.records.push(HistoryRecord {
            outer,
            stage: Stage::UStep,
            energy: total_energy(params, u, v)?,
            newton_iters: u_rep.newton_iters,
            cg_iters: u_rep.cg_iters,
            max_dv: 0.0,
        });

        let v_rep = minimize_v(params, u, v, &pinned, opts)?;
        history.flags.merge(v_rep.flags);
        let energy = total_energy(params, u, v)?;
        history.records.push(HistoryRecord {
            outer,
            stage: Stage::VStep,
            energy,
            newton_iters: 0,
            cg_iters: v_rep.cg_iters,
            max_dv: v_rep.max_dv,
        });

        let e_cur = energy.total();
        if (e_prev - e_cur).abs() <= opts.tol_energy * (1.0 + e_cur.abs())
            || v_rep.max_dv <= opts.dv_tol
        {
            history.converged = true;
            break;
        }
        e_prev = e_cur;
    }
    if !history.converged {
        history.flags.outer_max_reached = true;
    }
    Ok(history)
}
