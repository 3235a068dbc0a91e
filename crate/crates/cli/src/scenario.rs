//! Scenario dispatch: builds model, grid and solver settings from a parsed
//! config, runs the requested computation, and packages results plus a
//! machine-checkable verification verdict.

use crate::config::Config;
use crate::output::{energy_history_csv, vtk_snapshot, Summary};
use fissura::affine::{run_trials, SampleGrid, TrialConfig};
use fissura::energy::{
    bulk_density, driving, CrackPath, CrackSegment, SharpConfig, SharpDisplacement,
};
use fissura::recovery::{profile_energy_halfline, recovery_energy_check, RecoveryParams};
use fissura::solver::alternate_minimize;
use fissura::{DirichletSpec, Field, Grid, ModelParams, SolveOptions, SymTensor2, Variant};

/// Two-sided optimal-profile energy must match the toughness this closely.
const PROFILE_TOL: f64 = 1e-6;
/// Additive budget on the recovery ratio beyond `1 + l/2`.
const RECOVERY_CRUMB: f64 = 0.10;
/// L2 bound on the negative part of the smoothed opening's divergence.
const DIV_MINUS_TOL: f64 = 1e-10;
/// The constant-phase-field affine competitor is admissible, so the solved
/// energy may exceed it only by round-off.
const UPPER_BOUND_SLACK: f64 = 1e-9;
/// Intactness threshold for the compression scenario.
const COMPRESSION_MIN_V: f64 = 0.99;
/// Rescaling-trial tolerances (round-off allowances on exact inequalities).
const TRIAL_EXCESS_TOL: f64 = 1e-12;

pub enum ScenarioError {
    /// Malformed or inconsistent configuration (exit code 3).
    Config(String),
    /// The computation ran but failed convergence or verification (exit 2).
    Run(String),
}

impl ScenarioError {
    fn config(msg: impl Into<String>) -> ScenarioError {
        ScenarioError::Config(msg.into())
    }
}

/// Everything a scenario produces; the caller decides where it goes.
pub struct RunArtifacts {
    pub summary: Summary,
    pub vtk: Option<String>,
    pub csv: Option<String>,
    pub warnings: Vec<String>,
}

pub fn run_scenario(cfg: &Config) -> Result<RunArtifacts, ScenarioError> {
    let kind = cfg
        .require("scenario", "kind")
        .map_err(ScenarioError::config)?;
    match kind {
        "tension" | "compression" | "shear_patch" | "precracked_plate" => solve_scenario(cfg, kind),
        "calibration" => calibration(cfg),
        "recovery_check" => recovery_check(cfg),
        "lemma_check" => lemma_check(cfg),
        other => Err(ScenarioError::config(format!(
            "unknown scenario.kind `{other}` (expected tension, compression, shear_patch, \
             precracked_plate, calibration, recovery_check or lemma_check)"
        ))),
    }
}

fn parse_variant(cfg: &Config) -> Result<Variant, ScenarioError> {
    match cfg.get("model", "variant") {
        None | Some("non_interpenetration") => Ok(Variant::NonInterpenetration),
        Some("shear_only") => Ok(Variant::ShearOnly),
        Some("masonry") => Ok(Variant::Masonry),
        Some(other) => Err(ScenarioError::config(format!(
            "unknown model.variant `{other}` (expected non_interpenetration, shear_only or masonry)"
        ))),
    }
}

fn parse_model(cfg: &Config) -> Result<ModelParams, ScenarioError> {
    let defaults = ModelParams::default();
    let params = ModelParams {
        variant: parse_variant(cfg)?,
        mu: cfg.parse_or("model", "mu", defaults.mu).map_err(ScenarioError::config)?,
        bulk_k: cfg.parse_or("model", "bulk_k", defaults.bulk_k).map_err(ScenarioError::config)?,
        k_interp: cfg
            .parse_or("model", "k_interp", defaults.k_interp)
            .map_err(ScenarioError::config)?,
        g_c: cfg.parse_or("model", "g_c", defaults.g_c).map_err(ScenarioError::config)?,
        eps: cfg.parse_or("model", "eps", defaults.eps).map_err(ScenarioError::config)?,
        eta: cfg.parse_or("model", "eta", defaults.eta).map_err(ScenarioError::config)?,
        m_bound: None,
    };
    // Surface validation early so bad values exit with the config code
    // instead of surfacing mid-solve.
    params
        .validate()
        .map_err(|e| ScenarioError::config(e.to_string()))?;
    Ok(params)
}

fn parse_grid(cfg: &Config) -> Result<Grid, ScenarioError> {
    let nx: usize = cfg.parse_or("grid", "nx", 64).map_err(ScenarioError::config)?;
    let ny: usize = cfg.parse_or("grid", "ny", 64).map_err(ScenarioError::config)?;
    let lx: f64 = cfg.parse_or("grid", "lx", 1.0).map_err(ScenarioError::config)?;
    let ly: f64 = cfg.parse_or("grid", "ly", 1.0).map_err(ScenarioError::config)?;
    if nx < 2 || ny < 2 {
        return Err(ScenarioError::config(format!(
            "grid must be at least 2x2 elements (got {nx}x{ny})"
        )));
    }
    if !(lx > 0.0 && ly > 0.0) {
        return Err(ScenarioError::config(format!(
            "grid side lengths must be positive (got {lx} x {ly})"
        )));
    }
    Ok(Grid::new(nx, ny, lx, ly))
}

fn parse_solver(cfg: &Config) -> Result<SolveOptions, ScenarioError> {
    let d = SolveOptions::default();
    Ok(SolveOptions {
        tol_grad: cfg.parse_or("solver", "tol_grad", d.tol_grad).map_err(ScenarioError::config)?,
        tol_energy: cfg
            .parse_or("solver", "tol_energy", d.tol_energy)
            .map_err(ScenarioError::config)?,
        dv_tol: cfg.parse_or("solver", "dv_tol", d.dv_tol).map_err(ScenarioError::config)?,
        max_outer: cfg
            .parse_or("solver", "max_outer", d.max_outer)
            .map_err(ScenarioError::config)?,
        max_newton: cfg
            .parse_or("solver", "max_newton", d.max_newton)
            .map_err(ScenarioError::config)?,
        cg_tol: cfg.parse_or("solver", "cg_tol", d.cg_tol).map_err(ScenarioError::config)?,
        cg_max_iter: cfg
            .parse_or("solver", "cg_max_iter", d.cg_max_iter)
            .map_err(ScenarioError::config)?,
        ..d
    })
}

/// The phase field cannot resolve a transition narrower than a couple of
/// grid spacings; below 2h the discrete surface energy is meaningless.
fn check_resolution(
    params: &ModelParams,
    grid: &Grid,
    warnings: &mut Vec<String>,
) -> Result<(), ScenarioError> {
    let h = grid.hx().max(grid.hy());
    if params.eps < 2.0 * h {
        return Err(ScenarioError::config(format!(
            "model.eps = {} under-resolves the grid: need eps >= 2*max(hx, hy) = {}",
            params.eps,
            2.0 * h
        )));
    }
    if params.eps < 3.0 * h {
        warnings.push(format!(
            "model.eps = {} is marginal for this grid (below 3*max(hx, hy) = {}); \
             expect a few percent of extra surface energy",
            params.eps,
            3.0 * h
        ));
    }
    Ok(())
}

/// Strain of the affine boundary map `u = M x` (its symmetric part).
fn boundary_strain(matrix: [[f64; 2]; 2]) -> SymTensor2 {
    SymTensor2 {
        xx: matrix[0][0],
        yy: matrix[1][1],
        xy: 0.5 * (matrix[0][1] + matrix[1][0]),
    }
}

/// Energy of the admissible competitor `u = M x`, `v = v*` with the optimal
/// homogeneous phase value; the solved energy can never exceed it (beyond
/// round-off), which makes a sharp self-check for every plate scenario.
fn homogeneous_reference(params: &ModelParams, strain: &SymTensor2, area: f64) -> (f64, f64) {
    let a = driving(params, strain);
    let v_star = 1.0 / (1.0 + 2.0 * params.eps * a / params.g_c);
    let density = bulk_density(params, strain, v_star).total()
        + params.g_c * (1.0 - v_star) * (1.0 - v_star) / (4.0 * params.eps);
    (v_star, density * area)
}

fn solve_scenario(cfg: &Config, kind: &str) -> Result<RunArtifacts, ScenarioError> {
    let params = parse_model(cfg)?;
    let grid = parse_grid(cfg)?;
    let opts = parse_solver(cfg)?;
    let t: f64 = cfg.parse_or("load", "t", 0.1).map_err(ScenarioError::config)?;
    let mut warnings = Vec::new();
    check_resolution(&params, &grid, &mut warnings)?;

    let matrix = match kind {
        "tension" => [[t, 0.0], [0.0, 0.0]],
        "compression" => [[-t, 0.0], [0.0, -t]],
        "shear_patch" => [[0.0, t], [t, 0.0]],
        "precracked_plate" => [[0.0, 0.0], [0.0, t]],
        _ => unreachable!(),
    };

    let mut pins = Vec::new();
    if kind == "precracked_plate" {
        if grid.ny % 2 != 0 {
            return Err(ScenarioError::config(format!(
                "precracked_plate needs an even grid.ny so the crack lies on a node row (got {})",
                grid.ny
            )));
        }
        let fraction: f64 = cfg
            .parse_or("precrack", "fraction", 0.5)
            .map_err(ScenarioError::config)?;
        if !(0.0..=1.0).contains(&fraction) {
            return Err(ScenarioError::config(format!(
                "precrack.fraction = {fraction} must lie in [0, 1]"
            )));
        }
        let i_max = (fraction * grid.nx as f64).floor() as usize;
        pins = (0..=i_max.min(grid.nx)).map(|i| grid.node_index(i, grid.ny / 2)).collect();
    }

    let bc = DirichletSpec::full_boundary(matrix, [0.0, 0.0]).resolve(&grid, 1.0);
    let mut u = Field::zeros(grid, 2);
    let mut v = Field::constant(grid, 1, 1.0);
    let history = alternate_minimize(&params, &mut u, &mut v, &bc, &pins, &opts)
        .map_err(|e| match e {
            fissura::Error::InvalidParams(_) => ScenarioError::Config(e.to_string()),
            other => ScenarioError::Run(other.to_string()),
        })?;

    let energy = history.final_energy();
    let strain = boundary_strain(matrix);
    let area = grid.lx * grid.ly;
    let (v_star, e_ref) = homogeneous_reference(&params, &strain, area);

    if !history.converged {
        return Err(ScenarioError::Run(format!(
            "staggered solve did not converge within {} outer iterations \
             (final energy {:.6e}); raise solver.max_outer or loosen the tolerances",
            opts.max_outer,
            energy.total()
        )));
    }
    // The homogeneous competitor is admissible only when it satisfies the
    // phase-field pins, i.e. for the pin-free scenarios.
    if pins.is_empty() {
        let excess = energy.total() - e_ref * (1.0 + UPPER_BOUND_SLACK);
        if excess > 0.0 {
            return Err(ScenarioError::Run(format!(
                "solved energy {:.12e} exceeds the admissible homogeneous competitor {:.12e}",
                energy.total(),
                e_ref
            )));
        }
    }
    if kind == "compression" && v.min_value() < COMPRESSION_MIN_V {
        return Err(ScenarioError::Run(format!(
            "compression damaged the plate: min v = {:.6} < {COMPRESSION_MIN_V}",
            v.min_value()
        )));
    }

    let mut summary = Summary::default();
    summary.push("scenario", kind);
    summary.push("variant", format!("{:?}", params.variant));
    summary.push("grid", format!("{}x{} on {} x {}", grid.nx, grid.ny, grid.lx, grid.ly));
    summary.push("eps", params.eps);
    summary.push("eta", params.eta);
    summary.push("g_c", params.g_c);
    summary.push("load_t", t);
    if !pins.is_empty() {
        summary.push("pinned_nodes", pins.len());
    }
    summary.push("converged", history.converged);
    summary.push("outer_iters", history.outer_iters);
    summary.push_f64("energy_total", energy.total());
    summary.push_f64("energy_bulk_modulated", energy.bulk_modulated);
    summary.push_f64("energy_bulk_unmodulated", energy.bulk_unmodulated);
    summary.push_f64("energy_surface_gradient", energy.surface_gradient);
    summary.push_f64("energy_surface_well", energy.surface_well);
    summary.push_f64("homogeneous_reference_energy", e_ref);
    summary.push_f64("homogeneous_reference_v", v_star);
    let rel_gap = (energy.total() - e_ref) / e_ref.abs().max(f64::MIN_POSITIVE);
    summary.push_f64("energy_rel_gap_vs_reference", rel_gap);
    summary.push_f64("min_v", v.min_value());
    summary.push_f64("max_v", v.max_value());
    summary.push("max_energy_rise", format!("{:.3e}", history.max_energy_increase()));
    let flags = history.flags;
    summary.push(
        "solver_flags",
        format!(
            "cg_fallback={} cg_max_iter={} newton_stalled={} line_search_failed={}",
            flags.cg_fallback, flags.cg_max_iter, flags.newton_stalled, flags.line_search_failed
        ),
    );

    let want_vtk = cfg.parse_bool_or("output", "vtk", true).map_err(ScenarioError::config)?;
    let want_csv = cfg.parse_bool_or("output", "csv", true).map_err(ScenarioError::config)?;
    Ok(RunArtifacts {
        summary,
        vtk: want_vtk.then(|| vtk_snapshot(&u, &v)),
        csv: want_csv.then(|| energy_history_csv(&history)),
        warnings,
    })
}

fn calibration(cfg: &Config) -> Result<RunArtifacts, ScenarioError> {
    let eps_list = cfg
        .parse_list_or("calibration", "eps_list", &[1.0, 0.1, 0.01])
        .map_err(ScenarioError::config)?;
    let mut summary = Summary::default();
    summary.push("scenario", "calibration");
    summary.push("note", "two-sided optimal-profile energy per unit crack length, toughness-normalized");
    let mut worst: f64 = 0.0;
    for eps in &eps_list {
        if *eps <= 0.0 {
            return Err(ScenarioError::config(format!("calibration eps {eps} must be positive")));
        }
        let two_sided = 2.0 * profile_energy_halfline(*eps);
        let dev = (two_sided - 1.0).abs();
        worst = worst.max(dev);
        summary.push(&format!("profile_energy[eps={eps}]"), format!("{two_sided:.12} (|dev| {dev:.3e})"));
    }
    summary.push("max_deviation", format!("{worst:.3e}"));
    summary.push("tolerance", format!("{PROFILE_TOL:.0e}"));
    if worst > PROFILE_TOL {
        return Err(ScenarioError::Run(format!(
            "profile energy deviates from the toughness by {worst:.3e} > {PROFILE_TOL:.0e}"
        )));
    }
    Ok(RunArtifacts { summary, vtk: None, csv: None, warnings: Vec::new() })
}

fn recovery_check(cfg: &Config) -> Result<RunArtifacts, ScenarioError> {
    let eps_list = cfg
        .parse_list_or("recovery", "eps_list", &[0.08, 0.04])
        .map_err(ScenarioError::config)?;
    let opening: f64 = cfg.parse_or("recovery", "opening", 0.05).map_err(ScenarioError::config)?;
    if opening <= 0.0 {
        return Err(ScenarioError::config(format!("recovery.opening = {opening} must be positive")));
    }
    let factor: Option<f64> = match cfg.get("recovery", "mollifier_factor") {
        Some(raw) => Some(raw.parse().map_err(|e| {
            ScenarioError::config(format!("recovery.mollifier_factor `{raw}`: {e}"))
        })?),
        None => None,
    };

    let config = SharpConfig {
        displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], opening),
        crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 1.0)]),
    };
    let mut summary = Summary::default();
    summary.push("scenario", "recovery_check");
    summary.push("note", "pure-opening crack on the unit square; eta tied to eps^2");
    summary.push("opening", opening);

    let mut verification: Result<(), String> = Ok(());
    for eps in &eps_list {
        if *eps <= 0.0 {
            return Err(ScenarioError::config(format!("recovery eps {eps} must be positive")));
        }
        let model = ModelParams::default().with_regularization(*eps, eps * eps);
        let mut rec = RecoveryParams::from_model(&model);
        if let Some(f) = factor {
            if f <= 0.0 {
                return Err(ScenarioError::config(format!(
                    "recovery.mollifier_factor = {f} must be positive"
                )));
            }
            rec = rec.with_mollifier_factor(f);
        }
        let report = recovery_energy_check(&config, &model, &rec, [1.0, 1.0])
            .map_err(|e| ScenarioError::Run(format!("eps {eps}: {e}")))?;
        let bound = 1.0 + rec.ell() / 2.0 + RECOVERY_CRUMB;
        summary.push(
            &format!("ratio[eps={eps}]"),
            format!(
                "{:.9} (bound {bound:.6}, surface ratio {:.6}, ||div^-||_2 {:.2e})",
                report.ratio, report.surface_ratio, report.div_minus_l2
            ),
        );
        if verification.is_ok() {
            if !(report.ratio >= 1.0 && report.ratio <= bound) {
                verification = Err(format!(
                    "eps {eps}: energy ratio {:.9} outside [1, {bound:.6}]",
                    report.ratio
                ));
            } else if report.div_minus_l2 > DIV_MINUS_TOL {
                verification = Err(format!(
                    "eps {eps}: smoothed opening interpenetrates: ||div^-||_2 = {:.3e}",
                    report.div_minus_l2
                ));
            }
        }
    }
    verification.map_err(ScenarioError::Run)?;
    Ok(RunArtifacts { summary, vtk: None, csv: None, warnings: Vec::new() })
}

fn lemma_check(cfg: &Config) -> Result<RunArtifacts, ScenarioError> {
    let count: usize = cfg.parse_or("lemma", "trials", 1000).map_err(ScenarioError::config)?;
    let seed: u64 = cfg.parse_or("lemma", "seed", 0x00af_f17e).map_err(ScenarioError::config)?;
    let n: usize = cfg.parse_or("lemma", "samples", 64).map_err(ScenarioError::config)?;
    if count == 0 {
        return Err(ScenarioError::config("lemma.trials must be at least 1"));
    }
    if n < 8 {
        return Err(ScenarioError::config(format!("lemma.samples = {n} is too coarse (need >= 8)")));
    }
    let outcomes = run_trials(TrialConfig { seed, count, samples: SampleGrid { n } });
    let rescaled = outcomes.iter().filter(|o| o.rescaled).count();
    let mut worst_linf: f64 = 0.0;
    let mut worst_lp: f64 = f64::NEG_INFINITY;
    let mut worst_witness: f64 = 0.0;
    for (i, o) in outcomes.iter().enumerate() {
        worst_linf = worst_linf.max(o.linf_excess);
        worst_lp = worst_lp.max(o.lp_excess);
        worst_witness = worst_witness.max(o.witness_excess);
        if o.linf_excess > TRIAL_EXCESS_TOL || o.lp_excess > 0.0 || o.witness_excess > TRIAL_EXCESS_TOL
        {
            return Err(ScenarioError::Run(format!(
                "trial {i} violated a bound: linf excess {:.3e}, lp excess {:.3e}, \
                 witness excess {:.3e}",
                o.linf_excess, o.lp_excess, o.witness_excess
            )));
        }
    }
    let mut summary = Summary::default();
    summary.push("scenario", "lemma_check");
    summary.push("trials", count);
    summary.push("seed", seed);
    summary.push("samples_per_side", n);
    summary.push("rescaled_trials", rescaled);
    summary.push("max_linf_excess", format!("{worst_linf:.3e}"));
    summary.push("max_lp_excess", format!("{worst_lp:.3e}"));
    summary.push("max_witness_excess", format!("{worst_witness:.3e}"));
    Ok(RunArtifacts { summary, vtk: None, csv: None, warnings: Vec::new() })
}
