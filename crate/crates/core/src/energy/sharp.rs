//! Sharp-crack reference energies for piecewise-affine displacements.
//!
//! The regularized energies in the parent module approximate a sharp model
//!
//! ```text
//! E(u, Γ) = ∫_Ω ½(2μ|dev e(u)|² + K (tr e(u))²) dx + G_c · length(Γ)
//! ```
//!
//! restricted to displacements whose jump across Γ satisfies the variant's
//! opening constraint. This module evaluates that functional exactly for
//! displacements that are affine on each side of a straight line, which is
//! rich enough to exercise every constraint case and serves as the reference
//! value for recovery-sequence diagnostics.

use crate::affine::AffineMap;
use crate::energy::{sharp_elastic_density, ModelParams, Variant};
use crate::util::{dot2, norm2, sub2};

/// Relative tolerance for "point lies on the discontinuity line" tests.
const GEOM_TOL_REL: f64 = 1e-9;
/// Relative tolerance below which a jump counts as satisfying an equality
/// or sign constraint.
const JUMP_TOL_REL: f64 = 1e-12;
/// Jumps larger than this (relative) must be covered by crack segments.
const COVERAGE_JUMP_REL: f64 = 1e-9;
/// Sample count for the jump-coverage sweep along the discontinuity line.
const COVERAGE_SAMPLES: usize = 257;

/// Straight crack segment with a unit normal.
///
/// The normal fixes which side counts as `+` when evaluating the jump
/// `[u] = u⁺ - u⁻`; every constraint below is invariant under flipping it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSegment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub normal: [f64; 2],
}

impl CrackSegment {
    /// Segment from `start` to `end`; the normal is the tangent rotated by
    /// +90° (left of the direction of travel).
    pub fn new(start: [f64; 2], end: [f64; 2]) -> Self {
        let t = sub2(end, start);
        let len = norm2(t);
        assert!(len > 0.0, "degenerate crack segment");
        CrackSegment { start, end, normal: [-t[1] / len, t[0] / len] }
    }

    /// Horizontal segment at height `y` with upward normal.
    pub fn horizontal(y: f64, x0: f64, x1: f64) -> Self {
        CrackSegment::new([x0, y], [x1, y])
    }

    pub fn length(&self) -> f64 {
        norm2(sub2(self.end, self.start))
    }

    pub fn flipped(&self) -> Self {
        CrackSegment { normal: [-self.normal[0], -self.normal[1]], ..*self }
    }

    pub fn point_at(&self, t: f64) -> [f64; 2] {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }

    /// Euclidean distance from `x` to the segment.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        let d = sub2(self.end, self.start);
        let len_sq = dot2(d, d);
        let t = (dot2(sub2(x, self.start), d) / len_sq).clamp(0.0, 1.0);
        norm2(sub2(x, self.point_at(t)))
    }
}

/// A crack as a list of straight segments (assumed pairwise non-overlapping;
/// overlaps are double-counted in the length).
#[derive(Debug, Clone, Default)]
pub struct CrackPath {
    pub segments: Vec<CrackSegment>,
}

impl CrackPath {
    pub fn new(segments: Vec<CrackSegment>) -> Self {
        CrackPath { segments }
    }

    pub fn empty() -> Self {
        CrackPath { segments: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// Distance from `x` to the crack (`+∞` for an empty path).
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Displacement fields the sharp functional is evaluated on.
#[derive(Debug, Clone)]
pub enum SharpDisplacement {
    /// Single affine map on the whole domain (no discontinuity).
    Uniform(AffineMap),
    /// `plus` on `{(x - point)·normal >= 0}`, `minus` on the complement.
    SplitByLine {
        point: [f64; 2],
        normal: [f64; 2],
        plus: AffineMap,
        minus: AffineMap,
    },
}

impl SharpDisplacement {
    /// Rigid opening of width `2·c` across the line through `point` with the
    /// given normal: `±c·normal` on the two sides. Zero strain everywhere.
    pub fn rigid_opening(point: [f64; 2], normal: [f64; 2], c: f64) -> Self {
        let n = normalize(normal);
        SharpDisplacement::SplitByLine {
            point,
            normal: n,
            plus: AffineMap::constant([c * n[0], c * n[1]]),
            minus: AffineMap::constant([-c * n[0], -c * n[1]]),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            SharpDisplacement::Uniform(a) => a.eval(x),
            SharpDisplacement::SplitByLine { point, normal, plus, minus } => {
                if dot2(sub2(x, *point), *normal) >= 0.0 {
                    plus.eval(x)
                } else {
                    minus.eval(x)
                }
            }
        }
    }

    /// Jump `u⁺ - u⁻` across the split line at `x`, oriented by the split
    /// normal. Zero for uniform displacements.
    fn line_jump(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            SharpDisplacement::Uniform(_) => [0.0, 0.0],
            SharpDisplacement::SplitByLine { plus, minus, .. } => {
                sub2(plus.eval(x), minus.eval(x))
            }
        }
    }
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = norm2(v);
    assert!(n > 0.0, "zero normal");
    [v[0] / n, v[1] / n]
}

/// A sharp-energy evaluation problem: displacement plus crack geometry.
#[derive(Debug, Clone)]
pub struct SharpConfig {
    pub displacement: SharpDisplacement,
    pub crack: CrackPath,
}

/// Outcome of checking the opening constraint along the crack.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub ok: bool,
    /// Largest constraint violation found (0 when none).
    pub worst_violation: f64,
    /// Where the worst violation occurred.
    pub worst_location: Option<[f64; 2]>,
}

impl ConstraintReport {
    fn clean() -> Self {
        ConstraintReport { ok: true, worst_violation: 0.0, worst_location: None }
    }

    fn record(&mut self, violation: f64, tol: f64, x: [f64; 2]) {
        if violation > self.worst_violation {
            self.worst_violation = violation;
            self.worst_location = Some(x);
        }
        if violation > tol {
            self.ok = false;
        }
    }
}

/// Sharp energy value with its constraint report.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpEnergy {
    pub elastic: f64,
    pub surface: f64,
    pub constraints: ConstraintReport,
}

impl SharpEnergy {
    pub fn total(&self) -> f64 {
        self.elastic + self.surface
    }
}

/// Evaluates the sharp functional on the rectangle `[0, domain[0]] ×
/// [0, domain[1]]`.
///
/// Errors if a crack segment leaves the domain, or if the displacement jumps
/// across a part of its discontinuity line that no crack segment covers (the
/// sharp energy would be infinite there). Constraint violations do **not**
/// error; they are reported in [`SharpEnergy::constraints`] so callers can
/// decide.
pub fn sharp_energy(
    config: &SharpConfig,
    params: &ModelParams,
    domain: [f64; 2],
) -> crate::Result<SharpEnergy> {
    let [lx, ly] = domain;
    assert!(lx > 0.0 && ly > 0.0, "domain sides must be positive");
    let scale = lx.max(ly);
    let geom_tol = GEOM_TOL_REL * scale;

    for seg in &config.crack.segments {
        for p in [seg.start, seg.end] {
            if p[0] < -geom_tol || p[0] > lx + geom_tol || p[1] < -geom_tol || p[1] > ly + geom_tol
            {
                return Err(crate::Error::SegmentOutsideDomain(p[0], p[1]));
            }
        }
    }

    let elastic = match &config.displacement {
        SharpDisplacement::Uniform(a) => {
            lx * ly * sharp_elastic_density(params, &a.strain())
        }
        SharpDisplacement::SplitByLine { point, normal, plus, minus } => {
            let n = normalize(*normal);
            let rect = [[0.0, 0.0], [lx, 0.0], [lx, ly], [0.0, ly]];
            let area_plus = polygon_area(&clip_halfplane(&rect, *point, n));
            let area_minus = lx * ly - area_plus;
            area_plus * sharp_elastic_density(params, &plus.strain())
                + area_minus * sharp_elastic_density(params, &minus.strain())
        }
    };

    check_jump_coverage(config, domain, geom_tol)?;

    let mut report = ConstraintReport::clean();
    if let SharpDisplacement::SplitByLine { point, normal, .. } = &config.displacement {
        let n_split = normalize(*normal);
        for seg in &config.crack.segments {
            // Only segments lying on the discontinuity line carry a jump;
            // across any other segment the displacement is continuous.
            let on_line = dot2(sub2(seg.start, *point), n_split).abs() <= geom_tol
                && dot2(sub2(seg.end, *point), n_split).abs() <= geom_tol;
            if !on_line {
                continue;
            }
            // Orient the jump by the segment's own normal.
            let side = dot2(seg.normal, n_split);
            // The jump is affine along the segment, so endpoint checks are
            // exhaustive for these linear constraints; the midpoint is a
            // cheap cross-check.
            for t in [0.0, 0.5, 1.0] {
                let x = seg.point_at(t);
                let g = config.displacement.line_jump(x);
                let jump = if side >= 0.0 { g } else { [-g[0], -g[1]] };
                let jn = dot2(jump, seg.normal);
                let tol = JUMP_TOL_REL * (1.0 + norm2(jump));
                match params.variant {
                    Variant::NonInterpenetration => {
                        report.record((-jn).max(0.0), tol, x);
                    }
                    Variant::ShearOnly => {
                        report.record(jn.abs(), tol, x);
                    }
                    Variant::Masonry => {
                        let tang = [
                            jump[0] - jn * seg.normal[0],
                            jump[1] - jn * seg.normal[1],
                        ];
                        report.record(norm2(tang), tol, x);
                        report.record((-jn).max(0.0), tol, x);
                    }
                }
            }
        }
    }

    Ok(SharpEnergy {
        elastic,
        surface: params.g_c * config.crack.total_length(),
        constraints: report,
    })
}

/// Errors when the displacement jumps across a stretch of its discontinuity
/// line inside the domain that no crack segment covers.
fn check_jump_coverage(
    config: &SharpConfig,
    domain: [f64; 2],
    geom_tol: f64,
) -> crate::Result<()> {
    let SharpDisplacement::SplitByLine { point, normal, plus, minus } = &config.displacement
    else {
        return Ok(());
    };
    let n = normalize(*normal);
    let Some((a, b)) = line_rect_intersection(*point, n, domain) else {
        return Ok(());
    };
    let jump_scale = 1.0
        + plus.eval(*point).iter().map(|c| c.abs()).fold(0.0, f64::max)
        + minus.eval(*point).iter().map(|c| c.abs()).fold(0.0, f64::max);
    for i in 0..COVERAGE_SAMPLES {
        let t = (i as f64 + 0.5) / COVERAGE_SAMPLES as f64;
        let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let j = norm2(config.displacement.line_jump(x));
        if j > COVERAGE_JUMP_REL * jump_scale && config.crack.distance(x) > geom_tol {
            return Err(crate::Error::ConstraintViolated {
                variant: "jump_coverage",
                detail: format!(
                    "displacement jumps by {j:.3e} at ({:.4}, {:.4}) but no crack segment passes there",
                    x[0], x[1]
                ),
            });
        }
    }
    Ok(())
}

/// Intersection of the line through `point` orthogonal to `normal` with the
/// rectangle `[0, lx] × [0, ly]`, as a parameterized segment.
fn line_rect_intersection(
    point: [f64; 2],
    normal: [f64; 2],
    domain: [f64; 2],
) -> Option<([f64; 2], [f64; 2])> {
    let dir = [-normal[1], normal[0]];
    // Clip the parameter range of point + t·dir against each rectangle side.
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for axis in 0..2 {
        if dir[axis].abs() < 1e-300 {
            if point[axis] < 0.0 || point[axis] > domain[axis] {
                return None;
            }
            continue;
        }
        let t0 = (0.0 - point[axis]) / dir[axis];
        let t1 = (domain[axis] - point[axis]) / dir[axis];
        t_min = t_min.max(t0.min(t1));
        t_max = t_max.min(t0.max(t1));
    }
    if t_min >= t_max {
        return None;
    }
    Some((
        [point[0] + t_min * dir[0], point[1] + t_min * dir[1]],
        [point[0] + t_max * dir[0], point[1] + t_max * dir[1]],
    ))
}

/// Clips a convex polygon against the half-plane `(x - p)·n >= 0`
/// (Sutherland–Hodgman with a single clip edge).
fn clip_halfplane(poly: &[[f64; 2]], p: [f64; 2], n: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let dc = dot2(sub2(cur, p), n);
        let dn = dot2(sub2(nxt, p), n);
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push([cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])]);
        }
    }
    out
}

/// Shoelace area of a simple polygon (vertices in order).
fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        twice += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * twice.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_domain() -> [f64; 2] {
        [1.0, 1.0]
    }

    fn params(variant: Variant) -> ModelParams {
        ModelParams::default().with_variant(variant)
    }

    #[test]
    fn halfplane_area_split() {
        let rect = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let right = clip_halfplane(&rect, [0.3, 0.0], [1.0, 0.0]);
        assert!((polygon_area(&right) - 0.7).abs() < 1e-15);
        let upper_tri = clip_halfplane(&rect, [0.5, 0.5], normalize([1.0, 1.0]));
        assert!((polygon_area(&upper_tri) - 0.5).abs() < 1e-15);
        let all = clip_halfplane(&rect, [0.0, 0.0], normalize([1.0, 1.0]));
        assert!((polygon_area(&all) - 1.0).abs() < 1e-15);
        let none = clip_halfplane(&rect, [2.0, 0.0], [1.0, 0.0]);
        assert_eq!(polygon_area(&none), 0.0);
    }

    #[test]
    fn pure_opening_crack() {
        let c = 0.05;
        let config = SharpConfig {
            displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], c),
            crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 1.0)]),
        };
        let e = sharp_energy(&config, &params(Variant::NonInterpenetration), unit_domain())
            .unwrap();
        assert_eq!(e.elastic, 0.0);
        assert!((e.surface - 1.0).abs() < 1e-15);
        assert!(e.constraints.ok, "opening crack must satisfy non-interpenetration");
        assert_eq!(e.constraints.worst_violation, 0.0);

        // Masonry accepts a pure normal opening too.
        let e = sharp_energy(&config, &params(Variant::Masonry), unit_domain()).unwrap();
        assert!(e.constraints.ok);

        // Shear-only forbids any normal opening.
        let e = sharp_energy(&config, &params(Variant::ShearOnly), unit_domain()).unwrap();
        assert!(!e.constraints.ok);
        assert!((e.constraints.worst_violation - 2.0 * c).abs() < 1e-14);
    }

    #[test]
    fn interpenetrating_crack_is_flagged() {
        let c = 0.05;
        let config = SharpConfig {
            displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], -c),
            crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 1.0)]),
        };
        let e = sharp_energy(&config, &params(Variant::NonInterpenetration), unit_domain())
            .unwrap();
        assert!(!e.constraints.ok);
        assert!((e.constraints.worst_violation - 2.0 * c).abs() < 1e-14);
        let loc = e.constraints.worst_location.unwrap();
        assert!((loc[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constraint_is_orientation_invariant() {
        let c = 0.05;
        let seg = CrackSegment::horizontal(0.5, 0.0, 1.0);
        for segment in [seg, seg.flipped()] {
            let config = SharpConfig {
                displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], -c),
                crack: CrackPath::new(vec![segment]),
            };
            let e = sharp_energy(&config, &params(Variant::NonInterpenetration), unit_domain())
                .unwrap();
            assert!(!e.constraints.ok);
            assert!((e.constraints.worst_violation - 2.0 * c).abs() < 1e-14);
        }
    }

    #[test]
    fn tangential_slip() {
        let c = 0.03;
        let config = SharpConfig {
            displacement: SharpDisplacement::SplitByLine {
                point: [0.5, 0.5],
                normal: [0.0, 1.0],
                plus: AffineMap::constant([c, 0.0]),
                minus: AffineMap::constant([-c, 0.0]),
            },
            crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 1.0)]),
        };
        // Sliding without opening: fine for non-interpenetration and
        // shear-only, rejected by masonry (jump not parallel to the normal).
        for variant in [Variant::NonInterpenetration, Variant::ShearOnly] {
            let e = sharp_energy(&config, &params(variant), unit_domain()).unwrap();
            assert!(e.constraints.ok, "{variant:?} should allow pure slip");
        }
        let e = sharp_energy(&config, &params(Variant::Masonry), unit_domain()).unwrap();
        assert!(!e.constraints.ok);
        assert!((e.constraints.worst_violation - 2.0 * c).abs() < 1e-14);
    }

    #[test]
    fn uniform_tension_with_idle_crack() {
        let t = 0.2;
        let config = SharpConfig {
            displacement: SharpDisplacement::Uniform(AffineMap::new(
                [[t, 0.0], [0.0, 0.0]],
                [0.0, 0.0],
            )),
            crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 0.5)]),
        };
        let p = params(Variant::NonInterpenetration);
        let e = sharp_energy(&config, &p, unit_domain()).unwrap();
        assert!((e.elastic - 1.5 * t * t).abs() < 1e-14);
        assert!((e.surface - p.g_c * 0.5).abs() < 1e-15);
        assert!(e.constraints.ok);
        assert!((e.total() - (1.5 * t * t + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn continuous_kink_weights_areas() {
        // u = (0, t·(y - 1/2)⁺): continuous, strain diag(0, t) above the
        // line and zero below. No crack needed.
        let t = 0.4;
        let config = SharpConfig {
            displacement: SharpDisplacement::SplitByLine {
                point: [0.5, 0.5],
                normal: [0.0, 1.0],
                plus: AffineMap::new([[0.0, 0.0], [0.0, t]], [0.0, -0.5 * t]),
                minus: AffineMap::ZERO,
            },
            crack: CrackPath::empty(),
        };
        let e = sharp_energy(&config, &params(Variant::NonInterpenetration), unit_domain())
            .unwrap();
        assert!((e.elastic - 0.5 * 1.5 * t * t).abs() < 1e-14);
        assert_eq!(e.surface, 0.0);
        assert!(e.constraints.ok);
    }

    #[test]
    fn segment_outside_domain_errors() {
        let config = SharpConfig {
            displacement: SharpDisplacement::Uniform(AffineMap::ZERO),
            crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, -0.2, 0.5)]),
        };
        assert!(matches!(
            sharp_energy(&config, &params(Variant::NonInterpenetration), unit_domain()),
            Err(crate::Error::SegmentOutsideDomain(..))
        ));
    }

    #[test]
    fn uncovered_jump_errors() {
        let config = SharpConfig {
            displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], 0.1),
            crack: CrackPath::new(vec![CrackSegment::horizontal(0.5, 0.0, 0.4)]),
        };
        assert!(matches!(
            sharp_energy(&config, &params(Variant::NonInterpenetration), unit_domain()),
            Err(crate::Error::ConstraintViolated { .. })
        ));
    }

    #[test]
    fn crack_off_the_jump_line_carries_no_jump() {
        // The displacement is continuous across a segment at y = 0.3, so the
        // extra segment adds surface energy but no constraint violation; the
        // real jump at y = 0.5 is covered.
        let config = SharpConfig {
            displacement: SharpDisplacement::rigid_opening([0.5, 0.5], [0.0, 1.0], 0.1),
            crack: CrackPath::new(vec![
                CrackSegment::horizontal(0.5, 0.0, 1.0),
                CrackSegment::horizontal(0.3, 0.2, 0.7),
            ]),
        };
        let e = sharp_energy(&config, &params(Variant::ShearOnly), unit_domain()).unwrap();
        assert!((e.surface - 1.5).abs() < 1e-14);
        // The shear violation comes from the covered opening at y = 0.5 only.
        assert!((e.constraints.worst_violation - 0.2).abs() < 1e-14);
    }

    #[test]
    fn tilted_opening_crack() {
        // Diagonal crack with pure normal opening: admissible for
        // non-interpenetration and masonry.
        let n = normalize([1.0, 1.0]);
        let config = SharpConfig {
            displacement: SharpDisplacement::rigid_opening([0.5, 0.5], n, 0.02),
            crack: CrackPath::new(vec![CrackSegment::new([1.0, 0.0], [0.0, 1.0])]),
        };
        for variant in [Variant::NonInterpenetration, Variant::Masonry] {
            let e = sharp_energy(&config, &params(variant), unit_domain()).unwrap();
            assert!(e.constraints.ok, "{variant:?}");
            assert!((e.surface - std::f64::consts::SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn line_rect_intersection_cases() {
        let (a, b) = line_rect_intersection([0.5, 0.5], [0.0, 1.0], [1.0, 1.0]).unwrap();
        assert!((a[1] - 0.5).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15);
        assert!((a[0] - b[0]).abs() > 0.999);
        assert!(line_rect_intersection([0.5, 2.0], [0.0, 1.0], [1.0, 1.0]).is_none());
        // Diagonal through a corner region.
        let hit = line_rect_intersection([0.0, 0.5], normalize([1.0, 1.0]), [1.0, 1.0]);
        assert!(hit.is_some());
    }

    #[test]
    fn crack_path_length() {
        let path = CrackPath::new(vec![
            CrackSegment::horizontal(0.5, 0.0, 0.3),
            CrackSegment::new([0.3, 0.5], [0.3, 0.9]),
        ]);
        assert!((path.total_length() - 0.7).abs() < 1e-15);
        assert_eq!(CrackPath::empty().total_length(), 0.0);
    }
}
