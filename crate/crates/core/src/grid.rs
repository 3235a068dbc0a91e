//! Structured bilinear (Q1) finite elements on a rectangle.
//!
//! Nodes are numbered x-fastest: node `(i, j)` has index `j·(nx+1) + i`,
//! element `(ex, ey)` has index `ey·nx + ex` and owns the nodes
//! `(ex, ey), (ex+1, ey), (ex+1, ey+1), (ex, ey+1)` in counter-clockwise
//! local order. All element integrals use the 2×2 Gauss rule, which is exact
//! for the bilinear products appearing in the mass, stiffness and energy
//! terms.

use crate::tensor::SymTensor2;

/// Uniform rectangular grid on `[0, lx] × [0, ly]` with `nx × ny` elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    /// Panics unless `nx, ny >= 2` and the side lengths are positive.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Grid {
        assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 elements");
        assert!(lx > 0.0 && ly > 0.0, "grid side lengths must be positive");
        Grid { nx, ny, lx, ly }
    }

    /// Unit square with `n × n` elements.
    pub fn unit_square(n: usize) -> Grid {
        Grid::new(n, n, 1.0, 1.0)
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elems(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny);
        j * (self.nx + 1) + i
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    /// Global node indices of element `e`, counter-clockwise from the
    /// lower-left corner.
    pub fn elem_nodes(&self, e: usize) -> [usize; 4] {
        assert!(e < self.n_elems(), "element index {e} out of range");
        let ex = e % self.nx;
        let ey = e / self.nx;
        let n0 = self.node_index(ex, ey);
        [n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1]
    }

    /// Elements adjacent to a node together with the node's local index in
    /// each, in ascending element order. Used for deterministic gathers.
    pub fn node_elems(&self, node: usize) -> impl Iterator<Item = (usize, usize)> {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        let nx = self.nx;
        let ny = self.ny;
        // (ex, ey, local) candidates in ascending element-index order.
        let candidates = [
            (i.wrapping_sub(1), j.wrapping_sub(1), 2),
            (i, j.wrapping_sub(1), 3),
            (i.wrapping_sub(1), j, 1),
            (i, j, 0),
        ];
        candidates
            .into_iter()
            .filter(move |&(ex, ey, _)| ex < nx && ey < ny)
            .map(move |(ex, ey, l)| (ey * nx + ex, l))
    }

    /// Shape-function table at the four Gauss points of the reference square,
    /// with gradients already mapped to physical coordinates.
    pub fn qp_basis(&self) -> QpBasis {
        QpBasis::build(self.hx(), self.hy())
    }
}

/// Local node order: 0=(-1,-1), 1=(1,-1), 2=(1,1), 3=(-1,1).
const QP_XI: [[f64; 2]; 4] = {
    const G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    [[-G, -G], [G, -G], [G, G], [-G, G]]
};

/// Evaluated Q1 basis at the 2×2 Gauss points.
#[derive(Debug, Clone)]
pub struct QpBasis {
    /// `n[q][l]`: shape function l at Gauss point q.
    pub n: [[f64; 4]; 4],
    /// `dndx[q][l]`, `dndy[q][l]`: physical gradients.
    pub dndx: [[f64; 4]; 4],
    pub dndy: [[f64; 4]; 4],
    /// Physical quadrature weight per Gauss point (`hx·hy/4`).
    pub weight: f64,
}

impl QpBasis {
    fn build(hx: f64, hy: f64) -> QpBasis {
        let mut n = [[0.0; 4]; 4];
        let mut dndx = [[0.0; 4]; 4];
        let mut dndy = [[0.0; 4]; 4];
        let signs = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        for (q, &[xi, eta]) in QP_XI.iter().enumerate() {
            for (l, &[sx, sy]) in signs.iter().enumerate() {
                n[q][l] = 0.25 * (1.0 + sx * xi) * (1.0 + sy * eta);
                dndx[q][l] = 0.25 * sx * (1.0 + sy * eta) * 2.0 / hx;
                dndy[q][l] = 0.25 * sy * (1.0 + sx * xi) * 2.0 / hy;
            }
        }
        QpBasis { n, dndx, dndy, weight: 0.25 * hx * hy }
    }
}

/// Nodal field with a fixed number of components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, components: usize) -> Field {
        Field { grid, components, values: vec![0.0; grid.n_nodes() * components] }
    }

    pub fn constant(grid: Grid, components: usize, value: f64) -> Field {
        Field { grid, components, values: vec![value; grid.n_nodes() * components] }
    }

    /// Scalar field sampled from a function of position.
    pub fn from_fn_scalar(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Field {
        let values = (0..grid.n_nodes()).map(|n| f(grid.node_coord(n))).collect();
        Field { grid, components: 1, values }
    }

    /// Two-component field sampled from a function of position.
    pub fn from_fn_vector(grid: Grid, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Field {
        let mut values = Vec::with_capacity(grid.n_nodes() * 2);
        for n in 0..grid.n_nodes() {
            let v = f(grid.node_coord(n));
            values.push(v[0]);
            values.push(v[1]);
        }
        Field { grid, components: 2, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn get(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.components + comp]
    }

    pub fn set(&mut self, node: usize, comp: usize, value: f64) {
        self.values[node * self.components + comp] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Max-norm of the difference with another field on the same grid.
    pub fn max_diff(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.components, other.components);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric gradient of a two-component field at a Gauss point.
///
/// Panics if the field is not two-component or the indices are out of range.
pub fn strain_at_qp(u: &Field, basis: &QpBasis, elem_nodes: [usize; 4], qp: usize) -> SymTensor2 {
    assert_eq!(u.components, 2, "strain needs a two-component field");
    let mut gxx = 0.0;
    let mut gyy = 0.0;
    let mut gxy = 0.0;
    let mut gyx = 0.0;
    for (l, &node) in elem_nodes.iter().enumerate() {
        let ux = u.values[2 * node];
        let uy = u.values[2 * node + 1];
        gxx += ux * basis.dndx[qp][l];
        gyy += uy * basis.dndy[qp][l];
        gxy += ux * basis.dndy[qp][l];
        gyx += uy * basis.dndx[qp][l];
    }
    SymTensor2 { xx: gxx, yy: gyy, xy: 0.5 * (gxy + gyx) }
}

/// Value and gradient of a scalar field at a Gauss point.
pub fn value_and_grad_at_qp(
    v: &Field,
    basis: &QpBasis,
    elem_nodes: [usize; 4],
    qp: usize,
) -> (f64, [f64; 2]) {
    assert_eq!(v.components, 1, "expected a scalar field");
    let mut val = 0.0;
    let mut gx = 0.0;
    let mut gy = 0.0;
    for (l, &node) in elem_nodes.iter().enumerate() {
        let vn = v.values[node];
        val += vn * basis.n[qp][l];
        gx += vn * basis.dndx[qp][l];
        gy += vn * basis.dndy[qp][l];
    }
    (val, [gx, gy])
}

/// Which part of the boundary a Dirichlet clause selects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeSelector {
    Left,
    Right,
    Bottom,
    Top,
    /// All four sides.
    Boundary,
    /// Nodes inside the closed axis-aligned box `[min, max]`.
    Region { min: [f64; 2], max: [f64; 2] },
}

impl NodeSelector {
    fn matches(&self, grid: &Grid, x: [f64; 2]) -> bool {
        let hx = grid.hx();
        let hy = grid.hy();
        // Half-cell tolerance: selectors are geometric, nodes are exact multiples.
        let on_left = x[0] < 0.5 * hx;
        let on_right = x[0] > grid.lx - 0.5 * hx;
        let on_bottom = x[1] < 0.5 * hy;
        let on_top = x[1] > grid.ly - 0.5 * hy;
        match self {
            NodeSelector::Left => on_left,
            NodeSelector::Right => on_right,
            NodeSelector::Bottom => on_bottom,
            NodeSelector::Top => on_top,
            NodeSelector::Boundary => on_left || on_right || on_bottom || on_top,
            NodeSelector::Region { min, max } => {
                x[0] >= min[0] && x[0] <= max[0] && x[1] >= min[1] && x[1] <= max[1]
            }
        }
    }
}

/// Prescribed boundary value `u(x, t) = t · (M·x + c)`, linear in the load
/// parameter. Covers the affine load programs used by the scenarios.
#[derive(Debug, Clone, Copy)]
pub struct AffineBoundaryValue {
    pub matrix: [[f64; 2]; 2],
    pub offset: [f64; 2],
}

impl AffineBoundaryValue {
    pub fn eval(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        [
            t * (self.matrix[0][0] * x[0] + self.matrix[0][1] * x[1] + self.offset[0]),
            t * (self.matrix[1][0] * x[0] + self.matrix[1][1] * x[1] + self.offset[1]),
        ]
    }
}

/// One Dirichlet clause: where, which displacement components, what value.
#[derive(Debug, Clone)]
pub struct DirichletClause {
    pub selector: NodeSelector,
    /// Constrain the x and/or y component.
    pub mask: [bool; 2],
    pub value: AffineBoundaryValue,
}

/// A list of Dirichlet clauses, applied in order (later clauses win on
/// overlapping nodes).
#[derive(Debug, Clone, Default)]
pub struct DirichletSpec {
    pub clauses: Vec<DirichletClause>,
}

impl DirichletSpec {
    /// Clamp every boundary node to `t·(M·x + c)` in both components.
    pub fn full_boundary(matrix: [[f64; 2]; 2], offset: [f64; 2]) -> DirichletSpec {
        DirichletSpec {
            clauses: vec![DirichletClause {
                selector: NodeSelector::Boundary,
                mask: [true, true],
                value: AffineBoundaryValue { matrix, offset },
            }],
        }
    }

    /// Resolve the clauses on a grid at load parameter `t`.
    ///
    /// A clause that selects no nodes is reported as a warning, not an error:
    /// the constrained system is still well-defined.
    pub fn resolve(&self, grid: &Grid, t: f64) -> BoundaryConditions {
        let n_dofs = 2 * grid.n_nodes();
        let mut value = vec![0.0; n_dofs];
        let mut fixed = vec![false; n_dofs];
        let mut warnings = Vec::new();
        for (ci, clause) in self.clauses.iter().enumerate() {
            let mut hits = 0usize;
            for node in 0..grid.n_nodes() {
                let x = grid.node_coord(node);
                if !clause.selector.matches(grid, x) {
                    continue;
                }
                hits += 1;
                let v = clause.value.eval(x, t);
                for comp in 0..2 {
                    if clause.mask[comp] {
                        fixed[2 * node + comp] = true;
                        value[2 * node + comp] = v[comp];
                    }
                }
            }
            if hits == 0 {
                warnings.push(format!(
                    "dirichlet clause {ci} ({:?}) selects no nodes",
                    clause.selector
                ));
            }
        }
        BoundaryConditions { value, fixed, warnings }
    }
}

/// Resolved Dirichlet data: per-dof fixed flags and prescribed values.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    value: Vec<f64>,
    fixed: Vec<bool>,
    pub warnings: Vec<String>,
}

impl BoundaryConditions {
    /// No constraints on a grid's displacement dofs.
    pub fn none(grid: &Grid) -> BoundaryConditions {
        BoundaryConditions {
            value: vec![0.0; 2 * grid.n_nodes()],
            fixed: vec![false; 2 * grid.n_nodes()],
            warnings: Vec::new(),
        }
    }

    pub fn n_fixed(&self) -> usize {
        self.fixed.iter().filter(|&&f| f).count()
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    /// Write the prescribed values into a displacement field.
    pub fn apply_to(&self, u: &mut Field) {
        assert_eq!(u.components, 2);
        assert_eq!(u.values.len(), self.value.len());
        for dof in 0..self.value.len() {
            if self.fixed[dof] {
                u.values[dof] = self.value[dof];
            }
        }
    }

    /// Zero the constrained entries of a residual/direction vector, so the
    /// eliminated system stays symmetric.
    pub fn project_free(&self, r: &mut [f64]) {
        assert_eq!(r.len(), self.fixed.len());
        for (ri, &f) in r.iter_mut().zip(&self.fixed) {
            if f {
                *ri = 0.0;
            }
        }
    }
}
