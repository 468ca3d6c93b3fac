//! Plane-strain grid on the unit square, symmetric 2x2 tensors, the
//! discrete symmetrized gradient, the nonlocal damage form and the loading.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric 2x2 tensor stored as (xx, yy, xy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    /// `a * I`.
    pub const fn iso(a: f64) -> Self {
        SymTensor2 { xx: a, yy: a, xy: 0.0 }
    }

    /// Deviatoric tensor `[[d, s], [s, -d]]`.
    pub const fn deviatoric(d: f64, s: f64) -> Self {
        SymTensor2 { xx: d, yy: -d, xy: s }
    }

    pub fn tr(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn dev(&self) -> Self {
        let m = 0.5 * self.tr();
        SymTensor2 { xx: self.xx - m, yy: self.yy - m, xy: self.xy }
    }

    /// Frobenius product `a : b`.
    pub fn dot(&self, o: &SymTensor2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2 { xx: self.xx + o.xx, yy: self.yy + o.yy, xy: self.xy + o.xy }
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, o: SymTensor2) {
        self.xx += o.xx;
        self.yy += o.yy;
        self.xy += o.xy;
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2 { xx: self.xx - o.xx, yy: self.yy - o.yy, xy: self.xy - o.xy }
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        SymTensor2 { xx: -self.xx, yy: -self.yy, xy: -self.xy }
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2 { xx: self * t.xx, yy: self * t.yy, xy: self * t.xy }
    }
}

/// Which edges carry Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletEdges {
    Left,
    LeftRight,
}

/// Uniform `n x n` node grid on `[0,1]^2` with bilinear cells.
///
/// Node `(i, j)` sits at `(i h, j h)` and has index `j n + i`. Cell corners
/// are ordered counter-clockwise starting at the lower-left node.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub coords: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 4]>,
    pub dirichlet: Vec<bool>,
    /// Quadrature weight of each cell (`h^2`).
    pub cell_weight: f64,
    /// Lumped nodal weights (`h^2/4` per incident cell).
    pub node_weights: Vec<f64>,
    /// Free displacement DOFs as global component indices `2 * node + comp`.
    pub free_dofs: Vec<usize>,
    /// Inverse of `free_dofs`.
    pub dof_index: Vec<Option<usize>>,
    /// Cells incident to each node.
    pub node_cells: Vec<Vec<usize>>,
}

impl Grid {
    pub fn new(n: usize, edges: DirichletEdges) -> Result<Grid> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes per side, got {n}")));
        }
        let h = 1.0 / (n - 1) as f64;
        let nn = n * n;
        let mut coords = Vec::with_capacity(nn);
        let mut dirichlet = Vec::with_capacity(nn);
        for j in 0..n {
            for i in 0..n {
                coords.push([i as f64 * h, j as f64 * h]);
                let on = match edges {
                    DirichletEdges::Left => i == 0,
                    DirichletEdges::LeftRight => i == 0 || i == n - 1,
                };
                dirichlet.push(on);
            }
        }
        let mut cells = Vec::with_capacity((n - 1) * (n - 1));
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                cells.push([a, a + 1, a + n + 1, a + n]);
            }
        }
        let cell_weight = h * h;
        let mut node_weights = vec![0.0; nn];
        let mut node_cells = vec![Vec::new(); nn];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                node_weights[v] += 0.25 * cell_weight;
                node_cells[v].push(c);
            }
        }
        let mut free_dofs = Vec::new();
        let mut dof_index = vec![None; 2 * nn];
        for v in 0..nn {
            if !dirichlet[v] {
                for comp in 0..2 {
                    dof_index[2 * v + comp] = Some(free_dofs.len());
                    free_dofs.push(2 * v + comp);
                }
            }
        }
        Ok(Grid {
            n,
            h,
            coords,
            cells,
            dirichlet,
            cell_weight,
            node_weights,
            free_dofs,
            dof_index,
            node_cells,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Restricts a full nodal 2-vector field to the free DOFs.
    pub fn restrict(&self, full: &[[f64; 2]]) -> Vec<f64> {
        self.free_dofs.iter().map(|&g| full[g / 2][g % 2]).collect()
    }

    /// Extends free-DOF values to a full nodal field (zero on Dirichlet nodes).
    pub fn extend(&self, free: &[f64]) -> Vec<[f64; 2]> {
        let mut full = vec![[0.0; 2]; self.n_nodes()];
        for (k, &g) in self.free_dofs.iter().enumerate() {
            full[g / 2][g % 2] = free[k];
        }
        full
    }

    /// Cell value of a nodal scalar (average of the four corners).
    pub fn cell_average(&self, nodal: &[f64], c: usize) -> f64 {
        let cell = &self.cells[c];
        0.25 * (nodal[cell[0]] + nodal[cell[1]] + nodal[cell[2]] + nodal[cell[3]])
    }
}

/// Discrete state `(u, z, p)`: displacement correction, damage, plastic strain.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<[f64; 2]>,
    pub z: Vec<f64>,
    pub p: Vec<SymTensor2>,
}

impl State {
    /// Undamaged, undeformed state.
    pub fn initial(grid: &Grid) -> State {
        State {
            u: vec![[0.0; 2]; grid.n_nodes()],
            z: vec![1.0; grid.n_nodes()],
            p: vec![SymTensor2::ZERO; grid.n_cells()],
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.u.len() != grid.n_nodes() || self.z.len() != grid.n_nodes() || self.p.len() != grid.n_cells() {
            return Err(Error::LengthMismatch("state does not fit the grid".into()));
        }
        for (v, &zi) in self.z.iter().enumerate() {
            if zi <= 0.0 {
                return Err(Error::DamageNonPositive { node: v, value: zi });
            }
        }
        for pc in &self.p {
            if pc.tr().abs() > 1e-12 {
                return Err(Error::TraceViolation(pc.tr()));
            }
        }
        Ok(())
    }
}

/// Symmetrized gradient at the cell centers (one Gauss point per cell).
#[derive(Debug, Clone)]
pub struct SymGradOp {
    /// d/dx of the four bilinear shape functions at the cell center.
    pub dx: [f64; 4],
    /// d/dy of the four bilinear shape functions at the cell center.
    pub dy: [f64; 4],
}

pub fn assemble_sym_gradient(grid: &Grid) -> SymGradOp {
    let s = 0.5 / grid.h;
    SymGradOp { dx: [-s, s, s, -s], dy: [-s, -s, s, s] }
}

impl SymGradOp {
    pub fn apply_cell(&self, grid: &Grid, u: &[[f64; 2]], c: usize) -> SymTensor2 {
        let cell = &grid.cells[c];
        let mut e = SymTensor2::ZERO;
        for a in 0..4 {
            let [ux, uy] = u[cell[a]];
            e.xx += self.dx[a] * ux;
            e.yy += self.dy[a] * uy;
            e.xy += 0.5 * (self.dy[a] * ux + self.dx[a] * uy);
        }
        e
    }

    pub fn apply(&self, grid: &Grid, u: &[[f64; 2]]) -> Vec<SymTensor2> {
        (0..grid.n_cells()).map(|c| self.apply_cell(grid, u, c)).collect()
    }

    /// `B^T W_c sigma` as a full nodal field, with `sigma` weighted by `weights[c]`.
    pub fn apply_transpose(&self, grid: &Grid, sigma: &[SymTensor2], weights: &[f64]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; grid.n_nodes()];
        for (c, cell) in grid.cells.iter().enumerate() {
            let s = sigma[c];
            let w = weights[c];
            for a in 0..4 {
                out[cell[a]][0] += w * (s.xx * self.dx[a] + s.xy * self.dy[a]);
                out[cell[a]][1] += w * (s.xy * self.dx[a] + s.yy * self.dy[a]);
            }
        }
        out
    }

    /// Local 3x8 matrix mapping `(ux0, uy0, ..., ux3, uy3)` to `(xx, yy, xy)`.
    pub fn local_matrix(&self) -> [[f64; 8]; 3] {
        let mut m = [[0.0; 8]; 3];
        for a in 0..4 {
            m[0][2 * a] = self.dx[a];
            m[1][2 * a + 1] = self.dy[a];
            m[2][2 * a] = 0.5 * self.dy[a];
            m[2][2 * a + 1] = 0.5 * self.dx[a];
        }
        m
    }

    /// Assembles `sum_c coef[c] B_c^T D B_c` on the free DOFs.
    ///
    /// `d` is the 3x3 matrix of the quadratic form in `(xx, yy, xy)` components.
    pub fn assemble_free(&self, grid: &Grid, d: &[[f64; 3]; 3], coef: &[f64]) -> DMatrix<f64> {
        let bl = self.local_matrix();
        let mut db = [[0.0; 8]; 3];
        for r in 0..3 {
            for k in 0..8 {
                db[r][k] = (0..3).map(|s| d[r][s] * bl[s][k]).sum();
            }
        }
        let mut kl = [[0.0; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                kl[i][j] = (0..3).map(|r| bl[r][i] * db[r][j]).sum();
            }
        }
        let nf = grid.n_free();
        let mut k = DMatrix::zeros(nf, nf);
        for (c, cell) in grid.cells.iter().enumerate() {
            let w = coef[c];
            if w == 0.0 {
                continue;
            }
            let gl: Vec<Option<usize>> = (0..8).map(|l| grid.dof_index[2 * cell[l / 2] + l % 2]).collect();
            for i in 0..8 {
                let Some(gi) = gl[i] else { continue };
                for j in 0..8 {
                    if let Some(gj) = gl[j] {
                        k[(gi, gj)] += w * kl[i][j];
                    }
                }
            }
        }
        k
    }
}

/// Quadratic form of the Frobenius norm in `(xx, yy, xy)` components.
pub const FROBENIUS_FORM: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];

/// Nodal gradient reconstruction: central differences inside, one-sided on the boundary.
///
/// Returns a `2N x N` matrix; rows `2v` and `2v+1` give d/dx and d/dy at node `v`.
pub fn nodal_gradient_matrix(grid: &Grid) -> DMatrix<f64> {
    let n = grid.n;
    let nn = grid.n_nodes();
    let mut g = DMatrix::zeros(2 * nn, nn);
    let h = grid.h;
    let stencil = |k: usize| -> Vec<(usize, f64)> {
        if n == 1 {
            vec![]
        } else if k == 0 {
            vec![(1, 1.0 / h), (0, -1.0 / h)]
        } else if k == n - 1 {
            vec![(n - 1, 1.0 / h), (n - 2, -1.0 / h)]
        } else {
            vec![(k + 1, 0.5 / h), (k - 1, -0.5 / h)]
        }
    };
    for j in 0..n {
        for i in 0..n {
            let v = j * n + i;
            for (ii, w) in stencil(i) {
                g[(2 * v, j * n + ii)] += w;
            }
            for (jj, w) in stencil(j) {
                g[(2 * v + 1, jj * n + i)] += w;
            }
        }
    }
    g
}

/// Assembles the nonlocal form `a_m(z1, z2) = z1^T A z2`.
///
/// `a_m(z,z) = sum_{i != j} m_i m_j |G_i z - G_j z|^2 / |x_i - x_j|^(2 + 2(m-1))`
/// with `G` the nodal finite-difference gradient.
pub fn assemble_nonlocal_form(grid: &Grid, m: f64) -> Result<DMatrix<f64>> {
    if !(m > 1.0) {
        return Err(Error::InvalidParam { name: "m_order", reason: format!("must exceed 1, got {m}") });
    }
    let nn = grid.n_nodes();
    let expo = 2.0 + 2.0 * (m - 1.0);
    // Laplacian of the pair weights.
    let mut lap = DMatrix::zeros(nn, nn);
    for i in 0..nn {
        for j in 0..nn {
            if i == j {
                continue;
            }
            let dx = grid.coords[i][0] - grid.coords[j][0];
            let dy = grid.coords[i][1] - grid.coords[j][1];
            let r = (dx * dx + dy * dy).sqrt();
            let w = grid.node_weights[i] * grid.node_weights[j] * r.powf(-expo);
            lap[(i, j)] -= w;
            lap[(i, i)] += w;
        }
    }
    let g = nodal_gradient_matrix(grid);
    // A = 2 G^T (L kron I2) G, computed component-wise.
    let mut a = DMatrix::zeros(nn, nn);
    for comp in 0..2 {
        let gc = DMatrix::from_fn(nn, nn, |v, k| g[(2 * v + comp, k)]);
        a += 2.0 * gc.transpose() * &lap * &gc;
    }
    // Symmetrize away round-off.
    let at = a.transpose();
    Ok(0.5 * (a + at))
}

/// Scalar time profile with closed-form derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `t`
    Ramp,
    /// `sin t`
    Sin,
    /// `1`
    Const,
    /// `0`
    Zero,
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Ramp => t,
            Profile::Sin => t.sin(),
            Profile::Const => 1.0,
            Profile::Zero => 0.0,
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Profile::Ramp => 1.0,
            Profile::Sin => t.cos(),
            Profile::Const | Profile::Zero => 0.0,
        }
    }

    pub fn parse(s: &str) -> Option<Profile> {
        match s {
            "ramp" => Some(Profile::Ramp),
            "sin" => Some(Profile::Sin),
            "const" => Some(Profile::Const),
            "zero" => Some(Profile::Zero),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Ramp => "ramp",
            Profile::Sin => "sin",
            Profile::Const => "const",
            Profile::Zero => "zero",
        }
    }
}

/// Boundary displacement `w(t) = theta(t) lift` and nodal load `F(t) = phi(t) f0`.
#[derive(Debug, Clone)]
pub struct LoadingSpec {
    /// Fixed extension of the Dirichlet data into the domain.
    pub lift: Vec<[f64; 2]>,
    pub f0: Vec<[f64; 2]>,
    pub theta: Profile,
    pub phi: Profile,
    pub horizon: f64,
}

/// Loading evaluated at one instant.
#[derive(Debug, Clone)]
pub struct LoadEval {
    pub w: Vec<[f64; 2]>,
    pub w_rate: Vec<[f64; 2]>,
    pub f: Vec<[f64; 2]>,
    pub f_rate: Vec<[f64; 2]>,
}

impl LoadingSpec {
    /// Builds the lift by bilinear blending of the edge data along each grid row:
    /// `w(x, y) = (1 - x) g_left(y) + x g_right(y)`, with `g_right = 0` when the
    /// right edge is free.
    pub fn from_dirichlet(grid: &Grid, g_d: &[[f64; 2]], f0: Vec<[f64; 2]>, theta: Profile, phi: Profile, horizon: f64) -> Result<LoadingSpec> {
        let nn = grid.n_nodes();
        if g_d.len() != nn || f0.len() != nn {
            return Err(Error::LengthMismatch("loading fields must be nodal".into()));
        }
        let n = grid.n;
        let mut lift = vec![[0.0; 2]; nn];
        for j in 0..n {
            let left = j * n;
            let right = j * n + n - 1;
            let gl = if grid.dirichlet[left] { g_d[left] } else { [0.0; 2] };
            let gr = if grid.dirichlet[right] { g_d[right] } else { [0.0; 2] };
            for i in 0..n {
                let x = grid.coords[j * n + i][0];
                for k in 0..2 {
                    lift[j * n + i][k] = (1.0 - x) * gl[k] + x * gr[k];
                }
            }
        }
        Self::with_lift(grid, lift, f0, theta, phi, horizon)
    }

    /// Uses a given nodal field as the lift.
    pub fn with_lift(grid: &Grid, lift: Vec<[f64; 2]>, f0: Vec<[f64; 2]>, theta: Profile, phi: Profile, horizon: f64) -> Result<LoadingSpec> {
        if lift.len() != grid.n_nodes() || f0.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch("loading fields must be nodal".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParam { name: "T", reason: "horizon must be positive".into() });
        }
        Ok(LoadingSpec { lift, f0, theta, phi, horizon })
    }

    /// No boundary displacement, no load.
    pub fn zero(grid: &Grid, horizon: f64) -> LoadingSpec {
        let nn = grid.n_nodes();
        LoadingSpec { lift: vec![[0.0; 2]; nn], f0: vec![[0.0; 2]; nn], theta: Profile::Zero, phi: Profile::Zero, horizon }
    }

    pub fn eval(&self, t: f64) -> Result<LoadEval> {
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        let scale = |field: &[[f64; 2]], a: f64| field.iter().map(|v| [a * v[0], a * v[1]]).collect::<Vec<_>>();
        Ok(LoadEval {
            w: scale(&self.lift, self.theta.value(t)),
            w_rate: scale(&self.lift, self.theta.rate(t)),
            f: scale(&self.f0, self.phi.value(t)),
            f_rate: scale(&self.f0, self.phi.rate(t)),
        })
    }
}

/// `e = B(u + w) - p` cellwise.
pub fn total_strain(grid: &Grid, b: &SymGradOp, state: &State, w: &[[f64; 2]]) -> Vec<SymTensor2> {
    let uw: Vec<[f64; 2]> = state.u.iter().zip(w).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
    b.apply(grid, &uw).into_iter().zip(&state.p).map(|(e, p)| e - *p).collect()
}

pub(crate) fn add_fields(a: &[[f64; 2]], b: &[[f64; 2]]) -> Vec<[f64; 2]> {
    a.iter().zip(b).map(|(x, y)| [x[0] + y[0], x[1] + y[1]]).collect()
}

pub(crate) fn dot_fields(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_partition_unity() {
        for n in 2..7 {
            let g = Grid::new(n, DirichletEdges::Left).unwrap();
            let sc: f64 = g.cell_weight * g.n_cells() as f64;
            let sn: f64 = g.node_weights.iter().sum();
            assert!((sc - 1.0).abs() < 1e-12);
            assert!((sn - 1.0).abs() < 1e-12);
            assert!(g.dirichlet.iter().any(|&d| d));
        }
    }

    #[test]
    fn sym_gradient_linear_fields() {
        let g = Grid::new(3, DirichletEdges::Left).unwrap();
        let b = assemble_sym_gradient(&g);
        let u1: Vec<[f64; 2]> = g.coords.iter().map(|x| [x[0], 0.0]).collect();
        for e in b.apply(&g, &u1) {
            assert!((e.xx - 1.0).abs() < 1e-14 && e.yy.abs() < 1e-14 && e.xy.abs() < 1e-14);
        }
        let u2: Vec<[f64; 2]> = g.coords.iter().map(|x| [x[1], x[0]]).collect();
        for e in b.apply(&g, &u2) {
            assert!(e.xx.abs() < 1e-14 && e.yy.abs() < 1e-14 && (e.xy - 1.0).abs() < 1e-14);
        }
        let c: Vec<[f64; 2]> = vec![[0.3, -1.2]; g.n_nodes()];
        for e in b.apply(&g, &c) {
            assert!(e.norm() < 1e-14);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let g = Grid::new(4, DirichletEdges::Left).unwrap();
        let b = assemble_sym_gradient(&g);
        let u: Vec<[f64; 2]> = (0..g.n_nodes()).map(|k| [(k as f64 * 0.37).sin(), (k as f64 * 1.3).cos()]).collect();
        let s: Vec<SymTensor2> = (0..g.n_cells()).map(|c| SymTensor2::new(c as f64, 1.0 - c as f64 * 0.2, 0.5 * c as f64)).collect();
        let w = vec![0.7; g.n_cells()];
        let lhs: f64 = b.apply(&g, &u).iter().zip(&s).zip(&w).map(|((e, s), w)| w * e.dot(s)).sum();
        let rhs = dot_fields(&b.apply_transpose(&g, &s, &w), &u);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn nonlocal_rejects_small_order() {
        let g = Grid::new(3, DirichletEdges::Left).unwrap();
        assert!(assemble_nonlocal_form(&g, 1.0).is_err());
        assert!(assemble_nonlocal_form(&g, 0.5).is_err());
    }

    #[test]
    fn nonlocal_annihilates_constants() {
        let g = Grid::new(4, DirichletEdges::Left).unwrap();
        let a = assemble_nonlocal_form(&g, 1.5).unwrap();
        let one = nalgebra::DVector::from_element(g.n_nodes(), 1.0);
        assert!((&a * one).amax() < 1e-10);
    }

    #[test]
    fn dev_split_exact() {
        let t = SymTensor2::new(1.5, -0.25, 0.75);
        let d = t.dev();
        assert_eq!(d.tr(), 0.0);
        let back = d + SymTensor2::iso(0.5 * t.tr());
        assert_eq!(back, t);
    }

    #[test]
    fn loading_sin_rate() {
        let g = Grid::new(3, DirichletEdges::Left).unwrap();
        let f0 = vec![[1.0, -2.0]; g.n_nodes()];
        let l = LoadingSpec::from_dirichlet(&g, &vec![[0.0; 2]; g.n_nodes()], f0.clone(), Profile::Ramp, Profile::Sin, 2.0).unwrap();
        let e = l.eval(0.0).unwrap();
        assert_eq!(e.f_rate, f0);
        assert!(e.w.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
        assert!(l.eval(2.5).is_err());
    }
}
