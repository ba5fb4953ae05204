//! Finite element forms: mass, diffusion (CR and SIPG), skew-symmetrized
//! convection, Huxley reaction and time-averaged loads.
//!
//! Nonlinear residuals are returned together with their exact Jacobians on
//! the pattern of the owning [`Space`].

use crate::dg::{edge_contexts, EdgeTraceContext};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_rule, gauss_legendre, triangle_rule, EdgeRule, TriangleRule, MAX_DEGREE};
use crate::space::{FieldVector, Scheme, Space};

/// Spatial quadrature degree used for forcing integrals and error norms.
pub const LOAD_DEGREE: usize = 6;

/// Default SIPG penalty scale `10 (p + 1)^2` for `p = 1`.
pub const DEFAULT_PENALTY: f64 = 40.0;

/// Coefficients of `u_t - nu Lap u + alpha u^delta (u_x + u_y) - beta c(u) - eta K * Lap u = f`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub reaction_gamma: f64,
    pub delta: u32,
    pub eta: f64,
    #[serde(default = "default_penalty")]
    pub penalty_gamma: f64,
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            nu: 1.0,
            alpha: 1.0,
            beta: 1.0,
            reaction_gamma: 0.5,
            delta: 1,
            eta: 1.0,
            penalty_gamma: DEFAULT_PENALTY,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::invalid(msg)) };
        check(self.nu > 0.0 && self.nu.is_finite(), format!("nu must be positive, got {}", self.nu))?;
        check(self.alpha >= 0.0 && self.alpha.is_finite(), format!("alpha must be nonnegative, got {}", self.alpha))?;
        check(self.beta >= 0.0 && self.beta.is_finite(), format!("beta must be nonnegative, got {}", self.beta))?;
        check(
            self.reaction_gamma > 0.0 && self.reaction_gamma < 1.0,
            format!("reaction_gamma must lie in (0, 1), got {}", self.reaction_gamma),
        )?;
        check(self.delta >= 1, format!("delta must be a positive integer, got {}", self.delta))?;
        check(self.eta >= 0.0 && self.eta.is_finite(), format!("eta must be nonnegative, got {}", self.eta))?;
        check(
            self.penalty_gamma > 0.0 && self.penalty_gamma.is_finite(),
            format!("penalty_gamma must be positive, got {}", self.penalty_gamma),
        )
    }

    /// `max(2 delta + 3, 4)`, capped at the largest tabulated rule.
    pub fn nonlinear_degree(&self) -> usize {
        (2 * self.delta as usize + 3).clamp(4, MAX_DEGREE)
    }
}

/// `c(u) = u (1 - u^delta) (u^delta - gamma)`.
pub fn reaction_value(u: f64, gamma: f64, delta: u32) -> f64 {
    let p = u.powi(delta as i32);
    u * (1.0 - p) * (p - gamma)
}

/// `c'(u) = (1 + gamma)(delta + 1) u^delta - gamma - (2 delta + 1) u^(2 delta)`.
pub fn reaction_derivative(u: f64, gamma: f64, delta: u32) -> f64 {
    let d = delta as f64;
    let p = u.powi(delta as i32);
    (1.0 + gamma) * (d + 1.0) * p - gamma - (2.0 * d + 1.0) * p * p
}

/// Quadrature rules shared by the assembly routines of one model.
#[derive(Debug, Clone)]
pub struct Rules {
    pub cell: TriangleRule,
    pub edge: EdgeRule,
}

impl Rules {
    pub fn for_params(params: &ModelParams) -> Self {
        let d = params.nonlinear_degree();
        Rules { cell: triangle_rule(d).expect("degree within range"), edge: edge_rule(d).expect("degree within range") }
    }
}

/// `(phi_j, phi_i)`.
pub fn assemble_mass(space: &Space) -> SparseMatrix {
    let rule = triangle_rule(2).expect("degree 2 rule");
    let mesh = space.mesh();
    let mut m = SparseMatrix::zeros(space.pattern().clone());
    for c in 0..mesh.n_cells() {
        let jac = 2.0 * mesh.geometry(c).area;
        let mut local = [[0.0; 3]; 3];
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let (phi, _) = space.basis(c, *lam);
            for a in 0..3 {
                for b in 0..3 {
                    local[a][b] += w * jac * phi[a] * phi[b];
                }
            }
        }
        let d = space.cell_dofs(c);
        m.add_local(&d, &d, &local);
    }
    m
}

fn cell_stiffness(space: &Space, m: &mut SparseMatrix) {
    let mesh = space.mesh();
    for c in 0..mesh.n_cells() {
        let area = mesh.geometry(c).area;
        let (_, g) = space.basis(c, [1.0 / 3.0; 3]);
        let mut local = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                local[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        let d = space.cell_dofs(c);
        m.add_local(&d, &d, &local);
    }
}

/// Broken `(grad_h phi_j, grad_h phi_i)`.
pub fn assemble_stiffness_cr(space: &Space) -> SparseMatrix {
    let mut m = SparseMatrix::zeros(space.pattern().clone());
    cell_stiffness(space, &mut m);
    m
}

/// Symmetric interior penalty form with consistency, symmetry and penalty
/// terms on every edge (boundary edges included).
pub fn assemble_stiffness_dg(space: &Space, penalty_gamma: f64) -> Result<SparseMatrix> {
    if space.kind() != Scheme::Dg {
        return Err(Error::invalid("SIPG stiffness requires a DG space"));
    }
    if !(penalty_gamma > 0.0) {
        return Err(Error::invalid(format!("penalty must be positive, got {penalty_gamma}")));
    }
    let mesh = space.mesh();
    let mut m = SparseMatrix::zeros(space.pattern().clone());
    cell_stiffness(space, &mut m);
    let rule = edge_rule(2)?;
    for ctx in edge_contexts(mesh, &rule) {
        let pen = penalty_gamma / ctx.h_e;
        let n = ctx.normal;
        let gp = mesh.geometry(ctx.plus).grad_lambda;
        match ctx.minus {
            None => {
                let mut local = [[0.0; 3]; 3];
                let gn: Vec<f64> = gp.iter().map(|g| g[0] * n[0] + g[1] * n[1]).collect();
                for (lam, w) in ctx.lambda_plus.iter().zip(&ctx.weights) {
                    for a in 0..3 {
                        for b in 0..3 {
                            local[a][b] += w * (-gn[b] * lam[a] - gn[a] * lam[b] + pen * lam[a] * lam[b]);
                        }
                    }
                }
                let d = space.cell_dofs(ctx.plus);
                m.add_local(&d, &d, &local);
            }
            Some(mc) => {
                let gm = mesh.geometry(mc).grad_lambda;
                let mut g = [0.0; 6];
                for a in 0..3 {
                    g[a] = 0.5 * (gp[a][0] * n[0] + gp[a][1] * n[1]);
                    g[a + 3] = 0.5 * (gm[a][0] * n[0] + gm[a][1] * n[1]);
                }
                let mut local = [[0.0; 6]; 6];
                for q in 0..ctx.len() {
                    let (lp, lm) = (ctx.lambda_plus[q], ctx.lambda_minus[q]);
                    let j = [lp[0], lp[1], lp[2], -lm[0], -lm[1], -lm[2]];
                    let w = ctx.weights[q];
                    for a in 0..6 {
                        for b in 0..6 {
                            local[a][b] += w * (-g[b] * j[a] - g[a] * j[b] + pen * j[a] * j[b]);
                        }
                    }
                }
                let dp = space.cell_dofs(ctx.plus);
                let dm = space.cell_dofs(mc);
                let d = [dp[0], dp[1], dp[2], dm[0], dm[1], dm[2]];
                m.add_local(&d, &d, &local);
            }
        }
    }
    Ok(m)
}

/// Boundary data of the SIPG form: with exterior trace `g`, the diffusion
/// residual is `A u + d` where `d_a = int (grad phi_a . n) g - gamma_h g phi_a`.
pub fn dg_dirichlet_data(space: &Space, penalty_gamma: f64, g: impl Fn(Point) -> f64) -> Vec<f64> {
    let mesh = space.mesh();
    let rule = edge_rule(LOAD_DEGREE).expect("edge rule");
    let mut d = vec![0.0; space.n_dofs()];
    for e in (0..mesh.n_edges()).filter(|&e| mesh.is_boundary_edge(e)) {
        let ctx = EdgeTraceContext::new(mesh, e, &rule).expect("edge in range");
        let pen = penalty_gamma / ctx.h_e;
        let gp = mesh.geometry(ctx.plus).grad_lambda;
        let dofs = space.cell_dofs(ctx.plus);
        for q in 0..ctx.len() {
            let gv = g(ctx.points[q]);
            if gv == 0.0 {
                continue;
            }
            let lam = ctx.lambda_plus[q];
            for a in 0..3 {
                let gn = gp[a][0] * ctx.normal[0] + gp[a][1] * ctx.normal[1];
                d[dofs[a]] += ctx.weights[q] * gv * (gn - pen * lam[a]);
            }
        }
    }
    d
}

/// Accumulates `scale * alpha * b(u; u, phi_i)` and its Jacobian.
///
/// For DG the upwind faces use `w = u_K^delta (1, 1)` from the owning cell
/// and exterior data `g` on the boundary (`None` means `g = 0`); the
/// boundary outflow part of the data is added so that smooth solutions with
/// nonzero boundary values satisfy the discrete form.
pub fn accumulate_convection(
    space: &Space,
    u: &[f64],
    params: &ModelParams,
    rules: &Rules,
    boundary: Option<&dyn Fn(Point) -> f64>,
    scale: f64,
    res: &mut [f64],
    mut jac: Option<&mut SparseMatrix>,
) {
    let coef = scale * params.alpha / (params.delta as f64 + 2.0);
    if coef == 0.0 {
        return;
    }
    let delta = params.delta as i32;
    let df = params.delta as f64;
    let mesh = space.mesh();
    for c in 0..mesh.n_cells() {
        let jw = 2.0 * mesh.geometry(c).area;
        let dofs = space.cell_dofs(c);
        let uc = [u[dofs[0]], u[dofs[1]], u[dofs[2]]];
        let (_, grads) = space.basis(c, [1.0 / 3.0; 3]);
        let s_phi = [grads[0][0] + grads[0][1], grads[1][0] + grads[1][1], grads[2][0] + grads[2][1]];
        let s_u = uc[0] * s_phi[0] + uc[1] * s_phi[1] + uc[2] * s_phi[2];
        let mut r_loc = [0.0; 3];
        let mut j_loc = [[0.0; 3]; 3];
        for (lam, w) in rules.cell.points.iter().zip(&rules.cell.weights) {
            let (phi, _) = space.basis(c, *lam);
            let uq = uc[0] * phi[0] + uc[1] * phi[1] + uc[2] * phi[2];
            let p = uq.powi(delta);
            let dp = df * uq.powi(delta - 1);
            let cw = coef * w * jw;
            for i in 0..3 {
                r_loc[i] += cw * p * (s_u * phi[i] - s_phi[i] * uq);
                for j in 0..3 {
                    j_loc[i][j] +=
                        cw * (dp * phi[j] * s_u * phi[i] + p * s_phi[j] * phi[i] - (df + 1.0) * p * phi[j] * s_phi[i]);
                }
            }
        }
        for i in 0..3 {
            res[dofs[i]] += r_loc[i];
        }
        if let Some(j) = jac.as_deref_mut() {
            j.add_local(&dofs, &dofs, &j_loc);
        }
    }
    if space.kind() == Scheme::Dg {
        upwind_faces(space, u, params, rules, boundary, coef, res, jac);
    }
}

// Face part of the DG form. Combining the two flux integrals on the side of
// cell K gives am * (u^e v_K - v^e u_K) with am = min(w . n_K, 0).
#[allow(clippy::too_many_arguments)]
fn upwind_faces(
    space: &Space,
    u: &[f64],
    params: &ModelParams,
    rules: &Rules,
    boundary: Option<&dyn Fn(Point) -> f64>,
    coef: f64,
    res: &mut [f64],
    mut jac: Option<&mut SparseMatrix>,
) {
    let delta = params.delta as i32;
    let df = params.delta as f64;
    let mesh = space.mesh();
    for ctx in edge_contexts(mesh, &rules.edge) {
        let s_n = ctx.normal[0] + ctx.normal[1];
        let sides: Vec<(usize, Option<usize>, f64, bool)> = match ctx.minus {
            None => vec![(ctx.plus, None, s_n, true)],
            Some(m) => vec![(ctx.plus, Some(m), s_n, true), (m, Some(ctx.plus), -s_n, false)],
        };
        for (own, other, s, own_is_plus) in sides {
            let od = space.cell_dofs(own);
            let ou = [u[od[0]], u[od[1]], u[od[2]]];
            let mut r_own = [0.0; 3];
            let mut r_oth = [0.0; 3];
            let mut j_oo = [[0.0; 3]; 3];
            let mut j_ox = [[0.0; 3]; 3];
            let mut j_xo = [[0.0; 3]; 3];
            for q in 0..ctx.len() {
                let (lo, lx) = if own_is_plus {
                    (ctx.lambda_plus[q], ctx.lambda_minus.get(q).copied())
                } else {
                    (ctx.lambda_minus[q], Some(ctx.lambda_plus[q]))
                };
                let uk = ou[0] * lo[0] + ou[1] * lo[1] + ou[2] * lo[2];
                let a = uk.powi(delta) * s;
                let cw = coef * ctx.weights[q];
                match other {
                    None => {
                        let Some(g) = boundary else { continue };
                        let gv = g(ctx.points[q]);
                        if gv == 0.0 {
                            continue;
                        }
                        // Outflow data keeps the form consistent for smooth solutions.
                        let ag = gv.powi(delta) * s;
                        let am = a.min(0.0);
                        let dam = if a < 0.0 { df * uk.powi(delta - 1) * s } else { 0.0 };
                        for i in 0..3 {
                            r_own[i] += cw * (am * gv + ag.max(0.0) * gv) * lo[i];
                            for j in 0..3 {
                                j_oo[i][j] += cw * dam * lo[j] * gv * lo[i];
                            }
                        }
                    }
                    Some(x) => {
                        if a >= 0.0 {
                            continue;
                        }
                        let xd = space.cell_dofs(x);
                        let lx = lx.expect("interior edge");
                        let ue = u[xd[0]] * lx[0] + u[xd[1]] * lx[1] + u[xd[2]] * lx[2];
                        let dam = df * uk.powi(delta - 1) * s;
                        for i in 0..3 {
                            r_own[i] += cw * a * ue * lo[i];
                            r_oth[i] -= cw * a * uk * lx[i];
                            for j in 0..3 {
                                j_oo[i][j] += cw * dam * lo[j] * ue * lo[i];
                                j_ox[i][j] += cw * a * lx[j] * lo[i];
                                j_xo[i][j] -= cw * (dam * uk + a) * lo[j] * lx[i];
                            }
                        }
                    }
                }
            }
            for i in 0..3 {
                res[od[i]] += r_own[i];
            }
            if let Some(j) = jac.as_deref_mut() {
                j.add_local(&od, &od, &j_oo);
            }
            if let Some(x) = other {
                let xd = space.cell_dofs(x);
                for i in 0..3 {
                    res[xd[i]] += r_oth[i];
                }
                if let Some(j) = jac.as_deref_mut() {
                    j.add_local(&od, &xd, &j_ox);
                    j.add_local(&xd, &od, &j_xo);
                }
            }
        }
    }
}

/// Accumulates `scale * beta * (c(u), phi_i)` and its Jacobian.
pub fn accumulate_reaction(
    space: &Space,
    u: &[f64],
    params: &ModelParams,
    rules: &Rules,
    scale: f64,
    res: &mut [f64],
    mut jac: Option<&mut SparseMatrix>,
) {
    let coef = scale * params.beta;
    if coef == 0.0 {
        return;
    }
    let (gamma, delta) = (params.reaction_gamma, params.delta);
    let mesh = space.mesh();
    for c in 0..mesh.n_cells() {
        let jw = 2.0 * mesh.geometry(c).area;
        let dofs = space.cell_dofs(c);
        let uc = [u[dofs[0]], u[dofs[1]], u[dofs[2]]];
        let mut r_loc = [0.0; 3];
        let mut j_loc = [[0.0; 3]; 3];
        for (lam, w) in rules.cell.points.iter().zip(&rules.cell.weights) {
            let (phi, _) = space.basis(c, *lam);
            let uq = uc[0] * phi[0] + uc[1] * phi[1] + uc[2] * phi[2];
            let cw = coef * w * jw;
            let cv = reaction_value(uq, gamma, delta);
            let dv = reaction_derivative(uq, gamma, delta);
            for i in 0..3 {
                r_loc[i] += cw * cv * phi[i];
                for j in 0..3 {
                    j_loc[i][j] += cw * dv * phi[i] * phi[j];
                }
            }
        }
        for i in 0..3 {
            res[dofs[i]] += r_loc[i];
        }
        if let Some(j) = jac.as_deref_mut() {
            j.add_local(&dofs, &dofs, &j_loc);
        }
    }
}

/// `alpha b(u; u, phi_i)` and its Jacobian, for either scheme with homogeneous data.
pub fn convection(space: &Space, u: &FieldVector, params: &ModelParams) -> (Vec<f64>, SparseMatrix) {
    let rules = Rules::for_params(params);
    let mut res = vec![0.0; space.n_dofs()];
    let mut jac = SparseMatrix::zeros(space.pattern().clone());
    accumulate_convection(space, &u.values, params, &rules, None, 1.0, &mut res, Some(&mut jac));
    (res, jac)
}

pub fn convection_cr(space: &Space, u: &FieldVector, params: &ModelParams) -> (Vec<f64>, SparseMatrix) {
    debug_assert_eq!(space.kind(), Scheme::Cr);
    convection(space, u, params)
}

pub fn convection_dg(space: &Space, u: &FieldVector, params: &ModelParams) -> (Vec<f64>, SparseMatrix) {
    debug_assert_eq!(space.kind(), Scheme::Dg);
    convection(space, u, params)
}

/// `beta (c(u), phi_i)` and its Jacobian.
pub fn reaction(space: &Space, u: &FieldVector, params: &ModelParams) -> (Vec<f64>, SparseMatrix) {
    let rules = Rules::for_params(params);
    let mut res = vec![0.0; space.n_dofs()];
    let mut jac = SparseMatrix::zeros(space.pattern().clone());
    accumulate_reaction(space, &u.values, params, &rules, 1.0, &mut res, Some(&mut jac));
    (res, jac)
}

/// `(f^k, phi_i)` with `f^k` the average of `f` over `[t_prev, t_next]`,
/// using three Gauss points in time.
pub fn assemble_load(space: &Space, f: impl Fn(Point, f64) -> f64, t_prev: f64, t_next: f64) -> Result<Vec<f64>> {
    if !(t_next > t_prev) {
        return Err(Error::invalid(format!("empty time interval [{t_prev}, {t_next}]")));
    }
    let rule = triangle_rule(LOAD_DEGREE)?;
    let (ts, tw) = gauss_legendre(3);
    let times: Vec<f64> = ts.iter().map(|s| t_prev + s * (t_next - t_prev)).collect();
    let mesh = space.mesh();
    let mut load = vec![0.0; space.n_dofs()];
    let phis: Vec<[f64; 3]> = rule.points.iter().map(|lam| space.basis(0, *lam).0).collect();
    // time outermost so that time-dependent factors of f can be reused
    for (&t, &wt) in times.iter().zip(&tw) {
        for c in 0..mesh.n_cells() {
            let g = mesh.geometry(c);
            let jw = wt * 2.0 * g.area;
            let dofs = space.cell_dofs(c);
            for ((lam, w), phi) in rule.points.iter().zip(&rule.weights).zip(&phis) {
                let fx = f(g.point(*lam), t);
                if fx == 0.0 {
                    continue;
                }
                for i in 0..3 {
                    load[dofs[i]] += w * jw * fx * phi[i];
                }
            }
        }
    }
    Ok(load)
}

/// `sum_K |K| |grad u|^2`.
pub fn broken_grad_norm_sq(u: &FieldVector, mesh: &Mesh) -> f64 {
    (0..mesh.n_cells())
        .map(|c| {
            let g = u.grad(mesh, c);
            mesh.geometry(c).area * (g[0] * g[0] + g[1] * g[1])
        })
        .sum()
}

/// `||grad_h u - grad g||` over the mesh.
pub fn broken_h1_error(u: &FieldVector, mesh: &Mesh, grad: impl Fn(Point) -> [f64; 2]) -> f64 {
    let rule = triangle_rule(LOAD_DEGREE).expect("rule");
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        let geo = mesh.geometry(c);
        let gu = u.grad(mesh, c);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let ge = grad(geo.point(*lam));
            s += w * 2.0 * geo.area * ((gu[0] - ge[0]).powi(2) + (gu[1] - ge[1]).powi(2));
        }
    }
    s.sqrt()
}

/// `||u - g||_{L^2}`.
pub fn l2_error(u: &FieldVector, mesh: &Mesh, g: impl Fn(Point) -> f64) -> f64 {
    let rule = triangle_rule(LOAD_DEGREE).expect("rule");
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        let geo = mesh.geometry(c);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let d = u.eval(mesh, c, *lam) - g(geo.point(*lam));
            s += w * 2.0 * geo.area * d * d;
        }
    }
    s.sqrt()
}

/// `sum_E gamma_h ||[[u - g]]||^2_E` with `g` the exterior data on the boundary;
/// interior jumps of the smooth `g` vanish.
pub fn jump_penalty_sq(u: &FieldVector, space: &Space, penalty_gamma: f64, g: impl Fn(Point) -> f64) -> f64 {
    let mesh = space.mesh();
    let rule = edge_rule(4).expect("edge rule");
    let mut s = 0.0;
    for ctx in edge_contexts(mesh, &rule) {
        let pen = penalty_gamma / ctx.h_e;
        for q in 0..ctx.len() {
            let ja = crate::dg::jump_average(&ctx, u, q);
            let j = match ja.minus {
                Some(m) => ja.plus - m,
                None => ja.plus - g(ctx.points[q]),
            };
            s += pen * ctx.weights[q] * j * j;
        }
    }
    s
}

/// `|||v|||^2_DG = sum_K ||grad v||^2 + sum_E gamma_h ||[[v]]||^2`.
pub fn dg_norm_sq(u: &FieldVector, space: &Space, penalty_gamma: f64) -> f64 {
    broken_grad_norm_sq(u, space.mesh()) + jump_penalty_sq(u, space, penalty_gamma, |_| 0.0)
}
