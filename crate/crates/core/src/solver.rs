//! Backward Euler time stepping with Newton's method for both schemes.
//!
//! Step `k` solves `R(u) = 0` with
//!
//! ```text
//! R(u) = M (u - u^{k-1}) / dt + nu (A u + d_k) + alpha B(u) - beta C(u)
//!      + eta dt [A (w_kk u + sum_{j<k} w_kj u^j) + sum_j w_kj d_j]
//!      + Gamma(1-mu)^-1 M sum_j c_kj (u^j - u^{j-1})      (Caputo mode)
//!      + M v^k(u)                                           (FitzHugh-Nagumo)
//!      - F_k
//! ```
//!
//! where `d_j` is the SIPG boundary data at `t_j` (DG only; CR imposes
//! Dirichlet values strongly) and `F_k` the time-averaged load.

use std::sync::Arc;

use crate::cr::apply_dirichlet_values;
use crate::error::{Error, Result};
use crate::forms::{
    accumulate_convection, accumulate_reaction, assemble_load, assemble_mass, assemble_stiffness_cr,
    assemble_stiffness_dg, broken_grad_norm_sq, dg_dirichlet_data, jump_penalty_sq, ModelParams, Rules, LOAD_DEGREE,
};
use crate::kernel::{caputo_prefactor, caputo_weights, memory_weights, KernelSpec, KernelWeights};
use crate::linalg::{dot, gmres, norm2, solve_gmres, LuFactor, SparseMatrix};
use crate::mesh::Point;
use crate::quadrature::{gauss_legendre, triangle_rule};
use crate::space::{FieldVector, Scheme, Space};

const LAGGED_GMRES_ITERS: usize = 12;

/// Function of space and time.
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
    pub delta_t: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("at least one time step is required"));
        }
        Ok(TimeGrid { t_final, n_steps, delta_t: t_final / n_steps as f64 })
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_final
        } else {
            k as f64 * self.delta_t
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum LinearSolver {
    Lu,
    Gmres { restart: usize, max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub linear: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 25, linear: LinearSolver::Lu }
    }
}

/// Recovery variable `v_t = eps (u - rho v)` coupled as `+ v` in the u-equation.
#[derive(Debug, Clone)]
pub struct FhnCoupling {
    pub eps: f64,
    pub rho: f64,
    pub v0: FieldVector,
}

/// Implicit Euler update `v^k = (v^{k-1} + dt eps u^k) / (1 + dt eps rho)`, per dof.
pub fn fhn_update(v_prev: &[f64], u_new: &[f64], eps: f64, rho: f64, dt: f64) -> Vec<f64> {
    let denom = 1.0 + dt * eps * rho;
    v_prev.iter().zip(u_new).map(|(v, u)| (v + dt * eps * u) / denom).collect()
}

/// Everything that defines one run.
#[derive(Clone)]
pub struct Problem {
    pub space: Space,
    pub params: ModelParams,
    pub kernel: KernelSpec,
    pub grid: TimeGrid,
    pub u0: FieldVector,
    /// `None` means `f = 0`.
    pub forcing: Option<SpaceTimeFn>,
    /// Dirichlet data; `None` means homogeneous.
    pub boundary: Option<SpaceTimeFn>,
    pub fhn: Option<FhnCoupling>,
    pub newton: NewtonOptions,
}

impl Problem {
    pub fn new(space: Space, params: ModelParams, kernel: KernelSpec, grid: TimeGrid, u0: FieldVector) -> Self {
        Problem {
            space,
            params,
            kernel,
            grid,
            u0,
            forcing: None,
            boundary: None,
            fhn: None,
            newton: NewtonOptions::default(),
        }
    }

    pub fn with_forcing(mut self, f: SpaceTimeFn) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn with_boundary(mut self, g: SpaceTimeFn) -> Self {
        self.boundary = Some(g);
        self
    }

    pub fn with_fhn(mut self, fhn: FhnCoupling) -> Self {
        self.fhn = Some(fhn);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.kernel.validate()?;
        if self.u0.len() != self.space.n_dofs() {
            return Err(Error::invalid("initial field does not match the space"));
        }
        if let Some(f) = &self.fhn {
            if !(f.eps >= 0.0) || !(f.rho >= 0.0) || !f.eps.is_finite() || !f.rho.is_finite() {
                return Err(Error::invalid("FitzHugh-Nagumo eps and rho must be finite and nonnegative"));
            }
            if f.v0.len() != self.space.n_dofs() {
                return Err(Error::invalid("initial recovery field does not match the space"));
            }
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 {
            return Err(Error::invalid("Newton tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    /// Residual norm before each Newton update and after the last one.
    pub residual_history: Vec<f64>,
    pub l2_norm: f64,
    pub grad_norm: f64,
    /// `dt sum_{j<=k} |||u^j|||^2` (broken gradient, plus jumps for DG).
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FieldVector>,
    pub v_states: Option<Vec<FieldVector>>,
    /// One entry per step `k = 1..=N`.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn max_newton_iterations(&self) -> usize {
        self.diagnostics.iter().map(|d| d.newton_iterations).max().unwrap_or(0)
    }
}

/// Incremental time stepper.
pub struct Stepper {
    problem: Problem,
    rules: Rules,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    /// Linear, step-independent part of the Jacobian.
    linear: SparseMatrix,
    linear_factor: Option<LuFactor>,
    /// Most recent Newton Jacobian factorization, reused as a GMRES preconditioner.
    lagged: Option<LuFactor>,
    memory: Option<KernelWeights>,
    caputo: Option<(KernelWeights, f64)>,
    states: Vec<FieldVector>,
    v_states: Vec<FieldVector>,
    /// SIPG boundary data `d_j` for `j = 0..k` (DG with boundary data only).
    data_history: Vec<Vec<f64>>,
    diagnostics: Vec<StepDiagnostics>,
    boundary_dofs: Vec<usize>,
    energy: f64,
}

impl Stepper {
    /// Tries GMRES preconditioned by the last factorization; refactors when
    /// that does not converge quickly.
    fn lagged_solve(&mut self, jac: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        if let Some(lu) = &self.lagged {
            let tol = 1e-13 * (1.0 + norm2(rhs));
            if let Ok((x, _)) = gmres(jac, rhs, None, |v| lu.apply(v), tol, LAGGED_GMRES_ITERS, LAGGED_GMRES_ITERS) {
                return Ok(x);
            }
        }
        let lu = jac.factorize()?;
        let x = lu.solve(rhs)?;
        self.lagged = Some(lu);
        Ok(x)
    }

    pub fn new(problem: Problem) -> Result<Self> {
        problem.validate()?;
        let space = &problem.space;
        let p = &problem.params;
        let dt = problem.grid.delta_t;
        let n = problem.grid.n_steps;
        let mass = assemble_mass(space);
        let stiffness = match space.kind() {
            Scheme::Cr => assemble_stiffness_cr(space),
            Scheme::Dg => assemble_stiffness_dg(space, p.penalty_gamma)?,
        };
        let memory = if p.eta != 0.0 { Some(memory_weights(&problem.kernel, dt, n)?) } else { None };
        let caputo = match problem.kernel.caputo_order {
            Some(mc) => Some((caputo_weights(mc, dt, n)?, caputo_prefactor(mc))),
            None => None,
        };
        let mut mass_coef = 1.0 / dt;
        if let Some((w, pre)) = &caputo {
            mass_coef += pre * w.diag();
        }
        if let Some(f) = &problem.fhn {
            mass_coef += dt * f.eps / (1.0 + dt * f.eps * f.rho);
        }
        let stiff_coef = p.nu + memory.as_ref().map_or(0.0, |w| p.eta * dt * w.diag());
        let mut linear = mass.clone();
        linear.scale(mass_coef);
        linear.axpy(stiff_coef, &stiffness)?;

        let boundary_dofs = match space.kind() {
            Scheme::Cr => space.dofs().boundary_dofs.clone(),
            Scheme::Dg => Vec::new(),
        };
        let is_linear = p.alpha == 0.0 && p.beta == 0.0;
        let linear_factor = if is_linear && problem.newton.linear == LinearSolver::Lu {
            let mut j = linear.clone();
            let mut dummy = vec![0.0; space.n_dofs()];
            apply_zero_dirichlet(space, &mut j, &mut dummy);
            Some(j.factorize()?)
        } else {
            None
        };

        let mut u0 = problem.u0.clone();
        if let Some(g) = &problem.boundary {
            for &b in &boundary_dofs {
                u0.values[b] = g(space.dofs().dof_locations[b], 0.0);
            }
        }
        let v_states = problem.fhn.as_ref().map(|f| vec![f.v0.clone()]).unwrap_or_default();
        let data_history = match (&problem.boundary, space.kind()) {
            (Some(g), Scheme::Dg) => vec![dg_dirichlet_data(space, p.penalty_gamma, |x| g(x, 0.0))],
            _ => Vec::new(),
        };
        let rules = Rules::for_params(p);
        Ok(Stepper {
            problem,
            rules,
            mass,
            stiffness,
            linear,
            linear_factor,
            lagged: None,
            memory,
            caputo,
            states: vec![u0],
            v_states,
            data_history,
            diagnostics: Vec::new(),
            boundary_dofs,
            energy: 0.0,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn memory_weights(&self) -> Option<&KernelWeights> {
        self.memory.as_ref()
    }

    /// Index of the last computed step.
    pub fn current_step(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[FieldVector] {
        &self.states
    }

    pub fn is_finished(&self) -> bool {
        self.current_step() >= self.problem.grid.n_steps
    }

    /// Step-constant part of the residual.
    fn constant_part(&self, k: usize) -> Result<Vec<f64>> {
        let pb = &self.problem;
        let space = &pb.space;
        let p = &pb.params;
        let dt = pb.grid.delta_t;
        let (t_prev, t_k) = (pb.grid.t(k - 1), pb.grid.t(k));
        let n = space.n_dofs();
        let u_prev = &self.states[k - 1].values;

        // mass-weighted vector
        let mut mvec: Vec<f64> = u_prev.iter().map(|u| -u / dt).collect();
        if let Some((w, pre)) = &self.caputo {
            // pre [c_kk (u - u^{k-1}) + sum_{j<k} c_kj (u^j - u^{j-1})]
            for (m, x) in mvec.iter_mut().enumerate() {
                *x -= pre * w.diag() * u_prev[m];
            }
            for j in 1..k {
                let c = pre * w.get(k, j);
                let (uj, uj1) = (&self.states[j].values, &self.states[j - 1].values);
                for m in 0..n {
                    mvec[m] += c * (uj[m] - uj1[m]);
                }
            }
        }
        if let Some(f) = &pb.fhn {
            let denom = 1.0 + dt * f.eps * f.rho;
            let v_prev = &self.v_states[k - 1].values;
            for (x, v) in mvec.iter_mut().zip(v_prev) {
                *x += v / denom;
            }
        }
        let mut b = self.mass.spmv(&mvec)?;

        // stiffness-weighted vector: eta dt sum_{j<k} w_kj u^j
        if let Some(w) = &self.memory {
            let mut h = vec![0.0; n];
            for j in 1..k {
                let c = p.eta * dt * w.get(k, j);
                for (hm, uj) in h.iter_mut().zip(&self.states[j].values) {
                    *hm += c * uj;
                }
            }
            let ah = self.stiffness.spmv(&h)?;
            b.iter_mut().zip(&ah).for_each(|(bi, x)| *bi += x);
        }

        if !self.data_history.is_empty() {
            let dk = &self.data_history[k];
            for (bi, d) in b.iter_mut().zip(dk) {
                *bi += p.nu * d;
            }
            if let Some(w) = &self.memory {
                for j in 1..=k {
                    let c = p.eta * dt * w.get(k, j);
                    for (bi, d) in b.iter_mut().zip(&self.data_history[j]) {
                        *bi += c * d;
                    }
                }
            }
        }

        if let Some(f) = &pb.forcing {
            let load = assemble_load(space, |x, t| f(x, t), t_prev, t_k)?;
            b.iter_mut().zip(&load).for_each(|(bi, l)| *bi -= l);
        }
        Ok(b)
    }

    fn residual(&self, u: &[f64], b: &[f64], t_k: f64, jac: Option<&mut SparseMatrix>) -> Result<Vec<f64>> {
        let pb = &self.problem;
        let mut r = self.linear.spmv(u)?;
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri += bi);
        let mut jac = jac;
        if let Some(j) = jac.as_deref_mut() {
            j.values_mut().copy_from_slice(self.linear.values());
        }
        let g_k = pb.boundary.as_ref().map(|g| {
            let g = g.clone();
            move |x: Point| g(x, t_k)
        });
        let gref: Option<&dyn Fn(Point) -> f64> = g_k.as_ref().map(|g| g as &dyn Fn(Point) -> f64);
        let dg_bdry = if pb.space.kind() == Scheme::Dg { gref } else { None };
        accumulate_convection(&pb.space, u, &pb.params, &self.rules, dg_bdry, 1.0, &mut r, jac.as_deref_mut());
        accumulate_reaction(&pb.space, u, &pb.params, &self.rules, -1.0, &mut r, jac);
        for &bd in &self.boundary_dofs {
            r[bd] = 0.0;
        }
        Ok(r)
    }

    /// Residual and Jacobian of the next step's nonlinear system at `u`,
    /// without advancing. Boundary rows of a CR system are zero in both.
    pub fn newton_system(&mut self, u: &[f64]) -> Result<(Vec<f64>, SparseMatrix)> {
        if self.is_finished() {
            return Err(Error::invalid("all time steps have been taken"));
        }
        if u.len() != self.problem.space.n_dofs() {
            return Err(Error::invalid("state length does not match the space"));
        }
        let k = self.current_step() + 1;
        let t_k = self.problem.grid.t(k);
        let pushed = match (&self.problem.boundary, self.problem.space.kind()) {
            (Some(g), Scheme::Dg) => {
                let d = dg_dirichlet_data(&self.problem.space, self.problem.params.penalty_gamma, |x| g(x, t_k));
                self.data_history.push(d);
                true
            }
            _ => false,
        };
        let b = self.constant_part(k);
        if pushed {
            self.data_history.pop();
        }
        let b = b?;
        let mut jac = SparseMatrix::zeros(self.linear.pattern().clone());
        let r = self.residual(u, &b, t_k, Some(&mut jac))?;
        let ptr = jac.pattern().row_ptr().to_vec();
        for &bd in &self.boundary_dofs {
            jac.values_mut()[ptr[bd]..ptr[bd + 1]].fill(0.0);
        }
        Ok((r, jac))
    }

    /// Advances one step and returns its diagnostics.
    pub fn step(&mut self) -> Result<StepDiagnostics> {
        if self.is_finished() {
            return Err(Error::invalid("all time steps have been taken"));
        }
        let k = self.current_step() + 1;
        let grid = self.problem.grid;
        let t_k = grid.t(k);
        let dt = grid.delta_t;
        let space = self.problem.space.clone();
        let n = space.n_dofs();

        if let (Some(g), Scheme::Dg) = (&self.problem.boundary, space.kind()) {
            let d = dg_dirichlet_data(&space, self.problem.params.penalty_gamma, |x| g(x, t_k));
            self.data_history.push(d);
        }
        let b = self.constant_part(k)?;

        let mut u = self.states[k - 1].values.clone();
        if let Some(g) = &self.problem.boundary {
            for &bd in &self.boundary_dofs {
                u[bd] = g(space.dofs().dof_locations[bd], t_k);
            }
        }

        let opts = self.problem.newton;
        let nonlinear = self.linear_factor.is_none();
        let mut jac = SparseMatrix::zeros(self.linear.pattern().clone());
        let mut history = Vec::new();
        let mut iterations = 0;
        let residual = loop {
            let r =
                if nonlinear { self.residual(&u, &b, t_k, Some(&mut jac))? } else { self.residual(&u, &b, t_k, None)? };
            let rn = norm2(&r);
            history.push(rn);
            if !rn.is_finite() {
                return Err(Error::StepFailed { step: k, iterations, residual: rn });
            }
            if iterations > 0 && rn <= opts.tol {
                break rn;
            }
            if iterations >= opts.max_iter {
                return Err(Error::StepFailed { step: k, iterations, residual: rn });
            }
            let mut rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let delta = match &self.linear_factor {
                Some(f) => f.solve(&rhs),
                None => {
                    apply_zero_dirichlet(&space, &mut jac, &mut rhs);
                    match opts.linear {
                        LinearSolver::Lu => self.lagged_solve(&jac, &rhs),
                        LinearSolver::Gmres { restart, max_iter } => solve_gmres(&jac, &rhs, restart, max_iter),
                    }
                }
            }
            .map_err(|e| match e {
                Error::Singular(msg) => Error::Singular(format!("step {k}: {msg}")),
                other => other,
            })?;
            u.iter_mut().zip(&delta).for_each(|(ui, d)| *ui += d);
            iterations += 1;
        };

        let field = FieldVector::new(space.dofs_arc().clone(), u)?;
        if let Some(f) = &self.problem.fhn {
            let v = fhn_update(&self.v_states[k - 1].values, &field.values, f.eps, f.rho, dt);
            self.v_states.push(FieldVector::new(space.dofs_arc().clone(), v)?);
        }
        let mesh = space.mesh();
        let grad_sq = broken_grad_norm_sq(&field, mesh);
        let mut energy_sq = grad_sq;
        if space.kind() == Scheme::Dg {
            energy_sq += jump_penalty_sq(&field, &space, self.problem.params.penalty_gamma, |_| 0.0);
        }
        self.energy += dt * energy_sq;
        let l2 = dot(&field.values, &self.mass.spmv(&field.values)?).max(0.0).sqrt();
        let diag = StepDiagnostics {
            step: k,
            time: t_k,
            newton_iterations: iterations,
            residual,
            residual_history: history,
            l2_norm: l2,
            grad_norm: grad_sq.sqrt(),
            energy: self.energy,
        };
        debug_assert_eq!(field.len(), n);
        self.states.push(field);
        self.diagnostics.push(diag.clone());
        Ok(diag)
    }

    pub fn into_trajectory(self) -> Trajectory {
        let grid = self.problem.grid;
        Trajectory {
            times: (0..self.states.len()).map(|k| grid.t(k)).collect(),
            states: self.states,
            v_states: if self.problem.fhn.is_some() { Some(self.v_states) } else { None },
            diagnostics: self.diagnostics,
        }
    }
}

fn apply_zero_dirichlet(space: &Space, matrix: &mut SparseMatrix, rhs: &mut [f64]) {
    if space.kind() == Scheme::Cr {
        let zeros = vec![0.0; space.n_dofs()];
        apply_dirichlet_values(space.dofs(), &zeros, matrix, rhs);
    }
}

/// Runs all steps.
pub fn run(problem: Problem) -> Result<Trajectory> {
    let mut stepper = Stepper::new(problem)?;
    while !stepper.is_finished() {
        stepper.step()?;
    }
    Ok(stepper.into_trajectory())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `sup_k |u^k|^2 + nu dt sum_k |grad_h u^k|^2`.
    pub lhs: f64,
    /// `(|u_0|^2 + nu^-1 int_0^T |f|^2 dt) exp(beta (1 + gamma^2) T)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates both sides of the a priori energy bound on a computed
/// trajectory (homogeneous boundary data).
pub fn stability_check(
    traj: &Trajectory,
    space: &Space,
    params: &ModelParams,
    grid: &TimeGrid,
    f: Option<&dyn Fn(Point, f64) -> f64>,
    u0: &dyn Fn(Point) -> f64,
) -> StabilityReport {
    let mesh = space.mesh();
    let mass = assemble_mass(space);
    let dt = grid.delta_t;
    let mut sup: f64 = 0.0;
    let mut grad_sum = 0.0;
    for (k, u) in traj.states.iter().enumerate() {
        let l2 = dot(&u.values, &mass.spmv(&u.values).expect("sizes match"));
        sup = sup.max(l2);
        if k > 0 {
            grad_sum += broken_grad_norm_sq(u, mesh);
        }
    }
    let lhs = sup + params.nu * dt * grad_sum;

    let rule = triangle_rule(LOAD_DEGREE).expect("rule");
    let mut u0_sq = 0.0;
    for c in 0..mesh.n_cells() {
        let g = mesh.geometry(c);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            u0_sq += w * 2.0 * g.area * u0(g.point(*lam)).powi(2);
        }
    }
    let mut f_sq = 0.0;
    if let Some(f) = f {
        let (ts, tw) = gauss_legendre(3);
        for k in 1..=grid.n_steps {
            let (a, b) = (grid.t(k - 1), grid.t(k));
            for (s, wt) in ts.iter().zip(&tw) {
                let t = a + s * (b - a);
                for c in 0..mesh.n_cells() {
                    let g = mesh.geometry(c);
                    for (lam, w) in rule.points.iter().zip(&rule.weights) {
                        f_sq += (b - a) * wt * w * 2.0 * g.area * f(g.point(*lam), t).powi(2);
                    }
                }
            }
        }
    }
    let growth = (params.beta * (1.0 + params.reaction_gamma.powi(2)) * grid.t_final).exp();
    let rhs = (u0_sq + f_sq / params.nu) * growth;
    StabilityReport { lhs, rhs, holds: lhs <= rhs }
}
