//! Manufactured solutions, their forcing, discrete error norms and
//! convergence studies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forms::{broken_h1_error, jump_penalty_sq, l2_error, reaction_value, ModelParams};
use crate::kernel::{caputo_power_series, convolve_power_series, KernelKind, KernelSpec, PowerSeries};
use crate::mesh::{generate_rect_mesh, Point, Rect};
use crate::quadrature::gauss_legendre;
use crate::solver::{
    stability_check, NewtonOptions, Problem, SpaceTimeFn, StabilityReport, Stepper, TimeGrid, Trajectory,
};
use crate::space::{FieldVector, Scheme, Space};

pub type GradFn = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type SpatialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    TypeI,
    TypeII,
    TravelingWave { re: f64 },
    Custom,
}

/// Value, gradient and Laplacian of a spatial factor at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub laplacian: f64,
}

pub type JetFn = Arc<dyn Fn(Point) -> Jet + Send + Sync>;

/// `u(x, t) = p(t) S(x)`.
#[derive(Clone)]
pub struct Separable {
    pub profile: PowerSeries,
    pub spatial: JetFn,
}

#[derive(Clone)]
enum TimeStructure {
    Separable(Separable),
    /// `u = U(x + y - t)` with logistic rate `r`.
    Wave {
        r: f64,
    },
    Opaque,
}

/// An exact solution with its derivatives.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub kind: CaseKind,
    pub exact: SpaceTimeFn,
    pub grad: GradFn,
    pub laplacian: SpaceTimeFn,
    pub time_derivative: SpaceTimeFn,
    /// Whether `u = 0` on the boundary of the unit square for all `t`.
    pub homogeneous_boundary: bool,
    /// Spatial scale used for the finite-difference probe.
    pub length_scale: f64,
    structure: TimeStructure,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).field("kind", &self.kind).finish_non_exhaustive()
    }
}

fn sine_product(k: f64) -> JetFn {
    let w = k * PI;
    Arc::new(move |p: Point| {
        let (sx, cx) = (w * p[0]).sin_cos();
        let (sy, cy) = (w * p[1]).sin_cos();
        Jet { value: sx * sy, grad: [w * cx * sy, w * sx * cy], laplacian: -2.0 * w * w * sx * sy }
    })
}

/// Logistic front `U(xi) = 1 / (1 + e^{r xi})` and its first two derivatives.
fn logistic(r: f64, xi: f64) -> (f64, f64, f64) {
    let z = r * xi;
    let (u, v) = if z > 0.0 {
        let e = (-z).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = z.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    };
    (u, -r * u * v, r * r * u * v * (v - u))
}

impl ManufacturedCase {
    pub fn separable(
        name: &str,
        kind: CaseKind,
        profile: PowerSeries,
        spatial: JetFn,
        homogeneous_boundary: bool,
    ) -> Self {
        let (p1, s1) = (profile.clone(), spatial.clone());
        let (p2, s2) = (profile.clone(), spatial.clone());
        let (p3, s3) = (profile.clone(), spatial.clone());
        let (p4, s4) = (profile.clone(), spatial.clone());
        ManufacturedCase {
            name: name.to_string(),
            kind,
            exact: Arc::new(move |x, t| p1.eval(t) * s1(x).value),
            grad: Arc::new(move |x, t| {
                let (g, p) = (s2(x).grad, p2.eval(t));
                [p * g[0], p * g[1]]
            }),
            laplacian: Arc::new(move |x, t| p3.eval(t) * s3(x).laplacian),
            time_derivative: Arc::new(move |x, t| p4.derivative(t) * s4(x).value),
            homogeneous_boundary,
            length_scale: 1.0,
            structure: TimeStructure::Separable(Separable { profile, spatial }),
        }
    }

    /// `(t^3 - t^2 + 1) sin(pi x) sin(pi y)`.
    pub fn type_i() -> Self {
        let profile = PowerSeries::new(vec![(1.0, 3.0), (-1.0, 2.0), (1.0, 0.0)]).expect("valid powers");
        Self::separable("type-i", CaseKind::TypeI, profile, sine_product(1.0), true)
    }

    /// `t^{3/2} sin(2 pi x) sin(2 pi y)`.
    pub fn type_ii() -> Self {
        let profile = PowerSeries::new(vec![(1.0, 1.5)]).expect("valid powers");
        Self::separable("type-ii", CaseKind::TypeII, profile, sine_product(2.0), true)
    }

    /// `1 / (1 + exp(Re (x + y - t) / 2))`, to be run with `nu = 1 / Re`.
    pub fn traveling_wave(re: f64) -> Result<Self> {
        if !(re > 0.0) || !re.is_finite() {
            return Err(Error::invalid(format!("Reynolds number must be positive, got {re}")));
        }
        let r = 0.5 * re;
        Ok(ManufacturedCase {
            name: format!("traveling-wave(Re={re})"),
            kind: CaseKind::TravelingWave { re },
            exact: Arc::new(move |x, t| logistic(r, x[0] + x[1] - t).0),
            grad: Arc::new(move |x, t| {
                let d = logistic(r, x[0] + x[1] - t).1;
                [d, d]
            }),
            laplacian: Arc::new(move |x, t| 2.0 * logistic(r, x[0] + x[1] - t).2),
            time_derivative: Arc::new(move |x, t| -logistic(r, x[0] + x[1] - t).1),
            homogeneous_boundary: false,
            length_scale: 1.0 / r,
            structure: TimeStructure::Wave { r },
        })
    }

    /// A user-supplied solution. Without `separable`, memory and Caputo
    /// forcing are unavailable.
    pub fn custom(
        name: &str,
        exact: SpaceTimeFn,
        grad: GradFn,
        laplacian: SpaceTimeFn,
        time_derivative: SpaceTimeFn,
        separable: Option<Separable>,
        homogeneous_boundary: bool,
    ) -> Self {
        ManufacturedCase {
            name: name.to_string(),
            kind: CaseKind::Custom,
            exact,
            grad,
            laplacian,
            time_derivative,
            homogeneous_boundary,
            length_scale: 1.0,
            structure: separable.map_or(TimeStructure::Opaque, TimeStructure::Separable),
        }
    }

    /// Model parameters used with this case by default: all ones with
    /// `gamma = 0.5`, and `nu = 1 / Re` for the traveling wave.
    pub fn default_params(&self) -> ModelParams {
        let mut p = ModelParams::default();
        if let CaseKind::TravelingWave { re } = self.kind {
            p.nu = 1.0 / re;
        }
        p
    }

    /// Compares the derivative closures with fourth-order central differences
    /// at `probes` random points in `(0,1)^2 x (0.05, 1)`.
    pub fn check_consistency(&self, seed: u64, probes: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-3 * self.length_scale;
        let u = &self.exact;
        for _ in 0..probes {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let t = 0.05 + 0.95 * rng.random::<f64>();
            let d1 = |f: &dyn Fn(f64) -> f64| (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
            let d2 = |f: &dyn Fn(f64) -> f64| {
                (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
            };
            let fx = |s: f64| u([x[0] + s, x[1]], t);
            let fy = |s: f64| u([x[0], x[1] + s], t);
            let ft = |s: f64| u(x, t + s);
            let g = (self.grad)(x, t);
            let checks = [
                ("d/dx", d1(&fx), g[0]),
                ("d/dy", d1(&fy), g[1]),
                ("d/dt", d1(&ft), (self.time_derivative)(x, t)),
                ("laplacian", d2(&fx) + d2(&fy), (self.laplacian)(x, t)),
            ];
            for (what, fd, exact) in checks {
                if (fd - exact).abs() > 1e-6 * (1.0 + exact.abs()) {
                    return Err(Error::invalid(format!(
                        "case {}: {what} disagrees with finite differences at ({}, {}, {t}): {exact} vs {fd}",
                        self.name, x[0], x[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `int_0^t K(t - s) g(s) ds` for a power profile, as a series in `t`.
fn kernel_convolution(kernel: &KernelSpec, g: &PowerSeries) -> Result<PowerSeries> {
    match &kernel.kind {
        KernelKind::PowerLaw { mu } => convolve_power_series(g, *mu),
        KernelKind::Constant { value } => {
            let s = convolve_power_series(g, 0.0)?;
            PowerSeries::new(s.terms.iter().map(|&(c, p)| (value * c, p)).collect())
        }
        KernelKind::Tabulated { .. } => {
            Err(Error::Unsupported("closed-form memory forcing needs a power-law or constant kernel".into()))
        }
    }
}

/// Memory integral `int_0^t K(s) 2 U''(xi + s) ds` of the traveling wave.
///
/// Values live on a `xi` grid that is advanced in time by adding the
/// integral over `[t_old, t_new]`, so increasing query times (the order in
/// which a time-stepper asks) cost one short quadrature per grid point.
/// A query earlier than the current time restarts from zero.
struct WaveMemory {
    r: f64,
    mu: f64,
    scale: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    state: Mutex<WaveState>,
}

struct WaveState {
    t: f64,
    lo: f64,
    values: Vec<f64>,
}

impl WaveState {
    fn empty() -> Self {
        WaveState { t: 0.0, lo: -0.05, values: vec![0.0; ((WAVE_XI_MAX + 0.05) / WAVE_TABLE_STEP).ceil() as usize + 1] }
    }
}

const WAVE_PANELS: usize = 128;
const WAVE_TABLE_STEP: f64 = 1e-3;
const WAVE_XI_MAX: f64 = 2.05;

impl WaveMemory {
    fn new(r: f64, kernel: &KernelSpec) -> Result<Self> {
        let (mu, scale) = match &kernel.kind {
            KernelKind::PowerLaw { mu } => (*mu, 1.0),
            KernelKind::Constant { value } => (0.0, *value),
            KernelKind::Tabulated { .. } => {
                return Err(Error::Unsupported(
                    "traveling-wave memory forcing needs a power-law or constant kernel".into(),
                ))
            }
        };
        let (nodes, weights) = gauss_legendre(8);
        Ok(WaveMemory { r, mu, scale, nodes, weights, state: Mutex::new(WaveState::empty()) })
    }

    fn negligible(&self, xi: f64, s0: f64, s1: f64) -> bool {
        let zmin = if xi + s0 > 0.0 {
            xi + s0
        } else if xi + s1 < 0.0 {
            -(xi + s1)
        } else {
            0.0
        };
        self.r * zmin > 40.0
    }

    /// Direct evaluation with `sigma = s^{1 - mu}`, which removes the singularity.
    fn direct(&self, xi: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let a = 1.0 - self.mu;
        let top = t.powf(a);
        let width = top / WAVE_PANELS as f64;
        let mut total = 0.0;
        for p in 0..WAVE_PANELS {
            let (s0, s1) = ((p as f64 * width).powf(1.0 / a), ((p + 1) as f64 * width).powf(1.0 / a));
            if self.negligible(xi, s0, s1) {
                continue;
            }
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let sigma = (p as f64 + x) * width;
                total += w * width * 2.0 * logistic(self.r, xi + sigma.powf(1.0 / a)).2;
            }
        }
        self.scale * total / a
    }

    /// `int_{t0}^{t1} K(s) 2 U''(xi + s) ds`.
    fn increment(&self, xi: f64, t0: f64, t1: f64) -> f64 {
        if t0 <= 0.0 {
            return self.direct(xi, t1);
        }
        if self.negligible(xi, t0, t1) {
            return 0.0;
        }
        let panels = ((t1 - t0) * self.r / 0.25).ceil().max(1.0) as usize;
        let width = (t1 - t0) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let s = t0 + (p as f64 + x) * width;
                total += w * width * s.powf(-self.mu) * 2.0 * logistic(self.r, xi + s).2;
            }
        }
        self.scale * total
    }

    fn advance(&self, st: &mut WaveState, t: f64) {
        if t < st.t {
            *st = WaveState::empty();
        }
        if t == st.t {
            return;
        }
        let missing = ((st.lo - (-t - 0.05)) / WAVE_TABLE_STEP).ceil();
        if missing > 0.0 {
            let missing = missing as usize;
            let new_lo = st.lo - missing as f64 * WAVE_TABLE_STEP;
            let mut values: Vec<f64> =
                (0..missing).map(|i| self.direct(new_lo + i as f64 * WAVE_TABLE_STEP, st.t)).collect();
            values.append(&mut st.values);
            st.values = values;
            st.lo = new_lo;
        }
        let (lo, t0) = (st.lo, st.t);
        for (i, v) in st.values.iter_mut().enumerate() {
            *v += self.increment(lo + i as f64 * WAVE_TABLE_STEP, t0, t);
        }
        st.t = t;
    }

    fn eval(&self, xi: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut st = self.state.lock().expect("wave memory lock");
        self.advance(&mut st, t);
        let s = (xi - st.lo) / WAVE_TABLE_STEP;
        let i = s.floor() as isize;
        if i < 1 || i + 2 >= st.values.len() as isize {
            drop(st);
            return self.direct(xi, t);
        }
        // cubic Lagrange through i-1..=i+2
        let i = i as usize;
        let x = s - i as f64;
        let v = &st.values[i - 1..i + 3];
        let l0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
        let l1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
        let l2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
        let l3 = (x + 1.0) * x * (x - 1.0) / 6.0;
        l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
    }
}

/// Builds
/// `f = u_t - nu Lap u + alpha u^delta (u_x + u_y) - beta c(u) - eta int K Lap u (+ Caputo term)`.
pub fn forcing(case: &ManufacturedCase, params: &ModelParams, kernel: &KernelSpec) -> Result<SpaceTimeFn> {
    params.validate()?;
    kernel.validate()?;
    let needs_memory = params.eta != 0.0;
    let caputo = kernel.caputo_order;
    type Extra = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
    let mut extra: Option<Extra> = None;
    match &case.structure {
        TimeStructure::Separable(sep) => {
            let memory = if needs_memory { kernel_convolution(kernel, &sep.profile)? } else { PowerSeries::default() };
            let frac = match caputo {
                Some(mc) => caputo_power_series(&sep.profile, mc)?,
                None => PowerSeries::default(),
            };
            return Ok(separable_forcing(sep.clone(), memory, frac, *params));
        }
        TimeStructure::Wave { r } => {
            if caputo.is_some() {
                return Err(Error::Unsupported("Caputo forcing for the traveling wave".into()));
            }
            if needs_memory {
                let mem = WaveMemory::new(*r, kernel)?;
                let eta = params.eta;
                extra = Some(Arc::new(move |x, t| -eta * mem.eval(x[0] + x[1] - t, t)));
            }
        }
        TimeStructure::Opaque => {
            if needs_memory || caputo.is_some() {
                return Err(Error::Unsupported(format!(
                    "case {} has no time-profile decomposition for memory forcing",
                    case.name
                )));
            }
        }
    }
    let c = case.clone();
    let p = *params;
    Ok(Arc::new(move |x, t| {
        let u = (c.exact)(x, t);
        let g = (c.grad)(x, t);
        let mut f = (c.time_derivative)(x, t) - p.nu * (c.laplacian)(x, t)
            + p.alpha * u.powi(p.delta as i32) * (g[0] + g[1])
            - p.beta * reaction_value(u, p.reaction_gamma, p.delta);
        if let Some(e) = &extra {
            f += e(x, t);
        }
        f
    }))
}

/// Forcing of a separable case: one spatial jet per point, with the
/// time factors cached per time level.
fn separable_forcing(sep: Separable, memory: PowerSeries, frac: PowerSeries, p: ModelParams) -> SpaceTimeFn {
    let cache: Mutex<Option<(u64, [f64; 4])>> = Mutex::new(None);
    Arc::new(move |x, t| {
        let [pt, dpt, mem, cap] = {
            let mut c = cache.lock().expect("cache lock");
            match *c {
                Some((key, v)) if key == t.to_bits() => v,
                _ => {
                    let v = [sep.profile.eval(t), sep.profile.derivative(t), memory.eval(t), frac.eval(t)];
                    *c = Some((t.to_bits(), v));
                    v
                }
            }
        };
        let j = (sep.spatial)(x);
        let u = pt * j.value;
        dpt * j.value - p.nu * pt * j.laplacian + p.alpha * u.powi(p.delta as i32) * pt * (j.grad[0] + j.grad[1])
            - p.beta * reaction_value(u, p.reaction_gamma, p.delta)
            - p.eta * mem * j.laplacian
            + cap * j.value
    })
}

/// `||u_h - u(t)||_{L^2}`.
pub fn error_l2(u: &FieldVector, space: &Space, case: &ManufacturedCase, t: f64) -> f64 {
    l2_error(u, space.mesh(), |x| (case.exact)(x, t))
}

/// `max_k ||u_h^k - u(t_k)||_{L^2}` over the time nodes.
pub fn error_l2_inf(traj: &Trajectory, space: &Space, case: &ManufacturedCase) -> f64 {
    traj.states.iter().zip(&traj.times).map(|(u, &t)| error_l2(u, space, case, t)).fold(0.0, f64::max)
}

/// `sqrt(dt sum_k ||grad_h u_h^k - grad u(t_k)||^2 (+ DG jumps of u_h^k - u(t_k)))`.
pub fn error_energy(traj: &Trajectory, space: &Space, case: &ManufacturedCase, penalty_gamma: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..traj.states.len() {
        let (t, dt) = (traj.times[k], traj.times[k] - traj.times[k - 1]);
        let u = &traj.states[k];
        let mut e = broken_h1_error(u, space.mesh(), |x| (case.grad)(x, t)).powi(2);
        if space.kind() == Scheme::Dg {
            e += jump_penalty_sq(u, space, penalty_gamma, |x| (case.exact)(x, t));
        }
        total += dt * e;
    }
    total.sqrt()
}

/// How the time step follows the mesh size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeCoupling {
    /// `dt = factor * h`.
    Proportional(f64),
    /// The same number of steps on every level.
    FixedSteps(usize),
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub case: ManufacturedCase,
    pub scheme: Scheme,
    pub params: ModelParams,
    pub kernel: KernelSpec,
    /// Cells per side, one entry per level.
    pub levels: Vec<usize>,
    pub t_final: f64,
    pub coupling: TimeCoupling,
    pub newton: NewtonOptions,
    /// Seed of the finite-difference probe points.
    pub seed: u64,
}

impl StudySpec {
    /// Unit square, `dt = h / 4`, `T = 1`, levels `8, 16, 32, 64`.
    pub fn new(case: ManufacturedCase, scheme: Scheme, kernel: KernelSpec) -> Self {
        let params = case.default_params();
        StudySpec {
            case,
            scheme,
            params,
            kernel,
            levels: vec![8, 16, 32, 64],
            t_final: 1.0,
            coupling: TimeCoupling::Proportional(0.25),
            newton: NewtonOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub dofs: usize,
    pub err_l2_inf: f64,
    pub err_energy: f64,
    pub rate_l2: Option<f64>,
    pub rate_energy: Option<f64>,
    pub newton_max: usize,
    /// Only for homogeneous boundary data.
    pub stability: Option<StabilityReport>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<LevelResult>,
}

pub const CSV_COLUMNS: &str = "level,h,dt,dofs,errL2inf,errEnergy,rateL2,rateEnergy,newton_max";

impl ConvergenceTable {
    /// Energy rate between the two finest levels.
    pub fn final_rate_energy(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate_energy)
    }

    pub fn final_rate_l2(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate_l2)
    }

    pub fn newton_max(&self) -> usize {
        self.rows.iter().map(|r| r.newton_max).max().unwrap_or(0)
    }

    /// CSV body (column line plus one row per level); rates are empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_COLUMNS);
        s.push('\n');
        let rate = |r: Option<f64>| r.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                s,
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{},{},{}",
                r.level,
                r.h,
                r.dt,
                r.dofs,
                r.err_l2_inf,
                r.err_energy,
                rate(r.rate_l2),
                rate(r.rate_energy),
                r.newton_max
            )
            .expect("write to string");
        }
        s
    }
}

/// Observed order `log(e_0 / e_1) / log(h_0 / h_1)`.
pub fn observed_rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Runs one level and returns the trajectory with its space.
pub fn run_level(spec: &StudySpec, n: usize) -> Result<(Space, Trajectory, TimeGrid)> {
    let mesh = Arc::new(generate_rect_mesh(Rect::unit(), n)?);
    let space = Space::new(mesh, spec.scheme);
    let h = 1.0 / n as f64;
    let steps = match spec.coupling {
        TimeCoupling::Proportional(factor) => {
            if !(factor > 0.0) {
                return Err(Error::invalid("time step factor must be positive"));
            }
            ((spec.t_final / (factor * h)).round() as usize).max(1)
        }
        TimeCoupling::FixedSteps(s) => s,
    };
    let grid = TimeGrid::new(spec.t_final, steps)?;
    let case = &spec.case;
    let u0 = space.interpolate(|x| (case.exact)(x, 0.0));
    let f = forcing(case, &spec.params, &spec.kernel)?;
    let mut problem = Problem::new(space.clone(), spec.params, spec.kernel.clone(), grid, u0).with_forcing(f);
    if !case.homogeneous_boundary {
        problem = problem.with_boundary(case.exact.clone());
    }
    problem.newton = spec.newton;
    let mut stepper = Stepper::new(problem)?;
    while !stepper.is_finished() {
        stepper.step()?;
    }
    Ok((space, stepper.into_trajectory(), grid))
}

/// Error table over uniformly refined levels.
pub fn convergence_study(spec: &StudySpec) -> Result<ConvergenceTable> {
    if spec.levels.len() < 3 {
        return Err(Error::invalid("a convergence study needs at least three levels"));
    }
    spec.case.check_consistency(spec.seed, 16)?;
    let f = forcing(&spec.case, &spec.params, &spec.kernel)?;
    let mut table = ConvergenceTable::default();
    for (level, &n) in spec.levels.iter().enumerate() {
        let (space, traj, grid) = run_level(spec, n)?;
        let err_l2_inf = error_l2_inf(&traj, &space, &spec.case);
        let err_energy = error_energy(&traj, &space, &spec.case, spec.params.penalty_gamma);
        let stability = if spec.case.homogeneous_boundary {
            let exact = spec.case.exact.clone();
            Some(stability_check(&traj, &space, &spec.params, &grid, Some(&|x, t| f(x, t)), &|x| exact(x, 0.0)))
        } else {
            None
        };
        let h = 1.0 / n as f64;
        let (rate_l2, rate_energy) = match table.rows.last() {
            Some(prev) => (
                Some(observed_rate(prev.err_l2_inf, err_l2_inf, prev.h, h)),
                Some(observed_rate(prev.err_energy, err_energy, prev.h, h)),
            ),
            None => (None, None),
        };
        table.rows.push(LevelResult {
            level,
            n,
            h,
            dt: grid.delta_t,
            dofs: space.n_dofs(),
            err_l2_inf,
            err_energy,
            rate_l2,
            rate_energy,
            newton_max: traj.max_newton_iterations(),
            stability,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;

    #[test]
    fn cases_pass_consistency_gate() {
        for case in [
            ManufacturedCase::type_i(),
            ManufacturedCase::type_ii(),
            ManufacturedCase::traveling_wave(50.0).unwrap(),
            ManufacturedCase::traveling_wave(100.0).unwrap(),
        ] {
            case.check_consistency(7, 50).unwrap();
        }
    }

    #[test]
    fn broken_case_fails_gate() {
        let mut case = ManufacturedCase::type_i();
        case.laplacian = Arc::new(|_, _| 0.0);
        assert!(case.check_consistency(1, 10).is_err());
    }

    #[test]
    fn logistic_is_stable_and_bounded() {
        for xi in [-1e3, -1.0, 0.0, 1.0, 1e3] {
            let (u, d1, d2) = logistic(50.0, xi);
            assert!(u.is_finite() && d1.is_finite() && d2.is_finite());
            assert!((0.0..=1.0).contains(&u));
        }
        assert_eq!(logistic(10.0, 0.0).0, 0.5);
    }

    #[test]
    fn zero_case_has_zero_forcing() {
        let zero = ManufacturedCase::custom(
            "zero",
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| [0.0, 0.0]),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Some(Separable {
                profile: PowerSeries::new(vec![(0.0, 1.0)]).unwrap(),
                spatial: Arc::new(|_| Jet { value: 0.0, grad: [0.0, 0.0], laplacian: 0.0 }),
            }),
            true,
        );
        let f = forcing(&zero, &ModelParams::default(), &KernelSpec::power_law(0.5)).unwrap();
        for (x, t) in [([0.3, 0.4], 0.0), ([0.9, 0.1], 0.7)] {
            assert_eq!(f(x, t), 0.0);
        }
    }

    #[test]
    fn type_i_forcing_at_zero() {
        let case = ManufacturedCase::type_i();
        let p = ModelParams::default();
        let f = forcing(&case, &p, &KernelSpec::power_law(0.5)).unwrap();
        let x = [0.3, 0.7];
        let s = (PI * x[0]).sin() * (PI * x[1]).sin();
        let sx = PI * (PI * x[0]).cos() * (PI * x[1]).sin();
        let sy = PI * (PI * x[0]).sin() * (PI * x[1]).cos();
        let expect = 2.0 * PI * PI * s + s * (sx + sy) - s * (1.0 - s) * (s - 0.5);
        assert!((f(x, 0.0) - expect).abs() < 1e-13);
    }

    #[test]
    fn type_ii_memory_uses_beta_identity() {
        let case = ManufacturedCase::type_ii();
        let mut p = ModelParams::default();
        let k = KernelSpec::power_law(0.5);
        let f1 = forcing(&case, &p, &k).unwrap();
        p.eta = 0.0;
        let f0 = forcing(&case, &p, &k).unwrap();
        let x = [0.2, 0.35];
        let t = 0.6;
        let lap = -8.0 * PI * PI * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin();
        // B(1/2, 5/2) = 3 pi / 8
        let expect = -(3.0 * PI / 8.0) * t * t * lap;
        assert!((f1(x, t) - f0(x, t) - expect).abs() < 1e-11 * (1.0 + expect.abs()));
    }

    #[test]
    fn caputo_forcing_adds_fractional_derivative() {
        let case = ManufacturedCase::type_i();
        let p = ModelParams::default();
        let k = KernelSpec::power_law(0.5);
        let f0 = forcing(&case, &p, &k).unwrap();
        let f1 = forcing(&case, &p, &k.clone().with_caputo(0.5)).unwrap();
        let (x, t): (Point, f64) = ([0.5, 0.5], 0.8);
        // D^{1/2} (t^3 - t^2 + 1) = Gamma(4)/Gamma(3.5) t^2.5 - Gamma(3)/Gamma(2.5) t^1.5
        let g = statrs::function::gamma::gamma;
        let d = g(4.0) / g(3.5) * t.powf(2.5) - g(3.0) / g(2.5) * t.powf(1.5);
        assert!((f1(x, t) - f0(x, t) - d).abs() < 1e-12);
    }

    #[test]
    fn unsupported_forcing() {
        let tab = KernelSpec {
            kind: KernelKind::Tabulated { times: vec![0.0, 1.0], values: vec![1.0, 0.5] },
            caputo_order: None,
        };
        let case = ManufacturedCase::type_i();
        assert!(matches!(forcing(&case, &ModelParams::default(), &tab), Err(Error::Unsupported(_))));
        let p = ModelParams { eta: 0.0, ..ModelParams::default() };
        assert!(forcing(&case, &p, &tab).is_ok());
        let opaque = ManufacturedCase::custom(
            "opaque",
            case.exact.clone(),
            case.grad.clone(),
            case.laplacian.clone(),
            case.time_derivative.clone(),
            None,
            true,
        );
        assert!(matches!(
            forcing(&opaque, &ModelParams::default(), &KernelSpec::power_law(0.5)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn wave_memory_against_refined_quadrature() {
        // independent oracle: midpoint rule in s on a graded mesh, s = v^4
        let r = 50.0;
        let mem = WaveMemory::new(r, &KernelSpec::power_law(0.5)).unwrap();
        let oracle = |xi: f64, t: f64| {
            let m = 400_000;
            let top = t.powf(0.25);
            let dv = top / m as f64;
            (0..m)
                .map(|i| {
                    let v = (i as f64 + 0.5) * dv;
                    let s = v.powi(4);
                    // ds = 4 v^3 dv and s^{-1/2} = v^{-2}
                    4.0 * v * 2.0 * logistic(r, xi + s).2 * dv
                })
                .sum::<f64>()
        };
        for (xi, t) in [(-0.3, 0.5), (0.01, 0.2), (-0.9, 1.0), (0.5, 0.7), (1.2, 0.4)] {
            let a = mem.direct(xi, t);
            let b = oracle(xi, t);
            assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{xi} {t}: {a} vs {b}");
            let c = mem.eval(xi, t);
            assert!((c - a).abs() < 1e-5 * (1.0 + a.abs()), "{xi} {t}: {c} vs {a}");
        }
        assert_eq!(mem.eval(0.3, 0.0), 0.0);
        let mut t = 0.0;
        for _ in 0..40 {
            t += 0.0123;
            for xi in [-t + 0.02, 0.05 - 0.5 * t, 1.1 - t] {
                let (c, a) = (mem.eval(xi, t), mem.direct(xi, t));
                assert!((c - a).abs() < 1e-5 * (1.0 + a.abs()), "{xi} {t}: {c} vs {a}");
            }
        }
    }

    #[test]
    fn wave_memory_constant_kernel_is_closed_form() {
        // int_0^t 2 U''(xi + s) ds = 2 (U'(xi + t) - U'(xi))
        let r = 25.0;
        let mem =
            WaveMemory::new(r, &KernelSpec { kind: KernelKind::Constant { value: 1.0 }, caputo_order: None }).unwrap();
        for (xi, t) in [(-0.4, 0.6), (0.1, 0.3)] {
            let exact = 2.0 * (logistic(r, xi + t).1 - logistic(r, xi).1);
            assert!((mem.direct(xi, t) - exact).abs() < 1e-9 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn interpolant_errors() {
        let case = ManufacturedCase::type_i();
        let mut prev = None;
        for n in [8, 16, 32] {
            let s = Space::cr(Arc::new(generate_rect_mesh(Rect::unit(), n).unwrap()));
            let u = s.interpolate(|x| (case.exact)(x, 0.5));
            let e = error_l2(&u, &s, &case, 0.5);
            if let Some(p) = prev {
                let rate = observed_rate(p, e, 2.0, 1.0);
                assert!(rate >= 0.95, "{rate}");
            }
            prev = Some(e);
        }
    }

    #[test]
    fn linear_in_space_energy_error_vanishes() {
        let profile = PowerSeries::new(vec![(1.0, 0.0), (1.0, 1.0)]).unwrap();
        let case = ManufacturedCase::separable(
            "linear",
            CaseKind::Custom,
            profile,
            Arc::new(|x: Point| Jet { value: x[0] + 2.0 * x[1], grad: [1.0, 2.0], laplacian: 0.0 }),
            false,
        );
        for kind in [Scheme::Cr, Scheme::Dg] {
            let s = Space::new(Arc::new(generate_rect_mesh(Rect::unit(), 4).unwrap()), kind);
            let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
            let states = times.iter().map(|&t| s.interpolate(|x| (case.exact)(x, t))).collect();
            let traj = Trajectory { times, states, v_states: None, diagnostics: Vec::new() };
            assert!(error_energy(&traj, &s, &case, 40.0) <= 1e-10);
            assert!(error_l2_inf(&traj, &s, &case) <= 1e-12);
        }
        let zero_case = ManufacturedCase::custom(
            "zero",
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| [0.0, 0.0]),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            None,
            true,
        );
        let s = Space::dg(Arc::new(generate_rect_mesh(Rect::unit(), 2).unwrap()));
        let zero =
            Trajectory { times: vec![0.0, 1.0], states: vec![s.zeros(); 2], v_states: None, diagnostics: Vec::new() };
        assert_eq!(error_energy(&zero, &s, &zero_case, 40.0), 0.0);
        assert_eq!(error_l2_inf(&zero, &s, &zero_case), 0.0);
    }

    #[test]
    fn short_study_shape_and_rates() {
        let mut spec = StudySpec::new(ManufacturedCase::type_i(), Scheme::Cr, KernelSpec::power_law(0.5));
        spec.levels = vec![4, 8, 16];
        spec.t_final = 0.25;
        let table = convergence_study(&spec).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.rows[0].rate_energy.is_none());
        assert!(table.final_rate_energy().unwrap() > 0.8);
        assert!(table.rows.iter().all(|r| r.stability.unwrap().holds));
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with(CSV_COLUMNS));
        assert_eq!(csv, convergence_study(&spec).unwrap().to_csv());
        spec.levels.pop();
        assert!(convergence_study(&spec).is_err());
    }
}
