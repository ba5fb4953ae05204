//! Commands behind the `gbhe` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{CaseConfig, RunConfig};
use crate::error::{Error, Result};
use crate::forms::{Rules, LOAD_DEGREE};
use crate::kernel::memory_weights;
use crate::mesh::generate_rect_mesh;
use crate::mms::{convergence_study, forcing, ManufacturedCase, StudySpec, TimeCoupling};
use crate::solver::{FhnCoupling, Problem, Stepper, TimeGrid, Trajectory};
use crate::space::Space;
use crate::vtk::write_snapshot;

/// Exit code for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        _ => 3,
    }
}

/// `#`-prefixed lines describing a run well enough to repeat it.
pub fn metadata_header(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let rules = Rules::for_params(p);
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str("# ");
        s.push_str(&text);
        s.push('\n');
    };
    line(format!("gbhe {}", env!("CARGO_PKG_VERSION")));
    line(format!("config_sha256 = {}", cfg.hash));
    line(format!("scheme = {}", cfg.scheme));
    line(format!("case = {}", cfg.case.name()));
    line(format!(
        "params nu={} alpha={} beta={} reaction_gamma={} delta={} eta={} penalty={}",
        p.nu, p.alpha, p.beta, p.reaction_gamma, p.delta, p.eta, p.penalty_gamma
    ));
    if let Some(f) = &cfg.fhn {
        line(format!("fhn eps={} rho={}", f.eps, f.rho));
    }
    line(format!("kernel = {}", cfg.kernel.formula_id()));
    line(format!(
        "quadrature cell_nonlinear={} edge={} load={} mass=2",
        rules.cell.degree, rules.edge.degree, LOAD_DEGREE
    ));
    line(format!("newton tol={} max_iter={} linear={:?}", cfg.newton.tol, cfg.newton.max_iter, cfg.newton.linear));
    line(format!("t_final = {}", cfg.t_final));
    line(format!("seed = {}", cfg.seed));
    line("errL2inf = max over time nodes of the L2 error".into());
    s
}

fn manufactured(case: CaseConfig) -> Result<Option<ManufacturedCase>> {
    Ok(match case {
        CaseConfig::TypeI => Some(ManufacturedCase::type_i()),
        CaseConfig::TypeII => Some(ManufacturedCase::type_ii()),
        CaseConfig::TravelingWave { re } => Some(ManufacturedCase::traveling_wave(re)?),
        CaseConfig::Spiral => None,
    })
}

/// The problem described by `cfg` on its configured mesh.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let mesh = Arc::new(generate_rect_mesh(cfg.domain, cfg.cells)?);
    let space = Space::new(mesh, cfg.scheme);
    let grid = TimeGrid::new(cfg.t_final, cfg.steps_for(cfg.cells))?;
    let mut problem = match manufactured(cfg.case)? {
        Some(case) => {
            let u0 = space.interpolate(|x| (case.exact)(x, 0.0));
            let f = forcing(&case, &cfg.params, &cfg.kernel)?;
            let mut pb = Problem::new(space, cfg.params, cfg.kernel.clone(), grid, u0).with_forcing(f);
            if !case.homogeneous_boundary {
                pb = pb.with_boundary(case.exact.clone());
            }
            pb
        }
        None => {
            let d = cfg.domain;
            let x_front = d.xmin + 0.1 * d.width();
            let u0 = space.interpolate(|x| if x[0] <= x_front { 1.0 } else { 0.0 });
            Problem::new(space, cfg.params, cfg.kernel.clone(), grid, u0)
        }
    };
    if let Some(f) = cfg.fhn {
        let v0 = match cfg.case {
            CaseConfig::Spiral => {
                let d = cfg.domain;
                let y_half = d.ymin + 0.5 * d.height();
                problem.space.interpolate(|x| if x[1] >= y_half { 0.15 } else { 0.0 })
            }
            _ => problem.space.zeros(),
        };
        problem = problem.with_fhn(FhnCoupling { eps: f.eps, rho: f.rho, v0 });
    }
    problem.newton = cfg.newton;
    Ok(problem)
}

/// Levels used by `convergence`: the configured list, or `count` doublings
/// of its first entry.
pub fn study_levels(cfg: &RunConfig, count: Option<usize>) -> Result<Vec<usize>> {
    let base = cfg.convergence.levels.clone();
    let levels = match count {
        Some(c) => {
            let first = *base.first().ok_or_else(|| Error::config("no convergence levels"))?;
            (0..c).map(|i| first << i).collect()
        }
        None => base,
    };
    if levels.len() < 3 {
        return Err(Error::config("a convergence study needs at least three levels"));
    }
    Ok(levels)
}

/// Runs the study and writes `convergence.csv` into `out`.
pub fn cmd_convergence(cfg: &RunConfig, out: &Path, levels: Option<usize>, seed: Option<u64>) -> Result<PathBuf> {
    let case = manufactured(cfg.case)?
        .ok_or_else(|| Error::config("the spiral case has no exact solution for a convergence study"))?;
    let mut spec = StudySpec::new(case, cfg.scheme, cfg.kernel.clone());
    spec.params = cfg.params;
    spec.levels = study_levels(cfg, levels)?;
    spec.t_final = cfg.t_final;
    spec.coupling = match cfg.steps {
        Some(s) => TimeCoupling::FixedSteps(s),
        None => TimeCoupling::Proportional(cfg.convergence.dt_factor),
    };
    spec.newton = cfg.newton;
    spec.seed = seed.unwrap_or(cfg.seed);
    if cfg.domain != crate::mesh::Rect::unit() {
        return Err(Error::config("convergence studies run on the unit square"));
    }
    let table = convergence_study(&spec)?;
    fs::create_dir_all(out)?;
    let path = out.join("convergence.csv");
    let mut text = metadata_header(cfg);
    if let Some(rows) = table.rows.iter().map(|r| r.stability).collect::<Option<Vec<_>>>() {
        for (r, st) in table.rows.iter().zip(rows) {
            writeln!(text, "# stability level={} lhs={:.16e} rhs={:.16e} holds={}", r.level, st.lhs, st.rhs, st.holds)
                .expect("write to string");
        }
    }
    text.push_str(&table.to_csv());
    fs::write(&path, text)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub snapshots: Vec<PathBuf>,
    pub diagnostics: PathBuf,
    pub trajectory: Trajectory,
}

/// Step indices at `j * interval`, `j = 0..=floor(T / interval)`; first and
/// last step without an interval.
pub fn snapshot_steps(grid: &TimeGrid, interval: Option<f64>) -> Vec<usize> {
    match interval {
        None => vec![0, grid.n_steps],
        Some(iv) => {
            let count = (grid.t_final / iv + 1e-9).floor() as usize + 1;
            (0..count).map(|j| ((j as f64 * iv / grid.delta_t).round() as usize).min(grid.n_steps)).collect()
        }
    }
}

/// Runs one simulation, writing VTK snapshots and `diagnostics.csv` into `out`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulationOutput> {
    let problem = build_problem(cfg)?;
    let grid = problem.grid;
    let space = problem.space.clone();
    let mut stepper = Stepper::new(problem)?;
    while !stepper.is_finished() {
        stepper.step()?;
    }
    let traj = stepper.into_trajectory();

    fs::create_dir_all(out)?;
    let mut snapshots = Vec::new();
    for (j, k) in snapshot_steps(&grid, cfg.output.snapshot_interval).into_iter().enumerate() {
        let path = out.join(format!("{}_{j:04}.vtk", cfg.output.prefix));
        let title = format!(
            "gbhe {} {} t={:.16e} step={k} config_sha256={}",
            cfg.scheme,
            cfg.case.name(),
            traj.times[k],
            cfg.hash
        );
        let mut fields = vec![("u", &traj.states[k])];
        if let Some(v) = &traj.v_states {
            fields.push(("v", &v[k]));
        }
        let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
        write_snapshot(&mut file, &space, &title, &fields)?;
        file.flush()?;
        snapshots.push(path);
    }

    let mut text = metadata_header(cfg);
    writeln!(text, "# steps = {}", grid.n_steps).expect("write to string");
    text.push_str("step,time,newton,residual,l2,grad,energy\n");
    for d in &traj.diagnostics {
        writeln!(
            text,
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            d.step, d.time, d.newton_iterations, d.residual, d.l2_norm, d.grad_norm, d.energy
        )
        .expect("write to string");
    }
    let diagnostics = out.join("diagnostics.csv");
    fs::write(&diagnostics, text)?;
    Ok(SimulationOutput { snapshots, diagnostics, trajectory: traj })
}

/// Writes the memory weight table `k,j,weight` for the configured kernel and grid.
pub fn cmd_weights_dump<W: Write>(cfg: &RunConfig, mut w: W) -> Result<()> {
    let n = cfg.steps_for(cfg.cells);
    let grid = TimeGrid::new(cfg.t_final, n)?;
    let weights = memory_weights(&cfg.kernel, grid.delta_t, n)?;
    w.write_all(metadata_header(cfg).as_bytes())?;
    writeln!(w, "# delta_t = {:.16e}", grid.delta_t)?;
    writeln!(w, "k,j,weight")?;
    for k in 1..=n {
        for j in 1..=k {
            writeln!(w, "{k},{j},{:.16e}", weights.get(k, j))?;
        }
    }
    Ok(())
}
