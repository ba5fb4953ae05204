//! Run configuration read from TOML.
//!
//! Every section and key is optional; an empty file runs the Type I case on
//! a 16x16 CR mesh. Unknown sections or keys are rejected.
//!
//! ```toml
//! [run]
//! seed = 0
//!
//! [mesh]
//! scheme = "dg"            # "cr" | "dg"
//! cells = 32               # cells per side
//! domain = [0.0, 0.0, 1.0, 1.0]
//!
//! [time]
//! t_final = 1.0
//! steps = 128              # default: dt = h / 4
//!
//! [model]
//! nu = 1.0
//! alpha = 1.0
//! beta = 1.0
//! reaction_gamma = 0.5
//! delta = 1
//! eta = 1.0
//! penalty = 40.0
//!
//! [kernel]
//! type = "power_law"       # "power_law" | "constant" | "tabulated"
//! mu = 0.5                 # power_law
//! value = 1.0              # constant
//! times = [0.0, 1.0]       # tabulated
//! values = [1.0, 0.5]
//! caputo_order = 0.5       # adds the Caputo term
//!
//! [case]
//! type = "type_i"          # "type_i" | "type_ii" | "traveling_wave" | "spiral"
//! re = 50.0                # traveling_wave
//!
//! [fhn]                    # required by "spiral"
//! eps = 0.01
//! rho = 0.5
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 25
//! linear = "lu"            # "lu" | "gmres"
//! gmres_restart = 50
//! gmres_max_iter = 2000
//!
//! [output]
//! snapshot_interval = 0.5  # default: first and last step only
//! prefix = "snapshot"
//!
//! [convergence]
//! levels = [8, 16, 32, 64]
//! dt_factor = 0.25
//! ```

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forms::{ModelParams, DEFAULT_PENALTY};
use crate::kernel::{KernelKind, KernelSpec};
use crate::mesh::Rect;
use crate::solver::{LinearSolver, NewtonOptions};
use crate::space::Scheme;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    kernel: RawKernel,
    #[serde(default)]
    case: RawCase,
    fhn: Option<RawFhn>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    convergence: RawConvergence,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    scheme: Option<Scheme>,
    cells: Option<usize>,
    domain: Option<[f64; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_final: Option<f64>,
    steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    nu: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    reaction_gamma: Option<f64>,
    delta: Option<u32>,
    eta: Option<f64>,
    penalty: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(rename = "type")]
    kind: Option<String>,
    mu: Option<f64>,
    value: Option<f64>,
    times: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    caputo_order: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    #[serde(rename = "type")]
    kind: Option<String>,
    re: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFhn {
    eps: Option<f64>,
    rho: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iter: Option<usize>,
    linear: Option<String>,
    gmres_restart: Option<usize>,
    gmres_max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    snapshot_interval: Option<f64>,
    prefix: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvergence {
    levels: Option<Vec<usize>>,
    dt_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseConfig {
    TypeI,
    TypeII,
    TravelingWave {
        re: f64,
    },
    /// FitzHugh-Nagumo spiral seeded by a broken front.
    Spiral,
}

impl CaseConfig {
    pub fn name(&self) -> String {
        match self {
            CaseConfig::TypeI => "type_i".into(),
            CaseConfig::TypeII => "type_ii".into(),
            CaseConfig::TravelingWave { re } => format!("traveling_wave(re={re})"),
            CaseConfig::Spiral => "spiral".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnConfig {
    pub eps: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub snapshot_interval: Option<f64>,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub levels: Vec<usize>,
    pub dt_factor: f64,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// SHA-256 of the configuration text, hex encoded.
    pub hash: String,
    pub seed: u64,
    pub scheme: Scheme,
    pub cells: usize,
    pub domain: Rect,
    pub t_final: f64,
    pub steps: Option<usize>,
    pub params: ModelParams,
    pub kernel: KernelSpec,
    pub case: CaseConfig,
    pub fhn: Option<FhnConfig>,
    pub newton: NewtonOptions,
    pub output: OutputConfig,
    pub convergence: ConvergenceConfig,
}

impl RunConfig {
    /// Steps for a mesh with `n` cells per side: the configured count, or `dt = dt_factor * h`.
    pub fn steps_for(&self, n: usize) -> usize {
        self.steps.unwrap_or_else(|| {
            let h = self.domain.width().max(self.domain.height()) / n as f64;
            ((self.t_final / (self.convergence.dt_factor * h)).round() as usize).max(1)
        })
    }
}

/// 1-based line of byte offset `pos`.
fn line_at(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, if present.
fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn err_at(text: &str, section: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Config { line: line_of_key(text, section, key), message: message.into() }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_at(text, s.start)),
        message: e.message().to_string(),
    })?;
    let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect::<String>();

    let case = match raw.case.kind.as_deref().unwrap_or("type_i") {
        "type_i" => CaseConfig::TypeI,
        "type_ii" => CaseConfig::TypeII,
        "traveling_wave" => {
            let re = raw.case.re.unwrap_or(50.0);
            if !(re > 0.0) || !re.is_finite() {
                return Err(err_at(text, "case", "re", format!("re must be positive, got {re}")));
            }
            CaseConfig::TravelingWave { re }
        }
        "spiral" => CaseConfig::Spiral,
        other => return Err(err_at(text, "case", "type", format!("unknown case type {other:?}"))),
    };
    if raw.case.re.is_some() && !matches!(case, CaseConfig::TravelingWave { .. }) {
        return Err(err_at(text, "case", "re", "re only applies to the traveling_wave case"));
    }

    let default_domain = match case {
        CaseConfig::Spiral => [0.0, 0.0, 300.0, 300.0],
        _ => [0.0, 0.0, 1.0, 1.0],
    };
    let d = raw.mesh.domain.unwrap_or(default_domain);
    if !(d[2] > d[0] && d[3] > d[1]) || d.iter().any(|v| !v.is_finite()) {
        return Err(err_at(text, "mesh", "domain", "domain must be [xmin, ymin, xmax, ymax] with positive extent"));
    }
    let domain = Rect::new(d[0], d[1], d[2], d[3]);
    let cells = raw.mesh.cells.unwrap_or(16);
    if cells == 0 {
        return Err(err_at(text, "mesh", "cells", "cells must be at least 1"));
    }

    let mut params = ModelParams::default();
    if let CaseConfig::TravelingWave { re } = case {
        params.nu = 1.0 / re;
    }
    let m = &raw.model;
    params.nu = m.nu.unwrap_or(params.nu);
    params.alpha = m.alpha.unwrap_or(params.alpha);
    params.beta = m.beta.unwrap_or(params.beta);
    params.reaction_gamma = m.reaction_gamma.unwrap_or(params.reaction_gamma);
    params.delta = m.delta.unwrap_or(params.delta);
    params.eta = m.eta.unwrap_or(params.eta);
    params.penalty_gamma = m.penalty.unwrap_or(DEFAULT_PENALTY);
    if let Err(e) = params.validate() {
        let msg = e.to_string();
        let key = [
            ("nu", "nu"),
            ("alpha", "alpha"),
            ("beta", "beta"),
            ("reaction_gamma", "reaction_gamma"),
            ("delta", "delta"),
            ("eta", "eta"),
            ("penalty", "penalty_gamma"),
        ]
        .into_iter()
        .find(|(_, name)| msg.contains(&format!(": {name} must")))
        .map_or("nu", |(k, _)| k);
        return Err(err_at(text, "model", key, msg));
    }

    let k = &raw.kernel;
    let kind = match k.kind.as_deref().unwrap_or("power_law") {
        "power_law" => KernelKind::PowerLaw { mu: k.mu.unwrap_or(0.5) },
        "constant" => KernelKind::Constant { value: k.value.unwrap_or(1.0) },
        "tabulated" => match (&k.times, &k.values) {
            (Some(t), Some(v)) => KernelKind::Tabulated { times: t.clone(), values: v.clone() },
            _ => return Err(err_at(text, "kernel", "type", "tabulated kernel needs times and values")),
        },
        other => return Err(err_at(text, "kernel", "type", format!("unknown kernel type {other:?}"))),
    };
    let kernel = KernelSpec { kind, caputo_order: k.caputo_order };
    if let Err(e) = kernel.validate() {
        let key = if e.to_string().contains("Caputo") { "caputo_order" } else { "mu" };
        return Err(err_at(text, "kernel", key, e.to_string()));
    }

    let fhn = match (&raw.fhn, case) {
        (Some(f), _) => match (f.eps, f.rho) {
            (Some(eps), Some(rho)) if eps >= 0.0 && rho >= 0.0 && eps.is_finite() && rho.is_finite() => {
                Some(FhnConfig { eps, rho })
            }
            (Some(_), Some(_)) => return Err(err_at(text, "fhn", "eps", "eps and rho must be nonnegative")),
            _ => {
                return Err(Error::Config {
                    line: text.lines().position(|l| l.trim() == "[fhn]").map(|i| i + 1),
                    message: "the fhn section needs both eps and rho".into(),
                })
            }
        },
        (None, CaseConfig::Spiral) => {
            return Err(Error::config("the spiral case needs an [fhn] section with eps and rho"));
        }
        (None, _) => None,
    };

    let t_final = raw.time.t_final.unwrap_or(match case {
        CaseConfig::Spiral => 150.0,
        _ => 1.0,
    });
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(err_at(text, "time", "t_final", "t_final must be positive"));
    }
    if raw.time.steps == Some(0) {
        return Err(err_at(text, "time", "steps", "steps must be at least 1"));
    }

    let s = &raw.solver;
    let linear = match s.linear.as_deref().unwrap_or("lu") {
        "lu" => LinearSolver::Lu,
        "gmres" => {
            LinearSolver::Gmres { restart: s.gmres_restart.unwrap_or(50), max_iter: s.gmres_max_iter.unwrap_or(2000) }
        }
        other => return Err(err_at(text, "solver", "linear", format!("unknown linear solver {other:?}"))),
    };
    let newton = NewtonOptions { tol: s.tol.unwrap_or(1e-10), max_iter: s.max_iter.unwrap_or(25), linear };
    if !(newton.tol > 0.0) {
        return Err(err_at(text, "solver", "tol", "tol must be positive"));
    }
    if newton.max_iter == 0 {
        return Err(err_at(text, "solver", "max_iter", "max_iter must be at least 1"));
    }

    let output = OutputConfig {
        snapshot_interval: raw.output.snapshot_interval,
        prefix: raw.output.prefix.clone().unwrap_or_else(|| "snapshot".into()),
    };
    if let Some(iv) = output.snapshot_interval {
        if !(iv > 0.0) || !iv.is_finite() {
            return Err(err_at(text, "output", "snapshot_interval", "snapshot_interval must be positive"));
        }
    }
    if output.prefix.is_empty() || output.prefix.contains(['/', '\\']) {
        return Err(err_at(text, "output", "prefix", "prefix must be a plain file name stem"));
    }

    let convergence = ConvergenceConfig {
        levels: raw.convergence.levels.clone().unwrap_or_else(|| vec![8, 16, 32, 64]),
        dt_factor: raw.convergence.dt_factor.unwrap_or(0.25),
    };
    if convergence.levels.contains(&0) {
        return Err(err_at(text, "convergence", "levels", "levels must be positive"));
    }
    if !(convergence.dt_factor > 0.0) {
        return Err(err_at(text, "convergence", "dt_factor", "dt_factor must be positive"));
    }

    Ok(RunConfig {
        hash,
        seed: raw.run.seed.unwrap_or(0),
        scheme: raw.mesh.scheme.unwrap_or(Scheme::Cr),
        cells,
        domain,
        t_final,
        steps: raw.time.steps,
        params,
        kernel,
        case,
        fhn,
        newton,
        output,
        convergence,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c.params.penalty_gamma, 40.0);
        assert_eq!(c.newton.tol, 1e-10);
        assert_eq!(c.newton.max_iter, 25);
        assert_eq!(c.newton.linear, LinearSolver::Lu);
        assert_eq!(c.scheme, Scheme::Cr);
        assert_eq!(c.case, CaseConfig::TypeI);
        assert_eq!(c.kernel, KernelSpec::power_law(0.5));
        assert_eq!(c.steps_for(16), 64);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn full_config() {
        let text = r#"
[mesh]
scheme = "dg"
cells = 8

[model]
eta = 0.0
penalty = 20.0

[kernel]
type = "constant"
value = 2.0
caputo_order = 0.5

[case]
type = "traveling_wave"
re = 100.0

[solver]
linear = "gmres"
"#;
        let c = parse_config_str(text).unwrap();
        assert_eq!(c.scheme, Scheme::Dg);
        assert_eq!(c.cells, 8);
        assert_eq!(c.params.nu, 0.01);
        assert_eq!(c.params.penalty_gamma, 20.0);
        assert_eq!(c.kernel.caputo_order, Some(0.5));
        assert_eq!(c.case, CaseConfig::TravelingWave { re: 100.0 });
        assert!(matches!(c.newton.linear, LinearSolver::Gmres { restart: 50, .. }));
    }

    #[test]
    fn range_errors_carry_lines() {
        match parse_config_str("[model]\nnu = 1.0\nreaction_gamma = 1.5\n") {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("gamma"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match parse_config_str("[kernel]\nmu = 1.2\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        match parse_config_str("[mesh]\ncells = 4\nsize = 3\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
        assert!(parse_config_str("[bogus]\nx = 1\n").is_err());
        assert!(parse_config_str("[case]\ntype = \"blob\"\n").is_err());
        assert!(parse_config_str("[case]\nre = 50.0\n").is_err());
    }

    #[test]
    fn spiral_requires_fhn_parameters() {
        assert!(matches!(parse_config_str("[case]\ntype = \"spiral\"\n"), Err(Error::Config { .. })));
        assert!(parse_config_str("[case]\ntype = \"spiral\"\n[fhn]\neps = 0.01\n").is_err());
        let c = parse_config_str("[case]\ntype = \"spiral\"\n[fhn]\neps = 0.01\nrho = 0.5\n").unwrap();
        assert_eq!(c.fhn, Some(FhnConfig { eps: 0.01, rho: 0.5 }));
        assert_eq!(c.domain, Rect::new(0.0, 0.0, 300.0, 300.0));
        assert_eq!(c.t_final, 150.0);
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config_str("[mesh]\ncells = 4\n").unwrap();
        let b = parse_config_str("[mesh]\ncells = 4\n").unwrap();
        let c = parse_config_str("[mesh]\ncells = 5\n").unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(parse_config(Path::new("/nonexistent/gbhe.toml")), Err(Error::Config { line: None, .. })));
    }
}
