//! Memory-kernel quadrature weights, Caputo weights and closed-form power
//! convolutions.
//!
//! The weights are double averages of the kernel over time cells,
//!
//! ```text
//! w_kj = dt^-2 int_{t_{k-1}}^{t_k} int_{t_{j-1}}^{min(t, t_j)} K(t - s) ds dt,
//! ```
//!
//! evaluated through the second antiderivative `Phi` of `K`
//! (`Phi'' = K`, `Phi(0) = Phi'(0) = 0`):
//! `w_kk = Phi(dt) / dt^2` and, for lag `m = k - j >= 1`,
//! `w_kj = [Phi((m+1) dt) - 2 Phi(m dt) + Phi((m-1) dt)] / dt^2`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelKind {
    /// `K(t) = t^-mu`, `0 <= mu < 1`.
    PowerLaw {
        mu: f64,
    },
    Constant {
        value: f64,
    },
    /// Piecewise-linear interpolation of `(times, values)`, constant past the
    /// last node; `times` must start at 0 and increase strictly.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Order of the Caputo term added to the time derivative, if any.
    #[serde(default)]
    pub caputo_order: Option<f64>,
}

impl KernelSpec {
    pub fn power_law(mu: f64) -> Self {
        KernelSpec { kind: KernelKind::PowerLaw { mu }, caputo_order: None }
    }

    pub fn with_caputo(mut self, mu_c: f64) -> Self {
        self.caputo_order = Some(mu_c);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            KernelKind::PowerLaw { mu } => check_mu(*mu)?,
            KernelKind::Constant { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return Err(Error::invalid(format!("constant kernel must be nonnegative, got {value}")));
                }
            }
            KernelKind::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::invalid("tabulated kernel needs matching, nonempty times and values"));
                }
                if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("tabulated kernel times must start at 0 and increase"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("tabulated kernel values must be finite"));
                }
            }
        }
        if let Some(mc) = self.caputo_order {
            check_caputo(mc)?;
        }
        Ok(())
    }

    /// Identifier of the weight formula, recorded in output metadata.
    pub fn formula_id(&self) -> String {
        let base = match &self.kind {
            KernelKind::PowerLaw { mu } => format!("power-law-closed-form(mu={mu})"),
            KernelKind::Constant { value } => format!("constant-closed-form(value={value})"),
            KernelKind::Tabulated { times, .. } => format!("tabulated-piecewise-linear(nodes={})", times.len()),
        };
        match self.caputo_order {
            Some(mc) => format!("{base};caputo-power-law(mu_c={mc})"),
            None => base,
        }
    }

    /// Pointwise kernel value.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            KernelKind::PowerLaw { mu } => t.powf(-mu),
            KernelKind::Constant { value } => *value,
            KernelKind::Tabulated { times, values } => {
                let i = times.partition_point(|&x| x <= t);
                if i >= times.len() {
                    return *values.last().expect("nonempty");
                }
                let i = i.max(1) - 1;
                let s = (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
                values[i] + s * (t - times[i])
            }
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if (0.0..1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::invalid(format!("kernel exponent must lie in [0, 1), got {mu}")))
    }
}

fn check_caputo(mu_c: f64) -> Result<()> {
    if mu_c > 0.0 && mu_c < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("Caputo order must lie in (0, 1), got {mu_c}")))
    }
}

/// Lower-triangular weight table of a stationary kernel, stored by lag.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub delta_t: f64,
    pub n_steps: usize,
    /// `lags[m] = w_{k, k-m}`.
    lags: Vec<f64>,
}

impl KernelWeights {
    /// `w_kj` for `1 <= j <= k <= n_steps`.
    pub fn get(&self, k: usize, j: usize) -> f64 {
        assert!(1 <= j && j <= k && k <= self.n_steps, "weight index ({k}, {j}) out of range");
        self.lags[k - j]
    }

    pub fn diag(&self) -> f64 {
        self.lags[0]
    }

    pub fn lag(&self, m: usize) -> f64 {
        self.lags[m]
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    /// Row `k` as `[w_k1, ..., w_kk]`.
    pub fn row(&self, k: usize) -> Vec<f64> {
        (1..=k).map(|j| self.get(k, j)).collect()
    }
}

/// Weights of `int_0^t K(t - s) psi(s) ds ~ sum_j w_kj dt psi^j`.
pub fn memory_weights(spec: &KernelSpec, delta_t: f64, n_steps: usize) -> Result<KernelWeights> {
    if !(delta_t > 0.0) || !delta_t.is_finite() {
        return Err(Error::invalid(format!("time step must be positive, got {delta_t}")));
    }
    if n_steps == 0 {
        return Err(Error::invalid("at least one time step is required"));
    }
    spec.validate()?;
    let lags = match &spec.kind {
        KernelKind::PowerLaw { mu } => power_law_lags(*mu, delta_t, n_steps),
        KernelKind::Constant { value } => {
            let mut l = vec![*value; n_steps];
            l[0] = 0.5 * value;
            l
        }
        KernelKind::Tabulated { times, values } => tabulated_lags(times, values, delta_t, n_steps),
    };
    if let Some((m, w)) = lags.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid(format!("kernel weight at lag {m} is {w}, expected a finite nonnegative value")));
    }
    Ok(KernelWeights { delta_t, n_steps, lags })
}

/// Weights of the Caputo derivative
/// `d^mu u(t_k) ~ Gamma(1 - mu)^-1 sum_j w_kj (u^j - u^{j-1})`.
pub fn caputo_weights(mu_c: f64, delta_t: f64, n_steps: usize) -> Result<KernelWeights> {
    check_caputo(mu_c)?;
    memory_weights(&KernelSpec::power_law(mu_c), delta_t, n_steps)
}

/// `Gamma(1 - mu)^-1`, the Caputo prefactor.
pub fn caputo_prefactor(mu_c: f64) -> f64 {
    1.0 / statrs::function::gamma::gamma(1.0 - mu_c)
}

fn power_law_lags(mu: f64, dt: f64, n: usize) -> Vec<f64> {
    let p = 2.0 - mu;
    let scale = dt.powf(-mu) / ((1.0 - mu) * (2.0 - mu));
    let mut lags = Vec::with_capacity(n);
    lags.push(scale);
    for m in 1..n {
        lags.push(scale * second_difference(p, m as f64));
    }
    lags
}

// (m+1)^p - 2 m^p + (m-1)^p, by its even binomial series when cancellation
// would dominate.
fn second_difference(p: f64, m: f64) -> f64 {
    if m < 20.0 {
        return (m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).powf(p);
    }
    let mut sum = 0.0;
    let mut coeff = 1.0; // binomial(p, n)
    let inv2 = 1.0 / (m * m);
    let mut mpow = m.powf(p);
    for n in 1..=60 {
        coeff *= (p - (n as f64 - 1.0)) / n as f64;
        if n % 2 == 0 {
            mpow *= inv2;
            let term = 2.0 * coeff * mpow;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
    }
    sum
}

fn tabulated_lags(times: &[f64], values: &[f64], dt: f64, n: usize) -> Vec<f64> {
    // Phi' and Phi at every node, then piecewise cubic in between.
    let mut d1 = vec![0.0; times.len()];
    let mut d0 = vec![0.0; times.len()];
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let s = (values[i] - values[i - 1]) / h;
        d1[i] = d1[i - 1] + values[i - 1] * h + s * h * h / 2.0;
        d0[i] = d0[i - 1] + d1[i - 1] * h + values[i - 1] * h * h / 2.0 + s * h * h * h / 6.0;
    }
    let phi = |x: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let i = times.partition_point(|&t| t <= x) - 1;
        let s = if i + 1 < times.len() { (values[i + 1] - values[i]) / (times[i + 1] - times[i]) } else { 0.0 };
        let d = x - times[i];
        d0[i] + d1[i] * d + values[i] * d * d / 2.0 + s * d * d * d / 6.0
    };
    let inv = 1.0 / (dt * dt);
    let mut lags = vec![phi(dt) * inv];
    for m in 1..n {
        let m = m as f64;
        lags.push((phi((m + 1.0) * dt) - 2.0 * phi(m * dt) + phi((m - 1.0) * dt)) * inv);
    }
    lags
}

/// A time profile `sum_i c_i t^{p_i}` with `p_i > -1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSeries {
    pub terms: Vec<(f64, f64)>,
}

impl PowerSeries {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(_, p)) = terms.iter().find(|(_, p)| !(*p > -1.0)) {
            return Err(Error::invalid(format!("power {p} must exceed -1")));
        }
        Ok(PowerSeries { terms })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| c * pow0(t, p)).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().filter(|(_, p)| *p != 0.0).map(|&(c, p)| c * p * pow0(t, p - 1.0)).sum()
    }
}

fn pow0(t: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        t.powf(p)
    }
}

/// `int_0^t (t - s)^-mu g(s) ds = sum c B(1 - mu, p + 1) t^{p + 1 - mu}` as a series.
pub fn convolve_power_series(g: &PowerSeries, mu: f64) -> Result<PowerSeries> {
    check_mu(mu)?;
    let mut terms = Vec::with_capacity(g.terms.len());
    for &(c, p) in &g.terms {
        if !(p > -1.0) {
            return Err(Error::invalid(format!("power {p} must exceed -1")));
        }
        if c != 0.0 {
            terms.push((c * statrs::function::beta::beta(1.0 - mu, p + 1.0), p + 1.0 - mu));
        }
    }
    PowerSeries::new(terms)
}

pub fn convolve_power(g: &PowerSeries, mu: f64, t: f64) -> Result<f64> {
    Ok(convolve_power_series(g, mu)?.eval(t))
}

/// Caputo derivative of order `mu` of `g`:
/// `sum c Gamma(p + 1) / Gamma(p + 1 - mu) t^{p - mu}` over the terms with `p > 0`.
pub fn caputo_power_series(g: &PowerSeries, mu: f64) -> Result<PowerSeries> {
    check_caputo(mu)?;
    use statrs::function::gamma::gamma;
    let mut terms = Vec::with_capacity(g.terms.len());
    for &(c, p) in &g.terms {
        if p == 0.0 || c == 0.0 {
            continue;
        }
        if !(p > 0.0) {
            return Err(Error::invalid(format!("Caputo derivative of t^{p} is not supported")));
        }
        terms.push((c * gamma(p + 1.0) / gamma(p + 1.0 - mu), p - mu));
    }
    PowerSeries::new(terms)
}

pub fn caputo_power(g: &PowerSeries, mu: f64, t: f64) -> Result<f64> {
    Ok(caputo_power_series(g, mu)?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Double-exponential quadrature on [a, b] for integrands singular at the
    // left endpoint; f receives the offset from a, computed without cancellation.
    fn tanh_sinh(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let len = b - a;
        if len <= 0.0 {
            return 0.0;
        }
        let mut prev = f64::NAN;
        let mut h = 0.5;
        loop {
            let mut sum = 0.0;
            let kmax = (4.0 / h) as i64;
            for k in -kmax..=kmax {
                let tau = k as f64 * h;
                let u = PI * tau.sinh();
                // offset from a: len * e^u / (1 + e^u); offset from b likewise
                let off = if u < 0.0 { len * u.exp() / (1.0 + u.exp()) } else { len / (1.0 + (-u).exp()) };
                if off <= 0.0 || off >= len {
                    continue;
                }
                let w = len * 0.5 * (PI * 0.5 * tau.cosh()) / (0.5 * u).cosh().powi(2);
                sum += w * f(off);
            }
            let est = sum * h;
            if (est - prev).abs() <= 1e-11 * est.abs() || h < 1.0 / 256.0 {
                return est;
            }
            prev = est;
            h *= 0.5;
        }
    }

    fn oracle_weight(kernel: &dyn Fn(f64) -> f64, dt: f64, k: usize, j: usize) -> f64 {
        let (tk1, tj1, tj) = ((k - 1) as f64 * dt, (j - 1) as f64 * dt, j as f64 * dt);
        let outer = |toff: f64| {
            let t = tk1 + toff;
            // r = t - s ranges over [t - min(t, t_j), t - t_{j-1}]
            let r_lo = if j == k { 0.0 } else { t - tj };
            let r_hi = t - tj1;
            tanh_sinh(&|r| kernel(r_lo + r), 0.0, r_hi - r_lo)
        };
        tanh_sinh(&outer, 0.0, dt) / (dt * dt)
    }

    #[test]
    fn constant_kernel_weights() {
        let w = memory_weights(&KernelSpec::power_law(0.0), 0.1, 5).unwrap();
        assert!((w.diag() - 0.5).abs() < 1e-15);
        for m in 1..5 {
            assert!((w.lag(m) - 1.0).abs() < 1e-13);
        }
        let c = KernelSpec { kind: KernelKind::Constant { value: 1.0 }, caputo_order: None };
        let w = memory_weights(&c, 0.3, 4).unwrap();
        assert_eq!(w.row(4), vec![1.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn inverse_sqrt_diagonal() {
        for dt in [0.1, 0.01, 0.37] {
            let w = memory_weights(&KernelSpec::power_law(0.5), dt, 3).unwrap();
            assert!((w.diag() - 4.0 / 3.0 / dt.sqrt()).abs() < 1e-12 * w.diag());
        }
    }

    #[test]
    fn weights_match_numeric_oracle() {
        for mu in [0.0, 0.25, 0.5, 0.75] {
            for dt in [0.1, 0.01] {
                let n = 20;
                let w = memory_weights(&KernelSpec::power_law(mu), dt, n).unwrap();
                let kernel = move |r: f64| r.powf(-mu);
                for k in 1..=n {
                    for j in 1..=k {
                        let exact = oracle_weight(&kernel, dt, k, j);
                        let got = w.get(k, j);
                        assert!(got > 0.0);
                        assert!((got - exact).abs() <= 1e-9 * exact, "mu {mu} dt {dt} ({k},{j}): {got} vs {exact}");
                    }
                }
            }
        }
    }

    // Composite Gauss oracle for piecewise-polynomial kernels: both levels
    // are split at every point where an integration bound crosses a node.
    fn piecewise_oracle(kernel: &dyn Fn(f64) -> f64, nodes: &[f64], dt: f64, k: usize, j: usize) -> f64 {
        let (x, w) = crate::quadrature::gauss_legendre(6);
        let gauss = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, cuts: &[f64]| -> f64 {
            let mut pts = vec![a];
            pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
            pts.push(b);
            pts.sort_by(f64::total_cmp);
            pts.windows(2)
                .map(|p| {
                    (p[1] - p[0]) * x.iter().zip(&w).map(|(xi, wi)| wi * f(p[0] + xi * (p[1] - p[0]))).sum::<f64>()
                })
                .sum()
        };
        let (tk1, tk, tj1, tj) = ((k - 1) as f64 * dt, k as f64 * dt, (j - 1) as f64 * dt, j as f64 * dt);
        let outer = |t: f64| {
            let r_lo = t - t.min(tj);
            let r_hi = t - tj1;
            gauss(kernel, r_lo, r_hi, nodes)
        };
        let mut cuts: Vec<f64> = nodes.iter().flat_map(|&n| [tj + n, tj1 + n]).collect();
        cuts.push(tj);
        gauss(&outer, tk1, tk, &cuts) / (dt * dt)
    }

    #[test]
    fn tabulated_weights_match_oracle() {
        let nodes = vec![0.0, 0.15, 0.4, 1.0];
        let spec = KernelSpec {
            kind: KernelKind::Tabulated { times: nodes.clone(), values: vec![3.0, 1.0, 0.5, 0.2] },
            caputo_order: None,
        };
        let w = memory_weights(&spec, 0.1, 15).unwrap();
        let s2 = spec.clone();
        let kernel = move |r: f64| s2.eval(r);
        for k in 1..=15 {
            for j in 1..=k {
                let exact = piecewise_oracle(&kernel, &nodes, 0.1, k, j);
                assert!((w.get(k, j) - exact).abs() <= 1e-9 * exact.abs(), "({k},{j}): {} vs {exact}", w.get(k, j));
            }
        }
        let flat = KernelSpec {
            kind: KernelKind::Tabulated { times: vec![0.0, 2.0], values: vec![0.7, 0.7] },
            caputo_order: None,
        };
        let wf = memory_weights(&flat, 0.25, 12).unwrap();
        assert!((wf.diag() - 0.35).abs() < 1e-14);
        assert!(wf.lags()[1..].iter().all(|&x| (x - 0.7).abs() < 1e-12));
        let negative = KernelSpec {
            kind: KernelKind::Tabulated { times: vec![0.0, 1.0], values: vec![1.0, -5.0] },
            caputo_order: None,
        };
        assert!(memory_weights(&negative, 0.5, 4).is_err());
    }

    #[test]
    fn series_branch_is_continuous() {
        for p in [1.25, 1.5, 1.75, 2.0] {
            let direct = |m: f64| (m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).powf(p);
            let a = direct(20.0);
            let b = second_difference(p, 20.0);
            assert!((a - b).abs() < 1e-11 * a.abs(), "p {p}: {a} vs {b}");
        }
        let w = memory_weights(&KernelSpec::power_law(0.5), 0.001, 5000).unwrap();
        assert!(w.lags().windows(2).skip(1).all(|x| x[1] < x[0]));
    }

    #[test]
    fn invalid_inputs() {
        assert!(memory_weights(&KernelSpec::power_law(1.0), 0.1, 5).is_err());
        assert!(memory_weights(&KernelSpec::power_law(1.2), 0.1, 5).is_err());
        assert!(memory_weights(&KernelSpec::power_law(-0.1), 0.1, 5).is_err());
        assert!(memory_weights(&KernelSpec::power_law(0.5), 0.0, 5).is_err());
        assert!(memory_weights(&KernelSpec::power_law(0.5), 0.1, 0).is_err());
        assert!(caputo_weights(0.0, 0.1, 5).is_err());
        assert!(caputo_weights(1.0, 0.1, 5).is_err());
    }

    #[test]
    fn discrete_positivity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for mu in [0.0, 0.3, 0.5, 0.9] {
            let dt = 0.05;
            let n = 40;
            let w = memory_weights(&KernelSpec::power_law(mu), dt, n).unwrap();
            for _ in 0..50 {
                let v: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut q = 0.0;
                for k in 1..=n {
                    for j in 1..=k {
                        q += w.get(k, j) * dt * dt * v[j] * v[k];
                    }
                }
                assert!(q >= -1e-10, "mu {mu}: {q}");
            }
        }
    }

    #[test]
    fn convolution_consistency_first_order() {
        // sum_j w_kj dt g(t_j) -> int_0^{t_k} (t_k - s)^-1/2 g(s) ds
        let g = PowerSeries::new(vec![(1.0, 2.0), (0.5, 0.0)]).unwrap();
        let t_end = 1.0;
        let mut errs = Vec::new();
        for n in [20, 40, 80, 160] {
            let dt = t_end / n as f64;
            let w = memory_weights(&KernelSpec::power_law(0.5), dt, n).unwrap();
            let approx: f64 = (1..=n).map(|j| w.get(n, j) * dt * g.eval(j as f64 * dt)).sum();
            errs.push((approx - convolve_power(&g, 0.5, t_end).unwrap()).abs());
        }
        for e in errs.windows(2) {
            assert!((e[0] / e[1]).log2() > 0.9, "{errs:?}");
        }
    }

    #[test]
    fn caputo_of_constant_and_linear() {
        let mu = 0.5;
        let pre = caputo_prefactor(mu);
        assert!((pre - 1.0 / PI.sqrt()).abs() < 1e-14);
        let mut errs = Vec::new();
        for n in [10, 20, 40, 80] {
            let dt = 1.0 / n as f64;
            let w = caputo_weights(mu, dt, n).unwrap();
            let constant: f64 = (1..=n).map(|j| w.get(n, j) * (3.0 - 3.0)).sum();
            assert_eq!(constant, 0.0);
            let linear: f64 = pre * (1..=n).map(|j| w.get(n, j) * dt).sum::<f64>();
            errs.push((linear - 2.0 / PI.sqrt()).abs());
            assert!(w.lags().iter().all(|&x| x > 0.0));
        }
        for e in errs.windows(2) {
            assert!((e[0] / e[1]).log2() > 0.9, "{errs:?}");
        }
    }

    #[test]
    fn convolve_power_examples() {
        let one = PowerSeries::new(vec![(1.0, 0.0)]).unwrap();
        for t in [0.0, 0.3, 2.0] {
            assert!((convolve_power(&one, 0.5, t).unwrap() - 2.0 * t.sqrt()).abs() < 1e-13);
        }
        let t32 = PowerSeries::new(vec![(1.0, 1.5)]).unwrap();
        for t in [0.5, 1.0, 1.7] {
            let got = convolve_power(&t32, 0.5, t).unwrap();
            assert!((got - 3.0 * PI / 8.0 * t * t).abs() < 1e-13);
            // numeric oracle
            let num = tanh_sinh(&|r| r.powf(-0.5) * (t - r).powf(1.5), 0.0, t);
            assert!((got - num).abs() < 1e-10);
        }
        let zero = PowerSeries::default();
        assert_eq!(convolve_power(&zero, 0.5, 1.0).unwrap(), 0.0);
        assert!(PowerSeries::new(vec![(1.0, -1.0)]).is_err());
        let bad = PowerSeries { terms: vec![(1.0, -1.5)] };
        assert!(convolve_power(&bad, 0.5, 1.0).is_err());
    }

    #[test]
    fn caputo_power_matches_convolution() {
        // d^mu g = Gamma(1-mu)^-1 (K * g')
        let g = PowerSeries::new(vec![(1.0, 3.0), (-1.0, 2.0), (1.0, 0.0)]).unwrap();
        let dg = PowerSeries::new(vec![(3.0, 2.0), (-2.0, 1.0)]).unwrap();
        for t in [0.2, 0.9] {
            let a = caputo_power(&g, 0.5, t).unwrap();
            let b = caputo_prefactor(0.5) * convolve_power(&dg, 0.5, t).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }
}
