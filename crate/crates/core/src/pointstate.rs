//! Finite-width point-localized states `ν_{t,ε}(A) = ⟨ψ_{t,ε}, A ψ_{t,ε}⟩`
//! with `ψ_{t,ε} = ε^{-1/2} 1_{[t, t+ε]}`, evaluated on functions of position
//! (quadrature) and of momentum (FFT).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad;

type C64 = Complex64;

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-12;

/// `ψ_{t,ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedProbe {
    t: f64,
    eps: f64,
}

impl LocalizedProbe {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !t.is_finite() || !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Function(format!("probe needs finite t and eps > 0, got t = {t}, eps = {eps}")));
        }
        Ok(Self { t, eps })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn support(&self) -> (f64, f64) {
        (self.t, self.t + self.eps)
    }

    pub fn amplitude(&self, x: f64) -> f64 {
        if x >= self.t && x <= self.t + self.eps {
            self.eps.sqrt().recip()
        } else {
            0.0
        }
    }

    /// `‖ψ_{t,ε}‖₂²` by quadrature, as `ε ∫_0^1 |ψ(t + εu)|² du`.
    pub fn norm_squared(&self) -> Result<f64> {
        let v = quad::integrate(|u| self.amplitude(self.t + self.eps * u).powi(2), 0.0, 1.0, QUAD_ABS, QUAD_REL)?;
        Ok(self.eps * v)
    }

    pub fn translated(&self, s: f64) -> Self {
        Self { t: self.t + s, eps: self.eps }
    }

    /// The probe itself as a step function.
    pub fn as_function(&self) -> SampledFunction {
        let p = *self;
        SampledFunction::step(move |x| C64::new(p.amplitude(x), 0.0), vec![p.t, p.t + p.eps])
    }

    /// `|ψ̂_{t,ε}(p)|² = 2 sin²(pε/2) / (π ε p²)` (unitary Fourier convention).
    pub fn momentum_density(&self, p: f64) -> f64 {
        let h = 0.5 * p * self.eps;
        if h.abs() < 1e-8 {
            self.eps / (2.0 * PI)
        } else {
            2.0 * h.sin().powi(2) / (PI * self.eps * p * p)
        }
    }

    /// Momentum mass outside `[−p_max, p_max]`, to leading order in `1/(ε p_max)`.
    pub fn momentum_tail(&self, p_max: f64) -> f64 {
        (2.0 / (PI * self.eps * p_max)).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum FunctionClass {
    BoundedContinuous,
    LimitsAtInfinity { minus: [f64; 2], plus: [f64; 2] },
    Step,
}

#[derive(Clone)]
enum Rule {
    Closure(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
    /// Linear interpolation, constant beyond the ends.
    Table {
        xs: Vec<f64>,
        ys: Vec<C64>,
    },
}

/// A function `ℝ → ℂ` with a class tag and known discontinuities.
#[derive(Clone)]
pub struct SampledFunction {
    rule: Rule,
    class: FunctionClass,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match &self.rule {
            Rule::Closure(_) => "closure".to_string(),
            Rule::Table { xs, .. } => format!("table[{}]", xs.len()),
        };
        f.debug_struct("SampledFunction")
            .field("rule", &rule)
            .field("class", &self.class)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

impl SampledFunction {
    pub fn bounded(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self { rule: Rule::Closure(Arc::new(f)), class: FunctionClass::BoundedContinuous, breakpoints: vec![] }
    }

    pub fn real(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::bounded(move |x| C64::new(f(x), 0.0))
    }

    /// `g` with `g(−∞) = minus`, `g(+∞) = plus`.
    pub fn with_limits(g: impl Fn(f64) -> C64 + Send + Sync + 'static, minus: C64, plus: C64) -> Self {
        Self {
            rule: Rule::Closure(Arc::new(g)),
            class: FunctionClass::LimitsAtInfinity { minus: pair(minus), plus: pair(plus) },
            breakpoints: vec![],
        }
    }

    pub fn step(f: impl Fn(f64) -> C64 + Send + Sync + 'static, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.retain(|x| x.is_finite());
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self { rule: Rule::Closure(Arc::new(f)), class: FunctionClass::Step, breakpoints }
    }

    pub fn constant(value: C64) -> Self {
        Self::with_limits(move |_| value, value, value)
    }

    pub fn from_table(xs: Vec<f64>, ys: Vec<C64>, class: FunctionClass) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Function(format!("table has {} abscissae and {} values", xs.len(), ys.len())));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Function("table abscissae must be strictly ascending".into()));
        }
        let breakpoints = if class == FunctionClass::Step { xs.clone() } else { vec![] };
        Ok(Self { rule: Rule::Table { xs, ys }, class, breakpoints })
    }

    pub fn eval(&self, x: f64) -> C64 {
        match &self.rule {
            Rule::Closure(f) => f(x),
            Rule::Table { xs, ys } => {
                let k = xs.partition_point(|&a| a <= x);
                if k == 0 {
                    ys[0]
                } else if k == xs.len() || self.class == FunctionClass::Step {
                    ys[k - 1]
                } else {
                    let r = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    ys[k - 1] * (1.0 - r) + ys[k] * r
                }
            }
        }
    }

    pub fn class(&self) -> FunctionClass {
        self.class
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `(g(−∞), g(+∞))` for the limits-at-infinity class.
    pub fn limits(&self) -> Option<(C64, C64)> {
        match self.class {
            FunctionClass::LimitsAtInfinity { minus, plus } => {
                Some((C64::new(minus[0], minus[1]), C64::new(plus[0], plus[1])))
            }
            _ => None,
        }
    }

    /// `x ↦ f(x − s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let inner = self.clone();
        Self {
            rule: Rule::Closure(Arc::new(move |x| inner.eval(x - s))),
            class: self.class,
            breakpoints: self.breakpoints.iter().map(|b| b + s).collect(),
        }
    }
}

/// `1 + Σ_{n≥1} (−1)^{n−1} 1_{[2^{−n}, 2^{−n+1}]}`: 2 on `(1/2, 1]`, 0 on
/// `(1/4, 1/2]`, and so on; 1 off `(0, 1]`.
pub fn oscillation(x: f64) -> f64 {
    if !(x > 0.0 && x <= 1.0) {
        return 1.0;
    }
    let mut n = 1;
    let mut lo = 0.5;
    while x <= lo && n < 1100 {
        lo *= 0.5;
        n += 1;
    }
    if n % 2 == 1 {
        2.0
    } else {
        0.0
    }
}

pub fn oscillation_function() -> SampledFunction {
    let breaks = (0..=64).map(|n| 0.5f64.powi(n)).collect();
    SampledFunction::step(|x| C64::new(oscillation(x), 0.0), breaks)
}

/// `(1/ε) ∫_0^ε f` for the oscillation function at `ε = 2^{−m}`, summed
/// from the series: `1 + (−1)^m / 3`.
pub fn oscillation_oracle(m: u32) -> f64 {
    1.0 + if m.is_multiple_of(2) { 1.0 / 3.0 } else { -1.0 / 3.0 }
}

/// `ν_{t,ε}(f(X)) = (1/ε) ∫_t^{t+ε} f`, integrated as `∫_0^1 f(t + εu) du`
/// piecewise between the breakpoints of `f`.
pub fn eval_position(f: &SampledFunction, probe: &LocalizedProbe) -> Result<C64> {
    let (t, eps) = (probe.t, probe.eps);
    let mut cuts = vec![0.0];
    cuts.extend(f.breakpoints.iter().map(|&b| (b - t) / eps).filter(|&u| u > 0.0 && u < 1.0));
    cuts.push(1.0);
    let mut total = C64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += quad::integrate_complex(|u| f.eval(t + eps * u), w[0], w[1], QUAD_ABS, QUAD_REL)?.value;
        }
    }
    Ok(total)
}

/// Sampling for [`eval_momentum_with`] and [`eval_mixed_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumOptions {
    /// FFT length.
    pub samples: usize,
    /// Momentum cutoff `W`; the sample spacing is `π/W`. `None` means
    /// `max(64, 32/ε)`.
    pub window: Option<f64>,
    /// Largest allowed momentum mass beyond the cutoff.
    pub aliasing_budget: f64,
}

impl Default for MomentumOptions {
    fn default() -> Self {
        Self { samples: 1 << 16, window: None, aliasing_budget: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumReport {
    pub value: C64,
    pub window: f64,
    /// Momentum mass of the probe beyond the cutoff.
    pub tail_mass: f64,
    /// `max |g(±W) − g(±∞)|`, zero without declared limits.
    pub tail_deviation: f64,
}

struct Sampled {
    xs: Vec<f64>,
    psi: Vec<f64>,
    ps: Vec<f64>,
    coeffs: Vec<C64>,
    window: f64,
    tail: f64,
}

/// Cell-averaged probe samples on a periodic box and their DFT.
fn sample_probe(probe: &LocalizedProbe, opts: &MomentumOptions) -> Result<Sampled> {
    let n = opts.samples;
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::Function(format!("sample count {n} must be a power of two >= 16")));
    }
    let window = opts.window.unwrap_or_else(|| 64f64.max(32.0 / probe.eps));
    let tail = probe.momentum_tail(window);
    if tail > opts.aliasing_budget {
        return Err(Error::Aliasing { tail, budget: opts.aliasing_budget });
    }
    let dx = PI / window;
    let length = dx * n as f64;
    if length < 4.0 * probe.eps {
        return Err(Error::Aliasing { tail: probe.eps / length, budget: 0.25 });
    }
    let (a, b) = probe.support();
    let x0 = 0.5 * (a + b) - 0.5 * length;
    let height = probe.eps.sqrt().recip();
    let xs: Vec<f64> = (0..n).map(|j| x0 + (j as f64 + 0.5) * dx).collect();
    let psi: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let overlap = (x + 0.5 * dx).min(b) - (x - 0.5 * dx).max(a);
            height * overlap.max(0.0) / dx
        })
        .collect();
    let mut coeffs: Vec<C64> = psi.iter().map(|&v| C64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut coeffs);
    let dp = 2.0 * PI / length;
    let ps = (0..n).map(|k| if k < n / 2 { k as f64 } else { k as f64 - n as f64 } * dp).collect();
    Ok(Sampled { xs, psi, ps, coeffs, window, tail })
}

fn tail_deviation(g: &SampledFunction, window: f64) -> f64 {
    g.limits().map_or(0.0, |(minus, plus)| (g.eval(-window) - minus).norm().max((g.eval(window) - plus).norm()))
}

fn require_limits(g: &SampledFunction) -> Result<()> {
    if g.limits().is_none() {
        return Err(Error::Function(format!("g(P) needs a function with limits at infinity, got {:?}", g.class)));
    }
    Ok(())
}

/// `ν_{t,ε}(g(P)) = ∫ g(p) |ψ̂_{t,ε}(p)|² dp` on the DFT momentum grid.
pub fn eval_momentum(g: &SampledFunction, probe: &LocalizedProbe) -> Result<C64> {
    eval_momentum_with(g, probe, &MomentumOptions::default()).map(|r| r.value)
}

pub fn eval_momentum_with(
    g: &SampledFunction,
    probe: &LocalizedProbe,
    opts: &MomentumOptions,
) -> Result<MomentumReport> {
    require_limits(g)?;
    let s = sample_probe(probe, opts)?;
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (c, &p) in s.coeffs.iter().zip(&s.ps) {
        let w = c.norm_sqr();
        num += g.eval(p) * w;
        den += w;
    }
    Ok(MomentumReport {
        value: num / den,
        window: s.window,
        tail_mass: s.tail,
        tail_deviation: tail_deviation(g, s.window),
    })
}

/// `ν_{t,ε}(f(X) g(P)) = ⟨ψ, f(X) (g(P) ψ)⟩`.
pub fn eval_mixed(f: &SampledFunction, g: &SampledFunction, probe: &LocalizedProbe) -> Result<C64> {
    eval_mixed_with(f, g, probe, &MomentumOptions::default()).map(|r| r.value)
}

pub fn eval_mixed_with(
    f: &SampledFunction,
    g: &SampledFunction,
    probe: &LocalizedProbe,
    opts: &MomentumOptions,
) -> Result<MomentumReport> {
    require_limits(g)?;
    let mut s = sample_probe(probe, opts)?;
    let n = s.coeffs.len();
    for (c, &p) in s.coeffs.iter_mut().zip(&s.ps) {
        *c *= g.eval(p);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut s.coeffs);
    let scale = 1.0 / n as f64;
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for ((&x, &psi), &phi) in s.xs.iter().zip(&s.psi).zip(&s.coeffs) {
        if psi != 0.0 {
            num += f.eval(x) * phi * (psi * scale);
            den += psi * psi;
        }
    }
    Ok(MomentumReport {
        value: num / den,
        window: s.window,
        tail_mass: s.tail,
        tail_deviation: tail_deviation(g, s.window),
    })
}

/// `ν_{t,ε}(|φ⟩⟨φ|) = |⟨ψ_{t,ε}, φ⟩|²`.
pub fn compact_vanishing(phi: &SampledFunction, probe: &LocalizedProbe) -> Result<f64> {
    let mean = eval_position(phi, probe)?;
    Ok(probe.eps * mean.norm_sqr())
}

/// `ε = 2^{−n}` for `n = 0, …, levels − 1`.
pub fn dyadic_eps(levels: u32) -> Vec<f64> {
    (0..levels).map(|n| 0.5f64.powi(n as i32)).collect()
}

/// Convergence summary of values along a dyadic `ε` sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsTrend {
    /// `2 v(ε_last) − v(ε_prev)`, the first-order Richardson extrapolation.
    pub richardson: f64,
    /// `log₂` of the ratio of the last two successive differences.
    pub observed_order: f64,
    pub last_difference: f64,
}

pub fn eps_trend(values: &[f64]) -> Option<EpsTrend> {
    let k = values.len();
    if k < 3 {
        return None;
    }
    let d1 = values[k - 2] - values[k - 3];
    let d2 = values[k - 1] - values[k - 2];
    Some(EpsTrend {
        richardson: 2.0 * values[k - 1] - values[k - 2],
        observed_order: (d1.abs() / d2.abs()).log2(),
        last_difference: d2,
    })
}

/// Limits of the even- and odd-indexed subsequences, taken as the last
/// value of each.
pub fn parity_limits(values: &[f64]) -> Option<(f64, f64)> {
    let even = values.iter().step_by(2).next_back()?;
    let odd = values.iter().skip(1).step_by(2).next_back()?;
    Some((*even, *odd))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Demo {
    /// `ν_{0,ε}(cos X) → 1`.
    Delta,
    /// `ν_{0,ε}(cos X · P²/(1+P²)) → 1`.
    Mixed,
    /// The oscillation function, values `1 ± 1/3`.
    Oscillation,
    /// `|⟨ψ_{0,ε}, e^{−x²/2}⟩|² → 0`.
    Compact,
}

impl std::str::FromStr for Demo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "mixed" => Ok(Self::Mixed),
            "oscillation" => Ok(Self::Oscillation),
            "compact" => Ok(Self::Compact),
            other => {
                Err(Error::Parse(format!("unknown demo {other:?}; expected delta, mixed, oscillation or compact")))
            }
        }
    }
}

impl Demo {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Mixed => "mixed",
            Self::Oscillation => "oscillation",
            Self::Compact => "compact",
        }
    }

    /// `(ε, value)` over `ε = 2^{−n}`, `n < levels`.
    pub fn run(self, levels: u32) -> Result<Vec<(f64, f64)>> {
        dyadic_eps(levels)
            .into_par_iter()
            .map(|eps| {
                let probe = LocalizedProbe::new(0.0, eps)?;
                let v = match self {
                    Self::Delta => eval_position(&SampledFunction::real(f64::cos), &probe)?.re,
                    Self::Mixed => {
                        let g = SampledFunction::with_limits(
                            |p| C64::new(p * p / (1.0 + p * p), 0.0),
                            C64::new(1.0, 0.0),
                            C64::new(1.0, 0.0),
                        );
                        eval_mixed(&SampledFunction::real(f64::cos), &g, &probe)?.re
                    }
                    Self::Oscillation => eval_position(&oscillation_function(), &probe)?.re,
                    Self::Compact => compact_vanishing(&SampledFunction::real(|x| (-0.5 * x * x).exp()), &probe)?,
                };
                Ok((eps, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn re(f: fn(f64) -> f64) -> SampledFunction {
        SampledFunction::real(f)
    }

    fn limits(g: fn(f64) -> f64, minus: f64, plus: f64) -> SampledFunction {
        SampledFunction::with_limits(move |p| C64::new(g(p), 0.0), C64::new(minus, 0.0), C64::new(plus, 0.0))
    }

    /// `∫ g |ψ̂|²` by quadrature of the closed-form density in `u = pε`.
    fn momentum_oracle(g: impl Fn(f64) -> f64, eps: f64) -> f64 {
        let dens =
            |u: f64| if u.abs() < 1e-8 { 1.0 / (2.0 * PI) } else { 2.0 * (0.5 * u).sin().powi(2) / (PI * u * u) };
        let mut total = 0.0;
        let mut a = 0.0;
        while a < 4000.0 {
            let b = a + 2.0 * PI;
            total += quad::integrate(|u| dens(u) * (g(u / eps) + g(-u / eps)), a, b, 1e-14, 1e-12).unwrap();
            a = b;
        }
        total
    }

    #[test]
    fn probe_is_normalized() {
        for eps in [1.0, 1e-3, 1e-7] {
            let p = LocalizedProbe::new(0.3, eps).unwrap();
            assert_abs_diff_eq!(p.norm_squared().unwrap(), 1.0, epsilon = 1e-12);
        }
        assert!(LocalizedProbe::new(0.0, 0.0).is_err());
    }

    #[test]
    fn constants_and_cos() {
        let one = SampledFunction::constant(C64::new(1.0, 0.0));
        for eps in [1.0, 0.1, 1e-6] {
            let p = LocalizedProbe::new(0.0, eps).unwrap();
            assert_eq!(eval_position(&one, &p).unwrap(), C64::new(1.0, 0.0));
            let v = eval_position(&re(f64::cos), &p).unwrap().re;
            assert_abs_diff_eq!(v, eps.sin() / eps, epsilon = 1e-13);
        }
    }

    #[test]
    fn oscillation_alternates() {
        for m in 0..=14u32 {
            let p = LocalizedProbe::new(0.0, 0.5f64.powi(m as i32)).unwrap();
            let v = eval_position(&oscillation_function(), &p).unwrap().re;
            assert_abs_diff_eq!(v, oscillation_oracle(m), epsilon = 1e-12);
        }
        assert_eq!(oscillation(0.75), 2.0);
        assert_eq!(oscillation(0.3), 0.0);
        assert_eq!(oscillation(1.0), 2.0);
        assert_eq!(oscillation(-0.1), 1.0);
    }

    #[test]
    fn momentum_constant_and_odd() {
        let p = LocalizedProbe::new(0.0, 0.1).unwrap();
        let c = C64::new(2.5, -1.0);
        assert!((eval_momentum(&SampledFunction::constant(c), &p).unwrap() - c).norm() < 1e-12);
        let odd = limits(|p| p / (1.0 + p * p).sqrt(), -1.0, 1.0);
        for eps in [1e-1, 1e-2] {
            let v = eval_momentum(&odd, &LocalizedProbe::new(0.0, eps).unwrap()).unwrap();
            assert!(v.norm() < 1e-3, "eps {eps}: {v}");
        }
    }

    #[test]
    fn momentum_matches_density_oracle() {
        let g = |p: f64| 1.0 + 4.0 / (1.0 + p * p);
        for eps in [1e-1, 1e-2] {
            let v = eval_momentum(&limits(g, 1.0, 1.0), &LocalizedProbe::new(0.0, eps).unwrap()).unwrap().re;
            let want = momentum_oracle(g, eps);
            assert_abs_diff_eq!(v, want, epsilon = 0.02 * (want - 1.0).abs() + 1e-4);
        }
        // only the tails matter: g(0) = 5 but the value goes to 1
        let v = eval_momentum(&limits(g, 1.0, 1.0), &LocalizedProbe::new(0.0, 1e-3).unwrap()).unwrap().re;
        assert!((v - 1.0).abs() < 0.01);
    }

    #[test]
    fn aliasing_budget_enforced() {
        let p = LocalizedProbe::new(0.0, 1e-2).unwrap();
        let opts = MomentumOptions { window: Some(10.0), ..Default::default() };
        let g = SampledFunction::constant(C64::new(1.0, 0.0));
        assert!(matches!(eval_momentum_with(&g, &p, &opts), Err(Error::Aliasing { .. })));
        assert!(eval_momentum(&re(f64::cos), &p).is_err());
    }

    #[test]
    fn mixed_limits() {
        let p = LocalizedProbe::new(0.0, 0.5f64.powi(10)).unwrap();
        let g = limits(|p| p * p / (1.0 + p * p), 1.0, 1.0);
        let v = eval_mixed(&re(f64::cos), &g, &p).unwrap();
        assert!((v.re - 1.0).abs() < 0.05 && v.im.abs() < 0.05, "{v}");
        let v = eval_mixed(&re(f64::sin), &g, &p).unwrap();
        assert!(v.norm() < 0.05);
        let one = SampledFunction::constant(C64::new(1.0, 0.0));
        let v = eval_mixed(&re(|_| 1.0), &one, &p).unwrap();
        assert!((v - 1.0).norm() < 1e-12);
    }

    #[test]
    fn compact_examples() {
        let gauss = re(|x| (-0.5 * x * x).exp());
        for eps in [1e-2, 1e-3, 1e-4] {
            let v = compact_vanishing(&gauss, &LocalizedProbe::new(0.0, eps).unwrap()).unwrap();
            assert_abs_diff_eq!(v / eps, 1.0, epsilon = 2.0 * eps);
        }
        let far =
            SampledFunction::step(|x| C64::new(if (5.0..6.0).contains(&x) { 1.0 } else { 0.0 }, 0.0), vec![5.0, 6.0]);
        assert_eq!(compact_vanishing(&far, &LocalizedProbe::new(0.0, 0.1).unwrap()).unwrap(), 0.0);
        let p = LocalizedProbe::new(0.2, 1e-3).unwrap();
        assert_abs_diff_eq!(compact_vanishing(&p.as_function(), &p).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn tables_interpolate() {
        let f = SampledFunction::from_table(
            vec![0.0, 1.0, 2.0],
            vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0)],
            FunctionClass::BoundedContinuous,
        )
        .unwrap();
        assert_eq!(f.eval(0.5).re, 1.0);
        assert_eq!(f.eval(-3.0).re, 0.0);
        let v = eval_position(&f, &LocalizedProbe::new(0.0, 1.0).unwrap()).unwrap().re;
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-13);
        assert!(SampledFunction::from_table(vec![1.0, 0.0], vec![C64::new(0.0, 0.0); 2], FunctionClass::Step).is_err());
    }

    #[test]
    fn demo_names() {
        assert_eq!("oscillation".parse::<Demo>().unwrap(), Demo::Oscillation);
        assert!("sawtooth".parse::<Demo>().is_err());
        let values: Vec<f64> = Demo::Oscillation.run(6).unwrap().into_iter().map(|(_, v)| v).collect();
        let (even, odd) = parity_limits(&values).unwrap();
        assert_abs_diff_eq!(even - odd, 2.0 / 3.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn positivity_and_translation(t in -3.0f64..3.0, s in -2.0f64..2.0, eps in 1e-4f64..1.0) {
            let f = re(|x| x.sin().powi(2) + 0.1);
            let p = LocalizedProbe::new(t, eps).unwrap();
            let v = eval_position(&f, &p).unwrap();
            prop_assert!(v.re >= 0.0);
            let moved = eval_position(&f.shifted(s), &p.translated(s)).unwrap();
            prop_assert!((moved - v).norm() <= 1e-13);
        }

        #[test]
        fn position_is_a_mean(t in -3.0f64..3.0, eps in 1e-4f64..1.0) {
            let v = eval_position(&re(f64::cos), &LocalizedProbe::new(t, eps).unwrap()).unwrap().re;
            let exact = ((t + eps).sin() - t.sin()) / eps;
            prop_assert!((v - exact).abs() <= 1e-10);
        }
    }
}
