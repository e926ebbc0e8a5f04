//! Bang-bang decoupling on a dilation: decoupling sets and cycles, the
//! decoupled propagator `U⁽ⁿ⁾(0,t)`, the averaged target `U_e(0,t)`, the
//! error bracket, sweeps over `n` and log-log rate fits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilation::{DilationSource, PropagatorGrid};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::numerics::{
    self, c, identity, kron, partial_trace, spectral_norm, trace_norm, unitarity_defect, ComplexMatrix, ComplexVector,
    Subsystem, UnitaryMatrix, C64, ONE,
};
use crate::tolerances;

/// Unitaries `V` on `H₀` with `(1/|V|) Σ_v v A v† = tr(A)/d₀ · 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingSet {
    d: usize,
    members: Vec<UnitaryMatrix>,
}

fn matrix_units(d: usize) -> impl Iterator<Item = (usize, usize, ComplexMatrix)> {
    (0..d).flat_map(move |i| {
        (0..d).map(move |j| {
            let mut e = numerics::zeros(d, d);
            e[(i, j)] = ONE;
            (i, j, e)
        })
    })
}

/// `max_ij ‖(1/|V|) Σ_v v E_ij v† − δ_ij/d · 1‖` (Frobenius).
fn averaging_defect(members: &[ComplexMatrix]) -> f64 {
    let d = members[0].nrows();
    let inv = c(1.0 / members.len() as f64, 0.0);
    matrix_units(d)
        .map(|(i, j, e)| {
            let mut avg = numerics::zeros(d, d);
            for v in members {
                avg += v * &e * v.adjoint();
            }
            avg *= inv;
            if i == j {
                avg -= identity(d) * c(1.0 / d as f64, 0.0);
            }
            avg.norm()
        })
        .fold(0.0, f64::max)
}

fn check_members(members: &[ComplexMatrix]) -> Result<usize> {
    let d = members.first().map(|m| m.nrows()).ok_or_else(|| Error::DecouplingSet("empty set".into()))?;
    for (k, v) in members.iter().enumerate() {
        if v.nrows() != d || v.ncols() != d {
            return Err(Error::DecouplingSet(format!("member {k} is {}x{}, expected {d}x{d}", v.nrows(), v.ncols())));
        }
        let defect = unitarity_defect(v);
        if defect > tolerances::STRUCTURAL {
            return Err(Error::DecouplingSet(format!("member {k} is not unitary (defect {defect:.3e})")));
        }
    }
    Ok(d)
}

/// True iff the averaging identity holds within `1e−10` on every matrix
/// unit. Fails on non-unitary or mismatched members.
pub fn verify_decoupling_set(members: &[ComplexMatrix]) -> Result<bool> {
    check_members(members)?;
    Ok(averaging_defect(members) <= 1e-10)
}

impl DecouplingSet {
    pub fn new(members: Vec<ComplexMatrix>) -> Result<Self> {
        let d = check_members(&members)?;
        let defect = averaging_defect(&members);
        if defect > 1e-10 {
            return Err(Error::DecouplingSet(format!("averaging identity fails by {defect:.3e}")));
        }
        Ok(Self { d, members: members.into_iter().map(UnitaryMatrix::new_unchecked).collect() })
    }

    /// `{1, X, Y, Z}` on a qubit.
    pub fn pauli() -> Self {
        let members = vec![numerics::pauli::id(), numerics::pauli::x(), numerics::pauli::y(), numerics::pauli::z()];
        Self { d: 2, members: members.into_iter().map(UnitaryMatrix::new_unchecked).collect() }
    }

    /// Weyl (clock and shift) operators `X^a Z^b`, `0 ≤ a, b < d`.
    pub fn weyl(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::DecouplingSet("dimension must be positive".into()));
        }
        let shift = ComplexMatrix::from_fn(d, d, |r, s| if r == (s + 1) % d { ONE } else { C64::new(0.0, 0.0) });
        let clock = ComplexMatrix::from_fn(d, d, |r, s| {
            if r == s {
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / d as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut members = Vec::with_capacity(d * d);
        let mut xa = identity(d);
        for _ in 0..d {
            let mut zb = identity(d);
            for _ in 0..d {
                members.push(UnitaryMatrix::new_unchecked(&xa * &zb));
                zb = &zb * &clock;
            }
            xa = &xa * &shift;
        }
        Ok(Self { d, members })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[UnitaryMatrix] {
        &self.members
    }

    /// `(1/|V|) Σ_v v A v†`.
    pub fn average(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let mut out = numerics::zeros(self.d, self.d);
        for v in &self.members {
            out += v.as_matrix() * a * v.as_matrix().adjoint();
        }
        out * c(1.0 / self.len() as f64, 0.0)
    }

    /// `(1/|V|) Σ_v (1⊗v) X (1⊗v)†` for `X` on `H₁ ⊗ H₀`.
    pub fn average_lifted(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d1 = x.nrows() / self.d;
        let mut out = numerics::zeros(x.nrows(), x.ncols());
        for v in &self.members {
            out += numerics::conjugate_second_factor(x, v.as_matrix(), d1);
        }
        out * c(1.0 / self.len() as f64, 0.0)
    }

    pub fn averaging_defect(&self) -> f64 {
        let ms: Vec<ComplexMatrix> = self.members.iter().map(|v| v.as_matrix().clone()).collect();
        averaging_defect(&ms)
    }
}

pub fn pauli_set() -> DecouplingSet {
    DecouplingSet::pauli()
}

pub fn weyl_set(d: usize) -> Result<DecouplingSet> {
    DecouplingSet::weyl(d)
}

/// Pulses `(v₁, …, v_n)`, applied one per interval of length `t/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingCycle {
    pulses: Vec<UnitaryMatrix>,
}

impl DecouplingCycle {
    /// `order` (a permutation of the set's indices) repeated `n/|V|` times.
    pub fn repeated(set: &DecouplingSet, order: &[usize], n: usize) -> Result<Self> {
        let m = set.len();
        let mut seen = vec![false; m];
        if order.len() != m || order.iter().any(|&k| k >= m || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::Cycle(format!("order {order:?} is not a permutation of 0..{m}")));
        }
        if n == 0 || !n.is_multiple_of(m) {
            return Err(Error::Cycle(format!("n = {n} is not a positive multiple of |V| = {m}")));
        }
        let pulses = (0..n).map(|j| set.members[order[j % m]].clone()).collect();
        Ok(Self { pulses })
    }

    /// The set in its stored order, repeated.
    pub fn standard(set: &DecouplingSet, n: usize) -> Result<Self> {
        let order: Vec<usize> = (0..set.len()).collect();
        Self::repeated(set, &order, n)
    }

    /// An explicit sequence of set indices; each member must occur equally
    /// often.
    pub fn from_indices(set: &DecouplingSet, indices: &[usize]) -> Result<Self> {
        let m = set.len();
        let mut counts = vec![0usize; m];
        for &k in indices {
            *counts.get_mut(k).ok_or_else(|| Error::Cycle(format!("index {k} outside 0..{m}")))? += 1;
        }
        if indices.is_empty() || counts.iter().any(|&x| x != counts[0]) {
            return Err(Error::Cycle(format!("members are not used equally often: {counts:?}")));
        }
        Ok(Self { pulses: indices.iter().map(|&k| set.members[k].clone()).collect() })
    }

    /// `n` identity pulses; not a decoupling cycle, but `U⁽ⁿ⁾` then
    /// telescopes to `U(0,t)`.
    pub fn trivial(d: usize, n: usize) -> Self {
        Self { pulses: vec![UnitaryMatrix::identity(d); n] }
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn pulses(&self) -> &[UnitaryMatrix] {
        &self.pulses
    }
}

fn grid_index(pg: &PropagatorGrid, t: f64, interval: f64) -> Result<usize> {
    pg.grid().index_of(t).ok_or(Error::Misaligned { interval })
}

/// `U⁽ⁿ⁾(0,t) = Π_{j=1}^{n} v̂_j U(t_{j−1}, t_j) v̂_j†` with `t_j = j t/n`
/// and `v̂ = 1 ⊗ v`, leftmost factor `j = 1`.
pub fn decoupled_propagator(pg: &PropagatorGrid, cycle: &DecouplingCycle, t: f64) -> Result<UnitaryMatrix> {
    let n = cycle.len();
    if n == 0 {
        return Err(Error::Cycle("empty cycle".into()));
    }
    if pg.system_dim() != cycle.pulses[0].dim() {
        return Err(Error::Dimension(format!(
            "cycle acts on C^{}, dilation system is C^{}",
            cycle.pulses[0].dim(),
            pg.system_dim()
        )));
    }
    let interval = t / n as f64;
    let d1 = pg.bath_dim();
    let mut w = identity(pg.dim());
    let mut prev = pg.at_index(grid_index(pg, 0.0, interval)?).as_matrix();
    for (j, v) in cycle.pulses.iter().enumerate() {
        let tj = if j + 1 == n { t } else { (j + 1) as f64 * interval };
        let next = pg.at_index(grid_index(pg, tj, interval)?).as_matrix();
        let slice = prev * next.adjoint();
        w *= numerics::conjugate_second_factor(&slice, v.as_matrix(), d1);
        prev = next;
    }
    Ok(UnitaryMatrix::new_unchecked(w))
}

/// `U_e(0,t)` for the averaged bath Hamiltonian.
///
/// Each grid cell contributes its exact generator `G_i`, where
/// `U(t_{i+1},0) U(t_i,0)† = exp(−i G_i)`; the cell factor of `U_e(t,0)` is
/// `exp(−i Ḡ_i)` with `Ḡ_i` the decoupling-set average of `G_i`, which
/// lies in `B(H₁) ⊗ 1`.
pub fn averaged_target(pg: &PropagatorGrid, set: &DecouplingSet, t: f64) -> Result<UnitaryMatrix> {
    let m =
        pg.grid().index_of(t).ok_or_else(|| Error::OffGrid { t, reason: "U_e needs a grid-aligned time".into() })?;
    let times = pg.grid().points();
    let mut ue_forward = identity(pg.dim());
    for (i, &t_i) in times[..m].iter().enumerate() {
        let step = pg.at_index(i + 1).as_matrix() * pg.at_index(i).as_matrix().adjoint();
        let g = numerics::hermitian_generator(&step).map_err(|phase| Error::GridTooCoarse { t: t_i, phase })?;
        let g_avg = numerics::hermitian_part(&set.average_lifted(&g));
        let cell = numerics::unitary_exp(&g_avg, 1.0)?;
        ue_forward = cell.as_matrix() * ue_forward;
    }
    Ok(UnitaryMatrix::new_unchecked(ue_forward.adjoint()))
}

/// `‖U_e − (A ⊗ 1)‖` for the best bath-only `A`, as a structure check.
pub fn bath_only_defect(u: &ComplexMatrix, d0: usize) -> Result<f64> {
    let d1 = u.nrows() / d0;
    let a = partial_trace(u, Subsystem::B, (d1, d0))? * c(1.0 / d0 as f64, 0.0);
    Ok((u - kron(&a, &identity(d0))).norm())
}

/// `2 ‖U⁽ⁿ⁾(0,t) − U_e(0,t)‖`.
pub fn error_bound(pg: &PropagatorGrid, cycle: &DecouplingCycle, set: &DecouplingSet, t: f64) -> Result<f64> {
    let w = decoupled_propagator(pg, cycle, t)?;
    let ue = averaged_target(pg, set, t)?;
    Ok(2.0 * spectral_norm(&(w.as_matrix() - ue.as_matrix())))
}

/// Pure probe states on `H₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    states: Vec<ComplexVector>,
}

impl ProbeSet {
    /// The `d₀²` states `u_i`, `(u_i + u_j)/√2` and `(u_i + i u_j)/√2`
    /// (`i < j`), which span all matrix units, plus `haar` Haar-random
    /// states drawn from `seed`.
    pub fn standard(d0: usize, haar: usize, seed: u64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut states = vec![];
        for i in 0..d0 {
            let mut v = ComplexVector::zeros(d0);
            v[i] = ONE;
            states.push(v);
        }
        for i in 0..d0 {
            for j in i + 1..d0 {
                for phase in [c(1.0, 0.0), c(0.0, 1.0)] {
                    let mut v = ComplexVector::zeros(d0);
                    v[i] = c(s, 0.0);
                    v[j] = phase * s;
                    states.push(v);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..haar {
            let v = ComplexVector::from_fn(d0, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                c(re, im)
            });
            let n = v.norm();
            states.push(v / c(n, 0.0));
        }
        Self { states }
    }

    pub fn states(&self) -> &[ComplexVector] {
        &self.states
    }
}

/// `max_ψ ‖Λ_n(ψ) − ψ‖₁` over the probe set with
/// `Λ_n(ρ) = tr_e[W† (μ̂ ⊗ ρ) W]`, `W = U⁽ⁿ⁾(0,t)`.
///
/// With `W = U(0,t)` (the trivial cycle) `Λ_n = Φ_t*`; the value is a lower
/// bound on the decoupling error and never exceeds [`error_bound`].
pub fn exact_error(pg: &PropagatorGrid, cycle: &DecouplingCycle, t: f64, probes: &ProbeSet) -> Result<f64> {
    let w = decoupled_propagator(pg, cycle, t)?;
    Ok(probe_error(&w, pg.system_dim(), probes))
}

fn probe_error(w: &UnitaryMatrix, d0: usize, probes: &ProbeSet) -> f64 {
    let d = w.dim();
    let d1 = d / d0;
    let wd = w.as_matrix().adjoint();
    probes
        .states()
        .iter()
        .map(|psi| {
            // μ̂ ⊗ |ψ><ψ| = |e₁ ⊗ ψ><e₁ ⊗ ψ|, and e₁ ⊗ ψ fills the first d₀ entries
            let y = wd.columns(0, d0) * psi;
            let reduced = partial_trace(&(&y * y.adjoint()), Subsystem::A, (d1, d0)).expect("dimensions match");
            trace_norm(&(reduced - psi * psi.adjoint()))
        })
        .fold(0.0, f64::max)
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub t: f64,
    pub n_list: Vec<usize>,
    #[serde(default = "default_cells")]
    pub cells_per_interval: usize,
    /// Order of one cycle through the set; `None` means stored order.
    #[serde(default)]
    pub order: Option<Vec<usize>>,
    #[serde(default = "default_haar")]
    pub haar_probes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_cells() -> usize {
    8
}

fn default_haar() -> usize {
    20
}

impl SweepConfig {
    pub fn new(t: f64, n_list: Vec<usize>) -> Self {
        Self { t, n_list, cells_per_interval: default_cells(), order: None, haar_probes: default_haar(), seed: 0 }
    }
}

/// `n = n_0, 2n_0, 4n_0, …` up to `n_max`.
pub fn doubling(n0: usize, n_max: usize) -> Vec<usize> {
    std::iter::successors(Some(n0), |&n| Some(n * 2)).take_while(|&n| n <= n_max).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub t: f64,
    pub bound: f64,
    pub exact_lower: f64,
    pub cells_per_interval: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub t: f64,
    pub records: Vec<SweepRecord>,
}

/// Runs one record per `n`, in parallel. The dilation is rebuilt for each
/// `n` on a pulse-aligned grid, so every pulse time is a grid point.
pub fn sweep(source: &dyn DilationSource, set: &DecouplingSet, config: &SweepConfig) -> Result<SweepResult> {
    if set.dim() != source.system_dim() {
        return Err(Error::Dimension(format!(
            "decoupling set on C^{} for a system C^{}",
            set.dim(),
            source.system_dim()
        )));
    }
    let order: Vec<usize> = config.order.clone().unwrap_or_else(|| (0..set.len()).collect());
    let probes = ProbeSet::standard(set.dim(), config.haar_probes, config.seed);
    let mut records: Vec<SweepRecord> = config
        .n_list
        .par_iter()
        .map(|&n| -> Result<SweepRecord> {
            let cycle = DecouplingCycle::repeated(set, &order, n)?;
            let grid = TimeGrid::pulse_aligned(config.t, n, config.cells_per_interval)?;
            let pg = source.build(&grid)?;
            let record = sweep_record(&pg, set, &cycle, config.t, &probes, config.cells_per_interval)?;
            log::debug!("n = {n}: bound {:.6e}, exact {:.6e}", record.bound, record.exact_lower);
            Ok(record)
        })
        .collect::<Result<_>>()?;
    records.sort_by_key(|r| r.n);
    Ok(SweepResult { t: config.t, records })
}

/// Bound and probe error for one prebuilt propagator grid.
pub fn sweep_record(
    pg: &PropagatorGrid,
    set: &DecouplingSet,
    cycle: &DecouplingCycle,
    t: f64,
    probes: &ProbeSet,
    cells_per_interval: usize,
) -> Result<SweepRecord> {
    let w = decoupled_propagator(pg, cycle, t)?;
    let ue = averaged_target(pg, set, t)?;
    let bound = 2.0 * spectral_norm(&(w.as_matrix() - ue.as_matrix()));
    let exact_lower = probe_error(&w, pg.system_dim(), probes);
    Ok(SweepRecord { n: cycle.len(), t, bound, exact_lower, cells_per_interval })
}

impl SweepResult {
    /// `n,t,bound,exact_lower,cells_per_interval`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(s.as_bytes());
        let records: Vec<SweepRecord> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        let t = records.first().map(|r| r.t).ok_or_else(|| Error::Fit("no sweep records".into()))?;
        Ok(Self { t, records })
    }

    /// Two columns `n,bound`, for plotting.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("n,bound\n");
        for r in &self.records {
            out.push_str(&format!("{},{}\n", r.n, r.bound));
        }
        out
    }

    /// Records where the probe lower bound exceeds the upper bound by more
    /// than `tol`.
    pub fn bracket_violations(&self, tol: f64) -> Vec<SweepRecord> {
        self.records.iter().filter(|r| r.exact_lower > r.bound + tol).copied().collect()
    }

    pub fn fit(&self) -> Result<RateFit> {
        fit_rate(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateClass {
    /// Slope near `−1/2`: the dilation Hamiltonian is singular at `t = 0`.
    Dissipative,
    /// Slope near `−1`: bounded Hamiltonian, `L = i[K, ·]`.
    Hamiltonian,
}

impl RateClass {
    pub fn target_slope(self) -> f64 {
        match self {
            Self::Dissipative => -0.5,
            Self::Hamiltonian => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub classification: RateClass,
}

/// Bounds at or below this are rounding noise and cannot carry a rate.
pub const FIT_FLOOR: f64 = 1e-12;

/// Least-squares fit of `ln(bound)` against `ln(n)` over the largest-`n`
/// half of the records (at least two points). Needs four records spanning
/// two decades.
pub fn fit_rate(sr: &SweepResult) -> Result<RateFit> {
    let mut recs = sr.records.clone();
    recs.sort_by_key(|r| r.n);
    recs.dedup_by_key(|r| r.n);
    if recs.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 distinct n, got {}", recs.len())));
    }
    let (lo, hi) = (recs[0].n as f64, recs[recs.len() - 1].n as f64);
    if hi / lo < 100.0 {
        return Err(Error::Fit(format!("n spans {lo}..{hi}, less than two decades")));
    }
    let top = &recs[recs.len() / 2..];
    if let Some(r) = top.iter().find(|r| !(r.bound > FIT_FLOOR)) {
        return Err(Error::Fit(format!("bound {:.3e} at n = {} is at the numerical floor", r.bound, r.n)));
    }
    let xs: Vec<f64> = top.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = top.iter().map(|r| r.bound.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let classification =
        if (slope + 0.5).abs() <= (slope + 1.0).abs() { RateClass::Dissipative } else { RateClass::Hamiltonian };
    Ok(RateFit { slope, intercept, r2, classification })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{amplitude_damping_preset, ChannelFamily, Lindbladian};
    use crate::dilation::{AnalyticAdDilation, PipelineDilation};
    use crate::numerics::pauli;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pauli_averages() {
        let v = DecouplingSet::pauli();
        assert!((v.average(&identity(2)) - identity(2)).norm() < 1e-15);
        assert!(v.average(&pauli::z()).norm() < 1e-15);
        assert!(v.averaging_defect() <= 1e-12);
    }

    #[test]
    fn weyl_averages() {
        for d in 2..=5 {
            let v = DecouplingSet::weyl(d).unwrap();
            assert_eq!(v.len(), d * d);
            assert!(v.averaging_defect() <= 1e-12, "d = {d}");
        }
        let v = DecouplingSet::weyl(3).unwrap();
        let clock = ComplexMatrix::from_fn(3, 3, |r, s| {
            if r == s {
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / 3.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!(v.average(&clock).norm() < 1e-14);
    }

    #[test]
    fn verify_examples() {
        let ixyz = [pauli::id(), pauli::x(), pauli::y(), pauli::z()];
        assert!(verify_decoupling_set(&ixyz).unwrap());
        assert!(!verify_decoupling_set(&[pauli::id(), pauli::x()]).unwrap());
        assert!(verify_decoupling_set(&[identity(1)]).unwrap());
        assert!(verify_decoupling_set(&[pauli::plus()]).is_err());
        assert!(DecouplingSet::new(vec![pauli::id(), pauli::x()]).is_err());
    }

    #[test]
    fn cycle_rules() {
        let v = DecouplingSet::pauli();
        assert!(DecouplingCycle::standard(&v, 6).is_err());
        assert!(DecouplingCycle::repeated(&v, &[0, 1, 1, 3], 8).is_err());
        assert_eq!(DecouplingCycle::repeated(&v, &[3, 2, 1, 0], 8).unwrap().len(), 8);
        assert!(DecouplingCycle::from_indices(&v, &[0, 1, 2, 3, 0]).is_err());
        assert!(DecouplingCycle::from_indices(&v, &[0, 1, 3, 2]).is_ok());
    }

    fn ad_grid(n: usize) -> PropagatorGrid {
        let grid = TimeGrid::pulse_aligned(1.0, n, 8).unwrap();
        PipelineDilation::new(ChannelFamily::semigroup(amplitude_damping_preset())).build(&grid).unwrap()
    }

    #[test]
    fn trivial_cycle_telescopes() {
        let pg = ad_grid(16);
        let w = decoupled_propagator(&pg, &DecouplingCycle::trivial(2, 16), 1.0).unwrap();
        let want = pg.propagator(0.0, 1.0).unwrap();
        assert!((w.as_matrix() - want.as_matrix()).norm() < 1e-10);
        // and Λ_n is then the channel itself
        let probes = ProbeSet::standard(2, 0, 0);
        let e = exact_error(&pg, &DecouplingCycle::trivial(2, 16), 1.0, &probes).unwrap();
        assert_abs_diff_eq!(e, 2.0 * (1.0 - (-1f64).exp()), epsilon = 1e-8);
    }

    #[test]
    fn misaligned_cycle() {
        let pg = ad_grid(8);
        let cycle = DecouplingCycle::standard(&DecouplingSet::pauli(), 12).unwrap();
        assert!(matches!(decoupled_propagator(&pg, &cycle, 1.0), Err(Error::Misaligned { .. })));
    }

    #[test]
    fn identity_family_has_no_error() {
        let src = PipelineDilation::new(ChannelFamily::semigroup(Lindbladian::identity(2)));
        let pg = src.build(&TimeGrid::pulse_aligned(1.0, 8, 4).unwrap()).unwrap();
        let v = DecouplingSet::pauli();
        let cycle = DecouplingCycle::standard(&v, 8).unwrap();
        assert!(error_bound(&pg, &cycle, &v, 1.0).unwrap() < 1e-9);
        assert!(exact_error(&pg, &cycle, 1.0, &ProbeSet::standard(2, 20, 1)).unwrap() < 1e-9);
    }

    #[test]
    fn bath_only_dilation_commutes_through() {
        // H(t) = B ⊗ 1: pulses commute with every slice
        let b = pauli::x();
        let grid = TimeGrid::pulse_aligned(1.0, 8, 2).unwrap();
        let pg = PropagatorGrid::from_fn(&grid, 2, |t| numerics::unitary_exp(&kron(&b, &identity(2)), t)).unwrap();
        let v = DecouplingSet::pauli();
        let cycle = DecouplingCycle::repeated(&v, &[2, 0, 3, 1], 8).unwrap();
        let w = decoupled_propagator(&pg, &cycle, 1.0).unwrap();
        assert!((w.as_matrix() - pg.propagator(0.0, 1.0).unwrap().as_matrix()).norm() < 1e-12);
        let ue = averaged_target(&pg, &v, 1.0).unwrap();
        assert!((ue.as_matrix() - pg.propagator(0.0, 1.0).unwrap().as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn analytic_target_is_identity() {
        let v = DecouplingSet::pauli();
        let pg = AnalyticAdDilation.build(&TimeGrid::pulse_aligned(1.0, 8, 8).unwrap()).unwrap();
        let ue = averaged_target(&pg, &v, 1.0).unwrap();
        assert!((ue.as_matrix() - identity(4)).norm() < 1e-12);
    }

    #[test]
    fn target_is_bath_only_and_acts_trivially() {
        let fam = ChannelFamily::semigroup(Lindbladian::random(2, 2, 1.5, 3).unwrap());
        let pg = PipelineDilation::new(fam).build(&TimeGrid::pulse_aligned(1.0, 16, 8).unwrap()).unwrap();
        let v = DecouplingSet::pauli();
        let ue = averaged_target(&pg, &v, 1.0).unwrap();
        assert!(bath_only_defect(ue.as_matrix(), 2).unwrap() < 1e-8);
        assert!(probe_error(&ue, 2, &ProbeSet::standard(2, 20, 0)) < 1e-8);
    }

    #[test]
    fn fit_exact_power_laws() {
        for (p, class) in [(-0.5, RateClass::Dissipative), (-1.0, RateClass::Hamiltonian)] {
            let records = doubling(8, 4096)
                .into_iter()
                .map(|n| SweepRecord {
                    n,
                    t: 1.0,
                    bound: 3.0 * (n as f64).powf(p),
                    exact_lower: 0.0,
                    cells_per_interval: 8,
                })
                .collect();
            let fit = fit_rate(&SweepResult { t: 1.0, records }).unwrap();
            assert_abs_diff_eq!(fit.slope, p, epsilon = 1e-12);
            assert_abs_diff_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-11);
            assert_eq!(fit.classification, class);
        }
        let one = SweepResult {
            t: 1.0,
            records: vec![SweepRecord { n: 8, t: 1.0, bound: 0.1, exact_lower: 0.0, cells_per_interval: 8 }],
        };
        assert!(matches!(fit_rate(&one), Err(Error::Fit(_))));
    }

    #[test]
    fn csv_schema() {
        let sr = SweepResult {
            t: 1.0,
            records: vec![SweepRecord { n: 8, t: 1.0, bound: 0.5, exact_lower: 0.25, cells_per_interval: 8 }],
        };
        let csv = sr.to_csv().unwrap();
        assert_eq!(csv, "n,t,bound,exact_lower,cells_per_interval\n8,1.0,0.5,0.25,8\n");
        assert_eq!(SweepResult::from_csv(&csv).unwrap(), sr);
    }

    #[test]
    fn small_amplitude_damping_sweep() {
        let src = PipelineDilation::new(ChannelFamily::semigroup(amplitude_damping_preset()));
        let sr = sweep(&src, &DecouplingSet::pauli(), &SweepConfig::new(1.0, vec![8, 32, 128])).unwrap();
        assert!(sr.bracket_violations(1e-10).is_empty());
        assert!(sr.records[2].bound < sr.records[0].bound);
    }
}
