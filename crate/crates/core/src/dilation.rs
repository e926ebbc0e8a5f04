//! Non-autonomous unitary dilation `U(t,0)` on `H₁ ⊗ H₀`, its generator
//! `H(t)`, the clock reduction, and the closed-form amplitude-damping
//! dilation.
//!
//! Bath first: basis index `k·d₀ + a` is `e_k ⊗ u_a`, and the initial bath
//! state is `μ̂ = |e₁><e₁|`, stored at `k = 0`.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelFamily;
use crate::choi_kraus::{self, KrausFamily, SpectralPath, TrackingOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::numerics::{
    self, c, hermitian_part, identity, io::MatrixRecord, orthonormalize_with_threshold, partial_trace, trace_norm,
    unitarity_defect, ComplexMatrix, Subsystem, UnitaryMatrix, C64, I,
};
use crate::tolerances::{self, Tolerances};

/// Orthonormal columns `Σ_k e_k ⊗ M_k(t_i) u_j`, `j < d₀`, per grid point.
pub fn build_columns(kf: &KrausFamily) -> Result<Vec<ComplexMatrix>> {
    let (d0, d1) = (kf.d0(), kf.d1());
    kf.grid()
        .points()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let ops = kf.at_index(i);
            let cols = ComplexMatrix::from_fn(d0 * d1, d0, |r, j| ops[r / d0][(r % d0, j)]);
            let residual = (cols.adjoint() * &cols - identity(d0)).norm();
            if residual > tolerances::COLUMNS_FAIL {
                return Err(Error::ColumnOrthonormality { t, residual });
            }
            Ok(cols)
        })
        .collect()
}

/// How the completing columns at a grid point were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameEvent {
    /// `t = 0`: standard completion `e_k ⊗ u_j`, `k ≥ 1`.
    Initial,
    /// Gram-Schmidt of the previous completion against the new columns.
    Transported,
    /// The previous completion degenerated; re-seeded from the standard
    /// basis and aligned to it.
    Reseeded,
    /// Supplied in closed form.
    Analytic,
}

/// `U(t_i, 0)` on a grid, with `U(0,0) = 1`.
#[derive(Debug, Clone)]
pub struct PropagatorGrid {
    grid: TimeGrid,
    d0: usize,
    d1: usize,
    unitaries: Vec<UnitaryMatrix>,
    ledger: Vec<FrameEvent>,
}

/// Completes the Kraus columns to unitaries along the grid.
pub fn complete_frame(grid: &TimeGrid, d0: usize, columns: &[ComplexMatrix]) -> Result<PropagatorGrid> {
    complete_frame_with(grid, d0, columns, tolerances::GRAM_RESEED)
}

pub fn complete_frame_with(
    grid: &TimeGrid,
    d0: usize,
    columns: &[ComplexMatrix],
    gram_threshold: f64,
) -> Result<PropagatorGrid> {
    if columns.len() != grid.len() {
        return Err(Error::Dimension(format!("{} column sets for {} grid points", columns.len(), grid.len())));
    }
    let d = columns[0].nrows();
    if !d.is_multiple_of(d0) || columns.iter().any(|c| c.nrows() != d || c.ncols() != d0) {
        return Err(Error::Dimension(format!("columns must be {d}x{d0} with {d0} dividing {d}")));
    }
    let d1 = d / d0;
    let id = identity(d);
    let standard = id.columns(d0, d - d0).into_owned();
    let mut unitaries = Vec::with_capacity(grid.len());
    let mut ledger = Vec::with_capacity(grid.len());

    let u0 = orthonormalize_with_threshold(&columns[0], &standard, gram_threshold)?;
    if (u0.as_matrix() - &id).norm() <= 1e-12 {
        unitaries.push(UnitaryMatrix::identity(d));
    } else {
        unitaries.push(u0);
    }
    ledger.push(FrameEvent::Initial);

    for (i, cols) in columns.iter().enumerate().skip(1) {
        let prev = unitaries[i - 1].as_matrix().columns(d0, d - d0).into_owned();
        match orthonormalize_with_threshold(cols, &prev, gram_threshold) {
            Ok(u) => {
                unitaries.push(u);
                ledger.push(FrameEvent::Transported);
            }
            Err(Error::RankDeficient { gram_det }) => {
                log::info!("frame re-seeded at t = {} (Gram determinant {gram_det:.3e})", grid.points()[i]);
                unitaries.push(reseed(cols, &prev)?);
                ledger.push(FrameEvent::Reseeded);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PropagatorGrid { grid: grid.clone(), d0, d1, unitaries, ledger })
}

/// Pivoted Gram-Schmidt over the standard basis, then the orthogonal
/// Procrustes rotation of the completion closest to `prev`.
fn reseed(cols: &ComplexMatrix, prev: &ComplexMatrix) -> Result<UnitaryMatrix> {
    let d = cols.nrows();
    let m = cols.ncols();
    let mut basis: Vec<numerics::ComplexVector> = (0..m).map(|j| cols.column(j).into_owned()).collect();
    let mut used = vec![false; d];
    let mut completion = vec![];
    let mut gram_det = 1.0;
    for _ in m..d {
        let mut best: Option<(usize, numerics::ComplexVector, f64)> = None;
        for (e, flag) in used.iter().enumerate() {
            if *flag {
                continue;
            }
            let mut v = numerics::ComplexVector::zeros(d);
            v[e] = c(1.0, 0.0);
            for _ in 0..2 {
                for q in &basis {
                    let p = q.dotc(&v);
                    v -= q * p;
                }
            }
            let r = v.norm();
            if best.as_ref().is_none_or(|b| r > b.2) {
                best = Some((e, v, r));
            }
        }
        let (e, v, r) = best.expect("unused basis vectors remain");
        gram_det *= r * r;
        if gram_det < tolerances::GRAM_RESEED {
            return Err(Error::RankDeficient { gram_det });
        }
        used[e] = true;
        let q = v / c(r, 0.0);
        basis.push(q.clone());
        completion.push(q);
    }
    let cn = ComplexMatrix::from_columns(&completion);
    let svd = (prev.adjoint() * &cn).svd(true, true);
    let (u, w) = (svd.u.expect("U"), svd.v_t.expect("V^T").adjoint());
    let aligned = cn * w * u.adjoint();
    let mut out = numerics::zeros(d, d);
    out.columns_mut(0, m).copy_from(cols);
    out.columns_mut(m, d - m).copy_from(&aligned);
    Ok(UnitaryMatrix::new_unchecked(out))
}

impl PropagatorGrid {
    /// A grid of closed-form unitaries; `f(0)` must be the identity.
    pub fn from_fn(grid: &TimeGrid, d0: usize, f: impl Fn(f64) -> Result<UnitaryMatrix>) -> Result<Self> {
        let unitaries: Vec<UnitaryMatrix> = grid.points().iter().map(|&t| f(t)).collect::<Result<_>>()?;
        let d = unitaries[0].dim();
        if !d.is_multiple_of(d0) || unitaries.iter().any(|u| u.dim() != d) {
            return Err(Error::Dimension(format!("unitaries must all be square of a size divisible by {d0}")));
        }
        if (unitaries[0].as_matrix() - identity(d)).norm() > 1e-12 {
            return Err(Error::Family("U(0,0) is not the identity".into()));
        }
        Ok(Self { grid: grid.clone(), d0, d1: d / d0, unitaries, ledger: vec![FrameEvent::Analytic; grid.len()] })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn system_dim(&self) -> usize {
        self.d0
    }

    pub fn bath_dim(&self) -> usize {
        self.d1
    }

    pub fn dim(&self) -> usize {
        self.d0 * self.d1
    }

    /// `U(t_i, 0)`.
    pub fn at_index(&self, i: usize) -> &UnitaryMatrix {
        &self.unitaries[i]
    }

    pub fn frame_ledger(&self) -> &[FrameEvent] {
        &self.ledger
    }

    pub fn reseed_count(&self) -> usize {
        self.ledger.iter().filter(|e| **e == FrameEvent::Reseeded).count()
    }

    /// `max_i ‖U(t_i,0)†U(t_i,0) − 1‖`.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitaries.iter().map(|u| unitarity_defect(u.as_matrix())).fold(0.0, f64::max)
    }

    /// `U(t, 0)` for any real `t`, using `U(t,0) = U(−t,0)†` for `t < 0`;
    /// snaps to the nearest grid point and returns the snap distance.
    fn at_time(&self, t: f64) -> Result<(UnitaryMatrix, f64)> {
        let tau = t.abs();
        let span = self.grid.t_max();
        if tau > span * (1.0 + 1e-12) {
            return Err(Error::OffGrid { t, reason: format!("grid covers |t| <= {span}") });
        }
        let (i, dist) = self.grid.nearest(tau);
        let u = &self.unitaries[i];
        Ok((if t < 0.0 { u.adjoint() } else { u.clone() }, dist))
    }

    /// `U(t, s) = U(t,0) U(s,0)†` together with the larger snap distance.
    pub fn propagator_with_snap(&self, t: f64, s: f64) -> Result<(UnitaryMatrix, f64)> {
        let (ut, dt) = self.at_time(t)?;
        let (us, ds) = self.at_time(s)?;
        Ok((&ut * &us.adjoint(), dt.max(ds)))
    }

    /// `U(t, s)`; off-grid times snap to the nearest grid point.
    pub fn propagator(&self, t: f64, s: f64) -> Result<UnitaryMatrix> {
        let (u, snap) = self.propagator_with_snap(t, s)?;
        if snap > 1e-12 * self.grid.t_max().max(1.0) {
            log::warn!("propagator({t}, {s}) snapped by {snap:.3e}");
        }
        Ok(u)
    }

    /// `H(t) = i (dU(t,0)/dt) U(t,0)†` by a three-point difference on the
    /// (possibly non-uniform) grid, Hermitised.
    pub fn hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix> {
        if t <= 0.0 {
            return Err(Error::OffGrid { t, reason: "H(t) is defined for t > 0 only".into() });
        }
        let (i, _) = self.grid.nearest(t);
        if i == 0 {
            return Err(Error::OffGrid { t, reason: "below the first grid point".into() });
        }
        Ok(self.hamiltonian_at_index(i))
    }

    pub fn hamiltonian_at_index(&self, i: usize) -> ComplexMatrix {
        assert!(i > 0, "H(t) is undefined at t = 0");
        let t = self.grid.points();
        let u = |j: usize| self.unitaries[j].as_matrix();
        let deriv = if i + 1 < t.len() {
            let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            u(i - 1) * c(-h1 / (h0 * (h0 + h1)), 0.0)
                + u(i) * c((h1 - h0) / (h0 * h1), 0.0)
                + u(i + 1) * c(h0 / (h1 * (h0 + h1)), 0.0)
        } else {
            (u(i) - u(i - 1)) / c(t[i] - t[i - 1], 0.0)
        };
        hermitian_part(&(deriv * u(i).adjoint() * I))
    }

    /// `H(t_i)` for every grid point, `None` at `t = 0`.
    pub fn hamiltonians(&self) -> Vec<Option<ComplexMatrix>> {
        (0..self.grid.len()).map(|i| (i > 0).then(|| self.hamiltonian_at_index(i))).collect()
    }

    /// Hermitian `G_i` with `U(t_{i+1},0) U(t_i,0)† = exp(−i G_i)`.
    pub fn cell_generators(&self) -> Result<Vec<ComplexMatrix>> {
        let t = self.grid.points();
        (0..t.len() - 1)
            .map(|i| {
                let step = self.unitaries[i + 1].as_matrix() * self.unitaries[i].as_matrix().adjoint();
                numerics::hermitian_generator(&step).map_err(|phase| Error::GridTooCoarse { t: t[i], phase })
            })
            .collect()
    }

    /// `tr_e[U (μ̂ ⊗ E_ij) U†]` at grid index `i`.
    pub fn reduced_unit(&self, idx: usize, i: usize, j: usize) -> Result<ComplexMatrix> {
        let u = self.unitaries[idx].as_matrix();
        let x = u.column(i) * u.column(j).adjoint();
        partial_trace(&x, Subsystem::A, (self.d1, self.d0))
    }

    /// `max ‖tr_e[U(t,0)(μ̂⊗E_ij)U(t,0)†] − Φ_t*(E_ij)‖₁` over the grid and
    /// all matrix units.
    pub fn dilation_residual(&self, fam: &ChannelFamily) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (idx, &t) in self.grid.points().iter().enumerate() {
            let phi = fam.at(t)?;
            for i in 0..self.d0 {
                for j in 0..self.d0 {
                    let diff = self.reduced_unit(idx, i, j)? - phi.image_of_unit(i, j);
                    worst = worst.max(trace_norm(&diff));
                }
            }
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<String> {
        let bundle = Bundle {
            system_dim: self.d0,
            bath_dim: self.d1,
            grid: self.grid.points().to_vec(),
            frame_ledger: self.ledger.clone(),
            unitaries: self.unitaries.iter().map(|u| MatrixRecord::from(u.as_matrix())).collect(),
        };
        Ok(serde_json::to_string(&bundle)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: Bundle = serde_json::from_str(s)?;
        let grid = TimeGrid::new(b.grid)?;
        if b.unitaries.len() != grid.len() || b.frame_ledger.len() != grid.len() {
            return Err(Error::Parse("bundle lengths disagree with the grid".into()));
        }
        let d = b.system_dim * b.bath_dim;
        let unitaries = b
            .unitaries
            .iter()
            .map(|r| {
                let m = ComplexMatrix::try_from(r)?;
                if m.nrows() != d {
                    return Err(Error::Dimension(format!(
                        "bundle unitary is {}x{}, expected {d}x{d}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                UnitaryMatrix::new(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, d0: b.system_dim, d1: b.bath_dim, unitaries, ledger: b.frame_ledger })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Bundle {
    system_dim: usize,
    bath_dim: usize,
    grid: Vec<f64>,
    frame_ledger: Vec<FrameEvent>,
    unitaries: Vec<MatrixRecord>,
}

/// Reduction of the clock-extended dynamics with the clock started in the
/// point-localised state at `x = 0`: `(Û(t)ξ)(x) = U(x, x−t) ξ(x−t)`
/// evaluated at `x = t` leaves `U(t, 0)` on `H₁ ⊗ H₀`.
pub fn clock_reduce(pg: &PropagatorGrid, t: f64) -> Result<UnitaryMatrix> {
    pg.propagator(t, 0.0)
}

/// Everything built on the way from a channel family to its dilation.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub path: SpectralPath,
    pub kraus: KrausFamily,
    pub propagators: PropagatorGrid,
}

/// Choi tracking, Kraus assembly and frame completion on `grid`.
pub fn dilate(fam: &ChannelFamily, grid: &TimeGrid, tol: &Tolerances) -> Result<Dilation> {
    let opts = TrackingOptions::from(tol);
    let (path, kraus) = choi_kraus::kraus_pipeline(fam, grid, &opts)?;
    let columns = build_columns(&kraus)?;
    let propagators = complete_frame_with(path.grid(), path.d0(), &columns, tol.gram_reseed)?;
    Ok(Dilation { path, kraus, propagators })
}

/// Anything that can produce a propagator grid on demand.
pub trait DilationSource: Sync {
    fn system_dim(&self) -> usize;
    fn build(&self, grid: &TimeGrid) -> Result<PropagatorGrid>;
    fn label(&self) -> String;
}

/// The Choi/Kraus/frame-completion pipeline on a channel family.
#[derive(Debug, Clone)]
pub struct PipelineDilation {
    pub family: ChannelFamily,
    pub tolerances: Tolerances,
}

impl PipelineDilation {
    pub fn new(family: ChannelFamily) -> Self {
        Self { family, tolerances: Tolerances::default() }
    }
}

impl DilationSource for PipelineDilation {
    fn system_dim(&self) -> usize {
        self.family.dim()
    }

    fn build(&self, grid: &TimeGrid) -> Result<PropagatorGrid> {
        Ok(dilate(&self.family, grid, &self.tolerances)?.propagators)
    }

    fn label(&self) -> String {
        "pipeline".into()
    }
}

/// The closed-form two-qubit dilation of amplitude damping.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyticAdDilation;

impl DilationSource for AnalyticAdDilation {
    fn system_dim(&self) -> usize {
        2
    }

    fn build(&self, grid: &TimeGrid) -> Result<PropagatorGrid> {
        PropagatorGrid::from_fn(grid, 2, analytic_ad::unitary)
    }

    fn label(&self) -> String {
        "analytic-ad".into()
    }
}

/// `U(t) = exp(−i G(t) H_{1↔2})` with `g(t) = 1 / (2√(e^{|t|} − 1))` and
/// `G(t) = ∫₀ᵗ g`, dilating unit-rate amplitude damping with the bath in
/// `|1>`.
pub mod analytic_ad {
    use super::*;
    use crate::numerics::quad;

    pub fn g(t: f64) -> f64 {
        0.5 / t.abs().exp_m1().sqrt()
    }

    /// `G(t)` by adaptive quadrature after `s = u²`, which turns the
    /// `s^{-1/2}` endpoint singularity into the smooth `u / √(e^{u²} − 1)`.
    pub fn big_g(t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let integrand = |u: f64| {
            let x = u * u;
            if x < 1e-300 {
                1.0
            } else {
                u / x.exp_m1().sqrt()
            }
        };
        quad::integrate(integrand, 0.0, t.sqrt(), 1e-15, 1e-15)
    }

    /// `arctan √(e^t − 1)`, the closed form of `G`.
    pub fn big_g_closed_form(t: f64) -> f64 {
        t.exp_m1().sqrt().atan()
    }

    /// `σ+ ⊗ σ− + σ− ⊗ σ+`.
    pub fn h12() -> ComplexMatrix {
        numerics::kron(&numerics::pauli::plus(), &numerics::pauli::minus())
            + numerics::kron(&numerics::pauli::minus(), &numerics::pauli::plus())
    }

    /// `U(t)` in the system-first ordering of the closed form.
    pub fn unitary_system_first(t: f64) -> Result<UnitaryMatrix> {
        numerics::unitary_exp(&h12(), big_g(t)?)
    }

    /// Bath-first reordering with the bath state `|1>` relabelled as `e₁`.
    fn to_bath_first(m: &ComplexMatrix) -> ComplexMatrix {
        // swap the factors, then exchange the bath labels 0 ↔ 1
        let swap = ComplexMatrix::from_fn(4, 4, |r, s| {
            if r == (s % 2) * 2 + s / 2 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let relabel = numerics::kron(&numerics::pauli::x(), &identity(2));
        let p = relabel * swap;
        &p * m * p.adjoint()
    }

    /// `U(t, 0)` on `H₁ ⊗ H₀` in this crate's ordering.
    pub fn unitary(t: f64) -> Result<UnitaryMatrix> {
        let u = unitary_system_first(t)?;
        Ok(UnitaryMatrix::new_unchecked(to_bath_first(u.as_matrix())))
    }

    /// `H(t) = g(t) H_{1↔2}` in this crate's ordering.
    pub fn hamiltonian(t: f64) -> ComplexMatrix {
        to_bath_first(&h12()) * c(g(t), 0.0)
    }
}
