//! GKLS generators and the CPTP families they induce, in the Schrödinger
//! picture.
//!
//! Superoperators act on column-stacked density matrices:
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`, so `Φ(E_ij)` is column `i + d·j`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::numerics::{
    self, c, hermiticity_defect, identity, kron, pauli, spectral_norm, ComplexMatrix, DensityMatrix, C64, I, ONE,
};
use crate::tolerances;

/// `L*(ρ) = −i[K, ρ] + Σ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lindbladian {
    k: ComplexMatrix,
    jumps: Vec<ComplexMatrix>,
}

impl Lindbladian {
    pub fn new(k: ComplexMatrix, jumps: Vec<ComplexMatrix>) -> Result<Self> {
        let d = k.nrows();
        if !k.is_square() || d == 0 {
            return Err(Error::Dimension(format!("K must be square and non-empty, got {}x{}", k.nrows(), k.ncols())));
        }
        for (idx, l) in jumps.iter().enumerate() {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::Dimension(format!(
                    "jump operator {idx} is {}x{}, expected {d}x{d}",
                    l.nrows(),
                    l.ncols()
                )));
            }
        }
        let defect = hermiticity_defect(&k);
        if defect > 1e-12 * k.norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { k, jumps })
    }

    /// Single-qubit amplitude damping at unit rate: `K = 0`, one jump `σ−`.
    pub fn amplitude_damping() -> Self {
        Self { k: numerics::zeros(2, 2), jumps: vec![pauli::minus()] }
    }

    /// `L = −i[K, ·]`, a unitary group.
    pub fn hamiltonian_only(k: ComplexMatrix) -> Result<Self> {
        Self::new(k, vec![])
    }

    /// The zero generator on `C^d`.
    pub fn identity(d: usize) -> Self {
        Self { k: numerics::zeros(d, d), jumps: vec![] }
    }

    /// A seeded random generator on `C^d` with `jumps` jump operators,
    /// rescaled so the superoperator has spectral norm `scale`.
    pub fn random(d: usize, jumps: usize, scale: f64, seed: u64) -> Result<Self> {
        if d == 0 || !(scale > 0.0) {
            return Err(Error::Dimension(format!("random Lindbladian needs d > 0 and scale > 0, got {d}, {scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entry = |rng: &mut ChaCha8Rng| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a = ComplexMatrix::from_fn(d, d, |_, _| entry(&mut rng));
        let k = numerics::hermitian_part(&a);
        let ls: Vec<ComplexMatrix> = (0..jumps).map(|_| ComplexMatrix::from_fn(d, d, |_, _| entry(&mut rng))).collect();
        let raw = Self { k, jumps: ls };
        let norm = spectral_norm(raw.superoperator().as_matrix());
        if norm == 0.0 {
            return Ok(raw);
        }
        let alpha = scale / norm;
        Ok(Self { k: raw.k * c(alpha, 0.0), jumps: raw.jumps.into_iter().map(|l| l * c(alpha.sqrt(), 0.0)).collect() })
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.k
    }

    pub fn jumps(&self) -> &[ComplexMatrix] {
        &self.jumps
    }

    /// True when some jump operator is not a multiple of the identity.
    pub fn is_dissipative(&self) -> bool {
        let d = self.dim();
        self.jumps.iter().any(|l| {
            let mean = l.trace() / c(d as f64, 0.0);
            (l - identity(d) * mean).norm() > 1e-12
        })
    }

    pub fn superoperator(&self) -> Superoperator {
        build_superoperator(self)
    }
}

/// Matrix of the generator on column-stacked density matrices.
pub fn build_superoperator(l: &Lindbladian) -> Superoperator {
    let d = l.dim();
    let id = identity(d);
    let mut s = (kron(&id, &l.k) - kron(&l.k.transpose(), &id)) * (-I);
    for jump in &l.jumps {
        let ldl = jump.adjoint() * jump;
        s += kron(&jump.conjugate(), jump);
        s -= (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * c(0.5, 0.0);
    }
    Superoperator { d, m: s }
}

/// A linear map on `d×d` matrices as a `d²×d²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    d: usize,
    m: ComplexMatrix,
}

impl Superoperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let n = m.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if !m.is_square() || d * d != n || d == 0 {
            return Err(Error::Dimension(format!("superoperator must be d²×d², got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(Self { d, m })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, m: identity(d * d) }
    }

    /// `ρ ↦ Σ_k M_k ρ M_k†`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let d = kraus.first().map(|m| m.nrows()).ok_or_else(|| Error::Dimension("no Kraus operators".into()))?;
        let mut s = numerics::zeros(d * d, d * d);
        for m in kraus {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension("Kraus operators of mixed dimension".into()));
            }
            s += kron(&m.conjugate(), m);
        }
        Ok(Self { d, m: s })
    }

    /// `ρ ↦ W ρ W†`.
    pub fn conjugation(w: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(w))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.d || rho.ncols() != self.d {
            return Err(Error::Dimension(format!(
                "superoperator on {}x{} applied to {}x{}",
                self.d,
                self.d,
                rho.nrows(),
                rho.ncols()
            )));
        }
        let v = numerics::ComplexVector::from_column_slice(rho.as_slice());
        let out = &self.m * v;
        Ok(ComplexMatrix::from_column_slice(self.d, self.d, out.as_slice()))
    }

    /// `Φ(E_ij)` for the matrix unit `E_ij = |i><j|`.
    pub fn image_of_unit(&self, i: usize, j: usize) -> ComplexMatrix {
        let col = self.m.column(i + self.d * j);
        ComplexMatrix::from_column_slice(self.d, self.d, col.as_slice())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::Dimension(format!("composing maps on C^{} and C^{}", self.d, other.d)));
        }
        Ok(Self { d: self.d, m: &self.m * &other.m })
    }

    /// `exp(t S)`.
    pub fn exp(&self, t: f64) -> Self {
        Self { d: self.d, m: numerics::matrix_exp(&(&self.m * c(t, 0.0))) }
    }

    /// Normalised Choi matrix `(Φ ⊗ id)|Ω><Ω|`, system factor first:
    /// `C[(a,i),(b,j)] = Φ(E_ij)[a,b] / d`.
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.d;
        let inv = c(1.0 / d as f64, 0.0);
        ComplexMatrix::from_fn(d * d, d * d, |r, s| {
            let (a, i) = (r / d, r % d);
            let (b, j) = (s / d, s % d);
            self.m[(a + d * b, i + d * j)] * inv
        })
    }

    /// `max_ij |tr Φ(E_ij) − δ_ij|`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.d;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let tr: C64 = (0..d).map(|a| self.m[(a + d * a, i + d * j)]).sum();
                let want = if i == j { ONE } else { C64::new(0.0, 0.0) };
                worst = worst.max((tr - want).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CptpReport {
    pub is_tp: bool,
    pub tp_defect: f64,
    /// Smallest eigenvalue of the normalised Choi matrix.
    pub choi_min_eig: f64,
}

impl CptpReport {
    pub fn is_cptp(&self) -> bool {
        self.is_tp && self.choi_min_eig >= -tolerances::CPTP
    }
}

pub fn check_cptp(s: &Superoperator) -> Result<CptpReport> {
    let tp_defect = s.trace_defect();
    let choi = s.choi();
    let choi_min_eig = numerics::herm_eig(&numerics::hermitian_part(&choi))?.values[0];
    Ok(CptpReport { is_tp: tp_defect <= tolerances::CPTP, tp_defect, choi_min_eig })
}

type AnalyticRule = Arc<dyn Fn(f64) -> Result<Superoperator> + Send + Sync>;

/// A CPTP family `t ↦ Φ_t*` with `Φ_0* = id`.
#[derive(Clone)]
pub enum ChannelFamily {
    /// `Φ_t* = exp(t L*)`.
    Semigroup { lindbladian: Lindbladian, generator: Superoperator },
    /// A closure assumed analytic in `t`. Analyticity cannot be checked from
    /// samples and is trusted.
    Analytic { dim: usize, rule: AnalyticRule },
    /// Maps known only on a grid; evaluation off the grid fails.
    Sampled { grid: TimeGrid, maps: Vec<Superoperator> },
}

impl fmt::Debug for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Semigroup { lindbladian, .. } => {
                f.debug_struct("Semigroup").field("lindbladian", lindbladian).finish()
            }
            Self::Analytic { dim, .. } => f.debug_struct("Analytic").field("dim", dim).finish_non_exhaustive(),
            Self::Sampled { grid, .. } => {
                f.debug_struct("Sampled").field("points", &grid.len()).finish_non_exhaustive()
            }
        }
    }
}

impl ChannelFamily {
    pub fn semigroup(lindbladian: Lindbladian) -> Self {
        let generator = lindbladian.superoperator();
        Self::Semigroup { lindbladian, generator }
    }

    pub fn analytic(dim: usize, rule: impl Fn(f64) -> Result<Superoperator> + Send + Sync + 'static) -> Self {
        Self::Analytic { dim, rule: Arc::new(rule) }
    }

    /// `Φ_t* = Ad(exp(i t K))`, i.e. `ρ ↦ e^{itK} ρ e^{−itK}`.
    pub fn unitary(k: ComplexMatrix) -> Result<Self> {
        let d = k.nrows();
        let defect = hermiticity_defect(&k);
        if !k.is_square() || defect > 1e-12 * k.norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::analytic(d, move |t| {
            let w = numerics::unitary_exp(&k, -t)?;
            Superoperator::conjugation(w.as_matrix())
        }))
    }

    /// Validates a sampled family: the grid must start at 0 with `Φ_0 = id`,
    /// every map must be CPTP, and dimensions must agree.
    pub fn sampled(grid: TimeGrid, maps: Vec<Superoperator>) -> Result<Self> {
        if grid.len() != maps.len() {
            return Err(Error::Family(format!("{} grid points but {} maps", grid.len(), maps.len())));
        }
        let d = maps[0].dim();
        if (maps[0].as_matrix() - identity(d * d)).norm() > 1e-12 {
            return Err(Error::Family("the map at t = 0 is not the identity".into()));
        }
        for (t, m) in grid.points().iter().zip(&maps) {
            if m.dim() != d {
                return Err(Error::Family(format!("map at t = {t} acts on C^{}, expected C^{d}", m.dim())));
            }
            let report = check_cptp(m)?;
            if !report.is_cptp() {
                return Err(Error::Family(format!(
                    "map at t = {t} is not CPTP (trace defect {:.3e}, Choi minimum {:.3e})",
                    report.tp_defect, report.choi_min_eig
                )));
            }
        }
        let fam = Self::Sampled { grid, maps };
        if let Some(rough) = fam.smoothness_diagnostic() {
            if rough > SMOOTHNESS_WARN {
                log::warn!("sampled channel family looks rough: second-difference bound {rough:.3e}");
            }
        }
        Ok(fam)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Semigroup { lindbladian, .. } => lindbladian.dim(),
            Self::Analytic { dim, .. } => *dim,
            Self::Sampled { maps, .. } => maps[0].dim(),
        }
    }

    pub fn lindbladian(&self) -> Option<&Lindbladian> {
        match self {
            Self::Semigroup { lindbladian, .. } => Some(lindbladian),
            _ => None,
        }
    }

    /// `Φ_t*` as a superoperator.
    pub fn at(&self, t: f64) -> Result<Superoperator> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        match self {
            Self::Semigroup { generator, .. } => Ok(generator.exp(t)),
            Self::Analytic { dim, rule } => {
                let s = rule(t)?;
                if s.dim() != *dim {
                    return Err(Error::Family(format!("rule returned a map on C^{}, expected C^{dim}", s.dim())));
                }
                Ok(s)
            }
            Self::Sampled { grid, maps } => grid
                .index_of(t)
                .map(|i| maps[i].clone())
                .ok_or_else(|| Error::OffGrid { t, reason: "sampled family has no map at this time".into() }),
        }
    }

    /// `max_i ‖Φ_{i+1} − 2Φ_i + Φ_{i−1}‖ / h²` over interior sample points
    /// (divided differences for non-uniform spacing). `None` for fewer than
    /// three samples or non-sampled families.
    pub fn smoothness_diagnostic(&self) -> Option<f64> {
        let Self::Sampled { grid, maps } = self else { return None };
        let t = grid.points();
        if t.len() < 3 {
            return None;
        }
        let mut worst: f64 = 0.0;
        for i in 1..t.len() - 1 {
            let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let d1 = (maps[i + 1].as_matrix() - maps[i].as_matrix()) / c(h1, 0.0);
            let d0 = (maps[i].as_matrix() - maps[i - 1].as_matrix()) / c(h0, 0.0);
            worst = worst.max(2.0 * (d1 - d0).norm() / (h0 + h1));
        }
        Some(worst)
    }
}

const SMOOTHNESS_WARN: f64 = 1e3;

/// `Φ_t*(ρ)`.
pub fn evolve(fam: &ChannelFamily, t: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let s = fam.at(t)?;
    DensityMatrix::new(s.apply(rho.as_matrix())?)
}

pub fn amplitude_damping_preset() -> Lindbladian {
    Lindbladian::amplitude_damping()
}

/// A Lindbladian as written in a config file. Entries are row-major
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladianSpec {
    pub dim: usize,
    #[serde(default)]
    pub hamiltonian: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub jumps: Vec<Vec<[f64; 2]>>,
}

impl LindbladianSpec {
    pub fn build(&self) -> Result<Lindbladian> {
        let d = self.dim;
        let parse = |name: &str, entries: &[[f64; 2]]| -> Result<ComplexMatrix> {
            if entries.len() != d * d {
                return Err(Error::Parse(format!("{name}: expected {} entries, got {}", d * d, entries.len())));
            }
            Ok(ComplexMatrix::from_row_iterator(d, d, entries.iter().map(|&[re, im]| c(re, im))))
        };
        let k = match &self.hamiltonian {
            Some(e) => parse("hamiltonian", e)?,
            None => numerics::zeros(d, d),
        };
        let jumps =
            self.jumps.iter().enumerate().map(|(i, e)| parse(&format!("jumps[{i}]"), e)).collect::<Result<Vec<_>>>()?;
        Lindbladian::new(k, jumps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_matrix, real_matrix, ComplexVector, ZERO};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn ad_closed_form(t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
        let e = (-t).exp();
        let h = (-t / 2.0).exp();
        complex_matrix(
            2,
            2,
            &[rho[(0, 0)] * e, rho[(0, 1)] * h, rho[(1, 0)] * h, rho[(0, 0)] * (1.0 - e) + rho[(1, 1)]],
        )
    }

    fn units(d: usize) -> Vec<ComplexMatrix> {
        let mut out = vec![];
        for i in 0..d {
            for j in 0..d {
                let mut m = numerics::zeros(d, d);
                m[(i, j)] = ONE;
                out.push(m);
            }
        }
        out
    }

    #[test]
    fn zero_generator() {
        assert_eq!(Lindbladian::identity(2).superoperator().as_matrix(), &numerics::zeros(4, 4));
    }

    #[test]
    fn amplitude_damping_generator_on_ground_state() {
        let s = Lindbladian::amplitude_damping().superoperator();
        let out = s.apply(DensityMatrix::basis(2, 0).as_matrix()).unwrap();
        assert_eq!(out, real_matrix(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn hamiltonian_generator_matches_commutator() {
        let k = pauli::z();
        let s = Lindbladian::hamiltonian_only(k.clone()).unwrap().superoperator();
        let plus = ComplexVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let rho = DensityMatrix::pure(&plus).unwrap().into_inner();
        let want = (&k * &rho - &rho * &k) * (-I);
        assert!((s.apply(&rho).unwrap() - &want).norm() < 1e-15);
        // −i[σz, |+><+|] has off-diagonals ∓i
        assert!((want - complex_matrix(2, 2, &[ZERO, -I, I, ZERO])).norm() < 1e-15);
    }

    #[test]
    fn generator_matches_definition_on_basis() {
        let l = Lindbladian::random(3, 2, 1.5, 9).unwrap();
        let s = l.superoperator();
        for e in units(3) {
            let mut want = (l.hamiltonian() * &e - &e * l.hamiltonian()) * (-I);
            for j in l.jumps() {
                let ldl = j.adjoint() * j;
                want += j * &e * j.adjoint() - (&ldl * &e + &e * &ldl) * c(0.5, 0.0);
            }
            assert!((s.apply(&e).unwrap() - want).norm() < 1e-13);
        }
        assert_abs_diff_eq!(spectral_norm(s.as_matrix()), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn evolve_amplitude_damping_closed_form() {
        let fam = ChannelFamily::semigroup(amplitude_damping_preset());
        let out = evolve(&fam, 1.0, &DensityMatrix::basis(2, 0)).unwrap();
        let e = (-1f64).exp();
        assert!((out.as_matrix() - real_matrix(2, 2, &[e, 0.0, 0.0, 1.0 - e])).norm() < 1e-12);

        let plus = ComplexVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let out = evolve(&fam, 1.0, &DensityMatrix::pure(&plus).unwrap()).unwrap();
        assert_abs_diff_eq!(out.as_matrix()[(0, 1)].re, (-0.5f64).exp() / 2.0, epsilon = 1e-12);

        for t in [0.0, 0.3, 1.0, 2.5] {
            let s = fam.at(t).unwrap();
            for e in units(2) {
                assert!((s.apply(&e).unwrap() - ad_closed_form(t, &e)).norm() < 1e-12);
            }
        }

        let rho = DensityMatrix::pure(&plus).unwrap();
        assert_eq!(evolve(&fam, 0.0, &rho).unwrap(), rho);
        assert!(matches!(evolve(&fam, -1.0, &rho), Err(Error::NegativeTime(_))));

        let t = 20.0;
        let late = evolve(&fam, t, &rho).unwrap();
        assert!((late.as_matrix() - DensityMatrix::basis(2, 1).as_matrix()).norm() <= (-t / 2.0).exp());
    }

    #[test]
    fn cptp_reports() {
        let r = check_cptp(&Superoperator::identity(2)).unwrap();
        assert!(r.is_tp);
        assert_abs_diff_eq!(r.choi_min_eig, 0.0, epsilon = 1e-12);

        let ad = ChannelFamily::semigroup(amplitude_damping_preset()).at(1.0).unwrap();
        let r = check_cptp(&ad).unwrap();
        assert!(r.is_tp && r.choi_min_eig >= -1e-10);

        let e = (-1f64).exp();
        let k0 = real_matrix(2, 2, &[1.0, 0.0, 0.0, e.sqrt()]);
        let r = check_cptp(&Superoperator::from_kraus(&[k0]).unwrap()).unwrap();
        assert!(!r.is_tp);
    }

    #[test]
    fn choi_of_identity_is_omega_projector() {
        let choi = Superoperator::identity(2).choi();
        let mut want = numerics::zeros(4, 4);
        for (r, s) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            want[(r, s)] = c(0.5, 0.0);
        }
        assert_eq!(choi, want);
    }

    #[test]
    fn sampled_family_rules() {
        let fam = ChannelFamily::semigroup(amplitude_damping_preset());
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let maps = grid.points().iter().map(|&t| fam.at(t).unwrap()).collect();
        let sampled = ChannelFamily::sampled(grid, maps).unwrap();
        assert!(sampled.at(0.5).is_ok());
        assert!(matches!(sampled.at(0.55), Err(Error::OffGrid { .. })));
        assert!(sampled.smoothness_diagnostic().unwrap() < 2.0);

        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let bad = [Superoperator::identity(2), Superoperator::identity(2).exp(2.0)];
        let bad = vec![bad[0].clone(), Superoperator::new(bad[1].as_matrix() * c(2.0, 0.0)).unwrap()];
        assert!(ChannelFamily::sampled(grid, bad).is_err());
    }

    #[test]
    fn unitary_family_conjugates() {
        let fam = ChannelFamily::unitary(pauli::z()).unwrap();
        let t = 0.7;
        let w = numerics::unitary_exp(&pauli::z(), -t).unwrap().into_inner();
        for e in units(2) {
            let want = &w * &e * w.adjoint();
            assert!((fam.at(t).unwrap().apply(&e).unwrap() - want).norm() < 1e-14);
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec: LindbladianSpec =
            serde_json::from_str(r#"{"dim": 2, "jumps": [[[0,0],[0,0],[1,0],[0,0]]]}"#).unwrap();
        assert_eq!(spec.build().unwrap(), Lindbladian::amplitude_damping());
        let bad: LindbladianSpec = serde_json::from_str(r#"{"dim": 2, "hamiltonian": [[0,0]]}"#).unwrap();
        assert!(bad.build().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn semigroup_law(seed in any::<u64>(), s in 0.0f64..5.0, t in 0.0f64..5.0) {
            let fam = ChannelFamily::semigroup(Lindbladian::random(2, 2, 2.0, seed).unwrap());
            let lhs = fam.at(s + t).unwrap();
            let rhs = fam.at(s).unwrap().compose(&fam.at(t).unwrap()).unwrap();
            prop_assert!((lhs.as_matrix() - rhs.as_matrix()).norm() <= 1e-9);
        }

        #[test]
        fn generator_is_traceless(seed in any::<u64>(), d in 1usize..=4) {
            let l = Lindbladian::random(d, 2, 1.0, seed).unwrap();
            let s = l.superoperator();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let a = ComplexMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let rho = &a * a.adjoint();
            prop_assert!(s.apply(&rho).unwrap().trace().norm() <= 1e-12);
        }

        #[test]
        fn choi_spectrum_in_unit_interval(seed in any::<u64>(), t in 0.0f64..5.0) {
            let fam = ChannelFamily::semigroup(Lindbladian::random(2, 2, 2.0, seed).unwrap());
            let e = numerics::herm_eig(&numerics::hermitian_part(&fam.at(t).unwrap().choi())).unwrap();
            prop_assert!(e.values.iter().all(|&x| (-1e-10..=1.0 + 1e-10).contains(&x)));
            prop_assert!((e.values.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn hermiticity_preserved(seed in any::<u64>(), t in 0.0f64..5.0) {
            let fam = ChannelFamily::semigroup(Lindbladian::random(3, 2, 2.0, seed).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let a = ComplexMatrix::from_fn(3, 3, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let h = numerics::hermitian_part(&a);
            let out = fam.at(t).unwrap().apply(&h).unwrap();
            prop_assert!(hermiticity_defect(&out) <= 1e-12);
        }
    }
}
