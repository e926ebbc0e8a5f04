//! Choi matrices along a time grid, continuously tracked eigenpaths, signed
//! square-root branches and the Kraus family built from them.
//!
//! `M_k(t)[a, i] = √d₀ · s_k(t) · v_k(t)[a·d₀ + i]` where `s_k² = λ_k` and
//! `(λ_k, v_k)` are eigenpairs of the normalised Choi matrix.

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelFamily, Superoperator};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::numerics::{self, c, herm_eig, trace_norm, ComplexMatrix, ComplexVector};
use crate::tolerances::{self, Tolerances};

/// `(Φ_t* ⊗ id)|Ω><Ω|` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub t: f64,
    pub matrix: ComplexMatrix,
}

/// Maximally entangled `Ω = d^{-1/2} Σ_j u_j ⊗ u_j`.
pub fn omega(d0: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d0 * d0);
    let amp = c(1.0 / (d0 as f64).sqrt(), 0.0);
    for j in 0..d0 {
        v[j * d0 + j] = amp;
    }
    v
}

pub fn choi_at(fam: &ChannelFamily, t: f64) -> Result<ChoiMatrix> {
    let s = fam.at(t)?;
    Ok(ChoiMatrix { t, matrix: numerics::hermitian_part(&s.choi()) })
}

/// Knobs for [`track_spectrum_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingOptions {
    pub degeneracy: f64,
    pub match_ambiguity: f64,
    pub zero_eigenvalue: f64,
    /// Gap below which two shrinking paths count as a near crossing.
    pub near_crossing_gap: f64,
    /// Bisection levels per grid cell.
    pub max_refinements: usize,
}

impl Default for TrackingOptions {
    fn default() -> Self {
        Self::from(&Tolerances::default())
    }
}

impl From<&Tolerances> for TrackingOptions {
    fn from(t: &Tolerances) -> Self {
        Self {
            degeneracy: t.degeneracy,
            match_ambiguity: t.match_ambiguity,
            zero_eigenvalue: t.zero_eigenvalue,
            near_crossing_gap: 1e-4,
            max_refinements: 2,
        }
    }
}

/// Choi eigenpaths `(λ_k(t_i), v_k(t_i))` for the `d₁` paths that are not
/// identically zero. Path 0 starts at `Ω`.
#[derive(Debug, Clone)]
pub struct SpectralPath {
    grid: TimeGrid,
    d0: usize,
    /// `values[k][i]`.
    values: Vec<Vec<f64>>,
    /// `vectors[i]` holds `v_k(t_i)` as column `k`.
    vectors: Vec<ComplexMatrix>,
    /// Choi matrix at each grid point, when known.
    choi: Option<Vec<ComplexMatrix>>,
    min_margin: f64,
    inserted_points: usize,
    max_residual: f64,
}

impl SpectralPath {
    /// Assembles a path from precomputed data (no Choi matrices attached).
    pub fn from_parts(grid: TimeGrid, d0: usize, values: Vec<Vec<f64>>, vectors: Vec<ComplexMatrix>) -> Result<Self> {
        let n = grid.len();
        let d1 = values.len();
        if vectors.len() != n || values.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("path data does not match the grid length".into()));
        }
        if vectors.iter().any(|m| m.nrows() != d0 * d0 || m.ncols() != d1) {
            return Err(Error::Dimension(format!("eigenvectors must be {}x{d1}", d0 * d0)));
        }
        Ok(Self {
            grid,
            d0,
            values,
            vectors,
            choi: None,
            min_margin: f64::INFINITY,
            inserted_points: 0,
            max_residual: 0.0,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn d0(&self) -> usize {
        self.d0
    }

    /// Number of retained paths.
    pub fn d1(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn vector(&self, k: usize, i: usize) -> ComplexVector {
        self.vectors[i].column(k).into_owned()
    }

    pub fn vectors_at(&self, i: usize) -> &ComplexMatrix {
        &self.vectors[i]
    }

    pub fn choi_at_index(&self, i: usize) -> Option<&ComplexMatrix> {
        self.choi.as_ref().map(|c| &c[i])
    }

    /// Smallest matching margin seen; `∞` when every step was unambiguous
    /// by structure (single path or only degenerate blocks).
    pub fn matching_margin(&self) -> f64 {
        self.min_margin
    }

    /// Grid points added by local bisection.
    pub fn inserted_points(&self) -> usize {
        self.inserted_points
    }

    /// `max ‖C v_k − λ_k v_k‖` over retained paths and grid points.
    pub fn eigen_residual(&self) -> f64 {
        self.max_residual
    }
}

pub fn track_spectrum(fam: &ChannelFamily, grid: &TimeGrid) -> Result<SpectralPath> {
    track_spectrum_with(fam, grid, &TrackingOptions::default())
}

struct Point {
    t: f64,
    choi: ComplexMatrix,
    values: Vec<f64>,
    vectors: ComplexMatrix,
}

struct Step {
    values: Vec<f64>,
    vectors: ComplexMatrix,
    backfill: Vec<(Vec<usize>, ComplexMatrix)>,
    margin: f64,
    near_crossing: bool,
}

/// Tracks all `d₀²` Choi eigenpaths along `grid` and keeps the `d₁` that
/// are not identically below the zero threshold.
///
/// Adjacent points are matched by a maximum-overlap assignment on
/// `|<v_k(t_i), v_l(t_{i+1})>|²`. Degenerate blocks are aligned as a whole
/// (orthogonal Procrustes), and a block that splits rotates its earlier
/// vectors onto the limits of the split paths. Ambiguous or near-crossing
/// cells are bisected up to `max_refinements` levels; ambiguity that
/// survives is an error.
pub fn track_spectrum_with(fam: &ChannelFamily, grid: &TimeGrid, opts: &TrackingOptions) -> Result<SpectralPath> {
    let d0 = fam.dim();
    let n = d0 * d0;
    let first = initial_point(fam, opts)?;
    let mut history = vec![first];
    let mut min_margin = f64::INFINITY;
    let mut inserted = 0usize;

    for &target in &grid.points()[1..] {
        let mut pending = vec![(target, 0usize)];
        while let Some((tb, depth)) = pending.pop() {
            let prev = history.last().expect("history starts non-empty");
            let choi = choi_at(fam, tb)?.matrix;
            let step = advance(prev, &choi, opts)?;
            let ambiguous = step.margin < opts.match_ambiguity;
            if (ambiguous || step.near_crossing) && depth < opts.max_refinements {
                let mid = 0.5 * (prev.t + tb);
                if mid > prev.t && mid < tb {
                    log::debug!("refining cell [{}, {tb}] (margin {:.3e})", prev.t, step.margin);
                    pending.push((tb, depth + 1));
                    pending.push((mid, depth + 1));
                    continue;
                }
            }
            if ambiguous {
                return Err(Error::AmbiguousMatching { t: tb, margin: step.margin });
            }
            min_margin = min_margin.min(step.margin);
            for (paths, q) in &step.backfill {
                backfill(&mut history, paths, q, opts.degeneracy);
            }
            if tb != target {
                inserted += 1;
            }
            history.push(Point { t: tb, choi, values: step.values, vectors: step.vectors });
        }
    }

    // Retain paths that are not identically zero; Ω path first, then by mean.
    let keep: Vec<usize> = {
        let mut others: Vec<(usize, f64)> = (1..n)
            .filter(|&k| history.iter().any(|p| p.values[k] > opts.zero_eigenvalue))
            .map(|k| (k, history.iter().map(|p| p.values[k]).sum::<f64>() / history.len() as f64))
            .collect();
        others.sort_by(|a, b| b.1.total_cmp(&a.1));
        std::iter::once(0).chain(others.into_iter().map(|(k, _)| k)).collect()
    };
    let points: Vec<f64> = history.iter().map(|p| p.t).collect();
    let values: Vec<Vec<f64>> = keep.iter().map(|&k| history.iter().map(|p| p.values[k]).collect()).collect();
    let mut max_residual: f64 = 0.0;
    let mut vectors = Vec::with_capacity(history.len());
    let mut chois = Vec::with_capacity(history.len());
    for p in history {
        let cols: Vec<ComplexVector> = keep.iter().map(|&k| p.vectors.column(k).into_owned()).collect();
        for (&k, v) in keep.iter().zip(&cols) {
            let r = (&p.choi * v - v * c(p.values[k], 0.0)).norm();
            max_residual = max_residual.max(r);
        }
        vectors.push(ComplexMatrix::from_columns(&cols));
        chois.push(p.choi);
    }
    if max_residual > tolerances::SPECTRAL {
        log::warn!("Choi eigen-equation residual {max_residual:.3e} exceeds {:.1e}", tolerances::SPECTRAL);
    }
    Ok(SpectralPath {
        grid: TimeGrid::new(points)?,
        d0,
        values,
        vectors,
        choi: Some(chois),
        min_margin,
        inserted_points: inserted,
        max_residual,
    })
}

fn initial_point(fam: &ChannelFamily, opts: &TrackingOptions) -> Result<Point> {
    let d0 = fam.dim();
    let n = d0 * d0;
    let choi = choi_at(fam, 0.0)?.matrix;
    let e = herm_eig(&choi)?;
    let top = e.values[n - 1];
    if (top - 1.0).abs() > tolerances::SPECTRAL || (n > 1 && e.values[n - 2] > opts.zero_eigenvalue) {
        return Err(Error::Family(format!("Φ_0 is not the identity (Choi spectrum top {top})")));
    }
    // Path 0 is Ω exactly; the rest span its orthogonal complement.
    let om = omega(d0);
    let mut cols = vec![om.clone()];
    for k in 0..n - 1 {
        let mut v = e.vector(k);
        for q in &cols {
            let p = q.dotc(&v);
            v -= q * p;
        }
        let norm = v.norm();
        cols.push(v / c(norm, 0.0));
    }
    let mut values = vec![top];
    values.extend_from_slice(&e.values[..n - 1]);
    Ok(Point { t: 0.0, choi, values, vectors: ComplexMatrix::from_columns(&cols) })
}

/// Runs of indices (in `order`) whose values differ by at most `tol`
/// between neighbours.
fn clusters(values: &[f64], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut id = vec![0; values.len()];
    let mut current = 0;
    for w in 0..order.len() {
        if w > 0 && values[order[w]] - values[order[w - 1]] > tol {
            current += 1;
        }
        id[order[w]] = current;
    }
    id
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Polar factors of `B = A†N`: returns `(U, W)` with `B = U Σ W†`.
fn svd_factors(b: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let svd = b.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let w = svd.v_t.expect("requested V^T").adjoint();
    (u, w)
}

fn advance(prev: &Point, choi: &ComplexMatrix, opts: &TrackingOptions) -> Result<Step> {
    let n = prev.values.len();
    let eig = herm_eig(choi)?;
    let overlap_amp = prev.vectors.adjoint() * &eig.vectors;
    let weights: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|l| overlap_amp[(k, l)].norm_sqr()).collect()).collect();
    let assign = max_weight_assignment(&weights);

    let prev_cluster = clusters(&prev.values, opts.degeneracy);
    let new_cluster = clusters(&eig.values, opts.degeneracy);

    // Group paths connected through a shared previous or new cluster.
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            if prev_cluster[a] == prev_cluster[b] || new_cluster[assign[a]] == new_cluster[assign[b]] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![];
    let mut root_of = vec![usize::MAX; n];
    for k in 0..n {
        let r = find(&mut parent, k);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(vec![]);
        }
        groups[root_of[r]].push(k);
    }

    let mut values = vec![0.0; n];
    let mut vectors = numerics::zeros(n, n);
    let mut backfill = vec![];
    let mut margin = f64::INFINITY;

    for group in &groups {
        let targets: Vec<usize> = group.iter().map(|&k| assign[k]).collect();
        if group.len() == 1 {
            let (k, l) = (group[0], targets[0]);
            let best = weights[k][l];
            let second = (0..n).filter(|&j| j != l).map(|j| weights[k][j]).fold(0.0, f64::max);
            margin = margin.min(best - second);
            let ov = overlap_amp[(k, l)];
            let phase = if ov.norm() > 0.0 { ov / c(ov.norm(), 0.0) } else { c(1.0, 0.0) };
            // phase of <prev, new> removed so the overlap is real and ≥ 0
            vectors.set_column(k, &(eig.vectors.column(l) * phase.conj()));
            values[k] = eig.values[l];
            continue;
        }
        let m = group.len();
        let a = ComplexMatrix::from_columns(
            &group.iter().map(|&k| prev.vectors.column(k).into_owned()).collect::<Vec<_>>(),
        );
        let b = ComplexMatrix::from_columns(&targets.iter().map(|&l| eig.vector(l)).collect::<Vec<_>>());
        let (u, w) = svd_factors(&(a.adjoint() * &b));
        let new_degenerate = spread(targets.iter().map(|&l| eig.values[l])) <= opts.degeneracy * m as f64;
        let prev_degenerate = spread(group.iter().map(|&k| prev.values[k])) <= opts.degeneracy * m as f64;
        if new_degenerate {
            let aligned = &b * &w * u.adjoint();
            for (j, &k) in group.iter().enumerate() {
                let v = aligned.column(j).into_owned();
                values[k] = (v.dotc(&(choi * &v))).re;
                vectors.set_column(k, &v);
            }
        } else if prev_degenerate {
            // The block splits: rotate the previous vectors onto the limits
            // of the new, distinct eigenvectors.
            backfill.push((group.clone(), &u * w.adjoint()));
            for (j, &k) in group.iter().enumerate() {
                vectors.set_column(k, &b.column(j));
                values[k] = eig.values[targets[j]];
            }
        } else {
            for (&k, &l) in group.iter().zip(&targets) {
                let ov = overlap_amp[(k, l)];
                let phase = if ov.norm() > 0.0 { ov / c(ov.norm(), 0.0) } else { c(1.0, 0.0) };
                vectors.set_column(k, &(eig.vectors.column(l) * phase.conj()));
                values[k] = eig.values[l];
            }
        }
    }

    let near_crossing = detect_near_crossing(&prev.values, &values, &groups, opts.near_crossing_gap);
    Ok(Step { values, vectors, backfill, margin, near_crossing })
}

fn spread(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Two isolated paths, both above `gap`, closer than `gap` and approaching.
fn detect_near_crossing(prev: &[f64], new: &[f64], groups: &[Vec<usize>], gap: f64) -> bool {
    let singles: Vec<usize> = groups.iter().filter(|g| g.len() == 1).map(|g| g[0]).collect();
    for (x, &a) in singles.iter().enumerate() {
        for &b in &singles[x + 1..] {
            let now = (new[a] - new[b]).abs();
            let before = (prev[a] - prev[b]).abs();
            if new[a] > gap && new[b] > gap && now < gap && now < before {
                return true;
            }
        }
    }
    false
}

fn backfill(history: &mut [Point], paths: &[usize], q: &ComplexMatrix, tol: f64) {
    for p in history.iter_mut().rev() {
        if spread(paths.iter().map(|&k| p.values[k])) > tol * paths.len() as f64 {
            break;
        }
        let a =
            ComplexMatrix::from_columns(&paths.iter().map(|&k| p.vectors.column(k).into_owned()).collect::<Vec<_>>());
        let rotated = a * q;
        for (j, &k) in paths.iter().enumerate() {
            p.vectors.set_column(k, &rotated.column(j));
        }
    }
}

/// Maximum-weight perfect assignment (Hungarian algorithm, `O(n³)`);
/// returns the column assigned to each row.
pub fn max_weight_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    // Shortest augmenting path formulation on costs -w, 1-based potentials.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = -w[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Signed square roots `s_k(t_i)` with `s_k² = λ_k`, changing sign at
/// interior zeros of `λ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFunctions {
    /// `values[k][i]`.
    pub values: Vec<Vec<f64>>,
    /// Number of sign changes `q_k` per path.
    pub zero_counts: Vec<usize>,
    /// Grid indices from which the sign flips, per path.
    pub flips: Vec<Vec<usize>>,
}

/// Continues `√λ_k` through interior zeros.
///
/// Each interior local minimum of `λ_k` is a candidate zero. Three readings
/// are compared on the surrounding points, no sign change or a change
/// starting at `i` or at `i + 1`, and the one with the smallest divided
/// second difference wins. A minimum at or below `zero_eigenvalue` always
/// flips; one above needs the flipped reading to be at least twice as smooth.
pub fn sqrt_branch(path: &SpectralPath) -> Result<BranchFunctions> {
    sqrt_branch_with(path, tolerances::ZERO_EIGENVALUE)
}

pub fn sqrt_branch_with(path: &SpectralPath, zero_eigenvalue: f64) -> Result<BranchFunctions> {
    let t = path.grid().points();
    let mut values = Vec::with_capacity(path.d1());
    let mut zero_counts = Vec::with_capacity(path.d1());
    let mut flips_all = Vec::with_capacity(path.d1());
    for k in 0..path.d1() {
        let lam = path.values(k);
        if let Some((i, &v)) = lam.iter().enumerate().find(|(_, &v)| v < -tolerances::NEGATIVE_EIGENVALUE) {
            return Err(Error::NegativeEigenvalue { t: t[i], value: v });
        }
        let mut s: Vec<f64> = lam.iter().map(|&x| x.max(0.0).sqrt()).collect();
        let mut flips = vec![];
        let last = lam.len().saturating_sub(1);
        for i in 1..last {
            if !(lam[i] <= lam[i - 1] && lam[i] < lam[i + 1]) {
                continue;
            }
            let window = (i.saturating_sub(1).max(1), (i + 1).min(last - 1));
            let base = roughness(t, &s, window, None);
            let at_i = roughness(t, &s, window, Some(i));
            let after_i = roughness(t, &s, window, Some(i + 1));
            let (best_from, best) = if at_i < after_i { (i, at_i) } else { (i + 1, after_i) };
            let certain_zero = lam[i] <= zero_eigenvalue;
            if certain_zero || best < 0.5 * base {
                for x in &mut s[best_from..] {
                    *x = -*x;
                }
                flips.push(best_from);
            }
        }
        zero_counts.push(flips.len());
        flips_all.push(flips);
        values.push(s);
    }
    Ok(BranchFunctions { values, zero_counts, flips: flips_all })
}

fn roughness(t: &[f64], s: &[f64], (lo, hi): (usize, usize), flip_from: Option<usize>) -> f64 {
    let val = |j: usize| match flip_from {
        Some(f) if j >= f => -s[j],
        _ => s[j],
    };
    (lo..=hi)
        .map(|j| {
            let (h0, h1) = (t[j] - t[j - 1], t[j + 1] - t[j]);
            let d2 = 2.0 * ((val(j + 1) - val(j)) / h1 - (val(j) - val(j - 1)) / h0) / (h0 + h1);
            d2.abs()
        })
        .sum()
}

/// Kraus operators `M_k(t_i)` for every retained path.
pub fn kraus_at(path: &SpectralPath, branch: &BranchFunctions, i: usize) -> Result<Vec<ComplexMatrix>> {
    let d0 = path.d0();
    let scale = (d0 as f64).sqrt();
    let ops: Vec<ComplexMatrix> = (0..path.d1())
        .map(|k| {
            let v = path.vectors_at(i).column(k);
            let amp = scale * branch.values[k][i];
            ComplexMatrix::from_fn(d0, d0, |a, j| v[a * d0 + j] * amp)
        })
        .collect();
    if let Some(choi) = path.choi_at_index(i) {
        let residual = reconstruction_residual(&ops, choi, d0);
        if residual > tolerances::RECONSTRUCTION_FAIL {
            return Err(Error::Reconstruction { t: path.grid().points()[i], residual });
        }
    }
    Ok(ops)
}

/// `max_ij ‖Σ_k M_k E_ij M_k† − Φ(E_ij)‖₁` with `Φ(E_ij)[a,b] = d₀·C[(a,i),(b,j)]`.
pub fn reconstruction_residual(ops: &[ComplexMatrix], choi: &ComplexMatrix, d0: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..d0 {
        for j in 0..d0 {
            let mut diff = ComplexMatrix::from_fn(d0, d0, |a, b| -choi[(a * d0 + i, b * d0 + j)] * c(d0 as f64, 0.0));
            for m in ops {
                // M E_ij M† = (column i of M)(column j of M)†
                diff += m.column(i) * m.column(j).adjoint();
            }
            worst = worst.max(trace_norm(&diff));
        }
    }
    worst
}

/// `‖Σ_k M_k† M_k − 1‖`.
pub fn normalization_defect(ops: &[ComplexMatrix]) -> f64 {
    let d0 = ops[0].nrows();
    let mut sum = numerics::zeros(d0, d0);
    for m in ops {
        sum += m.adjoint() * m;
    }
    numerics::spectral_norm(&(sum - numerics::identity(d0)))
}

/// `M_k(t_i)` on the whole grid.
#[derive(Debug, Clone)]
pub struct KrausFamily {
    grid: TimeGrid,
    d0: usize,
    /// `ops[i][k]`.
    ops: Vec<Vec<ComplexMatrix>>,
    values: Vec<Vec<f64>>,
    branches: Vec<Vec<f64>>,
    max_reconstruction: f64,
    max_normalization: f64,
}

impl KrausFamily {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn d0(&self) -> usize {
        self.d0
    }

    pub fn d1(&self) -> usize {
        self.values.len()
    }

    pub fn at_index(&self, i: usize) -> &[ComplexMatrix] {
        &self.ops[i]
    }

    pub fn max_reconstruction_residual(&self) -> f64 {
        self.max_reconstruction
    }

    pub fn max_normalization_defect(&self) -> f64 {
        self.max_normalization
    }

    /// Channel `ρ ↦ Σ_k M_k ρ M_k†` at grid index `i`.
    pub fn channel_at_index(&self, i: usize) -> Result<Superoperator> {
        Superoperator::from_kraus(&self.ops[i])
    }

    /// One row per grid point: `t, lambda_k…, s_k…`, then every `M_k` entry
    /// in row-major order as `re, im` columns.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        let d1 = self.d1();
        let d0 = self.d0;
        let mut header = vec!["t".to_string()];
        header.extend((0..d1).map(|k| format!("lambda_{k}")));
        header.extend((0..d1).map(|k| format!("s_{k}")));
        for k in 0..d1 {
            for a in 0..d0 {
                for b in 0..d0 {
                    header.push(format!("M{k}_{a}{b}_re"));
                    header.push(format!("M{k}_{a}{b}_im"));
                }
            }
        }
        w.write_record(&header)?;
        for (i, &t) in self.grid.points().iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend((0..d1).map(|k| self.values[k][i].to_string()));
            row.extend((0..d1).map(|k| self.branches[k][i].to_string()));
            for m in &self.ops[i] {
                for a in 0..d0 {
                    for b in 0..d0 {
                        row.push(m[(a, b)].re.to_string());
                        row.push(m[(a, b)].im.to_string());
                    }
                }
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn kraus_family(path: &SpectralPath, branch: &BranchFunctions) -> Result<KrausFamily> {
    let mut ops = Vec::with_capacity(path.grid().len());
    let mut max_reconstruction: f64 = 0.0;
    let mut max_normalization: f64 = 0.0;
    for i in 0..path.grid().len() {
        let m = kraus_at(path, branch, i)?;
        if let Some(choi) = path.choi_at_index(i) {
            max_reconstruction = max_reconstruction.max(reconstruction_residual(&m, choi, path.d0()));
        }
        max_normalization = max_normalization.max(normalization_defect(&m));
        ops.push(m);
    }
    Ok(KrausFamily {
        grid: path.grid().clone(),
        d0: path.d0(),
        ops,
        values: (0..path.d1()).map(|k| path.values(k).to_vec()).collect(),
        branches: branch.values.clone(),
        max_reconstruction,
        max_normalization,
    })
}

/// Track, branch and assemble in one call.
pub fn kraus_pipeline(
    fam: &ChannelFamily,
    grid: &TimeGrid,
    opts: &TrackingOptions,
) -> Result<(SpectralPath, KrausFamily)> {
    let path = track_spectrum_with(fam, grid, opts)?;
    let branch = sqrt_branch_with(&path, opts.zero_eigenvalue)?;
    let kf = kraus_family(&path, &branch)?;
    Ok((path, kf))
}
