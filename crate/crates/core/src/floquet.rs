//! Floquet–Bloch reduction: fiber matrices `h(k)`, band functions, gaps and
//! gap-edge regularity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::PeriodicGraph;
use crate::linalg::{hermitian_eigen, symmetric_eigenvalues};
use crate::torus::{wrap_angle, TorusGrid};

/// Anything that yields the sorted band energies `E_1(k) <= ... <= E_ν(k)`.
pub trait BandSampler: Sync {
    fn dim(&self) -> usize;
    fn band_count(&self) -> usize;
    fn energies(&self, k: &[f64]) -> Vec<f64>;
}

/// The `ν×ν` Hermitian matrix to which the periodic operator reduces at
/// quasimomentum `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMatrix {
    pub k: Vec<f64>,
    pub entries: DMatrix<Complex64>,
}

fn dot(a: &[f64], n: &[i64]) -> f64 {
    a.iter().zip(n).map(|(x, &m)| x * m as f64).sum()
}

pub fn fiber_matrix(graph: &PeriodicGraph, k: &[f64]) -> FiberMatrix {
    assert_eq!(k.len(), graph.dim(), "quasimomentum has the wrong dimension");
    let nu = graph.nu();
    let mut h = DMatrix::from_fn(nu, nu, |i, j| {
        if i == j {
            Complex64::new(graph.degrees()[i] as f64 + graph.potential()[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for e in graph.edges() {
        let phase = dot(k, &e.cell);
        if e.is_self_orbit() {
            h[(e.from, e.from)] -= Complex64::new(2.0 * phase.cos(), 0.0);
        } else {
            let z = Complex64::from_polar(1.0, phase);
            h[(e.from, e.to)] -= z;
            h[(e.to, e.from)] -= z.conj();
        }
    }
    FiberMatrix {
        k: k.to_vec(),
        entries: h,
    }
}

impl BandSampler for PeriodicGraph {
    fn dim(&self) -> usize {
        PeriodicGraph::dim(self)
    }

    fn band_count(&self) -> usize {
        self.nu()
    }

    fn energies(&self, k: &[f64]) -> Vec<f64> {
        let h = fiber_matrix(self, k).entries;
        if self.nu() == 1 {
            return vec![h[(0, 0)].re];
        }
        if h.iter().all(|z| z.im == 0.0) {
            return symmetric_eigenvalues(&h.map(|z| z.re)).expect("fiber eigenvalues");
        }
        hermitian_eigen(&h).expect("fiber matrix is Hermitian by construction").values
    }
}

/// Band functions given by a closure; used to probe edge checks with
/// prescribed shapes.
pub struct SyntheticBands<F> {
    dim: usize,
    bands: usize,
    f: F,
}

impl<F> SyntheticBands<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, bands: usize, f: F) -> Self {
        SyntheticBands { dim, bands, f }
    }
}

impl<F> BandSampler for SyntheticBands<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn band_count(&self) -> usize {
        self.bands
    }

    fn energies(&self, k: &[f64]) -> Vec<f64> {
        let mut e = (self.f)(k);
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Band functions sampled on a uniform torus grid.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub grid: TorusGrid,
    pub bands: usize,
    /// `values[point * bands + s]` is `E_{s+1}` at the grid point.
    pub values: Vec<f64>,
    /// Per-band `(min, max)` over the grid.
    pub band_extrema: Vec<(f64, f64)>,
    /// Optional eigenvectors, one `ν×ν` matrix per grid point.
    pub eigenvectors: Option<Vec<DMatrix<Complex64>>>,
}

impl BandStructure {
    pub fn energies_at(&self, point: usize) -> &[f64] {
        &self.values[point * self.bands..(point + 1) * self.bands]
    }

    pub fn band(&self, s: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(s).step_by(self.bands).copied()
    }

    pub fn global_min(&self) -> f64 {
        self.band_extrema[0].0
    }

    pub fn global_max(&self) -> f64 {
        self.band_extrema[self.bands - 1].1
    }
}

pub fn band_structure(sampler: &dyn BandSampler, size: usize) -> Result<BandStructure> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!("grid size {size} must be at least 2")));
    }
    let grid = TorusGrid::new(sampler.dim(), size);
    let bands = sampler.band_count();
    let per_point: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|l| sampler.energies(&grid.point(l)))
        .collect();
    let mut values = Vec::with_capacity(grid.len() * bands);
    for e in per_point {
        values.extend(e);
    }
    let band_extrema = (0..bands)
        .map(|s| {
            values
                .iter()
                .skip(s)
                .step_by(bands)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
        })
        .collect();
    Ok(BandStructure {
        grid,
        bands,
        values,
        band_extrema,
        eigenvectors: None,
    })
}

/// Band structure of a graph together with orthonormal eigenvectors.
pub fn band_structure_with_vectors(graph: &PeriodicGraph, size: usize) -> Result<BandStructure> {
    let mut bs = band_structure(graph, size)?;
    let vectors: Result<Vec<DMatrix<Complex64>>> = (0..bs.grid.len())
        .into_par_iter()
        .map(|l| hermitian_eigen(&fiber_matrix(graph, &bs.grid.point(l)).entries).map(|e| e.vectors))
        .collect();
    bs.eigenvectors = Some(vectors?);
    Ok(bs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    /// `(-∞, Λ_min)`
    LeftSemiInfinite,
    Interior,
    /// `(Λ_max, +∞)`
    RightSemiInfinite,
}

/// A spectral gap `(lower, upper)` as certified by grid extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// `Λ_+`, or `-∞`.
    pub lower: f64,
    /// `Λ_-`, or `+∞`.
    pub upper: f64,
    pub kind: GapKind,
    /// Zero-based index of the band whose maximum is `lower`.
    pub band_below: Option<usize>,
    /// Zero-based index of the band whose minimum is `upper`.
    pub band_above: Option<usize>,
    /// Grid step `2π/M` of the sampling that produced the gap.
    pub grid_step: f64,
}

impl Gap {
    /// One-based index `N` of the band above an interior gap.
    pub fn band_number(&self) -> Option<usize> {
        self.band_above.map(|b| b + 1)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lower < lambda && lambda < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// The two semi-infinite gaps and every interior gap detected on the grid.
pub fn find_gaps(bands: &BandStructure) -> Vec<Gap> {
    let step = bands.grid.step();
    let nu = bands.bands;
    let mut gaps = vec![Gap {
        lower: f64::NEG_INFINITY,
        upper: bands.global_min(),
        kind: GapKind::LeftSemiInfinite,
        band_below: None,
        band_above: Some(0),
        grid_step: step,
    }];
    for s in 1..nu {
        let below = bands.band_extrema[s - 1].1;
        let above = bands.band_extrema[s].0;
        if below < above {
            gaps.push(Gap {
                lower: below,
                upper: above,
                kind: GapKind::Interior,
                band_below: Some(s - 1),
                band_above: Some(s),
                grid_step: step,
            });
        }
    }
    gaps.push(Gap {
        lower: bands.global_max(),
        upper: f64::INFINITY,
        kind: GapKind::RightSemiInfinite,
        band_below: Some(nu - 1),
        band_above: None,
        grid_step: step,
    });
    gaps
}

/// Which endpoint of a gap: `Left` is `Λ_+` (a maximum of the band below),
/// `Right` is `Λ_-` (a minimum of the band above).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapEdge {
    Left,
    Right,
}

impl GapEdge {
    pub fn value(self, gap: &Gap) -> f64 {
        match self {
            GapEdge::Left => gap.lower,
            GapEdge::Right => gap.upper,
        }
    }

    pub fn band(self, gap: &Gap) -> Option<usize> {
        match self {
            GapEdge::Left => gap.band_below,
            GapEdge::Right => gap.band_above,
        }
    }

    /// `+1` when the edge is a band maximum, `-1` for a minimum.
    fn orientation(self) -> f64 {
        match self {
            GapEdge::Left => 1.0,
            GapEdge::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    NonRegular,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub edge: GapEdge,
    pub edge_value: f64,
    pub band: usize,
    pub extremizers: Vec<Vec<f64>>,
    /// Hessians of the band function `E` at each extremizer.
    pub hessians: Vec<DMatrix<f64>>,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, Copy)]
pub struct RegularityOptions {
    /// Coarse grid used to seed the extremizer search.
    pub coarse_grid: usize,
    /// Pattern-search step at which refinement stops.
    pub min_step: f64,
    /// Largest finite-difference step of the Hessian ladder.
    pub fd_step: f64,
    /// Number of step halvings in the Hessian ladder.
    pub fd_levels: usize,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            coarse_grid: 32,
            min_step: 1e-7,
            fd_step: 1e-2,
            fd_levels: 5,
        }
    }
}

/// Smallest |eigenvalue| of a definite Hessian relative to the largest.
pub const HESSIAN_DEFINITENESS_TOL: f64 = 1e-6;

/// Largest coarse-grid candidate count still treated as isolated extremizers.
const MAX_EXTREMIZERS: usize = 64;

pub fn check_edge_regularity(
    sampler: &dyn BandSampler,
    gap: &Gap,
    edge: GapEdge,
    options: &RegularityOptions,
) -> Result<RegularityReport> {
    let band = edge.band(gap).ok_or_else(|| {
        Error::InvalidArgument(format!("the {edge:?} edge of this gap is infinite"))
    })?;
    let d = sampler.dim();
    let sigma = edge.orientation();
    let height = |k: &[f64]| sigma * sampler.energies(k)[band];
    let edge_value = edge.value(gap);
    let mut report = RegularityReport {
        edge,
        edge_value,
        band,
        extremizers: vec![],
        hessians: vec![],
        verdict: Verdict::Inconclusive,
        note: String::new(),
    };

    let grid = TorusGrid::new(d, options.coarse_grid);
    let all: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|l| sampler.energies(&grid.point(l)))
        .collect();

    // Another band reaching the edge value breaks regularity.
    let scale = 1.0 + edge_value.abs();
    let neighbour_band = match edge {
        GapEdge::Left => band.checked_sub(1),
        GapEdge::Right => (band + 1 < sampler.band_count()).then_some(band + 1),
    };
    if let Some(other) = neighbour_band {
        let reach = all
            .iter()
            .map(|e| sigma * e[other])
            .fold(f64::NEG_INFINITY, f64::max);
        if reach >= sigma * edge_value - 1e-9 * scale {
            report.verdict = Verdict::NonRegular;
            report.note = format!("band {} also attains the edge value", other + 1);
            return Ok(report);
        }
    }

    let f: Vec<f64> = all.iter().map(|e| sigma * e[band]).collect();
    let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Grid values of a smooth extremum sit below the true value by at most
    // a second difference; use the largest one as the seeding tolerance.
    let mut curvature: f64 = 0.0;
    for l in 0..grid.len() {
        let idx = grid.multi_index(l);
        for axis in 0..d {
            let mut up = idx.clone();
            let mut down = idx.clone();
            up[axis] = (idx[axis] + 1) % grid.size;
            down[axis] = (idx[axis] + grid.size - 1) % grid.size;
            let second = f[grid.linear(&up)] + f[grid.linear(&down)] - 2.0 * f[l];
            curvature = curvature.max(second.abs());
        }
    }
    let seeds: Vec<usize> = (0..grid.len())
        .filter(|&l| f[l] >= fmax - curvature - 1e-12 * scale)
        .filter(|&l| grid.neighbours(l).iter().all(|&m| f[m] <= f[l]))
        .collect();
    if seeds.len() > MAX_EXTREMIZERS {
        report.verdict = Verdict::NonRegular;
        report.note = format!("{} grid points attain the edge; extremizer set is not isolated", seeds.len());
        return Ok(report);
    }

    let mut refined: Vec<(Vec<f64>, f64)> = seeds
        .iter()
        .map(|&l| pattern_search(&height, grid.point(l), grid.step() / 2.0, options.min_step))
        .collect();
    let best = refined.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    refined.retain(|(_, v)| *v >= best - 1e-9 * scale);
    let mut extremizers: Vec<Vec<f64>> = Vec::new();
    for (k, _) in refined {
        let duplicate = extremizers.iter().any(|e| torus_distance(e, &k) < 1e-4);
        if !duplicate {
            extremizers.push(k);
        }
    }
    report.edge_value = sigma * best;

    let mut verdict = Verdict::Regular;
    let mut notes = Vec::new();
    for k in &extremizers {
        let (hess, converged) = richardson_hessian(&height, k, options.fd_step, options.fd_levels);
        let hess_e = &hess * sigma;
        let eig = symmetric_eigenvalues(&hess)?;
        let largest = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let definite = largest > 0.0
            && eig.iter().all(|&x| x < 0.0)
            && eig.iter().all(|x| x.abs() >= HESSIAN_DEFINITENESS_TOL * largest);
        // Flat directions: the band stays at the edge value one small step away.
        let flat = flat_direction(&height, k, sigma * best, scale);
        if !definite || flat {
            verdict = Verdict::NonRegular;
            notes.push(format!("Hessian at {k:?} is not definite (eigenvalues {:?})", eig.iter().map(|x| sigma * x).collect::<Vec<_>>()));
        } else if !converged && verdict == Verdict::Regular {
            verdict = Verdict::Inconclusive;
            notes.push(format!("Hessian estimates at {k:?} did not settle"));
        }
        report.hessians.push(hess_e);
    }
    report.extremizers = extremizers;
    report.verdict = verdict;
    report.note = notes.join("; ");
    Ok(report)
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_angle(x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Compass search for a local maximum of `f` starting at `k`.
fn pattern_search(f: &impl Fn(&[f64]) -> f64, mut k: Vec<f64>, mut step: f64, min_step: f64) -> (Vec<f64>, f64) {
    let d = k.len();
    let mut value = f(&k);
    let mut iterations = 0;
    while step >= min_step && iterations < 100_000 {
        iterations += 1;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut trial = k.clone();
            let mut moved = false;
            for x in trial.iter_mut() {
                let delta = (c % 3) as f64 - 1.0;
                c /= 3;
                if delta != 0.0 {
                    moved = true;
                    *x = wrap_angle(*x + delta * step);
                }
            }
            if !moved {
                continue;
            }
            let v = f(&trial);
            if v > value && best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((trial, v));
            }
        }
        match best {
            Some((trial, v)) => {
                k = trial;
                value = v;
            }
            None => step /= 2.0,
        }
    }
    (k, value)
}

fn fd_hessian(f: &impl Fn(&[f64]) -> f64, k: &[f64], h: f64) -> DMatrix<f64> {
    let d = k.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut x = k.to_vec();
        for &(i, s) in shifts {
            x[i] += s;
        }
        f(&x)
    };
    let f0 = f(k);
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        hess[(i, i)] = (at(&[(i, h)]) + at(&[(i, -h)]) - 2.0 * f0) / (h * h);
        for j in 0..i {
            let v = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Central-difference Hessians with step halving and Richardson
/// extrapolation; reports whether the extrapolated values settled.
fn richardson_hessian(f: &impl Fn(&[f64]) -> f64, k: &[f64], h0: f64, levels: usize) -> (DMatrix<f64>, bool) {
    let raw: Vec<DMatrix<f64>> = (0..levels.max(2))
        .map(|j| fd_hessian(f, k, h0 / 2f64.powi(j as i32)))
        .collect();
    let extrapolated: Vec<DMatrix<f64>> = raw.windows(2).map(|w| (&w[1] * 4.0 - &w[0]) / 3.0).collect();
    let last = extrapolated.last().unwrap().clone();
    let scale = 1.0 + last.abs().max();
    let diffs: Vec<f64> = extrapolated.windows(2).map(|w| (&w[1] - &w[0]).abs().max()).collect();
    let converged = match diffs.last() {
        None => true,
        Some(&dl) => dl <= 1e-6 * scale,
    };
    (last, converged)
}

fn flat_direction(f: &impl Fn(&[f64]) -> f64, k: &[f64], top: f64, scale: f64) -> bool {
    let h = 1e-3;
    (0..k.len()).any(|i| {
        [h, -h].iter().all(|&s| {
            let mut x = k.to_vec();
            x[i] += s;
            (top - f(&x)).abs() <= 1e-13 * scale
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, EdgeSpec, GraphSpecDocument, VertexSpec};
    use std::f64::consts::PI;

    fn dimer() -> PeriodicGraph {
        let doc = GraphSpecDocument {
            dim: 1,
            vertices: vec![
                VertexSpec { id: 1, offset: vec![0.0], q: 0.0 },
                VertexSpec { id: 2, offset: vec![0.5], q: 2.0 },
            ],
            edges: vec![
                EdgeSpec { from: 1, to: 2, cell: vec![0] },
                EdgeSpec { from: 2, to: 1, cell: vec![1] },
            ],
        };
        build_graph(&doc).unwrap()
    }

    #[test]
    fn chain_fiber_values() {
        let z = PeriodicGraph::lattice(1);
        assert!(fiber_matrix(&z, &[0.0]).entries[(0, 0)].norm() < 1e-15);
        assert!((fiber_matrix(&z, &[PI]).entries[(0, 0)].re - 4.0).abs() < 1e-15);
    }

    #[test]
    fn dimer_fiber_at_zero() {
        let h = fiber_matrix(&dimer(), &[0.0]).entries;
        let expected = [[2.0, -2.0], [-2.0, 4.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - Complex64::new(expected[i][j], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn fiber_conjugate_symmetry() {
        let g = dimer();
        for &k in &[0.3, -1.1, 2.9] {
            let a = fiber_matrix(&g, &[k]).entries;
            let b = fiber_matrix(&g, &[-k]).entries;
            assert!((a.map(|z| z.conj()) - b).camax() < 1e-15);
        }
    }

    #[test]
    fn chain_band_extrema() {
        let bs = band_structure(&PeriodicGraph::lattice(1), 8).unwrap();
        assert_eq!(bs.band_extrema[0], (0.0, 4.0));
        let gaps = find_gaps(&bs);
        assert_eq!(gaps.len(), 2);
        assert_eq!(gaps[0].upper, 0.0);
        assert_eq!(gaps[1].lower, 4.0);
    }

    #[test]
    fn dimer_gap_matches_closed_form() {
        let bs = band_structure(&dimer(), 64).unwrap();
        // Scalar sweep of the closed-form 2x2 eigenvalues on the same grid.
        let grid = TorusGrid::new(1, 64);
        let radial = |k: f64| (1.0 + (2.0 + 2.0 * k.cos())).sqrt();
        let lower = (0..64).map(|m| 3.0 - radial(grid.coordinate(m))).fold(f64::MIN, f64::max);
        let upper = (0..64).map(|m| 3.0 + radial(grid.coordinate(m))).fold(f64::MAX, f64::min);
        let gaps = find_gaps(&bs);
        let interior: Vec<_> = gaps.iter().filter(|g| g.kind == GapKind::Interior).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].band_number(), Some(2));
        assert!((interior[0].lower - lower).abs() < 1e-12);
        assert!((interior[0].upper - upper).abs() < 1e-12);
        assert!((lower - 2.0).abs() < 1e-12 && (upper - 4.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_synthetic_bands_have_no_interior_gap() {
        let s = SyntheticBands::new(1, 2, |k: &[f64]| vec![k[0].cos(), 0.5 + k[0].sin()]);
        let gaps = find_gaps(&band_structure(&s, 32).unwrap());
        assert!(gaps.iter().all(|g| g.kind != GapKind::Interior));
    }

    #[test]
    fn square_lattice_lower_edge_is_regular() {
        let g = PeriodicGraph::lattice(2);
        let bs = band_structure(&g, 16).unwrap();
        let gap = find_gaps(&bs)[0];
        let r = check_edge_regularity(&g, &gap, GapEdge::Right, &RegularityOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Regular, "{}", r.note);
        assert_eq!(r.extremizers.len(), 1);
        let h = &r.hessians[0];
        assert!((h - DMatrix::identity(2, 2) * 2.0).abs().max() < 1e-6);
    }

    #[test]
    fn quartic_band_is_not_regular() {
        let s = SyntheticBands::new(2, 1, |k: &[f64]| vec![-k[0].powi(4) - k[1] * k[1]]);
        let bs = band_structure(&s, 32).unwrap();
        let gap = *find_gaps(&bs).last().unwrap();
        let r = check_edge_regularity(&s, &gap, GapEdge::Left, &RegularityOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NonRegular);
    }

    #[test]
    fn flat_band_is_not_regular() {
        let s = SyntheticBands::new(1, 1, |_k: &[f64]| vec![1.0]);
        let bs = band_structure(&s, 16).unwrap();
        let gap = find_gaps(&bs)[0];
        let r = check_edge_regularity(&s, &gap, GapEdge::Right, &RegularityOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NonRegular);
    }
}
