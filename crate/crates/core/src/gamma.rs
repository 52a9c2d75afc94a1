//! Asymptotic coefficients `Γ_p^±(λ)` of the counting functions and the
//! integrability checks that decide whether they stay finite at a gap edge.
//!
//! ```text
//! Γ_p^±(λ) = 1/(d (2π)^d) · Σ_s ∫_{T^d} (λ - E_s(k))_±^{-p} dk · ∫_{S^{d-1}} ϑ^p dS
//! ```
//!
//! with `x_± = (|x| ± x)/2` and `x_±^{-p} = 0` wherever `x_± = 0`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{band_structure, BandSampler, GapEdge, Gap};
use crate::graph::AngularProfile;
use crate::torus::{gauss_legendre, TorusGrid};
use crate::Sign;

/// `x_±^{-p}`: the power of the positive (or negative) part, zero where
/// that part vanishes.
pub fn signed_part_power(x: f64, sign: Sign, p: f64) -> f64 {
    let part = match sign {
        Sign::Plus => x.max(0.0),
        Sign::Minus => (-x).max(0.0),
    };
    if part > 0.0 {
        part.powf(-p)
    } else {
        0.0
    }
}

/// `∫_{S^{d-1}} |ϑ|^p dS` for `d ∈ {1, 2, 3}`.
pub fn sphere_integral(profile: &AngularProfile, p: f64, d: usize, resolution: usize) -> Result<f64> {
    let pw = |x: f64| x.abs().powf(p);
    match d {
        1 => Ok(pw(profile.eval(&[1.0])) + pw(profile.eval(&[-1.0]))),
        2 => {
            let n = resolution.max(4);
            let h = 2.0 * PI / n as f64;
            let sum: f64 = (0..n)
                .map(|i| {
                    let phi = h * i as f64;
                    pw(profile.eval(&[phi.cos(), phi.sin()]))
                })
                .sum();
            Ok(h * sum)
        }
        3 => {
            let n = resolution.max(4);
            let (nodes, weights) = gauss_legendre(n);
            let azimuths = 2 * n;
            let h = 2.0 * PI / azimuths as f64;
            let mut sum = 0.0;
            for (&z, &w) in nodes.iter().zip(&weights) {
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let ring: f64 = (0..azimuths)
                    .map(|i| {
                        let phi = h * i as f64;
                        pw(profile.eval(&[z, rho * phi.cos(), rho * phi.sin()]))
                    })
                    .sum();
                sum += w * h * ring;
            }
            Ok(sum)
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

const CHUNK: usize = 4096;

/// Per-band Riemann sums `(2π/M)^d Σ_k integrand(s, E_s(k))`, reduced in a
/// fixed chunk order so the result does not depend on the worker count.
pub fn torus_band_sums(
    sampler: &dyn BandSampler,
    grid: TorusGrid,
    integrand: impl Fn(usize, f64) -> f64 + Sync,
) -> Vec<f64> {
    let bands = sampler.band_count();
    let n = grid.len();
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; bands];
            for l in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let e = sampler.energies(&grid.point(l));
                for (s, &x) in e.iter().enumerate() {
                    acc[s] += integrand(s, x);
                }
            }
            acc
        })
        .collect();
    let vol = grid.cell_volume();
    let mut total = vec![0.0; bands];
    for part in partials {
        for (t, x) in total.iter_mut().zip(part) {
            *t += x;
        }
    }
    total.iter().map(|t| t * vol).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GammaOptions {
    /// Coarsest torus grid; the sums use `M`, `2M` and `4M`.
    pub base_grid: usize,
    pub sphere_resolution: usize,
    /// Integrability exponent tested before evaluating at an edge when `p = 1`.
    pub edge_kappa_at_p1: f64,
    /// Grid ladder for edge evaluations.
    pub edge_ladder: [usize; 4],
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            base_grid: 64,
            sphere_resolution: 64,
            edge_kappa_at_p1: 1.25,
            edge_ladder: [32, 64, 128, 256],
        }
    }
}

impl GammaOptions {
    /// Exponent `κ` demanded of `(Λ_± - E_s)_±^{-1}` for a finite edge value.
    pub fn edge_kappa(&self, p: f64) -> f64 {
        if p > 1.0 {
            p
        } else if p < 1.0 {
            1.0
        } else {
            self.edge_kappa_at_p1
        }
    }
}

#[derive(Debug, Clone)]
pub struct GammaResult {
    pub lambda: f64,
    pub p: f64,
    pub sign: Sign,
    pub dim: usize,
    /// `∫_{T^d} (λ - E_s(k))_±^{-p} dk` per band.
    pub torus_integrals: Vec<f64>,
    pub sphere_integral: f64,
    /// `None` when an edge evaluation was declined.
    pub value: Option<f64>,
    pub grids: Vec<usize>,
    pub edge_report: Option<EdgeIntegralReport>,
}

impl GammaResult {
    pub fn torus_sum(&self) -> f64 {
        self.torus_integrals.iter().sum()
    }
}

fn combine(dim: usize, torus_sum: f64, sphere: f64) -> f64 {
    torus_sum * sphere / (dim as f64 * (2.0 * PI).powi(dim as i32))
}

/// Evaluates `Γ_p^±(λ)`. Inside a gap the torus integrals are uniform
/// Riemann sums on `M`, `2M`, `4M` with Richardson extrapolation; at a gap
/// edge the value is produced only when the integrability ladder converges.
pub fn gamma_coefficient(
    sampler: &dyn BandSampler,
    lambda: f64,
    p: f64,
    sign: Sign,
    profile: &AngularProfile,
    options: &GammaOptions,
) -> Result<GammaResult> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
    }
    let d = sampler.dim();
    let sphere = sphere_integral(profile, p, d, options.sphere_resolution)?;
    let bs = band_structure(sampler, options.base_grid)?;
    let scale = 1.0 + lambda.abs();
    let tol = 1e-12 * scale;
    for (s, &(lo, hi)) in bs.band_extrema.iter().enumerate() {
        if lo + tol < lambda && lambda < hi - tol {
            let _ = s;
            return Err(Error::InsideBand(lambda));
        }
    }
    // A band touching λ on the side selected by the sign makes this an edge
    // evaluation.
    let touching = bs.band_extrema.iter().any(|&(lo, hi)| match sign {
        Sign::Plus => (hi - lambda).abs() <= tol,
        Sign::Minus => (lo - lambda).abs() <= tol,
    });
    if touching {
        let gap = crate::floquet::find_gaps(&bs)
            .into_iter()
            .find(|g| match sign {
                Sign::Plus => (g.lower - lambda).abs() <= tol,
                Sign::Minus => (g.upper - lambda).abs() <= tol,
            })
            .ok_or(Error::InsideBand(lambda))?;
        let edge = match sign {
            Sign::Plus => GapEdge::Left,
            Sign::Minus => GapEdge::Right,
        };
        let kappa = options.edge_kappa(p);
        let report = edge_integral(sampler, &gap, edge, kappa, &options.edge_ladder)?;
        let mut result = GammaResult {
            lambda,
            p,
            sign,
            dim: d,
            torus_integrals: vec![],
            sphere_integral: sphere,
            value: None,
            grids: options.edge_ladder.to_vec(),
            edge_report: None,
        };
        if report.verdict == IntegralVerdict::Convergent {
            let values = if kappa == p {
                report.estimates.last().unwrap().clone()
            } else {
                edge_integral(sampler, &gap, edge, p, &options.edge_ladder)?
                    .estimates
                    .last()
                    .unwrap()
                    .clone()
            };
            result.value = Some(combine(d, values.iter().sum(), sphere));
            result.torus_integrals = values;
        }
        result.edge_report = Some(report);
        return Ok(result);
    }

    let grids: Vec<usize> = (0..3).map(|i| options.base_grid << i).collect();
    let sums: Vec<Vec<f64>> = grids
        .iter()
        .map(|&m| {
            torus_band_sums(sampler, TorusGrid::new(d, m), |_, e| signed_part_power(lambda - e, sign, p))
        })
        .collect();
    let torus_integrals: Vec<f64> = (0..sampler.band_count())
        .map(|s| (4.0 * sums[2][s] - sums[1][s]) / 3.0)
        .map(|x: f64| x.max(0.0))
        .collect();
    let value = combine(d, torus_integrals.iter().sum(), sphere);
    Ok(GammaResult {
        lambda,
        p,
        sign,
        dim: d,
        torus_integrals,
        sphere_integral: sphere,
        value: Some(value),
        grids,
        edge_report: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Relative change below which a ladder is declared convergent.
pub const LADDER_TOL: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct EdgeIntegralReport {
    pub edge: GapEdge,
    pub edge_value: f64,
    pub kappa: f64,
    pub ladder: Vec<usize>,
    /// Per grid, per band `∫ (Λ_± - E_s)_±^{-κ} dk`.
    pub estimates: Vec<Vec<f64>>,
    /// Per grid sums over bands (or weak functionals when `weak_sup` is set).
    pub totals: Vec<f64>,
    /// `log(total_{i+1}/total_i) / log(M_{i+1}/M_i)`.
    pub growth_exponents: Vec<f64>,
    pub verdict: IntegralVerdict,
    /// Per grid `sup_s s·mes{(Λ-E)_±^{-1} > s}^{1/p}`.
    pub weak_sup: Option<Vec<f64>>,
}

fn edge_sign(edge: GapEdge) -> Sign {
    match edge {
        GapEdge::Left => Sign::Plus,
        GapEdge::Right => Sign::Minus,
    }
}

fn growth(ladder: &[usize], totals: &[f64]) -> Vec<f64> {
    ladder
        .windows(2)
        .zip(totals.windows(2))
        .map(|(m, t)| (t[1] / t[0]).ln() / (m[1] as f64 / m[0] as f64).ln())
        .collect()
}

/// Convergent when both of the last two refinements move the estimate by
/// less than [`LADDER_TOL`]; divergent when the last one multiplies it by at
/// least `diverge_ratio`.
fn ladder_verdict(totals: &[f64], diverge_ratio: f64) -> IntegralVerdict {
    let n = totals.len();
    if n < 2 {
        return IntegralVerdict::Inconclusive;
    }
    let close = |a: f64, b: f64| b.is_finite() && (b - a).abs() <= LADDER_TOL * b.abs();
    let last = totals[n - 1];
    let prev = totals[n - 2];
    if n >= 3 && close(totals[n - 3], prev) && close(prev, last) {
        IntegralVerdict::Convergent
    } else if last > prev * diverge_ratio {
        IntegralVerdict::Divergent
    } else {
        IntegralVerdict::Inconclusive
    }
}

/// Integrability ladder for `(Λ_± - E_s(·))_±^{-κ}` over `T^d`.
pub fn edge_integral(
    sampler: &dyn BandSampler,
    gap: &Gap,
    edge: GapEdge,
    kappa: f64,
    ladder: &[usize],
) -> Result<EdgeIntegralReport> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be nonnegative")));
    }
    let edge_value = edge.value(gap);
    if !edge_value.is_finite() {
        return Err(Error::InvalidArgument("edge of a semi-infinite gap at infinity".into()));
    }
    let sign = edge_sign(edge);
    let d = sampler.dim();
    let estimates: Vec<Vec<f64>> = ladder
        .iter()
        .map(|&m| {
            if kappa == 0.0 {
                vec![(2.0 * PI).powi(d as i32); sampler.band_count()]
            } else {
                torus_band_sums(sampler, TorusGrid::new(d, m), |_, e| {
                    signed_part_power(edge_value - e, sign, kappa)
                })
            }
        })
        .collect();
    let totals: Vec<f64> = estimates.iter().map(|e| e.iter().sum()).collect();
    Ok(EdgeIntegralReport {
        edge,
        edge_value,
        kappa,
        ladder: ladder.to_vec(),
        growth_exponents: growth(ladder, &totals),
        verdict: ladder_verdict(&totals, 1.25),
        estimates,
        totals,
        weak_sup: None,
    })
}

/// Number of s-grid points for weak membership.
pub const WEAK_S_POINTS: usize = 40;

/// Weak `L_{p,∞}(T^d)` membership of `(Λ_± - E_s(·))_±^{-1}` by level-set
/// counting over a logarithmic s-grid from 1 to the resolution limit.
pub fn weak_edge_membership(
    sampler: &dyn BandSampler,
    gap: &Gap,
    edge: GapEdge,
    p: f64,
    ladder: &[usize],
) -> Result<EdgeIntegralReport> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
    }
    let edge_value = edge.value(gap);
    if !edge_value.is_finite() {
        return Err(Error::InvalidArgument("edge of a semi-infinite gap at infinity".into()));
    }
    let sign = edge_sign(edge);
    let d = sampler.dim();
    let bands = sampler.band_count();
    let mut sups = Vec::with_capacity(ladder.len());
    let mut estimates = Vec::with_capacity(ladder.len());
    for &m in ladder {
        let grid = TorusGrid::new(d, m);
        let n = grid.len();
        // Band-major storage: band s occupies `values[s*n..(s+1)*n]`.
        let mut values = vec![0.0; n * bands];
        let chunks: Vec<(usize, Vec<f64>)> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(n);
                let mut out = Vec::with_capacity((hi - lo) * bands);
                for l in lo..hi {
                    out.extend(
                        sampler
                            .energies(&grid.point(l))
                            .into_iter()
                            .map(|e| signed_part_power(edge_value - e, sign, 1.0)),
                    );
                }
                (lo, out)
            })
            .collect();
        for (lo, out) in chunks {
            for (i, row) in out.chunks(bands).enumerate() {
                for (s, &x) in row.iter().enumerate() {
                    values[s * n + lo + i] = x;
                }
            }
        }
        let mut per_band = Vec::with_capacity(bands);
        for f in values.chunks_mut(n) {
            f.par_sort_unstable_by(|a, b| b.total_cmp(a));
            per_band.push(weak_sup_sorted(f, grid.cell_volume(), p, d));
        }
        sups.push(per_band.iter().copied().fold(0.0, f64::max));
        estimates.push(per_band);
    }
    Ok(EdgeIntegralReport {
        edge,
        edge_value,
        kappa: p,
        ladder: ladder.to_vec(),
        growth_exponents: growth(ladder, &sups),
        verdict: ladder_verdict(&sups, 1.1),
        estimates,
        totals: sups.clone(),
        weak_sup: Some(sups),
    })
}

/// `sup_s s·mes{f > s}^{1/p}` over the s-grid, for grid values sorted
/// descending with cell volume `vol`.
fn weak_sup_sorted(f: &[f64], vol: f64, p: f64, d: usize) -> f64 {
    // The top of the s-grid keeps enough cells in the level set for the
    // lattice-point count to resolve its measure.
    let min_cells = 32usize.pow(d as u32).max(1024);
    if f.is_empty() || f[0] <= 1.0 {
        return 0.0;
    }
    let s_max = f[min_cells.min(f.len() - 1)].max(1.0);
    let mut sup: f64 = 0.0;
    for i in 0..WEAK_S_POINTS {
        let t = i as f64 / (WEAK_S_POINTS - 1) as f64;
        let s = s_max.powf(t);
        let count = f.partition_point(|&x| x > s);
        sup = sup.max(s * (count as f64 * vol).powf(1.0 / p));
    }
    sup
}
