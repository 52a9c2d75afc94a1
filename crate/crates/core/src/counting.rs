//! Eigenvalue counting functions `N_±(λ, τ)` on box compressions, by the
//! Birman–Schwinger route and by direct inertia differences.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{BandSampler, GapEdge, Gap};
use crate::gamma::{gamma_coefficient, GammaOptions};
use crate::graph::{assemble_truncated, sample_potential, AngularProfile, DecayingPotential, FiniteHamiltonian, PeriodicGraph};
use crate::linalg::{dense_inertia, SymmetricMatrix};
use crate::Sign;

/// Minimal admissible distance from `λ` to the spectrum of `H_L`.
pub const SPECTRUM_MARGIN: f64 = 1e-8;
/// Half-width of the window around `1/τ` that marks a count as ambiguous.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// `X = V^{1/2}(λ - H_L)^{-1}V^{1/2}` restricted to the support of `V`.
#[derive(Debug, Clone)]
pub struct BsMatrix {
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
    /// Row of `H_L` behind each row of `X`.
    pub rows: Vec<usize>,
}

impl BsMatrix {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `max |X - Xᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let x = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..x.nrows() {
            for j in 0..i {
                worst = worst.max((x[(i, j)] - x[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Rejects `λ` closer than `margin` to an eigenvalue of `m`, naming it.
fn check_resolvent_set(m: &SymmetricMatrix, lambda: f64, margin: f64) -> Result<()> {
    let lo = m.count_below(lambda - margin);
    let hi = m.count_below(lambda + margin);
    if lo == hi {
        return Ok(());
    }
    let eigenvalue = m.eigenvalue_in(lambda - margin, lambda + margin).unwrap_or(lambda);
    Err(Error::NearSpectrum {
        lambda,
        eigenvalue,
        distance: (eigenvalue - lambda).abs(),
    })
}

pub fn bs_matrix(h: &FiniteHamiltonian, v: &DecayingPotential, lambda: f64) -> Result<BsMatrix> {
    if h.dim() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "potential has {} sites, Hamiltonian {}",
            v.len(),
            h.dim()
        )));
    }
    let m = h.matrix();
    check_resolvent_set(&m, lambda, SPECTRUM_MARGIN)?;
    let rows: Vec<usize> = (0..v.len()).filter(|&a| v.values()[a] > 0.0).collect();
    let roots: Vec<f64> = rows.iter().map(|&a| v.values()[a].sqrt()).collect();
    let r = rows.len();
    if r == 0 {
        return Ok(BsMatrix {
            lambda,
            matrix: DMatrix::zeros(0, 0),
            rows,
        });
    }
    let mut rhs = DMatrix::zeros(h.dim(), r);
    for (c, (&a, &w)) in rows.iter().zip(&roots).enumerate() {
        rhs[(a, c)] = w;
    }
    let y = m.solve_resolvent(lambda, &rhs)?;
    drop(rhs);
    let matrix = if r == h.dim() {
        let mut x = y;
        for (i, &w) in roots.iter().enumerate() {
            x.row_mut(i).scale_mut(w);
        }
        x
    } else {
        DMatrix::from_fn(r, r, |i, j| roots[i] * y[(rows[i], j)])
    };
    Ok(BsMatrix { lambda, matrix, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Count {
    pub value: usize,
    /// A threshold sits within the ambiguity window of an eigenvalue.
    pub boundary: bool,
}

/// Number of eigenvalues of `m` strictly greater than `t` (`m` symmetric,
/// only the lower triangle is read).
fn count_above(m: &DMatrix<f64>, t: f64) -> usize {
    let mut shifted = m.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= t;
    }
    dense_inertia(&shifted).positive
}

/// `n_±(1/τ, X)`: eigenvalues of `±X` above `1/τ`.
pub fn counting_bs(x: &BsMatrix, tau: f64, sign: Sign) -> Result<Count> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} must be positive")));
    }
    if x.dim() == 0 {
        return Ok(Count { value: 0, boundary: false });
    }
    let signed = match sign {
        Sign::Plus => x.matrix.clone(),
        Sign::Minus => -x.matrix.clone(),
    };
    let t = 1.0 / tau;
    let value = count_above(&signed, t);
    let boundary = count_above(&signed, t - BOUNDARY_TOL) != count_above(&signed, t + BOUNDARY_TOL);
    Ok(Count { value, boundary })
}

/// Inertia difference between `H_L` and `H_L ± τV` at `λ`.
pub fn counting_direct(h: &FiniteHamiltonian, v: &DecayingPotential, lambda: f64, tau: f64, sign: Sign) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} must be positive")));
    }
    if h.dim() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "potential has {} sites, Hamiltonian {}",
            v.len(),
            h.dim()
        )));
    }
    let base = h.matrix();
    check_resolvent_set(&base, lambda, SPECTRUM_MARGIN)?;
    let shift: Vec<f64> = v
        .values()
        .iter()
        .map(|&x| match sign {
            Sign::Plus => tau * x,
            Sign::Minus => -tau * x,
        })
        .collect();
    let perturbed = h.combined(1.0, &shift);
    check_resolvent_set(&perturbed, lambda, SPECTRUM_MARGIN)?;
    let n0 = base.count_below(lambda);
    let n1 = perturbed.count_below(lambda);
    Ok(match sign {
        Sign::Plus => n0.saturating_sub(n1),
        Sign::Minus => n1.saturating_sub(n0),
    })
}

/// Number of ladder steps used by default.
pub const EDGE_LADDER_STEPS: usize = 12;

/// `λ_k = Λ ∓ w·2^{-k}`, approaching the edge from inside the gap.
pub fn edge_ladder(gap: &Gap, edge: GapEdge, scale: f64, steps: usize) -> Vec<f64> {
    let edge_value = edge.value(gap);
    (1..=steps)
        .map(|k| {
            let step = scale * 0.5f64.powi(k as i32);
            match edge {
                GapEdge::Left => edge_value + step,
                GapEdge::Right => edge_value - step,
            }
        })
        .collect()
}

/// Scale of the approach ladder: the gap width, or for a semi-infinite gap
/// the total width of the spectrum.
pub fn ladder_scale(gap: &Gap, spectrum: (f64, f64)) -> f64 {
    let w = gap.width();
    if w.is_finite() {
        w
    } else {
        spectrum.1 - spectrum.0
    }
}

#[derive(Debug, Clone)]
pub struct EdgeCount {
    pub lambdas: Vec<f64>,
    pub counts: Vec<usize>,
    pub estimate: usize,
    pub stabilized: bool,
}

/// Counts `N_±(λ_k, τ)` along a ladder towards the edge. The sign is the
/// one whose counting function has the edge as its limit point: `+` at the
/// upper end of the band below, `-` at the lower end of the band above.
pub fn edge_counting(
    h: &FiniteHamiltonian,
    v: &DecayingPotential,
    edge: GapEdge,
    tau: f64,
    lambdas: &[f64],
) -> Result<EdgeCount> {
    let sign = match edge {
        GapEdge::Left => Sign::Plus,
        GapEdge::Right => Sign::Minus,
    };
    let counts = lambdas
        .iter()
        .map(|&l| counting_direct(h, v, l, tau, sign))
        .collect::<Result<Vec<_>>>()?;
    // Counts are monotone along the ladder, so the last value is the best
    // available lower bound for the limit whether or not it has settled.
    let stabilized = counts.len() >= 2 && counts[counts.len() - 1] == counts[counts.len() - 2];
    let estimate = counts.last().copied().unwrap_or(0);
    Ok(EdgeCount {
        lambdas: lambdas.to_vec(),
        counts,
        estimate,
        stabilized,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingRow {
    pub lambda: f64,
    pub tau: f64,
    pub radius: usize,
    pub n_bs: usize,
    pub n_direct: usize,
    pub gamma: f64,
    pub ratio: f64,
    pub unstabilized: bool,
    pub boundary: bool,
}

impl CountingRow {
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.unstabilized {
            f.push("unstabilized");
        }
        if self.boundary {
            f.push("boundary");
        }
        f.join(";")
    }
}

#[derive(Debug, Clone)]
pub struct CountingTable {
    pub p: f64,
    pub sign: Sign,
    pub profile: AngularProfile,
    pub rows: Vec<CountingRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct TableOptions {
    /// Support heuristic constant `c` in `L >= c·τ^{p/d}`.
    pub support_constant: f64,
    pub gamma: GammaOptions,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            support_constant: 10.0,
            gamma: GammaOptions::default(),
        }
    }
}

/// Large-coupling comparison of `N_±(λ, τ)` with `τ^p Γ_p^±(λ)`.
///
/// For each `τ` the direct count is followed along the prefix of `radii`
/// ending at the first radius meeting the support heuristic; the row is
/// taken at the largest radius whose count equals that of its predecessor,
/// and the Birman–Schwinger count is evaluated there.
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_table(
    graph: &PeriodicGraph,
    profile: &AngularProfile,
    p: f64,
    lambda: f64,
    sign: Sign,
    taus: &[f64],
    radii: &[usize],
    options: &TableOptions,
) -> Result<CountingTable> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radius list must be nonempty and increasing".into()));
    }
    let d = graph.dim() as f64;
    let needed: Vec<usize> = taus
        .iter()
        .map(|&tau| {
            let need = options.support_constant * tau.powf(p / d);
            radii.iter().position(|&l| l as f64 >= need).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "largest radius {} is below the support requirement {need:.1} for tau = {tau}",
                    radii[radii.len() - 1]
                ))
            })
        })
        .collect::<Result<_>>()?;
    let gamma = gamma_coefficient(graph as &dyn BandSampler, lambda, p, sign, profile, &options.gamma)?
        .value
        .ok_or(Error::InsideBand(lambda))?;
    let used = needed.iter().copied().max().unwrap_or(0);
    let prepared: Vec<(FiniteHamiltonian, DecayingPotential)> = radii[..=used]
        .par_iter()
        .map(|&l| Ok((assemble_truncated(graph, l), sample_potential(graph, profile, p, l)?)))
        .collect::<Result<_>>()?;
    let rows = taus
        .par_iter()
        .zip(&needed)
        .map(|(&tau, &last)| {
            let counts = prepared[..=last]
                .iter()
                .map(|(h, v)| counting_direct(h, v, lambda, tau, sign))
                .collect::<Result<Vec<_>>>()?;
            let chosen = (1..counts.len()).rev().find(|&i| counts[i] == counts[i - 1]);
            let pick = chosen.unwrap_or(last);
            let (h, v) = &prepared[pick];
            let x = bs_matrix(h, v, lambda)?;
            let bs = counting_bs(&x, tau, sign)?;
            Ok(CountingRow {
                lambda,
                tau,
                radius: radii[pick],
                n_bs: bs.value,
                n_direct: counts[pick],
                gamma,
                ratio: bs.value as f64 / (tau.powf(p) * gamma),
                unstabilized: chosen.is_none(),
                boundary: bs.boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountingTable {
        p,
        sign,
        profile: profile.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{band_structure, find_gaps};
    use crate::graph::PeriodicGraph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_by_one() -> (FiniteHamiltonian, DecayingPotential) {
        let h = FiniteHamiltonian::from_dense(&DMatrix::from_element(1, 1, 2.0));
        (h, DecayingPotential::from_values(vec![1.0]).unwrap())
    }

    #[test]
    fn scalar_model() {
        let (h, v) = one_by_one();
        let x = bs_matrix(&h, &v, -1.0).unwrap();
        assert!((x.matrix[(0, 0)] + 1.0 / 3.0).abs() < 1e-15);
        for tau in [0.5, 2.9, 3.1, 4.0, 50.0] {
            let expected = usize::from(tau > 3.0);
            assert_eq!(counting_bs(&x, tau, Sign::Minus).unwrap().value, expected);
            assert_eq!(counting_direct(&h, &v, -1.0, tau, Sign::Minus).unwrap(), expected);
            assert_eq!(counting_bs(&x, tau, Sign::Plus).unwrap().value, 0);
            assert_eq!(counting_direct(&h, &v, -1.0, tau, Sign::Plus).unwrap(), 0);
        }
        assert!(counting_bs(&x, 3.0, Sign::Minus).unwrap().boundary);
    }

    #[test]
    fn zero_potential_is_empty() {
        let z = PeriodicGraph::lattice(1);
        let h = assemble_truncated(&z, 3);
        let v = DecayingPotential::zeros(h.index().clone());
        let x = bs_matrix(&h, &v, -1.0).unwrap();
        assert_eq!(x.dim(), 0);
        assert_eq!(counting_bs(&x, 10.0, Sign::Minus).unwrap().value, 0);
        assert_eq!(counting_direct(&h, &v, -1.0, 10.0, Sign::Minus).unwrap(), 0);
    }

    #[test]
    fn near_spectrum_names_eigenvalue() {
        let (h, v) = one_by_one();
        match bs_matrix(&h, &v, 2.0 + 1e-10) {
            Err(Error::NearSpectrum { eigenvalue, .. }) => assert!((eigenvalue - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scalar_edge_ladder() {
        let (h, v) = one_by_one();
        let gap = Gap {
            lower: f64::NEG_INFINITY,
            upper: 2.0,
            kind: crate::floquet::GapKind::LeftSemiInfinite,
            band_below: None,
            band_above: Some(0),
            grid_step: 0.0,
        };
        let lambdas = edge_ladder(&gap, GapEdge::Right, 4.0, EDGE_LADDER_STEPS);
        let r = edge_counting(&h, &v, GapEdge::Right, 1.5, &lambdas).unwrap();
        // 2 - t crosses λ_k once t > 2 - λ_k = 4·2^{-k}.
        for (k, (&l, &c)) in r.lambdas.iter().zip(&r.counts).enumerate() {
            assert_eq!(c, usize::from(1.5 > 2.0 - l), "k = {}", k + 1);
        }
        assert_eq!(r.estimate, 1);
        assert!(r.stabilized);
    }

    #[test]
    fn bs_identity_on_chain_box() {
        let z = PeriodicGraph::lattice(1);
        let h = assemble_truncated(&z, 40);
        let v = sample_potential(&z, &AngularProfile::Const(1.0), 1.0, 40).unwrap();
        let x = bs_matrix(&h, &v, -1.0).unwrap();
        assert!(x.asymmetry() < 1e-12);
        let mut last = 0;
        for tau in [0.5, 1.0, 3.0, 7.0, 15.0, 40.0] {
            let bs = counting_bs(&x, tau, Sign::Minus).unwrap();
            let direct = counting_direct(&h, &v, -1.0, tau, Sign::Minus).unwrap();
            assert_eq!(bs.value, direct);
            assert!(bs.value >= last);
            last = bs.value;
        }
    }

    /// `n(s, A*A) = n(√s, A)` through singular values of random rectangles.
    #[test]
    fn gram_counting_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (r, c) = (rng.random_range(1..8), rng.random_range(1..8));
            let a = DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
            let sv = a.clone().svd(false, false).singular_values;
            let gram = a.transpose() * &a;
            for s in [0.01f64, 0.1, 0.5, 1.0, 2.0] {
                let n_a = sv.iter().filter(|&&x| x > s.sqrt()).count();
                assert_eq!(count_above(&gram, s), n_a);
            }
        }
    }

    /// `n(s + t, A + B) <= n(s, A) + n(t, B)` for symmetric pairs.
    #[test]
    fn fan_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..9);
            let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            a = &a + a.transpose();
            let mut b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            b = &b + b.transpose();
            let sum = &a + &b;
            for s in [0.05, 0.3, 1.0, 2.0] {
                for t in [0.05, 0.3, 1.0, 2.0] {
                    assert!(count_above(&sum, s + t) <= count_above(&a, s) + count_above(&b, t));
                }
            }
        }
    }

    #[test]
    fn table_rows_are_consistent() {
        let z = PeriodicGraph::lattice(1);
        let table = asymptotic_table(
            &z,
            &AngularProfile::Const(1.0),
            1.0,
            -1.0,
            Sign::Minus,
            &[4.0, 8.0],
            &[20, 40, 80, 160],
            &TableOptions::default(),
        )
        .unwrap();
        for row in &table.rows {
            assert_eq!(row.n_bs, row.n_direct);
            assert!(row.ratio >= 0.0);
        }
        assert!(table.rows[1].n_bs >= table.rows[0].n_bs);
    }

    #[test]
    fn support_requirement_is_enforced() {
        let z = PeriodicGraph::lattice(1);
        let r = asymptotic_table(
            &z,
            &AngularProfile::Const(1.0),
            1.0,
            -1.0,
            Sign::Minus,
            &[100.0],
            &[10, 20],
            &TableOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn truncation_eigenvalues_within_bands() {
        let g = PeriodicGraph::lattice(2);
        let bs = band_structure(&g, 32).unwrap();
        let h = assemble_truncated(&g, 3).to_dense();
        let e = crate::linalg::symmetric_eigenvalues(&h).unwrap();
        assert!(e[0] >= bs.global_min() - 1e-10);
        assert!(*e.last().unwrap() <= bs.global_max() + 1e-10);
        assert!(find_gaps(&bs).len() >= 2);
    }
}
