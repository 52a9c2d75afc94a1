//! End-to-end acceptance checks. Each check runs one experiment at its
//! stated tolerance and time budget and reports a one-line outcome; the CLI
//! `verify` command and the `acceptance` test target both drive these.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counting::{
    asymptotic_table, counting_bs, counting_direct, bs_matrix, edge_counting, edge_ladder, ladder_scale,
    TableOptions, EDGE_LADDER_STEPS,
};
use crate::floquet::{
    band_structure, check_edge_regularity, find_gaps, GapEdge, RegularityOptions, SyntheticBands, Verdict,
};
use crate::gamma::{edge_integral, gamma_coefficient, weak_edge_membership, GammaOptions, IntegralVerdict};
use crate::graph::{assemble_truncated, AngularProfile, DecayingPotential, FiniteHamiltonian, PeriodicGraph};
use crate::linalg::hermitian_eigen;
use crate::pdo::{
    commutator_singular_values, cwikel_ratio, direct_section_singular_values, dp_vs_formula, pdo_singular_values,
    LatticeSymbol, SymbolTriple, TorusFunction,
};
use crate::weak_lp::{weak_products, weak_quasinorm, WeightedSequence};
use crate::{Error, Result, Sign};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<24} {:>8.2}s / {:>4}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

/// Runs `body`, which returns `(within tolerance, detail)`, and folds in the
/// time budget. Errors count as failures.
fn run(id: usize, name: &'static str, budget_secs: u64, body: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    let (ok, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > budget {
        detail.push_str("; over time budget");
    }
    Outcome {
        id,
        name,
        passed: ok && elapsed <= budget,
        detail,
        elapsed,
        budget,
    }
}

pub fn band_exactness() -> Outcome {
    run(1, "band exactness", 1, || {
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for (d, top) in [(1usize, 4.0), (2, 8.0)] {
            let bs = band_structure(&PeriodicGraph::lattice(d), 256)?;
            let (lo, hi) = bs.band_extrema[0];
            worst = worst.max(lo.abs()).max((hi - top).abs());
            parts.push(format!("Z^{d}: ({lo}, {hi})"));
        }
        Ok((worst <= 1e-10, format!("{}; max error {worst:.1e}", parts.join(", "))))
    })
}

pub fn eigensolver_contract() -> Outcome {
    run(2, "eigensolver contract", 10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst_res: f64 = 0.0;
        let mut worst_unit: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..1000 {
            let n = rng.random_range(1..=12);
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = Complex64::new(rng.random_range(-5.0..5.0), 0.0);
                for j in 0..i {
                    let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            let e = hermitian_eigen(&m)?;
            let norm = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
            let mut res: f64 = 0.0;
            for (j, &l) in e.values.iter().enumerate() {
                let v = e.vectors.column(j);
                res = res.max((&m * v - v * Complex64::new(l, 0.0)).norm() / norm);
            }
            let gram = e.vectors.adjoint() * &e.vectors - DMatrix::identity(n, n);
            let unit = gram.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            worst_res = worst_res.max(res);
            worst_unit = worst_unit.max(unit);
            if res > 1e-10 || unit > 1e-10 {
                failures += 1;
            }
        }
        Ok((
            failures == 0,
            format!("1000 matrices, {failures} failures; max residual {worst_res:.1e}, max unitarity defect {worst_unit:.1e}"),
        ))
    })
}

/// Adaptive Simpson quadrature, used as an oracle independent of the
/// torus Riemann sums.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn gamma_closed_form() -> Outcome {
    run(3, "gamma closed form", 1, || {
        let torus = adaptive_simpson(&|k: f64| 1.0 / (3.0 - 2.0 * k.cos()), -PI, PI, 1e-13);
        let closed = 2.0 / 5f64.sqrt();
        let oracle = torus * 2.0 / (2.0 * PI);
        if (oracle - closed).abs() > 1e-10 {
            return Ok((false, format!("oracle quadrature {oracle} disagrees with 2/sqrt(5)")));
        }
        let g = gamma_coefficient(
            &PeriodicGraph::lattice(1),
            -1.0,
            1.0,
            Sign::Minus,
            &AngularProfile::Const(1.0),
            &GammaOptions::default(),
        )?;
        let value = g.value.ok_or(Error::NoConvergence)?;
        let err = (value - closed).abs();
        Ok((err <= 1e-6, format!("gamma {value:.12}, oracle {oracle:.12}, error {err:.1e}")))
    })
}

/// Random symmetric `n × n` matrix with spectrum in `[0, 1] ∪ [2, 3]`.
fn random_gapped(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        let x: f64 = rng.random_range(0.0..1.0);
        if rng.random_bool(0.5) {
            x
        } else {
            2.0 + x
        }
    }));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn birman_schwinger_identity() -> Outcome {
    run(4, "birman-schwinger identity", 30, || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut mismatches = 0;
        let mut models = 0;
        let mut resampled = 0;
        let mut total_count = 0;
        while models < 200 {
            let n = rng.random_range(2..=60);
            let h = FiniteHamiltonian::from_dense(&random_gapped(&mut rng, n));
            let v: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..2.0) })
                .collect();
            let v = DecayingPotential::from_values(v)?;
            let lambda = rng.random_range(1.1..1.9);
            let tau = 10f64.powf(rng.random_range(-1.0..2.0));
            let sign = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
            let direct = match counting_direct(&h, &v, lambda, tau, sign) {
                Ok(c) => c,
                Err(Error::NearSpectrum { .. }) => {
                    resampled += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let bs = counting_bs(&bs_matrix(&h, &v, lambda)?, tau, sign)?;
            if bs.boundary {
                resampled += 1;
                continue;
            }
            models += 1;
            total_count += direct;
            if bs.value != direct {
                mismatches += 1;
            }
        }
        Ok((
            mismatches == 0,
            format!("200 models, {mismatches} mismatches, {resampled} inadmissible draws skipped, {total_count} eigenvalues counted"),
        ))
    })
}

pub fn large_coupling_trend() -> Outcome {
    run(5, "large-coupling trend", 300, || {
        let table = asymptotic_table(
            &PeriodicGraph::lattice(1),
            &AngularProfile::Const(1.0),
            1.0,
            -1.0,
            Sign::Minus,
            &[25.0, 50.0, 100.0, 200.0],
            &[125, 250, 500, 1000, 2000],
            &TableOptions::default(),
        )?;
        let rows = &table.rows;
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let consistent = rows.iter().all(|r| r.n_bs == r.n_direct && !r.unstabilized && !r.boundary);
        let last = *ratios.last().unwrap();
        let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        let k = dev.len();
        let monotone = dev[k - 2] <= dev[k - 3] && dev[k - 1] <= dev[k - 2];
        let summary: Vec<String> = rows
            .iter()
            .map(|r| format!("tau {} L {} N {} ratio {:.4}", r.tau, r.radius, r.n_bs, r.ratio))
            .collect();
        Ok((
            consistent && (0.8..=1.2).contains(&last) && monotone,
            format!("{}; counts agree and stabilized: {consistent}", summary.join(", ")),
        ))
    })
}

/// `1/(|n| log(2 + |n|))`, with the value at `|n| = 1` used at the origin.
pub fn log_damped_potential(graph: &PeriodicGraph, radius: usize) -> Result<DecayingPotential> {
    DecayingPotential::from_fn(graph, radius, |x| {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
        1.0 / (r * (2.0 + r).ln())
    })
}

pub fn edge_count_trend() -> Outcome {
    run(6, "edge count trend", 300, || {
        let z = PeriodicGraph::lattice(1);
        let bs = band_structure(&z, 64)?;
        let gap = find_gaps(&bs)[0];
        let lambdas = edge_ladder(&gap, GapEdge::Right, ladder_scale(&gap, (bs.global_min(), bs.global_max())), EDGE_LADDER_STEPS);
        let radius = 80_000;
        let h = assemble_truncated(&z, radius);
        let v = log_damped_potential(&z, radius)?;
        let mut scaled = Vec::new();
        for tau in [25.0, 50.0, 100.0, 200.0] {
            let e = edge_counting(&h, &v, GapEdge::Right, tau, &lambdas)?;
            scaled.push((tau, e.estimate, e.estimate as f64 / tau));
        }
        let decreasing = scaled.windows(2).all(|w| w[1].2 < w[0].2);
        let text: Vec<String> = scaled.iter().map(|(t, n, r)| format!("tau {t}: N {n}, N/tau {r:.4}")).collect();
        Ok((decreasing, format!("L {radius}; {}", text.join(", "))))
    })
}

pub fn edge_regularity() -> Outcome {
    run(7, "edge regularity", 30, || {
        let opts = RegularityOptions::default();
        let mut ok = true;
        let mut parts = Vec::new();
        for d in [2usize, 3] {
            let g = PeriodicGraph::lattice(d);
            let gap = find_gaps(&band_structure(&g, 16)?)[0];
            let r = check_edge_regularity(&g, &gap, GapEdge::Right, &opts)?;
            let err = r
                .hessians
                .iter()
                .map(|h| (h - DMatrix::identity(d, d) * 2.0).abs().max())
                .fold(0.0, f64::max);
            ok &= r.verdict == Verdict::Regular && r.hessians.len() == 1 && err <= 1e-6;
            parts.push(format!("Z^{d}: {:?}, Hessian error {err:.1e}", r.verdict));
        }
        let quartic = SyntheticBands::new(2, 1, |k: &[f64]| vec![k[0].powi(4) + k[1] * k[1]]);
        let gap = find_gaps(&band_structure(&quartic, 32)?)[0];
        let r = check_edge_regularity(&quartic, &gap, GapEdge::Right, &opts)?;
        ok &= r.verdict == Verdict::NonRegular;
        parts.push(format!("quartic: {:?}", r.verdict));
        Ok((ok, parts.join(", ")))
    })
}

pub fn edge_conditions() -> Outcome {
    run(8, "edge conditions", 30, || {
        let z3 = PeriodicGraph::lattice(3);
        let gap3 = find_gaps(&band_structure(&z3, 8)?)[0];
        let k1 = edge_integral(&z3, &gap3, GapEdge::Right, 1.0, &[32, 64, 128, 256])?;
        let weak = weak_edge_membership(&z3, &gap3, GapEdge::Right, 1.5, &[64, 128, 256])?;
        let z1 = PeriodicGraph::lattice(1);
        let gap1 = find_gaps(&band_structure(&z1, 8)?)[0];
        let chain = edge_integral(&z1, &gap1, GapEdge::Right, 1.0, &[64, 128, 256, 512])?;
        let exponent = *chain.growth_exponents.last().unwrap();
        let ok = k1.verdict == IntegralVerdict::Convergent
            && weak.verdict == IntegralVerdict::Convergent
            && chain.verdict == IntegralVerdict::Divergent
            && (exponent - 1.0).abs() <= 0.2;
        Ok((
            ok,
            format!(
                "Z^3 kappa=1 {:?} {:.4?}; Z^3 weak p=3/2 {:?} {:.4?}; Z^1 kappa=1 {:?}, growth exponent {exponent:.4}",
                k1.verdict, k1.totals, weak.verdict, weak.totals, chain.verdict
            ),
        ))
    })
}

/// `sup_s s·#{v > s}^{1/p}` by sweeping `s` up to each distinct value,
/// counting by a plain scan.
fn quasinorm_by_sweep(values: &[f64], p: f64) -> f64 {
    let mut best: f64 = 0.0;
    for &a in values {
        if a <= 0.0 {
            continue;
        }
        // Just below `a` every value >= a exceeds s.
        let count = values.iter().filter(|&&v| v >= a).count();
        best = best.max(a * (count as f64).powf(1.0 / p));
    }
    best
}

pub fn weak_quasinorm_exactness() -> Outcome {
    run(9, "weak quasinorm exactness", 5, || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let n = rng.random_range(1..200);
            let p = [0.5, 1.0, 1.5, 2.0, 3.0][rng.random_range(0..5)];
            let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            // Ties exercise the strict inequality.
            for i in 1..n {
                if rng.random_bool(0.2) {
                    values[i] = values[i - 1];
                }
            }
            let q = weak_quasinorm(&WeightedSequence::new(values.clone())?, p);
            let oracle = quasinorm_by_sweep(&values, p);
            worst = worst.max((q - oracle).abs() / oracle.max(f64::MIN_POSITIVE));
        }
        let mut power_dev: f64 = 0.0;
        for p in [0.5, 1.0, 2.0] {
            let s = WeightedSequence::new((1..=5000).map(|m| (m as f64).powf(-1.0 / p)).collect())?;
            power_dev = power_dev.max((weak_quasinorm(&s, p) - 1.0).abs());
        }
        Ok((
            worst <= 1e-12 && power_dev <= 4.0 * f64::EPSILON,
            format!("max relative deviation from sweep {worst:.1e}; a_m = m^(-1/p) gives 1 within {power_dev:.1e}"),
        ))
    })
}

fn random_torus_function(rng: &mut ChaCha8Rng, dim: usize) -> TorusFunction {
    match rng.random_range(0..3) {
        0 => TorusFunction::Const(Complex64::new(rng.random_range(0.2..2.0), 0.0)),
        1 => TorusFunction::Trig(
            (0..3)
                .map(|_| {
                    let t: Vec<i64> = (0..dim).map(|_| rng.random_range(-2..=2)).collect();
                    (t, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                })
                .collect(),
        ),
        _ => TorusFunction::HalfTorus {
            axis: rng.random_range(0..dim),
        },
    }
}

pub fn pdo_formula() -> Outcome {
    run(10, "pdo s-number formula", 120, || {
        let one = TorusFunction::Const(Complex64::new(1.0, 0.0));
        let v = AngularProfile::Const(1.0);
        let report = dp_vs_formula(&one, &v, &one, 1.0, 1, 512, 4096, None)?;
        let formula = report.formula_value.unwrap_or(f64::NAN);
        let dp = report.dp_empirical.ok_or(Error::NoConvergence)?;
        let within = |x: f64| (x - 2.0).abs() <= 0.2;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let dim = rng.random_range(1..=2);
            let radius = if dim == 1 { rng.random_range(1..=4) } else { rng.random_range(1..=2) };
            let w = LatticeSymbol::from_fn(dim, radius, |_| {
                if rng.random_bool(0.6) {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })?;
            let triple = SymbolTriple {
                f: random_torus_function(&mut rng, dim),
                w,
                g: random_torus_function(&mut rng, dim),
                p: 1.0,
                grid: 8 * radius,
            };
            let gram = pdo_singular_values(&triple)?.svalues;
            let direct = direct_section_singular_values(&triple)?;
            let scale = direct.max().max(f64::MIN_POSITIVE);
            for (i, &s) in gram.values().iter().enumerate() {
                worst = worst.max((s - direct.values()[i]).abs() / scale);
            }
        }
        let ok = (formula - 2.0).abs() <= 1e-8 && within(dp.sup_est) && within(dp.inf_est) && worst <= 1e-8;
        Ok((
            ok,
            format!(
                "formula {formula}, window estimate [{:.4}, {:.4}] from {} jumps; Gram vs direct max deviation {worst:.1e}",
                dp.inf_est, dp.sup_est, dp.samples
            ),
        ))
    })
}

pub fn cwikel_stability() -> Outcome {
    run(11, "cwikel stability", 60, || {
        let f = TorusFunction::HalfTorus { axis: 0 };
        let v = AngularProfile::Const(1.0);
        let mut ratios = Vec::new();
        for radius in [64, 128, 256] {
            let w = LatticeSymbol::homogeneous(1, &v, 1.0, radius)?;
            ratios.push(cwikel_ratio(&f, &w, 1.0, 2.0, 8 * radius)?);
        }
        let drift = ratios.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max);
        Ok((drift < 0.1, format!("ratios {ratios:.6?}, max drift {drift:.1e}")))
    })
}

pub fn commutator_decay() -> Outcome {
    run(12, "commutator decay", 60, || {
        let w = LatticeSymbol::homogeneous(1, &AngularProfile::Const(1.0), 1.0, 512)?;
        let s = commutator_singular_values(&TorusFunction::parse("exp:1", 1)?, &w)?;
        let products = weak_products(&s, 1.0);
        let (m10, m200) = (products[9], products[199]);
        let zero = commutator_singular_values(&TorusFunction::parse("const:1", 1)?, &w)?;
        let exact_zero = zero.values().iter().all(|&x| x == 0.0);
        Ok((
            m10 >= 2.0 * m200 && exact_zero,
            format!("m s_m: {m10:.4} at m=10, {m200:.4} at m=200; constant symbol gives zero: {exact_zero}"),
        ))
    })
}

/// Every check in order.
pub fn all() -> Vec<fn() -> Outcome> {
    vec![
        band_exactness,
        eigensolver_contract,
        gamma_closed_form,
        birman_schwinger_identity,
        large_coupling_trend,
        edge_count_trend,
        edge_regularity,
        edge_conditions,
        weak_quasinorm_exactness,
        pdo_formula,
        cwikel_stability,
        commutator_decay,
    ]
}
