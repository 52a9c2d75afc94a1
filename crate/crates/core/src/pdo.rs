//! Finite sections of discrete pseudodifferential operators `fΦWΦ*g` and
//! `fΦW`, with `(Φu)(k) = (2π)^{-d/2} Σ_n e^{-in·k} u(n)`.
//!
//! The lattice side is truncated to `|n|_∞ <= L`; the torus side enters only
//! through Fourier coefficients of `|f|²`, `|g|²` computed on a uniform grid.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gamma::sphere_integral;
use crate::graph::{AngularProfile, BoxIndex};
use crate::linalg::{hermitian_eigen, symmetric_eigen, symmetric_eigenvalues};
use crate::torus::TorusGrid;
use crate::weak_lp::{dp_window, weak_quasinorm, DpWindowEstimate, WeightedSequence};

/// Complex function on the torus.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusFunction {
    Const(Complex64),
    /// `Σ_t a_t e^{i t·k}`.
    Trig(Vec<(Vec<i64>, Complex64)>),
    /// Indicator of `{k : k_axis ∈ [0, π]}`.
    HalfTorus { axis: usize },
    /// Nearest-node lookup in a sampled table.
    Table { points: Vec<Vec<f64>>, values: Vec<Complex64> },
}

impl TorusFunction {
    /// Parses `const:c`, `exp:t_1,..,t_d`, `trig:t=a;t=a;...`, `half:axis`
    /// or `table:path`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidProfile(text.to_string(), msg.to_string());
        let (kind, body) = text.split_once(':').unwrap_or((text, ""));
        let lag = |s: &str| -> Result<Vec<i64>> {
            let t: Vec<i64> = s
                .split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| bad("lag components must be integers")))
                .collect::<Result<_>>()?;
            if t.len() != dim {
                return Err(bad(&format!("lag needs {dim} components")));
            }
            Ok(t)
        };
        match kind {
            "const" => body
                .trim()
                .parse::<f64>()
                .map(|c| TorusFunction::Const(Complex64::new(c, 0.0)))
                .map_err(|_| bad("constant must be a real number")),
            "exp" => Ok(TorusFunction::Trig(vec![(lag(body)?, Complex64::new(1.0, 0.0))])),
            "trig" => {
                let mut terms = Vec::new();
                for term in body.split(';').filter(|s| !s.trim().is_empty()) {
                    let (t, a) = term.split_once('=').ok_or_else(|| bad("terms look like t=a"))?;
                    let a: f64 = a.trim().parse().map_err(|_| bad("coefficient must be a real number"))?;
                    terms.push((lag(t)?, Complex64::new(a, 0.0)));
                }
                Ok(TorusFunction::Trig(terms))
            }
            "half" => {
                let axis: usize = if body.is_empty() {
                    0
                } else {
                    body.trim().parse().map_err(|_| bad("axis must be an index"))?
                };
                if axis >= dim {
                    return Err(bad("axis out of range"));
                }
                Ok(TorusFunction::HalfTorus { axis })
            }
            "table" => Self::load_table(Path::new(body), dim),
            _ => Err(bad("expected const:, exp:, trig:, half: or table:")),
        }
    }

    /// Rows of `k_1 .. k_d re [im]`; `#` starts a comment.
    pub fn load_table(path: &Path, dim: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_table(&text, &path.display().to_string(), dim)
    }

    pub fn parse_table(text: &str, origin: &str, dim: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    path: origin.to_string(),
                    line: i + 1,
                    column: 1,
                    message: e.to_string(),
                })?;
            if fields.len() != dim + 1 && fields.len() != dim + 2 {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: i + 1,
                    column: 1,
                    message: format!("expected {} or {} numbers, found {}", dim + 1, dim + 2, fields.len()),
                });
            }
            points.push(fields[..dim].to_vec());
            values.push(Complex64::new(fields[dim], fields.get(dim + 1).copied().unwrap_or(0.0)));
        }
        if points.is_empty() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: 1,
                column: 1,
                message: "table has no rows".into(),
            });
        }
        Ok(TorusFunction::Table { points, values })
    }

    pub fn eval(&self, k: &[f64]) -> Complex64 {
        match self {
            TorusFunction::Const(c) => *c,
            TorusFunction::Trig(terms) => terms
                .iter()
                .map(|(t, a)| {
                    let phase: f64 = t.iter().zip(k).map(|(&t, &k)| t as f64 * k).sum();
                    a * Complex64::cis(phase)
                })
                .sum(),
            TorusFunction::HalfTorus { axis } => {
                if (0.0..=PI).contains(&k[*axis]) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            TorusFunction::Table { points, values } => {
                let dist = |p: &[f64]| -> f64 {
                    p.iter()
                        .zip(k)
                        .map(|(a, b)| {
                            let d = crate::torus::wrap_angle(a - b);
                            d * d
                        })
                        .sum()
                };
                let best = (0..points.len())
                    .min_by(|&a, &b| dist(&points[a]).total_cmp(&dist(&points[b])))
                    .unwrap_or(0);
                values[best]
            }
        }
    }

    /// Trigonometric coefficients `a_t`, when the function is a polynomial.
    pub fn trig_terms(&self, dim: usize) -> Option<Vec<(Vec<i64>, Complex64)>> {
        match self {
            TorusFunction::Const(c) => Some(vec![(vec![0; dim], *c)]),
            TorusFunction::Trig(t) => Some(t.clone()),
            _ => None,
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            TorusFunction::Const(c) => TorusFunction::Const(c.conj()),
            TorusFunction::Trig(t) => {
                TorusFunction::Trig(t.iter().map(|(t, a)| (t.iter().map(|x| -x).collect(), a.conj())).collect())
            }
            TorusFunction::HalfTorus { axis } => TorusFunction::HalfTorus { axis: *axis },
            TorusFunction::Table { points, values } => TorusFunction::Table {
                points: points.clone(),
                values: values.iter().map(|v| v.conj()).collect(),
            },
        }
    }

    /// `(∫_{T^d} |h|^q dk)^{1/q}` by the uniform rule.
    pub fn lq_norm(&self, dim: usize, q: f64, grid: usize) -> f64 {
        let g = TorusGrid::new(dim, grid);
        let sum: f64 = (0..g.len()).map(|l| self.eval(&g.point(l)).norm().powf(q)).sum();
        (sum * g.cell_volume()).powf(1.0 / q)
    }
}

/// Symbol `W` sampled on the cube `|n|_∞ <= L`, cells in [`BoxIndex`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSymbol {
    index: BoxIndex,
    values: Vec<Complex64>,
}

impl LatticeSymbol {
    /// `W(n) = v(n/|n|) |n|^{-d/p}`, `W(0) = 0`.
    pub fn homogeneous(dim: usize, profile: &AngularProfile, p: f64, radius: usize) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
        }
        Self::from_fn(dim, radius, |n| {
            let r = n.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let dir: Vec<f64> = n.iter().map(|&x| x as f64 / r).collect();
            Complex64::new(profile.eval(&dir) * r.powf(-(dim as f64) / p), 0.0)
        })
    }

    pub fn from_fn(dim: usize, radius: usize, mut f: impl FnMut(&[i64]) -> Complex64) -> Result<Self> {
        let index = BoxIndex::new(dim, 1, radius);
        let values: Vec<Complex64> = (0..index.len()).map(|c| f(&index.cell(c))).collect();
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidArgument("symbol has non-finite values".into()));
        }
        Ok(LatticeSymbol { index, values })
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn radius(&self) -> usize {
        self.index.radius()
    }

    pub fn cells(&self) -> Vec<Vec<i64>> {
        (0..self.index.len()).map(|c| self.index.cell(c)).collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| v.norm() > 0.0).count()
    }

    pub fn conj(&self) -> Self {
        LatticeSymbol {
            index: self.index.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        LatticeSymbol {
            index: self.index.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn magnitudes(&self) -> Result<WeightedSequence> {
        WeightedSequence::from_magnitudes(self.values.iter().map(|v| v.norm()))
    }
}

/// `c_r = (2π)^{-d} ∫ |h(k)|² e^{-ir·k} dk` for `|r|_∞ <= R`.
#[derive(Debug, Clone)]
pub struct ModSqCoeffs {
    max_lag: usize,
    values: Vec<Complex64>,
}

impl ModSqCoeffs {
    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn get(&self, r: &[i64]) -> Complex64 {
        let side = 2 * self.max_lag as i64 + 1;
        let mut idx = 0i64;
        for &x in r {
            debug_assert!(x.unsigned_abs() as usize <= self.max_lag);
            idx = idx * side + x + self.max_lag as i64;
        }
        self.values[idx as usize]
    }
}

pub fn fourier_modsq_coeffs(h: &TorusFunction, dim: usize, grid: usize, max_lag: usize) -> Result<ModSqCoeffs> {
    if 4 * max_lag > grid {
        return Err(Error::InvalidArgument(format!(
            "lag {max_lag} exceeds a quarter of the torus grid {grid}; aliasing margin violated"
        )));
    }
    let g = TorusGrid::new(dim, grid);
    let weights: Vec<f64> = (0..g.len()).map(|l| h.eval(&g.point(l)).norm_sqr()).collect();
    let lags = BoxIndex::new(dim, 1, max_lag);
    let norm = 1.0 / g.len() as f64;
    let values = (0..lags.len())
        .into_par_iter()
        .map(|c| {
            let r = lags.cell(c);
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                // r·k_m = -π Σr + 2π (r·m mod M)/M, reduced exactly in integers.
                let m = g.multi_index(l);
                let dot: i64 = r.iter().zip(&m).map(|(&r, &m)| r * m as i64).sum();
                let total: i64 = r.iter().sum();
                let phase = -PI * total as f64 + 2.0 * PI * dot.rem_euclid(grid as i64) as f64 / grid as f64;
                acc += w * Complex64::cis(-phase);
            }
            acc * norm
        })
        .collect();
    Ok(ModSqCoeffs { max_lag, values })
}

/// `K_{nm} = c_{m-n}`, the Gram matrix `(hΦE)*(hΦE)` on the box `E`.
fn gram(coeffs: &ModSqCoeffs, cells: &[Vec<i64>]) -> DMatrix<Complex64> {
    let n = cells.len();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| {
                    let r: Vec<i64> = cells[b].iter().zip(&cells[a]).map(|(m, n)| m - n).collect();
                    coeffs.get(&r)
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |a, b| rows[a][b])
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

fn is_real(m: &DMatrix<Complex64>) -> bool {
    let scale = m.iter().fold(0.0f64, |s, z| s.max(z.norm())).max(f64::MIN_POSITIVE);
    m.iter().all(|z| z.im.abs() <= 1e-14 * scale)
}

fn is_diagonal(m: &DMatrix<Complex64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() == 0.0))
}

/// Indices of rows that are not identically zero. For a Hermitian matrix
/// the complement spans an exact null block, kept out of the eigensolver so
/// it cannot pick up rounding noise.
fn live_indices(m: &DMatrix<Complex64>) -> Vec<usize> {
    (0..m.nrows()).filter(|&i| m.row(i).iter().any(|z| *z != Complex64::new(0.0, 0.0))).collect()
}

fn submatrix(m: &DMatrix<Complex64>, idx: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Eigenvalues of a Hermitian matrix, through the real solver when possible.
fn hermitian_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let h = hermitian_part(m);
    let live = live_indices(&h);
    if live.is_empty() {
        return Ok(vec![0.0; m.nrows()]);
    }
    let h = submatrix(&h, &live);
    let mut values = if is_real(&h) {
        symmetric_eigenvalues(&h.map(|z| z.re))?
    } else {
        hermitian_eigen(&h)?.values
    };
    values.resize(m.nrows(), 0.0);
    Ok(values)
}

/// Square root of a positive semidefinite Hermitian matrix.
fn psd_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = m.nrows();
    let zero = Complex64::new(0.0, 0.0);
    if is_diagonal(m) {
        return Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(m[(i, i)].re.max(0.0).sqrt(), 0.0)
            } else {
                zero
            }
        }));
    }
    let h = hermitian_part(m);
    let live = live_indices(&h);
    if live.is_empty() {
        return Ok(DMatrix::from_element(n, n, zero));
    }
    let sub = submatrix(&h, &live);
    let (values, vectors) = if is_real(&sub) {
        let (v, q) = symmetric_eigen(&sub.map(|z| z.re))?;
        (v, q.map(|x| Complex64::new(x, 0.0)))
    } else {
        let e = hermitian_eigen(&sub)?;
        (e.values, e.vectors)
    };
    let mut scaled = vectors.clone();
    for (j, v) in values.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= v.max(0.0).sqrt());
    }
    let root = scaled * vectors.adjoint();
    let mut full = DMatrix::from_element(n, n, zero);
    for (a, &i) in live.iter().enumerate() {
        for (b, &j) in live.iter().enumerate() {
            full[(i, j)] = root[(a, b)];
        }
    }
    Ok(full)
}

fn singular_from_squares(values: Vec<f64>) -> Result<WeightedSequence> {
    WeightedSequence::new(values.into_iter().map(|v| v.max(0.0).sqrt()).collect())
}

#[derive(Debug, Clone)]
pub struct SymbolTriple {
    pub f: TorusFunction,
    pub w: LatticeSymbol,
    pub g: TorusFunction,
    pub p: f64,
    /// Torus grid `M` per axis.
    pub grid: usize,
}

#[derive(Debug, Clone)]
pub struct SingularValueReport {
    pub svalues: WeightedSequence,
    pub radius: usize,
    pub grid: usize,
    pub cwikel_ratio: Option<f64>,
    pub dp_empirical: Option<DpWindowEstimate>,
    pub formula_value: Option<f64>,
}

impl SingularValueReport {
    fn bare(svalues: WeightedSequence, radius: usize, grid: usize) -> Self {
        SingularValueReport {
            svalues,
            radius,
            grid,
            cwikel_ratio: None,
            dp_empirical: None,
            formula_value: None,
        }
    }

    /// Rows `(m, s_m, m^{1/p} s_m)`.
    pub fn rows(&self, p: f64) -> Vec<(usize, f64, f64)> {
        self.svalues
            .values()
            .iter()
            .enumerate()
            .map(|(i, &s)| (i + 1, s, ((i + 1) as f64).powf(1.0 / p) * s))
            .collect()
    }
}

/// Default grid `M = 8L` (at least 8).
pub fn default_grid(radius: usize) -> usize {
    (8 * radius).max(8)
}

/// Nonzero s-values of the section of `fΦWΦ*g`: square roots of the
/// eigenvalues of `B^{1/2} K_f B^{1/2}` with `B = W K_g W*`.
pub fn pdo_singular_values(triple: &SymbolTriple) -> Result<SingularValueReport> {
    let d = triple.w.dim();
    let cells = triple.w.cells();
    let lag = 2 * triple.w.radius();
    let cf = fourier_modsq_coeffs(&triple.f, d, triple.grid, lag)?;
    let cg = fourier_modsq_coeffs(&triple.g, d, triple.grid, lag)?;
    let kf = gram(&cf, &cells);
    let kg = gram(&cg, &cells);
    let w = triple.w.values();
    let b = DMatrix::from_fn(w.len(), w.len(), |i, j| w[i] * kg[(i, j)] * w[j].conj());
    let root = psd_sqrt(&b)?;
    let s2 = &root * kf * &root;
    let report = SingularValueReport::bare(singular_from_squares(hermitian_values(&s2)?)?, triple.w.radius(), triple.grid);
    Ok(report)
}

/// s-values of the section of `fΦW` from the Gram `conj(W(n)) c^f_{m-n} W(m)`.
pub fn multiplier_singular_values(f: &TorusFunction, w: &LatticeSymbol, grid: usize) -> Result<WeightedSequence> {
    let cells = w.cells();
    let cf = fourier_modsq_coeffs(f, w.dim(), grid, 2 * w.radius())?;
    let k = gram(&cf, &cells);
    let v = w.values();
    let m = DMatrix::from_fn(v.len(), v.len(), |i, j| v[i].conj() * k[(i, j)] * v[j]);
    singular_from_squares(hermitian_values(&m)?)
}

/// Quadrature matrix `P_{k,n} = M^{-d/2} h(k) e^{-in·k}` of `hΦ` on the box.
pub fn quadrature_matrix(h: &TorusFunction, w: &LatticeSymbol, grid: usize) -> DMatrix<Complex64> {
    let d = w.dim();
    let g = TorusGrid::new(d, grid);
    let cells = w.cells();
    let scale = 1.0 / (g.len() as f64).sqrt();
    DMatrix::from_fn(g.len(), cells.len(), |l, c| {
        let k = g.point(l);
        let phase: f64 = cells[c].iter().zip(&k).map(|(&n, &k)| n as f64 * k).sum();
        h.eval(&k) * Complex64::cis(-phase) * scale
    })
}

/// s-values of `fΦWΦ*g` from the SVD of the assembled `M^d × M^d` product
/// of quadrature matrices; an oracle independent of the Gram route.
pub fn direct_section_singular_values(triple: &SymbolTriple) -> Result<WeightedSequence> {
    let pf = quadrature_matrix(&triple.f, &triple.w, triple.grid);
    let pg = quadrature_matrix(&triple.g.conj(), &triple.w, triple.grid);
    let w = triple.w.values();
    let mut pw = pf;
    for (j, x) in w.iter().enumerate() {
        for z in pw.column_mut(j).iter_mut() {
            *z *= x;
        }
    }
    let t = pw * pg.adjoint();
    let svd = t.svd(false, false);
    WeightedSequence::new(svd.singular_values.iter().copied().collect())
}

/// Admissible `(p, q)` pairs for the weak-type bound on `fΦW`.
pub fn cwikel_regime(p: f64, q: f64) -> Result<()> {
    let ok = if p < 2.0 {
        q == 2.0
    } else if p > 2.0 {
        q == p
    } else {
        q > 2.0
    };
    if p > 0.0 && ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "(p, q) = ({p}, {q}) is outside the admissible regimes: q = 2 for p < 2, q > 2 for p = 2, q = p for p > 2"
        )))
    }
}

/// `‖s(fΦW)‖_{p,∞} / (‖f‖_{L_q} ‖W‖_{p,∞})` on the section.
pub fn cwikel_ratio(f: &TorusFunction, w: &LatticeSymbol, p: f64, q: f64, grid: usize) -> Result<f64> {
    cwikel_regime(p, q)?;
    let s = multiplier_singular_values(f, w, grid)?;
    let fq = f.lq_norm(w.dim(), q, grid);
    let wq = weak_quasinorm(&w.magnitudes()?, p);
    if fq == 0.0 || wq == 0.0 {
        return Ok(0.0);
    }
    Ok(weak_quasinorm(&s, p) / (fq * wq))
}

/// Window `[s at rank·0.75, s at rank·0.1]` over the nonzero s-values.
pub fn default_window(s: &WeightedSequence) -> Option<(f64, f64)> {
    let nonzero = s.values().iter().take_while(|&&x| x > 0.0).count();
    if nonzero < 10 {
        return None;
    }
    let at = |frac: f64| s.values()[((frac * nonzero as f64) as usize).min(nonzero - 1)];
    Some((at(0.75), at(0.1)))
}

/// `(d(2π)^d)^{-1} ∫_{T^d} |f g|^p dk ∫_{S^{d-1}} |v|^p dS`.
pub fn formula_value(f: &TorusFunction, v: &AngularProfile, g: &TorusFunction, p: f64, dim: usize, grid: usize) -> Result<f64> {
    let t = TorusGrid::new(dim, grid);
    let torus: f64 = (0..t.len())
        .map(|l| {
            let k = t.point(l);
            (f.eval(&k) * g.eval(&k)).norm().powf(p)
        })
        .sum::<f64>()
        * t.cell_volume();
    let sphere = sphere_integral(v, p, dim, 64)?;
    Ok(torus * sphere / (dim as f64 * (2.0 * PI).powi(dim as i32)))
}

/// Empirical `s^p n(s)` window estimate beside the asymptotic coefficient.
#[allow(clippy::too_many_arguments)]
pub fn dp_vs_formula(
    f: &TorusFunction,
    v: &AngularProfile,
    g: &TorusFunction,
    p: f64,
    dim: usize,
    radius: usize,
    grid: usize,
    window: Option<(f64, f64)>,
) -> Result<SingularValueReport> {
    let w = LatticeSymbol::homogeneous(dim, v, p, radius)?;
    let triple = SymbolTriple {
        f: f.clone(),
        w,
        g: g.clone(),
        p,
        grid,
    };
    let mut report = pdo_singular_values(&triple)?;
    let formula = formula_value(f, v, g, p, dim, grid)?;
    let window = window.or_else(|| default_window(&report.svalues));
    report.dp_empirical = match window {
        Some(win) => Some(dp_window(&report.svalues, p, win)?),
        None => None,
    };
    report.formula_value = Some(formula);
    Ok(report)
}

/// s-values of the section of `[f, ΦWΦ*]` conjugated to the lattice:
/// `(Cu)(n) = Σ_t a_t (W(n+t) - W(n)) u(n+t)` on the box.
pub fn commutator_singular_values(f: &TorusFunction, w: &LatticeSymbol) -> Result<WeightedSequence> {
    let d = w.dim();
    let terms = f
        .trig_terms(d)
        .ok_or_else(|| Error::InvalidArgument("commutator needs a trigonometric polynomial symbol".into()))?;
    let index = BoxIndex::new(d, 1, w.radius());
    let n = index.len();
    let vals = w.values();
    let mut c = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        let cell = index.cell(a);
        for (t, coef) in &terms {
            let shifted: Vec<i64> = cell.iter().zip(t).map(|(x, t)| x + t).collect();
            if let Some(b) = index.row(0, &shifted) {
                c[(a, b)] += coef * (vals[b] - vals[a]);
            }
        }
    }
    if c.iter().all(|z| z.norm() == 0.0) {
        return WeightedSequence::new(vec![0.0; n]);
    }
    let values: Vec<f64> = if is_real(&c) {
        c.map(|z| z.re).svd(false, false).singular_values.iter().copied().collect()
    } else {
        c.svd(false, false).singular_values.iter().copied().collect()
    };
    WeightedSequence::new(values)
}
