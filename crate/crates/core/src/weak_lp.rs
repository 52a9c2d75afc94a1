//! Weak-ℓp functionals of finite nonnegative sequences (magnitudes or
//! s-values): distribution function, quasinorm and window estimates of
//! `s^p n(s)`.

use crate::error::{Error, Result};

/// Nonnegative values sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSequence {
    values: Vec<f64>,
}

impl WeightedSequence {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("sequence value {v} is not finite and nonnegative")));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(WeightedSequence { values })
    }

    /// Absolute values of arbitrary reals.
    pub fn from_magnitudes(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(values.into_iter().map(f64::abs).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }

    /// The first `n` (largest) values.
    pub fn prefix(&self, n: usize) -> Self {
        WeightedSequence {
            values: self.values[..n.min(self.len())].to_vec(),
        }
    }

    pub fn merged(&self, other: &Self) -> Self {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        values.sort_by(|a, b| b.total_cmp(a));
        WeightedSequence { values }
    }
}

/// `#{values > s}`.
pub fn distribution(seq: &WeightedSequence, s: f64) -> usize {
    seq.values.partition_point(|&v| v > s)
}

/// `max_m a_(m) m^{1/p}`, the exact `sup_s s·#{a > s}^{1/p}` of a finite
/// sequence.
pub fn weak_quasinorm(seq: &WeightedSequence, p: f64) -> f64 {
    seq.values
        .iter()
        .enumerate()
        .map(|(i, &a)| a * ((i + 1) as f64).powf(1.0 / p))
        .fold(0.0, f64::max)
}

/// Per-index products `a_(m) m^{1/p}`.
pub fn weak_products(seq: &WeightedSequence, p: f64) -> Vec<f64> {
    seq.values
        .iter()
        .enumerate()
        .map(|(i, &a)| a * ((i + 1) as f64).powf(1.0 / p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpWindowEstimate {
    pub p: f64,
    pub window: (f64, f64),
    pub sup_est: f64,
    pub inf_est: f64,
    pub samples: usize,
}

impl DpWindowEstimate {
    /// No jump of `n(s)` fell inside the window.
    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }
}

/// Sup and inf of `s^p n(s)` sampled at the jumps `a` of `n` inside
/// `(lo, hi]`, each jump contributing its left limit `a^p #{v >= a}`.
pub fn dp_window(seq: &WeightedSequence, p: f64, window: (f64, f64)) -> Result<DpWindowEstimate> {
    let (lo, hi) = window;
    if !(p > 0.0 && 0.0 < lo && lo <= hi) {
        return Err(Error::InvalidArgument(format!("window {window:?} or p = {p} is invalid")));
    }
    let mut sup: f64 = 0.0;
    let mut inf = f64::INFINITY;
    let mut samples = 0;
    let values = &seq.values;
    let mut i = 0;
    while i < values.len() {
        let a = values[i];
        let mut j = i;
        while j < values.len() && values[j] == a {
            j += 1;
        }
        if lo < a && a <= hi {
            let x = a.powf(p) * j as f64;
            samples += 1;
            sup = sup.max(x);
            inf = inf.min(x);
        }
        i = j;
    }
    if samples == 0 {
        inf = 0.0;
    }
    Ok(DpWindowEstimate {
        p,
        window,
        sup_est: sup,
        inf_est: inf,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipVerdicts {
    /// Quasinorm stays put when the prefix doubles.
    pub weak: Trend,
    /// Products `a_(m) m^{1/p}` shrink across the tail.
    pub small_o: Trend,
    pub quasinorm_half: f64,
    pub quasinorm_full: f64,
    pub head_max: f64,
    pub tail_max: f64,
}

/// Relative growth of the quasinorm under prefix doubling tolerated by the
/// weak verdict.
pub const WEAK_GROWTH_TOL: f64 = 0.05;
/// Required ratio of tail to head product maxima for the small-o verdict.
pub const SMALL_O_RATIO: f64 = 0.9;

pub fn membership_verdicts(seq: &WeightedSequence, p: f64) -> Result<MembershipVerdicts> {
    let n = seq.len();
    if n < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 values, got {n}")));
    }
    let quasinorm_full = weak_quasinorm(seq, p);
    let quasinorm_half = weak_quasinorm(&seq.prefix(n / 2), p);
    let products = weak_products(seq, p);
    let block_max = |a: usize, b: usize| products[a..b].iter().copied().fold(0.0, f64::max);
    let head_max = block_max(n / 64, n / 32);
    let tail_max = block_max(n / 4, n / 2);
    let weak = if quasinorm_full <= (1.0 + WEAK_GROWTH_TOL) * quasinorm_half {
        Trend::Yes
    } else {
        Trend::No
    };
    let small_o = if tail_max <= SMALL_O_RATIO * head_max {
        Trend::Yes
    } else {
        Trend::No
    };
    Ok(MembershipVerdicts {
        weak,
        small_o,
        quasinorm_half,
        quasinorm_full,
        head_max,
        tail_max,
    })
}
