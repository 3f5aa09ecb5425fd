//! Convex generators f, their conjugates, canonicalization, reversal and the
//! classical f-divergence on discrete measures.
//!
//! A generator is a proper lower semi-continuous convex function on ℝ whose
//! effective domain contains the open positive half-line. Every solver in
//! this crate consumes only pointwise evaluations of f, its one-sided
//! derivatives, the conjugate f*(t) = sup_λ (tλ − f(λ)) with its derivative
//! and effective domain, and a handful of declared flags (operator convexity
//! of f* and of the reversed conjugate, canonicity).
//!
//! Built-in families:
//!
//! | name    | f(λ), λ ≥ 0                    | f*(t) on dom f*                    |
//! |---------|--------------------------------|------------------------------------|
//! | renyi α | sign((α−1)α)·λ^α               | power law, see [`DivergenceGenerator::renyi`] |
//! | kl      | λ ln λ                         | e^{t−1} on ℝ                       |
//! | kl-rev  | −ln λ                          | −1 − ln(−t) on (−∞,0)              |
//! | tv      | |1−λ| (on all of ℝ)            | t on [−1,1]                        |
//! | fb      | (λ−1)²                         | t²/4 + t on [−2,∞)                 |
//! | fb-rev  | (1−λ)²/λ                       | 2 − 2√(1−t) on (−∞,1]              |
//!
//! Negative half-lines are the canonical extensions: affine with slope
//! f′₊(0) when that slope is finite, +∞ otherwise.

use crate::{Error, Result};

/// An interval of the extended real line with open/closed end flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Interval {
    pub const fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Interval { lo, lo_closed, hi, hi_closed }
    }

    /// Membership with a small absolute slack at finite closed ends.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        let above = if self.lo == f64::NEG_INFINITY {
            true
        } else if self.lo_closed {
            x >= self.lo - slack
        } else {
            x > self.lo
        };
        let below = if self.hi == f64::INFINITY {
            true
        } else if self.hi_closed {
            x <= self.hi + slack
        } else {
            x < self.hi
        };
        above && below
    }

    /// Clamp a point into the closure of the interval.
    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn is_bounded_below(&self) -> bool {
        self.lo > f64::NEG_INFINITY
    }

    pub fn is_bounded_above(&self) -> bool {
        self.hi < f64::INFINITY
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{}{}, {}{}", l, self.lo, self.hi, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FamilyKind {
    /// sign((α−1)α)·λ^α, canonically extended. α ∉ {0, 1}.
    Renyi { alpha: f64 },
    /// λ ln λ.
    Kl,
    /// −ln λ; the reversal of `Kl`.
    KlHat,
    /// |1 − λ| on the whole line (canonical).
    Tv,
    /// |1 − λ| on λ ≥ 0, +∞ on λ < 0 (not canonical).
    TvNoncanonical,
    /// (λ−1)² on λ ≥ 0, 1 − 2λ on λ < 0.
    Fb,
    /// (1−λ)²/λ; the reversal of `Fb`.
    FbHat,
}

/// A convex divergence generator: pointwise access to f, f* and metadata.
///
/// Values are immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceGenerator {
    kind: FamilyKind,
}

impl DivergenceGenerator {
    /// Rényi-type generator f_α(λ) = sign((α−1)α)·λ^α for λ ≥ 0 (λ > 0 when
    /// α < 0), canonically extended to the negative half-line.
    ///
    /// Rejects α ∈ {0, 1}; those orders degenerate to affine generators.
    pub fn renyi(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
            return Err(Error::InvalidFamily(format!(
                "renyi requires finite alpha outside {{0, 1}}, got {alpha}"
            )));
        }
        Ok(DivergenceGenerator { kind: FamilyKind::Renyi { alpha } })
    }

    /// Kullback–Leibler generator λ ln λ.
    pub fn kl() -> Self {
        DivergenceGenerator { kind: FamilyKind::Kl }
    }

    /// Reverse Kullback–Leibler generator −ln λ.
    pub fn kl_reversed() -> Self {
        DivergenceGenerator { kind: FamilyKind::KlHat }
    }

    /// Total-variation generator |1 − λ| on all of ℝ.
    pub fn tv() -> Self {
        DivergenceGenerator { kind: FamilyKind::Tv }
    }

    /// Total-variation generator restricted to λ ≥ 0 (+∞ on λ < 0).
    ///
    /// Generates the same divergence as [`DivergenceGenerator::tv`] but its
    /// conjugate is not strictly increasing, so it is not canonical; it is
    /// the standard test input for [`DivergenceGenerator::canonicalize`].
    pub fn tv_noncanonical() -> Self {
        DivergenceGenerator { kind: FamilyKind::TvNoncanonical }
    }

    /// Quadratic generator (λ−1)², the second-order probe family.
    pub fn fb() -> Self {
        DivergenceGenerator { kind: FamilyKind::Fb }
    }

    /// χ² alias: Rényi of order 2.
    pub fn chi2() -> Self {
        Self::renyi(2.0).expect("alpha 2 is valid")
    }

    /// Fidelity alias: Rényi of order 1/2.
    pub fn fidelity_family() -> Self {
        Self::renyi(0.5).expect("alpha 1/2 is valid")
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Renyi { .. } => "renyi",
            FamilyKind::Kl => "kl",
            FamilyKind::KlHat => "kl-rev",
            FamilyKind::Tv => "tv",
            FamilyKind::TvNoncanonical => "tv-noncanonical",
            FamilyKind::Fb => "fb",
            FamilyKind::FbHat => "fb-rev",
        }
    }

    /// Family parameter (the Rényi order), when there is one.
    pub fn param(&self) -> Option<f64> {
        match self.kind {
            FamilyKind::Renyi { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// f(λ); +∞ outside the effective domain.
    pub fn f_at(&self, l: f64) -> f64 {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                let sign = renyi_sign(alpha);
                if l > 0.0 {
                    sign * l.powf(alpha)
                } else if l == 0.0 {
                    if alpha < 0.0 { f64::INFINITY } else { 0.0 }
                } else if alpha > 1.0 {
                    // canonical extension: slope f'₊(0) = 0 through f(0) = 0
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::Kl => {
                if l > 0.0 {
                    l * l.ln()
                } else if l == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::KlHat => {
                if l > 0.0 { -l.ln() } else { f64::INFINITY }
            }
            FamilyKind::Tv => (1.0 - l).abs(),
            FamilyKind::TvNoncanonical => {
                if l >= 0.0 { (1.0 - l).abs() } else { f64::INFINITY }
            }
            FamilyKind::Fb => {
                if l >= 0.0 { (l - 1.0) * (l - 1.0) } else { 1.0 - 2.0 * l }
            }
            FamilyKind::FbHat => {
                if l > 0.0 {
                    let d = 1.0 - l;
                    d * d / l
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Right derivative f′₊(λ); −∞ at the lower edge of dom f.
    pub fn f_prime_right_at(&self, l: f64) -> f64 {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                let sign = renyi_sign(alpha);
                if l > 0.0 {
                    sign * alpha * l.powf(alpha - 1.0)
                } else if alpha > 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            FamilyKind::Kl => {
                if l > 0.0 { l.ln() + 1.0 } else { f64::NEG_INFINITY }
            }
            FamilyKind::KlHat => {
                if l > 0.0 { -1.0 / l } else { f64::NEG_INFINITY }
            }
            FamilyKind::Tv => if l < 1.0 { -1.0 } else { 1.0 },
            FamilyKind::TvNoncanonical => {
                if l < 0.0 {
                    f64::NEG_INFINITY
                } else if l < 1.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            FamilyKind::Fb => if l > 0.0 { 2.0 * (l - 1.0) } else { -2.0 },
            FamilyKind::FbHat => {
                if l > 0.0 { 1.0 - 1.0 / (l * l) } else { f64::NEG_INFINITY }
            }
        }
    }

    /// Left derivative f′₋(λ); −∞ at or below the lower edge of dom f.
    pub fn f_prime_left_at(&self, l: f64) -> f64 {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                let sign = renyi_sign(alpha);
                if l > 0.0 {
                    sign * alpha * l.powf(alpha - 1.0)
                } else if alpha > 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            FamilyKind::Kl | FamilyKind::KlHat => {
                if l > 0.0 { self.f_prime_right_at(l) } else { f64::NEG_INFINITY }
            }
            FamilyKind::Tv => if l <= 1.0 { -1.0 } else { 1.0 },
            FamilyKind::TvNoncanonical => {
                if l <= 0.0 {
                    f64::NEG_INFINITY
                } else if l <= 1.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            FamilyKind::Fb => if l > 0.0 { 2.0 * (l - 1.0) } else { -2.0 },
            FamilyKind::FbHat => {
                if l > 0.0 { 1.0 - 1.0 / (l * l) } else { f64::NEG_INFINITY }
            }
        }
    }

    /// Convex conjugate f*(t) = sup_λ (tλ − f(λ)); ±∞ are legal values.
    pub fn conj_at(&self, t: f64) -> f64 {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                if alpha > 1.0 {
                    // (α−1)·α^{−α/(α−1)}·t^{α/(α−1)} on t ≥ 0
                    if t > 0.0 {
                        (alpha - 1.0) * (t / alpha).powf(alpha / (alpha - 1.0))
                    } else if t == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else if alpha > 0.0 {
                    // (1−α)·α^{α/(1−α)}·(−t)^{−α/(1−α)} on t < 0
                    if t < 0.0 {
                        (1.0 - alpha) * (alpha / -t).powf(alpha / (1.0 - alpha))
                    } else {
                        f64::INFINITY
                    }
                } else {
                    // α < 0: (α−1)·(−α)^{α/(1−α)}·(−t)^{−α/(1−α)} on t < 0, 0 at t = 0
                    if t < 0.0 {
                        (alpha - 1.0) * (-alpha / -t).powf(alpha / (1.0 - alpha))
                    } else if t == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            }
            FamilyKind::Kl => (t - 1.0).exp(),
            FamilyKind::KlHat => {
                if t < 0.0 { -1.0 - (-t).ln() } else { f64::INFINITY }
            }
            FamilyKind::Tv => {
                if (-1.0..=1.0).contains(&t) { t } else { f64::INFINITY }
            }
            FamilyKind::TvNoncanonical => {
                if t < -1.0 {
                    -1.0
                } else if t <= 1.0 {
                    t
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::Fb => {
                if t >= -2.0 { 0.25 * t * t + t } else { f64::INFINITY }
            }
            FamilyKind::FbHat => {
                if t <= 1.0 { 2.0 - 2.0 * (1.0 - t).sqrt() } else { f64::INFINITY }
            }
        }
    }

    /// Derivative of f* on the interior of its domain; ±∞ where it diverges.
    pub fn conj_prime_at(&self, t: f64) -> f64 {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                if alpha > 1.0 {
                    if t > 0.0 {
                        (t / alpha).powf(1.0 / (alpha - 1.0))
                    } else if t == 0.0 {
                        0.0
                    } else {
                        f64::NAN
                    }
                } else if t < 0.0 {
                    (alpha.abs() / -t).powf(1.0 / (1.0 - alpha))
                } else {
                    f64::INFINITY
                }
            }
            FamilyKind::Kl => (t - 1.0).exp(),
            FamilyKind::KlHat => {
                if t < 0.0 { -1.0 / t } else { f64::INFINITY }
            }
            FamilyKind::Tv => 1.0,
            FamilyKind::TvNoncanonical => {
                if t < -1.0 { 0.0 } else { 1.0 }
            }
            FamilyKind::Fb => 0.5 * t + 1.0,
            FamilyKind::FbHat => {
                if t < 1.0 { 1.0 / (1.0 - t).sqrt() } else { f64::INFINITY }
            }
        }
    }

    /// Effective domain of f*.
    pub fn conj_domain(&self) -> Interval {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                if alpha > 1.0 {
                    Interval::new(0.0, true, f64::INFINITY, false)
                } else if alpha > 0.0 {
                    Interval::new(f64::NEG_INFINITY, false, 0.0, false)
                } else {
                    Interval::new(f64::NEG_INFINITY, false, 0.0, true)
                }
            }
            FamilyKind::Kl => Interval::new(f64::NEG_INFINITY, false, f64::INFINITY, false),
            FamilyKind::KlHat => Interval::new(f64::NEG_INFINITY, false, 0.0, false),
            FamilyKind::Tv => Interval::new(-1.0, true, 1.0, true),
            FamilyKind::TvNoncanonical => Interval::new(f64::NEG_INFINITY, false, 1.0, true),
            FamilyKind::Fb => Interval::new(-2.0, true, f64::INFINITY, false),
            FamilyKind::FbHat => Interval::new(f64::NEG_INFINITY, false, 1.0, true),
        }
    }

    /// lim_{t→−∞} f*(t); +∞ when dom f* is bounded below (f* ≡ +∞ there).
    pub fn conj_at_neg_infinity(&self) -> f64 {
        match self.kind {
            FamilyKind::Renyi { alpha } => {
                if alpha > 1.0 {
                    f64::INFINITY
                } else if alpha > 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            FamilyKind::Kl => 0.0,
            FamilyKind::KlHat => f64::NEG_INFINITY,
            FamilyKind::Tv | FamilyKind::Fb => f64::INFINITY,
            FamilyKind::TvNoncanonical => -1.0,
            FamilyKind::FbHat => f64::NEG_INFINITY,
        }
    }

    /// f(0) ∈ ℝ ∪ {+∞}.
    pub fn f_at_zero(&self) -> f64 {
        self.f_at(0.0)
    }

    /// f″(1) when f is twice differentiable at 1 (None at kinks).
    pub fn f_second_at_one(&self) -> Option<f64> {
        match self.kind {
            FamilyKind::Renyi { alpha } => Some((alpha * (alpha - 1.0)).abs()),
            FamilyKind::Kl | FamilyKind::KlHat => Some(1.0),
            FamilyKind::Tv | FamilyKind::TvNoncanonical => None,
            FamilyKind::Fb | FamilyKind::FbHat => Some(2.0),
        }
    }

    /// Condition (I): f* is operator convex on dom f*. Declared per family.
    pub fn cond_i(&self) -> bool {
        match self.kind {
            FamilyKind::Renyi { alpha } => alpha < 0.0 || (0.0 < alpha && alpha <= 0.5) || alpha >= 2.0,
            FamilyKind::Kl => false,
            FamilyKind::KlHat => true,
            FamilyKind::Tv => true,
            FamilyKind::TvNoncanonical => false,
            FamilyKind::Fb | FamilyKind::FbHat => true,
        }
    }

    /// Condition (II): the conjugate of the reversal f̂ is operator convex.
    pub fn cond_ii(&self) -> bool {
        match self.kind {
            FamilyKind::Renyi { alpha } => alpha >= 0.5 || alpha <= -1.0,
            FamilyKind::Kl => true,
            FamilyKind::KlHat => false,
            FamilyKind::Tv => true,
            FamilyKind::TvNoncanonical => true,
            FamilyKind::Fb | FamilyKind::FbHat => true,
        }
    }

    /// Whether f* is strictly increasing on dom f*.
    pub fn is_canonical(&self) -> bool {
        !matches!(self.kind, FamilyKind::TvNoncanonical)
    }

    /// Canonicalization f₀: unchanged on λ ≥ 0; on λ < 0 replaced by the
    /// affine extension f′₊(0)·λ + f(0) when f′₊(0) is finite, +∞ otherwise.
    /// The lower end of dom f₀* is f′₊(0). Idempotent.
    pub fn canonicalize(&self) -> Self {
        match self.kind {
            FamilyKind::TvNoncanonical => DivergenceGenerator { kind: FamilyKind::Tv },
            _ => self.clone(),
        }
    }

    /// Reversal f̂(λ) = λ·f(1/λ) (canonically extended), which satisfies
    /// `D_f(P₁‖P₂) = D_f̂(P₂‖P₁)`.
    pub fn hat(&self) -> Self {
        let kind = match self.kind {
            FamilyKind::Renyi { alpha } => FamilyKind::Renyi { alpha: 1.0 - alpha },
            FamilyKind::Kl => FamilyKind::KlHat,
            FamilyKind::KlHat => FamilyKind::Kl,
            FamilyKind::Tv | FamilyKind::TvNoncanonical => FamilyKind::Tv,
            FamilyKind::Fb => FamilyKind::FbHat,
            FamilyKind::FbHat => FamilyKind::Fb,
        };
        DivergenceGenerator { kind }
    }

    /// The perspective-like integrand g(λ₁, λ₂): the lower semi-continuous
    /// hull of λ₂·f(λ₁/λ₂). Total on ℝ²; +∞ is a legal value.
    ///
    /// The λ₂ ↓ 0 limits are the recession slopes of f, which equal the ends
    /// of dom f*: g(λ₁, 0) = λ₁·sup dom f* for λ₁ > 0 and λ₁·inf dom f* for
    /// λ₁ < 0 (+∞ when the relevant end is infinite).
    pub fn g_eval(&self, l1: f64, l2: f64) -> f64 {
        if l2 < 0.0 {
            return f64::INFINITY;
        }
        if l2 > 0.0 {
            let v = self.f_at(l1 / l2);
            return if v == f64::INFINITY { f64::INFINITY } else { l2 * v };
        }
        // l2 == 0
        if l1 == 0.0 {
            0.0
        } else if l1 > 0.0 {
            let hi = self.conj_domain().hi;
            if hi == f64::INFINITY { f64::INFINITY } else { l1 * hi }
        } else {
            let lo = self.conj_domain().lo;
            if lo == f64::NEG_INFINITY { f64::INFINITY } else { l1 * lo }
        }
    }

    /// Classical f-divergence Σ_x g(p₁(x), p₂(x)) between positive finite
    /// measures on a shared index set.
    pub fn classical_df(&self, p1: &DiscreteMeasure, p2: &DiscreteMeasure) -> Result<f64> {
        if p1.len() != p2.len() {
            return Err(Error::LengthMismatch(p1.len(), p2.len()));
        }
        let mut total = 0.0;
        for (&a, &b) in p1.weights().iter().zip(p2.weights()) {
            let g = self.g_eval(a, b);
            if g == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            total += g;
        }
        Ok(total)
    }
}

fn renyi_sign(alpha: f64) -> f64 {
    if alpha * (alpha - 1.0) >= 0.0 { 1.0 } else { -1.0 }
}

/// A positive finite measure on a finite index set. No normalization is
/// required; only nonnegativity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for &w in &weights {
            if !(w >= 0.0) {
                return Err(Error::NegativeWeight(w));
            }
        }
        Ok(DiscreteMeasure { weights })
    }

    /// Builds a measure from raw values, clamping roundoff negatives (and
    /// anything below `floor`) to exactly zero.
    pub fn clamped(values: Vec<f64>, floor: f64) -> Self {
        let weights = values.into_iter().map(|v| if v < floor { 0.0 } else { v }).collect();
        DiscreteMeasure { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> (Vec<f64>, Vec<f64>) {
        let lambdas: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let ts: Vec<f64> = (-30..=30).map(|i| 0.2 * i as f64).collect();
        (lambdas, ts)
    }

    fn all_families() -> Vec<DivergenceGenerator> {
        vec![
            DivergenceGenerator::renyi(0.3).unwrap(),
            DivergenceGenerator::renyi(0.5).unwrap(),
            DivergenceGenerator::renyi(0.7).unwrap(),
            DivergenceGenerator::renyi(2.0).unwrap(),
            DivergenceGenerator::renyi(3.0).unwrap(),
            DivergenceGenerator::renyi(-1.0).unwrap(),
            DivergenceGenerator::renyi(-0.4).unwrap(),
            DivergenceGenerator::kl(),
            DivergenceGenerator::kl_reversed(),
            DivergenceGenerator::tv(),
            DivergenceGenerator::tv_noncanonical(),
            DivergenceGenerator::fb(),
            DivergenceGenerator::fb().hat(),
        ]
    }

    /// Independent oracle: sup_t (λt − f*(t)) by dense grid + ternary refine
    /// over the conjugate domain (the map is concave in t).
    fn biconjugate_numeric(f: &DivergenceGenerator, lambda: f64) -> f64 {
        let dom = f.conj_domain();
        // the supremum sits at t = f'(λ); bracket generously around the
        // derivative range of the λ-grid, clipped into dom f*
        let t_opt = f.f_prime_right_at(lambda);
        let spread = 10.0 * (1.0 + t_opt.abs());
        let lo = if dom.lo == f64::NEG_INFINITY { t_opt - spread } else { dom.lo };
        let hi = if dom.hi == f64::INFINITY { t_opt + spread } else { dom.hi };
        let obj = |t: f64| {
            let c = f.conj_at(t);
            if c == f64::INFINITY { f64::NEG_INFINITY } else { lambda * t - c }
        };
        // coarse grid
        let n = 4000usize;
        let mut best_i = 0usize;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let v = obj(t);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        // ternary refine around the best cell
        let step = (hi - lo) / n as f64;
        let mut a = lo + step * (best_i.saturating_sub(1)) as f64;
        let mut b = (lo + step * (best_i + 1) as f64).min(hi);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if obj(m1) < obj(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        obj(0.5 * (a + b)).max(best)
    }

    #[test]
    fn fenchel_young_on_grids() {
        let (lambdas, ts) = grids();
        for f in all_families() {
            for &l in &lambdas {
                let fl = f.f_at(l);
                if fl == f64::INFINITY {
                    continue;
                }
                for &t in &ts {
                    let ft = f.conj_at(t);
                    if ft == f64::INFINITY {
                        continue;
                    }
                    assert!(
                        fl + ft - l * t >= -1e-10,
                        "Fenchel-Young violated for {} at λ={l}, t={t}: {}",
                        f.name(),
                        fl + ft - l * t
                    );
                }
            }
        }
    }

    #[test]
    fn fenchel_young_equality_at_derivative() {
        // equality when t = f'(λ), tested where f is differentiable
        for f in all_families() {
            for &l in &[0.4, 0.9, 1.7, 3.2] {
                let t = f.f_prime_right_at(l);
                if !t.is_finite() {
                    continue;
                }
                if matches!(f.name(), "tv" | "tv-noncanonical") && (l - 1.0).abs() < 1e-12 {
                    continue;
                }
                let gap = f.f_at(l) + f.conj_at(t) - l * t;
                assert!(gap.abs() <= 1e-9, "{}: equality gap {gap} at λ={l}", f.name());
            }
        }
    }

    #[test]
    fn biconjugation_recovers_f() {
        for f in all_families() {
            let mut worst: f64 = 0.0;
            for i in 1..=40 {
                let l = 0.1 + (10.0 - 0.1) * i as f64 / 40.0;
                let direct = f.f_at(l);
                let bicon = biconjugate_numeric(&f, l);
                worst = worst.max((direct - bicon).abs());
            }
            assert!(worst <= 1e-8, "{}: biconjugation error {worst}", f.name());
        }
    }

    #[test]
    fn conjugate_closed_forms_match_known_values() {
        let f2 = DivergenceGenerator::renyi(2.0).unwrap();
        assert!((f2.conj_at(2.0) - 1.0).abs() < 1e-14);
        let fh = DivergenceGenerator::renyi(0.5).unwrap();
        assert!((fh.conj_at(-1.0) - 0.25).abs() < 1e-14);
        let tv = DivergenceGenerator::tv();
        assert_eq!(tv.conj_at(0.0), 0.0);
        let kl = DivergenceGenerator::kl();
        assert!((kl.conj_at(1.0) - 1.0).abs() < 1e-14);
        // fb: f_b*(t) = t²/4 + t with domain lower end -2
        let fb = DivergenceGenerator::fb();
        assert!((fb.conj_at(-2.0) + 1.0).abs() < 1e-14);
        assert_eq!(fb.conj_at(-2.0 - 1e-12), f64::INFINITY);
    }

    #[test]
    fn conjugate_derivative_matches_finite_differences() {
        for f in all_families() {
            let dom = f.conj_domain();
            let lo = if dom.lo == f64::NEG_INFINITY { -8.0 } else { dom.lo + 0.2 };
            let hi = if dom.hi == f64::INFINITY { 8.0 } else { dom.hi - 0.2 };
            if lo >= hi {
                continue;
            }
            for i in 0..=20 {
                let t = lo + (hi - lo) * i as f64 / 20.0;
                if f.name() == "tv-noncanonical" && (t + 1.0).abs() < 0.05 {
                    continue; // kink of the non-canonical conjugate
                }
                let h = 1e-6 * (1.0 + t.abs());
                let fd = (f.conj_at(t + h) - f.conj_at(t - h)) / (2.0 * h);
                let an = f.conj_prime_at(t);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{}: conj' mismatch at t={t}: {fd} vs {an}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn g_eval_four_cases() {
        let tv = DivergenceGenerator::tv();
        assert!((tv.g_eval(2.0, 1.0) - 1.0).abs() < 1e-15);
        for f in all_families() {
            assert_eq!(f.g_eval(0.0, 0.0), 0.0);
            assert_eq!(f.g_eval(1.0, -0.5), f64::INFINITY);
        }
        let fh = DivergenceGenerator::renyi(0.5).unwrap();
        assert_eq!(fh.g_eval(1.0, 0.0), 0.0);
    }

    #[test]
    fn g_zero_limit_matches_numeric_limit() {
        // lim_{s↓0} s·f(λ1/s) for λ1 = 1 against the closed-form recession value
        for f in all_families() {
            let closed = f.g_eval(1.0, 0.0);
            if closed == f64::INFINITY {
                // the limit must blow up: check growth at two scales
                // (logarithmic for kl, polynomial for the power families)
                let a = 1e-6 * f.f_at(1.0 / 1e-6);
                let b = 1e-8 * f.f_at(1.0 / 1e-8);
                assert!(b > a && b > 10.0, "{}: expected divergence, got {a}, {b}", f.name());
            } else {
                // approach is O(s^c) with a family-dependent rate; require
                // monotone convergence across scales and agreement at the
                // finest one
                let errs: Vec<f64> = [1e-6, 1e-8, 1e-10, 1e-12]
                    .iter()
                    .map(|&s| (s * f.f_at(1.0 / s) - closed).abs())
                    .collect();
                for w in errs.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12, "{}: errors not shrinking: {errs:?}", f.name());
                }
                // slowest built-in rate is s^{0.3} (renyi 0.7): 2.6e-4 at s=1e-12
                assert!(
                    errs[3] <= 5e-4 * (1.0 + closed.abs()),
                    "{}: recession mismatch {errs:?} vs {closed}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn classical_df_examples() {
        let f2 = DivergenceGenerator::renyi(2.0).unwrap();
        let p1 = DiscreteMeasure::new(vec![0.7, 0.3]).unwrap();
        let p2 = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let v = f2.classical_df(&p1, &p2).unwrap();
        assert!((v - 1.16).abs() < 1e-12, "chi2 value {v}");

        let kl = DivergenceGenerator::kl();
        let p = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        assert!(kl.classical_df(&p, &p).unwrap().abs() < 1e-15);

        let tv = DivergenceGenerator::tv();
        let a = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        let b = DiscreteMeasure::new(vec![0.0, 1.0]).unwrap();
        assert!((tv.classical_df(&a, &b).unwrap() - 2.0).abs() < 1e-15);

        let bad = DiscreteMeasure::new(vec![1.0]).unwrap();
        assert!(matches!(tv.classical_df(&a, &bad), Err(Error::LengthMismatch(2, 1))));
    }

    #[test]
    fn kl_infinite_off_support() {
        let kl = DivergenceGenerator::kl();
        let p1 = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let p2 = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(kl.classical_df(&p1, &p2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn canonicalize_tv_tilde() {
        let tilde = DivergenceGenerator::tv_noncanonical();
        assert!(!tilde.is_canonical());
        let f0 = tilde.canonicalize();
        assert!(f0.is_canonical());
        for l in [-3.0, -1.0, -0.25, 0.0, 0.5, 1.0, 4.0] {
            assert!((f0.f_at(l) - (1.0 - l).abs()).abs() < 1e-15);
        }
        // t0 = f'₊(0) = −1 becomes the lower end of dom f₀*
        assert_eq!(f0.conj_domain().lo, -1.0);
        assert_eq!(tilde.f_prime_right_at(0.0), -1.0);
    }

    #[test]
    fn canonicalize_when_slope_infinite_keeps_infinity() {
        let fh = DivergenceGenerator::renyi(0.5).unwrap();
        assert_eq!(fh.f_prime_right_at(0.0), f64::NEG_INFINITY);
        let f0 = fh.canonicalize();
        assert_eq!(f0.f_at(-1.0), f64::INFINITY);
        assert_eq!(f0.f_at(4.0), fh.f_at(4.0));
    }

    #[test]
    fn canonicalize_renyi2_affine_extension() {
        let f2 = DivergenceGenerator::renyi(2.0).unwrap();
        let f0 = f2.canonicalize();
        assert_eq!(f0.f_at(-1.0), 0.0);
        assert_eq!(f0.f_at(-7.5), 0.0);
        // conjugate of the canonicalized family is t²/4 on [0, ∞)
        assert!((f0.conj_at(3.0) - 2.25).abs() < 1e-14);
        assert_eq!(f0.conj_domain().lo, 0.0);
        assert_eq!(f0.conj_at(-0.5), f64::INFINITY);
    }

    #[test]
    fn canonicalize_idempotent_pointwise() {
        for f in all_families() {
            let c1 = f.canonicalize();
            let c2 = c1.canonicalize();
            for i in -20..=20 {
                let l = 0.3 * i as f64;
                assert_eq!(c1.f_at(l), c2.f_at(l), "{}", f.name());
            }
        }
    }

    #[test]
    fn hat_of_renyi_flips_order() {
        let f = DivergenceGenerator::renyi(0.3).unwrap();
        let h = f.hat();
        assert_eq!(h.param(), Some(0.7));
        // pointwise: f̂(λ) = λ f(1/λ)
        for l in [0.2, 0.7, 1.0, 2.5, 9.0] {
            assert!((h.f_at(l) - l * f.f_at(1.0 / l)).abs() < 1e-12);
        }
    }

    #[test]
    fn hat_tv_self_reverse() {
        let tv = DivergenceGenerator::tv();
        let h = tv.hat();
        for l in [0.2, 0.7, 1.0, 2.5, 9.0] {
            assert!((h.f_at(l) - (l - 1.0).abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn hat_kl_matches_reverse_kl() {
        let kl = DivergenceGenerator::kl();
        let h = kl.hat();
        for l in [0.2, 0.7, 1.0, 2.5, 9.0] {
            assert!((h.f_at(l) + l.ln()).abs() < 1e-13);
        }
        // conjugate of the reversal: −1 − ln(−t) on t < 0
        for t in [-4.0, -1.0, -0.3] {
            assert!((h.conj_at(t) - (-1.0 - (-t).ln())).abs() < 1e-13);
        }
        assert_eq!(h.hat().name(), "kl");
    }

    #[test]
    fn hat_reverses_classical_divergence() {
        let p1 = DiscreteMeasure::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p2 = DiscreteMeasure::new(vec![0.4, 0.1, 0.5]).unwrap();
        for f in all_families() {
            let d = f.classical_df(&p1, &p2).unwrap();
            let dh = f.hat().classical_df(&p2, &p1).unwrap();
            if d.is_finite() {
                assert!((d - dh).abs() <= 1e-12, "{}: {d} vs {dh}", f.name());
            } else {
                assert_eq!(d, dh, "{}", f.name());
            }
        }
    }

    #[test]
    fn renyi_rejects_degenerate_orders() {
        assert!(DivergenceGenerator::renyi(0.0).is_err());
        assert!(DivergenceGenerator::renyi(1.0).is_err());
        assert!(DivergenceGenerator::renyi(f64::NAN).is_err());
    }

    #[test]
    fn fisher_families_have_positive_curvature() {
        for f in all_families() {
            if let Some(c) = f.f_second_at_one() {
                assert!(c > 0.0, "{}", f.name());
            }
        }
    }

    #[test]
    fn aliases() {
        assert_eq!(DivergenceGenerator::chi2().param(), Some(2.0));
        assert_eq!(DivergenceGenerator::fidelity_family().param(), Some(0.5));
    }
}
