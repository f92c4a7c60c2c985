//! Lower bounds on the single-photon-pair yield `y11` and the matching upper
//! bound on its error rate `e11`.
//!
//! The nine observed gains are first reduced to four equations in the
//! unknown yields `y_kl` with `k, l >= 1` (every vacuum-involving yield is
//! cancelled). Each bound then eliminates `y12` and `y21` from a subset of
//! those equations and drops the remaining multi-photon terms, which is
//! sound whenever their coefficients are non-negative. Those coefficients
//! are evaluated numerically over the truncation and reported alongside
//! each bound.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::source::{HRatioTable, Member, SourceTriple};

/// Slack on every coefficient-sign and ordering inequality.
pub const INEQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// Gains `Y_ab` and error rates `E_ab` for one basis, rows indexed by
/// Alice's source and columns by Bob's, both in `v, d, s` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStatistics")]
pub struct ObservedStatistics {
    pub basis: Basis,
    pub gains: [[f64; 3]; 3],
    pub error_rates: [[f64; 3]; 3],
}

#[derive(Deserialize)]
struct RawStatistics {
    basis: Basis,
    gains: [[f64; 3]; 3],
    error_rates: [[f64; 3]; 3],
}

impl TryFrom<RawStatistics> for ObservedStatistics {
    type Error = Error;

    fn try_from(raw: RawStatistics) -> Result<Self> {
        ObservedStatistics::new(raw.basis, raw.gains, raw.error_rates)
    }
}

impl ObservedStatistics {
    pub fn new(basis: Basis, gains: [[f64; 3]; 3], error_rates: [[f64; 3]; 3]) -> Result<Self> {
        for (name, m) in [("gain", &gains), ("error rate", &error_rates)] {
            for (a, row) in m.iter().enumerate() {
                for (b, &x) in row.iter().enumerate() {
                    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                        return Err(invalid(format!("{name} [{a}][{b}] = {x} is outside [0, 1]")));
                    }
                }
            }
        }
        Ok(Self { basis, gains, error_rates })
    }

    pub fn zeros(basis: Basis) -> Self {
        Self { basis, gains: [[0.0; 3]; 3], error_rates: [[0.0; 3]; 3] }
    }

    #[inline]
    pub fn gain(&self, a: Member, b: Member) -> f64 {
        self.gains[a.index()][b.index()]
    }

    #[inline]
    pub fn error_rate(&self, a: Member, b: Member) -> f64 {
        self.error_rates[a.index()][b.index()]
    }

    /// `T_ab = Y_ab E_ab`.
    #[inline]
    pub fn error_product(&self, a: Member, b: Member) -> f64 {
        self.gain(a, b) * self.error_rate(a, b)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("statistics serialize")
    }
}

/// One of the four reduced equations, named by the (Alice, Bob) source pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equation {
    Dd,
    Ds,
    Sd,
    Ss,
}

impl Equation {
    pub const ALL: [Equation; 4] = [Equation::Dd, Equation::Ds, Equation::Sd, Equation::Ss];

    pub fn index(self) -> usize {
        match self {
            Equation::Dd => 0,
            Equation::Ds => 1,
            Equation::Sd => 2,
            Equation::Ss => 3,
        }
    }

    /// 1-based label used in variant names (`dd` = 1, ..., `ss` = 4).
    pub fn label(self) -> usize {
        self.index() + 1
    }

    pub fn members(self) -> (Member, Member) {
        match self {
            Equation::Dd => (Member::D, Member::D),
            Equation::Ds => (Member::D, Member::S),
            Equation::Sd => (Member::S, Member::D),
            Equation::Ss => (Member::S, Member::S),
        }
    }

    fn from_label(label: usize) -> Option<Self> {
        Equation::ALL.get(label.wrapping_sub(1)).copied()
    }
}

/// Three distinct reduced equations to eliminate `y12` and `y21` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EquationSelector {
    chosen: [Equation; 3],
}

impl EquationSelector {
    pub const S123: Self = Self { chosen: [Equation::Dd, Equation::Ds, Equation::Sd] };
    pub const S124: Self = Self { chosen: [Equation::Dd, Equation::Ds, Equation::Ss] };
    pub const S134: Self = Self { chosen: [Equation::Dd, Equation::Sd, Equation::Ss] };
    pub const S234: Self = Self { chosen: [Equation::Ds, Equation::Sd, Equation::Ss] };

    pub fn new(chosen: [Equation; 3]) -> Result<Self> {
        let [a, b, c] = chosen;
        if a == b || a == c || b == c {
            return Err(invalid("equation selector needs three distinct equations"));
        }
        let mut chosen = chosen;
        chosen.sort_by_key(|e| e.index());
        Ok(Self { chosen })
    }

    /// From 1-based labels, e.g. `[1, 2, 4]`.
    pub fn from_labels(labels: [usize; 3]) -> Result<Self> {
        let eq = |l: usize| Equation::from_label(l).ok_or_else(|| invalid(format!("no reduced equation {l}")));
        Self::new([eq(labels[0])?, eq(labels[1])?, eq(labels[2])?])
    }

    pub fn equations(&self) -> [Equation; 3] {
        self.chosen
    }
}

/// The four reduced gain equations and their error-rate counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub basis: Basis,
    /// `Ỹ_dd, Ỹ_ds, Ỹ_sd, Ỹ_ss`.
    pub y_tilde: [f64; 4],
    /// `T̃_dd, T̃_ds, T̃_sd, T̃_ss`.
    pub t_tilde: [f64; 4],
    pub h_a: HRatioTable,
    pub h_b: HRatioTable,
}

impl ReducedSystem {
    pub fn y_tilde(&self, eq: Equation) -> f64 {
        self.y_tilde[eq.index()]
    }

    pub fn t_tilde(&self, eq: Equation) -> f64 {
        self.t_tilde[eq.index()]
    }

    /// Coefficient `h̃_{a_k}^i h̃_{b_l}^j` of `y_kl` in equation `(i, j)`.
    #[inline]
    pub fn coefficient(&self, eq: Equation, k: usize, l: usize) -> f64 {
        let (i, j) = eq.members();
        self.h_a.tilde(i, k) * self.h_b.tilde(j, l)
    }

    fn party_determinants(&self) -> Result<(f64, f64)> {
        let da = self.h_a.elimination_determinant();
        let db = self.h_b.elimination_determinant();
        if !(da > 0.0 && db > 0.0) || !da.is_finite() || !db.is_finite() {
            return Err(Error::InadmissibleTriple(format!(
                "elimination determinants must be positive, got {da:e} (Alice) and {db:e} (Bob)"
            )));
        }
        Ok((da, db))
    }

    /// Multi-photon index pairs `(m, n)`, `m, n >= 1`, `m + n >= min_sum`,
    /// within both truncations.
    fn residual_indices(&self, min_sum: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (na, nb) = (self.h_a.n_max(), self.h_b.n_max());
        (1..=na).flat_map(move |m| (1..=nb).map(move |n| (m, n))).filter(move |&(m, n)| m + n >= min_sum)
    }
}

/// Cancels every vacuum-involving yield from the nine gains (and the nine
/// error products), leaving four equations in `y_kl`, `k, l >= 1`.
pub fn reduce(stats: &ObservedStatistics, alice: &SourceTriple, bob: &SourceTriple) -> ReducedSystem {
    use Member::V;
    let a0 = |m: Member| alice.get(m).prob(0);
    let b0 = |m: Member| bob.get(m).prob(0);
    let mut y_tilde = [0.0; 4];
    let mut t_tilde = [0.0; 4];
    for eq in Equation::ALL {
        let (i, j) = eq.members();
        let y = |a, b| stats.gain(a, b);
        let primed =
            a0(V) * b0(V) * y(i, j) - a0(V) * b0(j) * y(i, V) - a0(i) * b0(V) * y(V, j) + a0(i) * b0(j) * y(V, V);
        y_tilde[eq.index()] = primed / (a0(V) * a0(i) * b0(V) * b0(j));

        let t = |a, b| stats.error_product(a, b);
        t_tilde[eq.index()] = t(i, j) / (a0(i) * b0(j)) - t(i, V) / (a0(i) * b0(V)) - t(V, j) / (a0(V) * b0(j))
            + t(V, V) / (a0(V) * b0(V));
    }
    ReducedSystem { basis: stats.basis, y_tilde, t_tilde, h_a: alice.h_ratios(), h_b: bob.h_ratios() }
}

/// Smallest multi-photon coefficient of a bound and where it sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientCheck {
    pub min_f: f64,
    pub argmin: (usize, usize),
    /// Largest `|f|` over the same indices.
    pub scale: f64,
    /// `min_f >= -tolerance()`: the value is a certified lower bound.
    pub valid: bool,
}

impl CoefficientCheck {
    fn over(indices: impl Iterator<Item = (usize, usize)>, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut min_f = f64::INFINITY;
        let mut argmin = (0, 0);
        let mut scale = 0.0f64;
        for (m, n) in indices {
            let v = f(m, n);
            scale = scale.max(v.abs());
            if v < min_f || v.is_nan() {
                min_f = v;
                argmin = (m, n);
            }
        }
        let mut check = Self { min_f, argmin, scale, valid: false };
        check.valid = min_f >= -check.tolerance();
        check
    }

    /// Coefficients that vanish exactly in exact arithmetic come out as
    /// rounding noise proportional to the largest coefficient, so the slack
    /// scales with it.
    pub fn tolerance(&self) -> f64 {
        INEQUALITY_TOLERANCE * self.scale.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeEquationBound {
    pub value: f64,
    pub check: CoefficientCheck,
    /// Weights `w` with `value = Σ w_r Ỹ_r` over the selected equations.
    pub weights: [f64; 3],
}

/// Eliminates `y12` and `y21` from three reduced equations.
///
/// Solving the 3×3 system in `(y11, y12, y21)` gives `y11 = w·(Ỹ - J)` with
/// `w` the first row of the inverse coefficient matrix, so the estimate is
/// `w·Ỹ` and the coefficient of each residual `y_mn` is `-w·c(m, n)`.
pub fn bound_y11_three_eq(sys: &ReducedSystem, selector: EquationSelector) -> Result<ThreeEquationBound> {
    sys.party_determinants()?;
    let eqs = selector.equations();
    let row = |eq: Equation| [sys.coefficient(eq, 1, 1), sys.coefficient(eq, 1, 2), sys.coefficient(eq, 2, 1)];
    let m = [row(eqs[0]), row(eqs[1]), row(eqs[2])];

    // First row of the inverse: cofactors of the first column over det.
    let cof = [
        m[1][1] * m[2][2] - m[1][2] * m[2][1],
        -(m[0][1] * m[2][2] - m[0][2] * m[2][1]),
        m[0][1] * m[1][2] - m[0][2] * m[1][1],
    ];
    let det = m[0][0] * cof[0] + m[1][0] * cof[1] + m[2][0] * cof[2];
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if !det.is_finite() || det.abs() <= f64::EPSILON * scale.powi(3) {
        return Err(Error::InadmissibleTriple(format!(
            "equations {}{}{} are degenerate (det = {det:e})",
            eqs[0].label(),
            eqs[1].label(),
            eqs[2].label()
        )));
    }
    let weights = [cof[0] / det, cof[1] / det, cof[2] / det];
    let value: f64 = eqs.iter().zip(&weights).map(|(eq, w)| w * sys.y_tilde(*eq)).sum();
    let check = CoefficientCheck::over(sys.residual_indices(4), |mm, nn| {
        -eqs.iter().zip(&weights).map(|(eq, w)| w * sys.coefficient(*eq, mm, nn)).sum::<f64>()
    });
    Ok(ThreeEquationBound { value, check, weights })
}

/// The two-equation (`dd`, `ss`) bound and its branch data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoEquationBound {
    pub y11_14a: f64,
    pub y11_14b: f64,
    pub ka: f64,
    pub kb: f64,
    /// `min(y11_14a, y11_14b)`.
    pub y11_14: f64,
    pub check_a: CoefficientCheck,
    pub check_b: CoefficientCheck,
}

impl TwoEquationBound {
    /// Coefficient check of the branch selected by `K_a <= K_b`.
    pub fn branch_check(&self) -> CoefficientCheck {
        if self.ka <= self.kb {
            self.check_a
        } else {
            self.check_b
        }
    }
}

/// Residual coefficients `f^(14a)(m, n)` and `f^(14b)(m, n)` of the
/// two-equation bound.
pub fn two_equation_coefficients(sys: &ReducedSystem, m: usize, n: usize) -> (f64, f64) {
    let (a, b) = (&sys.h_a, &sys.h_b);
    let da = a.elimination_determinant();
    let db = b.elimination_determinant();
    let fa = (a.tilde_d(1) * b.tilde_d(2) * a.tilde_s(m) * b.tilde_s(n)
        - a.tilde_s(1) * b.tilde_s(2) * a.tilde_d(m) * b.tilde_d(n))
        / (a.tilde_d(1) * a.tilde_s(1) * db);
    let fb = (a.tilde_d(2) * b.tilde_d(1) * a.tilde_s(m) * b.tilde_s(n)
        - a.tilde_s(2) * b.tilde_s(1) * a.tilde_d(m) * b.tilde_d(n))
        / (b.tilde_d(1) * b.tilde_s(1) * da);
    (fa, fb)
}

/// Bound from the `dd` and `ss` equations alone, eliminating either `y12`
/// (variant a) or `y21` (variant b).
pub fn bound_y11_14(sys: &ReducedSystem) -> Result<TwoEquationBound> {
    let (da, db) = sys.party_determinants()?;
    let (a, b) = (&sys.h_a, &sys.h_b);
    let (ydd, yss) = (sys.y_tilde(Equation::Dd), sys.y_tilde(Equation::Ss));
    let y11_14a =
        (a.tilde_s(1) * b.tilde_s(2) * ydd - a.tilde_d(1) * b.tilde_d(2) * yss) / (a.tilde_d(1) * a.tilde_s(1) * db);
    let y11_14b =
        (a.tilde_s(2) * b.tilde_s(1) * ydd - a.tilde_d(2) * b.tilde_d(1) * yss) / (b.tilde_d(1) * b.tilde_s(1) * da);
    let ka = a.tilde_s(1) * b.tilde_s(2) / (a.tilde_d(1) * b.tilde_d(2));
    let kb = a.tilde_s(2) * b.tilde_s(1) / (a.tilde_d(2) * b.tilde_d(1));
    let check_a = CoefficientCheck::over(sys.residual_indices(3), |m, n| two_equation_coefficients(sys, m, n).0);
    let check_b = CoefficientCheck::over(sys.residual_indices(3), |m, n| two_equation_coefficients(sys, m, n).1);
    Ok(TwoEquationBound { y11_14a, y11_14b, ka, kb, y11_14: y11_14a.min(y11_14b), check_a, check_b })
}

/// `e11 <= T̃_dd / (h̃_{a1}^d h̃_{b1}^d y11)`, evaluated with a lower bound
/// on `y11` and clamped to `[0, 1]`.
pub fn bound_e11(sys: &ReducedSystem, y11_lower: f64) -> Result<f64> {
    if !(y11_lower > 0.0) {
        return Err(Error::UndefinedBound(format!("e11 needs a positive y11 lower bound, got {y11_lower:e}")));
    }
    let raw = sys.t_tilde(Equation::Dd) / (sys.h_a.tilde_d(1) * sys.h_b.tilde_d(1) * y11_lower);
    Ok(raw.clamp(0.0, 1.0))
}

/// Named bound variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Eq123,
    Eq124,
    Eq134,
    Eq234,
    Eq14,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Eq123, Variant::Eq124, Variant::Eq134, Variant::Eq234, Variant::Eq14];

    pub fn index(self) -> usize {
        match self {
            Variant::Eq123 => 0,
            Variant::Eq124 => 1,
            Variant::Eq134 => 2,
            Variant::Eq234 => 3,
            Variant::Eq14 => 4,
        }
    }

    /// Short key: `123`, `124`, `134`, `234`, `14`.
    pub fn key(self) -> &'static str {
        match self {
            Variant::Eq123 => "123",
            Variant::Eq124 => "124",
            Variant::Eq134 => "134",
            Variant::Eq234 => "234",
            Variant::Eq14 => "14",
        }
    }

    pub fn selector(self) -> Option<EquationSelector> {
        match self {
            Variant::Eq123 => Some(EquationSelector::S123),
            Variant::Eq124 => Some(EquationSelector::S124),
            Variant::Eq134 => Some(EquationSelector::S134),
            Variant::Eq234 => Some(EquationSelector::S234),
            Variant::Eq14 => None,
        }
    }
}

/// Every bound variant for one basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub basis: Basis,
    pub y11_123: f64,
    pub y11_124: f64,
    pub y11_134: f64,
    pub y11_234: f64,
    pub y11_14a: f64,
    pub y11_14b: f64,
    pub ka: f64,
    pub kb: f64,
    pub y11_14: f64,
    /// `max(0, y11_123)`.
    pub y11_best: f64,
    /// Upper bound on `e11` from `y11_123`; `None` when that bound is not positive.
    pub e11_upper: Option<f64>,
    /// Coefficient checks in [`Variant::ALL`] order; the two-equation entry
    /// is the branch chosen by `K_a <= K_b`.
    pub diagnostics: [CoefficientCheck; 5],
    /// `e11` upper bound derived from each variant's own `y11` bound.
    pub e11_by_variant: [Option<f64>; 5],
    /// Some reduced gain came out negative, which exact forward-model data
    /// never produce.
    pub inconsistent_data: bool,
    pub n_max: (usize, usize),
}

impl BoundReport {
    pub fn y11(&self, variant: Variant) -> f64 {
        match variant {
            Variant::Eq123 => self.y11_123,
            Variant::Eq124 => self.y11_124,
            Variant::Eq134 => self.y11_134,
            Variant::Eq234 => self.y11_234,
            Variant::Eq14 => self.y11_14,
        }
    }

    pub fn e11(&self, variant: Variant) -> Option<f64> {
        self.e11_by_variant[variant.index()]
    }

    pub fn diagnostic(&self, variant: Variant) -> CoefficientCheck {
        self.diagnostics[variant.index()]
    }
}

/// Reduces one basis and evaluates every bound variant.
pub fn report_for_basis(stats: &ObservedStatistics, alice: &SourceTriple, bob: &SourceTriple) -> Result<BoundReport> {
    let sys = reduce(stats, alice, bob);
    report_from_system(&sys)
}

pub fn report_from_system(sys: &ReducedSystem) -> Result<BoundReport> {
    let b123 = bound_y11_three_eq(sys, EquationSelector::S123)?;
    let b124 = bound_y11_three_eq(sys, EquationSelector::S124)?;
    let b134 = bound_y11_three_eq(sys, EquationSelector::S134)?;
    let b234 = bound_y11_three_eq(sys, EquationSelector::S234)?;
    let b14 = bound_y11_14(sys)?;
    let values = [b123.value, b124.value, b134.value, b234.value, b14.y11_14];
    let e11_by_variant = values.map(|y| bound_e11(sys, y).ok());
    Ok(BoundReport {
        basis: sys.basis,
        y11_123: b123.value,
        y11_124: b124.value,
        y11_134: b134.value,
        y11_234: b234.value,
        y11_14a: b14.y11_14a,
        y11_14b: b14.y11_14b,
        ka: b14.ka,
        kb: b14.kb,
        y11_14: b14.y11_14,
        y11_best: b123.value.max(0.0),
        e11_upper: e11_by_variant[0],
        diagnostics: [b123.check, b124.check, b134.check, b234.check, b14.branch_check()],
        e11_by_variant,
        inconsistent_data: sys.y_tilde.iter().any(|&y| y < 0.0),
        n_max: (sys.h_a.n_max(), sys.h_b.n_max()),
    })
}

/// Reports for both bases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisReports {
    pub z: BoundReport,
    pub x: BoundReport,
}

/// Runs every bound on both bases. The key rate takes `y11` from the Z
/// report and `e11` from the X report, whose phase-error estimate uses the
/// X-basis `y11` bound.
pub fn full_report(
    stats_z: &ObservedStatistics,
    stats_x: &ObservedStatistics,
    alice: &SourceTriple,
    bob: &SourceTriple,
) -> Result<BasisReports> {
    if stats_z.basis != Basis::Z || stats_x.basis != Basis::X {
        return Err(invalid("full_report expects Z-basis then X-basis statistics"));
    }
    Ok(BasisReports { z: report_for_basis(stats_z, alice, bob)?, x: report_for_basis(stats_x, alice, bob)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{PhotonDistribution, SourceTriple};
    use crate::table::PhotonTable;
    use approx::assert_relative_eq;

    fn default_sources() -> SourceTriple {
        SourceTriple::coherent([0.01, 0.1, 0.5], 20).unwrap()
    }

    // Test-local forward sum over a yield table.
    fn forward(alice: &SourceTriple, bob: &SourceTriple, y: &PhotonTable, basis: Basis) -> ObservedStatistics {
        let mut gains = [[0.0; 3]; 3];
        for a in Member::ALL {
            for b in Member::ALL {
                let (pa, pb) = (alice.get(a).probs(), bob.get(b).probs());
                let mut acc = 0.0;
                for (k, &x) in pa.iter().enumerate() {
                    for (l, &z) in pb.iter().enumerate() {
                        acc += x * z * y.get(k, l);
                    }
                }
                gains[a.index()][b.index()] = acc;
            }
        }
        ObservedStatistics::new(basis, gains, [[0.0; 3]; 3]).unwrap()
    }

    fn sparse(n_max: usize, entries: &[((usize, usize), f64)]) -> PhotonTable {
        let mut t = PhotonTable::zeros(n_max);
        for &((k, l), v) in entries {
            t.set(k, l, v);
        }
        t
    }

    // Closed form of the (dd, ds, sd) bound, written out term by term.
    fn closed_form_123(sys: &ReducedSystem) -> f64 {
        let (a, b) = (&sys.h_a, &sys.h_b);
        let (a1d, a2d, a1s, a2s) = (a.tilde_d(1), a.tilde_d(2), a.tilde_s(1), a.tilde_s(2));
        let (b1d, b2d, b1s, b2s) = (b.tilde_d(1), b.tilde_d(2), b.tilde_s(1), b.tilde_s(2));
        let da = a1d * a2s - a1s * a2d;
        let db = b1d * b2s - b1s * b2d;
        let num = (a1d * a2s * b1d * b2s - a1s * a2d * b1s * b2d) * sys.y_tilde[0]
            - b1d * b2d * da * sys.y_tilde[1]
            - a1d * a2d * db * sys.y_tilde[2];
        num / (a1d * b1d * da * db)
    }

    // Closed form of the (dd, ds, ss) bound.
    fn closed_form_124(sys: &ReducedSystem) -> f64 {
        let (a, b) = (&sys.h_a, &sys.h_b);
        let (a1d, a2d, a1s, a2s) = (a.tilde_d(1), a.tilde_d(2), a.tilde_s(1), a.tilde_s(2));
        let (b1d, b2d, b1s, b2s) = (b.tilde_d(1), b.tilde_d(2), b.tilde_s(1), b.tilde_s(2));
        let da = a1d * a2s - a1s * a2d;
        let db = b1d * b2s - b1s * b2d;
        let num = b1s * b2s * da * sys.y_tilde[0] + (a1s * a2d * b1d * b2s - a1d * a2s * b1s * b2d) * sys.y_tilde[1]
            - a1d * a2d * db * sys.y_tilde[3];
        num / (a1d * b1s * da * db)
    }

    #[test]
    fn zero_gains_reduce_to_zero() {
        let s = default_sources();
        let sys = reduce(&ObservedStatistics::zeros(Basis::Z), &s, &s);
        assert_eq!(sys.y_tilde, [0.0; 4]);
        assert_eq!(sys.t_tilde, [0.0; 4]);
        for sel in [EquationSelector::S123, EquationSelector::S124, EquationSelector::S134, EquationSelector::S234] {
            assert_eq!(bound_y11_three_eq(&sys, sel).unwrap().value, 0.0);
        }
    }

    #[test]
    fn y11_only_reduces_to_product_of_first_ratios() {
        let s = default_sources();
        let y = sparse(20, &[((1, 1), 0.1)]);
        let sys = reduce(&forward(&s, &s, &y, Basis::Z), &s, &s);
        for eq in Equation::ALL {
            let (i, j) = eq.members();
            let expect = sys.h_a.tilde(i, 1) * sys.h_b.tilde(j, 1) * 0.1;
            assert_relative_eq!(sys.y_tilde(eq), expect, max_relative = 1e-9);
        }
        for v in [Variant::Eq123, Variant::Eq124, Variant::Eq134, Variant::Eq234] {
            let b = bound_y11_three_eq(&sys, v.selector().unwrap()).unwrap();
            assert!((b.value - 0.1).abs() < 1e-12, "{v:?}: {}", b.value);
        }
        let two = bound_y11_14(&sys).unwrap();
        assert!((two.y11_14 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn generic_eliminator_matches_closed_forms() {
        let alice = SourceTriple::coherent([0.02, 0.15, 0.6], 12).unwrap();
        let bob = SourceTriple::thermal([0.01, 0.1, 0.4], 12).unwrap();
        let y = PhotonTable::from_fn(12, |k, l| 0.01 + 0.003 * ((k * 7 + l * 3) % 11) as f64);
        let sys = reduce(&forward(&alice, &bob, &y, Basis::Z), &alice, &bob);
        let g123 = bound_y11_three_eq(&sys, EquationSelector::S123).unwrap().value;
        let g124 = bound_y11_three_eq(&sys, EquationSelector::S124).unwrap().value;
        assert_relative_eq!(g123, closed_form_123(&sys), max_relative = 1e-9);
        assert_relative_eq!(g124, closed_form_124(&sys), max_relative = 1e-9);
    }

    #[test]
    fn exact_on_low_order_support() {
        let alice = SourceTriple::coherent([0.05, 0.2, 0.7], 10).unwrap();
        let bob = SourceTriple::coherent([0.01, 0.1, 0.5], 10).unwrap();
        let y = sparse(10, &[((1, 1), 0.07), ((1, 2), 0.09), ((2, 1), 0.03)]);
        let sys = reduce(&forward(&alice, &bob, &y, Basis::Z), &alice, &bob);
        for v in [Variant::Eq123, Variant::Eq124, Variant::Eq134, Variant::Eq234] {
            let b = bound_y11_three_eq(&sys, v.selector().unwrap()).unwrap();
            assert!((b.value - 0.07).abs() < 1e-9, "{v:?}: {}", b.value);
        }
    }

    #[test]
    fn coefficient_signs_hold_for_standard_sources() {
        for s in [default_sources(), SourceTriple::thermal([0.01, 0.1, 0.5], 20).unwrap()] {
            let sys = reduce(&ObservedStatistics::zeros(Basis::Z), &s, &s);
            for sel in [EquationSelector::S123, EquationSelector::S124] {
                let b = bound_y11_three_eq(&sys, sel).unwrap();
                assert!(b.check.valid, "{sel:?}: {:?}", b.check);
            }
            assert!(bound_y11_14(&sys).unwrap().branch_check().valid);
        }
    }

    #[test]
    fn symmetric_sources_give_equal_branches() {
        let s = default_sources();
        let y = PhotonTable::from_fn(20, |k, l| if k + l == 0 { 0.0 } else { 0.02 + 0.001 * (k + 2 * l) as f64 });
        let sys = reduce(&forward(&s, &s, &y, Basis::Z), &s, &s);
        let two = bound_y11_14(&sys).unwrap();
        assert_eq!(two.ka, two.kb);
        assert_relative_eq!(two.y11_14a, two.y11_14b, max_relative = 1e-12);
    }

    #[test]
    fn two_equation_difference_has_opposite_sign_to_k_gap() {
        let alice = SourceTriple::coherent([0.05, 0.2, 0.7], 8).unwrap();
        let bob = SourceTriple::coherent([0.01, 0.3, 0.5], 8).unwrap();
        let sys = reduce(&ObservedStatistics::zeros(Basis::Z), &alice, &bob);
        let two = bound_y11_14(&sys).unwrap();
        let (a, b) = (&sys.h_a, &sys.h_b);
        let (da, db) = (a.elimination_determinant(), b.elimination_determinant());
        for (m, n) in sys.residual_indices(3) {
            let (fa, fb) = two_equation_coefficients(&sys, m, n);
            let factor = a.tilde_d(2)
                * b.tilde_d(2)
                * (a.tilde_d(1) * a.tilde_s(m) * b.tilde_d(1) * b.tilde_s(n)
                    - a.tilde_s(1) * a.tilde_d(m) * b.tilde_s(1) * b.tilde_d(n))
                / (a.tilde_s(1) * b.tilde_s(1) * da * db);
            let expect = -factor * (two.ka - two.kb);
            assert!((fa - fb - expect).abs() <= 1e-10 * (1.0 + expect.abs()), "({m},{n})");
        }
    }

    #[test]
    fn degenerate_triple_rejected() {
        let d = PhotonDistribution::coherent(0.1, 10).unwrap();
        let v = PhotonDistribution::coherent(0.01, 10).unwrap();
        let bad = SourceTriple::unchecked(v, d.clone(), d).unwrap();
        let good = SourceTriple::coherent([0.01, 0.1, 0.5], 10).unwrap();
        let sys = reduce(&ObservedStatistics::zeros(Basis::Z), &bad, &good);
        assert!(matches!(bound_y11_three_eq(&sys, EquationSelector::S123), Err(Error::InadmissibleTriple(_))));
        assert!(matches!(bound_y11_14(&sys), Err(Error::InadmissibleTriple(_))));
    }

    #[test]
    fn e11_cases() {
        let s = default_sources();
        let sys = reduce(&ObservedStatistics::zeros(Basis::X), &s, &s);
        assert_eq!(bound_e11(&sys, 0.1).unwrap(), 0.0);
        assert!(matches!(bound_e11(&sys, 0.0), Err(Error::UndefinedBound(_))));
        assert!(matches!(bound_e11(&sys, -1.0), Err(Error::UndefinedBound(_))));

        // t11 = e * y11 only.
        let (y11, e) = (0.2, 0.03);
        let mut stats = forward(&s, &s, &sparse(20, &[((1, 1), y11)]), Basis::X);
        let t = forward(&s, &s, &sparse(20, &[((1, 1), y11 * e)]), Basis::X);
        for a in 0..3 {
            for b in 0..3 {
                stats.error_rates[a][b] = t.gains[a][b] / stats.gains[a][b];
            }
        }
        let sys = reduce(&stats, &s, &s);
        assert_relative_eq!(bound_e11(&sys, y11).unwrap(), e, max_relative = 1e-9);
        assert!(bound_e11(&sys, 0.5 * y11).unwrap() >= e);
    }

    #[test]
    fn selector_validation() {
        assert!(EquationSelector::from_labels([1, 1, 2]).is_err());
        assert!(EquationSelector::from_labels([1, 2, 5]).is_err());
        assert_eq!(EquationSelector::from_labels([4, 2, 1]).unwrap(), EquationSelector::S124);
    }

    #[test]
    fn statistics_json_schema() {
        let text = r#"{"basis":"X","gains":[[0.1,0.2,0.3],[0.1,0.2,0.3],[0.1,0.2,0.3]],
            "error_rates":[[0.5,0.5,0.5],[0.1,0.1,0.1],[0.0,0.0,0.0]]}"#;
        let s = ObservedStatistics::from_json(text).unwrap();
        assert_eq!(s.basis, Basis::X);
        assert_eq!(s.gain(Member::D, Member::S), 0.3);
        assert_eq!(s.error_rate(Member::V, Member::D), 0.5);
        assert_eq!(ObservedStatistics::from_json(&s.to_json()).unwrap(), s);
        let bad = text.replace("0.5,0.5,0.5", "1.5,0.5,0.5");
        assert!(ObservedStatistics::from_json(&bad).is_err());
    }

    #[test]
    fn zero_gain_report() {
        let s = default_sources();
        let z = ObservedStatistics::zeros(Basis::Z);
        let x = ObservedStatistics::zeros(Basis::X);
        let r = full_report(&z, &x, &s, &s).unwrap();
        assert_eq!(r.z.y11_best, 0.0);
        assert_eq!(r.x.e11_upper, None);
        assert!(r.z.e11_by_variant.iter().all(Option::is_none));
    }

    #[test]
    fn identical_bases_give_identical_reports() {
        let s = default_sources();
        let y = PhotonTable::from_fn(20, |k, l| 0.01 * (1 + k + l) as f64 / 10.0);
        let z = forward(&s, &s, &y, Basis::Z);
        let x = ObservedStatistics { basis: Basis::X, ..z.clone() };
        let r = full_report(&z, &x, &s, &s).unwrap();
        assert_eq!(r.z.y11_123, r.x.y11_123);
        assert_eq!(r.z.y11_14, r.x.y11_14);
        assert_eq!(r.z.e11_by_variant, r.x.e11_by_variant);
        assert!(full_report(&x, &z, &s, &s).is_err());
    }
}
