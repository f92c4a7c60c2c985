//! Brute-force cross-checks of the bound pipeline on synthetic yield tables.
//!
//! Instances carry an explicit `y_kl`/`t_kl` table, so the true `y11` and
//! `e11` are known and every inequality the bounds promise can be checked
//! directly. The forward sum here is a separate implementation from
//! [`crate::channel::observe`] on purpose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    bound_y11_14, reduce, report_from_system, two_equation_coefficients, Basis, BoundReport, Equation,
    ObservedStatistics, ReducedSystem, Variant, INEQUALITY_TOLERANCE,
};
use crate::channel::YieldTable;
use crate::error::{invalid, Error, Result};
use crate::lp::{minimize, LpOutcome};
use crate::source::{Member, SourceFamily, SourceTriple, MIN_N_MAX};
use crate::table::PhotonTable;

/// Slack allowed when a bound is compared with the true `y11`.
pub const UNDERBOUND_TOLERANCE: f64 = 1e-9;
/// Largest accepted residual of the reduced-gain identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Differences of two-equation coefficients below this are ignored when
/// comparing their sign with `K_a - K_b`.
pub const SIGN_LINK_FLOOR: f64 = 1e-14;
/// Largest truncation handed to the LP check.
pub const LP_MAX_N_MAX: usize = 6;

/// Suite truncations cycled through when none is forced.
pub const SUITE_N_MAX: [usize; 3] = [4, 6, 10];

const INTENSITY_RANGE: (f64, f64) = (0.005, 0.8);
/// Closer draws are redrawn: the elimination becomes numerically singular.
const MIN_INTENSITY_GAP: f64 = 1e-4;
const YIELD_MAX: f64 = 0.1;
const ERROR_MAX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub alice: SourceTriple,
    pub bob: SourceTriple,
    pub yields: YieldTable,
    pub seed: u64,
}

impl SyntheticInstance {
    pub fn new(alice: SourceTriple, bob: SourceTriple, yields: YieldTable, seed: u64) -> Result<Self> {
        let n = yields.n_max();
        if alice.n_max() != n || bob.n_max() != n {
            return Err(invalid(format!(
                "instance truncations differ: Alice {}, Bob {}, yields {n}",
                alice.n_max(),
                bob.n_max()
            )));
        }
        Ok(Self { alice, bob, yields, seed })
    }

    /// Seeded random instance: each party gets a coherent or thermal triple
    /// with sorted intensities drawn from (0.005, 0.8) at least 1e-4 apart;
    /// every `y_kl` is uniform on [0, 0.1] and every `e_kl` on [0, 0.5].
    pub fn random(seed: u64, n_max: usize) -> Result<Self> {
        if n_max < MIN_N_MAX {
            return Err(invalid(format!("n_max must be >= {MIN_N_MAX}, got {n_max}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let party = |rng: &mut ChaCha8Rng| -> Result<SourceTriple> {
            let family = if rng.random_bool(0.5) { SourceFamily::Coherent } else { SourceFamily::Thermal };
            loop {
                let mut mu: [f64; 3] = std::array::from_fn(|_| rng.random_range(INTENSITY_RANGE.0..INTENSITY_RANGE.1));
                mu.sort_by(f64::total_cmp);
                if mu[1] - mu[0] >= MIN_INTENSITY_GAP && mu[2] - mu[1] >= MIN_INTENSITY_GAP {
                    return family.triple(mu, n_max);
                }
            }
        };
        let alice = party(&mut rng)?;
        let bob = party(&mut rng)?;
        let y = PhotonTable::from_fn(n_max, |_, _| rng.random_range(0.0..YIELD_MAX));
        let t = PhotonTable::from_fn(n_max, |k, l| y.get(k, l) * rng.random_range(0.0..ERROR_MAX));
        Self::new(alice, bob, YieldTable::new(y, t, Basis::Z)?, seed)
    }

    /// Instance with yields only on the listed photon-number pairs and a
    /// common error rate `e` on them.
    pub fn supported_on(
        alice: SourceTriple,
        bob: SourceTriple,
        entries: &[((usize, usize), f64)],
        e: f64,
    ) -> Result<Self> {
        let n = alice.n_max();
        let mut y = PhotonTable::zeros(n);
        let mut t = PhotonTable::zeros(n);
        for &((k, l), v) in entries {
            y.set(k, l, v);
            t.set(k, l, v * e);
        }
        Self::new(alice, bob, YieldTable::new(y, t, Basis::Z)?, 0)
    }

    pub fn n_max(&self) -> usize {
        self.yields.n_max()
    }
}

/// Gains and error rates by direct double summation over the table.
pub fn forward(instance: &SyntheticInstance) -> ObservedStatistics {
    let n = instance.n_max();
    let (y, t) = (&instance.yields.y, &instance.yields.t);
    let mut gains = [[0.0; 3]; 3];
    let mut error_rates = [[0.0; 3]; 3];
    for a in Member::ALL {
        for b in Member::ALL {
            let (pa, pb) = (instance.alice.get(a), instance.bob.get(b));
            let mut gain = 0.0;
            let mut err = 0.0;
            for k in 0..=n {
                for l in 0..=n {
                    let w = pa.prob(k) * pb.prob(l);
                    gain += w * y.get(k, l);
                    err += w * t.get(k, l);
                }
            }
            gains[a.index()][b.index()] = gain;
            error_rates[a.index()][b.index()] = if gain > 0.0 { err / gain } else { 0.0 };
        }
    }
    ObservedStatistics { basis: instance.yields.basis, gains, error_rates }
}

/// One named pass/fail entry. A check passes when `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, margin: f64, tolerance: f64) -> Self {
        Self { name: name.into(), margin, tolerance, passed: margin >= -tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub n_max: usize,
    pub true_y11: f64,
    pub true_e11: f64,
    pub bounds: BoundReport,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Independent evaluation of `Σ_{k,l>=1} h̃_k^i h̃_l^j y_kl` straight from
/// the photon-number probabilities.
fn explicit_reduced_sum(instance: &SyntheticInstance, eq: Equation, table: &PhotonTable) -> f64 {
    let (i, j) = eq.members();
    let tilde =
        |t: &SourceTriple, m: Member, k: usize| t.get(m).prob(k) / t.get(m).prob(0) - t.v().prob(k) / t.v().prob(0);
    let n = instance.n_max();
    let mut acc = 0.0;
    for k in 1..=n {
        for l in 1..=n {
            acc += tilde(&instance.alice, i, k) * tilde(&instance.bob, j, l) * table.get(k, l);
        }
    }
    acc
}

/// Largest sign disagreement count between `f^(14a) - f^(14b)` and
/// `-(K_a - K_b)`; zero when the relation holds everywhere on the truncation.
fn sign_link_violations(sys: &ReducedSystem) -> Result<usize> {
    let two = bound_y11_14(sys)?;
    let gap = two.ka - two.kb;
    if gap.abs() <= INEQUALITY_TOLERANCE * two.ka.abs().max(two.kb.abs()) {
        return Ok(0);
    }
    let n = sys.h_a.n_max().min(sys.h_b.n_max());
    let mut bad = 0;
    for m in 1..=n {
        for k in 1..=n {
            if m + k < 3 {
                continue;
            }
            let (fa, fb) = two_equation_coefficients(sys, m, k);
            let diff = fa - fb;
            if diff.abs() > SIGN_LINK_FLOOR && diff.signum() == gap.signum() {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

/// Runs every bound on the instance and checks each promised inequality
/// against the true table. Refuses instances whose sources fail the ratio
/// condition.
pub fn check_instance(instance: &SyntheticInstance) -> Result<VerificationReport> {
    check_instance_with(instance, false)
}

/// As [`check_instance`], optionally adding the LP tightness comparison.
pub fn check_instance_with(instance: &SyntheticInstance, with_lp: bool) -> Result<VerificationReport> {
    for (who, t) in [("Alice", &instance.alice), ("Bob", &instance.bob)] {
        if !t.check_condition()?.passed() {
            return Err(Error::InadmissibleTriple(format!("{who}'s sources fail the ratio condition")));
        }
    }
    let stats = forward(instance);
    let sys = reduce(&stats, &instance.alice, &instance.bob);
    let report = report_from_system(&sys)?;
    let true_y11 = instance.yields.y11();
    let true_e11 = instance.yields.e11();
    let mut checks = Vec::new();

    for v in Variant::ALL {
        let diag = report.diagnostic(v);
        if v == Variant::Eq123 || v == Variant::Eq124 || v == Variant::Eq14 {
            checks.push(Check::new(format!("coefficients_{}", v.key()), diag.min_f, diag.tolerance()));
        }
        if diag.valid {
            checks.push(Check::new(format!("underbound_{}", v.key()), true_y11 - report.y11(v), UNDERBOUND_TOLERANCE));
        }
    }
    for v in [Variant::Eq124, Variant::Eq134, Variant::Eq234, Variant::Eq14] {
        checks.push(Check::new(format!("order_123_{}", v.key()), report.y11_123 - report.y11(v), INEQUALITY_TOLERANCE));
    }

    let mut residual = 0.0f64;
    for eq in Equation::ALL {
        residual = residual.max((sys.y_tilde(eq) - explicit_reduced_sum(instance, eq, &instance.yields.y)).abs());
        residual = residual.max((sys.t_tilde(eq) - explicit_reduced_sum(instance, eq, &instance.yields.t)).abs());
    }
    checks.push(Check::new("reduction_identity", -residual, IDENTITY_TOLERANCE));

    if let Some(e11) = report.e11_upper {
        checks.push(Check::new("e11_safety", e11 - true_e11, INEQUALITY_TOLERANCE));
    }
    checks.push(Check::new("kakb_sign_link", -(sign_link_violations(&sys)? as f64), 0.0));

    if with_lp && instance.n_max() <= LP_MAX_N_MAX {
        match lp_tightness(instance)? {
            Some(lp) => checks.push(Check::new("lp_tightness", lp - report.y11_123, UNDERBOUND_TOLERANCE)),
            None => checks.push(Check::new("lp_tightness", f64::NEG_INFINITY, UNDERBOUND_TOLERANCE)),
        }
    }

    Ok(VerificationReport { seed: instance.seed, n_max: instance.n_max(), true_y11, true_e11, bounds: report, checks })
}

/// Smallest `y11` consistent with the nine observed gains over all
/// non-negative yield tables of the instance's truncation. `None` if the LP
/// turns out infeasible.
pub fn lp_tightness(instance: &SyntheticInstance) -> Result<Option<f64>> {
    let n = instance.n_max();
    if n > LP_MAX_N_MAX {
        return Err(invalid(format!("LP check is limited to n_max <= {LP_MAX_N_MAX}, got {n}")));
    }
    let dim = n + 1;
    let stats = forward(instance);
    let mut rows = Vec::with_capacity(9);
    let mut rhs = Vec::with_capacity(9);
    for a in Member::ALL {
        for b in Member::ALL {
            let (pa, pb) = (instance.alice.get(a), instance.bob.get(b));
            rows.push((0..dim * dim).map(|idx| pa.prob(idx / dim) * pb.prob(idx % dim)).collect::<Vec<_>>());
            rhs.push(stats.gain(a, b));
        }
    }
    let mut cost = vec![0.0; dim * dim];
    cost[dim + 1] = 1.0;
    match minimize(&cost, &rows, &rhs)? {
        LpOutcome::Optimal { objective, .. } => Ok(Some(objective)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(invalid("y11 minimisation cannot be unbounded below zero")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub instances: usize,
    pub seed: u64,
    /// Fixed truncation; `None` cycles through [`SUITE_N_MAX`].
    pub n_max: Option<usize>,
    pub lp: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { instances: 1000, seed: 0, n_max: None, lp: false }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(invalid("need at least one instance"));
        }
        if let Some(n) = self.n_max {
            if n < MIN_N_MAX {
                return Err(invalid(format!("n_max must be >= {MIN_N_MAX}, got {n}")));
            }
        }
        Ok(())
    }

    pub fn instance(&self, index: usize) -> Result<SyntheticInstance> {
        let n_max = self.n_max.unwrap_or(SUITE_N_MAX[index % SUITE_N_MAX.len()]);
        SyntheticInstance::random(self.seed.wrapping_add(index as u64), n_max)
    }
}

/// Worst margin seen for one check name across a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: usize,
    pub failed: usize,
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub reports: Vec<VerificationReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(VerificationReport::passed)
    }

    pub fn failures(&self) -> usize {
        self.reports.iter().flat_map(|r| &r.checks).filter(|c| !c.passed).count()
    }

    /// Per-check aggregates, in first-seen order.
    pub fn summary(&self) -> Vec<CheckSummary> {
        let mut out: Vec<CheckSummary> = Vec::new();
        for c in self.reports.iter().flat_map(|r| &r.checks) {
            let entry = match out.iter().position(|s| s.name == c.name) {
                Some(i) => &mut out[i],
                None => {
                    out.push(CheckSummary {
                        name: c.name.clone(),
                        evaluated: 0,
                        failed: 0,
                        worst_margin: f64::INFINITY,
                    });
                    out.last_mut().unwrap()
                }
            };
            entry.evaluated += 1;
            entry.failed += usize::from(!c.passed);
            entry.worst_margin = entry.worst_margin.min(c.margin);
        }
        out
    }

    /// `instance,seed,n_max,check,margin,tolerance,passed` rows.
    pub fn margins_csv(&self) -> String {
        let mut s = String::from("instance,seed,n_max,check,margin,tolerance,passed\n");
        for (i, r) in self.reports.iter().enumerate() {
            for c in &r.checks {
                s.push_str(&format!(
                    "{i},{},{},{},{:.8e},{:.1e},{}\n",
                    r.seed, r.n_max, c.name, c.margin, c.tolerance, c.passed
                ));
            }
        }
        s
    }
}

/// Generates and checks `config.instances` seeded instances in parallel.
/// Results come back in instance order regardless of scheduling.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let reports = (0..config.instances)
        .into_par_iter()
        .map(|i| check_instance_with(&config.instance(i)?, config.lp))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport { reports })
}
