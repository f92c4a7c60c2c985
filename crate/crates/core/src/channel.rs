//! Reference channel and detector model producing the photon-number yields
//! `y_kl`, their error products `t_kl`, and the gains they induce.
//!
//! Each half-channel thins the photon number binomially with survival
//! probability `η_h = ξζ`, where `ξ = 10^(-L/20)` is the half-channel
//! transmittance of a total loss of `L` dB and `ζ` the detector efficiency.
//! A pulse pair succeeds when both sides register a click, each side
//! clicking unless every surviving photon is missed and no dark count fires:
//!
//! `y_kl = [1 - (1 - p_d)(1 - η_h)^k] [1 - (1 - p_d)(1 - η_h)^l]`.
//!
//! Pairs with a vacuum side err at the background rate `e_0`; every other
//! pair errs at the misalignment rate `e_d`. Both bases share this model.

use serde::{Deserialize, Serialize};

use crate::bounds::{Basis, ObservedStatistics};
use crate::error::{invalid, Result};
use crate::source::{Member, SourceTriple};
use crate::table::PhotonTable;

pub const DEFAULT_E0: f64 = 0.5;
pub const DEFAULT_ED: f64 = 0.015;
pub const DEFAULT_PD: f64 = 3.0e-6;
pub const DEFAULT_ZETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Total two-sided channel loss in dB.
    pub total_loss_db: f64,
    /// Detector efficiency.
    pub zeta: f64,
    /// Dark count probability per detector.
    pub p_d: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Background error rate.
    pub e_0: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { total_loss_db: 0.0, zeta: DEFAULT_ZETA, p_d: DEFAULT_PD, e_d: DEFAULT_ED, e_0: DEFAULT_E0 }
    }
}

impl ChannelParams {
    pub fn with_loss(self, total_loss_db: f64) -> Self {
        Self { total_loss_db, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ChannelParams { total_loss_db, zeta, p_d, e_d, e_0 } = *self;
        if total_loss_db.is_nan() || total_loss_db < 0.0 {
            return Err(invalid(format!("total_loss_db must be >= 0, got {total_loss_db}")));
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(invalid(format!("zeta must lie in (0, 1], got {zeta}")));
        }
        if !(0.0..1.0).contains(&p_d) {
            return Err(invalid(format!("p_d must lie in [0, 1), got {p_d}")));
        }
        if !(0.0..=0.5).contains(&e_d) {
            return Err(invalid(format!("e_d must lie in [0, 0.5], got {e_d}")));
        }
        if !(0.0..=1.0).contains(&e_0) {
            return Err(invalid(format!("e_0 must lie in [0, 1], got {e_0}")));
        }
        Ok(())
    }

    /// `ξ`, transmittance from one party to the relay.
    pub fn half_channel_transmittance(&self) -> f64 {
        10f64.powf(-self.total_loss_db / 20.0)
    }

    /// `η = ξ²ζ`.
    pub fn overall_transmittance(&self) -> f64 {
        self.half_channel_transmittance().powi(2) * self.zeta
    }

    /// `η_h = ξζ`, per-photon detection probability on one side.
    pub fn side_efficiency(&self) -> f64 {
        self.half_channel_transmittance() * self.zeta
    }
}

/// Photon-number yields `y_kl` and error products `t_kl = y_kl e_kl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldTable {
    pub y: PhotonTable,
    pub t: PhotonTable,
    pub basis: Basis,
}

impl YieldTable {
    pub fn new(y: PhotonTable, t: PhotonTable, basis: Basis) -> Result<Self> {
        if y.n_max() != t.n_max() {
            return Err(invalid("yield and error tables differ in size"));
        }
        for (&yv, &tv) in y.values().iter().zip(t.values()) {
            if !(0.0..=1.0).contains(&yv) || !(0.0..=yv).contains(&tv) {
                return Err(invalid(format!("need 0 <= t <= y <= 1, got y = {yv}, t = {tv}")));
            }
        }
        Ok(Self { y, t, basis })
    }

    pub fn n_max(&self) -> usize {
        self.y.n_max()
    }

    pub fn y11(&self) -> f64 {
        self.y.get(1, 1)
    }

    /// `t11 / y11`, zero when `y11` vanishes.
    pub fn e11(&self) -> f64 {
        let y = self.y11();
        if y > 0.0 {
            self.t.get(1, 1) / y
        } else {
            0.0
        }
    }
}

/// Tabulates the reference model up to photon number `n_max`.
pub fn true_yields(params: &ChannelParams, n_max: usize, basis: Basis) -> Result<YieldTable> {
    params.validate()?;
    let miss = 1.0 - params.side_efficiency();
    let no_click: Vec<f64> = (0..=n_max).map(|k| (1.0 - params.p_d) * miss.powi(k as i32)).collect();
    let y = PhotonTable::from_fn(n_max, |k, l| (1.0 - no_click[k]) * (1.0 - no_click[l]));
    let t = PhotonTable::from_fn(n_max, |k, l| {
        let e = if k == 0 || l == 0 { params.e_0 } else { params.e_d };
        e * y.get(k, l)
    });
    Ok(YieldTable { y, t, basis })
}

/// Gains `Y_ab = Σ a_k b_l y_kl` and error rates `E_ab = T_ab / Y_ab` for
/// all nine source pairs.
pub fn observe(alice: &SourceTriple, bob: &SourceTriple, yields: &YieldTable) -> Result<ObservedStatistics> {
    let n = yields.n_max();
    if alice.n_max() != n || bob.n_max() != n {
        return Err(invalid(format!("truncations differ: Alice {}, Bob {}, yields {n}", alice.n_max(), bob.n_max())));
    }
    let mut gains = [[0.0; 3]; 3];
    let mut error_rates = [[0.0; 3]; 3];
    for a in Member::ALL {
        let pa = alice.get(a).probs();
        // Contract over Alice's photon number first, then Bob's.
        let mix = |table: &PhotonTable| -> Vec<f64> {
            (0..=n).map(|l| pa.iter().enumerate().map(|(k, p)| p * table.get(k, l)).sum()).collect()
        };
        let (ry, rt) = (mix(&yields.y), mix(&yields.t));
        for b in Member::ALL {
            let pb = bob.get(b).probs();
            let gain: f64 = ry.iter().zip(pb).map(|(r, p)| r * p).sum();
            let err: f64 = rt.iter().zip(pb).map(|(r, p)| r * p).sum();
            gains[a.index()][b.index()] = gain.min(1.0);
            error_rates[a.index()][b.index()] = if gain > 0.0 { (err / gain).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
    ObservedStatistics::new(yields.basis, gains, error_rates)
}
