use mdi_decoy::bounds::{report_for_basis, Basis, ObservedStatistics, Variant};
use mdi_decoy::channel::{true_yields, ChannelParams, YieldTable};
use mdi_decoy::key_rate::{binary_entropy, key_rate_from_parts};
use mdi_decoy::oracle::{check_instance, forward, SyntheticInstance};
use mdi_decoy::search::{maximize, SearchSettings};
use mdi_decoy::source::{PhotonDistribution, SourceFamily, SourceTriple};
use mdi_decoy::table::PhotonTable;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = SourceFamily> {
    prop_oneof![Just(SourceFamily::Coherent), Just(SourceFamily::Thermal)]
}

fn ordered_intensities() -> impl Strategy<Value = [f64; 3]> {
    (0.001f64..0.3, 0.01f64..0.3, 0.01f64..0.4).prop_map(|(v, dd, ds)| [v, v + dd, v + dd + ds])
}

fn triple(n_max: usize) -> impl Strategy<Value = SourceTriple> {
    (family(), ordered_intensities()).prop_map(move |(f, mu)| f.triple(mu, n_max).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distributions_are_normalised(f in family(), mu in 0.0f64..1.0, n_max in 3usize..30) {
        let d = f.distribution(mu, n_max).unwrap();
        prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
        let total: f64 = d.probs().iter().sum::<f64>() + d.tail_mass();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(d.tail_mass() >= 0.0);
    }

    #[test]
    fn built_in_triples_pass_condition(f in family(), mu in ordered_intensities()) {
        prop_assert!(f.triple(mu, 20).unwrap().check_condition().unwrap().passed());
    }

    #[test]
    fn random_instances_pass_every_check(seed in any::<u64>(), n_max in prop::sample::select(vec![3usize, 4, 6, 10])) {
        let inst = SyntheticInstance::random(seed, n_max).unwrap();
        let r = check_instance(&inst).unwrap();
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).collect();
        prop_assert!(failed.is_empty(), "{:?}", failed);
    }

    #[test]
    fn low_photon_support_is_recovered(
        a in triple(8), b in triple(8), y in prop::array::uniform3(0.0f64..0.1), e in 0.0f64..0.5,
    ) {
        let entries = [((1, 1), y[0]), ((1, 2), y[1]), ((2, 1), y[2])];
        let inst = SyntheticInstance::supported_on(a.clone(), b.clone(), &entries, e).unwrap();
        let r = report_for_basis(&forward(&inst), &a, &b).unwrap();
        for v in [Variant::Eq123, Variant::Eq124, Variant::Eq134, Variant::Eq234] {
            prop_assert!((r.y11(v) - y[0]).abs() < 1e-9, "{:?}: {} vs {}", v, r.y11(v), y[0]);
        }
        if let Some(e11) = r.e11_upper {
            prop_assert!(e11 >= e - 1e-9);
        }
        let single = SyntheticInstance::supported_on(a.clone(), b.clone(), &entries[..1], e).unwrap();
        let r = report_for_basis(&forward(&single), &a, &b).unwrap();
        if y[0] > 1e-3 {
            prop_assert!((r.e11_upper.unwrap() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn bounds_scale_linearly(seed in any::<u64>(), c in 0.1f64..10.0) {
        let inst = SyntheticInstance::random(seed, 6).unwrap();
        let scaled_y = PhotonTable::from_fn(6, |k, l| c * inst.yields.y.get(k, l));
        let scaled_t = PhotonTable::from_fn(6, |k, l| c * inst.yields.t.get(k, l));
        let scaled = SyntheticInstance::new(
            inst.alice.clone(), inst.bob.clone(), YieldTable::new(scaled_y, scaled_t, Basis::Z).unwrap(), seed,
        ).unwrap();
        let r0 = report_for_basis(&forward(&inst), &inst.alice, &inst.bob).unwrap();
        let r1 = report_for_basis(&forward(&scaled), &scaled.alice, &scaled.bob).unwrap();
        for v in Variant::ALL {
            // Nearly coincident intensities make the elimination ill-conditioned,
            // so compare relative to the size of the bound.
            let scale = (c * r0.y11(v)).abs().max(c);
            prop_assert!((r1.y11(v) - c * r0.y11(v)).abs() <= 1e-7 * scale);
        }
    }

    #[test]
    fn e11_bound_is_a_probability(seed in any::<u64>()) {
        let inst = SyntheticInstance::random(seed, 4).unwrap();
        let r = report_for_basis(&forward(&inst), &inst.alice, &inst.bob).unwrap();
        for v in Variant::ALL {
            if let Some(e) = r.e11(v) {
                prop_assert!((0.0..=1.0).contains(&e));
            }
        }
    }

    #[test]
    fn statistics_json_round_trip(seed in any::<u64>()) {
        let inst = SyntheticInstance::random(seed, 4).unwrap();
        let stats = forward(&inst);
        prop_assert_eq!(ObservedStatistics::from_json(&stats.to_json()).unwrap(), stats);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(p in 0.0f64..=1.0) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rate_is_monotone_in_bounds(
        y_lo in 0.0f64..0.5, dy in 0.0f64..0.5, e_lo in 0.0f64..0.5, de in 0.0f64..0.2,
        yss in 0.0f64..1.0, ess in 0.0f64..0.5,
    ) {
        let rate = |y, e| key_rate_from_parts(0.09, y, Some(e), yss, ess, 1.16).unwrap().rate_raw;
        prop_assert!(rate(y_lo + dy, e_lo) >= rate(y_lo, e_lo) - 1e-15);
        prop_assert!(rate(y_lo, e_lo) >= rate(y_lo, e_lo + de) - 1e-15);
    }

    #[test]
    fn yields_fall_with_loss(loss in 0.0f64..60.0, extra in 0.0f64..20.0, k in 0usize..6, l in 0usize..6) {
        let p = ChannelParams::default();
        let near = true_yields(&p.with_loss(loss), 6, Basis::Z).unwrap();
        let far = true_yields(&p.with_loss(loss + extra), 6, Basis::Z).unwrap();
        prop_assert!(far.y.get(k, l) <= near.y.get(k, l) + 1e-15);
        prop_assert_eq!(near.y.get(k, l), near.y.get(l, k));
        prop_assert!(near.t.get(k, l) <= near.y.get(k, l));
    }

    #[test]
    fn search_dominates_its_grid(a in -2.0f64..2.0, b in 0.1f64..5.0, c in 0.0f64..1.0) {
        let f = |x: f64| (b * x).sin() + a * x + c * x * x;
        let m = maximize(f, 0.1, 1.0, SearchSettings::default()).unwrap();
        prop_assert!(m.argmax > 0.1 && m.argmax < 1.0);
        prop_assert!(m.trace.iter().all(|&(_, v)| v <= m.value));
    }
}

#[test]
fn custom_distribution_matches_builtin() {
    let coherent = PhotonDistribution::coherent(0.3, 12).unwrap();
    let custom = PhotonDistribution::custom_with_n_max(coherent.probs().to_vec(), 12).unwrap();
    assert_eq!(custom.h_ratios(), coherent.h_ratios());
}
