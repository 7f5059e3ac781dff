//! Property checks: invariants that must hold on every instance, exercised
//! over seeded random families so failures replay from the seed alone.

use indexcode::capm::{self, run_capm, verify_feasible, TraceEvent};
use indexcode::closed_form::near_complete_rate;
use indexcode::dsm_bound::{chain_value, dsm_plus_dp, dsm_plus_enumerate};
use indexcode::generate::{random_acyclic, random_instance, random_near_complete};
use indexcode::instance::{normalize, parse, render, Instance, NormalizeOptions};
use indexcode::scapm::run_scapm;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// The text format is lossless: render then parse gives the instance back.
    #[test]
    fn parse_render_round_trip(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        prop_assert_eq!(parse(&render(&inst)).unwrap(), inst);
    }

    /// Packing moves bits around but never drops or duplicates one.
    #[test]
    fn packing_conserves_bits(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        let mut ids = run_capm(&inst).table.bit_ids();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..inst.s()).collect::<Vec<_>>());
    }

    /// Every displacement goes to a direct superset, one level up.
    #[test]
    fn promotions_climb_exactly_one_level(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        for ev in &run_capm(&inst).trace {
            if let TraceEvent::Promoted { from, to, .. } = ev {
                prop_assert_eq!(to.len(), from.len() + 1);
                prop_assert!(from.is_subset(*to));
            }
        }
    }

    /// The event log is a complete record: replaying it rebuilds the table.
    #[test]
    fn replay_rebuilds_the_final_table(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        let run = run_capm(&inst);
        prop_assert_eq!(capm::replay(&inst, &run.trace), run.table);
    }

    /// XOR-merging strictly reduces or keeps the rate, never raises it.
    #[test]
    fn merging_never_raises_the_rate(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        let run = run_capm(&inst);
        prop_assert!(run.rate <= run.post_balance_rate);
    }

    /// Every decoder can peel its demands out of the finished plan.
    #[test]
    fn integral_plans_decode(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        prop_assert!(verify_feasible(&inst, &run_capm(&inst).table));
    }

    /// The chain bound really is a lower bound on the heuristic's rate.
    #[test]
    fn lower_bound_never_exceeds_the_heuristic(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 10);
        prop_assert!(dsm_plus_dp(&inst).value <= run_capm(&inst).rate);
    }

    /// The subset DP and brute-force enumeration agree, and both witnesses
    /// re-evaluate to the value they claim.
    #[test]
    fn dp_matches_enumeration(seed in any::<u64>()) {
        let inst = random_instance(seed, 7, 8);
        let dp = dsm_plus_dp(&inst);
        let enumerated = dsm_plus_enumerate(&inst).unwrap();
        prop_assert_eq!(dp.value, enumerated.value);
        prop_assert_eq!(chain_value(&inst, &dp.permutation).unwrap().value, dp.value);
        prop_assert_eq!(
            chain_value(&inst, &enumerated.permutation).unwrap().value,
            enumerated.value
        );
    }

    /// Fractional packing conserves each bit's unit of mass, stays above the
    /// lower bound, and its realizing sub-bit plan decodes.
    #[test]
    fn fractional_runs_are_sound(seed in any::<u64>()) {
        let inst = random_instance(seed, 5, 6);
        let run = run_scapm(&inst).unwrap();
        for k in 0..inst.s() {
            prop_assert!(run.theta.total_mass(k).is_one(), "bit {} lost mass", k);
        }
        let lower = BigRational::from_integer(BigInt::from(dsm_plus_dp(&inst).value));
        prop_assert!(run.rate >= lower);
        prop_assert!(verify_feasible(&run.plan.instance, &run.plan.table));
    }

    /// Handing a decoder extra side information never raises the bound.
    #[test]
    fn extra_side_information_never_raises_the_bound(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 8);
        let base = dsm_plus_dp(&inst).value;
        let mut bits = inst.bits().to_vec();
        let mut changed = false;
        'outer: for spec in &mut bits {
            for d in 1..=inst.m() {
                if !spec.need.contains(d) && !spec.has.contains(d) {
                    spec.has.insert(d);
                    changed = true;
                    break 'outer;
                }
            }
        }
        prop_assume!(changed);
        let richer = Instance::new(inst.m(), bits).unwrap();
        prop_assert!(dsm_plus_dp(&richer).value <= base);
    }

    /// With acyclic side information, coding can't beat plain sending, and
    /// both the bound and the heuristic land exactly there.
    #[test]
    fn acyclic_instances_cost_every_bit(seed in any::<u64>()) {
        let inst = random_acyclic(seed, 6, 10);
        let norm = normalize(&inst, NormalizeOptions::default()).instance;
        prop_assert_eq!(dsm_plus_dp(&norm).value, norm.s());
        prop_assert_eq!(run_capm(&norm).rate, norm.s());
    }

    /// On the near-complete caching class the per-decoder load formula,
    /// the heuristic, and the lower bound all coincide.
    #[test]
    fn near_complete_formula_matches_the_pipeline(seed in any::<u64>()) {
        let inst = random_near_complete(seed, 3, 6, 10);
        let norm = normalize(&inst, NormalizeOptions::default()).instance;
        prop_assert!(norm.classify().near_complete);
        let nc = near_complete_rate(&norm).unwrap();
        prop_assert_eq!(nc.rate, run_capm(&norm).rate);
        prop_assert_eq!(nc.rate, dsm_plus_dp(&norm).value);
    }
}
