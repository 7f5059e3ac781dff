//! Seeded random instance families for stress tests.
//!
//! All generators are deterministic functions of their seed (ChaCha8 keyed
//! by `seed_from_u64`), so failures reproduce from the seed alone. They
//! return structurally valid instances in which every bit is demanded;
//! callers that require distinct side-information sets should still
//! normalize, since merging may apply.

use rand::prelude::IndexedRandom;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::Instance;
use crate::sets::{DecoderId, DecoderSet};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unconstrained random instance: `m` uniform in `2..=max_m`, `s` uniform
/// in `1..=max_s`. Each bit gets one guaranteed demander; every other
/// decoder independently demands it (p = 0.3), holds it (p = 0.35), or
/// ignores it.
///
/// # Panics
///
/// Panics if `max_m < 2`, `max_m > 16`, or `max_s == 0`.
#[must_use]
pub fn random_instance(seed: u64, max_m: u8, max_s: usize) -> Instance {
    assert!((2..=16).contains(&max_m) && max_s >= 1);
    let mut rng = rng_for(seed);
    let m: u8 = rng.random_range(2..=max_m);
    let s: usize = rng.random_range(1..=max_s);
    let sets = (0..s).map(|_| {
        let anchor: DecoderId = rng.random_range(1..=m);
        let mut need = DecoderSet::singleton(anchor);
        let mut has = DecoderSet::EMPTY;
        for d in 1..=m {
            if d == anchor {
                continue;
            }
            let roll: f64 = rng.random();
            if roll < 0.3 {
                need.insert(d);
            } else if roll < 0.65 {
                has.insert(d);
            }
        }
        (need, has)
    });
    // Collect first: the closure borrows rng mutably across iterations.
    let sets: Vec<_> = sets.collect();
    Instance::from_need_has(m, sets).expect("construction is valid")
}

/// Random acyclic instance: decoders get a hidden rank; every bit's
/// holders all rank strictly above all its demanders, so any chain
/// decoder → held bit → demander strictly descends in rank and no directed
/// cycle can close.
///
/// # Panics
///
/// Panics if `max_m < 2`, `max_m > 16`, or `max_s == 0`.
///
/// # Example
///
/// ```
/// use indexcode::generate::random_acyclic;
/// assert!(random_acyclic(7, 8, 20).classify().acyclic);
/// ```
#[must_use]
pub fn random_acyclic(seed: u64, max_m: u8, max_s: usize) -> Instance {
    assert!((2..=16).contains(&max_m) && max_s >= 1);
    let mut rng = rng_for(seed);
    let m: u8 = rng.random_range(2..=max_m);
    let s: usize = rng.random_range(1..=max_s);

    let mut by_rank: Vec<DecoderId> = (1..=m).collect();
    by_rank.shuffle(&mut rng);

    let mut sets = Vec::with_capacity(s);
    for _ in 0..s {
        // Demanders live at ranks < split, holders at ranks >= split.
        let split: usize = rng.random_range(1..=m as usize);
        let mut need = DecoderSet::EMPTY;
        for &d in &by_rank[..split] {
            if rng.random_bool(0.5) {
                need.insert(d);
            }
        }
        if need.is_empty() {
            need.insert(*by_rank[..split].choose(&mut rng).expect("split >= 1"));
        }
        let mut has = DecoderSet::EMPTY;
        for &d in &by_rank[split..] {
            if rng.random_bool(0.5) {
                has.insert(d);
            }
        }
        sets.push((need, has));
    }
    let inst = Instance::from_need_has(m, sets).expect("construction is valid");
    debug_assert!(inst.classify().acyclic);
    inst
}

/// Random instance in the near-complete class: each bit is held by none,
/// all-but-one, or all-but-two decoders; demanders are drawn from the
/// holders' complement.
///
/// # Panics
///
/// Panics unless `3 <= m_min <= m_max <= 16` and `max_s >= 1`.
#[must_use]
pub fn random_near_complete(seed: u64, m_min: u8, m_max: u8, max_s: usize) -> Instance {
    assert!(m_min >= 3 && m_min <= m_max && m_max <= 16 && max_s >= 1);
    let mut rng = rng_for(seed);
    let m: u8 = rng.random_range(m_min..=m_max);
    let s: usize = rng.random_range(1..=max_s);

    let mut sets = Vec::with_capacity(s);
    for _ in 0..s {
        let holders: u32 = match rng.random_range(0..3u8) {
            0 => 0,
            1 => u32::from(m) - 1,
            _ => u32::from(m) - 2,
        };
        let mut ids: Vec<DecoderId> = (1..=m).collect();
        ids.shuffle(&mut rng);
        let has = DecoderSet::from_ids(ids[..holders as usize].iter().copied());
        let rest = &ids[holders as usize..];
        let mut need = DecoderSet::EMPTY;
        for &d in rest {
            if rng.random_bool(0.4) {
                need.insert(d);
            }
        }
        if need.is_empty() {
            need.insert(*rest.choose(&mut rng).expect("complement is nonempty"));
        }
        sets.push((need, has));
    }
    let inst = Instance::from_need_has(m, sets).expect("construction is valid");
    debug_assert!(inst.classify().near_complete);
    inst
}
