//! Reference allocators: greedy (GA) and random (RA).
//!
//! Both hold back `freeze_fraction` of every supply while allocating so no
//! supply ends up exactly at its limit. The returned allocation is meant to
//! be evaluated against the full resources.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{validate_instance, AllocationMatrix, TOL};

pub const DEFAULT_FREEZE: f64 = 0.1;

fn usable(resources: &[f64], loads: &[f64], freeze_fraction: f64) -> Result<Vec<f64>> {
    validate_instance(resources, loads)?;
    if !(0.0..1.0).contains(&freeze_fraction) {
        return Err(Error::InvalidValue(format!("freeze fraction must be in [0, 1), got {freeze_fraction}")));
    }
    let spare: Vec<f64> = resources.iter().map(|r| r * (1.0 - freeze_fraction)).collect();
    let total: f64 = spare.iter().sum();
    let need: f64 = loads.iter().sum();
    if total < need {
        return Err(Error::Infeasible(format!(
            "unfrozen resource {total} cannot cover total load {need}"
        )));
    }
    Ok(spare)
}

/// Index of the largest value above `TOL`, lowest index on ties.
fn largest(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v > TOL && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Repeatedly serves the demand with the largest unmet load from the supply
/// with the largest unfrozen spare.
pub fn greedy_allocate(resources: &[f64], loads: &[f64], freeze_fraction: f64) -> Result<AllocationMatrix> {
    let mut spare = usable(resources, loads, freeze_fraction)?;
    let mut unmet = loads.to_vec();
    let mut alloc = AllocationMatrix::zeros(resources.len(), loads.len());
    while let Some(g) = largest(&unmet) {
        let Some(k) = largest(&spare) else {
            return Err(Error::Infeasible(format!("demand {g} left {} short", unmet[g])));
        };
        let x = spare[k].min(unmet[g]);
        alloc.add(k, g, x);
        spare[k] -= x;
        unmet[g] -= x;
        if unmet[g] <= TOL {
            // Absorb rounding so the column sum is exact.
            alloc.add(k, g, unmet[g]);
            unmet[g] = 0.0;
        }
    }
    Ok(alloc)
}

/// Random stable allocation: uniformly random (supply, demand) pairs with
/// room on both sides receive a uniform `(0, 1]` fraction of what could
/// move between them. After `50 * S * D` draws every transfer moves the full
/// feasible amount, which guarantees termination.
pub fn random_allocate(resources: &[f64], loads: &[f64], freeze_fraction: f64, seed: u64) -> Result<AllocationMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_allocate_with(resources, loads, freeze_fraction, &mut rng)
}

pub fn random_allocate_with<R: Rng>(
    resources: &[f64],
    loads: &[f64],
    freeze_fraction: f64,
    rng: &mut R,
) -> Result<AllocationMatrix> {
    let mut spare = usable(resources, loads, freeze_fraction)?;
    let mut unmet = loads.to_vec();
    let (s, d) = (resources.len(), loads.len());
    let mut alloc = AllocationMatrix::zeros(s, d);
    let mut open_s: Vec<usize> = (0..s).filter(|&k| spare[k] > TOL).collect();
    let mut open_d: Vec<usize> = (0..d).filter(|&g| unmet[g] > TOL).collect();
    let patience = 50 * s * d;
    let mut draws = 0usize;
    while !open_d.is_empty() {
        if open_s.is_empty() {
            return Err(Error::Infeasible("unfrozen resource exhausted".into()));
        }
        let i = rng.gen_range(0..open_s.len());
        let j = rng.gen_range(0..open_d.len());
        let (k, g) = (open_s[i], open_d[j]);
        draws += 1;
        let room = spare[k].min(unmet[g]);
        let x = if draws > patience {
            room
        } else {
            // (0, 1]
            room * (1.0 - rng.gen::<f64>())
        };
        alloc.add(k, g, x);
        spare[k] -= x;
        unmet[g] -= x;
        if unmet[g] <= TOL {
            alloc.add(k, g, unmet[g]);
            spare[k] -= unmet[g];
            unmet[g] = 0.0;
            open_d.swap_remove(j);
        }
        if spare[k] <= TOL {
            open_s.swap_remove(i);
        }
    }
    Ok(alloc)
}
