//! Deterministic scenario-entity assignment.
//!
//! The entity index is FNV-1a (64-bit) of `student_id|stage|path|assignment`
//! modulo the pool size, so it depends only on the student and slot.

use crate::error::{GeaError, Result};
use crate::taxonomy::SlotSpec;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn scenario_key(student_id: &str, slot: &SlotSpec) -> String {
    format!("{student_id}|{}", slot.key.canonical())
}

pub fn assign_scenario<'a>(student_id: &str, slot: &'a SlotSpec) -> Result<&'a str> {
    if slot.scenario_pool.is_empty() {
        return Err(GeaError::config(format!(
            "slot {} has an empty scenario pool",
            slot.key
        )));
    }
    let h = fnv1a64(scenario_key(student_id, slot).as_bytes());
    Ok(&slot.scenario_pool[(h % slot.scenario_pool.len() as u64) as usize])
}
