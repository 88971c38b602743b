//! End-to-end pipeline assembly: iterate candidate setups until one yields
//! a solvable factor-base log table.
//!
//! A setup whose lattice shape conforms can still fail the correction stage
//! (the quotient need not become cyclic), and at very small q a
//! nonconforming setup can still solve; the two judgments are independent,
//! so the pipeline records the shape report of whichever setup solved and
//! keeps iterating on failure.

use serde::Serialize;

use crate::cosets::CosetSet;
use crate::error::{Error, Result};
use crate::field::FieldTower;
use crate::linlog::{check_heuristic1, solve_factor_base, DlogTable, SmithShapeReport};
use crate::relations::{collect_relations, RelationSet};
use crate::setup::{search_setups, SetupConstraints, SetupInstance};

#[derive(Clone, Debug, Serialize)]
pub struct PipelineOutcome {
    #[serde(skip)]
    pub setup: SetupInstance,
    #[serde(skip)]
    pub relations: RelationSet,
    pub setup_index: usize,
    pub setups_tried: usize,
    pub shape: SmithShapeReport,
    pub table: DlogTable,
}

/// Try setups in enumeration order until `solve_factor_base` succeeds.
/// `max_setups` bounds the iteration; the last solve error is propagated
/// when the budget runs out.
pub fn build_table(
    t: &FieldTower,
    constraints: &SetupConstraints,
    cosets: &CosetSet,
    budget: u64,
    max_setups: usize,
    jobs: usize,
) -> Result<PipelineOutcome> {
    let setups = search_setups(t, constraints, budget, max_setups)?;
    let mut last: Error = Error::SearchExhausted { tried: 0, closest_miss: None };
    for (i, s) in setups.iter().enumerate() {
        let rels = collect_relations(t, s, cosets, jobs, false)?;
        let shape = check_heuristic1(t, &rels);
        match solve_factor_base(t, s, &rels) {
            Ok(table) => {
                return Ok(PipelineOutcome {
                    setup: s.clone(),
                    relations: rels,
                    setup_index: i,
                    setups_tried: i + 1,
                    shape,
                    table,
                })
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}
