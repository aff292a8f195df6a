//! Preference-based selection of one strategy per priority from a front.
//!
//! - HL: among genomes with FR >= `hl_min_fr`, the fastest (least PT); if
//!   none qualifies, the highest FR, then least PT.
//! - ML: among genomes with FR >= `ml_min_fr`, the fewest collisions; if
//!   none qualifies, the highest FR, then fewest collisions.
//! - LL: fewest collisions, then fewest retransmissions.
//!
//! Remaining ties go to the lexicographically smallest `(p, nr, dr, ttl)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{Priority, Strategy};
use crate::optimizer::dominance::cmp_pt;
use crate::optimizer::ga::EvaluatedGenome;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionThresholds {
    pub hl_min_fr: f64,
    pub ml_min_fr: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        SelectionThresholds { hl_min_fr: 0.99, ml_min_fr: 0.999 }
    }
}

fn pick<F>(candidates: &[&EvaluatedGenome], key: F) -> Strategy
where
    F: Fn(&EvaluatedGenome, &EvaluatedGenome) -> Ordering,
{
    candidates
        .iter()
        .min_by(|a, b| key(a, b).then_with(|| a.genome.lexicographic_cmp(&b.genome)))
        .map(|e| e.genome)
        .expect("candidates are non-empty")
}

fn by_fr_desc(a: &EvaluatedGenome, b: &EvaluatedGenome) -> Ordering {
    b.objectives.fr.total_cmp(&a.objectives.fr)
}

fn by_nc(a: &EvaluatedGenome, b: &EvaluatedGenome) -> Ordering {
    a.objectives.nc.total_cmp(&b.objectives.nc)
}

pub fn preference_select(
    front: &[EvaluatedGenome],
    priority: Priority,
    thresholds: &SelectionThresholds,
) -> Result<Strategy> {
    if front.is_empty() {
        return Err(Error::EmptyFront);
    }
    let all: Vec<&EvaluatedGenome> = front.iter().collect();
    let reaching = |min_fr: f64| -> Vec<&EvaluatedGenome> {
        front.iter().filter(|e| e.objectives.fr >= min_fr).collect()
    };
    Ok(match priority {
        Priority::HL => {
            let ok = reaching(thresholds.hl_min_fr);
            if ok.is_empty() {
                pick(&all, |a, b| by_fr_desc(a, b).then_with(|| cmp_pt(&a.objectives, &b.objectives)))
            } else {
                pick(&ok, |a, b| cmp_pt(&a.objectives, &b.objectives))
            }
        }
        Priority::ML => {
            let ok = reaching(thresholds.ml_min_fr);
            if ok.is_empty() {
                pick(&all, |a, b| by_fr_desc(a, b).then_with(|| by_nc(a, b)))
            } else {
                pick(&ok, by_nc)
            }
        }
        Priority::LL => pick(&all, |a, b| by_nc(a, b).then_with(|| a.objectives.r.total_cmp(&b.objectives.r))),
    })
}
