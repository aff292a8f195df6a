//! Offline strategy tuning: a multi-objective GA with the simulator in the
//! loop, and the preference rules that turn each density's Pareto front into
//! knowledge-base rows.

pub mod dominance;
pub mod ga;
pub mod selection;

pub use dominance::{dominates, hypervolume_2d, non_dominated_indices, non_dominated_sort};
pub use ga::{run_ga, EvaluatedGenome, Evaluator, GaConfig, GenomeBounds};
pub use selection::{preference_select, SelectionThresholds};

use crate::analyzer::{aggregate_replications, compute_objectives};
use crate::error::{Error, Result};
use crate::model::{DensityClass, KnowledgeBase, ObjectiveVector, Priority, Strategy};
use crate::protocols::Behavior;
use crate::scenarios::{end_source, Preset};
use crate::sim;

/// Scores a genome by simulating one packet from the end of a preset convoy
/// with every node applying the genome, averaged over the given seeds.
#[derive(Debug, Clone, Copy)]
pub struct SimEvaluator {
    pub preset: Preset,
}

impl Evaluator for SimEvaluator {
    fn evaluate(&self, genome: &Strategy, seeds: &[u64]) -> Result<ObjectiveVector> {
        let kb = KnowledgeBase::single(*genome);
        let mut vectors = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let scenario = end_source(self.preset, Priority::HL, seed);
            let trace = sim::run(&scenario, Behavior::Adm, &kb)?;
            vectors.push(compute_objectives(&trace, &scenario).aggregate);
        }
        aggregate_replications(&vectors)
            .map(|a| a.mean)
            .ok_or_else(|| Error::Evaluation("no replication seeds".into()))
    }
}

/// Result of [`build_knowledge_base`].
#[derive(Debug, Clone, PartialEq)]
pub struct KbBuild {
    pub kb: KnowledgeBase,
    /// Not every density class was optimized.
    pub partial: bool,
}

/// Fills the knowledge-base rows of each requested density: `front_for`
/// yields the density's Pareto front, and one strategy per priority is
/// picked from it.
pub fn build_knowledge_base<F>(
    densities: &[DensityClass],
    mut front_for: F,
    thresholds: &SelectionThresholds,
) -> Result<KbBuild>
where
    F: FnMut(DensityClass) -> Result<Vec<EvaluatedGenome>>,
{
    let mut kb = KnowledgeBase::new();
    for &d in densities {
        let front = front_for(d)?;
        for p in Priority::ALL {
            kb.insert(d, p, preference_select(&front, p, thresholds)?);
        }
    }
    let partial = !kb.is_complete();
    Ok(KbBuild { kb, partial })
}

/// [`build_knowledge_base`] driven by [`run_ga`] on each density's preset.
pub fn optimize_knowledge_base(
    densities: &[DensityClass],
    config: &GaConfig,
    thresholds: &SelectionThresholds,
) -> Result<KbBuild> {
    build_knowledge_base(
        densities,
        |d| run_ga(&SimEvaluator { preset: Preset::for_density(d) }, config),
        thresholds,
    )
}
