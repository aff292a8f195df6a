//! Non-dominated-sorting genetic algorithm over broadcast strategies.
//!
//! Real-coded genes `[p, nr, dr, ttl]` with SBX crossover and polynomial
//! mutation; `nr` and `ttl` are rounded and every gene clamped to its bounds
//! after variation. Survivors are chosen by front rank then crowding
//! distance. Every evaluated genome is offered to an unbounded elite archive
//! that keeps the non-dominated set, and the archive is the returned front.
//!
//! All genomes of a generation are evaluated with the same replication
//! seeds (common random numbers). The random stream driving selection and
//! variation is consumed identically whatever the generation budget, so a
//! longer run extends a shorter one with the same seed.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{content_lines, ObjectiveVector, Strategy};
use crate::optimizer::dominance::{crowding_distance, minimization_vector, non_dominated_sort};
use crate::seeding::{self, TAG_GA};

/// Value standing in for an undefined PT inside the GA.
pub const PT_PENALTY: f64 = 1.0e6;

const SBX_ETA: f64 = 15.0;
const MUTATION_ETA: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenomeBounds {
    pub p: (f64, f64),
    pub nr: (u32, u32),
    pub dr: (f64, f64),
    pub ttl: (u32, u32),
}

impl Default for GenomeBounds {
    fn default() -> Self {
        GenomeBounds { p: (0.0, 1.0), nr: (1, 30), dr: (0.0, 2.0), ttl: (1, 40) }
    }
}

impl GenomeBounds {
    fn lower(&self) -> [f64; 4] {
        [self.p.0, f64::from(self.nr.0), self.dr.0, f64::from(self.ttl.0)]
    }

    fn upper(&self) -> [f64; 4] {
        [self.p.1, f64::from(self.nr.1), self.dr.1, f64::from(self.ttl.1)]
    }

    /// Clamps and rounds raw genes into a valid strategy.
    pub fn repair(&self, genes: [f64; 4]) -> Strategy {
        let (lo, hi) = (self.lower(), self.upper());
        let g: Vec<f64> = (0..4)
            .map(|i| {
                let x = if genes[i].is_finite() { genes[i] } else { lo[i] };
                x.clamp(lo[i], hi[i])
            })
            .collect();
        Strategy { p: g[0], nr: g[1].round() as u32, dr: g[2], ttl: g[3].round() as u32 }
    }

    pub fn contains(&self, s: &Strategy) -> bool {
        (self.p.0..=self.p.1).contains(&s.p)
            && (self.nr.0..=self.nr.1).contains(&s.nr)
            && (self.dr.0..=self.dr.1).contains(&s.dr)
            && (self.ttl.0..=self.ttl.1).contains(&s.ttl)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Strategy {
        let (lo, hi) = (self.lower(), self.upper());
        let mut g = [0.0; 4];
        for i in 0..4 {
            g[i] = if hi[i] > lo[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] };
        }
        self.repair(g)
    }
}

fn genes(s: &Strategy) -> [f64; 4] {
    [s.p, f64::from(s.nr), s.dr, f64::from(s.ttl)]
}

/// Simulated binary crossover of two genomes, applied gene by gene.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &Strategy,
    b: &Strategy,
    bounds: &GenomeBounds,
    rng: &mut R,
) -> (Strategy, Strategy) {
    let (x, y) = (genes(a), genes(b));
    let (mut c1, mut c2) = (x, y);
    for i in 0..4 {
        if rng.gen_bool(0.5) || (x[i] - y[i]).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.gen();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (SBX_ETA + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (SBX_ETA + 1.0))
        };
        c1[i] = 0.5 * ((1.0 + beta) * x[i] + (1.0 - beta) * y[i]);
        c2[i] = 0.5 * ((1.0 - beta) * x[i] + (1.0 + beta) * y[i]);
    }
    (bounds.repair(c1), bounds.repair(c2))
}

/// Polynomial mutation; each gene mutates with probability `rate`.
pub fn polynomial_mutation<R: Rng + ?Sized>(s: &Strategy, rate: f64, bounds: &GenomeBounds, rng: &mut R) -> Strategy {
    let (lo, hi) = (bounds.lower(), bounds.upper());
    let mut g = genes(s);
    for i in 0..4 {
        if !rng.gen_bool(rate) {
            continue;
        }
        let u: f64 = rng.gen();
        let delta = if u < 0.5 {
            (2.0 * u).powf(1.0 / (MUTATION_ETA + 1.0)) - 1.0
        } else {
            1.0 - (2.0 * (1.0 - u)).powf(1.0 / (MUTATION_ETA + 1.0))
        };
        let mut step = delta * (hi[i] - lo[i]);
        // integer genes must be able to move off their current value
        if (i == 1 || i == 3) && step.abs() < 0.5 {
            step = if delta < 0.0 { -1.0 } else { 1.0 };
        }
        g[i] += step;
    }
    bounds.repair(g)
}

/// A genome with its (replication-averaged) objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluatedGenome {
    pub genome: Strategy,
    pub objectives: ObjectiveVector,
}

/// Scores a genome. Called concurrently from several threads.
pub trait Evaluator: Sync {
    /// `seeds` holds one seed per replication, shared by every genome of the
    /// current generation.
    fn evaluate(&self, genome: &Strategy, seeds: &[u64]) -> Result<ObjectiveVector>;
}

impl<F> Evaluator for F
where
    F: Fn(&Strategy, &[u64]) -> Result<ObjectiveVector> + Sync,
{
    fn evaluate(&self, genome: &Strategy, seeds: &[u64]) -> Result<ObjectiveVector> {
        self(genome, seeds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    /// Number of evaluated populations, the initial one included.
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub replications: u32,
    pub seed: u64,
    pub bounds: GenomeBounds,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 40,
            generations: 50,
            crossover_rate: 0.9,
            mutation_rate: 0.25,
            replications: 5,
            seed: 1,
            bounds: GenomeBounds::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.generations < 1 {
            return bad("generations must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        if self.replications < 1 {
            return bad("replications must be at least 1");
        }
        Ok(())
    }

    /// Key-value format, one `key value` pair per line, `#` comments.
    pub fn parse(text: &str) -> Result<GaConfig> {
        let mut c = GaConfig::default();
        for (line, content) in content_lines(text) {
            let err = |message: String| Error::Parse { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [key, value] = fields[..] else {
                return Err(err(format!("expected `key value`, got `{content}`")));
            };
            let bad_value = |e: &dyn std::fmt::Display| err(format!("`{key}`: {e}"));
            match key {
                "population" => c.population = value.parse().map_err(|e| bad_value(&e))?,
                "generations" => c.generations = value.parse().map_err(|e| bad_value(&e))?,
                "crossover_rate" => c.crossover_rate = value.parse().map_err(|e| bad_value(&e))?,
                "mutation_rate" => c.mutation_rate = value.parse().map_err(|e| bad_value(&e))?,
                "replications" => c.replications = value.parse().map_err(|e| bad_value(&e))?,
                "seed" => c.seed = value.parse().map_err(|e| bad_value(&e))?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Replication seeds shared by all genomes of `generation`.
    pub fn generation_seeds(&self, generation: usize) -> Vec<u64> {
        (0..self.replications)
            .map(|r| seeding::derive_seed(self.seed, &[TAG_GA, 0x6576_616c, generation as u64, u64::from(r)]))
            .collect()
    }
}

fn evaluate_all<E: Evaluator + ?Sized>(evaluator: &E, genomes: &[Strategy], seeds: &[u64]) -> Vec<EvaluatedGenome> {
    let results: Vec<Result<ObjectiveVector>> =
        genomes.par_iter().map(|g| evaluator.evaluate(g, seeds)).collect();
    genomes
        .iter()
        .zip(results)
        .filter_map(|(g, r)| match r {
            Ok(objectives) => Some(EvaluatedGenome { genome: *g, objectives }),
            Err(e) => {
                log::warn!("discarding genome {g}: {e}");
                None
            }
        })
        .collect()
}

fn min_vec(e: &EvaluatedGenome) -> [f64; 4] {
    minimization_vector(&e.objectives, PT_PENALTY)
}

/// Non-dominated set of all genomes ever offered to it.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    members: Vec<EvaluatedGenome>,
}

impl Archive {
    pub fn offer(&mut self, candidate: EvaluatedGenome) {
        let c = min_vec(&candidate);
        let mut kept = Vec::with_capacity(self.members.len() + 1);
        for m in &self.members {
            let v = min_vec(m);
            if crate::optimizer::dominance::dominates_min(&v, &c) || (v == c && m.genome == candidate.genome) {
                return;
            }
            if !crate::optimizer::dominance::dominates_min(&c, &v) {
                kept.push(*m);
            }
        }
        kept.push(candidate);
        self.members = kept;
    }

    /// Members sorted by genome for a stable output order.
    pub fn into_front(mut self) -> Vec<EvaluatedGenome> {
        self.members.sort_by(|a, b| a.genome.lexicographic_cmp(&b.genome));
        self.members
    }

    pub fn members(&self) -> &[EvaluatedGenome] {
        &self.members
    }
}

/// Rank (front index) and crowding distance of every member of `pop`.
fn rank_and_crowding(pop: &[EvaluatedGenome]) -> (Vec<usize>, Vec<f64>) {
    let pts: Vec<[f64; 4]> = pop.iter().map(min_vec).collect();
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, front) in non_dominated_sort(&pts).iter().enumerate() {
        let d = crowding_distance(&pts, front);
        for (k, &i) in front.iter().enumerate() {
            rank[i] = r;
            crowd[i] = d[k];
        }
    }
    (rank, crowd)
}

fn better(i: usize, j: usize, rank: &[usize], crowd: &[f64]) -> bool {
    match rank[i].cmp(&rank[j]) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => crowd[i] > crowd[j],
    }
}

fn tournament<R: Rng + ?Sized>(rank: &[usize], crowd: &[f64], rng: &mut R) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    if better(b, a, rank, crowd) {
        b
    } else {
        a
    }
}

/// Keeps the best `size` members by rank, then crowding distance.
fn environmental_selection(pool: Vec<EvaluatedGenome>, size: usize) -> Vec<EvaluatedGenome> {
    if pool.len() <= size {
        return pool;
    }
    let pts: Vec<[f64; 4]> = pool.iter().map(min_vec).collect();
    let mut chosen = Vec::with_capacity(size);
    for front in non_dominated_sort(&pts) {
        if chosen.len() + front.len() <= size {
            chosen.extend(front);
            continue;
        }
        let d = crowding_distance(&pts, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(front[a].cmp(&front[b])));
        let room = size - chosen.len();
        chosen.extend(order.into_iter().take(room).map(|k| front[k]));
        break;
    }
    chosen.into_iter().map(|i| pool[i]).collect()
}

fn offspring<R: Rng + ?Sized>(pop: &[EvaluatedGenome], config: &GaConfig, rng: &mut R) -> Vec<Strategy> {
    let (rank, crowd) = rank_and_crowding(pop);
    let mut children = Vec::with_capacity(config.population);
    while children.len() < config.population {
        let a = pop[tournament(&rank, &crowd, rng)].genome;
        let b = pop[tournament(&rank, &crowd, rng)].genome;
        let (c1, c2) = if rng.gen_bool(config.crossover_rate) {
            sbx_crossover(&a, &b, &config.bounds, rng)
        } else {
            (a, b)
        };
        children.push(polynomial_mutation(&c1, config.mutation_rate, &config.bounds, rng));
        if children.len() < config.population {
            children.push(polynomial_mutation(&c2, config.mutation_rate, &config.bounds, rng));
        }
    }
    children
}

fn ga_rng(config: &GaConfig) -> ChaCha8Rng {
    seeding::stream(config.seed, &[TAG_GA])
}

/// Runs the GA and returns the final archive: the non-dominated set of every
/// genome evaluated, sorted by genome.
///
/// Genomes whose evaluation fails are dropped with a warning.
pub fn run_ga<E: Evaluator + ?Sized>(evaluator: &E, config: &GaConfig) -> Result<Vec<EvaluatedGenome>> {
    config.validate()?;
    let mut rng = ga_rng(config);
    let initial: Vec<Strategy> = (0..config.population).map(|_| config.bounds.random(&mut rng)).collect();
    let mut pop = evaluate_all(evaluator, &initial, &config.generation_seeds(0));
    let mut archive = Archive::default();
    for e in &pop {
        archive.offer(*e);
    }
    for generation in 1..config.generations {
        if pop.is_empty() {
            break;
        }
        let children = offspring(&pop, config, &mut rng);
        let evaluated = evaluate_all(evaluator, &children, &config.generation_seeds(generation));
        for e in &evaluated {
            archive.offer(*e);
        }
        let mut pool = pop;
        pool.extend(evaluated);
        pop = environmental_selection(pool, config.population);
    }
    if archive.members().is_empty() {
        return Err(Error::Evaluation("every genome failed to evaluate".into()));
    }
    Ok(archive.into_front())
}
