//! Reference strategy tables for the four convoy densities, with the
//! objective values reported for each row. `dr` is 0 where `nr == 1`.

use crate::model::{DensityClass, KnowledgeBase, ObjectiveVector, Priority, Strategy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub priority: Priority,
    pub strategy: Strategy,
    pub reported: ObjectiveVector,
}

#[allow(clippy::too_many_arguments)]
const fn row(priority: Priority, p: f64, nr: u32, dr: f64, ttl: u32, nc: f64, pt: f64, r: f64, fr: f64) -> TableRow {
    TableRow {
        priority,
        strategy: Strategy { p, nr, dr, ttl },
        reported: ObjectiveVector { nc, pt: Some(pt), r, fr },
    }
}

/// High density (urban).
pub const URBAN: [TableRow; 3] = [
    row(Priority::HL, 0.329, 1, 0.0, 32, 497.0, 0.051, 131.0, 0.996),
    row(Priority::ML, 0.258, 2, 1.721, 15, 347.0, 0.1063, 207.0, 1.0),
    row(Priority::LL, 0.188, 1, 0.0, 39, 190.0, 0.048, 75.0, 0.868),
];

/// Medium density (suburban).
pub const SUBURBAN: [TableRow; 3] = [
    row(Priority::HL, 0.776, 1, 0.0, 26, 166.0, 0.044, 104.0, 1.0),
    row(Priority::ML, 0.519, 2, 0.951, 16, 93.0, 0.121, 139.0, 1.0),
    row(Priority::LL, 0.291, 2, 0.276, 27, 35.0, 0.209, 82.0, 0.758),
];

/// Low density (highway).
pub const HIGHWAY: [TableRow; 3] = [
    row(Priority::HL, 0.999, 4, 1.147, 40, 31.0, 0.092, 199.0, 1.0),
    row(Priority::ML, 0.916, 2, 0.729, 28, 24.0, 0.124, 90.0, 1.0),
    row(Priority::LL, 0.649, 2, 1.933, 34, 10.0, 1.414, 66.0, 0.828),
];

/// Very low density (rural).
pub const RURAL: [TableRow; 3] = [
    row(Priority::HL, 0.833, 28, 0.233, 28, 58.0, 13.09, 1167.0, 0.998),
    row(Priority::ML, 0.896, 25, 1.468, 34, 16.0, 28.295, 1124.0, 1.0),
    row(Priority::LL, 0.902, 8, 1.622, 19, 4.0, 30.957, 362.0, 0.926),
];

pub fn table(density: DensityClass) -> &'static [TableRow; 3] {
    match density {
        DensityClass::High => &URBAN,
        DensityClass::Medium => &SUBURBAN,
        DensityClass::Low => &HIGHWAY,
        DensityClass::VeryLow => &RURAL,
    }
}

/// All twelve rows keyed by density class.
pub fn reference_knowledge_base() -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    for d in DensityClass::ALL {
        for r in table(d) {
            kb.insert(d, r.priority, r.strategy);
        }
    }
    kb
}

/// The rows of one table applied at every density.
pub fn uniform_knowledge_base(density: DensityClass) -> KnowledgeBase {
    KnowledgeBase::uniform(&table(density).map(|r| (r.priority, r.strategy)))
}
