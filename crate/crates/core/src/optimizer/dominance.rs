//! Pareto dominance over the oriented objective system (NC, PT, R minimized,
//! FR maximized), non-dominated sorting and crowding distance.

use std::cmp::Ordering;

use crate::model::ObjectiveVector;

/// Objectives as a minimization vector. Undefined PT maps to `pt_penalty`.
pub fn minimization_vector(v: &ObjectiveVector, pt_penalty: f64) -> [f64; 4] {
    [v.nc, v.pt.unwrap_or(pt_penalty), v.r, -v.fr]
}

/// Dominance on minimization vectors of any length.
pub fn dominates_min(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strictly |= x < y;
    }
    strictly
}

/// `a` is no worse than `b` on every objective and strictly better on at
/// least one. Undefined PT is worse than any defined PT.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    dominates_min(&minimization_vector(a, f64::INFINITY), &minimization_vector(b, f64::INFINITY))
}

/// Indices of the members of `points` not dominated by any other member.
pub fn non_dominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    non_dominated_sort(points).into_iter().next().unwrap_or_default()
}

/// Fast non-dominated sort: fronts of indices, best first.
pub fn non_dominated_sort<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_min(a, b) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates_min(b, a) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order). Boundary
/// points get infinity.
pub fn crowding_distance<P: AsRef<[f64]>>(points: &[P], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let dims = points[front[0]].as_ref().len();
    let mut order: Vec<usize> = (0..m).collect();
    for k in 0..dims {
        let value = |i: usize| points[front[i]].as_ref()[k];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let lo = value(order[0]);
        let hi = value(order[m - 1]);
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            continue;
        }
        for w in 1..m - 1 {
            dist[order[w]] += (value(order[w + 1]) - value(order[w - 1])) / span;
        }
    }
    dist
}

/// Area dominated by `points` (minimization) and bounded by `reference`.
/// Points not strictly better than the reference on both axes add nothing.
pub fn hypervolume_2d(points: &[(f64, f64)], reference: (f64, f64)) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x < reference.0 && y < reference.1)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // sweep by increasing x; each point that lowers the staircase adds a slab
    let mut area = 0.0;
    let mut prev_y = reference.1;
    for &(x, y) in &pts {
        if y < prev_y {
            area += (reference.0 - x) * (prev_y - y);
            prev_y = y;
        }
    }
    area
}

/// Orders two objective vectors by a single key, undefined PT last.
pub(crate) fn cmp_pt(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    a.pt_or_inf().total_cmp(&b.pt_or_inf())
}
