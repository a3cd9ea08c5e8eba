//! Exact optimal transport between confidence rows and one-hot label atoms.
//!
//! The ground cost is the L-infinity distance on the simplex:
//! `cost(i, c) = ||f(x_i) - e_c||_inf`, which for a probability row reduces to
//! `max(1 - row[c], max_{j != c} row[j])` and always lies in `[0, 1]`.
//!
//! [`solve_transport`] solves the n-samples-to-k-classes transportation
//! problem exactly (unit supplies, integer demands). Integrality of the
//! transportation polytope means an optimal solution assigns each sample to
//! exactly one class, so results are reported as an assignment vector.
//!
//! The solver runs successive shortest paths on the class-condensed residual
//! graph: k nodes, where the arc `c -> c'` carries the cheapest relocation
//! `min_i (cost(i, c') - cost(i, c))` over samples currently assigned to `c`.
//! Arc minima are kept in lazily built per-arc heaps with stale-entry
//! skipping. Starting from the row-argmin assignment every arc weight is
//! non-negative, so Dijkstra with Johnson potentials applies throughout.
//! All scans and tie-breaks are in fixed lowest-index order, making the
//! reported assignment deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::marginal::LabelMarginal;
use crate::predictions::{PredictionSet, ScoreKind};

/// Dense n x k matrix of transport costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    costs: Vec<f64>, // row-major, n * k
    n: usize,
    k: usize,
}

impl CostMatrix {
    /// Wrap a row-major cost vector. Entries must be finite.
    pub fn from_flat(costs: Vec<f64>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if costs.is_empty() || !costs.len().is_multiple_of(k) {
            return Err(Error::EmptyPredictions);
        }
        for (idx, &c) in costs.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFiniteScore {
                    row: idx / k,
                    col: idx % k,
                });
            }
        }
        let n = costs.len() / k;
        Ok(Self { costs, n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn at(&self, row: usize, class: usize) -> f64 {
        self.costs[row * self.k + class]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.costs[i * self.k..(i + 1) * self.k]
    }
}

/// Result of an exact transport solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    /// Mean cost per unit mass — the W-infinity value for unit supplies.
    pub total: f64,
    /// Cost paid by each sample under the optimal coupling.
    pub per_sample_costs: Vec<f64>,
    /// Class each sample is coupled to.
    pub assignment: Vec<usize>,
}

/// `||c - e_j||_inf` for a probability vector `c` and one-hot class `j`:
/// `max(1 - c[j], max_{i != j} c[i])`.
pub fn linf_cost(probs: &[f64], class_index: usize) -> Result<f64> {
    let k = probs.len();
    if class_index >= k {
        return Err(Error::ClassOutOfRange {
            index: class_index,
            k,
        });
    }
    let mut other_max = 0.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if i != class_index && p > other_max {
            other_max = p;
        }
    }
    Ok((1.0 - probs[class_index]).max(other_max))
}

/// Element-wise [`linf_cost`] over all n x k (sample, class) pairs.
pub fn build_cost_matrix(p: &PredictionSet) -> Result<CostMatrix> {
    if p.kind() != ScoreKind::Probabilities {
        return Err(Error::ProbabilitiesRequired("cost matrix construction"));
    }
    let k = p.k();
    let mut costs = Vec::with_capacity(p.n() * k);
    for row in p.rows() {
        // Top-two row values: the off-class maximum is `max1` everywhere
        // except at the argmax itself, where it is `max2`.
        let mut arg1 = 0usize;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > row[arg1] {
                arg1 = j;
            }
        }
        let max1 = row[arg1];
        let mut max2 = 0.0f64;
        for (j, &v) in row.iter().enumerate() {
            if j != arg1 && v > max2 {
                max2 = v;
            }
        }
        for (j, &v) in row.iter().enumerate() {
            let off_max = if j == arg1 { max2 } else { max1 };
            costs.push((1.0 - v).max(off_max));
        }
    }
    CostMatrix::from_flat(costs, k)
}

/// Min-heap entry: pops the smallest key, lowest sample index on ties.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ArcEntry {
    key: f64,
    sample: u32,
}

impl Eq for ArcEntry {}

impl Ord for ArcEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap pops the "greatest" entry.
        other
            .key
            .partial_cmp(&self.key)
            .unwrap()
            .then_with(|| other.sample.cmp(&self.sample))
    }
}

impl PartialOrd for ArcEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazily build the heap for arc `from -> to` and return its first live entry.
fn peek_arc(
    slot: &mut Option<BinaryHeap<ArcEntry>>,
    from: usize,
    to: usize,
    costs: &CostMatrix,
    assign: &[u32],
    members_from: &[u32],
) -> Option<ArcEntry> {
    let heap = slot.get_or_insert_with(|| {
        members_from
            .iter()
            .filter(|&&i| assign[i as usize] as usize == from)
            .map(|&i| ArcEntry {
                key: costs.at(i as usize, to) - costs.at(i as usize, from),
                sample: i,
            })
            .collect()
    });
    while let Some(top) = heap.peek() {
        if assign[top.sample as usize] as usize == from {
            return Some(*top);
        }
        heap.pop();
    }
    None
}

/// Exact solution of the transportation problem with unit supplies and the
/// given integer class demands (`sum(demands)` must equal the row count).
pub fn solve_transport(costs: &CostMatrix, demands: &[usize]) -> Result<TransportResult> {
    let n = costs.n();
    let k = costs.k();
    if demands.len() != k {
        return Err(Error::ClassMismatch {
            left: demands.len(),
            right: k,
        });
    }
    let total_demand: usize = demands.iter().sum();
    if total_demand != n {
        return Err(Error::DemandMismatch {
            got: total_demand,
            expected: n,
        });
    }

    // Row-argmin start: every relocation then costs >= 0, so zero potentials
    // are dual-feasible.
    let mut assign: Vec<u32> = Vec::with_capacity(n);
    let mut counts = vec![0usize; k];
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
    for i in 0..n {
        let row = costs.row(i);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v < row[best] {
                best = j;
            }
        }
        assign.push(best as u32);
        counts[best] += 1;
        members[best].push(i as u32);
    }

    if counts != demands {
        let mut heaps: Vec<Option<BinaryHeap<ArcEntry>>> = (0..k * k).map(|_| None).collect();
        let mut pot = vec![0.0f64; k];
        let mut dist = vec![f64::INFINITY; k];
        let mut done = vec![false; k];
        let mut prev: Vec<Option<(usize, u32)>> = vec![None; k];

        while let Some(src) = (0..k).find(|&c| counts[c] > demands[c]) {
            dist.fill(f64::INFINITY);
            done.fill(false);
            prev.fill(None);
            dist[src] = 0.0;

            let sink = loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..k {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    // Cannot happen with sum(demands) == n: some deficit
                    // class is always one hop from a populated class.
                    return Err(Error::Numeric("transport search exhausted"));
                }
                done[u] = true;
                if counts[u] < demands[u] {
                    break u;
                }
                for v in 0..k {
                    if v == u || done[v] {
                        continue;
                    }
                    let Some(entry) =
                        peek_arc(&mut heaps[u * k + v], u, v, costs, &assign, &members[u])
                    else {
                        continue;
                    };
                    let raw = entry.key + pot[u] - pot[v];
                    debug_assert!(raw > -1e-7, "negative reduced cost {raw}");
                    let next = dist[u] + raw.max(0.0);
                    if next < dist[v] {
                        dist[v] = next;
                        prev[v] = Some((u, entry.sample));
                    }
                }
            };

            let sink_dist = dist[sink];
            for v in 0..k {
                pot[v] += dist[v].min(sink_dist);
            }

            // Walk the path back and relocate one sample per arc.
            let mut v = sink;
            while v != src {
                let (u, sample) = prev[v].expect("path broken");
                debug_assert_eq!(assign[sample as usize] as usize, u);
                assign[sample as usize] = v as u32;
                counts[u] -= 1;
                counts[v] += 1;
                members[v].push(sample);
                for x in 0..k {
                    if x == v {
                        continue;
                    }
                    if let Some(heap) = heaps[v * k + x].as_mut() {
                        heap.push(ArcEntry {
                            key: costs.at(sample as usize, x) - costs.at(sample as usize, v),
                            sample,
                        });
                    }
                }
                v = u;
            }
        }
    }

    let assignment: Vec<usize> = assign.iter().map(|&c| c as usize).collect();
    let per_sample_costs: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| costs.at(i, c))
        .collect();
    let total = per_sample_costs.iter().sum::<f64>() / n as f64;
    Ok(TransportResult {
        total,
        per_sample_costs,
        assignment,
    })
}

/// W-infinity distance between the empirical confidence distribution and a
/// label marginal realized as `n` one-hot atoms (largest-remainder counts).
pub fn w_inf(p: &PredictionSet, m: &LabelMarginal) -> Result<TransportResult> {
    if p.k() != m.k() {
        return Err(Error::ClassMismatch {
            left: p.k(),
            right: m.k(),
        });
    }
    let costs = build_cost_matrix(p)?;
    let demands = m.apportion(p.n());
    solve_transport(&costs, &demands)
}

/// Closed-form W-infinity between two one-hot label distributions:
/// `1 - sum_c min(a[c], b[c])`, their total variation distance.
pub fn one_hot_w_inf(a: &LabelMarginal, b: &LabelMarginal) -> Result<f64> {
    if a.k() != b.k() {
        return Err(Error::ClassMismatch {
            left: a.k(),
            right: b.k(),
        });
    }
    let overlap: f64 = a
        .mass()
        .iter()
        .zip(b.mass())
        .map(|(&x, &y)| x.min(y))
        .sum();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}
