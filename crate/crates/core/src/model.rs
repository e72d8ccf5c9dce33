//! Domain types for a master/worker system: a data set of `S` blocks split into
//! `B` batches, handed out redundantly to `N` workers with i.i.d. exponential
//! service times.
//!
//! Block and worker ids are dense and 0-based everywhere.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchingKind {
    /// The data set is chopped into `B` disjoint batches.
    NonOverlapping,
    /// Every worker holds its own batch of `S/B` blocks and batches may share blocks.
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_workers: usize,
    pub n_blocks: usize,
    pub n_batches: usize,
    /// Service rate of every worker, in 1/time.
    pub rate: f64,
}

impl SystemParams {
    pub fn new(n_workers: usize, n_blocks: usize, n_batches: usize, rate: f64) -> Self {
        SystemParams {
            n_workers,
            n_blocks,
            n_batches,
            rate,
        }
    }

    /// Same as [`validate_params`].
    pub fn validate(&self, kind: BatchingKind) -> Result<()> {
        validate_params(self, kind)
    }

    pub fn batch_size(&self) -> usize {
        self.n_blocks / self.n_batches
    }
}

/// Checks positivity and divisibility of `p` for the given batching kind.
///
/// Overlapping layouts additionally require `S = N` and `B | N`.
pub fn validate_params(p: &SystemParams, kind: BatchingKind) -> Result<()> {
    if p.n_workers == 0 {
        return Err(Error::NonPositive { what: "n_workers" });
    }
    if p.n_blocks == 0 {
        return Err(Error::NonPositive { what: "n_blocks" });
    }
    if p.n_batches == 0 {
        return Err(Error::NonPositive { what: "n_batches" });
    }
    check_rate(p.rate)?;
    if !p.n_blocks.is_multiple_of(p.n_batches) {
        return Err(Error::NonDivisible {
            what: "batch size S/B",
            divisor: p.n_batches,
            dividend: p.n_blocks,
        });
    }
    if kind == BatchingKind::Overlapping {
        if p.n_blocks != p.n_workers {
            return Err(Error::domain(format!(
                "overlapping layouts require S = N (got S = {}, N = {})",
                p.n_blocks, p.n_workers
            )));
        }
        if !p.n_workers.is_multiple_of(p.n_batches) {
            return Err(Error::NonDivisible {
                what: "replication factor N/B",
                divisor: p.n_batches,
                dividend: p.n_workers,
            });
        }
    }
    Ok(())
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { what: "rate" })
    }
}

/// Per-batch replica counts `(N_1, ..., N_B)` for non-overlapping batching.
///
/// Zero entries are allowed so that the outcome of a random draw can be
/// represented; completion-time operations reject or flag them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssignmentVector {
    counts: Vec<usize>,
}

impl AssignmentVector {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::NonPositive { what: "n_batches" });
        }
        Ok(AssignmentVector { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_batches(&self) -> usize {
        self.counts.len()
    }

    pub fn n_workers(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Every batch has at least one worker.
    pub fn is_covering(&self) -> bool {
        self.counts.iter().all(|&c| c > 0)
    }

    pub fn require_covering(&self) -> Result<()> {
        match self.counts.iter().position(|&c| c == 0) {
            Some(batch) => Err(Error::UncoveredBatch { batch }),
            None => Ok(()),
        }
    }

    /// Worker ids hosting each batch, workers numbered consecutively batch by batch.
    pub fn replica_sets(&self) -> Vec<Vec<usize>> {
        let mut next = 0;
        self.counts
            .iter()
            .map(|&c| {
                let set = (next..next + c).collect();
                next += c;
                set
            })
            .collect()
    }
}

/// Worker to block-set map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchLayout {
    n_blocks: usize,
    batches: Vec<Vec<usize>>,
}

impl BatchLayout {
    /// Builds a layout, rejecting out-of-range or duplicated block ids.
    /// Block ids within each batch are stored sorted.
    pub fn new(n_blocks: usize, batches: Vec<Vec<usize>>) -> Result<Self> {
        let mut sorted = Vec::with_capacity(batches.len());
        for (w, batch) in batches.into_iter().enumerate() {
            let set: BTreeSet<usize> = batch.iter().copied().collect();
            if set.len() != batch.len() {
                return Err(Error::domain(format!("worker {w} holds a duplicate block")));
            }
            if let Some(&b) = set.iter().next_back().filter(|&&b| b >= n_blocks) {
                return Err(Error::domain(format!(
                    "worker {w} holds block {b}, but there are only {n_blocks} blocks"
                )));
            }
            sorted.push(set.into_iter().collect());
        }
        Ok(BatchLayout {
            n_blocks,
            batches: sorted,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn n_workers(&self) -> usize {
        self.batches.len()
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    pub fn batch(&self, worker: usize) -> &[usize] {
        &self.batches[worker]
    }

    /// Number of workers holding each block.
    pub fn block_multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0; self.n_blocks];
        for b in self.batches.iter().flatten() {
            m[*b] += 1;
        }
        m
    }

    /// Checks uniform batch size `batch_size` and that every block is held by
    /// exactly `replication` workers.
    pub fn check_uniform(&self, batch_size: usize, replication: usize) -> Result<()> {
        if let Some(w) = self.batches.iter().position(|b| b.len() != batch_size) {
            return Err(Error::domain(format!(
                "worker {w} holds {} blocks, expected {batch_size}",
                self.batches[w].len()
            )));
        }
        let mult = self.block_multiplicity();
        if let Some(b) = mult.iter().position(|&m| m != replication) {
            return Err(Error::domain(format!(
                "block {b} is held by {} workers, expected {replication}",
                mult[b]
            )));
        }
        Ok(())
    }

    /// Checks the layout against `p`: `N` batches of `S/B` blocks, each block replicated `N/B` times.
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        validate_params(p, BatchingKind::NonOverlapping)?;
        if self.n_blocks != p.n_blocks || self.batches.len() != p.n_workers {
            return Err(Error::domain(format!(
                "layout has {} workers over {} blocks, expected {} over {}",
                self.batches.len(),
                self.n_blocks,
                p.n_workers,
                p.n_blocks
            )));
        }
        let batch_size = p.n_blocks / p.n_batches;
        if !(p.n_workers * batch_size).is_multiple_of(p.n_blocks) {
            return Err(Error::domain("N·S/B is not a multiple of S"));
        }
        self.check_uniform(batch_size, p.n_workers * batch_size / p.n_blocks)
    }

    /// Block sets as bitmasks; `None` when there are more than 64 blocks.
    pub fn block_masks(&self) -> Option<Vec<u64>> {
        if self.n_blocks > 64 {
            return None;
        }
        Some(
            self.batches
                .iter()
                .map(|b| b.iter().fold(0u64, |m, &i| m | (1 << i)))
                .collect(),
        )
    }
}

/// Which sets of finished workers let the master produce the overall result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryStructure {
    /// The job completes once every worker of some group has finished.
    Groups(Vec<Vec<usize>>),
    /// The job completes once at least one worker of every replica set has
    /// finished. Equivalent to `Groups` over the cartesian product of the sets,
    /// without materializing it.
    Replicas(Vec<Vec<usize>>),
}

impl RecoveryStructure {
    pub fn sets(&self) -> &[Vec<usize>] {
        match self {
            RecoveryStructure::Groups(s) | RecoveryStructure::Replicas(s) => s,
        }
    }

    /// One past the largest worker id referenced.
    pub fn min_workers(&self) -> usize {
        self.sets().iter().flatten().max().map_or(0, |&w| w + 1)
    }

    pub(crate) fn check_nonempty(&self) -> Result<()> {
        let sets = self.sets();
        if sets.is_empty() {
            return Err(Error::domain("recovery structure has no sets"));
        }
        if let Some(i) = sets.iter().position(Vec::is_empty) {
            return Err(Error::domain(format!("recovery set {i} is empty")));
        }
        Ok(())
    }

    /// Explicit group list. `Replicas` is expanded to one-worker-per-set
    /// selections, failing with `ComplexityGuard` beyond `limit` groups.
    pub fn expand_groups(&self, limit: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            RecoveryStructure::Groups(g) => Ok(g.clone()),
            RecoveryStructure::Replicas(sets) => {
                let total = sets
                    .iter()
                    .try_fold(1usize, |acc, s| acc.checked_mul(s.len()))
                    .filter(|&t| t <= limit);
                let Some(total) = total else {
                    return Err(Error::ComplexityGuard(format!(
                        "replica structure expands to more than {limit} groups"
                    )));
                };
                let mut groups = Vec::with_capacity(total);
                let mut current = Vec::with_capacity(sets.len());
                fn rec(sets: &[Vec<usize>], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                    match sets.split_first() {
                        None => out.push(current.clone()),
                        Some((first, rest)) => {
                            for &w in first {
                                current.push(w);
                                rec(rest, current, out);
                                current.pop();
                            }
                        }
                    }
                }
                rec(sets, &mut current, &mut groups);
                Ok(groups)
            }
        }
    }

    /// Checks that every recovery group's batches exactly partition the
    /// block set. Returns the workers not appearing in any set (permitted,
    /// but they never contribute).
    pub fn check_partitions(&self, layout: &BatchLayout) -> Result<Vec<usize>> {
        self.check_nonempty()?;
        let n = layout.n_workers();
        if self.min_workers() > n {
            return Err(Error::domain(format!(
                "structure references worker {} but the layout has {n} workers",
                self.min_workers() - 1
            )));
        }
        let check_cover = |members: &[usize], what: &str| -> Result<()> {
            let mut seen = vec![false; layout.n_blocks()];
            for &w in members {
                for &b in layout.batch(w) {
                    if std::mem::replace(&mut seen[b], true) {
                        return Err(Error::domain(format!("{what}: block {b} covered twice")));
                    }
                }
            }
            match seen.iter().position(|s| !s) {
                Some(b) => Err(Error::domain(format!("{what}: block {b} not covered"))),
                None => Ok(()),
            }
        };
        match self {
            RecoveryStructure::Groups(groups) => {
                for (i, g) in groups.iter().enumerate() {
                    check_cover(g, &format!("group {i}"))?;
                }
            }
            RecoveryStructure::Replicas(sets) => {
                for (i, s) in sets.iter().enumerate() {
                    if s.iter().any(|&w| layout.batch(w) != layout.batch(s[0])) {
                        return Err(Error::domain(format!(
                            "replica set {i} mixes different batches"
                        )));
                    }
                }
                let representatives: Vec<usize> = sets.iter().map(|s| s[0]).collect();
                check_cover(&representatives, "replica sets")?;
            }
        }
        let mut used = vec![false; n];
        for &w in self.sets().iter().flatten() {
            used[w] = true;
        }
        Ok((0..n).filter(|&w| !used[w]).collect())
    }
}

/// One service time per worker.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSample {
    times: Vec<f64>,
}

impl ServiceSample {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if let Some(i) = times.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::domain(format!(
                "service time {} of worker {i} is not a positive finite number",
                times[i]
            )));
        }
        Ok(ServiceSample { times })
    }

    /// Skips validation; callers guarantee positive finite entries.
    pub(crate) fn from_raw(times: Vec<f64>) -> Self {
        ServiceSample { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Trials that produced a completion time.
    pub n_samples: u64,
    pub seed: u64,
    /// Fraction of trials in which the job could complete at all.
    pub coverage_rate: f64,
}

impl CompletionEstimate {
    pub fn ci_contains(&self, value: f64) -> bool {
        self.ci95_low <= value && value <= self.ci95_high
    }
}
