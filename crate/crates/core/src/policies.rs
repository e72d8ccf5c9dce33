//! Constructors for the batch-assignment policies: balanced and explicit
//! replica vectors, random (coupon collector) draws, cyclic overlapping
//! batches, the grouped overlapping example and replicated disjoint batches.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    validate_params, AssignmentVector, BatchLayout, BatchingKind, RecoveryStructure, SystemParams,
};

/// A policy as named on the command line and in config files.
///
/// Text form: `balanced`, `random-cc`, `cyclic`, `grouped-overlap`,
/// `vector:3,2,1` or `structure:0,2,4/1,3,5` (groups separated by `/`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Balanced,
    ExplicitVector(Vec<usize>),
    RandomCc,
    Cyclic,
    GroupedOverlap,
    ExplicitStructure(Vec<Vec<usize>>),
}

/// A policy resolved against concrete system parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    /// Disjoint batches with fixed replica counts.
    Vector(AssignmentVector),
    /// Completion governed by a recovery structure.
    Structure(RecoveryStructure),
    /// Each worker draws a batch uniformly with replacement, anew per trial.
    RandomCc { n_workers: usize, n_batches: usize },
}

impl PolicySpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PolicySpec::Balanced => "balanced",
            PolicySpec::ExplicitVector(_) => "vector",
            PolicySpec::RandomCc => "random-cc",
            PolicySpec::Cyclic => "cyclic",
            PolicySpec::GroupedOverlap => "grouped-overlap",
            PolicySpec::ExplicitStructure(_) => "structure",
        }
    }

    /// Checks the policy's payload against `system` and builds its [`Plan`].
    pub fn plan(&self, system: &SystemParams) -> Result<Plan> {
        let (n, b) = (system.n_workers, system.n_batches);
        match self {
            PolicySpec::Balanced => Ok(Plan::Vector(balanced_assignment(n, b)?)),
            PolicySpec::ExplicitVector(counts) => {
                let v = AssignmentVector::new(counts.clone())?;
                if v.n_workers() != n || v.n_batches() != b {
                    return Err(Error::domain(format!(
                        "vector {counts:?} has {} batches over {} workers, expected {b} over {n}",
                        v.n_batches(),
                        v.n_workers()
                    )));
                }
                Ok(Plan::Vector(v))
            }
            PolicySpec::RandomCc => {
                if n == 0 || b == 0 {
                    return Err(Error::NonPositive { what: "N and B" });
                }
                Ok(Plan::RandomCc {
                    n_workers: n,
                    n_batches: b,
                })
            }
            PolicySpec::Cyclic => {
                let p = SystemParams {
                    n_blocks: n,
                    ..*system
                };
                validate_params(&p, BatchingKind::Overlapping)?;
                Ok(Plan::Structure(cyclic_layout(n, b)?.1))
            }
            PolicySpec::GroupedOverlap => {
                if n != 6 || b != 3 {
                    return Err(Error::domain(
                        "grouped-overlap is the fixed N = 6, B = 3 instance",
                    ));
                }
                Ok(Plan::Structure(fig4b_layout().1))
            }
            PolicySpec::ExplicitStructure(groups) => {
                let rs = RecoveryStructure::Groups(groups.clone());
                rs.check_nonempty()?;
                if rs.min_workers() > n {
                    return Err(Error::domain(format!(
                        "structure references worker {} but N = {n}",
                        rs.min_workers() - 1
                    )));
                }
                Ok(Plan::Structure(rs))
            }
        }
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::ExplicitVector(c) => write!(f, "vector:{}", join(c)),
            PolicySpec::ExplicitStructure(g) => {
                let groups: Vec<String> = g.iter().map(|g| join(g)).collect();
                write!(f, "structure:{}", groups.join("/"))
            }
            other => f.write_str(other.kind_name()),
        }
    }
}

fn parse_ids(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::domain(format!("`{t}` is not a non-negative integer")))
        })
        .collect()
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, payload) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        match (head, payload) {
            ("balanced", None) => Ok(PolicySpec::Balanced),
            ("random-cc", None) => Ok(PolicySpec::RandomCc),
            ("cyclic", None) => Ok(PolicySpec::Cyclic),
            ("grouped-overlap", None) => Ok(PolicySpec::GroupedOverlap),
            ("vector", Some(p)) => Ok(PolicySpec::ExplicitVector(parse_ids(p)?)),
            ("structure", Some(p)) => Ok(PolicySpec::ExplicitStructure(
                p.split('/').map(parse_ids).collect::<Result<_>>()?,
            )),
            _ => Err(Error::domain(format!(
                "unknown policy `{s}` (expected balanced, random-cc, cyclic, grouped-overlap, \
                 vector:<counts> or structure:<groups>)"
            ))),
        }
    }
}

impl Serialize for PolicySpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicySpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn replicas_per_batch(n_workers: usize, n_batches: usize) -> Result<usize> {
    if n_workers == 0 {
        return Err(Error::NonPositive { what: "n_workers" });
    }
    if n_batches == 0 {
        return Err(Error::NonPositive { what: "n_batches" });
    }
    if !n_workers.is_multiple_of(n_batches) {
        return Err(Error::NonDivisible {
            what: "replicas per batch N/B",
            divisor: n_batches,
            dividend: n_workers,
        });
    }
    Ok(n_workers / n_batches)
}

/// `(N/B, ..., N/B)`.
pub fn balanced_assignment(n_workers: usize, n_batches: usize) -> Result<AssignmentVector> {
    let r = replicas_per_batch(n_workers, n_batches)?;
    AssignmentVector::new(vec![r; n_batches])
}

/// Each of `n_workers` workers draws one of `n_batches` batches uniformly
/// with replacement. Entries of the result may be zero.
pub fn random_cc_assignment<R: Rng + ?Sized>(
    n_workers: usize,
    n_batches: usize,
    rng: &mut R,
) -> Result<AssignmentVector> {
    if n_batches == 0 {
        return Err(Error::NonPositive { what: "n_batches" });
    }
    let mut counts = vec![0; n_batches];
    for _ in 0..n_workers {
        counts[rng.random_range(0..n_batches)] += 1;
    }
    AssignmentVector::new(counts)
}

/// Cyclic overlapping batches over `S = N` blocks: worker `w` holds blocks
/// `w, w+1, ..., w+N/B-1 (mod N)`. The recovery groups are the `N/B`
/// residue classes `{r, r+N/B, r+2N/B, ...}`.
pub fn cyclic_layout(
    n_workers: usize,
    n_batches: usize,
) -> Result<(BatchLayout, RecoveryStructure)> {
    let width = replicas_per_batch(n_workers, n_batches)?;
    let batches = (0..n_workers)
        .map(|w| (0..width).map(|i| (w + i) % n_workers).collect())
        .collect();
    let groups = (0..width)
        .map(|r| (r..n_workers).step_by(width).collect())
        .collect();
    Ok((
        BatchLayout::new(n_workers, batches)?,
        RecoveryStructure::Groups(groups),
    ))
}

/// The `N = S = 6`, `B = 3` layout in which two recovery groups share the
/// batch held by workers 4 and 5.
pub fn fig4b_layout() -> (BatchLayout, RecoveryStructure) {
    let batches = vec![
        vec![0, 1],
        vec![1, 2],
        vec![2, 3],
        vec![3, 0],
        vec![4, 5],
        vec![4, 5],
    ];
    let groups = vec![vec![0, 2, 4], vec![0, 2, 5], vec![1, 3, 4], vec![1, 3, 5]];
    (
        BatchLayout::new(6, batches).expect("fixed layout is valid"),
        RecoveryStructure::Groups(groups),
    )
}

/// Disjoint batches replicated `N/B` times over `S = N` blocks: workers
/// `kN/B .. (k+1)N/B - 1` all hold blocks `kN/B .. (k+1)N/B - 1`.
pub fn replicated_nonoverlap_layout(
    n_workers: usize,
    n_batches: usize,
) -> Result<(BatchLayout, RecoveryStructure)> {
    let width = replicas_per_batch(n_workers, n_batches)?;
    let batches = (0..n_workers)
        .map(|w| {
            let start = (w / width) * width;
            (start..start + width).collect()
        })
        .collect();
    let replicas = balanced_assignment(n_workers, n_batches)?.replica_sets();
    Ok((
        BatchLayout::new(n_workers, batches)?,
        RecoveryStructure::Replicas(replicas),
    ))
}
