//! Monte Carlo estimation of job completion times.
//!
//! # Random streams
//!
//! Every trial owns an independent ChaCha8 stream. The key is derived from the
//! 64-bit seed with `rand_chacha`'s `seed_from_u64` (PCG32 expansion), the
//! stream number is the trial index, and the word position starts at 0.
//! Trials are processed in fixed chunks of [`CHUNK_TRIALS`] and per-chunk
//! statistics are merged in chunk order, so results are bit-identical no
//! matter how many threads run them.
//!
//! Exponential variates are drawn by inversion, `-ln(U)/rate`, with `U` built
//! from the top 52 bits of a `u64` and offset by half a step so that
//! `0 < U < 1`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{
    check_rate, AssignmentVector, BatchLayout, CompletionEstimate, RecoveryStructure,
    ServiceSample, SystemParams,
};
use crate::policies::{Plan, PolicySpec};

/// Trials per deterministic work unit.
pub const CHUNK_TRIALS: u64 = 8192;

/// Largest block count handled by [`completion_time_exact_cover`].
pub const MAX_COVER_BLOCKS: usize = 30;

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub rate: f64,
    pub policy: PolicySpec,
    pub system: SystemParams,
}

/// Uniform on the open interval (0, 1).
#[inline]
fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
fn exp_variate<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

fn fill_exponential<R: RngCore + ?Sized>(buf: &mut Vec<f64>, n: usize, rate: f64, rng: &mut R) {
    buf.clear();
    buf.extend((0..n).map(|_| exp_variate(rng, rate)));
}

/// `n_workers` i.i.d. `Exp(rate)` service times.
pub fn sample_service_times<R: RngCore + ?Sized>(
    n_workers: usize,
    rate: f64,
    rng: &mut R,
) -> Result<ServiceSample> {
    check_rate(rate)?;
    let mut times = Vec::with_capacity(n_workers);
    fill_exponential(&mut times, n_workers, rate, rng);
    Ok(ServiceSample::from_raw(times))
}

fn max_of_mins(counts: &[usize], times: &[f64]) -> Option<f64> {
    let mut worst = 0.0f64;
    let mut start = 0;
    for &c in counts {
        let run = &times[start..start + c];
        let best = run.iter().copied().reduce(f64::min)?;
        worst = worst.max(best);
        start += c;
    }
    Some(worst)
}

/// Workers are taken in order, the first `N_1` hosting batch 0, the next `N_2`
/// batch 1, and so on. The job time is the maximum over batches of the
/// fastest replica; `None` when some batch has no replica.
pub fn completion_time_nonoverlapping(
    v: &AssignmentVector,
    sample: &ServiceSample,
) -> Result<Option<f64>> {
    if sample.len() != v.n_workers() {
        return Err(Error::domain(format!(
            "sample has {} times but the assignment has {} workers",
            sample.len(),
            v.n_workers()
        )));
    }
    Ok(max_of_mins(v.counts(), sample.times()))
}

fn structure_time(rs: &RecoveryStructure, times: &[f64]) -> f64 {
    let extreme = |set: &[usize], pick: fn(f64, f64) -> f64| {
        set.iter().map(|&w| times[w]).reduce(pick).unwrap_or(0.0)
    };
    match rs {
        RecoveryStructure::Groups(groups) => groups
            .iter()
            .map(|g| extreme(g, f64::max))
            .fold(f64::INFINITY, f64::min),
        RecoveryStructure::Replicas(sets) => sets
            .iter()
            .map(|s| extreme(s, f64::min))
            .fold(0.0, f64::max),
    }
}

/// Minimum over recovery groups of the group's slowest worker (or, for a
/// replica structure, maximum over sets of the fastest replica).
pub fn completion_time_groups(rs: &RecoveryStructure, sample: &ServiceSample) -> Result<f64> {
    rs.check_nonempty()?;
    if rs.min_workers() > sample.len() {
        return Err(Error::domain(format!(
            "structure references worker {} but the sample has {} times",
            rs.min_workers() - 1,
            sample.len()
        )));
    }
    Ok(structure_time(rs, sample.times()))
}

/// Earliest finish time at which the finished workers' batches contain
/// pairwise-disjoint batches covering every block; `None` if that never
/// happens. Ties in finish time are broken by worker id.
pub fn completion_time_exact_cover(
    layout: &BatchLayout,
    sample: &ServiceSample,
) -> Result<Option<f64>> {
    if layout.n_blocks() > MAX_COVER_BLOCKS {
        return Err(Error::ComplexityGuard(format!(
            "exact-cover search is limited to {MAX_COVER_BLOCKS} blocks, got {}",
            layout.n_blocks()
        )));
    }
    if sample.len() != layout.n_workers() {
        return Err(Error::domain(format!(
            "sample has {} times but the layout has {} workers",
            sample.len(),
            layout.n_workers()
        )));
    }
    let masks: Vec<u32> = layout
        .block_masks()
        .expect("at most 30 blocks")
        .into_iter()
        .map(|m| m as u32)
        .collect();
    let full: u32 = (1u32 << layout.n_blocks()) - 1;
    let times = sample.times();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));

    let mut finished: Vec<u32> = Vec::new();
    for w in order {
        let m = masks[w];
        if m == 0 || finished.contains(&m) {
            continue;
        }
        finished.push(m);
        // Any cover appearing now must use the new batch.
        let mut dead = HashSet::new();
        if covers(m, full, &finished, &mut dead) {
            return Ok(Some(times[w]));
        }
    }
    Ok(None)
}

/// Can `covered` be extended to `full` with disjoint batches from `finished`?
fn covers(covered: u32, full: u32, finished: &[u32], dead: &mut HashSet<u32>) -> bool {
    if covered == full {
        return true;
    }
    if dead.contains(&covered) {
        return false;
    }
    let free = !covered & full;
    let lowest = free & free.wrapping_neg();
    for &b in finished {
        if b & lowest != 0 && b & covered == 0 && covers(covered | b, full, finished, dead) {
            return true;
        }
    }
    dead.insert(covered);
    false
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

fn trial_stream(base: &ChaCha8Rng, trial: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng.set_word_pos(0);
    rng
}

/// Runs `n_samples` trials in chunks, handing each trial its own stream, and
/// returns the per-chunk accumulators in chunk order.
fn run_chunks<A, I, F>(n_samples: u64, seed: u64, init: I, trial: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &mut ChaCha8Rng) + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let n_chunks = n_samples.div_ceil(CHUNK_TRIALS);
    let chunk = |k: u64| {
        let range: Range<u64> = k * CHUNK_TRIALS..((k + 1) * CHUNK_TRIALS).min(n_samples);
        let mut acc = init();
        for i in range {
            let mut rng = trial_stream(&base, i);
            trial(&mut acc, &mut rng);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(chunk).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(chunk).collect()
    }
}

struct TrialAcc {
    moments: Moments,
    times: Vec<f64>,
    counts: Vec<usize>,
}

impl TrialAcc {
    fn new() -> Self {
        TrialAcc {
            moments: Moments::default(),
            times: Vec::new(),
            counts: Vec::new(),
        }
    }
}

fn draw_completion(
    plan: &Plan,
    n_workers: usize,
    rate: f64,
    acc: &mut TrialAcc,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    match plan {
        Plan::Vector(v) => {
            fill_exponential(&mut acc.times, v.n_workers(), rate, rng);
            max_of_mins(v.counts(), &acc.times)
        }
        Plan::Structure(rs) => {
            fill_exponential(&mut acc.times, n_workers, rate, rng);
            Some(structure_time(rs, &acc.times))
        }
        Plan::RandomCc {
            n_workers,
            n_batches,
        } => {
            acc.counts.clear();
            acc.counts.resize(*n_batches, 0);
            for _ in 0..*n_workers {
                acc.counts[rng.random_range(0..*n_batches)] += 1;
            }
            fill_exponential(&mut acc.times, *n_workers, rate, rng);
            max_of_mins(&acc.counts, &acc.times)
        }
    }
}

/// Estimates the mean completion time of `cfg.policy`.
///
/// Random-assignment trials that leave a batch uncovered are excluded from
/// the mean and reported through `coverage_rate`. The 95% interval is the
/// normal approximation `mean ± 1.96·s/√n`.
pub fn monte_carlo(cfg: &SimConfig) -> Result<CompletionEstimate> {
    if cfg.n_samples == 0 {
        return Err(Error::NonPositive { what: "n_samples" });
    }
    check_rate(cfg.rate)?;
    let plan = cfg.policy.plan(&cfg.system)?;
    if let Plan::Structure(rs) = &plan {
        rs.check_nonempty()?;
    }
    let n_workers = cfg.system.n_workers;
    let chunks = run_chunks(cfg.n_samples, cfg.seed, TrialAcc::new, |acc, rng| {
        if let Some(t) = draw_completion(&plan, n_workers, cfg.rate, acc, rng) {
            acc.moments.push(t);
        }
    });
    let m = chunks
        .into_iter()
        .fold(Moments::default(), |a, c| a.merge(c.moments));
    if m.n == 0 {
        return Err(Error::NoCoverage {
            n_samples: cfg.n_samples,
        });
    }
    let std_error = if m.n > 1 {
        (m.m2 / (m.n - 1) as f64).sqrt() / (m.n as f64).sqrt()
    } else {
        0.0
    };
    Ok(CompletionEstimate {
        mean: m.mean,
        std_error,
        ci95_low: m.mean - Z95 * std_error,
        ci95_high: m.mean + Z95 * std_error,
        n_samples: m.n,
        seed: cfg.seed,
        coverage_rate: m.n as f64 / cfg.n_samples as f64,
    })
}

/// Fraction of trials whose completion time exceeds each threshold, over the
/// same trial streams as [`monte_carlo`]. Uncovered trials count as
/// exceeding every threshold.
pub fn survival_empirical(cfg: &SimConfig, thresholds: &[f64]) -> Result<Vec<f64>> {
    if cfg.n_samples == 0 {
        return Err(Error::NonPositive { what: "n_samples" });
    }
    check_rate(cfg.rate)?;
    let plan = cfg.policy.plan(&cfg.system)?;
    let n_workers = cfg.system.n_workers;
    let chunks = run_chunks(
        cfg.n_samples,
        cfg.seed,
        || (TrialAcc::new(), vec![0u64; thresholds.len()]),
        |(acc, above), rng| {
            let t = draw_completion(&plan, n_workers, cfg.rate, acc, rng).unwrap_or(f64::INFINITY);
            for (count, beta) in above.iter_mut().zip(thresholds) {
                if t > *beta {
                    *count += 1;
                }
            }
        },
    );
    let mut total = vec![0u64; thresholds.len()];
    for (_, above) in chunks {
        for (t, a) in total.iter_mut().zip(above) {
            *t += a;
        }
    }
    Ok(total
        .into_iter()
        .map(|c| c as f64 / cfg.n_samples as f64)
        .collect())
}

/// Fraction of trials in which `n_workers` uniform draws hit all `n_batches` batches.
pub fn coverage_empirical(
    n_batches: usize,
    n_workers: usize,
    n_samples: u64,
    seed: u64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::NonPositive { what: "n_samples" });
    }
    if n_batches == 0 {
        return Err(Error::NonPositive { what: "n_batches" });
    }
    let chunks = run_chunks(
        n_samples,
        seed,
        || (0u64, vec![false; n_batches]),
        |(hits, seen), rng| {
            seen.iter_mut().for_each(|s| *s = false);
            let mut distinct = 0;
            for _ in 0..n_workers {
                let b = rng.random_range(0..n_batches);
                if !std::mem::replace(&mut seen[b], true) {
                    distinct += 1;
                }
            }
            if distinct == n_batches {
                *hits += 1;
            }
        },
    );
    let hits: u64 = chunks.iter().map(|(h, _)| h).sum();
    Ok(hits as f64 / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{cyclic_layout, fig4b_layout, replicated_nonoverlap_layout};

    fn sample(t: &[f64]) -> ServiceSample {
        ServiceSample::new(t.to_vec()).unwrap()
    }

    #[test]
    fn nonoverlapping_examples() {
        let v = AssignmentVector::new(vec![2, 2, 2]).unwrap();
        let s = sample(&[5.0, 1.0, 4.0, 2.0, 3.0, 6.0]);
        assert_eq!(completion_time_nonoverlapping(&v, &s).unwrap(), Some(3.0));
        let ones = AssignmentVector::new(vec![1; 6]).unwrap();
        assert_eq!(
            completion_time_nonoverlapping(&ones, &s).unwrap(),
            Some(6.0)
        );
        let gap = AssignmentVector::new(vec![2, 0, 4]).unwrap();
        assert_eq!(completion_time_nonoverlapping(&gap, &s).unwrap(), None);
        let short = AssignmentVector::new(vec![2, 2]).unwrap();
        assert!(completion_time_nonoverlapping(&short, &s).is_err());
    }

    #[test]
    fn groups_examples() {
        let rs = RecoveryStructure::Groups(vec![vec![0, 2, 4], vec![1, 3, 5]]);
        let s = sample(&[0.1, 0.9, 0.5, 0.8, 0.7, 0.6]);
        assert_eq!(completion_time_groups(&rs, &s).unwrap(), 0.7);
        let all = RecoveryStructure::Groups(vec![(0..6).collect()]);
        assert_eq!(completion_time_groups(&all, &s).unwrap(), 0.9);
        assert!(completion_time_groups(&RecoveryStructure::Groups(vec![]), &s).is_err());
        let far = RecoveryStructure::Groups(vec![vec![7]]);
        assert!(completion_time_groups(&far, &s).is_err());
    }

    #[test]
    fn exact_cover_examples() {
        let s = sample(&[0.1, 0.9, 0.5, 0.8, 0.7, 0.6]);
        let (layout, rs) = cyclic_layout(6, 3).unwrap();
        assert_eq!(
            completion_time_exact_cover(&layout, &s).unwrap(),
            Some(completion_time_groups(&rs, &s).unwrap())
        );
        // A block held by nobody can never be covered.
        let holey = BatchLayout::new(3, vec![vec![0], vec![1], vec![1]]).unwrap();
        assert_eq!(
            completion_time_exact_cover(&holey, &sample(&[1.0, 2.0, 3.0])).unwrap(),
            None
        );
        let wide = BatchLayout::new(31, vec![(0..31).collect()]).unwrap();
        assert!(matches!(
            completion_time_exact_cover(&wide, &sample(&[1.0])),
            Err(Error::ComplexityGuard(_))
        ));
    }

    #[test]
    fn exact_cover_agrees_with_structures() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let cases = [
            cyclic_layout(6, 3).unwrap(),
            cyclic_layout(6, 2).unwrap(),
            cyclic_layout(12, 4).unwrap(),
            fig4b_layout(),
            replicated_nonoverlap_layout(6, 3).unwrap(),
            replicated_nonoverlap_layout(12, 4).unwrap(),
        ];
        for (layout, rs) in &cases {
            for _ in 0..2000 {
                let s = sample_service_times(layout.n_workers(), 1.0, &mut rng).unwrap();
                assert_eq!(
                    completion_time_exact_cover(layout, &s).unwrap(),
                    Some(completion_time_groups(rs, &s).unwrap())
                );
            }
        }
    }

    #[test]
    fn samples_are_positive_with_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_service_times(200_000, 2.0, &mut rng).unwrap();
        assert!(s.times().iter().all(|&t| t > 0.0 && t.is_finite()));
        let mean = s.times().iter().sum::<f64>() / s.len() as f64;
        // sd of Exp(2) is 0.5
        assert!((mean - 0.5).abs() < 3.0 * 0.5 / (s.len() as f64).sqrt());
        assert!(sample_service_times(3, 0.0, &mut rng).is_err());
    }

    #[test]
    fn open_unit_bounds() {
        struct Fixed(u64);
        impl RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {}
        }
        assert!(open_unit(&mut Fixed(0)) > 0.0);
        assert!(open_unit(&mut Fixed(u64::MAX)) < 1.0);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (a, b) = xs.split_at(313);
        let mut ma = Moments::default();
        let mut mb = Moments::default();
        a.iter().for_each(|&x| ma.push(x));
        b.iter().for_each(|&x| mb.push(x));
        let merged = ma.merge(mb);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-8 * whole.m2);
    }

    #[test]
    fn coverage_trivial() {
        assert_eq!(coverage_empirical(1, 1, 100, 0).unwrap(), 1.0);
        assert_eq!(coverage_empirical(5, 4, 100, 0).unwrap(), 0.0);
        assert!(coverage_empirical(2, 2, 0, 0).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let cfg = SimConfig {
            n_samples: 20_000,
            seed: 5,
            rate: 1.0,
            policy: PolicySpec::RandomCc,
            system: SystemParams::new(6, 6, 3, 1.0),
        };
        assert_eq!(monte_carlo(&cfg).unwrap(), monte_carlo(&cfg).unwrap());
        let other = SimConfig {
            seed: 6,
            ..cfg.clone()
        };
        assert_ne!(
            monte_carlo(&cfg).unwrap().mean,
            monte_carlo(&other).unwrap().mean
        );
    }

    #[test]
    fn monte_carlo_no_coverage() {
        let cfg = SimConfig {
            n_samples: 50,
            seed: 5,
            rate: 1.0,
            policy: PolicySpec::RandomCc,
            system: SystemParams::new(2, 5, 5, 1.0),
        };
        assert_eq!(monte_carlo(&cfg), Err(Error::NoCoverage { n_samples: 50 }));
    }
}
