//! Ground-state search over QUBO problems.
//!
//! Three samplers share one [`SampleSet`] output: exhaustive enumeration
//! for small problems, seeded single-flip simulated annealing, and an
//! annealer wrapper that averages over random spin-reversal gauges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{apply_gauge, ising_to_qubo, qubo_to_ising, Assignment, GaugeVector, QuboProblem};

/// Largest problem [`solve_exact`] will enumerate.
pub const MAX_EXACT_BITS: usize = 24;

/// At most this many tied ground states are kept by [`solve_exact`].
pub const MAX_EXACT_RECORDS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub assignment: Assignment,
    pub energy: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub sampler: String,
    pub seed: Option<u64>,
    pub reads: usize,
    pub sweeps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_gauges: Option<usize>,
    /// Number of tied minimizers seen by the exact enumerator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<u64>,
}

/// Records sorted by energy, ties broken by lexicographic assignment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub records: Vec<SampleRecord>,
    pub metadata: SampleMetadata,
}

impl SampleSet {
    /// Collapses duplicate assignments, scores them against `p`, and sorts.
    pub fn from_assignments(p: &QuboProblem, mut assignments: Vec<Assignment>, metadata: SampleMetadata) -> Self {
        assignments.sort_unstable();
        let mut records: Vec<SampleRecord> = Vec::new();
        for a in assignments {
            match records.last_mut() {
                Some(last) if last.assignment == a => last.multiplicity += 1,
                _ => records.push(SampleRecord {
                    energy: p.energy(&a),
                    assignment: a,
                    multiplicity: 1,
                }),
            }
        }
        sort_records(&mut records);
        Self { records, metadata }
    }

    pub fn best(&self) -> Option<&SampleRecord> {
        self.records.first()
    }

    pub fn lowest_energy(&self) -> Option<f64> {
        self.best().map(|r| r.energy)
    }

    pub fn total_reads(&self) -> usize {
        self.records.iter().map(|r| r.multiplicity).sum()
    }
}

fn sort_records(records: &mut [SampleRecord]) {
    records.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then_with(|| a.assignment.cmp(&b.assignment))
    });
}

/// Derives an independent 64-bit seed from `master` and a counter
/// (SplitMix64 finalizer).
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Local-field bookkeeping shared by the enumerator and the annealer.
struct LocalFields {
    n: usize,
    linear: Vec<f64>,
    sym: Vec<f64>,
    field: Vec<f64>,
}

impl LocalFields {
    fn new(p: &QuboProblem) -> Self {
        let (linear, sym) = p.split_symmetric();
        let n = linear.len();
        Self {
            n,
            linear,
            sym,
            field: vec![0.0; n],
        }
    }

    fn reset(&mut self, q: &[u8]) {
        let n = self.n;
        for k in 0..n {
            let row = &self.sym[k * n..(k + 1) * n];
            self.field[k] = row
                .iter()
                .zip(q)
                .filter(|(_, b)| **b != 0)
                .map(|(v, _)| *v)
                .sum();
        }
    }

    /// Energy change from flipping bit `k`.
    #[inline]
    fn delta(&self, q: &[u8], k: usize) -> f64 {
        let d = self.linear[k] + self.field[k];
        if q[k] == 0 {
            d
        } else {
            -d
        }
    }

    #[inline]
    fn flip(&mut self, q: &mut [u8], k: usize) {
        let n = self.n;
        let sign = if q[k] == 0 { 1.0 } else { -1.0 };
        q[k] ^= 1;
        let row = &self.sym[k * n..(k + 1) * n];
        for (f, v) in self.field.iter_mut().zip(row) {
            *f += sign * v;
        }
    }
}

/// Enumerates all `2ⁿ` assignments in Gray-code order and returns every
/// minimizer (up to [`MAX_EXACT_RECORDS`]).
pub fn solve_exact(p: &QuboProblem) -> Result<SampleSet> {
    let n = p.num_bits();
    if n > MAX_EXACT_BITS {
        return Err(Error::TooLarge {
            n,
            limit: MAX_EXACT_BITS,
        });
    }
    let scale = p.matrix().iter().map(|v| v.abs()).sum::<f64>() + p.offset().abs();
    let window = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let tie = 1e-12 * scale;

    let mut lf = LocalFields::new(p);
    let mut q = vec![0u8; n];
    let mut energy = p.offset();
    let mut min_seen = energy;
    let mut candidates: Vec<Assignment> = vec![q.clone()];
    let mut degeneracy: u64 = 1;

    let total: u64 = 1 << n;
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        energy += lf.delta(&q, k);
        lf.flip(&mut q, k);
        if step % 1024 == 0 {
            // Resynchronize to bound round-off drift.
            energy = p.energy(&q);
            lf.reset(&q);
        }
        if energy < min_seen - window {
            min_seen = energy;
            candidates.clear();
            candidates.push(q.clone());
            degeneracy = 1;
        } else if energy <= min_seen + window {
            min_seen = min_seen.min(energy);
            candidates.push(q.clone());
            degeneracy += 1;
            if candidates.len() >= 2 * MAX_EXACT_RECORDS {
                candidates.sort_unstable();
                candidates.truncate(MAX_EXACT_RECORDS);
            }
        }
    }

    let mut records: Vec<SampleRecord> = candidates
        .into_iter()
        .map(|a| SampleRecord {
            energy: p.energy(&a),
            assignment: a,
            multiplicity: 1,
        })
        .collect();
    let best = records.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    records.retain(|r| r.energy <= best + tie);
    sort_records(&mut records);
    records.truncate(MAX_EXACT_RECORDS);
    Ok(SampleSet {
        records,
        metadata: SampleMetadata {
            sampler: "exact".into(),
            seed: None,
            reads: 1,
            sweeps: 0,
            num_gauges: None,
            degeneracy: Some(degeneracy),
        },
    })
}

/// Geometric inverse-temperature ramp for independent Metropolis reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub reads: usize,
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    pub seed: u64,
}

/// Default number of reads.
pub const DEFAULT_READS: usize = 100;
/// Default sweeps per read.
pub const DEFAULT_SWEEPS: usize = 1000;
/// Default `(initial, final)` beta factors, in units of `1/⟨|Q|⟩`.
pub const DEFAULT_BETA_FACTORS: (f64, f64) = (0.1, 10.0);

impl AnnealSchedule {
    pub fn new(reads: usize, sweeps: usize, beta_initial: f64, beta_final: f64, seed: u64) -> Result<Self> {
        let s = Self {
            reads,
            sweeps,
            beta_initial,
            beta_final,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Beta range `factors / ⟨|Q|⟩`, where `⟨|Q|⟩` is the mean absolute
    /// nonzero coefficient of `p`.
    pub fn scaled_to(p: &QuboProblem, reads: usize, sweeps: usize, factors: (f64, f64), seed: u64) -> Result<Self> {
        let scale = p.mean_abs_coefficient();
        Self::new(reads, sweeps, factors.0 / scale, factors.1 / scale, seed)
    }

    /// 100 reads, 1000 sweeps, beta from `0.1/⟨|Q|⟩` to `10/⟨|Q|⟩`.
    pub fn default_for(p: &QuboProblem, seed: u64) -> Self {
        Self::scaled_to(p, DEFAULT_READS, DEFAULT_SWEEPS, DEFAULT_BETA_FACTORS, seed)
            .expect("default schedule is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.reads == 0 {
            return Err(Error::InvalidSchedule("reads must be at least 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidSchedule("sweeps must be at least 1".into()));
        }
        if !(self.beta_initial > 0.0 && self.beta_initial <= self.beta_final && self.beta_final.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "need 0 < beta_initial ≤ beta_final, got {} and {}",
                self.beta_initial, self.beta_final
            )));
        }
        Ok(())
    }

    /// One beta per sweep, geometric from `beta_initial` to `beta_final`.
    pub fn betas(&self) -> Vec<f64> {
        if self.sweeps == 1 {
            return vec![self.beta_final];
        }
        let ratio = (self.beta_final / self.beta_initial).ln() / (self.sweeps - 1) as f64;
        (0..self.sweeps)
            .map(|k| self.beta_initial * (ratio * k as f64).exp())
            .collect()
    }
}

fn anneal_read(p: &QuboProblem, betas: &[f64], seed: u64, read: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read);
    let n = p.num_bits();
    let mut lf = LocalFields::new(p);
    let mut q: Assignment = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
    lf.reset(&q);
    for &beta in betas {
        for k in 0..n {
            let de = lf.delta(&q, k);
            if de <= 0.0 || rng.gen::<f64>() < (-beta * de).exp() {
                lf.flip(&mut q, k);
            }
        }
    }
    q
}

fn run_reads(p: &QuboProblem, schedule: &AnnealSchedule) -> Vec<Assignment> {
    let betas = schedule.betas();
    let reads = 0..schedule.reads as u64;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        reads
            .into_par_iter()
            .map(|r| anneal_read(p, &betas, schedule.seed, r))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        reads.map(|r| anneal_read(p, &betas, schedule.seed, r)).collect()
    }
}

/// Independent single-flip Metropolis chains, one per read. Read `r` draws
/// from ChaCha8 stream `r` of the schedule seed, so the output does not
/// depend on execution order.
pub fn solve_annealed(p: &QuboProblem, schedule: &AnnealSchedule) -> Result<SampleSet> {
    schedule.validate()?;
    let assignments = run_reads(p, schedule);
    Ok(SampleSet::from_assignments(
        p,
        assignments,
        SampleMetadata {
            sampler: "annealed".into(),
            seed: Some(schedule.seed),
            reads: schedule.reads,
            sweeps: schedule.sweeps,
            num_gauges: None,
            degeneracy: None,
        },
    ))
}

/// Draws `num_gauges` gauges from the schedule seed and anneals each
/// spin-reversed problem. Reads are split as evenly as possible.
pub fn solve_gauged(p: &QuboProblem, schedule: &AnnealSchedule, num_gauges: usize) -> Result<SampleSet> {
    if num_gauges == 0 {
        return Err(Error::InvalidSchedule("need at least one gauge".into()));
    }
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(schedule.seed, u64::MAX));
    let gauges: Vec<GaugeVector> = (0..num_gauges)
        .map(|_| GaugeVector::random(p.num_bits(), &mut rng))
        .collect();
    solve_with_gauges(p, schedule, &gauges)
}

/// Gauge-averaged annealing with caller-supplied gauges. Gauge `k` runs
/// with seed `split_seed(schedule.seed, k)`; returned energies are in the
/// frame of `p`.
pub fn solve_with_gauges(p: &QuboProblem, schedule: &AnnealSchedule, gauges: &[GaugeVector]) -> Result<SampleSet> {
    schedule.validate()?;
    if gauges.is_empty() {
        return Err(Error::InvalidSchedule("need at least one gauge".into()));
    }
    let ising = qubo_to_ising(p);
    let per = schedule.reads / gauges.len();
    let extra = schedule.reads % gauges.len();
    let mut assignments = Vec::with_capacity(schedule.reads);
    for (k, g) in gauges.iter().enumerate() {
        let reads = per + usize::from(k < extra);
        if reads == 0 {
            continue;
        }
        let gauged = ising_to_qubo(&apply_gauge(&ising, g)?, *p.layout())?;
        let sub = AnnealSchedule {
            reads,
            seed: split_seed(schedule.seed, k as u64),
            ..*schedule
        };
        assignments.extend(run_reads(&gauged, &sub).iter().map(|q| g.apply_to_bits(q)));
    }
    Ok(SampleSet::from_assignments(
        p,
        assignments,
        SampleMetadata {
            sampler: "gauged".into(),
            seed: Some(schedule.seed),
            reads: schedule.reads,
            sweeps: schedule.sweeps,
            num_gauges: Some(gauges.len()),
            degeneracy: None,
        },
    ))
}
