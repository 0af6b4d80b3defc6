//! Generation-by-generation simulation.
//!
//! Generation 0 is one particle of the initial type at the origin. Each
//! step draws, parent by parent and then child type by child type, the
//! brood sizes of the whole generation, checks the population cap, and
//! only then draws the displacements in the same order. A trial is
//! sequential; independent trials run in parallel on disjoint random
//! streams and are collected by trial index.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classes::{ClassDecomposition, DominantPair};
use crate::model::{validate, ModelSpec, OffspringSampler};
use crate::rng::{self, Domain};
use crate::tails::TailSpec;

pub const DEFAULT_CAP: usize = 2_000_000;

/// Counts above this are propagated by their means in [`Simulator::run_counts`].
const EXACT_COUNT_LIMIT: u64 = 1_000_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("generation {generation} would hold {size} particles, above the cap of {cap}")]
    PopulationCapExceeded { generation: usize, size: usize, cap: usize },
    #[error("model is not simulatable: {0}")]
    InvalidModel(String),
}

/// One generation of particles, stored column-wise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    pub positions: Vec<f64>,
    /// Displacement from the parent (0 for the root).
    pub displacements: Vec<f64>,
    pub types: Vec<u32>,
    /// Index into the previous frame (0 for the root).
    pub parents: Vec<u32>,
}

impl Frame {
    pub fn root(initial_type: usize) -> Self {
        Self {
            positions: vec![0.0],
            displacements: vec![0.0],
            types: vec![initial_type as u32],
            parents: vec![0],
        }
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn rightmost(&self) -> Option<f64> {
        self.positions.iter().copied().reduce(f64::max)
    }

    pub fn counts(&self, d: usize) -> Vec<u64> {
        let mut z = vec![0u64; d];
        for &t in &self.types {
            z[t as usize] += 1;
        }
        z
    }

    /// Copy holding only types and parents.
    fn lineage(&self) -> Self {
        Self {
            positions: Vec::new(),
            displacements: Vec::new(),
            types: self.types.clone(),
            parents: self.parents.clone(),
        }
    }
}

/// Per-type counts of particles in generations `1..=n` with at least one
/// descendant (themselves included) in generation `n`.
///
/// `frames[k]` is generation `k`; only `types` and `parents` are read.
pub fn ancestors_with_descendants(frames: &[Frame], d: usize) -> Vec<u64> {
    let mut y = vec![0u64; d];
    let Some(last) = frames.last() else {
        return y;
    };
    let mut marked = vec![true; last.len()];
    for k in (1..frames.len()).rev() {
        let frame = &frames[k];
        let mut parent_marked = vec![false; frames[k - 1].len()];
        for (idx, &m) in marked.iter().enumerate() {
            if m {
                y[frame.types[idx] as usize] += 1;
                parent_marked[frame.parents[idx] as usize] = true;
            }
        }
        marked = parent_marked;
    }
    y
}

/// How to turn generation-`n` counts into a martingale estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WMode {
    /// `Z_n . v / rho^n`.
    Irreducible { rho: f64, v: Vec<f64> },
    /// `Z_n^I / (n^k rho^n)`.
    Reducible { index: usize, k: u32, rho: f64 },
}

impl WMode {
    /// Irreducible mode from the class containing the initial type; `v` is
    /// zero on types outside it.
    pub fn irreducible(decomposition: &ClassDecomposition, initial_type: usize) -> Self {
        let a = decomposition.class_of(initial_type);
        let mut v = vec![0.0; decomposition.condensation.class_of.len()];
        for (pos, &j) in decomposition.condensation.classes[a].iter().enumerate() {
            v[j] = decomposition.spectra[a].right[pos];
        }
        WMode::Irreducible {
            rho: decomposition.spectra[a].rho,
            v,
        }
    }

    pub fn reducible(pair: &DominantPair) -> Self {
        WMode::Reducible {
            index: pair.type_index,
            k: pair.k,
            rho: pair.rho,
        }
    }

    /// Plug-in value at generation `n`.
    pub fn estimate(&self, counts: &[u64], n: usize) -> f64 {
        match self {
            WMode::Irreducible { rho, v } => {
                let dot: f64 = counts.iter().zip(v).map(|(&z, &w)| z as f64 * w).sum();
                scale_down(dot, *rho, 0, n)
            }
            WMode::Reducible { index, k, rho } => scale_down(counts[*index] as f64, *rho, *k, n),
        }
    }
}

/// `x / (n^k rho^n)`, dividing directly while the scale is representable
/// and in logarithms beyond.
pub fn scale_down(x: f64, rho: f64, k: u32, n: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = rho.powi(n as i32) * (n as f64).powi(k as i32);
    if scale.is_normal() && n <= i32::MAX as usize {
        x / scale
    } else {
        (x.ln() - n as f64 * rho.ln() - k as f64 * (n as f64).ln()).exp()
    }
}

/// Settings for one displacement trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOptions {
    pub n: usize,
    pub cap: usize,
    /// Retain parent links to count ancestors with descendants at `n`.
    pub track_ancestry: bool,
    pub w_mode: Option<WMode>,
}

impl TrialOptions {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cap: DEFAULT_CAP,
            track_ancestry: false,
            w_mode: None,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_ancestry(mut self) -> Self {
        self.track_ancestry = true;
        self
    }

    pub fn with_w(mut self, mode: WMode) -> Self {
        self.w_mode = Some(mode);
        self
    }
}

/// Observables of one trial up to generation `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub index: u64,
    pub n: usize,
    /// `R_n`; `None` when the population died out.
    pub rightmost: Option<f64>,
    /// `R_k` for `k = 0..=n`.
    pub rightmost_by_generation: Vec<Option<f64>>,
    /// Largest type-`i` displacement along the ancestral lines of
    /// generation-`n` particles.
    pub max_displacement: Vec<Option<f64>>,
    /// Largest type-`i` displacement over every particle born up to `n`.
    pub max_displacement_all: Vec<Option<f64>>,
    /// `counts[k][j]` is the number of type-`j` particles in generation `k`.
    pub counts: Vec<Vec<u64>>,
    /// `Y_n^i`, when ancestry was tracked.
    pub ancestors: Option<Vec<u64>>,
    pub w_hat: Option<f64>,
    pub extinct_at: Option<usize>,
    /// Cap hit; every other observable is empty.
    pub capped: bool,
}

impl TrialResult {
    fn capped(index: u64, n: usize) -> Self {
        Self {
            index,
            n,
            rightmost: None,
            rightmost_by_generation: Vec::new(),
            max_displacement: Vec::new(),
            max_displacement_all: Vec::new(),
            counts: Vec::new(),
            ancestors: None,
            w_hat: None,
            extinct_at: None,
            capped: true,
        }
    }

    /// `M_n`, the largest displacement along lines to generation `n`.
    pub fn max_displacement_overall(&self) -> Option<f64> {
        self.max_displacement.iter().flatten().copied().reduce(f64::max)
    }

    pub fn is_extinct(&self) -> bool {
        self.extinct_at.is_some()
    }
}

/// `Z_n . v / rho^n` or `Z_n^I / (n^k rho^n)` from a finished trial.
pub fn estimate_w(trial: &TrialResult, mode: &WMode) -> Option<f64> {
    trial.counts.get(trial.n).map(|z| mode.estimate(z, trial.n))
}

/// A model with its samplers built once.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ModelSpec,
    samplers: Vec<Vec<OffspringSampler>>,
}

impl Simulator {
    /// Fails on parameter errors; assumption violations such as a
    /// subcritical initial class are allowed.
    pub fn new(spec: &ModelSpec) -> Result<Self, EngineError> {
        let report = validate(spec);
        if report.has_parameter_errors() {
            return Err(EngineError::InvalidModel(report.to_string()));
        }
        let samplers = spec
            .offspring_table()
            .iter()
            .map(|row| row.iter().map(|law| law.sampler()).collect())
            .collect();
        Ok(Self {
            spec: spec.clone(),
            samplers,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn types(&self) -> usize {
        self.spec.types()
    }

    pub fn initial_frame(&self) -> Frame {
        Frame::root(self.spec.initial_type())
    }

    /// The next generation; `generation` is its index, used in errors.
    pub fn step_generation<R: rand::Rng + ?Sized>(
        &self,
        frame: &Frame,
        generation: usize,
        cap: usize,
        rng: &mut R,
    ) -> Result<Frame, EngineError> {
        let d = self.types();
        let mut broods = Vec::with_capacity(frame.len() * d);
        let mut size = 0usize;
        for &t in &frame.types {
            for sampler in &self.samplers[t as usize] {
                let c = sampler.sample(rng) as usize;
                broods.push(c);
                size = size.saturating_add(c);
            }
        }
        if size > cap {
            return Err(EngineError::PopulationCapExceeded { generation, size, cap });
        }
        let tails: &[TailSpec] = self.spec.tails();
        let mut next = Frame {
            positions: Vec::with_capacity(size),
            displacements: Vec::with_capacity(size),
            types: Vec::with_capacity(size),
            parents: Vec::with_capacity(size),
        };
        let mut slot = 0;
        for (p, &x) in frame.positions.iter().enumerate() {
            for (j, tail) in tails.iter().enumerate() {
                for _ in 0..broods[slot] {
                    let step = tail.sample(rng);
                    next.positions.push(x + step);
                    next.displacements.push(step);
                    next.types.push(j as u32);
                    next.parents.push(p as u32);
                }
                slot += 1;
            }
        }
        Ok(next)
    }

    /// Run one trial to generation `opts.n`.
    pub fn run_trial<R: rand::Rng + ?Sized>(
        &self,
        index: u64,
        opts: &TrialOptions,
        rng: &mut R,
    ) -> Result<TrialResult, EngineError> {
        let d = self.types();
        let n = opts.n;
        let mut frame = self.initial_frame();
        // per particle, per type: largest displacement on its line
        let mut line_max = vec![f64::NEG_INFINITY; d];
        let mut all_max = vec![f64::NEG_INFINITY; d];
        let mut counts = Vec::with_capacity(n + 1);
        let mut rightmost_by_generation = Vec::with_capacity(n + 1);
        let mut retained = Vec::new();
        let mut extinct_at = None;
        counts.push(frame.counts(d));
        rightmost_by_generation.push(frame.rightmost());
        if opts.track_ancestry {
            retained.push(frame.lineage());
        }
        for k in 1..=n {
            if frame.is_empty() {
                counts.push(vec![0; d]);
                rightmost_by_generation.push(None);
                continue;
            }
            let next = self.step_generation(&frame, k, opts.cap, rng)?;
            let mut next_max = Vec::with_capacity(next.len() * d);
            for c in 0..next.len() {
                let parent = next.parents[c] as usize;
                let t = next.types[c] as usize;
                next_max.extend_from_slice(&line_max[parent * d..(parent + 1) * d]);
                let slot = &mut next_max[c * d + t];
                *slot = slot.max(next.displacements[c]);
                all_max[t] = all_max[t].max(next.displacements[c]);
            }
            line_max = next_max;
            frame = next;
            if frame.is_empty() && extinct_at.is_none() {
                extinct_at = Some(k);
            }
            counts.push(frame.counts(d));
            rightmost_by_generation.push(frame.rightmost());
            if opts.track_ancestry {
                retained.push(frame.lineage());
            }
        }
        let mut max_displacement = vec![None; d];
        for c in 0..frame.len() {
            for t in 0..d {
                let m = line_max[c * d + t];
                if m > f64::NEG_INFINITY {
                    max_displacement[t] = Some(max_displacement[t].map_or(m, |x: f64| x.max(m)));
                }
            }
        }
        let ancestors = opts.track_ancestry.then(|| {
            if extinct_at.is_some() {
                vec![0; d]
            } else {
                ancestors_with_descendants(&retained, d)
            }
        });
        let w_hat = opts.w_mode.as_ref().map(|mode| mode.estimate(&counts[n], n));
        Ok(TrialResult {
            index,
            n,
            rightmost: frame.rightmost(),
            rightmost_by_generation,
            max_displacement,
            max_displacement_all: all_max
                .into_iter()
                .map(|m| (m > f64::NEG_INFINITY).then_some(m))
                .collect(),
            counts,
            ancestors,
            w_hat,
            extinct_at,
            capped: false,
        })
    }

    /// Type counts only, for `generations` steps from one particle of type
    /// `start`. Populations beyond 10^15 continue by their means.
    pub fn run_counts<R: rand::Rng + ?Sized>(&self, start: usize, generations: usize, rng: &mut R) -> Vec<Vec<u64>> {
        let d = self.types();
        let mut z = vec![0u64; d];
        z[start] = 1;
        let mut out = Vec::with_capacity(generations + 1);
        out.push(z.clone());
        for _ in 0..generations {
            let mut next = vec![0u64; d];
            let huge = z.iter().any(|&c| c > EXACT_COUNT_LIMIT);
            for (i, &zi) in z.iter().enumerate() {
                if zi == 0 {
                    continue;
                }
                for (j, slot) in next.iter_mut().enumerate() {
                    let law = self.spec.offspring(i, j);
                    let add = if huge {
                        (zi as f64 * law.mean()).round() as u64
                    } else {
                        self.samplers[i][j].sample_sum(zi, rng)
                    };
                    *slot = slot.saturating_add(add);
                }
            }
            z = next;
            out.push(z.clone());
        }
        out
    }
}

/// Trials `0..trials` with their accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBatch {
    pub results: Vec<TrialResult>,
    pub extinct: usize,
    pub capped: usize,
}

impl TrialBatch {
    /// Trials that reached generation `n` alive and uncapped.
    pub fn surviving(&self) -> impl Iterator<Item = &TrialResult> {
        self.results.iter().filter(|t| !t.capped && !t.is_extinct())
    }

    /// More than 0.1% of trials hit the cap.
    pub fn cap_bias(&self) -> bool {
        self.capped * 1000 > self.results.len()
    }
}

/// Run trials `0..trials` in parallel; trial `t` uses stream `(seed, Trial, t)`.
pub fn run_trials(sim: &Simulator, opts: &TrialOptions, trials: usize, seed: u64) -> TrialBatch {
    let results: Vec<TrialResult> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, Domain::Trial, t);
            match sim.run_trial(t, opts, &mut rng) {
                Ok(r) => r,
                Err(EngineError::PopulationCapExceeded { .. }) => TrialResult::capped(t, opts.n),
                Err(e) => panic!("validated simulator failed: {e}"),
            }
        })
        .collect();
    let extinct = results.iter().filter(|t| t.is_extinct()).count();
    let capped = results.iter().filter(|t| t.capped).count();
    TrialBatch {
        results,
        extinct,
        capped,
    }
}

/// Count trajectories `0..trials` from type `start` on the given domain.
pub fn run_count_trials(
    sim: &Simulator,
    start: usize,
    generations: usize,
    trials: usize,
    seed: u64,
    domain: Domain,
) -> Vec<Vec<Vec<u64>>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, domain, t);
            sim.run_counts(start, generations, &mut rng)
        })
        .collect()
}
