//! Structure and spectrum of the mean matrix.
//!
//! Types are grouped into communicating classes (strongly connected
//! components of the graph `i -> j` iff `M[i][j] > 0`). Classes are listed
//! in a topological order of the reachability relation, so permuting the
//! matrix class by class yields a block upper triangular form. Each diagonal
//! block carries its Perron root and eigenvectors, and every type gets the
//! largest root among the classes that precede it together with the
//! polynomial correction exponent of its expected population.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::tails::{SlowlySelector, TailSpec};

pub type Matrix = Vec<Vec<f64>>;

/// Relative tolerance under which two growth rates (or two speeds) are
/// treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

const MAX_POWER_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassError {
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("no comparable (class, type) pair")]
    NoComparablePair,
    #[error("type {0} has a tail from the wrong family for this analysis")]
    WrongTailFamily(usize),
    #[error("expected {expected} tails, got {got}")]
    TailCount { expected: usize, got: usize },
}

/// Communicating classes and their reachability order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condensation {
    /// Type indices per class, ascending; classes in topological order.
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
    /// `precedes[a][b]` iff class `a` reaches class `b` (reflexive).
    pub precedes: Vec<Vec<bool>>,
}

impl Condensation {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Type order that makes the matrix block upper triangular.
    pub fn permutation(&self) -> Vec<usize> {
        self.classes.iter().flatten().copied().collect()
    }

    pub fn permute(&self, m: &Matrix) -> Matrix {
        let perm = self.permutation();
        perm.iter()
            .map(|&i| perm.iter().map(|&j| m[i][j]).collect())
            .collect()
    }

    /// Diagonal block of class `a`.
    pub fn block(&self, m: &Matrix, a: usize) -> Matrix {
        let members = &self.classes[a];
        members
            .iter()
            .map(|&i| members.iter().map(|&j| m[i][j]).collect())
            .collect()
    }
}

fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        counter: usize,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        out: Vec<Vec<usize>>,
    }

    fn visit(v: usize, s: &mut State<'_>) {
        s.index[v] = Some(s.counter);
        s.low[v] = s.counter;
        s.counter += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for k in 0..s.adj[v].len() {
            let w = s.adj[v][k];
            match s.index[w] {
                None => {
                    visit(w, s);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }

    let n = adj.len();
    let mut state = State {
        adj,
        counter: 0,
        index: vec![None; n],
        low: vec![0; n],
        stack: Vec::new(),
        on_stack: vec![false; n],
        out: Vec::new(),
    };
    for v in 0..n {
        if state.index[v].is_none() {
            visit(v, &mut state);
        }
    }
    state.out
}

/// Communicating classes of a nonnegative matrix.
///
/// Among the valid topological orders the one that always takes the ready
/// class with the smallest type index is returned, so the result is
/// canonical.
pub fn condense(m: &Matrix) -> Condensation {
    let d = m.len();
    let adj: Vec<Vec<usize>> = (0..d)
        .map(|i| (0..d).filter(|&j| m[i][j] > 0.0).collect())
        .collect();
    let components = tarjan(&adj);
    let count = components.len();
    let mut comp_of = vec![0; d];
    for (c, members) in components.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }

    let mut succ = vec![Vec::new(); count];
    let mut indegree = vec![0usize; count];
    for i in 0..d {
        for &j in &adj[i] {
            let (a, b) = (comp_of[i], comp_of[j]);
            if a != b && !succ[a].contains(&b) {
                succ[a].push(b);
                indegree[b] += 1;
            }
        }
    }

    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..count)
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((components[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(count);
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for &b in &succ[c] {
            indegree[b] -= 1;
            if indegree[b] == 0 {
                ready.push(Reverse((components[b][0], b)));
            }
        }
    }
    debug_assert_eq!(order.len(), count);

    let mut rank = vec![0; count];
    for (pos, &c) in order.iter().enumerate() {
        rank[c] = pos;
    }
    let classes: Vec<Vec<usize>> = order.iter().map(|&c| components[c].clone()).collect();
    let class_of: Vec<usize> = (0..d).map(|i| rank[comp_of[i]]).collect();

    let mut precedes = vec![vec![false; count]; count];
    for a in (0..count).rev() {
        precedes[a][a] = true;
        for &b in &succ[order[a]] {
            let b = rank[b];
            for c in 0..count {
                if precedes[b][c] {
                    precedes[a][c] = true;
                }
            }
        }
    }

    Condensation {
        classes,
        class_of,
        precedes,
    }
}

/// Least `l <= l_max` with `M^l` entrywise positive, by boolean powers.
///
/// `None` means not primitive within `l_max` steps; `d^2 + 1` steps always
/// suffice.
pub fn is_primitive(m: &Matrix, l_max: usize) -> Option<usize> {
    let d = m.len();
    if d == 0 {
        return None;
    }
    let base: Vec<Vec<bool>> = m.iter().map(|row| row.iter().map(|&x| x > 0.0).collect()).collect();
    let mut power = base.clone();
    for l in 1..=l_max {
        if power.iter().all(|row| row.iter().all(|&b| b)) {
            return Some(l);
        }
        let next: Vec<Vec<bool>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).any(|k| power[i][k] && base[k][j]))
                    .collect()
            })
            .collect();
        power = next;
    }
    None
}

pub fn default_primitivity_bound(d: usize) -> usize {
    d * d + 1
}

/// Perron root with left and right eigenvectors, `u` summing to one and
/// `u . v = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perron {
    pub rho: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

fn max_entry(m: &Matrix) -> f64 {
    m.iter().flatten().copied().fold(0.0, f64::max)
}

/// Dominant eigenpair of `m + shift I` by power iteration.
fn power_iterate(m: &Matrix, shift: f64, transpose: bool) -> Result<(f64, Vec<f64>), ClassError> {
    let d = m.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|i| {
                let mut acc = shift * x[i];
                for k in 0..d {
                    acc += if transpose { m[k][i] } else { m[i][k] } * x[k];
                }
                acc
            })
            .collect()
    };
    let mut x = vec![1.0 / d as f64; d];
    let mut residual = f64::INFINITY;
    for iteration in 0..MAX_POWER_ITERATIONS {
        let y = apply(&x);
        let norm: f64 = y.iter().sum();
        let next: Vec<f64> = y.iter().map(|v| v / norm).collect();
        let lambda = norm; // x sums to one and everything is nonnegative
        let image = apply(&next);
        residual = image
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        let converged = residual <= 1e-14 * lambda;
        let stalled = iteration > 64
            && next
                .iter()
                .zip(&x)
                .all(|(a, b)| (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()));
        x = next;
        if converged || stalled {
            let image = apply(&x);
            let num: f64 = image.iter().zip(&x).map(|(a, b)| a * b).sum();
            let den: f64 = x.iter().map(|b| b * b).sum();
            return Ok((num / den, x));
        }
    }
    Err(ClassError::NonConvergence {
        iterations: MAX_POWER_ITERATIONS,
        residual,
    })
}

/// Perron data of an irreducible nonnegative block.
///
/// Power iteration runs on `block + s I` with `s` equal to the largest
/// entry: the shift makes the dominant root strictly dominant even for
/// periodic blocks such as `[[0, 2], [2, 0]]`. The eigenvalue is a Rayleigh
/// quotient with the shift removed afterwards. A zero `1 x 1` block returns
/// `rho = 0`.
pub fn perron(block: &Matrix) -> Result<Perron, ClassError> {
    let d = block.len();
    let shift = max_entry(block);
    if shift == 0.0 {
        return Ok(Perron {
            rho: 0.0,
            left: vec![1.0 / d as f64; d],
            right: vec![1.0; d],
        });
    }
    let (lambda_r, mut right) = power_iterate(block, shift, false)?;
    let (lambda_l, mut left) = power_iterate(block, shift, true)?;
    let rho = 0.5 * (lambda_r + lambda_l) - shift;

    let total: f64 = left.iter().sum();
    left.iter_mut().for_each(|u| *u /= total);
    let dot: f64 = left.iter().zip(&right).map(|(u, v)| u * v).sum();
    right.iter_mut().for_each(|v| *v /= dot);

    let residual = perron_residual(block, rho, &left, &right);
    if residual > 1e-10 * rho.max(f64::MIN_POSITIVE) {
        return Err(ClassError::NonConvergence {
            iterations: MAX_POWER_ITERATIONS,
            residual,
        });
    }
    Ok(Perron { rho, left, right })
}

/// `max(|M v - rho v|_inf, |u M - rho u|_inf)`.
pub fn perron_residual(m: &Matrix, rho: f64, left: &[f64], right: &[f64]) -> f64 {
    let d = m.len();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        let mv: f64 = (0..d).map(|k| m[i][k] * right[k]).sum();
        let um: f64 = (0..d).map(|k| left[k] * m[k][i]).sum();
        worst = worst.max((mv - rho * right[i]).abs() / right.iter().cloned().fold(0.0, f64::max));
        worst = worst.max((um - rho * left[i]).abs() / left.iter().cloned().fold(0.0, f64::max));
    }
    worst
}

/// Spectral data of one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSpectrum {
    pub rho: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Least power with an entrywise positive block, if any.
    pub primitive_power: Option<usize>,
}

impl ClassSpectrum {
    pub fn is_primitive(&self) -> bool {
        self.primitive_power.is_some()
    }
}

/// Full class analysis of a mean matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDecomposition {
    pub condensation: Condensation,
    pub spectra: Vec<ClassSpectrum>,
    /// Classes reachable from the initial type (all, when none was given).
    pub active: Vec<bool>,
    /// `rho_j = max { rho(a) : a precedes class(j) }` per type.
    pub rho_pre: Vec<f64>,
    /// Polynomial growth exponent `k_j` per type.
    pub growth: Vec<u32>,
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Condense `m`, attach Perron data per class, and derive `rho_j`, `k_j`.
pub fn analyze(m: &Matrix, initial_type: Option<usize>) -> Result<ClassDecomposition, ClassError> {
    let condensation = condense(m);
    let mut spectra = Vec::with_capacity(condensation.len());
    for a in 0..condensation.len() {
        let block = condensation.block(m, a);
        let p = perron(&block)?;
        let bound = default_primitivity_bound(block.len());
        spectra.push(ClassSpectrum {
            rho: p.rho,
            left: p.left,
            right: p.right,
            primitive_power: is_primitive(&block, bound),
        });
    }
    let active = match initial_type {
        Some(t) => {
            let root = condensation.class_of[t];
            (0..condensation.len()).map(|b| condensation.precedes[root][b]).collect()
        }
        None => vec![true; condensation.len()],
    };
    let mut decomposition = ClassDecomposition {
        condensation,
        spectra,
        active,
        rho_pre: Vec::new(),
        growth: Vec::new(),
    };
    let d = m.len();
    decomposition.rho_pre = (0..d).map(|j| decomposition.preceding_rate(j)).collect();
    decomposition.growth = (0..d).map(|j| growth_exponent(&decomposition, j)).collect();
    Ok(decomposition)
}

impl ClassDecomposition {
    pub fn class_count(&self) -> usize {
        self.condensation.len()
    }

    pub fn class_of(&self, j: usize) -> usize {
        self.condensation.class_of[j]
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.condensation.precedes[a][b]
    }

    /// Exactly one class is reachable from the initial type.
    pub fn is_irreducible(&self) -> bool {
        self.active.iter().filter(|&&a| a).count() == 1
    }

    /// Classes that count for type `j`: active ones preceding it.
    fn preceding_classes(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let target = self.class_of(j);
        let restrict = self.active[target];
        (0..self.class_count()).filter(move |&a| self.precedes(a, target) && (!restrict || self.active[a]))
    }

    fn preceding_rate(&self, j: usize) -> f64 {
        self.preceding_classes(j)
            .map(|a| self.spectra[a].rho)
            .fold(0.0, f64::max)
    }

    /// `rho(a)^{1 / min r_i}` over the types of class `a`: its spreading
    /// speed in isolation.
    pub fn isolated_speeds(&self, tails: &[TailSpec]) -> Vec<f64> {
        (0..self.class_count())
            .map(|a| {
                let r = self.condensation.classes[a]
                    .iter()
                    .map(|&i| tails[i].index())
                    .fold(f64::INFINITY, f64::min);
                self.spectra[a].rho.powf(1.0 / r)
            })
            .collect()
    }
}

/// Polynomial exponent `k_j` in `E Z_n^j ~ C n^{k_j} rho_j^n`.
///
/// Equal to the number of classes minus one on the longest chain
/// `a_1 < a_2 < ... < a_t <= class(j)` whose roots all equal `rho_j`.
pub fn growth_exponent(decomposition: &ClassDecomposition, j: usize) -> u32 {
    let rho_j = decomposition
        .preceding_classes(j)
        .map(|a| decomposition.spectra[a].rho)
        .fold(0.0, f64::max);
    if rho_j <= 0.0 {
        return 0;
    }
    let critical: Vec<usize> = decomposition
        .preceding_classes(j)
        .filter(|&a| same_rate(decomposition.spectra[a].rho, rho_j))
        .collect();
    // classes are topologically sorted, so a chain only ever moves forward
    let mut chain = vec![1u32; critical.len()];
    for (x, &a) in critical.iter().enumerate() {
        for (y, &b) in critical.iter().enumerate().take(x) {
            if decomposition.precedes(b, a) {
                chain[x] = chain[x].max(chain[y] + 1);
            }
        }
    }
    chain.into_iter().max().unwrap_or(1) - 1
}

/// The pair `(alpha, I)` maximizing `rho(alpha)^{1 / r_I}` over comparable
/// pairs `alpha <= class(I)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominantPair {
    /// Class index `alpha`.
    pub class: usize,
    /// Type index `I`.
    pub type_index: usize,
    pub rho: f64,
    pub r: f64,
    /// Growth exponent `k_I`.
    pub k: u32,
    /// `rho^{1/r}`, the exponential spreading speed.
    pub speed: f64,
    /// False when another pair ties within [`TIE_TOLERANCE`].
    pub unique: bool,
}

/// Dominant pair for regularly varying tails.
pub fn dominant_pair_heavy(
    decomposition: &ClassDecomposition,
    tails: &[TailSpec],
) -> Result<DominantPair, ClassError> {
    let d = decomposition.condensation.class_of.len();
    if tails.len() != d {
        return Err(ClassError::TailCount {
            expected: d,
            got: tails.len(),
        });
    }
    if let Some(j) = tails.iter().position(|t| !t.is_regularly_varying()) {
        return Err(ClassError::WrongTailFamily(j));
    }

    // (log speed, class, type)
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..d {
        if !decomposition.active[decomposition.class_of(i)] {
            continue;
        }
        for a in decomposition.preceding_classes(i) {
            let rho = decomposition.spectra[a].rho;
            let score = if rho > 0.0 {
                rho.ln() / tails[i].index()
            } else {
                f64::NEG_INFINITY
            };
            candidates.push((score, a, i));
        }
    }
    let &(best, class, type_index) = candidates
        .iter()
        .max_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)).then(y.2.cmp(&x.2)))
        .ok_or(ClassError::NoComparablePair)?;
    let ties = candidates
        .iter()
        .filter(|c| c.0 == best || (best.is_finite() && c.0.is_finite() && ((c.0 - best).exp() - 1.0).abs() <= TIE_TOLERANCE))
        .count();
    Ok(DominantPair {
        class,
        type_index,
        rho: decomposition.spectra[class].rho,
        r: tails[type_index].index(),
        k: decomposition.growth[type_index],
        speed: best.exp(),
        unique: ties == 1,
    })
}

/// Normalization data for semi-exponential tails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiExpDominant {
    /// Smallest tail index.
    pub r: f64,
    /// Types attaining `r`.
    pub attaining: Vec<usize>,
    /// Classes preceding some attaining type.
    pub preceding: Vec<usize>,
    /// Largest root over `preceding`.
    pub rho: f64,
    #[serde(skip)]
    pub selector: SlowlySelector,
}

impl SemiExpDominant {
    /// `(ln rho)^{1/r}`, the almost sure limit of `R_n / psi(n)`.
    pub fn target(&self) -> f64 {
        self.rho.ln().powf(1.0 / self.r)
    }
}

/// Smallest index, the types and classes behind it, and the driving root.
pub fn dominant_data_semiexp(
    decomposition: &ClassDecomposition,
    tails: &[TailSpec],
) -> Result<SemiExpDominant, ClassError> {
    let d = decomposition.condensation.class_of.len();
    if tails.len() != d {
        return Err(ClassError::TailCount {
            expected: d,
            got: tails.len(),
        });
    }
    if let Some(j) = tails.iter().position(|t| !t.is_semi_exponential()) {
        return Err(ClassError::WrongTailFamily(j));
    }
    let live: Vec<usize> = (0..d)
        .filter(|&j| decomposition.active[decomposition.class_of(j)])
        .collect();
    let r = live
        .iter()
        .map(|&j| tails[j].index())
        .fold(f64::INFINITY, f64::min);
    if !r.is_finite() {
        return Err(ClassError::NoComparablePair);
    }
    let attaining: Vec<usize> = live
        .iter()
        .copied()
        .filter(|&j| (tails[j].index() - r).abs() <= 1e-12 * r)
        .collect();
    let preceding: Vec<usize> = (0..decomposition.class_count())
        .filter(|&a| {
            decomposition.active[a]
                && attaining
                    .iter()
                    .any(|&j| decomposition.precedes(a, decomposition.class_of(j)))
        })
        .collect();
    let rho = preceding
        .iter()
        .map(|&a| decomposition.spectra[a].rho)
        .fold(0.0, f64::max);
    let selector = SlowlySelector::new(attaining.iter().map(|&j| tails[j].slowly()).collect());
    Ok(SemiExpDominant {
        r,
        attaining,
        preceding,
        rho,
        selector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn condense_examples() {
        assert_eq!(condense(&vec![vec![2.0]]).classes, vec![vec![0]]);
        assert_eq!(condense(&vec![vec![1.0, 1.0], vec![1.0, 1.0]]).classes, vec![vec![0, 1]]);
        let c = condense(&vec![vec![3.0, 1.0], vec![0.0, 1.5]]);
        assert_eq!(c.classes, vec![vec![0], vec![1]]);
        assert!(c.precedes[0][1]);
        assert!(!c.precedes[1][0]);
    }

    #[test]
    fn condense_reorders_to_upper_triangular() {
        // 2 -> 0 -> 1, written out of order
        let m = vec![
            vec![1.0, 2.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![3.0, 0.0, 2.0],
        ];
        let c = condense(&m);
        assert_eq!(c.classes, vec![vec![2], vec![0], vec![1]]);
        let p = c.permute(&m);
        for i in 0..3 {
            for j in 0..i {
                assert_eq!(p[i][j], 0.0);
            }
        }
    }

    #[test]
    fn perron_examples() {
        let p = perron(&vec![vec![2.0]]).unwrap();
        assert_eq!((p.rho, p.left.clone(), p.right.clone()), (2.0, vec![1.0], vec![1.0]));

        let m = vec![vec![1.0, 2.0], vec![3.0, 2.0]];
        let p = perron(&m).unwrap();
        assert!(close(p.rho, 4.0, 1e-12));
        // v proportional to (2, 3), u to (1, 1)
        assert!(close(p.right[1] / p.right[0], 1.5, 1e-12));
        assert!(close(p.left[1] / p.left[0], 1.0, 1e-12));
        let dot: f64 = p.left.iter().zip(&p.right).map(|(a, b)| a * b).sum();
        assert!((dot - 1.0).abs() <= 1e-12);
        assert!(perron_residual(&m, p.rho, &p.left, &p.right) <= 1e-10 * p.rho);

        let m = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let p = perron(&m).unwrap();
        assert!(close(p.rho, 2.0, 1e-12));
        assert!(close(p.right[0], p.right[1], 1e-12));
        assert!(close(p.left[0], p.left[1], 1e-12));
    }

    #[test]
    fn periodic_block_from_non_eigen_start() {
        // period 3 cycle with unequal weights
        let m = vec![
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 5.0],
            vec![0.7, 0.0, 0.0],
        ];
        let p = perron(&m).unwrap();
        assert!(close(p.rho, 7.0f64.cbrt(), 1e-12));
        assert!(p.left.iter().chain(&p.right).all(|&x| x > 0.0));
    }

    #[test]
    fn primitivity_examples() {
        assert_eq!(is_primitive(&vec![vec![1.0, 1.0], vec![1.0, 1.0]], 5), Some(1));
        assert_eq!(is_primitive(&vec![vec![0.0, 2.0], vec![2.0, 0.0]], 5), None);
        assert_eq!(is_primitive(&vec![vec![3.0, 1.0], vec![0.0, 1.5]], 5), None);
        // Wielandt's extremal matrix for d = 3 needs (d-1)^2 + 1 = 5 steps
        let w = vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        assert_eq!(is_primitive(&w, default_primitivity_bound(3)), Some(5));
    }

    #[test]
    fn growth_exponent_examples() {
        let single = analyze(&vec![vec![2.0]], Some(0)).unwrap();
        assert_eq!(growth_exponent(&single, 0), 0);
        let jordan = analyze(&vec![vec![2.0, 1.0], vec![0.0, 2.0]], Some(0)).unwrap();
        assert_eq!(jordan.growth, vec![0, 1]);
        let split = analyze(&vec![vec![3.0, 1.0], vec![0.0, 1.5]], Some(0)).unwrap();
        assert_eq!(split.growth, vec![0, 0]);
        assert_eq!(split.rho_pre, vec![3.0, 3.0]);
    }

    #[test]
    fn dominant_pair_examples() {
        let irreducible = analyze(&vec![vec![1.0, 1.0], vec![1.0, 1.0]], Some(0)).unwrap();
        let p = dominant_pair_heavy(&irreducible, &[TailSpec::pareto(1.0), TailSpec::pareto(3.0)]).unwrap();
        assert_eq!((p.class, p.type_index, p.unique), (0, 0, true));

        let m = vec![vec![3.0, 1.0], vec![0.0, 1.5]];
        let dec = analyze(&m, Some(0)).unwrap();
        let p = dominant_pair_heavy(&dec, &[TailSpec::pareto(3.0), TailSpec::pareto(1.0)]).unwrap();
        assert_eq!((p.class, p.type_index, p.k, p.unique), (0, 1, 0, true));
        assert!(close(p.rho, 3.0, 1e-12) && p.r == 1.0);
        let speeds = dec.isolated_speeds(&[TailSpec::pareto(3.0), TailSpec::pareto(1.0)]);
        assert!(p.speed > speeds[0] && p.speed > speeds[1]);

        let p = dominant_pair_heavy(&dec, &[TailSpec::pareto(1.0), TailSpec::pareto(3.0)]).unwrap();
        assert_eq!((p.class, p.type_index), (0, 0));
        assert!(close(p.rho, 3.0, 1e-12) && p.r == 1.0);

        let tie = dominant_pair_heavy(&irreducible, &[TailSpec::pareto(2.0), TailSpec::pareto(2.0)]).unwrap();
        assert!(!tie.unique);
    }

    #[test]
    fn semiexp_examples() {
        let single = analyze(&vec![vec![2.0]], Some(0)).unwrap();
        let s = dominant_data_semiexp(&single, &[TailSpec::stretched_exponential(0.5)]).unwrap();
        assert_eq!((s.r, s.rho), (0.5, 2.0));
        assert_eq!(s.selector.eval(123.0), 1.0);

        let dec = analyze(&vec![vec![3.0, 1.0], vec![0.0, 1.5]], Some(0)).unwrap();
        let both = [TailSpec::stretched_exponential(0.5), TailSpec::stretched_exponential(0.5)];
        let s = dominant_data_semiexp(&dec, &both).unwrap();
        assert_eq!((s.attaining.clone(), s.preceding.clone()), (vec![0, 1], vec![0, 1]));
        assert!(close(s.rho, 3.0, 1e-12));

        let second = [TailSpec::stretched_exponential(0.9), TailSpec::stretched_exponential(0.5)];
        let s = dominant_data_semiexp(&dec, &second).unwrap();
        assert_eq!((s.attaining.clone(), s.preceding.clone()), (vec![1], vec![0, 1]));
        assert!(close(s.rho, 3.0, 1e-12));

        // heavier tail in the first class: the second class is irrelevant
        let dec = analyze(&vec![vec![1.5, 1.0], vec![0.0, 3.0]], Some(0)).unwrap();
        let first = [TailSpec::stretched_exponential(0.3), TailSpec::stretched_exponential(0.6)];
        let s = dominant_data_semiexp(&dec, &first).unwrap();
        assert_eq!(s.preceding, vec![0]);
        assert!(close(s.rho, 1.5, 1e-12));
    }

    #[test]
    fn unreachable_classes_are_inactive() {
        // type 1 feeds type 0, but the process starts at type 0
        let m = vec![vec![2.0, 0.0], vec![1.0, 5.0]];
        let dec = analyze(&m, Some(0)).unwrap();
        assert_eq!(dec.condensation.classes, vec![vec![1], vec![0]]);
        assert_eq!(dec.active, vec![false, true]);
        assert_eq!(dec.rho_pre[0], 2.0);
        let p = dominant_pair_heavy(&dec, &[TailSpec::pareto(2.0), TailSpec::pareto(0.5)]).unwrap();
        assert_eq!(p.type_index, 0);
    }

    /// Random block upper triangular matrix with `classes` diagonal blocks.
    fn random_layered(classes: usize, seed: &[f64]) -> (Matrix, Vec<TailSpec>) {
        let mut it = seed.iter().copied().cycle();
        let sizes: Vec<usize> = (0..classes).map(|_| 1 + (it.next().unwrap() * 2.0) as usize).collect();
        let d: usize = sizes.iter().sum();
        let mut m = vec![vec![0.0; d]; d];
        let mut start = 0;
        let mut starts = Vec::new();
        for &s in &sizes {
            starts.push(start);
            for i in start..start + s {
                for j in start..start + s {
                    m[i][j] = 0.2 + 2.0 * it.next().unwrap();
                }
            }
            start += s;
        }
        for a in 1..classes {
            // link from some earlier class keeps everything reachable from type 0
            let from = starts[(it.next().unwrap() * a as f64) as usize % a];
            m[from][starts[a]] = 0.5 + it.next().unwrap();
        }
        let tails = (0..d).map(|_| TailSpec::pareto(0.5 + 3.0 * it.next().unwrap())).collect();
        (m, tails)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn dominant_pair_matches_brute_force(seed in prop::collection::vec(0.0f64..1.0, 40)) {
            let (m, tails) = random_layered(5, &seed);
            let dec = analyze(&m, Some(0)).unwrap();
            let pair = dominant_pair_heavy(&dec, &tails).unwrap();
            // brute force over type pairs i <= j through matrix powers
            let d = m.len();
            let reach = {
                let mut r: Vec<Vec<bool>> = (0..d).map(|i| (0..d).map(|j| i == j || m[i][j] > 0.0).collect()).collect();
                for k in 0..d { for i in 0..d { for j in 0..d { if r[i][k] && r[k][j] { r[i][j] = true; } } } }
                r
            };
            let mut best: f64 = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if reach[i][j] {
                        let rho = dec.spectra[dec.class_of(i)].rho;
                        best = best.max(rho.powf(1.0 / tails[j].index()));
                    }
                }
            }
            prop_assert!((pair.speed - best).abs() <= 1e-9 * best);
        }

        #[test]
        fn block_spectrum_matches_full_matrix(seed in prop::collection::vec(0.0f64..1.0, 40)) {
            let (m, _) = random_layered(4, &seed);
            let dec = analyze(&m, Some(0)).unwrap();
            let max_block = dec.spectra.iter().map(|s| s.rho).fold(0.0, f64::max);
            // lambda I - M has only positive pivots exactly when lambda > rho(M)
            let above = |lambda: f64| {
                let d = m.len();
                let mut a: Vec<Vec<f64>> = (0..d)
                    .map(|i| (0..d).map(|j| if i == j { lambda - m[i][j] } else { -m[i][j] }).collect())
                    .collect();
                for p in 0..d {
                    if a[p][p] <= 0.0 {
                        return false;
                    }
                    for i in p + 1..d {
                        let f = a[i][p] / a[p][p];
                        for j in p..d {
                            a[i][j] -= f * a[p][j];
                        }
                    }
                }
                true
            };
            let (mut lo, mut hi) = (0.0, 1.0 + m.iter().flatten().sum::<f64>());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if above(mid) { hi = mid } else { lo = mid }
            }
            prop_assert!((hi - max_block).abs() <= 1e-8 * max_block, "{} vs {}", hi, max_block);
        }

        #[test]
        fn condense_is_idempotent(seed in prop::collection::vec(0.0f64..1.0, 40)) {
            let (m, _) = random_layered(4, &seed);
            let c = condense(&m);
            let p = c.permute(&m);
            let again = condense(&p);
            let d = m.len();
            prop_assert_eq!(again.permutation(), (0..d).collect::<Vec<_>>());
            for a in 0..c.len() {
                for b in 0..a {
                    for &i in &again.classes[a] {
                        for &j in &again.classes[b] {
                            prop_assert_eq!(p[i][j], 0.0);
                        }
                    }
                }
            }
        }
    }
}
