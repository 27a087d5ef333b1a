use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::recurrence::BallParams;
use crate::systems::{OrbitBuffer, SymbolicWord};

/// Enumeration budget for exhaustive cylinder covers: k^positions <= 2^24.
const MAX_ENUM_BITS: u32 = 24;

/// Parameters of the covering bound: a ball around a point visiting the
/// partition-boundary neighborhood fewer than gamma*n times is covered by
/// binomial(n, ceil(gamma n)) * (#Q)^(ceil(gamma n)) cylinders.
#[derive(Clone, Copy, Debug)]
pub struct CoverLemmaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
    pub partition_size: usize,
}

impl CoverLemmaParams {
    pub fn new(alpha: f64, gamma: f64, eps: f64, partition_size: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Parameter(format!("gamma must lie in (0,1), got {gamma}")));
        }
        Ok(Self {
            alpha,
            gamma,
            eps,
            partition_size,
        })
    }

    /// binomial(n, ceil(gamma n)) * (#Q)^(ceil(gamma n)), as a float.
    pub fn bound(&self, n: usize) -> f64 {
        let j = (self.gamma * n as f64).ceil() as u64;
        let mut b = 1.0f64;
        for i in 0..j {
            b *= (n as u64 - i) as f64 / (i + 1) as f64;
        }
        b * (self.partition_size as f64).powi(j as i32)
    }
}

/// A test partition of a k-symbol shift whose cells are determined by a
/// block of consecutive symbols: cell of y is class_of[code(y_0..y_{b-1})].
#[derive(Clone, Debug)]
pub struct TestPartition {
    alphabet: u16,
    block_len: usize,
    /// Class per block word, indexed by the base-k code with y_0 most
    /// significant. Length alphabet^block_len.
    class_of: Vec<u16>,
}

impl TestPartition {
    pub fn new(alphabet: u16, block_len: usize, class_of: Vec<u16>) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::Parameter("block length must be positive".into()));
        }
        let expect = (alphabet as usize)
            .checked_pow(block_len as u32)
            .ok_or_else(|| Error::SizeLimit("block space overflows".into()))?;
        if class_of.len() != expect {
            return Err(Error::Parameter(format!(
                "class table has {} entries, expected {expect}",
                class_of.len()
            )));
        }
        Ok(Self {
            alphabet,
            block_len,
            class_of,
        })
    }

    /// The tautological partition: one cell per symbol.
    pub fn canonical(alphabet: u16) -> Self {
        Self {
            alphabet,
            block_len: 1,
            class_of: (0..alphabet).collect(),
        }
    }

    /// Cells determined by grouping symbols into classes.
    pub fn grouped(alphabet: u16, class_of_symbol: Vec<u16>) -> Result<Self> {
        Self::new(alphabet, 1, class_of_symbol)
    }

    /// Cells determined by a block of `block_len` exact symbols.
    pub fn block(alphabet: u16, block_len: usize) -> Result<Self> {
        let size = (alphabet as usize)
            .checked_pow(block_len as u32)
            .filter(|&s| s <= u16::MAX as usize + 1)
            .ok_or_else(|| Error::SizeLimit("block partition too large".into()))?;
        Self::new(alphabet, block_len, (0..size as u32).map(|c| c as u16).collect())
    }

    pub fn num_classes(&self) -> usize {
        self.class_of.iter().map(|&c| c as usize + 1).max().unwrap_or(0)
    }

    fn class_at(&self, w: &[u8], j: usize) -> u16 {
        let mut code = 0usize;
        for t in 0..self.block_len {
            code = code * self.alphabet as usize + w[j + t] as usize;
        }
        self.class_of[code]
    }
}

/// Exact number of n-cylinders of the test partition that intersect the
/// dynamical ball B(x, n, eps) on the full shift, by exhaustive enumeration
/// of symbol words and the ultrametric ball test.
pub fn cylinder_cover_count(
    alphabet: u16,
    x_word: &SymbolicWord,
    p: &BallParams,
    partition: &TestPartition,
) -> Result<usize> {
    if partition.alphabet != alphabet || x_word.alphabet() != alphabet {
        return Err(Error::Incompatible("alphabet mismatch".into()));
    }
    let depth = OrbitBuffer::shift_agreement_depth(p.eps)?;
    // The ball constrains the first n-1+depth symbols; the class sequence
    // reads n-1+block_len of them.
    let fixed = if depth == 0 { 0 } else { p.n + depth - 1 };
    let total = fixed.max(p.n + partition.block_len - 1);
    if fixed > x_word.len() {
        return Err(Error::IndexOutOfRange(format!(
            "ball needs {fixed} symbols of the center, word has {}",
            x_word.len()
        )));
    }
    let bits = (total as f64 * (alphabet as f64).log2()).ceil() as u32;
    if bits > MAX_ENUM_BITS {
        return Err(Error::SizeLimit(format!(
            "enumeration of {alphabet}^{total} words exceeds the budget"
        )));
    }
    let k = alphabet as usize;
    let count = k.pow(total as u32);
    let xs = x_word.symbols();
    let mut seen: HashSet<Vec<u16>> = HashSet::new();
    let mut w = vec![0u8; total];
    for code in 0..count {
        let mut c = code;
        for slot in (0..total).rev() {
            w[slot] = (c % k) as u8;
            c /= k;
        }
        if w[..fixed] != xs[..fixed] {
            continue;
        }
        let classes: Vec<u16> = (0..p.n).map(|j| partition.class_at(&w, j)).collect();
        seen.insert(classes);
    }
    Ok(seen.len())
}

/// Greedy upper bound on N(n, eps, c): the minimum number of dynamical balls
/// centered at sample points needed to cover a fraction c of the samples.
/// Ties break toward the lowest sample index.
pub fn katok_ball_cover(samples: &[OrbitBuffer], p: &BallParams, c: f64) -> Result<usize> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Parameter(format!("mass must lie in (0,1), got {c}")));
    }
    let n_samples = samples.len();
    if n_samples == 0 {
        return Err(Error::InsufficientData("no samples to cover".into()));
    }
    for orb in samples {
        if orb.len() < p.n {
            return Err(Error::IndexOutOfRange(format!(
                "sample orbit of length {} shorter than ball depth {}",
                orb.len(),
                p.n
            )));
        }
    }
    // covers[i] = indices j with sample j inside B(center_i, n, eps).
    let mut covers: Vec<Vec<usize>> = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut cov = Vec::new();
        'next: for j in 0..n_samples {
            for t in 0..p.n {
                if !samples[i].cross_dist_lt(t, &samples[j], t, p.eps)? {
                    continue 'next;
                }
            }
            cov.push(j);
        }
        covers.push(cov);
    }
    let target = (c * n_samples as f64).ceil() as usize;
    let mut covered = vec![false; n_samples];
    let mut n_covered = 0usize;
    let mut balls = 0usize;
    while n_covered < target {
        let mut best = usize::MAX;
        let mut best_gain = 0usize;
        for i in 0..n_samples {
            let gain = covers[i].iter().filter(|&&j| !covered[j]).count();
            if gain > best_gain {
                best_gain = gain;
                best = i;
            }
        }
        if best == usize::MAX {
            return Err(Error::InsufficientData(
                "greedy cover stalled before reaching the target mass".into(),
            ));
        }
        for &j in &covers[best] {
            if !covered[j] {
                covered[j] = true;
                n_covered += 1;
            }
        }
        balls += 1;
    }
    Ok(balls)
}

/// Exact minimum number of n-cylinders needed to cover empirical mass c:
/// cylinders are disjoint, so take distinct prefixes by decreasing frequency
/// until the cumulative frequency reaches c.
pub fn katok_cylinder_count(itineraries: &[SymbolicWord], n: usize, c: f64) -> Result<usize> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Parameter(format!("mass must lie in (0,1), got {c}")));
    }
    if n == 0 {
        return Err(Error::Parameter("cylinder depth must be positive".into()));
    }
    if itineraries.is_empty() {
        return Err(Error::InsufficientData("no itineraries".into()));
    }
    let mut counts: HashMap<&[u8], u64> = HashMap::new();
    for w in itineraries {
        if w.len() < n {
            return Err(Error::IndexOutOfRange(format!(
                "itinerary of length {} shorter than depth {n}",
                w.len()
            )));
        }
        *counts.entry(&w.symbols()[..n]).or_insert(0) += 1;
    }
    let mut ranked: Vec<(&[u8], u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total = itineraries.len() as f64;
    let needed = c * total;
    let mut cum = 0u64;
    for (used, (_, cnt)) in ranked.iter().enumerate() {
        cum += cnt;
        if cum as f64 >= needed - 1e-9 {
            return Ok(used + 1);
        }
    }
    Ok(ranked.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Point, SystemSpec};

    #[test]
    fn canonical_partition_ball_is_one_cylinder() {
        let x = SymbolicWord::binary("0110101101").unwrap();
        let canon = TestPartition::canonical(2);
        for m in [0i32, 2] {
            let p = BallParams::new(5, 0.5f64.powi(m)).unwrap();
            assert_eq!(cylinder_cover_count(2, &x, &p, &canon).unwrap(), 1);
        }
    }

    #[test]
    fn lookahead_partition_splits_the_ball() {
        // Cells read two symbols, the ball at m=0 fixes only n of them, so
        // the last cell has one free symbol: exactly 2 cylinders.
        let x = SymbolicWord::binary("0110101101").unwrap();
        let block = TestPartition::block(2, 2).unwrap();
        let p = BallParams::new(4, 1.0).unwrap();
        assert_eq!(cylinder_cover_count(2, &x, &p, &block).unwrap(), 2);
    }

    #[test]
    fn grouped_partition_respects_cover_bound() {
        // 4-symbol shift, symbols grouped in pairs; the ball is a cylinder
        // of the fine partition so a single coarse cylinder covers it, and
        // the covering-lemma bound with one boundary visit dominates.
        let x = SymbolicWord::new(vec![0, 2, 1, 3, 0, 1, 2, 3], 4).unwrap();
        let grouped = TestPartition::grouped(4, vec![0, 0, 1, 1]).unwrap();
        let n = 5;
        let p = BallParams::new(n, 1.0).unwrap();
        let count = cylinder_cover_count(4, &x, &p, &grouped).unwrap();
        let lemma = CoverLemmaParams::new(0.5, 1.0 / n as f64, 1.0, 2).unwrap();
        assert!(count as f64 <= lemma.bound(n));
        assert_eq!(count, 1);
    }

    #[test]
    fn lemma_bound_values() {
        let p = CoverLemmaParams::new(0.5, 0.2, 0.1, 4).unwrap();
        // n=10: j=2, C(10,2)*4^2 = 45*16.
        assert!((p.bound(10) - 720.0).abs() < 1e-9);
    }

    #[test]
    fn katok_ball_cover_trivia() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 3).unwrap();
        let w = vec![0u8; 32];
        let identical: Vec<_> = (0..10)
            .map(|_| sys.orbit(&Point::Symbols(w.clone()), 16).unwrap())
            .collect();
        let p = BallParams::new(4, 0.25).unwrap();
        assert_eq!(katok_ball_cover(&identical, &p, 0.5).unwrap(), 1);
        assert_eq!(katok_ball_cover(&identical, &p, 0.99).unwrap(), 1);

        // n=1, radius above the diameter: one ball covers everything.
        let mixed: Vec<_> = sys
            .sample_typical(12, 32)
            .unwrap()
            .into_iter()
            .map(|pt| sys.orbit(&pt, 16).unwrap())
            .collect();
        let p_all = BallParams::new(1, 2.0).unwrap();
        assert_eq!(katok_ball_cover(&mixed, &p_all, 0.9).unwrap(), 1);
    }

    #[test]
    fn katok_ball_cover_cross_checks_cylinder_count() {
        // At eps = 1 dynamical balls are exactly n-cylinders, so the greedy
        // metric cover equals the exact cylinder cover.
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 11).unwrap();
        let pts = sys.sample_typical(400, 24).unwrap();
        let orbits: Vec<_> = pts.iter().map(|pt| sys.orbit(pt, 12).unwrap()).collect();
        let words: Vec<_> = pts
            .iter()
            .map(|pt| match pt {
                Point::Symbols(w) => SymbolicWord::new(w.clone(), 2).unwrap(),
                _ => unreachable!(),
            })
            .collect();
        for n in [2usize, 4, 6] {
            let p = BallParams::new(n, 1.0).unwrap();
            let metric = katok_ball_cover(&orbits, &p, 0.5).unwrap();
            let exact = katok_cylinder_count(&words, n, 0.5).unwrap();
            assert_eq!(metric, exact, "depth {n}");
        }
    }

    #[test]
    fn katok_cylinder_count_examples() {
        let shared: Vec<_> = (0..50)
            .map(|i| {
                let mut w = vec![1u8, 0, 1];
                w.push((i % 2) as u8);
                SymbolicWord::new(w, 2).unwrap()
            })
            .collect();
        assert_eq!(katok_cylinder_count(&shared, 3, 0.7).unwrap(), 1);

        // Hand-computed Bernoulli(0.9, 0.1) frequencies at n=2:
        // 11: 0.81, 10: 0.09, 01: 0.09, 00: 0.01.
        let mut words = Vec::new();
        let mut push = |sym: [u8; 2], count: usize| {
            for _ in 0..count {
                words.push(SymbolicWord::new(sym.to_vec(), 2).unwrap());
            }
        };
        push([1, 1], 81);
        push([1, 0], 9);
        push([0, 1], 9);
        push([0, 0], 1);
        assert_eq!(katok_cylinder_count(&words, 2, 0.82).unwrap(), 2);
        assert_eq!(katok_cylinder_count(&words, 2, 0.80).unwrap(), 1);
    }

    #[test]
    fn katok_cylinder_count_uniform() {
        // All 8 binary words of length 3 equally represented: c=0.5 needs 4.
        let mut words = Vec::new();
        for bits in 0..8u8 {
            for _ in 0..10 {
                let w = vec![bits >> 2 & 1, bits >> 1 & 1, bits & 1];
                words.push(SymbolicWord::new(w, 2).unwrap());
            }
        }
        assert_eq!(katok_cylinder_count(&words, 3, 0.5).unwrap(), 4);
    }

    #[test]
    fn mass_out_of_range_rejected() {
        let words = vec![SymbolicWord::binary("0101").unwrap()];
        assert!(katok_cylinder_count(&words, 2, 0.0).is_err());
        assert!(katok_cylinder_count(&words, 2, 1.0).is_err());
    }
}
