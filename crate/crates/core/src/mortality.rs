//! Bounded search for zero products over a finite set of integer matrices.
//!
//! Whether some product of the matrices is zero is undecidable in general,
//! so the search is a semi-decision: breadth-first by word length up to a
//! bound, with two cheap certificates of the negative answer (every
//! determinant nonzero, or the set of reachable products closing up).

use std::collections::HashSet;

use num::Zero;
use thiserror::Error;

use crate::exec::Exec;
use crate::gadget::{embed_3x3, svd_embed, GadgetError, IntegerMatrix};
use crate::physicality::{GateLibrary, PhysicalityError};
use crate::tensor::Tensor;

pub const DEFAULT_MAX_LEN: usize = 12;
pub const DEFAULT_MEMO_CAP: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum MortalityError {
    #[error("a mortality instance needs at least one matrix")]
    Empty,
    #[error("matrix {index} is {rows}x{cols}; all matrices must be square of size {dim}")]
    Shape { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("max_len must be at least 1")]
    ZeroBound,
    #[error("matrix index {index} out of range for {len} matrices")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Library(#[from] PhysicalityError),
}

/// Square integer matrices of one size plus a word-length bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MortalityInstance {
    matrices: Vec<IntegerMatrix>,
    max_len: usize,
}

impl MortalityInstance {
    pub fn new(matrices: Vec<IntegerMatrix>, max_len: usize) -> Result<Self, MortalityError> {
        let first = matrices.first().ok_or(MortalityError::Empty)?;
        let dim = first.rows();
        for (index, m) in matrices.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(MortalityError::Shape { index, rows: m.rows(), cols: m.cols(), dim });
            }
        }
        if max_len == 0 {
            return Err(MortalityError::ZeroBound);
        }
        Ok(MortalityInstance { matrices, max_len })
    }

    pub fn matrices(&self) -> &[IntegerMatrix] {
        &self.matrices
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }
}

/// Product `M[w0] M[w1] ...` (0-based indices); the identity for the empty word.
pub fn product(inst: &MortalityInstance, word: &[usize]) -> Result<IntegerMatrix, MortalityError> {
    let mut acc = IntegerMatrix::identity(inst.dim());
    for &i in word {
        let m = inst.matrices.get(i).ok_or(MortalityError::IndexOutOfRange { index: i, len: inst.matrices.len() })?;
        acc = acc.mul(m);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    /// Shortest zero word, lexicographically least among the shortest.
    Found(Vec<usize>),
    /// Every matrix is invertible, so no product can vanish.
    ImmortalByDeterminant,
    /// Every product reachable was seen at a shorter length and none is zero:
    /// the generated semigroup is finite and zero-free.
    Exhausted { len: usize },
    /// No zero word up to the bound.
    NotFoundWithin(usize),
}

impl SearchOutcome {
    pub fn word(&self) -> Option<&[usize]> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Products formed (one per extended word).
    pub products: usize,
    /// Distinct products remembered.
    pub distinct: usize,
    /// Deepest length explored.
    pub depth: usize,
    /// Whether the memo hit its cap and stopped growing.
    pub memo_saturated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub exec: Exec,
    pub memo_cap: usize,
    pub use_determinant: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { exec: Exec::default(), memo_cap: DEFAULT_MEMO_CAP, use_determinant: true }
    }
}

pub fn search_zero_word(inst: &MortalityInstance) -> SearchOutcome {
    search_zero_word_with(inst, SearchOptions::default()).0
}

/// Breadth-first search by length. Each level is extended in lexicographic
/// order and a product already seen (at this or a shorter length) is
/// dropped, so the first zero met is the shortest, lexicographically least
/// zero word. Extension of a level may run in parallel; deduplication and the
/// verdict are sequential, so the result does not depend on scheduling.
pub fn search_zero_word_with(inst: &MortalityInstance, opts: SearchOptions) -> (SearchOutcome, SearchStats) {
    let mut stats = SearchStats::default();
    if opts.use_determinant && inst.matrices.iter().all(|m| !m.det().is_some_and(|d| d.is_zero())) {
        return (SearchOutcome::ImmortalByDeterminant, stats);
    }
    let n = inst.matrices.len();
    let identity = IntegerMatrix::identity(inst.dim());
    let mut memo: HashSet<IntegerMatrix> = HashSet::new();
    memo.insert(identity.clone());
    let mut frontier: Vec<(Vec<usize>, IntegerMatrix)> = vec![(Vec::new(), identity)];

    for len in 1..=inst.max_len {
        stats.depth = len;
        let candidates: Vec<IntegerMatrix> =
            opts.exec.map_range(frontier.len() * n, |k| frontier[k / n].1.mul(&inst.matrices[k % n]));
        stats.products += candidates.len();
        let mut next = Vec::new();
        for (k, prod) in candidates.into_iter().enumerate() {
            let (prefix, _) = &frontier[k / n];
            if prod.is_zero() {
                let mut w = prefix.clone();
                w.push(k % n);
                stats.distinct = memo.len();
                return (SearchOutcome::Found(w), stats);
            }
            if memo.contains(&prod) {
                continue;
            }
            if memo.len() < opts.memo_cap {
                memo.insert(prod.clone());
            } else if !stats.memo_saturated {
                stats.memo_saturated = true;
                log::warn!("memo cap of {} products reached; continuing without further deduplication", opts.memo_cap);
            }
            let mut w = prefix.clone();
            w.push(k % n);
            next.push((w, prod));
        }
        stats.distinct = memo.len();
        if next.is_empty() {
            return (SearchOutcome::Exhausted { len }, stats);
        }
        frontier = next;
    }
    (SearchOutcome::NotFoundWithin(inst.max_len), stats)
}

/// The integer matrix each library gate realises: the 3x3 embedding for
/// 3x3 inputs, the matrix itself otherwise.
pub fn working_matrix(m: &IntegerMatrix) -> Result<IntegerMatrix, MortalityError> {
    if m.rows() == 3 {
        Ok(embed_3x3(m)?)
    } else {
        Ok(m.clone())
    }
}

/// One postselected gadget gate per matrix. 3x3 matrices are first embedded
/// in two qubits; other sizes are padded to the enclosing qubit space.
/// Chaining a word contracts to the product of the embedded matrices divided
/// by the product of their squared Frobenius norms.
pub fn to_physicality_instance(inst: &MortalityInstance) -> Result<GateLibrary, MortalityError> {
    let mut gates = Vec::with_capacity(inst.matrices.len());
    for (i, m) in inst.matrices.iter().enumerate() {
        let g = svd_embed(&working_matrix(m)?)?;
        gates.push(g.as_gate(format!("m{}", i + 1))?);
    }
    Ok(GateLibrary::new(gates)?)
}

/// Largest modulus in the top-left `k x k` block of an operator tensor whose
/// legs are outputs then inputs.
pub fn working_block_max(t: &Tensor, k: usize) -> f64 {
    let (rows, cols) = t.matrix_dims(t.rank() / 2);
    let mut worst = 0.0f64;
    for i in 0..k.min(rows) {
        for j in 0..k.min(cols) {
            worst = worst.max(t.get_flat(i * cols + j).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadget::matrix_a;
    use crate::physicality::chain_word;

    fn inst(ms: &[&[i64]], n: usize, max_len: usize) -> MortalityInstance {
        MortalityInstance::new(ms.iter().map(|m| IntegerMatrix::from_i64(n, n, m)).collect(), max_len).unwrap()
    }

    #[test]
    fn products() {
        let i = inst(&[&[1, 0, 0, 0], &[0, 0, 0, 1]], 2, 4);
        assert_eq!(product(&i, &[0]).unwrap(), i.matrices()[0]);
        assert!(product(&i, &[0, 1]).unwrap().is_zero());
        assert_eq!(product(&i, &[]).unwrap(), IntegerMatrix::identity(2));
        assert!(product(&i, &[5]).is_err());
        let a = MortalityInstance::new(vec![matrix_a()], 3).unwrap();
        assert_eq!(product(&a, &[0, 0]).unwrap(), matrix_a());
    }

    #[test]
    fn search_examples() {
        let proj = inst(&[&[1, 0, 0, 0], &[0, 0, 0, 1]], 2, 5);
        assert_eq!(search_zero_word(&proj), SearchOutcome::Found(vec![0, 1]));
        let id = inst(&[&[1, 0, 0, 1]], 2, 8);
        assert_eq!(search_zero_word(&id), SearchOutcome::ImmortalByDeterminant);
        let opts = SearchOptions { use_determinant: false, ..Default::default() };
        assert_eq!(search_zero_word_with(&id, opts).0, SearchOutcome::Exhausted { len: 1 });
        let nil = inst(&[&[0, 1, 0, 0]], 2, 4);
        assert_eq!(search_zero_word(&nil), SearchOutcome::Found(vec![0, 0]));
        let a = MortalityInstance::new(vec![matrix_a()], 6).unwrap();
        assert_eq!(search_zero_word(&a), SearchOutcome::Exhausted { len: 2 });
        let grow = inst(&[&[2, 0, 0, 0]], 2, 5);
        assert_eq!(search_zero_word(&grow), SearchOutcome::NotFoundWithin(5));
    }

    #[test]
    fn modes_and_memo_cap_agree() {
        let i = inst(&[&[1, 1, 0, 1], &[0, 0, 1, 0], &[1, 0, 1, 0]], 2, 6);
        let seq = search_zero_word_with(&i, SearchOptions { exec: Exec::Sequential, ..Default::default() }).0;
        let par = search_zero_word_with(&i, SearchOptions { exec: Exec::Parallel, ..Default::default() }).0;
        let tiny = search_zero_word_with(&i, SearchOptions { memo_cap: 2, ..Default::default() });
        assert_eq!(seq, par);
        assert_eq!(seq, tiny.0);
        assert!(tiny.1.memo_saturated);
    }

    #[test]
    fn zero_word_vanishes_in_the_gadget_chain() {
        let i = inst(&[&[1, 0, 0, 0, 0, 0, 0, 0, 0], &[0, 0, 0, 0, 1, 0, 0, 0, 0]], 3, 4);
        let SearchOutcome::Found(w) = search_zero_word(&i) else { panic!("expected a zero word") };
        let lib = to_physicality_instance(&i).unwrap();
        let t = chain_word(&lib, &w).unwrap().contract(None).unwrap();
        assert!(working_block_max(&t, 3) < 1e-9);
        // the padded corner survives
        assert!(working_block_max(&t, 4) > 1e-3);
    }
}
