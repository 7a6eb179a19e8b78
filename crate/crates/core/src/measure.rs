//! Boundary measures given as Markov chains on windows of `m` letters.
//!
//! Both reference measures used downstream fit this shape: the uniform
//! (Hausdorff) measure, where every step is equally likely, and the Gibbs
//! measure of a depth-`m` potential, whose transitions come from Perron data.

use serde::{Deserialize, Serialize};

use crate::tree::CylinderIndexer;
use crate::word::{Alphabet, Letter, ReducedWord};

/// Which boundary measure a certificate or integral refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureId {
    /// Uniform measure, every depth-`n` cylinder of mass `1/(2k(2k−1)^{n−1})`.
    Hausdorff,
    /// Gibbs measure of the normalized target potential.
    Gibbs,
}

impl std::fmt::Display for MeasureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasureId::Hausdorff => "hausdorff",
            MeasureId::Gibbs => "gibbs",
        })
    }
}

/// `succ[w][j]` is the window reached from window `w` by appending the `j`-th
/// legal letter (in letter order) and dropping the first.
pub fn window_successors(alphabet: &Alphabet, depth: usize) -> Vec<Vec<usize>> {
    let ix = CylinderIndexer::new(*alphabet, depth);
    (0..ix.len())
        .map(|i| {
            let w = ix.word(i);
            alphabet
                .successors(w.last().copied())
                .map(|t| {
                    let mut next = w[1..].to_vec();
                    next.push(t);
                    ix.index(&next)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovMeasure {
    id: MeasureId,
    alphabet: Alphabet,
    depth: usize,
    /// Masses of the depth-`m` cylinders.
    initial: Vec<f64>,
    /// `trans[w][j]`: probability of the `j`-th successor of window `w`.
    trans: Vec<Vec<f64>>,
    succ: Vec<Vec<usize>>,
}

impl MarkovMeasure {
    pub fn new(id: MeasureId, alphabet: Alphabet, depth: usize, initial: Vec<f64>, trans: Vec<Vec<f64>>) -> Self {
        let succ = window_successors(&alphabet, depth);
        debug_assert_eq!(initial.len(), succ.len());
        MarkovMeasure { id, alphabet, depth, initial, trans, succ }
    }

    pub fn uniform(alphabet: Alphabet, depth: usize) -> Self {
        let n = alphabet.count_words(depth);
        let b = alphabet.branching();
        MarkovMeasure::new(
            MeasureId::Hausdorff,
            alphabet,
            depth,
            vec![1.0 / n as f64; n],
            vec![vec![1.0 / b as f64; b]; n],
        )
    }

    pub fn id(&self) -> MeasureId {
        self.id
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.trans
    }

    pub fn successors(&self) -> &[Vec<usize>] {
        &self.succ
    }

    pub fn indexer(&self) -> CylinderIndexer {
        CylinderIndexer::new(self.alphabet, self.depth)
    }

    /// Mass of the cylinder `[w]` seen from the identity; the whole boundary
    /// for the empty word.
    pub fn mass(&self, w: &[Letter]) -> f64 {
        let m = self.depth;
        if w.is_empty() {
            return 1.0;
        }
        let ix = self.indexer();
        if w.len() < m {
            return self.initial[ix.block(w)].iter().sum();
        }
        let mut state = ix.index(w);
        let mut p = self.initial[state];
        for i in m..w.len() {
            let j = choice(w[i - 1], w[i]);
            p *= self.trans[state][j];
            state = self.succ[state][j];
        }
        p
    }

    /// Mass of `[w]` under the measure seen from `q`, i.e. of `q⁻¹[w]` from
    /// the identity.
    pub fn mass_from(&self, q: &ReducedWord, w: &[Letter]) -> f64 {
        if w.is_empty() {
            return 1.0;
        }
        let ql = q.letters();
        let c = crate::word::common_prefix(ql, w);
        if c < w.len() {
            // q⁻¹w is reduced past the branch point and ends with the last letter of w
            let mut u: Vec<Letter> = ql[c..].iter().rev().map(|l| l.inverse()).collect();
            u.extend_from_slice(&w[c..]);
            return self.mass(&u);
        }
        // q = w q': the translate is the complement of q'⁻¹[w_last⁻¹]
        let mut u: Vec<Letter> = ql[w.len()..].iter().rev().map(|l| l.inverse()).collect();
        u.push(w[w.len() - 1].inverse());
        1.0 - self.mass(&u)
    }

    /// Masses of all depth-`n` cylinders in [`CylinderIndexer`] order.
    pub fn masses(&self, n: usize) -> Vec<f64> {
        let m = self.depth;
        let ix_m = self.indexer();
        if n < m {
            let ix = CylinderIndexer::new(self.alphabet, n);
            return (0..ix.len()).map(|i| self.initial[ix_m.block(&ix.word(i))].iter().sum()).collect();
        }
        let b = self.alphabet.branching();
        let mut mass = self.initial.clone();
        let mut state: Vec<usize> = (0..mass.len()).collect();
        for _ in m..n {
            let mut next_mass = Vec::with_capacity(mass.len() * b);
            let mut next_state = Vec::with_capacity(mass.len() * b);
            for (p, &w) in mass.iter().zip(&state) {
                for j in 0..b {
                    next_mass.push(p * self.trans[w][j]);
                    next_state.push(self.succ[w][j]);
                }
            }
            mass = next_mass;
            state = next_state;
        }
        mass
    }

    /// Window index of each depth-`n` cylinder (its last `m` letters), for `n ≥ m`.
    pub fn window_of(&self, n: usize) -> Vec<usize> {
        let m = self.depth;
        assert!(n >= m);
        let b = self.alphabet.branching();
        let mut state: Vec<usize> = (0..self.initial.len()).collect();
        for _ in m..n {
            state = state.iter().flat_map(|&w| (0..b).map(move |j| (w, j))).map(|(w, j)| self.succ[w][j]).collect();
        }
        state
    }

    /// The same measure with windows of a larger depth.
    pub fn lift(&self, depth: usize) -> MarkovMeasure {
        assert!(depth >= self.depth);
        if depth == self.depth {
            return self.clone();
        }
        let initial = self.masses(depth);
        let ix = CylinderIndexer::new(self.alphabet, depth);
        let old = self.indexer();
        let trans = (0..ix.len())
            .map(|i| {
                let w = ix.word(i);
                let s = old.index(&w[depth - self.depth..]);
                self.trans[s].clone()
            })
            .collect();
        MarkovMeasure::new(self.id, self.alphabet, depth, initial, trans)
    }
}

/// Position of `next` among the legal successors of `prev`.
#[inline]
pub(crate) fn choice(prev: Letter, next: Letter) -> usize {
    if next.0 < prev.inverse().0 {
        next.index()
    } else {
        next.index() - 1
    }
}
