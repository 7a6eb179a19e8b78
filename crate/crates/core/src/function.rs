//! Functions on the boundary that are constant on the cylinders of a fixed
//! depth. Every sup, inf, Hölder constant and integral against a Markov
//! measure is then a finite computation.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MarkovMeasure;
use crate::tree::CylinderIndexer;
use crate::word::{Alphabet, BoundaryWord, Letter, ReducedWord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderFn {
    alphabet: Alphabet,
    depth: usize,
    values: Vec<f64>,
}

impl CylinderFn {
    pub fn new(alphabet: Alphabet, depth: usize, values: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Input("cylinder function depth must be positive".into()));
        }
        let n = alphabet.count_words(depth);
        if values.len() != n {
            return Err(Error::Input(format!("expected {n} cylinder values, got {}", values.len())));
        }
        Ok(CylinderFn { alphabet, depth, values })
    }

    pub fn constant(alphabet: Alphabet, c: f64) -> Self {
        CylinderFn { alphabet, depth: 1, values: vec![c; alphabet.size()] }
    }

    pub fn from_fn(alphabet: Alphabet, depth: usize, f: impl Fn(&[Letter]) -> f64) -> Self {
        let ix = CylinderIndexer::new(alphabet, depth);
        let values = (0..ix.len()).map(|i| f(&ix.word(i))).collect();
        CylinderFn { alphabet, depth, values }
    }

    /// A step function: `default` everywhere, overridden on each listed
    /// cylinder (deeper stems win).
    pub fn from_steps(alphabet: Alphabet, default: f64, steps: &[(ReducedWord, f64)]) -> Result<Self> {
        let depth = steps.iter().map(|(w, _)| w.len()).max().unwrap_or(1).max(1);
        if steps.iter().any(|(w, _)| w.is_empty()) {
            return Err(Error::Input("step stems must be nonempty".into()));
        }
        let mut order: Vec<&(ReducedWord, f64)> = steps.iter().collect();
        order.sort_by_key(|(w, _)| w.len());
        let ix = CylinderIndexer::new(alphabet, depth);
        let mut values = vec![default; ix.len()];
        for (w, v) in order {
            for i in ix.block(w.letters()) {
                values[i] = *v;
            }
        }
        Ok(CylinderFn { alphabet, depth, values })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indexer(&self) -> CylinderIndexer {
        CylinderIndexer::new(self.alphabet, self.depth)
    }

    /// Value on the cylinder of a word with at least `depth` letters.
    pub fn eval_prefix(&self, letters: &[Letter]) -> f64 {
        self.values[self.indexer().index(letters)]
    }

    pub fn eval(&self, xi: &BoundaryWord) -> f64 {
        self.eval_prefix(&xi.letters(self.depth))
    }

    /// The same function described at a larger depth.
    pub fn refine(&self, depth: usize) -> CylinderFn {
        assert!(depth >= self.depth, "cannot coarsen a cylinder function");
        let b = self.alphabet.branching();
        let width = b.pow((depth - self.depth) as u32);
        let values = self.values.iter().flat_map(|&v| std::iter::repeat_n(v, width)).collect();
        CylinderFn { alphabet: self.alphabet, depth, values }
    }

    fn zip(&self, other: &CylinderFn, f: impl Fn(f64, f64) -> f64) -> CylinderFn {
        let d = self.depth.max(other.depth);
        let (a, b) = (self.refine(d), other.refine(d));
        let values = a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect();
        CylinderFn { alphabet: self.alphabet, depth: d, values }
    }

    pub fn add(&self, other: &CylinderFn) -> CylinderFn {
        self.zip(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &CylinderFn) -> CylinderFn {
        self.zip(other, |x, y| x - y)
    }

    pub fn mul(&self, other: &CylinderFn) -> CylinderFn {
        self.zip(other, |x, y| x * y)
    }

    pub fn scale(&self, c: f64) -> CylinderFn {
        CylinderFn { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn recip(&self) -> CylinderFn {
        CylinderFn { values: self.values.iter().map(|v| 1.0 / v).collect(), ..self.clone() }
    }

    pub fn abs(&self) -> CylinderFn {
        CylinderFn { values: self.values.iter().map(|v| v.abs()).collect(), ..self.clone() }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Errors unless every value is strictly positive.
    pub fn check_positive(&self) -> Result<()> {
        let ix = self.indexer();
        match self.values.iter().position(|v| !(*v > 0.0)) {
            Some(i) => Err(Error::NonPositive { value: self.values[i], location: self.alphabet.format(&ix.word(i)) }),
            None => Ok(()),
        }
    }

    /// `∫ F dν`.
    pub fn integrate(&self, nu: &MarkovMeasure) -> f64 {
        let d = self.depth.max(nu.depth());
        let f = self.refine(d);
        f.values.iter().zip(nu.masses(d)).map(|(v, m)| v * m).sum()
    }

    /// `‖F‖₁` against `ν`.
    pub fn l1(&self, nu: &MarkovMeasure) -> f64 {
        self.abs().integrate(nu)
    }

    /// `(g_*F)(ξ) = F(g⁻¹ξ)`, exact at depth `depth + |g|`.
    pub fn translate(&self, g: &ReducedWord) -> CylinderFn {
        let n = self.depth + g.len();
        let ginv = g.inverse();
        let ix = CylinderIndexer::new(self.alphabet, n);
        let values = (0..ix.len())
            .map(|i| {
                let w = ReducedWord::from_reduced(ix.word(i));
                self.eval_prefix(&ginv.mul(&w).letters()[..self.depth])
            })
            .collect();
        CylinderFn { alphabet: self.alphabet, depth: n, values }
    }

    /// Index range of the depth-`N` cells below the cylinder `stem`.
    pub fn block(&self, stem: &[Letter]) -> Range<usize> {
        if stem.is_empty() {
            0..self.values.len()
        } else {
            self.indexer().block(stem)
        }
    }

    /// `t_∞(F) = sup F / inf F`.
    pub fn t_inf(&self) -> f64 {
        self.sup() / self.inf()
    }

    /// `t_ε(F)` for `ε = e^{−j}`: the worst ratio `F(y)/F(x)` with
    /// `π(x, y) ≤ ε`, i.e. within a depth-`j` cylinder. `j = 0` gives `t_∞`.
    pub fn t_eps(&self, j: usize) -> f64 {
        if j == 0 {
            return self.t_inf();
        }
        if j >= self.depth {
            return 1.0;
        }
        let width = self.alphabet.branching().pow((self.depth - j) as u32);
        self.values
            .chunks(width)
            .map(|c| {
                let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
                hi / lo
            })
            .fold(1.0, f64::max)
    }

    /// `(max, min)` over the cells of every node of the cylinder tree, by level.
    fn level_extremes(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let b = self.alphabet.branching();
        let mut levels = vec![(self.values.clone(), self.values.clone())];
        for lvl in (0..self.depth).rev() {
            let (hi, lo) = levels.last().unwrap();
            let k = if lvl == 0 { hi.len() } else { b };
            let fold = |v: &Vec<f64>, f: fn(f64, f64) -> f64, init: f64| v.chunks(k).map(|c| c.iter().copied().fold(init, f)).collect::<Vec<f64>>();
            let next = (fold(hi, f64::max, f64::NEG_INFINITY), fold(lo, f64::min, f64::INFINITY));
            levels.push(next);
        }
        levels.reverse();
        levels
    }

    /// `D_r^a F(x) = sup_{0 < π(x,y) ≤ r} |F(x) − F(y)| / π(x,y)^a`, one
    /// value per depth-`N` cell.
    pub fn holder(&self, r: f64, a: f64) -> Vec<f64> {
        let min_conf = if r >= 1.0 { 0 } else { (-r.ln() - 1e-12).ceil().max(0.0) as usize };
        let levels = self.level_extremes();
        let b = self.alphabet.branching();
        let n = self.depth;
        (0..self.values.len())
            .map(|i| {
                let fx = self.values[i];
                let mut best = 0.0f64;
                for c in min_conf..n {
                    // node of x at level c + 1, and its siblings under the level-c node
                    let own = i / b.pow((n - c - 1) as u32);
                    let (first, count) = if c == 0 { (0, self.alphabet.size()) } else { ((own / b) * b, b) };
                    let (hi, lo) = &levels[c + 1];
                    for s in first..first + count {
                        if s != own {
                            let d = (hi[s] - fx).max(fx - lo[s]);
                            best = best.max(d * (a * c as f64).exp());
                        }
                    }
                }
                best
            })
            .collect()
    }
}
