//! Depth-`m` tabular potentials on the space of geodesics and the weighted
//! lengths they induce.
//!
//! A potential assigns a real number to every reduced window of `m` letters.
//! The value of `Φ` on a geodesic at a vertex is the table entry of the next
//! `m` forward letters, so `d^Φ(p, q)` is the sum over the unit steps of the
//! segment from `p` to `q`. Windows that would run past the endpoint are
//! completed by averaging the table over all reduced completions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::GeodesicSpec;
use crate::measure::window_successors;
use crate::tree::{rank_of, CylinderIndexer};
use crate::word::{words_of_length, Alphabet, BoundaryWord, Letter, ReducedWord};

/// How windows shorter than the depth (near a finite endpoint) are valued.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuffixRule {
    /// Mean of the table over all reduced completions of the short window.
    #[default]
    CompletionAverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    alphabet: Alphabet,
    depth: usize,
    table: Vec<f64>,
    suffix: SuffixRule,
    /// `short[j - 1]` holds the completion averages of windows of length `j < m`.
    #[serde(skip)]
    short: Vec<Vec<f64>>,
}

impl Potential {
    /// Builds a potential from a dense table indexed in [`CylinderIndexer`]
    /// order at depth `m`.
    pub fn from_table(alphabet: Alphabet, depth: usize, table: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidPotential("depth must be positive".into()));
        }
        let ix = CylinderIndexer::new(alphabet, depth);
        if table.len() != ix.len() {
            return Err(Error::InvalidPotential(format!("expected {} windows, got {}", ix.len(), table.len())));
        }
        if let Some(v) = table.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite table value {v}")));
        }
        let mut p = Potential { alphabet, depth, table, suffix: SuffixRule::CompletionAverage, short: Vec::new() };
        p.rebuild_short();
        Ok(p)
    }

    /// Builds a potential from `(window, value)` pairs covering every window.
    pub fn from_entries(alphabet: Alphabet, depth: usize, entries: &[(ReducedWord, f64)]) -> Result<Self> {
        let ix = CylinderIndexer::new(alphabet, depth);
        let mut table = vec![f64::NAN; ix.len()];
        for (w, v) in entries {
            if w.len() != depth {
                return Err(Error::InvalidPotential(format!("window `{}` has length {}, expected {depth}", w.display(&alphabet), w.len())));
            }
            table[ix.index(w.letters())] = *v;
        }
        if let Some(i) = table.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidPotential(format!("missing window `{}`", alphabet.format(&ix.word(i)))));
        }
        Potential::from_table(alphabet, depth, table)
    }

    pub fn from_fn(alphabet: Alphabet, depth: usize, f: impl Fn(&[Letter]) -> f64) -> Result<Self> {
        let table = words_of_length(&alphabet, depth).iter().map(|w| f(w.letters())).collect();
        Potential::from_table(alphabet, depth, table)
    }

    pub fn constant(alphabet: Alphabet, c: f64) -> Self {
        Potential::from_table(alphabet, 1, vec![c; alphabet.size()]).expect("constant table is valid")
    }

    /// Depth-1 potential with one value per letter.
    pub fn per_letter(alphabet: Alphabet, values: &[f64]) -> Result<Self> {
        Potential::from_table(alphabet, 1, values.to_vec())
    }

    fn rebuild_short(&mut self) {
        let ix = CylinderIndexer::new(self.alphabet, self.depth);
        self.short = (1..self.depth)
            .map(|j| {
                words_of_length(&self.alphabet, j)
                    .iter()
                    .map(|w| {
                        let block = ix.block(w.letters());
                        let n = block.len() as f64;
                        self.table[block].iter().sum::<f64>() / n
                    })
                    .collect()
            })
            .collect();
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn suffix_rule(&self) -> SuffixRule {
        self.suffix
    }

    pub fn indexer(&self) -> CylinderIndexer {
        CylinderIndexer::new(self.alphabet, self.depth)
    }

    /// Value of a window; longer inputs are truncated to the depth, shorter
    /// ones use the suffix rule.
    #[inline]
    pub fn window(&self, letters: &[Letter]) -> f64 {
        let b = self.alphabet.branching();
        if letters.len() >= self.depth {
            self.table[rank_of(&letters[..self.depth], b)]
        } else if letters.is_empty() {
            0.0
        } else {
            self.short[letters.len() - 1][rank_of(letters, b)]
        }
    }

    /// Sum of the suffix-rule values of the last `min(m - 1, n)` steps of a
    /// segment whose final letters are `tail`.
    pub fn terminal(&self, tail: &[Letter]) -> f64 {
        let n = tail.len().min(self.depth - 1);
        let t = &tail[tail.len() - n..];
        (0..n).map(|i| self.window(&t[i..])).sum()
    }

    /// `d^Φ` along a segment whose step letters are `path`.
    pub fn path_length(&self, path: &[Letter]) -> f64 {
        (0..path.len()).map(|i| self.window(&path[i..(i + self.depth).min(path.len())])).sum()
    }

    /// `d^Φ(p, q)`.
    pub fn d_phi(&self, p: &ReducedWord, q: &ReducedWord) -> f64 {
        self.path_length(p.inverse().mul(q).letters())
    }

    /// `ρ^Φ_ξ(p, q) = lim_{z→ξ} d^Φ(q, z) − d^Φ(p, z)`, evaluated exactly at a
    /// point `z` far enough along `ξ` that the limit has stabilized.
    pub fn rho_phi(&self, xi: &BoundaryWord, p: &ReducedWord, q: &ReducedWord) -> f64 {
        let z = xi.prefix(p.len() + q.len() + self.depth + 1);
        self.d_phi(q, &z) - self.d_phi(p, &z)
    }

    /// `Φ(γ)` for a geodesic parked at a vertex: the window of the next `m`
    /// letters from `γ(0)`.
    pub fn on_geodesic(&self, g: &GeodesicSpec) -> f64 {
        let pos = g.offset.floor() as i64;
        let need = pos.unsigned_abs() as usize + self.depth + 1;
        let (fwd, bwd) = g.arms(need);
        let letter_at = |i: i64| -> Letter {
            if i >= 0 {
                fwd[i as usize]
            } else {
                bwd[(-i - 1) as usize].inverse()
            }
        };
        let w: Vec<Letter> = (pos..pos + self.depth as i64).map(letter_at).collect();
        self.window(&w)
    }

    fn map_table(&self, f: impl Fn(f64) -> f64) -> Potential {
        let mut p = Potential { table: self.table.iter().map(|&v| f(v)).collect(), short: Vec::new(), ..self.clone() };
        p.rebuild_short();
        p
    }

    /// `Φ + c`.
    pub fn shifted(&self, c: f64) -> Potential {
        self.map_table(|v| v + c)
    }

    pub fn scaled(&self, c: f64) -> Potential {
        self.map_table(|v| v * c)
    }

    /// The flip `Φ̂`: windows reversed with every letter inverted.
    pub fn flip(&self) -> Potential {
        let ix = self.indexer();
        let table = (0..ix.len())
            .map(|i| {
                let w: Vec<Letter> = ix.word(i).iter().rev().map(|l| l.inverse()).collect();
                self.table[ix.index(&w)]
            })
            .collect();
        Potential::from_table(self.alphabet, self.depth, table).expect("flip preserves shape")
    }

    /// `Sym(Φ) = (Φ + Φ̂)/2`.
    pub fn sym(&self) -> Potential {
        let f = self.flip();
        let table = self.table.iter().zip(&f.table).map(|(a, b)| 0.5 * (a + b)).collect();
        Potential::from_table(self.alphabet, self.depth, table).expect("sym preserves shape")
    }

    pub fn flip_and_sym(&self) -> (Potential, Potential) {
        (self.flip(), self.sym())
    }

    pub fn max_abs(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.table.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.table.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max_value() - self.min_value()
    }

    pub fn is_constant(&self) -> bool {
        self.oscillation() == 0.0
    }

    /// Global Hölder bound on vertex-based geodesics: two geodesics through a
    /// common vertex that disagree within the first `m` forward letters are at
    /// distance more than `e^{1-m}`, so `K = osc·e^m`, exponent 1, suffices.
    pub fn holder_certificate(&self) -> HolderCertificate {
        HolderCertificate {
            constant: self.oscillation() * (self.depth as f64).exp(),
            exponent: 1.0,
            bound: self.max_abs(),
            scale: 1.0,
        }
    }

    /// Successor structure of the window graph: `succ[w]` lists the windows
    /// reachable by one step.
    pub fn window_graph(&self) -> Vec<Vec<usize>> {
        window_successors(&self.alphabet, self.depth)
    }

    /// Minimum over cycles of the window graph of the mean table value,
    /// together with one cycle attaining it (Karp's algorithm).
    pub fn min_mean_cycle(&self) -> (f64, Vec<usize>) {
        min_mean_cycle(&self.window_graph(), &self.table)
    }

    /// Checks `d^Φ(p, γ_{p,ξ}(s)) ≥ sε − T` over all rays and `s ≤ max_len`.
    /// The base point is irrelevant since the table is invariant.
    pub fn geodesic_average_audit(&self, eps: f64, max_len: usize) -> GeodesicAverage {
        let (mean, cycle) = self.min_mean_cycle();
        let (t, witness) = self.worst_deficit(eps, max_len);
        if mean < eps - 1e-12 {
            let ix = self.indexer();
            let mut w = ix.word(cycle[0]);
            for &c in &cycle[1..] {
                w.push(*ix.word(c).last().unwrap());
            }
            return GeodesicAverage::Violation { cycle_mean: mean, cycle: w, deficit: t, witness };
        }
        GeodesicAverage::Bounded { t, cycle_mean: mean }
    }

    /// `max(0, max_{|w| ≤ n} (|w| ε − d^Φ(e, w)))` and a maximizing word.
    fn worst_deficit(&self, eps: f64, max_len: usize) -> (f64, Vec<Letter>) {
        let m = self.depth;
        let mut best = 0.0;
        let mut best_word = Vec::new();
        for n in 1..m.min(max_len + 1) {
            for w in words_of_length(&self.alphabet, n) {
                let v = n as f64 * eps - self.path_length(w.letters());
                if v > best {
                    best = v;
                    best_word = w.into_letters();
                }
            }
        }
        if max_len < m {
            return (best, best_word);
        }
        let ix = self.indexer();
        let succ = self.window_graph();
        let states = ix.len();
        let tails: Vec<f64> = (0..states).map(|i| self.terminal(&ix.word(i))).collect();
        // cost[w] = min full-window sum over words of the current length ending in window w
        let mut cost = self.table.clone();
        let mut parents: Vec<Vec<usize>> = Vec::new();
        let mut n = m;
        loop {
            for w in 0..states {
                let v = n as f64 * eps - cost[w] - tails[w];
                if v > best {
                    best = v;
                    best_word = self.backtrack(&parents, w);
                }
            }
            if n == max_len {
                break;
            }
            let mut next = vec![f64::INFINITY; states];
            let mut parent = vec![usize::MAX; states];
            for w in 0..states {
                for &s in &succ[w] {
                    let c = cost[w] + self.table[s];
                    if c < next[s] {
                        next[s] = c;
                        parent[s] = w;
                    }
                }
            }
            parents.push(parent);
            cost = next;
            n += 1;
        }
        (best, best_word)
    }

    fn backtrack(&self, parents: &[Vec<usize>], end: usize) -> Vec<Letter> {
        let ix = self.indexer();
        let mut states = vec![end];
        let mut cur = end;
        for p in parents.iter().rev() {
            cur = p[cur];
            states.push(cur);
        }
        states.reverse();
        let mut w = ix.word(states[0]);
        for &s in &states[1..] {
            w.push(*ix.word(s).last().unwrap());
        }
        w
    }
}

/// Karp's minimum mean cycle for node-weighted graphs (the weight of a node
/// is paid on entering it).
pub fn min_mean_cycle(succ: &[Vec<usize>], weight: &[f64]) -> (f64, Vec<usize>) {
    let n = succ.len();
    // d[k][v]: least weight of a k-edge walk ending at v
    let mut d = vec![vec![f64::INFINITY; n]; n + 1];
    let mut par = vec![vec![usize::MAX; n]; n + 1];
    d[0].iter_mut().for_each(|x| *x = 0.0);
    for k in 0..n {
        for u in 0..n {
            if d[k][u].is_finite() {
                for &v in &succ[u] {
                    let c = d[k][u] + weight[v];
                    if c < d[k + 1][v] {
                        d[k + 1][v] = c;
                        par[k + 1][v] = u;
                    }
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for v in 0..n {
        if !d[n][v].is_finite() {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| d[k][v].is_finite())
            .map(|k| (d[n][v] - d[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < best {
            best = worst;
            arg = v;
        }
    }
    // the n-edge walk to `arg` contains a minimum mean cycle
    let mut walk = vec![arg];
    let mut cur = arg;
    for k in (1..=n).rev() {
        cur = par[k][cur];
        walk.push(cur);
    }
    walk.reverse();
    let mut cycle = Vec::new();
    let mut best_mean = f64::INFINITY;
    for i in 0..walk.len() {
        for j in i + 1..walk.len() {
            if walk[j] == walk[i] {
                let mean = walk[i + 1..=j].iter().map(|&v| weight[v]).sum::<f64>() / (j - i) as f64;
                if mean < best_mean {
                    best_mean = mean;
                    cycle = walk[i..j].to_vec();
                }
                break;
            }
        }
    }
    (best, cycle)
}

/// `|Φ(γ₁) − Φ(γ₂)| ≤ K dist(γ₁, γ₂)^β` for `dist ≤ scale`, with `|Φ| ≤ L`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCertificate {
    pub constant: f64,
    pub exponent: f64,
    pub bound: f64,
    pub scale: f64,
}

impl HolderCertificate {
    /// `(D̂(r), D(r))` with `D̂(r) = L(5/β + r^{1+β})` and
    /// `D(r) = 2D̂(2r) + 2Lr`.
    pub fn comparison_bounds(&self, r: f64) -> (f64, f64) {
        comparison_bounds(self.bound, self.exponent, r)
    }
}

pub fn comparison_bounds(l: f64, beta: f64, r: f64) -> (f64, f64) {
    let d_hat = |r: f64| l * (5.0 / beta + r.powf(1.0 + beta));
    (d_hat(r), 2.0 * d_hat(2.0 * r) + 2.0 * l * r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GeodesicAverage {
    /// The inequality holds on the audited rays with this `T`.
    Bounded { t: f64, cycle_mean: f64 },
    /// Some cycle has mean below `ε`, so no finite `T` exists.
    Violation { cycle_mean: f64, cycle: Vec<Letter>, deficit: f64, witness: Vec<Letter> },
}

impl GeodesicAverage {
    pub fn passed(&self) -> bool {
        matches!(self, GeodesicAverage::Bounded { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn w(a: &Alphabet, s: &str) -> ReducedWord {
        a.parse_word(s).unwrap()
    }

    #[test]
    fn constant_and_edge_sums() {
        let a = f2();
        let e = ReducedWord::identity();
        assert_eq!(Potential::constant(a, 1.5).d_phi(&e, &w(&a, "a b")), 3.0);
        // letter order a a' b b'
        let p = Potential::per_letter(a, &[0.25, 0.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.d_phi(&e, &w(&a, "a b")), 2.25);
        assert_eq!(p.d_phi(&e, &e), 0.0);
    }

    #[test]
    fn rho_phi_examples() {
        let a = f2();
        let e = ReducedWord::identity();
        let p = Potential::per_letter(a, &[0.3, 1.7, 0.2, 0.9]).unwrap();
        let xi = BoundaryWord::extend(&a, &w(&a, "b"));
        // d(a, b^n) − d(e, b^n) = φ(a')
        assert!((p.rho_phi(&xi, &e, &w(&a, "a")) - 1.7).abs() < 1e-14);
        let c = Potential::constant(a, 0.7);
        let q = w(&a, "a b a");
        let xi = BoundaryWord::extend(&a, &q);
        assert!((c.rho_phi(&xi, &e, &q) + 0.7 * 3.0).abs() < 1e-14);
    }

    #[test]
    fn flip_examples() {
        let a = f2();
        let p = Potential::per_letter(a, &[1.0, 3.0, 2.0, 2.0]).unwrap();
        let (f, s) = p.flip_and_sym();
        assert_eq!(f.table(), &[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(s.table(), &[2.0, 2.0, 2.0, 2.0]);
        let sym = Potential::per_letter(a, &[1.0, 1.0, 4.0, 4.0]).unwrap();
        assert_eq!(sym.flip(), sym);
    }

    #[test]
    fn holder_examples() {
        let a = f2();
        assert_eq!(Potential::constant(a, 2.0).holder_certificate().constant, 0.0);
        let c = Potential::per_letter(a, &[1.0, 3.0, 1.0, 3.0]).unwrap().holder_certificate();
        assert!((c.constant - 2.0 * std::f64::consts::E).abs() < 1e-14);
        assert_eq!((c.exponent, c.bound), (1.0, 3.0));
    }

    #[test]
    fn comparison_examples() {
        let (dh, d) = comparison_bounds(1.0, 1.0, 0.0);
        assert_eq!(dh, 5.0);
        assert_eq!(d, 10.0);
        assert_eq!(comparison_bounds(0.0, 1.0, 3.0), (0.0, 0.0));
    }

    #[test]
    fn geodesic_average_examples() {
        let a = f2();
        match Potential::constant(a, 1.0).geodesic_average_audit(0.5, 12) {
            GeodesicAverage::Bounded { t, .. } => assert_eq!(t, 0.0),
            v => panic!("{v:?}"),
        }
        assert!(!Potential::constant(a, 0.0).geodesic_average_audit(0.5, 12).passed());
    }

    #[test]
    fn short_windows_average_completions() {
        let a = f2();
        let p = Potential::from_fn(a, 2, |w| w[0].0 as f64 + 10.0 * w[1].0 as f64).unwrap();
        // completions of "a" are a a, a b, a b'
        let expect = (0.0 + 0.0) / 1.0 + (0.0 + 20.0 + 30.0) / 3.0;
        assert!((p.window(&[Letter(0)]) - expect).abs() < 1e-12);
    }

    #[test]
    fn karp_matches_brute_force_on_small_graphs() {
        let a = f2();
        let p = Potential::from_fn(a, 2, |w| ((w[0].0 * 7 + w[1].0 * 3) % 5) as f64 - 1.0).unwrap();
        let (mean, cycle) = p.min_mean_cycle();
        // every simple cycle through the window graph of length ≤ 4
        let succ = p.window_graph();
        let mut best = f64::INFINITY;
        fn rec(succ: &[Vec<usize>], t: &[f64], path: &mut Vec<usize>, best: &mut f64) {
            let last = *path.last().unwrap();
            for &n in &succ[last] {
                if n == path[0] {
                    let m = path.iter().map(|&v| t[v]).sum::<f64>() / path.len() as f64;
                    *best = best.min(m);
                } else if path.len() < 5 && !path.contains(&n) {
                    path.push(n);
                    rec(succ, t, path, best);
                    path.pop();
                }
            }
        }
        for s in 0..succ.len() {
            rec(&succ, p.table(), &mut vec![s], &mut best);
        }
        assert!((mean - best).abs() < 1e-12, "{mean} vs {best}");
        let cm = cycle.iter().map(|&v| p.table()[v]).sum::<f64>() / cycle.len() as f64;
        assert!((cm - mean).abs() < 1e-12);
    }
}
