//! The decay kernel built from a Gibbs stream, its decay certificate, and
//! unit derivative spikes with their audited constants.
//!
//! Every spike is a finite partition of the boundary into cylinders with one
//! value per piece, so all the suprema in the spike conditions are finite
//! maxima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::CylinderFn;
use crate::gibbs::{critical_exponent, GibbsStream};
use crate::measure::{MarkovMeasure, MeasureId};
use crate::potential::Potential;
use crate::tree::{rank_of, BOUNDARY_CAP};
use crate::word::{common_prefix, words_of_length, Alphabet, BoundaryWord, Letter, ReducedWord};

/// `G(x, y, s) = e^{−2 d^{Sym}(y_c, y_s)}` for `s ≥ c = (x·y)_e`, else 1,
/// where `y_t` is the point at distance `t` along the ray to `y` and `Sym`
/// is the symmetrization of the normalized potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    sym: Potential,
    reference: MarkovMeasure,
    alpha: f64,
    beta: f64,
}

impl Kernel {
    /// Kernel of a stream, integrated against the named reference measure.
    pub fn new(stream: &GibbsStream, reference: MeasureId) -> Result<Self> {
        let sym = stream.potential().sym();
        let alphabet = *sym.alphabet();
        let measure = match reference {
            MeasureId::Hausdorff => MarkovMeasure::uniform(alphabet, sym.depth()),
            MeasureId::Gibbs => stream.measure().clone(),
        };
        let alpha = (alphabet.branching() as f64).ln();
        // geodesic-average rate of the normalized symmetrization
        let beta = sym.min_mean_cycle().0 - critical_exponent(&sym)?;
        if !(beta > 0.0) {
            return Err(Error::Certification(format!("symmetrized potential has geodesic average {beta}")));
        }
        Ok(Kernel { sym, reference: measure, alpha, beta })
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.sym.alphabet()
    }

    pub fn potential(&self) -> &Potential {
        &self.sym
    }

    pub fn reference(&self) -> &MarkovMeasure {
        &self.reference
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `e^{−2 d^{Sym}}` along a segment with these step letters.
    pub fn segment_weight(&self, letters: &[Letter]) -> f64 {
        (-2.0 * self.sym.path_length(letters)).exp()
    }

    /// Kernel value; non-integer `s` interpolates the exponent linearly along
    /// the final edge.
    pub fn value(&self, x: &BoundaryWord, y: &BoundaryWord, s: f64) -> Result<f64> {
        let c = x.confluence(y, BOUNDARY_CAP).ok_or(Error::Diagonal)?;
        if s < c as f64 {
            return Ok(1.0);
        }
        let lo = s.floor() as usize;
        let theta = s - lo as f64;
        let letters = y.letters(lo + 1);
        let d0 = self.sym.path_length(&letters[c..lo]);
        let d = if theta > 0.0 { (1.0 - theta) * d0 + theta * self.sym.path_length(&letters[c..lo + 1]) } else { d0 };
        Ok((-2.0 * d).exp())
    }

    /// `∫_{[stem]} G(x, y, s) dν(y)` for any `x` with `(x·stem)_e = j < |stem|`.
    pub fn ball_integral(&self, stem: &[Letter], j: usize, s: usize) -> f64 {
        let nu = &self.reference;
        if s <= j {
            return nu.mass(stem);
        }
        if s <= stem.len() {
            return nu.mass(stem) * self.segment_weight(&stem[j..s]);
        }
        let a = *self.alphabet();
        let mut total = 0.0;
        let mut stack = vec![stem.to_vec()];
        while let Some(w) = stack.pop() {
            if w.len() == s {
                total += nu.mass(&w) * self.segment_weight(&w[j..s]);
                continue;
            }
            for t in a.successors(w.last().copied()) {
                let mut v = w.clone();
                v.push(t);
                stack.push(v);
            }
        }
        total
    }

    /// Certifies `sup_x ∫_{X−Π(x,r)} G(x,y,s) dν(y) ≤ C e^{−αs} / max{e^s r, 1}^β`
    /// over `s = 0..=s_max` and `r ∈ {0} ∪ {e^{−ρ}: ρ = 0..=rho_max}`.
    pub fn decay_audit(&self, rho_max: usize, s_max: usize) -> Result<DecayCert> {
        let tables = DecayTables::new(self, s_max);
        let mut rows = Vec::new();
        let mut required_by_s = vec![0.0f64; s_max + 1];
        for s in 0..=s_max {
            let depths = (0..=rho_max).map(Some).chain(std::iter::once(None));
            for rho in depths {
                let (lhs, witness) = tables.sup_integral(self, rho, s);
                // the ball radius class of ρ reaches up to e^{1−ρ}, which binds
                let scale = match rho {
                    Some(r) => (s as f64 + 1.0 - r as f64).exp().max(1.0).powf(self.beta),
                    None => 1.0,
                };
                let required = lhs * (self.alpha * s as f64).exp() * scale;
                required_by_s[s] = required_by_s[s].max(required);
                rows.push(DecayRow { rho, s, lhs, required, witness });
            }
        }
        let c_g = required_by_s.iter().copied().fold(0.0, f64::max);
        // a certificate must not keep growing with s
        let q = (3 * s_max) / 4;
        if s_max >= 8 && required_by_s[s_max] > 1.5 * required_by_s[q] {
            let worst = rows.iter().filter(|r| r.s == s_max).max_by(|a, b| a.required.total_cmp(&b.required)).unwrap();
            return Err(Error::DecayCertification {
                x: worst.witness.clone(),
                r: worst.rho.map_or(0.0, |r| (-(r as f64)).exp()),
                s: s_max as f64,
                reason: format!("required constant grows from {:.4e} to {:.4e}", required_by_s[q], required_by_s[s_max]),
            });
        }
        Ok(DecayCert { c_g, alpha_g: self.alpha, beta_g: self.beta, measure: self.reference.id(), rho_max, s_max, rows })
    }
}

/// Backward tables for the decay integral; `cont[R][W]` is the conditional
/// kernel mass of all continuations of `R` further letters after a window
/// lying entirely inside the segment.
struct DecayTables {
    m: usize,
    kw: Vec<f64>,
    cont: Vec<Vec<f64>>,
}

impl DecayTables {
    fn new(k: &Kernel, s_max: usize) -> Self {
        let nu = &k.reference;
        let m = k.sym.depth();
        let ix = k.sym.indexer();
        let kw: Vec<f64> = k.sym.table().iter().map(|v| (-2.0 * v).exp()).collect();
        let tail: Vec<f64> = (0..ix.len()).map(|i| (-2.0 * k.sym.terminal(&ix.word(i))).exp()).collect();
        let mut cont = vec![tail];
        for _ in 0..s_max {
            let prev = cont.last().unwrap();
            let next = (0..ix.len())
                .map(|w| {
                    nu.successors()[w]
                        .iter()
                        .zip(&nu.transitions()[w])
                        .map(|(&t, p)| p * kw[t] * prev[t])
                        .sum()
                })
                .collect();
            cont.push(next);
        }
        DecayTables { m, kw, cont }
    }

    /// Kernel factor of a segment whose first `min(m, L)` letters are `head`.
    fn segment_factor(&self, k: &Kernel, head: &[Letter], len: usize) -> f64 {
        if len < self.m {
            k.segment_weight(head)
        } else {
            let w = rank_of(head, k.alphabet().branching());
            self.kw[w] * self.cont[len - self.m][w]
        }
    }

    /// Mass leaving `[x_1..x_c]` through siblings of `x_{c+1}`, weighted by
    /// the kernel, for `c ≥ m`; state `w` is the window ending at `x_c`.
    fn level_term(&self, k: &Kernel, w: usize, t: usize, c: usize, s: usize, rho: Option<usize>) -> f64 {
        if rho.is_some_and(|r| c >= r) {
            return 0.0;
        }
        let nu = &k.reference;
        let trans = &nu.transitions()[w];
        if c >= s {
            return 1.0 - trans[t];
        }
        let len = s - c;
        let ix = nu.indexer();
        let mut total = 0.0;
        for (j, &p) in trans.iter().enumerate() {
            if j == t {
                continue;
            }
            let first = nu.successors()[w][j];
            let letter = *ix.word(first).last().unwrap();
            // enumerate the first min(m, len) letters of the segment
            let mut stack = vec![(vec![letter], first, p)];
            while let Some((head, state, prob)) = stack.pop() {
                if head.len() == self.m.min(len) {
                    total += prob * self.segment_factor(k, &head, len);
                    continue;
                }
                for (jj, &pp) in nu.transitions()[state].iter().enumerate() {
                    let next = nu.successors()[state][jj];
                    let mut h = head.clone();
                    h.push(*ix.word(next).last().unwrap());
                    stack.push((h, next, prob * pp));
                }
            }
        }
        total
    }

    /// Same quantity for `c < m`, by direct cylinder masses.
    fn shallow_term(&self, k: &Kernel, x: &[Letter], c: usize, s: usize, rho: Option<usize>) -> f64 {
        if rho.is_some_and(|r| c >= r) {
            return 0.0;
        }
        let nu = &k.reference;
        if c >= s {
            return nu.mass(&x[..c]) - nu.mass(&x[..c + 1]);
        }
        let len = s - c;
        let a = *k.alphabet();
        let mut total = 0.0;
        let mut stack: Vec<Vec<Letter>> = a
            .successors(if c == 0 { None } else { Some(x[c - 1]) })
            .filter(|&t| t != x[c])
            .map(|t| vec![t])
            .collect();
        while let Some(head) = stack.pop() {
            if head.len() == self.m.min(len) {
                let word: Vec<Letter> = x[..c].iter().chain(&head).copied().collect();
                total += nu.mass(&word) * self.segment_factor(k, &head, len);
                continue;
            }
            for t in a.successors(head.last().copied()) {
                let mut h = head.clone();
                h.push(t);
                stack.push(h);
            }
        }
        total
    }

    /// `sup_x ∫_{X − Π(x, r)} G(x, y, s) dν(y)` where the complement is
    /// `{y : (x·y)_e < ρ}` (`None` for `r = 0`).
    fn sup_integral(&self, k: &Kernel, rho: Option<usize>, s: usize) -> (f64, String) {
        let nu = &k.reference;
        let m = self.m;
        let b = k.alphabet().branching();
        let c_end = rho.unwrap_or(s + 1);
        let terminal = if rho.is_none() { 1.0 } else { 0.0 };
        let states = nu.initial().len();
        // best[W]: sup over continuations of the remaining levels, relative to ν([x..c])
        let mut best = vec![terminal; states];
        if c_end > m {
            for c in (m..c_end).rev() {
                best = (0..states)
                    .map(|w| {
                        (0..b)
                            .map(|t| {
                                self.level_term(k, w, t, c, s, rho)
                                    + nu.transitions()[w][t] * best[nu.successors()[w][t]]
                            })
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
            }
        }
        let ix = nu.indexer();
        let mut top = (f64::NEG_INFINITY, 0);
        for p in 0..states {
            let x = ix.word(p);
            let mut v: f64 = (0..m.min(c_end)).map(|c| self.shallow_term(k, &x, c, s, rho)).sum();
            if c_end >= m {
                v += nu.initial()[p] * best[p];
            } else {
                v += terminal * nu.mass(&x[..c_end]);
            }
            if v > top.0 {
                top = (v, p);
            }
        }
        (top.0.max(0.0), k.alphabet().format(&ix.word(top.1)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    /// Ball depth: the complement of `Π(x, r)` is `{(x·y)_e < ρ}`; `None` is `r = 0`.
    pub rho: Option<usize>,
    pub s: usize,
    pub lhs: f64,
    pub required: f64,
    pub witness: String,
}

/// Empirical nicely-decaying certificate for the kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCert {
    pub c_g: f64,
    pub alpha_g: f64,
    pub beta_g: f64,
    pub measure: MeasureId,
    pub rho_max: usize,
    pub s_max: usize,
    pub rows: Vec<DecayRow>,
}

/// One cell of a spike's partition of the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub stem: Vec<Letter>,
    /// Length of the common prefix of the stem with the spike's centre word.
    pub conf: usize,
    pub value: f64,
}

/// A boundary function given on a finite cylinder partition, with spike
/// geometry `(r, a, s) = (e^{−|g|}, γ_{e,g}(∞), |g|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub g: ReducedWord,
    pub pieces: Vec<Piece>,
    /// Value of the unnormalized derivative spike at the anchor.
    pub normalizer: f64,
    /// `‖f_g‖₁` against the Gibbs measure.
    pub l1: f64,
    pub anchor: BoundaryWord,
    pub radius: f64,
    pub s: usize,
}

/// Extra letters beyond the branch point that determine a spike: enough for
/// the target function and for the cocycle windows.
pub fn stabilization_letters(stream: &GibbsStream, f: &CylinderFn) -> usize {
    f.depth().max(stream.potential().depth() - 1).max(1)
}

impl SpikeRecord {
    /// `f_g(ξ) = F(g⁻¹ξ) e^{−ρ'_ξ(e,g)} / c_g`, normalized to 1 at the anchor.
    pub fn unit(stream: &GibbsStream, g: &ReducedWord, f: &CylinderFn) -> Result<Self> {
        f.check_positive()?;
        let a = *stream.potential().alphabet();
        let e = stabilization_letters(stream, f);
        let len = g.len();
        let gl = g.letters();
        let ginv = g.inverse();
        let id = ReducedWord::identity();
        let raw = |stem: &[Letter]| {
            let xi = BoundaryWord::extend(&a, &ReducedWord::from_reduced(stem.to_vec()));
            f.eval(&xi.translate(&ginv)) * (-stream.potential().rho_phi(&xi, &id, g)).exp()
        };
        let mut pieces = Vec::new();
        for j in 0..=len {
            let heads: Vec<Vec<Letter>> = if j < len {
                a.successors(if j == 0 { None } else { Some(gl[j - 1]) })
                    .filter(|&t| t != gl[j])
                    .map(|t| [&gl[..j], &[t]].concat())
                    .collect()
            } else {
                vec![gl.to_vec()]
            };
            let extra = if j < len { e - 1 } else { e };
            for h in heads {
                for w in continuations(&a, &h, extra) {
                    let value = raw(&w);
                    pieces.push(Piece { stem: w, conf: j, value });
                }
            }
        }
        let anchor = BoundaryWord::extend(&a, g);
        let normalizer = raw(&anchor.letters(len + e));
        for p in &mut pieces {
            p.value /= normalizer;
        }
        let l1 = f.integrate(stream.measure()) / normalizer;
        Ok(SpikeRecord { g: g.clone(), pieces, normalizer, l1, anchor, radius: (-(len as f64)).exp(), s: len })
    }

    pub fn depth(&self) -> usize {
        self.pieces.iter().map(|p| p.stem.len()).max().unwrap_or(1)
    }

    pub fn eval(&self, xi: &BoundaryWord) -> f64 {
        let w = xi.letters(self.depth());
        self.pieces.iter().find(|p| w.starts_with(&p.stem)).map_or(f64::NAN, |p| p.value)
    }

    pub fn scaled(&self, c: f64) -> SpikeRecord {
        let mut r = self.clone();
        r.pieces.iter_mut().for_each(|p| p.value *= c);
        r.l1 *= c;
        r
    }

    /// `weight · f_g` added into a difference array over depth-`n` cells.
    pub fn accumulate(&self, weight: f64, n: usize, alphabet: &Alphabet, diff: &mut [f64]) {
        let b = alphabet.branching();
        for p in &self.pieces {
            let width = b.pow((n - p.stem.len()) as u32);
            let start = rank_of(&p.stem, b) * width;
            diff[start] += weight * p.value;
            diff[start + width] -= weight * p.value;
        }
    }

    pub fn to_dense(&self, alphabet: &Alphabet, n: usize) -> CylinderFn {
        let mut diff = vec![0.0; alphabet.count_words(n) + 1];
        self.accumulate(1.0, n, alphabet, &mut diff);
        let mut acc = 0.0;
        let values = diff[..diff.len() - 1]
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        CylinderFn::new(*alphabet, n, values).expect("depth matches")
    }

    /// Least constants for the spike conditions against `kernel`, with
    /// Hölder order `q` for the fourth.
    pub fn audit(&self, kernel: &Kernel, q: f64) -> SpikeConstants {
        let l = self.s;
        let g = self.g.letters();
        let sup = self.pieces.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
        let inner = self.pieces.iter().filter(|p| p.conf == l);
        let ball_min = inner.clone().map(|p| p.value).fold(f64::INFINITY, f64::min);
        let h_a = self.eval(&self.anchor);
        let c1 = sup / ball_min;
        let mut c2 = 0.0f64;
        let growth = (kernel.alpha() * l as f64).exp();
        let mut integrals = vec![f64::NAN; l];
        for p in self.pieces.iter().filter(|p| p.conf < l) {
            if integrals[p.conf].is_nan() {
                integrals[p.conf] = kernel.ball_integral(g, p.conf, l);
            }
            c2 = c2.max(p.value / (h_a * growth * integrals[p.conf]));
        }
        // pieces inside one depth-L cylinder, grouped by their first L letters
        let mut groups: std::collections::BTreeMap<Vec<Letter>, Vec<&Piece>> = Default::default();
        for p in &self.pieces {
            if p.stem.len() > l {
                groups.entry(p.stem[..l].to_vec()).or_default().push(p);
            }
        }
        let (mut c3, mut c4) = (1.0f64, 0.0f64);
        for ps in groups.values() {
            let hi = ps.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
            let lo = ps.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
            c3 = c3.max(hi / lo);
            for p in ps {
                for o in ps {
                    let c = common_prefix(&p.stem, &o.stem);
                    if c < p.stem.len().min(o.stem.len()) {
                        let v = (p.value - o.value).abs() * (q * (c as f64 - l as f64)).exp() / p.value;
                        c4 = c4.max(v);
                    }
                }
            }
        }
        SpikeConstants::new(c1, c2, c3, c4)
    }
}

fn continuations(a: &Alphabet, head: &[Letter], extra: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![head.to_vec()];
    for _ in 0..extra {
        out = out
            .into_iter()
            .flat_map(|w| a.successors(w.last().copied()).map(move |t| [w.as_slice(), &[t]].concat()))
            .collect();
    }
    out
}

/// Least constants for the three spike conditions and the Hölder condition.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c: f64,
}

impl SpikeConstants {
    fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        SpikeConstants { c1, c2, c3, c4, c: c1.max(c2).max(c3).max(c4) }
    }

    /// Constant for the three spike conditions alone.
    pub fn spike_only(&self) -> f64 {
        self.c1.max(self.c2).max(self.c3)
    }

    pub fn is_finite(&self) -> bool {
        self.c.is_finite()
    }
}

/// The same audit on a dense cylinder function `h` with centre word `a`
/// (`|a| = l` letters), radius `e^{−l}` and scale `s`.
pub fn audit_dense(h: &CylinderFn, a: &[Letter], s: usize, kernel: &Kernel, q: f64) -> Result<SpikeConstants> {
    h.check_positive()?;
    let l = a.len();
    let n = h.depth();
    if n <= l {
        return Err(Error::Input("function must be resolved below the centre cylinder".into()));
    }
    let vals = h.values();
    let block = h.block(a);
    let ix = h.indexer();
    // value at the anchor: a followed by repeats of its last letter
    let anchor = BoundaryWord::extend(h.alphabet(), &ReducedWord::from_reduced(a.to_vec()));
    let h_anchor = h.eval(&anchor);
    let c1 = h.sup() / vals[block.clone()].iter().copied().fold(f64::INFINITY, f64::min);
    let growth = (kernel.alpha() * s as f64).exp();
    let mut integrals = vec![f64::NAN; l];
    let mut c2 = 0.0f64;
    for (i, v) in vals.iter().enumerate() {
        if block.contains(&i) {
            continue;
        }
        let j = common_prefix(&ix.word(i), a);
        if integrals[j].is_nan() {
            integrals[j] = kernel.ball_integral(a, j, s);
        }
        c2 = c2.max(v / (h_anchor * growth * integrals[j]));
    }
    let c3 = h.t_eps(l);
    let r = (-(l as f64)).exp();
    let c4 = h
        .holder(r, q)
        .iter()
        .zip(vals)
        .map(|(d, v)| d * r.powf(q) / v)
        .fold(0.0, f64::max);
    Ok(SpikeConstants::new(c1, c2, c3, c4))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length: usize,
    pub count: usize,
    pub max_c: f64,
    pub max_c1: f64,
    pub max_c2: f64,
    pub max_c3: f64,
    pub max_c4: f64,
    pub witness: String,
}

/// Audits every unit spike with `|g| ≤ max_len` and reports the worst
/// constants per word length.
pub fn spike_sweep(stream: &GibbsStream, kernel: &Kernel, f: &CylinderFn, max_len: usize, q: f64) -> Result<Vec<SweepRow>> {
    let a = *stream.potential().alphabet();
    (0..=max_len)
        .map(|len| {
            let words = words_of_length(&a, len);
            let audits: Vec<(ReducedWord, SpikeConstants)> = words
                .par_iter()
                .map(|g| SpikeRecord::unit(stream, g, f).map(|r| (g.clone(), r.audit(kernel, q))))
                .collect::<Result<_>>()?;
            let mut row = SweepRow {
                length: len,
                count: audits.len(),
                max_c: 0.0,
                max_c1: 0.0,
                max_c2: 0.0,
                max_c3: 0.0,
                max_c4: 0.0,
                witness: String::new(),
            };
            for (g, c) in &audits {
                if !c.is_finite() {
                    return Err(Error::NotASpike { condition: 2, witness: g.display(&a) });
                }
                if c.c > row.max_c {
                    row.max_c = c.c;
                    row.witness = g.display(&a);
                }
                row.max_c1 = row.max_c1.max(c.c1);
                row.max_c2 = row.max_c2.max(c.c2);
                row.max_c3 = row.max_c3.max(c.c3);
                row.max_c4 = row.max_c4.max(c.c4);
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> (Alphabet, GibbsStream) {
        let a = Alphabet::new(2).unwrap();
        (a, GibbsStream::new(&Potential::constant(a, 0.0)).unwrap())
    }

    #[test]
    fn kernel_examples() {
        let (a, s) = uniform();
        let k = Kernel::new(&s, MeasureId::Hausdorff).unwrap();
        let x = BoundaryWord::extend(&a, &a.parse_word("a b a").unwrap());
        let y = BoundaryWord::extend(&a, &a.parse_word("a b b").unwrap());
        assert_eq!(k.value(&x, &y, 1.0).unwrap(), 1.0);
        for t in [2.0, 3.0, 5.0] {
            assert!((k.value(&x, &y, t).unwrap() - 9f64.powf(-(t - 2.0))).abs() < 1e-14);
        }
        assert_eq!(k.value(&x, &x, 1.0), Err(Error::Diagonal));
    }

    #[test]
    fn uniform_spike_values() {
        let (a, s) = uniform();
        let one = CylinderFn::constant(a, 1.0);
        let g = a.parse_word("a").unwrap();
        let r = SpikeRecord::unit(&s, &g, &one).unwrap();
        for p in &r.pieces {
            let expect = if p.conf == 1 { 1.0 } else { 1.0 / 9.0 };
            assert!((p.value - expect).abs() < 1e-12);
        }
        let e = SpikeRecord::unit(&s, &ReducedWord::identity(), &one).unwrap();
        assert!(e.pieces.iter().all(|p| (p.value - 1.0).abs() < 1e-12));
        assert_eq!((e.radius, e.s), (1.0, 0));
    }

    #[test]
    fn uniform_spike_constant() {
        let (a, s) = uniform();
        let k = Kernel::new(&s, MeasureId::Hausdorff).unwrap();
        let one = CylinderFn::constant(a, 1.0);
        for g in ["a", "a b", "b' a a"] {
            let r = SpikeRecord::unit(&s, &a.parse_word(g).unwrap(), &one).unwrap();
            let c = r.audit(&k, 1.0);
            assert!((c.c2 - 4.0 / 3.0).abs() < 1e-12, "{g}: {c:?}");
            assert!((c.c - 4.0 / 3.0).abs() < 1e-12, "{g}: {c:?}");
        }
    }

    #[test]
    fn piece_and_dense_audits_agree() {
        let a = Alphabet::new(2).unwrap();
        let p = Potential::per_letter(a, &[0.2, 0.9, 0.4, 0.1]).unwrap();
        let s = GibbsStream::new(&p).unwrap();
        let f = CylinderFn::from_fn(a, 2, |w| 1.0 + 0.3 * w[0].0 as f64 + 0.05 * w[1].0 as f64);
        for measure in [MeasureId::Hausdorff, MeasureId::Gibbs] {
            let k = Kernel::new(&s, measure).unwrap();
            for g in ["a", "b a'", "a' b b"] {
                let g = a.parse_word(g).unwrap();
                let r = SpikeRecord::unit(&s, &g, &f).unwrap();
                let c = r.audit(&k, 1.0);
                let d = audit_dense(&r.to_dense(&a, r.depth()), g.letters(), r.s, &k, 1.0).unwrap();
                for (x, y) in [(c.c1, d.c1), (c.c2, d.c2), (c.c3, d.c3), (c.c4, d.c4)] {
                    assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{c:?} vs {d:?}");
                }
            }
        }
    }

    #[test]
    fn decay_uniform_is_bounded() {
        let (_, s) = uniform();
        let k = Kernel::new(&s, MeasureId::Hausdorff).unwrap();
        let cert = k.decay_audit(12, 12).unwrap();
        assert!((cert.alpha_g - 3f64.ln()).abs() < 1e-15);
        assert!(cert.c_g.is_finite() && cert.c_g >= 1.0);
        // r ≥ 1: nothing outside the ball
        assert!(cert.rows.iter().filter(|r| r.rho == Some(0)).all(|r| r.lhs == 0.0));
    }
}
