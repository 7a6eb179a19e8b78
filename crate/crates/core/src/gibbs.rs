//! Pressure, Gibbs streams and their Radon–Nikodym cocycle.
//!
//! The Gibbs measure of a depth-`m` potential seen from the identity is the
//! Markov measure on windows built from the Perron data of the transfer
//! matrix `A[W][W'] = e^{−φ(W')}` (no-backtracking successors only). The
//! truncated Poincaré series and normalized shell weights are kept as
//! independent cross-checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{window_successors, MarkovMeasure, MeasureId};
use crate::potential::Potential;
use crate::tree::Cylinder;
use crate::word::{words_of_length, BoundaryWord, Letter, ReducedWord};

const PERRON_TOL: f64 = 1e-14;
const PERRON_MAX_ITER: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perron {
    pub radius: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

fn apply(succ: &[Vec<usize>], weight: &[f64], v: &[f64]) -> Vec<f64> {
    succ.iter().map(|s| s.iter().map(|&j| weight[j] * v[j]).sum()).collect()
}

fn apply_transpose(succ: &[Vec<usize>], weight: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            out[j] += v[i] * weight[j];
        }
    }
    out
}

/// Power iteration, stopped when the Collatz–Wielandt bounds
/// `min (Av)_i/v_i ≤ ρ ≤ max (Av)_i/v_i` agree to `PERRON_TOL`.
fn power_iteration(mut step: impl FnMut(&[f64]) -> Vec<f64>, n: usize) -> Result<(f64, Vec<f64>)> {
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..PERRON_MAX_ITER {
        let w = step(&v);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in w.iter().zip(&v) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let norm: f64 = w.iter().sum();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidPotential("transfer operator degenerate".into()));
        }
        v = w.iter().map(|x| x / norm).collect();
        if hi - lo <= PERRON_TOL * hi {
            return Ok((0.5 * (lo + hi), v));
        }
    }
    Err(Error::Certification("power iteration did not converge".into()))
}

/// Perron eigenvalue and vectors of the transfer matrix of `p`.
pub fn perron(p: &Potential) -> Result<Perron> {
    let rank = p.alphabet().rank();
    if rank < 2 {
        return Err(Error::UnsupportedRank(rank));
    }
    let succ = window_successors(p.alphabet(), p.depth());
    let weight: Vec<f64> = p.table().iter().map(|v| (-v).exp()).collect();
    let n = weight.len();
    let (radius, right) = power_iteration(|v| apply(&succ, &weight, v), n)?;
    let (_, left) = power_iteration(|v| apply_transpose(&succ, &weight, v), n)?;
    Ok(Perron { radius, right, left })
}

/// `λ_Φ`, the abscissa of convergence of `Σ_g e^{−d^Φ(e,g) − λ|g|}`.
pub fn critical_exponent(p: &Potential) -> Result<f64> {
    Ok(perron(p)?.radius.ln())
}

/// `Φ + λ_Φ`, the zero-pressure representative with the same Gibbs stream.
pub fn normalize(p: &Potential) -> Result<Potential> {
    Ok(p.shifted(critical_exponent(p)?))
}

/// `log Σ_{|g|=n, g ∈ [w]} e^{−d^Φ(e,g)}` for `n = 0..=n_max`; entries with
/// no words of that length are `-inf`. The empty prefix sums over all words.
pub fn log_shell_sums(p: &Potential, prefix: &[Letter], n_max: usize) -> Vec<f64> {
    let a = *p.alphabet();
    let m = p.depth();
    let mut out = vec![f64::NEG_INFINITY; n_max + 1];
    if prefix.is_empty() {
        out[0] = 0.0;
    }
    // words shorter than the window depth, enumerated directly
    let start = prefix.len().max(m);
    for (n, slot) in out.iter_mut().enumerate().take(start.min(n_max + 1)).skip(prefix.len().max(1)) {
        let s: f64 = words_of_length(&a, n)
            .iter()
            .filter(|w| w.letters().starts_with(prefix))
            .map(|w| (-p.path_length(w.letters())).exp())
            .sum();
        *slot = s.ln();
    }
    if start > n_max {
        return out;
    }
    let ix = p.indexer();
    let succ = window_successors(&a, m);
    let weight: Vec<f64> = p.table().iter().map(|v| (-v).exp()).collect();
    let tails: Vec<f64> = (0..ix.len()).map(|i| (-p.terminal(&ix.word(i))).exp()).collect();
    let mut v = vec![0.0; ix.len()];
    if prefix.len() >= m {
        let full: f64 = (0..=prefix.len() - m).map(|i| p.window(&prefix[i..i + m])).sum();
        v[ix.index(&prefix[prefix.len() - m..])] = (-full).exp();
    } else if prefix.is_empty() {
        v.clone_from(&weight);
    } else {
        for i in ix.block(prefix) {
            v[i] = weight[i];
        }
    }
    let mut log_scale = 0.0;
    for (n, slot) in out.iter_mut().enumerate().skip(start) {
        if n > start {
            let mut next = vec![0.0; v.len()];
            for (i, s) in succ.iter().enumerate() {
                if v[i] != 0.0 {
                    for &j in s {
                        next[j] += v[i] * weight[j];
                    }
                }
            }
            v = next;
        }
        let norm: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= norm);
        log_scale += norm.ln();
        let s: f64 = v.iter().zip(&tails).map(|(x, t)| x * t).sum();
        *slot = log_scale + s.ln();
    }
    out
}

/// Growth rate of shell sums between lengths `lo` and `hi`.
pub fn shell_slope(p: &Potential, lo: usize, hi: usize) -> f64 {
    let s = log_shell_sums(p, &[], hi);
    (s[hi] - s[lo]) / (hi - lo) as f64
}

/// Normalized shell weight of `[w]` at length `n`; tends to the Gibbs mass.
pub fn shell_limit_mass(p: &Potential, w: &[Letter], n: usize) -> f64 {
    let num = log_shell_sums(p, w, n)[n];
    let den = log_shell_sums(p, &[], n)[n];
    (num - den).exp()
}

/// Truncated Poincaré-series mass of `[w]` at exponent `λ_Φ + δ`, with the
/// optional slowly varying factor `(1 + n)^a`.
pub fn poincare_mass(p: &Potential, w: &[Letter], delta: f64, n_max: usize, patterson: f64) -> Result<f64> {
    let lambda = critical_exponent(p)? + delta;
    let series = |logs: Vec<f64>| {
        let terms: Vec<f64> = logs
            .iter()
            .enumerate()
            .map(|(n, l)| l - lambda * n as f64 + patterson * (1.0 + n as f64).ln())
            .collect();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    };
    Ok((series(log_shell_sums(p, w, n_max)) - series(log_shell_sums(p, &[], n_max))).exp())
}

/// The Gibbs stream `{μ_q}` of a potential, stored through its normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsStream {
    original: Potential,
    potential: Potential,
    pressure: f64,
    perron: Perron,
    sym_defect: f64,
    measure: MarkovMeasure,
}

impl GibbsStream {
    pub fn new(p: &Potential) -> Result<Self> {
        let pressure = critical_exponent(p)?;
        let potential = p.shifted(pressure);
        let perron = perron(&potential)?;
        let sym_defect = critical_exponent(&p.sym())? - pressure;
        let succ = window_successors(potential.alphabet(), potential.depth());
        let weight: Vec<f64> = potential.table().iter().map(|v| (-v).exp()).collect();
        let r = &perron.right;
        let z: f64 = weight.iter().zip(r).map(|(w, r)| w * r).sum();
        let initial = weight.iter().zip(r).map(|(w, r)| w * r / z).collect();
        let trans = succ
            .iter()
            .map(|s| {
                let row: Vec<f64> = s.iter().map(|&j| weight[j] * r[j]).collect();
                let tot: f64 = row.iter().sum();
                row.into_iter().map(|x| x / tot).collect()
            })
            .collect();
        let measure = MarkovMeasure::new(MeasureId::Gibbs, *potential.alphabet(), potential.depth(), initial, trans);
        Ok(GibbsStream { original: p.clone(), potential, pressure, perron, sym_defect, measure })
    }

    /// `λ_Φ` of the potential the stream was built from.
    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    /// The normalized potential `Φ' = Φ + λ_Φ`.
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn original(&self) -> &Potential {
        &self.original
    }

    pub fn perron(&self) -> &Perron {
        &self.perron
    }

    /// `λ_{Sym(Φ)} − λ_Φ`, nonpositive.
    pub fn sym_defect(&self) -> f64 {
        self.sym_defect
    }

    /// `μ_e` as a Markov measure on windows.
    pub fn measure(&self) -> &MarkovMeasure {
        &self.measure
    }

    /// `μ_e([w])`.
    pub fn mass(&self, w: &[Letter]) -> f64 {
        self.measure.mass(w)
    }

    /// `μ_q(c)`, using `μ_q = q·μ_e`.
    pub fn cylinder_mass(&self, q: &ReducedWord, c: &Cylinder) -> f64 {
        self.measure.mass_from(q, c.stem().letters())
    }

    /// `dμ_q/dμ_p(ξ) = e^{−ρ^{Φ'}_ξ(p,q)}`.
    pub fn rn_derivative(&self, p: &ReducedWord, q: &ReducedWord, xi: &BoundaryWord) -> f64 {
        (-self.potential.rho_phi(xi, p, q)).exp()
    }

    /// `μ_e([q]) e^{d^{Φ'}(e,q)}` over every `q` with `1 ≤ |q| ≤ max_radius`.
    pub fn shadow_lemma_audit(&self, max_radius: usize) -> ShadowReport {
        let p = &self.potential;
        let m = p.depth();
        let a = *p.alphabet();
        let mut per_depth = Vec::with_capacity(max_radius);
        for n in 1..=max_radius.min(m - 1) {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for w in words_of_length(&a, n) {
                let r = self.mass(w.letters()) * p.path_length(w.letters()).exp();
                lo = lo.min(r);
                hi = hi.max(r);
            }
            per_depth.push((n, lo, hi));
        }
        if max_radius >= m {
            let ix = p.indexer();
            let succ = self.measure.successors();
            let tails: Vec<f64> = (0..ix.len()).map(|i| p.terminal(&ix.word(i))).collect();
            let mut mass = self.measure.initial().to_vec();
            let mut state: Vec<usize> = (0..mass.len()).collect();
            let mut full: Vec<f64> = p.table().to_vec();
            for n in m..=max_radius {
                if n > m {
                    let b = a.branching();
                    let mut nm = Vec::with_capacity(mass.len() * b);
                    let mut ns = Vec::with_capacity(mass.len() * b);
                    let mut nf = Vec::with_capacity(mass.len() * b);
                    for i in 0..mass.len() {
                        let w = state[i];
                        for j in 0..b {
                            let t = succ[w][j];
                            nm.push(mass[i] * self.measure.transitions()[w][j]);
                            ns.push(t);
                            nf.push(full[i] + p.table()[t]);
                        }
                    }
                    mass = nm;
                    state = ns;
                    full = nf;
                }
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for i in 0..mass.len() {
                    let r = mass[i] * (full[i] + tails[state[i]]).exp();
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                per_depth.push((n, lo, hi));
            }
        }
        ShadowReport::from_depths(per_depth)
    }

    /// Shadow constant read off the Perron data: for `|w|` at least the window
    /// length, `μ([w]) e^{d^{Φ'}(e,w)} = r_W / (τ_W z)` with `W` the last
    /// window, `τ_W` its terminal weight and `z = Σ e^{−φ(W)} r_W`.
    pub fn shadow_prior_constant(&self) -> f64 {
        let q = &self.potential;
        let ix = q.indexer();
        let r = &self.perron.right;
        let z: f64 = q.table().iter().zip(r).map(|(v, r)| (-v).exp() * r).sum();
        (0..ix.len())
            .map(|i| r[i] / ((-q.terminal(&ix.word(i))).exp() * z))
            .map(|x| x.max(1.0 / x))
            .fold(1.0, f64::max)
    }

    /// `e^{λ₀ s} ∫ e^{−d^{Φ'}(e, γ_{e,ξ}(s))} dm_e(ξ)` for `s = 1..=s_max`,
    /// with `m_e` the uniform measure.
    pub fn shadow_integral_audit(&self, s_max: usize) -> Vec<f64> {
        let a = self.potential.alphabet();
        let b = a.branching() as f64;
        let logs = log_shell_sums(&self.potential, &[], s_max);
        (1..=s_max).map(|s| (logs[s].exp()) * b / a.size() as f64).collect()
    }

    /// Supremum of `|ρ'_ζ(e,q) − ρ'_η(e,q)| / π_e(ζ,η)^ε` over pairs with
    /// `π_e(ζ,η) ≤ e^{−|q|}`. The cocycle depends only on the first `|q|+m`
    /// letters, so the supremum is a finite maximum.
    pub fn rn_holder_audit(&self, q: &ReducedWord, eps: f64) -> RnHolder {
        let p = &self.potential;
        let a = *p.alphabet();
        let m = p.depth();
        let n = q.len();
        let e = ReducedWord::identity();
        let fixed = n.saturating_sub(m - 1);
        let head = &q.letters()[..fixed];
        // every word of length n + m starting with the fixed part of q
        let mut words: Vec<Vec<Letter>> = vec![head.to_vec()];
        for _ in fixed..n + m {
            words = words
                .into_iter()
                .flat_map(|w| a.successors(w.last().copied()).map(move |t| [w.as_slice(), &[t]].concat()))
                .collect();
        }
        let values: Vec<f64> = words
            .iter()
            .map(|w| {
                let xi = BoundaryWord::extend(&a, &ReducedWord::from_reduced(w.clone()));
                p.rho_phi(&xi, &e, q)
            })
            .collect();
        let mut d_emp = 0.0f64;
        let mut witness = None;
        for c in n.max(fixed)..n + m {
            // group by prefix of length c; words are in lexicographic order so groups are contiguous
            let mut i = 0;
            while i < words.len() {
                let mut j = i;
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                while j < words.len() && words[j][..c] == words[i][..c] {
                    lo = lo.min(values[j]);
                    hi = hi.max(values[j]);
                    j += 1;
                }
                let v = (hi - lo) * (eps * c as f64).exp();
                if v > d_emp {
                    d_emp = v;
                    witness = Some(a.format(&words[i][..c]));
                }
                i = j;
            }
        }
        RnHolder { depth: n, d_emp, scaled: d_emp * (-eps * n as f64).exp(), witness }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    /// `(|q|, min ratio, max ratio)`.
    pub per_depth: Vec<(usize, f64, f64)>,
    pub min: f64,
    pub max: f64,
}

impl ShadowReport {
    fn from_depths(per_depth: Vec<(usize, f64, f64)>) -> Self {
        let min = per_depth.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let max = per_depth.iter().map(|d| d.2).fold(0.0, f64::max);
        ShadowReport { per_depth, min, max }
    }

    /// Smallest `C` with every ratio in `[1/C, C]`.
    pub fn constant(&self) -> f64 {
        self.max.max(1.0 / self.min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnHolder {
    pub depth: usize,
    pub d_emp: f64,
    /// `d_emp e^{−ε|q|}`, which must stay bounded over a sweep in `|q|`.
    pub scaled: f64,
    pub witness: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Alphabet;

    fn f2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn pressure_of_zero_and_constants() {
        let a = f2();
        let l0 = critical_exponent(&Potential::constant(a, 0.0)).unwrap();
        assert!((l0 - 3f64.ln()).abs() < 1e-12);
        let lc = critical_exponent(&Potential::constant(a, 0.8)).unwrap();
        assert!((lc - (3f64.ln() - 0.8)).abs() < 1e-12);
        assert_eq!(critical_exponent(&Potential::constant(Alphabet::new(1).unwrap(), 0.0)), Err(Error::UnsupportedRank(1)));
    }

    #[test]
    fn uniform_masses_and_rn() {
        let a = f2();
        let s = GibbsStream::new(&Potential::constant(a, 0.0)).unwrap();
        assert!((s.potential().table()[0] - 3f64.ln()).abs() < 1e-12);
        for n in 1..=8 {
            for w in words_of_length(&a, n) {
                let expect = 1.0 / (4.0 * 3f64.powi(n as i32 - 1));
                assert!((s.mass(w.letters()) - expect).abs() < 1e-12);
            }
        }
        let e = ReducedWord::identity();
        let qa = a.parse_word("a").unwrap();
        let inside = BoundaryWord::extend(&a, &a.parse_word("a b").unwrap());
        let outside = BoundaryWord::extend(&a, &a.parse_word("b").unwrap());
        assert!((s.rn_derivative(&e, &qa, &inside) - 3.0).abs() < 1e-12);
        assert!((s.rn_derivative(&e, &qa, &outside) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn shell_limit_matches_markov_form() {
        let a = f2();
        let p = Potential::from_fn(a, 2, |w| 0.3 + 0.2 * w[0].0 as f64 - 0.15 * w[1].0 as f64).unwrap();
        let s = GibbsStream::new(&p).unwrap();
        for w in ["a", "b'", "a b", "b a a", "a' b' a"] {
            let l = a.parse_letters(w).unwrap();
            let oracle = shell_limit_mass(&p, &l, 80);
            assert!((s.mass(&l) - oracle).abs() < 1e-12, "{w}: {} vs {oracle}", s.mass(&l));
        }
    }

    #[test]
    fn shadow_integral_uniform_is_one() {
        let s = GibbsStream::new(&Potential::constant(f2(), 0.0)).unwrap();
        for r in s.shadow_integral_audit(20) {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shadow_ratios_within_prior_constant() {
        let p = Potential::from_fn(f2(), 2, |w| 0.3 * w[0].0 as f64 + 0.1 * w[1].0 as f64).unwrap();
        let s = GibbsStream::new(&p).unwrap();
        let c = s.shadow_prior_constant();
        let rep = s.shadow_lemma_audit(10);
        for &(_, lo, hi) in &rep.per_depth {
            assert!(lo >= (1.0 - 1e-12) / c && hi <= c * (1.0 + 1e-12), "{lo} {hi} vs {c}");
        }
        assert_eq!(GibbsStream::new(&Potential::constant(f2(), 0.0)).unwrap().shadow_prior_constant(), 4.0 / 3.0);
    }

    #[test]
    fn rn_holder_constant_potential_vanishes() {
        let a = f2();
        let s = GibbsStream::new(&Potential::constant(a, 1.0)).unwrap();
        let q = a.parse_word("a b a").unwrap();
        assert_eq!(s.rn_holder_audit(&q, 0.5).d_emp, 0.0);
    }
}
