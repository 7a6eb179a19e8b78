//! The random walk read off a decomposition, with an independent
//! stationarity check and a Monte Carlo probe of its hitting measure.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::function::CylinderFn;
use crate::gibbs::GibbsStream;
use crate::measure::MarkovMeasure;
use crate::tree::CylinderIndexer;
use crate::word::{common_prefix, Alphabet, BoundaryWord, Letter, ReducedWord};

/// Consecutive steps a prefix must survive before a path counts as settled.
pub const STABLE_STEPS: usize = 50;
/// Steps after which an unsettled path is given up on.
pub const STEP_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub g: ReducedWord,
    pub mass: f64,
}

/// A finitely supported measure on the group, stepping from `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkMeasure {
    pub alphabet: Alphabet,
    pub base: ReducedWord,
    pub atoms: Vec<Atom>,
    pub total: f64,
}

impl WalkMeasure {
    pub fn new(alphabet: Alphabet, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDecomposition);
        }
        if let Some(a) = atoms.iter().find(|a| !(a.mass > 0.0) || !a.mass.is_finite()) {
            return Err(Error::NonPositive { value: a.mass, location: a.g.display(&alphabet) });
        }
        let total = atoms.iter().map(|a| a.mass).sum();
        Ok(WalkMeasure { alphabet, base: ReducedWord::identity(), atoms, total })
    }

    pub fn point_mass(alphabet: Alphabet, g: ReducedWord) -> Self {
        WalkMeasure::new(alphabet, vec![Atom { g, mass: 1.0 }]).unwrap()
    }

    pub fn support_radius(&self) -> usize {
        self.atoms.iter().map(|a| a.g.len()).max().unwrap_or(0)
    }

    /// The atoms with `|g| ≤ radius`, masses unchanged.
    pub fn truncate(&self, radius: usize) -> Result<WalkMeasure> {
        let atoms = self.atoms.iter().filter(|a| a.g.len() <= radius).cloned().collect();
        WalkMeasure::new(self.alphabet, atoms)
    }

    /// Some two atoms fail to commute, so the support generates a
    /// non-elementary subgroup.
    pub fn is_nondegenerate(&self) -> bool {
        let gens: Vec<&ReducedWord> = self.atoms.iter().map(|a| &a.g).filter(|g| !g.is_empty()).collect();
        gens.iter().enumerate().any(|(i, g)| gens[i + 1..].iter().any(|h| g.mul(h) != h.mul(g)))
    }
}

/// `μ(g) = weight_g ‖f_g‖₁ / ∫F`, the step law whose convolution with `Fν`
/// reproduces the decomposed part of `F`.
pub fn assemble_walk(dec: &Decomposition, stream: &GibbsStream) -> Result<WalkMeasure> {
    if dec.entries.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let a = *stream.potential().alphabet();
    let atoms = dec
        .entries
        .iter()
        .map(|e| Atom { g: e.g.clone(), mass: e.weight * e.l1 / dec.initial_l1 })
        .collect();
    WalkMeasure::new(a, atoms)
}

/// `∫_{[u]} F dν` for any cylinder `u`.
struct CylinderIntegrals<'a> {
    f: &'a CylinderFn,
    nu: &'a MarkovMeasure,
    cell_integrals: Vec<f64>,
    total: f64,
}

impl<'a> CylinderIntegrals<'a> {
    fn new(f: &'a CylinderFn, nu: &'a MarkovMeasure) -> Self {
        let cell_integrals: Vec<f64> = f.values().iter().zip(nu.masses(f.depth())).map(|(v, m)| v * m).collect();
        let total = cell_integrals.iter().sum();
        CylinderIntegrals { f, nu, cell_integrals, total }
    }

    fn cylinder(&self, u: &[Letter]) -> f64 {
        if u.len() >= self.f.depth() {
            self.f.eval_prefix(u) * self.nu.mass(u)
        } else {
            self.cell_integrals[self.f.block(u)].iter().sum()
        }
    }

    /// `(g_*(Fν))([w]) = ∫_{g⁻¹[w]} F dν`.
    fn pushed(&self, g: &[Letter], w: &[Letter]) -> f64 {
        let k = common_prefix(g, w);
        let mut u: Vec<Letter> = g[k.min(w.len())..].iter().rev().map(|l| l.inverse()).collect();
        if k < w.len() {
            u.extend_from_slice(&w[k..]);
            self.cylinder(&u)
        } else {
            // g = w g', and g⁻¹[w] is the complement of g'⁻¹[w_last⁻¹]
            u.push(w[w.len() - 1].inverse());
            self.total - self.cylinder(&u)
        }
    }
}

/// Normalized target masses `(Fν)([w]) / ∫F` of the depth-`depth` cylinders.
pub fn target_masses(f: &CylinderFn, stream: &GibbsStream, depth: usize) -> Vec<f64> {
    let ci = CylinderIntegrals::new(f, stream.measure());
    let ix = CylinderIndexer::new(*f.alphabet(), depth);
    (0..ix.len()).map(|i| ci.cylinder(&ix.word(i)) / ci.total).collect()
}

/// `Σ_w |Σ_g μ(g) g_*(Fν)([w]) − (Fν)([w])| / ∫F` over the depth-`depth`
/// cylinders, computed from the measure and `F` directly.
pub fn stationarity_error(mu: &WalkMeasure, f: &CylinderFn, stream: &GibbsStream, depth: usize) -> f64 {
    let ci = CylinderIntegrals::new(f, stream.measure());
    let ix = CylinderIndexer::new(*f.alphabet(), depth.max(1));
    (0..ix.len())
        .into_par_iter()
        .map(|i| {
            let w = ix.word(i);
            let pushed: f64 = mu.atoms.iter().map(|a| a.mass * ci.pushed(a.g.letters(), &w)).sum();
            (pushed - ci.cylinder(&w)).abs()
        })
        .sum::<f64>()
        / ci.total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStatistics {
    pub total: f64,
    /// `Σ μ(g) |g|`.
    pub first_moment: f64,
    /// `Σ μ(g) log(1 + |g|)`.
    pub log_moment: f64,
    /// `−Σ μ(g) log μ(g)`.
    pub entropy: f64,
    /// `(|g|, −log(max μ at that length) / |g|)` for each length in the support.
    pub decay_rates: Vec<(usize, f64)>,
    /// The rates above increase strictly over at least three lengths.
    pub superexponential: bool,
}

pub fn walk_statistics(mu: &WalkMeasure) -> WalkStatistics {
    let mut first_moment = 0.0;
    let mut log_moment = 0.0;
    let mut entropy = 0.0;
    let mut by_len = std::collections::BTreeMap::new();
    for a in &mu.atoms {
        let d = a.g.len() as f64;
        first_moment += a.mass * d;
        log_moment += a.mass * d.ln_1p();
        entropy -= a.mass * a.mass.ln();
        let e = by_len.entry(a.g.len()).or_insert(0.0f64);
        *e = e.max(a.mass);
    }
    let decay_rates: Vec<(usize, f64)> =
        by_len.into_iter().filter(|&(n, _)| n > 0).map(|(n, m)| (n, -m.ln() / n as f64)).collect();
    let superexponential = decay_rates.len() >= 3 && decay_rates.windows(2).all(|w| w[1].1 > w[0].1);
    WalkStatistics { total: mu.total, first_moment, log_moment, entropy, decay_rates, superexponential }
}

/// The entropy split `−μ log μ = μ log(1/λ) + μ log(1/‖f_g‖₁)`, with the
/// second part re-derived from `F` and the Busemann cocycle at each anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBreakdown {
    pub entropy: f64,
    /// `Σ μ log(1/λ_g)`.
    pub weight_part: f64,
    /// `Σ μ log(1/‖f_g‖₁)` as stored in the decomposition.
    pub norm_part: f64,
    /// `Σ μ (log F(g⁻¹a_g) − ρ'_{a_g}(e, g))`, the same sum recomputed.
    pub norm_recomputed: f64,
    /// `first_moment·‖Φ'‖_∞ + Σ μ log(1/λ) + μ(G)(m‖Φ'‖_∞ + log sup F)`.
    pub bound: f64,
    /// Largest per-atom gap between the stored and recomputed terms.
    pub max_term_gap: f64,
}

pub fn entropy_breakdown(dec: &Decomposition, stream: &GibbsStream, f: &CylinderFn) -> Result<EntropyBreakdown> {
    let mu = assemble_walk(dec, stream)?;
    let phi = stream.potential();
    let a = *phi.alphabet();
    let id = ReducedWord::identity();
    let integral = dec.initial_l1;
    let norm = phi.max_abs();
    let (mut weight_part, mut norm_part, mut norm_recomputed, mut max_term_gap, mut first) = (0.0, 0.0, 0.0, 0.0f64, 0.0);
    for (e, atom) in dec.entries.iter().zip(&mu.atoms) {
        let m = atom.mass;
        weight_part -= m * e.weight.ln();
        let stored = -(e.l1 / integral).ln();
        let anchor = BoundaryWord::extend(&a, &e.g);
        let recomputed = f.eval(&anchor.translate(&e.g.inverse())).ln() - phi.rho_phi(&anchor, &id, &e.g);
        norm_part += m * stored;
        norm_recomputed += m * recomputed;
        max_term_gap = max_term_gap.max((stored - recomputed).abs());
        first += m * e.g.len() as f64;
    }
    let entropy = walk_statistics(&mu).entropy;
    let bound = first * norm + weight_part + mu.total * (phi.depth() as f64 * norm + f.sup().ln());
    Ok(EntropyBreakdown { entropy, weight_part, norm_part, norm_recomputed, bound, max_term_gap })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub radius: usize,
    pub stats: WalkStatistics,
    /// Relative change of entropy and first moment against radius − 2.
    pub entropy_change: Option<f64>,
    pub moment_change: Option<f64>,
}

/// Statistics of the truncations `|g| ≤ r` for every `r` up to two past the
/// support radius, so that the full measure is compared against `r − 2`.
pub fn truncation_sweep(mu: &WalkMeasure) -> Vec<TruncationRow> {
    let top = mu.support_radius() + 2;
    let stats: Vec<Option<WalkStatistics>> = (0..=top).map(|r| mu.truncate(r).ok().map(|t| walk_statistics(&t))).collect();
    let rel = |x: f64, y: f64| if y == 0.0 { if x == 0.0 { 0.0 } else { f64::INFINITY } } else { (x - y).abs() / y.abs() };
    (0..=top)
        .filter_map(|r| {
            let s = stats[r].clone()?;
            let prev = if r >= 2 { stats[r - 2].as_ref() } else { None };
            Some(TruncationRow {
                radius: r,
                entropy_change: prev.map(|p| rel(p.entropy, s.entropy)),
                moment_change: prev.map(|p| rel(p.first_moment, s.first_moment)),
                stats: s,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub cylinder: String,
    pub count: u64,
    pub empirical: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub depth: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub nondegenerate: bool,
    pub unstable: usize,
    pub mean_steps: f64,
    /// One row per depth-`depth` cylinder in indexer order.
    pub rows: Vec<HitRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitComparison {
    pub cylinder: String,
    pub empirical: f64,
    pub target: f64,
    pub stderr: f64,
    pub z: f64,
    /// `|empirical − target| ≤ 4·stderr + slack`.
    pub within: bool,
}

impl HittingReport {
    pub fn compare(&self, target: &[f64], slack: f64) -> Vec<HitComparison> {
        self.rows
            .iter()
            .zip(target)
            .map(|(r, &t)| {
                let dev = (r.empirical - t).abs();
                // binomial error at the target when the sample shows nothing
                let se = if r.stderr > 0.0 { r.stderr } else { (t * (1.0 - t) / self.n_paths as f64).sqrt() };
                HitComparison {
                    cylinder: r.cylinder.clone(),
                    empirical: r.empirical,
                    target: t,
                    stderr: se,
                    z: if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY },
                    within: dev <= 4.0 * se + slack,
                }
            })
            .collect()
    }
}

/// Multiplies `word` on the right by `g`, freely reducing.
fn step(word: &mut Vec<Letter>, g: &[Letter]) {
    for &l in g {
        if word.last() == Some(&l.inverse()) {
            word.pop();
        } else {
            word.push(l);
        }
    }
}

/// Runs `g₁g₂⋯` with steps drawn from `μ/μ(G)` until the depth-`depth`
/// prefix has survived [`STABLE_STEPS`] steps. Path `i` uses stream `i` of
/// a ChaCha generator seeded by `seed`.
pub fn simulate_hitting(mu: &WalkMeasure, n_paths: usize, depth: usize, seed: u64) -> Result<HittingReport> {
    if depth == 0 || n_paths == 0 {
        return Err(Error::Input("depth and path count must be positive".into()));
    }
    let a = mu.alphabet;
    let ix = CylinderIndexer::new(a, depth);
    let dist = WeightedIndex::new(mu.atoms.iter().map(|x| x.mass)).map_err(|e| Error::DegenerateWalk(e.to_string()))?;
    let steps: Vec<&[Letter]> = mu.atoms.iter().map(|x| x.g.letters()).collect();
    let outcomes: Vec<Option<(usize, usize)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut word = Vec::new();
            let mut held = 0usize;
            let mut prefix: Vec<Letter> = Vec::new();
            for t in 1..=STEP_CAP {
                step(&mut word, steps[dist.sample(&mut rng)]);
                if word.len() < depth {
                    held = 0;
                    prefix.clear();
                    continue;
                }
                if prefix.as_slice() == &word[..depth] {
                    held += 1;
                    if held >= STABLE_STEPS {
                        return Some((ix.index(&prefix), t));
                    }
                } else {
                    prefix = word[..depth].to_vec();
                    held = 0;
                }
            }
            None
        })
        .collect();
    let unstable = outcomes.iter().filter(|o| o.is_none()).count();
    if unstable * 1000 > n_paths {
        return Err(Error::Unstabilized { unstable, paths: n_paths });
    }
    let mut counts = vec![0u64; ix.len()];
    let mut steps_total = 0usize;
    for &(cell, t) in outcomes.iter().flatten() {
        counts[cell] += 1;
        steps_total += t;
    }
    let settled = (n_paths - unstable) as f64;
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = c as f64 / settled;
            HitRow { cylinder: a.format(&ix.word(i)), count: c, empirical: p, stderr: (p * (1.0 - p) / settled).sqrt() }
        })
        .collect();
    Ok(HittingReport {
        depth,
        n_paths,
        seed,
        nondegenerate: mu.is_nondegenerate(),
        unstable,
        mean_steps: steps_total as f64 / settled,
        rows,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample χ² homogeneity test on a pair of histograms over the same cylinders.
pub fn compare_histograms(x: &HittingReport, y: &HittingReport) -> Result<ChiSquareTest> {
    if x.rows.len() != y.rows.len() {
        return Err(Error::Input("histograms over different cylinder sets".into()));
    }
    let nx: f64 = x.rows.iter().map(|r| r.count as f64).sum();
    let ny: f64 = y.rows.iter().map(|r| r.count as f64).sum();
    let (kx, ky) = ((ny / nx).sqrt(), (nx / ny).sqrt());
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (r, s) in x.rows.iter().zip(&y.rows) {
        let (a, b) = (r.count as f64, s.count as f64);
        if a + b > 0.0 {
            statistic += (kx * a - ky * b).powi(2) / (a + b);
            bins += 1;
        }
    }
    let dof = bins.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).map_err(|e| Error::Input(e.to_string()))?.sf(statistic)
    };
    Ok(ChiSquareTest { statistic, dof, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::word::words_of_length;

    fn uniform() -> (Alphabet, GibbsStream) {
        let a = Alphabet::new(2).unwrap();
        (a, GibbsStream::new(&Potential::constant(a, 0.0)).unwrap())
    }

    #[test]
    fn point_mass_statistics() {
        let (a, _) = uniform();
        let s = walk_statistics(&WalkMeasure::point_mass(a, ReducedWord::identity()));
        assert_eq!((s.first_moment, s.log_moment, s.entropy), (0.0, 0.0, 0.0));
        let two = WalkMeasure::new(
            a,
            vec![Atom { g: a.parse_word("a").unwrap(), mass: 0.5 }, Atom { g: a.parse_word("b").unwrap(), mass: 0.5 }],
        )
        .unwrap();
        assert!((walk_statistics(&two).entropy - 2f64.ln()).abs() < 1e-15);
        assert!(two.is_nondegenerate());
        assert!(!WalkMeasure::point_mass(a, a.parse_word("a").unwrap()).is_nondegenerate());
    }

    #[test]
    fn uniform_shell_walk_is_stationary() {
        // every shell-1 letter with mass 1/4 fixes the uniform measure
        let (a, s) = uniform();
        let mu = WalkMeasure::new(a, words_of_length(&a, 1).into_iter().map(|g| Atom { g, mass: 0.25 }).collect()).unwrap();
        let f = CylinderFn::constant(a, 1.0);
        for d in 1..4 {
            assert!(stationarity_error(&mu, &f, &s, d) < 1e-14);
        }
        let one = WalkMeasure::point_mass(a, a.parse_word("a").unwrap());
        // a_*ν gives [a] mass 3/4, the other three 1/12 each
        let expect = (0.75 - 0.25) + 3.0 * (0.25 - 1.0 / 12.0);
        assert!((stationarity_error(&one, &f, &s, 1) - expect).abs() < 1e-14);
    }

    #[test]
    fn pushed_masses_sum_to_total() {
        let (a, s) = uniform();
        let f = CylinderFn::from_fn(a, 2, |w| 1.0 + w[0].0 as f64 + 0.5 * w[1].0 as f64);
        let ci = CylinderIntegrals::new(&f, s.measure());
        for g in ["a b", "B", "a a b A", ""] {
            let g = a.parse_word(g).unwrap();
            for d in 1..4 {
                let t: f64 = words_of_length(&a, d).iter().map(|w| ci.pushed(g.letters(), w.letters())).sum();
                assert!((t - ci.total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_walk_hits_its_axis() {
        let (a, _) = uniform();
        let mu = WalkMeasure::point_mass(a, a.parse_word("a").unwrap());
        let rep = simulate_hitting(&mu, 200, 3, 7).unwrap();
        assert!(!rep.nondegenerate);
        let aaa = rep.rows.iter().find(|r| r.cylinder == a.format(&[Letter(0); 3])).unwrap();
        assert_eq!(aaa.count, 200);
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let (a, _) = uniform();
        let mu = WalkMeasure::new(a, words_of_length(&a, 1).into_iter().map(|g| Atom { g, mass: 0.25 }).collect()).unwrap();
        let x = simulate_hitting(&mu, 2000, 2, 11).unwrap();
        let y = simulate_hitting(&mu, 2000, 2, 11).unwrap();
        assert_eq!(x, y);
        let z = simulate_hitting(&mu, 2000, 2, 12).unwrap();
        assert!(compare_histograms(&x, &z).unwrap().p_value > 1e-3);
    }
}
