//! Greedy decomposition of a positive boundary function into unit
//! derivative spikes, one shell of group elements per stage.
//!
//! Each stage takes the current residual `R`, picks the scale at which `R`
//! is nearly constant, places one spike on every `g` of a word-length shell
//! with weight proportional to `R(a_g)`, and subtracts a fixed fraction of
//! the resulting subfunction. On the tree the shadows of a shell partition
//! the boundary, so the residual contracts at a fixed geometric rate.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::CylinderFn;
use crate::gibbs::GibbsStream;
use crate::spike::{DecayCert, Kernel, SpikeConstants, SpikeRecord};
use crate::word::{words_of_length, ReducedWord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposerConfig {
    /// Allowed oscillation `ℓ > 1` of the residual within the chosen scale.
    pub ell: f64,
    /// Spike constants `D_n`; empty means the measured sweep bound for every stage.
    pub d_schedule: Vec<f64>,
    /// Fraction `γ` of each subfunction removed from the residual.
    pub gamma: f64,
    pub tau: f64,
    /// Overlap multiplicity bound of the spike balls.
    pub besicovitch: usize,
    /// Shell width.
    pub delta: f64,
    /// Contraction of the scale rule, `g(x) = m_scale · x`.
    pub m_scale: f64,
    pub stage_cap: usize,
    pub target_l1: f64,
    /// Smallest shell allowed; 0 admits the identity spike.
    pub min_shell: usize,
    /// Largest shell; a stage needing more ends the run early.
    pub shell_cap: usize,
    /// Hölder order for the fourth spike condition.
    pub holder_q: f64,
    /// Multiplier applied to the swept spike constant.
    pub spike_margin: f64,
    /// Largest word length in the spike sweep that fixes `D`.
    pub sweep_len: usize,
}

impl Default for DecomposerConfig {
    fn default() -> Self {
        DecomposerConfig {
            ell: 2.0,
            d_schedule: Vec::new(),
            gamma: 0.5,
            tau: 2.0,
            besicovitch: 1,
            delta: 1.0,
            m_scale: (-1.0f64).exp(),
            stage_cap: 40,
            target_l1: 1e-2,
            min_shell: 1,
            shell_cap: 9,
            holder_q: 1.0,
            spike_margin: 1.1,
            sweep_len: 6,
        }
    }
}

impl DecomposerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(m.to_string()));
        if !(self.ell > 1.0) {
            return bad("ell must exceed 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.m_scale > 0.0 && self.m_scale < 1.0) {
            return bad("m_scale must lie in (0, 1)");
        }
        if self.besicovitch == 0 || !(self.target_l1 > 0.0) || !(self.tau > 1.0) {
            return bad("besicovitch, target_l1 and tau must be positive (tau > 1)");
        }
        if self.d_schedule.iter().any(|d| !(*d >= 1.0)) {
            return bad("spike constants must be at least 1");
        }
        Ok(())
    }

    fn spike_constant(&self, stage: usize, measured: f64) -> f64 {
        match self.d_schedule.as_slice() {
            [] => measured,
            s => s[stage.min(s.len() - 1)],
        }
    }

    /// `1 − γ/(2D²ℓ³C_G B)`.
    pub fn contraction(&self, d: f64, c_g: f64) -> f64 {
        1.0 - self.gamma / (2.0 * d * d * self.ell.powi(3) * c_g * self.besicovitch as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub n: usize,
    /// Scale actually used, `e^{−j}`.
    pub eps_n: f64,
    pub eps_depth: usize,
    /// Smallest spike scale passing the spike-scale inequality.
    pub s_n: f64,
    /// Scale and spike depth given by the unrelaxed scale and spike-scale rules.
    pub eps_theory: f64,
    pub s_theory: f64,
    pub shell: usize,
    pub d_n: f64,
    pub lambda_entries: Vec<(ReducedWord, f64)>,
    pub residual_l1: f64,
    pub residual_sup: f64,
    pub t_inf: f64,
    pub t_eps: f64,
    /// `min h/R` over the cover, and the certified lower bound.
    pub lower_ratio: f64,
    pub lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub g: ReducedWord,
    /// Accumulated `Σ γ λ_g` over stages.
    pub weight: f64,
    /// `‖f_g‖₁` against the Gibbs measure.
    pub l1: f64,
    pub normalizer: f64,
}

/// Why the stage loop ended.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StopReason {
    Target,
    StageCap,
    /// The next stage needed a shell beyond the configured cap.
    ShellCap { stage: usize, shell: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub entries: Vec<Entry>,
    pub stages: Vec<StageTrace>,
    pub initial_l1: f64,
    pub initial_sup: f64,
    pub final_residual: f64,
    pub stop: StopReason,
    pub residual: CylinderFn,
    pub spike_constant: f64,
    pub c_g: f64,
    pub beta_g: f64,
    pub config: DecomposerConfig,
}

/// `λ_i = R(a_i)/(2DC_G t_ε² B)` and `h = Σ λ_i f_i`, with both bounds of the
/// subfunction step checked on every cell: `h ≤ R` everywhere and
/// `h ≥ R/(2D²C_G t_ε³ B)` on the union of the spike balls.
pub struct Subfunction {
    pub h: CylinderFn,
    pub lambdas: Vec<f64>,
    pub lower_ratio: f64,
    pub lower_bound: f64,
}

/// Hypotheses of the subfunction step, checked clause by clause.
#[allow(clippy::too_many_arguments)]
pub fn subfunction_step(
    r: &CylinderFn,
    spikes: &[(SpikeRecord, SpikeConstants)],
    cert: &DecayCert,
    cfg: &DecomposerConfig,
    eps_depth: usize,
    d: f64,
) -> Result<Subfunction> {
    if spikes.is_empty() {
        return Err(Error::Hypothesis("no spikes".into()));
    }
    let a = *r.alphabet();
    let t_inf = r.t_inf();
    let t_eps = r.t_eps(eps_depth);
    let eps = (-(eps_depth as f64)).exp();
    let beta = cert.beta_g;
    let s_min = spikes.iter().map(|s| s.0.s).min().unwrap();
    let s_max = spikes.iter().map(|s| s.0.s).max().unwrap();
    for (rec, c) in spikes {
        if rec.radius > eps * (1.0 + 1e-12) {
            return Err(Error::Hypothesis(format!("radius {} exceeds scale {eps}", rec.radius)));
        }
        if t_inf * (-beta * rec.s as f64).exp() > eps.powf(beta) * t_eps * (1.0 + 1e-12) {
            return Err(Error::Hypothesis(format!("spike depth {} too shallow for t_inf {t_inf}", rec.s)));
        }
        if c.c > d {
            return Err(Error::Hypothesis(format!("spike at {} has constant {} > D = {d}", rec.g.display(&a), c.c)));
        }
    }
    if (s_max - s_min) as f64 > cfg.delta {
        return Err(Error::Hypothesis(format!("shell width {} exceeds {}", s_max - s_min, cfg.delta)));
    }
    let n = r.depth().max(spikes.iter().map(|s| s.0.depth()).max().unwrap());
    let r = r.refine(n);
    let cells = a.count_words(n);
    // multiplicity of the spike balls [g]
    let mut cover = vec![0i64; cells + 1];
    for (rec, _) in spikes {
        let blk = r.block(rec.g.letters());
        cover[blk.start] += 1;
        cover[blk.end] -= 1;
    }
    let mut acc = 0i64;
    let cover: Vec<i64> = cover[..cells]
        .iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect();
    let mult = cover.iter().copied().max().unwrap_or(0);
    if mult as usize > cfg.besicovitch {
        return Err(Error::Hypothesis(format!("spike balls overlap {mult} times, bound {}", cfg.besicovitch)));
    }
    let b = cfg.besicovitch as f64;
    let denom = 2.0 * d * cert.c_g * t_eps * t_eps * b;
    let lambdas: Vec<f64> = spikes.iter().map(|(rec, _)| r.eval(&rec.anchor) / denom).collect();
    let diffs: Vec<f64> = spikes
        .par_iter()
        .zip(&lambdas)
        .fold(
            || vec![0.0; cells + 1],
            |mut diff, ((rec, _), &l)| {
                rec.accumulate(l, n, &a, &mut diff);
                diff
            },
        )
        .reduce(
            || vec![0.0; cells + 1],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(u, v)| *u += v);
                x
            },
        );
    let mut run = 0.0;
    let values: Vec<f64> = diffs[..cells]
        .iter()
        .map(|d| {
            run += d;
            run
        })
        .collect();
    let h = CylinderFn::new(a, n, values)?;
    let lower_bound = 1.0 / (2.0 * d * d * cert.c_g * t_eps.powi(3) * b);
    let mut lower_ratio = f64::INFINITY;
    for (i, (hv, rv)) in h.values().iter().zip(r.values()).enumerate() {
        if *hv > *rv * (1.0 + 1e-12) {
            return Err(Error::Certification(format!("subfunction exceeds residual on cell {i}: {hv} > {rv}")));
        }
        if cover[i] > 0 {
            lower_ratio = lower_ratio.min(hv / rv);
        }
    }
    if lower_ratio < lower_bound * (1.0 - 1e-12) {
        return Err(Error::Certification(format!("lower bound {lower_bound} fails: min h/R = {lower_ratio}")));
    }
    Ok(Subfunction { h, lambdas, lower_ratio, lower_bound })
}

/// Measured spike constant bound `D`: the sweep maximum times the margin.
pub fn measured_spike_constant(stream: &GibbsStream, kernel: &Kernel, f: &CylinderFn, cfg: &DecomposerConfig) -> Result<f64> {
    let rows = crate::spike::spike_sweep(stream, kernel, f, cfg.sweep_len, cfg.holder_q)?;
    let worst = rows.iter().map(|r| r.max_c).fold(1.0, f64::max);
    Ok(worst * cfg.spike_margin)
}

/// Runs stages until the residual drops below the target or the stage cap.
pub fn decompose(
    f: &CylinderFn,
    stream: &GibbsStream,
    kernel: &Kernel,
    cert: &DecayCert,
    cfg: &DecomposerConfig,
) -> Result<Decomposition> {
    cfg.validate()?;
    f.check_positive()?;
    let a = *f.alphabet();
    let nu = stream.measure();
    let measured = if cfg.d_schedule.is_empty() { measured_spike_constant(stream, kernel, f, cfg)? } else { 0.0 };
    let initial_l1 = f.integrate(nu);
    let initial_sup = f.sup();
    let mut r = f.clone();
    let mut weights: HashMap<ReducedWord, Entry> = HashMap::new();
    let mut constants: HashMap<ReducedWord, SpikeConstants> = HashMap::new();
    let mut stages = Vec::new();
    let mut prev_eps = 1.0f64;
    let mut l1 = initial_l1;
    let mut stop = StopReason::StageCap;
    for n in 0..cfg.stage_cap {
        if l1 <= cfg.target_l1 {
            stop = StopReason::Target;
            break;
        }
        let d = cfg.spike_constant(n, measured);
        let t_inf = r.t_inf();
        let j = (0..=r.depth()).find(|&j| r.t_eps(j) <= cfg.ell).unwrap();
        let t_eps = r.t_eps(j);
        let beta = cert.beta_g;
        let s_needed = j as f64 + (t_inf / t_eps).ln() / beta;
        let s_n = s_needed.max(j as f64).max(cfg.min_shell as f64);
        let shell = (s_n - 1e-9).ceil().max(0.0) as usize;
        // the unrelaxed scale and spike-scale rules, recorded for comparison
        let (eps_theory, s_theory) = {
            let order = cfg.holder_q;
            let scale = cfg.m_scale * prev_eps;
            let hold = r.holder(scale, order).into_iter().fold(0.0, f64::max);
            let bound = if hold > 0.0 { (cfg.ell - 1.0) * r.inf() / hold } else { f64::INFINITY };
            let eps_t = bound.min(scale.powf(order)).powf(1.0 / order);
            let s_t = -(eps_t * (cfg.ell / t_inf).powf(1.0 / beta)).ln();
            (eps_t, s_t)
        };
        if shell > cfg.shell_cap {
            stop = StopReason::ShellCap { stage: n, shell };
            break;
        }
        let words = words_of_length(&a, shell);
        let spikes: Vec<(SpikeRecord, SpikeConstants)> = words
            .par_iter()
            .map(|g| {
                let rec = SpikeRecord::unit(stream, g, f)?;
                let c = rec.audit(kernel, cfg.holder_q);
                Ok((rec, c))
            })
            .collect::<Result<_>>()?;
        for (rec, c) in &spikes {
            constants.insert(rec.g.clone(), *c);
            if c.c > d {
                return Err(Error::Aborted {
                    stage: n,
                    reason: format!("spike at {} has constant {:.4} above D = {d:.4}", rec.g.display(&a), c.c),
                });
            }
        }
        let sub = subfunction_step(&r, &spikes, cert, cfg, j, d).map_err(|err| Error::Aborted { stage: n, reason: err.to_string() })?;
        let next = r.refine(sub.h.depth()).sub(&sub.h.scale(cfg.gamma));
        if let Err(err) = next.check_positive() {
            return Err(Error::Aborted { stage: n, reason: format!("residual lost positivity: {err}") });
        }
        for ((rec, _), &lambda) in spikes.iter().zip(&sub.lambdas) {
            let entry = weights.entry(rec.g.clone()).or_insert(Entry {
                g: rec.g.clone(),
                weight: 0.0,
                l1: rec.l1,
                normalizer: rec.normalizer,
            });
            entry.weight += cfg.gamma * lambda;
        }
        r = next;
        l1 = r.integrate(nu);
        stages.push(StageTrace {
            n,
            eps_n: (-(j as f64)).exp(),
            eps_depth: j,
            s_n,
            eps_theory,
            s_theory,
            shell,
            d_n: d,
            lambda_entries: spikes.iter().zip(&sub.lambdas).map(|((rec, _), &l)| (rec.g.clone(), l)).collect(),
            residual_l1: l1,
            residual_sup: r.sup(),
            t_inf,
            t_eps,
            lower_ratio: sub.lower_ratio,
            lower_bound: sub.lower_bound,
        });
        prev_eps = (-(j as f64)).exp();
    }
    if l1 <= cfg.target_l1 {
        stop = StopReason::Target;
    }
    if stages.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let mut entries: Vec<Entry> = weights.into_values().collect();
    entries.sort_by(|x, y| (x.g.len(), &x.g).cmp(&(y.g.len(), &y.g)));
    let spike_constant = stages.iter().map(|s| s.d_n).fold(0.0, f64::max);
    Ok(Decomposition {
        entries,
        stages,
        initial_l1,
        initial_sup,
        final_residual: l1,
        stop,
        residual: r,
        spike_constant,
        c_g: cert.c_g,
        beta_g: cert.beta_g,
        config: cfg.clone(),
    })
}

impl Decomposition {
    /// `F − Σ weight_g f_g`, recomputed from the entries alone.
    pub fn recompute_residual(&self, stream: &GibbsStream, f: &CylinderFn) -> Result<CylinderFn> {
        let a = *f.alphabet();
        let n = self.residual.depth();
        let cells = a.count_words(n);
        let mut diff = vec![0.0; cells + 1];
        for e in &self.entries {
            SpikeRecord::unit(stream, &e.g, f)?.accumulate(e.weight, n, &a, &mut diff);
        }
        let mut run = 0.0;
        let sum: Vec<f64> = diff[..cells]
            .iter()
            .map(|d| {
                run += d;
                run
            })
            .collect();
        Ok(f.refine(n).sub(&CylinderFn::new(a, n, sum)?))
    }

    /// Per-stage contraction factors `1 − γ/(2D_n²ℓ³C_G B)`.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.stages.iter().map(|s| self.config.contraction(s.d_n, self.c_g)).collect()
    }

    /// Partial sums of `Σ weight_g ‖f_g‖₁ |g|`, stage by stage.
    pub fn moment_partial_sums(&self) -> Vec<f64> {
        let l1: HashMap<&ReducedWord, f64> = self.entries.iter().map(|e| (&e.g, e.l1)).collect();
        let mut total = 0.0;
        self.stages
            .iter()
            .map(|s| {
                total += s
                    .lambda_entries
                    .iter()
                    .map(|(g, l)| self.config.gamma * l * l1[g] * g.len() as f64)
                    .sum::<f64>();
                total
            })
            .collect()
    }

    /// `Σ weight_g ‖f_g‖₁ d(e, g)`.
    pub fn moment_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.weight * e.l1 * e.g.len() as f64).sum()
    }

    /// Partial sums of the majorant `Σ_{i ≤ n} (S_i + δ) ρ^i ‖R_0‖₁`, where
    /// `ρ^i` is the product of the first `i` contraction factors.
    pub fn majorant_partial_sums(&self) -> Vec<f64> {
        let mut prod = 1.0;
        let mut total = 0.0;
        self.stages
            .iter()
            .zip(self.contraction_factors())
            .map(|(s, rho)| {
                total += (s.s_n + self.config.delta) * prod * self.initial_l1;
                prod *= rho;
                total
            })
            .collect()
    }

    /// Closed form of the full majorant with `S_i + δ ≤ a + b i`:
    /// `‖R_0‖₁ (a/(1−ρ) + bρ/(1−ρ)²)` for the worst contraction `ρ`.
    pub fn majorant_total(&self) -> f64 {
        let rho = self.contraction_factors().into_iter().fold(0.0, f64::max);
        let a = self.stages[0].s_n + self.config.delta;
        let b = self
            .stages
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, s)| (s.s_n + self.config.delta - a) / i as f64)
            .fold(0.0, f64::max);
        self.initial_l1 * geometric_moment(a, b, rho)
    }
}

/// `Σ_{i ≥ 0} (a + b i) ρ^i`.
pub fn geometric_moment(a: f64, b: f64, rho: f64) -> f64 {
    a / (1.0 - rho) + b * rho / ((1.0 - rho) * (1.0 - rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MeasureId;
    use crate::potential::Potential;
    use crate::word::Alphabet;

    fn uniform() -> (Alphabet, GibbsStream, Kernel, DecayCert) {
        let a = Alphabet::new(2).unwrap();
        let s = GibbsStream::new(&Potential::constant(a, 0.0)).unwrap();
        let k = Kernel::new(&s, MeasureId::Hausdorff).unwrap();
        let cert = k.decay_audit(10, 10).unwrap();
        (a, s, k, cert)
    }

    #[test]
    fn single_identity_spike() {
        let (a, s, _, cert) = uniform();
        let one = CylinderFn::constant(a, 1.0);
        let rec = SpikeRecord::unit(&s, &ReducedWord::identity(), &one).unwrap();
        let c = SpikeConstants { c1: 1.0, c2: 0.0, c3: 1.0, c4: 0.0, c: 1.0 };
        let unit_cert = DecayCert { c_g: 1.0, ..cert };
        let sub = subfunction_step(&one, &[(rec, c)], &unit_cert, &DecomposerConfig::default(), 0, 1.0).unwrap();
        assert_eq!(sub.lambdas, vec![0.5]);
        assert!(sub.h.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn geometric_moment_closed_form() {
        let direct: f64 = (0..2000).map(|i| (2.0 + 0.5 * i as f64) * 0.9f64.powi(i)).sum();
        assert!((geometric_moment(2.0, 0.5, 0.9) - direct).abs() < 1e-9);
    }

    #[test]
    fn uniform_stage_contracts() {
        let (a, s, k, cert) = uniform();
        let one = CylinderFn::constant(a, 1.0);
        let cfg = DecomposerConfig { stage_cap: 3, ..Default::default() };
        let dec = decompose(&one, &s, &k, &cert, &cfg).unwrap();
        let mut prev = 1.0;
        for (st, rho) in dec.stages.iter().zip(dec.contraction_factors()) {
            assert!(st.residual_l1 <= rho * prev + 1e-15);
            // symmetric shell: equal weights
            let l0 = st.lambda_entries[0].1;
            assert!(st.lambda_entries.iter().all(|(_, l)| (l - l0).abs() < 1e-12 * l0));
            prev = st.residual_l1;
        }
    }
}
