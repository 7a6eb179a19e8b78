use freewalk_core::decompose::{decompose, Decomposition, StopReason};
use freewalk_core::gibbs::{critical_exponent, shell_slope};
use freewalk_core::h2::comparison_audit;
use freewalk_core::spike::spike_sweep;
use freewalk_core::walk::{assemble_walk, compare_histograms, entropy_breakdown, target_masses, truncation_sweep};
use freewalk_core::word::words_of_length;
use freewalk_core::{simulate_hitting, stationarity_error, walk_statistics, BoundaryWord, CylinderFn, DecayCert, GibbsStream, Kernel, Letter, ReducedWord, Setup, WalkMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, Stage};
use crate::error::{InStage, Result};
use crate::report::{num, Reporter};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` for diagnostics that are reported but not judged.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub checks: Vec<Check>,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        StageReport { stage, checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed: Some(passed), detail });
    }

    fn note(&mut self, name: &str, detail: String) {
        self.checks.push(Check { name: name.into(), passed: None, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }
}

/// State shared by the stages of one run.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub setup: Setup,
    pub stream: GibbsStream,
    /// The target density scaled to unit mass.
    pub target: CylinderFn,
    kernel: Option<(Kernel, DecayCert)>,
    decomposition: Option<Decomposition>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let setup = cfg.setup()?;
        let stream = setup.stream().in_stage(Stage::Pressure)?;
        let target = setup.target.scale(1.0 / setup.target.integrate(stream.measure()));
        Ok(Context { cfg, setup, stream, target, kernel: None, decomposition: None })
    }

    fn ensure_kernel(&mut self, stage: Stage) -> Result<()> {
        if self.kernel.is_none() {
            let k = Kernel::new(&self.stream, self.setup.reference).in_stage(stage)?;
            let r = self.setup.decay_radius;
            let cert = k.decay_audit(r, r).in_stage(stage)?;
            self.kernel = Some((k, cert));
        }
        Ok(())
    }

    fn ensure_decomposition(&mut self, stage: Stage) -> Result<()> {
        if self.decomposition.is_none() {
            self.ensure_kernel(stage)?;
            let (k, cert) = self.kernel.as_ref().unwrap();
            let d = decompose(&self.target, &self.stream, k, cert, &self.setup.decomposer).in_stage(stage)?;
            self.decomposition = Some(d);
        }
        Ok(())
    }
}

pub fn run_stage(stage: Stage, ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    match stage {
        Stage::Pressure => pressure(ctx, out),
        Stage::Gibbs => gibbs(ctx, out),
        Stage::AuditSpikes => audit_spikes(ctx, out),
        Stage::Decompose => decomposition(ctx, out),
        Stage::Walk => walk(ctx, out),
        Stage::ValidateH2 => validate_h2(ctx, out),
    }
}

fn pressure(ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    let mut rep = StageReport::new(Stage::Pressure);
    let p = &ctx.setup.potential;
    let a = p.alphabet();
    let lambda = ctx.stream.pressure();
    let slope = shell_slope(p, 200, 400);
    let flipped = critical_exponent(&p.flip()).in_stage(Stage::Pressure)?;
    let (cycle_mean, _) = ctx.stream.potential().min_mean_cycle();
    let log_branching = (a.branching() as f64).ln();
    out.csv(
        "pressure.csv",
        &["quantity", "value"],
        [
            ("critical_exponent", lambda),
            ("shell_slope", slope),
            ("flip_critical_exponent", flipped),
            ("log_branching", log_branching),
            ("normalized_min_cycle_mean", cycle_mean),
            ("sym_defect", ctx.stream.sym_defect()),
        ]
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), num(v)]),
    )?;
    rep.note("critical-exponent", format!("λ₀ = {lambda:.12} (log(2k−1) = {log_branching:.12})"));
    let gap = (lambda - slope).abs();
    rep.check("shell-slope", gap < 1e-6, format!("spectral vs shell slope gap {gap:.2e}"));
    if p.is_constant() {
        let expect = log_branching - p.table()[0];
        let err = (lambda - expect).abs();
        rep.check("constant-oracle", err < 1e-9, format!("|λ₀ − (log(2k−1) − c)| = {err:.2e}"));
    }
    let ferr = (lambda - flipped).abs();
    rep.check("flip-invariance", ferr < 1e-10, format!("|λ(Φ) − λ(Φ̂)| = {ferr:.2e}"));
    rep.check("normalized-cycles-positive", cycle_mean > 0.0, format!("minimum cycle mean {cycle_mean:.6}"));
    Ok(rep)
}

fn random_word(rng: &mut ChaCha8Rng, ctx: &Context, max_len: usize) -> ReducedWord {
    let a = ctx.setup.potential.alphabet();
    let n = rng.gen_range(0..=max_len);
    let mut letters: Vec<Letter> = Vec::with_capacity(n);
    for _ in 0..n {
        let next: Vec<Letter> = a.successors(letters.last().copied()).collect();
        letters.push(next[rng.gen_range(0..next.len())]);
    }
    ReducedWord::from_reduced(letters)
}

fn gibbs(ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    let mut rep = StageReport::new(Stage::Gibbs);
    let s = &ctx.stream;
    let a = *ctx.setup.potential.alphabet();
    let mut rows = Vec::new();
    for n in 1..=3 {
        for w in words_of_length(&a, n) {
            rows.push(vec![n.to_string(), w.display(&a), num(s.mass(w.letters()))]);
        }
    }
    out.csv("gibbs_masses.csv", &["depth", "cylinder", "mass"], rows)?;

    let total: f64 = words_of_length(&a, 1).iter().map(|w| s.mass(w.letters())).sum();
    let mut additivity = (total - 1.0).abs();
    for n in 1..=6 {
        for w in words_of_length(&a, n) {
            let children: f64 = a.successors(w.last()).map(|t| s.mass(w.push(t).letters())).sum();
            additivity = additivity.max((children - s.mass(w.letters())).abs());
        }
    }
    rep.check("additivity", additivity < 1e-12, format!("total mass and child sums within {additivity:.2e} to depth 6"));

    let audits = &ctx.cfg.audits;
    if audits.radon_nikodym {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
        let (mut chain, mut equi) = (0.0f64, 0.0f64);
        for _ in 0..audits.rn_instances {
            let (p, q, r, g) = (random_word(&mut rng, ctx, 4), random_word(&mut rng, ctx, 4), random_word(&mut rng, ctx, 4), random_word(&mut rng, ctx, 4));
            let xi = BoundaryWord::seeded(&a, &random_word(&mut rng, ctx, 3), rng.gen());
            let pq = s.rn_derivative(&p, &q, &xi);
            chain = chain.max((pq * s.rn_derivative(&q, &r, &xi) / s.rn_derivative(&p, &r, &xi) - 1.0).abs());
            equi = equi.max((s.rn_derivative(&g.mul(&p), &g.mul(&q), &xi.translate(&g)) / pq - 1.0).abs());
        }
        rep.check(
            "radon-nikodym",
            chain < 1e-10 && equi < 1e-10,
            format!("chain rule {chain:.2e}, equivariance {equi:.2e} over {} instances", audits.rn_instances),
        );
    }
    if audits.shadow {
        let shadow = s.shadow_lemma_audit(audits.shadow_radius);
        let c = s.shadow_prior_constant();
        out.csv(
            "shadow.csv",
            &["radius", "min_ratio", "max_ratio"],
            shadow.per_depth.iter().map(|(n, lo, hi)| vec![n.to_string(), num(*lo), num(*hi)]),
        )?;
        let ok = shadow.min >= (1.0 - 1e-12) / c && shadow.max <= c * (1.0 + 1e-12);
        rep.check("shadow-lemma", ok, format!("ratios in [{:.4}, {:.4}] against C = {c:.4}", shadow.min, shadow.max));
    }
    Ok(rep)
}

fn audit_spikes(ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    let mut rep = StageReport::new(Stage::AuditSpikes);
    let len = ctx.cfg.audits.spike_len;
    let q = ctx.setup.decomposer.holder_q;
    let m = ctx.stream.potential().depth();
    ctx.ensure_kernel(Stage::AuditSpikes)?;
    let (k, cert) = ctx.kernel.as_ref().unwrap();
    out.json("kernel_decay.json", cert)?;
    let rows = spike_sweep(&ctx.stream, k, &ctx.target, len, q).in_stage(Stage::AuditSpikes)?;
    out.csv(
        "spikes.csv",
        &["length", "count", "max_c", "max_c1", "max_c2", "max_c3", "max_c4", "witness"],
        rows.iter().map(|r| {
            vec![r.length.to_string(), r.count.to_string(), num(r.max_c), num(r.max_c1), num(r.max_c2), num(r.max_c3), num(r.max_c4), r.witness.clone()]
        }),
    )?;
    let early = rows.iter().filter(|r| r.length <= m + 2).map(|r| r.max_c).fold(0.0, f64::max);
    let late = rows.iter().filter(|r| r.length > m + 2).map(|r| r.max_c).fold(0.0, f64::max);
    let finite = rows.iter().all(|r| r.max_c.is_finite());
    rep.check("spike-constants-finite", finite, format!("{} lengths up to {len}", rows.len()));
    rep.check("spike-constants-bounded", late <= early * (1.0 + 1e-9), format!("max C up to |g| = {} is {early:.4}, beyond {late:.4}", m + 2));
    rep.note("kernel-decay", format!("C_G = {:.4}, α = {:.4}, β = {:.4}", cert.c_g, cert.alpha_g, cert.beta_g));
    Ok(rep)
}

fn decomposition(ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    let mut rep = StageReport::new(Stage::Decompose);
    ctx.ensure_decomposition(Stage::Decompose)?;
    let d = ctx.decomposition.as_ref().unwrap();
    let a = *ctx.setup.potential.alphabet();
    out.csv(
        "decomposition_stages.csv",
        &["stage", "shell", "eps", "s", "d", "residual_l1", "residual_sup", "t_inf", "t_eps", "lower_ratio", "lower_bound"],
        d.stages.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.shell.to_string(),
                num(s.eps_n),
                num(s.s_n),
                num(s.d_n),
                num(s.residual_l1),
                num(s.residual_sup),
                num(s.t_inf),
                num(s.t_eps),
                num(s.lower_ratio),
                num(s.lower_bound),
            ]
        }),
    )?;
    out.csv(
        "decomposition_entries.csv",
        &["g", "length", "weight", "l1", "normalizer"],
        d.entries.iter().map(|e| vec![e.g.display(&a), e.g.len().to_string(), num(e.weight), num(e.l1), num(e.normalizer)]),
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        stop: &'a StopReason,
        stages: usize,
        entries: usize,
        initial_l1: f64,
        initial_sup: f64,
        final_residual: f64,
        spike_constant: f64,
        c_g: f64,
        beta_g: f64,
        config: &'a freewalk_core::DecomposerConfig,
    }
    out.json(
        "decomposition.json",
        &Summary {
            stop: &d.stop,
            stages: d.stages.len(),
            entries: d.entries.len(),
            initial_l1: d.initial_l1,
            initial_sup: d.initial_sup,
            final_residual: d.final_residual,
            spike_constant: d.spike_constant,
            c_g: d.c_g,
            beta_g: d.beta_g,
            config: &d.config,
        },
    )?;

    let (mut l1_bound, mut sup_bound) = (d.initial_l1, d.initial_sup);
    let (mut prev_l1, mut prev_sup) = (d.initial_l1, d.initial_sup);
    let (mut l1_ok, mut sup_ok, mut steps_ok) = (true, true, true);
    for (st, rho) in d.stages.iter().zip(d.contraction_factors()) {
        l1_bound *= rho;
        sup_bound *= rho;
        l1_ok &= st.residual_l1 <= l1_bound * (1.0 + 1e-12) && st.residual_l1 < prev_l1;
        sup_ok &= st.residual_sup <= sup_bound * (1.0 + 1e-12) && st.residual_sup <= prev_sup * (1.0 + 1e-12);
        steps_ok &= st.t_eps <= d.config.ell && st.lambda_entries.iter().all(|(_, l)| *l >= 0.0);
        prev_l1 = st.residual_l1;
        prev_sup = st.residual_sup;
    }
    rep.check("l1-contraction", l1_ok, format!("residual {:.4e} after {} stages", d.final_residual, d.stages.len()));
    rep.check("sup-contraction", sup_ok, format!("sup residual {:.4e}", d.stages.last().map_or(d.initial_sup, |s| s.residual_sup)));
    rep.check("stage-rules", steps_ok, "t_ε ≤ ℓ and λ ≥ 0 at every stage".into());
    let inf = d.residual.inf();
    rep.check("residual-positive", inf > 0.0, format!("min residual {inf:.4e}"));
    let drift = d.recompute_residual(&ctx.stream, &ctx.target).in_stage(Stage::Decompose)?.sub(&d.residual).abs().sup();
    rep.check("residual-recomputed", drift < 1e-10, format!("stored vs recomputed residual {drift:.2e}"));
    let moments = d.moment_partial_sums();
    let majorant = d.majorant_partial_sums();
    let under = moments.iter().zip(&majorant).all(|(m, b)| *m <= *b * (1.0 + 1e-12));
    rep.check(
        "moment-majorant",
        under,
        format!("moment {:.4} ≤ majorant {:.4}", moments.last().copied().unwrap_or(0.0), majorant.last().copied().unwrap_or(0.0)),
    );
    rep.note("stop", format!("{:?}", d.stop));
    Ok(rep)
}

fn walk(ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    let mut rep = StageReport::new(Stage::Walk);
    ctx.ensure_decomposition(Stage::Walk)?;
    let d = ctx.decomposition.as_ref().unwrap();
    let (s, f) = (&ctx.stream, &ctx.target);
    let a = *ctx.setup.potential.alphabet();
    let mu: WalkMeasure = assemble_walk(d, s).in_stage(Stage::Walk)?;
    out.csv("walk_atoms.csv", &["g", "length", "mass"], mu.atoms.iter().map(|x| vec![x.g.display(&a), x.g.len().to_string(), num(x.mass)]))?;

    let stats = walk_statistics(&mu);
    let eb = entropy_breakdown(d, s, f).in_stage(Stage::Walk)?;
    let sweep = truncation_sweep(&mu);
    #[derive(Serialize)]
    struct Summary<'a> {
        nondegenerate: bool,
        support_radius: usize,
        statistics: &'a freewalk_core::walk::WalkStatistics,
        entropy: &'a freewalk_core::walk::EntropyBreakdown,
    }
    out.json(
        "walk.json",
        &Summary { nondegenerate: mu.is_nondegenerate(), support_radius: mu.support_radius(), statistics: &stats, entropy: &eb },
    )?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    out.csv(
        "truncation.csv",
        &["radius", "total", "entropy", "first_moment", "entropy_change", "moment_change"],
        sweep.iter().map(|r| {
            vec![r.radius.to_string(), num(r.stats.total), num(r.stats.entropy), num(r.stats.first_moment), opt(r.entropy_change), opt(r.moment_change)]
        }),
    )?;

    let err: Vec<f64> = (1..=3).map(|depth| stationarity_error(&mu, f, s, depth)).collect();
    let gap = err.iter().map(|e| (e - d.final_residual).abs()).fold(0.0, f64::max);
    rep.check("stationarity", gap < 1e-8, format!("stationarity error {:.6e} vs residual {:.6e}", err[2], d.final_residual));
    let finite = stats.entropy.is_finite() && stats.first_moment.is_finite();
    rep.check("statistics-finite", finite, format!("H = {:.6}, first moment {:.6}", stats.entropy, stats.first_moment));
    let split = (eb.weight_part + eb.norm_part - eb.entropy).abs();
    rep.check(
        "entropy-decomposition",
        eb.max_term_gap < 1e-9 && split < 1e-9 && eb.entropy <= eb.bound,
        format!("split gap {split:.1e}, term gap {:.1e}, H ≤ bound {:.4}", eb.max_term_gap, eb.bound),
    );
    // the last row compares the whole walk with its truncation at the
    // support radius; the row at the support radius is the informative one
    let row = |r: &freewalk_core::walk::TruncationRow| {
        let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:.2}%", 100.0 * v));
        format!("radius {} vs {}: entropy {}, moment {}", r.radius, r.radius.saturating_sub(2), pct(r.entropy_change), pct(r.moment_change))
    };
    let last = sweep.last().expect("sweep has rows");
    let top = sweep.iter().find(|r| r.radius == mu.support_radius()).filter(|r| r.entropy_change.is_some());
    let change = match top {
        Some(t) => format!("{}; {}", row(last), row(t)),
        None => row(last),
    };
    if d.stop == StopReason::Target {
        let stable = last.entropy_change.is_some_and(|c| c <= 0.01) && last.moment_change.is_some_and(|c| c <= 0.01);
        rep.check("truncation-stable", stable, change);
    } else {
        // a capped run has mass at the cap, so its tail is not converged
        rep.note("truncation-stable", change);
    }

    let audits = &ctx.cfg.audits;
    if audits.hitting {
        let (n, depth, seed) = (audits.hitting_paths, audits.hitting_depth, ctx.cfg.seed);
        let first = simulate_hitting(&mu, n, depth, seed).in_stage(Stage::Walk)?;
        let again = simulate_hitting(&mu, n, depth, seed).in_stage(Stage::Walk)?;
        let other = simulate_hitting(&mu, n, depth, seed.wrapping_add(1)).in_stage(Stage::Walk)?;
        let slack = stationarity_error(&mu, f, s, depth);
        let cmp = first.compare(&target_masses(f, s, depth), slack);
        out.csv(
            "hitting.csv",
            &["cylinder", "empirical", "target", "stderr", "z", "within"],
            cmp.iter().map(|c| vec![c.cylinder.clone(), num(c.empirical), num(c.target), num(c.stderr), num(c.z), c.within.to_string()]),
        )?;
        let within = cmp.iter().filter(|c| c.within).count();
        rep.check("hitting-measure", within == cmp.len(), format!("{within}/{} cylinders within 4σ + {slack:.2e} ({n} paths)", cmp.len()));
        rep.check("hitting-reproducible", first == again, format!("seed {seed} rerun identical"));
        let chi = compare_histograms(&first, &other).in_stage(Stage::Walk)?;
        rep.check("hitting-seed-agreement", chi.p_value > 1e-3, format!("χ² = {:.3} on {} dof, p = {:.4}", chi.statistic, chi.dof, chi.p_value));
    }
    Ok(rep)
}

fn validate_h2(ctx: &mut Context, out: &mut Reporter) -> Result<StageReport> {
    let mut rep = StageReport::new(Stage::ValidateH2);
    let audits = &ctx.cfg.audits;
    let report = comparison_audit(audits.h2_samples, ctx.cfg.seed, audits.h2_tolerance).in_stage(Stage::ValidateH2)?;
    let params = |w: &freewalk_core::h2::Witness| w.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    out.csv(
        "h2_checks.csv",
        &["check", "samples", "max_violation", "quadrature_error", "witness_sample", "witness_lhs", "witness_rhs", "witness"],
        report.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                c.samples.to_string(),
                num(c.max_violation),
                num(c.quadrature_error),
                c.witness.sample.to_string(),
                num(c.witness.lhs),
                num(c.witness.rhs),
                params(&c.witness),
            ]
        }),
    )?;
    for c in &report.checks {
        rep.check(
            &c.name,
            c.holds(report.tolerance),
            format!("max violation {:.3e} over {} samples ({})", c.max_violation, c.samples, c.statement),
        );
    }
    Ok(rep)
}
