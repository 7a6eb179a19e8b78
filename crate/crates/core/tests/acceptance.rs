//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freewalk_core::gibbs::{perron, shell_slope};
use freewalk_core::spike::spike_sweep;
use freewalk_core::walk::{compare_histograms, entropy_breakdown, truncation_sweep};
use freewalk_core::word::words_of_length;
use freewalk_core::*;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn f2() -> Alphabet {
    Alphabet::new(2).unwrap()
}

fn uniform_run() -> &'static Pipeline {
    static RUN: OnceLock<Pipeline> = OnceLock::new();
    RUN.get_or_init(|| Setup::uniform().run().expect("uniform preset runs"))
}

fn skewed_run() -> &'static Pipeline {
    static RUN: OnceLock<Pipeline> = OnceLock::new();
    RUN.get_or_init(|| Setup::skewed().run().expect("skewed preset runs"))
}

fn random_letter_potential(rng: &mut ChaCha8Rng) -> Potential {
    let values: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.5)).collect();
    Potential::per_letter(f2(), &values).unwrap()
}

/// Every potential the measure-level criteria are checked on.
fn tested_potentials() -> Vec<(String, Potential)> {
    let a = f2();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut out = vec![
        ("zero".to_string(), Potential::constant(a, 0.0)),
        ("skewed".to_string(), Setup::skewed().potential),
        ("window-2".to_string(), Potential::from_fn(a, 2, |w| 0.3 + 0.2 * w[0].0 as f64 - 0.15 * w[1].0 as f64).unwrap()),
    ];
    for i in 0..3 {
        out.push((format!("random-{i}"), random_letter_potential(&mut rng)));
    }
    out
}

fn random_word(rng: &mut ChaCha8Rng, a: &Alphabet, max_len: usize) -> ReducedWord {
    let n = rng.gen_range(0..=max_len);
    let mut letters: Vec<Letter> = Vec::with_capacity(n);
    for _ in 0..n {
        let next: Vec<Letter> = a.successors(letters.last().copied()).collect();
        letters.push(next[rng.gen_range(0..next.len())]);
    }
    ReducedWord::from_reduced(letters)
}

fn pressure_oracles() -> Outcome {
    let zero = critical_exponent(&Potential::constant(f2(), 0.0)).unwrap();
    let zero_err = (zero - 3f64.ln()).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let p = random_letter_potential(&mut rng);
        let spectral = critical_exponent(&p).unwrap();
        worst = worst.max((spectral - shell_slope(&p, 200, 400)).abs());
    }
    outcome(zero_err < 1e-9 && worst < 1e-6, format!("|λ(0) − log 3| = {zero_err:.2e}, spectral vs shell slope max gap {worst:.2e}"))
}

fn gibbs_exactness() -> Outcome {
    let a = f2();
    let uniform = GibbsStream::new(&Potential::constant(a, 0.0)).unwrap();
    let mut mass_err = 0.0f64;
    for n in 1..=8 {
        let expect = 1.0 / (4.0 * 3f64.powi(n as i32 - 1));
        for w in words_of_length(&a, n) {
            mass_err = mass_err.max((uniform.mass(w.letters()) - expect).abs());
        }
    }
    let mut additivity = 0.0f64;
    for (_, p) in tested_potentials() {
        let s = GibbsStream::new(&p).unwrap();
        let total: f64 = words_of_length(&a, 1).iter().map(|w| s.mass(w.letters())).sum();
        additivity = additivity.max((total - 1.0).abs());
        for n in 1..=6 {
            for w in words_of_length(&a, n) {
                let children: f64 = a.successors(w.last()).map(|t| s.mass(w.push(t).letters())).sum();
                additivity = additivity.max((children - s.mass(w.letters())).abs());
            }
        }
    }
    outcome(mass_err < 1e-12 && additivity < 1e-12, format!("uniform cylinder error {mass_err:.2e}, additivity and total mass error {additivity:.2e}"))
}

fn radon_nikodym() -> Outcome {
    let a = f2();
    let streams: Vec<GibbsStream> = tested_potentials().iter().map(|(_, p)| GibbsStream::new(p).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut chain, mut equi, mut total) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let s = &streams[i % streams.len()];
        let (p, q, r, g) = (random_word(&mut rng, &a, 4), random_word(&mut rng, &a, 4), random_word(&mut rng, &a, 4), random_word(&mut rng, &a, 4));
        let xi = BoundaryWord::seeded(&a, &random_word(&mut rng, &a, 3), rng.gen());
        let pq = s.rn_derivative(&p, &q, &xi);
        let qr = s.rn_derivative(&q, &r, &xi);
        let pr = s.rn_derivative(&p, &r, &xi);
        chain = chain.max((pq * qr / pr - 1.0).abs());
        let moved = s.rn_derivative(&g.mul(&p), &g.mul(&q), &xi.translate(&g));
        equi = equi.max((moved / pq - 1.0).abs());
        if i % 10 == 0 {
            // the cocycle only reads the first max(|p|, |q|) + m letters
            let depth = p.len().max(q.len()) + s.potential().depth() + 1;
            let integral: f64 = words_of_length(&a, depth)
                .iter()
                .map(|w| s.measure().mass_from(&p, w.letters()) * s.rn_derivative(&p, &q, &BoundaryWord::extend(&a, w)))
                .sum();
            total = total.max((integral - 1.0).abs());
        }
    }
    outcome(
        chain < 1e-10 && equi < 1e-10 && total < 1e-10,
        format!("chain rule {chain:.2e}, equivariance {equi:.2e}, ∫ rn dμ_p − 1 {total:.2e} (1000 instances)"),
    )
}

/// A-priori constants from the Perron data: `μ([w]) e^{d(e,w)} = r_W e^{t_W}/z`
/// for the last window `W`, and the normalized shell sums stay within
/// `I·[min τ/r, max τ/r]` with `I = Σ_W e^{−φ(W)} r_W` invariant.
fn shadow_lemma() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, p) in tested_potentials() {
        let s = GibbsStream::new(&p).unwrap();
        let q = s.potential();
        let r = perron(q).unwrap().right;
        let ix = q.indexer();
        let weight: Vec<f64> = q.table().iter().map(|v| (-v).exp()).collect();
        let z: f64 = weight.iter().zip(&r).map(|(w, r)| w * r).sum();
        let tau: Vec<f64> = (0..ix.len()).map(|i| (-q.terminal(&ix.word(i))).exp()).collect();
        let ratio: Vec<f64> = r.iter().zip(&tau).map(|(r, t)| r / (t * z)).collect();
        let c = ratio.iter().map(|x| x.max(1.0 / x)).fold(1.0, f64::max);
        let rep = s.shadow_lemma_audit(12);
        let in_band = rep.min >= (1.0 - 1e-12) / c && rep.max <= c * (1.0 + 1e-12);

        let a = q.alphabet();
        let norm = a.branching() as f64 / a.size() as f64;
        let inv: f64 = weight.iter().zip(&r).map(|(w, r)| w * r).sum();
        let lo = tau.iter().zip(&r).map(|(t, r)| t / r).fold(f64::INFINITY, f64::min) * inv * norm;
        let hi = tau.iter().zip(&r).map(|(t, r)| t / r).fold(0.0, f64::max) * inv * norm;
        let k = hi.max(1.0 / lo).max(1.0);
        // words shorter than the window are not covered by the invariant
        let ints = s.shadow_integral_audit(20);
        let ints_ok = ints.iter().skip(q.depth().saturating_sub(1)).all(|v| *v >= (1.0 - 1e-12) / k && *v <= k * (1.0 + 1e-12));
        ok &= in_band && ints_ok;
        lines.push(format!("{name} C={c:.3} [{:.3}, {:.3}] K={k:.3}", rep.min, rep.max));
    }
    outcome(ok, lines.join("; "))
}

fn spike_certification() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for setup in [Setup::uniform(), Setup::skewed()] {
        let s = setup.stream().unwrap();
        let k = Kernel::new(&s, setup.reference).unwrap();
        let f = setup.target.scale(1.0 / setup.target.integrate(s.measure()));
        match spike_sweep(&s, &k, &f, 8, 1.0) {
            Ok(rows) => {
                let m = s.potential().depth();
                let early = rows.iter().filter(|r| r.length <= m + 2).map(|r| r.max_c).fold(0.0, f64::max);
                let late = rows.iter().filter(|r| r.length > m + 2).map(|r| r.max_c).fold(0.0, f64::max);
                let bounded = late.is_finite() && late <= early * (1.0 + 1e-9);
                ok &= bounded;
                lines.push(format!("{}: max C up to |g| = {} is {early:.4}, beyond {late:.4}", setup.name, m + 2));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{}: {e}", setup.name));
            }
        }
    }
    outcome(ok, lines.join("; "))
}

fn decomposition_convergence() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, run) in [("uniform-f2", uniform_run()), ("skewed-f2", skewed_run())] {
        let d = &run.decomposition;
        let (mut bound, mut sup_bound) = (d.initial_l1, d.initial_sup);
        let (mut prev_l1, mut prev_sup) = (d.initial_l1, d.initial_sup);
        let (mut l1_ok, mut sup_ok, mut steps_ok) = (true, true, true);
        for (st, rho) in d.stages.iter().zip(d.contraction_factors()) {
            bound *= rho;
            sup_bound *= rho;
            l1_ok &= st.residual_l1 <= bound * (1.0 + 1e-12) && st.residual_l1 < prev_l1;
            sup_ok &= st.residual_sup <= sup_bound * (1.0 + 1e-12) && st.residual_sup <= prev_sup * (1.0 + 1e-12);
            steps_ok &= st.t_eps <= d.config.ell && st.lambda_entries.iter().all(|(_, l)| *l >= 0.0);
            prev_l1 = st.residual_l1;
            prev_sup = st.residual_sup;
        }
        let positive = d.residual.inf() > 0.0;
        let recomputed = d.recompute_residual(&run.stream, &run.target).unwrap();
        let drift = recomputed.sub(&d.residual).abs().sup();
        let moments = d.moment_partial_sums();
        let majorant = d.majorant_partial_sums();
        let under = moments.iter().zip(&majorant).all(|(m, b)| *m <= *b * (1.0 + 1e-12));
        ok &= l1_ok && sup_ok && steps_ok && positive && drift < 1e-10 && under;
        lines.push(format!(
            "{name}: {} stages ({:?}), residual {:.3e}, L1 contraction {l1_ok}, sup contraction {sup_ok}, t_ε ≤ ℓ and λ ≥ 0 {steps_ok}, positive {positive}, moment {:.3} ≤ majorant {:.3}",
            d.stages.len(),
            d.stop,
            d.final_residual,
            moments.last().unwrap(),
            majorant.last().unwrap()
        ));
    }
    outcome(ok, lines.join("; "))
}

fn harmonicity() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, run) in [("uniform-f2", uniform_run()), ("skewed-f2", skewed_run())] {
        let d = &run.decomposition;
        let err = (1..=3).map(|depth| stationarity_error(&run.walk, &run.target, &run.stream, depth)).collect::<Vec<_>>();
        let gap = err.iter().map(|e| (e - d.final_residual).abs()).fold(0.0, f64::max);
        ok &= gap < 1e-8;
        if name == "uniform-f2" {
            ok &= d.final_residual <= 1e-2 && d.stages.len() <= 40;
        }
        lines.push(format!("{name}: stationarity error {:.6e} vs residual {:.6e} (gap {gap:.1e}) after {} stages", err[2], d.final_residual, d.stages.len()));
    }
    outcome(ok, lines.join("; "))
}

fn poisson_boundary() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, run) in [("uniform-f2", uniform_run()), ("skewed-f2", skewed_run())] {
        let slack = stationarity_error(&run.walk, &run.target, &run.stream, 3);
        let first = simulate_hitting(&run.walk, 100_000, 3, 1).unwrap();
        let again = simulate_hitting(&run.walk, 100_000, 3, 1).unwrap();
        let other = simulate_hitting(&run.walk, 100_000, 3, 2).unwrap();
        let target = freewalk_core::walk::target_masses(&run.target, &run.stream, 3);
        let cmp = first.compare(&target, slack);
        let within = cmp.iter().filter(|c| c.within).count();
        let zmax = cmp.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
        let chi = compare_histograms(&first, &other).unwrap();
        let pass = within == cmp.len() && first == again && chi.p_value > 1e-3;
        ok &= pass;
        lines.push(format!("{name}: {within}/{} cylinders within 4σ + {slack:.2e}, max |z| {zmax:.2}, seed χ² p = {:.3}", cmp.len(), chi.p_value));
    }
    outcome(ok, lines.join("; "))
}

fn comparison_estimates() -> Outcome {
    let report = comparison_audit(10_000, 2024, 1e-7).unwrap();
    let failures = report.failures();
    let worst_quad = report.checks.iter().map(|c| c.quadrature_error).fold(0.0, f64::max);
    let detail = if failures.is_empty() {
        format!("{} checks, no violation beyond 1e-7, quadrature error ≤ {worst_quad:.1e}", report.checks.len())
    } else {
        failures
            .iter()
            .map(|c| format!("{} violated by {:.4} at {:?}", c.name, c.max_violation, c.witness.params))
            .collect::<Vec<_>>()
            .join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn walk_statistics_check() -> Outcome {
    let run = uniform_run();
    let stats = walk_statistics(&run.walk);
    let finite = stats.entropy.is_finite() && stats.first_moment.is_finite();
    let rows = truncation_sweep(&run.walk);
    let last = rows.last().unwrap();
    let stable = last.entropy_change.is_some_and(|c| c <= 0.01) && last.moment_change.is_some_and(|c| c <= 0.01);
    let eb = entropy_breakdown(&run.decomposition, &run.stream, &run.target).unwrap();
    let split = (eb.weight_part + eb.norm_part - eb.entropy).abs();
    let terms = eb.max_term_gap < 1e-9 && split < 1e-9 && eb.entropy <= eb.bound;

    let skewed = skewed_run();
    let sk = truncation_sweep(&skewed.walk);
    let top = skewed.walk.support_radius();
    let sk_eb = entropy_breakdown(&skewed.decomposition, &skewed.stream, &skewed.target).unwrap();
    let sk_split = (sk_eb.weight_part + sk_eb.norm_part - sk_eb.entropy).abs();
    let terms = terms && sk_eb.max_term_gap < 1e-9 && sk_split < 1e-9 && sk_eb.entropy <= sk_eb.bound;
    let sk_row = sk.iter().find(|r| r.radius == top).unwrap();
    outcome(
        finite && stable && terms,
        format!(
            "uniform-f2: H = {:.6}, first moment {:.6}, change at radius {} vs {} is {:.1e}/{:.1e}, entropy split gap {split:.1e}, term gap {:.1e}, H ≤ bound {:.3}; skewed-f2: H = {:.4}, split gap {sk_split:.1e}, term gap {:.1e}, truncation change (shell-capped, diagnostic only) at radius {top} vs {} is {:.3}/{:.3}",
            stats.entropy,
            stats.first_moment,
            last.radius,
            last.radius - 2,
            last.entropy_change.unwrap(),
            last.moment_change.unwrap(),
            eb.max_term_gap,
            eb.bound,
            sk_eb.entropy,
            sk_eb.max_term_gap,
            top - 2,
            sk_row.entropy_change.unwrap_or(f64::NAN),
            sk_row.moment_change.unwrap_or(f64::NAN),
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("pressure oracles", pressure_oracles),
        ("Gibbs exactness", gibbs_exactness),
        ("Radon-Nikodym cocycle", radon_nikodym),
        ("shadow lemma", shadow_lemma),
        ("spike certification", spike_certification),
        ("decomposition convergence", decomposition_convergence),
        ("harmonicity", harmonicity),
        ("boundary hitting", poisson_boundary),
        ("hyperbolic comparison estimates", comparison_estimates),
        ("walk statistics", walk_statistics_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !out.pass {
            failed += 1;
        }
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name} ({:.1}s): {}", i + 1, clock.elapsed().as_secs_f64(), out.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
