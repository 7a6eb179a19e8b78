//! Bi-infinite geodesics of the tree and the distance on the space of
//! geodesics, `dist(γ₁, γ₂) = ½ ∫ d(γ₁(t), γ₂(t)) e^{−|t|} dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::BOUNDARY_CAP;
use crate::word::{Alphabet, BoundaryWord, ReducedWord};

/// A unit-speed geodesic through `base`: `γ(t)` sits at signed arclength
/// `t + offset` from the base, towards `forward` for nonnegative values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSpec {
    pub base: ReducedWord,
    pub forward: BoundaryWord,
    pub backward: BoundaryWord,
    pub offset: f64,
}

impl GeodesicSpec {
    pub fn new(base: ReducedWord, forward: BoundaryWord, backward: BoundaryWord, offset: f64) -> Result<Self> {
        if forward.letters(1) == backward.letters(1) {
            return Err(Error::Input("forward and backward words must leave the base in different directions".into()));
        }
        Ok(GeodesicSpec { base, forward, backward, offset })
    }

    /// `𝗀^s γ`.
    pub fn shift(&self, s: f64) -> GeodesicSpec {
        GeodesicSpec { offset: self.offset + s, ..self.clone() }
    }

    /// `−γ`.
    pub fn flip(&self) -> GeodesicSpec {
        GeodesicSpec {
            base: self.base.clone(),
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            offset: -self.offset,
        }
    }

    /// Forward and backward letters beyond the base, `n` of each.
    pub fn arms(&self, n: usize) -> (Vec<crate::word::Letter>, Vec<crate::word::Letter>) {
        (self.forward.letters(n), self.backward.letters(n))
    }

    /// A geodesic whose forward and backward arms extend the given words.
    pub fn through(alphabet: &Alphabet, base: &ReducedWord, fwd: &ReducedWord, bwd: &ReducedWord) -> Result<Self> {
        GeodesicSpec::new(
            base.clone(),
            BoundaryWord::extend(alphabet, fwd),
            BoundaryWord::extend(alphabet, bwd),
            0.0,
        )
    }
}

fn confluence(a: &BoundaryWord, b: &BoundaryWord) -> f64 {
    a.confluence(b, BOUNDARY_CAP).map_or(f64::INFINITY, |c| c as f64)
}

/// Confluence lengths between the arms of two geodesics with a common base.
#[derive(Clone, Copy, Debug)]
struct ArmConfluence {
    ff: f64,
    bb: f64,
    fb: f64,
    bf: f64,
}

impl ArmConfluence {
    fn of(g1: &GeodesicSpec, g2: &GeodesicSpec) -> Self {
        ArmConfluence {
            ff: confluence(&g1.forward, &g2.forward),
            bb: confluence(&g1.backward, &g2.backward),
            fb: confluence(&g1.forward, &g2.backward),
            bf: confluence(&g1.backward, &g2.forward),
        }
    }

    /// Distance between the points at signed positions `s1` on `γ₁` and
    /// `s2` on `γ₂`.
    fn distance(&self, s1: f64, s2: f64) -> f64 {
        let conf = match (s1 >= 0.0, s2 >= 0.0) {
            (true, true) => self.ff,
            (false, false) => self.bb,
            (true, false) => self.fb,
            (false, true) => self.bf,
        };
        let (a, b) = (s1.abs(), s2.abs());
        a + b - 2.0 * conf.min(a).min(b)
    }
}

fn common_base(g1: &GeodesicSpec, g2: &GeodesicSpec) -> Result<()> {
    if g1.base != g2.base {
        return Err(Error::Input("geodesics must share their base vertex".into()));
    }
    Ok(())
}

/// `d(γ₁(t), γ₂(t))`.
pub fn separation(g1: &GeodesicSpec, g2: &GeodesicSpec, t: f64) -> Result<f64> {
    common_base(g1, g2)?;
    Ok(ArmConfluence::of(g1, g2).distance(t + g1.offset, t + g2.offset))
}

/// `∫ (t − a)⁺ e^{−|t|} dt` over the line, the one-sided building block of
/// the closed form.
fn ramp_integral(a: f64) -> f64 {
    if a.is_infinite() {
        0.0
    } else if a >= 0.0 {
        (-a).exp()
    } else {
        -2.0 * a + a.exp()
    }
}

/// Exact distance. For equal offsets this is the closed form
/// `F(o − c₊) + F(−o − c₋)`, which is `e^{−c₊} + e^{−c₋}` at offset 0;
/// otherwise the piecewise-linear integrand is integrated exactly.
pub fn sh_distance(g1: &GeodesicSpec, g2: &GeodesicSpec) -> Result<f64> {
    common_base(g1, g2)?;
    let conf = ArmConfluence::of(g1, g2);
    if g1.offset == g2.offset {
        let o = g1.offset;
        return Ok(ramp_integral(conf.ff - o) + ramp_integral(conf.bb + o));
    }
    Ok(piecewise_integral(&conf, g1.offset, g2.offset))
}

/// `∫ (α t + β) e^{−|t|} dt` over `[a, b]` with `a, b` on the same side of 0.
fn linear_times_weight(alpha: f64, beta: f64, a: f64, b: f64) -> f64 {
    // antiderivative of (αt+β)e^{-t} is −(αt+β+α)e^{-t}; of (αt+β)e^{t} is (αt+β−α)e^{t}
    if a >= 0.0 {
        let prim = |t: f64| {
            if t.is_infinite() {
                0.0
            } else {
                -(alpha * t + beta + alpha) * (-t).exp()
            }
        };
        prim(b) - prim(a)
    } else {
        let prim = |t: f64| {
            if t.is_infinite() {
                0.0
            } else {
                (alpha * t + beta - alpha) * t.exp()
            }
        };
        prim(b) - prim(a)
    }
}

fn piecewise_integral(conf: &ArmConfluence, o1: f64, o2: f64) -> f64 {
    let mut cuts = vec![0.0, -o1, -o2];
    for c in [conf.ff, conf.bb, conf.fb, conf.bf] {
        if c.is_finite() {
            cuts.extend([c - o1, -c - o1, c - o2, -c - o2]);
        }
    }
    // |s1| = |s2|
    cuts.push(-(o1 + o2) / 2.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut knots = vec![f64::NEG_INFINITY];
    knots.extend(cuts);
    knots.push(f64::INFINITY);
    let d = |t: f64| conf.distance(t + o1, t + o2);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        // the integrand is linear on the piece; read it off at two interior points
        let (u, v) = match (a.is_finite(), b.is_finite()) {
            (true, true) => (a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0),
            (true, false) => (a + 1.0, a + 2.0),
            (false, true) => (b - 2.0, b - 1.0),
            (false, false) => (-1.0, 1.0),
        };
        let alpha = (d(v) - d(u)) / (v - u);
        let beta = d(u) - alpha * u;
        total += linear_times_weight(alpha, beta, a, b);
    }
    0.5 * total
}

/// Adaptive quadrature of the defining integral on `[−window, window]`,
/// split at the kinks of the integrand. Returns the value and the error
/// bound (quadrature estimate plus analytic tail).
pub fn sh_distance_quadrature(g1: &GeodesicSpec, g2: &GeodesicSpec, window: f64, tol: f64) -> Result<(f64, f64)> {
    common_base(g1, g2)?;
    let conf = ArmConfluence::of(g1, g2);
    let (o1, o2) = (g1.offset, g2.offset);
    let mut cuts = vec![-window, window, 0.0, -o1, -o2, -(o1 + o2) / 2.0];
    for c in [conf.ff, conf.bb, conf.fb, conf.bf] {
        if c.is_finite() {
            cuts.extend([c - o1, -c - o1, c - o2, -c - o2]);
        }
    }
    cuts.retain(|t| t.abs() <= window);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let f = |t: f64| conf.distance(t + o1, t + o2) * (-t.abs()).exp();
    let pieces = cuts.len().max(2) - 1;
    let mut total = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let out = quadrature::double_exponential::integrate(f, w[0], w[1], tol / pieces as f64);
        if !out.integral.is_finite() {
            return Err(Error::Quadrature(out.error_estimate));
        }
        total += out.integral;
        err += out.error_estimate;
    }
    // d ≤ 2|t| + d₀ gives the tail ∫_W^∞ (2t + d₀) e^{−t} on each side
    let d0 = conf.distance(o1, o2);
    let tail = (2.0 * window + 2.0 + d0) * (-window).exp();
    let bound = 0.5 * (err + 2.0 * tail);
    if bound > tol {
        return Err(Error::Quadrature(bound));
    }
    Ok((0.5 * total, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Alphabet, GeodesicSpec) {
        let a = Alphabet::new(2).unwrap();
        let g = GeodesicSpec::through(&a, &ReducedWord::identity(), &a.parse_word("a b").unwrap(), &a.parse_word("b a").unwrap())
            .unwrap();
        (a, g)
    }

    #[test]
    fn shift_gives_shift_length() {
        let (_, g) = setup();
        for s in [0.0, 0.3, 1.0, -2.5, 7.25] {
            let d = sh_distance(&g, &g.shift(s)).unwrap();
            assert!((d - s.abs()).abs() < 1e-12, "s={s} d={d}");
        }
    }

    #[test]
    fn flip_gives_two() {
        let (_, g) = setup();
        assert!((sh_distance(&g, &g.flip()).unwrap() - 2.0).abs() < 1e-12);
        let (q, _) = sh_distance_quadrature(&g, &g.flip(), 40.0, 1e-10).unwrap();
        assert!((q - 2.0).abs() < 1e-10);
    }

    #[test]
    fn one_forward_letter_shared() {
        let a = Alphabet::new(2).unwrap();
        let e = ReducedWord::identity();
        let g1 = GeodesicSpec::through(&a, &e, &a.parse_word("a b").unwrap(), &a.parse_word("b").unwrap()).unwrap();
        let g2 = GeodesicSpec::through(&a, &e, &a.parse_word("a b'").unwrap(), &a.parse_word("b'").unwrap()).unwrap();
        let d = sh_distance(&g1, &g2).unwrap();
        assert!((d - ((-1.0f64).exp() + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn identical_is_zero() {
        let (_, g) = setup();
        assert_eq!(sh_distance(&g, &g).unwrap(), 0.0);
    }

    #[test]
    fn equal_offset_closed_form_matches_piecewise() {
        let a = Alphabet::new(2).unwrap();
        let e = ReducedWord::identity();
        let g1 = GeodesicSpec::through(&a, &e, &a.parse_word("a b a").unwrap(), &a.parse_word("b").unwrap()).unwrap();
        let g2 = GeodesicSpec::through(&a, &e, &a.parse_word("a b b").unwrap(), &a.parse_word("b' a").unwrap()).unwrap();
        for o in [-3.0, -0.5, 0.0, 1.25, 4.0] {
            let closed = sh_distance(&g1.shift(o), &g2.shift(o)).unwrap();
            let conf = ArmConfluence::of(&g1, &g2);
            let pw = piecewise_integral(&conf, o, o);
            assert!((closed - pw).abs() < 1e-12, "o={o}");
        }
    }
}
