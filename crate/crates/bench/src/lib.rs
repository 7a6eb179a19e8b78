//! Shared inputs for the benchmarks.

use freewalk_core::{Alphabet, GibbsStream, H2Geodesic, H2Point, Potential, Setup, WalkMeasure};

pub fn f2() -> Alphabet {
    Alphabet::new(2).expect("rank 2")
}

/// A window-3 potential on the free group of rank 2.
pub fn window_potential() -> Potential {
    Potential::from_fn(f2(), 3, |w| 0.2 + 0.15 * w[0].0 as f64 + 0.05 * ((w[1].0 + 2 * w[2].0) % 3) as f64).expect("window table")
}

pub fn skewed_stream() -> GibbsStream {
    Setup::skewed().stream().expect("skewed preset")
}

/// The walk assembled from the uniform preset.
pub fn uniform_walk() -> WalkMeasure {
    Setup::uniform().run().expect("uniform preset").walk
}

/// Two geodesics at distance about one whose endpoints are all distinct.
pub fn geodesic_pair() -> (H2Geodesic, H2Geodesic) {
    let g1 = H2Geodesic::new(&H2Point::origin(), [0.0, 1.0, 0.0]).expect("unit tangent");
    let p = H2Point::polar(1.0, 2.0);
    let x = p.coords();
    // a tangent at p orthogonal to the radial direction
    let u = [0.0, -x[2] / x[1].hypot(x[2]), x[1] / x[1].hypot(x[2])];
    let g2 = H2Geodesic::new(&p, u).expect("tangent at p");
    (g1, g2)
}
