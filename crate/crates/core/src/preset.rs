//! Named experiment setups and the decomposition pipeline that runs them.

use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, DecomposerConfig, Decomposition};
use crate::error::{Error, Result};
use crate::function::CylinderFn;
use crate::gibbs::GibbsStream;
use crate::measure::MeasureId;
use crate::potential::Potential;
use crate::spike::{DecayCert, Kernel};
use crate::walk::{assemble_walk, WalkMeasure};
use crate::word::Alphabet;

/// A potential, a target density and the knobs of the decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub name: String,
    pub potential: Potential,
    /// Target density before normalization to unit mass.
    pub target: CylinderFn,
    pub reference: MeasureId,
    /// Ball depth and scale range of the kernel decay audit.
    pub decay_radius: usize,
    pub decomposer: DecomposerConfig,
}

impl Setup {
    pub const NAMES: [&'static str; 2] = ["uniform-f2", "skewed-f2"];

    /// `Φ ≡ 0` and `F ≡ 1` on the free group of rank 2.
    pub fn uniform() -> Self {
        let a = Alphabet::new(2).expect("rank 2");
        Setup {
            name: "uniform-f2".into(),
            potential: Potential::constant(a, 0.0),
            target: CylinderFn::constant(a, 1.0),
            reference: MeasureId::Hausdorff,
            decay_radius: 14,
            decomposer: DecomposerConfig::default(),
        }
    }

    /// A per-letter potential and a target density varying on two letters.
    pub fn skewed() -> Self {
        let a = Alphabet::new(2).expect("rank 2");
        Setup {
            name: "skewed-f2".into(),
            potential: Potential::per_letter(a, &[0.2, 0.5, 0.1, 0.4]).expect("four letters"),
            target: CylinderFn::from_fn(a, 2, |w| 1.0 + 0.25 * ((w[0].0 + 2 * w[1].0) % 3) as f64),
            reference: MeasureId::Hausdorff,
            decay_radius: 14,
            decomposer: DecomposerConfig::default(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "uniform-f2" => Ok(Setup::uniform()),
            "skewed-f2" => Ok(Setup::skewed()),
            _ => Err(Error::Input(format!("unknown preset {name:?}; known: {}", Setup::NAMES.join(", ")))),
        }
    }

    pub fn stream(&self) -> Result<GibbsStream> {
        GibbsStream::new(&self.potential)
    }

    /// Runs the kernel audit, the decomposition and the walk assembly.
    pub fn run(&self) -> Result<Pipeline> {
        if self.target.alphabet() != self.potential.alphabet() {
            return Err(Error::Input("target and potential use different alphabets".into()));
        }
        let stream = self.stream()?;
        let kernel = Kernel::new(&stream, self.reference)?;
        let cert = kernel.decay_audit(self.decay_radius, self.decay_radius)?;
        let target = self.target.scale(1.0 / self.target.integrate(stream.measure()));
        let decomposition = decompose(&target, &stream, &kernel, &cert, &self.decomposer)?;
        let walk = assemble_walk(&decomposition, &stream)?;
        Ok(Pipeline { stream, kernel, cert, target, decomposition, walk })
    }
}

/// Everything produced by [`Setup::run`].
pub struct Pipeline {
    pub stream: GibbsStream,
    pub kernel: Kernel,
    pub cert: DecayCert,
    /// The target density scaled to unit mass.
    pub target: CylinderFn,
    pub decomposition: Decomposition,
    pub walk: WalkMeasure,
}
