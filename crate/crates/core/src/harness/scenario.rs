use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bicubic::{bicubic_upsample, crop};
use super::images::{phantom, read_pgm};
use crate::error::{Error, Result};
use crate::linops::{downsampled_shape, Kernel, LinearOperator, Shape};
use crate::Vector;

/// Super-resolution factor of the SR scenario.
pub const SR_FACTOR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    /// 7x7 Gaussian blur (std 1.6) followed by keeping every third pixel.
    SrX3,
    /// 9x9 uniform circular blur.
    Deblur9,
    /// Gaussian measurements of Haar coefficients, `m = round(m_ratio·n)`.
    CompressedSensing { m_ratio: f64 },
    /// Keeps a random `ratio` fraction of the pixels.
    Inpaint { ratio: f64 },
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::SrX3 => "srx3",
            Self::Deblur9 => "deblur9",
            Self::CompressedSensing { .. } => "cs",
            Self::Inpaint { .. } => "inpaint",
        }
    }

    /// Parses a scenario name; `ratio` feeds the CS and inpainting variants.
    pub fn parse(name: &str, ratio: f64) -> Result<Self> {
        let kind = match name {
            "srx3" => Self::SrX3,
            "deblur9" => Self::Deblur9,
            "cs" => Self::CompressedSensing { m_ratio: ratio },
            "inpaint" => Self::Inpaint { ratio },
            other => return Err(Error::InvalidArgument(format!("unknown scenario '{other}'"))),
        };
        kind.validate()?;
        Ok(kind)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::CompressedSensing { m_ratio: r } | Self::Inpaint { ratio: r } if !(r > 0.0 && r <= 1.0) => {
                Err(Error::InvalidArgument(format!("measurement ratio must lie in (0, 1], got {r}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CompressedSensing { m_ratio } => write!(f, "cs(m/n={m_ratio})"),
            Self::Inpaint { ratio } => write!(f, "inpaint(kept={ratio})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ImageSource {
    /// The built-in synthetic scene.
    Phantom,
    Pgm(PathBuf),
}

/// The degradation operator for a scenario on a given image grid.
pub fn build_operator(kind: ScenarioKind, shape: Shape, seed: u64) -> Result<LinearOperator> {
    kind.validate()?;
    let n = shape.len();
    match kind {
        ScenarioKind::SrX3 => LinearOperator::composite(vec![
            LinearOperator::circulant(Kernel::gaussian(7, 1.6), shape),
            LinearOperator::downsample(SR_FACTOR, shape)?,
        ]),
        ScenarioKind::Deblur9 => Ok(LinearOperator::circulant(Kernel::uniform(9), shape)),
        ScenarioKind::CompressedSensing { m_ratio } => {
            let m = ((m_ratio * n as f64).round() as usize).clamp(1, n);
            LinearOperator::composite(vec![LinearOperator::haar(shape), LinearOperator::gaussian(m, n, seed)?])
        }
        ScenarioKind::Inpaint { ratio } => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.truncate(((ratio * n as f64).round() as usize).clamp(1, n));
            LinearOperator::inpaint(idx, n)
        }
    }
}

/// Operator, ground truth and clean observations of one experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub op: Arc<LinearOperator>,
    pub truth: Vector,
    pub shape: Shape,
    /// Noise-free observations `Ax`.
    pub clean: Vector,
}

impl Scenario {
    /// Starting point for iterative solvers: bicubic upsampling of `y` for
    /// SR, `y` itself for deblurring, zero for CS and `Aᵀy` for inpainting.
    pub fn initial_guess(&self, y: &Vector) -> Result<Vector> {
        match self.kind {
            ScenarioKind::SrX3 => self.bicubic_baseline(y),
            ScenarioKind::Deblur9 => Ok(y.clone()),
            ScenarioKind::CompressedSensing { .. } => Ok(Vector::zeros(self.shape.len())),
            ScenarioKind::Inpaint { .. } => self.op.adjoint(y),
        }
    }

    /// Bicubic upsampling of SR observations, cropped to the image grid.
    pub fn bicubic_baseline(&self, y: &Vector) -> Result<Vector> {
        if self.kind != ScenarioKind::SrX3 {
            return Err(Error::InvalidArgument("bicubic baseline applies to SR only".into()));
        }
        let low = downsampled_shape(self.shape, SR_FACTOR);
        let (up, up_shape) = bicubic_upsample(y, low, SR_FACTOR)?;
        crop(&up, up_shape, self.shape)
    }
}

/// Builds the scenario on a `size x size` version of `image`.
pub fn build_scenario(kind: ScenarioKind, image: &ImageSource, size: usize, seed: u64) -> Result<Scenario> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!("image size must be >= 2, got {size}")));
    }
    let (truth, shape) = match image {
        ImageSource::Phantom => phantom(size),
        ImageSource::Pgm(path) => read_pgm(path, Some(Shape::square(size)))?,
    };
    let op = Arc::new(build_operator(kind, shape, seed)?);
    let clean = op.apply(&truth)?;
    Ok(Scenario { kind, op, truth, shape, clean })
}
