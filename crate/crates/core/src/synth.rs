//! Seeded generator of miscalibrated classifier scores with known truth.
//!
//! Each sample draws a latent probability `q`, a label `y ~ Bernoulli(q)`,
//! and reports the distorted score `sigmoid(a * logit(q))`. With `a > 1` the
//! scores are pushed towards 0 and 1 (overconfident), with `a < 1` towards
//! 1/2. The distortion is strictly increasing in `q`, so ranking quality is
//! untouched and the true calibration map is known.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::dataio::{ScoreFile, ScoreRow};
use crate::error::{Error, Result};
use crate::ivap::LabeledScore;
use crate::split::RNG_NAME;

/// Concentration of each bimodal component.
const BIMODAL_CONCENTRATION: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distortion {
    Identity,
    /// Temperature `a > 1`.
    Overconfident(f64),
    /// Temperature `0 < a < 1`.
    Underconfident(f64),
}

impl Distortion {
    pub fn temperature(&self) -> f64 {
        match *self {
            Distortion::Identity => 1.0,
            Distortion::Overconfident(a) | Distortion::Underconfident(a) => a,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Distortion::Identity => Ok(()),
            Distortion::Overconfident(a) if a.is_finite() && a > 1.0 => Ok(()),
            Distortion::Underconfident(a) if a.is_finite() && a > 0.0 && a < 1.0 => Ok(()),
            d => Err(Error::invalid(format!("invalid distortion {d}"))),
        }
    }

    pub fn apply(&self, q: f64) -> f64 {
        match *self {
            Distortion::Identity => q,
            _ => sigmoid(self.temperature() * logit(q)),
        }
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distortion::Identity => f.write_str("identity"),
            Distortion::Overconfident(a) => write!(f, "overconfident:{a}"),
            Distortion::Underconfident(a) => write!(f, "underconfident:{a}"),
        }
    }
}

/// `identity`, `overconfident:A` or `underconfident:A`.
impl FromStr for Distortion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let param = || -> Result<f64> {
            arg.ok_or_else(|| Error::invalid(format!("{kind} needs a parameter, e.g. {kind}:3")))?
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad distortion parameter in {s:?}: {e}")))
        };
        let d = match kind {
            "identity" if arg.is_none() => Distortion::Identity,
            "overconfident" => Distortion::Overconfident(param()?),
            "underconfident" => Distortion::Underconfident(param()?),
            _ => return Err(Error::invalid(format!("unknown distortion {s:?}"))),
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Latent {
    Uniform,
    /// Mixture of two Beta bumps centred at `0.5 - spread` and `0.5 + spread`;
    /// `mix` is the weight of the upper bump.
    Bimodal {
        mix: f64,
        spread: f64,
    },
}

impl Latent {
    fn validate(&self) -> Result<()> {
        match *self {
            Latent::Uniform => Ok(()),
            Latent::Bimodal { mix, spread }
                if mix > 0.0 && mix < 1.0 && spread > 0.0 && spread < 0.5 =>
            {
                Ok(())
            }
            l => Err(Error::invalid(format!("invalid latent law {l}"))),
        }
    }
}

impl fmt::Display for Latent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Latent::Uniform => f.write_str("uniform"),
            Latent::Bimodal { mix, spread } => write!(f, "bimodal:{mix}:{spread}"),
        }
    }
}

/// `uniform` or `bimodal:MIX:SPREAD`.
impl FromStr for Latent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let l = match parts.as_slice() {
            ["uniform"] => Latent::Uniform,
            ["bimodal", mix, spread] => {
                let num = |v: &str| {
                    v.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad latent parameter in {s:?}: {e}")))
                };
                Latent::Bimodal {
                    mix: num(mix)?,
                    spread: num(spread)?,
                }
            }
            _ => return Err(Error::invalid(format!("unknown latent law {s:?}"))),
        };
        l.validate()?;
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub distortion: Distortion,
    pub latent: Latent,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        self.distortion.validate()?;
        self.latent.validate()
    }

    /// Free-form description recorded as score-file source metadata.
    pub fn describe(&self) -> String {
        format!(
            "synth rng={RNG_NAME} seed={} n={} distortion={} latent={}",
            self.seed, self.n, self.distortion, self.latent
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSample {
    pub score: LabeledScore,
    pub true_probability: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(q: f64) -> f64 {
    (q / (1.0 - q)).ln()
}

pub fn generate(config: &SynthConfig) -> Result<Vec<SynthSample>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let bumps = match config.latent {
        Latent::Uniform => None,
        Latent::Bimodal { mix, spread } => {
            let bump = |centre: f64| {
                Beta::new(
                    BIMODAL_CONCENTRATION * centre,
                    BIMODAL_CONCENTRATION * (1.0 - centre),
                )
                .map_err(|e| Error::invalid(format!("latent law: {e}")))
            };
            Some((mix, bump(0.5 - spread)?, bump(0.5 + spread)?))
        }
    };

    let samples = (0..config.n)
        .map(|_| {
            let q: f64 = match &bumps {
                None => rng.random(),
                Some((mix, low, high)) => {
                    if rng.random::<f64>() < *mix {
                        high.sample(&mut rng)
                    } else {
                        low.sample(&mut rng)
                    }
                }
            };
            let label = u8::from(rng.random::<f64>() < q);
            SynthSample {
                score: LabeledScore {
                    score: config.distortion.apply(q),
                    label,
                },
                true_probability: q,
            }
        })
        .collect();
    Ok(samples)
}

/// Score file with one row per sample; the latent probability goes in the
/// `target` column.
pub fn to_score_file(samples: &[SynthSample], config: &SynthConfig) -> ScoreFile {
    let width = samples.len().saturating_sub(1).to_string().len();
    let rows = samples
        .iter()
        .enumerate()
        .map(|(i, s)| ScoreRow {
            id: format!("s{i:0width$}"),
            score: s.score.score,
            label: Some(s.score.label),
            target: Some(s.true_probability),
        })
        .collect();
    ScoreFile::new(rows).with_source(config.describe())
}
