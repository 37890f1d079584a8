//! Disturbance signals and initial segments.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matfun::Vector;

/// Disturbance `w(t)`, applied to every channel (sines with a per-channel
/// phase shift).
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Zero,
    Step { amplitude: f64 },
    Sine { amplitude: f64, omega: f64 },
    /// Piecewise-constant uniform noise in `[−amplitude, amplitude]`.
    Noise { seed: u64, amplitude: f64, hold: f64 },
}

impl Signal {
    /// Evaluator on `[0, horizon]` for `q` channels.
    pub fn sampler(&self, q: usize, horizon: f64) -> Box<dyn Fn(f64) -> Vector + Send + Sync> {
        match *self {
            Signal::Zero => Box::new(move |_| Vector::zeros(q)),
            Signal::Step { amplitude } => Box::new(move |_| Vector::from_element(q, amplitude)),
            Signal::Sine { amplitude, omega } => Box::new(move |t| {
                Vector::from_fn(q, |k, _| amplitude * (omega * t + 0.7 * k as f64).sin())
            }),
            Signal::Noise { seed, amplitude, hold } => {
                let slots = (horizon.max(0.0) / hold).ceil() as usize + 2;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values: Vec<f64> = (0..slots * q)
                    .map(|_| amplitude * rng.gen_range(-1.0..=1.0))
                    .collect();
                Box::new(move |t| {
                    let slot = ((t.max(0.0) / hold).floor() as usize).min(slots - 1);
                    Vector::from_fn(q, |k, _| values[slot * q + k])
                })
            }
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Zero => write!(f, "zero"),
            Signal::Step { amplitude } => write!(f, "step({amplitude})"),
            Signal::Sine { amplitude, omega } => write!(f, "sine({amplitude}, ω={omega})"),
            Signal::Noise { seed, amplitude, hold } => {
                write!(f, "noise(seed={seed}, {amplitude}, hold={hold})")
            }
        }
    }
}

/// `zero`, `step`, `sine`, `sine:<ω>` or `noise:<seed>`.
impl FromStr for Signal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let bad = || Error::Usage(format!("unknown input signal `{s}`"));
        match (head, arg) {
            ("zero", None) => Ok(Signal::Zero),
            ("step", None) => Ok(Signal::Step { amplitude: 1.0 }),
            ("sine", None) => Ok(Signal::Sine { amplitude: 1.0, omega: 1.0 }),
            ("sine", Some(w)) => Ok(Signal::Sine {
                amplitude: 1.0,
                omega: w.parse().map_err(|_| bad())?,
            }),
            ("noise", Some(seed)) => Ok(Signal::Noise {
                seed: seed.parse().map_err(|_| bad())?,
                amplitude: 1.0,
                hold: 0.1,
            }),
            _ => Err(bad()),
        }
    }
}

/// Step, a logarithmic sine sweep and seeded noise.
pub fn default_library(seed: u64) -> Vec<Signal> {
    let mut lib = vec![Signal::Step { amplitude: 1.0 }];
    lib.extend(
        [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|omega| Signal::Sine { amplitude: 1.0, omega }),
    );
    lib.push(Signal::Noise {
        seed,
        amplitude: 1.0,
        hold: 0.1,
    });
    lib
}

/// History `ψ` on `[−r, 0]`.
#[derive(Clone)]
pub enum InitialSegment {
    Zero,
    Constant(Vector),
    Function(Arc<dyn Fn(f64) -> Vector + Send + Sync>),
}

impl InitialSegment {
    pub fn eval(&self, nu: usize, theta: f64) -> Result<Vector> {
        let v = match self {
            InitialSegment::Zero => Vector::zeros(nu),
            InitialSegment::Constant(v) => v.clone(),
            InitialSegment::Function(f) => f(theta),
        };
        if v.len() != nu {
            return Err(Error::dim(format!(
                "initial segment has {} entries, expected {nu}",
                v.len()
            )));
        }
        Ok(v)
    }
}

impl fmt::Debug for InitialSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSegment::Zero => write!(f, "Zero"),
            InitialSegment::Constant(v) => write!(f, "Constant({:?})", v.as_slice()),
            InitialSegment::Function(_) => write!(f, "Function(..)"),
        }
    }
}
