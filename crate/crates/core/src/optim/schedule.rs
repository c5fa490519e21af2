use serde::{Deserialize, Serialize};

/// A step-size sequence indexed by the 1-based update count `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    Constant {
        value: f64,
    },
    /// `scale · k^(−exponent)`.
    PowerLaw {
        scale: f64,
        exponent: f64,
    },
    /// `initial · factor^⌊(k−1)/every⌋`.
    StepDecay {
        initial: f64,
        factor: f64,
        every: u64,
    },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn value(&self, k: u64) -> f64 {
        let k = k.max(1);
        match *self {
            Schedule::Constant { value } => value,
            Schedule::PowerLaw { scale, exponent } => scale * (k as f64).powf(-exponent),
            Schedule::StepDecay {
                initial,
                factor,
                every,
            } => initial * factor.powf(((k - 1) / every.max(1)) as f64),
        }
    }
}
