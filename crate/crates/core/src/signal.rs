//! Exogenous time signals: the plant disturbance d(t) and reference excitations.

/// A single sinusoid `amplitude * sin(frequency * t + phase)`; frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Sinusoid {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.amplitude * self.frequency * (self.frequency * t + self.phase).cos()
    }
}

/// Bounded scalar signal of time.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Signal {
    #[default]
    Zero,
    Constant(f64),
    Sinusoid {
        wave: Sinusoid,
        offset: f64,
    },
    SumOfSinusoids {
        waves: Vec<Sinusoid>,
        offset: f64,
    },
}

impl Signal {
    pub fn sinusoid(amplitude: f64, frequency: f64) -> Self {
        Signal::Sinusoid {
            wave: Sinusoid {
                amplitude,
                frequency,
                phase: 0.0,
            },
            offset: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant(c) => *c,
            Signal::Sinusoid { wave, offset } => offset + wave.eval(t),
            Signal::SumOfSinusoids { waves, offset } => {
                offset + waves.iter().map(|w| w.eval(t)).sum::<f64>()
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Signal::Zero | Signal::Constant(_) => 0.0,
            Signal::Sinusoid { wave, .. } => wave.derivative(t),
            Signal::SumOfSinusoids { waves, .. } => waves.iter().map(|w| w.derivative(t)).sum(),
        }
    }

    /// Closed-form bound on `sup_t |d(t)|`.
    pub fn bound(&self) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant(c) => c.abs(),
            Signal::Sinusoid { wave, offset } => offset.abs() + wave.amplitude.abs(),
            Signal::SumOfSinusoids { waves, offset } => {
                offset.abs() + waves.iter().map(|w| w.amplitude.abs()).sum::<f64>()
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        let wave_ok = |w: &Sinusoid| {
            w.amplitude.is_finite() && w.frequency.is_finite() && w.phase.is_finite()
        };
        match self {
            Signal::Zero => true,
            Signal::Constant(c) => c.is_finite(),
            Signal::Sinusoid { wave, offset } => offset.is_finite() && wave_ok(wave),
            Signal::SumOfSinusoids { waves, offset } => {
                offset.is_finite() && waves.iter().all(wave_ok)
            }
        }
    }
}
