//! Boundary driving signals phi(t).

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Validation findings that do not prevent running.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalWarning(pub String);

#[derive(Debug, Clone, PartialEq)]
pub enum DrivingSignal {
    /// phi(t) = ramp(t) * A * sin(Omega t), with a linear ramp from 0 to A
    /// over `ramp_duration`. The ramp starts at t = -warmup, so with
    /// warmup = ramp_duration the full amplitude is reached at t = 0.
    RampedSine { amplitude: f64, frequency: f64, ramp_duration: f64, warmup: f64 },
    /// phi(t) = A(t) * sin(Omega t) where A(t) concatenates per-bit pulses
    /// A0(s; b) = C * b * (exp(-Omega s / 2.5) - exp(-Omega s / 0.45)) on
    /// consecutive windows of length `period`.
    BitSequence { bits: Vec<bool>, frequency: f64, period: f64, amp_factor: f64 },
}

impl DrivingSignal {
    pub fn ramped_sine(amplitude: f64, frequency: f64, ramp_duration: f64) -> Result<Self> {
        let s = DrivingSignal::RampedSine { amplitude, frequency, ramp_duration, warmup: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn bit_sequence(bits: Vec<bool>, frequency: f64, period: f64, amp_factor: f64) -> Result<Self> {
        let s = DrivingSignal::BitSequence { bits, frequency, period, amp_factor };
        s.validate()?;
        Ok(s)
    }

    /// A silent boundary.
    pub fn quiet() -> Self {
        DrivingSignal::RampedSine { amplitude: 0.0, frequency: 1.0, ramp_duration: 0.0, warmup: 0.0 }
    }

    pub fn frequency(&self) -> f64 {
        match self {
            DrivingSignal::RampedSine { frequency, .. } => *frequency,
            DrivingSignal::BitSequence { frequency, .. } => *frequency,
        }
    }

    pub fn warmup(&self) -> f64 {
        match self {
            DrivingSignal::RampedSine { warmup, .. } => *warmup,
            DrivingSignal::BitSequence { .. } => 0.0,
        }
    }

    /// Move the ramp into a warmup interval before t = 0.
    pub fn with_warmup(self, warmup: f64) -> Self {
        match self {
            DrivingSignal::RampedSine { amplitude, frequency, ramp_duration, .. } => {
                DrivingSignal::RampedSine { amplitude, frequency, ramp_duration, warmup }
            }
            other => other,
        }
    }

    /// Hard errors only; soft findings come from [`DrivingSignal::warnings`].
    pub fn validate(&self) -> Result<()> {
        match self {
            DrivingSignal::RampedSine { amplitude, frequency, ramp_duration, warmup } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::InvalidParameter(format!("amplitude must be >= 0 (got {amplitude})")));
                }
                if !(frequency.is_finite() && *frequency > 0.0) {
                    return Err(Error::InvalidParameter(format!("frequency must be > 0 (got {frequency})")));
                }
                if !(ramp_duration.is_finite() && *ramp_duration >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ramp_duration must be >= 0 (got {ramp_duration})"
                    )));
                }
                if !(warmup.is_finite() && *warmup >= 0.0) {
                    return Err(Error::InvalidParameter(format!("warmup must be >= 0 (got {warmup})")));
                }
            }
            DrivingSignal::BitSequence { bits, frequency, period, amp_factor } => {
                if bits.is_empty() {
                    return Err(Error::InvalidParameter("bit sequence must be nonempty".into()));
                }
                if !(frequency.is_finite() && *frequency > 0.0) {
                    return Err(Error::InvalidParameter(format!("frequency must be > 0 (got {frequency})")));
                }
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidParameter(format!("period must be > 0 (got {period})")));
                }
                if !(amp_factor.is_finite() && *amp_factor > 0.0) {
                    return Err(Error::InvalidParameter(format!("amp_factor must be > 0 (got {amp_factor})")));
                }
            }
        }
        Ok(())
    }

    /// Soft validation. A bit-sequence period is expected to be an integer
    /// multiple of the driving period 2*pi/Omega (relative tolerance 1e-9);
    /// a mismatch is reported here rather than rejected, since the window
    /// ends carry only exp(-Omega P / 2.5) leakage either way.
    pub fn warnings(&self) -> Vec<SignalWarning> {
        let mut out = Vec::new();
        if let DrivingSignal::BitSequence { frequency, period, .. } = self {
            let cycles = period * frequency / (2.0 * PI);
            if (cycles - cycles.round()).abs() > 1e-9 * cycles.max(1.0) {
                out.push(SignalWarning(format!(
                    "period {period} is not an integer multiple of the driving period {:.6} ({cycles:.4} cycles)",
                    2.0 * PI / frequency
                )));
            }
        }
        out
    }

    /// Evaluate phi(t). Pure and total for t >= -warmup.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DrivingSignal::RampedSine { amplitude, frequency, ramp_duration, warmup } => {
                let ramp = if *ramp_duration > 0.0 {
                    ((t + warmup).max(0.0) / ramp_duration).min(1.0)
                } else {
                    1.0
                };
                ramp * amplitude * (frequency * t).sin()
            }
            DrivingSignal::BitSequence { frequency, .. } => {
                self.bit_amplitude(t) * (frequency * t).sin()
            }
        }
    }

    /// The amplitude envelope A(t) of a bit sequence (0 for ramped sine
    /// callers it is not meaningful for).
    pub fn bit_amplitude(&self, t: f64) -> f64 {
        match self {
            DrivingSignal::BitSequence { bits, frequency, period, amp_factor } => {
                if t < 0.0 {
                    return 0.0;
                }
                let i = (t / period).floor() as usize;
                if i >= bits.len() {
                    return 0.0;
                }
                bit_pulse(t - i as f64 * period, bits[i], *frequency, *amp_factor)
            }
            DrivingSignal::RampedSine { .. } => 0.0,
        }
    }
}

/// A0(t; b) = C * b * (exp(-Omega t / 2.5) - exp(-Omega t / 0.45)).
pub fn bit_pulse(t: f64, bit: bool, frequency: f64, amp_factor: f64) -> f64 {
    if !bit || t < 0.0 {
        return 0.0;
    }
    amp_factor * ((-frequency * t / 2.5).exp() - (-frequency * t / 0.45).exp())
}
