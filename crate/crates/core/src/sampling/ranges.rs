use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SamplingError;

/// Uniform draw interval of one control electrode, V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRange {
    pub electrode: u8,
    pub low: f64,
    pub high: f64,
}

impl ControlRange {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

/// Control intervals plus the input voltages for logic 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageRanges {
    pub controls: Vec<ControlRange>,
    pub input_low: f64,
    pub input_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Controls in `[-1, 1]` V, inputs 0 / 0.5 V.
    Standard,
    /// U1, U4, U5 in `[-0.5, 0.5]` V, U6, U7 in `[-0.3, 0.3]` V, inputs
    /// 0 / 0.1 V: the window in which trained surrogate models are valid.
    SurrogateComparison,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Standard => "standard",
            Preset::SurrogateComparison => "surrogate-comparison",
        })
    }
}

impl FromStr for Preset {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Preset::Standard),
            "surrogate-comparison" => Ok(Preset::SurrogateComparison),
            _ => Err(SamplingError::InvalidRanges(format!("unknown preset {s:?}"))),
        }
    }
}

impl VoltageRanges {
    /// Expands a preset for the standard control electrodes U1, U4, U5,
    /// U6, U7.
    pub fn preset(p: Preset) -> Self {
        let c = |electrode, half: f64| ControlRange { electrode, low: -half, high: half };
        match p {
            Preset::Standard => Self {
                controls: [1, 4, 5, 6, 7].into_iter().map(|e| c(e, 1.0)).collect(),
                input_low: 0.0,
                input_high: 0.5,
            },
            Preset::SurrogateComparison => Self {
                controls: vec![c(1, 0.5), c(4, 0.5), c(5, 0.5), c(6, 0.3), c(7, 0.3)],
                input_low: 0.0,
                input_high: 0.1,
            },
        }
    }

    pub fn electrodes(&self) -> Vec<u8> {
        self.controls.iter().map(|c| c.electrode).collect()
    }

    /// Product of the control range widths, `V^d`.
    pub fn volume(&self) -> f64 {
        self.controls.iter().map(ControlRange::width).product()
    }

    pub fn contains(&self, controls: &[f64]) -> bool {
        controls.len() == self.controls.len() && self.controls.iter().zip(controls).all(|(r, &v)| r.contains(v))
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        let bad = |m: String| Err(SamplingError::InvalidRanges(m));
        if self.controls.is_empty() {
            return bad("no control electrodes".into());
        }
        for r in &self.controls {
            if !(r.low.is_finite() && r.high.is_finite() && r.low <= r.high) {
                return bad(format!("U{}: [{}, {}]", r.electrode, r.low, r.high));
            }
        }
        let mut seen = self.electrodes();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.controls.len() {
            return bad("duplicate control electrode".into());
        }
        if !(self.input_low.is_finite() && self.input_high.is_finite()) {
            return bad("non-finite input voltage".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand_to_explicit_ranges() {
        let s = VoltageRanges::preset(Preset::Standard);
        assert_eq!(s.electrodes(), vec![1, 4, 5, 6, 7]);
        assert_eq!(s.volume(), 32.0);
        assert_eq!((s.input_low, s.input_high), (0.0, 0.5));

        let q = VoltageRanges::preset(Preset::SurrogateComparison);
        let half: Vec<f64> = q.controls.iter().map(|c| c.high).collect();
        assert_eq!(half, vec![0.5, 0.5, 0.5, 0.3, 0.3]);
        assert!(q.controls.iter().all(|c| c.low == -c.high));
        assert_eq!(q.input_high, 0.1);
        assert!(s.validate().is_ok() && q.validate().is_ok());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in [Preset::Standard, Preset::SurrogateComparison] {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("wide".parse::<Preset>().is_err());
    }

    #[test]
    fn inverted_range_is_invalid() {
        let mut r = VoltageRanges::preset(Preset::Standard);
        r.controls[2].low = 2.0;
        assert!(r.validate().is_err());
    }
}
