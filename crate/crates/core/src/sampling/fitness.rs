use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SamplingError;
use crate::analysis::subtract_average;

/// Default separation weight `k` in the fitness denominator.
pub const DEFAULT_K: f64 = 0.01;
/// Lower bound on the fit MSE, nA^2. A perfect fit of unit slope then scores
/// `1 / sqrt(MSE_FLOOR) = 1e6`.
pub const MSE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Gate {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
}

impl Gate {
    pub const ALL: [Gate; 6] = [Gate::And, Gate::Or, Gate::Nand, Gate::Nor, Gate::Xor, Gate::Xnor];
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gate::And => "AND",
            Gate::Or => "OR",
            Gate::Nand => "NAND",
            Gate::Nor => "NOR",
            Gate::Xor => "XOR",
            Gate::Xnor => "XNOR",
        })
    }
}

impl FromStr for Gate {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Gate::ALL
            .into_iter()
            .find(|g| g.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| SamplingError::UnknownGate(s.to_string()))
    }
}

/// Truth table over the inputs `00, 10, 01, 11`.
pub fn gate_table(gate: Gate) -> [f64; 4] {
    match gate {
        Gate::And => [0.0, 0.0, 0.0, 1.0],
        Gate::Or => [0.0, 1.0, 1.0, 1.0],
        Gate::Nand => [1.0, 1.0, 1.0, 0.0],
        Gate::Nor => [1.0, 0.0, 0.0, 0.0],
        Gate::Xor => [0.0, 1.0, 1.0, 0.0],
        Gate::Xnor => [1.0, 0.0, 0.0, 1.0],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessResult {
    pub gate: Gate,
    pub k: f64,
    /// Slope, nA per logic unit.
    pub m: f64,
    /// Intercept, nA.
    pub c: f64,
    /// Mean squared residual over the four points (floored), nA^2.
    pub mse: f64,
    pub fitness: f64,
}

/// Least-squares fit `I = m G + c` of the current vector to the gate's
/// truth table `G`, scored as `F = m / (sqrt(MSE) + k |c|)`.
///
/// The MSE is divided by 4 (the number of points) and floored at
/// [`MSE_FLOOR`]. Slope and residuals are computed from the mean-free
/// currents, so with `k = 0` the score is exactly unchanged when the vector
/// is shifted by its own mean.
pub fn evaluate_fitness(currents: [f64; 4], gate: Gate, k: f64) -> FitnessResult {
    let g = gate_table(gate);
    let g_mean = g.iter().sum::<f64>() / 4.0;
    let centred = subtract_average(currents);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (gi, yi) in g.iter().zip(&centred) {
        sxy += (gi - g_mean) * yi;
        sxx += (gi - g_mean) * (gi - g_mean);
    }
    let m = sxy / sxx;
    let i_mean = currents.iter().sum::<f64>() / 4.0;
    let c = i_mean - m * g_mean;
    let sse: f64 = g.iter().zip(&centred).map(|(gi, yi)| (yi - m * (gi - g_mean)).powi(2)).sum();
    let mse = (sse / 4.0).max(MSE_FLOOR);
    FitnessResult { gate, k, m, c, mse, fitness: m / (mse.sqrt() + k * c.abs()) }
}

/// `(F_min, fraction of vectors with F > F_min)` for every threshold.
pub fn abundance_curve(
    currents: &[[f64; 4]],
    gate: Gate,
    k: f64,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>, SamplingError> {
    if currents.is_empty() {
        return Err(SamplingError::EmptyDataset);
    }
    let mut scores: Vec<f64> = currents.iter().map(|c| evaluate_fitness(*c, gate, k).fitness).collect();
    scores.sort_by(f64::total_cmp);
    let n = scores.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let at_or_below = scores.partition_point(|&s| s <= t);
            (t, (scores.len() - at_or_below) as f64 / n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_tables() {
        assert_eq!(gate_table(Gate::And), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(gate_table(Gate::Xor), [0.0, 1.0, 1.0, 0.0]);
        assert_eq!(gate_table(Gate::Nor), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(gate_table(Gate::Or), [0.0, 1.0, 1.0, 1.0]);
        assert_eq!(gate_table(Gate::Nand), [1.0, 1.0, 1.0, 0.0]);
        assert_eq!(gate_table(Gate::Xnor), [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn gate_names_parse() {
        for g in Gate::ALL {
            assert_eq!(g.to_string().to_lowercase().parse::<Gate>().unwrap(), g);
        }
        assert!(matches!("MUX".parse::<Gate>(), Err(SamplingError::UnknownGate(_))));
    }

    #[test]
    fn hand_computed_least_squares() {
        let r = evaluate_fitness([0.1, 0.0, 0.1, 1.0], Gate::And, 0.01);
        assert!((r.m - 0.933_333_333).abs() < 1e-8);
        assert!((r.c - 0.066_666_667).abs() < 1e-8);
        assert!((r.mse - 0.001_666_667).abs() < 1e-9);
        assert!((r.fitness - 22.49).abs() < 0.01, "{}", r.fitness);
    }

    #[test]
    fn perfect_fit_hits_the_floor() {
        let r = evaluate_fitness([0.0, 0.0, 0.0, 1.0], Gate::And, 0.01);
        assert_eq!(r.m, 1.0);
        assert_eq!(r.c, 0.0);
        assert_eq!(r.mse, MSE_FLOOR);
        assert!((r.fitness - 1e6).abs() < 1e-6);
    }

    #[test]
    fn constant_vector_scores_zero() {
        for g in Gate::ALL {
            let r = evaluate_fitness([5.0; 4], g, 0.01);
            assert_eq!(r.m, 0.0);
            assert_eq!(r.fitness, 0.0);
        }
    }

    #[test]
    fn abundance_edge_cases() {
        let perfect = vec![[0.0, 0.0, 0.0, 1.0]; 7];
        let c = abundance_curve(&perfect, Gate::And, 0.01, &[f64::NEG_INFINITY, 0.0, 10.0, 9.9e5, 2e6]).unwrap();
        let fr: Vec<f64> = c.iter().map(|p| p.1).collect();
        assert_eq!(fr, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        // AND vectors never fit XOR with positive slope
        let x = abundance_curve(&perfect, Gate::Xor, 0.01, &[0.0, 1.0]).unwrap();
        assert!(x.iter().all(|p| p.1 == 0.0));
        assert!(matches!(abundance_curve(&[], Gate::And, 0.01, &[0.0]), Err(SamplingError::EmptyDataset)));
    }
}
