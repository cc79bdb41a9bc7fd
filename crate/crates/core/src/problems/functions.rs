//! Standard test functions in their usual (minimization) form and native
//! coordinates.

use std::f64::consts::{E, PI};

use crate::error::{check_dim, BaxError, Result};

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Global minimum of Hartmann-6 on `[0, 1]⁶`.
pub const HARTMANN6_MIN: f64 = -3.322_368_011_415_51;
/// A global minimizer of Hartmann-6.
pub const HARTMANN6_ARGMIN: [f64; 6] = [0.201_69, 0.150_011, 0.476_874, 0.275_332, 0.311_652, 0.657_3];

/// Half-width of Ackley's usual search box.
pub const ACKLEY_BOUND: f64 = 32.768;

pub fn hartmann6(x: &[f64]) -> Result<f64> {
    check_dim(6, x.len())?;
    Ok(-HARTMANN_ALPHA
        .iter()
        .zip(HARTMANN_A.iter().zip(&HARTMANN_P))
        .map(|(alpha, (a, p))| {
            let s: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-s).exp()
        })
        .sum::<f64>())
}

pub fn ackley(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(BaxError::EmptyInput("ackley input"));
    }
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    Ok(-20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E)
}

pub fn himmelblau(x: &[f64]) -> Result<f64> {
    check_dim(2, x.len())?;
    let (a, b) = (x[0], x[1]);
    Ok((a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2))
}

pub fn rosenbrock(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(BaxError::DimensionMismatch {
            expected: 2,
            found: x.len(),
        });
    }
    Ok(x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum())
}
