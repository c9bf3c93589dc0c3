//! Chebyshev polynomials and the step polynomial
//! `Step(x) = T_d(-1 + 2x/(1-nu)) / T_d((1+nu)/(1-nu))` with `d = ceil(m)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `T_m(x)` by the three-term recurrence.
pub fn chebyshev_t(m: u32, x: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..m {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `T_m(x)` from `cos(m acos x)` or `cosh(m acosh |x|)`.
pub fn chebyshev_t_closed(m: u32, x: f64) -> f64 {
    let m = m as f64;
    if x.abs() <= 1.0 {
        (m * x.acos()).cos()
    } else if x > 1.0 {
        (m * x.acosh()).cosh()
    } else {
        let sign = if (m as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (m * (-x).acosh()).cosh()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolyParams {
    pub m: f64,
    pub nu: f64,
}

impl StepPolyParams {
    pub fn new(m: f64, nu: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("m must be positive, got {m}")));
        }
        if !(nu > 0.0 && nu <= 0.25) {
            return Err(Error::InvalidParameter(format!("nu must lie in (0, 1/4], got {nu}")));
        }
        Ok(Self { m, nu })
    }

    /// Polynomial degree `ceil(m)`.
    pub fn degree(&self) -> u32 {
        self.m.ceil() as u32
    }

    fn argument(&self, x: f64) -> f64 {
        // written so that x = 1 reproduces (1 + nu)/(1 - nu) bit for bit
        ((2.0 * x - 1.0) + self.nu) / (1.0 - self.nu)
    }
}

pub fn step_poly(p: &StepPolyParams, x: f64) -> f64 {
    let d = p.degree();
    chebyshev_t(d, p.argument(x)) / chebyshev_t(d, p.argument(1.0))
}

/// `1 / (1 + m^2 nu / (2 (1 - nu)))`
pub fn step_bound(p: &StepPolyParams) -> f64 {
    1.0 / (1.0 + p.m * p.m * p.nu / (2.0 * (1.0 - p.nu)))
}

pub const STEP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRow {
    pub m: f64,
    pub nu: f64,
    pub degree: u32,
    /// `max |Step|` over the open-interval grid.
    pub max_abs_step: f64,
    pub bound: f64,
    pub margin: f64,
    pub violations: usize,
    /// `max |Step|` on the closed interval `[0, 1 - nu]`.
    pub max_abs_closed: f64,
    pub step_at_one: f64,
}

impl StepRow {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.max_abs_closed <= 1.0 + STEP_TOL && self.step_at_one == 1.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepClaimReport {
    pub x_samples: usize,
    pub tolerance: f64,
    pub rows: Vec<StepRow>,
    pub holds: bool,
}

/// The `(m, nu)` grid used by default.
pub fn default_grid() -> Vec<(f64, f64)> {
    let ms = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let nus = [0.01, 0.05, 0.1, 0.2, 0.25];
    ms.iter()
        .flat_map(|&m| nus.iter().map(move |&nu| (m, nu)))
        .collect()
}

/// Checks `|Step(x)| <= bound + 1e-12` on `x_samples` interior points of
/// `(0, 1 - nu)`, `|Step| <= 1` on `[0, 1 - nu]` and `Step(1) = 1`.
pub fn verify_step_claim(grid: &[(f64, f64)], x_samples: usize) -> Result<StepClaimReport> {
    let mut rows = Vec::with_capacity(grid.len());
    for &(m, nu) in grid {
        let p = StepPolyParams::new(m, nu)?;
        let bound = step_bound(&p);
        let right = 1.0 - nu;
        let mut max_abs: f64 = 0.0;
        let mut violations = 0;
        for i in 1..=x_samples {
            let x = right * i as f64 / (x_samples + 1) as f64;
            let s = step_poly(&p, x).abs();
            max_abs = max_abs.max(s);
            if s > bound + STEP_TOL {
                violations += 1;
            }
        }
        let ends = step_poly(&p, 0.0).abs().max(step_poly(&p, right).abs());
        rows.push(StepRow {
            m,
            nu,
            degree: p.degree(),
            max_abs_step: max_abs,
            bound,
            margin: bound - max_abs,
            violations,
            max_abs_closed: max_abs.max(ends),
            step_at_one: step_poly(&p, 1.0),
        });
    }
    let holds = rows.iter().all(StepRow::holds);
    Ok(StepClaimReport {
        x_samples,
        tolerance: STEP_TOL,
        rows,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_examples() {
        assert_eq!(chebyshev_t(3, 0.5), -1.0);
        assert_eq!(chebyshev_t(2, 3.0), 17.0);
        for m in 0..10 {
            assert_eq!(chebyshev_t(m, 1.0), 1.0);
        }
    }

    #[test]
    fn step_example_at_midpoint() {
        let p = StepPolyParams::new(2.0, 0.1).unwrap();
        let expect = -1.0 / (2.0 * (11.0f64 / 9.0).powi(2) - 1.0);
        assert!((step_poly(&p, 0.45) - expect).abs() < 1e-12);
        assert!((expect + 81.0 / 161.0).abs() < 1e-15);
    }

    #[test]
    fn step_at_one_is_exact() {
        for (m, nu) in default_grid() {
            let p = StepPolyParams::new(m, nu).unwrap();
            assert_eq!(step_poly(&p, 1.0), 1.0);
        }
    }

    #[test]
    fn bound_example() {
        let p = StepPolyParams::new(8.0, 0.1).unwrap();
        assert!((step_bound(&p) - 1.0 / (1.0 + 6.4 / 1.8)).abs() < 1e-15);
    }

    #[test]
    fn params_validated() {
        assert!(StepPolyParams::new(0.0, 0.1).is_err());
        assert!(StepPolyParams::new(1.0, 0.3).is_err());
        assert!(StepPolyParams::new(1.0, 0.25).is_ok());
    }
}
