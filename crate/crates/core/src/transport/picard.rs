use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::Vec3;

use super::operators::{j_field, sk_field, TransportSetup};
use super::BoundaryData;

/// Deepest iterate the regularity decomposition uses.
pub const MAX_DEPTH: usize = 3;

/// Rough number of base-function evaluations behind one value of `(S K)^i f`.
pub fn nested_cost(setup: &TransportSetup, i: usize) -> f64 {
    let per_level = setup.chord.nominal_nodes() as f64 * setup.velocity.len() as f64;
    per_level.powi(i as i32)
}

fn check_budget(setup: &TransportSetup, i: usize, budget: f64) -> Result<()> {
    let needed = nested_cost(setup, i);
    if needed > budget {
        return Err(Error::BudgetExceeded { depth: i, needed, budget });
    }
    Ok(())
}

/// `(S_Omega K)^i f` as an evaluator tree.
pub fn iterate_field(setup: &TransportSetup, base: &Field, i: usize) -> Field {
    let mut f = base.clone();
    for _ in 0..i {
        f = sk_field(setup, &f);
    }
    f
}

/// `g_i = (S_Omega K)^i J g`.
pub fn picard_field(setup: &TransportSetup, data: &BoundaryData, i: usize, budget: f64) -> Result<Field> {
    if i > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!("iterate order {i} exceeds {MAX_DEPTH}")));
    }
    check_budget(setup, i, budget)?;
    Ok(iterate_field(setup, &j_field(setup, data), i))
}

pub fn picard_term(setup: &TransportSetup, data: &BoundaryData, i: usize, x: &Vec3, v: &Vec3, budget: f64) -> Result<f64> {
    picard_field(setup, data, i, budget)?.eval(x, v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: Vec<f64>,
    /// `|g_{depth+1}|` when affordable, otherwise a geometric extrapolation
    /// from the last two terms.
    pub residual: f64,
    pub residual_extrapolated: bool,
    /// Some term is larger in magnitude than its predecessor.
    pub non_decay: bool,
}

/// Partial sum `g_0 + ... + g_depth` with a remainder proxy.
pub fn truncated_series_solve(
    setup: &TransportSetup,
    data: &BoundaryData,
    x: &Vec3,
    v: &Vec3,
    depth: usize,
    budget: f64,
) -> Result<SeriesValue> {
    if depth > MAX_DEPTH + 1 {
        return Err(Error::InvalidParameter(format!("series depth {depth} exceeds {}", MAX_DEPTH + 1)));
    }
    if data.is_zero() {
        return Ok(SeriesValue {
            value: 0.0,
            terms: vec![0.0; depth + 1],
            residual: 0.0,
            residual_extrapolated: false,
            non_decay: false,
        });
    }
    for i in 0..=depth {
        check_budget(setup, i, budget)?;
    }
    let base = j_field(setup, data);
    let mut terms = Vec::with_capacity(depth + 1);
    let mut f = base;
    for i in 0..=depth {
        if i > 0 {
            f = sk_field(setup, &f);
        }
        terms.push(f.eval(x, v)?);
    }
    let next = depth + 1;
    let (residual, residual_extrapolated) = if nested_cost(setup, next) <= budget {
        (sk_field(setup, &f).eval(x, v)?.abs(), false)
    } else if depth >= 1 && terms[depth - 1] != 0.0 {
        let ratio = (terms[depth] / terms[depth - 1]).abs();
        (terms[depth].abs() * ratio, true)
    } else {
        (terms[depth].abs(), true)
    };
    let non_decay = terms.windows(2).any(|w| w[1].abs() > w[0].abs());
    Ok(SeriesValue {
        value: terms.iter().sum(),
        terms,
        residual,
        residual_extrapolated,
        non_decay,
    })
}
