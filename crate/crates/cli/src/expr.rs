//! Closed-form fields read from the config, with symbolic partial derivatives.

use exmex::prelude::*;
use exmex::Differentiate;
use std::sync::Arc;
use timecoef::{Error, Result, SpaceFn, SpaceTimeFn};

/// Every variable an expression may use, in evaluation-slot order.
pub const VARS: [&str; 5] = ["x", "y", "t", "sigma", "u"];

#[derive(Clone, Debug)]
pub struct Expr {
    ex: FlatEx<f64>,
    /// `VARS` slot of each expression variable, in exmex order.
    slots: Vec<usize>,
}

impl Expr {
    /// Parses `text` for config key `key`, rejecting variables outside `allowed`.
    pub fn parse(key: &str, text: &str, allowed: &[&str]) -> Result<Self> {
        let ex =
            FlatEx::<f64>::parse(text).map_err(|e| Error::InvalidInput(format!("{key} = \"{text}\": {}", e.msg())))?;
        let slots = ex
            .var_names()
            .iter()
            .map(|v| {
                if !allowed.contains(&v.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "{key} = \"{text}\": unknown variable '{v}' (allowed: {})",
                        allowed.join(", ")
                    )));
                }
                Ok(VARS.iter().position(|w| w == v).expect("allowed names are in VARS"))
            })
            .collect::<Result<_>>()?;
        Ok(Expr { ex, slots })
    }

    pub fn uses(&self, var: &str) -> bool {
        self.ex.var_names().iter().any(|v| v == var)
    }

    /// Value of a variable-free expression.
    pub fn constant(&self) -> Option<f64> {
        self.slots.is_empty().then(|| self.eval(&[0.0; 5]))
    }

    /// Evaluates with `vals` laid out as in [`VARS`]. Failures give NaN, which
    /// the solvers reject as a non-finite sample.
    pub fn eval(&self, vals: &[f64; 5]) -> f64 {
        let mut buf = [0.0; 5];
        for (b, &s) in buf.iter_mut().zip(&self.slots) {
            *b = vals[s];
        }
        self.ex.eval(&buf[..self.slots.len()]).unwrap_or(f64::NAN)
    }

    /// `∂/∂var`, or `None` when exmex cannot differentiate an operator.
    pub fn partial(&self, var: &str) -> Option<Expr> {
        match self.ex.var_names().iter().position(|v| v == var) {
            None => Some(Expr::zero()),
            Some(i) => self.ex.clone().partial(i).ok().map(|ex| Expr {
                ex,
                slots: self.slots.clone(),
            }),
        }
    }

    fn zero() -> Expr {
        Expr {
            ex: FlatEx::parse("0").expect("literal parses"),
            slots: vec![],
        }
    }

    pub fn space(&self) -> SpaceFn {
        let e = self.clone();
        Arc::new(move |x: &[f64]| e.eval(&point(x, 0.0, 0.0, 0.0)))
    }

    pub fn space_time(&self) -> SpaceTimeFn {
        let e = self.clone();
        Arc::new(move |x: &[f64], t| e.eval(&point(x, t, 0.0, 0.0)))
    }

    pub fn time(&self) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let e = self.clone();
        move |t| e.eval(&[0.0, 0.0, t, 0.0, 0.0])
    }
}

pub fn point(x: &[f64], t: f64, sigma: f64, u: f64) -> [f64; 5] {
    [x[0], x.get(1).copied().unwrap_or(0.0), t, sigma, u]
}

/// `∂²/∂x² + ∂²/∂y²` over the first `dim` axes.
pub fn laplacian(e: &Expr, dim: usize) -> Option<SpaceFn> {
    let parts: Vec<Expr> = VARS[..dim]
        .iter()
        .map(|v| e.partial(v)?.partial(v))
        .collect::<Option<_>>()?;
    Some(Arc::new(move |x: &[f64]| {
        let p = point(x, 0.0, 0.0, 0.0);
        parts.iter().map(|d| d.eval(&p)).sum()
    }))
}
