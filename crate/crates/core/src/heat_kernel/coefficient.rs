use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::{SpaceFn, SpaceTimeFn};
use std::fmt;
use std::sync::Arc;

/// Zero-order coefficient `q(x, t)` of the operator `∂_t − Δ − q`.
#[derive(Clone)]
pub struct ZeroOrderCoefficient {
    field: Field,
    time_derivative: Option<SpaceTimeFn>,
    bound: Option<f64>,
}

#[derive(Clone)]
enum Field {
    Zero,
    Constant(f64),
    General {
        q: SpaceTimeFn,
        stationary: bool,
    },
    /// One part per axis, each a function of that axis coordinate and `t`.
    Separable(Vec<ZeroOrderCoefficient>),
}

impl fmt::Debug for ZeroOrderCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Field::Zero => write!(f, "q = 0"),
            Field::Constant(c) => write!(f, "q = {c}"),
            Field::General { stationary, .. } => {
                write!(f, "q(x{})", if *stationary { "" } else { ", t" })
            }
            Field::Separable(parts) => write!(f, "separable {parts:?}"),
        }
    }
}

impl ZeroOrderCoefficient {
    fn from_field(field: Field) -> Self {
        ZeroOrderCoefficient {
            field,
            time_derivative: None,
            bound: None,
        }
    }

    pub fn zero() -> Self {
        Self::from_field(Field::Zero)
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Self::from_field(Field::Constant(c))
        }
    }

    /// Time-independent field `q(x)`.
    pub fn stationary(q: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let q: SpaceFn = Arc::new(q);
        Self::from_field(Field::General {
            q: Arc::new(move |x, _| q(x)),
            stationary: true,
        })
    }

    pub fn space_time(q: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_field(Field::General {
            q: Arc::new(q),
            stationary: false,
        })
    }

    /// `q(x, y, t) = q_x(x, t) + q_y(y, t)` on a rectangle.
    pub fn separable(parts: Vec<ZeroOrderCoefficient>) -> Self {
        Self::from_field(Field::Separable(parts))
    }

    /// Supply `∂_t q` explicitly instead of differencing.
    pub fn with_time_derivative(mut self, dq: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(dq));
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn is_zero(&self) -> bool {
        match &self.field {
            Field::Zero => true,
            Field::Separable(parts) => parts.iter().all(|p| p.is_zero()),
            _ => false,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match &self.field {
            Field::Zero => Some(0.0),
            Field::Constant(c) => Some(*c),
            Field::Separable(parts) => parts.iter().map(|p| p.constant_value()).sum::<Option<f64>>(),
            Field::General { .. } => None,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.field {
            Field::Zero | Field::Constant(_) => true,
            Field::General { stationary, .. } => *stationary,
            Field::Separable(parts) => parts.iter().all(|p| p.is_time_independent()),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match &self.field {
            Field::Zero => 0.0,
            Field::Constant(c) => *c,
            Field::General { q, .. } => q(x, t),
            Field::Separable(parts) => parts.iter().enumerate().map(|(a, p)| p.eval(&x[a..a + 1], t)).sum(),
        }
    }

    /// `∂_t q(x, t)`, exact when supplied, otherwise a fourth-order central difference.
    pub fn dt(&self, x: &[f64], t: f64) -> f64 {
        if self.is_time_independent() {
            return 0.0;
        }
        if let Some(dq) = &self.time_derivative {
            return dq(x, t);
        }
        if let Field::Separable(parts) = &self.field {
            return parts.iter().enumerate().map(|(a, p)| p.dt(&x[a..a + 1], t)).sum();
        }
        let eta = 1e-3 * t.abs().max(1.0);
        (self.eval(x, t - 2.0 * eta) - 8.0 * self.eval(x, t - eta) + 8.0 * self.eval(x, t + eta)
            - self.eval(x, t + 2.0 * eta))
            / (12.0 * eta)
    }

    /// Part acting on one axis of a rectangle, as a function of that coordinate.
    pub fn axis_part(&self, axis: usize) -> Result<ZeroOrderCoefficient> {
        match &self.field {
            Field::Zero => Ok(Self::zero()),
            Field::Constant(c) => Ok(if axis == 0 { Self::constant(*c) } else { Self::zero() }),
            Field::Separable(parts) => parts
                .get(axis)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("separable coefficient has no part for axis {axis}"))),
            Field::General { .. } => Err(Error::InvalidInput(
                "on a rectangle the coefficient q must be separable (q_x(x,t) + q_y(y,t))".into(),
            )),
        }
    }

    /// Supplied bound on `|q|`, or a sampled estimate over `Ω̄ × [0, horizon]`.
    pub fn sup_estimate(&self, domain: &DomainSpec, horizon: f64) -> f64 {
        if let Some(b) = self.bound {
            return b;
        }
        if let Some(c) = self.constant_value() {
            return c.abs();
        }
        let lengths = domain.lengths();
        let n = 17;
        let nt = if self.is_time_independent() { 1 } else { n };
        let mut sup = 0.0f64;
        for k in 0..nt {
            let t = horizon * k as f64 / (n - 1) as f64;
            for i in 0..n {
                let x0 = lengths[0] * i as f64 / (n - 1) as f64;
                if lengths.len() == 1 {
                    sup = sup.max(self.eval(&[x0], t).abs());
                } else {
                    for j in 0..n {
                        let y0 = lengths[1] * j as f64 / (n - 1) as f64;
                        sup = sup.max(self.eval(&[x0, y0], t).abs());
                    }
                }
            }
        }
        sup
    }
}
