//! Bracketed secant (Illinois) iteration for scalar roots.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Root {
    pub x: f64,
    pub residual: f64,
    pub evaluations: usize,
}

/// Root of `f` near `guess`. A bracket is found from probes at `guess ± step·2^k`
/// (the secant through the first two probes is tried first), then narrowed
/// by the Illinois rule until the update falls below `tol·(1 + |x|)`.
pub(crate) fn bracketed_secant(
    mut f: impl FnMut(f64) -> Result<f64>,
    guess: f64,
    step: f64,
    tol: f64,
    t: f64,
) -> Result<Root> {
    let mut evaluations = 0;
    let mut eval = |x: f64, evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::RootFind {
                t,
                detail: format!("residual is not finite at σ = {x}"),
            })
        }
    };
    let fg = eval(guess, &mut evaluations)?;
    if fg == 0.0 {
        return Ok(Root {
            x: guess,
            residual: 0.0,
            evaluations,
        });
    }
    let probe = guess + step;
    let fp = eval(probe, &mut evaluations)?;
    let mut bracket = if fg * fp <= 0.0 {
        Some(((guess, fg), (probe, fp)))
    } else {
        None
    };
    if bracket.is_none() && fp != fg {
        let c = probe - fp * (probe - guess) / (fp - fg);
        if c.is_finite() {
            // Overshoot slightly so that an almost linear residual changes sign.
            let c = c + 1e-3 * (c - guess);
            let fc = eval(c, &mut evaluations)?;
            if fc * fg <= 0.0 {
                bracket = Some(((guess, fg), (c, fc)));
            }
        }
    }
    if bracket.is_none() {
        let mut width = step;
        for _ in 0..60 {
            width *= 2.0;
            for x in [guess + width, guess - width] {
                let fx = eval(x, &mut evaluations)?;
                if fx * fg <= 0.0 {
                    bracket = Some(((guess, fg), (x, fx)));
                    break;
                }
            }
            if bracket.is_some() {
                break;
            }
        }
    }
    let ((mut a, mut fa), (mut b, mut fb)) = bracket.ok_or_else(|| Error::RootFind {
        t,
        detail: format!("no sign change found around σ = {guess}"),
    })?;
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            residual: 0.0,
            evaluations,
        });
    }
    let mut last = b;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && (c - a) * (c - b) <= 0.0 {
            c
        } else {
            0.5 * (a + b)
        };
        let fc = eval(c, &mut evaluations)?;
        let done = fc == 0.0 || (c - last).abs() <= tol * (1.0 + c.abs()) || (b - a).abs() <= tol * (1.0 + c.abs());
        if done {
            return Ok(Root {
                x: c,
                residual: fc,
                evaluations,
            });
        }
        last = c;
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
    }
    Err(Error::RootFind {
        t,
        detail: format!("no convergence in 200 iterations (bracket [{a}, {b}])"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_roots_of_smooth_functions() {
        let r = bracketed_secant(|x| Ok(x * x * x - 2.0), 0.0, 0.1, 1e-14, 0.0).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
        let r = bracketed_secant(|x| Ok((x - 3.0) * 1e-6), 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((r.x - 3.0).abs() < 1e-10);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let e = bracketed_secant(|x| Ok(1.0 + x * x), 0.0, 0.1, 1e-10, 0.5);
        assert!(matches!(e, Err(Error::RootFind { t, .. }) if t == 0.5));
    }
}
