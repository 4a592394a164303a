//! Scalar symbols `f` on the half-space (the functions being commuted with).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A user-supplied symbol with an optional analytic gradient.
#[derive(Clone)]
pub struct CustomSymbol {
    pub name: String,
    pub value: ScalarFn,
    pub gradient: Option<GradientFn>,
    /// Box outside of which the symbol vanishes numerically.
    pub support: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for CustomSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSymbol")
            .field("name", &self.name)
            .field("has_gradient", &self.gradient.is_some())
            .field("support", &self.support)
            .finish()
    }
}

/// Built-in symbols. All except `Custom` round-trip through JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Symbol {
    Constant {
        value: f64,
    },
    Linear {
        coeffs: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `A exp(-|x - c|² / (2 w²))`
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `A (1 + cos(π |x - c| / r)) / 2` for `|x - c| < r`, zero outside.
    CosineBump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Tensor product of one-dimensional windows equal to 1 on `[lo_i + ramp, hi_i - ramp]`
    /// with half-cosine ramps of width `ramp`, and 0 outside `[lo_i, hi_i]`.
    CoordinateWindow {
        lo: Vec<f64>,
        hi: Vec<f64>,
        ramp: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Sum {
        terms: Vec<Symbol>,
    },
    Scaled {
        factor: f64,
        inner: Box<Symbol>,
    },
    /// `x ↦ inner(x - shift)`
    Translated {
        shift: Vec<f64>,
        inner: Box<Symbol>,
    },
    #[serde(skip)]
    Custom(CustomSymbol),
}

fn one() -> f64 {
    1.0
}

/// Smooth step on `[0, 1]`: `(1 - cos(π u)) / 2`, and its derivative.
fn ramp_step(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0)
    } else {
        (0.5 * (1.0 - (PI * u).cos()), 0.5 * PI * (PI * u).sin())
    }
}

fn window_1d(t: f64, lo: f64, hi: f64, ramp: f64) -> (f64, f64) {
    let (up, dup) = ramp_step((t - lo) / ramp);
    let (down, ddown) = ramp_step((hi - t) / ramp);
    (up * down, (dup * down - up * ddown) / ramp)
}

impl Symbol {
    pub fn gaussian(center: Vec<f64>, width: f64) -> Self {
        Symbol::GaussianBump {
            center,
            width,
            amplitude: 1.0,
        }
    }

    pub fn cosine(center: Vec<f64>, radius: f64) -> Self {
        Symbol::CosineBump {
            center,
            radius,
            amplitude: 1.0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Symbol::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn translated(self, shift: Vec<f64>) -> Self {
        Symbol::Translated {
            shift,
            inner: Box::new(self),
        }
    }

    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Symbol::Custom(CustomSymbol {
            name: name.into(),
            value: Arc::new(value),
            gradient: None,
            support: None,
        })
    }

    /// Dimension the symbol expects, when it is fixed by its parameters.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Symbol::Constant { .. } | Symbol::Custom(_) => None,
            Symbol::Linear { coeffs, .. } => Some(coeffs.len()),
            Symbol::GaussianBump { center, .. } | Symbol::CosineBump { center, .. } => {
                Some(center.len())
            }
            Symbol::CoordinateWindow { lo, .. } => Some(lo.len()),
            Symbol::Sum { terms } => terms.iter().find_map(|t| t.dim()),
            Symbol::Scaled { inner, .. } => inner.dim(),
            Symbol::Translated { shift, .. } => Some(shift.len()),
        }
    }

    /// Structural checks: positive widths, matching dimensions.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Symbol(m));
        if let Some(d) = self.dim() {
            if d != dim {
                return bad(format!("symbol has dimension {d}, grid has {dim}"));
            }
        }
        match self {
            Symbol::GaussianBump { width, .. } if !(*width > 0.0) => {
                bad(format!("gaussian width must be positive, got {width}"))
            }
            Symbol::CosineBump { radius, .. } if !(*radius > 0.0) => {
                bad(format!("cosine radius must be positive, got {radius}"))
            }
            Symbol::CoordinateWindow { lo, hi, ramp, .. } => {
                if lo.len() != hi.len() {
                    return bad("window bounds differ in length".into());
                }
                if !(*ramp > 0.0) {
                    return bad(format!("window ramp must be positive, got {ramp}"));
                }
                for (a, b) in lo.iter().zip(hi) {
                    if !(b - a >= 2.0 * ramp) {
                        return bad(format!("window [{a}, {b}] is shorter than two ramps"));
                    }
                }
                Ok(())
            }
            Symbol::Sum { terms } => terms.iter().try_for_each(|t| t.validate(dim)),
            Symbol::Scaled { inner, .. } | Symbol::Translated { inner, .. } => inner.validate(dim),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Symbol::Constant { value } => *value,
            Symbol::Linear { coeffs, offset } => {
                offset + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            Symbol::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                amplitude * (-0.5 * r2 / (width * width)).exp()
            }
            Symbol::CosineBump {
                center,
                radius,
                amplitude,
            } => {
                let r = dist(x, center);
                if r >= *radius {
                    0.0
                } else {
                    amplitude * 0.5 * (1.0 + (PI * r / radius).cos())
                }
            }
            Symbol::CoordinateWindow {
                lo,
                hi,
                ramp,
                amplitude,
            } => {
                amplitude
                    * x.iter()
                        .enumerate()
                        .map(|(i, &t)| window_1d(t, lo[i], hi[i], *ramp).0)
                        .product::<f64>()
            }
            Symbol::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
            Symbol::Scaled { factor, inner } => factor * inner.value(x),
            Symbol::Translated { shift, inner } => {
                let moved: Vec<f64> = x.iter().zip(shift).map(|(a, s)| a - s).collect();
                inner.value(&moved)
            }
            Symbol::Custom(c) => (c.value)(x),
        }
    }

    /// Analytic gradient, or `None` for a custom symbol without one.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = x.len();
        Some(match self {
            Symbol::Constant { .. } => vec![0.0; d],
            Symbol::Linear { coeffs, .. } => coeffs.clone(),
            Symbol::GaussianBump { center, width, .. } => {
                let v = self.value(x);
                x.iter()
                    .zip(center)
                    .map(|(a, c)| -v * (a - c) / (width * width))
                    .collect()
            }
            Symbol::CosineBump {
                center,
                radius,
                amplitude,
            } => {
                let r = dist(x, center);
                if r >= *radius || r == 0.0 {
                    vec![0.0; d]
                } else {
                    let dr = -amplitude * 0.5 * PI / radius * (PI * r / radius).sin();
                    x.iter().zip(center).map(|(a, c)| dr * (a - c) / r).collect()
                }
            }
            Symbol::CoordinateWindow {
                lo,
                hi,
                ramp,
                amplitude,
            } => {
                let parts: Vec<(f64, f64)> = x
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| window_1d(t, lo[i], hi[i], *ramp))
                    .collect();
                (0..d)
                    .map(|i| {
                        amplitude
                            * parts
                                .iter()
                                .enumerate()
                                .map(|(j, &(v, dv))| if i == j { dv } else { v })
                                .product::<f64>()
                    })
                    .collect()
            }
            Symbol::Sum { terms } => {
                let mut g = vec![0.0; d];
                for t in terms {
                    for (gi, ti) in g.iter_mut().zip(t.gradient(x)?) {
                        *gi += ti;
                    }
                }
                g
            }
            Symbol::Scaled { factor, inner } => {
                inner.gradient(x)?.into_iter().map(|v| factor * v).collect()
            }
            Symbol::Translated { shift, inner } => {
                let moved: Vec<f64> = x.iter().zip(shift).map(|(a, s)| a - s).collect();
                inner.gradient(&moved)?
            }
            Symbol::Custom(c) => {
                let g = c.gradient.as_ref()?;
                let mut out = vec![0.0; d];
                g(x, &mut out);
                out
            }
        })
    }

    /// Central-difference gradient with step `h`.
    pub fn gradient_fd(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                probe[i] = x[i] + h;
                let up = self.value(&probe);
                probe[i] = x[i] - h;
                let down = self.value(&probe);
                probe[i] = x[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// Box outside of which `|f|` is below `1e-12` of its scale, if the symbol is localised.
    /// Constants and linear functions have none.
    pub fn support(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Symbol::Constant { .. } | Symbol::Linear { .. } => None,
            Symbol::GaussianBump { center, width, .. } => {
                // exp(-r²/(2w²)) = 1e-12 at r = w sqrt(24 ln 10)
                let r = width * (24.0 * 10f64.ln()).sqrt();
                Some(center.iter().map(|c| (c - r, c + r)).collect())
            }
            Symbol::CosineBump { center, radius, .. } => {
                Some(center.iter().map(|c| (c - radius, c + radius)).collect())
            }
            Symbol::CoordinateWindow { lo, hi, .. } => {
                Some(lo.iter().zip(hi).map(|(&a, &b)| (a, b)).collect())
            }
            Symbol::Sum { terms } => {
                let mut acc: Option<Vec<(f64, f64)>> = None;
                for t in terms {
                    let s = t.support()?;
                    acc = Some(match acc {
                        None => s,
                        Some(a) => a
                            .iter()
                            .zip(&s)
                            .map(|(p, q)| (p.0.min(q.0), p.1.max(q.1)))
                            .collect(),
                    });
                }
                acc
            }
            Symbol::Scaled { factor, inner } => {
                if *factor == 0.0 {
                    None
                } else {
                    inner.support()
                }
            }
            Symbol::Translated { shift, inner } => Some(
                inner
                    .support()?
                    .iter()
                    .zip(shift)
                    .map(|(&(a, b), s)| (a + s, b + s))
                    .collect(),
            ),
            Symbol::Custom(c) => c.support.clone(),
        }
    }

    /// Whether the symbol is identically constant by construction.
    pub fn is_constant(&self) -> bool {
        match self {
            Symbol::Constant { .. } => true,
            Symbol::Linear { coeffs, .. } => coeffs.iter().all(|&c| c == 0.0),
            Symbol::Sum { terms } => terms.iter().all(|t| t.is_constant()),
            Symbol::Scaled { factor, inner } => *factor == 0.0 || inner.is_constant(),
            Symbol::Translated { inner, .. } => inner.is_constant(),
            _ => false,
        }
    }

    /// Lipschitz constant when it is known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Symbol::Constant { .. } => Some(0.0),
            Symbol::Linear { coeffs, .. } => Some(coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()),
            // max of r e^{-r²/(2w²)}/w² is e^{-1/2}/w
            Symbol::GaussianBump {
                width, amplitude, ..
            } => Some(amplitude.abs() * (-0.5f64).exp() / width),
            Symbol::CosineBump {
                radius, amplitude, ..
            } => Some(amplitude.abs() * 0.5 * PI / radius),
            Symbol::Scaled { factor, inner } => inner.lipschitz().map(|l| factor.abs() * l),
            Symbol::Translated { inner, .. } => inner.lipschitz(),
            Symbol::Sum { terms } => terms.iter().map(|t| t.lipschitz()).sum(),
            _ => None,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_builtins() -> Vec<Symbol> {
        vec![
            Symbol::Linear {
                coeffs: vec![0.3, -1.1],
                offset: 2.0,
            },
            Symbol::gaussian(vec![0.4, 1.1], 0.2),
            Symbol::cosine(vec![0.5, 1.0], 0.35),
            Symbol::CoordinateWindow {
                lo: vec![0.1, 0.6],
                hi: vec![0.9, 1.4],
                ramp: 0.2,
                amplitude: 1.5,
            },
            Symbol::Sum {
                terms: vec![
                    Symbol::gaussian(vec![0.4, 1.1], 0.2),
                    Symbol::cosine(vec![0.6, 0.9], 0.3).scaled(-0.5),
                ],
            },
            Symbol::gaussian(vec![0.4, 1.1], 0.2).translated(vec![0.1, 0.0]),
        ]
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pts = [[0.41, 1.02], [0.55, 0.93], [0.2, 1.3], [0.73, 0.83], [0.5, 1.17]];
        for f in all_builtins() {
            for x in &pts {
                let g = f.gradient(x).unwrap();
                let fd = f.gradient_fd(x, 1e-6);
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6, "{f:?} at {x:?}: {g:?} vs {fd:?}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        for f in all_builtins() {
            let text = serde_json::to_string(&f).unwrap();
            let back: Symbol = serde_json::from_str(&text).unwrap();
            let x = [0.45, 1.05];
            assert_eq!(f.value(&x), back.value(&x));
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"kind":"gaussian-bump","center":[0,1],"width":0.1,"widht":2}"#;
        assert!(serde_json::from_str::<Symbol>(bad).is_err());
    }

    #[test]
    fn support_contains_nonzero_values() {
        let f = Symbol::cosine(vec![0.5, 1.0], 0.3);
        let s = f.support().unwrap();
        assert_eq!(s, vec![(0.2, 0.8), (0.7, 1.3)]);
        assert_eq!(f.value(&[0.85, 1.0]), 0.0);
    }

    #[test]
    fn lipschitz_bounds_sampled_slopes() {
        for f in all_builtins() {
            let Some(lip) = f.lipschitz() else { continue };
            for i in 0..50 {
                let t = i as f64 / 50.0;
                let x = [0.1 + 0.8 * t, 0.6 + 0.7 * (1.0 - t)];
                let g = f.gradient(&x).unwrap();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= lip * (1.0 + 1e-12), "{f:?}");
            }
        }
    }
}
