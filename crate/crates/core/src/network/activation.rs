use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Elementwise non-linearity.
///
/// Homogeneous activations (ReLU, linear) are deliberately absent: their
/// scaling invariance is outside what the expansion machinery models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "ActivationRepr")]
pub enum Activation {
    Softplus,
    Sigmoid,
    Tanh,
    /// `softplus(x) + alpha * sigmoid(gamma * x)`
    Blended { alpha: f64, gamma: f64 },
}

/// Accepts `{"kind": ..., "alpha": ..., "gamma": ...}` or a bare name.
#[derive(Deserialize)]
#[serde(untagged)]
enum ActivationRepr {
    Name(String),
    Tagged {
        kind: String,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        gamma: Option<f64>,
    },
}

impl TryFrom<ActivationRepr> for Activation {
    type Error = Error;

    fn try_from(r: ActivationRepr) -> Result<Self> {
        match r {
            ActivationRepr::Name(name) => Activation::from_name(&name),
            ActivationRepr::Tagged { kind, alpha, gamma } if kind == "blended" => {
                Activation::blended(alpha.unwrap_or(1.0), gamma.unwrap_or(4.0))
            }
            ActivationRepr::Tagged { kind, .. } => Activation::from_name(&kind),
        }
    }
}

impl Activation {
    pub fn blended(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && gamma > 0.0 && alpha.is_finite() && gamma.is_finite()) {
            return Err(invalid(format!(
                "blended activation needs alpha, gamma > 0 (got {alpha}, {gamma})"
            )));
        }
        Ok(Activation::Blended { alpha, gamma })
    }

    /// Parses `softplus`, `sigmoid`, `tanh` or `blended` (alpha 1, gamma 4).
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "softplus" => Ok(Activation::Softplus),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "blended" => Activation::blended(1.0, 4.0),
            "relu" | "linear" | "identity" => Err(invalid(format!(
                "homogeneous activation {name:?} is not supported"
            ))),
            other => Err(invalid(format!("unknown activation {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Softplus => "softplus",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Blended { .. } => "blended",
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Value and first derivative.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Activation::Softplus => (softplus(x), sigmoid(x)),
            Activation::Sigmoid => {
                let s = sigmoid(x);
                (s, s * (1.0 - s))
            }
            Activation::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            Activation::Blended { alpha, gamma } => {
                let s = sigmoid(gamma * x);
                (
                    softplus(x) + alpha * s,
                    sigmoid(x) + alpha * gamma * s * (1.0 - s),
                )
            }
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deserializes_from_name_or_tagged_object() {
        let a: Activation = serde_json::from_str("\"tanh\"").unwrap();
        assert_eq!(a, Activation::Tanh);
        let b: Activation = serde_json::from_str(r#"{"kind": "blended", "gamma": 2.0}"#).unwrap();
        assert_eq!(b, Activation::Blended { alpha: 1.0, gamma: 2.0 });
        let round: Activation = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(round, b);
        assert!(serde_json::from_str::<Activation>("\"relu\"").is_err());
    }

    #[test]
    fn blended_is_softplus_plus_scaled_sigmoid() {
        let act = Activation::blended(1.0, 4.0).unwrap();
        for &x in &[-3.0, -0.5, 0.0, 0.7, 2.0] {
            let expected = (1.0 + f64::exp(x)).ln() + 1.0 / (1.0 + f64::exp(-4.0 * x));
            assert!((act.value(x) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let acts = [
            Activation::Softplus,
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::blended(0.5, 3.0).unwrap(),
        ];
        for act in acts {
            for &x in &[-4.0, -1.0, 0.0, 0.3, 5.0] {
                let h = 1e-6;
                let fd = (act.value(x + h) - act.value(x - h)) / (2.0 * h);
                assert!((fd - act.derivative(x)).abs() < 1e-8, "{act:?} at {x}");
            }
        }
    }

    #[test]
    fn finite_at_extremes() {
        let act = Activation::blended(1.0, 4.0).unwrap();
        for &x in &[-1e6, -800.0, 800.0, 1e6] {
            let (v, d) = act.eval(x);
            assert!(v.is_finite() && d.is_finite());
        }
    }

    #[test]
    fn rejects_homogeneous_and_bad_parameters() {
        assert!(Activation::from_name("relu").is_err());
        assert!(Activation::from_name("linear").is_err());
        assert!(Activation::blended(0.0, 1.0).is_err());
        assert!(Activation::blended(1.0, -2.0).is_err());
        let err: std::result::Result<Activation, _> = serde_json::from_str(r#"{"kind":"relu"}"#);
        assert!(err.is_err());
    }

    #[test]
    fn json_shape() {
        let act = Activation::blended(1.0, 4.0).unwrap();
        let s = serde_json::to_string(&act).unwrap();
        assert_eq!(s, r#"{"kind":"blended","alpha":1.0,"gamma":4.0}"#);
        let back: Activation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, act);
        let t: Activation = serde_json::from_str(r#"{"kind":"tanh"}"#).unwrap();
        assert_eq!(t, Activation::Tanh);
    }
}
