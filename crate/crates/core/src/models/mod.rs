//! Built-in families with closed-form reference values.

pub mod lll;
pub mod qwz;
pub mod spin_half;
pub mod spin_one;
pub mod veronese;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::extrinsic::curves::ChartCurve;
use crate::states::{Family, KernelFamily, StateFamily};

/// `z(t) = sin t e^{i t}`, closed with period `2 pi`.
///
/// This equals `(i/2)(1 - e^{2 i t})`: a circle of radius 1/2 through the
/// origin, traversed twice.
pub fn figure8() -> ChartCurve {
    ChartCurve::new(|t: f64| Complex64::from_polar(t.sin(), t))
        .with_jet(|t: f64| {
            let e2 = Complex64::from_polar(1.0, 2.0 * t);
            [
                Complex64::from_polar(t.sin(), t),
                e2,
                e2 * Complex64::new(0.0, 2.0),
            ]
        })
        .with_period(2.0 * core::f64::consts::PI)
}

/// Registry entry for a built-in model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    SpinHalf,
    SpinHalfAngles,
    SpinOne,
    Veronese { n: i64, m: i64 },
    Lll { b: f64 },
    Qwz { mass: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDescriptor {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
    pub param_dim: usize,
    /// `None` for kernel-backed families.
    pub proj_dim: Option<usize>,
    pub periods: Option<Vec<f64>>,
}

/// A built model, either with state vectors or known through its kernel.
pub enum ModelFamily {
    States(StateFamily),
    Kernel(KernelFamily),
}

impl ModelFamily {
    pub fn as_family(&self) -> &dyn Family {
        match self {
            ModelFamily::States(f) => f,
            ModelFamily::Kernel(f) => f,
        }
    }

    pub fn states(&self) -> Option<&StateFamily> {
        match self {
            ModelFamily::States(f) => Some(f),
            ModelFamily::Kernel(_) => None,
        }
    }
}

pub const MODEL_NAMES: [&str; 6] = [
    "spin_half",
    "spin_half_angles",
    "spin_one",
    "veronese",
    "lll",
    "qwz",
];

fn lookup(params: &[(String, f64)], key: &str, default: Option<f64>) -> Result<f64> {
    match params.iter().find(|(k, _)| k == key) {
        Some((_, v)) => Ok(*v),
        None => default.ok_or_else(|| Error::InvalidParameter(format!("missing parameter {key}"))),
    }
}

fn integer(v: f64, key: &str) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{key} must be an integer, got {v}"
        )));
    }
    Ok(v as i64)
}

impl Model {
    /// Look up a model by name. Unknown parameter keys are rejected.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Model> {
        let allowed: &[&str] = match name {
            "veronese" => &["n", "m"],
            "lll" => &["B"],
            "qwz" => &["mass"],
            "spin_half" | "spin_half_angles" | "spin_one" => &[],
            _ => return Err(Error::InvalidParameter(format!("unknown model {name}"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "model {name} has no parameter {k}"
            )));
        }
        let model = match name {
            "spin_half" => Model::SpinHalf,
            "spin_half_angles" => Model::SpinHalfAngles,
            "spin_one" => Model::SpinOne,
            "veronese" => Model::Veronese {
                n: integer(lookup(params, "n", Some(1.0))?, "n")?,
                m: integer(lookup(params, "m", Some(1.0))?, "m")?,
            },
            "lll" => {
                let b = lookup(params, "B", Some(1.0))?;
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "B must be positive, got {b}"
                    )));
                }
                Model::Lll { b }
            }
            _ => Model::Qwz {
                mass: lookup(params, "mass", Some(1.0))?,
            },
        };
        Ok(model)
    }

    pub fn build(&self) -> Result<ModelFamily> {
        Ok(match *self {
            Model::SpinHalf => ModelFamily::States(spin_half::family()),
            Model::SpinHalfAngles => ModelFamily::States(spin_half::angles()),
            Model::SpinOne => ModelFamily::States(spin_one::family()),
            Model::Veronese { n, m } => ModelFamily::States(veronese::veronese(n, m)),
            Model::Lll { b } => ModelFamily::Kernel(lll::family(b)?),
            Model::Qwz { mass } => ModelFamily::States(qwz::family(mass)),
        })
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        let two_pi = 2.0 * core::f64::consts::PI;
        let (name, parameters, proj_dim, periods) = match *self {
            Model::SpinHalf => ("spin_half", vec![], Some(1), None),
            Model::SpinHalfAngles => ("spin_half_angles", vec![], Some(1), None),
            Model::SpinOne => ("spin_one", vec![], Some(2), None),
            Model::Veronese { n, m } => (
                "veronese",
                vec![("n".to_string(), n as f64), ("m".to_string(), m as f64)],
                Some(3),
                Some(vec![two_pi, two_pi]),
            ),
            Model::Lll { b } => ("lll", vec![("B".to_string(), b)], None, None),
            Model::Qwz { mass } => (
                "qwz",
                vec![("mass".to_string(), mass)],
                Some(1),
                Some(vec![two_pi, two_pi]),
            ),
        };
        ModelDescriptor {
            name: name.to_string(),
            parameters,
            param_dim: 2,
            proj_dim,
            periods,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrinsic::curves;

    #[test]
    fn figure8_closes_through_origin() {
        let c = figure8();
        assert!(c.value(0.0).norm() < 1e-15 && c.value(core::f64::consts::PI).norm() < 1e-15);
        assert!((c.value(0.0) - c.value(2.0 * core::f64::consts::PI)).norm() < 1e-15);
        for t in [0.1, 1.0, 2.5, 4.0, 5.9] {
            let fr = curves::curve_frame(&c, t).unwrap();
            assert!(fr.inner(fr.tangent, fr.normal).abs() < 1e-8);
        }
    }

    #[test]
    fn registry() {
        let p = [("n".to_string(), 2.0), ("m".to_string(), 3.0)];
        assert_eq!(
            Model::from_name("veronese", &p).unwrap(),
            Model::Veronese { n: 2, m: 3 }
        );
        assert!(Model::from_name("veronese", &[("n".to_string(), 1.5)]).is_err());
        assert!(Model::from_name("lll", &[("B".to_string(), -1.0)]).is_err());
        assert!(Model::from_name("spin_one", &[("x".to_string(), 1.0)]).is_err());
        assert!(Model::from_name("nope", &[]).is_err());
        let d = Model::Lll { b: 2.0 }.descriptor();
        assert_eq!(d.proj_dim, None);
        assert!(Model::Lll { b: 2.0 }.build().unwrap().states().is_none());
    }
}
