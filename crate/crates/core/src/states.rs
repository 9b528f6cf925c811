//! States, projectors and parameterized families.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// A unit vector in `C^{n+1}`, i.e. a representative of a point of `CP^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wrap amplitudes that are already normalized.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: amps.len(),
            });
        }
        let norm = linalg::norm(&amps);
        if (norm - 1.0).abs() > Tolerances::DEFAULT.norm {
            return Err(Error::NormalizationViolation { index: 0, norm });
        }
        Ok(Self { amps })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Number of amplitudes, `n + 1`.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Projective dimension `n`.
    pub fn proj_dim(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn scaled(&self, phase: Complex64) -> StateVector {
        StateVector {
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }
}

/// Normalize raw amplitudes.
pub fn normalize(raw: &[Complex64]) -> Result<StateVector> {
    if raw.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: raw.len(),
        });
    }
    let norm = linalg::norm(raw);
    if norm.is_nan() || norm <= Tolerances::DEFAULT.zero_norm {
        return Err(Error::ZeroVector { norm });
    }
    Ok(StateVector {
        amps: raw.iter().map(|a| a / norm).collect(),
    })
}

/// Rank-one orthogonal projector `|s><s|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    m: CMat,
}

impl Projector {
    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    /// Residuals of hermiticity, idempotency and unit trace.
    pub fn residuals(&self) -> (f64, f64, f64) {
        let herm = linalg::fro(&(&self.m - self.m.adjoint()));
        let idem = linalg::fro(&(&self.m * &self.m - &self.m));
        let tr = (self.m.trace() - Complex64::new(1.0, 0.0)).norm();
        (herm, idem, tr)
    }
}

pub fn projector_of(s: &StateVector) -> Projector {
    Projector {
        m: linalg::outer(&s.amps, &s.amps),
    }
}

/// `<a|b>`, antilinear in the first argument.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(linalg::inner(&a.amps, &b.amps))
}

/// Anything that assigns a ray to each point of a real parameter space.
///
/// Only overlaps are required. Families that also expose state vectors get
/// projector-based routes for derivatives and traces.
pub trait Family: Send + Sync {
    fn param_dim(&self) -> usize;

    fn periods(&self) -> Option<&[f64]> {
        None
    }

    /// `<psi(x)|psi(y)>` for normalized representatives.
    fn overlap(&self, x: &[f64], y: &[f64]) -> Complex64;

    /// Normalized state at `x`, when the family has a finite vector form.
    fn state(&self, _x: &[f64]) -> Option<StateVector> {
        None
    }

    /// Projector at `x`, when available.
    fn projector(&self, x: &[f64]) -> Option<CMat> {
        self.state(x).map(|s| projector_of(&s).into_matrix())
    }

    fn as_state_family(&self) -> Option<&StateFamily> {
        None
    }
}

type Evaluator = dyn Fn(&[f64]) -> Vec<Complex64> + Send + Sync;
type GradientEvaluator = dyn Fn(&[f64]) -> Vec<Vec<Complex64>> + Send + Sync;

/// Family given by an amplitude evaluator.
///
/// The evaluator may return unnormalized amplitudes; states are normalized on
/// the way out. An optional gradient returns `d/dx_a` of the raw evaluator
/// output for every parameter direction.
#[derive(Clone)]
pub struct StateFamily {
    param_dim: usize,
    proj_dim: usize,
    periods: Option<Vec<f64>>,
    eval: Arc<Evaluator>,
    gradient: Option<Arc<GradientEvaluator>>,
}

impl core::fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("StateFamily")
            .field("param_dim", &self.param_dim)
            .field("proj_dim", &self.proj_dim)
            .field("periods", &self.periods)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

impl StateFamily {
    pub fn new<F>(param_dim: usize, proj_dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<Complex64> + Send + Sync + 'static,
    {
        Self {
            param_dim,
            proj_dim,
            periods: None,
            eval: Arc::new(eval),
            gradient: None,
        }
    }

    pub fn with_periods(mut self, periods: Vec<f64>) -> Self {
        assert_eq!(periods.len(), self.param_dim);
        self.periods = Some(periods);
        self
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<Vec<Complex64>> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn without_gradient(mut self) -> Self {
        self.gradient = None;
        self
    }

    pub fn proj_dim(&self) -> usize {
        self.proj_dim
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn raw(&self, x: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.param_dim);
        (self.eval)(x)
    }

    pub fn raw_gradient(&self, x: &[f64]) -> Option<Vec<Vec<Complex64>>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    /// Normalized state. Panics if the evaluator returns a zero vector.
    pub fn state_at(&self, x: &[f64]) -> StateVector {
        let raw = self.raw(x);
        debug_assert_eq!(raw.len(), self.proj_dim + 1);
        match normalize(&raw) {
            Ok(s) => s,
            Err(e) => panic!("family evaluator returned an invalid vector at {x:?}: {e}"),
        }
    }

    pub fn projector_at(&self, x: &[f64]) -> CMat {
        let s = self.state_at(x);
        linalg::outer(s.amplitudes(), s.amplitudes())
    }

    /// Multiply every state by `exp(i phase(x))`. The gradient is dropped.
    pub fn regauged<F>(&self, phase: F) -> StateFamily
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let inner = self.eval.clone();
        StateFamily {
            param_dim: self.param_dim,
            proj_dim: self.proj_dim,
            periods: self.periods.clone(),
            eval: Arc::new(move |x: &[f64]| {
                let w = Complex64::from_polar(1.0, phase(x));
                inner(x).into_iter().map(|a| a * w).collect()
            }),
            gradient: None,
        }
    }

    /// Restrict to a curve `t -> x(t)` in parameter space.
    pub fn along<C>(&self, curve: C) -> StateFamily
    where
        C: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        let inner = self.eval.clone();
        StateFamily::new(1, self.proj_dim, move |t: &[f64]| inner(&curve(t[0])))
    }

    /// Largest projector mismatch across each declared period at `x`.
    pub fn periodicity_residual(&self, x: &[f64]) -> Option<f64> {
        let periods = self.periods.as_ref()?;
        let p0 = self.projector_at(x);
        let mut worst = 0.0f64;
        for (a, &period) in periods.iter().enumerate() {
            let mut y = x.to_vec();
            y[a] += period;
            worst = worst.max(linalg::fro(&(self.projector_at(&y) - &p0)));
        }
        Some(worst)
    }
}

impl Family for StateFamily {
    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn periods(&self) -> Option<&[f64]> {
        self.periods.as_deref()
    }

    fn overlap(&self, x: &[f64], y: &[f64]) -> Complex64 {
        linalg::inner(self.state_at(x).amplitudes(), self.state_at(y).amplitudes())
    }

    fn state(&self, x: &[f64]) -> Option<StateVector> {
        Some(self.state_at(x))
    }

    fn as_state_family(&self) -> Option<&StateFamily> {
        Some(self)
    }
}

type Kernel = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;

/// Family known only through a normalized overlap kernel `K(x, y)`.
pub struct KernelFamily {
    param_dim: usize,
    periods: Option<Vec<f64>>,
    kernel: Box<Kernel>,
}

impl core::fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("KernelFamily")
            .field("param_dim", &self.param_dim)
            .finish()
    }
}

impl KernelFamily {
    /// `kernel(x, x)` must equal 1.
    pub fn new<K>(param_dim: usize, kernel: K) -> Self
    where
        K: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            param_dim,
            periods: None,
            kernel: Box::new(kernel),
        }
    }

    pub fn with_periods(mut self, periods: Vec<f64>) -> Self {
        self.periods = Some(periods);
        self
    }
}

impl Family for KernelFamily {
    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn periods(&self) -> Option<&[f64]> {
        self.periods.as_deref()
    }

    fn overlap(&self, x: &[f64], y: &[f64]) -> Complex64 {
        (self.kernel)(x, y)
    }
}
