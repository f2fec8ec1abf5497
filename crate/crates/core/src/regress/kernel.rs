use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 1.0,
            degree: 1,
            coef0: 0.0,
        }
    }

    /// `(gamma <x, x'> + coef0)^degree`
    pub fn polynomial(gamma: f64, degree: u32, coef0: f64) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            gamma,
            degree,
            coef0,
        }
    }

    /// `exp(-gamma |x - x'|^2)`
    pub fn rbf(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma,
            degree: 1,
            coef0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != KernelKind::Linear && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!("kernel gamma must be > 0, got {}", self.gamma)));
        }
        if self.degree < 1 {
            return Err(Error::param("kernel degree must be >= 1"));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), z.len());
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Polynomial => (self.gamma * dot(x, z) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::param(format!(
            "kernel arguments differ in length: {} vs {}",
            x.len(),
            z.len()
        )));
    }
    Ok(spec.eval(x, z))
}
