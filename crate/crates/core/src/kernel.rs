use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};

/// Compactly supported symmetric kernel families.
///
/// Both families integrate to one over `[-1, 1]` and vanish outside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Epanechnikov,
    Boxcar,
}

/// A kernel function together with its support radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub support_radius: f64,
}

impl KernelSpec {
    pub fn epanechnikov() -> Self {
        KernelSpec {
            family: KernelFamily::Epanechnikov,
            support_radius: 1.0,
        }
    }

    pub fn boxcar() -> Self {
        KernelSpec {
            family: KernelFamily::Boxcar,
            support_radius: 1.0,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "epanechnikov" => Ok(Self::epanechnikov()),
            "boxcar" => Ok(Self::boxcar()),
            other => Err(FdeError::InvalidInput(format!(
                "unknown kernel {other:?}; expected \"epanechnikov\" or \"boxcar\""
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Boxcar => "boxcar",
        }
    }

    /// Kernel value at normalized distance `u`. Zero outside the support.
    #[inline]
    pub fn evaluate(&self, u: f64) -> f64 {
        if u.abs() > self.support_radius {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelFamily::Boxcar => 0.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrature(kernel: &KernelSpec) -> f64 {
        // midpoint rule over the support
        let steps = 200_000;
        let r = kernel.support_radius;
        let width = 2.0 * r / steps as f64;
        (0..steps)
            .map(|i| kernel.evaluate(-r + (i as f64 + 0.5) * width) * width)
            .sum()
    }

    #[test]
    fn kernels_integrate_to_one() {
        for k in [KernelSpec::epanechnikov(), KernelSpec::boxcar()] {
            assert!((quadrature(&k) - 1.0).abs() < 1e-6, "{:?}", k.family);
        }
    }

    #[test]
    fn kernels_nonnegative_and_compact() {
        for k in [KernelSpec::epanechnikov(), KernelSpec::boxcar()] {
            for i in -30..=30 {
                let u = i as f64 / 10.0;
                let v = k.evaluate(u);
                assert!(v >= 0.0);
                if u.abs() > k.support_radius {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in [KernelSpec::epanechnikov(), KernelSpec::boxcar()] {
            assert_eq!(KernelSpec::from_name(k.name()).unwrap(), k);
        }
        assert!(KernelSpec::from_name("gaussian").is_err());
    }
}
