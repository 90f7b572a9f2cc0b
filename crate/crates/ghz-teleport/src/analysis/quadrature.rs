//! Numerical averaging over the Bloch sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature rule for the angle averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    GaussLegendre,
    Trapezoid,
}

/// The measure behind "averaged over θ and φ".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMeasure {
    /// Uniform over pure states: weight `sin θ dθ dφ / 4π`. This is the
    /// measure that reproduces the 2/3 and 1/3 averages.
    #[default]
    BlochSphere,
    /// Uniform in the raw angles: weight `dθ dφ / 2π²`. Kept only to
    /// document the difference; it yields 5/8 instead of 2/3.
    UniformAngles,
}

fn default_nodes() -> usize {
    64
}

/// Node counts and scheme for the two-axis angle quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    #[serde(default = "default_nodes")]
    pub theta_nodes: usize,
    #[serde(default = "default_nodes")]
    pub phi_nodes: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            theta_nodes: default_nodes(),
            phi_nodes: default_nodes(),
            scheme: Scheme::default(),
        }
    }
}

impl QuadratureSpec {
    pub fn new(theta_nodes: usize, phi_nodes: usize, scheme: Scheme) -> Result<Self> {
        let spec = QuadratureSpec {
            theta_nodes,
            phi_nodes,
            scheme,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_nodes < 8 || self.phi_nodes < 8 {
            return Err(Error::config(format!(
                "quadrature needs at least 8 nodes per axis, got {}x{}",
                self.theta_nodes, self.phi_nodes
            )));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, found by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..64 {
            let (p, d) = legendre_with_derivative(n, z);
            derivative = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * derivative * derivative);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Evaluates `P_n(x)` and its derivative via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p = 1.0; // P_j
    let mut p_prev = 0.0; // P_{j-1}
    for j in 0..n {
        let p_prev2 = p_prev;
        p_prev = p;
        p = (((2 * j + 1) as f64) * x * p_prev - (j as f64) * p_prev2) / ((j + 1) as f64);
    }
    let d = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Nodes and weights on `[a, b]` for the chosen scheme.
pub fn nodes_weights(scheme: Scheme, n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    match scheme {
        Scheme::GaussLegendre => {
            let (unit_nodes, unit_weights) = gauss_legendre(n);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let nodes = unit_nodes.iter().map(|&x| mid + half * x).collect();
            let weights = unit_weights.iter().map(|&w| w * half).collect();
            (nodes, weights)
        }
        Scheme::Trapezoid => {
            assert!(n >= 2);
            let h = (b - a) / (n - 1) as f64;
            let nodes = (0..n).map(|i| a + i as f64 * h).collect();
            let weights = (0..n)
                .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
                .collect();
            (nodes, weights)
        }
    }
}

/// Average of `f(θ, φ)` over `[0, π] × [0, 2π)` under the given measure.
/// Fixed summation order keeps results bit-stable.
pub(crate) fn try_average_over_angles(
    quad: &QuadratureSpec,
    measure: AngleMeasure,
    mut f: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<f64> {
    quad.validate()?;
    let (theta_nodes, theta_weights) =
        nodes_weights(quad.scheme, quad.theta_nodes, 0.0, std::f64::consts::PI);
    let (phi_nodes, phi_weights) =
        nodes_weights(quad.scheme, quad.phi_nodes, 0.0, 2.0 * std::f64::consts::PI);
    let mut total = 0.0;
    for (&theta, &wt) in theta_nodes.iter().zip(&theta_weights) {
        let weight = match measure {
            AngleMeasure::BlochSphere => wt * theta.sin(),
            AngleMeasure::UniformAngles => wt,
        };
        let mut inner = 0.0;
        for (&phi, &wp) in phi_nodes.iter().zip(&phi_weights) {
            inner += wp * f(theta, phi)?;
        }
        total += weight * inner;
    }
    let normalization = match measure {
        AngleMeasure::BlochSphere => 4.0 * std::f64::consts::PI,
        AngleMeasure::UniformAngles => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
    };
    Ok(total / normalization)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_match_reference_tables() {
        // Standard Gauss-Legendre values on [-1, 1].
        let cases: [(usize, &[f64], &[f64]); 3] = [
            (
                3,
                &[-0.7745966692414834, 0.0, 0.7745966692414834],
                &[0.5555555555555556, 0.8888888888888888, 0.5555555555555556],
            ),
            (
                4,
                &[
                    -0.8611363115940526,
                    -0.3399810435848563,
                    0.3399810435848563,
                    0.8611363115940526,
                ],
                &[
                    0.3478548451374538,
                    0.6521451548625461,
                    0.6521451548625461,
                    0.3478548451374538,
                ],
            ),
            (
                5,
                &[
                    -0.9061798459386640,
                    -0.5384693101056831,
                    0.0,
                    0.5384693101056831,
                    0.9061798459386640,
                ],
                &[
                    0.2369268850561891,
                    0.4786286704993665,
                    0.5688888888888889,
                    0.4786286704993665,
                    0.2369268850561891,
                ],
            ),
        ];
        for (n, want_nodes, want_weights) in cases {
            let (nodes, weights) = gauss_legendre(n);
            for (got, want) in nodes.iter().zip(want_nodes) {
                assert!((got - want).abs() < 1e-13, "n={n}: node {got} vs {want}");
            }
            for (got, want) in weights.iter().zip(want_weights) {
                assert!((got - want).abs() < 1e-13, "n={n}: weight {got} vs {want}");
            }
        }
    }

    #[test]
    fn rule_is_exact_for_low_degree_polynomials() {
        // n-point Gauss-Legendre integrates degree 2n-1 exactly.
        for n in [4usize, 9, 16] {
            let (nodes, weights) = gauss_legendre(n);
            for degree in 0..2 * n {
                let got: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(degree as i32))
                    .sum();
                let want = if degree % 2 == 0 {
                    2.0 / (degree as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (got - want).abs() < 1e-12,
                    "n={n} degree={degree}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for scheme in [Scheme::GaussLegendre, Scheme::Trapezoid] {
            let (_, weights) = nodes_weights(scheme, 17, 0.0, std::f64::consts::PI);
            let sum: f64 = weights.iter().sum();
            assert!((sum - std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_function_averages_to_itself() {
        for measure in [AngleMeasure::BlochSphere, AngleMeasure::UniformAngles] {
            let avg = try_average_over_angles(&QuadratureSpec::default(), measure, |_, _| Ok(0.7))
                .unwrap();
            assert!((avg - 0.7).abs() < 1e-12, "{measure:?}: {avg}");
        }
    }

    #[test]
    fn undersized_spec_is_rejected() {
        assert!(QuadratureSpec::new(4, 64, Scheme::GaussLegendre).is_err());
    }
}
