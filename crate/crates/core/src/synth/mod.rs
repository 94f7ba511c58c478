//! Seeded synthetic processes and the closed-form quantities used to check
//! forecasters against them.
//!
//! Streams are produced by ChaCha8 seeded through `seed_from_u64`, whose
//! output is fixed across platforms and releases. Each uniform draw takes
//! the top 53 bits of one `u64` and is centered in its bucket, so it lies in
//! the open interval (0, 1); normal variates are obtained by inverting the
//! normal CDF with Wichura's AS241 rational approximation. Rejection-free
//! generation keeps every series a pure function of its seed.

mod normal;
mod quadrature;

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::pinball::pinball_loss;
use crate::types::{QuantileLevel, Series};

pub use normal::{gaussian_tau_quantile, inverse_normal_cdf, normal_cdf, normal_pdf};
pub use quadrature::adaptive_simpson;

/// Deterministic source of uniform and standard normal variates.
#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        let bits = self.0.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ProcessKind {
    IidGaussian { mu: f64, sigma: f64 },
    /// `y_t = φ·y_{t-1} + σ·ε_t`, started from the stationary law.
    Ar1 { phi: f64, sigma: f64 },
    /// `y_t = amplitudes[(t-1) mod period] + σ·ε_t`.
    Seasonal { period: usize, amplitudes: Vec<f64>, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub length: usize,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, length: usize, seed: u64) -> Result<Self> {
        let spec = Self { kind, length, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidParameter("process length must be positive"));
        }
        let ok = |x: f64| x.is_finite();
        match &self.kind {
            ProcessKind::IidGaussian { mu, sigma } => {
                if !(ok(*mu) && ok(*sigma) && *sigma > 0.0) {
                    return Err(Error::InvalidParameter("gaussian needs finite mu and sigma > 0"));
                }
            }
            ProcessKind::Ar1 { phi, sigma } => {
                if !(ok(*sigma) && *sigma > 0.0) {
                    return Err(Error::InvalidParameter("ar1 needs sigma > 0"));
                }
                if !(phi.abs() < 1.0) {
                    return Err(Error::InvalidParameter("ar1 needs |phi| < 1"));
                }
            }
            ProcessKind::Seasonal {
                period,
                amplitudes,
                sigma,
            } => {
                if *period == 0 || amplitudes.len() != *period {
                    return Err(Error::InvalidParameter("seasonal needs one amplitude per period position"));
                }
                if !(ok(*sigma) && *sigma >= 0.0) || !amplitudes.iter().all(|a| a.is_finite()) {
                    return Err(Error::InvalidParameter("seasonal needs finite amplitudes and sigma >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Draws the series described by `spec`. Same spec, same bits.
pub fn generate(spec: &ProcessSpec) -> Result<Series> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let n = spec.length;
    let values: Vec<f64> = match &spec.kind {
        ProcessKind::IidGaussian { mu, sigma } => {
            (0..n).map(|_| mu + sigma * rng.standard_normal()).collect()
        }
        ProcessKind::Ar1 { phi, sigma } => {
            let mut out = Vec::with_capacity(n);
            let sd0 = sigma / libm::sqrt(1.0 - phi * phi);
            let mut y = sd0 * rng.standard_normal();
            out.push(y);
            for _ in 1..n {
                y = phi * y + sigma * rng.standard_normal();
                out.push(y);
            }
            out
        }
        ProcessKind::Seasonal {
            period,
            amplitudes,
            sigma,
        } => (0..n)
            .map(|i| amplitudes[i % period] + sigma * rng.standard_normal())
            .collect(),
    };
    Series::new(values)
}

/// `E[ρ_τ(Y − q_τ)]` for `Y ~ N(mu, sigma²)`, by adaptive quadrature over
/// each half-line.
pub fn gaussian_pinball_minimum(tau: QuantileLevel, mu: f64, sigma: f64) -> f64 {
    let q = gaussian_tau_quantile(tau, mu, sigma);
    let density = |y: f64| normal_pdf((y - mu) / sigma) / sigma;
    // y = q ± sigma·x/(1−x) maps [0, 1) onto each half-line
    let half_line = |sign: f64| {
        move |x: f64| {
            if x >= 1.0 {
                return 0.0;
            }
            let u = sigma * x / (1.0 - x);
            let y = q + sign * u;
            let jacobian = sigma / ((1.0 - x) * (1.0 - x));
            pinball_loss(y - q, tau) * density(y) * jacobian
        }
    };
    adaptive_simpson(half_line(-1.0), 0.0, 1.0, 1e-13)
        + adaptive_simpson(half_line(1.0), 0.0, 1.0, 1e-13)
}

/// Smallest achievable expected pinball loss given the infinite past.
pub fn lstar_oracle(spec: &ProcessSpec, tau: QuantileLevel) -> Result<f64> {
    match spec.kind {
        ProcessKind::IidGaussian { mu, sigma } => Ok(gaussian_pinball_minimum(tau, mu, sigma)),
        // given the past, Y_t ~ N(φ·y_{t-1}, σ²); the loss does not depend on the location
        ProcessKind::Ar1 { sigma, .. } => Ok(gaussian_pinball_minimum(tau, 0.0, sigma)),
        ProcessKind::Seasonal { .. } => Err(Error::UnsupportedSpec),
    }
}

/// Exact conditional τ-quantile of `y_t` given `y_1^{t-1}`, for every `t`.
///
/// The first entry is the quantile of the stationary marginal law.
pub fn true_conditional_quantile_path(
    spec: &ProcessSpec,
    series: &[f64],
    tau: QuantileLevel,
) -> Result<Vec<f64>> {
    match spec.kind {
        ProcessKind::Ar1 { phi, sigma } => {
            let z = gaussian_tau_quantile(tau, 0.0, 1.0);
            let mut out = Vec::with_capacity(series.len());
            if !series.is_empty() {
                out.push(sigma / libm::sqrt(1.0 - phi * phi) * z);
            }
            out.extend(series.windows(2).map(|w| phi * w[0] + sigma * z));
            Ok(out)
        }
        ProcessKind::IidGaussian { mu, sigma } => {
            Ok(alloc::vec![gaussian_tau_quantile(tau, mu, sigma); series.len()])
        }
        ProcessKind::Seasonal { .. } => Err(Error::UnsupportedSpec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinball::empirical_quantile;
    use alloc::vec;

    fn tau(t: &str) -> QuantileLevel {
        QuantileLevel::parse(t).unwrap()
    }

    fn iid(mu: f64, sigma: f64, n: usize, seed: u64) -> ProcessSpec {
        ProcessSpec::new(ProcessKind::IidGaussian { mu, sigma }, n, seed).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&iid(0.0, 1.0, 10, 42)).unwrap();
        let b = generate(&iid(0.0, 1.0, 10, 42)).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = generate(&iid(0.0, 1.0, 10, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ar1_with_zero_phi_is_white_noise() {
        let spec = ProcessSpec::new(ProcessKind::Ar1 { phi: 0.0, sigma: 1.0 }, 50_000, 1).unwrap();
        let s = generate(&spec).unwrap();
        let mean = s.values().iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        let white = generate(&iid(0.0, 1.0, 50_000, 1)).unwrap();
        assert_eq!(s, white);
    }

    #[test]
    fn noiseless_seasonal_repeats() {
        let amps = vec![1.0, 5.0, 2.0, 2.0, 3.0, -1.0, 0.5];
        let spec = ProcessSpec::new(
            ProcessKind::Seasonal { period: 7, amplitudes: amps.clone(), sigma: 0.0 },
            30,
            3,
        )
        .unwrap();
        let s = generate(&spec).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            assert_eq!(*v, amps[i % 7]);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(ProcessSpec::new(ProcessKind::Ar1 { phi: 1.0, sigma: 1.0 }, 5, 0).is_err());
        assert!(ProcessSpec::new(ProcessKind::IidGaussian { mu: 0.0, sigma: 0.0 }, 5, 0).is_err());
        assert!(ProcessSpec::new(ProcessKind::IidGaussian { mu: 0.0, sigma: 1.0 }, 0, 0).is_err());
        assert!(ProcessSpec::new(
            ProcessKind::Seasonal { period: 3, amplitudes: vec![1.0], sigma: 1.0 },
            5,
            0
        )
        .is_err());
    }

    #[test]
    fn gaussian_quantile_examples() {
        assert_eq!(gaussian_tau_quantile(tau("0.5"), 0.0, 1.0), 0.0);
        assert_eq!(gaussian_tau_quantile(tau("0.5"), 3.0, 5.0), 3.0);
        let v = gaussian_tau_quantile(tau("0.9"), 0.0, 1.0);
        assert!((normal_cdf(v) - 0.9).abs() < 1e-12);
        assert!((v - 1.2815515655446004).abs() < 1e-12);
    }

    #[test]
    fn lstar_examples() {
        let half = tau("0.5");
        let l = lstar_oracle(&iid(0.0, 1.0, 1, 0), half).unwrap();
        let closed = 0.5 * libm::sqrt(2.0 / core::f64::consts::PI);
        assert!((l - closed).abs() < 1e-9, "{l} vs {closed}");

        for t in ["0.1", "0.25", "0.9"] {
            let unit = lstar_oracle(&iid(0.0, 1.0, 1, 0), tau(t)).unwrap();
            let scaled = lstar_oracle(&iid(0.0, 3.5, 1, 0), tau(t)).unwrap();
            assert!((scaled - 3.5 * unit).abs() < 1e-9);
            // E ρ_τ(Z − z_τ) = φ(z_τ) for a standard normal
            let z = gaussian_tau_quantile(tau(t), 0.0, 1.0);
            assert!((unit - normal_pdf(z)).abs() < 1e-9);
        }

        let ar = ProcessSpec::new(ProcessKind::Ar1 { phi: 0.6, sigma: 1.0 }, 1, 0).unwrap();
        assert!((lstar_oracle(&ar, half).unwrap() - l).abs() < 1e-12);
        let seasonal = ProcessSpec::new(
            ProcessKind::Seasonal { period: 1, amplitudes: vec![0.0], sigma: 1.0 },
            1,
            0,
        )
        .unwrap();
        assert_eq!(lstar_oracle(&seasonal, half), Err(Error::UnsupportedSpec));
    }

    #[test]
    fn conditional_quantile_path_examples() {
        let spec = |phi, sigma| ProcessSpec::new(ProcessKind::Ar1 { phi, sigma }, 3, 0).unwrap();
        let path = true_conditional_quantile_path(&spec(0.0, 1.0), &[3.0, -2.0, 7.0], tau("0.5")).unwrap();
        assert_eq!(path, vec![0.0, 0.0, 0.0]);
        let path = true_conditional_quantile_path(&spec(0.6, 1.0), &[2.0, 5.0], tau("0.5")).unwrap();
        assert!((path[1] - 1.2).abs() < 1e-15);
        let path = true_conditional_quantile_path(&spec(0.6, 2.0), &[0.0, 1.0], tau("0.9")).unwrap();
        assert_eq!(path[1], 2.0 * gaussian_tau_quantile(tau("0.9"), 0.0, 1.0));
    }

    #[test]
    fn empirical_quantiles_of_a_million_draws() {
        let s = generate(&iid(0.0, 1.0, 1_000_000, 2024)).unwrap();
        for t in ["0.1", "0.5", "0.9"] {
            let emp = empirical_quantile(s.values(), tau(t)).unwrap();
            let exact = gaussian_tau_quantile(tau(t), 0.0, 1.0);
            assert!((emp - exact).abs() < 0.01, "tau={t}: {emp} vs {exact}");
        }
    }

    #[test]
    fn true_path_loss_converges_to_lstar() {
        let spec = ProcessSpec::new(ProcessKind::Ar1 { phi: 0.6, sigma: 1.0 }, 50_000, 77).unwrap();
        let s = generate(&spec).unwrap();
        for t in ["0.1", "0.5", "0.9"] {
            let path = true_conditional_quantile_path(&spec, s.values(), tau(t)).unwrap();
            let avg = s
                .values()
                .iter()
                .zip(&path)
                .map(|(y, q)| pinball_loss(y - q, tau(t)))
                .sum::<f64>()
                / s.len() as f64;
            let lstar = lstar_oracle(&spec, tau(t)).unwrap();
            assert!((avg / lstar - 1.0).abs() < 0.02, "tau={t}: {avg} vs {lstar}");
        }
    }

    #[test]
    fn uniform_stays_open() {
        let mut rng = SeededRng::new(0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
