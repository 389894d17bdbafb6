//! Test statistics.
//!
//! The cyclic detector (CD) measures the symbol-rate line in the second
//! order lag-product of the received samples: at 2 samples/symbol the
//! discrete cycle frequency sits at +/- 1/2, where the complex exponential
//! collapses to (-1)^n. The energy detector (ED) is the average power, and
//! the eigenvalue detectors (MME, EME) are built from the extreme
//! eigenvalues of an L-smoothed sample covariance matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Cycle frequency (cycles/sample) and sample lag for the estimator.
///
/// `alpha` lives on [-0.5, 0.5]; the endpoints alias one another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicParams {
    pub alpha: f64,
    pub lag: i64,
}

/// Smoothing window length for the sample covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovarianceSpec {
    pub smoothing_factor: usize,
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        CovarianceSpec {
            smoothing_factor: 10,
        }
    }
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_factor < 2 {
            return Err(Error::param("smoothing_factor must be >= 2"));
        }
        Ok(())
    }
}

/// Detector identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatKind {
    Cd,
    Ed,
    Mme,
    Eme,
}

impl StatKind {
    pub const ALL: [StatKind; 4] = [StatKind::Cd, StatKind::Ed, StatKind::Mme, StatKind::Eme];
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatKind::Cd => "CD",
            StatKind::Ed => "ED",
            StatKind::Mme => "MME",
            StatKind::Eme => "EME",
        };
        write!(f, "{s}")
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cd" => Ok(StatKind::Cd),
            "ed" => Ok(StatKind::Ed),
            "mme" => Ok(StatKind::Mme),
            "eme" => Ok(StatKind::Eme),
            other => Err(Error::param(format!("unknown detector `{other}`"))),
        }
    }
}

/// A computed test statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticValue {
    pub kind: StatKind,
    pub value: f64,
}

/// Estimate of the second-order cyclic autocorrelation at cycle frequency
/// `alpha` and lag `l`:
///
/// ```text
/// (1/K) sum_{n} y(n+l) y*(n) e^{-j 2 pi alpha n}
/// ```
///
/// The sum runs over the indices where both samples exist and is normalized
/// by the full K, so the estimator carries an O(|l|/K) edge bias.
pub fn cyclic_autocorrelation(w: &Waveform, p: &CyclicParams) -> Result<Complex64> {
    let k = w.len();
    if p.lag.unsigned_abs() as usize >= k {
        return Err(Error::param(format!(
            "lag {} out of range for {} samples",
            p.lag, k
        )));
    }
    if !(p.alpha >= -0.5 && p.alpha <= 0.5) {
        return Err(Error::param(format!(
            "cycle frequency {} outside [-0.5, 0.5]",
            p.alpha
        )));
    }
    let (lo, hi) = if p.lag >= 0 {
        (0usize, k - p.lag as usize)
    } else {
        (p.lag.unsigned_abs() as usize, k)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for n in lo..hi {
        let shifted = w.samples[(n as i64 + p.lag) as usize];
        let prod = shifted * w.samples[n].conj();
        // Reduce the phase argument modulo one turn before evaluating the
        // exponential; exact for the rational alphas used in practice.
        let turns = (p.alpha * n as f64).rem_euclid(1.0);
        let angle = -2.0 * std::f64::consts::PI * turns;
        acc += prod * Complex64::new(angle.cos(), angle.sin());
    }
    Ok(acc / k as f64)
}

/// Cyclic detector statistic: the squared symbol-rate Fourier coefficient of
/// the instantaneous power,
///
/// ```text
/// T = ((1/K) sum_n |y(n)|^2 (-1)^n)^2
/// ```
///
/// Requires an even K; an odd K biases the coefficient away from zero under
/// noise alone.
pub fn cd_statistic(w: &Waveform) -> Result<StatisticValue> {
    let k = w.len();
    if k == 0 || k % 2 != 0 {
        return Err(Error::param(format!(
            "CD statistic requires a nonzero even sample count, got {k}"
        )));
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for s in &w.samples {
        acc += sign * s.norm_sqr();
        sign = -sign;
    }
    let c1 = acc / k as f64;
    Ok(StatisticValue {
        kind: StatKind::Cd,
        value: c1 * c1,
    })
}

/// Energy detector statistic: average received power.
pub fn ed_statistic(w: &Waveform) -> Result<StatisticValue> {
    if w.is_empty() {
        return Err(Error::param("ED statistic requires a nonempty waveform"));
    }
    Ok(StatisticValue {
        kind: StatKind::Ed,
        value: w.mean_power(),
    })
}

/// L-smoothed sample covariance:
///
/// ```text
/// R = (1/(K-L+1)) sum_{n=L-1}^{K-1} v(n) v(n)^H,
/// v(n) = [y(n), y(n-1), ..., y(n-L+1)]^T
/// ```
///
/// Hermitian positive semidefinite by construction. Requires K >= 2L.
pub fn sample_covariance(w: &Waveform, spec: &CovarianceSpec) -> Result<DMatrix<Complex64>> {
    spec.validate()?;
    let l = spec.smoothing_factor;
    let k = w.len();
    if k < 2 * l {
        return Err(Error::param(format!(
            "covariance needs K >= 2L (K = {k}, L = {l})"
        )));
    }
    let snapshots = (k - l + 1) as f64;
    let y = &w.samples;
    let mut r = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
    for i in 0..l {
        for j in i..l {
            // R[i][j] = (1/(K-L+1)) sum_{n=L-1}^{K-1} y(n-i) y*(n-j)
            let s = dot_conj(&y[l - 1 - i..k - i], &y[l - 1 - j..k - j]) / snapshots;
            r[(i, j)] = s;
            r[(j, i)] = s.conj();
        }
    }
    Ok(r)
}

/// sum_t a[t] * conj(b[t]), split over four accumulators. The summation
/// order is fixed, so results are reproducible run to run.
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = [zero; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xs, ys) in (&mut ca).zip(&mut cb) {
        acc[0] += xs[0] * ys[0].conj();
        acc[1] += xs[1] * ys[1].conj();
        acc[2] += xs[2] * ys[2].conj();
        acc[3] += xs[3] * ys[3].conj();
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        acc[0] += x * y.conj();
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3])
}

/// Extreme eigenvalues of a Hermitian matrix.
///
/// The input is symmetrized as (R + R^H)/2 on entry, embedded into the
/// equivalent real symmetric matrix [[Re R, -Im R], [Im R, Re R]] (which has
/// the same spectrum, doubled), and decomposed with a symmetric QR solver.
/// A smallest eigenvalue within round-off of zero (>= -1e-10 * lambda_max)
/// is clamped to 0.
pub fn eigen_extremes(r: &DMatrix<Complex64>) -> Result<(f64, f64)> {
    let l = r.nrows();
    if l == 0 || r.ncols() != l {
        return Err(Error::param("eigen_extremes requires a square matrix"));
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numeric("covariance matrix has non-finite entries"));
    }
    let h = (r + r.adjoint()).map(|z| 0.5 * z);
    let mut m = DMatrix::<f64>::zeros(2 * l, 2 * l);
    for i in 0..l {
        for j in 0..l {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i, l + j)] = -z.im;
            m[(l + i, j)] = z.im;
            m[(l + i, l + j)] = z.re;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut lmax = f64::NEG_INFINITY;
    let mut lmin = f64::INFINITY;
    for &v in eig.eigenvalues.iter() {
        lmax = lmax.max(v);
        lmin = lmin.min(v);
    }
    if !lmax.is_finite() || !lmin.is_finite() {
        return Err(Error::numeric("eigen decomposition produced non-finite values"));
    }
    if lmin < 0.0 && lmin >= -1e-10 * lmax.max(0.0) {
        lmin = 0.0;
    }
    Ok((lmax, lmin))
}

/// Maximum/minimum eigenvalue statistic of the sample covariance.
pub fn mme_statistic(w: &Waveform, spec: &CovarianceSpec) -> Result<StatisticValue> {
    let r = sample_covariance(w, spec)?;
    let (lmax, lmin) = eigen_extremes(&r)?;
    if lmin <= 0.0 {
        return Err(Error::DegenerateCovariance { lambda_min: lmin });
    }
    Ok(StatisticValue {
        kind: StatKind::Mme,
        value: lmax / lmin,
    })
}

/// Energy over minimum eigenvalue statistic.
pub fn eme_statistic(w: &Waveform, spec: &CovarianceSpec) -> Result<StatisticValue> {
    let energy = ed_statistic(w)?.value;
    let r = sample_covariance(w, spec)?;
    let (_, lmin) = eigen_extremes(&r)?;
    if lmin <= 0.0 {
        return Err(Error::DegenerateCovariance { lambda_min: lmin });
    }
    Ok(StatisticValue {
        kind: StatKind::Eme,
        value: energy / lmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{realize_trial, Hypothesis, ModulationConfig, NoiseModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wf(samples: Vec<Complex64>) -> Waveform {
        Waveform {
            samples,
            samples_per_symbol: 2,
        }
    }

    fn random_wf(k: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        wf((0..k)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect())
    }

    fn h0_wf(seed: u64) -> Waveform {
        let noise = NoiseModel::new(1.0, 0.0).unwrap();
        realize_trial(
            &ModulationConfig::default(),
            &noise,
            0.0,
            Hypothesis::H0,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn caf_constant_input() {
        let w = wf(vec![Complex64::new(1.0, 0.0); 64]);
        let r = cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.0, lag: 0 }).unwrap();
        assert!((r - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let r = cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.5, lag: 0 }).unwrap();
        assert!(r.norm() < 1e-15, "alternating sum must cancel, got {r}");
    }

    #[test]
    fn caf_alternating_input_lag_one() {
        let k = 64usize;
        let w = wf((0..k)
            .map(|n| Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect());
        let r = cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.0, lag: 1 }).unwrap();
        let expected = -((k - 1) as f64) / k as f64;
        assert!((r.re - expected).abs() < 1e-15);
        assert!(r.im.abs() < 1e-15);
    }

    #[test]
    fn caf_negative_lag_matches_shifted_sum() {
        let w = random_wf(16, 3);
        let k = w.len();
        for lag in [-5i64, -1] {
            let p = CyclicParams { alpha: 0.25, lag };
            let got = cyclic_autocorrelation(&w, &p).unwrap();
            let mut manual = Complex64::new(0.0, 0.0);
            for n in lag.unsigned_abs() as usize..k {
                let prod = w.samples[(n as i64 + lag) as usize] * w.samples[n].conj();
                let angle = -2.0 * std::f64::consts::PI * (p.alpha * n as f64);
                manual += prod * Complex64::new(angle.cos(), angle.sin());
            }
            manual /= k as f64;
            assert!((got - manual).norm() < 1e-12, "lag {lag}");
        }
    }

    #[test]
    fn caf_rejects_out_of_range_arguments() {
        let w = random_wf(8, 1);
        assert!(cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.0, lag: 8 }).is_err());
        assert!(cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.0, lag: -8 }).is_err());
        assert!(cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.7, lag: 0 }).is_err());
    }

    #[test]
    fn cd_constant_modulus_cancels() {
        let w = wf(vec![Complex64::new(0.0, 3.0); 2000]);
        assert_eq!(cd_statistic(&w).unwrap().value, 0.0);
    }

    #[test]
    fn cd_even_index_tone() {
        // sqrt(2), 0, sqrt(2), 0, ... -> C1 = 1, T = 1.
        let w = wf((0..2000)
            .map(|n| {
                if n % 2 == 0 {
                    Complex64::new(2f64.sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect());
        let t = cd_statistic(&w).unwrap().value;
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cd_rejects_odd_or_empty() {
        assert!(cd_statistic(&wf(vec![])).is_err());
        assert!(cd_statistic(&wf(vec![Complex64::new(1.0, 0.0); 1999])).is_err());
    }

    #[test]
    fn cd_equals_squared_caf_at_half() {
        for seed in 0..20u64 {
            let w = random_wf(256, seed);
            let t = cd_statistic(&w).unwrap().value;
            let c = cyclic_autocorrelation(&w, &CyclicParams { alpha: 0.5, lag: 0 }).unwrap();
            let ed = ed_statistic(&w).unwrap().value;
            let diff = (t - c.norm_sqr()).abs();
            assert!(
                diff <= 1e-12 * t.max(c.norm_sqr()) + 1e-24 * ed * ed,
                "seed {seed}: {t} vs {}",
                c.norm_sqr()
            );
        }
    }

    #[test]
    fn ed_examples() {
        let w = wf(vec![Complex64::new(1.0, 0.0); 4]);
        assert_eq!(ed_statistic(&w).unwrap().value, 1.0);
        let w = wf(vec![Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(ed_statistic(&w).unwrap().value, 2.0);
        assert!(ed_statistic(&wf(vec![])).is_err());
    }

    #[test]
    fn covariance_zero_and_ones() {
        let spec = CovarianceSpec {
            smoothing_factor: 2,
        };
        let w = wf(vec![Complex64::new(0.0, 0.0); 16]);
        let r = sample_covariance(&w, &spec).unwrap();
        assert!(r.iter().all(|z| z.norm_sqr() == 0.0));

        let w = wf(vec![Complex64::new(1.0, 0.0); 16]);
        let r = sample_covariance(&w, &spec).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[(i, j)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            }
        }
        let (lmax, lmin) = eigen_extremes(&r).unwrap();
        assert!((lmax - 2.0).abs() < 1e-12);
        assert!(lmin.abs() < 1e-12);
    }

    #[test]
    fn covariance_requires_enough_samples() {
        let spec = CovarianceSpec {
            smoothing_factor: 10,
        };
        assert!(sample_covariance(&random_wf(19, 0), &spec).is_err());
        assert!(sample_covariance(&random_wf(20, 0), &spec).is_ok());
        assert!(CovarianceSpec {
            smoothing_factor: 1
        }
        .validate()
        .is_err());
    }

    #[test]
    fn covariance_of_white_noise_is_near_identity() {
        let w = h0_wf(17);
        let spec = CovarianceSpec::default();
        let r = sample_covariance(&w, &spec).unwrap();
        let bound = 3.0 / (w.len() as f64).sqrt();
        for i in 0..10 {
            for j in 0..10 {
                if i == j {
                    assert!((r[(i, j)].re - 1.0).abs() < 0.1, "diag {i}");
                    assert!(r[(i, j)].im.abs() < 1e-12);
                } else {
                    assert!(r[(i, j)].norm() < bound, "offdiag ({i},{j}) = {}", r[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn eigen_extremes_reference_matrices() {
        let id = DMatrix::from_diagonal_element(10, 10, Complex64::new(1.0, 0.0));
        let (mx, mn) = eigen_extremes(&id).unwrap();
        assert!((mx - 1.0).abs() < 1e-12 && (mn - 1.0).abs() < 1e-12);

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let (mx, mn) = eigen_extremes(&d).unwrap();
        assert!((mx - 3.0).abs() < 1e-10 && (mn - 0.5).abs() < 1e-10);

        // [[2, 1], [1, 2]] -> eigenvalues 3 and 1 (characteristic polynomial).
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let (mx, mn) = eigen_extremes(&m).unwrap();
        assert!((mx - 3.0).abs() < 1e-10 && (mn - 1.0).abs() < 1e-10);

        // Complex Hermitian [[2, i], [-i, 2]] -> eigenvalues 3 and 1.
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let (mx, mn) = eigen_extremes(&m).unwrap();
        assert!((mx - 3.0).abs() < 1e-10 && (mn - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigen_extremes_rejects_non_finite() {
        let mut m = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0));
        m[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(eigen_extremes(&m).is_err());
    }

    #[test]
    fn mme_detects_strong_lag_correlation() {
        // Alternating signs with a small amplitude wobble: heavily
        // correlated at lag 1 but nonsingular.
        let w = wf((0..2000)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * (1.0 + 0.01 * (0.7 * n as f64).sin()), 0.0)
            })
            .collect());
        let spec = CovarianceSpec {
            smoothing_factor: 2,
        };
        let t = mme_statistic(&w, &spec).unwrap().value;
        assert!(t > 100.0, "expected a large eigenvalue ratio, got {t}");
    }

    #[test]
    fn mme_eme_degenerate_covariance_errors() {
        let w = wf(vec![Complex64::new(1.0, 0.0); 32]);
        let spec = CovarianceSpec {
            smoothing_factor: 2,
        };
        assert!(matches!(
            mme_statistic(&w, &spec),
            Err(Error::DegenerateCovariance { .. })
        ));
        assert!(matches!(
            eme_statistic(&w, &spec),
            Err(Error::DegenerateCovariance { .. })
        ));
    }

    #[test]
    fn eme_scale_invariance() {
        let w = random_wf(128, 9);
        let spec = CovarianceSpec {
            smoothing_factor: 4,
        };
        let base = eme_statistic(&w, &spec).unwrap().value;
        let scaled = Waveform {
            samples: w.samples.iter().map(|s| s * 7.3).collect(),
            samples_per_symbol: w.samples_per_symbol,
        };
        let t = eme_statistic(&scaled, &spec).unwrap().value;
        assert!((t - base).abs() <= 1e-10 * base);
    }

    #[test]
    fn ratio_statistics_are_consistent_with_their_parts() {
        for seed in 0..10u64 {
            let w = h0_wf(seed + 100);
            let spec = CovarianceSpec::default();
            let r = sample_covariance(&w, &spec).unwrap();
            let (lmax, lmin) = eigen_extremes(&r).unwrap();
            let mme = mme_statistic(&w, &spec).unwrap().value;
            let eme = eme_statistic(&w, &spec).unwrap().value;
            let c0 = ed_statistic(&w).unwrap().value;
            assert!((mme * lmin - lmax).abs() <= 1e-10 * lmax);
            assert!((eme * lmin - c0).abs() <= 1e-10 * c0);
            assert!(mme >= 1.0);
        }
    }

    #[test]
    fn h0_eigenvalue_statistic_medians() {
        // Monte Carlo medians against the Marchenko-Pastur edge heuristics
        // for L = 10, K = 2000.
        let spec = CovarianceSpec::default();
        let trials = 10_000usize;
        let mut mme = Vec::with_capacity(trials);
        let mut eme = Vec::with_capacity(trials);
        for seed in 0..trials as u64 {
            let w = h0_wf(seed);
            let r = sample_covariance(&w, &spec).unwrap();
            let (lmax, lmin) = eigen_extremes(&r).unwrap();
            mme.push(lmax / lmin);
            eme.push(ed_statistic(&w).unwrap().value / lmin);
        }
        mme.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eme.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mme_median = mme[trials / 2];
        let eme_median = eme[trials / 2];
        assert!(
            mme_median > 1.0 && mme_median < 2.0,
            "MME median {mme_median}"
        );
        let c = (10.0f64 / 2000.0).sqrt();
        let eme_ref = 1.0 / (1.0 - c).powi(2);
        assert!(
            (eme_median - eme_ref).abs() < 0.05,
            "EME median {eme_median} vs heuristic {eme_ref}"
        );
    }

    #[test]
    fn statistic_kind_round_trip() {
        for kind in StatKind::ALL {
            let s = kind.to_string();
            assert_eq!(s.parse::<StatKind>().unwrap(), kind);
            assert_eq!(s.to_lowercase().parse::<StatKind>().unwrap(), kind);
        }
        assert!("edd".parse::<StatKind>().is_err());
    }
}
