//! CFAR threshold calibration and the decision rule.
//!
//! CD and ED admit analytic thresholds: the CD statistic scaled by K/sigma^4
//! is chi-square with one degree of freedom under noise alone, and the ED
//! statistic scaled by 2K/sigma^2 is chi-square with 2K degrees of freedom.
//! MME and EME have no closed-form null here, so their thresholds come from
//! an empirical quantile over seeded noise-only trials.

use rayon::prelude::*;

use crate::chi2::chi2_inv_sf;
use crate::error::{Error, Result};
use crate::seed;
use crate::signal::Hypothesis;
use crate::stats::{StatKind, StatisticValue};

/// How a threshold value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Empirical { trials: u64, seed: u64 },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Analytic => write!(f, "analytic"),
            Provenance::Empirical { trials, seed } => {
                write!(f, "empirical({trials} trials, seed {seed})")
            }
        }
    }
}

/// A calibrated detection threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub kind: StatKind,
    pub target_pf: f64,
    pub lambda: f64,
    pub provenance: Provenance,
}

/// Null moments of the CD statistic: mean sigma^4/K, variance 2 sigma^8/K^2,
/// one chi-square degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdNullModel {
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub dof: u32,
}

impl CdNullModel {
    pub fn new(sigma_w2: f64, k: usize) -> Result<Self> {
        if !(sigma_w2 > 0.0) || !sigma_w2.is_finite() {
            return Err(Error::param(format!(
                "noise variance must be positive and finite, got {sigma_w2}"
            )));
        }
        if k == 0 || k % 2 != 0 {
            return Err(Error::param(format!(
                "CD null model requires a nonzero even K, got {k}"
            )));
        }
        let mu0 = sigma_w2 * sigma_w2 / k as f64;
        Ok(CdNullModel {
            mu0,
            sigma0_sq: 2.0 * mu0 * mu0,
            dof: 1,
        })
    }
}

fn validate_pf(pf: f64) -> Result<()> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(Error::param(format!(
            "target false-alarm probability must lie in (0, 1), got {pf}"
        )));
    }
    Ok(())
}

/// Analytic CD threshold: lambda = (sigma^4/K) * chi2_inv_sf(pf, 1).
pub fn cd_threshold(pf: f64, sigma_w2: f64, k: usize) -> Result<Threshold> {
    validate_pf(pf)?;
    let null = CdNullModel::new(sigma_w2, k)?;
    Ok(Threshold {
        kind: StatKind::Cd,
        target_pf: pf,
        lambda: null.mu0 * chi2_inv_sf(pf, 1)?,
        provenance: Provenance::Analytic,
    })
}

/// Analytic ED threshold from the exact complex-Gaussian null
/// C0 ~ (sigma^2 / 2K) chi^2_{2K}:  lambda = (sigma^2/(2K)) * chi2_inv_sf(pf, 2K).
pub fn ed_threshold(pf: f64, sigma_w2: f64, k: usize) -> Result<Threshold> {
    validate_pf(pf)?;
    if !(sigma_w2 > 0.0) || !sigma_w2.is_finite() {
        return Err(Error::param(format!(
            "noise variance must be positive and finite, got {sigma_w2}"
        )));
    }
    if k == 0 {
        return Err(Error::param("ED threshold requires K >= 1"));
    }
    Ok(Threshold {
        kind: StatKind::Ed,
        target_pf: pf,
        lambda: sigma_w2 / (2.0 * k as f64) * chi2_inv_sf(pf, 2 * k)?,
        provenance: Provenance::Analytic,
    })
}

/// Empirical threshold: the (1 - pf) order-statistic quantile ("higher"
/// interpolation, conservative) of the statistic over `trials` noise-only
/// realizations at nominal noise power.
///
/// `sample_h0` receives a per-trial seed derived from `seed` and the trial
/// index, and must return the statistic of one noise-only realization as a
/// pure function of that seed. The result is deterministic given `seed`,
/// regardless of how trials are scheduled across workers.
pub fn empirical_threshold<F>(
    kind: StatKind,
    pf: f64,
    trials: u64,
    seed: u64,
    sample_h0: F,
) -> Result<Threshold>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    validate_pf(pf)?;
    let needed = (10.0 / pf).ceil() as u64;
    if trials < needed {
        return Err(Error::param(format!(
            "empirical threshold at pf = {pf} needs at least {needed} trials, got {trials}"
        )));
    }
    let mut values = (0..trials)
        .into_par_iter()
        .map(|i| {
            let v = sample_h0(seed::derive(seed, &[i]))?;
            if !v.is_finite() {
                return Err(Error::numeric(format!(
                    "statistic {kind} was non-finite during calibration"
                )));
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>>>()?;
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let q = 1.0 - pf;
    let idx = (q * (trials - 1) as f64).ceil() as usize;
    Ok(Threshold {
        kind,
        target_pf: pf,
        lambda: values[idx],
        provenance: Provenance::Empirical { trials, seed },
    })
}

/// Outcome of comparing one statistic against one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub hypothesis: Hypothesis,
    pub statistic: StatisticValue,
    pub threshold: Threshold,
}

/// Declare the signal present iff the statistic meets or exceeds the
/// threshold (ties decide for H1).
pub fn decide(statistic: StatisticValue, threshold: Threshold) -> Result<Decision> {
    if statistic.kind != threshold.kind {
        return Err(Error::param(format!(
            "statistic kind {} does not match threshold kind {}",
            statistic.kind, threshold.kind
        )));
    }
    let hypothesis = if statistic.value >= threshold.lambda {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok(Decision {
        hypothesis,
        statistic,
        threshold,
    })
}
