//! Monte Carlo experiment harness.
//!
//! Thresholds are calibrated once per detector at nominal noise and then
//! reused across every uncertainty level and SNR, which is exactly what the
//! constant-false-alarm-rate protocol prescribes. False-alarm and detection
//! probabilities are estimated by counting decisions over seeded trials; all
//! detectors evaluate the same received waveform at a given trial index, as
//! a receiver would, so comparisons between detectors are paired.

use rayon::prelude::*;

use crate::detect::{
    cd_threshold, decide, ed_threshold, empirical_threshold, Decision, Threshold,
};
use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{realize_trial, Hypothesis, ModulationConfig, NoiseModel};
use crate::stats::{
    cd_statistic, ed_statistic, eigen_extremes, sample_covariance, CovarianceSpec, StatKind,
    StatisticValue,
};

pub const DEFAULT_PF_TRIALS: u64 = 100_000;
pub const DEFAULT_PD_TRIALS: u64 = 10_000;
pub const DEFAULT_CALIBRATION_TRIALS: u64 = 100_000;
pub const DEFAULT_MASTER_SEED: u64 = 42;

/// SNR grid for the headline table: Pd columns at -12, -10 and -8 dB.
pub const TABLE1_SNRS_DB: [f64; 3] = [-12.0, -10.0, -8.0];

// Stream tags for seed derivation; one tag per independent RNG stream.
const STREAM_CALIBRATION: u64 = 0;
const STREAM_H0_TAG: u64 = 1;
const STREAM_H1: u64 = 2;

fn default_snr_grid() -> Vec<f64> {
    (-20..=0).map(f64::from).collect()
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub modulation: ModulationConfig,
    /// Noise models to sweep; all must share one nominal variance.
    pub noise: Vec<NoiseModel>,
    pub detectors: Vec<StatKind>,
    pub target_pf: f64,
    pub snr_grid_db: Vec<f64>,
    pub pf_trials: u64,
    pub pd_trials: u64,
    pub calibration_trials: u64,
    pub master_seed: u64,
    pub covariance: CovarianceSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            modulation: ModulationConfig::default(),
            noise: [0.0, 1.0, 2.0]
                .iter()
                .map(|&u| NoiseModel {
                    nominal_variance: 1.0,
                    uncertainty_db: u,
                })
                .collect(),
            detectors: StatKind::ALL.to_vec(),
            target_pf: 0.1,
            snr_grid_db: default_snr_grid(),
            pf_trials: DEFAULT_PF_TRIALS,
            pd_trials: DEFAULT_PD_TRIALS,
            calibration_trials: DEFAULT_CALIBRATION_TRIALS,
            master_seed: DEFAULT_MASTER_SEED,
            covariance: CovarianceSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.modulation.validate()?;
        self.covariance.validate()?;
        if !(self.target_pf > 0.0 && self.target_pf < 1.0) {
            return Err(Error::param(format!(
                "target_pf must lie in (0, 1), got {}",
                self.target_pf
            )));
        }
        if self.noise.is_empty() {
            return Err(Error::param("at least one noise model is required"));
        }
        let nominal = self.noise[0].nominal_variance;
        for n in &self.noise {
            NoiseModel::new(n.nominal_variance, n.uncertainty_db)?;
            if n.nominal_variance != nominal {
                return Err(Error::param(
                    "all noise models must share one nominal variance",
                ));
            }
        }
        if self.detectors.is_empty() {
            return Err(Error::param("at least one detector is required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.detectors {
            if !seen.insert(*d) {
                return Err(Error::param(format!("detector {d} listed twice")));
            }
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::param("snr grid must be nonempty"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("snr grid must be strictly increasing"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("snr grid must be finite"));
        }
        if self.pf_trials < 100 || self.pd_trials < 100 {
            return Err(Error::param("trial counts must be >= 100"));
        }
        let k = self.modulation.samples_per_trial();
        if self.detectors.contains(&StatKind::Cd) && k % 2 != 0 {
            return Err(Error::param(format!(
                "the CD detector requires an even number of samples per trial, got {k}"
            )));
        }
        let l = self.covariance.smoothing_factor;
        let needs_cov = self
            .detectors
            .iter()
            .any(|d| matches!(d, StatKind::Mme | StatKind::Eme));
        if needs_cov && k < 2 * l {
            return Err(Error::param(format!(
                "eigenvalue detectors need K >= 2L (K = {k}, L = {l})"
            )));
        }
        Ok(())
    }

    pub fn nominal_variance(&self) -> f64 {
        self.noise[0].nominal_variance
    }
}

/// One cell of the result tables: a false-alarm estimate (snr_db = None) or
/// a detection estimate at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub detector: StatKind,
    pub uncertainty_db: f64,
    pub snr_db: Option<f64>,
    pub p_f: Option<f64>,
    pub p_d: Option<f64>,
    pub p_m: Option<f64>,
    pub trials: u64,
    pub wilson_halfwidth: f64,
    pub degenerate_trials: u64,
}

/// Half-width of the 95% Wilson score interval for a proportion.
pub fn wilson_halfwidth(p_hat: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = 1.959963984540054_f64;
    let nf = n as f64;
    let z2 = z * z;
    z * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    fired: u64,
    degenerate: u64,
}

/// Fold one trial outcome into a tally. A degenerate-covariance failure
/// counts as an H0 decision and is tracked separately; any other error
/// aborts the experiment.
fn apply_outcome(slot: &mut Tally, outcome: Result<bool>) -> Result<()> {
    match outcome {
        Ok(true) => slot.fired += 1,
        Ok(false) => {}
        Err(Error::DegenerateCovariance { .. }) => slot.degenerate += 1,
        Err(e) => return Err(e),
    }
    Ok(())
}

/// A calibrated experiment, ready to estimate error probabilities.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    thresholds: Vec<Threshold>, // aligned with config.detectors
}

impl Experiment {
    /// Validate the configuration and calibrate one threshold per detector
    /// at nominal noise: analytic for CD and ED, empirical quantiles for
    /// MME and EME (one shared noise-realization stream, so both reuse the
    /// same trial waveforms).
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let pf = config.target_pf;
        let sigma_w2 = config.nominal_variance();
        let k = config.modulation.samples_per_trial();
        let calib_seed = seed::derive(config.master_seed, &[STREAM_CALIBRATION]);

        let mut thresholds = Vec::with_capacity(config.detectors.len());
        for &det in &config.detectors {
            let t = match det {
                StatKind::Cd => cd_threshold(pf, sigma_w2, k)?,
                StatKind::Ed => ed_threshold(pf, sigma_w2, k)?,
                StatKind::Mme | StatKind::Eme => {
                    let nominal = NoiseModel::new(sigma_w2, 0.0)?;
                    let modulation = config.modulation;
                    let cov = config.covariance;
                    empirical_threshold(
                        det,
                        pf,
                        config.calibration_trials,
                        calib_seed,
                        move |trial_seed| {
                            let w = realize_trial(
                                &modulation,
                                &nominal,
                                0.0,
                                Hypothesis::H0,
                                trial_seed,
                            )?;
                            let r = sample_covariance(&w, &cov)?;
                            let (lmax, lmin) = eigen_extremes(&r)?;
                            if lmin <= 0.0 {
                                return Err(Error::DegenerateCovariance { lambda_min: lmin });
                            }
                            Ok(match det {
                                StatKind::Mme => lmax / lmin,
                                _ => ed_statistic(&w)?.value / lmin,
                            })
                        },
                    )?
                }
            };
            thresholds.push(t);
        }
        Ok(Experiment { config, thresholds })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn thresholds(&self) -> &[Threshold] {
        &self.thresholds
    }

    pub fn threshold(&self, detector: StatKind) -> Result<&Threshold> {
        self.config
            .detectors
            .iter()
            .position(|&d| d == detector)
            .map(|i| &self.thresholds[i])
            .ok_or_else(|| Error::param(format!("detector {detector} is not configured")))
    }

    /// The seed for one trial. All detectors share it, so every statistic at
    /// a given (hypothesis, uncertainty, snr, index) sees the same waveform.
    fn trial_seed(&self, hypothesis: Hypothesis, u_db: f64, snr_db: f64, index: u64) -> u64 {
        match hypothesis {
            Hypothesis::H0 => seed::derive(
                self.config.master_seed,
                &[STREAM_H0_TAG, u_db.to_bits(), index],
            ),
            Hypothesis::H1 => seed::derive(
                self.config.master_seed,
                &[STREAM_H1, u_db.to_bits(), snr_db.to_bits(), index],
            ),
        }
    }

    /// Run one seeded trial for one detector and return its decision.
    /// Deterministic given (master_seed, hypothesis, uncertainty, snr, index).
    pub fn run_trial(
        &self,
        detector: StatKind,
        hypothesis: Hypothesis,
        uncertainty_db: f64,
        snr_db: f64,
        trial_index: u64,
    ) -> Result<Decision> {
        let threshold = *self.threshold(detector)?;
        let noise = NoiseModel::new(self.config.nominal_variance(), uncertainty_db)?;
        let trial_seed = self.trial_seed(hypothesis, uncertainty_db, snr_db, trial_index);
        let w = realize_trial(&self.config.modulation, &noise, snr_db, hypothesis, trial_seed)?;
        let stat = match detector {
            StatKind::Cd => cd_statistic(&w)?,
            StatKind::Ed => ed_statistic(&w)?,
            StatKind::Mme => crate::stats::mme_statistic(&w, &self.config.covariance)?,
            StatKind::Eme => crate::stats::eme_statistic(&w, &self.config.covariance)?,
        };
        decide(stat, threshold)
    }

    /// Count firing decisions for a set of detectors over seeded trials.
    fn tally(
        &self,
        detectors: &[StatKind],
        hypothesis: Hypothesis,
        uncertainty_db: f64,
        snr_db: f64,
        trials: u64,
    ) -> Result<Vec<Tally>> {
        let noise = NoiseModel::new(self.config.nominal_variance(), uncertainty_db)?;
        let thresholds: Vec<Threshold> = detectors
            .iter()
            .map(|&d| self.threshold(d).copied())
            .collect::<Result<_>>()?;
        let needs_cov = detectors
            .iter()
            .any(|d| matches!(d, StatKind::Mme | StatKind::Eme));

        (0..trials)
            .into_par_iter()
            .try_fold(
                || vec![Tally::default(); detectors.len()],
                |mut acc, i| -> Result<Vec<Tally>> {
                    let trial_seed = self.trial_seed(hypothesis, uncertainty_db, snr_db, i);
                    let w = realize_trial(
                        &self.config.modulation,
                        &noise,
                        snr_db,
                        hypothesis,
                        trial_seed,
                    )?;
                    let eig = if needs_cov {
                        let r = sample_covariance(&w, &self.config.covariance)?;
                        Some(eigen_extremes(&r)?)
                    } else {
                        None
                    };
                    for ((slot, &det), thr) in
                        acc.iter_mut().zip(detectors).zip(&thresholds)
                    {
                        let stat: Result<f64> = match det {
                            StatKind::Cd => cd_statistic(&w).map(|s| s.value),
                            StatKind::Ed => ed_statistic(&w).map(|s| s.value),
                            StatKind::Mme | StatKind::Eme => {
                                let (lmax, lmin) = eig.expect("covariance computed");
                                if lmin <= 0.0 {
                                    Err(Error::DegenerateCovariance { lambda_min: lmin })
                                } else if det == StatKind::Mme {
                                    Ok(lmax / lmin)
                                } else {
                                    ed_statistic(&w).map(|s| s.value / lmin)
                                }
                            }
                        };
                        let fired = stat.map(|value| {
                            decide(StatisticValue { kind: det, value }, *thr)
                                .map(|d| d.hypothesis == Hypothesis::H1)
                        });
                        // Flatten Result<Result<bool>>; decide() errors are real.
                        let outcome = match fired {
                            Ok(inner) => inner,
                            Err(e) => Err(e),
                        };
                        apply_outcome(slot, outcome)?;
                    }
                    Ok(acc)
                },
            )
            .try_reduce(
                || vec![Tally::default(); detectors.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        x.fired += y.fired;
                        x.degenerate += y.degenerate;
                    }
                    Ok(a)
                },
            )
    }

    /// Estimate the false-alarm probability of one detector under noise-only
    /// trials at uncertainty `u_db`, using the threshold calibrated at
    /// nominal noise.
    pub fn estimate_pfa(&self, detector: StatKind, u_db: f64) -> Result<ResultRow> {
        let tallies = self.tally(&[detector], Hypothesis::H0, u_db, 0.0, self.config.pf_trials)?;
        Ok(self.pfa_row(detector, u_db, tallies[0]))
    }

    fn pfa_row(&self, detector: StatKind, u_db: f64, t: Tally) -> ResultRow {
        let n = self.config.pf_trials;
        let p = t.fired as f64 / n as f64;
        ResultRow {
            detector,
            uncertainty_db: u_db,
            snr_db: None,
            p_f: Some(p),
            p_d: None,
            p_m: None,
            trials: n,
            wilson_halfwidth: wilson_halfwidth(p, n),
            degenerate_trials: t.degenerate,
        }
    }

    /// Estimate the detection probability of one detector at one SNR under
    /// signal-plus-noise trials at uncertainty `u_db`.
    pub fn estimate_pd(&self, detector: StatKind, u_db: f64, snr_db: f64) -> Result<ResultRow> {
        let tallies = self.tally(
            &[detector],
            Hypothesis::H1,
            u_db,
            snr_db,
            self.config.pd_trials,
        )?;
        Ok(self.pd_row(detector, u_db, snr_db, None, tallies[0]))
    }

    fn pd_row(
        &self,
        detector: StatKind,
        u_db: f64,
        snr_db: f64,
        p_f: Option<f64>,
        t: Tally,
    ) -> ResultRow {
        let n = self.config.pd_trials;
        let p = t.fired as f64 / n as f64;
        ResultRow {
            detector,
            uncertainty_db: u_db,
            snr_db: Some(snr_db),
            p_f,
            p_d: Some(p),
            p_m: Some(1.0 - p),
            trials: n,
            wilson_halfwidth: wilson_halfwidth(p, n),
            degenerate_trials: t.degenerate,
        }
    }

    /// Full cross-product sweep: one false-alarm row per (detector,
    /// uncertainty) plus one detection row per (detector, uncertainty, snr),
    /// sorted by (detector, uncertainty, snr) with false-alarm rows first.
    pub fn sweep(&self) -> Result<Vec<ResultRow>> {
        self.sweep_over(&self.config.snr_grid_db)
    }

    /// Sweep restricted to the headline table cells: Pf plus Pd at -12, -10
    /// and -8 dB for every configured detector and uncertainty.
    pub fn reproduce_table1(&self) -> Result<Vec<ResultRow>> {
        self.sweep_over(&TABLE1_SNRS_DB)
    }

    fn sweep_over(&self, snrs: &[f64]) -> Result<Vec<ResultRow>> {
        let detectors = &self.config.detectors;
        let mut rows = Vec::new();
        for noise in &self.config.noise {
            let u = noise.uncertainty_db;
            let pf_tallies =
                self.tally(detectors, Hypothesis::H0, u, 0.0, self.config.pf_trials)?;
            let pf_by_det: Vec<f64> = pf_tallies
                .iter()
                .map(|t| t.fired as f64 / self.config.pf_trials as f64)
                .collect();
            for (i, &det) in detectors.iter().enumerate() {
                rows.push(self.pfa_row(det, u, pf_tallies[i]));
            }
            for &snr in snrs {
                let pd_tallies =
                    self.tally(detectors, Hypothesis::H1, u, snr, self.config.pd_trials)?;
                for (i, &det) in detectors.iter().enumerate() {
                    rows.push(self.pd_row(det, u, snr, Some(pf_by_det[i]), pd_tallies[i]));
                }
            }
        }
        rows.sort_by(|a, b| {
            (a.detector, a.uncertainty_db, a.snr_db.is_some(), a.snr_db)
                .partial_cmp(&(b.detector, b.uncertainty_db, b.snr_db.is_some(), b.snr_db))
                .expect("finite sort keys")
        });
        Ok(rows)
    }
}
