//! Spectrum sensing for linearly modulated signals.
//!
//! This crate implements a cyclostationarity-based detector (CD) alongside
//! energy detection (ED) and the two eigenvalue detectors (MME, EME), with
//! constant-false-alarm-rate threshold calibration and a reproducible Monte
//! Carlo harness for estimating false-alarm and detection probabilities
//! across SNR and noise-uncertainty grids.
//!
//! The CD statistic works at 2 samples/symbol, where the symbol-rate cycle
//! frequency lands on the alternating sequence (-1)^n: it is the squared
//! mean of |y(n)|^2 (-1)^n. Its null scales with the fourth power of the
//! noise amplitude but stays zero-mean, which is what keeps its false-alarm
//! rate nearly flat when the assumed noise power is off by a dB or two, a
//! regime where energy detection collapses.
//!
//! ```
//! use cyclosense::{cd_statistic, cd_threshold, decide, noise_waveform, Hypothesis, NoiseModel};
//!
//! let noise = NoiseModel::new(1.0, 0.0).unwrap();
//! let w = noise_waveform(2000, 2, &noise, 7).unwrap();
//! let stat = cd_statistic(&w).unwrap();
//! let thr = cd_threshold(0.1, 1.0, w.len()).unwrap();
//! let decision = decide(stat, thr).unwrap();
//! assert_eq!(decision.hypothesis, Hypothesis::H0);
//! ```

pub mod chi2;
pub mod detect;
pub mod error;
pub mod montecarlo;
pub mod seed;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};
pub use detect::{
    cd_threshold, decide, ed_threshold, empirical_threshold, CdNullModel, Decision, Provenance,
    Threshold,
};
pub use montecarlo::{
    wilson_halfwidth, Experiment, ExperimentConfig, ResultRow, DEFAULT_CALIBRATION_TRIALS,
    DEFAULT_MASTER_SEED, DEFAULT_PD_TRIALS, DEFAULT_PF_TRIALS, TABLE1_SNRS_DB,
};
pub use signal::{
    decimate_to_two_sps, gaussian_pulse_taps, modulate, noise_waveform, realize_trial, Hypothesis,
    ModulationConfig, NoiseModel, Scheme, SymbolSource, Waveform,
};
pub use stats::{
    cd_statistic, cyclic_autocorrelation, ed_statistic, eigen_extremes, eme_statistic,
    mme_statistic, sample_covariance, CovarianceSpec, CyclicParams, StatKind, StatisticValue,
};
