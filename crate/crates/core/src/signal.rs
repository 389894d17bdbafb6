//! Baseband signal model.
//!
//! Generates the two sensing hypotheses: pulse-shaped linear modulation plus
//! circularly symmetric complex white Gaussian noise (signal present), or
//! noise alone. Noise power may deviate from its nominal value by a
//! per-trial offset drawn uniformly in dB, which models imperfect knowledge
//! of the noise floor at the receiver.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// The two sensing hypotheses: noise only (H0) or signal plus noise (H1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Linear modulation alphabet identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Bpsk,
}

impl Scheme {
    /// Constellation points; unit mean power by construction.
    pub fn alphabet(&self) -> Vec<Complex64> {
        match self {
            Scheme::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Bpsk => write!(f, "bpsk"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Scheme::Bpsk),
            other => Err(Error::param(format!("unknown modulation scheme `{other}`"))),
        }
    }
}

/// Transmitter-side modulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationConfig {
    pub scheme: Scheme,
    /// Samples per symbol (T / T_s).
    pub samples_per_symbol: usize,
    /// Bandwidth-symbol-time product of the Gaussian pulse.
    pub bt_product: f64,
    /// Pulse truncation length in symbols.
    pub pulse_span_symbols: usize,
    /// Symbols per sensing trial.
    pub n_symbols: usize,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        ModulationConfig {
            scheme: Scheme::Bpsk,
            samples_per_symbol: 2,
            bt_product: 0.5,
            pulse_span_symbols: 4,
            n_symbols: 1000,
        }
    }
}

impl ModulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_symbol < 1 {
            return Err(Error::param("samples_per_symbol must be >= 1"));
        }
        if !(self.bt_product > 0.0) || !self.bt_product.is_finite() {
            return Err(Error::param(format!(
                "bt_product must be positive and finite, got {}",
                self.bt_product
            )));
        }
        if self.pulse_span_symbols < 1 {
            return Err(Error::param("pulse_span_symbols must be >= 1"));
        }
        if self.n_symbols < 1 {
            return Err(Error::param("n_symbols must be >= 1"));
        }
        Ok(())
    }

    /// Samples per sensing trial, K.
    pub fn samples_per_trial(&self) -> usize {
        self.n_symbols * self.samples_per_symbol
    }
}

/// Draws i.i.d. uniform symbols from a unit-mean-power alphabet.
#[derive(Debug, Clone)]
pub struct SymbolSource {
    alphabet: Vec<Complex64>,
    rng: ChaCha8Rng,
}

impl SymbolSource {
    pub fn new(scheme: Scheme, seed: u64) -> Self {
        SymbolSource {
            alphabet: scheme.alphabet(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Build a source from an explicit alphabet, which must be nonempty,
    /// finite and of unit mean power.
    pub fn from_alphabet(alphabet: Vec<Complex64>, seed: u64) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::param("alphabet must be nonempty"));
        }
        if alphabet.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::param("alphabet contains non-finite points"));
        }
        let power = alphabet.iter().map(|s| s.norm_sqr()).sum::<f64>() / alphabet.len() as f64;
        if (power - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "alphabet mean power must be 1, got {power}"
            )));
        }
        Ok(SymbolSource {
            alphabet,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn draw(&mut self, count: usize) -> Vec<Complex64> {
        (0..count)
            .map(|_| self.alphabet[self.rng.gen_range(0..self.alphabet.len())])
            .collect()
    }
}

/// Noise power model: a nominal variance plus a +/- dB uncertainty bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Nominal noise variance (linear power units), used for thresholding.
    pub nominal_variance: f64,
    /// Half-width of the dB uncertainty interval; 0 means perfect knowledge.
    pub uncertainty_db: f64,
}

impl NoiseModel {
    pub fn new(nominal_variance: f64, uncertainty_db: f64) -> Result<Self> {
        if !(nominal_variance > 0.0) || !nominal_variance.is_finite() {
            return Err(Error::param(format!(
                "nominal noise variance must be positive and finite, got {nominal_variance}"
            )));
        }
        if !(uncertainty_db >= 0.0) || !uncertainty_db.is_finite() {
            return Err(Error::param(format!(
                "uncertainty_db must be >= 0 and finite, got {uncertainty_db}"
            )));
        }
        Ok(NoiseModel {
            nominal_variance,
            uncertainty_db,
        })
    }

    /// Per-trial actual noise variance: nominal scaled by 10^(u/10) with u
    /// uniform on [-U, +U]. U = 0 returns the nominal variance exactly.
    pub fn draw_actual_variance(&self, rng: &mut impl Rng) -> f64 {
        if self.uncertainty_db == 0.0 {
            self.nominal_variance
        } else {
            let u = rng.gen_range(-self.uncertainty_db..self.uncertainty_db);
            self.nominal_variance * 10f64.powf(u / 10.0)
        }
    }
}

/// A finite block of complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub samples_per_symbol: usize,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Empirical mean power over the block.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

fn normalize_mean_power(samples: &mut [Complex64]) {
    let p = mean_power(samples);
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        for s in samples.iter_mut() {
            *s *= g;
        }
    }
}

/// Samples of the Gaussian pulse g(t) = exp(-2 pi^2 B^2 t^2 / ln 2), with
/// B = bt_product / T, taken at t = n T_s over [-span T/2, span T/2].
///
/// The returned taps are symmetric about the center tap (t = 0) and carry no
/// normalization; power normalization happens in [`modulate`].
pub fn gaussian_pulse_taps(config: &ModulationConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let sps = config.samples_per_symbol;
    let half = config.pulse_span_symbols * sps / 2;
    let rate = 2.0 * std::f64::consts::PI.powi(2) * config.bt_product.powi(2)
        / std::f64::consts::LN_2;
    // 2*half + 1 taps centered on t = 0, so the grid is symmetric even when
    // span * sps is odd.
    Ok((0..=2 * half)
        .map(|i| {
            let t = (i as f64 - half as f64) / sps as f64; // in units of T
            (-rate * t * t).exp()
        })
        .collect())
}

/// Pulse-shape a symbol sequence: x(n) = sum_k s_k g(n T_s - k T), evaluated
/// at `samples_per_symbol` samples per symbol over the full convolution
/// support, then scaled by one global constant so that the empirical mean
/// power of the returned block is exactly 1 (all-zero input stays zero).
pub fn modulate(symbols: &[Complex64], config: &ModulationConfig) -> Result<Waveform> {
    config.validate()?;
    if symbols.is_empty() {
        return Err(Error::param("symbol sequence is empty"));
    }
    let taps = gaussian_pulse_taps(config)?;
    let sps = config.samples_per_symbol;
    let out_len = (symbols.len() - 1) * sps + taps.len();
    let mut samples = vec![Complex64::new(0.0, 0.0); out_len];
    for (k, &s) in symbols.iter().enumerate() {
        let base = k * sps;
        for (j, &t) in taps.iter().enumerate() {
            samples[base + j] += s * t;
        }
    }
    normalize_mean_power(&mut samples);
    Ok(Waveform {
        samples,
        samples_per_symbol: sps,
    })
}

/// Pure-noise waveform of the given length: circularly symmetric complex
/// Gaussian samples with a per-trial variance drawn from `noise`.
/// Deterministic given `seed`.
pub fn noise_waveform(
    len: usize,
    samples_per_symbol: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Waveform> {
    if len == 0 {
        return Err(Error::param("waveform length must be >= 1"));
    }
    if samples_per_symbol < 1 {
        return Err(Error::param("samples_per_symbol must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actual = noise.draw_actual_variance(&mut rng);
    let scale = (actual * 0.5).sqrt();
    let samples = (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    Ok(Waveform {
        samples,
        samples_per_symbol,
    })
}

/// Realize one sensing trial of K = n_symbols * samples_per_symbol samples.
///
/// Under H0 the output is pure noise. Under H1 it is `a x + w` where x is a
/// freshly drawn, pulse-shaped symbol block normalized to unit mean power
/// and `a` is chosen so the per-sample SNR relative to the *nominal* noise
/// variance equals 10^(snr_db/10). The modulator shapes n_symbols plus one
/// pulse span of extra symbols and trims half a span from each end, so every
/// retained sample has full pulse support. Deterministic given `seed`.
pub fn realize_trial(
    config: &ModulationConfig,
    noise: &NoiseModel,
    snr_db: f64,
    hypothesis: Hypothesis,
    seed: u64,
) -> Result<Waveform> {
    config.validate()?;
    let sps = config.samples_per_symbol;
    let k = config.samples_per_trial();

    match hypothesis {
        Hypothesis::H0 => noise_waveform(k, sps, noise, seed),
        Hypothesis::H1 => {
            if !snr_db.is_finite() {
                return Err(Error::param(format!("snr_db must be finite, got {snr_db}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let symbol_seed = rng.gen::<u64>();

            let ext = (config.pulse_span_symbols + 1) / 2;
            let mut source = SymbolSource::new(config.scheme, symbol_seed);
            let symbols = source.draw(config.n_symbols + 2 * ext);
            let full = modulate(&symbols, config)?;

            // Keep the central n_symbols' worth of samples, starting at the
            // peak of the first fully supported symbol.
            let center = config.pulse_span_symbols * sps / 2;
            let start = ext * sps + center;
            let mut x = full.samples[start..start + k].to_vec();
            normalize_mean_power(&mut x);

            let amp = (10f64.powf(snr_db / 10.0) * noise.nominal_variance).sqrt();
            let actual = noise.draw_actual_variance(&mut rng);
            let scale = (actual * 0.5).sqrt();
            for s in x.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s = *s * amp + Complex64::new(scale * re, scale * im);
            }
            Ok(Waveform {
                samples: x,
                samples_per_symbol: sps,
            })
        }
    }
}

/// Keep every `factor`-th sample starting at offset 0, reducing a waveform
/// at 2*factor samples/symbol to 2 samples/symbol. No anti-alias filter.
pub fn decimate_to_two_sps(w: &Waveform, factor: usize) -> Result<Waveform> {
    if factor == 0 {
        return Err(Error::param("decimation factor must be >= 1"));
    }
    if w.samples_per_symbol != 2 * factor {
        return Err(Error::param(format!(
            "cannot reduce {} samples/symbol to 2 with factor {}",
            w.samples_per_symbol, factor
        )));
    }
    Ok(Waveform {
        samples: w.samples.iter().copied().step_by(factor).collect(),
        samples_per_symbol: 2,
    })
}
