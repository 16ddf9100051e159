//! Errors-in-variables data generation and Monte Carlo experiments.
//!
//! One *scenario* fixes a true system ω_o, an input model, a pair of noise
//! sources (input and output), and a set of algorithms. A *run* draws one
//! noise realization, feeds the identical sample stream to every algorithm
//! (common random numbers, so comparisons are paired), and records the
//! per-iteration normalized mean-square deviation
//!
//! ```text
//! NMSD(τ) = ‖ω(τ) − ω_o‖² / ‖ω_o‖²            (reported in dB)
//! ```
//!
//! Monte Carlo averaging happens in the linear domain — the dB transform is
//! applied to the mean, never sample-wise — and run `r` of a scenario with
//! base seed `s` always uses the stream seeded with `s ⊕ r`. Runs execute in
//! parallel, but aggregation folds them in index order, so results are
//! bit-identical regardless of thread count or scheduling.
//!
//! Divergence is tracked per run in two forms:
//!
//! * **non-finite** — an update produced NaN/∞ (possible for LMS/GDTLS, whose
//!   corrections are unbounded in the error). Such runs carry no usable curve
//!   and are excluded from the aggregate.
//! * **behavioral** — the weights stayed finite (TACLDM's bounded update can
//!   never overflow) but the run ended with its steady-window mean NMSD above
//!   0 dB, i.e. worse than the zero-weight initialization. These runs keep
//!   contributing to the aggregate — the rising curve is the evidence — but
//!   count as diverged.
//!
//! Both kinds add to [`TrajectoryResult::diverged_runs`].

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baselines::AlgorithmKind;
use crate::error::{Error, Result};
use crate::filter::{FilterParams, FilterState, Sample};
use crate::noise::NoiseSpec;
use crate::wav;

/// Where the clean regressor stream comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputModel {
    /// Independent zero-mean Gaussian vector per iteration (R = variance·I).
    WhiteGaussian { variance: f64 },
    /// Sliding windows over a 16-bit PCM mono WAV file.
    SpeechFile { path: PathBuf },
}

/// An input model with any file dependency already loaded.
#[derive(Debug, Clone)]
enum InputSource {
    WhiteGaussian { variance: f64 },
    Speech(Arc<Vec<f64>>),
}

impl InputModel {
    fn resolve(&self) -> Result<InputSource> {
        match self {
            InputModel::WhiteGaussian { variance } => {
                if !variance.is_finite() || *variance <= 0.0 {
                    return Err(Error::invalid(format!(
                        "white input variance must be finite and > 0, got {variance}"
                    )));
                }
                Ok(InputSource::WhiteGaussian {
                    variance: *variance,
                })
            }
            InputModel::SpeechFile { path } => {
                Ok(InputSource::Speech(Arc::new(wav::read_pcm16_mono(path)?)))
            }
        }
    }
}

/// One algorithm entry of a scenario: a unique label, the update rule, and
/// its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub name: String,
    pub kind: AlgorithmKind,
    pub params: FilterParams,
}

/// Everything defining one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Filter length L.
    pub filter_len: usize,
    /// Iterations per run.
    pub n_samples: usize,
    /// Monte Carlo runs to average.
    pub n_runs: usize,
    /// Base seed; run r uses seed ⊕ r.
    pub seed: u64,
    pub input_model: InputModel,
    pub input_noise: NoiseSpec,
    pub output_noise: NoiseSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    /// If set, ω_o is negated from this iteration on (tracking experiments).
    pub tracking_flip_at: Option<usize>,
    /// Trailing window over which the steady state is estimated.
    pub steady_window: usize,
}

impl ScenarioConfig {
    /// Checks the structural invariants; every entry point calls this.
    pub fn validate(&self) -> Result<()> {
        if self.filter_len == 0 {
            return Err(Error::invalid("filter length must be >= 1"));
        }
        if self.steady_window == 0 || self.n_samples <= self.steady_window {
            return Err(Error::invalid(format!(
                "need n_samples > steady_window > 0, got {} and {}",
                self.n_samples, self.steady_window
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("need at least one Monte Carlo run"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("scenario lists no algorithms"));
        }
        for (i, alg) in self.algorithms.iter().enumerate() {
            if alg.name.is_empty() {
                return Err(Error::invalid(format!("algorithm {i} has an empty name")));
            }
            if self.algorithms[..i].iter().any(|a| a.name == alg.name) {
                return Err(Error::invalid(format!(
                    "duplicate algorithm name '{}'",
                    alg.name
                )));
            }
            // Re-validate in case the parameters were mutated after construction.
            FilterParams::new(alg.params.mu, alg.params.gamma, alg.params.epsilon)?;
        }
        if let Some(k) = self.tracking_flip_at {
            if k == 0 || k >= self.n_samples {
                return Err(Error::invalid(format!(
                    "tracking flip at {k} must fall inside (0, n_samples)"
                )));
            }
        }
        Ok(())
    }
}

/// Monte Carlo–averaged learning curve of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    /// Per-iteration NMSD in dB (linear mean over runs, then dB). −∞ marks an
    /// exact-convergence iteration; NaN appears only if every run overflowed.
    pub nmsd_db: Vec<f64>,
    /// dB of the mean linear NMSD over the final `steady_window` iterations.
    pub steady_state_db: f64,
    /// Runs that overflowed or ended above 0 dB (see module docs).
    pub diverged_runs: usize,
    /// Total runs attempted.
    pub n_runs: usize,
}

impl TrajectoryResult {
    /// True when more than 10% of runs diverged.
    pub fn divergence_flagged(&self) -> bool {
        self.diverged_runs * 10 > self.n_runs
    }
}

/// One generated EIV observation with its clean counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct EivRecord {
    /// The noisy pair (x̄, d̄) seen by the filters.
    pub sample: Sample,
    /// Clean regressor x.
    pub clean_input: DVector<f64>,
    /// Clean desired ω_oᵀx (with the tracking flip applied if due).
    pub clean_desired: f64,
}

/// Normalized mean-square deviation in dB: 10·log₁₀(‖ω − ω_o‖²/‖ω_o‖²).
///
/// Exact convergence yields −∞ (never NaN). The reference must be nonzero.
pub fn nmsd_db(weights: &DVector<f64>, true_weights: &DVector<f64>) -> f64 {
    let denom = true_weights.norm_squared();
    assert!(denom > 0.0, "NMSD reference weights must be nonzero");
    10.0 * ((weights - true_weights).norm_squared() / denom).log10()
}

fn speech_length_check(source: &InputSource, config: &ScenarioConfig) -> Result<()> {
    if let InputSource::Speech(samples) = source {
        let needed = config.n_samples + config.filter_len;
        if samples.len() < needed {
            return Err(Error::invalid(format!(
                "speech signal too short: need at least {needed} samples, got {}",
                samples.len()
            )));
        }
    }
    Ok(())
}

/// Draws one full EIV realization: per iteration τ the clean regressor x(τ),
/// then the input-noise vector u(τ), then the output noise v(τ), emitting
/// x̄ = x + u and d̄ = ω_oᵀx + v. With `tracking_flip_at = k` the true weights
/// are negated for τ ≥ k. The fixed draw order is part of the reproducibility
/// contract.
pub fn eiv_generate<R: Rng>(
    true_weights: &DVector<f64>,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<EivRecord>> {
    config.validate()?;
    if true_weights.len() != config.filter_len {
        return Err(Error::DimensionMismatch {
            expected: config.filter_len,
            got: true_weights.len(),
        });
    }
    let source = config.input_model.resolve()?;
    speech_length_check(&source, config)?;
    Ok(generate_with_source(true_weights, config, &source, rng))
}

fn generate_with_source<R: Rng>(
    true_weights: &DVector<f64>,
    config: &ScenarioConfig,
    source: &InputSource,
    rng: &mut R,
) -> Vec<EivRecord> {
    let l = config.filter_len;
    let flipped = -true_weights;
    let mut records = Vec::with_capacity(config.n_samples);
    for tau in 0..config.n_samples {
        let clean_input = match source {
            InputSource::WhiteGaussian { variance } => {
                let sd = variance.sqrt();
                DVector::from_fn(l, |_, _| rng.sample::<f64, _>(StandardNormal) * sd)
            }
            // Tapped delay line, newest sample first.
            InputSource::Speech(samples) => DVector::from_fn(l, |j, _| samples[tau + l - 1 - j]),
        };
        let noise = config.input_noise.sample_vector(l, rng);
        let v = config.output_noise.sample(rng);
        let truth = if config.tracking_flip_at.is_some_and(|k| tau >= k) {
            &flipped
        } else {
            true_weights
        };
        let clean_desired = truth.dot(&clean_input);
        records.push(EivRecord {
            sample: Sample::new(&clean_input + noise, clean_desired + v),
            clean_input,
            clean_desired,
        });
    }
    records
}

/// Per-run, per-algorithm raw outcome before aggregation.
struct AlgRunOutcome {
    /// Linear NMSD after each completed update.
    ratios: Vec<f64>,
    /// Squared a-priori errors (only collected for AEC scenarios).
    sq_errors: Vec<f64>,
    nonfinite: bool,
    behavioral: bool,
}

fn simulate_algorithm(
    records: &[EivRecord],
    true_weights: &DVector<f64>,
    flipped: &DVector<f64>,
    config: &ScenarioConfig,
    alg: &AlgorithmSpec,
    collect_residual: bool,
) -> Result<AlgRunOutcome> {
    let denom = true_weights.norm_squared();
    let mut state = FilterState::zeros(config.filter_len);
    let mut ratios = Vec::with_capacity(records.len());
    let mut sq_errors = if collect_residual {
        Vec::with_capacity(records.len())
    } else {
        Vec::new()
    };
    let mut nonfinite = false;
    for (tau, record) in records.iter().enumerate() {
        if collect_residual {
            let e = record.sample.desired - state.weights.dot(&record.sample.input);
            sq_errors.push(e * e);
        }
        match alg.kind.step(&record.sample, &state, &alg.params) {
            Ok(next) => state = next,
            Err(Error::Diverged { .. }) => {
                nonfinite = true;
                break;
            }
            Err(other) => return Err(other),
        }
        let truth = if config.tracking_flip_at.is_some_and(|k| tau >= k) {
            flipped
        } else {
            true_weights
        };
        ratios.push((&state.weights - truth).norm_squared() / denom);
    }
    let behavioral = !nonfinite && {
        let w = config.steady_window.min(ratios.len()).max(1);
        let tail = &ratios[ratios.len() - w..];
        tail.iter().sum::<f64>() / w as f64 > 1.0
    };
    Ok(AlgRunOutcome {
        ratios,
        sq_errors,
        nonfinite,
        behavioral,
    })
}

fn run_once(
    true_weights: &DVector<f64>,
    config: &ScenarioConfig,
    source: &InputSource,
    run_index: u64,
    collect_residual: bool,
) -> Result<Vec<AlgRunOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ run_index);
    let records = generate_with_source(true_weights, config, source, &mut rng);
    let flipped = -true_weights;
    config
        .algorithms
        .iter()
        .map(|alg| {
            simulate_algorithm(
                &records,
                true_weights,
                &flipped,
                config,
                alg,
                collect_residual,
            )
        })
        .collect()
}

/// Aggregated result of one algorithm, with the AEC residual when requested.
struct EngineResult {
    name: String,
    trajectory: TrajectoryResult,
    residual_rms: Option<Vec<f64>>,
}

fn mc_engine(
    true_weights: &DVector<f64>,
    config: &ScenarioConfig,
    source: &InputSource,
    collect_residual: bool,
) -> Result<Vec<EngineResult>> {
    config.validate()?;
    if true_weights.len() != config.filter_len {
        return Err(Error::DimensionMismatch {
            expected: config.filter_len,
            got: true_weights.len(),
        });
    }
    if true_weights.norm_squared() <= 0.0 {
        return Err(Error::invalid(
            "true weights must be nonzero (NMSD normalizes by their norm)",
        ));
    }
    speech_length_check(source, config)?;

    // Runs execute in parallel; collection preserves run order, and the fold
    // below is sequential, so the aggregate is independent of scheduling.
    let outcomes: Vec<Result<Vec<AlgRunOutcome>>> = (0..config.n_runs as u64)
        .into_par_iter()
        .map(|r| run_once(true_weights, config, source, r, collect_residual))
        .collect();
    let outcomes: Vec<Vec<AlgRunOutcome>> = outcomes.into_iter().collect::<Result<_>>()?;

    let n = config.n_samples;
    let mut results = Vec::with_capacity(config.algorithms.len());
    for (a, alg) in config.algorithms.iter().enumerate() {
        let runs: Vec<&AlgRunOutcome> = outcomes.iter().map(|o| &o[a]).collect();
        let nonfinite = runs.iter().filter(|r| r.nonfinite).count();
        let behavioral = runs.iter().filter(|r| r.behavioral).count();
        let included: Vec<&&AlgRunOutcome> = runs.iter().filter(|r| !r.nonfinite).collect();

        let (nmsd_curve, steady_state_db, residual) = if included.is_empty() {
            (
                vec![f64::NAN; n],
                f64::NAN,
                collect_residual.then(|| vec![f64::NAN; n]),
            )
        } else {
            let count = included.len() as f64;
            let mut linear_mean = vec![0.0f64; n];
            for run in &included {
                for (tau, ratio) in run.ratios.iter().enumerate() {
                    linear_mean[tau] += ratio;
                }
            }
            for value in &mut linear_mean {
                *value /= count;
            }
            let tail = &linear_mean[n - config.steady_window..];
            let steady = 10.0 * (tail.iter().sum::<f64>() / tail.len() as f64).log10();
            let curve: Vec<f64> = linear_mean.iter().map(|m| 10.0 * m.log10()).collect();
            let residual = collect_residual.then(|| {
                let mut mean_sq = vec![0.0f64; n];
                for run in &included {
                    for (tau, sq) in run.sq_errors.iter().enumerate() {
                        mean_sq[tau] += sq;
                    }
                }
                mean_sq.iter().map(|s| (s / count).sqrt()).collect()
            });
            (curve, steady, residual)
        };

        results.push(EngineResult {
            name: alg.name.clone(),
            trajectory: TrajectoryResult {
                nmsd_db: nmsd_curve,
                steady_state_db,
                diverged_runs: nonfinite + behavioral,
                n_runs: config.n_runs,
            },
            residual_rms: residual,
        });
    }
    Ok(results)
}

/// Runs the full Monte Carlo experiment; one trajectory per algorithm, in
/// config order.
pub fn run_monte_carlo(
    true_weights: &DVector<f64>,
    config: &ScenarioConfig,
) -> Result<Vec<(String, TrajectoryResult)>> {
    config.validate()?;
    let source = config.input_model.resolve()?;
    Ok(mc_engine(true_weights, config, &source, false)?
        .into_iter()
        .map(|r| (r.name, r.trajectory))
        .collect())
}

/// The scenario parameter a sweep varies across all algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Gamma,
    Mu,
}

impl SweepParameter {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gamma" => Ok(SweepParameter::Gamma),
            "mu" => Ok(SweepParameter::Mu),
            other => Err(Error::invalid(format!(
                "unknown sweep parameter '{other}' (expected gamma or mu)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Gamma => "gamma",
            SweepParameter::Mu => "mu",
        }
    }
}

/// One sweep value with its full per-algorithm results.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub results: Vec<(String, TrajectoryResult)>,
}

/// Re-runs the scenario once per value, overriding the chosen parameter for
/// every algorithm. Run seeds depend only on the base seed and run index, so
/// sweep points share their random realizations (paired comparisons).
pub fn sweep(
    parameter: SweepParameter,
    values: &[f64],
    true_weights: &DVector<f64>,
    base: &ScenarioConfig,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut config = base.clone();
        for alg in &mut config.algorithms {
            let p = &alg.params;
            alg.params = match parameter {
                SweepParameter::Gamma => FilterParams::new(p.mu, value, p.epsilon)?,
                SweepParameter::Mu => FilterParams::new(value, p.gamma, p.epsilon)?,
            };
        }
        points.push(SweepPoint {
            value,
            results: run_monte_carlo(true_weights, &config)?,
        });
    }
    Ok(points)
}

/// Trajectory plus residual-echo trace of one algorithm in an AEC scenario.
#[derive(Debug, Clone)]
pub struct AecOutcome {
    pub name: String,
    pub trajectory: TrajectoryResult,
    /// RMS (over runs) of the a-priori residual echo per iteration.
    pub residual_rms: Vec<f64>,
}

/// Acoustic echo cancellation: the far-end speech drives a known echo channel
/// (`echo_ir`, acting as ω_o), EIV noise is injected per the config, and each
/// algorithm tries to identify the channel. The config's `input_model` is
/// ignored — the provided speech is the input.
pub fn aec_scenario(
    speech: &[f64],
    echo_ir: &DVector<f64>,
    config: &ScenarioConfig,
) -> Result<Vec<AecOutcome>> {
    config.validate()?;
    if echo_ir.len() != config.filter_len {
        return Err(Error::DimensionMismatch {
            expected: config.filter_len,
            got: echo_ir.len(),
        });
    }
    let source = InputSource::Speech(Arc::new(speech.to_vec()));
    Ok(mc_engine(echo_ir, config, &source, true)?
        .into_iter()
        .map(|r| AecOutcome {
            name: r.name,
            trajectory: r.trajectory,
            residual_rms: r.residual_rms.expect("residual collection was requested"),
        })
        .collect())
}
