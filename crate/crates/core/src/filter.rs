//! The TACLDM adaptive filter core.
//!
//! TACLDM performs errors-in-variables (EIV) system identification: both the
//! regressor and the desired signal are observed through additive noise, so an
//! ordinary least-squares criterion is biased and an outlier in either channel
//! can throw a quadratic update far off course. The filter combats both
//! problems at once:
//!
//! * a total-least-squares style normalization by the augmented weight norm
//!   `‖ω̄‖`, with `ω̄ = [√ε, −ωᵀ]ᵀ`, accounts for noise on the input as well as
//!   the output (`ε` is the output-to-input noise variance ratio);
//! * a bounded, redescending score function makes the update insensitive to
//!   large errors — the correction *shrinks back toward zero* as `|e|` grows,
//!   so impulsive disturbances barely move the weights.
//!
//! Concretely, with normalized error `η = e / (γ‖ω̄‖)` the filter ascends the
//! instantaneous objective
//!
//! ```text
//! J(ω) = arctan(ψ),    ψ = 1 / (2γ·[cosh(η) + 1])
//! ```
//!
//! which peaks at `e = 0` and flattens out for large `|e|`. The scale `γ`
//! controls where the influence of an error starts to decay; small `γ` means
//! aggressive outlier rejection, large `γ` approaches a smoother, more
//! LMS-like behavior near the optimum.
//!
//! All entry points are pure: they borrow their inputs and return fresh
//! values, so a caller can fan one [`FilterState`] out to several candidate
//! updates without cloning defensively.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Step size, robustness scale, and noise-variance ratio for one filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Step size μ of the stochastic-gradient update.
    pub mu: f64,
    /// Robustness scale γ; errors beyond a few γ‖ω̄‖ are progressively ignored.
    pub gamma: f64,
    /// Ratio ε = σ_o² / σ_i² of output to input noise variance.
    pub epsilon: f64,
}

impl FilterParams {
    /// Validates that all three parameters are finite and strictly positive.
    pub fn new(mu: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        for (name, value) in [("mu", mu), ("gamma", gamma), ("epsilon", epsilon)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(FilterParams { mu, gamma, epsilon })
    }
}

/// Adaptive weight vector together with the number of updates applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    /// Current weight estimate ω.
    pub weights: DVector<f64>,
    /// Count of updates applied since initialization.
    pub iteration: u64,
}

impl FilterState {
    /// The conventional cold start: ω = 0.
    pub fn zeros(len: usize) -> Self {
        FilterState {
            weights: DVector::zeros(len),
            iteration: 0,
        }
    }

    /// Starts from a given weight vector with the iteration count at zero.
    pub fn from_weights(weights: DVector<f64>) -> Self {
        FilterState {
            weights,
            iteration: 0,
        }
    }

    /// Filter length L.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// True when the filter has no taps (a degenerate but representable state).
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// One observed regressor/desired pair, both possibly noise-corrupted.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Observed regressor x̄ = x + u (input noise u).
    pub input: DVector<f64>,
    /// Observed desired signal d̄ = d + v (output noise v).
    pub desired: f64,
}

impl Sample {
    pub fn new(input: DVector<f64>, desired: f64) -> Self {
        Sample { input, desired }
    }
}

/// The augmented weight vector ω̄ = [√ε, −ωᵀ]ᵀ with its squared norm cached.
///
/// The leading √ε entry keeps `‖ω̄‖² = ε + ‖ω‖²` bounded away from zero, which
/// is what makes the total-least-squares normalization well defined even at
/// the ω = 0 cold start.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedWeight {
    vector: DVector<f64>,
    norm_sq: f64,
}

impl AugmentedWeight {
    /// The augmented vector itself, length L + 1.
    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }

    /// Cached ‖ω̄‖² = ε + ‖ω‖².
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// ‖ω̄‖.
    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// Builds ω̄ = [√ε, −ωᵀ]ᵀ and caches ‖ω̄‖² = ε + ‖ω‖².
///
/// Requires ε > 0 and finite weights.
pub fn augmented_weight(weights: &DVector<f64>, epsilon: f64) -> Result<AugmentedWeight> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    let mut vector = DVector::zeros(weights.len() + 1);
    vector[0] = epsilon.sqrt();
    for (i, w) in weights.iter().enumerate() {
        vector[i + 1] = -w;
    }
    let norm_sq = epsilon + weights.norm_squared();
    Ok(AugmentedWeight { vector, norm_sq })
}

/// Prediction error e = d̄ − ωᵀx̄ for one sample.
pub fn prediction_error(sample: &Sample, state: &FilterState) -> Result<f64> {
    if sample.input.len() != state.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: state.weights.len(),
            got: sample.input.len(),
        });
    }
    Ok(sample.desired - state.weights.dot(&sample.input))
}

/// `sinh(η) / (cosh(η) + 1)²`, evaluated without overflow for any finite η.
///
/// Rewriting in terms of a = |η| and e⁻ᵃ,
///
/// ```text
/// sinh(a) / (cosh(a) + 1)² = 2·e⁻ᵃ·(1 − e⁻²ᵃ) / (1 + e⁻ᵃ)⁴
/// ```
///
/// keeps every intermediate in [0, 16] while the naive form overflows near
/// |η| ≈ 710. The `expm1` form of the numerator preserves relative accuracy
/// for small |η| as well. The result is odd in η and redescends: it peaks at
/// |η| ≈ 1.317 with value 1/(3√3) and decays like e⁻|η| afterwards.
fn sinh_over_cosh_plus_one_sq(eta: f64) -> f64 {
    let a = eta.abs();
    let ea = (-a).exp();
    let numerator = 2.0 * ea * (-(-2.0 * a).exp_m1());
    let denominator = (1.0 + ea).powi(4);
    (numerator / denominator).copysign(eta)
}

/// The decay kernel ψ = 1 / (2γ·[cosh(η) + 1]) with η = e / (γ·‖ω̄‖).
///
/// ψ peaks at e = 0 with value 1/(4γ), is even in e, and decays to zero as |e|
/// grows — it is the filter's error-weighting profile. Computed as
/// e⁻|η| / (γ·(1 + e⁻|η|)²) to stay finite for any error; it underflows to an
/// exact 0 only beyond |η| ≈ 745.
pub fn psi(error: f64, aug_norm: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0, "gamma must be validated by the caller");
    debug_assert!(!(aug_norm <= 0.0), "augmented norm is >= sqrt(epsilon) by construction");
    let eta = error / (gamma * aug_norm);
    let ea = (-eta.abs()).exp();
    ea / (gamma * (1.0 + ea).powi(2))
}

/// Instantaneous objective J = arctan(ψ), maximized by the filter.
///
/// The arctangent caps the objective so that its gradient — and therefore the
/// weight correction — stays bounded no matter how large the error is.
pub fn instantaneous_cost(error: f64, aug_norm: f64, gamma: f64) -> f64 {
    psi(error, aug_norm, gamma).atan()
}

/// Scalar factor multiplying the gradient direction `‖ω̄‖·x̄ + (e/‖ω̄‖)·ω`.
///
/// ```text
/// s = sinh(η) / [ 2γ²‖ω̄‖²·(cosh(η) + 1)²·(1 + ψ²) ]
/// ```
///
/// `s` carries the sign of the error, is bounded, and redescends to zero for
/// large |e|; it is the influence function of the filter in scalar form.
pub fn shape_factor(error: f64, aug_norm: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0, "gamma must be validated by the caller");
    debug_assert!(!(aug_norm <= 0.0), "augmented norm is >= sqrt(epsilon) by construction");
    let eta = error / (gamma * aug_norm);
    let p = psi(error, aug_norm, gamma);
    sinh_over_cosh_plus_one_sq(eta) / (2.0 * gamma * gamma * aug_norm * aug_norm * (1.0 + p * p))
}

/// Exact gradient of J = arctan(ψ) with respect to the weights:
///
/// ```text
/// ∇J = s · ( ‖ω̄‖·x̄ + (e / ‖ω̄‖)·ω )
/// ```
///
/// where `s` is [`shape_factor`]. Both the error and the norm dependence of η
/// on ω are accounted for, which is what distinguishes this from a plain
/// robustified LMS direction.
pub fn instantaneous_gradient(
    sample: &Sample,
    state: &FilterState,
    params: &FilterParams,
) -> Result<DVector<f64>> {
    let error = prediction_error(sample, state)?;
    let norm_sq = params.epsilon + state.weights.norm_squared();
    let norm = norm_sq.sqrt();
    let s = shape_factor(error, norm, params.gamma);
    let mut gradient = &sample.input * (s * norm);
    gradient.axpy(s * error / norm, &state.weights, 1.0);
    Ok(gradient)
}

/// One stochastic gradient-ascent step: ω ← ω + μ·∇J.
///
/// Returns [`Error::Diverged`] if any updated weight is non-finite, which can
/// only happen when the incoming state or sample already carries non-finite
/// values — the TACLDM correction itself is bounded by construction.
pub fn tacldm_update(
    sample: &Sample,
    state: &FilterState,
    params: &FilterParams,
) -> Result<FilterState> {
    let gradient = instantaneous_gradient(sample, state, params)?;
    let mut weights = state.weights.clone();
    weights.axpy(params.mu, &gradient, 1.0);
    if !weights.iter().all(|w| w.is_finite()) {
        return Err(Error::Diverged {
            iteration: state.iteration,
        });
    }
    Ok(FilterState {
        weights,
        iteration: state.iteration + 1,
    })
}
