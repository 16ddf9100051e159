//! Reference adaptive filters for comparison curves.
//!
//! Two standard baselines bracket the TACLDM filter's behavior:
//!
//! * **LMS** — plain stochastic gradient on the squared error. Fast, but its
//!   update is linear in the error, so a single impulsive sample can move the
//!   weights arbitrarily far, and errors-in-variables input noise biases it.
//! * **GDTLS** — gradient descent on the total-least-squares objective
//!   `e² / (2‖ω̄‖²)`. Unbiased under balanced EIV noise, but still quadratic
//!   in the error and therefore just as outlier-sensitive as LMS.
//!
//! Both share [`FilterState`]/[`Sample`] with the core filter so one Monte
//! Carlo realization can drive all algorithms in lockstep.

use crate::error::{Error, Result};
use crate::filter::{prediction_error, tacldm_update, FilterParams, FilterState, Sample};

/// One LMS step: ω ← ω + μ·e·x̄.
///
/// `mu` may be zero (a frozen filter); it must be finite and non-negative.
/// Unlike TACLDM, the correction is unbounded in the error, so LMS genuinely
/// can reach non-finite weights — that surfaces as [`Error::Diverged`].
pub fn lms_update(sample: &Sample, state: &FilterState, mu: f64) -> Result<FilterState> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::invalid(format!(
            "mu must be finite and >= 0, got {mu}"
        )));
    }
    let error = prediction_error(sample, state)?;
    let mut weights = state.weights.clone();
    weights.axpy(mu * error, &sample.input, 1.0);
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

/// One GDTLS step: ω ← ω + μ·(e·x̄ + e²·ω/‖ω̄‖²)/‖ω̄‖².
///
/// This is exactly −μ·∇ of the TLS objective e²/(2‖ω̄‖²) with
/// ‖ω̄‖² = ε + ‖ω‖²; `params.gamma` is unused.
pub fn gdtls_update(
    sample: &Sample,
    state: &FilterState,
    params: &FilterParams,
) -> Result<FilterState> {
    let error = prediction_error(sample, state)?;
    let norm_sq = params.epsilon + state.weights.norm_squared();
    let mut weights = state.weights.clone();
    weights.axpy(params.mu * error / norm_sq, &sample.input, 1.0);
    weights.axpy(
        params.mu * error * error / (norm_sq * norm_sq),
        &state.weights,
        1.0,
    );
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

/// The algorithms selectable by name in scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Tacldm,
    Lms,
    Gdtls,
}

impl AlgorithmKind {
    /// Parses the config-file name ("tacldm" | "lms" | "gdtls").
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "tacldm" => Ok(AlgorithmKind::Tacldm),
            "lms" => Ok(AlgorithmKind::Lms),
            "gdtls" => Ok(AlgorithmKind::Gdtls),
            other => Err(Error::invalid(format!(
                "unknown algorithm '{other}' (expected tacldm, lms, or gdtls)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Tacldm => "tacldm",
            AlgorithmKind::Lms => "lms",
            AlgorithmKind::Gdtls => "gdtls",
        }
    }

    /// Applies one adaptation step of this algorithm.
    ///
    /// LMS reads only `params.mu`; GDTLS reads `mu` and `epsilon`; TACLDM
    /// reads all three fields.
    pub fn step(
        self,
        sample: &Sample,
        state: &FilterState,
        params: &FilterParams,
    ) -> Result<FilterState> {
        match self {
            AlgorithmKind::Tacldm => tacldm_update(sample, state, params),
            AlgorithmKind::Lms => lms_update(sample, state, params.mu),
            AlgorithmKind::Gdtls => gdtls_update(sample, state, params),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn tls_cost(weights: &DVector<f64>, sample: &Sample, epsilon: f64) -> f64 {
        let e = sample.desired - weights.dot(&sample.input);
        e * e / (2.0 * (epsilon + weights.norm_squared()))
    }

    #[test]
    fn lms_hand_case() {
        let state = FilterState::zeros(2);
        let sample = Sample::new(DVector::from_vec(vec![1.0, 0.0]), 1.0);
        let next = lms_update(&sample, &state, 0.5).unwrap();
        assert_eq!(next.weights.as_slice(), &[0.5, 0.0]);
        assert_eq!(next.iteration, 1);
    }

    #[test]
    fn both_baselines_are_fixed_at_zero_error() {
        let state = FilterState::from_weights(DVector::from_vec(vec![1.0, 1.0]));
        let sample = Sample::new(DVector::from_vec(vec![0.5, 0.5]), 1.0);
        let params = FilterParams::new(0.3, 1.0, 1.0).unwrap();
        assert_eq!(lms_update(&sample, &state, 0.3).unwrap().weights, state.weights);
        assert_eq!(gdtls_update(&sample, &state, &params).unwrap().weights, state.weights);
    }

    #[test]
    fn zero_step_leaves_weights_unchanged() {
        let state = FilterState::from_weights(DVector::from_vec(vec![0.2, -0.4]));
        let sample = Sample::new(DVector::from_vec(vec![1.0, 2.0]), 3.0);
        assert_eq!(lms_update(&sample, &state, 0.0).unwrap().weights, state.weights);
        assert!(lms_update(&sample, &state, -0.1).is_err());
        assert!(lms_update(&sample, &state, f64::NAN).is_err());
    }

    #[test]
    fn lms_diverges_for_oversized_steps() {
        // e(k+1) = (1 − μ‖x‖²)·e(k); with μ‖x‖² = 10 the error grows ninefold
        // per step and the weights must hit infinity in finite time.
        let mut state = FilterState::zeros(1);
        let sample = Sample::new(DVector::from_vec(vec![1.0]), 1.0);
        let mut diverged = false;
        for _ in 0..500 {
            match lms_update(&sample, &state, 10.0) {
                Ok(next) => state = next,
                Err(Error::Diverged { .. }) => {
                    diverged = true;
                    break;
                }
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
        assert!(diverged, "LMS failed to diverge under a 10x-overcritical step");
    }

    #[test]
    fn gdtls_direction_vanishes_for_huge_epsilon() {
        let state = FilterState::from_weights(DVector::from_vec(vec![0.5, -0.5]));
        let sample = Sample::new(DVector::from_vec(vec![1.0, 2.0]), 3.0);
        let params = FilterParams::new(1.0, 1.0, 1e12).unwrap();
        let next = gdtls_update(&sample, &state, &params).unwrap();
        assert!((next.weights - &state.weights).norm() < 1e-10);
    }

    #[test]
    fn gdtls_is_negative_gradient_of_the_tls_objective() {
        // Central finite differences of e²/(2‖ω̄‖²) on a spread of points.
        let cases = [
            (vec![0.0, 0.0], vec![1.0, -0.5], 0.8, 1.0),
            (vec![-0.6, 0.8], vec![0.3, 0.9], -1.2, 0.25),
            (vec![2.0, -1.0, 0.5], vec![0.1, 0.2, -0.4], 2.5, 4.0),
            (vec![0.1], vec![-1.5], 0.3, 0.5),
        ];
        let h = 1e-6;
        for (w, x, d, epsilon) in cases {
            let state = FilterState::from_weights(DVector::from_vec(w));
            let sample = Sample::new(DVector::from_vec(x), d);
            let params = FilterParams::new(1.0, 1.0, epsilon).unwrap();
            let next = gdtls_update(&sample, &state, &params).unwrap();
            let direction = next.weights - &state.weights;
            for i in 0..state.weights.len() {
                let mut plus = state.weights.clone();
                let mut minus = state.weights.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (tls_cost(&plus, &sample, epsilon) - tls_cost(&minus, &sample, epsilon))
                    / (2.0 * h);
                assert_relative_eq!(direction[i], -fd, max_relative = 1e-5, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn algorithm_kind_round_trips_names() {
        for kind in [AlgorithmKind::Tacldm, AlgorithmKind::Lms, AlgorithmKind::Gdtls] {
            assert_eq!(AlgorithmKind::from_name(kind.name()).unwrap(), kind);
        }
        assert!(AlgorithmKind::from_name("rls").is_err());
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let state = FilterState::from_weights(DVector::from_vec(vec![0.3, -0.1]));
        let sample = Sample::new(DVector::from_vec(vec![0.9, 0.4]), 1.1);
        let params = FilterParams::new(0.2, 0.9, 1.0).unwrap();
        assert_eq!(
            AlgorithmKind::Lms.step(&sample, &state, &params).unwrap(),
            lms_update(&sample, &state, params.mu).unwrap()
        );
        assert_eq!(
            AlgorithmKind::Gdtls.step(&sample, &state, &params).unwrap(),
            gdtls_update(&sample, &state, &params).unwrap()
        );
        assert_eq!(
            AlgorithmKind::Tacldm.step(&sample, &state, &params).unwrap(),
            tacldm_update(&sample, &state, &params).unwrap()
        );
    }
}
