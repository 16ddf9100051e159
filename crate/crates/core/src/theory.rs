//! Closed-form performance predictors for the TACLDM filter.
//!
//! Under the standard small-misalignment analysis — Gaussian regressors with
//! covariance `R`, independent input/output noise of variance `σ_i²`/`σ_o²`,
//! expansion of the update around the true weights `ω_o` — the filter's mean
//! behavior is governed by the Hessian of the expected objective at `ω_o` and
//! its fluctuation by the covariance of the gradient noise. Both have closed
//! forms built from the same "bracket" matrix
//!
//! ```text
//! B = R + σ_i²·(I − ω_o ω_oᵀ / ‖ω̄_o‖²),      ‖ω̄_o‖² = ε + ‖ω_o‖²,  ε = σ_o²/σ_i²
//! ```
//!
//! which is always positive definite because the rank-one term has spectral
//! norm strictly below one. From these come three predictions:
//!
//! * a mean-stability step bound `μ < 2/|λ_min(H)|`,
//! * a mean-square stability bound from the error-energy recursion,
//! * the steady-state mean-square deviation (MSD) `lim E‖ω − ω_o‖²`, obtained
//!   by solving a discrete Lyapunov-type system in Kronecker form.
//!
//! All predictors take a [`SystemSpec`] describing the ground truth; nothing
//! here runs a simulation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ground truth of one errors-in-variables identification problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    true_weights: DVector<f64>,
    input_covariance: DMatrix<f64>,
    input_noise_var: f64,
    output_noise_var: f64,
}

impl SystemSpec {
    /// Validates dimensions, symmetry, positive-definiteness of `R`, and
    /// positivity of both noise variances.
    pub fn new(
        true_weights: DVector<f64>,
        input_covariance: DMatrix<f64>,
        input_noise_var: f64,
        output_noise_var: f64,
    ) -> Result<Self> {
        let l = true_weights.len();
        if l == 0 {
            return Err(Error::invalid("true weights must have at least one tap"));
        }
        if !true_weights.iter().all(|w| w.is_finite()) {
            return Err(Error::invalid("true weights must be finite"));
        }
        if input_covariance.nrows() != l || input_covariance.ncols() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: input_covariance.nrows().max(input_covariance.ncols()),
            });
        }
        if !input_covariance.iter().all(|r| r.is_finite()) {
            return Err(Error::invalid("input covariance must be finite"));
        }
        let scale = input_covariance.amax().max(1.0);
        for i in 0..l {
            for j in (i + 1)..l {
                if (input_covariance[(i, j)] - input_covariance[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::invalid(format!(
                        "input covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let min_eig = symmetric_eigenvalues(&input_covariance)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(Error::invalid(format!(
                "input covariance must be positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        for (name, value) in [
            ("input noise variance", input_noise_var),
            ("output noise variance", output_noise_var),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(SystemSpec {
            true_weights,
            input_covariance,
            input_noise_var,
            output_noise_var,
        })
    }

    pub fn true_weights(&self) -> &DVector<f64> {
        &self.true_weights
    }

    pub fn input_covariance(&self) -> &DMatrix<f64> {
        &self.input_covariance
    }

    pub fn input_noise_var(&self) -> f64 {
        self.input_noise_var
    }

    pub fn output_noise_var(&self) -> f64 {
        self.output_noise_var
    }

    /// Filter length L.
    pub fn len(&self) -> usize {
        self.true_weights.len()
    }

    /// Never true; a spec always has at least one tap.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Noise-variance ratio ε = σ_o² / σ_i².
    pub fn epsilon(&self) -> f64 {
        self.output_noise_var / self.input_noise_var
    }

    /// ‖ω̄_o‖² = ε + ‖ω_o‖² for the augmented true weights.
    pub fn aug_norm_sq(&self) -> f64 {
        self.epsilon() + self.true_weights.norm_squared()
    }

    /// Average per-tap input power σ_x² = tr(R)/L.
    pub fn mean_input_var(&self) -> f64 {
        self.input_covariance.trace() / self.len() as f64
    }
}

/// Mean and mean-square step-size limits, and their minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBounds {
    pub mean_bound: f64,
    pub msq_bound: f64,
    pub combined: f64,
}

impl StabilityBounds {
    /// Combines two individual bounds; `combined` is their minimum.
    pub fn new(mean_bound: f64, msq_bound: f64) -> Self {
        StabilityBounds {
            mean_bound,
            msq_bound,
            combined: mean_bound.min(msq_bound),
        }
    }
}

/// Everything the steady-state analysis produces for one (spec, γ, μ).
#[derive(Debug, Clone, PartialEq)]
pub struct MsdPrediction {
    /// Hessian H of the expected objective at ω_o (negative definite).
    pub hessian: DMatrix<f64>,
    /// Gradient-noise covariance M (positive definite).
    pub grad_noise_cov: DMatrix<f64>,
    /// Transition matrix F = (I + μH) ⊗ (I + μH) of the weighted-energy recursion.
    pub transition: DMatrix<f64>,
    /// Solution q of (I − F)·q = vec(I); the steady-state weighting vector.
    pub weighting: DVector<f64>,
    /// Predicted steady-state mean-square deviation E‖ω − ω_o‖².
    pub msd: f64,
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::invalid(format!(
            "gamma must be finite and > 0, got {gamma}"
        )));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix (unordered).
fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().symmetric_eigen().eigenvalues
}

/// The bracket matrix B = R + σ_i²·(I − ω_o ω_oᵀ/‖ω̄_o‖²) shared by H and M.
fn bracket_matrix(spec: &SystemSpec) -> DMatrix<f64> {
    let l = spec.len();
    let si2 = spec.input_noise_var;
    let aug = spec.aug_norm_sq();
    let mut b = spec.input_covariance.clone();
    for i in 0..l {
        b[(i, i)] += si2;
    }
    let w = &spec.true_weights;
    for i in 0..l {
        for j in 0..l {
            b[(i, j)] -= si2 * w[i] * w[j] / aug;
        }
    }
    b
}

/// The γ-dependent factor (1 + 1/(16γ²))² common to several scales.
fn psi_peak_correction(gamma: f64) -> f64 {
    let t = 1.0 + 1.0 / (16.0 * gamma * gamma);
    t * t
}

/// Hessian of the expected objective at the true weights:
///
/// ```text
/// H = c·B,   c = −(16γ⁴ + γ² + σ_i²) / (128·γ⁷·‖ω̄_o‖²·(1 + 1/(16γ²))²)
/// ```
///
/// `H` is symmetric negative definite, which is what makes ω_o a maximizer of
/// the expected objective and gradient ascent locally stable.
pub fn hessian_at_optimum(spec: &SystemSpec, gamma: f64) -> Result<DMatrix<f64>> {
    validate_gamma(gamma)?;
    let si2 = spec.input_noise_var;
    let g2 = gamma * gamma;
    let g4 = g2 * g2;
    let g7 = g4 * g2 * gamma;
    let c = -(16.0 * g4 + g2 + si2)
        / (128.0 * g7 * spec.aug_norm_sq() * psi_peak_correction(gamma));
    Ok(bracket_matrix(spec) * c)
}

/// Largest step size keeping the mean weight-error recursion stable:
///
/// ```text
/// μ_mean = 256·γ⁷·‖ω̄_o‖²·(1 + 1/(16γ²))² / [ (16γ⁴ + γ² + σ_i²)·λ_max(B) ]
/// ```
///
/// which equals 2/|λ_min(H)| — the classical condition |1 + μλ| < 1 applied
/// to the most negative Hessian eigenvalue.
pub fn mean_step_bound(spec: &SystemSpec, gamma: f64) -> Result<f64> {
    validate_gamma(gamma)?;
    let si2 = spec.input_noise_var;
    let g2 = gamma * gamma;
    let g4 = g2 * g2;
    let g7 = g4 * g2 * gamma;
    let lambda_max = symmetric_eigenvalues(&bracket_matrix(spec))
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(256.0 * g7 * spec.aug_norm_sq() * psi_peak_correction(gamma)
        / ((16.0 * g4 + g2 + si2) * lambda_max))
}

/// Largest step size keeping the mean-square error-energy recursion stable:
///
/// ```text
/// μ_msq = 16·γ³·‖ω̄_o‖⁴ / ( L·σ_x²·‖ω̄_o‖² + σ_o² + ω_oᵀω_o·(L − 1)·σ_i² )
/// ```
///
/// `input_var` is the average per-tap input power σ_x² = tr(R)/L, passed
/// explicitly together with the filter length so the caller states the input
/// model it believes in (see [`SystemSpec::mean_input_var`]).
pub fn msq_step_bound(spec: &SystemSpec, gamma: f64, input_var: f64, l: usize) -> Result<f64> {
    validate_gamma(gamma)?;
    if !input_var.is_finite() || input_var <= 0.0 {
        return Err(Error::invalid(format!(
            "input variance must be finite and > 0, got {input_var}"
        )));
    }
    if l == 0 {
        return Err(Error::invalid("filter length must be >= 1"));
    }
    let aug = spec.aug_norm_sq();
    let g3 = gamma * gamma * gamma;
    let numerator = 16.0 * g3 * aug * aug;
    let denominator = l as f64 * input_var * aug
        + spec.output_noise_var
        + spec.true_weights.norm_squared() * (l as f64 - 1.0) * spec.input_noise_var;
    Ok(numerator / denominator)
}

/// Both step-size limits and their minimum; stability requires μ below
/// `combined`.
pub fn combined_step_bound(
    spec: &SystemSpec,
    gamma: f64,
    input_var: f64,
    l: usize,
) -> Result<StabilityBounds> {
    let mean = mean_step_bound(spec, gamma)?;
    let msq = msq_step_bound(spec, gamma, input_var, l)?;
    Ok(StabilityBounds::new(mean, msq))
}

/// Covariance of the instantaneous gradient evaluated at the true weights:
///
/// ```text
/// M = σ_i² / (64·γ⁶·‖ω̄_o‖²·(1 + 1/(16γ²))²) · B
/// ```
///
/// A positive multiple of the same bracket matrix as the Hessian, hence
/// symmetric positive definite.
pub fn gradient_noise_covariance(spec: &SystemSpec, gamma: f64) -> Result<DMatrix<f64>> {
    validate_gamma(gamma)?;
    let g2 = gamma * gamma;
    let g6 = g2 * g2 * g2;
    let s = spec.input_noise_var
        / (64.0 * g6 * spec.aug_norm_sq() * psi_peak_correction(gamma));
    Ok(bracket_matrix(spec) * s)
}

/// Steady-state mean-square deviation of the filter for step size μ.
///
/// Builds the weighted-energy transition `F = (I + μH) ⊗ (I + μH)`, solves
/// `(I − F)·q = vec(I)`, and returns `msd = μ²·vec(M)ᵀ·q`. Valid for μ below
/// the combined stability bound; at or beyond the boundary the linear system
/// is singular (or produces a non-positive energy) and the call fails with
/// [`Error::StabilityBoundary`].
///
/// The dense Kronecker solve is limited to L ≤ 64 (L² ≤ 4096 unknowns).
pub fn steady_state_msd(spec: &SystemSpec, gamma: f64, mu: f64) -> Result<MsdPrediction> {
    validate_gamma(gamma)?;
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::invalid(format!("mu must be finite and > 0, got {mu}")));
    }
    let l = spec.len();
    if l * l > 4096 {
        return Err(Error::invalid(format!(
            "filter length {l} too large for the dense steady-state solve (need L <= 64)"
        )));
    }
    let hessian = hessian_at_optimum(spec, gamma)?;
    let grad_noise_cov = gradient_noise_covariance(spec, gamma)?;

    let mut a = hessian.clone() * mu;
    for i in 0..l {
        a[(i, i)] += 1.0;
    }
    // The steady state exists iff I + μH is a contraction; at or beyond the
    // mean bound the Neumann series for (I − F)⁻¹ diverges even though a
    // backward-stable LU may still "solve" the near-singular system.
    let rho = symmetric_eigenvalues(&a)
        .iter()
        .map(|e| e.abs())
        .fold(0.0f64, f64::max);
    if rho >= 1.0 - 1e-12 {
        return Err(Error::StabilityBoundary {
            mu,
            detail: format!(
                "spectral radius of I + mu*H is {rho:.6}; no steady state exists"
            ),
        });
    }
    let transition = a.kronecker(&a);
    let identity_vec = DVector::from_column_slice(DMatrix::<f64>::identity(l, l).as_slice());
    let system = DMatrix::<f64>::identity(l * l, l * l) - &transition;
    let weighting = system.clone().lu().solve(&identity_vec).ok_or_else(|| {
        Error::StabilityBoundary {
            mu,
            detail: "the steady-state system (I - F) q = vec(I) is singular".into(),
        }
    })?;
    // An ill-conditioned (near-boundary) solve can "succeed" with garbage;
    // reject anything whose residual is far above round-off.
    let residual = (&system * &weighting - &identity_vec).norm();
    if !residual.is_finite() || residual > 1e-8 * (1.0 + weighting.norm()) {
        return Err(Error::StabilityBoundary {
            mu,
            detail: format!("steady-state solve residual {residual:.3e} indicates instability"),
        });
    }
    let m_vec = DVector::from_column_slice(grad_noise_cov.as_slice());
    let msd = mu * mu * m_vec.dot(&weighting);
    if !msd.is_finite() || msd <= 0.0 {
        return Err(Error::StabilityBoundary {
            mu,
            detail: format!("predicted steady-state energy {msd:.3e} is not positive"),
        });
    }
    Ok(MsdPrediction {
        hessian,
        grad_noise_cov,
        transition,
        weighting,
        msd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec_zero_weights() -> SystemSpec {
        // ω_o = 0 (L = 2), R = I, σ_i² = σ_o² = 0.1 (so ε = 1).
        SystemSpec::new(
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            0.1,
            0.1,
        )
        .unwrap()
    }

    fn spec_two_tap() -> SystemSpec {
        // ω_o = [−0.6, 0.8] (unit norm), R = I, σ_i² = σ_o² = 0.1.
        SystemSpec::new(
            DVector::from_vec(vec![-0.6, 0.8]),
            DMatrix::identity(2, 2),
            0.1,
            0.1,
        )
        .unwrap()
    }

    /// Uniformly random valid spec: R = AᵀA + 0.1·I, small random weights.
    fn random_spec(rng: &mut ChaCha8Rng) -> SystemSpec {
        let l = rng.random_range(1..=6);
        let a = DMatrix::from_fn(l, l, |_, _| rng.random_range(-1.0..1.0));
        let r = a.transpose() * &a + DMatrix::identity(l, l) * 0.1;
        let w = DVector::from_fn(l, |_, _| rng.random_range(-1.0..1.0));
        SystemSpec::new(
            w,
            r,
            rng.random_range(0.01..1.0),
            rng.random_range(0.01..1.0),
        )
        .unwrap()
    }

    /// Plain-loop transcription of the Hessian formula; independent of the
    /// nalgebra evaluation path used by the library.
    fn hessian_oracle(spec: &SystemSpec, gamma: f64) -> Vec<Vec<f64>> {
        let l = spec.len();
        let w = spec.true_weights();
        let si2 = spec.input_noise_var();
        let aug: f64 = spec.output_noise_var() / si2
            + (0..l).map(|i| w[i] * w[i]).sum::<f64>();
        let corr = (1.0 + 1.0 / (16.0 * gamma * gamma)).powi(2);
        let c = -(16.0 * gamma.powi(4) + gamma.powi(2) + si2)
            / (128.0 * gamma.powi(7) * aug * corr);
        let mut h = vec![vec![0.0; l]; l];
        for i in 0..l {
            for j in 0..l {
                let delta = if i == j { 1.0 } else { 0.0 };
                h[i][j] = c
                    * (spec.input_covariance()[(i, j)] + si2 * delta - si2 * w[i] * w[j] / aug);
            }
        }
        h
    }

    /// Same for the gradient-noise covariance.
    fn grad_noise_oracle(spec: &SystemSpec, gamma: f64) -> Vec<Vec<f64>> {
        let l = spec.len();
        let w = spec.true_weights();
        let si2 = spec.input_noise_var();
        let aug: f64 = spec.output_noise_var() / si2
            + (0..l).map(|i| w[i] * w[i]).sum::<f64>();
        let corr = (1.0 + 1.0 / (16.0 * gamma * gamma)).powi(2);
        let s = si2 / (64.0 * gamma.powi(6) * aug * corr);
        let mut m = vec![vec![0.0; l]; l];
        for i in 0..l {
            for j in 0..l {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[i][j] = s
                    * (spec.input_covariance()[(i, j)] + si2 * delta - si2 * w[i] * w[j] / aug);
            }
        }
        m
    }

    #[test]
    fn hessian_isotropic_case_matches_hand_value() {
        let h = hessian_at_optimum(&spec_zero_weights(), 1.0).unwrap();
        // c = −17.1/144.5 applied to 1.1·I.
        assert_relative_eq!(h[(0, 0)], -0.13017301038062283737, max_relative = 1e-13);
        assert_relative_eq!(h[(1, 1)], -0.13017301038062283737, max_relative = 1e-13);
        assert_eq!(h[(0, 1)], 0.0);
        assert_eq!(h[(1, 0)], 0.0);
    }

    #[test]
    fn hessian_matches_duplicate_arithmetic_oracle() {
        let spec = spec_two_tap();
        let h = hessian_at_optimum(&spec, 1.4).unwrap();
        let oracle = hessian_oracle(&spec, 1.4);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(h[(i, j)], oracle[i][j], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn hessian_is_negative_definite_on_random_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let spec = random_spec(&mut rng);
            let gamma = rng.random_range(0.2..4.0);
            let h = hessian_at_optimum(&spec, gamma).unwrap();
            let max_eig = symmetric_eigenvalues(&h)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max_eig < 0.0, "H not negative definite: λ_max = {max_eig}");
        }
    }

    #[test]
    fn bracket_matrix_is_positive_definite_on_random_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let spec = random_spec(&mut rng);
            let b = bracket_matrix(&spec);
            let min_eig = symmetric_eigenvalues(&b)
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig > 0.0, "bracket not PD: λ_min = {min_eig}");
        }
    }

    #[test]
    fn mean_bound_matches_hand_value() {
        let bound = mean_step_bound(&spec_zero_weights(), 1.0).unwrap();
        assert_relative_eq!(bound, 289.0 / 18.81, max_relative = 1e-12);
    }

    #[test]
    fn mean_bound_halves_when_input_power_dominates_and_doubles() {
        // With σ_i² tiny the bracket is R + o(1), so scaling R by 2 halves the
        // bound up to that o(1).
        let w = DVector::zeros(3);
        let base = SystemSpec::new(w.clone(), DMatrix::identity(3, 3), 1e-12, 1e-12).unwrap();
        let doubled =
            SystemSpec::new(w, DMatrix::identity(3, 3) * 2.0, 1e-12, 1e-12).unwrap();
        let b1 = mean_step_bound(&base, 0.8).unwrap();
        let b2 = mean_step_bound(&doubled, 0.8).unwrap();
        assert_relative_eq!(b2, b1 / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn mean_bound_is_two_over_most_negative_hessian_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let spec = random_spec(&mut rng);
            let gamma = rng.random_range(0.2..4.0);
            let bound = mean_step_bound(&spec, gamma).unwrap();
            let h = hessian_at_optimum(&spec, gamma).unwrap();
            let min_eig = symmetric_eigenvalues(&h)
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(bound * min_eig.abs(), 2.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn msq_bound_matches_hand_values() {
        // ω_o = 0 (nine taps), ε = 1, γ = 1, σ_x² = 1, σ_o² = 0.1 → 16/9.1.
        let spec9 = SystemSpec::new(
            DVector::zeros(9),
            DMatrix::identity(9, 9),
            0.1,
            0.1,
        )
        .unwrap();
        let bound = msq_step_bound(&spec9, 1.0, 1.0, 9).unwrap();
        assert_relative_eq!(bound, 16.0 / 9.1, max_relative = 1e-12);

        // Unit-norm two-tap case → 64/4.2.
        let bound = msq_step_bound(&spec_two_tap(), 1.0, 1.0, 2).unwrap();
        assert_relative_eq!(bound, 64.0 / 4.2, max_relative = 1e-12);
    }

    #[test]
    fn msq_bound_scales_cubically_in_gamma() {
        let spec = spec_two_tap();
        let b1 = msq_step_bound(&spec, 1.0, 1.0, 2).unwrap();
        let b2 = msq_step_bound(&spec, 2.0, 1.0, 2).unwrap();
        assert_relative_eq!(b2, 8.0 * b1, max_relative = 1e-12);
    }

    #[test]
    fn combined_bound_is_the_minimum() {
        let spec9 = SystemSpec::new(
            DVector::zeros(9),
            DMatrix::identity(9, 9),
            0.1,
            0.1,
        )
        .unwrap();
        let bounds = combined_step_bound(&spec9, 1.0, 1.0, 9).unwrap();
        assert_relative_eq!(bounds.combined, 16.0 / 9.1, max_relative = 1e-12);
        assert!(bounds.combined <= bounds.mean_bound);
        assert!(bounds.combined <= bounds.msq_bound);

        // Equal inputs collapse to either.
        let equal = StabilityBounds::new(0.37, 0.37);
        assert_eq!(equal.combined, 0.37);

        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let spec = random_spec(&mut rng);
            let gamma = rng.random_range(0.2..4.0);
            let b = combined_step_bound(&spec, gamma, spec.mean_input_var(), spec.len()).unwrap();
            assert!(b.combined <= b.mean_bound && b.combined <= b.msq_bound);
            assert!(b.combined > 0.0);
        }
    }

    #[test]
    fn grad_noise_cov_is_scalar_multiple_of_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let spec = random_spec(&mut rng);
            let gamma = rng.random_range(0.2..4.0);
            let h = hessian_at_optimum(&spec, gamma).unwrap();
            let m = gradient_noise_covariance(&spec, gamma).unwrap();
            let p = &m * h.try_inverse().expect("H is invertible");
            let scalar = p[(0, 0)];
            for i in 0..spec.len() {
                for j in 0..spec.len() {
                    let expected = if i == j { scalar } else { 0.0 };
                    assert!(
                        (p[(i, j)] - expected).abs() <= 1e-10 * scalar.abs().max(1.0),
                        "M·H⁻¹ not scalar·I at ({i}, {j}): {} vs {expected}",
                        p[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn grad_noise_cov_is_isotropic_for_zero_weights_identity_input() {
        let m = gradient_noise_covariance(&spec_zero_weights(), 1.0).unwrap();
        assert_relative_eq!(m[(0, 0)], m[(1, 1)], max_relative = 1e-14);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn grad_noise_cov_matches_duplicate_arithmetic_oracle() {
        // Desk configuration: nine taps, R = I, σ² = 0.1, γ = 1.4, unit ω_o.
        let mut w = DVector::zeros(9);
        w[0] = 1.0;
        let spec = SystemSpec::new(w, DMatrix::identity(9, 9), 0.1, 0.1).unwrap();
        let m = gradient_noise_covariance(&spec, 1.4).unwrap();
        let oracle = grad_noise_oracle(&spec, 1.4);
        for i in 0..9 {
            for j in 0..9 {
                if oracle[i][j] == 0.0 {
                    assert_eq!(m[(i, j)], 0.0);
                } else {
                    assert_relative_eq!(m[(i, j)], oracle[i][j], max_relative = 1e-12);
                }
            }
        }
        // The scalar prefactor itself, frozen from 50-digit arithmetic
        // (‖ω̄_o‖² = 2): M[1][1] = prefactor · (R[1][1] + σ_i²).
        assert_relative_eq!(
            m[(1, 1)],
            9.7444402823124938e-5 * 1.1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn msd_is_linear_in_mu_for_small_steps() {
        let spec = spec_two_tap();
        let r4 = steady_state_msd(&spec, 1.0, 1e-4).unwrap().msd / 1e-4;
        let r5 = steady_state_msd(&spec, 1.0, 1e-5).unwrap().msd / 1e-5;
        assert_relative_eq!(r4, r5, max_relative = 5e-3);
    }

    #[test]
    fn msd_matches_scalar_closed_form_for_single_tap() {
        let spec = SystemSpec::new(
            DVector::from_vec(vec![0.5]),
            DMatrix::from_vec(1, 1, vec![2.0]),
            0.2,
            0.3,
        )
        .unwrap();
        let (gamma, mu) = (0.9, 0.05);
        let prediction = steady_state_msd(&spec, gamma, mu).unwrap();
        let h = hessian_at_optimum(&spec, gamma).unwrap()[(0, 0)];
        let m = gradient_noise_covariance(&spec, gamma).unwrap()[(0, 0)];
        let scalar = mu * mu * m / (1.0 - (1.0 + mu * h).powi(2));
        assert_relative_eq!(prediction.msd, scalar, max_relative = 1e-10);
    }

    #[test]
    fn msd_solve_satisfies_its_linear_system() {
        let spec = spec_two_tap();
        let prediction = steady_state_msd(&spec, 1.4, 0.05).unwrap();
        let l2 = spec.len() * spec.len();
        let system = DMatrix::<f64>::identity(l2, l2) - &prediction.transition;
        let identity_vec =
            DVector::from_column_slice(DMatrix::<f64>::identity(spec.len(), spec.len()).as_slice());
        let residual = (&system * &prediction.weighting - identity_vec).norm();
        assert!(residual < 1e-8, "residual = {residual}");
        assert!(prediction.msd > 0.0);
    }

    #[test]
    fn msd_fails_at_the_stability_boundary() {
        let spec = spec_two_tap();
        let mean = mean_step_bound(&spec, 1.0).unwrap();
        match steady_state_msd(&spec, 1.0, mean) {
            Err(Error::StabilityBoundary { .. }) => {}
            other => panic!("expected stability-boundary error, got {other:?}"),
        }
    }

    #[test]
    fn transition_is_contractive_below_the_mean_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..50 {
            let spec = random_spec(&mut rng);
            let gamma = rng.random_range(0.2..4.0);
            let mu = 0.99 * mean_step_bound(&spec, gamma).unwrap();
            let h = hessian_at_optimum(&spec, gamma).unwrap();
            let a = DMatrix::identity(spec.len(), spec.len()) + h * mu;
            let rho = symmetric_eigenvalues(&a)
                .iter()
                .map(|e| e.abs())
                .fold(0.0f64, f64::max);
            assert!(rho < 1.0, "spectral radius {rho} >= 1 below the mean bound");
        }
    }

    #[test]
    fn spec_validation_rejects_bad_inputs() {
        let w = DVector::from_vec(vec![0.1, 0.2]);
        let id = DMatrix::identity(2, 2);
        // Wrong covariance size.
        assert!(SystemSpec::new(w.clone(), DMatrix::identity(3, 3), 0.1, 0.1).is_err());
        // Asymmetric.
        let mut asym = id.clone();
        asym[(0, 1)] = 0.4;
        assert!(SystemSpec::new(w.clone(), asym, 0.1, 0.1).is_err());
        // Indefinite.
        let indef = DMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, -1.0]);
        assert!(SystemSpec::new(w.clone(), indef, 0.1, 0.1).is_err());
        // Bad variances.
        assert!(SystemSpec::new(w.clone(), id.clone(), 0.0, 0.1).is_err());
        assert!(SystemSpec::new(w.clone(), id.clone(), 0.1, -0.1).is_err());
        // Empty or non-finite weights.
        assert!(SystemSpec::new(DVector::zeros(0), DMatrix::identity(0, 0), 0.1, 0.1).is_err());
        assert!(SystemSpec::new(
            DVector::from_vec(vec![f64::NAN, 0.0]),
            id,
            0.1,
            0.1
        )
        .is_err());
    }

    #[test]
    fn spec_accessors_expose_derived_quantities() {
        let spec = spec_two_tap();
        assert_eq!(spec.len(), 2);
        assert_relative_eq!(spec.epsilon(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(spec.aug_norm_sq(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(spec.mean_input_var(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn msd_rejects_oversized_systems() {
        let l = 65;
        let spec = SystemSpec::new(
            DVector::zeros(l),
            DMatrix::identity(l, l),
            0.1,
            0.1,
        )
        .unwrap();
        assert!(steady_state_msd(&spec, 1.0, 0.01).is_err());
    }
}
