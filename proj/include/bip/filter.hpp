#pragma once
#include "bip/model.hpp"
#include "bip/types.hpp"

namespace bip {

// Process/measurement noise. q_* apply per tick (one sample period at the
// model's sample rate by default); r_per_dof holds measurement variances.
// mahalanobis_gate > 0 rejects updates whose normalized innovation squared
// exceeds the gate (disabled by default).
struct NoiseConfig {
    double q_phase = 1e-8;
    double q_phase_vel = 5e-7;
    double q_weights = 0.0;
    Vec r_per_dof;
    double mahalanobis_gate = 0.0;

    // r defaults to (3% of each DoF's demonstrated range)^2
    static NoiseConfig defaults_for(const PriorModel& model, double r_rel = 0.03);
};

// Gaussian belief over the augmented state [phase, phase_vel, weights...].
struct FilterState {
    Vec mean;          // length B+2
    Mat cov;           // (B+2) x (B+2)
    double tick_dt = 0;    // seconds per update
    double dt_samples = 1; // sample periods per update (phase_vel is per sample)
    bool innovation_jitter_hit = false;

    double phase() const { return mean[0]; }
    double phase_vel() const { return mean[1]; }
    double var_phase() const { return cov(0, 0); }
    double var_phase_vel() const { return cov(1, 1); }
};

// Belief at tick 0; tick_dt <= 0 means one sample period.
FilterState initial_state(const PriorModel& model, double tick_dt = 0.0);

// Constant-velocity propagation of the phase pair plus process noise; weights
// carry over unchanged (their dynamics are identity).
FilterState predict(const FilterState& state, const NoiseConfig& noise);

// D x (B+2): per DoF, d(observation)/d(phase) in column 0, zero in column 1,
// the basis row in that DoF's weight block.
Mat observation_jacobian(const FilterState& state, const PriorModel& model);

// Expected observation at the state's phase (all D DoFs).
Vec predicted_observation(const FilterState& state, const PriorModel& model);

// Measurement update restricted to masked DoFs. An all-false mask returns the
// state unchanged. Covariance is re-symmetrized; phase is clamped to [0, 1.05]
// and phase velocity to >= 0.
FilterState update(const FilterState& state, const PartialObservation& obs,
                   const NoiseConfig& noise, const PriorModel& model);

// predict then update: the canonical per-tick recursion.
FilterState step(const FilterState& state, const PartialObservation& obs,
                 const NoiseConfig& noise, const PriorModel& model);

} // namespace bip
