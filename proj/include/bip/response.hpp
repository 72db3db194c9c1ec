#pragma once
#include <array>
#include <optional>
#include <vector>

#include "bip/filter.hpp"
#include "bip/model.hpp"
#include "bip/types.hpp"

namespace bip {

// Remaining controlled-DoF trajectory from the current phase estimate to the
// end of the interaction, sampled at K phases.
struct ResponsePlan {
    Vec phases;   // K entries from clamp(phase,0,1) to 1 (all 1 when already done)
    Mat values;   // controlled_count x K
    long issued_at_tick = 0;
};

// Fixed-gain position/velocity tracker used to blend consecutive plans.
struct SmootherState {
    Vec position;
    Vec velocity;
    double alpha = 0.5;
    double beta = 0.05;
};

// Remaining samples implied by the current estimate, clamped to [10, 3000].
int default_resolution(const FilterState& state);

ResponsePlan generate_response(const FilterState& state, int resolution, const PriorModel& model,
                               long issued_at_tick = 0);

SmootherState alpha_beta_step(const SmootherState& s, const Vec& target, double dt);

struct LoopRates {
    double sample_hz = 30.0;       // filter tick rate
    double infer_hz = 3.0;         // plan regeneration rate
    double exec_hz = 10.0;         // setpoint emission rate
    double smoother_alpha = 0.5;   // setpoint tracker gains
    double smoother_beta = 0.05;
};

class ObservationStream {
public:
    virtual ~ObservationStream() = default;
    virtual std::optional<PartialObservation> next() = 0;
};

// Replays a recorded interaction, masking so only observed DoFs are measured.
class ReplayStream : public ObservationStream {
public:
    explicit ReplayStream(const Interaction& ix) : ix_(ix) {}
    std::optional<PartialObservation> next() override {
        if (t_ >= ix_.samples()) return std::nullopt;
        return PartialObservation::observed_only(ix_.data.col(t_++), ix_.layout);
    }

private:
    const Interaction& ix_;
    long t_ = 0;
};

enum class ControllerKind {
    bip,           // plans regenerated from the filter estimate
    static_replay, // fixed nominal plan, ignores the filter
};

struct LoopResult {
    Interaction executed; // observed inputs + emitted setpoints, executed=true
    std::vector<std::array<double, 4>> phase_trace; // per tick: phase, phase_vel, var_phase, var_phase_vel
};

// Tick-driven runtime: filter at sample_hz, replan at infer_hz, emit smoothed
// setpoints at exec_hz (zero-order hold in between). Rates must divide evenly.
LoopResult interaction_loop(const PriorModel& model, ObservationStream& stream,
                            const LoopRates& rates, const NoiseConfig& noise,
                            ControllerKind kind = ControllerKind::bip);

} // namespace bip
