#include "bip/response.hpp"

#include <algorithm>
#include <cmath>

namespace bip {

int default_resolution(const FilterState& state) {
    const double remaining = 1.0 - std::clamp(state.mean[0], 0.0, 1.0);
    const double vel = std::max(state.mean[1], 1e-5);
    const double k = std::ceil(remaining / vel);
    return (int)std::clamp(k, 10.0, 3000.0);
}

ResponsePlan generate_response(const FilterState& state, int resolution, const PriorModel& model,
                               long issued_at_tick) {
    if (resolution < 2) throw ConfigError("generate_response: resolution must be at least 2");
    const int d_o = model.layout.observed_count;
    const int d_c = model.layout.controlled_count;

    ResponsePlan plan;
    plan.issued_at_tick = issued_at_tick;
    const double phi0 = std::clamp(state.mean[0], 0.0, 1.0);
    plan.phases.resize(resolution);
    for (int k = 0; k < resolution; ++k)
        plan.phases[k] = phi0 + (1.0 - phi0) * (double)k / (double)(resolution - 1);

    plan.values.resize(d_c, resolution);
    for (int j = 0; j < d_c; ++j) {
        const auto& cfg = model.basis[d_o + j];
        const long off = 2 + model.block_offset(d_o + j);
        const auto wj = state.mean.segment(off, cfg.count);
        for (int k = 0; k < resolution; ++k)
            plan.values(j, k) = basis_row(plan.phases[k], cfg) * wj;
    }
    return plan;
}

SmootherState alpha_beta_step(const SmootherState& s, const Vec& target, double dt) {
    if (!(dt > 0)) throw ConfigError("alpha_beta_step: dt must be positive");
    if (!(s.alpha > 0 && s.alpha <= 1) || !(s.beta >= 0 && s.beta <= 1))
        throw ConfigError("alpha_beta_step: alpha must lie in (0,1] and beta in [0,1]");
    if (target.size() != s.position.size())
        throw DataError("alpha_beta_step: target dimension mismatch");
    SmootherState out = s;
    const Vec predicted = s.position + dt * s.velocity;
    const Vec residual = target - predicted;
    out.position = predicted + s.alpha * residual;
    out.velocity = s.velocity + (s.beta / dt) * residual;
    return out;
}

namespace {

long exact_divisor(double num, double den, const char* what) {
    if (!(num > 0) || !(den > 0)) throw ConfigError(std::string(what) + ": rates must be positive");
    const double q = num / den;
    const double r = std::round(q);
    if (r < 1 || std::abs(q - r) > 1e-9)
        throw ConfigError(std::string(what) + ": rate must divide the sample rate evenly");
    return (long)r;
}

// plan value at a given phase, linear interpolation over the plan's phase grid
Vec plan_at_phase(const ResponsePlan& plan, double phase) {
    const long K = plan.phases.size();
    const double lo = plan.phases[0], hi = plan.phases[K - 1];
    if (hi <= lo) return plan.values.col(K - 1);
    const double u = std::clamp((phase - lo) / (hi - lo), 0.0, 1.0) * (double)(K - 1);
    const long k0 = std::min((long)u, K - 2);
    const double f = u - (double)k0;
    return (1.0 - f) * plan.values.col(k0) + f * plan.values.col(k0 + 1);
}

} // namespace

LoopResult interaction_loop(const PriorModel& model, ObservationStream& stream,
                            const LoopRates& rates, const NoiseConfig& noise,
                            ControllerKind kind) {
    model.validate();
    if (rates.infer_hz > rates.sample_hz)
        throw ConfigError("interaction_loop: inference rate must not exceed the sample rate");
    const long plan_period = exact_divisor(rates.sample_hz, rates.infer_hz, "interaction_loop infer rate");
    const long emit_period = exact_divisor(rates.sample_hz, rates.exec_hz, "interaction_loop exec rate");

    const int d_o = model.layout.observed_count;
    const int d_c = model.layout.controlled_count;

    FilterState state = initial_state(model);

    // static arm: the prior-mean controlled trajectory replayed at nominal duration
    const long t_nominal = std::max<long>(2, (long)std::llround(model.mean_demo_length));
    FilterState prior_state = state;

    SmootherState smoother;
    smoother.alpha = rates.smoother_alpha;
    smoother.beta = rates.smoother_beta;
    smoother.position.resize(d_c);
    {
        ResponsePlan p0 = generate_response(prior_state, 2, model);
        smoother.position = p0.values.col(0); // controlled reconstruction at phase 0
    }
    smoother.velocity = Vec::Zero(d_c);
    const double dt_exec = 1.0 / rates.exec_hz;

    ResponsePlan plan;
    double plan_phi0 = 0.0, plan_vel = 0.0;
    bool have_plan = false;

    std::vector<Vec> observed_cols;
    std::vector<Vec> emitted_cols;
    LoopResult result;

    Vec current = smoother.position;
    long t = 0;
    while (true) {
        auto obs = stream.next();
        if (!obs) break;

        state = step(state, *obs, noise, model);
        result.phase_trace.push_back({state.phase(), state.phase_vel(), state.var_phase(), state.var_phase_vel()});

        if (kind == ControllerKind::bip && (t % plan_period == 0 || !have_plan)) {
            plan = generate_response(state, default_resolution(state), model, t);
            plan_phi0 = plan.phases[0];
            plan_vel = std::max(state.mean[1], 0.0);
            have_plan = true;
        }

        if (t % emit_period == 0) {
            Vec target;
            if (kind == ControllerKind::static_replay) {
                const double phi = phase_of(std::min(t, t_nominal - 1), t_nominal);
                target.resize(d_c);
                for (int j = 0; j < d_c; ++j) {
                    const auto& cfg = model.basis[d_o + j];
                    target[j] = basis_row(phi, cfg) * model.w0.per_dof[d_o + j];
                }
            } else {
                const double phase = std::min(plan_phi0 + plan_vel * (double)(t - plan.issued_at_tick), 1.0);
                target = plan_at_phase(plan, phase);
            }
            smoother = alpha_beta_step(smoother, target, dt_exec);
            current = smoother.position;
        }

        observed_cols.push_back(obs->values.head(d_o));
        emitted_cols.push_back(current);
        ++t;
    }

    if (t < 2) throw DataError("interaction_loop: stream ended before two ticks");

    result.executed.layout = model.layout;
    result.executed.sample_rate = rates.sample_hz;
    result.executed.executed = true;
    result.executed.data.resize(d_o + d_c, t);
    for (long k = 0; k < t; ++k) {
        result.executed.data.col(k).head(d_o) = observed_cols[k];
        result.executed.data.col(k).tail(d_c) = emitted_cols[k];
    }
    return result;
}

} // namespace bip
