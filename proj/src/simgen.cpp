#include "bip/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bip/rng.hpp"

namespace bip {

double min_jerk(double u) {
    u = std::clamp(u, 0.0, 1.0);
    const double u3 = u * u * u;
    return 10.0 * u3 - 15.0 * u3 * u + 6.0 * u3 * u * u;
}

DofLayout default_layout(int observed, int controlled) {
    DofLayout layout;
    layout.observed_count = observed;
    layout.controlled_count = controlled;
    for (int i = 0; i < observed; ++i) {
        layout.names.push_back("hand_" + std::to_string(i));
        layout.units.push_back("m");
    }
    for (int j = 0; j < controlled; ++j) {
        layout.names.push_back("act_" + std::to_string(j));
        layout.units.push_back("mPa");
    }
    layout.validate();
    return layout;
}

Vec coupled_controlled_endpoint(const Vec& observed_end, int controlled_count) {
    const int d_o = (int)observed_end.size();
    Vec out(controlled_count);
    for (int j = 0; j < controlled_count; ++j) {
        double v = 0.1 * j;
        for (int i = 0; i < d_o; ++i) {
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            const double mag = 1.0 + 0.25 * ((3 * i + 5 * j) % 4);
            v += sign * mag / d_o * observed_end[i];
        }
        out[j] = v;
    }
    return out;
}

GeneratedInteraction gen_handshake(const ScenarioParams& params) {
    params.layout.validate();
    if (!(params.duration_s > 0)) throw ConfigError("duration_s must be positive");
    if (!(params.speed_factor > 0)) throw ConfigError("speed_factor must be positive");
    if (!(params.sample_rate > 0)) throw ConfigError("sample_rate must be positive");
    if (params.pause_ticks < 0) throw ConfigError("pause_ticks must be non-negative");
    const int d_o = params.layout.observed_count;
    const int d_c = params.layout.controlled_count;
    if ((int)params.endpoint.size() != params.layout.total())
        throw ConfigError("endpoint must have one entry per DoF");

    const double rate = params.sample_rate;
    const long t_active = std::max<long>(2, (long)std::llround(params.duration_s / params.speed_factor * rate));
    const long pause = params.pause_ticks;
    const long hold = (long)std::llround(params.hold_s * rate);
    long delay = (long)std::llround(params.onset_delay_s * rate);
    delay = std::clamp<long>(delay, 0, t_active - 2);
    const long T = pause + t_active + hold;

    const Vec end_obs = params.endpoint.head(d_o);
    const Vec end_ctl = coupled_controlled_endpoint(end_obs, d_c);

    GeneratedInteraction g;
    g.ix.layout = params.layout;
    g.ix.sample_rate = rate;
    g.ix.data.resize(d_o + d_c, T);
    g.gt_phase.resize(T);

    const double denom_obs = (double)(t_active - 1 - delay);
    for (long t = 0; t < T; ++t) {
        const long ta = std::clamp<long>(t - pause, 0, t_active - 1);
        const double gt = (double)ta / (double)(t_active - 1);
        g.gt_phase[t] = gt;

        const long th = std::clamp<long>(t - pause - delay, 0, t_active - 1 - delay);
        const double uh = denom_obs > 0 ? (double)th / denom_obs : 1.0;
        const double mj_obs = min_jerk(uh);
        const double prof_ctl = params.linear_controlled ? std::clamp(gt, 0.0, 1.0) : min_jerk(gt);

        for (int i = 0; i < d_o; ++i) g.ix.data(i, t) = end_obs[i] * mj_obs;
        for (int j = 0; j < d_c; ++j) g.ix.data(d_o + j, t) = end_ctl[j] * prof_ctl;
    }

    if (params.noise_sd > 0 || params.noise_rel > 0) {
        auto rng = make_rng(params.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < d_o; ++i) {
            const double sd = params.noise_rel > 0 ? params.noise_rel * std::abs(end_obs[i])
                                                   : params.noise_sd;
            for (long t = 0; t < T; ++t) g.ix.data(i, t) += sd * gauss(rng);
        }
    }

    g.ix.validate();
    return g;
}

std::vector<Interaction> gen_demo_set(int n, const Mat& ranges, std::uint64_t seed,
                                      const DofLayout& layout, double sample_rate,
                                      double speed_lo, double speed_hi, double duration_s,
                                      double noise_rel, bool canonical_first) {
    layout.validate();
    if (n < 2) throw DataError("gen_demo_set: need at least two demonstrations");
    if (ranges.rows() != layout.observed_count || ranges.cols() != 2)
        throw ConfigError("gen_demo_set: ranges must be observed_count x 2");
    if (!(speed_lo > 0) || !(speed_hi >= speed_lo))
        throw ConfigError("gen_demo_set: bad speed range");

    std::vector<Interaction> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        ScenarioParams p;
        p.layout = layout;
        p.sample_rate = sample_rate;
        p.duration_s = duration_s;
        p.noise_rel = noise_rel;
        p.endpoint = Vec::Zero(layout.total());
        p.seed = split_seed(seed, (std::uint64_t)i * 2 + 1);

        if (canonical_first && i == 0) {
            for (int d = 0; d < layout.observed_count; ++d)
                p.endpoint[d] = 0.5 * (ranges(d, 0) + ranges(d, 1));
            p.speed_factor = 1.0;
            p.onset_delay_s = 0.15;
            p.hold_s = 0.35;
        } else {
            auto rng = make_rng(split_seed(seed, (std::uint64_t)i * 2));
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            for (int d = 0; d < layout.observed_count; ++d)
                p.endpoint[d] = ranges(d, 0) + (ranges(d, 1) - ranges(d, 0)) * u01(rng);
            p.speed_factor = speed_lo + (speed_hi - speed_lo) * u01(rng);
            p.onset_delay_s = 0.3 * u01(rng);
            p.hold_s = 0.2 + 0.3 * u01(rng);
        }
        out.push_back(gen_handshake(p).ix);
    }
    return out;
}

} // namespace bip
