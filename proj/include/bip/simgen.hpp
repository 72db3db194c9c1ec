#pragma once
#include <cstdint>
#include <vector>

#include "bip/interaction.hpp"
#include "bip/types.hpp"

namespace bip {

// Minimum-jerk position profile on [0,1]; clamped outside.
double min_jerk(double u);

// Desk-scale default: a few observed "hand" channels and synthetic actuator
// channels, observed first.
DofLayout default_layout(int observed = 3, int controlled = 5);

// Fixed, seed-independent linear coupling from observed endpoints to controlled
// endpoints. Signs alternate and magnitudes cycle so every observed/controlled
// pair is coupled with a distinct nonzero coefficient.
Vec coupled_controlled_endpoint(const Vec& observed_end, int controlled_count);

struct ScenarioParams {
    Vec endpoint;              // length D; controlled entries are derived from observed ones
    double speed_factor = 1.0; // >1 = faster (shorter) motion
    long pause_ticks = 0;      // leading stillness for both agents
    double noise_sd = 0.0;     // absolute i.i.d. noise sd on observed rows
    double noise_rel = 0.0;    // if >0, per-DoF sd = noise_rel * |endpoint_d| (overrides noise_sd)
    std::uint64_t seed = 0;
    double duration_s = 10.0;  // active-motion duration at speed 1
    DofLayout layout;
    double sample_rate = 30.0;
    double onset_delay_s = 0.0; // observed-agent start lag inside the active span
    double hold_s = 0.0;        // trailing stillness
    bool linear_controlled = false; // controlled profile: min-jerk (default) or linear
};

struct GeneratedInteraction {
    Interaction ix;
    Vec gt_phase; // exact progress of the active span per tick (0 in pause, 1 in hold)
};

GeneratedInteraction gen_handshake(const ScenarioParams& params);

// n randomized demonstrations: endpoints uniform in per-DoF [lo,hi] ranges
// (ranges is observed_count x 2), speeds uniform in [speed_lo, speed_hi],
// onset delays U(0, 0.3) s, trailing holds U(0.2, 0.5) s. When canonical_first
// is set, demo 0 uses midpoint endpoints at speed 1 (a fixed reference shape).
std::vector<Interaction> gen_demo_set(int n, const Mat& ranges, std::uint64_t seed,
                                      const DofLayout& layout, double sample_rate = 30.0,
                                      double speed_lo = 0.8, double speed_hi = 1.25,
                                      double duration_s = 10.0, double noise_rel = 0.005,
                                      bool canonical_first = false);

} // namespace bip
