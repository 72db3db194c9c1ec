#pragma once
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "bip/filter.hpp"
#include "bip/model.hpp"
#include "bip/simgen.hpp"

namespace testutil {

// Reference observed endpoints used across the synthetic tests; ranges are
// +/- spread around them, cycled over however many observed DoFs a layout has.
inline bip::Mat corpus_ranges(const bip::DofLayout& layout, double spread = 0.0866) {
    static const double nominal[3] = {0.6, 0.5, 0.8};
    bip::Mat ranges(layout.observed_count, 2);
    for (int d = 0; d < layout.observed_count; ++d) {
        const double e = nominal[d % 3];
        ranges(d, 0) = e * (1.0 - spread);
        ranges(d, 1) = e * (1.0 + spread);
    }
    return ranges;
}

inline std::vector<bip::Interaction> make_corpus(int n = 36, std::uint64_t seed = 42,
                                                 int observed = 3, int controlled = 5,
                                                 double speed_lo = 0.5, double speed_hi = 2.0,
                                                 double spread = 0.0866) {
    const bip::DofLayout layout = bip::default_layout(observed, controlled);
    return bip::gen_demo_set(n, corpus_ranges(layout, spread), seed, layout, 30.0, speed_lo,
                             speed_hi, 10.0, 0.005, /*canonical_first=*/true);
}

inline bip::PriorModel make_model(const std::vector<bip::Interaction>& demos, int basis = 15) {
    std::vector<bip::BasisConfig> cfgs(demos[0].layout.total(), bip::BasisConfig::regular(basis));
    return bip::learn_prior(demos, cfgs);
}

// The standard 3-observed / 5-controlled corpus and model, built once.
inline const std::vector<bip::Interaction>& shared_corpus() {
    static const std::vector<bip::Interaction> demos = make_corpus();
    return demos;
}

inline const bip::PriorModel& shared_model() {
    static const bip::PriorModel model = make_model(shared_corpus());
    return model;
}

// Single-channel-per-agent corpus varying only in timing (speeds, delays,
// holds; every demo shares the nominal endpoint). With one observed DoF and no
// shape variation the latent weights are pinned, which keeps comparisons
// against the fixed-shape grid filter clean.
inline const std::vector<bip::Interaction>& narrow_corpus() {
    static const std::vector<bip::Interaction> demos =
        make_corpus(36, 7, 1, 1, 0.5, 2.0, /*spread=*/0.0);
    return demos;
}

inline const bip::PriorModel& narrow_model() {
    static const bip::PriorModel model = make_model(narrow_corpus());
    return model;
}

// A test scenario drawn around the corpus midpoints at a given speed.
inline bip::ScenarioParams test_scenario(const bip::DofLayout& layout, double speed,
                                         std::uint64_t seed, double pause_s = 0.0) {
    const bip::Mat ranges = corpus_ranges(layout);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bip::ScenarioParams p;
    p.layout = layout;
    p.endpoint.resize(layout.total());
    bip::Vec end_obs(layout.observed_count);
    for (int d = 0; d < layout.observed_count; ++d)
        end_obs[d] = ranges(d, 0) + u01(rng) * (ranges(d, 1) - ranges(d, 0));
    p.endpoint.head(layout.observed_count) = end_obs;
    p.endpoint.tail(layout.controlled_count) =
        bip::coupled_controlled_endpoint(end_obs, layout.controlled_count);
    p.speed_factor = speed;
    p.pause_ticks = (long)std::llround(pause_s * 30.0);
    p.noise_rel = 0.005;
    p.seed = seed * 77 + 13;
    p.duration_s = 10.0;
    p.sample_rate = 30.0;
    p.onset_delay_s = 0.1 * u01(rng);
    p.hold_s = 0.15;
    return p;
}

// The corpus-nominal shape at a given speed: timing checks (speed sweeps,
// pauses) use this so shape mismatch does not confound the phase estimate —
// off-nominal endpoints get absorbed into the weights and re-gauge the phase
// axis, which is a shape effect, not a timing one. Seed still varies the
// sensor noise and onset delay.
inline bip::ScenarioParams nominal_scenario(const bip::DofLayout& layout, double speed,
                                            std::uint64_t seed, double pause_s = 0.0) {
    bip::ScenarioParams p = test_scenario(layout, speed, seed, pause_s);
    const bip::Mat ranges = corpus_ranges(layout);
    bip::Vec end_obs(layout.observed_count);
    for (int d = 0; d < layout.observed_count; ++d)
        end_obs[d] = 0.5 * (ranges(d, 0) + ranges(d, 1));
    p.endpoint.head(layout.observed_count) = end_obs;
    p.endpoint.tail(layout.controlled_count) =
        bip::coupled_controlled_endpoint(end_obs, layout.controlled_count);
    return p;
}

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("biptest_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(counter()++));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = candidate;
                return;
            }
        }
        std::abort();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path / name; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
};

inline std::string read_file(const std::filesystem::path& p) {
    FILE* f = std::fopen(p.string().c_str(), "rb");
    if (!f) return {};
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    FILE* f = std::fopen(p.string().c_str(), "wb");
    if (!f) std::abort();
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

} // namespace testutil
