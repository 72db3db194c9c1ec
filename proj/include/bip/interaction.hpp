#pragma once
#include <filesystem>

#include "bip/types.hpp"

namespace bip {

// A recorded two-agent interaction: D rows (observed then controlled), T columns.
struct Interaction {
    Mat data;               // D x T
    double sample_rate = 0; // Hz
    DofLayout layout;
    bool executed = false;  // true for runtime-generated recordings

    int dofs() const { return (int)data.rows(); }
    long samples() const { return (long)data.cols(); }

    void validate() const;
};

// Normalized progress of sample t in a T-sample trajectory: t/(T-1), so the
// last sample maps exactly to 1.
double phase_of(long t, long T);

Interaction load_interaction(const std::filesystem::path& path);
void save_interaction(const Interaction& ix, const std::filesystem::path& path);

} // namespace bip
