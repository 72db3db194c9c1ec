#pragma once
#include <filesystem>
#include <vector>

#include "bip/basis.hpp"
#include "bip/interaction.hpp"
#include "bip/types.hpp"

namespace bip {

// Everything learned from the demonstration set: mean weights, initial phase
// velocity, and the joint prior covariance over [phase, phase_vel, weights].
struct PriorModel {
    WeightVector w0;
    double phase0 = 0.0;
    double phase_vel0 = 0.0;   // phase per sample at sample_rate
    double var_phase0 = 1e-4;
    double var_phase_vel0 = 0.0;
    Mat Sigma0;                // (B+2) x (B+2), zero cross-blocks at construction
    std::vector<BasisConfig> basis;
    DofLayout layout;
    double sample_rate = 0.0;
    Vec demo_range;            // per-DoF value range across all demos
    double mean_demo_length = 0.0; // samples
    int demo_count = 0;

    long weight_dim() const { return w0.total(); }
    long state_dim() const { return weight_dim() + 2; }
    // offset of DoF d's weight block inside the flattened weight vector
    long block_offset(int d) const {
        long off = 0;
        for (int k = 0; k < d; ++k) off += basis[k].count;
        return off;
    }
    void validate() const;
};

// Unbiased (N-1) sample covariance of demo weight rows.
Mat weight_covariance(const Mat& W);

PriorModel learn_prior(const std::vector<Interaction>& demos, const std::vector<BasisConfig>& cfgs);

void save_model(const PriorModel& model, const std::filesystem::path& path);
PriorModel load_model(const std::filesystem::path& path);

} // namespace bip
