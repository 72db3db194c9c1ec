#pragma once
#include <array>
#include <string>
#include <vector>

#include "bip/filter.hpp"
#include "bip/interaction.hpp"
#include "bip/model.hpp"
#include "bip/types.hpp"

namespace bip {

// Earliest window start after which every DoF's sliding-window variance stays
// below its group threshold, as a fraction of the full recording length.
struct TtcResult {
    double ratio = 1.0;
    long settle_start = -1;    // first window start of the settled suffix (samples)
    bool never_settled = false;
};

// Thresholds are sample variances (squared units), one per DoF group.
TtcResult time_to_completion(const Interaction& ix, double window_s = 2.0,
                             double observed_threshold = 1e-3,
                             double controlled_threshold = 1e-3);

struct PearsonResult {
    Mat r;                              // D x D, symmetric, unit diagonal
    std::vector<uint8_t> zero_variance; // flagged DoFs get zeroed rows/columns
    bool any_zero_variance() const;
};

PearsonResult pearson_matrix(const Interaction& ix);

struct CorrHistogram {
    std::array<long, 20> counts{}; // equal-width bins over [-1, 1]
    long valid_windows = 0;
    long skipped_windows = 0; // both channels flat: no correlation defined
    // Fraction of valid windows in bins entirely outside [-cut, cut].
    double mass_outside(double cut) const;
};

// Pearson r of two DoFs over sliding windows. A window where exactly one
// channel is flat counts as r = 0; both flat skips the window.
CorrHistogram sliding_corr_histogram(const Interaction& ix, int dof_a, int dof_b,
                                     long window_samples, long stride_samples = 1);

struct MwResult {
    double u = 0.0; // U for the first sample: #(a_i > b_j) pairs, ties at half weight
    double p = 1.0; // two-sided
};

// Exact enumeration when both samples have at most 8 values and no ties;
// otherwise a tie-corrected normal approximation with continuity correction.
MwResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

// Per-tick filter summary: phase, phase velocity, and their variances.
using PhaseTrace = std::vector<std::array<double, 4>>;

struct PhaseErrorResult {
    double rmse = 0.0; // over ticks whose ground-truth phase lies strictly in (0,1)
    double terminal_abs_error = 0.0;
    long active_ticks = 0;
};

PhaseErrorResult phase_error(const PhaseTrace& trace, const std::vector<double>& ground_truth);

// Brute-force Bayes filter over a discretized (phase, phase velocity) grid,
// with weights pinned at the prior mean. Validation oracle for the EKF.
struct GridSpec {
    int phase_points = 200;
    int vel_points = 50;
    double phase_min = 0.0;
    double phase_max = 1.05; // matches the filter's phase clamp
    double vel_min = 0.0;
    double vel_max = 0.01;         // phase per sample
    bool uniform_prior = false;    // flat start instead of the model prior
    bool keep_posteriors = false;  // store every tick's posterior (memory-heavy)
    void validate() const;
};

struct GridOracleResult {
    std::vector<double> map_phase; // per tick
    std::vector<double> map_vel;
    Mat final_posterior;         // phase_points x vel_points, sums to 1
    std::vector<Mat> posteriors; // per tick when requested
    Vec phase_axis;
    Vec vel_axis;
};

// observations: one value per tick for the single observed DoF; NaN ticks run
// the transition only. Uses q_phase_vel and r_per_dof[0] from `noise`.
GridOracleResult grid_phase_oracle(const PriorModel& model, const std::vector<double>& observations,
                                   const GridSpec& grid, const NoiseConfig& noise);

struct TestStat {
    std::string name;
    double statistic = 0.0;
    double p_value = 1.0;
};

// Aggregate analysis of one executed interaction, assembled by the CLI.
struct EvalReport {
    double ttc_ratio = 1.0;
    Mat pearson;
    PhaseTrace phase_trace;
    std::vector<TestStat> test_stats;
};

} // namespace bip
