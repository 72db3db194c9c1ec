#include "bip/eval.hpp"

#include <algorithm>
#include <cmath>

#include "bip/basis.hpp"
#include "bip/error.hpp"

namespace bip {

TtcResult time_to_completion(const Interaction& ix, double window_s, double observed_threshold,
                             double controlled_threshold) {
    ix.validate();
    const long T = ix.samples();
    const long w = std::llround(window_s * ix.sample_rate);
    if (w < 2) throw ConfigError("time_to_completion: window must span at least two samples");
    if (w >= T) throw DataError("time_to_completion: window must be shorter than the recording");
    if (!(observed_threshold > 0) || !(controlled_threshold > 0))
        throw ConfigError("time_to_completion: thresholds must be positive");

    const int D = ix.dofs();
    const long n_windows = T - w + 1;
    std::vector<uint8_t> ok((size_t)n_windows, 1);
    std::vector<double> s1((size_t)T + 1), s2((size_t)T + 1);
    for (int d = 0; d < D; ++d) {
        const double thr = d < ix.layout.observed_count ? observed_threshold : controlled_threshold;
        const double mean = ix.data.row(d).mean(); // center first to keep the prefix sums tame
        s1[0] = s2[0] = 0.0;
        for (long t = 0; t < T; ++t) {
            const double x = ix.data(d, t) - mean;
            s1[(size_t)t + 1] = s1[(size_t)t] + x;
            s2[(size_t)t + 1] = s2[(size_t)t] + x * x;
        }
        for (long s = 0; s < n_windows; ++s) {
            if (!ok[(size_t)s]) continue;
            const double sum = s1[(size_t)(s + w)] - s1[(size_t)s];
            const double ssq = s2[(size_t)(s + w)] - s2[(size_t)s];
            const double var = std::max(0.0, (ssq - sum * sum / (double)w) / (double)(w - 1));
            if (!(var < thr)) ok[(size_t)s] = 0;
        }
    }

    long settle = 0;
    for (long s = n_windows - 1; s >= 0; --s) {
        if (!ok[(size_t)s]) {
            settle = s + 1;
            break;
        }
    }
    TtcResult out;
    if (settle >= n_windows) {
        out.ratio = 1.0;
        out.settle_start = -1;
        out.never_settled = true;
    } else {
        out.ratio = (double)settle / (double)T;
        out.settle_start = settle;
    }
    return out;
}

bool PearsonResult::any_zero_variance() const {
    return std::any_of(zero_variance.begin(), zero_variance.end(), [](uint8_t f) { return f != 0; });
}

PearsonResult pearson_matrix(const Interaction& ix) {
    ix.validate();
    const long T = ix.samples();
    if (T < 3) throw DataError("pearson_matrix: need at least three samples");
    const int D = ix.dofs();

    PearsonResult out;
    out.r = Mat::Identity(D, D);
    out.zero_variance.assign((size_t)D, 0);

    Mat centered(D, T);
    std::vector<double> norm((size_t)D);
    for (int d = 0; d < D; ++d) {
        if (ix.data.row(d).maxCoeff() == ix.data.row(d).minCoeff()) out.zero_variance[(size_t)d] = 1;
        centered.row(d) = ix.data.row(d).array() - ix.data.row(d).mean();
        norm[(size_t)d] = centered.row(d).norm();
    }
    for (int a = 0; a < D; ++a)
        for (int b = a + 1; b < D; ++b) {
            double r = 0.0;
            if (!out.zero_variance[(size_t)a] && !out.zero_variance[(size_t)b])
                r = std::clamp(centered.row(a).dot(centered.row(b)) / (norm[(size_t)a] * norm[(size_t)b]),
                               -1.0, 1.0);
            out.r(a, b) = out.r(b, a) = r;
        }
    return out;
}

double CorrHistogram::mass_outside(double cut) const {
    if (valid_windows == 0) return 0.0;
    long mass = 0;
    for (int k = 0; k < 20; ++k) {
        const double lo = -1.0 + 0.1 * k;
        if (lo + 0.1 <= -cut || lo >= cut) mass += counts[(size_t)k];
    }
    return (double)mass / (double)valid_windows;
}

CorrHistogram sliding_corr_histogram(const Interaction& ix, int dof_a, int dof_b,
                                     long window_samples, long stride_samples) {
    ix.validate();
    const long T = ix.samples();
    if (dof_a < 0 || dof_a >= ix.dofs() || dof_b < 0 || dof_b >= ix.dofs())
        throw ConfigError("sliding_corr_histogram: DoF index out of range");
    if (window_samples < 3)
        throw ConfigError("sliding_corr_histogram: window must span at least three samples");
    if (stride_samples < 1) throw ConfigError("sliding_corr_histogram: stride must be positive");
    if (window_samples > T) throw DataError("sliding_corr_histogram: window longer than the recording");

    // a channel is "flat" in a window when its spread is negligible against the
    // channel's full range -- noise-only windows carry no correlation signal
    const double range_a = ix.data.row(dof_a).maxCoeff() - ix.data.row(dof_a).minCoeff();
    const double range_b = ix.data.row(dof_b).maxCoeff() - ix.data.row(dof_b).minCoeff();

    CorrHistogram h;
    for (long s = 0; s + window_samples <= T; s += stride_samples) {
        auto xa = ix.data.row(dof_a).segment(s, window_samples);
        auto xb = ix.data.row(dof_b).segment(s, window_samples);
        const Eigen::ArrayXd ca = xa.transpose().array() - xa.mean();
        const Eigen::ArrayXd cb = xb.transpose().array() - xb.mean();
        const double denom = (double)(window_samples - 1);
        const double sd_a = std::sqrt((ca * ca).sum() / denom);
        const double sd_b = std::sqrt((cb * cb).sum() / denom);
        const bool flat_a = range_a <= 0.0 || sd_a < 0.01 * range_a;
        const bool flat_b = range_b <= 0.0 || sd_b < 0.01 * range_b;
        double r = 0.0;
        if (flat_a && flat_b) {
            ++h.skipped_windows;
            continue;
        }
        if (!flat_a && !flat_b) r = std::clamp((ca * cb).sum() / denom / (sd_a * sd_b), -1.0, 1.0);
        const int bin = std::clamp((int)std::floor((r + 1.0) * 10.0), 0, 19);
        ++h.counts[(size_t)bin];
        ++h.valid_windows;
    }
    return h;
}

MwResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw DataError("mann_whitney_u: samples must be nonempty");
    for (double v : a)
        if (!std::isfinite(v)) throw DataError("mann_whitney_u: non-finite value in first sample");
    for (double v : b)
        if (!std::isfinite(v)) throw DataError("mann_whitney_u: non-finite value in second sample");

    const long n = (long)a.size(), m = (long)b.size();
    const long N = n + m;
    struct Entry {
        double v;
        int group;
    };
    std::vector<Entry> all;
    all.reserve((size_t)N);
    for (double v : a) all.push_back({v, 0});
    for (double v : b) all.push_back({v, 1});
    std::sort(all.begin(), all.end(), [](const Entry& x, const Entry& y) { return x.v < y.v; });

    std::vector<double> rank((size_t)N);
    bool ties = false;
    double tie_term = 0.0; // sum of t^3 - t over tie groups
    for (long i = 0; i < N;) {
        long j = i;
        while (j < N && all[(size_t)j].v == all[(size_t)i].v) ++j;
        const double r = 0.5 * (double)(i + j + 1); // mean of 1-based ranks i+1 .. j
        for (long k = i; k < j; ++k) rank[(size_t)k] = r;
        const double t = (double)(j - i);
        if (j - i > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }

    double ra = 0.0;
    for (long i = 0; i < N; ++i)
        if (all[(size_t)i].group == 0) ra += rank[(size_t)i];
    const double ua = ra - 0.5 * (double)n * (double)(n + 1);

    MwResult out;
    out.u = ua;
    const double nm = (double)n * (double)m;
    if (n <= 8 && m <= 8 && !ties) {
        // exact null distribution: c[i][j][u] counts interleavings of i and j
        // values whose U statistic equals u
        const long umax = n * m;
        std::vector<std::vector<std::vector<double>>> c(
            (size_t)n + 1, std::vector<std::vector<double>>((size_t)m + 1,
                                                            std::vector<double>((size_t)umax + 1, 0.0)));
        for (long j = 0; j <= m; ++j) c[0][(size_t)j][0] = 1.0;
        for (long i = 1; i <= n; ++i)
            for (long j = 0; j <= m; ++j)
                for (long u = 0; u <= i * j; ++u) {
                    double v = (u >= j) ? c[(size_t)i - 1][(size_t)j][(size_t)(u - j)] : 0.0;
                    if (j >= 1) v += c[(size_t)i][(size_t)j - 1][(size_t)u];
                    c[(size_t)i][(size_t)j][(size_t)u] = v;
                }
        double total = 0.0;
        for (long u = 0; u <= umax; ++u) total += c[(size_t)n][(size_t)m][(size_t)u];
        const long u_obs = std::llround(ua);
        const long u_small = std::min(u_obs, umax - u_obs);
        double cum = 0.0;
        for (long u = 0; u <= u_small; ++u) cum += c[(size_t)n][(size_t)m][(size_t)u];
        out.p = std::min(1.0, 2.0 * cum / total);
    } else {
        const double mu = 0.5 * nm;
        const double Nd = (double)N;
        const double sig2 = nm / 12.0 * ((Nd + 1.0) - tie_term / (Nd * (Nd - 1.0)));
        if (!(sig2 > 0)) {
            out.p = 1.0;
            return out;
        }
        const double z = std::max(0.0, std::abs(ua - mu) - 0.5) / std::sqrt(sig2);
        out.p = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
    }
    return out;
}

PhaseErrorResult phase_error(const PhaseTrace& trace, const std::vector<double>& ground_truth) {
    if (trace.size() != ground_truth.size())
        throw DataError("phase_error: trace and ground truth lengths differ");
    if (trace.empty()) throw DataError("phase_error: empty trace");

    double acc = 0.0;
    long n = 0;
    for (size_t t = 0; t < trace.size(); ++t) {
        const double g = ground_truth[t];
        if (g > 0.0 && g < 1.0) {
            const double e = trace[t][0] - g;
            acc += e * e;
            ++n;
        }
    }
    if (n == 0) { // recording never moves: fall back to every tick
        for (size_t t = 0; t < trace.size(); ++t) {
            const double e = trace[t][0] - ground_truth[t];
            acc += e * e;
        }
        n = (long)trace.size();
    }
    PhaseErrorResult out;
    out.rmse = std::sqrt(acc / (double)n);
    out.active_ticks = n;
    out.terminal_abs_error = std::abs(trace.back()[0] - ground_truth.back());
    return out;
}

void GridSpec::validate() const {
    if (phase_points < 2 || vel_points < 2)
        throw ConfigError("grid spec: need at least two points per axis");
    if (!std::isfinite(phase_min) || !std::isfinite(phase_max) || !std::isfinite(vel_min) ||
        !std::isfinite(vel_max))
        throw ConfigError("grid spec: bounds must be finite");
    if (!(phase_max > phase_min) || !(vel_max > vel_min))
        throw ConfigError("grid spec: axis bounds must be increasing");
}

GridOracleResult grid_phase_oracle(const PriorModel& model, const std::vector<double>& observations,
                                   const GridSpec& grid, const NoiseConfig& noise) {
    grid.validate();
    model.validate();
    if (model.layout.observed_count != 1)
        throw DataError("grid_phase_oracle: model must have exactly one observed DoF");
    if (observations.empty()) throw DataError("grid_phase_oracle: no observations");
    if (noise.r_per_dof.size() < 1 || !(noise.r_per_dof[0] > 0))
        throw ConfigError("grid_phase_oracle: need a positive observation variance");
    if (!(noise.q_phase_vel >= 0))
        throw ConfigError("grid_phase_oracle: process noise must be nonnegative");

    const int P = grid.phase_points, V = grid.vel_points;
    const double pw = (grid.phase_max - grid.phase_min) / (double)(P - 1);
    const double vw = (grid.vel_max - grid.vel_min) / (double)(V - 1);
    Vec phase_axis(P), vel_axis(V);
    for (int i = 0; i < P; ++i) phase_axis[i] = grid.phase_min + pw * i;
    for (int j = 0; j < V; ++j) vel_axis[j] = grid.vel_min + vw * j;

    const double r = noise.r_per_dof[0];
    const Vec& w_obs = model.w0.per_dof[0];
    Vec h(P); // predicted observation at each phase point, weights at prior mean
    for (int i = 0; i < P; ++i) h[i] = basis_row(phase_axis[i], model.basis[0]) * w_obs;

    Mat post(P, V);
    if (grid.uniform_prior) {
        post.setConstant(1.0 / ((double)P * (double)V));
    } else {
        for (int i = 0; i < P; ++i) {
            const double dp = phase_axis[i] - model.phase0;
            const double gp = std::exp(-0.5 * dp * dp / model.var_phase0);
            for (int j = 0; j < V; ++j) {
                const double dv = vel_axis[j] - model.phase_vel0;
                post(i, j) = gp * std::exp(-0.5 * dv * dv / model.var_phase_vel0);
            }
        }
        const double s = post.sum();
        if (!(s > 0)) throw NumericalError("grid_phase_oracle: prior has no mass on the grid");
        post /= s;
    }

    // velocity diffusion kernel equivalent to the filter's per-tick process noise
    std::vector<double> kern;
    int noff = 0;
    if (noise.q_phase_vel > 0) {
        noff = std::max(1, (int)std::ceil(3.0 * std::sqrt(noise.q_phase_vel) / vw));
        kern.resize((size_t)(2 * noff + 1));
        double ks = 0.0;
        for (int k = -noff; k <= noff; ++k) {
            const double d = (double)k * vw;
            kern[(size_t)(k + noff)] = std::exp(-0.5 * d * d / noise.q_phase_vel);
            ks += kern[(size_t)(k + noff)];
        }
        for (double& v : kern) v /= ks;
    }

    const long T = (long)observations.size();
    GridOracleResult out;
    out.phase_axis = phase_axis;
    out.vel_axis = vel_axis;
    out.map_phase.resize((size_t)T);
    out.map_vel.resize((size_t)T);
    if (grid.keep_posteriors) out.posteriors.reserve((size_t)T);

    Mat shifted(P, V), blurred(P, V);
    for (long t = 0; t < T; ++t) {
        // advect each velocity column along the phase axis; overflowing mass
        // piles up at the boundary, matching the filter's phase clamp
        shifted.setZero();
        for (int j = 0; j < V; ++j) {
            const double shift = vel_axis[j] / pw;
            const double fl = std::floor(shift);
            const long s0 = (long)fl;
            const double fr = shift - fl;
            for (int i = 0; i < P; ++i) {
                const double mass = post(i, j);
                if (mass == 0.0) continue;
                const long i0 = std::clamp<long>(i + s0, 0, P - 1);
                const long i1 = std::clamp<long>(i + s0 + 1, 0, P - 1);
                shifted(i0, j) += (1.0 - fr) * mass;
                shifted(i1, j) += fr * mass;
            }
        }
        if (!kern.empty()) {
            blurred.setZero();
            for (int o = -noff; o <= noff; ++o) {
                const double kw = kern[(size_t)(o + noff)];
                const int lo = std::max(0, o), hi = V + std::min(0, o);
                for (int j = lo; j < hi; ++j) blurred.col(j) += kw * shifted.col(j - o);
            }
        } else {
            blurred = shifted;
        }
        double s = blurred.sum();
        if (!(s > 0) || !std::isfinite(s))
            throw NumericalError("grid_phase_oracle: transition lost all probability mass");
        post = blurred / s;

        const double y = observations[(size_t)t];
        if (std::isfinite(y)) {
            for (int i = 0; i < P; ++i) {
                const double d = y - h[i];
                post.row(i) *= std::exp(-0.5 * d * d / r);
            }
            s = post.sum();
            if (!(s > 0) || !std::isfinite(s))
                throw NumericalError("grid_phase_oracle: observation annihilated the posterior");
            post /= s;
        }

        int bi = 0, bj = 0;
        double best = -1.0;
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < V; ++j)
                if (post(i, j) > best) {
                    best = post(i, j);
                    bi = i;
                    bj = j;
                }
        out.map_phase[(size_t)t] = phase_axis[bi];
        out.map_vel[(size_t)t] = vel_axis[bj];
        if (grid.keep_posteriors) out.posteriors.push_back(post);
    }
    out.final_posterior = post;
    return out;
}

} // namespace bip
