#include "bip/filter.hpp"

#include <algorithm>
#include <cmath>

#include "bip/log.hpp"

namespace bip {

NoiseConfig NoiseConfig::defaults_for(const PriorModel& model, double r_rel) {
    NoiseConfig n;
    n.r_per_dof = (r_rel * model.demo_range.array()).square();
    return n;
}

FilterState initial_state(const PriorModel& model, double tick_dt) {
    model.validate();
    FilterState st;
    const long B = model.weight_dim();
    st.mean.resize(B + 2);
    st.mean[0] = model.phase0;
    st.mean[1] = model.phase_vel0;
    st.mean.segment(2, B) = model.w0.flattened();
    st.cov = model.Sigma0;
    st.tick_dt = tick_dt > 0 ? tick_dt : 1.0 / model.sample_rate;
    st.dt_samples = st.tick_dt * model.sample_rate;
    return st;
}

FilterState predict(const FilterState& state, const NoiseConfig& noise) {
    FilterState st = state;
    const double dt = st.dt_samples;
    st.mean[0] += dt * st.mean[1];

    // G Sigma G^T for G = [[1,dt],[0,1]] on the phase pair, identity elsewhere
    st.cov.row(0) += dt * st.cov.row(1);
    st.cov.col(0) += dt * st.cov.col(1);

    const double qv = noise.q_phase_vel;
    const double dt2 = dt * dt;
    st.cov(0, 0) += noise.q_phase + qv * dt2 * dt2 / 4.0;
    st.cov(0, 1) += qv * dt2 * dt / 2.0;
    st.cov(1, 0) += qv * dt2 * dt / 2.0;
    st.cov(1, 1) += qv * dt2;
    if (noise.q_weights > 0) {
        const long B = st.mean.size() - 2;
        st.cov.diagonal().segment(2, B).array() += noise.q_weights;
    }
    return st;
}

Mat observation_jacobian(const FilterState& state, const PriorModel& model) {
    const int D = model.layout.total();
    const long n = model.state_dim();
    Mat H = Mat::Zero(D, n);
    const double phi = state.mean[0];
    for (int d = 0; d < D; ++d) {
        const auto& cfg = model.basis[d];
        const RowVec br = basis_row(phi, cfg);
        const RowVec dbr = basis_derivative_row(phi, cfg);
        const long off = 2 + model.block_offset(d);
        const auto wd = state.mean.segment(off, cfg.count);
        H(d, 0) = dbr * wd;
        H.block(d, off, 1, cfg.count) = br;
    }
    return H;
}

Vec predicted_observation(const FilterState& state, const PriorModel& model) {
    const int D = model.layout.total();
    Vec h(D);
    const double phi = state.mean[0];
    for (int d = 0; d < D; ++d) {
        const auto& cfg = model.basis[d];
        const long off = 2 + model.block_offset(d);
        h[d] = basis_row(phi, cfg) * state.mean.segment(off, cfg.count);
    }
    return h;
}

FilterState update(const FilterState& state, const PartialObservation& obs,
                   const NoiseConfig& noise, const PriorModel& model) {
    const int D = model.layout.total();
    if ((int)obs.mask.size() != D || obs.values.size() != D)
        throw DataError("update: observation size does not match layout");
    if (noise.r_per_dof.size() != D)
        throw ConfigError("update: r_per_dof must have one entry per DoF");

    std::vector<int> idx;
    idx.reserve(D);
    for (int d = 0; d < D; ++d)
        if (obs.mask[d]) idx.push_back(d);
    if (idx.empty()) return state; // no information

    const int m = (int)idx.size();
    const long n = state.mean.size();

    const Mat H_full = observation_jacobian(state, model);
    const Vec h_full = predicted_observation(state, model);

    Mat H(m, n);
    Vec innov(m), r(m);
    for (int k = 0; k < m; ++k) {
        H.row(k) = H_full.row(idx[k]);
        innov[k] = obs.values[idx[k]] - h_full[idx[k]];
        r[k] = noise.r_per_dof[idx[k]];
        if (!(r[k] > 0)) throw ConfigError("update: measurement variance must be positive for measured DoFs");
    }

    FilterState st = state;

    Mat PHt = st.cov * H.transpose(); // n x m
    Mat S = H * PHt;                  // m x m
    S.diagonal() += r;

    Eigen::LDLT<Mat> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        S.diagonal().array() += 1e-9;
        ldlt.compute(S);
        st.innovation_jitter_hit = true;
        log::warn("update: innovation covariance needed jitter");
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("update: innovation covariance is not decomposable");
    }

    if (noise.mahalanobis_gate > 0) {
        const double d2 = innov.dot(ldlt.solve(innov));
        if (d2 > noise.mahalanobis_gate) {
            log::debug("update: innovation gated out");
            return st;
        }
    }

    const Mat K = ldlt.solve(PHt.transpose()).transpose(); // n x m
    st.mean += K * innov;
    st.cov -= K * S * K.transpose();
    st.cov = 0.5 * (st.cov + st.cov.transpose()).eval();

    st.mean[0] = std::clamp(st.mean[0], 0.0, 1.05);
    st.mean[1] = std::max(st.mean[1], 0.0);

    if (!st.mean.allFinite() || !st.cov.allFinite())
        throw NumericalError("update: state became non-finite");
    return st;
}

FilterState step(const FilterState& state, const PartialObservation& obs,
                 const NoiseConfig& noise, const PriorModel& model) {
    return update(predict(state, noise), obs, noise, model);
}

} // namespace bip
