#include "bip/basis.hpp"

#include <cmath>

namespace bip {

BasisConfig BasisConfig::regular(int count) {
    if (count < 2) throw ConfigError("basis count must be at least 2");
    BasisConfig cfg;
    cfg.count = count;
    cfg.width = 1.0 / (count - 1);
    cfg.centers.resize(count);
    const double lo = -1.5 * cfg.width, hi = 1.0 + 1.5 * cfg.width;
    for (int i = 0; i < count; ++i)
        cfg.centers[i] = lo + (hi - lo) * (double)i / (double)(count - 1);
    return cfg;
}

void BasisConfig::validate() const {
    if (count < 2) throw ConfigError("basis count must be at least 2");
    if ((int)centers.size() != count) throw ConfigError("basis centers size mismatch");
    if (!(width > 0)) throw ConfigError("basis width must be positive");
    for (int i = 1; i < count; ++i)
        if (!(centers[i] > centers[i - 1]))
            throw ConfigError("basis centers must be strictly increasing");
}

RowVec basis_row(double phase, const BasisConfig& cfg) {
    RowVec out(cfg.count);
    const double inv2w2 = 1.0 / (2.0 * cfg.width * cfg.width);
    for (int i = 0; i < cfg.count; ++i) {
        const double d = phase - cfg.centers[i];
        out[i] = std::exp(-d * d * inv2w2);
    }
    return out;
}

RowVec basis_derivative_row(double phase, const BasisConfig& cfg) {
    RowVec out(cfg.count);
    const double invw2 = 1.0 / (cfg.width * cfg.width);
    for (int i = 0; i < cfg.count; ++i) {
        const double d = phase - cfg.centers[i];
        out[i] = -d * invw2 * std::exp(-d * d * 0.5 * invw2);
    }
    return out;
}

Vec decompose(const Vec& y, const BasisConfig& cfg) {
    cfg.validate();
    const long T = y.size();
    if (T < cfg.count)
        throw DataError("decompose: trajectory shorter than basis count (underdetermined)");

    Mat Phi(T, cfg.count);
    for (long t = 0; t < T; ++t) Phi.row(t) = basis_row(phase_of(t, T), cfg);

    Mat A = Phi.transpose() * Phi;
    const double lam = 1e-12 * A.trace() / cfg.count;
    A.diagonal().array() += lam;
    return Eigen::LDLT<Mat>(A).solve(Phi.transpose() * y);
}

Vec reconstruct(const Vec& weights, const Vec& phases, const BasisConfig& cfg) {
    Vec out(phases.size());
    for (long i = 0; i < phases.size(); ++i) out[i] = basis_row(phases[i], cfg) * weights;
    return out;
}

WeightVector decompose_interaction(const Interaction& ix, const std::vector<BasisConfig>& cfgs) {
    ix.validate();
    if ((int)cfgs.size() != ix.dofs())
        throw ConfigError("decompose_interaction: one basis config per DoF required");
    WeightVector wv;
    wv.per_dof.reserve(ix.dofs());
    for (int d = 0; d < ix.dofs(); ++d) {
        try {
            wv.per_dof.push_back(decompose(ix.data.row(d).transpose(), cfgs[d]));
        } catch (const DataError& e) {
            throw DataError("DoF " + std::to_string(d) + ": " + e.what());
        }
    }
    return wv;
}

} // namespace bip
