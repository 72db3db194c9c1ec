#pragma once
#include <vector>

#include "bip/interaction.hpp"
#include "bip/types.hpp"

namespace bip {

// Gaussian basis over phase. Centers extend 1.5 widths beyond [0,1] on both
// sides: interior-only centers make the fitted curve ring near the interval
// edges (spurious gradient near 0, early plateau and droop near 1), which in
// turn traps the phase filter at the clamps. Padding removes both effects.
struct BasisConfig {
    int count = 0;
    Vec centers;
    double width = 0;

    static BasisConfig regular(int count);
    void validate() const;
    bool operator==(const BasisConfig& o) const {
        return count == o.count && width == o.width && centers == o.centers;
    }
};

RowVec basis_row(double phase, const BasisConfig& cfg);
RowVec basis_derivative_row(double phase, const BasisConfig& cfg);

// Ridge-regularized least squares of y against the basis evaluated at
// phase_of(t, T). Throws DataError when T < count (underdetermined).
Vec decompose(const Vec& y, const BasisConfig& cfg);

Vec reconstruct(const Vec& weights, const Vec& phases, const BasisConfig& cfg);

// Per-DoF weight blocks, observed DoFs first (layout order).
struct WeightVector {
    std::vector<Vec> per_dof;

    long total() const {
        long n = 0;
        for (const auto& w : per_dof) n += w.size();
        return n;
    }
    Vec flattened() const {
        Vec out(total());
        long off = 0;
        for (const auto& w : per_dof) {
            out.segment(off, w.size()) = w;
            off += w.size();
        }
        return out;
    }
};

WeightVector decompose_interaction(const Interaction& ix, const std::vector<BasisConfig>& cfgs);

} // namespace bip
