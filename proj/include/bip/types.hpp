#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bip/error.hpp"

namespace bip {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

// DoF bookkeeping: observed (sensed from the partner) rows come first,
// controlled (actuated) rows after them.
struct DofLayout {
    int observed_count = 0;
    int controlled_count = 0;
    std::vector<std::string> names;
    std::vector<std::string> units;

    int total() const { return observed_count + controlled_count; }

    void validate() const {
        if (observed_count < 1 || controlled_count < 1)
            throw DataError("layout needs at least one observed and one controlled DoF");
        if (total() < 2) throw DataError("layout needs at least two DoFs");
        if ((int)names.size() != total() || (int)units.size() != total())
            throw DataError("layout names/units must have one entry per DoF");
    }

    bool operator==(const DofLayout& o) const {
        return observed_count == o.observed_count && controlled_count == o.controlled_count &&
               names == o.names && units == o.units;
    }
};

// One tick of sensor input; mask[i]=true means DoF i was actually measured this
// tick and values[i] is meaningful. Unmasked entries are ignored.
struct PartialObservation {
    Vec values;
    std::vector<std::uint8_t> mask;

    static PartialObservation observed_only(const Vec& v, const DofLayout& layout) {
        PartialObservation o;
        o.values = v;
        o.mask.assign(layout.total(), 0);
        for (int d = 0; d < layout.observed_count; ++d) o.mask[d] = 1;
        return o;
    }
};

} // namespace bip
