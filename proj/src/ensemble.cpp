#include "t4c/ensemble.hpp"

#include <algorithm>
#include <vector>

#include "t4c/error.hpp"

namespace t4c {

const char* aggregator_name(Aggregator agg) noexcept { return agg == Aggregator::Mean ? "mean" : "median"; }

Aggregator parse_aggregator(const std::string& name) {
    if (name == "mean") return Aggregator::Mean;
    if (name == "median") return Aggregator::Median;
    throw ConfigError("unknown aggregator '" + name + "' (expected mean or median)");
}

PredictionSet ensemble(std::span<const PredictionSet> members, Aggregator agg) {
    if (members.size() < 2)
        throw ConfigError("ensemble needs at least 2 members, got " + std::to_string(members.size()));
    const auto& first = members.front();
    for (std::size_t m = 0; m < members.size(); ++m) {
        members[m].validate();
        require_same_slots(first, members[m], "ensemble member " + std::to_string(m));
        if (members[m].values.dims() != first.values.dims())
            throw AlignmentError("ensemble member " + std::to_string(m) + " dims " +
                                 format_dims(members[m].values.dims()) + " differ from " +
                                 format_dims(first.values.dims()));
    }

    const std::size_t n = first.values.size();
    const std::size_t k = members.size();
    std::vector<float> out(n);
    if (agg == Aggregator::Mean) {
        std::vector<double> acc(n, 0.0);
        for (const auto& m : members)
            for (std::size_t i = 0; i < n; ++i) acc[i] += m.values.value(i);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(acc[i] / static_cast<double>(k));
    } else {
        std::vector<double> column(k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t m = 0; m < k; ++m) column[m] = members[m].values.value(i);
            std::sort(column.begin(), column.end());
            const double mid = k % 2 ? column[k / 2] : 0.5 * (column[k / 2 - 1] + column[k / 2]);
            out[i] = static_cast<float>(mid);
        }
    }
    PredictionSet result;
    result.spec = first.spec;
    result.slots = first.slots;
    result.values = Tensor(first.values.dims(), std::move(out));
    return result;
}

PredictionSet ensemble_of_ensembles(const PredictionSet& a, const PredictionSet& b) {
    const PredictionSet pair[] = {a, b};
    return ensemble(pair, Aggregator::Mean);
}

}  // namespace t4c
