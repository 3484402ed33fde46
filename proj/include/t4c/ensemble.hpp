#pragma once

#include <span>
#include <string>

#include "t4c/grid.hpp"

namespace t4c {

enum class Aggregator { Mean, Median };

const char* aggregator_name(Aggregator agg) noexcept;
Aggregator parse_aggregator(const std::string& name);

// Element-wise mean or median over >= 2 members with identical slots and
// dims. Means accumulate in double in member order; an even-sized median
// averages the two middle values. Output is f32.
PredictionSet ensemble(std::span<const PredictionSet> members, Aggregator agg = Aggregator::Mean);

// Equal-weight mean of two finished ensembles.
PredictionSet ensemble_of_ensembles(const PredictionSet& a, const PredictionSet& b);

}  // namespace t4c
