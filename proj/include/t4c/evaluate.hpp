#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "t4c/grid.hpp"
#include "t4c/roadmap.hpp"

namespace t4c {

// Mean of squared differences over every element, accumulated in double.
double mse(const Tensor& pred, const Tensor& target);
double mse(const PredictionSet& pred, const PredictionSet& target);

struct CityScore {
    double mse = 0.0;
    std::size_t element_count = 0;

    bool operator==(const CityScore&) const = default;
};

struct ScoreReport {
    std::map<std::string, CityScore> per_city;
    double overall = 0.0;  // element-count weighted
    std::size_t element_count = 0;
    bool masked = false;

    // Fixed-width table, cities ordered best (lowest MSE) first, 5 decimals.
    std::string to_text() const;
    std::string to_json() const;
    static ScoreReport from_json(const std::string& text);

    bool operator==(const ScoreReport&) const = default;
};

using CityPredictions = std::map<std::string, PredictionSet>;

// Scores every city present in `targets`. Predictions must cover exactly the
// same (city, slot) pairs; otherwise an AlignmentError lists the gaps. When
// `masks` is given, each city's predictions are masked before scoring.
ScoreReport score_run(const CityPredictions& predictions, const CityPredictions& targets,
                      const std::map<std::string, RoadMask>* masks = nullptr);

}  // namespace t4c
