#include "t4c/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "t4c/error.hpp"

namespace t4c {

namespace {

template <typename A, typename B>
double squared_error_sum(std::span<const A> a, std::span<const B> b, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

double squared_error_sum(const Tensor& a, const Tensor& b, std::size_t begin, std::size_t end) {
    if (a.dtype() == DType::U8) {
        if (b.dtype() == DType::U8) return squared_error_sum(a.u8(), b.u8(), begin, end);
        return squared_error_sum(a.u8(), b.f32(), begin, end);
    }
    if (b.dtype() == DType::U8) return squared_error_sum(a.f32(), b.u8(), begin, end);
    return squared_error_sum(a.f32(), b.f32(), begin, end);
}

// Pairwise reduction; the combination tree depends only on the number of
// partials, never on how they were computed.
double tree_sum(std::span<const double> v) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    const std::size_t half = v.size() / 2;
    return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

// Sum of squared errors per block of `block` elements, blocks spread over
// worker threads.
std::vector<double> block_sums(const Tensor& a, const Tensor& b, std::size_t block) {
    const std::size_t blocks = block == 0 ? 0 : a.size() / block;
    std::vector<double> partial(blocks, 0.0);
    const std::size_t workers =
        std::min<std::size_t>(blocks, std::max(1u, std::thread::hardware_concurrency()));
    auto run = [&](std::size_t w) {
        for (std::size_t i = w; i < blocks; i += workers)
            partial[i] = squared_error_sum(a, b, i * block, (i + 1) * block);
    };
    if (workers <= 1 || a.size() < (1u << 16)) {
        for (std::size_t i = 0; i < blocks; ++i) partial[i] = squared_error_sum(a, b, i * block, (i + 1) * block);
        return partial;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
    return partial;
}

}  // namespace

double mse(const Tensor& pred, const Tensor& target) {
    if (pred.dims() != target.dims())
        throw AlignmentError("mse: prediction " + format_dims(pred.dims()) + " vs target " + format_dims(target.dims()));
    if (pred.size() == 0) throw ConfigError("mse of empty tensors");
    const std::size_t block = pred.rank() > 1 ? pred.size() / pred.dim(0) : pred.size();
    const auto partial = block_sums(pred, target, block);
    return tree_sum(partial) / static_cast<double>(pred.size());
}

double mse(const PredictionSet& pred, const PredictionSet& target) {
    require_same_slots(pred, target, "mse");
    return mse(pred.values, target.values);
}

ScoreReport score_run(const CityPredictions& predictions, const CityPredictions& targets,
                      const std::map<std::string, RoadMask>* masks) {
    if (targets.empty()) throw ConfigError("score_run: no target cities");
    std::vector<std::string> gaps;
    auto note_slots = [&](const std::string& city, const std::vector<std::string>& slots, const char* side) {
        for (const auto& s : slots) gaps.push_back("(" + city + ", " + s + ") missing from " + side);
    };
    for (const auto& [city, tgt] : targets) {
        auto it = predictions.find(city);
        if (it == predictions.end()) {
            note_slots(city, tgt.slots, "predictions");
            continue;
        }
        const auto& p = it->second.slots;
        for (const auto& s : tgt.slots)
            if (std::find(p.begin(), p.end(), s) == p.end()) gaps.push_back("(" + city + ", " + s + ") missing from predictions");
        for (const auto& s : p)
            if (std::find(tgt.slots.begin(), tgt.slots.end(), s) == tgt.slots.end())
                gaps.push_back("(" + city + ", " + s + ") missing from targets");
    }
    for (const auto& [city, pred] : predictions)
        if (!targets.count(city)) note_slots(city, pred.slots, "targets");
    if (!gaps.empty()) {
        std::string msg = "score_run coverage gaps:";
        for (const auto& g : gaps) msg += "\n  " + g;
        throw AlignmentError(msg);
    }

    ScoreReport report;
    report.masked = masks != nullptr;
    double weighted = 0.0;
    for (const auto& [city, tgt] : targets) {
        const auto& pred = predictions.at(city);
        CityScore score;
        if (masks) {
            auto m = masks->find(city);
            if (m == masks->end()) throw ConfigError("score_run: no mask for city '" + city + "'");
            score.mse = mse(apply_mask(pred, m->second), tgt);
        } else {
            score.mse = mse(pred, tgt);
        }
        score.element_count = tgt.values.size();
        weighted += score.mse * static_cast<double>(score.element_count);
        report.element_count += score.element_count;
        report.per_city[city] = score;
    }
    report.overall = weighted / static_cast<double>(report.element_count);
    return report;
}

std::string ScoreReport::to_text() const {
    std::vector<std::pair<std::string, CityScore>> rows(per_city.begin(), per_city.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second.mse < b.second.mse; });
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %16s %14s\n", "city", "mse", "elements");
    os << line;
    for (const auto& [city, s] : rows) {
        std::snprintf(line, sizeof line, "%-16s %16.5f %14zu\n", city.c_str(), s.mse, s.element_count);
        os << line;
    }
    std::snprintf(line, sizeof line, "%-16s %16.5f %14zu\n", "overall", overall, element_count);
    os << line;
    os << "masked: " << (masked ? "yes" : "no") << '\n';
    return os.str();
}

std::string ScoreReport::to_json() const {
    nlohmann::ordered_json j;
    j["metric"] = "mse";
    j["lower_is_better"] = true;
    j["masked"] = masked;
    j["overall"] = overall;
    j["element_count"] = element_count;
    auto& cities = j["per_city"] = nlohmann::ordered_json::object();
    for (const auto& [city, s] : per_city) cities[city] = {{"mse", s.mse}, {"element_count", s.element_count}};
    return j.dump(2) + "\n";
}

ScoreReport ScoreReport::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ScoreReport r;
        r.masked = j.at("masked").get<bool>();
        r.overall = j.at("overall").get<double>();
        r.element_count = j.at("element_count").get<std::size_t>();
        for (const auto& [city, s] : j.at("per_city").items())
            r.per_city[city] = {s.at("mse").get<double>(), s.at("element_count").get<std::size_t>()};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("score report: ") + e.what());
    }
}

}  // namespace t4c
