// One line per acceptance criterion; exit status is nonzero if any fails.
// Tolerances and runtime budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"
#include "t4c/dataset.hpp"
#include "t4c/ensemble.hpp"
#include "t4c/error.hpp"
#include "t4c/evaluate.hpp"
#include "t4c/manifest.hpp"
#include "t4c/pipeline.hpp"
#include "t4c/roadmap.hpp"
#include "t4c/tda.hpp"
#include "t4c/tensorio.hpp"

using namespace t4c;
using t4c::testing::random_f32;
using t4c::testing::random_u8;
namespace fs = std::filesystem;

namespace {

constexpr double kLambdaBudgetSec = 1.0;
constexpr double kTdaBudgetSec = 1.0;
constexpr double kTdaF32RelTol = 1e-5;
constexpr double kTdaU8AbsTol = 1.0;
constexpr double kEnsembleRelTol = 1e-6;
constexpr double kMseRelTol = 1e-9;
constexpr int kSanityTrials = 100;

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
   public:
    explicit Check(Outcome& o) : o_(o) {}
    void operator()(bool cond, const std::string& what) {
        if (!cond && o_.pass) {
            o_.pass = false;
            o_.detail = what;
        }
    }

   private:
    Outcome& o_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double got, double want) {
    const double scale = std::max({std::abs(got), std::abs(want), 1.0});
    return std::abs(got - want) / scale;
}

Outcome lambda_rules() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(101);
    const std::size_t n = 1000;
    std::vector<float> train(n), test(n);
    std::uniform_real_distribution<float> v(0.0f, 100.0f);
    std::size_t zeros = 0, sub_one = 0;
    for (std::size_t i = 0; i < n; ++i) {
        train[i] = v(rng);
        test[i] = v(rng);
        if (i % 10 == 0) test[i] = 0.0f;              // planted m_test = 0
        if (i % 10 == 1) test[i] = train[i] * 2.0f;   // planted ratio 0.5
        if (i % 10 == 2) train[i] = 0.0f;             // ratio 0 (or 0/0 at zeros)
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto lam = compute_lambda(MeanMap{Tensor({1, 1, n}, train), 1, ""}, MeanMap{Tensor({1, 1, n}, test), 1, ""});
    const double elapsed = seconds_since(t0);
    for (std::size_t i = 0; i < n; ++i) {
        float want;
        if (test[i] == 0.0f) {
            want = 1.0f;
            ++zeros;
        } else {
            want = train[i] / test[i];
            if (want < 1.0f) {
                want = 1.0f;
                ++sub_one;
            }
        }
        const float got = lam.values.f32()[i];
        check(got == want, "element " + std::to_string(i) + " differs from oracle");
        check(got >= 1.0f, "element below 1");
    }
    check(zeros >= 100 && sub_one >= 200, "planted cases missing");
    check(elapsed < kLambdaBudgetSec, "runtime budget exceeded");
    char buf[128];
    std::snprintf(buf, sizeof buf, "1000 pairs, %zu zero-test, %zu sub-1, %.4f s", zeros, sub_one, elapsed);
    if (o.pass) o.detail = buf;
    return o;
}

Outcome tda_round_trip() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(102);
    const auto t0 = std::chrono::steady_clock::now();
    double worst_rel = 0, worst_abs = 0;
    std::size_t checked_u8 = 0, saturating = 0;
    for (int trial = 0; trial < 4; ++trial) {
        const LambdaMap lam{random_f32(rng, {8, 16, 16}, 1.0f, 4.0f)};
        const auto x = random_f32(rng, {96, 16, 16}, 0.0f, 128.0f);
        const auto back = apply_inverse_lambda(apply_lambda(x, lam), lam);
        for (std::size_t i = 0; i < x.size(); ++i) worst_rel = std::max(worst_rel, rel_err(back.value(i), x.value(i)));

        const auto xu = random_u8(rng, {96, 16, 16}, 128);
        const auto backu = apply_inverse_lambda(apply_lambda(xu, lam, Quantize::U8), lam, Quantize::U8);
        const auto l = lam.values.f32();
        for (std::size_t i = 0; i < xu.size(); ++i) {
            const double li = l[((i / 256) % 8) * 256 + i % 256];
            // The bound is stated for in * lambda <= 255; beyond that the
            // forward step saturates at 255 and information is lost.
            if (xu.value(i) * li > 255.0) {
                ++saturating;
                continue;
            }
            ++checked_u8;
            worst_abs = std::max(worst_abs, std::abs(backu.value(i) - xu.value(i)));
        }
    }
    const double elapsed = seconds_since(t0);
    check(worst_rel <= kTdaF32RelTol, "f32 relative error " + std::to_string(worst_rel));
    check(worst_abs <= kTdaU8AbsTol, "u8 absolute error " + std::to_string(worst_abs));
    check(elapsed < kTdaBudgetSec, "runtime budget exceeded");
    char buf[192];
    std::snprintf(buf, sizeof buf, "f32 max rel %.2e, u8 max abs %.0f over %zu elems (%zu saturating skipped), %.4f s",
                  worst_rel, worst_abs, checked_u8, saturating, elapsed);
    if (o.pass) o.detail = buf;
    return o;
}

Outcome mask_semantics() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t frames = 1 + rng() % 10;
        const auto t = random_u8(rng, {frames, 8, 8, 8}, 255, 0.995);
        std::vector<std::uint8_t> want(64, 0);
        for (std::size_t f = 0; f < frames; ++f)
            for (std::size_t c = 0; c < 8; ++c)
                for (std::size_t p = 0; p < 64; ++p)
                    if (t.u8()[(f * 8 + c) * 64 + p] != 0) want[p] = 1;
        const auto mask = build_mask(std::vector{TrafficMovie::from_frames(t, "m")});
        check(mask.grid == Tensor({8, 8}, want), "mask differs from OR oracle in trial " + std::to_string(trial));

        const auto pred = random_f32(rng, {2, 48, 8, 8});
        const auto once = apply_mask(pred, mask);
        check(apply_mask(once, mask) == once, "apply_mask not idempotent");
        const auto zeroed = apply_mask(pred, RoadMask{Tensor::zeros({8, 8}, DType::U8), MaskProvenance::Train2019});
        check(zeroed == Tensor::zeros({2, 48, 8, 8}, DType::F32), "zero mask does not annihilate");
    }
    if (o.pass) o.detail = "50 movies exact; idempotent; zero mask annihilates";
    return o;
}

PredictionSet as_set(Tensor values) {
    PredictionSet p;
    p.spec = t4c::testing::small_grid(4, 4);
    p.slots = {"a", "b"};
    p.values = std::move(values);
    return p;
}

Outcome ensemble_algebra() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(104);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PredictionSet> m;
        for (int k = 0; k < 3; ++k) m.push_back(as_set(random_f32(rng, {2, 48, 4, 4})));
        const auto mean = ensemble(m, Aggregator::Mean);
        const auto median = ensemble(m, Aggregator::Median);
        for (std::size_t i = 0; i < mean.values.size(); ++i) {
            double v[3] = {m[0].values.value(i), m[1].values.value(i), m[2].values.value(i)};
            std::sort(v, v + 3);
            const double want_mean = (v[0] + v[1] + v[2]) / 3.0;
            worst = std::max(worst, rel_err(mean.values.value(i), want_mean));
            worst = std::max(worst, rel_err(median.values.value(i), v[1]));
            check(mean.values.value(i) >= v[0] && mean.values.value(i) <= v[2], "mean outside envelope");
            check(median.values.value(i) >= v[0] && median.values.value(i) <= v[2], "median outside envelope");
        }
        std::vector<PredictionSet> four{m[0], m[1], m[2], as_set(random_f32(rng, {2, 48, 4, 4}))};
        const auto nested = ensemble_of_ensembles(ensemble(std::span(four).first(2)), ensemble(std::span(four).last(2)));
        const auto flat = ensemble(four);
        for (std::size_t i = 0; i < flat.values.size(); ++i)
            worst = std::max(worst, rel_err(nested.values.value(i), flat.values.value(i)));
    }
    check(worst <= kEnsembleRelTol, "relative error " + std::to_string(worst));
    char buf[96];
    std::snprintf(buf, sizeof buf, "max rel err %.2e; envelope exact", worst);
    if (o.pass) o.detail = buf;
    return o;
}

Outcome mse_oracle() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(105);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_f32(rng, {2, 48, 8, 8});
        const auto b = random_f32(rng, {2, 48, 8, 8});
        double s = 0;
        for (std::size_t i = 0; i < 2 * 48 * 8 * 8; ++i) {
            const double d = double(a.f32()[i]) - double(b.f32()[i]);
            s += d * d;
        }
        const double want = s / (2 * 48 * 8 * 8);
        worst = std::max(worst, std::abs(mse(a, b) - want) / want);
        check(mse(a, a) == 0.0, "mse(p, p) != 0");
    }
    check(worst <= kMseRelTol, "relative error " + std::to_string(worst));
    ScoreReport r;
    r.per_city = {{"high", {30.0, 1}}, {"low", {10.0, 1}}, {"mid", {20.0, 1}}};
    const auto text = r.to_text();
    check(text.find("low") < text.find("mid") && text.find("mid") < text.find("high"),
          "report not sorted lowest first");
    check(r.to_json().find("\"lower_is_better\": true") != std::string::npos, "report lacks metric direction");
    char buf[96];
    std::snprintf(buf, sizeof buf, "max rel err %.2e; mse(p,p)=0; ascending report", worst);
    if (o.pass) o.detail = buf;
    return o;
}

Outcome dataset_rules() {
    Outcome o;
    Check check(o);
    const auto g = t4c::testing::small_grid(2, 2);
    std::vector<std::uint8_t> data;
    for (std::size_t f = 0; f < 40; ++f) data.insert(data.end(), g.frame_size(), static_cast<std::uint8_t>(100 + f));
    const auto movie = TrafficMovie::from_frames(Tensor({40, 8, 2, 2}, data), "m", g);
    const auto samples = enumerate_samples(movie);
    check(samples.size() == 17, "expected 17 windows in 40 frames");
    for (const auto& s : samples) {
        const auto pair = extract_sample(movie, s);
        for (std::size_t k = 0; k < 6; ++k) {
            const double want = 100.0 + double(s.start_frame) + 11.0 + double(kTargetOffsets[k]);
            check(pair.target.value(k * g.frame_size()) == want, "target sentinel mismatch");
        }
    }
    check(std::vector<std::size_t>(std::begin(kTargetOffsets), std::end(kTargetOffsets)) ==
              std::vector<std::size_t>{1, 2, 3, 6, 9, 12},
          "offset table");
    for (std::size_t n : {1u, 4u, 7u, 10u, 17u, 101u}) {
        std::vector<SampleIndex> s;
        for (std::size_t i = 0; i < n; ++i) s.push_back({"m", i});
        const auto a = make_folds(s, 2024);
        const auto sizes = a.fold_sizes();
        check(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1,
              "fold sizes differ by more than 1");
        std::set<std::size_t> seen;
        for (int f = 0; f < kFoldCount; ++f)
            for (const auto& x : a.fold(f)) seen.insert(x.start_frame);
        check(seen.size() == n, "folds do not partition");
        check(make_folds(s, 2024).to_text() == a.to_text(), "same seed, different split");
    }
    if (o.pass) o.detail = "sentinels at +1,+2,+3,+6,+9,+12; folds balanced; seed-deterministic";
    return o;
}

Outcome file_format() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(106);
    t4c::testing::TempDir dir("accept_io");
    for (int i = 0; i < 1000; ++i) {
        Dims d;
        const std::size_t rank = 1 + rng() % 4;
        for (std::size_t r = 0; r < rank; ++r) d.push_back(rng() % 6);
        const Tensor t = (i % 2) ? random_f32(rng, d, -1e6f, 1e6f) : random_u8(rng, d);
        const auto path = dir / ("t" + std::to_string(i % 8) + ".t4gr");
        write_tensor(t, path);
        const auto back = read_tensor(path);
        check(back == t, "round trip mismatch at tensor " + std::to_string(i));
    }
    // Corrupted headers: every single-byte change within the header region,
    // plus every truncation length.
    const auto good = encode_tensor(random_u8(rng, {2, 3, 4}));
    std::size_t rejected = 0, accepted = 0;
    auto probe = [&](const std::vector<std::byte>& bytes) {
        try {
            decode_tensor(bytes);
            ++accepted;
        } catch (const FormatError&) {
            ++rejected;
        } catch (...) {
            check(false, "non-format exception on corrupted input");
        }
    };
    const std::size_t header = kT4grFixedHeader + 3 * 4;
    for (std::size_t pos = 0; pos < header; ++pos)
        for (int v = 0; v < 256; ++v) {
            auto bytes = good;
            if (bytes[pos] == std::byte(v)) continue;
            bytes[pos] = std::byte(v);
            probe(bytes);
        }
    for (std::size_t len = 0; len < good.size(); ++len) probe({good.begin(), good.begin() + len});
    check(accepted == 0, std::to_string(accepted) + " corrupted inputs decoded");
    char buf[96];
    std::snprintf(buf, sizeof buf, "1000 round trips; %zu corrupted headers rejected", rejected);
    if (o.pass) o.detail = buf;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome pipeline_determinism() {
    Outcome o;
    Check check(o);
    t4c::testing::TempDir dir("accept_pipe");
    std::mt19937_64 rng(107);
    const auto g = t4c::testing::small_grid(6, 5);
    write_tensor(random_u8(rng, {30, 8, 6, 5}, 255, 0.5), dir / "train.t4gr");
    write_slot_dir(t4c::testing::random_inputs(rng, g, 4), dir / "inputs");
    write_slot_dir(t4c::testing::random_predictions(rng, g, 4), dir / "targets");

    auto m = PipelineManifest::parse(
        "[run]\npredictor = persistence\nseed = 3\n"
        "[city c]\ntrain = train.t4gr\ntest_inputs = inputs\ntargets = targets\n");
    PipelineOptions opt;
    opt.base_dir = dir.path();
    m.output_dir = "run1";
    const auto r1 = run_pipeline(m, opt);
    m.output_dir = "run2";
    const auto r2 = run_pipeline(m, opt);
    check(r1.report && r2.report && *r1.report == *r2.report, "score reports differ");
    check(r1.artifacts == r2.artifacts, "artifact digests differ");
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "run1")) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto twin = dir / "run2" / fs::relative(e.path(), dir / "run1");
        check(fs::exists(twin) && slurp(e.path()) == slurp(twin), "file differs: " + e.path().string());
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu files bit-identical; reports equal", files);
    if (o.pass) o.detail = buf;
    return o;
}

Outcome sanity_ordering() {
    Outcome o;
    Check check(o);
    std::mt19937_64 rng(108);
    const auto g = t4c::testing::small_grid(8, 8);
    int wins = 0;
    for (int trial = 0; trial < kSanityTrials; ++trial) {
        const RoadMask mask{random_u8(rng, {8, 8}, 1), MaskProvenance::Train2019};
        if (mask.road_pixels() == 64) {
            --trial;  // no off-road pixels to test on; redraw
            continue;
        }
        const auto truth = apply_mask(t4c::testing::random_predictions(rng, g, 2), mask);
        // On-road: truth plus small noise. Off-road: positive noise.
        auto pred = t4c::testing::random_predictions(rng, g, 2);
        std::vector<float> v(pred.values.f32().begin(), pred.values.f32().end());
        std::uniform_real_distribution<float> small(-5.0f, 5.0f), off(1.0f, 50.0f);
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = mask.grid.u8()[i % 64] ? std::max(0.0f, truth.values.f32()[i] + small(rng)) : off(rng);
        pred.values = Tensor(pred.values.dims(), v);
        CityPredictions p{{"c", pred}}, t{{"c", truth}};
        std::map<std::string, RoadMask> masks{{"c", mask}};
        if (score_run(p, t, &masks).overall < score_run(p, t).overall) ++wins;
    }
    check(wins == kSanityTrials, std::to_string(wins) + "/100 trials");
    if (o.pass) o.detail = std::to_string(wins) + "/" + std::to_string(kSanityTrials) + " trials masked < unmasked";
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"lambda rules", lambda_rules},
        {"tda round trip", tda_round_trip},
        {"mask semantics", mask_semantics},
        {"ensemble", ensemble_algebra},
        {"mse", mse_oracle},
        {"dataset", dataset_rules},
        {"file format", file_format},
        {"pipeline determinism", pipeline_determinism},
        {"sanity ordering", sanity_ordering},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %-22s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
    return failed ? 1 : 0;
}
