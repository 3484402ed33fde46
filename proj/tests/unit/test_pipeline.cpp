#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "t4c/error.hpp"
#include "t4c/manifest.hpp"
#include "t4c/pipeline.hpp"
#include "t4c/predictors.hpp"
#include "t4c/tensorio.hpp"

using namespace t4c;
namespace fs = std::filesystem;

namespace {

// Writes one city's inputs under `root`: a 30-frame train movie whose
// right-most column never carries traffic, three test slots and targets.
void write_city(const fs::path& root, const std::string& city, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto g = t4c::testing::small_grid(4, 4);
    auto movie = t4c::testing::random_u8(rng, {30, 8, 4, 4}, 200);
    std::vector<std::uint8_t> mv(movie.u8().begin(), movie.u8().end());
    for (std::size_t i = 0; i < mv.size(); ++i)
        if (i % 4 == 3) mv[i] = 0;
    fs::create_directories(root / city);
    write_tensor(Tensor({30, 8, 4, 4}, mv), root / city / "train.t4gr");
    const auto inputs = t4c::testing::random_inputs(rng, g, 3, 60);
    write_slot_dir(inputs, root / city / "inputs");
    auto targets = t4c::testing::random_predictions(rng, g, 3);
    write_slot_dir(targets, root / city / "targets");
}

PipelineManifest base_manifest() {
    PipelineManifest m;
    m.output_dir = "out";
    m.predictors = {parse_predictor("persistence")};
    m.seed = 7;
    for (std::string city : {"alpha", "beta"})
        m.cities.push_back({city, {fs::path(city) / "train.t4gr"}, fs::path(city) / "inputs",
                            fs::path(city) / "targets", {}, {}});
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Fixture {
    t4c::testing::TempDir dir{"pipeline"};
    Fixture() {
        write_city(dir.path(), "alpha", 1);
        write_city(dir.path(), "beta", 2);
    }
    PipelineOptions options() const {
        PipelineOptions o;
        o.base_dir = dir.path();
        return o;
    }
};

}  // namespace

TEST_CASE("manifest text round trip") {
    auto m = base_manifest();
    m.tda = TdaMode::Both;
    m.quantize_u8 = true;
    m.mask_source = MaskSource::TrainPlusTest;
    m.ensemble = Aggregator::Median;
    m.predictors.push_back(parse_predictor("external:preds|run.sh {inputs} {outputs}"));
    m.cities[1].lambda = "beta/lambda.t4gr";
    CHECK(PipelineManifest::parse(m.to_text()) == m);

    CHECK_THROWS_AS(PipelineManifest::parse("[run]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(PipelineManifest::parse("seed = 1\n"), ConfigError);
    CHECK_THROWS_AS(PipelineManifest::parse("[run]\nseed = -3\n"), ConfigError);
    CHECK_THROWS_AS(PipelineManifest::parse("[city a]\n[city a]\n"), ConfigError);
    const auto c = PipelineManifest::parse("# comment\n[run]\ntda = on\n[city x]\ntrain = a.t4gr, b.t4gr\n");
    CHECK(c.tda == TdaMode::On);
    CHECK(c.cities.at(0).train.size() == 2);
}

TEST_CASE("plan lists stages without touching files") {
    auto m = base_manifest();
    m.tda = TdaMode::Both;
    const auto plan = plan_pipeline(m);
    std::string all;
    for (const auto& s : plan) all += s + "\n";
    CHECK(all.find("mask") < all.find("folds"));
    CHECK(all.find("folds") < all.find("lambda fit"));
    CHECK(all.find("combine") != std::string::npos);
    CHECK(plan.back().find("digests") != std::string::npos);
}

TEST_CASE("validation reports every problem before any stage runs") {
    Fixture f;
    auto m = base_manifest();
    m.cities[0].train = {"alpha/absent.t4gr"};
    m.cities[1].targets = "beta/nowhere";
    try {
        run_pipeline(m, f.options());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string w = e.what();
        CHECK(w.find("absent.t4gr") != std::string::npos);
        CHECK(w.find("nowhere") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(f.dir / "out"));
}

TEST_CASE("persistence pipeline writes artifacts, scores and repeats bit-exactly") {
    Fixture f;
    const auto m = base_manifest();
    const auto r1 = run_pipeline(m, f.options());
    REQUIRE(r1.report);
    CHECK(r1.report->per_city.size() == 2);
    CHECK(r1.report->masked);
    CHECK(fs::exists(f.dir / "out/alpha/mask.t4gr"));
    CHECK(fs::exists(f.dir / "out/alpha/folds.txt"));
    CHECK(fs::exists(f.dir / "out/beta/final/slot2.t4gr"));
    CHECK(fs::exists(f.dir / "out/report.json"));
    const auto log1 = slurp(f.dir / "out/digests.log");
    const auto report1 = slurp(f.dir / "out/report.json");
    for (const auto& e : fs::recursive_directory_iterator(f.dir / "out"))
        CHECK(e.path().extension() != ".partial");

    // The masked-out column is zero in every final prediction.
    const auto fin = read_tensor(f.dir / "out/alpha/final/slot0.t4gr");
    for (std::size_t i = 3; i < fin.size(); i += 4) CHECK(fin.value(i) == 0.0);

    const auto r2 = run_pipeline(m, f.options());
    CHECK(*r2.report == *r1.report);
    CHECK(r2.artifacts == r1.artifacts);
    CHECK(slurp(f.dir / "out/digests.log") == log1);
    CHECK(slurp(f.dir / "out/report.json") == report1);
}

TEST_CASE("tda branch with an identity external model restores inputs") {
    Fixture f;
    auto m = base_manifest();
    m.tda = TdaMode::On;
    m.mask_source = MaskSource::None;
    m.quantize_u8 = true;
    m.predictors = {parse_predictor("external:models")};
    for (std::string city : {"alpha", "beta"}) fs::create_directories(f.dir / "models" / city / "tda");

    auto opt = f.options();
    opt.external_runner = [](const ExternalCall& call) {
        const auto g = t4c::testing::small_grid(4, 4);
        write_protocol(predict_persistence(load_input_dir(call.inputs_dir, g)), call.protocol_dir);
    };
    const auto r = run_pipeline(m, opt);
    for (std::string city : {"alpha", "beta"}) {
        const auto inputs = load_input_dir(f.dir / city / "inputs", t4c::testing::small_grid(4, 4));
        const auto direct = predict_persistence(inputs);
        const auto& got = r.final_predictions.at(city);
        REQUIRE(got.values.dims() == direct.values.dims());
        for (std::size_t i = 0; i < got.values.size(); ++i)
            CHECK(std::abs(got.values.value(i) - direct.values.value(i)) <= 1.0);
    }
}

TEST_CASE("ensemble and both-branch pipeline") {
    Fixture f;
    auto m = base_manifest();
    m.tda = TdaMode::Both;
    m.ensemble = Aggregator::Mean;
    m.predictors.push_back(parse_predictor("historical_mean"));
    const auto r = run_pipeline(m, f.options());
    CHECK(fs::exists(f.dir / "out/alpha/plain/ensemble/slot0.t4gr"));
    CHECK(fs::exists(f.dir / "out/alpha/tda/p1_historical_mean/restored/slot0.t4gr"));
    CHECK(fs::exists(f.dir / "out/alpha/combined/slot0.t4gr"));
    CHECK(fs::exists(f.dir / "out/alpha/lambda.t4gr"));
    CHECK(r.report);
}

TEST_CASE("stage failures name the stage and the file") {
    Fixture f;
    auto m = base_manifest();
    m.predictors = {parse_predictor("external:models")};
    for (std::string city : {"alpha", "beta"}) fs::create_directories(f.dir / "models" / city / "plain");
    try {
        run_pipeline(m, f.options());
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(std::string(e.stage()).find("predict[alpha]") != std::string::npos);
        CHECK(e.file().find("models") != std::string::npos);
        CHECK(exit_code(e) != 0);
    }
}

TEST_CASE("external command substitution") {
    t4c::testing::TempDir dir("cmd");
    ExternalCall call{"ci'ty", "plain", dir / "in", dir / "out", "echo {city} > {outputs}.txt"};
    run_external_command(call);
    CHECK(slurp(dir / "out.txt") == "ci'ty\n");
    call.command = "exit 3";
    CHECK_THROWS_AS(run_external_command(call), ProtocolError);
}
