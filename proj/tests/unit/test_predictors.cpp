#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "t4c/dataset.hpp"
#include "t4c/error.hpp"
#include "t4c/predictors.hpp"
#include "t4c/tensorio.hpp"

using namespace t4c;
using t4c::testing::random_f32;
using t4c::testing::random_u8;

TEST_CASE("predictor spec parsing") {
    CHECK(parse_predictor("persistence").kind == PredictorKind::Persistence);
    CHECK(parse_predictor("historical_mean").kind == PredictorKind::HistoricalMean);
    const auto e = parse_predictor("external:models/unet|python run.py {inputs} {outputs}");
    CHECK(e.kind == PredictorKind::External);
    CHECK(e.protocol_dir == "models/unet");
    CHECK(e.command == "python run.py {inputs} {outputs}");
    CHECK(parse_predictor(format_predictor(e)) == e);
    CHECK_THROWS_AS(parse_predictor("external:"), ConfigError);
    CHECK_THROWS_AS(parse_predictor("lstm"), ConfigError);
}

TEST_CASE("persistence repeats the last input frame") {
    const auto g = t4c::testing::small_grid(2, 3);
    std::mt19937_64 rng(51);
    auto in = random_u8(rng, {g.input_channels(), 2, 3});
    const auto out = predict_persistence(in, g);
    CHECK(out.dtype() == DType::U8);
    CHECK(out.dims() == Dims{g.output_channels(), 2, 3});
    const std::size_t frame = g.frame_size();
    for (std::size_t k = 0; k < g.t_out; ++k)
        for (std::size_t i = 0; i < frame; ++i) CHECK(out.value(k * frame + i) == in.value(11 * frame + i));

    const auto f = predict_persistence(in.to_f32(), g);
    CHECK(f.dtype() == DType::F32);
    CHECK(f == out.to_f32());
    CHECK_THROWS_AS(predict_persistence(Tensor::zeros({95, 2, 3}, DType::U8), g), ShapeError);

    const auto set = t4c::testing::random_inputs(rng, g, 3);
    const auto preds = predict_persistence(set);
    CHECK(preds.slots == set.slots);
    for (std::size_t s = 0; s < 3; ++s) CHECK(preds.slot(s) == predict_persistence(set.slot(s), g));
}

TEST_CASE("historical mean broadcasts over horizons") {
    std::vector<float> m(8 * 2, 5.0f);
    m[3] = 2.5f;
    const MeanMap mean{Tensor({8, 1, 2}, m), 10, "2019"};
    const auto f = predict_historical_mean(mean, 6);
    CHECK(f.dims() == Dims{48, 1, 2});
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < 16; ++i) CHECK(f.value(k * 16 + i) == m[i]);
    const auto u = predict_historical_mean(mean, 6, Quantize::U8);
    CHECK(u.u8()[0] == 5);
    CHECK(u.u8()[3] == 3);
    CHECK(u.u8()[16 + 3] == 3);

    std::mt19937_64 rng(52);
    const auto g = t4c::testing::small_grid(1, 2);
    const auto preds = predict_historical_mean(t4c::testing::random_inputs(rng, g, 2), mean);
    CHECK(preds.slot(0) == f);
    CHECK(preds.slot(1) == f);
}

TEST_CASE("external file protocol") {
    std::mt19937_64 rng(53);
    const auto g = t4c::testing::small_grid(3, 2);
    const auto pred = t4c::testing::random_predictions(rng, g, 3);
    t4c::testing::TempDir dir("protocol");

    SUBCASE("write then read is the identity") {
        write_protocol(pred, dir.path());
        const auto back = run_external(pred.slots, dir.path(), g);
        CHECK(back.values == pred.values);
        CHECK(back.slots == pred.slots);
    }
    SUBCASE("[T, C, H, W] files are accepted") {
        for (std::size_t i = 0; i < 3; ++i) write_tensor(unshape(pred.slot(i), 8), dir / (pred.slots[i] + ".t4gr"));
        CHECK(run_external(pred.slots, dir.path(), g).values == pred.values);
    }
    SUBCASE("extra files are ignored") {
        write_protocol(pred, dir.path());
        write_tensor(Tensor::zeros({1}, DType::U8), dir / "unrelated.t4gr");
        write_file_bytes(dir / "notes.txt", {});
        CHECK(run_external(pred.slots, dir.path(), g).values == pred.values);
    }
    SUBCASE("missing slots are all named") {
        write_tensor(pred.slot(1), dir / "slot1.t4gr");
        try {
            run_external(pred.slots, dir.path(), g);
            FAIL("expected ProtocolError");
        } catch (const ProtocolError& e) {
            const std::string what = e.what();
            CHECK(what.find("slot0") != std::string::npos);
            CHECK(what.find("slot2") != std::string::npos);
            CHECK(what.find("slot1") == std::string::npos);
        }
    }
    SUBCASE("malformed file names the file") {
        write_protocol(pred, dir.path());
        write_tensor(Tensor::zeros({47, 3, 2}, DType::F32), dir / "slot2.t4gr");
        try {
            run_external(pred.slots, dir.path(), g);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("slot2.t4gr") != std::string::npos);
        }
    }
    CHECK_THROWS_AS(run_external(pred.slots, dir / "absent", g), ProtocolError);
}

TEST_CASE("pseudo labels") {
    std::mt19937_64 rng(54);
    const auto g = t4c::testing::small_grid(2, 2);
    const auto inputs = t4c::testing::random_inputs(rng, g, 3);
    auto preds = t4c::testing::random_predictions(rng, g, 3);
    std::vector<float> v(preds.values.f32().begin(), preds.values.f32().end());
    v[0] = 254.6f;
    v[1] = 300.0f;
    v[2] = -4.0f;
    // Sentinel: slot k's prediction is filled with k + 1 from element 3 on in its block.
    const std::size_t block = g.output_channels() * 4;
    for (std::size_t k = 0; k < 3; ++k) v[k * block + 3] = static_cast<float>(k + 1);
    preds.values = Tensor(preds.values.dims(), v);

    const auto set = build_pseudo_labels(inputs, preds, "unet");
    REQUIRE(set.pairs.size() == 3);
    CHECK(set.source_model == "unet");
    CHECK(set.pairs[0].target.u8()[0] == 255);
    CHECK(set.pairs[0].target.u8()[1] == 255);
    CHECK(set.pairs[0].target.u8()[2] == 0);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(set.pairs[k].target.u8()[3] == k + 1);
        CHECK(set.pairs[k].input == inputs.slot(k));
        CHECK_NOTHROW(validate_training_pair(set.pairs[k], g));
    }

    t4c::testing::TempDir dir("pseudo");
    write_pseudo_labels(set, dir.path());
    CHECK(read_tensor(dir / "targets/slot2.t4gr") == set.pairs[2].target);
    CHECK(read_tensor(dir / "inputs/slot0.t4gr") == inputs.slot(0));

    auto other = preds;
    other.slots[1] = "elsewhere";
    CHECK_THROWS_AS(build_pseudo_labels(inputs, other), AlignmentError);
}
