// t4c: command-line front end for the traffic-grid toolkit.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "t4c/dataset.hpp"
#include "t4c/digest.hpp"
#include "t4c/ensemble.hpp"
#include "t4c/error.hpp"
#include "t4c/evaluate.hpp"
#include "t4c/pipeline.hpp"
#include "t4c/predictors.hpp"
#include "t4c/roadmap.hpp"
#include "t4c/tda.hpp"
#include "t4c/tensorio.hpp"

namespace fs = std::filesystem;
using namespace t4c;

namespace {

// Storage for every option; subcommand callbacks read from here.
struct Args {
    std::string in, out, dims, dtype = "u8";
    std::vector<std::string> inputs;
    std::size_t channels = 8, t_in = 12, t_out = 6;
    std::size_t height = 0, width = 0;
    int fill = 0;
    std::string provenance = "train_2019";
    std::string mask, lambda, pred, target, report, json, city = "city", agg = "mean", source_model;
    std::vector<std::string> train, test;
    bool quantize = false, dry_run = false;
    std::uint64_t seed = 0;
    std::size_t stride = 1;
    int validation_fold = 0;
    std::size_t rounds = 1;

    GridSpec grid() const {
        GridSpec g;
        g.channels = channels;
        g.t_in = t_in;
        g.t_out = t_out;
        return g;
    }
};

void add_grid(CLI::App* app, Args& a) {
    app->add_option("--channels", a.channels, "Channels per frame")->capture_default_str();
    app->add_option("--t-in", a.t_in, "Input frames per slot")->capture_default_str();
    app->add_option("--t-out", a.t_out, "Output frames per slot")->capture_default_str();
}

// Applies fn to a single tensor file, or to every .t4gr file of a directory.
void map_tensors(const fs::path& in, const fs::path& out, const std::function<Tensor(const Tensor&)>& fn) {
    if (fs::is_directory(in)) {
        fs::create_directories(out);
        for (const auto& slot : list_slots(in))
            write_tensor(fn(read_tensor(in / (slot + ".t4gr"))), out / (slot + ".t4gr"));
        return;
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_tensor(fn(read_tensor(in)), out);
}

PredictionSet load_predictions(const fs::path& p, const GridSpec& g) {
    if (fs::is_directory(p)) return load_prediction_dir(p, g);
    return prediction_set_from_tensor(read_tensor(p), g);
}

void save_predictions(const PredictionSet& s, const fs::path& p) {
    if (p.extension() == ".t4gr") {
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_tensor(s.values, p);
    } else {
        write_slot_dir(s, p);
    }
}

std::vector<Tensor> read_all(const std::vector<std::string>& paths) {
    std::vector<Tensor> out;
    for (const auto& p : paths) {
        if (fs::is_directory(p))
            for (const auto& slot : list_slots(p)) out.push_back(read_tensor(fs::path(p) / (slot + ".t4gr")));
        else
            out.push_back(read_tensor(p));
    }
    return out;
}

// City -> prediction set. Subdirectories are cities; otherwise the directory
// itself is the single city `fallback`.
CityPredictions load_cities(const fs::path& dir, const GridSpec& g, const std::string& fallback) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    CityPredictions out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out[e.path().filename().string()] = load_prediction_dir(e.path(), g);
    if (out.empty()) out[fallback] = load_prediction_dir(dir, g);
    return out;
}

Dims parse_dims(const std::string& s) {
    Dims d;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            d.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw ConfigError("bad extent '" + item + "' in --dims");
        }
    }
    if (d.empty()) throw ConfigError("empty --dims");
    return d;
}

void setup_convert(CLI::App& app, Args& a) {
    auto* convert = app.add_subcommand("convert", "Convert, reshape, pad and inspect T4GR tensors");
    convert->require_subcommand(1);

    auto io = [&a](CLI::App* sub) {
        sub->add_option("input", a.in, "Tensor file or directory of slot files")->required();
        sub->add_option("output", a.out)->required();
    };

    auto* raw = convert->add_subcommand("raw2t4gr", "Wrap a raw row-major little-endian buffer");
    io(raw);
    raw->add_option("--dims", a.dims, "Comma-separated extents, e.g. 12,8,495,436")->required();
    raw->add_option("--dtype", a.dtype)->check(CLI::IsMember({"u8", "f32"}))->capture_default_str();
    raw->callback([&a] {
        const Dims d = parse_dims(a.dims);
        const bool is_u8 = a.dtype == "u8";
        const auto bytes = read_file_bytes(a.in);
        if (bytes.size() != element_count(d) * (is_u8 ? 1 : 4))
            throw FormatError(a.in + ": " + std::to_string(bytes.size()) + " bytes do not match " + format_dims(d) +
                              " " + a.dtype);
        std::vector<std::byte> buf{std::byte{'T'}, std::byte{'4'}, std::byte{'G'}, std::byte{'R'},
                                   std::byte{kT4grVersion}, std::byte{is_u8 ? std::uint8_t{0} : std::uint8_t{1}},
                                   static_cast<std::byte>(d.size()), std::byte{0}};
        for (auto e : d)
            for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::byte>((e >> (8 * i)) & 0xFF));
        buf.insert(buf.end(), bytes.begin(), bytes.end());
        write_tensor(decode_tensor(buf), a.out);
    });

    auto* to_raw = convert->add_subcommand("t4gr2raw", "Strip the header, leaving the raw payload");
    io(to_raw);
    to_raw->callback([&a] {
        const auto bytes = encode_tensor(read_tensor(a.in));
        const std::size_t header = kT4grFixedHeader + 4 * std::to_integer<std::size_t>(bytes[6]);
        write_file_bytes(a.out, std::span(bytes).subspan(header));
    });

    auto* reshape = convert->add_subcommand("reshape", "[T, C, H, W] -> [T*C, H, W]");
    io(reshape);
    reshape->callback([&a] { map_tensors(a.in, a.out, [](const Tensor& t) { return reshape_for_model(t); }); });

    auto* un = convert->add_subcommand("unshape", "[T*C, H, W] -> [T, C, H, W]");
    io(un);
    un->add_option("--channels", a.channels)->capture_default_str();
    un->callback([&a] { map_tensors(a.in, a.out, [&a](const Tensor& t) { return unshape(t, a.channels); }); });

    auto* padc = convert->add_subcommand("pad", "Pad trailing H, W; content stays top-left");
    io(padc);
    padc->add_option("--height", a.height)->required();
    padc->add_option("--width", a.width)->required();
    padc->add_option("--fill", a.fill)->check(CLI::Range(0, 255))->capture_default_str();
    padc->callback([&a] {
        map_tensors(a.in, a.out,
                    [&a](const Tensor& t) { return pad(t, a.height, a.width, static_cast<std::uint8_t>(a.fill)); });
    });

    auto* cropc = convert->add_subcommand("crop", "Keep the top-left H x W corner");
    io(cropc);
    cropc->add_option("--height", a.height)->required();
    cropc->add_option("--width", a.width)->required();
    cropc->callback([&a] { map_tensors(a.in, a.out, [&a](const Tensor& t) { return crop(t, a.height, a.width); }); });

    auto* quant = convert->add_subcommand("quantize", "Clip to [0, 255] and round half-up to u8");
    io(quant);
    quant->callback([&a] { map_tensors(a.in, a.out, [](const Tensor& t) { return t.to_u8(); }); });

    auto* info = convert->add_subcommand("info", "Print dtype, dims and content digest");
    info->add_option("input", a.in)->required();
    info->callback([&a] {
        const auto t = read_tensor(a.in);
        std::cout << a.in << '\t' << dtype_name(t.dtype()) << '\t' << format_dims(t.dims()) << '\t'
                  << file_digest(a.in) << '\n';
    });
}

void setup_mask(CLI::App& app, Args& a) {
    auto* mask = app.add_subcommand("mask", "Build, combine and apply road masks");
    mask->require_subcommand(1);

    auto* build = mask->add_subcommand("build", "Mask of pixels with any nonzero value in the given tensors");
    build->add_option("sources", a.inputs, "Movies, model inputs, or directories of slot files")->required();
    build->add_option("-o,--output", a.out)->required();
    build->add_option("--provenance", a.provenance)
        ->check(CLI::IsMember({"train_2019", "train_plus_test", "organizer_static"}))
        ->capture_default_str();
    build->callback([&a] {
        const auto sources = read_all(a.inputs);
        export_mask(build_mask_from_tensors(sources, parse_provenance(a.provenance)), a.out);
    });

    auto* uni = mask->add_subcommand("union", "Element-wise OR of two masks");
    uni->add_option("inputs", a.inputs)->required()->expected(2);
    uni->add_option("-o,--output", a.out)->required();
    uni->callback([&a] {
        export_mask(union_masks(import_external_mask(a.inputs[0]), import_external_mask(a.inputs[1])), a.out);
    });

    auto* apply = mask->add_subcommand("apply", "Zero predictions off the road mask");
    apply->add_option("input", a.in, "Tensor file or directory of slot files")->required();
    apply->add_option("-o,--output", a.out)->required();
    apply->add_option("--mask", a.mask)->required();
    apply->callback([&a] {
        const auto m = import_external_mask(a.mask);
        map_tensors(a.in, a.out, [&m](const Tensor& t) { return apply_mask(t, m); });
    });

    auto* imp = mask->add_subcommand("import", "Binarize an externally supplied [H, W] mask");
    imp->add_option("input", a.in)->required();
    imp->add_option("-o,--output", a.out)->required();
    imp->callback([&a] { export_mask(import_external_mask(a.in), a.out); });
}

void setup_tda(CLI::App& app, Args& a) {
    auto* tda = app.add_subcommand("tda", "Fit and apply the per-pixel lambda scaling");
    tda->require_subcommand(1);

    auto* fit = tda->add_subcommand("fit", "lambda = mean(train) / mean(test inputs), floored at 1");
    fit->add_option("--train", a.train, "Training movies [T, C, H, W]")->required();
    fit->add_option("--test", a.test, "Test inputs: files or slot directories")->required();
    fit->add_option("-o,--output", a.out)->required();
    fit->add_option("--channels", a.channels)->capture_default_str();
    fit->callback([&a] {
        const auto train = read_all(a.train);
        const auto test = read_all(a.test);
        const auto l = compute_lambda(mean_map_from_tensors(train, a.channels, "train"),
                                      mean_map_from_tensors(test, a.channels, "test"));
        save_lambda(l, a.out);
    });

    for (bool inverse : {false, true}) {
        auto* sub = tda->add_subcommand(inverse ? "invert" : "apply",
                                        inverse ? "Multiply by 1/lambda" : "Multiply by lambda");
        sub->add_option("input", a.in, "Tensor file or directory of slot files")->required();
        sub->add_option("output", a.out)->required();
        sub->add_option("--lambda", a.lambda)->required();
        sub->add_flag("--quantize-u8", a.quantize, "Clip to [0, 255] and round to u8");
        sub->callback([&a, inverse] {
            const auto l = load_lambda(a.lambda);
            const auto mode = a.quantize ? Quantize::U8 : Quantize::None;
            map_tensors(a.in, a.out, [&](const Tensor& t) {
                return inverse ? apply_inverse_lambda(t, l, mode) : apply_lambda(t, l, mode);
            });
        });
    }
}

void setup_predict(CLI::App& app, Args& a) {
    auto* predict = app.add_subcommand("predict", "Baseline predictors and the external file protocol");
    predict->require_subcommand(1);

    auto* persist = predict->add_subcommand("persistence", "Repeat the last input frame for every horizon");
    persist->add_option("--inputs", a.in, "Directory of <slot>.t4gr inputs")->required();
    persist->add_option("-o,--output", a.out, "Protocol directory to write")->required();
    add_grid(persist, a);
    persist->callback([&a] { write_protocol(predict_persistence(load_input_dir(a.in, a.grid())), a.out); });

    auto* mean = predict->add_subcommand("mean", "Per-pixel historical mean of training movies");
    mean->add_option("--inputs", a.in, "Directory of <slot>.t4gr inputs (slot ids)")->required();
    mean->add_option("--train", a.train, "Training movies")->required();
    mean->add_option("-o,--output", a.out)->required();
    mean->add_flag("--quantize-u8", a.quantize);
    add_grid(mean, a);
    mean->callback([&a] {
        const auto inputs = load_input_dir(a.in, a.grid());
        const auto mm = mean_map_from_tensors(read_all(a.train), a.channels, "train");
        write_protocol(predict_historical_mean(inputs, mm, a.quantize ? Quantize::U8 : Quantize::None), a.out);
    });

    auto* ext = predict->add_subcommand("external", "Collect an external model's protocol directory");
    ext->add_option("--inputs", a.in, "Directory of <slot>.t4gr inputs (slot ids)")->required();
    ext->add_option("--protocol", a.pred, "Directory the model wrote <slot>.t4gr files into")->required();
    ext->add_option("-o,--output", a.out, "Prediction file (.t4gr) or directory")->required();
    add_grid(ext, a);
    ext->callback([&a] {
        const auto inputs = load_input_dir(a.in, a.grid());
        save_predictions(run_external(inputs.slots, a.pred, inputs.spec), a.out);
    });

    auto* pseudo = predict->add_subcommand("pseudo-labels", "Experimental: pair inputs with quantized predictions");
    pseudo->add_option("--inputs", a.in)->required();
    pseudo->add_option("--pred", a.pred)->required();
    pseudo->add_option("-o,--output", a.out)->required();
    pseudo->add_option("--source-model", a.source_model);
    pseudo->add_option("--rounds", a.rounds, "Labeling rounds recorded for the trainer")->capture_default_str();
    add_grid(pseudo, a);
    pseudo->callback([&a] {
        std::cerr << "note: pseudo-labeling is experimental\n";
        const auto inputs = load_input_dir(a.in, a.grid());
        auto preds = load_prediction_dir(a.pred, a.grid());
        const auto set = build_pseudo_labels(inputs, preds, a.source_model);
        write_pseudo_labels(set, a.out);
        std::ofstream(fs::path(a.out) / "source.txt")
            << "source_model = " << set.source_model << "\nrounds = " << a.rounds << '\n';
    });
}

void setup_ensemble(CLI::App& app, Args& a) {
    auto* ens = app.add_subcommand("ensemble", "Mean or median of prediction sets");
    ens->add_option("members", a.inputs, "Prediction files or directories (>= 2)")->required();
    ens->add_option("--agg", a.agg)->check(CLI::IsMember({"mean", "median"}))->capture_default_str();
    ens->add_option("-o,--output", a.out)->required();
    add_grid(ens, a);
    ens->callback([&a] {
        std::vector<PredictionSet> members;
        for (const auto& m : a.inputs) members.push_back(load_predictions(m, a.grid()));
        save_predictions(ensemble(members, parse_aggregator(a.agg)), a.out);
    });
}

void setup_score(CLI::App& app, Args& a) {
    auto* score = app.add_subcommand("score", "MSE of predictions against targets");
    score->add_option("--pred", a.pred, "Prediction directory (or one subdirectory per city)")->required();
    score->add_option("--target", a.target, "Target directory with the same layout")->required();
    score->add_option("--mask", a.mask, "Mask file, or directory of <city>.t4gr masks");
    score->add_option("--city", a.city, "City name for a flat directory")->capture_default_str();
    score->add_option("--report", a.report, "Write the text table here");
    score->add_option("--json", a.json, "Write the JSON report here");
    add_grid(score, a);
    score->callback([&a] {
        const auto preds = load_cities(a.pred, a.grid(), a.city);
        const auto targets = load_cities(a.target, a.grid(), a.city);
        std::map<std::string, RoadMask> masks;
        if (!a.mask.empty())
            for (const auto& [city, _] : targets)
                masks[city] = import_external_mask(fs::is_directory(a.mask) ? fs::path(a.mask) / (city + ".t4gr")
                                                                            : fs::path(a.mask));
        const auto report = score_run(preds, targets, a.mask.empty() ? nullptr : &masks);
        std::cout << report.to_text();
        if (!a.report.empty()) std::ofstream(a.report) << report.to_text();
        if (!a.json.empty()) std::ofstream(a.json) << report.to_json();
    });
}

void setup_folds(CLI::App& app, Args& a) {
    auto* folds = app.add_subcommand("folds", "Enumerate samples and split them into 4 seeded folds");
    folds->add_option("movies", a.inputs, "Training movies [T, C, H, W]")->required();
    folds->add_option("--seed", a.seed)->capture_default_str();
    folds->add_option("--stride", a.stride)->capture_default_str();
    folds->add_option("--validation-fold", a.validation_fold)->check(CLI::Range(0, 3))->capture_default_str();
    folds->add_option("-o,--output", a.out)->required();
    add_grid(folds, a);
    folds->callback([&a] {
        std::vector<SampleIndex> samples;
        for (const auto& p : a.inputs) {
            auto movie = load_movie(p, fs::path(p).stem().string(), a.grid());
            auto s = enumerate_samples(movie, a.stride);
            samples.insert(samples.end(), s.begin(), s.end());
        }
        const auto split = make_folds(samples, a.seed, a.validation_fold);
        std::ofstream(a.out) << split.to_text();
        const auto sizes = split.fold_sizes();
        std::cout << samples.size() << " samples; fold sizes " << sizes[0] << ' ' << sizes[1] << ' ' << sizes[2]
                  << ' ' << sizes[3] << "; validation fold " << a.validation_fold << '\n';
    });
}

void setup_pipeline(CLI::App& app, Args& a) {
    auto* pipe = app.add_subcommand("pipeline", "Run a manifest end to end");
    pipe->add_option("manifest", a.in)->required()->check(CLI::ExistingFile);
    pipe->add_flag("--dry-run", a.dry_run, "Print the stage plan and exit");
    pipe->callback([&a] {
        const auto m = PipelineManifest::load(a.in);
        if (a.dry_run) {
            for (const auto& line : plan_pipeline(m)) std::cout << line << '\n';
            return;
        }
        PipelineOptions opt;
        opt.base_dir = fs::path(a.in).parent_path();
        if (opt.base_dir.empty()) opt.base_dir = ".";
        opt.log = &std::cerr;
        const auto result = run_pipeline(m, opt);
        if (result.report) std::cout << result.report->to_text();
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"t4c - traffic grid forecasting toolkit"};
    app.require_subcommand(1);
    Args args;
    setup_convert(app, args);
    setup_mask(app, args);
    setup_tda(app, args);
    setup_predict(app, args);
    setup_ensemble(app, args);
    setup_score(app, args);
    setup_folds(app, args);
    setup_pipeline(app, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return 0;
}
