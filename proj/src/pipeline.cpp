#include "t4c/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

#include "t4c/dataset.hpp"
#include "t4c/digest.hpp"
#include "t4c/error.hpp"
#include "t4c/roadmap.hpp"
#include "t4c/tda.hpp"
#include "t4c/tensorio.hpp"

namespace fs = std::filesystem;

namespace t4c {

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::vector<std::string> branches_for(TdaMode mode) {
    switch (mode) {
        case TdaMode::Off:
            return {"plain"};
        case TdaMode::On:
            return {"tda"};
        case TdaMode::Both:
            return {"plain", "tda"};
    }
    return {};
}

bool needs_train(const PipelineManifest& m, const CityConfig& c) {
    if (m.mask_source == MaskSource::Train2019 || m.mask_source == MaskSource::TrainPlusTest) return true;
    if (m.tda != TdaMode::Off && c.lambda.empty()) return true;
    for (const auto& p : m.predictors)
        if (p.kind == PredictorKind::HistoricalMean) return true;
    return false;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
    return s;
}

std::string shell_quote(const std::string& s) { return "'" + replace_all(s, "'", "'\\''") + "'"; }

// Writes artifacts under the output root via "<path>.partial" + rename and
// records a content digest for each file.
class ArtifactWriter {
   public:
    ArtifactWriter(fs::path root, std::vector<ArtifactRecord>& records, std::ostream* log)
        : root_(std::move(root)), records_(records), log_(log) {}

    const fs::path& root() const { return root_; }

    void tensor(const std::string& stage, const fs::path& rel, const Tensor& t) {
        const auto final_path = prepare(rel);
        const auto partial = partial_of(final_path);
        write_tensor(t, partial);
        fs::rename(partial, final_path);
        record(stage, rel);
    }

    void text(const std::string& stage, const fs::path& rel, const std::string& body) {
        const auto final_path = prepare(rel);
        const auto partial = partial_of(final_path);
        {
            std::ofstream out(partial, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write '" + partial.string() + "'");
            out << body;
        }
        fs::rename(partial, final_path);
        record(stage, rel);
    }

    void slots(const std::string& stage, const fs::path& rel_dir, const SlotSet& set) {
        const auto final_dir = prepare(rel_dir);
        const auto partial = partial_of(final_dir);
        write_slot_dir(set, partial);
        fs::rename(partial, final_dir);
        for (const auto& id : set.slots) record(stage, rel_dir / (id + ".t4gr"));
    }

   private:
    static fs::path partial_of(const fs::path& p) {
        fs::path q = p;
        q += ".partial";
        return q;
    }

    fs::path prepare(const fs::path& rel) {
        const auto full = root_ / rel;
        fs::create_directories(full.parent_path());
        fs::remove_all(full);
        fs::remove_all(partial_of(full));
        return full;
    }

    void record(const std::string& stage, const fs::path& rel) {
        ArtifactRecord r{stage, rel.generic_string(), file_digest(root_ / rel)};
        if (log_) *log_ << r.stage << '\t' << r.path << '\t' << r.digest << '\n';
        records_.push_back(std::move(r));
    }

    fs::path root_;
    std::vector<ArtifactRecord>& records_;
    std::ostream* log_;
};

// Runs one stage body, converting any library error into a StageError that
// names the stage and the file being processed.
template <typename Fn>
auto stage(const std::string& name, const std::string& city, std::string& current_file, Fn&& fn) {
    current_file.clear();
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name + "[" + city + "]", current_file, e.what());
    }
}

}  // namespace

void run_external_command(const ExternalCall& call) {
    if (call.command.empty()) return;
    std::string cmd = call.command;
    cmd = replace_all(cmd, "{inputs}", shell_quote(call.inputs_dir.string()));
    cmd = replace_all(cmd, "{outputs}", shell_quote(call.protocol_dir.string()));
    cmd = replace_all(cmd, "{city}", shell_quote(call.city));
    fs::create_directories(call.protocol_dir);
    const int rc = std::system(cmd.c_str());
    if (rc != 0) throw ProtocolError("external command exited with status " + std::to_string(rc) + ": " + cmd);
}

std::vector<std::string> plan_pipeline(const PipelineManifest& m) {
    std::vector<std::string> plan;
    const auto out = m.output_dir.generic_string();
    for (const auto& c : m.cities) {
        const std::string dir = out + "/" + c.name;
        auto add = [&](const std::string& s) { plan.push_back("[" + c.name + "] " + s); };
        switch (m.mask_source) {
            case MaskSource::None:
                add("mask: none");
                break;
            case MaskSource::OrganizerStatic:
                add("mask: import " + c.mask.generic_string() + " -> " + dir + "/mask.t4gr");
                break;
            case MaskSource::Train2019:
                add("mask: build from " + std::to_string(c.train.size()) + " train movies -> " + dir + "/mask.t4gr");
                break;
            case MaskSource::TrainPlusTest:
                add("mask: build from " + std::to_string(c.train.size()) + " train movies, union test inputs -> " +
                    dir + "/mask.t4gr");
                break;
        }
        if (!c.train.empty()) add("folds: seed " + std::to_string(m.seed) + " -> " + dir + "/folds.txt");
        if (m.tda != TdaMode::Off)
            add(c.lambda.empty() ? "lambda fit: train mean / test-input mean -> " + dir + "/lambda.t4gr"
                                 : "lambda fit: load " + c.lambda.generic_string());
        for (const auto& b : branches_for(m.tda)) {
            const std::string bdir = dir + "/" + b;
            add(std::string(b == "tda" ? "lambda apply" : "pass-through") + (m.quantize_u8 ? " (u8)" : "") + ": " +
                c.test_inputs.generic_string() + " -> " + bdir + "/model_inputs");
            for (std::size_t i = 0; i < m.predictors.size(); ++i) {
                const auto name = "p" + std::to_string(i) + "_" + predictor_name(m.predictors[i].kind);
                add("predict: " + format_predictor(m.predictors[i]) + " -> " + bdir + "/" + name + "/raw");
                if (b == "tda") add("lambda invert -> " + bdir + "/" + name + "/restored");
                if (m.mask_source != MaskSource::None) add("mask apply -> " + bdir + "/" + name + "/masked");
            }
            if (m.predictors.size() >= 2 && m.ensemble)
                add(std::string("ensemble: ") + aggregator_name(*m.ensemble) + " -> " + bdir + "/ensemble");
        }
        if (m.tda == TdaMode::Both) add("combine: mean(plain, tda) -> " + dir + "/combined");
        add(std::string("export") + (m.quantize_u8 ? " (u8)" : "") + " -> " + dir + "/final");
    }
    bool scored = false;
    for (const auto& c : m.cities) scored |= !c.targets.empty();
    if (scored) plan.push_back("score -> " + out + "/report.txt, " + out + "/report.json");
    plan.push_back("digests -> " + out + "/digests.log");
    return plan;
}

void validate_manifest(const PipelineManifest& m, const fs::path& base) {
    std::vector<std::string> problems;
    try {
        m.grid().validate();
    } catch (const Error& e) {
        problems.push_back(e.what());
    }
    if (m.cities.empty()) problems.push_back("no [city ...] sections");
    if (m.predictors.empty()) problems.push_back("no predictor configured");
    if (m.predictors.size() >= 2 && !m.ensemble) problems.push_back("several predictors need an ensemble aggregator");
    if (m.predictors.size() == 1 && m.ensemble) problems.push_back("ensemble needs at least 2 predictors");

    auto require = [&](const fs::path& p, const std::string& what, bool dir) {
        const auto full = resolve(base, p);
        if (dir ? !fs::is_directory(full) : !fs::is_regular_file(full))
            problems.push_back(what + " '" + full.string() + "' does not exist");
    };
    for (const auto& c : m.cities) {
        const std::string tag = "city '" + c.name + "': ";
        if (c.test_inputs.empty())
            problems.push_back(tag + "test_inputs missing");
        else
            require(c.test_inputs, tag + "test inputs", true);
        if (needs_train(m, c) && c.train.empty()) problems.push_back(tag + "train movies required");
        for (const auto& t : c.train) require(t, tag + "train movie", false);
        if (m.mask_source == MaskSource::OrganizerStatic) {
            if (c.mask.empty())
                problems.push_back(tag + "organizer_static needs a mask path");
            else
                require(c.mask, tag + "mask", false);
        }
        if (!c.lambda.empty()) require(c.lambda, tag + "lambda", false);
        if (!c.targets.empty()) require(c.targets, tag + "targets", true);
        for (const auto& p : m.predictors)
            if (p.kind == PredictorKind::External && p.command.empty())
                for (const auto& b : branches_for(m.tda))
                    require(p.protocol_dir / c.name / b, tag + "external predictions", true);
    }
    if (!problems.empty()) {
        std::string msg = "invalid manifest:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

PipelineResult run_pipeline(const PipelineManifest& m, const PipelineOptions& opt) {
    validate_manifest(m, opt.base_dir);
    const GridSpec base_grid = m.grid();
    const fs::path out_root = resolve(opt.base_dir, m.output_dir);
    fs::create_directories(out_root);

    PipelineResult result;
    ArtifactWriter writer(out_root, result.artifacts, opt.log);
    std::map<std::string, PredictionSet> targets;
    std::string file;

    for (const auto& c : m.cities) {
        const fs::path cdir = c.name;

        auto loaded = stage("load", c.name, file, [&] {
            std::vector<TrafficMovie> mv;
            for (const auto& t : c.train) {
                file = resolve(opt.base_dir, t).string();
                mv.push_back(load_movie(resolve(opt.base_dir, t), c.name, base_grid));
            }
            file = resolve(opt.base_dir, c.test_inputs).string();
            auto in = load_input_dir(resolve(opt.base_dir, c.test_inputs), base_grid);
            return std::pair{std::move(mv), std::move(in)};
        });
        const std::vector<TrafficMovie> movies = std::move(loaded.first);
        const InputSet inputs = std::move(loaded.second);
        const GridSpec grid = inputs.spec;

        std::optional<RoadMask> mask = stage("mask", c.name, file, [&]() -> std::optional<RoadMask> {
            std::optional<RoadMask> mk;
            switch (m.mask_source) {
                case MaskSource::None:
                    return mk;
                case MaskSource::OrganizerStatic:
                    file = resolve(opt.base_dir, c.mask).string();
                    mk = import_external_mask(resolve(opt.base_dir, c.mask));
                    break;
                case MaskSource::Train2019:
                    mk = build_mask(movies, MaskProvenance::Train2019);
                    break;
                case MaskSource::TrainPlusTest: {
                    const Tensor test[] = {inputs.values};
                    mk = union_masks(build_mask(movies), build_mask_from_tensors(test));
                    break;
                }
            }
            writer.tensor("mask", cdir / "mask.t4gr", mk->grid);
            return mk;
        });

        if (!movies.empty())
            stage("folds", c.name, file, [&] {
                std::vector<SampleIndex> samples;
                for (std::size_t i = 0; i < movies.size(); ++i) {
                    auto s = enumerate_samples(movies[i], 1, c.train[i].stem().string());
                    samples.insert(samples.end(), s.begin(), s.end());
                }
                const std::string text = samples.empty() ? std::string{} : make_folds(samples, m.seed).to_text();
                writer.text("folds", cdir / "folds.txt", text);
            });

        std::optional<MeanMap> train_mean;
        if (!movies.empty()) train_mean = mean_map(movies, "train");

        std::optional<LambdaMap> lambda;
        if (m.tda != TdaMode::Off)
            lambda = stage("lambda_fit", c.name, file, [&] {
                LambdaMap l;
                if (!c.lambda.empty()) {
                    file = resolve(opt.base_dir, c.lambda).string();
                    l = load_lambda(resolve(opt.base_dir, c.lambda));
                } else {
                    const Tensor test[] = {inputs.values};
                    l = compute_lambda(*train_mean, mean_map_from_tensors(test, grid.channels, "test"));
                }
                writer.tensor("lambda_fit", cdir / "lambda.t4gr", l.values);
                return l;
            });

        std::map<std::string, PredictionSet> branch_result;
        for (const auto& branch : branches_for(m.tda)) {
            const fs::path bdir = cdir / branch;
            const bool scaled = branch == "tda";

            InputSet model_inputs = stage(scaled ? "lambda_apply" : "model_inputs", c.name, file, [&] {
                InputSet mi = scaled ? apply_lambda(inputs, *lambda, m.quantize_u8 ? Quantize::U8 : Quantize::None)
                                     : inputs;
                writer.slots(scaled ? "lambda_apply" : "model_inputs", bdir / "model_inputs", mi);
                return mi;
            });

            std::vector<PredictionSet> members;
            for (std::size_t i = 0; i < m.predictors.size(); ++i) {
                const auto& spec = m.predictors[i];
                const fs::path pdir = bdir / ("p" + std::to_string(i) + "_" + predictor_name(spec.kind));

                PredictionSet pred = stage("predict", c.name, file, [&] {
                    PredictionSet p;
                    switch (spec.kind) {
                        case PredictorKind::Persistence:
                            p = predict_persistence(model_inputs);
                            break;
                        case PredictorKind::HistoricalMean:
                            p = predict_historical_mean(model_inputs, *train_mean);
                            break;
                        case PredictorKind::External: {
                            const auto proto = resolve(opt.base_dir, spec.protocol_dir) / c.name / branch;
                            ExternalCall call{c.name, branch, out_root / bdir / "model_inputs", proto, spec.command};
                            file = proto.string();
                            opt.external_runner(call);
                            p = run_external(model_inputs.slots, proto, grid);
                            break;
                        }
                    }
                    writer.slots("predict", pdir / "raw", p);
                    return p;
                });

                if (scaled)
                    pred = stage("lambda_invert", c.name, file, [&] {
                        auto p = apply_inverse_lambda(pred, *lambda);
                        writer.slots("lambda_invert", pdir / "restored", p);
                        return p;
                    });

                if (mask)
                    pred = stage("mask_apply", c.name, file, [&] {
                        auto p = apply_mask(pred, *mask);
                        writer.slots("mask_apply", pdir / "masked", p);
                        return p;
                    });
                members.push_back(std::move(pred));
            }

            if (members.size() >= 2)
                branch_result[branch] = stage("ensemble", c.name, file, [&] {
                    auto e = ensemble(members, *m.ensemble);
                    writer.slots("ensemble", bdir / "ensemble", e);
                    return e;
                });
            else
                branch_result[branch] = std::move(members.front());
        }

        PredictionSet final_pred;
        if (m.tda == TdaMode::Both)
            final_pred = stage("combine", c.name, file, [&] {
                auto e = ensemble_of_ensembles(branch_result.at("plain"), branch_result.at("tda"));
                writer.slots("combine", cdir / "combined", e);
                return e;
            });
        else
            final_pred = branch_result.begin()->second;

        final_pred = stage("export", c.name, file, [&] {
            PredictionSet p = final_pred;
            if (m.quantize_u8) p.values = p.values.to_u8();
            writer.slots("export", cdir / "final", p);
            return p;
        });
        result.final_predictions[c.name] = final_pred;

        if (!c.targets.empty())
            targets[c.name] = stage("load_targets", c.name, file, [&] {
                file = resolve(opt.base_dir, c.targets).string();
                return load_prediction_dir(resolve(opt.base_dir, c.targets), base_grid);
            });
    }

    if (!targets.empty()) {
        result.report = stage("score", "all", file, [&] {
            CityPredictions scored;
            for (const auto& [city, t] : targets) scored[city] = result.final_predictions.at(city);
            auto report = score_run(scored, targets);
            // Final predictions are already masked when a mask is configured.
            report.masked = m.mask_source != MaskSource::None;
            writer.text("score", "report.txt", report.to_text());
            writer.text("score", "report.json", report.to_json());
            return report;
        });
    }

    std::string digests;
    for (const auto& r : result.artifacts) digests += r.stage + '\t' + r.path + '\t' + r.digest + '\n';
    writer.text("digests", "digests.log", digests);
    return result;
}

}  // namespace t4c
