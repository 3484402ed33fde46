#include "t4c/manifest.hpp"

#include <fstream>
#include <sstream>

#include "t4c/error.hpp"

namespace t4c {

const char* tda_mode_name(TdaMode m) noexcept {
    switch (m) {
        case TdaMode::Off:
            return "off";
        case TdaMode::On:
            return "on";
        case TdaMode::Both:
            return "both";
    }
    return "?";
}

const char* mask_source_name(MaskSource m) noexcept {
    switch (m) {
        case MaskSource::None:
            return "none";
        case MaskSource::OrganizerStatic:
            return "organizer_static";
        case MaskSource::Train2019:
            return "train_2019";
        case MaskSource::TrainPlusTest:
            return "train_plus_test";
    }
    return "?";
}

GridSpec PipelineManifest::grid() const {
    GridSpec g;
    g.channels = channels;
    g.t_in = t_in;
    g.t_out = t_out;
    return g;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

[[noreturn]] void bad(std::size_t lineno, const std::string& msg) {
    throw ConfigError("manifest line " + std::to_string(lineno) + ": " + msg);
}

bool parse_flag(const std::string& v, std::size_t lineno) {
    if (v == "on" || v == "true" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "no") return false;
    bad(lineno, "expected on/off, got '" + v + "'");
}

std::size_t parse_count(const std::string& v, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        // stoull silently wraps a leading '-'.
        if (v.empty() || v[0] < '0' || v[0] > '9') throw std::invalid_argument(v);
        const auto n = std::stoull(v, &pos);
        if (pos != v.size() || n == 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        bad(lineno, "expected a positive integer, got '" + v + "'");
    }
}

}  // namespace

PipelineManifest PipelineManifest::parse(const std::string& text) {
    PipelineManifest m;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    enum class Section { None, Run, City } section = Section::None;

    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad(lineno, "unterminated section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (name == "run") {
                section = Section::Run;
            } else if (name.rfind("city ", 0) == 0 && !trim(name.substr(5)).empty()) {
                section = Section::City;
                const auto city = trim(name.substr(5));
                for (const auto& c : m.cities)
                    if (c.name == city) bad(lineno, "duplicate city '" + city + "'");
                m.cities.push_back({city, {}, {}, {}, {}, {}});
            } else {
                bad(lineno, "unknown section '" + name + "'");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) bad(lineno, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (section == Section::Run) {
            if (key == "output_dir") m.output_dir = value;
            else if (key == "channels") m.channels = parse_count(value, lineno);
            else if (key == "t_in") m.t_in = parse_count(value, lineno);
            else if (key == "t_out") m.t_out = parse_count(value, lineno);
            else if (key == "tda") {
                if (value == "both") m.tda = TdaMode::Both;
                else m.tda = parse_flag(value, lineno) ? TdaMode::On : TdaMode::Off;
            } else if (key == "quantize_u8") m.quantize_u8 = parse_flag(value, lineno);
            else if (key == "mask_source") {
                if (value == "none") m.mask_source = MaskSource::None;
                else if (value == "organizer_static") m.mask_source = MaskSource::OrganizerStatic;
                else if (value == "train_2019") m.mask_source = MaskSource::Train2019;
                else if (value == "train_plus_test") m.mask_source = MaskSource::TrainPlusTest;
                else bad(lineno, "unknown mask_source '" + value + "'");
            } else if (key == "ensemble") {
                if (value == "none") m.ensemble.reset();
                else m.ensemble = parse_aggregator(value);
            } else if (key == "predictor") m.predictors.push_back(parse_predictor(value));
            else if (key == "seed") {
                try {
                    std::size_t pos = 0;
                    if (value.empty() || value[0] < '0' || value[0] > '9') throw std::invalid_argument(value);
                    m.seed = std::stoull(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument(value);
                } catch (const std::exception&) {
                    bad(lineno, "seed must be a non-negative integer");
                }
            } else bad(lineno, "unknown run key '" + key + "'");
        } else if (section == Section::City) {
            auto& c = m.cities.back();
            if (key == "train") {
                for (const auto& p : split_list(value)) c.train.emplace_back(p);
            } else if (key == "test_inputs") c.test_inputs = value;
            else if (key == "targets") c.targets = value;
            else if (key == "mask") c.mask = value;
            else if (key == "lambda") c.lambda = value;
            else bad(lineno, "unknown city key '" + key + "'");
        } else {
            bad(lineno, "key outside of any section");
        }
    }
    return m;
}

PipelineManifest PipelineManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string PipelineManifest::to_text() const {
    std::ostringstream os;
    os << "[run]\n";
    os << "output_dir = " << output_dir.string() << '\n';
    os << "channels = " << channels << '\n';
    os << "t_in = " << t_in << '\n';
    os << "t_out = " << t_out << '\n';
    os << "tda = " << tda_mode_name(tda) << '\n';
    os << "quantize_u8 = " << (quantize_u8 ? "on" : "off") << '\n';
    os << "mask_source = " << mask_source_name(mask_source) << '\n';
    os << "ensemble = " << (ensemble ? aggregator_name(*ensemble) : "none") << '\n';
    for (const auto& p : predictors) os << "predictor = " << format_predictor(p) << '\n';
    os << "seed = " << seed << '\n';
    for (const auto& c : cities) {
        os << "\n[city " << c.name << "]\n";
        if (!c.train.empty()) {
            os << "train = ";
            for (std::size_t i = 0; i < c.train.size(); ++i) os << (i ? ", " : "") << c.train[i].string();
            os << '\n';
        }
        if (!c.test_inputs.empty()) os << "test_inputs = " << c.test_inputs.string() << '\n';
        if (!c.targets.empty()) os << "targets = " << c.targets.string() << '\n';
        if (!c.mask.empty()) os << "mask = " << c.mask.string() << '\n';
        if (!c.lambda.empty()) os << "lambda = " << c.lambda.string() << '\n';
    }
    return os.str();
}

}  // namespace t4c
