#include "afx/config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "afx/runtime.hpp"

namespace afx {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
    throw ConfigError("config key " + key + ": cannot parse '" + value + "' as " + want);
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) bad_value(key, v, "an integer");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, v, "an integer");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    if (!v.empty() && v[0] == '-') bad_value(key, v, "an unsigned integer");
    try {
        size_t pos = 0;
        const uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) bad_value(key, v, "an unsigned integer");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, v, "an unsigned integer");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) bad_value(key, v, "a number");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, v, "a number");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "data.dataset") {
        if (value == "fashion_mnist")
            c.data.dataset = DatasetId::fashion_mnist;
        else if (value == "mnist")
            c.data.dataset = DatasetId::mnist;
        else if (value == "custom_dir")
            c.data.dataset = DatasetId::custom_dir;
        else
            bad_value(key, value, "fashion_mnist|mnist|custom_dir");
    } else if (key == "data.class_a") {
        c.data.class_a = value;
    } else if (key == "data.class_b") {
        c.data.class_b = value;
    } else if (key == "data.cache_dir") {
        c.data.cache_dir = value;
    } else if (key == "data.custom_root") {
        c.data.custom_root = value;
    } else if (key == "data.mirror") {
        c.data.mirror = value;
    } else if (key == "classifier.epochs") {
        c.classifier.epochs = parse_int(key, value);
    } else if (key == "classifier.batch_size") {
        c.classifier.batch_size = parse_int(key, value);
    } else if (key == "classifier.lr") {
        c.classifier.lr = parse_double(key, value);
    } else if (key == "svm.C") {
        c.svm.c = parse_double(key, value);
    } else if (key == "svm.max_iterations") {
        c.svm.max_iterations = parse_int(key, value);
    } else if (key == "gan.mode") {
        try {
            c.gan.mode = parse_mode(value);
        } catch (const ValidationError&) {
            bad_value(key, value, "alterfactual|counterfactual");
        }
    } else if (key == "gan.epochs") {
        c.gan.epochs = parse_int(key, value);
    } else if (key == "gan.batch_size") {
        c.gan.batch_size = parse_int(key, value);
    } else if (key == "gan.lr_g") {
        c.gan.lr_g = parse_double(key, value);
    } else if (key == "gan.lr_d") {
        c.gan.lr_d = parse_double(key, value);
    } else if (key == "gan.lambdas") {
        std::vector<double> xs;
        std::stringstream ss(value);
        std::string part;
        while (std::getline(ss, part, ',')) xs.push_back(parse_double(key, trim(part)));
        if (xs.size() != 4)
            bad_value(key, value, "four comma-separated weights (adv,cls,sim,svm)");
        c.gan.lambda_adv = xs[0];
        c.gan.lambda_cls = xs[1];
        c.gan.lambda_sim = xs[2];
        c.gan.lambda_svm = xs[3];
    } else if (key == "gan.use_boundary_loss") {
        c.gan.use_boundary_loss = parse_bool(key, value);
    } else if (key == "gan.seed") {
        c.gan.seed = parse_u64(key, value);
    } else if (key == "eval.split") {
        if (value == "train")
            c.eval_split = Split::train;
        else if (value == "test")
            c.eval_split = Split::test;
        else
            bad_value(key, value, "train|test");
    } else if (key == "run_dir") {
        c.run_dir = value;
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

}  // namespace

void ExperimentConfig::set_seed(uint64_t seed) {
    classifier.seed = seed;
    svm.seed = seed;
    gan.seed = seed;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value, got '" + line + "'");
        apply_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_overrides(ExperimentConfig& cfg, const std::optional<uint64_t>& seed,
                     const std::optional<std::filesystem::path>& run_dir) {
    if (seed) cfg.set_seed(*seed);
    if (run_dir) cfg.run_dir = *run_dir;
}

}  // namespace afx
