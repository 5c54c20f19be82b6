#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cpapml/config.hpp"
#include "cpapml/pipeline.hpp"

namespace cpapml::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
    }
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: " + key + " expects true/false, got '" + value + "'");
}

DatasetEntry& entry_for(ExperimentConfig& cfg, const std::string& name) {
    for (auto& e : cfg.datasets)
        if (e.name == name) return e;
    cfg.datasets.push_back({name, "", ""});
    return cfg.datasets.back();
}

void apply_data_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "label_column") {
        cfg.label_column = value;
        return;
    }
    // bare "schema" applies to every dataset without its own entry
    if (key == "schema") {
        for (auto& e : cfg.datasets)
            if (e.schema.empty()) e.schema = value;
        // remember for datasets declared later
        cfg.datasets.push_back({"", "", value});
        return;
    }
    if (key.size() > 7 && key.substr(key.size() - 7) == ".schema") {
        entry_for(cfg, key.substr(0, key.size() - 7)).schema = value;
        return;
    }
    entry_for(cfg, key).csv = value;
}

void apply_key(ExperimentConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value, const std::string& origin) {
    if (section == "data") {
        apply_data_key(cfg, key, value);
    } else if (section == "split") {
        if (key == "test_ratio")
            cfg.test_ratio = parse_double(key, value);
        else if (key == "k")
            cfg.k = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
            cfg.seed_set = true;
        } else if (key == "inner") {
            if (value == "resample")
                cfg.inner_mode = evaluation::InnerMode::repeated_resample;
            else if (value == "kfold")
                cfg.inner_mode = evaluation::InnerMode::kfold;
            else
                throw ConfigError("config: inner expects resample or kfold, got '" + value + "'");
        } else if (key == "inner_reps")
            cfg.inner_reps = static_cast<int>(parse_int(key, value));
        else
            throw ConfigError(origin + ": unknown key [split] " + key);
    } else if (section == "preprocess") {
        if (key == "rare_category_ratio")
            cfg.pre.rare_category_ratio = parse_double(key, value);
        else if (key == "nmi_threshold")
            cfg.pre.nmi_threshold = parse_double(key, value);
        else if (key == "correlation_threshold")
            cfg.pre.correlation_threshold = parse_double(key, value);
        else if (key == "alpha")
            cfg.pre.alpha = parse_double(key, value);
        else
            throw ConfigError(origin + ": unknown key [preprocess] " + key);
    } else if (section == "run") {
        if (key == "out")
            cfg.out = value;
        else if (key == "grid") {
            std::stringstream ss(value);
            std::string id;
            while (std::getline(ss, id, ',')) {
                id = trim(id);
                if (!id.empty()) cfg.grid.push_back(id);
            }
        } else if (key == "exclude_same_algorithm")
            cfg.exclude_same_algorithm = parse_bool(key, value);
        else if (key == "top_k")
            cfg.top_k = static_cast<std::size_t>(parse_int(key, value));
        else if (key == "jobs")
            cfg.jobs = static_cast<int>(parse_int(key, value));
        else
            throw ConfigError(origin + ": unknown key [run] " + key);
    } else {
        throw ConfigError(origin + ": unknown section [" + section + "]");
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    cfg.raw_text = text;
    std::stringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::string where = origin + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (section.empty()) throw ConfigError(where + ": key before any [section]");
        apply_key(cfg, section, key, value, where);
    }
    // drop the placeholder row a bare "schema" key may have left behind,
    // while propagating it to datasets declared after it
    std::string default_schema;
    for (auto& e : cfg.datasets)
        if (e.name.empty()) default_schema = e.schema;
    if (!default_schema.empty())
        for (auto& e : cfg.datasets)
            if (e.schema.empty()) e.schema = default_schema;
    std::erase_if(cfg.datasets, [](const DatasetEntry& e) { return e.name.empty(); });

    if (cfg.test_ratio <= 0.0 || cfg.test_ratio >= 1.0)
        throw ConfigError("config: test_ratio must lie in (0, 1)");
    if (cfg.k < 2) throw ConfigError("config: k must be at least 2");
    if (cfg.inner_reps < 1) throw ConfigError("config: inner_reps must be at least 1");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = parse_config(ss.str(), path);
    if (const char* env_out = std::getenv("CPAPML_OUT"); env_out && *env_out) cfg.out = env_out;
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (!cfg.seed_set) throw ConfigError("config: seed is required (no wall-clock seeding)");
    if (cfg.datasets.empty()) throw ConfigError("config: no datasets declared in [data]");
    for (const auto& e : cfg.datasets) {
        if (e.csv.empty()) throw ConfigError("config: dataset " + e.name + " has no CSV path");
        if (e.schema.empty()) throw ConfigError("config: dataset " + e.name + " has no schema path");
        for (const std::string& path : {e.csv, e.schema})
            if (!std::ifstream(path)) throw ConfigError("config: missing file for " + e.name + ": " + path);
    }
    if (!cfg.grid.empty()) {
        std::set<std::string> known;
        for (const auto& f : pipeline::enumerate_grid()) known.insert(f.family_id());
        for (const auto& id : cfg.grid)
            if (!known.count(id)) throw ConfigError("config: unknown grid family id: " + id);
    }
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

}  // namespace cpapml::config
