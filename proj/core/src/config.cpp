#include "thermovqa/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "thermovqa/errors.hpp"

namespace thermovqa {
namespace {

std::string trim(std::string_view s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

struct IniEntry {
    std::string key;
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct IniSection {
    std::string name;
    std::vector<IniEntry> entries;
    int line = 0;

    const IniEntry* find(std::string_view key) const {
        for (const auto& entry : entries) {
            if (entry.key == key) {
                entry.used = true;
                return &entry;
            }
        }
        return nullptr;
    }
};

[[noreturn]] void fail(const std::filesystem::path& path, int line,
                       const std::string& message) {
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + message);
}

std::vector<IniSection> parse_ini(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open plan file: " + path.string());
    }
    std::vector<IniSection> sections;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                fail(path, line_no, "unterminated section header");
            }
            std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail(path, line_no, "empty section name");
            for (const auto& section : sections) {
                if (section.name == name) {
                    fail(path, line_no, "duplicate section [" + name + "]");
                }
            }
            sections.push_back({name, {}, line_no});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(path, line_no, "expected 'key = value': " + line);
        }
        if (sections.empty()) {
            fail(path, line_no, "key outside any [section]");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(path, line_no, "empty key");
        for (const auto& entry : sections.back().entries) {
            if (entry.key == key) {
                fail(path, line_no,
                     "duplicate key '" + key + "' in [" + sections.back().name + "]");
            }
        }
        sections.back().entries.push_back({key, value, line_no});
    }
    return sections;
}

int parse_int(const std::filesystem::path& path, const IniEntry& entry) {
    try {
        std::size_t used = 0;
        int value = std::stoi(entry.value, &used);
        if (used != entry.value.size()) throw std::invalid_argument(entry.value);
        return value;
    } catch (const std::exception&) {
        fail(path, entry.line, "'" + entry.key + "' expects an integer, got '" +
                                   entry.value + "'");
    }
}

double parse_double(const std::filesystem::path& path, const IniEntry& entry) {
    try {
        std::size_t used = 0;
        double value = std::stod(entry.value, &used);
        if (used != entry.value.size()) throw std::invalid_argument(entry.value);
        return value;
    } catch (const std::exception&) {
        fail(path, entry.line,
             "'" + entry.key + "' expects a number, got '" + entry.value + "'");
    }
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
    std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

void check_all_used(const std::filesystem::path& path, const IniSection& section) {
    for (const auto& entry : section.entries) {
        if (!entry.used) {
            fail(path, entry.line,
                 "unknown key '" + entry.key + "' in [" + section.name + "]");
        }
    }
}

void apply_backend_section(const std::filesystem::path& path,
                           const std::filesystem::path& base,
                           const IniSection& section, BackendConfig& config,
                           PlanConfig& out) {
    std::string name = section.name.substr(std::string("backend.").size());
    if (const auto* e = section.find("preset")) {
        config = preset_backend(e->value);
    }
    config.id = name;
    if (const auto* e = section.find("kind")) {
        config.kind = backend_kind_from_string(e->value);
    }
    if (const auto* e = section.find("endpoint")) config.endpoint = e->value;
    if (const auto* e = section.find("model")) config.model_name = e->value;
    if (const auto* e = section.find("auth_env")) config.auth_env_var = e->value;
    if (const auto* e = section.find("temperature")) {
        config.sampling_temperature = parse_double(path, *e);
    }
    if (const auto* e = section.find("timeout_s")) {
        config.timeout_s = parse_double(path, *e);
    }
    if (const auto* e = section.find("max_retries")) {
        config.max_retries = parse_int(path, *e);
    }
    if (const auto* e = section.find("requests_per_minute")) {
        config.requests_per_minute = parse_int(path, *e);
    }
    if (const auto* e = section.find("retry_base_delay_s")) {
        config.retry_base_delay_s = parse_double(path, *e);
    }
    if (const auto* e = section.find("poll_interval_s")) {
        config.poll_interval_s = parse_double(path, *e);
    }
    if (const auto* e = section.find("transcript")) {
        config.transcript_path = resolve(base, e->value);
    }
    if (const auto* e = section.find("trials")) {
        int trials = parse_int(path, *e);
        if (trials < 1) fail(path, e->line, "'trials' must be at least 1");
        out.plan.trials_per_backend[name] = trials;
    }
    check_all_used(path, section);
    try {
        config.validate();
    } catch (const ConfigError& err) {
        fail(path, section.line, std::string("[") + section.name + "]: " + err.what());
    }
}

}  // namespace

PlanConfig load_plan_file(const std::filesystem::path& path) {
    PlanConfig out;
    auto sections = parse_ini(path);
    std::filesystem::path base = path.parent_path();

    const IniSection* run = nullptr;
    std::vector<const IniSection*> backend_sections;
    for (const auto& section : sections) {
        if (section.name == "run") {
            run = &section;
        } else if (section.name.rfind("backend.", 0) == 0) {
            if (section.name.size() == std::string("backend.").size()) {
                fail(path, section.line, "backend section needs a name");
            }
            backend_sections.push_back(&section);
        } else if (section.name != "colormap" && section.name != "oracle") {
            fail(path, section.line, "unknown section [" + section.name + "]");
        }
    }
    if (!run) {
        throw ConfigError(path.string() + ": missing [run] section");
    }

    for (const auto& section : sections) {
        if (section.name == "colormap") {
            if (const auto* e = section.find("t_min")) {
                out.cmap.t_min = parse_double(path, *e);
            }
            if (const auto* e = section.find("t_max")) {
                out.cmap.t_max = parse_double(path, *e);
            }
            check_all_used(path, section);
            try {
                out.cmap.validate();
            } catch (const std::exception& err) {
                fail(path, section.line, err.what());
            }
        } else if (section.name == "oracle") {
            if (const auto* e = section.find("temp_threshold")) {
                out.oracle_params.temp_threshold = parse_double(path, *e);
            }
            if (const auto* e = section.find("spot_deviation")) {
                out.oracle_params.spot_deviation = parse_double(path, *e);
            }
            if (const auto* e = section.find("neighborhood_radius")) {
                out.oracle_params.neighborhood_radius = parse_int(path, *e);
            }
            if (const auto* e = section.find("min_blob_area")) {
                out.oracle_params.min_blob_area = parse_int(path, *e);
            }
            check_all_used(path, section);
            try {
                out.oracle_params.validate();
            } catch (const std::exception& err) {
                fail(path, section.line, err.what());
            }
        }
    }

    for (const auto* section : backend_sections) {
        BackendConfig config;
        apply_backend_section(path, base, *section, config, out);
        out.backends.push_back(std::move(config));
    }

    if (const auto* e = run->find("manifest")) {
        out.plan.manifest_path = resolve(base, e->value);
    } else {
        fail(path, run->line, "[run] needs 'manifest'");
    }
    if (const auto* e = run->find("log")) {
        out.plan.output_log_path = resolve(base, e->value);
    } else {
        fail(path, run->line, "[run] needs 'log'");
    }
    if (const auto* e = run->find("prompts")) {
        out.plan.prompt_ids.clear();
        for (const auto& item : split_list(e->value)) {
            IniEntry fake{e->key, item, e->line};
            out.plan.prompt_ids.push_back(parse_int(path, fake));
        }
    }
    if (const auto* e = run->find("backends")) {
        out.plan.backend_ids = split_list(e->value);
    } else {
        for (const auto& config : out.backends) {
            out.plan.backend_ids.push_back(config.id);
        }
    }
    if (const auto* e = run->find("concurrency")) {
        out.plan.concurrency_cap = parse_int(path, *e);
    }
    check_all_used(path, *run);

    std::set<std::string> declared;
    for (const auto& config : out.backends) declared.insert(config.id);
    for (const auto& id : out.plan.backend_ids) {
        if (!declared.count(id)) {
            fail(path, run->line,
                 "run lists backend '" + id + "' but no [backend." + id +
                     "] section declares it");
        }
    }

    try {
        out.plan.validate();
    } catch (const ConfigError& err) {
        throw ConfigError(path.string() + ": " + err.what());
    }

    out.prompt_params =
        PromptParams::from_colormap(out.cmap, out.oracle_params.temp_threshold);
    return out;
}

}  // namespace thermovqa
