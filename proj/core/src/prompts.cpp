#include "thermovqa/prompts.hpp"

#include <cmath>
#include <cstdio>
#include <string_view>

#include "thermovqa/errors.hpp"

namespace thermovqa {

namespace detail {
std::string_view prompt_template_text(int id);  // defined in generated source
}

PromptParams PromptParams::defaults() {
    return from_colormap(ColormapSpec::standard(), 50.0);
}

PromptParams PromptParams::from_colormap(const ColormapSpec& cmap,
                                         double threshold) {
    PromptParams params;
    params.colormap_names.assign(cmap.anchor_names.begin(),
                                 cmap.anchor_names.end());
    params.t_min = cmap.t_min;
    params.t_max = cmap.t_max;
    params.threshold = threshold;
    return params;
}

void PromptParams::validate() const {
    if (colormap_names.size() != 7) {
        throw ConfigError("prompt params need exactly 7 colormap names, got " +
                          std::to_string(colormap_names.size()));
    }
    for (const auto& name : colormap_names) {
        if (name.empty()) {
            throw ConfigError("prompt colormap names must be non-empty");
        }
    }
    if (!(t_min < t_max)) {
        throw ConfigError("prompt params require t_min < t_max");
    }
}

namespace {

// 25 -> "25", 47.5 -> "47.5": whole numbers lose the decimal point, matching
// how the benchmark prompts quote their temperatures.
std::string format_number(double value) {
    if (value == std::floor(value) && std::fabs(value) < 1e15) {
        return std::to_string(static_cast<long long>(value));
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

// "black", "blue", ... — quoted, comma-separated.
std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += "\"" + names[i] + "\"";
    }
    return out;
}

// "black," "blue," ... "white" — American style, commas inside the quotes.
std::string join_names_american(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += " ";
        out += "\"" + names[i];
        out += i + 1 < names.size() ? ",\"" : "\"";
    }
    return out;
}

void replace_all(std::string& text, std::string_view key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
}

}  // namespace

std::vector<PromptTemplate> list_templates() {
    std::vector<PromptTemplate> templates;
    templates.reserve(5);
    for (int id = 1; id <= 5; ++id) {
        templates.push_back({id, std::string(detail::prompt_template_text(id))});
    }
    return templates;
}

std::string render_prompt(int id, const PromptParams& params) {
    params.validate();
    std::string text(detail::prompt_template_text(id));
    replace_all(text, "{colormap_names_ac}",
                join_names_american(params.colormap_names));
    replace_all(text, "{colormap_names}", join_names(params.colormap_names));
    replace_all(text, "{first_color}", params.colormap_names.front());
    replace_all(text, "{last_color}", params.colormap_names.back());
    replace_all(text, "{t_min}", format_number(params.t_min));
    replace_all(text, "{t_max}", format_number(params.t_max));
    replace_all(text, "{threshold}", format_number(params.threshold));
    return text;
}

}  // namespace thermovqa
