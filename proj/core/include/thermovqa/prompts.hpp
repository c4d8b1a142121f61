#pragma once

#include <string>
#include <vector>

#include "thermovqa/thermal.hpp"

namespace thermovqa {

// One of the five benchmark prompts, with {placeholder} markers for the
// colormap names, the temperature range, and the normality threshold.
struct PromptTemplate {
    int id = 0;  // 1..5
    std::string body;
};

struct PromptParams {
    std::vector<std::string> colormap_names;  // exactly 7
    double t_min = 25.0;
    double t_max = 60.0;
    double threshold = 50.0;

    static PromptParams defaults();
    static PromptParams from_colormap(const ColormapSpec& cmap, double threshold);

    void validate() const;  // throws ConfigError
};

// All five templates, ids 1..5 in order. Prompt 1 is the handcrafted original;
// 2-5 are its rephrasings. Degree-sign usage varies between prompts by design.
std::vector<PromptTemplate> list_templates();

// Placeholder substitution only; throws ConfigError for an unknown id.
std::string render_prompt(int id, const PromptParams& params = PromptParams::defaults());

}  // namespace thermovqa
