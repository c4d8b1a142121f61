#pragma once

#include <string>
#include <string_view>

namespace thermovqa {

// Three-way outcome of interpreting a model answer.
enum class Verdict { Normal, Anomaly, Unsure };

// Two-way ground truth / scored prediction.
enum class BinaryLabel { Normal, Anomaly };

std::string to_string(Verdict v);
std::string to_string(BinaryLabel b);
Verdict verdict_from_string(std::string_view s);        // throws ConfigError
BinaryLabel binary_from_string(std::string_view s);     // throws ConfigError

// Maps a verdict to the label used for scoring: an unsure answer counts as an
// anomaly call, erring on the side of flagging.
BinaryLabel score_verdict(Verdict v);

}  // namespace thermovqa
