#include "thermovqa/verdict.hpp"

#include "thermovqa/errors.hpp"

namespace thermovqa {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Normal: return "normal";
        case Verdict::Anomaly: return "anomaly";
        case Verdict::Unsure: return "unsure";
    }
    throw ConfigError("invalid verdict value");
}

std::string to_string(BinaryLabel b) {
    return b == BinaryLabel::Normal ? "normal" : "anomaly";
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "normal") return Verdict::Normal;
    if (s == "anomaly") return Verdict::Anomaly;
    if (s == "unsure") return Verdict::Unsure;
    throw ConfigError("unknown verdict: '" + std::string(s) + "'");
}

BinaryLabel binary_from_string(std::string_view s) {
    if (s == "normal") return BinaryLabel::Normal;
    if (s == "anomaly") return BinaryLabel::Anomaly;
    throw ConfigError("unknown binary label: '" + std::string(s) + "'");
}

BinaryLabel score_verdict(Verdict v) {
    return v == Verdict::Normal ? BinaryLabel::Normal : BinaryLabel::Anomaly;
}

}  // namespace thermovqa
