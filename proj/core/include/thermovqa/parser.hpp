#pragma once

#include <string_view>

#include "thermovqa/verdict.hpp"

namespace thermovqa {

// Maps a free-text answer to a Verdict. Total and pure: scans
// case-insensitively for explicit option tokens ("a) yes" / "(a)" /
// "answer: a" for normal; the b-forms for anomaly), then for a standalone
// yes/no final sentence; everything unresolvable (hedging, both options
// asserted, empty text) lands on Unsure. "Yes" means NORMAL: the underlying
// question asks whether the battery is normal.
Verdict parse_verdict(std::string_view text);

}  // namespace thermovqa
