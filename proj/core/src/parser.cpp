#include "thermovqa/parser.hpp"

#include <cctype>
#include <string>
#include <vector>

namespace thermovqa {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Lowercase, with every whitespace run collapsed to a single space, so token
// search is insensitive to line breaks and formatting.
std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

// Finds needle with word boundaries on both sides (when the needle's own ends
// are word characters).
bool contains_token(const std::string& hay, std::string_view needle) {
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) ||
                       !is_word_char(needle.front());
        std::size_t end = pos + needle.size();
        bool right_ok = end == hay.size() || !is_word_char(hay[end]) ||
                        !is_word_char(needle.back());
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

bool has_any_token(const std::string& hay,
                   const std::vector<std::string_view>& needles) {
    for (auto needle : needles) {
        if (contains_token(hay, needle)) return true;
    }
    return false;
}

// Last non-empty sentence, lowercased, with punctuation stripped from both
// ends; empty when there is none.
std::string final_sentence(const std::string& normalized) {
    std::size_t end = normalized.size();
    while (end > 0) {
        std::size_t start = normalized.find_last_of(".!?", end - 1);
        std::size_t begin = start == std::string::npos ? 0 : start + 1;
        std::string sentence = normalized.substr(begin, end - begin);
        std::size_t lo = 0, hi = sentence.size();
        while (lo < hi && !is_word_char(sentence[lo])) ++lo;
        while (hi > lo && !is_word_char(sentence[hi - 1])) --hi;
        if (hi > lo) return sentence.substr(lo, hi - lo);
        if (start == std::string::npos) break;
        end = start;
    }
    return "";
}

}  // namespace

Verdict parse_verdict(std::string_view text) {
    const std::string hay = normalize(text);

    bool normal_token = has_any_token(hay, {"a) yes", "a)yes", "(a)", "answer: a",
                                            "answer:a"});
    bool anomaly_token =
        has_any_token(hay, {"b) no", "b)no", "(b)", "answer: b", "answer:b"});

    if (normal_token != anomaly_token) {
        return normal_token ? Verdict::Normal : Verdict::Anomaly;
    }
    if (normal_token && anomaly_token) {
        return Verdict::Unsure;  // both options asserted
    }

    std::string last = final_sentence(hay);
    if (last == "yes") return Verdict::Normal;
    if (last == "no") return Verdict::Anomaly;

    return Verdict::Unsure;
}

}  // namespace thermovqa
