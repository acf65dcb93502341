#pragma once

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>

namespace ddc {

namespace detail {

inline std::string trim_copy(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Content of the last balanced \boxed{...} group, if any.
inline std::optional<std::string> last_boxed(const std::string& text) {
    const std::string marker = "\\boxed{";
    std::size_t search_end = text.size();
    while (true) {
        const std::size_t pos = text.rfind(marker, search_end == 0 ? 0 : search_end - 1);
        if (pos == std::string::npos) return std::nullopt;
        std::size_t depth = 1;
        for (std::size_t i = pos + marker.size(); i < text.size(); ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}' && --depth == 0) {
                return text.substr(pos + marker.size(), i - pos - marker.size());
            }
        }
        // Unbalanced group: try an earlier occurrence.
        if (pos == 0) return std::nullopt;
        search_end = pos;
    }
}

// Remainder of the last line carrying an "answer:" marker (case-insensitive).
inline std::optional<std::string> last_answer_line(const std::string& text) {
    std::optional<std::string> found;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        const std::string line = text.substr(line_start, line_end - line_start);
        std::string lower(line);
        for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const std::size_t m = lower.rfind("answer:");
        if (m != std::string::npos) {
            const std::string tail = trim_copy(line.substr(m + 7));
            if (!tail.empty()) found = tail;
        }
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }
    return found;
}

}  // namespace detail

// Default answer extractor: last \boxed{...} group, else the tail of the
// last "answer:" line, else none (the path completes without a vote).
inline std::optional<std::string> extract_answer(const std::string& final_text) {
    if (auto boxed = detail::last_boxed(final_text)) {
        const std::string t = detail::trim_copy(*boxed);
        if (!t.empty()) return t;
    }
    return detail::last_answer_line(final_text);
}

}  // namespace ddc
