#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace kfs {

// Shortest round-trip representation via to_chars: locale-independent and
// deterministic, which is what byte-identical CSV replays rely on.
inline std::string format_value(double v) {
    char buf[40];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(const char* v) { return v; }

class CsvTable {
public:
    explicit CsvTable(std::string header) : text_(std::move(header)) { text_ += '\n'; }

    template <typename... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((text_ += (first ? (first = false, "") : ","), text_ += format_value(cells)), ...);
        text_ += '\n';
        ++rows_;
    }

    const std::string& text() const noexcept { return text_; }
    std::size_t rows() const noexcept { return rows_; }

private:
    std::string text_;
    std::size_t rows_ = 0;
};

}  // namespace kfs
