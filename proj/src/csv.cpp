#include "vflow/csv.hpp"

#include <fstream>
#include <sstream>

#include "vflow/fail.hpp"

namespace vflow {

std::vector<std::string> split_csv(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::int64_t parse_int64_field(const std::string& s, const std::string& where) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc{} && ptr == s.data() + s.size() && !s.empty(),
            "csv: expected integer at ", where, ", got \"", s, "\"");
    return v;
}

double parse_double_field(const std::string& s, const std::string& where) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc{} && ptr == s.data() + s.size() && !s.empty(),
            "csv: expected number at ", where, ", got \"", s, "\"");
    return v;
}

std::string format_double(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    require(ec == std::errc{}, "csv: to_chars failed");
    return std::string(buf, ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "io: cannot open ", path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "io: cannot write ", path);
    out << content;
    require(out.good(), "io: short write to ", path);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos) pos = text.size();
        std::size_t end = pos;
        if (end > start && text[end - 1] == '\r') --end;
        lines.push_back(text.substr(start, end - start));
        start = pos + 1;
    }
    return lines;
}

}  // namespace vflow
