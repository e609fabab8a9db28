#include "bcpo/csv.hpp"

#include "bcpo/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bcpo::csv {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0"; // folds -0 as well
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw NumericalError("cannot format double");
    return std::string(buf, end);
}

double parse_double(std::string_view field, std::string_view what) {
    if (field == "nan") return std::nan("");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ValidationError("invalid number for " + std::string(what) + ": '" +
                              std::string(field) + "'");
    return value;
}

long long parse_int(std::string_view field, std::string_view what) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ValidationError("invalid integer for " + std::string(what) + ": '" +
                              std::string(field) + "'");
    return value;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

Writer::Writer(std::string_view header) {
    buffer_.append(header);
    buffer_.push_back('\n');
}

Writer& Writer::field(std::string_view text) {
    if (row_open_) buffer_.push_back(',');
    buffer_.append(text);
    row_open_ = true;
    return *this;
}

Writer& Writer::field(double x) { return field(std::string_view(format_double(x))); }

Writer& Writer::field(long long x) { return field(std::string_view(std::to_string(x))); }

void Writer::end_row() {
    buffer_.push_back('\n');
    row_open_ = false;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading file: " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("error writing file: " + path.string());
}

std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        auto line = text.substr(start, pos == std::string_view::npos ? text.npos : pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace bcpo::csv
