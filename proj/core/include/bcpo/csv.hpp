#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bcpo::csv {

/// Shortest decimal text that round-trips to the same double ("nan"/"inf" for specials).
std::string format_double(double x);

/// Parses a full field as a double; throws ValidationError otherwise.
double parse_double(std::string_view field, std::string_view what);

/// Parses a full field as a signed integer; throws ValidationError otherwise.
long long parse_int(std::string_view field, std::string_view what);

/// Splits one line on commas (no quoting; none of our schemas need it).
std::vector<std::string_view> split(std::string_view line);

/// Minimal row builder: fields are joined with commas, rows end with '\n'.
class Writer {
public:
    explicit Writer(std::string_view header);

    Writer& field(std::string_view text);
    Writer& field(double x);
    Writer& field(long long x);
    Writer& field(int x) { return field(static_cast<long long>(x)); }
    void end_row();

    const std::string& str() const { return buffer_; }

private:
    std::string buffer_;
    bool row_open_ = false;
};

/// Reads a whole file; throws IoError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes a whole file (binary mode, no newline translation); throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits text into lines, dropping a trailing '\r' and a final empty line.
std::vector<std::string_view> lines(std::string_view text);

} // namespace bcpo::csv
