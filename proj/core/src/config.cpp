#include "bcpo/config.hpp"

#include "bcpo/csv.hpp"
#include "bcpo/errors.hpp"

#include <limits>

namespace bcpo {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

} // namespace

FlatConfig FlatConfig::parse(std::string_view text) {
    FlatConfig config;
    int line_no = 0;
    for (auto raw : csv::lines(text)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key=value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        if (!config.values_.emplace(key, value).second)
            throw ValidationError("duplicate config key: " + key);
    }
    return config;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
    return parse(csv::read_file(path));
}

const std::string* FlatConfig::find(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
}

void FlatConfig::get(const std::string& key, double& out) {
    if (auto v = find(key)) out = csv::parse_double(*v, key);
}

void FlatConfig::get(const std::string& key, long long& out) {
    if (auto v = find(key)) out = csv::parse_int(*v, key);
}

void FlatConfig::get(const std::string& key, int& out) {
    if (auto v = find(key)) {
        const auto x = csv::parse_int(*v, key);
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
            throw ValidationError("config value out of range: " + key);
        out = static_cast<int>(x);
    }
}

void FlatConfig::get(const std::string& key, bool& out) {
    if (auto v = find(key)) {
        if (*v == "true" || *v == "1")
            out = true;
        else if (*v == "false" || *v == "0")
            out = false;
        else
            throw ValidationError("invalid boolean for " + key + ": '" + *v + "'");
    }
}

void FlatConfig::get(const std::string& key, std::string& out) {
    if (auto v = find(key)) out = *v;
}

void FlatConfig::check_all_consumed() const {
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key)) throw ValidationError("unknown config key: " + key);
}

} // namespace bcpo
