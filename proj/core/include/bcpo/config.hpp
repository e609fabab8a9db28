#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace bcpo {

/**
 * Flat `key=value` configuration text with dotted section prefixes, e.g.
 *
 *     # comment
 *     grid.slip_prob=0.10
 *     bcpo.alpha=0.5
 *
 * Whitespace around keys and values is trimmed. Duplicate keys are errors.
 * Consumers fetch keys through the typed getters; `check_all_consumed()`
 * rejects any key nobody asked for, so typos never pass silently.
 */
class FlatConfig {
public:
    static FlatConfig parse(std::string_view text);
    static FlatConfig load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return values_.count(key) != 0; }

    void get(const std::string& key, double& out);
    void get(const std::string& key, long long& out);
    void get(const std::string& key, int& out);
    void get(const std::string& key, bool& out);
    void get(const std::string& key, std::string& out);

    /// Throws ValidationError naming the first unknown key.
    void check_all_consumed() const;

private:
    const std::string* find(const std::string& key);

    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

} // namespace bcpo
