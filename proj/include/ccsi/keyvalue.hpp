#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccsi/types.hpp"

namespace ccsi {

/// Line-oriented `key = value` text; '#' starts a comment, keys may repeat.
class KeyValueFile {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };

    static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueFile load(const std::filesystem::path& path);

    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

    bool has(const std::string& key) const;
    /// Last occurrence wins.
    std::optional<std::string> get(const std::string& key) const;
    std::vector<std::string> get_all(const std::string& key) const;

    std::string require(const std::string& key) const;
    Real real(const std::string& key, Real fallback) const;
    int integer(const std::string& key, int fallback) const;
    std::vector<Real> reals(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

private:
    std::vector<Entry> entries_;
    std::string origin_;
};

Real parse_real(const std::string& s, const std::string& what);
int parse_int(const std::string& s, const std::string& what);
/// Whitespace- or comma-separated list of reals.
std::vector<Real> parse_reals(const std::string& s, const std::string& what);

}  // namespace ccsi
