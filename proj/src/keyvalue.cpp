#include "ccsi/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ccsi {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Real parse_real(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    Real v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw Error(ErrorCode::ConfigInvalid, what + ": expected a number, got '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw Error(ErrorCode::ConfigInvalid, what + ": expected an integer, got '" + s + "'");
    return v;
}

std::vector<Real> parse_reals(const std::string& s, const std::string& what) {
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<Real> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_real(tok, what));
    return out;
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile f;
    f.origin_ = origin;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigInvalid, origin + ":" + std::to_string(line) + ": expected 'key = value'");
        f.entries_.push_back({trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line});
    }
    return f;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool KeyValueFile::has(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
        if (it->key == key) return it->value;
    return std::nullopt;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (e.key == key) out.push_back(e.value);
    return out;
}

std::string KeyValueFile::require(const std::string& key) const {
    if (auto v = get(key)) return *v;
    throw Error(ErrorCode::ConfigInvalid, origin_ + ": missing required field '" + key + "'");
}

Real KeyValueFile::real(const std::string& key, Real fallback) const {
    if (auto v = get(key)) return parse_real(*v, origin_ + ": " + key);
    return fallback;
}

int KeyValueFile::integer(const std::string& key, int fallback) const {
    if (auto v = get(key)) return parse_int(*v, origin_ + ": " + key);
    return fallback;
}

std::vector<Real> KeyValueFile::reals(const std::string& key) const {
    return parse_reals(require(key), origin_ + ": " + key);
}

void KeyValueFile::set(const std::string& key, const std::string& value) { entries_.push_back({key, value, 0}); }

}  // namespace ccsi
