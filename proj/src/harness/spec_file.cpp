#include "dpdro/harness/spec_file.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "dpdro/errors.hpp"

namespace dpdro::harness {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ParseError("spec: key '" + key + "' has non-numeric value '" + value + "'");
    return out;
}

} // namespace

SpecFile SpecFile::parse(const std::string& text) {
    SpecFile spec;
    std::istringstream in(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError("spec: line " + std::to_string(lineNo) + " is not 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ParseError("spec: empty key on line " + std::to_string(lineNo));
        spec.values_[key] = value;
    }
    return spec;
}

SpecFile SpecFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open spec file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool SpecFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string SpecFile::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ParseError("spec: missing required key '" + key + "'");
    return it->second;
}

std::string SpecFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double SpecFile::get_double(const std::string& key) const {
    return to_double(key, get_string(key));
}

double SpecFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long SpecFile::get_int(const std::string& key) const {
    const double v = get_double(key);
    const long out = static_cast<long>(v);
    if (static_cast<double>(out) != v)
        throw ParseError("spec: key '" + key + "' must be an integer");
    return out;
}

long SpecFile::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool SpecFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError("spec: key '" + key + "' must be a boolean");
}

std::vector<std::string> SpecFile::get_strings(const std::string& key) const {
    std::vector<std::string> out;
    std::string raw = get_string(key);
    std::size_t start = 0;
    while (start <= raw.size()) {
        const auto comma = raw.find(',', start);
        const std::string item =
            trim(comma == std::string::npos ? raw.substr(start) : raw.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ParseError("spec: key '" + key + "' holds an empty list");
    return out;
}

std::vector<double> SpecFile::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_strings(key)) out.push_back(to_double(key, item));
    return out;
}

std::vector<double> SpecFile::get_doubles(const std::string& key,
                                          const std::vector<double>& fallback) const {
    return has(key) ? get_doubles(key) : fallback;
}

std::string SpecFile::canonical() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
    return out.str();
}

std::uint64_t SpecFile::digest() const {
    // FNV-1a over the canonical serialization.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : canonical()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace dpdro::harness
