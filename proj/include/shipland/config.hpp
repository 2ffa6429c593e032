#pragma once
/**
 * @file config.hpp
 * @brief Flat key = value configuration with dotted section names.
 *
 *     # comment
 *     sim.dt = 0.1
 *     obs.mode = direct
 *
 * Later assignments override earlier ones. Keys are case-sensitive.
 */

#include <shipland/errors.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace shipland {

class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>") {
        Config c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(body.substr(0, eq));
            if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
            c.values_[key] = trim(body.substr(eq + 1));
        }
        return c;
    }

    static Config parse_string(const std::string& text, const std::string& source = "<config>") {
        std::istringstream in(text);
        return parse(in, source);
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_double(key, it->second);
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t used = 0;
            const long v = std::stol(it->second, &used);
            if (used == it->second.size()) return v;
        } catch (const std::logic_error&) {
        }
        throw ConfigError("config key '" + key + "' expects an integer, got '" + it->second + "'");
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
    }

    /// Comma-separated list of numbers.
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(to_double(key, trim(tok)));
        return out;
    }

    /// Throws ConfigError naming the first key not in `known`.
    void require_known(const std::set<std::string>& known) const {
        for (const auto& [k, v] : values_)
            if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Sorted "key = value" lines; two configs with equal canonical text are
    /// equivalent.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

    /// FNV-1a 64 of the canonical text, as 16 hex digits.
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char ch : canonical()) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used == v.size()) return d;
        } catch (const std::logic_error&) {
        }
        throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }

    std::map<std::string, std::string> values_;
};

}  // namespace shipland
