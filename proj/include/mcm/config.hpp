#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mcm {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Key-value text configuration: one `key = value` per line, `#` comments.
// Unknown keys are rejected. All keys optional; defaults live with the
// consumers and explicit CLI flags win over file values.
struct Config {
    std::map<std::string, std::string> values;

    static const std::set<std::string>& known_keys();

    bool has(const std::string& k) const { return values.count(k) > 0; }
    std::optional<std::string> get(const std::string& k) const {
        auto it = values.find(k);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
    std::optional<double> get_double(const std::string& k) const {
        auto v = get(k);
        if (!v) return std::nullopt;
        try {
            std::size_t pos = 0;
            double d = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + k + "' is not a number: " + *v);
        }
    }
    std::optional<int> get_int(const std::string& k) const {
        auto v = get_double(k);
        if (!v) return std::nullopt;
        return static_cast<int>(*v);
    }
};

inline const std::set<std::string>& Config::known_keys() {
    static const std::set<std::string> keys = {
        "l", "m", "lambda_re", "lambda_im", "max_iter", "ambiguity_band",
        "r0", "resolution", "bounds", "jobs", "gamma",
        "palette_0", "palette_1", "palette_2", "palette_3", "palette_4", "palette_5",
    };
    return keys;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline Config parse_config(std::istream& is) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno)
                              + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!Config::known_keys().count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '"
                              + key + "'");
        cfg.values[key] = val;
    }
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse_config(is);
}

} // namespace mcm
