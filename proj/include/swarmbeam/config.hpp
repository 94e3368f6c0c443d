#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace swarmbeam {

/// Malformed or inconsistent experiment configuration. Messages carry the
/// origin (file name or "<preset>") and, where known, the [section] key
/// path.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// INI-style key/value store:
///
///   # full-line comments with '#' or ';'
///   [section]
///   key = value
///
/// Keys live inside a section; values are taken verbatim after trimming.
/// Duplicate sections or keys are rejected so typos cannot silently shadow
/// earlier values. Insertion order is preserved for provenance dumps.
class Config {
  public:
    static Config parse_string(const std::string& text,
                               const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        std::string current;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    cfg.fail(lineno, "unterminated section header");
                current = trim(trimmed.substr(1, trimmed.size() - 2));
                if (current.empty()) cfg.fail(lineno, "empty section name");
                if (cfg.find_section(current) != nullptr)
                    cfg.fail(lineno, "section [" + current + "] declared twice");
                cfg.sections_.push_back({current, {}});
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                cfg.fail(lineno, "expected 'key = value' or '[section]'");
            if (current.empty())
                cfg.fail(lineno, "key appears before any [section] header");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) cfg.fail(lineno, "empty key");
            if (value.empty())
                cfg.fail(lineno, "empty value for key '" + key + "'");
            Section* sec = cfg.find_section(current);
            for (const auto& [k, v] : sec->entries)
                if (k == key)
                    cfg.fail(lineno, "duplicate key '" + key + "' in [" + current + "]");
            sec->entries.emplace_back(key, value);
        }
        return cfg;
    }

    static Config parse_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw config_error("config: cannot open " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str(), path.string());
    }

    const std::string& origin() const { return origin_; }

    /// Relabel where this config came from (used after merging presets,
    /// files and CLI overrides so error messages cite the dominant source).
    void set_origin(std::string origin) { origin_ = std::move(origin); }

    bool has_section(const std::string& section) const {
        return find_section(section) != nullptr;
    }

    bool has(const std::string& section, const std::string& key) const {
        return find(section, key) != nullptr;
    }

    /// Pointer to the raw value, or nullptr when absent.
    const std::string* find(const std::string& section, const std::string& key) const {
        const Section* sec = find_section(section);
        if (!sec) return nullptr;
        for (const auto& [k, v] : sec->entries)
            if (k == key) return &v;
        return nullptr;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        const std::string* v = find(section, key);
        if (!v) throw config_error(path_msg(section, key) + ": required key missing");
        return *v;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const std::string* v = find(section, key);
        return v ? *v : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return parse_double(section, key, get_string(section, key));
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        const std::string* v = find(section, key);
        return v ? parse_double(section, key, *v) : fallback;
    }

    long long get_int(const std::string& section, const std::string& key) const {
        return parse_int(section, key, get_string(section, key));
    }

    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const {
        const std::string* v = find(section, key);
        return v ? parse_int(section, key, *v) : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const {
        const std::string* v = find(section, key);
        if (!v) return fallback;
        if (*v == "true") return true;
        if (*v == "false") return false;
        throw config_error(path_msg(section, key) + ": expected true or false, got '" +
                           *v + "'");
    }

    std::vector<long long> get_int_list(const std::string& section,
                                        const std::string& key) const {
        const std::string raw = get_string(section, key);
        std::vector<long long> out;
        std::istringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_int(section, key, trim(item)));
        if (out.empty())
            throw config_error(path_msg(section, key) + ": expected a comma-separated list");
        return out;
    }

    /// Insert or overwrite one value (used for preset merging and CLI
    /// overrides).
    void set(const std::string& section, const std::string& key,
             const std::string& value) {
        Section* sec = find_section(section);
        if (!sec) {
            sections_.push_back({section, {}});
            sec = &sections_.back();
        }
        for (auto& [k, v] : sec->entries)
            if (k == key) {
                v = value;
                return;
            }
        sec->entries.emplace_back(key, value);
    }

    std::vector<std::string> section_names() const {
        std::vector<std::string> names;
        names.reserve(sections_.size());
        for (const auto& s : sections_) names.push_back(s.name);
        return names;
    }

    std::vector<std::pair<std::string, std::string>> items(
        const std::string& section) const {
        const Section* sec = find_section(section);
        if (!sec) return {};
        return sec->entries;
    }

  private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };

    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t");
        if (first == std::string::npos) return "";
        const auto last = s.find_last_not_of(" \t");
        return s.substr(first, last - first + 1);
    }

    Section* find_section(const std::string& name) {
        for (auto& s : sections_)
            if (s.name == name) return &s;
        return nullptr;
    }
    const Section* find_section(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name == name) return &s;
        return nullptr;
    }

    [[noreturn]] void fail(std::size_t lineno, const std::string& what) const {
        throw config_error(origin_ + ":" + std::to_string(lineno) + ": " + what);
    }

    std::string path_msg(const std::string& section, const std::string& key) const {
        return origin_ + ": [" + section + "] " + key;
    }

    double parse_double(const std::string& section, const std::string& key,
                        const std::string& raw) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size() || !std::isfinite(v)) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw config_error(path_msg(section, key) + ": expected a finite number, got '" +
                               raw + "'");
        }
    }

    long long parse_int(const std::string& section, const std::string& key,
                        const std::string& raw) const {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw config_error(path_msg(section, key) + ": expected an integer, got '" +
                               raw + "'");
        }
    }

    std::string origin_ = "<empty>";
    std::vector<Section> sections_;
};

}  // namespace swarmbeam
