#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smac {

// Flat key=value configuration. Files may use [section] headers, which
// prefix the keys that follow ("section.key"). '#' starts a comment.
// Serialization is sorted, so equal configs hash equally.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    // "key=value" as accepted on the command line
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // sorted "key=value\n" lines
    std::string serialize() const;
    // FNV-1a over the serialized form; stamped into run manifests
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace smac
