#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace vflow::cli {

inline constexpr const char* kVersion = "1.0.0";

// Sectioned key-value config ("[match]\nalpha = 0.05"). '#' starts a comment
// line; values keep internal whitespace; the last '=' split is on the first.
struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static Config parse(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    // Errors when missing; use for required keys.
    const std::string& get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    void set(const std::string& section, const std::string& key, std::string value);

    // Deterministic serialization (sections and keys sorted) used for hashing.
    std::string canonical() const;
};

std::uint64_t fnv1a64(const std::string& bytes);

// Full pipeline entry point; argv-style arguments without the program name.
// Returns the process exit status; human-readable errors go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vflow::cli
