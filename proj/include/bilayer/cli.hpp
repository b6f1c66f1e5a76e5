#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bilayer/core.hpp"
#include "bilayer/variational.hpp"

namespace bilayer::cli {

/// Syntax or semantic error; line is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct RunConfig {
    CouplingParams params;
    VortexConfiguration vortices;
    DomainSpec domain;

    int n1 = 128, n2 = 128;

    OuterSettings outer;
    double epsilon = 0.0; ///< 0 selects (2h)^2
    int eps_levels = 5;
    std::vector<double> radii{4.0, 6.0, 8.0, 12.0};
    std::string fullplane_method = "newton-krylov";

    std::vector<double> sweep_factors{0.5, 0.9, 0.99, 1.01, 1.1, 2.0};
    double sweep_aspect = 1.0;
    int sweep_n = 64;

    std::string out_dir = "out";
    std::vector<std::string> warnings;

    /// section.key -> value after overrides, used for the echo and hash.
    std::map<std::string, std::string> entries;
};

/// Raw entries with their line numbers.
struct Entry {
    std::string value;
    int line = 0;
};
using EntryMap = std::map<std::string, Entry>;

/// Parses `[section]` headers and `key = value` lines; `#` starts a comment.
EntryMap parse_entries(const std::string& text);

/// Validated configuration from entries.
RunConfig build_config(const EntryMap& entries);

RunConfig parse_config(const std::string& text);

/// Applies `section.key=value` on top of parsed entries.
void apply_override(EntryMap& entries, const std::string& assignment);

/// Canonical `section.key = value` lines, sorted.
std::string config_echo(const RunConfig& cfg);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& data);

enum ExitCode { Ok = 0, Usage = 1, IdentityFailure = 2, SolverFailure = 3, Infeasible = 4 };

/// Executes one subcommand, writing outputs under cfg.out_dir.
int run(const std::string& subcommand, const RunConfig& cfg, bool quiet, std::ostream& log);

/// Command line entry point.
int main_entry(int argc, char** argv);

} // namespace bilayer::cli
