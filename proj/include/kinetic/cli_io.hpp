#pragma once

// Flat key = value configuration, the on-disk field/CSV contract and the
// per-subcommand orchestration behind the `kinetic` executable.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kinetic/kinetic_solver.hpp"
#include "kinetic/phase_grid.hpp"

namespace kinetic {

/// Parsed configuration. Typed getters record every value they hand out
/// (defaults included), so `resolved()` is the complete effective config.
class Config {
public:
    /// `#` starts a comment; blank lines are skipped. Throws ParseError on a
    /// line without `=`, an empty key or a duplicate key.
    static Config parse(std::string_view text);
    /// Reads a UTF-8 file. Throws IoError if it cannot be opened.
    static Config load(const std::filesystem::path& path);

    /// Throws ParseError at the first key not in `known`.
    void restrict_to(const std::vector<std::string_view>& known) const;

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    double number(const std::string& key, double fallback) const;
    long long integer(const std::string& key, long long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    /// Comma-separated numbers.
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

    const nlohmann::json& resolved() const { return resolved_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries_;
    mutable nlohmann::json resolved_ = nlohmann::json::object();

    template <class T, class Convert>
    T get(const std::string& key, const T& fallback, Convert convert) const;
};

/// Keys accepted by each subcommand's config file.
const std::vector<std::string_view>& known_keys(std::string_view subcommand);

/// Solver configuration from the run keys; defaults reproduce the reference
/// configuration (L_x = 20, L_v = 6, dx = 0.05, dv = 0.01, dt = 1e-4, T = 3,
/// side-2 patch at (11, -0.3), gamma = 1). Validated before returning.
SolverConfig solver_config(const Config& cfg);

// ---- field files --------------------------------------------------------

/// Writes `<base>.f64` (little-endian doubles, position axes outermost) and
/// the sidecar `<base>.json` {d, nx, nv, dx, dv, x0, v0, time, L_x, L_v}.
void write_field(const std::filesystem::path& base, const DistributionField& f);
/// Reads a field given either path of the pair. Throws IoError if a file is
/// missing or the binary length disagrees with the sidecar.
DistributionField read_field(const std::filesystem::path& path);

// ---- CSV writers ----------------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& body);
std::string hprofile_csv(const PhaseGrid& g, const std::vector<double>& h);
std::string diagnostics_csv(const std::vector<DiagnosticRow>& rows);

// ---- orchestration --------------------------------------------------------

/// Effective configuration, artifacts and schema versions of one invocation;
/// written last as manifest.json.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> artifacts;  // relative to the output directory
    std::map<std::string, int> schemas;  // file kind -> schema version
    nlohmann::json summary = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Runs a config-driven subcommand (run, picard, particles, monokinetic,
/// homogeneous) into `out`, creating the directory as needed.
RunManifest orchestrate(std::string_view subcommand, const Config& cfg,
                        const std::filesystem::path& out);

/// Pullback residuals and Duhamel tails from the snapshots of a finished run.
RunManifest scatter_run_dir(const std::filesystem::path& run_dir, const std::filesystem::path& out);

/// L1 distance between snapshots with the same index in two run directories.
RunManifest compare_run_dirs(const std::filesystem::path& a, const std::filesystem::path& b,
                             const std::filesystem::path& out);

/// Writes the manifest to `<out>/manifest.json`.
void write_manifest(const std::filesystem::path& out, const RunManifest& m);

}  // namespace kinetic
