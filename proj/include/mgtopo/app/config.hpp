/// @file config.hpp
/// @brief Run configuration: flat key=value files and command-line flags
/// share one key table.
#pragma once

#include "mgtopo/app/preset.hpp"
#include "mgtopo/multigrid.hpp"
#include "mgtopo/optimize.hpp"
#include "mgtopo/solver.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace mgtopo::app {

enum class VtiEncoding { ascii, binary };

enum class ConfigErrorKind {
    malformed,
    unknown_key,
    invalid_value,
    unknown_preset,
    indivisible_resolution,
    io,
};

const char* to_string(ConfigErrorKind k) noexcept;

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigErrorKind kind, const std::string& what);
    ConfigErrorKind kind() const noexcept { return kind_; }

private:
    ConfigErrorKind kind_;
};

struct RunConfig {
    std::string preset = "cantilever";
    std::optional<std::array<int, 3>> resolution;
    std::optional<double> volfrac;
    CoarseScheme scheme = CoarseScheme::galerkin;
    /// Unset: the largest feasible count up to 4.
    std::optional<int> levels;
    std::filesystem::path out = "out";
    int checkpoint_every = 0;
    std::optional<std::filesystem::path> resume;
    int max_iters = 200;
    int export_every = 0;
    VtiEncoding vti = VtiEncoding::binary;

    double filter_radius = 0.0;
    double move = 0.2;
    double eta = 0.5;
    double q = 1.0;
    double gamma = 1e-3;
    double ch_tol = 0.01;
    double rho_min = 0.0;
    double objective_tol = 0.0;
    double penal = 3.0;
    double nu = 0.3;

    double cg_tol = 1e-5;
    int cg_max_iters = 200;
    PreconditionerKind preconditioner = PreconditionerKind::multigrid;
    bool warm_start = true;
    double omega = 0.0;
    LoadProfile load_profile = LoadProfile::uniform;
};

struct ConfigKey {
    const char* name;
    const char* help;
};

/// Every accepted key; flags are "--" + name.
std::span<const ConfigKey> config_keys();

/// Sets one key; throws ConfigError (unknown_key, invalid_value, unknown_preset).
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses "key=value" lines; '#' starts a comment.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});

std::array<int, 3> parse_resolution(const std::string& s);
std::string format_resolution(const std::array<int, 3>& r);

/// A configuration with preset defaults and the level count filled in.
struct ResolvedRun {
    RunConfig cfg;
    std::array<int, 3> resolution;
    double volfrac;
    int levels;
    Problem problem;
    OptConfig opt;
    SolverConfig solver;
    MgOptions mg;
};

/// Merges preset defaults, checks divisibility for the level count and
/// instantiates the problem. Throws ConfigError.
ResolvedRun resolve(const RunConfig& cfg);

/// Canonical key=value text of a configuration.
std::string to_text(const RunConfig& cfg);

}  // namespace mgtopo::app
