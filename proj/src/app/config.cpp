#include "mgtopo/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mgtopo::app {

const char* to_string(ConfigErrorKind k) noexcept {
    switch (k) {
        case ConfigErrorKind::malformed: return "malformed";
        case ConfigErrorKind::unknown_key: return "unknown-key";
        case ConfigErrorKind::invalid_value: return "invalid-value";
        case ConfigErrorKind::unknown_preset: return "unknown-preset";
        case ConfigErrorKind::indivisible_resolution: return "indivisible-resolution";
        case ConfigErrorKind::io: return "io";
    }
    return "?";
}

ConfigError::ConfigError(ConfigErrorKind kind, const std::string& what)
    : std::runtime_error(std::string("config error (") + to_string(kind) + "): " + what), kind_(kind) {}

namespace {

ConfigError bad_value(const std::string& key, const std::string& value, const std::string& why) {
    return ConfigError(ConfigErrorKind::invalid_value, key + "='" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) throw bad_value(key, v, "expected a number");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) throw bad_value(key, v, "expected an integer");
    return out;
}

int to_count(const std::string& key, const std::string& v, int lo) {
    const int n = to_int(key, v);
    if (n < lo) throw bad_value(key, v, "must be >= " + std::to_string(lo));
    return n;
}

double to_positive(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (!(d > 0.0)) throw bad_value(key, v, "must be > 0");
    return d;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw bad_value(key, v, "expected true or false");
}

template <class F>
auto wrap(const std::string& key, const std::string& v, F&& parse) {
    try {
        return parse(v);
    } catch (const std::invalid_argument& e) {
        throw bad_value(key, v, e.what());
    }
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

struct Entry {
    ConfigKey key;
    Setter set;
};

const std::vector<Entry>& table() {
    static const std::vector<Entry> t{
        {{"preset", "problem preset"},
         [](RunConfig& c, const std::string&, const std::string& v) {
             try {
                 preset_info(v);
             } catch (const PresetError& e) {
                 throw ConfigError(ConfigErrorKind::unknown_preset, e.what());
             }
             c.preset = v;
         }},
        {{"resolution", "elements per axis, XxYxZ"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.resolution = parse_resolution(v);
             } catch (const ConfigError&) {
                 throw;
             } catch (const std::exception& e) {
                 throw bad_value(k, v, e.what());
             }
         }},
        {{"volfrac", "target volume fraction of the design region"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const double f = to_double(k, v);
             if (!(f > 0.0 && f <= 1.0)) throw bad_value(k, v, "must lie in (0, 1]");
             c.volfrac = f;
         }},
        {{"scheme", "coarse operators: galerkin or homogenized"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.scheme = wrap(k, v, parse_coarse_scheme); }},
        {{"levels", "multigrid levels"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.levels = to_count(k, v, 1); }},
        {{"out", "output directory"}, [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
        {{"checkpoint-every", "checkpoint period in design iterations, 0 for final only"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.checkpoint_every = to_count(k, v, 0); }},
        {{"resume", "checkpoint to resume from"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v.empty()) throw bad_value(k, v, "empty path");
             c.resume = v;
         }},
        {{"max-iters", "design iteration limit"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.max_iters = to_count(k, v, 1); }},
        {{"export-every", "VTI export period in design iterations, 0 for final only"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.export_every = to_count(k, v, 0); }},
        {{"vti-format", "ascii or binary"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "ascii") c.vti = VtiEncoding::ascii;
             else if (v == "binary") c.vti = VtiEncoding::binary;
             else throw bad_value(k, v, "expected ascii or binary");
         }},
        {{"filter-radius", "filter radius in length units, 0 for 2.5 h"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.filter_radius = to_double(k, v);
             if (c.filter_radius < 0.0) throw bad_value(k, v, "must be >= 0");
         }},
        {{"move", "move limit"}, [](RunConfig& c, const std::string& k, const std::string& v) { c.move = to_positive(k, v); }},
        {{"eta", "damping exponent"}, [](RunConfig& c, const std::string& k, const std::string& v) { c.eta = to_positive(k, v); }},
        {{"q", "sharpening exponent"}, [](RunConfig& c, const std::string& k, const std::string& v) { c.q = to_positive(k, v); }},
        {{"gamma", "filter density floor"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.gamma = to_positive(k, v); }},
        {{"ch-tol", "stop when the largest density change is at most this"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.ch_tol = to_positive(k, v); }},
        {{"rho-min", "lower density bound"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.rho_min = to_double(k, v);
             if (!(c.rho_min >= 0.0 && c.rho_min < 1.0)) throw bad_value(k, v, "must lie in [0, 1)");
         }},
        {{"objective-tol", "optional stop on relative compliance change, 0 disables"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.objective_tol = to_double(k, v);
             if (c.objective_tol < 0.0) throw bad_value(k, v, "must be >= 0");
         }},
        {{"penal", "SIMP exponent"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.penal = to_double(k, v);
             if (!(c.penal >= 1.0)) throw bad_value(k, v, "must be >= 1");
         }},
        {{"nu", "Poisson ratio"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.nu = to_double(k, v);
             if (!(c.nu >= 0.0 && c.nu < 0.5)) throw bad_value(k, v, "must lie in [0, 0.5)");
         }},
        {{"cg-tol", "relative residual target of the state solve"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.cg_tol = to_positive(k, v); }},
        {{"cg-max-iters", "iteration limit of the state solve"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.cg_max_iters = to_count(k, v, 1); }},
        {{"preconditioner", "multigrid, jacobi or none"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.preconditioner = wrap(k, v, parse_preconditioner);
         }},
        {{"warm-start", "seed each solve with the previous displacement"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.warm_start = to_bool(k, v); }},
        {{"omega", "Jacobi damping, 0 for automatic"},
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.omega = to_double(k, v);
             if (!(c.omega >= 0.0 && c.omega <= 1.0)) throw bad_value(k, v, "must lie in [0, 1]");
         }},
        {{"load-profile", "high-rise lateral load: uniform or parabolic"},
         [](RunConfig& c, const std::string& k, const std::string& v) { c.load_profile = wrap(k, v, parse_load_profile); }},
    };
    return t;
}

std::string normalize(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::span<const ConfigKey> config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        for (const auto& e : table()) k.push_back(e.key);
        return k;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = normalize(raw_key);
    for (const auto& e : table())
        if (key == e.key.name) {
            e.set(cfg, key, value);
            return;
        }
    throw ConfigError(ConfigErrorKind::unknown_key, "unknown key '" + raw_key + "'");
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(ConfigErrorKind::malformed, "line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(ConfigErrorKind::malformed, "line " + std::to_string(lineno) + ": empty key");
        apply_setting(base, key, value);
    }
    return base;
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigErrorKind::io, "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

std::array<int, 3> parse_resolution(const std::string& s) {
    std::array<int, 3> r{};
    std::size_t pos = 0;
    for (int a = 0; a < 3; ++a) {
        const auto end = a < 2 ? s.find('x', pos) : s.size();
        if (end == std::string::npos) throw bad_value("resolution", s, "expected XxYxZ");
        r[a] = to_count("resolution", s.substr(pos, end - pos), 1);
        pos = end + 1;
    }
    return r;
}

std::string format_resolution(const std::array<int, 3>& r) {
    return std::to_string(r[0]) + "x" + std::to_string(r[1]) + "x" + std::to_string(r[2]);
}

namespace {

constexpr const char* kAxisName[3] = {"x", "y", "z"};

int auto_levels(const StructuredGrid& g, std::size_t guard) {
    const int feasible = feasible_levels(g, 64);
    int L = std::min(4, feasible);
    auto coarsest_dofs = [&](int levels) {
        StructuredGrid c = g;
        for (int l = 1; l < levels; ++l) c = c.coarsened();
        return c.num_dofs();
    };
    while (L < feasible && coarsest_dofs(L) > guard) ++L;
    return L;
}

}  // namespace

ResolvedRun resolve(const RunConfig& cfg) {
    const PresetInfo* info = nullptr;
    try {
        info = &preset_info(cfg.preset);
    } catch (const PresetError& e) {
        throw ConfigError(ConfigErrorKind::unknown_preset, e.what());
    }
    const std::array<int, 3> res = cfg.resolution.value_or(info->default_resolution);
    MgOptions mg;
    mg.scheme = cfg.scheme;
    mg.omega = cfg.omega;
    if (cfg.levels) {
        const int levels = *cfg.levels;
        const long factor = 1L << std::min(levels - 1, 30);
        for (int a = 0; a < 3; ++a) {
            if (res[a] % factor != 0 || res[a] / factor < 2) {
                throw ConfigError(ConfigErrorKind::indivisible_resolution,
                                  "resolution " + format_resolution(res) + ": " + kAxisName[a] + " axis (" +
                                      std::to_string(res[a]) + " elements) must be a multiple of " +
                                      std::to_string(factor) + " with at least 2 coarsest elements for " +
                                      std::to_string(levels) + " multigrid levels");
            }
        }
    }
    PresetOptions popts;
    popts.profile = cfg.load_profile;
    Problem problem = [&] {
        try {
            return instantiate_preset(cfg.preset, res, popts);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(ConfigErrorKind::invalid_value, e.what());
        }
    }();
    problem.material.penal = cfg.penal;
    problem.nu = cfg.nu;

    int levels = 1;
    if (cfg.levels)
        levels = *cfg.levels;
    else if (std::min({res[0], res[1], res[2]}) >= 2)
        levels = auto_levels(problem.grid, mg.coarse_guard);
    mg.max_levels = levels;

    const double volfrac = cfg.volfrac.value_or(info->volfrac);
    OptConfig opt;
    opt.volfrac = volfrac;
    opt.filter_radius = cfg.filter_radius;
    opt.move = cfg.move;
    opt.eta = cfg.eta;
    opt.q = cfg.q;
    opt.gamma = cfg.gamma;
    opt.ch_tol = cfg.ch_tol;
    opt.max_iterations = cfg.max_iters;
    opt.rho_min = cfg.rho_min;
    opt.objective_tol = cfg.objective_tol;

    SolverConfig solver;
    solver.tolerance = cfg.cg_tol;
    solver.max_iterations = cfg.cg_max_iters;
    solver.preconditioner = cfg.preconditioner;
    solver.warm_start = cfg.warm_start;

    try {
        problem.validate();
        opt.validate(problem.grid.h());
        solver.validate();
        mg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ConfigErrorKind::invalid_value, e.what());
    }
    return ResolvedRun{cfg, res, volfrac, levels, std::move(problem), opt, solver, mg};
}

std::string to_text(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "preset=" << c.preset << "\n";
    if (c.resolution) os << "resolution=" << format_resolution(*c.resolution) << "\n";
    if (c.volfrac) os << "volfrac=" << *c.volfrac << "\n";
    os << "scheme=" << to_string(c.scheme) << "\n";
    if (c.levels) os << "levels=" << *c.levels << "\n";
    os << "out=" << c.out.string() << "\n";
    os << "checkpoint-every=" << c.checkpoint_every << "\n";
    if (c.resume) os << "resume=" << c.resume->string() << "\n";
    os << "max-iters=" << c.max_iters << "\n";
    os << "export-every=" << c.export_every << "\n";
    os << "vti-format=" << (c.vti == VtiEncoding::ascii ? "ascii" : "binary") << "\n";
    os << "filter-radius=" << c.filter_radius << "\n";
    os << "move=" << c.move << "\n";
    os << "eta=" << c.eta << "\n";
    os << "q=" << c.q << "\n";
    os << "gamma=" << c.gamma << "\n";
    os << "ch-tol=" << c.ch_tol << "\n";
    os << "rho-min=" << c.rho_min << "\n";
    os << "objective-tol=" << c.objective_tol << "\n";
    os << "penal=" << c.penal << "\n";
    os << "nu=" << c.nu << "\n";
    os << "cg-tol=" << c.cg_tol << "\n";
    os << "cg-max-iters=" << c.cg_max_iters << "\n";
    os << "preconditioner=" << to_string(c.preconditioner) << "\n";
    os << "warm-start=" << (c.warm_start ? "true" : "false") << "\n";
    os << "omega=" << c.omega << "\n";
    os << "load-profile=" << to_string(c.load_profile) << "\n";
    return os.str();
}

}  // namespace mgtopo::app
