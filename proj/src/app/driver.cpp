#include "mgtopo/app/driver.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace mgtopo::app {

namespace fs = std::filesystem;

namespace {

std::string numbered(const char* stem, int iter, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d%s", stem, iter, ext);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json summary_json(const RunOutcome& o) {
    nlohmann::json j;
    const auto& r = o.run;
    j["preset"] = r.cfg.preset;
    j["resolution"] = format_resolution(r.resolution);
    j["scheme"] = to_string(r.mg.scheme);
    j["preconditioner"] = to_string(r.solver.preconditioner);
    j["levels"] = r.levels;
    j["volfrac"] = r.volfrac;
    j["element_size"] = r.problem.grid.h();
    j["iterations"] = o.result.state.iteration;
    j["converged"] = o.result.converged;
    j["final_compliance"] = o.result.history.empty() ? 0.0 : o.result.history.back().compliance;
    j["final_change"] = o.result.history.empty() ? 0.0 : o.result.history.back().change;
    j["seconds"] = o.seconds;
    j["memory_scalars"] = {{"fine_dofs", o.memory.fine_dofs},
                           {"solver_vectors", o.memory.solver_vectors},
                           {"coarse_operators", o.memory.coarse_operators},
                           {"coarse_factor", o.memory.coarse_factor},
                           {"total", o.memory.total()}};
    return j;
}

}  // namespace

RunOutcome run_design(const RunConfig& cfg, std::ostream* log) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome o{resolve(cfg), {}, {}, 0.0, cfg.out};
    const ResolvedRun& r = o.run;
    const StructuredGrid& g = r.problem.grid;

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out.string() + ": " + ec.message());
    write_text(cfg.out / "config.txt", to_text(cfg));

    Optimizer opt(r.problem, r.opt, r.solver, r.mg);
    OptState state = cfg.resume ? load_checkpoint(*cfg.resume, g) : opt.initial_state();
    CsvLog csv(cfg.out / "history.csv", cfg.resume ? state.iteration : -1);

    if (log) {
        *log << "mgtopo: " << r.cfg.preset << " " << format_resolution(r.resolution) << ", h = " << g.h() << ", "
             << g.num_dofs() << " dofs, " << r.levels << " levels, " << to_string(r.mg.scheme) << ", volfrac "
             << r.volfrac;
        if (cfg.resume) *log << ", resuming at iteration " << state.iteration;
        *log << "\n";
    }

    auto on_iter = [&](const IterationRecord& rec, const OptState& s) {
        csv.append(rec);
        if (cfg.export_every > 0 && rec.iter % cfg.export_every == 0)
            write_vti(cfg.out / numbered("density", rec.iter, ".vti"), g, s.densities, cfg.vti);
        if (cfg.checkpoint_every > 0 && rec.iter % cfg.checkpoint_every == 0)
            save_checkpoint(cfg.out / numbered("checkpoint", rec.iter, ".tpf"), g, s);
        if (log) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "it %4d  c %.6e  vol %.6f  ch %.4f  cg %3d (%.1e)  %.2fs\n", rec.iter,
                          rec.compliance, rec.volume, rec.change, rec.cg_iters, rec.cg_residual, rec.wall_s);
            *log << buf << std::flush;
        }
    };
    o.result = opt.run(std::move(state), on_iter);

    o.memory.fine_dofs = g.num_dofs();
    if (!o.result.history.empty()) o.memory.solver_vectors = o.result.history.back().aux_scalars;
    if (const MgHierarchy* h = opt.hierarchy()) {
        o.memory.coarse_operators = h->coarse_operator_scalars();
        o.memory.coarse_factor = h->factor_scalars();
    }

    write_vti(cfg.out / "density_final.vti", g, o.result.state.densities, cfg.vti);
    save_checkpoint(cfg.out / "checkpoint_final.tpf", g, o.result.state);
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(cfg.out / "summary.json", summary_json(o).dump(2) + "\n");
    if (log)
        *log << (o.result.converged ? "converged" : "stopped") << " after " << o.result.state.iteration
             << " iterations in " << o.seconds << " s\n";
    return o;
}

std::vector<BenchCell> parse_bench_matrix(const std::string& text) {
    std::vector<BenchCell> cells;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string word, settings;
        while (words >> word) settings += word + "\n";
        if (settings.empty()) continue;
        BenchCell c;
        try {
            c.cfg = parse_config_text(settings);
        } catch (const ConfigError& e) {
            throw ConfigError(e.kind(), "bench matrix line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto res = c.cfg.resolution ? format_resolution(*c.cfg.resolution) : std::string("default");
        c.label = numbered("cell", int(cells.size()), "") + "_" + c.cfg.preset + "_" + res + "_" + to_string(c.cfg.scheme);
        cells.push_back(std::move(c));
    }
    if (cells.empty()) throw ConfigError(ConfigErrorKind::malformed, "bench matrix has no cells");
    return cells;
}

std::vector<BenchCell> parse_bench_matrix_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigErrorKind::io, "cannot read bench matrix " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_bench_matrix(ss.str());
}

std::vector<BenchRow> run_benchmark(const std::vector<BenchCell>& cells, const fs::path& out, std::ostream* log) {
    std::vector<BenchRow> rows;
    for (const auto& cell : cells) {
        BenchRow row;
        row.preset = cell.cfg.preset;
        row.scheme = to_string(cell.cfg.scheme);
        row.resolution = cell.cfg.resolution ? format_resolution(*cell.cfg.resolution) : "default";
        RunConfig cfg = cell.cfg;
        cfg.out = out / cell.label;
        try {
            const RunOutcome o = run_design(cfg, log);
            row.resolution = format_resolution(o.run.resolution);
            row.ok = true;
            row.iterations = o.result.state.iteration;
            row.converged = o.result.converged;
            row.compliance = o.result.history.empty() ? 0.0 : o.result.history.back().compliance;
            double wall = 0.0, cg = 0.0;
            for (const auto& h : o.result.history) wall += h.wall_s, cg += h.cg_iters;
            const double n = std::max<double>(1.0, double(o.result.history.size()));
            row.seconds_per_iteration = wall / n;
            row.mean_cg_iterations = cg / n;
            row.memory = o.memory;
        } catch (const std::exception& e) {
            row.error = e.what();
            if (log) *log << "cell " << cell.label << " failed: " << e.what() << "\n";
        }
        rows.push_back(std::move(row));
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::map<std::pair<std::string, std::string>, const BenchRow*> galerkin;
    for (const auto& r : rows)
        if (r.ok && r.scheme == "galerkin") galerkin.emplace(std::make_pair(r.preset, r.resolution), &r);
    for (auto& r : rows) {
        r.total_memory_ratio = r.coarse_memory_ratio = nan;
        const auto it = galerkin.find({r.preset, r.resolution});
        if (!r.ok || it == galerkin.end()) continue;
        const MemoryReport& ref = it->second->memory;
        if (ref.total() > 0) r.total_memory_ratio = double(r.memory.total()) / double(ref.total());
        if (ref.coarse_level() > 0) r.coarse_memory_ratio = double(r.memory.coarse_level()) / double(ref.coarse_level());
    }

    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream csv(out / "bench.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot open " + (out / "bench.csv").string() + " for writing");
    csv << "preset,resolution,scheme,status,iterations,converged,final_compliance,time_per_iter_s,mean_cg_iters,"
           "fine_dofs,solver_vector_bytes,coarse_level_bytes,total_aux_bytes,memory_ratio_vs_galerkin,"
           "coarse_ratio_vs_galerkin,error\n";
    for (const auto& r : rows) {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%d,%d,%.10g,%.6f,%.3f,%zu,%zu,%zu,%zu,%.6f,%.6f,", r.preset.c_str(),
                      r.resolution.c_str(), r.scheme.c_str(), r.ok ? "ok" : "failed", r.iterations, int(r.converged),
                      r.compliance, r.seconds_per_iteration, r.mean_cg_iterations, r.memory.fine_dofs,
                      8 * r.memory.solver_vectors, 8 * r.memory.coarse_level(), 8 * r.memory.total(),
                      r.total_memory_ratio, r.coarse_memory_ratio);
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n' || c == '"') c = ' ';
        csv << buf << err << "\n";
    }
    return rows;
}

}  // namespace mgtopo::app
