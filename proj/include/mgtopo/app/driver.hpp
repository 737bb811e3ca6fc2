/// @file driver.hpp
/// @brief Batch runs with logging, exports and checkpoints, and the scheme
/// comparison benchmark.
#pragma once

#include "mgtopo/app/config.hpp"
#include "mgtopo/app/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mgtopo::app {

/// Auxiliary storage in scalars, sampled after the last design iteration.
struct MemoryReport {
    std::size_t fine_dofs = 0;
    /// PCG vectors plus level-resident V-cycle vectors.
    std::size_t solver_vectors = 0;
    /// Coarse stencils (Galerkin) or coarse densities (homogenized).
    std::size_t coarse_operators = 0;
    std::size_t coarse_factor = 0;

    std::size_t coarse_level() const noexcept { return coarse_operators + coarse_factor; }
    std::size_t total() const noexcept { return solver_vectors + coarse_level(); }
};

struct RunOutcome {
    ResolvedRun run;
    OptResult result;
    MemoryReport memory;
    double seconds = 0.0;
    std::filesystem::path out_dir;
};

/// Runs one configuration. Writes history.csv, config.txt, summary.json,
/// density_final.vti and checkpoint_final.tpf into cfg.out, plus periodic
/// density_NNNN.vti and checkpoint_NNNN.tpf files.
RunOutcome run_design(const RunConfig& cfg, std::ostream* log = nullptr);

struct BenchCell {
    RunConfig cfg;
    std::string label;
};

/// One cell per non-empty line; each line is a list of key=value settings.
std::vector<BenchCell> parse_bench_matrix(const std::string& text);
std::vector<BenchCell> parse_bench_matrix_file(const std::filesystem::path& path);

struct BenchRow {
    std::string preset;
    std::string resolution;
    std::string scheme;
    bool ok = false;
    std::string error;
    int iterations = 0;
    bool converged = false;
    double compliance = 0.0;
    double seconds_per_iteration = 0.0;
    double mean_cg_iterations = 0.0;
    MemoryReport memory;
    /// Ratios against the Galerkin row with the same preset and resolution; NaN when absent.
    double total_memory_ratio = 0.0;
    double coarse_memory_ratio = 0.0;
};

/// Runs every cell into out/<label>, continuing past failures, and writes out/bench.csv.
std::vector<BenchRow> run_benchmark(const std::vector<BenchCell>& cells, const std::filesystem::path& out,
                                    std::ostream* log = nullptr);

}  // namespace mgtopo::app
