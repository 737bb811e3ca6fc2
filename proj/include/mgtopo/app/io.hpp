/// @file io.hpp
/// @brief Result files: VTK ImageData density fields, binary checkpoints and
/// per-iteration CSV logs.
#pragma once

#include "mgtopo/app/config.hpp"
#include "mgtopo/grid.hpp"
#include "mgtopo/optimize.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <vector>

namespace mgtopo::app {

/// Raised on unreadable or unwritable result files; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes cell data "density" as Float32, either ASCII or inline base64 with
/// a UInt32 byte-count header.
void write_vti(const std::filesystem::path& path, const StructuredGrid& grid, std::span<const double> rho,
               VtiEncoding encoding = VtiEncoding::binary);

struct VtiField {
    std::array<int, 3> cells{};
    double spacing = 0.0;
    std::vector<float> density;
};

/// Reads files produced by write_vti.
VtiField read_vti(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Layout, little-endian: "TPF1", u32 version, u32 nelx, nely, nelz, u32
/// iteration, f64 densities[nel], f64 u[3 * nodes].
void save_checkpoint(const std::filesystem::path& path, const StructuredGrid& grid, const OptState& state);
/// Validates magic, version, size and dimensions against `grid`; nothing is
/// returned on failure.
OptState load_checkpoint(const std::filesystem::path& path, const StructuredGrid& grid);

inline constexpr const char* kCsvHeader = "iter,compliance,volume,change,cg_iters,cg_residual,wall_s,aux_scalars";

class CsvLog {
public:
    /// Starts a new log, or when `keep_through` >= 0 keeps the existing rows
    /// with iter <= keep_through and appends after them.
    CsvLog(const std::filesystem::path& path, int keep_through = -1);
    void append(const IterationRecord& rec);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace mgtopo::app
