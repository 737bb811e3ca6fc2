/// @file preset.hpp
/// @brief Named benchmark problems that scale with the requested resolution
/// while keeping their physical dimensions.
#pragma once

#include "mgtopo/optimize.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace mgtopo::app {

enum class LoadProfile { uniform, parabolic };

const char* to_string(LoadProfile p) noexcept;
LoadProfile parse_load_profile(const std::string& s);

struct PresetInfo {
    std::string name;
    /// Physical extent along x, y, z.
    std::array<double, 3> domain;
    std::array<int, 3> default_resolution;
    double volfrac;
    std::string summary;
};

struct PresetOptions {
    /// Lateral load profile of the high-rise preset.
    LoadProfile profile = LoadProfile::uniform;
};

/// Raised for unknown preset names and resolutions that distort the domain.
class PresetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

const std::vector<PresetInfo>& presets();
const PresetInfo& preset_info(const std::string& name);

/// Throws PresetError unless the resolution gives cubic elements on the preset domain.
double element_size(const PresetInfo& info, const std::array<int, 3>& resolution);

Problem instantiate_preset(const std::string& name, const std::array<int, 3>& resolution,
                           const PresetOptions& opts = {});

/// Nodal forces for a pressure on the node rectangle [lo, hi] (node indices
/// along the two tangential axes in increasing axis order, inclusive) of the
/// plane `normal` = `plane`. Rectangle edges get half weights; a degenerate
/// axis contributes no length, so a line of nodes takes a force per length.
/// Constrained DOFs are skipped.
void add_surface_load(BoundarySpec& bc, const StructuredGrid& g, Axis normal, int plane, std::array<int, 2> lo,
                      std::array<int, 2> hi, Axis direction, double pressure);
void add_surface_load(BoundarySpec& bc, const StructuredGrid& g, Axis normal, int plane, std::array<int, 2> lo,
                      std::array<int, 2> hi, Axis direction,
                      const std::function<double(const std::array<double, 3>&)>& pressure);

}  // namespace mgtopo::app
