#pragma once

#include <span>
#include <string>

#include "tasep/coupling.hpp"
#include "tasep/experiments.hpp"

namespace tasep {

/// Occupancy raster: one band per sample time (top to bottom), each band
/// holding one row of sites per trajectory, stacked.
std::string render_trajectories_svg(std::span<const TrajectorySample> samples);

/// (alpha, beta) scatter, one marker per point annotated with the exponent of
/// its first listed segment. Dashed lines mark the phase boundaries.
std::string render_scatter_svg(std::span<const SummaryRow> rows);

}  // namespace tasep
