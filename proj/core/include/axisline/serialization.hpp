#pragma once

#include "axisline/benchmark.hpp"
#include "axisline/scene.hpp"
#include "axisline/solver.hpp"
#include "axisline/vanish.hpp"

#include <string>
#include <utility>
#include <vector>

namespace axisline {

/// Self-contained scene dump (config, ground truth, observations, initial
/// estimates). Writing the parse of a dump reproduces it byte for byte.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

/// Per-frame segment file: JSON array of {id, s: [u, v], e: [u, v]}.
std::vector<std::pair<int, Segment2D>> segments_from_json(const std::string& text);
std::string segments_to_json(const std::vector<std::pair<int, Segment2D>>& segments);

/// {vps: [[x, y, w], ...], classes: {id: label}} with vps ordered vertical,
/// horizontal-0, horizontal-1 (present entries only). segment_ids maps the
/// result's segment indices back to file ids.
std::string vp_result_to_json(const VPResult& result, const std::vector<int>& segment_ids);

std::string report_to_json(const OptimizationReport& report);

/// Aggregated benchmark summary (per-cell rows live in the CSV).
std::string bench_report_to_json(const BenchReport& report);

}  // namespace axisline
