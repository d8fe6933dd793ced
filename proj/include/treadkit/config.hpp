#pragma once

#include <treadkit/appearance.hpp>
#include <treadkit/renderer.hpp>
#include <treadkit/synth.hpp>

#include <filesystem>
#include <string>

namespace treadkit {

/// Every tunable default of the tool, grouped like the config file sections.
struct ToolConfig {
    SynthDepthConfig synth;
    SynthRanges ranges;
    int variants = 10;          // depth maps per print, 10..15
    int lights_per_variant = 1;

    double palette_bandwidth = 0.08;
    std::size_t palette_max_points = 20000;
    ComposeOptions compose;
    PseudoAlbedoOptions pseudo;

    RenderParams render;

    int window = 45;  // local-mean window of the print metric
    double tps_lambda = 0.5;
    double print_threshold = 0.5;
};

/// Parses `[section]` headers and `key = value` lines (# comments, numbers,
/// true/false). Every key must be known; see format_config for the full list.
/// Throws ArgumentError naming the source and line on any problem.
ToolConfig parse_config(const std::string& text, const std::string& source = "config");
ToolConfig load_config(const std::filesystem::path& path);

/// All keys with their current values, in the format parse_config reads.
std::string format_config(const ToolConfig& cfg);

} // namespace treadkit
