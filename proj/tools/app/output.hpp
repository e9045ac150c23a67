// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace vmouse::app {

inline constexpr const char* kToolVersion = "0.1.0";

/// Reproducibility record written next to every run's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::string seed_origin;  // "flag", "env" or "default"
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json results = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Writes <dir>/manifest.json and returns its path.
  std::filesystem::path write(const std::filesystem::path& dir) const;
};

/// --seed wins over VMOUSE_SEED, which wins over `fallback`.
std::pair<std::uint64_t, std::string> resolve_seed(std::optional<std::uint64_t> flag,
                                                   std::uint64_t fallback = 1);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // optional +/- half-width per point
  bool markers = false;
  bool line = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool equal_aspect = false;
  std::optional<double> marker_x;  // vertical guide line
};

/// Minimal self-contained SVG line/scatter plot.
std::string render_svg(const PlotSpec& spec);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vmouse::app
