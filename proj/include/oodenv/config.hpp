#pragma once

// Run configuration: one JSON document, every key optional, unknown keys
// rejected. See configs/example.json for the full grammar.

#include "oodenv/datagen.hpp"
#include "oodenv/ingest.hpp"
#include "oodenv/loho.hpp"
#include "oodenv/partition.hpp"
#include "oodenv/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace oodenv {

struct RunConfig {
  std::uint64_t seed = 0;
  /// Ingest path; the synthetic generator is used when absent.
  std::optional<std::string> data_path;
  GenConfig synthetic;
  std::optional<CohortFilter> cohort;  // applied to ingested data only
  int min_hospital_stays = 0;          // 0 disables the small-hospital exclusion
  LohoConfig loho;
  Preset loho_preset = Preset::Small;
  Ratios inner_ratios = kDefaultInnerRatios;
  Ratios split_targets = kDefaultSplitTargets;
  ScenarioConfig scenarios;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Throws ConfigError on malformed JSON, unknown keys or invalid values.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved configuration, every default spelled out.
std::string run_config_to_json(const RunConfig& cfg);

std::string manifest_to_json(const ShiftManifest& manifest, const GenConfig& cfg);

}  // namespace oodenv
