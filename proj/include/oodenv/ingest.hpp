#pragma once

// Loading of pre-extracted CSV cohorts, cohort filters and the
// minimum-hospital-size exclusion.
//
// Directory layout:
//   hospitals.csv   hospital_id,region,teaching,num_beds_bucket
//   stays.csv       stay_id,hospital_id,age,gender,admission_height,admission_weight,
//                   apache_admission_dx,first_stay,alive_at_48h,label
//   timeseries.csv  stay_id,offset_minutes,feature,value   (long format)

#include "oodenv/core.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace oodenv {

struct LoadReport {
  std::vector<std::string> errors;    // unparseable rows, skipped
  std::vector<std::string> warnings;  // unknown categories, dropped observations
};

struct LoadResult {
  Dataset dataset;
  LoadReport report;
};

/// Parses the three CSV files into a canonical Dataset. Throws DataError on a
/// missing file, a header mismatch or a duplicate stay_id.
LoadResult load_dataset(const std::filesystem::path& dir,
                        const FeatureSchema& schema = FeatureSchema::default_schema(),
                        int steps = kDefaultSteps);

/// Writes the canonical CSV layout. Each observed hourly cell becomes one
/// long-format row at the start of its hour, so loading reproduces the
/// dataset exactly.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct CohortFilter {
  double age_min = 18.0;
  double age_max = 89.0;
  bool first_stay_only = true;
  bool alive_at_window_end = true;
  int window_hours = kDefaultSteps;

  void validate() const;
};

struct FilterResult {
  Dataset dataset;
  std::map<std::string, int> removed;  // reason -> count ("age", "not_first_stay", "died_in_window")
};

/// Keeps stays aged within [age_min, age_max] that are first stays and alive
/// at the end of the observation window. Each removed stay is counted under
/// the first reason that applies.
FilterResult apply_cohort_filter(const Dataset& ds, const CohortFilter& filter = {});

/// Drops hospitals (and their stays) with fewer than `min_stays` stays.
Dataset exclude_small_hospitals(const Dataset& ds, int min_stays = 50,
                                std::vector<HospitalId>* removed = nullptr);

}  // namespace oodenv
