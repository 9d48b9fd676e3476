#pragma once

// Shared data model: feature schema, hospitals, stays and datasets.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace oodenv {

using HospitalId = std::int64_t;
using StayId = std::int64_t;

/// Per-cell missingness flags for a time-series matrix.
using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using MissingFlags = Eigen::Array<bool, Eigen::Dynamic, 1>;

inline constexpr std::string_view kUnknownLabel = "__unknown__";
inline constexpr int kDefaultSteps = 48;

enum class Region { Midwest, West, Northeast, South, Missing };
enum class BedBucket { LT100, B100_249, B250_499, GE500, Unknown };
enum class SplitLabel { TrainEnv, ValEnv, TestEnv };
enum class SetLabel { TrainSet, ValSet, TestSet };

std::string_view to_string(Region r);
std::string_view to_string(BedBucket b);
std::string_view to_string(SplitLabel s);
std::string_view to_string(SetLabel s);
Region parse_region(std::string_view s);
BedBucket parse_bed_bucket(std::string_view s);
SplitLabel parse_split_label(std::string_view s);
SetLabel parse_set_label(std::string_view s);

inline constexpr Region kAllRegions[] = {Region::Midwest, Region::West, Region::Northeast,
                                         Region::South, Region::Missing};
inline constexpr BedBucket kAllBedBuckets[] = {BedBucket::LT100, BedBucket::B100_249,
                                               BedBucket::B250_499, BedBucket::GE500,
                                               BedBucket::Unknown};

struct FeatureSchema {
  std::vector<std::string> continuous_ts;
  std::vector<std::string> categorical_ts;
  std::vector<std::string> continuous_static;
  std::vector<std::string> categorical_static;
  /// Ordered labels per categorical feature; index is the embedding row and
  /// index 0 is always kUnknownLabel.
  std::map<std::string, std::vector<std::string>> categorical_vocab;

  /// 10 continuous and 4 categorical hourly features, 3 continuous and
  /// 2 categorical static features.
  static FeatureSchema default_schema();

  int vocab_size(const std::string& feature) const;
  /// Vocabulary index of `label`, or 0 when the label is not in the vocabulary.
  int code_of(const std::string& feature, std::string_view label) const;
  const std::string& label_of(const std::string& feature, int code) const;

  /// Vocabulary sizes of categorical_ts followed by categorical_static.
  std::vector<int> categorical_vocab_sizes() const;

  int static_cont_index(std::string_view name) const;
  int static_cat_index(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;
};

struct HospitalMeta {
  HospitalId hospital_id = 0;
  Region region = Region::Missing;
  bool teaching = false;
  BedBucket bed_bucket = BedBucket::Unknown;
  int n_stays = 0;

  bool operator==(const HospitalMeta&) const = default;
};

struct Stay {
  StayId stay_id = 0;
  HospitalId hospital_id = 0;
  int label = 0;
  double age = 0.0;
  int gender = 0;  // code in the "gender" vocabulary
  bool first_stay = true;
  bool alive_at_window_end = true;

  Eigen::VectorXd static_cont;
  MissingFlags static_cont_missing;
  Eigen::VectorXi static_cat;

  Eigen::MatrixXd ts_cont;  // T x |continuous_ts|
  MissingMask ts_cont_missing;
  Eigen::MatrixXi ts_cat;   // T x |categorical_ts|
  MissingMask ts_cat_missing;

  int steps() const { return static_cast<int>(ts_cont.rows()); }
};

bool operator==(const Stay& a, const Stay& b);

struct Provenance {
  enum class Kind { Synthetic, Ingested };
  Kind kind = Kind::Synthetic;
  std::string ref;  // manifest path or source directory

  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  FeatureSchema schema;
  std::map<HospitalId, HospitalMeta> hospitals;
  std::vector<Stay> stays;
  Provenance provenance;

  /// Sorts stays by (hospital_id, stay_id) and recomputes n_stays.
  void canonicalize();

  std::vector<HospitalId> hospital_ids() const;
  /// Number of hourly steps, taken from the first stay (0 when empty).
  int steps() const;
  /// Indices into `stays` grouped by hospital, in canonical order.
  std::map<HospitalId, std::vector<std::size_t>> stays_by_hospital() const;
};

bool operator==(const Dataset& a, const Dataset& b);

struct Violation {
  std::string kind;  // "unknown_hospital", "code_out_of_vocab", "age_out_of_range", ...
  StayId stay_id = -1;
  HospitalId hospital_id = -1;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Lists every broken core invariant. Empty iff the dataset is well formed.
ValidationReport validate_dataset(const Dataset& ds);

/// Allocates an all-missing stay shaped for `schema` with `steps` rows.
Stay make_empty_stay(const FeatureSchema& schema, int steps);

}  // namespace oodenv
