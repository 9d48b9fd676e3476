#pragma once

// Synthetic multi-hospital datasets with known, injected distribution shifts.
//
// Every hospital draws from its own random substream keyed by
// (seed, hospital_id), so shifting one hospital leaves all others
// bit-identical. Hourly series follow a per-feature AR(1) process around a
// hospital mean plus a patient offset; the label is Bernoulli with a logistic
// link on the per-feature means of the latent series plus standardised age.

#include "oodenv/core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace oodenv {

struct ShiftSpec {
  enum class Kind { LabelNoise, ConceptShift, CovariateShift, PrevalenceShift };

  Kind kind = Kind::LabelNoise;
  std::vector<HospitalId> target_hospitals;
  double rate = 0.0;                        // LabelNoise: flip probability, <= 0.5
  std::vector<double> coefficient_scale;    // ConceptShift: per-feature multiplier (1 value broadcasts)
  std::vector<double> mean_offset;          // CovariateShift: standardised offset per feature (1 value broadcasts)
  double prevalence = 0.0;                  // PrevalenceShift: new target prevalence
};

std::string_view to_string(ShiftSpec::Kind k);
ShiftSpec::Kind parse_shift_kind(std::string_view s);

struct GenConfig {
  int n_hospitals = 10;
  int min_stays = 100;
  int max_stays = 200;
  int steps = kDefaultSteps;
  double base_prevalence = 0.11;
  std::uint64_t seed = 0;
  std::vector<ShiftSpec> shifts;
  /// Weights over Midwest, West, Northeast, South, Missing.
  std::array<double, 5> region_weights{0.28, 0.22, 0.10, 0.33, 0.07};
  /// Norm of the global coefficient vector over the hourly features.
  double signal_strength = 10.0;
  /// Per-hospital jitter (sd) on coefficients and feature means.
  double hospital_jitter = 0.05;
  /// Fraction of hourly cells dropped to missing.
  double missing_rate = 0.10;
  HospitalId first_hospital_id = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Ground truth for one generated hospital.
struct HospitalLatent {
  std::vector<std::string> applied_shifts;
  std::vector<double> coefficients;   // hourly features followed by standardised age
  double intercept = 0.0;
  std::vector<double> feature_mean;   // standardised hospital mean per hourly feature
  double label_noise = 0.0;
  double male_fraction = 0.0;
};

struct ShiftManifest {
  std::uint64_t seed = 0;
  std::map<HospitalId, HospitalLatent> hospitals;

  bool operator==(const ShiftManifest& o) const;
};

std::pair<Dataset, ShiftManifest> generate(const GenConfig& cfg);

/// Flips each label of the targeted hospitals independently with
/// probability `rate`. Throws ConfigError for rate outside [0, 0.5] and
/// DataError for an unknown hospital.
Dataset apply_label_noise(const Dataset& ds, std::span<const HospitalId> hospitals, double rate,
                          std::uint64_t seed);

/// E[sigmoid(X)] for X ~ N(mean, var), by fixed-grid quadrature.
double mean_sigmoid(double mean, double var);

/// Intercept b with E[sigmoid(N(b, var))] = prevalence.
double calibrate_intercept(double prevalence, double var);

}  // namespace oodenv
