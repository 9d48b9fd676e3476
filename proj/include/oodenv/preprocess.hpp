#pragma once

// Hourly resampling, forward-fill imputation, standard scaling and
// categorical encoding.

#include "oodenv/core.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace oodenv {

/// One raw long-format measurement of a single stay.
struct Observation {
  double offset_minutes = 0.0;
  std::string feature;
  std::string value;  // numeric text for continuous features, label for categorical
};

struct ResampledSeries {
  Eigen::MatrixXd ts_cont;
  MissingMask ts_cont_missing;
  Eigen::MatrixXi ts_cat;
  MissingMask ts_cat_missing;
  int n_assigned = 0;        // observations placed in a bucket
  int n_out_of_window = 0;   // offsets outside [0, 60 * steps)
  int n_unknown_labels = 0;  // categorical labels mapped to code 0
};

/// Buckets observations into hourly windows [60b, 60(b+1)). Continuous
/// buckets take the mean, categorical buckets the last value by offset.
/// Throws DataError for a feature name outside the schema or an unparseable
/// continuous value.
ResampledSeries resample_hourly(std::span<const Observation> events, const FeatureSchema& schema,
                                int steps = kDefaultSteps);

/// Carries the last observed value forward per column. Leading missing cells
/// take `leading_fill[column]`.
Eigen::MatrixXd forward_fill(const Eigen::MatrixXd& values, const MissingMask& missing,
                             const Eigen::VectorXd& leading_fill);
/// Categorical variant; leading missing cells take code 0.
Eigen::MatrixXi forward_fill(const Eigen::MatrixXi& codes, const MissingMask& missing);

/// Training-set means used for leading gaps and missing static values.
struct FillValues {
  Eigen::VectorXd ts_cont_mean;
  Eigen::VectorXd static_cont_mean;
};

/// Means of the observed (non-missing) values over the fitting stays.
/// Features never observed fall back to 0.
FillValues fit_fill_values(const Dataset& ds, std::span<const std::size_t> fit_idx);

/// A stay after imputation; identical layout to ModelInput but unscaled.
struct ModelInput {
  StayId stay_id = 0;
  HospitalId hospital_id = 0;
  int label = 0;
  Eigen::MatrixXd ts_cont;    // T x n_ts_cont
  Eigen::MatrixXi ts_cat;     // T x n_ts_cat
  Eigen::VectorXd static_cont;
  Eigen::VectorXi static_cat;
};

ModelInput impute(const Stay& stay, const FillValues& fill);

struct Scaler {
  Eigen::VectorXd ts_mean, ts_std;
  Eigen::VectorXd static_mean, static_std;
  std::string fitted_on;
};

/// Population mean and standard deviation per continuous feature over all
/// cells of the imputed fitting stays. Zero spread is clamped to std = 1.
/// Throws DataError on an empty fitting set.
Scaler fit_scaler(std::span<const ModelInput> fitting, std::string fitted_on = "train");

/// (x - mean) / std on every continuous value.
ModelInput apply_scaler(const Scaler& scaler, ModelInput input);

/// Fill values and scaler fitted on one training subset.
struct Preprocessor {
  FillValues fill;
  Scaler scaler;
};

Preprocessor fit_preprocessor(const Dataset& ds, std::span<const std::size_t> train_idx,
                              std::string fitted_on = "train");

/// Imputed, scaled model inputs for `idx`, in the order given.
std::vector<ModelInput> encode(const Dataset& ds, std::span<const std::size_t> idx,
                               const Preprocessor& prep);

}  // namespace oodenv
