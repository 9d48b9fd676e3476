#include "oodenv/datagen.hpp"

#include "oodenv/errors.hpp"
#include "oodenv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace oodenv {

namespace {

// Substream tags.
constexpr std::uint64_t kGlobalStream = 0x676c6f62ULL;
constexpr std::uint64_t kHospitalStream = 0x686f7370ULL;
constexpr std::uint64_t kStayStream = 0x73746179ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973ULL;

// Clinical location and scale of each hourly feature in the default schema.
constexpr double kFeatureMean[] = {85.0, 80.0, 60.0, 120.0, 96.0, 18.0, 37.0, 140.0, 0.40, 7.38};
constexpr double kFeatureSd[] = {15.0, 12.0, 10.0, 18.0, 2.5, 5.0, 0.6, 40.0, 0.10, 0.06};

constexpr double kAgeMean = 64.0;
constexpr double kAgeSd = 15.0;
constexpr double kAgeCoefficient = 0.4;
constexpr double kAr = 0.7;
constexpr double kArSd = 0.5;  // stationary sd of the within-stay process
constexpr double kCategoryRedraw = 0.15;
constexpr double kStaticMissing = 0.05;

constexpr double kBedWeights[] = {0.10, 0.35, 0.35, 0.15, 0.05};
// Base multinomials for Eyes (1-4), Motor (1-6), Verbal (1-5).
constexpr double kEyesWeights[] = {0.10, 0.15, 0.25, 0.50};
constexpr double kMotorWeights[] = {0.05, 0.05, 0.05, 0.10, 0.20, 0.55};
constexpr double kVerbalWeights[] = {0.20, 0.05, 0.10, 0.20, 0.45};

std::vector<double> jitter_weights(std::span<const double> base, Rng& rng) {
  std::vector<double> w(base.begin(), base.end());
  for (auto& x : w) x *= std::exp(0.2 * rng.normal());
  return w;
}

std::vector<double> broadcast(const std::vector<double>& v, std::size_t n, const char* field) {
  if (v.size() == 1) return std::vector<double>(n, v.front());
  if (v.size() != n)
    throw ConfigError(std::string("shift ") + field + " must have 1 or " + std::to_string(n) +
                      " entries");
  return v;
}

}  // namespace

std::string_view to_string(ShiftSpec::Kind k) {
  switch (k) {
    case ShiftSpec::Kind::LabelNoise: return "label_noise";
    case ShiftSpec::Kind::ConceptShift: return "concept_shift";
    case ShiftSpec::Kind::CovariateShift: return "covariate_shift";
    case ShiftSpec::Kind::PrevalenceShift: return "prevalence_shift";
  }
  return "";
}

ShiftSpec::Kind parse_shift_kind(std::string_view s) {
  if (s == "label_noise") return ShiftSpec::Kind::LabelNoise;
  if (s == "concept_shift") return ShiftSpec::Kind::ConceptShift;
  if (s == "covariate_shift") return ShiftSpec::Kind::CovariateShift;
  if (s == "prevalence_shift") return ShiftSpec::Kind::PrevalenceShift;
  throw ConfigError("unknown shift kind '" + std::string(s) + "'");
}

bool ShiftManifest::operator==(const ShiftManifest& o) const {
  if (seed != o.seed || hospitals.size() != o.hospitals.size()) return false;
  for (const auto& [id, a] : hospitals) {
    auto it = o.hospitals.find(id);
    if (it == o.hospitals.end()) return false;
    const auto& b = it->second;
    if (a.applied_shifts != b.applied_shifts || a.coefficients != b.coefficients ||
        a.intercept != b.intercept || a.feature_mean != b.feature_mean ||
        a.label_noise != b.label_noise || a.male_fraction != b.male_fraction)
      return false;
  }
  return true;
}

void GenConfig::validate() const {
  if (n_hospitals < 1) throw ConfigError("n_hospitals must be >= 1");
  if (min_stays < 1) throw ConfigError("stays_per_hospital min must be >= 1");
  if (max_stays < min_stays) throw ConfigError("stays_per_hospital max must be >= min");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(base_prevalence > 0.0 && base_prevalence < 1.0))
    throw ConfigError("base_prevalence must lie in (0, 1)");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0))
    throw ConfigError("missing_rate must lie in [0, 1)");
  if (!(signal_strength >= 0.0)) throw ConfigError("signal_strength must be >= 0");
  if (!(hospital_jitter >= 0.0)) throw ConfigError("hospital_jitter must be >= 0");
  double wsum = 0.0;
  for (double w : region_weights) {
    if (!(w >= 0.0)) throw ConfigError("region_distribution weights must be >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ConfigError("region_distribution must have positive mass");
  const HospitalId last = first_hospital_id + n_hospitals - 1;
  for (const auto& s : shifts) {
    if (s.target_hospitals.empty()) throw ConfigError("shift target_hospitals must not be empty");
    for (auto h : s.target_hospitals)
      if (h < first_hospital_id || h > last)
        throw ConfigError("shift target hospital " + std::to_string(h) + " does not exist");
    switch (s.kind) {
      case ShiftSpec::Kind::LabelNoise:
        if (!(s.rate >= 0.0 && s.rate <= 0.5))
          throw ConfigError("label_noise rate must lie in [0, 0.5]");
        break;
      case ShiftSpec::Kind::ConceptShift:
        if (s.coefficient_scale.empty())
          throw ConfigError("concept_shift requires coefficient_scale");
        break;
      case ShiftSpec::Kind::CovariateShift:
        if (s.mean_offset.empty()) throw ConfigError("covariate_shift requires mean_offset");
        break;
      case ShiftSpec::Kind::PrevalenceShift:
        if (!(s.prevalence > 0.0 && s.prevalence < 1.0))
          throw ConfigError("prevalence_shift prevalence must lie in (0, 1)");
        break;
    }
  }
}

double mean_sigmoid(double mean, double var) {
  const double sd = std::sqrt(std::max(var, 0.0));
  if (sd == 0.0) return 1.0 / (1.0 + std::exp(-mean));
  constexpr int kPoints = 801;
  constexpr double kRange = 8.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double z = -kRange + 2.0 * kRange * i / (kPoints - 1);
    const double w = std::exp(-0.5 * z * z) * ((i == 0 || i == kPoints - 1) ? 0.5 : 1.0);
    num += w / (1.0 + std::exp(-(mean + sd * z)));
    den += w;
  }
  return num / den;
}

double calibrate_intercept(double prevalence, double var) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_sigmoid(mid, var) < prevalence ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<Dataset, ShiftManifest> generate(const GenConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.schema = FeatureSchema::default_schema();
  ds.provenance = {Provenance::Kind::Synthetic, "manifest.json"};
  const auto& schema = ds.schema;
  const int n_f = static_cast<int>(schema.continuous_ts.size());
  if (n_f != static_cast<int>(std::size(kFeatureMean)))
    throw ConfigError("generator requires the default feature schema");

  // Global coefficients, shared by every hospital before jitter.
  Rng global(cfg.seed, {kGlobalStream});
  std::vector<double> beta(n_f);
  double norm = 0.0;
  for (auto& b : beta) {
    b = global.normal();
    norm += b * b;
  }
  norm = std::sqrt(norm);
  for (auto& b : beta) b *= cfg.signal_strength / (norm > 0 ? norm : 1.0);
  beta.push_back(kAgeCoefficient);

  // Variance of a stay's latent feature mean: patient offset plus AR noise.
  const double ar_mean_var =
      kArSd * kArSd * (1.0 + kAr) / ((1.0 - kAr) * static_cast<double>(cfg.steps));
  auto logit_var = [&](const std::vector<double>& coef) {
    double v = 0.0;
    for (int f = 0; f < n_f; ++f) v += coef[f] * coef[f] * (1.0 + ar_mean_var);
    return v + coef[n_f] * coef[n_f];
  };
  const double global_intercept = calibrate_intercept(cfg.base_prevalence, logit_var(beta));

  ShiftManifest manifest;
  manifest.seed = cfg.seed;
  const int dx_index = schema.static_cat_index("Apache admission dx");
  const int gender_index = schema.static_cat_index("gender");
  const int height_index = schema.static_cont_index("Admission height");
  const int weight_index = schema.static_cont_index("Admission weight");
  const int age_index = schema.static_cont_index("age");
  const int male_code = schema.code_of("gender", "M");
  const int female_code = schema.code_of("gender", "F");
  const int n_dx = schema.vocab_size("Apache admission dx") - 1;

  for (int i = 0; i < cfg.n_hospitals; ++i) {
    const HospitalId hid = cfg.first_hospital_id + i;
    Rng rng(cfg.seed, {kHospitalStream, static_cast<std::uint64_t>(hid)});

    HospitalMeta meta;
    meta.hospital_id = hid;
    const int n_stays =
        cfg.min_stays + static_cast<int>(rng.below(cfg.max_stays - cfg.min_stays + 1));
    meta.region = kAllRegions[rng.categorical(cfg.region_weights)];
    meta.teaching = rng.bernoulli(0.35);
    meta.bed_bucket = kAllBedBuckets[rng.categorical(kBedWeights)];

    HospitalLatent lat;
    lat.coefficients = beta;
    for (int f = 0; f < n_f; ++f) lat.coefficients[f] += cfg.hospital_jitter * rng.normal();
    lat.feature_mean.resize(n_f);
    for (auto& m : lat.feature_mean) m = cfg.hospital_jitter * rng.normal();
    lat.male_fraction = std::clamp(0.54 + 0.03 * rng.normal(), 0.05, 0.95);
    const double age_mean = kAgeMean + 2.0 * rng.normal();
    const auto eyes_w = jitter_weights(kEyesWeights, rng);
    const auto motor_w = jitter_weights(kMotorWeights, rng);
    const auto verbal_w = jitter_weights(kVerbalWeights, rng);
    std::vector<double> dx_w(n_dx);
    for (int k = 0; k < n_dx; ++k) dx_w[k] = std::exp(0.5 * rng.normal());
    lat.intercept = global_intercept;

    // Injected shifts.
    std::optional<double> prevalence;
    for (const auto& spec : cfg.shifts) {
      if (std::find(spec.target_hospitals.begin(), spec.target_hospitals.end(), hid) ==
          spec.target_hospitals.end())
        continue;
      lat.applied_shifts.emplace_back(to_string(spec.kind));
      switch (spec.kind) {
        case ShiftSpec::Kind::LabelNoise:
          lat.label_noise = spec.rate;
          break;
        case ShiftSpec::Kind::ConceptShift: {
          const auto scale = broadcast(spec.coefficient_scale, n_f, "coefficient_scale");
          for (int f = 0; f < n_f; ++f) lat.coefficients[f] *= scale[f];
          break;
        }
        case ShiftSpec::Kind::CovariateShift: {
          const auto off = broadcast(spec.mean_offset, n_f, "mean_offset");
          for (int f = 0; f < n_f; ++f) lat.feature_mean[f] += off[f];
          break;
        }
        case ShiftSpec::Kind::PrevalenceShift:
          prevalence = spec.prevalence;
          break;
      }
    }
    if (prevalence) lat.intercept = calibrate_intercept(*prevalence, logit_var(lat.coefficients));

    for (int k = 0; k < n_stays; ++k) {
      Rng srng(cfg.seed, {kStayStream, static_cast<std::uint64_t>(hid),
                          static_cast<std::uint64_t>(k)});
      Stay s = make_empty_stay(schema, cfg.steps);
      s.stay_id = hid * 100000 + k + 1;
      s.hospital_id = hid;
      s.age = std::clamp(std::round(srng.normal(age_mean, kAgeSd)), 18.0, 89.0);
      const bool male = srng.bernoulli(lat.male_fraction);
      s.gender = male ? male_code : female_code;

      s.static_cont[height_index] = std::round(srng.normal(male ? 176.0 : 163.0, 8.0) * 10) / 10;
      s.static_cont[weight_index] = std::round(srng.normal(male ? 86.0 : 73.0, 18.0) * 10) / 10;
      s.static_cont[age_index] = s.age;
      s.static_cont_missing[height_index] = srng.bernoulli(kStaticMissing);
      s.static_cont_missing[weight_index] = srng.bernoulli(kStaticMissing);
      s.static_cont_missing[age_index] = false;
      for (int j : {height_index, weight_index})
        if (s.static_cont_missing[j]) s.static_cont[j] = 0.0;
      s.static_cat[dx_index] = 1 + static_cast<int>(srng.categorical(dx_w));
      s.static_cat[gender_index] = s.gender;

      // Hourly continuous features: AR(1) around hospital mean + patient offset.
      double logit = lat.intercept + lat.coefficients[n_f] * (s.age - kAgeMean) / kAgeSd;
      for (int f = 0; f < n_f; ++f) {
        const double centre = lat.feature_mean[f] + srng.normal();
        double z = centre + kArSd * srng.normal();
        double sum = 0.0;
        for (int t = 0; t < cfg.steps; ++t) {
          if (t > 0)
            z = centre + kAr * (z - centre) + kArSd * std::sqrt(1.0 - kAr * kAr) * srng.normal();
          sum += z;
          s.ts_cont(t, f) = kFeatureMean[f] + kFeatureSd[f] * z;
          s.ts_cont_missing(t, f) = srng.bernoulli(cfg.missing_rate);
          if (s.ts_cont_missing(t, f)) s.ts_cont(t, f) = 0.0;
        }
        logit += lat.coefficients[f] * sum / cfg.steps;
      }
      s.label = srng.bernoulli(1.0 / (1.0 + std::exp(-logit))) ? 1 : 0;

      // GCS components drift by occasional redraws; the total is their sum.
      int eyes = 1 + static_cast<int>(srng.categorical(eyes_w));
      int motor = 1 + static_cast<int>(srng.categorical(motor_w));
      int verbal = 1 + static_cast<int>(srng.categorical(verbal_w));
      for (int t = 0; t < cfg.steps; ++t) {
        if (t > 0 && srng.bernoulli(kCategoryRedraw)) eyes = 1 + static_cast<int>(srng.categorical(eyes_w));
        if (t > 0 && srng.bernoulli(kCategoryRedraw)) motor = 1 + static_cast<int>(srng.categorical(motor_w));
        if (t > 0 && srng.bernoulli(kCategoryRedraw)) verbal = 1 + static_cast<int>(srng.categorical(verbal_w));
        const int values[] = {eyes + motor + verbal, eyes, motor, verbal};
        for (int j = 0; j < 4; ++j) {
          s.ts_cat(t, j) = schema.code_of(schema.categorical_ts[j], std::to_string(values[j]));
          s.ts_cat_missing(t, j) = srng.bernoulli(cfg.missing_rate);
          if (s.ts_cat_missing(t, j)) s.ts_cat(t, j) = 0;
        }
      }

      if (lat.label_noise > 0.0) {
        Rng nrng(cfg.seed, {kNoiseStream, static_cast<std::uint64_t>(hid),
                            static_cast<std::uint64_t>(s.stay_id)});
        if (nrng.bernoulli(lat.label_noise)) s.label = 1 - s.label;
      }
      ds.stays.push_back(std::move(s));
    }
    ds.hospitals[hid] = meta;
    manifest.hospitals[hid] = std::move(lat);
  }
  ds.canonicalize();
  return {std::move(ds), std::move(manifest)};
}

Dataset apply_label_noise(const Dataset& ds, std::span<const HospitalId> hospitals, double rate,
                          std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 0.5)) throw ConfigError("label noise rate must lie in [0, 0.5]");
  std::set<HospitalId> targets;
  for (auto h : hospitals) {
    if (!ds.hospitals.count(h)) throw DataError("unknown hospital " + std::to_string(h));
    targets.insert(h);
  }
  Dataset out = ds;
  if (rate == 0.0) return out;
  for (auto& s : out.stays) {
    if (!targets.count(s.hospital_id)) continue;
    Rng rng(seed, {kNoiseStream, static_cast<std::uint64_t>(s.hospital_id),
                   static_cast<std::uint64_t>(s.stay_id)});
    if (rng.bernoulli(rate)) s.label = 1 - s.label;
  }
  return out;
}

}  // namespace oodenv
