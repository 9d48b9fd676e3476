#include "oodenv/core.hpp"

#include "oodenv/errors.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace oodenv {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<Enum>(i);
  throw DataError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::string_view kRegionNames[] = {"Midwest", "West", "Northeast", "South",
                                             "Missing"};
constexpr std::string_view kBedNames[] = {"<100", "100-249", "250-499", ">=500", "unknown"};
constexpr std::string_view kSplitNames[] = {"TrainEnv", "ValEnv", "TestEnv"};
constexpr std::string_view kSetNames[] = {"TrainSet", "ValSet", "TestSet"};

template <typename Derived>
bool same_matrix(const Eigen::DenseBase<Derived>& a, const Eigen::DenseBase<Derived>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.derived().array() == b.derived().array()).all();
}

std::vector<std::string> numbered(int lo, int hi) {
  std::vector<std::string> out{std::string(kUnknownLabel)};
  for (int i = lo; i <= hi; ++i) out.push_back(std::to_string(i));
  return out;
}

}  // namespace

std::string_view to_string(Region r) { return kRegionNames[static_cast<int>(r)]; }
std::string_view to_string(BedBucket b) { return kBedNames[static_cast<int>(b)]; }
std::string_view to_string(SplitLabel s) { return kSplitNames[static_cast<int>(s)]; }
std::string_view to_string(SetLabel s) { return kSetNames[static_cast<int>(s)]; }

Region parse_region(std::string_view s) { return parse_enum<Region>(s, kRegionNames, "region"); }
BedBucket parse_bed_bucket(std::string_view s) {
  return parse_enum<BedBucket>(s, kBedNames, "bed bucket");
}
SplitLabel parse_split_label(std::string_view s) {
  return parse_enum<SplitLabel>(s, kSplitNames, "split label");
}
SetLabel parse_set_label(std::string_view s) {
  return parse_enum<SetLabel>(s, kSetNames, "set label");
}

FeatureSchema FeatureSchema::default_schema() {
  FeatureSchema s;
  s.continuous_ts = {"Heart Rate",   "MAP (mmHg)",       "Invasive BP Diastolic",
                     "Invasive BP Systolic", "O2 Saturation", "Respiratory Rate",
                     "Temperature (C)",      "glucose",       "FiO2",
                     "pH"};
  s.categorical_ts = {"GCS Total", "Eyes", "Motor", "Verbal"};
  s.continuous_static = {"Admission height", "Admission weight", "age"};
  s.categorical_static = {"Apache admission dx", "gender"};
  s.categorical_vocab["GCS Total"] = numbered(3, 15);
  s.categorical_vocab["Eyes"] = numbered(1, 4);
  s.categorical_vocab["Motor"] = numbered(1, 6);
  s.categorical_vocab["Verbal"] = numbered(1, 5);
  s.categorical_vocab["Apache admission dx"] = {
      std::string(kUnknownLabel), "Sepsis pulmonary", "Sepsis urinary", "CABG alone",
      "Acute MI",        "CHF",               "Rhythm disturbance", "Cardiac arrest",
      "Stroke",          "Intracranial hemorrhage", "GI bleed",     "Overdose",
      "Pneumonia",       "Diabetic ketoacidosis",   "Respiratory arrest", "COPD exacerbation",
      "Renal failure",   "Head trauma",       "Seizures",          "Pancreatitis",
      "Other"};
  s.categorical_vocab["gender"] = {std::string(kUnknownLabel), "F", "M"};
  return s;
}

int FeatureSchema::vocab_size(const std::string& feature) const {
  auto it = categorical_vocab.find(feature);
  if (it == categorical_vocab.end()) throw DataError("no vocabulary for feature '" + feature + "'");
  return static_cast<int>(it->second.size());
}

int FeatureSchema::code_of(const std::string& feature, std::string_view label) const {
  auto it = categorical_vocab.find(feature);
  if (it == categorical_vocab.end()) throw DataError("no vocabulary for feature '" + feature + "'");
  const auto& vocab = it->second;
  for (std::size_t i = 1; i < vocab.size(); ++i)
    if (vocab[i] == label) return static_cast<int>(i);
  return 0;
}

const std::string& FeatureSchema::label_of(const std::string& feature, int code) const {
  const auto& vocab = categorical_vocab.at(feature);
  if (code < 0 || code >= static_cast<int>(vocab.size()))
    throw DataError("code " + std::to_string(code) + " out of vocabulary for '" + feature + "'");
  return vocab[code];
}

std::vector<int> FeatureSchema::categorical_vocab_sizes() const {
  std::vector<int> out;
  for (const auto& f : categorical_ts) out.push_back(vocab_size(f));
  for (const auto& f : categorical_static) out.push_back(vocab_size(f));
  return out;
}

int FeatureSchema::static_cont_index(std::string_view name) const {
  for (std::size_t i = 0; i < continuous_static.size(); ++i)
    if (continuous_static[i] == name) return static_cast<int>(i);
  return -1;
}

int FeatureSchema::static_cat_index(std::string_view name) const {
  for (std::size_t i = 0; i < categorical_static.size(); ++i)
    if (categorical_static[i] == name) return static_cast<int>(i);
  return -1;
}

bool operator==(const Stay& a, const Stay& b) {
  return a.stay_id == b.stay_id && a.hospital_id == b.hospital_id && a.label == b.label &&
         a.age == b.age && a.gender == b.gender && a.first_stay == b.first_stay &&
         a.alive_at_window_end == b.alive_at_window_end &&
         same_matrix(a.static_cont, b.static_cont) &&
         same_matrix(a.static_cont_missing, b.static_cont_missing) &&
         same_matrix(a.static_cat, b.static_cat) && same_matrix(a.ts_cont, b.ts_cont) &&
         same_matrix(a.ts_cont_missing, b.ts_cont_missing) && same_matrix(a.ts_cat, b.ts_cat) &&
         same_matrix(a.ts_cat_missing, b.ts_cat_missing);
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.schema == b.schema && a.hospitals == b.hospitals && a.stays == b.stays &&
         a.provenance == b.provenance;
}

void Dataset::canonicalize() {
  std::sort(stays.begin(), stays.end(), [](const Stay& x, const Stay& y) {
    return std::tie(x.hospital_id, x.stay_id) < std::tie(y.hospital_id, y.stay_id);
  });
  for (auto& [id, meta] : hospitals) meta.n_stays = 0;
  for (const auto& s : stays) {
    auto it = hospitals.find(s.hospital_id);
    if (it != hospitals.end()) ++it->second.n_stays;
  }
}

std::vector<HospitalId> Dataset::hospital_ids() const {
  std::vector<HospitalId> ids;
  ids.reserve(hospitals.size());
  for (const auto& [id, meta] : hospitals) ids.push_back(id);
  return ids;
}

int Dataset::steps() const { return stays.empty() ? 0 : stays.front().steps(); }

std::map<HospitalId, std::vector<std::size_t>> Dataset::stays_by_hospital() const {
  std::map<HospitalId, std::vector<std::size_t>> out;
  for (const auto& [id, meta] : hospitals) out[id];
  for (std::size_t i = 0; i < stays.size(); ++i) out[stays[i].hospital_id].push_back(i);
  return out;
}

Stay make_empty_stay(const FeatureSchema& schema, int steps) {
  Stay s;
  const auto n_tc = static_cast<Eigen::Index>(schema.continuous_ts.size());
  const auto n_tk = static_cast<Eigen::Index>(schema.categorical_ts.size());
  const auto n_sc = static_cast<Eigen::Index>(schema.continuous_static.size());
  const auto n_sk = static_cast<Eigen::Index>(schema.categorical_static.size());
  s.ts_cont = Eigen::MatrixXd::Zero(steps, n_tc);
  s.ts_cont_missing = MissingMask::Constant(steps, n_tc, true);
  s.ts_cat = Eigen::MatrixXi::Zero(steps, n_tk);
  s.ts_cat_missing = MissingMask::Constant(steps, n_tk, true);
  s.static_cont = Eigen::VectorXd::Zero(n_sc);
  s.static_cont_missing = MissingFlags::Constant(n_sc, true);
  s.static_cat = Eigen::VectorXi::Zero(n_sk);
  return s;
}

ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport out;
  auto add = [&](std::string kind, const Stay* s, std::string msg) {
    out.push_back({std::move(kind), s ? s->stay_id : -1, s ? s->hospital_id : -1, std::move(msg)});
  };

  // Reference T is the most common step count.
  std::map<int, int> step_counts;
  for (const auto& s : ds.stays) ++step_counts[s.steps()];
  int ref_steps = 0, best = -1;
  for (auto [t, c] : step_counts)
    if (c > best) best = c, ref_steps = t;

  const auto vocab = ds.schema.categorical_vocab_sizes();
  const auto n_tk = ds.schema.categorical_ts.size();
  std::set<StayId> seen;
  std::map<HospitalId, int> counts;
  const Stay* prev = nullptr;

  for (const auto& s : ds.stays) {
    if (!ds.hospitals.count(s.hospital_id)) {
      std::ostringstream m;
      m << "stay " << s.stay_id << " references unknown hospital " << s.hospital_id;
      add("unknown_hospital", &s, m.str());
    }
    ++counts[s.hospital_id];
    if (!seen.insert(s.stay_id).second)
      add("duplicate_stay_id", &s, "duplicate stay_id " + std::to_string(s.stay_id));
    if (prev && std::tie(prev->hospital_id, prev->stay_id) > std::tie(s.hospital_id, s.stay_id))
      add("non_canonical_order", &s, "stays are not sorted by (hospital_id, stay_id)");
    prev = &s;

    if (!(s.age >= 18.0 && s.age <= 89.0))
      add("age_out_of_range", &s, "age " + std::to_string(s.age) + " outside [18, 89]");
    if (s.label != 0 && s.label != 1)
      add("label_not_binary", &s, "label " + std::to_string(s.label) + " is not 0/1");
    if (s.steps() != ref_steps)
      add("inconsistent_steps", &s,
          "stay has T=" + std::to_string(s.steps()) + ", dataset T=" + std::to_string(ref_steps));

    const bool shapes_ok =
        s.ts_cont.cols() == static_cast<Eigen::Index>(ds.schema.continuous_ts.size()) &&
        s.ts_cat.cols() == static_cast<Eigen::Index>(n_tk) &&
        s.ts_cat.rows() == s.ts_cont.rows() && s.ts_cont_missing.rows() == s.ts_cont.rows() &&
        s.ts_cont_missing.cols() == s.ts_cont.cols() && s.ts_cat_missing.rows() == s.ts_cat.rows() &&
        s.ts_cat_missing.cols() == s.ts_cat.cols() &&
        s.static_cont.size() == static_cast<Eigen::Index>(ds.schema.continuous_static.size()) &&
        s.static_cont_missing.size() == s.static_cont.size() &&
        s.static_cat.size() == static_cast<Eigen::Index>(ds.schema.categorical_static.size());
    if (!shapes_ok) {
      add("shape_mismatch", &s, "stay tensors do not match the feature schema");
      continue;
    }
    for (Eigen::Index j = 0; j < s.ts_cat.cols(); ++j)
      for (Eigen::Index t = 0; t < s.ts_cat.rows(); ++t) {
        const int c = s.ts_cat(t, j);
        if (!s.ts_cat_missing(t, j) && (c < 0 || c >= vocab[j])) {
          add("code_out_of_vocab", &s,
              "code " + std::to_string(c) + " out of vocabulary for '" +
                  ds.schema.categorical_ts[j] + "'");
          t = s.ts_cat.rows();
        }
      }
    for (Eigen::Index j = 0; j < s.static_cat.size(); ++j) {
      const int c = s.static_cat(j);
      if (c < 0 || c >= vocab[n_tk + j])
        add("code_out_of_vocab", &s,
            "code " + std::to_string(c) + " out of vocabulary for '" +
                ds.schema.categorical_static[j] + "'");
    }
    if (s.gender < 0 || (ds.schema.categorical_vocab.count("gender") &&
                         s.gender >= ds.schema.vocab_size("gender")))
      add("code_out_of_vocab", &s, "gender code out of vocabulary");
  }

  for (const auto& [id, meta] : ds.hospitals) {
    const int actual = counts.count(id) ? counts.at(id) : 0;
    if (meta.hospital_id != id)
      add("hospital_key_mismatch", nullptr, "hospital map key " + std::to_string(id) +
                                                " holds id " + std::to_string(meta.hospital_id));
    if (meta.n_stays != actual)
      add("n_stays_mismatch", nullptr,
          "hospital " + std::to_string(id) + " records n_stays=" + std::to_string(meta.n_stays) +
              " but has " + std::to_string(actual) + " stays");
  }

  for (const auto& [feature, labels] : ds.schema.categorical_vocab)
    if (labels.empty() || labels.front() != kUnknownLabel)
      add("vocab_missing_unknown", nullptr,
          "vocabulary of '" + feature + "' must start with " + std::string(kUnknownLabel));
  return out;
}

}  // namespace oodenv
