#include "oodenv/crosssec.hpp"

#include "oodenv/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

namespace oodenv {

QuantileBins quantile_bins(std::span<const double> values, int k) {
  const auto n = values.size();
  if (k < 1) throw ConfigError("number of quantiles must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw DataError("cannot form " + std::to_string(k) + " quantiles from " + std::to_string(n) +
                    " values");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  QuantileBins out;
  out.bin.resize(n);
  for (std::size_t r = 0; r < n; ++r)
    out.bin[order[r]] = static_cast<int>(r * static_cast<std::size_t>(k) / n);
  for (int b = 1; b < k; ++b) {
    const std::size_t first = (static_cast<std::size_t>(b) * n + k - 1) / k;
    out.edges.push_back(values[order[first]]);
    if (values[order[first - 1]] == values[order[first]])
      out.warnings.push_back("tied values straddle the boundary of bin " + std::to_string(b + 1) +
                             "; split by input order");
  }
  return out;
}

CrossSectionPlan make_cross_section(const Dataset& ds, const std::string& cont_feature, int k,
                                    const std::optional<std::string>& cat_feature,
                                    std::vector<std::string> test_bins,
                                    std::vector<std::string> val_bins) {
  const auto& schema = ds.schema;
  const int ci = schema.static_cont_index(cont_feature);
  if (ci < 0) throw ConfigError("unknown continuous static feature '" + cont_feature + "'");
  int gi = -1;
  if (cat_feature) {
    gi = schema.static_cat_index(*cat_feature);
    if (gi < 0) throw ConfigError("unknown categorical static feature '" + *cat_feature + "'");
  }

  CrossSectionPlan plan;
  plan.cont_feature = cont_feature;
  plan.k = k;
  plan.cat_feature = cat_feature;

  std::vector<std::size_t> present;
  std::vector<double> values;
  for (std::size_t i = 0; i < ds.stays.size(); ++i)
    if (!ds.stays[i].static_cont_missing[ci]) {
      present.push_back(i);
      values.push_back(ds.stays[i].static_cont[ci]);
    }
  const auto bins = quantile_bins(values, k);
  plan.bin_edges = bins.edges;
  plan.warnings = bins.warnings;

  auto bin_label = [&](int b) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_q%02d", b + 1);
    return cont_feature + buf;
  };
  std::vector<std::string> cont_label(ds.stays.size(), cont_feature + "=missing");
  for (std::size_t r = 0; r < present.size(); ++r) cont_label[present[r]] = bin_label(bins.bin[r]);

  std::vector<std::string> first_level;
  for (int b = 0; b < k; ++b) first_level.push_back(bin_label(b));
  if (present.size() < ds.stays.size()) first_level.push_back(cont_feature + "=missing");

  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < ds.stays.size(); ++i) {
    std::string label = cont_label[i];
    if (cat_feature)
      label += "|" + *cat_feature + "=" +
               schema.label_of(*cat_feature, ds.stays[i].static_cat[gi]);
    plan.env_of_stay[ds.stays[i].stay_id] = label;
    ++counts[label];
  }
  for (const auto& first : first_level) {
    if (!cat_feature) {
      plan.env_labels.push_back(first);
      continue;
    }
    const int levels = schema.vocab_size(*cat_feature);
    for (int c = 0; c < levels; ++c) {
      const auto label = first + "|" + *cat_feature + "=" + schema.label_of(*cat_feature, c);
      if (counts.count(label))
        plan.env_labels.push_back(label);
      else if (c > 0)
        plan.warnings.push_back("empty intersection '" + label + "' dropped");
    }
  }

  const std::set<std::string> known(plan.env_labels.begin(), plan.env_labels.end());
  for (const auto* list : {&test_bins, &val_bins})
    for (const auto& b : *list)
      if (!known.count(b)) throw ConfigError("unknown cross-section environment '" + b + "'");
  for (const auto& b : test_bins)
    if (std::find(val_bins.begin(), val_bins.end(), b) != val_bins.end())
      throw ConfigError("environment '" + b + "' is both a test and a validation bin");
  plan.test_bins = std::move(test_bins);
  plan.val_bins = std::move(val_bins);
  return plan;
}

Dataset envs_to_dataset(const Dataset& ds, const CrossSectionPlan& plan) {
  std::map<std::string, HospitalId> id_of;
  Dataset out;
  out.schema = ds.schema;
  out.provenance = ds.provenance;
  for (std::size_t e = 0; e < plan.env_labels.size(); ++e) {
    const HospitalId id = static_cast<HospitalId>(e + 1);
    id_of[plan.env_labels[e]] = id;
    out.hospitals[id] = HospitalMeta{id, Region::Missing, false, BedBucket::Unknown, 0};
  }
  out.stays = ds.stays;
  for (auto& s : out.stays) {
    const auto it = plan.env_of_stay.find(s.stay_id);
    if (it == plan.env_of_stay.end())
      throw DataError("stay " + std::to_string(s.stay_id) + " has no cross-section environment");
    s.hospital_id = id_of.at(it->second);
  }
  out.canonicalize();
  return out;
}

PartitionPlan cross_section_partition(const Dataset& derived, const CrossSectionPlan& plan,
                                      Ratios ratios, std::uint64_t seed) {
  auto part = inner_split(derived, ratios, seed);
  for (std::size_t e = 0; e < plan.env_labels.size(); ++e) {
    const auto& label = plan.env_labels[e];
    auto& split = part.env_split[static_cast<HospitalId>(e + 1)];
    if (std::find(plan.test_bins.begin(), plan.test_bins.end(), label) != plan.test_bins.end())
      split = SplitLabel::TestEnv;
    else if (std::find(plan.val_bins.begin(), plan.val_bins.end(), label) != plan.val_bins.end())
      split = SplitLabel::ValEnv;
    else
      split = SplitLabel::TrainEnv;
  }
  part.val_fallback = plan.val_bins.empty();
  return part;
}

std::string cross_section_to_json(const CrossSectionPlan& plan) {
  nlohmann::json j;
  j["cont_feature"] = plan.cont_feature;
  j["k"] = plan.k;
  j["cat_feature"] = plan.cat_feature ? nlohmann::json(*plan.cat_feature) : nlohmann::json();
  j["bin_edges"] = plan.bin_edges;
  j["env_labels"] = plan.env_labels;
  nlohmann::json env = nlohmann::json::object();
  for (const auto& [id, label] : plan.env_of_stay) env[std::to_string(id)] = label;
  j["env_of_stay"] = env;
  j["test_bins"] = plan.test_bins;
  j["val_bins"] = plan.val_bins;
  j["warnings"] = plan.warnings;
  return j.dump(1) + "\n";
}

CrossSectionPlan cross_section_from_json(const std::string& text) {
  CrossSectionPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    plan.cont_feature = j.at("cont_feature").get<std::string>();
    plan.k = j.at("k").get<int>();
    if (!j.at("cat_feature").is_null()) plan.cat_feature = j.at("cat_feature").get<std::string>();
    plan.bin_edges = j.at("bin_edges").get<std::vector<double>>();
    plan.env_labels = j.at("env_labels").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("env_of_stay").items())
      plan.env_of_stay[std::stoll(k)] = v.get<std::string>();
    plan.test_bins = j.at("test_bins").get<std::vector<std::string>>();
    plan.val_bins = j.at("val_bins").get<std::vector<std::string>>();
    plan.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed cross-section plan: ") + e.what());
  }
  return plan;
}

}  // namespace oodenv
