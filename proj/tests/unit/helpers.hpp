#pragma once

#include "oodenv/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace testing {

// A dataset with one hospital per entry of `labels`, stays carrying the
// given labels and otherwise empty series.
inline oodenv::Dataset labelled_dataset(const std::vector<std::vector<int>>& labels,
                                        int steps = 3) {
  using namespace oodenv;
  Dataset ds;
  ds.schema = FeatureSchema::default_schema();
  for (std::size_t h = 0; h < labels.size(); ++h) {
    const HospitalId hid = static_cast<HospitalId>(h + 1);
    ds.hospitals[hid] = HospitalMeta{hid, Region::Midwest, false, BedBucket::LT100, 0};
    for (std::size_t k = 0; k < labels[h].size(); ++k) {
      Stay s = make_empty_stay(ds.schema, steps);
      s.stay_id = hid * 1000 + static_cast<StayId>(k) + 1;
      s.hospital_id = hid;
      s.label = labels[h][k];
      s.age = 60;
      s.static_cont[ds.schema.static_cont_index("age")] = 60;
      s.static_cont_missing[ds.schema.static_cont_index("age")] = false;
      ds.stays.push_back(s);
    }
  }
  ds.canonicalize();
  return ds;
}

// n stays with `positives` leading ones.
inline std::vector<int> labels(int n, int positives) {
  std::vector<int> out(n, 0);
  for (int i = 0; i < positives && i < n; ++i) out[i] = 1;
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("oodenv_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
