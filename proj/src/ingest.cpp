#include "oodenv/ingest.hpp"

#include "oodenv/csv.hpp"
#include "oodenv/errors.hpp"
#include "oodenv/preprocess.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace oodenv {

namespace {

const csv::Row kHospitalHeader = {"hospital_id", "region", "teaching", "num_beds_bucket"};
const csv::Row kStayHeader = {"stay_id",          "hospital_id",         "age",
                              "gender",           "admission_height",    "admission_weight",
                              "apache_admission_dx", "first_stay",       "alive_at_48h",
                              "label"};
const csv::Row kSeriesHeader = {"stay_id", "offset_minutes", "feature", "value"};

std::vector<csv::Row> read_with_header(const std::filesystem::path& path, const csv::Row& header) {
  if (!std::filesystem::exists(path)) throw DataError("missing file '" + path.string() + "'");
  auto rows = csv::read_file(path);
  if (rows.empty() || rows.front() != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw DataError("header mismatch in '" + path.filename().string() + "', expected '" +
                    expected + "'");
  }
  rows.erase(rows.begin());
  return rows;
}

std::int64_t to_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw DataError("not an integer: '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw DataError("not a number: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "0" || s == "False" || s == "FALSE") return false;
  throw DataError("not a boolean: '" + s + "'");
}

}  // namespace

LoadResult load_dataset(const std::filesystem::path& dir, const FeatureSchema& schema, int steps) {
  LoadResult result;
  auto& ds = result.dataset;
  auto& report = result.report;
  ds.schema = schema;
  ds.provenance = {Provenance::Kind::Ingested, dir.string()};

  const auto hospital_rows = read_with_header(dir / "hospitals.csv", kHospitalHeader);
  const auto stay_rows = read_with_header(dir / "stays.csv", kStayHeader);
  const auto series_rows = read_with_header(dir / "timeseries.csv", kSeriesHeader);

  for (std::size_t i = 0; i < hospital_rows.size(); ++i) {
    const auto& r = hospital_rows[i];
    try {
      if (r.size() != kHospitalHeader.size()) throw DataError("wrong field count");
      HospitalMeta m;
      m.hospital_id = to_int(r[0]);
      m.region = parse_region(r[1]);
      m.teaching = to_bool(r[2]);
      m.bed_bucket = parse_bed_bucket(r[3]);
      if (ds.hospitals.count(m.hospital_id))
        throw DataError("duplicate hospital_id " + std::to_string(m.hospital_id));
      ds.hospitals[m.hospital_id] = m;
    } catch (const DataError& e) {
      report.errors.push_back("hospitals.csv row " + std::to_string(i + 2) + ": " + e.what());
    }
  }

  const int dx = schema.static_cat_index("Apache admission dx");
  const int gender = schema.static_cat_index("gender");
  const int height = schema.static_cont_index("Admission height");
  const int weight = schema.static_cont_index("Admission weight");
  const int age = schema.static_cont_index("age");
  if (dx < 0 || gender < 0 || height < 0 || weight < 0 || age < 0)
    throw DataError("schema lacks the static features named in stays.csv");

  std::map<StayId, std::size_t> index_of;
  for (std::size_t i = 0; i < stay_rows.size(); ++i) {
    const auto& r = stay_rows[i];
    const std::string where = "stays.csv row " + std::to_string(i + 2) + ": ";
    Stay s = make_empty_stay(schema, steps);
    try {
      if (r.size() != kStayHeader.size()) throw DataError("wrong field count");
      s.stay_id = to_int(r[0]);
      s.hospital_id = to_int(r[1]);
      s.age = to_double(r[2]);
      s.gender = schema.code_of("gender", r[3]);
      if (s.gender == 0)
        report.warnings.push_back(where + "unknown gender '" + r[3] + "' mapped to code 0");
      s.static_cont[age] = s.age;
      s.static_cont_missing[age] = false;
      for (auto [col, idx] : {std::pair{4, height}, std::pair{5, weight}}) {
        if (!r[col].empty()) {
          s.static_cont[idx] = to_double(r[col]);
          s.static_cont_missing[idx] = false;
        }
      }
      s.static_cat[dx] = schema.code_of("Apache admission dx", r[6]);
      if (s.static_cat[dx] == 0 && !r[6].empty())
        report.warnings.push_back(where + "unknown apache_admission_dx '" + r[6] +
                                  "' mapped to code 0");
      s.static_cat[gender] = s.gender;
      s.first_stay = to_bool(r[7]);
      s.alive_at_window_end = to_bool(r[8]);
      const auto label = to_int(r[9]);
      if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
      s.label = static_cast<int>(label);
    } catch (const DataError& e) {
      report.errors.push_back(where + e.what());
      continue;
    }
    if (index_of.count(s.stay_id))
      throw DataError("duplicate stay_id " + std::to_string(s.stay_id));
    index_of[s.stay_id] = ds.stays.size();
    ds.stays.push_back(std::move(s));
  }

  std::map<StayId, std::vector<Observation>> events;
  std::set<std::string> known;
  for (const auto& f : schema.continuous_ts) known.insert(f);
  for (const auto& f : schema.categorical_ts) known.insert(f);
  int negative = 0, orphan = 0;
  for (std::size_t i = 0; i < series_rows.size(); ++i) {
    const auto& r = series_rows[i];
    try {
      if (r.size() != kSeriesHeader.size()) throw DataError("wrong field count");
      const StayId id = to_int(r[0]);
      const double offset = to_double(r[1]);
      if (!known.count(r[2])) throw DataError("unknown feature '" + r[2] + "'");
      if (r[3].empty()) continue;
      if (offset < 0.0) {
        ++negative;
        continue;
      }
      if (!index_of.count(id)) {
        ++orphan;
        continue;
      }
      events[id].push_back({offset, r[2], r[3]});
    } catch (const DataError& e) {
      report.errors.push_back("timeseries.csv row " + std::to_string(i + 2) + ": " + e.what());
    }
  }
  if (negative)
    report.warnings.push_back(std::to_string(negative) +
                              " observations with negative offsets dropped");
  if (orphan)
    report.warnings.push_back(std::to_string(orphan) +
                              " observations reference unknown stays and were dropped");

  int unknown_labels = 0, out_of_window = 0;
  for (auto& [id, ev] : events) {
    Stay& s = ds.stays[index_of.at(id)];
    try {
      auto series = resample_hourly(ev, schema, steps);
      s.ts_cont = std::move(series.ts_cont);
      s.ts_cont_missing = std::move(series.ts_cont_missing);
      s.ts_cat = std::move(series.ts_cat);
      s.ts_cat_missing = std::move(series.ts_cat_missing);
      unknown_labels += series.n_unknown_labels;
      out_of_window += series.n_out_of_window;
    } catch (const DataError& e) {
      report.errors.push_back("timeseries.csv stay " + std::to_string(id) + ": " + e.what());
    }
  }
  if (unknown_labels)
    report.warnings.push_back(std::to_string(unknown_labels) +
                              " categorical observations with unknown labels mapped to code 0");
  if (out_of_window)
    report.warnings.push_back(std::to_string(out_of_window) +
                              " observations beyond the observation window dropped");

  ds.canonicalize();
  return result;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& schema = ds.schema;
  {
    std::ofstream out(dir / "hospitals.csv");
    out << csv::join(kHospitalHeader) << '\n';
    for (const auto& [id, m] : ds.hospitals)
      out << csv::join({std::to_string(id), std::string(to_string(m.region)),
                        m.teaching ? "true" : "false", std::string(to_string(m.bed_bucket))})
          << '\n';
  }
  const int dx = schema.static_cat_index("Apache admission dx");
  const int height = schema.static_cont_index("Admission height");
  const int weight = schema.static_cont_index("Admission weight");
  {
    std::ofstream out(dir / "stays.csv");
    out << csv::join(kStayHeader) << '\n';
    for (const auto& s : ds.stays) {
      auto opt = [&](int idx) {
        return s.static_cont_missing[idx] ? std::string() : csv::format_double(s.static_cont[idx]);
      };
      const int dx_code = s.static_cat[dx];
      out << csv::join({std::to_string(s.stay_id), std::to_string(s.hospital_id),
                        csv::format_double(s.age), schema.label_of("gender", s.gender),
                        opt(height), opt(weight),
                        dx_code == 0 ? std::string() : schema.label_of("Apache admission dx", dx_code),
                        s.first_stay ? "true" : "false", s.alive_at_window_end ? "true" : "false",
                        std::to_string(s.label)})
          << '\n';
    }
  }
  {
    std::ofstream out(dir / "timeseries.csv");
    out << csv::join(kSeriesHeader) << '\n';
    for (const auto& s : ds.stays) {
      const std::string id = std::to_string(s.stay_id);
      for (int t = 0; t < s.steps(); ++t) {
        const std::string offset = std::to_string(60 * t);
        for (Eigen::Index j = 0; j < s.ts_cont.cols(); ++j)
          if (!s.ts_cont_missing(t, j))
            out << id << ',' << offset << ',' << csv::escape(schema.continuous_ts[j]) << ','
                << csv::format_double(s.ts_cont(t, j)) << '\n';
        for (Eigen::Index j = 0; j < s.ts_cat.cols(); ++j)
          if (!s.ts_cat_missing(t, j))
            out << id << ',' << offset << ',' << csv::escape(schema.categorical_ts[j]) << ','
                << csv::escape(schema.label_of(schema.categorical_ts[j], s.ts_cat(t, j))) << '\n';
      }
    }
  }
}

void CohortFilter::validate() const {
  if (!(age_min < age_max)) throw ConfigError("cohort filter requires age_min < age_max");
  if (window_hours < 1) throw ConfigError("cohort filter window_hours must be >= 1");
}

FilterResult apply_cohort_filter(const Dataset& ds, const CohortFilter& filter) {
  filter.validate();
  FilterResult out;
  out.removed = {{"age", 0}, {"not_first_stay", 0}, {"died_in_window", 0}};
  out.dataset.schema = ds.schema;
  out.dataset.hospitals = ds.hospitals;
  out.dataset.provenance = ds.provenance;
  for (const auto& s : ds.stays) {
    if (!(s.age >= filter.age_min && s.age <= filter.age_max))
      ++out.removed["age"];
    else if (filter.first_stay_only && !s.first_stay)
      ++out.removed["not_first_stay"];
    else if (filter.alive_at_window_end && !s.alive_at_window_end)
      ++out.removed["died_in_window"];
    else
      out.dataset.stays.push_back(s);
  }
  out.dataset.canonicalize();
  return out;
}

Dataset exclude_small_hospitals(const Dataset& ds, int min_stays,
                                std::vector<HospitalId>* removed) {
  std::map<HospitalId, int> counts;
  for (const auto& s : ds.stays) ++counts[s.hospital_id];
  Dataset out;
  out.schema = ds.schema;
  out.provenance = ds.provenance;
  for (const auto& [id, meta] : ds.hospitals) {
    if (counts[id] >= min_stays)
      out.hospitals[id] = meta;
    else if (removed)
      removed->push_back(id);
  }
  for (const auto& s : ds.stays)
    if (out.hospitals.count(s.hospital_id)) out.stays.push_back(s);
  out.canonicalize();
  return out;
}

}  // namespace oodenv
