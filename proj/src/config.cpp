#include "oodenv/config.hpp"

#include "oodenv/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace oodenv {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for '" + std::string(key) + "' in " + std::string(where));
  }
}

Ratios read_ratios(const json& j, const char* key, Ratios fallback, std::string_view where) {
  std::vector<double> v;
  read(j, key, v, where);
  if (!j.contains(key)) return fallback;
  if (v.size() != 3) throw ConfigError(std::string(key) + " needs three fractions");
  Ratios r{v[0], v[1], v[2]};
  r.validate(key);
  return r;
}

ShiftSpec parse_shift(const json& j) {
  check_keys(j, "shift", {"kind", "hospitals", "rate", "coefficient_scale", "mean_offset",
                          "prevalence"});
  ShiftSpec s;
  std::string kind;
  read(j, "kind", kind, "shift");
  if (kind.empty()) throw ConfigError("shift needs a kind");
  s.kind = parse_shift_kind(kind);
  read(j, "hospitals", s.target_hospitals, "shift");
  read(j, "rate", s.rate, "shift");
  read(j, "coefficient_scale", s.coefficient_scale, "shift");
  read(j, "mean_offset", s.mean_offset, "shift");
  read(j, "prevalence", s.prevalence, "shift");
  return s;
}

json shift_to_json(const ShiftSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"hospitals", s.target_hospitals},
          {"rate", s.rate},
          {"coefficient_scale", s.coefficient_scale},
          {"mean_offset", s.mean_offset},
          {"prevalence", s.prevalence}};
}

json ratios_json(const Ratios& r) { return {r.train, r.val, r.test}; }

}  // namespace

void RunConfig::validate() const {
  if (!data_path) synthetic.validate();
  if (cohort) cohort->validate();
  if (min_hospital_stays < 0) throw ConfigError("min_hospital_stays must be >= 0");
  loho.validate();
  inner_ratios.validate("inner_ratios");
  split_targets.validate("split_targets");
  scenarios.validate();
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"seed", "data", "cohort", "loho", "partition", "scenarios"});
  RunConfig c;
  read(j, "seed", c.seed, "config");

  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, "data", {"path", "synthetic", "min_hospital_stays"});
    if (d.contains("path") && !d["path"].is_null()) {
      std::string p;
      read(d, "path", p, "data");
      c.data_path = p;
    }
    read(d, "min_hospital_stays", c.min_hospital_stays, "data");
    if (d.contains("synthetic")) {
      const auto& s = d["synthetic"];
      check_keys(s, "data.synthetic",
                 {"n_hospitals", "min_stays", "max_stays", "steps", "base_prevalence",
                  "signal_strength", "hospital_jitter", "missing_rate", "region_weights",
                  "first_hospital_id", "shifts"});
      auto& g = c.synthetic;
      const char* w = "data.synthetic";
      read(s, "n_hospitals", g.n_hospitals, w);
      read(s, "min_stays", g.min_stays, w);
      read(s, "max_stays", g.max_stays, w);
      read(s, "steps", g.steps, w);
      read(s, "base_prevalence", g.base_prevalence, w);
      read(s, "signal_strength", g.signal_strength, w);
      read(s, "hospital_jitter", g.hospital_jitter, w);
      read(s, "missing_rate", g.missing_rate, w);
      read(s, "region_weights", g.region_weights, w);
      read(s, "first_hospital_id", g.first_hospital_id, w);
      if (s.contains("shifts")) {
        if (!s["shifts"].is_array()) throw ConfigError("data.synthetic.shifts must be a list");
        for (const auto& sh : s["shifts"]) g.shifts.push_back(parse_shift(sh));
      }
    }
  }
  c.synthetic.seed = c.seed;

  if (j.contains("cohort") && !j["cohort"].is_null()) {
    const auto& f = j["cohort"];
    check_keys(f, "cohort", {"age_min", "age_max", "first_stay_only", "alive_at_window_end",
                             "window_hours"});
    CohortFilter cf;
    read(f, "age_min", cf.age_min, "cohort");
    read(f, "age_max", cf.age_max, "cohort");
    read(f, "first_stay_only", cf.first_stay_only, "cohort");
    read(f, "alive_at_window_end", cf.alive_at_window_end, "cohort");
    read(f, "window_hours", cf.window_hours, "cohort");
    c.cohort = cf;
  }

  if (j.contains("loho")) {
    const auto& l = j["loho"];
    check_keys(l, "loho", {"threshold", "bootstrap_reps", "preset", "max_epochs"});
    read(l, "threshold", c.loho.threshold, "loho");
    read(l, "bootstrap_reps", c.loho.bootstrap_reps, "loho");
    std::string preset;
    read(l, "preset", preset, "loho");
    if (!preset.empty()) c.loho_preset = parse_preset(preset);
    c.loho.model = ModelConfig::from_preset(c.loho_preset);
    read(l, "max_epochs", c.loho.model.max_epochs, "loho");
  }
  c.loho.base_seed = c.seed;

  if (j.contains("partition")) {
    const auto& p = j["partition"];
    check_keys(p, "partition", {"inner_ratios", "split_targets"});
    c.inner_ratios = read_ratios(p, "inner_ratios", c.inner_ratios, "partition");
    c.split_targets = read_ratios(p, "split_targets", c.split_targets, "partition");
  }

  if (j.contains("scenarios")) {
    const auto& s = j["scenarios"];
    check_keys(s, "scenarios",
               {"kinds", "variants", "presets", "seeds", "bootstrap_reps", "max_epochs"});
    auto& sc = c.scenarios;
    std::vector<std::string> names;
    if (s.contains("kinds")) {
      read(s, "kinds", names, "scenarios");
      sc.kinds.clear();
      for (const auto& n : names) sc.kinds.push_back(parse_scenario_kind(n));
    }
    if (s.contains("variants")) {
      read(s, "variants", names, "scenarios");
      sc.variants.clear();
      for (const auto& n : names) sc.variants.push_back(parse_variant(n));
    }
    if (s.contains("presets")) {
      read(s, "presets", names, "scenarios");
      sc.presets.clear();
      for (const auto& n : names) sc.presets.push_back(parse_preset(n));
    }
    read(s, "seeds", sc.seeds, "scenarios");
    read(s, "bootstrap_reps", sc.bootstrap_reps, "scenarios");
    read(s, "max_epochs", sc.max_epochs, "scenarios");
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& c) {
  json shifts = json::array();
  for (const auto& s : c.synthetic.shifts) shifts.push_back(shift_to_json(s));
  const auto& g = c.synthetic;
  json j;
  j["seed"] = c.seed;
  j["data"] = {{"path", c.data_path ? json(*c.data_path) : json()},
               {"min_hospital_stays", c.min_hospital_stays},
               {"synthetic",
                {{"n_hospitals", g.n_hospitals},
                 {"min_stays", g.min_stays},
                 {"max_stays", g.max_stays},
                 {"steps", g.steps},
                 {"base_prevalence", g.base_prevalence},
                 {"signal_strength", g.signal_strength},
                 {"hospital_jitter", g.hospital_jitter},
                 {"missing_rate", g.missing_rate},
                 {"region_weights", g.region_weights},
                 {"first_hospital_id", g.first_hospital_id},
                 {"shifts", shifts}}}};
  if (c.cohort)
    j["cohort"] = {{"age_min", c.cohort->age_min},
                   {"age_max", c.cohort->age_max},
                   {"first_stay_only", c.cohort->first_stay_only},
                   {"alive_at_window_end", c.cohort->alive_at_window_end},
                   {"window_hours", c.cohort->window_hours}};
  else
    j["cohort"] = nullptr;
  j["loho"] = {{"threshold", c.loho.threshold},
               {"bootstrap_reps", c.loho.bootstrap_reps},
               {"preset", to_string(c.loho_preset)},
               {"max_epochs", c.loho.model.max_epochs}};
  j["partition"] = {{"inner_ratios", ratios_json(c.inner_ratios)},
                    {"split_targets", ratios_json(c.split_targets)}};
  std::vector<std::string> kinds, variants, presets;
  for (auto k : c.scenarios.kinds) kinds.emplace_back(to_string(k));
  for (auto v : c.scenarios.variants) variants.emplace_back(to_string(v));
  for (auto p : c.scenarios.presets) presets.emplace_back(to_string(p));
  j["scenarios"] = {{"kinds", kinds},
                    {"variants", variants},
                    {"presets", presets},
                    {"seeds", c.scenarios.seeds},
                    {"bootstrap_reps", c.scenarios.bootstrap_reps},
                    {"max_epochs", c.scenarios.max_epochs}};
  return j.dump(2) + "\n";
}

std::string manifest_to_json(const ShiftManifest& manifest, const GenConfig& cfg) {
  json shifts = json::array();
  for (const auto& s : cfg.shifts) shifts.push_back(shift_to_json(s));
  json hospitals = json::object();
  for (const auto& [id, h] : manifest.hospitals)
    hospitals[std::to_string(id)] = {{"applied_shifts", h.applied_shifts},
                                     {"coefficients", h.coefficients},
                                     {"intercept", h.intercept},
                                     {"feature_mean", h.feature_mean},
                                     {"label_noise", h.label_noise},
                                     {"male_fraction", h.male_fraction}};
  json j = {{"seed", manifest.seed}, {"shifts", shifts}, {"hospitals", hospitals}};
  return j.dump(1) + "\n";
}

}  // namespace oodenv
