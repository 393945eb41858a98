#include "v2x/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace v2x {

std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kMpdqn: return "MPDQN";
    case PolicyKind::kGa: return "GA";
    case PolicyKind::kRandom: return "RANDOM";
  }
  return "?";
}

std::string to_string(AccessMode a) { return a == AccessMode::kOma ? "OMA" : "NOMA"; }
std::string to_string(RadioMode r) { return r == RadioMode::kNrMode2 ? "NR" : "LTE"; }

std::string ValidationReport::joined() const {
  std::string out;
  for (const auto& s : issues) {
    if (!out.empty()) out += '\n';
    out += s;
  }
  return out;
}

namespace {

using nlohmann::json;

/// Reads the members of one JSON object, recording type errors and, on
/// finish(), any member that no reader asked for.
class Section {
 public:
  Section(const json* node, std::string path, ValidationReport& report)
      : node_(node), path_(std::move(path)), report_(report) {
    if (node_ != nullptr && !node_->is_object()) {
      report_.issues.push_back(path_ + ": expected an object");
      node_ = nullptr;
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    const json* sub = nullptr;
    if (node_ != nullptr) {
      auto it = node_->find(key);
      if (it != node_->end()) sub = &*it;
    }
    return Section(sub, path_ + "." + key, report_);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr) return;
    auto it = node_->find(key);
    if (it == node_->end()) return;
    if (!convert(*it, out)) report_.issues.push_back(path_ + "." + key + ": wrong type, expected " + type_name<T>());
  }

  /// Returns the member for custom parsing, or nullptr when absent.
  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (node_ == nullptr) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  void finish() {
    if (node_ == nullptr) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!seen_.count(it.key())) report_.issues.push_back(path_ + "." + it.key() + ": unknown key");
  }

  const std::string& path() const { return path_; }
  ValidationReport& report() { return report_; }

 private:
  static bool convert(const json& j, double& out) {
    if (!j.is_number()) return false;
    out = j.get<double>();
    return true;
  }
  static bool convert(const json& j, int& out) {
    if (!j.is_number_integer()) return false;
    out = j.get<int>();
    return true;
  }
  static bool convert(const json& j, std::int64_t& out) {
    if (!j.is_number_integer()) return false;
    out = j.get<std::int64_t>();
    return true;
  }
  static bool convert(const json& j, std::uint64_t& out) {
    if (!j.is_number_unsigned()) return false;
    out = j.get<std::uint64_t>();
    return true;
  }
  static bool convert(const json& j, std::string& out) {
    if (!j.is_string()) return false;
    out = j.get<std::string>();
    return true;
  }
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "number";
    else if constexpr (std::is_same_v<T, std::string>) return "string";
    else if constexpr (std::is_same_v<T, std::uint64_t>) return "non-negative integer";
    else return "integer";
  }

  const json* node_;
  std::string path_;
  ValidationReport& report_;
  std::set<std::string> seen_;
};

template <typename T, typename Parse>
void read_list(Section& s, const std::string& key, std::vector<T>& out, Parse parse) {
  const json* node = s.raw(key);
  if (node == nullptr) return;
  const std::string where = s.path() + "." + key;
  if (!node->is_array() || node->empty()) {
    s.report().issues.push_back(where + ": expected a non-empty array");
    return;
  }
  std::vector<T> values;
  for (std::size_t k = 0; k < node->size(); ++k) {
    T v{};
    if (!parse((*node)[k], v)) {
      s.report().issues.push_back(where + "[" + std::to_string(k) + "]: invalid value " + (*node)[k].dump());
      return;
    }
    values.push_back(v);
  }
  out = std::move(values);
}

template <typename Fn>
void check(ValidationReport& r, const std::string& where, Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    r.issues.push_back(where + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc, ValidationReport& report) {
  ExperimentConfig c;
  Section root(&doc, "$", report);

  {
    auto s = root.child("scenario");
    auto& sc = c.env.scenario;
    s.get("road_length_m", sc.road_length_m);
    s.get("rsu_range_m", sc.rsu_range_m);
    s.get("rx_range_m", sc.rx_range_m);
    s.get("v_min_mps", sc.v_min_mps);
    s.get("v_max_mps", sc.v_max_mps);
    s.get("n_lanes_per_direction", sc.n_lanes_per_direction);
    s.get("slot_ms", sc.slot_ms);
    s.get("horizon_slots", sc.horizon_slots);
    s.finish();
  }
  {
    auto s = root.child("channel");
    auto& ch = c.env.channel;
    s.get("carrier_ghz", ch.carrier_ghz);
    ch.pathloss_ref_db = free_space_loss_1m_db(ch.carrier_ghz);
    s.get("bandwidth_hz", ch.bandwidth_hz);
    s.get("noise_figure_db", ch.noise_figure_db);
    s.get("shadow_std_db", ch.shadow_std_db);
    s.get("decorr_dist_m", ch.decorr_dist_m);
    s.get("pathloss_exponent", ch.pathloss_exponent);
    s.get("pathloss_ref_db", ch.pathloss_ref_db);
    s.get("rsrp_threshold_dbm", ch.rsrp_threshold_dbm);
    s.get("adjacent_leakage_db", ch.adjacent_leakage_db);
    s.finish();
  }
  {
    auto s = root.child("sps");
    auto& sp = c.env.sps;
    s.get("n_subchannels", sp.n_subchannels);
    s.get("t1_slots", sp.t1_slots);
    s.get("n_sense_slots", sp.n_sense_slots);
    s.get("lte_sense_slots", sp.lte_sense_slots);
    s.get("x_percent", sp.x_percent);
    s.get("p_rk", sp.p_rk);
    s.get("rsrp_step_db", sp.rsrp_step_db);
    s.finish();
  }
  {
    auto s = root.child("kpi");
    auto& k = c.env.kpi;
    s.get("queue_capacity", k.queue_capacity);
    s.get("n_message_types", k.n_message_types);
    s.get("arrival_period_slots", k.arrival_period_slots);
    s.get("slot_s", k.slot_s);
    s.finish();
  }
  {
    auto s = root.child("env");
    s.get("p_max_dbm", c.env.p_max_dbm);
    s.get("success_window_slots", c.env.success_window_slots);
    s.get("aoi_ref_slots", c.env.aoi_ref_slots);
    s.get("eval_episodes", c.eval_episodes);
    auto w = s.child("weights");
    w.get("energy", c.env.weights.energy);
    w.get("aoi", c.env.weights.aoi);
    w.finish();
    s.finish();
  }
  {
    auto s = root.child("agent");
    auto& a = c.agent;
    s.get("lr_q", a.lr_q);
    s.get("lr_x", a.lr_x);
    s.get("gamma_discount", a.gamma_discount);
    s.get("tau", a.tau);
    s.get("buffer_capacity", a.buffer_capacity);
    s.get("batch_size", a.batch_size);
    s.get("hidden", a.hidden);
    s.get("ou_decay", a.ou_decay);
    s.get("ou_variance", a.ou_variance);
    s.get("p_ran_start", a.p_ran_start);
    s.get("p_ran_end", a.p_ran_end);
    s.get("p_ran_decay_fraction", a.p_ran_decay_fraction);
    s.get("train_interval_slots", a.train_interval_slots);
    s.get("train_episodes", c.train_episodes);
    s.get("train_horizon_slots", c.train_horizon_slots);
    s.finish();
  }
  {
    auto s = root.child("ga");
    auto& g = c.ga;
    s.get("population", g.population);
    s.get("generations", g.generations);
    s.get("crossover_prob", g.crossover_prob);
    s.get("mutation_prob", g.mutation_prob);
    s.get("elitism", g.elitism);
    s.get("fitness_horizon_slots", g.fitness_horizon_slots);
    s.get("fitness_episodes", g.fitness_episodes);
    s.get("epochs_per_vehicle", g.epochs_per_vehicle);
    s.get("power_sigma_frac", g.power_sigma_frac);
    s.get("workers", g.workers);
    s.finish();
  }
  {
    auto s = root.child("sweep");
    read_list(s, "n_vehicles", c.sweep.n_vehicles, [](const json& j, int& v) {
      if (!j.is_number_integer()) return false;
      v = j.get<int>();
      return true;
    });
    read_list(s, "message_size_bits", c.sweep.message_size_bits, [](const json& j, double& v) {
      if (!j.is_number()) return false;
      v = j.get<double>();
      return true;
    });
    read_list(s, "access", c.sweep.access, [](const json& j, AccessMode& v) {
      if (j == "OMA") v = AccessMode::kOma;
      else if (j == "NOMA") v = AccessMode::kNoma;
      else return false;
      return true;
    });
    read_list(s, "radio", c.sweep.radio, [](const json& j, RadioMode& v) {
      if (j == "NR") v = RadioMode::kNrMode2;
      else if (j == "LTE") v = RadioMode::kLteMode4;
      else return false;
      return true;
    });
    read_list(s, "policy", c.sweep.policy, [](const json& j, PolicyKind& v) {
      if (j == "MPDQN") v = PolicyKind::kMpdqn;
      else if (j == "GA") v = PolicyKind::kGa;
      else if (j == "RANDOM") v = PolicyKind::kRandom;
      else return false;
      return true;
    });
    s.finish();
  }
  read_list(root, "seeds", c.seeds, [](const json& j, std::uint64_t& v) {
    if (!j.is_number_unsigned()) return false;
    v = j.get<std::uint64_t>();
    return true;
  });
  root.get("output_dir", c.output_dir);
  root.finish();

  // Bounds and cross-field checks, one entry per section.
  check(report, "$.scenario", [&] { c.env.scenario.validate(); });
  check(report, "$.channel", [&] { c.env.channel.validate(); });
  check(report, "$.sps", [&] { c.env.sps.validate(); });
  check(report, "$.kpi", [&] { c.env.kpi.validate(); });
  check(report, "$.env.weights", [&] { c.env.weights.validate(); });
  check(report, "$.agent", [&] { c.agent.validate(); });
  check(report, "$.ga", [&] { c.ga.validate(); });
  if (c.eval_episodes < 1) report.issues.push_back("$.env.eval_episodes: must be >= 1");
  if (c.train_episodes < 0) report.issues.push_back("$.agent.train_episodes: must be >= 0");
  if (c.train_horizon_slots < 0) report.issues.push_back("$.agent.train_horizon_slots: must be >= 0");
  for (int n : c.sweep.n_vehicles)
    if (n < 2) report.issues.push_back("$.sweep.n_vehicles: every entry must be >= 2");
  for (double g : c.sweep.message_size_bits)
    if (!(g > 0.0)) report.issues.push_back("$.sweep.message_size_bits: every entry must be > 0");
  if (c.output_dir.empty()) report.issues.push_back("$.output_dir: must not be empty");
  return c;
}

json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (doc.is_object() && doc.value("format", std::string{}) == "v2x-manifest") {
    if (!doc.contains("config")) throw ConfigError(path + ": manifest has no config");
    return doc.at("config");
  }
  return doc;
}

ExperimentConfig load_config(const std::string& path) {
  ValidationReport report;
  ExperimentConfig c = parse_config(read_config_document(path), report);
  if (!report.ok()) throw ConfigError(report.joined());
  return c;
}

ValidationReport validate_config_file(const std::string& path) {
  ValidationReport report;
  try {
    parse_config(read_config_document(path), report);
  } catch (const ConfigError& e) {
    report.issues.push_back(e.what());
  }
  return report;
}

json config_to_json(const ExperimentConfig& c) {
  const auto& sc = c.env.scenario;
  const auto& ch = c.env.channel;
  const auto& sp = c.env.sps;
  const auto& k = c.env.kpi;
  const auto& a = c.agent;
  const auto& g = c.ga;
  json sweep;
  sweep["n_vehicles"] = c.sweep.n_vehicles;
  sweep["message_size_bits"] = c.sweep.message_size_bits;
  sweep["access"] = json::array();
  for (auto m : c.sweep.access) sweep["access"].push_back(to_string(m));
  sweep["radio"] = json::array();
  for (auto m : c.sweep.radio) sweep["radio"].push_back(to_string(m));
  sweep["policy"] = json::array();
  for (auto m : c.sweep.policy) sweep["policy"].push_back(to_string(m));
  return {
      {"scenario",
       {{"road_length_m", sc.road_length_m},
        {"rsu_range_m", sc.rsu_range_m},
        {"rx_range_m", sc.rx_range_m},
        {"v_min_mps", sc.v_min_mps},
        {"v_max_mps", sc.v_max_mps},
        {"n_lanes_per_direction", sc.n_lanes_per_direction},
        {"slot_ms", sc.slot_ms},
        {"horizon_slots", sc.horizon_slots}}},
      {"channel",
       {{"carrier_ghz", ch.carrier_ghz},
        {"bandwidth_hz", ch.bandwidth_hz},
        {"noise_figure_db", ch.noise_figure_db},
        {"shadow_std_db", ch.shadow_std_db},
        {"decorr_dist_m", ch.decorr_dist_m},
        {"pathloss_exponent", ch.pathloss_exponent},
        {"pathloss_ref_db", ch.pathloss_ref_db},
        {"rsrp_threshold_dbm", ch.rsrp_threshold_dbm},
        {"adjacent_leakage_db", ch.adjacent_leakage_db}}},
      {"sps",
       {{"n_subchannels", sp.n_subchannels},
        {"t1_slots", sp.t1_slots},
        {"n_sense_slots", sp.n_sense_slots},
        {"lte_sense_slots", sp.lte_sense_slots},
        {"x_percent", sp.x_percent},
        {"p_rk", sp.p_rk},
        {"rsrp_step_db", sp.rsrp_step_db}}},
      {"kpi",
       {{"queue_capacity", k.queue_capacity},
        {"n_message_types", k.n_message_types},
        {"arrival_period_slots", k.arrival_period_slots},
        {"slot_s", k.slot_s}}},
      {"env",
       {{"p_max_dbm", c.env.p_max_dbm},
        {"success_window_slots", c.env.success_window_slots},
        {"aoi_ref_slots", c.env.aoi_ref_slots},
        {"eval_episodes", c.eval_episodes},
        {"weights", {{"energy", c.env.weights.energy}, {"aoi", c.env.weights.aoi}}}}},
      {"agent",
       {{"lr_q", a.lr_q},
        {"lr_x", a.lr_x},
        {"gamma_discount", a.gamma_discount},
        {"tau", a.tau},
        {"buffer_capacity", a.buffer_capacity},
        {"batch_size", a.batch_size},
        {"hidden", a.hidden},
        {"ou_decay", a.ou_decay},
        {"ou_variance", a.ou_variance},
        {"p_ran_start", a.p_ran_start},
        {"p_ran_end", a.p_ran_end},
        {"p_ran_decay_fraction", a.p_ran_decay_fraction},
        {"train_interval_slots", a.train_interval_slots},
        {"train_episodes", c.train_episodes},
        {"train_horizon_slots", c.train_horizon_slots}}},
      {"ga",
       {{"population", g.population},
        {"generations", g.generations},
        {"crossover_prob", g.crossover_prob},
        {"mutation_prob", g.mutation_prob},
        {"elitism", g.elitism},
        {"fitness_horizon_slots", g.fitness_horizon_slots},
        {"fitness_episodes", g.fitness_episodes},
        {"epochs_per_vehicle", g.epochs_per_vehicle},
        {"power_sigma_frac", g.power_sigma_frac},
        {"workers", g.workers}}},
      {"sweep", sweep},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
  };
}

std::string SweepPoint::id() const {
  std::ostringstream s;
  s << "n" << n_vehicles << "_g" << message_size_bits << '_' << to_string(access) << '_' << to_string(radio) << '_'
    << to_string(policy);
  return s.str();
}

std::vector<SweepPoint> expand_sweep(const SweepAxes& axes) {
  std::vector<SweepPoint> points;
  for (int n : axes.n_vehicles)
    for (double g : axes.message_size_bits)
      for (auto a : axes.access)
        for (auto r : axes.radio)
          for (auto p : axes.policy) {
            SweepPoint sp{static_cast<int>(points.size()), n, g, a, r, p};
            points.push_back(sp);
          }
  return points;
}

EnvConfig env_for(const ExperimentConfig& c, const SweepPoint& p) {
  EnvConfig e = c.env;
  e.scenario.n_vehicles = p.n_vehicles;
  e.kpi.message_bits = p.message_size_bits;
  e.access = p.access;
  e.sps.mode = p.radio;
  return e;
}

}  // namespace v2x
