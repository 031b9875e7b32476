#include "seth/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace seth::config {

namespace {

namespace pt = boost::property_tree;

// Keys never contain dots for lookup purposes; section names like "nodes.3" do.
pt::ptree::path_type key(const std::string& k) { return pt::ptree::path_type(k, '\0'); }

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  // Line of `name` inside `[section]`, or 0 when it came from an override.
  int line_of(const std::string& section, const std::string& name) const {
    std::istringstream in(text_);
    std::string line, current;
    for (int n = 1; std::getline(in, line); ++n) {
      const std::string t = trim(line);
      if (t.size() > 1 && t.front() == '[' && t.back() == ']') {
        current = trim(t.substr(1, t.size() - 2));
      } else if (current == section) {
        const auto eq = t.find('=');
        if (eq != std::string::npos && trim(t.substr(0, eq)) == name) return n;
      }
    }
    return 0;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& name, const std::string& msg) const {
    throw ParseError(origin_, line_of(section, name), "[" + section + "] " + name + ": " + msg);
  }

  const std::string& origin() const { return origin_; }

 private:
  const std::string& text_;
  std::string origin_;
};

class Section {
 public:
  Section(const Reader& r, std::string name, const pt::ptree* tree, std::set<std::string> known)
      : r_(r), name_(std::move(name)), tree_(tree), known_(std::move(known)) {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_) {
      if (!known_.count(k)) throw ValidationError(name_ + "." + k, "unknown key");
    }
  }

  std::optional<std::string> raw(const std::string& k) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key(k));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <class T>
  void get(const std::string& k, T& out) const {
    auto v = raw(k);
    if (!v) return;
    if constexpr (std::is_same_v<T, bool>) {
      std::string s = *v;
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "true" || s == "1" || s == "yes" || s == "on") out = true;
      else if (s == "false" || s == "0" || s == "no" || s == "off") out = false;
      else r_.fail(name_, k, "expected a boolean, got '" + *v + "'");
    } else if constexpr (std::is_floating_point_v<T>) {
      try {
        std::size_t used = 0;
        out = static_cast<T>(std::stod(*v, &used));
        if (used != v->size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        r_.fail(name_, k, "expected a number, got '" + *v + "'");
      }
    } else {
      T tmp{};
      auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), tmp);
      if (ec != std::errc() || p != v->data() + v->size()) r_.fail(name_, k, "expected an integer, got '" + *v + "'");
      out = tmp;
    }
  }

  void get(const std::string& k, Nanos& out) const {
    std::int64_t ns = out.count();
    get(k, ns);
    out = Nanos{ns};
  }

  [[noreturn]] void fail(const std::string& k, const std::string& msg) const { r_.fail(name_, k, msg); }

 private:
  const Reader& r_;
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> known_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

void apply_override(pt::ptree& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ParseError("--set", 0, "expected section.key=value, got '" + spec + "'");
  const std::string path = trim(spec.substr(0, eq));
  const std::string value = trim(spec.substr(eq + 1));
  const auto dot = path.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    throw ParseError("--set", 0, "expected section.key=value, got '" + spec + "'");
  }
  const std::string section = path.substr(0, dot);
  const std::string name = path.substr(dot + 1);
  auto it = root.find(section);
  pt::ptree& sec = it == root.not_found() ? root.push_back({section, pt::ptree{}})->second : it->second;
  sec.put(key(name), value);
}

void read_run(const Section& s, RunSpec& run) {
  s.get("duration_ns", run.duration);
  s.get("seed", run.seed);
  s.get("n_priority", run.n_priority);
  s.get("trace_energy", run.trace_energy);
  s.get("energy_trace_period_ns", run.energy_trace_period);
  s.get("replicates", run.replicates);
}

void read_substrate(const Section& s, medium::SubstrateModel& m) {
  s.get("length_m", m.length_m);
  s.get("resistance_per_m", m.resistance_per_m);
  s.get("v_ref", m.v_ref);
  s.get("decay_per_m", m.decay_per_m);
  s.get("threshold_v", m.threshold_v);
  s.get("noise_sigma", m.noise_sigma);
  s.get("sense_error_prob", m.sense_error_prob);
  s.get("frame_loss_prob", m.frame_loss_prob);
  s.get("burst_min", m.burst_min);
  s.get("burst_max", m.burst_max);
}

NodeSpec read_node(const Section& s, int id) {
  NodeSpec n;
  auto& c = n.neuron;
  c.id = id;
  s.get("position_m", c.position_m);
  s.get("priority", c.priority);
  s.get("capacitor_f", c.capacitance);
  s.get("coordinator", c.coordinator);
  s.get("v_on", c.v_on);
  s.get("v_off", c.v_off);
  s.get("t_idle_ns", c.timing.t_idle);
  s.get("t_turn_ns", c.timing.t_turn);
  s.get("t_check_ns", c.timing.t_check);
  s.get("i_off", c.loads.off);
  s.get("i_harvest", c.loads.harvest);
  s.get("i_listen", c.loads.listen);
  s.get("i_tx", c.loads.tx);
  s.get("i_rx", c.loads.rx);
  s.get("i_sense", c.loads.sense);
  s.get("initial_v", n.initial_v);

  if (auto p = s.raw("power")) {
    if (*p == "external") n.power = PowerSource::External;
    else if (*p == "harvested") n.power = PowerSource::Harvested;
    else s.fail("power", "expected external|harvested");
  }
  std::string mode = "auto";
  if (auto h = s.raw("harvester")) mode = *h;
  if (mode == "explicit") {
    energy::HarvesterModel h;
    if (!s.raw("v_inf") || !s.raw("r_s")) throw ValidationError("harvester", "explicit harvester needs v_inf and r_s");
    s.get("v_inf", h.v_inf);
    s.get("r_s", h.r_s);
    s.get("i_leak", h.i_leak);
    n.harvester = h;
  } else if (mode != "auto") {
    s.fail("harvester", "expected auto|explicit");
  }
  return n;
}

std::vector<int> parse_id_list(const Section& s, const std::string& k) {
  std::vector<int> ids;
  auto v = s.raw(k);
  if (!v) return ids;
  std::stringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    int id = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
    if (ec != std::errc() || p != item.data() + item.size()) s.fail(k, "expected a comma-separated id list");
    ids.push_back(id);
  }
  return ids;
}

void read_traffic(const Section& s, TrafficSpec& t) {
  if (auto k = s.raw("kind")) {
    if (*k == "none") t.kind = TrafficKind::None;
    else if (*k == "trigger") t.kind = TrafficKind::Trigger;
    else if (*k == "release") t.kind = TrafficKind::Release;
    else if (*k == "periodic") t.kind = TrafficKind::Periodic;
    else s.fail("kind", "expected none|trigger|release|periodic");
  }
  s.get("start_ns", t.start);
  s.get("interval_ns", t.interval);
  s.get("count", t.count);
  s.get("fanout", t.fanout);
  s.get("source", t.source);
  s.get("dest", t.dest);
  t.release_nodes = parse_id_list(s, "release_nodes");
  s.get("carrier", t.carrier);
  s.get("carrier_start_ns", t.carrier_start);
  s.get("carrier_end_ns", t.carrier_end);
}

void read_sensing(const Section& s, SensingSpec& spec, const ResourceLoader& resources) {
  s.get("enabled", spec.enabled);
  s.get("node", spec.node);
  s.get("period_ns", spec.period);
  s.get("start_ns", spec.start);
  s.get("end_ns", spec.end);
  s.get("dv0", spec.model.dv0);
  s.get("r0", spec.model.r0);
  s.get("alpha", spec.model.alpha);
  s.get("squeeze_gain", spec.model.squeeze_gain);
  s.get("g_floor", spec.model.g_floor);
  s.get("k", spec.detector.k);
  s.get("window_ns", spec.detector.window);
  s.get("smoothing_ns", spec.detector.smoothing);
  if (auto name = s.raw("trajectory")) {
    std::optional<std::string> text = resources ? resources(*name) : std::nullopt;
    if (!text) s.fail("trajectory", "cannot read '" + *name + "'");
    try {
      spec.trajectory = sensing::IntruderTrajectory::from_csv(*text);
    } catch (const sensing::TrajectoryError& e) {
      s.fail("trajectory", e.what());
    }
  }
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin,
                                 const std::vector<std::string>& overrides, const ResourceLoader& resources) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(origin, static_cast<int>(e.line()), e.message());
  }
  for (const auto& o : overrides) apply_override(root, o);

  const Reader reader(text, origin);
  ScenarioConfig cfg;
  std::map<int, const pt::ptree*> node_sections;
  for (const auto& [name, sub] : root) {
    if (name.rfind("nodes.", 0) == 0) {
      const std::string id_text = name.substr(6);
      int id = -1;
      auto [p, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
      if (ec != std::errc() || p != id_text.data() + id_text.size()) {
        throw ParseError(origin, 0, "bad node section [" + name + "]");
      }
      node_sections[id] = &sub;
    } else if (name != "run" && name != "substrate" && name != "traffic" && name != "sensing") {
      if (sub.empty() && !sub.data().empty()) throw ValidationError(name, "key outside any section");
      throw ValidationError(name, "unknown section");
    }
  }

  read_run(Section(reader, "run", child(root, "run"),
                   {"duration_ns", "seed", "n_priority", "trace_energy", "energy_trace_period_ns", "replicates"}),
           cfg.run);
  read_substrate(Section(reader, "substrate", child(root, "substrate"),
                         {"length_m", "resistance_per_m", "v_ref", "decay_per_m", "threshold_v", "noise_sigma",
                          "sense_error_prob", "frame_loss_prob", "burst_min", "burst_max"}),
                 cfg.substrate);
  const std::set<std::string> node_keys{"position_m", "priority", "capacitor_f", "coordinator", "power",
                                        "harvester",  "v_inf",    "r_s",         "i_leak",      "initial_v",
                                        "v_on",       "v_off",    "t_idle_ns",   "t_turn_ns",   "t_check_ns",
                                        "i_off",      "i_harvest", "i_listen",   "i_tx",        "i_rx",
                                        "i_sense"};
  for (const auto& [id, sub] : node_sections) {
    cfg.nodes.push_back(read_node(Section(reader, "nodes." + std::to_string(id), sub, node_keys), id));
  }
  read_traffic(Section(reader, "traffic", child(root, "traffic"),
                       {"kind", "start_ns", "interval_ns", "count", "fanout", "source", "dest", "release_nodes",
                        "carrier", "carrier_start_ns", "carrier_end_ns"}),
               cfg.traffic);
  read_sensing(Section(reader, "sensing", child(root, "sensing"),
                       {"enabled", "node", "period_ns", "start_ns", "end_ns", "trajectory", "dv0", "r0", "alpha",
                        "squeeze_gain", "g_floor", "k", "window_ns", "smoothing_ns"}),
               cfg.sensing, resources);
  cfg.validate();
  return cfg;
}

ScenarioConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  ResourceLoader loader = [dir](const std::string& name) -> std::optional<std::string> {
    std::filesystem::path p(name);
    if (p.is_relative()) p = dir / p;
    std::ifstream f(p, std::ios::binary);
    if (!f) return std::nullopt;
    std::stringstream b;
    b << f.rdbuf();
    return b.str();
  };
  return parse_config_text(buf.str(), path, overrides, loader);
}

}  // namespace seth::config
