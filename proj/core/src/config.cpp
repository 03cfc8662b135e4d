#include "pfmot/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pfmot/csv_io.hpp"
#include "pfmot/error.hpp"

namespace pfmot {

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int to_integer(const std::string& text) {
  Int v{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  }
  return v;
}

double to_double(const std::string& text) {
  try {
    return parse_double(trim(text));
  } catch (const InvalidParameter&) {
    throw std::invalid_argument("expected a number, got '" + text + "'");
  }
}

bool to_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + text + "'");
}

Eigen::Vector3d to_vec3(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  std::vector<double> values;
  while (in >> tok) values.push_back(to_double(tok));
  if (values.size() != 3) throw std::invalid_argument("expected three numbers, got '" + text + "'");
  return {values[0], values[1], values[2]};
}

std::string from_vec3(const Eigen::Vector3d& v) {
  return format_double(v(0)) + " " + format_double(v(1)) + " " + format_double(v(2));
}

ProposalMode to_mode(const std::string& text) {
  try {
    return parse_proposal_mode(trim(text));
  } catch (const InvalidParameter& e) {
    throw std::invalid_argument(e.what());
  }
}

std::vector<ProposalMode> to_modes(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  std::vector<ProposalMode> out;
  while (in >> tok) out.push_back(to_mode(tok));
  if (out.empty()) throw std::invalid_argument("expected at least one mode");
  return out;
}

std::string from_modes(const std::vector<ProposalMode>& modes) {
  std::string out;
  for (auto m : modes) out += (out.empty() ? "" : " ") + std::string(to_string(m));
  return out;
}

#define PFMOT_DOUBLE(sec, name, member)                                                   \
  Field {                                                                                 \
    sec, name, [](const RunConfig& c) { return format_double(c.member); },                \
        [](RunConfig& c, const std::string& v) { c.member = to_double(v); }               \
  }
#define PFMOT_INT(sec, name, member)                                                      \
  Field {                                                                                 \
    sec, name, [](const RunConfig& c) { return std::to_string(c.member); },               \
        [](RunConfig& c, const std::string& v) { c.member = to_integer<int>(v); }         \
  }
#define PFMOT_VEC3(sec, name, member)                                                     \
  Field {                                                                                 \
    sec, name, [](const RunConfig& c) { return from_vec3(c.member); },                    \
        [](RunConfig& c, const std::string& v) { c.member = to_vec3(v); }                 \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      PFMOT_INT("scenario", "n_steps", scenario.n_steps),
      PFMOT_INT("scenario", "n_objects", scenario.n_objects),
      PFMOT_DOUBLE("scenario", "dt", scenario.dt),
      PFMOT_DOUBLE("scenario", "drive_var", scenario.drive_var),
      PFMOT_DOUBLE("scenario", "survival_prob", scenario.survival_prob),
      PFMOT_DOUBLE("scenario", "detection_prob", scenario.detection_prob),
      PFMOT_DOUBLE("scenario", "clutter_mean", scenario.clutter_mean),
      PFMOT_DOUBLE("scenario", "birth_mean", scenario.birth_mean),
      PFMOT_DOUBLE("scenario", "propagation_speed", scenario.propagation_speed),
      PFMOT_DOUBLE("scenario", "sigma_v", scenario.sigma_v),
      PFMOT_VEC3("scenario", "array1", scenario.array1),
      PFMOT_VEC3("scenario", "array2", scenario.array2),
      PFMOT_DOUBLE("scenario", "array_arm", scenario.array_arm),
      PFMOT_VEC3("scenario", "roi_lower", scenario.roi_lower),
      PFMOT_VEC3("scenario", "roi_upper", scenario.roi_upper),
      PFMOT_DOUBLE("scenario", "birth_speed_bound", scenario.birth_speed_bound),

      PFMOT_INT("tracker", "particles", tracker.n_particles),
      PFMOT_INT("tracker", "new_po_factor", tracker.new_po_factor),
      PFMOT_DOUBLE("tracker", "detection_threshold", tracker.detection_threshold),
      PFMOT_DOUBLE("tracker", "pruning_threshold", tracker.pruning_threshold),
      PFMOT_INT("tracker", "flow_steps", tracker.flow_steps),
      PFMOT_DOUBLE("tracker", "flow_first_step", tracker.flow_first_step),
      PFMOT_DOUBLE("tracker", "flow_ratio", tracker.flow_ratio),
      Field{"tracker", "gating", [](const RunConfig& c) { return std::string(c.tracker.gating ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.tracker.gating = to_bool(v); }},
      PFMOT_DOUBLE("tracker", "gate_probability", tracker.gate_probability),
      PFMOT_INT("tracker", "association_max_iters", tracker.association.max_iters),
      PFMOT_DOUBLE("tracker", "association_tol", tracker.association.tol),
      Field{"tracker", "mode", [](const RunConfig& c) { return std::string(to_string(c.tracker.proposal_mode)); },
            [](RunConfig& c, const std::string& v) { c.tracker.proposal_mode = to_mode(v); }},
      PFMOT_INT("tracker", "max_objects", tracker.max_objects),

      PFMOT_DOUBLE("metrics", "ospa_cutoff", ospa.cutoff),
      PFMOT_DOUBLE("metrics", "ospa_order", ospa.order),

      Field{"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) { c.seed = to_integer<std::uint64_t>(v); }},
      PFMOT_INT("run", "runs", runs),
      PFMOT_INT("run", "jobs", jobs),
      Field{"run", "out", [](const RunConfig& c) { return c.out_dir; },
            [](RunConfig& c, const std::string& v) { c.out_dir = trim(v); }},
      Field{"run", "modes", [](const RunConfig& c) { return from_modes(c.modes); },
            [](RunConfig& c, const std::string& v) { c.modes = to_modes(v); }},
  };
  return table;
}

#undef PFMOT_DOUBLE
#undef PFMOT_INT
#undef PFMOT_VEC3

}  // namespace

void RunConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("[") + section + "] " + e.what());
    }
  };
  wrap("scenario", [&] { scenario.validate(); });
  wrap("tracker", [&] { tracker.validate(); });
  wrap("metrics", [&] { ospa.validate(); });
  if (runs < 1) throw ConfigError("[run] runs must be >= 1");
  if (jobs < 1) throw ConfigError("[run] jobs must be >= 1");
  if (out_dir.empty()) throw ConfigError("[run] out must not be empty");
  if (modes.empty()) throw ConfigError("[run] modes must list at least one mode");
}

RunConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.message()) + " (line " + std::to_string(e.line()) + ")");
  }

  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' must be inside a section");
    }
    for (const auto& [key, value] : body) {
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) {
        return f.section == section && f.key == key;
      });
      if (it == table.end()) throw ConfigError("config: unknown key [" + section + "] " + key);
      try {
        it->set(cfg, value.data());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config: [" + section + "] " + key + ": " + e.what());
      }
    }
    const bool known_section = std::any_of(fields().begin(), fields().end(),
                                           [&](const Field& f) { return f.section == section; });
    if (!known_section) throw ConfigError("config: unknown section [" + section + "]");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  return parse_config(in);
}

void write_config(std::ostream& os, const RunConfig& cfg) {
  std::string current;
  for (const auto& f : fields()) {
    if (f.section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
}

}  // namespace pfmot
