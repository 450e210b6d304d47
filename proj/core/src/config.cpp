#include "miloc/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "miloc/error.hpp"
#include "miloc/scenario.hpp"

namespace miloc {

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::NumLs: return "numls";
    case Estimator::PairMl: return "pairml";
    case Estimator::TurboLs: return "turbols";
    case Estimator::Multilateration: return "multilateration";
  }
  return "?";
}

const char* to_string(Scheme s) { return s == Scheme::Cooperative ? "coop" : "noncoop"; }

std::string init_label(InitKind kind, int restarts) {
  switch (kind) {
    case InitKind::Perfect: return "perfect";
    case InitKind::Random: return "random:" + std::to_string(restarts);
    case InitKind::PairMl: return "pairml";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorKind::Config, "'" + key + " = " + value + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    bad(key, value, "not a number");
  }
  if (used != value.size()) bad(key, value, "trailing characters");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(key, value, "not a non-negative integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad(key, value, "expected true or false");
}

std::vector<Deployment> parse_anchor_list(const std::string& text) {
  std::vector<Deployment> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    double x, y, z;
    std::string rest;
    if (!(is >> x >> y >> z) || (is >> rest)) bad("anchor_layout", text, "expected 'x y z' triples separated by ';'");
    out.emplace_back(Vec3(x, y, z), EulerAngles{});
  }
  if (out.empty()) bad("anchor_layout", text, "no anchors");
  return out;
}

}  // namespace

std::vector<std::size_t> parse_agent_list(const std::string& text) {
  const std::string t = trim(text);
  std::vector<std::size_t> out;
  if (const auto dots = t.find(".."); dots != std::string::npos) {
    const auto lo = to_uint("agents", trim(t.substr(0, dots)));
    const auto hi = to_uint("agents", trim(t.substr(dots + 2)));
    if (lo < 1 || hi < lo) bad("agents", text, "empty range");
    for (auto m = lo; m <= hi; ++m) out.push_back(m);
    return out;
  }
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = to_uint("agents", trim(item));
    if (m < 1) bad("agents", text, "need at least one agent");
    out.push_back(m);
  }
  if (out.empty()) bad("agents", text, "empty list");
  return out;
}

std::vector<Deployment> ExperimentConfig::anchors() const {
  if (anchor_layout == "default") return default_anchors(room());
  return parse_anchor_list(anchor_layout);
}

void ExperimentConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw Error(ErrorKind::Config, std::string(key) + " must be positive");
  };
  positive("room_size_m", room_size_m);
  positive("nu", nu);
  positive("diameter_m", diameter_m);
  positive("resistance_ohm", resistance_ohm);
  positive("frequency_hz", frequency_hz);
  positive("mu", mu);
  if (!(sigma >= 0.0)) throw Error(ErrorKind::Config, "sigma must be non-negative");
  if (!(min_dist_factor >= 0.0)) throw Error(ErrorKind::Config, "min_dist_factor must be non-negative");
  if (topologies < 1 || noise < 1) throw Error(ErrorKind::Config, "topologies and noise must be >= 1");
  if (agents.empty()) throw Error(ErrorKind::Config, "agents must not be empty");
  if (init == InitKind::Random && random_restarts < 1) throw Error(ErrorKind::Config, "random:<k> needs k >= 1");
  (void)anchors();
}

void set_config_value(ExperimentConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "room_size_m") {
    cfg.room_size_m = to_double(key, value);
  } else if (key == "anchor_layout") {
    if (value != "default") parse_anchor_list(value);
    cfg.anchor_layout = value;
  } else if (key == "nu") {
    cfg.nu = to_double(key, value);
  } else if (key == "diameter_m") {
    cfg.diameter_m = to_double(key, value);
  } else if (key == "resistance_ohm") {
    cfg.resistance_ohm = to_double(key, value);
  } else if (key == "frequency_hz") {
    cfg.frequency_hz = to_double(key, value);
  } else if (key == "mu") {
    cfg.mu = to_double(key, value);
  } else if (key == "sigma") {
    cfg.sigma = to_double(key, value);
  } else if (key == "min_dist_factor") {
    cfg.min_dist_factor = to_double(key, value);
  } else if (key == "agents") {
    cfg.agents = parse_agent_list(value);
  } else if (key == "topologies") {
    cfg.topologies = to_uint(key, value);
  } else if (key == "noise") {
    cfg.noise = to_uint(key, value);
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(to_uint(key, value));
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "scheme") {
    if (value == "coop") {
      cfg.scheme = Scheme::Cooperative;
    } else if (value == "noncoop") {
      cfg.scheme = Scheme::NonCooperative;
    } else {
      bad(key, value, "expected coop or noncoop");
    }
  } else if (key == "estimator") {
    if (value == "numls") {
      cfg.estimator = Estimator::NumLs;
    } else if (value == "pairml") {
      cfg.estimator = Estimator::PairMl;
    } else if (value == "turbols") {
      cfg.estimator = Estimator::TurboLs;
    } else if (value == "multilateration") {
      cfg.estimator = Estimator::Multilateration;
    } else {
      bad(key, value, "expected numls, pairml, turbols or multilateration");
    }
  } else if (key == "init") {
    if (value == "perfect") {
      cfg.init = InitKind::Perfect;
    } else if (value == "pairml") {
      cfg.init = InitKind::PairMl;
    } else if (value.rfind("random:", 0) == 0) {
      const auto k = to_uint(key, value.substr(7));
      if (k < 1) bad(key, value, "need at least one restart");
      cfg.init = InitKind::Random;
      cfg.random_restarts = static_cast<int>(k);
    } else {
      bad(key, value, "expected perfect, random:<k> or pairml");
    }
  } else if (key == "reference_solve") {
    cfg.reference_solve = to_bool(key, value);
  } else if (key == "timing") {
    cfg.timing = to_bool(key, value);
  } else {
    throw Error(ErrorKind::Config, "unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path.string());
  return parse_config(in);
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "room_size_m = " << cfg.room_size_m << '\n'
     << "anchor_layout = " << cfg.anchor_layout << '\n'
     << "nu = " << cfg.nu << '\n'
     << "diameter_m = " << cfg.diameter_m << '\n'
     << "resistance_ohm = " << cfg.resistance_ohm << '\n'
     << "frequency_hz = " << cfg.frequency_hz << '\n'
     << "mu = " << cfg.mu << '\n'
     << "sigma = " << cfg.sigma << '\n'
     << "min_dist_factor = " << cfg.min_dist_factor << '\n';
  os << "agents = ";
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) os << (i ? "," : "") << cfg.agents[i];
  os << '\n'
     << "topologies = " << cfg.topologies << '\n'
     << "noise = " << cfg.noise << '\n'
     << "scheme = " << to_string(cfg.scheme) << '\n'
     << "estimator = " << to_string(cfg.estimator) << '\n'
     << "init = " << init_label(cfg.init, cfg.random_restarts) << '\n'
     << "seed = " << cfg.seed << '\n'
     << "out = " << cfg.out << '\n'
     << "threads = " << cfg.threads << '\n'
     << "reference_solve = " << (cfg.reference_solve ? "true" : "false") << '\n'
     << "timing = " << (cfg.timing ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace miloc
