#include "ern/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ern {

using nlohmann::json;

std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) throw std::runtime_error("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
}

InitialPulse::Leg parse_leg(const std::string& s) {
  if (s == "outgoing") return InitialPulse::Leg::Outgoing;
  if (s == "ingoing") return InitialPulse::Leg::Ingoing;
  throw std::runtime_error("config: pulse leg must be outgoing|ingoing, got '" + s + "'");
}

InitialPulse::Shape parse_shape(const std::string& s) {
  if (s == "gaussian") return InitialPulse::Shape::Gaussian;
  if (s == "bump") return InitialPulse::Shape::Bump;
  if (s == "ramp") return InitialPulse::Shape::Ramp;
  throw std::runtime_error("config: pulse shape must be gaussian|bump|ramp, got '" + s + "'");
}

} // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: JSON parse error: ") + e.what());
  }
  require_keys(j, "top level",
               {"background", "grid", "initial_data", "nonlinearity", "monitors",
                "thresholds", "seed", "out_dir", "correctors"});
  RunConfig cfg;
  cfg.raw = text;
  cfg.run_id = hash_hex(fnv1a(text.data(), text.size()));

  if (j.contains("background")) {
    const json& b = j["background"];
    require_keys(b, "background", {"M", "Lambda", "delta", "r0", "r1"});
    cfg.par.M = b.value("M", cfg.par.M);
    cfg.par.Lambda = b.value("Lambda", cfg.par.Lambda);
    cfg.par.delta = b.value("delta", cfg.par.delta);
    cfg.par.r0 = b.value("r0", cfg.par.r0);
    cfg.par.r1 = b.value("r1", cfg.par.r1);
  }
  cfg.par.validate();

  if (j.contains("grid")) {
    const json& g = j["grid"];
    require_keys(g, "grid", {"nu", "nv", "dv0", "stretch", "uhat_max"});
    cfg.grid.nu = g.value("nu", cfg.grid.nu);
    cfg.grid.nv = g.value("nv", cfg.grid.nv);
    cfg.grid.dv0 = g.value("dv0", cfg.grid.dv0);
    cfg.grid.stretch = g.value("stretch", cfg.grid.stretch);
    cfg.grid.uhat_max = g.value("uhat_max", cfg.grid.uhat_max);
  }
  cfg.grid.validate();

  if (j.contains("initial_data")) {
    const json& d = j["initial_data"];
    require_keys(d, "initial_data", {"L", "ncomp", "pulses"});
    cfg.L = d.value("L", 0);
    cfg.ncomp = d.value("ncomp", 1);
    if (cfg.L < 0 || cfg.ncomp < 1)
      throw std::runtime_error("config: initial_data requires L >= 0 and ncomp >= 1");
    if (d.contains("pulses")) {
      if (!d["pulses"].is_array())
        throw std::runtime_error("config: initial_data.pulses must be an array");
      for (const json& p : d["pulses"]) {
        require_keys(p, "pulse",
                     {"leg", "shape", "amplitude", "center", "width", "l", "m", "comp"});
        InitialPulse pulse;
        pulse.leg = parse_leg(p.value("leg", "outgoing"));
        pulse.shape = parse_shape(p.value("shape", "gaussian"));
        pulse.amplitude = p.value("amplitude", 1.0);
        pulse.center = p.value("center", 10.0);
        pulse.width = p.value("width", 2.0);
        pulse.l = p.value("l", 0);
        pulse.m = p.value("m", 0);
        pulse.comp = p.value("comp", 0);
        if (pulse.width <= 0) throw std::runtime_error("config: pulse width must be > 0");
        if (pulse.l > cfg.L || std::abs(pulse.m) > pulse.l || pulse.comp < 0 ||
            pulse.comp >= cfg.ncomp)
          throw std::runtime_error("config: pulse mode outside the run's bands");
        cfg.pulses.push_back(pulse);
      }
    }
  }

  if (j.contains("nonlinearity")) {
    const json& n = j["nonlinearity"];
    require_keys(n, "nonlinearity", {"preset", "coupling", "n", "chi_width"});
    std::string preset = n.value("preset", "none");
    if (preset == "none") {
      // linear run
    } else if (preset == "wave_map") {
      cfg.spec = wave_map_spec(cfg.par, n.value("coupling", 1.0));
    } else if (preset == "aretakis") {
      cfg.spec = aretakis_spec(cfg.par, n.value("n", 1), n.value("chi_width", 0.5));
    } else {
      throw std::runtime_error("config: nonlinearity preset must be none|wave_map|aretakis");
    }
    if (!cfg.spec.empty() && cfg.spec.ncomp != cfg.ncomp)
      cfg.spec.ncomp = cfg.ncomp;
  }

  if (j.contains("monitors")) {
    const json& m = j["monitors"];
    require_keys(m, "monitors", {"taus", "p_list", "k_list", "q_list", "fit_lo", "fit_hi"});
    if (m.contains("taus")) cfg.monitors.taus = m["taus"].get<std::vector<double>>();
    if (m.contains("p_list")) cfg.monitors.p_list = m["p_list"].get<std::vector<double>>();
    if (m.contains("k_list")) cfg.monitors.k_list = m["k_list"].get<std::vector<int>>();
    if (m.contains("q_list")) cfg.monitors.q_list = m["q_list"].get<std::vector<double>>();
    cfg.monitors.fit_lo = m.value("fit_lo", cfg.monitors.fit_lo);
    cfg.monitors.fit_hi = m.value("fit_hi", cfg.monitors.fit_hi);
  }
  if (cfg.monitors.taus.empty())
    for (double t = 2; t <= 200; t *= std::sqrt(2.0)) cfg.monitors.taus.push_back(t);
  if (cfg.monitors.p_list.empty())
    cfg.monitors.p_list = {cfg.par.delta, 1.0, 2.0 - cfg.par.delta};
  if (cfg.monitors.k_list.empty()) cfg.monitors.k_list = {0};
  if (cfg.monitors.q_list.empty())
    cfg.monitors.q_list = {1.5 - cfg.par.delta, 2.0};

  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    require_keys(t, "thresholds", {"theta1", "theta2"});
    cfg.thr.theta1 = t.value("theta1", cfg.thr.theta1);
    cfg.thr.theta2 = t.value("theta2", cfg.thr.theta2);
    if (cfg.thr.theta1 <= 0 || cfg.thr.theta2 <= 0)
      throw std::runtime_error("config: thresholds must be positive");
  }

  cfg.seed = j.value("seed", std::uint64_t(1));
  cfg.out_dir = j.value("out_dir", std::string("out"));
  cfg.correctors = j.value("correctors", 2);
  if (cfg.correctors < 1 || cfg.correctors > 8)
    throw std::runtime_error("config: correctors must be in [1, 8]");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

} // namespace ern
