#include "ern/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ern {

namespace fs = std::filesystem;
using nlohmann::json;

Trajectory run_evolution(const RunConfig& cfg, double amp_scale) {
  GeometryCache geo = GeometryCache::build(cfg.par, cfg.grid);
  std::vector<InitialPulse> pulses = cfg.pulses;
  for (InitialPulse& p : pulses) p.amplitude *= amp_scale;
  InitialData data = build_initial_data(pulses, cfg.par, geo, cfg.L, cfg.ncomp);
  return evolve(data, cfg.spec, cfg.par, cfg.grid, cfg.thr, cfg.correctors);
}

std::uint64_t trajectory_hash(const Trajectory& tr) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Mat& m : tr.psi)
    h = fnv1a(m.data(), sizeof(double) * size_t(m.size()), h);
  unsigned char fired = tr.blowup.fired ? 1 : 0;
  h = fnv1a(&fired, 1, h);
  return h;
}

std::string manifest_hash(const RunConfig& cfg, const Trajectory& tr) {
  std::uint64_t h = fnv1a(cfg.raw.data(), cfg.raw.size());
  std::uint64_t th = trajectory_hash(tr);
  h = fnv1a(&th, sizeof th, h);
  return hash_hex(h);
}

std::string run_directory(const RunConfig& cfg) {
  fs::path dir = fs::path(cfg.out_dir) / cfg.run_id;
  fs::create_directories(dir);
  return dir.string();
}

void write_manifest(const RunConfig& cfg, const std::string& dir,
                    const std::string& status, double wall_seconds,
                    const Trajectory* tr) {
  json m;
  m["run_id"] = cfg.run_id;
  m["config_hash"] = cfg.run_id;
  m["code_version"] = "ernlab 0.1";
  m["status"] = status;
  m["grid"] = {{"nu", cfg.grid.nu}, {"nv", cfg.grid.nv}, {"dv0", cfg.grid.dv0}};
  m["bands"] = {{"L", cfg.L}, {"ncomp", cfg.ncomp}};
  m["seed"] = cfg.seed;
  if (tr) {
    m["trajectory_hash"] = hash_hex(trajectory_hash(*tr));
    m["manifest_hash"] = manifest_hash(cfg, *tr);
    m["rows_committed"] = tr->rows();
    if (tr->blowup.fired) {
      m["blowup"] = {{"v", tr->blowup.v},
                     {"uhat", tr->blowup.i >= 0 ? tr->geo.uhat[tr->blowup.i] : -1.0},
                     {"what", tr->blowup.what}};
    }
  }
  // wall time is informational only; it is not part of any hash above
  m["wall_seconds"] = wall_seconds;
  write_text_atomic(dir + "/manifest.json", m.dump(2) + "\n");
}

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

SeriesRow report_row(const RunConfig& cfg, const EnergyReport& rep) {
  SeriesRow r;
  r.run_id = cfg.run_id;
  r.kind = rep.kind;
  r.p = rep.p;
  r.k = rep.k;
  r.tau = rep.tau;
  r.value = rep.value;
  r.err_est = rep.err_est;
  if (rep.truncated) r.flags = "truncated";
  if (rep.partial) r.flags += r.flags.empty() ? "partial" : ";partial";
  return r;
}

void append_series(const RunConfig& cfg, std::vector<SeriesRow>& rows,
                   const Series& s, double p = 0, int k = 0) {
  for (size_t i = 0; i < s.size(); ++i) {
    SeriesRow r;
    r.run_id = cfg.run_id;
    r.kind = s.name;
    r.p = p;
    r.k = k;
    r.tau = s.x[i];
    r.value = s.y[i];
    rows.push_back(std::move(r));
  }
}

// Highest tau whose cone vertex still sits inside the computed v-rows.
double max_reachable_tau(const Trajectory& tr) {
  double vlast = tr.geo.v[size_t(tr.rows() - 1)];
  return tau_of_uv(vlast, vlast, tr.par);
}

std::vector<double> clip_taus(const std::vector<double>& taus, const Trajectory& tr) {
  double cap = 0.95 * max_reachable_tau(tr);
  std::vector<double> out;
  for (double t : taus)
    if (t <= cap) out.push_back(t);
  if (out.empty()) out.push_back(std::max(1.0, 0.5 * cap));
  return out;
}

ButterflyIdx pick_butterfly(const Trajectory& tr, const MonitorSchedule& mon) {
  double cap = max_reachable_tau(tr);
  std::vector<std::pair<double, double>> tries;
  tries.emplace_back(1 + 0.12 * (cap - 1), 1 + 0.5 * (cap - 1));
  tries.emplace_back(1 + 0.2 * (cap - 1), 1 + 0.6 * (cap - 1));
  for (double t1 : mon.taus)
    for (double t2 : mon.taus)
      if (t2 > 2 * t1 && t2 < 0.9 * cap) tries.emplace_back(t1, t2);
  for (auto [t1, t2] : tries) {
    try {
      return make_butterfly(tr, t1, t2);
    } catch (const std::exception&) {
    }
  }
  throw std::runtime_error("driver: no valid check region fits the computed domain");
}

SeriesRow check_row(const RunConfig& cfg, const CheckResult& c, double p = 0, int k = 0) {
  SeriesRow r;
  r.run_id = cfg.run_id;
  r.kind = "check:" + c.name;
  r.p = p;
  r.k = k;
  r.tau = c.rhs;
  r.value = c.constant;
  r.err_est = c.lhs;
  if (c.violation) r.flags = "violation";
  return r;
}

Series energy_series(const CommutedCache& cache, const EnergyConfig& cfg,
                     const std::vector<double>& taus) {
  Series s;
  s.name = "energy_total";
  for (double t : taus) {
    EnergyReport a = outgoing_flux(cache, cfg, t);
    EnergyReport b = ingoing_flux(cache, cfg, t);
    s.x.push_back(t);
    s.y.push_back(a.value + b.value);
  }
  return s;
}

RateRow fit_row(const RunConfig& cfg, const std::string& kind, const Series& s,
                double lo, double hi, double p = 0, int k = 0) {
  std::vector<double> x, y;
  for (size_t i = 0; i < s.size(); ++i)
    if (s.x[i] >= lo && s.x[i] <= hi) {
      x.push_back(s.x[i]);
      y.push_back(s.y[i]);
    }
  RateFit f = fit_rate(x, y);
  RateRow r;
  r.run_id = cfg.run_id;
  r.kind = kind;
  r.p = p;
  r.k = k;
  r.window_lo = lo;
  r.window_hi = hi;
  r.exponent = f.exponent;
  r.stderr_ = f.stderr_;
  return r;
}

} // namespace

int cmd_background(const RunConfig& cfg) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  GeometryCache geo = GeometryCache::build(cfg.par, cfg.grid);
  std::vector<SeriesRow> rows;
  auto push = [&](const std::string& kind, double x, double val) {
    SeriesRow r;
    r.run_id = cfg.run_id;
    r.kind = kind;
    r.tau = x;
    r.value = val;
    rows.push_back(std::move(r));
  };
  // the normalization anchor r_*(2M) = 0 goes out explicitly
  push("rstar", 2 * cfg.par.M, tortoise_checked(2 * cfg.par.M, cfg.par));
  for (int i = 0; i <= cfg.grid.nu; ++i) {
    double r = cfg.par.Lambda - geo.uhat[size_t(i)];
    Potential pot = potential(r, cfg.par);
    push("D", r, pot.D);
    push("Dprime", r, pot.Dp);
    push("w", geo.uhat[size_t(i)], geo.w[i]);
    if (r > cfg.par.M) push("rstar", r, tortoise_checked(r, cfg.par));
  }
  write_series_csv(dir + "/background.csv", rows);
  write_manifest(cfg, dir, "completed", now_seconds() - t0, nullptr);
  return 0;
}

int cmd_evolve(const RunConfig& cfg) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  Trajectory tr = run_evolution(cfg);
  std::vector<SeriesRow> rows;
  std::vector<double> taus = clip_taus(cfg.monitors.taus, tr);
  append_series(cfg, rows, sup_phi_series(tr, taus));
  if (tr.geo.horizon) {
    std::set<std::pair<std::pair<int, int>, int>> modes = {{{0, 0}, 0}};
    for (const InitialPulse& p : cfg.pulses) modes.insert({{p.l, p.m}, p.comp});
    for (auto& [lm, comp] : modes)
      for (HorizonField f : {HorizonField::Phi, HorizonField::AretakisH,
                             HorizonField::YPsi, HorizonField::YYPsi})
        append_series(cfg, rows, horizon_series(tr, f, lm.first, lm.second, comp));
  }
  write_series_csv(dir + "/evolve.csv", rows);
  std::string status = tr.blowup.fired ? "blowup" : "completed";
  write_manifest(cfg, dir, status, now_seconds() - t0, &tr);
  return tr.blowup.fired ? 2 : 0;
}

int cmd_diagnose(const RunConfig& cfg) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  Trajectory tr = run_evolution(cfg);
  int kmax = 0;
  for (int k : cfg.monitors.k_list) kmax = std::max(kmax, k);
  CommutedCache cache(tr, kmax);
  std::vector<double> taus = clip_taus(cfg.monitors.taus, tr);
  std::vector<SeriesRow> rows;
  for (int k : cfg.monitors.k_list)
    for (double p : cfg.monitors.p_list) {
      EnergyConfig ec{p, k};
      ec.validate(cfg.par);
      for (double tau : taus) {
        rows.push_back(report_row(cfg, outgoing_flux(cache, ec, tau)));
        rows.push_back(report_row(cfg, ingoing_flux(cache, ec, tau)));
        rows.push_back(report_row(cfg, far_bulk_density(cache, ec, tau)));
        rows.push_back(report_row(cfg, near_bulk_density(cache, ec, tau)));
      }
      if (taus.size() >= 2) {
        double m = master_energy(cache, ec, taus.front(), taus.back());
        SeriesRow r;
        r.run_id = cfg.run_id;
        r.kind = "master_energy";
        r.p = p;
        r.k = k;
        r.tau = taus.front();
        r.value = m;
        rows.push_back(std::move(r));
      }
    }
  for (int k : cfg.monitors.k_list)
    if (taus.size() >= 2) {
      SeriesRow r;
      r.run_id = cfg.run_id;
      r.kind = "trapping_integral";
      r.k = k;
      r.tau = taus.front();
      r.value = trapping_integral(cache, k, taus.front(), taus.back());
      rows.push_back(std::move(r));
    }
  {
    InitialNorm n = initial_norm(cache, kmax);
    SeriesRow r;
    r.run_id = cfg.run_id;
    r.kind = "initial_norm";
    r.k = kmax;
    r.tau = 1;
    r.value = n.value;
    r.err_est = n.sup_part;
    rows.push_back(std::move(r));
  }
  append_series(cfg, rows, sup_phi_series(tr, taus));
  for (double q : cfg.monitors.q_list)
    append_series(cfg, rows, weighted_sup_series(tr, q, taus), q);
  append_series(cfg, rows, linfty_near_series(tr, taus));
  append_series(cfg, rows, linfty_far_series(tr, taus));
  if (tr.geo.horizon)
    for (HorizonField f : {HorizonField::Phi, HorizonField::YPhi, HorizonField::YYPhi,
                           HorizonField::AretakisH, HorizonField::YPsi,
                           HorizonField::YYPsi})
      append_series(cfg, rows, horizon_series(tr, f, 0, 0, 0));
  write_series_csv(dir + "/diagnostics.csv", rows);
  std::string status = tr.blowup.fired ? "blowup" : "completed";
  write_manifest(cfg, dir, status, now_seconds() - t0, &tr);
  return tr.blowup.fired ? 2 : 0;
}

int cmd_rates(const RunConfig& cfg) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  Trajectory tr = run_evolution(cfg);
  CommutedCache cache(tr, 0);
  std::vector<double> taus = clip_taus(cfg.monitors.taus, tr);
  double lo = cfg.monitors.fit_lo, hi = cfg.monitors.fit_hi;
  hi = std::min(hi, taus.back());
  std::vector<RateRow> rows;
  {
    EnergyConfig ec{0.0, 0};
    rows.push_back(fit_row(cfg, "energy_decay", energy_series(cache, ec, taus), lo, hi));
  }
  rows.push_back(fit_row(cfg, "sup_phi_decay", sup_phi_series(tr, taus), lo, hi));
  for (double q : cfg.monitors.q_list)
    rows.push_back(fit_row(cfg, "weighted_sup_growth", weighted_sup_series(tr, q, taus),
                           lo, hi, q));
  rows.push_back(fit_row(cfg, "linfty_near_decay", linfty_near_series(tr, taus), lo, hi));
  rows.push_back(fit_row(cfg, "linfty_far_decay", linfty_far_series(tr, taus), lo, hi));
  {
    Series near = linfty_near_series(tr, taus);
    rows.push_back(fit_row(cfg, "l2linfty_tail", tail_integral(near, 2), lo, hi));
  }
  write_rates_csv(dir + "/rates.csv", rows);
  std::string status = tr.blowup.fired ? "blowup" : "completed";
  write_manifest(cfg, dir, status, now_seconds() - t0, &tr);
  return tr.blowup.fired ? 2 : 0;
}

int cmd_check_identities(const RunConfig& cfg) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  Trajectory tr = run_evolution(cfg);
  int kmax = 0;
  for (int k : cfg.monitors.k_list) kmax = std::max(kmax, k);
  CommutedCache cache(tr, kmax + 1);
  ButterflyIdx b = pick_butterfly(tr, cfg.monitors);
  std::vector<SeriesRow> rows;
  bool violated = false;
  auto record = [&](const CheckResult& c, double p = 0, int k = 0) {
    violated = violated || c.violation;
    rows.push_back(check_row(cfg, c, p, k));
  };
  record(check_multiplier_identity(tr, FieldName::T, b.i1, b.i2, b.j1, b.j2));
  record(check_multiplier_identity(tr, FieldName::R, b.i1, b.i2, b.j1, b.j2));
  for (int k : cfg.monitors.k_list) {
    record(check_t_energy(cache, k, b), 0, k);
    record(check_morawetz(cache, k, b), 0, k);
    record(check_trap_removal(cache, k, b), 0, k);
    for (double p : cfg.monitors.p_list) {
      EnergyConfig ec{p, k};
      ec.validate(cfg.par);
      record(check_r_minus_p(cache, ec, b), p, k);
      record(check_r_p(cache, ec, b), p, k);
    }
  }
  for (auto& [name, mag] : source_class_magnitudes(tr, b)) {
    SeriesRow r;
    r.run_id = cfg.run_id;
    r.kind = "source_class:" + name;
    r.value = mag;
    rows.push_back(std::move(r));
  }
  write_series_csv(dir + "/checks.csv", rows);
  write_manifest(cfg, dir, tr.blowup.fired ? "blowup" : "completed",
                 now_seconds() - t0, &tr);
  if (violated) return 1;
  return tr.blowup.fired ? 2 : 0;
}

int cmd_check_hardy(const RunConfig& cfg, int nseeds) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  GridSpec gs = cfg.grid;
  if (gs.reaches_horizon(cfg.par)) gs.uhat_max = cfg.par.uhat_H() - 0.05;
  std::vector<SeriesRow> rows;
  bool violated = false;
  const std::vector<double> plist = {0.3, 0.5, 0.9, 1.5};
  for (int s = 0; s < nseeds; ++s) {
    uint64_t seed = cfg.seed + uint64_t(s);
    Trajectory tr = synthetic_trajectory(cfg.par, gs, std::min(cfg.L, 2), 1, seed);
    CommutedCache cache(tr, 0);
    ButterflyIdx b = pick_butterfly(tr, cfg.monitors);
    int jmid = (b.j1 + b.j2) / 2;
    int imid = (b.i1 + b.i2) / 2;
    for (double p : plist) {
      for (const CheckResult& c : check_hardy_near(cache, p, jmid, b)) {
        violated = violated || c.violation;
        SeriesRow r = check_row(cfg, c, p);
        r.k = s;
        rows.push_back(std::move(r));
      }
      for (const CheckResult& c : check_hardy_far(cache, p, imid, b)) {
        violated = violated || c.violation;
        SeriesRow r = check_row(cfg, c, p);
        r.k = s;
        rows.push_back(std::move(r));
      }
    }
    CounterRng rng{splitmix64(seed ^ 0x9a3f), 0};
    std::vector<double> w(64), mu(64);
    for (double& x : w) x = 0.05 + rng.next_double();
    for (double& x : mu) x = rng.next_double();
    double theta = 0.1 + 0.8 * rng.next_double();
    CheckResult c = check_interpolation(w, mu, 0.3, 1.7, theta);
    violated = violated || c.violation;
    SeriesRow r = check_row(cfg, c, theta);
    r.k = s;
    rows.push_back(std::move(r));
  }
  write_series_csv(dir + "/hardy.csv", rows);
  write_manifest(cfg, dir, "completed", now_seconds() - t0, nullptr);
  return violated ? 1 : 0;
}

int cmd_blowup_scan(const RunConfig& cfg, double lo, double hi) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  if (!(lo > 0 && hi > lo))
    throw std::runtime_error("blowup-scan: need a bracket 0 < lo < hi");
  std::vector<SeriesRow> rows;
  auto probe = [&](double amp) {
    Trajectory tr = run_evolution(cfg, amp);
    SeriesRow r;
    r.run_id = cfg.run_id;
    r.kind = "blowup_probe";
    r.tau = amp;
    r.value = tr.blowup.fired ? 1.0 : 0.0;
    r.err_est = tr.blowup.fired ? tr.blowup.v : 0.0;
    if (tr.blowup.fired) r.flags = "blowup";
    rows.push_back(std::move(r));
    return tr.blowup.fired;
  };
  bool blo = probe(lo), bhi = probe(hi);
  if (blo || !bhi) {
    write_series_csv(dir + "/blowup.csv", rows);
    write_manifest(cfg, dir, "completed", now_seconds() - t0, nullptr);
    fprintf(stderr, "blowup-scan: [%g, %g] does not bracket the threshold\n", lo, hi);
    return 1;
  }
  while (hi - lo > 0.05 * hi) {
    double mid = 0.5 * (lo + hi);
    (probe(mid) ? hi : lo) = mid;
  }
  SeriesRow r;
  r.run_id = cfg.run_id;
  r.kind = "blowup_threshold";
  r.tau = lo;
  r.value = 0.5 * (lo + hi);
  r.err_est = 0.5 * (hi - lo);
  rows.push_back(std::move(r));
  write_series_csv(dir + "/blowup.csv", rows);
  write_manifest(cfg, dir, "blowup", now_seconds() - t0, nullptr);
  return 2;
}

int cmd_convergence(const RunConfig& cfg, int levels) {
  double t0 = now_seconds();
  std::string dir = run_directory(cfg);
  if (levels < 3) throw std::runtime_error("convergence: need at least 3 levels");
  std::vector<double> sup50, e20;
  std::vector<SeriesRow> rows;
  for (int l = 0; l < levels; ++l) {
    RunConfig c = cfg;
    c.grid.nu = cfg.grid.nu << l;
    c.grid.nv = cfg.grid.nv << l;
    c.grid.dv0 = cfg.grid.dv0 / double(1 << l);
    Trajectory tr = run_evolution(c);
    double cap = max_reachable_tau(tr);
    double tau_sup = std::min(50.0, 0.8 * cap);
    double tau_e = std::min(20.0, 0.5 * cap);
    sup50.push_back(sup_phi_on_slice(tr, tau_sup));
    CommutedCache cache(tr, 0);
    EnergyConfig ec{0.0, 0};
    e20.push_back(outgoing_flux(cache, ec, tau_e).value +
                  ingoing_flux(cache, ec, tau_e).value);
    SeriesRow r;
    r.run_id = cfg.run_id;
    r.kind = "level_sup_phi";
    r.k = l;
    r.tau = tau_sup;
    r.value = sup50.back();
    rows.push_back(r);
    r.kind = "level_energy";
    r.tau = tau_e;
    r.value = e20.back();
    rows.push_back(r);
  }
  std::vector<RateRow> fits;
  auto orders = [&](const std::string& kind, const std::vector<double>& f) {
    for (size_t l = 0; l + 2 < f.size(); ++l) {
      double d1 = std::abs(f[l] - f[l + 1]), d2 = std::abs(f[l + 1] - f[l + 2]);
      RateRow r;
      r.run_id = cfg.run_id;
      r.kind = kind;
      r.k = int(l);
      r.exponent = (d1 > 0 && d2 > 0) ? std::log2(d1 / d2) : 0.0;
      fits.push_back(std::move(r));
    }
  };
  orders("richardson_sup_phi", sup50);
  orders("richardson_energy", e20);
  write_series_csv(dir + "/convergence.csv", rows);
  write_rates_csv(dir + "/convergence_rates.csv", fits);
  write_manifest(cfg, dir, "completed", now_seconds() - t0, nullptr);
  return 0;
}

} // namespace ern
