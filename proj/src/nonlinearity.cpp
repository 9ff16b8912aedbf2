#include "ern/nonlinearity.hpp"

#include <cmath>

#include "ern/rng.hpp"

namespace ern {

double SmoothCoefficient::eval(double r, double phi_value, const BackgroundParams& par) const {
  double v = c;
  switch (base) {
    case Base::One: break;
    case Base::InvR: v /= r; break;
    case Base::InvR2: v /= r * r; break;
    case Base::InvD: v /= metric_coefficient(r, par.M); break;
  }
  switch (phi_dep) {
    case PhiDep::None: break;
    case PhiDep::Cos: v *= std::cos(phi_value); break;
    case PhiDep::Rational: v /= 1.0 + phi_value * phi_value; break;
  }
  return v;
}

namespace {

// Generalized smoothstep of order s: C^s ramp from 0 at t=0 to 1 at t=1.
double smoothstep(int s, double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  // S_s(t) = t^{s+1} sum_{n=0}^{s} C(s+n, n) C(2s+1, s-n) (-t)^n
  double acc = 0;
  auto binom = [](int n, int k) {
    double b = 1;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
  };
  for (int n = 0; n <= s; ++n)
    acc += binom(s + n, n) * binom(2 * s + 1, s - n) * std::pow(-t, n);
  return std::pow(t, s + 1) * acc;
}

} // namespace

double CutoffProfile::eval(double r) const {
  if (r <= lo || r >= hi) return 0;
  if (r >= plateau_lo && r <= plateau_hi) return 1;
  if (r < plateau_lo) return smoothstep(s, (r - lo) / (plateau_lo - lo));
  return smoothstep(s, (hi - r) / (hi - plateau_hi));
}

ValidationReport validate(const NonlinearitySpec& spec, const BackgroundParams& par) {
  ValidationReport rep;
  for (size_t t = 0; t < spec.terms.size(); ++t) {
    const NonlinearityTerm& term = spec.terms[t];
    auto bad = [&](const std::string& why) {
      rep.ok = false;
      rep.violations.push_back("term " + std::to_string(t) + ": " + why);
    };
    auto in_comp = [&](int c) { return c >= 0 && c < spec.ncomp; };
    if (!in_comp(term.target) || !in_comp(term.alpha)) bad("component index out of range");
    if (term.kind != TermKind::AretakisPoly && !in_comp(term.beta))
      bad("component index out of range");
    switch (term.kind) {
      case TermKind::NullUV:
      case TermKind::NullAngular:
        // Null forms are only admissible outside the generic window.
        if (!(term.win_hi <= par.r0 || term.win_lo >= par.r1))
          bad("null-form window must satisfy hi <= r0 or lo >= r1");
        if (term.kind == TermKind::NullAngular && (term.gi < 1 || term.gi > 3 || term.gj < 1 || term.gj > 3))
          bad("rotation index out of range");
        break;
      case TermKind::MidGeneric:
        if (!(term.win_lo >= par.r0 && term.win_hi <= par.r1 * (1 + 1e-12)))
          bad("generic quadratic window must lie inside [r0, r1]");
        break;
      case TermKind::AretakisPoly:
        if (term.n < 1) bad("polynomial exponent n must be >= 1");
        if (!(term.chi.hi <= par.r0)) bad("cutoff support must lie in {r <= r0}");
        rep.flags.push_back("term " + std::to_string(t) +
                            ": non-null-condition (blowup study)");
        break;
    }
  }
  return rep;
}

void accumulate_source(const NonlinearitySpec& spec, const PointState& st,
                       SourceChart chart, const BackgroundParams& par, Mat& out) {
  const double r = st.r;
  const int np = int(st.phi->rows());
  for (const NonlinearityTerm& term : spec.terms) {
    if (term.kind == TermKind::AretakisPoly) {
      double chi = term.chi.eval(r);
      if (chi == 0) continue;
      for (int p = 0; p < np; ++p) {
        double ph = (*st.phi)(p, term.alpha);
        double yph = -(*st.duhat_phi)(p, term.alpha) / st.A;
        double S = st.A * chi *
                   (std::pow(ph * ph, term.n) + std::pow(yph * yph, term.n));
        out(p, term.target) += (chart == SourceChart::DoubleNull) ? st.w * S : S;
      }
      continue;
    }
    if (r < term.win_lo || r >= term.win_hi) continue;
    for (int p = 0; p < np; ++p) {
      double f = term.f.eval(r, (*st.phi)(p, term.f.phi_comp), par);
      double S = 0;
      switch (term.kind) {
        case TermKind::NullUV:
          // D*N = f du dv = f w duhat dv; the solver's /w cancels exactly.
          S = f * (*st.duhat_phi)(p, term.alpha) * (*st.dv_phi)(p, term.beta);
          break;
        case TermKind::NullAngular:
          S = st.A * f / (r * r) * (*st.gamma_phi[term.gi - 1])(p, term.alpha) *
              (*st.gamma_phi[term.gj - 1])(p, term.beta);
          break;
        case TermKind::MidGeneric: {
          auto slot = [&](Direction d, int comp) -> double {
            switch (d) {
              case Direction::U: return st.w * (*st.duhat_phi)(p, comp);
              case Direction::V: return (*st.dv_phi)(p, comp);
              case Direction::G1: return (*st.gamma_phi[0])(p, comp);
              case Direction::G2: return (*st.gamma_phi[1])(p, comp);
              case Direction::G3: return (*st.gamma_phi[2])(p, comp);
            }
            return 0;
          };
          S = st.A * f * slot(term.x1, term.alpha) * slot(term.x2, term.beta);
          break;
        }
        default: break;
      }
      out(p, term.target) += (chart == SourceChart::DoubleNull) ? st.w * S : S;
    }
  }
}

std::vector<std::vector<StructClass>> classify_for_diagnostics(const NonlinearitySpec& spec) {
  std::vector<std::vector<StructClass>> out(spec.terms.size());
  for (size_t t = 0; t < spec.terms.size(); ++t) {
    const NonlinearityTerm& term = spec.terms[t];
    std::vector<StructClass>& cls = out[t];
    switch (term.kind) {
      case TermKind::NullUV:
        cls = {StructClass::ClassI, StructClass::ClassII};
        break;
      case TermKind::NullAngular:
        cls = {StructClass::ClassIII};
        break;
      case TermKind::MidGeneric:
        cls = {StructClass::Star};
        break;
      case TermKind::AretakisPoly:
        cls = {StructClass::NonNull};
        break;
    }
    if (term.f.phi_dep != SmoothCoefficient::PhiDep::None &&
        term.kind != TermKind::AretakisPoly) {
      cls.push_back(StructClass::ClassIV);
      cls.push_back(StructClass::ClassV);
    }
  }
  return out;
}

std::string struct_class_name(StructClass c) {
  switch (c) {
    case StructClass::Star: return "N_star";
    case StructClass::ClassI: return "N_i";
    case StructClass::ClassII: return "N_ii";
    case StructClass::ClassIII: return "N_iii";
    case StructClass::ClassIV: return "N_iv";
    case StructClass::ClassV: return "N_v";
    case StructClass::NonNull: return "non_null";
  }
  return "?";
}

std::vector<std::string> audit_coefficient_bounds(const NonlinearitySpec& spec,
                                                  const BackgroundParams& par,
                                                  std::uint64_t seed) {
  std::vector<std::string> warnings;
  CounterRng rng{seed};
  for (size_t t = 0; t < spec.terms.size(); ++t) {
    const SmoothCoefficient& f = spec.terms[t].f;
    double lo = spec.terms[t].kind == TermKind::AretakisPoly ? spec.terms[t].chi.lo
                                                             : spec.terms[t].win_lo;
    double hi = spec.terms[t].kind == TermKind::AretakisPoly ? spec.terms[t].chi.hi
                                                             : spec.terms[t].win_hi;
    lo = std::max(lo, par.M * (1 + 1e-6));
    hi = std::min(hi, 10.0 * par.Lambda);
    if (!(hi > lo)) continue;
    bool exceeded = false;
    for (int i = 0; i < 1000 && !exceeded; ++i) {
      double r = rng.uniform(lo, hi);
      double ph = rng.sym(); // audit on {|phi| <= 1}
      if (std::fabs(f.eval(r, ph, par)) > f.bound * (1 + 1e-12)) exceeded = true;
    }
    if (exceeded)
      warnings.push_back("term " + std::to_string(t) +
                         ": sampled |f| exceeds the declared bound");
  }
  return warnings;
}

NonlinearitySpec wave_map_spec(const BackgroundParams& par, double coupling) {
  // N = g^{-1}(dphi, dphi) = -D^{-1} du(phi) dv(phi) + r^{-2} |Gamma phi|^2,
  // written as admissible null forms outside [r0, r1) and as generic
  // quadratics inside; the half-open windows tile [M, infinity) exactly.
  NonlinearitySpec spec;
  spec.ncomp = 1;
  const double inf = 1e300;
  auto push_null = [&](double lo, double hi) {
    NonlinearityTerm uv;
    uv.kind = TermKind::NullUV;
    uv.f.c = -coupling;
    uv.win_lo = lo;
    uv.win_hi = hi;
    spec.terms.push_back(uv);
    for (int i = 1; i <= 3; ++i) {
      NonlinearityTerm ang;
      ang.kind = TermKind::NullAngular;
      ang.f.c = coupling;
      ang.gi = ang.gj = i;
      ang.win_lo = lo;
      ang.win_hi = hi;
      spec.terms.push_back(ang);
    }
  };
  push_null(par.M, par.r0);
  push_null(par.r1, inf);
  NonlinearityTerm uv;
  uv.kind = TermKind::MidGeneric;
  uv.x1 = Direction::U;
  uv.x2 = Direction::V;
  uv.f.base = SmoothCoefficient::Base::InvD;
  uv.f.c = -coupling;
  uv.f.bound = coupling / metric_coefficient(par.r0, par.M);
  uv.win_lo = par.r0;
  uv.win_hi = par.r1;
  spec.terms.push_back(uv);
  for (int i = 1; i <= 3; ++i) {
    NonlinearityTerm ang;
    ang.kind = TermKind::MidGeneric;
    ang.x1 = ang.x2 = static_cast<Direction>(int(Direction::G1) + i - 1);
    ang.f.base = SmoothCoefficient::Base::InvR2;
    ang.f.c = coupling;
    ang.win_lo = par.r0;
    ang.win_hi = par.r1;
    spec.terms.push_back(ang);
  }
  return spec;
}

NonlinearitySpec aretakis_spec(const BackgroundParams& par, int n, double chi_width) {
  NonlinearitySpec spec;
  spec.ncomp = 1;
  NonlinearityTerm term;
  term.kind = TermKind::AretakisPoly;
  term.n = n;
  term.chi.lo = par.M - 1.0; // plateau reaches the horizon itself
  term.chi.plateau_lo = par.M - 1.0;
  term.chi.plateau_hi = par.M + 0.5 * chi_width;
  term.chi.hi = std::min(par.M + chi_width, par.r0);
  spec.terms.push_back(term);
  return spec;
}

} // namespace ern
