#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace darkwire {

/// Boltzmann constant in eV/K. Energies and rates are in eV (hbar = 1, e = 1).
inline constexpr double k_boltzmann = 8.617333262e-5;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Basis labels

/// A state of the single-excitation basis: chain site (0-based), the global
/// ground state g, or the extraction-centre levels alpha and beta.
struct Label {
  enum class Kind { site, ground, alpha, beta };

  Kind kind = Kind::ground;
  int site = 0;

  static constexpr Label at_site(int i) { return {Kind::site, i}; }
  static constexpr Label ground() { return {Kind::ground, 0}; }
  static constexpr Label alpha() { return {Kind::alpha, 0}; }
  static constexpr Label beta() { return {Kind::beta, 0}; }

  /// Row/column in the (N+3)-dimensional basis: sites first, then g, alpha, beta.
  int index(int n_sites) const {
    switch (kind) {
      case Kind::site: return site;
      case Kind::ground: return n_sites;
      case Kind::alpha: return n_sites + 1;
      case Kind::beta: return n_sites + 2;
    }
    return -1;
  }

  bool valid_for(int n_sites) const { return kind != Kind::site || (site >= 0 && site < n_sites); }

  std::string to_string() const {
    switch (kind) {
      case Kind::site: return std::to_string(site + 1);
      case Kind::ground: return "g";
      case Kind::alpha: return "alpha";
      case Kind::beta: return "beta";
    }
    return "?";
  }

  static Label parse(const std::string& s) {
    if (s == "g") return ground();
    if (s == "alpha") return alpha();
    if (s == "beta") return beta();
    std::size_t used = 0;
    int one_based = 0;
    try {
      one_based = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw Error("bad basis label '" + s + "'");
    }
    if (used != s.size() || one_based < 1) throw Error("bad basis label '" + s + "'");
    return at_site(one_based - 1);
  }

  friend bool operator==(const Label&, const Label&) = default;
};

// ---------------------------------------------------------------------------
// Chain geometry and couplings

struct NearestNeighbor {
  double J = 0.1;
  friend bool operator==(const NearestNeighbor&, const NearestNeighbor&) = default;
};

/// Couplings J / (2 |r_i - r_j|^3) between every pair of sites.
struct DistanceDependent {
  double J = 0.1;
  std::vector<std::array<double, 3>> positions;
  friend bool operator==(const DistanceDependent&, const DistanceDependent&) = default;
};

using CouplingLaw = std::variant<NearestNeighbor, DistanceDependent>;

inline double coupling_constant(const CouplingLaw& law) {
  return std::visit([](const auto& c) { return c.J; }, law);
}

inline void set_coupling_constant(CouplingLaw& law, double J) {
  std::visit([J](auto& c) { c.J = J; }, law);
}

struct ChainSpec {
  std::vector<double> onsite_energies;
  double eps_g = 0.0;
  double eps_alpha = 0.5;
  double eps_beta = 0.2;
  CouplingLaw coupling = NearestNeighbor{};

  int n_sites() const { return static_cast<int>(onsite_energies.size()); }
  int dim() const { return n_sites() + 3; }

  friend bool operator==(const ChainSpec&, const ChainSpec&) = default;
};

// ---------------------------------------------------------------------------
// Environment descriptors

/// Ohmic spectrum with a Lorentzian peak: the local vibrational bath.
struct DrudeLorentz {
  double gamma_phonon = 1.4e-3;
  double width = 2e-2;  // Gamma
  double omega0 = 0.0;
  double temperature = 300.0;
  friend bool operator==(const DrudeLorentz&, const DrudeLorentz&) = default;
};

/// Frequency-independent coupling, used for the optical field and the
/// phenomenological injection/extraction processes.
struct Flat {
  double gamma = 1e-3;
  double temperature = 300.0;
  friend bool operator==(const Flat&, const Flat&) = default;
};

using SpectralDensity = std::variant<DrudeLorentz, Flat>;

struct LocalDephase {
  int site = 0;
  friend bool operator==(const LocalDephase&, const LocalDephase&) = default;
};
struct CollectiveOptical {
  friend bool operator==(const CollectiveOptical&, const CollectiveOptical&) = default;
};
struct TwoLevel {
  Label a;
  Label b;
  friend bool operator==(const TwoLevel&, const TwoLevel&) = default;
};
struct LocalDecay {
  int site = 0;
  friend bool operator==(const LocalDecay&, const LocalDecay&) = default;
};

using OperatorPattern = std::variant<LocalDephase, CollectiveOptical, TwoLevel, LocalDecay>;

struct EnvProcess {
  std::string name;
  OperatorPattern op;
  SpectralDensity spectrum;
  friend bool operator==(const EnvProcess&, const EnvProcess&) = default;
};

struct ModelParams {
  ChainSpec chain;
  std::vector<EnvProcess> processes;
  /// When set, the alpha<->beta rate is re-optimized for every power
  /// evaluation and the stored rate is only a placeholder.
  bool optimize_gamma_ab = true;
  bool optical_disabled = false;

  int n_sites() const { return chain.n_sites(); }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// ---------------------------------------------------------------------------
// Table-level description

/// Scalar parameter set from which a full ModelParams is expanded. This is
/// what configuration files describe; every field has a default.
struct PhysicalParams {
  int n_sites = 20;
  double delta_e = 0.05;
  double J = 0.1;
  double eps_g = 0.0;
  double eps_e = 1.65;
  // The EC excited level alpha sits above the EC ground level beta, so the
  // cascade N -> alpha -> beta -> g runs downhill.
  double eps_alpha = 0.5;
  double eps_beta = 0.2;
  double gamma_em = 1e-3;
  double gamma_inj = 2.3e-3;
  double gamma_phonon = 1.4e-3;
  double Gamma = 2e-2;
  std::optional<double> omega0;  // unset: sqrt(delta_e^2 - Gamma^2)
  double gamma_n_alpha = 1.05e-3;
  std::optional<double> gamma_alpha_beta;  // unset: optimized per evaluation
  double gamma_beta_g = 1.3e-3;
  double gamma_nr = 0.0;
  double t_hot = 6000.0;
  double t_cold = 300.0;
  double t_ph = 300.0;
  /// Per-site optical rate becomes (20/N) gamma_em, keeping sum_j gamma_em,j fixed.
  bool scale_gamma_em = false;
  bool include_optical = true;
  std::optional<std::vector<double>> onsite_energies;
  std::optional<std::vector<std::array<double, 3>>> positions;

  friend bool operator==(const PhysicalParams&, const PhysicalParams&) = default;
};

inline double tied_omega0(double delta_e, double Gamma) {
  return std::sqrt(delta_e * delta_e - Gamma * Gamma);
}

/// eps_j = eps_e - j * delta_e for j = 1..N.
inline std::vector<double> linear_gradient(int n_sites, double eps_e, double delta_e) {
  std::vector<double> e(static_cast<std::size_t>(std::max(n_sites, 0)));
  for (int j = 0; j < n_sites; ++j) e[j] = eps_e - (j + 1) * delta_e;
  return e;
}

inline double effective_omega0(const PhysicalParams& p) {
  return p.omega0 ? *p.omega0 : tied_omega0(p.delta_e, p.Gamma);
}

inline std::vector<double> onsite_of(const PhysicalParams& p) {
  return p.onsite_energies ? *p.onsite_energies : linear_gradient(p.n_sites, p.eps_e, p.delta_e);
}

/// Same parameters on a chain of `n_sites`, keeping the last site energy
/// eps_e - N dE fixed.
inline PhysicalParams resized(PhysicalParams p, int n_sites) {
  if (n_sites == p.n_sites) return p;
  if (p.onsite_energies || p.positions) throw Error("cannot resize a chain with explicit energies or positions");
  const double eps_last = p.eps_e - p.n_sites * p.delta_e;
  p.n_sites = n_sites;
  p.eps_e = eps_last + n_sites * p.delta_e;
  return p;
}

namespace process_names {
inline const std::string optical = "optical";
inline const std::string injection = "injection";
inline const std::string n_alpha = "extract_N_alpha";
inline const std::string alpha_beta = "alpha_beta";
inline const std::string beta_g = "beta_g";
inline std::string phonon(int site) { return "phonon_" + std::to_string(site + 1); }
inline std::string nonrad(int site) { return "nonrad_" + std::to_string(site + 1); }
}  // namespace process_names

/// Expands the scalar description into chain + environment processes.
inline ModelParams build_model(const PhysicalParams& p) {
  ModelParams m;
  m.chain.onsite_energies = onsite_of(p);
  const int n = static_cast<int>(m.chain.onsite_energies.size());
  m.chain.eps_g = p.eps_g;
  m.chain.eps_alpha = p.eps_alpha;
  m.chain.eps_beta = p.eps_beta;
  if (p.positions) {
    m.chain.coupling = DistanceDependent{p.J, *p.positions};
  } else {
    m.chain.coupling = NearestNeighbor{p.J};
  }

  const double omega0 = effective_omega0(p);
  for (int i = 0; i < n; ++i) {
    m.processes.push_back(
        {process_names::phonon(i), LocalDephase{i}, DrudeLorentz{p.gamma_phonon, p.Gamma, omega0, p.t_ph}});
  }
  if (p.include_optical) {
    const double g_em = p.scale_gamma_em && n > 0 ? p.gamma_em * 20.0 / n : p.gamma_em;
    m.processes.push_back({process_names::optical, CollectiveOptical{}, Flat{g_em, p.t_cold}});
  } else {
    m.optical_disabled = true;
  }
  m.processes.push_back(
      {process_names::injection, TwoLevel{Label::ground(), Label::at_site(0)}, Flat{p.gamma_inj, p.t_hot}});
  m.processes.push_back(
      {process_names::n_alpha, TwoLevel{Label::at_site(n - 1), Label::alpha()}, Flat{p.gamma_n_alpha, p.t_cold}});
  m.processes.push_back({process_names::alpha_beta, TwoLevel{Label::alpha(), Label::beta()},
                         Flat{p.gamma_alpha_beta.value_or(0.0), p.t_cold}});
  m.processes.push_back(
      {process_names::beta_g, TwoLevel{Label::beta(), Label::ground()}, Flat{p.gamma_beta_g, p.t_cold}});
  if (p.gamma_nr > 0.0) {
    for (int i = 0; i < n; ++i) {
      m.processes.push_back({process_names::nonrad(i), LocalDecay{i}, Flat{p.gamma_nr, p.t_cold}});
    }
  }
  m.optimize_gamma_ab = !p.gamma_alpha_beta.has_value();
  return m;
}

inline ModelParams default_params() { return build_model(PhysicalParams{}); }

// ---------------------------------------------------------------------------
// Lookup helpers

inline const EnvProcess* find_process(const ModelParams& m, const std::string& name) {
  for (const auto& p : m.processes)
    if (p.name == name) return &p;
  return nullptr;
}

inline EnvProcess* find_process(ModelParams& m, const std::string& name) {
  for (auto& p : m.processes)
    if (p.name == name) return &p;
  return nullptr;
}

inline bool is_pair(const OperatorPattern& op, Label a, Label b) {
  const auto* t = std::get_if<TwoLevel>(&op);
  return t && ((t->a == a && t->b == b) || (t->a == b && t->b == a));
}

/// Index of the alpha<->beta process, or -1.
inline int alpha_beta_index(const ModelParams& m) {
  for (std::size_t k = 0; k < m.processes.size(); ++k)
    if (is_pair(m.processes[k].op, Label::alpha(), Label::beta())) return static_cast<int>(k);
  return -1;
}

inline Flat& flat_of(EnvProcess& p) {
  auto* f = std::get_if<Flat>(&p.spectrum);
  if (!f) throw Error("process '" + p.name + "' does not have a flat spectrum");
  return *f;
}

inline const Flat& flat_of(const EnvProcess& p) {
  const auto* f = std::get_if<Flat>(&p.spectrum);
  if (!f) throw Error("process '" + p.name + "' does not have a flat spectrum");
  return *f;
}

/// Copy of `m` with the alpha<->beta rate pinned to `gamma_ab`.
inline ModelParams with_gamma_ab(ModelParams m, double gamma_ab) {
  const int k = alpha_beta_index(m);
  if (k < 0) throw Error("model has no alpha<->beta process");
  flat_of(m.processes[k]).gamma = gamma_ab;
  m.optimize_gamma_ab = false;
  return m;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool finite(double x) { return std::isfinite(x); }

inline void check_spectrum(const EnvProcess& p, std::vector<std::string>& errs) {
  if (const auto* dl = std::get_if<DrudeLorentz>(&p.spectrum)) {
    if (std::isnan(dl->omega0)) {
      errs.push_back(p.name + ": omega0 imaginary (delta_e must exceed Gamma under the default tie)");
    } else if (!finite(dl->omega0) || dl->omega0 < 0) {
      errs.push_back(p.name + ": omega0 must be finite and >= 0");
    }
    if (!finite(dl->gamma_phonon) || dl->gamma_phonon < 0) errs.push_back(p.name + ": gamma_phonon must be >= 0");
    if (!finite(dl->width) || dl->width < 0) errs.push_back(p.name + ": Gamma must be >= 0");
    if (!finite(dl->temperature) || dl->temperature < 0) errs.push_back(p.name + ": temperature must be >= 0");
  } else {
    const auto& f = std::get<Flat>(p.spectrum);
    if (!finite(f.gamma) || f.gamma < 0) errs.push_back(p.name + ": rate must be >= 0");
    if (!finite(f.temperature) || f.temperature < 0) errs.push_back(p.name + ": temperature must be >= 0");
  }
}

}  // namespace detail

/// All invariant violations; an empty list means the model is usable.
inline std::vector<std::string> validate(const ModelParams& m) {
  std::vector<std::string> errs;
  const int n = m.n_sites();
  if (n < 2) errs.push_back("N >= 2 required (got " + std::to_string(n) + ")");
  for (int j = 0; j < n; ++j)
    if (!std::isfinite(m.chain.onsite_energies[j]))
      errs.push_back("onsite energy of site " + std::to_string(j + 1) + " is not finite");
  for (double e : {m.chain.eps_g, m.chain.eps_alpha, m.chain.eps_beta})
    if (!std::isfinite(e)) errs.push_back("ground/EC energies must be finite");

  if (const auto* dd = std::get_if<DistanceDependent>(&m.chain.coupling)) {
    if (static_cast<int>(dd->positions.size()) != n) {
      errs.push_back("distance-dependent coupling needs one position per site");
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (dd->positions[i] == dd->positions[j])
            errs.push_back("sites " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                           " share a position");
    }
  }
  if (!std::isfinite(coupling_constant(m.chain.coupling))) errs.push_back("J must be finite");

  int optical = 0, injection = 0;
  bool n_alpha = false, alpha_beta = false, beta_g = false;
  for (const auto& p : m.processes) {
    detail::check_spectrum(p, errs);
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, LocalDephase> || std::is_same_v<T, LocalDecay>) {
            if (op.site < 0 || op.site >= n) errs.push_back(p.name + ": site index out of range");
          } else if constexpr (std::is_same_v<T, CollectiveOptical>) {
            ++optical;
          } else {
            if (!op.a.valid_for(n) || !op.b.valid_for(n)) errs.push_back(p.name + ": label out of range");
            if (op.a == op.b) errs.push_back(p.name + ": two-level operator needs a != b");
          }
        },
        p.op);
    if (is_pair(p.op, Label::ground(), Label::at_site(0))) ++injection;
    if (n >= 1 && is_pair(p.op, Label::at_site(n - 1), Label::alpha())) n_alpha = true;
    if (is_pair(p.op, Label::alpha(), Label::beta())) alpha_beta = true;
    if (is_pair(p.op, Label::beta(), Label::ground())) beta_g = true;
  }
  if (!m.optical_disabled && optical != 1)
    errs.push_back("exactly one collective optical process required (found " + std::to_string(optical) + ")");
  if (injection != 1)
    errs.push_back("exactly one injection process g<->1 required (found " + std::to_string(injection) + ")");
  if (!n_alpha || !alpha_beta || !beta_g) errs.push_back("extraction centre needs N<->alpha, alpha<->beta, beta<->g");
  return errs;
}

/// Non-fatal diagnostics (currently: uphill extraction).
inline std::vector<std::string> warnings(const ModelParams& m) {
  std::vector<std::string> w;
  if (m.n_sites() >= 1 && m.chain.eps_alpha >= m.chain.onsite_energies.back())
    w.push_back("eps_alpha is not below the last site energy; extraction is uphill");
  return w;
}

inline std::vector<std::string> validate(const PhysicalParams& p) {
  std::vector<std::string> errs;
  if (p.n_sites < 2) errs.push_back("N >= 2 required (got " + std::to_string(p.n_sites) + ")");
  if (p.onsite_energies && static_cast<int>(p.onsite_energies->size()) != p.n_sites)
    errs.push_back("onsite_energies must have N entries");
  if (p.positions && static_cast<int>(p.positions->size()) != p.n_sites)
    errs.push_back("positions must have N entries");
  if (!p.omega0 && p.delta_e <= p.Gamma)
    errs.push_back("omega0 imaginary: delta_e must exceed Gamma when omega0 = sqrt(delta_e^2 - Gamma^2)");
  if (p.gamma_alpha_beta && *p.gamma_alpha_beta < 0) errs.push_back("gamma_alpha_beta must be >= 0");
  if (!errs.empty()) return errs;
  for (auto& e : validate(build_model(p)))
    if (e.find("omega0 imaginary") == std::string::npos) errs.push_back(e);
  return errs;
}

}  // namespace darkwire
