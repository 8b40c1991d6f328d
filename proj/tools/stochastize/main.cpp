// stochastize: derive, export, simulate and check Langevin models of
// one-step processes given as interaction schemes.
//
// Exit codes: 0 success, 1 failed check or failed run, 2 unreadable input
// (parse or validation error, bad flags), 3 binding error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <stochastize/stochastize.hpp>

namespace sz = stochastize;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kParseError = 2;
constexpr int kBindingError = 3;

#ifndef STOCHASTIZE_VERSION
#define STOCHASTIZE_VERSION "0.0.0"
#endif

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BindError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("error writing '" + path.string() + "'");
}

struct ModelFlags {
  std::string rate_mode = "fp";
  std::string sign = "paper";
  std::string noise = "sqrt";
  bool allow_shared_rates = false;

  sz::ModelOptions options() const {
    sz::ModelOptions o;
    o.rate_mode = rate_mode == "exact" ? sz::RateMode::Exact : sz::RateMode::FokkerPlanck;
    o.diffusion_sign = sign == "km" ? sz::DiffusionSign::KramersMoyalPlus : sz::DiffusionSign::PaperMinus;
    o.noise_strategy = noise == "per-reaction" ? sz::NoiseStrategy::PerReaction : sz::NoiseStrategy::MatrixSqrt;
    return o;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--rate-mode", rate_mode, "Transition rates: exact (falling factorials) or fp (powers)")
        ->check(CLI::IsMember({"exact", "fp"}))
        ->capture_default_str();
    cmd->add_option("--diffusion-sign", sign, "Backward-rate sign in B: paper (minus) or km (Kramers-Moyal, plus)")
        ->check(CLI::IsMember({"paper", "km"}))
        ->capture_default_str();
    cmd->add_option("--noise", noise, "Noise factorization: sqrt (matrix root) or per-reaction")
        ->check(CLI::IsMember({"sqrt", "per-reaction"}))
        ->capture_default_str();
    cmd->add_flag("--allow-shared-rates", allow_shared_rates, "Allow a rate symbol on several interactions");
  }
};

sz::InteractionScheme scheme_from_text(const std::string& label, const std::string& text, bool allow_shared) {
  try {
    return sz::parse_scheme(text, {allow_shared});
  } catch (const sz::Error& e) {
    throw InputError(label + ": " + e.what());
  }
}

sz::SdeModel build_model(const sz::InteractionScheme& scheme, const ModelFlags& flags) {
  try {
    return sz::build_sde_model(scheme, flags.options());
  } catch (const sz::IncompatibleNoise& e) {
    throw InputError(e.what());
  }
}

sz::SdeModel model_from_json_text(const std::string& label, const std::string& text) {
  try {
    return sz::parse_model_json(text);
  } catch (const sz::Error& e) {
    throw InputError(label + ": " + e.what());
  }
}

bool is_model_json(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

// Rates file plus --init overrides, matched against the scheme.
sz::ResolvedBindings resolve(const sz::InteractionScheme& scheme, const std::string& label,
                             const std::string& text, const std::vector<std::string>& overrides) {
  std::vector<sz::Binding> bindings;
  try {
    bindings = sz::parse_bindings(text);
  } catch (const sz::SyntaxError& e) {
    throw InputError(label + ": " + e.what());
  }
  const auto scope = scheme.scope();
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    auto value = eq == std::string::npos ? std::nullopt : sz::parse_rational(o.substr(eq + 1));
    if (!value) throw InputError("--init expects species=value, got '" + o + "'");
    std::string name = o.substr(0, eq);
    name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
    auto kind = scope.kinds.find(name);
    if (kind == scope.kinds.end() || kind->second != sz::SymbolKind::Species)
      throw BindError("--init: '" + name + "' is not a species of the scheme");
    std::erase_if(bindings, [&](const sz::Binding& b) { return b.name == name; });
    bindings.push_back({name, *value, 0});
  }
  try {
    return sz::resolve_bindings(scheme, bindings);
  } catch (const sz::UnboundRate& e) {
    throw BindError(label + ": " + e.what());
  } catch (const sz::BindingError& e) {
    throw BindError(label + ": " + e.what());
  }
}

std::vector<long> integer_state(const sz::InteractionScheme& scheme, const sz::ResolvedBindings& b,
                                const char* purpose) {
  std::vector<long> out;
  for (std::size_t i = 0; i < b.initial_state.size(); ++i) {
    if (!sz::is_integer(b.initial_state[i]))
      throw BindError("initial value of '" + scheme.species()[i].name + "' must be a whole number for " +
                      purpose);
    out.push_back(boost::multiprecision::numerator(b.initial_state[i]).convert_to<long>());
  }
  return out;
}

// ---------------------------------------------------------------- derive

std::string stoichiometry_text(const sz::InteractionScheme& scheme, bool initial) {
  std::string out = "(";
  for (std::size_t a = 0; a < scheme.size(); ++a) {
    if (a) out += "; ";
    const auto& v = initial ? scheme.interactions()[a].initial : scheme.interactions()[a].final;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  }
  return out + ")";
}

std::string change_text(const sz::InteractionScheme& scheme) {
  std::string out = "(";
  const auto r = sz::change_vectors(scheme);
  for (std::size_t a = 0; a < r.size(); ++a) {
    if (a) out += "; ";
    for (std::size_t i = 0; i < r[a].size(); ++i) out += (i ? " " : "") + std::to_string(r[a][i]);
  }
  return out + ")";
}

std::string derive_report(const std::string& source, const sz::SdeModel& model) {
  const auto& scheme = model.scheme;
  const auto order = scheme.symbol_order();
  std::string args;
  for (std::size_t i = 0; i < scheme.dimension(); ++i) args += (i ? ", " : "") + scheme.species()[i].name;
  std::string rates;
  for (const auto& r : scheme.rate_symbols()) rates += (rates.empty() ? "" : ", ") + r.name;

  std::ostringstream out;
  out << "source: " << source << "\n";
  out << "species: " << args << "\n";
  out << "rates: " << rates << "\n";
  out << "rate mode: " << sz::to_string(model.rate_mode) << "\n";
  out << "diffusion sign: " << sz::to_string(model.diffusion_sign) << "\n";
  out << "noise: " << sz::to_string(model.noise_strategy) << "\n\n";
  out << sz::format_scheme(scheme) << "\n";
  out << "I = " << stoichiometry_text(scheme, true) << "\n";
  out << "F = " << stoichiometry_text(scheme, false) << "\n";
  out << "r = " << change_text(scheme) << "\n\n";

  const auto tr = sz::transition_rates(scheme, model.rate_mode);
  for (std::size_t a = 0; a < scheme.size(); ++a) {
    out << "s+_" << a + 1 << " = " << sz::canonical_string(tr.forward[a], order) << "\n";
    out << "s-_" << a + 1 << " = " << sz::canonical_string(tr.backward[a], order) << "\n";
  }
  out << "\n";
  const std::size_t n = model.dimension();
  if (n == 1) {
    out << "A(" << args << ") = " << sz::canonical_string(model.drift[0], order) << "\n";
    out << "B(" << args << ") = " << sz::canonical_string(model.diffusion[0][0], order) << "\n";
  } else {
    out << "A(" << args << ") =\n";
    for (const auto& p : model.drift) out << "  " << sz::canonical_string(p, order) << "\n";
    out << "B(" << args << ") =\n";
    for (const auto& row : model.diffusion) {
      out << "  [";
      for (std::size_t j = 0; j < n; ++j) out << (j ? ", " : "") << sz::canonical_string(row[j], order);
      out << "]\n";
    }
  }
  out << "\n" << sz::format_sde(model);
  return out.str();
}

struct DeriveArgs {
  std::string scheme_path;
  std::string out_dir = ".";
  std::string name;
  std::string latex_names;
  std::string target;  // codegen only
  ModelFlags flags;
};

sz::LatexNames load_latex_names(const std::string& path) {
  sz::LatexNames names;
  if (path.empty()) return names;
  try {
    names.load_overrides(read_file(path));
  } catch (const sz::SyntaxError& e) {
    throw InputError(path + ": " + e.what());
  }
  return names;
}

std::string output_name(const DeriveArgs& a) {
  if (!a.name.empty()) return a.name;
  std::string stem = fs::path(a.scheme_path).stem().string();
  if (is_model_json(a.scheme_path) && stem.size() > 6 && stem.ends_with(".model")) stem.resize(stem.size() - 6);
  std::string ident;
  for (char c : stem) ident += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  if (ident.empty() || std::isdigit(static_cast<unsigned char>(ident[0]))) ident = "model_" + ident;
  return ident;
}

sz::SdeModel load_model(const std::string& path, const ModelFlags& flags) {
  const std::string text = read_file(path);
  if (is_model_json(path)) return model_from_json_text(path, text);
  return build_model(scheme_from_text(path, text, flags.allow_shared_rates), flags);
}

int cmd_derive(const DeriveArgs& a) {
  const auto model = load_model(a.scheme_path, a.flags);
  const auto names = load_latex_names(a.latex_names);
  const std::string name = output_name(a);
  const fs::path dir(a.out_dir);
  const std::string report = derive_report(a.scheme_path, model);
  write_file(dir / (name + ".tex"), sz::emit_latex(model, names));
  write_file(dir / (name + "_model.c"), sz::emit_c_source(model, name));
  write_file(dir / (name + ".model.json"), sz::emit_model_json(model));
  write_file(dir / (name + ".report.txt"), report);
  std::cout << report;
  return kOk;
}

int cmd_codegen(const DeriveArgs& a) {
  const auto model = load_model(a.scheme_path, a.flags);
  std::string text;
  if (a.target == "latex")
    text = sz::emit_latex(model, load_latex_names(a.latex_names));
  else if (a.target == "c")
    text = sz::emit_c_source(model, output_name(a));
  else
    text = sz::emit_model_json(model);
  if (a.out_dir.empty())
    std::cout << text;
  else
    write_file(a.out_dir, text);
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string input_path;
  std::string rates_path;
  std::string manifest_path;
  std::string out_dir;
  std::vector<std::string> init;
  ModelFlags flags;
  std::string engine = "em";
  std::string negative = "clamp";
  double t_final = 10.0;
  double dt = 1e-3;
  std::size_t trajectories = 100;
  std::size_t grid_points = 200;
  std::optional<std::uint64_t> seed;
  bool svg = false;
};

// Everything needed to reproduce a run, including the input texts.
struct RunManifest {
  std::string input_path, input_format, input_text;
  std::string rates_path, rates_text;
  std::vector<std::string> init;
  ModelFlags flags;
  std::string engine, negative;
  double t_final = 0, dt = 0;
  std::size_t trajectories = 0, grid_points = 0;
  std::uint64_t seed = 0;
  bool svg = false;
  std::string out_dir;

  ordered_json to_json() const {
    ordered_json j;
    j["tool"] = "stochastize";
    j["version"] = STOCHASTIZE_VERSION;
    j["command"] = "simulate";
    j["input"] = {{"path", input_path}, {"format", input_format}, {"text", input_text}};
    j["rates"] = {{"path", rates_path}, {"text", rates_text}};
    j["init"] = init;
    j["model"] = {{"rate_mode", flags.rate_mode},
                  {"diffusion_sign", flags.sign},
                  {"noise", flags.noise},
                  {"allow_shared_rates", flags.allow_shared_rates}};
    j["simulation"] = {{"engine", engine},         {"t_final", t_final},
                       {"dt", dt},                 {"trajectories", trajectories},
                       {"grid_points", grid_points}, {"negative_policy", negative},
                       {"seed", seed},             {"svg", svg}};
    j["output_directory"] = out_dir;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.input_path = j.at("input").at("path").get<std::string>();
    m.input_format = j.at("input").at("format").get<std::string>();
    m.input_text = j.at("input").at("text").get<std::string>();
    m.rates_path = j.at("rates").at("path").get<std::string>();
    m.rates_text = j.at("rates").at("text").get<std::string>();
    m.init = j.at("init").get<std::vector<std::string>>();
    const auto& model = j.at("model");
    m.flags.rate_mode = model.at("rate_mode").get<std::string>();
    m.flags.sign = model.at("diffusion_sign").get<std::string>();
    m.flags.noise = model.at("noise").get<std::string>();
    m.flags.allow_shared_rates = model.at("allow_shared_rates").get<bool>();
    const auto& sim = j.at("simulation");
    m.engine = sim.at("engine").get<std::string>();
    m.t_final = sim.at("t_final").get<double>();
    m.dt = sim.at("dt").get<double>();
    m.trajectories = sim.at("trajectories").get<std::size_t>();
    m.grid_points = sim.at("grid_points").get<std::size_t>();
    m.negative = sim.at("negative_policy").get<std::string>();
    m.seed = sim.at("seed").get<std::uint64_t>();
    m.svg = sim.at("svg").get<bool>();
    m.out_dir = j.at("output_directory").get<std::string>();
    if (m.input_format != "scheme" && m.input_format != "model_json")
      throw InputError("manifest: unknown input format '" + m.input_format + "'");
    if (m.engine != "em" && m.engine != "ssa") throw InputError("manifest: unknown engine '" + m.engine + "'");
    if (m.negative != "clamp" && m.negative != "reject")
      throw InputError("manifest: unknown negative_policy '" + m.negative + "'");
    return m;
  }
};

RunManifest manifest_from_args(const SimulateArgs& a) {
  if (a.manifest_path.empty() && (a.input_path.empty() || a.rates_path.empty()))
    throw InputError("simulate needs INPUT and RATES, or --manifest");
  if (!a.manifest_path.empty()) {
    RunManifest m;
    try {
      m = RunManifest::from_json(nlohmann::json::parse(read_file(a.manifest_path)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(a.manifest_path + ": " + e.what());
    }
    if (!a.out_dir.empty()) m.out_dir = a.out_dir;
    return m;
  }
  RunManifest m;
  m.input_path = a.input_path;
  m.input_format = is_model_json(a.input_path) ? "model_json" : "scheme";
  m.input_text = read_file(a.input_path);
  m.rates_path = a.rates_path;
  m.rates_text = read_file(a.rates_path);
  m.init = a.init;
  m.flags = a.flags;
  m.engine = a.engine;
  m.negative = a.negative;
  m.t_final = a.t_final;
  m.dt = a.dt;
  m.trajectories = a.trajectories;
  m.grid_points = a.grid_points;
  m.seed = a.seed ? *a.seed : (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();
  m.svg = a.svg;
  m.out_dir = a.out_dir.empty() ? "." : a.out_dir;
  return m;
}

int cmd_simulate(const SimulateArgs& a) {
  const RunManifest m = manifest_from_args(a);
  const sz::SdeModel model = m.input_format == "model_json"
                                 ? model_from_json_text(m.input_path, m.input_text)
                                 : build_model(scheme_from_text(m.input_path, m.input_text,
                                                                m.flags.allow_shared_rates),
                                               m.flags);
  const auto& scheme = model.scheme;
  const auto bindings = resolve(scheme, m.rates_path, m.rates_text, m.init);
  if (m.engine == "ssa") integer_state(scheme, bindings, "the ssa engine");
  if (m.trajectories < 2) throw InputError("--trajectories must be at least 2");

  sz::SimConfig config;
  config.rates = bindings.rate_values();
  config.initial_state = bindings.initial_values();
  config.t_final = m.t_final;
  config.dt = m.dt;
  config.trajectories = m.trajectories;
  config.grid_points = m.grid_points;
  config.base_seed = m.seed;
  config.negative_policy = m.negative == "reject" ? sz::NegativePolicy::RejectStep : sz::NegativePolicy::ClampZero;

  const auto ensemble = m.engine == "ssa" ? sz::gillespie_ssa(scheme, config) : sz::euler_maruyama(model, config);
  const auto moments = sz::ensemble_moments(ensemble);

  const fs::path dir(m.out_dir);
  std::ostringstream traj, mom;
  sz::write_trajectories_csv(traj, scheme, ensemble);
  sz::write_moments_csv(mom, scheme, moments);
  write_file(dir / "trajectories.csv", traj.str());
  write_file(dir / "moments.csv", mom.str());
  if (m.svg) {
    std::ostringstream svg;
    sz::write_moments_svg(svg, scheme, moments);
    write_file(dir / "moments.svg", svg.str());
  }
  write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");

  std::uint64_t clamps = 0;
  for (auto c : ensemble.clamp_events) clamps += c;
  std::cout << "engine: " << m.engine << "\n"
            << "seed: " << m.seed << "\n"
            << "trajectories: " << m.trajectories << "\n"
            << "grid points: " << m.grid_points << "\n";
  if (m.engine == "em") std::cout << "negative-state events: " << clamps << "\n";
  std::cout << "output: " << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string scheme_path;
  std::string rates_path;
  std::vector<std::string> init;
  ModelFlags flags;
  bool paper_fidelity = false;
  unsigned box = 6;
  std::size_t trajectories = 1000;
  double t_final = 2.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  double threshold = 4.0;
};

class CheckPrinter {
public:
  void pass(const std::string& what) { line("PASS", what); }
  void fail(const std::string& what) {
    line("FAIL", what);
    failed_ = true;
  }
  void advisory(const std::string& what) { line("ADVISORY", what); }
  bool failed() const { return failed_; }

private:
  static void line(const char* tag, const std::string& what) {
    std::string padded(tag);
    padded.resize(10, ' ');
    std::cout << padded << what << "\n";
  }
  bool failed_ = false;
};

std::string matrix_entry_name(const sz::InteractionScheme& s, std::size_t i, std::size_t j) {
  return s.dimension() == 1 ? "B" : "B[" + s.species()[i].name + "][" + s.species()[j].name + "]";
}

int cmd_check(const CheckArgs& a) {
  const auto scheme = scheme_from_text(a.scheme_path, read_file(a.scheme_path), a.flags.allow_shared_rates);
  const auto selected = build_model(scheme, a.flags);
  const auto bindings = resolve(scheme, a.rates_path, read_file(a.rates_path), a.init);
  const auto order = scheme.symbol_order();
  const std::size_t n = scheme.dimension();
  CheckPrinter out;

  // Jump moments against the exact-rate coefficients with the chosen sign.
  ModelFlags exact_flags = a.flags;
  exact_flags.rate_mode = "exact";
  const auto exact = build_model(scheme, exact_flags);
  const sz::StateBox box(std::vector<unsigned>(n, a.box));
  std::size_t first_bad = 0, second_bad = 0;
  std::string first_example, second_example;
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    const auto state = box.state(idx);
    const auto m = sz::jump_moments<sz::Rational, long>(scheme, bindings.rates, std::span<const long>(state));
    auto point = bindings.rates;
    for (std::size_t i = 0; i < n; ++i) point[scheme.species()[i]] = sz::Rational(state[i]);
    std::string where = "(";
    for (std::size_t i = 0; i < n; ++i) where += (i ? ", " : "") + std::to_string(state[i]);
    where += ")";
    for (std::size_t i = 0; i < n; ++i) {
      if (sz::evaluate_exact(exact.drift[i], point) != m.first[i] && first_bad++ == 0)
        first_example = "A[" + scheme.species()[i].name + "] at state " + where;
      for (std::size_t j = 0; j < n; ++j)
        if (sz::evaluate_exact(exact.diffusion[i][j], point) != m.second[i][j] && second_bad++ == 0)
          second_example = matrix_entry_name(scheme, i, j) + " at state " + where;
    }
  }
  const std::string states = std::to_string(box.size()) + " states of the box [0, " + std::to_string(a.box) + "]";
  if (first_bad == 0)
    out.pass("first jump moment: exact drift equals the enumerated moment at " + states);
  else
    out.fail("first jump moment: " + std::to_string(first_bad) + " mismatches, first at " + first_example);

  if (second_bad == 0) {
    out.pass("second jump moment: exact diffusion equals the enumerated moment at " + states);
  } else {
    const auto km = sz::diffusion_matrix(scheme, sz::RateMode::Exact, sz::DiffusionSign::KramersMoyalPlus);
    std::string diff;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto d = km[i][j] - exact.diffusion[i][j];
        if (!d.is_zero())
          diff += (diff.empty() ? "" : "; ") + matrix_entry_name(scheme, i, j) + ": " + sz::canonical_string(d, order);
      }
    const std::string msg = "second jump moment: paper_minus diffusion differs from the enumerated moment (" +
                            std::to_string(second_bad) + " mismatches, first at " + second_example +
                            "); moment minus diffusion = " + diff;
    if (a.paper_fidelity && exact.diffusion_sign == sz::DiffusionSign::PaperMinus)
      out.advisory(msg);
    else
      out.fail(msg);
  }
  if (selected.rate_mode == sz::RateMode::FokkerPlanck && selected.drift != exact.drift) {
    std::string diff;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = exact.drift[i] - selected.drift[i];
      if (!d.is_zero()) diff += (diff.empty() ? "" : "; ") + ("A[" + scheme.species()[i].name + "]: ") +
                                sz::canonical_string(d, order);
    }
    out.advisory("fokker_planck rates use powers in place of falling factorials; exact minus fp drift = " + diff);
  }

  if (sz::is_symmetric(selected.diffusion))
    out.pass("diffusion symmetry: B equals its transpose");
  else
    out.fail("diffusion symmetry: B differs from its transpose");

  // PSD sampling of the selected model's B on the same box.
  const auto rate_values = bindings.rate_values();
  std::size_t not_psd = 0;
  std::string psd_example;
  double worst = 0.0;
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    const auto state = box.state(idx);
    auto point = rate_values;
    for (std::size_t i = 0; i < n; ++i) point[scheme.species()[i]] = static_cast<double>(state[i]);
    Eigen::MatrixXd b(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sz::evaluate(selected.diffusion[i][j], point);
    const double norm = b.cwiseAbs().maxCoeff();
    const double lowest = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b).eigenvalues().minCoeff();
    if (lowest < -1e-9 * norm) {
      if (not_psd++ == 0) {
        psd_example = "(";
        for (std::size_t i = 0; i < n; ++i) psd_example += (i ? ", " : "") + std::to_string(state[i]);
        psd_example += ")";
      }
      worst = std::min(worst, lowest);
    }
  }
  if (not_psd == 0) {
    out.pass("PSD sampling: B is positive semidefinite at " + states);
  } else {
    const std::string msg = "PSD sampling: B has a negative eigenvalue at " + std::to_string(not_psd) +
                            " states, first at " + psd_example + ", lowest " + sz::format_number(worst);
    if (a.paper_fidelity && selected.diffusion_sign == sz::DiffusionSign::PaperMinus)
      out.advisory(msg);
    else
      out.fail(msg);
  }

  // Langevin (exact rates, summed diffusion) against the jump process.
  ModelFlags km_flags = a.flags;
  km_flags.rate_mode = "exact";
  km_flags.sign = "km";
  const auto km_model = build_model(scheme, km_flags);
  integer_state(scheme, bindings, "the engine comparison");
  sz::SimConfig config;
  config.rates = rate_values;
  config.initial_state = bindings.initial_values();
  config.t_final = a.t_final;
  config.dt = a.dt;
  config.trajectories = a.trajectories;
  config.grid_points = 50;
  config.base_seed = a.seed;
  const auto report = sz::compare_engines(scheme, km_model, config, sz::Reference::Ssa, a.threshold);
  const std::string msg = "engine comparison: max |z| = " + sz::format_number(std::round(report.max_abs_z * 1000) / 1000) +
                          " over " + std::to_string(config.grid_points) + " grid points (threshold " +
                          sz::format_number(a.threshold) + ", " + std::to_string(a.trajectories) +
                          " Euler-Maruyama vs " + std::to_string(a.trajectories) + " SSA paths, t_final " +
                          sz::format_number(a.t_final) + ")";
  if (report.passed)
    out.pass(msg);
  else
    out.fail(msg);

  return out.failed() ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derive, export, simulate and check Langevin models of one-step processes"};
  app.set_version_flag("--version", STOCHASTIZE_VERSION);
  app.require_subcommand(1);

  DeriveArgs derive;
  auto* derive_cmd = app.add_subcommand("derive", "Derive drift and diffusion and write all exports");
  derive_cmd->add_option("scheme", derive.scheme_path, "Scheme file (or .model.json)")->required();
  derive_cmd->add_option("--out", derive.out_dir, "Output directory")->capture_default_str();
  derive_cmd->add_option("--name", derive.name, "Base name of the output files (default: scheme file stem)");
  derive_cmd->add_option("--latex-names", derive.latex_names, "File of 'symbol = \\latex' overrides");
  derive.flags.add_to(derive_cmd);

  DeriveArgs codegen;
  codegen.out_dir.clear();
  auto* codegen_cmd = app.add_subcommand("codegen", "Write one export of the derived model");
  codegen_cmd->add_option("scheme", codegen.scheme_path, "Scheme file (or .model.json)")->required();
  codegen_cmd->add_option("--target", codegen.target, "latex, c or json")
      ->required()
      ->check(CLI::IsMember({"latex", "c", "json"}));
  codegen_cmd->add_option("--out", codegen.out_dir, "Output file (default: standard output)");
  codegen_cmd->add_option("--name", codegen.name, "C function name prefix (default: scheme file stem)");
  codegen_cmd->add_option("--latex-names", codegen.latex_names, "File of 'symbol = \\latex' overrides");
  codegen.flags.add_to(codegen_cmd);

  SimulateArgs sim;
  std::uint64_t seed = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate an ensemble and write trajectories, moments and a manifest");
  sim_cmd->add_option("input", sim.input_path, "Scheme file (or .model.json)");
  sim_cmd->add_option("rates", sim.rates_path, "Rates file: 'symbol = value' per line, species give the initial state");
  sim_cmd->add_option("--manifest", sim.manifest_path, "Re-run the simulation recorded in a manifest");
  sim_cmd->add_option("--out", sim.out_dir, "Output directory");
  sim_cmd->add_option("--init", sim.init, "Initial value override, species=value (repeatable)");
  sim_cmd->add_option("--engine", sim.engine, "em (Euler-Maruyama) or ssa (Gillespie)")
      ->check(CLI::IsMember({"em", "ssa"}))
      ->capture_default_str();
  sim_cmd->add_option("--seed", seed, "Base seed (default: drawn from the system and recorded)");
  sim_cmd->add_option("--dt", sim.dt, "Euler-Maruyama step")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--t-final", sim.t_final, "Final time")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--trajectories", sim.trajectories, "Ensemble size")->capture_default_str();
  sim_cmd->add_option("--grid-points", sim.grid_points, "Sampling grid size")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  sim_cmd->add_option("--negative", sim.negative, "Negative Euler-Maruyama states: clamp or reject")
      ->check(CLI::IsMember({"clamp", "reject"}))
      ->capture_default_str();
  sim_cmd->add_flag("--svg", sim.svg, "Also write moments.svg");
  sim.flags.add_to(sim_cmd);

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Run the jump-moment, symmetry, PSD and engine checks");
  check_cmd->add_option("scheme", check.scheme_path, "Scheme file")->required();
  check_cmd->add_option("rates", check.rates_path, "Rates file")->required();
  check_cmd->add_option("--init", check.init, "Initial value override, species=value (repeatable)");
  check_cmd->add_flag("--paper-fidelity", check.paper_fidelity,
                      "Report minus-sign diffusion mismatches as advisories instead of failures");
  check_cmd->add_option("--box", check.box, "Side of the state box for the exact checks")
      ->check(CLI::Range(1u, 64u))
      ->capture_default_str();
  check_cmd->add_option("--trajectories", check.trajectories, "Paths per engine")
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000000}))
      ->capture_default_str();
  check_cmd->add_option("--t-final", check.t_final, "Engine comparison horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  check_cmd->add_option("--dt", check.dt, "Euler-Maruyama step")->check(CLI::PositiveNumber)->capture_default_str();
  check_cmd->add_option("--seed", check.seed, "Base seed")->capture_default_str();
  check_cmd->add_option("--threshold", check.threshold, "Largest acceptable |z|")->capture_default_str();
  check.flags.add_to(check_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParseError;
  }

  try {
    if (*derive_cmd) return cmd_derive(derive);
    if (*codegen_cmd) return cmd_codegen(codegen);
    if (*sim_cmd) {
      if (sim_cmd->count("--seed")) sim.seed = seed;
      return cmd_simulate(sim);
    }
    if (*check_cmd) return cmd_check(check);
  } catch (const InputError& e) {
    std::cerr << "stochastize: error: " << e.what() << "\n";
    return kParseError;
  } catch (const BindError& e) {
    std::cerr << "stochastize: error: " << e.what() << "\n";
    return kBindingError;
  } catch (const std::exception& e) {
    std::cerr << "stochastize: error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
