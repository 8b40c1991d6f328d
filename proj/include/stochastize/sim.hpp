#pragma once

// Trajectory engines: Euler-Maruyama for the Langevin model and Gillespie's
// direct method for the underlying jump process, plus ensemble statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cme.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "random.hpp"
#include "scheme.hpp"
#include "stochastizer.hpp"
#include "symcore.hpp"

namespace stochastize {

using RateValues = std::map<SymbolId, double>;

enum class NegativePolicy { ClampZero, RejectStep };
enum class Engine { EulerMaruyama, Ssa, DriftOde };

inline const char* to_string(Engine e) {
  switch (e) {
    case Engine::EulerMaruyama: return "em";
    case Engine::Ssa: return "ssa";
    case Engine::DriftOde: return "ode";
  }
  return "?";
}

struct SimConfig {
  RateValues rates;
  std::vector<double> initial_state;
  double t_final = 10.0;
  double dt = 1e-3;  // Euler-Maruyama and drift ODE only
  std::size_t trajectories = 100;
  std::uint64_t base_seed = 0;
  NegativePolicy negative_policy = NegativePolicy::ClampZero;
  std::size_t grid_points = 200;
  double psd_tolerance = 1e-9;
};

/// Paths sampled on a uniform grid over [0, t_final], stored as
/// [trajectory][grid point][species].
struct TrajectoryEnsemble {
  std::vector<double> times;
  std::size_t trajectories = 0;
  std::size_t dimension = 0;
  std::vector<double> paths;
  std::vector<std::uint64_t> clamp_events;
  Engine engine = Engine::EulerMaruyama;

  double& at(std::size_t traj, std::size_t k, std::size_t i) {
    return paths[(traj * times.size() + k) * dimension + i];
  }
  double at(std::size_t traj, std::size_t k, std::size_t i) const {
    return paths[(traj * times.size() + k) * dimension + i];
  }
  friend bool operator==(const TrajectoryEnsemble&, const TrajectoryEnsemble&) = default;
};

struct MomentReport {
  std::vector<double> times;
  std::size_t dimension = 0;
  std::vector<double> mean;            // [grid][i]
  std::vector<double> covariance;      // [grid][i][j]
  std::vector<double> standard_error;  // [grid][i]

  double mean_at(std::size_t k, std::size_t i) const { return mean[k * dimension + i]; }
  double covariance_at(std::size_t k, std::size_t i, std::size_t j) const {
    return covariance[(k * dimension + i) * dimension + j];
  }
  double stderr_at(std::size_t k, std::size_t i) const {
    return standard_error[k * dimension + i];
  }
};

/// Symmetric square root L (L L = B) through a symmetric eigendecomposition.
/// Eigenvalues in [-tol |B|, 0) are clamped to zero, where |B| is the largest
/// absolute entry.
inline Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& b, double tol = 1e-9) {
  if (b.rows() != b.cols()) throw NotSymmetric("matrix is not square");
  const double norm = b.cwiseAbs().maxCoeff();
  if (norm == 0.0) return Eigen::MatrixXd::Zero(b.rows(), b.cols());
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > tol * norm)
    throw NotSymmetric("diffusion matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -tol * norm)
      throw NotPsd("diffusion matrix has eigenvalue " + std::to_string(lambda[i]));
    lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
  }
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

namespace detail {

inline void validate(const SimConfig& c, std::size_t n) {
  if (!(c.dt > 0.0)) throw Error("dt must be positive");
  if (!(c.t_final > 0.0)) throw Error("t_final must be positive");
  if (c.trajectories < 1) throw Error("at least one trajectory is required");
  if (c.grid_points < 2) throw Error("the sampling grid needs at least two points");
  if (c.initial_state.size() != n)
    throw Error("initial state has " + std::to_string(c.initial_state.size()) +
                " entries, expected " + std::to_string(n));
}

inline std::vector<double> uniform_grid(double t_final, std::size_t points) {
  std::vector<double> t(points);
  for (std::size_t k = 0; k < points; ++k)
    t[k] = t_final * static_cast<double>(k) / static_cast<double>(points - 1);
  return t;
}

inline void require_bound(const InteractionScheme& scheme, const RateValues& rates) {
  std::vector<std::string> missing;
  for (const auto& r : scheme.rate_symbols())
    if (!rates.count(r)) missing.push_back(r.name);
  if (!missing.empty()) throw UnboundRate(missing);
}

// Fixed-step time axis: step m ends at min(m dt, t_final). For each grid
// point, the last step whose end time does not exceed it.
struct StepGrid {
  std::size_t steps;
  std::vector<std::size_t> sample_step;

  StepGrid(const std::vector<double>& times, double t_final, double dt) {
    steps = static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
    for (double t : times) {
      auto m = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
      sample_step.push_back(std::min(m, steps));
    }
  }
  double step_size(std::size_t m, double t_final, double dt) const {
    return m == steps ? t_final - dt * static_cast<double>(steps - 1) : dt;
  }
};

inline TrajectoryEnsemble make_ensemble(const SimConfig& c, std::size_t n, std::size_t trajectories,
                                        Engine engine) {
  TrajectoryEnsemble e;
  e.times = uniform_grid(c.t_final, c.grid_points);
  e.trajectories = trajectories;
  e.dimension = n;
  e.paths.assign(trajectories * e.times.size() * n, 0.0);
  e.clamp_events.assign(trajectories, 0);
  e.engine = engine;
  return e;
}

}  // namespace detail

/// Euler-Maruyama integration of d phi = A dt + b dW with dW = eps sqrt(dt).
/// Trajectory j draws from the stream seeded with base_seed XOR j.
inline TrajectoryEnsemble euler_maruyama(const SdeModel& model, const SimConfig& config) {
  const std::size_t n = model.dimension();
  detail::validate(config, n);
  detail::require_bound(model.scheme, config.rates);

  const auto slots = model.scheme.species_slots();
  std::vector<NumericPolynomial> drift;
  for (const auto& p : model.drift) drift.emplace_back(p, slots, config.rates);
  std::vector<NumericPolynomial> diffusion;  // row-major n x n
  for (const auto& row : model.diffusion)
    for (const auto& p : row) diffusion.emplace_back(p, slots, config.rates);

  const bool per_reaction = model.noise_strategy == NoiseStrategy::PerReaction;
  const auto changes = change_vectors(model.scheme);
  std::vector<NumericPolynomial> channel_weight;  // s+_a + s-_a
  if (per_reaction) {
    const auto rates = transition_rates(model.scheme, model.rate_mode);
    for (std::size_t a = 0; a < model.scheme.size(); ++a)
      channel_weight.emplace_back(rates.forward[a] + rates.backward[a], slots, config.rates);
  }
  const std::size_t m = per_reaction ? model.scheme.size() : n;

  auto ensemble = detail::make_ensemble(config, n, config.trajectories, Engine::EulerMaruyama);
  const detail::StepGrid grid(ensemble.times, config.t_final, config.dt);

  std::vector<double> x(n), a(n), candidate(n), eps(m), b(n * n);
  Eigen::MatrixXd bmat(n, n), root(n, n);
  std::vector<double> noise_gain(per_reaction ? m : 0);

  auto describe = [](const std::vector<double>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + format_number(s[i]);
    return out + ")";
  };

  for (std::size_t j = 0; j < config.trajectories; ++j) {
    RandomStream rng(trajectory_seed(config.base_seed, j));
    x = config.initial_state;
    std::size_t next_sample = 0;
    auto record = [&](std::size_t step) {
      while (next_sample < grid.sample_step.size() && grid.sample_step[next_sample] == step) {
        for (std::size_t i = 0; i < n; ++i) ensemble.at(j, next_sample, i) = x[i];
        ++next_sample;
      }
    };
    record(0);

    for (std::size_t step = 1; step <= grid.steps; ++step) {
      const double h = grid.step_size(step, config.t_final, config.dt);
      const double sqrt_h = std::sqrt(h);
      for (std::size_t i = 0; i < n; ++i) a[i] = drift[i](x);

      if (per_reaction) {
        for (std::size_t c = 0; c < m; ++c) {
          double w = channel_weight[c](x);
          if (w < -config.psd_tolerance)
            throw NegativeRate("transition rate of interaction " + std::to_string(c + 1) +
                               " evaluates to " + format_number(w) + " at state " + describe(x) +
                               ", trajectory " + std::to_string(j));
          noise_gain[c] = std::sqrt(std::max(w, 0.0));
        }
      } else if (n == 1) {
        double v = diffusion[0](x);
        if (v < 0.0)
          throw NotPsd("diffusion coefficient evaluates to " + format_number(v) + " at state " + describe(x) +
                       ", trajectory " + std::to_string(j));
        root(0, 0) = std::sqrt(std::max(v, 0.0));
      } else {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = 0; k < n; ++k)
            bmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = diffusion[i * n + k](x);
        root = matrix_sqrt_psd(bmat, config.psd_tolerance);
      }

      for (int attempt = 0;; ++attempt) {
        for (auto& e : eps) e = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
          double noise = 0.0;
          if (per_reaction) {
            for (std::size_t c = 0; c < m; ++c)
              if (changes[c][i] != 0) noise += changes[c][i] * noise_gain[c] * eps[c];
          } else {
            for (std::size_t k = 0; k < n; ++k)
              noise += root(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * eps[k];
          }
          candidate[i] = x[i] + a[i] * h + noise * sqrt_h;
        }
        bool negative = std::any_of(candidate.begin(), candidate.end(), [](double v) { return v < 0.0; });
        if (!negative) break;
        if (config.negative_policy == NegativePolicy::ClampZero) {
          for (auto& v : candidate) v = std::max(v, 0.0);
          ++ensemble.clamp_events[j];
          break;
        }
        ++ensemble.clamp_events[j];
        if (attempt + 1 >= 100)
          throw Error("trajectory " + std::to_string(j) +
                      ": no non-negative step after 100 noise redraws");
      }
      x.swap(candidate);
      record(step);
    }
  }
  return ensemble;
}

/// Gillespie direct method on the 2s channels (forward and backward jump of
/// every interaction) with exact falling-factorial propensities.
inline TrajectoryEnsemble gillespie_ssa(const InteractionScheme& scheme, const SimConfig& config) {
  const std::size_t n = scheme.dimension();
  detail::validate(config, n);
  const auto bound = detail::bind_rates(scheme, config.rates);
  const auto changes = change_vectors(scheme);

  State initial(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = config.initial_state[i];
    if (v < 0.0 || v != std::floor(v))
      throw Error("SSA needs a non-negative integer initial state");
    initial[i] = static_cast<long>(v);
  }

  auto ensemble = detail::make_ensemble(config, n, config.trajectories, Engine::Ssa);
  const std::size_t channels = 2 * scheme.size();
  std::vector<double> propensities(channels);

  for (std::size_t j = 0; j < config.trajectories; ++j) {
    RandomStream rng(trajectory_seed(config.base_seed, j));
    State x = initial;
    double t = 0.0;
    std::size_t next_sample = 0;
    auto record_until = [&](double t_next) {
      while (next_sample < ensemble.times.size() && ensemble.times[next_sample] < t_next) {
        for (std::size_t i = 0; i < n; ++i) ensemble.at(j, next_sample, i) = static_cast<double>(x[i]);
        ++next_sample;
      }
    };

    for (;;) {
      double total = 0.0;
      for (std::size_t a = 0; a < scheme.size(); ++a) {
        const auto& it = scheme.interactions()[a];
        propensities[2 * a] = propensity<double, long>(bound.forward[a], it.initial, x);
        propensities[2 * a + 1] = propensity<double, long>(bound.backward[a], it.final, x);
        total += propensities[2 * a] + propensities[2 * a + 1];
      }
      if (!(total > 0.0)) {
        record_until(std::numeric_limits<double>::infinity());
        break;
      }
      const double t_next = t + rng.exponential() / total;
      if (t_next > config.t_final) {
        record_until(std::numeric_limits<double>::infinity());
        break;
      }
      record_until(t_next);

      double target = rng.uniform() * total;
      std::size_t channel = channels;
      for (std::size_t c = 0; c < channels; ++c) {
        if (propensities[c] <= 0.0) continue;
        channel = c;
        target -= propensities[c];
        if (target < 0.0) break;
      }
      const int direction = channel % 2 == 0 ? 1 : -1;
      const auto& r = changes[channel / 2];
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += direction * r[i];
        if (x[i] < 0)
          throw std::logic_error("SSA reached a negative population; propensities are inconsistent");
      }
      t = t_next;
    }
  }
  return ensemble;
}

/// Classical RK4 on d phi/dt = A(phi), sampled like euler_maruyama.
inline TrajectoryEnsemble integrate_drift(const SdeModel& model, const SimConfig& config) {
  const std::size_t n = model.dimension();
  detail::validate(config, n);
  detail::require_bound(model.scheme, config.rates);
  const auto slots = model.scheme.species_slots();
  std::vector<NumericPolynomial> drift;
  for (const auto& p : model.drift) drift.emplace_back(p, slots, config.rates);

  auto ensemble = detail::make_ensemble(config, n, 1, Engine::DriftOde);
  const detail::StepGrid grid(ensemble.times, config.t_final, config.dt);
  std::vector<double> x = config.initial_state, y(n), k1(n), k2(n), k3(n), k4(n);
  auto eval = [&](const std::vector<double>& at, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = drift[i](at);
  };
  std::size_t next_sample = 0;
  auto record = [&](std::size_t step) {
    while (next_sample < grid.sample_step.size() && grid.sample_step[next_sample] == step) {
      for (std::size_t i = 0; i < n; ++i) ensemble.at(0, next_sample, i) = x[i];
      ++next_sample;
    }
  };
  record(0);
  for (std::size_t step = 1; step <= grid.steps; ++step) {
    const double h = grid.step_size(step, config.t_final, config.dt);
    eval(x, k1);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * k1[i];
    eval(y, k2);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * k2[i];
    eval(y, k3);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * k3[i];
    eval(y, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    record(step);
  }
  return ensemble;
}

/// Unbiased sample mean and covariance per grid point; standard error is
/// the sample standard deviation over sqrt(trajectories).
inline MomentReport ensemble_moments(const TrajectoryEnsemble& e) {
  if (e.trajectories < 2)
    throw TooFewTrajectories("moments need at least two trajectories");
  const std::size_t g = e.times.size(), n = e.dimension;
  const double count = static_cast<double>(e.trajectories);
  MomentReport r{e.times, n, std::vector<double>(g * n, 0.0), std::vector<double>(g * n * n, 0.0),
                 std::vector<double>(g * n, 0.0)};
  for (std::size_t j = 0; j < e.trajectories; ++j)
    for (std::size_t k = 0; k < g; ++k)
      for (std::size_t i = 0; i < n; ++i) r.mean[k * n + i] += e.at(j, k, i);
  for (auto& v : r.mean) v /= count;
  for (std::size_t j = 0; j < e.trajectories; ++j)
    for (std::size_t k = 0; k < g; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        const double di = e.at(j, k, i) - r.mean[k * n + i];
        for (std::size_t l = i; l < n; ++l)
          r.covariance[(k * n + i) * n + l] += di * (e.at(j, k, l) - r.mean[k * n + l]);
      }
  for (std::size_t k = 0; k < g; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = i; l < n; ++l) {
        double& c = r.covariance[(k * n + i) * n + l];
        c /= count - 1.0;
        r.covariance[(k * n + l) * n + i] = c;
      }
      r.standard_error[k * n + i] = std::sqrt(r.covariance[(k * n + i) * n + i] / count);
    }
  return r;
}

enum class Reference { Ssa, DriftOde };

struct ComparisonReport {
  MomentReport em;
  MomentReport reference;
  std::vector<double> z;  // [grid][i]
  double max_abs_z = 0.0;
  double max_abs_mean_difference = 0.0;
  double threshold = 4.0;
  bool passed = false;
};

namespace detail {

inline MomentReport single_path_moments(const TrajectoryEnsemble& e) {
  const std::size_t g = e.times.size(), n = e.dimension;
  MomentReport r{e.times, n, std::vector<double>(g * n), std::vector<double>(g * n * n, 0.0),
                 std::vector<double>(g * n, 0.0)};
  for (std::size_t k = 0; k < g; ++k)
    for (std::size_t i = 0; i < n; ++i) r.mean[k * n + i] = e.at(0, k, i);
  return r;
}

}  // namespace detail

/// Per grid point, z = (mean_a - mean_b) / sqrt(se_a^2 + se_b^2); passes when
/// max |z| <= threshold.
inline ComparisonReport compare_moments(MomentReport a, MomentReport b, double threshold = 4.0) {
  if (a.times.size() != b.times.size() || a.dimension != b.dimension)
    throw Error("moment reports are sampled on different grids");
  ComparisonReport report;
  report.threshold = threshold;
  report.em = std::move(a);
  report.reference = std::move(b);
  const std::size_t g = report.em.times.size(), n = report.em.dimension;
  report.z.assign(g * n, 0.0);
  for (std::size_t k = 0; k < g; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = report.em.mean_at(k, i) - report.reference.mean_at(k, i);
      const double se = std::hypot(report.em.stderr_at(k, i), report.reference.stderr_at(k, i));
      const double z = se > 0.0 ? diff / se
                                : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      report.z[k * n + i] = z;
      report.max_abs_z = std::max(report.max_abs_z, std::abs(z));
      report.max_abs_mean_difference = std::max(report.max_abs_mean_difference, std::abs(diff));
    }
  report.passed = report.max_abs_z <= threshold;
  return report;
}

/// Euler-Maruyama ensemble against a reference run with the same config.
/// Against SSA the z-score criterion of compare_moments applies; against
/// the drift ODE (deterministic limit) the comparison passes when the
/// largest mean difference is within 10 dt.
inline ComparisonReport compare_engines(const InteractionScheme& scheme, const SdeModel& model,
                                        const SimConfig& config,
                                        Reference reference = Reference::Ssa,
                                        double threshold = 4.0) {
  auto em = euler_maruyama(model, config);
  auto report = compare_moments(
      em.trajectories >= 2 ? ensemble_moments(em) : detail::single_path_moments(em),
      reference == Reference::Ssa ? ensemble_moments(gillespie_ssa(scheme, config))
                                  : detail::single_path_moments(integrate_drift(model, config)),
      threshold);
  if (reference == Reference::DriftOde)
    report.passed = report.max_abs_mean_difference <= 10.0 * config.dt;
  return report;
}

inline void write_trajectories_csv(std::ostream& out, const InteractionScheme& scheme,
                                   const TrajectoryEnsemble& e) {
  out << "trajectory,t";
  for (const auto& s : scheme.species()) out << "," << s.name;
  out << "\n";
  for (std::size_t j = 0; j < e.trajectories; ++j)
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      out << j << "," << format_number(e.times[k]);
      for (std::size_t i = 0; i < e.dimension; ++i) out << "," << format_number(e.at(j, k, i));
      out << "\n";
    }
}

inline void write_moments_csv(std::ostream& out, const InteractionScheme& scheme,
                              const MomentReport& r) {
  const auto& sp = scheme.species();
  const std::size_t n = r.dimension;
  out << "t";
  for (const auto& s : sp) out << ",mean_" << s.name;
  for (const auto& a : sp)
    for (const auto& b : sp) out << ",cov_" << a.name << "_" << b.name;
  for (const auto& s : sp) out << ",stderr_" << s.name;
  out << "\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    out << format_number(r.times[k]);
    for (std::size_t i = 0; i < n; ++i) out << "," << format_number(r.mean_at(k, i));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out << "," << format_number(r.covariance_at(k, i, j));
    for (std::size_t i = 0; i < n; ++i) out << "," << format_number(r.stderr_at(k, i));
    out << "\n";
  }
}

/// Static line plot of mean +- 2 standard errors per species.
inline void write_moments_svg(std::ostream& out, const InteractionScheme& scheme,
                              const MomentReport& r) {
  constexpr double width = 800, height = 480, margin = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const std::size_t n = r.dimension, g = r.times.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < g; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, r.mean_at(k, i) - 2 * r.stderr_at(k, i));
      hi = std::max(hi, r.mean_at(k, i) + 2 * r.stderr_at(k, i));
    }
  if (!(hi > lo)) hi = lo + 1.0;
  const double t_max = r.times.back() > 0 ? r.times.back() : 1.0;
  auto px = [&](double t) { return margin + (width - 2 * margin) * t / t_max; };
  auto py = [&](double v) { return height - margin - (height - 2 * margin) * (v - lo) / (hi - lo); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">t (0 to "
      << format_number(t_max) << ")</text>\n";
  out << "<text x=\"5\" y=\"" << margin - 10 << "\">" << format_number(hi) << "</text>\n";
  out << "<text x=\"5\" y=\"" << height - margin << "\">" << format_number(lo) << "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const char* colour = palette[i % 6];
    for (int band = -1; band <= 1; ++band) {
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\""
          << (band == 0 ? " stroke-width=\"2\"" : " stroke-width=\"1\" stroke-dasharray=\"4 3\"")
          << " points=\"";
      for (std::size_t k = 0; k < g; ++k)
        out << format_number(px(r.times[k])) << ","
            << format_number(py(r.mean_at(k, i) + 2.0 * band * r.stderr_at(k, i))) << " ";
      out << "\"/>\n";
    }
    out << "<text x=\"" << width - margin + 5 << "\" y=\"" << margin + 20 * static_cast<double>(i)
        << "\" fill=\"" << colour << "\">" << scheme.species()[i].name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace stochastize
