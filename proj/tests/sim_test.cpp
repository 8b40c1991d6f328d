#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <stochastize/cme.hpp>
#include <stochastize/sim.hpp>

#include "support/generators.hpp"

namespace sz = stochastize;
using sz::Polynomial;

namespace {

const sz::SymbolId phi = sz::species("phi");
const sz::SymbolId lambda = sz::rate("lambda");
const sz::SymbolId beta = sz::rate("beta");
const sz::SymbolId gamma_ = sz::rate("gamma");

// d phi = -k phi dt with the noise removed.
sz::SdeModel linear_decay() {
  auto model = sz::build_sde_model(sz::parse_scheme("phi -> 0 @ k"));
  model.diffusion = {{Polynomial()}};
  return model;
}

sz::SimConfig decay_config(double dt) {
  sz::SimConfig c;
  c.rates = {{sz::rate("k"), 1.0}};
  c.initial_state = {1.0};
  c.t_final = 1.0;
  c.dt = dt;
  c.trajectories = 1;
  c.grid_points = 11;
  return c;
}

sz::TrajectoryEnsemble constant_paths(std::vector<double> values) {
  sz::TrajectoryEnsemble e;
  e.times = {0.0, 1.0};
  e.trajectories = values.size();
  e.dimension = 1;
  for (double v : values) {
    e.paths.push_back(v);
    e.paths.push_back(v);
  }
  e.clamp_events.assign(values.size(), 0);
  return e;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(MatrixSqrtTest, Examples) {
  EXPECT_LT(max_abs(sz::matrix_sqrt_psd(Eigen::MatrixXd::Identity(3, 3)) - Eigen::MatrixXd::Identity(3, 3)),
            1e-15);
  Eigen::MatrixXd d(2, 2);
  d << 4, 0, 0, 9;
  Eigen::MatrixXd expected(2, 2);
  expected << 2, 0, 0, 3;
  EXPECT_LT(max_abs(sz::matrix_sqrt_psd(d) - expected), 1e-14);
  Eigen::MatrixXd b(2, 2);
  b << 2, -1, -1, 2;
  Eigen::MatrixXd l = sz::matrix_sqrt_psd(b);
  EXPECT_LT(max_abs(l * l - b), 1e-12);
  EXPECT_LT(max_abs(l - l.transpose()), 1e-15);
}

TEST(MatrixSqrtTest, Errors) {
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(sz::matrix_sqrt_psd(indefinite), sz::NotPsd);
  Eigen::MatrixXd skew(2, 2);
  skew << 1, 0.5, 0, 1;
  EXPECT_THROW(sz::matrix_sqrt_psd(skew), sz::NotSymmetric);
  Eigen::MatrixXd tiny(2, 2);
  tiny << 1, 1, 1, 1 - 1e-13;  // eigenvalue ~ -5e-14, clamped
  Eigen::MatrixXd l = sz::matrix_sqrt_psd(tiny);
  EXPECT_LT(max_abs(l * l - tiny), 1e-10);
}

TEST(MatrixSqrtTest, ReconstructsRandomPsdMatrices) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 6), rank_dist(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng);
    const int rank = std::min(n, rank_dist(rng));
    Eigen::MatrixXd g(n, std::max(rank, 1));
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) g(i, j) = rank == 0 ? 0.0 : normal(rng);
    Eigen::MatrixXd b = g * g.transpose();
    b = 0.5 * (b + b.transpose());
    Eigen::MatrixXd l = sz::matrix_sqrt_psd(b);
    const double scale = b.size() ? max_abs(b) : 0.0;
    EXPECT_LE(max_abs(l * l - b), 1e-10 * (1 + scale));
  }
}

TEST(EulerMaruyamaTest, DeterministicDecay) {
  auto e = sz::euler_maruyama(linear_decay(), decay_config(1e-4));
  EXPECT_NEAR(e.at(0, 10, 0), std::exp(-1.0), 5e-4);
  EXPECT_DOUBLE_EQ(e.times.back(), 1.0);
  EXPECT_EQ(e.at(0, 0, 0), 1.0);
}

TEST(EulerMaruyamaTest, ConstantPathWithoutDriftOrNoise) {
  auto model = linear_decay();
  model.drift = {Polynomial()};
  auto config = decay_config(1e-2);
  config.trajectories = 3;
  auto e = sz::euler_maruyama(model, config);
  for (double v : e.paths) EXPECT_EQ(v, 1.0);
}

TEST(EulerMaruyamaTest, WeakErrorHalvesWithStep) {
  double previous = 0.0;
  for (int level = 0; level < 4; ++level) {
    const double dt = 0.1 / std::pow(2.0, level);
    auto e = sz::euler_maruyama(linear_decay(), decay_config(dt));
    const double error = std::abs(e.at(0, 10, 0) - std::exp(-1.0));
    if (level > 0) {
      EXPECT_GE(previous / error, 1.5);
      EXPECT_LE(previous / error, 2.5);
    }
    previous = error;
  }
}

TEST(EulerMaruyamaTest, ReproducibleAndSeedDependent) {
  auto model = sz::build_sde_model(sz::testing::verhulst(),
                                   {.rate_mode = sz::RateMode::Exact,
                                    .diffusion_sign = sz::DiffusionSign::KramersMoyalPlus});
  sz::SimConfig c;
  c.rates = {{lambda, 1.0}, {beta, 0.2}, {gamma_, 0.05}};
  c.initial_state = {10.0};
  c.t_final = 1.0;
  c.dt = 1e-2;
  c.trajectories = 20;
  c.base_seed = 1234;
  auto a = sz::euler_maruyama(model, c);
  auto b = sz::euler_maruyama(model, c);
  EXPECT_EQ(a, b);
  c.base_seed = 1235;
  EXPECT_NE(a.paths, sz::euler_maruyama(model, c).paths);
  // Trajectory j only depends on base_seed XOR j.
  c.base_seed = 1234 ^ 3;
  c.trajectories = 1;
  auto single = sz::euler_maruyama(model, c);
  for (std::size_t k = 0; k < a.times.size(); ++k) EXPECT_EQ(single.at(0, k, 0), a.at(3, k, 0));
}

TEST(EulerMaruyamaTest, NegativeStatePolicies) {
  auto model = sz::build_sde_model(sz::parse_scheme("x -> 0 @ k"),
                                   {.diffusion_sign = sz::DiffusionSign::KramersMoyalPlus});
  sz::SimConfig c;
  c.rates = {{sz::rate("k"), 1.0}};
  c.initial_state = {0.5};
  c.t_final = 5.0;
  c.dt = 0.05;
  c.trajectories = 50;
  auto clamped = sz::euler_maruyama(model, c);
  std::uint64_t events = 0;
  for (auto v : clamped.clamp_events) events += v;
  EXPECT_GT(events, 0u);
  for (double v : clamped.paths) EXPECT_GE(v, 0.0);

  c.negative_policy = sz::NegativePolicy::RejectStep;
  c.initial_state = {5.0};
  c.t_final = 0.5;
  auto rejected = sz::euler_maruyama(model, c);
  for (double v : rejected.paths) EXPECT_GE(v, 0.0);
}

TEST(EulerMaruyamaTest, BindingAndConfigErrors) {
  auto model = sz::build_sde_model(sz::testing::verhulst());
  sz::SimConfig c;
  c.rates = {{lambda, 1.0}};
  c.initial_state = {10.0};
  EXPECT_THROW(sz::euler_maruyama(model, c), sz::UnboundRate);
  c.rates = {{lambda, 1.0}, {beta, 0.2}, {gamma_, 0.05}};
  c.dt = 0.0;
  EXPECT_THROW(sz::euler_maruyama(model, c), sz::Error);
  c.dt = 1e-3;
  c.initial_state = {1.0, 2.0};
  EXPECT_THROW(sz::euler_maruyama(model, c), sz::Error);
}

TEST(EulerMaruyamaTest, MinusSignLosesDefinitenessAtLargeStates) {
  // lambda phi + beta phi - gamma phi^2 < 0 once phi > 24.
  auto model = sz::build_sde_model(sz::testing::verhulst());
  sz::SimConfig c;
  c.rates = {{lambda, 1.0}, {beta, 0.2}, {gamma_, 0.05}};
  c.initial_state = {30.0};
  c.t_final = 0.01;
  c.trajectories = 1;
  EXPECT_THROW(sz::euler_maruyama(model, c), sz::NotPsd);
}

TEST(EulerMaruyamaTest, PerReactionGainReproducesSumDiffusion) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> state_dist(0.0, 8.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = sz::testing::random_scheme(rng, 3, 4, 3);
    auto rates = sz::testing::to_double_map(sz::testing::random_rates(rng, s));
    auto point = rates;
    for (const auto& sp : s.species()) point[sp] = state_dist(rng);
    auto km = sz::diffusion_matrix(s, sz::RateMode::FokkerPlanck, sz::DiffusionSign::KramersMoyalPlus);
    auto tr = sz::transition_rates(s, sz::RateMode::FokkerPlanck);
    auto r = sz::change_vectors(s);
    const std::size_t n = s.dimension();
    Eigen::MatrixXd g(n, s.size());
    for (std::size_t a = 0; a < s.size(); ++a) {
      const double w = sz::evaluate(tr.forward[a], point) + sz::evaluate(tr.backward[a], point);
      for (std::size_t i = 0; i < n; ++i) g(i, a) = r[a][i] * std::sqrt(w);
    }
    Eigen::MatrixXd ggt = g * g.transpose();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double expected = sz::evaluate(km[i][j], point);
        EXPECT_NEAR(ggt(i, j), expected, 1e-10 * (1 + std::abs(expected)));
      }
  }
}

TEST(EulerMaruyamaTest, PerReactionMatchesMatrixSqrtInDistribution) {
  auto s = sz::testing::lotka_volterra();
  sz::SimConfig c;
  c.rates = {{sz::rate("k_1"), 1.0}, {sz::rate("k_2"), 0.01}, {sz::rate("k_3"), 1.0}};
  c.initial_state = {100.0, 100.0};
  c.t_final = 0.5;
  c.dt = 1e-2;
  c.trajectories = 2000;
  c.grid_points = 6;
  auto sqrt_model = sz::build_sde_model(s);
  auto per_model = sz::build_sde_model(s, {.noise_strategy = sz::NoiseStrategy::PerReaction});
  c.base_seed = 1;
  auto a = sz::ensemble_moments(sz::euler_maruyama(sqrt_model, c));
  c.base_seed = 1u << 20;
  auto b = sz::ensemble_moments(sz::euler_maruyama(per_model, c));
  EXPECT_LE(sz::compare_moments(a, b).max_abs_z, 4.0);
  // Covariance agrees to sampling accuracy (relative error of a variance ~ sqrt(2/N)).
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_NEAR(a.covariance_at(5, i, i) / b.covariance_at(5, i, i), 1.0, 5 * std::sqrt(4.0 / 2000));
}

TEST(EulerMaruyamaTest, VerhulstMeanMatchesMasterEquation) {
  auto scheme = sz::testing::verhulst();
  auto model = sz::build_sde_model(scheme, {.rate_mode = sz::RateMode::Exact,
                                            .diffusion_sign = sz::DiffusionSign::KramersMoyalPlus});
  sz::SimConfig c;
  c.rates = {{lambda, 1.0}, {beta, 0.2}, {gamma_, 0.05}};
  c.initial_state = {10.0};
  c.t_final = 5.0;
  c.dt = 1e-3;
  c.trajectories = 10000;
  c.grid_points = 2;
  c.base_seed = 2718;
  auto em = sz::ensemble_moments(sz::euler_maruyama(model, c));

  std::map<sz::SymbolId, sz::Rational> exact{
      {lambda, 1}, {beta, sz::Rational(1, 5)}, {gamma_, sz::Rational(1, 20)}};
  auto q = sz::build_generator(scheme, exact, sz::StateBox({80}));
  std::vector<long> start{10};
  auto p = sz::evolve_distribution(q, sz::point_mass(q.box, start), 5.0, 1e-3);
  ASSERT_LT(p.leaked, 1e-9);
  const double cme_mean = sz::distribution_moments(q, p).mean[0];
  EXPECT_NEAR(em.mean_at(1, 0), cme_mean, 3 * em.stderr_at(1, 0));
}

TEST(GillespieTest, ZeroRatesGiveConstantPath) {
  sz::SimConfig c;
  c.rates = {{lambda, 0.0}, {beta, 0.0}, {gamma_, 0.0}};
  c.initial_state = {7.0};
  c.t_final = 3.0;
  c.trajectories = 4;
  auto e = sz::gillespie_ssa(sz::testing::verhulst(), c);
  for (double v : e.paths) EXPECT_EQ(v, 7.0);
}

TEST(GillespieTest, PureDeathSurvivalProbability) {
  sz::SimConfig c;
  c.rates = {{beta, 1.0}};
  c.initial_state = {1.0};
  c.t_final = 1.0;
  c.trajectories = 100000;
  c.grid_points = 2;
  c.base_seed = 99;
  auto m = sz::ensemble_moments(sz::gillespie_ssa(sz::parse_scheme("phi -> 0 @ beta"), c));
  EXPECT_NEAR(m.mean_at(1, 0), std::exp(-1.0), 3 * m.stderr_at(1, 0));
  EXPECT_EQ(m.mean_at(0, 0), 1.0);
}

TEST(GillespieTest, InitialStateMustBeNonNegativeIntegers) {
  sz::SimConfig c;
  c.rates = {{beta, 1.0}};
  c.initial_state = {1.5};
  EXPECT_THROW(sz::gillespie_ssa(sz::parse_scheme("phi -> 0 @ beta"), c), sz::Error);
  c.initial_state = {-1.0};
  EXPECT_THROW(sz::gillespie_ssa(sz::parse_scheme("phi -> 0 @ beta"), c), sz::Error);
}

TEST(GillespieTest, StatesStayNonNegativeIntegers) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = sz::testing::random_scheme(rng, 3, 4, 2);
    sz::SimConfig c;
    c.rates = sz::testing::to_double_map(sz::testing::random_rates(rng, s));
    for (auto& [k, v] : c.rates) v /= 20.0;
    c.initial_state.assign(s.dimension(), 3.0);
    c.t_final = 1.0;
    c.trajectories = 5;
    c.grid_points = 50;
    c.base_seed = static_cast<std::uint64_t>(trial);
    sz::TrajectoryEnsemble e;
    ASSERT_NO_THROW(e = sz::gillespie_ssa(s, c));
    for (double v : e.paths) {
      EXPECT_GE(v, 0.0);
      EXPECT_EQ(v, std::floor(v));
    }
    EXPECT_EQ(e, sz::gillespie_ssa(s, c));
  }
}

TEST(GillespieTest, LotkaVolterraAgreesWithLangevin) {
  auto s = sz::testing::lotka_volterra();
  sz::SimConfig c;
  c.rates = {{sz::rate("k_1"), 10.0}, {sz::rate("k_2"), 0.01}, {sz::rate("k_3"), 10.0}};
  c.initial_state = {1000.0, 1000.0};
  c.t_final = 0.5;
  c.dt = 1e-3;
  c.trajectories = 1000;
  c.grid_points = 6;
  c.base_seed = 4242;
  auto model = sz::build_sde_model(s, {.rate_mode = sz::RateMode::Exact,
                                       .diffusion_sign = sz::DiffusionSign::KramersMoyalPlus});
  auto report = sz::compare_engines(s, model, c);
  EXPECT_LE(report.max_abs_z, 4.0);
  const std::size_t last = 5;
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_NEAR(report.em.mean_at(last, i), report.reference.mean_at(last, i),
                3 * std::hypot(report.em.stderr_at(last, i), report.reference.stderr_at(last, i)));
}

TEST(EnsembleMomentsTest, Examples) {
  auto same = sz::ensemble_moments(constant_paths({3.0, 3.0, 3.0}));
  EXPECT_EQ(same.covariance_at(1, 0, 0), 0.0);
  auto two = sz::ensemble_moments(constant_paths({0.0, 2.0}));
  EXPECT_DOUBLE_EQ(two.mean_at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(two.covariance_at(0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(two.stderr_at(0, 0), 1.0);
  EXPECT_THROW(sz::ensemble_moments(constant_paths({1.0})), sz::TooFewTrajectories);
}

TEST(EnsembleMomentsTest, PermutationInvariantAndPsd) {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> normal;
  sz::TrajectoryEnsemble e;
  e.times = {0.0, 0.5, 1.0};
  e.trajectories = 40;
  e.dimension = 3;
  e.paths.resize(e.trajectories * 3 * 3);
  for (auto& v : e.paths) v = normal(rng);
  e.clamp_events.assign(e.trajectories, 0);
  auto m = sz::ensemble_moments(e);

  std::vector<std::size_t> order(e.trajectories);
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::shuffle(order.begin(), order.end(), rng);
  auto shuffled = e;
  for (std::size_t j = 0; j < order.size(); ++j)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < 3; ++i) shuffled.at(j, k, i) = e.at(order[j], k, i);
  auto ms = sz::ensemble_moments(shuffled);
  for (std::size_t q = 0; q < m.mean.size(); ++q) EXPECT_NEAR(m.mean[q], ms.mean[q], 1e-14);
  for (std::size_t q = 0; q < m.covariance.size(); ++q) EXPECT_NEAR(m.covariance[q], ms.covariance[q], 1e-13);

  for (std::size_t k = 0; k < 3; ++k) {
    Eigen::MatrixXd cov(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) cov(i, j) = m.covariance_at(k, i, j);
    EXPECT_LT(max_abs(cov - cov.transpose()), 1e-15);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(CompareEnginesTest, IdenticalEnsemblesGiveZeroScore) {
  auto model = sz::build_sde_model(sz::testing::verhulst(),
                                   {.diffusion_sign = sz::DiffusionSign::KramersMoyalPlus});
  sz::SimConfig c;
  c.rates = {{lambda, 1.0}, {beta, 0.2}, {gamma_, 0.05}};
  c.initial_state = {10.0};
  c.t_final = 1.0;
  c.dt = 1e-2;
  c.trajectories = 50;
  auto a = sz::ensemble_moments(sz::euler_maruyama(model, c));
  auto b = sz::ensemble_moments(sz::euler_maruyama(model, c));
  auto report = sz::compare_moments(a, b);
  EXPECT_EQ(report.max_abs_z, 0.0);
  EXPECT_TRUE(report.passed);
}

TEST(CompareEnginesTest, DeterministicLimit) {
  auto model = linear_decay();
  auto c = decay_config(1e-3);
  c.grid_points = 101;
  auto report = sz::compare_engines(model.scheme, model, c, sz::Reference::DriftOde);
  EXPECT_TRUE(report.passed);
  EXPECT_LE(report.max_abs_mean_difference, 10 * c.dt);
  EXPECT_GT(report.max_abs_mean_difference, 0.0);
}

TEST(OutputTest, CsvHeadersAndRows) {
  auto s = sz::testing::lotka_volterra();
  sz::TrajectoryEnsemble e;
  e.times = {0.0, 0.5};
  e.trajectories = 2;
  e.dimension = 2;
  e.paths = {1, 2, 3, 4, 5, 6, 7, 8};
  e.clamp_events = {0, 0};
  std::ostringstream traj;
  sz::write_trajectories_csv(traj, s, e);
  EXPECT_EQ(traj.str(), "trajectory,t,x,y\n0,0,1,2\n0,0.5,3,4\n1,0,5,6\n1,0.5,7,8\n");

  std::ostringstream moments;
  sz::write_moments_csv(moments, s, sz::ensemble_moments(e));
  std::string header;
  std::istringstream in(moments.str());
  std::getline(in, header);
  EXPECT_EQ(header, "t,mean_x,mean_y,cov_x_x,cov_x_y,cov_y_x,cov_y_y,stderr_x,stderr_y");
  std::string row;
  std::getline(in, row);
  EXPECT_EQ(row, "0,3,4,8,8,8,8,2,2");

  std::ostringstream svg;
  sz::write_moments_svg(svg, s, sz::ensemble_moments(e));
  EXPECT_EQ(svg.str().rfind("<svg", 0), 0u);
  EXPECT_NE(svg.str().find("</svg>"), std::string::npos);
}
