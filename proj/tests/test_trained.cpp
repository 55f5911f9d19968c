// Properties of the trained checkpoints under models/. Monte Carlo
// cross-checks against these models live in the acceptance binary.
#include "trained_models.hpp"

#include "qpot/dynsys.hpp"
#include "qpot/exit.hpp"
#include "qpot/landscape.hpp"
#include "qpot/paths.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

using namespace qpot;
using Catch::Approx;

namespace {

const TrainedModel* model_or_skip(const std::string& name) {
  static std::map<std::string, std::optional<TrainedModel>> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, testing::cached_model(name)).first;
  if (!it->second) SKIP("no finished checkpoint for " << name);
  return &*it->second;
}

const BistableStructure& structure() {
  static const BistableStructure bs = bistable_structure(SystemParams{}).value();
  return bs;
}

// Learned path into the saddle, shared by several cases.
const Path& saddle_path(const QuasipotentialModel& m) {
  static std::map<const QuasipotentialModel*, Path> cache;
  auto it = cache.find(&m);
  if (it == cache.end()) it = cache.emplace(&m, mpp_reverse(m, structure().saddle.location)).first;
  return it->second;
}

}  // namespace

TEST_CASE("quasipotential at the reference point") {
  const auto& m = model_or_skip("vegetation_i")->model;
  CHECK(std::abs(m.V(m.reference())) <= 1e-3);
  CHECK(m.gradV(m.reference()).norm() <= 0.05);
  CHECK(m.decomposition_residual(m.reference()) <= 1e-2);
}

TEST_CASE("quasipotential values at the saddle and on the line x1 = 3") {
  const auto& m = model_or_skip("vegetation_i")->model;
  CHECK(m.V(structure().saddle.location) == Approx(0.1643).epsilon(0.15));
  CHECK(m.V(StateVec(3.0, 1.0632)) == Approx(0.0691).epsilon(0.15));
}

TEST_CASE("decomposition residual over the basin") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const Separatrix sep = basin_separatrix(m.system());
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u1(1.0, 7.0), u2(0.0, 2.0);
  double sum = 0.0;
  int n = 0;
  while (n < 1000) {
    const StateVec x(u1(rng), u2(rng));
    if (basin_side(x, sep) != BasinSide::Interior) continue;
    sum += m.decomposition_residual(x);
    ++n;
  }
  CHECK(sum / n <= 1e-2);
}

TEST_CASE("transport integrand at fixed points") {
  const auto& m = model_or_skip("vegetation_i")->model;
  CHECK(std::abs(m.F(structure().vegetated.location)) <= 0.05);
  CHECK(std::abs(m.F(structure().saddle.location)) <= 0.1);
}

TEST_CASE("Hessian against second differences of the network") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const StateVec x = structure().vegetated.location + StateVec(0.05, -0.02);
  const double s = 1e-3;
  const auto f = [&](double a, double b) { return m.V(StateVec(x(0) + a, x(1) + b)); };
  Mat2 fd;
  fd(0, 0) = (f(s, 0) - 2 * f(0, 0) + f(-s, 0)) / (s * s);
  fd(1, 1) = (f(0, s) - 2 * f(0, 0) + f(0, -s)) / (s * s);
  fd(0, 1) = fd(1, 0) = (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4 * s * s);
  CHECK((m.hessV(x) - fd).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("boundary minimum on x1 = 3") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const LineArgmin am = boundary_argmin_line(m, 3.0, 0.0, 2.0);
  CHECK_FALSE(am.at_endpoint);
  CHECK(am.point(1) == Approx(1.0632).margin(0.03));
  CHECK(std::abs(m.gradV(am.point)(1)) <= 1e-4);
  const double mu = mu_star(m, am.point);
  CHECK(mu > 0.0);
  CHECK(mu == Approx(0.022).epsilon(0.30));
  const double dh = det_h_star(m, am.point);
  CHECK(dh > 0.0);
  CHECK(dh == Approx(2.2602).epsilon(0.20));
}

TEST_CASE("loss history") {
  const auto* tm = model_or_skip("vegetation_i");
  const auto& h = tm->checkpoint.state.history;
  REQUIRE(h.size() > 20);
  for (const auto& r : h) CHECK(std::isfinite(r.total));
  // 1000-epoch moving average over the final half.
  const std::int64_t every = tm->checkpoint.config.record_every;
  const std::size_t window = static_cast<std::size_t>(std::max<std::int64_t>(1, 1000 / every));
  std::vector<double> avg;
  for (std::size_t i = h.size() / 2; i + window <= h.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = i; k < i + window; ++k) s += h[k].total;
    avg.push_back(s / window);
  }
  int rises = 0;
  for (std::size_t i = 1; i < avg.size(); ++i) rises += avg[i] > avg[i - 1];
  CHECK(rises == 0);
}

TEST_CASE("linear-system regression") {
  const auto& m = model_or_skip("ou")->model;
  double worst = 0.0, l_sum = 0.0;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const StateVec x(-1.0 + 0.1 * i, -1.0 + 0.1 * j);
      worst = std::max(worst, std::abs(m.V(x) - x.squaredNorm()) / (x.squaredNorm() + 0.1));
      l_sum += m.l(x).norm();
    }
  }
  CHECK(worst <= 0.05);
  CHECK(l_sum / 441.0 <= 0.02);
}

TEST_CASE("learned path to the saddle") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const Path& p = saddle_path(m);
  const double v = m.V(structure().saddle.location);
  CHECK(p.total_action() == Approx(v).epsilon(0.05));
  CHECK(p.total_action() == Approx(0.1643).epsilon(0.15));
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (!(p.t[i] > p.t[i - 1]) || p.action[i] < p.action[i - 1]) FAIL("path samples out of order at " << i);
  }
  const Path shot = shooting_mpp(m.system(), m.noise(), structure().saddle.location);
  CHECK(path_distance(p, shot) <= 0.05);
  CHECK(moisture_dip_check(p).dips);
  CHECK(moisture_dip_check(p).dips == moisture_dip_check(shot).dips);
}

TEST_CASE("learned path to the boundary minimum") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const LineArgmin am = boundary_argmin_line(m, 3.0, 0.0, 2.0);
  const Path p = mpp_reverse(m, am.point);
  CHECK(p.total_action() == Approx(0.0691).epsilon(0.15));
  CHECK(p.total_action() == Approx(am.V).epsilon(0.05));
}

TEST_CASE("F integral along the saddle path") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const Path& coarse = saddle_path(m);
  ReverseOptions fine_opt;
  fine_opt.step *= 0.5;
  const Path fine = mpp_reverse(m, structure().saddle.location, fine_opt);
  const StateVec fixed_c[] = {m.reference(), coarse.x.front(), structure().saddle.location};
  const StateVec fixed_f[] = {m.reference(), fine.x.front(), structure().saddle.location};
  const double a = f_integral(coarse, m, fixed_c);
  const double b = f_integral(fine, m, fixed_f);
  CHECK(std::isfinite(a));
  CHECK(std::abs(a - b) <= 0.02 * std::abs(b));
  const double tight = f_integral(coarse, m, fixed_c, 1e-4);
  CHECK(std::abs(tight - a) <= 0.01 * std::abs(a));
}

TEST_CASE("characteristic exits take longer than line exits") {
  const auto& m = model_or_skip("vegetation_i")->model;
  const ExitAsymptotics a = case_a_asymptotics(m, 3.0);
  const ExitAsymptotics b = case_b_asymptotics(m, structure().saddle);
  CHECK(b.lambda_star == Approx(0.3721).margin(1e-3));
  CHECK(std::sqrt(std::abs(b.det_H_star) / b.det_H_bar) == Approx(1.2407).epsilon(0.01));
  for (int k = 2; k <= 10; ++k) {
    const double eps = 0.01 * k;
    CHECK(mfpt_case_b(eps, b) > mfpt_case_a(eps, a));
  }
}

TEST_CASE("noise-case exit time curves") {
  const auto& mi = model_or_skip("vegetation_i")->model;
  const auto& mii = model_or_skip("vegetation_ii")->model;
  const auto& miii = model_or_skip("vegetation_iii")->model;
  const ExitAsymptotics bi = case_b_asymptotics(mi, structure().saddle);
  const ExitAsymptotics bii = case_b_asymptotics(mii, structure().saddle);
  const ExitAsymptotics biii = case_b_asymptotics(miii, structure().saddle);
  for (int k = 2; k <= 10; ++k) {
    const double eps = 0.01 * k;
    CHECK(bii.mfpt(eps) > bi.mfpt(eps));
    CHECK(biii.mfpt(eps) > bi.mfpt(eps));
  }
}
