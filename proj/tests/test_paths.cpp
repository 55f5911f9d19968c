#include "qpot/dynsys.hpp"
#include "qpot/paths.hpp"
#include "qpot/trainer.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace qpot;
using Catch::Approx;

namespace {

QuasipotentialModel exact_ou() { return bind_model(nn::NetParams(nn::NetArch{}), ou_system(), NoiseParams{}); }

Path polyline(std::vector<StateVec> pts) {
  Path p;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    p.t.push_back(static_cast<double>(i));
    p.action.push_back(0.0);
  }
  p.x = std::move(pts);
  return p;
}

void check_path_invariants(const Path& p) {
  REQUIRE(p.size() == p.t.size());
  REQUIRE(p.size() == p.action.size());
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (!(p.t[i] > p.t[i - 1])) FAIL("time not strictly increasing at sample " << i);
    if (p.action[i] < p.action[i - 1] - 1e-15) FAIL("action decreasing at sample " << i);
  }
  CHECK(p.action.front() >= 0.0);
}

const Path& vegetation_saddle_shot() {
  static const Path path = [] {
    const SystemSpec sys = vegetation_system();
    const auto bs = bistable_structure(sys.params).value();
    return shooting_mpp(sys, noise_case("i"), bs.saddle.location);
  }();
  return path;
}

}  // namespace

TEST_CASE("learned path on the exact linear surrogate") {
  const QuasipotentialModel m = exact_ou();
  const Path p = mpp_reverse(m, StateVec(1.0, 0.0));
  check_path_invariants(p);
  double transverse = 0.0;
  for (const auto& x : p.x) transverse = std::max(transverse, std::abs(x(1)));
  CHECK(transverse <= 1e-3);
  CHECK(p.x.front().norm() <= 1e-3 + 1e-12);
  CHECK((p.x.back() - StateVec(1.0, 0.0)).norm() <= 1e-3 + 1e-12);
  // The path stops start_offset short of both ends; V(1 - 1e-3) - V(1e-3).
  CHECK(p.total_action() == Approx(1.0).epsilon(3e-3));
  CHECK(fw_action(p, m.system(), m.noise()) == Approx(p.total_action()).epsilon(1e-4));
}

TEST_CASE("learned path errors carry the closest approach") {
  // Ten steps cannot get back to the reference.
  const SystemSpec ou = ou_system();
  nn::NetParams p(nn::NetArch{2, 1, 2, 3});
  const QuasipotentialModel m = bind_model(p, ou, NoiseParams{});
  ReverseOptions opt;
  opt.max_steps = 10;
  try {
    mpp_reverse(m, StateVec(1.0, 0.0), opt);
    FAIL("expected a PathError");
  } catch (const PathError& e) {
    CHECK(e.closest_approach() > 0.9);
  }
}

TEST_CASE("launch map of the linear system") {
  const Mat2 P = launch_map(ou_system(), NoiseParams{}, StateVec::Zero());
  CHECK(P.isApprox(2.0 * Mat2::Identity(), 1e-10));
}

TEST_CASE("launch map equals the Riccati Hessian") {
  const SystemSpec sys = vegetation_system();
  const NoiseParams n = noise_case("i");
  const auto bs = bistable_structure(sys.params).value();
  const Mat2 P = launch_map(sys, n, bs.vegetated.location);
  const Mat2 H = hessian_riccati(sys, n, bs.vegetated.location);
  CHECK((P - H).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("shooting on the linear system") {
  const SystemSpec ou = ou_system();
  const NoiseParams n;
  const Path p = shooting_mpp(ou, n, StateVec(1.0, 0.0));
  check_path_invariants(p);
  CHECK(p.total_action() == Approx(1.0).margin(1e-3));
  CHECK((p.x.back() - StateVec(1.0, 0.0)).norm() < 1e-3);
  double worst_h = 0.0, worst_p = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    worst_h = std::max(worst_h, std::abs(hamiltonian(ou, n, p.x[i], p.p[i])));
    worst_p = std::max(worst_p, (p.p[i] - 2.0 * p.x[i]).norm());
  }
  CHECK(worst_h < 1e-6);
  CHECK(worst_p < 1e-6);
  CHECK(fw_action(p, ou, n) == Approx(p.total_action()).margin(1e-6));
}

TEST_CASE("characteristic conserves the Hamiltonian") {
  const SystemSpec sys = vegetation_system();
  const NoiseParams n = noise_case("i");
  const auto bs = bistable_structure(sys.params).value();
  const Mat2 P = launch_map(sys, n, bs.vegetated.location);
  const Path c = characteristic(sys, n, bs.vegetated.location, P, 2.5, ShootingOptions{}, 20.0);
  REQUIRE(c.size() > 10);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(hamiltonian(sys, n, c.x[i], c.p[i])) < 1e-8);
}

TEST_CASE("shooting to the saddle") {
  const SystemSpec sys = vegetation_system();
  const NoiseParams n = noise_case("i");
  const auto bs = bistable_structure(sys.params).value();
  const Path& p = vegetation_saddle_shot();
  check_path_invariants(p);
  CHECK((p.x.back() - bs.saddle.location).norm() < ShootingOptions{}.tolerance);
  CHECK(p.p.back().norm() <= 0.05);
  CHECK(p.total_action() == Approx(0.1643).epsilon(0.10));
  CHECK(fw_action(p, sys, n) == Approx(p.total_action()).epsilon(1e-4));
  const DipResult dip = moisture_dip_check(p);
  CHECK(dip.dips);
  CHECK(dip.point(1) < bs.vegetated.location(1));
}

TEST_CASE("shooting to the line x1 = 3") {
  const SystemSpec sys = vegetation_system();
  const NoiseParams n = noise_case("i");
  const LineShot s = shooting_line_minimum(sys, n, 3.0);
  CHECK(s.hit(0) == Approx(3.0).margin(1e-9));
  CHECK(s.hit(1) == Approx(1.0632).margin(0.03));
  CHECK(s.action == Approx(0.0691).epsilon(0.10));
  check_path_invariants(s.path);
  // The minimum over hit points: momentum is normal to the line there.
  CHECK(std::abs(s.path.p.back()(1)) < 1e-3);
}

TEST_CASE("Hausdorff distance") {
  const Path a = polyline({StateVec(0, 0), StateVec(0.5, 0.2), StateVec(1, 0)});
  CHECK(path_distance(a, a) == 0.0);
  Path b = a;
  for (auto& x : b.x) x += StateVec(0.1, 0.0);
  CHECK(path_distance(a, b) == Approx(0.1).margin(1e-3));
  const Path c = polyline({StateVec(0, 0), StateVec(1, 0)});
  const Path d = polyline({StateVec(0, 0), StateVec(0.5, 0.3), StateVec(1, 0)});
  CHECK(path_distance(c, d) == Approx(0.3).margin(1e-6));
  CHECK(path_distance(d, c) == Approx(0.3).margin(1e-6));
}

TEST_CASE("moisture dip on monotone and dipping paths") {
  const Path straight = polyline({StateVec(0, 0), StateVec(0.5, 0.0), StateVec(1, 0)});
  CHECK_FALSE(moisture_dip_check(straight).dips);
  const Path rising = polyline({StateVec(0, 0), StateVec(0.5, 0.2), StateVec(1, 0.4)});
  CHECK_FALSE(moisture_dip_check(rising).dips);
  const Path dipping = polyline({StateVec(4, 1), StateVec(3, 0.9), StateVec(2, 1.3)});
  const DipResult d = moisture_dip_check(dipping);
  CHECK(d.dips);
  CHECK(d.index == 1);
}

TEST_CASE("x2 at a given x1") {
  const Path p = polyline({StateVec(4, 1), StateVec(3, 0.9), StateVec(2, 1.3)});
  CHECK(x2_at(p, 3.5).value() == Approx(0.95));
  CHECK(x2_at(p, 2.5).value() == Approx(1.1));
  CHECK_FALSE(x2_at(p, 5.0).has_value());
}

TEST_CASE("path CSV layout") {
  const SystemSpec ou = ou_system();
  const Path p = shooting_mpp(ou, NoiseParams{}, StateVec(0.5, 0.0));
  const auto file = (std::filesystem::temp_directory_path() / "qpot_test_path.csv").string();
  write_path_csv(file, p, "# run: test\n");
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# run: test");
  std::getline(in, line);
  CHECK(line == "t,x1,x2,p1,p2,cumulative_action");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == p.size());
}
