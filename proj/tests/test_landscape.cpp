#include "qpot/dynsys.hpp"
#include "qpot/landscape.hpp"
#include "qpot/trainer.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace qpot;
using Catch::Approx;

namespace {

// On the linear system the zero network is exact: V = |x|^2, l = 0.
QuasipotentialModel exact_ou() {
  const SystemSpec ou = ou_system();
  return bind_model(nn::NetParams(nn::NetArch{}), ou, NoiseParams{});
}

double lyapunov_residual(const SystemSpec& sys, const NoiseParams& n, const StateVec& x) {
  const Mat2 H = hessian_riccati(sys, n, x);
  const Mat2 M = H.inverse();
  const Mat2 Q = -sys.jacobian(x);
  return (M * Q.transpose() + Q * M - sys.diffusion(x, n)).norm();
}

}  // namespace

TEST_CASE("Riccati Hessian at the vegetated state") {
  const SystemSpec sys = vegetation_system();
  const NoiseParams n = noise_case("i");
  const auto bs = bistable_structure(sys.params).value();
  const Mat2 H = hessian_riccati(sys, n, bs.vegetated.location);
  CHECK(H(0, 0) == Approx(0.0543).margin(1e-3));
  CHECK(H(0, 1) == Approx(0.0608).margin(1e-3));
  CHECK(H(1, 0) == Approx(0.0608).margin(1e-3));
  CHECK(H(1, 1) == Approx(2.9133).margin(1e-3));
  CHECK(H.determinant() == Approx(0.1546).margin(5e-4));
  CHECK(lyapunov_residual(sys, n, bs.vegetated.location) < 1e-12);
}

TEST_CASE("Riccati Hessian at the saddle") {
  const SystemSpec sys = vegetation_system();
  const NoiseParams n = noise_case("i");
  const auto bs = bistable_structure(sys.params).value();
  const Mat2 H = hessian_riccati(sys, n, bs.saddle.location);
  CHECK(H(0, 0) == Approx(-0.0446).margin(1e-3));
  CHECK(H(0, 1) == Approx(0.4228).margin(1e-3));
  CHECK(H(1, 1) == Approx(1.3305).margin(1e-3));
  CHECK(H.determinant() == Approx(-0.238).margin(1e-3));
  CHECK(lyapunov_residual(sys, n, bs.saddle.location) < 1e-12);
}

TEST_CASE("Riccati Hessian of the linear system") {
  const SystemSpec ou = ou_system();
  CHECK(hessian_riccati(ou, NoiseParams{}, StateVec::Zero()).isApprox(2.0 * Mat2::Identity()));
}

TEST_CASE("Riccati Hessian solves the trace identity behind F at fixed points") {
  // tr(a H) = 2 tr(-grad b) follows from the Lyapunov relation.
  const SystemSpec sys = vegetation_system();
  for (const char* c : {"i", "ii", "iii"}) {
    const NoiseParams n = noise_case(c);
    const auto bs = bistable_structure(sys.params).value();
    for (const StateVec& x : {bs.vegetated.location, bs.saddle.location}) {
      const Mat2 H = hessian_riccati(sys, n, x);
      CHECK((sys.diffusion(x, n) * H).trace() == Approx(-2.0 * sys.jacobian(x).trace()).epsilon(1e-10));
    }
  }
}

TEST_CASE("exact surrogate on the linear system") {
  const QuasipotentialModel m = exact_ou();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const StateVec x(u(rng), u(rng));
    CHECK(m.V(x) == Approx(x.squaredNorm()).margin(1e-15));
    CHECK((m.gradV(x) - 2.0 * x).norm() < 1e-14);
    CHECK(m.l(x).isZero());
    CHECK(m.decomposition_residual(x) < 1e-14);
    CHECK(m.F(x) == 0.0);
    CHECK((m.hessV(x) - 2.0 * Mat2::Identity()).norm() < 1e-8);
  }
  CHECK(m.V(StateVec(1.0, 1.0)) == Approx(2.0));
}

TEST_CASE("boundary quantities on the linear system") {
  const QuasipotentialModel m = exact_ou();
  const LineArgmin am = boundary_argmin_line(m, 1.0, -1.0, 1.0);
  CHECK(am.point(0) == 1.0);
  CHECK(am.point(1) == Approx(0.0).margin(1e-8));
  CHECK_FALSE(am.at_endpoint);
  CHECK(std::abs(m.gradV(am.point)(1)) <= 1e-4);
  CHECK(line_exterior_normal(m, 1.0).isApprox(Vec2(1.0, 0.0)));
  CHECK(line_exterior_normal(m, -1.0).isApprox(Vec2(-1.0, 0.0)));
  CHECK(mu_star(m, am.point) == Approx(1.0).epsilon(1e-10));
  CHECK(det_h_star(m, am.point) == Approx(2.0).epsilon(1e-6));

  const LineArgmin edge = boundary_argmin_line(m, 1.0, 0.5, 1.0);
  CHECK(edge.at_endpoint);
}

TEST_CASE("field grid") {
  const QuasipotentialModel m = exact_ou();
  const auto rows = evaluate_grid(m, Box{-1.0, 1.0, -0.5, 0.5}, 5, 3);
  REQUIRE(rows.size() == 15);
  double x1lo = 1e9, x1hi = -1e9, x2lo = 1e9, x2hi = -1e9;
  for (const auto& r : rows) {
    x1lo = std::min(x1lo, r.x1);
    x1hi = std::max(x1hi, r.x1);
    x2lo = std::min(x2lo, r.x2);
    x2hi = std::max(x2hi, r.x2);
    CHECK(r.V == Approx(r.x1 * r.x1 + r.x2 * r.x2));
  }
  CHECK(x1lo == -1.0);
  CHECK(x1hi == 1.0);
  CHECK(x2lo == -0.5);
  CHECK(x2hi == 0.5);
}
