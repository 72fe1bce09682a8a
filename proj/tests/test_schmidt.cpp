#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfwm/errors.hpp"
#include "sfwm/pump_jsa.hpp"
#include "sfwm/schmidt.hpp"
#include "support/property.hpp"

using namespace sfwm;
using namespace sfwm::schmidt;
using cplx = std::complex<double>;

namespace {

jsa::SpectralGrid small_grid(int points = 128) {
  return {jsa::SpectralAxis({676.0, 20.0, points}), jsa::SpectralAxis({790.0, 28.0, points})};
}

// Gaussian amplitude with principal widths A, B along (1,1)/sqrt2 and (1,-1)/sqrt2.
// Its Schmidt weights are geometric with ratio ((A-B)/(A+B))^2 and purity 2AB/(A^2+B^2).
jsa::JointSpectralAmplitude mehler(const jsa::SpectralGrid& g, double a, double b) {
  const double s0 = 0.5 * (g.signal.omega().front() + g.signal.omega().back());
  const double i0 = 0.5 * (g.idler.omega().front() + g.idler.omega().back());
  return jsa::jsa_from_function(g, [&](double ws, double wi) {
    const double x = ws - s0, y = wi - i0;
    const double u = (x + y) / std::sqrt(2.0), v = (x - y) / std::sqrt(2.0);
    return cplx(std::exp(-0.5 * (u * u / (a * a) + v * v / (b * b))));
  });
}

// Random JSA with a prescribed Schmidt spectrum: orthonormal columns from QR.
jsa::JointSpectralAmplitude synthetic(const jsa::SpectralGrid& g, const std::vector<double>& c,
                                      testing::Gen& gen) {
  const int ns = g.signal.size(), ni = g.idler.size(), m = static_cast<int>(c.size());
  auto random_unitary_cols = [&](int rows) {
    Eigen::MatrixXcd x(rows, m);
    for (int r = 0; r < rows; ++r)
      for (int k = 0; k < m; ++k) x(r, k) = cplx(gen.normal(), gen.normal());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(x);
    return Eigen::MatrixXcd(qr.householderQ() * Eigen::MatrixXcd::Identity(rows, m));
  };
  const Eigen::MatrixXcd u = random_unitary_cols(ns), v = random_unitary_cols(ni);
  Eigen::VectorXd cv(m);
  for (int k = 0; k < m; ++k) cv[k] = c[k];
  jsa::JointSpectralAmplitude f{g, u * cv.asDiagonal() * v.transpose()};
  f.normalize();
  return f;
}

}  // namespace

TEST_CASE("separable amplitude has a single Schmidt mode") {
  const auto g = small_grid();
  const auto f = jsa::jsa_from_function(g, [&](double ws, double wi) {
    return cplx(std::exp(-std::pow((ws - 2786.0) / 5, 2)) * std::exp(-std::pow((wi - 2384.0) / 7, 2)),
                0.0) * std::polar(1.0, 0.01 * ws - 0.02 * wi);
  });
  const auto r = decompose(f);
  CHECK(r.retained_modes == 1);
  CHECK(r.coefficients[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.purity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.schmidt_number == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(predicted_autocorrelation(r) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Gaussian amplitude reproduces the closed-form Schmidt spectrum") {
  const auto g = small_grid(256);
  testing::for_all(41, 8, [&](testing::Gen& gen, int k) {
    CAPTURE(k);
    const double a = gen.uniform(2.0, 6.0), b = gen.uniform(1.0, 2.0);
    const auto r = decompose(mehler(g, a, b));
    CHECK(std::abs(r.purity - 2 * a * b / (a * a + b * b)) < 1e-6);
    const double q = std::pow((a - b) / (a + b), 2);
    for (int m = 1; m < 4; ++m)
      CHECK(std::pow(r.coefficients[m] / r.coefficients[m - 1], 2) == doctest::Approx(q).epsilon(1e-6));
  });
}

TEST_CASE("prescribed Schmidt spectra are recovered") {
  const auto g = small_grid(96);
  testing::for_all(42, 10, [&](testing::Gen& gen, int k) {
    CAPTURE(k);
    const int m = gen.integer(1, 8);
    std::vector<double> c(m);
    for (double& x : c) x = gen.uniform(0.05, 1.0);
    const double norm = std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
    for (double& x : c) x /= norm;
    std::sort(c.rbegin(), c.rend());
    const auto r = decompose(synthetic(g, c, gen));
    REQUIRE(r.retained_modes == m);
    double p = 0;
    for (int j = 0; j < m; ++j) {
      CHECK(r.coefficients[j] == doctest::Approx(c[j]).epsilon(1e-9));
      p += std::pow(c[j], 4);
    }
    CHECK(r.purity == doctest::Approx(p).epsilon(1e-10));
    CHECK(purity_gram(synthetic(g, c, gen)) == doctest::Approx(p).epsilon(1e-10));
  });
}

TEST_CASE("Schmidt result invariants on the reference source") {
  jsa::PumpSpec pump;
  const phasematch::WaveguideSpec spec;
  const auto grid = jsa::make_phasematched_grid(pump, spec, 256, 20.0, 28.0, false);
  const auto f = jsa::build_jsa(grid, pump, spec);
  const auto r = decompose(f);

  CHECK(r.coefficients.squaredNorm() == doctest::Approx(1.0).epsilon(1e-9));
  for (Eigen::Index m = 1; m < r.coefficients.size(); ++m)
    CHECK(r.coefficients[m] <= r.coefficients[m - 1]);
  CHECK(r.coefficients.minCoeff() >= 0.0);
  CHECK(r.purity > 0.0);
  CHECK(r.purity <= 1.0);
  CHECK(r.schmidt_number >= 1.0);

  const double ds = grid.signal.step(), di = grid.idler.step();
  const Eigen::MatrixXcd gs = r.signal_modes.adjoint() * r.signal_modes * ds;
  const Eigen::MatrixXcd gi = r.idler_modes.adjoint() * r.idler_modes * di;
  const auto eye = Eigen::MatrixXcd::Identity(r.retained_modes, r.retained_modes);
  CHECK((gs - eye).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((gi - eye).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::MatrixXcd rebuilt = reconstruct(r);
  CHECK((rebuilt - f.amplitude).norm() * std::sqrt(ds * di) < 1e-5);

  for (int m = 0; m < r.retained_modes; ++m) {
    Eigen::Index peak = 0;
    r.signal_modes.col(m).cwiseAbs().maxCoeff(&peak);
    CHECK(std::abs(r.signal_modes(peak, m).imag()) < 1e-12);
    CHECK(r.signal_modes(peak, m).real() > 0.0);
  }

  CHECK(purity_gram(f) == doctest::Approx(r.purity).epsilon(1e-9));
  const auto no_modes = decompose(f, false);
  CHECK_FALSE(no_modes.has_modes());
  CHECK(no_modes.purity == doctest::Approx(r.purity).epsilon(1e-12));
}

TEST_CASE("reconstruction is exact when nothing is truncated") {
  const auto g = small_grid(80);
  testing::Gen gen(43, 0);
  const auto f = synthetic(g, {0.8, 0.5, 0.3316625}, gen);
  const auto r = decompose(f);
  CHECK((reconstruct(r) - f.amplitude).norm() * std::sqrt(g.signal.step() * g.idler.step()) < 1e-8);
}

TEST_CASE("purity is invariant under relabelling the grid") {
  const auto g = small_grid(96);
  testing::for_all(44, 5, [&](testing::Gen& gen, int k) {
    CAPTURE(k);
    const auto f = synthetic(g, {0.9, 0.4, 0.1732051}, gen);
    Eigen::PermutationMatrix<Eigen::Dynamic> ps(g.signal.size()), pi(g.idler.size());
    ps.setIdentity();
    pi.setIdentity();
    std::shuffle(ps.indices().data(), ps.indices().data() + ps.size(), gen.engine());
    std::shuffle(pi.indices().data(), pi.indices().data() + pi.size(), gen.engine());
    jsa::JointSpectralAmplitude permuted{g, ps * f.amplitude * pi};
    const auto a = decompose(f, false), b = decompose(permuted, false);
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-12);
  });
}

TEST_CASE("filtering a rank-one amplitude keeps it pure") {
  const auto g = small_grid(128);
  const auto f = jsa::jsa_from_function(g, [&](double ws, double wi) {
    return cplx(std::exp(-std::pow((ws - 2786.5) / 6, 2) - std::pow((wi - 2384.5) / 9, 2)));
  });
  const auto r = jsa::apply_filter(f, {jsa::Arm::Signal, jsa::TopHat{676.0, 3.0}});
  CHECK(decompose(r.filtered).purity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncation threshold removes negligible weight") {
  jsa::PumpSpec pump;
  const phasematch::WaveguideSpec spec;
  const auto f = jsa::build_jsa(jsa::make_phasematched_grid(pump, spec, 128, 20.0, 28.0, false), pump, spec);
  const Eigen::MatrixXcd m = f.amplitude * std::sqrt(f.grid.signal.step() * f.grid.idler.step());
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXcd>(m).singularValues();
  const double full = (sv.array() / sv.norm()).pow(4).sum();
  const auto r = decompose(f, false);
  CHECK(r.retained_modes < sv.size());
  CHECK(std::abs(r.purity - full) < 1e-6);
}

TEST_CASE("all-zero input cannot be decomposed") {
  const auto g = small_grid(64);
  jsa::JointSpectralAmplitude f{g, Eigen::MatrixXcd::Zero(64, 64)};
  CHECK_THROWS_AS(decompose(f), NumericalError);
  CHECK_THROWS_AS(purity_gram(f), NumericalError);
}

TEST_CASE("autocorrelation predictions") {
  CHECK(predicted_autocorrelation(1.0) == 2.0);
  for (int m : {1, 2, 5, 50, 1000}) CHECK(predicted_autocorrelation(1.0 / m) == doctest::Approx(1.0 + 1.0 / m));
  CHECK(predicted_autocorrelation(0.98) == doctest::Approx(1.98));
  CHECK(purity_from_g2(1.86) == doctest::Approx(0.86));
  CHECK(purity_from_g2(2.0) == 1.0);
  CHECK(purity_from_g2(1.0) == 0.0);
  CHECK_THROWS_AS(purity_from_g2(0.97), DomainError);
  CHECK_THROWS_AS(purity_from_g2(2.01), DomainError);
  testing::for_all(45, 100, [](testing::Gen& g, int k) {
    CAPTURE(k);
    const double p = g.uniform(0.0, 1.0);
    CHECK(purity_from_g2(predicted_autocorrelation(p)) == doctest::Approx(p).epsilon(1e-12));
  });
}

TEST_CASE("Cauchy-Schwarz test") {
  SUBCASE("measured values") {
    const auto cs = cauchy_schwarz_violation(73.5, 1.82, 1.26, 1.1, 0.03, 0.02);
    const double v = 73.5 * 73.5 - 1.82 * 1.26;
    const double sd = std::sqrt(std::pow(2 * 73.5 * 1.1, 2) + std::pow(1.26 * 0.03, 2) + std::pow(1.82 * 0.02, 2));
    CHECK(cs.violated);
    CHECK(cs.violation == doctest::Approx(v));
    CHECK(cs.margin_sigma == doctest::Approx(v / sd).epsilon(1e-12));
    CHECK(cs.margin_sigma == doctest::Approx(33.4).epsilon(0.01));
  }
  SUBCASE("coherent fields sit on the boundary") {
    const auto cs = cauchy_schwarz_violation(1.0, 1.0, 1.0, 0.01, 0.01, 0.01);
    CHECK_FALSE(cs.violated);
    CHECK(cs.violation == 0.0);
  }
  SUBCASE("negative input rejected") {
    CHECK_THROWS_AS(cauchy_schwarz_violation(-1.0, 1.0, 1.0, 0.0, 0.0, 0.0), DomainError);
  }
}
