#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <array>

#include "stftpr/linalg.hpp"

using namespace stftpr;
using testing::error_code;
using testing::random_hermitian;
using testing::random_signal;

TEST_CASE("Hermitian construction") {
  Eigen::MatrixXcd a(2, 2);
  a << cplx(1, 1e-14), cplx(2, 1), cplx(2, -1 + 1e-13), 3;
  const auto h = HermitianMatrix::from_entries(a, 1e-12);
  CHECK(h(0, 0).imag() == 0.0);
  CHECK(h(0, 1) == std::conj(h(1, 0)));
  a(1, 0) = cplx(5, 0);
  CHECK(error_code([&] { HermitianMatrix::from_entries(a); }) == Errc::kInvalidArgument);
}

TEST_CASE("eigendecomposition") {
  SUBCASE("identity") {
    const auto e = hermitian_eig(HermitianMatrix::identity(5));
    for (int k = 0; k < 5; ++k) CHECK(e.values[k] == doctest::Approx(1.0));
  }
  SUBCASE("rank one") {
    const Signal x = random_signal(7, 1);
    const auto e = hermitian_eig(HermitianMatrix::outer(x));
    CHECK(e.values[0] == doctest::Approx(x.values().squaredNorm()));
    for (int k = 1; k < 7; ++k) CHECK(std::abs(e.values[k]) <= 1e-12 * e.values[0]);
  }
  SUBCASE("random 8x8") {
    const auto a = HermitianMatrix::from_entries(random_hermitian(8, 2));
    const auto e = hermitian_eig(a);
    const double fro = a.frobenius_norm();
    const Eigen::MatrixXcd rec = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
    CHECK((rec - a.entries()).norm() <= 1e-9 * fro);
    CHECK((e.vectors.adjoint() * e.vectors - Eigen::MatrixXcd::Identity(8, 8)).norm() <= 1e-10);
    for (int k = 0; k < 8; ++k) {
      CHECK((a.entries() * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm() <= 1e-9 * fro);
      if (k > 0) CHECK(e.values[k] <= e.values[k - 1]);
    }
    CHECK(std::abs(e.values.sum() - a.trace()) <= 1e-10 * fro);
  }
  SUBCASE("warm start") {
    const auto a = HermitianMatrix::from_entries(random_hermitian(6, 3));
    const auto cold = hermitian_eig(a);
    const auto b = HermitianMatrix::symmetrized(a.entries() + 1e-6 * random_hermitian(6, 4));
    const auto warm = hermitian_eig(b, cold.vectors);
    const auto ref = hermitian_eig(b);
    CHECK((warm.values - ref.values).norm() <= 1e-10);
  }
}

TEST_CASE("PSD projection") {
  const auto psd = HermitianMatrix::outer(random_signal(5, 5));
  CHECK((psd_project(psd).entries() - psd.entries()).norm() <= 1e-10);
  CHECK(psd_project(HermitianMatrix::symmetrized(-Eigen::MatrixXcd::Identity(4, 4))).frobenius_norm() <= 1e-15);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = -2;
  const auto p = psd_project(HermitianMatrix::symmetrized(d));
  CHECK(std::abs(p(0, 0) - 3.0) <= 1e-12);
  CHECK(std::abs(p(1, 1)) <= 1e-12);

  const auto a = HermitianMatrix::from_entries(random_hermitian(7, 6));
  const auto once = psd_project(a);
  CHECK((psd_project(once).entries() - once.entries()).norm() <= 1e-12 * std::max(1.0, once.frobenius_norm()));
  const auto e = hermitian_eig(a);
  CHECK(std::abs(once.trace() - e.values.cwiseMax(0.0).sum()) <= 1e-10 * a.frobenius_norm());
  CHECK(hermitian_eig(once).values.minCoeff() >= -1e-12 * a.frobenius_norm());
}

TEST_CASE("best rank-one approximation") {
  const Signal x = random_signal(6, 7);
  CHECK(dist_mod_phase(x, best_rank_one(HermitianMatrix::outer(x)).x) <= 1e-24);

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 1;
  const auto r = best_rank_one(HermitianMatrix::symmetrized(d));
  CHECK(std::abs(r.x[0] - 2.0) <= 1e-12);
  CHECK(std::abs(r.x[1]) <= 1e-12);

  Eigen::MatrixXcd e = random_hermitian(6, 8);
  e /= e.norm();
  const auto noisy = HermitianMatrix::symmetrized(HermitianMatrix::outer(x).entries() + 1e-6 * e);
  CHECK(dist_mod_phase(x, best_rank_one(noisy).x) <= 1e-4);

  const auto neg = best_rank_one(HermitianMatrix::symmetrized(-Eigen::MatrixXcd::Identity(3, 3)));
  CHECK(neg.degenerate);
  CHECK(neg.x.norm() == 0.0);
}

TEST_CASE("rank-one band completion") {
  SUBCASE("N=8, B=2") {
    const Signal x = random_signal(8, 9);
    const auto full = HermitianMatrix::outer(x);
    const auto out = rank_one_band_completion(BandSamples::from_matrix(full, 2));
    CHECK((out.entries() - full.entries()).norm() <= 1e-9);
    const auto e = hermitian_eig(out);
    CHECK(e.values[1] <= 1e-8 * e.values[0]);
  }
  SUBCASE("N=2, B=1 already full") {
    const auto full = HermitianMatrix::outer(Signal{{1, 2}, {-0.5, 0.25}});
    CHECK((rank_one_band_completion(BandSamples::from_matrix(full, 1)).entries() - full.entries()).norm() <= 1e-14);
  }
  SUBCASE("zero diagonal") {
    const auto full = HermitianMatrix::outer(Signal{1, 0, 2, 3});
    CHECK(error_code([&] { rank_one_band_completion(BandSamples::from_matrix(full, 1)); }) == Errc::kNonCompletable);
  }
  SUBCASE("band not rank one") {
    const auto a = HermitianMatrix::symmetrized(HermitianMatrix::outer(random_signal(5, 10)).entries() +
                                                HermitianMatrix::outer(random_signal(5, 11)).entries());
    CHECK(error_code([&] { rank_one_band_completion(BandSamples::from_matrix(a, 2)); }) == Errc::kInconsistent);
  }
}

TEST_CASE("polynomial roots") {
  auto contains = [](const std::vector<cplx>& roots, cplx z, double tol) {
    for (auto r : roots)
      if (std::abs(r - z) <= tol) return true;
    return false;
  };
  SUBCASE("z^2 - 1") {
    const std::array<cplx, 3> c{-1, 0, 1};
    const auto r = polynomial_roots(c);
    REQUIRE(r.size() == 2);
    CHECK(contains(r, 1.0, 1e-12));
    CHECK(contains(r, -1.0, 1e-12));
  }
  SUBCASE("(z-2)(z-3)(z+i)") {
    // z^3 + (-5 + i) z^2 + (6 - 5i) z + 6i
    const std::array<cplx, 4> c{cplx(0, 6), cplx(6, -5), cplx(-5, 1), 1};
    const auto r = polynomial_roots(c);
    REQUIRE(r.size() == 3);
    CHECK(contains(r, 2.0, 1e-9));
    CHECK(contains(r, 3.0, 1e-9));
    CHECK(contains(r, cplx(0, -1), 1e-9));
  }
  SUBCASE("constant") {
    const std::array<cplx, 1> c{4};
    CHECK(polynomial_roots(c).empty());
  }
  SUBCASE("residual bound on a random degree-12 polynomial") {
    const Signal c = random_signal(13, 12);
    std::vector<cplx> coeffs(c.values().data(), c.values().data() + 13);
    const double cmax = c.values().cwiseAbs().maxCoeff();
    for (auto z : polynomial_roots(coeffs)) {
      cplx p = 0;
      for (int k = 12; k >= 0; --k) p = p * z + coeffs[static_cast<std::size_t>(k)];
      CHECK(std::abs(p) <= 1e-8 * cmax);
    }
  }
  SUBCASE("degree cap") {
    std::vector<cplx> c(18, 1.0);
    CHECK(error_code([&] { polynomial_roots(c); }) == Errc::kDegreeCap);
  }
}
