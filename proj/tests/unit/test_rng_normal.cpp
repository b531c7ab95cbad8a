#include <cmath>
#include <vector>

#include "doctest.h"
#include "stms/normal.hpp"
#include "stms/rng.hpp"
#include "stms/stats.hpp"

using namespace stms;

TEST_CASE("philox known answer, all-zero input") {
  const auto out = RngStream::philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("philox known answer, all-ones input") {
  const auto out = RngStream::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                         {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);
}

TEST_CASE("streams are reproducible and substreams distinct") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  int same = 0;
  RngStream a2(42, 3);
  for (int i = 0; i < 64; ++i) same += a2.next_u32() == c.next_u32();
  CHECK(same < 8);

  RngStream s1 = RngStream(7, 0).substream(12);
  RngStream s2 = RngStream(7, 0).substream(12);
  RngStream s3 = RngStream(7, 0).substream(13);
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(s1.next_u64() != s3.next_u64());
}

TEST_CASE("uniforms lie in (0,1) with the right moments") {
  RngStream r(1, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(std::fabs(s / n - 0.5) < 0.005);
  CHECK(std::fabs(s2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("normal draws pass a KS test against Phi") {
  RngStream r(11, 0);
  std::vector<double> x(20000);
  for (double& v : x) v = r.normal();
  const double d = ks_statistic(x, [](double t) { return norm_cdf(t); });
  CHECK(ks_pvalue(d, x.size()) > 0.01);
}

TEST_CASE("frechet draws have CDF exp(-1/z)") {
  RngStream r(13, 0);
  std::vector<double> x(20000);
  for (double& v : x) v = r.frechet();
  const double d = ks_statistic(x, [](double t) { return std::exp(-1.0 / t); });
  CHECK(ks_pvalue(d, x.size()) > 0.01);
}

TEST_CASE("norm_cdf matches std::erfc everywhere") {
  for (double x = -37.0; x <= 8.0; x += 0.01) {
    const double ref = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double got = norm_cdf(x);
    CHECK(std::fabs(got - ref) <= 1e-14 + 1e-13 * ref);
  }
}

TEST_CASE("norm_quantile inverts norm_cdf") {
  // Above x ~ 5 the CDF is within 1e-11 of 1 and the double representation
  // of p caps the attainable inverse accuracy.
  for (double x = -8.0; x <= 5.0; x += 0.05) {
    CHECK(norm_quantile(norm_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
  }
  for (double x = 5.0; x <= 7.0; x += 0.1) {
    CHECK(norm_quantile(norm_cdf(x)) == doctest::Approx(x).epsilon(1e-4));
  }
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("bvn_cdf against the arcsine closed form at the origin") {
  for (double rho : {-0.95, -0.5, 0.0, 0.3, 0.7, 0.95}) {
    const double expect = 0.25 + std::asin(rho) / (2.0 * 3.14159265358979323846);
    CHECK(bvn_cdf(0.0, 0.0, rho) == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(bvn_cdf(1.0, -0.5, 0.0) ==
        doctest::Approx(norm_cdf(1.0) * norm_cdf(-0.5)).epsilon(1e-11));
}

TEST_CASE("mvn_cdf: independence products and the rho=1/2 orthant") {
  Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd b(3);
  b << 0.3, -0.2, 1.1;
  const double expect = norm_cdf(0.3) * norm_cdf(-0.2) * norm_cdf(1.1);
  CHECK(mvn_cdf(b, I3) == doctest::Approx(expect).epsilon(2e-4));

  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(3, 3, 0.5);
  C.diagonal().setOnes();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
  CHECK(mvn_cdf(z, C) == doctest::Approx(0.25).epsilon(2e-3));
}
