#include <doctest.h>

#include <cmath>
#include <vector>

#include "granulab/core/digest.hpp"
#include "granulab/core/nelder_mead.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/core/stats_util.hpp"
#include "granulab/core/text.hpp"

using namespace granulab;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);
}

TEST_CASE("uniform01 stays in range and fills it") {
  Rng r(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("normal variates have the right first moments") {
  Rng r(11);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    s += x;
    s2 += x * x;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("gamma variates match the target mean and variance") {
  // shape k, scale s: mean k*s, variance k*s^2
  Rng r(13);
  const int n = 200000;
  const double shape = 2.5, scale = 0.4;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.gamma(shape, scale);
    s += x;
    s2 += x * x;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  CHECK(mean == doctest::Approx(shape * scale).epsilon(0.02));
  CHECK(var == doctest::Approx(shape * scale * scale).epsilon(0.05));
}

TEST_CASE("gamma rejects bad arguments") {
  Rng r(1);
  CHECK_THROWS_AS(r.gamma(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(r.gamma(1.0, -1.0), ValidationError);
}

TEST_CASE("mix_seed decorrelates child streams") {
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != 0);
  CHECK(mix_seed(5, 1, 2) != mix_seed(5, 2, 1));
}

TEST_CASE("quantiles interpolate like the standard linear definition") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
  CHECK(iqr_sorted(v) == doctest::Approx(3.25 - 1.75));
}

TEST_CASE("population stddev and kurtosis on known data") {
  std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  CHECK(mean_of(v) == doctest::Approx(5.0));
  CHECK(stddev_pop(v) == doctest::Approx(2.0));  // classic hand-computable set
  std::vector<double> flat{3.0, 3.0, 3.0};
  CHECK(kurtosis_of(flat) == 0.0);
  // symmetric two-point distribution has kurtosis exactly 1
  std::vector<double> two{-1.0, 1.0, -1.0, 1.0};
  CHECK(kurtosis_of(two) == doctest::Approx(1.0));
}

TEST_CASE("nelder-mead finds a quadratic minimum") {
  auto f = [](const std::vector<double>& x) {
    double a = x[0] - 3.0, b = x[1] + 1.0;
    return a * a + 2.0 * b * b + 5.0;
  };
  auto res = nelder_mead(f, {0.0, 0.0}, {0.5, 0.5});
  CHECK(res.x[0] == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(res.x[1] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(res.fval == doctest::Approx(5.0));
}

TEST_CASE("nelder-mead handles rosenbrock from a poor start") {
  auto f = [](const std::vector<double>& x) {
    double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  NelderMeadOptions opt;
  opt.max_evaluations = 20000;
  auto res = nelder_mead(f, {-1.2, 1.0}, {0.1, 0.1}, opt);
  CHECK(res.fval < 1e-8);
}

TEST_CASE("double formatting round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 123456789.123456789}) {
    CHECK(parse_double(format_double(v)) == v);
  }
}

TEST_CASE("csv splitting trims and keeps empty cells") {
  auto cells = split_csv_line("a, b ,,d");
  REQUIRE(cells.size() == 4);
  CHECK(cells[0] == "a");
  CHECK(cells[1] == "b");
  CHECK(cells[2] == "");
  CHECK(cells[3] == "d");
}

TEST_CASE("line splitting handles trailing newline and CRLF") {
  auto lines = split_lines("one\r\ntwo\nthree\n");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "one");
  CHECK(lines[1] == "two");
  CHECK(lines[2] == "three");
}

TEST_CASE("fnv1a64 matches known vectors") {
  // reference values for the 64-bit FNV-1a test strings
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xdeadbeefULL) == "00000000deadbeef");
}
