#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <span>

#include "nhbt/coincidence.hpp"
#include "nhbt/selfcheck.hpp"

using namespace nhbt;

TEST_CASE("all self-checks pass with the production counter") {
  const auto results = run_selfchecks(1);
  REQUIRE(results.size() == 5);
  for (const auto& r : results) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed);
    CHECK(!r.name.empty());
  }
}

TEST_CASE("self-checks are seed-stable") {
  const auto a = run_selfchecks(7);
  const auto b = run_selfchecks(7);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].passed == b[i].passed);
    CHECK(a[i].detail == b[i].detail);
  }
}

TEST_CASE("the oracle check catches broken counters") {
  // off-by-one: drops one pair whenever anything matches
  const CountFn off_by_one = [](std::span<const double> a,
                                std::span<const double> b, double w,
                                double off) {
    const std::uint64_t n = count_coincidences(a, b, w, off);
    return n > 0 ? n - 1 : n;
  };
  CHECK_FALSE(check_oracle_equivalence(off_by_one, 1).passed);

  // open interval: misses exact window-edge lags
  const CountFn open_interval = [](std::span<const double> a,
                                   std::span<const double> b, double w,
                                   double off) {
    std::uint64_t n = 0;
    for (const double ta : a) {
      for (const double tb : b) {
        if (std::abs(ta - tb - off) < w) ++n;
      }
    }
    return n;
  };
  const auto r = check_oracle_equivalence(open_interval, 1);
  CHECK_FALSE(r.passed);
  CHECK(!r.detail.empty());

  const CountFn good = [](std::span<const double> a, std::span<const double> b,
                          double w, double off) {
    return count_coincidences(a, b, w, off);
  };
  CHECK(check_oracle_equivalence(good, 1).passed);
}

TEST_CASE("individual checks pass standalone") {
  CHECK(check_convolution_identity().passed);
  CHECK(check_generator_crosscheck(3).passed);
  CHECK(check_drift_correction_inverse(3).passed);
  CHECK(check_event_file_roundtrip(3).passed);
}
