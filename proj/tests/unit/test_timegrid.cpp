#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "semicomp/errors.hpp"
#include "semicomp/timegrid.hpp"

using namespace semicomp;

namespace {

SubjectRecord rec(double entry, double t1, bool d1, double t2, bool d2) {
  SubjectRecord r;
  r.id = "s";
  r.entry = entry;
  r.t1 = t1;
  r.d1 = d1;
  r.t2 = t2;
  r.d2 = d2;
  return r;
}

struct Cell {
  int k, y1_prev, y1, y2;
};

void check_cells(const SubjectPath& p, const std::vector<Cell>& want) {
  REQUIRE(p.observations.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(p.observations[i].k == want[i].k);
    CHECK(p.observations[i].y1_prev == want[i].y1_prev);
    CHECK(p.observations[i].y1 == want[i].y1);
    CHECK(p.observations[i].y2 == want[i].y2);
  }
}

}  // namespace

TEST_CASE("partition validation") {
  CHECK_THROWS_AS(Partition({0.0, 1.0}), ConfigurationError);
  CHECK_THROWS_AS(Partition({0.0, 1.0, 1.0}), ConfigurationError);
  CHECK_THROWS_AS(Partition({0.0, 2.0, 1.0}), ConfigurationError);
  CHECK_THROWS_AS(Partition({0.0, NAN, 1.0}), ConfigurationError);
  CHECK_THROWS_AS(Partition::equally_spaced(0.0, 0.0, 3), ConfigurationError);
  const auto p = testutil::width5_partition();
  CHECK(p.num_intervals() == 7);
  CHECK(p.end() == 100.0);
  CHECK(p.first_cut_above(66.0) == 1);
  CHECK(p.first_cut_above(70.0) == 2);
  CHECK(p.first_cut_above(100.0) == 8);
  CHECK(p.interval_containing(70.0) == 1);
  CHECK(p.interval_containing(70.5) == 2);
  CHECK(p.last_cut_at_or_below(73.0) == 1);
  CHECK(p.last_cut_at_or_below(64.0) == -1);
}

TEST_CASE("both events in the second interval") {
  const auto path = discretize(rec(66, 72, true, 72, true), testutil::width5_partition(), CensorMode::DropPartial);
  CHECK(path.k_entry == 1);
  CHECK(path.k_exit == 2);
  check_cells(path, {{1, 0, 0, 0}, {2, 0, 1, 1}});
}

TEST_CASE("censored subject drops the partial final interval") {
  const auto path = discretize(rec(65, 73, false, 73, false), testutil::width5_partition(), CensorMode::DropPartial);
  CHECK(path.k_entry == 1);
  CHECK(path.k_exit == 1);
  check_cells(path, {{1, 0, 0, 0}});
}

TEST_CASE("round_up scores the partial interval as event-free") {
  const auto path = discretize(rec(65, 73, false, 73, false), testutil::width5_partition(), CensorMode::RoundUp);
  CHECK(path.k_exit == 2);
  check_cells(path, {{1, 0, 0, 0}, {2, 0, 0, 0}});
}

TEST_CASE("non-terminal then terminal event") {
  const auto path = discretize(rec(66, 71, true, 83, true), testutil::width5_partition(), CensorMode::DropPartial);
  check_cells(path, {{1, 0, 0, 0}, {2, 0, 1, 0}, {3, 1, 1, 0}, {4, 1, 1, 1}});
}

TEST_CASE("events on cut-points belong to the interval they close") {
  const auto p = testutil::width5_partition();
  const auto path = discretize(rec(65, 70, true, 75, true), p, CensorMode::DropPartial);
  check_cells(path, {{1, 0, 1, 0}, {2, 1, 1, 1}});
  // Entry exactly on tau_1: first interval is (70, 75].
  const auto late = discretize(rec(70, 80, false, 80, false), p, CensorMode::DropPartial);
  CHECK(late.k_entry == 2);
  check_cells(late, {{2, 0, 0, 0}, {3, 0, 0, 0}});
}

TEST_CASE("censoring before the first cut contributes nothing") {
  const auto path = discretize(rec(66, 68, false, 68, false), testutil::width5_partition(), CensorMode::DropPartial);
  CHECK_FALSE(path.contributes());
}

TEST_CASE("domain errors") {
  const auto p = testutil::width5_partition();
  CHECK_THROWS_WITH_AS(discretize(rec(60, 70, false, 70, false), p, CensorMode::DropPartial),
                       doctest::Contains("entry precedes partition origin"), DataError);
  CHECK_THROWS_WITH_AS(discretize(rec(66, 101, false, 101, true), p, CensorMode::DropPartial),
                       doctest::Contains("event beyond partition"), DataError);
  CHECK_THROWS_AS(validate(rec(70, 68, false, 75, false)), DataError);
  CHECK_THROWS_AS(validate(rec(70, 70, true, 75, true)), DataError);
  CHECK_THROWS_AS(validate(rec(70, 72, false, 71, false)), DataError);
}

TEST_CASE("administrative clipping") {
  const auto p = testutil::width5_partition();
  const auto r = clip_to_partition(rec(66, 98, true, 103, true), p);
  CHECK(r.t2 == 100.0);
  CHECK_FALSE(r.d2);
  CHECK(r.d1);
  const auto r2 = clip_to_partition(rec(66, 102, true, 103, true), p);
  CHECK_FALSE(r2.d1);
  CHECK(r2.t1 == 100.0);
  const auto path = discretize(r, p, CensorMode::DropPartial);
  CHECK(path.k_exit == 7);
  CHECK(path.observations.back().y1 == 1);
  CHECK(path.observations.back().y2 == 0);
}

TEST_CASE("time-varying covariates are carried forward") {
  auto r = rec(65, 90, false, 90, false);
  r.baseline = {{"female", 1.0}, {"widowed", 0.0}};
  r.time_varying[3] = {{"widowed", 1.0}};
  r.time_varying[5] = {{"bmi", 27.0}};
  CHECK(covariates_at(r, 2).at("widowed") == 0.0);
  CHECK(covariates_at(r, 3).at("widowed") == 1.0);
  CHECK(covariates_at(r, 4).at("widowed") == 1.0);
  CHECK(covariates_at(r, 6).at("bmi") == 27.0);
  CHECK(covariates_at(r, 6).at("female") == 1.0);
  const auto path = discretize(r, testutil::width5_partition(), CensorMode::DropPartial);
  CHECK(path.observations[1].covariates.at("widowed") == 0.0);
  CHECK(path.observations[2].covariates.at("widowed") == 1.0);
}

TEST_CASE("path invariants over random records") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto p = Partition::equally_spaced(0.0, 1.0, 12);
  for (int rep = 0; rep < 2000; ++rep) {
    const double entry = 6.0 * u(rng);
    const double t2 = entry + (12.0 - entry) * u(rng);
    const bool d2 = u(rng) < 0.6 && t2 > entry;
    const bool d1 = u(rng) < 0.5 && t2 > entry;
    const double t1 = d1 ? entry + (t2 - entry) * std::max(u(rng), 1e-3) : t2;
    auto r = rec(entry, t1, d1, t2, d2);
    if (r.d1 && r.t1 <= r.entry) continue;
    for (auto mode : {CensorMode::DropPartial, CensorMode::RoundUp}) {
      const auto path = discretize(r, p, mode);
      int y1_prev = 0;
      for (size_t i = 0; i < path.observations.size(); ++i) {
        const auto& o = path.observations[i];
        CHECK(o.k == path.k_entry + static_cast<int>(i));
        CHECK(o.y2_prev == 0);
        CHECK(o.y1_prev == y1_prev);
        CHECK(o.y1 >= o.y1_prev);
        if (o.y2 == 1) CHECK(i + 1 == path.observations.size());
        y1_prev = o.y1;
      }
      // Uncensored events land in the interval holding their time.
      if (d2) {
        REQUIRE(path.contributes());
        CHECK(path.k_exit == p.interval_containing(t2));
        CHECK(path.observations.back().y2 == 1);
      }
      if (d1) {
        const int k1 = p.interval_containing(t1);
        for (const auto& o : path.observations) CHECK(o.y1 == (o.k >= k1 ? 1 : 0));
      }
    }
  }
}

TEST_CASE("refining the partition nests event intervals") {
  const auto coarse = Partition::equally_spaced(0.0, 2.0, 6);
  const auto fine = Partition::equally_spaced(0.0, 1.0, 12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 12.0);
  for (int i = 0; i < 500; ++i) {
    const double t = u(rng);
    const int kc = coarse.interval_containing(t);
    const int kf = fine.interval_containing(t);
    CHECK((kf + 1) / 2 == kc);
  }
}
