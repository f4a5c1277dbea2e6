#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "noisegrid/types.hpp"

using namespace noisegrid;

TEST_CASE("level_from_db rounds half away from zero") {
  CHECK(level_from_db(63.0103).mdb == 63010);
  CHECK(level_from_db(0.0).mdb == 0);
  CHECK(level_from_db(-0.00049).mdb == 0);
  CHECK(level_from_db(-0.0005).mdb == -1);  // half away from zero
  CHECK(level_from_db(0.0005).mdb == 1);
  CHECK(level_from_db(55.5).mdb == 55500);
  CHECK(level_from_db(119.9999).mdb == 120000);
}

TEST_CASE("level_from_db rejects bad input") {
  CHECK_THROWS_AS(level_from_db(std::nan("")), InvalidInput);
  CHECK_THROWS_AS(level_from_db(std::numeric_limits<double>::infinity()), InvalidInput);
  CHECK_THROWS_AS(level_from_db(-std::numeric_limits<double>::infinity()), InvalidInput);
  CHECK_THROWS_AS(level_from_db(3.0e6), InvalidInput);  // mdB beyond int32
}

TEST_CASE("level round-trips through db within half a millidecibel") {
  for (int mdb = -20000; mdb <= 130000; mdb += 7) {
    Level l{mdb};
    CHECK(level_from_db(l.db()).mdb == mdb);
  }
}

TEST_CASE("clamping to the sensor dynamic range") {
  CHECK(clamp_level(Level{31999}).mdb == 32000);
  CHECK(clamp_level(Level{32000}).mdb == 32000);
  CHECK(clamp_level(Level{120000}).mdb == 120000);
  CHECK(clamp_level(Level{120001}).mdb == 120000);
  CHECK(clamp_level(Level{64321}).mdb == 64321);
}

TEST_CASE("calibration applies after the raw reading, then clamps") {
  CHECK(apply_calibration(Level{64000}, Level{1500}).mdb == 65500);
  CHECK(apply_calibration(Level{119500}, Level{1000}).mdb == 120000);
  CHECK(apply_calibration(Level{32400}, Level{-1000}).mdb == 32000);
}

TEST_CASE("distance examples and triangle inequality") {
  CHECK(distance_m({0, 0}, {3, 4}) == doctest::Approx(5.0));
  CHECK(distance_m({1, 1}, {1, 1}) == 0.0);
  GeoPoint a{0, 0}, b{12.5, -7.25}, c{-3.0, 41.0};
  CHECK(distance_m(a, c) <= distance_m(a, b) + distance_m(b, c) + 1e-12);
  CHECK(distance_m(a, b) == distance_m(b, a));
}

TEST_CASE("source class taxonomy") {
  CHECK(is_construction(SourceClass::Jackhammer));
  CHECK(is_construction(SourceClass::CompressorEngine));
  CHECK(is_construction(SourceClass::MetallicBanging));
  CHECK_FALSE(is_construction(SourceClass::Siren));
  CHECK_FALSE(is_construction(SourceClass::Traffic));
  CHECK_FALSE(is_construction(SourceClass::Music));
  CHECK_FALSE(is_construction(SourceClass::Crowd));
  CHECK_FALSE(is_construction(SourceClass::Ambient));

  for (int i = 0; i < kSourceClassCount; ++i) {
    SourceClass c = SourceClass(i);
    CHECK(source_class_from_string(to_string(c)) == c);
  }
  CHECK_THROWS_AS(source_class_from_string("Lawnmower"), InvalidInput);
}

TEST_CASE("complaint enums map unknown strings to Other") {
  bool known = true;
  CHECK(complaint_category_from_string("Helicopter", &known) == ComplaintCategory::Other);
  CHECK_FALSE(known);
  known = false;
  CHECK(complaint_category_from_string("AfterHoursConstruction", &known) ==
        ComplaintCategory::AfterHoursConstruction);
  CHECK(known);
  CHECK(complaint_route_from_string("DEP", &known) == ComplaintRoute::DEP);
  CHECK(known);
  CHECK(complaint_route_from_string("NYPD", &known) == ComplaintRoute::Other);
  CHECK_FALSE(known);
  CHECK(resolution_from_string("ViolationIssued", &known) == Resolution::ViolationIssued);
  CHECK(known);
}

TEST_CASE("local time of day handles negative offsets and wraps") {
  CHECK(local_tod_s(Timestamp{0}, 0) == 0);
  CHECK(local_tod_s(Timestamp{3600}, 0) == 3600);
  CHECK(local_tod_s(Timestamp{0}, -5 * 3600) == 19 * 3600);  // 19:00 previous day
  CHECK(local_tod_s(Timestamp{kSecondsPerDay + 60}, 0) == 60);
  CHECK(local_tod_s(Timestamp{-60}, 0) == kSecondsPerDay - 60);
}

TEST_CASE("day window membership, wrapping and not") {
  DayWindow after_hours{18 * 3600, 7 * 3600};
  CHECK(after_hours.contains_tod(18 * 3600));           // 18:00 in
  CHECK(after_hours.contains_tod(23 * 3600));           // 23:00 in
  CHECK(after_hours.contains_tod(0));                   // midnight in
  CHECK(after_hours.contains_tod(7 * 3600 - 1));        // 06:59:59 in
  CHECK_FALSE(after_hours.contains_tod(7 * 3600));      // 07:00 out
  CHECK_FALSE(after_hours.contains_tod(12 * 3600));     // noon out
  CHECK_FALSE(after_hours.contains_tod(18 * 3600 - 1)); // 17:59:59 out

  DayWindow morning{9 * 3600, 12 * 3600};
  CHECK(morning.contains_tod(9 * 3600));
  CHECK(morning.contains_tod(11 * 3600));
  CHECK_FALSE(morning.contains_tod(12 * 3600));
  CHECK_FALSE(morning.contains_tod(2 * 3600));

  // Membership partitions the day: every second belongs to exactly one side.
  for (int64_t tod = 0; tod < kSecondsPerDay; tod += 977) {
    CHECK(after_hours.contains_tod(tod) != (tod >= 7 * 3600 && tod < 18 * 3600));
  }
}

TEST_CASE("time range is half open") {
  TimeRange r{Timestamp{100}, Timestamp{200}};
  CHECK(r.contains(Timestamp{100}));
  CHECK(r.contains(Timestamp{199}));
  CHECK_FALSE(r.contains(Timestamp{200}));
  CHECK_FALSE(r.contains(Timestamp{99}));
  CHECK(r.seconds() == 100);
  CHECK_FALSE(r.empty());
  CHECK(TimeRange{Timestamp{5}, Timestamp{5}}.empty());
}
