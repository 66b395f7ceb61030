#include <doctest.h>

#include <sstream>

#include "evcatch/events.hpp"
#include "evcatch/rng.hpp"

using namespace evcatch;

namespace {

EventStream random_stream(const SensorGeometry& g, std::size_t count,
                          TimestampUs t_max, std::uint64_t seed) {
  Rng rng(seed);
  EventStream s;
  s.geometry = g;
  std::vector<TimestampUs> times;
  for (std::size_t i = 0; i < count; ++i) {
    times.push_back(rng.uniform_int(0, t_max));
  }
  std::sort(times.begin(), times.end());
  for (std::size_t i = 0; i < count; ++i) {
    Event e;
    e.x = static_cast<int>(rng.uniform_int(0, g.width - 1));
    e.y = static_cast<int>(rng.uniform_int(0, g.height - 1));
    e.t = times[i];
    e.polarity = rng.uniform() < 0.5 ? 1 : -1;
    s.events.push_back(e);
  }
  return s;
}

}  // namespace

TEST_CASE("stream validation catches bad events") {
  EventStream s;
  s.geometry = {10, 10};

  SUBCASE("out of bounds") {
    s.events = {{12, 3, 0, 1}};
    CHECK_THROWS_AS(validate_stream(s), BoundsError);
  }
  SUBCASE("bad polarity") {
    s.events = {{1, 1, 0, 0}};
    CHECK_THROWS_AS(validate_stream(s), BoundsError);
  }
  SUBCASE("time order") {
    s.events = {{1, 1, 10, 1}, {2, 2, 5, 1}};
    CHECK_THROWS_AS(validate_stream(s), ContractError);
  }
  SUBCASE("valid") {
    s.events = {{1, 1, 5, 1}, {2, 2, 5, -1}, {3, 3, 9, 1}};
    CHECK_NOTHROW(validate_stream(s));
  }
}

TEST_CASE("event CSV round trip") {
  const SensorGeometry g{64, 48};
  const EventStream original = random_stream(g, 200, 100000, 99);

  std::stringstream buf;
  write_event_csv(buf, original);
  const EventStream parsed = read_event_csv(buf, g);

  REQUIRE(parsed.events.size() == original.events.size());
  CHECK(parsed.events == original.events);
}

TEST_CASE("event CSV parse errors") {
  const SensorGeometry g{64, 48};

  SUBCASE("bad header") {
    std::stringstream in("time,x,y,p\n1,2,3,1\n");
    CHECK_THROWS_AS(read_event_csv(in, g), ParseError);
  }
  SUBCASE("malformed row") {
    std::stringstream in("t_us,x,y,p\n1,2,3\n");
    CHECK_THROWS_AS(read_event_csv(in, g), ParseError);
  }
  SUBCASE("empty file") {
    std::stringstream in("");
    CHECK_THROWS_AS(read_event_csv(in, g), ParseError);
  }
  SUBCASE("decreasing time rejected") {
    std::stringstream in("t_us,x,y,p\n10,1,1,1\n5,1,1,1\n");
    CHECK_THROWS_AS(read_event_csv(in, g), ContractError);
  }
}
