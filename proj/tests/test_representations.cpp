#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "evcatch/representations.hpp"
#include "evcatch/rng.hpp"

using namespace evcatch;

namespace {

EventStream random_stream(const SensorGeometry& g, std::size_t count,
                          TimestampUs t_max, std::uint64_t seed) {
  Rng rng(seed);
  EventStream s;
  s.geometry = g;
  std::vector<TimestampUs> times;
  for (std::size_t i = 0; i < count; ++i) times.push_back(rng.uniform_int(0, t_max));
  std::sort(times.begin(), times.end());
  for (std::size_t i = 0; i < count; ++i) {
    s.events.push_back(Event{static_cast<int>(rng.uniform_int(0, g.width - 1)),
                             static_cast<int>(rng.uniform_int(0, g.height - 1)),
                             times[i], rng.uniform() < 0.5 ? 1 : -1});
  }
  return s;
}

}  // namespace

TEST_CASE("behi_from_events basics") {
  const SensorGeometry g{16, 12};

  SUBCASE("empty stream -> all zero") {
    EventStream s;
    s.geometry = g;
    const Behi image = behi_from_events(s, 1000);
    CHECK(image.count_set() == 0);
  }

  SUBCASE("single event sets exactly its pixel, polarity ignored") {
    EventStream s;
    s.geometry = g;
    s.events = {{3, 4, 5, -1}};
    const Behi image = behi_from_events(s, 10);
    CHECK(image.count_set() == 1);
    CHECK(image.test(3, 4));
  }

  SUBCASE("events at or past the horizon are excluded") {
    EventStream s;
    s.geometry = g;
    s.events = {{1, 1, 9, 1}, {2, 2, 10, 1}, {3, 3, 11, 1}};
    const Behi image = behi_from_events(s, 10);
    CHECK(image.test(1, 1));
    CHECK_FALSE(image.test(2, 2));
    CHECK_FALSE(image.test(3, 3));
  }

  SUBCASE("duplicated events are idempotent") {
    EventStream s = random_stream(g, 1000, 5000, 7);
    EventStream doubled = s;
    doubled.events.insert(doubled.events.end(), s.events.begin(), s.events.end());
    std::stable_sort(doubled.events.begin(), doubled.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    CHECK(behi_from_events(s, 5001) == behi_from_events(doubled, 5001));
  }

  SUBCASE("out-of-bounds event reports coordinates") {
    EventStream s;
    s.geometry = g;
    s.events = {{99, 4, 5, 1}};
    CHECK_THROWS_WITH_AS(behi_from_events(s, 10),
                         doctest::Contains("(99,4)"), BoundsError);
  }
}

TEST_CASE("behi monotonicity and order independence") {
  const SensorGeometry g{32, 32};
  const EventStream s = random_stream(g, 500, 10000, 11);

  SUBCASE("larger horizon keeps every set cell") {
    const Behi early = behi_from_events(s, 4000);
    const Behi late = behi_from_events(s, 9000);
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        if (early.test(x, y)) CHECK(late.test(x, y));
      }
    }
  }

  SUBCASE("event permutation yields identical image") {
    EventStream shuffled = s;
    Rng rng(5);
    for (std::size_t i = shuffled.events.size(); i > 1; --i) {
      std::swap(shuffled.events[i - 1],
                shuffled.events[rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
    }
    CHECK(behi_from_events(s, 10001) == behi_from_events(shuffled, 10001));
  }
}

TEST_CASE("behi_update equals one-shot encoding") {
  const SensorGeometry g{48, 36};

  SUBCASE("empty batch only bumps the horizon") {
    const EventStream s = random_stream(g, 100, 1000, 3);
    const Behi base = behi_from_events(s, 1001);
    EventStream empty;
    empty.geometry = g;
    const Behi updated = behi_update(base, empty, 2000);
    CHECK(updated.horizon() == 2000);
    CHECK(updated.count_set() == base.count_set());
  }

  SUBCASE("split at arbitrary cut points") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const EventStream s = random_stream(g, 400, 8000, 100 + trial);
      const TimestampUs cut = rng.uniform_int(0, 8001);
      EventStream first, second;
      first.geometry = second.geometry = g;
      for (const Event& e : s.events) {
        (e.t < cut ? first : second).events.push_back(e);
      }
      const Behi incremental =
          behi_update(behi_from_events(first, cut), second, 8001);
      CHECK(incremental == behi_from_events(s, 8001));
    }
  }

  SUBCASE("twelve sequential updates match one-shot over the same window") {
    const EventStream s = random_stream(g, 2000, 120000 - 1, 23);
    Behi image(g, 0);
    std::size_t cursor = 0;
    for (int k = 1; k <= 12; ++k) {
      const TimestampUs horizon = k * 10000;
      EventStream slice;
      slice.geometry = g;
      while (cursor < s.events.size() && s.events[cursor].t < horizon) {
        slice.events.push_back(s.events[cursor++]);
      }
      image = behi_update(std::move(image), slice, horizon);
    }
    CHECK(image == behi_from_events(s, 120000));
  }

  SUBCASE("horizon moving backwards is a contract violation") {
    const Behi base(g, 5000);
    EventStream empty;
    empty.geometry = g;
    CHECK_THROWS_AS(behi_update(base, empty, 4000), ContractError);
  }

  SUBCASE("event outside the update window is rejected") {
    Behi base(g, 5000);
    EventStream batch;
    batch.geometry = g;
    batch.events = {{1, 1, 100, 1}};
    CHECK_THROWS_AS(behi_update(base, batch, 6000), ContractError);
  }
}

TEST_CASE("behi_resize") {
  SUBCASE("all-zero and all-one are preserved") {
    Behi zero(SensorGeometry{40, 30}, 0);
    CHECK(behi_resize(zero, 25, 25).count_set() == 0);

    Behi one(SensorGeometry{40, 30}, 0);
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x) one.set(x, y);
    CHECK(behi_resize(one, 25, 25).count_set() == 25u * 25u);
  }

  SUBCASE("single set pixel maps to exactly one output pixel") {
    // Brute-force footprint oracle against the implementation.
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      Behi image(SensorGeometry{640, 480}, 0);
      const int sx = static_cast<int>(rng.uniform_int(0, 639));
      const int sy = static_cast<int>(rng.uniform_int(0, 479));
      image.set(sx, sy);
      const Behi small = behi_resize(image, 250, 250);
      CHECK(small.count_set() == 1);

      int hits = 0;
      for (int oy = 0; oy < 250; ++oy) {
        const int y0 = oy * 480 / 250;
        const int y1 = std::max((oy + 1) * 480 / 250, y0 + 1);
        for (int ox = 0; ox < 250; ++ox) {
          const int x0 = ox * 640 / 250;
          const int x1 = std::max((ox + 1) * 640 / 250, x0 + 1);
          const bool inside = sx >= x0 && sx < x1 && sy >= y0 && sy < y1;
          if (inside) {
            CHECK(small.test(ox, oy));
            ++hits;
          }
        }
      }
      CHECK(hits == 1);
    }
  }

  SUBCASE("upscale replicates source cells") {
    Behi image(SensorGeometry{2, 2}, 0);
    image.set(0, 0);
    const Behi big = behi_resize(image, 4, 4);
    CHECK(big.count_set() == 4);
    CHECK(big.test(0, 0));
    CHECK(big.test(1, 1));
    CHECK_FALSE(big.test(2, 2));
  }
}

TEST_CASE("event volume construction") {
  const SensorGeometry g{8, 8};

  SUBCASE("bin-center alignment") {
    EventStream s;
    s.geometry = g;
    s.events = {{1, 1, 0, 1}, {2, 2, 100, 1}};
    const EventVolume vol = event_volume_from_events(s, 10);
    CHECK(vol.at(0, 0, 1, 1) == doctest::Approx(1.0));
    CHECK(vol.at(0, 9, 2, 2) == doctest::Approx(1.0));
    CHECK(vol.channel_mass(0) == doctest::Approx(2.0));
    CHECK(vol.channel_mass(1) == doctest::Approx(0.0));
  }

  SUBCASE("midpoint splits half and half") {
    // B=5, span 40: t*=(B-1)(t-t0)/(tN-t1) = t/10; event at t=25 -> t*=2.5.
    EventStream s;
    s.geometry = g;
    s.events = {{0, 0, 0, 1}, {3, 3, 25, -1}, {1, 1, 40, 1}};
    const EventVolume vol = event_volume_from_events(s, 5);
    CHECK(vol.at(1, 2, 3, 3) == doctest::Approx(0.5));
    CHECK(vol.at(1, 3, 3, 3) == doctest::Approx(0.5));
  }

  SUBCASE("mass conservation on random streams") {
    const EventStream s = random_stream(g, 10000, 777777, 13);
    std::int64_t pos = 0, neg = 0;
    for (const Event& e : s.events) (e.polarity > 0 ? pos : neg)++;
    const EventVolume vol = event_volume_from_events(s, 10);
    CHECK(std::fabs(vol.channel_mass(0) - pos) < 1e-6);
    CHECK(std::fabs(vol.channel_mass(1) - neg) < 1e-6);
  }

  SUBCASE("temporal locality: at most two bins per event") {
    EventStream s;
    s.geometry = g;
    s.events = {{4, 4, 0, 1}, {5, 5, 33, 1}, {6, 6, 100, 1}};
    const EventVolume vol = event_volume_from_events(s, 7);
    int touched = 0;
    for (int b = 0; b < 7; ++b) {
      if (vol.at(0, b, 5, 5) > 0.0f) ++touched;
    }
    CHECK(touched <= 2);
  }

  SUBCASE("identical timestamps are a degenerate normalization") {
    EventStream s;
    s.geometry = g;
    s.events = {{1, 1, 50, 1}, {2, 2, 50, -1}};
    CHECK_THROWS_AS(event_volume_from_events(s, 4), ContractError);
  }
}

TEST_CASE("encoder error paths") {
  const SensorGeometry g{8, 8};

  SUBCASE("negative horizon is a contract violation") {
    EventStream s;
    s.geometry = g;
    CHECK_THROWS_AS(behi_from_events(s, -1), ContractError);
  }
  SUBCASE("volume rejects out-of-bounds events with coordinates") {
    EventStream s;
    s.geometry = g;
    s.events = {{1, 1, 0, 1}, {9, 1, 10, 1}};
    CHECK_THROWS_WITH_AS(event_volume_from_events(s, 4),
                         doctest::Contains("(9,1)"), BoundsError);
  }
  SUBCASE("volume needs two events and two bins") {
    EventStream s;
    s.geometry = g;
    s.events = {{1, 1, 0, 1}};
    CHECK_THROWS_AS(event_volume_from_events(s, 4), ContractError);
    s.events.push_back({2, 2, 10, 1});
    CHECK_THROWS_AS(event_volume_from_events(s, 1), ContractError);
  }
  SUBCASE("size formulas reject non-positive dimensions") {
    CHECK_THROWS_AS(
        representation_size_bits(RepresentationKind::behi, SensorGeometry{0, 4}, 1),
        BoundsError);
    CHECK_THROWS_AS(
        representation_size_bits(RepresentationKind::event_volume, g, 0),
        BoundsError);
    CHECK_THROWS_AS(
        representation_size_bits(RepresentationKind::grayscale_stack, g, -2),
        BoundsError);
  }
}

TEST_CASE("representation size formulas") {
  const SensorGeometry vga{640, 480};
  CHECK(representation_size_bits(RepresentationKind::behi, vga, 1) == 307200);
  CHECK(representation_size_bits(RepresentationKind::event_volume, vga, 10) ==
        196608000ULL);
  CHECK(representation_size_bits(RepresentationKind::grayscale_stack, vga, 8) ==
        19660800ULL);

  // Property: match independent arithmetic for random geometries.
  Rng rng(4242);
  for (int trial = 0; trial < 50; ++trial) {
    const SensorGeometry g{static_cast<int>(rng.uniform_int(1, 4096)),
                           static_cast<int>(rng.uniform_int(1, 4096))};
    const int c = static_cast<int>(rng.uniform_int(1, 64));
    const auto w = static_cast<std::uint64_t>(g.width);
    const auto h = static_cast<std::uint64_t>(g.height);
    CHECK(representation_size_bits(RepresentationKind::behi, g, 1) == h * w);
    CHECK(representation_size_bits(RepresentationKind::event_volume, g, c) ==
          32ULL * h * (2ULL * w) * static_cast<std::uint64_t>(c));
    CHECK(representation_size_bits(RepresentationKind::grayscale_stack, g, c) ==
          8ULL * w * h * static_cast<std::uint64_t>(c));
  }
}

TEST_CASE("behi serialization") {
  SUBCASE("round trip is bitwise identical") {
    for (int trial = 0; trial < 10; ++trial) {
      const SensorGeometry g{37 + trial, 23 + trial};
      EventStream s = random_stream(g, 300, 999, 1000 + trial);
      const Behi image = behi_from_events(s, 1000);
      const Behi back = behi_deserialize(behi_serialize(image));
      CHECK(back == image);
      CHECK(back.horizon() == image.horizon());
    }
  }

  SUBCASE("payload size for 640x480 is 38400 bytes") {
    const Behi image(SensorGeometry{640, 480}, 12345);
    const auto blob = behi_serialize(image);
    CHECK(blob.size() - kBehiHeaderBytes == 38400);
  }

  SUBCASE("truncation is a parse error, not a crash") {
    const Behi image(SensorGeometry{64, 48}, 1);
    auto blob = behi_serialize(image);
    blob.resize(kBehiHeaderBytes - 4);
    CHECK_THROWS_AS(behi_deserialize(blob), ParseError);

    auto partial = behi_serialize(image);
    partial.resize(kBehiHeaderBytes + 10);
    CHECK_THROWS_AS(behi_deserialize(partial), ParseError);
  }

  SUBCASE("bad magic is rejected") {
    const Behi image(SensorGeometry{8, 8}, 1);
    auto blob = behi_serialize(image);
    blob[0] = 'X';
    CHECK_THROWS_AS(behi_deserialize(blob), ParseError);
  }
}
