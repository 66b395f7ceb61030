#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evcatch/errors.hpp"

namespace evcatch {

using TimestampUs = std::int64_t;

struct SensorGeometry {
  int width = 640;
  int height = 480;

  bool contains(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  std::int64_t pixel_count() const {
    return static_cast<std::int64_t>(width) * height;
  }
  bool operator==(const SensorGeometry&) const = default;
};

void validate_geometry(const SensorGeometry& g);

// One DVS event: polarity is the sign of the log-intensity change.
struct Event {
  int x = 0;
  int y = 0;
  TimestampUs t = 0;
  int polarity = 1;  // +1 or -1

  bool operator==(const Event&) const = default;
};

// Time-ordered event sequence for a fixed sensor geometry.
struct EventStream {
  SensorGeometry geometry;
  std::vector<Event> events;
};

// Throws BoundsError / ContractError describing the first offending event.
void validate_stream(const EventStream& stream);

// Text interchange: header `t_us,x,y,p`, one event per row, t non-decreasing.
EventStream read_event_csv(std::istream& in, const SensorGeometry& geometry);
EventStream read_event_csv_file(const std::string& path,
                                const SensorGeometry& geometry);
void write_event_csv(std::ostream& out, const EventStream& stream);

}  // namespace evcatch
