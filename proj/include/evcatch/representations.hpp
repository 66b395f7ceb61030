#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evcatch/events.hpp"

namespace evcatch {

// Binary event-history image: pixel (x,y) is set iff at least one event
// occurred there before the horizon timestamp, polarity ignored.
//
// Storage is row-major, packed 8 pixels per byte, most-significant bit
// first: bit index = y*W + x, mask = 0x80 >> (index & 7). The serialized
// payload is exactly ceil(W*H/8) bytes.
class Behi {
 public:
  Behi() = default;
  Behi(SensorGeometry geometry, TimestampUs horizon);

  const SensorGeometry& geometry() const { return geom_; }
  TimestampUs horizon() const { return horizon_; }

  bool test(int x, int y) const {
    const std::size_t idx =
        static_cast<std::size_t>(y) * static_cast<std::size_t>(geom_.width) + x;
    return (bits_[idx >> 3] & (0x80u >> (idx & 7))) != 0;
  }
  void set(int x, int y) {
    const std::size_t idx =
        static_cast<std::size_t>(y) * static_cast<std::size_t>(geom_.width) + x;
    bits_[idx >> 3] |= static_cast<std::uint8_t>(0x80u >> (idx & 7));
  }

  std::uint64_t count_set() const;
  std::span<const std::uint8_t> bytes() const { return bits_; }

  bool operator==(const Behi&) const = default;

 private:
  friend Behi behi_update(Behi image, const EventStream& new_events,
                          TimestampUs new_horizon);

  SensorGeometry geom_;
  TimestampUs horizon_ = 0;
  std::vector<std::uint8_t> bits_;
};

Behi behi_from_events(const EventStream& stream, TimestampUs horizon);

// Incremental form for the frame cadence: equivalent to re-encoding the
// concatenated history, but costs O(|new_events|). Takes the image by value
// so callers that move it in pay no copy.
Behi behi_update(Behi image, const EventStream& new_events,
                 TimestampUs new_horizon);

// Max-pooling over the pre-image footprint: output stays binary and one-pixel
// trails survive downscaling.
Behi behi_resize(const Behi& image, int out_w, int out_h);

std::vector<std::uint8_t> behi_serialize(const Behi& image);
Behi behi_deserialize(std::span<const std::uint8_t> bytes);

constexpr std::size_t kBehiHeaderBytes = 20;  // magic + W + H + horizon

// Spatiotemporal event grid: B temporal bins per polarity channel, bilinear
// time kernel. Channels hold unsigned per-polarity mass; the signed form is
// recoverable as (positive - negative). Weights are kept at double precision
// so per-channel mass is conserved exactly; the 32-bit-per-cell figure in
// representation_size_bits is the wire/bandwidth cost of the format.
struct EventVolume {
  SensorGeometry geometry;
  int bins = 0;
  TimestampUs t_first = 0;
  TimestampUs t_last = 0;
  std::vector<double> data;  // [polarity][bin][y][x]

  double& at(int polarity_channel, int bin, int y, int x) {
    return data[index(polarity_channel, bin, y, x)];
  }
  double at(int polarity_channel, int bin, int y, int x) const {
    return data[index(polarity_channel, bin, y, x)];
  }
  double channel_mass(int polarity_channel) const;

 private:
  std::size_t index(int c, int b, int y, int x) const {
    return ((static_cast<std::size_t>(c) * bins + b) * geometry.height + y) *
               geometry.width +
           x;
  }
};

EventVolume event_volume_from_events(const EventStream& stream, int bins);

enum class RepresentationKind { behi, event_volume, grayscale_stack };

// Bit cost of the chosen representation; `channels_or_frames` is the bin
// count for event volumes and the frame count for grayscale stacks.
std::uint64_t representation_size_bits(RepresentationKind kind,
                                       const SensorGeometry& geometry,
                                       int channels_or_frames);

}  // namespace evcatch
