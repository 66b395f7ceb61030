#include "evcatch/representations.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace evcatch {

namespace {

constexpr std::uint8_t kMagic[4] = {'B', 'E', 'H', 'I'};

std::size_t payload_bytes(const SensorGeometry& g) {
  return static_cast<std::size_t>((g.pixel_count() + 7) / 8);
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_i64le(std::vector<std::uint8_t>& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 |
         static_cast<std::uint32_t>(b[off + 3]) << 24;
}

std::int64_t get_i64le(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
  return static_cast<std::int64_t>(u);
}

}  // namespace

Behi::Behi(SensorGeometry geometry, TimestampUs horizon)
    : geom_(geometry), horizon_(horizon), bits_(payload_bytes(geometry), 0) {
  validate_geometry(geometry);
}

std::uint64_t Behi::count_set() const {
  std::uint64_t n = 0;
  for (std::uint8_t b : bits_) n += std::popcount(b);
  return n;
}

Behi behi_from_events(const EventStream& stream, TimestampUs horizon) {
  validate_geometry(stream.geometry);
  if (horizon < 0) throw ContractError("BEHI horizon must be non-negative");
  Behi image(stream.geometry, horizon);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (!stream.geometry.contains(e.x, e.y)) {
      throw BoundsError("event " + std::to_string(i) + " at (" +
                        std::to_string(e.x) + "," + std::to_string(e.y) +
                        ") outside sensor geometry");
    }
    if (e.t < horizon) image.set(e.x, e.y);
  }
  return image;
}

Behi behi_update(Behi image, const EventStream& new_events,
                 TimestampUs new_horizon) {
  if (new_horizon < image.horizon()) {
    throw ContractError("BEHI update horizon " + std::to_string(new_horizon) +
                        " precedes image horizon " +
                        std::to_string(image.horizon()));
  }
  if (new_events.geometry != image.geometry()) {
    throw ContractError("BEHI update geometry mismatch");
  }
  for (std::size_t i = 0; i < new_events.events.size(); ++i) {
    const Event& e = new_events.events[i];
    if (!image.geometry().contains(e.x, e.y)) {
      throw BoundsError("event " + std::to_string(i) + " at (" +
                        std::to_string(e.x) + "," + std::to_string(e.y) +
                        ") outside sensor geometry");
    }
    if (e.t < image.horizon() || e.t >= new_horizon) {
      throw ContractError("event " + std::to_string(i) + " at t=" +
                          std::to_string(e.t) + " outside update window [" +
                          std::to_string(image.horizon()) + "," +
                          std::to_string(new_horizon) + ")");
    }
    image.set(e.x, e.y);
  }
  image.horizon_ = new_horizon;
  return image;
}

Behi behi_resize(const Behi& image, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) {
    throw BoundsError("resize target must be positive");
  }
  const int in_w = image.geometry().width;
  const int in_h = image.geometry().height;
  Behi out(SensorGeometry{out_w, out_h}, image.horizon());

  // Footprints partition the source when downscaling and replicate single
  // source cells when upscaling.
  auto lo = [](int j, int in_dim, int out_dim) {
    return static_cast<int>(static_cast<std::int64_t>(j) * in_dim / out_dim);
  };
  for (int oy = 0; oy < out_h; ++oy) {
    const int y0 = lo(oy, in_h, out_h);
    const int y1 = std::max(lo(oy + 1, in_h, out_h), y0 + 1);
    for (int ox = 0; ox < out_w; ++ox) {
      const int x0 = lo(ox, in_w, out_w);
      const int x1 = std::max(lo(ox + 1, in_w, out_w), x0 + 1);
      bool any = false;
      for (int y = y0; y < y1 && !any; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (image.test(x, y)) {
            any = true;
            break;
          }
        }
      }
      if (any) out.set(ox, oy);
    }
  }
  return out;
}

std::vector<std::uint8_t> behi_serialize(const Behi& image) {
  std::vector<std::uint8_t> out;
  out.reserve(kBehiHeaderBytes + image.bytes().size());
  for (std::uint8_t m : kMagic) out.push_back(m);
  put_u32le(out, static_cast<std::uint32_t>(image.geometry().width));
  put_u32le(out, static_cast<std::uint32_t>(image.geometry().height));
  put_i64le(out, image.horizon());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

Behi behi_deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kBehiHeaderBytes) {
    throw ParseError("BEHI header truncated", bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("bad BEHI magic", 0);
  }
  const auto w = static_cast<int>(get_u32le(bytes, 4));
  const auto h = static_cast<int>(get_u32le(bytes, 8));
  if (w <= 0 || h <= 0) throw ParseError("invalid BEHI dimensions", 4);
  const TimestampUs horizon = get_i64le(bytes, 12);

  Behi image(SensorGeometry{w, h}, horizon);
  const std::size_t need = payload_bytes(image.geometry());
  if (bytes.size() - kBehiHeaderBytes < need) {
    throw ParseError("BEHI payload truncated, need " + std::to_string(need) +
                         " bytes, have " +
                         std::to_string(bytes.size() - kBehiHeaderBytes),
                     bytes.size());
  }
  // Rebuild through the public surface so the padding bits stay normalized.
  const std::uint8_t* payload = bytes.data() + kBehiHeaderBytes;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (payload[idx >> 3] & (0x80u >> (idx & 7))) image.set(x, y);
    }
  }
  return image;
}

double EventVolume::channel_mass(int polarity_channel) const {
  const std::size_t per_channel = static_cast<std::size_t>(bins) *
                                  geometry.height * geometry.width;
  const std::size_t base = polarity_channel * per_channel;
  double sum = 0;
  for (std::size_t i = 0; i < per_channel; ++i) sum += data[base + i];
  return sum;
}

EventVolume event_volume_from_events(const EventStream& stream, int bins) {
  validate_geometry(stream.geometry);
  if (bins < 2) throw ContractError("event volume needs at least 2 bins");
  if (stream.events.size() < 2) {
    throw ContractError("event volume needs at least 2 events");
  }
  const TimestampUs t_first = stream.events.front().t;
  const TimestampUs t_last = stream.events.back().t;
  if (t_last <= t_first) {
    throw ContractError("degenerate time normalization: all events at t=" +
                        std::to_string(t_first));
  }

  EventVolume vol;
  vol.geometry = stream.geometry;
  vol.bins = bins;
  vol.t_first = t_first;
  vol.t_last = t_last;
  vol.data.assign(static_cast<std::size_t>(2) * bins * stream.geometry.height *
                      stream.geometry.width,
                  0.0);

  const double span = static_cast<double>(t_last - t_first);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (!stream.geometry.contains(e.x, e.y)) {
      throw BoundsError("event " + std::to_string(i) + " at (" +
                        std::to_string(e.x) + "," + std::to_string(e.y) +
                        ") outside sensor geometry");
    }
    const int channel = e.polarity > 0 ? 0 : 1;
    const double t_star = (bins - 1) * static_cast<double>(e.t - t_first) / span;
    const int k = std::min(static_cast<int>(t_star), bins - 1);
    const double frac = t_star - k;
    vol.at(channel, k, e.y, e.x) += 1.0 - frac;
    if (frac > 0.0 && k + 1 < bins) {
      vol.at(channel, k + 1, e.y, e.x) += frac;
    }
  }
  return vol;
}

std::uint64_t representation_size_bits(RepresentationKind kind,
                                       const SensorGeometry& geometry,
                                       int channels_or_frames) {
  validate_geometry(geometry);
  const auto w = static_cast<std::uint64_t>(geometry.width);
  const auto h = static_cast<std::uint64_t>(geometry.height);
  switch (kind) {
    case RepresentationKind::behi:
      return w * h;
    case RepresentationKind::event_volume:
      if (channels_or_frames <= 0) {
        throw BoundsError("event volume bin count must be positive");
      }
      return static_cast<std::uint64_t>(channels_or_frames) * 2 * h * w * 32;
    case RepresentationKind::grayscale_stack:
      if (channels_or_frames <= 0) {
        throw BoundsError("grayscale frame count must be positive");
      }
      return h * w * static_cast<std::uint64_t>(channels_or_frames) * 8;
  }
  throw Error("unknown representation kind");
}

}  // namespace evcatch
