#include "evcatch/events.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace evcatch {

void validate_geometry(const SensorGeometry& g) {
  if (g.width <= 0 || g.height <= 0) {
    throw BoundsError("sensor geometry must be positive, got " +
                      std::to_string(g.width) + "x" + std::to_string(g.height));
  }
}

void validate_stream(const EventStream& stream) {
  validate_geometry(stream.geometry);
  TimestampUs prev = 0;
  bool first = true;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (!stream.geometry.contains(e.x, e.y)) {
      throw BoundsError("event " + std::to_string(i) + " at (" +
                        std::to_string(e.x) + "," + std::to_string(e.y) +
                        ") outside sensor geometry " +
                        std::to_string(stream.geometry.width) + "x" +
                        std::to_string(stream.geometry.height));
    }
    if (e.polarity != 1 && e.polarity != -1) {
      throw BoundsError("event " + std::to_string(i) + " has polarity " +
                        std::to_string(e.polarity) + ", expected +1 or -1");
    }
    if (e.t < 0) {
      throw BoundsError("event " + std::to_string(i) + " has negative timestamp");
    }
    if (!first && e.t < prev) {
      throw ContractError("event " + std::to_string(i) +
                          " breaks non-decreasing time order");
    }
    prev = e.t;
    first = false;
  }
}

EventStream read_event_csv(std::istream& in, const SensorGeometry& geometry) {
  validate_geometry(geometry);
  EventStream stream;
  stream.geometry = geometry;

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError("empty event CSV", 0);
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,x,y,p") {
    throw ParseError("expected header 't_us,x,y,p', got '" + line + "'", line_no);
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Event e;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream row(line);
    if (!(row >> e.t >> c1 >> e.x >> c2 >> e.y >> c3 >> e.polarity) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
      throw ParseError("malformed event row '" + line + "'", line_no);
    }
    stream.events.push_back(e);
  }
  validate_stream(stream);
  return stream;
}

EventStream read_event_csv_file(const std::string& path,
                                const SensorGeometry& geometry) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event CSV '" + path + "'");
  return read_event_csv(in, geometry);
}

void write_event_csv(std::ostream& out, const EventStream& stream) {
  out << "t_us,x,y,p\n";
  for (const Event& e : stream.events) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << e.polarity << '\n';
  }
}

}  // namespace evcatch
