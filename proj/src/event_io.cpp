#include "eventnet/event_io.hpp"

#include "eventnet/binary_io.hpp"
#include "eventnet/errors.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace eventnet {
namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r' || f.back() == '\t')) f.remove_suffix(1);
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

/// Calls `row(fields, line_no)` for each non-empty line after the header.
template <typename Fn>
void for_each_row(const std::filesystem::path& path, std::size_t expected_fields, Fn&& row) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != expected_fields) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expected_fields) + " fields");
    }
    row(fields, line_no);
  }
}

}  // namespace

void write_events_csv(const std::filesystem::path& path, std::span<const Event> events) {
  auto out = open_out(path);
  out << "t_us,x,y,p\n";
  for (const auto& e : events) out << e.t << ',' << e.x << ',' << e.y << ',' << e.p << '\n';
}

std::vector<Event> read_events_csv(const std::filesystem::path& path) {
  std::vector<Event> events;
  for_each_row(path, 4, [&](const auto& f, std::size_t line_no) {
    Event e;
    e.t = parse_field<Timestamp>(f[0], path, line_no);
    e.x = parse_field<int>(f[1], path, line_no);
    e.y = parse_field<int>(f[2], path, line_no);
    e.p = parse_field<int>(f[3], path, line_no);
    if (e.p != 1 && e.p != -1) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": polarity");
    events.push_back(e);
  });
  return events;
}

void write_events_binary(const std::filesystem::path& path, const EventStream& stream) {
  stream.geometry.validate();
  auto out = open_out(path, true);
  io::write_magic(out, "EVNT");
  io::write_le<std::uint32_t>(out, kEventFileVersion);
  io::write_le<std::uint32_t>(out, std::uint32_t(stream.geometry.width));
  io::write_le<std::uint32_t>(out, std::uint32_t(stream.geometry.height));
  for (const auto& e : stream.events) {
    validate_event(e, stream.geometry);
    io::write_le<std::uint64_t>(out, std::uint64_t(e.t));
    io::write_le<std::uint16_t>(out, std::uint16_t(e.x));
    io::write_le<std::uint16_t>(out, std::uint16_t(e.y));
    io::write_le<std::int8_t>(out, std::int8_t(e.p));
  }
}

EventStream read_events_binary(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  io::expect_magic(in, "EVNT");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kEventFileVersion) throw FormatError("unsupported event file version " + std::to_string(version));
  EventStream stream;
  stream.geometry.width = int(io::read_le<std::uint32_t>(in));
  stream.geometry.height = int(io::read_le<std::uint32_t>(in));
  stream.geometry.validate();
  while (in.peek() != std::char_traits<char>::eof()) {
    Event e;
    e.t = Timestamp(io::read_le<std::uint64_t>(in));
    e.x = io::read_le<std::uint16_t>(in);
    e.y = io::read_le<std::uint16_t>(in);
    e.p = io::read_le<std::int8_t>(in);
    validate_event(e, stream.geometry);
    stream.events.push_back(e);
  }
  return stream;
}

EventStream read_events(const std::filesystem::path& path, const SensorGeometry& fallback) {
  {
    auto in = open_in(path, true);
    char magic[4] = {};
    in.read(magic, 4);
    if (in && std::string_view(magic, 4) == "EVNT") return read_events_binary(path);
  }
  EventStream stream{fallback, read_events_csv(path)};
  stream.geometry.validate();
  for (const auto& e : stream.events) validate_event(e, stream.geometry);
  return stream;
}

void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels) {
  auto out = open_out(path);
  out << "index,class\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::vector<int> labels;
  for_each_row(path, 2, [&](const auto& f, std::size_t line_no) {
    const auto index = parse_field<std::size_t>(f[0], path, line_no);
    if (index != labels.size()) throw FormatError(path.string() + ": label indices must be dense and ordered");
    labels.push_back(parse_field<int>(f[1], path, line_no));
  });
  return labels;
}

void write_motion_csv(const std::filesystem::path& path, std::span<const MotionSample> samples) {
  auto out = open_out(path);
  out << "t_us,u,v\n" << std::setprecision(17);
  for (const auto& s : samples) out << s.t << ',' << s.u << ',' << s.v << '\n';
}

std::vector<MotionSample> read_motion_csv(const std::filesystem::path& path) {
  std::vector<MotionSample> samples;
  for_each_row(path, 3, [&](const auto& f, std::size_t line_no) {
    samples.push_back({parse_field<Timestamp>(f[0], path, line_no), parse_field<double>(f[1], path, line_no),
                       parse_field<double>(f[2], path, line_no)});
  });
  return samples;
}

}  // namespace eventnet
