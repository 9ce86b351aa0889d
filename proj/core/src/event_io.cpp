#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "ramp/error.hpp"
#include "ramp/events.hpp"

namespace ramp {
namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '0'};
constexpr std::size_t kHeaderSize = 20;
constexpr std::size_t kRecordSize = 16;

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& b, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(b, bits);
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
double get_f64(const std::uint8_t* p) {
  const std::uint64_t bits = get_u64(p);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_evt0(const std::string& path, const EventStream& stream) {
  if (stream.width <= 0 || stream.height <= 0)
    throw Error("write_evt0: non-positive image size");
  std::vector<std::uint8_t> buf;
  buf.reserve(kHeaderSize + kRecordSize * stream.events.size());
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u32(buf, static_cast<std::uint32_t>(stream.width));
  put_u32(buf, static_cast<std::uint32_t>(stream.height));
  put_u64(buf, stream.events.size());
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.x >= stream.width || e.y >= stream.height)
      throw Error("write_evt0: event " + std::to_string(i) + " out of bounds");
    if (e.polarity != 1 && e.polarity != -1)
      throw Error("write_evt0: event " + std::to_string(i) + " has invalid polarity");
    if (e.t < prev_t)
      throw Error("write_evt0: event " + std::to_string(i) + " breaks time order");
    prev_t = e.t;
    put_f64(buf, e.t);
    put_u16(buf, e.x);
    put_u16(buf, e.y);
    buf.push_back(static_cast<std::uint8_t>(e.polarity));
    buf.push_back(0);
    buf.push_back(0);
    buf.push_back(0);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("write_evt0: cannot open " + path);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error("write_evt0: write failed for " + path);
}

EventStream read_evt0(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("read_evt0: cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderSize) throw ParseError("read_evt0: truncated header", buf.size());
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw ParseError("read_evt0: bad magic", 0);
  const std::uint32_t w = get_u32(buf.data() + 4);
  const std::uint32_t h = get_u32(buf.data() + 8);
  if (w == 0 || w > 65535) throw ParseError("read_evt0: bad width", 4);
  if (h == 0 || h > 65535) throw ParseError("read_evt0: bad height", 8);
  const std::uint64_t count = get_u64(buf.data() + 12);
  if (buf.size() != kHeaderSize + kRecordSize * count)
    throw ParseError("read_evt0: size does not match event count", 12);

  EventStream out;
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.events.resize(count);
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t off = kHeaderSize + kRecordSize * i;
    const std::uint8_t* rec = buf.data() + off;
    Event e;
    e.t = get_f64(rec);
    e.x = get_u16(rec + 8);
    e.y = get_u16(rec + 10);
    const std::int8_t pol = static_cast<std::int8_t>(rec[12]);
    if (!(e.t >= prev_t) || std::isnan(e.t))
      throw ParseError("read_evt0: event " + std::to_string(i) + " breaks time order", off);
    if (e.x >= w) throw ParseError("read_evt0: x out of bounds", off + 8);
    if (e.y >= h) throw ParseError("read_evt0: y out of bounds", off + 10);
    if (pol != 1 && pol != -1)
      throw ParseError("read_evt0: invalid polarity", off + 12);
    e.polarity = pol;
    prev_t = e.t;
    out.events[i] = e;
  }
  return out;
}

}  // namespace ramp
