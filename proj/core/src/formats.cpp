#include "ramp/formats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ramp/error.hpp"

namespace ramp {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw Error("read failed on " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) throw Error("write failed on " + path);
}

// Next whitespace-delimited PGM header token; '#' comments run to end of line.
std::string pgm_token(const std::string& bytes, std::size_t& pos, const std::string& path) {
  while (pos < bytes.size()) {
    const char ch = bytes[pos];
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#')
    ++pos;
  if (start == pos) throw ParseError(path + ": truncated PGM header", start);
  return bytes.substr(start, pos - start);
}

int pgm_int(const std::string& bytes, std::size_t& pos, const std::string& path) {
  const std::size_t at = pos;
  const std::string tok = pgm_token(bytes, pos, path);
  try {
    std::size_t used = 0;
    const int value = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw ParseError(path + ": bad PGM header number '" + tok + "'", at);
  }
}

}  // namespace

void write_pgm(const std::string& path, const ImageF32& image) {
  std::string bytes = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                      "\n255\n";
  bytes.reserve(bytes.size() + image.v.size());
  for (const float value : image.v) {
    const float clamped = std::min(1.0f, std::max(0.0f, value));
    bytes.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(clamped * 255.0f))));
  }
  write_file(path, bytes);
}

ImageF32 read_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  const std::string magic = pgm_token(bytes, pos, path);
  if (magic != "P5") throw ParseError(path + ": expected P5 magic, got '" + magic + "'", 0);
  const int width = pgm_int(bytes, pos, path);
  const int height = pgm_int(bytes, pos, path);
  const int maxval = pgm_int(bytes, pos, path);
  if (width <= 0 || height <= 0)
    throw ParseError(path + ": bad PGM size " + std::to_string(width) + "x" + std::to_string(height),
                     0);
  if (maxval != 255) throw ParseError(path + ": unsupported maxval " + std::to_string(maxval), 0);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw ParseError(path + ": missing separator after maxval", pos);
  ++pos;

  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < need)
    throw ParseError(path + ": pixel data truncated, need " + std::to_string(need) + " bytes, have " +
                         std::to_string(bytes.size() - pos),
                     pos);
  ImageF32 image(width, height);
  for (std::size_t i = 0; i < need; ++i)
    image.v[i] = static_cast<float>(static_cast<std::uint8_t>(bytes[pos + i])) / 255.0f;
  return image;
}

void write_tum(const std::string& path, const std::vector<TumEntry>& entries) {
  std::string bytes;
  char line[256];
  for (const TumEntry& e : entries) {
    std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  e.timestamp, e.pose.t.x(), e.pose.t.y(), e.pose.t.z(), e.pose.q.x(),
                  e.pose.q.y(), e.pose.q.z(), e.pose.q.w());
    bytes += line;
  }
  write_file(path, bytes);
}

std::vector<TumEntry> read_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<TumEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    TumEntry e;
    double qx, qy, qz, qw;
    if (!(fields >> e.timestamp >> e.pose.t.x() >> e.pose.t.y() >> e.pose.t.z() >> qx >> qy >>
          qz >> qw))
      throw Error(path + ":" + std::to_string(line_no) + ": expected 8 numeric fields");
    e.pose.q = Eigen::Quaterniond(qw, qx, qy, qz);
    entries.push_back(e);
  }
  return entries;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  const auto trim = [](std::string s) {
    const std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(line_no) + ": expected key=value, got '" +
                  stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(stripped.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  return parse_config_text(read_file(path));
}

}  // namespace ramp
