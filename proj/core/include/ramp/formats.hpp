#pragma once

#include <map>
#include <string>
#include <vector>

#include "ramp/geometry.hpp"
#include "ramp/image.hpp"

namespace ramp {

// Binary 8-bit grayscale PGM (P5, maxval 255). Intensities map linearly
// between [0,1] floats and bytes, so a round trip is exact to 1/255.
void write_pgm(const std::string& path, const ImageF32& image);
ImageF32 read_pgm(const std::string& path);

// TUM trajectory line: timestamp tx ty tz qx qy qz qw. Values are written
// with 17 significant digits so a round trip reproduces every double.
struct TumEntry {
  double timestamp = 0.0;
  Se3Pose pose;
};

void write_tum(const std::string& path, const std::vector<TumEntry>& entries);
std::vector<TumEntry> read_tum(const std::string& path);

// Flat key=value configuration text; '#' starts a comment, blank lines are
// skipped, later assignments win.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace ramp
