#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ramp {

struct NamedTensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

// Flat name -> tensor store, serialized as RTA1: magic "RTA1", u32 tensor
// count, then per tensor u16 name length, UTF-8 name, u8 dtype (0 = f32),
// u8 rank, rank x u32 dims, row-major f32 values; all little-endian.
class WeightArchive {
 public:
  void add(const std::string& name, std::vector<std::uint32_t> shape,
           std::vector<float> data);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const NamedTensor& get(const std::string& name) const;
  const std::map<std::string, NamedTensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  void save(const std::string& path) const;
  static WeightArchive load(const std::string& path);

 private:
  std::map<std::string, NamedTensor> tensors_;
};

}  // namespace ramp
