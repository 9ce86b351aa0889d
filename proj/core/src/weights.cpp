#include "ramp/weights.hpp"

#include <cstring>
#include <fstream>

#include "ramp/error.hpp"

namespace ramp {
namespace {

constexpr char kMagic[4] = {'R', 'T', 'A', '1'};

void put_bytes(std::vector<std::uint8_t>& b, const void* p, std::size_t n) {
  const auto* src = static_cast<const std::uint8_t*>(p);
  b.insert(b.end(), src, src + n);
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t pos() const { return pos_; }

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (pos_ + n > size_)
      throw ParseError(std::string("weight archive truncated reading ") + what, pos_);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::uint16_t u16(const char* what) {
    const std::uint8_t* p = take(2, what);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    const std::uint8_t* p = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  std::uint8_t u8(const char* what) { return *take(1, what); }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

void WeightArchive::add(const std::string& name, std::vector<std::uint32_t> shape,
                        std::vector<float> data) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != data.size())
    throw Error("weight tensor '" + name + "' data size does not match shape");
  if (name.empty() || name.size() > 65535)
    throw Error("weight tensor name length out of range");
  tensors_[name] = NamedTensor{std::move(shape), std::move(data)};
}

const NamedTensor& WeightArchive::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("weight tensor '" + name + "' missing");
  return it->second;
}

void WeightArchive::save(const std::string& path) const {
  std::vector<std::uint8_t> buf;
  put_bytes(buf, kMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& [name, tensor] : tensors_) {
    put_u16(buf, static_cast<std::uint16_t>(name.size()));
    put_bytes(buf, name.data(), name.size());
    buf.push_back(0);  // dtype f32
    buf.push_back(static_cast<std::uint8_t>(tensor.shape.size()));
    for (auto d : tensor.shape) put_u32(buf, d);
    for (float value : tensor.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &value, 4);
      put_u32(buf, bits);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error("write failed for " + path);
}

WeightArchive WeightArchive::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  Reader r(buf.data(), buf.size());
  const std::uint8_t* magic = r.take(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("weight archive has bad magic", 0);
  const std::uint32_t count = r.u32("tensor count");

  WeightArchive out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16("name length");
    const std::size_t name_pos = r.pos();
    const std::uint8_t* name_bytes = r.take(name_len, "name");
    std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    if (name.empty()) throw ParseError("empty tensor name", name_pos);
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype != 0)
      throw ParseError("unsupported dtype for tensor '" + name + "'", r.pos() - 1);
    const std::uint8_t rank = r.u8("rank");
    std::vector<std::uint32_t> shape(rank);
    std::size_t n = 1;
    for (int k = 0; k < rank; ++k) {
      shape[k] = r.u32("dim");
      n *= shape[k];
    }
    if (n > (1u << 30))
      throw ParseError("tensor '" + name + "' implausibly large", r.pos());
    std::vector<float> data(n);
    const std::uint8_t* raw = r.take(4 * n, "tensor data");
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | raw[4 * k + b];
      std::memcpy(&data[k], &bits, 4);
    }
    if (out.contains(name))
      throw ParseError("duplicate tensor name '" + name + "'", name_pos);
    out.add(name, std::move(shape), std::move(data));
  }
  if (r.pos() != buf.size())
    throw ParseError("trailing bytes after last tensor", r.pos());
  return out;
}

}  // namespace ramp
