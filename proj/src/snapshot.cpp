#include "jsi/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace jsi {
namespace {

static_assert(sizeof(float) == 4);

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff),
                              static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

template <typename T>
void write_snapshot(std::ostream& out, const Tensor<T>& t) {
  const Shape& s = t.shape();
  out.write("JSIT", 4);
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(s.n));
  put_u32(out, static_cast<std::uint32_t>(s.c));
  put_u32(out, static_cast<std::uint32_t>(s.h));
  put_u32(out, static_cast<std::uint32_t>(s.w));
  std::vector<char> buf(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t[i]));
    buf[4 * i + 0] = static_cast<char>(bits & 0xff);
    buf[4 * i + 1] = static_cast<char>((bits >> 8) & 0xff);
    buf[4 * i + 2] = static_cast<char>((bits >> 16) & 0xff);
    buf[4 * i + 3] = static_cast<char>((bits >> 24) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("snapshot write failed");
}

template <typename T>
Tensor<T> read_snapshot(std::istream& in) {
  std::array<unsigned char, kSnapshotHeaderBytes> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  if (in.gcount() != static_cast<std::streamsize>(head.size()))
    throw std::runtime_error("truncated snapshot header");
  if (std::memcmp(head.data(), "JSIT", 4) != 0)
    throw std::runtime_error("bad snapshot magic");
  const std::uint32_t version = get_u32(head.data() + 4);
  if (version != kSnapshotVersion)
    throw std::runtime_error("unsupported snapshot version " +
                             std::to_string(version));
  Shape s{static_cast<int>(get_u32(head.data() + 8)),
          static_cast<int>(get_u32(head.data() + 12)),
          static_cast<int>(get_u32(head.data() + 16)),
          static_cast<int>(get_u32(head.data() + 20))};
  if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0 || s.numel() > (1ULL << 34))
    throw std::runtime_error("implausible snapshot shape " + s.str());
  std::vector<unsigned char> buf(s.numel() * 4);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error("truncated snapshot payload for shape " + s.str());
  Tensor<T> t(s);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<T>(std::bit_cast<float>(get_u32(buf.data() + 4 * i)));
  return t;
}

template <typename T>
void save_snapshot(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_snapshot(out, t);
}

template <typename T>
Tensor<T> load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot " + path.string());
  try {
    return read_snapshot<T>(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

template void write_snapshot(std::ostream&, const Tensor<float>&);
template void write_snapshot(std::ostream&, const Tensor<double>&);
template Tensor<float> read_snapshot(std::istream&);
template Tensor<double> read_snapshot(std::istream&);
template void save_snapshot(const std::filesystem::path&, const Tensor<float>&);
template void save_snapshot(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> load_snapshot(const std::filesystem::path&);
template Tensor<double> load_snapshot(const std::filesystem::path&);

}  // namespace jsi
