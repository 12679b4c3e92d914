#include "weights_io.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <sstream>

#include "error.hpp"

namespace slc::io {

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& in, std::uint64_t size) : in_(in), left_(size) {}

  template <typename T>
  T get(const char* what) {
    char buf[sizeof(T)];
    read(buf, sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return static_cast<T>(v);
  }

  void read(char* dst, std::uint64_t n, const char* what) {
    if (left_ < n)
      fail(ErrorCode::Format, std::string("weights file truncated while reading ") + what +
                                  " at byte " + std::to_string(pos_));
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in_.gcount()) != n)
      fail(ErrorCode::Format, std::string("weights file truncated while reading ") + what);
    left_ -= n;
    pos_ += n;
  }

  std::uint64_t left() const { return left_; }

 private:
  std::istream& in_;
  std::uint64_t left_;
  std::uint64_t pos_ = 0;
};

}  // namespace

void write_weights(const nn::Weights& weights, std::ostream& out) {
  out.write("SLCW", 4);
  put<std::uint32_t>(out, kWeightsVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(weights.size()));
  std::vector<char> buf;
  for (const auto& nt : weights.tensors()) {
    require(nt.name.size() <= std::numeric_limits<std::uint16_t>::max(),
            ErrorCode::InvalidArgument, "tensor name too long: " + nt.name);
    require(nt.value.rank() <= 255, ErrorCode::InvalidArgument, "tensor rank too large");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(nt.name.size()));
    out.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(nt.value.rank()));
    for (auto d : nt.value.shape()) put<std::uint64_t>(out, d);
    const auto data = nt.value.data();
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
      const std::size_t n = std::min(kChunk, data.size() - start);
      buf.resize(n * 4);
      for (std::size_t i = 0; i < n; ++i) {
        const auto u = std::bit_cast<std::uint32_t>(data[start + i]);
        for (int k = 0; k < 4; ++k) buf[i * 4 + k] = static_cast<char>((u >> (8 * k)) & 0xFF);
      }
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
}

nn::Weights read_weights(std::istream& in, std::uint64_t size) {
  Reader r(in, size);
  char magic[4];
  r.read(magic, 4, "magic");
  require(std::string(magic, 4) == "SLCW", ErrorCode::Format, "not a weights file: bad magic");
  const auto version = r.get<std::uint32_t>("version");
  require(version == kWeightsVersion, ErrorCode::Format,
          "unsupported weights file version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<nn::NamedTensor> tensors;
  std::vector<char> buf;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = r.get<std::uint16_t>("name length");
    std::string name(len, '\0');
    r.read(name.data(), len, "name");
    const auto ndim = r.get<std::uint8_t>("rank");
    Shape shape(ndim);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      const auto v = r.get<std::uint64_t>("dims");
      require(v > 0, ErrorCode::Format, "tensor '" + name + "' has a zero dimension");
      // Refuse sizes the rest of the file cannot hold before allocating.
      require(n <= r.left() / 4 / v, ErrorCode::Format,
              "weights file truncated: tensor '" + name + "' is larger than the remaining bytes");
      d = static_cast<std::size_t>(v);
      n *= v;
    }
    std::vector<float> data(n);
    constexpr std::uint64_t kChunk = 1 << 16;
    for (std::uint64_t start = 0; start < n; start += kChunk) {
      const std::uint64_t m = std::min(kChunk, n - start);
      buf.resize(m * 4);
      r.read(buf.data(), m * 4, "tensor data");
      for (std::uint64_t i = 0; i < m; ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k)
          u |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + k])) << (8 * k);
        data[start + i] = std::bit_cast<float>(u);
      }
    }
    tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  require(r.left() == 0, ErrorCode::Format, "trailing bytes after the last tensor");
  return nn::Weights(std::move(tensors));
}

std::string encode_weights(const nn::Weights& weights) {
  std::ostringstream ss;
  write_weights(weights, ss);
  return ss.str();
}

nn::Weights decode_weights(const std::string& bytes) {
  std::istringstream ss(bytes);
  return read_weights(ss, bytes.size());
}

void save_weights(const nn::Weights& weights, const std::filesystem::path& path) {
  // Write a sibling then rename so readers never see a half-written file.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::Io, "cannot write " + tmp.string());
    write_weights(weights, f);
    f.flush();
    require(f.good(), ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nn::Weights load_weights(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  require(!ec, ErrorCode::Io, "cannot read weights file " + path.string());
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot read weights file " + path.string());
  return read_weights(f, size);
}

}  // namespace slc::io
