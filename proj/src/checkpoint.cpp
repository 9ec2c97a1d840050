#include "pjx/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

constexpr char kMagic[4] = {'P', 'J', 'X', 'T'};

template <typename T>
void put_le(std::vector<char>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) throw CheckpointError("truncated checkpoint");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string get_string(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> encode_checkpoint(const ParameterSet& params) {
  std::vector<char> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& [name, tensor] : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (auto d : tensor.shape()) put_le<std::uint64_t>(out, d);
    for (double v : tensor.values()) put_le<double>(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<char>& bytes) {
  if (bytes.size() < 8 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw CheckpointError("not a PJXT checkpoint");
  }
  Reader in(bytes);
  in.get_string(4);
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  std::vector<NamedTensor> tensors;
  while (!in.done()) {
    NamedTensor t;
    t.name = in.get_string(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(in.get<std::uint64_t>());
    const auto n = shape_size(t.shape);
    if (n > bytes.size()) throw CheckpointError("corrupt dims for " + t.name);
    t.values.resize(n);
    for (auto& v : t.values) v = in.get<double>();
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  const auto bytes = encode_checkpoint(params);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void assign_parameters(const std::vector<NamedTensor>& tensors, ParameterSet& params) {
  if (tensors.size() != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                          std::to_string(params.size()));
  }
  for (const auto& t : tensors) {
    if (!params.contains(t.name)) throw CheckpointError("checkpoint tensor " + t.name + " not in model");
    auto& target = params.get(t.name);
    if (target.shape() != t.shape) {
      throw CheckpointError("shape mismatch for " + t.name + ": checkpoint " + shape_string(t.shape) + ", model " +
                            shape_string(target.shape()));
    }
    std::copy(t.values.begin(), t.values.end(), target.mutable_values().begin());
  }
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  assign_parameters(read_checkpoint(path), params);
}

}  // namespace pjx
