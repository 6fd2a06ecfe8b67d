#include "dtf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "dtf/errors.hpp"

namespace dtf {
namespace {

constexpr char kMagic[4] = {'D', 'T', 'F', 'K'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterList& params) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    const auto& shape = p.tensor.shape();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto e : shape) put_le<std::uint64_t>(out, e);
    for (double v : p.tensor.data()) put_le<double>(out, v);
  }
  return out;
}

ParameterList decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                      [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  if (bytes[4] != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(bytes[4]));
  }
  Reader in(bytes.subspan(5));
  const auto count = in.get<std::uint32_t>();
  ParameterList params;
  params.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    std::string name = in.get_string(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = in.get<double>();
    params.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint records");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

void assign_values(const ParameterList& source, const ParameterList& target) {
  if (source.size() != target.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(source.size()) + " tensors, model expects " +
                         std::to_string(target.size()));
  }
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto& s = source[i];
    const auto& t = target[i];
    if (s.name != t.name || s.tensor.shape() != t.tensor.shape()) {
      throw DimensionError("checkpoint tensor '" + s.name + "' " + shape_string(s.tensor.shape()) +
                           " does not match model tensor '" + t.name + "' " + shape_string(t.tensor.shape()));
    }
  }
  for (std::size_t i = 0; i < source.size(); ++i) {
    auto dst = Tensor(target[i].tensor).mutable_data();
    std::copy(source[i].tensor.data().begin(), source[i].tensor.data().end(), dst.begin());
  }
}

void load_checkpoint_into(const std::filesystem::path& path, const ParameterList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  assign_values(decode_checkpoint(bytes), params);
}

std::size_t checkpoint_hash(const ParameterList& params) {
  const auto bytes = encode_checkpoint(params);
  return std::hash<std::string_view>{}(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::size_t total_scalars(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

}  // namespace dtf
