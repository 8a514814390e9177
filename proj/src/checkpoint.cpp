#include "evsched/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace evsched {
namespace {

constexpr char kMagic[8] = {'E', 'V', 'S', 'C', 'H', 'K', 'P', 'T'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("checkpoint is truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

void assign_network(DenseNet& to, const std::vector<NamedNet>& from, const std::string& name) {
  for (const NamedNet& n : from) {
    if (n.name != name) continue;
    if (n.net.layer_sizes() != to.layer_sizes()) {
      throw std::runtime_error(fmt::format("network '{}' has layer sizes [{}], expected [{}]",
                                           name, fmt::join(n.net.layer_sizes(), ","),
                                           fmt::join(to.layer_sizes(), ",")));
    }
    to.params() = n.net.params();
    return;
  }
  throw std::runtime_error(fmt::format("checkpoint has no network named '{}'", name));
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedNet>& nets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write checkpoint '{}'", path.string()));
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nets.size()));
  for (const NamedNet& n : nets) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n.name.size()));
    out.write(n.name.data(), static_cast<std::streamsize>(n.name.size()));
    const auto& sizes = n.net.layer_sizes();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size()));
    for (int s : sizes) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  }
  for (const NamedNet& n : nets) {
    for (Eigen::Index i = 0; i < n.net.param_count(); ++i) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(n.net.params()[i]));
    }
  }
  if (!out) throw std::runtime_error(fmt::format("failed writing checkpoint '{}'", path.string()));
}

std::vector<NamedNet> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open checkpoint '{}'", path.string()));
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(fmt::format("'{}' is not a checkpoint", path.string()));
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(fmt::format("unsupported checkpoint version {}", version));
  }
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedNet> nets;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get_le<std::uint32_t>(in);
    if (name_len > 4096) throw std::runtime_error("corrupt checkpoint name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto layers = get_le<std::uint32_t>(in);
    if (layers < 2 || layers > 64) throw std::runtime_error("corrupt checkpoint layer manifest");
    std::vector<int> sizes(layers);
    for (auto& s : sizes) s = static_cast<int>(get_le<std::uint32_t>(in));
    nets.push_back({std::move(name), DenseNet(std::move(sizes))});
  }
  for (NamedNet& n : nets) {
    for (Eigen::Index i = 0; i < n.net.param_count(); ++i) {
      n.net.params()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in));
    }
  }
  if (in.peek() != EOF) throw std::runtime_error("checkpoint has trailing bytes");
  return nets;
}

}  // namespace evsched
