#include "strokefield/io/bank_file.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace strokefield::io {
namespace {

constexpr char kMagic[8] = {'S', 'F', 'B', 'A', 'N', 'K', '1', '\0'};
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxChannels = 65536;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u32(out, bits);
}

struct Cursor {
  const std::string& data;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > data.size()) throw BankFileError("bank file truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<std::uint8_t>(data[pos + static_cast<std::size_t>(i)]);
    pos += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
};

}  // namespace

void save_bank(const FeatureBank<double>& bank, const std::string& path) {
  validate_bank(bank);
  std::string payload;
  payload.append(kMagic, sizeof kMagic);
  put_u32(payload, static_cast<std::uint32_t>(bank.layers.size()));
  for (const auto& layer : bank.layers) {
    put_u32(payload, static_cast<std::uint32_t>(layer.out_channels));
    put_u32(payload, static_cast<std::uint32_t>(layer.in_channels));
    for (const auto& tap : layer.taps)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) put_f32(payload, static_cast<float>(tap(ky, kx)));
    for (Eigen::Index o = 0; o < layer.bias.size(); ++o)
      put_f32(payload, static_cast<float>(layer.bias[o]));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BankFileError("cannot open " + path + " for writing");
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw BankFileError("failed writing " + path);
}

FeatureBank<double> load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BankFileError("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < sizeof kMagic || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0)
    throw BankFileError(path + ": not a feature bank file");
  Cursor cursor{data, sizeof kMagic};

  const std::uint32_t layer_count = cursor.u32();
  if (layer_count == 0 || layer_count > kMaxLayers)
    throw BankFileError(path + ": implausible layer count");

  FeatureBank<double> bank;
  bank.provenance = FeatureBank<double>::Provenance::kLoaded;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const std::uint32_t out_channels = cursor.u32();
    const std::uint32_t in_channels = cursor.u32();
    if (out_channels == 0 || out_channels > kMaxChannels || in_channels == 0 ||
        in_channels > kMaxChannels)
      throw BankFileError(path + ": implausible channel count in layer " + std::to_string(l));
    ConvLayer<double> layer;
    layer.out_channels = static_cast<int>(out_channels);
    layer.in_channels = static_cast<int>(in_channels);
    layer.taps.resize(static_cast<std::size_t>(out_channels) * in_channels);
    for (auto& tap : layer.taps)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) tap(ky, kx) = cursor.f32();
    layer.bias.resize(static_cast<Eigen::Index>(out_channels));
    for (std::uint32_t o = 0; o < out_channels; ++o)
      layer.bias[static_cast<Eigen::Index>(o)] = cursor.f32();
    bank.layers.push_back(std::move(layer));
  }
  if (cursor.pos != data.size())
    throw BankFileError(path + ": trailing bytes after declared payload");
  validate_bank(bank);
  return bank;
}

}  // namespace strokefield::io
