#include "vantage/rfa.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace vantage {

namespace {

constexpr std::string_view kMagic = "RFA1\n";

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::format_error, "RFA: " + what); }

}  // namespace

std::vector<std::uint8_t> encode_rfa(const ScalarField& field) {
  const auto& g = field.geometry();
  nlohmann::ordered_json header;
  header["shape"] = g.shape();
  header["dtype"] = "f32le";
  header["order"] = "row-major";
  header["dx"] = g.dx();
  header["origin"] = std::vector<double>(g.origin().begin(), g.origin().begin() + g.dim());
  const std::string line = header.dump() + "\n";

  std::vector<std::uint8_t> out;
  out.reserve(kMagic.size() + line.size() + field.size() * 4);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.insert(out.end(), line.begin(), line.end());
  for (double v : field.values()) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) bad("value not representable as a finite float");
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  return out;
}

ScalarField decode_rfa(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    bad("bad magic");
  }
  std::size_t eol = kMagic.size();
  while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
  if (eol == bytes.size()) bad("unterminated header");
  const std::string text(bytes.begin() + static_cast<std::ptrdiff_t>(kMagic.size()),
                         bytes.begin() + static_cast<std::ptrdiff_t>(eol));
  const auto header = nlohmann::json::parse(text, nullptr, false);
  if (header.is_discarded() || !header.is_object()) bad("header is not a JSON object");

  std::vector<int> shape;
  std::vector<double> origin;
  double dx = 0.0;
  try {
    if (header.at("dtype") != "f32le") bad("unsupported dtype");
    if (header.at("order") != "row-major") bad("unsupported order");
    shape = header.at("shape").get<std::vector<int>>();
    dx = header.at("dx").get<double>();
    origin = header.at("origin").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed header: ") + e.what());
  }
  GridGeometry geometry;
  try {
    geometry = GridGeometry(shape, dx, origin);
  } catch (const Error& e) {
    bad(std::string("invalid geometry: ") + e.what());
  }
  const std::size_t payload = bytes.size() - eol - 1;
  if (payload != geometry.size() * 4) {
    bad("payload has " + std::to_string(payload) + " bytes, expected " + std::to_string(geometry.size() * 4));
  }
  std::vector<double> values(geometry.size());
  const std::uint8_t* p = bytes.data() + eol + 1;
  for (std::size_t i = 0; i < values.size(); ++i, p += 4) {
    const std::uint32_t u = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                            (std::uint32_t{p[3]} << 24);
    const float f = std::bit_cast<float>(u);
    if (!std::isfinite(f)) bad("non-finite value at index " + std::to_string(i));
    values[i] = f;
  }
  return ScalarField(geometry, std::move(values));
}

void write_rfa(const ScalarField& field, const std::filesystem::path& path) {
  const auto bytes = encode_rfa(field);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

ScalarField read_rfa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_rfa(bytes);
}

void write_pgm_preview(const ScalarField& field, const std::filesystem::path& path) {
  const auto& g = field.geometry();
  const int height = g.dim() == 3 ? g.extent(0) * g.extent(1) : g.extent(0);
  const int width = g.dim() == 3 ? g.extent(2) : g.extent(1);
  const double lo = field.min();
  const double hi = field.max();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  for (double v : field.values()) {
    out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround((v - lo) * scale))));
  }
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

}  // namespace vantage
