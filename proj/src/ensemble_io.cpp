#include "qim/ensemble_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "qim/error.hpp"

namespace qim {

static_assert(std::endian::native == std::endian::little,
              "ensemble container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'Q', 'I', 'M', 'E', 'N', 'S', '\0', '\1'};
constexpr int kFormatVersion = 1;

void write_u64(std::ostream& out, std::uint64_t value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t value = 0;
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw QimError(ErrorCode::Io, "truncated ensemble container");
  return value;
}

std::vector<double> read_doubles(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw QimError(ErrorCode::Io, "truncated ensemble payload");
  return values;
}

}  // namespace

void write_ensemble(std::ostream& out, const SensingEnsemble& e) {
  std::vector<double> payload;
  std::string layout;
  if (e.kind() == EnsembleKind::Cdp) {
    layout = "masks-c128-rowmajor";
    const auto& masks = e.masks();
    for (Index l = 0; l < masks.rows(); ++l)
      for (Index j = 0; j < masks.cols(); ++j) {
        payload.push_back(masks(l, j).real());
        payload.push_back(masks(l, j).imag());
      }
  } else if (e.field() == Field::Real) {
    layout = "rows-f64-rowmajor";
    const auto& rows = e.real_rows();
    for (Index k = 0; k < rows.rows(); ++k)
      for (Index j = 0; j < rows.cols(); ++j) payload.push_back(rows(k, j));
  } else {
    layout = "rows-c128-rowmajor";
    const auto& rows = e.complex_rows();
    for (Index k = 0; k < rows.rows(); ++k)
      for (Index j = 0; j < rows.cols(); ++j) {
        payload.push_back(rows(k, j).real());
        payload.push_back(rows(k, j).imag());
      }
  }

  nlohmann::json header = {
      {"format_version", kFormatVersion},
      {"kind", to_string(e.kind())},
      {"field", to_string(e.field())},
      {"n", e.n()},
      {"m", e.m()},
      {"patterns", e.patterns()},
      {"seed", e.seed()},
      {"payload", layout},
      {"payload_bytes", payload.size() * sizeof(double)},
  };
  const std::string text = header.dump();
  out.write(kMagic, sizeof kMagic);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw QimError(ErrorCode::Io, "failed writing ensemble");
}

SensingEnsemble read_ensemble(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw QimError(ErrorCode::Io, "not an ensemble container");
  }
  const std::uint64_t header_size = read_u64(in);
  std::string text(header_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw QimError(ErrorCode::Io, "truncated ensemble header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw QimError(ErrorCode::Io, std::string("bad ensemble header: ") + ex.what());
  }
  if (header.value("format_version", 0) != kFormatVersion) {
    throw QimError(ErrorCode::Io, "unsupported ensemble format version");
  }
  const Index n = header.at("n").get<Index>();
  const Index m = header.at("m").get<Index>();
  const auto seed = header.at("seed").get<std::uint64_t>();
  const auto layout = header.at("payload").get<std::string>();
  if (n <= 0 || m <= 0) throw QimError(ErrorCode::Io, "bad ensemble dimensions");

  if (layout == "rows-f64-rowmajor") {
    const auto values = read_doubles(in, static_cast<std::size_t>(m * n));
    Eigen::MatrixXd rows(m, n);
    for (Index k = 0; k < m; ++k)
      for (Index j = 0; j < n; ++j) rows(k, j) = values[k * n + j];
    return SensingEnsemble::from_rows(std::move(rows), seed);
  }
  if (layout == "rows-c128-rowmajor") {
    const auto values = read_doubles(in, static_cast<std::size_t>(2 * m * n));
    Eigen::MatrixXcd rows(m, n);
    for (Index k = 0; k < m; ++k)
      for (Index j = 0; j < n; ++j)
        rows(k, j) = {values[2 * (k * n + j)], values[2 * (k * n + j) + 1]};
    return SensingEnsemble::from_rows(std::move(rows), seed);
  }
  if (layout == "masks-c128-rowmajor") {
    const Index patterns = header.at("patterns").get<Index>();
    if (patterns <= 0 || patterns * n != m) {
      throw QimError(ErrorCode::Io, "cdp header: m != L*n");
    }
    const auto values = read_doubles(in, static_cast<std::size_t>(2 * patterns * n));
    Eigen::MatrixXcd masks(patterns, n);
    for (Index l = 0; l < patterns; ++l)
      for (Index j = 0; j < n; ++j)
        masks(l, j) = {values[2 * (l * n + j)], values[2 * (l * n + j) + 1]};
    return SensingEnsemble::from_masks(std::move(masks), seed);
  }
  throw QimError(ErrorCode::Io, "unknown payload layout '" + layout + "'");
}

void save_ensemble(const std::string& path, const SensingEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw QimError(ErrorCode::Io, "cannot open " + path);
  write_ensemble(out, ensemble);
}

SensingEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QimError(ErrorCode::Io, "cannot open " + path);
  return read_ensemble(in);
}

}  // namespace qim
