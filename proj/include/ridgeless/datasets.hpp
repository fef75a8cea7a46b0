#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ridgeless/linalg.hpp"
#include "ridgeless/random.hpp"

namespace ridgeless {

// ---------------------------------------------------------------------------
// IDX (MNIST container): big-endian 32-bit magic, one 32-bit size per
// dimension, then unsigned bytes in row-major order.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Images and labels exactly as stored on disk.
struct RawImages {
  Index count = 0;
  Index rows = 0;
  Index cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
  std::vector<std::uint8_t> labels;  // count

  Index pixels_per_image() const noexcept { return rows * cols; }
};

/// Pixels mapped to [-1, 1], one image per row.
struct LabeledImages {
  Matrix pixels;
  std::vector<int> labels;
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Reason::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const std::string& path) {
  if (buf.size() < offset + 4) throw ParseError(ParseError::Reason::Truncated, "'" + path + "': truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

inline std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace detail

inline RawImages read_idx_images(const std::string& path) {
  const auto buf = detail::read_file(path);
  const auto magic = detail::read_be32(buf, 0, path);
  if (magic != kIdxImageMagic)
    throw ParseError(ParseError::Reason::BadMagic, "'" + path + "': expected image magic 0x803, found " +
                                                       detail::hex32(magic));
  RawImages img;
  img.count = detail::read_be32(buf, 4, path);
  img.rows = detail::read_be32(buf, 8, path);
  img.cols = detail::read_be32(buf, 12, path);
  const std::size_t payload = static_cast<std::size_t>(img.count * img.rows * img.cols);
  if (buf.size() < 16 + payload) throw ParseError(ParseError::Reason::Truncated, "'" + path + "': truncated pixel data");
  img.pixels.assign(buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return img;
}

inline std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  const auto buf = detail::read_file(path);
  const auto magic = detail::read_be32(buf, 0, path);
  if (magic != kIdxLabelMagic)
    throw ParseError(ParseError::Reason::BadMagic, "'" + path + "': expected label magic 0x801, found " +
                                                       detail::hex32(magic));
  const std::size_t count = detail::read_be32(buf, 4, path);
  if (buf.size() < 8 + count) throw ParseError(ParseError::Reason::Truncated, "'" + path + "': truncated label data");
  return {buf.begin() + 8, buf.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

/// Reads an image file and its label file; the counts must agree.
inline RawImages load_idx(const std::string& images_path, const std::string& labels_path) {
  RawImages img = read_idx_images(images_path);
  img.labels = read_idx_labels(labels_path);
  if (static_cast<Index>(img.labels.size()) != img.count)
    throw ParseError(ParseError::Reason::CountMismatch, "'" + images_path + "' holds " + std::to_string(img.count) +
                                                            " images but '" + labels_path + "' holds " +
                                                            std::to_string(img.labels.size()) + " labels");
  return img;
}

inline void write_idx_images(const std::string& path, Index count, Index rows, Index cols,
                             const std::vector<std::uint8_t>& pixels) {
  if (static_cast<Index>(pixels.size()) != count * rows * cols)
    throw DimensionMismatchError("write_idx_images: pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(ParseError::Reason::Io, "cannot write '" + path + "'");
  detail::write_be32(out, kIdxImageMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(count));
  detail::write_be32(out, static_cast<std::uint32_t>(rows));
  detail::write_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(ParseError::Reason::Io, "cannot write '" + path + "'");
  detail::write_be32(out, kIdxLabelMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

/// v / 127.5 - 1, so 0 -> -1 and 255 -> 1.
constexpr double normalize_pixel(std::uint8_t v) noexcept { return static_cast<double>(v) / 127.5 - 1.0; }

inline LabeledImages normalize_pixels(const RawImages& raw) {
  const Index d = raw.pixels_per_image();
  LabeledImages out;
  out.pixels.resize(raw.count, d);
  for (Index i = 0; i < raw.count; ++i)
    for (Index j = 0; j < d; ++j) out.pixels(i, j) = normalize_pixel(raw.pixels[static_cast<std::size_t>(i * d + j)]);
  out.labels.assign(raw.labels.begin(), raw.labels.end());
  for (int l : out.labels)
    if (l < 0 || l > 9) throw InvalidInputError("normalize_pixels: label " + std::to_string(l) + " outside 0..9");
  return out;
}

// ---------------------------------------------------------------------------
// Random Fourier features
// ---------------------------------------------------------------------------

struct RffConfig {
  Index input_dim = 784;
  Index n_features = 1000;  // complex frequencies; output width is twice this
  double kernel_sigma = 0.1;  // standard deviation of the projection entries
  std::uint64_t seed = 0;

  void validate() const {
    if (input_dim < 1) throw InvalidInputError("RffConfig: input_dim must be >= 1");
    if (n_features < 1) throw InvalidInputError("RffConfig: n_features must be >= 1");
    if (!(kernel_sigma > 0.0) || !std::isfinite(kernel_sigma))
      throw InvalidInputError("RffConfig: kernel_sigma must be > 0");
  }
};

inline Matrix sample_rff_matrix(const RffConfig& cfg) {
  cfg.validate();
  Engine eng = make_engine(substream(cfg.seed, StreamTag::RffMatrix, 0));
  return gaussian_matrix(cfg.input_dim, cfg.n_features, cfg.kernel_sigma, eng);
}

/// Real and imaginary parts of exp(-i X W): [cos(XW), -sin(XW)].
inline Matrix rff_transform(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.rows())
    throw DimensionMismatchError("rff_transform: input has " + std::to_string(x.cols()) + " columns, W has " +
                                 std::to_string(w.rows()) + " rows");
  const Matrix phase = x * w;
  Matrix out(x.rows(), 2 * w.cols());
  out.leftCols(w.cols()) = phase.array().cos().matrix();
  out.rightCols(w.cols()) = (-phase.array().sin()).matrix();
  return out;
}

// ---------------------------------------------------------------------------
// CSV: comma separated, header row, '.' decimals, no quoting.
// ---------------------------------------------------------------------------

struct CsvDataset {
  Dataset data;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace detail

inline CsvDataset load_csv(const std::string& path, const std::string& response_column) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Reason::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(ParseError::Reason::Truncated, "'" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  for (auto c : detail::split_commas(line)) header.emplace_back(c);
  Index response_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == response_column) response_idx = static_cast<Index>(j);
  if (response_idx < 0)
    throw ParseError(ParseError::Reason::MissingColumn, "'" + path + "': no column named '" + response_column + "'");
  if (header.size() < 2) throw ParseError(ParseError::Reason::MissingColumn, "'" + path + "': no predictor columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size())
      throw ParseError(ParseError::Reason::Ragged, "'" + path + "' line " + std::to_string(line_no) + ": expected " +
                                                       std::to_string(header.size()) + " cells, found " +
                                                       std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto cell : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError(ParseError::Reason::BadCell, "'" + path + "' line " + std::to_string(line_no) +
                                                          ": non-numeric cell '" + std::string(cell) + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(ParseError::Reason::Truncated, "'" + path + "': no data rows");

  const Index n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(header.size()) - 1;
  Matrix x(n, p);
  Vector y(n);
  CsvDataset out{Dataset(Matrix::Zero(1, 1), Vector::Zero(1)), {}, response_column};
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<Index>(j) != response_idx) out.predictor_names.push_back(header[j]);
  for (Index i = 0; i < n; ++i) {
    Index col = 0;
    for (Index j = 0; j <= p; ++j) {
      if (j == response_idx)
        y(i) = rows[i][j];
      else
        x(i, col++) = rows[i][j];
    }
  }
  out.data = Dataset(std::move(x), std::move(y));
  return out;
}

struct Standardized {
  Dataset data;
  std::vector<Index> constant_columns;  // centered only
  bool constant_response = false;
};

namespace detail {

/// Centers v and scales it to unit sample sd (ddof = 1). Returns false, leaving
/// it only centered, when the sd is zero.
inline bool standardize_in_place(Eigen::Ref<Vector> v) {
  const double mean = v.mean();
  v.array() -= mean;
  if (v.size() < 2) return false;
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size() - 1));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    v.setZero();
    return false;
  }
  v /= sd;
  return true;
}

}  // namespace detail

/// Centers every column and the response and scales them to unit sample
/// standard deviation. Constant columns are centered and reported.
inline Standardized standardize(const Dataset& data) {
  Matrix x = data.x();
  Vector y = data.y();
  Standardized out{Dataset(Matrix::Zero(1, 1), Vector::Zero(1)), {}, false};
  for (Index j = 0; j < x.cols(); ++j) {
    Vector col = x.col(j);
    if (!detail::standardize_in_place(col)) out.constant_columns.push_back(j);
    x.col(j) = col;
  }
  out.constant_response = !detail::standardize_in_place(y);
  out.data = Dataset(std::move(x), std::move(y));
  return out;
}

}  // namespace ridgeless
