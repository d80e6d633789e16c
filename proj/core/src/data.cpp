#include "otkhorn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "otkhorn/rng.hpp"
#include "otkhorn/summation.hpp"

namespace otk {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, std::size_t offset, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw FormatError(std::string("truncated while reading ") + what, offset);
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

int foreground_side(int side, double fg_fraction) {
  return static_cast<int>(std::lround(std::sqrt(fg_fraction) * side));
}

}  // namespace

Measure GridImage::to_measure() const {
  if (!normalized) {
    throw std::logic_error("GridImage::to_measure: image is not normalized");
  }
  Vector flat(side * side);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) flat[i * side + j] = intensities(i, j);
  }
  return Measure(std::move(flat));
}

GridImage gen_synthetic_image_raw(std::uint64_t seed, int side, double fg_fraction) {
  if (side < 2) throw std::invalid_argument("gen_synthetic_image: side must be >= 2");
  if (!(fg_fraction > 0.0) || fg_fraction > 1.0) {
    throw std::invalid_argument("gen_synthetic_image: fg_fraction must lie in (0, 1]");
  }
  const int fg = foreground_side(side, fg_fraction);
  if (fg > side) {
    throw std::invalid_argument("gen_synthetic_image: foreground square exceeds image");
  }

  CounterRng rng(seed);
  GridImage image;
  image.side = side;
  image.intensities.resize(side, side);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) image.intensities(i, j) = rng.uniform01();
  }
  const int row = static_cast<int>(rng.uniform_below(side - fg + 1));
  const int col = static_cast<int>(rng.uniform_below(side - fg + 1));
  for (int i = row; i < row + fg; ++i) {
    for (int j = col; j < col + fg; ++j) {
      image.intensities(i, j) = 50.0 * rng.uniform01();
    }
  }
  return image;
}

GridImage gen_synthetic_image(std::uint64_t seed, int side, double fg_fraction) {
  GridImage image = gen_synthetic_image_raw(seed, side, fg_fraction);
  image.intensities /= image.intensities.sum();
  image.normalized = true;
  return image;
}

Rect synthetic_foreground_rect(std::uint64_t seed, int side, double fg_fraction) {
  if (side < 2) throw std::invalid_argument("synthetic_foreground_rect: side must be >= 2");
  const int fg = foreground_side(side, fg_fraction);
  CounterRng rng(seed);
  for (int k = 0; k < side * side; ++k) rng.uniform01();  // skip background draws
  Rect rect;
  rect.size = fg;
  rect.row = static_cast<int>(rng.uniform_below(side - fg + 1));
  rect.col = static_cast<int>(rng.uniform_below(side - fg + 1));
  return rect;
}

CostMatrix l1_ground_cost(int side) {
  if (side < 1) throw std::invalid_argument("l1_ground_cost: side must be >= 1");
  const int n = side * side;
  Matrix cost(n, n);
  for (int p = 0; p < n; ++p) {
    const int pr = p / side;
    const int pc = p % side;
    for (int q = 0; q < n; ++q) {
      const int qr = q / side;
      const int qc = q % side;
      cost(p, q) = std::abs(pr - qr) + std::abs(pc - qc);
    }
  }
  return CostMatrix(std::move(cost));
}

std::vector<GridImage> load_mnist_idx(const std::string& images_path,
                                      const std::optional<std::string>& labels_path) {
  std::ifstream in(images_path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX image file " + images_path, 0);

  const std::uint32_t magic = read_be32(in, 0, "magic");
  if (magic != kImagesMagic) {
    throw FormatError("bad IDX image magic (expected 0x00000803)", 0);
  }
  const std::uint32_t count = read_be32(in, 4, "image count");
  const std::uint32_t rows = read_be32(in, 8, "row count");
  const std::uint32_t cols = read_be32(in, 12, "column count");
  if (rows == 0 || rows != cols) {
    throw FormatError("IDX images must be square and nonempty", 8);
  }

  std::vector<GridImage> images;
  images.reserve(count);
  std::vector<unsigned char> pixels(rows * cols);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::size_t offset = 16 + std::size_t(k) * rows * cols;
    in.read(reinterpret_cast<char*>(pixels.data()), pixels.size());
    if (!in) {
      throw FormatError("truncated IDX image data", offset + in.gcount());
    }
    GridImage image;
    image.side = static_cast<int>(rows);
    image.intensities.resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        const double v = static_cast<double>(pixels[i * cols + j]);
        image.intensities(i, j) = (v == 0.0) ? 1e-6 : v;
      }
    }
    image.intensities /= image.intensities.sum();
    image.normalized = true;
    images.push_back(std::move(image));
  }

  if (labels_path) {
    std::ifstream lin(*labels_path, std::ios::binary);
    if (!lin) throw FormatError("cannot open IDX label file " + *labels_path, 0);
    const std::uint32_t lmagic = read_be32(lin, 0, "label magic");
    if (lmagic != kLabelsMagic) {
      throw FormatError("bad IDX label magic (expected 0x00000801)", 0);
    }
    const std::uint32_t lcount = read_be32(lin, 4, "label count");
    if (lcount != count) {
      throw FormatError("IDX label count does not match image count", 4);
    }
  }
  return images;
}

void write_idx_images(const std::string& path,
                      const std::vector<std::vector<std::uint8_t>>& images, int rows,
                      int cols) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  for (const auto& image : images) {
    if (image.size() != static_cast<std::size_t>(rows) * cols) {
      throw std::invalid_argument("write_idx_images: pixel count mismatch");
    }
    out.write(reinterpret_cast<const char*>(image.data()), image.size());
  }
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), labels.size());
}

double competitive_ratio(double d1, double d2) {
  if (!(d1 > 0) || !(d2 > 0)) {
    throw std::domain_error("competitive_ratio: distances must be positive");
  }
  return std::log(d1 / d2);
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged CSV in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV " + path);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Vector read_csv_vector(const std::string& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  // A square single image is also accepted, flattened row-major.
  Vector flat(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat[i * m.cols() + j] = m(i, j);
  }
  return flat;
}

}  // namespace otk
