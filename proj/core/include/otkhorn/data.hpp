#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otkhorn/types.hpp"

namespace otk {

// File-format failure carrying the byte offset where parsing stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

struct GridImage {
  int side = 0;
  Matrix intensities;  // side x side, atom index = row * side + col
  bool normalized = false;

  // Requires a normalized image.
  Measure to_measure() const;
};

struct Rect {
  int row = 0;
  int col = 0;
  int size = 0;
};

// Random square-on-noise test image: background pixels ~ U[0,1], a foreground
// square of side round(sqrt(fg_fraction) * side) with pixels ~ U[0,50] at a
// uniformly random position, normalized to total mass one. Sampling order is
// fixed (background row-major, then corner row/col, then foreground
// row-major) so a seed reproduces the image bit for bit.
GridImage gen_synthetic_image(std::uint64_t seed, int side = 20,
                              double fg_fraction = 0.1);
// Same image without the final normalization.
GridImage gen_synthetic_image_raw(std::uint64_t seed, int side = 20,
                                  double fg_fraction = 0.1);
// The foreground placement a given seed produces.
Rect synthetic_foreground_rect(std::uint64_t seed, int side = 20,
                               double fg_fraction = 0.1);

// Ground cost between pixel locations of a side x side grid:
// C[p][q] = |p_row - q_row| + |p_col - q_col|, so ||C||_inf = 2 (side - 1).
CostMatrix l1_ground_cost(int side);

// Reads a big-endian IDX image file (magic 0x00000803). Every zero intensity
// is replaced by 1e-6 and each image normalized to total mass one. When a
// labels path is given, its magic (0x00000801) and count must match.
std::vector<GridImage> load_mnist_idx(
    const std::string& images_path,
    const std::optional<std::string>& labels_path = std::nullopt);

// Writers for test fixtures; images are raw bytes in [0, 255].
void write_idx_images(const std::string& path,
                      const std::vector<std::vector<std::uint8_t>>& images, int rows,
                      int cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// log(d1 / d2) for two polytope distances.
double competitive_ratio(double d1, double d2);

// CSV helpers: one matrix row per line, 17 significant digits.
void write_csv_matrix(const std::string& path, const Matrix& m);
Matrix read_csv_matrix(const std::string& path);
Vector read_csv_vector(const std::string& path);

}  // namespace otk
