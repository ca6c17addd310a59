#pragma once
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sacpid::percep {

// W x H binary grid, row-major, 1 = line ink.  Row 0 is the top of the
// camera frame; the bottom rows are nearest the robot.
struct BinaryImage {
  int w{};
  int h{};
  std::vector<std::uint8_t> px;

  BinaryImage() = default;
  BinaryImage(int width, int height)
      : w(width), h(height), px(static_cast<std::size_t>(width) * height, 0) {}

  std::uint8_t at(int col, int row) const {
    return px[static_cast<std::size_t>(row) * w + col];
  }
  void set(int col, int row, std::uint8_t v) {
    px[static_cast<std::size_t>(row) * w + col] = v;
  }
  int ink_count() const;
  bool empty_ink() const { return ink_count() == 0; }
};

BinaryImage mirror_horizontal(const BinaryImage& img);

// PGM/PBM io.  Ink is dark: a gray pixel becomes ink when
// gray < threshold * maxval.  Throws std::runtime_error on malformed input.
BinaryImage ingest_frame(const std::string& path, double threshold = 0.5);
BinaryImage decode_pnm(const std::vector<std::uint8_t>& bytes, double threshold = 0.5);
void write_pgm(const BinaryImage& img, const std::string& path);
void write_pbm(const BinaryImage& img, const std::string& path);

}  // namespace sacpid::percep
