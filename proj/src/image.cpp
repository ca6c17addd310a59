#include "sacpid/image.hpp"

#include <cctype>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace sacpid::percep {

int BinaryImage::ink_count() const {
  return std::accumulate(px.begin(), px.end(), 0);
}

BinaryImage mirror_horizontal(const BinaryImage& img) {
  BinaryImage out(img.w, img.h);
  for (int r = 0; r < img.h; ++r)
    for (int c = 0; c < img.w; ++c) out.set(img.w - 1 - c, r, img.at(c, r));
  return out;
}

namespace {

struct ByteReader {
  const std::vector<std::uint8_t>& b;
  std::size_t i = 0;
  bool eof() const { return i >= b.size(); }
  int get() { return eof() ? -1 : b[i++]; }
  int peek() const { return eof() ? -1 : b[i]; }
};

// Skip whitespace and '#' comments between header tokens.
void skip_ws(ByteReader& r) {
  while (!r.eof()) {
    int c = r.peek();
    if (std::isspace(c)) {
      r.get();
    } else if (c == '#') {
      while (!r.eof() && r.get() != '\n') {
      }
    } else {
      break;
    }
  }
}

int read_int(ByteReader& r) {
  skip_ws(r);
  if (r.eof() || !std::isdigit(r.peek()))
    throw std::runtime_error("pnm: malformed header");
  long v = 0;
  while (!r.eof() && std::isdigit(r.peek())) {
    v = v * 10 + (r.get() - '0');
    if (v > 1 << 30) throw std::runtime_error("pnm: header value out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

BinaryImage decode_pnm(const std::vector<std::uint8_t>& bytes, double threshold) {
  ByteReader r{bytes};
  if (r.get() != 'P') throw std::runtime_error("pnm: not a P1/P2/P4/P5 file");
  const int kind = r.get();
  if (kind != '1' && kind != '2' && kind != '4' && kind != '5')
    throw std::runtime_error("pnm: not a P1/P2/P4/P5 file");
  const int w = read_int(r);
  const int h = read_int(r);
  if (w <= 0 || h <= 0) throw std::runtime_error("pnm: bad dimensions");
  const bool bitmap = (kind == '1' || kind == '4');
  int maxval = 1;
  if (!bitmap) {
    maxval = read_int(r);
    if (maxval <= 0 || maxval > 65535) throw std::runtime_error("pnm: bad maxval");
  }
  BinaryImage img(w, h);
  const double cut = threshold * maxval;
  if (kind == '2') {
    for (int i = 0; i < w * h; ++i) {
      const int v = read_int(r);
      img.px[i] = v < cut ? 1 : 0;
    }
  } else if (kind == '1') {
    for (int i = 0; i < w * h; ++i) {
      skip_ws(r);
      const int c = r.get();
      if (c != '0' && c != '1') throw std::runtime_error("pnm: bad P1 sample");
      img.px[i] = c == '1' ? 1 : 0;  // pbm: 1 is black
    }
  } else {
    // single whitespace byte after the header
    if (!std::isspace(r.get())) throw std::runtime_error("pnm: malformed header");
    if (kind == '5') {
      const int bpp = maxval > 255 ? 2 : 1;
      for (int i = 0; i < w * h; ++i) {
        int v = r.get();
        if (bpp == 2) v = v * 256 + r.get();
        if (v < 0) throw std::runtime_error("pnm: truncated data");
        img.px[i] = v < cut ? 1 : 0;
      }
    } else {  // P4: packed bits, rows padded to whole bytes
      const int stride = (w + 7) / 8;
      for (int row = 0; row < h; ++row) {
        for (int bx = 0; bx < stride; ++bx) {
          const int byte = r.get();
          if (byte < 0) throw std::runtime_error("pnm: truncated data");
          for (int bit = 0; bit < 8; ++bit) {
            const int col = bx * 8 + bit;
            if (col < w) img.set(col, row, (byte >> (7 - bit)) & 1);
          }
        }
      }
    }
  }
  return img;
}

BinaryImage ingest_frame(const std::string& path, double threshold) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_pnm(bytes, threshold);
}

void write_pgm(const BinaryImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image: " + path);
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  for (auto v : img.px) f.put(v ? '\0' : '\xff');
}

void write_pbm(const BinaryImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image: " + path);
  f << "P4\n" << img.w << " " << img.h << "\n";
  const int stride = (img.w + 7) / 8;
  for (int row = 0; row < img.h; ++row) {
    for (int bx = 0; bx < stride; ++bx) {
      int byte = 0;
      for (int bit = 0; bit < 8; ++bit) {
        const int col = bx * 8 + bit;
        if (col < img.w && img.at(col, row)) byte |= 1 << (7 - bit);
      }
      f.put(static_cast<char>(byte));
    }
  }
}

}  // namespace sacpid::percep
