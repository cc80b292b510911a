#include "uci/image_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace uci {

namespace {

// Reads the next decimal token, skipping whitespace and # comments.
int next_token(std::istream& in) {
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      break;
    }
  }
  if (c == EOF) throw InvalidImage("truncated netpbm header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw InvalidImage("malformed netpbm header");
  return value;
}

}  // namespace

RgbImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidImage("cannot open " + path.string());
  char p, kind;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6')) {
    throw InvalidImage("unsupported image format (expected P2/P3/P5/P6 netpbm): " + path.string());
  }
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  const int width = next_token(in);
  const int height = next_token(in);
  const int maxval = next_token(in);
  if (width < 1 || height < 1) throw InvalidImage("bad image dimensions");
  if (maxval != 255) throw InvalidImage("only 8-bit netpbm images are supported");

  RgbImage img;
  const int channels = color ? 3 : 1;
  img.channels.assign(static_cast<std::size_t>(channels), Grid(height, width));

  if (binary) {
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    std::vector<unsigned char> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) throw InvalidImage("truncated pixel data");
    std::size_t idx = 0;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        for (int ch = 0; ch < channels; ++ch)
          img.channels[static_cast<std::size_t>(ch)](r, c) = static_cast<double>(buf[idx++]);
  } else {
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        for (int ch = 0; ch < channels; ++ch)
          img.channels[static_cast<std::size_t>(ch)](r, c) = static_cast<double>(next_token(in));
  }
  return img;
}

void write_pgm(const Grid& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << g.cols() << ' ' << g.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.cols()));
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      const double v = std::floor(std::clamp(g(r, c), 0.0, 255.0) + 0.5);
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(v);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("short write to " + path.string());
}

Grid load_luminance(const std::filesystem::path& path, Dims crop) {
  return center_crop(to_luminance(load_image(path)), crop);
}

}  // namespace uci
