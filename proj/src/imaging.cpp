#include "admir/imaging.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <jpeglib.h>
#include <png.h>

namespace admir::imaging {

Image Image::solid(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

// ---------------------------------------------------------------------------
// PPM (P3 ascii / P6 binary)
// ---------------------------------------------------------------------------

namespace {

// Skips whitespace and '#' comment lines between PPM header tokens.
std::string next_ppm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      while (in.get(c) && c != '\n') {
      }
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

Image load_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AssetError("cannot open image: " + path.string());

  const std::string magic = next_ppm_token(in);
  if (magic != "P3" && magic != "P6") throw AssetError("not a PPM file: " + path.string());

  Image img;
  try {
    img.width = std::stoi(next_ppm_token(in));
    img.height = std::stoi(next_ppm_token(in));
    const int maxval = std::stoi(next_ppm_token(in));
    if (img.width <= 0 || img.height <= 0 || maxval != 255)
      throw AssetError("unsupported PPM geometry in " + path.string());
  } catch (const std::invalid_argument&) {
    throw AssetError("malformed PPM header: " + path.string());
  }

  const size_t n = static_cast<size_t>(img.width) * img.height * 3;
  img.pixels.resize(n);
  if (magic == "P6") {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
      throw AssetError("truncated PPM data: " + path.string());
  } else {
    for (size_t i = 0; i < n; ++i) {
      int v;
      if (!(in >> v) || v < 0 || v > 255) throw AssetError("malformed PPM data: " + path.string());
      img.pixels[i] = static_cast<uint8_t>(v);
    }
  }
  return img;
}

void save_ppm(const Image& img, const fs::path& path) {
  std::ostringstream header;
  header << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::string out = header.str();
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// PNG via libpng
// ---------------------------------------------------------------------------

Image load_png(const fs::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw AssetError("cannot open image: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw AssetError("libpng init failed");
  }

  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw AssetError("PNG decode failed: " + path.string());
  }

  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
  rows.resize(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = img.pixels.data() + img.index(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

void save_png(const Image& img, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw AssetError("cannot write image: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw AssetError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw AssetError("PNG encode failed: " + path.string());
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + img.index(0, y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---------------------------------------------------------------------------
// JPEG via libjpeg
// ---------------------------------------------------------------------------

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

Image load_jpeg(const fs::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw AssetError("cannot open image: " + path.string());

  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw AssetError("JPEG decode failed: " + path.string());
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  Image img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + img.index(0, static_cast<int>(cinfo.output_scanline));
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);
  return img;
}

void save_jpeg(const Image& img, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw AssetError("cannot write image: " + path.string());

  jpeg_compress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::fclose(fp);
    throw AssetError("JPEG encode failed: " + path.string());
  }

  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, fp);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 92, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(img.pixels.data()) +
                   img.index(0, static_cast<int>(cinfo.next_scanline));
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(fp);
}

std::string lower_extension(const fs::path& path) {
  return to_lower(path.extension().string());
}

}  // namespace

Image load_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return load_ppm(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return load_jpeg(path);
  throw AssetError("unsupported image format: " + path.string());
}

void save_image(const Image& img, const fs::path& path) {
  if (img.empty()) throw AssetError("refusing to write empty image: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return save_ppm(img, path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".jpg" || ext == ".jpeg") return save_jpeg(img, path);
  throw AssetError("unsupported image format: " + path.string());
}

Image resize(const Image& img, int width, int height) {
  if (img.empty()) throw AssetError("resize: empty source image");
  if (img.width == width && img.height == height) return img;

  Image out;
  out.width = width;
  out.height = height;
  out.pixels.resize(static_cast<size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(img.height - 1, y * img.height / height);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(img.width - 1, x * img.width / width);
      std::memcpy(&out.pixels[out.index(x, y)], &img.pixels[img.index(sx, sy)], 3);
    }
  }
  return out;
}

MeanColor mean_color(const Image& img, int x0, int y0, int w, int h) {
  MeanColor m;
  if (w <= 0 || h <= 0) return m;
  double n = static_cast<double>(w) * h;
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      const size_t i = img.index(x, y);
      m.r += img.pixels[i];
      m.g += img.pixels[i + 1];
      m.b += img.pixels[i + 2];
    }
  }
  m.r /= n;
  m.g /= n;
  m.b /= n;
  return m;
}

}  // namespace admir::imaging
