#include "radreg/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <png.h>

namespace radreg {

namespace fs = std::filesystem;

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::ofstream open_out(const fs::path &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const fs::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
    return is;
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

double parse_double(const std::string &s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \r", used) != std::string::npos) {
        throw std::runtime_error("malformed number '" + s + "'");
    }
    return v;
}

struct FileCloser {
    void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path &path, const char *mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    return f;
}

// Raw row-major samples (top row first) with their max value.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

void png_error_fn(png_structp, png_const_charp msg) { throw std::runtime_error(std::string("libpng: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

Raster read_png(const fs::path &path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!png) throw std::runtime_error("libpng: cannot create read struct");
    png_infop info = png_create_info_struct(png);
    Raster r;
    try {
        png_init_io(png, f.get());
        png_read_info(png, info);
        const int color = png_get_color_type(png, info);
        r.bit_depth = png_get_bit_depth(png, info);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && r.bit_depth < 8) {
            png_set_expand_gray_1_2_4_to_8(png);
            r.bit_depth = 8;
        }
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
        }
        if (r.bit_depth == 16) png_set_swap(png);
        png_read_update_info(png, info);
        r.width = static_cast<int>(png_get_image_width(png, info));
        r.height = static_cast<int>(png_get_image_height(png, info));
        r.bit_depth = png_get_bit_depth(png, info);
        const std::size_t rowbytes = png_get_rowbytes(png, info);
        std::vector<unsigned char> buf(rowbytes * r.height);
        std::vector<png_bytep> rows(r.height);
        for (int i = 0; i < r.height; ++i) rows[i] = buf.data() + i * rowbytes;
        png_read_image(png, rows.data());
        png_destroy_read_struct(&png, &info, nullptr);
        r.samples.resize(static_cast<std::size_t>(r.width) * r.height);
        for (int i = 0; i < r.height; ++i) {
            for (int j = 0; j < r.width; ++j) {
                if (r.bit_depth == 16) {
                    std::uint16_t v;
                    std::copy_n(rows[i] + 2 * j, 2, reinterpret_cast<unsigned char *>(&v));
                    r.samples[i * r.width + j] = v;
                } else {
                    r.samples[i * r.width + j] = rows[i][j];
                }
            }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    return r;
}

void write_png_raster(const fs::path &path, const Raster &r) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!png) throw std::runtime_error("libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, r.width, r.height, r.bit_depth, r.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const int bytes = r.bit_depth / 8;
        std::vector<unsigned char> row(static_cast<std::size_t>(r.width) * r.channels * bytes);
        for (int i = 0; i < r.height; ++i) {
            for (int j = 0; j < r.width * r.channels; ++j) {
                const std::uint16_t v = r.samples[static_cast<std::size_t>(i) * r.width * r.channels + j];
                if (bytes == 2) {
                    row[2 * j] = static_cast<unsigned char>(v >> 8);
                    row[2 * j + 1] = static_cast<unsigned char>(v & 0xff);
                } else {
                    row[j] = static_cast<unsigned char>(v);
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
}

Raster read_pgm(const fs::path &path) {
    std::ifstream is = open_in(path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw std::runtime_error("read_image: only binary PGM (P5) is supported");
    const auto next_int = [&is]() {
        is >> std::ws;
        while (is.peek() == '#') {
            std::string skip;
            std::getline(is, skip);
            is >> std::ws;
        }
        int v = 0;
        if (!(is >> v)) throw std::runtime_error("read_image: malformed PGM header");
        return v;
    };
    Raster r;
    r.width = next_int();
    r.height = next_int();
    const int maxval = next_int();
    is.get();
    if (maxval <= 0 || maxval > 65535) throw std::runtime_error("read_image: bad PGM maxval");
    r.bit_depth = maxval > 255 ? 16 : 8;
    r.samples.resize(static_cast<std::size_t>(r.width) * r.height);
    for (auto &v : r.samples) {
        const int hi = is.get();
        if (r.bit_depth == 16) {
            const int lo = is.get();
            v = static_cast<std::uint16_t>((hi << 8) | lo);
        } else {
            v = static_cast<std::uint16_t>(hi);
        }
    }
    if (!is) throw std::runtime_error("read_image: truncated PGM data");
    return r;
}

std::uint16_t quantize(double v, int max) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * max));
}

} // namespace

Image read_image(const fs::path &path, double extent) {
    std::array<unsigned char, 8> sig{};
    {
        std::ifstream is = open_in(path);
        is.read(reinterpret_cast<char *>(sig.data()), sig.size());
    }
    Raster r;
    if (png_sig_cmp(sig.data(), 0, sig.size()) == 0) {
        r = read_png(path);
    } else if (sig[0] == 'P' && sig[1] == '5') {
        r = read_pgm(path);
    } else {
        throw std::runtime_error("read_image: '" + path.string() + "' is neither PNG nor PGM");
    }
    if (r.width != r.height) throw std::runtime_error("read_image: image is not square");
    const double scale = r.bit_depth == 16 ? 65535.0 : 255.0;
    Image img(r.width, extent);
    for (int i = 0; i < r.height; ++i) {
        for (int j = 0; j < r.width; ++j) {
            img(r.height - 1 - i, j) = r.samples[static_cast<std::size_t>(i) * r.width + j] / scale;
        }
    }
    return img;
}

void write_png(const fs::path &path, const Image &img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_png: bit depth must be 8 or 16");
    const int n = img.size();
    const int max = bit_depth == 16 ? 65535 : 255;
    Raster r{n, n, 1, bit_depth, std::vector<std::uint16_t>(img.count())};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r.samples[static_cast<std::size_t>(i) * n + j] = quantize(img(n - 1 - i, j), max);
    write_png_raster(path, r);
}

void write_pgm(const fs::path &path, const Image &img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_pgm: bit depth must be 8 or 16");
    const int n = img.size();
    const int max = bit_depth == 16 ? 65535 : 255;
    std::ofstream os = open_out(path);
    os << "P5\n" << n << ' ' << n << '\n' << max << '\n';
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::uint16_t v = quantize(img(n - 1 - i, j), max);
            if (bit_depth == 16) os.put(static_cast<char>(v >> 8));
            os.put(static_cast<char>(v & 0xff));
        }
    }
}

void write_image_csv(const fs::path &path, const Image &img) {
    std::ofstream os = open_out(path);
    const int n = img.size();
    for (int i = n - 1; i >= 0; --i) {
        for (int j = 0; j < n; ++j) os << (j ? "," : "") << format_double(img(i, j));
        os << '\n';
    }
}

void write_sinogram_csv(const fs::path &path, const Sinogram &sino) {
    std::ofstream os = open_out(path);
    os << "n_s,n_omega,s_min,s_max\n"
       << sino.n_s() << ',' << sino.n_omega() << ',' << format_double(sino.s_min()) << ','
       << format_double(sino.s_max()) << '\n';
    for (int k = 0; k < sino.n_s(); ++k) {
        for (int m = 0; m < sino.n_omega(); ++m) os << (m ? "," : "") << format_double(sino(k, m));
        os << '\n';
    }
}

Sinogram read_sinogram_csv(const fs::path &path) {
    std::ifstream is = open_in(path);
    std::string line;
    std::getline(is, line);
    if (line.rfind("n_s,n_omega,s_min,s_max", 0) != 0) throw std::runtime_error("read_sinogram_csv: bad header");
    std::getline(is, line);
    const auto head = split_csv(line);
    if (head.size() != 4) throw std::runtime_error("read_sinogram_csv: bad header values");
    ProjectorGeometry g;
    g.n_s = std::stoi(head[0]);
    g.n_omega = std::stoi(head[1]);
    g.s_min = parse_double(head[2]);
    g.s_max = parse_double(head[3]);
    g.image_size = 2;
    g.validate();
    Sinogram s(g);
    for (int k = 0; k < g.n_s; ++k) {
        if (!std::getline(is, line)) throw std::runtime_error("read_sinogram_csv: truncated data");
        const auto cells = split_csv(line);
        if (static_cast<int>(cells.size()) != g.n_omega) throw std::runtime_error("read_sinogram_csv: ragged row");
        for (int m = 0; m < g.n_omega; ++m) s(k, m) = parse_double(cells[m]);
    }
    return s;
}

void write_sinogram_png(const fs::path &path, const Sinogram &sino) {
    const auto [lo, hi] = std::minmax_element(sino.data().begin(), sino.data().end());
    const double range = *hi > *lo ? *hi - *lo : 1.0;
    Raster r{sino.n_omega(), sino.n_s(), 1, 8, {}};
    r.samples.resize(static_cast<std::size_t>(r.width) * r.height);
    for (int k = 0; k < sino.n_s(); ++k) {
        for (int m = 0; m < sino.n_omega(); ++m) {
            r.samples[static_cast<std::size_t>(sino.n_s() - 1 - k) * r.width + m] =
                quantize((sino(k, m) - *lo) / range, 255);
        }
    }
    write_png_raster(path, r);
}

void write_nodal_field_csv(const fs::path &path, const DisplacementField &field) {
    std::ofstream os = open_out(path);
    os << "node,x,y,u_x,u_y\n";
    const TriMesh &mesh = field.mesh();
    for (int a = 0; a < mesh.node_count(); ++a) {
        os << a << ',' << format_double(mesh.nodes()[a].x) << ',' << format_double(mesh.nodes()[a].y) << ','
           << format_double(field.nodal()[a].x) << ',' << format_double(field.nodal()[a].y) << '\n';
    }
}

void write_pixel_field_csv(const fs::path &path, const PixelField &field, int n, double extent) {
    if (field.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("write_pixel_field_csv: size");
    const Image grid(n, extent);
    std::ofstream os = open_out(path);
    os << "row,col,x,y,u_x,u_y\n";
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 c = grid.center(i, j);
            const Vec2 &u = field[static_cast<std::size_t>(i) * n + j];
            os << i << ',' << j << ',' << format_double(c.x) << ',' << format_double(c.y) << ',' << format_double(u.x)
               << ',' << format_double(u.y) << '\n';
        }
    }
}

void write_pixel_fields_csv(const fs::path &path, const PixelField &a, const PixelField &b, const std::string &name_a,
                            const std::string &name_b, int n, double extent) {
    const auto count = static_cast<std::size_t>(n) * n;
    if (a.size() != count || b.size() != count) throw std::invalid_argument("write_pixel_fields_csv: size");
    const Image grid(n, extent);
    std::ofstream os = open_out(path);
    os << "row,col,x,y," << name_a << "_x," << name_a << "_y," << name_b << "_x," << name_b << "_y\n";
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 c = grid.center(i, j);
            const std::size_t p = static_cast<std::size_t>(i) * n + j;
            os << i << ',' << j << ',' << format_double(c.x) << ',' << format_double(c.y) << ','
               << format_double(a[p].x) << ',' << format_double(a[p].y) << ',' << format_double(b[p].x) << ','
               << format_double(b[p].y) << '\n';
        }
    }
}

PixelField read_pixel_field_column(const fs::path &path, const std::string &prefix, int n) {
    std::ifstream is = open_in(path);
    std::string line;
    std::getline(is, line);
    const auto header = split_csv(line);
    const auto col_of = [&header, &path](const std::string &name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("'" + path.string() + "' has no column " + name);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ci = col_of("row"), cj = col_of("col"), cx = col_of(prefix + "_x"), cy = col_of(prefix + "_y");
    PixelField out(static_cast<std::size_t>(n) * n);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw std::runtime_error("'" + path.string() + "': ragged row");
        const int i = std::stoi(cells[ci]), j = std::stoi(cells[cj]);
        if (i < 0 || j < 0 || i >= n || j >= n) throw std::runtime_error("'" + path.string() + "': pixel out of range");
        out[static_cast<std::size_t>(i) * n + j] = {parse_double(cells[cx]), parse_double(cells[cy])};
        ++rows;
    }
    if (rows != out.size()) throw std::runtime_error("'" + path.string() + "': expected one row per pixel");
    return out;
}

PixelField read_pixel_field_csv(const fs::path &path, int n) { return read_pixel_field_column(path, "u", n); }

void write_stiffness_coo(const fs::path &path, const StiffnessMatrix &k) {
    std::ofstream os = open_out(path);
    const auto &m = k.matrix();
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (int c = 0; c < m.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
        }
    }
}

void write_area_ratio_csv(const fs::path &path, const std::vector<double> &ratios) {
    std::ofstream os = open_out(path);
    os << "triangle,area_ratio\n";
    for (std::size_t t = 0; t < ratios.size(); ++t) os << t << ',' << format_double(ratios[t]) << '\n';
}

void write_area_ratio_png(const fs::path &path, const DisplacementField &field, int n) {
    const std::vector<double> ratios = area_ratios(field);
    const PixelShapeTable table(field.mesh(), n);
    Raster r{n, n, 3, 8, std::vector<std::uint16_t>(static_cast<std::size_t>(n) * n * 3)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double ratio = ratios[table.entries()[static_cast<std::size_t>(i) * n + j].triangle];
            // t in [-1, 1]: -1 at ratio 1/2 (or folded), +1 at ratio 2.
            const double t = ratio > 0.0 ? std::clamp(std::log2(ratio), -1.0, 1.0) : -1.0;
            const double red = t < 0.0 ? 1.0 + t : 1.0;
            const double green = 1.0 - std::abs(t);
            const double blue = t > 0.0 ? 1.0 - t : 1.0;
            const std::size_t o = (static_cast<std::size_t>(n - 1 - i) * n + j) * 3;
            r.samples[o] = quantize(red, 255);
            r.samples[o + 1] = quantize(green, 255);
            r.samples[o + 2] = quantize(blue, 255);
        }
    }
    write_png_raster(path, r);
}

} // namespace radreg
