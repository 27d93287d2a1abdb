#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "radreg/elastic.hpp"
#include "radreg/image.hpp"
#include "radreg/mesh.hpp"
#include "radreg/radon.hpp"

namespace radreg {

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// PGM (P5, 8 or 16 bit) or grayscale PNG (8 or 16 bit), chosen by the file
/// signature. Intensities are rescaled by 1/255 or 1/65535. Images must be square.
Image read_image(const std::filesystem::path &path, double extent = 1.0);

/// Values are clamped to [0, 1]; bit_depth is 8 or 16. The top row of the file
/// is the largest y.
void write_png(const std::filesystem::path &path, const Image &img, int bit_depth = 16);
void write_pgm(const std::filesystem::path &path, const Image &img, int bit_depth = 16);

/// N rows of N comma-separated values, top row first as in the raster files.
void write_image_csv(const std::filesystem::path &path, const Image &img);

/// Line 1: "n_s,n_omega,s_min,s_max"; line 2: their values; then n_s rows of
/// n_omega values (row k is offset s_k).
void write_sinogram_csv(const std::filesystem::path &path, const Sinogram &sino);
Sinogram read_sinogram_csv(const std::filesystem::path &path);

/// Min-max normalised 8-bit PNG: rows are offsets (s_max at the top), columns angles.
void write_sinogram_png(const std::filesystem::path &path, const Sinogram &sino);

/// node,x,y,u_x,u_y
void write_nodal_field_csv(const std::filesystem::path &path, const DisplacementField &field);

/// row,col,x,y,u_x,u_y for every pixel centre.
void write_pixel_field_csv(const std::filesystem::path &path, const PixelField &field, int n, double extent = 1.0);
PixelField read_pixel_field_csv(const std::filesystem::path &path, int n);

/// Two fields side by side: row,col,x,y,<a>_x,<a>_y,<b>_x,<b>_y.
void write_pixel_fields_csv(const std::filesystem::path &path, const PixelField &a, const PixelField &b,
                            const std::string &name_a, const std::string &name_b, int n, double extent = 1.0);
/// Reads the column pair named prefix_x/prefix_y from such a file.
PixelField read_pixel_field_column(const std::filesystem::path &path, const std::string &prefix, int n);

/// Header "rows cols nnz", then "row col value" triplets, 0-based, one per
/// stored entry.
void write_stiffness_coo(const std::filesystem::path &path, const StiffnessMatrix &k);

/// triangle,area_ratio
void write_area_ratio_csv(const std::filesystem::path &path, const std::vector<double> &ratios);

/// RGB raster of the per-triangle area ratio at each pixel, diverging colour map
/// centred on 1 (blue: compression, white: unchanged, red: expansion), log scale
/// clamped to [1/2, 2].
void write_area_ratio_png(const std::filesystem::path &path, const DisplacementField &field, int n);

} // namespace radreg
