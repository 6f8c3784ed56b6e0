#pragma once

#include <filesystem>
#include <vector>

#include "afx/tensor.hpp"

namespace afx {

// Single-channel resize. Bilinear uses half-pixel centers with clamped edge
// sampling; nearest picks floor((d+0.5)*scale). Both are identity when the
// sizes already match.
void resize_bilinear(const float* src, int sh, int sw, float* dst, int th, int tw);
void resize_nearest(const float* src, int sh, int sw, float* dst, int th, int tw);

// 8-bit grayscale PNG/JPEG helpers. Values map [lo,hi] <-> [0,255] linearly
// with round-to-nearest and clamping on write.
void write_gray_image(const std::filesystem::path& path, const float* v, int h, int w,
                      float lo, float hi);
// Returns [0,255] floats; channels = 1 (grayscale) or 3 when as_gray is false
// and the file has colour.
Tensor read_image(const std::filesystem::path& path, bool as_gray);

// Lays out equally sized single-channel tiles ((1,1,h,w) each) row-major into
// one (1,1,rows*h,cols*w) sheet.
Tensor compose_grid(const std::vector<Tensor>& tiles, int rows, int cols);

}  // namespace afx
