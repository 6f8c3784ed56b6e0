#include "afx/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "afx/runtime.hpp"

namespace afx {

void resize_bilinear(const float* src, int sh, int sw, float* dst, int th, int tw) {
    const double sy = static_cast<double>(sh) / th;
    const double sx = static_cast<double>(sw) / tw;
    for (int i = 0; i < th; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double wy = fy - y0;
        for (int j = 0; j < tw; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * src[y0 * sw + x0] + wx * src[y0 * sw + x1];
            const double bot = (1.0 - wx) * src[y1 * sw + x0] + wx * src[y1 * sw + x1];
            dst[i * tw + j] = static_cast<float>((1.0 - wy) * top + wy * bot);
        }
    }
}

void resize_nearest(const float* src, int sh, int sw, float* dst, int th, int tw) {
    const double sy = static_cast<double>(sh) / th;
    const double sx = static_cast<double>(sw) / tw;
    for (int i = 0; i < th; ++i) {
        const int y = std::min(sh - 1, static_cast<int>((i + 0.5) * sy));
        for (int j = 0; j < tw; ++j) {
            const int x = std::min(sw - 1, static_cast<int>((j + 0.5) * sx));
            dst[i * tw + j] = src[y * sw + x];
        }
    }
}

void write_gray_image(const std::filesystem::path& path, const float* v, int h, int w,
                      float lo, float hi) {
    cv::Mat m(h, w, CV_8UC1);
    const float scale = 255.0f / (hi - lo);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const float u = std::round((v[i * w + j] - lo) * scale);
            m.at<uint8_t>(i, j) = static_cast<uint8_t>(std::min(255.0f, std::max(0.0f, u)));
        }
    atomic_write(path, [&](const std::filesystem::path& tmp) {
        if (!cv::imwrite(tmp.string(), m))
            throw ValidationError("cannot write image: " + path.string());
    });
}

Tensor read_image(const std::filesystem::path& path, bool as_gray) {
    if (!std::filesystem::exists(path))
        throw MissingArtifact("image not found: " + path.string());
    cv::Mat m = cv::imread(path.string(), as_gray ? cv::IMREAD_GRAYSCALE : cv::IMREAD_UNCHANGED);
    if (m.empty()) throw ValidationError("cannot decode image: " + path.string());
    const int ch = m.channels() >= 3 ? 3 : 1;
    Tensor out(1, ch, m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            if (ch == 1) {
                out.plane(0, 0)[i * m.cols + j] =
                    m.channels() == 1 ? m.at<uint8_t>(i, j) : m.at<cv::Vec3b>(i, j)[0];
            } else {
                const cv::Vec3b px = m.at<cv::Vec3b>(i, j);  // BGR on disk
                out.plane(0, 0)[i * m.cols + j] = px[2];
                out.plane(0, 1)[i * m.cols + j] = px[1];
                out.plane(0, 2)[i * m.cols + j] = px[0];
            }
        }
    return out;
}

Tensor compose_grid(const std::vector<Tensor>& tiles, int rows, int cols) {
    if (tiles.empty()) throw ValidationError("compose_grid: no tiles");
    const int h = tiles[0].h, w = tiles[0].w;
    Tensor sheet(1, 1, rows * h, cols * w);
    for (int t = 0; t < static_cast<int>(tiles.size()) && t < rows * cols; ++t) {
        const int r = t / cols, c = t % cols;
        for (int i = 0; i < h; ++i)
            std::copy_n(tiles[t].plane(0, 0) + i * w, w,
                        sheet.plane(0, 0) + (r * h + i) * (cols * w) + c * w);
    }
    return sheet;
}

}  // namespace afx
