#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hivesig/metrics.hpp"
#include "hivesig/train.hpp"

namespace hivesig::img {

// 8-bit RGB raster, row-major, origin top-left.
struct Canvas {
    int width = 0, height = 0;
    std::vector<uint8_t> px;  // width*height*3

    Canvas(int w, int h, uint8_t r = 255, uint8_t g = 255, uint8_t b = 255);
    void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
    void fill_rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
    void line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
};

// Truecolor 8-bit PNG, filter 0 scanlines, zlib-deflated IDAT.
void write_png(const std::string& path, const Canvas& c);

// Count heatmap on the shared colormap, row = true class, darker grid lines.
void confusion_png(const metrics::ConfusionMatrix& cm, const std::string& path, int cell = 48);

// Training and validation loss per epoch; validation accuracy as a thin
// overlay on the right-hand unit scale.
void curves_png(const net::History& h, const std::string& path, int width = 640,
                int height = 400);

}  // namespace hivesig::img
