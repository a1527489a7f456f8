#include "hivesig/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "hivesig/errors.hpp"
#include "hivesig/tfrepr.hpp"

namespace hivesig::img {

Canvas::Canvas(int w, int h, uint8_t r, uint8_t g, uint8_t b) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw UsageError("canvas needs positive dimensions");
    px.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < px.size(); i += 3) {
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }
}

void Canvas::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = (static_cast<size_t>(y) * width + x) * 3;
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    for (int y = std::max(0, y0); y <= std::min(height - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(width - 1, x1); ++x) set(x, y, r, g, b);
}

void Canvas::line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

namespace {

void put_be32(std::string& s, uint32_t v) {
    s.push_back(static_cast<char>(v >> 24));
    s.push_back(static_cast<char>(v >> 16));
    s.push_back(static_cast<char>(v >> 8));
    s.push_back(static_cast<char>(v));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
    put_be32(out, static_cast<uint32_t>(data.size()));
    const size_t crc_from = out.size();
    out.append(type, 4);
    out += data;
    const uint32_t crc = static_cast<uint32_t>(
        ::crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_from),
                static_cast<uInt>(out.size() - crc_from)));
    put_be32(out, crc);
}

}  // namespace

void write_png(const std::string& path, const Canvas& c) {
    std::string ihdr;
    put_be32(ihdr, static_cast<uint32_t>(c.width));
    put_be32(ihdr, static_cast<uint32_t>(c.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);

    // filter byte 0 in front of every scanline
    const size_t stride = static_cast<size_t>(c.width) * 3;
    std::string raw;
    raw.reserve((stride + 1) * static_cast<size_t>(c.height));
    for (int y = 0; y < c.height; ++y) {
        raw.push_back(0);
        raw.append(reinterpret_cast<const char*>(c.px.data() + static_cast<size_t>(y) * stride),
                   stride);
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::string z(zlen, '\0');
    if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  9) != Z_OK)
        throw IoFailure("deflate failed for " + path);
    z.resize(zlen);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", "");

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoFailure("short write to " + path);
}

void confusion_png(const metrics::ConfusionMatrix& cm, const std::string& path, int cell) {
    const int k = cm.k();
    if (k == 0) throw EmptyMatrix("no classes to draw");
    if (cell < 4) throw UsageError("cells thinner than 4px are unreadable");
    const int pad = 8;
    const int side = k * cell + 2 * pad;
    Canvas cv(side, side);

    int64_t peak = 0;
    for (int64_t v : cm.counts) peak = std::max(peak, v);
    for (int t = 0; t < k; ++t)
        for (int p = 0; p < k; ++p) {
            const float v = peak > 0 ? static_cast<float>(cm.at(t, p)) /
                                           static_cast<float>(peak)
                                     : 0.0f;
            float rgb[3];
            tfrepr::colormap(v, rgb);
            cv.fill_rect(pad + p * cell, pad + t * cell, pad + (p + 1) * cell - 1,
                         pad + (t + 1) * cell - 1, static_cast<uint8_t>(rgb[0] * 255),
                         static_cast<uint8_t>(rgb[1] * 255), static_cast<uint8_t>(rgb[2] * 255));
        }
    for (int g = 0; g <= k; ++g) {
        cv.line(pad + g * cell, pad, pad + g * cell, pad + k * cell, 40, 40, 40);
        cv.line(pad, pad + g * cell, pad + k * cell, pad + g * cell, 40, 40, 40);
    }
    write_png(path, cv);
}

void curves_png(const net::History& h, const std::string& path, int width, int height) {
    Canvas cv(width, height);
    const int ml = 40, mr = 40, mt = 12, mb = 24;  // margins
    const int x0 = ml, x1 = width - mr, y0 = mt, y1 = height - mb;
    cv.line(x0, y0, x0, y1, 30, 30, 30);
    cv.line(x0, y1, x1, y1, 30, 30, 30);
    cv.line(x1, y0, x1, y1, 180, 180, 180);  // unit axis for accuracy

    const size_t n = h.epochs.size();
    if (n == 0) {
        write_png(path, cv);
        return;
    }
    double loss_top = 0.0;
    for (const auto& e : h.epochs) loss_top = std::max({loss_top, e.train_loss, e.val_loss});
    if (loss_top <= 0.0) loss_top = 1.0;

    const auto px = [&](size_t i) {
        return n == 1 ? (x0 + x1) / 2
                      : x0 + static_cast<int>(std::lround(static_cast<double>(i) * (x1 - x0) /
                                                          static_cast<double>(n - 1)));
    };
    const auto py_loss = [&](double v) {
        return y1 - static_cast<int>(std::lround(std::clamp(v / loss_top, 0.0, 1.0) * (y1 - y0)));
    };
    const auto py_unit = [&](double v) {
        return y1 - static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (y1 - y0)));
    };

    for (size_t i = 0; i + 1 < n; ++i) {
        cv.line(px(i), py_loss(h.epochs[i].train_loss), px(i + 1),
                py_loss(h.epochs[i + 1].train_loss), 31, 119, 180);
        cv.line(px(i), py_loss(h.epochs[i].val_loss), px(i + 1),
                py_loss(h.epochs[i + 1].val_loss), 255, 127, 14);
        cv.line(px(i), py_unit(h.epochs[i].val_acc), px(i + 1),
                py_unit(h.epochs[i + 1].val_acc), 44, 160, 44);
    }
    if (n == 1) {
        cv.fill_rect(px(0) - 1, py_loss(h.epochs[0].train_loss) - 1, px(0) + 1,
                     py_loss(h.epochs[0].train_loss) + 1, 31, 119, 180);
        cv.fill_rect(px(0) - 1, py_loss(h.epochs[0].val_loss) - 1, px(0) + 1,
                     py_loss(h.epochs[0].val_loss) + 1, 255, 127, 14);
    }
    if (h.best_epoch >= 0 && static_cast<size_t>(h.best_epoch) < n) {
        const int bx = px(static_cast<size_t>(h.best_epoch));
        cv.line(bx, y0, bx, y1, 214, 39, 40);
    }
    write_png(path, cv);
}

}  // namespace hivesig::img
