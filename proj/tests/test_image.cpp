#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "doctest.h"
#include "hivesig/errors.hpp"
#include "hivesig/image.hpp"

namespace img = hivesig::img;
namespace mx = hivesig::metrics;
namespace net = hivesig::net;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

uint32_t be32(const std::string& s, size_t off) {
    return (static_cast<uint32_t>(static_cast<uint8_t>(s[off])) << 24) |
           (static_cast<uint32_t>(static_cast<uint8_t>(s[off + 1])) << 16) |
           (static_cast<uint32_t>(static_cast<uint8_t>(s[off + 2])) << 8) |
           static_cast<uint32_t>(static_cast<uint8_t>(s[off + 3]));
}

struct Decoded {
    uint32_t width = 0, height = 0;
    std::vector<uint8_t> rgb;  // filter bytes stripped
};

// Minimal reader for exactly what write_png emits: IHDR, one IDAT, IEND,
// all CRCs verified, filter 0 everywhere.
Decoded decode_png(const std::string& bytes) {
    Decoded d;
    REQUIRE(bytes.size() > 8);
    REQUIRE(std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0);
    size_t off = 8;
    std::string idat;
    bool saw_end = false;
    while (off + 12 <= bytes.size()) {
        const uint32_t len = be32(bytes, off);
        const std::string type = bytes.substr(off + 4, 4);
        REQUIRE(off + 12 + len <= bytes.size());
        const uint32_t want_crc = be32(bytes, off + 8 + len);
        const uint32_t got_crc = static_cast<uint32_t>(
            ::crc32(0, reinterpret_cast<const Bytef*>(bytes.data() + off + 4),
                    static_cast<uInt>(len + 4)));
        REQUIRE(want_crc == got_crc);
        if (type == "IHDR") {
            d.width = be32(bytes, off + 8);
            d.height = be32(bytes, off + 12);
            CHECK(static_cast<uint8_t>(bytes[off + 16]) == 8);  // depth
            CHECK(static_cast<uint8_t>(bytes[off + 17]) == 2);  // truecolor
        } else if (type == "IDAT") {
            idat += bytes.substr(off + 8, len);
        } else if (type == "IEND") {
            saw_end = true;
        }
        off += 12 + len;
    }
    REQUIRE(saw_end);
    REQUIRE(off == bytes.size());

    const size_t stride = static_cast<size_t>(d.width) * 3 + 1;
    std::vector<uint8_t> raw(stride * d.height);
    uLongf rlen = static_cast<uLongf>(raw.size());
    REQUIRE(uncompress(raw.data(), &rlen, reinterpret_cast<const Bytef*>(idat.data()),
                       static_cast<uLong>(idat.size())) == Z_OK);
    REQUIRE(rlen == raw.size());
    for (uint32_t y = 0; y < d.height; ++y) {
        REQUIRE(raw[static_cast<size_t>(y) * stride] == 0);  // filter byte
        d.rgb.insert(d.rgb.end(), raw.begin() + static_cast<int64_t>(y * stride) + 1,
                     raw.begin() + static_cast<int64_t>((y + 1) * stride));
    }
    return d;
}

}  // namespace

TEST_SUITE("image") {

TEST_CASE("png files round-trip through an independent inflater") {
    img::Canvas cv(17, 9, 200, 201, 202);
    cv.set(0, 0, 1, 2, 3);
    cv.set(16, 8, 9, 8, 7);
    cv.line(2, 2, 14, 2, 50, 60, 70);
    const std::string path = "/tmp/hivesig_test_img.png";
    img::write_png(path, cv);

    const Decoded d = decode_png(slurp(path));
    CHECK(d.width == 17);
    CHECK(d.height == 9);
    REQUIRE(d.rgb.size() == 17u * 9u * 3u);
    CHECK(d.rgb[0] == 1);
    CHECK(d.rgb[1] == 2);
    CHECK(d.rgb[2] == 3);
    const size_t last = (8u * 17u + 16u) * 3u;
    CHECK(d.rgb[last] == 9);
    CHECK(d.rgb[last + 1] == 8);
    CHECK(d.rgb[last + 2] == 7);
    const size_t mid = (2u * 17u + 7u) * 3u;  // on the drawn line
    CHECK(d.rgb[mid] == 50);
    CHECK(d.rgb[mid + 1] == 60);
    CHECK(d.rgb[mid + 2] == 70);
    // untouched background
    const size_t bg = (5u * 17u + 5u) * 3u;
    CHECK(d.rgb[bg] == 200);

    img::write_png(path + ".b", cv);
    CHECK(slurp(path) == slurp(path + ".b"));
    std::remove(path.c_str());
    std::remove((path + ".b").c_str());

    CHECK_THROWS_AS(img::write_png("/nonexistent_dir_xyz/x.png", cv), hivesig::IoFailure);
    CHECK_THROWS_AS(img::Canvas(0, 5), hivesig::UsageError);
}

TEST_CASE("confusion heatmap colors scale with the counts") {
    mx::ConfusionMatrix cm;
    cm.class_names = {"a", "b"};
    cm.counts = {10, 0, 2, 6};
    const std::string path = "/tmp/hivesig_test_cmx.png";
    img::confusion_png(cm, path, 20);

    const Decoded d = decode_png(slurp(path));
    CHECK(d.width == 2 * 20 + 16);
    CHECK(d.height == d.width);

    const auto at = [&](int x, int y) {
        return &d.rgb[(static_cast<size_t>(y) * d.width + x) * 3];
    };
    // cell centers: (0,0) holds the peak (bright), (0,1) holds zero (dark)
    const uint8_t* peak = at(8 + 10, 8 + 10);
    const uint8_t* zero = at(8 + 30, 8 + 10);
    const int peak_sum = peak[0] + peak[1] + peak[2];
    const int zero_sum = zero[0] + zero[1] + zero[2];
    CHECK(peak_sum > zero_sum);
    std::remove(path.c_str());

    mx::ConfusionMatrix empty;
    CHECK_THROWS_AS(img::confusion_png(empty, path), hivesig::EmptyMatrix);
}

TEST_CASE("curve plots handle empty, single and long histories") {
    const std::string path = "/tmp/hivesig_test_curves.png";
    net::History h;
    img::curves_png(h, path, 200, 120);
    Decoded d = decode_png(slurp(path));
    CHECK(d.width == 200);
    CHECK(d.height == 120);

    h.epochs.push_back({0, 1e-3, 2.0, 2.2, 0.3, 0.25, 0.0, 0.0});
    img::curves_png(h, path, 200, 120);
    decode_png(slurp(path));

    for (int e = 1; e < 30; ++e)
        h.epochs.push_back({e, 1e-3, 2.0 / (1 + e), 2.2 / (1 + e), 0.3, 0.5, 0.0, 0.0});
    h.best_epoch = 29;
    img::curves_png(h, path, 200, 120);
    d = decode_png(slurp(path));

    // some pixel off the axes took a curve color
    bool painted = false;
    for (size_t i = 0; i < d.rgb.size(); i += 3)
        if (d.rgb[i] == 31 && d.rgb[i + 1] == 119 && d.rgb[i + 2] == 180) painted = true;
    CHECK(painted);
    std::remove(path.c_str());
}

}  // TEST_SUITE
