#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "hivesig/engine.hpp"
#include "hivesig/errors.hpp"
#include "hivesig/network.hpp"
#include "hivesig/rng.hpp"

using hivesig::Rng;
using hivesig::Tensor;
namespace net = hivesig::net;

namespace {

std::string tmp_path(const char* name) {
    return std::string("/tmp/hivesig_test_") + name;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("head parameter count is frozen") {
    // dense 4096->64 with bn, dense 64->4 with bn
    net::NetworkSpec spec;
    spec.input = {4096, 1, 1};
    spec.n_classes = 4;
    spec.layers = net::build_head(64, 4, 0.5);
    CHECK(net::count_params(spec) == 262604);
}

TEST_CASE("default teacher and student sizes are frozen") {
    const net::NetworkSpec teacher = net::build_teacher();
    const net::NetworkSpec student = net::build_student();
    CHECK(net::count_params(teacher) == 1435820);
    CHECK(net::count_params(student) == 658060);
    CHECK(static_cast<double>(net::count_params(student)) / net::count_params(teacher) < 0.6);

    // doubled widths, the upper calibration point
    net::ArchConfig big;
    big.widths = {64, 64, 128, 128, 256, 256, 512, 512};
    CHECK(net::count_params(net::build_teacher(big)) == 5212044);
}

TEST_CASE("shape inference walks the spatial chain") {
    const net::NetworkSpec teacher = net::build_teacher();
    const auto shapes = net::infer_shapes(teacher);

    // four pools: 64 -> 32 -> 16 -> 8 -> 4
    std::vector<int> pool_h;
    for (size_t i = 0; i < teacher.layers.size(); ++i)
        if (teacher.layers[i].kind == net::LayerKind::maxpool) pool_h.push_back(shapes[i].h);
    CHECK(pool_h == std::vector<int>{32, 16, 8, 4});

    for (size_t i = 0; i < teacher.layers.size(); ++i)
        if (teacher.layers[i].kind == net::LayerKind::flatten)
            CHECK(shapes[i].c == 256 * 4 * 4);
    CHECK(shapes.back().c == 4);
}

TEST_CASE("shape inference rejects impossible networks") {
    net::NetworkSpec bad;
    bad.input = {1, 63, 63};  // not divisible by the pool
    bad.n_classes = 2;
    bad.layers = {net::LayerSpec::maxpool(2), net::LayerSpec::flatten(),
                  net::LayerSpec::dense("fc", 2, false)};
    CHECK_THROWS_AS(net::infer_shapes(bad), hivesig::ShapeIncompatible);

    net::NetworkSpec unflat;
    unflat.input = {1, 4, 4};
    unflat.n_classes = 2;
    unflat.layers = {net::LayerSpec::dense("fc", 2, false)};
    CHECK_THROWS_AS(net::infer_shapes(unflat), hivesig::ShapeIncompatible);

    net::NetworkSpec dup;
    dup.input = {1, 2, 2};
    dup.n_classes = 2;
    dup.layers = {net::LayerSpec::flatten(), net::LayerSpec::dense("fc", 2, false),
                  net::LayerSpec::dense("fc", 2, false)};
    CHECK_THROWS_AS(net::validate(dup), hivesig::ShapeIncompatible);

    net::NetworkSpec tail;
    tail.input = {1, 2, 2};
    tail.n_classes = 2;
    tail.layers = {net::LayerSpec::flatten(), net::LayerSpec::dense("fc", 3, false)};
    CHECK_THROWS_AS(net::validate(tail), hivesig::ShapeIncompatible);
}

TEST_CASE("initialization fills every tensor with the right statistics") {
    const net::NetworkSpec spec = net::build_student();
    net::Model m = net::init_model(spec, 42);

    CHECK(net::count_params(m) == net::count_params(spec));

    // biases zero, gamma one, beta zero
    for (const auto& [name, t] : m.params) {
        if (name.ends_with(".bias") || name.ends_with(".bn_beta"))
            for (float v : t.f32) CHECK(v == 0.0f);
        if (name.ends_with(".bn_gamma"))
            for (float v : t.f32) CHECK(v == 1.0f);
    }
    for (const auto& [name, t] : m.running) {
        const float want = name.ends_with(".bn_var") ? 1.0f : 0.0f;
        for (float v : t.f32) CHECK(v == want);
    }

    // He scaling on a large weight: conv8 is 256x112x3x3, fan_in 1008
    const auto& w = m.params.at("conv8.weight");
    double sq = 0.0, mean = 0.0;
    for (float v : w.f32) {
        sq += static_cast<double>(v) * v;
        mean += v;
    }
    mean /= static_cast<double>(w.f32.size());
    const double sd = std::sqrt(sq / static_cast<double>(w.f32.size()));
    CHECK(std::fabs(mean) < 0.005);
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 1008.0)).epsilon(0.05));

    // deterministic in the seed, sensitive to it
    net::Model again = net::init_model(spec, 42);
    CHECK(again.params.at("conv1.weight").f32 == m.params.at("conv1.weight").f32);
    net::Model other = net::init_model(spec, 43);
    CHECK(other.params.at("conv1.weight").f32 != m.params.at("conv1.weight").f32);
}

TEST_CASE("checkpoint round trip preserves everything") {
    net::ArchConfig cfg;
    cfg.widths = {4, 4};
    cfg.head_hidden = 8;
    net::Model m = net::init_model(net::build_teacher(cfg), 5);
    m.meta["stage"] = "teacher";
    m.meta["note"] = "round trip";

    // give it one quantized tensor so the q8 path is exercised too
    {
        net::ParamTensor& t = m.params.at("fc2.bias");
        const auto qp = hivesig::quant::calibrate(t.f32);
        t.q8 = hivesig::quant::quantize(t.f32, qp);
        t.qp = qp;
        t.dtype = net::DType::q8;
        t.f32.clear();
    }

    const std::string p1 = tmp_path("ckpt1.hsm");
    const std::string p2 = tmp_path("ckpt2.hsm");
    net::save_model(m, p1);
    net::Model back = net::load_model(p1);

    CHECK(back.meta == m.meta);
    CHECK(back.spec.layers.size() == m.spec.layers.size());
    CHECK(net::count_params(back) == net::count_params(m));
    for (const auto& [name, t] : m.params) {
        const net::ParamTensor& b = back.params.at(name);
        CHECK(b.shape == t.shape);
        CHECK(b.dtype == t.dtype);
        CHECK(b.f32 == t.f32);
        CHECK(b.q8 == t.q8);
    }
    for (const auto& [name, t] : m.running) CHECK(back.running.at(name).f32 == t.f32);

    // save(load(x)) is byte-identical to save(x)
    net::save_model(back, p2);
    CHECK(slurp(p1) == slurp(p2));

    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint rejects damage") {
    net::ArchConfig cfg;
    cfg.widths = {2, 2};
    cfg.head_hidden = 4;
    net::Model m = net::init_model(net::build_teacher(cfg), 1);
    const std::string path = tmp_path("ckpt_damage.hsm");
    net::save_model(m, path);
    const std::string good = slurp(path);

    // flipped payload byte
    std::string bad = good;
    bad[bad.size() / 2] ^= 0x40;
    spit(path, bad);
    CHECK_THROWS_AS(net::load_model(path), hivesig::ChecksumMismatch);

    // foreign magic
    bad = good;
    bad[0] = 'X';
    spit(path, bad);
    CHECK_THROWS_AS(net::load_model(path), hivesig::VersionMismatch);

    // future version
    bad = good;
    bad[4] = 9;
    spit(path, bad);
    CHECK_THROWS_AS(net::load_model(path), hivesig::VersionMismatch);

    // truncated
    spit(path, good.substr(0, 10));
    CHECK_THROWS_AS(net::load_model(path), hivesig::MalformedHeader);

    CHECK_THROWS_AS(net::load_model(tmp_path("no_such_file.hsm")), hivesig::IoFailure);

    std::remove(path.c_str());
}

TEST_CASE("store_params writes training results back into the model") {
    net::ArchConfig cfg;
    cfg.widths = {2, 2};
    cfg.head_hidden = 4;
    net::Model m = net::init_model(net::build_teacher(cfg), 2);

    auto p = net::float_params(m);
    auto r = net::float_running(m);
    for (auto& [name, t] : p)
        for (float& v : t.data) v += 1.0f;
    r.at("conv1.bn_mean").data[0] = 3.5f;

    net::store_params(m, p, r);
    CHECK(m.params.at("fc1.bias").f32[0] == 1.0f);
    CHECK(m.running.at("conv1.bn_mean").f32[0] == 3.5f);
}

TEST_CASE("forward produces logits of the declared shape") {
    net::ArchConfig cfg;
    cfg.widths = {4, 4};
    cfg.head_hidden = 8;
    const net::NetworkSpec spec = net::build_teacher(cfg);
    net::Model m = net::init_model(spec, 9);
    auto params = net::cast_named<float>(net::float_params(m));
    auto running = net::cast_named<float>(net::float_running(m));

    Rng rng(0xf00dull);
    Tensor<float> x({2, 3, 64, 64});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());
    Tensor<float> y = net::forward<float>(spec, params, running, x, false, 0, nullptr);
    CHECK(y.shape == std::vector<int>{2, 4});

    Tensor<float> wrong({2, 1, 64, 64});
    CHECK_THROWS_AS(net::forward<float>(spec, params, running, wrong, false, 0, nullptr),
                    hivesig::ShapeMismatch);
}

}  // TEST_SUITE
