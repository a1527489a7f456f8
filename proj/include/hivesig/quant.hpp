#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hivesig/errors.hpp"

namespace hivesig::quant {

// Asymmetric affine mapping x ~ S * (q - Z) over an integer range.
struct QuantParams {
    double scale = 1.0;
    int zero_point = 0;
    int q_min = -128;
    int q_max = 127;
    double x_min = 0.0;
    double x_max = 0.0;
};

// Min-max calibration over the given values, widened so zero is exactly
// representable. A degenerate range collapses to scale 1 with everything
// at q_min.
inline QuantParams calibrate(const float* x, int64_t n, int q_min = -128, int q_max = 127) {
    if (n <= 0 || x == nullptr) throw EmptyCalibration("calibration sample is empty");
    QuantParams qp;
    qp.q_min = q_min;
    qp.q_max = q_max;
    qp.x_min = qp.x_max = x[0];
    for (int64_t i = 1; i < n; ++i) {
        qp.x_min = std::min(qp.x_min, static_cast<double>(x[i]));
        qp.x_max = std::max(qp.x_max, static_cast<double>(x[i]));
    }
    // widen to include zero so the zero point stays on the integer rails; a
    // one-sided range (batchnorm gains sit near 1) would otherwise clamp it
    // and saturate the whole tensor to a single level
    qp.x_min = std::min(qp.x_min, 0.0);
    qp.x_max = std::max(qp.x_max, 0.0);
    if (qp.x_max > qp.x_min) {
        qp.scale = (qp.x_max - qp.x_min) / (q_max - q_min);
        // round-half-away-from-zero, the convention used throughout
        qp.zero_point = static_cast<int>(std::round(q_min - qp.x_min / qp.scale));
        qp.zero_point = std::clamp(qp.zero_point, q_min, q_max);
    } else {
        qp.scale = 1.0;
        qp.zero_point = q_min;
    }
    return qp;
}

inline QuantParams calibrate(const std::vector<float>& x, int q_min = -128, int q_max = 127) {
    return calibrate(x.data(), static_cast<int64_t>(x.size()), q_min, q_max);
}

inline int quantize_value(double x, const QuantParams& qp) {
    const double q = std::round(x / qp.scale + qp.zero_point);
    return static_cast<int>(std::clamp(q, static_cast<double>(qp.q_min),
                                       static_cast<double>(qp.q_max)));
}

inline double dequantize_value(int q, const QuantParams& qp) {
    return qp.scale * (q - qp.zero_point);
}

inline std::vector<int8_t> quantize(const std::vector<float>& x, const QuantParams& qp) {
    std::vector<int8_t> out(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        out[i] = static_cast<int8_t>(quantize_value(x[i], qp));
    return out;
}

inline std::vector<float> dequantize(const std::vector<int8_t>& q, const QuantParams& qp) {
    std::vector<float> out(q.size());
    for (size_t i = 0; i < q.size(); ++i)
        out[i] = static_cast<float>(dequantize_value(q[i], qp));
    return out;
}

}  // namespace hivesig::quant
