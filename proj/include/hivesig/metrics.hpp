#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hivesig/train.hpp"

namespace hivesig::metrics {

// rows = true class, cols = predicted
struct ConfusionMatrix {
    std::vector<int64_t> counts;  // K*K row-major
    std::vector<std::string> class_names;

    int k() const { return static_cast<int>(class_names.size()); }
    int64_t at(int t, int p) const { return counts[static_cast<size_t>(t) * k() + p]; }
    int64_t& at(int t, int p) { return counts[static_cast<size_t>(t) * k() + p]; }
    int64_t total() const;
    std::vector<int64_t> support() const;  // row sums
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 int n_classes, std::vector<std::string> class_names = {});

double accuracy(const ConfusionMatrix& cm);

// one-vs-rest F1 = TP / (TP + 0.5*(FP+FN)); an absent class scores 0
std::vector<double> f1_per_class(const ConfusionMatrix& cm);

struct ClassStats {
    std::string name;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    int64_t support = 0;
};

struct Report {
    std::vector<ClassStats> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    int64_t total = 0;
    std::vector<std::string> warnings;  // 0/0 divisions that were pinned to 0

    std::string to_json() const;
    std::string to_csv() const;
};

Report report(const ConfusionMatrix& cm);

struct BenchReport {
    std::string model_name;
    double accuracy = 0.0;
    int64_t size_bytes = 0;
    int64_t params = 0;
    double inference_seconds = 0.0;  // median over runs
    int runs = 0;
    int64_t samples = 0;
    int threads = 1;
    std::vector<double> timings;  // raw per-run wall clock, seconds
    std::map<std::string, std::string> env;

    std::string to_json() const;
};

// Median wall clock of `runs` full-dataset forward passes. Timing covers the
// forward only; accuracy/size/params ride along for the stage tables.
BenchReport benchmark(const net::Model& m, const net::ImageSet& data, int runs,
                      int threads = 1, const std::string& model_name = "model");

}  // namespace hivesig::metrics
