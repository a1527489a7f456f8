#include "hivesig/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hivesig/compress.hpp"
#include "hivesig/errors.hpp"
#include "json.hpp"

namespace hivesig::metrics {

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

std::vector<int64_t> ConfusionMatrix::support() const {
    std::vector<int64_t> s(static_cast<size_t>(k()), 0);
    for (int t = 0; t < k(); ++t)
        for (int p = 0; p < k(); ++p) s[static_cast<size_t>(t)] += at(t, p);
    return s;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 int n_classes, std::vector<std::string> class_names) {
    if (preds.size() != labels.size())
        throw LengthMismatch(std::to_string(preds.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    ConfusionMatrix cm;
    if (class_names.empty())
        for (int c = 0; c < n_classes; ++c) class_names.push_back("class" + std::to_string(c));
    if (static_cast<int>(class_names.size()) != n_classes)
        throw LengthMismatch("class name list does not match the class count");
    cm.class_names = std::move(class_names);
    cm.counts.assign(static_cast<size_t>(n_classes) * n_classes, 0);
    for (size_t i = 0; i < preds.size(); ++i) {
        const int t = labels[i], p = preds[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw OutOfRangeClass("pair (" + std::to_string(t) + "," + std::to_string(p) +
                                  ") outside [0," + std::to_string(n_classes) + ")");
        ++cm.at(t, p);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const int64_t n = cm.total();
    if (cm.k() == 0 || n == 0) throw EmptyMatrix("no evaluated samples");
    int64_t diag = 0;
    for (int c = 0; c < cm.k(); ++c) diag += cm.at(c, c);
    return static_cast<double>(diag) / static_cast<double>(n);
}

namespace {

struct OvR {
    int64_t tp = 0, fp = 0, fn = 0;
};

OvR one_vs_rest(const ConfusionMatrix& cm, int c) {
    OvR r;
    r.tp = cm.at(c, c);
    for (int o = 0; o < cm.k(); ++o) {
        if (o == c) continue;
        r.fp += cm.at(o, c);
        r.fn += cm.at(c, o);
    }
    return r;
}

double ratio_or_zero(int64_t num, double den, bool* hit_zero) {
    if (den == 0.0) {
        if (hit_zero) *hit_zero = true;
        return 0.0;
    }
    return static_cast<double>(num) / den;
}

}  // namespace

std::vector<double> f1_per_class(const ConfusionMatrix& cm) {
    if (cm.k() == 0 || cm.total() == 0) throw EmptyMatrix("no evaluated samples");
    std::vector<double> f1(static_cast<size_t>(cm.k()));
    for (int c = 0; c < cm.k(); ++c) {
        const OvR r = one_vs_rest(cm, c);
        f1[static_cast<size_t>(c)] =
            ratio_or_zero(r.tp, static_cast<double>(r.tp) + 0.5 * (r.fp + r.fn), nullptr);
    }
    return f1;
}

Report report(const ConfusionMatrix& cm) {
    Report rep;
    rep.total = cm.total();
    if (cm.k() == 0 || rep.total == 0) throw EmptyMatrix("no evaluated samples");
    rep.accuracy = accuracy(cm);
    const std::vector<int64_t> sup = cm.support();
    for (int c = 0; c < cm.k(); ++c) {
        const OvR r = one_vs_rest(cm, c);
        ClassStats s;
        s.name = cm.class_names[static_cast<size_t>(c)];
        s.support = sup[static_cast<size_t>(c)];
        bool zero = false;
        s.precision = ratio_or_zero(r.tp, static_cast<double>(r.tp + r.fp), &zero);
        s.recall = ratio_or_zero(r.tp, static_cast<double>(r.tp + r.fn), &zero);
        s.f1 = ratio_or_zero(r.tp, static_cast<double>(r.tp) + 0.5 * (r.fp + r.fn), &zero);
        if (zero) rep.warnings.push_back(s.name + ": 0/0 reported as 0");
        rep.per_class.push_back(std::move(s));
    }
    const double k = static_cast<double>(cm.k());
    const double n = static_cast<double>(rep.total);
    for (const ClassStats& s : rep.per_class) {
        rep.macro_precision += s.precision / k;
        rep.macro_recall += s.recall / k;
        rep.macro_f1 += s.f1 / k;
        rep.weighted_precision += static_cast<double>(s.support) * s.precision / n;
        rep.weighted_recall += static_cast<double>(s.support) * s.recall / n;
        rep.weighted_f1 += static_cast<double>(s.support) * s.f1 / n;
    }
    return rep;
}

std::string Report::to_json() const {
    nlohmann::json j;
    j["schema"] = "hivesig-report-1";
    j["accuracy"] = accuracy;
    j["total"] = total;
    nlohmann::json cls = nlohmann::json::array();
    for (const ClassStats& s : per_class)
        cls.push_back({{"class", s.name},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support}});
    j["classes"] = std::move(cls);
    j["macro_avg"] = {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}};
    j["weighted_avg"] = {{"precision", weighted_precision},
                         {"recall", weighted_recall},
                         {"f1", weighted_f1}};
    j["warnings"] = warnings;
    return j.dump(2);
}

std::string Report::to_csv() const {
    std::string out = "class,precision,recall,f1,support\n";
    char buf[160];
    for (const ClassStats& s : per_class) {
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%lld\n", s.name.c_str(), s.precision,
                      s.recall, s.f1, static_cast<long long>(s.support));
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "macro_avg,%.6f,%.6f,%.6f,%lld\n", macro_precision,
                  macro_recall, macro_f1, static_cast<long long>(total));
    out += buf;
    std::snprintf(buf, sizeof buf, "weighted_avg,%.6f,%.6f,%.6f,%lld\n", weighted_precision,
                  weighted_recall, weighted_f1, static_cast<long long>(total));
    out += buf;
    return out;
}

BenchReport benchmark(const net::Model& m, const net::ImageSet& data, int runs, int threads,
                      const std::string& model_name) {
    if (runs < 3) throw UsageError("benchmark needs at least 3 runs for a median");
    if (data.size() == 0) throw EmptyDataset("nothing to time");
#ifdef _OPENMP
    if (threads >= 1) omp_set_num_threads(threads);
#endif
    BenchReport r;
    r.model_name = model_name;
    r.runs = runs;
    r.samples = data.size();
    r.threads = threads;
    r.params = net::count_params(m);
    r.size_bytes = compress::size_report(m).bytes;
    r.accuracy = net::accuracy_on(m, data);

    net::predict_logits(m, data.x);  // warm-up, untimed
    for (int i = 0; i < runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Tensor<float> logits = net::predict_logits(m, data.x);
        const auto t1 = std::chrono::steady_clock::now();
        (void)logits;
        r.timings.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::vector<double> sorted = r.timings;
    std::sort(sorted.begin(), sorted.end());
    const size_t mid = sorted.size() / 2;
    r.inference_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    r.env["compiler"] = __VERSION__;
#ifdef _OPENMP
    r.env["openmp"] = std::to_string(_OPENMP);
#else
    r.env["openmp"] = "off";
#endif
    r.env["hardware_threads"] = std::to_string(std::thread::hardware_concurrency());
    return r;
}

std::string BenchReport::to_json() const {
    nlohmann::json j;
    j["schema"] = "hivesig-bench-1";
    j["model"] = model_name;
    j["accuracy"] = accuracy;
    j["size_bytes"] = size_bytes;
    j["size_mb"] = static_cast<double>(size_bytes) / 1e6;
    j["params"] = params;
    j["inference_seconds"] = inference_seconds;
    j["runs"] = runs;
    j["samples"] = samples;
    j["threads"] = threads;
    j["timings"] = timings;
    j["env"] = env;
    return j.dump(2);
}

}  // namespace hivesig::metrics
