#include "moca/rouge.hpp"

#include <algorithm>
#include <map>

#include "moca/error.hpp"

namespace moca {

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "rouge1") return MetricKind::rouge1;
    if (s == "rouge2") return MetricKind::rouge2;
    if (s == "rougeL" || s == "rougel") return MetricKind::rougeL;
    if (s == "mean") return MetricKind::mean_of_1_2_l;
    throw ConfigError("unknown metric kind: " + s);
}

const char* metric_kind_name(MetricKind kind) {
    switch (kind) {
        case MetricKind::rouge1: return "rouge1";
        case MetricKind::rouge2: return "rouge2";
        case MetricKind::rougeL: return "rougeL";
        case MetricKind::mean_of_1_2_l: return "mean";
    }
    return "?";
}

namespace {

RougeScore from_counts(double overlap, double cand_total, double ref_total) {
    RougeScore s;
    if (cand_total <= 0.0 || ref_total <= 0.0) return s;
    s.precision = overlap / cand_total;
    s.recall = overlap / ref_total;
    if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

}  // namespace

RougeScore rouge_n(const std::vector<int>& candidate, const std::vector<int>& reference, int n) {
    if (n != 1 && n != 2) throw ContractError("rouge_n: n must be 1 or 2");
    const size_t un = static_cast<size_t>(n);
    if (candidate.size() < un || reference.size() < un) return {};
    std::map<std::vector<int>, int> ref_counts;
    for (size_t i = 0; i + un <= reference.size(); ++i) {
        ref_counts[std::vector<int>(reference.begin() + static_cast<long>(i),
                                    reference.begin() + static_cast<long>(i + un))] += 1;
    }
    std::map<std::vector<int>, int> cand_counts;
    for (size_t i = 0; i + un <= candidate.size(); ++i) {
        cand_counts[std::vector<int>(candidate.begin() + static_cast<long>(i),
                                     candidate.begin() + static_cast<long>(i + un))] += 1;
    }
    double overlap = 0.0;
    for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    return from_counts(overlap, static_cast<double>(candidate.size() - un + 1),
                       static_cast<double>(reference.size() - un + 1));
}

RougeScore rouge_l(const std::vector<int>& candidate, const std::vector<int>& reference) {
    if (candidate.empty() || reference.empty()) return {};
    const size_t m = candidate.size(), r = reference.size();
    std::vector<size_t> prev(r + 1, 0), cur(r + 1, 0);
    for (size_t i = 1; i <= m; ++i) {
        for (size_t j = 1; j <= r; ++j) {
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return from_counts(static_cast<double>(prev[r]), static_cast<double>(m), static_cast<double>(r));
}

double eval_score(const TokenSeq& candidate, const TokenSeq& gold, MetricKind kind) {
    if (gold.ids.empty()) throw ContractError("eval_score: empty gold sequence");
    switch (kind) {
        case MetricKind::rouge1: return rouge_n(candidate.ids, gold.ids, 1).f1;
        case MetricKind::rouge2: return rouge_n(candidate.ids, gold.ids, 2).f1;
        case MetricKind::rougeL: return rouge_l(candidate.ids, gold.ids).f1;
        case MetricKind::mean_of_1_2_l:
            return (rouge_n(candidate.ids, gold.ids, 1).f1 + rouge_n(candidate.ids, gold.ids, 2).f1 +
                    rouge_l(candidate.ids, gold.ids).f1) /
                   3.0;
    }
    throw ContractError("eval_score: bad metric kind");
}

}  // namespace moca
