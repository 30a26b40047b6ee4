#pragma once

#include <string>
#include <vector>

#include "moca/vocab.hpp"

namespace moca {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

enum class MetricKind { rouge1, rouge2, rougeL, mean_of_1_2_l };

MetricKind metric_kind_from_string(const std::string& s);
const char* metric_kind_name(MetricKind kind);

// Clipped n-gram overlap F-measure over content token ids. Either side
// lacking n-grams yields all zeros.
RougeScore rouge_n(const std::vector<int>& candidate, const std::vector<int>& reference, int n);

// Longest-common-subsequence F-measure.
RougeScore rouge_l(const std::vector<int>& candidate, const std::vector<int>& reference);

// The configured variant's F1 (mean_of_1_2_l averages the three F1 values).
double eval_score(const TokenSeq& candidate, const TokenSeq& gold, MetricKind kind);

}  // namespace moca
