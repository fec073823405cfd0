// Preference data records shared by the generator, the losses, and the
// training loop. Preferred/dispreferred roles are fixed by field order.

#pragma once

#include <optional>
#include <vector>

namespace vrm {

struct TruthRecord {
    std::vector<double> w_star;  // simplex ground-truth objective weights
    std::vector<double> q_pos;   // per-objective qualities of the preferred response
    std::vector<double> q_neg;
    double reward_gap = 0.0;  // sum_k w*_k (q+_k - q-_k)
};

struct PreferenceExample {
    std::vector<double> x_feat;
    std::vector<double> y_pos_feat;
    std::vector<double> y_neg_feat;
    std::optional<std::vector<double>> scores_pos;
    std::optional<std::vector<double>> scores_neg;
    std::optional<TruthRecord> truth;
};

struct DatasetSchema {
    std::size_t d_x = 0;
    std::size_t d_y = 0;
    std::size_t k_scores = 0;  // 0 when no score vectors
    bool has_truth = false;
    bool from_text = false;  // features came from the hash embedder
};

struct Dataset {
    DatasetSchema schema;
    std::vector<PreferenceExample> train;
    std::vector<PreferenceExample> eval;
};

}  // namespace vrm
