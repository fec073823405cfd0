// Synthetic preference data with known ground truth, generated forward
// from the causal story: context x determines objective weights
// w* = softmax(A x); each candidate response y gets per-objective
// qualities q = tanh(B [x; y]); true reward is w* . q; the preferred
// role is assigned by a Bradley-Terry draw at temperature tau. Raw
// scores are the qualities plus observation noise.
//
// Also: the controlled-confound injector for reward-hacking experiments,
// and JSONL ingestion/serialization for external score-annotated data.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrm/data.hpp"

namespace vrm::synth {

struct GeneratorConfig {
    std::uint64_t seed = 1;
    std::size_t n = 1000;
    std::size_t d_x = 16;
    std::size_t d_y = 16;
    std::size_t k = 4;
    double tau = 1.0;           // Bradley-Terry label temperature
    double score_noise = 0.1;   // std of the score observation noise
    double train_fraction = 0.9;

    void validate() const;
};

// Optional out-parameters receive the generation-order indices assigned
// to each split (recorded in the manifest).
Dataset generate(const GeneratorConfig& config, std::vector<std::size_t>* train_indices = nullptr,
                 std::vector<std::size_t>* eval_indices = nullptr);

// Appends one dimension to every response's features. Train split: with
// probability rho the feature equals the role indicator (1 preferred,
// 0 dispreferred); otherwise, and always on the eval split, it is an
// independent U(0,1) draw. x, scores, and truth are untouched.
void inject_spurious(Dataset& ds, double rho, std::uint64_t seed);

// --- JSONL -----------------------------------------------------------------

struct LoadedFile {
    DatasetSchema schema;
    std::vector<PreferenceExample> examples;
};

// One object per line. Numeric records carry x_feat / y_pos_feat /
// y_neg_feat arrays; text records carry prompt / response_pos /
// response_neg strings, embedded via the hashed bag-of-tokens embedder
// at the given dimensions. Mixed files are rejected. Optional fields:
// scores_pos, scores_neg, meta (ground truth rides in meta.truth).
LoadedFile load_jsonl(const std::string& path, std::size_t embed_dx = 64,
                      std::size_t embed_dy = 64);

void save_jsonl(const std::string& path, std::span<const PreferenceExample> examples);

// Sidecar manifest: config echo, split sizes and indices, feature schema.
std::string manifest_json(const GeneratorConfig& config, const Dataset& ds,
                          std::span<const std::size_t> train_indices,
                          std::span<const std::size_t> eval_indices);

}  // namespace vrm::synth
