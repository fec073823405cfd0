// The desk-scale architecture: a shared backbone over concatenated
// [x; y] features, a weight head producing Dirichlet concentrations from
// the prompt alone (the response slot is zero-filled on that path), a
// feature head producing (mu, ln sigma), and K scalar reward heads whose
// outputs are mixed linearly by the objective weights:
//   r(w, z) = sum_k w_k * f_k(z).
// The baseline scores (x, y) directly with the same backbone shape.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrm/distributions.hpp"
#include "vrm/params.hpp"
#include "vrm/tape.hpp"

namespace vrm {

struct ModelConfig {
    std::size_t k = 4;              // objective count
    std::size_t j = 8;              // semantic feature dimension
    std::size_t hidden = 64;        // backbone width
    std::size_t head_hidden = 32;   // encoder head hidden width
    std::size_t reward_hidden = 16; // reward head hidden width
    std::size_t d_x = 16;
    std::size_t d_y = 16;
    double alpha_min = 1e-3;
    std::size_t embed_dim_x = 0;  // nonzero when text inputs are hashed
    std::size_t embed_dim_y = 0;
};

// Whitespace tokens hashed (FNV-1a) into `dim` buckets, l2-normalized.
std::vector<double> hash_embed(std::string_view text, std::size_t dim);

class VrmModel {
public:
    VrmModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // --- tape forwards (ids from params().bind(tape)) ---
    Tape::Id encode_weights(Tape& t, const std::vector<Tape::Id>& ids,
                            std::span<const double> x_feat) const;
    struct FeatureNodes {
        Tape::Id mu;
        Tape::Id sigma;
    };
    FeatureNodes encode_features(Tape& t, const std::vector<Tape::Id>& ids,
                                 std::span<const double> x_feat,
                                 std::span<const double> y_feat) const;
    Tape::Id decode_reward(Tape& t, const std::vector<Tape::Id>& ids, Tape::Id w,
                           Tape::Id z) const;

    // --- single-example conveniences (fresh local tape) ---
    dist::DirichletParams encode_weights(std::span<const double> x_feat) const;
    dist::GaussianParams encode_features(std::span<const double> x_feat,
                                         std::span<const double> y_feat) const;
    double decode_reward(std::span<const double> w, std::span<const double> z) const;

    std::string to_json() const;
    static VrmModel from_json(const std::string& text);

private:
    VrmModel(ModelConfig cfg, ParamStore params);
    void index_entries();

    ModelConfig cfg_;
    ParamStore params_;
    // entry indices, bound at construction
    std::size_t bb_w_ = 0, bb_b_ = 0;
    std::size_t wh_w1_ = 0, wh_b1_ = 0, wh_w2_ = 0, wh_b2_ = 0;
    std::size_t fh_w1_ = 0, fh_b1_ = 0, fh_w2_ = 0, fh_b2_ = 0;
    struct RewardHead {
        std::size_t w1, b1, w2, b2;
    };
    std::vector<RewardHead> rh_;
};

class BaselineRm {
public:
    BaselineRm(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    Tape::Id reward(Tape& t, const std::vector<Tape::Id>& ids, std::span<const double> x_feat,
                    std::span<const double> y_feat) const;
    double reward(std::span<const double> x_feat, std::span<const double> y_feat) const;

    std::string to_json() const;
    static BaselineRm from_json(const std::string& text);

private:
    BaselineRm(ModelConfig cfg, ParamStore params);
    void index_entries();

    ModelConfig cfg_;
    ParamStore params_;
    std::size_t bb_w_ = 0, bb_b_ = 0;
    std::size_t h_w1_ = 0, h_b1_ = 0, h_w2_ = 0, h_b2_ = 0;
};

// Shared checkpoint helpers: peek at the model_kind field.
std::string checkpoint_kind(const std::string& text);

}  // namespace vrm
