#include "vrm/model.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace vrm {

namespace {

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + " dimension mismatch: got " +
                                    std::to_string(got) + ", schema says " +
                                    std::to_string(want));
    }
}

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"k", c.k},
            {"j", c.j},
            {"hidden", c.hidden},
            {"head_hidden", c.head_hidden},
            {"reward_hidden", c.reward_hidden},
            {"d_x", c.d_x},
            {"d_y", c.d_y},
            {"alpha_min", c.alpha_min},
            {"embed_dim_x", c.embed_dim_x},
            {"embed_dim_y", c.embed_dim_y}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.k = j.at("k").get<std::size_t>();
    c.j = j.at("j").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.head_hidden = j.at("head_hidden").get<std::size_t>();
    c.reward_hidden = j.at("reward_hidden").get<std::size_t>();
    c.d_x = j.at("d_x").get<std::size_t>();
    c.d_y = j.at("d_y").get<std::size_t>();
    c.alpha_min = j.at("alpha_min").get<double>();
    c.embed_dim_x = j.value("embed_dim_x", std::size_t{0});
    c.embed_dim_y = j.value("embed_dim_y", std::size_t{0});
    return c;
}

std::string wrap_checkpoint(const char* kind, const ModelConfig& cfg, const ParamStore& ps) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "vrm_checkpoint";
    j["model_kind"] = kind;
    j["config"] = config_to_json(cfg);
    j["params"] = nlohmann::json::parse(ps.to_json());
    return j.dump();
}

nlohmann::json unwrap_checkpoint(const std::string& text, const char* kind, ModelConfig& cfg) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("kind") || j["kind"] != "vrm_checkpoint") {
        throw std::invalid_argument("checkpoint schema: expected kind vrm_checkpoint");
    }
    if (j.at("model_kind") != kind) {
        throw std::invalid_argument("checkpoint schema: model_kind is " +
                                    j.at("model_kind").get<std::string>() + ", expected " + kind);
    }
    cfg = config_from_json(j.at("config"));
    return j;
}

}  // namespace

std::string checkpoint_kind(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("model_kind")) {
        throw std::invalid_argument("checkpoint schema: missing model_kind");
    }
    return j.at("model_kind").get<std::string>();
}

std::vector<double> hash_embed(std::string_view text, std::size_t dim) {
    std::vector<double> v(dim, 0.0);
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
        bool any = false;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) {
            h ^= static_cast<unsigned char>(text[i]);
            h *= 1099511628211ULL;
            ++i;
            any = true;
        }
        if (any) {
            v[h % dim] += 1.0;
        }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

// ---------------------------------------------------------------------------
// VrmModel

VrmModel::VrmModel(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg), params_(seed) {
    const std::size_t din = cfg_.d_x + cfg_.d_y;
    params_.add_weight("backbone.W", cfg_.hidden, din);
    params_.add_zeros("backbone.b", cfg_.hidden, 1);
    params_.add_weight("weight_head.W1", cfg_.head_hidden, cfg_.hidden);
    params_.add_zeros("weight_head.b1", cfg_.head_hidden, 1);
    params_.add_weight("weight_head.W2", cfg_.k, cfg_.head_hidden);
    params_.add_zeros("weight_head.b2", cfg_.k, 1);
    params_.add_weight("feature_head.W1", cfg_.head_hidden, cfg_.hidden);
    params_.add_zeros("feature_head.b1", cfg_.head_hidden, 1);
    params_.add_weight("feature_head.W2", 2 * cfg_.j, cfg_.head_hidden);
    params_.add_zeros("feature_head.b2", 2 * cfg_.j, 1);
    for (std::size_t k = 0; k < cfg_.k; ++k) {
        const std::string p = "reward_head_" + std::to_string(k);
        params_.add_weight(p + ".W1", cfg_.reward_hidden, cfg_.j);
        params_.add_zeros(p + ".b1", cfg_.reward_hidden, 1);
        params_.add_weight(p + ".W2", 1, cfg_.reward_hidden);
        params_.add_zeros(p + ".b2", 1, 1);
    }
    index_entries();
}

VrmModel::VrmModel(ModelConfig cfg, ParamStore params)
    : cfg_(cfg), params_(std::move(params)) {
    index_entries();
}

void VrmModel::index_entries() {
    auto need = [this](const std::string& name) {
        auto i = params_.find(name);
        if (!i) {
            throw std::invalid_argument("checkpoint schema: missing parameter " + name);
        }
        return *i;
    };
    bb_w_ = need("backbone.W");
    bb_b_ = need("backbone.b");
    wh_w1_ = need("weight_head.W1");
    wh_b1_ = need("weight_head.b1");
    wh_w2_ = need("weight_head.W2");
    wh_b2_ = need("weight_head.b2");
    fh_w1_ = need("feature_head.W1");
    fh_b1_ = need("feature_head.b1");
    fh_w2_ = need("feature_head.W2");
    fh_b2_ = need("feature_head.b2");
    rh_.clear();
    for (std::size_t k = 0; k < cfg_.k; ++k) {
        const std::string p = "reward_head_" + std::to_string(k);
        rh_.push_back({need(p + ".W1"), need(p + ".b1"), need(p + ".W2"), need(p + ".b2")});
    }
}

Tape::Id VrmModel::encode_weights(Tape& t, const std::vector<Tape::Id>& ids,
                                  std::span<const double> x_feat) const {
    check_dim(x_feat.size(), cfg_.d_x, "encode_weights x_feat");
    // [x; 0]: the weight path is a function of the prompt alone
    std::vector<double> input(cfg_.d_x + cfg_.d_y, 0.0);
    std::copy(x_feat.begin(), x_feat.end(), input.begin());
    auto in = t.leaf(input);
    auto hb = t.tanh(t.affine(ids[bb_w_], in, ids[bb_b_]));
    auto h1 = t.tanh(t.affine(ids[wh_w1_], hb, ids[wh_b1_]));
    auto raw = t.affine(ids[wh_w2_], h1, ids[wh_b2_]);
    return t.clamp_min(t.softplus(raw), cfg_.alpha_min);
}

VrmModel::FeatureNodes VrmModel::encode_features(Tape& t, const std::vector<Tape::Id>& ids,
                                                 std::span<const double> x_feat,
                                                 std::span<const double> y_feat) const {
    check_dim(x_feat.size(), cfg_.d_x, "encode_features x_feat");
    check_dim(y_feat.size(), cfg_.d_y, "encode_features y_feat");
    std::vector<double> input;
    input.reserve(cfg_.d_x + cfg_.d_y);
    input.insert(input.end(), x_feat.begin(), x_feat.end());
    input.insert(input.end(), y_feat.begin(), y_feat.end());
    auto in = t.leaf(input);
    auto hb = t.tanh(t.affine(ids[bb_w_], in, ids[bb_b_]));
    auto h1 = t.tanh(t.affine(ids[fh_w1_], hb, ids[fh_b1_]));
    auto out = t.affine(ids[fh_w2_], h1, ids[fh_b2_]);
    FeatureNodes f;
    f.mu = t.slice(out, 0, cfg_.j);
    f.sigma = t.exp(t.slice(out, cfg_.j, cfg_.j));
    return f;
}

Tape::Id VrmModel::decode_reward(Tape& t, const std::vector<Tape::Id>& ids, Tape::Id w,
                                 Tape::Id z) const {
    const Tensor& wv = t.value(w);
    check_dim(wv.size(), cfg_.k, "decode_reward w");
    check_dim(t.value(z).size(), cfg_.j, "decode_reward z");
    double total = 0.0;
    for (double v : wv.data) {
        if (v < -1e-6) {
            throw std::invalid_argument("decode_reward: negative weight " + std::to_string(v));
        }
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-6) {
        throw std::invalid_argument("decode_reward: weights off the simplex, sum = " +
                                    std::to_string(total));
    }
    Tape::Id f = Tape::npos;
    for (std::size_t k = 0; k < cfg_.k; ++k) {
        auto h1 = t.tanh(t.affine(ids[rh_[k].w1], z, ids[rh_[k].b1]));
        auto fk = t.affine(ids[rh_[k].w2], h1, ids[rh_[k].b2]);  // (1x1)
        f = (k == 0) ? fk : t.concat(f, fk);
    }
    return t.dot(w, f);
}

dist::DirichletParams VrmModel::encode_weights(std::span<const double> x_feat) const {
    Tape t;
    const auto ids = params_.bind(t);
    auto a = encode_weights(t, ids, x_feat);
    return dist::DirichletParams{t.value(a).data};
}

dist::GaussianParams VrmModel::encode_features(std::span<const double> x_feat,
                                               std::span<const double> y_feat) const {
    Tape t;
    const auto ids = params_.bind(t);
    auto f = encode_features(t, ids, x_feat, y_feat);
    return dist::GaussianParams{t.value(f.mu).data, t.value(f.sigma).data};
}

double VrmModel::decode_reward(std::span<const double> w, std::span<const double> z) const {
    Tape t;
    const auto ids = params_.bind(t);
    return t.scalar_value(decode_reward(t, ids, t.leaf(w), t.leaf(z)));
}

std::string VrmModel::to_json() const { return wrap_checkpoint("vrm", cfg_, params_); }

VrmModel VrmModel::from_json(const std::string& text) {
    ModelConfig cfg;
    nlohmann::json j = unwrap_checkpoint(text, "vrm", cfg);
    return VrmModel(cfg, ParamStore::from_json(j.at("params").dump()));
}

// ---------------------------------------------------------------------------
// BaselineRm

BaselineRm::BaselineRm(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg), params_(seed) {
    const std::size_t din = cfg_.d_x + cfg_.d_y;
    params_.add_weight("backbone.W", cfg_.hidden, din);
    params_.add_zeros("backbone.b", cfg_.hidden, 1);
    params_.add_weight("head.W1", cfg_.head_hidden, cfg_.hidden);
    params_.add_zeros("head.b1", cfg_.head_hidden, 1);
    params_.add_weight("head.W2", 1, cfg_.head_hidden);
    params_.add_zeros("head.b2", 1, 1);
    index_entries();
}

BaselineRm::BaselineRm(ModelConfig cfg, ParamStore params)
    : cfg_(cfg), params_(std::move(params)) {
    index_entries();
}

void BaselineRm::index_entries() {
    auto need = [this](const std::string& name) {
        auto i = params_.find(name);
        if (!i) {
            throw std::invalid_argument("checkpoint schema: missing parameter " + name);
        }
        return *i;
    };
    bb_w_ = need("backbone.W");
    bb_b_ = need("backbone.b");
    h_w1_ = need("head.W1");
    h_b1_ = need("head.b1");
    h_w2_ = need("head.W2");
    h_b2_ = need("head.b2");
}

Tape::Id BaselineRm::reward(Tape& t, const std::vector<Tape::Id>& ids,
                            std::span<const double> x_feat,
                            std::span<const double> y_feat) const {
    check_dim(x_feat.size(), cfg_.d_x, "baseline x_feat");
    check_dim(y_feat.size(), cfg_.d_y, "baseline y_feat");
    std::vector<double> input;
    input.reserve(cfg_.d_x + cfg_.d_y);
    input.insert(input.end(), x_feat.begin(), x_feat.end());
    input.insert(input.end(), y_feat.begin(), y_feat.end());
    auto in = t.leaf(input);
    auto hb = t.tanh(t.affine(ids[bb_w_], in, ids[bb_b_]));
    auto h1 = t.tanh(t.affine(ids[h_w1_], hb, ids[h_b1_]));
    auto out = t.affine(ids[h_w2_], h1, ids[h_b2_]);
    return t.sum(out);  // (1x1) -> scalar node
}

double BaselineRm::reward(std::span<const double> x_feat, std::span<const double> y_feat) const {
    Tape t;
    const auto ids = params_.bind(t);
    return t.scalar_value(reward(t, ids, x_feat, y_feat));
}

std::string BaselineRm::to_json() const { return wrap_checkpoint("baseline", cfg_, params_); }

BaselineRm BaselineRm::from_json(const std::string& text) {
    ModelConfig cfg;
    nlohmann::json j = unwrap_checkpoint(text, "baseline", cfg);
    return BaselineRm(cfg, ParamStore::from_json(j.at("params").dump()));
}

}  // namespace vrm
