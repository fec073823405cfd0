#include "vrm/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "vrm/kernels.hpp"
#include "vrm/model.hpp"
#include "vrm/numerics.hpp"
#include "vrm/rng.hpp"

namespace vrm::synth {

void GeneratorConfig::validate() const {
    if (n == 0) throw std::invalid_argument("generator: n must be positive");
    if (d_x == 0 || d_y == 0) throw std::invalid_argument("generator: zero feature dimension");
    if (k < 2) throw std::invalid_argument("generator: k must be >= 2");
    if (!(tau > 0.0)) throw std::invalid_argument("generator: tau must be > 0");
    if (score_noise < 0.0) throw std::invalid_argument("generator: negative score noise");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
        throw std::invalid_argument("generator: train_fraction must lie in [0,1], got " +
                                    std::to_string(train_fraction));
    }
}

namespace {

std::vector<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
    std::vector<double> m(rows * cols);
    for (double& v : m) v = scale * rng.normal();
    return m;
}

}  // namespace

Dataset generate(const GeneratorConfig& config, std::vector<std::size_t>* train_indices,
                 std::vector<std::size_t>* eval_indices) {
    config.validate();
    Rng rng(config.seed, /*stream=*/0x5D);

    // fixed random maps of the causal graph; the response block of the
    // quality map dominates the prompt block so that selection bias can
    // surface the objective weights in the preferred-response scores
    const double ax_scale = 1.5 / std::sqrt(static_cast<double>(config.d_x));
    const double bx_scale = 0.375 / std::sqrt(static_cast<double>(config.d_x));
    const double by_scale = 1.5 / std::sqrt(static_cast<double>(config.d_y));
    const auto map_a = random_matrix(rng, config.k, config.d_x, ax_scale);
    auto map_b = random_matrix(rng, config.k, config.d_x + config.d_y, 1.0);
    for (std::size_t r = 0; r < config.k; ++r) {
        for (std::size_t c = 0; c < config.d_x + config.d_y; ++c) {
            map_b[r * (config.d_x + config.d_y) + c] *= (c < config.d_x) ? bx_scale : by_scale;
        }
    }

    auto qualities = [&](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> xy;
        xy.reserve(config.d_x + config.d_y);
        xy.insert(xy.end(), x.begin(), x.end());
        xy.insert(xy.end(), y.begin(), y.end());
        std::vector<double> q(config.k);
        kernels::matvec(map_b.data(), config.k, config.d_x + config.d_y, xy.data(), q.data());
        for (double& v : q) v = std::tanh(v);
        return q;
    };

    std::vector<PreferenceExample> all;
    all.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        PreferenceExample ex;
        ex.x_feat.resize(config.d_x);
        for (double& v : ex.x_feat) v = rng.normal();

        std::vector<double> logits(config.k);
        kernels::matvec(map_a.data(), config.k, config.d_x, ex.x_feat.data(), logits.data());
        std::vector<double> w_star = num::softmax(logits);

        std::vector<double> y_a(config.d_y);
        std::vector<double> y_b(config.d_y);
        for (double& v : y_a) v = rng.normal();
        for (double& v : y_b) v = rng.normal();
        const auto q_a = qualities(ex.x_feat, y_a);
        const auto q_b = qualities(ex.x_feat, y_b);

        const double r_a = kernels::dot(w_star.data(), q_a.data(), config.k);
        const double r_b = kernels::dot(w_star.data(), q_b.data(), config.k);
        const double p_a_wins = num::stable_sigmoid((r_a - r_b) / config.tau);
        const bool a_preferred = rng.uniform() < p_a_wins;

        const auto& y_pos = a_preferred ? y_a : y_b;
        const auto& y_neg = a_preferred ? y_b : y_a;
        const auto& q_pos = a_preferred ? q_a : q_b;
        const auto& q_neg = a_preferred ? q_b : q_a;

        ex.y_pos_feat = y_pos;
        ex.y_neg_feat = y_neg;

        std::vector<double> s_pos(config.k);
        std::vector<double> s_neg(config.k);
        for (std::size_t c = 0; c < config.k; ++c) {
            s_pos[c] = q_pos[c] + config.score_noise * rng.normal();
            s_neg[c] = q_neg[c] + config.score_noise * rng.normal();
        }
        ex.scores_pos = std::move(s_pos);
        ex.scores_neg = std::move(s_neg);

        TruthRecord truth;
        truth.w_star = w_star;
        truth.q_pos = q_pos;
        truth.q_neg = q_neg;
        double gap = 0.0;
        for (std::size_t c = 0; c < config.k; ++c) gap += w_star[c] * (q_pos[c] - q_neg[c]);
        truth.reward_gap = gap;
        ex.truth = std::move(truth);

        all.push_back(std::move(ex));
    }

    // seeded shuffle, then the first ceil(n * fraction) go to train
    std::vector<std::size_t> order(config.n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = config.n; i > 1; --i) {
        const std::size_t j = rng.next_u64() % i;
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(config.n)));

    Dataset ds;
    ds.schema.d_x = config.d_x;
    ds.schema.d_y = config.d_y;
    ds.schema.k_scores = config.k;
    ds.schema.has_truth = true;
    if (train_indices != nullptr) train_indices->clear();
    if (eval_indices != nullptr) eval_indices->clear();
    for (std::size_t i = 0; i < config.n; ++i) {
        if (i < n_train) {
            ds.train.push_back(std::move(all[order[i]]));
            if (train_indices != nullptr) train_indices->push_back(order[i]);
        } else {
            ds.eval.push_back(std::move(all[order[i]]));
            if (eval_indices != nullptr) eval_indices->push_back(order[i]);
        }
    }
    return ds;
}

void inject_spurious(Dataset& ds, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("inject_spurious: rho must lie in [0,1], got " +
                                    std::to_string(rho));
    }
    Rng rng(seed, /*stream=*/0x1A);
    for (auto& ex : ds.train) {
        if (rng.uniform() < rho) {
            ex.y_pos_feat.push_back(1.0);
            ex.y_neg_feat.push_back(0.0);
        } else {
            ex.y_pos_feat.push_back(rng.uniform());
            ex.y_neg_feat.push_back(rng.uniform());
        }
    }
    for (auto& ex : ds.eval) {
        ex.y_pos_feat.push_back(rng.uniform());
        ex.y_neg_feat.push_back(rng.uniform());
    }
    ds.schema.d_y += 1;
}

namespace {

nlohmann::json example_to_json(const PreferenceExample& ex) {
    nlohmann::json j;
    j["x_feat"] = ex.x_feat;
    j["y_pos_feat"] = ex.y_pos_feat;
    j["y_neg_feat"] = ex.y_neg_feat;
    if (ex.scores_pos) j["scores_pos"] = *ex.scores_pos;
    if (ex.scores_neg) j["scores_neg"] = *ex.scores_neg;
    if (ex.truth) {
        j["meta"]["truth"] = {{"w_star", ex.truth->w_star},
                              {"q_pos", ex.truth->q_pos},
                              {"q_neg", ex.truth->q_neg},
                              {"reward_gap", ex.truth->reward_gap}};
    }
    return j;
}

std::vector<double> as_vector(const nlohmann::json& j, const char* field, std::size_t line_no) {
    if (!j.is_array()) {
        throw std::invalid_argument("jsonl line " + std::to_string(line_no) + ": " + field +
                                    " must be a number array");
    }
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_number()) {
            throw std::invalid_argument("jsonl line " + std::to_string(line_no) + ": " + field +
                                        " must contain only numbers");
        }
        v.push_back(e.get<double>());
    }
    return v;
}

}  // namespace

LoadedFile load_jsonl(const std::string& path, std::size_t embed_dx, std::size_t embed_dy) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open jsonl file: " + path);
    }
    LoadedFile out;
    out.schema.d_x = 0;
    enum class Mode { Unknown, Text, Numeric };
    Mode mode = Mode::Unknown;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;  // blank line
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                        ": malformed JSON: " + e.what());
        }
        if (!j.is_object()) {
            throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                        ": expected an object");
        }

        const bool text = j.contains("prompt");
        const bool numeric = j.contains("x_feat");
        if (text == numeric) {
            throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                        ": schema error: need exactly one of prompt / x_feat");
        }
        const Mode line_mode = text ? Mode::Text : Mode::Numeric;
        if (mode == Mode::Unknown) {
            mode = line_mode;
        } else if (mode != line_mode) {
            throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                        ": mixed text and numeric records are not supported");
        }

        PreferenceExample ex;
        if (text) {
            for (const char* f : {"response_pos", "response_neg"}) {
                if (!j.contains(f) || !j[f].is_string()) {
                    throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                                ": schema error: missing string field " + f);
                }
            }
            ex.x_feat = hash_embed(j["prompt"].get<std::string>(), embed_dx);
            ex.y_pos_feat = hash_embed(j["response_pos"].get<std::string>(), embed_dy);
            ex.y_neg_feat = hash_embed(j["response_neg"].get<std::string>(), embed_dy);
        } else {
            for (const char* f : {"y_pos_feat", "y_neg_feat"}) {
                if (!j.contains(f)) {
                    throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                                ": schema error: missing field " + f);
                }
            }
            ex.x_feat = as_vector(j["x_feat"], "x_feat", line_no);
            ex.y_pos_feat = as_vector(j["y_pos_feat"], "y_pos_feat", line_no);
            ex.y_neg_feat = as_vector(j["y_neg_feat"], "y_neg_feat", line_no);
        }
        if (j.contains("scores_pos")) {
            ex.scores_pos = as_vector(j["scores_pos"], "scores_pos", line_no);
        }
        if (j.contains("scores_neg")) {
            ex.scores_neg = as_vector(j["scores_neg"], "scores_neg", line_no);
        }
        if (j.contains("meta") && j["meta"].is_object() && j["meta"].contains("truth")) {
            const auto& tj = j["meta"]["truth"];
            TruthRecord truth;
            truth.w_star = as_vector(tj.at("w_star"), "meta.truth.w_star", line_no);
            truth.q_pos = as_vector(tj.at("q_pos"), "meta.truth.q_pos", line_no);
            truth.q_neg = as_vector(tj.at("q_neg"), "meta.truth.q_neg", line_no);
            truth.reward_gap = tj.at("reward_gap").get<double>();
            ex.truth = std::move(truth);
        }

        // shape consistency within the file
        if (out.examples.empty()) {
            out.schema.d_x = ex.x_feat.size();
            out.schema.d_y = ex.y_pos_feat.size();
            out.schema.k_scores = ex.scores_pos ? ex.scores_pos->size() : 0;
            out.schema.has_truth = ex.truth.has_value();
            out.schema.from_text = text;
        } else if (ex.x_feat.size() != out.schema.d_x ||
                   ex.y_pos_feat.size() != out.schema.d_y ||
                   ex.y_neg_feat.size() != out.schema.d_y) {
            throw std::invalid_argument("jsonl line " + std::to_string(line_no) +
                                        ": schema error: inconsistent feature dimensions");
        }
        out.examples.push_back(std::move(ex));
    }
    return out;
}

void save_jsonl(const std::string& path, std::span<const PreferenceExample> examples) {
    std::ofstream outf(path, std::ios::trunc);
    if (!outf) {
        throw std::runtime_error("cannot write jsonl file: " + path);
    }
    for (const auto& ex : examples) {
        outf << example_to_json(ex).dump() << '\n';
    }
    if (!outf) {
        throw std::runtime_error("write failed for jsonl file: " + path);
    }
}

std::string manifest_json(const GeneratorConfig& config, const Dataset& ds,
                          std::span<const std::size_t> train_indices,
                          std::span<const std::size_t> eval_indices) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "vrm_dataset_manifest";
    j["config"] = {{"seed", config.seed},
                   {"n", config.n},
                   {"d_x", config.d_x},
                   {"d_y", config.d_y},
                   {"k", config.k},
                   {"tau", config.tau},
                   {"score_noise", config.score_noise},
                   {"train_fraction", config.train_fraction}};
    j["schema"] = {{"d_x", ds.schema.d_x},
                   {"d_y", ds.schema.d_y},
                   {"k_scores", ds.schema.k_scores},
                   {"has_truth", ds.schema.has_truth}};
    j["split"] = {{"train_size", ds.train.size()},
                  {"eval_size", ds.eval.size()},
                  {"train_indices", std::vector<std::size_t>(train_indices.begin(), train_indices.end())},
                  {"eval_indices", std::vector<std::size_t>(eval_indices.begin(), eval_indices.end())}};
    return j.dump(2);
}

}  // namespace vrm::synth
