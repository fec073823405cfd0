#include "vrm/params.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace vrm {

std::size_t ParamStore::add_weight(const std::string& name, std::size_t rows, std::size_t cols) {
    Tensor t(rows, cols);
    const double a = std::sqrt(6.0 / static_cast<double>(cols + rows));
    for (double& v : t.data) {
        v = a * (2.0 * rng_.uniform() - 1.0);
    }
    entries_.push_back({name, std::move(t)});
    return entries_.size() - 1;
}

std::size_t ParamStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
    entries_.push_back({name, Tensor(rows, cols)});
    return entries_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t ParamStore::total_scalars() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.size();
    return n;
}

std::vector<double> ParamStore::flat() const {
    std::vector<double> out;
    out.reserve(total_scalars());
    for (const Entry& e : entries_) {
        out.insert(out.end(), e.value.data.begin(), e.value.data.end());
    }
    return out;
}

void ParamStore::set_flat(const std::vector<double>& v) {
    if (v.size() != total_scalars()) {
        throw std::invalid_argument("set_flat: size " + std::to_string(v.size()) +
                                    " vs store size " + std::to_string(total_scalars()));
    }
    std::size_t off = 0;
    for (Entry& e : entries_) {
        std::copy(v.begin() + off, v.begin() + off + e.value.size(), e.value.data.begin());
        off += e.value.size();
    }
}

std::vector<Tape::Id> ParamStore::bind(Tape& tape) const {
    std::vector<Tape::Id> ids;
    ids.reserve(entries_.size());
    for (const Entry& e : entries_) {
        Tensor copy = e.value;
        ids.push_back(tape.leaf(std::move(copy)));
    }
    return ids;
}

std::string ParamStore::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "vrm_param_store";
    j["seed"] = seed_;
    nlohmann::json params = nlohmann::json::array();
    for (const Entry& e : entries_) {
        params.push_back({{"name", e.name},
                          {"rows", e.value.rows},
                          {"cols", e.value.cols},
                          {"data", e.value.data}});
    }
    j["params"] = std::move(params);
    return j.dump();
}

ParamStore ParamStore::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("kind") || j["kind"] != "vrm_param_store") {
        throw std::invalid_argument("checkpoint schema: missing vrm_param_store header");
    }
    if (j.at("format_version").get<int>() != 1) {
        throw std::invalid_argument("checkpoint schema: unsupported format_version");
    }
    ParamStore ps(j.at("seed").get<std::uint64_t>());
    for (const auto& p : j.at("params")) {
        Tensor t(p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>());
        const auto& data = p.at("data");
        if (data.size() != t.size()) {
            throw std::invalid_argument("checkpoint schema: data length mismatch for " +
                                        p.at("name").get<std::string>());
        }
        for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = data[i].get<double>();
        ps.entries_.push_back({p.at("name").get<std::string>(), std::move(t)});
    }
    return ps;
}

}  // namespace vrm
