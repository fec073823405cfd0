// Named parameter tensors with deterministic iteration order (creation
// order) and seeded initialization. Serialized as a JSON checkpoint with a
// schema header; two stores built with the same seed and shape schema are
// element-wise identical.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrm/rng.hpp"
#include "vrm/tape.hpp"
#include "vrm/tensor.hpp"

namespace vrm {

class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
    };

    explicit ParamStore(std::uint64_t seed) : seed_(seed), rng_(seed, /*stream=*/0xBEEF) {}

    // Affine weight: uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)).
    std::size_t add_weight(const std::string& name, std::size_t rows, std::size_t cols);
    // Zero-initialized tensor (biases, head outputs).
    std::size_t add_zeros(const std::string& name, std::size_t rows, std::size_t cols);

    std::size_t count() const { return entries_.size(); }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Entry& entry(std::size_t i) { return entries_[i]; }
    std::optional<std::size_t> find(const std::string& name) const;
    std::uint64_t seed() const { return seed_; }

    std::size_t total_scalars() const;

    // Flatten / unflatten all values in iteration order.
    std::vector<double> flat() const;
    void set_flat(const std::vector<double>& v);

    // Creates one tape leaf per entry, in order; ids[i] matches entry(i).
    std::vector<Tape::Id> bind(Tape& tape) const;

    std::string to_json() const;
    static ParamStore from_json(const std::string& text);

private:
    std::uint64_t seed_;
    Rng rng_;
    std::vector<Entry> entries_;
};

}  // namespace vrm
