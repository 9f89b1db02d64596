#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldif/nn/array.hpp"
#include "ldif/nn/tape.hpp"
#include "ldif/rng.hpp"

namespace ldif::nn {

/// Named parameter arrays, iterated in lexicographic name order. Shapes are
/// fixed once a name is added.
class ParamSet {
   public:
    using Map = std::map<std::string, NumArray>;

    void add(const std::string& name, NumArray value);
    /// Replaces the value of an existing parameter; the shape must not change.
    void set(const std::string& name, NumArray value);

    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    const NumArray& get(const std::string& name) const;
    NumArray& get_mut(const std::string& name);

    std::size_t size() const noexcept { return params_.size(); }
    /// Total number of scalar coordinates.
    std::size_t coordinate_count() const;
    std::vector<std::string> names() const;

    Map::const_iterator begin() const { return params_.begin(); }
    Map::const_iterator end() const { return params_.end(); }

    friend bool operator==(const ParamSet& a, const ParamSet& b) { return a.params_ == b.params_; }

   private:
    Map params_;
};

using Gradients = std::map<std::string, NumArray>;

/// Parameters registered as gradient-carrying leaves on one tape.
class BoundParams {
   public:
    /// With `trainable` false the parameters are recorded as constants and no
    /// backward closures are kept.
    BoundParams(Tape& tape, const ParamSet& params, bool trainable = true);

    Var operator[](const std::string& name) const;
    /// Gradients of the last backward sweep for every parameter; parameters
    /// that did not contribute get exact zeros.
    Gradients gradients(const Tape& tape) const;

   private:
    std::map<std::string, Var> vars_;
};

/// Checkpoint layout (all integers and floats little-endian):
///   "LDIF" | u32 version | u64 count |
///   count × ( u32 name_len | name bytes | u32 rank | rank × u64 dim | prod(dims) × f64 )
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize(const ParamSet& params);
ParamSet deserialize(const std::string& bytes);
void save_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_params(const std::filesystem::path& path);

/// Uniform(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out))) over a [fan_in, fan_out] matrix.
NumArray glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out);

}  // namespace ldif::nn
