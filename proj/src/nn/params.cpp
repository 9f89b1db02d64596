#include "ldif/nn/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ldif/error.hpp"

namespace ldif::nn {

void ParamSet::add(const std::string& name, NumArray value) {
    if (name.empty()) throw ConfigError("parameter name must not be empty");
    if (!params_.emplace(name, std::move(value)).second) throw ConfigError("duplicate parameter '" + name + "'");
}

void ParamSet::set(const std::string& name, NumArray value) {
    NumArray& slot = get_mut(name);
    if (slot.shape() != value.shape()) {
        throw ShapeError("parameter '" + name + "' has shape " + shape_string(slot.shape()) + ", cannot assign " +
                         shape_string(value.shape()));
    }
    slot = std::move(value);
}

const NumArray& ParamSet::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

NumArray& ParamSet::get_mut(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParamSet::coordinate_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : params_) n += v.size();
    return n;
}

std::vector<std::string> ParamSet::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool trainable) {
    for (const auto& [name, value] : params) {
        vars_.emplace(name, trainable ? tape.variable(value) : tape.constant(value));
    }
}

Var BoundParams::operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw ConfigError("parameter '" + name + "' is not bound");
    return it->second;
}

Gradients BoundParams::gradients(const Tape& tape) const {
    Gradients out;
    for (const auto& [name, var] : vars_) out.emplace(name, tape.grad(var));
    return out;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        std::memcpy(&value, bytes, sizeof(T));
    }
    return value;
}

template <typename T>
void put(std::string& out, T value) {
    value = to_little(value);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

class Reader {
   public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(value);
    }

    std::string take(std::size_t n, const char* what) {
        need(n, what);
        std::string out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

   private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) throw ParseError(std::string("checkpoint truncated while reading ") + what, pos_);
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const ParamSet& params) {
    std::string out = "LDIF";
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, params.size());
    for (const auto& [name, value] : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(value.rank()));
        for (auto d : value.shape()) put<std::uint64_t>(out, d);
        for (double v : value.values()) put<double>(out, v);
    }
    return out;
}

ParamSet deserialize(const std::string& bytes) {
    Reader in(bytes);
    if (in.take(4, "magic") != "LDIF") throw ParseError("not a parameter checkpoint (bad magic)", 0);
    const auto version = in.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
    }
    const auto count = in.get<std::uint64_t>("parameter count");
    ParamSet params;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = in.get<std::uint32_t>("name length");
        std::string name = in.take(name_len, "name");
        const auto rank = in.get<std::uint32_t>("rank");
        if (rank == 0 || rank > 8) throw ParseError("parameter '" + name + "' has invalid rank", in.pos());
        Shape shape(rank);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = in.get<std::uint64_t>("dimension");
            if (d == 0 || d > (std::size_t{1} << 32)) {
                throw ParseError("parameter '" + name + "' has invalid dimension", in.pos());
            }
            n *= d;
        }
        std::vector<double> values(n);
        for (auto& v : values) v = in.get<double>("values");
        params.add(name, NumArray(std::move(shape), std::move(values)));
    }
    if (!in.done()) throw ParseError("trailing bytes after checkpoint", in.pos());
    return params;
}

void save_params(const std::filesystem::path& path, const ParamSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::string bytes = serialize(params);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ParamSet load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

NumArray glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    NumArray w({fan_in, fan_out});
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    return w;
}

}  // namespace ldif::nn
