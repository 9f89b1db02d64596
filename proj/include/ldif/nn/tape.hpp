#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <vector>

#include "ldif/nn/array.hpp"

namespace ldif::nn {

/// Handle to a value recorded on a Tape.
struct Var {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t id = npos;

    bool valid() const noexcept { return id != npos; }
};

/// Append-only record of a forward computation. Values are stored in
/// recording order, so reverse order is a valid topological order for the
/// backward sweep.
class Tape {
   public:
    /// Receives the gradient flowing into the op's output and accumulates
    /// into its inputs through `Tape::grad_buffer`.
    using Backward = std::function<void(Tape&, const NumArray& out_grad)>;

    Var constant(NumArray value);
    Var variable(NumArray value);
    /// Records an op result. The backward closure is dropped when no input
    /// requires a gradient.
    Var record(NumArray value, std::initializer_list<Var> inputs, Backward backward);
    Var record(NumArray value, const std::vector<Var>& inputs, Backward backward);

    const NumArray& value(Var v) const;
    bool requires_grad(Var v) const;
    /// Gradient of the last backward() target w.r.t. `v`; zeros when `v`
    /// did not contribute.
    NumArray grad(Var v) const;
    /// Zero-initialised accumulation buffer, allocated on first use.
    NumArray& grad_buffer(Var v);

    /// Seeds d(loss)/d(loss) = 1 and sweeps every recorded op once, newest first.
    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Number of backward closures run by the last backward() call.
    std::size_t backward_visits() const noexcept { return visits_; }

   private:
    struct Node {
        NumArray value;
        NumArray grad;
        Backward backward;
        bool requires_grad = false;
    };

    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    std::size_t visits_ = 0;
};

}  // namespace ldif::nn
