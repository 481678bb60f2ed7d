#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nlc {

class Graph;

using Shape = std::vector<int64_t>;

int64_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Immutable n-d array of doubles. A tensor may additionally carry a handle
// into a differentiation graph; value access never depends on the graph.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);

    const Shape& shape() const { return shape_; }
    int64_t size() const { return static_cast<int64_t>(data_ ? data_->size() : 0); }
    bool empty() const { return size() == 0; }

    std::span<const double> values() const {
        return data_ ? std::span<const double>(*data_) : std::span<const double>();
    }
    double operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

    // 4-d accessor for (batch, channel, row, col) data.
    double at4(int64_t n, int64_t c, int64_t h, int64_t w) const;
    // Value of a single-element tensor.
    double item() const;

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Graph* graph() const { return graph_; }
    int node() const { return node_; }
    bool recorded() const { return graph_ != nullptr && node_ >= 0; }
    // Value-only copy with no graph linkage.
    Tensor detached() const;

private:
    friend class Graph;

    std::shared_ptr<const std::vector<double>> data_;
    Shape shape_;
    Graph* graph_ = nullptr;
    int node_ = -1;
};

// A named, trainable tensor. Gradients accumulate in a separate slot so the
// tensor value itself stays immutable within a step.
struct Parameter {
    Parameter() = default;
    Parameter(std::string name, Tensor init);

    std::string name;
    Tensor value;
    std::vector<double> grad;  // same element count as value
    // Optional elementwise lower bound enforced after optimizer updates
    // (used by reparameterized nonnegative weights). NaN disables it.
    double lower_bound = std::numeric_limits<double>::quiet_NaN();

    bool has_lower_bound() const { return lower_bound == lower_bound; }
    void zero_grad();
    void assign(Tensor v);  // replaces the value, keeps grad slot sized
};

}  // namespace nlc
