#include "nlc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "nlc/errors.hpp"

namespace nlc {

int64_t shape_size(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        check_arg(d >= 0, "negative extent in shape");
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor(Shape shape)
    : data_(std::make_shared<const std::vector<double>>(shape_size(shape), 0.0)),
      shape_(std::move(shape)) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
    check_arg(shape_size(shape_) == static_cast<int64_t>(values.size()),
              "value count does not match shape " + shape_str(shape_));
    data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double v) {
    std::vector<double> vals(static_cast<size_t>(shape_size(shape)), v);
    return Tensor(std::move(shape), std::move(vals));
}

double Tensor::at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    check_arg(shape_.size() == 4, "at4 requires a 4-d tensor");
    const int64_t C = shape_[1], H = shape_[2], W = shape_[3];
    return (*data_)[static_cast<size_t>(((n * C + c) * H + h) * W + w)];
}

double Tensor::item() const {
    check_arg(size() == 1, "item() requires a one-element tensor");
    return (*data_)[0];
}

bool Tensor::all_finite() const {
    if (!data_) return true;
    for (double v : *data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::detached() const {
    Tensor t;
    t.data_ = data_;
    t.shape_ = shape_;
    return t;
}

Parameter::Parameter(std::string name_, Tensor init) : name(std::move(name_)), value(std::move(init)) {
    grad.assign(static_cast<size_t>(value.size()), 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Parameter::assign(Tensor v) {
    check_arg(v.size() == value.size(), "parameter assign with mismatched size");
    value = v.detached();
}

}  // namespace nlc
