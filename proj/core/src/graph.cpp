#include "nlc/graph.hpp"

#include <algorithm>

#include "nlc/errors.hpp"

namespace nlc {

std::span<double> GradSink::slot(int i) { return slots_[static_cast<size_t>(i)]; }

void GradSink::add(int i, std::span<const double> g) {
    auto s = slot(i);
    if (s.empty()) return;
    check_arg(s.size() == g.size(), "gradient size mismatch in sink");
    for (size_t k = 0; k < g.size(); ++k) s[k] += g[k];
}

Tensor Graph::leaf(const Tensor& value) {
    Tensor out = value.detached();
    nodes_.push_back(Node{{}, out.size(), nullptr, nullptr});
    out.graph_ = this;
    out.node_ = static_cast<int>(nodes_.size()) - 1;
    return out;
}

Tensor Graph::use(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) {
        Tensor out = p.value.detached();
        out.graph_ = this;
        out.node_ = it->second;
        return out;
    }
    Tensor out = leaf(p.value);
    nodes_.back().param = &p;
    param_nodes_.emplace(&p, out.node());
    return out;
}

Tensor Graph::record(Shape out_shape, std::vector<double> out_values,
                     const std::vector<const Tensor*>& inputs, BackwardFn fn) {
    return record(Tensor(std::move(out_shape), std::move(out_values)), inputs, fn);
}

Tensor Graph::record(Tensor out, const std::vector<const Tensor*>& inputs, BackwardFn fn) {
    Node node;
    node.out_size = out.size();
    node.backward = std::move(fn);
    for (const Tensor* t : inputs) {
        if (t->recorded()) {
            check_arg(t->graph() == this, "op inputs belong to different graphs");
            node.input_nodes.push_back(t->node());
        } else {
            node.input_nodes.push_back(-1);
        }
    }
    nodes_.push_back(std::move(node));
    out.graph_ = this;
    out.node_ = static_cast<int>(nodes_.size()) - 1;
    return out;
}

void Graph::backward(const Tensor& loss) {
    check_arg(loss.size() == 1, "backward requires a one-element loss");
    check_arg(loss.recorded() && loss.graph() == this,
              "loss is not recorded on this graph");

    grads_.assign(nodes_.size(), {});
    grads_[static_cast<size_t>(loss.node())] = {1.0};

    for (int id = loss.node(); id >= 0; --id) {
        auto& g = grads_[static_cast<size_t>(id)];
        if (g.empty()) continue;
        Node& node = nodes_[static_cast<size_t>(id)];
        if (!node.backward) continue;  // leaf

        GradSink sink;
        sink.slots_.resize(node.input_nodes.size());
        for (size_t i = 0; i < node.input_nodes.size(); ++i) {
            int in = node.input_nodes[i];
            if (in < 0) continue;
            auto& buf = grads_[static_cast<size_t>(in)];
            if (buf.empty()) buf.assign(static_cast<size_t>(nodes_[static_cast<size_t>(in)].out_size), 0.0);
            sink.slots_[i] = std::span<double>(buf);
        }
        node.backward(std::span<const double>(g), sink);
    }

    for (size_t id = 0; id < nodes_.size(); ++id) {
        Parameter* p = nodes_[id].param;
        if (!p || grads_[id].empty()) continue;
        check_arg(p->grad.size() == grads_[id].size(), "parameter gradient slot size mismatch");
        for (size_t k = 0; k < grads_[id].size(); ++k) p->grad[k] += grads_[id][k];
    }
}

Tensor Graph::gradient(const Tensor& t) const {
    check_arg(t.recorded() && t.graph() == this, "tensor is not recorded on this graph");
    const auto& buf = grads_.empty() ? std::vector<double>{} : grads_[static_cast<size_t>(t.node())];
    if (buf.empty()) return Tensor::zeros(t.shape());
    return Tensor(t.shape(), buf);
}

void Graph::reset() {
    nodes_.clear();
    grads_.clear();
    param_nodes_.clear();
}

}  // namespace nlc
