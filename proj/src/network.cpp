#include "hnet/network.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace hnet {

bool Activation::operator==(const Activation& o) const {
    if (kind != o.kind) return false;
    if (kind == ActKind::periodic) return *sigma == *o.sigma;
    if (kind == ActKind::polynomial) return *poly == *o.poly;
    return true;
}

bool is_passthrough(const Network& net, int node) {
    const Unit& u = net.unit(node);
    if (u.act.kind != ActKind::identity || u.in.size() != 1 || !u.bias.is_zero()) return false;
    if (net.is_input(u.in[0].src)) return false;
    return u.in[0].w == ExactScalar(1);
}

namespace {

std::vector<char> output_mask(const Network& net) {
    std::vector<char> out(net.units.size(), 0);
    for (int o : net.outputs) out[o - net.input_dim] = 1;
    return out;
}

}  // namespace

Counts count_params(const Network& net) {
    Counts c;
    auto is_out = output_mask(net);
    std::map<int, int> per_layer;
    for (size_t i = 0; i < net.units.size(); ++i) {
        const Unit& u = net.units[i];
        int node = net.input_dim + static_cast<int>(i);
        if (is_out[i]) {
            if (!is_passthrough(net, node)) c.W += static_cast<long>(u.in.size()) + 2;
            continue;
        }
        c.W += static_cast<long>(u.in.size()) + 2;
        per_layer[u.layer]++;
        c.L = std::max(c.L, u.layer);
    }
    for (auto& [l, n] : per_layer) c.width = std::max(c.width, n);
    return c;
}

std::vector<int> layer_profile(const Network& net) {
    auto is_out = output_mask(net);
    Counts c = count_params(net);
    std::vector<int> prof(c.L, 0);
    for (size_t i = 0; i < net.units.size(); ++i) {
        if (is_out[i]) continue;
        int l = net.units[i].layer;
        if (l >= 1) prof[l - 1]++;
    }
    return prof;
}

bool has_activation(const Network& net, ActKind kind) {
    for (auto& u : net.units)
        if (u.act.kind == kind) return true;
    return false;
}

long connection_count(const Network& net) {
    long n = 0;
    for (auto& u : net.units) n += static_cast<long>(u.in.size());
    return n;
}

// ---- Affine ----

Affine Affine::constant(const Rational& c) {
    Affine a;
    a.c_ = c;
    return a;
}

Affine Affine::node(int id, const Rational& w) {
    Affine a;
    if (sgn(w) != 0) a.terms_.push_back({id, w});
    return a;
}

bool Affine::is_plain_node() const { return terms_.size() == 1 && terms_[0].w == 1 && sgn(c_) == 0; }

void Affine::merge(const Affine& o, const Rational& s) {
    std::vector<Term> out;
    out.reserve(terms_.size() + o.terms_.size());
    size_t i = 0, j = 0;
    while (i < terms_.size() || j < o.terms_.size()) {
        if (j == o.terms_.size() || (i < terms_.size() && terms_[i].node < o.terms_[j].node)) {
            out.push_back(std::move(terms_[i++]));
        } else if (i == terms_.size() || o.terms_[j].node < terms_[i].node) {
            out.push_back({o.terms_[j].node, o.terms_[j].w * s});
            ++j;
        } else {
            Rational w = terms_[i].w + o.terms_[j].w * s;
            if (sgn(w) != 0) out.push_back({terms_[i].node, w});
            ++i;
            ++j;
        }
    }
    terms_ = std::move(out);
    c_ += o.c_ * s;
}

Affine& Affine::operator+=(const Affine& o) {
    merge(o, Rational(1));
    return *this;
}

Affine& Affine::operator-=(const Affine& o) {
    merge(o, Rational(-1));
    return *this;
}

Affine& Affine::operator*=(const Rational& s) {
    if (sgn(s) == 0) {
        terms_.clear();
        c_ = 0;
        return *this;
    }
    for (auto& t : terms_) t.w *= s;
    c_ *= s;
    return *this;
}

Affine& Affine::operator+=(const Rational& c) {
    c_ += c;
    return *this;
}

Affine& Affine::operator-=(const Rational& c) {
    c_ -= c;
    return *this;
}

void Affine::add_term(int node, const Rational& w) { merge(Affine::node(node, w), Rational(1)); }

// ---- NetBuilder ----

NetBuilder::NetBuilder(int input_dim) : d_(input_dim) {
    if (input_dim < 1) throw std::invalid_argument("input_dim must be positive");
}

Affine NetBuilder::input(int i) const {
    if (i < 0 || i >= d_) throw std::out_of_range("input index");
    return Affine::node(i);
}

int NetBuilder::layer_of(int node) const { return node < d_ ? 0 : units_[node - d_].layer; }

int NetBuilder::depth_of(const Affine& a) const {
    int l = 0;
    for (auto& t : a.terms()) l = std::max(l, layer_of(t.node));
    return l;
}

int NetBuilder::add_unit(const Activation& act, const Affine& a, int layer) {
    Unit u;
    u.act = act;
    u.in.reserve(a.terms().size());
    int deepest = 0;
    int self = d_ + static_cast<int>(units_.size());
    for (auto& t : a.terms()) {
        if (t.node < 0 || t.node >= self) throw std::logic_error("unit reads a node that does not precede it");
        u.in.push_back({t.node, ExactScalar(t.w)});
        deepest = std::max(deepest, layer_of(t.node));
    }
    u.bias = ExactScalar(a.offset());
    if (layer < 0) {
        layer = deepest + 1;
    } else if (layer <= deepest) {
        throw std::logic_error("explicit layer does not follow its sources");
    }
    u.layer = layer;
    units_.push_back(std::move(u));
    return self;
}

Affine NetBuilder::relu(const Affine& a, int layer) { return Affine::node(add_unit(Activation::relu(), a, layer)); }

Affine NetBuilder::materialize(const Affine& a, bool force, int layer) {
    if (!force && a.is_plain_node()) return a;
    return Affine::node(add_unit(Activation::identity(), a, layer));
}

Affine NetBuilder::periodic(const std::shared_ptr<const SigmaSpec>& s, const Affine& a, int layer) {
    return Affine::node(add_unit(Activation::periodic(s), a, layer));
}

Affine NetBuilder::polynomial(const std::shared_ptr<const std::vector<Rational>>& c, const Affine& a, int layer) {
    return Affine::node(add_unit(Activation::polynomial(c), a, layer));
}

Network NetBuilder::finish(const std::vector<Affine>& outputs, nlohmann::json meta) {
    if (outputs.empty()) throw std::invalid_argument("network needs an output");
    Network net;
    net.input_dim = d_;
    net.units = std::move(units_);
    net.meta = std::move(meta);
    units_.clear();
    int hidden_depth = 0;
    for (auto& u : net.units) hidden_depth = std::max(hidden_depth, u.layer);
    for (auto& a : outputs) {
        Unit u;
        for (auto& t : a.terms()) u.in.push_back({t.node, ExactScalar(t.w)});
        u.bias = ExactScalar(a.offset());
        u.layer = hidden_depth + 1;
        net.units.push_back(std::move(u));
        net.outputs.push_back(net.node_count() - 1);
    }
    return net;
}

// ---- composition ----

Affine output_affine(const Network& net, size_t i) {
    const Unit& u = net.unit(net.outputs.at(i));
    Affine a = Affine::constant(u.bias.to_rational());
    for (auto& c : u.in) a.add_term(c.src, c.w.to_rational());
    return a;
}

namespace {

// copies hidden units of net into dst; returns node remap (old node -> new affine)
std::vector<Affine> splice(const Network& net, std::vector<Unit>& dst, int new_d, const std::vector<Affine>& input_map,
                           int layer_shift) {
    auto is_out = output_mask(net);
    std::vector<Affine> map(net.node_count());
    for (int i = 0; i < net.input_dim; ++i) map[i] = input_map[i];
    for (size_t i = 0; i < net.units.size(); ++i) {
        if (is_out[i]) continue;
        const Unit& u = net.units[i];
        Affine a = Affine::constant(u.bias.to_rational());
        for (auto& c : u.in) a += map[c.src] * c.w.to_rational();
        Unit v;
        v.act = u.act;
        for (auto& t : a.terms()) v.in.push_back({t.node, ExactScalar(t.w)});
        v.bias = ExactScalar(a.offset());
        v.layer = u.layer + layer_shift;
        dst.push_back(std::move(v));
        map[net.input_dim + i] = Affine::node(new_d + static_cast<int>(dst.size()) - 1);
    }
    return map;
}

Affine remap(const Affine& a, const std::vector<Affine>& map) {
    Affine r = Affine::constant(a.offset());
    for (auto& t : a.terms()) r += map[t.node] * t.w;
    return r;
}

int max_layer(const std::vector<Unit>& units) {
    int l = 0;
    for (auto& u : units) l = std::max(l, u.layer);
    return l;
}

}  // namespace

Network compose_serial(const Network& a, const Network& b) {
    if (a.outputs.size() != static_cast<size_t>(b.input_dim)) throw std::invalid_argument("interface arity mismatch");
    std::vector<Unit> units;
    std::vector<Affine> in_a;
    for (int i = 0; i < a.input_dim; ++i) in_a.push_back(Affine::node(i));
    auto map_a = splice(a, units, a.input_dim, in_a, 0);
    int shift = count_params(a).L;
    std::vector<Affine> in_b;
    for (size_t j = 0; j < a.outputs.size(); ++j) in_b.push_back(remap(output_affine(a, j), map_a));
    auto map_b = splice(b, units, a.input_dim, in_b, shift);
    Network net;
    net.input_dim = a.input_dim;
    net.units = std::move(units);
    int top = max_layer(net.units);
    for (size_t j = 0; j < b.outputs.size(); ++j) {
        Affine o = remap(output_affine(b, j), map_b);
        Unit u;
        for (auto& t : o.terms()) u.in.push_back({t.node, ExactScalar(t.w)});
        u.bias = ExactScalar(o.offset());
        u.layer = top + 1;
        net.units.push_back(std::move(u));
        net.outputs.push_back(net.node_count() - 1);
    }
    net.meta = {{"variant", "serial"}, {"parts", {a.meta, b.meta}}};
    return net;
}

Network compose_parallel(const std::vector<Network>& nets, const std::vector<Rational>& weights) {
    if (nets.empty()) throw std::invalid_argument("empty network list");
    if (nets.size() != weights.size()) throw std::invalid_argument("weights length mismatch");
    int d = nets[0].input_dim;
    std::vector<Unit> units;
    std::vector<Affine> in;
    for (int i = 0; i < d; ++i) in.push_back(Affine::node(i));
    Affine out;
    auto parts = nlohmann::json::array();
    for (size_t k = 0; k < nets.size(); ++k) {
        const Network& n = nets[k];
        if (n.input_dim != d) throw std::invalid_argument("input_dim mismatch");
        if (n.outputs.size() != 1) throw std::invalid_argument("parallel composition needs scalar nets");
        auto map = splice(n, units, d, in, 0);
        out += remap(output_affine(n, 0), map) * weights[k];
        parts.push_back(n.meta);
    }
    Network net;
    net.input_dim = d;
    net.units = std::move(units);
    Unit u;
    for (auto& t : out.terms()) u.in.push_back({t.node, ExactScalar(t.w)});
    u.bias = ExactScalar(out.offset());
    u.layer = max_layer(net.units) + 1;
    net.units.push_back(std::move(u));
    net.outputs.push_back(net.node_count() - 1);
    net.meta = {{"variant", "parallel"}, {"parts", parts}};
    return net;
}

}  // namespace hnet
