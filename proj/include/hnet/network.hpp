#pragma once

#include "hnet/scalar.hpp"
#include "hnet/sigma.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace hnet {

enum class ActKind { identity, relu, periodic, polynomial };

struct Activation {
    ActKind kind = ActKind::identity;
    std::shared_ptr<const SigmaSpec> sigma;
    // coefficients c_0..c_n of c_0 + c_1 t + ... + c_n t^n
    std::shared_ptr<const std::vector<Rational>> poly;

    static Activation identity() { return {}; }
    static Activation relu() { return {ActKind::relu, nullptr, nullptr}; }
    static Activation periodic(std::shared_ptr<const SigmaSpec> s) { return {ActKind::periodic, std::move(s), nullptr}; }
    static Activation polynomial(std::shared_ptr<const std::vector<Rational>> c) {
        return {ActKind::polynomial, nullptr, std::move(c)};
    }
    bool operator==(const Activation& o) const;
};

struct Conn {
    int src;
    ExactScalar w;
};

struct Unit {
    Activation act;
    std::vector<Conn> in;
    ExactScalar bias;
    int layer = 0;
};

// Nodes 0..input_dim-1 are inputs; unit i is node input_dim + i.
struct Network {
    int input_dim = 0;
    std::vector<Unit> units;
    std::vector<int> outputs;
    nlohmann::json meta = nlohmann::json::object();

    int node_count() const { return input_dim + static_cast<int>(units.size()); }
    bool is_input(int node) const { return node < input_dim; }
    const Unit& unit(int node) const { return units[node - input_dim]; }
    Unit& unit(int node) { return units[node - input_dim]; }
};

struct Counts {
    long W = 0;
    int L = 0;
    int width = 0;
};

// Output units that only forward one hidden unit (weight 1, bias 0) carry no parameters.
bool is_passthrough(const Network& net, int node);
Counts count_params(const Network& net);
// units per hidden layer, index 0 is layer 1
std::vector<int> layer_profile(const Network& net);
bool has_activation(const Network& net, ActKind kind);
long connection_count(const Network& net);

// Sparse affine form over node ids.
struct Term {
    int node;
    Rational w;
};

class Affine {
public:
    Affine() = default;
    static Affine constant(const Rational& c);
    static Affine node(int id, const Rational& w = 1);

    const std::vector<Term>& terms() const { return terms_; }
    const Rational& offset() const { return c_; }
    bool is_constant() const { return terms_.empty(); }
    // single node, weight 1, no offset
    bool is_plain_node() const;

    Affine& operator+=(const Affine& o);
    Affine& operator-=(const Affine& o);
    Affine& operator*=(const Rational& s);
    Affine& operator+=(const Rational& c);
    Affine& operator-=(const Rational& c);
    void add_term(int node, const Rational& w);

    friend Affine operator+(Affine a, const Affine& b) { return a += b; }
    friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
    friend Affine operator*(Affine a, const Rational& s) { return a *= s; }
    friend Affine operator*(const Rational& s, Affine a) { return a *= s; }
    friend Affine operator+(Affine a, const Rational& c) { return a += c; }
    friend Affine operator-(Affine a, const Rational& c) { return a -= c; }
    friend Affine operator+(const Rational& c, Affine a) { return a += c; }
    friend Affine operator-(const Rational& c, const Affine& a) { return -a + c; }
    Affine operator-() const { return *this * Rational(-1); }

private:
    void merge(const Affine& o, const Rational& s);
    std::vector<Term> terms_;
    Rational c_;
};

class NetBuilder {
public:
    explicit NetBuilder(int input_dim);

    int input_dim() const { return d_; }
    Affine input(int i) const;
    // layer < 0 means one past the deepest source
    int add_unit(const Activation& act, const Affine& a, int layer = -1);
    Affine relu(const Affine& a, int layer = -1);
    // identity unit; plain nodes are returned as-is unless force is set
    Affine materialize(const Affine& a, bool force = false, int layer = -1);
    Affine periodic(const std::shared_ptr<const SigmaSpec>& s, const Affine& a, int layer = -1);
    Affine polynomial(const std::shared_ptr<const std::vector<Rational>>& c, const Affine& a, int layer = -1);

    int layer_of(int node) const;
    int depth_of(const Affine& a) const;
    size_t unit_count() const { return units_.size(); }
    const Unit& unit(int node) const { return units_[node - d_]; }

    Network finish(const std::vector<Affine>& outputs, nlohmann::json meta = nlohmann::json::object());

private:
    int d_;
    std::vector<Unit> units_;
};

// output i of the network as an affine form over its nodes
Affine output_affine(const Network& net, size_t i);

// b after a, output j of a feeding input j of b
Network compose_serial(const Network& a, const Network& b);
// Σ weights[i] * nets[i](x)
Network compose_parallel(const std::vector<Network>& nets, const std::vector<Rational>& weights);

}  // namespace hnet
