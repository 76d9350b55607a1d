#include "hnet/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hnet {

using nlohmann::json;

json scalar_to_json(const ExactScalar& s) {
    if (s.is_rational()) {
        const Rational& q = s.rational();
        return json::array({q.get_num().get_str(10), q.get_den().get_str(10)});
    }
    const BigFloat& f = s.bigfloat();
    return json{{"mant", f.mantissa_hex()}, {"exp", f.exponent()}, {"bits", f.bits()}};
}

ExactScalar scalar_from_json(const json& j) {
    if (j.is_array()) {
        Integer n, d;
        if (n.set_str(j.at(0).get<std::string>(), 10) != 0 || d.set_str(j.at(1).get<std::string>(), 10) != 0)
            throw std::invalid_argument("bad rational pair");
        if (sgn(d) <= 0) throw std::invalid_argument("denominator must be positive");
        Rational q(n, d);
        q.canonicalize();
        if (q.get_num() != n || q.get_den() != d) throw std::invalid_argument("rational not in canonical form");
        return ExactScalar(q);
    }
    return ExactScalar(BigFloat::from_hex(j.at("mant"), j.at("exp"), j.at("bits")));
}

namespace {

json activation_to_json(const Activation& a) {
    switch (a.kind) {
        case ActKind::identity:
            return "identity";
        case ActKind::relu:
            return "relu";
        case ActKind::periodic:
            return json{{"periodic", a.sigma->to_json()}};
        case ActKind::polynomial: {
            auto c = json::array();
            for (auto& q : *a.poly) c.push_back(scalar_to_json(ExactScalar(q)));
            return json{{"polynomial", c}};
        }
    }
    throw std::logic_error("unknown activation");
}

Activation activation_from_json(const json& j) {
    if (j.is_string()) {
        if (j == "identity") return Activation::identity();
        if (j == "relu") return Activation::relu();
        throw std::invalid_argument("unknown activation " + j.get<std::string>());
    }
    if (j.contains("periodic")) return Activation::periodic(std::make_shared<SigmaSpec>(SigmaSpec::from_json(j["periodic"])));
    if (j.contains("polynomial")) {
        auto c = std::make_shared<std::vector<Rational>>();
        for (auto& q : j["polynomial"]) c->push_back(scalar_from_json(q).to_rational());
        return Activation::polynomial(c);
    }
    throw std::invalid_argument("unknown activation object");
}

}  // namespace

json network_to_json(const Network& net) {
    json j;
    j["input_dim"] = net.input_dim;
    auto units = json::array();
    for (size_t i = 0; i < net.units.size(); ++i) {
        const Unit& u = net.units[i];
        json ju;
        ju["id"] = net.input_dim + static_cast<int>(i);
        ju["activation"] = activation_to_json(u.act);
        auto in = json::array();
        for (auto& c : u.in) {
            json e = json::array({c.src});
            json w = scalar_to_json(c.w);
            if (w.is_array()) {
                e.push_back(w[0]);
                e.push_back(w[1]);
            } else {
                e.push_back(w);
            }
            in.push_back(e);
        }
        ju["incoming"] = in;
        ju["bias"] = scalar_to_json(u.bias);
        ju["layer"] = u.layer;
        units.push_back(std::move(ju));
    }
    j["units"] = std::move(units);
    if (net.outputs.size() == 1) {
        j["output_id"] = net.outputs[0];
    } else {
        j["output_id"] = net.outputs;
    }
    j["meta"] = net.meta;
    return j;
}

Network network_from_json(const json& j) {
    Network net;
    net.input_dim = j.at("input_dim");
    if (net.input_dim < 1) throw std::invalid_argument("input_dim must be positive");
    const json& units = j.at("units");
    net.units.reserve(units.size());
    for (size_t i = 0; i < units.size(); ++i) {
        const json& ju = units[i];
        int id = ju.at("id");
        if (id != net.input_dim + static_cast<int>(i)) throw std::invalid_argument("unit ids must be consecutive");
        Unit u;
        u.act = activation_from_json(ju.at("activation"));
        for (auto& e : ju.at("incoming")) {
            int src = e.at(0);
            if (src < 0 || src >= id) throw std::invalid_argument("incoming source does not precede unit");
            ExactScalar w = e.size() == 3 ? scalar_from_json(json::array({e[1], e[2]})) : scalar_from_json(e.at(1));
            u.in.push_back({src, std::move(w)});
        }
        u.bias = scalar_from_json(ju.at("bias"));
        u.layer = ju.value("layer", 0);
        net.units.push_back(std::move(u));
    }
    const json& out = j.at("output_id");
    if (out.is_array()) {
        for (auto& o : out) net.outputs.push_back(o);
    } else {
        net.outputs.push_back(out);
    }
    for (int o : net.outputs) {
        if (o < net.input_dim || o >= net.node_count()) throw std::invalid_argument("output id out of range");
        if (net.unit(o).act.kind != ActKind::identity) throw std::invalid_argument("output unit must be identity");
    }
    net.meta = j.value("meta", json::object());
    return net;
}

std::string dump_network(const Network& net) { return network_to_json(net).dump(); }

Network parse_network(const std::string& text) { return network_from_json(json::parse(text)); }

void save_network(const Network& net, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << dump_network(net) << "\n";
}

Network load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_network(ss.str());
}

}  // namespace hnet
