#include "hnet/builders.hpp"
#include "hnet/corpus.hpp"
#include "hnet/eval.hpp"
#include "hnet/fourier.hpp"
#include "hnet/harness.hpp"
#include "hnet/serialize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace hnet;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

struct BuildArgs {
    std::string variant = "deep";
    int d = 1;
    std::string r = "1", p = "2", eps = "1/16", c_M = "1";
    std::string fn;
    unsigned long seed = 1;
    long W = 0, N = 0, M = 0;
    int U = 0;
    int relu_iterations = 0;
    std::string sigma = "triangle";
    std::string combiner = "max";
    std::string out, seed_out;
};

// config values override nothing given explicitly on the command line
void apply_config(BuildArgs& a, const nlohmann::json& j, const CLI::App& app) {
    auto str = [&](const char* key, const char* flag, std::string& dst) {
        if (!j.contains(key) || app.count(flag)) return;
        dst = j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
    };
    auto num = [&](const char* key, const char* flag, auto& dst) {
        if (j.contains(key) && !app.count(flag)) dst = j[key].get<std::decay_t<decltype(dst)>>();
    };
    str("variant", "--variant", a.variant);
    num("d", "--d", a.d);
    str("r", "--r", a.r);
    str("p", "--p", a.p);
    str("eps", "--eps", a.eps);
    str("c_M", "--c-M", a.c_M);
    str("fn", "--fn", a.fn);
    num("seed", "--seed", a.seed);
    num("W", "--W", a.W);
    num("N", "--N", a.N);
    num("M", "--M", a.M);
    num("U", "--U", a.U);
    num("relu_iterations", "--relu-iterations", a.relu_iterations);
    str("sigma", "--sigma", a.sigma);
    str("combiner", "--combiner", a.combiner);
    str("out", "--out", a.out);
    str("seed_out", "--seed-out", a.seed_out);
}

int run_build(BuildArgs& a) {
    Rational r = parse_rational(a.r);
    std::vector<FunctionOracle> fns = corpus(a.d, r, a.seed);
    FunctionOracle f = a.fn.empty() ? fns.front() : corpus_member(a.d, r, a.seed, a.fn);
    BuildRequest req;
    req.variant = parse_variant(a.variant);
    req.p = parse_rational(a.p);
    req.eps = parse_rational(a.eps);
    req.c_M = parse_rational(a.c_M);
    req.W = a.W;
    req.N = a.N;
    req.M = a.M;
    req.U = a.U;
    req.relu_iterations = a.relu_iterations;
    req.sigma = a.sigma;
    req.combiner = a.combiner == "weighted" ? Combiner::weighted : Combiner::max;
    if (req.W == 0 && req.N == 0 && req.M == 0 && req.U == 0) req.W = 64;
    Network net = build(f, req);
    std::string text = dump_network(net);
    if (a.out.empty()) std::cout << text << "\n";
    else write_file(a.out, text);
    if (!a.seed_out.empty()) write_file(a.seed_out, scalar_to_json(extract_seed(net)).dump() + "\n");
    std::cerr << variant_name(req.variant) << " fn=" << f.id() << " W=" << net.meta["W"] << " L=" << net.meta["L"]
              << " width=" << net.meta["width"] << "\n";
    return 0;
}

std::vector<Rational> parse_point(const std::string& csv) {
    std::vector<Rational> x;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.find_first_of(".eE") != std::string::npos) x.push_back(rational_from_double(std::stod(item)));
        else x.push_back(parse_rational(item));
    }
    return x;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constructive approximation networks: build, evaluate and measure rates"};
    app.require_subcommand(1);

    BuildArgs ba;
    std::string build_config;
    auto* build = app.add_subcommand("build", "build a network for one corpus function");
    build->add_option("--config", build_config, "JSON file with the same keys as the flags");
    build->add_option("--variant", ba.variant, "shallow|deep|fixed-width|poly|fourier");
    build->add_option("--d", ba.d, "input dimension");
    build->add_option("--r", ba.r, "smoothness");
    build->add_option("--p", ba.p, "target rate (deep, poly)");
    build->add_option("--eps", ba.eps, "target accuracy (fixed-width)");
    build->add_option("--c-M", ba.c_M, "M = c_M W^(p/r)");
    build->add_option("--fn", ba.fn, "corpus function id");
    build->add_option("--seed", ba.seed, "corpus seed");
    build->add_option("--W", ba.W, "weight budget");
    build->add_option("--N", ba.N, "coarse grid");
    build->add_option("--M", ba.M, "fine grid");
    build->add_option("--U", ba.U, "fourier: M = 2^U");
    build->add_option("--relu-iterations", ba.relu_iterations, "poly: u_n depth, 0 = automatic");
    build->add_option("--sigma", ba.sigma, "fourier: triangle|sine");
    build->add_option("--combiner", ba.combiner, "max|weighted");
    build->add_option("--out", ba.out, "network file (stdout if absent)");
    build->add_option("--seed-out", ba.seed_out, "fourier: write the seed weight to this file");

    std::string net_path, x_csv;
    long eval_bits = 0;
    auto* eval = app.add_subcommand("eval", "evaluate a network at one point");
    eval->add_option("--net", net_path, "network file")->required();
    eval->add_option("--x", x_csv, "comma-separated coordinates, rationals or decimals")->required();
    eval->add_option("--bits", eval_bits, "bigfloat precision; 0 = exact for ReLU and triangle nets");

    std::string sweep_config, sweep_out, sweep_report;
    auto* sweep = app.add_subcommand("sweep", "rate sweep over budgets and corpus functions");
    sweep->add_option("--config", sweep_config, "JSON sweep config")->required();
    sweep->add_option("--out", sweep_out, "CSV table (stdout if absent)");
    sweep->add_option("--report", sweep_report, "also write a report directory");

    std::string table_path, model = "power";
    auto* fit = app.add_subcommand("fit", "fit error against W for every (variant, d, r, fn)");
    fit->add_option("--table", table_path, "CSV table")->required();
    fit->add_option("--model", model, "power|powerlog|sqrtexp");

    std::string report_table, report_dir, report_model = "power";
    auto* report = app.add_subcommand("report", "table.csv, summary.txt and SVG plots");
    report->add_option("--table", report_table, "CSV table")->required();
    report->add_option("--out", report_dir, "output directory")->required();
    report->add_option("--model", report_model, "power|powerlog|sqrtexp");

    std::string skel_path, seed_path, attach_out;
    auto* attach = app.add_subcommand("attach-seed", "put a seed weight into a fourier skeleton");
    attach->add_option("--net", skel_path, "network file")->required();
    attach->add_option("--seed-file", seed_path, "seed written by build --seed-out")->required();
    attach->add_option("--out", attach_out, "network file (stdout if absent)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            if (!build_config.empty()) apply_config(ba, nlohmann::json::parse(read_file(build_config)), *build);
            return run_build(ba);
        }
        if (*eval) {
            Network net = load_network(net_path);
            std::vector<Rational> x = parse_point(x_csv);
            if (static_cast<int>(x.size()) != net.input_dim) throw std::invalid_argument("point has the wrong dimension");
            bool exact = eval_bits == 0;
            for (auto& u : net.units) {
                if (u.act.kind == ActKind::periodic && !u.act.sigma->rational_exact()) exact = false;
                if (u.act.kind == ActKind::polynomial) exact = false;
            }
            std::vector<ExactScalar> xs(x.begin(), x.end());
            long bits = eval_bits;
            if (!exact && bits == 0) bits = std::max(128L, net.meta.value("eval_bits", 128L));
            auto out = eval_outputs(net, xs, exact ? EvalMode::exact() : EvalMode::big(bits));
            for (auto& v : out) std::cout << v.str() << "  (" << v.to_double() << ")\n";
            return 0;
        }
        if (*sweep) {
            SweepConfig cfg = SweepConfig::from_json(nlohmann::json::parse(read_file(sweep_config)));
            RateTable t = sweep_rates(cfg);
            std::string csv = to_csv(t);
            if (sweep_out.empty()) std::cout << csv;
            else write_file(sweep_out, csv);
            for (auto& fl : t.failures) std::cerr << "failed " << fl.budget << " fn=" << fl.fn << ": " << fl.message << "\n";
            if (!sweep_report.empty()) emit_report(t, fit_table(t, FitModel::power), sweep_report);
            return 0;
        }
        if (*fit) {
            RateTable t = parse_csv(read_file(table_path));
            for (auto& f : fit_table(t, parse_fit_model(model))) std::cout << summary_line(f) << "\n";
            return 0;
        }
        if (*report) {
            RateTable t = parse_csv(read_file(report_table));
            emit_report(t, fit_table(t, parse_fit_model(report_model)), report_dir);
            return 0;
        }
        if (*attach) {
            Network net = load_network(skel_path);
            ExactScalar seed = scalar_from_json(nlohmann::json::parse(read_file(seed_path)));
            std::string text = dump_network(attach_seed(net, seed));
            if (attach_out.empty()) std::cout << text << "\n";
            else write_file(attach_out, text);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
