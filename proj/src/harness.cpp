#include "hnet/harness.hpp"

#include "hnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hnet {

namespace {

long meta_long(const Network& net, const char* key, long fallback) {
    auto it = net.meta.find(key);
    if (it == net.meta.end() || !it->is_number()) return fallback;
    return it->get<long>();
}

// odd multiples of 1/(8M): clear of the patch boundaries and of the half-patch filter switches
bool guarded(const Network& net) { return net.meta.contains("guard_M"); }

bool in_guard_zone(const Network& net, const Point& x) {
    long M = net.meta["guard_M"].get<long>();
    Rational delta = parse_rational(net.meta["guard_delta"].get<std::string>());
    for (auto& xi : x) {
        Rational t = xi * M;
        Rational frac = t - floor_q(t);
        // boundaries of the M-patches and the midpoints where the filters switch
        for (Rational b : {Rational(0), frac_q(1, 2), Rational(1)})
            if (abs_q(frac - b) < delta * M) return true;
    }
    return false;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

ErrorEstimate measure_error(const Network& net, const FunctionOracle& f, const GridSpec& g) {
    int d = net.input_dim;
    if (d != f.d()) throw std::invalid_argument("net and function dimensions differ");
    bool periodic = has_activation(net, ActKind::periodic);
    if (g.exact && periodic) {
        for (auto& u : net.units)
            if (u.act.kind == ActKind::periodic && !u.act.sigma->rational_exact())
                throw std::invalid_argument("periodic nets cannot be evaluated in rational mode");
    }
    long M = meta_long(net, "M", 16);
    long res = g.resolution > 0 ? g.resolution : std::max(64L, 4 * M);
    long bits = g.bits > 0 ? g.bits : std::max(128L, meta_long(net, "eval_bits", 128));
    Evaluator ev(net, g.exact ? EvalMode::exact() : EvalMode::big(bits));

    ErrorEstimate est;
    est.resolution = res;
    auto visit = [&](const Point& x) {
        Rational y;
        if (g.exact) {
            y = ev.run_rational(x)[0];
        } else {
            std::vector<BigFloat> xf;
            for (auto& v : x) xf.emplace_back(v, bits);
            y = ev.run_big(xf)[0].to_rational();
        }
        Rational e = abs_q(y - f.evaluate(x));
        if (est.points == 0 || e > est.sup) {
            est.sup = e;
            est.argmax = x;
        }
        ++est.points;
    };

    std::vector<Rational> axis;
    if (guarded(net)) {
        long GM = net.meta["guard_M"].get<long>();
        for (long m = 0; m < GM; ++m)
            for (long t : {1L, 3L, 5L, 7L}) axis.push_back(frac_q(8 * m + t, 8 * GM));
        est.resolution = 8 * GM;
    } else {
        for (long j = 0; j <= res; ++j) axis.push_back(frac_q(j, res));
    }
    std::vector<size_t> idx(d, 0);
    while (true) {
        Point x;
        for (int i = 0; i < d; ++i) x.push_back(axis[idx[i]]);
        visit(x);
        int i = d - 1;
        while (i >= 0 && ++idx[i] == axis.size()) idx[i--] = 0;
        if (i < 0) break;
    }
    std::mt19937_64 rng(g.seed);
    const long den = 1L << 30;
    std::uniform_int_distribution<long> u(0, den);
    for (long k = 0; k < g.random_points; ++k) {
        Point x;
        for (int i = 0; i < d; ++i) x.push_back(frac_q(u(rng), den));
        if (guarded(net) && in_guard_zone(net, x)) continue;
        visit(x);
        ++est.random_points;
    }
    est.sup_d = est.sup.get_d();
    return est;
}

std::string Budget::label() const {
    std::ostringstream o;
    if (U > 0) o << "U=" << U;
    else if (N > 0) o << "N=" << N << ",M=" << M;
    else if (M > 0) o << "M=" << M;
    else if (sgn(eps) > 0) o << "eps=" << rational_str(eps);
    else o << "W=" << W;
    return o.str();
}

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
    SweepConfig c;
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    auto rat = [&](const char* k, Rational& dst) {
        if (!j.contains(k)) return;
        dst = j[k].is_string() ? parse_rational(j[k].get<std::string>()) : rational_from_double(j[k].get<double>());
    };
    if (j.contains("d")) c.d = j["d"].get<int>();
    rat("r", c.r);
    rat("p", c.p);
    rat("c_M", c.c_M);
    if (j.contains("combiner")) c.combiner = j["combiner"].get<std::string>() == "weighted" ? Combiner::weighted : Combiner::max;
    if (j.contains("sigma")) c.sigma = j["sigma"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<unsigned long>();
    if (j.contains("fns")) c.fns = j["fns"].get<std::vector<std::string>>();
    if (j.contains("budgets")) {
        for (auto& b : j["budgets"]) {
            Budget bu;
            if (b.is_number()) {
                bu.W = b.get<long>();
            } else {
                if (b.contains("W")) bu.W = b["W"].get<long>();
                if (b.contains("N")) bu.N = b["N"].get<long>();
                if (b.contains("M")) bu.M = b["M"].get<long>();
                if (b.contains("U")) bu.U = b["U"].get<int>();
                if (b.contains("eps")) bu.eps = parse_rational(b["eps"].get<std::string>());
            }
            c.budgets.push_back(bu);
        }
    }
    if (j.contains("grid")) {
        auto& g = j["grid"];
        if (g.contains("resolution")) c.grid.resolution = g["resolution"].get<long>();
        if (g.contains("random_points")) c.grid.random_points = g["random_points"].get<long>();
        if (g.contains("seed")) c.grid.seed = g["seed"].get<unsigned long>();
        if (g.contains("bits")) c.grid.bits = g["bits"].get<long>();
        if (g.contains("exact")) c.grid.exact = g["exact"].get<bool>();
    }
    return c;
}

nlohmann::json SweepConfig::to_json() const {
    nlohmann::json j;
    j["variant"] = variant_name(variant);
    j["d"] = d;
    j["r"] = rational_str(r);
    j["p"] = rational_str(p);
    j["c_M"] = rational_str(c_M);
    j["combiner"] = combiner == Combiner::max ? "max" : "weighted";
    j["sigma"] = sigma;
    j["seed"] = seed;
    j["fns"] = fns;
    nlohmann::json bs = nlohmann::json::array();
    for (auto& b : budgets) {
        nlohmann::json e = nlohmann::json::object();
        if (b.W) e["W"] = b.W;
        if (b.N) e["N"] = b.N;
        if (b.M) e["M"] = b.M;
        if (b.U) e["U"] = b.U;
        if (sgn(b.eps) > 0) e["eps"] = rational_str(b.eps);
        bs.push_back(e);
    }
    j["budgets"] = bs;
    j["grid"] = {{"resolution", grid.resolution}, {"random_points", grid.random_points}, {"seed", grid.seed},
                 {"bits", grid.bits}, {"exact", grid.exact}};
    return j;
}

RateTable sweep_rates(const SweepConfig& cfg) {
    if (cfg.budgets.size() < 4) throw std::invalid_argument("a sweep needs at least 4 budget points");
    std::vector<FunctionOracle> fns;
    if (cfg.fns.empty()) fns = corpus(cfg.d, cfg.r, cfg.seed);
    else
        for (auto& id : cfg.fns) fns.push_back(corpus_member(cfg.d, cfg.r, cfg.seed, id));
    RateTable t;
    for (auto& b : cfg.budgets) {
        for (auto& f : fns) {
            try {
                BuildRequest req;
                req.variant = cfg.variant;
                req.p = cfg.p;
                req.eps = b.eps;
                req.W = b.W;
                req.N = b.N;
                req.M = b.M;
                req.U = b.U;
                req.c_M = cfg.c_M;
                req.combiner = cfg.combiner;
                req.sigma = cfg.sigma;
                Network net = build(f, req);
                ErrorEstimate e = measure_error(net, f, cfg.grid);
                Counts c = count_params(net);
                RateRow row;
                row.variant = variant_name(cfg.variant);
                row.d = cfg.d;
                row.r = cfg.r;
                row.p_target = cfg.variant == Variant::fixed_width ? Rational(2 * cfg.r / cfg.d)
                               : cfg.variant == Variant::shallow  ? Rational(cfg.r / cfg.d)
                               : cfg.variant == Variant::fourier  ? Rational(0)
                                                                  : cfg.p;
                row.W = c.W;
                row.L = c.L;
                row.width = c.width;
                row.sup_error = e.sup_d;
                row.enc_weights = meta_long(net, "enc_weights", 0);
                row.bits_per_enc = net.meta.contains("bits_per_enc") ? net.meta["bits_per_enc"].get<double>() : 0;
                row.fn = f.id();
                row.seed = cfg.seed;
                t.rows.push_back(row);
            } catch (const std::exception& ex) {
                t.failures.push_back({b.label(), f.id(), ex.what()});
            }
        }
    }
    return t;
}

FitModel parse_fit_model(const std::string& s) {
    if (s == "power") return FitModel::power;
    if (s == "powerlog") return FitModel::powerlog;
    if (s == "sqrtexp") return FitModel::sqrtexp;
    throw std::invalid_argument("unknown fit model " + s);
}

std::string fit_model_name(FitModel m) {
    switch (m) {
        case FitModel::power: return "power";
        case FitModel::powerlog: return "powerlog";
        case FitModel::sqrtexp: return "sqrtexp";
    }
    return "?";
}

RateFit fit_series(const std::vector<double>& x, const std::vector<double>& y, FitModel model) {
    RateFit fit;
    fit.model = model;
    std::vector<double> X, Y;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0)) {
            ++fit.excluded;
            continue;
        }
        double lx = std::log(x[i]);
        switch (model) {
            case FitModel::power:
                X.push_back(lx);
                Y.push_back(std::log(y[i]));
                break;
            case FitModel::powerlog:
                X.push_back(lx);
                Y.push_back(std::log(y[i]) - std::log(lx));
                break;
            case FitModel::sqrtexp:
                X.push_back(std::sqrt(x[i]));
                Y.push_back(std::log(y[i]));
                break;
        }
    }
    size_t n = X.size();
    fit.points = static_cast<int>(n);
    if (n < 2) throw std::invalid_argument("fit needs at least two nonzero rows");
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += X[i];
        my += Y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
        syy += (Y[i] - my) * (Y[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("fit needs distinct abscissae");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (size_t i = 0; i < n; ++i) {
        double e = Y[i] - fit.intercept - fit.slope * X[i];
        sse += e * e;
    }
    fit.r2 = syy > 0 ? 1 - sse / syy : 1;
    fit.stderr_slope = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0;
    return fit;
}

RateFit fit_rate(const std::vector<RateRow>& rows, FitModel model) {
    if (rows.size() < 4) throw std::invalid_argument("fit needs at least 4 rows");
    std::vector<double> x, y;
    for (auto& r : rows) {
        if (r.variant != rows[0].variant || r.d != rows[0].d || r.r != rows[0].r || r.fn != rows[0].fn)
            throw std::invalid_argument("fit rows must share variant, d, r and fn");
        x.push_back(static_cast<double>(r.W));
        y.push_back(r.sup_error);
    }
    RateFit fit = fit_series(x, y, model);
    fit.variant = rows[0].variant;
    fit.d = rows[0].d;
    fit.r = rows[0].r;
    fit.p_target = rows[0].p_target;
    fit.fn = rows[0].fn;
    return fit;
}

std::vector<RateFit> fit_table(const RateTable& t, FitModel model) {
    std::map<std::tuple<std::string, int, std::string, std::string>, std::vector<RateRow>> groups;
    for (auto& r : t.rows) groups[{r.variant, r.d, rational_str(r.r), r.fn}].push_back(r);
    std::vector<RateFit> out;
    for (auto& [k, rows] : groups) {
        int nonzero = 0;
        for (auto& r : rows) nonzero += r.sup_error > 0;
        if (rows.size() < 4 || nonzero < 2) continue;
        out.push_back(fit_rate(rows, std::get<0>(k) == "fourier" ? FitModel::sqrtexp : model));
    }
    return out;
}

std::string csv_header() { return "variant,d,r,p_target,W,L,width,sup_error,enc_weights,bits_per_enc,fn,seed"; }

std::string to_csv(const RateTable& t) {
    std::ostringstream o;
    o << csv_header() << "\n";
    for (auto& r : t.rows) {
        o << r.variant << "," << r.d << "," << rational_str(r.r) << "," << rational_str(r.p_target) << "," << r.W << ","
          << r.L << "," << r.width << "," << fmt_double(r.sup_error) << "," << r.enc_weights << ","
          << fmt_double(r.bits_per_enc) << "," << r.fn << "," << r.seed << "\n";
    }
    return o.str();
}

RateTable parse_csv(const std::string& text) {
    RateTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != csv_header()) throw std::invalid_argument("unexpected CSV header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c = split(line, ',');
        if (c.size() != 12) throw std::invalid_argument("malformed CSV row: " + line);
        RateRow r;
        r.variant = c[0];
        r.d = std::stoi(c[1]);
        r.r = parse_rational(c[2]);
        r.p_target = parse_rational(c[3]);
        r.W = std::stol(c[4]);
        r.L = std::stol(c[5]);
        r.width = std::stol(c[6]);
        r.sup_error = std::strtod(c[7].c_str(), nullptr);
        r.enc_weights = std::stol(c[8]);
        r.bits_per_enc = std::strtod(c[9].c_str(), nullptr);
        r.fn = c[10];
        r.seed = std::stoul(c[11]);
        t.rows.push_back(r);
    }
    return t;
}

std::string summary_line(const RateFit& fit) {
    std::ostringstream o;
    o << fit.variant << " d=" << fit.d << " r=" << rational_str(fit.r);
    if (!fit.fn.empty()) o << " fn=" << fit.fn;
    double theory = fit.p_target.get_d();
    char tbuf[32];
    if (theory == std::floor(theory)) std::snprintf(tbuf, sizeof tbuf, "%.1f", theory);
    else std::snprintf(tbuf, sizeof tbuf, "%g", theory);
    if (fit.model == FitModel::sqrtexp) {
        o << ": c = " << fmt_short(-fit.slope) << " (log(1/error) vs sqrt W, R^2 = " << fmt_short(fit.r2) << ")";
    } else {
        o << ": p̂ = " << fmt_short(-fit.slope) << " vs theory " << tbuf;
        if (fit.model == FitModel::powerlog) o << " (log factor)";
        o << " (R^2 = " << fmt_short(fit.r2) << ", " << fit.points << " points)";
    }
    return o.str();
}

namespace {

std::string svg_plot(const std::vector<RateRow>& rows, const std::vector<RateFit>& fits, const std::string& title) {
    const double Wd = 640, Hd = 440, pad = 60;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (auto& r : rows) {
        if (!(r.sup_error > 0)) continue;
        double x = std::log10(double(r.W)), y = std::log10(r.sup_error);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Wd << "\" height=\"" << Hd << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << pad << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
    if (x0 > x1) {
        o << "</svg>\n";
        return o.str();
    }
    if (x1 - x0 < 1e-9) x1 = x0 + 1;
    if (y1 - y0 < 1e-9) y1 = y0 + 1;
    auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (Wd - 2 * pad); };
    auto py = [&](double y) { return Hd - pad - (y - y0) / (y1 - y0) * (Hd - 2 * pad); };
    o << "<line x1=\"" << pad << "\" y1=\"" << Hd - pad << "\" x2=\"" << Wd - pad << "\" y2=\"" << Hd - pad
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << Hd - pad
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << Wd / 2 << "\" y=\"" << Hd - 20 << "\" font-size=\"12\">log10 W</text>\n";
    o << "<text x=\"8\" y=\"" << Hd / 2 << "\" font-size=\"12\">log10 err</text>\n";
    o << "<text x=\"" << pad << "\" y=\"" << Hd - pad + 16 << "\" font-size=\"10\">" << fmt_short(x0) << "</text>\n";
    o << "<text x=\"" << Wd - pad << "\" y=\"" << Hd - pad + 16 << "\" font-size=\"10\">" << fmt_short(x1) << "</text>\n";
    o << "<text x=\"4\" y=\"" << Hd - pad << "\" font-size=\"10\">" << fmt_short(y0) << "</text>\n";
    o << "<text x=\"4\" y=\"" << pad << "\" font-size=\"10\">" << fmt_short(y1) << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    std::map<std::string, int> color_of;
    for (auto& r : rows) color_of.emplace(r.fn, static_cast<int>(color_of.size()));
    for (auto& r : rows) {
        if (!(r.sup_error > 0)) continue;
        o << "<circle cx=\"" << px(std::log10(double(r.W))) << "\" cy=\"" << py(std::log10(r.sup_error))
          << "\" r=\"4\" fill=\"" << colors[color_of[r.fn] % 7] << "\"/>\n";
    }
    int legend = 0;
    for (auto& [fn, c] : color_of) {
        o << "<text x=\"" << Wd - pad - 80 << "\" y=\"" << pad + 14 * legend++ << "\" font-size=\"11\" fill=\""
          << colors[c % 7] << "\">" << fn << "</text>\n";
    }
    for (auto& f : fits) {
        if (f.model == FitModel::sqrtexp || !color_of.count(f.fn)) continue;
        double ln10 = std::log(10.0);
        auto fy = [&](double lx) {
            double v = f.intercept + f.slope * lx * ln10;
            if (f.model == FitModel::powerlog) v += std::log(lx * ln10);
            return v / ln10;
        };
        o << "<line x1=\"" << px(x0) << "\" y1=\"" << py(fy(x0)) << "\" x2=\"" << px(x1) << "\" y2=\"" << py(fy(x1))
          << "\" stroke=\"" << colors[color_of[f.fn] % 7] << "\" stroke-dasharray=\"4 3\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace

void emit_report(const RateTable& t, const std::vector<RateFit>& fits, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        out << body;
        if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    };
    write("table.csv", to_csv(t));
    std::ostringstream s;
    for (auto& f : fits) s << summary_line(f) << "\n";
    for (auto& fl : t.failures) s << "failed " << fl.budget << " fn=" << fl.fn << ": " << fl.message << "\n";
    write("summary.txt", s.str());
    std::map<std::tuple<std::string, int, std::string>, std::vector<RateRow>> groups;
    for (auto& r : t.rows) groups[{r.variant, r.d, rational_str(r.r)}].push_back(r);
    for (auto& [k, rows] : groups) {
        auto& [variant, d, r] = k;
        std::vector<RateFit> mine;
        for (auto& f : fits)
            if (f.variant == variant && f.d == d && rational_str(f.r) == r) mine.push_back(f);
        std::string rs = r;
        std::replace(rs.begin(), rs.end(), '/', '_');
        std::string title = variant + " d=" + std::to_string(d) + " r=" + r;
        write(variant + "_d" + std::to_string(d) + "_r" + rs + ".svg", svg_plot(rows, mine, title));
    }
}

}  // namespace hnet
