#include "hnet/sigma.hpp"

#include <cmath>
#include <stdexcept>

namespace hnet {

namespace {

Rational pi_bound(mpfr_rnd_t rnd) {
    BigFloat p(320);
    mpfr_const_pi(p.get(), rnd);
    return p.to_rational();
}

Rational json_q(const nlohmann::json& j) { return parse_rational(j.get<std::string>()); }

std::vector<std::pair<Rational, Rational>> triangle_table(const Rational& T) {
    return {{Rational(0), Rational(0)}, {T / 4, Rational(1)}, {T * 3 / 4, Rational(-1)}};
}

}  // namespace

const Rational& pi_upper() {
    static const Rational v = pi_bound(MPFR_RNDU);
    return v;
}

const Rational& pi_lower() {
    static const Rational v = pi_bound(MPFR_RNDD);
    return v;
}

SigmaSpec SigmaSpec::sine(const Rational& period) {
    if (sgn(period) <= 0) throw std::invalid_argument("period must be positive");
    SigmaSpec s;
    s.kind = Kind::sine;
    s.period = period;
    s.lipschitz = 2 * pi_upper() / period;
    return s;
}

SigmaSpec SigmaSpec::triangle(const Rational& period) {
    if (sgn(period) <= 0) throw std::invalid_argument("period must be positive");
    SigmaSpec s;
    s.kind = Kind::triangle;
    s.period = period;
    s.lipschitz = 4 / period;
    s.table = triangle_table(period);
    return s;
}

SigmaSpec SigmaSpec::custom(const Rational& period, std::vector<std::pair<Rational, Rational>> pts) {
    if (sgn(period) <= 0) throw std::invalid_argument("period must be positive");
    if (pts.size() < 2) throw std::invalid_argument("table needs at least two points");
    for (size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].first < 0 || pts[i].first >= period) throw std::invalid_argument("table x outside [0, T)");
        if (i && pts[i].first <= pts[i - 1].first) throw std::invalid_argument("table x not ascending");
    }
    SigmaSpec s;
    s.kind = Kind::table;
    s.period = period;
    s.table = std::move(pts);
    Rational lip(0);
    for (size_t i = 0; i < s.table.size(); ++i) {
        const auto& a = s.table[i];
        auto b = s.table[(i + 1) % s.table.size()];
        if (i + 1 == s.table.size()) b.first += period;
        Rational slope = abs_q((b.second - a.second) / (b.first - a.first));
        if (slope > lip) lip = slope;
    }
    s.lipschitz = lip;
    return s;
}

Rational SigmaSpec::eval(const Rational& x) const {
    if (kind == Kind::sine) throw std::domain_error("sine activation is not rational-exact");
    Rational t = x - period * floor_q(x / period);
    size_t n = table.size();
    // segment i spans [x_i, x_{i+1}); before x_0 wraps to the last segment
    for (size_t i = 0; i < n; ++i) {
        Rational x0 = table[i].first, y0 = table[i].second;
        Rational x1 = i + 1 < n ? table[i + 1].first : table[0].first + period;
        Rational y1 = i + 1 < n ? table[i + 1].second : table[0].second;
        if (t >= x0 && t < x1) return y0 + (t - x0) * (y1 - y0) / (x1 - x0);
    }
    // t < x_0: segment from last point shifted back one period
    Rational x0 = table[n - 1].first - period, y0 = table[n - 1].second;
    Rational x1 = table[0].first, y1 = table[0].second;
    return y0 + (t - x0) * (y1 - y0) / (x1 - x0);
}

void SigmaSpec::eval(BigFloat& out, const BigFloat& x) const {
    long bits = out.bits();
    BigFloat T(period, bits + 64);
    BigFloat t(bits + 64);
    // t = x / T - floor(x / T), a phase in [0, 1)
    mpfr_div(t.get(), x.get(), T.get(), MPFR_RNDN);
    BigFloat fl(bits + 64);
    mpfr_floor(fl.get(), t.get());
    mpfr_sub(t.get(), t.get(), fl.get(), MPFR_RNDN);
    if (kind == Kind::sine) {
        BigFloat pi(bits + 64);
        mpfr_const_pi(pi.get(), MPFR_RNDN);
        mpfr_mul(t.get(), t.get(), pi.get(), MPFR_RNDN);
        mpfr_mul_ui(t.get(), t.get(), 2, MPFR_RNDN);
        mpfr_sin(out.get(), t.get(), MPFR_RNDN);
        return;
    }
    mpfr_mul(t.get(), t.get(), T.get(), MPFR_RNDN);
    size_t n = table.size();
    BigFloat a(bits + 64), b(bits + 64);
    auto seg = [&](const Rational& x0, const Rational& y0, const Rational& x1, const Rational& y1) {
        BigFloat slope((y1 - y0) / (x1 - x0), bits + 64);
        a.set(x0);
        mpfr_sub(b.get(), t.get(), a.get(), MPFR_RNDN);
        mpfr_mul(b.get(), b.get(), slope.get(), MPFR_RNDN);
        a.set(y0);
        mpfr_add(out.get(), b.get(), a.get(), MPFR_RNDN);
    };
    for (size_t i = 0; i < n; ++i) {
        Rational x1 = i + 1 < n ? table[i + 1].first : table[0].first + period;
        a.set(x1);
        if (mpfr_less_p(t.get(), a.get())) {
            a.set(table[i].first);
            if (mpfr_greaterequal_p(t.get(), a.get())) {
                Rational y1 = i + 1 < n ? table[i + 1].second : table[0].second;
                seg(table[i].first, table[i].second, x1, y1);
                return;
            }
        }
    }
    seg(table[n - 1].first - period, table[n - 1].second, table[0].first, table[0].second);
}

double SigmaSpec::eval(double x) const {
    double T = period.get_d();
    double t = x / T - std::floor(x / T);
    if (kind == Kind::sine) return std::sin(2 * M_PI * t);
    t *= T;
    size_t n = table.size();
    for (size_t i = 0; i < n; ++i) {
        double x0 = table[i].first.get_d(), y0 = table[i].second.get_d();
        double x1 = i + 1 < n ? table[i + 1].first.get_d() : table[0].first.get_d() + T;
        double y1 = i + 1 < n ? table[i + 1].second.get_d() : table[0].second.get_d();
        if (t >= x0 && t < x1) return y0 + (t - x0) * (y1 - y0) / (x1 - x0);
    }
    double x0 = table[n - 1].first.get_d() - T, y0 = table[n - 1].second.get_d();
    double x1 = table[0].first.get_d(), y1 = table[0].second.get_d();
    return y0 + (t - x0) * (y1 - y0) / (x1 - x0);
}

nlohmann::json SigmaSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = kind == Kind::sine ? "sine" : kind == Kind::triangle ? "triangle" : "table";
    j["period"] = rational_str(period);
    if (kind == Kind::table) {
        auto arr = nlohmann::json::array();
        for (auto& [x, y] : table) arr.push_back({rational_str(x), rational_str(y)});
        j["table"] = arr;
    }
    return j;
}

SigmaSpec SigmaSpec::from_json(const nlohmann::json& j) {
    std::string k = j.at("kind");
    Rational T = json_q(j.at("period"));
    if (k == "sine") return sine(T);
    if (k == "triangle") return triangle(T);
    if (k == "table") {
        std::vector<std::pair<Rational, Rational>> pts;
        for (auto& p : j.at("table")) pts.emplace_back(json_q(p[0]), json_q(p[1]));
        return custom(T, std::move(pts));
    }
    throw std::invalid_argument("unknown sigma kind: " + k);
}

bool SigmaSpec::operator==(const SigmaSpec& o) const {
    return kind == o.kind && period == o.period && table == o.table;
}

}  // namespace hnet
