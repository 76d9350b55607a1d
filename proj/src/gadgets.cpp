#include "hnet/gadgets.hpp"

#include <stdexcept>

namespace hnet {

void DigitStream::validate() const {
    if (base < 2) throw std::invalid_argument("base must be at least 2");
    if (digits.empty()) throw std::invalid_argument("digit stream is empty");
    for (int d : digits)
        if (d < 0 || d >= base) throw std::invalid_argument("digit out of range");
}

Affine threshold_gadget(NetBuilder& b, const Affine& w, const Rational& delta, const Rational& theta) {
    if (sgn(delta) <= 0) throw std::invalid_argument("threshold ramp width must be positive");
    Affine lo = b.relu(w - theta);
    Affine hi = b.relu(w - theta - delta);
    return (lo - hi) * (1 / delta);
}

Network build_threshold(const Rational& delta, const Rational& theta) {
    NetBuilder b(1);
    Affine out = threshold_gadget(b, b.input(0), delta, theta);
    return b.finish({out}, {{"variant", "threshold"}, {"delta", rational_str(delta)}, {"theta", rational_str(theta)}});
}

int square_levels(const Rational& eps) {
    if (sgn(eps) <= 0) throw std::invalid_argument("accuracy must be positive");
    int n = 0;
    while (rpow(Rational(2), -2 * n - 2) > eps) ++n;
    return n + 1;
}

Affine square_gadget(NetBuilder& b, const Affine& x, int levels) {
    Affine f = x;
    Affine g = x;
    Rational scale(1);
    for (int s = 1; s <= levels; ++s) {
        Affine r1 = b.relu(g);
        Affine r2 = b.relu(g - Rational(1, 2));
        g = r1 * Rational(2) - r2 * Rational(4);
        scale /= 4;
        f -= g * scale;
    }
    return f;
}

Network build_square(const Rational& eps) {
    if (sgn(eps) <= 0 || eps >= 1) throw std::invalid_argument("square accuracy must lie in (0,1)");
    NetBuilder b(1);
    int n = square_levels(eps);
    Affine out = square_gadget(b, b.input(0), n);
    return b.finish({out}, {{"variant", "square"}, {"eps", rational_str(eps)}, {"levels", n}});
}

int product_levels(const Rational& eps, const Rational& bound) { return square_levels(eps / (2 * bound * bound)); }

int product_depth(int levels) { return levels + 1; }

Affine product_gadget(NetBuilder& b, const Affine& x, const Affine& y, const Rational& bound, int levels) {
    if (sgn(bound) <= 0) throw std::invalid_argument("product bound must be positive");
    Affine sum = x + y, diff = x - y;
    Rational inv = 1 / (2 * bound);
    Affine a = (b.relu(sum) + b.relu(-sum)) * inv;
    Affine c = (b.relu(diff) + b.relu(-diff)) * inv;
    return (square_gadget(b, a, levels) - square_gadget(b, c, levels)) * (bound * bound);
}

Network build_product(const Rational& eps, const Rational& bound) {
    NetBuilder b(2);
    int n = product_levels(eps, bound);
    Affine out = product_gadget(b, b.input(0), b.input(1), bound, n);
    return b.finish({out}, {{"variant", "product"}, {"eps", rational_str(eps)}, {"bound", rational_str(bound)}, {"levels", n}});
}

Rational encode_digits(const DigitStream& s) {
    s.validate();
    Rational w(0);
    Rational p(1);
    for (int d : s.digits) {
        p /= s.base;
        w += p * d;
    }
    p /= s.base;
    w += p / 2;
    return w;
}

std::vector<int> expand_digits(const Rational& w, int base, int T) {
    std::vector<int> out;
    Rational c = w;
    for (int t = 0; t < T; ++t) {
        c *= base;
        Rational f = floor_q(c);
        out.push_back(static_cast<int>(f.get_num().get_si()));
        c -= f;
    }
    return out;
}

Rational guard_delta(int base, int T) { return rpow(Rational(base), -T) / 4; }

Rational default_delta(int base, int T) { return rpow(Rational(base), -T) / 8; }

Extractor extractor_gadget(NetBuilder& b, const Affine& w, int base, int T, const Rational& delta) {
    if (base < 2 || T < 1) throw std::invalid_argument("extractor needs base >= 2 and T >= 1");
    if (sgn(delta) <= 0 || delta >= guard_delta(base, T)) throw std::invalid_argument("ramp width violates the guard margin");
    Extractor ex;
    Affine c = b.materialize(w);
    ex.carries.push_back(c);
    for (int t = 0; t < T; ++t) {
        Affine v = c * Rational(base);
        Affine digit;
        for (int k = 1; k < base; ++k) digit += threshold_gadget(b, v, delta, Rational(k) - delta);
        ex.digits.push_back(digit);
        if (t + 1 < T) {
            c = b.materialize(v - digit, true);
            ex.carries.push_back(c);
        }
    }
    return ex;
}

Network build_bit_extractor(int base, int T, const Rational& delta) {
    NetBuilder b(1);
    Extractor ex = extractor_gadget(b, b.input(0), base, T, delta);
    return b.finish(ex.digits, {{"variant", "bit_extractor"}, {"base", base}, {"T", T}, {"delta", rational_str(delta)}});
}

Affine gate_gadget(NetBuilder& b, const Affine& bit, const Affine& y, const Rational& bound) {
    Affine off = (Rational(1) - bit) * bound;
    return b.relu(y - off) - b.relu(-y - off);
}

Affine clamp_gadget(NetBuilder& b, const Affine& y, const Rational& c) {
    return b.relu(y + c) - b.relu(y - c) - c;
}

Affine max_gadget(NetBuilder& b, std::vector<Affine> values) {
    if (values.empty()) throw std::invalid_argument("max of an empty list");
    while (values.size() > 1) {
        std::vector<Affine> next;
        for (size_t i = 0; i + 1 < values.size(); i += 2) {
            Affine a = b.materialize(values[i]);
            next.push_back(a + b.relu(values[i + 1] - a));
        }
        if (values.size() % 2) next.push_back(values.back());
        values = std::move(next);
    }
    return values[0];
}

}  // namespace hnet
