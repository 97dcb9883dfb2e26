#include "schoolopt/rational.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace schoolopt {

namespace {

std::int64_t parse_digits(std::string_view s, std::string_view whole) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(whole) + "'");
    }
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    const std::string_view s = trim(text);
    if (s.empty()) throw std::invalid_argument("empty number");

    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        const auto num = parse_digits(trim(s.substr(0, slash)), s);
        const auto den = parse_digits(trim(s.substr(slash + 1)), s);
        if (den == 0) throw std::invalid_argument("zero denominator: '" + std::string(s) + "'");
        return Rational(num, den);
    }

    bool negative = false;
    std::string_view body = s;
    if (body.front() == '-' || body.front() == '+') {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    if (body.empty()) throw std::invalid_argument("not a number: '" + std::string(s) + "'");

    const auto dot = body.find('.');
    std::string_view int_part = body.substr(0, dot);
    std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
    if (int_part.empty() && frac_part.empty()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    if (frac_part.size() > 15) frac_part = frac_part.substr(0, 15);

    std::int64_t whole = int_part.empty() ? 0 : parse_digits(int_part, s);
    std::int64_t frac = frac_part.empty() ? 0 : parse_digits(frac_part, s);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;

    Rational r(whole * scale + frac, scale);
    return negative ? -r : r;
}

Rational rational_from_double(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("non-finite number");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    std::string_view sv(buf);
    if (sv.find('e') != std::string_view::npos || sv.find('E') != std::string_view::npos) {
        std::snprintf(buf, sizeof buf, "%.12f", value);
    }
    return parse_rational(buf);
}

std::string to_string(const Rational& r) {
    std::int64_t den = r.denominator();
    int twos = 0;
    int fives = 0;
    while (den % 2 == 0) { den /= 2; ++twos; }
    while (den % 5 == 0) { den /= 5; ++fives; }
    if (den != 1) {
        return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
    }
    const int places = std::max(twos, fives);
    if (places == 0) return std::to_string(r.numerator());
    return to_fixed(r, places);
}

std::string to_fixed(const Rational& r, int decimals) {
    std::int64_t scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const bool negative = r < 0;
    const Rational a = negative ? -r : r;
    // round half away from zero
    const Rational scaled = a * scale + Rational(1, 2);
    const std::int64_t n = scaled.numerator() / scaled.denominator();
    std::string out = std::to_string(n / scale);
    if (decimals > 0) {
        std::string frac = std::to_string(n % scale);
        out += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
    }
    if (negative && n != 0) out.insert(out.begin(), '-');
    return out;
}

double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::int64_t floor_int(const Rational& r) {
    const std::int64_t q = r.numerator() / r.denominator();
    return (r.numerator() % r.denominator() != 0 && r.numerator() < 0) ? q - 1 : q;
}

}  // namespace schoolopt
