#pragma once

#include <gmpxx.h>

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>

namespace memdp {

// Exact rational arithmetic. mpq_class keeps values canonical: lowest terms,
// positive denominator.
using Rat = mpq_class;
using Int = mpz_class;

inline Rat rat(long num, long den = 1) {
    Rat q(num, den);
    q.canonicalize();
    return q;
}

inline bool is_zero(const Rat& q) { return sgn(q) == 0; }
inline bool is_one(const Rat& q) { return q == 1; }

// Accepts "p/q", integer, or decimal literals ("0.25"); all converted exactly.
// Scientific notation and anything else is rejected.
inline std::optional<Rat> rat_parse(const std::string& text) {
    if (text.empty()) return std::nullopt;
    auto digits = [](const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    };
    std::string body = text;
    bool neg = false;
    if (body[0] == '-' || body[0] == '+') {
        neg = body[0] == '-';
        body = body.substr(1);
    }
    auto dec = [](const std::string& s) { return Int(s, 10); };
    auto slash = body.find('/');
    Rat out;
    if (slash != std::string::npos) {
        std::string n = body.substr(0, slash), d = body.substr(slash + 1);
        if (!digits(n) || !digits(d)) return std::nullopt;
        Int den = dec(d);
        if (den == 0) return std::nullopt;
        out = Rat(dec(n), den);
        out.canonicalize();
    } else {
        auto dot = body.find('.');
        if (dot == std::string::npos) {
            if (!digits(body)) return std::nullopt;
            out = Rat(dec(body));
        } else {
            std::string ip = body.substr(0, dot), fp = body.substr(dot + 1);
            if (ip.empty()) ip = "0";
            if (!digits(ip) || fp.empty() || !digits(fp)) return std::nullopt;
            Int den = 1;
            for (size_t i = 0; i < fp.size(); ++i) den *= 10;
            out = Rat(dec(ip) * den + dec(fp), den);
            out.canonicalize();
        }
    }
    if (neg) out = -out;
    return out;
}

inline Rat rat_parse_or_throw(const std::string& text) {
    auto q = rat_parse(text);
    if (!q) throw std::invalid_argument("not a rational literal: " + text);
    return *q;
}

// "p/q", or plain "p" for integers.
inline std::string rat_str(const Rat& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline Int int_pow(Int base, unsigned long exp) {
    Int out;
    mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exp);
    return out;
}

inline Rat rat_pow(const Rat& base, unsigned long exp) {
    Rat out;
    mpq_class b = base;
    mpz_pow_ui(out.get_num_mpz_t(), b.get_num_mpz_t(), exp);
    mpz_pow_ui(out.get_den_mpz_t(), b.get_den_mpz_t(), exp);
    out.canonicalize();
    return out;
}

// Smallest integer >= q.
inline Int rat_ceil(const Rat& q) {
    Int out;
    mpz_cdiv_q(out.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return out;
}

inline Int rat_floor(const Rat& q) {
    Int out;
    mpz_fdiv_q(out.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return out;
}

}  // namespace memdp
