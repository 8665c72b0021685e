#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "map.hpp"
#include "rational.hpp"

namespace poledyn {

/// Exact decimal string when the denominator is 2^a 5^b (terminating
/// expansion), otherwise the exact "p/q" form.
inline std::string map_number_string(const Rational& x) {
    mpz_t den, two, five;
    mpz_init_set(den, mpq_denref(x.raw()));
    mpz_init_set_ui(two, 2);
    mpz_init_set_ui(five, 5);
    unsigned long a = 0, b = 0;
    while (mpz_divisible_p(den, two)) {
        mpz_divexact(den, den, two);
        ++a;
    }
    while (mpz_divisible_p(den, five)) {
        mpz_divexact(den, den, five);
        ++b;
    }
    bool terminating = mpz_cmp_ui(den, 1) == 0;
    mpz_clears(den, two, five, nullptr);
    if (!terminating) return x.str();

    unsigned long k = std::max(a, b);
    mpz_t scaled, pow;
    mpz_init(scaled);
    mpz_init(pow);
    mpz_abs(scaled, mpq_numref(x.raw()));
    mpz_ui_pow_ui(pow, 2, k - a);
    mpz_mul(scaled, scaled, pow);
    mpz_ui_pow_ui(pow, 5, k - b);
    mpz_mul(scaled, scaled, pow);
    char* raw = mpz_get_str(nullptr, 10, scaled);
    std::string digits(raw);
    std::free(raw);
    mpz_clears(scaled, pow, nullptr);

    if (digits.size() <= k) digits.insert(0, k + 1 - digits.size(), '0');
    std::string out = x.sign() < 0 ? "-" : "";
    out += digits.substr(0, digits.size() - k);
    if (k > 0) {
        out += '.';
        out += digits.substr(digits.size() - k);
    }
    return out;
}

inline Rational parse_map_number(const std::string& s) {
    size_t slash = s.find('/');
    if (slash == std::string::npos) return Rational::parse(s);
    // exact "p/q" form, for parameters without a terminating decimal
    Rational num = Rational::parse(s.substr(0, slash));
    Rational den = Rational::parse(s.substr(slash + 1));
    if (den.is_zero()) throw InvariantViolationError("map file: zero denominator in '" + s + "'");
    return num / den;
}

/// Map files are JSON objects {"alphas": [...], "betas": [...]} whose
/// numbers are decimal *strings*, so they parse exactly at any working
/// precision. The Graham map is {"alphas": ["1"], "betas": ["0"]}.
/// An exact "p/q" string is accepted for non-terminating rationals.
inline MapSpec<Rational> map_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvariantViolationError(std::string("map file: JSON parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("alphas") || !j.contains("betas"))
        throw InvariantViolationError(
            "map file: expected an object with \"alphas\" and \"betas\" arrays");
    auto read_list = [&](const char* key) {
        const nlohmann::json& arr = j.at(key);
        if (!arr.is_array())
            throw InvariantViolationError(std::string("map file: \"") + key +
                                          "\" must be an array");
        std::vector<Rational> out;
        out.reserve(arr.size());
        for (const auto& el : arr) {
            if (!el.is_string())
                throw InvariantViolationError(
                    std::string("map file: entries of \"") + key +
                    "\" must be decimal strings like \"0.5\" (got " + el.dump() + ")");
            out.push_back(parse_map_number(el.get<std::string>()));
        }
        return out;
    };
    return MapSpec<Rational>::create(read_list("alphas"), read_list("betas"));
}

inline MapSpec<Rational> load_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvariantViolationError("map file: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return map_from_json(buf.str());
}

inline std::string map_to_json(const MapSpec<Rational>& map) {
    nlohmann::json alphas = nlohmann::json::array(), betas = nlohmann::json::array();
    for (const Rational& a : map.alphas) alphas.push_back(map_number_string(a));
    for (const Rational& b : map.betas) betas.push_back(map_number_string(b));
    return nlohmann::json{{"alphas", alphas}, {"betas", betas}}.dump();
}

} // namespace poledyn
