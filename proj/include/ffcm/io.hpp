// Text front end: key = value configs with named [stage] sections, small
// recursive-descent parsers for polynomials in t, Laurent numbers and
// multivariate forms, and the glue that builds a FormSystem from a config.
#pragma once

#include "ffcm/forms.hpp"

#include <cctype>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ffcm {

// parse failure carrying the 1-based source line; 0 when the text has no
// line structure (an expression handed over on the command line, say)
struct parse_error : std::runtime_error {
    int line = 0;
    parse_error(int line_, const std::string& msg)
        : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + msg : msg), line(line_) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// --- expression lexer ---------------------------------------------------
//
// Tokens: nonnegative integers, 't', 'x<k>', and the operators + - * ^ ( ).
// Products may be written with '*' or by juxtaposition before t, x or '('.

struct ExprToken {
    char kind = 0;      // 'n' integer, 't', 'x', one of "+-*^()", 0 at end
    long long num = 0;  // integer value, or the variable index after 'x'
};

struct ExprLexer {
    std::string src;
    std::size_t pos = 0;
    std::size_t tok_at = 0;
    ExprToken tok;

    explicit ExprLexer(std::string text) : src(std::move(text)) { advance(); }

    [[noreturn]] void fail(const std::string& msg) const {
        throw parse_error(0, msg + " at column " + std::to_string(tok_at + 1) + " in \"" + src + "\"");
    }

    long long scan_int() {
        long long v = 0;
        while (pos < src.size() && std::isdigit((unsigned char)src[pos])) {
            v = v * 10 + (src[pos] - '0');
            if (v > 1000000000) fail("integer literal too large");
            ++pos;
        }
        return v;
    }

    void advance() {
        while (pos < src.size() && std::isspace((unsigned char)src[pos])) ++pos;
        tok_at = pos;
        if (pos == src.size()) {
            tok = {0, 0};
            return;
        }
        char c = src[pos];
        if (std::isdigit((unsigned char)c)) {
            tok = {'n', scan_int()};
        } else if (c == 't') {
            ++pos;
            tok = {'t', 0};
        } else if (c == 'x') {
            ++pos;
            if (pos == src.size() || !std::isdigit((unsigned char)src[pos]))
                fail("variable needs an index, as in x1");
            tok = {'x', scan_int()};
        } else if (c == '+' || c == '-' || c == '*' || c == '^' || c == '(' || c == ')') {
            ++pos;
            tok = {c, 0};
        } else {
            fail("unexpected character");
        }
    }

    bool eat(char kind) {
        if (tok.kind != kind) return false;
        advance();
        return true;
    }

    // signed exponent after '^'
    long long exponent() {
        bool neg = eat('-');
        if (tok.kind != 'n') fail("expected an integer exponent");
        long long e = tok.num;
        advance();
        return neg ? -e : e;
    }
};

inline Laur laur_pow(const Fq& F, const Laur& base, long long e) {
    if (e < 0) throw parse_error(0, "only t may carry a negative exponent");
    Laur acc = Laur::from_poly(Poly::konst(1));
    for (long long i = 0; i < e; ++i) acc = mul(F, acc, base);
    return acc;
}

// expr := ['-'] term (('+'|'-') term)*; term := factor (['*'] factor)*;
// factor := (INT | 't' | '(' expr ')') ['^' exponent]
inline Laur parse_laurent_expr(const Fq& F, ExprLexer& lex) {
    auto factor = [&](auto&& self) -> Laur {
        Laur v;
        if (lex.tok.kind == 'n') {
            v = Laur::from_poly(Poly::konst(F.from_int((int)(lex.tok.num % F.p))));
            lex.advance();
        } else if (lex.tok.kind == 't') {
            lex.advance();
            long long e = lex.eat('^') ? lex.exponent() : 1;
            return Laur::t_power((int)e);
        } else if (lex.eat('(')) {
            v = self(self);
            if (!lex.eat(')')) lex.fail("expected ')'");
        } else {
            lex.fail("expected a number, t, or '('");
        }
        if (lex.eat('^')) v = laur_pow(F, v, lex.exponent());
        return v;
    };
    auto term = [&](auto&& self) -> Laur {
        Laur v = factor(self);
        while (true) {
            if (lex.eat('*')) {
                v = mul(F, v, factor(self));
            } else if (lex.tok.kind == 't' || lex.tok.kind == '(') {
                v = mul(F, v, factor(self));
            } else {
                break;
            }
        }
        return v;
    };
    auto expr = [&](auto&& self) -> Laur {
        bool neg = lex.eat('-');
        Laur v = term(self);
        if (neg) v = ffcm::neg(F, v);
        while (lex.tok.kind == '+' || lex.tok.kind == '-') {
            bool minus = lex.tok.kind == '-';
            lex.advance();
            Laur w = term(self);
            v = minus ? sub(F, v, w) : add(F, v, w);
        }
        return v;
    };
    return expr(expr);
}

} // namespace detail

// Laurent number from text, e.g. "t^-1 + 2t^-3" or "(1+t)^2 * t^-4"
inline Laur parse_laurent(const Fq& F, const std::string& text) {
    detail::ExprLexer lex(text);
    Laur v = detail::parse_laurent_expr(F, lex);
    if (lex.tok.kind != 0) lex.fail("trailing input");
    return v;
}

// polynomial in t from text; negative powers of t are rejected
inline Poly parse_poly(const Fq& F, const std::string& text) {
    Laur v = parse_laurent(F, text);
    if (v.known_zero()) return Poly::zero();
    if (v.lo < 0) throw parse_error(0, "negative powers of t are not allowed in \"" + text + "\"");
    Poly out;
    out.c.assign(v.hi() + 1, 0);
    for (int e = v.lo; e <= v.hi(); ++e) out.c[e] = v.coeff_at(e);
    out.trim();
    return out;
}

// form in variables x1..xs with t-polynomial coefficients, e.g.
// "x1^2 + 2*x2^2" or "(1+t)*x1*x2^2 - t^3*x3^3"
inline MonomialForm parse_form(const Fq& F, int s, const std::string& text) {
    detail::ExprLexer lex(text);
    MonomialForm out;

    auto coeff_factor = [&]() -> Laur {  // any factor not involving x
        Laur v;
        if (lex.tok.kind == 'n') {
            v = Laur::from_poly(Poly::konst(F.from_int((int)(lex.tok.num % F.p))));
            lex.advance();
        } else if (lex.tok.kind == 't') {
            lex.advance();
            long long e = lex.eat('^') ? lex.exponent() : 1;
            if (e < 0) throw parse_error(0, "negative powers of t are not allowed in a form");
            return Laur::t_power((int)e);
        } else if (lex.eat('(')) {
            v = detail::parse_laurent_expr(F, lex);
            if (!lex.eat(')')) lex.fail("expected ')'");
        } else {
            lex.fail("expected a coefficient, t, '(' or a variable");
        }
        if (lex.eat('^')) v = detail::laur_pow(F, v, lex.exponent());
        return v;
    };

    auto term = [&](bool negate) {
        Laur coeff = Laur::from_poly(Poly::konst(1));
        std::vector<int> exps(s, 0);
        while (true) {
            if (lex.tok.kind == 'x') {
                long long k = lex.tok.num;
                if (k < 1 || k > s)
                    throw parse_error(0, "variable index out of range: x" + std::to_string(k) + " with s = "
                                             + std::to_string(s));
                lex.advance();
                long long e = lex.eat('^') ? lex.exponent() : 1;
                if (e < 0) throw parse_error(0, "negative variable exponents are not allowed");
                exps[(int)k - 1] += (int)e;
            } else {
                coeff = mul(F, coeff, coeff_factor());
            }
            if (lex.eat('*')) continue;
            if (lex.tok.kind == 'x' || lex.tok.kind == 't' || lex.tok.kind == '(') continue;
            break;
        }
        if (negate) coeff = ffcm::neg(F, coeff);
        if (coeff.known_zero()) return;
        if (coeff.lo < 0) throw parse_error(0, "negative powers of t are not allowed in a form");
        Poly c;
        c.c.assign(coeff.hi() + 1, 0);
        for (int e = coeff.lo; e <= coeff.hi(); ++e) c.c[e] = coeff.coeff_at(e);
        c.trim();
        out.push_back({exps, c});
    };

    term(lex.eat('-'));
    while (lex.tok.kind == '+' || lex.tok.kind == '-') {
        bool minus = lex.tok.kind == '-';
        lex.advance();
        term(minus);
    }
    if (lex.tok.kind != 0) lex.fail("trailing input");
    return out;
}

// --- expression rendering ---------------------------------------------------
//
// Comma-free counterparts of to_string, safe inside CSV cells; on prime
// fields the output round-trips through the parsers above.

inline std::string fel_str(const Fq& F, fel a) {
    if (F.e == 1) return std::to_string(a);
    auto d = F.digits(a);
    std::string s = "(";
    for (int j = 0; j < F.e; ++j) {
        if (j) s += " ";
        s += std::to_string(d[j]);
    }
    return s + ")";
}

inline std::string laur_str(const Fq& F, const Laur& a) {
    std::string s;
    if (!a.known_zero())
        for (int e = a.hi(); e >= a.lo; --e) {
            fel c = a.coeff_at(e);
            if (c == 0) continue;
            if (!s.empty()) s += "+";
            if (e == 0) {
                s += fel_str(F, c);
                continue;
            }
            if (c != 1) s += fel_str(F, c) + "*";
            s += e == 1 ? "t" : "t^" + std::to_string(e);
        }
    if (s.empty()) s = "0";
    if (!a.exact) s += "+O(t^" + std::to_string(a.lo - 1) + ")";
    return s;
}

inline std::string poly_str(const Fq& F, const Poly& a) { return laur_str(F, Laur::from_poly(a)); }

// --- configs --------------------------------------------------------------
//
// Format: '#' starts a comment, blank lines are skipped.  Entries before the
// first [section] header describe the system; each [section] names a pipeline
// stage.  Keys may repeat (the system takes one "form" entry per form).

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigEntry> entries;
};

struct Config {
    std::vector<ConfigEntry> globals;
    std::vector<ConfigSection> stages;
};

inline Config parse_config(std::istream& in) {
    Config cfg;
    std::string raw;
    int line = 0;
    ConfigSection* open = nullptr;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        std::size_t hash = s.find('#');
        if (hash != std::string::npos) s.erase(hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw parse_error(line, "malformed section header \"" + s + "\"");
            cfg.stages.push_back({detail::trim(s.substr(1, s.size() - 2)), line, {}});
            if (cfg.stages.back().name.empty()) throw parse_error(line, "empty section name");
            open = &cfg.stages.back();
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw parse_error(line, "expected key = value, got \"" + s + "\"");
        ConfigEntry e{detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)), line};
        if (e.key.empty()) throw parse_error(line, "missing key before '='");
        for (char c : e.key)
            if (!std::isalnum((unsigned char)c) && c != '_' && c != '-')
                throw parse_error(line, "malformed key \"" + e.key + "\"");
        if (e.value.empty()) throw parse_error(line, "empty value for key '" + e.key + "'");
        (open ? open->entries : cfg.globals).push_back(std::move(e));
    }
    return cfg;
}

inline Config parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline const ConfigEntry* config_find(const std::vector<ConfigEntry>& entries, const std::string& key) {
    for (const ConfigEntry& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

inline std::vector<const ConfigEntry*> config_all(const std::vector<ConfigEntry>& entries, const std::string& key) {
    std::vector<const ConfigEntry*> out;
    for (const ConfigEntry& e : entries)
        if (e.key == key) out.push_back(&e);
    return out;
}

inline const ConfigEntry& config_get(const std::vector<ConfigEntry>& entries, const std::string& key, int where_line) {
    const ConfigEntry* e = config_find(entries, key);
    if (!e) throw parse_error(where_line, "missing required key '" + key + "'");
    return *e;
}

inline long long config_int(const ConfigEntry& e) {
    const char* s = e.value.c_str();
    char* end = nullptr;
    long long v = std::strtoll(s, &end, 10);
    if (end == s || *end != '\0')
        throw parse_error(e.line, "key '" + e.key + "': expected an integer, got \"" + e.value + "\"");
    return v;
}

inline std::vector<std::string> split_list(const std::string& value, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;  // separators inside parentheses do not split
    for (char c : value) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(detail::trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(detail::trim(cur));
    return out;
}

// comma-separated integer list, errors naming the key
inline std::vector<int> config_int_list(const ConfigEntry& e) {
    std::vector<int> out;
    for (const std::string& part : split_list(e.value)) {
        const char* s = part.c_str();
        char* end = nullptr;
        long long v = std::strtoll(s, &end, 10);
        if (part.empty() || end == s || *end != '\0')
            throw parse_error(e.line, "key '" + e.key + "': expected an integer list, got \"" + e.value + "\"");
        out.push_back((int)v);
    }
    return out;
}

// builds the declared system from the entries before the first section;
// wraps expression errors with the offending key and line
inline FormSystem system_from_config(const Config& cfg) {
    const std::vector<ConfigEntry>& g = cfg.globals;
    auto reparse = [&](const ConfigEntry& e, const std::string& msg) -> parse_error {
        return parse_error(e.line, "key '" + e.key + "': " + msg);
    };

    long long q = config_int(config_get(g, "q", 0));
    Fq F = Fq::make((int)q);
    int s = (int)config_int(config_get(g, "s", 0));
    int R = (int)config_int(config_get(g, "R", 0));
    int d = (int)config_int(config_get(g, "d", 0));

    std::vector<MonomialForm> forms;
    for (const ConfigEntry* e : config_all(g, "form")) {
        try {
            forms.push_back(parse_form(F, s, e->value));
        } catch (const parse_error& err) {
            throw reparse(*e, err.what());
        }
    }
    if ((int)forms.size() != R)
        throw parse_error(config_get(g, "R", 0).line,
                          "R = " + std::to_string(R) + " but the config has " + std::to_string(forms.size())
                              + " 'form' entries");

    Poly h = Poly::konst(1);
    if (const ConfigEntry* e = config_find(g, "h")) {
        try {
            h = parse_poly(F, e->value);
        } catch (const parse_error& err) {
            throw reparse(*e, err.what());
        }
    }
    std::vector<Poly> b;
    if (const ConfigEntry* e = config_find(g, "b")) {
        for (const std::string& part : split_list(e->value)) {
            try {
                b.push_back(parse_poly(F, part));
            } catch (const parse_error& err) {
                throw reparse(*e, err.what());
            }
        }
        if ((int)b.size() != s) throw reparse(*e, "expected " + std::to_string(s) + " components");
    }
    int sing_dim = 0;
    if (const ConfigEntry* e = config_find(g, "sing_dim")) sing_dim = (int)config_int(*e);

    static const char* known[] = {"q", "s", "R", "d", "form", "h", "b", "sing_dim"};
    for (const ConfigEntry& e : g) {
        bool ok = false;
        for (const char* k : known) ok = ok || e.key == k;
        if (!ok) throw parse_error(e.line, "unknown key '" + e.key + "' outside a stage section");
    }

    try {
        return FormSystem::make(F, s, R, d, forms, h, b, sing_dim);
    } catch (const std::invalid_argument& err) {
        throw parse_error(0, std::string("system rejected: ") + err.what());
    }
}

} // namespace ffcm
