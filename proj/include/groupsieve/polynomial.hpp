#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupsieve/errors.hpp"
#include "groupsieve/group.hpp"
#include "groupsieve/integers.hpp"

namespace groupsieve {

// A regular function on the group model: an exact-integer polynomial in the
// four coordinate variables, kept as a sorted sparse monomial list.
class RegularFunction {
  public:
    struct Monomial {
        Integer c;
        std::array<unsigned, 4> e{0, 0, 0, 0};
    };

    RegularFunction() = default;
    RegularFunction(long v) {  // NOLINT: implicit by design, mirrors Integer
        if (v != 0) terms_.push_back({Integer(v), {0, 0, 0, 0}});
    }
    explicit RegularFunction(const Integer& v) {
        if (v != 0) terms_.push_back({v, {0, 0, 0, 0}});
    }

    static RegularFunction coordinate(int i) {
        RegularFunction f;
        Monomial m;
        m.c = 1;
        m.e[i] = 1;
        f.terms_.push_back(m);
        return f;
    }

    static RegularFunction from_monomials(std::vector<Monomial> ms, std::string name = "") {
        RegularFunction f;
        f.terms_ = std::move(ms);
        f.name_ = std::move(name);
        f.normalize();
        return f;
    }

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }
    const std::vector<Monomial>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    bool is_constant() const {
        return terms_.empty() ||
               (terms_.size() == 1 && terms_[0].e == std::array<unsigned, 4>{0, 0, 0, 0});
    }

    Integer constant_value() const {
        if (terms_.empty()) return 0;
        return terms_[0].c;
    }

    unsigned total_degree() const {
        unsigned d = 0;
        for (const auto& m : terms_)
            d = std::max(d, m.e[0] + m.e[1] + m.e[2] + m.e[3]);
        return d;
    }

    Integer eval(const std::array<Integer, 4>& x) const {
        Integer acc = 0;
        for (const auto& m : terms_) {
            Integer t = m.c;
            for (int i = 0; i < 4; ++i)
                for (unsigned k = 0; k < m.e[i]; ++k) t *= x[i];
            acc += t;
        }
        return acc;
    }

    Integer eval(const GroupElement& g) const { return eval(g.coords); }

    u64 eval_mod(const std::array<u64, 4>& x, u64 m) const {
        if (m == 0) throw invalid_modulus_error("eval_mod: modulus must be >= 1");
        u64 acc = 0;
        for (const auto& mo : terms_) {
            u64 t = mod_u64(mo.c, m);
            for (int i = 0; i < 4; ++i)
                for (unsigned k = 0; k < mo.e[i]; ++k) t = mulmod_u64(t, x[i] % m, m);
            acc = addmod_u64(acc, t, m);
        }
        return acc;
    }

    // Per-modulus evaluator with coefficients reduced once; for hot loops.
    struct ModEvaluator {
        u64 m;
        std::vector<std::pair<u64, std::array<unsigned, 4>>> terms;
        u64 operator()(const std::array<u64, 4>& x) const {
            u64 acc = 0;
            for (const auto& [c, e] : terms) {
                u64 t = c;
                for (int i = 0; i < 4; ++i)
                    for (unsigned k = 0; k < e[i]; ++k) t = mulmod_u64(t, x[i], m);
                acc = addmod_u64(acc, t, m);
            }
            return acc;
        }
    };

    ModEvaluator evaluator_mod(u64 m) const {
        ModEvaluator ev;
        ev.m = m;
        for (const auto& mo : terms_) ev.terms.push_back({mod_u64(mo.c, m), mo.e});
        return ev;
    }

    RegularFunction operator-() const {
        RegularFunction f = *this;
        for (auto& m : f.terms_) m.c = -m.c;
        return f;
    }

    friend RegularFunction operator+(const RegularFunction& a, const RegularFunction& b) {
        RegularFunction f;
        f.terms_ = a.terms_;
        f.terms_.insert(f.terms_.end(), b.terms_.begin(), b.terms_.end());
        f.normalize();
        return f;
    }

    friend RegularFunction operator-(const RegularFunction& a, const RegularFunction& b) {
        return a + (-b);
    }

    friend RegularFunction operator*(const RegularFunction& a, const RegularFunction& b) {
        RegularFunction f;
        for (const auto& ma : a.terms_)
            for (const auto& mb : b.terms_) {
                Monomial m;
                m.c = ma.c * mb.c;
                for (int i = 0; i < 4; ++i) m.e[i] = ma.e[i] + mb.e[i];
                f.terms_.push_back(std::move(m));
            }
        f.normalize();
        return f;
    }

    friend RegularFunction operator*(long s, const RegularFunction& a) {
        return RegularFunction(s) * a;
    }
    friend RegularFunction operator*(const Integer& s, const RegularFunction& a) {
        return RegularFunction(s) * a;
    }

    bool operator==(const RegularFunction& o) const {
        if (terms_.size() != o.terms_.size()) return false;
        for (size_t i = 0; i < terms_.size(); ++i)
            if (terms_[i].e != o.terms_[i].e || terms_[i].c != o.terms_[i].c) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        if (!name_.empty()) j["name"] = name_;
        j["monomials"] = nlohmann::json::array();
        for (const auto& m : terms_) {
            nlohmann::json t;
            t["c"] = to_string(m.c);
            t["e"] = {m.e[0], m.e[1], m.e[2], m.e[3]};
            j["monomials"].push_back(t);
        }
        return j;
    }

    static RegularFunction from_json(const nlohmann::json& j) {
        std::vector<Monomial> ms;
        for (const auto& t : j.at("monomials")) {
            Monomial m;
            m.c = integer_from_string(t.at("c").get<std::string>());
            auto e = t.at("e");
            if (!e.is_array() || e.size() != 4)
                throw config_error("monomial exponent must be a 4-vector");
            for (int i = 0; i < 4; ++i) m.e[i] = e[i].get<unsigned>();
            ms.push_back(std::move(m));
        }
        return from_monomials(std::move(ms), j.value("name", std::string{}));
    }

  private:
    void normalize() {
        std::sort(terms_.begin(), terms_.end(), [](const Monomial& a, const Monomial& b) {
            return a.e < b.e;
        });
        std::vector<Monomial> merged;
        for (auto& m : terms_) {
            if (!merged.empty() && merged.back().e == m.e)
                merged.back().c += m.c;
            else
                merged.push_back(std::move(m));
        }
        terms_.clear();
        for (auto& m : merged)
            if (m.c != 0) terms_.push_back(std::move(m));
    }

    std::string name_;
    std::vector<Monomial> terms_;
};

// trace: g11 + g22 for SL2, reduced trace 2x for the quaternion model.
inline RegularFunction trace_function(const GroupSpec& spec) {
    RegularFunction f = spec.model == GroupModel::Sl2
                            ? RegularFunction::coordinate(0) + RegularFunction::coordinate(3)
                            : 2 * RegularFunction::coordinate(0);
    f.set_name("trace");
    return f;
}

inline RegularFunction named_function(const GroupSpec& spec, const std::string& name) {
    static const std::map<std::string, int, std::less<>> coord_names = {
        {"g11", 0}, {"g12", 1}, {"g21", 2}, {"g22", 3},
        {"x", 0},   {"y", 1},   {"z", 2},   {"w", 3}};
    if (name == "trace") return trace_function(spec);
    auto it = coord_names.find(name);
    if (it != coord_names.end()) {
        auto f = RegularFunction::coordinate(it->second);
        f.set_name(name);
        return f;
    }
    throw config_error("unknown function name '" + name + "'");
}

// The coordinates of g as an array of coordinate functions.
inline std::array<RegularFunction, 4> symbolic_coordinates() {
    return {RegularFunction::coordinate(0), RegularFunction::coordinate(1),
            RegularFunction::coordinate(2), RegularFunction::coordinate(3)};
}

inline std::array<RegularFunction, 4> symbolic_constant(const GroupElement& g) {
    return {RegularFunction(g.coords[0]), RegularFunction(g.coords[1]),
            RegularFunction(g.coords[2]), RegularFunction(g.coords[3])};
}

}  // namespace groupsieve
