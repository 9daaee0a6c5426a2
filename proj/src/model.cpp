#include "rtip/model.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "rtip/errors.hpp"

namespace rtip {

ModelSpec::ModelSpec(std::string name_, std::shared_ptr<const ScalarField> field_, Ramp ramp_,
                     std::map<std::string, double> params_)
    : name(std::move(name_)), field(std::move(field_)), ramp(ramp_), params(std::move(params_)) {
    if (!field) throw ConfigError("model '" + name + "' has no field");
    const auto& box = field->bound_box();
    if (box.lambda_min > ramp.lambda_minus() || box.lambda_max < ramp.lambda_plus())
        throw ConfigError("model '" + name + "': trusted box does not cover the ramp's parameter range");
}

std::vector<Monomial> quadratic_terms(double zeta) {
    return {{zeta, 0, 0}, {-1.0, 2, 0}, {2.0, 1, 1}, {-1.0, 0, 2}};
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& model, const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known) {
    for (const auto& [key, value] : params) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("model '" + model + "' has no parameter '" + key + "'");
    }
}

}  // namespace

ModelSpec make_builtin_model(const std::string& name, const std::map<std::string, double>& params) {
    const double zeta = param_or(params, "zeta", 0.1);
    if (!(zeta > 0.0)) {
        std::ostringstream os;
        os << "zeta = " << zeta << " must be positive: frozen system has no equilibria";
        throw ConfigError(os.str());
    }
    if (name == "quad_arctan" || name == "quad_tanh") {
        reject_unknown(name, params, {"zeta"});
        BoundBox box{-1e6, 1e6, -1.0, 1.0};
        auto field = std::make_shared<PolynomialField>(quadratic_terms(zeta), box);
        const Ramp ramp(name == "quad_arctan" ? RampKind::arctan : RampKind::tanh, -1.0, 1.0);
        return ModelSpec(name, field, ramp, {{"zeta", zeta}});
    }
    if (name == "quad_frozen") {
        reject_unknown(name, params, {"zeta", "lambda0"});
        const double lambda0 = param_or(params, "lambda0", 0.0);
        BoundBox box{-1e6, 1e6, lambda0 - 1.0, lambda0 + 1.0};
        auto field = std::make_shared<PolynomialField>(quadratic_terms(zeta), box);
        return ModelSpec(name, field, Ramp::constant(lambda0), {{"zeta", zeta}, {"lambda0", lambda0}});
    }
    throw ConfigError("unknown model '" + name + "'");
}

std::vector<std::string> builtin_model_names() { return {"quad_arctan", "quad_tanh", "quad_frozen"}; }

namespace {

class PolyParser {
public:
    explicit PolyParser(std::string_view src) : src_(src) {}

    std::vector<Monomial> parse() {
        std::vector<Monomial> terms;
        skip_ws();
        double sign = 1.0;
        if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
        for (;;) {
            terms.push_back(term(sign));
            skip_ws();
            if (at_end()) break;
            const char c = take();
            if (c != '+' && c != '-') fail("expected '+' or '-' between terms");
            sign = c == '-' ? -1.0 : 1.0;
        }
        return terms;
    }

private:
    Monomial term(double sign) {
        Monomial m{sign, 0, 0};
        for (;;) {
            skip_ws();
            factor(m);
            skip_ws();
            if (peek() != '*') break;
            take();
        }
        return m;
    }

    void factor(Monomial& m) {
        if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
            m.coeff *= number();
            return;
        }
        std::string ident;
        while (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') ident += take();
        int power = 1;
        skip_ws();
        if (peek() == '^') {
            take();
            skip_ws();
            const double p = number();
            if (p < 0 || p != std::floor(p)) fail("powers must be non-negative integers");
            power = static_cast<int>(p);
        }
        if (ident == "x") m.x_power += power;
        else if (ident == "lambda") m.lambda_power += power;
        else fail(ident.empty() ? "expected a number, 'x' or 'lambda'" : "unknown symbol '" + ident + "'");
    }

    double number() {
        const std::size_t start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == 'e' ||
                             peek() == 'E' ||
                             ((peek() == '-' || peek() == '+') && pos_ > start &&
                              (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
            ++pos_;
        const std::string text(src_.substr(start, pos_ - start));
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) fail("malformed number '" + text + "'");
            return v;
        } catch (const std::logic_error&) {
            fail("malformed number '" + text + "'");
        }
        return 0.0;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream os;
        os << "polynomial syntax error at column " << pos_ + 1 << ": " << msg;
        throw ConfigError(os.str());
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return at_end() ? '\0' : src_[pos_]; }
    char take() { return at_end() ? '\0' : src_[pos_++]; }

    std::string_view src_;
    std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ModelSpec parse_model_text(const std::string& text) {
    std::istringstream in(text);
    std::string line, name = "user_model", ramp_name, poly;
    bool have_range = false;
    double lo = 0.0, hi = 0.0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ConfigError("model file line " + std::to_string(lineno) + ": expected 'key: value'");
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (key == "name") name = value;
        else if (key == "f") poly = value;
        else if (key == "ramp") ramp_name = value;
        else if (key == "range") {
            std::string v = value;
            for (char& c : v)
                if (c == ',') c = ' ';
            std::istringstream rs(v);
            if (!(rs >> lo >> hi)) throw ConfigError("model file line " + std::to_string(lineno) + ": range needs two numbers");
            have_range = true;
        } else {
            throw ConfigError("model file line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (poly.empty()) throw ConfigError("model file is missing the 'f:' line");
    if (ramp_name.empty()) throw ConfigError("model file is missing the 'ramp:' line");
    if (!have_range) throw ConfigError("model file is missing the 'range:' line");

    const RampKind kind = ramp_kind_from_string(ramp_name);
    const Ramp ramp = kind == RampKind::constant ? Ramp::constant(lo) : Ramp(kind, lo, hi);
    BoundBox box{-1e6, 1e6, std::min(lo, hi), std::max(lo, hi)};
    auto field = std::make_shared<PolynomialField>(PolyParser(poly).parse(), box);
    return ModelSpec(name, field, ramp);
}

ModelSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_model_text(buf.str());
}

JetConsistencyReport check_jet_consistency(const ModelSpec& model, std::size_t samples, std::uint64_t seed) {
    const auto& f = *model.field;
    const auto& box = f.bound_box();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.x_min, box.x_max);
    std::uniform_real_distribution<double> ul(box.lambda_min, box.lambda_max);

    JetConsistencyReport rep;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = ux(rng);
        const double lambda = ul(rng);
        const double h = 1e-3 * std::max(1.0, std::abs(x));
        auto fv = [&](double dx) { return f.eval(x + dx, lambda); };
        const double fm2 = fv(-2 * h), fm1 = fv(-h), f0 = fv(0), fp1 = fv(h), fp2 = fv(2 * h);
        const double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
        const double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
        const Jet jet = f.jet_eval(x, lambda, 2);
        const double e1 = std::abs(d1 - jet[1]) / std::max(1.0, std::abs(jet[1]));
        const double e2 = std::abs(d2 / 2.0 - jet[2]) / std::max(1.0, std::abs(jet[2]));
        rep.max_rel_error_first = std::max(rep.max_rel_error_first, e1);
        rep.max_rel_error_second = std::max(rep.max_rel_error_second, e2);
        ++rep.samples;
    }
    return rep;
}

}  // namespace rtip
