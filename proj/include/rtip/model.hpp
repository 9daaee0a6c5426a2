#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rtip/field.hpp"
#include "rtip/ramp.hpp"

namespace rtip {

/// A field and a ramp bundled into the nonautonomous problem x' = f(x, Lambda(r t)).
struct ModelSpec {
    std::string name;
    std::shared_ptr<const ScalarField> field;
    Ramp ramp;
    std::map<std::string, double> params;

    ModelSpec(std::string name, std::shared_ptr<const ScalarField> field, Ramp ramp,
              std::map<std::string, double> params = {});

    /// Right-hand side at fast time t for rate r.
    double rhs(double r, double t, double x) const { return field->eval(x, ramp.eval(r * t)); }
};

/// -(x - lambda)^2 + zeta expanded into monomials.
std::vector<Monomial> quadratic_terms(double zeta);

/// Built-in registry: quad_arctan, quad_tanh (parameter zeta) and quad_frozen
/// (parameters zeta, lambda0; constant ramp).
ModelSpec make_builtin_model(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> builtin_model_names();

/// Declarative polynomial model:
///
///     # comment
///     name: my_model
///     f: 0.1 - 1 * x^2 + 2 * x * lambda - lambda^2
///     ramp: arctan
///     range: -1 1
ModelSpec parse_model_text(const std::string& text);
ModelSpec load_model_file(const std::string& path);

struct JetConsistencyReport {
    std::size_t samples = 0;
    double max_rel_error_first = 0.0;
    double max_rel_error_second = 0.0;
};

/// Compares jet coefficients 1 and 2 with 4th-order central differences of eval
/// at random points of the model's trusted box.
JetConsistencyReport check_jet_consistency(const ModelSpec& model, std::size_t samples, std::uint64_t seed);

}  // namespace rtip
