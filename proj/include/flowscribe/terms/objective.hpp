#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowscribe/dsl/ast.hpp"
#include "flowscribe/geometry.hpp"

namespace flowscribe::terms {

class CompileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One unweighted, dimensionless term over a full configuration.
class Term {
public:
    virtual ~Term() = default;
    virtual std::string kind() const = 0;
    /// Term value; if grad is given, adds scale * gradient into it.
    virtual double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const = 0;
    /// Adds scale * (share of the value attributed to each particle) into out.
    virtual void contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const;
    /// Distance-like measure to the term's nondifferentiable set (large = safe for finite differences).
    virtual double smooth_margin(const std::vector<Vec2>& x) const;
};

struct WeightedTerm {
    double weight = 1.0;
    std::shared_ptr<const Term> term;
};

class CompiledObjective {
public:
    CompiledObjective(std::size_t n, double norm_length, double tolerance, std::string name,
                      std::vector<WeightedTerm> terms);

    std::size_t n() const { return n_; }
    double norm_length() const { return norm_length_; }
    double tolerance() const { return tolerance_; }
    const std::string& name() const { return name_; }
    const std::vector<WeightedTerm>& terms() const { return terms_; }

    double evaluate(const std::vector<Vec2>& x) const;
    double evaluate(const ParticleConfig& a) const { return evaluate(a.positions); }
    std::vector<Vec2> gradient(const std::vector<Vec2>& x) const;
    std::vector<Vec2> gradient(const ParticleConfig& a) const { return gradient(a.positions); }
    /// Value and gradient in one pass; grad is resized and overwritten.
    double value_and_gradient(const std::vector<Vec2>& x, std::vector<Vec2>& grad) const;
    /// Unweighted per-term values.
    std::vector<double> term_values(const std::vector<Vec2>& x) const;
    /// Weighted per-particle attribution of the objective.
    std::vector<double> contributions(const std::vector<Vec2>& x) const;
    double smooth_margin(const std::vector<Vec2>& x) const;
    /// True when some term is bound to particle labels through a declared subset.
    bool uses_labels() const { return uses_labels_; }
    void set_uses_labels(bool v) { uses_labels_ = v; }
    /// Copy with every weight multiplied by s.
    CompiledObjective scaled(double s) const;

private:
    void check(const std::vector<Vec2>& x) const;

    std::size_t n_;
    double norm_length_;
    double tolerance_;
    std::string name_;
    std::vector<WeightedTerm> terms_;
    bool uses_labels_ = false;
};

/// Compiles a validated spec. `n` overrides nothing: if both n and spec.n_expected are set they must agree.
CompiledObjective compile(const dsl::ObjectiveSpec& spec, std::optional<std::size_t> n = std::nullopt);

}  // namespace flowscribe::terms
