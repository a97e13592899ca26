#include "epismc/parameters.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>

namespace epismc {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double logit(double x) { return std::log(x) - std::log1p(-x); }
double sigmoid(double u) {
    // numerically stable both directions
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}
}  // namespace

double PriorSpec::log_density(double theta) const {
    switch (family) {
        case Family::normal: {
            const double z = (theta - a) / b;
            return -0.5 * z * z - std::log(b) - 0.5 * kLog2Pi;
        }
        case Family::lognormal: {
            if (!(theta > 0.0)) return -std::numeric_limits<double>::infinity();
            const double z = (std::log(theta) - a) / b;
            return -0.5 * z * z - std::log(theta * b) - 0.5 * kLog2Pi;
        }
        case Family::gamma: {
            if (!(theta > 0.0)) return -std::numeric_limits<double>::infinity();
            return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(theta) - b * theta;
        }
        case Family::logitnormal: {
            if (!(theta > 0.0 && theta < 1.0)) return -std::numeric_limits<double>::infinity();
            const double z = (logit(theta) - a) / b;
            return -0.5 * z * z - 0.5 * kLog2Pi - std::log(b) - std::log(theta) - std::log1p(-theta);
        }
    }
    throw invalid_parameter_error("unknown prior family");
}

double PriorSpec::draw(RngStream& rng) const {
    switch (family) {
        case Family::normal: return rng.normal(a, b);
        case Family::lognormal: return std::exp(rng.normal(a, b));
        case Family::gamma: return rng.gamma(a, 1.0 / b);
        case Family::logitnormal: return sigmoid(rng.normal(a, b));
    }
    throw invalid_parameter_error("unknown prior family");
}

double PriorSpec::median() const {
    switch (family) {
        case Family::normal: return a;
        case Family::lognormal: return std::exp(a);
        case Family::gamma:
            return boost::math::gamma_p_inv(a, 0.5) / b;
        case Family::logitnormal: return sigmoid(a);
    }
    throw invalid_parameter_error("unknown prior family");
}

double PriorSpec::unconstrained_sd() const {
    switch (family) {
        case Family::normal:
        case Family::lognormal:
        case Family::logitnormal:
            return b;  // the transform maps these back to N(a, b^2)
        case Family::gamma:
            return std::sqrt(boost::math::trigamma(a));  // var(log X) for X ~ Gamma(a, .)
    }
    throw invalid_parameter_error("unknown prior family");
}

ParameterLayout::ParameterLayout(int n_multipliers, bool include_background)
    : n_mult_(n_multipliers), background_(include_background) {
    if (n_multipliers < 1) throw invalid_parameter_error("layout needs at least one multiplier");
    dim_ = 10 + n_mult_ + (background_ ? 9 : 0);
    names_.resize(dim_);
    transforms_.assign(dim_, Transform::identity);

    names_[psi()] = "psi";
    transforms_[psi()] = Transform::log_pos;
    names_[nu()] = "nu";
    names_[d_I()] = "d_I";
    transforms_[d_I()] = Transform::log_pos;
    for (int j = 0; j < n_mult_; ++j) {
        names_[m(j)] = "m" + std::to_string(j + 1);
        transforms_[m(j)] = Transform::log_pos;
    }
    names_[phi()] = "phi";
    transforms_[phi()] = Transform::logit_unit;
    for (int i = 0; i < 4; ++i) {
        names_[p(i)] = "p" + std::to_string(i + 1);
        transforms_[p(i)] = Transform::logit_unit;
    }
    for (int i = 0; i < 2; ++i) {
        names_[eta(i)] = "eta" + std::to_string(i + 1);
        transforms_[eta(i)] = Transform::log_pos;
    }
    if (background_)
        for (int i = 0; i < 9; ++i) names_[beta_B(i)] = "bB" + std::to_string(i + 1);

    auto add_group = [&](const std::string& gname, std::vector<int> idx) {
        group_names_.push_back(gname);
        groups_.push_back(std::move(idx));
    };
    add_group("psi", {psi()});
    add_group("nu", {nu()});
    add_group("d_I", {d_I()});
    std::vector<int> mg;
    for (int j = 0; j < n_mult_; ++j) mg.push_back(m(j));
    add_group("m", mg);
    add_group("phi", {phi()});
    add_group("p", {p(0), p(1), p(2), p(3)});
    add_group("eta", {eta(0), eta(1)});
    if (background_) {
        std::vector<int> bg;
        for (int i = 0; i < 9; ++i) bg.push_back(beta_B(i));
        add_group("beta_B", bg);
    }
}

int ParameterLayout::index_of(const std::string& name) const {
    for (int i = 0; i < dim_; ++i)
        if (names_[i] == name) return i;
    return -1;
}

ParameterSpace::ParameterSpace(ParameterLayout layout, std::vector<PriorSpec> priors)
    : layout_(std::move(layout)), priors_(std::move(priors)) {
    if (static_cast<int>(priors_.size()) != layout_.dim())
        throw invalid_parameter_error("one prior per component required");
    fixed_.assign(layout_.dim(), false);
    fixed_values_ = Eigen::VectorXd::Zero(layout_.dim());
    rebuild_free();
}

void ParameterSpace::fix(int index, double natural_value) {
    if (index < 0 || index >= layout_.dim()) throw invalid_parameter_error("fix: bad index");
    fixed_[index] = true;
    fixed_values_[index] = natural_value;
    rebuild_free();
}

void ParameterSpace::rebuild_free() {
    free_to_full_.clear();
    for (int i = 0; i < layout_.dim(); ++i)
        if (!fixed_[i]) free_to_full_.push_back(i);
}

std::vector<std::string> ParameterSpace::free_names() const {
    std::vector<std::string> out;
    for (int i : free_to_full_) out.push_back(layout_.name(i));
    return out;
}

double ParameterSpace::forward(Transform t, double natural) {
    switch (t) {
        case Transform::identity: return natural;
        case Transform::log_pos:
            if (!(natural > 0.0)) throw invalid_parameter_error("log transform requires positive value");
            return std::log(natural);
        case Transform::logit_unit:
            if (!(natural > 0.0 && natural < 1.0))
                throw invalid_parameter_error("logit transform requires value in (0,1)");
            return logit(natural);
    }
    throw invalid_parameter_error("unknown transform");
}

double ParameterSpace::backward(Transform t, double u) {
    switch (t) {
        case Transform::identity: return u;
        case Transform::log_pos: return std::exp(u);
        case Transform::logit_unit: return sigmoid(u);
    }
    throw invalid_parameter_error("unknown transform");
}

double ParameterSpace::log_jacobian(Transform t, double u) {
    switch (t) {
        case Transform::identity: return 0.0;
        case Transform::log_pos: return u;  // d theta/du = e^u
        case Transform::logit_unit: {
            // log sigma(u) + log(1 - sigma(u)), stable form
            const double au = std::fabs(u);
            return -au - 2.0 * std::log1p(std::exp(-au));
        }
    }
    throw invalid_parameter_error("unknown transform");
}

Eigen::VectorXd ParameterSpace::to_unconstrained(const Eigen::VectorXd& theta_natural) const {
    if (theta_natural.size() != layout_.dim())
        throw invalid_parameter_error("to_unconstrained: dimension mismatch");
    Eigen::VectorXd u(n_free());
    for (int k = 0; k < n_free(); ++k) {
        const int i = free_to_full_[k];
        u[k] = forward(layout_.transform(i), theta_natural[i]);
    }
    return u;
}

Eigen::VectorXd ParameterSpace::to_natural(const Eigen::VectorXd& u_free) const {
    if (u_free.size() != n_free()) throw invalid_parameter_error("to_natural: dimension mismatch");
    Eigen::VectorXd theta = fixed_values_;
    for (int k = 0; k < n_free(); ++k) {
        const int i = free_to_full_[k];
        theta[i] = backward(layout_.transform(i), u_free[k]);
    }
    return theta;
}

double ParameterSpace::log_prior_unconstrained(const Eigen::VectorXd& u_free) const {
    if (u_free.size() != n_free()) throw invalid_parameter_error("log_prior: dimension mismatch");
    double lp = 0.0;
    for (int k = 0; k < n_free(); ++k) {
        const int i = free_to_full_[k];
        const Transform t = layout_.transform(i);
        const double theta = backward(t, u_free[k]);
        lp += priors_[i].log_density(theta) + log_jacobian(t, u_free[k]);
        if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    }
    return lp;
}

Eigen::VectorXd ParameterSpace::prior_draw_unconstrained(RngStream& rng) const {
    Eigen::VectorXd u(n_free());
    for (int k = 0; k < n_free(); ++k) {
        const int i = free_to_full_[k];
        const Transform t = layout_.transform(i);
        double x = priors_[i].draw(rng);
        // heavy near-zero priors (Gamma with tiny shape) produce natural-scale
        // draws that round to 0, outside what the transform can represent;
        // clamp to the representable domain, where such values are already
        // likelihood-equivalent to the boundary
        if (t == Transform::log_pos) x = std::max(x, std::numeric_limits<double>::min());
        if (t == Transform::logit_unit)
            x = std::clamp(x, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
        u[k] = forward(t, x);
    }
    return u;
}

Eigen::VectorXd ParameterSpace::prior_median_unconstrained() const {
    Eigen::VectorXd u(n_free());
    for (int k = 0; k < n_free(); ++k) {
        const int i = free_to_full_[k];
        u[k] = forward(layout_.transform(i), priors_[i].median());
    }
    return u;
}

std::vector<std::vector<int>> ParameterSpace::free_groups() const {
    std::vector<int> full_to_free(layout_.dim(), -1);
    for (int k = 0; k < n_free(); ++k) full_to_free[free_to_full_[k]] = k;
    std::vector<std::vector<int>> out;
    for (const auto& g : layout_.groups()) {
        std::vector<int> fg;
        for (int i : g)
            if (full_to_free[i] >= 0) fg.push_back(full_to_free[i]);
        if (!fg.empty()) out.push_back(std::move(fg));
    }
    return out;
}

std::vector<std::string> ParameterSpace::free_group_names() const {
    std::vector<int> full_to_free(layout_.dim(), -1);
    for (int k = 0; k < n_free(); ++k) full_to_free[free_to_full_[k]] = k;
    std::vector<std::string> out;
    const auto& gs = layout_.groups();
    for (std::size_t gi = 0; gi < gs.size(); ++gi) {
        bool any = false;
        for (int i : gs[gi])
            if (full_to_free[i] >= 0) any = true;
        if (any) out.push_back(layout_.group_names()[gi]);
    }
    return out;
}

}  // namespace epismc
