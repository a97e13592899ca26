#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epismc/errors.hpp"
#include "epismc/rng.hpp"

namespace epismc {

// theta layout: psi, nu, d_I, m[0..n_mult), phi, p[0..4), eta[0..2),
// and for scenario 2 the 9 background coefficients. Sampling happens on the
// unconstrained scale: log for positive components, logit for probabilities,
// identity for the rest. Components can be pinned to fixed values, in which
// case they drop out of the free vector entirely.

enum class Transform { identity, log_pos, logit_unit };

struct PriorSpec {
    enum class Family { normal, lognormal, gamma, logitnormal };
    Family family = Family::normal;
    double a = 0.0;  // mean / log-mean / shape / logit-mean
    double b = 1.0;  // sd / log-sd / rate / logit-sd

    double log_density(double theta) const;        // natural scale
    double draw(RngStream& rng) const;             // natural scale
    double median() const;                         // natural scale
    double unconstrained_sd() const;               // sd after the component transform
};

class ParameterLayout {
  public:
    ParameterLayout(int n_multipliers, bool include_background);

    int dim() const { return dim_; }
    int n_multipliers() const { return n_mult_; }
    bool include_background() const { return background_; }

    int psi() const { return 0; }
    int nu() const { return 1; }
    int d_I() const { return 2; }
    int m(int j) const { return 3 + j; }
    int phi() const { return 3 + n_mult_; }
    int p(int i) const { return 4 + n_mult_ + i; }
    int eta(int i) const { return 8 + n_mult_ + i; }
    int beta_B(int i) const { return 10 + n_mult_ + i; }

    const std::string& name(int i) const { return names_[i]; }
    int index_of(const std::string& name) const;  // -1 if absent
    Transform transform(int i) const { return transforms_[i]; }

    // Component groups in the sense of the summary table rows; componentwise
    // kernels sweep these in order.
    const std::vector<std::vector<int>>& groups() const { return groups_; }
    const std::vector<std::string>& group_names() const { return group_names_; }

  private:
    int n_mult_;
    bool background_;
    int dim_;
    std::vector<std::string> names_;
    std::vector<Transform> transforms_;
    std::vector<std::vector<int>> groups_;
    std::vector<std::string> group_names_;
};

class ParameterSpace {
  public:
    ParameterSpace(ParameterLayout layout, std::vector<PriorSpec> priors);

    const ParameterLayout& layout() const { return layout_; }

    // pin a component (by full-layout index) to a natural-scale value
    void fix(int index, double natural_value);
    bool is_fixed(int index) const { return fixed_[index]; }
    int n_free() const { return static_cast<int>(free_to_full_.size()); }
    const std::vector<int>& free_indices() const { return free_to_full_; }
    std::vector<std::string> free_names() const;
    const PriorSpec& prior(int full_index) const { return priors_[full_index]; }

    // natural full vector -> unconstrained free vector and back
    Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& theta_natural) const;
    Eigen::VectorXd to_natural(const Eigen::VectorXd& u_free) const;

    // log prior of the free components on the unconstrained scale, transform
    // Jacobian included; fixed components contribute a constant and are skipped
    double log_prior_unconstrained(const Eigen::VectorXd& u_free) const;

    Eigen::VectorXd prior_draw_unconstrained(RngStream& rng) const;
    Eigen::VectorXd prior_median_unconstrained() const;

    // free groups: layout groups restricted to free components, empty groups dropped
    std::vector<std::vector<int>> free_groups() const;
    std::vector<std::string> free_group_names() const;

    static double forward(Transform t, double natural);   // natural -> unconstrained
    static double backward(Transform t, double u);        // unconstrained -> natural
    static double log_jacobian(Transform t, double u);    // log |d natural / d u|

  private:
    ParameterLayout layout_;
    std::vector<PriorSpec> priors_;
    std::vector<bool> fixed_;
    Eigen::VectorXd fixed_values_;
    std::vector<int> free_to_full_;
    void rebuild_free();
};

}  // namespace epismc
