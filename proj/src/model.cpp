#include "epismc/model.hpp"

#include <cmath>

namespace epismc {

void validate(const TransmissionParams& p) {
    if (!(p.psi > 0.0)) throw invalid_parameter_error("psi must be positive");
    if (!(p.d_I > 0.0)) throw invalid_parameter_error("d_I must be positive");
    if (!(p.d_L > 0.0)) throw invalid_parameter_error("d_L must be positive");
    if (!std::isfinite(p.nu)) throw invalid_parameter_error("nu must be finite");
    for (Eigen::Index j = 0; j < p.m.size(); ++j)
        if (!(p.m[j] >= 0.0) || !std::isfinite(p.m[j]))
            throw invalid_parameter_error("contact multipliers must be nonnegative");
}

double r0_from_growth_rate(double psi, double d_L, double d_I) {
    if (!(psi > 0.0)) throw invalid_parameter_error("r0_from_growth_rate: psi must be positive");
    if (!(d_L > 0.0) || !(d_I > 0.0))
        throw invalid_parameter_error("r0_from_growth_rate: periods must be positive");
    const double num = psi * d_I * (1.0 + psi * d_L / 2.0) * (1.0 + psi * d_L / 2.0);
    const double den = 1.0 - std::pow(1.0 + psi * d_I / 2.0, -2.0);
    return num / den;
}

namespace {
// dominant eigenpair of a positive matrix by power iteration; deterministic
// start, tolerance on the Rayleigh quotient
void power_iteration(const Eigen::MatrixXd& K, double& eigenvalue, Eigen::VectorXd& eigenvector) {
    const int n = static_cast<int>(K.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / n);
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd w = K * v;
        const double norm = w.sum();  // positive matrix keeps entries positive
        if (!(norm > 0.0)) throw domain_error("power iteration: operator lost positivity");
        w /= norm;
        const double lambda_new = v.dot(K * v) / v.dot(v);
        if (std::fabs(lambda_new - lambda) < 1e-13 * std::max(1.0, std::fabs(lambda_new)) && it > 3) {
            lambda = lambda_new;
            v = w;
            break;
        }
        lambda = lambda_new;
        v = w;
    }
    eigenvalue = lambda;
    eigenvector = v / v.sum();
}
}  // namespace

ContactSchedule::ContactSchedule(const Eigen::MatrixXd& raw_contacts,
                                 const Eigen::VectorXd& populations,
                                 std::vector<ContactPeriod> periods, double dt, int n_steps,
                                 double reference_multiplier)
    : populations_(populations), periods_(std::move(periods)), dt_(dt), n_steps_(n_steps) {
    const int A = static_cast<int>(populations.size());
    if (raw_contacts.rows() != A || raw_contacts.cols() != A)
        throw config_error("contact matrix must be A x A");
    if (A < 1) throw config_error("need at least one age group");
    for (int a = 0; a < A; ++a)
        if (!(populations[a] > 0.0)) throw config_error("populations must be positive");
    if (!(dt > 0.0) || !(dt <= 1.0)) throw config_error("dt must lie in (0, 1]");
    const double spd = 1.0 / dt;
    if (std::fabs(spd - std::round(spd)) > 1e-9)
        throw config_error("1/dt must be an integer number of steps per day");
    steps_per_day_ = static_cast<int>(std::round(spd));
    if (n_steps_ <= 0 || n_steps_ % steps_per_day_ != 0)
        throw config_error("n_steps must be a positive whole number of days");
    if (!(reference_multiplier > 0.0))
        throw config_error("reference multiplier must be positive");

    // reciprocity: total contacts a->b must equal b->a
    Eigen::MatrixXd C(A, A);
    for (int a = 0; a < A; ++a)
        for (int b = 0; b < A; ++b) {
            if (raw_contacts(a, b) < 0.0) throw config_error("contact rates must be nonnegative");
            C(a, b) = 0.5 * (raw_contacts(a, b) + raw_contacts(b, a) * populations[b] / populations[a]);
        }

    // next-generation operator diag(N) * C * diag(N)^-1 is similar to C, so
    // its dominant eigenvalue equals lambda_max(C)
    double lambda_max;
    Eigen::VectorXd cvec;
    power_iteration(C, lambda_max, cvec);
    if (!(lambda_max > 0.0)) throw config_error("contact matrix has no positive eigenvalue");

    unit_matrix_.resize(A, A);
    for (int a = 0; a < A; ++a)
        for (int b = 0; b < A; ++b)
            unit_matrix_(a, b) = C(a, b) / (populations[b] * lambda_max * reference_multiplier);

    // eigenvector of diag(N) * unit_matrix: similarity gives v_K = diag(N) v_C
    Eigen::VectorXd v = populations.array() * cvec.array();
    ngm_eigenvector_ = v / v.sum();

    // periods must partition [0, n_steps)
    if (periods_.empty()) throw config_error("contact schedule needs at least one period");
    step_to_period_.assign(n_steps_, -1);
    n_classes_ = 0;
    for (std::size_t j = 0; j < periods_.size(); ++j) {
        const auto& p = periods_[j];
        if (p.start_step < 0 || p.end_step > n_steps_ || p.start_step >= p.end_step)
            throw config_error("contact period out of range");
        if (p.multiplier_index < 0) throw config_error("negative multiplier index");
        n_classes_ = std::max(n_classes_, p.multiplier_index + 1);
        for (int s = p.start_step; s < p.end_step; ++s) {
            if (step_to_period_[s] != -1) throw config_error("contact periods overlap");
            step_to_period_[s] = static_cast<int>(j);
        }
    }
    for (int s = 0; s < n_steps_; ++s)
        if (step_to_period_[s] == -1) throw config_error("contact periods leave gaps");
}

int ContactSchedule::multiplier_index_at(int t_index) const {
    if (t_index < 0 || t_index >= n_steps_) throw invalid_parameter_error("step index out of range");
    return periods_[step_to_period_[t_index]].multiplier_index;
}

Eigen::MatrixXd ContactSchedule::contact_matrix_at(int t_index, const Eigen::VectorXd& m) const {
    const int idx = multiplier_index_at(t_index);
    if (idx >= m.size()) throw invalid_parameter_error("multiplier vector shorter than schedule needs");
    return m[idx] * unit_matrix_;
}

Eigen::VectorXd force_of_infection(const Eigen::MatrixXd& M, double R0, double d_I,
                                   const Eigen::VectorXd& I1, const Eigen::VectorXd& I2, double dt) {
    const Eigen::Index A = M.rows();
    Eigen::VectorXd infectious = I1 + I2;
    Eigen::VectorXd lambda(A);
    const double scale = R0 / d_I;
    for (Eigen::Index a = 0; a < A; ++a) {
        double log_escape = 0.0;
        for (Eigen::Index b = 0; b < A; ++b) {
            const double x = M(a, b) * scale;
            if (x >= 1.0)
                throw domain_error("per-contact infection probability reached 1; M*R0/d_I >= 1");
            if (x > 0.0 && infectious[b] > 0.0) log_escape += infectious[b] * std::log1p(-x);
        }
        lambda[a] = -std::expm1(log_escape) * dt;
    }
    return lambda;
}

Eigen::VectorXd euler_step(EpidemicState& st, const Eigen::VectorXd& lambda, double d_L,
                           double d_I, double dt) {
    const double out_L = 2.0 * dt / d_L;
    const double out_I = 2.0 * dt / d_I;
    if (out_L > 1.0 || out_I > 1.0)
        throw domain_error("Euler step too large: stage outflow exceeds occupancy");
    for (Eigen::Index a = 0; a < lambda.size(); ++a)
        if (lambda[a] < 0.0 || lambda[a] > 1.0)
            throw domain_error("force of infection outside [0,1]");

    Eigen::VectorXd new_inf = st.S.array() * lambda.array();
    Eigen::VectorXd E1n = st.E1 + new_inf - out_L * st.E1;
    Eigen::VectorXd E2n = st.E2 + out_L * (st.E1 - st.E2);
    Eigen::VectorXd I1n = st.I1 + out_L * st.E2 - out_I * st.I1;
    Eigen::VectorXd I2n = st.I2 + out_I * (st.I1 - st.I2);
    st.R += out_I * st.I2;
    st.S -= new_inf;
    st.E1 = E1n;
    st.E2 = E2n;
    st.I1 = I1n;
    st.I2 = I2n;
    return new_inf;
}

EpidemicState initial_state(const TransmissionParams& p, const ContactSchedule& schedule) {
    validate(p);
    const Eigen::VectorXd& N = schedule.populations();
    const double I0 = std::exp(p.nu) * N.sum();
    const Eigen::VectorXd& v = schedule.ngm_eigenvector();

    // linearized per-step balance at growth factor exp(psi*dt):
    // each compartment ratio follows from the Euler update run backwards
    const double dt = schedule.dt();
    const double alpha = std::exp(p.psi * dt) - 1.0;
    const double kp = 2.0 * dt / p.d_L;
    const double rp = 2.0 * dt / p.d_I;
    const double i1 = 1.0;
    const double i2 = i1 * rp / (alpha + rp);
    const double e2 = i1 * (alpha + rp) / kp;
    const double e1 = e2 * (alpha + kp) / kp;
    const double tot = e1 + e2 + i1 + i2;

    EpidemicState st;
    st.E1 = (e1 / tot) * I0 * v;
    st.E2 = (e2 / tot) * I0 * v;
    st.I1 = (i1 / tot) * I0 * v;
    st.I2 = (i2 / tot) * I0 * v;
    st.R = Eigen::VectorXd::Zero(N.size());
    st.S = N - st.E1 - st.E2 - st.I1 - st.I2;
    for (Eigen::Index a = 0; a < N.size(); ++a)
        if (!(st.S[a] > 0.0))
            throw invalid_parameter_error("initial infected mass exceeds an age-group population");
    return st;
}

Trajectory simulate_epidemic(const TransmissionParams& p, const ContactSchedule& schedule,
                             int n_steps_limit) {
    const int K = (n_steps_limit <= 0) ? schedule.n_steps()
                                       : std::min(n_steps_limit, schedule.n_steps());
    const int A = schedule.n_ages();
    if (p.m.size() < schedule.n_multiplier_classes())
        throw invalid_parameter_error("multiplier vector shorter than schedule needs");

    const double dt = schedule.dt();
    const double R0 = r0_from_growth_rate(discrete_equivalent_rate(p.psi, dt), p.d_L, p.d_I);

    EpidemicState st = initial_state(p, schedule);
    Trajectory traj;
    traj.dt = dt;
    traj.steps_per_day = schedule.steps_per_day();
    traj.delta.resize(K, A);
    traj.susceptibles.resize(K, A);

    for (int k = 0; k < K; ++k) {
        const Eigen::MatrixXd M = schedule.contact_matrix_at(k, p.m);
        const Eigen::VectorXd lambda = force_of_infection(M, R0, p.d_I, st.I1, st.I2, dt);
        traj.delta.row(k) = euler_step(st, lambda, p.d_L, p.d_I, dt).transpose();
        traj.susceptibles.row(k) = st.S.transpose();
    }
    return traj;
}

Eigen::VectorXd Trajectory::daily_infections(int day) const {
    const int first = (day - 1) * steps_per_day;
    if (day < 1 || first + steps_per_day > delta.rows())
        throw invalid_parameter_error("daily_infections: day out of range");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(delta.cols());
    for (int s = 0; s < steps_per_day; ++s) out += delta.row(first + s).transpose();
    return out;
}

Eigen::VectorXd Trajectory::end_of_day_susceptibles(int day) const {
    const int last = day * steps_per_day - 1;
    if (day < 1 || last >= susceptibles.rows())
        throw invalid_parameter_error("end_of_day_susceptibles: day out of range");
    return susceptibles.row(last).transpose();
}

double attack_rate(const Trajectory& traj, const Eigen::VectorXd& populations) {
    return traj.delta.sum() / populations.sum();
}

double attack_rate(const TransmissionParams& p, const ContactSchedule& schedule) {
    return attack_rate(simulate_epidemic(p, schedule), schedule.populations());
}

}  // namespace epismc
