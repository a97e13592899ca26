#include "epismc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace epismc {

using nlohmann::json;

ContactSchedule ModelConfig::make_schedule() const {
    const int spd = static_cast<int>(std::round(1.0 / dt));
    std::vector<ContactPeriod> periods;
    for (const auto& w : windows)
        periods.push_back({w.start_day * spd, w.end_day * spd, w.multiplier - 1});
    return ContactSchedule(contact_matrix, populations, std::move(periods), dt,
                           horizon_days * spd, reference_multiplier);
}

PriorSpec default_prior(const std::string& name) {
    auto mk = [](PriorSpec::Family f, double a, double b) {
        PriorSpec s;
        s.family = f;
        s.a = a;
        s.b = b;
        return s;
    };
    const double logit_03 = std::log(0.3 / 0.7);
    const double logit_025 = std::log(0.25 / 0.75);
    if (name == "psi") return mk(PriorSpec::Family::lognormal, std::log(0.15), 0.75);
    if (name == "nu") return mk(PriorSpec::Family::normal, -13.0, 2.0);
    if (name == "d_I") return mk(PriorSpec::Family::lognormal, std::log(3.5), 0.35);
    if (name.rfind("m", 0) == 0 && name.size() <= 3)
        return mk(PriorSpec::Family::lognormal, std::log(0.35), 0.75);
    if (name == "phi") return mk(PriorSpec::Family::logitnormal, logit_03, 1.0);
    if (name.rfind("p", 0) == 0 && name.size() == 2)
        return mk(PriorSpec::Family::logitnormal, logit_025, 1.5);
    if (name.rfind("eta", 0) == 0) return mk(PriorSpec::Family::gamma, 0.01, 0.01);
    if (name == "bB1") return mk(PriorSpec::Family::normal, 5.0, 3.0);
    if (name.rfind("bB", 0) == 0) return mk(PriorSpec::Family::normal, 0.0, 2.0);
    throw config_error("no default prior for component " + name);
}

namespace {

PriorSpec parse_prior(const json& j) {
    PriorSpec s;
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "normal")
        s.family = PriorSpec::Family::normal;
    else if (fam == "lognormal")
        s.family = PriorSpec::Family::lognormal;
    else if (fam == "gamma")
        s.family = PriorSpec::Family::gamma;
    else if (fam == "logitnormal")
        s.family = PriorSpec::Family::logitnormal;
    else
        throw config_error("unknown prior family: " + fam);
    s.a = j.at("a").get<double>();
    s.b = j.at("b").get<double>();
    if (!(s.b > 0.0)) throw config_error("prior scale must be positive");
    return s;
}

Eigen::VectorXd parse_vector(const json& j) {
    Eigen::VectorXd v(j.size());
    int i = 0;
    for (const auto& x : j) v[i++] = x.get<double>();
    return v;
}

Eigen::MatrixXd parse_matrix(const json& j) {
    const int rows = static_cast<int>(j.size());
    if (rows == 0) throw config_error("empty matrix");
    const int cols = static_cast<int>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j.at(r).size()) != cols) throw config_error("ragged matrix");
        for (int c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

}  // namespace

AppConfig AppConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();

    AppConfig cfg;
    cfg.source_text = ss.str();
    json j;
    try {
        j = json::parse(cfg.source_text);
    } catch (const std::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }

    try {
        const auto& jm = j.at("model");
        cfg.model.dt = jm.value("dt", 0.5);
        cfg.model.horizon_days = jm.at("horizon_days").get<int>();
        cfg.model.d_L = jm.value("d_L", 2.0);
        cfg.model.populations = parse_vector(jm.at("populations"));
        cfg.model.contact_matrix = parse_matrix(jm.at("contact_matrix"));
        cfg.model.reference_multiplier = jm.value("reference_multiplier", 1.0);
        for (const auto& w : jm.at("multiplier_windows"))
            cfg.model.windows.push_back({w.at("start_day").get<int>(), w.at("end_day").get<int>(),
                                         w.at("multiplier").get<int>()});
        cfg.model.n_multipliers = 0;
        for (const auto& w : cfg.model.windows)
            cfg.model.n_multipliers = std::max(cfg.model.n_multipliers, w.multiplier);

        if (j.contains("observation")) {
            const auto& jo = j.at("observation");
            cfg.observation.intervention_day = jo.value("intervention_day", 83);
            cfg.observation.n_child_groups = jo.value("n_child_groups", 3);
            cfg.observation.zeta = jo.value("delay_mean", 5.0);
            cfg.observation.sigma2 = jo.value("delay_var", 8.0);
            cfg.observation.l_max = jo.value("l_max", 45);
            if (jo.contains("background_knots")) {
                cfg.observation.background_knots.clear();
                for (const auto& k : jo.at("background_knots"))
                    cfg.observation.background_knots.push_back(k.get<int>());
            }
        }

        if (j.contains("calendar")) {
            const auto& jc = j.at("calendar");
            if (jc.contains("serology_days"))
                for (const auto& d : jc.at("serology_days"))
                    cfg.calendar.serology_days.push_back(d.get<int>());
            cfg.calendar.serology_size = jc.value("serology_size", 500L);
            cfg.calendar.virology_start = jc.value("virology_start", 7);
            cfg.calendar.virology_period = jc.value("virology_period", 7);
            if (jc.contains("virology_sizes"))
                for (const auto& s : jc.at("virology_sizes"))
                    cfg.calendar.virology_sizes.push_back(s.get<long>());
        }

        if (j.contains("smc")) {
            const auto& js = j.at("smc");
            cfg.smc.particles = js.value("particles", 10000);
            cfg.smc.epsilon_L = js.value("epsilon_L", 0.5);
            cfg.smc.r_A_star = js.value("r_A_star", 0.1);
            cfg.smc.kernel = js.value("kernel", std::string("hybrid"));
            cfg.smc.mode = js.value("mode", std::string("continuous"));
            cfg.smc.max_mh_iters = js.value("max_mh_iters", 500);
            cfg.smc.gamma = js.value("gamma", 0.0);
        }
        if (j.contains("mcmc")) {
            const auto& js = j.at("mcmc");
            cfg.mcmc.iterations = js.value("iterations", 100000L);
            cfg.mcmc.burn_in = js.value("burn_in", 0L);
            cfg.mcmc.thin = js.value("thin", 10L);
            cfg.mcmc.target_accept = js.value("target_accept", 0.234);
        }
        if (j.contains("pipeline")) {
            const auto& jp = j.at("pipeline");
            if (jp.contains("landmark_days")) {
                cfg.pipeline.landmark_days.clear();
                for (const auto& d : jp.at("landmark_days"))
                    cfg.pipeline.landmark_days.push_back(d.get<int>());
            }
            if (jp.contains("kl_days")) {
                cfg.pipeline.kl_days.clear();
                for (const auto& d : jp.at("kl_days")) cfg.pipeline.kl_days.push_back(d.get<int>());
            }
            cfg.pipeline.kl_replicates = jp.value("kl_replicates", 10);
            cfg.pipeline.forecast_horizon = jp.value("forecast_horizon", 20);
            if (jp.contains("kl_exclude"))
                for (const auto& s : jp.at("kl_exclude"))
                    cfg.pipeline.kl_exclude.push_back(s.get<std::string>());
        }
        cfg.scenario = j.value("scenario", 1);

        if (j.contains("truth")) {
            const auto& jt = j.at("truth");
            for (auto it = jt.begin(); it != jt.end(); ++it) {
                if (it.value().is_array()) {
                    int i = 1;
                    for (const auto& x : it.value()) {
                        std::string base = it.key();
                        std::string nm = (base == "m")        ? "m" + std::to_string(i)
                                          : (base == "p")     ? "p" + std::to_string(i)
                                          : (base == "eta")   ? "eta" + std::to_string(i)
                                          : (base == "beta_B") ? "bB" + std::to_string(i)
                                                               : base + std::to_string(i);
                        cfg.truth[nm] = x.get<double>();
                        ++i;
                    }
                } else {
                    cfg.truth[it.key()] = it.value().get<double>();
                }
            }
        }

        if (j.contains("priors")) {
            const auto& jp = j.at("priors");
            for (auto it = jp.begin(); it != jp.end(); ++it)
                cfg.prior_overrides[it.key()] = parse_prior(it.value());
        }
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(std::string("config field error: ") + e.what());
    }

    if (cfg.scenario != 1 && cfg.scenario != 2) throw config_error("scenario must be 1 or 2");
    return cfg;
}

namespace {
// block name for a component: "m3" -> "m", "p2" -> "p", "eta1" -> "eta", "bB4" -> "beta_B"
std::string block_of(const std::string& name) {
    if (name.rfind("eta", 0) == 0) return "eta";
    if (name.rfind("bB", 0) == 0) return "beta_B";
    if (name.size() >= 2 && (name[0] == 'm' || name[0] == 'p') && std::isdigit(name[1]))
        return std::string(1, name[0]);
    return name;
}
}  // namespace

ParameterSpace AppConfig::make_space(int scenario_id) const {
    ParameterLayout layout(model.n_multipliers, scenario_id == 2);
    std::vector<PriorSpec> priors;
    for (int i = 0; i < layout.dim(); ++i) {
        const std::string& nm = layout.name(i);
        auto it = prior_overrides.find(nm);
        if (it == prior_overrides.end()) it = prior_overrides.find(block_of(nm));
        priors.push_back(it != prior_overrides.end() ? it->second : default_prior(nm));
    }
    return ParameterSpace(layout, std::move(priors));
}

Eigen::VectorXd AppConfig::truth_vector(int scenario_id) const {
    ParameterLayout layout(model.n_multipliers, scenario_id == 2);
    Eigen::VectorXd theta(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) {
        auto it = truth.find(layout.name(i));
        if (it == truth.end())
            throw config_error("truth missing component " + layout.name(i));
        theta[i] = it->second;
    }
    return theta;
}

TransmissionParams AppConfig::transmission_truth() const {
    TransmissionParams p;
    p.d_L = model.d_L;
    p.psi = truth.at("psi");
    p.nu = truth.at("nu");
    p.d_I = truth.at("d_I");
    p.m.resize(model.n_multipliers);
    for (int i = 0; i < model.n_multipliers; ++i) p.m[i] = truth.at("m" + std::to_string(i + 1));
    return p;
}

ObservationParams AppConfig::observation_truth(int scenario_id) const {
    ObservationParams o;
    o.phi = truth.at("phi");
    for (int i = 0; i < 4; ++i) o.p[i] = truth.at("p" + std::to_string(i + 1));
    o.eta1 = truth.at("eta1");
    o.eta2 = truth.at("eta2");
    if (scenario_id == 2) {
        o.beta_B.resize(9);
        for (int i = 0; i < 9; ++i) o.beta_B[i] = truth.at("bB" + std::to_string(i + 1));
    }
    return o;
}

}  // namespace epismc
