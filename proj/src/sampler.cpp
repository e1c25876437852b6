#include "carloss/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "carloss/diagnostics.hpp"
#include "carloss/errors.hpp"
#include "carloss/stats.hpp"

namespace carloss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Adaptation batch length and acceptance window during burn-in.
constexpr int kAdaptBatch = 50;
constexpr double kAcceptLow = 0.30;
constexpr double kAcceptHigh = 0.45;
constexpr double kAdaptFactor = 1.2;

VectorXd standard_normal(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

// Draw from N(P^{-1} b, P^{-1}) given the precision P.
VectorXd draw_from_precision(const MatrixXd& precision, const VectorXd& b, Rng& rng, const char* what) {
    Eigen::LLT<MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " conditional precision is singular");
    VectorXd mean = llt.solve(b);
    VectorXd xi = standard_normal(b.size(), rng);
    return mean + llt.matrixU().solve(xi);
}

GaussianConditional moments_from_precision(const MatrixXd& precision, const VectorXd& b, const char* what) {
    Eigen::LLT<MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " conditional precision is singular");
    return {llt.solve(b), llt.solve(MatrixXd::Identity(b.size(), b.size()))};
}

}  // namespace

Rng make_chain_rng(std::uint64_t seed, std::uint64_t chain_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chain_index), static_cast<std::uint32_t>(chain_index >> 32)};
    return Rng(seq);
}

void PriorSpec::validate() const {
    if (!(sigma2_beta0 > 0.0) || !(sigma2_betaj > 0.0))
        throw InvalidParameter("regression prior variances must be positive");
    if (tau_prior == TauPriorKind::half_t) {
        if (!(tau_prior_df >= 1.0) || !std::isfinite(tau_prior_df))
            throw InvalidParameter("tau prior degrees of freedom must be >= 1");
        if (!(tau_prior_scale > 0.0) || !std::isfinite(tau_prior_scale))
            throw InvalidParameter("tau prior scale must be positive");
    } else {
        if (!(ig_shape > 0.0) || !(ig_rate > 0.0)) throw InvalidParameter("inverse-gamma shape and rate must be positive");
    }
}

double PriorSpec::half_t_scale() const {
    return tau_scale_convention == TauScaleConvention::standard_deviation ? std::sqrt(tau_prior_scale)
                                                                          : tau_prior_scale;
}

double PriorSpec::log_tau_prior(double tau) const {
    if (!(tau > 0.0)) return kNegInf;
    if (tau_prior == TauPriorKind::half_t) {
        const double u = tau / half_t_scale();
        return -0.5 * (tau_prior_df + 1.0) * std::log1p(u * u / tau_prior_df);
    }
    // Inverse-gamma on tau^2 carried to tau: p(tau) = IG(tau^2) * 2 tau.
    return -(2.0 * ig_shape + 1.0) * std::log(tau) - ig_rate / (tau * tau);
}

void SamplerConfig::validate() const {
    if (total_iters <= 0 || burn_in < 0) throw InvalidParameter("iteration counts must be positive");
    if (burn_in >= total_iters) throw InvalidParameter("burn-in must be smaller than the total iteration count");
    if (thin < 1) throw InvalidParameter("thin must be >= 1");
    if (retained() < 100) throw InvalidParameter("fewer than 100 retained draws after burn-in and thinning");
    if (!(rho_step > 0.0) || !(log_tau_step > 0.0)) throw InvalidParameter("proposal scales must be positive");
    if (!(tau_floor > 0.0)) throw InvalidParameter("tau floor must be positive");
    if (chains < 1) throw InvalidParameter("need at least one chain");
}

GibbsKernel::GibbsKernel(AreaDataset dataset, NeighborGraph graph, PriorSpec priors, double tau_floor)
    : dataset_(std::move(dataset)), graph_(std::move(graph)), priors_(priors), tau_floor_(tau_floor) {
    if (graph_.n() != dataset_.n()) throw InputError("graph and dataset sizes differ");
    priors_.validate();
    prior_precision_ = VectorXd::Constant(dataset_.num_coefficients(), 1.0 / priors_.sigma2_betaj);
    prior_precision_(0) = 1.0 / priors_.sigma2_beta0;
}

ChainState GibbsKernel::initial_state() const {
    const auto& x = dataset_.x();
    const auto& z = dataset_.z();
    ChainState s;
    s.beta = x.colPivHouseholderQr().solve(z);
    const VectorXd resid = z - x * s.beta;
    const Eigen::Index dof = std::max<Eigen::Index>(dataset_.n() - dataset_.num_coefficients(), 1);
    s.tau = std::sqrt(resid.squaredNorm() / static_cast<double>(dof));
    const double fallback = std::max(10.0 * tau_floor_, 1e-6 * (1.0 + z.cwiseAbs().maxCoeff()));
    if (!(s.tau > fallback)) s.tau = fallback;
    s.rho = 0.0;
    s.y = z;
    return s;
}

GaussianConditional GibbsKernel::beta_conditional(const ChainState& state) const {
    const auto& x = dataset_.x();
    const MatrixXd q = build_precision(graph_, {state.beta, state.rho, state.tau});
    const MatrixXd qx = q * x;
    MatrixXd precision = x.transpose() * qx;
    precision.diagonal() += prior_precision_;
    return moments_from_precision(precision, qx.transpose() * state.y, "beta");
}

void GibbsKernel::sample_beta(ChainState& state, Rng& rng) const {
    const auto& x = dataset_.x();
    const MatrixXd q = build_precision(graph_, {state.beta, state.rho, state.tau});
    const MatrixXd qx = q * x;
    MatrixXd precision = x.transpose() * qx;
    precision.diagonal() += prior_precision_;
    state.beta = draw_from_precision(precision, qx.transpose() * state.y, rng, "beta");
}

GaussianConditional GibbsKernel::latent_y_conditional(const ChainState& state) const {
    const auto& sigma2 = dataset_.sigma2_meas();
    if (!sigma2 || !(*sigma2 > 0.0)) throw InvalidParameter("latent update needs a positive measurement-error variance");
    MatrixXd lambda = build_precision(graph_, {state.beta, state.rho, state.tau});
    const VectorXd b = lambda * mean_vector(dataset_, state.beta) + dataset_.z() / *sigma2;
    lambda.diagonal().array() += 1.0 / *sigma2;
    return moments_from_precision(lambda, b, "latent process");
}

void GibbsKernel::sample_latent_y(ChainState& state, Rng& rng) const {
    const auto& sigma2 = dataset_.sigma2_meas();
    if (!sigma2 || !(*sigma2 > 0.0)) throw InvalidParameter("latent update needs a positive measurement-error variance");
    MatrixXd lambda = build_precision(graph_, {state.beta, state.rho, state.tau});
    const VectorXd b = lambda * mean_vector(dataset_, state.beta) + dataset_.z() / *sigma2;
    lambda.diagonal().array() += 1.0 / *sigma2;
    state.y = draw_from_precision(lambda, b, rng, "latent process");
}

double GibbsKernel::log_rho_target(const ChainState& state, double rho) const {
    if (!std::isfinite(rho) || !graph_.rho_bounds().contains(rho)) return kNegInf;
    const auto log_det = car_log_det(graph_, rho);
    if (!log_det) return kNegInf;
    const VectorXd r = state.y - dataset_.x() * state.beta;
    const double quad = r.squaredNorm() - rho * r.dot(graph_.c() * r);
    return 0.5 * *log_det - quad / (2.0 * state.tau * state.tau);
}

double GibbsKernel::log_tau_target(const ChainState& state, double tau) const {
    if (!(tau >= tau_floor_) || !std::isfinite(tau)) return kNegInf;
    const VectorXd r = state.y - dataset_.x() * state.beta;
    const double quad = r.squaredNorm() - state.rho * r.dot(graph_.c() * r);
    const double n = static_cast<double>(dataset_.n());
    return priors_.log_tau_prior(tau) - n * std::log(tau) - quad / (2.0 * tau * tau);
}

bool metropolis_accept(double log_ratio, Rng& rng) {
    if (std::isnan(log_ratio)) return false;
    if (log_ratio >= 0.0) return true;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return std::log(unif(rng)) < log_ratio;
}

bool GibbsKernel::sample_rho(ChainState& state, double step, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double proposal = state.rho + step * normal(rng);
    if (!graph_.rho_bounds().contains(proposal)) return false;
    const double log_ratio = log_rho_target(state, proposal) - log_rho_target(state, state.rho);
    if (!metropolis_accept(log_ratio, rng)) return false;
    state.rho = proposal;
    return true;
}

bool GibbsKernel::sample_tau(ChainState& state, double log_step, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_proposal = std::log(state.tau) + log_step * normal(rng);
    const double proposal = std::exp(log_proposal);
    const double target_new = log_tau_target(state, proposal);
    if (target_new == kNegInf) return false;
    // + log tau' - log tau: Jacobian of the log transform.
    const double log_ratio = target_new + log_proposal - log_tau_target(state, state.tau) - std::log(state.tau);
    if (!metropolis_accept(log_ratio, rng)) return false;
    state.tau = proposal;
    return true;
}

VectorXd GibbsKernel::fitted(const ChainState& state) const {
    if (dataset_.has_measurement_error()) return state.y;
    return conditional_mean(graph_, mean_vector(dataset_, state.beta), dataset_.z(), state.rho);
}

MatrixXd PosteriorDraws::param_matrix() const {
    if (params.empty()) return {};
    const Eigen::Index k = params.front().beta.size();
    MatrixXd m(static_cast<Eigen::Index>(params.size()), k + 2);
    for (std::size_t j = 0; j < params.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        m.row(row).head(k) = params[j].beta.transpose();
        m(row, k) = params[j].rho;
        m(row, k + 1) = params[j].tau;
    }
    return m;
}

std::vector<std::string> param_names_for(Eigen::Index num_coefficients) {
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < num_coefficients; ++j) names.push_back("beta" + std::to_string(j));
    names.emplace_back("rho");
    names.emplace_back("tau");
    return names;
}

std::vector<ParamSummary> summarize_params(const PosteriorDraws& draws) {
    const MatrixXd m = draws.param_matrix();
    std::vector<ParamSummary> out;
    if (m.rows() == 0) return out;
    const Eigen::Index per_chain = m.rows() / draws.num_chains;
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
        const VectorXd col = m.col(k);
        std::span<const double> all(col.data(), static_cast<std::size_t>(col.size()));
        ParamSummary s;
        s.name = k < static_cast<Eigen::Index>(draws.param_names.size()) ? draws.param_names[k] : "p" + std::to_string(k);
        s.mean = col.mean();
        s.sd = std::sqrt((col.array() - s.mean).square().sum() / std::max<double>(1.0, static_cast<double>(col.size() - 1)));
        s.q025 = quantile_type7(all, 0.025);
        s.q975 = quantile_type7(all, 0.975);
        std::vector<std::span<const double>> chains;
        s.ess = 0.0;
        for (int c = 0; c < draws.num_chains; ++c) {
            auto block = all.subspan(static_cast<std::size_t>(c * per_chain), static_cast<std::size_t>(per_chain));
            chains.push_back(block);
            s.ess += effective_sample_size(block);
        }
        s.split_rhat = per_chain >= 4 ? split_rhat(chains) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(s));
    }
    return out;
}

PosteriorDraws run_chain(const AreaDataset& dataset, const NeighborGraph& graph, const PriorSpec& priors,
                         const SamplerConfig& config, int chain_index) {
    config.validate();
    const GibbsKernel kernel(dataset, graph, priors, config.tau_floor);
    const bool latent = dataset.has_measurement_error();
    if (latent && !(*dataset.sigma2_meas() > 0.0))
        throw InvalidParameter("measurement-error variance must be positive; omit it for the no-error variant");

    Rng rng = make_chain_rng(config.seed, static_cast<std::uint64_t>(chain_index));
    ChainState state = kernel.initial_state();

    const int m = config.retained();
    PosteriorDraws out;
    out.region_ids = dataset.region_ids();
    out.param_names = param_names_for(dataset.num_coefficients());
    out.params.reserve(static_cast<std::size_t>(m));
    out.fitted.resize(m, dataset.n());

    double rho_step = config.rho_step;
    double tau_step = config.log_tau_step;
    const double rho_step_max = graph.rho_bounds().upper - graph.rho_bounds().lower;
    int batch_rho = 0, batch_tau = 0;
    long kept_rho = 0, kept_tau = 0, post_iters = 0;
    int stored = 0;

    for (int it = 0; it < config.total_iters; ++it) {
        bool acc_rho = false, acc_tau = false;
        try {
            kernel.sample_beta(state, rng);
            acc_tau = kernel.sample_tau(state, tau_step, rng);
            acc_rho = kernel.sample_rho(state, rho_step, rng);
            if (latent) kernel.sample_latent_y(state, rng);
        } catch (const NumericalError& e) {
            std::ostringstream msg;
            msg << "iteration " << it << " (chain " << chain_index << "): " << e.what();
            throw NumericalError(msg.str());
        }

        if (it < config.burn_in) {
            batch_rho += acc_rho;
            batch_tau += acc_tau;
            if (config.adapt && (it + 1) % kAdaptBatch == 0) {
                auto tune = [](double step, int accepted, double hi) {
                    const double rate = static_cast<double>(accepted) / kAdaptBatch;
                    if (rate < kAcceptLow) step /= kAdaptFactor;
                    else if (rate > kAcceptHigh) step *= kAdaptFactor;
                    return std::clamp(step, 1e-8, hi);
                };
                rho_step = tune(rho_step, batch_rho, rho_step_max);
                tau_step = tune(tau_step, batch_tau, 5.0);
                batch_rho = batch_tau = 0;
            }
            continue;
        }

        ++post_iters;
        kept_rho += acc_rho;
        kept_tau += acc_tau;
        if ((it - config.burn_in) % config.thin == 0 && stored < m) {
            out.params.push_back({state.beta, state.rho, state.tau});
            out.fitted.row(stored) = kernel.fitted(state).transpose();
            ++stored;
        }
    }

    out.rho_acceptance = static_cast<double>(kept_rho) / static_cast<double>(post_iters);
    out.tau_acceptance = static_cast<double>(kept_tau) / static_cast<double>(post_iters);
    out.rho_step = rho_step;
    out.log_tau_step = tau_step;
    out.diagnostics = summarize_params(out);
    return out;
}

PosteriorDraws run_chains(const AreaDataset& dataset, const NeighborGraph& graph, const PriorSpec& priors,
                          const SamplerConfig& config) {
    config.validate();
    if (config.chains == 1) return run_chain(dataset, graph, priors, config, 0);

    std::vector<std::future<PosteriorDraws>> futures;
    for (int c = 0; c < config.chains; ++c)
        futures.push_back(std::async(std::launch::async, [&, c] { return run_chain(dataset, graph, priors, config, c); }));
    std::vector<PosteriorDraws> chains;
    for (auto& f : futures) chains.push_back(f.get());

    PosteriorDraws merged;
    merged.region_ids = chains.front().region_ids;
    merged.param_names = chains.front().param_names;
    merged.num_chains = config.chains;
    const Eigen::Index m = chains.front().num_draws();
    merged.fitted.resize(m * config.chains, dataset.n());
    for (int c = 0; c < config.chains; ++c) {
        auto& ch = chains[static_cast<std::size_t>(c)];
        merged.params.insert(merged.params.end(), ch.params.begin(), ch.params.end());
        merged.fitted.middleRows(c * m, m) = ch.fitted;
        merged.rho_acceptance += ch.rho_acceptance / config.chains;
        merged.tau_acceptance += ch.tau_acceptance / config.chains;
        merged.rho_step += ch.rho_step / config.chains;
        merged.log_tau_step += ch.log_tau_step / config.chains;
    }
    merged.diagnostics = summarize_params(merged);
    return merged;
}

}  // namespace carloss
