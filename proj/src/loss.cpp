#include "carloss/loss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "carloss/errors.hpp"
#include "carloss/sampler.hpp"

namespace carloss {

namespace {

using Wide = long double;

template <class T>
T linex_kernel(T delta, T lambda, T gamma) {
    const T u = lambda * delta;
    return gamma * (std::expm1(u) - u);
}

// Three-branch power divergence loss; expm1/log1p keep the general branch
// accurate next to the special values of lambda.
template <class T>
T pdl_kernel(T y, T yhat, T lambda) {
    const T log_ratio = std::log(y / yhat);
    if (lambda == T(0)) return y * log_ratio - (y - yhat);
    if (lambda == T(-1)) return (y - yhat) - yhat * log_ratio;
    return (y * std::expm1(lambda * log_ratio) + lambda * (yhat - y)) / (lambda * (lambda + T(1)));
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "power divergence loss needs positive " << what << ", got " << v;
        throw DomainError(msg.str());
    }
}

void require_positive_draws(std::span<const double> draws) {
    for (std::size_t j = 0; j < draws.size(); ++j) {
        if (!(draws[j] > 0.0) || !std::isfinite(draws[j])) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "power divergence loss needs positive draws; draw " << j << " = " << draws[j];
            throw DomainError(msg.str());
        }
    }
}

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + " overflowed");
    return v;
}

double sample_mean(std::span<const double> draws) {
    Wide s = 0;
    for (double v : draws) s += v;
    return static_cast<double>(s / static_cast<Wide>(draws.size()));
}

Wide log_mean_exp_wide(std::span<const Wide> a) {
    const Wide mx = *std::max_element(a.begin(), a.end());
    if (!std::isfinite(mx)) return mx;
    Wide s = 0;
    for (Wide v : a) s += std::expm1(v - mx);
    return mx + std::log1p(s / static_cast<Wide>(a.size()));
}

}  // namespace

std::string to_string(LossFamily family) {
    switch (family) {
        case LossFamily::squared_error: return "squared_error";
        case LossFamily::linex: return "linex";
        case LossFamily::pdl: return "pdl";
    }
    return "unknown";
}

LossFamily parse_loss_family(const std::string& name) {
    if (name == "squared_error" || name == "squared" || name == "sel") return LossFamily::squared_error;
    if (name == "linex") return LossFamily::linex;
    if (name == "pdl") return LossFamily::pdl;
    throw InvalidParameter("unknown loss family '" + name + "' (expected squared_error, linex or pdl)");
}

void LossSpec::validate() const {
    if (!std::isfinite(lambda)) throw InvalidParameter("lambda must be finite");
    if (family == LossFamily::linex && lambda == 0.0)
        throw InvalidParameter("linex loss needs lambda != 0; use squared_error for the symmetric case");
    if (!(gamma_scale > 0.0) || !std::isfinite(gamma_scale)) throw InvalidParameter("linex scale must be positive");
}

std::string LossSpec::label() const {
    if (family == LossFamily::squared_error) return "squared_error";
    // shortest text that parses back to the same lambda
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, lambda);
    return to_string(family) + '(' + std::string(buf, res.ptr) + ')';
}

LossSpec parse_loss_spec(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw InvalidParameter("empty loss specification");
    LossSpec spec;
    spec.family = parse_loss_family(parts[0]);
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw InvalidParameter("bad number '" + s + "' in loss specification '" + text + "'");
        }
    };
    if (spec.family == LossFamily::squared_error) {
        if (parts.size() != 1) throw InvalidParameter("squared_error takes no parameters");
    } else {
        if (parts.size() < 2 || parts.size() > 3 || (spec.family == LossFamily::pdl && parts.size() != 2))
            throw InvalidParameter("malformed loss specification '" + text + "'");
        spec.lambda = number(parts[1]);
        if (parts.size() == 3) spec.gamma_scale = number(parts[2]);
    }
    spec.validate();
    return spec;
}

double linex_loss(double delta, double lambda, double gamma_scale) {
    LossSpec::linex(lambda, gamma_scale).validate();
    return linex_kernel(delta, lambda, gamma_scale);
}

double pdl_loss(double y, double yhat, double lambda) {
    require_positive(y, "observations");
    require_positive(yhat, "predictions");
    if (!std::isfinite(lambda)) throw InvalidParameter("lambda must be finite");
    return static_cast<double>(pdl_kernel<Wide>(y, yhat, lambda));
}

double loss_value(double y, double yhat, const LossSpec& spec) {
    spec.validate();
    switch (spec.family) {
        case LossFamily::squared_error: return (yhat - y) * (yhat - y);
        case LossFamily::linex:
            return static_cast<double>(linex_kernel<Wide>(Wide(yhat) - y, spec.lambda, spec.gamma_scale));
        case LossFamily::pdl: return pdl_loss(y, yhat, spec.lambda);
    }
    return 0.0;
}

double expected_loss(std::span<const double> draws, double yhat, const LossSpec& spec) {
    spec.validate();
    if (draws.empty()) throw InputError("expected loss needs at least one draw");
    Wide sum = 0;
    const Wide h = yhat;
    switch (spec.family) {
        case LossFamily::squared_error:
            for (double y : draws) sum += (h - y) * (h - y);
            break;
        case LossFamily::linex: {
            const Wide lambda = spec.lambda, gamma = spec.gamma_scale;
            for (double y : draws) sum += linex_kernel<Wide>(h - y, lambda, gamma);
            break;
        }
        case LossFamily::pdl: {
            require_positive(yhat, "predictions");
            require_positive_draws(draws);
            const Wide lambda = spec.lambda;
            for (double y : draws) sum += pdl_kernel<Wide>(y, h, lambda);
            break;
        }
    }
    return checked(static_cast<double>(sum / static_cast<Wide>(draws.size())), "expected loss");
}

double log_mean_exp(std::span<const double> a) {
    if (a.empty()) throw InputError("log_mean_exp of an empty sequence");
    std::vector<Wide> wide(a.begin(), a.end());
    return static_cast<double>(log_mean_exp_wide(wide));
}

double optimal_predictor(std::span<const double> draws, const LossSpec& spec) {
    spec.validate();
    if (draws.empty()) throw InputError("optimal predictor needs at least one draw");
    std::vector<Wide> a(draws.size());
    switch (spec.family) {
        case LossFamily::squared_error: return checked(sample_mean(draws), "posterior mean");
        case LossFamily::linex: {
            const Wide lambda = spec.lambda;
            for (std::size_t j = 0; j < draws.size(); ++j) a[j] = -lambda * draws[j];
            return checked(static_cast<double>(-log_mean_exp_wide(a) / lambda), "linex predictor");
        }
        case LossFamily::pdl: {
            require_positive_draws(draws);
            const Wide power = static_cast<Wide>(spec.lambda) + 1;
            if (spec.lambda == 0.0) return checked(sample_mean(draws), "pdl predictor");
            if (spec.lambda == -1.0) {
                Wide s = 0;
                for (double y : draws) s += std::log(static_cast<Wide>(y));
                return checked(static_cast<double>(std::exp(s / static_cast<Wide>(draws.size()))), "pdl predictor");
            }
            for (std::size_t j = 0; j < draws.size(); ++j) a[j] = power * std::log(static_cast<Wide>(draws[j]));
            return checked(static_cast<double>(std::exp(log_mean_exp_wide(a) / power)), "pdl predictor");
        }
    }
    return 0.0;
}

double quantile_match(std::span<const double> draws, double predictor) {
    if (draws.empty()) throw InputError("quantile match needs at least one draw");
    const auto below = std::count_if(draws.begin(), draws.end(), [&](double v) { return v <= predictor; });
    return static_cast<double>(below) / static_cast<double>(draws.size());
}

std::vector<double> PredictorTable::predictors() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.predictor);
    return out;
}

PredictorTable predictor_table(const std::vector<std::string>& region_ids, const Eigen::MatrixXd& fitted,
                               const LossSpec& spec) {
    spec.validate();
    if (static_cast<Eigen::Index>(region_ids.size()) != fitted.cols())
        throw InputError("region count does not match the fitted draws");
    if (fitted.rows() < 2) throw InputError("predictor table needs at least 2 draws per region");
    PredictorTable table{spec, {}};
    table.rows.reserve(region_ids.size());
    for (Eigen::Index i = 0; i < fitted.cols(); ++i) {
        const Eigen::VectorXd col = fitted.col(i);
        std::span<const double> draws(col.data(), static_cast<std::size_t>(col.size()));
        PredictorRow row;
        row.region_id = region_ids[static_cast<std::size_t>(i)];
        try {
            row.predictor = optimal_predictor(draws, spec);
        } catch (const DomainError& e) {
            throw DomainError("region '" + row.region_id + "': " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("region '" + row.region_id + "': " + e.what());
        }
        row.posterior_mean = sample_mean(draws);
        Wide ss = 0;
        for (double v : draws) ss += (static_cast<Wide>(v) - row.posterior_mean) * (static_cast<Wide>(v) - row.posterior_mean);
        row.sd = static_cast<double>(std::sqrt(ss / static_cast<Wide>(draws.size())));
        const double bias = row.predictor - row.posterior_mean;
        row.rmspe = std::sqrt(row.sd * row.sd + bias * bias);
        row.matched_quantile = quantile_match(draws, row.predictor);
        table.rows.push_back(std::move(row));
    }
    return table;
}

PredictorTable predictor_table(const PosteriorDraws& draws, const LossSpec& spec) {
    return predictor_table(draws.region_ids, draws.fitted, spec);
}

}  // namespace carloss
