#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "carloss/area_model.hpp"
#include "carloss/asymmetry.hpp"
#include "carloss/errors.hpp"
#include "carloss/loss.hpp"
#include "carloss/manifest.hpp"
#include "carloss/risk.hpp"
#include "carloss/sampler.hpp"

namespace py = pybind11;
using namespace carloss;

namespace {

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

py::dict summary_dict(const ParamSummary& s) {
    py::dict d;
    d["name"] = s.name;
    d["mean"] = s.mean;
    d["sd"] = s.sd;
    d["q025"] = s.q025;
    d["q975"] = s.q975;
    d["ess"] = s.ess;
    d["split_rhat"] = s.split_rhat;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "CAR model fitting and optimal prediction under squared-error, LINEX and power divergence loss";
    m.attr("__version__") = kEngineVersion;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto input = py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<InvalidParameter>(m, "InvalidParameter", input.ptr());
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<UndefinedRatioError>(m, "UndefinedRatioError", numerical.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());

    // area model
    py::class_<AreaDataset>(m, "AreaDataset")
        .def(py::init<std::vector<std::string>, VectorXd, MatrixXd, std::optional<double>, std::vector<std::string>>(),
             py::arg("region_ids"), py::arg("z"), py::arg("x"), py::arg("sigma2_meas") = py::none(),
             py::arg("covariate_names") = std::vector<std::string>{})
        .def_static("intercept_only", &AreaDataset::intercept_only, py::arg("region_ids"), py::arg("z"),
                    py::arg("sigma2_meas") = py::none())
        .def_property_readonly("n", &AreaDataset::n)
        .def_property_readonly("region_ids", &AreaDataset::region_ids)
        .def_property_readonly("covariate_names", &AreaDataset::covariate_names)
        .def_property_readonly("z", &AreaDataset::z)
        .def_property_readonly("x", &AreaDataset::x)
        .def_property_readonly("sigma2_meas", &AreaDataset::sigma2_meas);

    py::class_<NeighborGraph>(m, "NeighborGraph")
        .def_static(
            "from_edges",
            [](int n, const std::vector<NeighborGraph::Edge>& edges, bool allow_isolated) {
                return NeighborGraph::from_edges(n, edges, {allow_isolated});
            },
            py::arg("n"), py::arg("edges"), py::arg("allow_isolated") = false)
        .def_static(
            "from_matrix",
            [](const MatrixXd& c, bool allow_isolated) { return NeighborGraph::from_matrix(c, {allow_isolated}); },
            py::arg("c"), py::arg("allow_isolated") = false)
        .def_property_readonly("n", &NeighborGraph::n)
        .def_property_readonly("c", &NeighborGraph::c)
        .def_property_readonly("edges", &NeighborGraph::edges)
        .def_property_readonly("rho_bounds",
                               [](const NeighborGraph& g) { return py::make_tuple(g.rho_bounds().lower, g.rho_bounds().upper); });

    py::class_<CarParams>(m, "CarParams")
        .def(py::init([](VectorXd beta, double rho, double tau) { return CarParams{std::move(beta), rho, tau}; }),
             py::arg("beta"), py::arg("rho"), py::arg("tau"))
        .def_readwrite("beta", &CarParams::beta)
        .def_readwrite("rho", &CarParams::rho)
        .def_readwrite("tau", &CarParams::tau);

    m.def("build_precision", &build_precision, py::arg("graph"), py::arg("params"));
    m.def("car_covariance", &car_covariance, py::arg("graph"), py::arg("params"));
    m.def("mean_vector", &mean_vector, py::arg("dataset"), py::arg("beta"));
    m.def("fitted_values", &fitted_values, py::arg("dataset"), py::arg("graph"), py::arg("params"));

    // sampler
    py::class_<PriorSpec>(m, "PriorSpec")
        .def(py::init<>())
        .def_readwrite("sigma2_beta0", &PriorSpec::sigma2_beta0)
        .def_readwrite("sigma2_betaj", &PriorSpec::sigma2_betaj)
        .def_readwrite("tau_prior_df", &PriorSpec::tau_prior_df)
        .def_readwrite("tau_prior_scale", &PriorSpec::tau_prior_scale)
        .def_property(
            "tau_scale_is_variance",
            [](const PriorSpec& p) { return p.tau_scale_convention == TauScaleConvention::variance; },
            [](PriorSpec& p, bool v) {
                p.tau_scale_convention = v ? TauScaleConvention::variance : TauScaleConvention::standard_deviation;
            });

    py::class_<SamplerConfig>(m, "SamplerConfig")
        .def(py::init<>())
        .def_readwrite("total_iters", &SamplerConfig::total_iters)
        .def_readwrite("burn_in", &SamplerConfig::burn_in)
        .def_readwrite("thin", &SamplerConfig::thin)
        .def_readwrite("seed", &SamplerConfig::seed)
        .def_readwrite("rho_step", &SamplerConfig::rho_step)
        .def_readwrite("log_tau_step", &SamplerConfig::log_tau_step)
        .def_readwrite("adapt", &SamplerConfig::adapt)
        .def_readwrite("chains", &SamplerConfig::chains)
        .def_property_readonly("retained", &SamplerConfig::retained);

    py::class_<PosteriorDraws>(m, "PosteriorDraws")
        .def_readonly("region_ids", &PosteriorDraws::region_ids)
        .def_readonly("param_names", &PosteriorDraws::param_names)
        .def_readonly("fitted", &PosteriorDraws::fitted)
        .def_readonly("num_chains", &PosteriorDraws::num_chains)
        .def_readonly("rho_acceptance", &PosteriorDraws::rho_acceptance)
        .def_readonly("tau_acceptance", &PosteriorDraws::tau_acceptance)
        .def("param_matrix", &PosteriorDraws::param_matrix)
        .def_property_readonly("diagnostics", [](const PosteriorDraws& d) {
            py::list out;
            for (const auto& s : d.diagnostics) out.append(summary_dict(s));
            return out;
        });

    m.def(
        "run_chain",
        [](const AreaDataset& data, const NeighborGraph& graph, const PriorSpec& priors, const SamplerConfig& config) {
            py::gil_scoped_release release;
            return run_chains(data, graph, priors, config);
        },
        py::arg("dataset"), py::arg("graph"), py::arg("priors") = PriorSpec{}, py::arg("config") = SamplerConfig{});

    // loss
    py::enum_<LossFamily>(m, "LossFamily")
        .value("squared_error", LossFamily::squared_error)
        .value("linex", LossFamily::linex)
        .value("pdl", LossFamily::pdl);

    py::class_<LossSpec>(m, "LossSpec")
        .def(py::init([](LossFamily f, double lambda, double gamma) {
                 LossSpec s{f, lambda, gamma};
                 s.validate();
                 return s;
             }),
             py::arg("family"), py::arg("lambda_") = 0.0, py::arg("gamma_scale") = 1.0)
        .def_static("parse", &parse_loss_spec)
        .def_readonly("family", &LossSpec::family)
        .def_readonly("lambda_", &LossSpec::lambda)
        .def_readonly("gamma_scale", &LossSpec::gamma_scale)
        .def_property_readonly("label", &LossSpec::label)
        .def("__repr__", [](const LossSpec& s) { return "LossSpec(" + s.label() + ")"; });

    m.def("linex_loss", &linex_loss, py::arg("delta"), py::arg("lambda_"), py::arg("gamma_scale") = 1.0);
    m.def("pdl_loss", &pdl_loss, py::arg("y"), py::arg("yhat"), py::arg("lambda_"));
    m.def(
        "expected_loss", [](const std::vector<double>& d, double yhat, const LossSpec& s) { return expected_loss(as_span(d), yhat, s); },
        py::arg("draws"), py::arg("yhat"), py::arg("spec"));
    m.def(
        "optimal_predictor", [](const std::vector<double>& d, const LossSpec& s) { return optimal_predictor(as_span(d), s); },
        py::arg("draws"), py::arg("spec"));
    m.def(
        "quantile_match", [](const std::vector<double>& d, double p) { return quantile_match(as_span(d), p); },
        py::arg("draws"), py::arg("predictor"));

    py::class_<PredictorRow>(m, "PredictorRow")
        .def_readonly("region_id", &PredictorRow::region_id)
        .def_readonly("predictor", &PredictorRow::predictor)
        .def_readonly("posterior_mean", &PredictorRow::posterior_mean)
        .def_readonly("sd", &PredictorRow::sd)
        .def_readonly("rmspe", &PredictorRow::rmspe)
        .def_readonly("matched_quantile", &PredictorRow::matched_quantile);
    py::class_<PredictorTable>(m, "PredictorTable")
        .def_readonly("spec", &PredictorTable::spec)
        .def_readonly("rows", &PredictorTable::rows)
        .def("predictors", &PredictorTable::predictors);
    m.def("predictor_table", py::overload_cast<const PosteriorDraws&, const LossSpec&>(&predictor_table), py::arg("draws"),
          py::arg("spec"));
    m.def("predictor_table_from_matrix",
          py::overload_cast<const std::vector<std::string>&, const Eigen::MatrixXd&, const LossSpec&>(&predictor_table),
          py::arg("region_ids"), py::arg("fitted"), py::arg("spec"));

    // asymmetry selection
    py::class_<PowerRatio>(m, "PowerRatio")
        .def_readonly("psi", &PowerRatio::psi)
        .def_readonly("r_plus", &PowerRatio::r_plus)
        .def_readonly("r_minus", &PowerRatio::r_minus)
        .def_readonly("rmse_plus", &PowerRatio::rmse_plus)
        .def_readonly("rmse_minus", &PowerRatio::rmse_minus);
    m.def(
        "power_ratio", [](const std::vector<double>& r) { return power_ratio(as_span(r)); }, py::arg("residuals"));
    m.def(
        "find_elbows",
        [](const std::vector<double>& psi, double prominence) { return find_elbows(as_span(psi), {prominence}); },
        py::arg("psi"), py::arg("prominence") = 1.5);

    py::class_<PowerRatioCurve>(m, "PowerRatioCurve")
        .def_readonly("lambda_grid", &PowerRatioCurve::lambda_grid)
        .def_readonly("points", &PowerRatioCurve::points)
        .def_readonly("predictors", &PowerRatioCurve::predictors)
        .def_readonly("elbow_candidates", &PowerRatioCurve::elbow_candidates)
        .def_property_readonly("psi",
                               [](const PowerRatioCurve& c) {
                                   std::vector<double> v;
                                   for (const auto& p : c.points) v.push_back(p.psi);
                                   return v;
                               })
        .def_property_readonly("warnings", [](const PowerRatioCurve& c) {
            py::list out;
            for (const auto& w : c.warnings) out.append(py::make_tuple(w.lambda, w.message));
            return out;
        });
    m.def(
        "sweep",
        [](const PosteriorDraws& d, const VectorXd& observed, LossFamily family, const std::vector<double>& grid, bool any_sign) {
            SweepOptions o;
            o.enforce_half_line = !any_sign;
            return sweep(d, observed, family, grid, o);
        },
        py::arg("draws"), py::arg("observed"), py::arg("family"), py::arg("lambda_grid"), py::arg("any_sign") = false);
    m.def("default_grid", &default_grid, py::arg("family"));

    // risk
    m.def(
        "relative_risk",
        [](const std::vector<double>& d, double yhat, const LossSpec& s) { return relative_risk(as_span(d), yhat, s); },
        py::arg("draws"), py::arg("yhat"), py::arg("true_spec"));
    py::class_<RiskMatrix>(m, "RiskMatrix")
        .def_readonly("region_ids", &RiskMatrix::region_ids)
        .def_readonly("true_losses", &RiskMatrix::true_losses)
        .def_readonly("predictor_labels", &RiskMatrix::predictor_labels)
        .def_readonly("rr", &RiskMatrix::rr)
        .def_readonly("iqr", &RiskMatrix::iqr)
        .def_readonly("median_rr", &RiskMatrix::median_rr);
    m.def(
        "risk_matrix",
        [](const PosteriorDraws& d, const std::vector<std::pair<std::string, std::vector<double>>>& predictors,
           const std::vector<LossSpec>& losses) {
            std::vector<LabeledPredictor> lp;
            for (const auto& [label, values] : predictors) lp.push_back({label, values});
            return risk_matrix(d, lp, losses);
        },
        py::arg("draws"), py::arg("predictors"), py::arg("true_losses"));
}
