#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clubconv/clustering.hpp"
#include "clubconv/error.hpp"
#include "clubconv/logt.hpp"
#include "clubconv/panel.hpp"
#include "clubconv/probit.hpp"
#include "clubconv/report.hpp"
#include "clubconv/simlab.hpp"

namespace py = pybind11;
using namespace clubconv;

namespace {

Panel make_panel(const std::vector<std::string>& codes, const std::vector<int>& periods,
                 const Eigen::MatrixXd& values, bool allow_zero) {
  std::vector<UnitId> units;
  for (const auto& c : codes) units.push_back({c, c});
  return Panel(std::move(units), periods, values,
               allow_zero ? ValuePolicy::NonNegative : ValuePolicy::StrictlyPositive);
}

LogTConfig make_logt(double r, double crit, std::optional<int> bandwidth, const std::string& smoothing,
                     double lam) {
  LogTConfig cfg;
  cfg.r = r;
  cfg.critical_value = crit;
  cfg.hac.bandwidth = bandwidth;
  if (smoothing == "hp") {
    cfg.smoothing.method = SmoothingMethod::HodrickPrescott;
  } else if (smoothing != "none") {
    throw Error(ErrorKind::InvalidConfig, "smoothing must be 'none' or 'hp'");
  }
  cfg.smoothing.lambda = lam;
  return cfg;
}

ClusterConfig make_cluster(double r, double crit, std::optional<int> bandwidth, const std::string& smoothing,
                           double lam, double sieve_c, double core_crit, const std::string& ordering,
                           double fraction) {
  ClusterConfig cfg;
  cfg.logt = make_logt(r, crit, bandwidth, smoothing, lam);
  cfg.sieve_threshold = sieve_c;
  cfg.core_threshold = core_crit;
  if (ordering == "mean_last") {
    cfg.ordering.kind = OrderingKind::MeanLastFraction;
  } else if (ordering != "final") {
    throw Error(ErrorKind::InvalidConfig, "ordering must be 'final' or 'mean_last'");
  }
  cfg.ordering.fraction = fraction;
  return cfg;
}

#define CLUSTER_ARGS                                                                                          \
  py::arg("r") = 0.3, py::arg("crit") = -1.65, py::arg("bandwidth") = py::none(), py::arg("smoothing") = "none", \
      py::arg("lam") = 6.25, py::arg("sieve_c") = 0.0, py::arg("core_crit") = -1.65,                            \
      py::arg("ordering") = "final", py::arg("fraction") = 1.0 / 3.0

}  // namespace

PYBIND11_MODULE(_clubconv, m) {
  m.doc() = "Log-t convergence tests, convergence clubs and club-membership probits";

  static py::exception<Error> error(m, "ClubconvError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Panel>(m, "Panel")
      .def(py::init(&make_panel), py::arg("codes"), py::arg("periods"), py::arg("values"),
           py::arg("allow_zero") = false)
      .def_property_readonly("codes", &Panel::codes)
      .def_property_readonly("periods", &Panel::periods)
      .def_property_readonly("values", &Panel::values)
      .def_property_readonly("n_units", &Panel::n_units)
      .def_property_readonly("n_periods", &Panel::n_periods)
      .def("scaled", &Panel::scaled)
      .def("select_periods", &Panel::select_periods)
      .def("__repr__", [](const Panel& p) {
        std::ostringstream s;
        s << "<Panel " << p.n_units() << " units x " << p.n_periods() << " periods>";
        return s.str();
      });

  m.def(
      "load_panel",
      [](const std::string& text, const std::string& layout, bool lenient, bool allow_zero) {
        LoadOptions opts;
        opts.layout = layout == "long" ? Layout::Long : Layout::Wide;
        opts.lenient = lenient;
        opts.policy = allow_zero ? ValuePolicy::NonNegative : ValuePolicy::StrictlyPositive;
        std::istringstream in(text);
        return load_panel(in, opts);
      },
      py::arg("text"), py::arg("layout") = "wide", py::arg("lenient") = false, py::arg("allow_zero") = false);
  m.def("write_panel_wide", [](const Panel& p) {
    std::ostringstream out;
    write_panel_wide(out, p);
    return out.str();
  });
  m.def(
      "rescale_to_targets",
      [](const Panel& p, const std::map<std::string, double>& targets) {
        return rescale_to_targets(p, TargetVector(targets));
      },
      py::arg("panel"), py::arg("targets"));
  m.def("hp_trend", [](const Eigen::VectorXd& y, double lam) { return hp_trend(y, lam); }, py::arg("series"),
        py::arg("lam") = 6.25);
  m.def(
      "smooth",
      [](const Panel& p, const std::string& method, double lam) {
        return smooth(p, make_logt(0.3, -1.65, std::nullopt, method, lam).smoothing);
      },
      py::arg("panel"), py::arg("method") = "hp", py::arg("lam") = 6.25);

  py::class_<TransitionPaths>(m, "TransitionPaths")
      .def_readonly("h", &TransitionPaths::h)
      .def_readonly("H", &TransitionPaths::H)
      .def_readonly("periods", &TransitionPaths::periods);
  m.def("relative_transitions", &relative_transitions);

  py::class_<LogTResult>(m, "LogTResult")
      .def_readonly("a_hat", &LogTResult::a_hat)
      .def_readonly("b_hat", &LogTResult::b_hat)
      .def_readonly("se_hac", &LogTResult::se_hac)
      .def_readonly("t_stat", &LogTResult::t_stat)
      .def_readonly("alpha_hat", &LogTResult::alpha_hat)
      .def_readonly("r", &LogTResult::r)
      .def_readonly("bandwidth", &LogTResult::bandwidth)
      .def_readonly("degenerate", &LogTResult::degenerate)
      .def_property_readonly("first_t", [](const LogTResult& r) { return r.sample.first_t; })
      .def_property_readonly("count", [](const LogTResult& r) { return r.sample.count; })
      .def_property_readonly("decision", [](const LogTResult& r) { return std::string(to_string(r.decision)); })
      .def_property_readonly("convergence_class", [](const LogTResult& r) { return std::string(to_string(r.cls)); })
      .def_property_readonly("converges",
                             [](const LogTResult& r) { return r.decision == Decision::ConvergenceNotRejected; });

  m.def(
      "newey_west_lrv",
      [](const std::vector<double>& resid, const std::vector<double>& x, int bandwidth) {
        return newey_west_lrv(resid, x, bandwidth);
      },
      py::arg("residuals"), py::arg("regressor"), py::arg("bandwidth"));
  m.def(
      "convergence_test",
      [](const Panel& p, double r, double crit, std::optional<int> bandwidth, const std::string& smoothing,
         double lam) { return convergence_test(p, make_logt(r, crit, bandwidth, smoothing, lam)); },
      py::arg("panel"), py::arg("r") = 0.3, py::arg("crit") = -1.65, py::arg("bandwidth") = py::none(),
      py::arg("smoothing") = "none", py::arg("lam") = 6.25);

  py::class_<Club>(m, "Club").def_readonly("members", &Club::members).def_readonly("result", &Club::result);
  py::class_<MergeTest>(m, "MergeTest")
      .def_readonly("first_club", &MergeTest::first_club)
      .def_readonly("members", &MergeTest::members)
      .def_readonly("result", &MergeTest::result)
      .def_readonly("merged", &MergeTest::merged);
  py::class_<TransitionTest>(m, "TransitionTest")
      .def_readonly("units", &TransitionTest::units)
      .def_readonly("first_club", &TransitionTest::first_club)
      .def_readonly("result", &TransitionTest::result)
      .def_readonly("heuristic", &TransitionTest::heuristic);
  py::class_<ClubPartition>(m, "ClubPartition")
      .def_readonly("clubs", &ClubPartition::clubs)
      .def_readonly("divergent", &ClubPartition::divergent)
      .def_readonly("merge_tests", &ClubPartition::merge_tests)
      .def_readonly("transition_tests", &ClubPartition::transition_tests)
      .def("club_of", &ClubPartition::club_of)
      .def_property_readonly("memberships", [](const ClubPartition& p) {
        std::vector<std::vector<std::string>> out;
        for (const auto& c : p.clubs) out.push_back(c.members);
        return out;
      });

  m.def(
      "identify_clubs",
      [](const Panel& p, double r, double crit, std::optional<int> bw, const std::string& smoothing, double lam,
         double sieve_c, double core_crit, const std::string& ordering, double fraction) {
        return identify_clubs(p, make_cluster(r, crit, bw, smoothing, lam, sieve_c, core_crit, ordering, fraction));
      },
      py::arg("panel"), CLUSTER_ARGS);
  m.def(
      "merge_clubs",
      [](const Panel& p, const ClubPartition& part, double r, double crit, std::optional<int> bw,
         const std::string& smoothing, double lam, double sieve_c, double core_crit, const std::string& ordering,
         double fraction) {
        return merge_clubs(p, part,
                           make_cluster(r, crit, bw, smoothing, lam, sieve_c, core_crit, ordering, fraction));
      },
      py::arg("panel"), py::arg("partition"), CLUSTER_ARGS);
  m.def(
      "transition_test",
      [](const Panel& p, ClubPartition& part, const std::vector<std::string>& subset, double r, double crit,
         std::optional<int> bw, const std::string& smoothing, double lam, double sieve_c, double core_crit,
         const std::string& ordering, double fraction) {
        return transition_test(p, part, subset,
                               make_cluster(r, crit, bw, smoothing, lam, sieve_c, core_crit, ordering, fraction));
      },
      py::arg("panel"), py::arg("partition"), py::arg("subset"), CLUSTER_ARGS);
  m.def("default_transition_subset", &default_transition_subset);

  py::class_<ProbitFit>(m, "ProbitFit")
      .def_readonly("names", &ProbitFit::names)
      .def_readonly("beta", &ProbitFit::beta)
      .def_readonly("cov_robust", &ProbitFit::cov_robust)
      .def_readonly("se", &ProbitFit::se)
      .def_readonly("z", &ProbitFit::z)
      .def_readonly("p_value", &ProbitFit::p_value)
      .def_readonly("loglik", &ProbitFit::loglik)
      .def_readonly("loglik_null", &ProbitFit::loglik_null)
      .def_readonly("mcfadden_r2", &ProbitFit::mcfadden_r2)
      .def_readonly("lr_stat", &ProbitFit::lr_stat)
      .def_readonly("lr_df", &ProbitFit::lr_df)
      .def_readonly("lr_p_value", &ProbitFit::lr_p_value)
      .def_readonly("n", &ProbitFit::n)
      .def_readonly("n_correct", &ProbitFit::n_correct)
      .def_readonly("aic", &ProbitFit::aic)
      .def_readonly("bic", &ProbitFit::bic)
      .def_readonly("iterations", &ProbitFit::iterations);

  py::class_<Classification>(m, "Classification")
      .def_readonly("tp", &Classification::tp)
      .def_readonly("tn", &Classification::tn)
      .def_readonly("fp", &Classification::fp)
      .def_readonly("fn", &Classification::fn)
      .def_readonly("accuracy", &Classification::accuracy);

  m.def(
      "fit_probit",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names,
         bool dof_correction) {
        if (names.empty()) {
          for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j));
        }
        ProbitOptions opts;
        opts.small_sample_correction = dof_correction;
        return fit_probit(DesignMatrix{names, X, y, {}}, opts);
      },
      py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{}, py::arg("dof_correction") = false);
  m.def("predict_prob", [](const ProbitFit& f, const Eigen::VectorXd& x) { return predict_prob(f, x); });
  m.def(
      "classification_table",
      [](const ProbitFit& f, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double threshold) {
        return classification_table(f, DesignMatrix{f.names, X, y, {}}, threshold);
      },
      py::arg("fit"), py::arg("X"), py::arg("y"), py::arg("threshold") = 0.5);

  m.def(
      "generate_panel",
      [](const std::vector<std::tuple<int, double, double, double>>& clubs, int T, double growth, double mu0,
         std::uint64_t seed, bool slowly_varying) {
        DgpConfig cfg;
        for (const auto& [n, delta, alpha, sigma] : clubs) cfg.clubs.push_back({n, delta, alpha, sigma});
        cfg.T = T;
        cfg.growth = growth;
        cfg.mu0 = mu0;
        cfg.seed = seed;
        cfg.slowly_varying = slowly_varying;
        auto sim = generate_panel(cfg);
        return py::make_tuple(sim.panel, sim.membership);
      },
      py::arg("clubs"), py::arg("T") = 40, py::arg("growth") = 0.02, py::arg("mu0") = 10.0, py::arg("seed") = 1,
      py::arg("slowly_varying") = false,
      "clubs: list of (n_units, delta_limit, alpha, noise_sd); returns (panel, true membership)");
  m.def("adjusted_rand_index", &adjusted_rand_index);
}
