#include "arcnp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "arcnp/ar.hpp"
#include "arcnp/gaussian.hpp"
#include "arcnp/parallel.hpp"

namespace arcnp::eval {
namespace {

using nlohmann::json;

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_number(v));
}

void collect(MetricReport& report,
             const std::vector<std::optional<double>>& values) {
  for (const auto& v : values) {
    if (v) {
      report.per_task.push_back(*v);
    } else {
      ++report.n_excluded;
    }
  }
}

double target_count(const Task& task) {
  return static_cast<double>(std::max<std::size_t>(task.targets.size(), 1));
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void summarize(MetricReport& report) {
  const McEstimate est = mean_and_se(report.per_task);
  report.mean = est.estimate;
  report.ci95 = 1.96 * est.standard_error;
}

json MetricReport::to_json() const {
  json per = json::array();
  for (double v : per_task) per.push_back(number(v));
  json doc{{"experiment", experiment},
           {"model", model},
           {"metric", metric},
           {"mean", number(mean)},
           {"ci95", number(ci95)},
           {"n_tasks", n_tasks()},
           {"n_excluded", n_excluded},
           {"per_task", std::move(per)}};
  if (mc_standard_error) doc["mc_standard_error"] = number(*mc_standard_error);
  if (!per_task_se.empty()) {
    json se = json::array();
    for (double v : per_task_se) se.push_back(number(v));
    doc["per_task_se"] = std::move(se);
  }
  return doc;
}

std::string MetricReport::csv_header() {
  return "experiment,model,metric,mean,ci95,n_tasks,n_excluded";
}

std::string MetricReport::csv_row() const {
  std::ostringstream out;
  out << experiment << ',' << model << ',' << metric << ','
      << format_number(mean) << ',' << format_number(ci95) << ',' << n_tasks()
      << ',' << n_excluded;
  return out.str();
}

MetricReport eval_loglik(const TaskDensityFn& density,
                         const std::vector<Task>& tasks, std::size_t threads) {
  for (const Task& task : tasks) {
    if (!task.target_outputs) {
      throw std::invalid_argument("eval_loglik: task without target outputs");
    }
  }
  std::vector<std::optional<double>> values(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    try {
      const double v = density(tasks[i], i) / target_count(tasks[i]);
      if (std::isfinite(v)) values[i] = v;
    } catch (const std::exception&) {
    }
  });
  MetricReport report;
  report.metric = "loglik";
  collect(report, values);
  summarize(report);
  return report;
}

TaskDensityFn marginal_density(const ModelAdapter& model) {
  return [model](const Task& task, std::size_t) {
    const MarginalPrediction pred = model.marginals(task.context, task.targets);
    double total = 0.0;
    for (std::size_t j = 0; j < task.targets.size(); ++j) {
      total += model.log_density(pred, j, (*task.target_outputs)[j]);
    }
    return total;
  };
}

TaskDensityFn ar_density(const ModelAdapter& model, std::uint64_t seed,
                         std::size_t block_size) {
  return [model, seed, block_size](const Task& task, std::size_t index) {
    RngStream rng = RngStream(seed).fork(index);
    return ar::ar_logpdf(model, task.context, task.targets,
                         *task.target_outputs, ar::Ordering::random(rng.next_u64()),
                         block_size);
  };
}

TaskDensityFn trivial_baseline() { return marginal_density(trivial_adapter()); }

MetricReport eval_kl_to_truth(const gp::GpModel& truth, const JointFn& candidate,
                              const std::vector<Task>& tasks,
                              std::size_t threads) {
  std::vector<std::optional<double>> values(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    try {
      const GaussianJoint p = gp::gp_posterior(truth, task.context, task.targets);
      const GaussianJoint q = candidate(task);
      values[i] = gaussian_kl(p, q) / target_count(task);
    } catch (const std::exception&) {
    }
  });
  MetricReport report;
  report.metric = "kl";
  collect(report, values);
  summarize(report);
  return report;
}

MetricReport eval_kl_to_truth_mc(const gp::GpModel& truth,
                                 const CandidateDensityFn& candidate,
                                 const std::vector<Task>& tasks,
                                 std::size_t n_samples, std::uint64_t seed,
                                 std::size_t threads) {
  const RngStream root(seed);
  std::vector<std::optional<double>> values(tasks.size());
  std::vector<double> errors(tasks.size(), 0.0);
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    try {
      const GaussianJoint p = gp::gp_posterior(truth, task.context, task.targets);
      const CholeskyFactor lp = factorize(p.covariance);
      RngStream rng = root.fork(i);
      const McEstimate est = mc_kl(
          [&](const Vector& v) { return gaussian_logpdf(v, p); },
          [&](const Vector& v) { return candidate(task, i, v); },
          [&](RngStream& r) { return sample_gaussian(p.mean, lp, r); },
          n_samples, rng);
      const double n = target_count(task);
      values[i] = est.estimate / n;
      errors[i] = est.standard_error / n;
    } catch (const std::exception&) {
    }
  });
  MetricReport report;
  report.metric = "kl";
  collect(report, values);
  summarize(report);
  double pooled_var = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!values[i]) continue;
    pooled_var += errors[i] * errors[i];
    report.per_task_se.push_back(errors[i]);
  }
  if (!report.per_task.empty()) {
    report.mc_standard_error =
        std::sqrt(pooled_var) / static_cast<double>(report.per_task.size());
  }
  return report;
}

GaussianJoint diagonalize(const GaussianJoint& joint) {
  GaussianJoint out = joint;
  out.covariance = joint.covariance.diagonal().asDiagonal();
  return out;
}

}  // namespace arcnp::eval
