#include "arcnp_cli/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "arcnp/adapter.hpp"
#include "arcnp/ar.hpp"
#include "arcnp/checkpoint.hpp"
#include "arcnp/gaussian.hpp"
#include "arcnp/generators.hpp"
#include "arcnp/gp.hpp"
#include "arcnp/lotka_volterra.hpp"
#include "arcnp/mixture.hpp"
#include "arcnp/parallel.hpp"
#include "arcnp/train.hpp"

namespace arcnp::cli {
namespace {

using nlohmann::json;

// Stream indices forked off the run seed.
constexpr std::uint64_t kTaskStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kOrderingStream = 4;
constexpr std::uint64_t kMcStream = 5;
constexpr std::uint64_t kSampleStream = 6;
constexpr std::uint64_t kRolloutStream = 7;

using Sampler = std::function<Task(RngStream&)>;

template <typename F>
auto in_phase(const std::string& phase, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PhaseError&) {
    throw;
  } catch (const std::exception& e) {
    throw PhaseError(phase, e.what());
  }
}

bool is_gp(gen::ProcessKind p) {
  return p == gen::ProcessKind::EQ || p == gen::ProcessKind::Matern52 ||
         p == gen::ProcessKind::WeaklyPeriodic;
}

struct Context {
  const ExperimentConfig& cfg;
  std::ostream& log;
  RngStream root;
  std::size_t threads;
  ExperimentResult result;
  std::shared_ptr<std::atomic<std::size_t>> overflow =
      std::make_shared<std::atomic<std::size_t>>(0);

  Context(const ExperimentConfig& c, std::ostream& l)
      : cfg(c),
        log(l),
        root(c.seed()),
        threads(static_cast<std::size_t>(c.get_int("threads"))) {}

  bool has(const std::string& key) const { return cfg.values().count(key) > 0; }

  gen::ProcessKind process() const {
    return gen::process_kind_from_string(cfg.get("process"));
  }

  gp::GpModel gp_truth() const {
    gp::GpModel m = gen::default_gp_model(process());
    m.noise_variance = cfg.get_double("noise_variance");
    return m;
  }

  mixture::FunctionMixture function_mixture() const {
    return cfg.experiment() == "mixture-prop1"
               ? mixture::FunctionMixture::illustration()
               : mixture::FunctionMixture::auxiliary();
  }

  gen::TaskSpec task_spec() const {
    gen::TaskSpec spec = gen::TaskSpec::defaults_for(process());
    if (has("min_context")) spec.min_context = cfg.get_int("min_context");
    if (has("max_context")) spec.max_context = cfg.get_int("max_context");
    if (has("num_targets")) spec.num_targets = cfg.get_int("num_targets");
    if (has("lower")) spec.lower = cfg.get_double("lower");
    if (has("upper")) spec.upper = cfg.get_double("upper");
    spec.validate();
    return spec;
  }

  Sampler synthetic_sampler(gen::TaskSpec spec) const {
    const gen::ProcessKind p = spec.process;
    if (is_gp(p)) {
      const gp::GpModel truth = gp_truth();
      return [truth, spec](RngStream& r) { return gen::sample_gp_task(truth, spec, r); };
    }
    if (p == gen::ProcessKind::FunctionMixture) {
      const auto mix = function_mixture();
      return [mix, spec](RngStream& r) {
        return gen::sample_function_mixture_task(mix, spec, r);
      };
    }
    return [spec](RngStream& r) { return gen::sample_task(spec, r); };
  }

  Sampler predprey_sampler() const {
    gen::LotkaVolterraGrid grid;
    grid.substeps = cfg.get_int("lv_substeps");
    const auto drift = cfg.get("lv_drift") == "literal" ? gen::PredatorDrift::Literal
                                                          : gen::PredatorDrift::Classical;
    const std::string split = cfg.get("split");
    gen::PredPreySpec spec;
    spec.min_points = cfg.get_int("min_points");
    spec.max_points = cfg.get_int("max_points");
    return [grid, drift, split, spec](RngStream& r) mutable {
      for (int attempt = 0;; ++attempt) {
        try {
          gen::LotkaVolterraParams params = gen::LotkaVolterraParams::sample(r);
          params.drift = drift;
          const auto traj = gen::simulate_lotka_volterra(params, grid, r);
          gen::PredPreySpec s = spec;
          if (split == "mixed") {
            s.split = static_cast<gen::PredPreySplit>(r.uniform_int(0, 2));
          } else {
            s.split = gen::predprey_split_from_string(split);
          }
          return gen::sample_predprey_task(traj, s, r);
        } catch (const std::runtime_error&) {
          if (attempt >= 15) throw;
        }
      }
    };
  }

  Sampler sampler() const {
    if (cfg.experiment() == "predprey") return predprey_sampler();
    return synthetic_sampler(task_spec());
  }

  std::vector<Task> draw_tasks(const Sampler& s, std::size_t n,
                               std::uint64_t stream) const {
    RngStream rng = root.fork(stream);
    std::vector<Task> tasks;
    tasks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) tasks.push_back(s(rng));
    return tasks;
  }

  std::size_t eval_tasks() const {
    return static_cast<std::size_t>(cfg.get_int("eval_tasks"));
  }

  std::size_t block_size() const {
    return has("block_size") ? static_cast<std::size_t>(cfg.get_int("block_size")) : 1;
  }

  ar::Ordering ordering(std::size_t index) const {
    if (cfg.get("ordering") == "left-to-right") return ar::Ordering::left_to_right();
    RngStream r = root.fork(kOrderingStream).fork(index);
    return ar::Ordering::random(r.next_u64());
  }

  std::size_t training_max_context() const {
    if (cfg.experiment() == "predprey") {
      return 2 * static_cast<std::size_t>(cfg.get_int("max_points"));
    }
    return static_cast<std::size_t>(task_spec().max_context);
  }

  void attach_warning(ModelAdapter& a) const {
    auto counter = overflow;
    std::ostream* out = &log;
    auto guard = std::make_shared<std::mutex>();
    a.warn = [counter, out, guard](const std::string& msg) {
      if (counter->fetch_add(1) == 0) {
        std::lock_guard lock(*guard);
        *out << msg << " (further warnings counted only)\n";
      }
    };
  }
};

struct Model {
  ModelAdapter adapter;
  std::string label;
};

Model ideal_model(Context& ctx) {
  const gen::ProcessKind p = ctx.process();
  if (is_gp(p)) return {gp_ideal_cnp_adapter(ctx.gp_truth()), "ideal-cnp"};
  if (p == gen::ProcessKind::FunctionMixture) {
    return {mixture_ideal_cnp_adapter(ctx.function_mixture()), "ideal-cnp"};
  }
  throw PhaseError("model", "no ideal oracle for this process");
}

Model obtain_model(Context& ctx) {
  const std::string source = ctx.cfg.get("model_source");
  if (source == "ideal-oracle") return in_phase("model", [&] { return ideal_model(ctx); });
  const OutputTransform transform =
      output_transform_from_string(ctx.cfg.get("transform"));

  if (source == "load-checkpoint") {
    return in_phase("load-checkpoint", [&] {
      auto ck = nn::load_checkpoint(ctx.cfg.get("checkpoint"));
      const int expected = ctx.cfg.experiment() == "predprey" ? 2 : 1;
      if (ck.model.config().num_channels != expected) {
        throw std::runtime_error("checkpoint has the wrong number of channels");
      }
      std::optional<std::size_t> max_ctx;
      if (ck.metadata.max_training_context > 0) {
        max_ctx = static_cast<std::size_t>(ck.metadata.max_training_context);
      }
      auto model = std::make_shared<const nn::CnpModel>(std::move(ck.model));
      Model m{cnp_adapter(model, transform, max_ctx), "cnp"};
      ctx.attach_warning(m.adapter);
      return m;
    });
  }

  return in_phase("train", [&] {
    const auto& cfg = ctx.cfg;
    nn::CnpConfig arch;
    arch.encoding_dim = cfg.get_int("encoding_dim");
    const int w = cfg.get_int("hidden_width");
    arch.encoder_hidden = {w, w, w};
    arch.decoder_hidden = {w, w, w, w};
    arch.num_channels = cfg.experiment() == "predprey" ? 2 : 1;
    RngStream init = ctx.root.fork(kInitStream);
    nn::CnpModel model = nn::CnpModel::initialized(arch, init);

    nn::TrainConfig tc;
    tc.learning_rate = cfg.get_double("learning_rate");
    tc.batch_size = cfg.get_int("batch_size");
    tc.epochs = cfg.get_int("epochs");
    tc.tasks_per_epoch = cfg.get_int("tasks_per_epoch");
    tc.validation_tasks = cfg.get_int("validation_tasks");
    tc.seed = ctx.root.fork(kTrainStream).seed();

    const Sampler base = ctx.sampler();
    auto sampler = [&](RngStream& r) { return transform_task(base(r), transform); };
    nn::TrainResult tr = nn::train(std::move(model), sampler, tc,
                                   [&](const nn::EpochMetrics& m) {
                                     ctx.log << "epoch " << m.epoch << " train_loss "
                                             << eval::format_number(m.train_loss)
                                             << " val_lcb "
                                             << eval::format_number(m.validation_lcb)
                                             << '\n';
                                     ctx.result.training.push_back(
                                         {{"epoch", m.epoch},
                                          {"train_loss", m.train_loss},
                                          {"validation_mean", m.validation_mean},
                                          {"validation_lcb", m.validation_lcb}});
                                   });
    if (tr.best_epoch < 0) throw std::runtime_error("training produced no finite epoch");
    if (tr.aborted) ctx.log << "training stopped early on a non-finite loss\n";

    const std::size_t max_ctx = ctx.training_max_context();
    const std::string save = cfg.get("save_checkpoint");
    if (!save.empty()) {
      nn::Checkpoint ck{tr.model, {}};
      ck.metadata.epochs_trained = static_cast<int>(tr.history.size());
      ck.metadata.best_epoch = tr.best_epoch;
      ck.metadata.validation_lcb =
          tr.history[static_cast<std::size_t>(tr.best_epoch)].validation_lcb;
      ck.metadata.seed = cfg.seed();
      ck.metadata.max_training_context = static_cast<int>(max_ctx);
      ck.metadata.process =
          cfg.experiment() == "predprey" ? "predprey" : cfg.get("process");
      nn::save_checkpoint(ck, save);
    }
    auto shared = std::make_shared<const nn::CnpModel>(std::move(tr.model));
    Model m{cnp_adapter(shared, transform, max_ctx), "cnp"};
    ctx.attach_warning(m.adapter);
    return m;
  });
}

json trajectory_json(const std::string& model, std::size_t task,
                     const ar::Trajectory& traj) {
  json xs = json::array();
  json ys = json::array();
  json ch = json::array();
  for (const auto& p : traj.points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
    ch.push_back(p.channel);
  }
  return {{"model", model}, {"task", task}, {"x", xs}, {"y", ys},
          {"channel", ch},  {"order", traj.permutation}};
}

void add_samples(Context& ctx, const Model& model, const std::vector<Task>& tasks) {
  const auto n = std::min<std::size_t>(tasks.size(),
                                       static_cast<std::size_t>(ctx.cfg.get_int("samples")));
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng = ctx.root.fork(kSampleStream).fork(i);
    const auto traj = ar::ar_sample(model.adapter, tasks[i].context, tasks[i].targets,
                                    ctx.ordering(i), ctx.block_size(), rng);
    ctx.result.samples.push_back(trajectory_json(model.label, i, traj));
  }
}

eval::TaskDensityFn ar_task_density(const Context& ctx, const ModelAdapter& a) {
  return [&ctx, a](const Task& t, std::size_t i) {
    return ar::ar_logpdf(a, t.context, t.targets, *t.target_outputs, ctx.ordering(i),
                         ctx.block_size());
  };
}

eval::MetricReport labelled(eval::MetricReport r, const Context& ctx,
                            const std::string& model, const std::string& metric = {}) {
  r.experiment = ctx.cfg.experiment();
  r.model = model;
  if (!metric.empty()) r.metric = metric;
  return r;
}

eval::MetricReport paired_gain(const Context& ctx, const eval::TaskDensityFn& better,
                               const eval::TaskDensityFn& base,
                               const std::vector<Task>& tasks,
                               const std::string& model) {
  auto diff = [&](const Task& t, std::size_t i) { return better(t, i) - base(t, i); };
  return labelled(eval::eval_loglik(diff, tasks, ctx.threads), ctx, model, "loglik-gain");
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? 0.5 * (a + b)
                    : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<Input> as_inputs(const std::vector<double>& xs) {
  std::vector<Input> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back({x, 0});
  return out;
}

void run_eq_kl(Context& ctx) {
  const auto tasks = in_phase("generate", [&] {
    return ctx.draw_tasks(ctx.sampler(), ctx.eval_tasks(), kTaskStream);
  });
  std::optional<Model> trained;
  if (ctx.cfg.get("model_source") != "ideal-oracle") trained = obtain_model(ctx);

  in_phase("evaluate", [&] {
    const gp::GpModel truth = ctx.gp_truth();
    const auto mc = static_cast<std::size_t>(ctx.cfg.get_int("mc_samples"));
    const std::uint64_t mc_seed = ctx.root.fork(kMcStream).seed();
    auto& out = ctx.result.reports;
    out.push_back(labelled(
        eval::eval_kl_to_truth(
            truth,
            [&](const Task& t) { return gp::ideal_gnp_gp(truth, t.context, t.targets); },
            tasks, ctx.threads),
        ctx, "exact"));
    out.push_back(labelled(
        eval::eval_kl_to_truth(
            truth,
            [&](const Task& t) {
              return eval::diagonalize(gp::ideal_gnp_gp(truth, t.context, t.targets));
            },
            tasks, ctx.threads),
        ctx, "diagonal-gp"));
    auto ar_candidate = [&](const ModelAdapter& a) {
      return [&ctx, a](const Task& t, std::size_t i, const Vector& v) {
        return ar::ar_logpdf(a, t.context, t.targets,
                             std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                             ctx.ordering(i), ctx.block_size());
      };
    };
    const ModelAdapter ideal = gp_ideal_cnp_adapter(truth);
    out.push_back(labelled(eval::eval_kl_to_truth_mc(truth, ar_candidate(ideal), tasks, mc,
                                                     mc_seed, ctx.threads),
                           ctx, "ar-ideal-cnp"));
    if (trained) {
      const ModelAdapter& a = trained->adapter;
      out.push_back(labelled(
          eval::eval_kl_to_truth(
              truth,
              [&](const Task& t) {
                const auto pred = a.marginals(t.context, t.targets);
                return GaussianJoint{pred.means, Matrix(pred.variances.asDiagonal())};
              },
              tasks, ctx.threads),
          ctx, trained->label));
      out.push_back(labelled(eval::eval_kl_to_truth_mc(truth, ar_candidate(a), tasks, mc,
                                                       mc_seed, ctx.threads),
                             ctx, trained->label + "-ar"));
    }
    add_samples(ctx, {ideal, "ideal-cnp"}, tasks);
  });
}

void run_loglik(Context& ctx) {
  const auto tasks = in_phase("generate", [&] {
    return ctx.draw_tasks(ctx.sampler(), ctx.eval_tasks(), kTaskStream);
  });
  const Model model = obtain_model(ctx);
  in_phase("evaluate", [&] {
    auto& out = ctx.result.reports;
    const auto plain = eval::marginal_density(model.adapter);
    const auto ar = ar_task_density(ctx, model.adapter);
    out.push_back(labelled(eval::eval_loglik(eval::trivial_baseline(), tasks, ctx.threads),
                           ctx, "trivial"));
    out.push_back(labelled(eval::eval_loglik(plain, tasks, ctx.threads), ctx, model.label));
    out.push_back(
        labelled(eval::eval_loglik(ar, tasks, ctx.threads), ctx, model.label + "-ar"));
    out.push_back(paired_gain(ctx, ar, plain, tasks, model.label + "-ar-gain"));
    add_samples(ctx, model, tasks);
  });
  if (ctx.overflow->load() > 0) {
    ctx.log << ctx.overflow->load()
            << " rollouts exceeded the training context size\n";
  }
}

void run_mixture_prop1(Context& ctx) {
  const auto mix = ctx.function_mixture();
  const auto targets = as_inputs(ctx.cfg.get_list("target_inputs"));
  const auto contexts = in_phase("generate", [&] {
    gen::TaskSpec spec = ctx.task_spec();
    spec.num_targets = 1;
    return ctx.draw_tasks(ctx.synthetic_sampler(spec), ctx.eval_tasks(), kTaskStream);
  });
  in_phase("evaluate", [&] {
    const ModelAdapter ideal = mixture_ideal_cnp_adapter(mix);
    const auto n_mc = static_cast<std::size_t>(ctx.cfg.get_int("mc_samples"));
    const double nt = static_cast<double>(targets.size());
    const std::size_t n = contexts.size();
    std::vector<McEstimate> kl_ar(n), kl_gnp(n), diff(n);
    parallel_for(n, ctx.threads, [&](std::size_t i) {
      const auto& c = contexts[i].context;
      const GaussianJoint gnp = mixture::ideal_gnp_mixture(mix, c, targets);
      const ar::Ordering ord = ctx.ordering(i);
      RngStream rng = ctx.root.fork(kMcStream).fork(i);
      std::vector<double> a(n_mc), g(n_mc), d(n_mc);
      for (std::size_t s = 0; s < n_mc; ++s) {
        const Vector v = mixture::sample_mixture_predictive(mix, c, targets, rng);
        const std::span<const double> vs(v.data(), targets.size());
        const double lp = mixture::mixture_true_logpdf(mix, c, targets, vs);
        const double la = ar::ar_logpdf(ideal, c, targets, vs, ord);
        const double lg = gaussian_logpdf(v, gnp);
        if (!std::isfinite(lp) || !std::isfinite(la) || !std::isfinite(lg)) {
          throw NonFiniteError(s, "non-finite density in draw " + std::to_string(s));
        }
        a[s] = (lp - la) / nt;
        g[s] = (lp - lg) / nt;
        d[s] = a[s] - g[s];
      }
      kl_ar[i] = mean_and_se(a);
      kl_gnp[i] = mean_and_se(g);
      diff[i] = mean_and_se(d);
    });
    auto report = [&](const std::vector<McEstimate>& est, const std::string& model,
                      const std::string& metric, bool combined) {
      eval::MetricReport r;
      double pooled = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        r.per_task.push_back(est[i].estimate);
        const double se =
            combined ? std::hypot(kl_ar[i].standard_error, kl_gnp[i].standard_error)
                     : est[i].standard_error;
        r.per_task_se.push_back(se);
        pooled += se * se;
      }
      eval::summarize(r);
      r.mc_standard_error = std::sqrt(pooled) / static_cast<double>(n);
      return labelled(r, ctx, model, metric);
    };
    auto& out = ctx.result.reports;
    out.push_back(report(kl_ar, "ar-ideal-cnp", "kl", false));
    out.push_back(report(kl_gnp, "ideal-gnp", "kl", false));
    out.push_back(report(diff, "ar-minus-gnp", "kl-diff", true));
    std::vector<Task> sample_tasks;
    for (const auto& t : contexts) sample_tasks.push_back({t.context, targets, {}});
    add_samples(ctx, {ideal, "ideal-cnp"}, sample_tasks);
  });
}

void run_smooth_samples(Context& ctx) {
  const Model model = obtain_model(ctx);
  in_phase("evaluate", [&] {
    const gp::GpModel truth = ctx.gp_truth();
    const double lo = ctx.cfg.get_double("lower");
    const double hi = ctx.cfg.get_double("upper");
    const auto query =
        as_inputs(linspace(lo, hi, static_cast<std::size_t>(ctx.cfg.get_int("query_points"))));
    const std::size_t seeds = ctx.eval_tasks();
    const auto sizes = ctx.cfg.get_list("grid_sizes");
    const auto n_samples = static_cast<std::size_t>(ctx.cfg.get_int("samples"));
    for (double size : sizes) {
      const auto n = static_cast<std::size_t>(size);
      const auto grid = as_inputs(linspace(lo, hi, n));
      std::vector<double> mse(seeds);
      std::vector<json> lines(std::min(seeds, n_samples));
      parallel_for(seeds, ctx.threads, [&](std::size_t s) {
        RngStream rng = ctx.root.fork(kRolloutStream + n).fork(s);
        const auto ss = ar::smooth_sample(model.adapter, {}, grid, query, rng,
                                          ctx.ordering(s));
        const GaussianJoint post =
            gp::gp_posterior(truth, ss.noisy.points, query, /*include_noise=*/false);
        const Vector f = sample_gaussian(post, rng);
        double acc = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) {
          const double d = ss.denoised[j] - f[static_cast<Eigen::Index>(j)];
          acc += d * d;
        }
        mse[s] = acc / static_cast<double>(query.size());
        if (s < lines.size()) {
          json line = trajectory_json(model.label, s, ss.noisy);
          line["grid_size"] = n;
          line["query_x"] = inputs_of(query);
          line["denoised"] = ss.denoised;
          lines[s] = std::move(line);
        }
      });
      eval::MetricReport r;
      r.per_task = std::move(mse);
      eval::summarize(r);
      ctx.result.reports.push_back(
          labelled(r, ctx, model.label, "mse-n" + std::to_string(n)));
      for (auto& l : lines) ctx.result.samples.push_back(std::move(l));
    }
  });
}

void run_auxar(Context& ctx) {
  const auto tasks = in_phase("generate", [&] {
    return ctx.draw_tasks(ctx.sampler(), ctx.eval_tasks(), kTaskStream);
  });
  const Model model = obtain_model(ctx);
  in_phase("evaluate", [&] {
    const auto r_len = static_cast<std::size_t>(ctx.cfg.get_int("aux_length"));
    const auto m_count = static_cast<std::size_t>(ctx.cfg.get_int("aux_count"));
    const auto aux_inputs =
        ar::uniform_inputs(ctx.cfg.get_double("lower"), ctx.cfg.get_double("upper"));
    auto density = [&](std::size_t len, std::size_t count) {
      return [&, len, count](const Task& t, std::size_t i) {
        RngStream rng = ctx.root.fork(kRolloutStream).fork(i);
        const auto mm = ar::aux_ar_predict(model.adapter, t.context, t.targets, aux_inputs,
                                           len, count, rng);
        double total = 0.0;
        for (std::size_t j = 0; j < t.targets.size(); ++j) {
          total += mm.log_density(j, (*t.target_outputs)[j]);
        }
        return total;
      };
    };
    const eval::TaskDensityFn plain = density(0, 1);
    const eval::TaskDensityFn aux = density(r_len, m_count);
    auto& out = ctx.result.reports;
    out.push_back(labelled(eval::eval_loglik(plain, tasks, ctx.threads), ctx, model.label));
    out.push_back(labelled(eval::eval_loglik(aux, tasks, ctx.threads), ctx,
                           model.label + "-auxar"));
    out.push_back(paired_gain(ctx, aux, plain, tasks, model.label + "-auxar-gain"));
  });
}

void run_ordering_spread(Context& ctx) {
  const Model model = obtain_model(ctx);
  in_phase("evaluate", [&] {
    const auto n_orderings = static_cast<std::size_t>(ctx.cfg.get_int("n_orderings"));
    for (double c : ctx.cfg.get_list("spread_contexts")) {
      gen::TaskSpec spec = ctx.task_spec();
      spec.min_context = spec.max_context = static_cast<int>(c);
      const auto tasks = ctx.draw_tasks(ctx.synthetic_sampler(spec), ctx.eval_tasks(),
                                        kTaskStream + 100 + static_cast<std::uint64_t>(c));
      std::vector<double> stds(tasks.size());
      parallel_for(tasks.size(), ctx.threads, [&](std::size_t i) {
        RngStream rng = ctx.root.fork(kOrderingStream + 100).fork(i);
        stds[i] = ar::ar_loglik_spread(model.adapter, tasks[i], n_orderings, rng).stddev;
      });
      eval::MetricReport r;
      r.per_task = std::move(stds);
      eval::summarize(r);
      ctx.result.reports.push_back(labelled(
          r, ctx, model.label, "spread-c" + std::to_string(static_cast<int>(c))));
    }
  });
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ExperimentResult execute(const ExperimentConfig& config, std::ostream& log) {
  Context ctx(config, log);
  const std::string& e = config.experiment();
  if (e == "eq-kl") {
    run_eq_kl(ctx);
  } else if (e == "sawtooth-loglik" || e == "predprey") {
    run_loglik(ctx);
  } else if (e == "mixture-prop1") {
    run_mixture_prop1(ctx);
  } else if (e == "smooth-samples") {
    run_smooth_samples(ctx);
  } else if (e == "auxar") {
    run_auxar(ctx);
  } else if (e == "ordering-spread") {
    run_ordering_spread(ctx);
  } else {
    throw PhaseError("config", "unknown experiment " + e);
  }
  return std::move(ctx.result);
}

json manifest_json(const ExperimentConfig& config, const std::string& status,
                   const std::string& phase, const std::string& error) {
  json cfg = json::object();
  for (const auto& [k, v] : config.values()) cfg[k] = v;
  json doc{{"format", "arcnp-run-manifest"},
           {"library_version", ARCNP_VERSION},
           {"experiment", config.experiment()},
           {"seed", config.seed()},
           {"config", std::move(cfg)},
           {"status", status}};
  if (!phase.empty()) doc["phase"] = phase;
  if (!error.empty()) doc["error"] = error;
  return doc;
}

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
  const std::filesystem::path dir = config.get("out");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    log << "error: cannot create output directory " << dir << ": " << ec.message()
        << '\n';
    return 2;
  }
  for (const char* f : {"metrics.csv", "metrics.json", "samples.jsonl"}) {
    std::filesystem::remove(dir / f, ec);
  }

  std::string phase = "setup";
  try {
    ExperimentResult result = execute(config, log);
    phase = "write";
    std::ostringstream csv;
    csv << eval::MetricReport::csv_header() << '\n';
    json reports = json::array();
    for (const auto& r : result.reports) {
      csv << r.csv_row() << '\n';
      reports.push_back(r.to_json());
    }
    json metrics{{"experiment", config.experiment()},
                 {"seed", config.seed()},
                 {"library_version", ARCNP_VERSION},
                 {"reports", std::move(reports)}};
    if (!result.training.empty()) metrics["training"] = std::move(result.training);
    std::ostringstream samples;
    for (const auto& s : result.samples) samples << s.dump() << '\n';
    write_text(dir / "metrics.csv", csv.str());
    write_text(dir / "metrics.json", metrics.dump(2) + "\n");
    write_text(dir / "samples.jsonl", samples.str());
    write_text(dir / "manifest.json", manifest_json(config, "ok", "", "").dump(2) + "\n");
    for (const auto& r : result.reports) {
      log << r.model << ' ' << r.metric << ' ' << eval::format_number(r.mean) << " +- "
          << eval::format_number(r.ci95) << '\n';
    }
    return 0;
  } catch (const PhaseError& e) {
    phase = e.phase();
    log << "error in phase " << phase << ": " << e.what() << '\n';
    try {
      write_text(dir / "manifest.json",
                 manifest_json(config, "failed", phase, e.what()).dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return 1;
  } catch (const std::exception& e) {
    log << "error in phase " << phase << ": " << e.what() << '\n';
    try {
      write_text(dir / "manifest.json",
                 manifest_json(config, "failed", phase, e.what()).dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return 1;
  }
}

std::string describe(const ExperimentConfig& config) {
  std::ostringstream out;
  const std::string& e = config.experiment();
  const std::string source = config.get("model_source");
  out << "experiment: " << e << '\n';
  out << "seed: " << config.seed() << (config.is_default("seed") ? " (default)" : "")
      << '\n';
  out << "model source: " << source << '\n';
  out << "output directory: " << config.get("out") << '\n';
  out << "phases:\n";
  int step = 1;
  auto phase = [&](const std::string& text) { out << "  " << step++ << ". " << text << '\n'; };
  const std::string n = config.get("eval_tasks");
  if (e == "eq-kl" || e == "sawtooth-loglik" || e == "auxar") {
    phase("generate " + n + " " + config.get("process") + " tasks (contexts " +
          config.get("min_context") + ".." + config.get("max_context") + ", " +
          config.get("num_targets") + " targets)");
  } else if (e == "mixture-prop1") {
    phase("generate " + n + " function-mixture contexts (sizes " +
          config.get("min_context") + ".." + config.get("max_context") +
          ") with targets at " + config.get("target_inputs"));
  } else if (e == "predprey") {
    phase("generate " + n + " predator-prey tasks (split " + config.get("split") + ")");
  }
  if (source == "train-fresh") {
    phase("train a CNP for " + config.get("epochs") + " epochs of " +
          config.get("tasks_per_epoch") + " tasks (lr " + config.get("learning_rate") +
          ", batch " + config.get("batch_size") + ")");
  } else if (source == "load-checkpoint") {
    phase("load checkpoint " + config.get("checkpoint"));
  } else {
    phase("build the ideal CNP oracle");
  }
  if (e == "eq-kl") {
    phase("exact KL to truth for exact and diagonal-GP predictives");
    phase("Monte-Carlo KL (" + config.get("mc_samples") + " draws) for AR predictives");
  } else if (e == "sawtooth-loglik" || e == "predprey") {
    phase("log-likelihood of trivial, non-AR and AR predictives");
  } else if (e == "mixture-prop1") {
    phase("Monte-Carlo KL (" + config.get("mc_samples") +
          " draws) for AR ideal CNP and ideal GNP, and their difference");
  } else if (e == "smooth-samples") {
    phase("smooth samples over " + n + " seeds at grid sizes " + config.get("grid_sizes"));
  } else if (e == "auxar") {
    phase("auxiliary AR with R=" + config.get("aux_length") + ", M=" +
          config.get("aux_count") + " against R=0");
  } else if (e == "ordering-spread") {
    phase("spread over " + config.get("n_orderings") + " orderings for " + n +
          " tasks at context sizes " + config.get("spread_contexts"));
  }
  phase("write metrics.csv, metrics.json, samples.jsonl, manifest.json");
  out << "config:\n";
  for (const auto& [k, v] : config.values()) {
    out << "  " << k << " = " << v << (config.is_default(k) ? "  (default)" : "") << '\n';
  }
  return out.str();
}

}  // namespace arcnp::cli
