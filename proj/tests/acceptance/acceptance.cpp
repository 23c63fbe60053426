// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ptloss Authors

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Reference values come from tests/support/oracles.hpp, never from the library.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ptloss/data.hpp"
#include "ptloss/distill.hpp"
#include "ptloss/equivalence.hpp"
#include "ptloss/io.hpp"
#include "ptloss/losses.hpp"
#include "ptloss/nn.hpp"
#include "ptloss/proxy.hpp"
#include "ptloss/rng.hpp"
#include "ptloss/selection.hpp"
#include "ptloss/series.hpp"

using namespace ptloss;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome loss_fallback() {
  Rng rng(101);
  const std::size_t sizes[] = {2, 3, 10};
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t c = sizes[i % 3];
    const ProbVector t = testing::random_probs(rng, c);
    const ProbVector s = testing::random_probs(rng, c);
    const auto order = 1 + rng.below(5);
    const double pt = pt_loss(t, s, PerturbationConfig::zero(c, order));
    worst = std::max(worst, std::abs(pt - kl_loss(t, s)));
    worst = std::max(worst, std::abs(pt - oracle::kl(testing::as_vector(t), testing::as_vector(s))));
  }
  return {worst <= 1e-12, fmt::format("max |pt(eps=0) - kl| = {:.3e} over 10000 triples", worst)};
}

Outcome gradients() {
  Rng rng(102);
  double loss_level = 0.0;
  double network_level = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t c = 2 + rng.below(4);
    const std::size_t order = 1 + rng.below(5);
    const auto eps = testing::random_eps(rng, c, order, 10.0);
    const PerturbationConfig cfg(eps, false);
    const ProbVector t = testing::random_probs(rng, c);
    const auto z = testing::random_logits(rng, c, 2.0);

    const auto grad = pt_loss_grad(t, LogitVector(z), cfg).gradient.value();
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& v) { return oracle::pt(testing::as_vector(t), oracle::softmax(v), eps); }, z,
        1e-6);
    loss_level = std::max(loss_level, oracle::relative_error(grad, fd, 1e-3));

    const std::vector<std::size_t> dims{3, 4, c};
    const MlpModel model = init_mlp(dims, 1000 + static_cast<std::uint64_t>(i));
    Matrix x(3, 3);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    std::vector<ProbVector> targets;
    for (int r = 0; r < 3; ++r) targets.push_back(testing::random_probs(rng, c));
    const auto loss = LossFunction::pt(cfg);
    const auto analytic = flatten_gradient(loss_and_gradient(model, x, targets, loss));
    const auto numeric = oracle::central_difference(
        [&](const std::vector<double>& p) {
          MlpModel m = model;
          assign_parameters(m, p);
          const Matrix logits = forward_batch(m, x);
          double total = 0.0;
          for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            std::vector<double> zr(logits.row(r).data(), logits.row(r).data() + logits.cols());
            total += oracle::pt(testing::as_vector(targets[static_cast<std::size_t>(r)]), oracle::softmax(zr), eps);
          }
          return total / static_cast<double>(logits.rows());
        },
        flatten_parameters(model), 1e-5);
    network_level = std::max(network_level, oracle::relative_error(analytic, numeric, 1e-3));
  }
  return {loss_level <= 1e-5 && network_level <= 1e-4,
          fmt::format("max relative error {:.3e} (loss), {:.3e} (network) over 200 configurations", loss_level,
                      network_level)};
}

Outcome series_bound() {
  std::size_t violations = 0;
  std::size_t points = 0;
  for (int i = 5; i <= 100; ++i) {
    const double x = static_cast<double>(i) / 100.0;
    for (std::size_t m = 1; m <= 100; ++m) {
      ++points;
      if (std::abs(std::log(x) - maclaurin_log(x, m)) > truncation_bound(x, m)) ++violations;
    }
  }
  return {violations == 0, fmt::format("{} violations over {} grid points", violations, points)};
}

Outcome equivalence() {
  EquivalenceOptions opts;
  opts.seed = 104;
  opts.order = 200;
  opts.trials = 100;
  opts.parameter = 0.1;
  const auto ls = verify_equivalence(EquivalenceMethod::label_smoothing, opts);
  opts.parameter = 2.0;
  const auto focal = verify_equivalence(EquivalenceMethod::focal, opts);
  const auto temp = verify_equivalence(EquivalenceMethod::temperature, opts);

  // Independent constant check: pt(t, s, eps_ls) - KL(t_ls || s) = H(t_ls) - H(t).
  Rng rng(105);
  double constant_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t c = 2 + rng.below(3);
    const ProbVector t = testing::random_probs(rng, c, 0.3, 0.7);
    const auto eps = ls_coefficients(t, 0.1, 200);
    auto tv = testing::as_vector(t);
    std::vector<double> smoothed(c);
    for (std::size_t k = 0; k < c; ++k) smoothed[k] = 0.9 * tv[k] + 0.1 / static_cast<double>(c);
    const double analytic = oracle::entropy(smoothed) - oracle::entropy(tv);
    const ProbVector s = testing::random_probs(rng, c, 0.3, 0.7);
    const double diff = pt_loss(t, s, eps) - oracle::kl(smoothed, testing::as_vector(s));
    constant_worst = std::max(constant_worst, std::abs(diff - analytic));
  }

  // Binary temperature containment against the directly computed scaled KL.
  double temp_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const LogitVector zt(testing::random_logits(rng, 2, 2.0));
    const LogitVector zs(testing::random_logits(rng, 2, 2.0));
    const double tau = rng.uniform(0.5, 4.0);
    const auto eps = fit_temperature_coefficients(zt, zs, tau, 3);
    const double target = oracle::kl(oracle::softmax({zt[0] / tau, zt[1] / tau}),
                                     oracle::softmax({zs[0] / tau, zs[1] / tau}));
    temp_worst = std::max(temp_worst, std::abs(pt_loss(softmax(zt), softmax(zs), eps) - target));
  }

  const bool pass = ls.max_abs_deviation <= 1e-6 && focal.max_abs_deviation <= 1e-6 && ls.constant_error <= 1e-6 &&
                    constant_worst <= 1e-6 && temp.max_abs_deviation <= 1e-6 && temp_worst <= 1e-6;
  return {pass, fmt::format("ls dev {:.3e}, focal dev {:.3e}, ls constant err {:.3e} / {:.3e}, temperature dev "
                            "{:.3e} / {:.3e}",
                            ls.max_abs_deviation, focal.max_abs_deviation, ls.constant_error, constant_worst,
                            temp.max_abs_deviation, temp_worst)};
}

Outcome proxy_oracle() {
  Rng rng(106);
  double value_worst = 0.0;
  double q_worst = 0.0;
  bool all_converged = true;
  for (int i = 0; i < 50; ++i) {
    const double t0 = rng.uniform(0.05, 0.95);
    const std::vector<double> tv{t0, 1.0 - t0};
    const auto eps = testing::random_eps(rng, 2, 1 + rng.below(3), 2.0);
    const auto sol = solve_proxy_example(ProbVector(tv), PerturbationConfig(eps, false));
    all_converged = all_converged && sol.converged;
    const auto grid = oracle::binary_proxy_grid(tv, eps);
    value_worst = std::max(value_worst, std::abs(oracle::pt(tv, testing::as_vector(sol.proxy), eps) - grid.value));
    q_worst = std::max(q_worst, std::abs(sol.proxy[0] - grid.q0));
  }
  double identity_worst = 0.0;
  for (const std::size_t c : {2u, 3u, 10u}) {
    for (int i = 0; i < 20; ++i) {
      const ProbVector t = testing::random_probs(rng, c);
      const auto sol = solve_proxy_example(t, PerturbationConfig::zero(c, 3));
      for (std::size_t k = 0; k < c; ++k) identity_worst = std::max(identity_worst, std::abs(sol.proxy[k] - t[k]));
    }
  }
  return {all_converged && value_worst <= 1e-6 && q_worst <= 1e-4 && identity_worst <= 1e-8,
          fmt::format("objective gap {:.3e}, solution gap {:.3e}, eps=0 identity gap {:.3e}", value_worst, q_worst,
                      identity_worst)};
}

/// Squared mean L2 distance to the labels plus mean squared entropy, for the teacher itself.
double oracle_zero_score(const std::vector<ProbVector>& teacher, const std::vector<std::size_t>& labels) {
  double dist = 0.0, ent = 0.0;
  for (std::size_t n = 0; n < teacher.size(); ++n) {
    double sq = 0.0;
    for (std::size_t c = 0; c < teacher[n].size(); ++c) {
      const double d = teacher[n][c] - (c == labels[n] ? 1.0 : 0.0);
      sq += d * d;
    }
    dist += std::sqrt(sq);
    const double h = oracle::entropy(testing::as_vector(teacher[n]));
    ent += h * h;
  }
  const double count = static_cast<double>(teacher.size());
  return (dist / count) * (dist / count) + ent / count;
}

Outcome quality_guarantee() {
  std::string detail;
  bool pass = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto spec = GaussianMixtureSpec::sample(3, 30, 2.0, 200 + seed);
    const auto data = generate(spec, 4000, {0.5, 0.25, 0.25});
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 10;
    const auto teacher = train_teacher(data, std::vector<std::size_t>{32}, cfg);
    const auto probs = predict_probs(teacher.model, data.validation.inputs);
    SearchSpec search;
    search.seed = seed;
    const auto r = search_coefficients(probs, data.validation.one_hot(3), search);
    const double zero = oracle_zero_score(probs, data.validation.labels);
    const bool ok = r.score.total <= r.baseline_score.total && std::abs(r.baseline_score.total - zero) <= 1e-9;
    pass = pass && ok;
    detail += fmt::format("{}seed {}: {:.6f} <= {:.6f}", seed == 1 ? "" : "; ", seed, r.score.total, zero);
  }
  return {pass, detail};
}

Outcome reproduction() {
  const auto start = std::chrono::steady_clock::now();
  TrainConfig cfg;  // lr 5e-4, batch 32, 100 epochs
  MethodParams kl;
  kl.method = DistillMethod::kl;
  int strictly_better = 0;
  bool within = true;
  bool proxy_closer = true;
  std::string detail;
  GaussianMixtureSpec first_spec;
  LabeledDataset first_data;
  MlpModel first_teacher;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto spec = GaussianMixtureSpec::sample(3, 30, 2.0, seed);
    const auto data = generate(spec, 100000, {0.05, 0.05, 0.9});
    cfg.seed = seed;
    const auto teacher = train_teacher(data, kDefaultHidden, cfg);
    MethodParams pt;
    pt.method = DistillMethod::pt;
    pt.search.max_order = 3;
    pt.search.seed = seed;
    const auto a = distill_student(teacher.model, spec, data, kl, cfg);
    const auto b = distill_student(teacher.model, spec, data, pt, cfg);
    within = within && !b.failed && b.student_test_accuracy >= a.student_test_accuracy - 0.002;
    strictly_better += b.student_test_accuracy > a.student_test_accuracy;
    if (b.proxy_vs_truth) {
      proxy_closer =
          proxy_closer && b.proxy_vs_truth->l2_distance_mean <= b.teacher_metrics.vs_truth.l2_distance_mean;
    }
    detail += fmt::format("seed {}: pt {:.5f} kl {:.5f}; ", seed, b.student_test_accuracy, a.student_test_accuracy);
    if (seed == 1) {
      first_spec = spec;
      first_data = data;
      first_teacher = teacher.model;
    }
  }

  const auto probs = predict_probs(first_teacher, first_data.validation.inputs);
  SearchSpec search;
  search.seed = 1;
  const auto result = search_coefficients(probs, first_data.validation.one_hot(3), search);
  auto configs = trajectory_configs(result, 12);
  // Student accuracy per configuration is averaged over three training seeds;
  // the proxy distances do not depend on the student seed.
  std::vector<double> l2, tvd, acc(configs.size(), 0.0);
  std::size_t point_count = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cfg.seed = seed;
    const auto points = sweep_proxy_teachers(first_teacher, first_spec, first_data, configs, cfg);
    point_count = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (seed == 1) {
        l2.push_back(points[i].proxy_vs_truth.l2_distance_mean);
        tvd.push_back(points[i].proxy_vs_truth.tvd_mean);
      }
      acc[i] += points[i].student_test_accuracy / 3.0;
    }
  }
  const double rho_l2 = oracle::spearman(l2, acc);
  const double rho_tvd = oracle::spearman(tvd, acc);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const bool pass = within && strictly_better >= 2 && point_count >= 10 && rho_l2 <= -0.5 && rho_tvd <= -0.5;
  detail += fmt::format("pt > kl on {}/3; proxy l2 <= teacher l2: {}; {} sweep configs x 3 seeds, spearman l2 {:.3f}, tvd "
                        "{:.3f}; {:.1f} min",
                        strictly_better, proxy_closer ? "yes" : "no", point_count, rho_l2, rho_tvd, minutes);
  return {pass, detail};
}

int shell(const std::string& command) { return std::system((command + " > /dev/null 2>&1").c_str()); }

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::vector<std::string> output_digests(const fs::path& manifest) {
  const io::Json doc = io::read_json(manifest);
  std::vector<std::string> out;
  for (const auto& o : doc.at("outputs")) out.push_back(o.at("sha256").get<std::string>());
  return out;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "ptloss_acceptance_replay";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = quoted(PTLOSS_CLI_PATH);
  struct Step {
    std::string args;
    fs::path manifest;
    std::string replay_override;
    fs::path replay_manifest;
  };
  const auto p = [&](const std::string& name) { return dir / name; };
  const std::vector<Step> steps{
      {"generate-data --seed 3 --n 3000 --split 0.5,0.25,0.25 --out-dir " + quoted(p("data")),
       p("data") / "manifest.json", "--out-dir " + quoted(p("data2")), p("data2") / "manifest.json"},
      {"train-teacher --data " + quoted(p("data")) + " --seed 1 --epochs 5 --hidden 32 --out " +
           quoted(p("teacher.json")),
       p("teacher.json.manifest.json"), "--out " + quoted(p("teacher2.json")), p("teacher2.json.manifest.json")},
      {"distill --data " + quoted(p("data")) + " --teacher " + quoted(p("teacher.json")) +
           " --method pt --max-order 2 --trials 10 --seed 2 --epochs 3 --hidden 32 --out " + quoted(p("pt.json")) +
           " --csv " + quoted(p("pt.csv")),
       p("pt.json.manifest.json"), "--out " + quoted(p("pt2.json")) + " --csv " + quoted(p("pt2.csv")),
       p("pt2.json.manifest.json")},
      {"eval --model " + quoted(p("teacher.json")) + " --data " + quoted(p("data")) +
           " --split validation --probs-out " + quoted(p("vp.csv")) + " --labels-out " + quoted(p("vl.csv")) +
           " --manifest " + quoted(p("eval.manifest.json")),
       p("eval.manifest.json"),
       "--probs-out " + quoted(p("vp2.csv")) + " --labels-out " + quoted(p("vl2.csv")) + " --manifest " +
           quoted(p("eval2.manifest.json")),
       p("eval2.manifest.json")},
      {"search-coeffs --teacher-probs " + quoted(p("vp.csv")) + " --labels " + quoted(p("vl.csv")) +
           " --max-order 2 --trials 8 --seed 4 --out " + quoted(p("search.json")),
       p("search.json.manifest.json"), "--out " + quoted(p("search2.json")), p("search2.json.manifest.json")},
      {"solve-proxy --teacher-probs " + quoted(p("vp.csv")) + " --coeffs " + quoted(p("search.json")) + " --out " +
           quoted(p("proxy.csv")),
       p("proxy.csv.manifest.json"), "--out " + quoted(p("proxy2.csv")), p("proxy2.csv.manifest.json")},
      {"sweep --data " + quoted(p("data")) + " --teacher " + quoted(p("teacher.json")) + " --configs " +
           quoted(p("search.json")) + " --count 3 --seed 5 --epochs 1 --hidden 32 --out " + quoted(p("sweep.json")),
       p("sweep.json.manifest.json"), "--out " + quoted(p("sweep2.json")), p("sweep2.json.manifest.json")},
      {"verify-equivalence --method focal --param 2 --trials 5 --seed 6 --out " + quoted(p("eq.json")),
       p("eq.json.manifest.json"), "--out " + quoted(p("eq2.json")), p("eq2.json.manifest.json")},
  };
  std::size_t compared = 0;
  std::vector<std::string> problems;
  for (const auto& step : steps) {
    const std::string name = step.args.substr(0, step.args.find(' '));
    if (shell(cli + " " + step.args) != 0) {
      problems.push_back(name + " failed");
      continue;
    }
    const std::string command = io::read_json(step.manifest).at("command").get<std::string>();
    if (shell(cli + " " + command + " --config " + quoted(step.manifest) + " " + step.replay_override) != 0) {
      problems.push_back(name + " replay failed");
      continue;
    }
    const auto first = output_digests(step.manifest);
    const auto second = output_digests(step.replay_manifest);
    if (first.empty() || first != second) problems.push_back(name + " outputs differ");
    compared += first.size();
  }
  std::string detail = fmt::format("{} commands replayed, {} output digests compared", steps.size(), compared);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, loss_fallback}, {2, gradients},         {3, series_bound}, {4, equivalence},
      {5, proxy_oracle},  {6, quality_guarantee}, {7, reproduction}, {8, determinism},
  };
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
