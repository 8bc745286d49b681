// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
// the measured quantities; the process exits non-zero if any criterion fails.
// Tolerances are fixed constants below and must not be loosened to pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>

#include "mu/cost/cost_model.hpp"
#include "mu/data/dataset.hpp"
#include "mu/engine/engine.hpp"
#include "mu/engine/stream.hpp"
#include "mu/mia/auditor.hpp"
#include "oracles.hpp"

using namespace mu;

namespace {

// Tolerances and budgets, one per criterion.
constexpr double kC1BudgetS = 1.0;
constexpr double kC2MaxNorm = 1e-5;
constexpr double kC2BudgetS = 60.0;
constexpr double kC3BudgetS = 120.0;
constexpr double kC6HsSpeedup = 2.0;
constexpr double kC6OhsSpeedup = 1.2;
constexpr double kC6BudgetS = 1200.0;
constexpr double kC7HsSisaPoints = 2.0;
constexpr double kC7OhsSisaPoints = 1.0;
constexpr int kC7Seeds = 3;
constexpr double kC8RelError = 1e-4;
constexpr double kC8BudgetS = 10.0;
constexpr double kC9NullLow = 0.45;
constexpr double kC9NullHigh = 0.55;
constexpr double kC9BudgetS = 900.0;

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void run(int number, const char* title, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("[%s] criterion %d: %s | %s | %.2f s\n", v.pass ? "PASS" : "FAIL", number, title, v.detail.c_str(), secs);
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

// n = 2000 and S = 4 give C = (5000, 4500, 3500, 2000); phi = 4000 puts t at 3.
TrainConfig desk_config() {
  TrainConfig c;
  c.phi = 4000;
  return c;
}

Verdict threshold_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const int s = static_cast<int>(rng() % 32) + 1;
    const std::int64_t n = s + static_cast<std::int64_t>(rng() % 200000);
    const double phi = std::uniform_real_distribution<double>(0.0, 1.1 * oracle::brute_cost(n, s, 1))(rng);
    if (threshold({n, s, phi}).t != oracle::brute_threshold(n, s, phi)) ++mismatches;
  }
  const int t = threshold({1000, 4, 2000}).t;
  const double secs = elapsed_since(start);
  return {mismatches == 0 && t == 3 && secs < kC1BudgetS,
          fmt("mismatches=%d/1000, t(1000,4,2000)=%d, runtime=%.3fs (budget %.0fs)", mismatches, t, secs, kC1BudgetS)};
}

Verdict ledger_reconstruction() {
  const auto start = std::chrono::steady_clock::now();
  TrainConfig c = desk_config();
  UnlearningEngine e(std::make_shared<const Dataset>(gen_synthetic(2000, 20, 3)), c);
  e.train();
  double worst = 0.0;
  int slices = 0;
  for (int i = 1; i <= c.num_slices; ++i) {
    if (!e.store().has_increment(i, 1)) continue;
    ++slices;
    Vector<float> sum = e.store().get_checkpoint(i - 1).params.values;
    for (int j = 1; j <= e.plan().batch_count(i); ++j) sum += e.store().get_increment(i, j).delta.values;
    worst = std::max(worst, static_cast<double>((e.store().get_checkpoint(i).params.values - sum).cwiseAbs().maxCoeff()));
  }
  const double secs = elapsed_since(start);
  return {slices == e.thresholds().t - 1 && slices > 0 && worst <= kC2MaxNorm && secs < kC2BudgetS,
          fmt("recorded slices=%d, max-norm deviation=%.3g (tol %.0e), runtime=%.1fs", slices, worst, kC2MaxNorm, secs)};
}

Verdict prs_scratch() {
  const auto start = std::chrono::steady_clock::now();
  const auto data = std::make_shared<const Dataset>(gen_synthetic(2000, 20, 3));
  UnlearningEngine e(data, desk_config());
  e.train();
  const std::int64_t d = e.plan().batch(1, 2)[40];
  const auto out = e.unlearn_prs(d);
  const auto scratch = oracle::scratch_train(*data, oracle::ScratchSetup{}, {d});
  const bool same = out.params_after.bit_identical(scratch);
  const double secs = elapsed_since(start);
  return {same && secs < kC3BudgetS,
          fmt("revoked id %lld from slice 1, bit-identical=%s, runtime=%.1fs", static_cast<long long>(d),
              same ? "yes" : "no", secs)};
}

Verdict dpus_reversibility() {
  UnlearningEngine e(std::make_shared<const Dataset>(gen_synthetic(2000, 20, 3)), desk_config());
  e.train();
  const auto theta = e.model().params;
  const auto batch = e.plan().batch(2, 3);
  const auto first = e.unlearn_dpus(batch[0]);
  const auto& delta = e.store().get_increment(2, 3).delta;
  const bool restored = combine(first.params_after, delta, Sign::Plus).bit_identical(theta);
  const bool subtracted = first.params_after.bit_identical(combine(theta, delta, Sign::Minus));
  const auto second = e.unlearn_dpus(batch[1]);
  const bool unchanged = second.params_after.bit_identical(first.params_after);
  return {restored && subtracted && unchanged && second.path == ExecutedPath::NoopConsumed,
          fmt("theta-D+D bit-exact=%s, second request path=%s, parameters unchanged=%s", restored ? "yes" : "no",
              std::string(to_string(second.path)).c_str(), unchanged ? "yes" : "no")};
}

Verdict hs_dispatch() {
  UnlearningEngine e(std::make_shared<const Dataset>(gen_synthetic(2000, 20, 3)), desk_config());
  e.train();
  if (e.thresholds().t != 3) return {false, fmt("expected t=3, got %d", e.thresholds().t)};
  const auto requests = sample_requests(e.plan(), 100, 5);
  int low = 0, low_ok = 0, high = 0, high_ok = 0, identical = 0;
  for (auto id : requests) {
    const Location at = e.plan().locate(id);
    if (at.slice < 3) {
      // A repeat hit on an already-subtracted batch still takes the DPUS
      // branch; its consume-once outcome is reported as noop-consumed.
      const auto out = e.unlearn_hs(id);
      ++low;
      low_ok += out.path == ExecutedPath::Dpus || out.path == ExecutedPath::NoopConsumed;
    } else {
      UnlearningEngine direct = e;
      const auto via_prs = direct.unlearn_prs(id);
      const auto out = e.unlearn_hs(id);
      ++high;
      high_ok += out.path == ExecutedPath::Prs;
      identical += out.params_after.bit_identical(via_prs.params_after);
    }
  }
  return {low + high == 100 && low_ok == low && high_ok == high && identical == high,
          fmt("slices 1-2: %d/%d DPUS branch; slices 3-4: %d/%d PRS-path, %d/%d bit-identical to direct PRS", low_ok,
              low, high_ok, high, identical, high)};
}

Verdict efficiency() {
  const auto start = std::chrono::steady_clock::now();
  const auto data = std::make_shared<const Dataset>(gen_synthetic(50000, 20, 6));
  const auto eval = gen_synthetic(5000, 20, 6);
  TrainConfig c;
  c.num_slices = 8;
  // Retraining from slice 7 onwards is the most the budget allows: t = 7, r = 2.
  c.phi = retrain_cost(7, {data->size(), 8, 0.0});
  c.record_limit = 9;
  UnlearningEngine trained(data, c);
  trained.train();
  const auto requests = sample_requests(trained.plan(), 100, 6);

  auto mean_time = [&](Strategy s) {
    UnlearningEngine engine = trained;
    if (s != Strategy::Dpus) engine.restrict_ledger(engine.thresholds().t);
    const auto report = process_stream(engine, requests, s, eval);
    if (report.partial) throw Error(ErrorKind::InvalidArgument, report.error);
    return report.avg_unlearn_time_s;
  };
  const double dpus = mean_time(Strategy::Dpus);
  const double sisa = mean_time(Strategy::Prs);
  const double hs = mean_time(Strategy::Hs);
  const double ohs = mean_time(Strategy::Ohs);
  const double secs = elapsed_since(start);
  const bool ok = dpus < hs && ohs < sisa && sisa / hs >= kC6HsSpeedup && sisa / ohs >= kC6OhsSpeedup &&
                  secs < kC6BudgetS;
  return {ok, fmt("t=%d r=%d mean s/request: dpus=%.3g hs=%.3g ohs=%.3g sisa=%.3g; sisa/hs=%.2f (>=%.1f), "
                  "sisa/ohs=%.2f (>=%.1f), runtime=%.0fs",
                  trained.thresholds().t, trained.thresholds().r, dpus, hs, ohs, sisa, sisa / hs, kC6HsSpeedup,
                  sisa / ohs, kC6OhsSpeedup, secs)};
}

Verdict accuracy_ordering() {
  double dpus = 0, hs = 0, ohs = 0, sisa = 0;
  for (int seed = 0; seed < kC7Seeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    const auto all = gen_synthetic(25000, 20, 100 + s);
    const auto [train_set, test] = train_test_split(all, 0.2, s);
    const auto data = std::make_shared<const Dataset>(train_set);
    TrainConfig c;
    c.num_slices = 4;
    c.phi = retrain_cost(3, {data->size(), 4, 0.0});
    c.shuffle_seed = s;
    c.init_seed = s;
    c.record_limit = 5;
    UnlearningEngine trained(data, c);
    trained.train();
    const auto requests = sample_requests(trained.plan(), 100, s);
    auto final_accuracy = [&](Strategy strategy) {
      UnlearningEngine engine = trained;
      if (strategy != Strategy::Dpus) engine.restrict_ledger(engine.thresholds().t);
      const auto report = process_stream(engine, requests, strategy, test);
      if (report.partial) throw Error(ErrorKind::InvalidArgument, report.error);
      return 100.0 * report.final_accuracy;
    };
    dpus += final_accuracy(Strategy::Dpus) / kC7Seeds;
    hs += final_accuracy(Strategy::Hs) / kC7Seeds;
    ohs += final_accuracy(Strategy::Ohs) / kC7Seeds;
    sisa += final_accuracy(Strategy::Prs) / kC7Seeds;
  }
  const bool ok = dpus <= hs && std::abs(hs - sisa) <= kC7HsSisaPoints && std::abs(ohs - sisa) <= kC7OhsSisaPoints;
  return {ok, fmt("mean accuracy over %d seeds (%%): dpus=%.2f hs=%.2f ohs=%.2f sisa=%.2f; |hs-sisa|=%.2f (<=%.0f), "
                  "|ohs-sisa|=%.2f (<=%.0f)",
                  kC7Seeds, dpus, hs, ohs, sisa, std::abs(hs - sisa), kC7HsSisaPoints, std::abs(ohs - sisa),
                  kC7OhsSisaPoints)};
}

Verdict gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  int sampled = 0;
  for (int instance = 0; instance < 5; ++instance) {
    const Index dim = 3 + instance;
    const ModelLayout layout{dim, {12, 10}, 2};
    const auto params = init_params<double>(layout, 30 + static_cast<std::uint64_t>(instance));
    Batch<double> batch;
    batch.features.resize(6, dim);
    for (Index r = 0; r < 6; ++r) {
      for (Index k = 0; k < dim; ++k) batch.features(r, k) = normal(rng);
      batch.labels.push_back(static_cast<int>(rng() % 2));
    }
    const auto grad = loss_grad(params, batch).grad;
    std::uniform_int_distribution<Index> pick(0, params.size() - 1);
    for (int n = 0; n < 20; ++n, ++sampled) {
      const Index k = pick(rng);
      const double fd = oracle::central_difference(params, batch, k, 1e-5);
      const double an = grad.values[k];
      // Coordinates behind an inactive ReLU have an exactly zero gradient; the
      // floor keeps their comparison absolute instead of dividing by zero.
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-7});
      worst = std::max(worst, rel);
    }
  }
  const double secs = elapsed_since(start);
  return {sampled == 100 && worst <= kC8RelError && secs < kC8BudgetS,
          fmt("%d coordinates over 5 instances, worst relative error=%.3g (tol %.0e), runtime=%.2fs", sampled, worst,
              kC8RelError, secs)};
}

Verdict mia_erasure() {
  const auto start = std::chrono::steady_clock::now();
  // A small noisy training set trained for many epochs memorises its members.
  const auto all = gen_synthetic(2000, 20, 5, 1.0);
  const auto [train_set, pool] = train_test_split(all, 0.75, 1);
  const auto data = std::make_shared<const Dataset>(train_set);
  TrainConfig c;
  c.epochs_per_slice = 30;
  c.phi = retrain_cost(3, {data->size(), 4, 0.0});
  UnlearningEngine trained(data, c);
  trained.train();

  ShadowConfig sc;
  sc.epochs = 120;
  const auto shadows = train_shadows(pool, 4, sc, 9);
  const auto attack_set = build_attack_dataset(shadows, pool);
  const auto attack = train_attack(attack_set, 3);
  const auto null_attack = train_attack(shuffle_member_labels(attack_set, 3), 3);

  const auto requests = sample_requests(trained.plan(), 100, 2);
  const double before = audit(attack, trained.model().params, requests, *data).member_rate;
  std::string detail = fmt("attack holdout=%.3f, null holdout=%.3f, before=%.2f, after:", attack.holdout_accuracy,
                           null_attack.holdout_accuracy, before);
  bool ok = null_attack.holdout_accuracy >= kC9NullLow && null_attack.holdout_accuracy <= kC9NullHigh;
  for (Strategy s : {Strategy::Prs, Strategy::Dpus, Strategy::Hs, Strategy::Ohs}) {
    TrainConfig sc2 = c;
    if (s == Strategy::Dpus) sc2.record_limit = c.num_slices + 1;
    UnlearningEngine engine = trained;
    if (s == Strategy::Dpus) {
      engine = UnlearningEngine(data, sc2);
      engine.train();
    }
    const auto report = process_stream(engine, requests, s, pool);
    if (report.partial) throw Error(ErrorKind::InvalidArgument, report.error);
    const double after = audit(attack, engine.model().params, requests, *data).member_rate;
    ok = ok && after < before;
    detail += fmt(" %s=%.2f", std::string(to_string(s)).c_str(), after);
  }
  const double secs = elapsed_since(start);
  ok = ok && secs < kC9BudgetS;
  return {ok, detail + fmt(", runtime=%.0fs", secs)};
}

}  // namespace

int main() {
  run(1, "threshold oracle", threshold_oracle);
  run(2, "ledger reconstruction", ledger_reconstruction);
  run(3, "PRS equals scratch retraining", prs_scratch);
  run(4, "DPUS reversibility and consume-once", dpus_reversibility);
  run(5, "HS dispatch", hs_dispatch);
  run(6, "efficiency direction", efficiency);
  run(7, "accuracy ordering", accuracy_ordering);
  run(8, "gradient correctness", gradient_check);
  run(9, "MIA erasure direction", mia_erasure);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
