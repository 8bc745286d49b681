#include "mu/engine/stream.hpp"

#include <algorithm>
#include <random>

#include "mu/core/trainer.hpp"

namespace mu {

MetricsReport process_stream(UnlearningEngine& engine, std::span<const std::int64_t> requests, Strategy strategy,
                             const Dataset& eval_set) {
  MetricsReport report;
  report.strategy = strategy;
  report.num_slices = engine.config().num_slices;
  report.phi = engine.config().phi;
  report.t = engine.thresholds().t;
  report.r = engine.thresholds().r;
  report.pre_accuracy = evaluate(engine.model().params, eval_set);

  double total = 0.0;
  for (std::size_t k = 0; k < requests.size(); ++k) {
    try {
      const UnlearnOutcome out = engine.unlearn(requests[k], strategy);
      report.rows.push_back({static_cast<int>(k), requests[k], out.path, out.located_at.slice, out.located_at.batch,
                             out.wall_time_s});
      total += out.wall_time_s;
    } catch (const Error& e) {
      report.partial = true;
      report.error = "request " + std::to_string(k) + " (sample " + std::to_string(requests[k]) + "): " + e.what();
      break;
    }
  }
  report.avg_unlearn_time_s = report.rows.empty() ? 0.0 : total / static_cast<double>(report.rows.size());
  report.final_accuracy = evaluate(engine.model().params, eval_set);
  return report;
}

std::vector<std::int64_t> sample_requests(const SlicePlan& plan, std::size_t count, std::uint64_t seed) {
  std::vector<std::int64_t> live = plan.live_ids();
  if (count > live.size())
    throw Error(ErrorKind::InvalidArgument, "requested " + std::to_string(count) + " revocations but only " +
                                                std::to_string(live.size()) + " live samples");
  std::mt19937_64 rng(mix_seed(seed, 0x4E0ULL));
  std::shuffle(live.begin(), live.end(), rng);
  live.resize(count);
  return live;
}

}  // namespace mu
