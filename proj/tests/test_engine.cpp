#include <algorithm>
#include <filesystem>
#include <memory>
#include <set>

#include "doctest.h"
#include "mu/data/dataset.hpp"
#include "mu/engine/engine.hpp"
#include "mu/engine/stream.hpp"
#include "oracles.hpp"

using namespace mu;

namespace {

std::shared_ptr<const Dataset> synthetic() {
  static const auto data = std::make_shared<const Dataset>(gen_synthetic(2000, 20, 3));
  return data;
}

// n = 2000 and S = 4 give C = (5000, 4500, 3500, 2000); phi = 4000 puts t at 3.
TrainConfig base_config() {
  TrainConfig c;
  c.phi = 4000;
  return c;
}

UnlearningEngine trained(TrainConfig c = base_config()) {
  UnlearningEngine engine(synthetic(), std::move(c));
  engine.train();
  return engine;
}

const UnlearningEngine& reference() {
  static const UnlearningEngine engine = trained();
  return engine;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

std::int64_t id_in(const UnlearningEngine& e, int slice, int batch = 1, std::size_t pos = 0) {
  return e.plan().batch(slice, batch)[pos];
}

}  // namespace

TEST_CASE("training saves every checkpoint and records increments below t") {
  const auto& e = reference();
  CHECK(e.thresholds().t == 3);
  CHECK(e.thresholds().r == 2);
  for (int i = 0; i <= 4; ++i) CHECK(e.store().has_checkpoint(i));
  CHECK(e.store().checkpoint_count() == 5);
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= e.plan().batch_count(i); ++j) CHECK(e.store().has_increment(i, j) == (i < 3));
  CHECK(e.model().params.bit_identical(e.store().get_checkpoint(4).params));
  CHECK(e.model().params.all_finite());
}

TEST_CASE("training is deterministic") {
  CHECK(trained().model().params.bit_identical(reference().model().params));
}

TEST_CASE("checkpoints telescope through recorded increments") {
  const auto& e = reference();
  for (int i = 1; i < e.thresholds().t; ++i) {
    Vector<float> sum = e.store().get_checkpoint(i - 1).params.values;
    for (int j = 1; j <= e.plan().batch_count(i); ++j) sum += e.store().get_increment(i, j).delta.values;
    const float dev = (e.store().get_checkpoint(i).params.values - sum).cwiseAbs().maxCoeff();
    CHECK(dev <= 1e-5f);
  }
}

TEST_CASE("several epochs per slice reach high held-out accuracy") {
  const auto data = gen_synthetic(2000, 20, 3);
  auto [train, test] = train_test_split(data, 0.2, 1);
  TrainConfig c = base_config();
  c.epochs_per_slice = 3;
  UnlearningEngine e(std::make_shared<const Dataset>(std::move(train)), c);
  e.train();
  CHECK(evaluate(e.model().params, test) >= 0.9);
}

TEST_CASE("PRS on a slice-1 sample equals scratch retraining") {
  auto e = reference();
  const std::int64_t d = id_in(e, 1, 2, 17);
  const auto out = e.unlearn_prs(d);
  CHECK(out.path == ExecutedPath::Prs);
  CHECK(out.checkpoints_rewritten == std::vector<int>{1, 2, 3, 4});
  const auto scratch = oracle::scratch_train(*synthetic(), oracle::ScratchSetup{}, {d});
  CHECK(out.params_after.bit_identical(scratch));
  CHECK(kind_of([&] { e.unlearn_prs(d); }) == ErrorKind::AlreadyRevoked);
}

TEST_CASE("PRS on a last-slice sample retrains only that slice") {
  auto e = reference();
  const auto out = e.unlearn_prs(id_in(e, 4));
  CHECK(out.checkpoints_rewritten == std::vector<int>{4});
  for (int i = 0; i <= 3; ++i)
    CHECK(e.store().get_checkpoint(i).params.bit_identical(reference().store().get_checkpoint(i).params));
}

TEST_CASE("DPUS subtracts the batch increment exactly once") {
  auto e = reference();
  const std::int64_t d = id_in(e, 2, 1, 3);
  const auto theta = e.model().params;
  const auto delta = e.store().get_increment(2, 1).delta;
  const auto out = e.unlearn_dpus(d);
  CHECK(out.path == ExecutedPath::Dpus);
  CHECK(out.located_at == Location{2, 1});
  CHECK(out.params_after.bit_identical(combine(theta, delta, Sign::Minus)));
  CHECK(combine(out.params_after, delta, Sign::Plus).bit_identical(theta));

  const auto second = e.unlearn_dpus(id_in(reference(), 2, 1, 4));
  CHECK(second.path == ExecutedPath::NoopConsumed);
  CHECK(second.params_after.bit_identical(out.params_after));
  CHECK(e.plan().is_tombstoned(id_in(reference(), 2, 1, 4)));
}

TEST_CASE("DPUS without force refuses slices at or above t") {
  auto e = reference();
  CHECK(kind_of([&] { e.unlearn_dpus(id_in(e, 3)); }) == ErrorKind::Dispatch);
  CHECK(kind_of([&] { e.unlearn_dpus(id_in(e, 4)); }) == ErrorKind::Dispatch);
  CHECK(e.unlearn(id_in(e, 1), Strategy::Dpus).path == ExecutedPath::Dpus);
}

TEST_CASE("HS dispatches strictly below t") {
  auto hs = reference();
  CHECK(hs.unlearn_hs(id_in(hs, 1)).path == ExecutedPath::Dpus);
  CHECK(hs.unlearn_hs(id_in(hs, 2)).path == ExecutedPath::Dpus);
  CHECK(hs.unlearn_hs(id_in(hs, 3)).path == ExecutedPath::Prs);

  auto a = reference();
  auto b = reference();
  const std::int64_t d = id_in(a, 4, 2, 9);
  const auto via_hs = a.unlearn_hs(d);
  const auto via_prs = b.unlearn_prs(d);
  CHECK(via_hs.path == ExecutedPath::Prs);
  CHECK(via_hs.params_after.bit_identical(via_prs.params_after));
}

TEST_CASE("OHS subtracts at the depth checkpoint and retrains the tail") {
  auto e = reference();
  const auto before = e.store().get_checkpoint(2).params;
  const auto delta = e.store().get_increment(1, 1).delta;
  const auto out = e.unlearn_ohs(id_in(e, 1));
  CHECK(out.path == ExecutedPath::Ohs);
  CHECK(out.checkpoints_rewritten == std::vector<int>{1, 2, 3, 4});
  CHECK(e.store().get_checkpoint(2).params.bit_identical(combine(before, delta, Sign::Minus)));

  auto a = reference();
  auto b = reference();
  const std::int64_t d = id_in(a, 3);
  CHECK(a.unlearn_ohs(d).params_after.bit_identical(b.unlearn_prs(d).params_after));
}

TEST_CASE("OHS with depth 1 retrains only the last slice") {
  TrainConfig c = base_config();
  c.ohs_depth = 1;
  auto e = trained(c);
  CHECK(e.thresholds().r == 1);
  const auto out = e.unlearn_ohs(id_in(e, 1));
  CHECK(out.checkpoints_rewritten == std::vector<int>{1, 2, 3, 4});
  CHECK(e.store().get_checkpoint(3).params.bit_identical(
      combine(reference().store().get_checkpoint(3).params, reference().store().get_increment(1, 1).delta, Sign::Minus)));
}

TEST_CASE("OHS with every retraining affordable matches PRS accuracy") {
  TrainConfig c = base_config();
  c.phi = 5000;
  auto ohs = trained(c);
  auto prs = ohs;
  CHECK(ohs.thresholds().t == 1);
  CHECK(ohs.thresholds().r == 4);
  const auto eval = gen_synthetic(1000, 20, 3);
  const auto requests = sample_requests(ohs.plan(), 5, 1);
  const auto a = process_stream(ohs, requests, Strategy::Ohs, eval);
  const auto b = process_stream(prs, requests, Strategy::Prs, eval);
  CHECK(std::abs(a.final_accuracy - b.final_accuracy) <= 0.01);
}

TEST_CASE("OHS with zero depth degenerates to DPUS") {
  TrainConfig c = base_config();
  c.ohs_depth = 0;
  auto a = trained(c);
  auto b = a;
  const std::int64_t d = id_in(a, 2);
  const auto x = a.unlearn_ohs(d);
  CHECK(x.path == ExecutedPath::Dpus);
  CHECK(x.params_after.bit_identical(b.unlearn_dpus(d).params_after));
}

TEST_CASE("revoked ids never reappear in any batch") {
  auto e = reference();
  const auto requests = sample_requests(e.plan(), 30, 4);
  const auto eval = gen_synthetic(200, 20, 3);
  const auto report = process_stream(e, requests, Strategy::Hs, eval);
  CHECK_FALSE(report.partial);
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= e.plan().batch_count(i); ++j)
      for (auto id : e.plan().batch(i, j)) CHECK(std::find(requests.begin(), requests.end(), id) == requests.end());
  // Consume-once: a recorded batch is subtracted by at most one request.
  std::set<std::pair<int, int>> hit;
  for (const auto& row : report.rows) {
    CHECK((row.path == ExecutedPath::Dpus || row.path == ExecutedPath::NoopConsumed) == (row.slice < 3));
    if (row.path == ExecutedPath::Dpus) {
      CHECK(hit.insert({row.slice, row.batch}).second);
    }
    CHECK(row.wall_time_s >= 0.0);
  }
}

TEST_CASE("stream reports") {
  const auto eval = gen_synthetic(500, 20, 3);
  auto e = reference();
  const auto empty = process_stream(e, {}, Strategy::Hs, eval);
  CHECK(empty.rows.empty());
  CHECK(empty.final_accuracy == empty.pre_accuracy);

  auto a = reference();
  auto b = reference();
  std::vector<std::int64_t> tail;
  for (std::size_t k = 0; k < 3; ++k) tail.push_back(a.plan().slice_ids(4)[k * 50]);
  const auto ra = process_stream(a, tail, Strategy::Prs, eval);
  const auto rb = process_stream(b, tail, Strategy::Hs, eval);
  CHECK(ra.rows.size() == 3);
  CHECK(a.model().params.bit_identical(b.model().params));
  CHECK(ra.final_accuracy == rb.final_accuracy);

  auto c = reference();
  const std::vector<std::int64_t> bad{tail[0], 999999};
  const auto partial = process_stream(c, bad, Strategy::Hs, eval);
  CHECK(partial.partial);
  CHECK(partial.rows.size() == 1);
  CHECK_FALSE(partial.error.empty());
}

TEST_CASE("sample_requests draws distinct live ids") {
  const auto& plan = reference().plan();
  const auto r = sample_requests(plan, 100, 7);
  CHECK(r.size() == 100);
  CHECK(std::set<std::int64_t>(r.begin(), r.end()).size() == 100);
  CHECK(r == sample_requests(plan, 100, 7));
  CHECK(r != sample_requests(plan, 100, 8));
}

TEST_CASE("persisted engines resume identically") {
  auto live = reference();
  live.unlearn_hs(id_in(live, 1));
  const auto dir = std::filesystem::temp_directory_path() / "mu_test_engine" / "resume";
  std::filesystem::remove_all(dir);
  live.store().persist(dir);
  auto resumed = UnlearningEngine::restore(synthetic(), StateStore::load(dir));
  CHECK(resumed.model().params.bit_identical(live.model().params));
  const std::int64_t d = id_in(live, 1, 2);
  CHECK(resumed.unlearn_hs(d).params_after.bit_identical(live.unlearn_hs(d).params_after));
  CHECK(kind_of([&] {
    UnlearningEngine::restore(std::make_shared<const Dataset>(gen_synthetic(2000, 20, 4)), StateStore::load(dir));
  }) == ErrorKind::InvalidArgument);
}

TEST_CASE("config validation") {
  TrainConfig c = base_config();
  c.num_slices = 0;
  CHECK_THROWS_AS(UnlearningEngine(synthetic(), c), Error);
  c = base_config();
  c.num_slices = 3000;
  CHECK_THROWS_AS(UnlearningEngine(synthetic(), c), Error);
  CHECK(parse_strategy("SISA") == Strategy::Prs);
  CHECK(parse_strategy("ohs") == Strategy::Ohs);
  CHECK_THROWS_AS(parse_strategy("foo"), Error);
  CHECK(kind_of([] { UnlearningEngine(synthetic(), base_config()).unlearn_hs(1); }) == ErrorKind::InvalidArgument);
}
