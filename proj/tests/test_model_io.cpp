#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "calib/dataset_io.hpp"
#include "calib/model_io.hpp"
#include "calib/partition.hpp"
#include "calib/pav.hpp"
#include "calib/rng.hpp"
#include "test_util.hpp"

using namespace calib;

TEST_CASE("binned models survive the json round trip bit-exactly") {
  const auto prob = testutil::random_binary(80, 11, true);
  ModelFile mf;
  mf.method = "pav";
  mf.k = 2;
  mf.alpha = 0.0;
  mf.n = prob.scores.size();
  mf.seed = 11;
  mf.candidate_source = "scores";
  mf.timestamp = "2000-01-01T00:00:00Z";
  mf.binned = pav_fit(prob.scores, prob.targets, prob.weights);

  const std::string text = model_to_json(mf);
  const ModelFile back = model_from_json(text);
  REQUIRE(back.binned.has_value());
  CHECK(back.method == "pav");
  CHECK(back.k == 2);
  CHECK(back.binned->boundaries == mf.binned->boundaries);
  CHECK(back.binned->values == mf.binned->values);
  CHECK(back.binned->counts == mf.binned->counts);
  CHECK(std::isinf(back.binned->boundaries.front()));

  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const double s = rng.uniform() * 1.4 - 0.2;
    const std::vector<double> p{1.0 - s, s};
    CHECK(apply_model_file(back, p) == apply_model_file(mf, p));
  }
}

TEST_CASE("partition models survive the json round trip bit-exactly") {
  const Dataset ds = synth_simplex(70, 3, 0.3, 13);
  FitOptions fo;
  fo.alpha = 1.0;
  ModelFile mf;
  mf.method = "mc-irp";
  mf.k = 3;
  mf.alpha = 1.0;
  mf.n = ds.size();
  mf.seed = 13;
  mf.candidate_source = "data";
  mf.timestamp = "2000-01-01T00:00:00Z";
  mf.partition = fit_mc_irp(ds, fo);

  const std::string text = model_to_json(mf);
  const ModelFile back = model_from_json(text);
  REQUIRE(back.partition.has_value());
  REQUIRE(back.partition->nodes.size() == mf.partition->nodes.size());
  for (std::size_t i = 0; i < mf.partition->nodes.size(); ++i) {
    const auto& a = mf.partition->nodes[i];
    const auto& b = back.partition->nodes[i];
    CHECK(a.value == b.value);
    CHECK(a.raw_mean == b.raw_mean);
    CHECK(a.count == b.count);
    CHECK(a.mass == b.mass);
    CHECK(a.is_split == b.is_split);
    CHECK(a.children == b.children);
    if (a.is_split) CHECK(a.gamma.coords == b.gamma.coords);
  }
  REQUIRE(back.partition->split_log.size() == mf.partition->split_log.size());
  for (std::size_t i = 0; i < mf.partition->split_log.size(); ++i) {
    CHECK(back.partition->split_log[i].gamma.coords ==
          mf.partition->split_log[i].gamma.coords);
    CHECK(back.partition->split_log[i].criterion ==
          mf.partition->split_log[i].criterion);
  }
  for (const auto& s : ds.samples) {
    CHECK(apply_model_file(back, s.p) == apply_model_file(mf, s.p));
  }
  CHECK(model_bins(back) == model_bins(mf));

  // emit -> parse -> emit is a fixed point
  CHECK(model_to_json(back) == text);
}

TEST_CASE("model parsing rejects malformed documents") {
  CHECK_THROWS_AS(model_from_json("{not json"), InputError);
  CHECK_THROWS_AS(model_from_json("{}"), InputError);
  CHECK_THROWS_AS(
      model_from_json(R"({"schema_version":9,"method":"pav","k":2,"alpha":0,
        "fit":{"n":1,"seed":0,"candidate_source":"x","timestamp":"t"},
        "payload":{}})"),
      InputError);
  CHECK_THROWS_AS(
      model_from_json(R"({"schema_version":1,"method":"pav","k":2,"alpha":0,
        "fit":{"n":1,"seed":0,"candidate_source":"x","timestamp":"t"},
        "payload":{}})"),
      InputError);
}

TEST_CASE("apply rejects dimension mismatches") {
  const auto prob = testutil::random_binary(20, 3);
  ModelFile mf;
  mf.method = "pav";
  mf.k = 2;
  mf.alpha = 0.0;
  mf.binned = pav_fit(prob.scores, prob.targets, prob.weights);
  CHECK_THROWS_AS(apply_model_file(mf, std::vector<double>{0.2, 0.3, 0.5}),
                  ContractError);
}
