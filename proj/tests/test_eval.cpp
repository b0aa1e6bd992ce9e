#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "kmcoach/auc.hpp"
#include "kmcoach/error.hpp"
#include "kmcoach/eval.hpp"
#include "kmcoach/rng.hpp"

using namespace kmc;

namespace {

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(tie).
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return wins / pairs;
}

std::pair<HeteroGraph, std::vector<LatentLabel>> cohort(std::uint64_t seed, double mention = 0.5,
                                                         std::size_t learners = 40) {
  SynthConfig c;
  c.n_learners = learners;
  c.n_concepts = 30;
  c.n_items = 20;
  c.mention_prob = mention;
  c.seed = seed;
  auto co = gen_cohort(c);
  auto g = HeteroGraph::build(co.records);
  return {std::move(g), co.truth.latent_labels};
}

ExperimentSpec fast_spec() {
  ExperimentSpec s;
  s.trials = 2;
  s.model.embed_dim = 8;
  s.model.epochs = 5;
  s.base_seed = 3;
  return s;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("AUC examples") {
    CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
    CHECK(auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}) == 0.0);
    CHECK(auc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1}) == 0.5);
  }

  TEST_CASE("AUC matches the pairwise oracle") {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> s;
      std::vector<int> y;
      for (int i = 0; i < 50; ++i) {
        // Coarse scores force ties.
        s.push_back(std::floor(rng.uniform() * 10) / 10);
        y.push_back(i < 2 ? i : (rng.uniform() < 0.4 ? 1 : 0));
      }
      CHECK(std::abs(auc(s, y) - pairwise_auc(s, y)) < 1e-12);
    }
  }

  TEST_CASE("AUC invariances") {
    Rng rng(8);
    std::vector<double> s;
    std::vector<int> y, flipped;
    for (int i = 0; i < 200; ++i) {
      s.push_back(rng.uniform());
      y.push_back(i % 3 == 0 ? 1 : 0);
      flipped.push_back(1 - y.back());
    }
    std::vector<double> t;
    for (double v : s) t.push_back(std::exp(3 * v) - 7);
    CHECK(auc(t, y) == doctest::Approx(auc(s, y)).epsilon(1e-15));
    CHECK(auc(s, y) + auc(s, flipped) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("AUC argument errors") {
    auto tag = [](std::vector<double> s, std::vector<int> y) {
      try {
        auc(s, y);
      } catch (const Error& e) {
        return e.tag();
      }
      return std::string();
    };
    CHECK(tag({0.1, 0.2}, {1, 1}) == "degenerate_labels");
    CHECK(tag({0.1, 0.2}, {0, 0}) == "degenerate_labels");
    CHECK(tag({}, {}) == "degenerate_labels");
    CHECK_THROWS_AS(auc(std::vector<double>{0.1}, std::vector<int>{1, 0}), Error);
  }

  TEST_CASE("random guesser stays near chance over 30 trials") {
    auto [g, labels] = cohort(2, 0.3, 100);
    REQUIRE(labels.size() >= 1000);
    ExperimentSpec s;
    s.methods = {Method::kRG};
    s.trials = 30;
    s.eval_mode = EvalMode::kTrueLatent;
    auto table = run_experiment(g, &labels, s);
    const auto& rg = table.at(Method::kRG);
    CHECK(rg.aucs.size() == 30);
    CHECK(rg.mean >= 0.47);
    CHECK(rg.mean <= 0.53);
  }

  TEST_CASE("experiments are deterministic and worker-count independent") {
    auto [g, labels] = cohort(6);
    auto s = fast_spec();
    s.methods = {Method::kRG, Method::kGCN, Method::kLP, Method::kHGNN, Method::kHGNNNoEins};
    auto a = run_experiment(g, nullptr, s);
    auto b = run_experiment(g, nullptr, s);
    s.jobs = 3;
    auto c = run_experiment(g, nullptr, s);
    CHECK(emit_table(a, TableFormat::kCsv) == emit_table(b, TableFormat::kCsv));
    CHECK(emit_table(a, TableFormat::kCsv) == emit_table(c, TableFormat::kCsv));
    CHECK(a.seeds == std::vector<std::uint64_t>{3, 4});
    for (const auto& r : a.results)
      for (double v : r.aucs) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }

  TEST_CASE("summary statistics") {
    MethodResult r;
    r.aucs = {0.5, 0.7, 0.9};
    summarize(r);
    CHECK(r.mean == doctest::Approx(0.7));
    CHECK(r.sd == doctest::Approx(0.2));
    r.aucs = {0.6};
    summarize(r);
    CHECK(r.sd == 0.0);
  }

  TEST_CASE("table formats") {
    auto [g, labels] = cohort(6);
    auto s = fast_spec();
    s.methods = {Method::kRG};
    s.trials = 1;
    auto table = run_experiment(g, nullptr, s, "Synthetic");
    auto csv = emit_table(table, TableFormat::kCsv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(emit_table(parse_table_csv(csv), TableFormat::kCsv) == csv);
    auto md = emit_table(table, TableFormat::kMarkdown);
    CHECK(md.find("Synthetic") != std::string::npos);
    CHECK(std::count(md.begin(), md.end(), '\n') == 3);
    auto js = nlohmann::json::parse(emit_table(table, TableFormat::kJson));
    CHECK(js["methods"][0]["method"] == "RG");
    CHECK(js["methods"][0]["aucs"].size() == 1);
    CHECK_THROWS_AS(parse_table_csv("nonsense\n"), Error);
    CHECK_THROWS_AS(parse_table_csv("method,mean,sd,auc_1\nRG,0.5\n"), Error);
  }

  TEST_CASE("CSV round trip with several methods") {
    auto [g, labels] = cohort(9);
    auto s = fast_spec();
    s.methods = {Method::kRG, Method::kLP};
    s.trials = 3;
    auto csv = emit_table(run_experiment(g, nullptr, s), TableFormat::kCsv);
    auto back = parse_table_csv(csv);
    CHECK(back.results.size() == 2);
    CHECK(back.results[1].method == Method::kLP);
    CHECK(emit_table(back, TableFormat::kCsv) == csv);
  }

  TEST_CASE("spec validation") {
    auto [g, labels] = cohort(6);
    auto s = fast_spec();
    s.methods.clear();
    CHECK_THROWS_AS(run_experiment(g, nullptr, s), Error);
    s = fast_spec();
    s.trials = 0;
    CHECK_THROWS_AS(run_experiment(g, nullptr, s), Error);
    s = fast_spec();
    s.ratio = 1.0;
    CHECK_THROWS_AS(run_experiment(g, nullptr, s), Error);
    s = fast_spec();
    s.eval_mode = EvalMode::kTrueLatent;
    CHECK_THROWS_AS(run_experiment(g, nullptr, s), Error);
  }

  TEST_CASE("run manifest") {
    auto [g, labels] = cohort(6);
    auto s = fast_spec();
    s.methods = {Method::kRG};
    auto table = run_experiment(g, nullptr, s);
    auto m = run_manifest(s, table, g);
    CHECK(m["graph_fingerprint"] == g.fingerprint());
    CHECK(m["trial_seeds"] == nlohmann::json::array({3, 4}));
    CHECK(m["spec"]["methods"] == nlohmann::json::array({"RG"}));
    CHECK(eval_mode_from_string(to_string(EvalMode::kTrueLatent)) == EvalMode::kTrueLatent);
    CHECK_THROWS_AS(eval_mode_from_string("bogus"), Error);
  }
}
