#include "kmcoach/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "kmcoach/error.hpp"
#include "kmcoach/rng.hpp"

namespace kmc {

using nlohmann::json;

namespace {
constexpr std::array<const char*, 5> kTags{"WC", "AL", "UC", "OC", "LC"};
constexpr std::array<const char*, 5> kNames{"Well Calibrated", "Aware of Limitations", "Underconfident",
                                            "Overconfident", "Liberal Criterion"};
}  // namespace

std::string to_string(Pattern p) { return kTags[static_cast<std::size_t>(p)]; }
std::string pattern_name(Pattern p) { return kNames[static_cast<std::size_t>(p)]; }

Pattern pattern_from_string(const std::string& tag) {
  for (std::size_t i = 0; i < kTags.size(); ++i)
    if (tag == kTags[i]) return static_cast<Pattern>(i);
  fail(ErrorKind::kInvalidArgument, "unknown_pattern", "unknown pattern '" + tag + "'");
}

std::array<Persona, 5> SynthConfig::default_personas() {
  return {{
      {0.95, 0.95, 18.0, 2.0},  // WC
      {0.95, 0.95, 5.0, 8.0},   // AL
      {0.25, 0.80, 18.0, 2.0},  // UC
      {0.90, 0.30, 5.0, 8.0},   // OC
      {0.90, 0.15, 18.0, 2.0},  // LC
  }};
}

SynthConfig SynthConfig::paper_scale() {
  SynthConfig c;
  c.n_learners = 150;
  c.n_concepts = 211;
  c.n_items = 45;
  return c;
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kInvalidArgument, "invalid_config", field + " " + why);
  };
  auto prob = [&](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) bad(field, "must lie in [0, 1]");
  };
  if (n_learners == 0) bad("n_learners", "must be positive");
  if (n_concepts == 0) bad("n_concepts", "must be positive");
  if (n_items == 0) bad("n_items", "must be positive");
  if (n_items > n_concepts) bad("n_items", "must not exceed n_concepts");
  if (dag_layers < 1) bad("dag_layers", "must be at least 1");
  if (max_layer_gap < 0) bad("max_layer_gap", "must be non-negative");
  prob(prereq_prob, "prereq_prob");
  prob(mastery_base, "mastery_base");
  prob(mastery_penalty, "mastery_penalty");
  prob(slip, "slip");
  prob(guess, "guess");
  prob(mention_prob, "mention_prob");
  double total = 0.0;
  for (double w : persona_mix) {
    if (!(w >= 0.0)) bad("persona_mix", "weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) bad("persona_mix", "weights must sum to 1");
  for (const auto& p : personas) {
    prob(p.sensitivity, "persona sensitivity");
    prob(p.specificity, "persona specificity");
    if (!(p.ability_alpha > 0.0 && p.ability_beta > 0.0)) bad("persona ability", "shape parameters must be positive");
  }
}

ConceptDag gen_concept_dag(const SynthConfig& config, std::uint64_t seed) {
  const std::size_t n = config.n_concepts;
  const auto layers = static_cast<std::size_t>(config.dag_layers);
  ConceptDag dag;
  dag.layer.resize(n);
  for (std::size_t i = 0; i < n; ++i) dag.layer[i] = static_cast<int>(i * layers / n);
  auto rng = Rng::derive(seed, "dag");
  for (std::size_t to = 0; to < n; ++to)
    for (std::size_t from = 0; from < n; ++from)
      if (dag.layer[from] < dag.layer[to] &&
          (config.max_layer_gap == 0 || dag.layer[to] - dag.layer[from] <= config.max_layer_gap) &&
          rng.bernoulli(config.prereq_prob))
        dag.edges.emplace_back(from, to);
  std::sort(dag.edges.begin(), dag.edges.end());
  return dag;
}

namespace {

std::string make_id(char prefix, std::size_t i, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(count).size());
  std::string digits = std::to_string(i + 1);
  return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
}

std::size_t draw_category(Rng& rng, const std::array<double, 5>& weights) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace

SynthCohort gen_cohort(const SynthConfig& config) {
  config.validate();
  const std::size_t nl = config.n_learners;
  const std::size_t nk = config.n_concepts;
  const auto dag = gen_concept_dag(config, config.seed);

  std::vector<std::vector<std::size_t>> parents(nk);
  for (auto [from, to] : dag.edges) parents[to].push_back(from);

  std::vector<std::size_t> all(nk);
  std::iota(all.begin(), all.end(), 0);
  auto item_rng = Rng::derive(config.seed, "items");
  auto assessed = item_rng.sample(std::span<const std::size_t>(all), config.n_items);
  std::sort(assessed.begin(), assessed.end());
  std::vector<std::uint8_t> is_assessed(nk, 0);
  for (auto k : assessed) is_assessed[k] = 1;

  SynthCohort out;
  auto& rec = out.records;
  auto& truth = out.truth;
  for (std::size_t l = 0; l < nl; ++l) rec.learners.push_back(make_id('s', l, nl));
  for (std::size_t k = 0; k < nk; ++k) {
    auto id = make_id('k', k, nk);
    rec.concepts.push_back({id, "Concept " + id.substr(1) + " (layer " + std::to_string(dag.layer[k]) + ")"});
  }
  for (std::size_t q = 0; q < assessed.size(); ++q) {
    auto id = make_id('q', q, assessed.size());
    rec.assessments.push_back({id, "Item " + id.substr(1), rec.concepts[assessed[q]].id});
  }
  for (auto [from, to] : dag.edges) rec.prerequisites.emplace_back(rec.concepts[from].id, rec.concepts[to].id);

  truth.true_mastery.assign(nl, std::vector<std::uint8_t>(nk, 0));
  truth.true_perceived.assign(nl, std::vector<std::uint8_t>(nk, 0));
  truth.persona.resize(nl);
  truth.ability.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    auto rng = Rng::derive(config.seed, "learner", l);
    const auto p = draw_category(rng, config.persona_mix);
    const auto& persona = config.personas[p];
    truth.persona[l] = static_cast<Pattern>(p);
    const double ability = rng.beta(persona.ability_alpha, persona.ability_beta);
    truth.ability[l] = ability;

    auto& mastery = truth.true_mastery[l];
    auto& perceived = truth.true_perceived[l];
    // Concept indices are a topological order: edges only go to higher layers.
    for (std::size_t k = 0; k < nk; ++k) {
      const bool prereqs_ok = std::all_of(parents[k].begin(), parents[k].end(), [&](auto j) { return mastery[j] != 0; });
      mastery[k] = rng.bernoulli(ability * (prereqs_ok ? config.mastery_base : config.mastery_penalty));
    }
    for (std::size_t k = 0; k < nk; ++k)
      perceived[k] = mastery[k] ? rng.bernoulli(persona.sensitivity) : !rng.bernoulli(persona.specificity);
    for (std::size_t k = 0; k < nk; ++k) {
      if (!is_assessed[k] && !config.mention_unassessed) continue;
      if (rng.bernoulli(config.mention_prob)) {
        rec.perceptions.push_back(
            {rec.learners[l], rec.concepts[k].id, perceived[k] ? PerceivedState::kKnow : PerceivedState::kDontKnow});
      } else if (is_assessed[k]) {
        truth.latent_labels.push_back(
            {LearnerId{static_cast<std::uint32_t>(l)}, ConceptId{static_cast<std::uint32_t>(k)}, perceived[k] != 0});
      }
    }
    for (std::size_t q = 0; q < assessed.size(); ++q) {
      const bool correct = mastery[assessed[q]] ? rng.bernoulli(1.0 - config.slip) : rng.bernoulli(config.guess);
      rec.responses.push_back({rec.learners[l], rec.assessments[q].id, correct});
    }
  }
  return out;
}

json ground_truth_to_json(const GroundTruth& truth, const HeteroGraph& graph) {
  json labels = json::array();
  for (const auto& lab : truth.latent_labels)
    labels.push_back({{"learner", graph.learner_id(lab.learner)},
                      {"concept", graph.concept_id(lab.concept_id)},
                      {"perceived", lab.perceived_know ? 1 : 0}});
  json personas = json::array();
  for (std::size_t l = 0; l < truth.persona.size(); ++l)
    personas.push_back({{"learner", graph.learner_id(LearnerId{static_cast<std::uint32_t>(l)})},
                        {"persona", to_string(truth.persona[l])},
                        {"ability", truth.ability[l]}});
  return {{"latent_labels", labels}, {"learners", personas}};
}

std::vector<LatentLabel> parse_latent_labels(const json& doc, const HeteroGraph& graph) {
  std::vector<LatentLabel> out;
  try {
    for (const auto& v : doc.at("latent_labels")) {
      const auto l = graph.find_learner(v.at("learner").get<std::string>());
      const auto k = graph.find_concept(v.at("concept").get<std::string>());
      if (!l || !k) fail(ErrorKind::kParse, "unknown_id", "latent label references an id not in the graph");
      const auto& p = v.at("perceived");
      bool know = false;
      if (p.is_string()) {
        const auto s = p.get<std::string>();
        if (s != "know" && s != "dont_know") fail(ErrorKind::kParse, "parse_error", "perceived must be know|dont_know");
        know = s == "know";
      } else {
        know = p.get<int>() != 0;
      }
      out.push_back({*l, *k, know});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, "parse_error", std::string("malformed ground-truth sidecar: ") + e.what());
  }
  std::sort(out.begin(), out.end(), [](const LatentLabel& a, const LatentLabel& b) {
    return std::tie(a.learner, a.concept_id) < std::tie(b.learner, b.concept_id);
  });
  return out;
}

std::vector<LatentLabel> read_latent_labels(const std::filesystem::path& path, const HeteroGraph& graph) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "io_error", "cannot open ground-truth file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, "parse_error", std::string("malformed ground-truth sidecar: ") + e.what());
  }
  return parse_latent_labels(doc, graph);
}

}  // namespace kmc
