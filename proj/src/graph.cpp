#include "kmcoach/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "kmcoach/error.hpp"

namespace kmc {

namespace {

using json = nlohmann::json;

Diagnostic diag(std::string code, std::vector<std::string> ids, std::string message) {
  return Diagnostic{std::move(code), std::move(ids), std::move(message)};
}

// Kahn's algorithm over dense indices; returns the order (shorter than n on a cycle).
std::vector<std::uint32_t> topo_sort(std::size_t n, const std::vector<std::vector<std::uint32_t>>& out) {
  std::vector<int> indegree(n, 0);
  for (const auto& targets : out)
    for (auto t : targets) ++indegree[t];
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto t : out[v])
      if (--indegree[t] == 0) ready.push(t);
  }
  return order;
}

}  // namespace

std::string to_string(PerceivedState s) { return s == PerceivedState::kKnow ? "know" : "dont_know"; }

std::vector<Diagnostic> validate(const GraphRecords& r) {
  std::vector<Diagnostic> out;

  std::set<std::string> learners;
  for (const auto& id : r.learners) {
    if (id.empty()) out.push_back(diag("empty_id", {}, "learner with empty id"));
    else if (!learners.insert(id).second)
      out.push_back(diag("duplicate_id", {id}, "learner '" + id + "' declared more than once"));
  }

  std::map<std::string, std::uint32_t> concepts;
  for (const auto& c : r.concepts) {
    if (c.id.empty()) out.push_back(diag("empty_id", {}, "concept with empty id"));
    else if (!concepts.emplace(c.id, static_cast<std::uint32_t>(concepts.size())).second)
      out.push_back(diag("duplicate_id", {c.id}, "concept '" + c.id + "' declared more than once"));
  }

  std::map<std::string, std::string> items;
  std::set<std::string> reported_items;
  for (const auto& a : r.assessments) {
    if (a.id.empty()) {
      out.push_back(diag("empty_id", {}, "assessment with empty id"));
      continue;
    }
    if (!concepts.contains(a.concept_id))
      out.push_back(diag("dangling_endpoint", {a.id, a.concept_id},
                         "assessment '" + a.id + "' maps to unknown concept '" + a.concept_id + "'"));
    auto [it, inserted] = items.emplace(a.id, a.concept_id);
    if (!inserted && reported_items.insert(a.id).second) {
      if (it->second != a.concept_id)
        out.push_back(diag("duplicate_item_mapping", {a.id},
                           "assessment '" + a.id + "' is mapped to more than one concept"));
      else
        out.push_back(diag("duplicate_id", {a.id}, "assessment '" + a.id + "' declared more than once"));
    }
  }

  std::vector<std::vector<std::uint32_t>> out_edges(concepts.size());
  for (const auto& [from, to] : r.prerequisites) {
    auto f = concepts.find(from);
    auto t = concepts.find(to);
    if (f == concepts.end() || t == concepts.end()) {
      out.push_back(diag("dangling_endpoint", {from, to},
                         "prerequisite '" + from + "' -> '" + to + "' references an unknown concept"));
      continue;
    }
    out_edges[f->second].push_back(t->second);
  }
  const auto order = topo_sort(concepts.size(), out_edges);
  if (order.size() != concepts.size()) {
    std::vector<bool> placed(concepts.size(), false);
    for (auto v : order) placed[v] = true;
    std::vector<std::string> ids;
    for (const auto& [id, idx] : concepts)
      if (!placed[idx]) ids.push_back(id);
    out.push_back(diag("cycle", ids, "prerequisite relation is not acyclic"));
  }

  std::map<std::pair<std::string, std::string>, PerceivedState> perceptions;
  std::set<std::pair<std::string, std::string>> conflicts;
  for (const auto& p : r.perceptions) {
    if (!learners.contains(p.learner) || !concepts.contains(p.concept_id)) {
      out.push_back(diag("dangling_endpoint", {p.learner, p.concept_id},
                         "perception references unknown learner or concept"));
      continue;
    }
    auto key = std::make_pair(p.learner, p.concept_id);
    auto [it, inserted] = perceptions.emplace(key, p.state);
    if (!inserted && it->second != p.state && conflicts.insert(key).second)
      out.push_back(diag("perception_conflict", {p.learner, p.concept_id},
                         "learner '" + p.learner + "' reports both know and dont_know for '" +
                             p.concept_id + "'"));
  }

  std::map<std::pair<std::string, std::string>, bool> responses;
  std::set<std::pair<std::string, std::string>> response_conflicts;
  for (const auto& resp : r.responses) {
    if (!learners.contains(resp.learner) || !items.contains(resp.assessment)) {
      out.push_back(diag("dangling_endpoint", {resp.learner, resp.assessment},
                         "response references unknown learner or assessment"));
      continue;
    }
    auto key = std::make_pair(resp.learner, resp.assessment);
    auto [it, inserted] = responses.emplace(key, resp.correct);
    if (!inserted && it->second != resp.correct && response_conflicts.insert(key).second)
      out.push_back(diag("response_conflict", {resp.learner, resp.assessment},
                         "learner '" + resp.learner + "' has conflicting responses to '" + resp.assessment + "'"));
  }
  return out;
}

HeteroGraph HeteroGraph::build(const GraphRecords& r) {
  if (auto diags = validate(r); !diags.empty()) {
    std::string message = "invalid graph: " + diags.front().message;
    if (diags.size() > 1) message += " (+" + std::to_string(diags.size() - 1) + " more)";
    fail(ErrorKind::kValidation, diags.front().code, message);
  }

  HeteroGraph g;
  for (const auto& id : r.learners) {
    g.learner_index_.emplace(id, static_cast<std::uint32_t>(g.learner_ids_.size()));
    g.learner_ids_.push_back(id);
  }
  for (const auto& c : r.concepts) {
    g.concept_index_.emplace(c.id, static_cast<std::uint32_t>(g.concept_ids_.size()));
    g.concept_ids_.push_back(c.id);
    g.concept_labels_.push_back(c.label);
  }
  for (const auto& a : r.assessments) {
    if (g.item_index_.contains(a.id)) continue;
    g.item_index_.emplace(a.id, static_cast<std::uint32_t>(g.item_ids_.size()));
    g.item_ids_.push_back(a.id);
    g.item_labels_.push_back(a.label);
    g.item_concept_.push_back(ConceptId{g.concept_index_.at(a.concept_id)});
  }

  const std::size_t nk = g.concept_ids_.size();
  const std::size_t nl = g.learner_ids_.size();
  for (const auto& [from, to] : r.prerequisites)
    g.prereqs_.emplace_back(ConceptId{g.concept_index_.at(from)}, ConceptId{g.concept_index_.at(to)});
  std::sort(g.prereqs_.begin(), g.prereqs_.end());
  g.prereqs_.erase(std::unique(g.prereqs_.begin(), g.prereqs_.end()), g.prereqs_.end());

  g.parents_.assign(nk, {});
  g.children_.assign(nk, {});
  std::vector<std::vector<std::uint32_t>> out_edges(nk);
  for (auto [from, to] : g.prereqs_) {
    g.children_[from.value].push_back(to);
    g.parents_[to.value].push_back(from);
    out_edges[from.value].push_back(to.value);
  }
  for (auto v : topo_sort(nk, out_edges)) g.topo_.push_back(ConceptId{v});
  g.depth_.assign(nk, 0);
  for (auto k : g.topo_)
    for (auto p : g.parents_[k.value]) g.depth_[k.value] = std::max(g.depth_[k.value], g.depth_[p.value] + 1);

  for (const auto& p : r.perceptions) {
    LearnerConcept e{LearnerId{g.learner_index_.at(p.learner)}, ConceptId{g.concept_index_.at(p.concept_id)}};
    (p.state == PerceivedState::kKnow ? g.know_edges_ : g.dontknow_edges_).push_back(e);
  }
  for (auto* edges : {&g.know_edges_, &g.dontknow_edges_}) {
    std::sort(edges->begin(), edges->end());
    edges->erase(std::unique(edges->begin(), edges->end()), edges->end());
  }
  g.known_.assign(nl, {});
  g.dont_know_.assign(nl, {});
  for (auto [l, k] : g.know_edges_) g.known_[l.value].push_back(k);
  for (auto [l, k] : g.dontknow_edges_) g.dont_know_[l.value].push_back(k);

  g.responses_.assign(nl, {});
  for (const auto& resp : r.responses) {
    const auto l = g.learner_index_.at(resp.learner);
    g.responses_[l].push_back(Response{AssessmentId{g.item_index_.at(resp.assessment)}, resp.correct});
  }
  for (auto& list : g.responses_) {
    std::sort(list.begin(), list.end(), [](const Response& a, const Response& b) { return a.item < b.item; });
    list.erase(std::unique(list.begin(), list.end(),
                           [](const Response& a, const Response& b) { return a.item == b.item; }),
               list.end());
  }

  g.assessed_mask_.assign(nk, 0);
  for (auto k : g.item_concept_) g.assessed_mask_[k.value] = 1;
  for (std::uint32_t k = 0; k < nk; ++k)
    if (g.assessed_mask_[k]) g.assessed_.push_back(ConceptId{k});
  return g;
}

std::optional<LearnerId> HeteroGraph::find_learner(const std::string& id) const {
  auto it = learner_index_.find(id);
  if (it == learner_index_.end()) return std::nullopt;
  return LearnerId{it->second};
}

std::optional<ConceptId> HeteroGraph::find_concept(const std::string& id) const {
  auto it = concept_index_.find(id);
  if (it == concept_index_.end()) return std::nullopt;
  return ConceptId{it->second};
}

std::optional<AssessmentId> HeteroGraph::find_assessment(const std::string& id) const {
  auto it = item_index_.find(id);
  if (it == item_index_.end()) return std::nullopt;
  return AssessmentId{it->second};
}

std::optional<PerceivedState> HeteroGraph::perception(LearnerId l, ConceptId k) const {
  if (std::binary_search(known_[l.value].begin(), known_[l.value].end(), k)) return PerceivedState::kKnow;
  if (std::binary_search(dont_know_[l.value].begin(), dont_know_[l.value].end(), k))
    return PerceivedState::kDontKnow;
  return std::nullopt;
}

std::size_t HeteroGraph::num_responses() const {
  std::size_t n = 0;
  for (const auto& list : responses_) n += list.size();
  return n;
}

GraphRecords HeteroGraph::to_records() const {
  GraphRecords r;
  r.learners = learner_ids_;
  for (std::size_t k = 0; k < concept_ids_.size(); ++k) r.concepts.push_back({concept_ids_[k], concept_labels_[k]});
  for (std::size_t q = 0; q < item_ids_.size(); ++q)
    r.assessments.push_back({item_ids_[q], item_labels_[q], concept_ids_[item_concept_[q].value]});
  for (auto [from, to] : prereqs_) r.prerequisites.emplace_back(concept_ids_[from.value], concept_ids_[to.value]);
  // Perceptions ordered by (learner, concept) with know before dont_know for a learner.
  for (std::size_t l = 0; l < learner_ids_.size(); ++l) {
    for (auto k : known_[l]) r.perceptions.push_back({learner_ids_[l], concept_ids_[k.value], PerceivedState::kKnow});
    for (auto k : dont_know_[l])
      r.perceptions.push_back({learner_ids_[l], concept_ids_[k.value], PerceivedState::kDontKnow});
  }
  for (std::size_t l = 0; l < learner_ids_.size(); ++l)
    for (const auto& resp : responses_[l]) r.responses.push_back({learner_ids_[l], item_ids_[resp.item.value], resp.correct});
  return r;
}

std::string HeteroGraph::fingerprint() const {
  // Canonical form: every collection sorted by external ids.
  std::vector<std::string> lines;
  for (const auto& id : learner_ids_) lines.push_back("S\t" + id);
  for (std::size_t k = 0; k < concept_ids_.size(); ++k) lines.push_back("K\t" + concept_ids_[k] + "\t" + concept_labels_[k]);
  for (std::size_t q = 0; q < item_ids_.size(); ++q)
    lines.push_back("Q\t" + item_ids_[q] + "\t" + item_labels_[q] + "\t" + concept_ids_[item_concept_[q].value]);
  for (auto [from, to] : prereqs_) lines.push_back("P\t" + concept_ids_[from.value] + "\t" + concept_ids_[to.value]);
  for (auto [l, k] : know_edges_) lines.push_back("+\t" + learner_ids_[l.value] + "\t" + concept_ids_[k.value]);
  for (auto [l, k] : dontknow_edges_) lines.push_back("-\t" + learner_ids_[l.value] + "\t" + concept_ids_[k.value]);
  for (std::size_t l = 0; l < learner_ids_.size(); ++l)
    for (const auto& resp : responses_[l])
      lines.push_back("R\t" + learner_ids_[l] + "\t" + item_ids_[resp.item.value] + "\t" + (resp.correct ? "1" : "0"));
  std::sort(lines.begin(), lines.end());

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& line : lines) {
    for (unsigned char c : line) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MentionPartition mention_partition(const HeteroGraph& graph, LearnerId learner) {
  if (learner.value >= graph.num_learners())
    fail(ErrorKind::kInvalidArgument, "unknown_learner", "learner index " + std::to_string(learner.value) + " out of range");
  MentionPartition part;
  for (auto k : graph.assessed_concepts()) {
    auto state = graph.perception(learner, k);
    if (!state) part.latent.push_back(k);
    else if (*state == PerceivedState::kKnow) part.known.push_back(k);
    else part.unknown.push_back(k);
  }
  return part;
}

std::size_t count_latent(const HeteroGraph& graph) {
  std::size_t n = 0;
  for (std::uint32_t l = 0; l < graph.num_learners(); ++l) n += mention_partition(graph, LearnerId{l}).latent.size();
  return n;
}

// ---------------------------------------------------------------------------
// File I/O

namespace {

std::string as_id(const json& v, const char* what) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() && v.contains("id") && v["id"].is_string()) return v["id"].get<std::string>();
  fail(ErrorKind::kParse, "parse_error", std::string("expected string id for ") + what);
}

std::string str_field(const json& obj, const char* key, const char* what, bool required = true) {
  if (!obj.is_object()) fail(ErrorKind::kParse, "parse_error", std::string(what) + " entry must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (!required) return {};
    fail(ErrorKind::kParse, "parse_error", std::string(what) + " entry missing '" + key + "'");
  }
  if (!it->is_string()) fail(ErrorKind::kParse, "parse_error", std::string(what) + "." + key + " must be a string");
  return it->get<std::string>();
}

bool parse_bit(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    const auto x = v.get<long long>();
    if (x == 0 || x == 1) return x == 1;
  }
  fail(ErrorKind::kParse, "parse_error", "response 'correct' must be 0 or 1");
}

const json& array_at(const json& doc, const char* key) {
  static const json empty = json::array();
  auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_array()) fail(ErrorKind::kParse, "parse_error", std::string("'") + key + "' must be an array");
  return *it;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

GraphRecords parse_graph_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::kParse, "parse_error", "graph document must be a JSON object");
  GraphRecords r;
  for (const auto& v : array_at(doc, "learners")) r.learners.push_back(as_id(v, "learner"));
  for (const auto& v : array_at(doc, "concepts"))
    r.concepts.push_back({str_field(v, "id", "concept"), str_field(v, "label", "concept", false)});
  for (const auto& v : array_at(doc, "assessments"))
    r.assessments.push_back({str_field(v, "id", "assessment"), str_field(v, "label", "assessment", false),
                             str_field(v, "concept", "assessment")});
  for (const auto& v : array_at(doc, "prerequisites")) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string())
      fail(ErrorKind::kParse, "parse_error", "prerequisite must be a [from, to] pair of ids");
    r.prerequisites.emplace_back(v[0].get<std::string>(), v[1].get<std::string>());
  }
  for (const auto& v : array_at(doc, "perceptions")) {
    const auto state = str_field(v, "state", "perception");
    if (state != "know" && state != "dont_know")
      fail(ErrorKind::kParse, "parse_error", "perception state must be \"know\" or \"dont_know\"");
    r.perceptions.push_back({str_field(v, "learner", "perception"), str_field(v, "concept", "perception"),
                             state == "know" ? PerceivedState::kKnow : PerceivedState::kDontKnow});
  }
  for (const auto& v : array_at(doc, "responses")) {
    if (!v.is_object() || !v.contains("correct")) fail(ErrorKind::kParse, "parse_error", "response entry missing 'correct'");
    r.responses.push_back({str_field(v, "learner", "response"), str_field(v, "assessment", "response"), parse_bit(v["correct"])});
  }
  return r;
}

GraphRecords read_graph_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "io_error", "cannot open graph file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, "parse_error", "malformed JSON in '" + path.string() + "': " + e.what());
  }
  return parse_graph_json(doc);
}

void merge_responses_csv(GraphRecords& records, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "io_error", "cannot open responses file '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
    if (lineno == 1 && !fields.empty() && fields[0] == "learner") continue;
    if (fields.size() != 3 || (fields[2] != "0" && fields[2] != "1"))
      fail(ErrorKind::kParse, "parse_error", path.string() + ":" + std::to_string(lineno) + ": expected learner,assessment,0|1");
    records.responses.push_back({fields[0], fields[1], fields[2] == "1"});
  }
}

HeteroGraph load_graph(const std::filesystem::path& path, const std::optional<std::filesystem::path>& responses_csv) {
  auto records = read_graph_records(path);
  if (responses_csv) merge_responses_csv(records, *responses_csv);
  return HeteroGraph::build(records);
}

json graph_to_json(const HeteroGraph& graph) {
  const auto r = graph.to_records();
  json doc;
  doc["learners"] = r.learners;
  doc["concepts"] = json::array();
  for (const auto& c : r.concepts) doc["concepts"].push_back({{"id", c.id}, {"label", c.label}});
  doc["assessments"] = json::array();
  for (const auto& a : r.assessments)
    doc["assessments"].push_back({{"id", a.id}, {"label", a.label}, {"concept", a.concept_id}});
  doc["prerequisites"] = json::array();
  for (const auto& [from, to] : r.prerequisites) doc["prerequisites"].push_back({from, to});
  doc["perceptions"] = json::array();
  for (const auto& p : r.perceptions)
    doc["perceptions"].push_back({{"learner", p.learner}, {"concept", p.concept_id}, {"state", to_string(p.state)}});
  doc["responses"] = json::array();
  for (const auto& resp : r.responses)
    doc["responses"].push_back({{"learner", resp.learner}, {"assessment", resp.assessment}, {"correct", resp.correct ? 1 : 0}});
  return doc;
}

void save_graph(const HeteroGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "io_error", "cannot write graph file '" + path.string() + "'");
  out << graph_to_json(graph).dump(1) << '\n';
}

}  // namespace kmc
