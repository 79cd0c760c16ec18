#include "fairmeasure/graph_model.hpp"

#include <algorithm>
#include <set>

namespace fairmeasure {

using nlohmann::json;

const Arc& TameGraphMapSpec::arc(std::int64_t id) const {
  for (const auto& a : arcs)
    if (a.id == id) return a;
  throw UnresolvableState(StateId(id));
}

void TameGraphMapSpec::validate() const {
  if (arcs.empty()) throw std::invalid_argument("graph has no arcs");
  std::set<std::int64_t> ids;
  for (const auto& a : arcs) {
    if (!ids.insert(a.id).second) throw NotMarkov(a.id, "arc listed twice");
    if (!(a.length > 0)) throw NotMarkov(a.id, "arc length must be positive");
  }
  for (const auto& a : arcs) {
    if (a.covers.empty()) throw NotMarkov(a.id, "image covers no arc");
    for (const auto& lap : a.covers)
      if (!ids.contains(lap.target))
        throw NotMarkov(a.id, "image covers unknown arc " + std::to_string(lap.target));
  }
  // Contiguity of the image path needs endpoints.
  for (const auto& a : arcs) {
    std::optional<std::string> at;
    for (std::size_t k = 0; k < a.covers.size(); ++k) {
      const Arc& t = arc(a.covers[k].target);
      auto from = a.covers[k].increasing ? t.start_vertex : t.end_vertex;
      auto to = a.covers[k].increasing ? t.end_vertex : t.start_vertex;
      if (!from || !to) {
        at.reset();
        continue;
      }
      if (k == 0 && a.start_vertex && vertex_images.contains(*a.start_vertex) &&
          vertex_images.at(*a.start_vertex) != *from)
        throw NotMarkov(a.id, "image path does not start at the image of the start vertex");
      if (at && *at != *from)
        throw NotMarkov(a.id, "laps " + std::to_string(k - 1) + " and " + std::to_string(k) + " are not contiguous");
      at = to;
    }
    if (at && a.end_vertex && vertex_images.contains(*a.end_vertex) && vertex_images.at(*a.end_vertex) != *at)
      throw NotMarkov(a.id, "image path does not end at the image of the end vertex");
  }
}

TameGraphMapSpec TameGraphMapSpec::truncated(std::size_t n) const {
  if (n == 0 || n >= arcs.size()) return *this;
  TameGraphMapSpec out{name, {arcs.begin(), arcs.begin() + static_cast<std::ptrdiff_t>(n)}, vertex_images};
  std::set<std::int64_t> kept;
  for (const auto& a : out.arcs) kept.insert(a.id);
  for (auto& a : out.arcs)
    std::erase_if(a.covers, [&](const Lap& l) { return !kept.contains(l.target); });
  return out;
}

std::vector<RefinedState> refined_states(const TameGraphMapSpec& spec) {
  std::vector<RefinedState> out;
  for (const auto& a : spec.arcs)
    for (std::size_t k = 0; k < a.covers.size(); ++k)
      out.push_back({static_cast<std::int64_t>(out.size()), a.id, k});
  return out;
}

namespace {

std::map<std::int64_t, std::vector<std::int64_t>> laps_by_arc(const std::vector<RefinedState>& refined) {
  std::map<std::int64_t, std::vector<std::int64_t>> out;
  for (const auto& r : refined) out[r.arc].push_back(r.id);
  return out;
}

}  // namespace

RuleSetPtr refined_transition_matrix(const TameGraphMapSpec& full, std::size_t window) {
  TameGraphMapSpec spec = full.truncated(window);
  spec.validate();
  auto refined = refined_states(spec);
  auto laps = laps_by_arc(refined);
  std::map<StateId, std::vector<StateId>> rows;
  for (const auto& r : refined) {
    auto& row = rows[StateId(r.id)];
    for (auto j : laps[spec.arc(r.arc).covers[r.lap].target]) row.emplace_back(j);
  }
  const auto n = static_cast<std::int64_t>(refined.size());
  return std::make_shared<TransitionRuleSet>(spec.name + "-refined", StateSpace::finite(0, n - 1), std::move(rows),
                                             std::vector<TailRule>{});
}

Rational CutAndPasteModel::evaluate(const Rational& x) const {
  if (!map.partition().locate(x)) return Rational(0);
  return map.apply(x);
}

CutAndPasteModel cut_and_paste(const TameGraphMapSpec& spec) {
  spec.validate();
  auto refined = refined_states(spec);
  std::vector<Placement> placements;
  std::map<std::int64_t, std::size_t> slot;
  Rational hi(1);
  for (const auto& a : spec.arcs) {
    slot[a.id] = placements.size();
    placements.push_back({a.id, hi / 2, hi});
    hi /= 2;
  }
  // Laps split their arc's slot into equal parts, in order.
  std::vector<Cell> cells;
  std::vector<ExplicitBranch> branches;
  for (const auto& r : refined) {
    const Arc& a = spec.arc(r.arc);
    const Placement& p = placements[slot[a.id]];
    Rational step = (p.hi - p.lo) / Rational(static_cast<long long>(a.covers.size()));
    Rational lo = p.lo + step * Rational(static_cast<long long>(r.lap));
    cells.push_back({r.id, lo, lo + step});
    const Lap& lap = a.covers[r.lap];
    const Placement& t = placements[slot[lap.target]];
    branches.push_back({r.id, t.lo, t.hi, lap.increasing});
  }
  MarkovIntervalMap f(spec.name + "-cut-and-paste", Partition::explicit_cells(std::move(cells)), std::move(branches));
  return {std::move(placements), std::move(refined), std::move(f), hi};
}

TameGraphMapSpec dendrite_example(std::size_t blades) {
  if (blades < 2) throw std::invalid_argument("the dendrite needs at least two blades");
  TameGraphMapSpec spec;
  spec.name = "dendrite-" + std::to_string(blades);
  spec.vertex_images["O"] = "O";
  const auto w = static_cast<std::int64_t>(blades);
  for (std::int64_t i = 1; i <= w; ++i) {
    Arc a{i, Rational(1, i), "O", "E" + std::to_string(i), {}};
    for (std::int64_t b = std::max<std::int64_t>(1, i - 1); b <= w; ++b) {
      a.covers.push_back({b, true});
      a.covers.push_back({b, false});
    }
    spec.vertex_images["E" + std::to_string(i)] = "O";
    spec.arcs.push_back(std::move(a));
  }
  return spec;
}

TameGraphMapSpec folded_arc() {
  return {"folded-arc", {Arc{0, Rational(1), "a", "b", {{0, true}, {0, false}}}}, {{"a", "a"}, {"b", "a"}}};
}

TameGraphMapSpec arc_exchange() {
  return {"arc-exchange",
          {Arc{0, Rational(1), "a", "b", {{1, true}}}, Arc{1, Rational(1), "c", "d", {{0, true}}}},
          {{"a", "c"}, {"b", "d"}, {"c", "a"}, {"d", "b"}}};
}

TameGraphMapSpec full_shift_arcs() {
  return {"full-shift-arcs",
          {Arc{0, Rational(1), "a", "m", {{0, true}, {1, true}}}, Arc{1, Rational(1), "m", "b", {{1, false}, {0, false}}}},
          {{"a", "a"}, {"m", "b"}, {"b", "a"}}};
}

TameGraphMapSpec builtin_graph(const std::string& name, std::size_t blades) {
  if (name == "dendrite") return dendrite_example(blades);
  if (name == "folded-arc") return folded_arc();
  if (name == "arc-exchange") return arc_exchange();
  if (name == "full-shift-arcs") return full_shift_arcs();
  throw std::invalid_argument("unknown builtin graph '" + name + "'");
}

namespace {

Rational rational_value(const json& v, const std::string& field) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  } catch (const std::exception& e) {
    throw ParseError(field, e.what());
  }
  throw ParseError(field, "expected a rational number");
}

std::optional<std::string> opt_string(const json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string()) throw ParseError(field + "/" + key, "expected a string");
  return obj[key].get<std::string>();
}

}  // namespace

TameGraphMapSpec graph_from_json(const json& doc) {
  check_schema_version(doc);
  if (doc.contains("builtin")) {
    if (!doc["builtin"].is_string()) throw ParseError("/builtin", "expected a string");
    std::size_t blades = 12;
    if (doc.contains("blades")) {
      if (!doc["blades"].is_number_unsigned()) throw ParseError("/blades", "expected a positive integer");
      blades = doc["blades"].get<std::size_t>();
    }
    try {
      return builtin_graph(doc["builtin"].get<std::string>(), blades);
    } catch (const std::invalid_argument& e) {
      throw ParseError("/builtin", e.what());
    }
  }
  if (!doc.contains("arcs") || !doc["arcs"].is_array()) throw ParseError("/arcs", "missing array");
  if (!doc.contains("transitions") || !doc["transitions"].is_object())
    throw ParseError("/transitions", "missing object");
  TameGraphMapSpec spec;
  spec.name = doc.value("name", std::string("graph"));
  for (std::size_t k = 0; k < doc["arcs"].size(); ++k) {
    const auto& a = doc["arcs"][k];
    const std::string f = "/arcs/" + std::to_string(k);
    if (!a.is_object() || !a.contains("id") || !a["id"].is_number_integer())
      throw ParseError(f, "expected an object with an integer id");
    if (a.contains("tail")) throw ParseError(f + "/tail", "rule-generated arc tails are not supported; list arcs explicitly");
    Arc arc;
    arc.id = a["id"].get<std::int64_t>();
    if (a.contains("length")) arc.length = rational_value(a["length"], f + "/length");
    arc.start_vertex = opt_string(a, "start", f);
    arc.end_vertex = opt_string(a, "end", f);
    const std::string key = std::to_string(arc.id);
    if (!doc["transitions"].contains(key) || !doc["transitions"][key].is_array())
      throw ParseError("/transitions/" + key, "missing covered-arc list");
    const auto& laps = doc["transitions"][key];
    for (std::size_t m = 0; m < laps.size(); ++m) {
      const std::string g = "/transitions/" + key + "/" + std::to_string(m);
      const auto& l = laps[m];
      if (!l.is_object() || !l.contains("arc") || !l["arc"].is_number_integer())
        throw ParseError(g, "expected {arc, orientation}");
      std::string o = l.value("orientation", std::string("increasing"));
      if (o != "increasing" && o != "decreasing") throw ParseError(g + "/orientation", "expected increasing or decreasing");
      arc.covers.push_back({l["arc"].get<std::int64_t>(), o == "increasing"});
    }
    spec.arcs.push_back(std::move(arc));
  }
  if (doc.contains("vertex_images")) {
    if (!doc["vertex_images"].is_object()) throw ParseError("/vertex_images", "expected an object");
    for (const auto& [v, img] : doc["vertex_images"].items()) {
      if (!img.is_string()) throw ParseError("/vertex_images/" + v, "expected a vertex name");
      spec.vertex_images[v] = img.get<std::string>();
    }
  }
  return spec;
}

nlohmann::ordered_json graph_to_json(const TameGraphMapSpec& spec) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = spec.name;
  auto arcs = nlohmann::ordered_json::array();
  nlohmann::ordered_json transitions = nlohmann::ordered_json::object();
  for (const auto& a : spec.arcs) {
    nlohmann::ordered_json ja{{"id", a.id}, {"length", a.length.str()}};
    if (a.start_vertex) ja["start"] = *a.start_vertex;
    if (a.end_vertex) ja["end"] = *a.end_vertex;
    arcs.push_back(ja);
    auto laps = nlohmann::ordered_json::array();
    for (const auto& l : a.covers)
      laps.push_back({{"arc", l.target}, {"orientation", l.increasing ? "increasing" : "decreasing"}});
    transitions[std::to_string(a.id)] = laps;
  }
  doc["arcs"] = arcs;
  doc["transitions"] = transitions;
  nlohmann::ordered_json vi = nlohmann::ordered_json::object();
  for (const auto& [v, img] : spec.vertex_images) vi[v] = img;
  doc["vertex_images"] = vi;
  return doc;
}

TameGraphMapSpec load_graph(const std::string& source) {
  if (source.starts_with("builtin:")) {
    std::string name = source.substr(8);
    std::size_t blades = 12;
    if (auto dash = name.rfind('-'); name.starts_with("dendrite-") && dash != std::string::npos) {
      try {
        blades = std::stoul(name.substr(dash + 1));
      } catch (const std::exception&) {
        throw ParseError("input", "bad blade count in '" + name + "'");
      }
      name = "dendrite";
    }
    try {
      return builtin_graph(name, blades);
    } catch (const std::invalid_argument& e) {
      throw ParseError("input", e.what());
    }
  }
  return graph_from_json(read_json_file(source));
}

}  // namespace fairmeasure
