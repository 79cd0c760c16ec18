#include "fairmeasure/chain_io.hpp"

#include <fstream>

namespace fairmeasure {

using nlohmann::json;

ParseError::ParseError(std::string f, const std::string& what)
    : SpecError(f + ": " + what), field(std::move(f)) {}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // e.byte is the offset; report line numbers for humans.
    in.clear();
    in.seekg(0);
    std::size_t line = 1;
    for (std::size_t k = 0; k + 1 < e.byte && in; ++k)
      if (in.get() == '\n') ++line;
    throw ParseError(path.string() + ":" + std::to_string(line), e.what());
  }
}

void check_schema_version(const json& doc) {
  if (!doc.is_object()) throw ParseError("/", "expected an object");
  if (!doc.contains("schema_version")) return;
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion)
    throw SchemaMismatch("unsupported schema_version " + doc["schema_version"].dump() + " (expected " +
                         std::to_string(kSchemaVersion) + ")");
}

namespace {

std::int64_t as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ParseError(field, "expected an integer");
  return v.get<std::int64_t>();
}

std::optional<std::int64_t> optional_int(const json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return as_int(obj[key], field + "/" + key);
}

Bound bound_from_json(const json& v, const std::string& field) {
  if (v.is_null()) return Bound::unbounded();
  if (!v.is_object() || v.size() != 1) throw ParseError(field, "expected null, {\"abs\": n} or {\"rel\": d}");
  if (v.contains("abs")) return Bound::absolute(as_int(v["abs"], field + "/abs"));
  if (v.contains("rel")) return Bound::relative(as_int(v["rel"], field + "/rel"));
  throw ParseError(field, "expected null, {\"abs\": n} or {\"rel\": d}");
}

json bound_to_json(const Bound& b) {
  switch (b.kind) {
    case Bound::Kind::Unbounded: return nullptr;
    case Bound::Kind::Absolute: return json{{"abs", b.value}};
    case Bound::Kind::Relative: return json{{"rel", b.value}};
  }
  return nullptr;
}

}  // namespace

BuiltinChain chain_from_json(const json& doc) {
  check_schema_version(doc);
  if (doc.contains("builtin")) {
    if (!doc["builtin"].is_string()) throw ParseError("/builtin", "expected a string");
    try {
      return builtin_chain(doc["builtin"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError("/builtin", e.what());
    }
  }
  std::string name = doc.value("name", std::string("chain"));

  IndexInterval range;
  if (doc.contains("state_space")) {
    const auto& s = doc["state_space"];
    if (!s.is_object()) throw ParseError("/state_space", "expected an object");
    range.lo = optional_int(s, "min", "/state_space");
    range.hi = optional_int(s, "max", "/state_space");
  }
  std::int64_t window = doc.contains("window") ? as_int(doc["window"], "/window") : 0;

  std::map<StateId, std::vector<StateId>> rows;
  if (doc.contains("states")) {
    const auto& states = doc["states"];
    if (!states.is_object()) throw ParseError("/states", "expected an object keyed by state index");
    for (const auto& [key, succ] : states.items()) {
      const std::string field = "/states/" + key;
      std::int64_t i = 0;
      std::size_t used = 0;
      try {
        i = std::stoll(key, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != key.size()) throw ParseError(field, "state key is not an integer");
      if (!succ.is_array()) throw ParseError(field, "expected an array of successor indices");
      auto& row = rows[StateId(i)];
      for (std::size_t k = 0; k < succ.size(); ++k) row.emplace_back(as_int(succ[k], field + "/" + std::to_string(k)));
    }
  }

  std::vector<TailRule> rules;
  if (doc.contains("tail_rules")) {
    const auto& arr = doc["tail_rules"];
    if (!arr.is_array()) throw ParseError("/tail_rules", "expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const auto& r = arr[k];
      const std::string field = "/tail_rules/" + std::to_string(k);
      if (!r.is_object()) throw ParseError(field, "expected an object");
      TailRule rule;
      rule.domain.period = r.contains("period") ? as_int(r["period"], field + "/period") : 1;
      rule.domain.residue = r.contains("residue") ? as_int(r["residue"], field + "/residue") : 0;
      rule.domain.range = {optional_int(r, "min", field), optional_int(r, "max", field)};
      if (rule.domain.period < 1) throw ParseError(field + "/period", "must be positive");
      if (r.contains("offsets")) {
        if (!r["offsets"].is_array()) throw ParseError(field + "/offsets", "expected an array");
        for (std::size_t q = 0; q < r["offsets"].size(); ++q)
          rule.ranges.push_back(SuccessorRange::offset(as_int(r["offsets"][q], field + "/offsets/" + std::to_string(q))));
      }
      if (r.contains("ranges")) {
        if (!r["ranges"].is_array()) throw ParseError(field + "/ranges", "expected an array");
        for (std::size_t q = 0; q < r["ranges"].size(); ++q) {
          const auto& rr = r["ranges"][q];
          const std::string rf = field + "/ranges/" + std::to_string(q);
          if (!rr.is_object()) throw ParseError(rf, "expected an object");
          rule.ranges.push_back({bound_from_json(rr.value("lo", json()), rf + "/lo"),
                                 bound_from_json(rr.value("hi", json()), rf + "/hi")});
        }
      }
      if (rule.ranges.empty()) throw ParseError(field, "rule has neither offsets nor ranges");
      rules.push_back(std::move(rule));
    }
  }

  try {
    auto m = std::make_shared<TransitionRuleSet>(name, StateSpace(range), std::move(rows), std::move(rules), window);
    return {m, std::nullopt, "loaded from JSON"};
  } catch (const InvalidRuleSet& e) {
    throw ParseError("/", e.what());
  }
}

nlohmann::ordered_json chain_to_json(const TransitionRuleSet& m) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = m.name();
  const auto& r = m.states().range();
  doc["state_space"] = {{"min", r.lo ? json(*r.lo) : json(nullptr)}, {"max", r.hi ? json(*r.hi) : json(nullptr)}};
  doc["window"] = m.declared_window();
  nlohmann::ordered_json states = nlohmann::ordered_json::object();
  for (const auto& [i, succ] : m.explicit_rows()) {
    auto arr = nlohmann::ordered_json::array();
    for (StateId j : succ) arr.push_back(j.index);
    states[std::to_string(i.index)] = arr;
  }
  doc["states"] = states;
  auto rules = nlohmann::ordered_json::array();
  for (const auto& rule : m.tail_rules()) {
    nlohmann::ordered_json jr;
    jr["period"] = rule.domain.period;
    jr["residue"] = rule.domain.residue;
    jr["min"] = rule.domain.range.lo ? json(*rule.domain.range.lo) : json(nullptr);
    jr["max"] = rule.domain.range.hi ? json(*rule.domain.range.hi) : json(nullptr);
    auto ranges = nlohmann::ordered_json::array();
    for (const auto& sr : rule.ranges) ranges.push_back({{"lo", bound_to_json(sr.lo)}, {"hi", bound_to_json(sr.hi)}});
    jr["ranges"] = ranges;
    rules.push_back(jr);
  }
  doc["tail_rules"] = rules;
  return doc;
}

BuiltinChain load_chain(const std::string& source) {
  if (source.starts_with("builtin:")) {
    try {
      return builtin_chain(source.substr(8));
    } catch (const std::invalid_argument& e) {
      throw ParseError("input", e.what());
    }
  }
  return chain_from_json(read_json_file(source));
}

}  // namespace fairmeasure
