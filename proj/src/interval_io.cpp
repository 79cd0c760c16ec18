#include "fairmeasure/interval_io.hpp"

namespace fairmeasure {

using nlohmann::json;

namespace {

Rational rational_field(const json& v, const std::string& field) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return parse_rational(v.dump());
  } catch (const std::exception& e) {
    throw ParseError(field, e.what());
  }
  throw ParseError(field, "expected a rational number (\"p/q\", integer or decimal)");
}

bool orientation(const json& obj, const std::string& field) {
  std::string o = obj.value("orientation", std::string("increasing"));
  if (o == "increasing") return true;
  if (o == "decreasing") return false;
  throw ParseError(field + "/orientation", "expected \"increasing\" or \"decreasing\"");
}

std::optional<std::int64_t> opt_int(const json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_number_integer()) throw ParseError(field + "/" + key, "expected an integer");
  return obj[key].get<std::int64_t>();
}

Bound bound(const json& v, const std::string& field) {
  if (v.is_null()) return Bound::unbounded();
  if (v.is_object() && v.contains("abs") && v["abs"].is_number_integer()) return Bound::absolute(v["abs"].get<std::int64_t>());
  if (v.is_object() && v.contains("rel") && v["rel"].is_number_integer()) return Bound::relative(v["rel"].get<std::int64_t>());
  throw ParseError(field, "expected null, {\"abs\": n} or {\"rel\": d}");
}

json bound_json(const Bound& b) {
  switch (b.kind) {
    case Bound::Kind::Unbounded: return nullptr;
    case Bound::Kind::Absolute: return json{{"abs", b.value}};
    case Bound::Kind::Relative: return json{{"rel", b.value}};
  }
  return nullptr;
}

}  // namespace

MarkovIntervalMap interval_map_from_json(const json& doc) {
  check_schema_version(doc);
  if (doc.contains("builtin")) {
    if (!doc["builtin"].is_string()) throw ParseError("/builtin", "expected a string");
    try {
      return builtin_interval_map(doc["builtin"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError("/builtin", e.what());
    }
  }
  const std::string name = doc.value("name", std::string("interval-map"));
  if (!doc.contains("partition") || !doc["partition"].is_object()) throw ParseError("/partition", "missing object");
  const auto& pj = doc["partition"];

  try {
    if (pj.contains("generator")) {
      const auto& gen = pj["generator"];
      std::string type = gen.value("type", std::string());
      Partition part = type == "geometric" ? Partition::geometric(gen.contains("ratio")
                                                                      ? rational_field(gen["ratio"], "/partition/generator/ratio")
                                                                      : Rational(1, 2))
                       : type == "lattice" ? Partition::lattice()
                                           : throw ParseError("/partition/generator/type", "expected geometric or lattice");
      if (!doc.contains("branch_rules") || !doc["branch_rules"].is_array())
        throw ParseError("/branch_rules", "generated partitions need an array of branch rules");
      std::vector<BranchRule> rules;
      for (std::size_t k = 0; k < doc["branch_rules"].size(); ++k) {
        const auto& r = doc["branch_rules"][k];
        const std::string f = "/branch_rules/" + std::to_string(k);
        if (!r.is_object() || !r.contains("image")) throw ParseError(f, "expected an object with an image range");
        BranchRule rule;
        rule.domain.period = opt_int(r, "period", f).value_or(1);
        rule.domain.residue = opt_int(r, "residue", f).value_or(0);
        rule.domain.range = {opt_int(r, "min", f), opt_int(r, "max", f)};
        if (rule.domain.period < 1) throw ParseError(f + "/period", "must be positive");
        rule.image = {bound(r["image"].value("lo", json()), f + "/image/lo"),
                      bound(r["image"].value("hi", json()), f + "/image/hi")};
        rule.increasing = orientation(r, f);
        rules.push_back(rule);
      }
      return MarkovIntervalMap(name, part, {}, std::move(rules));
    }

    std::vector<Cell> cells;
    if (pj.contains("points")) {
      const auto& pts = pj["points"];
      if (!pts.is_array() || pts.size() < 2) throw ParseError("/partition/points", "expected at least two points");
      for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        cells.push_back({static_cast<std::int64_t>(k), rational_field(pts[k], "/partition/points/" + std::to_string(k)),
                         rational_field(pts[k + 1], "/partition/points/" + std::to_string(k + 1))});
    } else if (pj.contains("cells") && pj["cells"].is_array()) {
      for (std::size_t k = 0; k < pj["cells"].size(); ++k) {
        const auto& c = pj["cells"][k];
        const std::string f = "/partition/cells/" + std::to_string(k);
        if (!c.is_object()) throw ParseError(f, "expected an object");
        cells.push_back({opt_int(c, "id", f).value_or(static_cast<std::int64_t>(k)), rational_field(c.value("lo", json()), f + "/lo"),
                         rational_field(c.value("hi", json()), f + "/hi")});
      }
    } else {
      throw ParseError("/partition", "expected points, cells or generator");
    }
    if (!doc.contains("branches") || !doc["branches"].is_array()) throw ParseError("/branches", "missing array");
    std::vector<ExplicitBranch> branches;
    for (std::size_t k = 0; k < doc["branches"].size(); ++k) {
      const auto& b = doc["branches"][k];
      const std::string f = "/branches/" + std::to_string(k);
      if (!b.is_object() || !b.contains("image") || !b["image"].is_array() || b["image"].size() != 2)
        throw ParseError(f, "expected {cell, image: [lo, hi], orientation}");
      branches.push_back({opt_int(b, "cell", f).value_or(static_cast<std::int64_t>(k)),
                          rational_field(b["image"][0], f + "/image/0"), rational_field(b["image"][1], f + "/image/1"),
                          orientation(b, f)});
    }
    return MarkovIntervalMap(name, Partition::explicit_cells(std::move(cells)), std::move(branches));
  } catch (const ParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ParseError("/", e.what());
  }
}

nlohmann::ordered_json interval_map_to_json(const MarkovIntervalMap& f) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = f.name();
  const auto& p = f.partition();
  auto orient = [](bool inc) { return inc ? "increasing" : "decreasing"; };
  if (p.kind() == Partition::Kind::Explicit) {
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : p.cells()) cells.push_back({{"id", c.id}, {"lo", c.lo.str()}, {"hi", c.hi.str()}});
    doc["partition"] = {{"cells", cells}};
    auto branches = nlohmann::ordered_json::array();
    for (const auto& b : f.explicit_branches())
      branches.push_back({{"cell", b.cell}, {"image", {b.image_lo.str(), b.image_hi.str()}}, {"orientation", orient(b.increasing)}});
    doc["branches"] = branches;
  } else {
    nlohmann::ordered_json gen;
    if (p.kind() == Partition::Kind::Geometric) {
      gen["type"] = "geometric";
      gen["ratio"] = p.ratio().str();
    } else {
      gen["type"] = "lattice";
    }
    doc["partition"] = {{"generator", gen}};
    auto rules = nlohmann::ordered_json::array();
    for (const auto& r : f.rules()) {
      nlohmann::ordered_json jr;
      jr["period"] = r.domain.period;
      jr["residue"] = r.domain.residue;
      jr["min"] = r.domain.range.lo ? json(*r.domain.range.lo) : json(nullptr);
      jr["max"] = r.domain.range.hi ? json(*r.domain.range.hi) : json(nullptr);
      jr["image"] = {{"lo", bound_json(r.image.lo)}, {"hi", bound_json(r.image.hi)}};
      jr["orientation"] = orient(r.increasing);
      rules.push_back(jr);
    }
    doc["branch_rules"] = rules;
  }
  return doc;
}

MarkovIntervalMap load_interval_map(const std::string& source) {
  if (source.starts_with("builtin:")) {
    try {
      return builtin_interval_map(source.substr(8));
    } catch (const std::invalid_argument& e) {
      throw ParseError("input", e.what());
    }
  }
  return interval_map_from_json(read_json_file(source));
}

}  // namespace fairmeasure
