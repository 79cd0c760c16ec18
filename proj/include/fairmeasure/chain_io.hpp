#pragma once

// JSON chain specifications.
//
//   {"schema_version": 1, "name": "...",
//    "state_space": {"min": 0, "max": null},
//    "window": 0,
//    "states": {"0": [0, 1], ...},
//    "tail_rules": [{"period": 2, "residue": 0, "min": null, "max": null,
//                    "offsets": [-1, 1],
//                    "ranges": [{"lo": {"rel": -1}, "hi": null}]}]}
//
// A document of the form {"builtin": "bruin-todd"} selects a named family.

#include "fairmeasure/builtins.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace fairmeasure {

inline constexpr int kSchemaVersion = 1;

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input; `field` is a JSON pointer to the offending value.
class ParseError : public SpecError {
 public:
  ParseError(std::string field, const std::string& what);
  std::string field;
};

class SchemaMismatch : public SpecError {
 public:
  using SpecError::SpecError;
};

nlohmann::json read_json_file(const std::filesystem::path& path);
void check_schema_version(const nlohmann::json& doc);

BuiltinChain chain_from_json(const nlohmann::json& doc);
nlohmann::ordered_json chain_to_json(const TransitionRuleSet& m);

/// "builtin:NAME" or a path to a JSON chain spec.
BuiltinChain load_chain(const std::string& source);

}  // namespace fairmeasure
