#pragma once

// JSON interval-map specifications.
//
//   {"schema_version": 1, "name": "tent",
//    "partition": {"points": ["0", "1/2", "1"]},
//    "branches": [{"cell": 0, "image": ["0", "1"], "orientation": "increasing"},
//                 {"cell": 1, "image": ["0", "1"], "orientation": "decreasing"}]}
//
// "partition" may instead be {"cells": [{"id": 0, "lo": "0", "hi": "1/4"}, ...]}
// (gaps allowed), {"generator": {"type": "geometric", "ratio": "1/2"}} or
// {"generator": {"type": "lattice"}}; generated partitions take
// "branch_rules": [{"period": 1, "residue": 0, "min": 2, "max": null,
//                   "image": {"lo": {"rel": -1}, "hi": null},
//                   "orientation": "increasing"}].
// {"builtin": "tent" | "bruin-todd" | "five-three"} selects a named map.

#include "fairmeasure/chain_io.hpp"
#include "fairmeasure/interval_model.hpp"

namespace fairmeasure {

MarkovIntervalMap interval_map_from_json(const nlohmann::json& doc);
nlohmann::ordered_json interval_map_to_json(const MarkovIntervalMap& f);

/// "builtin:NAME" or a path to a JSON interval-map spec.
MarkovIntervalMap load_interval_map(const std::string& source);

}  // namespace fairmeasure
