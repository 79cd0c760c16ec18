#pragma once

// Markov maps on graphs given by their arc covering relation, reduced to
// interval maps by placing arc n on (2^-n, 2^-n+1).
//
// An arc's image is a path that runs over whole arcs; each run is a lap
// (target arc plus direction). The refined partition has one piece per lap.

#include "fairmeasure/chain_io.hpp"
#include "fairmeasure/interval_model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairmeasure {

struct Lap {
  std::int64_t target = 0;
  bool increasing = true;  // start of the lap's domain goes to the target's start vertex
};

struct Arc {
  std::int64_t id = 0;
  Rational length{1};
  std::optional<std::string> start_vertex;
  std::optional<std::string> end_vertex;
  std::vector<Lap> covers;  // in order along the arc
};

struct TameGraphMapSpec {
  std::string name;
  std::vector<Arc> arcs;  // enumeration order; arc k is placed on (2^-(k+1), 2^-k)
  std::map<std::string, std::string> vertex_images;

  const Arc& arc(std::int64_t id) const;
  /// Throws NotMarkov on an unknown target, an arc without laps, or an image
  /// path that is not contiguous (when vertices are given).
  void validate() const;
  /// Spec restricted to the first n arcs; laps onto dropped arcs are removed.
  TameGraphMapSpec truncated(std::size_t n) const;
};

/// Refined piece = one lap of one arc; ids are arc-major from 0.
struct RefinedState {
  std::int64_t id = 0;
  std::int64_t arc = 0;
  std::size_t lap = 0;
};

std::vector<RefinedState> refined_states(const TameGraphMapSpec& spec);

/// (i, lap) -> every lap of the lap's target arc. `window` keeps the first
/// `window` arcs (0 keeps all).
RuleSetPtr refined_transition_matrix(const TameGraphMapSpec& spec, std::size_t window = 0);

struct Placement {
  std::int64_t arc = 0;
  Rational lo;
  Rational hi;
};

struct CutAndPasteModel {
  std::vector<Placement> placements;
  std::vector<RefinedState> refined;  // refined id == cell id of the interval map
  MarkovIntervalMap map;
  Rational dead_hi;  // (0, dead_hi) carries no arc

  /// The model on [0, 1]; points outside every open cell go to 0.
  Rational evaluate(const Rational& x) const;
};

CutAndPasteModel cut_and_paste(const TameGraphMapSpec& spec);

/// Star dendrite with blades 1..blades; blade i covers blades
/// max(1, i-1) + n, each out to the tip and back.
TameGraphMapSpec dendrite_example(std::size_t blades);
/// One arc covering itself twice, the tent map.
TameGraphMapSpec folded_arc();
/// Two arcs mapped onto each other.
TameGraphMapSpec arc_exchange();
/// Two arcs, each covering both once.
TameGraphMapSpec full_shift_arcs();

/// "dendrite" (sized by `blades`), "folded-arc", "arc-exchange", "full-shift-arcs".
TameGraphMapSpec builtin_graph(const std::string& name, std::size_t blades = 12);

//   {"schema_version": 1, "name": "...",
//    "arcs": [{"id": 1, "length": "1", "start": "O", "end": "E1"}, ...],
//    "transitions": {"1": [{"arc": 1, "orientation": "increasing"}, ...]},
//    "vertex_images": {"O": "O"}}
// or {"builtin": "dendrite", "blades": 12}.
TameGraphMapSpec graph_from_json(const nlohmann::json& doc);
nlohmann::ordered_json graph_to_json(const TameGraphMapSpec& spec);
TameGraphMapSpec load_graph(const std::string& source);

}  // namespace fairmeasure
